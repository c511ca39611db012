//! Serializers for tables, rasters and the run manifest, and atomic writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use flatlab_experiments::heatmap::Raster;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Largest gray level of the quantized raster.
pub const GRAY_MAX: u32 = 65535;

/// Shortest decimal that parses back to the same double.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

/// Plain P2 graymap with values mapped affinely from [0, max] onto 0..=65535.
pub fn raster_pgm(r: &Raster) -> Vec<u8> {
    let max = r.max_value();
    let mut out = String::new();
    out.push_str("P2\n");
    out.push_str(&format!(
        "# gray = round({GRAY_MAX} * v / max) with max = {}; v < 0 (failed pixel) -> 0; row 0 is y = y_max\n",
        float(max)
    ));
    out.push_str(&format!("{} {}\n{GRAY_MAX}\n", r.width, r.height));
    for j in 0..r.height {
        let line: Vec<String> = (0..r.width).map(|i| quantize(r.get(i, j), max).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn quantize(v: f64, max: f64) -> u32 {
    if !(v > 0.0) || !(max > 0.0) {
        return 0;
    }
    ((v / max * GRAY_MAX as f64).round() as u32).min(GRAY_MAX)
}

/// Raw pixel values with their centers; every row repeats the axis box.
pub fn raster_sidecar(r: &Raster) -> Table {
    let mut t = Table::new(&["row", "col", "x", "y", "excursion", "x_min", "x_max", "y_min", "y_max"]);
    let a = &r.axis;
    let axis = [float(a.x_min), float(a.x_max), float(a.y_min), float(a.y_max)];
    for j in 0..r.height {
        for i in 0..r.width {
            let (x, y) = r.pixel_center(i, j);
            let mut row = vec![j.to_string(), i.to_string(), float(x), float(y), float(r.get(i, j))];
            row.extend(axis.iter().cloned());
            t.push(row);
        }
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the same directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    /// File name and contents, in write order.
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub fitted: BTreeMap<String, Value>,
    pub excluded: BTreeMap<String, u64>,
    pub timings: Vec<(String, f64)>,
}

impl RunOutput {
    pub fn table(&mut self, name: &str, t: &Table) {
        self.artifacts.push((name.to_string(), t.to_csv()));
    }

    pub fn fit(&mut self, key: &str, v: impl Into<Value>) {
        self.fitted.insert(key.to_string(), v.into());
    }
}

pub struct ManifestInfo<'a> {
    pub experiment: &'a str,
    pub config_text: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub budget: u64,
    pub wall_time: f64,
}

pub fn manifest(info: &ManifestInfo, out: &RunOutput) -> Value {
    let artifacts: Vec<Value> = out
        .artifacts
        .iter()
        .map(|(name, bytes)| json!({ "path": name, "sha256": sha256_hex(bytes), "bytes": bytes.len() }))
        .collect();
    let timings: Vec<Value> = out.timings.iter().map(|(k, t)| json!({ "phase": k, "seconds": t })).collect();
    json!({
        "tool": "flatlab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": info.experiment,
        "config": info.config_text,
        "config_sha256": sha256_hex(info.config_text.as_bytes()),
        "seed": info.seed,
        "threads": info.threads,
        "budget": info.budget,
        "wall_time_seconds": info.wall_time,
        "timings": timings,
        "excluded": out.excluded,
        "fitted": out.fitted,
        "artifacts": artifacts,
    })
}

/// Creates the directory, writes every artifact, then the manifest.
pub fn write_run(dir: &Path, info: &ManifestInfo, out: &RunOutput) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, bytes) in &out.artifacts {
        write_atomic(&dir.join(name), bytes)?;
    }
    let mut text = serde_json::to_string_pretty(&manifest(info, out)).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join("manifest.json"), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatlab_experiments::heatmap::AxisBox;

    fn raster(values: Vec<f64>, width: usize) -> Raster {
        let height = values.len() / width;
        Raster { width, height, values, axis: AxisBox { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 }, sentinels: 0 }
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, f64::MIN_POSITIVE, 123456.789] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(float(0.5), "0.5");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(Table::new(&["s", "p_hat"]).to_csv(), b"s,p_hat\n");
    }

    #[test]
    fn single_zero_pixel() {
        let text = String::from_utf8(raster_pgm(&raster(vec![0.0], 1))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert!(lines[1].starts_with('#'));
        assert_eq!(&lines[2..], ["1 1", "65535", "0"]);
    }

    #[test]
    fn maximum_maps_to_top_gray() {
        let text = String::from_utf8(raster_pgm(&raster(vec![0.0, 1.5, 3.0, -1.0], 2))).unwrap();
        let body: Vec<&str> = text.lines().skip(4).collect();
        assert_eq!(body, ["0 32768", "65535 0"]);
    }

    #[test]
    fn sidecar_round_trips() {
        let r = raster(vec![0.1, 1.0 / 3.0, 2.5e-17, 7.0], 2);
        let csv = raster_sidecar(&r).to_csv();
        let mut rd = csv::Reader::from_reader(&csv[..]);
        let back: Vec<f64> = rd.records().map(|rec| rec.unwrap()[4].parse().unwrap()).collect();
        let mut expect = vec![];
        for j in 0..2 {
            for i in 0..2 {
                expect.push(r.get(i, j));
            }
        }
        assert_eq!(back, expect);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
