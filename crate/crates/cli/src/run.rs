//! One function per experiment: validate, compute, and collect tables and fitted constants.

use std::time::Instant;

use flatlab_experiments::dehn::{area_exponent, dehn_fill_experiment, DehnParams, FillFlat};
use flatlab_experiments::dyadic::DyadicComplex;
use flatlab_experiments::heatmap::{flat_heatmap, random_thick_flat, SENTINEL};
use flatlab_experiments::lmr::{lmr_path_on, random_thick_pair, LmrParams, PathRecord};
use flatlab_experiments::moment::{calibrate_b_prime, deep_basepoint, moment_experiment};
use flatlab_experiments::sphere::{cusp_sphere_experiment, SphereParams};
use flatlab_experiments::{least_squares, median, tail_experiment, ExperimentError};
use flatlab_geometry::FlatFrame;
use flatlab_reduction::{ReductionOptions, ThickParams};
use flatlab_shadows::{ChamberDensity, SeededStream, DEFAULT_SMOOTHNESS};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{Config, FlatKind, FrameKind};
use crate::output::{float, raster_pgm, raster_sidecar, RunOutput, Table};
use crate::{CliError, Experiment};

/// Moment calibration used when the sphere radius factor is not configured.
const CALIBRATION_DEPTHS: [f64; 3] = [0.0, 2.0, 4.0];
const CALIBRATION_A_NORMS: [f64; 9] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];

pub struct Context<'a> {
    pub config: &'a Config,
    pub seed: u64,
    pub opts: ReductionOptions,
}

impl Context<'_> {
    fn n(&self, default: usize) -> Result<usize, CliError> {
        let n = self.config.n.unwrap_or(default);
        if !(2..=4).contains(&n) {
            return Err(CliError::Precondition(format!("n = {n} must be in 2..=4")));
        }
        Ok(n)
    }

    fn n3(&self, what: &str) -> Result<(), CliError> {
        match self.config.n {
            Some(n) if n != 3 => Err(CliError::Precondition(format!("{what} needs n = 3, config has n = {n}"))),
            _ => Ok(()),
        }
    }

    fn thick(&self, n: usize) -> Result<ThickParams, CliError> {
        match self.config.r0 {
            Some(r0) => Ok(ThickParams::new(r0).map_err(ExperimentError::from)?),
            None => Ok(ThickParams::default_for(n)),
        }
    }

    fn stream(&self, e: Experiment) -> SeededStream {
        SeededStream::new(self.seed, e as u64)
    }

    fn check_excluded(&self, what: &str, excluded: u64, total: u64) -> Result<(), CliError> {
        if total > 0 && excluded as f64 > self.config.max_excluded_fraction * total as f64 {
            return Err(CliError::Budget(format!(
                "{what}: {excluded} of {total} samples exceeded the enumeration budget {}",
                self.opts.budget
            )));
        }
        Ok(())
    }
}

fn missing(e: Experiment) -> CliError {
    CliError::Precondition(format!("config has no [{}] section", e.name()))
}

fn opt(x: Option<f64>) -> Value {
    x.map(Value::from).unwrap_or(Value::Null)
}

fn timed<T>(out: &mut RunOutput, phase: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let t0 = Instant::now();
    let r = f()?;
    out.timings.push((phase.to_string(), t0.elapsed().as_secs_f64()));
    Ok(r)
}

pub fn run(e: Experiment, ctx: &Context) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    match e {
        Experiment::Tail => tail(ctx, &mut out)?,
        Experiment::Moment => moment(ctx, &mut out)?,
        Experiment::Heatmap => heatmap(ctx, &mut out)?,
        Experiment::Sphere => sphere(ctx, &mut out)?,
        Experiment::Lmr => lmr(ctx, &mut out)?,
        Experiment::Subdiv => subdiv(ctx, &mut out)?,
        Experiment::Dehn => dehn(ctx, &mut out)?,
    }
    Ok(out)
}

fn tail(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.tail.as_ref().ok_or_else(|| missing(Experiment::Tail))?;
    let n = ctx.n(2)?;
    let h = deep_basepoint(n, c.depth);
    let t = timed(out, "sampling", || Ok(tail_experiment(&h, c.a_norm, &c.s_grid, c.samples, &ctx.stream(Experiment::Tail), &ctx.opts)?))?;
    ctx.check_excluded("tail", t.excluded, c.samples as u64)?;
    let mut table = Table::new(&["s", "count_exceed", "total", "p_hat", "stderr"]);
    for r in &t.rows {
        table.push(vec![float(r.s), r.count_exceed.to_string(), r.total.to_string(), float(r.p_hat), float(r.stderr)]);
    }
    out.table("tail.csv", &table);
    out.excluded.insert("tail_samples".into(), t.excluded);
    out.fit("A_hat", opt(t.a_hat));
    out.fit("r2", opt(t.r2));
    out.fit("fit_rows", t.fit_rows);
    out.fit("r0", ctx.thick(n)?.r0);
    Ok(())
}

fn moment(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.moment.as_ref().ok_or_else(|| missing(Experiment::Moment))?;
    let n = ctx.n(2)?;
    let stream = ctx.stream(Experiment::Moment);
    let t = timed(out, "moments", || {
        Ok(moment_experiment(&deep_basepoint(n, c.depth), c.b, &c.a_norms, c.samples, &stream.child(0), &ctx.opts)?)
    })?;
    let excluded: u64 = t.rows.iter().map(|r| r.excluded).sum();
    ctx.check_excluded("moment", excluded, (c.samples * c.a_norms.len()) as u64)?;
    let mut table = Table::new(&["a_norm", "mean", "stderr", "total", "excluded"]);
    for r in &t.rows {
        table.push(vec![float(r.a_norm), float(r.mean), float(r.stderr), r.total.to_string(), r.excluded.to_string()]);
    }
    out.table("moment.csv", &table);
    out.excluded.insert("moment_samples".into(), excluded);
    out.fit("b", c.b);
    out.fit("plateau", opt(t.plateau));
    if !c.calibration_depths.is_empty() {
        let cal = timed(out, "calibration", || {
            Ok(calibrate_b_prime(n, c.b, &c.calibration_depths, &c.a_norms, c.samples, &stream.child(1), &ctx.opts)?)
        })?;
        let mut table = Table::new(&["depth", "threshold"]);
        for &(r, t) in &cal.thresholds {
            table.push(vec![float(r), float(t)]);
        }
        out.table("calibration.csv", &table);
        out.fit("b_prime", opt(cal.b_prime));
        out.fit("b_prime_r2", opt(cal.fit.map(|f| f.r2)));
    }
    Ok(())
}

fn heatmap(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.heatmap.as_ref().ok_or_else(|| missing(Experiment::Heatmap))?;
    ctx.n3("heatmap")?;
    let frame = match c.frame {
        FrameKind::Identity => FlatFrame::model(3),
        FrameKind::Random => random_thick_flat(3, c.rho, &ctx.stream(Experiment::Heatmap))?,
    };
    let r = timed(out, "raster", || Ok(flat_heatmap(&frame, c.half_width, c.resolution, &ctx.opts)?))?;
    ctx.check_excluded("heatmap", r.sentinels, r.values.len() as u64)?;
    let r0 = ctx.thick(3)?.r0;
    let thick = r.values.iter().filter(|&&v| v != SENTINEL && v <= r0 + 1.0).count();
    out.artifacts.push(("heatmap.pgm".into(), raster_pgm(&r)));
    out.table("heatmap.csv", &raster_sidecar(&r));
    out.excluded.insert("heatmap_pixels".into(), r.sentinels);
    out.fit("r0", r0);
    out.fit("max_excursion", r.max_value());
    out.fit("thick_fraction", thick as f64 / r.values.len() as f64);
    Ok(())
}

fn sphere(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.sphere.as_ref().ok_or_else(|| missing(Experiment::Sphere))?;
    ctx.n3("sphere")?;
    let stream = ctx.stream(Experiment::Sphere);
    let radius_factor = match c.c {
        Some(v) => v,
        None => {
            let cal = timed(out, "calibration", || {
                Ok(calibrate_b_prime(3, c.b, &CALIBRATION_DEPTHS, &CALIBRATION_A_NORMS, c.calibration_samples, &stream.child(0), &ctx.opts)?)
            })?;
            let b_prime = cal
                .b_prime
                .filter(|b| *b > 0.0)
                .ok_or_else(|| CliError::Precondition("calibration gave no positive b′; set [sphere] c".into()))?;
            out.fit("b_prime", b_prime);
            2.0 * b_prime
        }
    };
    let results = timed(out, "spheres", || {
        c.depths
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let p = SphereParams { depth_l: l, samples_on_sphere: c.samples_on_sphere, c: radius_factor, b: c.b };
                Ok(cusp_sphere_experiment(&p, &stream.child(1).child(i as u64), &ctx.opts)?)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut table = Table::new(&["depth_l", "max_excursion", "moment_integral", "center_excursion", "chosen_draw", "points"]);
    let mut samples = Table::new(&["depth_l", "index", "excursion"]);
    for (&l, r) in c.depths.iter().zip(&results) {
        table.push(vec![
            float(l),
            float(r.max_excursion),
            float(r.moment_integral),
            float(r.sphere_center_excursion),
            r.chosen_draw.to_string(),
            r.excursions.len().to_string(),
        ]);
        for (k, e) in r.excursions.iter().enumerate() {
            samples.push(vec![float(l), k.to_string(), float(*e)]);
        }
    }
    out.table("sphere.csv", &table);
    out.table("sphere_samples.csv", &samples);
    let x: Vec<f64> = c.depths.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = results.iter().map(|r| r.max_excursion).collect();
    let fit = least_squares(&x, &y);
    let moments: Vec<f64> = results.iter().map(|r| r.moment_integral).collect();
    out.fit("c", radius_factor);
    out.fit("eta_hat", opt(fit.map(|f| f.slope)));
    out.fit("eta_r2", opt(fit.map(|f| f.r2)));
    let (lo, hi) = moments.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    out.fit("moment_spread", hi / lo);
    Ok(())
}

fn lmr(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.lmr.as_ref().ok_or_else(|| missing(Experiment::Lmr))?;
    ctx.n3("lmr")?;
    if c.runs == 0 || c.distances.is_empty() {
        return Err(CliError::Precondition("lmr needs runs ≥ 1 and at least one distance".into()));
    }
    let params = LmrParams {
        density: ChamberDensity::new(c.rho, DEFAULT_SMOOTHNESS).map_err(ExperimentError::from)?,
        thick: ctx.thick(3)?,
        max_resamples: c.max_resamples,
    };
    let stream = ctx.stream(Experiment::Lmr);
    let records: Vec<Vec<PathRecord>> = timed(out, "paths", || {
        c.distances
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let s = stream.child(i as u64);
                (0..c.runs as u64)
                    .into_par_iter()
                    .map(|k| {
                        let sk = s.child(k);
                        let pair = random_thick_pair(d, &params.thick, &sk.child(0), &ctx.opts)?;
                        Ok(lmr_path_on(&pair, &params, &sk.child(1), &ctx.opts)?)
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })
            .collect()
    })?;
    let mut runs = Table::new(&[
        "distance", "run", "ratio", "thick_length", "ambient_length", "max_excursion", "arc_radius", "resamples",
        "perturbed", "chamber_x", "chamber_y", "offset_x", "offset_y",
    ]);
    let mut summary = Table::new(&["distance", "runs", "median_ratio", "max_ratio", "median_max_excursion"]);
    let mut paths = Table::new(&["distance", "run", "index", "phase", "omega_1", "omega_2", "omega_3", "excursion", "moved"]);
    let label = |c: [usize; 3]| format!("{}{}{}", c[0] + 1, c[1] + 1, c[2] + 1);
    for (&d, recs) in c.distances.iter().zip(&records) {
        for (k, p) in recs.iter().enumerate() {
            runs.push(vec![
                float(d),
                k.to_string(),
                float(p.ratio),
                float(p.thick_length),
                float(p.ambient_length),
                float(p.max_excursion),
                float(p.arc_radius),
                p.resamples.to_string(),
                p.perturbed.to_string(),
                label(p.chambers.0),
                label(p.chambers.1),
                float(p.offsets.0),
                float(p.offsets.1),
            ]);
            if c.write_paths {
                for i in 0..p.omega.len() {
                    let o = p.omega[i];
                    paths.push(vec![
                        float(d),
                        k.to_string(),
                        i.to_string(),
                        p.phases[i].label().to_string(),
                        float(o[0]),
                        float(o[1]),
                        float(o[2]),
                        float(p.excursions[i]),
                        float(p.moved[i]),
                    ]);
                }
            }
        }
        let ratios: Vec<f64> = recs.iter().map(|p| p.ratio).collect();
        let maxe: Vec<f64> = recs.iter().map(|p| p.max_excursion).collect();
        let med = median(&ratios);
        summary.push(vec![
            float(d),
            recs.len().to_string(),
            float(med),
            float(ratios.iter().cloned().fold(0.0, f64::max)),
            float(median(&maxe)),
        ]);
        out.fit(&format!("median_ratio_d{d}"), med);
    }
    out.table("lmr.csv", &runs);
    out.table("lmr_summary.csv", &summary);
    if c.write_paths {
        out.table("lmr_paths.csv", &paths);
    }
    out.fit("r0", params.thick.r0);
    Ok(())
}

fn subdiv(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.subdiv.as_ref().ok_or_else(|| missing(Experiment::Subdiv))?;
    let n = ctx.n(2)?;
    DyadicComplex::new(c.level, n)?;
    let mut table = Table::new(&["level", "n", "half_width", "cells", "volume", "expected_volume", "verified"]);
    timed(out, "verify", || {
        for level in 1..=c.level {
            let complex = DyadicComplex::new(level, n)?;
            let v = complex.verify().map_err(|e| CliError::Precondition(format!("level {level}: {e}")))?;
            let expected = (2 * complex.half_width() as u128).pow(n as u32);
            table.push(vec![
                level.to_string(),
                n.to_string(),
                complex.half_width().to_string(),
                v.cells.to_string(),
                v.volume.to_string(),
                expected.to_string(),
                (v.volume == expected && v.cells == complex.cell_count()).to_string(),
            ]);
        }
        Ok(())
    })?;
    out.table("subdiv.csv", &table);
    let complex = DyadicComplex::new(c.level, n)?;
    if complex.cell_count() <= c.list_limit as u128 {
        let mut cells = Table::new(&["x", "y", "z", "side"]);
        for cell in complex.cells() {
            let z = if n == 3 { cell.corner[2].to_string() } else { String::new() };
            cells.push(vec![cell.corner[0].to_string(), cell.corner[1].to_string(), z, cell.side.to_string()]);
        }
        out.table("cells.csv", &cells);
    }
    out.fit("cells", complex.cell_count() as u64);
    Ok(())
}

fn dehn(ctx: &Context, out: &mut RunOutput) -> Result<(), CliError> {
    let c = ctx.config.dehn.as_ref().ok_or_else(|| missing(Experiment::Dehn))?;
    ctx.n3("dehn")?;
    let params = DehnParams {
        flat: match c.flat {
            FlatKind::Closed => FillFlat::Closed,
            FlatKind::Random => FillFlat::Random { rho: c.rho },
        },
        thick: ctx.thick(3)?,
        max_attempts: c.max_attempts,
    };
    let stream = ctx.stream(Experiment::Dehn);
    let results = timed(out, "fill", || {
        c.loop_scales
            .iter()
            .map(|&s| Ok(dehn_fill_experiment(s, &params, &stream.child(s as u64), &ctx.opts)?))
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut table = Table::new(&[
        "loop_scale", "boundary_length", "filled_area", "flat_area", "lipschitz_bound", "max_excursion",
        "boundary_max_excursion", "attempts", "angle", "offset_x", "offset_y", "cells", "vertices",
    ]);
    for r in &results {
        table.push(vec![
            r.loop_scale.to_string(),
            float(r.boundary_length),
            float(r.filled_area),
            float(r.flat_area),
            float(r.lipschitz_bound),
            float(r.max_excursion),
            float(r.boundary_max_excursion),
            r.attempts.to_string(),
            float(r.angle),
            float(r.offset.0),
            float(r.offset.1),
            r.cells.to_string(),
            r.vertices.to_string(),
        ]);
    }
    out.table("dehn.csv", &table);
    let fit = if results.len() >= 2 { area_exponent(&results) } else { None };
    out.fit("area_exponent", opt(fit.map(|f| f.slope)));
    out.fit("area_exponent_r2", opt(fit.map(|f| f.r2)));
    out.fit("r0", params.thick.r0);
    Ok(())
}
