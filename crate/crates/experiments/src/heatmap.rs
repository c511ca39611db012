//! Cusp excursion over a square of a 2-dimensional flat in SL₃(R)/SO(3).

use flatlab_geometry::{closest_point_on_flat, flat_spanned, FlatFrame, GroupElement, Mat, SpacePoint};
use flatlab_reduction::ReductionOptions;
use flatlab_shadows::{sample_chamber, sample_chamber_opposite, ChamberDensity, SeededStream};
use rayon::prelude::*;

use crate::error::ExperimentError;
use crate::hp::excursion_at;

pub const MAX_RESOLUTION: usize = 2048;
/// Value stored for pixels whose enumeration ran out of budget.
pub const SENTINEL: f64 = -1.0;

/// Orthonormal basis of the Cartan subalgebra of sl₃ used for the raster axes.
pub fn grid_basis() -> [[f64; 3]; 2] {
    let (a, b) = (1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt());
    [[a, -a, 0.0], [b, b, -2.0 * b]]
}

/// Axis-aligned box [x_min, x_max] × [y_min, y_max] in grid-basis coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Row-major grid of excursions; row 0 is the top (largest y).
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub axis: AxisBox,
    pub sentinels: u64,
}

impl Raster {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    /// Largest non-sentinel value, or 0 for an empty raster.
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().filter(|v| *v != SENTINEL).fold(0.0, f64::max)
    }

    /// Grid-basis coordinates of the centre of pixel (i, j).
    pub fn pixel_center(&self, i: usize, j: usize) -> (f64, f64) {
        let sx = (self.axis.x_max - self.axis.x_min) / self.width as f64;
        let sy = (self.axis.y_max - self.axis.y_min) / self.height as f64;
        (pixel_coord(i, self.width, sx), -pixel_coord(j, self.height, sy))
    }
}

/// (i + ½ − res/2)·step, so pixels i and res − 1 − i sit at opposite coordinates.
fn pixel_coord(i: usize, res: usize, step: f64) -> f64 {
    (i as f64 + 0.5 - res as f64 / 2.0) * step
}

/// Cartan vector x·e₁′ + y·e₂′.
pub fn grid_vector(x: f64, y: f64) -> [f64; 3] {
    let [e1, e2] = grid_basis();
    [x * e1[0] + y * e2[0], x * e1[1] + y * e2[1], x * e1[2] + y * e2[2]]
}

pub fn flat_heatmap(
    frame: &FlatFrame<f64>,
    half_width: f64,
    resolution: usize,
    opts: &ReductionOptions,
) -> Result<Raster, ExperimentError> {
    if frame.n() != 3 {
        return Err(ExperimentError::Precondition(format!("heatmaps need n = 3, got {}", frame.n())));
    }
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(ExperimentError::Precondition(format!("resolution {resolution} outside 1..={MAX_RESOLUTION}")));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(ExperimentError::Precondition(format!("half_width = {half_width} must be positive")));
    }
    let step = 2.0 * half_width / resolution as f64;
    let h = frame.matrix();
    let values: Vec<Result<f64, ExperimentError>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            let v = grid_vector(pixel_coord(i, resolution, step), -pixel_coord(j, resolution, step));
            excursion_at(&[h], &v, opts)
        })
        .collect();
    let mut out = Vec::with_capacity(values.len());
    let mut sentinels = 0;
    for v in values {
        match v {
            Ok(x) => out.push(x),
            Err(e) if e.is_budget() => {
                sentinels += 1;
                out.push(SENTINEL);
            }
            Err(e) => return Err(e),
        }
    }
    let axis = AxisBox { x_min: -half_width, x_max: half_width, y_min: -half_width, y_max: half_width };
    Ok(Raster { width: resolution, height: resolution, values: out, axis, sentinels })
}

/// Flat spanned by a chamber drawn near z* and one drawn near z, both from the shadows of [e]
/// with radius rho, re-based at its closest point to [e].
pub fn random_thick_flat(n: usize, rho: f64, stream: &SeededStream) -> Result<FlatFrame<f64>, ExperimentError> {
    let density = ChamberDensity::new(rho, flatlab_shadows::DEFAULT_SMOOTHNESS)?;
    let e = SpacePoint::identity(n);
    let mut rng = stream.rng();
    let c1 = sample_chamber(&e, &density, &mut rng);
    let c2 = sample_chamber_opposite(&e, &density, &c1.translate(&Mat::reversal(n)), &mut rng).chamber.translate(&Mat::reversal(n));
    let flat = flat_spanned(&c1, &c2)?;
    let (u, _) = closest_point_on_flat(&e, &flat);
    Ok(FlatFrame::new(GroupElement::normalized(flat.frame_at(&u))?))
}
