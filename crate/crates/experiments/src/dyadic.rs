//! Subdivision of the cube [−L, L]ⁿ, L = 2^i − 1, into dyadic cubes that shrink toward the boundary.
//!
//! Shell k (0 ≤ k < i) is the region between the cubes of half-width 2^i − 2^k and 2^i − 2^{k+1};
//! it is tiled by cubes of side 2^k. The last shell is the central cube of half-width 2^{i−1}.

use crate::error::ExperimentError;

pub const MAX_LEVEL: u32 = 12;
/// Largest cube volume checked by explicit rasterization.
pub const RASTER_LIMIT: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    /// Lower corner.
    pub corner: [i64; 3],
    pub side: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicComplex {
    pub n: usize,
    pub level: u32,
}

impl DyadicComplex {
    pub fn new(level: u32, n: usize) -> Result<Self, ExperimentError> {
        if level == 0 || level > MAX_LEVEL {
            return Err(ExperimentError::Precondition(format!("dyadic level {level} outside 1..={MAX_LEVEL}")));
        }
        if !(2..=3).contains(&n) {
            return Err(ExperimentError::Precondition(format!("dyadic dimension {n} outside 2..=3")));
        }
        Ok(DyadicComplex { n, level })
    }

    /// Half-width L = 2^i − 1.
    pub fn half_width(&self) -> i64 {
        (1 << self.level) - 1
    }

    /// Grid points per axis in shell k.
    fn shell_size(&self, k: u32) -> i64 {
        (1 << (self.level - k + 1)) - 2
    }

    /// Number of cells, from the shell sizes m: Σ_k mⁿ − (m − 2)ⁿ.
    pub fn cell_count(&self) -> u128 {
        (0..self.level)
            .map(|k| {
                let m = self.shell_size(k) as u128;
                m.pow(self.n as u32) - (m - 2).pow(self.n as u32)
            })
            .sum()
    }

    /// Cells shell by shell, outermost first; generated on demand.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.level).flat_map(move |k| ShellIter::new(self, k))
    }

    /// Checks every invariant in exact integer arithmetic.
    pub fn verify(&self) -> Result<Verification, String> {
        let n = self.n;
        let l = self.half_width();
        let total = (2 * l) as u128;
        let total = total.pow(n as u32);
        let mut volume: u128 = 0;
        let mut count: u128 = 0;
        let mut prev: Option<(u32, Cell)> = None;
        let mut raster = (total <= RASTER_LIMIT).then(|| vec![false; total as usize]);
        for k in 0..self.level {
            let outer = (1i64 << self.level) - (1 << k);
            let inner = outer - (1 << k);
            for c in ShellIter::new(self, k) {
                let lo = &c.corner[..n];
                if c.side != 1 << k {
                    return Err(format!("cell {c:?} in shell {k} has the wrong side"));
                }
                // In the closed outer cube and not inside the open inner cube.
                if lo.iter().any(|&x| x < -outer || x + c.side > outer) {
                    return Err(format!("cell {c:?} leaves shell {k}"));
                }
                if lo.iter().all(|&x| x >= -inner && x + c.side <= inner) {
                    return Err(format!("cell {c:?} lies inside shell {k}'s hole"));
                }
                // dist(x, ∂) over the cell is smallest on its outer face: l − max |coordinate|.
                let reach = lo.iter().map(|&x| (-x).max(x + c.side)).max().unwrap();
                let min_dist = l - reach;
                if c.side < 1 || c.side > 2 * (min_dist + 1) {
                    return Err(format!("cell {c:?} breaks 1 ≤ s ≤ 2(d + 1) with d = {min_dist}"));
                }
                if let Some((pk, p)) = prev {
                    if pk == k && p.corner[..n] >= c.corner[..n] {
                        return Err(format!("cells {p:?} and {c:?} repeat or are out of order"));
                    }
                }
                if let Some(r) = raster.as_mut() {
                    mark(r, &c, n, l)?;
                }
                volume += (c.side as u128).pow(n as u32);
                count += 1;
                prev = Some((k, c));
            }
        }
        if volume != total {
            return Err(format!("cell volumes sum to {volume}, not {total}"));
        }
        if count != self.cell_count() {
            return Err(format!("{count} cells, closed form gives {}", self.cell_count()));
        }
        Ok(Verification { cells: count, volume, rasterized: raster.is_some() })
    }
}

fn mark(r: &mut [bool], c: &Cell, n: usize, l: i64) -> Result<(), String> {
    let w = 2 * l;
    let idx = |p: &[i64]| p.iter().rev().fold(0i64, |acc, &x| acc * w + (x + l)) as usize;
    let mut off = [0i64; 3];
    loop {
        let p: Vec<i64> = (0..n).map(|d| c.corner[d] + off[d]).collect();
        let k = idx(&p);
        if r[k] {
            return Err(format!("unit cube at {p:?} covered twice"));
        }
        r[k] = true;
        let mut d = 0;
        while d < n {
            off[d] += 1;
            if off[d] < c.side {
                break;
            }
            off[d] = 0;
            d += 1;
        }
        if d == n {
            return Ok(());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verification {
    pub cells: u128,
    pub volume: u128,
    pub rasterized: bool,
}

/// Band cells of one shell in lexicographic order of their corners.
struct ShellIter {
    n: usize,
    m: i64,
    origin: i64,
    side: i64,
    idx: [i64; 3],
    done: bool,
}

impl ShellIter {
    fn new(c: &DyadicComplex, k: u32) -> Self {
        let side = 1i64 << k;
        ShellIter { n: c.n, m: c.shell_size(k), origin: -((1i64 << c.level) - side), side, idx: [0; 3], done: false }
    }

    fn band(&self, x: i64) -> bool {
        x == 0 || x == self.m - 1
    }
}

impl Iterator for ShellIter {
    type Item = Cell;

    fn next(&mut self) -> Option<Cell> {
        if self.done {
            return None;
        }
        let n = self.n;
        let mut corner = [0i64; 3];
        for d in 0..n {
            corner[d] = self.origin + self.idx[d] * self.side;
        }
        let out = Cell { corner, side: self.side };
        // Advance the last index, jumping over the interior when no earlier index is in the band.
        let last = n - 1;
        let prefix_band = self.idx[..last].iter().any(|&x| self.band(x));
        let next_last = if prefix_band || self.idx[last] == self.m - 1 { self.idx[last] + 1 } else { self.m - 1 };
        if next_last < self.m {
            self.idx[last] = next_last;
        } else {
            self.idx[last] = 0;
            let mut d = last;
            loop {
                if d == 0 {
                    self.done = true;
                    break;
                }
                d -= 1;
                self.idx[d] += 1;
                if self.idx[d] < self.m {
                    break;
                }
                self.idx[d] = 0;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_is_four_unit_squares() {
        let c = DyadicComplex::new(1, 2).unwrap();
        let cells: Vec<Cell> = c.cells().collect();
        let corners: Vec<[i64; 2]> = cells.iter().map(|c| [c.corner[0], c.corner[1]]).collect();
        assert_eq!(corners, vec![[-1, -1], [-1, 0], [0, -1], [0, 0]]);
        assert!(cells.iter().all(|c| c.side == 1));
    }

    #[test]
    fn small_levels_verify_with_rasterization() {
        for n in 2..=3 {
            for i in 1..=6 {
                let v = DyadicComplex::new(i, n).unwrap().verify().unwrap();
                assert!(v.rasterized);
            }
        }
    }

    #[test]
    fn level_bounds_are_enforced() {
        assert!(DyadicComplex::new(0, 2).is_err());
        assert!(DyadicComplex::new(13, 2).is_err());
        assert!(DyadicComplex::new(3, 4).is_err());
    }
}
