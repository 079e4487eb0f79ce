//! Optimal-order scans and error-decay fits.
//!
//! `G(n) = |X_{2n}(x) - X_{2n+2}(x)|_2` compares consecutive symmetric
//! interpolating fields. Where averaging works it first decreases with `n`
//! and then grows again; the minimizing `n` maps out the region of validity.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{capability, domain};
use crate::interpolation::InterpolationScheme;
use crate::maps::{MapSystem, Orbit};
use crate::{Error, Result};

/// Default largest tested half-order.
pub const DEFAULT_N_MAX: usize = 10;
/// Orbits leaving the box `|x_i| <= radius` count as escaped.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;
/// Errors at or below this are treated as machine floor by [`decay_fit`].
pub const DECAY_FLOOR: f64 = 1e-14;

/// `G(n)` for `n = 1..` as far as the orbit allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct GProfile {
    /// `(n, G(n))` pairs in increasing `n`.
    pub values: Vec<(usize, f64)>,
    /// Signed index of the last iterate inside the escape box, if the orbit
    /// fell short of `±(n_max + 1)`.
    pub escaped_at: Option<i64>,
}

impl GProfile {
    /// Minimizing `n` and its `G`; ties go to the smaller `n`.
    pub fn optimum(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for &(n, g) in &self.values {
            let key = g;
            if best.is_none_or(|(_, _, b)| key < b) {
                best = Some((n, g, key));
            }
        }
        best.map(|(n, g, _)| (n, g))
    }
}

/// Differences of consecutive symmetric weight tables, padded to a common
/// stencil: row `n - 1` holds `p^{(2n)} - p^{(2n+2)}` on `-(n+1)..=n+1`.
fn difference_weights(n_max: usize) -> Result<Vec<Vec<f64>>> {
    let schemes: Vec<InterpolationScheme> = (1..=n_max + 1)
        .map(InterpolationScheme::symmetric)
        .collect::<Result<_>>()?;
    Ok((1..=n_max)
        .map(|n| {
            let (lo, hi) = (&schemes[n - 1], &schemes[n]);
            let mut row = vec![0.0; 2 * n + 3];
            for (k, w) in lo.stencil().zip(lo.weights_f64()) {
                row[(k + n as i64 + 1) as usize] += w;
            }
            for (k, w) in hi.stencil().zip(hi.weights_f64()) {
                row[(k + n as i64 + 1) as usize] -= w;
            }
            row
        })
        .collect())
}

/// Profile of `G(n)` at `x` for `n = 1..=n_max`, reusing one orbit
/// `F^{-(n_max+1)} .. F^{n_max+1}`. Stops at the first `n` whose stencil is
/// not covered.
pub fn g_profile<M: MapSystem + ?Sized>(map: &M, x: &[f64], n_max: usize) -> Result<GProfile> {
    g_profile_with(map, x, n_max, DEFAULT_ESCAPE_RADIUS)
}

pub fn g_profile_with<M: MapSystem + ?Sized>(
    map: &M,
    x: &[f64],
    n_max: usize,
    escape_radius: f64,
) -> Result<GProfile> {
    let table = difference_weights(n_max)?;
    g_profile_table(map, x, n_max, escape_radius, &table)
}

fn g_profile_table<M: MapSystem + ?Sized>(
    map: &M,
    x: &[f64],
    n_max: usize,
    escape_radius: f64,
    table: &[Vec<f64>],
) -> Result<GProfile> {
    if n_max == 0 {
        return Err(domain("n_max must be at least 1"));
    }
    if !map.has_inverse() {
        return Err(capability("symmetric schemes need an inverse map"));
    }
    let reach = n_max + 1;
    let orbit = Orbit::compute(map, x, reach, reach, escape_radius)?;
    let escaped_at = if orbit.is_complete() {
        None
    } else {
        Some(orbit.escape_index(reach, reach).unwrap_or(0))
    };
    let mut values = Vec::with_capacity(n_max);
    let x0 = orbit.get(0).expect("orbit holds its base point").to_vec();
    let mut diff = vec![0.0; x0.len()];
    for (n, row) in (1..=n_max).zip(table) {
        let half = n as i64 + 1;
        if !orbit.covers(-half, half) {
            break;
        }
        diff.iter_mut().for_each(|d| *d = 0.0);
        for (k, &w) in (-half..=half).zip(row) {
            let p = orbit.get(k).expect("covered");
            for i in 0..diff.len() {
                diff[i] += w * (p[i] - x0[i]);
            }
        }
        values.push((n, libm::sqrt(diff.iter().map(|d| d * d).sum())));
    }
    Ok(GProfile { values, escaped_at })
}

/// Rectangular grid of sample points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Points per axis.
    pub resolution: usize,
    pub n_max: usize,
    pub escape_radius: f64,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), resolution: usize, n_max: usize) -> Result<Self> {
        let spec = GridSpec {
            x_range,
            y_range,
            resolution,
            n_max,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 {
            return Err(domain("grid resolution must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(domain("n_max must be at least 1"));
        }
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(domain("grid ranges must be finite with min <= max"));
        }
        if self.escape_radius.is_nan() || self.escape_radius <= 0.0 {
            return Err(domain("escape radius must be positive"));
        }
        Ok(())
    }

    fn axis(&self, (lo, hi): (f64, f64), i: usize) -> f64 {
        if self.resolution == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (self.resolution - 1) as f64
        }
    }

    /// Cell centers in row-major order: `y` rows from the bottom, `x` within
    /// a row.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let r = self.resolution;
        (0..r * r)
            .map(|idx| [self.axis(self.x_range, idx % r), self.axis(self.y_range, idx / r)])
            .collect()
    }
}

/// Outcome of one grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanCell {
    pub x: f64,
    pub y: f64,
    /// `None` for escaped cells.
    pub opt_n: Option<usize>,
    pub min_g: Option<f64>,
    pub escaped: bool,
    /// Last iterate inside the escape box when the orbit fell short of
    /// `±(n_max + 1)`, even if some of the profile was computed.
    pub escape_index: Option<i64>,
}

/// Per-cell evaluator sharing one difference-weight table.
#[derive(Clone, Debug)]
pub struct CellScanner {
    spec: GridSpec,
    table: Vec<Vec<f64>>,
}

impl CellScanner {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(CellScanner {
            table: difference_weights(spec.n_max)?,
            spec,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// A cell counts as escaped only when not even `G(1)` is available.
    /// Otherwise the optimum is taken over the values computed before the
    /// orbit left the box; the missing ones are treated as unbounded.
    pub fn cell<M: MapSystem + ?Sized>(&self, map: &M, p: [f64; 2]) -> Result<ScanCell> {
        let profile = g_profile_table(map, &p, self.spec.n_max, self.spec.escape_radius, &self.table)?;
        let (opt_n, min_g) = match profile.optimum() {
            Some((n, g)) => (Some(n), Some(g)),
            None => (None, None),
        };
        Ok(ScanCell {
            x: p[0],
            y: p[1],
            opt_n,
            min_g,
            escaped: opt_n.is_none(),
            escape_index: profile.escaped_at,
        })
    }
}

/// Scan result in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGrid {
    pub spec: GridSpec,
    pub cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> &ScanCell {
        &self.cells[iy * self.spec.resolution + ix]
    }

    /// Index of the grid point closest to `p`.
    pub fn nearest(&self, p: [f64; 2]) -> (usize, usize) {
        let mut best = (0, 0, f64::INFINITY);
        for (idx, c) in self.cells.iter().enumerate() {
            let d = (c.x - p[0]) * (c.x - p[0]) + (c.y - p[1]) * (c.y - p[1]);
            if d < best.2 {
                best = (idx % self.spec.resolution, idx / self.spec.resolution, d);
            }
        }
        (best.0, best.1)
    }

    /// Cells 4-connected to `start` that satisfy `keep`, as flat indices.
    pub fn region(&self, start: (usize, usize), keep: impl Fn(&ScanCell) -> bool) -> Vec<usize> {
        let r = self.spec.resolution;
        let mut seen = vec![false; self.cells.len()];
        let mut out = Vec::new();
        let first = start.1 * r + start.0;
        if !keep(&self.cells[first]) {
            return out;
        }
        let mut stack = vec![first];
        seen[first] = true;
        while let Some(idx) = stack.pop() {
            out.push(idx);
            let (ix, iy) = (idx % r, idx / r);
            let mut nbrs = Vec::with_capacity(4);
            if ix > 0 {
                nbrs.push(idx - 1);
            }
            if ix + 1 < r {
                nbrs.push(idx + 1);
            }
            if iy > 0 {
                nbrs.push(idx - r);
            }
            if iy + 1 < r {
                nbrs.push(idx + r);
            }
            for j in nbrs {
                if !seen[j] && keep(&self.cells[j]) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn escaped_count(&self) -> usize {
        self.cells.iter().filter(|c| c.escaped).count()
    }
}

/// Sequential scan in row-major order.
pub fn scan<M: MapSystem + ?Sized>(map: &M, spec: GridSpec) -> Result<ScanGrid> {
    let scanner = CellScanner::new(spec)?;
    let cells = spec
        .points()
        .into_iter()
        .map(|p| scanner.cell(map, p))
        .collect::<Result<_>>()?;
    Ok(ScanGrid { spec, cells })
}

/// Least-squares line through `(m, ln error)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Number of points used.
    pub points: usize,
}

/// Fits `ln error ≈ intercept + slope·m` over the points above
/// [`DECAY_FLOOR`]. Each entry is `(m, error, integrator_limited)`;
/// integrator-limited points are skipped.
pub fn decay_fit(profile: &[(f64, f64, bool)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|&&(_, e, limited)| e.is_finite() && e > DECAY_FLOOR && !limited)
        .map(|&(m, e, _)| (m, libm::log(e)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData { usable: pts.len(), required: 3 });
    }
    Ok(least_squares(&pts))
}

/// Ordinary least squares on `(x, y)` pairs; `r2` is 1 for a perfect or
/// constant fit.
pub fn least_squares(pts: &[(f64, f64)]) -> DecayFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    DecayFit { slope, intercept, r2, points: pts.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ExpScalar, Henon, Identity, Iterated};

    #[test]
    fn identity_profile_is_zero() {
        let p = g_profile(&Identity { dim: 2 }, &[0.3, -0.2], 10).unwrap();
        assert_eq!(p.values.len(), 10);
        assert!(p.values.iter().all(|&(_, g)| g == 0.0));
        assert_eq!(p.optimum(), Some((1, 0.0)));
    }

    #[test]
    fn exp_first_difference_closed_form() {
        // X_2 and X_4 of x -> e^s x at x = 1 are sinh s and
        // (8 sinh s - sinh 2s) / 6.
        let s: f64 = 0.1;
        let p = g_profile(&ExpScalar { s }, &[1.0], 3).unwrap();
        let expected = ((2.0 * s).sinh() - 2.0 * s.sinh()).abs() / 6.0;
        assert!((p.values[0].1 - expected).abs() < 1e-15);
        assert!(p.values[0].1 > p.values[1].1 && p.values[1].1 > p.values[2].1);
    }

    #[test]
    fn henon_profile_decreases_first() {
        let map = Iterated::new(Henon::from_eps(1e-3), 4);
        let p = g_profile(&map, &[0.1, 0.1], 10).unwrap();
        let g: Vec<f64> = p.values.iter().map(|v| v.1).collect();
        assert!(g[0] > g[1] && g[1] > g[2] && g[2] > g[3], "{g:?}");
    }

    #[test]
    fn escape_truncates_profile() {
        let map = Iterated::new(Henon::from_eps(1e-3), 4);
        let p = g_profile(&map, &[0.7, -0.3], 10).unwrap();
        assert!(p.escaped_at.is_some());
        assert!(p.values.len() < 10);
    }

    #[test]
    fn single_cell_at_fixed_point() {
        let spec = GridSpec::new((0.0, 0.0), (0.0, 0.0), 1, 10).unwrap();
        let g = scan(&Iterated::new(Henon::from_eps(1e-3), 4), spec).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].opt_n, Some(1));
        assert_eq!(g.cells[0].min_g, Some(0.0));
    }

    #[test]
    fn identity_scan_all_ones() {
        let spec = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 5, 4).unwrap();
        let g = scan(&Identity { dim: 2 }, spec).unwrap();
        assert!(g.cells.iter().all(|c| c.opt_n == Some(1) && !c.escaped));
    }

    #[test]
    fn grid_is_row_major() {
        let spec = GridSpec::new((0.0, 1.0), (10.0, 12.0), 3, 1).unwrap();
        let pts = spec.points();
        assert_eq!(pts[0], [0.0, 10.0]);
        assert_eq!(pts[1], [0.5, 10.0]);
        assert_eq!(pts[3], [0.0, 11.0]);
        assert_eq!(pts[8], [1.0, 12.0]);
    }

    #[test]
    fn escaped_cells_stay_escaped_with_larger_n_max() {
        let map = Iterated::new(Henon::from_eps(1e-3), 4);
        let a = scan(&map, GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 12, 10).unwrap()).unwrap();
        let b = scan(&map, GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 12, 12).unwrap()).unwrap();
        assert!(a.escaped_count() > 0);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert!(!ca.escaped || cb.escaped);
        }
    }

    #[test]
    fn region_flood_fill() {
        let spec = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 3, 1).unwrap();
        let mk = |n: usize| ScanCell { x: 0.0, y: 0.0, opt_n: Some(n), min_g: Some(0.0), escaped: false, escape_index: None };
        // 5 5 1
        // 1 5 1
        // 5 1 5
        let cells = [5, 1, 5, 1, 5, 1, 5, 5, 1].iter().map(|&n| mk(n)).collect();
        let g = ScanGrid { spec, cells };
        assert_eq!(g.region((1, 1), |c| c.opt_n == Some(5)), vec![4, 6, 7]);
        assert!(g.region((1, 0), |c| c.opt_n == Some(5)).is_empty());
    }

    #[test]
    fn decay_fit_exact_exponential() {
        let prof: Vec<_> = (1..=8).map(|m| (m as f64, (-2.0 * m as f64).exp(), false)).collect();
        let f = decay_fit(&prof).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!(f.intercept.abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_constant() {
        let prof: Vec<_> = (1..=5).map(|m| (m as f64, 1e-3, false)).collect();
        assert_eq!(decay_fit(&prof).unwrap().slope, 0.0);
    }

    #[test]
    fn decay_fit_skips_floor_and_limited_points() {
        let prof = [(1.0, 1e-2, false), (2.0, 1e-4, true), (3.0, 1e-16, false), (4.0, 1e-6, false)];
        match decay_fit(&prof) {
            Err(Error::InsufficientData { usable: 2, required: 3 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(GridSpec::new((1.0, -1.0), (0.0, 1.0), 4, 10).is_err());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 0, 10).is_err());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 4, 0).is_err());
    }
}
