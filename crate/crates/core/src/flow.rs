//! Time-one flows of vector fields and the map-versus-flow error.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::domain;
use crate::interpolation::{InterpolationScheme, NumericVectorField};
use crate::maps::{iterate, MapSystem};
use crate::Result;

/// `1/(6e)`, the constant in the optimal-order rule.
pub const C0: f64 = 1.0 / (6.0 * core::f64::consts::E);

/// Substeps per unit time used when nothing else is configured.
pub const DEFAULT_SUBSTEPS: usize = 64;

/// An autonomous vector field that may fail to evaluate (for example when
/// the orbit it depends on escapes).
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Closure-backed field.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out);
        Ok(())
    }
}

/// Classic fixed-step fourth-order Runge-Kutta over one unit of time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegratorConfig {
    pub substeps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

fn rk4<V: VectorField + ?Sized>(field: &V, x: &[f64], substeps: usize) -> Result<Vec<f64>> {
    let d = x.len();
    let h = 1.0 / substeps as f64;
    let mut y = x.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for _ in 0..substeps {
        field.eval(&y, &mut k1)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        field.eval(&tmp, &mut k2)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        field.eval(&tmp, &mut k3)?;
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        field.eval(&tmp, &mut k4)?;
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

/// Time-one image `Φ¹(x)`.
pub fn flow_time_one<V: VectorField + ?Sized>(
    field: &V,
    x: &[f64],
    cfg: IntegratorConfig,
) -> Result<Vec<f64>> {
    if cfg.substeps == 0 {
        return Err(domain("substeps must be positive"));
    }
    rk4(field, x, cfg.substeps)
}

/// Time-one image together with a Richardson estimate of its error,
/// `(16/15) max|y_n - y_{2n}|`.
pub fn flow_time_one_estimated<V: VectorField + ?Sized>(
    field: &V,
    x: &[f64],
    cfg: IntegratorConfig,
) -> Result<(Vec<f64>, f64)> {
    let coarse = flow_time_one(field, x, cfg)?;
    let fine = rk4(field, x, 2 * cfg.substeps)?;
    let est = max_norm_diff(&coarse, &fine) * 16.0 / 15.0;
    Ok((coarse, est))
}

pub fn max_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Max-norm distance between `Φ¹_{X_m}(x)` and `F(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowErrorReport {
    pub m: usize,
    pub error: f64,
    pub integrator_estimate: f64,
    /// Set unless the integrator estimate is below a tenth of the error.
    pub integrator_limited: bool,
}

pub fn flow_error<M: MapSystem + ?Sized>(
    map: &M,
    x: &[f64],
    scheme: &InterpolationScheme,
    cfg: IntegratorConfig,
) -> Result<FlowErrorReport> {
    let target = iterate(map, x, 1)?;
    let field = NumericVectorField::new(map, scheme.clone());
    let (phi, est) = flow_time_one_estimated(&field, x, cfg)?;
    let error = max_norm_diff(&phi, &target);
    Ok(FlowErrorReport {
        m: scheme.order(),
        error,
        integrator_estimate: est,
        integrator_limited: est.is_nan() || est >= error / 10.0,
    })
}

/// `M = floor(c0 / ratio) + 1` for the closeness ratio `eps / delta`.
///
/// The quotient is nudged up by a few ulps so that ratios built as
/// `c0 / k` land on `k` rather than just below it.
pub fn optimal_order_select(ratio: f64) -> Result<usize> {
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(domain("ratio must be positive and finite"));
    }
    let q = C0 / ratio;
    let q = q * (1.0 + 4.0 * f64::EPSILON);
    Ok(libm::floor(q) as usize + 1)
}
