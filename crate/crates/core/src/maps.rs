//! Discrete-time maps: numeric evaluation, inverses, orbits and jets.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{capability, domain, structural};
use crate::jet::{Caps, Monomial, TruncatedSeries};
use crate::rational::{int, lift_f64, Rational, DEFAULT_LIFT_DENOMINATOR};
use crate::{Error, Result};

/// Tolerance at which a numeric inverse is considered exact.
pub const INVERSE_TOLERANCE: f64 = 1e-12;

/// A map `R^d -> R^d`, optionally invertible and with a closed-form jet.
///
/// Implementations are pure: evaluation never mutates the map, and a new
/// parameter value means a new map value.
pub trait MapSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn forward(&self, x: &[f64], out: &mut [f64]);

    fn has_inverse(&self) -> bool {
        false
    }

    fn inverse(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(capability("map has no inverse"))
    }

    /// Taylor jet about `center`, in local coordinates `x - center`.
    fn jet(&self, _center: &[f64], _caps: Caps) -> Result<Vec<TruncatedSeries>> {
        Err(capability("map has no closed-form jet"))
    }

    /// Named parameter values, for manifests and reports.
    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn name(&self) -> String;
}

impl<M: MapSystem + ?Sized> MapSystem for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        (**self).forward(x, out)
    }
    fn has_inverse(&self) -> bool {
        (**self).has_inverse()
    }
    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).inverse(x, out)
    }
    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        (**self).jet(center, caps)
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        (**self).params()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

fn lift(x: f64) -> Result<Rational> {
    lift_f64(x, DEFAULT_LIFT_DENOMINATOR)
        .map(|l| l.value)
        .ok_or_else(|| domain("cannot lift a non-finite parameter"))
}

/// The conservative Hénon map `(x, y) -> (c(1-(x+1)^2) + 2x + y, -x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Henon {
    pub c: f64,
}

impl Henon {
    pub fn new(c: f64) -> Self {
        Henon { c }
    }

    /// `c = 1 + eps`, the unfolding of the 1:4 resonance.
    pub fn from_eps(eps: f64) -> Self {
        Henon { c: 1.0 + eps }
    }

    pub fn eps(&self) -> f64 {
        self.c - 1.0
    }

    /// Elliptic and hyperbolic fixed points.
    pub fn fixed_points() -> [[f64; 2]; 2] {
        [[0.0, 0.0], [-2.0, 2.0]]
    }
}

/// The reversor `R(x, y) = (-y, -x)`; `H^{-1} = R ∘ H ∘ R`.
pub fn henon_reversor(p: [f64; 2]) -> [f64; 2] {
    [-p[1], -p[0]]
}

pub fn henon_forward(p: [f64; 2], c: f64) -> [f64; 2] {
    let (x, y) = (p[0], p[1]);
    let xp = x + 1.0;
    [c * (1.0 - xp * xp) + 2.0 * x + y, -x]
}

pub fn henon_inverse(p: [f64; 2], c: f64) -> [f64; 2] {
    henon_reversor(henon_forward(henon_reversor(p), c))
}

impl MapSystem for Henon {
    fn dim(&self) -> usize {
        2
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&henon_forward([x[0], x[1]], self.c));
    }

    fn has_inverse(&self) -> bool {
        true
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&henon_inverse([x[0], x[1]], self.c));
        Ok(())
    }

    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        let center = henon_center(center)?;
        henon_jet(center, HenonParam::Value(lift(self.c)?), caps)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("c", self.c), ("eps", self.eps())]
    }

    fn name(&self) -> String {
        "henon".into()
    }
}

/// Fixed point about which a Hénon jet is expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HenonCenter {
    /// `(0, 0)`
    Elliptic,
    /// `(-2, 2)`
    Hyperbolic,
}

impl HenonCenter {
    fn coords(self) -> (i64, i64) {
        match self {
            HenonCenter::Elliptic => (0, 0),
            HenonCenter::Hyperbolic => (-2, 2),
        }
    }
}

fn henon_center(center: &[f64]) -> Result<HenonCenter> {
    match center {
        [x, y] if *x == 0.0 && *y == 0.0 => Ok(HenonCenter::Elliptic),
        [x, y] if *x == -2.0 && *y == 2.0 => Ok(HenonCenter::Hyperbolic),
        _ => Err(capability(
            "Hénon jets are available about the fixed points (0,0) and (-2,2) only",
        )),
    }
}

/// Parameter of a Hénon jet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HenonParam {
    /// `c = 1 + eps` with `eps` the first parameter variable of the caps.
    SymbolicEps,
    /// Fixed rational `c`.
    Value(Rational),
}

/// Exact jet of the Hénon map about a fixed point.
pub fn henon_jet(center: HenonCenter, param: HenonParam, caps: Caps) -> Result<Vec<TruncatedSeries>> {
    let phase = caps.phase_vars();
    if phase.len() != 2 {
        return Err(structural("Hénon jet needs exactly 2 phase variables"));
    }
    let c = match param {
        HenonParam::Value(c) => TruncatedSeries::constant(caps, c),
        HenonParam::SymbolicEps => {
            let eps = *caps
                .param_vars()
                .first()
                .ok_or_else(|| structural("symbolic eps needs a parameter variable"))?;
            TruncatedSeries::one(caps).add(&TruncatedSeries::var(caps, eps))?
        }
    };
    let (px, py) = center.coords();
    let konst = |k: i64| TruncatedSeries::constant(caps, int(k));
    let x = konst(px).add(&TruncatedSeries::var(caps, phase[0]))?;
    let y = konst(py).add(&TruncatedSeries::var(caps, phase[1]))?;
    let xp1 = x.add(&konst(1))?;
    let first = c
        .mul(&konst(1).sub(&xp1.mul(&xp1)?)?)?
        .add(&x.scale(&int(2)))?
        .add(&y)?
        .sub(&konst(px))?;
    let second = x.neg().sub(&konst(py))?;
    debug_assert!(first.constant_term().is_zero() && second.constant_term().is_zero());
    Ok(vec![first, second])
}

/// Exact inverse jet of the Hénon map via the reversor.
pub fn henon_inverse_jet(jet: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
    if jet.len() != 2 {
        return Err(structural("Hénon jet has 2 components"));
    }
    let caps = *jet[0].caps();
    let phase = caps.phase_vars();
    let (u, v) = (
        TruncatedSeries::var(caps, phase[0]),
        TruncatedSeries::var(caps, phase[1]),
    );
    let reversor = vec![v.neg(), u.neg()];
    let h_of_r = compose_maps(jet, &reversor)?;
    Ok(vec![h_of_r[1].neg(), h_of_r[0].neg()])
}

/// Planar rotation by `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub theta: f64,
}

impl MapSystem for Rotation {
    fn dim(&self) -> usize {
        2
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        let (s, c) = (libm::sin(self.theta), libm::cos(self.theta));
        out[0] = c * x[0] - s * x[1];
        out[1] = s * x[0] + c * x[1];
    }

    fn has_inverse(&self) -> bool {
        true
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        Rotation { theta: -self.theta }.forward(x, out);
        Ok(())
    }

    /// Linear jet with `cos θ`, `sin θ` lifted to rationals.
    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        if center.iter().any(|&c| c != 0.0) {
            return Err(capability("rotation jets are taken about the origin"));
        }
        let (c, s) = (lift(libm::cos(self.theta))?, lift(libm::sin(self.theta))?);
        linear_jet(&[vec![c.clone(), -s.clone()], vec![s, c]], caps)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("theta", self.theta)]
    }

    fn name(&self) -> String {
        "rotation".into()
    }
}

/// Scalar map `x -> e^s x`, the time-one map of `x' = s x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpScalar {
    pub s: f64,
}

impl MapSystem for ExpScalar {
    fn dim(&self) -> usize {
        1
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out[0] = libm::exp(self.s) * x[0];
    }

    fn has_inverse(&self) -> bool {
        true
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = libm::exp(-self.s) * x[0];
        Ok(())
    }

    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        if center.iter().any(|&c| c != 0.0) {
            return Err(capability("exp_scalar jets are taken about the origin"));
        }
        linear_jet(&[vec![lift(libm::exp(self.s))?]], caps)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("s", self.s)]
    }

    fn name(&self) -> String {
        "exp_scalar".into()
    }
}

/// Identity map in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Identity {
    pub dim: usize,
}

impl MapSystem for Identity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn has_inverse(&self) -> bool {
        true
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(x);
        Ok(())
    }

    fn jet(&self, _center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        Ok(identity_jet(caps))
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// `k`-th iterate of a base map, used to apply a scheme to `H^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterated<M> {
    pub base: M,
    pub power: u32,
}

impl<M: MapSystem> Iterated<M> {
    pub fn new(base: M, power: u32) -> Self {
        assert!(power >= 1, "iterate power must be positive");
        Iterated { base, power }
    }
}

impl<M: MapSystem> MapSystem for Iterated<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = x.to_vec();
        for _ in 0..self.power {
            self.base.forward(&tmp, out);
            tmp.copy_from_slice(out);
        }
    }

    fn has_inverse(&self) -> bool {
        self.base.has_inverse()
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut tmp = x.to_vec();
        for _ in 0..self.power {
            self.base.inverse(&tmp, out)?;
            tmp.copy_from_slice(out);
        }
        Ok(())
    }

    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        jet_iterate(&self.base.jet(center, caps)?, self.power)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        self.base.params()
    }

    fn name(&self) -> String {
        format!("{}^{}", self.base.name(), self.power)
    }
}

/// Model chosen by name with named parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Henon(Henon),
    Rotation(Rotation),
    ExpScalar(ExpScalar),
    Identity(Identity),
}

impl Model {
    /// Builds a model from its name; `param` looks up parameter values.
    ///
    /// `henon` takes `eps` (or `c`), `rotation` takes `theta`, `exp_scalar`
    /// takes `s`, `identity` takes `dim` (default 2).
    pub fn from_name(name: &str, param: impl Fn(&str) -> Option<f64>) -> Result<Model> {
        let need = |key: &str| {
            param(key).ok_or_else(|| domain(format!("model {name} needs parameter {key}")))
        };
        match name {
            "henon" => Ok(Model::Henon(match param("c") {
                Some(c) => Henon::new(c),
                None => Henon::from_eps(need("eps")?),
            })),
            "rotation" => Ok(Model::Rotation(Rotation {
                theta: need("theta")?,
            })),
            "exp_scalar" => Ok(Model::ExpScalar(ExpScalar { s: need("s")? })),
            "identity" => {
                let dim = param("dim").unwrap_or(2.0);
                if !(1.0..=16.0).contains(&dim) || libm::trunc(dim) != dim {
                    return Err(domain("identity dim must be an integer in 1..=16"));
                }
                Ok(Model::Identity(Identity { dim: dim as usize }))
            }
            other => Err(domain(format!(
                "unknown model {other:?} (expected henon, rotation, exp_scalar, identity)"
            ))),
        }
    }

    /// Parses `model=henon eps=1e-3` style descriptions.
    pub fn parse(desc: &str) -> Result<Model> {
        let mut name: Option<&str> = None;
        let mut kv: Vec<(&str, f64)> = Vec::new();
        for tok in desc.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| domain(format!("expected key=value, got {tok:?}")))?;
            if k == "model" {
                name = Some(v);
            } else {
                let val: f64 = v
                    .parse()
                    .map_err(|_| domain(format!("parameter {k} is not a number: {v:?}")))?;
                kv.push((k, val));
            }
        }
        let name = name.ok_or_else(|| domain("missing model=<name>"))?;
        Model::from_name(name, |key| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
    }

    fn inner(&self) -> &dyn MapSystem {
        match self {
            Model::Henon(m) => m,
            Model::Rotation(m) => m,
            Model::ExpScalar(m) => m,
            Model::Identity(m) => m,
        }
    }
}

impl MapSystem for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        self.inner().forward(x, out)
    }
    fn has_inverse(&self) -> bool {
        self.inner().has_inverse()
    }
    fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner().inverse(x, out)
    }
    fn jet(&self, center: &[f64], caps: Caps) -> Result<Vec<TruncatedSeries>> {
        self.inner().jet(center, caps)
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        self.inner().params()
    }
    fn name(&self) -> String {
        self.inner().name()
    }
}

fn is_finite(p: &[f64]) -> bool {
    p.iter().all(|v| v.is_finite())
}

/// `F^k(p)`; negative `k` uses the inverse.
pub fn iterate<M: MapSystem + ?Sized>(map: &M, p: &[f64], k: i64) -> Result<Vec<f64>> {
    if k < 0 && !map.has_inverse() {
        return Err(capability("negative iterates need an inverse"));
    }
    let mut cur = p.to_vec();
    let mut next = vec![0.0; p.len()];
    let step: i64 = if k < 0 { -1 } else { 1 };
    for i in 0..k.unsigned_abs() {
        if k < 0 {
            map.inverse(&cur, &mut next)?;
        } else {
            map.forward(&cur, &mut next);
        }
        if !is_finite(&next) {
            return Err(Error::Escape {
                last_finite: step * i as i64,
            });
        }
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Orbit segment `F^k(x)` for `k = -back ..= fwd`, cut short where the orbit
/// leaves the ball of radius `radius` or becomes non-finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    dim: usize,
    /// Points `F^{-reach_back}` .. `F^{reach_fwd}` in order.
    points: Vec<f64>,
    reach_back: usize,
    reach_fwd: usize,
    complete: bool,
}

impl Orbit {
    pub fn compute<M: MapSystem + ?Sized>(
        map: &M,
        x: &[f64],
        back: usize,
        fwd: usize,
        radius: f64,
    ) -> Result<Orbit> {
        if back > 0 && !map.has_inverse() {
            return Err(capability("backward orbit needs an inverse"));
        }
        let dim = map.dim();
        if x.len() != dim {
            return Err(structural(format!(
                "point has {} coordinates, map has dimension {dim}",
                x.len()
            )));
        }
        let inside = |p: &[f64]| is_finite(p) && p.iter().all(|v| v.abs() <= radius);
        let mut fwd_pts: Vec<f64> = x.to_vec();
        let mut cur = x.to_vec();
        let mut next = vec![0.0; dim];
        let mut reach_fwd = 0;
        if inside(x) {
            while reach_fwd < fwd {
                map.forward(&cur, &mut next);
                if !inside(&next) {
                    break;
                }
                fwd_pts.extend_from_slice(&next);
                core::mem::swap(&mut cur, &mut next);
                reach_fwd += 1;
            }
        }
        let mut back_pts: Vec<f64> = Vec::new();
        let mut reach_back = 0;
        cur.copy_from_slice(x);
        if inside(x) {
            while reach_back < back {
                map.inverse(&cur, &mut next)?;
                if !inside(&next) {
                    break;
                }
                back_pts.extend_from_slice(&next);
                core::mem::swap(&mut cur, &mut next);
                reach_back += 1;
            }
        }
        let mut points = Vec::with_capacity((reach_back + reach_fwd + 1) * dim);
        for chunk in back_pts.chunks(dim).rev() {
            points.extend_from_slice(chunk);
        }
        points.extend_from_slice(&fwd_pts);
        Ok(Orbit {
            dim,
            points,
            reach_back,
            reach_fwd,
            complete: inside(x) && reach_back == back && reach_fwd == fwd,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reach_back(&self) -> usize {
        self.reach_back
    }

    pub fn reach_fwd(&self) -> usize {
        self.reach_fwd
    }

    /// Whether the requested segment was computed in full.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `F^k(x)` if it was reached.
    pub fn get(&self, k: i64) -> Option<&[f64]> {
        if k < -(self.reach_back as i64) || k > self.reach_fwd as i64 {
            return None;
        }
        let idx = (k + self.reach_back as i64) as usize;
        Some(&self.points[idx * self.dim..(idx + 1) * self.dim])
    }

    /// Whether every index in `lo..=hi` is available.
    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= -(self.reach_back as i64) && hi <= self.reach_fwd as i64
    }

    /// Signed index of the last finite iterate on the side that fell short.
    pub fn escape_index(&self, back: usize, fwd: usize) -> Option<i64> {
        if self.reach_fwd < fwd {
            Some(self.reach_fwd as i64)
        } else if self.reach_back < back {
            Some(-(self.reach_back as i64))
        } else {
            None
        }
    }
}

/// Identity jet on the phase variables of `caps`.
pub fn identity_jet(caps: Caps) -> Vec<TruncatedSeries> {
    caps.phase_vars()
        .into_iter()
        .map(|v| TruncatedSeries::var(caps, v))
        .collect()
}

/// Jet of the linear map `x -> A x` on the phase variables.
pub fn linear_jet(matrix: &[Vec<Rational>], caps: Caps) -> Result<Vec<TruncatedSeries>> {
    let phase = caps.phase_vars();
    if matrix.len() != phase.len() || matrix.iter().any(|row| row.len() != phase.len()) {
        return Err(structural("matrix size does not match the phase variables"));
    }
    Ok(matrix
        .iter()
        .map(|row| {
            TruncatedSeries::from_terms(
                caps,
                row.iter()
                    .zip(&phase)
                    .map(|(a, &v)| (Monomial::var(v), a.clone())),
            )
        })
        .collect())
}

/// Appends identity components for the parameter variables, giving the
/// full substitution list `compose` expects.
fn substitution(phase_comps: &[TruncatedSeries], caps: Caps) -> Result<Vec<TruncatedSeries>> {
    let phase = caps.phase_vars();
    if phase_comps.len() != phase.len() {
        return Err(structural(format!(
            "map jet has {} components, caps have {} phase variables",
            phase_comps.len(),
            phase.len()
        )));
    }
    let mut full: Vec<TruncatedSeries> = (0..caps.num_vars())
        .map(|v| TruncatedSeries::var(caps, v))
        .collect();
    for (comp, &v) in phase_comps.iter().zip(&phase) {
        full[v] = comp.clone();
    }
    Ok(full)
}

/// `outer ∘ inner` for map jets (phase components only; parameters pass
/// through unchanged).
pub fn compose_maps(
    outer: &[TruncatedSeries],
    inner: &[TruncatedSeries],
) -> Result<Vec<TruncatedSeries>> {
    let caps = *inner
        .first()
        .ok_or_else(|| structural("empty map jet"))?
        .caps();
    let full = substitution(inner, caps)?;
    outer.iter().map(|c| c.compose(&full, false)).collect()
}

/// `k`-fold composition, truncating after every step.
pub fn jet_iterate(jet: &[TruncatedSeries], k: u32) -> Result<Vec<TruncatedSeries>> {
    if k == 0 {
        return Err(domain("jet_iterate needs k >= 1"));
    }
    if let Some(i) = jet.iter().position(|c| !c.constant_term().is_zero()) {
        return Err(domain(format!("jet component {i} does not fix the origin")));
    }
    let mut cur = jet.to_vec();
    for _ in 1..k {
        cur = compose_maps(jet, &cur)?;
    }
    Ok(cur)
}

/// Linear part at zero parameters: `a[i][j]` is the coefficient of phase
/// variable `j` in component `i`.
pub fn linear_part(jet: &[TruncatedSeries]) -> Vec<Vec<Rational>> {
    jet.iter()
        .map(|c| {
            c.caps()
                .phase_vars()
                .into_iter()
                .map(|v| c.coefficient(&Monomial::var(v)))
                .collect()
        })
        .collect()
}

/// Inverse of a square rational matrix by Gauss-Jordan elimination.
pub fn invert_matrix(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (dst, src) in m[r].iter_mut().zip(pivot_row) {
                    *dst -= &f * src;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Inverse jet by fixed-point iteration on `j ∘ g = id`, one degree per
/// sweep: `g <- L⁻¹ (id - N ∘ g)` where `L` is the linear part at zero
/// parameters and `N = j - L`.
pub fn invert_jet(jet: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
    let caps = *jet.first().ok_or_else(|| structural("empty map jet"))?.caps();
    if let Some(i) = jet.iter().position(|c| !c.constant_term().is_zero()) {
        return Err(domain(format!("jet component {i} does not fix the origin")));
    }
    let lin = linear_part(jet);
    let lin_inv =
        invert_matrix(&lin).ok_or_else(|| domain("jet linear part is not invertible"))?;
    let linear = linear_jet(&lin, caps)?;
    let nonlinear: Vec<TruncatedSeries> = jet
        .iter()
        .zip(&linear)
        .map(|(j, l)| j.sub(l))
        .collect::<Result<_>>()?;
    let id = identity_jet(caps);
    let apply_inv = |v: &[TruncatedSeries]| -> Result<Vec<TruncatedSeries>> {
        lin_inv
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .try_fold(TruncatedSeries::zero(caps), |acc, (a, s)| acc.add(&s.scale(a)))
            })
            .collect()
    };
    let sweeps = caps.total() as usize
        + caps.per_var().iter().flatten().map(|&c| c as usize).sum::<usize>()
        + 2;
    let mut g = apply_inv(&id)?;
    for _ in 0..sweeps {
        let n_of_g = compose_maps(&nonlinear, &g)?;
        let rhs: Vec<TruncatedSeries> = id
            .iter()
            .zip(&n_of_g)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        let next = apply_inv(&rhs)?;
        if next == g {
            return Ok(g);
        }
        g = next;
    }
    Ok(g)
}

/// Jet of a map about `center`, dispatching to the model's closed form.
pub fn jet_of_map<M: MapSystem + ?Sized>(
    map: &M,
    center: &[f64],
    caps: Caps,
) -> Result<Vec<TruncatedSeries>> {
    map.jet(center, caps)
}

/// Numeric Jacobian by central differences.
pub fn jacobian<M: MapSystem + ?Sized>(map: &M, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = map.dim();
    let mut jac = vec![vec![0.0; d]; d];
    let (mut plus, mut minus) = (vec![0.0; d], vec![0.0; d]);
    for j in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        map.forward(&xp, &mut plus);
        map.forward(&xm, &mut minus);
        for i in 0..d {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn henon_fixed_points_and_examples() {
        for c in [0.3, 1.0, 1.001, 1.7] {
            assert_eq!(henon_forward([0.0, 0.0], c), [0.0, 0.0]);
            assert_eq!(henon_forward([-2.0, 2.0], c), [-2.0, 2.0]);
            assert_eq!(henon_inverse([0.0, 0.0], c), [0.0, 0.0]);
        }
        assert_eq!(henon_forward([1.0, 0.0], 1.0), [-1.0, -1.0]);
        assert_eq!(henon_inverse([-1.0, -1.0], 1.0), [1.0, 0.0]);
    }

    #[test]
    fn henon_inverse_roundtrip() {
        let c = 1.001;
        for p in [[0.3, -0.2], [0.9, 0.9], [-1.0, 0.5]] {
            let q = henon_inverse(henon_forward(p, c), c);
            for i in 0..2 {
                assert!((q[i] - p[i]).abs() <= 1e-13 * p[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn iterate_basics() {
        let h = Henon::from_eps(1e-3);
        let p = [0.2, -0.1];
        assert_eq!(iterate(&h, &p, 0).unwrap(), p.to_vec());
        assert_eq!(iterate(&h, &[0.0, 0.0], 1_000_000).unwrap(), vec![0.0, 0.0]);
        let q = iterate(&h, &p, 4).unwrap();
        let back = iterate(&h, &q, -4).unwrap();
        assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
    }

    struct NoInverse;
    impl MapSystem for NoInverse {
        fn dim(&self) -> usize {
            1
        }
        fn forward(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0];
        }
        fn name(&self) -> String {
            "square".into()
        }
    }

    #[test]
    fn iterate_errors() {
        assert!(matches!(
            iterate(&NoInverse, &[2.0], -1),
            Err(Error::Capability(_))
        ));
        // 10^(2^k) overflows at k = 9
        match iterate(&NoInverse, &[10.0], 20) {
            Err(Error::Escape { last_finite }) => assert_eq!(last_finite, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            NoInverse.jet(&[0.0], Caps::phase(1, 3)),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn orbit_indices() {
        let r = Rotation { theta: 0.3 };
        let o = Orbit::compute(&r, &[1.0, 0.0], 2, 3, f64::INFINITY).unwrap();
        assert!(o.is_complete());
        assert_eq!(o.get(0).unwrap(), &[1.0, 0.0]);
        let f2 = iterate(&r, &[1.0, 0.0], 2).unwrap();
        assert_eq!(o.get(2).unwrap(), f2.as_slice());
        let b2 = iterate(&r, &[1.0, 0.0], -2).unwrap();
        assert_eq!(o.get(-2).unwrap(), b2.as_slice());
        assert!(o.get(-3).is_none() && o.get(4).is_none());
    }

    #[test]
    fn orbit_stops_at_escape() {
        let o = Orbit::compute(&NoInverse, &[3.0], 0, 10, 1e6).unwrap();
        assert!(!o.is_complete());
        // 3, 9, 81, 6561, 43046721 > 1e6
        assert_eq!(o.reach_fwd(), 3);
        assert_eq!(o.escape_index(0, 10), Some(3));
    }

    #[test]
    fn henon_jet_linear_part_at_resonance() {
        let caps = Caps::with_params(2, 4, &[1]);
        let jet = henon_jet(HenonCenter::Elliptic, HenonParam::SymbolicEps, caps).unwrap();
        assert_eq!(linear_part(&jet), vec![vec![int(0), int(1)], vec![int(-1), int(0)]]);
        // y - x^2 - eps(2x + x^2)
        let first = &jet[0];
        assert_eq!(first.coefficient(&Monomial::new(&[2, 0, 0])), int(-1));
        assert_eq!(first.coefficient(&Monomial::new(&[1, 0, 1])), int(-2));
        assert_eq!(first.coefficient(&Monomial::new(&[2, 0, 1])), int(-1));
        assert_eq!(first.len(), 4);
        assert_eq!(jet[1], TruncatedSeries::var(caps, 0).neg());
    }

    #[test]
    fn henon_jet_matches_finite_differences() {
        let h = Henon::new(1.3);
        for center in Henon::fixed_points() {
            let jet = h.jet(&center, Caps::phase(2, 3)).unwrap();
            let lin = linear_part(&jet);
            let num = jacobian(&h, &center, 1e-6);
            for i in 0..2 {
                for j in 0..2 {
                    let exact = crate::rational::to_f64(&lin[i][j]);
                    assert!((exact - num[i][j]).abs() < 1e-8, "{i}{j}: {exact} vs {}", num[i][j]);
                }
            }
        }
    }

    #[test]
    fn identity_and_rotation_jets() {
        let caps = Caps::phase(2, 3);
        let id = Identity { dim: 2 }.jet(&[0.0, 0.0], caps).unwrap();
        assert_eq!(id, identity_jet(caps));
        let theta = 0.1;
        let rot = Rotation { theta }.jet(&[0.0, 0.0], caps).unwrap();
        let lin = linear_part(&rot);
        assert!((crate::rational::to_f64(&lin[0][0]) - libm::cos(theta)).abs() < 1e-12);
        assert!((crate::rational::to_f64(&lin[0][1]) + libm::sin(theta)).abs() < 1e-12);
        assert!((crate::rational::to_f64(&lin[1][0]) - libm::sin(theta)).abs() < 1e-12);
        assert!(rot.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn jet_iterate_semigroup_and_resonance() {
        let caps = Caps::phase(2, 5);
        let jet = Henon::new(1.0).jet(&[0.0, 0.0], caps).unwrap();
        assert_eq!(jet_iterate(&jet, 1).unwrap(), jet);
        let two = jet_iterate(&jet, 2).unwrap();
        assert_eq!(two, compose_maps(&jet, &jet).unwrap());
        let four = jet_iterate(&jet, 4).unwrap();
        assert_eq!(linear_part(&four), vec![vec![int(1), int(0)], vec![int(0), int(1)]]);
        let shifted = vec![
            jet[0].add(&TruncatedSeries::one(caps)).unwrap(),
            jet[1].clone(),
        ];
        assert!(matches!(jet_iterate(&shifted, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_jets_agree() {
        let caps = Caps::with_params(2, 6, &[2]);
        let jet = henon_jet(HenonCenter::Elliptic, HenonParam::SymbolicEps, caps).unwrap();
        let rev = henon_inverse_jet(&jet).unwrap();
        let iter = invert_jet(&jet).unwrap();
        assert_eq!(rev, iter);
        assert_eq!(compose_maps(&jet, &rev).unwrap(), identity_jet(caps));
        assert_eq!(compose_maps(&rev, &jet).unwrap(), identity_jet(caps));
    }

    #[test]
    fn singular_linear_part_is_rejected() {
        let caps = Caps::phase(2, 3);
        let jet = linear_jet(&[vec![int(1), int(2)], vec![int(2), int(4)]], caps).unwrap();
        assert!(matches!(invert_jet(&jet), Err(Error::Domain(_))));
        let inv = invert_matrix(&[vec![int(2), int(1)], vec![int(1), int(1)]]).unwrap();
        assert_eq!(inv, vec![vec![int(1), int(-1)], vec![int(-1), int(2)]]);
        let _ = rat(1, 2);
    }

    #[test]
    fn model_parsing() {
        let m = Model::parse("model=henon eps=1e-3").unwrap();
        assert_eq!(m, Model::Henon(Henon::from_eps(1e-3)));
        assert_eq!(
            Model::parse("model=rotation theta=0.1").unwrap(),
            Model::Rotation(Rotation { theta: 0.1 })
        );
        assert_eq!(
            Model::parse("model=exp_scalar s=0.05").unwrap(),
            Model::ExpScalar(ExpScalar { s: 0.05 })
        );
        assert!(Model::parse("model=lorenz").is_err());
        assert!(Model::parse("model=rotation").is_err());
        assert!(Model::parse("eps=1").is_err());
    }
}
