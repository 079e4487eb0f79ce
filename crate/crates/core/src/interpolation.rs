//! Interpolating vector fields.
//!
//! The degree-`n` polynomial through the orbit points `F^k(x)`,
//! `k = -n0 ..= n - n0`, has derivative at `t = 0` equal to
//! `X(x) = Σ p_k F^k(x)` with weights `p_k = b_k'(0)` of the Lagrange basis.
//! The weights depend on the stencil only, so one table serves every map.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{capability, domain, structural};
use crate::flow::VectorField;
use crate::jet::{JetVectorField, TruncatedSeries};
use crate::maps::{compose_maps, identity_jet, invert_jet, MapSystem, Orbit};
use crate::rational::{factorial, to_f64, Rational};
use crate::{Error, Result};

/// Largest supported interpolation degree.
pub const MAX_ORDER: usize = 32;

/// Stencil `{-n0, ..., n - n0}` with exact weights.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationScheme {
    n0: usize,
    n: usize,
    weights: Vec<Rational>,
    weights_f64: Vec<f64>,
}

impl InterpolationScheme {
    /// Newton forward scheme of order `m`: stencil `0..=m`.
    pub fn forward(m: usize) -> Result<Self> {
        lagrange_weights(0, m)
    }

    /// Stirling symmetric scheme of order `2m`: stencil `-m..=m`.
    pub fn symmetric(m: usize) -> Result<Self> {
        lagrange_weights(m, 2 * m)
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn stencil(&self) -> RangeInclusive<i64> {
        -(self.n0 as i64)..=(self.n - self.n0) as i64
    }

    /// Weights in stencil order.
    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.weights_f64
    }

    /// `(k, p_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.stencil().zip(self.weights.iter())
    }

    pub fn needs_inverse(&self) -> bool {
        self.n0 > 0
    }
}

/// Exact weights `p_k = b_k'(0)` for the stencil `{-n0, ..., n - n0}`:
/// `b_k'(0) = Σ_{j≠k} 1/(k-j) Π_{i≠k,j} (-i)/(k-i)`.
pub fn lagrange_weights(n0: usize, n: usize) -> Result<InterpolationScheme> {
    if n == 0 || n0 > n {
        return Err(domain("n0 must satisfy 0 ≤ n0 ≤ n and n ≥ 1"));
    }
    if n > MAX_ORDER {
        return Err(domain(format!("order {n} exceeds the supported maximum {MAX_ORDER}")));
    }
    let nodes: Vec<i64> = (-(n0 as i64)..=(n - n0) as i64).collect();
    let r = |v: i64| Rational::from_integer(BigInt::from(v));
    let weights: Vec<Rational> = nodes
        .iter()
        .map(|&k| {
            let mut sum = Rational::zero();
            for &j in nodes.iter().filter(|&&j| j != k) {
                let mut term = r(k - j).recip();
                for &i in nodes.iter().filter(|&&i| i != k && i != j) {
                    term *= r(-i) / r(k - i);
                }
                sum += term;
            }
            sum
        })
        .collect();
    let weights_f64 = weights.iter().map(to_f64).collect();
    Ok(InterpolationScheme {
        n0,
        n,
        weights,
        weights_f64,
    })
}

/// `Σ p_k (F^k(x) - x)` from a precomputed orbit. The weights sum to zero, so
/// subtracting `x` changes nothing exactly and keeps the sum well scaled.
pub fn field_from_orbit(orbit: &Orbit, scheme: &InterpolationScheme) -> Option<Vec<f64>> {
    let x0 = orbit.get(0)?;
    let mut out = vec![0.0; orbit.dim()];
    for (k, &w) in scheme.stencil().zip(scheme.weights_f64()) {
        let p = orbit.get(k)?;
        for i in 0..out.len() {
            out[i] += w * (p[i] - x0[i]);
        }
    }
    Some(out)
}

fn orbit_for<M: MapSystem + ?Sized>(map: &M, x: &[f64], back: usize, fwd: usize) -> Result<Orbit> {
    if back > 0 && !map.has_inverse() {
        return Err(capability("scheme needs backward iterates but the map has no inverse"));
    }
    let orbit = Orbit::compute(map, x, back, fwd, f64::INFINITY)?;
    match orbit.escape_index(back, fwd) {
        Some(last_finite) => Err(Error::Escape { last_finite }),
        None if !orbit.is_complete() => Err(Error::Escape { last_finite: 0 }),
        None => Ok(orbit),
    }
}

/// Lagrange evaluation of the interpolating field at `x`.
pub fn lagrange_field<M: MapSystem + ?Sized>(
    map: &M,
    x: &[f64],
    scheme: &InterpolationScheme,
) -> Result<Vec<f64>> {
    let orbit = orbit_for(map, x, scheme.n0, scheme.n - scheme.n0)?;
    Ok(field_from_orbit(&orbit, scheme).expect("orbit covers the stencil"))
}

/// Forward difference table: row `j` holds `Δ^j` at successive points.
fn difference_table(points: &[Vec<f64>], depth: usize) -> Vec<Vec<Vec<f64>>> {
    let mut table = vec![points.to_vec()];
    for j in 1..=depth {
        let prev = &table[j - 1];
        let row = prev
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
            .collect();
        table.push(row);
    }
    table
}

/// Newton forward field `X_m = Σ_{k=1}^m (-1)^{k-1}/k Δ_k(x)`.
pub fn newton_forward_field<M: MapSystem + ?Sized>(map: &M, x: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(domain("order m must be at least 1"));
    }
    let orbit = orbit_for(map, x, 0, m)?;
    let points: Vec<Vec<f64>> = (0..=m as i64).map(|k| orbit.get(k).unwrap().to_vec()).collect();
    let table = difference_table(&points, m);
    let mut out = vec![0.0; x.len()];
    for (k, row) in table.iter().enumerate().skip(1) {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let c = sign / k as f64;
        for (o, d) in out.iter_mut().zip(&row[0]) {
            *o += c * d;
        }
    }
    Ok(out)
}

/// Stirling symmetric field of order `2m`:
/// `X_{2m} = Σ_{k<m} (-1)^k (k!)²/(2k+1)! · (Δ^{2k+1}(x_{-k-1}) + Δ^{2k+1}(x_{-k}))/2`.
pub fn stirling_symmetric_field<M: MapSystem + ?Sized>(
    map: &M,
    x: &[f64],
    m: usize,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(domain("order m must be at least 1"));
    }
    let orbit = orbit_for(map, x, m, m)?;
    let mi = m as i64;
    let points: Vec<Vec<f64>> = (-mi..=mi).map(|k| orbit.get(k).unwrap().to_vec()).collect();
    let table = difference_table(&points, 2 * m - 1);
    let mut out = vec![0.0; x.len()];
    for k in 0..m {
        let fk = to_f64(&Rational::from_integer(factorial(k as u64)));
        let coef = fk * fk / to_f64(&Rational::from_integer(factorial(2 * k as u64 + 1)));
        let coef = if k % 2 == 0 { coef } else { -coef };
        let row = &table[2 * k + 1];
        // row index i corresponds to the point x_{i - m}
        let (a, b) = (&row[m - k - 1], &row[m - k]);
        for i in 0..out.len() {
            out[i] += coef * 0.5 * (a[i] + b[i]);
        }
    }
    Ok(out)
}

/// Interpolating field of a map evaluated on demand, for flow integration.
pub struct NumericVectorField<'a, M: ?Sized> {
    pub scheme: InterpolationScheme,
    pub map: &'a M,
}

impl<'a, M: MapSystem + ?Sized> NumericVectorField<'a, M> {
    pub fn new(map: &'a M, scheme: InterpolationScheme) -> Self {
        NumericVectorField { scheme, map }
    }
}

impl<M: MapSystem + ?Sized> VectorField for NumericVectorField<'_, M> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let v = lagrange_field(self.map, x, &self.scheme)?;
        out.copy_from_slice(&v);
        Ok(())
    }
}

/// `Σ p_k j^{∘k}` on map jets. Negative powers use `inverse` when given,
/// otherwise an inverse computed by [`invert_jet`].
pub fn jet_interpolating_field(
    jet: &[TruncatedSeries],
    inverse: Option<&[TruncatedSeries]>,
    scheme: &InterpolationScheme,
) -> Result<JetVectorField> {
    let caps = *jet.first().ok_or_else(|| structural("empty map jet"))?.caps();
    if let Some(i) = jet.iter().position(|c| !c.constant_term().is_zero()) {
        return Err(domain(format!("jet component {i} does not fix the origin")));
    }
    let id = identity_jet(caps);
    let mut acc: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(caps); jet.len()];
    let add_scaled = |acc: &mut Vec<TruncatedSeries>, p: &Rational, power: &[TruncatedSeries]| {
        for (a, s) in acc.iter_mut().zip(power) {
            *a = a.add(&s.scale(p))?;
        }
        Ok::<(), Error>(())
    };
    let back = scheme.n0;
    let fwd = scheme.n - scheme.n0;
    let weight = |k: i64| &scheme.weights[(k + back as i64) as usize];

    add_scaled(&mut acc, weight(0), &id)?;
    let mut power = id.clone();
    for k in 1..=fwd as i64 {
        power = compose_maps(jet, &power)?;
        add_scaled(&mut acc, weight(k), &power)?;
    }
    if back > 0 {
        let computed;
        let inv = match inverse {
            Some(inv) => inv,
            None => {
                computed = invert_jet(jet)?;
                &computed
            }
        };
        let mut power = id;
        for k in 1..=back as i64 {
            power = compose_maps(inv, &power)?;
            add_scaled(&mut acc, weight(-k), &power)?;
        }
    }
    JetVectorField::new(acc)
}

/// Coefficients `g_0, ..., g_{n-1}` of the formal interpolating field of a
/// tangent-to-identity family, read off as the `eps^k` Taylor coefficients
/// of the order-`n` forward interpolating jet field.
///
/// `family` is a map jet whose first parameter variable is `eps`; its
/// parameter cap must be at least `n`.
pub fn formal_interpolator_coefficients(
    family: &[TruncatedSeries],
    n: usize,
) -> Result<Vec<JetVectorField>> {
    let caps = *family.first().ok_or_else(|| structural("empty map jet"))?.caps();
    let eps = *caps
        .param_vars()
        .first()
        .ok_or_else(|| structural("family needs a parameter variable"))?;
    if caps.per_var()[eps].unwrap_or(0) < n as u32 {
        return Err(domain(format!("parameter cap must be at least {n}")));
    }
    let at_zero: Vec<TruncatedSeries> = family.iter().map(|c| c.coefficient_of(eps, 0)).collect();
    if at_zero != identity_jet(caps) {
        return Err(domain("family is not the identity at eps = 0"));
    }
    let field = jet_interpolating_field(family, None, &InterpolationScheme::forward(n)?)?;
    (1..=n as u16)
        .map(|k| {
            JetVectorField::new(
                field
                    .components()
                    .iter()
                    .map(|c| c.coefficient_of(eps, k))
                    .collect(),
            )
        })
        .collect()
}

/// Exact `Σ_k p_k k^j` for the moment identities.
pub fn weight_moment(scheme: &InterpolationScheme, j: u32) -> Rational {
    scheme.iter().fold(Rational::zero(), |acc, (k, p)| {
        acc + p * Rational::from_integer(num_traits::pow(BigInt::from(k), j as usize))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Caps, Monomial};
    use crate::maps::{linear_jet, ExpScalar, Henon, Identity, Iterated, Rotation};
    use crate::rational::{int, rat};

    #[test]
    fn weight_examples() {
        assert_eq!(lagrange_weights(0, 1).unwrap().weights(), &[int(-1), int(1)]);
        assert_eq!(
            lagrange_weights(1, 2).unwrap().weights(),
            &[rat(-1, 2), int(0), rat(1, 2)]
        );
        assert_eq!(
            lagrange_weights(2, 4).unwrap().weights(),
            &[rat(1, 12), rat(-2, 3), int(0), rat(2, 3), rat(-1, 12)]
        );
    }

    #[test]
    fn invalid_stencils() {
        assert!(matches!(lagrange_weights(3, 2), Err(Error::Domain(_))));
        assert!(matches!(lagrange_weights(0, 0), Err(Error::Domain(_))));
        assert!(matches!(lagrange_weights(0, MAX_ORDER + 1), Err(Error::Domain(_))));
        assert!(lagrange_weights(12, 24).is_ok());
    }

    #[test]
    fn moment_identities() {
        for n in 1..=12 {
            for n0 in 0..=n {
                let s = lagrange_weights(n0, n).unwrap();
                assert_eq!(weight_moment(&s, 0), int(0), "({n0},{n})");
                assert_eq!(weight_moment(&s, 1), int(1), "({n0},{n})");
                for j in 2..=n as u32 {
                    assert_eq!(weight_moment(&s, j), int(0), "({n0},{n}) j={j}");
                }
            }
        }
    }

    #[test]
    fn newton_field_examples() {
        let h = Henon::from_eps(0.01);
        let x = [0.3, -0.2];
        let x1 = newton_forward_field(&h, &x, 1).unwrap();
        let f = crate::maps::iterate(&h, &x, 1).unwrap();
        assert_eq!(x1, vec![f[0] - x[0], f[1] - x[1]]);
        let id = Identity { dim: 2 };
        for m in 1..8 {
            assert_eq!(newton_forward_field(&id, &x, m).unwrap(), vec![0.0, 0.0]);
        }
        let s: f64 = 0.1;
        let got = newton_forward_field(&ExpScalar { s }, &[1.0], 2).unwrap()[0];
        let oracle = -1.5 + 2.0 * s.exp() - 0.5 * (2.0 * s).exp();
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.099_640_457).abs() < 1e-9);
    }

    #[test]
    fn stirling_field_examples() {
        let h = Henon::from_eps(0.01);
        let x = [0.3, -0.2];
        let x2 = stirling_symmetric_field(&h, &x, 1).unwrap();
        let f = crate::maps::iterate(&h, &x, 1).unwrap();
        let b = crate::maps::iterate(&h, &x, -1).unwrap();
        for i in 0..2 {
            assert!((x2[i] - 0.5 * (f[i] - b[i])).abs() < 1e-16);
        }
        let theta: f64 = 0.25;
        let p = [0.7, -0.4];
        let r = stirling_symmetric_field(&Rotation { theta }, &p, 1).unwrap();
        assert!((r[0] + p[1] * theta.sin()).abs() < 1e-15);
        assert!((r[1] - p[0] * theta.sin()).abs() < 1e-15);
        assert_eq!(
            stirling_symmetric_field(&Identity { dim: 2 }, &p, 4).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn schemes_agree_with_lagrange() {
        let h4 = Iterated::new(Henon::from_eps(1e-3), 4);
        for x in [[0.1, 0.2], [-0.3, 0.25], [0.05, -0.4]] {
            for m in 1..=6 {
                let newton = newton_forward_field(&h4, &x, m).unwrap();
                let lag = lagrange_field(&h4, &x, &InterpolationScheme::forward(m).unwrap()).unwrap();
                let stir = stirling_symmetric_field(&h4, &x, m).unwrap();
                let lag_s =
                    lagrange_field(&h4, &x, &InterpolationScheme::symmetric(m).unwrap()).unwrap();
                let scale = lag.iter().chain(&lag_s).fold(0.0f64, |a, v| a.max(v.abs()));
                for i in 0..2 {
                    assert!((newton[i] - lag[i]).abs() <= 1e-12 * scale, "m={m}");
                    assert!((stir[i] - lag_s[i]).abs() <= 1e-12 * scale, "m={m}");
                }
            }
        }
    }

    struct Square;
    impl MapSystem for Square {
        fn dim(&self) -> usize {
            1
        }
        fn forward(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0];
        }
        fn name(&self) -> alloc::string::String {
            "square".into()
        }
    }

    #[test]
    fn field_errors() {
        assert!(matches!(
            stirling_symmetric_field(&Square, &[0.5], 1),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            newton_forward_field(&Square, &[1e200], 3),
            Err(Error::Escape { last_finite: 0 })
        ));
    }

    #[test]
    fn jet_field_examples() {
        let caps = Caps::phase(2, 4);
        let jet = Henon::new(1.0).jet(&[0.0, 0.0], caps).unwrap();
        let x1 = jet_interpolating_field(&jet, None, &InterpolationScheme::forward(1).unwrap())
            .unwrap();
        let id = identity_jet(caps);
        for i in 0..2 {
            assert_eq!(x1.components()[i], jet[i].sub(&id[i]).unwrap());
        }
        let zero = jet_interpolating_field(&id, None, &lagrange_weights(2, 5).unwrap()).unwrap();
        assert!(zero.components().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn symmetric_jet_field_on_linear_map_is_sinh() {
        let s: f64 = 0.2;
        let caps = Caps::phase(2, 3);
        let lam = crate::rational::lift_f64(s.exp(), 1_000_000_000_000).unwrap().value;
        let jet = linear_jet(&[vec![lam.clone(), int(0)], vec![int(0), lam]], caps).unwrap();
        let f = jet_interpolating_field(&jet, None, &InterpolationScheme::symmetric(1).unwrap())
            .unwrap();
        for (i, c) in f.components().iter().enumerate() {
            assert_eq!(c.len(), 1);
            let k = to_f64(&c.coefficient(&Monomial::var(i)));
            assert!((k - s.sinh()).abs() < 1e-11);
        }
    }

    fn family_caps() -> Caps {
        Caps::with_params(1, 8, &[6])
    }

    #[test]
    fn formal_coefficients_translation() {
        let caps = family_caps();
        let v = rat(3, 2);
        let fam = vec![TruncatedSeries::var(caps, 0)
            .add(&TruncatedSeries::monomial(caps, Monomial::new(&[0, 1]), v.clone()))
            .unwrap()];
        let g = formal_interpolator_coefficients(&fam, 4).unwrap();
        assert_eq!(g[0].components()[0], TruncatedSeries::constant(caps, v));
        assert!(g[1..].iter().all(|gk| gk.components()[0].is_zero()));
    }

    #[test]
    fn formal_coefficients_exponential() {
        let caps = family_caps();
        // e^eps x
        let fam = vec![TruncatedSeries::from_terms(
            caps,
            (0..=6u16).map(|j| {
                (
                    Monomial::new(&[1, j]),
                    Rational::from_integer(factorial(u64::from(j))).recip(),
                )
            }),
        )];
        let g = formal_interpolator_coefficients(&fam, 5).unwrap();
        assert_eq!(g[0].components()[0], TruncatedSeries::var(caps, 0));
        assert!(g[1..].iter().all(|gk| gk.components()[0].is_zero()));
    }

    #[test]
    fn formal_coefficients_quadratic() {
        let caps = family_caps();
        let fam = vec![TruncatedSeries::var(caps, 0)
            .add(&TruncatedSeries::monomial(caps, Monomial::new(&[2, 1]), int(1)))
            .unwrap()];
        let g = formal_interpolator_coefficients(&fam, 3).unwrap();
        assert_eq!(
            g[0].components()[0],
            TruncatedSeries::monomial(caps, Monomial::new(&[2, 0]), int(1))
        );
        assert_eq!(
            g[1].components()[0],
            TruncatedSeries::monomial(caps, Monomial::new(&[3, 0]), int(-1))
        );
    }

    #[test]
    fn formal_coefficients_reject_non_tangent() {
        let caps = family_caps();
        let fam = vec![TruncatedSeries::var(caps, 0).scale(&int(2))];
        assert!(matches!(
            formal_interpolator_coefficients(&fam, 2),
            Err(Error::Domain(_))
        ));
        let fam = vec![TruncatedSeries::var(caps, 0)];
        assert!(matches!(
            formal_interpolator_coefficients(&fam, 7),
            Err(Error::Domain(_))
        ));
    }
}
