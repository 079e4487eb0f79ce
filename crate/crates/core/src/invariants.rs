//! Adiabatic invariants of planar maps from jet interpolating fields.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{domain, structural};
use crate::interpolation::{jet_interpolating_field, InterpolationScheme};
use crate::jet::{
    divergence, hamiltonian_field, homotopy_hamiltonian, Caps, CompiledSeries, JetVectorField,
    Monomial, TruncatedSeries, Valuation,
};
use crate::maps::{compose_maps, invert_jet, jet_iterate, MapSystem};
use crate::rational::{int, rat, Rational};
use crate::Result;

/// Phase valuations of a jet split by the power of the first parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitValuation {
    /// Terms free of the parameter.
    pub pure: Valuation,
    /// Coefficient of `eps^1`.
    pub eps_linear: Valuation,
    /// Coefficients of `eps^k`, `k >= 2`.
    pub eps_higher: Valuation,
}

impl SplitValuation {
    pub fn of(s: &TruncatedSeries) -> Self {
        let caps = s.caps();
        let phase = caps.phase_vars();
        let Some(&eps) = caps.param_vars().first() else {
            return SplitValuation {
                pure: s.valuation(&phase),
                eps_linear: Valuation::Infinite,
                eps_higher: Valuation::Infinite,
            };
        };
        let higher = s.filtered(|m| m.exp(eps) >= 2);
        SplitValuation {
            pure: s.coefficient_of(eps, 0).valuation(&phase),
            eps_linear: s.coefficient_of(eps, 1).valuation(&phase),
            eps_higher: higher.valuation(&phase),
        }
    }

    pub fn of_field(f: &JetVectorField) -> Self {
        f.components()
            .iter()
            .map(SplitValuation::of)
            .reduce(|a, b| SplitValuation {
                pure: a.pure.min(b.pure),
                eps_linear: a.eps_linear.min(b.eps_linear),
                eps_higher: a.eps_higher.min(b.eps_higher),
            })
            .expect("field has components")
    }

    /// Strictly higher in both the pure and the `eps`-linear part.
    pub fn strictly_exceeds(&self, other: &SplitValuation) -> bool {
        self.pure > other.pure && self.eps_linear > other.eps_linear
    }
}

/// Everything the invariant pipeline produces.
#[derive(Clone, Debug)]
pub struct InvariantReport {
    /// Interpolating field of the `base_power`-th iterate.
    pub field: JetVectorField,
    /// Homotopy Hamiltonian of `field`, all computed orders.
    pub hamiltonian: TruncatedSeries,
    /// `hamiltonian ∘ F - hamiltonian` under the original map.
    pub defect: TruncatedSeries,
    pub defect_valuations: SplitValuation,
    /// `field` minus the Hamiltonian field of `hamiltonian`.
    pub non_hamiltonian_valuations: SplitValuation,
    pub divergence: TruncatedSeries,
}

/// Iterates the map jet `base_power` times, builds the interpolating field
/// for `scheme`, extracts its homotopy Hamiltonian and measures the
/// conservation defect under the original (first-iterate) map.
///
/// `inverse` is the inverse jet of the original map, used for negative
/// stencil indices; when absent it is computed by [`invert_jet`].
pub fn extract_invariant(
    map_jet: &[TruncatedSeries],
    inverse: Option<&[TruncatedSeries]>,
    base_power: u32,
    scheme: &InterpolationScheme,
) -> Result<InvariantReport> {
    if map_jet.len() != 2 {
        return Err(domain("invariant extraction is planar: the map jet needs 2 components"));
    }
    if base_power == 0 {
        return Err(domain("base power must be at least 1"));
    }
    let base = jet_iterate(map_jet, base_power)?;
    let base_inv = if scheme.needs_inverse() {
        let inv = match inverse {
            Some(inv) => inv.to_vec(),
            None => invert_jet(map_jet)?,
        };
        Some(jet_iterate(&inv, base_power)?)
    } else {
        None
    };
    let field = jet_interpolating_field(&base, base_inv.as_deref(), scheme)?;
    let hamiltonian = homotopy_hamiltonian(&field)?;
    let defect = conservation_defect(map_jet, &hamiltonian)?;
    let residual = field.sub(&hamiltonian_field(&hamiltonian)?)?;
    Ok(InvariantReport {
        divergence: divergence(&field)?,
        defect_valuations: SplitValuation::of(&defect),
        non_hamiltonian_valuations: SplitValuation::of_field(&residual),
        field,
        hamiltonian,
        defect,
    })
}

/// `h ∘ F - h` as a jet.
pub fn conservation_defect(map_jet: &[TruncatedSeries], h: &TruncatedSeries) -> Result<TruncatedSeries> {
    let image = compose_maps(core::slice::from_ref(h), map_jet)?;
    image[0].sub(h)
}

/// Valuations of `h ∘ f - h` under the first iterate `f`. For the
/// Hamiltonian of an interpolating field of `f^n` these are as high as the
/// truncation allows, even though only `f^n` was used to build it.
pub fn hidden_symmetry_check(map_jet: &[TruncatedSeries], invariant: &TruncatedSeries) -> Result<SplitValuation> {
    Ok(SplitValuation::of(&conservation_defect(map_jet, invariant)?))
}

/// Keeps the terms of total degree at most `total` in all variables
/// (phase and parameters) and of parameter degree at most `param_cap`.
pub fn taylor_truncate(s: &TruncatedSeries, total: u32, param_cap: u32) -> TruncatedSeries {
    let caps = *s.caps();
    let params = caps.param_vars();
    s.filtered(|m| {
        m.total_degree() <= total && params.iter().all(|&p| u32::from(m.exp(p)) <= param_cap)
    })
}

/// Caps of [`htilde2_reference`]: `(x, y)` up to degree 7, `eps` linear.
pub fn htilde2_caps() -> Caps {
    Caps::with_params(2, 7, &[1])
}

/// Order-7 Taylor polynomial (in `x, y, eps`, dropping `eps^2`) of the
/// Hénon adiabatic invariant at the 1:4 resonance, `c = 1 + eps`.
pub fn htilde2_reference() -> TruncatedSeries {
    let t = |a: u16, b: u16, e: u16, c: Rational| (Monomial::new(&[a, b, e]), c);
    let terms = vec![
        // eps^0
        t(2, 2, 0, int(-1)),
        t(4, 1, 0, int(1)),
        t(1, 4, 0, int(-1)),
        t(6, 0, 0, rat(-1, 3)),
        t(3, 3, 0, int(2)),
        t(0, 6, 0, rat(-1, 3)),
        t(2, 5, 0, int(1)),
        t(5, 2, 0, int(-1)),
        // eps (2(x^2 + y^2) + 2xy(y - x))
        t(2, 0, 1, int(2)),
        t(0, 2, 1, int(2)),
        t(1, 2, 1, int(2)),
        t(2, 1, 1, int(-2)),
        // eps (x^2 - y^2)^2
        t(4, 0, 1, int(1)),
        t(2, 2, 1, int(-2)),
        t(0, 4, 1, int(1)),
        // eps (3x^4y - 2x^3y^2 + 2x^2y^3 - 3xy^4)
        t(4, 1, 1, int(3)),
        t(3, 2, 1, int(-2)),
        t(2, 3, 1, int(2)),
        t(1, 4, 1, int(-3)),
        // eps/3 (-4x^6 + 6x^5y - 17x^4y^2 + 24x^3y^3 - 17x^2y^4 + 6xy^5 - 4y^6)
        t(6, 0, 1, rat(-4, 3)),
        t(5, 1, 1, int(2)),
        t(4, 2, 1, rat(-17, 3)),
        t(3, 3, 1, int(8)),
        t(2, 4, 1, rat(-17, 3)),
        t(1, 5, 1, int(2)),
        t(0, 6, 1, rat(-4, 3)),
    ];
    TruncatedSeries::from_terms(htilde2_caps(), terms)
}

/// Monomials where two series differ, with both coefficients.
pub fn coefficient_diff(
    a: &TruncatedSeries,
    b: &TruncatedSeries,
) -> Vec<(Monomial, Rational, Rational)> {
    let mut keys: Vec<Monomial> = a.terms().map(|(m, _)| *m).chain(b.terms().map(|(m, _)| *m)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|m| {
            let (ca, cb) = (a.coefficient(&m), b.coefficient(&m));
            (ca != cb).then_some((m, ca, cb))
        })
        .collect()
}

/// Statistics of `|h(x_k) - h(x_0)|` along an orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftStats {
    pub max: f64,
    pub mean: f64,
    /// Number of iterates actually taken.
    pub steps: usize,
    /// Index of the last finite iterate if the orbit escaped.
    pub escaped_at: Option<i64>,
}

/// Drift of `h` along `steps` iterates of `map` starting at `x0`.
///
/// Phase variables of `h` take the orbit coordinates in order and its
/// parameter variables take `params` in order.
pub fn numeric_drift<M: MapSystem + ?Sized>(
    map: &M,
    h: &TruncatedSeries,
    params: &[f64],
    x0: &[f64],
    steps: usize,
) -> Result<DriftStats> {
    let caps = h.caps();
    let (phase, pvars) = (caps.phase_vars(), caps.param_vars());
    if phase.len() != map.dim() || x0.len() != map.dim() {
        return Err(structural("invariant, map and point dimensions must agree"));
    }
    if pvars.len() != params.len() {
        return Err(structural("one value is needed per parameter variable"));
    }
    let compiled = CompiledSeries::new(h);
    let mut point = vec![0.0; caps.num_vars()];
    for (&v, &p) in pvars.iter().zip(params) {
        point[v] = p;
    }
    let mut eval = |x: &[f64]| {
        for (&v, &c) in phase.iter().zip(x) {
            point[v] = c;
        }
        compiled.eval(&point)
    };
    let h0 = eval(x0);
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; x0.len()];
    let (mut max, mut sum) = (0.0f64, 0.0f64);
    for k in 0..steps {
        map.forward(&cur, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Ok(DriftStats {
                max,
                mean: if k == 0 { 0.0 } else { sum / k as f64 },
                steps: k,
                escaped_at: Some(k as i64),
            });
        }
        core::mem::swap(&mut cur, &mut next);
        let d = (eval(&cur) - h0).abs();
        max = max.max(d);
        sum += d;
    }
    Ok(DriftStats {
        max,
        mean: if steps == 0 { 0.0 } else { sum / steps as f64 },
        steps,
        escaped_at: None,
    })
}

/// Largest absolute coefficient, for quick sanity checks.
pub fn max_abs_coefficient(s: &TruncatedSeries) -> Rational {
    s.terms()
        .map(|(_, c)| if *c < Rational::zero() { -c.clone() } else { c.clone() })
        .max()
        .unwrap_or_else(Rational::zero)
}

impl From<SplitValuation> for [Valuation; 3] {
    fn from(v: SplitValuation) -> Self {
        [v.pure, v.eps_linear, v.eps_higher]
    }
}
