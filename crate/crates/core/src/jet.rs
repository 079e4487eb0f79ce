//! Exact truncated multivariate power series ("jets").
//!
//! Variables come in two kinds. Phase variables share a total-degree cap.
//! Parameter variables (such as a small parameter `eps`) are excluded from
//! the total degree and carry an individual cap instead, so a series can
//! hold, for example, all terms of `(x, y)`-degree at most 10 and
//! `eps`-degree at most 2. Both kinds of truncation are ideals for the
//! operations below, so every stored coefficient is exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{domain, structural};
use crate::rational::{to_f64, Rational};
use crate::Result;

/// Largest number of variables a series may carry.
pub const MAX_VARS: usize = 6;

/// Exponent vector. Unused trailing slots are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial([u16; MAX_VARS]);

impl Monomial {
    pub fn new(exps: &[u16]) -> Self {
        assert!(exps.len() <= MAX_VARS, "too many variables");
        let mut m = [0u16; MAX_VARS];
        m[..exps.len()].copy_from_slice(exps);
        Monomial(m)
    }

    pub fn one() -> Self {
        Monomial([0; MAX_VARS])
    }

    pub fn var(i: usize) -> Self {
        let mut m = [0u16; MAX_VARS];
        m[i] = 1;
        Monomial(m)
    }

    pub fn exps(&self) -> &[u16; MAX_VARS] {
        &self.0
    }

    pub fn exp(&self, var: usize) -> u16 {
        self.0[var]
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        vars.iter().map(|&v| u32::from(self.0[v])).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut m = self.0;
        for (a, b) in m.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        Monomial(m)
    }

    fn with_exp(&self, var: usize, e: u16) -> Monomial {
        let mut m = self.0;
        m[var] = e;
        Monomial(m)
    }
}

/// Graded order: total degree first, then exponents of the leading
/// variables descending (`x^2 < x*y < y^2`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lowest degree present in a series, or `Infinite` for the zero series.
///
/// `Infinite` on a truncated series means "nothing below the cap".
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn is_at_least(self, k: u32) -> bool {
        match self {
            Valuation::Finite(v) => v >= k,
            Valuation::Infinite => true,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Truncation caps of a series.
///
/// A variable with `per_var == None` is a phase variable and counts towards
/// the total degree. A variable with `per_var == Some(c)` is a parameter:
/// it is excluded from the total degree and its own exponent is capped at
/// `c`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct Caps {
    num_vars: usize,
    total: u32,
    per_var: [Option<u32>; MAX_VARS],
}

impl Caps {
    /// `num_phase` phase variables, no parameters.
    pub fn phase(num_phase: usize, total: u32) -> Self {
        Self::with_params(num_phase, total, &[])
    }

    /// Phase variables first, then one parameter per entry of `param_caps`.
    pub fn with_params(num_phase: usize, total: u32, param_caps: &[u32]) -> Self {
        let num_vars = num_phase + param_caps.len();
        assert!((1..=MAX_VARS).contains(&num_vars), "unsupported variable count");
        let mut per_var = [None; MAX_VARS];
        for (slot, &c) in per_var[num_phase..].iter_mut().zip(param_caps) {
            *slot = Some(c);
        }
        Caps {
            num_vars,
            total,
            per_var,
        }
    }

    pub fn from_parts(total: u32, per_var: &[Option<u32>]) -> Result<Self> {
        if per_var.is_empty() || per_var.len() > MAX_VARS {
            return Err(structural(format!(
                "series must have 1..={MAX_VARS} variables, got {}",
                per_var.len()
            )));
        }
        let mut slots = [None; MAX_VARS];
        slots[..per_var.len()].copy_from_slice(per_var);
        Ok(Caps {
            num_vars: per_var.len(),
            total,
            per_var: slots,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn per_var(&self) -> &[Option<u32>] {
        &self.per_var[..self.num_vars]
    }

    pub fn is_param(&self, var: usize) -> bool {
        self.per_var[var].is_some()
    }

    pub fn phase_vars(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&v| !self.is_param(v)).collect()
    }

    pub fn param_vars(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&v| self.is_param(v)).collect()
    }

    pub fn phase_degree(&self, m: &Monomial) -> u32 {
        (0..self.num_vars)
            .filter(|&v| self.per_var[v].is_none())
            .map(|v| u32::from(m.0[v]))
            .sum()
    }

    fn params_ok(&self, m: &Monomial) -> bool {
        (0..self.num_vars).all(|v| match self.per_var[v] {
            Some(c) => u32::from(m.0[v]) <= c,
            None => true,
        })
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        m.0[self.num_vars..].iter().all(|&e| e == 0)
            && self.phase_degree(m) <= self.total
            && self.params_ok(m)
    }

    /// Componentwise minimum. Variable roles must agree.
    pub fn meet(&self, other: &Caps) -> Result<Caps> {
        if self.num_vars != other.num_vars {
            return Err(structural(format!(
                "variable count mismatch: {} vs {}",
                self.num_vars, other.num_vars
            )));
        }
        let mut per_var = [None; MAX_VARS];
        for (v, slot) in per_var.iter_mut().enumerate().take(self.num_vars) {
            *slot = match (self.per_var[v], other.per_var[v]) {
                (None, None) => None,
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => {
                    return Err(structural(format!(
                        "variable {v} is a parameter in one series only"
                    )))
                }
            };
        }
        Ok(Caps {
            num_vars: self.num_vars,
            total: self.total.min(other.total),
            per_var,
        })
    }

    /// Same roles, lowered total and parameter caps.
    pub fn lowered(&self, total: u32, param_cap: Option<u32>) -> Caps {
        let mut c = *self;
        c.total = c.total.min(total);
        if let Some(pc) = param_cap {
            for slot in c.per_var[..c.num_vars].iter_mut().flatten() {
                *slot = (*slot).min(pc);
            }
        }
        c
    }

    /// Same roles with the phase total raised by one; undoes a phase
    /// derivative's loss of one order.
    pub fn raised_phase(&self) -> Caps {
        let mut c = *self;
        c.total += 1;
        c
    }

    fn lowered_for(&self, var: usize) -> Caps {
        let mut c = *self;
        match c.per_var[var] {
            Some(p) => c.per_var[var] = Some(p.saturating_sub(1)),
            None => c.total = c.total.saturating_sub(1),
        }
        c
    }
}

/// Default names: `x, y, z, w` for phase variables, `eps`, `eps1`, ... for
/// parameters.
pub fn default_var_names(caps: &Caps) -> Vec<String> {
    const PHASE: [&str; 4] = ["x", "y", "z", "w"];
    let mut names = Vec::with_capacity(caps.num_vars());
    let (mut np, mut ne) = (0, 0);
    for v in 0..caps.num_vars() {
        if caps.is_param(v) {
            names.push(if ne == 0 {
                "eps".to_string()
            } else {
                format!("eps{ne}")
            });
            ne += 1;
        } else {
            names.push(
                PHASE
                    .get(np)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("x{np}")),
            );
            np += 1;
        }
    }
    names
}

/// Exact multivariate polynomial truncated by [`Caps`].
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    caps: Caps,
    terms: BTreeMap<Monomial, Rational>,
}

/// Equality is structural on the term maps.
impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.caps.num_vars == other.caps.num_vars && self.terms == other.terms
    }
}

impl Eq for TruncatedSeries {}

impl TruncatedSeries {
    pub fn zero(caps: Caps) -> Self {
        TruncatedSeries {
            caps,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(caps: Caps, c: Rational) -> Self {
        Self::monomial(caps, Monomial::one(), c)
    }

    pub fn one(caps: Caps) -> Self {
        Self::constant(caps, Rational::one())
    }

    pub fn var(caps: Caps, var: usize) -> Self {
        assert!(var < caps.num_vars(), "variable index out of range");
        Self::monomial(caps, Monomial::var(var), Rational::one())
    }

    /// Single term; dropped if zero or outside the caps.
    pub fn monomial(caps: Caps, m: Monomial, c: Rational) -> Self {
        let mut s = Self::zero(caps);
        if !c.is_zero() && caps.admits(&m) {
            s.terms.insert(m, c);
        }
        s
    }

    /// Builds a series from `(exponents, coefficient)` pairs, summing
    /// duplicates and discarding terms outside the caps.
    pub fn from_terms<I>(caps: Caps, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut map: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in terms {
            if caps.admits(&m) {
                accumulate(&mut map, m, c);
            }
        }
        Self::canonical(caps, map)
    }

    fn canonical(caps: Caps, mut terms: BTreeMap<Monomial, Rational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        TruncatedSeries { caps, terms }
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn num_vars(&self) -> usize {
        self.caps.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    /// Re-truncates to caps no larger than the current ones.
    pub fn truncated(&self, caps: Caps) -> Result<Self> {
        let caps = self.caps.meet(&caps)?;
        Ok(self.filtered_with_caps(caps, |_| true))
    }

    /// Moves the stored polynomial to `caps`, treating it as exact: terms
    /// `caps` does not admit are dropped and nothing is assumed about the
    /// orders the old caps cut off.
    pub fn recapped(&self, caps: Caps) -> Result<Self> {
        self.caps.meet(&caps)?;
        Ok(self.filtered_with_caps(caps, |_| true))
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        self.filtered_with_caps(self.caps, keep)
    }

    fn filtered_with_caps(&self, caps: Caps, keep: impl Fn(&Monomial) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| caps.admits(m) && keep(m))
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        TruncatedSeries { caps, terms }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let caps = self.caps.meet(&other.caps)?;
        let mut terms: BTreeMap<Monomial, Rational> = self
            .terms
            .iter()
            .filter(|(m, _)| caps.admits(m))
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        for (m, c) in other.terms.iter().filter(|(m, _)| caps.admits(m)) {
            accumulate(&mut terms, *m, c.clone());
        }
        Ok(Self::canonical(caps, terms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries {
            caps: self.caps,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero(self.caps);
        }
        TruncatedSeries {
            caps: self.caps,
            terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect(),
        }
    }

    /// Product with every term outside the (common) caps discarded.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let caps = self.caps.meet(&other.caps)?;
        let total = caps.total as usize;
        // bucket the right factor by phase degree so that pairs exceeding the
        // total cap are never visited
        let mut buckets: Vec<Vec<(&Monomial, &Rational)>> = vec![Vec::new(); total + 1];
        for (m, c) in &other.terms {
            let d = caps.phase_degree(m) as usize;
            if d <= total && caps.params_ok(m) {
                buckets[d].push((m, c));
            }
        }
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            let da = caps.phase_degree(ma) as usize;
            if da > total || !caps.params_ok(ma) {
                continue;
            }
            for bucket in &buckets[..=total - da] {
                for (mb, cb) in bucket {
                    let m = ma.times(mb);
                    if caps.params_ok(&m) {
                        accumulate(&mut terms, m, ca * *cb);
                    }
                }
            }
        }
        Ok(Self::canonical(caps, terms))
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::one(self.caps);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Substitutes `inner[i]` for variable `i`.
    ///
    /// Every inner series must live in the same variable space as `self`.
    /// Inner series with a nonzero constant term are rejected unless
    /// `allow_constant` is set; in that case the result is the composition
    /// of the stored (already truncated) polynomial, which matches the
    /// composition of the underlying series only where higher terms of
    /// `self` cannot reach.
    pub fn compose(&self, inner: &[TruncatedSeries], allow_constant: bool) -> Result<Self> {
        if inner.len() != self.num_vars() {
            return Err(structural(format!(
                "compose needs {} inner series, got {}",
                self.num_vars(),
                inner.len()
            )));
        }
        let mut caps = self.caps;
        for s in inner {
            caps = caps.meet(&s.caps)?;
        }
        if !allow_constant {
            if let Some(i) = inner.iter().position(|s| !s.constant_term().is_zero()) {
                return Err(domain(format!(
                    "inner series {i} has a nonzero constant term"
                )));
            }
        }
        let inner: Vec<TruncatedSeries> = inner
            .iter()
            .map(|s| s.filtered_with_caps(caps, |_| true))
            .collect();
        let terms: Vec<(Monomial, Rational)> = self
            .terms
            .iter()
            .filter(|(m, _)| caps.admits(m))
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        horner(&terms, 0, &inner, caps)
    }

    /// Smallest total degree in `vars` among the stored terms.
    pub fn valuation(&self, vars: &[usize]) -> Valuation {
        self.terms
            .keys()
            .map(|m| m.degree_in(vars))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }

    /// Valuation in the phase variables.
    pub fn phase_valuation(&self) -> Valuation {
        self.valuation(&self.caps.phase_vars())
    }

    /// Partial derivative. Lowers the matching cap by one.
    pub fn derivative(&self, var: usize) -> Self {
        let caps = self.caps.lowered_for(var);
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[var] > 0)
            .map(|(m, c)| {
                let e = m.0[var];
                (m.with_exp(var, e - 1), c * Rational::from_integer(BigInt::from(e)))
            })
            .filter(|(m, _)| caps.admits(m))
            .collect();
        TruncatedSeries { caps, terms }
    }

    /// Coefficient of `var^power`, as a series with `var` set to zero.
    pub fn coefficient_of(&self, var: usize, power: u16) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[var] == power)
            .map(|(m, c)| (m.with_exp(var, 0), c.clone()))
            .collect();
        TruncatedSeries {
            caps: self.caps,
            terms,
        }
    }

    /// Substitutes a rational value for one variable.
    pub fn substitute_value(&self, var: usize, value: &Rational) -> Self {
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[var];
            let factor = num_traits::pow(value.clone(), e as usize);
            accumulate(&mut terms, m.with_exp(var, 0), c * factor);
        }
        Self::canonical(self.caps, terms)
    }

    /// Largest stored exponent of `var`.
    pub fn max_exp(&self, var: usize) -> u16 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    /// Double-precision value at `point` (one entry per variable).
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        CompiledSeries::new(self).eval(point)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (v, &e) in m.0[..self.num_vars()].iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[v].clone()),
                    _ => factors.push(format!("{}^{}", names[v], e)),
                }
            }
            if factors.is_empty() || !abs.is_one() {
                factors.insert(0, abs.to_string());
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&default_var_names(&self.caps)))
    }
}

fn accumulate(map: &mut BTreeMap<Monomial, Rational>, m: Monomial, c: Rational) {
    match map.get_mut(&m) {
        Some(slot) => *slot += c,
        None => {
            map.insert(m, c);
        }
    }
}

/// Nested Horner evaluation of `terms` in the variables `var..`.
fn horner(
    terms: &[(Monomial, Rational)],
    var: usize,
    inner: &[TruncatedSeries],
    caps: Caps,
) -> Result<TruncatedSeries> {
    if terms.is_empty() {
        return Ok(TruncatedSeries::zero(caps));
    }
    if var == inner.len() {
        let c = terms
            .iter()
            .fold(Rational::zero(), |acc, (_, c)| acc + c);
        return Ok(TruncatedSeries::constant(caps, c));
    }
    let mut groups: BTreeMap<u16, Vec<(Monomial, Rational)>> = BTreeMap::new();
    for (m, c) in terms {
        groups.entry(m.0[var]).or_default().push((*m, c.clone()));
    }
    let mut acc = TruncatedSeries::zero(caps);
    let mut prev: Option<u16> = None;
    for (&e, group) in groups.iter().rev() {
        if let Some(p) = prev {
            acc = acc.mul(&inner[var].pow(u32::from(p - e))?)?;
        }
        acc = acc.add(&horner(group, var + 1, inner, caps)?)?;
        prev = Some(e);
    }
    if let Some(p) = prev {
        if p > 0 {
            acc = acc.mul(&inner[var].pow(u32::from(p))?)?;
        }
    }
    Ok(acc)
}

/// Series lowered to `f64` coefficients for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledSeries {
    num_vars: usize,
    max_exp: [usize; MAX_VARS],
    terms: Vec<([u16; MAX_VARS], f64)>,
}

impl CompiledSeries {
    pub fn new(s: &TruncatedSeries) -> Self {
        let mut max_exp = [0usize; MAX_VARS];
        for (v, slot) in max_exp.iter_mut().enumerate() {
            *slot = usize::from(s.max_exp(v));
        }
        CompiledSeries {
            num_vars: s.num_vars(),
            max_exp,
            terms: s.terms.iter().map(|(m, c)| (m.0, to_f64(c))).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.num_vars, "point dimension mismatch");
        let mut powers: [Vec<f64>; MAX_VARS] = Default::default();
        for v in 0..self.num_vars {
            let mut p = Vec::with_capacity(self.max_exp[v] + 1);
            let mut acc = 1.0;
            for _ in 0..=self.max_exp[v] {
                p.push(acc);
                acc *= point[v];
            }
            powers[v] = p;
        }
        self.terms
            .iter()
            .map(|(e, c)| {
                (0..self.num_vars).fold(*c, |acc, v| acc * powers[v][usize::from(e[v])])
            })
            .sum()
    }
}

/// One series per phase dimension, all with identical caps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetVectorField {
    components: Vec<TruncatedSeries>,
}

impl JetVectorField {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| structural("vector field needs at least one component"))?;
        let caps = *first.caps();
        if components.iter().any(|c| *c.caps() != caps) {
            return Err(structural("vector field components must share caps"));
        }
        Ok(JetVectorField { components })
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn into_components(self) -> Vec<TruncatedSeries> {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn caps(&self) -> &Caps {
        self.components[0].caps()
    }

    pub fn sub(&self, other: &JetVectorField) -> Result<JetVectorField> {
        if self.dim() != other.dim() {
            return Err(structural("vector field dimension mismatch"));
        }
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        JetVectorField::new(comps)
    }

    /// Minimum of the component valuations in `vars`.
    pub fn valuation(&self, vars: &[usize]) -> Valuation {
        self.components
            .iter()
            .map(|c| c.valuation(vars))
            .min()
            .unwrap_or(Valuation::Infinite)
    }
}

fn planar_phase_vars(caps: &Caps) -> Result<(usize, usize)> {
    match caps.phase_vars().as_slice() {
        [x, y] => Ok((*x, *y)),
        other => Err(domain(format!(
            "planar operation needs 2 phase variables, got {}",
            other.len()
        ))),
    }
}

/// `h(x, y) = ∫₀¹ X(tx, ty)·(y, -x) dt` on a planar field. Parameters are
/// passive: they are not scaled by `t`. A field known through degree `N`
/// determines `h` through degree `N + 1`, so the result carries one more
/// phase order than the field.
pub fn homotopy_hamiltonian(field: &JetVectorField) -> Result<TruncatedSeries> {
    if field.dim() != 2 {
        return Err(domain(format!(
            "homotopy integral needs 2 components, got {}",
            field.dim()
        )));
    }
    let caps = field.caps().raised_phase();
    let (xv, yv) = planar_phase_vars(&caps)?;
    let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
    for (comp, (shift, sign)) in field.components.iter().zip([(yv, 1i64), (xv, -1)]) {
        for (m, c) in comp.terms() {
            let deg = u32::from(m.0[xv]) + u32::from(m.0[yv]);
            let weight = Rational::new(BigInt::from(sign), BigInt::from(deg + 1));
            let out = m.with_exp(shift, m.0[shift] + 1);
            if caps.admits(&out) {
                accumulate(&mut terms, out, c * weight);
            }
        }
    }
    Ok(TruncatedSeries::canonical(caps, terms))
}

/// Hamiltonian field `(∂h/∂y, -∂h/∂x)` of a planar series.
pub fn hamiltonian_field(h: &TruncatedSeries) -> Result<JetVectorField> {
    let (xv, yv) = planar_phase_vars(h.caps())?;
    JetVectorField::new(vec![h.derivative(yv), h.derivative(xv).neg()])
}

/// Sum of `∂X^i/∂x_i` over the phase variables.
pub fn divergence(field: &JetVectorField) -> Result<TruncatedSeries> {
    let phase = field.caps().phase_vars();
    if phase.len() != field.dim() {
        return Err(structural(format!(
            "divergence needs {} components, got {}",
            phase.len(),
            field.dim()
        )));
    }
    let mut acc = TruncatedSeries::zero(field.caps().lowered_for(phase[0]));
    for (comp, &v) in field.components.iter().zip(&phase) {
        acc = acc.add(&comp.derivative(v))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn xy(total: u32) -> Caps {
        Caps::phase(2, total)
    }

    fn x(c: Caps) -> TruncatedSeries {
        TruncatedSeries::var(c, 0)
    }

    fn y(c: Caps) -> TruncatedSeries {
        TruncatedSeries::var(c, 1)
    }

    fn mono(c: Caps, e: &[u16], k: Rational) -> TruncatedSeries {
        TruncatedSeries::monomial(c, Monomial::new(e), k)
    }

    #[test]
    fn add_cancels() {
        let c = xy(4);
        let a = x(c).add(&y(c)).unwrap();
        let b = x(c).sub(&y(c)).unwrap();
        assert_eq!(a.add(&b).unwrap(), x(c).scale(&int(2)));
        assert_eq!(a.add(&TruncatedSeries::zero(c)).unwrap(), a);
        let third = mono(c, &[2, 0], rat(1, 3));
        let two_thirds = mono(c, &[2, 0], rat(2, 3));
        assert_eq!(third.add(&two_thirds).unwrap(), mono(c, &[2, 0], int(1)));
    }

    #[test]
    fn add_uses_smaller_cap() {
        let a = mono(xy(5), &[4, 0], int(1));
        let b = x(xy(3));
        let s = a.add(&b).unwrap();
        assert_eq!(s.caps().total(), 3);
        assert_eq!(s, x(xy(3)));
    }

    #[test]
    fn mismatched_vars_is_structural() {
        let a = x(xy(3));
        let b = TruncatedSeries::var(Caps::phase(3, 3), 0);
        assert!(matches!(a.add(&b), Err(crate::Error::Structural(_))));
        assert!(matches!(a.mul(&b), Err(crate::Error::Structural(_))));
        let e = TruncatedSeries::var(Caps::with_params(1, 3, &[1]), 0);
        assert!(matches!(a.add(&e), Err(crate::Error::Structural(_))));
    }

    #[test]
    fn mul_examples() {
        let c = xy(2);
        assert_eq!(x(c).mul(&y(c)).unwrap(), mono(c, &[1, 1], int(1)));
        let one = TruncatedSeries::one(c);
        let p = one.add(&x(c)).unwrap().mul(&one.sub(&x(c)).unwrap()).unwrap();
        assert_eq!(p, one.sub(&mono(c, &[2, 0], int(1))).unwrap());
        let xn = mono(c, &[2, 0], int(1));
        assert!(xn.mul(&x(c)).unwrap().is_zero());
    }

    #[test]
    fn parameter_cap_is_separate_from_total() {
        let c = Caps::with_params(2, 2, &[1]);
        let eps = TruncatedSeries::var(c, 2);
        let x2 = mono(c, &[2, 0, 0], int(1));
        // eps*x^2 has phase degree 2: kept
        assert_eq!(eps.mul(&x2).unwrap(), mono(c, &[2, 0, 1], int(1)));
        // eps^2 exceeds the parameter cap
        assert!(eps.mul(&eps).unwrap().is_zero());
    }

    #[test]
    fn compose_examples() {
        let c = xy(4);
        let outer = mono(c, &[2, 0], int(1));
        let inner = [x(c).add(&y(c)).unwrap(), y(c)];
        let expect = TruncatedSeries::from_terms(
            c,
            [
                (Monomial::new(&[2, 0]), int(1)),
                (Monomial::new(&[1, 1]), int(2)),
                (Monomial::new(&[0, 2]), int(1)),
            ],
        );
        assert_eq!(outer.compose(&inner, false).unwrap(), expect);

        let f = x(c).mul(&y(c)).unwrap().add(&mono(c, &[3, 0], rat(1, 2))).unwrap();
        assert_eq!(x(c).compose(&[f.clone(), y(c)], false).unwrap(), f);
    }

    #[test]
    fn compose_rejects_constants_unless_permitted() {
        let c = xy(3);
        let shifted = TruncatedSeries::one(c).add(&x(c)).unwrap();
        let outer = mono(c, &[2, 0], int(1));
        assert!(matches!(
            outer.compose(&[shifted.clone(), y(c)], false),
            Err(crate::Error::Domain(_))
        ));
        let r = outer.compose(&[shifted, y(c)], true).unwrap();
        // (1 + x)^2
        assert_eq!(r.coefficient(&Monomial::one()), int(1));
        assert_eq!(r.coefficient(&Monomial::new(&[1, 0])), int(2));
        assert_eq!(r.coefficient(&Monomial::new(&[2, 0])), int(1));
        assert!(matches!(
            outer.compose(&[x(c)], false),
            Err(crate::Error::Structural(_))
        ));
    }

    #[test]
    fn valuation_examples() {
        let c = Caps::with_params(2, 6, &[2]);
        let s = mono(c, &[3, 1, 0], int(1))
            .add(&mono(c, &[5, 0, 0], int(1)))
            .unwrap();
        assert_eq!(s.valuation(&[0, 1]), Valuation::Finite(4));
        assert_eq!(TruncatedSeries::zero(c).valuation(&[0, 1]), Valuation::Infinite);
        let e = mono(c, &[2, 0, 1], int(1));
        assert_eq!(e.valuation(&[0, 1]), Valuation::Finite(2));
        assert_eq!(e.valuation(&[0, 1, 2]), Valuation::Finite(3));
    }

    #[test]
    fn homotopy_examples() {
        let c = xy(4);
        let osc = JetVectorField::new(vec![y(c), x(c).neg()]).unwrap();
        let h = homotopy_hamiltonian(&osc).unwrap();
        assert_eq!(h.caps().total(), 5);
        let expect = mono(xy(5), &[2, 0], rat(1, 2))
            .add(&mono(xy(5), &[0, 2], rat(1, 2)))
            .unwrap();
        assert_eq!(h, expect);
        let zero = JetVectorField::new(vec![TruncatedSeries::zero(c); 2]).unwrap();
        assert!(homotopy_hamiltonian(&zero).unwrap().is_zero());
        let bad = JetVectorField::new(vec![x(Caps::phase(3, 2)); 3]).unwrap();
        assert!(matches!(homotopy_hamiltonian(&bad), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn divergence_examples() {
        let c = xy(4);
        let f = JetVectorField::new(vec![x(c), y(c).neg()]).unwrap();
        assert!(divergence(&f).unwrap().is_zero());
        let g = JetVectorField::new(vec![mono(c, &[2, 0], int(1)), TruncatedSeries::zero(c)])
            .unwrap();
        let d = divergence(&g).unwrap();
        assert_eq!(d, x(c).scale(&int(2)));
        assert_eq!(d.caps().total(), 3);
    }

    #[test]
    fn derivative_lowers_caps() {
        let c = Caps::with_params(2, 3, &[2]);
        let s = mono(c, &[1, 1, 2], int(3));
        let dx = s.derivative(0);
        assert_eq!(dx, mono(c, &[0, 1, 2], int(3)));
        assert_eq!(dx.caps().total(), 2);
        let de = s.derivative(2);
        assert_eq!(de.caps().per_var()[2], Some(1));
        assert_eq!(de.coefficient(&Monomial::new(&[1, 1, 1])), int(6));
    }

    #[test]
    fn display_and_eval() {
        let c = Caps::with_params(2, 4, &[1]);
        let s = mono(c, &[2, 2, 0], int(-1))
            .add(&mono(c, &[4, 2, 1], rat(-17, 3)))
            .unwrap()
            .add(&mono(c, &[0, 0, 0], int(2)))
            .unwrap();
        // x^4*y^2*eps exceeds the total cap
        assert_eq!(s.to_string(), "2 - x^2*y^2");
        assert!((s.eval_f64(&[0.5, 2.0, 0.1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn substitute_and_coefficients() {
        let c = Caps::with_params(1, 3, &[2]);
        let s = mono(c, &[1, 0], int(1))
            .add(&mono(c, &[1, 1], int(2)))
            .unwrap()
            .add(&mono(c, &[2, 2], int(3)))
            .unwrap();
        assert_eq!(s.coefficient_of(1, 1), mono(c, &[1, 0], int(2)));
        let v = s.substitute_value(1, &rat(1, 2));
        assert_eq!(v.coefficient(&Monomial::new(&[1, 0])), int(2));
        assert_eq!(v.coefficient(&Monomial::new(&[2, 0])), rat(3, 4));
    }
}
