//! JSON form of truncated series.
//!
//! ```json
//! { "vars": ["x", "y", "eps"], "cap_total": 8, "cap_per_var": [null, null, 1],
//!   "terms": [ { "exp": [2, 2, 0], "num": "-1", "den": "1" } ] }
//! ```
//!
//! `cap_per_var` is `null` for phase variables (bounded jointly by
//! `cap_total`) and an integer for parameters. Coefficients are decimal
//! strings of arbitrary length.

use std::collections::BTreeSet;
use std::str::FromStr;

use discavg_core::jet::{default_var_names, Caps, Monomial, TruncatedSeries, MAX_VARS};
use discavg_core::rational::Rational;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub vars: Vec<String>,
    pub cap_total: u32,
    pub cap_per_var: Vec<Option<u32>>,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u16>,
    pub num: String,
    pub den: String,
}

impl SeriesJson {
    pub fn from_series(s: &TruncatedSeries) -> Self {
        Self::with_names(s, default_var_names(s.caps()))
    }

    pub fn with_names(s: &TruncatedSeries, vars: Vec<String>) -> Self {
        let caps = s.caps();
        let n = caps.num_vars();
        SeriesJson {
            vars,
            cap_total: caps.total(),
            cap_per_var: caps.per_var().to_vec(),
            terms: s
                .terms()
                .map(|(m, c)| TermJson {
                    exp: m.exps()[..n].to_vec(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
    }

    pub fn to_series(&self) -> Result<TruncatedSeries, CliError> {
        let n = self.vars.len();
        if n == 0 || n > MAX_VARS {
            return Err(bad(format!("series needs 1..={MAX_VARS} variables, got {n}")));
        }
        if self.cap_per_var.len() != n {
            return Err(bad("cap_per_var must have one entry per variable"));
        }
        let caps = Caps::from_parts(self.cap_total, &self.cap_per_var).map_err(|e| bad(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.exp.len() != n {
                return Err(bad(format!("term exponent {:?} has the wrong length", t.exp)));
            }
            let m = Monomial::new(&t.exp);
            if !caps.admits(&m) {
                return Err(bad(format!("term {:?} exceeds the caps", t.exp)));
            }
            if !seen.insert(t.exp.clone()) {
                return Err(bad(format!("duplicate term {:?}", t.exp)));
            }
            let num = parse_int(&t.num)?;
            let den = parse_int(&t.den)?;
            if den.is_zero() {
                return Err(bad(format!("zero denominator in term {:?}", t.exp)));
            }
            terms.push((m, Rational::new(num, den)));
        }
        Ok(TruncatedSeries::from_terms(caps, terms))
    }
}

fn parse_int(s: &str) -> Result<BigInt, CliError> {
    BigInt::from_str(s.trim()).map_err(|_| bad(format!("not an integer: {s:?}")))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Format(format!("invalid series JSON: {}", msg.into()))
}

pub fn to_string(s: &TruncatedSeries) -> String {
    serde_json::to_string_pretty(&SeriesJson::from_series(s)).expect("series JSON serializes")
}

pub fn from_str(text: &str) -> Result<TruncatedSeries, CliError> {
    serde_json::from_str::<SeriesJson>(text)?.to_series()
}
