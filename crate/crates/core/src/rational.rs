//! Exact rational coefficients and float lifting.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Denominator bound used when lifting float parameters into jets.
pub const DEFAULT_LIFT_DENOMINATOR: u64 = 1_000_000_000_000;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A float replaced by a nearby rational, together with `|value - x|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lifted {
    pub value: Rational,
    pub error: f64,
}

/// Best continued-fraction convergent of `x` whose denominator does not
/// exceed `max_den`.
pub fn lift_f64(x: f64, max_den: u64) -> Option<Lifted> {
    let exact = Rational::from_float(x)?;
    let limit = BigInt::from(max_den.max(1));

    // convergents p/q of the continued fraction of `exact`
    let (mut p_prev, mut p) = (BigInt::zero(), BigInt::one());
    let (mut q_prev, mut q) = (BigInt::one(), BigInt::zero());
    let mut rem = exact.clone();
    let mut best = Rational::from_integer(exact.floor().to_integer());
    loop {
        let a = rem.floor().to_integer();
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        if q_next > limit {
            break;
        }
        best = Rational::new(p_next.clone(), q_next.clone());
        p_prev = core::mem::replace(&mut p, p_next);
        q_prev = core::mem::replace(&mut q, q_next);
        let frac = &rem - Rational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rem = frac.recip();
    }
    let error = to_f64(&(&best - &exact).abs());
    Some(Lifted { value: best, error })
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc = acc.div_floor(&BigInt::from(i + 1));
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}
