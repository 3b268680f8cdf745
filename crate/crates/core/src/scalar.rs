//! Coefficient rings used throughout the crate.
//!
//! Arithmetic is exposed through named methods rather than operator traits so
//! that generic code can work with borrowed values without higher-ranked
//! bounds.

use std::fmt::Debug;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::Cyclotomic;

/// A commutative ring with unit.
pub trait Ring: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn from_int(n: i64) -> Self;

    fn add_to(&mut self, other: &Self) {
        *self = self.plus(other);
    }

    /// Equality up to rounding for floating rings, exact otherwise.
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn sub_from(&mut self, other: &Self) {
        *self = self.minus(other);
    }
}

/// A ring in which every nonzero element is invertible.
pub trait Field: Ring {
    fn inv(&self) -> Option<Self>;

    fn over(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.times(&i))
    }
}

/// Field of scalars: either complex doubles or exact cyclotomic numbers.
pub trait Scalar: Field {
    /// True for exact arithmetic, where zero tests are decisive.
    const EXACT: bool;

    fn to_c64(&self) -> Complex64;
    fn conj(&self) -> Self;
    /// Converts a complex double. Exact scalars take the exact binary value.
    fn from_c64(c: Complex64) -> Self;
    fn from_ratio(r: &Ratio<i128>) -> Self;
    /// `exp(2 pi i t)`.
    fn root_of_unity(t: &Turn) -> Result<Self, ScalarError>;

    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Zero test: exact for exact scalars, `|x| <= tol` otherwise.
    fn negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.modulus() <= tol
        }
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ScalarError {
    #[error("exact arithmetic needs a rational angle, got {0}")]
    IrrationalAngle(f64),
    #[error("root of unity of order {0} exceeds the supported bound {1}")]
    OrderTooLarge(u64, u64),
}

/// An angle measured in turns, so that `t = exp(2 pi i * turn)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Turn {
    Exact(RationalTurn),
    Real(f64),
}

/// Serialized as the string `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalTurn(pub Ratio<i128>);

impl Serialize for RationalTurn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
    }
}

impl<'de> Deserialize<'de> for RationalTurn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s)
            .map(RationalTurn)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid rational '{s}'")))
    }
}

/// Parses `"p/q"` or an integer.
pub fn parse_ratio(s: &str) -> Option<Ratio<i128>> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i128 = p.trim().parse().ok()?;
            let q: i128 = q.trim().parse().ok()?;
            if q == 0 {
                None
            } else {
                Some(Ratio::new(p, q))
            }
        }
        None => s.parse::<i128>().ok().map(Ratio::from_integer),
    }
}

impl Turn {
    pub fn rational(p: i128, q: i128) -> Self {
        Turn::Exact(RationalTurn(Ratio::new(p, q)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Turn::Exact(r) => ratio_to_f64(&r.0),
            Turn::Real(x) => *x,
        }
    }

    pub fn as_ratio(&self) -> Option<&Ratio<i128>> {
        match self {
            Turn::Exact(r) => Some(&r.0),
            Turn::Real(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Turn::Exact(_))
    }

    /// Representative in `[0, 1)`.
    pub fn reduced(&self) -> Turn {
        match self {
            Turn::Exact(r) => {
                let fl = r.0.floor();
                Turn::Exact(RationalTurn(r.0 - fl))
            }
            Turn::Real(x) => {
                let y = x - x.floor();
                Turn::Real(if y >= 1.0 { 0.0 } else { y })
            }
        }
    }

    pub fn plus(&self, other: &Turn) -> Turn {
        match (self, other) {
            (Turn::Exact(a), Turn::Exact(b)) => Turn::Exact(RationalTurn(a.0 + b.0)),
            _ => Turn::Real(self.to_f64() + other.to_f64()),
        }
    }

    pub fn scaled(&self, k: i64) -> Turn {
        match self {
            Turn::Exact(a) => Turn::Exact(RationalTurn(a.0 * Ratio::from_integer(k as i128))),
            Turn::Real(x) => Turn::Real(x * k as f64),
        }
    }

    /// Distance to the nearest integer, in `[0, 1/2]`.
    pub fn circle_distance(&self) -> f64 {
        match self.reduced() {
            Turn::Exact(r) => {
                let half = Ratio::new(1, 2);
                let d = if r.0 > half {
                    Ratio::from_integer(1) - r.0
                } else {
                    r.0
                };
                ratio_to_f64(&d)
            }
            Turn::Real(x) => x.min(1.0 - x),
        }
    }

    /// Exact test for an integer value; real turns are never decided here.
    pub fn is_integer(&self) -> Option<bool> {
        self.as_ratio().map(|r| r.is_integer())
    }
}

pub fn ratio_to_f64(r: &Ratio<i128>) -> f64 {
    // Split off the integer part to keep precision for huge denominators.
    let fl = r.floor();
    let frac = r - fl;
    let ip = fl.to_integer() as f64;
    let n = *frac.numer();
    let d = *frac.denom();
    let fp = if d.abs() < (1i128 << 100) {
        n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(1.0)
    } else {
        let scale = d / (1i128 << 60);
        (n / scale).to_f64().unwrap_or(0.0) / (d / scale).to_f64().unwrap_or(1.0)
    };
    ip + fp
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn approx_eq(&self, o: &Self) -> bool {
        (self - o).norm() <= 1e-12
    }
    fn add_to(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_from(&mut self, o: &Self) {
        *self -= o;
    }
}

impl Field for Complex64 {
    fn inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(1.0 / self)
        }
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn from_c64(c: Complex64) -> Self {
        c
    }
    fn from_ratio(r: &Ratio<i128>) -> Self {
        Complex64::new(ratio_to_f64(r), 0.0)
    }
    fn root_of_unity(t: &Turn) -> Result<Self, ScalarError> {
        // Reduce exactly first so that e.g. 1/4 gives i without rounding.
        if let Some(r) = t.as_ratio() {
            let q = *r.denom();
            let p = r.numer().rem_euclid(q);
            match (4 * p).checked_div(q) {
                Some(k) if 4 * p % q == 0 => {
                    return Ok([
                        Complex64::new(1.0, 0.0),
                        Complex64::new(0.0, 1.0),
                        Complex64::new(-1.0, 0.0),
                        Complex64::new(0.0, -1.0),
                    ][k as usize]);
                }
                _ => {}
            }
        }
        let x = t.reduced().to_f64();
        Ok(Complex64::from_polar(1.0, std::f64::consts::TAU * x))
    }
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn approx_eq(&self, o: &Self) -> bool {
        (self - o).abs() <= 1e-12
    }
    fn add_to(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_from(&mut self, o: &Self) {
        *self -= o;
    }
}

impl Field for f64 {
    fn inv(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
}

impl Ring for Cyclotomic {
    fn zero() -> Self {
        Cyclotomic::zero()
    }
    fn one() -> Self {
        Cyclotomic::one()
    }
    fn is_zero(&self) -> bool {
        Cyclotomic::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn from_int(n: i64) -> Self {
        Cyclotomic::from_integer(n)
    }
}

impl Field for Cyclotomic {
    fn inv(&self) -> Option<Self> {
        Cyclotomic::inverse(self)
    }
}

/// Largest root-of-unity order accepted in exact mode.
pub const MAX_EXACT_ORDER: u64 = 720;

impl Scalar for Cyclotomic {
    const EXACT: bool = true;

    fn to_c64(&self) -> Complex64 {
        Cyclotomic::to_c64(self)
    }
    fn conj(&self) -> Self {
        Cyclotomic::conj(self)
    }
    fn from_c64(c: Complex64) -> Self {
        Cyclotomic::gaussian(c.re, c.im)
    }
    fn from_ratio(r: &Ratio<i128>) -> Self {
        Cyclotomic::from_ratio(r)
    }
    fn root_of_unity(t: &Turn) -> Result<Self, ScalarError> {
        match t {
            Turn::Exact(r) => {
                let q = *r.0.denom();
                if q as u64 > MAX_EXACT_ORDER {
                    return Err(ScalarError::OrderTooLarge(q as u64, MAX_EXACT_ORDER));
                }
                let p = r.0.numer().rem_euclid(q);
                Ok(Cyclotomic::zeta_power(q as u32, p as u32))
            }
            Turn::Real(x) => {
                if *x == 0.0 {
                    Ok(Cyclotomic::one())
                } else {
                    Err(ScalarError::IrrationalAngle(*x))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact_in_float() {
        let i = Complex64::root_of_unity(&Turn::rational(1, 4)).unwrap();
        assert_eq!(i, Complex64::new(0.0, 1.0));
        let m = Complex64::root_of_unity(&Turn::rational(-1, 2)).unwrap();
        assert_eq!(m, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn circle_distance_of_turns() {
        assert_eq!(Turn::rational(3, 4).circle_distance(), 0.25);
        assert_eq!(Turn::rational(7, 3).circle_distance(), 1.0 / 3.0);
        assert!((Turn::Real(-0.1).circle_distance() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ratio_conversion_handles_huge_denominators() {
        let big = Ratio::new(110_001i128, 1_000_000i128) + Ratio::new(1, 10i128.pow(24));
        assert!((ratio_to_f64(&big) - 0.110001).abs() < 1e-15);
    }

    #[test]
    fn parse_ratio_forms() {
        assert_eq!(parse_ratio("3/6"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_ratio(" -2 "), Some(Ratio::from_integer(-2)));
        assert_eq!(parse_ratio("1/0"), None);
    }
}
