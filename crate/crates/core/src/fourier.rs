//! Fourier polynomials on the base, `sum_m c_m e_m` with `m` in `Z^2`.
//!
//! Translation by `c` multiplies the coefficient of `e_m` by
//! `exp(2 pi i m.c)`. The product is the exact convolution; no mode
//! truncation happens inside the ring.

use smallvec::SmallVec;

use crate::scalar::{Ring, Scalar, ScalarError, Turn};

pub type Mode = [i32; 2];

pub const ZERO_MODE: Mode = [0, 0];

/// Sparse Fourier polynomial with modes sorted and no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPoly<S> {
    terms: SmallVec<[(Mode, S); 1]>,
}

impl<S: Scalar> FourierPoly<S> {
    pub fn constant(s: S) -> Self {
        Self::monomial(ZERO_MODE, s)
    }

    pub fn monomial(m: Mode, s: S) -> Self {
        let mut terms = SmallVec::new();
        if !s.is_zero() {
            terms.push((m, s));
        }
        FourierPoly { terms }
    }

    pub fn from_terms(mut list: Vec<(Mode, S)>) -> Self {
        list.sort_by_key(|a| a.0);
        let mut terms: SmallVec<[(Mode, S); 1]> = SmallVec::new();
        for (m, s) in list {
            match terms.last_mut() {
                Some(last) if last.0 == m => last.1.add_to(&s),
                _ => terms.push((m, s)),
            }
        }
        terms.retain(|t| !t.1.is_zero());
        FourierPoly { terms }
    }

    pub fn terms(&self) -> &[(Mode, S)] {
        &self.terms
    }

    pub fn coeff(&self, m: Mode) -> S {
        self.terms
            .binary_search_by(|t| t.0.cmp(&m))
            .map(|i| self.terms[i].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    /// Constant term, i.e. the zero mode.
    pub fn mean(&self) -> S {
        self.coeff(ZERO_MODE)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.0 == ZERO_MODE)
    }

    /// Upper bound for the sup norm over the base.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.1.modulus()).sum()
    }

    pub fn max_mode(&self) -> i32 {
        self.terms
            .iter()
            .map(|t| t.0[0].abs().max(t.0[1].abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn map_coeffs(&self, f: impl Fn(Mode, &S) -> S) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, s)| (*m, f(*m, s))).collect())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_coeffs(|_, x| x.times(s))
    }

    /// `F(z + c)`.
    pub fn translated(&self, c: &[Turn; 2]) -> Result<Self, ScalarError> {
        if self.is_constant() {
            return Ok(self.clone());
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, s) in &self.terms {
            out.push((*m, s.times(&character(*m, c)?)));
        }
        Ok(Self::from_terms(out))
    }
}

/// `exp(2 pi i m.c)`.
pub fn character<S: Scalar>(m: Mode, c: &[Turn; 2]) -> Result<S, ScalarError> {
    if m == ZERO_MODE {
        return Ok(S::one());
    }
    let t = c[0].scaled(m[0] as i64).plus(&c[1].scaled(m[1] as i64));
    S::root_of_unity(&t)
}

impl<S: Scalar> Ring for FourierPoly<S> {
    fn zero() -> Self {
        FourierPoly {
            terms: SmallVec::new(),
        }
    }

    fn one() -> Self {
        Self::constant(S::one())
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn plus(&self, other: &Self) -> Self {
        if other.terms.is_empty() {
            return self.clone();
        }
        if self.terms.is_empty() {
            return other.clone();
        }
        if self.terms.len() == 1 && other.terms.len() == 1 && self.terms[0].0 == other.terms[0].0 {
            return Self::monomial(self.terms[0].0, self.terms[0].1.plus(&other.terms[0].1));
        }
        let mut out: SmallVec<[(Mode, S); 1]> = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = j >= other.terms.len()
                || (i < self.terms.len() && self.terms[i].0 < other.terms[j].0);
            let take_right = i >= self.terms.len()
                || (j < other.terms.len() && other.terms[j].0 < self.terms[i].0);
            if take_left {
                out.push(self.terms[i].clone());
                i += 1;
            } else if take_right {
                out.push(other.terms[j].clone());
                j += 1;
            } else {
                let s = self.terms[i].1.plus(&other.terms[j].1);
                if !s.is_zero() {
                    out.push((self.terms[i].0, s));
                }
                i += 1;
                j += 1;
            }
        }
        FourierPoly { terms: out }
    }

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    fn times(&self, other: &Self) -> Self {
        if self.terms.is_empty() || other.terms.is_empty() {
            return Self::zero();
        }
        if self.terms.len() == 1 && other.terms.len() == 1 {
            let (m, a) = &self.terms[0];
            let (n, b) = &other.terms[0];
            return Self::monomial([m[0] + n[0], m[1] + n[1]], a.times(b));
        }
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (m, a) in &self.terms {
            for (n, b) in &other.terms {
                out.push(([m[0] + n[0], m[1] + n[1]], a.times(b)));
            }
        }
        Self::from_terms(out)
    }

    fn negated(&self) -> Self {
        FourierPoly {
            terms: self.terms.iter().map(|(m, s)| (*m, s.negated())).collect(),
        }
    }

    fn from_int(n: i64) -> Self {
        Self::constant(S::from_int(n))
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self.minus(other)
            .terms
            .iter()
            .all(|t| t.1.approx_eq(&S::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn fp(list: &[(Mode, f64)]) -> FourierPoly<C> {
        FourierPoly::from_terms(list.iter().map(|&(m, x)| (m, C::new(x, 0.0))).collect())
    }

    #[test]
    fn convolution_product() {
        let a = fp(&[([1, 0], 2.0), ([0, 0], 1.0)]);
        let b = fp(&[([-1, 0], 3.0)]);
        let p = a.times(&b);
        assert_eq!(p.coeff([0, 0]), C::new(6.0, 0.0));
        assert_eq!(p.coeff([-1, 0]), C::new(3.0, 0.0));
        assert_eq!(p.terms().len(), 2);
    }

    #[test]
    fn cancellation_removes_modes() {
        let a = fp(&[([2, 1], 1.0)]);
        assert!(a.minus(&a).is_zero());
    }

    #[test]
    fn translation_multiplies_by_character() {
        let a = fp(&[([1, 0], 1.0)]);
        let c = [Turn::rational(1, 4), Turn::rational(0, 1)];
        let t = a.translated(&c).unwrap();
        assert_eq!(t.coeff([1, 0]), C::new(0.0, 1.0));
    }
}
