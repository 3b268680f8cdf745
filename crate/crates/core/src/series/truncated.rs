//! Vector-valued truncated power series.

use std::sync::Arc;

use super::basis::{MonomialBasis, MultiIndex};
use super::SeriesError;
use crate::scalar::{Field, Ring};

/// `m` components, each a power series in `r` variables truncated above
/// total degree `N`. Coefficients are stored densely, monomial-major.
#[derive(Clone, Debug)]
pub struct TruncatedSeries<R> {
    basis: Arc<MonomialBasis>,
    components: usize,
    coeffs: Vec<R>,
}

impl<R: Ring> PartialEq for TruncatedSeries<R> {
    fn eq(&self, other: &Self) -> bool {
        self.r() == other.r()
            && self.max_degree() == other.max_degree()
            && self.components == other.components
            && self.coeffs == other.coeffs
    }
}

impl<R: Ring> TruncatedSeries<R> {
    pub fn zero(r: usize, max_degree: u32, components: usize) -> Self {
        let basis = MonomialBasis::get(r, max_degree);
        let coeffs = vec![R::zero(); basis.len() * components];
        TruncatedSeries {
            basis,
            components,
            coeffs,
        }
    }

    /// The identity map `x -> x` (r components in r variables).
    pub fn identity(r: usize, max_degree: u32) -> Self {
        let mut s = Self::zero(r, max_degree, r);
        if max_degree >= 1 {
            for l in 0..r {
                s.set(&MultiIndex::unit(r, l), l, R::one());
            }
        }
        s
    }

    /// The coordinate function `x_lambda` as a scalar series.
    pub fn variable(r: usize, max_degree: u32, lambda: usize) -> Self {
        let mut s = Self::zero(r, max_degree, 1);
        if max_degree >= 1 {
            s.set(&MultiIndex::unit(r, lambda), 0, R::one());
        }
        s
    }

    pub fn constant(r: usize, max_degree: u32, value: R) -> Self {
        let mut s = Self::zero(r, max_degree, 1);
        s.coeffs[0] = value;
        s
    }

    pub fn r(&self) -> usize {
        self.basis.r()
    }

    pub fn max_degree(&self) -> u32 {
        self.basis.max_degree()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeff_at(&self, mono: usize, comp: usize) -> &R {
        &self.coeffs[mono * self.components + comp]
    }

    pub fn coeff_at_mut(&mut self, mono: usize, comp: usize) -> &mut R {
        &mut self.coeffs[mono * self.components + comp]
    }

    /// Coefficient of `x^alpha` in component `comp`; zero beyond the truncation.
    pub fn coeff(&self, alpha: &MultiIndex, comp: usize) -> R {
        self.basis
            .index_of(alpha)
            .map(|i| self.coeff_at(i, comp).clone())
            .unwrap_or_else(R::zero)
    }

    /// Sets a coefficient; terms above the truncation degree are ignored.
    pub fn set(&mut self, alpha: &MultiIndex, comp: usize, value: R) {
        if let Some(i) = self.basis.index_of(alpha) {
            *self.coeff_at_mut(i, comp) = value;
        }
    }

    /// Nonzero terms as `(monomial index, component, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &R)> + '_ {
        let m = self.components;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(k, c)| (k / m, k % m, c))
    }

    pub fn map<Q: Ring>(&self, f: impl Fn(&R) -> Q) -> TruncatedSeries<Q> {
        TruncatedSeries {
            basis: self.basis.clone(),
            components: self.components,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Lowest degree carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<u32> {
        self.terms().next().map(|(i, _, _)| self.basis.degree_of(i))
    }

    /// Degree-`d` homogeneous part.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut out = Self::zero(self.r(), self.max_degree(), self.components);
        for i in self.basis.shell_range(d) {
            for c in 0..self.components {
                *out.coeff_at_mut(i, c) = self.coeff_at(i, c).clone();
            }
        }
        out
    }

    /// Zeroes every coefficient above degree `d`.
    pub fn truncated(&self, d: u32) -> Self {
        let mut out = self.clone();
        let keep = self.basis.up_to(d).end;
        for k in keep * self.components..out.coeffs.len() {
            out.coeffs[k] = R::zero();
        }
        out
    }

    /// Same coefficients in the basis of another truncation degree.
    pub fn with_max_degree(&self, max_degree: u32) -> Self {
        if max_degree == self.max_degree() {
            return self.clone();
        }
        let mut out = Self::zero(self.r(), max_degree, self.components);
        let keep = self.basis.up_to(max_degree).end.min(out.basis.len());
        let m = self.components;
        out.coeffs[..keep * m].clone_from_slice(&self.coeffs[..keep * m]);
        out
    }

    pub fn component(&self, c: usize) -> Self {
        let mut out = Self::zero(self.r(), self.max_degree(), 1);
        for i in 0..self.basis.len() {
            out.coeffs[i] = self.coeff_at(i, c).clone();
        }
        out
    }

    pub fn from_components(parts: &[Self]) -> Result<Self, SeriesError> {
        let first = parts.first().ok_or(SeriesError::Empty)?;
        let mut out = Self::zero(first.r(), first.max_degree(), parts.len());
        for (c, p) in parts.iter().enumerate() {
            p.check_same_shape(first)?;
            if p.components != 1 {
                return Err(SeriesError::Shape(format!("component {c} is not scalar")));
            }
            for i in 0..out.basis.len() {
                *out.coeff_at_mut(i, c) = p.coeffs[i].clone();
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), SeriesError> {
        if self.r() != other.r() || self.max_degree() != other.max_degree() {
            return Err(SeriesError::Shape(format!(
                "(r={}, N={}) vs (r={}, N={})",
                self.r(),
                self.max_degree(),
                other.r(),
                other.max_degree()
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_same_shape(other)?;
        if self.components != other.components {
            return Err(SeriesError::Shape("component count".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            if !b.is_zero() {
                a.add_to(b);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("series shapes must agree")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.negated())
    }

    pub fn scale(&self, s: &R) -> Self {
        self.map(|c| c.times(s))
    }

    /// Product truncated at `min(N, deg)`. Scalar series broadcast over the
    /// components of the other factor; otherwise components multiply pairwise.
    pub fn mul_upto(&self, other: &Self, deg: u32) -> Self {
        self.check_same_shape(other)
            .expect("series shapes must agree");
        let m = self.components.max(other.components);
        assert!(
            self.components == other.components || self.components == 1 || other.components == 1,
            "component counts must agree or one factor must be scalar"
        );
        let deg = deg.min(self.max_degree());
        let mut out = Self::zero(self.r(), self.max_degree(), m);
        let basis = &self.basis;
        let (ca, cb) = (self.components, other.components);
        // (component of self, component of other, output component)
        let triples: Vec<(usize, usize, usize)> = (0..m)
            .map(|c| (if ca == 1 { 0 } else { c }, if cb == 1 { 0 } else { c }, c))
            .collect();
        let a_end = basis.up_to(deg).end;
        for &(ac, bc, oc) in &triples {
            for i in 0..a_end {
                let a = &self.coeffs[i * ca + ac];
                if a.is_zero() {
                    continue;
                }
                let j_end = basis.up_to(deg - basis.degree_of(i)).end;
                for j in 0..j_end {
                    let b = &other.coeffs[j * cb + bc];
                    if b.is_zero() {
                        continue;
                    }
                    let k = basis.product_index(i, j).expect("degree fits");
                    out.coeffs[k * m + oc].add_to(&a.times(b));
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_upto(other, self.max_degree())
    }

    pub fn constant_term(&self, comp: usize) -> &R {
        self.coeff_at(0, comp)
    }

    /// `outer(inner(x))`. `inner` must have zero constant term and as many
    /// components as `outer` has variables. The result lives in the variables
    /// of `inner` and is correct through `inner`'s truncation degree.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, SeriesError> {
        Self::compose_upto(outer, inner, inner.max_degree())
    }

    /// Composition computed only through degree `deg`; higher terms are zero.
    pub fn compose_upto(outer: &Self, inner: &Self, deg: u32) -> Result<Self, SeriesError> {
        if inner.components != outer.r() {
            return Err(SeriesError::Shape(format!(
                "inner has {} components but outer has {} variables",
                inner.components,
                outer.r()
            )));
        }
        if (0..inner.components).any(|c| !inner.constant_term(c).is_zero()) {
            return Err(SeriesError::NonzeroConstant);
        }
        let deg = deg.min(inner.max_degree());
        let ob = outer.basis.clone();
        let top = ob.max_degree().min(deg);
        let n_outer = ob.up_to(top).end;
        let vars: Vec<Self> = (0..inner.components).map(|c| inner.component(c)).collect();
        let mut result = Self::zero(inner.r(), inner.max_degree(), outer.components);
        let mut powers: Vec<Option<Self>> = vec![None; n_outer];
        powers[0] = Some(Self::constant(inner.r(), inner.max_degree(), R::one()));
        for a in 0..n_outer {
            if a > 0 {
                let alpha = ob.monomial(a);
                let lambda = alpha.0.iter().position(|&e| e > 0).expect("nonzero index");
                let mut prev = alpha.clone();
                prev.0[lambda] -= 1;
                let p = ob.index_of(&prev).expect("prefix in basis");
                let base = powers[p].as_ref().expect("prefix computed");
                powers[a] = Some(base.mul_upto(&vars[lambda], deg));
            }
            let pa = powers[a].as_ref().unwrap();
            for c in 0..outer.components {
                let coef = outer.coeff_at(a, c);
                if coef.is_zero() {
                    continue;
                }
                let end = result.basis.up_to(deg).end;
                for k in 0..end {
                    let v = &pa.coeffs[k];
                    if !v.is_zero() {
                        result.coeffs[k * outer.components + c].add_to(&coef.times(v));
                    }
                }
            }
        }
        Ok(result)
    }

    /// Degree-`deg` part of `self`, asserting nothing about other degrees.
    pub fn shell_coeffs(&self, deg: u32, comp: usize) -> Vec<R> {
        self.basis
            .shell_range(deg)
            .map(|i| self.coeff_at(i, comp).clone())
            .collect()
    }
}

impl<R: Field> TruncatedSeries<R> {
    /// Multiplicative inverse of a scalar series with invertible constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        if self.components != 1 {
            return Err(SeriesError::Shape("inverse of a vector series".into()));
        }
        let c0inv = self.coeffs[0].inv().ok_or(SeriesError::NotInvertible)?;
        let mut b = Self::constant(self.r(), self.max_degree(), c0inv.clone());
        for d in 1..=self.max_degree() {
            let e = self.mul_upto(&b, d);
            for i in self.basis.shell_range(d) {
                let v = e.coeffs[i].times(&c0inv);
                b.coeffs[i].sub_from(&v);
            }
        }
        Ok(b)
    }
}

impl<R: Ring> TruncatedSeries<R> {
    /// Inverse of `w = u + sum_{|a|>=2} F_a u^a`, solved degree by degree.
    pub fn reverse(fwd: &Self) -> Result<Self, SeriesError> {
        if fwd.components != fwd.r() {
            return Err(SeriesError::Shape(
                "reversion needs as many components as variables".into(),
            ));
        }
        if (0..fwd.components).any(|c| !fwd.constant_term(c).is_zero()) {
            return Err(SeriesError::NonzeroConstant);
        }
        let lin = fwd.linear_part();
        for (c, row) in lin.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                let expect = if c == l { R::one() } else { R::zero() };
                if !v.approx_eq(&expect) {
                    return Err(SeriesError::NonIdentityLinearPart);
                }
            }
        }
        let n = fwd.max_degree();
        let mut g = Self::identity(fwd.r(), n);
        for d in 2..=n {
            let e = Self::compose_upto(fwd, &g, d)?;
            for i in g.basis.shell_range(d) {
                for c in 0..g.components {
                    let v = e.coeff_at(i, c).clone();
                    if !v.is_zero() {
                        g.coeff_at_mut(i, c).sub_from(&v);
                    }
                }
            }
        }
        Ok(g)
    }

    /// Degree-one part as an `m x r` array of coefficients.
    pub fn linear_part(&self) -> Vec<Vec<R>> {
        let r = self.r();
        (0..self.components)
            .map(|c| {
                (0..r)
                    .map(|l| {
                        if self.max_degree() == 0 {
                            R::zero()
                        } else {
                            self.coeff(&MultiIndex::unit(r, l), c)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::Cyclotomic;
    use num_complex::Complex64 as C;
    use proptest::prelude::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn poly(r: usize, n: u32, terms: &[(&[u32], f64)]) -> TruncatedSeries<C> {
        let mut s = TruncatedSeries::zero(r, n, 1);
        for (a, v) in terms {
            s.set(&MultiIndex(a.to_vec()), 0, c(*v));
        }
        s
    }

    fn eval(s: &TruncatedSeries<C>, comp: usize, x: &[C]) -> C {
        let mut acc = c(0.0);
        for (i, cc, v) in s.terms() {
            if cc != comp {
                continue;
            }
            let mut t = *v;
            for (l, &e) in s.basis().monomial(i).0.iter().enumerate() {
                t *= x[l].powu(e);
            }
            acc += t;
        }
        acc
    }

    #[test]
    fn compose_small_polynomial() {
        // (1 + x + x^2) o (x + y) = 1 + x + y + x^2 + 2xy + y^2
        let outer = poly(1, 2, &[(&[0], 1.0), (&[1], 1.0), (&[2], 1.0)]);
        let inner = poly(2, 2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let out = TruncatedSeries::compose(&outer, &inner).unwrap();
        let want = poly(
            2,
            2,
            &[
                (&[0, 0], 1.0),
                (&[1, 0], 1.0),
                (&[0, 1], 1.0),
                (&[2, 0], 1.0),
                (&[1, 1], 2.0),
                (&[0, 2], 1.0),
            ],
        );
        assert_eq!(out, want);
    }

    #[test]
    fn compose_rejects_constant_inner() {
        let outer = poly(1, 3, &[(&[1], 1.0)]);
        let inner = poly(1, 3, &[(&[0], 1.0), (&[1], 1.0)]);
        assert_eq!(
            TruncatedSeries::compose(&outer, &inner),
            Err(SeriesError::NonzeroConstant)
        );
    }

    #[test]
    fn reversion_gives_catalan_numbers() {
        // w = u - u^2 inverts to u = sum C_{n-1} w^n.
        let mut f: TruncatedSeries<Cyclotomic> = TruncatedSeries::identity(1, 5);
        f.set(&MultiIndex(vec![2]), 0, Cyclotomic::from_integer(-1));
        let g = TruncatedSeries::reverse(&f).unwrap();
        let catalan = |n: u64| -> i64 {
            // binomial(2n, n) / (n + 1)
            let mut b: u64 = 1;
            for k in 0..n {
                b = b * (2 * n - k) / (k + 1);
            }
            (b / (n + 1)) as i64
        };
        for n in 1..=5u32 {
            let want = Cyclotomic::from_integer(catalan(n as u64 - 1));
            assert_eq!(g.coeff(&MultiIndex(vec![n]), 0), want, "degree {n}");
        }
    }

    #[test]
    fn reverse_rejects_nonidentity_linear_part() {
        let mut f: TruncatedSeries<C> = TruncatedSeries::identity(2, 3);
        f.set(&MultiIndex(vec![0, 1]), 0, c(0.5));
        assert_eq!(
            TruncatedSeries::reverse(&f),
            Err(SeriesError::NonIdentityLinearPart)
        );
    }

    #[test]
    fn inverse_of_geometric_series() {
        let one_minus_x = poly(1, 6, &[(&[0], 1.0), (&[1], -1.0)]);
        let g = one_minus_x.inverse().unwrap();
        for n in 0..=6u32 {
            assert_eq!(g.coeff(&MultiIndex(vec![n]), 0), c(1.0));
        }
    }

    #[test]
    fn json_roundtrip() {
        let s = poly(2, 3, &[(&[1, 0], 1.0), (&[1, 2], -0.25)]);
        let j = s.to_json();
        let text = serde_json::to_string(&j).unwrap();
        let back: SeriesJson = serde_json::from_str(&text).unwrap();
        assert_eq!(TruncatedSeries::<C>::from_json(&back).unwrap(), s);
        assert_eq!(j.terms[0].alpha, vec![1, 0]);
    }

    use super::super::SeriesJson;

    fn small_series(
        r: usize,
        n: u32,
        comps: usize,
        min_deg: u32,
    ) -> impl Strategy<Value = TruncatedSeries<C>> {
        let b = MonomialBasis::get(r, n);
        let len = b.len() * comps;
        proptest::collection::vec(-1.0f64..1.0, len).prop_map(move |v| {
            let mut s = TruncatedSeries::zero(r, n, comps);
            for i in 0..s.basis().len() {
                if s.basis().degree_of(i) < min_deg {
                    continue;
                }
                for cc in 0..comps {
                    *s.coeff_at_mut(i, cc) = c(v[i * comps + cc]);
                }
            }
            s
        })
    }

    fn max_diff(a: &TruncatedSeries<C>, b: &TruncatedSeries<C>) -> f64 {
        a.sub(b)
            .terms()
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    fn tangent_identity(r: usize, n: u32) -> impl Strategy<Value = TruncatedSeries<C>> {
        small_series(r, n, r, 2).prop_map(move |s| s.add(&TruncatedSeries::identity(r, n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn composition_is_associative(
            f in small_series(2, 5, 2, 1),
            g in small_series(2, 5, 2, 1),
            h in small_series(2, 5, 2, 1),
        ) {
            let left = TruncatedSeries::compose(&TruncatedSeries::compose(&f, &g).unwrap(), &h).unwrap();
            let right = TruncatedSeries::compose(&f, &TruncatedSeries::compose(&g, &h).unwrap()).unwrap();
            prop_assert!(max_diff(&left, &right) < 1e-9);
        }

        #[test]
        fn reversion_is_two_sided(f in tangent_identity(2, 6)) {
            let g = TruncatedSeries::reverse(&f).unwrap();
            let id = TruncatedSeries::identity(2, 6);
            prop_assert!(max_diff(&TruncatedSeries::compose(&f, &g).unwrap(), &id) < 1e-9);
            prop_assert!(max_diff(&TruncatedSeries::compose(&g, &f).unwrap(), &id) < 1e-9);
        }

        #[test]
        fn composition_with_linear_inner_matches_evaluation(
            f in small_series(2, 4, 1, 0),
            lin in proptest::collection::vec(-1.0f64..1.0, 4),
            pt in proptest::collection::vec(-1.0f64..1.0, 2),
        ) {
            // A linear inner map introduces no truncation error.
            let mut inner = TruncatedSeries::zero(2, 4, 2);
            inner.set(&MultiIndex(vec![1, 0]), 0, c(lin[0]));
            inner.set(&MultiIndex(vec![0, 1]), 0, c(lin[1]));
            inner.set(&MultiIndex(vec![1, 0]), 1, c(lin[2]));
            inner.set(&MultiIndex(vec![0, 1]), 1, c(lin[3]));
            let comp = TruncatedSeries::compose(&f, &inner).unwrap();
            let x = [c(pt[0]), c(pt[1])];
            let y = [c(lin[0] * pt[0] + lin[1] * pt[1]), c(lin[2] * pt[0] + lin[3] * pt[1])];
            prop_assert!((eval(&comp, 0, &x) - eval(&f, 0, &y)).norm() < 1e-10);
        }
    }
}
