//! Transition matrices of symmetric powers.
//!
//! For a linear change `x -> T x`, `tau^alpha_beta` is the coefficient of
//! `x^beta` in `prod_l (sum_m T[l][m] x_m)^alpha_l`, so that monomials
//! transform by `(Tx)^alpha = sum_beta tau^alpha_beta x^beta`.

use num_complex::Complex64;

use super::basis::{shell, MonomialBasis};
use super::truncated::TruncatedSeries;
use super::SeriesError;
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Tolerance for the unitarity check of float transition matrices.
pub const UNITARY_TOL: f64 = 1e-12;

/// `tau(T)` on the degree-`n` shell, rows and columns in graded lex order.
#[derive(Clone, Debug)]
pub struct SymPowerTransition<S> {
    pub degree: u32,
    pub matrix: Mat<S>,
}

impl<S: Scalar> SymPowerTransition<S> {
    /// Rescaling by `sqrt(beta!/alpha!)`: the matrix in the orthonormal frame
    /// `sqrt(n!/alpha!) e^alpha`, unitary whenever `T` is.
    pub fn unitary_frame(&self, r: usize) -> Mat<Complex64> {
        let mons = shell(r, self.degree);
        let mut out = Mat::zeros(mons.len(), mons.len());
        for (i, a) in mons.iter().enumerate() {
            for (j, b) in mons.iter().enumerate() {
                let s = (b.factorial() / a.factorial()).sqrt();
                out.set(i, j, self.matrix.get(i, j).to_c64() * s);
            }
        }
        out
    }
}

/// Transition matrix without the unitarity check.
pub fn symmetric_power<S: Scalar>(t: &Mat<S>, n: u32) -> Mat<S> {
    let r = t.rows;
    let forms: Vec<TruncatedSeries<S>> = (0..r)
        .map(|l| {
            let mut s = TruncatedSeries::zero(r, n.max(1), 1);
            for m in 0..r {
                s.set(
                    &super::basis::MultiIndex::unit(r, m),
                    0,
                    t.get(l, m).clone(),
                );
            }
            s
        })
        .collect();
    let basis = MonomialBasis::get(r, n.max(1));
    let mons = shell(r, n);
    let mut out = Mat::zeros(mons.len(), mons.len());
    for (i, alpha) in mons.iter().enumerate() {
        let mut p = TruncatedSeries::constant(r, n.max(1), S::one());
        for (l, &e) in alpha.0.iter().enumerate() {
            for _ in 0..e {
                p = p.mul_upto(&forms[l], n);
            }
        }
        for (j, k) in basis.shell_range(n).enumerate() {
            out.set(i, j, p.coeff_at(k, 0).clone());
        }
    }
    out
}

/// `tau(T)` for unitary `T`; non-unitary input is rejected with its defect.
pub fn symmetric_transition<S: Scalar>(
    t: &Mat<S>,
    n: u32,
) -> Result<SymPowerTransition<S>, SeriesError> {
    if t.rows != t.cols {
        return Err(SeriesError::Shape(
            "transition matrix must be square".into(),
        ));
    }
    if !t.is_unitary(UNITARY_TOL) {
        return Err(SeriesError::NotUnitary(t.unitarity_defect()));
    }
    Ok(SymPowerTransition {
        degree: n,
        matrix: symmetric_power(t, n),
    })
}
