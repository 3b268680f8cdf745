//! Comparison of computed normalizing coefficients with the majorant series.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::solve::{mode_operator, shell_weights, NormalizationState};
use super::{GermSystem, NormalizerError};
use crate::fourier::{Mode, ZERO_MODE};
use crate::majorant::{majorant_series, weighted_majorant_series, MajorantParams};
use crate::matrix::{solve, sup_norm};
use crate::scalar::Scalar;

/// Relative slack when comparing against the premise and the bounds.
const BOUND_SLACK: f64 = 1e-9;
/// Unit right-hand sides with a larger residual are outside the range.
const RANGE_TOL: f64 = 1e-10;

/// Worst case of one shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellBound {
    pub degree: u32,
    /// `max_alpha max_lambda |F^lambda_alpha|`.
    pub max_norm: f64,
    /// `min_alpha (A_alpha - |F_alpha|)`.
    pub min_margin: f64,
    /// `max_alpha |F_alpha| / A_alpha`.
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Largest solver norm ratio observed on this system.
    pub k_estimate: f64,
    pub k: f64,
    pub shells: Vec<ShellBound>,
    pub pass: bool,
    pub first_violation: Option<u32>,
}

/// Sup-norm of the solution map on the range, over the modes present in `F`.
fn solver_constant<S: Scalar>(
    system: &GermSystem<S>,
    state: &NormalizationState<S>,
) -> Result<f64, NormalizerError> {
    let r = system.r;
    let basis = state.coeffs.basis().clone();
    let mut k_est: f64 = 0.0;
    for n in 2..=state.degree {
        let range = basis.shell_range(n);
        let rs = r * range.len();
        let mut modes: BTreeSet<Mode> = BTreeSet::from([ZERO_MODE]);
        for i in range.clone() {
            for c in 0..r {
                modes.extend(state.coeffs.coeff_at(i, c).terms().iter().map(|t| t.0));
            }
        }
        let weights = shell_weights(system, n);
        let cols: Vec<usize> = (0..rs).collect();
        for m in modes {
            let op = mode_operator(system, &weights, m, &cols)?;
            let mut row_sums = vec![0.0; rs];
            for unit in 0..op.rows {
                let mut b = vec![S::zero(); op.rows];
                b[unit] = S::one();
                let sol = solve(&op, &b);
                let consistent = if S::EXACT {
                    sol.residual.iter().all(|x| x.is_zero())
                } else {
                    sup_norm(&sol.residual) <= RANGE_TOL
                };
                if consistent {
                    for (acc, x) in row_sums.iter_mut().zip(&sol.solution) {
                        *acc += x.modulus();
                    }
                }
            }
            k_est = row_sums.into_iter().fold(k_est, f64::max);
        }
    }
    Ok(k_est)
}

/// Checks `|F_alpha| <= A_alpha` shell by shell under the majorant premises.
pub fn verify_majorant_bounds<S: Scalar>(
    system: &GermSystem<S>,
    state: &NormalizationState<S>,
    params: &MajorantParams,
) -> Result<BoundReport, NormalizerError> {
    params.validate()?;
    if params.r != system.r {
        return Err(NormalizerError::Invalid(format!(
            "majorant has r = {} but the system has r = {}",
            params.r, system.r
        )));
    }
    for (g, gen) in system.generators.iter().enumerate() {
        for (i, c, p) in gen.f.terms() {
            let deg = gen.f.basis().degree_of(i);
            let cap = params.m * params.radius_inverse.powi(deg as i32);
            if p.sup_bound() > cap * (1.0 + BOUND_SLACK) {
                return Err(NormalizerError::PremiseViolated(format!(
                    "generator {g}: |f^{c}_{}| = {:e} exceeds M R^{deg} = {cap:e}",
                    gen.f.basis().monomial(i),
                    p.sup_bound()
                )));
            }
        }
    }
    let k_estimate = solver_constant(system, state)?;
    if params.k < k_estimate * (1.0 - BOUND_SLACK) {
        return Err(NormalizerError::PremiseViolated(format!(
            "K = {} is below the solver norm ratio {k_estimate:e}",
            params.k
        )));
    }
    let degree = state.degree.max(2);
    let majorant = if params.epsilon.is_some() {
        weighted_majorant_series(params, degree)?
    } else {
        majorant_series(params, degree)?
    };
    let basis = state.coeffs.basis().clone();
    let mut shells = Vec::new();
    for n in 2..=state.degree {
        let mut shell = ShellBound {
            degree: n,
            max_norm: 0.0,
            min_margin: f64::INFINITY,
            max_ratio: 0.0,
            pass: true,
        };
        for i in basis.shell_range(n) {
            let norm = (0..system.r)
                .map(|c| state.coeffs.coeff_at(i, c).sup_bound())
                .fold(0.0, f64::max);
            let bound = majorant.coeff(basis.monomial(i));
            shell.max_norm = shell.max_norm.max(norm);
            shell.min_margin = shell.min_margin.min(bound - norm);
            shell.max_ratio = shell.max_ratio.max(if bound > 0.0 {
                norm / bound
            } else if norm > 0.0 {
                f64::INFINITY
            } else {
                0.0
            });
            if norm > bound * (1.0 + BOUND_SLACK) {
                shell.pass = false;
            }
        }
        shells.push(shell);
    }
    let first_violation = shells.iter().find(|s| !s.pass).map(|s| s.degree);
    Ok(BoundReport {
        k_estimate,
        k: params.k,
        pass: first_violation.is_none(),
        first_violation,
        shells,
    })
}
