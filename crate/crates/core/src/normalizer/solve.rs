//! Degree-by-degree construction of the normalizing change and the
//! obstruction classes met on the way.
//!
//! With `Phi = id + sum F_alpha u^alpha` and `Psi = Phi^{-1}`, the degree-`n`
//! part of `P_gamma(Psi) - Psi` depends on `F_n` through
//! `(W_gamma - I) F_n`, where `W_gamma F = T F(z + c) o T^{-1}` on degree-`n`
//! coefficients. Each Fourier mode `m` gives the stacked linear system
//! `(I - e(m.c_gamma) W_gamma) F_{n,m} = -rho_{n,m}` over all generators.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{verify_majorant_bounds, BoundReport};
use super::{
    alpha_of, series_sup, GermSeries, GermSystem, NormalizerError, OBSTRUCTION_TOL, RESIDUAL_TOL,
};
use crate::fourier::{character, FourierPoly, Mode};
use crate::majorant::MajorantParams;
use crate::matrix::{solve, sup_norm, Mat};
use crate::scalar::{Ring, Scalar};
use crate::series::{symmetric_power, JsonCoeff, SeriesError, SeriesJson};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Force `F^1_alpha = 0` whenever `alpha_1 = 0`.
    pub hypersurface: bool,
    pub obstruction_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            hypersurface: false,
            obstruction_tol: OBSTRUCTION_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizeOptions {
    pub hypersurface: bool,
    pub track_majorant: Option<MajorantParams>,
    pub residual_tol: f64,
    pub obstruction_tol: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            hypersurface: false,
            track_majorant: None,
            residual_tol: RESIDUAL_TOL,
            obstruction_tol: OBSTRUCTION_TOL,
        }
    }
}

/// Small-divisor data of one degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorRecord {
    pub degree: u32,
    pub modes: usize,
    /// Smallest singular value over the per-mode operators.
    pub min_singular_value: f64,
    /// Smallest singular value actually used by the solves.
    pub min_kept_singular_value: f64,
}

#[derive(Clone, Debug)]
pub struct NormalizationState<S> {
    /// `F_alpha` for the degrees processed so far.
    pub coeffs: GermSeries<S>,
    /// The inverse change `u = Phi^{-1}`, valid through `degree`.
    pub psi: GermSeries<S>,
    pub degree: u32,
    pub divisor_log: Vec<DivisorRecord>,
}

impl<S: Scalar> NormalizationState<S> {
    pub fn new(system: &GermSystem<S>) -> Self {
        NormalizationState {
            coeffs: GermSeries::zero(system.r, system.max_degree, system.r),
            psi: GermSeries::identity(system.r, system.max_degree),
            degree: 1,
            divisor_log: Vec::new(),
        }
    }

    /// `Phi(u) = u + sum F_alpha u^alpha`.
    pub fn phi(&self) -> GermSeries<S> {
        GermSeries::identity(self.coeffs.r(), self.coeffs.max_degree()).add(&self.coeffs)
    }
}

/// One coefficient of a cocycle or class representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub generator: usize,
    pub component: usize,
    pub alpha: Vec<u32>,
    pub mode: Mode,
    pub value: [f64; 2],
}

/// Size of the class representative at a fixed `(lambda, alpha)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentNorm {
    pub component: usize,
    pub alpha: Vec<u32>,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    /// The class lives in degree `level + 1`.
    pub level: u32,
    pub raw: Vec<TermRecord>,
    /// Part of the cocycle outside the range of the coboundary operator.
    pub representative: Vec<TermRecord>,
    pub components: Vec<ComponentNorm>,
    pub norm: f64,
    pub nonzero: bool,
    /// Sup of `P_a P_b id - P_b P_a id` over generator pairs.
    pub commutator_defect: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemType {
    Finite {
        level: u32,
    },
    /// No obstruction through the truncation degree.
    Infinite {
        up_to: u32,
    },
}

impl std::fmt::Display for SystemType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SystemType::Finite { level } => write!(f, "{level}"),
            SystemType::Infinite { up_to } => write!(f, "inf({up_to})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormalizationResult<S> {
    pub system_type: SystemType,
    pub state: NormalizationState<S>,
    /// The normalizing coordinates, when no obstruction was met.
    pub u: Option<GermSeries<S>>,
    pub residual: Option<f64>,
    pub obstruction: Option<ObstructionReport>,
    pub bounds: Option<BoundReport>,
    pub commutator_defect: Option<f64>,
}

/// Serializable summary of a normalization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub exact: bool,
    pub r: usize,
    #[serde(rename = "N")]
    pub max_degree: u32,
    #[serde(rename = "type")]
    pub system_type: SystemType,
    pub divisors: Vec<DivisorRecord>,
    pub residual: Option<f64>,
    pub obstruction: Option<ObstructionReport>,
    pub bounds: Option<BoundReport>,
    pub commutator_defect: Option<f64>,
    pub coefficients: SeriesJson,
    pub u: Option<SeriesJson>,
}

impl<S: Scalar> NormalizationResult<S>
where
    FourierPoly<S>: JsonCoeff,
{
    pub fn report(&self) -> NormalizationReport {
        NormalizationReport {
            exact: S::EXACT,
            r: self.state.coeffs.r(),
            max_degree: self.state.coeffs.max_degree(),
            system_type: self.system_type,
            divisors: self.state.divisor_log.clone(),
            residual: self.residual,
            obstruction: self.obstruction.clone(),
            bounds: self.bounds.clone(),
            commutator_defect: self.commutator_defect,
            coefficients: self.state.coeffs.to_json(),
            u: self.u.as_ref().map(|u| u.to_json()),
        }
    }
}

/// `P_gamma(change) - change` for every generator.
pub fn expand_relation<S: Scalar>(
    system: &GermSystem<S>,
    change: &GermSeries<S>,
) -> Result<Vec<GermSeries<S>>, NormalizerError> {
    let r = system.r;
    if change.r() != r || change.components() != r {
        return Err(NormalizerError::Invalid(format!(
            "coordinate change must have {r} variables and components"
        )));
    }
    if change.max_degree() > system.max_degree {
        return Err(NormalizerError::DegreeOverflow {
            got: change.max_degree(),
            max: system.max_degree,
        });
    }
    if (0..r).any(|c| !change.constant_term(c).is_zero()) {
        return Err(SeriesError::NonzeroConstant.into());
    }
    for (c, row) in change.linear_part().iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            let expect = if c == l {
                FourierPoly::one()
            } else {
                FourierPoly::zero()
            };
            if !v.approx_eq(&expect) {
                return Err(SeriesError::NonIdentityLinearPart.into());
            }
        }
    }
    let deg = change.max_degree();
    let full = change.with_max_degree(system.max_degree);
    (0..system.generators.len())
        .map(|g| system.residual(g, &full, deg))
        .collect()
}

/// Result of the stacked per-mode solves at one degree.
struct ShellOutcome<S> {
    solution: GermSeries<S>,
    record: DivisorRecord,
    /// `(mode, b - A x)` for every inconsistent mode.
    inconsistent: Vec<(Mode, Vec<S>)>,
    norm: f64,
}

/// `W_gamma = T (x) tau(T^{-1})^t` on degree-`n` coefficients, index `lambda * s + beta`.
pub(crate) fn shell_weights<S: Scalar>(system: &GermSystem<S>, n: u32) -> Vec<Mat<S>> {
    system
        .generators
        .iter()
        .map(|g| g.t.kron(&symmetric_power(g.t_inv(), n).transpose()))
        .collect()
}

/// Stacked `I - e(m.c_gamma) W_gamma` restricted to the columns `cols`.
pub(crate) fn mode_operator<S: Scalar>(
    system: &GermSystem<S>,
    weights: &[Mat<S>],
    m: Mode,
    cols: &[usize],
) -> Result<Mat<S>, NormalizerError> {
    let rs = weights[0].rows;
    let mut op = Mat::<S>::zeros(weights.len() * rs, cols.len());
    for (g, gen) in system.generators.iter().enumerate() {
        let chi: S = character(m, &gen.translation)?;
        for row in 0..rs {
            for (k, &col) in cols.iter().enumerate() {
                let mut v = weights[g].get(row, col).times(&chi).negated();
                if row == col {
                    v.add_to(&S::one());
                }
                op.set(g * rs + row, k, v);
            }
        }
    }
    Ok(op)
}

fn solve_shell<S: Scalar>(
    system: &GermSystem<S>,
    n: u32,
    rho: &[GermSeries<S>],
    hypersurface: bool,
    tol: f64,
) -> Result<ShellOutcome<S>, NormalizerError> {
    let r = system.r;
    let basis = rho[0].basis().clone();
    let range = basis.shell_range(n);
    let (start, s) = (range.start, range.len());
    let rs = r * s;
    let cols: Vec<usize> = (0..rs)
        .filter(|&idx| !(hypersurface && idx / s == 0 && basis.monomial(start + idx % s).0[0] == 0))
        .collect();
    let weights = shell_weights(system, n);
    let modes: BTreeSet<Mode> = rho
        .iter()
        .flat_map(|p| {
            range.clone().flat_map(move |i| {
                (0..r).flat_map(move |c| p.coeff_at(i, c).terms().iter().map(|t| t.0))
            })
        })
        .collect();
    let modes: Vec<Mode> = modes.into_iter().collect();
    let gens = system.generators.len();

    let solved: Vec<(Mode, crate::matrix::LinearSolve<S>, bool, f64)> = modes
        .par_iter()
        .map(|&m| {
            let op = mode_operator(system, &weights, m, &cols)?;
            let mut rhs = Vec::with_capacity(gens * rs);
            for p in rho {
                for row in 0..rs {
                    rhs.push(p.coeff_at(start + row % s, row / s).coeff(m).negated());
                }
            }
            let sol = solve(&op, &rhs);
            let rhs_norm = sup_norm(&rhs);
            let res_norm = sup_norm(&sol.residual);
            let consistent = if S::EXACT {
                sol.residual.iter().all(|x| x.is_zero())
            } else {
                res_norm <= tol * rhs_norm.max(1.0)
            };
            Ok((m, sol, consistent, res_norm))
        })
        .collect::<Result<_, NormalizerError>>()?;

    let mut solution = GermSeries::zero(r, system.max_degree, r);
    let mut record = DivisorRecord {
        degree: n,
        modes: solved.len(),
        min_singular_value: f64::INFINITY,
        min_kept_singular_value: f64::INFINITY,
    };
    let mut inconsistent = Vec::new();
    let mut norm: f64 = 0.0;
    for (m, sol, consistent, res_norm) in solved {
        record.min_singular_value = record.min_singular_value.min(sol.sigma_min);
        record.min_kept_singular_value = record.min_kept_singular_value.min(sol.sigma_min_kept);
        for (k, &col) in cols.iter().enumerate() {
            let x = &sol.solution[k];
            if !x.is_zero() {
                solution
                    .coeff_at_mut(start + col % s, col / s)
                    .add_to(&FourierPoly::monomial(m, x.clone()));
            }
        }
        if !consistent {
            norm = norm.max(res_norm);
            inconsistent.push((m, sol.residual));
        }
    }
    Ok(ShellOutcome {
        solution,
        record,
        inconsistent,
        norm,
    })
}

fn records<S: Scalar>(rho: &[GermSeries<S>], n: u32) -> Vec<TermRecord> {
    let mut out = Vec::new();
    for (g, p) in rho.iter().enumerate() {
        for i in p.basis().shell_range(n) {
            for c in 0..p.components() {
                for (m, v) in p.coeff_at(i, c).terms() {
                    let z: Complex64 = v.to_c64();
                    out.push(TermRecord {
                        generator: g,
                        component: c,
                        alpha: alpha_of(p, i).0,
                        mode: *m,
                        value: [z.re, z.im],
                    });
                }
            }
        }
    }
    out
}

fn build_report<S: Scalar>(
    system: &GermSystem<S>,
    level: u32,
    rho: &[GermSeries<S>],
    outcome: &ShellOutcome<S>,
    commutator_defect: Option<f64>,
) -> ObstructionReport {
    let n = level + 1;
    let basis = rho[0].basis().clone();
    let range = basis.shell_range(n);
    let s = range.len();
    let rs = system.r * s;
    let mut representative = Vec::new();
    let mut components: Vec<ComponentNorm> = Vec::new();
    for (m, residual) in &outcome.inconsistent {
        for (idx, v) in residual.iter().enumerate() {
            let z = v.negated().to_c64();
            if v.is_zero() || (!S::EXACT && z.norm() <= f64::EPSILON * outcome.norm) {
                continue;
            }
            let (g, row) = (idx / rs, idx % rs);
            let (component, alpha) = (row / s, basis.monomial(range.start + row % s).0.clone());
            representative.push(TermRecord {
                generator: g,
                component,
                alpha: alpha.clone(),
                mode: *m,
                value: [z.re, z.im],
            });
            match components
                .iter_mut()
                .find(|c| c.component == component && c.alpha == alpha)
            {
                Some(c) => c.norm = c.norm.max(z.norm()),
                None => components.push(ComponentNorm {
                    component,
                    alpha,
                    norm: z.norm(),
                }),
            }
        }
    }
    ObstructionReport {
        level,
        raw: records(rho, n),
        representative,
        components,
        norm: outcome.norm,
        nonzero: !outcome.inconsistent.is_empty(),
        commutator_defect,
    }
}

/// Sup of `P_a P_b id - P_b P_a id` through degree `deg`, for two or more generators.
pub(crate) fn commutator_defect<S: Scalar>(
    system: &GermSystem<S>,
    deg: u32,
) -> Result<Option<f64>, NormalizerError> {
    let k = system.generators.len();
    if k < 2 {
        return Ok(None);
    }
    let id = GermSeries::identity(system.r, system.max_degree);
    let once: Vec<GermSeries<S>> = (0..k)
        .map(|g| system.apply_generator(g, &id, deg))
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            let ab = system.apply_generator(a, &once[b], deg)?;
            let ba = system.apply_generator(b, &once[a], deg)?;
            worst = worst.max(series_sup(&ab.sub(&ba)));
        }
    }
    Ok(Some(worst))
}

/// The degree-`n + 1` obstruction class of a system of type `n`.
pub fn obstruction_class<S: Scalar>(
    system: &GermSystem<S>,
    n: u32,
) -> Result<ObstructionReport, NormalizerError> {
    if n == 0 || n + 1 > system.max_degree {
        return Err(NormalizerError::Invalid(format!(
            "level {n} needs 1 <= n < N = {}",
            system.max_degree
        )));
    }
    system.check_type(n)?;
    let id = GermSeries::identity(system.r, system.max_degree);
    let rho: Vec<GermSeries<S>> = (0..system.generators.len())
        .map(|g| Ok(system.residual(g, &id, n + 1)?.homogeneous_part(n + 1)))
        .collect::<Result<_, NormalizerError>>()?;
    let outcome = solve_shell(system, n + 1, &rho, false, OBSTRUCTION_TOL)?;
    let defect = commutator_defect(system, n + 1)?;
    Ok(build_report(system, n, &rho, &outcome, defect))
}

/// Solves degree `n`, extending a state that is valid through `n - 1`.
pub fn solve_degree<S: Scalar>(
    system: &GermSystem<S>,
    n: u32,
    state: &mut NormalizationState<S>,
    options: SolveOptions,
) -> Result<DivisorRecord, NormalizerError> {
    if state.degree + 1 != n || n > system.max_degree {
        return Err(NormalizerError::Invalid(format!(
            "state is at degree {}, cannot solve degree {n}",
            state.degree
        )));
    }
    let lower = GermSeries::compose_upto(&state.coeffs, &state.psi, n)?;
    let mut psi = state.psi.clone();
    for i in psi.basis().shell_range(n) {
        for c in 0..system.r {
            *psi.coeff_at_mut(i, c) = lower.coeff_at(i, c).negated();
        }
    }
    let rho: Vec<GermSeries<S>> = (0..system.generators.len())
        .map(|g| Ok(system.residual(g, &psi, n)?.homogeneous_part(n)))
        .collect::<Result<_, NormalizerError>>()?;
    let outcome = solve_shell(
        system,
        n,
        &rho,
        options.hypersurface,
        options.obstruction_tol,
    )?;
    if !outcome.inconsistent.is_empty() {
        let outcome = if options.hypersurface {
            let free = solve_shell(system, n, &rho, false, options.obstruction_tol)?;
            if free.inconsistent.is_empty() {
                return Err(NormalizerError::ConstrainedUnsolvable(n));
            }
            free
        } else {
            outcome
        };
        let defect = commutator_defect(system, n)?;
        return Err(NormalizerError::ObstructionNonzero(Box::new(build_report(
            system,
            n - 1,
            &rho,
            &outcome,
            defect,
        ))));
    }
    state.coeffs = state.coeffs.add(&outcome.solution);
    state.psi = psi.sub(&outcome.solution);
    state.degree = n;
    state.divisor_log.push(outcome.record.clone());
    Ok(outcome.record)
}

/// Runs `solve_degree` for `n = 2..=N` and verifies the resulting change.
pub fn normalize<S: Scalar>(
    system: &GermSystem<S>,
    options: &NormalizeOptions,
) -> Result<NormalizationResult<S>, NormalizerError> {
    system.check_unitary()?;
    let n_max = system.max_degree;
    let solve_opts = SolveOptions {
        hypersurface: options.hypersurface,
        obstruction_tol: options.obstruction_tol,
    };
    let mut state = NormalizationState::new(system);
    let commutator = commutator_defect(system, n_max)?;
    for n in 2..=n_max {
        match solve_degree(system, n, &mut state, solve_opts) {
            Ok(_) => {}
            Err(NormalizerError::ObstructionNonzero(report)) => {
                let bounds = match &options.track_majorant {
                    Some(p) => Some(verify_majorant_bounds(system, &state, p)?),
                    None => None,
                };
                return Ok(NormalizationResult {
                    system_type: SystemType::Finite {
                        level: report.level,
                    },
                    state,
                    u: None,
                    residual: None,
                    obstruction: Some(*report),
                    bounds,
                    commutator_defect: commutator,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let u = GermSeries::reverse(&state.phi())?;
    let mut residual: f64 = 0.0;
    for g in 0..system.generators.len() {
        residual = residual.max(series_sup(&system.residual(g, &u, n_max)?));
    }
    let limit = if S::EXACT { 0.0 } else { options.residual_tol };
    if residual > limit {
        return Err(NormalizerError::ResidualTooLarge(residual, limit));
    }
    if options.hypersurface {
        let bad = u
            .terms()
            .filter(|&(i, c, _)| {
                c == 0 && u.basis().degree_of(i) >= 2 && u.basis().monomial(i).0[0] == 0
            })
            .count();
        if bad > 0 {
            return Err(NormalizerError::HypersurfaceViolated(bad));
        }
    }
    let bounds = match &options.track_majorant {
        Some(p) => Some(verify_majorant_bounds(system, &state, p)?),
        None => None,
    };
    Ok(NormalizationResult {
        system_type: SystemType::Infinite { up_to: n_max },
        state,
        u: Some(u),
        residual: Some(residual),
        obstruction: None,
        bounds,
        commutator_defect: commutator,
    })
}
