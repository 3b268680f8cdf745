//! Twisted coboundary equations `delta b = h` in two finite models.
//!
//! Nerve model: a finite nerve with a unitary weight `W_jk` per oriented
//! edge and `(delta b)_jk = b_j - W_jk b_k`.
//!
//! Group model: the lattice `Z^2` acting on the base by translations `c_g`,
//! with unknown `F` a vector of Fourier polynomials and equations
//! `F(z) - W_g F(z + c_g) = h_g(z)`, which decouple by Fourier mode into
//! `(I - e(m.c_g) W_g) F_m = h_{g,m}`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fourier::{character, FourierPoly, Mode};
use crate::matrix::{solve, sup_norm, LinearSolve, Mat};
use crate::scalar::{Ring, Scalar, ScalarError, Turn};

/// Tolerance for the multiplicative cocycle rule and the additive identity.
pub const COCYCLE_TOL: f64 = 1e-10;
/// Substitution tolerance, relative to `max(1, |h|)`.
pub const SOLVE_TOL: f64 = 1e-10;
/// Kept singular values below this are reported as ill-conditioned.
pub const CONDITION_FLOOR: f64 = 1e-9;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum CohomologyError {
    #[error("invalid nerve: {0}")]
    InvalidNerve(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("edge weights violate the cocycle rule on triangle {triangle} (defect {defect:e})")]
    WeightsNotCocycle { triangle: usize, defect: f64 },
    #[error("ill-conditioned system: smallest kept singular value {0:e}")]
    IllConditioned(f64),
    #[error("resonant mode {mode:?} (generator {generator}, component {component}) has nonzero right-hand side {norm:e}")]
    ObstructionNonzero {
        mode: Mode,
        generator: usize,
        component: usize,
        norm: f64,
    },
    #[error("problem {index} of the family is not solvable")]
    Unsolvable { index: usize },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Vertices `0..vertices`, oriented edges and oriented triangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nerve {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub triangles: Vec<(usize, usize, usize)>,
}

/// An edge of a triangle as stored: its index and whether it is reversed.
#[derive(Clone, Copy, Debug, PartialEq)]
struct EdgeRef {
    index: usize,
    reversed: bool,
}

impl Nerve {
    pub fn new(
        vertices: usize,
        edges: Vec<(usize, usize)>,
        triangles: Vec<(usize, usize, usize)>,
    ) -> Result<Self, CohomologyError> {
        let n = Nerve {
            vertices,
            edges,
            triangles,
        };
        n.validate()?;
        Ok(n)
    }

    /// The cycle `0 -> 1 -> ... -> n-1 -> 0` with no triangles.
    pub fn cycle(n: usize) -> Self {
        Nerve {
            vertices: n,
            edges: (0..n).map(|j| (j, (j + 1) % n)).collect(),
            triangles: vec![],
        }
    }

    /// One vertex with one loop.
    pub fn single_loop() -> Self {
        Nerve {
            vertices: 1,
            edges: vec![(0, 0)],
            triangles: vec![],
        }
    }

    pub fn validate(&self) -> Result<(), CohomologyError> {
        let mut seen = BTreeSet::new();
        for &(j, k) in &self.edges {
            if j >= self.vertices || k >= self.vertices {
                return Err(CohomologyError::InvalidNerve(format!(
                    "edge ({j},{k}) references a missing vertex"
                )));
            }
            if !seen.insert((j.min(k), j.max(k))) {
                return Err(CohomologyError::InvalidNerve(format!(
                    "duplicate edge ({j},{k})"
                )));
            }
        }
        for (t, &(a, b, c)) in self.triangles.iter().enumerate() {
            for (x, y) in [(a, b), (b, c), (a, c)] {
                if self.edge_ref(x, y).is_none() {
                    return Err(CohomologyError::InvalidNerve(format!(
                        "triangle {t} lacks edge ({x},{y})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn edge_ref(&self, j: usize, k: usize) -> Option<EdgeRef> {
        self.edges.iter().enumerate().find_map(|(i, &(a, b))| {
            if (a, b) == (j, k) {
                Some(EdgeRef {
                    index: i,
                    reversed: false,
                })
            } else if (b, a) == (j, k) {
                Some(EdgeRef {
                    index: i,
                    reversed: true,
                })
            } else {
                None
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NerveProblem<S> {
    pub nerve: Nerve,
    pub dim: usize,
    pub weights: Vec<Mat<S>>,
    pub rhs: Vec<Vec<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator<S> {
    pub weight: Mat<S>,
    pub translation: [Turn; 2],
    pub rhs: Vec<FourierPoly<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupProblem<S> {
    pub dim: usize,
    pub generators: Vec<Generator<S>>,
    /// Fourier data is truncated at `max(|m_1|, |m_2|) <= max_modes`.
    pub max_modes: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TwistedCochainProblem<S> {
    Nerve(NerveProblem<S>),
    Group(GroupProblem<S>),
}

impl<S: Scalar> NerveProblem<S> {
    pub fn new(
        nerve: Nerve,
        dim: usize,
        weights: Vec<Mat<S>>,
        rhs: Vec<Vec<S>>,
    ) -> Result<Self, CohomologyError> {
        nerve.validate()?;
        if weights.len() != nerve.edges.len() || rhs.len() != nerve.edges.len() {
            return Err(CohomologyError::InvalidProblem(
                "one weight and one right-hand side per edge".into(),
            ));
        }
        for (e, (w, h)) in weights.iter().zip(&rhs).enumerate() {
            if w.rows != dim || w.cols != dim || h.len() != dim {
                return Err(CohomologyError::InvalidProblem(format!(
                    "edge {e} data is not of dimension {dim}"
                )));
            }
            if !w.is_unitary(COCYCLE_TOL) {
                return Err(CohomologyError::InvalidProblem(format!(
                    "weight on edge {e} is not unitary"
                )));
            }
        }
        let p = NerveProblem {
            nerve,
            dim,
            weights,
            rhs,
        };
        p.check_weights()?;
        Ok(p)
    }

    /// `(W, h)` for the oriented edge `j -> k`.
    fn oriented(&self, j: usize, k: usize) -> (Mat<S>, Vec<S>) {
        let e = self.nerve.edge_ref(j, k).expect("validated edge");
        let (w, h) = (&self.weights[e.index], &self.rhs[e.index]);
        if e.reversed {
            let wi = w.adjoint();
            let h2 = wi.apply(h).iter().map(Ring::negated).collect();
            (wi, h2)
        } else {
            (w.clone(), h.clone())
        }
    }

    fn check_weights(&self) -> Result<(), CohomologyError> {
        for (t, &(a, b, c)) in self.nerve.triangles.iter().enumerate() {
            let (wab, _) = self.oriented(a, b);
            let (wbc, _) = self.oriented(b, c);
            let (wac, _) = self.oriented(a, c);
            let d = wab.mul(&wbc).minus(&wac);
            let defect = d.data.iter().map(|x| x.modulus()).fold(0.0, f64::max);
            let bad = if S::EXACT {
                d.data.iter().any(|x| !x.is_zero())
            } else {
                defect > COCYCLE_TOL
            };
            if bad {
                return Err(CohomologyError::WeightsNotCocycle {
                    triangle: t,
                    defect,
                });
            }
        }
        Ok(())
    }

    /// Matrix of `delta` from `C^0 = (C^dim)^V` to `C^1 = (C^dim)^E`.
    pub fn coboundary_matrix(&self) -> Mat<S> {
        let (d, v, e) = (self.dim, self.nerve.vertices, self.nerve.edges.len());
        let mut m = Mat::<S>::zeros(e * d, v * d);
        for (i, &(j, k)) in self.nerve.edges.iter().enumerate() {
            let w = &self.weights[i];
            for a in 0..d {
                let one = m.get(i * d + a, j * d + a).plus(&S::one());
                m.set(i * d + a, j * d + a, one);
                for b in 0..d {
                    let x = m.get(i * d + a, k * d + b).minus(w.get(a, b));
                    m.set(i * d + a, k * d + b, x);
                }
            }
        }
        m
    }

    pub fn coboundary(&self, b: &[Vec<S>]) -> Vec<Vec<S>> {
        self.nerve
            .edges
            .iter()
            .zip(&self.weights)
            .map(|(&(j, k), w)| {
                let wb = w.apply(&b[k]);
                b[j].iter().zip(&wb).map(|(x, y)| x.minus(y)).collect()
            })
            .collect()
    }

    fn flat_rhs(&self) -> Vec<S> {
        self.rhs.iter().flatten().cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub pass: bool,
    pub max_violation: f64,
    pub worst_triangle: Option<usize>,
}

/// Checks `h_jk + W_jk h_kl - h_jl = 0` on every triangle `(j, k, l)`.
pub fn cocycle_check<S: Scalar>(problem: &NerveProblem<S>) -> CocycleReport {
    let mut worst: Option<usize> = None;
    let mut max_violation = 0.0;
    let mut exact_fail = false;
    for (t, &(j, k, l)) in problem.nerve.triangles.iter().enumerate() {
        let (wjk, hjk) = problem.oriented(j, k);
        let (_, hkl) = problem.oriented(k, l);
        let (_, hjl) = problem.oriented(j, l);
        let whkl = wjk.apply(&hkl);
        let v: Vec<S> = (0..problem.dim)
            .map(|a| hjk[a].plus(&whkl[a]).minus(&hjl[a]))
            .collect();
        let size = sup_norm(&v);
        if S::EXACT && v.iter().any(|x| !x.is_zero()) {
            exact_fail = true;
        }
        if worst.is_none() || size > max_violation {
            max_violation = size;
            worst = Some(t);
        }
    }
    let pass = if S::EXACT {
        !exact_fail
    } else {
        max_violation <= COCYCLE_TOL
    };
    CocycleReport {
        pass,
        max_violation,
        worst_triangle: worst,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CochainSolution<V> {
    pub values: Vec<V>,
    /// Sup norm of `delta b - h`.
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub rhs_norm: f64,
    /// Smallest singular value (nerve) or divisor modulus (group) met.
    pub smallest_divisor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NerveOutcome<S> {
    Solved(CochainSolution<Vec<S>>),
    /// The component of `h` orthogonal to the image of `delta`.
    Obstruction {
        representative: Vec<Vec<S>>,
        norm: f64,
        smallest_divisor: f64,
    },
}

impl<S> NerveOutcome<S> {
    pub fn solution(&self) -> Option<&CochainSolution<Vec<S>>> {
        match self {
            NerveOutcome::Solved(s) => Some(s),
            NerveOutcome::Obstruction { .. } => None,
        }
    }
}

fn is_consistent<S: Scalar>(ls: &LinearSolve<S>, rhs_norm: f64) -> bool {
    if S::EXACT {
        ls.residual.iter().all(Ring::is_zero)
    } else {
        sup_norm(&ls.residual) <= SOLVE_TOL * rhs_norm.max(1.0)
    }
}

fn check_conditioning<S: Scalar>(ls: &LinearSolve<S>) -> Result<(), CohomologyError> {
    if !S::EXACT && ls.sigma_min_kept < CONDITION_FLOOR {
        return Err(CohomologyError::IllConditioned(ls.sigma_min_kept));
    }
    Ok(())
}

/// Minimum-norm solution of `delta b = h` (basic solution in exact mode),
/// or the obstruction class representative.
pub fn nerve_coboundary_solve<S: Scalar>(
    problem: &NerveProblem<S>,
) -> Result<NerveOutcome<S>, CohomologyError> {
    let a = problem.coboundary_matrix();
    let h = problem.flat_rhs();
    let rhs_norm = sup_norm(&h);
    let ls = solve(&a, &h);
    check_conditioning(&ls)?;
    let d = problem.dim;
    if is_consistent(&ls, rhs_norm) {
        let values: Vec<Vec<S>> = ls.solution.chunks(d.max(1)).map(|c| c.to_vec()).collect();
        let values = if d == 0 {
            vec![vec![]; problem.nerve.vertices]
        } else {
            values
        };
        Ok(NerveOutcome::Solved(CochainSolution {
            residual_norm: sup_norm(&ls.residual),
            solution_norm: sup_norm(&ls.solution),
            rhs_norm,
            smallest_divisor: ls.sigma_min,
            values,
        }))
    } else {
        Ok(NerveOutcome::Obstruction {
            norm: sup_norm(&ls.residual),
            representative: ls.residual.chunks(d.max(1)).map(|c| c.to_vec()).collect(),
            smallest_divisor: ls.sigma_min,
        })
    }
}

impl<S: Scalar> GroupProblem<S> {
    pub fn new(
        dim: usize,
        generators: Vec<Generator<S>>,
        max_modes: i32,
    ) -> Result<Self, CohomologyError> {
        for (g, gen) in generators.iter().enumerate() {
            if gen.weight.rows != dim || gen.weight.cols != dim || gen.rhs.len() != dim {
                return Err(CohomologyError::InvalidProblem(format!(
                    "generator {g} data is not of dimension {dim}"
                )));
            }
            if !gen.weight.is_unitary(COCYCLE_TOL) {
                return Err(CohomologyError::InvalidProblem(format!(
                    "weight of generator {g} is not unitary"
                )));
            }
            if gen.rhs.iter().any(|p| p.max_mode() > max_modes) {
                return Err(CohomologyError::InvalidProblem(format!(
                    "generator {g} has modes beyond {max_modes}"
                )));
            }
        }
        Ok(GroupProblem {
            dim,
            generators,
            max_modes,
        })
    }

    /// Modes present in any right-hand side, sorted.
    pub fn modes(&self) -> Vec<Mode> {
        let set: BTreeSet<Mode> = self
            .generators
            .iter()
            .flat_map(|g| g.rhs.iter().flat_map(|p| p.terms().iter().map(|t| t.0)))
            .collect();
        set.into_iter().collect()
    }

    /// Stacked operator `[I - e(m.c_g) W_g]_g` for mode `m`.
    pub fn mode_operator(&self, m: Mode) -> Result<Mat<S>, CohomologyError> {
        let d = self.dim;
        let mut op = Mat::zeros(self.generators.len() * d, d);
        for (g, gen) in self.generators.iter().enumerate() {
            let chi: S = character(m, &gen.translation)?;
            for a in 0..d {
                for b in 0..d {
                    let id = if a == b { S::one() } else { S::zero() };
                    op.set(g * d + a, b, id.minus(&chi.times(gen.weight.get(a, b))));
                }
            }
        }
        Ok(op)
    }

    fn mode_rhs(&self, m: Mode) -> Vec<S> {
        self.generators
            .iter()
            .flat_map(|g| g.rhs.iter().map(move |p| p.coeff(m)))
            .collect()
    }

    /// `F - W_g F(. + c_g)` for every generator.
    pub fn coboundary(
        &self,
        f: &[FourierPoly<S>],
    ) -> Result<Vec<Vec<FourierPoly<S>>>, CohomologyError> {
        let shifted: Vec<Vec<FourierPoly<S>>> = self
            .generators
            .iter()
            .map(|g| {
                f.iter()
                    .map(|p| p.translated(&g.translation))
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(self
            .generators
            .iter()
            .zip(&shifted)
            .map(|(g, sh)| {
                (0..self.dim)
                    .map(|a| {
                        let mut acc = f[a].clone();
                        for (b, s) in sh.iter().enumerate() {
                            acc = acc.minus(&s.scale(g.weight.get(a, b)));
                        }
                        acc
                    })
                    .collect()
            })
            .collect())
    }
}

fn coeff_sup<S: Scalar>(polys: &[FourierPoly<S>]) -> f64 {
    polys
        .iter()
        .flat_map(|p| p.terms().iter().map(|t| t.1.modulus()))
        .fold(0.0, f64::max)
}

/// Mode-by-mode solution; norms are sup norms over Fourier coefficients.
pub fn mode_coboundary_solve<S: Scalar>(
    problem: &GroupProblem<S>,
) -> Result<CochainSolution<FourierPoly<S>>, CohomologyError> {
    let modes = problem.modes();
    let d = problem.dim;
    let results: Vec<Result<(Mode, LinearSolve<S>, f64), CohomologyError>> = modes
        .par_iter()
        .map(|&m| {
            let op = problem.mode_operator(m)?;
            let h = problem.mode_rhs(m);
            let hn = sup_norm(&h);
            let ls = solve(&op, &h);
            Ok((m, ls, hn))
        })
        .collect();
    let mut per_comp: Vec<Vec<(Mode, S)>> = vec![vec![]; d];
    let mut smallest = f64::INFINITY;
    let mut residual_norm: f64 = 0.0;
    for r in results {
        let (m, ls, hn) = r?;
        smallest = smallest.min(ls.sigma_min);
        if !is_consistent(&ls, hn) {
            let (idx, norm) = ls
                .residual
                .iter()
                .enumerate()
                .map(|(i, x)| (i, x.modulus()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            return Err(CohomologyError::ObstructionNonzero {
                mode: m,
                generator: idx / d,
                component: idx % d,
                norm,
            });
        }
        check_conditioning(&ls)?;
        residual_norm = residual_norm.max(sup_norm(&ls.residual));
        for (a, x) in ls.solution.into_iter().enumerate() {
            per_comp[a].push((m, x));
        }
    }
    let values: Vec<FourierPoly<S>> = per_comp.into_iter().map(FourierPoly::from_terms).collect();
    let rhs: Vec<FourierPoly<S>> = problem
        .generators
        .iter()
        .flat_map(|g| g.rhs.clone())
        .collect();
    Ok(CochainSolution {
        solution_norm: coeff_sup(&values),
        rhs_norm: coeff_sup(&rhs),
        residual_norm,
        smallest_divisor: smallest,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KNorm {
    Sup,
    Euclidean,
}

/// `K = max |solution| / |rhs|` over the family.
pub fn estimate_k<S: Scalar>(
    family: &[TwistedCochainProblem<S>],
    norm: KNorm,
) -> Result<f64, CohomologyError> {
    let measure = |v: &[S]| match norm {
        KNorm::Sup => sup_norm(v),
        KNorm::Euclidean => v.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt(),
    };
    let mut k: f64 = 0.0;
    for (index, p) in family.iter().enumerate() {
        let (sol, rhs): (Vec<S>, Vec<S>) = match p {
            TwistedCochainProblem::Nerve(np) => match nerve_coboundary_solve(np)? {
                NerveOutcome::Solved(s) => (s.values.concat(), np.flat_rhs()),
                NerveOutcome::Obstruction { .. } => {
                    return Err(CohomologyError::Unsolvable { index })
                }
            },
            TwistedCochainProblem::Group(gp) => {
                let s = mode_coboundary_solve(gp).map_err(|e| match e {
                    CohomologyError::ObstructionNonzero { .. } => {
                        CohomologyError::Unsolvable { index }
                    }
                    other => other,
                })?;
                let sol = s
                    .values
                    .iter()
                    .flat_map(|p| p.terms().iter().map(|t| t.1.clone()))
                    .collect();
                let rhs = gp
                    .generators
                    .iter()
                    .flat_map(|g| {
                        g.rhs
                            .iter()
                            .flat_map(|p| p.terms().iter().map(|t| t.1.clone()))
                    })
                    .collect();
                (sol, rhs)
            }
        };
        let r = measure(&rhs);
        if r > 0.0 {
            k = k.max(measure(&sol) / r);
        }
    }
    Ok(k)
}

/// JSON problem file for the float models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ProblemJson {
    Nerve {
        nerve: Nerve,
        dim: usize,
        weights: Vec<Vec<Vec<[f64; 2]>>>,
        rhs: Vec<Vec<[f64; 2]>>,
    },
    Group {
        dim: usize,
        max_modes: i32,
        generators: Vec<GeneratorJson>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub weight: Vec<Vec<[f64; 2]>>,
    pub translation: [Turn; 2],
    /// Map from `"m1,m2"` to the coefficient vector.
    pub rhs: BTreeMap<String, Vec<[f64; 2]>>,
}

fn c(x: &[f64; 2]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

fn mat(rows: &[Vec<[f64; 2]>]) -> Mat<Complex64> {
    Mat::from_rows(rows.iter().map(|r| r.iter().map(c).collect()).collect())
}

fn parse_mode(key: &str) -> Result<Mode, CohomologyError> {
    let bad = || CohomologyError::InvalidProblem(format!("mode key '{key}' is not 'm1,m2'"));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok([
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ])
}

impl ProblemJson {
    pub fn into_problem(self) -> Result<TwistedCochainProblem<Complex64>, CohomologyError> {
        match self {
            ProblemJson::Nerve {
                nerve,
                dim,
                weights,
                rhs,
            } => {
                let w = weights.iter().map(|m| mat(m)).collect();
                let h = rhs.iter().map(|v| v.iter().map(c).collect()).collect();
                Ok(TwistedCochainProblem::Nerve(NerveProblem::new(
                    nerve, dim, w, h,
                )?))
            }
            ProblemJson::Group {
                dim,
                max_modes,
                generators,
            } => {
                let mut gens = Vec::new();
                for g in generators {
                    let mut comps: Vec<Vec<(Mode, Complex64)>> = vec![vec![]; dim];
                    for (key, v) in &g.rhs {
                        let m = parse_mode(key)?;
                        if v.len() != dim {
                            return Err(CohomologyError::InvalidProblem(format!(
                                "mode {key} has {} entries",
                                v.len()
                            )));
                        }
                        for (a, x) in v.iter().enumerate() {
                            comps[a].push((m, c(x)));
                        }
                    }
                    gens.push(Generator {
                        weight: mat(&g.weight),
                        translation: g.translation,
                        rhs: comps.into_iter().map(FourierPoly::from_terms).collect(),
                    });
                }
                Ok(TwistedCochainProblem::Group(GroupProblem::new(
                    dim, gens, max_modes,
                )?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::Cyclotomic;
    use num_complex::Complex64 as C;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_mat(x: C) -> Mat<C> {
        Mat::from_rows(vec![vec![x]])
    }

    fn tri_nerve() -> Nerve {
        Nerve::new(3, vec![(0, 1), (1, 2), (0, 2)], vec![(0, 1, 2)]).unwrap()
    }

    fn unit(turn: f64) -> C {
        C::from_polar(1.0, std::f64::consts::TAU * turn)
    }

    fn random_b(rng: &mut ChaCha8Rng, v: usize, d: usize) -> Vec<Vec<C>> {
        (0..v)
            .map(|_| {
                (0..d)
                    .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn coboundaries_are_cocycles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Flat weights from vertex potentials: W_jk = g_j g_k^{-1}.
        let g = [unit(0.1), unit(0.35), unit(0.8)];
        let nerve = tri_nerve();
        let weights: Vec<Mat<C>> = nerve
            .edges
            .iter()
            .map(|&(j, k)| scalar_mat(g[j] / g[k]))
            .collect();
        let shell = NerveProblem::new(
            nerve.clone(),
            1,
            weights.clone(),
            vec![vec![C::new(0.0, 0.0)]; 3],
        )
        .unwrap();
        let b = random_b(&mut rng, 3, 1);
        let h = shell.coboundary(&b);
        let p = NerveProblem::new(nerve.clone(), 1, weights.clone(), h.clone()).unwrap();
        let rep = cocycle_check(&p);
        assert!(rep.pass && rep.max_violation < 1e-15);

        let mut h2 = h;
        h2[1][0] += C::new(1e-3, 0.0);
        let rep = cocycle_check(&NerveProblem::new(nerve, 1, weights, h2).unwrap());
        assert!(!rep.pass);
        assert!((rep.max_violation - 1e-3).abs() < 1e-12);
        assert_eq!(rep.worst_triangle, Some(0));
    }

    #[test]
    fn empty_triangle_list_passes() {
        let p = NerveProblem::new(
            Nerve::cycle(3),
            1,
            vec![scalar_mat(C::new(1.0, 0.0)); 3],
            vec![vec![C::new(1.0, 0.0)]; 3],
        )
        .unwrap();
        let rep = cocycle_check(&p);
        assert!(rep.pass);
        assert_eq!(rep.worst_triangle, None);
    }

    #[test]
    fn non_flat_weights_are_rejected() {
        let w = vec![
            scalar_mat(unit(0.1)),
            scalar_mat(unit(0.2)),
            scalar_mat(unit(0.1)),
        ];
        let err =
            NerveProblem::new(tri_nerve(), 1, w, vec![vec![C::new(0.0, 0.0)]; 3]).unwrap_err();
        assert!(matches!(
            err,
            CohomologyError::WeightsNotCocycle { triangle: 0, .. }
        ));
    }

    fn three_cycle(t: C, a: [f64; 3]) -> NerveProblem<C> {
        NerveProblem::new(
            Nerve::cycle(3),
            1,
            vec![scalar_mat(t); 3],
            a.iter().map(|&x| vec![C::new(x, 0.0)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_three_cycle_solvable_iff_sum_vanishes() {
        let one = C::new(1.0, 0.0);
        let zero = nerve_coboundary_solve(&three_cycle(one, [0.0; 3])).unwrap();
        assert_eq!(zero.solution().unwrap().solution_norm, 0.0);
        let ok = nerve_coboundary_solve(&three_cycle(one, [1.0, 2.0, -3.0])).unwrap();
        let s = ok.solution().unwrap();
        // Minimum norm: the solution sums to zero (orthogonal to constants).
        let sum: C = s.values.iter().map(|v| v[0]).sum();
        assert!(sum.norm() < 1e-12);
        match nerve_coboundary_solve(&three_cycle(one, [1.0, 1.0, 1.0])).unwrap() {
            NerveOutcome::Obstruction {
                representative,
                norm,
                ..
            } => {
                // Projection of (1,1,1) onto the cokernel spanned by (1,1,1).
                assert!((norm - 1.0).abs() < 1e-12);
                for v in representative {
                    assert!((v[0] - C::new(1.0, 0.0)).norm() < 1e-12);
                }
            }
            other => panic!("expected obstruction, got {other:?}"),
        }
    }

    #[test]
    fn twisted_three_cycle_is_uniquely_solvable() {
        let t = unit(0.3);
        let p = three_cycle(t, [1.0, -2.0, 0.5]);
        let s = nerve_coboundary_solve(&p)
            .unwrap()
            .solution()
            .unwrap()
            .clone();
        let back = p.coboundary(&s.values);
        for (x, y) in back.iter().zip(&p.rhs) {
            assert!((x[0] - y[0]).norm() < 1e-12);
        }
        // Circulant: singular values |1 - t w^k| for cube roots of unity w.
        let sig = (0..3)
            .map(|k| (C::new(1.0, 0.0) - t * unit(k as f64 / 3.0)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!((s.smallest_divisor - sig).abs() < 1e-12);
    }

    #[test]
    fn exact_three_cycle_matches_float() {
        let t = Cyclotomic::zeta_power(10, 3);
        let p = NerveProblem::new(
            Nerve::cycle(3),
            1,
            vec![Mat::from_rows(vec![vec![t.clone()]]); 3],
            vec![
                vec![Cyclotomic::from_integer(1)],
                vec![Cyclotomic::from_integer(-2)],
                vec![Cyclotomic::from_ratio(&num_rational::Ratio::new(1, 2))],
            ],
        )
        .unwrap();
        let exact = nerve_coboundary_solve(&p)
            .unwrap()
            .solution()
            .unwrap()
            .clone();
        assert!(exact.residual_norm == 0.0);
        let float = nerve_coboundary_solve(&three_cycle(unit(0.3), [1.0, -2.0, 0.5]))
            .unwrap()
            .solution()
            .unwrap()
            .clone();
        for (a, b) in exact.values.iter().zip(&float.values) {
            assert!((a[0].to_c64() - b[0]).norm() < 1e-12);
        }
    }

    fn scalar_group(t: C, c: [Turn; 2], rhs: Vec<(Mode, C)>) -> GroupProblem<C> {
        GroupProblem::new(
            1,
            vec![Generator {
                weight: scalar_mat(t),
                translation: c,
                rhs: vec![FourierPoly::from_terms(rhs)],
            }],
            4,
        )
        .unwrap()
    }

    fn zero_turns() -> [Turn; 2] {
        [Turn::rational(0, 1), Turn::rational(0, 1)]
    }

    #[test]
    fn mode_solver_examples() {
        let t = unit(0.3);
        let z = mode_coboundary_solve(&scalar_group(t, zero_turns(), vec![])).unwrap();
        assert!(z.values[0].terms().is_empty());
        let s = mode_coboundary_solve(&scalar_group(
            t,
            zero_turns(),
            vec![([0, 0], C::new(1.0, 0.0))],
        ))
        .unwrap();
        assert!(
            (s.values[0].coeff([0, 0]) - C::new(1.0, 0.0) / (C::new(1.0, 0.0) - t)).norm() < 1e-14
        );
        let err = mode_coboundary_solve(&scalar_group(
            C::new(1.0, 0.0),
            zero_turns(),
            vec![([0, 0], C::new(1.0, 0.0))],
        ))
        .unwrap_err();
        assert!(matches!(
            err,
            CohomologyError::ObstructionNonzero {
                mode: [0, 0],
                component: 0,
                ..
            }
        ));
    }

    #[test]
    fn mode_solver_uses_translation_characters() {
        // F(z) - F(z + c) = h with c = (1/4, 0): mode (1,0) divisor 1 - i.
        let c = [Turn::rational(1, 4), Turn::rational(0, 1)];
        let p = scalar_group(C::new(1.0, 0.0), c, vec![([1, 0], C::new(2.0, 0.0))]);
        let s = mode_coboundary_solve(&p).unwrap();
        let back = p.coboundary(&s.values).unwrap();
        assert!((back[0][0].coeff([1, 0]) - C::new(2.0, 0.0)).norm() < 1e-14);
        assert!((s.smallest_divisor - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nerve_and_group_models_agree_on_a_loop() {
        let t = unit(0.3);
        let nerve = NerveProblem::new(
            Nerve::single_loop(),
            1,
            vec![scalar_mat(t)],
            vec![vec![C::new(0.7, -0.2)]],
        )
        .unwrap();
        let group = scalar_group(t, zero_turns(), vec![([0, 0], C::new(0.7, -0.2))]);
        let a = nerve_coboundary_solve(&nerve)
            .unwrap()
            .solution()
            .unwrap()
            .values[0][0];
        let b = mode_coboundary_solve(&group).unwrap().values[0].coeff([0, 0]);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn estimate_k_for_three_cycle() {
        let t = unit(0.3);
        // Fourier vectors diagonalize the circulant, so each ratio is 1/|1 - t w^k|.
        let family: Vec<TwistedCochainProblem<C>> = (0..3)
            .map(|k| {
                let w = unit(k as f64 / 3.0);
                let rhs = (0..3).map(|j| vec![w.powu(j as u32)]).collect();
                TwistedCochainProblem::Nerve(
                    NerveProblem::new(Nerve::cycle(3), 1, vec![scalar_mat(t); 3], rhs).unwrap(),
                )
            })
            .collect();
        let k = estimate_k(&family, KNorm::Sup).unwrap();
        let p = three_cycle(t, [0.0; 3]);
        let sv = p.coboundary_matrix().to_c64().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((k - 1.0 / smin).abs() < 1e-10);
        let zero = vec![TwistedCochainProblem::Nerve(three_cycle(t, [0.0; 3]))];
        assert_eq!(estimate_k(&zero, KNorm::Sup).unwrap(), 0.0);
        let bad = vec![TwistedCochainProblem::Nerve(three_cycle(
            C::new(1.0, 0.0),
            [1.0; 3],
        ))];
        assert_eq!(
            estimate_k(&bad, KNorm::Sup),
            Err(CohomologyError::Unsolvable { index: 0 })
        );
    }

    #[test]
    fn json_problem_roundtrip() {
        let text = r#"{"model":"group","dim":1,"max_modes":2,
            "generators":[{"weight":[[[1.0,0.0]]],"translation":["1/4","0/1"],"rhs":{"1,0":[[2.0,0.0]]}}]}"#;
        let p: ProblemJson = serde_json::from_str(text).unwrap();
        let TwistedCochainProblem::Group(g) = p.into_problem().unwrap() else {
            panic!()
        };
        assert_eq!(g.modes(), vec![[1, 0]]);
        assert!(mode_coboundary_solve(&g).is_ok());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn mode_solutions_reproduce_rhs_within_divisor_bound(
            phase in 0.05f64..0.95,
            c in (0.0f64..1.0, 0.0f64..1.0),
            coeffs in proptest::collection::vec((-2i32..=2, -2i32..=2, -1.0f64..1.0, -1.0f64..1.0), 1..6),
        ) {
            let rhs: Vec<(Mode, C)> = coeffs.iter().map(|&(a, b, re, im)| ([a, b], C::new(re, im))).collect();
            let p = scalar_group(unit(phase), [Turn::Real(c.0), Turn::Real(c.1)], rhs);
            let Ok(s) = mode_coboundary_solve(&p) else {
                return Ok(());
            };
            let back = p.coboundary(&s.values).unwrap();
            let h = &p.generators[0].rhs[0];
            for m in p.modes() {
                proptest::prop_assert!((back[0][0].coeff(m) - h.coeff(m)).norm() < 1e-10);
                proptest::prop_assert!(s.values[0].coeff(m).norm() <= h.coeff(m).norm() / s.smallest_divisor + 1e-12);
            }
        }

        #[test]
        fn nerve_solution_is_orthogonal_to_constants(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nerve = tri_nerve();
            let weights = vec![scalar_mat(C::new(1.0, 0.0)); 3];
            let shell = NerveProblem::new(nerve.clone(), 1, weights.clone(), vec![vec![C::new(0.0, 0.0)]; 3]).unwrap();
            let h = shell.coboundary(&random_b(&mut rng, 3, 1));
            let p = NerveProblem::new(nerve, 1, weights, h.clone()).unwrap();
            let outcome = nerve_coboundary_solve(&p).unwrap();
            let sol = outcome.solution().unwrap();
            let back = p.coboundary(&sol.values);
            for (x, y) in back.iter().zip(&h) {
                proptest::prop_assert!((x[0] - y[0]).norm() < 1e-10);
            }
            let total: C = sol.values.iter().map(|v| v[0]).sum();
            proptest::prop_assert!(total.norm() < 1e-10);
        }
    }
}
