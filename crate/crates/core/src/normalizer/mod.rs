//! Germ systems `T (w o gamma) = w + f(z, w)`, one relation per deck
//! generator, and their degree-by-degree normalization.
//!
//! A generator acts on the base by `z -> z + c + delta(w)` (the `delta` part
//! is optional and float-only) and on the fibre coordinates by
//! `w o gamma = G(z, w) = T^{-1} (w + f(z, w))`. A coordinate change `u` is
//! normalizing when `T u(z + c + delta(w), G(z, w)) = u(z, w)` for every
//! generator.

mod bounds;
mod examples;
mod json;
mod solve;
mod transform;

pub use bounds::{verify_majorant_bounds, BoundReport, ShellBound};
pub use examples::{generate_example, ExampleParams, EXAMPLE_NAMES};
pub use json::{AnySystem, EntryJson, GeneratorJson, LinearJson, SystemJson};
pub use solve::{
    expand_relation, normalize, obstruction_class, solve_degree, ComponentNorm, DivisorRecord,
    NormalizationReport, NormalizationResult, NormalizationState, NormalizeOptions,
    ObstructionReport, SolveOptions, SystemType, TermRecord,
};
pub use transform::{
    conjugate_linear, conjugate_system, finite_cover_average, power_system, split_linear_part,
    AverageResult, SplitResult,
};

use num_complex::Complex64;

use crate::fourier::FourierPoly;
use crate::majorant::MajorantError;
use crate::matrix::Mat;
use crate::scalar::{Ring, Scalar, ScalarError, Turn};
use crate::series::{MultiIndex, SeriesError, TruncatedSeries};

/// Series in the fibre variables with Fourier-polynomial coefficients in `z`.
pub type GermSeries<S> = TruncatedSeries<FourierPoly<S>>;

/// Default bound on the conjugacy residual in float mode.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Default threshold for a nonzero obstruction, relative to `max(1, |rhs|)`.
pub const OBSTRUCTION_TOL: f64 = 1e-10;
/// Linear parts are accepted as unitary up to this defect in float mode.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum NormalizerError {
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("linear part of generator {0} is not unitary (defect {1:e})")]
    NotUnitary(usize, f64),
    #[error("generator {generator} has a term of degree {degree} at {alpha}; expansions start at degree 2")]
    LowDegreeTerm {
        generator: usize,
        alpha: String,
        degree: u32,
    },
    #[error("system is not of type {level}: generator {generator} has a nonzero term at {alpha}")]
    NotOfType {
        level: u32,
        generator: usize,
        alpha: String,
    },
    #[error("coordinate change has degree {got} above the system truncation {max}")]
    DegreeOverflow { got: u32, max: u32 },
    #[error("nonzero obstruction at level {}", .0.level)]
    ObstructionNonzero(Box<ObstructionReport>),
    #[error("degree {0} is unsolvable under the hypersurface constraint but solvable without it")]
    ConstrainedUnsolvable(u32),
    #[error("linear part does not split (splitting residual {0:e})")]
    NonSplitExtension(f64),
    #[error("monodromy is not of finite order dividing {0}")]
    NotTorsion(u64),
    #[error("majorant premise violated: {0}")]
    PremiseViolated(String),
    #[error("conjugacy residual {0:e} exceeds tolerance {1:e}")]
    ResidualTooLarge(f64, f64),
    #[error("hypersurface check failed: {0} coefficients of u^1 with alpha_1 = 0 are nonzero")]
    HypersurfaceViolated(usize),
    #[error("unknown example '{0}'")]
    UnknownExample(String),
    #[error("base transition terms are only supported in float mode")]
    BaseTermsNeedFloat,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Majorant(#[from] MajorantError),
}

/// One deck generator: `T (w o gamma) = w + f(z, w)`, base shift `c + delta(w)`.
#[derive(Clone, Debug)]
pub struct Generator<S> {
    pub t: Mat<S>,
    t_inv: Mat<S>,
    pub translation: [Turn; 2],
    pub f: GermSeries<S>,
    /// `delta(w)`, two components, zero constant term.
    pub base_terms: Option<TruncatedSeries<Complex64>>,
    /// Angles of a diagonal linear part, kept for serialization.
    pub angles: Option<Vec<Turn>>,
}

impl<S: Scalar> Generator<S> {
    pub fn new(
        t: Mat<S>,
        translation: [Turn; 2],
        f: GermSeries<S>,
        base_terms: Option<TruncatedSeries<Complex64>>,
    ) -> Result<Self, NormalizerError> {
        if t.rows != t.cols {
            return Err(NormalizerError::Invalid(format!(
                "linear part is {}x{}",
                t.rows, t.cols
            )));
        }
        let t_inv = t
            .inverse()
            .ok_or_else(|| NormalizerError::Invalid("linear part is singular".into()))?;
        Ok(Generator {
            t,
            t_inv,
            translation,
            f,
            base_terms,
            angles: None,
        })
    }

    /// Diagonal linear part `diag(exp(2 pi i theta_k))`.
    pub fn diagonal(
        angles: Vec<Turn>,
        translation: [Turn; 2],
        f: GermSeries<S>,
        base_terms: Option<TruncatedSeries<Complex64>>,
    ) -> Result<Self, NormalizerError> {
        let diag = angles
            .iter()
            .map(S::root_of_unity)
            .collect::<Result<Vec<S>, _>>()?;
        let mut gen = Self::new(Mat::diagonal(&diag), translation, f, base_terms)?;
        gen.angles = Some(angles);
        Ok(gen)
    }

    /// Same linear part and base translation with new nonlinear data.
    pub fn with_data(
        &self,
        f: GermSeries<S>,
        base_terms: Option<TruncatedSeries<Complex64>>,
    ) -> Generator<S> {
        Generator {
            f,
            base_terms,
            ..self.clone()
        }
    }

    pub fn t_inv(&self) -> &Mat<S> {
        &self.t_inv
    }

    /// `G(z, w) = T^{-1} (w + f(z, w))`.
    pub fn g_map(&self) -> GermSeries<S> {
        let r = self.f.r();
        let id = GermSeries::<S>::identity(r, self.f.max_degree());
        apply_mat(&self.t_inv, &id.add(&self.f))
    }
}

/// Generators sharing the codimension `r` and truncation degree `N`.
#[derive(Clone, Debug)]
pub struct GermSystem<S> {
    pub r: usize,
    pub max_degree: u32,
    pub generators: Vec<Generator<S>>,
}

impl<S: Scalar> GermSystem<S> {
    pub fn new(
        r: usize,
        max_degree: u32,
        generators: Vec<Generator<S>>,
    ) -> Result<Self, NormalizerError> {
        if r == 0 {
            return Err(NormalizerError::Invalid(
                "codimension must be positive".into(),
            ));
        }
        if max_degree < 2 {
            return Err(NormalizerError::Invalid(
                "truncation degree must be at least 2".into(),
            ));
        }
        if generators.is_empty() {
            return Err(NormalizerError::Invalid(
                "at least one generator is needed".into(),
            ));
        }
        for (g, gen) in generators.iter().enumerate() {
            if gen.t.rows != r {
                return Err(NormalizerError::Invalid(format!(
                    "generator {g}: linear part is not {r}x{r}"
                )));
            }
            if gen.f.r() != r || gen.f.components() != r || gen.f.max_degree() != max_degree {
                return Err(NormalizerError::Invalid(format!(
                    "generator {g}: coefficient data must have r = {r}, N = {max_degree} and {r} components"
                )));
            }
            for (i, _, _) in gen.f.terms() {
                let degree = gen.f.basis().degree_of(i);
                if degree <= 1 {
                    return Err(NormalizerError::LowDegreeTerm {
                        generator: g,
                        alpha: gen.f.basis().monomial(i).to_string(),
                        degree,
                    });
                }
            }
            if let Some(d) = &gen.base_terms {
                if S::EXACT {
                    return Err(NormalizerError::BaseTermsNeedFloat);
                }
                if d.r() != r || d.components() != 2 || d.max_degree() != max_degree {
                    return Err(NormalizerError::Invalid(format!(
                        "generator {g}: base terms must have r = {r}, N = {max_degree} and 2 components"
                    )));
                }
                if !d.constant_term(0).is_zero() || !d.constant_term(1).is_zero() {
                    return Err(NormalizerError::Invalid(format!(
                        "generator {g}: base terms have a constant part"
                    )));
                }
            }
        }
        Ok(GermSystem {
            r,
            max_degree,
            generators,
        })
    }

    /// Errors unless every linear part is unitary.
    pub fn check_unitary(&self) -> Result<(), NormalizerError> {
        for (g, gen) in self.generators.iter().enumerate() {
            let defect = gen.t.unitarity_defect();
            let ok = if S::EXACT {
                gen.t.mul(&gen.t.adjoint()) == Mat::identity(self.r)
            } else {
                defect <= UNITARY_TOL
            };
            if !ok {
                return Err(NormalizerError::NotUnitary(g, defect));
            }
        }
        Ok(())
    }

    /// Largest `n` with `f_alpha = 0` for all `|alpha| <= n` (at least 1).
    pub fn vanishing_order(&self) -> u32 {
        self.generators
            .iter()
            .filter_map(|g| g.f.valuation())
            .min()
            .map_or(self.max_degree, |v| v - 1)
    }

    /// Errors with the first offending term unless the system is of type `n`.
    pub fn check_type(&self, n: u32) -> Result<(), NormalizerError> {
        for (g, gen) in self.generators.iter().enumerate() {
            if let Some(v) = gen.f.valuation() {
                if v <= n {
                    let (i, _, _) = gen.f.terms().next().expect("valuation implies a term");
                    return Err(NormalizerError::NotOfType {
                        level: n,
                        generator: g,
                        alpha: gen.f.basis().monomial(i).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `P_gamma(psi) = T psi(z + c + delta(w), G(z, w))` through degree `deg`.
    pub fn apply_generator(
        &self,
        g: usize,
        psi: &GermSeries<S>,
        deg: u32,
    ) -> Result<GermSeries<S>, NormalizerError> {
        let gen = &self.generators[g];
        let moved = substitute(gen, psi, deg)?;
        Ok(apply_mat(&gen.t, &moved))
    }

    /// `P_gamma(psi) - psi` through degree `deg`.
    pub fn residual(
        &self,
        g: usize,
        psi: &GermSeries<S>,
        deg: u32,
    ) -> Result<GermSeries<S>, NormalizerError> {
        Ok(self.apply_generator(g, psi, deg)?.sub(&psi.truncated(deg)))
    }
}

/// `psi(z + c + delta(w), G(z, w))` through degree `deg`.
pub(crate) fn substitute<S: Scalar>(
    gen: &Generator<S>,
    psi: &GermSeries<S>,
    deg: u32,
) -> Result<GermSeries<S>, NormalizerError> {
    let g_map = gen.g_map();
    let shifted = translate(psi, &gen.translation)?;
    let Some(delta) = &gen.base_terms else {
        return Ok(GermSeries::compose_upto(&shifted, &g_map, deg)?);
    };
    let mut modes: Vec<[i32; 2]> = shifted
        .terms()
        .flat_map(|(_, _, p)| p.terms().iter().map(|t| t.0))
        .collect();
    modes.sort_unstable();
    modes.dedup();
    let mut out = GermSeries::zero(psi.r(), g_map.max_degree(), psi.components());
    for m in modes {
        let part = shifted.map(|p| FourierPoly::monomial(m, p.coeff(m)));
        let composed = GermSeries::compose_upto(&part, &g_map, deg)?;
        let phase = mode_phase::<S>(delta, m, deg);
        out = out.add(&composed.mul_upto(&phase, deg));
    }
    Ok(out)
}

/// `exp(2 pi i m . delta(w))` as a scalar series with constant coefficients.
fn mode_phase<S: Scalar>(
    delta: &TruncatedSeries<Complex64>,
    m: [i32; 2],
    deg: u32,
) -> GermSeries<S> {
    let scale = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let x = delta
        .component(0)
        .scale(&(scale * m[0] as f64))
        .add(&delta.component(1).scale(&(scale * m[1] as f64)));
    let mut sum =
        TruncatedSeries::constant(delta.r(), delta.max_degree(), Complex64::new(1.0, 0.0));
    let mut power = sum.clone();
    for k in 1..=deg {
        power = power
            .mul_upto(&x, deg)
            .scale(&Complex64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&power);
    }
    sum.map(|c| FourierPoly::constant(S::from_c64(*c)))
}

/// Coefficientwise `F(z) -> F(z + c)`.
pub(crate) fn translate<S: Scalar>(
    psi: &GermSeries<S>,
    c: &[Turn; 2],
) -> Result<GermSeries<S>, ScalarError> {
    let mut out = psi.clone();
    for i in 0..psi.basis().len() {
        for k in 0..psi.components() {
            let p = psi.coeff_at(i, k);
            if !p.is_constant() {
                *out.coeff_at_mut(i, k) = p.translated(c)?;
            }
        }
    }
    Ok(out)
}

/// Componentwise `t * s`.
pub(crate) fn apply_mat<S: Scalar>(t: &Mat<S>, s: &GermSeries<S>) -> GermSeries<S> {
    let mut out = GermSeries::zero(s.r(), s.max_degree(), t.rows);
    for (i, c, v) in s.terms() {
        for l in 0..t.rows {
            let a = t.get(l, c);
            if !a.is_zero() {
                out.coeff_at_mut(i, l).add_to(&v.scale(a));
            }
        }
    }
    out
}

/// Largest coefficient modulus bound over all terms.
pub(crate) fn series_sup<S: Scalar>(s: &GermSeries<S>) -> f64 {
    s.terms().map(|(_, _, p)| p.sup_bound()).fold(0.0, f64::max)
}

/// Lifts a constant-coefficient series.
pub fn lift<S: Scalar>(s: &TruncatedSeries<S>) -> GermSeries<S> {
    s.map(|c| FourierPoly::constant(c.clone()))
}

/// Identity change of coordinates at the system's truncation.
pub fn identity_change<S: Scalar>(system: &GermSystem<S>) -> GermSeries<S> {
    GermSeries::identity(system.r, system.max_degree)
}

pub(crate) fn alpha_of<S: Scalar>(s: &GermSeries<S>, i: usize) -> MultiIndex {
    s.basis().monomial(i).clone()
}
