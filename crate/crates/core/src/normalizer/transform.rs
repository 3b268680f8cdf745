//! Changes of coordinates on germ systems: nonlinear conjugation, linear
//! frame changes, splitting of block-triangular linear parts, finite covers
//! and averaging over deck substitutions.

use num_complex::Complex64;

use super::{
    apply_mat, series_sup, substitute, Generator, GermSeries, GermSystem, NormalizerError,
    UNITARY_TOL,
};
use crate::matrix::{solve, sup_norm, Mat};
use crate::scalar::{Ring, Scalar, Turn};
use crate::series::{SeriesError, TruncatedSeries};

/// Threshold for a consistent splitting equation in float mode.
const SPLIT_TOL: f64 = 1e-10;
/// Torsion tests on float data.
const TORSION_TOL: f64 = 1e-10;

/// The system in coordinates `w_hat = h(z, w)`; `h` must be tangent to the identity.
pub fn conjugate_system<S: Scalar>(
    system: &GermSystem<S>,
    h: &GermSeries<S>,
) -> Result<GermSystem<S>, NormalizerError> {
    let (r, n) = (system.r, system.max_degree);
    if h.r() != r || h.components() != r || h.max_degree() != n {
        return Err(NormalizerError::Invalid(format!(
            "change must have r = {r}, N = {n} and {r} components"
        )));
    }
    let h_inv = GermSeries::reverse(h)?;
    let z_free = h.terms().all(|(_, _, p)| p.is_constant());
    let mut generators = Vec::with_capacity(system.generators.len());
    for gen in &system.generators {
        let moved = substitute(gen, h, n)?;
        let g_hat = GermSeries::compose(&moved, &h_inv)?;
        let f = apply_mat(&gen.t, &g_hat).sub(&GermSeries::identity(r, n));
        let base_terms = match &gen.base_terms {
            None => None,
            Some(_) if !z_free => {
                return Err(NormalizerError::Invalid(
                    "base terms need a z-independent change".into(),
                ));
            }
            Some(d) => Some(TruncatedSeries::compose(
                d,
                &h_inv.map(|p| p.mean().to_c64()),
            )?),
        };
        generators.push(gen.with_data(clean_low(f), base_terms));
    }
    GermSystem::new(r, n, generators)
}

/// The system in coordinates `w_hat = M w` for a constant invertible `M`.
pub fn conjugate_linear<S: Scalar>(
    system: &GermSystem<S>,
    m: &Mat<S>,
) -> Result<GermSystem<S>, NormalizerError> {
    let (r, n) = (system.r, system.max_degree);
    if m.rows != r || m.cols != r {
        return Err(NormalizerError::Invalid(format!(
            "frame change must be {r}x{r}"
        )));
    }
    let m_inv = m
        .inverse()
        .ok_or_else(|| NormalizerError::Invalid("frame change is singular".into()))?;
    let mut lin = TruncatedSeries::<S>::zero(r, n, r);
    for i in 0..r {
        for j in 0..r {
            lin.set(
                &crate::series::MultiIndex::unit(r, j),
                i,
                m_inv.get(i, j).clone(),
            );
        }
    }
    let lin_poly = super::lift(&lin);
    let lin_c64 = lin.map(|x| x.to_c64());
    let mut generators = Vec::with_capacity(system.generators.len());
    for gen in &system.generators {
        let t_hat = m.mul(&gen.t).mul(&m_inv);
        let f_hat = apply_mat(m, &GermSeries::compose(&gen.f, &lin_poly)?);
        let base_terms = match &gen.base_terms {
            Some(d) => Some(TruncatedSeries::compose(d, &lin_c64)?),
            None => None,
        };
        generators.push(Generator::new(
            t_hat,
            gen.translation.clone(),
            clean_low(f_hat),
            base_terms,
        )?);
    }
    GermSystem::new(r, n, generators)
}

/// Zeroes the rounding left in degrees 0 and 1 by float products.
fn clean_low<S: Scalar>(mut f: GermSeries<S>) -> GermSeries<S> {
    let end = f.basis().up_to(1).end;
    for i in 0..end {
        for c in 0..f.components() {
            *f.coeff_at_mut(i, c) = Ring::zero();
        }
    }
    f
}

#[derive(Clone, Debug)]
pub struct SplitResult<S> {
    pub system: GermSystem<S>,
    /// `P` with `P^{-1} T P` block diagonal for every generator.
    pub frame: Mat<S>,
    /// The correction vector `m` in `P = [[1, 0], [m, I]]`.
    pub correction: Vec<S>,
}

/// Conjugates `T = [[t, 0], [a, S]]` to `diag(t, S)` by one common frame.
pub fn split_linear_part<S: Scalar>(
    system: &GermSystem<S>,
) -> Result<SplitResult<S>, NormalizerError> {
    let r = system.r;
    if system.check_unitary().is_ok() {
        return Ok(SplitResult {
            system: system.clone(),
            frame: Mat::identity(r),
            correction: vec![S::zero(); r - 1],
        });
    }
    let k = r - 1;
    let mut op = Mat::<S>::zeros(system.generators.len() * k, k);
    let mut rhs = Vec::with_capacity(system.generators.len() * k);
    for (g, gen) in system.generators.iter().enumerate() {
        let t = &gen.t;
        if (1..r).any(|j| !t.get(0, j).is_zero()) {
            return Err(NormalizerError::Invalid(format!(
                "generator {g}: linear part is not block lower-triangular"
            )));
        }
        let t11 = t.get(0, 0).clone();
        let mut block = Mat::<S>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                block.set(i, j, t.get(i + 1, j + 1).clone());
            }
        }
        let unit = if S::EXACT {
            t11.times(&t11.conj()) == S::one()
        } else {
            (t11.modulus() - 1.0).abs() <= UNITARY_TOL
        };
        let block_ok = if S::EXACT {
            block.mul(&block.adjoint()) == Mat::identity(k)
        } else {
            block.unitarity_defect() <= UNITARY_TOL
        };
        if !unit || !block_ok {
            return Err(NormalizerError::NotUnitary(g, t.unitarity_defect()));
        }
        for i in 0..k {
            for j in 0..k {
                let mut v = block.get(i, j).negated();
                if i == j {
                    v.add_to(&t11);
                }
                op.set(g * k + i, j, v);
            }
            rhs.push(t.get(i + 1, 0).clone());
        }
    }
    let sol = solve(&op, &rhs);
    let res = sup_norm(&sol.residual);
    let consistent = if S::EXACT {
        sol.residual.iter().all(|x| x.is_zero())
    } else {
        res <= SPLIT_TOL * sup_norm(&rhs).max(1.0)
    };
    if !consistent {
        return Err(NormalizerError::NonSplitExtension(res));
    }
    let mut frame = Mat::<S>::identity(r);
    let mut inverse = Mat::<S>::identity(r);
    for i in 0..k {
        frame.set(i + 1, 0, sol.solution[i].clone());
        inverse.set(i + 1, 0, sol.solution[i].negated());
    }
    let mut split = conjugate_linear(system, &inverse)?;
    if !S::EXACT {
        for gen in &mut split.generators {
            let mut t = gen.t.clone();
            for i in 1..r {
                t.set(i, 0, S::zero());
            }
            *gen = Generator::new(
                t,
                gen.translation.clone(),
                gen.f.clone(),
                gen.base_terms.clone(),
            )?;
        }
    }
    split.check_unitary()?;
    Ok(SplitResult {
        system: split,
        frame,
        correction: sol.solution,
    })
}

fn mat_power<S: Scalar>(t: &Mat<S>, d: u64) -> Mat<S> {
    let mut out = Mat::identity(t.rows);
    for _ in 0..d {
        out = out.mul(t);
    }
    out
}

/// Replaces every generator by its `d`-th power.
pub fn power_system<S: Scalar>(
    system: &GermSystem<S>,
    d: u64,
) -> Result<GermSystem<S>, NormalizerError> {
    if d == 0 {
        return Err(NormalizerError::Invalid("power must be positive".into()));
    }
    let (r, n) = (system.r, system.max_degree);
    let id = GermSeries::<S>::identity(r, n);
    let mut generators = Vec::with_capacity(system.generators.len());
    for gen in &system.generators {
        let z_free = gen.f.terms().all(|(_, _, p)| p.is_constant());
        if gen.base_terms.is_some() && !z_free {
            return Err(NormalizerError::Invalid(
                "base terms with z-dependent data cannot be iterated".into(),
            ));
        }
        let mut iterate = id.clone();
        let mut delta: Option<TruncatedSeries<Complex64>> = gen
            .base_terms
            .as_ref()
            .map(|_| TruncatedSeries::zero(r, n, 2));
        for _ in 0..d {
            if let (Some(acc), Some(base)) = (delta.as_mut(), gen.base_terms.as_ref()) {
                let inner = iterate.map(|p| p.mean().to_c64());
                *acc = acc.add(&TruncatedSeries::compose(base, &inner)?);
            }
            iterate = substitute(gen, &iterate, n)?;
        }
        let t_d = mat_power(&gen.t, d);
        let f = apply_mat(&t_d, &iterate).sub(&id);
        let c = [
            gen.translation[0].scaled(d as i64),
            gen.translation[1].scaled(d as i64),
        ];
        let gen_d = match &gen.angles {
            Some(a) => Generator::diagonal(
                a.iter().map(|t| t.scaled(d as i64).reduced()).collect(),
                c,
                clean_low(f),
                delta,
            )?,
            None => Generator::new(t_d, c, clean_low(f), delta)?,
        };
        generators.push(gen_d);
    }
    GermSystem::new(r, n, generators)
}

#[derive(Clone, Debug)]
pub struct AverageResult<S> {
    pub u: GermSeries<S>,
    /// Conjugacy residual of the averaged change.
    pub residual: f64,
    /// Conjugacy residual of the cover solution on the original system.
    pub cover_residual: f64,
}

fn is_torsion_turn(c: &Turn, d: u64) -> bool {
    let v = c.scaled(d as i64);
    match v.is_integer() {
        Some(b) => b,
        None => v.circle_distance() <= TORSION_TOL,
    }
}

/// `u = (1/d) sum_nu P_gamma^nu u_tilde`, applied for each generator in turn.
pub fn finite_cover_average<S: Scalar>(
    system: &GermSystem<S>,
    u_tilde: &GermSeries<S>,
    d: u64,
) -> Result<AverageResult<S>, NormalizerError> {
    if d == 0 {
        return Err(NormalizerError::Invalid(
            "cover degree must be positive".into(),
        ));
    }
    let (r, n) = (system.r, system.max_degree);
    for (g, gen) in system.generators.iter().enumerate() {
        if gen.base_terms.is_some() {
            return Err(NormalizerError::Invalid(format!(
                "generator {g}: averaging needs translation-only base maps"
            )));
        }
        let t_d = mat_power(&gen.t, d);
        let linear_ok = if S::EXACT {
            t_d == Mat::identity(r)
        } else {
            t_d.minus(&Mat::identity(r))
                .data
                .iter()
                .all(|x| x.modulus() <= TORSION_TOL)
        };
        if !linear_ok || !gen.translation.iter().all(|c| is_torsion_turn(c, d)) {
            return Err(NormalizerError::NotTorsion(d));
        }
    }
    if u_tilde.r() != r || u_tilde.components() != r || u_tilde.max_degree() != n {
        return Err(NormalizerError::Invalid(
            "cover solution has the wrong shape".into(),
        ));
    }
    let inv_d = S::from_int(d as i64)
        .inv()
        .expect("positive integer is invertible");
    let inv_d = crate::fourier::FourierPoly::constant(inv_d);
    let mut u = u_tilde.clone();
    for g in 0..system.generators.len() {
        let mut term = u.clone();
        let mut sum = u.clone();
        for _ in 1..d {
            term = system.apply_generator(g, &term, n)?;
            sum = sum.add(&term);
        }
        u = sum.scale(&inv_d);
    }
    for (c, row) in u.linear_part().iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            let expect = if c == l { Ring::one() } else { Ring::zero() };
            if !v.approx_eq(&expect) {
                return Err(SeriesError::NonIdentityLinearPart.into());
            }
        }
    }
    let mut residual: f64 = 0.0;
    let mut cover_residual: f64 = 0.0;
    for g in 0..system.generators.len() {
        residual = residual.max(series_sup(&system.residual(g, &u, n)?));
        cover_residual = cover_residual.max(series_sup(&system.residual(g, u_tilde, n)?));
    }
    Ok(AverageResult {
        u,
        residual,
        cover_residual,
    })
}
