//! Majorant series for the normalization: the plain recursion
//!
//! `A = 2K A (-1 + prod_l 1/(1 - R(X_l + A))) + 2KM (-1 - R(sum_l X_l + r A) + prod_l 1/(1 - R(X_l + A)))`,
//!
//! its variant with the shell-`n` left side weighted by `eps^{-1}_{n-1}`,
//! a Newton cross-check on the implicit polynomial equation, and the
//! one-variable diagonal series `B` and `B-hat`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundles::EpsilonSequence;
use crate::series::{MonomialBasis, MultiIndex, TruncatedSeries};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum MajorantError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("torsion divisor: eps^-1_{0} = 0, the recursion has no solution at degree {}", .0 + 1)]
    TorsionDivisor(usize),
    #[error("epsilon sequence has {got} terms, degree {need} needs {need_terms}", need_terms = .need - 1)]
    EpsilonTooShort { got: usize, need: u32 },
    #[error("coefficient overflow at degree {0}")]
    Overflow(u32),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorantParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "R")]
    pub radius_inverse: f64,
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSequence>,
}

impl MajorantParams {
    pub fn new(k: f64, m: f64, radius_inverse: f64, r: usize) -> Result<Self, MajorantError> {
        let p = MajorantParams {
            k,
            m,
            radius_inverse,
            r,
            epsilon: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_epsilon(mut self, eps: EpsilonSequence) -> Result<Self, MajorantError> {
        self.epsilon = Some(eps);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), MajorantError> {
        for (name, v) in [("K", self.k), ("M", self.m), ("R", self.radius_inverse)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MajorantError::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.r == 0 {
            return Err(MajorantError::InvalidParams("r must be at least 1".into()));
        }
        if let Some(e) = &self.epsilon {
            if (e.k - self.k).abs() > 1e-12 * self.k {
                return Err(MajorantError::InvalidParams(format!(
                    "epsilon K = {} differs from K = {}",
                    e.k, self.k
                )));
            }
        }
        Ok(())
    }
}

/// Coefficients `A_a` for `2 <= |a| <= N` and their shell sums.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantSeries {
    pub params: MajorantParams,
    pub weighted: bool,
    pub coeffs: TruncatedSeries<f64>,
}

impl MajorantSeries {
    pub fn max_degree(&self) -> u32 {
        self.coeffs.max_degree()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.coeff(alpha, 0)
    }

    /// `B_n = sum_{|a| = n} A_a`, indexed by `n`, with `B_1 = 1`.
    pub fn shell_sums(&self) -> Vec<f64> {
        let basis = self.coeffs.basis();
        (0..=self.max_degree())
            .map(|n| match n {
                0 => 0.0,
                1 => 1.0,
                _ => basis
                    .shell_range(n)
                    .map(|i| *self.coeffs.coeff_at(i, 0))
                    .sum(),
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let basis = self.coeffs.basis();
        let terms: Vec<serde_json::Value> = basis
            .up_to(self.max_degree())
            .filter(|&i| basis.degree_of(i) >= 2)
            .map(|i| serde_json::json!({ "alpha": basis.monomial(i), "value": self.coeffs.coeff_at(i, 0) }))
            .collect();
        serde_json::json!({
            "r": self.params.r,
            "N": self.max_degree(),
            "weighted": self.weighted,
            "terms": terms,
        })
    }
}

/// Dense scalar coefficients over a monomial basis.
struct ShellSeries {
    basis: Arc<MonomialBasis>,
    c: Vec<f64>,
}

impl ShellSeries {
    fn zero(basis: &Arc<MonomialBasis>) -> Self {
        ShellSeries {
            basis: basis.clone(),
            c: vec![0.0; basis.len()],
        }
    }

    /// Degree-`n` shell of `self * other`, written into `out`.
    fn shell_product(&self, other: &ShellSeries, n: u32, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let start = self.basis.shell_range(n).start;
        for d in 0..=n {
            for i in self.basis.shell_range(d) {
                let a = self.c[i];
                if a == 0.0 {
                    continue;
                }
                for j in self.basis.shell_range(n - d) {
                    let b = other.c[j];
                    if b == 0.0 {
                        continue;
                    }
                    let k = self.basis.product_index(i, j).expect("degree fits");
                    out[k - start] += a * b;
                }
            }
        }
    }
}

pub fn majorant_series(
    params: &MajorantParams,
    n_max: u32,
) -> Result<MajorantSeries, MajorantError> {
    params.validate()?;
    if params.epsilon.is_some() {
        return Err(MajorantError::InvalidParams(
            "plain variant takes no epsilon sequence".into(),
        ));
    }
    run_recursion(params, n_max, None)
}

pub fn weighted_majorant_series(
    params: &MajorantParams,
    n_max: u32,
) -> Result<MajorantSeries, MajorantError> {
    params.validate()?;
    let eps = params.epsilon.as_ref().ok_or_else(|| {
        MajorantError::InvalidParams("weighted variant needs an epsilon sequence".into())
    })?;
    if (eps.len() as u32) < n_max.saturating_sub(1) {
        return Err(MajorantError::EpsilonTooShort {
            got: eps.len(),
            need: n_max,
        });
    }
    for n in 2..=n_max as usize {
        if eps.inv(n - 1) <= 0.0 {
            return Err(MajorantError::TorsionDivisor(n - 1));
        }
    }
    run_recursion(params, n_max, Some(eps))
}

/// Shell-by-shell solution. The geometric factors `g_l = 1/(1 - u_l)` are
/// built from `g_l = 1 + u_l g_l` with truncated products, and `H` holds
/// the running products `g_1 ... g_k`.
fn run_recursion(
    params: &MajorantParams,
    n_max: u32,
    eps: Option<&EpsilonSequence>,
) -> Result<MajorantSeries, MajorantError> {
    if n_max < 2 {
        return Err(MajorantError::InvalidParams(format!(
            "N must be at least 2, got {n_max}"
        )));
    }
    let r = params.r;
    let rr = params.radius_inverse;
    let basis = MonomialBasis::get(r, n_max);
    let mut a = ShellSeries::zero(&basis);
    let mut u: Vec<ShellSeries> = (0..r).map(|_| ShellSeries::zero(&basis)).collect();
    let mut g: Vec<ShellSeries> = (0..r).map(|_| ShellSeries::zero(&basis)).collect();
    let mut h: Vec<ShellSeries> = (0..r).map(|_| ShellSeries::zero(&basis)).collect();
    for l in 0..r {
        g[l].c[0] = 1.0;
        h[l].c[0] = 1.0;
        let i = basis.index_of(&MultiIndex::unit(r, l)).unwrap();
        u[l].c[i] = rr;
    }
    // G - 1 with G = h[r-1]; kept as a separate series for the A (G - 1) term.
    let mut g_minus_one = ShellSeries::zero(&basis);
    let (lin_a, lin_m) = match eps {
        None => (2.0 * params.k, 2.0 * params.k * params.m),
        Some(_) => (2.0, 2.0 * params.m),
    };

    let fill_shell =
        |n: u32, u: &Vec<ShellSeries>, g: &mut Vec<ShellSeries>, h: &mut Vec<ShellSeries>| {
            let range = basis.shell_range(n);
            let mut buf = vec![0.0; range.len()];
            for l in 0..r {
                u[l].shell_product(&g[l], n, &mut buf);
                g[l].c[range.clone()].copy_from_slice(&buf);
            }
            h[0].c[range.clone()].copy_from_slice(&g[0].c[range.clone()]);
            for l in 1..r {
                h[l - 1].shell_product(&g[l], n, &mut buf);
                h[l].c[range.clone()].copy_from_slice(&buf);
            }
        };

    fill_shell(1, &u, &mut g, &mut h);
    let sync_g_minus_one = |n: u32, h: &Vec<ShellSeries>, gm: &mut ShellSeries| {
        for i in basis.shell_range(n) {
            gm.c[i] = h[r - 1].c[i];
        }
    };
    sync_g_minus_one(1, &h, &mut g_minus_one);

    for n in 2..=n_max {
        let range = basis.shell_range(n);
        // Shell n of G with A_n = 0; the A_n contribution r R A_n cancels
        // against -r R A on the right side.
        fill_shell(n, &u, &mut g, &mut h);
        let mut prod = vec![0.0; range.len()];
        a.shell_product(&g_minus_one, n, &mut prod);
        let weight = eps.map_or(1.0, |e| 1.0 / e.inv(n as usize - 1));
        for (k, i) in range.clone().enumerate() {
            let rhs = lin_a * prod[k] + lin_m * h[r - 1].c[i];
            let v = rhs * weight;
            if !v.is_finite() {
                return Err(MajorantError::Overflow(n));
            }
            a.c[i] = v;
        }
        for l in 0..r {
            for i in range.clone() {
                u[l].c[i] = rr * a.c[i];
            }
        }
        fill_shell(n, &u, &mut g, &mut h);
        sync_g_minus_one(n, &h, &mut g_minus_one);
    }

    let mut coeffs = TruncatedSeries::<f64>::zero(r, n_max, 1);
    for i in basis.up_to(n_max) {
        *coeffs.coeff_at_mut(i, 0) = a.c[i];
    }
    Ok(MajorantSeries {
        params: params.clone(),
        weighted: eps.is_some(),
        coeffs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheck {
    /// Newton solution `a(X)` of `P(X, a(X)) = 0`.
    pub series: TruncatedSeries<f64>,
    /// Largest `|a_a - A_a| / max(|A_a|, 1e-300)`.
    pub max_relative_deviation: f64,
    pub max_abs_deviation: f64,
    pub iterations: usize,
}

/// Series pieces of `P(X, Y)` and `dP/dY` at `Y = y(X)`.
fn implicit_poly(
    params: &MajorantParams,
    y: &TruncatedSeries<f64>,
) -> (TruncatedSeries<f64>, TruncatedSeries<f64>) {
    let (r, n, k, m, rr) = (
        params.r,
        y.max_degree(),
        params.k,
        params.m,
        params.radius_inverse,
    );
    let one = TruncatedSeries::constant(r, n, 1.0);
    let q_factors: Vec<TruncatedSeries<f64>> = (0..r)
        .map(|l| one.sub(&TruncatedSeries::variable(r, n, l).add(y).scale(&rr)))
        .collect();
    let mut q = one.clone();
    for f in &q_factors {
        q = q.mul(f);
    }
    // dQ/dY = -R sum_l prod_{m != l} q_m
    let mut q_y = TruncatedSeries::zero(r, n, 1);
    for l in 0..r {
        let mut p = one.clone();
        for (j, f) in q_factors.iter().enumerate() {
            if j != l {
                p = p.mul(f);
            }
        }
        q_y = q_y.add(&p.scale(&-rr));
    }
    let mut sum_x = TruncatedSeries::zero(r, n, 1);
    for l in 0..r {
        sum_x = sum_x.add(&TruncatedSeries::variable(r, n, l));
    }
    let lin = one.add(&sum_x.add(&y.scale(&(r as f64))).scale(&rr)).neg();
    let p = q
        .mul(y)
        .neg()
        .add(&y.mul(&one.sub(&q)).scale(&(2.0 * k)))
        .add(&q.mul(&lin).add(&one).scale(&(2.0 * k * m)));
    let p_y = q_y
        .mul(y)
        .neg()
        .sub(&q)
        .add(&one.sub(&q).scale(&(2.0 * k)))
        .sub(&y.mul(&q_y).scale(&(2.0 * k)))
        .add(
            &q_y.mul(&lin)
                .sub(&q.scale(&(r as f64 * rr)))
                .scale(&(2.0 * k * m)),
        );
    (p, p_y)
}

/// Coefficients of `P(0, Y)` through `Y^deg`.
pub fn implicit_poly_at_origin(params: &MajorantParams, deg: u32) -> Vec<f64> {
    let y = TruncatedSeries::<f64>::variable(1, deg, 0);
    let one = TruncatedSeries::constant(1, deg, 1.0);
    let f = one.sub(&y.scale(&params.radius_inverse));
    let mut q = one.clone();
    for _ in 0..params.r {
        q = q.mul(&f);
    }
    let (k, m, rr, r) = (params.k, params.m, params.radius_inverse, params.r as f64);
    let lin = one.add(&y.scale(&(r * rr))).neg();
    let p = q
        .mul(&y)
        .neg()
        .add(&y.mul(&one.sub(&q)).scale(&(2.0 * k)))
        .add(&q.mul(&lin).add(&one).scale(&(2.0 * k * m)));
    (0..=deg)
        .map(|d| p.coeff(&MultiIndex(vec![d]), 0))
        .collect()
}

/// Solves `P(X, a(X)) = 0`, `a(0) = 0`, by power-series Newton iteration and
/// compares with the plain recursion.
pub fn implicit_cross_check(
    params: &MajorantParams,
    n_max: u32,
) -> Result<CrossCheck, MajorantError> {
    let reference = majorant_series(params, n_max)?;
    let mut a = TruncatedSeries::<f64>::zero(params.r, n_max, 1);
    let mut iterations = 0;
    // Each step doubles the number of correct shells.
    let needed = (n_max as f64).log2().ceil() as usize + 2;
    for _ in 0..needed + 8 {
        iterations += 1;
        let (p, p_y) = implicit_poly(params, &a);
        let inv = p_y
            .inverse()
            .map_err(|e| MajorantError::NewtonDiverged(format!("dP/dY not invertible: {e}")))?;
        let step = p.mul(&inv);
        a = a.sub(&step);
        let size = step.terms().map(|(_, _, c)| c.abs()).fold(0.0, f64::max);
        let scale = a.terms().map(|(_, _, c)| c.abs()).fold(1.0, f64::max);
        if !size.is_finite() {
            return Err(MajorantError::NewtonDiverged(
                "non-finite correction".into(),
            ));
        }
        if iterations >= needed && size <= 1e-15 * scale {
            break;
        }
    }
    let (p, _) = implicit_poly(params, &a);
    let residual = p.terms().map(|(_, _, c)| c.abs()).fold(0.0, f64::max);
    let scale = a.terms().map(|(_, _, c)| c.abs()).fold(1.0, f64::max);
    if residual > 1e-9 * scale {
        return Err(MajorantError::NewtonDiverged(format!(
            "residual {residual:e} after {iterations} steps"
        )));
    }
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let basis = a.basis().clone();
    for i in basis.up_to(n_max) {
        let x = *a.coeff_at(i, 0);
        let y = *reference.coeffs.coeff_at(i, 0);
        let d = (x - y).abs();
        max_abs = max_abs.max(d);
        max_rel = max_rel.max(if y == 0.0 { d } else { d / y.abs() });
    }
    Ok(CrossCheck {
        series: a,
        max_relative_deviation: max_rel,
        max_abs_deviation: max_abs,
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalVariant {
    Plain,
    Hat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalBounds {
    pub variant: DiagonalVariant,
    /// `ln B_n` (or `ln B-hat_n`) for `n = 0..=N`; `-inf` for zero.
    pub log_values: Vec<f64>,
    /// Tail ratio estimate of the radius of convergence. Heuristic only.
    pub radius_estimate: Option<f64>,
}

impl DiagonalBounds {
    /// Values for `n = 0..=N`; may be `inf` where `exp` overflows.
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln C(r + k - 1, k)`, the coefficients of `(1 - x)^{-r}`.
fn ln_binomial_series(r: usize, k: usize) -> f64 {
    (1..=k).map(|j| ((r + j - 1) as f64 / j as f64).ln()).sum()
}

/// One-variable recursion for `B-hat(Y) = Y + sum B-hat_n Y^n` in log
/// space; all terms are nonnegative.
pub fn hat_series(params: &MajorantParams, n_max: u32) -> Result<Vec<f64>, MajorantError> {
    params.validate()?;
    let n_max = n_max as usize;
    let inv_eps = |n: usize| -> Result<f64, MajorantError> {
        match &params.epsilon {
            None => Ok(1.0 / params.k),
            Some(e) => {
                if n > e.len() {
                    return Err(MajorantError::EpsilonTooShort {
                        got: e.len(),
                        need: n as u32 + 1,
                    });
                }
                let v = e.inv(n);
                if v <= 0.0 {
                    Err(MajorantError::TorsionDivisor(n))
                } else {
                    Ok(v)
                }
            }
        }
    };
    // Without a sequence, eps^-1 = 1/K turns the factors 2, 2M into 2K, 2KM.
    let (two_a, two_m): (f64, f64) = (2.0, 2.0 * params.m);
    let (r, ln_r) = (params.r, params.radius_inverse.ln());
    let mut lb = vec![f64::NEG_INFINITY; n_max + 1];
    if n_max >= 1 {
        lb[1] = 0.0;
    }
    // pw[k][m] = ln [B-hat^k]_m
    let mut pw = vec![vec![f64::NEG_INFINITY; n_max + 1]; n_max + 1];
    if n_max >= 1 {
        pw[1][1] = 0.0;
    }
    // ln of the weight of B-hat^k on the right side, k >= 2.
    let weight = |k: usize| -> f64 {
        let a = two_a.ln() + ln_binomial_series(r, k - 1) + (k - 1) as f64 * ln_r;
        let b = two_m.ln() + ln_binomial_series(r, k) + k as f64 * ln_r;
        log_sum_exp(a, b)
    };
    for n in 2..=n_max {
        let mut rhs = f64::NEG_INFINITY;
        for k in 2..=n {
            let mut acc = f64::NEG_INFINITY;
            for j in (k - 1)..n {
                let l = n - j;
                acc = log_sum_exp(acc, pw[k - 1][j] + lb[l]);
            }
            pw[k][n] = acc;
            rhs = log_sum_exp(rhs, weight(k) + acc);
        }
        lb[n] = rhs - inv_eps(n - 1)?.ln();
        pw[1][n] = lb[n];
    }
    Ok(lb)
}

/// Shell sums (plain) or the hat recursion, with a tail radius estimate over
/// the last `ceil(N/3)` shells.
pub fn diagonal_bounds(
    series: &MajorantSeries,
    variant: DiagonalVariant,
) -> Result<DiagonalBounds, MajorantError> {
    let log_values = match variant {
        DiagonalVariant::Plain => series.shell_sums().iter().map(|b| b.ln()).collect(),
        DiagonalVariant::Hat => hat_series(&series.params, series.max_degree())?,
    };
    Ok(DiagonalBounds {
        variant,
        radius_estimate: radius_estimate(&log_values),
        log_values,
    })
}

/// `exp((ln B_a - ln B_b) / (b - a))` over the tail shells `a < b = N`.
pub fn radius_estimate(log_values: &[f64]) -> Option<f64> {
    let n = log_values.len().checked_sub(1)?;
    let tail = n.div_ceil(3).max(2);
    let a = n.checked_sub(tail - 1)?.max(2);
    if a >= n || !log_values[a].is_finite() || !log_values[n].is_finite() {
        return None;
    }
    Some(((log_values[a] - log_values[n]) / (n - a) as f64).exp())
}

/// CSV rows `(n, B_n, B-hat_n, ratio)` with `ratio = B_{n-1} / B_n`.
pub fn diagonal_csv(plain: &DiagonalBounds, hat: &DiagonalBounds) -> String {
    let mut out = String::from("n,B_n,B_hat_n,ratio\n");
    for n in 2..plain.log_values.len() {
        let b = plain.log_values[n];
        let ratio = (plain.log_values[n - 1] - b).exp();
        out.push_str(&format!(
            "{},{:e},{:e},{:e}\n",
            n,
            b.exp(),
            hat.log_values[n].exp(),
            ratio
        ));
    }
    out
}
