//! Unitary flat line bundles on a genus-`g` curve, given by monodromy
//! angles, and the Diophantine classification of bundle tuples.
//!
//! `|a|` for a signed multi-index is the l1 norm. The invariant distance is
//! the maximum over generators of the circle distance of the angles.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::{RationalTurn, Turn};

/// Distances below this count as zero for float angles.
pub const ZERO_DISTANCE_TOL: f64 = 1e-12;
/// Tolerance of rational reconstruction for float angles.
pub const RATIONAL_TOL: f64 = 1e-12;
/// Tolerance for joint spectra and commutators.
pub const SPECTRUM_TOL: f64 = 1e-10;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum BundleError {
    #[error("genus mismatch: {0} vs {1}")]
    GenusMismatch(usize, usize),
    #[error("bundle has {got} angles, expected 2g = {want}")]
    AngleCount { got: usize, want: usize },
    #[error("multi-index has length {got}, tuple has {want} bundles")]
    IndexLength { got: usize, want: usize },
    #[error("matrices {0} and {1} of a family do not commute (|AB - BA| = {2:e})")]
    NonCommuting(usize, usize, f64),
    #[error("matrix {0} of a family is not unitary (defect {1:e})")]
    NotUnitary(usize, f64),
    #[error("families have different shapes: {0}")]
    Shape(String),
    #[error("angle {0} is not a rational with small denominator")]
    NotRational(f64),
}

/// A unitary flat line bundle: one angle (in turns) per generator of the
/// fundamental group, reduced to `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatLineBundle {
    pub angles: Vec<Turn>,
}

impl FlatLineBundle {
    pub fn new(angles: Vec<Turn>) -> Self {
        FlatLineBundle {
            angles: angles.iter().map(Turn::reduced).collect(),
        }
    }

    pub fn trivial(genus: usize) -> Self {
        FlatLineBundle {
            angles: vec![Turn::rational(0, 1); 2 * genus],
        }
    }

    pub fn genus(&self) -> usize {
        self.angles.len() / 2
    }

    pub fn tensor(&self, other: &FlatLineBundle) -> Result<FlatLineBundle, BundleError> {
        if self.angles.len() != other.angles.len() {
            return Err(BundleError::GenusMismatch(self.genus(), other.genus()));
        }
        Ok(FlatLineBundle::new(
            self.angles
                .iter()
                .zip(&other.angles)
                .map(|(a, b)| a.plus(b))
                .collect(),
        ))
    }

    pub fn is_exact(&self) -> bool {
        self.angles.iter().all(Turn::is_exact)
    }
}

/// `d(L, L') = max_i dist_{R/Z}(theta_i, theta'_i)`.
pub fn invariant_distance(l: &FlatLineBundle, m: &FlatLineBundle) -> Result<f64, BundleError> {
    if l.angles.len() != m.angles.len() {
        return Err(BundleError::GenusMismatch(l.genus(), m.genus()));
    }
    Ok(l.angles
        .iter()
        .zip(&m.angles)
        .map(|(a, b)| a.plus(&b.scaled(-1)).circle_distance())
        .fold(0.0, f64::max))
}

/// A direct sum of `r` flat line bundles on a common base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatBundleTuple {
    pub genus: usize,
    pub bundles: Vec<FlatLineBundle>,
}

impl FlatBundleTuple {
    pub fn new(genus: usize, bundles: Vec<FlatLineBundle>) -> Result<Self, BundleError> {
        for b in &bundles {
            if b.angles.len() != 2 * genus {
                return Err(BundleError::AngleCount {
                    got: b.angles.len(),
                    want: 2 * genus,
                });
            }
        }
        Ok(FlatBundleTuple {
            genus,
            bundles: bundles
                .into_iter()
                .map(|b| FlatLineBundle::new(b.angles))
                .collect(),
        })
    }

    /// Validates and reduces angles after deserialization.
    pub fn validated(self) -> Result<Self, BundleError> {
        Self::new(self.genus, self.bundles)
    }

    pub fn r(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_exact(&self) -> bool {
        self.bundles.iter().all(FlatLineBundle::is_exact)
    }

    /// Factors sorted by their angle vectors; the decomposition is unique
    /// only up to this ordering.
    pub fn canonical(&self) -> Self {
        let mut b = self.bundles.clone();
        b.sort_by(|x, y| {
            let kx: Vec<f64> = x.angles.iter().map(Turn::to_f64).collect();
            let ky: Vec<f64> = y.angles.iter().map(Turn::to_f64).collect();
            kx.partial_cmp(&ky).unwrap_or(std::cmp::Ordering::Equal)
        });
        FlatBundleTuple {
            genus: self.genus,
            bundles: b,
        }
    }

    /// Replaces float angles by rationals within `RATIONAL_TOL` with
    /// denominator at most `max_den`.
    pub fn to_exact(&self, max_den: i128) -> Result<Self, BundleError> {
        let mut out = self.clone();
        for b in &mut out.bundles {
            for a in &mut b.angles {
                if let Turn::Real(x) = a {
                    let r = rational_reconstruction(*x, max_den, RATIONAL_TOL)
                        .ok_or(BundleError::NotRational(*x))?;
                    *a = Turn::Exact(RationalTurn(r)).reduced();
                }
            }
        }
        Ok(out)
    }
}

/// `N_a = (x)_l L_l^{a_l}`: angles `sum_l a_l theta_l` mod 1 per generator.
pub fn bundle_combine(tuple: &FlatBundleTuple, a: &[i64]) -> Result<FlatLineBundle, BundleError> {
    if a.len() != tuple.r() {
        return Err(BundleError::IndexLength {
            got: a.len(),
            want: tuple.r(),
        });
    }
    let mut angles = vec![Turn::rational(0, 1); 2 * tuple.genus];
    for (b, &k) in tuple.bundles.iter().zip(a) {
        for (acc, t) in angles.iter_mut().zip(&b.angles) {
            *acc = acc.plus(&t.scaled(k));
        }
    }
    Ok(FlatLineBundle::new(angles))
}

/// Best rational approximation `p/q` with `q <= max_den` via continued
/// fractions, accepted if within `tol`.
pub fn rational_reconstruction(x: f64, max_den: i128, tol: f64) -> Option<Ratio<i128>> {
    let fl = x.floor();
    let mut frac = x - fl;
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut best: Option<Ratio<i128>> = None;
    for _ in 0..64 {
        let a = if frac.is_finite() {
            frac.floor()
        } else {
            break;
        };
        if a > 1e18 {
            break;
        }
        let a = a as i128;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let cand = Ratio::new(p1, q1);
        if ((p1 as f64) / (q1 as f64) - (x - fl)).abs() <= tol {
            best = Some(cand + Ratio::from_integer(fl as i128));
            break;
        }
        let rem = frac - a as f64;
        if rem.abs() < 1e-300 {
            break;
        }
        frac = 1.0 / rem;
    }
    // The first step of the expansion above handles the integer part of 1/x.
    best
}

/// Angles of one generator prepared for fast evaluation of `a . theta`.
#[derive(Clone, Debug)]
enum GeneratorAngles {
    /// Numerators over a common denominator.
    Exact {
        nums: Vec<i128>,
        den: i128,
    },
    Real(Vec<f64>),
}

fn prepare(tuple: &FlatBundleTuple) -> Vec<GeneratorAngles> {
    (0..2 * tuple.genus)
        .map(|i| {
            let turns: Vec<&Turn> = tuple.bundles.iter().map(|b| &b.angles[i]).collect();
            if turns.iter().all(|t| t.is_exact()) {
                let mut den: i128 = 1;
                let mut ok = true;
                for t in &turns {
                    let q = *t.as_ratio().unwrap().denom();
                    let l = den.lcm(&q);
                    if l > (1i128 << 100) {
                        ok = false;
                        break;
                    }
                    den = l;
                }
                if ok {
                    let nums = turns
                        .iter()
                        .map(|t| {
                            let r = t.as_ratio().unwrap();
                            r.numer() * (den / r.denom())
                        })
                        .collect();
                    return GeneratorAngles::Exact { nums, den };
                }
            }
            GeneratorAngles::Real(turns.iter().map(|t| t.to_f64()).collect())
        })
        .collect()
}

impl GeneratorAngles {
    /// Circle distance of `a . theta` and whether it is exactly zero.
    fn distance(&self, a: &[i64]) -> (f64, bool) {
        match self {
            GeneratorAngles::Exact { nums, den } => {
                let mut acc: i128 = 0;
                for (&k, n) in a.iter().zip(nums) {
                    acc = (acc + (k as i128) * (n % den)).rem_euclid(*den);
                }
                let d = acc.min(den - acc);
                (d as f64 / *den as f64, d == 0)
            }
            GeneratorAngles::Real(th) => {
                let mut acc = 0.0;
                for (&k, t) in a.iter().zip(th) {
                    acc += k as f64 * t;
                }
                let y = acc - acc.round();
                let d = y.abs();
                (d, d < ZERO_DISTANCE_TOL)
            }
        }
    }
}

fn distance_to_trivial(gens: &[GeneratorAngles], a: &[i64]) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut all_zero = true;
    for g in gens {
        let (d, z) = g.distance(a);
        worst = worst.max(d);
        all_zero &= z;
    }
    (worst, all_zero)
}

/// Visits the points of the l1 sphere of radius `n` in `Z^r` whose first
/// nonzero coordinate is positive, in a fixed order (coordinates descending
/// from the left). `a` and `-a` give the same distance, so this half suffices.
pub fn for_each_canonical_point(r: usize, n: u64, mut f: impl FnMut(&[i64])) {
    fn rec(pos: usize, rem: i64, leading: bool, a: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        let r = a.len();
        if pos == r - 1 {
            if leading {
                a[pos] = rem;
                f(a);
            } else if rem == 0 {
                a[pos] = 0;
                f(a);
            } else {
                a[pos] = rem;
                f(a);
                a[pos] = -rem;
                f(a);
            }
            return;
        }
        let lo = if leading { 0 } else { -rem };
        for v in (lo..=rem).rev() {
            a[pos] = v;
            rec(pos + 1, rem - v.abs(), leading && v == 0, a, f);
        }
        a[pos] = 0;
    }
    if r == 0 || n == 0 {
        return;
    }
    let mut a = vec![0i64; r];
    rec(0, n as i64, true, &mut a, &mut f);
}

/// Minimum of `d(1, N_a)` over one l1 shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellMinimum {
    pub n: u64,
    pub alpha: Vec<i64>,
    pub distance: f64,
    /// `a . theta` is exactly (exact mode) or numerically (float mode) integral.
    pub vanishes: bool,
}

fn shell_minimum(gens: &[GeneratorAngles], r: usize, n: u64) -> ShellMinimum {
    let mut best = ShellMinimum {
        n,
        alpha: vec![],
        distance: f64::INFINITY,
        vanishes: false,
    };
    for_each_canonical_point(r, n, |a| {
        let (d, z) = distance_to_trivial(gens, a);
        if d < best.distance || (z && !best.vanishes) {
            best = ShellMinimum {
                n,
                alpha: a.to_vec(),
                distance: d,
                vanishes: z,
            };
        }
    });
    best
}

/// Per-shell minima for `1 <= n <= bound`, computed in parallel; the result
/// order does not depend on the thread count.
pub fn shell_minima(tuple: &FlatBundleTuple, bound: u64) -> Vec<ShellMinimum> {
    let gens = prepare(tuple);
    let r = tuple.r();
    (1..=bound)
        .into_par_iter()
        .map(|n| shell_minimum(&gens, r, n))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    /// Finite monodromy image; `order` is the lcm of the angle denominators.
    Torsion { order: u64 },
    /// `d(1, N_a) >= (2|a|)^{-A}` over the scan with the least such `A`.
    Diophantine {
        exponent: f64,
        witness: Vec<i64>,
        witness_distance: f64,
    },
    /// `N_a` is trivial for the listed `a`.
    Violation { witness: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub scan_bound: u64,
    pub torsion_denominator_bound: u64,
    pub shells: Vec<ShellMinimum>,
}

impl ClassificationReport {
    /// Least exponent with `d >= (2|a|)^{-A}` over the scan, `None` on a
    /// violation.
    pub fn fitted_exponent(&self) -> Option<f64> {
        fitted_exponent(&self.shells).map(|(a, _)| a)
    }

    /// CSV rows `(n, alpha, distance, bound, pass)` for the exponent `a`.
    pub fn csv(&self, a: f64) -> String {
        let mut out = String::from("n,alpha,distance,bound,pass\n");
        for s in &self.shells {
            let bound = (2.0 * s.n as f64).powf(-a);
            let alpha: Vec<String> = s.alpha.iter().map(|x| x.to_string()).collect();
            let pass = !s.vanishes && s.distance >= bound;
            out.push_str(&format!(
                "{},{},{:e},{:e},{}\n",
                s.n,
                alpha.join(" "),
                s.distance,
                bound,
                pass
            ));
        }
        out
    }
}

fn fitted_exponent(shells: &[ShellMinimum]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in shells.iter().enumerate() {
        if s.vanishes {
            return None;
        }
        let need = -s.distance.ln() / (2.0 * s.n as f64).ln();
        if best.is_none_or(|(b, _)| need > b) {
            best = Some((need, i));
        }
    }
    best
}

fn torsion_order(tuple: &FlatBundleTuple, bound: u64) -> Option<u64> {
    let mut order: u64 = 1;
    for b in &tuple.bundles {
        for t in &b.angles {
            let q = match t {
                Turn::Exact(r) => *r.0.denom(),
                Turn::Real(x) => *rational_reconstruction(*x, bound as i128, RATIONAL_TOL)?.denom(),
            };
            if q as u64 > bound {
                return None;
            }
            order = order.lcm(&(q as u64));
        }
    }
    Some(order)
}

/// Classifies a tuple: torsion (finite monodromy with small denominators),
/// otherwise the least Diophantine exponent over `1 <= |a| <= scan_bound`,
/// or a violation when some `N_a` is trivial.
pub fn classify(
    tuple: &FlatBundleTuple,
    scan_bound: u64,
    torsion_denominator_bound: u64,
) -> ClassificationReport {
    let shells = shell_minima(tuple, scan_bound.max(1));
    let classification = if let Some(order) = torsion_order(tuple, torsion_denominator_bound) {
        Classification::Torsion { order }
    } else if let Some(s) = shells.iter().find(|s| s.vanishes) {
        Classification::Violation {
            witness: s.alpha.clone(),
        }
    } else {
        let (exponent, i) = fitted_exponent(&shells).expect("nonempty scan");
        Classification::Diophantine {
            exponent,
            witness: shells[i].alpha.clone(),
            witness_distance: shells[i].distance,
        }
    };
    ClassificationReport {
        classification,
        scan_bound,
        torsion_denominator_bound,
        shells,
    }
}

/// `epsilon_n^{-1}` for `1 <= n <= n_max`; zero encodes `epsilon_n = inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSequence {
    pub k: f64,
    pub inverse: Vec<f64>,
}

impl EpsilonSequence {
    pub fn new(k: f64, inverse: Vec<f64>) -> Self {
        EpsilonSequence { k, inverse }
    }

    /// `epsilon_n^{-1}`, 1-based.
    pub fn inv(&self, n: usize) -> f64 {
        self.inverse[n - 1]
    }

    pub fn len(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse.is_empty()
    }

    /// Constant sequence `epsilon_n^{-1} = 1/K`.
    pub fn constant(k: f64, n_max: usize) -> Self {
        EpsilonSequence {
            k,
            inverse: vec![1.0 / k; n_max],
        }
    }
}

/// `epsilon_n^{-1} = (1/K) min_{|a| = n} d(1, N_a)`.
pub fn epsilon_sequence(tuple: &FlatBundleTuple, k: f64, n_max: u64) -> EpsilonSequence {
    let inverse = shell_minima(tuple, n_max)
        .into_iter()
        .map(|s| if s.vanishes { 0.0 } else { s.distance / k })
        .collect();
    EpsilonSequence { k, inverse }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub n: usize,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelReport {
    /// Least `A` on the 0.1 grid with `epsilon_n < (2n)^A`, `None` on failure.
    pub property_a: Option<f64>,
    /// First `n` with `epsilon_n = inf`, if any.
    pub infinite_at: Option<usize>,
    pub property_b: bool,
    pub pairs_checked: usize,
    pub violations: Vec<PairCheck>,
}

/// Slack for the subadditivity comparison, absorbing rounding in `d`.
pub const SUBADDITIVITY_TOL: f64 = 1e-12;

/// `epsilon^{-1}_{n-m} <= epsilon^{-1}_n + epsilon^{-1}_m`.
pub fn subadditivity_pair(eps: &EpsilonSequence, n: usize, m: usize) -> PairCheck {
    let lhs = eps.inv(n - m);
    let rhs = eps.inv(n) + eps.inv(m);
    PairCheck {
        n,
        m,
        lhs,
        rhs,
        pass: lhs <= rhs + SUBADDITIVITY_TOL,
    }
}

const MAX_GRID_STEPS: u32 = 100_000;

pub fn siegel_check(eps: &EpsilonSequence, m_max: usize) -> SiegelReport {
    let m_max = m_max.min(eps.len());
    let infinite_at = (1..=m_max).find(|&n| eps.inv(n) <= 0.0);
    let property_a = if infinite_at.is_some() {
        None
    } else {
        let holds = |a: f64| (1..=m_max).all(|n| 1.0 / eps.inv(n) < (2.0 * n as f64).powf(a));
        let guess = (1..=m_max)
            .map(|n| (1.0 / eps.inv(n)).ln() / (2.0 * n as f64).ln())
            .fold(0.0f64, f64::max);
        let mut k = ((guess * 10.0).floor() as i64 - 1).max(0) as u32;
        while k <= MAX_GRID_STEPS && !holds(k as f64 / 10.0) {
            k += 1;
        }
        (k <= MAX_GRID_STEPS).then(|| k as f64 / 10.0)
    };
    let mut violations = Vec::new();
    let mut pairs = 0;
    for n in 2..=m_max {
        for m in 1..n {
            pairs += 1;
            let c = subadditivity_pair(eps, n, m);
            if !c.pass {
                violations.push(c);
            }
        }
    }
    SiegelReport {
        property_a,
        infinite_at,
        property_b: violations.is_empty(),
        pairs_checked: pairs,
        violations,
    }
}

/// Decides simultaneous unitary conjugacy of two commuting unitary families
/// by comparing joint spectra.
pub fn monodromy_equivalent(
    t_family: &[DMatrix<Complex64>],
    s_family: &[DMatrix<Complex64>],
) -> Result<bool, BundleError> {
    if t_family.len() != s_family.len() {
        return Err(BundleError::Shape(format!(
            "{} vs {} matrices",
            t_family.len(),
            s_family.len()
        )));
    }
    let dim = |f: &[DMatrix<Complex64>]| f.first().map_or(0, |m| m.nrows());
    if dim(t_family) != dim(s_family) {
        return Err(BundleError::Shape(format!(
            "dimension {} vs {}",
            dim(t_family),
            dim(s_family)
        )));
    }
    let a = joint_spectrum(t_family)?;
    let b = joint_spectrum(s_family)?;
    let mut used = vec![false; b.len()];
    for ta in &a {
        let hit = b.iter().enumerate().position(|(j, tb)| {
            !used[j]
                && ta
                    .iter()
                    .zip(tb)
                    .all(|(x, y)| (x - y).norm() <= SPECTRUM_TOL)
        });
        match hit {
            Some(j) => used[j] = true,
            None => return Ok(false),
        }
    }
    Ok(true)
}

fn max_modulus(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Joint eigenvalue tuples of a commuting family of unitary matrices.
pub fn joint_spectrum(family: &[DMatrix<Complex64>]) -> Result<Vec<Vec<Complex64>>, BundleError> {
    let Some(first) = family.first() else {
        return Ok(vec![]);
    };
    let n = first.nrows();
    for (i, m) in family.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(BundleError::Shape(format!("matrix {i} is not {n}x{n}")));
        }
        let defect = max_modulus(&(m.adjoint() * m - DMatrix::identity(n, n)));
        if defect > SPECTRUM_TOL {
            return Err(BundleError::NotUnitary(i, defect));
        }
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let c = max_modulus(&(&family[i] * &family[j] - &family[j] * &family[i]));
            if c > SPECTRUM_TOL {
                return Err(BundleError::NonCommuting(i, j, c));
            }
        }
    }
    // A generic combination separates the joint eigenspaces.
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for (k, m) in family.iter().enumerate() {
        let c = Complex64::from_polar(1.0 + 0.137 * k as f64, 0.7548776662 * (k + 1) as f64);
        h += m * c;
    }
    let schur = Schur::new(h);
    let (q, _) = schur.unpack();
    let mut tuples: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            let v = q.column(k);
            family.iter().map(|m| v.dotc(&(m * v))).collect()
        })
        .collect();
    tuples.sort_by(|x, y| {
        let kx: Vec<(f64, f64)> = x.iter().map(|c| (c.re, c.im)).collect();
        let ky: Vec<(f64, f64)> = y.iter().map(|c| (c.re, c.im)).collect();
        kx.partial_cmp(&ky).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(tuples)
}
