//! Acceptance criteria 1 to 13. Prints one PASS/FAIL line per criterion and
//! exits nonzero on any failure not listed in `KNOWN_FAILURES`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flatnorm::bundles::{
    classify, epsilon_sequence, siegel_check, Classification, FlatBundleTuple, FlatLineBundle,
};
use flatnorm::cyclotomic::Cyclotomic as Q;
use flatnorm::fourier::FourierPoly;
use flatnorm::majorant::{
    diagonal_bounds, implicit_cross_check, majorant_series, DiagonalVariant, MajorantParams,
};
use flatnorm::normalizer::{
    conjugate_system, finite_cover_average, generate_example, identity_change, normalize,
    power_system, AnySystem, ExampleParams, Generator, GermSeries, GermSystem, NormalizeOptions,
    SystemType,
};
use flatnorm::scalar::Turn;
use flatnorm::series::{shell, MultiIndex, TruncatedSeries};

const PARAM_GRID: [f64; 3] = [0.5, 1.0, 2.0];
const C1_TIME: Duration = Duration::from_secs(1);
const C2_TIME: Duration = Duration::from_secs(10);
const C2_REL_TOL: f64 = 1e-10;
const C3_REL_SLACK: f64 = 1e-12;
const C5_RESIDUAL: f64 = 1e-9;
const C5_TIME: Duration = Duration::from_secs(30);
const C6_GRID: i128 = 12;
const C6_DEGREE: u32 = 6;
const C6_NONZERO: f64 = 1e-8;
const C9_EPS_TOL: f64 = 1e-12;
const C9_SUBADD_TOL: f64 = 1e-12;
const C13_TIME: Duration = Duration::from_secs(5);
const C13_THREADS: usize = 4;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn zero_c() -> [Turn; 2] {
    [Turn::rational(0, 1), Turn::rational(0, 1)]
}

fn q(p: i128, d: i128) -> Q {
    Q::from_ratio(&Ratio::new(p, d))
}

fn param_grid() -> impl Iterator<Item = (f64, f64, f64, usize)> {
    PARAM_GRID.into_iter().flat_map(|k| {
        PARAM_GRID.into_iter().flat_map(move |m| {
            PARAM_GRID
                .into_iter()
                .flat_map(move |rr| (1..=3).map(move |r| (k, m, rr, r)))
        })
    })
}

fn c1_degree_two_identity() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for (k, m, rr, r) in param_grid() {
        let s = majorant_series(&MajorantParams::new(k, m, rr, r).map_err(err)?, 2).map_err(err)?;
        let want = 2.0 * k * m * rr * rr;
        for alpha in shell(r, 2) {
            let got = s.coeff(&alpha);
            ensure(got == want, || {
                format!("K={k} M={m} R={rr} r={r} {alpha}: {got} != {want}")
            })?;
            checked += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < C1_TIME, || format!("took {t:?}"))?;
    Ok(format!("{checked} coefficients equal 2KMR^2 in {t:.2?}"))
}

fn c2_newton_agreement() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, m, rr, r) in param_grid() {
        let c = implicit_cross_check(&MajorantParams::new(k, m, rr, r).map_err(err)?, 12)
            .map_err(err)?;
        ensure(c.max_relative_deviation <= C2_REL_TOL, || {
            format!(
                "K={k} M={m} R={rr} r={r}: relative deviation {:e}",
                c.max_relative_deviation
            )
        })?;
        worst = worst.max(c.max_relative_deviation);
    }
    let t = start.elapsed();
    ensure(t < C2_TIME, || format!("took {t:?}"))?;
    Ok(format!(
        "max relative deviation {worst:.2e} over 81 parameter sets in {t:.2?}"
    ))
}

fn c3_positivity_and_diagonal() -> Check {
    let mut min_gap = f64::INFINITY;
    for (k, m, rr, r) in param_grid() {
        let params = MajorantParams::new(k, m, rr, r).map_err(err)?;
        let s = majorant_series(&params, 12).map_err(err)?;
        let b = s.shell_sums();
        for n in 2..=12u32 {
            for alpha in shell(r, n) {
                let a = s.coeff(&alpha);
                ensure(a > 0.0 && a.is_finite(), || {
                    format!("{params:?} {alpha}: A = {a}")
                })?;
                ensure(a <= b[n as usize], || {
                    format!("{params:?} {alpha}: A = {a} > B_{n} = {}", b[n as usize])
                })?;
            }
        }
        let hat = diagonal_bounds(&s, DiagonalVariant::Hat)
            .map_err(err)?
            .values();
        for n in 2..=12 {
            ensure(hat[n] >= b[n] * (1.0 - C3_REL_SLACK), || {
                format!("{params:?}: B-hat_{n} = {} < B_{n} = {}", hat[n], b[n])
            })?;
            min_gap = min_gap.min(hat[n] / b[n]);
        }
    }
    Ok(format!(
        "all A > 0, A <= B_n, min B-hat_n / B_n = {min_gap:.4}"
    ))
}

fn c4_catalan() -> Check {
    let mut fwd = TruncatedSeries::<Q>::identity(1, 5);
    fwd.set(&MultiIndex(vec![2]), 0, Q::from_integer(-1));
    let inv = TruncatedSeries::reverse(&fwd).map_err(err)?;
    let got: Vec<Q> = (1..=5)
        .map(|d| inv.coeff(&MultiIndex(vec![d]), 0))
        .collect();
    let want: Vec<Q> = [1, 1, 2, 5, 14].into_iter().map(Q::from_integer).collect();
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("reverse of u - u^2 is 1, 1, 2, 5, 14 exactly".into())
}

fn c5_linearization() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let p = ExampleParams {
            r: Some(2),
            max_degree: 10,
            f_degree: 3,
            amplitude: 0.1,
            seed,
            ..Default::default()
        };
        let AnySystem::Float(sys) = generate_example("random_diophantine", &p).map_err(err)? else {
            return Err("expected a float system".into());
        };
        let res = normalize(&sys, &NormalizeOptions::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(
            res.system_type == SystemType::Infinite { up_to: 10 },
            || format!("seed {seed}: type {}", res.system_type),
        )?;
        let residual = res.residual.ok_or("missing residual")?;
        ensure(residual < C5_RESIDUAL, || {
            format!("seed {seed}: residual {residual:e}")
        })?;
        worst = worst.max(residual);
    }
    let t = start.elapsed();
    ensure(t < C5_TIME, || format!("took {t:?}"))?;
    Ok(format!("20 systems, max residual {worst:.2e}, {t:.2?}"))
}

/// Dense polynomial maps in two variables truncated at a fixed degree.
mod dulac {
    use super::C;

    pub type Poly = Vec<Vec<C>>;

    pub fn zero(n: usize) -> Poly {
        vec![vec![C::new(0.0, 0.0); n + 1]; n + 1]
    }

    pub fn var(n: usize, l: usize) -> Poly {
        let mut p = zero(n);
        if l == 0 {
            p[1][0] = C::new(1.0, 0.0);
        } else {
            p[0][1] = C::new(1.0, 0.0);
        }
        p
    }

    fn mul(a: &Poly, b: &Poly, n: usize) -> Poly {
        let mut out = zero(n);
        for i in 0..=n {
            for j in 0..=n - i {
                if a[i][j] == C::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..=n - i - j {
                    for l in 0..=n - i - j - k {
                        out[i + k][j + l] += a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn add_scaled(acc: &mut Poly, p: &Poly, s: C) {
        for (ra, rp) in acc.iter_mut().zip(p) {
            for (x, y) in ra.iter_mut().zip(rp) {
                *x += s * y;
            }
        }
    }

    /// `p(g_0, g_1)` for a map `g` without constant term.
    pub fn compose(p: &Poly, g: &[Poly; 2], n: usize) -> Poly {
        let mut xp = vec![{
            let mut one = zero(n);
            one[0][0] = C::new(1.0, 0.0);
            one
        }];
        for _ in 0..n {
            xp.push(mul(xp.last().unwrap(), &g[0], n));
        }
        let mut out = zero(n);
        let mut yp = xp[0].clone();
        for j in 0..=n {
            for i in 0..=n - j {
                if p[i][j] != C::new(0.0, 0.0) {
                    add_scaled(&mut out, &mul(&xp[i], &yp, n), p[i][j]);
                }
            }
            yp = mul(&yp, &g[1], n);
        }
        out
    }

    pub fn compose_map(f: &[Poly; 2], g: &[Poly; 2], n: usize) -> [Poly; 2] {
        [compose(&f[0], g, n), compose(&f[1], g, n)]
    }

    /// Type of `F(w) = T^{-1}(w + f(w))` with `T = diag(e(k_0/q), e(k_1/q))`
    /// by Poincare-Dulac elimination: `Some(d - 1)` for the first degree `d`
    /// with a nonzero resonant coefficient.
    pub fn resonance_type(
        k: [i128; 2],
        q: i128,
        f: &[Poly; 2],
        n: usize,
        nonzero: f64,
    ) -> Option<u32> {
        let mu = |kk: i128| C::from_polar(1.0, -2.0 * std::f64::consts::PI * kk as f64 / q as f64);
        let mut map: [Poly; 2] = [zero(n), zero(n)];
        for l in 0..2 {
            add_scaled(&mut map[l], &var(n, l), mu(k[l]));
            add_scaled(&mut map[l], &f[l], mu(k[l]));
        }
        for d in 2..=n {
            let mut h: [Poly; 2] = [zero(n), zero(n)];
            for l in 0..2 {
                for i in 0..=d {
                    let j = d - i;
                    let c = map[l][i][j];
                    let phase = i as i128 * k[0] + j as i128 * k[1] - k[l];
                    if phase.rem_euclid(q) == 0 {
                        if c.norm() > nonzero {
                            return Some(d as u32 - 1);
                        }
                    } else {
                        let m_alpha = mu(k[0]).powu(i as u32) * mu(k[1]).powu(j as u32);
                        h[l][i][j] = c / (m_alpha - mu(k[l]));
                    }
                }
            }
            let ident = [var(n, 0), var(n, 1)];
            let mut big_h = ident.clone();
            for l in 0..2 {
                add_scaled(&mut big_h[l], &h[l], C::new(1.0, 0.0));
            }
            let mut h_inv = ident.clone();
            for _ in 0..n {
                let hk = compose_map(&h, &h_inv, n);
                for l in 0..2 {
                    h_inv[l] = ident[l].clone();
                    add_scaled(&mut h_inv[l], &hk[l], C::new(-1.0, 0.0));
                }
            }
            map = compose_map(&h_inv, &compose_map(&map, &big_h, n), n);
        }
        None
    }
}

fn c6_resonance_completeness() -> Check {
    let n = C6_DEGREE as usize;
    let mut total = 0;
    let mut histogram = std::collections::BTreeMap::<String, usize>::new();
    for k0 in 0..C6_GRID {
        for k1 in 0..C6_GRID {
            for pattern in 0..5u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(((k0 * C6_GRID + k1) as u64) * 8 + pattern);
                let mut exact = GermSeries::<Q>::zero(2, C6_DEGREE, 2);
                let mut oracle: [dulac::Poly; 2] = [dulac::zero(n), dulac::zero(n)];
                let mut put = |i: usize, j: usize, l: usize, v: i64| {
                    exact.set(
                        &MultiIndex(vec![i as u32, j as u32]),
                        l,
                        FourierPoly::constant(Q::from_integer(v)),
                    );
                    oracle[l][i][j] = C::new(v as f64, 0.0);
                };
                if pattern == 4 {
                    put(1, 1, 0, 1);
                    put(2, 0, 1, 1);
                } else {
                    let d = pattern as usize + 2;
                    for i in 0..=d {
                        for l in 0..2 {
                            put(i, d - i, l, rng.gen_range(-3..=3));
                        }
                    }
                }
                let angles = vec![Turn::rational(k0, C6_GRID), Turn::rational(k1, C6_GRID)];
                let gen = Generator::diagonal(angles, zero_c(), exact, None).map_err(err)?;
                let sys = GermSystem::new(2, C6_DEGREE, vec![gen]).map_err(err)?;
                let solver = match normalize(&sys, &NormalizeOptions::default())
                    .map_err(err)?
                    .system_type
                {
                    SystemType::Finite { level } => Some(level),
                    SystemType::Infinite { .. } => None,
                };
                let brute = dulac::resonance_type([k0, k1], C6_GRID, &oracle, n, C6_NONZERO);
                ensure(solver == brute, || {
                    format!("angles {k0}/{C6_GRID}, {k1}/{C6_GRID}, pattern {pattern}: solver {solver:?}, enumerator {brute:?}")
                })?;
                total += 1;
                *histogram
                    .entry(brute.map_or("inf".into(), |l| l.to_string()))
                    .or_default() += 1;
            }
        }
    }
    Ok(format!(
        "{total}/{total} systems agree, types {histogram:?}"
    ))
}

/// `(1/7, 3/11)`: the first resonance `t^a = t_l` has `|a| = 8`.
fn nonresonant_angles() -> Vec<Turn> {
    vec![Turn::rational(1, 7), Turn::rational(3, 11)]
}

fn random_rational(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

fn random_change(r: usize, n: u32, rng: &mut ChaCha8Rng) -> GermSeries<Q> {
    let mut h = GermSeries::<Q>::identity(r, n);
    for d in 2..=n {
        for alpha in shell(r, d) {
            for c in 0..r {
                if rng.gen_bool(0.5) {
                    h.set(&alpha, c, FourierPoly::constant(random_rational(rng)));
                }
            }
        }
    }
    h
}

/// Type together with the level and verdict of the first obstruction.
fn verdict(sys: &GermSystem<Q>) -> Result<(SystemType, Option<(u32, bool)>), String> {
    let res = normalize(sys, &NormalizeOptions::default()).map_err(err)?;
    Ok((
        res.system_type,
        res.obstruction.map(|o| (o.level, o.nonzero)),
    ))
}

fn c7_obstruction_well_defined() -> Check {
    let n = 5;
    let (mut finite, mut infinite) = (0, 0);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let angles = if seed % 2 == 0 {
            vec![
                Turn::rational(rng.gen_range(0..12), 12),
                Turn::rational(rng.gen_range(0..12), 12),
            ]
        } else {
            nonresonant_angles()
        };
        let mut f = GermSeries::<Q>::zero(2, n, 2);
        for d in 2..=3 {
            for alpha in shell(2, d) {
                for c in 0..2 {
                    if rng.gen_bool(0.4) {
                        f.set(&alpha, c, FourierPoly::constant(random_rational(&mut rng)));
                    }
                }
            }
        }
        let sys = GermSystem::new(
            2,
            n,
            vec![Generator::diagonal(angles, zero_c(), f, None).map_err(err)?],
        )
        .map_err(err)?;
        let h = random_change(2, n, &mut rng);
        let conj = conjugate_system(&sys, &h).map_err(err)?;
        let (a, b) = (verdict(&sys)?, verdict(&conj)?);
        ensure(a == b, || {
            format!("seed {seed}: original {a:?}, conjugate {b:?}")
        })?;
        match a.0 {
            SystemType::Finite { .. } => finite += 1,
            SystemType::Infinite { .. } => infinite += 1,
        }
    }
    Ok(format!("10 conjugations preserve the first obstruction level and verdict ({finite} finite, {infinite} infinite)"))
}

fn c8_hypersurface() -> Check {
    let n = 6;
    let mut terms = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let mut f = GermSeries::<Q>::zero(2, n, 2);
        for d in 2..=4 {
            for alpha in shell(2, d) {
                for c in 0..2 {
                    if (c == 0 && alpha.0[0] == 0) || !rng.gen_bool(0.6) {
                        continue;
                    }
                    f.set(&alpha, c, FourierPoly::constant(random_rational(&mut rng)));
                }
            }
        }
        let gen = Generator::diagonal(nonresonant_angles(), zero_c(), f, None).map_err(err)?;
        let sys = GermSystem::new(2, n, vec![gen]).map_err(err)?;
        let opts = NormalizeOptions {
            hypersurface: true,
            ..Default::default()
        };
        let res = normalize(&sys, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(res.residual == Some(0.0), || {
            format!("seed {seed}: residual {:?}", res.residual)
        })?;
        let u = res.u.ok_or("missing u")?;
        for (i, c, _) in u.terms() {
            let alpha = u.basis().monomial(i);
            ensure(c != 0 || alpha.0[0] >= 1, || {
                format!("seed {seed}: u^1 has monomial {alpha}")
            })?;
            terms += 1;
        }
    }
    Ok(format!(
        "5 exact systems, {terms} terms of u, none with alpha_1 = 0 in u^1"
    ))
}

/// `min_{|a| = n} max_j ||sum_l a_l theta_lj||` over the whole l1 sphere.
fn brute_epsilon_inverse(angles: &[Vec<f64>], n: i64) -> f64 {
    let r = angles.len();
    let mut best = f64::INFINITY;
    let mut a = vec![0i64; r];
    fn rec(l: usize, left: i64, a: &mut Vec<i64>, angles: &[Vec<f64>], best: &mut f64) {
        if l + 1 == a.len() {
            for s in [left, -left] {
                a[l] = s;
                let d = (0..angles[0].len())
                    .map(|j| {
                        let x: f64 = a
                            .iter()
                            .zip(angles)
                            .map(|(&al, th)| al as f64 * th[j])
                            .sum();
                        (x - x.round()).abs()
                    })
                    .fold(0.0, f64::max);
                *best = best.min(d);
                if left == 0 {
                    break;
                }
            }
            return;
        }
        for v in -left..=left {
            a[l] = v;
            rec(l + 1, left - v.abs(), a, angles, best);
        }
    }
    rec(0, n, &mut a, angles, &mut best);
    best
}

fn tuple_of(angles: &[Vec<f64>]) -> Result<FlatBundleTuple, String> {
    let bundles = angles
        .iter()
        .map(|a| FlatLineBundle::new(a.iter().map(|&x| Turn::Real(x)).collect()))
        .collect();
    FlatBundleTuple::new(1, bundles).map_err(err)
}

/// First pair `n > m` violating `eps^-1_{n-m} <= eps^-1_n + eps^-1_m`,
/// after checking the library sequence and verdict against enumeration.
fn subadditivity_violation(
    angles: &[Vec<f64>],
    pairs: &mut usize,
) -> Result<Option<String>, String> {
    let eps = epsilon_sequence(&tuple_of(angles)?, 1.0, 30);
    let oracle: Vec<f64> = (1..=30).map(|n| brute_epsilon_inverse(angles, n)).collect();
    for n in 1..=30 {
        ensure((eps.inv(n) - oracle[n - 1]).abs() <= C9_EPS_TOL, || {
            format!(
                "{angles:?}: eps^-1_{n} = {} but enumeration gives {}",
                eps.inv(n),
                oracle[n - 1]
            )
        })?;
    }
    let mut first = None;
    for n in 2..=30 {
        for m in 1..n {
            let (lhs, rhs) = (oracle[n - m - 1], oracle[n - 1] + oracle[m - 1]);
            if first.is_none() && lhs > rhs + C9_SUBADD_TOL {
                first = Some(format!("n={n} m={m}: {lhs:.4} > {rhs:.4}"));
            }
            *pairs += 1;
        }
    }
    let report = siegel_check(&eps, 30);
    ensure(report.property_b == first.is_none(), || {
        format!(
            "{angles:?}: checker says {}, enumeration {first:?}",
            report.property_b
        )
    })?;
    Ok(first)
}

fn c9_siegel_subadditivity() -> Check {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let mut tuples = vec![vec![vec![golden, 0.0]]];
    for _ in 0..10 {
        tuples.push(
            (0..2)
                .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                .collect(),
        );
    }
    let mut pairs = 0;
    let mut violations = Vec::new();
    for (i, angles) in tuples.iter().enumerate() {
        if let Some(v) = subadditivity_violation(angles, &mut pairs)? {
            violations.push(format!("tuple {i} (r = {}): {v}", angles.len()));
        }
    }
    let mut single = 0;
    for _ in 0..10 {
        let angles = vec![vec![rng.gen::<f64>(), rng.gen::<f64>()]];
        if let Some(v) = subadditivity_violation(&angles, &mut pairs)? {
            return Err(format!("r = 1 tuple {angles:?}: {v}"));
        }
        single += 1;
    }
    ensure(violations.is_empty(), || {
        format!(
            "{} of 11 tuples violate (b), first {}; all {single} random r = 1 tuples satisfy it",
            violations.len(),
            violations[0]
        )
    })?;
    Ok(format!(
        "{pairs} pairs on 11 tuples and {single} r = 1 tuples, epsilon matches enumeration"
    ))
}

fn c10_finite_cover() -> Check {
    let n = 5;
    let mut cases = 0;
    for d in 2..=4i128 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + d as u64);
        let angles = vec![Turn::rational(1, d), Turn::rational(d - 1, d)];
        let lin = GermSystem::<Q>::new(
            2,
            n,
            vec![
                Generator::diagonal(angles.clone(), zero_c(), GermSeries::zero(2, n, 2), None)
                    .map_err(err)?,
            ],
        )
        .map_err(err)?;
        let sys = conjugate_system(&lin, &random_change(2, n, &mut rng)).map_err(err)?;
        let cover = power_system(&sys, d as u64).map_err(err)?;
        let (a, b) = (
            normalize(&sys, &NormalizeOptions::default()).map_err(err)?,
            normalize(&cover, &NormalizeOptions::default()).map_err(err)?,
        );
        ensure(a.system_type == b.system_type, || {
            format!("d={d}: {} vs cover {}", a.system_type, b.system_type)
        })?;
        let avg = finite_cover_average(&sys, &identity_change(&cover), d as u64).map_err(err)?;
        ensure(avg.residual == 0.0, || {
            format!("d={d}: averaged residual {:e}", avg.residual)
        })?;
        cases += 1;

        let mut f = GermSeries::<Q>::zero(2, n, 2);
        let (alpha, lambda) = (MultiIndex(vec![d as u32 + 1, 0]), 0);
        f.set(&alpha, lambda, FourierPoly::constant(q(1, 2)));
        f.set(&MultiIndex(vec![1, 1]), 1, FourierPoly::constant(q(-1, 3)));
        let res = GermSystem::new(
            2,
            n,
            vec![Generator::diagonal(angles, zero_c(), f, None).map_err(err)?],
        )
        .map_err(err)?;
        let cover = power_system(&res, d as u64).map_err(err)?;
        let (a, b) = (
            normalize(&res, &NormalizeOptions::default()).map_err(err)?,
            normalize(&cover, &NormalizeOptions::default()).map_err(err)?,
        );
        ensure(a.system_type == b.system_type, || {
            format!(
                "d={d} resonant: {} vs cover {}",
                a.system_type, b.system_type
            )
        })?;
        ensure(matches!(a.system_type, SystemType::Finite { .. }), || {
            format!("d={d} resonant: type {}", a.system_type)
        })?;
        cases += 1;
    }
    Ok(format!("{cases} systems of order 2, 3, 4 keep their type on the cover, averages exactly equivariant"))
}

fn c11_projective_bundle() -> Check {
    let mut runs = 0;
    for exact in [true, false] {
        for r in 1..=3usize {
            for a in [
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0],
                vec![0.5, -0.25, 2.0],
                vec![0.0; 3],
            ] {
                let ext: Vec<[f64; 2]> = a[..r].iter().map(|&x| [x, 0.0]).collect();
                let nonzero = ext.iter().any(|e| e[0] != 0.0);
                let p = ExampleParams {
                    r: Some(r),
                    max_degree: 5,
                    exact,
                    extension: Some(ext.clone()),
                    ..Default::default()
                };
                let report = generate_example("projective_bundle", &p)
                    .map_err(err)?
                    .normalize(&NormalizeOptions::default())
                    .map_err(err)?;
                let want = if nonzero {
                    SystemType::Finite { level: 1 }
                } else {
                    SystemType::Infinite { up_to: 5 }
                };
                ensure(report.system_type == want, || {
                    format!("exact={exact} a={ext:?}: type {}", report.system_type)
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} runs: type 1 for a != 0, type inf(5) for a = 0"
    ))
}

fn c12_majorant_tracking() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let p = ExampleParams {
            r: Some(2),
            max_degree: 8,
            f_degree: 8,
            amplitude: 0.1,
            seed: 5000 + seed,
            ..Default::default()
        };
        let AnySystem::Float(sys) = generate_example("random_diophantine", &p).map_err(err)? else {
            return Err("expected a float system".into());
        };
        let probe = MajorantParams::new(1e6, 0.1, 1.0, 2).map_err(err)?;
        let opts = NormalizeOptions {
            track_majorant: Some(probe),
            ..Default::default()
        };
        let k = normalize(&sys, &opts)
            .map_err(err)?
            .bounds
            .ok_or("missing bounds")?
            .k_estimate;
        let params = MajorantParams::new(k, 0.1, 1.0, 2).map_err(err)?;
        let opts = NormalizeOptions {
            track_majorant: Some(params),
            ..Default::default()
        };
        let res = normalize(&sys, &opts).map_err(err)?;
        ensure(res.system_type == SystemType::Infinite { up_to: 8 }, || {
            format!("seed {seed}: type {}", res.system_type)
        })?;
        let report = res.bounds.ok_or("missing bounds")?;
        ensure(report.pass && report.shells.len() == 7, || {
            format!("seed {seed}: {report:?}")
        })?;
        worst = report
            .shells
            .iter()
            .map(|s| s.max_ratio)
            .fold(worst, f64::max);
    }
    Ok(format!(
        "5 systems, shells 2..8, max |F_a| / A_a = {worst:.3e}"
    ))
}

fn c13_scan_performance() -> Check {
    let tuple = FlatBundleTuple::new(
        1,
        vec![
            FlatLineBundle::new(vec![
                Turn::Real((5f64.sqrt() - 1.0) / 2.0),
                Turn::Real(2f64.sqrt() - 1.0),
            ]),
            FlatLineBundle::new(vec![
                Turn::Real(3f64.sqrt() - 1.0),
                Turn::Real(5f64.sqrt() - 2.0),
            ]),
        ],
    )
    .map_err(err)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(C13_THREADS)
        .build()
        .map_err(err)?;
    let start = Instant::now();
    let report = pool.install(|| classify(&tuple, 200, 720));
    let t = start.elapsed();
    ensure(t < C13_TIME, || format!("took {t:?}"))?;
    ensure(
        matches!(report.classification, Classification::Diophantine { .. }),
        || format!("{:?}", report.classification),
    )?;
    let text = serde_json::to_string(&report).map_err(err)?;
    let again = serde_json::to_string(&pool.install(|| classify(&tuple, 200, 720))).map_err(err)?;
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(err)?;
    let single =
        serde_json::to_string(&serial.install(|| classify(&tuple, 200, 720))).map_err(err)?;
    ensure(text == again && text == single, || {
        "reports differ between runs".into()
    })?;
    Ok(format!(
        "scan bound 200 on {C13_THREADS} threads in {t:.2?}, identical on 1 thread"
    ))
}

/// Criteria that cannot hold as stated, with the reason.
const KNOWN_FAILURES: [(usize, &str); 1] = [(
    9,
    "for r >= 2 the minimizers of shells n and m can differ by a vector of length other than n - m",
)];

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("majorant degree-2 identity", c1_degree_two_identity),
        ("majorant recursion vs Newton", c2_newton_agreement),
        ("positivity and diagonal bounds", c3_positivity_and_diagonal),
        ("inversion gives Catalan numbers", c4_catalan),
        ("end-to-end linearization", c5_linearization),
        ("resonance completeness", c6_resonance_completeness),
        ("obstruction well-definedness", c7_obstruction_well_defined),
        ("hypersurface mode", c8_hypersurface),
        ("Siegel subadditivity", c9_siegel_subadditivity),
        ("finite-cover consistency", c10_finite_cover),
        ("projective-bundle example", c11_projective_bundle),
        ("majorant bound tracking", c12_majorant_tracking),
        ("scan performance", c13_scan_performance),
    ];
    let (mut passed, mut known, mut unexpected) = (0, 0, 0);
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let t = start.elapsed();
        let reason = KNOWN_FAILURES
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, r)| *r);
        match (outcome, reason) {
            (Ok(detail), None) => {
                passed += 1;
                println!("criterion {id:>2} PASS {name} [{t:.2?}]: {detail}");
            }
            (Ok(detail), Some(_)) => {
                unexpected += 1;
                println!(
                    "criterion {id:>2} PASS (listed as a known failure) {name} [{t:.2?}]: {detail}"
                );
            }
            (Err(detail), Some(reason)) => {
                known += 1;
                println!("criterion {id:>2} FAIL (known: {reason}) {name} [{t:.2?}]: {detail}");
            }
            (Err(detail), None) => {
                unexpected += 1;
                println!("criterion {id:>2} FAIL {name} [{t:.2?}]: {detail}");
            }
        }
    }
    println!("acceptance: {passed} passed, {known} known failures, {unexpected} unexpected");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
