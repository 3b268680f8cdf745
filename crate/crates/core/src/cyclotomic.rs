//! Exact arithmetic in cyclotomic fields `Q(zeta_n)`.
//!
//! An element stores integer numerators over a common positive denominator,
//! as a polynomial in `zeta_n` reduced modulo the cyclotomic polynomial.
//! Operands of different orders are lifted to the least common multiple.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u32,
    num: Vec<BigInt>,
    den: BigInt,
}

fn phi_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<i64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients of the n-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_polynomial(n: u32) -> Arc<Vec<i64>> {
    if let Some(p) = phi_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    let mut poly = vec![0i64; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            let div = cyclotomic_polynomial(d);
            poly = exact_divide(&poly, &div);
        }
    }
    let p = Arc::new(poly);
    phi_cache().lock().unwrap().insert(n, p.clone());
    p
}

fn exact_divide(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let mut q = vec![0i64; num.len() - dn];
    for k in (0..q.len()).rev() {
        let c = rem[k + dn];
        q[k] = c;
        for (j, dj) in den.iter().enumerate() {
            rem[k + j] -= c * dj;
        }
    }
    q
}

fn totient(n: u32) -> usize {
    cyclotomic_polynomial(n).len() - 1
}

fn reduce_mod_phi(poly: &mut Vec<BigInt>, order: u32) {
    let phi = cyclotomic_polynomial(order);
    let deg = phi.len() - 1;
    for k in (deg..poly.len()).rev() {
        if poly[k].is_zero() {
            continue;
        }
        let c = std::mem::take(&mut poly[k]);
        for j in 0..deg {
            if phi[j] != 0 {
                poly[k - deg + j] -= &c * phi[j];
            }
        }
    }
    poly.truncate(deg);
    poly.resize(deg, BigInt::zero());
}

impl Cyclotomic {
    fn normalized(order: u32, mut num: Vec<BigInt>, mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            for c in num.iter_mut() {
                *c = -&*c;
            }
        }
        let mut g = den.clone();
        for c in &num {
            if g.is_one() {
                break;
            }
            g = g.gcd(c);
        }
        if num.iter().all(|c| c.is_zero()) {
            return Cyclotomic {
                order,
                num,
                den: BigInt::one(),
            };
        }
        if !g.is_one() {
            for c in num.iter_mut() {
                *c = &*c / &g;
            }
            den /= g;
        }
        Cyclotomic { order, num, den }
    }

    pub fn zero() -> Self {
        Cyclotomic {
            order: 1,
            num: vec![BigInt::zero()],
            den: BigInt::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Cyclotomic {
            order: 1,
            num: vec![BigInt::from(n)],
            den: BigInt::one(),
        }
    }

    pub fn from_ratio(r: &Ratio<i128>) -> Self {
        Self::normalized(1, vec![BigInt::from(*r.numer())], BigInt::from(*r.denom()))
    }

    pub fn from_big_rational(r: &BigRational) -> Self {
        Self::normalized(1, vec![r.numer().clone()], r.denom().clone())
    }

    /// `re + i im` with the exact binary values of the doubles.
    pub fn gaussian(re: f64, im: f64) -> Self {
        let a = BigRational::from_float(re).unwrap_or_else(BigRational::zero);
        let b = BigRational::from_float(im).unwrap_or_else(BigRational::zero);
        if b.is_zero() {
            return Self::from_big_rational(&a);
        }
        // Q(i) = Q(zeta_4) with basis {1, zeta_4}.
        let den = a.denom().lcm(b.denom());
        let na = a.numer() * (&den / a.denom());
        let nb = b.numer() * (&den / b.denom());
        Self::normalized(4, vec![na, nb], den)
    }

    /// `zeta_q^p`.
    pub fn zeta_power(q: u32, p: u32) -> Self {
        let q = q.max(1);
        let p = p % q;
        let mut poly = vec![BigInt::zero(); (p as usize + 1).max(totient(q))];
        poly[p as usize] = BigInt::one();
        reduce_mod_phi(&mut poly, q);
        Self::normalized(q, poly, BigInt::one())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }

    /// The element as a polynomial in `zeta_target`; `order` must divide `target`.
    fn lifted(&self, target: u32) -> Vec<BigInt> {
        if target == self.order {
            return self.num.clone();
        }
        let step = (target / self.order) as usize;
        let len = ((self.num.len().max(1) - 1) * step + 1).max(totient(target));
        let mut poly = vec![BigInt::zero(); len];
        for (k, c) in self.num.iter().enumerate() {
            poly[k * step] = c.clone();
        }
        reduce_mod_phi(&mut poly, target);
        poly
    }

    pub fn add(&self, other: &Self) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let order = self.order.lcm(&other.order);
        let a = self.lifted(order);
        let b = other.lifted(order);
        let num = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x * &other.den + y * &self.den)
            .collect();
        Self::normalized(order, num, &self.den * &other.den)
    }

    pub fn neg(&self) -> Self {
        Cyclotomic {
            order: self.order,
            num: self.num.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let order = self.order.lcm(&other.order);
        let a = self.lifted(order);
        let b = other.lifted(order);
        let mut prod = vec![BigInt::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        reduce_mod_phi(&mut prod, order);
        Self::normalized(order, prod, &self.den * &other.den)
    }

    /// Complex conjugation, `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> Self {
        let n = self.order as usize;
        let mut poly = vec![BigInt::zero(); n.max(1)];
        for (k, c) in self.num.iter().enumerate() {
            poly[(n - k) % n] += c;
        }
        reduce_mod_phi(&mut poly, self.order);
        Self::normalized(self.order, poly, self.den.clone())
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let to_q = |v: &[BigInt]| -> Vec<BigRational> {
            v.iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect()
        };
        let phi: Vec<BigInt> = cyclotomic_polynomial(self.order)
            .iter()
            .map(|&c| BigInt::from(c))
            .collect();
        let (g, s) = poly_ext_gcd(to_q(&self.num), to_q(&phi));
        // g is a nonzero constant because phi is irreducible.
        let g0 = g[0].clone();
        let mut lcm = BigInt::one();
        for c in &s {
            lcm = lcm.lcm(c.denom());
        }
        let mut num: Vec<BigInt> = s.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
        num.resize(self.num.len(), BigInt::zero());
        // (s/g0) * (num/den) = 1, so the inverse is s * den / g0.
        let scale = BigRational::from_integer(self.den.clone()) / g0;
        let num: Vec<BigInt> = num.iter().map(|c| c * scale.numer()).collect();
        Some(Self::normalized(self.order, num, lcm * scale.denom()))
    }

    pub fn to_c64(&self) -> Complex64 {
        let n = self.order as f64;
        let den = self.den.to_f64().unwrap_or(f64::INFINITY);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n);
            acc += z * (c.to_f64().unwrap_or(f64::INFINITY) / den);
        }
        acc
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.den == other.den && self.num == other.num;
        }
        self.sub(other).is_zero()
    }
}

fn poly_trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// Returns `(g, s)` with `s a = g (mod b)`.
fn poly_ext_gcd(a: Vec<BigRational>, b: Vec<BigRational>) -> (Vec<BigRational>, Vec<BigRational>) {
    let (mut r0, mut r1) = (a, b);
    poly_trim(&mut r0);
    poly_trim(&mut r1);
    let mut s0 = vec![BigRational::one()];
    let mut s1 = vec![BigRational::zero()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divmod(&r0, &r1);
        let qs = poly_mul(&q, &s1);
        let s2 = poly_sub(&s0, &qs);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    (r0, s0)
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = a.to_vec();
    poly_trim(&mut rem);
    let db = b.len() - 1;
    if rem.len() < b.len() {
        return (vec![BigRational::zero()], rem);
    }
    let lead = b[db].clone();
    let mut q = vec![BigRational::zero(); rem.len() - db];
    for k in (0..q.len()).rev() {
        let c = &rem[k + db] / &lead;
        if !c.is_zero() {
            for (j, bj) in b.iter().enumerate() {
                rem[k + j] = &rem[k + j] - &c * bj;
            }
        }
        q[k] = c;
    }
    rem.truncate(db.max(1));
    poly_trim(&mut rem);
    (q, rem)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    poly_trim(&mut out);
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] = x.clone();
    }
    for (i, y) in b.iter().enumerate() {
        out[i] = &out[i] - y;
    }
    poly_trim(&mut out);
    out
}
