//! Multi-indices and the graded lexicographic monomial basis.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// Exponent vector `alpha` in `N^r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(r: usize) -> Self {
        MultiIndex(vec![0; r])
    }

    pub fn unit(r: usize, lambda: usize) -> Self {
        let mut v = vec![0; r];
        v[lambda] = 1;
        MultiIndex(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `alpha! = prod alpha_l!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(f64::from).product::<f64>())
            .product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All multi-indices of total degree `n` in `r` variables, in graded
/// lexicographic order (larger leading exponents first).
pub fn shell(r: usize, n: u32) -> Vec<MultiIndex> {
    fn rec(r: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if r == 1 {
            prefix.push(n);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=n).rev() {
            prefix.push(a);
            rec(r - 1, n - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if r == 0 {
        if n == 0 {
            out.push(MultiIndex(vec![]));
        }
        return out;
    }
    rec(r, n, &mut Vec::with_capacity(r), &mut out);
    out
}

/// `C(n + r - 1, r - 1)`.
pub fn shell_size(r: usize, n: u32) -> usize {
    if r == 0 {
        return usize::from(n == 0);
    }
    let mut acc: u128 = 1;
    for k in 1..r as u128 {
        acc = acc * (n as u128 + k) / k;
    }
    acc as usize
}

const NO_INDEX: u32 = u32::MAX;
const PRODUCT_TABLE_LIMIT: usize = 2000;

/// Monomials of degree at most `max_degree` in `r` variables.
#[derive(Debug)]
pub struct MonomialBasis {
    r: usize,
    max_degree: u32,
    monomials: Vec<MultiIndex>,
    offsets: Vec<usize>,
    index: HashMap<MultiIndex, usize>,
    product: OnceLock<Option<Vec<u32>>>,
}

impl MonomialBasis {
    fn build(r: usize, max_degree: u32) -> Self {
        let mut monomials = Vec::new();
        let mut offsets = Vec::with_capacity(max_degree as usize + 2);
        for n in 0..=max_degree {
            offsets.push(monomials.len());
            monomials.extend(shell(r, n));
        }
        offsets.push(monomials.len());
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MonomialBasis {
            r,
            max_degree,
            monomials,
            offsets,
            index,
            product: OnceLock::new(),
        }
    }

    /// Shared basis for `(r, max_degree)`.
    pub fn get(r: usize, max_degree: u32) -> Arc<MonomialBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<MonomialBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((r, max_degree))
            .or_insert_with(|| Arc::new(MonomialBasis::build(r, max_degree)))
            .clone()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &MultiIndex {
        &self.monomials[i]
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Range of indices of the degree-`n` shell.
    pub fn shell_range(&self, n: u32) -> std::ops::Range<usize> {
        if n > self.max_degree {
            return self.monomials.len()..self.monomials.len();
        }
        self.offsets[n as usize]..self.offsets[n as usize + 1]
    }

    /// Indices of all monomials of degree at most `d`.
    pub fn up_to(&self, d: u32) -> std::ops::Range<usize> {
        0..self.offsets[(d.min(self.max_degree) + 1) as usize]
    }

    pub fn degree_of(&self, i: usize) -> u32 {
        self.monomials[i].degree()
    }

    /// Index of `monomial(i) + monomial(j)` if its degree fits.
    pub fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        let table = self.product.get_or_init(|| {
            let n = self.monomials.len();
            (n <= PRODUCT_TABLE_LIMIT).then(|| {
                let mut t = vec![NO_INDEX; n * n];
                for a in 0..n {
                    for b in 0..n {
                        let s = self.monomials[a].plus(&self.monomials[b]);
                        if let Some(&k) = self.index.get(&s) {
                            t[a * n + b] = k as u32;
                        }
                    }
                }
                t
            })
        });
        match table {
            Some(t) => {
                let k = t[i * self.monomials.len() + j];
                (k != NO_INDEX).then_some(k as usize)
            }
            None => self.index_of(&self.monomials[i].plus(&self.monomials[j])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_shell() {
        let s = shell(2, 2);
        let v: Vec<Vec<u32>> = s.into_iter().map(|m| m.0).collect();
        assert_eq!(v, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let s3 = shell(3, 1);
        assert_eq!(s3[0].0, vec![1, 0, 0]);
        assert_eq!(s3[2].0, vec![0, 0, 1]);
    }

    #[test]
    fn shell_sizes_are_binomial() {
        for r in 1..5 {
            for n in 0..8 {
                assert_eq!(shell(r, n).len(), shell_size(r, n));
            }
        }
        assert_eq!(shell_size(3, 12), 91);
    }

    #[test]
    fn product_index_matches_addition() {
        let b = MonomialBasis::get(2, 4);
        let i = b.index_of(&MultiIndex(vec![1, 0])).unwrap();
        let j = b.index_of(&MultiIndex(vec![1, 2])).unwrap();
        let k = b.product_index(i, j).unwrap();
        assert_eq!(b.monomial(k).0, vec![2, 2]);
        let big = b.index_of(&MultiIndex(vec![0, 4])).unwrap();
        assert_eq!(b.product_index(i, big), None);
    }
}
