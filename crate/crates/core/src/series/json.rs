//! JSON form of a series:
//! `{"r", "N", "components", "terms": [{"alpha", "coeff": [[re, im], ..]}]}`.
//! Terms with Fourier-polynomial coefficients carry an extra `"mode"`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::MultiIndex;
use super::truncated::TruncatedSeries;
use super::SeriesError;
use crate::cyclotomic::Cyclotomic;
use crate::fourier::{FourierPoly, Mode, ZERO_MODE};
use crate::scalar::{Ring, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub alpha: Vec<u32>,
    pub coeff: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub r: usize,
    #[serde(rename = "N")]
    pub max_degree: u32,
    pub components: usize,
    pub terms: Vec<TermJson>,
}

/// Coefficient rings with a JSON representation as Fourier modes.
pub trait JsonCoeff: Ring {
    fn to_modes(&self) -> Vec<(Mode, Complex64)>;
    fn from_mode(mode: Mode, c: Complex64) -> Result<Self, String>;
}

macro_rules! scalar_json {
    ($t:ty) => {
        impl JsonCoeff for $t {
            fn to_modes(&self) -> Vec<(Mode, Complex64)> {
                vec![(ZERO_MODE, self.to_c64())]
            }
            fn from_mode(mode: Mode, c: Complex64) -> Result<Self, String> {
                if mode != ZERO_MODE {
                    return Err(format!("mode {:?} given for a constant coefficient", mode));
                }
                Ok(<$t>::from_c64(c))
            }
        }
    };
}

scalar_json!(Complex64);
scalar_json!(Cyclotomic);

impl<S: Scalar> JsonCoeff for FourierPoly<S> {
    fn to_modes(&self) -> Vec<(Mode, Complex64)> {
        self.terms().iter().map(|(m, s)| (*m, s.to_c64())).collect()
    }
    fn from_mode(mode: Mode, c: Complex64) -> Result<Self, String> {
        Ok(FourierPoly::monomial(mode, S::from_c64(c)))
    }
}

impl<R: JsonCoeff> TruncatedSeries<R> {
    pub fn to_json(&self) -> SeriesJson {
        let basis = self.basis().clone();
        let m = self.components();
        let mut terms = Vec::new();
        for i in 0..basis.len() {
            let mut by_mode: std::collections::BTreeMap<Mode, Vec<[f64; 2]>> = Default::default();
            for c in 0..m {
                for (mode, v) in self.coeff_at(i, c).to_modes() {
                    by_mode.entry(mode).or_insert_with(|| vec![[0.0, 0.0]; m])[c] = [v.re, v.im];
                }
            }
            for (mode, coeff) in by_mode {
                if coeff.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
                    continue;
                }
                terms.push(TermJson {
                    alpha: basis.monomial(i).0.clone(),
                    coeff,
                    mode: (mode != ZERO_MODE).then_some(mode),
                });
            }
        }
        SeriesJson {
            r: self.r(),
            max_degree: self.max_degree(),
            components: m,
            terms,
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self, SeriesError> {
        let mut s = Self::zero(j.r, j.max_degree, j.components);
        for t in &j.terms {
            if t.alpha.len() != j.r {
                return Err(SeriesError::Invalid(format!(
                    "alpha {:?} has length != r = {}",
                    t.alpha, j.r
                )));
            }
            if t.coeff.len() != j.components {
                return Err(SeriesError::Invalid(format!(
                    "term {:?} has {} coefficients, expected {}",
                    t.alpha,
                    t.coeff.len(),
                    j.components
                )));
            }
            let alpha = MultiIndex(t.alpha.clone());
            let Some(i) = s.basis().index_of(&alpha) else {
                return Err(SeriesError::Invalid(format!(
                    "term {} exceeds degree {}",
                    alpha, j.max_degree
                )));
            };
            for (c, v) in t.coeff.iter().enumerate() {
                let add = R::from_mode(t.mode.unwrap_or(ZERO_MODE), Complex64::new(v[0], v[1]))
                    .map_err(SeriesError::Invalid)?;
                s.coeff_at_mut(i, c).add_to(&add);
            }
        }
        Ok(s)
    }
}
