//! Named example systems.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::json::AnySystem;
use super::{lift, Generator, GermSeries, GermSystem, NormalizerError};
use crate::cyclotomic::Cyclotomic;
use crate::scalar::{Ring, Scalar, Turn};
use crate::series::{MultiIndex, TruncatedSeries};

pub const EXAMPLE_NAMES: [&str; 4] = [
    "deformation_trivial",
    "projective_bundle",
    "resonant_demo",
    "random_diophantine",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExampleParams {
    pub r: Option<usize>,
    #[serde(rename = "N")]
    pub max_degree: u32,
    pub exact: bool,
    pub seed: u64,
    /// Angles of the diagonal linear part (of `S` for the projective bundle).
    pub angles: Option<Vec<Turn>>,
    /// Extension vector `a` of the projective bundle.
    pub extension: Option<Vec<[f64; 2]>>,
    /// Radius of the disk the random coefficients are drawn from.
    pub amplitude: f64,
    /// Highest degree of the random coefficients.
    pub f_degree: u32,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            r: None,
            max_degree: 6,
            exact: false,
            seed: 0,
            angles: None,
            extension: None,
            amplitude: 0.1,
            f_degree: 2,
        }
    }
}

fn zero_turns() -> [Turn; 2] {
    [Turn::rational(0, 1), Turn::rational(0, 1)]
}

/// Golden-type angles, then `frac(sqrt(p))` over odd primes.
fn irrational_angle(k: usize) -> Turn {
    const PRIMES: [f64; 10] = [3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0];
    match k {
        0 => Turn::Real((5f64.sqrt() - 1.0) / 2.0),
        1 => Turn::Real(2f64.sqrt() - 1.0),
        _ => {
            let s = PRIMES[(k - 2) % PRIMES.len()].sqrt();
            Turn::Real(s - s.floor())
        }
    }
}

fn angles_or(
    params: &ExampleParams,
    r: usize,
    default: impl Fn(usize) -> Turn,
) -> Result<Vec<Turn>, NormalizerError> {
    match &params.angles {
        Some(a) if a.len() != r => Err(NormalizerError::Invalid(format!(
            "{} angles given for r = {r}",
            a.len()
        ))),
        Some(a) => Ok(a.clone()),
        None => Ok((0..r).map(default).collect()),
    }
}

fn build<S: Scalar>(name: &str, p: &ExampleParams) -> Result<GermSystem<S>, NormalizerError> {
    let n = p.max_degree;
    match name {
        "deformation_trivial" => {
            let r = p.r.unwrap_or(2);
            let angles = angles_or(p, r, |k| Turn::rational(1, 2 * k as i128 + 3))?;
            let gen = Generator::diagonal(angles, zero_turns(), GermSeries::zero(r, n, r), None)?;
            GermSystem::new(r, n, vec![gen])
        }
        "projective_bundle" => {
            let r = p.r.unwrap_or(2);
            let angles = angles_or(p, r, |_| Turn::rational(0, 1))?;
            let a: Vec<S> = match &p.extension {
                Some(a) if a.len() != r => {
                    return Err(NormalizerError::Invalid(format!(
                        "extension has {} entries for r = {r}",
                        a.len()
                    )));
                }
                Some(a) => a
                    .iter()
                    .map(|&[re, im]| S::from_c64(Complex64::new(re, im)))
                    .collect(),
                None => (0..r)
                    .map(|k| if k == 0 { S::one() } else { S::zero() })
                    .collect(),
            };
            let mut denom = TruncatedSeries::<S>::constant(r, n, S::one());
            for (k, ak) in a.iter().enumerate() {
                denom = denom.add(&TruncatedSeries::variable(r, n, k).scale(ak));
            }
            let q = denom
                .inverse()?
                .sub(&TruncatedSeries::constant(r, n, S::one()));
            let parts: Vec<TruncatedSeries<S>> = (0..r)
                .map(|k| TruncatedSeries::variable(r, n, k).mul(&q))
                .collect();
            let f = lift(&TruncatedSeries::from_components(&parts)?);
            let inverse: Vec<Turn> = angles.iter().map(|t| t.scaled(-1).reduced()).collect();
            let gen = Generator::diagonal(inverse, zero_turns(), f, None)?;
            GermSystem::new(r, n, vec![gen])
        }
        "resonant_demo" => {
            let angles = vec![Turn::rational(1, 4), Turn::rational(1, 2)];
            let mut f = GermSeries::<S>::zero(2, n, 2);
            f.set(&MultiIndex(vec![2, 0]), 1, Ring::one());
            GermSystem::new(
                2,
                n,
                vec![Generator::diagonal(angles, zero_turns(), f, None)?],
            )
        }
        "random_diophantine" => {
            let r = p.r.unwrap_or(2);
            let angles = angles_or(p, r, irrational_angle)?;
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let mut f = TruncatedSeries::<S>::zero(r, n, r);
            let basis = f.basis().clone();
            for i in basis.up_to(p.f_degree.min(n)) {
                if basis.degree_of(i) < 2 {
                    continue;
                }
                for c in 0..r {
                    let rho = p.amplitude * rng.gen::<f64>().sqrt();
                    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                    *f.coeff_at_mut(i, c) = S::from_c64(Complex64::from_polar(rho, phi));
                }
            }
            GermSystem::new(
                r,
                n,
                vec![Generator::diagonal(angles, zero_turns(), lift(&f), None)?],
            )
        }
        other => Err(NormalizerError::UnknownExample(other.to_string())),
    }
}

pub fn generate_example(name: &str, params: &ExampleParams) -> Result<AnySystem, NormalizerError> {
    if !EXAMPLE_NAMES.contains(&name) {
        return Err(NormalizerError::UnknownExample(name.to_string()));
    }
    if params.exact {
        Ok(AnySystem::Exact(build::<Cyclotomic>(name, params)?))
    } else {
        Ok(AnySystem::Float(build::<Complex64>(name, params)?))
    }
}
