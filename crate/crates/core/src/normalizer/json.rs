//! JSON form of a germ system:
//! `{"r", "N", "generators": [{"T", "c", "terms", "base_terms"}], "mode"}`.
//! `T` is a matrix of numbers or `[re, im]` pairs, or `{"angles": [..]}` for
//! a diagonal linear part. Angles and translations are numbers or `"p/q"`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solve::{normalize, NormalizationReport, NormalizeOptions};
use super::{Generator, GermSeries, GermSystem, NormalizerError};
use crate::cyclotomic::Cyclotomic;
use crate::fourier::FourierPoly;
use crate::matrix::Mat;
use crate::scalar::{Scalar, Turn};
use crate::series::{JsonCoeff, SeriesJson, TermJson, TruncatedSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Real(f64),
    Complex([f64; 2]),
}

impl EntryJson {
    fn value(&self) -> Complex64 {
        match self {
            EntryJson::Real(x) => Complex64::new(*x, 0.0),
            EntryJson::Complex([re, im]) => Complex64::new(*re, *im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinearJson {
    Angles { angles: Vec<Turn> },
    Matrix(Vec<Vec<EntryJson>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorJson {
    #[serde(rename = "T")]
    pub t: LinearJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<[Turn; 2]>,
    #[serde(default)]
    pub terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_terms: Option<Vec<TermJson>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub r: usize,
    #[serde(rename = "N")]
    pub max_degree: u32,
    pub generators: Vec<GeneratorJson>,
    /// `"exact"` or `"float"` (the default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

/// A germ system in either arithmetic.
#[derive(Clone, Debug)]
pub enum AnySystem {
    Exact(GermSystem<Cyclotomic>),
    Float(GermSystem<Complex64>),
}

fn zero_turns() -> [Turn; 2] {
    [Turn::rational(0, 1), Turn::rational(0, 1)]
}

fn build<S: Scalar>(j: &SystemJson) -> Result<GermSystem<S>, NormalizerError>
where
    FourierPoly<S>: JsonCoeff,
{
    let mut generators = Vec::with_capacity(j.generators.len());
    for (g, gj) in j.generators.iter().enumerate() {
        let f = GermSeries::<S>::from_json(&SeriesJson {
            r: j.r,
            max_degree: j.max_degree,
            components: j.r,
            terms: gj.terms.clone(),
        })?;
        let base_terms = match &gj.base_terms {
            Some(terms) => Some(TruncatedSeries::<Complex64>::from_json(&SeriesJson {
                r: j.r,
                max_degree: j.max_degree,
                components: 2,
                terms: terms.clone(),
            })?),
            None => None,
        };
        let c = gj.c.clone().unwrap_or_else(zero_turns);
        let gen = match &gj.t {
            LinearJson::Angles { angles } => {
                if angles.len() != j.r {
                    return Err(NormalizerError::Invalid(format!(
                        "generator {g}: {} angles for r = {}",
                        angles.len(),
                        j.r
                    )));
                }
                Generator::diagonal(angles.clone(), c, f, base_terms)?
            }
            LinearJson::Matrix(rows) => {
                if rows.len() != j.r || rows.iter().any(|row| row.len() != j.r) {
                    return Err(NormalizerError::Invalid(format!(
                        "generator {g}: T must be {}x{}",
                        j.r, j.r
                    )));
                }
                let t = Mat::from_rows(
                    rows.iter()
                        .map(|row| row.iter().map(|e| S::from_c64(e.value())).collect())
                        .collect(),
                );
                Generator::new(t, c, f, base_terms)?
            }
        };
        generators.push(gen);
    }
    GermSystem::new(j.r, j.max_degree, generators)
}

fn to_json<S: Scalar>(system: &GermSystem<S>, mode: &str) -> SystemJson
where
    FourierPoly<S>: JsonCoeff,
{
    let generators = system
        .generators
        .iter()
        .map(|gen| GeneratorJson {
            t: match &gen.angles {
                Some(a) => LinearJson::Angles { angles: a.clone() },
                None => LinearJson::Matrix(
                    (0..system.r)
                        .map(|i| {
                            (0..system.r)
                                .map(|k| {
                                    let z = gen.t.get(i, k).to_c64();
                                    EntryJson::Complex([z.re, z.im])
                                })
                                .collect()
                        })
                        .collect(),
                ),
            },
            c: Some(gen.translation.clone()),
            terms: gen.f.to_json().terms,
            base_terms: gen.base_terms.as_ref().map(|d| d.to_json().terms),
        })
        .collect();
    SystemJson {
        r: system.r,
        max_degree: system.max_degree,
        generators,
        mode: Some(mode.to_string()),
    }
}

impl AnySystem {
    /// Builds the system in the requested arithmetic (`mode` overrides the file).
    pub fn from_json(j: &SystemJson, mode: Option<&str>) -> Result<Self, NormalizerError> {
        match mode.or(j.mode.as_deref()).unwrap_or("float") {
            "exact" => Ok(AnySystem::Exact(build(j)?)),
            "float" => Ok(AnySystem::Float(build(j)?)),
            other => Err(NormalizerError::Invalid(format!(
                "unknown mode '{other}' (expected exact or float)"
            ))),
        }
    }

    pub fn to_json(&self) -> SystemJson {
        match self {
            AnySystem::Exact(s) => to_json(s, "exact"),
            AnySystem::Float(s) => to_json(s, "float"),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AnySystem::Exact(_))
    }

    pub fn r(&self) -> usize {
        match self {
            AnySystem::Exact(s) => s.r,
            AnySystem::Float(s) => s.r,
        }
    }

    pub fn max_degree(&self) -> u32 {
        match self {
            AnySystem::Exact(s) => s.max_degree,
            AnySystem::Float(s) => s.max_degree,
        }
    }

    pub fn normalize(
        &self,
        options: &NormalizeOptions,
    ) -> Result<NormalizationReport, NormalizerError> {
        match self {
            AnySystem::Exact(s) => Ok(normalize(s, options)?.report()),
            AnySystem::Float(s) => Ok(normalize(s, options)?.report()),
        }
    }
}
