//! Serialized forms of censuses and models.
//!
//! Counts and rational coefficients travel as decimal strings so the files
//! stay exact and readable regardless of magnitude:
//!
//! * census.json: `{ "p0": 29, "gcap": 62, "counts": [{"g", "j", "n"}...] }`
//! * models.json: `{ "models": [{ "g", "p0", "j_max",
//!   "const_term": {"num","den"}, "coeffs": [{"num","den"}...],
//!   "odd_prime_factors": [...], "sign_violations": [...] }] }`

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dynsys::GapModel;
use crate::gapcycle::{RunCensus, SieveStage};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusFile {
    pub p0: u64,
    pub gcap: u32,
    pub counts: Vec<CountRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountRow {
    pub g: u32,
    pub j: u32,
    pub n: String,
}

impl From<&RunCensus> for CensusFile {
    fn from(c: &RunCensus) -> Self {
        CensusFile {
            p0: c.stage.p,
            gcap: c.g_cap,
            counts: c
                .iter()
                .map(|(g, j, n)| CountRow {
                    g,
                    j,
                    n: n.to_string(),
                })
                .collect(),
        }
    }
}

impl CensusFile {
    /// Rebuild the census; the file must describe an anchor stage (k = 0).
    pub fn into_census(self) -> Result<RunCensus> {
        let stage = SieveStage::anchor(self.p0)?;
        let mut counts = BTreeMap::new();
        for row in self.counts {
            let n = BigUint::from_str(&row.n)
                .map_err(|e| Error::MalformedFile(format!("count {}: {e}", row.n)))?;
            counts.insert((row.g, row.j), n);
        }
        Ok(RunCensus::from_counts(stage, self.gcap, counts))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelsFile {
    pub models: Vec<ModelRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioRow {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RatioRow {
    fn from(r: &BigRational) -> Self {
        RatioRow {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl RatioRow {
    fn into_ratio(self) -> Result<BigRational> {
        let num = BigInt::from_str(&self.num)
            .map_err(|e| Error::MalformedFile(format!("numerator {}: {e}", self.num)))?;
        let den = BigInt::from_str(&self.den)
            .map_err(|e| Error::MalformedFile(format!("denominator {}: {e}", self.den)))?;
        if den == BigInt::from(0) {
            return Err(Error::MalformedFile("zero denominator".into()));
        }
        Ok(BigRational::new(num, den))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRow {
    pub g: u32,
    pub p0: u64,
    pub j_max: u32,
    pub const_term: RatioRow,
    pub coeffs: Vec<RatioRow>,
    pub odd_prime_factors: Vec<u64>,
    pub sign_violations: Vec<u32>,
}

impl From<&GapModel> for ModelRow {
    fn from(m: &GapModel) -> Self {
        ModelRow {
            g: m.g,
            p0: m.p0,
            j_max: m.j_max,
            const_term: (&m.const_term).into(),
            coeffs: m.coeffs.iter().map(Into::into).collect(),
            odd_prime_factors: m.odd_prime_factors.clone(),
            sign_violations: m.sign_violations.clone(),
        }
    }
}

impl ModelRow {
    pub fn into_model(self) -> Result<GapModel> {
        Ok(GapModel {
            g: self.g,
            p0: self.p0,
            j_max: self.j_max,
            const_term: self.const_term.into_ratio()?,
            coeffs: self
                .coeffs
                .into_iter()
                .map(RatioRow::into_ratio)
                .collect::<Result<_>>()?,
            odd_prime_factors: self.odd_prime_factors,
            sign_violations: self.sign_violations,
        })
    }
}

impl ModelsFile {
    pub fn from_models(models: &[GapModel]) -> Self {
        ModelsFile {
            models: models.iter().map(Into::into).collect(),
        }
    }

    pub fn into_models(self) -> Result<Vec<GapModel>> {
        self.models.into_iter().map(ModelRow::into_model).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::derive_all_models;
    use crate::gapcycle::{census_runs, generate_cycle};
    use crate::Limits;

    #[test]
    fn census_roundtrip() {
        let c = census_runs(&generate_cycle(7, &Limits::default()).unwrap(), 22).unwrap();
        let file = CensusFile::from(&c);
        let json = serde_json::to_string(&file).unwrap();
        let back: CensusFile = serde_json::from_str(&json).unwrap();
        let c2 = back.into_census().unwrap();
        assert_eq!(c.g_cap, c2.g_cap);
        assert_eq!(c.stage.p, c2.stage.p);
        let a: Vec<_> = c.iter().map(|(g, j, n)| (g, j, n.clone())).collect();
        let b: Vec<_> = c2.iter().map(|(g, j, n)| (g, j, n.clone())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn models_roundtrip() {
        let c = census_runs(&generate_cycle(7, &Limits::default()).unwrap(), 22).unwrap();
        let models = derive_all_models(&c, 22).unwrap();
        let file = ModelsFile::from_models(&models);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: ModelsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_models().unwrap(), models);
    }

    #[test]
    fn malformed_counts_rejected() {
        let file = CensusFile {
            p0: 7,
            gcap: 10,
            counts: vec![CountRow {
                g: 6,
                j: 1,
                n: "not-a-number".into(),
            }],
        };
        assert!(matches!(
            file.into_census(),
            Err(Error::MalformedFile(_))
        ));
    }
}
