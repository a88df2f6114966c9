//! JSON form of a scenario.
//!
//! Powers are given in dBm and the Rician factor in dB (or `"infinite"` for a
//! pure LoS channel); both are converted to linear units once, here. Grid
//! indices in the distribution are 1-based.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::SubarrayGeometry;
use crate::rate::DEFAULT_KERNEL_BUDGET;
use crate::scenario::{
    CoverageSpec, DistributionSpec, MaRegionSpec, Obstacle, RicianFactor, ScenarioConfig,
    DEFAULT_VISIBILITY_SAMPLES,
};
use crate::{db_to_linear, linear_to_db, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerDbm {
    Uniform(f64),
    PerGrid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RicianDb {
    Db(f64),
    Keyword(String),
}

fn default_samples() -> usize {
    DEFAULT_VISIBILITY_SAMPLES
}

fn default_budget() -> usize {
    DEFAULT_KERNEL_BUDGET
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub carrier_freq: f64,
    pub m_h: usize,
    pub m_v: usize,
    /// Element spacings in meters; half a wavelength when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_v: Option<f64>,
    pub n_subarrays: usize,
    pub tx_power_dbm: PowerDbm,
    pub noise_power_dbm: f64,
    pub rician_factor_db: RicianDb,
    pub rng_seed: u64,
    pub ma_region: MaRegionSpec,
    pub coverage: CoverageSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub distribution: DistributionSpec,
    #[serde(default = "default_samples")]
    pub visibility_samples: usize,
    #[serde(default = "default_budget")]
    pub kernel_budget: usize,
}

impl ScenarioFile {
    pub fn into_config(self) -> Result<ScenarioConfig> {
        if !(self.carrier_freq > 0.0) {
            return Err(Error::config("carrier_freq", "must be positive"));
        }
        let lambda = crate::SPEED_OF_LIGHT / self.carrier_freq;
        let rician = match self.rician_factor_db {
            RicianDb::Db(db) => RicianFactor::from_db(db),
            RicianDb::Keyword(s) if s.eq_ignore_ascii_case("infinite") => RicianFactor::PureLos,
            RicianDb::Keyword(s) => {
                return Err(Error::config(
                    "rician_factor_db",
                    format!("expected a number or \"infinite\", got \"{s}\""),
                ))
            }
        };
        let tx_power_mw = match self.tx_power_dbm {
            PowerDbm::Uniform(p) => vec![db_to_linear(p)],
            PowerDbm::PerGrid(v) => v.into_iter().map(db_to_linear).collect(),
        };
        let config = ScenarioConfig {
            carrier_freq: self.carrier_freq,
            subarray: SubarrayGeometry {
                m_h: self.m_h,
                m_v: self.m_v,
                d_h: self.d_h.unwrap_or(lambda / 2.0),
                d_v: self.d_v.unwrap_or(lambda / 2.0),
            },
            n_subarrays: self.n_subarrays,
            tx_power_mw,
            noise_power_mw: db_to_linear(self.noise_power_dbm),
            rician,
            rng_seed: self.rng_seed,
            ma_region: self.ma_region,
            coverage: self.coverage,
            obstacles: self.obstacles,
            distribution: self.distribution,
            visibility_samples: self.visibility_samples,
            kernel_budget: self.kernel_budget,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_config(c: &ScenarioConfig) -> Self {
        let tx_power_dbm = match c.tx_power_mw.as_slice() {
            [p] => PowerDbm::Uniform(linear_to_db(*p)),
            v => PowerDbm::PerGrid(v.iter().map(|&p| linear_to_db(p)).collect()),
        };
        Self {
            carrier_freq: c.carrier_freq,
            m_h: c.subarray.m_h,
            m_v: c.subarray.m_v,
            d_h: Some(c.subarray.d_h),
            d_v: Some(c.subarray.d_v),
            n_subarrays: c.n_subarrays,
            tx_power_dbm,
            noise_power_dbm: linear_to_db(c.noise_power_mw),
            rician_factor_db: match c.rician {
                RicianFactor::Linear(k) => RicianDb::Db(linear_to_db(k)),
                RicianFactor::PureLos => RicianDb::Keyword("infinite".into()),
            },
            rng_seed: c.rng_seed,
            ma_region: c.ma_region.clone(),
            coverage: c.coverage.clone(),
            obstacles: c.obstacles.clone(),
            distribution: c.distribution.clone(),
            visibility_samples: c.visibility_samples,
            kernel_budget: c.kernel_budget,
        }
    }
}

pub fn from_json_str(s: &str) -> Result<ScenarioConfig> {
    serde_json::from_str::<ScenarioFile>(s)?.into_config()
}

pub fn to_json_string(config: &ScenarioConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioFile::from_config(config))?)
}

pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    from_json_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_round_trip_through_json() {
        for name in presets::NAMES {
            let c = presets::by_name(name).unwrap();
            let back = from_json_str(&to_json_string(&c).unwrap()).unwrap();
            assert_eq!(back.ma_region, c.ma_region);
            assert_eq!(back.distribution, c.distribution);
            assert_eq!(back.n_subarrays, c.n_subarrays);
            assert!((back.noise_power_mw / c.noise_power_mw - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rician_keyword_and_errors() {
        let c = presets::desk_full_los(4);
        let mut f = ScenarioFile::from_config(&c);
        f.rician_factor_db = RicianDb::Keyword("infinite".into());
        assert_eq!(f.clone().into_config().unwrap().rician, RicianFactor::PureLos);
        f.rician_factor_db = RicianDb::Db(10.0);
        match f.clone().into_config().unwrap().rician {
            RicianFactor::Linear(k) => assert!((k - 10.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        f.rician_factor_db = RicianDb::Keyword("huge".into());
        assert!(f.into_config().is_err());
    }

    #[test]
    fn too_many_subarrays_names_the_field() {
        let mut c = presets::desk_full_los(4);
        c.n_subarrays = 1000;
        let json = to_json_string(&c).unwrap();
        let err = from_json_str(&json).unwrap_err();
        assert!(err.to_string().contains("n_subarrays"), "{err}");
        assert!(err.is_validation());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let c = presets::desk_full_los(4);
        let mut v: serde_json::Value = serde_json::from_str(&to_json_string(&c).unwrap()).unwrap();
        v["carrier_frequency"] = serde_json::json!(1.0);
        assert!(from_json_str(&v.to_string()).is_err());
    }
}
