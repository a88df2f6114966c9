//! Parameter sweeps over placement schemes and rate evaluators.
//!
//! One row is produced per (value, scheme, evaluator), ordered by `values`,
//! then `schemes`, then `evaluators`. Cells run in parallel; the row order
//! does not depend on scheduling.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{fpa_layout, BenchmarkKind};
use crate::channel::ArrayLayout;
use crate::montecarlo::{Combiner, SimOptions, Simulator};
use crate::optimizer::{exhaustive_search, successive_replacement, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::rate::RateModel;
use crate::scenario::{RicianFactor, Scenario, ScenarioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Horizontal elements per subarray.
    MH,
    /// Length of the placement region along y, centered at the origin; the
    /// candidate count is kept.
    MaWidth,
    ExpectedUsers,
    RicianDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Optimal,
    Fixed(BenchmarkKind),
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Optimal => "optimal",
            Scheme::Fixed(k) => k.name(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "optimal" => Ok(Scheme::Optimal),
            other => other
                .parse::<BenchmarkKind>()
                .map(Scheme::Fixed)
                .map_err(|_| Error::config("schemes", format!("unknown scheme `{s}`"))),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    ApproxMrc,
    SimMrc,
    SimMmse,
    UpperBound,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::ApproxMrc => "approx_mrc",
            Evaluator::SimMrc => "sim_mrc",
            Evaluator::SimMmse => "sim_mmse",
            Evaluator::UpperBound => "upper_bound",
        }
    }
}

impl FromStr for Evaluator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Evaluator::ApproxMrc, Evaluator::SimMrc, Evaluator::SimMmse, Evaluator::UpperBound]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config("evaluators", format!("unknown evaluator `{s}`")))
    }
}

fn default_trials() -> usize {
    1000
}

fn default_limit() -> u128 {
    DEFAULT_EXHAUSTIVE_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub evaluators: Vec<Evaluator>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Simulation seed; the scenario seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_limit")]
    pub exhaustive_limit: u128,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "at least one value is required"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.evaluators.is_empty() {
            return Err(Error::config("evaluators", "at least one evaluator is required"));
        }
        let simulated = self
            .evaluators
            .iter()
            .any(|e| matches!(e, Evaluator::SimMrc | Evaluator::SimMmse));
        if simulated && self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("values", "values must be finite"));
        }
        Ok(())
    }

    /// The scenario configuration at one sweep value.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        match self.parameter {
            SweepParameter::MH => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config("values", format!("m_h must be a positive integer, got {value}")));
                }
                c.subarray.m_h = value as usize;
            }
            SweepParameter::MaWidth => {
                if !(value >= 0.0) {
                    return Err(Error::config("values", format!("ma_width must be non-negative, got {value}")));
                }
                c.ma_region.y_min = -value / 2.0;
                c.ma_region.y_max = value / 2.0;
            }
            SweepParameter::ExpectedUsers => {
                c.distribution = c.distribution.with_expected_users(value);
            }
            SweepParameter::RicianDb => c.rician = RicianFactor::from_db(value),
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub scheme: String,
    pub evaluator: String,
    pub rate: Option<f64>,
    /// Empty for closed forms.
    pub stderr: Option<f64>,
    /// `ok` or `skipped`.
    pub status: String,
    pub note: String,
}

impl SweepRow {
    fn ok(value: f64, scheme: Scheme, e: Evaluator, rate: f64, stderr: Option<f64>) -> Self {
        Self {
            value,
            scheme: scheme.name().into(),
            evaluator: e.name().into(),
            rate: Some(rate),
            stderr,
            status: "ok".into(),
            note: String::new(),
        }
    }

    fn skipped(value: f64, scheme: Scheme, e: Evaluator, reason: &str) -> Self {
        Self {
            value,
            scheme: scheme.name().into(),
            evaluator: e.name().into(),
            rate: None,
            stderr: None,
            status: "skipped".into(),
            note: reason.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// A placement to evaluate, and the candidate model it came from if any.
enum Placement {
    Candidates(Vec<usize>),
    Layout(ArrayLayout),
}

fn place(scheme: Scheme, scenario: &Scenario, model: Option<&RateModel>, spec: &SweepSpec) -> Result<Placement> {
    let n = scenario.n_subarrays();
    match scheme {
        Scheme::Proposed => {
            let plan = successive_replacement(model.expect("candidate model"), n)?;
            Ok(Placement::Candidates(plan.n_mu))
        }
        Scheme::Optimal => {
            let (support, _) = exhaustive_search(model.expect("candidate model"), n, spec.exhaustive_limit)?;
            Ok(Placement::Candidates(support))
        }
        Scheme::Fixed(kind) => Ok(Placement::Layout(fpa_layout(kind, scenario)?)),
    }
}

fn evaluate_cell(
    value: f64,
    scheme: Scheme,
    scenario: &Scenario,
    model: Option<&RateModel>,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>> {
    let placement = match place(scheme, scenario, model, spec) {
        Ok(p) => p,
        Err(e) if e.is_validation() || matches!(e, Error::TooManyCombinations { .. }) => {
            let reason = e.to_string();
            return Ok(spec
                .evaluators
                .iter()
                .map(|&ev| SweepRow::skipped(value, scheme, ev, &reason))
                .collect());
        }
        Err(e) => return Err(e),
    };
    let layout = match &placement {
        Placement::Candidates(s) => ArrayLayout::from_candidates(scenario, s)?,
        Placement::Layout(l) => l.clone(),
    };
    let needs_model = spec
        .evaluators
        .iter()
        .any(|e| matches!(e, Evaluator::ApproxMrc | Evaluator::UpperBound));
    let own_model;
    let (closed, support): (Option<&RateModel>, Vec<usize>) = match (&placement, needs_model) {
        (_, false) => (None, Vec::new()),
        (Placement::Candidates(s), true) => (model, s.clone()),
        (Placement::Layout(l), true) => {
            own_model = RateModel::for_layout(scenario, l)?;
            (Some(&own_model), own_model.all_positions())
        }
    };
    let sim = if spec
        .evaluators
        .iter()
        .any(|e| matches!(e, Evaluator::SimMrc | Evaluator::SimMmse))
    {
        Some(Simulator::new(scenario, &layout)?)
    } else {
        None
    };
    let seed = spec.seed.unwrap_or(scenario.config.rng_seed);

    let mut rows = Vec::with_capacity(spec.evaluators.len());
    for &ev in &spec.evaluators {
        let row = match ev {
            Evaluator::ApproxMrc => {
                SweepRow::ok(value, scheme, ev, closed.expect("model").weighted_sum_rate(&support)?, None)
            }
            Evaluator::UpperBound => {
                SweepRow::ok(value, scheme, ev, closed.expect("model").weighted_upper_bound(&support)?, None)
            }
            Evaluator::SimMrc | Evaluator::SimMmse => {
                let combiner = if ev == Evaluator::SimMrc { Combiner::Mrc } else { Combiner::Mmse };
                let r = sim
                    .as_ref()
                    .expect("simulator")
                    .run(&SimOptions::new(spec.trials, combiner, seed))?;
                SweepRow::ok(value, scheme, ev, r.estimate, Some(r.stderr))
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Runs the sweep; every value's configuration is validated before any work.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let configs = spec
        .values
        .iter()
        .map(|&v| spec.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    let per_value = configs
        .into_iter()
        .zip(&spec.values)
        .map(|(config, &value)| evaluate_config(config, value, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_value.into_iter().flatten().collect())
}

/// Rows for every scheme and evaluator of `spec` on one configuration, labelled
/// with `value`. The sweep parameter and values of `spec` are not used.
pub fn evaluate_config(config: ScenarioConfig, value: f64, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let scenario = Scenario::build(config)?;
    let needs_candidates = spec
        .schemes
        .iter()
        .any(|s| matches!(s, Scheme::Proposed | Scheme::Optimal));
    let model = if needs_candidates {
        Some(RateModel::for_candidates(&scenario)?)
    } else {
        None
    };
    let cells = spec
        .schemes
        .par_iter()
        .map(|&scheme| evaluate_cell(value, scheme, &scenario, model.as_ref(), spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(cells.into_iter().flatten().collect())
}

pub fn write_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}
