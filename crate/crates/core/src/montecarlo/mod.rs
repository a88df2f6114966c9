//! Simulated expected weighted sum rate under MRC and MMSE combining, plus
//! power and correlation maps.
//!
//! Each trial draws one activation vector and the channels of the active
//! grids from its own random stream, so trials run in parallel and still sum
//! to the same bits as a sequential run.

pub mod combiner;
pub mod maps;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayLayout, ChannelRealization, ChannelSampler, GainTables};
use crate::rng::{self, Purpose};
use crate::scenario::Scenario;
use crate::{Error, Result};

pub use combiner::{mmse_sinr, mmse_sinr_all, mrc_sinr, mrc_sinr_all};
pub use maps::{correlation_map, power_gain_map, MapGrid, MapRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Mrc,
    Mmse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub trials: usize,
    pub combiner: Combiner,
    pub seed: u64,
    /// When set, the grid is always active and only its rate is recorded.
    pub force_active_grid: Option<usize>,
}

impl SimOptions {
    pub fn new(trials: usize, combiner: Combiner, seed: u64) -> Self {
        Self {
            trials,
            combiner,
            seed,
            force_active_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
    pub combiner: Combiner,
}

/// Mean and standard error of per-trial values.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn rates(sinr: &[f64]) -> impl Iterator<Item = f64> + '_ {
    sinr.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2)
}

/// A layout bound to a scenario's users, ready to draw trials.
#[derive(Debug, Clone)]
pub struct Simulator {
    sampler: ChannelSampler,
    rho: Vec<f64>,
    snr: Vec<f64>,
}

impl Simulator {
    pub fn new(scenario: &Scenario, layout: &ArrayLayout) -> Result<Self> {
        let gains = GainTables::for_layout(scenario, layout)?;
        Self::from_gains(layout, gains, scenario.wavelength(), scenario.rho(), &scenario.snr(), None)
    }

    /// `extra` makes one more grid samplable, for forced-activation runs.
    pub fn from_gains(
        layout: &ArrayLayout,
        gains: GainTables,
        wavelength: f64,
        rho: &[f64],
        snr: &[f64],
        extra: Option<usize>,
    ) -> Result<Self> {
        let mut eligible: Vec<bool> = rho.iter().map(|&r| r > 0.0).collect();
        if let Some(k) = extra {
            if k >= eligible.len() {
                return Err(Error::config("force_active_grid", format!("grid {} out of range", k + 1)));
            }
            eligible[k] = true;
        }
        Ok(Self {
            sampler: ChannelSampler::new(layout, gains, wavelength, &eligible)?,
            rho: rho.to_vec(),
            snr: snr.to_vec(),
        })
    }

    /// Scenario users against a layout, with one grid forced samplable.
    pub fn with_forced(scenario: &Scenario, layout: &ArrayLayout, grid: usize) -> Result<Self> {
        let gains = GainTables::for_layout(scenario, layout)?;
        Self::from_gains(layout, gains, scenario.wavelength(), scenario.rho(), &scenario.snr(), Some(grid))
    }

    pub fn sampler(&self) -> &ChannelSampler {
        &self.sampler
    }

    /// Trial `t` of the stream family `seed`.
    pub fn draw(&self, seed: u64, t: usize, force: Option<usize>) -> ChannelRealization {
        let mut rng = rng::stream(seed, Purpose::Trial, t as u64);
        self.sampler.sample(&self.rho, force, &mut rng)
    }

    /// Per-user SINR of the active users of one draw.
    pub fn sinr(&self, real: &ChannelRealization, combiner: Combiner) -> Vec<f64> {
        let snr: Vec<f64> = real.active.iter().map(|&k| self.snr[k]).collect();
        match combiner {
            Combiner::Mrc => mrc_sinr_all(&real.columns, &snr),
            Combiner::Mmse => mmse_sinr_all(&real.columns, &snr),
        }
    }

    fn trial_value(&self, opts: &SimOptions, t: usize) -> f64 {
        let real = self.draw(opts.seed, t, opts.force_active_grid);
        if real.active.is_empty() {
            return 0.0;
        }
        let sinr = self.sinr(&real, opts.combiner);
        match opts.force_active_grid {
            Some(k) => {
                let pos = real.active.iter().position(|&a| a == k).expect("forced grid is active");
                sinr[pos].ln_1p() / std::f64::consts::LN_2
            }
            None => rates(&sinr).sum(),
        }
    }

    /// Per-trial values in trial order.
    pub fn trial_values(&self, opts: &SimOptions) -> Result<Vec<f64>> {
        if opts.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(k) = opts.force_active_grid {
            if k >= self.rho.len() {
                return Err(Error::config("force_active_grid", format!("grid {} out of range", k + 1)));
            }
        }
        Ok((0..opts.trials)
            .into_par_iter()
            .map(|t| self.trial_value(opts, t))
            .collect())
    }

    pub fn run(&self, opts: &SimOptions) -> Result<SimResult> {
        let values = self.trial_values(opts)?;
        let (estimate, stderr) = mean_and_stderr(&values);
        Ok(SimResult {
            estimate,
            stderr,
            trials: opts.trials,
            seed: opts.seed,
            combiner: opts.combiner,
        })
    }

    /// MRC and MMSE sums on the same draws, trial by trial.
    pub fn paired_values(&self, trials: usize, seed: u64) -> Vec<(f64, f64)> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let real = self.draw(seed, t, None);
                if real.active.is_empty() {
                    return (0.0, 0.0);
                }
                (
                    rates(&self.sinr(&real, Combiner::Mrc)).sum(),
                    rates(&self.sinr(&real, Combiner::Mmse)).sum(),
                )
            })
            .collect()
    }
}

/// Simulated weighted sum rate of `layout` in `scenario`.
pub fn simulate_weighted_sum_rate(scenario: &Scenario, layout: &ArrayLayout, opts: &SimOptions) -> Result<SimResult> {
    let sim = match opts.force_active_grid {
        Some(k) => Simulator::with_forced(scenario, layout, k)?,
        None => Simulator::new(scenario, layout)?,
    };
    sim.run(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SubarrayGeometry;
    use crate::geom::Vec3;
    use crate::rate::{RateModel, DEFAULT_KERNEL_BUDGET};
    use crate::scenario::{RicianFactor, VisibilityTable};

    fn toy(rho: Vec<f64>, rician: RicianFactor) -> (ArrayLayout, GainTables, f64) {
        let lambda = 0.01;
        let centers: Vec<Vec3> = vec![[0.0, -3.0, 4.0], [0.0, 1.0, 4.0], [0.0, 6.0, 4.0]];
        let grids: Vec<Vec3> = vec![[10.0, 0.0, 0.0], [14.0, -6.0, 0.0]][..rho.len()].to_vec();
        let vis = VisibilityTable::from_fn(grids.len(), 3, |k, n| (k + n) % 3 != 2);
        let gains = GainTables::build(&centers, &grids, &vis, lambda, rician).unwrap();
        let layout = ArrayLayout::uniform(&centers, SubarrayGeometry::half_wave(2, 2, lambda)).unwrap();
        (layout, gains, lambda)
    }

    #[test]
    fn zero_probabilities_give_zero() {
        let (layout, gains, lambda) = toy(vec![0.0, 0.0], RicianFactor::Linear(10.0));
        let sim = Simulator::from_gains(&layout, gains, lambda, &[0.0, 0.0], &[1e9, 1e9], None).unwrap();
        let r = sim.run(&SimOptions::new(50, Combiner::Mrc, 1)).unwrap();
        assert_eq!((r.estimate, r.stderr), (0.0, 0.0));
    }

    #[test]
    fn pure_los_single_grid_is_exact() {
        let (layout, gains, lambda) = toy(vec![1.0], RicianFactor::PureLos);
        let g = SubarrayGeometry::half_wave(2, 2, lambda);
        let model = RateModel::new(gains.clone(), &[g; 3], lambda, &[1e9], &[1.0], DEFAULT_KERNEL_BUDGET).unwrap();
        let closed = model.weighted_sum_rate(&[0, 1, 2]).unwrap();
        let sim = Simulator::from_gains(&layout, gains, lambda, &[1.0], &[1e9], None).unwrap();
        let opts = SimOptions::new(200, Combiner::Mrc, 9);
        for v in sim.trial_values(&opts).unwrap() {
            assert!((v - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn runs_are_reproducible_and_thread_independent() {
        let (layout, gains, lambda) = toy(vec![0.6, 0.8], RicianFactor::Linear(10.0));
        let sim = Simulator::from_gains(&layout, gains, lambda, &[0.6, 0.8], &[1e9, 1e9], None).unwrap();
        let opts = SimOptions::new(300, Combiner::Mmse, 77);
        let a = sim.run(&opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sim.run(&opts).unwrap());
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn estimator_is_unbiased_on_two_grid_toy() {
        // condition on the four activation patterns with per-pattern sub-simulations
        let rho = [0.3, 0.7];
        let snr = [1e9, 1e9];
        let (layout, gains, lambda) = toy(rho.to_vec(), RicianFactor::Linear(5.0));
        let sim = Simulator::from_gains(&layout, gains.clone(), lambda, &rho, &snr, None).unwrap();
        let trials = 100_000;
        let r = sim.run(&SimOptions::new(trials, Combiner::Mrc, 5)).unwrap();

        // E = ρ0(1-ρ1)E[R0 alone] + ρ1(1-ρ0)E[R1 alone] + ρ0ρ1 E[R0+R1 together]
        let alone = |k: usize| {
            let mut r = [0.0, 0.0];
            r[k] = 1.0;
            let s = Simulator::from_gains(&layout, gains.clone(), lambda, &r, &snr, None).unwrap();
            s.run(&SimOptions::new(trials, Combiner::Mrc, 100 + k as u64)).unwrap()
        };
        let both = Simulator::from_gains(&layout, gains.clone(), lambda, &[1.0, 1.0], &snr, None)
            .unwrap()
            .run(&SimOptions::new(trials, Combiner::Mrc, 300))
            .unwrap();
        let (a0, a1) = (alone(0), alone(1));
        let expect = rho[0] * (1.0 - rho[1]) * a0.estimate
            + rho[1] * (1.0 - rho[0]) * a1.estimate
            + rho[0] * rho[1] * both.estimate;
        let se_expect = ((rho[0] * (1.0 - rho[1]) * a0.stderr).powi(2)
            + (rho[1] * (1.0 - rho[0]) * a1.stderr).powi(2)
            + (rho[0] * rho[1] * both.stderr).powi(2))
        .sqrt();
        let se = (r.stderr.powi(2) + se_expect.powi(2)).sqrt();
        assert!((r.estimate - expect).abs() < 3.0 * se, "{} vs {} (se {se})", r.estimate, expect);
    }

    #[test]
    fn forced_grid_records_its_own_rate() {
        let (layout, gains, lambda) = toy(vec![0.0, 0.5], RicianFactor::PureLos);
        let sim = Simulator::from_gains(&layout, gains, lambda, &[0.0, 0.5], &[1e9, 1e9], Some(0)).unwrap();
        let mut opts = SimOptions::new(100, Combiner::Mrc, 3);
        opts.force_active_grid = Some(0);
        let r = sim.run(&opts).unwrap();
        assert!(r.estimate > 0.0);
    }
}
