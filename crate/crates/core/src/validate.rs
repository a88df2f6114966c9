//! Built-in identity suite run against a loaded scenario.
//!
//! The moment checks compare the closed-form channel moments with sample
//! means over independent channel draws; a check passes when the difference
//! stays within three standard errors (plus a `1e-9` relative floor for
//! zero-variance cases). The remaining checks are exact identities.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, ArrayLayout, GainTables};
use crate::montecarlo::{mean_and_stderr, Combiner, SimOptions, Simulator};
use crate::optimizer::PlacementMatrix;
use crate::rate::{fejer_correlation, RateModel};
use crate::rng::{self, Purpose};
use crate::scenario::{RicianFactor, Scenario};
use crate::{Error, Result};

pub const MOMENT_SIGMAS: f64 = 3.0;
pub const EXACTNESS_TOL: f64 = 1e-9;
pub const DOMINANCE_TOL: f64 = 1e-9;
pub const FEJER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Channel draws per moment check.
    pub draws: usize,
    /// Simulation trials for the exactness and dominance checks.
    pub trials: usize,
    pub seed: u64,
    /// Multiplies every correlation kernel before the moment checks run.
    /// Negative control: a corrupted table must make a moment check fail.
    pub corrupt_kernels: Option<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            draws: 20_000,
            trials: 200,
            seed: 1,
            corrupt_kernels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Observed discrepancy.
    pub error: f64,
    /// Allowed discrepancy.
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: error <= tolerance,
            error,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: error {:.3e} (tol {:.3e}) {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.error,
                    c.tolerance,
                    c.detail
                )
            })
            .collect()
    }
}

/// `n` positions spread evenly over `0..n0`.
pub fn spread_support(n0: usize, n: usize) -> Vec<usize> {
    (0..n).map(|j| (2 * j + 1) * n0 / (2 * n)).collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Sample mean and standard error of `f` over independent draws.
fn sampled(draws: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> (f64, f64) {
    let v: Vec<f64> = (0..draws).into_par_iter().map(&f).collect();
    mean_and_stderr(&v)
}

fn moment_check(name: &str, closed: f64, (mean, se): (f64, f64)) -> Check {
    Check::new(
        name,
        (mean - closed).abs(),
        MOMENT_SIGMAS * se + 1e-9 * closed.abs(),
        format!("closed form {closed:.6e}, sampled {mean:.6e} ± {se:.2e}"),
    )
}

/// Closed-form moments of `model` against draws from `sim`, both over the
/// same layout.
pub fn moment_checks(model: &RateModel, sim: &Simulator, opts: &ValidateOptions) -> Result<Vec<Check>> {
    let support = model.all_positions();
    let active = model.active();
    let k = *active
        .iter()
        .max_by(|&&a, &&b| model.second_moment(a, &support).total_cmp(&model.second_moment(b, &support)))
        .ok_or_else(|| Error::domain("no grid has a positive activation probability"))?;
    if model.second_moment(k, &support) == 0.0 {
        return Err(Error::domain("every active grid has zero gain on the validation layout"));
    }
    let sampler = sim.sampler();
    let draw = |t: usize, grids: &[usize]| {
        let mut rng = rng::stream(opts.seed, Purpose::Validation, t as u64);
        grids.iter().map(|&g| sampler.sample_column(g, &mut rng)).collect::<Vec<_>>()
    };

    let mut checks = vec![
        moment_check(
            "second_moment",
            model.second_moment(k, &support),
            sampled(opts.draws, |t| energy(&draw(t, &[k])[0])),
        ),
        moment_check(
            "fourth_moment",
            model.fourth_moment(k, &support),
            sampled(opts.draws, |t| energy(&draw(t, &[k])[0]).powi(2)),
        ),
    ];

    // the most strongly coupled partner makes kernel errors visible
    let partner = active
        .iter()
        .copied()
        .filter(|&i| i != k)
        .max_by(|&a, &b| model.cross_moment(k, a, &support).total_cmp(&model.cross_moment(k, b, &support)));
    match partner {
        Some(i) => checks.push(moment_check(
            "cross_moment",
            model.cross_moment(k, i, &support),
            sampled(opts.draws, |t| {
                let h = draw(t, &[k, i]);
                inner(&h[0], &h[1]).norm_sqr()
            }),
        )),
        None => checks.push(Check::new(
            "cross_moment",
            0.0,
            0.0,
            "skipped: fewer than two active grids".into(),
        )),
    }
    Ok(checks)
}

/// Self-correlation equals `M²`, the kernel matches explicit steering inner
/// products, and never exceeds `M²`.
pub fn fejer_checks(scenario: &Scenario, gains: &GainTables) -> Vec<Check> {
    let g = scenario.config.subarray;
    let lambda = scenario.wavelength();
    let m2 = (g.m() * g.m()) as f64;
    let dirs: Vec<_> = gains.u.iter().step_by((gains.u.len() / 64).max(1)).copied().collect();
    let mut self_err = 0.0f64;
    let mut ip_err = 0.0f64;
    let mut excess = 0.0f64;
    for (a, &u1) in dirs.iter().enumerate() {
        self_err = self_err.max((fejer_correlation(u1, u1, &g, lambda) - m2).abs() / m2);
        let s1 = steering_vector(u1, &g, lambda);
        for &u2 in dirs.iter().skip(a + 1).take(8) {
            let phi = fejer_correlation(u1, u2, &g, lambda);
            let direct = inner(&s1, &steering_vector(u2, &g, lambda)).norm_sqr();
            ip_err = ip_err.max((phi - direct).abs() / m2);
            excess = excess.max(phi - m2);
        }
    }
    vec![
        Check::new("fejer_self_limit", self_err, FEJER_TOL, format!("M² = {m2}")),
        Check::new(
            "fejer_steering_product",
            ip_err,
            FEJER_TOL,
            format!("{} directions", dirs.len()),
        ),
        Check::new("fejer_bounded", excess.max(0.0), 0.0, "φ ≤ M²".into()),
    ]
}

/// `ΦᵀΦ = diag(χ)` and the row/column constraints for `support`.
pub fn placement_check(n0: usize, support: &[usize]) -> Result<Check> {
    let phi = PlacementMatrix::from_n_mu(n0, support)?;
    let ok = phi.satisfies_constraints() && phi.gram_is_selection_diagonal();
    Ok(Check::new(
        "placement_gram",
        if ok { 0.0 } else { 1.0 },
        0.0,
        format!("{} × {n0} selection", support.len()),
    ))
}

/// Pure LoS, the strongest grid alone with ρ = 1: every simulated MRC trial
/// must equal the closed form.
pub fn exactness_check(
    scenario: &Scenario,
    layout: &ArrayLayout,
    gains: &GainTables,
    opts: &ValidateOptions,
) -> Result<Check> {
    let pure = gains.with_rician(RicianFactor::PureLos);
    let positions: Vec<usize> = (0..pure.n_positions()).collect();
    let strength = |k: usize| -> f64 { positions.iter().map(|&n| pure.beta_total[pure.idx(k, n)]).sum() };
    let k = (0..pure.n_grids())
        .max_by(|&a, &b| strength(a).total_cmp(&strength(b)))
        .ok_or_else(|| Error::domain("scenario has no grids"))?;
    let mut rho = vec![0.0; pure.n_grids()];
    rho[k] = 1.0;
    let geometry: Vec<_> = layout.subarrays.iter().map(|s| s.geometry).collect();
    let snr = scenario.snr();
    let model = RateModel::new(pure.clone(), &geometry, scenario.wavelength(), &snr, &rho, 0)?;
    let closed = model.weighted_sum_rate(&positions)?;
    let sim = Simulator::from_gains(layout, pure, scenario.wavelength(), &rho, &snr, None)?;
    let values = sim.trial_values(&SimOptions::new(opts.trials, Combiner::Mrc, opts.seed))?;
    let worst = values.iter().map(|v| (v - closed).abs()).fold(0.0, f64::max);
    Ok(Check::new(
        "pure_los_exactness",
        worst,
        EXACTNESS_TOL,
        format!("grid {}, closed form {closed:.9} bit/s/Hz", k + 1),
    ))
}

/// Per-realization MMSE sum rate never falls below the MRC sum rate.
pub fn dominance_check(sim: &Simulator, opts: &ValidateOptions) -> Check {
    let worst = sim
        .paired_values(opts.trials, opts.seed)
        .into_iter()
        .map(|(mrc, mmse)| mrc - mmse)
        .fold(0.0, f64::max);
    Check::new(
        "mmse_dominates_mrc",
        worst,
        DOMINANCE_TOL,
        format!("{} realizations", opts.trials),
    )
}

/// Runs every check on an evenly spread placement of the scenario's
/// subarrays.
pub fn run_suite(scenario: &Scenario, opts: &ValidateOptions) -> Result<ValidationReport> {
    if opts.draws < 2 || opts.trials == 0 {
        return Err(Error::config("validate", "draws must be at least 2 and trials at least 1"));
    }
    let support = spread_support(scenario.n0(), scenario.n_subarrays());
    let layout = ArrayLayout::from_candidates(scenario, &support)?;
    let gains = GainTables::for_layout(scenario, &layout)?;
    let geometry: Vec<_> = layout.subarrays.iter().map(|s| s.geometry).collect();
    let mut model = RateModel::new(
        gains.clone(),
        &geometry,
        scenario.wavelength(),
        &scenario.snr(),
        scenario.rho(),
        scenario.config.kernel_budget,
    )?;
    if let Some(f) = opts.corrupt_kernels {
        model.kernels_mut().corrupt(f);
    }
    let sim = Simulator::from_gains(
        &layout,
        gains.clone(),
        scenario.wavelength(),
        scenario.rho(),
        &scenario.snr(),
        None,
    )?;

    let mut checks = moment_checks(&model, &sim, opts)?;
    checks.extend(fejer_checks(scenario, &gains));
    checks.push(placement_check(scenario.n0(), &support)?);
    checks.push(exactness_check(scenario, &layout, &gains, opts)?);
    checks.push(dominance_check(&sim, opts));
    Ok(ValidationReport { checks })
}
