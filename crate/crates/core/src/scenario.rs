//! Placement region, user coverage region, activation probabilities and
//! obstacle-induced LoS visibility.
//!
//! Index conventions (all 0-based in code):
//!
//! - candidate `ñ = n_y + n_z * N_y` (row-major over `(n_y, n_z)`);
//! - grid `k = k_x + k_y * K_x + k_z * K_x * K_y`.
//!
//! Configuration files and CLI outputs use the same orderings shifted to 1-based.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::hotspot_type;
use crate::channel::SubarrayGeometry;
use crate::geom::{Aabb, Vec3};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Absolute tolerance on `Σ ρ_k = K̄`.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// Default number of sample points per grid for the visibility test.
pub const DEFAULT_VISIBILITY_SAMPLES: usize = 20;

fn check_axis(field: &str, min: f64, max: f64, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::config(field, "count must be positive"));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::config(field, "bounds must be finite"));
    }
    if min > max {
        return Err(Error::config(field, format!("min {min} exceeds max {max}")));
    }
    if min == max && count != 1 {
        return Err(Error::config(
            field,
            "a degenerate axis (min = max) must have exactly one sample",
        ));
    }
    Ok(())
}

/// Sampling interval of an axis; zero for a degenerate axis.
fn spacing(min: f64, max: f64, count: usize) -> f64 {
    (max - min) / count as f64
}

/// Center coordinate of cell `i` (0-based).
fn cell_center(min: f64, max: f64, count: usize, i: usize) -> f64 {
    if min == max {
        min
    } else {
        min + (i as f64 + 0.5) * spacing(min, max, count)
    }
}

/// Rectangular placement region in the `x = 0` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaRegionSpec {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_y: usize,
    pub n_z: usize,
}

impl MaRegionSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("ma_region.y", self.y_min, self.y_max, self.n_y)?;
        check_axis("ma_region.z", self.z_min, self.z_max, self.n_z)
    }

    pub fn n0(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn delta_y(&self) -> f64 {
        spacing(self.y_min, self.y_max, self.n_y)
    }

    pub fn delta_z(&self) -> f64 {
        spacing(self.z_min, self.z_max, self.n_z)
    }

    /// Linear candidate index of the 0-based 2D index `(n_y, n_z)`.
    pub fn index(&self, n_y: usize, n_z: usize) -> usize {
        n_y + n_z * self.n_y
    }

    /// Inverse of [`MaRegionSpec::index`].
    pub fn index_2d(&self, idx: usize) -> (usize, usize) {
        (idx % self.n_y, idx / self.n_y)
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        let (iy, iz) = self.index_2d(idx);
        [
            0.0,
            cell_center(self.y_min, self.y_max, self.n_y, iy),
            cell_center(self.z_min, self.z_max, self.n_z, iz),
        ]
    }
}

/// Lists the `N₀` candidate subarray positions in linear-index order.
pub fn build_candidate_grid(ma: &MaRegionSpec) -> Result<Vec<Vec3>> {
    ma.validate()?;
    Ok((0..ma.n0()).map(|i| ma.position(i)).collect())
}

/// Cuboid coverage region split into `K_x × K_y × K_z` grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub k_x: usize,
    pub k_y: usize,
    pub k_z: usize,
}

impl CoverageSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min > 0.0) {
            return Err(Error::config(
                "coverage.x_min",
                "users must lie in front of the placement plane (x_min > 0)",
            ));
        }
        check_axis("coverage.x", self.x_min, self.x_max, self.k_x)?;
        check_axis("coverage.y", self.y_min, self.y_max, self.k_y)?;
        check_axis("coverage.z", self.z_min, self.z_max, self.k_z)
    }

    pub fn k(&self) -> usize {
        self.k_x * self.k_y * self.k_z
    }

    pub fn index(&self, kx: usize, ky: usize, kz: usize) -> usize {
        kx + ky * self.k_x + kz * self.k_x * self.k_y
    }

    pub fn index_3d(&self, k: usize) -> (usize, usize, usize) {
        let kx = k % self.k_x;
        let ky = (k / self.k_x) % self.k_y;
        let kz = k / (self.k_x * self.k_y);
        (kx, ky, kz)
    }

    pub fn center(&self, k: usize) -> Vec3 {
        let (kx, ky, kz) = self.index_3d(k);
        [
            cell_center(self.x_min, self.x_max, self.k_x, kx),
            cell_center(self.y_min, self.y_max, self.k_y, ky),
            cell_center(self.z_min, self.z_max, self.k_z, kz),
        ]
    }

    /// Lower and upper corner of grid cell `k`.
    pub fn cell(&self, k: usize) -> (Vec3, Vec3) {
        let (kx, ky, kz) = self.index_3d(k);
        let bounds = |min: f64, max: f64, count: usize, i: usize| {
            if min == max {
                (min, min)
            } else {
                let d = spacing(min, max, count);
                (min + i as f64 * d, min + (i + 1) as f64 * d)
            }
        };
        let (x0, x1) = bounds(self.x_min, self.x_max, self.k_x, kx);
        let (y0, y1) = bounds(self.y_min, self.y_max, self.k_y, ky);
        let (z0, z1) = bounds(self.z_min, self.z_max, self.k_z, kz);
        ([x0, y0, z0], [x1, y1, z1])
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p[0] >= self.x_min
            && p[0] <= self.x_max
            && p[1] >= self.y_min
            && p[1] <= self.y_max
            && p[2] >= self.z_min
            && p[2] <= self.z_max
    }
}

/// Lists the `K` grid centers in linear-index order.
pub fn build_user_grid(cov: &CoverageSpec) -> Result<Vec<Vec3>> {
    cov.validate()?;
    Ok((0..cov.k()).map(|k| cov.center(k)).collect())
}

/// An axis-aligned obstacle.
pub type Obstacle = Aabb;

/// Activation probabilities together with the sets they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDistribution {
    pub rho: Vec<f64>,
    /// Hotspot sets, 0-based grid indices. Empty for explicit distributions.
    pub hotspots_1: Vec<usize>,
    pub hotspots_2: Vec<usize>,
    pub regular_ratio: f64,
    pub expected_users: f64,
}

impl UserDistribution {
    /// Wraps an explicit probability vector.
    pub fn explicit(rho: Vec<f64>) -> Result<Self> {
        for (k, &r) in rho.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(
                    "distribution.rho",
                    format!("entry {} = {r} is outside [0, 1]", k + 1),
                ));
            }
        }
        let expected_users = rho.iter().sum();
        Ok(Self {
            rho,
            hotspots_1: Vec::new(),
            hotspots_2: Vec::new(),
            regular_ratio: 1.0,
            expected_users,
        })
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    /// Grid indices with positive activation probability.
    pub fn active(&self) -> Vec<usize> {
        (0..self.rho.len()).filter(|&k| self.rho[k] > 0.0).collect()
    }
}

/// Assigns regular/hotspot probabilities from `K̄` and the regular ratio `ζ`.
///
/// `hotspots_1` and `hotspots_2` are 0-based; every other grid is regular.
/// Hotspot-2 grids receive the larger probability.
pub fn assign_probabilities(
    k_total: usize,
    expected_users: f64,
    regular_ratio: f64,
    hotspots_1: &[usize],
    hotspots_2: &[usize],
) -> Result<UserDistribution> {
    const FIELD: &str = "distribution";
    if !(0.0..=1.0).contains(&regular_ratio) {
        return Err(Error::config(FIELD, "regular_ratio must lie in [0, 1]"));
    }
    if !(expected_users >= 0.0) || expected_users > k_total as f64 {
        return Err(Error::config(
            FIELD,
            format!("expected_users {expected_users} must lie in [0, {k_total}]"),
        ));
    }
    let mut label = vec![0u8; k_total];
    for (set, id) in [(hotspots_1, 1u8), (hotspots_2, 2u8)] {
        for &k in set {
            if k >= k_total {
                return Err(Error::config(
                    FIELD,
                    format!("hotspot grid {} out of range 1..={k_total}", k + 1),
                ));
            }
            if label[k] != 0 {
                return Err(Error::config(
                    FIELD,
                    format!("grid {} listed in more than one hotspot set", k + 1),
                ));
            }
            label[k] = id;
        }
    }
    let n1 = hotspots_1.len() as f64;
    let n2 = hotspots_2.len() as f64;
    let n0 = k_total as f64 - n1 - n2;

    let hot_mass = expected_users * (1.0 - regular_ratio);
    let weight = 2.0 * n1 + 3.0 * n2;
    let (rho2, rho1) = if weight > 0.0 {
        let r2 = (3.0 * hot_mass / weight).min(1.0);
        let mut r1 = 2.0 * hot_mass / weight;
        if n1 > 0.0 {
            r1 = r1.max((hot_mass - n2) / n1);
        }
        (r2, r1)
    } else {
        (0.0, 0.0)
    };
    let rho0 = if n0 > 0.0 {
        expected_users * regular_ratio / n0
    } else {
        0.0
    };
    if rho1 > 1.0 + PROBABILITY_SUM_TOL {
        return Err(Error::config(
            FIELD,
            format!("hotspot probability {rho1} exceeds 1; expected_users too large for the hotspot sets"),
        ));
    }
    if rho0 > 1.0 + PROBABILITY_SUM_TOL {
        return Err(Error::config(
            FIELD,
            format!("regular-grid probability {rho0} exceeds 1"),
        ));
    }
    let rho: Vec<f64> = label
        .iter()
        .map(|&l| match l {
            0 => rho0.min(1.0),
            1 => rho1.clamp(0.0, 1.0),
            _ => rho2,
        })
        .collect();
    let total: f64 = rho.iter().sum();
    if (total - expected_users).abs() > PROBABILITY_SUM_TOL * expected_users.max(1.0) {
        return Err(Error::config(
            FIELD,
            format!(
                "probabilities sum to {total}, not expected_users = {expected_users}; \
                 the grid sets cannot hold this much probability mass"
            ),
        ));
    }
    Ok(UserDistribution {
        rho,
        hotspots_1: hotspots_1.to_vec(),
        hotspots_2: hotspots_2.to_vec(),
        regular_ratio,
        expected_users,
    })
}

/// Binary LoS visibility table, `K × P` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTable {
    n_grids: usize,
    n_positions: usize,
    bits: Vec<bool>,
}

impl VisibilityTable {
    pub fn all_visible(n_grids: usize, n_positions: usize) -> Self {
        Self {
            n_grids,
            n_positions,
            bits: vec![true; n_grids * n_positions],
        }
    }

    pub fn from_fn(n_grids: usize, n_positions: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..n_grids * n_positions)
            .map(|i| f(i / n_positions, i % n_positions))
            .collect();
        Self {
            n_grids,
            n_positions,
            bits,
        }
    }

    #[inline]
    pub fn get(&self, k: usize, n: usize) -> bool {
        self.bits[k * self.n_positions + n]
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    /// Number of positions with LoS to grid `k`.
    pub fn reach(&self, k: usize) -> usize {
        (0..self.n_positions).filter(|&n| self.get(k, n)).count()
    }

    pub fn count_visible(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Per-grid sample points used to decide LoS visibility.
///
/// The points depend only on `(seed, grid)`, so visibility can be recomputed
/// for arbitrary subarray centers and agrees with the candidate table.
#[derive(Debug, Clone)]
pub struct VisibilitySampler {
    samples: Vec<Vec<Vec3>>,
    obstacles: Vec<Obstacle>,
}

impl VisibilitySampler {
    pub fn new(
        cov: &CoverageSpec,
        obstacles: &[Obstacle],
        samples_per_grid: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples_per_grid == 0 {
            return Err(Error::config("visibility_samples", "must be at least 1"));
        }
        Ok(Self {
            samples: grid_sample_points(cov, samples_per_grid, seed),
            obstacles: obstacles.to_vec(),
        })
    }

    pub fn samples(&self, k: usize) -> &[Vec3] {
        &self.samples[k]
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// True when no segment from `position` to a sample point of grid `k`
    /// touches an obstacle.
    pub fn visible(&self, k: usize, position: Vec3) -> bool {
        if self.obstacles.is_empty() {
            return true;
        }
        self.samples[k].iter().all(|&p| {
            self.obstacles
                .iter()
                .all(|o| !o.intersects_segment(position, p))
        })
    }

    pub fn table(&self, positions: &[Vec3]) -> VisibilityTable {
        let n_grids = self.samples.len();
        let rows: Vec<Vec<bool>> = (0..n_grids)
            .into_par_iter()
            .map(|k| positions.iter().map(|&r| self.visible(k, r)).collect())
            .collect();
        VisibilityTable {
            n_grids,
            n_positions: positions.len(),
            bits: rows.into_iter().flatten().collect(),
        }
    }
}

/// Draws `samples_per_grid` uniform points inside every grid cell, one
/// independent stream per grid.
pub fn grid_sample_points(cov: &CoverageSpec, samples_per_grid: usize, seed: u64) -> Vec<Vec<Vec3>> {
    (0..cov.k())
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = cov.cell(k);
            let mut rng = rng::stream(seed, Purpose::Visibility, k as u64);
            (0..samples_per_grid)
                .map(|_| {
                    let mut p = [0.0; 3];
                    for a in 0..3 {
                        let u: f64 = rng.random();
                        p[a] = lo[a] + u * (hi[a] - lo[a]);
                    }
                    p
                })
                .collect()
        })
        .collect()
}

/// Computes `ξ[k][ñ]` for the given candidate positions.
pub fn compute_los_visibility(
    candidates: &[Vec3],
    cov: &CoverageSpec,
    obstacles: &[Obstacle],
    samples_per_grid: usize,
    seed: u64,
) -> Result<VisibilityTable> {
    Ok(VisibilitySampler::new(cov, obstacles, samples_per_grid, seed)?.table(candidates))
}

/// Rician factor `κ = β_LoS / β_NLoS`, or the pure-LoS limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RicianFactor {
    Linear(f64),
    PureLos,
}

impl RicianFactor {
    pub fn from_db(db: f64) -> Self {
        RicianFactor::Linear(crate::db_to_linear(db))
    }

    /// NLoS gain that accompanies a LoS gain.
    pub fn nlos_gain(self, beta_los: f64) -> f64 {
        match self {
            RicianFactor::Linear(k) => beta_los / k,
            RicianFactor::PureLos => 0.0,
        }
    }
}

/// How the activation probabilities are specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Regular/hotspot split with 1-based hotspot grid indices.
    Hotspots {
        expected_users: f64,
        regular_ratio: f64,
        #[serde(default)]
        hotspots_1: Vec<usize>,
        #[serde(default)]
        hotspots_2: Vec<usize>,
    },
    /// One of the three 12-grid hotspot layouts, all at equal density.
    HotspotType {
        type_id: u8,
        expected_users: f64,
        regular_ratio: f64,
    },
    /// Explicit per-grid probabilities.
    Explicit { rho: Vec<f64> },
}

impl DistributionSpec {
    pub fn expected_users(&self) -> f64 {
        match self {
            DistributionSpec::Hotspots { expected_users, .. }
            | DistributionSpec::HotspotType { expected_users, .. } => *expected_users,
            DistributionSpec::Explicit { rho } => rho.iter().sum(),
        }
    }

    /// Same layout, different `K̄`. Explicit vectors are rescaled.
    pub fn with_expected_users(&self, k_bar: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            DistributionSpec::Hotspots { expected_users, .. }
            | DistributionSpec::HotspotType { expected_users, .. } => *expected_users = k_bar,
            DistributionSpec::Explicit { rho } => {
                let s: f64 = rho.iter().sum();
                if s > 0.0 {
                    rho.iter_mut().for_each(|r| *r *= k_bar / s);
                }
            }
        }
        out
    }

    pub fn resolve(&self, cov: &CoverageSpec) -> Result<UserDistribution> {
        let k_total = cov.k();
        let to_zero_based = |set: &[usize], name: &str| -> Result<Vec<usize>> {
            set.iter()
                .map(|&k| {
                    if k == 0 || k > k_total {
                        Err(Error::config(
                            format!("distribution.{name}"),
                            format!("grid index {k} outside 1..={k_total}"),
                        ))
                    } else {
                        Ok(k - 1)
                    }
                })
                .collect()
        };
        match self {
            DistributionSpec::Hotspots {
                expected_users,
                regular_ratio,
                hotspots_1,
                hotspots_2,
            } => assign_probabilities(
                k_total,
                *expected_users,
                *regular_ratio,
                &to_zero_based(hotspots_1, "hotspots_1")?,
                &to_zero_based(hotspots_2, "hotspots_2")?,
            ),
            DistributionSpec::HotspotType {
                type_id,
                expected_users,
                regular_ratio,
            } => {
                let set = hotspot_type(*type_id, cov)?;
                assign_probabilities(k_total, *expected_users, *regular_ratio, &set, &[])
            }
            DistributionSpec::Explicit { rho } => {
                if rho.len() != k_total {
                    return Err(Error::config(
                        "distribution.rho",
                        format!("length {} does not match K = {k_total}", rho.len()),
                    ));
                }
                UserDistribution::explicit(rho.clone())
            }
        }
    }
}

/// Physical and system parameters of one scenario, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub carrier_freq: f64,
    pub subarray: SubarrayGeometry,
    /// Number of movable subarrays `N`.
    pub n_subarrays: usize,
    /// Per-grid transmit power in mW; a single entry applies to every grid.
    pub tx_power_mw: Vec<f64>,
    pub noise_power_mw: f64,
    pub rician: RicianFactor,
    pub rng_seed: u64,
    pub ma_region: MaRegionSpec,
    pub coverage: CoverageSpec,
    pub obstacles: Vec<Obstacle>,
    pub distribution: DistributionSpec,
    pub visibility_samples: usize,
    /// Largest kernel table (entries) precomputed before falling back to
    /// on-the-fly evaluation.
    pub kernel_budget: usize,
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0) {
            return Err(Error::config("carrier_freq", "must be positive"));
        }
        self.subarray.validate()?;
        self.ma_region.validate()?;
        self.coverage.validate()?;
        let n0 = self.ma_region.n0();
        if self.n_subarrays == 0 {
            return Err(Error::config("n_subarrays", "must be at least 1"));
        }
        if self.n_subarrays > n0 {
            return Err(Error::config(
                "n_subarrays",
                format!("N = {} exceeds the {n0} candidate positions", self.n_subarrays),
            ));
        }
        let k = self.coverage.k();
        if self.tx_power_mw.len() != 1 && self.tx_power_mw.len() != k {
            return Err(Error::config(
                "tx_power_dbm",
                format!("expected 1 or {k} entries, got {}", self.tx_power_mw.len()),
            ));
        }
        if self.tx_power_mw.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("tx_power_dbm", "powers must be positive"));
        }
        if !(self.noise_power_mw > 0.0) {
            return Err(Error::config("noise_power_dbm", "must be positive"));
        }
        if let RicianFactor::Linear(kappa) = self.rician {
            if !(kappa > 0.0) {
                return Err(Error::config("rician_factor_db", "kappa must be positive"));
            }
        }
        // adjacent subarrays must not overlap
        let g = &self.subarray;
        let extent_y = (g.m_h as f64 - 1.0) * g.d_h;
        let extent_z = (g.m_v as f64 - 1.0) * g.d_v;
        if self.ma_region.n_y > 1 && self.ma_region.delta_y() <= extent_y {
            return Err(Error::config(
                "ma_region.n_y",
                format!(
                    "spacing {} m does not exceed the subarray width {extent_y} m",
                    self.ma_region.delta_y()
                ),
            ));
        }
        if self.ma_region.n_z > 1 && self.ma_region.delta_z() <= extent_z {
            return Err(Error::config(
                "ma_region.n_z",
                format!(
                    "spacing {} m does not exceed the subarray height {extent_z} m",
                    self.ma_region.delta_z()
                ),
            ));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.dims.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::config(
                    format!("obstacles[{i}].dims"),
                    "dimensions must be positive",
                ));
            }
        }
        if self.visibility_samples == 0 {
            return Err(Error::config("visibility_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// A validated scenario with all derived geometry.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub candidates: Vec<Vec3>,
    pub grids: Vec<Vec3>,
    pub distribution: UserDistribution,
    pub sampler: VisibilitySampler,
    pub visibility: VisibilityTable,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let candidates = build_candidate_grid(&config.ma_region)?;
        let grids = build_user_grid(&config.coverage)?;
        let distribution = config.distribution.resolve(&config.coverage)?;
        let sampler = VisibilitySampler::new(
            &config.coverage,
            &config.obstacles,
            config.visibility_samples,
            config.rng_seed,
        )?;
        let visibility = sampler.table(&candidates);
        Ok(Self {
            config,
            candidates,
            grids,
            distribution,
            sampler,
            visibility,
        })
    }

    pub fn n0(&self) -> usize {
        self.candidates.len()
    }

    pub fn k(&self) -> usize {
        self.grids.len()
    }

    pub fn n_subarrays(&self) -> usize {
        self.config.n_subarrays
    }

    pub fn wavelength(&self) -> f64 {
        self.config.wavelength()
    }

    pub fn rho(&self) -> &[f64] {
        &self.distribution.rho
    }

    /// Transmit SNR `P_k / σ²` per grid.
    pub fn snr(&self) -> Vec<f64> {
        let p = &self.config.tx_power_mw;
        (0..self.k())
            .map(|k| p[if p.len() == 1 { 0 } else { k }] / self.config.noise_power_mw)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ma(y: (f64, f64), z: (f64, f64), n_y: usize, n_z: usize) -> MaRegionSpec {
        MaRegionSpec {
            y_min: y.0,
            y_max: y.1,
            z_min: z.0,
            z_max: z.1,
            n_y,
            n_z,
        }
    }

    fn cov(x: (f64, f64, usize), y: (f64, f64, usize), z: (f64, f64, usize)) -> CoverageSpec {
        CoverageSpec {
            x_min: x.0,
            x_max: x.1,
            k_x: x.2,
            y_min: y.0,
            y_max: y.1,
            k_y: y.2,
            z_min: z.0,
            z_max: z.1,
            k_z: z.2,
        }
    }

    #[test]
    fn single_candidate_is_the_midpoint() {
        let c = build_candidate_grid(&ma((-1.0, 1.0), (0.0, 2.0), 1, 1)).unwrap();
        assert_eq!(c, vec![[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn full_size_candidate_grid() {
        let c = build_candidate_grid(&ma((-50.5, 50.5), (20.0, 50.0), 101, 30)).unwrap();
        assert_eq!(c.len(), 3030);
        assert_eq!(c[0], [0.0, -50.0, 20.5]);
        // second row starts after N_y entries
        assert_eq!(c[101], [0.0, -50.0, 21.5]);
        assert_eq!(c[3029], [0.0, 50.0, 49.5]);
    }

    #[test]
    fn swapped_bounds_are_rejected() {
        let err = build_candidate_grid(&ma((1.0, -1.0), (0.0, 2.0), 4, 1)).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn user_grid_examples() {
        let g = build_user_grid(&cov((7.5, 52.5, 1), (-52.5, 52.5, 1), (0.0, 50.0, 1))).unwrap();
        assert_eq!(g, vec![[30.0, 0.0, 25.0]]);

        let g = build_user_grid(&cov((7.5, 52.5, 9), (-52.5, 52.5, 21), (0.0, 0.0, 1))).unwrap();
        assert_eq!(g.len(), 189);
        assert_eq!(g[0], [10.0, -50.0, 0.0]);
        assert_eq!(g[1], [15.0, -50.0, 0.0]);
        assert_eq!(g[9], [10.0, -45.0, 0.0]);

        let g = build_user_grid(&cov((7.5, 52.5, 9), (-52.5, 52.5, 21), (0.0, 50.0, 10))).unwrap();
        assert_eq!(g.len(), 1890);
    }

    #[test]
    fn user_grid_requires_front_half_space() {
        let err = build_user_grid(&cov((0.0, 10.0, 2), (0.0, 1.0, 1), (0.0, 1.0, 1))).unwrap_err();
        assert!(err.to_string().contains("x_min"));
    }

    #[test]
    fn index_round_trips() {
        let c = cov((1.0, 2.0, 3), (0.0, 1.0, 4), (0.0, 1.0, 5));
        for k in 0..c.k() {
            let (a, b, d) = c.index_3d(k);
            assert_eq!(c.index(a, b, d), k);
        }
        let m = ma((0.0, 7.0, ), (0.0, 3.0), 7, 3);
        for i in 0..m.n0() {
            let (a, b) = m.index_2d(i);
            assert_eq!(m.index(a, b), i);
        }
    }

    #[test]
    fn all_regular_probabilities() {
        let d = assign_probabilities(20, 5.0, 1.0, &[0, 1], &[2]).unwrap();
        assert_eq!(d.rho[0], 0.0);
        assert_eq!(d.rho[2], 0.0);
        assert!((d.rho[3] - 5.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn hotspot_probabilities_match_hand_values() {
        let k1: Vec<usize> = (0..6).collect();
        let k2: Vec<usize> = (6..12).collect();
        let d = assign_probabilities(189, 10.0, 0.0, &k1, &k2).unwrap();
        assert_eq!(d.rho[7], 1.0);
        assert!((d.rho[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.rho[100], 0.0);
        assert!((d.rho.iter().sum::<f64>() - 10.0).abs() < 1e-9);
        assert!(d.rho[0] <= d.rho[7]);
    }

    #[test]
    fn overloaded_hotspots_are_rejected() {
        // 6 + 6 hotspot grids cannot hold 13 users
        let k1: Vec<usize> = (0..6).collect();
        let k2: Vec<usize> = (6..12).collect();
        assert!(assign_probabilities(189, 13.0, 0.0, &k1, &k2).is_err());
        // mass with nowhere to go
        assert!(assign_probabilities(10, 2.0, 0.5, &[], &[]).is_err());
        // overlapping sets
        assert!(assign_probabilities(10, 2.0, 0.5, &[1], &[1]).is_err());
    }

    #[test]
    fn no_obstacles_means_full_visibility() {
        let c = cov((5.0, 15.0, 2), (-5.0, 5.0, 2), (0.0, 0.0, 1));
        let cands = build_candidate_grid(&ma((-2.0, 2.0), (3.0, 3.0), 4, 1)).unwrap();
        let t = compute_los_visibility(&cands, &c, &[], 20, 1).unwrap();
        assert_eq!(t.count_visible(), 4 * 4);
    }

    #[test]
    fn full_slab_blocks_everything() {
        let c = cov((5.0, 15.0, 2), (-5.0, 5.0, 2), (0.0, 2.0, 1));
        let cands = build_candidate_grid(&ma((-2.0, 2.0), (3.0, 3.0), 4, 1)).unwrap();
        let wall = Aabb::new([2.5, 0.0, 0.0], [1.0, 1000.0, 1000.0]);
        let t = compute_los_visibility(&cands, &c, &[wall], 20, 1).unwrap();
        assert_eq!(t.count_visible(), 0);
    }

    #[test]
    fn visibility_is_reproducible() {
        let c = cov((5.0, 15.0, 3), (-10.0, 10.0, 4), (0.0, 0.0, 1));
        let cands = build_candidate_grid(&ma((-10.0, 10.0), (3.0, 3.0), 20, 1)).unwrap();
        let o = Aabb::new([3.0, 0.0, 1.0], [1.0, 4.0, 2.0]);
        let a = compute_los_visibility(&cands, &c, &[o], 20, 99).unwrap();
        let b = compute_los_visibility(&cands, &c, &[o], 20, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.count_visible() > 0 && a.count_visible() < 12 * 20);
    }
}
