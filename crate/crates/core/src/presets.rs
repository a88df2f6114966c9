//! Ready-made scenarios.
//!
//! `desk-*` presets are small enough for tests and CI. `large-*` presets use
//! the full-size regions (up to 3030 candidates and 1890 grids) and take
//! noticeably longer.

use crate::channel::SubarrayGeometry;
use crate::geom::Aabb;
use crate::rate::DEFAULT_KERNEL_BUDGET;
use crate::scenario::{
    CoverageSpec, DistributionSpec, MaRegionSpec, Obstacle, RicianFactor, ScenarioConfig,
    DEFAULT_VISIBILITY_SAMPLES,
};
use crate::{db_to_linear, Error, Result};

pub const CARRIER_FREQ: f64 = 30e9;
pub const TX_POWER_DBM: f64 = 5.0;
pub const NOISE_POWER_DBM: f64 = -80.0;
pub const DEFAULT_SEED: u64 = 2024;

pub const NAMES: [&str; 10] = [
    "desk-full-los",
    "desk-partial-los",
    "desk-3d-type1",
    "desk-3d-type2",
    "desk-3d-type3",
    "large-full-los",
    "large-partial-los",
    "large-3d-type1",
    "large-3d-type2",
    "large-3d-type3",
];

pub fn by_name(name: &str) -> Result<ScenarioConfig> {
    match name {
        "desk-full-los" => Ok(desk_full_los(4)),
        "desk-partial-los" => Ok(desk_partial_los(4)),
        "desk-3d-type1" => Ok(desk_3d(1)),
        "desk-3d-type2" => Ok(desk_3d(2)),
        "desk-3d-type3" => Ok(desk_3d(3)),
        "large-full-los" => Ok(large_full_los()),
        "large-partial-los" => Ok(large_partial_los()),
        "large-3d-type1" => Ok(large_3d(1)),
        "large-3d-type2" => Ok(large_3d(2)),
        "large-3d-type3" => Ok(large_3d(3)),
        _ => Err(Error::config(
            "preset",
            format!("unknown preset `{name}`; available: {}", NAMES.join(", ")),
        )),
    }
}

/// The two blocking boxes between the placement plane and the users.
pub fn two_boxes() -> Vec<Obstacle> {
    vec![
        Aabb::new([5.0, -20.0, 9.0], [5.0, 10.0, 18.0]),
        Aabb::new([5.0, 20.0, 9.0], [5.0, 10.0, 18.0]),
    ]
}

fn base(
    m_h: usize,
    m_v: usize,
    n: usize,
    rician: RicianFactor,
    ma_region: MaRegionSpec,
    coverage: CoverageSpec,
    distribution: DistributionSpec,
) -> ScenarioConfig {
    let lambda = crate::SPEED_OF_LIGHT / CARRIER_FREQ;
    ScenarioConfig {
        carrier_freq: CARRIER_FREQ,
        subarray: SubarrayGeometry::half_wave(m_h, m_v, lambda),
        n_subarrays: n,
        tx_power_mw: vec![db_to_linear(TX_POWER_DBM)],
        noise_power_mw: db_to_linear(NOISE_POWER_DBM),
        rician,
        rng_seed: DEFAULT_SEED,
        ma_region,
        coverage,
        obstacles: Vec::new(),
        distribution,
        visibility_samples: DEFAULT_VISIBILITY_SAMPLES,
        kernel_budget: DEFAULT_KERNEL_BUDGET,
    }
}

/// 1D placement line over a 5 × 10 user floor, every grid possibly active.
pub fn desk_full_los(m_h: usize) -> ScenarioConfig {
    base(
        m_h,
        1,
        4,
        RicianFactor::PureLos,
        MaRegionSpec {
            y_min: -50.0,
            y_max: 50.0,
            z_min: 20.5,
            z_max: 20.5,
            n_y: 100,
            n_z: 1,
        },
        CoverageSpec {
            x_min: 7.5,
            x_max: 52.5,
            y_min: -52.5,
            y_max: 52.5,
            z_min: 0.0,
            z_max: 0.0,
            k_x: 5,
            k_y: 10,
            k_z: 1,
        },
        DistributionSpec::Hotspots {
            expected_users: 5.0,
            regular_ratio: 0.5,
            hotspots_1: vec![12, 23, 34],
            hotspots_2: vec![7, 28, 45],
        },
    )
}

pub fn desk_partial_los(m_h: usize) -> ScenarioConfig {
    let mut c = desk_full_los(m_h);
    c.obstacles = two_boxes();
    c
}

/// 2D placement region, 3D user volume, 4 × 4 subarrays, κ = 20 dB.
pub fn desk_3d(type_id: u8) -> ScenarioConfig {
    let mut c = base(
        4,
        4,
        8,
        RicianFactor::from_db(20.0),
        MaRegionSpec {
            y_min: -20.0,
            y_max: 20.0,
            z_min: 20.0,
            z_max: 50.0,
            n_y: 20,
            n_z: 10,
        },
        CoverageSpec {
            x_min: 7.5,
            x_max: 22.5,
            y_min: -30.0,
            y_max: 30.0,
            z_min: 0.0,
            z_max: 30.0,
            k_x: 3,
            k_y: 12,
            k_z: 6,
        },
        DistributionSpec::HotspotType {
            type_id,
            expected_users: 10.0,
            regular_ratio: 0.0,
        },
    );
    c.obstacles = two_boxes();
    c
}

fn large_line() -> MaRegionSpec {
    MaRegionSpec {
        y_min: -50.5,
        y_max: 50.5,
        z_min: 20.5,
        z_max: 20.5,
        n_y: 101,
        n_z: 1,
    }
}

fn large_floor() -> CoverageSpec {
    CoverageSpec {
        x_min: 7.5,
        x_max: 52.5,
        y_min: -52.5,
        y_max: 52.5,
        z_min: 0.0,
        z_max: 0.0,
        k_x: 9,
        k_y: 21,
        k_z: 1,
    }
}

/// 101 candidates on a line, 189 floor grids, 8 subarrays of 8 × 1.
pub fn large_full_los() -> ScenarioConfig {
    base(
        8,
        1,
        8,
        RicianFactor::PureLos,
        large_line(),
        large_floor(),
        DistributionSpec::Hotspots {
            expected_users: 10.0,
            regular_ratio: 0.0,
            hotspots_1: vec![93, 99, 154, 163, 172, 185],
            hotspots_2: vec![1, 9, 10, 25, 28, 40],
        },
    )
}

pub fn large_partial_los() -> ScenarioConfig {
    let mut c = large_full_los();
    c.obstacles = two_boxes();
    c
}

/// 101 × 30 candidates, 9 × 21 × 10 grids, 8 subarrays of 4 × 4.
pub fn large_3d(type_id: u8) -> ScenarioConfig {
    let mut c = base(
        4,
        4,
        8,
        RicianFactor::from_db(20.0),
        MaRegionSpec {
            y_min: -50.5,
            y_max: 50.5,
            z_min: 20.0,
            z_max: 50.0,
            n_y: 101,
            n_z: 30,
        },
        CoverageSpec {
            z_max: 50.0,
            k_z: 10,
            ..large_floor()
        },
        DistributionSpec::HotspotType {
            type_id,
            expected_users: 10.0,
            regular_ratio: 0.0,
        },
    );
    c.obstacles = two_boxes();
    c
}
