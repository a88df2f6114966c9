//! Expected channel power and normalized channel correlation over a
//! horizontal cut through the coverage region.
//!
//! Visibility at a map point is decided exactly: the segment from each
//! subarray center to the point is tested against every obstacle.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{los_path_gain, steering_vector, wave_vector, ArrayLayout};
use crate::geom::{self, Vec3};
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Placeholder LoS gain for blocked cells, −65 dBm read as a power in watts
/// relative to 1 W (−95 dB).
pub const DEFAULT_BLOCKED_PLACEHOLDER_GAIN: f64 = 3.162_277_660_168_379_5e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRequest {
    /// Points per axis, endpoints included.
    pub resolution: usize,
    /// Height of the cut; defaults to the middle of the coverage region.
    #[serde(default)]
    pub z: Option<f64>,
    /// Reference point of correlation maps.
    #[serde(default)]
    pub probe: Option<Vec3>,
    /// Stand-in for the LoS gain of blocked links, power maps only.
    #[serde(default = "default_placeholder")]
    pub blocked_placeholder_gain: f64,
}

fn default_placeholder() -> f64 {
    DEFAULT_BLOCKED_PLACEHOLDER_GAIN
}

impl MapRequest {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            z: None,
            probe: None,
            blocked_placeholder_gain: DEFAULT_BLOCKED_PLACEHOLDER_GAIN,
        }
    }
}

/// Values on an `x × y` lattice; `values[j][i]` belongs to `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub z: f64,
    pub values: Vec<Vec<f64>>,
}

impl MapGrid {
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> MapGrid {
        MapGrid {
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            z: self.z,
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    /// Header row of x coordinates, then one row per y.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "y\\x")?;
        for x in &self.xs {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
        for (y, row) in self.ys.iter().zip(&self.values) {
            write!(w, "{y}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Value at the lattice point nearest to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> f64 {
        let near = |v: &[f64], t: f64| {
            (0..v.len())
                .min_by(|&a, &b| (v[a] - t).abs().total_cmp(&(v[b] - t).abs()))
                .unwrap_or(0)
        };
        self.values[near(&self.ys, y)][near(&self.xs, x)]
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn lattice(scenario: &Scenario, req: &MapRequest) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if req.resolution < 2 {
        return Err(Error::config("map.resolution", "must be at least 2"));
    }
    let c = &scenario.config.coverage;
    let z = req.z.unwrap_or(0.5 * (c.z_min + c.z_max));
    if z < c.z_min || z > c.z_max {
        return Err(Error::config("map.z", format!("height {z} lies outside the coverage region")));
    }
    Ok((
        linspace(c.x_min, c.x_max, req.resolution),
        linspace(c.y_min, c.y_max, req.resolution),
        z,
    ))
}

fn los_visible(scenario: &Scenario, from: Vec3, to: Vec3) -> bool {
    scenario
        .config
        .obstacles
        .iter()
        .all(|o| !o.intersects_segment(from, to))
}

fn fill(xs: &[f64], ys: &[f64], z: f64, f: impl Fn(Vec3) -> Result<f64> + Sync) -> Result<Vec<Vec<f64>>> {
    ys.par_iter()
        .map(|&y| xs.iter().map(|&x| f([x, y, z])).collect::<Result<Vec<f64>>>())
        .collect()
}

/// Expected channel power `Σ_n M_n β̄_n` at each lattice point.
pub fn power_gain_map(scenario: &Scenario, layout: &ArrayLayout, req: &MapRequest) -> Result<MapGrid> {
    let (xs, ys, z) = lattice(scenario, req)?;
    let lambda = scenario.wavelength();
    let rician = scenario.config.rician;
    let values = fill(&xs, &ys, z, |p| {
        let mut total = 0.0;
        for s in &layout.subarrays {
            let los = los_path_gain(geom::distance(p, s.center), lambda)?;
            let visible_part = if los_visible(scenario, s.center, p) {
                los
            } else {
                req.blocked_placeholder_gain
            };
            total += s.geometry.m() as f64 * (visible_part + rician.nlos_gain(los));
        }
        Ok(total)
    })?;
    Ok(MapGrid { xs, ys, z, values })
}

/// Unit-norm stacked LoS channel at `p` (zero phase offsets), or `None` when
/// every subarray is blocked.
fn normalized_los_channel(scenario: &Scenario, layout: &ArrayLayout, p: Vec3) -> Result<Option<Vec<Complex64>>> {
    let lambda = scenario.wavelength();
    let mut h = Vec::with_capacity(layout.total_antennas());
    for s in &layout.subarrays {
        let m = s.geometry.m();
        if !los_visible(scenario, s.center, p) {
            h.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), m));
            continue;
        }
        let amp = los_path_gain(geom::distance(p, s.center), lambda)?.sqrt();
        let u = wave_vector(p, s.center)?;
        h.extend(steering_vector(u, &s.geometry, lambda).into_iter().map(|a| a * amp));
    }
    let norm: f64 = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(None);
    }
    h.iter_mut().for_each(|x| *x /= norm);
    Ok(Some(h))
}

/// `|ĥ(p)ᴴ ĥ(p₀)|²` against the probe `p₀`, in `[0, 1]`.
pub fn correlation_map(scenario: &Scenario, layout: &ArrayLayout, req: &MapRequest) -> Result<MapGrid> {
    let probe = req
        .probe
        .ok_or_else(|| Error::config("map.probe", "a correlation map needs a probe point"))?;
    if !scenario.config.coverage.contains(probe) {
        return Err(Error::config("map.probe", "probe lies outside the coverage region"));
    }
    let (xs, ys, z) = lattice(scenario, req)?;
    let h0 = normalized_los_channel(scenario, layout, probe)?
        .ok_or_else(|| Error::domain("every subarray is blocked from the probe point"))?;
    let values = fill(&xs, &ys, z, |p| {
        Ok(match normalized_los_channel(scenario, layout, p)? {
            Some(h) => {
                let ip: Complex64 = h.iter().zip(&h0).map(|(a, b)| a.conj() * b).sum();
                ip.norm_sqr().min(1.0)
            }
            None => 0.0,
        })
    })?;
    Ok(MapGrid { xs, ys, z, values })
}
