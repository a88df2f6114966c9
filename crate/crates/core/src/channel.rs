//! Wave vectors, subarray steering vectors, large-scale gains and random
//! channel draws.
//!
//! Each subarray sees a planar wavefront (one wave vector per subarray and
//! grid), while different subarrays see different directions, distances and
//! blockage states.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{self, Vec3};
use crate::rng::StreamRng;
use crate::scenario::{RicianFactor, Scenario, VisibilityTable};
use crate::{Error, Result};

/// Geometry of one uniform planar subarray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubarrayGeometry {
    /// Elements along y.
    pub m_h: usize,
    /// Elements along z.
    pub m_v: usize,
    pub d_h: f64,
    pub d_v: f64,
}

impl SubarrayGeometry {
    /// `m_h × m_v` subarray at half-wavelength spacing.
    pub fn half_wave(m_h: usize, m_v: usize, wavelength: f64) -> Self {
        Self {
            m_h,
            m_v,
            d_h: wavelength / 2.0,
            d_v: wavelength / 2.0,
        }
    }

    pub fn m(&self) -> usize {
        self.m_h * self.m_v
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_h == 0 || self.m_v == 0 {
            return Err(Error::config("subarray", "element counts must be positive"));
        }
        if !(self.d_h > 0.0 && self.d_v > 0.0) {
            return Err(Error::config("subarray", "element spacings must be positive"));
        }
        Ok(())
    }

    /// Element offsets from the subarray center, in steering-vector order.
    pub fn element_offsets(&self) -> Vec<Vec3> {
        let ch = (self.m_h as f64 - 1.0) / 2.0;
        let cv = (self.m_v as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.m());
        for v in 0..self.m_v {
            for h in 0..self.m_h {
                out.push([
                    0.0,
                    (h as f64 - ch) * self.d_h,
                    (v as f64 - cv) * self.d_v,
                ]);
            }
        }
        out
    }
}

/// One subarray of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subarray {
    pub center: Vec3,
    #[serde(flatten)]
    pub geometry: SubarrayGeometry,
}

/// A set of subarrays, either a movable placement or a fixed baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub subarrays: Vec<Subarray>,
}

impl ArrayLayout {
    pub fn new(subarrays: Vec<Subarray>) -> Result<Self> {
        if subarrays.is_empty() {
            return Err(Error::config("layout", "a layout needs at least one subarray"));
        }
        for s in &subarrays {
            s.geometry.validate()?;
        }
        Ok(Self { subarrays })
    }

    /// Identical subarrays at the given centers.
    pub fn uniform(centers: &[Vec3], geometry: SubarrayGeometry) -> Result<Self> {
        Self::new(
            centers
                .iter()
                .map(|&center| Subarray { center, geometry })
                .collect(),
        )
    }

    /// Subarrays of the scenario geometry at the given candidate indices.
    pub fn from_candidates(scenario: &Scenario, support: &[usize]) -> Result<Self> {
        let centers: Vec<Vec3> = support
            .iter()
            .map(|&n| {
                scenario
                    .candidates
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::domain(format!("candidate index {n} out of range")))
            })
            .collect::<Result<_>>()?;
        Self::uniform(&centers, scenario.config.subarray)
    }

    pub fn len(&self) -> usize {
        self.subarrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subarrays.is_empty()
    }

    pub fn total_antennas(&self) -> usize {
        self.subarrays.iter().map(|s| s.geometry.m()).sum()
    }

    /// Absolute positions of every element, subarray by subarray.
    pub fn element_positions(&self) -> Vec<Vec3> {
        self.subarrays
            .iter()
            .flat_map(|s| {
                s.geometry
                    .element_offsets()
                    .into_iter()
                    .map(move |o| [s.center[0] + o[0], s.center[1] + o[1], s.center[2] + o[2]])
            })
            .collect()
    }
}

/// Unit vector pointing from `r` towards `t`.
pub fn wave_vector(t: Vec3, r: Vec3) -> Result<Vec3> {
    let d = geom::sub(t, r);
    let n = geom::norm(d);
    if n == 0.0 {
        return Err(Error::domain("wave vector between coincident points"));
    }
    Ok([d[0] / n, d[1] / n, d[2] / n])
}

/// UPA response `a_V(u_z) ⊗ a_H(u_y)`; element `(h, v)` sits at index `v·m_h + h`.
pub fn steering_vector(u: Vec3, g: &SubarrayGeometry, wavelength: f64) -> Vec<Complex64> {
    let kh = -2.0 * PI / wavelength * g.d_h * u[1];
    let kv = -2.0 * PI / wavelength * g.d_v * u[2];
    let mut a = Vec::with_capacity(g.m());
    for v in 0..g.m_v {
        for h in 0..g.m_h {
            a.push(Complex64::from_polar(1.0, kv * v as f64 + kh * h as f64));
        }
    }
    a
}

/// Free-space gain `(λ / 4πd)²`.
pub fn los_path_gain(distance: f64, wavelength: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::domain(format!("path length must be positive, got {distance}")));
    }
    Ok((wavelength / (4.0 * PI * distance)).powi(2))
}

/// Large-scale quantities per (grid, position), row-major `K × P`.
///
/// Positions are either the scenario's candidates or the subarray centers of a
/// layout.
#[derive(Debug, Clone)]
pub struct GainTables {
    n_grids: usize,
    n_positions: usize,
    pub u: Vec<Vec3>,
    pub beta_los: Vec<f64>,
    pub beta_nlos: Vec<f64>,
    pub beta_total: Vec<f64>,
    pub xi: Vec<bool>,
    pub pure_los: bool,
}

impl GainTables {
    pub fn build(
        positions: &[Vec3],
        grids: &[Vec3],
        visibility: &VisibilityTable,
        wavelength: f64,
        rician: RicianFactor,
    ) -> Result<Self> {
        let (k_n, p_n) = (grids.len(), positions.len());
        if visibility.n_grids() != k_n || visibility.n_positions() != p_n {
            return Err(Error::domain("visibility table does not match the gain table shape"));
        }
        let rows: Vec<Vec<(Vec3, f64, f64, bool)>> = (0..k_n)
            .into_par_iter()
            .map(|k| {
                positions
                    .iter()
                    .enumerate()
                    .map(|(n, &r)| {
                        let u = wave_vector(grids[k], r).map_err(|_| {
                            Error::domain(format!(
                                "grid {} center coincides with position {}",
                                k + 1,
                                n + 1
                            ))
                        })?;
                        let los = los_path_gain(geom::distance(grids[k], r), wavelength)?;
                        Ok((u, los, rician.nlos_gain(los), visibility.get(k, n)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut t = Self {
            n_grids: k_n,
            n_positions: p_n,
            u: Vec::with_capacity(k_n * p_n),
            beta_los: Vec::with_capacity(k_n * p_n),
            beta_nlos: Vec::with_capacity(k_n * p_n),
            beta_total: Vec::with_capacity(k_n * p_n),
            xi: Vec::with_capacity(k_n * p_n),
            pure_los: matches!(rician, RicianFactor::PureLos),
        };
        for (u, los, nlos, xi) in rows.into_iter().flatten() {
            t.u.push(u);
            t.beta_los.push(los);
            t.beta_nlos.push(nlos);
            t.beta_total.push(if xi { los } else { 0.0 } + nlos);
            t.xi.push(xi);
        }
        Ok(t)
    }

    /// Tables over the scenario's candidate positions.
    pub fn for_candidates(scenario: &Scenario) -> Result<Self> {
        Self::build(
            &scenario.candidates,
            &scenario.grids,
            &scenario.visibility,
            scenario.wavelength(),
            scenario.config.rician,
        )
    }

    /// Tables over the subarray centers of an arbitrary layout; visibility is
    /// recomputed at each center with the scenario's sample points.
    pub fn for_layout(scenario: &Scenario, layout: &ArrayLayout) -> Result<Self> {
        let centers: Vec<Vec3> = layout.subarrays.iter().map(|s| s.center).collect();
        let vis = scenario.sampler.table(&centers);
        Self::build(
            &centers,
            &scenario.grids,
            &vis,
            scenario.wavelength(),
            scenario.config.rician,
        )
    }

    /// Restricts the tables to a subset of positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> GainTables {
        let pick = |v: &Vec<f64>| -> Vec<f64> {
            (0..self.n_grids)
                .flat_map(|k| positions.iter().map(move |&n| v[k * self.n_positions + n]))
                .collect()
        };
        GainTables {
            n_grids: self.n_grids,
            n_positions: positions.len(),
            u: (0..self.n_grids)
                .flat_map(|k| positions.iter().map(move |&n| self.u[k * self.n_positions + n]))
                .collect(),
            beta_los: pick(&self.beta_los),
            beta_nlos: pick(&self.beta_nlos),
            beta_total: pick(&self.beta_total),
            xi: (0..self.n_grids)
                .flat_map(|k| positions.iter().map(move |&n| self.xi[k * self.n_positions + n]))
                .collect(),
            pure_los: self.pure_los,
        }
    }

    /// Same geometry and visibility under another Rician factor.
    pub fn with_rician(&self, rician: RicianFactor) -> GainTables {
        let beta_nlos: Vec<f64> = self.beta_los.iter().map(|&l| rician.nlos_gain(l)).collect();
        let beta_total = (0..self.beta_los.len())
            .map(|i| if self.xi[i] { self.beta_los[i] } else { 0.0 } + beta_nlos[i])
            .collect();
        GainTables {
            beta_nlos,
            beta_total,
            pure_los: matches!(rician, RicianFactor::PureLos),
            ..self.clone()
        }
    }

    #[inline]
    pub fn idx(&self, k: usize, n: usize) -> usize {
        k * self.n_positions + n
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    /// Fraction of the expected gain carried by the LoS component, in `[0, 1]`.
    ///
    /// Equals `κ̄ξ / (κ̄ξ + 1)`, with the pure-LoS limit taken exactly.
    pub fn los_fraction(&self, k: usize, n: usize) -> f64 {
        let i = self.idx(k, n);
        if !self.xi[i] {
            0.0
        } else if self.pure_los || self.beta_nlos[i] == 0.0 {
            1.0
        } else {
            self.beta_los[i] / (self.beta_los[i] + self.beta_nlos[i])
        }
    }

    /// Writes `k, n, xi, beta_los, beta_nlos` rows with 1-based indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,n,xi,beta_los,beta_nlos")?;
        for k in 0..self.n_grids {
            for n in 0..self.n_positions {
                let i = self.idx(k, n);
                writeln!(
                    w,
                    "{},{},{},{:e},{:e}",
                    k + 1,
                    n + 1,
                    u8::from(self.xi[i]),
                    self.beta_los[i],
                    self.beta_nlos[i]
                )?;
            }
        }
        Ok(())
    }
}

/// Independent Bernoulli activations, one uniform draw per grid.
pub fn sample_activation(rho: &[f64], rng: &mut StreamRng) -> Vec<bool> {
    rho.iter()
        .map(|&r| {
            let u: f64 = rng.random();
            u < r
        })
        .collect()
}

/// One draw of the activation vector and the channels of the active grids.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub alpha: Vec<bool>,
    /// Active grids in ascending order.
    pub active: Vec<usize>,
    /// Stacked channel of each active grid, aligned with `active`.
    pub columns: Vec<Vec<Complex64>>,
}

/// Draws channels for a fixed layout.
///
/// Steering vectors are cached per (grid, subarray) for the grids that can
/// become active.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    gains: GainTables,
    sizes: Vec<usize>,
    steering: Vec<Option<Vec<Vec<Complex64>>>>,
}

impl ChannelSampler {
    /// `gains` must be the layout's own tables (see [`GainTables::for_layout`]).
    /// Only grids flagged in `eligible` can be sampled.
    pub fn new(
        layout: &ArrayLayout,
        gains: GainTables,
        wavelength: f64,
        eligible: &[bool],
    ) -> Result<Self> {
        if gains.n_positions() != layout.len() || eligible.len() != gains.n_grids() {
            return Err(Error::domain("channel sampler inputs do not conform"));
        }
        let steering = (0..gains.n_grids())
            .into_par_iter()
            .map(|k| {
                eligible[k].then(|| {
                    layout
                        .subarrays
                        .iter()
                        .enumerate()
                        .map(|(n, s)| steering_vector(gains.u[gains.idx(k, n)], &s.geometry, wavelength))
                        .collect()
                })
            })
            .collect();
        Ok(Self {
            sizes: layout.subarrays.iter().map(|s| s.geometry.m()).collect(),
            gains,
            steering,
        })
    }

    pub fn gains(&self) -> &GainTables {
        &self.gains
    }

    pub fn total_antennas(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Stacked channel of grid `k`: per subarray, a randomly phased LoS
    /// component plus i.i.d. complex Gaussian scattering.
    pub fn sample_column(&self, k: usize, rng: &mut StreamRng) -> Vec<Complex64> {
        let steer = self.steering[k]
            .as_ref()
            .expect("grid was not marked eligible for sampling");
        let mut h = Vec::with_capacity(self.total_antennas());
        for (n, a) in steer.iter().enumerate() {
            let i = self.gains.idx(k, n);
            let psi: f64 = rng.random::<f64>() * 2.0 * PI;
            let los = if self.gains.xi[i] {
                Complex64::from_polar(self.gains.beta_los[i].sqrt(), -psi)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let nlos = self.gains.beta_nlos[i];
            let s = (nlos / 2.0).sqrt();
            for &am in a {
                let mut v = los * am;
                if nlos > 0.0 {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    v += Complex64::new(s * re, s * im);
                }
                h.push(v);
            }
        }
        h
    }

    /// Draws activations, then the channels of active grids in ascending order.
    /// `force` marks a grid active regardless of its draw.
    pub fn sample(&self, rho: &[f64], force: Option<usize>, rng: &mut StreamRng) -> ChannelRealization {
        let mut alpha = sample_activation(rho, rng);
        if let Some(k) = force {
            alpha[k] = true;
        }
        let active: Vec<usize> = (0..alpha.len()).filter(|&k| alpha[k]).collect();
        let columns = active.iter().map(|&k| self.sample_column(k, rng)).collect();
        ChannelRealization {
            alpha,
            active,
            columns,
        }
    }
}
