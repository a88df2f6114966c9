//! Closed-form approximation of the expected SINR and rate under MRC.
//!
//! The expected rate of grid `k` is approximated by `log₂(1 + γ̃_k)` where
//!
//! ```text
//! γ̃_k = P̄_k (M²(Σ β̄_kn)² + Σ β̄_kn² f_kn)
//!       / Σ_n (Σ_{i≠k} P̄_i ρ_i β̄_kn β̄_in (φ_kin g_kin + q_kin) + M β̄_kn)
//! ```
//!
//! with sums over the selected positions. All kernels are written in terms of
//! the LoS fraction `t = κ̄ξ / (κ̄ξ + 1)` of each link, which keeps the pure-LoS
//! limit exact: `f = M(1 − t_k²)`, `g = t_k t_i`, `q = M(1 − t_k t_i)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::channel::{ArrayLayout, GainTables, SubarrayGeometry};
use crate::geom::Vec3;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Below this `|sin|`, a Fejér factor takes its limit `M'²`.
pub const FEJER_TOL: f64 = 1e-9;

/// Default cap on cached correlation-kernel entries.
pub const DEFAULT_KERNEL_BUDGET: usize = 200_000_000;

fn fejer_axis(m: usize, d: f64, wavelength: f64, du: f64) -> f64 {
    let m2 = (m * m) as f64;
    let x = PI * d / wavelength * du;
    let s = x.sin();
    if s.abs() < FEJER_TOL {
        return m2;
    }
    ((m as f64 * x).sin() / s).powi(2).min(m2)
}

/// `|a(u_k)ᴴ a(u_i)|²` for a UPA: the product of one Fejér kernel per axis.
pub fn fejer_correlation(u_k: Vec3, u_i: Vec3, g: &SubarrayGeometry, wavelength: f64) -> f64 {
    fejer_axis(g.m_v, g.d_v, wavelength, u_k[2] - u_i[2])
        * fejer_axis(g.m_h, g.d_h, wavelength, u_k[1] - u_i[1])
}

/// LoS fraction of a link, `κ̄ξ / (κ̄ξ + 1)`. A link with no scattered
/// component (`β_NLoS = 0`) is pure LoS when visible.
pub fn los_fraction(beta_los: f64, beta_nlos: f64, xi: bool) -> f64 {
    if !xi {
        0.0
    } else if beta_nlos == 0.0 {
        1.0
    } else {
        beta_los / (beta_los + beta_nlos)
    }
}

/// Auxiliary moment kernels of one position for the pair `(k, i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxKernels {
    /// Fourth-moment excess of grid `k`, in `[0, M]`.
    pub f: f64,
    /// LoS-LoS weight of the correlation kernel, in `[0, 1]`.
    pub g: f64,
    /// Scattering part of the cross moment, in `[0, 2M]` (at most `M` here).
    pub q: f64,
}

/// Kernels from the antenna count and the two LoS fractions.
pub fn aux_kernels(m: f64, t_k: f64, t_i: f64) -> AuxKernels {
    AuxKernels {
        f: m * (1.0 - t_k * t_k),
        g: t_k * t_i,
        q: m * (1.0 - t_k * t_i),
    }
}

/// Same, from raw link parameters; `κ̄ = β_LoS / β_NLoS`.
pub fn aux_kernels_from_gains(
    m: f64,
    (los_k, nlos_k, xi_k): (f64, f64, bool),
    (los_i, nlos_i, xi_i): (f64, f64, bool),
) -> AuxKernels {
    aux_kernels(m, los_fraction(los_k, nlos_k, xi_k), los_fraction(los_i, nlos_i, xi_i))
}

/// Support indicator of length `n0`.
pub fn chi_from_support(n0: usize, support: &[usize]) -> Vec<bool> {
    let mut chi = vec![false; n0];
    for &n in support {
        chi[n] = true;
    }
    chi
}

pub fn support_from_chi(chi: &[bool]) -> Vec<usize> {
    (0..chi.len()).filter(|&n| chi[n]).collect()
}

/// Correlation kernels `φ[k][i][n]` over a set of tracked grids.
///
/// The table is cached when it fits the entry budget and evaluated on demand
/// otherwise.
#[derive(Debug, Clone)]
pub struct KernelTables {
    tracked: Vec<usize>,
    slot: Vec<Option<usize>>,
    n_positions: usize,
    geometry: Vec<SubarrayGeometry>,
    wavelength: f64,
    /// Wave vectors of tracked grids, `slot × P`.
    u: Vec<Vec3>,
    /// LoS fractions of tracked grids, `slot × P`.
    t: Vec<f64>,
    phi: Option<Vec<f64>>,
}

impl KernelTables {
    pub fn new(
        gains: &GainTables,
        geometry: &[SubarrayGeometry],
        wavelength: f64,
        tracked: &[usize],
        budget: usize,
    ) -> Result<Self> {
        let p = gains.n_positions();
        if geometry.len() != p {
            return Err(Error::domain("one subarray geometry per position is required"));
        }
        let mut slot = vec![None; gains.n_grids()];
        for (a, &k) in tracked.iter().enumerate() {
            slot[k] = Some(a);
        }
        let mut u = Vec::with_capacity(tracked.len() * p);
        let mut t = Vec::with_capacity(tracked.len() * p);
        for &k in tracked {
            for n in 0..p {
                u.push(gains.u[gains.idx(k, n)]);
                t.push(gains.los_fraction(k, n));
            }
        }
        let mut tables = Self {
            tracked: tracked.to_vec(),
            slot,
            n_positions: p,
            geometry: geometry.to_vec(),
            wavelength,
            u,
            t,
            phi: None,
        };
        let ka = tracked.len();
        let entries = ka.saturating_mul(ka).saturating_mul(p);
        if entries <= budget {
            let rows: Vec<Vec<f64>> = (0..ka)
                .into_par_iter()
                .map(|a| {
                    let mut row = Vec::with_capacity(ka * p);
                    for b in 0..ka {
                        for n in 0..p {
                            row.push(tables.compute_phi(a, b, n));
                        }
                    }
                    row
                })
                .collect();
            tables.phi = Some(rows.into_iter().flatten().collect());
        } else {
            log::info!(
                "correlation kernels: {entries} entries exceed the budget of {budget}; evaluating on demand"
            );
        }
        Ok(tables)
    }

    fn compute_phi(&self, a: usize, b: usize, n: usize) -> f64 {
        let p = self.n_positions;
        if a == b {
            let m = self.geometry[n].m() as f64;
            return m * m;
        }
        fejer_correlation(self.u[a * p + n], self.u[b * p + n], &self.geometry[n], self.wavelength)
    }

    pub fn is_cached(&self) -> bool {
        self.phi.is_some()
    }

    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    pub fn slot(&self, k: usize) -> Option<usize> {
        self.slot[k]
    }

    /// Number of antennas at position `n`.
    pub fn m(&self, n: usize) -> f64 {
        self.geometry[n].m() as f64
    }

    /// `φ` by tracked slot.
    #[inline]
    pub fn phi_slot(&self, a: usize, b: usize, n: usize) -> f64 {
        match &self.phi {
            Some(v) => {
                let ka = self.tracked.len();
                v[(a * ka + b) * self.n_positions + n]
            }
            None => self.compute_phi(a, b, n),
        }
    }

    #[inline]
    pub fn t_slot(&self, a: usize, n: usize) -> f64 {
        self.t[a * self.n_positions + n]
    }

    fn slot_of(&self, k: usize) -> usize {
        self.slot[k].unwrap_or_else(|| panic!("grid {k} is not tracked by the kernel tables"))
    }

    /// `φ[k][i][n]` for tracked grids `k`, `i`.
    pub fn phi(&self, k: usize, i: usize, n: usize) -> f64 {
        self.phi_slot(self.slot_of(k), self.slot_of(i), n)
    }

    pub fn aux(&self, k: usize, i: usize, n: usize) -> AuxKernels {
        let (a, b) = (self.slot_of(k), self.slot_of(i));
        aux_kernels(self.m(n), self.t_slot(a, n), self.t_slot(b, n))
    }

    /// Scales every cached `φ` entry; used to check that the moment tests
    /// detect a wrong kernel.
    pub fn corrupt(&mut self, factor: f64) {
        if self.phi.is_none() {
            let ka = self.tracked.len();
            let mut v = Vec::with_capacity(ka * ka * self.n_positions);
            for a in 0..ka {
                for b in 0..ka {
                    for n in 0..self.n_positions {
                        v.push(self.compute_phi(a, b, n));
                    }
                }
            }
            self.phi = Some(v);
        }
        if let Some(v) = &mut self.phi {
            v.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

/// Per-position contributions of one grid: signal `M β̄`, fourth-moment
/// excess `β̄² f`, and interference-plus-noise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Terms {
    pub signal: f64,
    pub fourth: f64,
    pub interference: f64,
}

impl std::ops::AddAssign for Terms {
    fn add_assign(&mut self, o: Self) {
        self.signal += o.signal;
        self.fourth += o.fourth;
        self.interference += o.interference;
    }
}

impl std::ops::SubAssign for Terms {
    fn sub_assign(&mut self, o: Self) {
        self.signal -= o.signal;
        self.fourth -= o.fourth;
        self.interference -= o.interference;
    }
}

impl Terms {
    /// `γ̃` from summed terms; zero when the grid has no gain on the support.
    pub fn sinr(&self, snr: f64) -> f64 {
        if self.interference <= 0.0 || self.signal <= 0.0 {
            return 0.0;
        }
        snr * (self.signal * self.signal + self.fourth) / self.interference
    }

    pub fn rate(&self, snr: f64) -> f64 {
        self.sinr(snr).ln_1p() / std::f64::consts::LN_2
    }
}

/// The closed-form rate model over a fixed set of positions.
///
/// Only grids with positive activation probability take part; their
/// per-position terms are tabulated once so a placement is evaluated in
/// `O(K_active · |support|)`.
#[derive(Debug, Clone)]
pub struct RateModel {
    gains: GainTables,
    kernels: KernelTables,
    snr: Vec<f64>,
    rho: Vec<f64>,
    active: Vec<usize>,
    /// `slot × P`.
    terms: Vec<Terms>,
}

impl RateModel {
    pub fn new(
        gains: GainTables,
        geometry: &[SubarrayGeometry],
        wavelength: f64,
        snr: &[f64],
        rho: &[f64],
        budget: usize,
    ) -> Result<Self> {
        let k_n = gains.n_grids();
        if snr.len() != k_n || rho.len() != k_n {
            return Err(Error::domain("power and probability vectors must have length K"));
        }
        let active: Vec<usize> = (0..k_n).filter(|&k| rho[k] > 0.0).collect();
        let kernels = KernelTables::new(&gains, geometry, wavelength, &active, budget)?;
        let mut model = Self {
            gains,
            kernels,
            snr: snr.to_vec(),
            rho: rho.to_vec(),
            active,
            terms: Vec::new(),
        };
        let p = model.n_positions();
        let rows: Vec<Vec<Terms>> = (0..model.active.len())
            .into_par_iter()
            .map(|a| (0..p).map(|n| model.compute_terms(a, n)).collect())
            .collect();
        model.terms = rows.into_iter().flatten().collect();
        Ok(model)
    }

    /// Model over all candidate positions of a scenario.
    pub fn for_candidates(scenario: &Scenario) -> Result<Self> {
        let gains = GainTables::for_candidates(scenario)?;
        let geometry = vec![scenario.config.subarray; scenario.n0()];
        Self::new(
            gains,
            &geometry,
            scenario.wavelength(),
            &scenario.snr(),
            scenario.rho(),
            scenario.config.kernel_budget,
        )
    }

    /// Model over the subarrays of a fixed layout; the support of interest is
    /// then every position, see [`RateModel::all_positions`].
    pub fn for_layout(scenario: &Scenario, layout: &ArrayLayout) -> Result<Self> {
        let gains = GainTables::for_layout(scenario, layout)?;
        let geometry: Vec<SubarrayGeometry> = layout.subarrays.iter().map(|s| s.geometry).collect();
        Self::new(
            gains,
            &geometry,
            scenario.wavelength(),
            &scenario.snr(),
            scenario.rho(),
            scenario.config.kernel_budget,
        )
    }

    fn compute_terms(&self, a: usize, n: usize) -> Terms {
        let k = self.active[a];
        let bk = self.gains.beta_total[self.gains.idx(k, n)];
        let m = self.kernels.m(n);
        let tk = self.kernels.t_slot(a, n);
        let mut interference = m * bk;
        if bk > 0.0 {
            for (b, &i) in self.active.iter().enumerate() {
                if b == a {
                    continue;
                }
                let bi = self.gains.beta_total[self.gains.idx(i, n)];
                if bi == 0.0 {
                    continue;
                }
                let aux = aux_kernels(m, tk, self.kernels.t_slot(b, n));
                let phi = self.kernels.phi_slot(a, b, n);
                interference += self.snr[i] * self.rho[i] * bk * bi * (phi * aux.g + aux.q);
            }
        }
        Terms {
            signal: m * bk,
            fourth: bk * bk * m * (1.0 - tk * tk),
            interference,
        }
    }

    pub fn gains(&self) -> &GainTables {
        &self.gains
    }

    pub fn kernels(&self) -> &KernelTables {
        &self.kernels
    }

    pub fn kernels_mut(&mut self) -> &mut KernelTables {
        &mut self.kernels
    }

    pub fn n_positions(&self) -> usize {
        self.gains.n_positions()
    }

    pub fn n_grids(&self) -> usize {
        self.gains.n_grids()
    }

    /// Grids with positive activation probability, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn snr(&self) -> &[f64] {
        &self.snr
    }

    pub fn all_positions(&self) -> Vec<usize> {
        (0..self.n_positions()).collect()
    }

    /// Tabulated terms by active slot.
    #[inline]
    pub fn terms_slot(&self, a: usize, n: usize) -> Terms {
        self.terms[a * self.n_positions() + n]
    }

    /// Terms of any grid; grids with zero probability are evaluated directly
    /// against the active interferers.
    pub fn terms(&self, k: usize, n: usize) -> Terms {
        if let Some(a) = self.kernels.slot(k) {
            return self.terms_slot(a, n);
        }
        let bk = self.gains.beta_total[self.gains.idx(k, n)];
        let m = self.kernels.m(n);
        let tk = self.gains.los_fraction(k, n);
        let uk = self.gains.u[self.gains.idx(k, n)];
        let mut interference = m * bk;
        for (b, &i) in self.active.iter().enumerate() {
            let bi = self.gains.beta_total[self.gains.idx(i, n)];
            if bk == 0.0 || bi == 0.0 {
                continue;
            }
            let aux = aux_kernels(m, tk, self.kernels.t_slot(b, n));
            let phi = fejer_correlation(
                uk,
                self.gains.u[self.gains.idx(i, n)],
                &self.kernels.geometry[n],
                self.kernels.wavelength,
            );
            interference += self.snr[i] * self.rho[i] * bk * bi * (phi * aux.g + aux.q);
        }
        Terms {
            signal: m * bk,
            fourth: bk * bk * m * (1.0 - tk * tk),
            interference,
        }
    }

    fn check_support(&self, support: &[usize]) -> Result<()> {
        if support.is_empty() {
            return Err(Error::domain("placement selects no position"));
        }
        if let Some(&n) = support.iter().find(|&&n| n >= self.n_positions()) {
            return Err(Error::domain(format!("position index {n} out of range")));
        }
        Ok(())
    }

    pub fn summed_terms(&self, k: usize, support: &[usize]) -> Terms {
        let mut s = Terms::default();
        for &n in support {
            s += self.terms(k, n);
        }
        s
    }

    pub fn sinr(&self, k: usize, support: &[usize]) -> Result<f64> {
        self.check_support(support)?;
        Ok(self.summed_terms(k, support).sinr(self.snr[k]))
    }

    pub fn rate(&self, k: usize, support: &[usize]) -> Result<f64> {
        self.check_support(support)?;
        Ok(self.summed_terms(k, support).rate(self.snr[k]))
    }

    /// `Σ_k ρ_k R̃_k` over grids with `ρ_k > 0`.
    pub fn weighted_sum_rate(&self, support: &[usize]) -> Result<f64> {
        self.check_support(support)?;
        Ok(self.objective_unchecked(support))
    }

    pub(crate) fn objective_unchecked(&self, support: &[usize]) -> f64 {
        self.active
            .iter()
            .enumerate()
            .map(|(a, &k)| {
                let mut s = Terms::default();
                for &n in support {
                    s += self.terms_slot(a, n);
                }
                self.rho[k] * s.rate(self.snr[k])
            })
            .sum()
    }

    /// Weighted sum from per-slot summed terms.
    pub fn objective_from_sums(&self, sums: &[Terms]) -> f64 {
        self.active
            .iter()
            .zip(sums)
            .map(|(&k, s)| self.rho[k] * s.rate(self.snr[k]))
            .sum()
    }

    /// Rate of grid `k` with a single selected position.
    pub fn marginal_rate(&self, n: usize, k: usize) -> f64 {
        self.terms(k, n).rate(self.snr[k])
    }

    /// Interference-free bound `log₂(1 + P̄_k Σ M β̄_kn)`.
    pub fn upper_bound_rate(&self, k: usize, support: &[usize]) -> Result<f64> {
        self.check_support(support)?;
        let s: f64 = support
            .iter()
            .map(|&n| self.kernels.m(n) * self.gains.beta_total[self.gains.idx(k, n)])
            .sum();
        Ok((self.snr[k] * s).ln_1p() / std::f64::consts::LN_2)
    }

    pub fn weighted_upper_bound(&self, support: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &k in &self.active {
            total += self.rho[k] * self.upper_bound_rate(k, support)?;
        }
        Ok(total)
    }

    /// `E‖h_k‖² = Σ M β̄_kn`.
    pub fn second_moment(&self, k: usize, support: &[usize]) -> f64 {
        support
            .iter()
            .map(|&n| self.kernels.m(n) * self.gains.beta_total[self.gains.idx(k, n)])
            .sum()
    }

    /// `E‖h_k‖⁴ = (Σ M β̄_kn)² + Σ β̄_kn² f_kn`; `k` must be active.
    pub fn fourth_moment(&self, k: usize, support: &[usize]) -> f64 {
        let s = self.second_moment(k, support);
        let excess: f64 = support
            .iter()
            .map(|&n| {
                let b = self.gains.beta_total[self.gains.idx(k, n)];
                b * b * self.kernels.aux(k, k, n).f
            })
            .sum();
        s * s + excess
    }

    /// `E|h_kᴴ h_i|² = Σ β̄_kn β̄_in (φ g + q)` for distinct active grids.
    pub fn cross_moment(&self, k: usize, i: usize, support: &[usize]) -> f64 {
        support
            .iter()
            .map(|&n| {
                let bk = self.gains.beta_total[self.gains.idx(k, n)];
                let bi = self.gains.beta_total[self.gains.idx(i, n)];
                let aux = self.kernels.aux(k, i, n);
                bk * bi * (self.kernels.phi(k, i, n) * aux.g + aux.q)
            })
            .sum()
    }
}
