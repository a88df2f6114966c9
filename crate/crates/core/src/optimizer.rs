//! Placement optimization: LP-relaxation start, successive replacement, and
//! an exhaustive-search oracle.
//!
//! Every objective evaluation goes through per-grid summed [`Terms`], so a
//! single swap costs `O(K_active)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lp::{self, Certificate, LinearProgram, Relation};
use crate::rate::{RateModel, Terms};
use crate::{Error, Result};

/// Smallest objective gain (bits/s/Hz) that counts as an improvement.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// Default cap on the number of subsets the exhaustive search visits.
pub const DEFAULT_EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// Relaxed placement problem: `max cᵀχ` s.t. one `≥ 1` row per covered grid,
/// `Σχ = N`, `0 ≤ χ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Grids whose visibility masks form the coverage rows.
    pub covered_grids: Vec<usize>,
    pub coverage_rows: Vec<Vec<bool>>,
    pub n_select: usize,
}

impl LpProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn program(&self) -> LinearProgram {
        let n0 = self.n_vars();
        let mut lp = LinearProgram::unit_box(self.objective.clone());
        for row in &self.coverage_rows {
            lp.add(row.iter().map(|&b| f64::from(u8::from(b))).collect(), Relation::Ge, 1.0);
        }
        lp.add(vec![1.0; n0], Relation::Eq, self.n_select as f64);
        lp
    }

    /// Coverage rows moved into the objective with one violation variable each.
    pub fn penalty_program(&self) -> LinearProgram {
        let n0 = self.n_vars();
        let r = self.coverage_rows.len();
        let max_c = self.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let weight = 1e3 * max_c.max(f64::MIN_POSITIVE);
        let mut objective = self.objective.clone();
        objective.extend(std::iter::repeat_n(-weight, r));
        let mut lp = LinearProgram::unit_box(objective);
        for (i, row) in self.coverage_rows.iter().enumerate() {
            let mut coeffs: Vec<f64> = row.iter().map(|&b| f64::from(u8::from(b))).collect();
            coeffs.extend((0..r).map(|j| if j == i { 1.0 } else { 0.0 }));
            lp.add(coeffs, Relation::Ge, 1.0);
        }
        let mut sum = vec![1.0; n0];
        sum.extend(std::iter::repeat_n(0.0, r));
        lp.add(sum, Relation::Eq, self.n_select as f64);
        lp
    }
}

/// Builds the relaxation from single-position marginal rates.
///
/// Coverage rows belong to the `N` most probable grids that at least one
/// candidate sees in LoS (ties to the lower grid index).
pub fn build_init_lp(model: &RateModel, n_select: usize) -> LpProblem {
    let gains = model.gains();
    let p = model.n_positions();
    let rho = model.rho();
    let objective: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|n| {
            model
                .active()
                .iter()
                .map(|&k| rho[k] * model.marginal_rate(n, k))
                .sum()
        })
        .collect();

    let mut ranked: Vec<usize> = model
        .active()
        .iter()
        .copied()
        .filter(|&k| (0..p).any(|n| gains.xi[gains.idx(k, n)]))
        .collect();
    ranked.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    ranked.truncate(n_select);
    let coverage_rows = ranked
        .iter()
        .map(|&k| (0..p).map(|n| gains.xi[gains.idx(k, n)]).collect())
        .collect();
    LpProblem {
        objective,
        covered_grids: ranked,
        coverage_rows,
        n_select,
    }
}

/// Relaxed solution and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub chi: Vec<f64>,
    pub objective: f64,
    /// True when the coverage rows were infeasible and moved into the objective.
    pub penalized: bool,
    pub certificate: Certificate,
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    let n0 = problem.n_vars();
    if problem.n_select > n0 {
        return Err(Error::config(
            "n_subarrays",
            format!("cannot select {} of {n0} positions", problem.n_select),
        ));
    }
    match lp::solve(&problem.program()) {
        Ok(s) => Ok(LpOutcome {
            chi: s.x,
            objective: s.objective,
            penalized: false,
            certificate: s.certificate,
        }),
        Err(Error::Infeasible) => {
            log::warn!(
                "coverage rows for {} grids cannot all hold with {} positions; \
                 solving the penalized relaxation instead",
                problem.coverage_rows.len(),
                problem.n_select
            );
            let s = lp::solve(&problem.penalty_program())?;
            let chi = s.x[..n0].to_vec();
            let objective = problem.objective.iter().zip(&chi).map(|(c, x)| c * x).sum();
            Ok(LpOutcome {
                chi,
                objective,
                penalized: true,
                certificate: s.certificate,
            })
        }
        Err(e) => Err(e),
    }
}

/// Indices of the `n` largest entries, by value then lowest index.
pub fn round_top_n(chi: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..chi.len()).collect();
    idx.sort_by(|&a, &b| chi[b].total_cmp(&chi[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Current placement of the successive-replacement search.
#[derive(Debug, Clone)]
pub struct SelectionState {
    /// Candidate index of each subarray slot.
    pub n_mu: Vec<usize>,
    /// Slots already replaced.
    pub replaced: Vec<bool>,
    pub objective: f64,
    sums: Vec<Terms>,
}

impl SelectionState {
    pub fn new(model: &RateModel, n_mu: Vec<usize>) -> Result<Self> {
        check_support(model.n_positions(), &n_mu)?;
        let sums = support_sums(model, &n_mu);
        let objective = model.objective_from_sums(&sums);
        Ok(Self {
            replaced: vec![false; n_mu.len()],
            n_mu,
            objective,
            sums,
        })
    }

    fn sums_without(&self, model: &RateModel, slot: usize) -> Vec<Terms> {
        let n = self.n_mu[slot];
        let mut s = self.sums.clone();
        for (a, t) in s.iter_mut().enumerate() {
            *t -= model.terms_slot(a, n);
        }
        s
    }

    /// Objective with slot `slot` removed.
    pub fn objective_without(&self, model: &RateModel, slot: usize) -> f64 {
        if self.n_mu.len() == 1 {
            return 0.0;
        }
        model.objective_from_sums(&self.sums_without(model, slot))
    }

    fn apply(&mut self, model: &RateModel, slot: usize, candidate: usize) {
        self.n_mu[slot] = candidate;
        self.replaced[slot] = true;
        // recompute from scratch so the stored objective matches a direct evaluation
        self.sums = support_sums(model, &self.n_mu);
        self.objective = model.objective_from_sums(&self.sums);
    }
}

fn check_support(n0: usize, n_mu: &[usize]) -> Result<()> {
    if n_mu.is_empty() {
        return Err(Error::domain("placement selects no position"));
    }
    let mut seen = vec![false; n0];
    for &n in n_mu {
        if n >= n0 {
            return Err(Error::domain(format!("candidate {n} out of range")));
        }
        if std::mem::replace(&mut seen[n], true) {
            return Err(Error::domain(format!("candidate {n} selected twice")));
        }
    }
    Ok(())
}

fn support_sums(model: &RateModel, support: &[usize]) -> Vec<Terms> {
    (0..model.active().len())
        .map(|a| {
            let mut s = Terms::default();
            for &n in support {
                s += model.terms_slot(a, n);
            }
            s
        })
        .collect()
}

/// Slot whose removal costs the least; `None` once every slot was replaced.
pub fn select_victim(state: &SelectionState, model: &RateModel) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for slot in 0..state.n_mu.len() {
        if state.replaced[slot] {
            continue;
        }
        let v = state.objective_without(model, slot);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((slot, v));
        }
    }
    best.map(|(s, _)| s)
}

/// Best new home for slot `slot`, searched over every candidate not held by
/// another slot, the vacated one included.
pub fn best_replacement(state: &SelectionState, model: &RateModel, slot: usize) -> (usize, f64) {
    let p = model.n_positions();
    let mut taken = vec![false; p];
    for (s, &n) in state.n_mu.iter().enumerate() {
        if s != slot {
            taken[n] = true;
        }
    }
    let base = state.sums_without(model, slot);
    let values: Vec<Option<f64>> = (0..p)
        .into_par_iter()
        .map(|n| {
            if taken[n] {
                return None;
            }
            let sums: Vec<Terms> = base
                .iter()
                .enumerate()
                .map(|(a, s)| {
                    let mut t = *s;
                    t += model.terms_slot(a, n);
                    t
                })
                .collect();
            Some(model.objective_from_sums(&sums))
        })
        .collect();
    let mut best = (state.n_mu[slot], f64::NEG_INFINITY);
    for (n, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if v > best.1 {
                best = (n, v);
            }
        }
    }
    best
}

/// One successive-replacement iteration, with 1-based slot and candidate indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub victim_slot: usize,
    pub removed_candidate: usize,
    pub chosen_candidate: usize,
    pub candidate_objective: f64,
    pub accepted: bool,
    /// Objective after this iteration.
    pub objective: f64,
}

/// Result of the successive-replacement search.
#[derive(Debug, Clone)]
pub struct PlacementPlan {
    /// Candidate index per subarray slot (0-based).
    pub n_mu: Vec<usize>,
    pub chi: Vec<bool>,
    pub objective: f64,
    pub initial_n_mu: Vec<usize>,
    pub initial_objective: f64,
    pub lp: LpOutcome,
    pub trace: Vec<TraceRecord>,
}

impl PlacementPlan {
    pub fn matrix(&self) -> PlacementMatrix {
        PlacementMatrix {
            n0: self.chi.len(),
            rows: self.n_mu.clone(),
        }
    }

    /// Trace as JSON lines.
    pub fn trace_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// LP start followed by at most `N` victim/replacement rounds.
pub fn successive_replacement(model: &RateModel, n_select: usize) -> Result<PlacementPlan> {
    let p = model.n_positions();
    if n_select == 0 || n_select > p {
        return Err(Error::config(
            "n_subarrays",
            format!("N = {n_select} must lie in 1..={p}"),
        ));
    }
    let problem = build_init_lp(model, n_select);
    let lp = solve_lp(&problem)?;
    let initial = round_top_n(&lp.chi, n_select);
    let mut state = SelectionState::new(model, initial.clone())?;
    let initial_objective = state.objective;
    let mut trace = Vec::new();

    for iteration in 1..=n_select {
        let Some(slot) = select_victim(&state, model) else {
            break;
        };
        let removed = state.n_mu[slot];
        let (candidate, value) = best_replacement(&state, model, slot);
        let accepted = value > state.objective + IMPROVEMENT_EPS;
        if accepted {
            state.apply(model, slot, candidate);
        }
        trace.push(TraceRecord {
            iteration,
            victim_slot: slot + 1,
            removed_candidate: removed + 1,
            chosen_candidate: candidate + 1,
            candidate_objective: value,
            accepted,
            objective: state.objective,
        });
        if !accepted {
            break;
        }
    }

    Ok(PlacementPlan {
        chi: crate::rate::chi_from_support(p, &state.n_mu),
        n_mu: state.n_mu,
        objective: state.objective,
        initial_n_mu: initial,
        initial_objective,
        lp,
        trace,
    })
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Global optimum over all `N`-subsets, visited in lexicographic order; the
/// first maximizer wins ties.
pub fn exhaustive_search(model: &RateModel, n_select: usize, limit: u128) -> Result<(Vec<usize>, f64)> {
    let p = model.n_positions();
    if n_select == 0 || n_select > p {
        return Err(Error::config(
            "n_subarrays",
            format!("N = {n_select} must lie in 1..={p}"),
        ));
    }
    let count = binomial(p, n_select);
    if count > limit {
        return Err(Error::TooManyCombinations { count, limit });
    }
    let ka = model.active().len();
    // prefix sums per depth
    let mut prefix = vec![vec![Terms::default(); ka]; n_select + 1];
    let mut combo: Vec<usize> = (0..n_select).collect();
    for d in 0..n_select {
        for a in 0..ka {
            let mut t = prefix[d][a];
            t += model.terms_slot(a, combo[d]);
            prefix[d + 1][a] = t;
        }
    }
    let mut best = (combo.clone(), model.objective_from_sums(&prefix[n_select]));
    // advance to the next combination
    while let Some(d) = (0..n_select).rev().find(|&d| combo[d] < p - n_select + d) {
        combo[d] += 1;
        for e in d + 1..n_select {
            combo[e] = combo[e - 1] + 1;
        }
        for e in d..n_select {
            for a in 0..ka {
                let mut t = prefix[e][a];
                t += model.terms_slot(a, combo[e]);
                prefix[e + 1][a] = t;
            }
        }
        let v = model.objective_from_sums(&prefix[n_select]);
        if v > best.1 {
            best = (combo.clone(), v);
        }
    }
    Ok(best)
}

/// Binary `N × N₀` assignment of subarray slots to candidate positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMatrix {
    pub n0: usize,
    /// Column of the single one in each row.
    pub rows: Vec<usize>,
}

impl PlacementMatrix {
    pub fn from_n_mu(n0: usize, n_mu: &[usize]) -> Result<Self> {
        check_support(n0, n_mu)?;
        Ok(Self {
            n0,
            rows: n_mu.to_vec(),
        })
    }

    pub fn dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|&c| (0..self.n0).map(|j| u8::from(j == c)).collect())
            .collect()
    }

    /// Column sums of the dense matrix.
    pub fn chi(&self) -> Vec<bool> {
        let d = self.dense();
        (0..self.n0)
            .map(|j| d.iter().map(|r| u32::from(r[j])).sum::<u32>() > 0)
            .collect()
    }

    /// One 1 per row and at most one per column.
    pub fn satisfies_constraints(&self) -> bool {
        let d = self.dense();
        let rows_ok = d.iter().all(|r| r.iter().map(|&v| u32::from(v)).sum::<u32>() == 1);
        let cols_ok = (0..self.n0).all(|j| d.iter().map(|r| u32::from(r[j])).sum::<u32>() <= 1);
        rows_ok && cols_ok
    }

    /// Checks `ΦᵀΦ = diag(χ)` by explicit multiplication.
    pub fn gram_is_selection_diagonal(&self) -> bool {
        let d = self.dense();
        let chi = self.chi();
        for a in 0..self.n0 {
            for b in 0..self.n0 {
                let g: u32 = d.iter().map(|r| u32::from(r[a]) * u32::from(r[b])).sum();
                let expect = u32::from(a == b && chi[a]);
                if g != expect {
                    return false;
                }
            }
        }
        true
    }
}
