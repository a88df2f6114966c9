//! Dense two-phase simplex for small bounded-variable linear programs.
//!
//! Maximizes `cᵀx` subject to linear rows (`≤`, `≥`, `=`) and finite lower
//! bounds with optional upper bounds. Nonbasic variables sit at one of their
//! bounds, so the box constraints never enter the tableau. Pivoting follows
//! Bland's rule (lowest eligible index), which rules out cycling and makes the
//! result a deterministic function of the input.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `max cᵀx` s.t. rows, `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Program with `0 ≤ x ≤ 1` and no rows.
    pub fn unit_box(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::domain("bound vectors must match the objective length"));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !l.is_finite() || u.is_nan() || u < l {
                return Err(Error::domain(format!("invalid bounds on variable {j}")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::domain(format!("row {i} has the wrong length")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut r = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => (lhs - c.rhs).max(0.0),
                Relation::Ge => (c.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            r = r.max(v);
        }
        for j in 0..x.len() {
            r = r.max((self.lower[j] - x[j]).max(0.0));
            r = r.max((x[j] - self.upper[j]).max(0.0));
        }
        r
    }
}

/// Optimality evidence for a returned solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest row or bound violation.
    pub primal_residual: f64,
    /// Largest `|d_j| · distance to the bound that d_j pushes towards`,
    /// over structural and slack variables.
    pub slackness_residual: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.primal_residual <= 1e-8 && self.slackness_residual <= 1e-6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, in row order.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub certificate: Certificate,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// `B⁻¹A`, row-major `m × ncols`.
    t: Vec<f64>,
    /// `B⁻¹b`.
    tb: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for i in 0..self.m {
            d -= cost[self.basis[i]] * self.at(i, j);
        }
        d
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basic(&mut self) {
        for i in 0..self.m {
            let mut v = self.tb[i];
            for j in 0..self.ncols {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    v -= self.at(i, j) * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.at(r, j);
        for c in 0..n {
            self.t[r * n + c] /= p;
        }
        self.tb[r] /= p;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f == 0.0 {
                continue;
            }
            for c in 0..n {
                self.t[i * n + c] -= f * self.t[r * n + c];
            }
            self.tb[i] -= f * self.tb[r];
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = j;
        self.is_basic[j] = true;
    }

    fn step(&mut self, cost: &[f64]) -> Step {
        // entering: lowest index with an improving direction
        let mut entering = None;
        for j in 0..self.ncols {
            if self.is_basic[j] || self.upper[j] <= self.lower[j] {
                continue;
            }
            let d = self.reduced_cost(cost, j);
            let at_lower = self.x[j] <= self.lower[j];
            let at_upper = self.x[j] >= self.upper[j];
            if (d > COST_TOL && !at_upper) || (d < -COST_TOL && !at_lower) {
                entering = Some((j, if d > 0.0 { 1.0 } else { -1.0 }));
                break;
            }
        }
        let Some((j, dir)) = entering else {
            return Step::Optimal;
        };

        let mut theta = self.upper[j] - self.lower[j];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..self.m {
            let rate = -dir * self.at(i, j);
            let b = self.basis[i];
            let bound = if rate < -PIVOT_TOL {
                Some(((self.x[b] - self.lower[b]).max(0.0) / -rate, false))
            } else if rate > PIVOT_TOL && self.upper[b].is_finite() {
                Some(((self.upper[b] - self.x[b]).max(0.0) / rate, true))
            } else {
                None
            };
            if let Some((lim, to_upper)) = bound {
                let better = match leave {
                    None => lim < theta,
                    Some((r, _)) => lim < theta || (lim == theta && b < self.basis[r]),
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                }
            }
        }
        if theta.is_infinite() {
            return Step::Unbounded;
        }
        self.iterations += 1;
        match leave {
            None => {
                // bound flip
                self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                self.refresh_basic();
            }
            Some((r, to_upper)) => {
                let b = self.basis[r];
                self.x[j] += dir * theta;
                self.x[b] = if to_upper { self.upper[b] } else { self.lower[b] };
                self.pivot(r, j);
                self.refresh_basic();
            }
        }
        Step::Moved
    }

    fn run(&mut self, cost: &[f64]) -> Result<()> {
        loop {
            match self.step(cost) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(Error::Unbounded),
                Step::Moved => {}
            }
        }
    }
}

/// Solves `lp` to optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let m = lp.constraints.len();

    // columns: structural, one slack per inequality, one artificial per row
    let mut kinds = vec![Kind::Structural; n];
    let mut slack_of_row = vec![None; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.relation != Relation::Eq {
            slack_of_row[i] = Some(kinds.len());
            kinds.push(Kind::Slack);
        }
    }
    let first_art = kinds.len();
    kinds.extend(std::iter::repeat_n(Kind::Artificial, m));
    let ncols = kinds.len();

    let mut a = vec![0.0; m * ncols];
    for (i, c) in lp.constraints.iter().enumerate() {
        a[i * ncols..i * ncols + n].copy_from_slice(&c.coeffs);
        if let Some(s) = slack_of_row[i] {
            a[i * ncols + s] = if c.relation == Relation::Le { 1.0 } else { -1.0 };
        }
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, ncols - n));
    upper.extend(std::iter::repeat_n(f64::INFINITY, ncols - n));
    let mut x = lower.clone();

    // artificials absorb the initial residual with a nonnegative value
    let mut b: Vec<f64> = lp.constraints.iter().map(|c| c.rhs).collect();
    let mut signs = vec![1.0; m];
    for i in 0..m {
        let resid = b[i] - (0..n).map(|j| a[i * ncols + j] * x[j]).sum::<f64>();
        if resid < 0.0 {
            signs[i] = -1.0;
            for c in 0..ncols {
                a[i * ncols + c] = -a[i * ncols + c];
            }
            b[i] = -b[i];
        }
        a[i * ncols + first_art + i] = 1.0;
        x[first_art + i] = resid.abs();
    }

    let mut is_basic = vec![false; ncols];
    let basis: Vec<usize> = (0..m).map(|i| first_art + i).collect();
    for &j in &basis {
        is_basic[j] = true;
    }
    let mut tab = Tableau {
        m,
        ncols,
        t: a,
        tb: b,
        basis,
        is_basic,
        x,
        lower,
        upper,
        iterations: 0,
    };

    // phase 1: drive the artificials to zero
    let phase1: Vec<f64> = kinds
        .iter()
        .map(|k| if *k == Kind::Artificial { -1.0 } else { 0.0 })
        .collect();
    tab.run(&phase1)?;
    let infeas: f64 = (first_art..ncols).map(|j| tab.x[j]).sum();
    let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    if infeas > FEAS_TOL * scale {
        return Err(Error::Infeasible);
    }
    // pin artificials at zero and pivot basic ones out where possible
    for j in first_art..ncols {
        tab.upper[j] = 0.0;
        tab.x[j] = 0.0;
    }
    for r in 0..m {
        if tab.basis[r] < first_art {
            continue;
        }
        if let Some(j) = (0..first_art).find(|&j| !tab.is_basic[j] && tab.at(r, j).abs() > PIVOT_TOL) {
            tab.pivot(r, j);
        }
    }
    tab.refresh_basic();

    // phase 2
    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective);
    tab.run(&cost)?;
    tab.refresh_basic();

    // duals: B⁻¹ is held in the artificial columns (rows were sign-normalized)
    let duals: Vec<f64> = (0..m)
        .map(|i| {
            let mut y = 0.0;
            for r in 0..m {
                y += cost[tab.basis[r]] * tab.at(r, first_art + i);
            }
            y * signs[i]
        })
        .collect();

    let mut reduced = vec![0.0; n];
    let mut slackness = 0.0f64;
    for j in 0..first_art {
        let d = tab.reduced_cost(&cost, j);
        if j < n {
            reduced[j] = d;
        }
        let v = if d > 0.0 {
            d * (tab.upper[j] - tab.x[j])
        } else {
            -d * (tab.x[j] - tab.lower[j])
        };
        if v.is_nan() {
            // infinite upper bound with zero reduced cost
            continue;
        }
        slackness = slackness.max(v);
    }

    let x: Vec<f64> = tab.x[..n].to_vec();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let certificate = Certificate {
        primal_residual: lp.primal_residual(&x),
        slackness_residual: slackness,
    };
    Ok(LpSolution {
        x,
        objective,
        duals,
        reduced_costs: reduced,
        certificate,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simplex_budget() {
        // max over {0 ≤ x ≤ 1, Σx = 1}
        let mut lp = LinearProgram::unit_box(vec![1.0, 3.0, 2.0]);
        lp.add(vec![1.0; 3], Relation::Eq, 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.x, vec![0.0, 1.0, 0.0]);
        assert!(s.certificate.holds());
    }

    #[test]
    fn full_selection_is_all_ones() {
        let mut lp = LinearProgram::unit_box(vec![-1.0, 0.5, 2.0, -3.0]);
        lp.add(vec![1.0; 4], Relation::Eq, 4.0);
        let s = solve(&lp).unwrap();
        for v in s.x {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn textbook_inequalities() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let lp = LinearProgram {
            objective: vec![3.0, 5.0],
            constraints: vec![
                Constraint { coeffs: vec![1.0, 0.0], relation: Relation::Le, rhs: 4.0 },
                Constraint { coeffs: vec![0.0, 2.0], relation: Relation::Le, rhs: 12.0 },
                Constraint { coeffs: vec![3.0, 2.0], relation: Relation::Le, rhs: 18.0 },
            ],
            lower: vec![0.0; 2],
            upper: vec![f64::INFINITY; 2],
        };
        let s = solve(&lp).unwrap();
        assert_relative_eq!(s.objective, 36.0, epsilon = 1e-9);
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(s.x[1], 6.0, epsilon = 1e-9);
        // duals (0, 1.5, 1)
        assert_relative_eq!(s.duals[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.duals[1], 1.5, epsilon = 1e-9);
        assert_relative_eq!(s.duals[2], 1.0, epsilon = 1e-9);
        assert!(s.certificate.holds());
    }

    #[test]
    fn coverage_row_forces_mass() {
        let mut lp = LinearProgram::unit_box(vec![5.0, 4.0, 1.0, 0.5]);
        lp.add(vec![1.0; 4], Relation::Eq, 2.0);
        lp.add(vec![0.0, 0.0, 1.0, 1.0], Relation::Ge, 1.0);
        let s = solve(&lp).unwrap();
        assert_relative_eq!(s.objective, 6.0, epsilon = 1e-12);
        assert!(s.duals[1] <= 1e-12);
        assert!(s.certificate.holds());
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::unit_box(vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 3.0);
        assert!(matches!(solve(&lp), Err(Error::Infeasible)));

        let lp = LinearProgram {
            objective: vec![1.0],
            constraints: vec![Constraint { coeffs: vec![-1.0], relation: Relation::Le, rhs: 1.0 }],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        assert!(matches!(solve(&lp), Err(Error::Unbounded)));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut lp = LinearProgram::unit_box(vec![1.0, 2.0, 3.0]);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 2.0);
        lp.add(vec![2.0, 2.0, 2.0], Relation::Eq, 4.0);
        let s = solve(&lp).unwrap();
        assert_relative_eq!(s.objective, 5.0, epsilon = 1e-12);
        assert!(s.certificate.holds());
    }

    #[test]
    fn negative_rhs_rows() {
        // -x0 - x1 ≥ -1  ⇔  x0 + x1 ≤ 1
        let mut lp = LinearProgram::unit_box(vec![2.0, 1.0]);
        lp.add(vec![-1.0, -1.0], Relation::Ge, -1.0);
        let s = solve(&lp).unwrap();
        assert_relative_eq!(s.objective, 2.0, epsilon = 1e-12);
        assert!(s.duals[0] <= 0.0);
        assert!(s.certificate.holds());
    }
}
