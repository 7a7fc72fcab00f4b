//! Dense two-phase primal simplex with Bland's pivoting rule.

use crate::instantiate::ConstraintRelation;

use super::SolverConfig;

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<f64>,
    pub relation: ConstraintRelation,
    pub rhs: f64,
}

/// `minimize cost·x` subject to `rows` and `lb <= x <= ub`.
#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded { pivots: usize },
    IterationLimit { pivots: usize },
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
}

struct Tableau<'c> {
    /// m rows of width `ncols + 1`; the last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced costs, width `ncols + 1`; last entry is minus the objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
    cfg: &'c SolverConfig,
}

impl Tableau<'_> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn price(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, tv) in self.obj.iter_mut().zip(&self.t[r]) {
                    *v -= cb * tv;
                }
            }
        }
    }

    fn run(&mut self, allowed: &[bool]) -> Phase {
        let rhs = self.ncols;
        loop {
            let entering = (0..self.ncols).find(|&j| allowed[j] && self.obj[j] < -self.cfg.pivot_tol);
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > self.cfg.pivot_tol {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Phase::Unbounded;
            };
            if self.pivots >= self.cfg.max_pivots {
                return Phase::Limit;
            }
            self.pivot(r, c);
        }
    }
}

pub(crate) fn solve(problem: &LpProblem, cfg: &SolverConfig) -> LpOutcome {
    let n = problem.cost.len();
    for j in 0..n {
        if problem.ub[j] < problem.lb[j] - cfg.feasibility_tol {
            return LpOutcome::Infeasible { pivots: 0 };
        }
    }

    // shift x = lb + y so every structural column is nonnegative
    let mut rows: Vec<Row> = problem
        .rows
        .iter()
        .map(|r| {
            let shift: f64 = r.coeffs.iter().zip(&problem.lb).map(|(a, l)| a * l).sum();
            Row {
                coeffs: r.coeffs.clone(),
                relation: r.relation,
                rhs: r.rhs - shift,
            }
        })
        .collect();
    for j in 0..n {
        if problem.ub[j].is_finite() {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            rows.push(Row {
                coeffs,
                relation: ConstraintRelation::Le,
                rhs: problem.ub[j] - problem.lb[j],
            });
        }
    }
    for r in rows.iter_mut() {
        if r.rhs < 0.0 {
            r.coeffs.iter_mut().for_each(|a| *a = -*a);
            r.rhs = -r.rhs;
            r.relation = match r.relation {
                ConstraintRelation::Le => ConstraintRelation::Ge,
                ConstraintRelation::Ge => ConstraintRelation::Le,
                ConstraintRelation::Eq => ConstraintRelation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != ConstraintRelation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != ConstraintRelation::Le).count();
    let ncols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0; m];
    let mut is_art = vec![false; ncols];
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (i, r) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(&r.coeffs);
        t[i][ncols] = r.rhs;
        match r.relation {
            ConstraintRelation::Le => {
                t[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            ConstraintRelation::Ge => {
                t[i][next_slack] = -1.0;
                next_slack += 1;
                t[i][next_art] = 1.0;
                is_art[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
            ConstraintRelation::Eq => {
                t[i][next_art] = 1.0;
                is_art[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        t,
        obj: Vec::new(),
        basis,
        ncols,
        pivots: 0,
        cfg,
    };

    if n_art > 0 {
        let phase1_cost: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        tab.price(&phase1_cost);
        match tab.run(&vec![true; ncols]) {
            Phase::Limit => return LpOutcome::IterationLimit { pivots: tab.pivots },
            Phase::Unbounded => unreachable!("phase one is bounded below by zero"),
            Phase::Optimal => {}
        }
        let infeasibility = -tab.obj[ncols];
        if infeasibility > cfg.feasibility_tol {
            return LpOutcome::Infeasible { pivots: tab.pivots };
        }
        // move remaining (zero-valued) artificials out of the basis
        let mut r = 0;
        while r < tab.t.len() {
            if is_art[tab.basis[r]] {
                let col = (0..ncols).find(|&j| !is_art[j] && tab.t[r][j].abs() > cfg.pivot_tol);
                match col {
                    Some(c) => {
                        tab.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        // redundant row
                        tab.t.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&problem.cost);
    tab.price(&cost);
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    match tab.run(&allowed) {
        Phase::Limit => LpOutcome::IterationLimit { pivots: tab.pivots },
        Phase::Unbounded => LpOutcome::Unbounded { pivots: tab.pivots },
        Phase::Optimal => {
            let mut x = problem.lb.clone();
            for (r, &b) in tab.basis.iter().enumerate() {
                if b < n {
                    x[b] += tab.t[r][ncols];
                }
            }
            for (j, v) in x.iter_mut().enumerate() {
                if (*v - problem.lb[j]).abs() < cfg.pivot_tol {
                    *v = problem.lb[j];
                }
            }
            LpOutcome::Optimal { x, pivots: tab.pivots }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], relation: ConstraintRelation, rhs: f64) -> Row {
        Row {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        }
    }

    fn lp(cost: &[f64], rows: Vec<Row>) -> LpProblem {
        let n = cost.len();
        LpProblem {
            cost: cost.to_vec(),
            rows,
            lb: vec![0.0; n],
            ub: vec![f64::INFINITY; n],
        }
    }

    fn optimum(p: &LpProblem) -> Vec<f64> {
        match solve(p, &SolverConfig::default()) {
            LpOutcome::Optimal { x, .. } => x,
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let p = lp(
            &[-3.0, -5.0],
            vec![
                row(&[1.0, 0.0], ConstraintRelation::Le, 4.0),
                row(&[0.0, 2.0], ConstraintRelation::Le, 12.0),
                row(&[3.0, 2.0], ConstraintRelation::Le, 18.0),
            ],
        );
        let x = optimum(&p);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y, x + y >= 2, x - y = 1 -> (1.5, 0.5)
        let p = lp(
            &[1.0, 1.0],
            vec![
                row(&[1.0, 1.0], ConstraintRelation::Ge, 2.0),
                row(&[1.0, -1.0], ConstraintRelation::Eq, 1.0),
            ],
        );
        let x = optimum(&p);
        assert!((x[0] - 1.5).abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn redundant_equalities() {
        let p = lp(
            &[1.0, 2.0],
            vec![
                row(&[1.0, 1.0], ConstraintRelation::Eq, 3.0),
                row(&[2.0, 2.0], ConstraintRelation::Eq, 6.0),
            ],
        );
        let x = optimum(&p);
        assert!((x[0] - 3.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn bounds_are_respected() {
        let mut p = lp(&[-1.0, -1.0], vec![row(&[1.0, 1.0], ConstraintRelation::Le, 10.0)]);
        p.lb = vec![2.0, 0.0];
        p.ub = vec![3.0, 1.0];
        let x = optimum(&p);
        assert_eq!(x, vec![3.0, 1.0]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(
            &[1.0],
            vec![
                row(&[1.0], ConstraintRelation::Ge, 1.0),
                row(&[1.0], ConstraintRelation::Le, 0.0),
            ],
        );
        assert!(matches!(
            solve(&p, &SolverConfig::default()),
            LpOutcome::Infeasible { .. }
        ));
        let p = lp(&[-1.0], vec![]);
        assert!(matches!(
            solve(&p, &SolverConfig::default()),
            LpOutcome::Unbounded { .. }
        ));
    }

    #[test]
    fn pivot_cap() {
        let p = lp(
            &[-3.0, -5.0],
            vec![
                row(&[1.0, 0.0], ConstraintRelation::Le, 4.0),
                row(&[3.0, 2.0], ConstraintRelation::Le, 18.0),
            ],
        );
        let cfg = SolverConfig {
            max_pivots: 0,
            ..SolverConfig::default()
        };
        assert!(matches!(solve(&p, &cfg), LpOutcome::IterationLimit { .. }));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example under the largest-coefficient rule
        let p = lp(
            &[-0.75, 150.0, -0.02, 6.0],
            vec![
                row(&[0.25, -60.0, -0.04, 9.0], ConstraintRelation::Le, 0.0),
                row(&[0.5, -90.0, -0.02, 3.0], ConstraintRelation::Le, 0.0),
                row(&[0.0, 0.0, 1.0, 0.0], ConstraintRelation::Le, 1.0),
            ],
        );
        let x = optimum(&p);
        let value: f64 = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        assert!((value + 0.05).abs() < 1e-9, "{value}");
    }
}
