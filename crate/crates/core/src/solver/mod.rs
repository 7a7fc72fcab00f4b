//! Desk-scale LP/MIP solver: dense primal simplex plus depth-first
//! branch-and-bound on the most fractional integer column.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::instantiate::ConcreteModel;
use crate::model::Sense;
use simplex::{LpOutcome, LpProblem, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_pivots: usize,
    pub max_nodes: usize,
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_pivots: 10_000,
            max_nodes: 100_000,
            pivot_tol: 1e-9,
            feasibility_tol: 1e-6,
            integrality_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::IterationLimit => "IterationLimit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff `status` is `Optimal`.
    pub objective_value: Option<f64>,
    /// Column values, present iff `status` is `Optimal`.
    pub assignment: Option<Vec<f64>>,
    pub pivots: usize,
    pub nodes: usize,
}

impl SolveResult {
    fn without_solution(status: SolveStatus, pivots: usize, nodes: usize) -> Self {
        Self {
            status,
            objective_value: None,
            assignment: None,
            pivots,
            nodes,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn relaxation(model: &ConcreteModel) -> LpProblem {
    let n = model.num_columns();
    let sign = match model.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut cost = vec![0.0; n];
    for (&col, &c) in &model.objective.coefficients {
        cost[col] = sign * c;
    }
    let rows = model
        .constraints
        .iter()
        .map(|c| {
            let mut coeffs = vec![0.0; n];
            for (&col, &a) in &c.lhs.coefficients {
                coeffs[col] = a;
            }
            Row {
                coeffs,
                relation: c.relation,
                rhs: c.rhs - c.lhs.constant,
            }
        })
        .collect();
    LpProblem {
        cost,
        rows,
        lb: vec![0.0; n],
        ub: model.variables.iter().map(|v| v.upper_bound()).collect(),
    }
}

/// Solves the continuous relaxation (integrality dropped, binary columns
/// kept in `[0, 1]`).
pub fn solve_lp(model: &ConcreteModel, cfg: &SolverConfig) -> SolveResult {
    let problem = relaxation(model);
    match simplex::solve(&problem, cfg) {
        LpOutcome::Optimal { x, pivots } => SolveResult {
            status: SolveStatus::Optimal,
            objective_value: Some(model.objective_value(&x)),
            assignment: Some(x),
            pivots,
            nodes: 1,
        },
        LpOutcome::Infeasible { pivots } => SolveResult::without_solution(SolveStatus::Infeasible, pivots, 1),
        LpOutcome::Unbounded { pivots } => SolveResult::without_solution(SolveStatus::Unbounded, pivots, 1),
        LpOutcome::IterationLimit { pivots } => SolveResult::without_solution(SolveStatus::IterationLimit, pivots, 1),
    }
}

/// Branch-and-bound over the integer and binary columns.
pub fn solve_mip(model: &ConcreteModel, cfg: &SolverConfig) -> SolveResult {
    let base = relaxation(model);
    let integral: Vec<usize> = model
        .variables
        .iter()
        .filter(|v| v.vartype.is_integral())
        .map(|v| v.column_id)
        .collect();
    let min_value = |x: &[f64]| base.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>();

    let mut stack: Vec<(Vec<f64>, Vec<f64>)> = vec![(base.lb.clone(), base.ub.clone())];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let (mut pivots, mut nodes) = (0usize, 0usize);

    while let Some((lb, ub)) = stack.pop() {
        if nodes >= cfg.max_nodes {
            return SolveResult::without_solution(SolveStatus::IterationLimit, pivots, nodes);
        }
        nodes += 1;
        let problem = LpProblem { lb, ub, ..base.clone() };
        let x = match simplex::solve(&problem, cfg) {
            LpOutcome::Optimal { x, pivots: p } => {
                pivots += p;
                x
            }
            LpOutcome::Infeasible { pivots: p } => {
                pivots += p;
                continue;
            }
            LpOutcome::Unbounded { pivots: p } => {
                pivots += p;
                return SolveResult::without_solution(SolveStatus::Unbounded, pivots, nodes);
            }
            LpOutcome::IterationLimit { pivots: p } => {
                pivots += p;
                return SolveResult::without_solution(SolveStatus::IterationLimit, pivots, nodes);
            }
        };
        let bound = min_value(&x);
        if let Some((best, _)) = &incumbent {
            if bound >= best - 1e-9 {
                continue;
            }
        }
        // most fractional column; ties go to the lowest column id
        let mut branch: Option<(usize, f64)> = None;
        for &j in &integral {
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > cfg.integrality_tol && branch.is_none_or(|(_, d)| dist > d + 1e-12) {
                branch = Some((j, dist));
            }
        }
        match branch {
            None => {
                let mut x = x;
                for &j in &integral {
                    x[j] = x[j].round();
                }
                incumbent = Some((min_value(&x), x));
            }
            Some((j, _)) => {
                let v = x[j];
                let mut down_ub = problem.ub.clone();
                down_ub[j] = v.floor();
                let mut up_lb = problem.lb.clone();
                up_lb[j] = v.ceil();
                let down = (problem.lb.clone(), down_ub);
                let up = (up_lb, problem.ub.clone());
                // explore the nearer side first
                if v - v.floor() < 0.5 {
                    stack.push(up);
                    stack.push(down);
                } else {
                    stack.push(down);
                    stack.push(up);
                }
            }
        }
    }

    match incumbent {
        Some((_, x)) => SolveResult {
            status: SolveStatus::Optimal,
            objective_value: Some(model.objective_value(&x)),
            assignment: Some(x),
            pivots,
            nodes,
        },
        None => SolveResult::without_solution(SolveStatus::Infeasible, pivots, nodes),
    }
}
