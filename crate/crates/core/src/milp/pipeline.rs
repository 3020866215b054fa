use serde::{Deserialize, Serialize};

use super::bnb::{solve_branch_and_bound, BnbOptions, MilpSolution, MilpStatus};
use super::model::{build_milp, MilpModel, Objective};
use crate::approx::{global_load_bounds, LinearizationMode, SegmentTable};
use crate::coupling::{fixed_point_load, FixedPointReport, SolverOptions};
use crate::netmodel::{Association, NetworkInstance, UeId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Linearize over bounded interference intervals instead of `[0, T]`.
    pub use_bounds: bool,
    /// Add the interference floor rows (needs `use_bounds`).
    pub lb_constraints: bool,
    pub mode: LinearizationMode,
    pub solver: SolverOptions,
    pub bnb: BnbOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            use_bounds: true,
            lb_constraints: true,
            mode: LinearizationMode::Secant,
            solver: SolverOptions::default(),
            bnb: BnbOptions::default(),
        }
    }
}

/// UEs by descending demand, ties by index.
pub(crate) fn demand_order(net: &NetworkInstance) -> Vec<UeId> {
    let mut o: Vec<UeId> = (0..net.n_ues()).collect();
    o.sort_by(|&a, &b| net.ues()[b].demand.total_cmp(&net.ues()[a].demand).then(a.cmp(&b)));
    o
}

/// Load bounds, intervals, segments and model, as the pipeline builds them.
pub fn pipeline_model(
    net: &NetworkInstance,
    objective: Objective,
    opts: &PipelineOptions,
) -> Result<MilpModel> {
    if opts.lb_constraints && !opts.use_bounds {
        return Err(Error::InvalidConfig(
            "interference floor rows need bounded intervals".into(),
        ));
    }
    let bounds = if opts.use_bounds {
        Some(global_load_bounds(net, &opts.solver)?)
    } else {
        None
    };
    let segments = SegmentTable::build(net, bounds.as_ref(), opts.mode)?;
    build_milp(net, &segments, objective, opts.lb_constraints)
}

/// Runs the whole pipeline and returns the solver result with the true
/// objective filled in, next to the fixed point of the decoded association.
pub fn solve_pipeline(
    net: &NetworkInstance,
    objective: Objective,
    opts: &PipelineOptions,
) -> Result<(MilpSolution, FixedPointReport)> {
    let model = pipeline_model(net, objective, opts)?;
    let mut bnb = opts.bnb.clone();
    if bnb.branch_order.is_none() {
        bnb.branch_order = Some(demand_order(net));
    }
    let mut sol = solve_branch_and_bound(&model, &bnb)?;
    let assoc = match (&sol.assignment, sol.status) {
        (Some(a), _) => a.clone(),
        (None, MilpStatus::Infeasible) => return Err(Error::Infeasible),
        (None, _) => {
            return Err(Error::NotConverged {
                status: crate::coupling::FixedPointStatus::IterationLimit,
                iterations: sol.nodes_explored,
            })
        }
    };
    let report = fixed_point_load(&assoc, net, &opts.solver)?.require_converged()?;
    sol.objective_true = Some(objective.of(&report.load));
    Ok((sol, report))
}

/// Optimized association, its fixed point and the proven lower bound on
/// the best achievable objective.
pub fn milp_pipeline(
    net: &NetworkInstance,
    objective: Objective,
    opts: &PipelineOptions,
) -> Result<(Association, FixedPointReport, f64)> {
    let (sol, report) = solve_pipeline(net, objective, opts)?;
    let assoc = sol.assignment.expect("pipeline returns only with an assignment");
    Ok((assoc, report, sol.bound))
}
