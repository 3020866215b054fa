//! Linearized association model: construction, LP-format export and
//! import, branch-and-bound, and the end-to-end optimization pipeline.

mod bnb;
mod lp;
mod model;
mod pipeline;

pub use bnb::{evaluate_leaf, solve_branch_and_bound, BnbOptions, MilpSolution, MilpStatus};
pub use lp::{export_lp, parse_lp};
pub use model::{
    build_milp, Constraint, MilpModel, Objective, RowRole, Sense, VarRole, Variable,
};
pub use pipeline::{milp_pipeline, pipeline_model, solve_pipeline, PipelineOptions};
