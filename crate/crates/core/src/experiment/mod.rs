//! Experiment harness: method runners, demand calibration, brute-force
//! oracles and reports.

mod oracle;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use oracle::{
    association_count, brute_force_optimum, feasible_fixed_point, find_feasible_association,
    AssociationSpace, ENUMERATION_GUARD,
};
pub use report::{
    emit_report, render_report, write_report, ExperimentReport, GapSummary, ReportFormat,
    ReportRow, CSV_COLUMNS,
};

use crate::coupling::{fixed_point_load, FixedPointReport, SolverOptions};
use crate::milp::{
    solve_pipeline, BnbOptions, MilpSolution, MilpStatus, Objective, PipelineOptions,
};
use crate::minl::{minl_with, MinlOptions};
use crate::netmodel::{generate_hexnet, Association, CellKind, NetworkInstance, ScenarioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "minl")]
    Minl,
    #[serde(rename = "milp")]
    Milp,
    #[serde(rename = "milp+minl")]
    MilpMinl,
    #[serde(rename = "bound")]
    Bound,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Baseline,
        Method::Minl,
        Method::Milp,
        Method::MilpMinl,
        Method::Bound,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Minl => "minl",
            Method::Milp => "milp",
            Method::MilpMinl => "milp+minl",
            Method::Bound => "bound",
        }
    }

    fn needs_pipeline(&self) -> bool {
        matches!(self, Method::Milp | Method::MilpMinl | Method::Bound)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

pub fn objective_label(objective: Objective) -> &'static str {
    match objective {
        Objective::SumLoad => "sum",
        Objective::MaxLoad => "max",
    }
}

pub fn parse_objective(s: &str) -> Result<Objective> {
    match s {
        "sum" => Ok(Objective::SumLoad),
        "max" => Ok(Objective::MaxLoad),
        _ => Err(Error::InvalidConfig(format!("unknown objective {s:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DemandSpec {
    /// `points` evenly spaced demands from the one putting the baseline
    /// max load at `low_max_load` to the one putting it at `high_max_load`
    /// (smallest over seeds for each end).
    Calibrated {
        points: usize,
        low_max_load: f64,
        high_max_load: f64,
    },
    /// Explicit demands, bit/s per UE.
    Values(Vec<f64>),
}

impl Default for DemandSpec {
    fn default() -> Self {
        DemandSpec::Calibrated {
            points: 8,
            low_max_load: 0.2,
            high_max_load: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    /// Fixed instance used for every seed instead of generating one.
    #[serde(skip)]
    pub instance: Option<NetworkInstance>,
    pub methods: Vec<Method>,
    pub objective: Objective,
    pub demand: DemandSpec,
    pub seeds: Vec<u64>,
    pub minl: MinlOptions,
    pub pipeline: PipelineOptions,
    /// Record wall-clock seconds; otherwise the column is 0 so that
    /// reports are reproducible byte for byte.
    pub timings: bool,
}

/// Branch-and-bound node budget per solve in experiment runs.
pub const DEFAULT_NODE_LIMIT: usize = 20_000;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::desk(),
            instance: None,
            methods: Method::ALL.to_vec(),
            objective: Objective::SumLoad,
            demand: DemandSpec::default(),
            seeds: (0..5).collect(),
            minl: MinlOptions::default(),
            pipeline: PipelineOptions {
                bnb: BnbOptions {
                    node_limit: DEFAULT_NODE_LIMIT,
                    ..BnbOptions::default()
                },
                ..PipelineOptions::default()
            },
            timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instance.is_none() {
            self.scenario.validate()?;
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::InvalidConfig("duplicate method".into()));
        }
        match &self.demand {
            DemandSpec::Calibrated {
                points,
                low_max_load,
                high_max_load,
            } => {
                if *points == 0 || !(*low_max_load > 0.0 && low_max_load <= high_max_load) {
                    return Err(Error::InvalidConfig(
                        "calibrated sweep needs points >= 1 and 0 < low <= high".into(),
                    ));
                }
            }
            DemandSpec::Values(v) => {
                if v.is_empty() || v.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    return Err(Error::InvalidConfig(
                        "demands must be positive and finite".into(),
                    ));
                }
            }
        }
        if self.minl.lambda == 0 || self.minl.tau == 0 {
            return Err(Error::InvalidConfig("lambda and tau must be at least 1".into()));
        }
        Ok(())
    }

    /// The instance a seed runs on.
    pub fn instance_for(&self, seed: u64) -> Result<NetworkInstance> {
        match &self.instance {
            Some(net) => Ok(net.clone()),
            None => generate_hexnet(&self.scenario, seed),
        }
    }
}

fn baseline_max_load(net: &NetworkInstance, demand: f64) -> Result<f64> {
    let net = net.with_uniform_demand(demand)?;
    let r = fixed_point_load(&Association::home_only(&net), &net, &SolverOptions::default())?;
    Ok(if r.converged() {
        r.max_load()
    } else {
        f64::INFINITY
    })
}

/// Largest uniform demand whose baseline max load stays at or below
/// `target`.
pub fn demand_for_max_load(net: &NetworkInstance, target: f64) -> Result<f64> {
    let mut hi = 1e3;
    let mut lo = 0.0;
    for _ in 0..200 {
        if baseline_max_load(net, hi)? > target {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if lo == hi / 2.0 && baseline_max_load(net, hi)? <= target {
        return Err(Error::InvalidConfig(format!(
            "baseline max load never reaches {target}"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if baseline_max_load(net, mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "no positive demand keeps the baseline max load at {target}"
        )));
    }
    Ok(lo)
}

/// Demand sweep for `seeds`, resolved from the configuration.
pub fn calibrate_demands(config: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<f64>> {
    match &config.demand {
        DemandSpec::Values(v) => Ok(v.clone()),
        DemandSpec::Calibrated {
            points,
            low_max_load,
            high_max_load,
        } => {
            let ends = seeds
                .par_iter()
                .map(|&s| {
                    let net = config.instance_for(s)?;
                    Ok((
                        demand_for_max_load(&net, *low_max_load)?,
                        demand_for_max_load(&net, *high_max_load)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let lo = ends.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let hi = ends.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
            if *points == 1 {
                return Ok(vec![hi]);
            }
            let step = (hi - lo) / (*points - 1) as f64;
            Ok((0..*points)
                .map(|k| if k + 1 == *points { hi } else { lo + step * k as f64 })
                .collect())
        }
    }
}

struct Outcome {
    assoc: Option<Association>,
    report: Option<FixedPointReport>,
    status: String,
    seconds: f64,
    nodes: Option<usize>,
    adjustments: Option<usize>,
}

fn status_of(r: &FixedPointReport) -> String {
    if !r.converged() {
        "not_converged".into()
    } else if !r.feasible {
        "overloaded".into()
    } else {
        "ok".into()
    }
}

fn error_status(e: &Error) -> String {
    match e {
        Error::NotConverged { .. } => "not_converged".into(),
        Error::Infeasible => "milp_infeasible".into(),
        _ => "error".into(),
    }
}

fn failed(status: String, seconds: f64) -> Outcome {
    Outcome {
        assoc: None,
        report: None,
        status,
        seconds,
        nodes: None,
        adjustments: None,
    }
}

fn milp_status(sol: &MilpSolution, r: &FixedPointReport) -> String {
    match sol.status {
        MilpStatus::Optimal => status_of(r),
        MilpStatus::GapLimit => "gap_limit".into(),
        MilpStatus::NodeLimit => "node_limit".into(),
        MilpStatus::Infeasible => "milp_infeasible".into(),
    }
}

fn run_minl(net: &NetworkInstance, init: &Association, config: &ExperimentConfig) -> (Outcome, f64) {
    let t = Instant::now();
    let out = minl_with(net, init, &config.minl);
    let secs = t.elapsed().as_secs_f64();
    let o = match out {
        Ok(o) => Outcome {
            status: status_of(&o.report),
            assoc: Some(o.assoc),
            report: Some(o.report),
            seconds: secs,
            nodes: None,
            adjustments: Some(o.trace.len()),
        },
        Err(e) => failed(error_status(&e), secs),
    };
    (o, secs)
}

/// Runs every configured method on one instance at one demand.
fn run_point(
    base: &NetworkInstance,
    demand: f64,
    seed: &str,
    config: &ExperimentConfig,
) -> Result<Vec<ReportRow>> {
    let net = base.with_uniform_demand(demand)?;
    let kind = config.objective;

    let pipeline = if config.methods.iter().any(Method::needs_pipeline) {
        let t = Instant::now();
        let res = solve_pipeline(&net, kind, &config.pipeline);
        Some((res, t.elapsed().as_secs_f64()))
    } else {
        None
    };
    let bound = match &pipeline {
        Some((Ok((sol, _)), _)) if sol.status != MilpStatus::Infeasible => Some(sol.bound),
        _ => None,
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let outcome = match method {
            Method::Baseline => {
                let t = Instant::now();
                let a = Association::home_only(&net);
                match fixed_point_load(&a, &net, &SolverOptions::default()) {
                    Ok(r) => Outcome {
                        status: status_of(&r),
                        assoc: Some(a),
                        report: Some(r),
                        seconds: t.elapsed().as_secs_f64(),
                        nodes: None,
                        adjustments: None,
                    },
                    Err(e) => failed(error_status(&e), t.elapsed().as_secs_f64()),
                }
            }
            Method::Minl => run_minl(&net, &Association::home_only(&net), config).0,
            Method::Milp | Method::MilpMinl | Method::Bound => {
                let (res, secs) = pipeline.as_ref().expect("pipeline computed");
                match res {
                    Err(e) => failed(error_status(e), *secs),
                    Ok((sol, r)) => {
                        let assoc = sol.assignment.clone().expect("pipeline assignment");
                        match method {
                            Method::Milp => Outcome {
                                status: milp_status(sol, r),
                                assoc: Some(assoc),
                                report: Some(r.clone()),
                                seconds: *secs,
                                nodes: Some(sol.nodes_explored),
                                adjustments: None,
                            },
                            Method::MilpMinl => {
                                let (mut o, _) = run_minl(&net, &assoc, config);
                                o.seconds += secs;
                                o.nodes = Some(sol.nodes_explored);
                                o
                            }
                            _ => Outcome {
                                status: match sol.status {
                                    MilpStatus::Optimal => "ok".into(),
                                    _ => milp_status(sol, r),
                                },
                                assoc: None,
                                report: None,
                                seconds: *secs,
                                nodes: Some(sol.nodes_explored),
                                adjustments: None,
                            },
                        }
                    }
                }
            }
        };
        rows.push(make_row(&net, demand, method, kind, seed, bound, outcome, config.timings));
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    net: &NetworkInstance,
    demand: f64,
    method: Method,
    kind: Objective,
    seed: &str,
    bound: Option<f64>,
    o: Outcome,
    timings: bool,
) -> ReportRow {
    let mut row = ReportRow {
        demand,
        method,
        objective_kind: objective_label(kind).into(),
        objective: f64::NAN,
        bound,
        sum_load_mc: None,
        sum_load_sc: None,
        max_load_mc: None,
        max_load_sc: None,
        jt_ue_count: 0.0,
        seconds: if timings { o.seconds } else { 0.0 },
        seed: seed.into(),
        status: o.status,
        bound_gap: None,
        loads: Vec::new(),
        nodes_explored: o.nodes,
        adjustments: o.adjustments,
    };
    if method == Method::Bound {
        row.objective = bound.unwrap_or(f64::NAN);
        return row;
    }
    if let (Some(a), Some(r)) = (o.assoc, o.report) {
        row.objective = kind.of(&r.load);
        let pick = |k: CellKind| {
            net.cells()
                .iter()
                .filter(move |c| c.kind == k)
                .map(|c| r.load[c.id])
        };
        row.sum_load_mc = Some(pick(CellKind::Macro).sum());
        row.sum_load_sc = Some(pick(CellKind::Small).sum());
        row.max_load_mc = Some(pick(CellKind::Macro).fold(0.0, f64::max));
        row.max_load_sc = Some(pick(CellKind::Small).fold(0.0, f64::max));
        row.jt_ue_count = a.jt_ue_count() as f64;
        row.bound_gap = bound
            .filter(|_| row.objective > 0.0)
            .map(|b| (row.objective - b) / row.objective);
        row.loads = r.load;
    }
    row
}

/// Runs the configured methods on one seed's instance over the sweep.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    config.validate()?;
    let demands = calibrate_demands(config, &[seed])?;
    let net = config.instance_for(seed)?;
    let rows = demands
        .par_iter()
        .map(|&d| run_point(&net, d, &seed.to_string(), config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(finish(config, demands, rows))
}

/// Runs every seed over a shared demand sweep, adding rows averaged over
/// seeds when there is more than one.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let demands = calibrate_demands(config, &config.seeds)?;
    let nets = config
        .seeds
        .par_iter()
        .map(|&s| config.instance_for(s))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = (0..nets.len())
        .flat_map(|k| demands.iter().map(move |&d| (k, d)))
        .collect();
    let mut rows: Vec<ReportRow> = points
        .par_iter()
        .map(|&(k, d)| run_point(&nets[k], d, &config.seeds[k].to_string(), config))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if config.seeds.len() > 1 {
        let per_seed = rows.len() / config.seeds.len();
        let mut means = Vec::with_capacity(per_seed);
        for i in 0..per_seed {
            let group: Vec<&ReportRow> = (0..config.seeds.len())
                .map(|k| &rows[k * per_seed + i])
                .collect();
            means.push(mean_row(&group));
        }
        rows.extend(means);
    }
    Ok(finish(config, demands, rows))
}

fn mean_row(group: &[&ReportRow]) -> ReportRow {
    let n = group.len() as f64;
    let mean = |f: &dyn Fn(&ReportRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
    let mean_opt = |f: &dyn Fn(&ReportRow) -> Option<f64>| {
        group
            .iter()
            .map(|r| f(r))
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / n)
    };
    let first = group[0];
    let objective = mean(&|r| r.objective);
    let bound = mean_opt(&|r| r.bound);
    ReportRow {
        demand: first.demand,
        method: first.method,
        objective_kind: first.objective_kind.clone(),
        objective,
        bound,
        sum_load_mc: mean_opt(&|r| r.sum_load_mc),
        sum_load_sc: mean_opt(&|r| r.sum_load_sc),
        max_load_mc: mean_opt(&|r| r.max_load_mc),
        max_load_sc: mean_opt(&|r| r.max_load_sc),
        jt_ue_count: mean(&|r| r.jt_ue_count),
        seconds: mean(&|r| r.seconds),
        seed: "mean".into(),
        status: if group.iter().all(|r| r.status == "ok") {
            "ok".into()
        } else {
            "mixed".into()
        },
        bound_gap: mean_opt(&|r| r.bound_gap),
        loads: Vec::new(),
        nodes_explored: None,
        adjustments: None,
    }
}

fn finish(config: &ExperimentConfig, demands: Vec<f64>, rows: Vec<ReportRow>) -> ExperimentReport {
    let gap_summary = config
        .methods
        .iter()
        .filter(|&&m| m != Method::Bound)
        .filter_map(|&m| {
            let gaps: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == m && r.seed != "mean")
                .filter_map(|r| r.bound_gap)
                .collect();
            (!gaps.is_empty()).then(|| GapSummary {
                method: m,
                mean_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
                max_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                rows: gaps.len(),
            })
        })
        .collect();
    ExperimentReport {
        config: config.clone(),
        demands,
        rows,
        gap_summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Cell, UserEquipment};
    use approx::assert_relative_eq;

    fn single_cell() -> NetworkInstance {
        let cell = Cell {
            id: 0,
            kind: CellKind::Macro,
            position: [0.0, 0.0],
            power_per_ru: 1.0,
        };
        let ue = UserEquipment {
            id: 0,
            position: [0.0, 0.0],
            demand: 1.0,
            home_cell: 0,
            candidates: vec![0],
        };
        NetworkInstance::new(vec![cell], vec![ue], vec![vec![3.0]], 1.0, 2, 1.0).unwrap()
    }

    fn config_for(net: NetworkInstance, methods: Vec<Method>, demands: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            instance: Some(net),
            methods,
            demand: DemandSpec::Values(demands),
            seeds: vec![0],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn baseline_single_cell_matches_closed_form() {
        let cfg = config_for(single_cell(), vec![Method::Baseline], vec![1.0]);
        let rep = run_experiment(&cfg, 0).unwrap();
        assert_eq!(rep.rows.len(), 1);
        let row = &rep.rows[0];
        assert_relative_eq!(row.objective, 1.0 / (2.0 * 4f64.log2()), max_relative = 1e-9);
        assert_eq!(row.jt_ue_count, 0.0);
        assert_eq!(row.status, "ok");
        assert_eq!(row.max_load_sc, Some(0.0));
    }

    #[test]
    fn csv_shapes() {
        let cfg = config_for(single_cell(), vec![], vec![1.0]);
        let rep = run_experiment(&cfg, 0).unwrap();
        let text = render_report(&rep, ReportFormat::Csv).unwrap();
        assert_eq!(text, CSV_COLUMNS.join(",") + "\n");

        let cfg = config_for(single_cell(), vec![Method::Baseline], vec![1.0]);
        let rep = run_experiment(&cfg, 0).unwrap();
        let text = render_report(&rep, ReportFormat::Csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text, render_report(&rep, ReportFormat::Csv).unwrap());
        let json = render_report(&rep, ReportFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["rows"][0]["method"], "baseline");
    }

    #[test]
    fn parse_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("greedy".parse::<Method>().is_err());
        assert_eq!(parse_objective("max").unwrap(), Objective::MaxLoad);
        assert!(parse_objective("avg").is_err());
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = config_for(single_cell(), vec![Method::Baseline], vec![-1.0]);
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.demand = DemandSpec::Values(vec![1.0]);
        cfg.methods = vec![Method::Minl, Method::Minl];
        assert!(cfg.validate().is_err());
        cfg.methods = vec![Method::Minl];
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let net = single_cell();
        let d = demand_for_max_load(&net, 0.5).unwrap();
        assert_relative_eq!(baseline_max_load(&net, d).unwrap(), 0.5, max_relative = 1e-9);
    }
}
