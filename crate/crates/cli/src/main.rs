use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use jtcouple::coupling::{fixed_point_load, SolverOptions};
use jtcouple::experiment::{
    brute_force_optimum, demand_for_max_load, find_feasible_association, objective_label, parse_objective,
    run_sweep, write_report, DemandSpec, ExperimentConfig, Method, ReportFormat,
};
use jtcouple::milp::{export_lp, pipeline_model, solve_branch_and_bound, BnbOptions, Objective, PipelineOptions};
use jtcouple::netmodel::{build_sat_reduction, generate_hexnet, CnfFormula, NetworkInstance, ScenarioConfig};
use jtcouple::{Association, Error};

#[derive(Parser)]
#[command(name = "jtcouple", version, about = "Load coupling and association optimization for JT HetNets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write it as JSON.
    Generate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a demand sweep over seeds and methods.
    Run(RunArgs),
    /// Certify a lower bound on the optimal objective.
    Bound {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the linearized association model in LP format.
    ExportLp {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the gadget network for a 3-CNF formula and decide its feasibility.
    Sat {
        /// DIMACS CNF file with three literals per clause.
        input: PathBuf,
        /// Where to write the gadget scenario JSON.
        #[arg(long)]
        scenario_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum over every association of a small scenario.
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "sum", value_parser = objective_arg)]
        objective: Objective,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Scenario JSON to load instead of generating one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Generate the 19-hexagon layout instead of the desk-scale one.
    #[arg(long, conflicts_with = "scenario")]
    full_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform demand per UE, bit/s.
    #[arg(long, conflicts_with = "max_load")]
    demand: Option<f64>,
    /// Calibrate the uniform demand so the home-cell baseline peaks at this load.
    #[arg(long)]
    max_load: Option<f64>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "sum", value_parser = objective_arg)]
    objective: Objective,
    #[command(flatten)]
    lb: LbArgs,
    #[arg(long, default_value_t = BnbOptions::default().node_limit)]
    node_limit: usize,
}

#[derive(Args)]
struct LbArgs {
    /// Add interference floor rows (default).
    #[arg(long, overrides_with = "no_lb")]
    lb: bool,
    /// Drop the interference floor rows.
    #[arg(long, overrides_with = "lb")]
    no_lb: bool,
}

impl LbArgs {
    fn enabled(&self) -> bool {
        !self.no_lb
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "sum", value_parser = objective_arg)]
    objective: Objective,
    /// Comma-separated subset of baseline, minl, milp, milp+minl, bound.
    #[arg(long, default_value = "baseline,minl,milp,milp+minl,bound", value_parser = methods_arg)]
    methods: Methods,
    /// Comma-separated demands in bit/s; calibrated when omitted.
    #[arg(long, value_delimiter = ',')]
    demand: Option<Vec<f64>>,
    /// Seeds as a comma list or a half-open range `a..b`.
    #[arg(long, default_value = "0..5", value_parser = seeds_arg)]
    seeds: Seeds,
    /// Scenario JSON used for every seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, conflicts_with = "scenario")]
    full_scale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = format_arg)]
    format: ReportFormat,
    /// MinL sweeps.
    #[arg(long, default_value_t = 3)]
    lambda: usize,
    /// MinL condition-test iterations.
    #[arg(long, default_value_t = 5)]
    tau: usize,
    #[command(flatten)]
    lb: LbArgs,
    #[arg(long, default_value_t = jtcouple::experiment::DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// Record wall-clock seconds in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone)]
struct Methods(Vec<Method>);

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn objective_arg(s: &str) -> Result<Objective, String> {
    parse_objective(s).map_err(|e| e.to_string())
}

fn format_arg(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn methods_arg(s: &str) -> Result<Methods, String> {
    s.split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| m.parse().map_err(|e: Error| e.to_string()))
        .collect::<Result<_, _>>()
        .map(Methods)
}

fn seeds_arg(s: &str) -> Result<Seeds, String> {
    let bad = |e: std::num::ParseIntError| format!("bad seed list {s:?}: {e}");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().map_err(bad)?, b.trim().parse::<u64>().map_err(bad)?);
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(bad))
        .collect::<Result<_, _>>()
        .map(Seeds)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::Infeasible => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn scenario_config(full_scale: bool) -> ScenarioConfig {
    if full_scale {
        ScenarioConfig::default()
    } else {
        ScenarioConfig::desk()
    }
}

fn load_instance(path: &Path) -> jtcouple::Result<NetworkInstance> {
    NetworkInstance::load_json(path)
}

impl InstanceArgs {
    fn resolve(&self) -> jtcouple::Result<NetworkInstance> {
        let net = match &self.scenario {
            Some(p) => load_instance(p)?,
            None => generate_hexnet(&scenario_config(self.full_scale), self.seed)?,
        };
        match (self.demand, self.max_load) {
            (Some(d), _) => net.with_uniform_demand(d),
            (None, Some(t)) => {
                let d = demand_for_max_load(&net, t)?;
                net.with_uniform_demand(d)
            }
            (None, None) => Ok(net),
        }
    }
}

impl ModelArgs {
    fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            lb_constraints: self.lb.enabled(),
            bnb: BnbOptions {
                node_limit: self.node_limit,
                ..BnbOptions::default()
            },
            ..PipelineOptions::default()
        }
    }
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> jtcouple::Result<()>) -> jtcouple::Result<()> {
    match out {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> jtcouple::Result<()> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn run(args: &RunArgs) -> jtcouple::Result<u8> {
    let mut config = ExperimentConfig {
        scenario: scenario_config(args.full_scale),
        instance: args.scenario.as_deref().map(load_instance).transpose()?,
        methods: args.methods.0.clone(),
        objective: args.objective,
        seeds: args.seeds.0.clone(),
        timings: args.timings,
        ..ExperimentConfig::default()
    };
    if let Some(d) = &args.demand {
        config.demand = DemandSpec::Values(d.clone());
    }
    config.minl.lambda = args.lambda;
    config.minl.tau = args.tau;
    config.pipeline.lb_constraints = args.lb.enabled();
    config.pipeline.bnb.node_limit = args.node_limit;
    let report = run_sweep(&config)?;
    emit(args.out.as_deref(), |w| write_report(&report, args.format, w))?;
    let stalled = report
        .rows
        .iter()
        .filter(|r| r.seed != "mean")
        .any(|r| r.status == "not_converged" || r.status == "error");
    Ok(if stalled { 3 } else { 0 })
}

fn bound(instance: &InstanceArgs, model: &ModelArgs, out: Option<&Path>) -> jtcouple::Result<u8> {
    let net = instance.resolve()?;
    let opts = model.pipeline();
    let milp = pipeline_model(&net, model.objective, &opts)?;
    let sol = solve_branch_and_bound(&milp, &opts.bnb)?;
    let baseline = fixed_point_load(&Association::home_only(&net), &net, &SolverOptions::default())?;
    emit_json(
        out,
        &json!({
            "objective_kind": objective_label(model.objective),
            "bound": sol.bound,
            "status": sol.status,
            "nodes_explored": sol.nodes_explored,
            "baseline_objective": baseline.converged().then(|| model.objective.of(&baseline.load)),
        }),
    )?;
    Ok(0)
}

fn export(instance: &InstanceArgs, model: &ModelArgs, out: Option<&Path>) -> jtcouple::Result<u8> {
    let net = instance.resolve()?;
    let text = export_lp(&pipeline_model(&net, model.objective, &model.pipeline())?);
    emit(out, |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(0)
}

fn sat(input: &Path, scenario_out: Option<&Path>, out: Option<&Path>) -> jtcouple::Result<u8> {
    let formula = CnfFormula::from_dimacs(&fs::read_to_string(input)?)?;
    let net = build_sat_reduction(&formula)?;
    if let Some(p) = scenario_out {
        net.save_json(p)?;
    }
    let found = find_feasible_association(&net)?;
    emit_json(
        out,
        &json!({
            "variables": formula.num_vars,
            "clauses": formula.clauses.len(),
            "cells": net.n_cells(),
            "ues": net.n_ues(),
            "feasible": found.is_some(),
            "satisfiable": formula.solve_by_truth_table().is_some(),
            "association": found,
        }),
    )?;
    Ok(0)
}

fn oracle(instance: &InstanceArgs, objective: Objective, out: Option<&Path>) -> jtcouple::Result<u8> {
    let net = instance.resolve()?;
    let (assoc, value) = brute_force_optimum(&net, objective)?;
    let report = fixed_point_load(&assoc, &net, &SolverOptions::default())?;
    emit_json(
        out,
        &json!({
            "objective_kind": objective_label(objective),
            "objective": value,
            "association": assoc,
            "loads": report.load,
        }),
    )?;
    Ok(0)
}

fn dispatch(cli: &Cli) -> jtcouple::Result<u8> {
    match &cli.command {
        Command::Generate { instance, out } => {
            let text = instance.resolve()?.to_json()?;
            emit(out.as_deref(), |w| Ok(writeln!(w, "{text}")?))?;
            Ok(0)
        }
        Command::Run(args) => run(args),
        Command::Bound { instance, model, out } => bound(instance, model, out.as_deref()),
        Command::ExportLp { instance, model, out } => export(instance, model, out.as_deref()),
        Command::Sat {
            input,
            scenario_out,
            out,
        } => sat(input, scenario_out.as_deref(), out.as_deref()),
        Command::Oracle {
            instance,
            objective,
            out,
        } => oracle(instance, *objective, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
