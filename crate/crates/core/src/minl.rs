//! Single-link adjustments checked against sufficient and necessary
//! improvement conditions, and the MinL sweep built on them.

use serde::{Deserialize, Serialize};

use crate::coupling::{
    fixed_point_from, fixed_point_load, CouplingMap, FixedPointReport, LoadVector, SinrVector,
    SolverOptions,
};
use crate::netmodel::{Association, CellId, NetworkInstance, UeId};
use crate::{Error, Result};

/// An association with its converged fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentState {
    pub assoc: Association,
    pub load: LoadVector,
    pub sinr: SinrVector,
}

impl AdjustmentState {
    pub fn new(net: &NetworkInstance, assoc: Association, opts: &SolverOptions) -> Result<Self> {
        assoc.validate(net)?;
        let r = fixed_point_load(&assoc, net, opts)?.require_converged()?;
        Ok(Self::from_report(assoc, r))
    }

    fn from_report(assoc: Association, r: FixedPointReport) -> Self {
        Self {
            assoc,
            load: r.load,
            sinr: r.sinr,
        }
    }

    fn report(&self, net: &NetworkInstance) -> Result<FixedPointReport> {
        // Re-derive the report fields without another solve.
        let map = CouplingMap::new(net, &self.assoc)?;
        let next = map.apply(&self.load);
        let residual = next
            .iter()
            .zip(&self.load)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(FixedPointReport {
            feasible: self.load.iter().all(|&v| v <= 1.0 + residual.max(1e-9)),
            load: self.load.clone(),
            sinr: self.sinr.clone(),
            iterations: 0,
            residual,
            status: crate::coupling::FixedPointStatus::Converged,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    SufficientMet,
    NecessaryFailed,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentDecision {
    pub accepted: bool,
    pub new_state: Option<AdjustmentState>,
    pub iterations_used: usize,
    pub trigger: Trigger,
}

impl AdjustmentDecision {
    fn reject(iterations_used: usize, trigger: Trigger) -> Self {
        Self {
            accepted: false,
            new_state: None,
            iterations_used,
            trigger,
        }
    }
}

fn check_candidate(net: &NetworkInstance, v: CellId, u: UeId) -> Result<()> {
    if u >= net.n_ues() || v >= net.n_cells() {
        return Err(Error::Precondition(format!("pair ({v}, {u}) out of range")));
    }
    if !net.ues()[u].candidates.contains(&v) {
        return Err(Error::Precondition(format!(
            "cell {v} is not a candidate of UE {u}"
        )));
    }
    Ok(())
}

fn accept(
    net: &NetworkInstance,
    assoc: Association,
    from: &[f64],
    t: usize,
    opts: &SolverOptions,
) -> Result<AdjustmentDecision> {
    let r = fixed_point_from(&assoc, net, from, opts)?.require_converged()?;
    Ok(AdjustmentDecision {
        accepted: true,
        new_state: Some(AdjustmentState::from_report(assoc, r)),
        iterations_used: t,
        trigger: Trigger::SufficientMet,
    })
}

/// Tests serving UE `u` additionally from cell `v`.
pub fn try_add_link(
    state: &AdjustmentState,
    v: CellId,
    u: UeId,
    tau: usize,
    net: &NetworkInstance,
) -> Result<AdjustmentDecision> {
    try_add_link_with(state, v, u, tau, net, &SolverOptions::default())
}

pub fn try_add_link_with(
    state: &AdjustmentState,
    v: CellId,
    u: UeId,
    tau: usize,
    net: &NetworkInstance,
    opts: &SolverOptions,
) -> Result<AdjustmentDecision> {
    check_candidate(net, v, u)?;
    if state.assoc.serves(v, u) {
        return Err(Error::Precondition(format!("cell {v} already serves UE {u}")));
    }
    if tau == 0 {
        return Ok(AdjustmentDecision::reject(0, Trigger::Exhausted));
    }
    let old = &state.assoc;
    let new = old.with_link(v, u);
    // x-side: SINR from the new association, load from the old one.
    let x_map = CouplingMap::mixed(net, &new, old)?;
    // SINR-side: load from the new association, SINR from the old one.
    let g_map = CouplingMap::mixed(net, old, &new)?;
    let full = CouplingMap::new(net, &new)?;
    let mut x = state.load.clone();
    let mut g = state.sinr.clone();
    let mut sinr = vec![0.0; net.n_ues()];
    let mut load = vec![0.0; net.n_cells()];
    for t in 1..=tau {
        x = x_map.apply(&x);
        g = g_map.apply_dual(&g);
        full.sinr_into(&x, &mut sinr);
        if full.cell_load(&sinr, v) <= x[v] {
            return accept(net, new, &state.load, t, opts);
        }
        full.load_into(&g, &mut load);
        if full.sinr_of(&load, u) <= g[u] {
            return Ok(AdjustmentDecision::reject(t, Trigger::NecessaryFailed));
        }
    }
    Ok(AdjustmentDecision::reject(tau, Trigger::Exhausted))
}

/// Tests dropping cell `v` from the serving set of UE `u`.
pub fn try_remove_link(
    state: &AdjustmentState,
    v: CellId,
    u: UeId,
    tau: usize,
    net: &NetworkInstance,
) -> Result<AdjustmentDecision> {
    try_remove_link_with(state, v, u, tau, net, &SolverOptions::default())
}

pub fn try_remove_link_with(
    state: &AdjustmentState,
    v: CellId,
    u: UeId,
    tau: usize,
    net: &NetworkInstance,
    opts: &SolverOptions,
) -> Result<AdjustmentDecision> {
    check_candidate(net, v, u)?;
    if net.ues()[u].home_cell == v {
        return Err(Error::Precondition(format!(
            "cell {v} is the home cell of UE {u}"
        )));
    }
    if !state.assoc.serves(v, u) {
        return Err(Error::Precondition(format!("cell {v} does not serve UE {u}")));
    }
    if tau == 0 {
        return Ok(AdjustmentDecision::reject(0, Trigger::Exhausted));
    }
    let old = &state.assoc;
    let new = old.without_link(v, u);
    // x-side: SINR from the new association, load from the old one.
    let x_map = CouplingMap::mixed(net, &new, old)?;
    // SINR-side: load from the new association, SINR from the old one.
    let g_map = CouplingMap::mixed(net, old, &new)?;
    let full = CouplingMap::new(net, &new)?;
    let mut x = state.load.clone();
    let mut g = state.sinr.clone();
    let mut sinr = vec![0.0; net.n_ues()];
    let mut load = vec![0.0; net.n_cells()];
    for t in 1..=tau {
        x = x_map.apply(&x);
        g = g_map.apply_dual(&g);
        full.load_into(&g, &mut load);
        if full.sinr_of(&load, u) >= g[u] {
            return accept(net, new, &state.load, t, opts);
        }
        full.sinr_into(&x, &mut sinr);
        if full.cell_load(&sinr, v) >= x[v] {
            return Ok(AdjustmentDecision::reject(t, Trigger::NecessaryFailed));
        }
    }
    Ok(AdjustmentDecision::reject(tau, Trigger::Exhausted))
}

/// Cell `v` plus every cell whose received power at a UE served by `v`
/// (after adding `u`) is within `threshold_db` of the strongest interferer
/// at that UE.
pub fn neighborhood(
    assoc: &Association,
    v: CellId,
    u: UeId,
    threshold_db: f64,
    net: &NetworkInstance,
) -> Vec<CellId> {
    let mut keep = vec![false; net.n_cells()];
    keep[v] = true;
    let scale = 10f64.powf(-threshold_db / 10.0);
    let mut ues = assoc.served_by(v);
    if !ues.contains(&u) {
        ues.push(u);
    }
    for j in ues {
        let rx = net.rx_at_ue(j);
        let serving = |i: usize| assoc.serves(i, j) || (j == u && i == v);
        let strongest = rx
            .iter()
            .enumerate()
            .filter(|&(i, _)| !serving(i))
            .map(|(_, &r)| r)
            .fold(0.0, f64::max);
        if strongest <= 0.0 {
            continue;
        }
        for (i, &r) in rx.iter().enumerate() {
            if !serving(i) && r >= strongest * scale {
                keep[i] = true;
            }
        }
    }
    (0..net.n_cells()).filter(|&i| keep[i]).collect()
}

/// Link addition judged on a neighborhood only: cells outside
/// `neighborhood` keep their loads while the others iterate. Accepts on a
/// strict decrease at `v`; otherwise falls back to the necessary test.
pub fn try_add_link_local(
    state: &AdjustmentState,
    v: CellId,
    u: UeId,
    tau: usize,
    neighborhood: &[CellId],
    net: &NetworkInstance,
    opts: &SolverOptions,
) -> Result<AdjustmentDecision> {
    check_candidate(net, v, u)?;
    if state.assoc.serves(v, u) {
        return Err(Error::Precondition(format!("cell {v} already serves UE {u}")));
    }
    if !neighborhood.contains(&v) {
        return Err(Error::Precondition(format!(
            "neighborhood must contain cell {v}"
        )));
    }
    if tau == 0 {
        return Ok(AdjustmentDecision::reject(0, Trigger::Exhausted));
    }
    let old = &state.assoc;
    let new = old.with_link(v, u);
    let mixed = CouplingMap::mixed(net, &new, old)?;
    let g_map = CouplingMap::mixed(net, old, &new)?;
    let full = CouplingMap::new(net, &new)?;
    let mut active = vec![false; net.n_cells()];
    for &i in neighborhood {
        active[i] = true;
    }
    let mut x = state.load.clone();
    let mut g = state.sinr.clone();
    let mut sinr = vec![0.0; net.n_ues()];
    let mut load = vec![0.0; net.n_cells()];
    for t in 1..=tau {
        let next = mixed.apply(&x);
        for i in 0..x.len() {
            if active[i] {
                x[i] = next[i];
            }
        }
        g = g_map.apply_dual(&g);
        full.sinr_into(&x, &mut sinr);
        if full.cell_load(&sinr, v) < x[v] {
            return accept(net, new, &state.load, t, opts);
        }
        full.load_into(&g, &mut load);
        if full.sinr_of(&load, u) <= g[u] {
            return Ok(AdjustmentDecision::reject(t, Trigger::NecessaryFailed));
        }
    }
    Ok(AdjustmentDecision::reject(tau, Trigger::Exhausted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinlOptions {
    /// Maximum number of sweeps.
    pub lambda: usize,
    /// Condition-test iterations per candidate link.
    pub tau: usize,
    /// Judge additions on a neighborhood within this many dB of the
    /// strongest interferer; `None` uses the whole network.
    pub local_threshold_db: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for MinlOptions {
    fn default() -> Self {
        Self {
            lambda: 3,
            tau: 5,
            local_threshold_db: None,
            solver: SolverOptions::default(),
        }
    }
}

/// One accepted link change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub cell: CellId,
    pub ue: UeId,
    pub added: bool,
    pub round: usize,
    pub load_before: LoadVector,
    pub load_after: LoadVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinlOutcome {
    pub assoc: Association,
    pub report: FixedPointReport,
    pub trace: Vec<Adjustment>,
    pub rounds: usize,
    pub evaluations: usize,
}

/// Runs at most `lambda` sweeps of single-link adjustments from `init`.
pub fn minl(
    net: &NetworkInstance,
    init: &Association,
    lambda: usize,
    tau: usize,
) -> Result<(Association, FixedPointReport)> {
    let out = minl_with(
        net,
        init,
        &MinlOptions {
            lambda,
            tau,
            ..MinlOptions::default()
        },
    )?;
    Ok((out.assoc, out.report))
}

pub fn minl_with(
    net: &NetworkInstance,
    init: &Association,
    opts: &MinlOptions,
) -> Result<MinlOutcome> {
    if opts.lambda == 0 || opts.tau == 0 {
        return Err(Error::InvalidConfig("lambda and tau must be at least 1".into()));
    }
    let mut state = AdjustmentState::new(net, init.clone(), &opts.solver)?;
    let mut trace = Vec::new();
    let mut rounds = 0;
    let mut evaluations = 0;
    for round in 0..opts.lambda {
        rounds += 1;
        let mut changed = false;
        for v in 0..net.n_cells() {
            for u in 0..net.n_ues() {
                let ue = &net.ues()[u];
                if ue.home_cell == v || !ue.candidates.contains(&v) {
                    continue;
                }
                evaluations += 1;
                let added = !state.assoc.serves(v, u);
                let d = if !added {
                    try_remove_link_with(&state, v, u, opts.tau, net, &opts.solver)?
                } else if let Some(db) = opts.local_threshold_db {
                    let hood = neighborhood(&state.assoc, v, u, db, net);
                    try_add_link_local(&state, v, u, opts.tau, &hood, net, &opts.solver)?
                } else {
                    try_add_link_with(&state, v, u, opts.tau, net, &opts.solver)?
                };
                if let Some(next) = d.new_state {
                    log::debug!(
                        "round {round}: {} link ({v}, {u})",
                        if added { "added" } else { "removed" }
                    );
                    trace.push(Adjustment {
                        cell: v,
                        ue: u,
                        added,
                        round,
                        load_before: state.load.clone(),
                        load_after: next.load.clone(),
                    });
                    state = next;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let report = state.report(net)?;
    Ok(MinlOutcome {
        assoc: state.assoc,
        report,
        trace,
        rounds,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Cell, CellKind, UserEquipment};

    fn instance(gain: Vec<Vec<f64>>, noise: f64, demand: f64, cands: Vec<Vec<CellId>>) -> NetworkInstance {
        let n = gain.len();
        let cells = (0..n)
            .map(|i| Cell {
                id: i,
                kind: CellKind::Macro,
                position: [0.0, 0.0],
                power_per_ru: 1.0,
            })
            .collect();
        let ues = cands
            .into_iter()
            .enumerate()
            .map(|(j, c)| UserEquipment {
                id: j,
                position: [0.0, 0.0],
                demand,
                home_cell: c[0],
                candidates: c,
            })
            .collect();
        NetworkInstance::new(cells, ues, gain, noise, 1, 1.0).unwrap()
    }

    fn tight() -> SolverOptions {
        SolverOptions {
            tolerance: 1e-13,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn zero_gain_addition_fails_necessary_test() {
        let net = instance(
            vec![vec![1.0, 0.1], vec![0.0, 1.0]],
            0.1,
            0.2,
            vec![vec![0, 1], vec![1, 0]],
        );
        let s = AdjustmentState::new(&net, Association::home_only(&net), &tight()).unwrap();
        let d = try_add_link(&s, 1, 0, 5, &net).unwrap();
        assert!(!d.accepted);
        assert_eq!(d.trigger, Trigger::NecessaryFailed);
        assert_eq!(d.iterations_used, 1);
    }

    #[test]
    fn helpful_addition_is_accepted_and_lowers_all_loads() {
        // UE 0 hears its home cell weakly, and that cell's load drowns UE 1;
        // cell 1 hears UE 0 well.
        let net = instance(
            vec![vec![0.05, 1.0], vec![0.5, 0.5]],
            0.1,
            0.2,
            vec![vec![0, 1], vec![1, 0]],
        );
        let s = AdjustmentState::new(&net, Association::home_only(&net), &tight()).unwrap();
        let d = try_add_link(&s, 1, 0, 5, &net).unwrap();
        assert!(d.accepted, "{d:?}");
        assert_eq!(d.trigger, Trigger::SufficientMet);
        let before = fixed_point_load(&s.assoc, &net, &tight()).unwrap();
        let after_assoc = s.assoc.with_link(1, 0);
        let after = fixed_point_load(&after_assoc, &net, &tight()).unwrap();
        for i in 0..2 {
            assert!(after.load[i] < before.load[i]);
        }
        assert_eq!(d.new_state.unwrap().assoc, after_assoc);
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let net = instance(
            vec![vec![1.0, 0.1], vec![0.5, 1.0]],
            0.1,
            0.2,
            vec![vec![0, 1], vec![1, 0]],
        );
        let s = AdjustmentState::new(&net, Association::home_only(&net), &tight()).unwrap();
        let d = try_add_link(&s, 1, 0, 0, &net).unwrap();
        assert_eq!((d.accepted, d.trigger, d.iterations_used), (false, Trigger::Exhausted, 0));
        let s2 = AdjustmentState::new(&net, s.assoc.with_link(1, 0), &tight()).unwrap();
        let d = try_remove_link(&s2, 1, 0, 0, &net).unwrap();
        assert_eq!((d.accepted, d.trigger), (false, Trigger::Exhausted));
    }

    #[test]
    fn preconditions() {
        let net = instance(
            vec![vec![1.0, 0.1], vec![0.5, 1.0]],
            0.1,
            0.2,
            vec![vec![0], vec![1, 0]],
        );
        let s = AdjustmentState::new(&net, Association::home_only(&net), &tight()).unwrap();
        assert!(try_add_link(&s, 1, 0, 5, &net).is_err());
        assert!(try_add_link(&s, 1, 1, 5, &net).is_err());
        assert!(try_remove_link(&s, 1, 1, 5, &net).is_err());
        assert!(try_remove_link(&s, 0, 1, 5, &net).is_err());
    }

    #[test]
    fn zero_gain_removal_is_accepted() {
        let net = instance(
            vec![vec![1.0, 0.1], vec![0.0, 1.0]],
            0.1,
            0.2,
            vec![vec![0, 1], vec![1, 0]],
        );
        let assoc = Association::home_only(&net).with_link(1, 0);
        let s = AdjustmentState::new(&net, assoc, &tight()).unwrap();
        let d = try_remove_link_with(&s, 1, 0, 5, &net, &tight()).unwrap();
        assert!(d.accepted);
        let after = d.new_state.unwrap();
        for i in 0..2 {
            assert!(after.load[i] <= s.load[i] + 1e-12);
        }
    }

    #[test]
    fn removing_strong_helper_is_exhausted() {
        // No interference: every cross gain is zero except the helper.
        let net = instance(
            vec![vec![0.1, 0.0], vec![1.0, 1.0]],
            0.1,
            0.05,
            vec![vec![0, 1], vec![1]],
        );
        let assoc = Association::home_only(&net).with_link(1, 0);
        let s = AdjustmentState::new(&net, assoc, &tight()).unwrap();
        let d = try_remove_link(&s, 1, 0, 5, &net).unwrap();
        assert_eq!((d.accepted, d.trigger, d.iterations_used), (false, Trigger::Exhausted, 5));
    }

    #[test]
    fn isolated_cells_are_left_alone() {
        let net = instance(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            0.1,
            0.2,
            vec![vec![0], vec![1]],
        );
        let init = Association::home_only(&net);
        let out = minl_with(&net, &init, &MinlOptions::default()).unwrap();
        assert_eq!(out.assoc, init);
        assert_eq!(out.rounds, 1);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn neighborhood_contains_v_and_strong_interferers() {
        let net = instance(
            vec![
                vec![1.0, 0.5, 0.1],
                vec![0.5, 1.0, 0.1],
                vec![1e-6, 1e-5, 1.0],
                vec![0.4, 0.4, 0.1],
            ],
            0.1,
            0.2,
            vec![vec![0, 1], vec![1, 0], vec![2]],
        );
        let assoc = Association::home_only(&net);
        let h = neighborhood(&assoc, 1, 0, 30.0, &net);
        assert_eq!(h, vec![0, 1, 3]);
        let h = neighborhood(&assoc, 1, 0, 70.0, &net);
        assert!(h.contains(&2));
    }

    #[test]
    fn lambda_refines_monotonically() {
        let net = instance(
            vec![
                vec![1.0, 0.3, 0.2, 0.1],
                vec![0.6, 1.0, 0.4, 0.3],
                vec![0.2, 0.5, 1.0, 0.7],
            ],
            0.1,
            0.15,
            vec![vec![0, 1], vec![1, 0], vec![2, 1], vec![2, 1]],
        );
        let init = Association::home_only(&net);
        let (_, r1) = minl(&net, &init, 1, 5).unwrap();
        let (_, r3) = minl(&net, &init, 3, 5).unwrap();
        let base = fixed_point_load(&init, &net, &SolverOptions::default()).unwrap();
        assert!(r3.sum_load() <= r1.sum_load() + 1e-9);
        assert!(r1.sum_load() <= base.sum_load() + 1e-9);
        assert!(minl(&net, &init, 0, 5).is_err());
    }
}
