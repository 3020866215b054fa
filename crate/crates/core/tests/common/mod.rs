#![allow(dead_code)]

use jtcouple::experiment::demand_for_max_load;
use jtcouple::milp::{MilpModel, RowRole, Sense, VarRole};
use jtcouple::netmodel::{generate_hexnet, Association, NetworkInstance, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Desk-scale instance whose baseline max load equals `target`.
pub fn desk_instance(seed: u64, target: f64) -> NetworkInstance {
    let net = generate_hexnet(&ScenarioConfig::desk(), seed).unwrap();
    let d = demand_for_max_load(&net, target).unwrap();
    net.with_uniform_demand(d).unwrap()
}

/// One hexagon with a macro cell, 3 small cells and 6 UEs, 2 candidates each.
pub fn tiny_scenario() -> ScenarioConfig {
    ScenarioConfig {
        hexagons: 1,
        small_cells_per_hexagon: 3,
        ues_per_hexagon: 6,
        candidates: 2,
        ..ScenarioConfig::default()
    }
}

/// Tiny instance (n = 4, m = 6, k = 2) with baseline max load `target`.
pub fn tiny_instance(seed: u64, target: f64) -> NetworkInstance {
    let net = generate_hexnet(&tiny_scenario(), seed).unwrap();
    let d = demand_for_max_load(&net, target).unwrap();
    net.with_uniform_demand(d).unwrap()
}

pub fn random_association(net: &NetworkInstance, rng: &mut impl Rng) -> Association {
    let choice: Vec<usize> = (0..net.n_ues())
        .map(|j| rng.random_range(0..net.option_count(j)))
        .collect();
    Association::from_options(net, &choice).unwrap()
}

pub fn le(a: &[f64], b: &[f64], slack: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + slack)
}

pub fn inf_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Optimum of the linear model by enumerating every option choice. For a
/// fixed choice all rows are monotone in the continuous variables, so the
/// least point satisfying them (Jacobi iteration from the lower bounds,
/// stopped on a relative change since interference is in watts)
/// minimizes any non-negative cost. Returns `None` when no choice keeps
/// every variable within its upper bound.
pub fn linear_model_optimum(model: &MilpModel) -> Option<(Vec<usize>, f64)> {
    let sizes: Vec<usize> = model.options.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mut index in 0..total {
        let choice: Vec<usize> = sizes
            .iter()
            .map(|&s| {
                let c = index % s;
                index /= s;
                c
            })
            .collect();
        if let Some(v) = linear_leaf_value(model, &choice) {
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((choice, v));
            }
        }
    }
    best
}

pub fn linear_leaf_value(model: &MilpModel, choice: &[usize]) -> Option<f64> {
    let mut val: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    for (k, v) in model.variables.iter().enumerate() {
        if let VarRole::Choice { ue, option } = v.role {
            val[k] = if choice[ue] == option { 1.0 } else { 0.0 };
        }
    }
    let defined = |role: RowRole| -> Option<usize> {
        model.variables.iter().position(|v| match (role, v.role) {
            (RowRole::LoadDefinition { cell }, VarRole::Load { cell: c }) => c == cell,
            (RowRole::InterferenceLink { ue, option }, VarRole::Interference { ue: u, option: o })
            | (RowRole::InterferenceFloor { ue, option }, VarRole::Interference { ue: u, option: o }) => {
                u == ue && o == option
            }
            (RowRole::Epigraph { .. }, VarRole::Epigraph) => true,
            _ => false,
        })
    };
    let rows: Vec<(usize, &jtcouple::milp::Constraint)> = model
        .constraints
        .iter()
        .filter_map(|c| defined(c.role).map(|d| (d, c)))
        .collect();
    for c in &model.constraints {
        if let RowRole::Selection { .. } = c.role {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * val[v]).sum();
            assert!(c.sense == Sense::Eq && (lhs - c.rhs).abs() < 1e-12);
        }
    }
    for _ in 0..100_000 {
        let mut next = val.clone();
        for (n, v) in next.iter_mut().zip(&model.variables) {
            if !matches!(v.role, VarRole::Choice { .. }) {
                *n = v.lower;
            }
        }
        for &(d, c) in &rows {
            let own = c.coefficient(d);
            let rest: f64 = c
                .terms
                .iter()
                .filter(|(v, _)| *v != d)
                .map(|&(v, a)| a * val[v])
                .sum();
            next[d] = next[d].max((c.rhs - rest) / own);
        }
        let delta = next
            .iter()
            .zip(&val)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) })
            .fold(0.0, f64::max);
        val = next;
        if model
            .variables
            .iter()
            .zip(&val)
            .any(|(v, &x)| x > v.upper + 1e-9)
        {
            return None;
        }
        if delta <= 1e-14 {
            break;
        }
    }
    Some(model.cost.iter().map(|&(v, a)| a * val[v]).sum())
}
