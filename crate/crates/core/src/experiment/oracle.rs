use rayon::prelude::*;

use crate::coupling::{
    fixed_point_load, fixed_point_mixed, FixedPointReport, FixedPointStatus, SolverOptions,
};
use crate::milp::Objective;
use crate::netmodel::{Association, CellId, NetworkInstance};
use crate::{Error, Result};

/// Largest enumeration [`brute_force_optimum`] accepts.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

const FEASIBILITY_TOL: f64 = 1e-9;

/// Number of associations of `net`.
pub fn association_count(net: &NetworkInstance) -> u128 {
    (0..net.n_ues())
        .map(|j| net.option_count(j) as u128)
        .product()
}

/// Every association of `net` in canonical order: UE 0's option index
/// varies fastest.
pub struct AssociationSpace {
    options: Vec<Vec<Vec<CellId>>>,
    total: u128,
}

impl AssociationSpace {
    pub fn new(net: &NetworkInstance) -> Self {
        Self {
            options: (0..net.n_ues()).map(|j| net.options(j)).collect(),
            total: association_count(net),
        }
    }

    pub fn len(&self) -> u128 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn get(&self, mut index: u128) -> Association {
        let mut sets = Vec::with_capacity(self.options.len());
        for opts in &self.options {
            let k = opts.len() as u128;
            sets.push(opts[(index % k) as usize].clone());
            index /= k;
        }
        Association::from_sets(sets)
    }
}

/// Options for evaluating one association during enumeration: iteration
/// from zero is monotone, so any iterate above one settles infeasibility.
fn feasibility_options() -> SolverOptions {
    SolverOptions {
        tolerance: 1e-12,
        max_iterations: 100_000,
        divergence_cap: 1.0 + FEASIBILITY_TOL,
    }
}

/// Converged fixed point with every load at most one, if any.
pub fn feasible_fixed_point(assoc: &Association, net: &NetworkInstance) -> Result<Option<FixedPointReport>> {
    let r = fixed_point_load(assoc, net, &feasibility_options())?;
    Ok((r.converged() && r.max_load() <= 1.0 + FEASIBILITY_TOL).then_some(r))
}

/// Best feasible association by exhaustive enumeration of true fixed
/// points. Ties go to the first association in canonical order.
pub fn brute_force_optimum(
    net: &NetworkInstance,
    objective: Objective,
) -> Result<(Association, f64)> {
    let space = AssociationSpace::new(net);
    if space.len() > ENUMERATION_GUARD {
        return Err(Error::EnumerationTooLarge(space.len()));
    }
    let best = (0..space.len() as u64)
        .into_par_iter()
        .map(|k| -> Result<Option<(f64, u64)>> {
            let a = space.get(k as u128);
            Ok(feasible_fixed_point(&a, net)?.map(|r| (objective.of(&r.load), k)))
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (Some(x), Some(y)) => Some(if (y.0, y.1) < (x.0, x.1) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                })
            },
        )?;
    let (value, k) = best.ok_or(Error::Infeasible)?;
    Ok((space.get(k as u128), value))
}

/// Searches for an association whose fixed point keeps every load at most
/// one. Exhaustive over all associations, except that a partial choice is
/// abandoned once a lower bound on every completion already exceeds one:
/// undecided UEs count only toward their home cell, at the SINR they would
/// get from all their candidates. Returns the first feasible association in
/// canonical order.
pub fn find_feasible_association(net: &NetworkInstance) -> Result<Option<Association>> {
    let m = net.n_ues();
    let options: Vec<Vec<Vec<CellId>>> = (0..m).map(|j| net.options(j)).collect();
    let home = Association::home_only(net);
    let all = Association::all_candidates(net);
    let opts = feasibility_options();

    // Branch on UEs in index order; reversed so that, as in canonical
    // order, UE 0 varies fastest.
    fn search(
        net: &NetworkInstance,
        options: &[Vec<Vec<CellId>>],
        signal: &mut Vec<Vec<CellId>>,
        load: &mut Vec<Vec<CellId>>,
        depth: usize,
        opts: &SolverOptions,
    ) -> Result<Option<Association>> {
        let m = options.len();
        let s = Association::from_sets(signal.clone());
        let l = Association::from_sets(load.clone());
        let r = fixed_point_mixed(&s, &l, net, opts)?;
        let overloaded = r.status == FixedPointStatus::Diverged
            || (r.converged() && r.max_load() > 1.0 + FEASIBILITY_TOL);
        if overloaded {
            return Ok(None);
        }
        if depth == m {
            return Ok(r.converged().then_some(l));
        }
        let j = m - 1 - depth;
        for o in &options[j] {
            let (ps, pl) = (signal[j].clone(), load[j].clone());
            signal[j] = o.clone();
            load[j] = o.clone();
            if let Some(a) = search(net, options, signal, load, depth + 1, opts)? {
                return Ok(Some(a));
            }
            signal[j] = ps;
            load[j] = pl;
        }
        Ok(None)
    }

    let mut signal = all.serving_sets().to_vec();
    let mut load = home.serving_sets().to_vec();
    search(net, &options, &mut signal, &mut load, 0, &opts)
}
