//! The SINR map `h`, the load map `f` and the fixed point of `x = f(h(x))`.
//!
//! For UE `j` with serving set `I_j`:
//!
//! ```text
//! h_j(x) = sum_{i in I_j} p_i g_ij / (sum_{k not in I_j} p_k g_kj x_k + sigma^2)
//! f_i(g) = sum_{j in J_i} d_j / (M B log2(1 + g_j))
//! ```
//!
//! Both compositions `f∘h` and `h∘f` are standard interference functions, so
//! plain iteration from any non-negative start converges to the unique fixed
//! point. The maps may be *mixed*: `h` evaluated under one association and
//! `f` under another, which is what the bounds and the link-adjustment tests
//! need.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::netmodel::{Association, CellId, NetworkInstance};
use crate::{Error, Result};

pub type LoadVector = Vec<f64>;
pub type SinrVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the infinity norm of successive iterates is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Any component above this aborts the run as diverged.
    pub divergence_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 10_000,
            divergence_cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointStatus {
    Converged,
    IterationLimit,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub load: LoadVector,
    /// `h(load)` under the SINR-side association.
    pub sinr: SinrVector,
    pub iterations: usize,
    pub residual: f64,
    pub status: FixedPointStatus,
    /// Converged with every load at most `1 + tolerance`.
    pub feasible: bool,
}

impl FixedPointReport {
    pub fn converged(&self) -> bool {
        self.status == FixedPointStatus::Converged
    }

    pub fn sum_load(&self) -> f64 {
        self.load.iter().sum()
    }

    pub fn max_load(&self) -> f64 {
        self.load.iter().copied().fold(0.0, f64::max)
    }

    /// Converts a non-converged report into an error.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged() {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                status: self.status,
                iterations: self.iterations,
            })
        }
    }
}

/// `log2(1 + sinr)` via the natural logarithm.
#[inline]
pub fn spectral_efficiency(sinr: f64) -> f64 {
    sinr.ln_1p() / LN_2
}

/// The pair of maps `h(., signal)` and `f(., load)` over one instance.
#[derive(Debug, Clone)]
pub struct CouplingMap<'a> {
    net: &'a NetworkInstance,
    signal: &'a Association,
    load: &'a Association,
    signal_power: Vec<f64>,
}

impl<'a> CouplingMap<'a> {
    pub fn new(net: &'a NetworkInstance, assoc: &'a Association) -> Result<Self> {
        Self::mixed(net, assoc, assoc)
    }

    /// `h` uses `signal`, `f` uses `load`. Fails if a UE receives no
    /// signal power from its serving cells under `signal`.
    pub fn mixed(
        net: &'a NetworkInstance,
        signal: &'a Association,
        load: &'a Association,
    ) -> Result<Self> {
        let map = Self::unchecked(net, signal, load)?;
        if let Some(ue) = map.signal_power.iter().position(|&s| s <= 0.0) {
            return Err(Error::DegenerateLink { ue });
        }
        Ok(map)
    }

    fn unchecked(
        net: &'a NetworkInstance,
        signal: &'a Association,
        load: &'a Association,
    ) -> Result<Self> {
        for a in [signal, load] {
            if a.n_ues() != net.n_ues() {
                return Err(Error::InvalidAssociation(format!(
                    "{} serving sets for {} UEs",
                    a.n_ues(),
                    net.n_ues()
                )));
            }
        }
        let signal_power = (0..net.n_ues())
            .map(|j| net.signal_power(signal.serving(j), j))
            .collect();
        Ok(Self {
            net,
            signal,
            load,
            signal_power,
        })
    }

    pub fn net(&self) -> &NetworkInstance {
        self.net
    }

    /// Interference plus noise at UE `j` under load `x`.
    pub fn interference(&self, x: &[f64], j: usize) -> f64 {
        let rx = self.net.rx_at_ue(j);
        let serving = self.signal.serving(j);
        let mut next = serving.iter().copied().peekable();
        let mut total = 0.0;
        for (k, (&r, &xk)) in rx.iter().zip(x).enumerate() {
            if next.peek() == Some(&k) {
                next.next();
                continue;
            }
            total += r * xk;
        }
        total + self.net.noise_power()
    }

    pub fn sinr_of(&self, x: &[f64], j: usize) -> f64 {
        self.signal_power[j] / self.interference(x, j)
    }

    pub fn sinr_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, g) in out.iter_mut().enumerate() {
            *g = self.sinr_of(x, j);
        }
    }

    /// Resource share UE `j` takes in each of its serving cells at SINR `g`.
    pub fn ue_load(&self, g: f64, j: usize) -> f64 {
        self.net.normalized_demand(j) / spectral_efficiency(g)
    }

    /// `f(g)` under the load-side association. A zero SINR yields an
    /// infinite load.
    pub fn load_into(&self, sinr: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &g) in sinr.iter().enumerate() {
            let term = self.ue_load(g, j);
            for &i in self.load.serving(j) {
                out[i] += term;
            }
        }
    }

    /// Load of a single cell, `f_i(g)`.
    pub fn cell_load(&self, sinr: &[f64], cell: CellId) -> f64 {
        sinr.iter()
            .enumerate()
            .filter(|&(j, _)| self.load.serves(cell, j))
            .map(|(j, &g)| self.ue_load(g, j))
            .sum()
    }

    /// `f(h(x))`, using `sinr_buf` as scratch.
    pub fn apply_into(&self, x: &[f64], sinr_buf: &mut [f64], out: &mut [f64]) {
        self.sinr_into(x, sinr_buf);
        self.load_into(sinr_buf, out);
    }

    pub fn apply(&self, x: &[f64]) -> LoadVector {
        let mut g = vec![0.0; self.net.n_ues()];
        let mut out = vec![0.0; self.net.n_cells()];
        self.apply_into(x, &mut g, &mut out);
        out
    }

    /// `h(f(g))`.
    pub fn apply_dual(&self, sinr: &[f64]) -> SinrVector {
        let mut x = vec![0.0; self.net.n_cells()];
        self.load_into(sinr, &mut x);
        let mut out = vec![0.0; self.net.n_ues()];
        self.sinr_into(&x, &mut out);
        out
    }

    /// Iterates `x <- f(h(x))` from `x0`. Cells with `active[i] == false`
    /// keep their starting value; `None` activates every cell.
    pub fn iterate(
        &self,
        x0: &[f64],
        active: Option<&[bool]>,
        opts: &SolverOptions,
    ) -> FixedPointReport {
        let n = self.net.n_cells();
        let mut x = x0.to_vec();
        let mut next = vec![0.0; n];
        let mut sinr = vec![0.0; self.net.n_ues()];
        let is_active = |i: usize| active.is_none_or(|a| a[i]);
        let mut status = FixedPointStatus::IterationLimit;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;

        if active.is_some_and(|a| !a.iter().any(|&b| b)) {
            status = FixedPointStatus::Converged;
            residual = 0.0;
        } else {
            while iterations < opts.max_iterations {
                iterations += 1;
                self.apply_into(&x, &mut sinr, &mut next);
                residual = 0.0;
                let mut blown = false;
                for i in 0..n {
                    if !is_active(i) {
                        next[i] = x[i];
                        continue;
                    }
                    let v = next[i];
                    if !v.is_finite() || v > opts.divergence_cap {
                        blown = true;
                    }
                    residual = f64::max(residual, (v - x[i]).abs());
                }
                std::mem::swap(&mut x, &mut next);
                if blown {
                    status = FixedPointStatus::Diverged;
                    break;
                }
                if residual <= opts.tolerance {
                    status = FixedPointStatus::Converged;
                    break;
                }
            }
        }

        self.sinr_into(&x, &mut sinr);
        let feasible = status == FixedPointStatus::Converged
            && x.iter().all(|&v| v <= 1.0 + opts.tolerance);
        FixedPointReport {
            load: x,
            sinr,
            iterations,
            residual,
            status,
            feasible,
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} has length {got}, expected {want}"
        )))
    }
}

/// `h(x)` for association `assoc`. UEs without signal power get SINR 0.
pub fn sinr_vector(
    x: &[f64],
    assoc: &Association,
    net: &NetworkInstance,
) -> Result<SinrVector> {
    check_len("load vector", x.len(), net.n_cells())?;
    let map = CouplingMap::unchecked(net, assoc, assoc)?;
    let mut out = vec![0.0; net.n_ues()];
    map.sinr_into(x, &mut out);
    for (j, g) in out.iter().enumerate() {
        if *g == 0.0 {
            log::warn!("UE {j} receives no signal power from its serving cells");
        }
    }
    Ok(out)
}

/// `f(sinr)` for association `assoc`.
pub fn load_vector(
    sinr: &[f64],
    assoc: &Association,
    net: &NetworkInstance,
) -> Result<LoadVector> {
    check_len("SINR vector", sinr.len(), net.n_ues())?;
    if let Some(ue) = sinr.iter().position(|&g| !(g > 0.0)) {
        return Err(Error::InfeasibleDemand { ue });
    }
    let map = CouplingMap::unchecked(net, assoc, assoc)?;
    let mut out = vec![0.0; net.n_cells()];
    map.load_into(sinr, &mut out);
    Ok(out)
}

/// Fixed point of `x = f(h(x))` under `assoc`, iterated from zero.
///
/// Non-convergence is reported through [`FixedPointReport::status`]; the
/// error path is reserved for invalid input.
pub fn fixed_point_load(
    assoc: &Association,
    net: &NetworkInstance,
    opts: &SolverOptions,
) -> Result<FixedPointReport> {
    let map = CouplingMap::new(net, assoc)?;
    Ok(map.iterate(&vec![0.0; net.n_cells()], None, opts))
}

/// As [`fixed_point_load`], starting from `x0`.
pub fn fixed_point_from(
    assoc: &Association,
    net: &NetworkInstance,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<FixedPointReport> {
    check_len("start vector", x0.len(), net.n_cells())?;
    let map = CouplingMap::new(net, assoc)?;
    Ok(map.iterate(x0, None, opts))
}

/// Fixed point of `x = f(h(x, signal), load)`, iterated from zero.
pub fn fixed_point_mixed(
    signal: &Association,
    load: &Association,
    net: &NetworkInstance,
    opts: &SolverOptions,
) -> Result<FixedPointReport> {
    let map = CouplingMap::mixed(net, signal, load)?;
    Ok(map.iterate(&vec![0.0; net.n_cells()], None, opts))
}

/// Asynchronous iteration: cells outside `active` stay frozen at `x0`, the
/// others follow `x_i <- f_i(h(x))`.
pub fn async_fixed_point(
    assoc: &Association,
    net: &NetworkInstance,
    active: &[CellId],
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<FixedPointReport> {
    check_len("start vector", x0.len(), net.n_cells())?;
    let mut mask = vec![false; net.n_cells()];
    for &i in active {
        if i >= net.n_cells() {
            return Err(Error::Precondition(format!("active cell {i} out of range")));
        }
        mask[i] = true;
    }
    let map = CouplingMap::new(net, assoc)?;
    Ok(map.iterate(x0, Some(&mask), opts))
}
