//! Load of one UE as a function of received interference, its one-segment
//! linearization, and the global load bounds that narrow the interference
//! range each segment must cover.

use serde::{Deserialize, Serialize};

use crate::coupling::{fixed_point_mixed, spectral_efficiency, LoadVector, SolverOptions};
use crate::netmodel::{Association, CellId, NetworkInstance, UeId};
use crate::{Error, Result};

/// `w -> d / (M B log2(1 + S / (w + sigma^2)))` for a fixed serving set.
///
/// Concave and increasing in the interference `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCurve {
    /// Demand over `M * B`.
    pub demand: f64,
    /// Summed received power of the serving cells.
    pub signal: f64,
    pub noise: f64,
}

impl LoadCurve {
    pub fn new(cells: &[CellId], ue: UeId, net: &NetworkInstance) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Precondition(format!("empty serving set for UE {ue}")));
        }
        let signal = net.signal_power(cells, ue);
        if !(signal > 0.0) {
            return Err(Error::DegenerateLink { ue });
        }
        Ok(Self {
            demand: net.normalized_demand(ue),
            signal,
            noise: net.noise_power(),
        })
    }

    pub fn value(&self, w: f64) -> f64 {
        self.demand / spectral_efficiency(self.signal / (w + self.noise))
    }

    pub fn derivative(&self, w: f64) -> f64 {
        let z = w + self.noise;
        let rate = spectral_efficiency(self.signal / z);
        self.demand * self.signal
            / (std::f64::consts::LN_2 * rate * rate * z * (z + self.signal))
    }
}

/// Load of UE `ue` in each of the cells `cells` when they serve it jointly
/// under interference `w` (watts).
pub fn ue_load_of_interference(
    cells: &[CellId],
    ue: UeId,
    w: f64,
    net: &NetworkInstance,
) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Precondition(format!("negative interference {w}")));
    }
    Ok(LoadCurve::new(cells, ue, net)?.value(w))
}

/// Interference at `ue` when every cell outside `cells` is fully loaded.
pub fn interference_cap(cells: &[CellId], ue: UeId, net: &NetworkInstance) -> f64 {
    net.rx_at_ue(ue)
        .iter()
        .enumerate()
        .filter(|(i, _)| !cells.contains(i))
        .map(|(_, r)| r)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinearizationMode {
    /// Chord through the interval end points; never above the curve.
    Secant,
    /// Tangent at the interval midpoint; never below the curve.
    TangentMid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSegment {
    /// Load per watt of interference.
    pub slope: f64,
    pub intercept: f64,
    pub w_lo: f64,
    pub w_hi: f64,
    /// Interference with every other cell fully loaded.
    pub cap: f64,
    pub mode: LinearizationMode,
}

impl LinearSegment {
    pub fn value(&self, w: f64) -> f64 {
        self.slope * w + self.intercept
    }
}

/// Linearizes the load curve of `ue` served by `cells` over `[w_lo, w_hi]`.
///
/// A point interval gives the constant segment through the curve value.
pub fn linearize(
    cells: &[CellId],
    ue: UeId,
    w_lo: f64,
    w_hi: f64,
    net: &NetworkInstance,
    mode: LinearizationMode,
) -> Result<LinearSegment> {
    if !(w_lo >= 0.0 && w_lo <= w_hi) {
        return Err(Error::Precondition(format!(
            "interference interval [{w_lo}, {w_hi}] is not ordered"
        )));
    }
    let curve = LoadCurve::new(cells, ue, net)?;
    let cap = interference_cap(cells, ue, net);
    let (slope, intercept) = if w_lo == w_hi {
        (0.0, curve.value(w_lo))
    } else {
        match mode {
            LinearizationMode::Secant => {
                let (lo, hi) = (curve.value(w_lo), curve.value(w_hi));
                let s = (hi - lo) / (w_hi - w_lo);
                (s, lo - w_lo * s)
            }
            LinearizationMode::TangentMid => {
                let mid = 0.5 * (w_lo + w_hi);
                let s = curve.derivative(mid);
                (s, curve.value(mid) - mid * s)
            }
        }
    };
    Ok(LinearSegment {
        slope,
        intercept,
        w_lo,
        w_hi,
        cap: cap.max(w_hi),
        mode,
    })
}

/// Componentwise bounds on the fixed-point load of every association.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadBounds {
    pub lower: LoadVector,
    /// `+inf` entries mark an upper fixed point that did not converge.
    pub upper: LoadVector,
}

/// Lower bound: every candidate contributes signal, only home cells carry
/// load. Upper bound: only the home cell contributes signal, every
/// candidate carries load.
///
/// The lower fixed point must converge. If the upper one diverges or hits
/// the iteration limit, the upper bound is reported as `+inf`, which is
/// still valid.
pub fn global_load_bounds(net: &NetworkInstance, opts: &SolverOptions) -> Result<LoadBounds> {
    let home = Association::home_only(net);
    let all = Association::all_candidates(net);
    let lower = fixed_point_mixed(&all, &home, net, opts)?.require_converged()?;
    let upper = fixed_point_mixed(&home, &all, net, opts)?;
    let upper = if upper.converged() {
        upper.load
    } else {
        vec![f64::INFINITY; net.n_cells()]
    };
    Ok(LoadBounds {
        lower: lower.load,
        upper,
    })
}

/// Range `[W_lo, W_hi]` of the interference `ue` sees when served by
/// `cells`, given load bounds. Both ends are clamped to the interference
/// cap.
pub fn interference_interval(
    cells: &[CellId],
    ue: UeId,
    bounds: &LoadBounds,
    net: &NetworkInstance,
) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (i, &r) in net.rx_at_ue(ue).iter().enumerate() {
        if r == 0.0 || cells.contains(&i) {
            continue;
        }
        lo += r * bounds.lower[i];
        hi += r * bounds.upper[i];
    }
    let cap = interference_cap(cells, ue, net);
    let lo = lo.min(cap);
    (lo, hi.min(cap).max(lo))
}

/// Linear segment of one association option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionSegment {
    pub cells: Vec<CellId>,
    pub segment: LinearSegment,
}

/// Segments for every UE and every option, in canonical option order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTable {
    pub per_ue: Vec<Vec<OptionSegment>>,
}

impl SegmentTable {
    /// With `bounds`, each option is linearized over its bounded
    /// interference interval; without, over `[0, T]`.
    pub fn build(
        net: &NetworkInstance,
        bounds: Option<&LoadBounds>,
        mode: LinearizationMode,
    ) -> Result<Self> {
        let per_ue = (0..net.n_ues())
            .map(|j| {
                net.options(j)
                    .into_iter()
                    .map(|cells| {
                        let (lo, hi) = match bounds {
                            Some(b) => interference_interval(&cells, j, b, net),
                            None => (0.0, interference_cap(&cells, j, net)),
                        };
                        let segment = linearize(&cells, j, lo, hi, net, mode)?;
                        Ok(OptionSegment { cells, segment })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_ue })
    }

    pub fn get(&self, ue: UeId, option: usize) -> Result<&OptionSegment> {
        self.per_ue
            .get(ue)
            .and_then(|o| o.get(option))
            .ok_or(Error::MissingSegment { ue, option })
    }
}
