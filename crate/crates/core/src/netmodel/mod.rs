//! Physical network scenarios and cell-UE associations.

mod channel;
mod generator;
mod io;
mod sat;

pub use channel::{link_gain, ChannelConfig, PathLossLaw};
pub use generator::{assign_home_and_candidates, generate_hexnet, hexagon_centers, ScenarioConfig};
pub use sat::{build_sat_reduction, CnfFormula, GadgetLayout, Literal};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type CellId = usize;
pub type UeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Macro,
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    pub kind: CellKind,
    /// Coordinates in meters.
    pub position: [f64; 2],
    /// Transmit power per resource unit, watts.
    #[serde(rename = "power_per_ru_w")]
    pub power_per_ru: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: UeId,
    pub position: [f64; 2],
    /// Bit-rate demand, bit/s.
    #[serde(rename = "demand_bps")]
    pub demand: f64,
    pub home_cell: CellId,
    /// Cells allowed to serve this UE, strongest first.
    pub candidates: Vec<CellId>,
}

/// An immutable network scenario.
///
/// Gains are stored linear and dense. The received power `p_i * g_ij` is
/// cached UE-major, since every SINR evaluation walks one UE at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    cells: Vec<Cell>,
    ues: Vec<UserEquipment>,
    gain: Vec<f64>,
    rx_by_ue: Vec<f64>,
    noise_power: f64,
    num_ru: u32,
    ru_bandwidth: f64,
}

impl NetworkInstance {
    /// Builds an instance from a row-major `n x m` gain matrix.
    pub fn new(
        cells: Vec<Cell>,
        ues: Vec<UserEquipment>,
        gain: Vec<Vec<f64>>,
        noise_power: f64,
        num_ru: u32,
        ru_bandwidth: f64,
    ) -> Result<Self> {
        let n = cells.len();
        let m = ues.len();
        if gain.len() != n || gain.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidInstance(format!(
                "gain matrix must be {n} x {m}"
            )));
        }
        let flat: Vec<f64> = gain.into_iter().flatten().collect();
        Self::from_flat(cells, ues, flat, noise_power, num_ru, ru_bandwidth)
    }

    pub(crate) fn from_flat(
        cells: Vec<Cell>,
        ues: Vec<UserEquipment>,
        gain: Vec<f64>,
        noise_power: f64,
        num_ru: u32,
        ru_bandwidth: f64,
    ) -> Result<Self> {
        let n = cells.len();
        let m = ues.len();
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if n == 0 {
            return invalid("no cells".into());
        }
        if gain.len() != n * m {
            return invalid(format!("gain matrix must hold {} entries", n * m));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return invalid("noise power must be positive".into());
        }
        if num_ru == 0 {
            return invalid("at least one resource unit is required".into());
        }
        if !(ru_bandwidth > 0.0 && ru_bandwidth.is_finite()) {
            return invalid("resource-unit bandwidth must be positive".into());
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.id != i {
                return invalid(format!("cell at index {i} has id {}", cell.id));
            }
            if !(cell.power_per_ru > 0.0 && cell.power_per_ru.is_finite()) {
                return invalid(format!("cell {i} must have positive power"));
            }
        }
        for (j, ue) in ues.iter().enumerate() {
            if ue.id != j {
                return invalid(format!("UE at index {j} has id {}", ue.id));
            }
            if !(ue.demand > 0.0 && ue.demand.is_finite()) {
                return invalid(format!("UE {j} must have positive demand"));
            }
            if ue.candidates.is_empty() {
                return invalid(format!("UE {j} has no candidate cells"));
            }
            if !ue.candidates.contains(&ue.home_cell) {
                return invalid(format!("home cell of UE {j} is not a candidate"));
            }
            let mut seen = ue.candidates.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != ue.candidates.len() || seen.iter().any(|&c| c >= n) {
                return invalid(format!("UE {j} has invalid candidate cells"));
            }
        }
        if gain.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return invalid("gains must be finite and non-negative".into());
        }
        let mut rx_by_ue = vec![0.0; n * m];
        for (i, cell) in cells.iter().enumerate() {
            for j in 0..m {
                rx_by_ue[j * n + i] = cell.power_per_ru * gain[i * m + j];
            }
        }
        Ok(Self {
            cells,
            ues,
            gain,
            rx_by_ue,
            noise_power,
            num_ru,
            ru_bandwidth,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn ues(&self) -> &[UserEquipment] {
        &self.ues
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn gain(&self, cell: CellId, ue: UeId) -> f64 {
        self.gain[cell * self.ues.len() + ue]
    }

    /// Received power `p_i * g_ij` of cell `cell` at UE `ue`.
    pub fn rx_power(&self, cell: CellId, ue: UeId) -> f64 {
        self.rx_by_ue[ue * self.cells.len() + cell]
    }

    /// Received powers of every cell at one UE, indexed by cell.
    pub fn rx_at_ue(&self, ue: UeId) -> &[f64] {
        let n = self.cells.len();
        &self.rx_by_ue[ue * n..(ue + 1) * n]
    }

    pub fn gain_rows(&self) -> Vec<Vec<f64>> {
        let m = self.ues.len();
        if m == 0 {
            return vec![Vec::new(); self.cells.len()];
        }
        self.gain.chunks(m).map(<[f64]>::to_vec).collect()
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn num_ru(&self) -> u32 {
        self.num_ru
    }

    pub fn ru_bandwidth(&self) -> f64 {
        self.ru_bandwidth
    }

    /// Total bandwidth `M * B` available to a cell, Hz.
    pub fn capacity(&self) -> f64 {
        f64::from(self.num_ru) * self.ru_bandwidth
    }

    /// Demand of UE `ue` normalised by `M * B`.
    pub fn normalized_demand(&self, ue: UeId) -> f64 {
        self.ues[ue].demand / self.capacity()
    }

    /// Summed received power of `cells` at `ue`.
    pub fn signal_power(&self, cells: &[CellId], ue: UeId) -> f64 {
        let rx = self.rx_at_ue(ue);
        cells.iter().map(|&i| rx[i]).sum()
    }

    /// Copy of this instance with every UE demand replaced by `demand`.
    pub fn with_uniform_demand(&self, demand: f64) -> Result<Self> {
        let mut ues = self.ues.clone();
        for ue in &mut ues {
            ue.demand = demand;
        }
        Self::from_flat(
            self.cells.clone(),
            ues,
            self.gain.clone(),
            self.noise_power,
            self.num_ru,
            self.ru_bandwidth,
        )
    }

    /// Copy with new candidate sets and home cells.
    pub(crate) fn with_candidates(&self, lists: Vec<Vec<CellId>>) -> Result<Self> {
        let mut ues = self.ues.clone();
        for (ue, list) in ues.iter_mut().zip(lists) {
            ue.home_cell = list[0];
            ue.candidates = list;
        }
        Self::from_flat(
            self.cells.clone(),
            ues,
            self.gain.clone(),
            self.noise_power,
            self.num_ru,
            self.ru_bandwidth,
        )
    }

    /// The association options of UE `ue`: every subset of its candidates
    /// that contains the home cell.
    ///
    /// Options are listed in canonical order: bit `b` of the option index
    /// selects the `b`-th non-home candidate, so index 0 is the home cell
    /// alone. Each option is sorted ascending.
    pub fn options(&self, ue: UeId) -> Vec<Vec<CellId>> {
        let u = &self.ues[ue];
        let others: Vec<CellId> = u
            .candidates
            .iter()
            .copied()
            .filter(|&c| c != u.home_cell)
            .collect();
        (0..1usize << others.len())
            .map(|mask| {
                let mut cells = vec![u.home_cell];
                cells.extend(
                    others
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &c)| c),
                );
                cells.sort_unstable();
                cells
            })
            .collect()
    }

    /// Number of association options of UE `ue`, `2^(|candidates| - 1)`.
    pub fn option_count(&self, ue: UeId) -> usize {
        1 << (self.ues[ue].candidates.len() - 1)
    }
}

/// Serving-cell sets of every UE.
///
/// Each set is kept sorted ascending. Validity against an instance (home
/// cell served, candidates respected) is checked by [`Association::new`] and
/// [`Association::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Association {
    serving: Vec<Vec<CellId>>,
}

impl Association {
    pub fn new(net: &NetworkInstance, serving: Vec<Vec<CellId>>) -> Result<Self> {
        let assoc = Self::from_sets(serving);
        assoc.validate(net)?;
        Ok(assoc)
    }

    /// Wraps serving sets without checking them against an instance.
    pub fn from_sets(mut serving: Vec<Vec<CellId>>) -> Self {
        for set in &mut serving {
            set.sort_unstable();
            set.dedup();
        }
        Self { serving }
    }

    /// Every UE served by its home cell only.
    pub fn home_only(net: &NetworkInstance) -> Self {
        Self {
            serving: net.ues().iter().map(|u| vec![u.home_cell]).collect(),
        }
    }

    /// Every UE served by all of its candidate cells.
    pub fn all_candidates(net: &NetworkInstance) -> Self {
        Self::from_sets(net.ues().iter().map(|u| u.candidates.clone()).collect())
    }

    /// Builds an association from one option index per UE (see
    /// [`NetworkInstance::options`]).
    pub fn from_options(net: &NetworkInstance, choice: &[usize]) -> Result<Self> {
        if choice.len() != net.n_ues() {
            return Err(Error::InvalidAssociation(format!(
                "expected {} option indices, got {}",
                net.n_ues(),
                choice.len()
            )));
        }
        let serving = choice
            .iter()
            .enumerate()
            .map(|(j, &o)| {
                net.options(j).into_iter().nth(o).ok_or_else(|| {
                    Error::InvalidAssociation(format!("UE {j} has no option {o}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { serving })
    }

    pub fn validate(&self, net: &NetworkInstance) -> Result<()> {
        if self.serving.len() != net.n_ues() {
            return Err(Error::InvalidAssociation(format!(
                "{} serving sets for {} UEs",
                self.serving.len(),
                net.n_ues()
            )));
        }
        for (j, set) in self.serving.iter().enumerate() {
            let ue = &net.ues()[j];
            if !set.contains(&ue.home_cell) {
                return Err(Error::InvalidAssociation(format!(
                    "UE {j} is not served by its home cell {}",
                    ue.home_cell
                )));
            }
            if let Some(c) = set.iter().find(|c| !ue.candidates.contains(c)) {
                return Err(Error::InvalidAssociation(format!(
                    "cell {c} is not a candidate of UE {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn serving(&self, ue: UeId) -> &[CellId] {
        &self.serving[ue]
    }

    pub fn serving_sets(&self) -> &[Vec<CellId>] {
        &self.serving
    }

    pub fn n_ues(&self) -> usize {
        self.serving.len()
    }

    pub fn serves(&self, cell: CellId, ue: UeId) -> bool {
        self.serving[ue].binary_search(&cell).is_ok()
    }

    /// Copy with the link `cell -> ue` added.
    pub fn with_link(&self, cell: CellId, ue: UeId) -> Self {
        let mut next = self.clone();
        if let Err(pos) = next.serving[ue].binary_search(&cell) {
            next.serving[ue].insert(pos, cell);
        }
        next
    }

    /// Copy with the link `cell -> ue` removed.
    pub fn without_link(&self, cell: CellId, ue: UeId) -> Self {
        let mut next = self.clone();
        if let Ok(pos) = next.serving[ue].binary_search(&cell) {
            next.serving[ue].remove(pos);
        }
        next
    }

    /// UEs served by `cell`, ascending.
    pub fn served_by(&self, cell: CellId) -> Vec<UeId> {
        (0..self.serving.len())
            .filter(|&j| self.serves(cell, j))
            .collect()
    }

    /// Number of UEs served jointly by two or more cells.
    pub fn jt_ue_count(&self) -> usize {
        self.serving.iter().filter(|s| s.len() >= 2).count()
    }

    /// Option index of every UE, the inverse of [`Association::from_options`].
    pub fn option_indices(&self, net: &NetworkInstance) -> Result<Vec<usize>> {
        self.validate(net)?;
        Ok((0..net.n_ues())
            .map(|j| {
                net.options(j)
                    .iter()
                    .position(|o| *o == self.serving[j])
                    .expect("validated association maps to an option")
            })
            .collect())
    }
}
