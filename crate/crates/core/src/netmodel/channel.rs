use serde::{Deserialize, Serialize};

use super::CellKind;

/// Log-distance path loss `intercept + slope * log10(d_km)` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossLaw {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl PathLossLaw {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + self.slope_db * (distance_m / 1000.0).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub macro_law: PathLossLaw,
    pub small_law: PathLossLaw,
    /// Links shorter than this are evaluated at this distance.
    pub min_distance_m: f64,
}

impl Default for ChannelConfig {
    /// Macro and small-cell laws at 2 GHz.
    fn default() -> Self {
        Self {
            macro_law: PathLossLaw {
                intercept_db: 128.1,
                slope_db: 37.6,
            },
            small_law: PathLossLaw {
                intercept_db: 140.7,
                slope_db: 36.7,
            },
            min_distance_m: 10.0,
        }
    }
}

impl ChannelConfig {
    pub fn law(&self, kind: CellKind) -> PathLossLaw {
        match kind {
            CellKind::Macro => self.macro_law,
            CellKind::Small => self.small_law,
        }
    }
}

/// Linear power gain of one link: `10^(-(PL(d) + shadow_db) / 10)`, capped at 1.
pub fn link_gain(
    kind: CellKind,
    cell_pos: [f64; 2],
    ue_pos: [f64; 2],
    shadow_db: f64,
    config: &ChannelConfig,
) -> f64 {
    let d = (cell_pos[0] - ue_pos[0]).hypot(cell_pos[1] - ue_pos[1]);
    let d = d.max(config.min_distance_m);
    let loss = config.law(kind).loss_db(d) + shadow_db;
    10f64.powf(-loss / 10.0).min(1.0)
}
