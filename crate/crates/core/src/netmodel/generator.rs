use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{link_gain, Cell, CellKind, ChannelConfig, NetworkInstance, UserEquipment};
use crate::{Error, Result};

/// Parameters of a hexagonal HetNet layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub hexagons: usize,
    /// Hexagon circumradius, meters.
    pub radius_m: f64,
    pub small_cells_per_hexagon: usize,
    pub ues_per_hexagon: usize,
    pub macro_power_w: f64,
    pub small_power_w: f64,
    pub noise_density_dbm_hz: f64,
    pub num_ru: u32,
    pub ru_bandwidth_hz: f64,
    pub macro_shadowing_db: f64,
    pub small_shadowing_db: f64,
    /// Candidate cells per UE, capped at the number of cells.
    pub candidates: usize,
    /// Uniform bit-rate demand of every UE, bit/s.
    pub demand_bps: f64,
    pub channel: ChannelConfig,
}

impl Default for ScenarioConfig {
    /// The full-scale layout: 19 hexagons, 2 small cells and 30 UEs each.
    fn default() -> Self {
        Self {
            hexagons: 19,
            radius_m: 500.0,
            small_cells_per_hexagon: 2,
            ues_per_hexagon: 30,
            macro_power_w: 0.4,
            small_power_w: 0.05,
            noise_density_dbm_hz: -174.0,
            num_ru: 100,
            ru_bandwidth_hz: 180e3,
            macro_shadowing_db: 6.0,
            small_shadowing_db: 3.0,
            candidates: 3,
            demand_bps: 1e6,
            channel: ChannelConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Desk-scale layout: 7 hexagons, 1 small cell and 6 UEs each.
    pub fn desk() -> Self {
        Self {
            hexagons: 7,
            small_cells_per_hexagon: 1,
            ues_per_hexagon: 6,
            ..Self::default()
        }
    }

    /// Noise power over one resource unit, watts.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = self.noise_density_dbm_hz + 10.0 * self.ru_bandwidth_hz.log10();
        10f64.powf((dbm - 30.0) / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius_m", self.radius_m),
            ("macro_power_w", self.macro_power_w),
            ("small_power_w", self.small_power_w),
            ("ru_bandwidth_hz", self.ru_bandwidth_hz),
            ("demand_bps", self.demand_bps),
            ("channel.min_distance_m", self.channel.min_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("macro_shadowing_db", self.macro_shadowing_db),
            ("small_shadowing_db", self.small_shadowing_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative")));
            }
        }
        if self.hexagons == 0 || self.ues_per_hexagon == 0 || self.candidates == 0 {
            return Err(Error::InvalidConfig(
                "hexagons, ues_per_hexagon and candidates must be positive".into(),
            ));
        }
        if self.num_ru == 0 {
            return Err(Error::InvalidConfig("num_ru must be positive".into()));
        }
        if !self.noise_density_dbm_hz.is_finite() {
            return Err(Error::InvalidConfig("noise density must be finite".into()));
        }
        Ok(())
    }
}

/// Centers of `count` pointy-top hexagons, filled ring by ring around the origin.
pub fn hexagon_centers(count: usize, radius: f64) -> Vec<[f64; 2]> {
    const DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let mut axial = vec![(0i64, 0i64)];
    let mut ring = 1i64;
    while axial.len() < count {
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for dir in DIRS {
            for _ in 0..ring {
                axial.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    axial.truncate(count);
    let s3 = 3f64.sqrt();
    axial
        .into_iter()
        .map(|(q, r)| {
            let (q, r) = (q as f64, r as f64);
            [radius * s3 * (q + r / 2.0), radius * 1.5 * r]
        })
        .collect()
}

fn sample_in_hexagon<R: Rng>(rng: &mut R, center: [f64; 2], radius: f64) -> [f64; 2] {
    let half_width = radius * 3f64.sqrt() / 2.0;
    loop {
        let x = rng.random_range(-half_width..=half_width);
        let y = rng.random_range(-radius..=radius);
        if y.abs() <= radius - x.abs() / 3f64.sqrt() {
            return [center[0] + x, center[1] + y];
        }
    }
}

/// Generates a hexagonal HetNet: one macro cell per hexagon center, small
/// cells and UEs uniformly inside each hexagon, log-normal shadowing per
/// link. Deterministic in `(config, seed)`.
pub fn generate_hexnet(config: &ScenarioConfig, seed: u64) -> Result<NetworkInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = hexagon_centers(config.hexagons, config.radius_m);

    let mut cells: Vec<Cell> = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| Cell {
            id: i,
            kind: CellKind::Macro,
            position: c,
            power_per_ru: config.macro_power_w,
        })
        .collect();
    for &c in &centers {
        for _ in 0..config.small_cells_per_hexagon {
            let position = sample_in_hexagon(&mut rng, c, config.radius_m);
            cells.push(Cell {
                id: cells.len(),
                kind: CellKind::Small,
                position,
                power_per_ru: config.small_power_w,
            });
        }
    }
    let mut ues = Vec::with_capacity(config.hexagons * config.ues_per_hexagon);
    for &c in &centers {
        for _ in 0..config.ues_per_hexagon {
            let position = sample_in_hexagon(&mut rng, c, config.radius_m);
            ues.push(UserEquipment {
                id: ues.len(),
                position,
                demand: config.demand_bps,
                home_cell: 0,
                candidates: vec![0],
            });
        }
    }

    let macro_shadow = Normal::new(0.0, config.macro_shadowing_db)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let small_shadow = Normal::new(0.0, config.small_shadowing_db)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut gain = Vec::with_capacity(cells.len() * ues.len());
    for cell in &cells {
        let shadow = match cell.kind {
            CellKind::Macro => &macro_shadow,
            CellKind::Small => &small_shadow,
        };
        for ue in &ues {
            let s = shadow.sample(&mut rng);
            gain.push(link_gain(
                cell.kind,
                cell.position,
                ue.position,
                s,
                &config.channel,
            ));
        }
    }

    let n = cells.len();
    let net = NetworkInstance::from_flat(
        cells,
        ues,
        gain,
        config.noise_power_w(),
        config.num_ru,
        config.ru_bandwidth_hz,
    )?;
    assign_home_and_candidates(&net, config.candidates.min(n))
}

/// Sets each UE's candidates to its `k` strongest cells by received power
/// (ties to the lower cell id) and its home cell to the strongest one.
pub fn assign_home_and_candidates(net: &NetworkInstance, k: usize) -> Result<NetworkInstance> {
    if k == 0 || k > net.n_cells() {
        return Err(Error::InvalidConfig(format!(
            "candidate count {k} must lie in 1..={}",
            net.n_cells()
        )));
    }
    let lists = (0..net.n_ues())
        .map(|j| {
            let rx = net.rx_at_ue(j);
            let mut order: Vec<usize> = (0..net.n_cells()).collect();
            order.sort_by(|&a, &b| rx[b].total_cmp(&rx[a]).then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect();
    net.with_candidates(lists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_instance(rx: &[f64]) -> NetworkInstance {
        let cells = rx
            .iter()
            .enumerate()
            .map(|(i, _)| Cell {
                id: i,
                kind: CellKind::Macro,
                position: [0.0, 0.0],
                power_per_ru: 1.0,
            })
            .collect();
        let ue = UserEquipment {
            id: 0,
            position: [0.0, 0.0],
            demand: 1.0,
            home_cell: 0,
            candidates: vec![0],
        };
        NetworkInstance::new(cells, vec![ue], rx.iter().map(|&g| vec![g]).collect(), 1.0, 1, 1.0)
            .unwrap()
    }

    #[test]
    fn candidates_are_strongest_cells() {
        let net = assign_home_and_candidates(&line_instance(&[0.4, 0.9, 0.1]), 2).unwrap();
        assert_eq!(net.ues()[0].candidates, vec![1, 0]);
        assert_eq!(net.ues()[0].home_cell, 1);
    }

    #[test]
    fn ties_go_to_lower_cell_id() {
        let net =
            assign_home_and_candidates(&line_instance(&[0.1, 0.2, 0.7, 0.3, 0.1, 0.7]), 1).unwrap();
        assert_eq!(net.ues()[0].home_cell, 2);
    }

    #[test]
    fn three_candidates_give_four_options() {
        let net = assign_home_and_candidates(&line_instance(&[0.4, 0.9, 0.1, 0.3]), 3).unwrap();
        assert_eq!(net.option_count(0), 4);
        assert_eq!(net.options(0).len(), 4);
    }

    #[test]
    fn too_many_candidates_rejected() {
        assert!(assign_home_and_candidates(&line_instance(&[0.4, 0.9]), 3).is_err());
        assert!(assign_home_and_candidates(&line_instance(&[0.4, 0.9]), 0).is_err());
    }

    #[test]
    fn default_scenario_counts() {
        let net = generate_hexnet(&ScenarioConfig::default(), 7).unwrap();
        assert_eq!(net.n_cells(), 57);
        assert_eq!(net.n_ues(), 570);
        for ue in net.ues() {
            assert_eq!(ue.candidates.len(), 3);
        }
    }

    #[test]
    fn degenerate_single_cell_scenario() {
        let cfg = ScenarioConfig {
            hexagons: 1,
            small_cells_per_hexagon: 0,
            ues_per_hexagon: 1,
            ..ScenarioConfig::default()
        };
        let net = generate_hexnet(&cfg, 3).unwrap();
        assert_eq!((net.n_cells(), net.n_ues()), (1, 1));
        assert_eq!(net.ues()[0].candidates, vec![0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::desk();
        assert_eq!(generate_hexnet(&cfg, 11).unwrap(), generate_hexnet(&cfg, 11).unwrap());
        assert_ne!(generate_hexnet(&cfg, 11).unwrap(), generate_hexnet(&cfg, 12).unwrap());
    }

    #[test]
    fn home_cell_maximizes_received_power() {
        let net = generate_hexnet(&ScenarioConfig::desk(), 5).unwrap();
        for (j, ue) in net.ues().iter().enumerate() {
            let best = ue
                .candidates
                .iter()
                .map(|&c| net.rx_power(c, j))
                .fold(f64::MIN, f64::max);
            assert_eq!(net.rx_power(ue.home_cell, j), best);
            assert_eq!(ue.candidates[0], ue.home_cell);
        }
    }

    #[test]
    fn sampled_points_stay_inside_their_hexagon() {
        let cfg = ScenarioConfig::desk();
        let net = generate_hexnet(&cfg, 2).unwrap();
        let centers = hexagon_centers(cfg.hexagons, cfg.radius_m);
        for (idx, ue) in net.ues().iter().enumerate() {
            let c = centers[idx / cfg.ues_per_hexagon];
            let d = (ue.position[0] - c[0]).hypot(ue.position[1] - c[1]);
            assert!(d <= cfg.radius_m + 1e-9);
        }
    }

    #[test]
    fn noise_power_per_resource_unit() {
        let dbm = -174.0 + 10.0 * 180e3f64.log10();
        assert!((dbm - (-121.447)).abs() < 1e-3);
        let w = ScenarioConfig::default().noise_power_w();
        assert!((10.0 * (w * 1e3).log10() - dbm).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ScenarioConfig { hexagons: 0, ..ScenarioConfig::desk() },
            ScenarioConfig { ues_per_hexagon: 0, ..ScenarioConfig::desk() },
            ScenarioConfig { macro_power_w: 0.0, ..ScenarioConfig::desk() },
            ScenarioConfig { demand_bps: -1.0, ..ScenarioConfig::desk() },
        ];
        for cfg in bad {
            assert!(matches!(generate_hexnet(&cfg, 0), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn neighbouring_centers_are_sqrt3_radius_apart() {
        let c = hexagon_centers(7, 500.0);
        for p in &c[1..] {
            assert!((p[0].hypot(p[1]) - 500.0 * 3f64.sqrt()).abs() < 1e-9);
        }
        let c19 = hexagon_centers(19, 500.0);
        assert_eq!(c19.len(), 19);
        for a in 0..19 {
            for b in a + 1..19 {
                let d = (c19[a][0] - c19[b][0]).hypot(c19[a][1] - c19[b][1]);
                assert!(d > 500.0 * 3f64.sqrt() - 1e-6);
            }
        }
    }
}
