mod common;

use common::*;
use jtcouple::coupling::{async_fixed_point, fixed_point_from, fixed_point_load, CouplingMap, SolverOptions};
use jtcouple::netmodel::{Association, Cell, CellKind, NetworkInstance, UserEquipment};
use proptest::prelude::*;

fn pair(own: f64, cross: f64, noise: f64, demand: f64) -> NetworkInstance {
    let cells = (0..2)
        .map(|i| Cell {
            id: i,
            kind: CellKind::Macro,
            position: [0.0, 0.0],
            power_per_ru: 1.0,
        })
        .collect();
    let ues = (0..2)
        .map(|j| UserEquipment {
            id: j,
            position: [0.0, 0.0],
            demand,
            home_cell: j,
            candidates: vec![j],
        })
        .collect();
    NetworkInstance::new(cells, ues, vec![vec![own, cross], vec![cross, own]], noise, 1, 1.0).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn tight() -> SolverOptions {
    SolverOptions {
        tolerance: 1e-14,
        ..SolverOptions::default()
    }
}

#[test]
fn symmetric_pair_matches_scalar_oracle() {
    let net = pair(1.0, 0.25, 0.1, 0.3);
    let r = fixed_point_load(&Association::home_only(&net), &net, &tight()).unwrap();
    let x = bisect(|x| x - 0.3 / (1.0 + 1.0 / (0.25 * x + 0.1)).log2(), 0.0, 1.0);
    assert!((r.load[0] - x).abs() < 1e-12 && (r.load[1] - x).abs() < 1e-12);
    assert!((x - 0.0942).abs() < 1e-3);
}

#[test]
fn frozen_interferer_matches_scalar_oracle() {
    let net = pair(1.0, 0.25, 0.1, 0.3);
    let r = async_fixed_point(&Association::home_only(&net), &net, &[0], &[0.2, 0.2], &tight()).unwrap();
    let x = bisect(|x| x - 0.3 / (1.0f64 + 1.0 / (0.25 * 0.2 + 0.1)).log2(), 0.0, 1.0);
    assert_eq!(r.load[1], 0.2);
    assert!((r.load[0] - x).abs() < 1e-12);
}

#[test]
fn iterates_from_zero_rise_monotonically_on_desk_instance() {
    let net = desk_instance(0, 0.9);
    let a = Association::home_only(&net);
    let map = CouplingMap::new(&net, &a).unwrap();
    let mut x = vec![0.0; net.n_cells()];
    for _ in 0..50 {
        let next = map.apply(&x);
        assert!(le(&x, &next, 0.0));
        x = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sif_properties_hold(seed in 0u64..10_000, target in 0.2f64..0.95, alpha in 1.01f64..5.0) {
        let net = tiny_instance(seed, target);
        let mut rng = rng(seed);
        let a = random_association(&net, &mut rng);
        let map = CouplingMap::new(&net, &a).unwrap();
        let n = net.n_cells();
        let lo: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 + 0.05).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v * 1.5).collect();
        prop_assert!(le(&map.apply(&lo), &map.apply(&hi), 0.0));
        let fx = map.apply(&lo);
        let scaled: Vec<f64> = lo.iter().map(|v| alpha * v).collect();
        let fax = map.apply(&scaled);
        for i in 0..n {
            prop_assert!(fx[i] == 0.0 && fax[i] == 0.0 || alpha * fx[i] > fax[i]);
        }
        let r = fixed_point_load(&a, &net, &tight()).unwrap();
        if r.converged() {
            for x0 in [vec![1.0; n], lo.clone()] {
                let s = fixed_point_from(&a, &net, &x0, &tight()).unwrap();
                prop_assert!(inf_norm(&s.load, &r.load) <= 1e-10);
            }
            let back = map.apply_dual(&r.sinr);
            for (g, b) in r.sinr.iter().zip(&back) {
                prop_assert!((g - b).abs() / g.max(1.0) <= 1e-10);
            }
        }
    }
}
