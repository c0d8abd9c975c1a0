#![allow(clippy::needless_range_loop)]

use lfc_core::bench39;
use lfc_core::plant::{
    build_plant_matrices, AreaParameters, DisturbanceInput, MultiAreaModel, PlantMatrices, StateVec, SystemState,
    TieLineTopology, STATE_DIM,
};
use proptest::prelude::*;

fn formula_model() -> MultiAreaModel {
    let topo = bench39::topology();
    let params = bench39::area_parameters();
    let areas = (0..4)
        .map(|i| build_plant_matrices(&params[i], topo.row_sum(i)).unwrap())
        .collect();
    MultiAreaModel::new(areas, topo).unwrap()
}

/// Dense product written independently of the library's helpers.
fn dense(m: &PlantMatrices, x: &StateVec, mu: f64) -> StateVec {
    let mut out = [0.0; STATE_DIM];
    for r in 0..STATE_DIM {
        let mut acc = m.b[r] * mu;
        for c in 0..STATE_DIM {
            acc += m.a[r][c] * x[c];
        }
        out[r] = acc;
    }
    out
}

fn state_strategy(areas: usize) -> impl Strategy<Value = Vec<StateVec>> {
    prop::collection::vec(prop::array::uniform7(-0.1f64..0.1), areas)
}

proptest! {
    #[test]
    fn tie_flows_sum_to_zero(x in state_strategy(4), mu in prop::array::uniform4(-1.0f64..1.0)) {
        let model = formula_model();
        let d = vec![DisturbanceInput::default(); 4];
        let dx = model.plant_derivative(&SystemState(x), &mu, &d).unwrap();
        let sum: f64 = dx.0.iter().map(|v| v[0]).sum();
        prop_assert!(sum.abs() < 1e-12, "sum {sum}");
    }

    #[test]
    fn decoupled_matches_dense_product(x in state_strategy(4), mu in prop::array::uniform4(-1.0f64..1.0)) {
        let params = bench39::area_parameters();
        let areas: Vec<_> = params.iter().map(|p| build_plant_matrices(p, 0.0).unwrap()).collect();
        let model = MultiAreaModel::new(areas.clone(), TieLineTopology::isolated(4)).unwrap();
        let d = vec![DisturbanceInput::default(); 4];
        let dx = model.plant_derivative(&SystemState(x.clone()), &mu, &d).unwrap();
        for i in 0..4 {
            let oracle = dense(&areas[i], &x[i], mu[i]);
            for k in 0..STATE_DIM {
                prop_assert!((dx.0[i][k] - oracle[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_frequencies_give_no_tie_flow(f in -0.1f64..0.1) {
        let model = formula_model();
        let mut x = vec![[0.0; STATE_DIM]; 4];
        for v in &mut x {
            v[1] = f;
        }
        let dx = model.plant_derivative(&SystemState(x), &[0.0; 4], &[DisturbanceInput::default(); 4]).unwrap();
        for v in &dx.0 {
            prop_assert!(v[0].abs() < 1e-12);
        }
    }
}

#[test]
fn zero_everything_is_equilibrium() {
    let model = formula_model();
    let dx = model
        .plant_derivative(&SystemState::zeros(4), &[0.0; 4], &[DisturbanceInput::default(); 4])
        .unwrap();
    assert!(dx.flat().all(|v| v == 0.0));
}

#[test]
fn load_step_only_moves_frequency() {
    let model = formula_model();
    let mut d = vec![DisturbanceInput::default(); 4];
    d[0].load = 0.5;
    let dx = model.plant_derivative(&SystemState::zeros(4), &[0.0; 4], &d).unwrap();
    let h1 = bench39::area_parameters()[0].inertia;
    for (i, v) in dx.0.iter().enumerate() {
        for (k, val) in v.iter().enumerate() {
            let expected = if (i, k) == (0, 1) { -0.5 / (2.0 * h1) } else { 0.0 };
            assert!((val - expected).abs() < 1e-15, "area {i} state {k}: {val}");
        }
    }
}

#[test]
fn isolated_formula_area_has_no_tie_entry() {
    let p = AreaParameters::new(10.0, 1.0, 0.0471, 0.3742, 0.0804).unwrap();
    assert_eq!(build_plant_matrices(&p, 0.0).unwrap().a[0][1], 0.0);
}
