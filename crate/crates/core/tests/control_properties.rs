#![allow(clippy::needless_range_loop)]

use lfc_core::bench39;
use lfc_core::control::{
    equivalent_control, gitsmc_step, signed_power, signed_power_vec, sliding_surface, switching_control,
    AreaController, ControllerState, GitsmcController, GitsmcGains,
};
use lfc_core::plant::{PlantMatrices, StateVec, STATE_DIM};
use lfc_core::sim::Rk4;
use proptest::prelude::*;

fn area1() -> PlantMatrices {
    bench39::published_matrices()[0]
}

fn regulating_area1() -> PlantMatrices {
    bench39::simulation_matrices().unwrap()[0]
}

fn state() -> impl Strategy<Value = StateVec> {
    prop::array::uniform7(-0.5f64..0.5)
}

/// Equivalent control written out term by term.
fn equivalent_oracle(x: &StateVec, m: &PlantMatrices, g: &GitsmcGains) -> f64 {
    let mut tb = 0.0;
    for k in 0..STATE_DIM {
        tb += m.surface_row[k] * m.b[k];
    }
    let mut acc = 0.0;
    for r in 0..STATE_DIM {
        let mut ax = 0.0;
        for c in 0..STATE_DIM {
            ax += m.a[r][c] * x[c];
        }
        let xa = x[r].signum() * x[r].abs().powf(g.alpha);
        acc += m.surface_row[r] * (ax + g.lambda1 * x[r] + g.lambda2 * if x[r] == 0.0 { 0.0 } else { xa });
    }
    -acc / tb
}

proptest! {
    #[test]
    fn signed_power_round_trip(x in -100.0f64..100.0, alpha in 1.01f64..1.99) {
        let back = signed_power(signed_power(x, alpha), 1.0 / alpha);
        prop_assert!((back - x).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn law_is_odd(x in state()) {
        for m in [area1(), regulating_area1()] {
            let g = GitsmcGains::default();
            let cs = ControllerState::default();
            let neg = x.map(|v| -v);
            let t = sliding_surface(&x, &cs, &m.surface_row, &g);
            prop_assert_eq!(sliding_surface(&neg, &cs, &m.surface_row, &g), -t);
            prop_assert_eq!(equivalent_control(&neg, &m, &g).unwrap(), -equivalent_control(&x, &m, &g).unwrap());
            prop_assert_eq!(switching_control(-t, &m, &g).unwrap(), -switching_control(t, &m, &g).unwrap());
        }
    }

    #[test]
    fn total_is_sum_of_parts(x in state(), i in prop::array::uniform7(-1.0f64..1.0)) {
        let c = GitsmcController::new(regulating_area1(), GitsmcGains::default()).unwrap();
        let cs = ControllerState { integral_x: i, integral_xalpha: i, pi_integral: 0.0 };
        let s = c.signal(&x, &cs);
        prop_assert_eq!(s.mu, s.mu_eq + s.mu_sw);
        let (s, _) = c.step(&x, &cs, 0.01);
        prop_assert_eq!(s.mu, s.mu_eq + s.mu_sw);
    }

    #[test]
    fn equivalent_control_matches_oracle(x in state()) {
        let g = GitsmcGains::default();
        for m in [area1(), regulating_area1()] {
            let got = equivalent_control(&x, &m, &g).unwrap();
            let want = equivalent_oracle(&x, &m, &g);
            prop_assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn controllers_are_decentralised(x in state(), other in state()) {
        // each area's law only sees its own state; feeding another area's
        // state must not change anything the controller computes
        let plants = bench39::simulation_matrices().unwrap();
        let g = GitsmcGains::default();
        let c0 = GitsmcController::new(plants[0], g).unwrap();
        let cs = ControllerState::default();
        let before = c0.signal(&x, &cs);
        let _ = GitsmcController::new(plants[1], g).unwrap().signal(&other, &cs);
        prop_assert_eq!(c0.signal(&x, &cs), before);
    }
}

#[test]
fn step_composes_the_parts() {
    let m = regulating_area1();
    let g = GitsmcGains::default();
    let x: StateVec = [0.01, -0.02, 0.03, -0.01, 0.02, 0.005, -0.004];
    let cs = ControllerState::default();
    let dt = 0.005;
    let (s, next) = gitsmc_step(&x, &cs, dt, &m, &g).unwrap();
    let mut hand = cs;
    let xa = signed_power_vec(&x, g.alpha);
    for k in 0..STATE_DIM {
        hand.integral_x[k] += x[k] * dt;
        hand.integral_xalpha[k] += xa[k] * dt;
    }
    assert_eq!(next, hand);
    let theta = sliding_surface(&x, &hand, &m.surface_row, &g);
    assert_eq!(s.theta, theta);
    assert_eq!(s.mu_eq, equivalent_control(&x, &m, &g).unwrap());
    assert_eq!(s.mu_sw, switching_control(theta, &m, &g).unwrap());
    assert_eq!(gitsmc_step(&x, &cs, dt, &m, &g).unwrap(), (s, next));
}

#[test]
fn zero_state_gives_zero_signal() {
    let (s, _) = gitsmc_step(&[0.0; 7], &ControllerState::default(), 0.01, &area1(), &GitsmcGains::default()).unwrap();
    assert_eq!((s.mu, s.theta), (0.0, 0.0));
}

/// On the nominal decoupled plant (no perturbation) the closed loop must give
/// Θ̇ = −η1Θ − η2·sat(Θ).
#[test]
fn reaching_law_holds_on_nominal_plant() {
    let m = regulating_area1();
    let g = GitsmcGains::default();
    let c = GitsmcController::new(m, g).unwrap();
    let zero = lfc_core::plant::DisturbanceInput::default();
    // augmented state: x (7) then controller integrals (15)
    let mut y = vec![0.0; 22];
    y[..7].copy_from_slice(&[0.0, 0.01, -0.02, 0.003, 0.05, 0.0, 0.0]);
    let theta_of = |y: &[f64]| {
        let mut x = [0.0; 7];
        x.copy_from_slice(&y[..7]);
        c.signal(&x, &ControllerState::from_slice(&y[7..])).theta
    };
    let dt = 1e-4;
    let mut rk = Rk4::new(22);
    for k in 0..2000 {
        let t0 = theta_of(&y);
        rk.step(k as f64 * dt, &mut y, dt, |yy, dy| {
            let mut x = [0.0; 7];
            x.copy_from_slice(&yy[..7]);
            let cs = ControllerState::from_slice(&yy[7..]);
            let mu = c.signal(&x, &cs).mu;
            dy[..7].copy_from_slice(&m.nominal_derivative(&x, mu, &zero));
            dy[7..].copy_from_slice(&c.state_rate(&x, &cs).to_array());
        })
        .unwrap();
        let t1 = theta_of(&y);
        let mid = 0.5 * (t0 + t1);
        let expected = -g.eta1 * mid - g.eta2 * lfc_core::control::saturation(mid, g.boundary_eps);
        let rate = (t1 - t0) / dt;
        assert!((rate - expected).abs() < 1e-3 * expected.abs().max(1e-3), "step {k}: {rate} vs {expected}");
    }
}
