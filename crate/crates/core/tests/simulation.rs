use lfc_core::bench39;
use lfc_core::control::{GitsmcGains, PiGains};
use lfc_core::plant::{build_plant_matrices, idx, PlantMatrices, TieLineTopology, STATE_DIM};
use lfc_core::sim::{
    finite_time_estimate, residual_uncertainty, run_scenario, terminal_arrival_time, AreaConfig, ControllerKind,
    DisturbanceSchedule, MonitorThresholds, ScenarioConfig, Segment,
};

fn isolated_area(controller: ControllerKind, dt: f64, horizon: f64) -> ScenarioConfig {
    let p = bench39::area_parameters()[0];
    let plant = build_plant_matrices(&p, 0.0).unwrap();
    ScenarioConfig {
        name: "isolated".into(),
        horizon,
        dt,
        controller,
        topology: TieLineTopology::isolated(1),
        areas: vec![AreaConfig {
            plant,
            frequency_bias: p.frequency_bias,
            gitsmc: GitsmcGains::default(),
            pi: PiGains::default(),
            zeta: 1.0,
            initial: [0.0, 0.01, 0.0, 0.0, 0.02, 0.0, 0.0],
        }],
        schedule: DisturbanceSchedule::quiet(1),
        controller_period: None,
        control_limit: None,
        monitor: MonitorThresholds::default(),
    }
}

type Mat = [[f64; STATE_DIM]; STATE_DIM];

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[0.0; STATE_DIM]; STATE_DIM];
    for i in 0..STATE_DIM {
        for j in 0..STATE_DIM {
            out[i][j] = (0..STATE_DIM).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// exp(A·t) by scaling and squaring a 30-term Taylor series.
fn expm(a: &Mat, t: f64) -> Mat {
    let squarings = 20;
    let s = t / f64::from(1u32 << squarings);
    let mut scaled = *a;
    for row in &mut scaled {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    let mut sum = [[0.0; STATE_DIM]; STATE_DIM];
    let mut term = [[0.0; STATE_DIM]; STATE_DIM];
    for i in 0..STATE_DIM {
        sum[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..30 {
        term = matmul(&term, &scaled);
        for row in &mut term {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn exact_open_loop(plant: &PlantMatrices, x0: &[f64; STATE_DIM], t: f64) -> [f64; STATE_DIM] {
    let e = expm(&plant.a, t);
    std::array::from_fn(|i| (0..STATE_DIM).map(|j| e[i][j] * x0[j]).sum())
}

#[test]
fn open_loop_matches_matrix_exponential() {
    let mut errs = Vec::new();
    for dt in [0.02, 0.01] {
        let cfg = isolated_area(ControllerKind::Open, dt, 2.0);
        let trace = run_scenario(&cfg).unwrap();
        let last = trace.samples.last().unwrap();
        let exact = exact_open_loop(&cfg.areas[0].plant, &cfg.areas[0].initial, last.t);
        let err = (0..STATE_DIM).map(|k| (last.state[0][k] - exact[k]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "dt {dt}: error {err}");
        errs.push(err);
    }
    // fourth-order global error: halving dt shrinks it about 16x
    let ratio = errs[0] / errs[1];
    assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn runs_are_bitwise_repeatable() {
    let cfg = bench39::builtin_benchmark().with_horizon(60.0);
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.schedule.noise_seed += 1;
    assert_ne!(run_scenario(&other).unwrap(), a);
}

#[test]
fn benchmark_conserves_tie_flow_and_regulates() {
    let mut cfg = bench39::builtin_benchmark().with_horizon(120.0);
    cfg.schedule.noise_std = 0.0;
    let trace = run_scenario(&cfg).unwrap();
    for s in &trace.samples {
        let sum: f64 = s.state.iter().map(|x| x[idx::TIE]).sum();
        assert!(sum.abs() < 1e-9, "t {}: tie sum {sum}", s.t);
    }
    // once the start-up transient has died out, and before the first load step
    let quiet = trace.samples.iter().filter(|s| s.t > 20.0 && s.t < 50.0);
    for s in quiet {
        for x in &s.state {
            assert!(x[idx::FREQ].abs() < 1e-3, "t {}: df {}", s.t, x[idx::FREQ]);
        }
    }
}

#[test]
fn terminal_subsystem_arrives_within_estimate() {
    let (lambda, alpha, eps, dt) = (24.0, 1.7, 1e-3, 1e-3);
    for x0 in [0.5, 1.0, 2.0, -1.5] {
        let bound = finite_time_estimate(f64::abs(x0), eps, lambda, alpha).unwrap();
        let t = terminal_arrival_time(x0, eps, lambda, alpha, dt, 2.0 * bound + 1.0).unwrap().unwrap();
        assert!(t <= bound + dt, "x0 {x0}: {t} > {bound}");
        assert!(t >= bound - 2.0 * dt, "x0 {x0}: {t} much earlier than {bound}");
    }
}

#[test]
fn residual_is_zero_without_perturbation() {
    let cfg = isolated_area(ControllerKind::Open, 0.001, 3.0);
    let trace = run_scenario(&cfg).unwrap();
    let u = residual_uncertainty(&trace, &cfg.model().unwrap(), &cfg.zetas()).unwrap();
    // the end points use one-sided differences, so only interior samples are exact to O(dt²)
    let sigma = &u.areas[0].sigma;
    let worst = sigma[1..sigma.len() - 1]
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-4, "max |sigma| {worst}");
}

#[test]
fn residual_recovers_a_load_step() {
    let mut cfg = isolated_area(ControllerKind::Open, 0.001, 3.0);
    cfg.areas[0].initial = [0.0; STATE_DIM];
    cfg.schedule.areas[0].load = vec![Segment::new(1.0, 3.0, 0.2)];
    let trace = run_scenario(&cfg).unwrap();
    let u = residual_uncertainty(&trace, &cfg.model().unwrap(), &cfg.zetas()).unwrap();
    let h = bench39::area_parameters()[0].inertia;
    let expected = -0.2 / (2.0 * h);
    for (s, sigma) in trace.samples.iter().zip(&u.areas[0].sigma) {
        if s.t > 1.1 && s.t < 2.9 {
            assert!((sigma[idx::FREQ] - expected).abs() < 1e-4, "t {}: {}", s.t, sigma[idx::FREQ]);
        } else if s.t < 0.9 {
            assert!(sigma[idx::FREQ].abs() < 1e-9);
        }
    }
}

#[test]
fn zero_order_hold_with_fine_period_tracks_continuous() {
    let mut cfg = isolated_area(ControllerKind::Gitsmc, 0.001, 2.0);
    cfg.areas[0].plant = bench39::simulation_matrices().unwrap()[0];
    cfg.areas[0].plant.a[0][1] = 0.0;
    let cont = run_scenario(&cfg).unwrap();
    cfg.controller_period = Some(0.001);
    let held = run_scenario(&cfg).unwrap();
    let d = cont.max_state_difference(&held).unwrap();
    assert!(d < 1e-3, "difference {d}");
}
