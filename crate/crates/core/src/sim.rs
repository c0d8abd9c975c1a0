//! Fixed-step closed-loop simulation of the coupled areas, plus the monitors
//! that read a finished trace back (reaching condition, lumped perturbation,
//! finite-time estimate).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{
    signed_power, AreaController, ControlSignal, Controller, ControllerState, GitsmcController, GitsmcGains,
    PiController, PiGains, CONTROLLER_STATE_DIM,
};
use crate::error::{LfcError, Result};
use crate::plant::{DisturbanceInput, MultiAreaModel, PlantMatrices, StateVec, TieLineTopology, STATE_DIM};

/// States beyond this magnitude (pu) abort a run.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// Constant `level` on `start <= t < end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

impl Segment {
    pub fn new(start: f64, end: f64, level: f64) -> Self {
        Segment { start, end, level }
    }

    fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

fn level_at(segments: &[Segment], t: f64) -> f64 {
    segments.iter().find(|s| s.contains(t)).map_or(0.0, |s| s.level)
}

fn validate_channel(name: &str, segments: &[Segment], horizon: f64) -> Result<()> {
    let mut sorted: Vec<&Segment> = segments.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for s in &sorted {
        if !(s.start.is_finite() && s.end.is_finite() && s.level.is_finite()) {
            return Err(LfcError::config(format!("{name}: non-finite segment")));
        }
        if s.start < 0.0 || s.end > horizon + 1e-9 || s.start >= s.end {
            return Err(LfcError::config(format!(
                "{name}: segment [{}, {}) outside [0, {horizon}] or empty",
                s.start, s.end
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].start < w[0].end {
            return Err(LfcError::config(format!(
                "{name}: segments [{}, {}) and [{}, {}) overlap",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    Ok(())
}

/// Piecewise-constant load, solar and wind profiles of one area.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AreaSchedule {
    pub load: Vec<Segment>,
    pub solar: Vec<Segment>,
    pub wind: Vec<Segment>,
}

impl AreaSchedule {
    pub fn levels_at(&self, t: f64) -> DisturbanceInput {
        DisturbanceInput::new(
            level_at(&self.load, t),
            level_at(&self.solar, t),
            level_at(&self.wind, t),
        )
    }

    fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.load.iter().chain(&self.solar).chain(&self.wind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSchedule {
    pub areas: Vec<AreaSchedule>,
    pub noise_std: f64,
    pub noise_seed: u64,
}

impl DisturbanceSchedule {
    pub fn quiet(areas: usize) -> Self {
        DisturbanceSchedule {
            areas: vec![AreaSchedule::default(); areas],
            noise_std: 0.0,
            noise_seed: 0,
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(LfcError::config("noise_std must be finite and >= 0"));
        }
        for (i, a) in self.areas.iter().enumerate() {
            validate_channel(&format!("area {} load", i + 1), &a.load, horizon)?;
            validate_channel(&format!("area {} solar", i + 1), &a.solar, horizon)?;
            validate_channel(&format!("area {} wind", i + 1), &a.wind, horizon)?;
        }
        Ok(())
    }

    /// Deterministic levels at time `t`, without noise.
    pub fn levels_at(&self, t: f64) -> Vec<DisturbanceInput> {
        self.areas.iter().map(|a| a.levels_at(t)).collect()
    }

    /// Sorted, de-duplicated times at which any channel of any area changes level.
    pub fn edges(&self, horizon: f64) -> Vec<f64> {
        let mut edges: Vec<f64> = Vec::new();
        for a in &self.areas {
            for s in a.segments() {
                for t in [s.start, s.end] {
                    if t < horizon {
                        edges.push(t);
                    }
                }
            }
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // an edge only counts if some level actually changes there
        edges.retain(|&t| {
            let eps = 1e-7;
            self.areas.iter().any(|a| a.levels_at(t - eps) != a.levels_at(t + eps))
        });
        edges
    }

    /// Edges at which this area's own channels change level.
    pub fn area_edges(&self, area: usize, horizon: f64) -> Vec<f64> {
        let single = DisturbanceSchedule {
            areas: vec![self.areas[area].clone()],
            noise_std: 0.0,
            noise_seed: 0,
        };
        single.edges(horizon)
    }
}

/// Seeded zero-mean Gaussian source. ChaCha8 stream, normal deviates by the
/// ziggurat method of `rand_distr`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl NoiseSource {
    pub fn new(std: f64, seed: u64) -> Result<Self> {
        let normal = if std > 0.0 {
            Some(Normal::new(0.0, std).map_err(|e| LfcError::config(format!("noise: {e}")))?)
        } else {
            None
        };
        Ok(NoiseSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal,
        })
    }

    pub fn draw(&mut self) -> f64 {
        match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

/// Scheduled levels at `t` plus one noise draw per channel, drawn area by area
/// in load, solar, wind order.
pub fn disturbance_at(schedule: &DisturbanceSchedule, t: f64, noise: &mut NoiseSource) -> Vec<DisturbanceInput> {
    schedule
        .areas
        .iter()
        .map(|a| {
            let d = a.levels_at(t);
            DisturbanceInput::new(d.load + noise.draw(), d.solar + noise.draw(), d.wind + noise.draw())
        })
        .collect()
}

/// Reusable buffers for classical fourth-order Runge–Kutta.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` in place by `dt`. `f(y, dy)` must not depend on time;
    /// inputs are whatever the closure captures. `t` only labels errors.
    pub fn step<F>(&mut self, t: f64, y: &mut [f64], dt: f64, mut f: F) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len();
        let check = |k: &[f64]| -> Result<()> {
            match k.iter().position(|v| !v.is_finite()) {
                Some(index) => Err(LfcError::NonFiniteDerivative { time: t, index }),
                None => Ok(()),
            }
        };
        f(y, &mut self.k1);
        check(&self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        check(&self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        check(&self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        check(&self.k4)?;
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// One RK4 step of `f` from `y`, returning the new state.
pub fn rk4_step<F>(f: F, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(LfcError::param(format!("dt must be > 0, got {dt}")));
    }
    let mut out = y.to_vec();
    Rk4::new(y.len()).step(t, &mut out, dt, f)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Gitsmc,
    Pi,
    Open,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Gitsmc => "gitsmc",
            ControllerKind::Pi => "pi",
            ControllerKind::Open => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gitsmc" | "smc" => Ok(ControllerKind::Gitsmc),
            "pi" => Ok(ControllerKind::Pi),
            "none" | "open" => Ok(ControllerKind::Open),
            other => Err(LfcError::config(format!("unknown controller '{other}' (gitsmc, pi, none)"))),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything one area contributes to a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaConfig {
    /// Nominal model; its surface row is the one the sliding-mode controller uses.
    pub plant: PlantMatrices,
    pub frequency_bias: f64,
    pub gitsmc: GitsmcGains,
    pub pi: PiGains,
    /// Declared bound on the lumped perturbation norm.
    pub zeta: f64,
    pub initial: StateVec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorThresholds {
    pub reach_delta: f64,
    pub exclusion_window: f64,
}

impl Default for MonitorThresholds {
    fn default() -> Self {
        MonitorThresholds {
            reach_delta: 0.1,
            exclusion_window: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon: f64,
    pub dt: f64,
    pub controller: ControllerKind,
    pub topology: TieLineTopology,
    pub areas: Vec<AreaConfig>,
    pub schedule: DisturbanceSchedule,
    /// `None` evaluates the controller continuously (integrals co-integrated
    /// with the plant); `Some(p)` samples it every `p` seconds and holds μ.
    pub controller_period: Option<f64>,
    /// Symmetric bound on the applied μ.
    pub control_limit: Option<f64>,
    pub monitor: MonitorThresholds,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(LfcError::config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(LfcError::config(format!("horizon {} must be >= dt {}", self.horizon, self.dt)));
        }
        if self.areas.is_empty() {
            return Err(LfcError::config("scenario has no areas"));
        }
        if self.topology.len() != self.areas.len() {
            return Err(LfcError::config(format!(
                "topology has {} areas, scenario has {}",
                self.topology.len(),
                self.areas.len()
            )));
        }
        if self.schedule.areas.len() != self.areas.len() {
            return Err(LfcError::config(format!(
                "schedule has {} areas, scenario has {}",
                self.schedule.areas.len(),
                self.areas.len()
            )));
        }
        self.schedule.validate(self.horizon)?;
        if let Some(p) = self.controller_period {
            if !(p >= self.dt) || !p.is_finite() {
                return Err(LfcError::config(format!("controller_period {p} must be >= dt")));
            }
        }
        if let Some(m) = self.control_limit {
            if !(m > 0.0) {
                return Err(LfcError::config("control_limit must be > 0"));
            }
        }
        for (i, a) in self.areas.iter().enumerate() {
            if !a.initial.iter().all(|v| v.is_finite()) {
                return Err(LfcError::config(format!("area {}: initial state not finite", i + 1)));
            }
            if !(a.zeta > 0.0) {
                return Err(LfcError::config(format!("area {}: zeta must be > 0", i + 1)));
            }
        }
        self.controllers().map(|_| ())
    }

    pub fn model(&self) -> Result<MultiAreaModel> {
        MultiAreaModel::new(self.areas.iter().map(|a| a.plant).collect(), self.topology.clone())
    }

    pub fn controllers(&self) -> Result<Vec<Controller>> {
        self.areas
            .iter()
            .map(|a| {
                Ok(match self.controller {
                    ControllerKind::Gitsmc => Controller::Gitsmc(GitsmcController::new(a.plant, a.gitsmc)?),
                    ControllerKind::Pi => Controller::Pi(PiController::new(a.pi, a.frequency_bias)?),
                    ControllerKind::Open => Controller::Open,
                })
            })
            .collect()
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }

    /// Same scenario with every scheduled disturbance and the noise removed.
    pub fn without_disturbances(mut self) -> Self {
        self.schedule = DisturbanceSchedule {
            noise_std: 0.0,
            ..DisturbanceSchedule::quiet(self.areas.len())
        };
        self
    }

    /// Same scenario over a different horizon; schedule segments are clipped
    /// to it and segments starting at or after it are dropped.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        for a in &mut self.schedule.areas {
            for ch in [&mut a.load, &mut a.solar, &mut a.wind] {
                ch.retain(|s| s.start < horizon);
                for s in ch.iter_mut() {
                    s.end = s.end.min(horizon);
                }
            }
        }
        self
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.areas.iter().map(|a| a.zeta).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: Vec<StateVec>,
    pub signals: Vec<ControlSignal>,
    /// μ actually fed to the plant (after the optional limit).
    pub applied: Vec<f64>,
    /// Disturbance applied over the step that starts at this sample.
    pub disturbance: Vec<DisturbanceInput>,
}

impl TraceSample {
    /// Lyapunov value Θ²/2 of one area.
    pub fn lyapunov(&self, area: usize) -> f64 {
        0.5 * self.signals[area].theta * self.signals[area].theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub horizon: f64,
    pub controller: ControllerKind,
    pub samples: Vec<TraceSample>,
    /// Scheduled step edges.
    pub events: Vec<f64>,
}

impl SimTrace {
    pub fn areas(&self) -> usize {
        self.samples.first().map_or(0, |s| s.state.len())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// One state component of one area over the whole trace.
    pub fn series(&self, area: usize, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.state[area][index]).collect()
    }

    pub fn theta_series(&self, area: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.signals[area].theta).collect()
    }

    /// Largest absolute state difference against another trace on the
    /// common time grid (`other` may be finer by an integer factor).
    pub fn max_state_difference(&self, other: &SimTrace) -> Option<f64> {
        let ratio = (self.dt / other.dt).round() as usize;
        if ratio == 0 || ((self.dt / other.dt) - ratio as f64).abs() > 1e-9 {
            return None;
        }
        let mut worst = 0.0f64;
        for (k, s) in self.samples.iter().enumerate() {
            let o = other.samples.get(k * ratio)?;
            for (a, b) in s.state.iter().flatten().zip(o.state.iter().flatten()) {
                worst = worst.max((a - b).abs());
            }
        }
        Some(worst)
    }
}

/// Runs a scenario from t = 0 to the horizon.
///
/// Each step samples the disturbance at the step midpoint, evaluates every
/// area's controller on that area's own state and advances the coupled plant
/// by one RK4 step.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimTrace> {
    config.validate()?;
    let model = config.model()?;
    let controllers = config.controllers()?;
    let n_areas = config.areas.len();
    let dt = config.dt;
    let steps = config.steps();
    let limit = config.control_limit;
    let clamp = |mu: f64| match limit {
        Some(m) => mu.clamp(-m, m),
        None => mu,
    };

    let plant_dim = n_areas * STATE_DIM;
    let ctrl_dim = n_areas * CONTROLLER_STATE_DIM;
    let continuous = config.controller_period.is_none();
    let mut y = vec![0.0; if continuous { plant_dim + ctrl_dim } else { plant_dim }];
    for (i, a) in config.areas.iter().enumerate() {
        y[i * STATE_DIM..(i + 1) * STATE_DIM].copy_from_slice(&a.initial);
    }
    let mut held_states = vec![ControllerState::default(); n_areas];
    let period_steps = config.controller_period.map(|p| ((p / dt).round() as usize).max(1));
    let mut held_signals = vec![ControlSignal::default(); n_areas];

    let mut noise = NoiseSource::new(config.schedule.noise_std, config.schedule.noise_seed)?;
    let mut rk4 = Rk4::new(y.len());
    let mut samples = Vec::with_capacity(steps + 1);

    let split = |y: &[f64]| -> Vec<StateVec> {
        (0..n_areas)
            .map(|i| {
                let mut x = [0.0; STATE_DIM];
                x.copy_from_slice(&y[i * STATE_DIM..(i + 1) * STATE_DIM]);
                x
            })
            .collect()
    };

    // scratch for the continuous derivative closure
    let mut xs = vec![[0.0; STATE_DIM]; n_areas];
    let mut dx = vec![[0.0; STATE_DIM]; n_areas];
    let mut mus = vec![0.0; n_areas];

    for k in 0..=steps {
        let t = k as f64 * dt;
        let disturbance = disturbance_at(&config.schedule, t + 0.5 * dt, &mut noise);
        let state = split(&y);

        let signals: Vec<ControlSignal> = if continuous {
            (0..n_areas)
                .map(|i| {
                    let off = plant_dim + i * CONTROLLER_STATE_DIM;
                    let cs = ControllerState::from_slice(&y[off..off + CONTROLLER_STATE_DIM]);
                    controllers[i].signal(&state[i], &cs)
                })
                .collect()
        } else {
            let every = period_steps.unwrap_or(1);
            if k % every == 0 {
                let period = every as f64 * dt;
                for i in 0..n_areas {
                    let (sig, next) = controllers[i].step(&state[i], &held_states[i], period);
                    held_signals[i] = sig;
                    held_states[i] = next;
                }
            }
            held_signals.clone()
        };
        let applied: Vec<f64> = signals.iter().map(|s| clamp(s.mu)).collect();

        samples.push(TraceSample {
            t,
            state,
            signals,
            applied: applied.clone(),
            disturbance: disturbance.clone(),
        });
        if k == steps {
            break;
        }

        let result = if continuous {
            rk4.step(t, &mut y, dt, |yy, dy| {
                for i in 0..n_areas {
                    xs[i].copy_from_slice(&yy[i * STATE_DIM..(i + 1) * STATE_DIM]);
                }
                for i in 0..n_areas {
                    let off = plant_dim + i * CONTROLLER_STATE_DIM;
                    let cs = ControllerState::from_slice(&yy[off..off + CONTROLLER_STATE_DIM]);
                    mus[i] = clamp(controllers[i].signal(&xs[i], &cs).mu);
                    let rate = controllers[i].state_rate(&xs[i], &cs).to_array();
                    dy[off..off + CONTROLLER_STATE_DIM].copy_from_slice(&rate);
                }
                model.derivative_into(&xs, &mus, &disturbance, &mut dx);
                for i in 0..n_areas {
                    dy[i * STATE_DIM..(i + 1) * STATE_DIM].copy_from_slice(&dx[i]);
                }
            })
        } else {
            rk4.step(t, &mut y, dt, |yy, dy| {
                for i in 0..n_areas {
                    xs[i].copy_from_slice(&yy[i * STATE_DIM..(i + 1) * STATE_DIM]);
                }
                model.derivative_into(&xs, &applied, &disturbance, &mut dx);
                for i in 0..n_areas {
                    dy[i * STATE_DIM..(i + 1) * STATE_DIM].copy_from_slice(&dx[i]);
                }
            })
        };
        if let Err(LfcError::NonFiniteDerivative { time, index }) = result {
            let (area, index) = locate(index, n_areas);
            return Err(LfcError::Diverged {
                time,
                area,
                index,
                value: f64::NAN,
            });
        }
        result?;

        let t_next = (k + 1) as f64 * dt;
        for (j, v) in y[..plant_dim].iter().enumerate() {
            if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
                return Err(LfcError::Diverged {
                    time: t_next,
                    area: j / STATE_DIM + 1,
                    index: j % STATE_DIM,
                    value: *v,
                });
            }
        }
    }

    Ok(SimTrace {
        dt,
        horizon: config.horizon,
        controller: config.controller,
        samples,
        events: config.schedule.edges(config.horizon),
    })
}

fn locate(flat: usize, n_areas: usize) -> (usize, usize) {
    let plant_dim = n_areas * STATE_DIM;
    if flat < plant_dim {
        (flat / STATE_DIM + 1, flat % STATE_DIM)
    } else {
        let c = flat - plant_dim;
        (c / CONTROLLER_STATE_DIM + 1, STATE_DIM + c % CONTROLLER_STATE_DIM)
    }
}

/// Central-difference derivative of a uniformly sampled series; one-sided at
/// both ends.
pub fn finite_difference(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| match (k, n) {
            (_, 0 | 1) => 0.0,
            (0, _) => (values[1] - values[0]) / dt,
            (k, n) if k == n - 1 => (values[k] - values[k - 1]) / dt,
            (k, _) => (values[k + 1] - values[k - 1]) / (2.0 * dt),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaReaching {
    pub violations: usize,
    pub considered: usize,
    pub max_abs_theta: f64,
}

impl AreaReaching {
    pub fn fraction(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            self.violations as f64 / self.considered as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachingReport {
    pub delta: f64,
    pub exclusion_window: f64,
    pub areas: Vec<AreaReaching>,
}

/// Counts samples where Θ·Θ̇ ≥ 0 while |Θ| > `delta`, skipping
/// `exclusion_window` seconds after each scheduled step edge.
pub fn reaching_monitor(trace: &SimTrace, delta: f64, exclusion_window: f64) -> ReachingReport {
    let excluded = |t: f64| {
        trace
            .events
            .iter()
            .any(|&e| t >= e - 1e-12 && t < e + exclusion_window - 1e-12)
    };
    let areas = (0..trace.areas())
        .map(|i| {
            let theta = trace.theta_series(i);
            let rate = finite_difference(&theta, trace.dt);
            let mut r = AreaReaching {
                violations: 0,
                considered: 0,
                max_abs_theta: theta.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            };
            if theta.len() < 2 {
                return r;
            }
            for (k, s) in trace.samples.iter().enumerate() {
                if excluded(s.t) {
                    continue;
                }
                r.considered += 1;
                if theta[k] * rate[k] >= 0.0 && theta[k].abs() > delta {
                    r.violations += 1;
                }
            }
            r
        })
        .collect();
    ReachingReport {
        delta,
        exclusion_window,
        areas,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaUncertainty {
    /// σ_i at every sample.
    pub sigma: Vec<StateVec>,
    pub max_norm: f64,
    pub bound: f64,
}

impl AreaUncertainty {
    pub fn bound_holds(&self) -> bool {
        self.max_norm <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyTrace {
    pub areas: Vec<AreaUncertainty>,
}

/// Reconstructs σ_i = ẋ_i − A0_i·x_i − B0_i·μ_i from a trace, with ẋ from
/// central differences, and compares its peak norm with `zeta[i]`.
pub fn residual_uncertainty(trace: &SimTrace, model: &MultiAreaModel, zeta: &[f64]) -> Result<UncertaintyTrace> {
    if trace.is_empty() {
        return Err(LfcError::EmptyTrace);
    }
    let n = trace.areas();
    if model.len() != n || zeta.len() != n {
        return Err(LfcError::DimensionMismatch {
            what: "uncertainty monitor areas",
            expected: n,
            found: model.len().min(zeta.len()),
        });
    }
    let zero = DisturbanceInput::default();
    let areas = (0..n)
        .map(|i| {
            let rates: Vec<Vec<f64>> = (0..STATE_DIM)
                .map(|c| finite_difference(&trace.series(i, c), trace.dt))
                .collect();
            let sigma: Vec<StateVec> = trace
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let nominal = model.areas[i].nominal_derivative(&s.state[i], s.applied[i], &zero);
                    let mut out = [0.0; STATE_DIM];
                    for c in 0..STATE_DIM {
                        out[c] = rates[c][k] - nominal[c];
                    }
                    out
                })
                .collect();
            let max_norm = sigma
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            AreaUncertainty {
                sigma,
                max_norm,
                bound: zeta[i],
            }
        })
        .collect();
    Ok(UncertaintyTrace { areas })
}

/// Time for ẋ = −λ·sgn(x)|x|^α to shrink |x| from `x0_mag` to `eps`.
pub fn finite_time_estimate(x0_mag: f64, eps: f64, lambda: f64, alpha: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(LfcError::param(format!("eps must be > 0, got {eps}")));
    }
    if !(x0_mag >= eps) {
        return Err(LfcError::param(format!("x0 magnitude {x0_mag} must be >= eps {eps}")));
    }
    if !(alpha > 1.0) || !(lambda > 0.0) {
        return Err(LfcError::param("finite-time estimate needs alpha > 1 and lambda > 0"));
    }
    Ok((eps.powf(1.0 - alpha) - x0_mag.powf(1.0 - alpha)) / (lambda * (alpha - 1.0)))
}

/// Integrates ẋ = −λ·sgn(x)|x|^α with RK4 and returns the first grid time
/// at which |x| ≤ `eps`, or `None` if that does not happen before `t_max`.
pub fn terminal_arrival_time(x0: f64, eps: f64, lambda: f64, alpha: f64, dt: f64, t_max: f64) -> Result<Option<f64>> {
    let mut y = [x0];
    let mut rk4 = Rk4::new(1);
    let steps = (t_max / dt).ceil() as usize;
    for k in 0..=steps {
        if y[0].abs() <= eps {
            return Ok(Some(k as f64 * dt));
        }
        rk4.step(k as f64 * dt, &mut y, dt, |x, dx| dx[0] = -lambda * signed_power(x[0], alpha))?;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{aggregate_area_parameters, build_plant_matrices, GeneratorParameters};

    fn single_area(zero_ties: bool) -> ScenarioConfig {
        let g = GeneratorParameters::new(1000.0, 0.3742, 0.0804, 0.0471, 10.0, 1.0).unwrap();
        let mut p = aggregate_area_parameters(&[g], 1.0).unwrap();
        p.integral_gain = 0.05;
        let plant = build_plant_matrices(&p, 0.0).unwrap();
        let _ = zero_ties;
        ScenarioConfig {
            name: "single".into(),
            horizon: 20.0,
            dt: 0.01,
            controller: ControllerKind::Open,
            topology: TieLineTopology::isolated(1),
            areas: vec![AreaConfig {
                plant,
                frequency_bias: p.frequency_bias,
                gitsmc: GitsmcGains::default(),
                pi: PiGains::default(),
                zeta: 1.0,
                initial: [0.0; STATE_DIM],
            }],
            schedule: DisturbanceSchedule::quiet(1),
            controller_period: None,
            control_limit: None,
            monitor: MonitorThresholds::default(),
        }
    }

    #[test]
    fn rk4_examples() {
        let y = rk4_step(|_, dy| dy[0] = 0.0, 0.0, &[3.0], 0.1).unwrap();
        assert_eq!(y, vec![3.0]);
        let y = rk4_step(|x, dy| dy[0] = -x[0], 0.0, &[1.0], 0.1).unwrap();
        assert!((y[0] - 0.904_837_5).abs() < 1e-9);
        assert!((y[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_reports_non_finite_derivative() {
        let err = rk4_step(|x, dy| dy[0] = 1.0 / x[0] - 1.0 / x[0], 2.5, &[0.0], 0.1).unwrap_err();
        assert!(matches!(err, LfcError::NonFiniteDerivative { index: 0, time } if time == 2.5));
    }

    #[test]
    fn finite_time_examples() {
        assert_eq!(finite_time_estimate(1e-3, 1e-3, 24.0, 1.7).unwrap(), 0.0);
        let t = finite_time_estimate(1.0, 1e-3, 24.0, 1.7).unwrap();
        assert!((t - (1000f64.powf(0.7) - 1.0) / 16.8).abs() < 1e-12);
        assert!((t - 7.434).abs() < 1e-3);
        let t = finite_time_estimate(2.0, 0.01, 24.0, 1.7).unwrap();
        assert!((t - 1.4585).abs() < 1e-4);
        assert!(finite_time_estimate(1.0, 0.0, 24.0, 1.7).is_err());
        assert!(finite_time_estimate(1.0, -1.0, 24.0, 1.7).is_err());
    }

    #[test]
    fn schedule_levels_and_edges() {
        let s = DisturbanceSchedule {
            areas: vec![AreaSchedule {
                load: vec![Segment::new(50.0, 250.0, 0.5)],
                solar: vec![],
                wind: vec![Segment::new(0.0, 100.0, 0.8), Segment::new(100.0, 270.0, 0.9), Segment::new(270.0, 400.0, 0.0)],
            }],
            noise_std: 0.0,
            noise_seed: 1,
        };
        s.validate(400.0).unwrap();
        assert_eq!(s.levels_at(49.9)[0].load, 0.0);
        assert_eq!(s.levels_at(50.1)[0].load, 0.5);
        assert_eq!(s.levels_at(350.0)[0].wind, 0.0);
        assert_eq!(s.edges(400.0), vec![0.0, 50.0, 100.0, 250.0, 270.0]);
    }

    #[test]
    fn overlapping_segments_rejected() {
        let s = DisturbanceSchedule {
            areas: vec![AreaSchedule {
                load: vec![Segment::new(0.0, 10.0, 1.0), Segment::new(5.0, 20.0, 1.0)],
                ..AreaSchedule::default()
            }],
            noise_std: 0.0,
            noise_seed: 0,
        };
        assert!(s.validate(100.0).is_err());
        let s = DisturbanceSchedule {
            areas: vec![AreaSchedule {
                load: vec![Segment::new(0.0, 200.0, 1.0)],
                ..AreaSchedule::default()
            }],
            noise_std: 0.0,
            noise_seed: 0,
        };
        assert!(s.validate(100.0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let mut a = NoiseSource::new(0.1, 9).unwrap();
        let mut b = NoiseSource::new(0.1, 9).unwrap();
        let xs: Vec<f64> = (0..5).map(|_| a.draw()).collect();
        let ys: Vec<f64> = (0..5).map(|_| b.draw()).collect();
        assert_eq!(xs, ys);
        let mut quiet = NoiseSource::new(0.0, 9).unwrap();
        assert_eq!(quiet.draw(), 0.0);
    }

    #[test]
    fn equilibrium_trace_is_zero() {
        for kind in [ControllerKind::Open, ControllerKind::Pi, ControllerKind::Gitsmc] {
            let mut cfg = single_area(true);
            cfg.controller = kind;
            let tr = run_scenario(&cfg).unwrap();
            assert_eq!(tr.len(), 2001);
            assert!(tr.samples.iter().all(|s| s.state[0] == [0.0; 7] && s.applied[0] == 0.0));
        }
    }

    #[test]
    fn invalid_config_rejected_before_stepping() {
        let mut cfg = single_area(true);
        cfg.dt = 0.0;
        assert!(matches!(run_scenario(&cfg), Err(LfcError::InvalidConfig(_))));
        let mut cfg = single_area(true);
        cfg.horizon = 0.001;
        assert!(run_scenario(&cfg).is_err());
        let mut cfg = single_area(true);
        cfg.controller = ControllerKind::Gitsmc;
        cfg.areas[0].gitsmc.alpha = 1.0;
        assert!(run_scenario(&cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = single_area(true);
        cfg.areas[0].plant.a[5][5] = 5.0;
        cfg.areas[0].initial[5] = 1.0;
        match run_scenario(&cfg) {
            Err(LfcError::Diverged { area, index, time, .. }) => {
                assert_eq!((area, index), (1, 5));
                assert!(time > 0.0 && time < 20.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn reaching_monitor_synthetic() {
        let mut cfg = single_area(true);
        cfg.horizon = 5.0;
        let mut tr = run_scenario(&cfg).unwrap();
        let r = reaching_monitor(&tr, 0.0, 0.0);
        assert_eq!(r.areas[0].violations, 0);
        for s in tr.samples.iter_mut() {
            s.signals[0].theta = (-s.t).exp();
        }
        let r = reaching_monitor(&tr, 1e-6, 0.0);
        assert_eq!(r.areas[0].violations, 0);
        for s in tr.samples.iter_mut() {
            s.signals[0].theta = s.t.exp();
        }
        let r = reaching_monitor(&tr, 1e-6, 0.0);
        assert_eq!(r.areas[0].violations, r.areas[0].considered);
    }

    #[test]
    fn zero_hold_mode_runs() {
        let mut cfg = single_area(true);
        cfg.controller = ControllerKind::Pi;
        cfg.controller_period = Some(0.05);
        cfg.schedule.areas[0].load.push(Segment::new(1.0, 20.0, 0.1));
        let tr = run_scenario(&cfg).unwrap();
        // μ only changes at multiples of five steps
        for w in tr.samples.windows(2).skip(1) {
            let k = (w[1].t / cfg.dt).round() as usize;
            if !k.is_multiple_of(5) {
                assert_eq!(w[0].applied[0], w[1].applied[0]);
            }
        }
    }
}
