//! Decentralized area controllers: the global integral terminal sliding-mode
//! law and a PI baseline on the area control error.

use crate::error::{LfcError, Result};
use crate::plant::{dot, idx, mat_vec, PlantMatrices, StateVec, STATE_DIM};

/// `sgn(x)·|x|^alpha`.
pub fn signed_power(x: f64, alpha: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(alpha)
    }
}

pub fn signed_power_vec(x: &StateVec, alpha: f64) -> StateVec {
    x.map(|v| signed_power(v, alpha))
}

/// Boundary-layer replacement for `sign`. With `eps == 0` this is the plain
/// sign function with `sat(0) = 0`.
pub fn saturation(theta: f64, eps: f64) -> f64 {
    if eps > 0.0 && theta.abs() <= eps {
        theta / eps
    } else if theta == 0.0 {
        0.0
    } else {
        theta.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GitsmcGains {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub boundary_eps: f64,
}

impl Default for GitsmcGains {
    fn default() -> Self {
        GitsmcGains {
            lambda1: 24.0,
            lambda2: 24.0,
            alpha: 1.7,
            eta1: 2.0,
            eta2: 0.5,
            boundary_eps: 0.01,
        }
    }
}

impl GitsmcGains {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.lambda1,
            self.lambda2,
            self.alpha,
            self.eta1,
            self.eta2,
            self.boundary_eps,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(LfcError::param("GITSMC gains must be finite"));
        }
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(LfcError::param(format!("alpha must satisfy 1 < alpha < 2, got {}", self.alpha)));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(LfcError::param("lambda1 and lambda2 must be >= 0"));
        }
        if self.eta1 <= 0.0 || self.eta2 <= 0.0 {
            return Err(LfcError::param("eta1 and eta2 must be > 0"));
        }
        if self.boundary_eps < 0.0 {
            return Err(LfcError::param("boundary_eps must be >= 0"));
        }
        Ok(())
    }
}

/// Integrals carried by a controller between evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub integral_x: StateVec,
    pub integral_xalpha: StateVec,
    pub pi_integral: f64,
}

pub const CONTROLLER_STATE_DIM: usize = 2 * STATE_DIM + 1;

impl ControllerState {
    pub fn to_array(&self) -> [f64; CONTROLLER_STATE_DIM] {
        let mut out = [0.0; CONTROLLER_STATE_DIM];
        out[..STATE_DIM].copy_from_slice(&self.integral_x);
        out[STATE_DIM..2 * STATE_DIM].copy_from_slice(&self.integral_xalpha);
        out[2 * STATE_DIM] = self.pi_integral;
        out
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut cs = ControllerState::default();
        cs.integral_x.copy_from_slice(&v[..STATE_DIM]);
        cs.integral_xalpha.copy_from_slice(&v[STATE_DIM..2 * STATE_DIM]);
        cs.pi_integral = v[2 * STATE_DIM];
        cs
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControlSignal {
    pub mu: f64,
    pub mu_eq: f64,
    pub mu_sw: f64,
    pub theta: f64,
}

/// Θ = ϑx + λ1·ϑ∫x + λ2·ϑ∫x^α.
pub fn sliding_surface(
    x: &StateVec,
    cs: &ControllerState,
    theta_row: &StateVec,
    gains: &GitsmcGains,
) -> f64 {
    dot(theta_row, x)
        + gains.lambda1 * dot(theta_row, &cs.integral_x)
        + gains.lambda2 * dot(theta_row, &cs.integral_xalpha)
}

fn checked_surface_gain(model: &PlantMatrices) -> Result<f64> {
    let g = model.surface_gain();
    if g == 0.0 || !g.is_finite() {
        Err(LfcError::SingularSurface(g))
    } else {
        Ok(g)
    }
}

/// Nominal control that holds Θ̇ = 0; the lumped perturbation is not included.
pub fn equivalent_control(x: &StateVec, model: &PlantMatrices, gains: &GitsmcGains) -> Result<f64> {
    let g = checked_surface_gain(model)?;
    let row = &model.surface_row;
    let drift = dot(row, &mat_vec(&model.a, x));
    let linear = gains.lambda1 * dot(row, x);
    let terminal = gains.lambda2 * dot(row, &signed_power_vec(x, gains.alpha));
    Ok(-(drift + linear + terminal) / g)
}

/// Exponential reaching law with a boundary-layer sign term.
pub fn switching_control(theta: f64, model: &PlantMatrices, gains: &GitsmcGains) -> Result<f64> {
    let g = checked_surface_gain(model)?;
    Ok(-(gains.eta1 * theta + gains.eta2 * saturation(theta, gains.boundary_eps)) / g)
}

/// One sampled GITSMC evaluation: the integrals advance by a rectangle-rule
/// step of length `dt`, then Θ, μ_eq and μ_sw are formed from the new integrals.
pub fn gitsmc_step(
    x: &StateVec,
    cs: &ControllerState,
    dt: f64,
    model: &PlantMatrices,
    gains: &GitsmcGains,
) -> Result<(ControlSignal, ControllerState)> {
    if !(dt > 0.0) {
        return Err(LfcError::param(format!("dt must be > 0, got {dt}")));
    }
    let xa = signed_power_vec(x, gains.alpha);
    let mut next = *cs;
    for k in 0..STATE_DIM {
        next.integral_x[k] += x[k] * dt;
        next.integral_xalpha[k] += xa[k] * dt;
    }
    let theta = sliding_surface(x, &next, &model.surface_row, gains);
    let mu_eq = equivalent_control(x, model, gains)?;
    let mu_sw = switching_control(theta, model, gains)?;
    Ok((
        ControlSignal {
            mu: mu_eq + mu_sw,
            mu_eq,
            mu_sw,
            theta,
        },
        next,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    /// Symmetric bound on the integral contribution `ki·∫ACE`.
    pub integral_limit: Option<f64>,
}

impl Default for PiGains {
    fn default() -> Self {
        PiGains {
            kp: 0.5,
            ki: 0.2,
            integral_limit: None,
        }
    }
}

impl PiGains {
    pub fn validate(&self) -> Result<()> {
        if !self.kp.is_finite() || !self.ki.is_finite() {
            return Err(LfcError::param("PI gains must be finite"));
        }
        if let Some(m) = self.integral_limit {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(LfcError::param("PI integral_limit must be finite and >= 0"));
            }
        }
        Ok(())
    }

    fn clamp_integral(&self, integral: f64) -> f64 {
        match self.integral_limit {
            Some(m) if self.ki != 0.0 => {
                let bound = m / self.ki.abs();
                integral.clamp(-bound, bound)
            }
            _ => integral,
        }
    }
}

pub fn area_control_error(delta_f: f64, delta_p_tie: f64, beta: f64) -> f64 {
    beta * delta_f + delta_p_tie
}

/// One sampled PI evaluation on ACE = β·Δf + ΔP_tie.
pub fn pi_step(
    delta_f: f64,
    delta_p_tie: f64,
    beta: f64,
    gains: &PiGains,
    cs: &ControllerState,
    dt: f64,
) -> (f64, ControllerState) {
    let ace = area_control_error(delta_f, delta_p_tie, beta);
    let mut next = *cs;
    next.pi_integral = gains.clamp_integral(cs.pi_integral + ace * dt);
    let mu = -(gains.kp * ace + gains.ki * next.pi_integral);
    (mu, next)
}

/// Common interface of the per-area controllers.
///
/// `signal` and `state_rate` drive continuous evaluation, where the
/// controller integrals are integrated together with the plant. `step` is
/// the sampled form used with a zero-order hold.
pub trait AreaController {
    fn signal(&self, x: &StateVec, cs: &ControllerState) -> ControlSignal;
    fn state_rate(&self, x: &StateVec, cs: &ControllerState) -> ControllerState;
    fn step(&self, x: &StateVec, cs: &ControllerState, dt: f64) -> (ControlSignal, ControllerState);
}

/// GITSMC bound to one area's nominal model. Construction checks ϑB0 ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GitsmcController {
    model: PlantMatrices,
    gains: GitsmcGains,
}

impl GitsmcController {
    pub fn new(model: PlantMatrices, gains: GitsmcGains) -> Result<Self> {
        gains.validate()?;
        checked_surface_gain(&model)?;
        Ok(GitsmcController { model, gains })
    }

    pub fn gains(&self) -> &GitsmcGains {
        &self.gains
    }

    pub fn model(&self) -> &PlantMatrices {
        &self.model
    }
}

impl AreaController for GitsmcController {
    fn signal(&self, x: &StateVec, cs: &ControllerState) -> ControlSignal {
        let theta = sliding_surface(x, cs, &self.model.surface_row, &self.gains);
        // ϑB0 was checked at construction.
        let mu_eq = equivalent_control(x, &self.model, &self.gains).unwrap_or(0.0);
        let mu_sw = switching_control(theta, &self.model, &self.gains).unwrap_or(0.0);
        ControlSignal {
            mu: mu_eq + mu_sw,
            mu_eq,
            mu_sw,
            theta,
        }
    }

    fn state_rate(&self, x: &StateVec, _cs: &ControllerState) -> ControllerState {
        ControllerState {
            integral_x: *x,
            integral_xalpha: signed_power_vec(x, self.gains.alpha),
            pi_integral: 0.0,
        }
    }

    fn step(&self, x: &StateVec, cs: &ControllerState, dt: f64) -> (ControlSignal, ControllerState) {
        gitsmc_step(x, cs, dt, &self.model, &self.gains).unwrap_or((ControlSignal::default(), *cs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub gains: PiGains,
    pub beta: f64,
}

impl PiController {
    pub fn new(gains: PiGains, beta: f64) -> Result<Self> {
        gains.validate()?;
        if !beta.is_finite() {
            return Err(LfcError::param("frequency bias must be finite"));
        }
        Ok(PiController { gains, beta })
    }
}

impl AreaController for PiController {
    fn signal(&self, x: &StateVec, cs: &ControllerState) -> ControlSignal {
        let ace = area_control_error(x[idx::FREQ], x[idx::TIE], self.beta);
        let mu = -(self.gains.kp * ace + self.gains.ki * self.gains.clamp_integral(cs.pi_integral));
        ControlSignal {
            mu,
            mu_eq: mu,
            mu_sw: 0.0,
            theta: 0.0,
        }
    }

    fn state_rate(&self, x: &StateVec, cs: &ControllerState) -> ControllerState {
        let ace = area_control_error(x[idx::FREQ], x[idx::TIE], self.beta);
        // conditional integration: stop once the clamp is reached and ACE pushes further out
        let saturated = match self.gains.integral_limit {
            Some(m) if self.gains.ki != 0.0 => {
                cs.pi_integral.abs() >= m / self.gains.ki.abs() && ace * cs.pi_integral > 0.0
            }
            _ => false,
        };
        ControllerState {
            pi_integral: if saturated { 0.0 } else { ace },
            ..ControllerState::default()
        }
    }

    fn step(&self, x: &StateVec, cs: &ControllerState, dt: f64) -> (ControlSignal, ControllerState) {
        let (mu, next) = pi_step(x[idx::FREQ], x[idx::TIE], self.beta, &self.gains, cs, dt);
        (
            ControlSignal {
                mu,
                mu_eq: mu,
                mu_sw: 0.0,
                theta: 0.0,
            },
            next,
        )
    }
}

/// Dispatch over the available controllers.
// one per area, copied rarely; boxing buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    Gitsmc(GitsmcController),
    Pi(PiController),
    /// μ ≡ 0.
    Open,
}

impl AreaController for Controller {
    fn signal(&self, x: &StateVec, cs: &ControllerState) -> ControlSignal {
        match self {
            Controller::Gitsmc(c) => c.signal(x, cs),
            Controller::Pi(c) => c.signal(x, cs),
            Controller::Open => ControlSignal::default(),
        }
    }

    fn state_rate(&self, x: &StateVec, cs: &ControllerState) -> ControllerState {
        match self {
            Controller::Gitsmc(c) => c.state_rate(x, cs),
            Controller::Pi(c) => c.state_rate(x, cs),
            Controller::Open => ControllerState::default(),
        }
    }

    fn step(&self, x: &StateVec, cs: &ControllerState, dt: f64) -> (ControlSignal, ControllerState) {
        match self {
            Controller::Gitsmc(c) => c.step(x, cs, dt),
            Controller::Pi(c) => c.step(x, cs, dt),
            Controller::Open => (ControlSignal::default(), *cs),
        }
    }
}

/// Surface row whose sliding dynamics regulate frequency.
///
/// On Θ = 0 the governor output becomes
/// `ΔP_g = −(G_f·Δf + G_m·ΔP_m + G_E·ΔE)`, and the gains place the reduced
/// (Δf, ΔP_m, ΔE) dynamics at a triple pole `−pole`. The row is scaled so that
/// ϑB0 = 1.
pub fn regulating_surface_row(model: &PlantMatrices, pole: f64) -> Result<StateVec> {
    if !(pole > 0.0) || !pole.is_finite() {
        return Err(LfcError::param(format!("pole must be > 0, got {pole}")));
    }
    let a = &model.a;
    let damping = -a[idx::FREQ][idx::FREQ];
    let inertia = a[idx::FREQ][idx::MECH];
    let turbine = -a[idx::MECH][idx::MECH];
    let turbine_in = a[idx::MECH][idx::GOV];
    let integral = a[idx::ACE_INT][idx::FREQ];
    let input = model.b[idx::GOV];
    for (name, v) in [
        ("frequency/mechanical coupling", inertia),
        ("turbine input gain", turbine_in),
        ("ACE integral gain", integral),
        ("governor input gain", input),
    ] {
        if v == 0.0 || !v.is_finite() {
            return Err(LfcError::param(format!("{name} must be nonzero to place the surface poles")));
        }
    }
    let c = 3.0 * pole - damping;
    let g_m = (c - turbine) / turbine_in;
    let g_f = (3.0 * pole * pole - damping * c) / (inertia * turbine_in);
    let g_e = pole.powi(3) / (inertia * turbine_in * integral);

    let mut row = [0.0; STATE_DIM];
    row[idx::FREQ] = g_f / input;
    row[idx::MECH] = g_m / input;
    row[idx::ACE_INT] = g_e / input;
    row[idx::GOV] = 1.0 / input;
    Ok(row)
}
