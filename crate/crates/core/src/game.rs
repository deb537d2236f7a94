//! Pursuer, evader and a single moving circular obstacle in the plane.
//!
//! Both players move at constant speed and steer by heading. The obstacle
//! translates at a constant velocity `rho`; the evader knows the true
//! velocity while the pursuer only has the nominal one. Everything in this
//! module is a plain value type or a pure function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Slack used when comparing accumulated simulation time against `t_max`.
const TIME_EPS: f64 = 1e-9;

/// Which obstacle-velocity parameters the pursuer treats as uncertain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintySpec {
    /// Both Cartesian components of the velocity.
    BothCartesian,
    Rho1Only,
    Rho2Only,
    /// Total speed, heading known.
    SpeedOnly,
    /// Heading, speed known.
    HeadingOnly,
}

impl UncertaintySpec {
    /// Number of parameter columns in the constraint-sensitivity row.
    pub fn columns(self) -> usize {
        match self {
            UncertaintySpec::BothCartesian => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UncertaintySpec::BothCartesian => "both_cartesian",
            UncertaintySpec::Rho1Only => "rho1_only",
            UncertaintySpec::Rho2Only => "rho2_only",
            UncertaintySpec::SpeedOnly => "speed_only",
            UncertaintySpec::HeadingOnly => "heading_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaderMode {
    /// Maximize terminal separation (the evader's own goal).
    Original,
    /// Lure a pure-pursuit model of the pursuer into the true obstacle.
    Deceptive,
}

impl EvaderMode {
    pub fn name(self) -> &'static str {
        match self {
            EvaderMode::Original => "original",
            EvaderMode::Deceptive => "deceptive",
        }
    }
}

/// Positive-semidefinite weight on the vectorized RCS row.
///
/// `Scalar(q)` is shorthand for `q * I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RiskWeight {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl RiskWeight {
    pub fn is_zero(&self) -> bool {
        match self {
            RiskWeight::Scalar(q) => *q == 0.0,
            RiskWeight::Matrix(m) => m.iter().flatten().all(|v| *v == 0.0),
        }
    }

    /// `wᵀ Q w`.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        match self {
            RiskWeight::Scalar(q) => q * w.iter().map(|v| v * v).sum::<f64>(),
            RiskWeight::Matrix(m) => {
                let mut acc = 0.0;
                for (i, wi) in w.iter().enumerate() {
                    for (j, wj) in w.iter().enumerate() {
                        acc += wi * m[i][j] * wj;
                    }
                }
                acc
            }
        }
    }

    fn validate(&self, columns: usize) -> Result<()> {
        match self {
            RiskWeight::Scalar(q) => {
                if !q.is_finite() || *q < 0.0 {
                    return Err(Error::Validation(format!(
                        "Q must be finite and >= 0, got {q}"
                    )));
                }
            }
            RiskWeight::Matrix(m) => {
                if m.len() != columns || m.iter().any(|r| r.len() != columns) {
                    return Err(Error::Validation(format!(
                        "Q must be {columns}x{columns} for the selected uncertainty spec"
                    )));
                }
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Validation("Q entries must be finite".into()));
                }
                for i in 0..columns {
                    for j in 0..columns {
                        if (m[i][j] - m[j][i]).abs() > 1e-12 {
                            return Err(Error::Validation("Q must be symmetric".into()));
                        }
                    }
                }
                let dm = nalgebra::DMatrix::from_fn(columns, columns, |i, j| m[i][j]);
                let min_eig = dm
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < -1e-12 {
                    return Err(Error::Validation(format!(
                        "Q must be positive semidefinite (smallest eigenvalue {min_eig})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One game instance. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pursuer_start: Vec2,
    pub evader_start: Vec2,
    pub obstacle_start: Vec2,
    pub u_c: f64,
    pub v_c: f64,
    pub epsilon: f64,
    pub r_o: f64,
    pub rho_nominal: Vec2,
    pub rho_true: Vec2,
    pub uncertainty_spec: UncertaintySpec,
    pub horizon: usize,
    pub dt: f64,
    pub q: RiskWeight,
    pub alpha_o: f64,
    pub alpha_d: f64,
    pub evader_mode: EvaderMode,
    pub t_max: f64,
    pub seed: u64,
    /// Multiplies the constraint value before it enters the relevance function.
    pub relevance_scale: f64,
    /// Number of starts per best-response search.
    pub multi_starts: usize,
    pub gs_conv_tol: f64,
    pub gs_max_iters: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be finite")))
            }
        };
        for (name, v) in [
            ("pursuer_start", self.pursuer_start),
            ("evader_start", self.evader_start),
            ("obstacle_start", self.obstacle_start),
            ("rho_nominal", self.rho_nominal),
            ("rho_true", self.rho_true),
        ] {
            finite(name, v.x)?;
            finite(name, v.y)?;
        }
        for (name, v) in [
            ("u_c", self.u_c),
            ("v_c", self.v_c),
            ("epsilon", self.epsilon),
            ("r_o", self.r_o),
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("relevance_scale", self.relevance_scale),
            ("gs_conv_tol", self.gs_conv_tol),
        ] {
            finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        finite("alpha_o", self.alpha_o)?;
        finite("alpha_d", self.alpha_d)?;
        if self.u_c <= self.v_c {
            return Err(Error::Validation(format!(
                "capturability requires u_c > v_c (u_c = {}, v_c = {})",
                self.u_c, self.v_c
            )));
        }
        if self.horizon < 1 {
            return Err(Error::Validation("N must be >= 1".into()));
        }
        if self.multi_starts < 1 {
            return Err(Error::Validation("multi_starts must be >= 1".into()));
        }
        if self.gs_max_iters < 1 {
            return Err(Error::Validation("gs_max_iters must be >= 1".into()));
        }
        self.q.validate(self.uncertainty_spec.columns())?;

        let r2 = self.r_o * self.r_o;
        if (self.pursuer_start - self.obstacle_start).norm_squared() <= r2 {
            return Err(Error::Validation(
                "pursuer starts inside the obstacle".into(),
            ));
        }
        if (self.evader_start - self.obstacle_start).norm_squared() <= r2 {
            return Err(Error::Validation(
                "evader starts inside the obstacle".into(),
            ));
        }
        if (self.pursuer_start - self.evader_start).norm() <= self.epsilon {
            return Err(Error::Validation(
                "evader starts inside the capture radius".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> GameState {
        GameState {
            t: 0.0,
            x_p: self.pursuer_start,
            x_e: self.evader_start,
            x_w_true: self.obstacle_start,
            x_w_nominal: self.obstacle_start,
        }
    }

    /// The configuration as the pursuer sees it: the true obstacle velocity
    /// is replaced by the nominal one.
    pub fn pursuer_view(&self) -> ScenarioConfig {
        ScenarioConfig {
            rho_true: self.rho_nominal,
            ..self.clone()
        }
    }

    /// Nominal obstacle speed and heading (radians).
    pub fn rho_nominal_polar(&self) -> (f64, f64) {
        (
            self.rho_nominal.norm(),
            self.rho_nominal.y.atan2(self.rho_nominal.x),
        )
    }

    pub fn is_desensitized(&self) -> bool {
        !self.q.is_zero()
    }
}

/// Positions of everything at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameState {
    pub t: f64,
    pub x_p: Vec2,
    pub x_e: Vec2,
    pub x_w_true: Vec2,
    pub x_w_nominal: Vec2,
}

impl GameState {
    /// Copy with the true obstacle replaced by the nominal estimate.
    pub fn pursuer_view(&self) -> GameState {
        GameState {
            x_w_true: self.x_w_nominal,
            ..*self
        }
    }
}

/// Horizon of headings for one player at a fixed speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    pub headings: Vec<f64>,
    pub speed: f64,
}

impl ControlSequence {
    pub fn new(headings: Vec<f64>, speed: f64) -> Self {
        Self { headings, speed }
    }

    pub fn constant(len: usize, heading: f64, speed: f64) -> Self {
        Self::new(vec![heading; len], speed)
    }

    pub fn len(&self) -> usize {
        self.headings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headings.is_empty()
    }

    pub fn velocity(&self, i: usize) -> Vec2 {
        heading_velocity(self.headings[i], self.speed)
    }

    /// Receding-horizon warm start: drop the first heading and repeat the last.
    pub fn shifted(&self) -> Self {
        let mut headings: Vec<f64> = self.headings.iter().skip(1).copied().collect();
        if let Some(last) = self.headings.last() {
            headings.push(*last);
        }
        Self::new(headings, self.speed)
    }

    /// 2-norm of the stacked velocity differences.
    pub fn velocity_distance(&self, other: &ControlSequence) -> f64 {
        self.headings
            .iter()
            .zip(&other.headings)
            .map(|(a, b)| {
                (heading_velocity(*a, self.speed) - heading_velocity(*b, other.speed))
                    .norm_squared()
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn heading_velocity(heading: f64, speed: f64) -> Vec2 {
    Vec2::new(speed * heading.cos(), speed * heading.sin())
}

/// Wrap an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Heading of the vector from `from` to `to`.
pub fn bearing(from: Vec2, to: Vec2) -> f64 {
    let d = to - from;
    d.y.atan2(d.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Capture,
    PursuerCollision,
    EvaderCollision,
    Timeout,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Capture => "Capture",
            OutcomeKind::PursuerCollision => "PursuerCollision",
            OutcomeKind::EvaderCollision => "EvaderCollision",
            OutcomeKind::Timeout => "Timeout",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "Capture" => Some(OutcomeKind::Capture),
            "PursuerCollision" => Some(OutcomeKind::PursuerCollision),
            "EvaderCollision" => Some(OutcomeKind::EvaderCollision),
            "Timeout" => Some(OutcomeKind::Timeout),
            _ => None,
        }
    }
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub t_end: f64,
}

/// Advance one sample under the discrete dynamics. Both obstacle copies move
/// with their own velocity.
pub fn step_state(s: &GameState, u_head: f64, v_head: f64, cfg: &ScenarioConfig) -> GameState {
    let dt = cfg.dt;
    GameState {
        t: s.t + dt,
        x_p: s.x_p + heading_velocity(u_head, cfg.u_c) * dt,
        x_e: s.x_e + heading_velocity(v_head, cfg.v_c) * dt,
        x_w_true: s.x_w_true + cfg.rho_true * dt,
        x_w_nominal: s.x_w_nominal + cfg.rho_nominal * dt,
    }
}

/// `r_o² - ‖x - x_w‖²`; non-positive means clear of the obstacle.
pub fn constraint_g(x: Vec2, x_w: Vec2, r_o: f64) -> f64 {
    r_o * r_o - (x - x_w).norm_squared()
}

/// Game-ending events at a sample, all tested against the true obstacle.
///
/// Priority when several hold at once: pursuer collision, capture, evader
/// collision, timeout.
pub fn check_termination(s: &GameState, cfg: &ScenarioConfig) -> Option<Outcome> {
    let kind = if constraint_g(s.x_p, s.x_w_true, cfg.r_o) >= 0.0 {
        OutcomeKind::PursuerCollision
    } else if (s.x_p - s.x_e).norm() <= cfg.epsilon {
        OutcomeKind::Capture
    } else if constraint_g(s.x_e, s.x_w_true, cfg.r_o) >= 0.0 {
        OutcomeKind::EvaderCollision
    } else if s.t >= cfg.t_max - TIME_EPS {
        OutcomeKind::Timeout
    } else {
        return None;
    };
    Some(Outcome { kind, t_end: s.t })
}
