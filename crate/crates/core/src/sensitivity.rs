//! Constraint sensitivities with respect to the obstacle velocity.
//!
//! The pursuer's constraint is `g = r_o² - ‖x_p - x_w(ρ, t)‖²` with
//! `x_w(ρ, t) = x_w(0) + ρ t`, so `∂g/∂ρ = 2t (x_p - x_w)` in closed form.
//! The generic sensitivity equation `Ṡ = A S + B` is kept as an independent
//! route to the same quantity.

use nalgebra::{DMatrix, RowVector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{
    constraint_g, heading_velocity, ControlSequence, ScenarioConfig, UncertaintySpec, Vec2,
};

/// Logistic-derivative relevance, clamped to its peak for positive arguments.
pub fn relevance(z: f64) -> f64 {
    if z > 0.0 {
        return 0.25;
    }
    // s(z)(1 - s(z)) = e^z / (1 + e^z)^2, stable for z <= 0
    let e = z.exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `[∂g/∂ρ₁, ∂g/∂ρ₂]` at the nominal obstacle position.
pub fn constraint_sensitivity_cartesian(x_p: Vec2, x_w_nominal: Vec2, t: f64) -> [f64; 2] {
    let d = x_p - x_w_nominal;
    [2.0 * t * d.x, 2.0 * t * d.y]
}

/// Sensitivity to the obstacle speed or heading.
///
/// Panics if `which` is not a polar spec.
pub fn constraint_sensitivity_polar(
    x_p: Vec2,
    x_w_nominal: Vec2,
    t: f64,
    rho_norm: f64,
    psi: f64,
    which: UncertaintySpec,
) -> f64 {
    let d = x_p - x_w_nominal;
    let (s, c) = psi.sin_cos();
    match which {
        UncertaintySpec::SpeedOnly => 2.0 * t * (d.y * s + d.x * c),
        UncertaintySpec::HeadingOnly => 2.0 * rho_norm * t * (d.y * c - d.x * s),
        other => panic!("{other:?} is not a polar uncertainty spec"),
    }
}

/// A row with one or two parameter columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRow {
    data: [f64; 2],
    len: usize,
}

impl ParamRow {
    pub fn one(a: f64) -> Self {
        Self {
            data: [a, 0.0],
            len: 1,
        }
    }

    pub fn two(a: f64, b: f64) -> Self {
        Self {
            data: [a, b],
            len: 2,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            data: [self.data[0] * k, self.data[1] * k],
            len: self.len,
        }
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Relevance-weighted constraint sensitivity at one horizon sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcsSample {
    pub s_g: ParamRow,
    pub relevance: f64,
    pub s_gamma: ParamRow,
    pub weighted_norm_sq: f64,
}

/// Constraint sensitivity row for the columns selected by the config.
pub fn constraint_sensitivity_row(
    x_p: Vec2,
    x_w_nominal: Vec2,
    t: f64,
    cfg: &ScenarioConfig,
) -> ParamRow {
    match cfg.uncertainty_spec {
        UncertaintySpec::BothCartesian => {
            let [a, b] = constraint_sensitivity_cartesian(x_p, x_w_nominal, t);
            ParamRow::two(a, b)
        }
        UncertaintySpec::Rho1Only => {
            ParamRow::one(constraint_sensitivity_cartesian(x_p, x_w_nominal, t)[0])
        }
        UncertaintySpec::Rho2Only => {
            ParamRow::one(constraint_sensitivity_cartesian(x_p, x_w_nominal, t)[1])
        }
        which @ (UncertaintySpec::SpeedOnly | UncertaintySpec::HeadingOnly) => {
            let (rho_norm, psi) = cfg.rho_nominal_polar();
            ParamRow::one(constraint_sensitivity_polar(
                x_p,
                x_w_nominal,
                t,
                rho_norm,
                psi,
                which,
            ))
        }
    }
}

pub fn rcs_sample(x_p: Vec2, x_w_nominal: Vec2, t: f64, cfg: &ScenarioConfig) -> RcsSample {
    let g = constraint_g(x_p, x_w_nominal, cfg.r_o);
    let relevance = relevance(cfg.relevance_scale * g);
    let s_g = constraint_sensitivity_row(x_p, x_w_nominal, t, cfg);
    let s_gamma = s_g.scaled(relevance);
    let weighted_norm_sq = cfg.q.quad_form(s_gamma.as_slice());
    RcsSample {
        s_g,
        relevance,
        s_gamma,
        weighted_norm_sq,
    }
}

/// Horizon sum of the weighted RCS norms.
pub fn risk_of_sequence(samples: &[RcsSample]) -> f64 {
    samples.iter().map(|s| s.weighted_norm_sq).sum()
}

/// Sensitivity of the stacked state `(x_p, x_e, x_w)` to `ρ` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub entries: DMatrix<f64>,
    pub t: f64,
}

impl SensitivityMatrix {
    pub fn obstacle_block(&self) -> DMatrix<f64> {
        self.entries.rows(4, 2).into_owned()
    }
}

/// Right-hand side of the sensitivity equation, `A(t)` and `B(t)`.
pub trait SensitivityModel {
    fn state_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    /// `∂f/∂x` along the nominal trajectory.
    fn state_jacobian(&self, t: f64) -> DMatrix<f64>;
    /// `∂f/∂ρ` along the nominal trajectory.
    fn param_jacobian(&self, t: f64) -> DMatrix<f64>;
}

/// `f = (u, v, ρ)`: the player velocities do not depend on state or `ρ`
/// in open loop, and the obstacle moves at `ρ`.
pub struct PursuitEvasionModel;

impl SensitivityModel for PursuitEvasionModel {
    fn state_dim(&self) -> usize {
        6
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn state_jacobian(&self, _t: f64) -> DMatrix<f64> {
        DMatrix::zeros(6, 6)
    }

    fn param_jacobian(&self, _t: f64) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(6, 2);
        b[(4, 0)] = 1.0;
        b[(5, 1)] = 1.0;
        b
    }
}

/// Classic RK4 on `Ṡ = A S + B` from `S(t0) = 0`, returning `steps + 1` samples.
pub fn integrate_sensitivity_rk4<M: SensitivityModel>(
    model: &M,
    t0: f64,
    dt: f64,
    steps: usize,
) -> Vec<SensitivityMatrix> {
    let rhs = |t: f64, s: &DMatrix<f64>| model.state_jacobian(t) * s + model.param_jacobian(t);
    let mut s = DMatrix::zeros(model.state_dim(), model.param_dim());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(SensitivityMatrix {
        entries: s.clone(),
        t: t0,
    });
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let k1 = rhs(t, &s);
        let k2 = rhs(t + 0.5 * dt, &(&s + &k1 * (0.5 * dt)));
        let k3 = rhs(t + 0.5 * dt, &(&s + &k2 * (0.5 * dt)));
        let k4 = rhs(t + dt, &(&s + &k3 * dt));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(SensitivityMatrix {
            entries: s.clone(),
            t: t + dt,
        });
    }
    out
}

/// Sensitivity matrices along the nominal trajectory driven by the two
/// heading sequences, one per sample from game start.
///
/// With `A ≡ 0` and constant `B` the equation integrates exactly as
/// `S_{k+1} = S_k + B dt`; otherwise RK4 is used.
pub fn propagate_sensitivity_ode(
    cfg: &ScenarioConfig,
    u_seq: &ControlSequence,
    v_seq: &ControlSequence,
) -> Result<Vec<SensitivityMatrix>> {
    if u_seq.len() != v_seq.len() {
        return Err(Error::LengthMismatch {
            expected: u_seq.len(),
            got: v_seq.len(),
        });
    }
    // The controls fix the nominal trajectory but enter neither Jacobian
    // for this model.
    let model = PursuitEvasionModel;
    let steps = u_seq.len();
    if model.state_jacobian(0.0).iter().all(|v| *v == 0.0) {
        let b = model.param_jacobian(0.0);
        let mut s = DMatrix::zeros(model.state_dim(), model.param_dim());
        let mut out = Vec::with_capacity(steps + 1);
        out.push(SensitivityMatrix {
            entries: s.clone(),
            t: 0.0,
        });
        for k in 0..steps {
            s += &b * cfg.dt;
            out.push(SensitivityMatrix {
                entries: s.clone(),
                t: (k + 1) as f64 * cfg.dt,
            });
        }
        Ok(out)
    } else {
        Ok(integrate_sensitivity_rk4(&model, 0.0, cfg.dt, steps))
    }
}

/// `∂g/∂x` for the stacked state `(x_p, x_e, x_w)`.
pub fn pursuer_constraint_state_gradient(x_p: Vec2, x_w: Vec2) -> RowVector6<f64> {
    let d = x_p - x_w;
    RowVector6::new(-2.0 * d.x, -2.0 * d.y, 0.0, 0.0, 2.0 * d.x, 2.0 * d.y)
}

/// Nominal pursuer and obstacle positions implied by a heading sequence,
/// including the start sample.
pub fn nominal_positions(cfg: &ScenarioConfig, u_seq: &ControlSequence) -> Vec<(Vec2, Vec2)> {
    let mut x_p = cfg.pursuer_start;
    let mut out = vec![(x_p, cfg.obstacle_start)];
    for (i, h) in u_seq.headings.iter().enumerate() {
        x_p += heading_velocity(*h, u_seq.speed) * cfg.dt;
        out.push((
            x_p,
            cfg.obstacle_start + cfg.rho_nominal * ((i + 1) as f64 * cfg.dt),
        ));
    }
    out
}

/// Rectangular evaluation region with `resolution` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub resolution: usize,
}

impl GridSpec {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// RCS norms over a grid of candidate pursuer positions. `values` is
/// row-major with `x2` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.x1.len() + i1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x2
            .iter()
            .flat_map(move |&b| self.x1.iter().map(move |&a| (a, b)))
            .zip(&self.values)
            .map(|((a, b), v)| (a, b, *v))
    }
}

/// `‖S_γ‖₂` at `p` against the nominal obstacle at time `t`.
pub fn rcs_norm_at(cfg: &ScenarioConfig, t: f64, p: Vec2) -> f64 {
    let x_w = cfg.obstacle_start + cfg.rho_nominal * t;
    rcs_sample(p, x_w, t, cfg).s_gamma.norm()
}

pub fn rcs_field_grid(cfg: &ScenarioConfig, t: f64, grid: &GridSpec) -> Result<FieldGrid> {
    if grid.resolution < 2 {
        return Err(Error::DegenerateGrid(format!(
            "resolution must be at least 2, got {}",
            grid.resolution
        )));
    }
    if !(grid.x1_max > grid.x1_min && grid.x2_max > grid.x2_min) {
        return Err(Error::DegenerateGrid("empty region".into()));
    }
    let x1 = GridSpec::axis(grid.x1_min, grid.x1_max, grid.resolution);
    let x2 = GridSpec::axis(grid.x2_min, grid.x2_max, grid.resolution);
    let values = x2
        .par_iter()
        .flat_map_iter(|&b| {
            x1.iter()
                .map(move |&a| rcs_norm_at(cfg, t, Vec2::new(a, b)))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FieldGrid { x1, x2, values })
}
