//! Closed-loop receding-horizon simulation.
//!
//! At every sample each player solves its own game from the current
//! positions with its own knowledge of the obstacle, the first headings are
//! applied under the true dynamics, and termination is checked.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{
    bearing, check_termination, step_state, ControlSequence, EvaderMode, GameState, Outcome,
    ScenarioConfig,
};
use crate::solver::{
    solve_evader_deceptive, solve_evader_original, solve_pursuer_game, GaussSeidelConfig,
    StepDecision,
};
use crate::trajopt::{line_of_sight, HorizonProblem, Objective, ObstacleModel, Role};

/// Solver bookkeeping for one player at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub iters: usize,
    pub converged: bool,
    pub residual_u: f64,
    pub residual_v: f64,
    /// The solve failed and the previous heading was held.
    pub held_previous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: GameState,
    /// Headings applied from this state; `None` on the terminal record.
    pub u_head: Option<f64>,
    pub v_head: Option<f64>,
    /// Pursuer's horizon risk for its accepted plan.
    pub risk: Option<f64>,
    pub pursuer: Option<SolveDiagnostics>,
    pub evader: Option<SolveDiagnostics>,
    /// Look-ahead plans of both players at this sample.
    pub pursuer_plan: Option<ControlSequence>,
    pub evader_plan: Option<ControlSequence>,
}

impl StepRecord {
    fn terminal(state: GameState) -> Self {
        Self {
            state,
            u_head: None,
            v_head: None,
            risk: None,
            pursuer: None,
            evader: None,
            pursuer_plan: None,
            evader_plan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub records: Vec<StepRecord>,
    pub outcome: Outcome,
    pub cfg: ScenarioConfig,
}

impl SimulationTrace {
    pub fn states(&self) -> impl Iterator<Item = &GameState> {
        self.records.iter().map(|r| &r.state)
    }

    pub fn pursuer_headings(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.u_head).collect()
    }

    pub fn evader_headings(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.v_head).collect()
    }
}

/// Re-integrate logged headings from the initial state.
pub fn replay(cfg: &ScenarioConfig, u_heads: &[f64], v_heads: &[f64]) -> Result<Vec<GameState>> {
    if u_heads.len() != v_heads.len() {
        return Err(Error::LengthMismatch {
            expected: u_heads.len(),
            got: v_heads.len(),
        });
    }
    let mut s = cfg.initial_state();
    let mut out = vec![s];
    for (u, v) in u_heads.iter().zip(v_heads) {
        s = step_state(&s, *u, *v, cfg);
        out.push(s);
    }
    Ok(out)
}

fn diagnostics(d: &StepDecision) -> SolveDiagnostics {
    SolveDiagnostics {
        iters: d.iters,
        converged: d.converged,
        residual_u: d.residual_u,
        residual_v: d.residual_v,
        held_previous: false,
    }
}

fn held() -> SolveDiagnostics {
    SolveDiagnostics {
        iters: 0,
        converged: false,
        residual_u: f64::NAN,
        residual_v: f64::NAN,
        held_previous: true,
    }
}

/// Warm starts carried between samples for one player's internal game.
struct Warm {
    pursuer: ControlSequence,
    evader: ControlSequence,
}

impl Warm {
    fn line_of_sight(cfg: &ScenarioConfig, s: &GameState) -> Self {
        Self {
            pursuer: line_of_sight(cfg.horizon, s.x_p, s.x_e, cfg.u_c),
            evader: line_of_sight(cfg.horizon, s.x_p, s.x_e, cfg.v_c),
        }
    }

    fn advance(&mut self, d: &StepDecision) {
        self.pursuer = d.pursuer_plan.shifted();
        self.evader = d.evader_plan.shifted();
    }

    fn hold(&mut self) {
        self.pursuer = self.pursuer.shifted();
        self.evader = self.evader.shifted();
    }
}

fn pursuer_risk(cfg: &ScenarioConfig, s: &GameState, d: &StepDecision) -> Result<f64> {
    let view = cfg.pursuer_view();
    let prob = HorizonProblem::new(
        Role::PursuerMin,
        Objective::TerminalDistancePlusRisk,
        s.pursuer_view(),
        &d.evader_plan,
        ObstacleModel::Nominal,
        &view,
    )?;
    prob.horizon_risk(&d.pursuer_plan)
}

/// Run one game to termination.
pub fn run(cfg: &ScenarioConfig) -> SimulationTrace {
    let gs = GaussSeidelConfig::from_scenario(cfg);
    let desensitized = cfg.is_desensitized();
    let mut s = cfg.initial_state();
    let mut records = Vec::new();

    let mut pursuer_warm = Warm::line_of_sight(cfg, &s);
    let mut evader_warm = Warm::line_of_sight(cfg, &s);
    let mut last_u = bearing(s.x_p, s.x_e);
    let mut last_v = last_u;

    let outcome = loop {
        if let Some(o) = check_termination(&s, cfg) {
            records.push(StepRecord::terminal(s));
            break o;
        }

        let pursuer = solve_pursuer_game(
            &s,
            cfg,
            &gs,
            desensitized,
            (&pursuer_warm.pursuer, &pursuer_warm.evader),
        );
        let (u_head, p_diag, risk, p_plan) = match pursuer {
            Ok(d) => {
                pursuer_warm.advance(&d);
                let risk = pursuer_risk(cfg, &s, &d).unwrap_or(f64::NAN);
                (d.u_head, diagnostics(&d), risk, Some(d.pursuer_plan))
            }
            Err(e) => {
                warn!("t={:.3}: pursuer solve failed ({e}); holding heading", s.t);
                pursuer_warm.hold();
                (last_u, held(), f64::NAN, None)
            }
        };

        let evader = match cfg.evader_mode {
            EvaderMode::Original => {
                solve_evader_original(&s, cfg, &gs, (&evader_warm.pursuer, &evader_warm.evader))
            }
            EvaderMode::Deceptive => solve_evader_deceptive(&s, cfg, &evader_warm.evader),
        };
        let (v_head, e_diag, e_plan) = match evader {
            Ok(d) => {
                evader_warm.advance(&d);
                (d.v_head, diagnostics(&d), Some(d.evader_plan))
            }
            Err(e) => {
                warn!("t={:.3}: evader solve failed ({e}); holding heading", s.t);
                evader_warm.hold();
                (last_v, held(), None)
            }
        };

        records.push(StepRecord {
            state: s,
            u_head: Some(u_head),
            v_head: Some(v_head),
            risk: Some(risk),
            pursuer: Some(p_diag),
            evader: Some(e_diag),
            pursuer_plan: p_plan,
            evader_plan: e_plan,
        });
        last_u = u_head;
        last_v = v_head;
        s = step_state(&s, u_head, v_head, cfg);
    };

    SimulationTrace {
        records,
        outcome,
        cfg: cfg.clone(),
    }
}

/// Independent runs in input order.
pub fn run_batch(cfgs: &[ScenarioConfig]) -> Vec<SimulationTrace> {
    cfgs.par_iter().map(run).collect()
}
