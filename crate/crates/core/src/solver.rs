//! Per-step game solutions for each player.
//!
//! The pursuer and the non-deceptive evader both find a fixed point of
//! alternating best responses (Gauss-Seidel). They differ only in what each
//! block knows about the obstacle. The deceptive evader replaces the pursuer
//! by a pure-pursuit feedback model, which leaves a single optimization.

use crate::error::{Error, Result};
use crate::game::{ControlSequence, GameState, ScenarioConfig, Vec2};
use crate::trajopt::{
    best_response, evaluate_objective, BestResponse, HorizonProblem, Objective, ObstacleModel, Role,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSeidelConfig {
    pub conv_tol: f64,
    pub max_iters: usize,
}

impl Default for GaussSeidelConfig {
    fn default() -> Self {
        Self {
            conv_tol: 5e-3,
            max_iters: 50,
        }
    }
}

impl GaussSeidelConfig {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            conv_tol: cfg.gs_conv_tol,
            max_iters: cfg.gs_max_iters,
        }
    }
}

/// Outcome of one player's per-step solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub u_head: f64,
    pub v_head: f64,
    pub iters: usize,
    pub converged: bool,
    pub residual_u: f64,
    pub residual_v: f64,
    /// Final horizon plans, used for look-ahead logging and warm starts.
    pub pursuer_plan: ControlSequence,
    pub evader_plan: ControlSequence,
}

/// Which obstacle each block of the fixed-point loop constrains against, and
/// whether the pursuer block carries the risk term.
struct GameSetup {
    pursuer_objective: Objective,
    evader_model: ObstacleModel,
}

fn gauss_seidel(
    s: &GameState,
    cfg: &ScenarioConfig,
    gs: &GaussSeidelConfig,
    setup: GameSetup,
    warm: (&ControlSequence, &ControlSequence),
) -> Result<StepDecision> {
    fn pursuer_problem<'a>(
        s: &GameState,
        cfg: &'a ScenarioConfig,
        setup: &GameSetup,
        v: &'a ControlSequence,
    ) -> Result<HorizonProblem<'a>> {
        HorizonProblem::new(
            Role::PursuerMin,
            setup.pursuer_objective,
            *s,
            v,
            ObstacleModel::Nominal,
            cfg,
        )
    }
    fn evader_problem<'a>(
        s: &GameState,
        cfg: &'a ScenarioConfig,
        setup: &GameSetup,
        u: &'a ControlSequence,
    ) -> Result<HorizonProblem<'a>> {
        HorizonProblem::new(
            Role::EvaderMax,
            Objective::TerminalDistance,
            *s,
            u,
            setup.evader_model,
            cfg,
        )
    }

    let (mut u_prev, mut v_prev) = (warm.0.clone(), warm.1.clone());
    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut residual_u = f64::INFINITY;
    let mut residual_v = f64::INFINITY;
    let mut converged = false;
    while us.len() < gs.max_iters {
        let BestResponse {
            sequence: u_next, ..
        } = best_response(&pursuer_problem(s, cfg, &setup, &v_prev)?, &u_prev)?;
        let BestResponse {
            sequence: v_next, ..
        } = best_response(&evader_problem(s, cfg, &setup, &u_next)?, &v_prev)?;

        residual_u = u_next.velocity_distance(&u_prev);
        residual_v = v_next.velocity_distance(&v_prev);
        u_prev = u_next;
        v_prev = v_next;
        us.push(u_prev.clone());
        vs.push(v_prev.clone());
        if residual_u <= gs.conv_tol && residual_v <= gs.conv_tol {
            converged = true;
            break;
        }
    }
    let iters = us.len();

    // Without a fixed point the iterates typically cycle, and the last one is
    // an arbitrary member of the cycle. Each player then falls back to its
    // security choice over everything visited.
    let (pursuer_plan, evader_plan) = if converged || iters == 0 {
        (u_prev, v_prev)
    } else {
        let mut jp = vec![vec![0.0; iters]; iters];
        let mut je = vec![vec![0.0; iters]; iters];
        for (a, u) in us.iter().enumerate() {
            for (b, v) in vs.iter().enumerate() {
                jp[a][b] = evaluate_objective(&pursuer_problem(s, cfg, &setup, v)?, u)?;
                je[a][b] = evaluate_objective(&evader_problem(s, cfg, &setup, u)?, v)?;
            }
        }
        let worst_u = |a: usize| jp[a].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst_v = |b: usize| je.iter().map(|row| row[b]).fold(f64::INFINITY, f64::min);
        // earliest index wins ties
        let a = (0..iters).fold(
            0,
            |best, a| if worst_u(a) < worst_u(best) { a } else { best },
        );
        let b = (0..iters).fold(
            0,
            |best, b| if worst_v(b) > worst_v(best) { b } else { best },
        );
        (us.swap_remove(a), vs.swap_remove(b))
    };
    Ok(StepDecision {
        u_head: pursuer_plan.headings[0],
        v_head: evader_plan.headings[0],
        iters,
        converged,
        residual_u,
        residual_v,
        pursuer_plan,
        evader_plan,
    })
}

fn check_warm(cfg: &ScenarioConfig, seqs: &[&ControlSequence]) -> Result<()> {
    for s in seqs {
        if s.len() != cfg.horizon {
            return Err(Error::LengthMismatch {
                expected: cfg.horizon,
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// The pursuer's game, solved entirely from the pursuer's information.
///
/// The state and configuration are reduced to the pursuer's view before any
/// work is done, so the result cannot depend on the true obstacle velocity.
pub fn solve_pursuer_game(
    s: &GameState,
    cfg: &ScenarioConfig,
    gs: &GaussSeidelConfig,
    desensitized: bool,
    warm: (&ControlSequence, &ControlSequence),
) -> Result<StepDecision> {
    check_warm(cfg, &[warm.0, warm.1])?;
    let view = cfg.pursuer_view();
    let state = s.pursuer_view();
    let setup = GameSetup {
        pursuer_objective: if desensitized {
            Objective::TerminalDistancePlusRisk
        } else {
            Objective::TerminalDistance
        },
        evader_model: ObstacleModel::Nominal,
    };
    gauss_seidel(&state, &view, gs, setup, warm)
}

/// The evader's own game: it models the pursuer as solving the nominal game
/// and optimizes its reply against the true obstacle.
pub fn solve_evader_original(
    s: &GameState,
    cfg: &ScenarioConfig,
    gs: &GaussSeidelConfig,
    warm: (&ControlSequence, &ControlSequence),
) -> Result<StepDecision> {
    check_warm(cfg, &[warm.0, warm.1])?;
    let setup = GameSetup {
        pursuer_objective: Objective::TerminalDistance,
        evader_model: ObstacleModel::True,
    };
    gauss_seidel(s, cfg, gs, setup, warm)
}

/// Velocity of a pursuer heading straight at the evader at full speed.
pub fn pure_pursuit_model(x_p_hat: Vec2, x_e: Vec2, u_c: f64) -> Result<Vec2> {
    let d = x_e - x_p_hat;
    let n = d.norm();
    if n == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    Ok(d * (u_c / n))
}

/// Deceptive evader: maximize the blended deception payoff against the
/// pure-pursuit model, constrained by the true obstacle.
pub fn solve_evader_deceptive(
    s: &GameState,
    cfg: &ScenarioConfig,
    warm: &ControlSequence,
) -> Result<StepDecision> {
    check_warm(cfg, &[warm])?;
    let no_opponent = ControlSequence::new(Vec::new(), cfg.u_c);
    let prob = HorizonProblem::new(
        Role::EvaderMax,
        Objective::DeceptionBlend,
        *s,
        &no_opponent,
        ObstacleModel::True,
        cfg,
    )?;
    let br = best_response(&prob, warm)?;
    let states = prob.rollout(&br.sequence)?;
    let model_headings: Vec<f64> = states
        .windows(2)
        .map(|w| {
            let d = w[1].x_p - w[0].x_p;
            d.y.atan2(d.x)
        })
        .collect();
    let u_head = pure_pursuit_model(s.x_p, s.x_e, cfg.u_c)
        .map(|v| v.y.atan2(v.x))
        .unwrap_or(0.0);
    Ok(StepDecision {
        u_head,
        v_head: br.sequence.headings[0],
        iters: 1,
        converged: br.converged,
        residual_u: 0.0,
        residual_v: 0.0,
        pursuer_plan: ControlSequence::new(model_headings, cfg.u_c),
        evader_plan: br.sequence,
    })
}
