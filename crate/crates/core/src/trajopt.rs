//! Finite-horizon best responses over heading sequences.
//!
//! One player optimizes its `N` headings while the opponent's sequence is
//! held fixed. The obstacle constraint is handled with an exterior quadratic
//! penalty whose weight grows until the plan is feasible; each penalty round
//! runs gradient descent on central-difference gradients with a backtracking
//! line search. Several starts are run in parallel and reduced with a
//! deterministic tie-break.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{
    constraint_g, step_state, wrap_angle, ControlSequence, GameState, ScenarioConfig, Vec2,
};
use crate::sensitivity::{rcs_sample, risk_of_sequence, RcsSample};

/// Accepted plans must satisfy `max(0, g + CONSTRAINT_MARGIN) <= FEASIBILITY_TOL`.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Tightening of the obstacle constraint so executed steps never touch it.
pub const CONSTRAINT_MARGIN: f64 = 1e-4;

const MU_START: f64 = 10.0;
const MU_FACTOR: f64 = 10.0;
const MU_MAX: f64 = 1e7;
const STEP_INIT: f64 = 0.2;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 20;
const ARMIJO_C: f64 = 1e-4;
const MAX_DESCENT_ITERS: usize = 60;
const FD_STEP: f64 = 1e-6;
/// Objective differences below this (relative) count as ties.
const TIE_TOL: f64 = 1e-9;

const PERTURB_OFFSET: f64 = 0.05;
const PERTURB_JITTER: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    PursuerMin,
    EvaderMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Separation of the players at the end of the horizon.
    TerminalDistance,
    /// Terminal separation plus the pursuer's horizon risk.
    TerminalDistancePlusRisk,
    /// Evader against a pure-pursuit model of the pursuer, blending
    /// separation with closeness of the modeled pursuer to the obstacle.
    DeceptionBlend,
}

/// Which obstacle stream the optimizing player constrains against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstacleModel {
    Nominal,
    True,
}

#[derive(Debug, Clone)]
pub struct HorizonProblem<'a> {
    pub role: Role,
    pub objective: Objective,
    pub start: GameState,
    /// Fixed opponent sequence; unused by `DeceptionBlend`.
    pub opponent: &'a ControlSequence,
    pub obstacle_model: ObstacleModel,
    pub cfg: &'a ScenarioConfig,
}

/// Objective and constraint state of one candidate sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Evaluation {
    objective: f64,
    penalty: f64,
    max_violation: f64,
}

impl<'a> HorizonProblem<'a> {
    pub fn new(
        role: Role,
        objective: Objective,
        start: GameState,
        opponent: &'a ControlSequence,
        obstacle_model: ObstacleModel,
        cfg: &'a ScenarioConfig,
    ) -> Result<Self> {
        if role == Role::PursuerMin && obstacle_model != ObstacleModel::Nominal {
            return Err(Error::Validation(
                "the pursuer only knows the nominal obstacle".into(),
            ));
        }
        if objective == Objective::DeceptionBlend && role != Role::EvaderMax {
            return Err(Error::Validation("deception is an evader objective".into()));
        }
        if objective != Objective::DeceptionBlend && opponent.len() != cfg.horizon {
            return Err(Error::LengthMismatch {
                expected: cfg.horizon,
                got: opponent.len(),
            });
        }
        Ok(Self {
            role,
            objective,
            start,
            opponent,
            obstacle_model,
            cfg,
        })
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn speed(&self) -> f64 {
        match self.role {
            Role::PursuerMin => self.cfg.u_c,
            Role::EvaderMax => self.cfg.v_c,
        }
    }

    /// +1 for minimization, -1 for maximization.
    fn sign(&self) -> f64 {
        match self.role {
            Role::PursuerMin => 1.0,
            Role::EvaderMax => -1.0,
        }
    }

    fn obstacle(&self, s: &GameState) -> Vec2 {
        match self.obstacle_model {
            ObstacleModel::Nominal => s.x_w_nominal,
            ObstacleModel::True => s.x_w_true,
        }
    }

    fn headings_pair(&self, mine: f64, i: usize) -> (f64, f64) {
        match self.role {
            Role::PursuerMin => (mine, self.opponent.headings[i]),
            // the pursuer's own heading is irrelevant under deception; its
            // modeled position is tracked separately
            Role::EvaderMax if self.objective == Objective::DeceptionBlend => (0.0, mine),
            Role::EvaderMax => (self.opponent.headings[i], mine),
        }
    }

    fn evaluate(&self, headings: &[f64]) -> Evaluation {
        let cfg = self.cfg;
        let deceptive = self.objective == Objective::DeceptionBlend;
        let with_risk = self.objective == Objective::TerminalDistancePlusRisk && !cfg.q.is_zero();
        let mut s = self.start;
        let mut x_hat = self.start.x_p;
        let mut risk = 0.0;
        let mut penalty = 0.0;
        let mut max_violation = 0.0f64;
        for (i, &h) in headings.iter().enumerate() {
            let (uh, vh) = self.headings_pair(h, i);
            if deceptive {
                x_hat += pure_pursuit_velocity(x_hat, s.x_e, cfg.u_c) * cfg.dt;
            }
            s = step_state(&s, uh, vh, cfg);
            let me = match self.role {
                Role::PursuerMin => s.x_p,
                Role::EvaderMax => s.x_e,
            };
            let v = (constraint_g(me, self.obstacle(&s), cfg.r_o) + CONSTRAINT_MARGIN).max(0.0);
            penalty += v * v;
            max_violation = max_violation.max(v);
            if with_risk {
                risk += rcs_sample(s.x_p, s.x_w_nominal, s.t, cfg).weighted_norm_sq;
            }
        }
        let objective = match self.objective {
            Objective::TerminalDistance => (s.x_p - s.x_e).norm(),
            Objective::TerminalDistancePlusRisk => (s.x_p - s.x_e).norm() + risk,
            Objective::DeceptionBlend => {
                cfg.alpha_o * (x_hat - s.x_e).norm()
                    - cfg.alpha_d * (x_hat - self.obstacle(&s)).norm()
            }
        };
        Evaluation {
            objective,
            penalty,
            max_violation,
        }
    }

    fn penalized(&self, headings: &[f64], mu: f64) -> f64 {
        let e = self.evaluate(headings);
        self.sign() * e.objective + mu * e.penalty
    }

    /// Risk accumulated by the pursuer along the horizon this sequence implies.
    pub fn horizon_risk(&self, seq: &ControlSequence) -> Result<f64> {
        Ok(risk_of_sequence(&self.rcs_samples(seq)?))
    }

    /// RCS samples of the pursuer along the rolled-out horizon.
    pub fn rcs_samples(&self, seq: &ControlSequence) -> Result<Vec<RcsSample>> {
        let states = self.rollout(seq)?;
        Ok(states[1..]
            .iter()
            .map(|s| rcs_sample(s.x_p, s.x_w_nominal, s.t, self.cfg))
            .collect())
    }

    /// States along the horizon with `seq` as this player's headings.
    pub fn rollout(&self, seq: &ControlSequence) -> Result<Vec<GameState>> {
        check_len(self.horizon(), seq.len())?;
        match (self.role, self.objective) {
            (Role::EvaderMax, Objective::DeceptionBlend) => {
                Ok(pure_pursuit_rollout(&self.start, seq, self.cfg))
            }
            (Role::PursuerMin, _) => rollout(&self.start, seq, self.opponent, self.cfg),
            (Role::EvaderMax, _) => rollout(&self.start, self.opponent, seq, self.cfg),
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// `N + 1` states from `start` with the pursuer and evader sequences applied
/// step by step.
pub fn rollout(
    start: &GameState,
    pursuer: &ControlSequence,
    evader: &ControlSequence,
    cfg: &ScenarioConfig,
) -> Result<Vec<GameState>> {
    check_len(pursuer.len(), evader.len())?;
    let mut out = Vec::with_capacity(pursuer.len() + 1);
    out.push(*start);
    let mut s = *start;
    for (u, v) in pursuer.headings.iter().zip(&evader.headings) {
        s = step_state(&s, *u, *v, cfg);
        out.push(s);
    }
    Ok(out)
}

/// Pure-pursuit velocity, or zero once the modeled pursuer sits on the evader.
fn pure_pursuit_velocity(x_p: Vec2, x_e: Vec2, u_c: f64) -> Vec2 {
    let d = x_e - x_p;
    let n = d.norm();
    if n == 0.0 {
        Vec2::zeros()
    } else {
        d * (u_c / n)
    }
}

/// States with the evader following `evader` and the pursuer replaced by
/// the pure-pursuit model.
pub fn pure_pursuit_rollout(
    start: &GameState,
    evader: &ControlSequence,
    cfg: &ScenarioConfig,
) -> Vec<GameState> {
    let mut out = Vec::with_capacity(evader.len() + 1);
    out.push(*start);
    let mut s = *start;
    for v in &evader.headings {
        let x_p = s.x_p + pure_pursuit_velocity(s.x_p, s.x_e, cfg.u_c) * cfg.dt;
        s = step_state(&s, 0.0, *v, cfg);
        s.x_p = x_p;
        out.push(s);
    }
    out
}

pub fn evaluate_objective(prob: &HorizonProblem, seq: &ControlSequence) -> Result<f64> {
    check_len(prob.horizon(), seq.len())?;
    Ok(prob.evaluate(&seq.headings).objective)
}

/// Central-difference gradient of the objective (no penalty term).
pub fn objective_gradient(prob: &HorizonProblem, seq: &ControlSequence) -> Result<Vec<f64>> {
    check_len(prob.horizon(), seq.len())?;
    let mut work = seq.headings.clone();
    Ok(central_gradient(&mut work, |h| prob.evaluate(h).objective))
}

fn central_gradient(x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let fp = f(x);
        x[i] = orig - FD_STEP;
        let fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * FD_STEP);
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub sequence: ControlSequence,
    pub objective_value: f64,
    /// `max(0, g)` over the horizon against the problem's obstacle model.
    pub constraint_max_violation: f64,
    pub solver_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct StartResult {
    headings: Vec<f64>,
    eval: Evaluation,
    iters: usize,
    converged: bool,
}

/// Gradient descent with backtracking on one penalty weight. Returns the
/// iteration count and whether the search stalled before the iteration cap.
fn descend(prob: &HorizonProblem, x: &mut Vec<f64>, mu: f64) -> (usize, bool) {
    let mut fx = prob.penalized(x, mu);
    let mut trial = x.clone();
    for iter in 0..MAX_DESCENT_ITERS {
        let grad = central_gradient(x, |h| prob.penalized(h, mu));
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < 1e-12 {
            return (iter, true);
        }
        let slope = grad.iter().map(|g| g * g).sum::<f64>() / gmax;
        let mut step = STEP_INIT;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for ((t, xi), gi) in trial.iter_mut().zip(x.iter()).zip(&grad) {
                *t = xi - step * gi / gmax;
            }
            let ft = prob.penalized(&trial, mu);
            if ft <= fx - ARMIJO_C * step * slope {
                x.copy_from_slice(&trial);
                fx = ft;
                accepted = true;
                break;
            }
            step *= BACKTRACK;
        }
        if !accepted {
            return (iter + 1, true);
        }
    }
    (MAX_DESCENT_ITERS, false)
}

fn solve_from(prob: &HorizonProblem, start: Vec<f64>) -> StartResult {
    let mut x = start;
    let mut mu = MU_START;
    let mut iters = 0;
    let mut converged;
    loop {
        let (it, conv) = descend(prob, &mut x, mu);
        iters += it;
        converged = conv;
        if prob.evaluate(&x).max_violation <= FEASIBILITY_TOL || mu >= MU_MAX {
            break;
        }
        mu *= MU_FACTOR;
    }
    for h in x.iter_mut() {
        *h = wrap_angle(*h);
    }
    let eval = prob.evaluate(&x);
    StartResult {
        headings: x,
        eval,
        iters,
        converged,
    }
}

fn start_seed(seed: u64, role: Role, start: usize) -> u64 {
    let role_tag: u64 = match role {
        Role::PursuerMin => 0x5055_5253,
        Role::EvaderMax => 0x4556_4144,
    };
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (role_tag << 20) ^ (start as u64)
}

/// Initial heading vectors: `init` first, then seeded perturbations of it.
fn start_points(prob: &HorizonProblem, init: &ControlSequence) -> Vec<Vec<f64>> {
    let mut starts = vec![init.headings.clone()];
    for j in 1..prob.cfg.multi_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(start_seed(prob.cfg.seed, prob.role, j));
        let offset = rng.gen_range(-PERTURB_OFFSET..PERTURB_OFFSET);
        starts.push(
            init.headings
                .iter()
                .map(|h| h + offset + rng.gen_range(-PERTURB_JITTER..PERTURB_JITTER))
                .collect(),
        );
    }
    starts
}

/// Best feasible local optimum over all starts.
pub fn best_response(prob: &HorizonProblem, init: &ControlSequence) -> Result<BestResponse> {
    check_len(prob.horizon(), init.len())?;
    let sign = prob.sign();
    let mut results: Vec<StartResult> = start_points(prob, init)
        .into_par_iter()
        .map(|x0| solve_from(prob, x0))
        .collect();

    // A feasible initial guess is itself a candidate, so the search never
    // returns something worse than it was given.
    let init_eval = prob.evaluate(&init.headings);
    if init_eval.max_violation <= FEASIBILITY_TOL {
        results.insert(
            0,
            StartResult {
                headings: init.headings.iter().map(|h| wrap_angle(*h)).collect(),
                eval: init_eval,
                iters: 0,
                converged: true,
            },
        );
    }

    // Near-ties go to the earliest candidate (the initial guess, then the
    // start seeded from it). Games with flat directions otherwise hop between
    // equivalent plans from one iteration to the next.
    let total_iters = results.iter().map(|r| r.iters).sum();
    let feasible = || {
        results
            .iter()
            .filter(|r| r.eval.max_violation <= FEASIBILITY_TOL)
    };
    let best_value = feasible()
        .map(|r| sign * r.eval.objective)
        .fold(f64::INFINITY, f64::min);
    let tie = TIE_TOL * (1.0 + best_value.abs());
    let best = feasible().find(|r| sign * r.eval.objective <= best_value + tie);
    let Some(best) = best else {
        let violation = results
            .iter()
            .map(|r| r.eval.max_violation)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::NoFeasibleSequence { violation });
    };

    let sequence = ControlSequence::new(best.headings.clone(), prob.speed());
    let states = prob.rollout(&sequence)?;
    let constraint_max_violation = states[1..]
        .iter()
        .map(|s| {
            let me = match prob.role {
                Role::PursuerMin => s.x_p,
                Role::EvaderMax => s.x_e,
            };
            constraint_g(me, prob.obstacle(s), prob.cfg.r_o).max(0.0)
        })
        .fold(0.0, f64::max);
    Ok(BestResponse {
        sequence,
        objective_value: best.eval.objective,
        constraint_max_violation,
        solver_iters: total_iters,
        converged: best.converged,
    })
}

/// Heading from `from` toward `to`, as a constant sequence.
pub fn line_of_sight(len: usize, from: Vec2, to: Vec2, speed: f64) -> ControlSequence {
    ControlSequence::constant(len, crate::game::bearing(from, to), speed)
}
