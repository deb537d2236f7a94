//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use asym_pe::game::{
    constraint_g, step_state, ControlSequence, GameState, RiskWeight, ScenarioConfig,
    UncertaintySpec, Vec2,
};
use asym_pe::io::presets::{self, Expected, EXPECTATIONS};
use asym_pe::io::trace_csv::{read_trace_csv, write_trace_csv};
use asym_pe::sensitivity::{
    constraint_sensitivity_cartesian, constraint_sensitivity_polar, propagate_sensitivity_ode,
    pursuer_constraint_state_gradient, rcs_norm_at,
};
use asym_pe::sim::{replay, run, run_batch, SimulationTrace};
use asym_pe::solver::{solve_pursuer_game, GaussSeidelConfig, StepDecision};
use asym_pe::trajopt::{
    best_response, evaluate_objective, line_of_sight, HorizonProblem, Objective, ObstacleModel,
    Role,
};

const RUN_BUDGET: Duration = Duration::from_secs(60);

struct Verdict {
    ok: bool,
    detail: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            ok: true,
            detail: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.ok &= ok;
        self.detail
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

struct PresetRun {
    name: &'static str,
    trace: SimulationTrace,
    elapsed: Duration,
}

fn run_presets() -> Vec<PresetRun> {
    EXPECTATIONS
        .iter()
        .map(|e| {
            let cfg = presets::get(e.name).expect("registered preset");
            let start = Instant::now();
            let trace = run(&cfg);
            PresetRun {
                name: e.name,
                trace,
                elapsed: start.elapsed(),
            }
        })
        .collect()
}

fn outcomes(runs: &[PresetRun]) -> Verdict {
    let mut v = Verdict::new();
    for (e, r) in EXPECTATIONS.iter().zip(runs) {
        let o = r.trace.outcome;
        let want = match e.expected {
            Expected::Outcome(k) => k.to_string(),
            Expected::NoCapture => "no capture".into(),
        };
        v.check(
            e.outcome_ok(o.kind),
            format!("{}: got {} at t={}, want {want}", r.name, o.kind, o.t_end),
        );
        v.check(
            r.elapsed <= RUN_BUDGET,
            format!("{}: wall time {:.1?}", r.name, r.elapsed),
        );
        if e.expected == Expected::NoCapture {
            // Rho2Only sensitivity vanishes on the horizontal line through
            // the nominal obstacle; a trapped pursuer sits near it.
            let last = r.trace.records.last().unwrap().state;
            let off = (last.x_p.y - last.x_w_nominal.y).abs();
            v.check(
                off < 0.25 * r.trace.cfg.r_o,
                format!(
                    "{}: final pursuer offset from zero-uncertainty axis {off:.3}",
                    r.name
                ),
            );
        }
    }
    v
}

fn event_times(runs: &[PresetRun]) -> Verdict {
    let mut v = Verdict::new();
    for (e, r) in EXPECTATIONS.iter().zip(runs) {
        let Some(t_ref) = e.event_time else { continue };
        let o = r.trace.outcome;
        let event = matches!(e.expected, Expected::Outcome(k) if k == o.kind);
        v.check(
            event && e.time_ok(o.t_end),
            format!(
                "{}: {} at t={} vs reported {t_ref} (±{:.2})",
                r.name,
                o.kind,
                o.t_end,
                presets::EVENT_TIME_REL_TOL * t_ref
            ),
        );
    }
    v
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec2 {
    Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn sensitivity_suite() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r_o = 0.75;

    // (a) closed form against central differences of g in ρ
    let delta = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x_p = random_vec(&mut rng, 5.0);
        let x_w = random_vec(&mut rng, 5.0);
        let rho = random_vec(&mut rng, 1.0);
        let t = rng.gen_range(0.1..10.0);
        let x_w0 = x_w - rho * t;
        let g = |r: Vec2| constraint_g(x_p, x_w0 + r * t, r_o);
        let fd = [
            (g(rho + Vec2::new(delta, 0.0)) - g(rho - Vec2::new(delta, 0.0))) / (2.0 * delta),
            (g(rho + Vec2::new(0.0, delta)) - g(rho - Vec2::new(0.0, delta))) / (2.0 * delta),
        ];
        worst = worst.max(rel_err(&fd, &constraint_sensitivity_cartesian(x_p, x_w, t)));
    }
    v.check(
        worst < 1e-6,
        format!("(a) finite differences, worst relative error {worst:.2e}"),
    );

    // (b) sensitivity ODE chained through ∂g/∂x
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut cfg = presets::get("fig3_desensitized").unwrap();
        cfg.obstacle_start = random_vec(&mut rng, 5.0);
        cfg.rho_nominal = random_vec(&mut rng, 1.0);
        let n = 30;
        let u = ControlSequence::new((0..n).map(|_| rng.gen_range(-PI..PI)).collect(), cfg.u_c);
        let w = ControlSequence::new((0..n).map(|_| rng.gen_range(-PI..PI)).collect(), cfg.v_c);
        let sens = propagate_sensitivity_ode(&cfg, &u, &w).unwrap();
        let mut s = cfg.initial_state();
        for (k, m) in sens.iter().enumerate() {
            if k > 0 {
                s = step_state(&s, u.headings[k - 1], w.headings[k - 1], &cfg);
            }
            let grad = pursuer_constraint_state_gradient(s.x_p, s.x_w_nominal);
            let chained = grad * &m.entries;
            let closed = constraint_sensitivity_cartesian(s.x_p, s.x_w_nominal, s.t);
            for j in 0..2 {
                worst = worst.max((chained[(0, j)] - closed[j]).abs());
            }
        }
    }
    v.check(
        worst <= 1e-9,
        format!("(b) ODE route vs closed form, worst abs error {worst:.2e}"),
    );

    // (c) polar forms against the chain rule through ρ = |ρ|(cos ψ, sin ψ)
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x_p = random_vec(&mut rng, 5.0);
        let x_w = random_vec(&mut rng, 5.0);
        let t = rng.gen_range(0.0..10.0);
        let speed = rng.gen_range(0.05..2.0);
        let psi = rng.gen_range(-PI..PI);
        let [a, b] = constraint_sensitivity_cartesian(x_p, x_w, t);
        let by_speed = a * psi.cos() + b * psi.sin();
        let by_heading = a * (-speed * psi.sin()) + b * (speed * psi.cos());
        let scale = 1.0 + a.abs() + b.abs();
        let s = constraint_sensitivity_polar(x_p, x_w, t, speed, psi, UncertaintySpec::SpeedOnly);
        let h = constraint_sensitivity_polar(x_p, x_w, t, speed, psi, UncertaintySpec::HeadingOnly);
        worst = worst.max((s - by_speed).abs() / scale);
        worst = worst.max((h - by_heading).abs() / scale);
    }
    v.check(
        worst <= 1e-12,
        format!("(c) polar vs chain rule, worst scaled error {worst:.2e}"),
    );

    // (d) x_w(ρ̂ + δ) = x_w(ρ̂) + S δ along the integrated dynamics
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut cfg = presets::get("fig2_collision").unwrap();
        cfg.rho_nominal = random_vec(&mut rng, 1.0);
        let d = random_vec(&mut rng, 0.2);
        cfg.rho_true = cfg.rho_nominal + d;
        let mut s = cfg.initial_state();
        for _ in 0..100 {
            s = step_state(&s, 0.0, 0.0, &cfg);
            let predicted = s.x_w_nominal + d * s.t;
            worst = worst.max((predicted - s.x_w_true).norm());
        }
    }
    v.check(
        worst <= 1e-12,
        format!("(d) first-order prediction, worst position error {worst:.2e}"),
    );
    v
}

fn field_cfg(spec: UncertaintySpec, rho: Vec2) -> ScenarioConfig {
    let mut cfg = presets::get("fig3_desensitized").unwrap();
    cfg.uncertainty_spec = spec;
    cfg.rho_nominal = rho;
    cfg.obstacle_start = Vec2::new(0.4, -0.3) - rho * 10.0;
    cfg
}

fn field_properties() -> Verdict {
    let mut v = Verdict::new();
    let t = 10.0;
    let x_w = Vec2::new(0.4, -0.3);

    let cfg = field_cfg(UncertaintySpec::BothCartesian, Vec2::new(0.0, -0.25));
    for radius in [0.5, 0.75, 1.3, 2.0] {
        let vals: Vec<f64> = (0..64)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 64.0;
                rcs_norm_at(&cfg, t, x_w + Vec2::new(a.cos(), a.sin()) * radius)
            })
            .collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        v.check(
            max - min < 1e-12,
            format!("BothCartesian circle r={radius}: spread {:.2e}", max - min),
        );
    }

    let cfg = field_cfg(UncertaintySpec::Rho1Only, Vec2::new(-0.25, 0.0));
    let mut on_axis = 0.0f64;
    let mut asym = 0.0f64;
    for k in 0..=40 {
        let y = -3.0 + 6.0 * k as f64 / 40.0;
        on_axis = on_axis.max(rcs_norm_at(&cfg, t, Vec2::new(x_w.x, y)));
        for dx in [0.1, 0.5, 1.0, 2.5] {
            let l = rcs_norm_at(&cfg, t, Vec2::new(x_w.x - dx, y));
            let r = rcs_norm_at(&cfg, t, Vec2::new(x_w.x + dx, y));
            asym = asym.max((l - r).abs());
        }
    }
    v.check(
        on_axis < 1e-12,
        format!("Rho1Only on vertical axis: max {on_axis:.2e}"),
    );
    v.check(
        asym < 1e-12,
        format!("Rho1Only mirror asymmetry: max {asym:.2e}"),
    );

    let rho = presets::polar_velocity(0.3, 35.0);
    let cfg = field_cfg(UncertaintySpec::HeadingOnly, rho);
    let dir = rho / rho.norm();
    let mut along = 0.0f64;
    let mut off = 0.0f64;
    for k in 0..=40 {
        let s = -3.0 + 6.0 * k as f64 / 40.0;
        along = along.max(rcs_norm_at(&cfg, t, x_w + dir * s));
        off = off.max(rcs_norm_at(&cfg, t, x_w + Vec2::new(-dir.y, dir.x) * s));
    }
    v.check(
        along < 1e-12 && off > 1e-3,
        format!("HeadingOnly along nominal velocity: max {along:.2e} (across: {off:.3})"),
    );
    v
}

/// Replays a trace's pursuer solves, calling `each` with the state, warm
/// start and the decision the simulator made.
fn pursuer_replay(
    trace: &SimulationTrace,
    mut each: impl FnMut(&GameState, (&ControlSequence, &ControlSequence), &StepDecision) -> bool,
) -> (usize, usize) {
    let cfg = &trace.cfg;
    let gs = GaussSeidelConfig::from_scenario(cfg);
    let s0 = cfg.initial_state();
    let mut warm_u = line_of_sight(cfg.horizon, s0.x_p, s0.x_e, cfg.u_c);
    let mut warm_v = line_of_sight(cfg.horizon, s0.x_p, s0.x_e, cfg.v_c);
    let (mut agree, mut total) = (0, 0);
    for rec in &trace.records {
        let Some(u_head) = rec.u_head else { break };
        let d = solve_pursuer_game(
            &rec.state,
            cfg,
            &gs,
            cfg.is_desensitized(),
            (&warm_u, &warm_v),
        )
        .unwrap();
        total += 1;
        if d.u_head.to_bits() == u_head.to_bits() && each(&rec.state, (&warm_u, &warm_v), &d) {
            agree += 1;
        }
        warm_u = d.pursuer_plan.shifted();
        warm_v = d.evader_plan.shifted();
    }
    (agree, total)
}

fn same_plan(a: &StepDecision, b: &StepDecision) -> bool {
    let bits = |s: &ControlSequence| s.headings.iter().map(|h| h.to_bits()).collect::<Vec<_>>();
    a.u_head.to_bits() == b.u_head.to_bits()
        && bits(&a.pursuer_plan) == bits(&b.pursuer_plan)
        && bits(&a.evader_plan) == bits(&b.evader_plan)
}

fn zero_weight_equivalence(fig2: &SimulationTrace) -> Verdict {
    let mut v = Verdict::new();
    let cfg = &fig2.cfg;
    v.check(cfg.q.is_zero(), "base scenario carries Q = 0".into());
    let gs = GaussSeidelConfig::from_scenario(cfg);
    let (agree, total) = pursuer_replay(fig2, |s, warm, d| {
        let risk_aware = solve_pursuer_game(s, cfg, &gs, true, warm).unwrap();
        same_plan(d, &risk_aware)
    });
    v.check(
        agree == total && total > 0,
        format!("risk-aware decisions bit-identical at {agree}/{total} steps"),
    );
    v
}

fn information_hygiene(trace: &SimulationTrace) -> Verdict {
    let mut v = Verdict::new();
    let cfg = &trace.cfg;
    let gs = GaussSeidelConfig::from_scenario(cfg);
    let shifts = [
        Vec2::new(0.0, -0.4),
        Vec2::new(0.3, 0.2),
        Vec2::new(-1.0, 0.0),
    ];
    for shift in shifts {
        let mut other = cfg.clone();
        other.rho_true = cfg.rho_true + shift;
        let (agree, total) = pursuer_replay(trace, |s, warm, d| {
            let mut perturbed = *s;
            perturbed.x_w_true = s.x_w_true + shift * s.t + Vec2::new(0.5, -0.5);
            let alt =
                solve_pursuer_game(&perturbed, &other, &gs, cfg.is_desensitized(), warm).unwrap();
            same_plan(d, &alt)
        });
        v.check(
            agree == total && total > 0,
            format!(
                "ρ̄ shifted by ({}, {}): {agree}/{total} decisions bit-identical",
                shift.x, shift.y
            ),
        );
    }
    v
}

fn grid_search(prob: &HorizonProblem, speed: f64) -> f64 {
    let sign = match prob.role {
        Role::PursuerMin => 1.0,
        Role::EvaderMax => -1.0,
    };
    (0..720)
        .map(|k| {
            let h = -PI + k as f64 * 0.5f64.to_radians();
            let seq = ControlSequence::constant(prob.horizon(), h, speed);
            sign * evaluate_objective(prob, &seq).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
        * sign
}

fn best_response_oracle() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut cfg = presets::get("fig2_collision").unwrap();
        cfg.horizon = rng.gen_range(5..=12);
        cfg.obstacle_start = Vec2::new(1e3, 1e3);
        cfg.q = RiskWeight::Scalar(0.0);
        cfg.seed = i;
        let reach = cfg.horizon as f64 * (cfg.u_c + cfg.v_c) * cfg.dt;
        let x_p = random_vec(&mut rng, 3.0);
        let a = rng.gen_range(-PI..PI);
        let x_e = x_p + Vec2::new(a.cos(), a.sin()) * rng.gen_range(reach * 1.05..reach * 3.0);
        let s = GameState {
            t: 0.0,
            x_p,
            x_e,
            x_w_true: cfg.obstacle_start,
            x_w_nominal: cfg.obstacle_start,
        };
        let role = if i % 2 == 0 {
            Role::PursuerMin
        } else {
            Role::EvaderMax
        };
        let (speed, opp_speed) = match role {
            Role::PursuerMin => (cfg.u_c, cfg.v_c),
            Role::EvaderMax => (cfg.v_c, cfg.u_c),
        };
        let opponent = ControlSequence::new(
            (0..cfg.horizon).map(|_| rng.gen_range(-PI..PI)).collect(),
            opp_speed,
        );
        let prob = HorizonProblem::new(
            role,
            Objective::TerminalDistance,
            s,
            &opponent,
            ObstacleModel::Nominal,
            &cfg,
        )
        .unwrap();
        let init = ControlSequence::constant(cfg.horizon, rng.gen_range(-PI..PI), speed);
        let br = best_response(&prob, &init).unwrap();
        worst = worst.max((br.objective_value - grid_search(&prob, speed)).abs());
    }
    v.check(
        worst <= 1e-3,
        format!("20 obstacle-free subproblems, worst gap to 0.5° grid {worst:.2e}"),
    );
    v
}

fn determinism_and_replay(fig2: &SimulationTrace) -> Verdict {
    let mut v = Verdict::new();
    let again = run(&fig2.cfg);
    v.check(&again == fig2, "repeated run identical".into());
    let batch = run_batch(&[fig2.cfg.clone()]);
    v.check(&batch[0] == fig2, "batch run identical".into());

    let csv = write_trace_csv(fig2).unwrap();
    let parsed = read_trace_csv(&csv).unwrap();
    let states = replay(
        &fig2.cfg,
        &parsed.pursuer_headings(),
        &parsed.evader_headings(),
    )
    .unwrap();
    let logged: Vec<GameState> = parsed.rows.iter().map(|r| r.state).collect();
    v.check(
        states == logged,
        format!("CSV replay reconstructs {} states exactly", states.len()),
    );
    v.check(
        parsed.outcome == fig2.outcome,
        format!(
            "CSV outcome line {} at t={}",
            parsed.outcome.kind, parsed.outcome.t_end
        ),
    );
    v
}

fn main() {
    let runs = run_presets();
    let fig2 = &runs[0].trace;
    let fig3 = &runs[1].trace;

    let criteria: Vec<(&str, Verdict)> = vec![
        ("1 outcome reproduction", outcomes(&runs)),
        ("2 event-time tolerance", event_times(&runs)),
        ("3 sensitivity correctness", sensitivity_suite()),
        ("4 RCS field properties", field_properties()),
        ("5 Q=0 equivalence", zero_weight_equivalence(fig2)),
        ("6 information hygiene", information_hygiene(fig3)),
        ("7 best-response oracle", best_response_oracle()),
        ("8 determinism & replay", determinism_and_replay(fig2)),
    ];

    let mut failed = 0;
    for (name, v) in &criteria {
        println!("{} {name}", if v.ok { "PASS" } else { "FAIL" });
        for line in &v.detail {
            println!("    {line}");
        }
        failed += usize::from(!v.ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
