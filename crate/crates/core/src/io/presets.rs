//! Built-in scenarios.
//!
//! `fig2_collision` is the base case; the others change only what differs
//! from the scenario they build on.

use crate::game::{EvaderMode, OutcomeKind, RiskWeight, ScenarioConfig, UncertaintySpec, Vec2};

pub const NAMES: [&str; 8] = [
    "fig2_collision",
    "fig3_desensitized",
    "fig4_rho1",
    "fig5_fast_obstacle",
    "fig6_heading",
    "fig7_deception_collision",
    "fig8_desensitized_vs_deception",
    "fig9_local_minimum",
];

/// Obstacle velocity from speed and heading in degrees.
pub fn polar_velocity(speed: f64, heading_deg: f64) -> Vec2 {
    let h = heading_deg.to_radians();
    Vec2::new(speed * h.cos(), speed * h.sin())
}

fn fig2() -> ScenarioConfig {
    ScenarioConfig {
        pursuer_start: Vec2::new(0.0, 0.0),
        evader_start: Vec2::new(3.0, 0.0),
        obstacle_start: Vec2::new(2.0, 1.15),
        u_c: 1.0,
        v_c: 0.6,
        epsilon: 0.3,
        r_o: 0.75,
        rho_nominal: Vec2::new(0.0, -0.25),
        rho_true: Vec2::new(0.0, -0.35),
        uncertainty_spec: UncertaintySpec::Rho2Only,
        horizon: 10,
        dt: 0.1,
        q: RiskWeight::Scalar(0.0),
        alpha_o: 1.0,
        alpha_d: 0.0,
        evader_mode: EvaderMode::Original,
        t_max: 10.0,
        seed: 0,
        relevance_scale: 1.0,
        multi_starts: 8,
        gs_conv_tol: 5e-3,
        gs_max_iters: 50,
    }
}

fn fig3() -> ScenarioConfig {
    ScenarioConfig {
        q: RiskWeight::Scalar(1.0),
        ..fig2()
    }
}

fn fig4() -> ScenarioConfig {
    ScenarioConfig {
        horizon: 5,
        dt: 0.2,
        obstacle_start: Vec2::new(4.0, 0.1),
        rho_nominal: Vec2::new(-0.25, 0.0),
        rho_true: Vec2::new(-0.35, 0.0),
        uncertainty_spec: UncertaintySpec::Rho1Only,
        ..fig3()
    }
}

fn fig5() -> ScenarioConfig {
    ScenarioConfig {
        obstacle_start: Vec2::new(-1.0, 0.1),
        rho_nominal: Vec2::new(1.3, 0.0),
        rho_true: Vec2::new(1.4, 0.0),
        ..fig4()
    }
}

fn fig6() -> ScenarioConfig {
    ScenarioConfig {
        obstacle_start: Vec2::new(4.5, 1.0),
        rho_nominal: polar_velocity(0.3, 180.0),
        rho_true: polar_velocity(0.3, -150.0),
        uncertainty_spec: UncertaintySpec::HeadingOnly,
        q: RiskWeight::Scalar(2.5),
        ..fig3()
    }
}

fn fig7() -> ScenarioConfig {
    ScenarioConfig {
        evader_start: Vec2::new(4.0, 0.0),
        obstacle_start: Vec2::new(3.0, 1.65),
        alpha_o: 0.0,
        alpha_d: 1.0,
        evader_mode: EvaderMode::Deceptive,
        ..fig2()
    }
}

fn fig8() -> ScenarioConfig {
    ScenarioConfig {
        q: RiskWeight::Scalar(0.5),
        uncertainty_spec: UncertaintySpec::BothCartesian,
        ..fig7()
    }
}

fn fig9() -> ScenarioConfig {
    ScenarioConfig {
        q: RiskWeight::Scalar(0.5),
        uncertainty_spec: UncertaintySpec::Rho2Only,
        ..fig7()
    }
}

pub fn get(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "fig2_collision" => fig2(),
        "fig3_desensitized" => fig3(),
        "fig4_rho1" => fig4(),
        "fig5_fast_obstacle" => fig5(),
        "fig6_heading" => fig6(),
        "fig7_deception_collision" => fig7(),
        "fig8_desensitized_vs_deception" => fig8(),
        "fig9_local_minimum" => fig9(),
        _ => return None,
    })
}

pub fn all() -> Vec<(&'static str, ScenarioConfig)> {
    NAMES
        .iter()
        .map(|n| (*n, get(n).expect("registered preset")))
        .collect()
}

/// Reported result of a preset run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    Outcome(OutcomeKind),
    /// The run must end without a capture.
    NoCapture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetExpectation {
    pub name: &'static str,
    pub expected: Expected,
    /// Reported event time, if any.
    pub event_time: Option<f64>,
}

/// Event times may differ from the reported ones by this fraction.
pub const EVENT_TIME_REL_TOL: f64 = 0.25;

pub const EXPECTATIONS: [PresetExpectation; 8] = [
    PresetExpectation {
        name: "fig2_collision",
        expected: Expected::Outcome(OutcomeKind::PursuerCollision),
        event_time: None,
    },
    PresetExpectation {
        name: "fig3_desensitized",
        expected: Expected::Outcome(OutcomeKind::Capture),
        event_time: Some(5.7),
    },
    PresetExpectation {
        name: "fig4_rho1",
        expected: Expected::Outcome(OutcomeKind::Capture),
        event_time: Some(5.6),
    },
    PresetExpectation {
        name: "fig5_fast_obstacle",
        expected: Expected::Outcome(OutcomeKind::Capture),
        event_time: Some(6.4),
    },
    PresetExpectation {
        name: "fig6_heading",
        expected: Expected::Outcome(OutcomeKind::Capture),
        event_time: Some(10.0),
    },
    PresetExpectation {
        name: "fig7_deception_collision",
        expected: Expected::Outcome(OutcomeKind::PursuerCollision),
        event_time: Some(2.6),
    },
    PresetExpectation {
        name: "fig8_desensitized_vs_deception",
        expected: Expected::Outcome(OutcomeKind::Capture),
        event_time: Some(8.4),
    },
    PresetExpectation {
        name: "fig9_local_minimum",
        expected: Expected::NoCapture,
        event_time: None,
    },
];

impl PresetExpectation {
    pub fn outcome_ok(&self, kind: OutcomeKind) -> bool {
        match self.expected {
            Expected::Outcome(k) => k == kind,
            Expected::NoCapture => kind != OutcomeKind::Capture,
        }
    }

    pub fn time_ok(&self, t_end: f64) -> bool {
        self.event_time
            .map_or(true, |t| (t_end - t).abs() <= EVENT_TIME_REL_TOL * t + 1e-9)
    }
}
