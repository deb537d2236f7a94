//! Scenario documents.
//!
//! A scenario is a flat YAML mapping whose keys mirror [`ScenarioConfig`].
//! An optional `preset` key selects a built-in scenario as the base and
//! every other key overrides it. Obstacle velocities may be given in polar
//! form with `*_speed` and `*_heading_deg` keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{EvaderMode, RiskWeight, ScenarioConfig, UncertaintySpec, Vec2};
use crate::io::presets;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub pursuer_start: Option<[f64; 2]>,
    pub evader_start: Option<[f64; 2]>,
    pub obstacle_start: Option<[f64; 2]>,
    pub u_c: Option<f64>,
    pub v_c: Option<f64>,
    pub epsilon: Option<f64>,
    pub r_o: Option<f64>,
    pub rho_nominal: Option<[f64; 2]>,
    pub rho_true: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_nominal_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_nominal_heading_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_true_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_true_heading_deg: Option<f64>,
    pub uncertainty_spec: Option<UncertaintySpec>,
    #[serde(rename = "N")]
    pub horizon: Option<usize>,
    pub dt: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<RiskWeight>,
    pub alpha_o: Option<f64>,
    pub alpha_d: Option<f64>,
    pub evader_mode: Option<EvaderMode>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub relevance_scale: Option<f64>,
    pub multi_starts: Option<usize>,
    pub gs_conv_tol: Option<f64>,
    pub gs_max_iters: Option<usize>,
}

fn missing(key: &str) -> Error {
    Error::Parse {
        line: None,
        key: Some(key.to_string()),
        msg: "required when no preset is given".into(),
    }
}

fn vec2(v: [f64; 2]) -> Vec2 {
    Vec2::new(v[0], v[1])
}

/// Resolve a velocity from Cartesian or polar keys, falling back to `base`.
fn velocity(
    name: &str,
    cartesian: Option<[f64; 2]>,
    speed: Option<f64>,
    heading_deg: Option<f64>,
    base: Option<Vec2>,
) -> Result<Vec2> {
    match (cartesian, speed, heading_deg) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::Parse {
            line: None,
            key: Some(name.to_string()),
            msg: "give either Cartesian or polar components, not both".into(),
        }),
        (Some(c), None, None) => Ok(vec2(c)),
        (None, None, None) => base.ok_or_else(|| missing(name)),
        (None, s, h) => {
            let (bs, bh) = base
                .map(|b| (b.norm(), b.y.atan2(b.x).to_degrees()))
                .unzip();
            let speed = s.or(bs).ok_or_else(|| missing(&format!("{name}_speed")))?;
            let heading = h
                .or(bh)
                .ok_or_else(|| missing(&format!("{name}_heading_deg")))?;
            Ok(presets::polar_velocity(speed, heading))
        }
    }
}

impl ScenarioFile {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let arr = |v: Vec2| Some([v.x, v.y]);
        Self {
            preset: None,
            pursuer_start: arr(cfg.pursuer_start),
            evader_start: arr(cfg.evader_start),
            obstacle_start: arr(cfg.obstacle_start),
            u_c: Some(cfg.u_c),
            v_c: Some(cfg.v_c),
            epsilon: Some(cfg.epsilon),
            r_o: Some(cfg.r_o),
            rho_nominal: arr(cfg.rho_nominal),
            rho_true: arr(cfg.rho_true),
            rho_nominal_speed: None,
            rho_nominal_heading_deg: None,
            rho_true_speed: None,
            rho_true_heading_deg: None,
            uncertainty_spec: Some(cfg.uncertainty_spec),
            horizon: Some(cfg.horizon),
            dt: Some(cfg.dt),
            q: Some(cfg.q.clone()),
            alpha_o: Some(cfg.alpha_o),
            alpha_d: Some(cfg.alpha_d),
            evader_mode: Some(cfg.evader_mode),
            t_max: Some(cfg.t_max),
            seed: Some(cfg.seed),
            relevance_scale: Some(cfg.relevance_scale),
            multi_starts: Some(cfg.multi_starts),
            gs_conv_tol: Some(cfg.gs_conv_tol),
            gs_max_iters: Some(cfg.gs_max_iters),
        }
    }

    /// Apply this document's keys on top of `base` (or of its preset, or of
    /// nothing) and validate the result.
    pub fn resolve(&self, base: Option<&ScenarioConfig>) -> Result<ScenarioConfig> {
        let preset_base;
        let base = match &self.preset {
            Some(name) => {
                preset_base = presets::get(name).ok_or_else(|| Error::Parse {
                    line: None,
                    key: Some("preset".into()),
                    msg: format!(
                        "unknown preset `{name}` (known: {})",
                        presets::NAMES.join(", ")
                    ),
                })?;
                Some(&preset_base)
            }
            None => base,
        };

        macro_rules! req {
            ($field:ident, $key:literal) => {
                match (self.$field.clone(), base) {
                    (Some(v), _) => v,
                    (None, Some(b)) => b.$field.clone(),
                    (None, None) => return Err(missing($key)),
                }
            };
        }
        macro_rules! opt {
            ($field:ident, $default:expr) => {
                self.$field
                    .clone()
                    .or(base.map(|b| b.$field.clone()))
                    .unwrap_or($default)
            };
        }
        let point = |v: Option<[f64; 2]>, b: Option<Vec2>, key: &str| -> Result<Vec2> {
            v.map(vec2).or(b).ok_or_else(|| missing(key))
        };

        let cfg = ScenarioConfig {
            pursuer_start: point(
                self.pursuer_start,
                base.map(|b| b.pursuer_start),
                "pursuer_start",
            )?,
            evader_start: point(
                self.evader_start,
                base.map(|b| b.evader_start),
                "evader_start",
            )?,
            obstacle_start: point(
                self.obstacle_start,
                base.map(|b| b.obstacle_start),
                "obstacle_start",
            )?,
            u_c: req!(u_c, "u_c"),
            v_c: req!(v_c, "v_c"),
            epsilon: req!(epsilon, "epsilon"),
            r_o: req!(r_o, "r_o"),
            rho_nominal: velocity(
                "rho_nominal",
                self.rho_nominal,
                self.rho_nominal_speed,
                self.rho_nominal_heading_deg,
                base.map(|b| b.rho_nominal),
            )?,
            rho_true: velocity(
                "rho_true",
                self.rho_true,
                self.rho_true_speed,
                self.rho_true_heading_deg,
                base.map(|b| b.rho_true),
            )?,
            uncertainty_spec: req!(uncertainty_spec, "uncertainty_spec"),
            horizon: req!(horizon, "N"),
            dt: req!(dt, "dt"),
            q: opt!(q, RiskWeight::Scalar(0.0)),
            alpha_o: opt!(alpha_o, 1.0),
            alpha_d: opt!(alpha_d, 0.0),
            evader_mode: opt!(evader_mode, EvaderMode::Original),
            t_max: opt!(t_max, 10.0),
            seed: opt!(seed, 0),
            relevance_scale: opt!(relevance_scale, 1.0),
            multi_starts: opt!(multi_starts, 8),
            gs_conv_tol: opt!(gs_conv_tol, 5e-3),
            gs_max_iters: opt!(gs_max_iters, 50),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn yaml_error(e: serde_yaml::Error) -> Error {
    let msg = e.to_string();
    let key = msg
        .split_once("unknown field `")
        .and_then(|(_, rest)| rest.split_once('`'))
        .map(|(k, _)| k.to_string())
        .or_else(|| {
            msg.split_once(':')
                .map(|(head, _)| head.trim())
                .filter(|h| {
                    !h.is_empty() && h.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                })
                .map(str::to_string)
        });
    Error::Parse {
        line: e.location().map(|l| l.line()),
        key,
        msg,
    }
}

pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    if text.trim().is_empty() {
        return Ok(ScenarioFile::default());
    }
    serde_yaml::from_str(text).map_err(yaml_error)
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    parse_scenario_file(text)?.resolve(None)
}

/// Apply a document of overrides on top of an existing configuration.
pub fn apply_overrides(cfg: &ScenarioConfig, text: &str) -> Result<ScenarioConfig> {
    parse_scenario_file(text)?.resolve(Some(cfg))
}

/// Full document for `cfg` with Cartesian velocities and no preset.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    serde_yaml::to_string(&ScenarioFile::from_config(cfg))
        .expect("scenario documents always serialize")
}
