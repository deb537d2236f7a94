use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::game::ScenarioConfig;
use crate::io::presets::{self, EXPECTATIONS};
use crate::io::scenario::{apply_overrides, parse_scenario};
use crate::io::trace_csv::{write_field_csv, write_trace_csv};
use crate::sensitivity::{rcs_field_grid, GridSpec};
use crate::sim::{run, run_batch, SimulationTrace};

pub const SEED_ENV: &str = "ASYM_PE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "asym-pe",
    about = "Pursuit-evasion with an uncertain moving obstacle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and print its outcome; writes the trace CSV with --out.
    Run {
        /// Scenario file or preset name.
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the RCS norm over a grid of pursuer positions as CSV.
    Field {
        scenario: String,
        #[arg(long)]
        t: f64,
        /// x1min,x1max,x2min,x2max,res
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario for each value of one key and tabulate outcomes.
    Sweep {
        scenario: String,
        /// KEY=v1,v2,...
        #[arg(long)]
        vary: String,
    },
    /// List built-in scenarios.
    Presets,
    /// Run every preset and check it against its reported outcome.
    Verify,
}

/// Load a scenario from a file path, or by preset name.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig> {
    let path = Path::new(arg);
    let cfg = if path.is_file() {
        parse_scenario(&fs::read_to_string(path)?)?
    } else if let Some(cfg) = presets::get(arg) {
        cfg
    } else {
        return Err(Error::Parse {
            line: None,
            key: None,
            msg: format!("`{arg}` is neither a scenario file nor a preset"),
        });
    };
    apply_env(cfg)
}

fn apply_env(mut cfg: ScenarioConfig) -> Result<ScenarioConfig> {
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v.trim().parse().map_err(|_| Error::Parse {
            line: None,
            key: Some(SEED_ENV.into()),
            msg: format!("not an unsigned integer: `{v}`"),
        })?;
    }
    Ok(cfg)
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::DegenerateGrid(format!("expected x1min,x1max,x2min,x2max,res, got `{s}`"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
    Ok(GridSpec {
        x1_min: f(0)?,
        x1_max: f(1)?,
        x2_min: f(2)?,
        x2_max: f(3)?,
        resolution: parts[4].parse().map_err(|_| bad())?,
    })
}

fn summary(trace: &SimulationTrace) -> String {
    format!(
        "outcome={} t_end={} steps={}",
        trace.outcome.kind,
        trace.outcome.t_end,
        trace.records.len().saturating_sub(1)
    )
}

fn stem(arg: &str) -> String {
    Path::new(arg)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Presets => {
            for name in presets::NAMES {
                writeln!(out, "{name}")?;
            }
        }
        Command::Run { scenario, out: dir } => {
            let cfg = load_scenario(&scenario)?;
            let trace = run(&cfg);
            if let Some(dir) = dir {
                fs::create_dir_all(&dir)?;
                let path = dir.join(format!("{}.csv", stem(&scenario)));
                fs::write(&path, write_trace_csv(&trace)?)?;
                writeln!(out, "trace={}", path.display())?;
            }
            writeln!(out, "{}", summary(&trace))?;
        }
        Command::Field {
            scenario,
            t,
            grid,
            out: file,
        } => {
            let cfg = load_scenario(&scenario)?;
            let field = rcs_field_grid(&cfg, t, &parse_grid(&grid)?)?;
            let csv = write_field_csv(&field)?;
            match file {
                Some(p) => fs::write(p, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
        }
        Command::Sweep { scenario, vary } => {
            let base = load_scenario(&scenario)?;
            let (key, values) = vary.split_once('=').ok_or_else(|| Error::Parse {
                line: None,
                key: None,
                msg: format!("--vary expects KEY=v1,v2,..., got `{vary}`"),
            })?;
            let values: Vec<&str> = values.split(',').map(str::trim).collect();
            let cfgs = values
                .iter()
                .map(|v| apply_overrides(&base, &format!("{key}: {v}")))
                .collect::<Result<Vec<_>>>()?;
            writeln!(out, "{key}\toutcome\tt_end")?;
            for (v, trace) in values.iter().zip(run_batch(&cfgs)) {
                writeln!(out, "{v}\t{}\t{}", trace.outcome.kind, trace.outcome.t_end)?;
            }
        }
        Command::Verify => {
            let cfgs: Vec<ScenarioConfig> = EXPECTATIONS
                .iter()
                .map(|e| apply_env(presets::get(e.name).expect("registered preset")))
                .collect::<Result<_>>()?;
            let mut failed = 0;
            for (e, trace) in EXPECTATIONS.iter().zip(run_batch(&cfgs)) {
                let ok = e.outcome_ok(trace.outcome.kind) && e.time_ok(trace.outcome.t_end);
                if !ok {
                    failed += 1;
                }
                let reference = e
                    .event_time
                    .map(|t| format!(" (reported t={t})"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{} {}: {}{}",
                    if ok { "PASS" } else { "FAIL" },
                    e.name,
                    summary(&trace),
                    reference
                )?;
            }
            return Ok(if failed == 0 { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Parse arguments and run a command, writing normal output to `out`.
pub fn cli_main_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    cli_main_with(argv, &mut std::io::stdout().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = cli_main_with(
            std::iter::once("asym-pe").chain(args.iter().copied()),
            &mut buf,
        );
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn lists_presets() {
        let (code, out) = run_cli(&["presets"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 8);
        assert_eq!(out.lines().next(), Some("fig2_collision"));
    }

    #[test]
    fn errors_exit_nonzero() {
        assert_eq!(run_cli(&["run", "no_such_thing"]).0, 1);
        assert_eq!(run_cli(&["bogus"]).0, 2);
        assert_eq!(
            run_cli(&["field", "fig2_collision", "--t", "1", "--grid", "0,1,0,1,0"]).0,
            1
        );
        assert_eq!(run_cli(&["sweep", "fig2_collision", "--vary", "Q"]).0, 1);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("-3, 3, -2, 2, 41").unwrap();
        assert_eq!(g.x2_min, -2.0);
        assert_eq!(g.resolution, 41);
        assert_eq!(g.x1_min, -3.0);
        assert!(parse_grid("1,2,3").is_err());
    }

    #[test]
    fn field_to_stdout() {
        let (code, out) = run_cli(&[
            "field",
            "fig8_desensitized_vs_deception",
            "--t",
            "1",
            "--grid",
            "0,1,0,1,3",
        ]);
        assert_eq!(code, 0);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines[0], "x1,x2,rcs_norm");
        assert_eq!(lines.len(), 10);
    }
}
