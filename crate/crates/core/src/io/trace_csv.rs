//! CSV output for traces and RCS fields.

use crate::error::{Error, Result};
use crate::game::{GameState, Outcome, OutcomeKind, Vec2};
use crate::sensitivity::FieldGrid;
use crate::sim::SimulationTrace;

pub const TRACE_HEADER: [&str; 12] = [
    "t", "xp1", "xp2", "xe1", "xe2", "xw_true1", "xw_true2", "xw_nom1", "xw_nom2", "u_head",
    "v_head", "risk",
];

pub const FIELD_HEADER: [&str; 3] = ["x1", "x2", "rcs_norm"];

// Display for f64 is the shortest string that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_trace_csv(trace: &SimulationTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        let s = &r.state;
        w.write_record([
            num(s.t),
            num(s.x_p.x),
            num(s.x_p.y),
            num(s.x_e.x),
            num(s.x_e.y),
            num(s.x_w_true.x),
            num(s.x_w_true.y),
            num(s.x_w_nominal.x),
            num(s.x_w_nominal.y),
            opt(r.u_head),
            opt(r.v_head),
            opt(r.risk),
        ])?;
    }
    let mut out = finish(w)?;
    out.push_str(&format!(
        "# outcome={},t_end={}\n",
        trace.outcome.kind,
        num(trace.outcome.t_end)
    ));
    Ok(out)
}

/// One parsed trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub state: GameState,
    pub u_head: Option<f64>,
    pub v_head: Option<f64>,
    pub risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub rows: Vec<TraceRow>,
    pub outcome: Outcome,
}

impl ParsedTrace {
    pub fn pursuer_headings(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.u_head).collect()
    }

    pub fn evader_headings(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.v_head).collect()
    }
}

fn parse_outcome(line: &str) -> Result<Outcome> {
    let body = line
        .strip_prefix("# outcome=")
        .ok_or_else(|| Error::Trace(format!("bad outcome line `{line}`")))?;
    let (kind, t) = body
        .split_once(",t_end=")
        .ok_or_else(|| Error::Trace(format!("bad outcome line `{line}`")))?;
    let kind = OutcomeKind::from_name(kind)
        .ok_or_else(|| Error::Trace(format!("unknown outcome `{kind}`")))?;
    let t_end = t
        .trim()
        .parse()
        .map_err(|_| Error::Trace(format!("bad t_end `{t}`")))?;
    Ok(Outcome { kind, t_end })
}

pub fn read_trace_csv(text: &str) -> Result<ParsedTrace> {
    let outcome_line = text
        .lines()
        .rev()
        .find(|l| l.starts_with("# outcome="))
        .ok_or_else(|| Error::Trace("missing outcome line".into()))?;
    let outcome = parse_outcome(outcome_line)?;

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Trace(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| {
                    Error::Trace(format!("bad number `{s}` in column {}", TRACE_HEADER[i]))
                })
            }
        };
        let req = |i: usize| -> Result<f64> {
            field(i)?.ok_or_else(|| Error::Trace(format!("empty {}", TRACE_HEADER[i])))
        };
        rows.push(TraceRow {
            state: GameState {
                t: req(0)?,
                x_p: Vec2::new(req(1)?, req(2)?),
                x_e: Vec2::new(req(3)?, req(4)?),
                x_w_true: Vec2::new(req(5)?, req(6)?),
                x_w_nominal: Vec2::new(req(7)?, req(8)?),
            },
            u_head: field(9)?,
            v_head: field(10)?,
            risk: field(11)?,
        });
    }
    Ok(ParsedTrace { rows, outcome })
}

pub fn write_field_csv(field: &FieldGrid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FIELD_HEADER)?;
    for (a, b, v) in field.iter() {
        w.write_record([num(a), num(b), num(v)])?;
    }
    finish(w)
}
