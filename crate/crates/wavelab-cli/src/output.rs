//! Event logs, functional series and reports.
//!
//! Numbers are written in their shortest round-trip decimal form, so equal
//! runs give byte-identical files.

use std::fmt::Write as _;

use serde_json::{json, Value};
use wavelab::verifier::{Check, EventRecord, Ledger, RecordKind, Report, SeriesPoint};

use crate::error::{CliError, Result};
use crate::number::format_f64;

/// Header of `events.csv`.
pub const EVENTS_HEADER: &str = "t,x,kind,cancellation,speed_variation,qfrak_before,qfrak_after,qbb_before,qbb_after";
/// Header of `series.csv`.
pub const SERIES_HEADER: &str = "t,TV,QGL,QBB,QFRAK";

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Text of `events.csv`: one line per ledger record.
pub fn events_csv(ledger: &Ledger) -> String {
    let mut out = format!("{EVENTS_HEADER}\n");
    for r in &ledger.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            format_f64(r.t),
            format_f64(r.x),
            r.kind.letter(),
            format_f64(r.cancellation),
            format_f64(r.speed_variation),
            opt(r.qfrak_before),
            opt(r.qfrak_after),
            format_f64(r.qbb_before),
            format_f64(r.qbb_after),
        );
    }
    out
}

/// Text of `series.csv`: the functionals after every event or time step.
pub fn series_csv(ledger: &Ledger) -> String {
    let mut out = format!("{SERIES_HEADER}\n");
    for p in &ledger.series {
        let _ = writeln!(out, "{},{},{},{},{}", format_f64(p.t), format_f64(p.tv), format_f64(p.qgl), format_f64(p.qbb), opt(p.qfrak));
    }
    out
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn check_json(c: &Check) -> Value {
    json!({ "name": c.name, "value": c.value, "bound": c.bound, "slack": c.slack, "status": status(c.pass) })
}

/// Largest number of failed checks listed in a report.
pub const LISTED_FAILURES: usize = 50;

/// Machine-readable summary of a verified run.
pub fn report_json(r: &Report) -> Value {
    let l = &r.ledger;
    let mut failed: Vec<Value> = Vec::new();
    for (i, rec) in l.records.iter().enumerate() {
        for c in rec.checks.iter().filter(|c| !c.pass) {
            let mut v = check_json(c);
            v["record"] = json!(i);
            failed.push(v);
        }
    }
    failed.extend(l.step_checks.iter().filter(|c| !c.pass).map(check_json));
    let n_failed = failed.len() + r.global.iter().filter(|c| !c.pass).count();
    failed.truncate(LISTED_FAILURES);
    json!({
        "status": status(r.passed()),
        "scheme": format!("{:?}", r.scheme),
        "waves": r.waves,
        "events": r.events,
        "composite_events": r.composite_events,
        "complete": r.complete,
        "bounds": { "k": r.bounds.k, "tv0": r.bounds.tv0, "tau": r.bounds.tau },
        "totals": {
            "interaction": l.interaction_total,
            "cancellation": l.cancellation_total,
            "speed_variation": l.interaction_total + l.cancellation_total,
            "cancellation_amount": l.cancellation_amount,
        },
        "checks": l.checks().count() + r.global.len(),
        "failures": n_failed,
        "global": r.global.iter().map(check_json).collect::<Vec<_>>(),
        "failed_checks": failed,
    })
}

/// Pretty JSON text with a trailing newline.
pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn rows<'a>(text: &'a str, header: &str, what: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(CliError::Input(format!("{what}: expected header '{header}'"))),
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CliError::Input(format!("{what} line {}: expected {width} fields", i + 1)));
        }
        out.push((i + 1, fields));
    }
    Ok(out.into_iter())
}

fn num(s: &str, what: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| CliError::Input(format!("{what} line {line}: '{s}' is not a number")))
}

fn opt_num(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        num(s, what, line).map(Some)
    }
}

/// Reads `events.csv` back into records without checks.
pub fn parse_events(text: &str) -> Result<Vec<EventRecord>> {
    let what = "events.csv";
    rows(text, EVENTS_HEADER, what)?
        .map(|(n, f)| {
            Ok(EventRecord {
                t: num(f[0], what, n)?,
                x: num(f[1], what, n)?,
                kind: RecordKind::from_letter(f[2])
                    .ok_or_else(|| CliError::Input(format!("{what} line {n}: unknown kind '{}'", f[2])))?,
                cancellation: num(f[3], what, n)?,
                speed_variation: num(f[4], what, n)?,
                qfrak_before: opt_num(f[5], what, n)?,
                qfrak_after: opt_num(f[6], what, n)?,
                qbb_before: num(f[7], what, n)?,
                qbb_after: num(f[8], what, n)?,
                composite: false,
                checks: Vec::new(),
            })
        })
        .collect()
}

/// Reads `series.csv` back.
pub fn parse_series(text: &str) -> Result<Vec<SeriesPoint>> {
    let what = "series.csv";
    rows(text, SERIES_HEADER, what)?
        .map(|(n, f)| {
            Ok(SeriesPoint {
                t: num(f[0], what, n)?,
                tv: num(f[1], what, n)?,
                qgl: num(f[2], what, n)?,
                qbb: num(f[3], what, n)?,
                qfrak: opt_num(f[4], what, n)?,
            })
        })
        .collect()
}
