//! The subcommands. Each returns whether every check passed; errors are
//! usage or input errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use wavelab::envelope::{lower_envelope, upper_envelope, PiecewiseAffineFn};
use wavelab::verifier::counterexample::{counterexample, sweep, CounterexampleParams, CounterexampleReport};
use wavelab::verifier::{
    check_cancellation, check_global, check_interaction, check_no_collision, run_glimm, run_wft, Bounds, Ledger,
    RecordKind, Report,
};

use crate::error::{io, CliError, Result};
use crate::number::format_f64;
use crate::output::{events_csv, json_text, parse_events, parse_series, report_json, series_csv};
use crate::scenario::{parse_scenario, SchemeSpec};

/// Scheme requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    /// Wavefront tracking.
    Wft,
    /// Glimm scheme.
    Glimm,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io(path))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))
}

/// Runs a scenario and writes `events.csv`, `series.csv` and `report.json`.
pub fn run(scenario: &Path, scheme: Option<SchemeChoice>, out: Option<&Path>) -> Result<bool> {
    let text = read(scenario)?;
    let mut s = parse_scenario(&text).map_err(|e| match e {
        CliError::Parse { line, col, msg } => CliError::Input(format!("{}:{line}:{col}: {msg}", scenario.display())),
        e => e,
    })?;
    match (scheme, &s.scheme) {
        (Some(SchemeChoice::Glimm), SchemeSpec::Wft { .. }) => {
            return Err(CliError::Scenario("the scenario has no Glimm parameters (eps_x, steps)".into()));
        }
        (Some(SchemeChoice::Wft), SchemeSpec::Glimm { .. }) => s.scheme = SchemeSpec::Wft { max_events: None },
        _ => {}
    }
    let problem = s.problem()?;
    let opts = s.verify_options();
    let report = match s.glimm_config() {
        Some(cfg) => run_glimm(&problem.datum, problem.flux, &cfg, &opts),
        None => run_wft(&problem.datum, problem.flux, &opts),
    }
    .map_err(|e| CliError::Scenario(e.to_string()))?;
    let dir = out.map(Path::to_path_buf).or_else(|| s.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&dir)?;
    write(&dir.join("events.csv"), &events_csv(&report.ledger))?;
    write(&dir.join("series.csv"), &series_csv(&report.ledger))?;
    write(&dir.join("report.json"), &json_text(&report_json(&report)))?;
    print_summary(&report, &dir);
    Ok(report.passed())
}

fn print_summary(r: &Report, dir: &Path) {
    println!("{:?}: {} waves, {} records, wrote {}", r.scheme, r.waves, r.events, dir.display());
    for c in &r.global {
        println!("  {:<22} {} value {} bound {} slack {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.bound, c.slack);
    }
    println!("{} of {} checks failed", r.failures(), r.ledger.checks().count() + r.global.len());
}

fn field(v: &Value, path: &[&str]) -> Result<f64> {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().ok_or_else(|| CliError::Input(format!("report.json: missing number '{}'", path.join("."))))
}

/// Re-checks a saved run from its `report.json`, `events.csv` and `series.csv`.
pub fn verify(dir: &Path) -> Result<bool> {
    let report: Value = serde_json::from_str(&read(&dir.join("report.json"))?)
        .map_err(|e| CliError::Input(format!("report.json: {e}")))?;
    let b = Bounds { k: field(&report, &["bounds", "k"])?, tv0: field(&report, &["bounds", "tv0"])?, tau: field(&report, &["bounds", "tau"])? };
    let glimm = report["scheme"].as_str() == Some("Glimm");
    let mut ledger = Ledger::default();
    for mut r in parse_events(&read(&dir.join("events.csv"))?)? {
        let qpair = r.qfrak_before.zip(r.qfrak_after);
        r.checks = match r.kind {
            RecordKind::Interaction => qpair.map(|(a, c)| check_interaction(&b, r.speed_variation, a, c)).into_iter().collect(),
            RecordKind::Cancellation => check_cancellation(&b, r.speed_variation, qpair.filter(|_| !glimm), r.cancellation),
            RecordKind::NoCollision => vec![check_no_collision(r.speed_variation)],
        };
        ledger.push(r);
    }
    ledger.series = parse_series(&read(&dir.join("series.csv"))?)?;
    let global = check_global(&ledger, &b);
    let failed = ledger.failures() + global.iter().filter(|c| !c.pass).count();
    for c in &global {
        println!("  {:<22} {} value {} bound {} slack {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.bound, c.slack);
    }
    println!("{} records re-checked, {failed} of {} checks failed", ledger.records.len(), ledger.checks().count() + global.len());
    if let Some(saved) = report["failures"].as_u64() {
        if glimm && saved as usize != failed {
            println!("note: the saved report also holds per-step Glimm checks, which the log does not carry");
        }
    }
    Ok(failed == 0)
}

fn counterexample_json(r: &CounterexampleReport) -> Value {
    let mut v = serde_json::to_value(r).expect("reports serialize");
    if let Some(rep) = &r.verification {
        v["verification"] = report_json(rep);
    }
    v
}

/// Runs the splitting construction and writes `report.json` into `out`.
pub fn run_counterexample(p: &CounterexampleParams, out: &Path) -> Result<bool> {
    let r = counterexample(p)?;
    create_dir(out)?;
    write(&out.join("report.json"), &json_text(&counterexample_json(&r)))?;
    println!("grid step {}, {} waves, {} events up to the splitting", r.grid_step, r.waves, r.events);
    for c in r.shock_speeds.iter().chain(std::iter::once(&r.merged_speed)) {
        println!("  {:<10} exact {} rounded {} measured {} rel err {}", c.name, c.exact, c.snapped, c.measured, c.rel_err_snapped);
    }
    println!("  triangle area {} (closed form {})", r.triangle_area_exact, r.triangle_area_formula);
    println!("  speed change of the first front {} (closed form {})", r.speed_change_w1, r.speed_change_formula);
    println!("  ratio {}", r.ratio);
    let pass = r.verification.as_ref().is_none_or(Report::passed);
    if let Some(v) = &r.verification {
        println!("  verified run: {} of {} checks failed", v.failures(), v.ledger.checks().count() + v.global.len());
    }
    Ok(pass)
}

/// Reads a flux table with one `u,f` pair per line on a uniform grid.
/// A first line that does not start with a number is taken as a header.
pub fn read_flux_table(text: &str) -> Result<PiecewiseAffineFn> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Option<(f64, f64)> =
            line.split_once(',').and_then(|(u, f)| Some((u.trim().parse().ok()?, f.trim().parse().ok()?)));
        match parsed {
            Some(p) => pts.push(p),
            None if pts.is_empty() && i == 0 => continue,
            None => return Err(CliError::Input(format!("flux table line {}: expected 'u,f'", i + 1))),
        }
    }
    if pts.len() < 2 {
        return Err(CliError::Input("flux table needs at least two rows".into()));
    }
    let (u0, step) = (pts[0].0, pts[1].0 - pts[0].0);
    for (k, p) in pts.iter().enumerate() {
        if (p.0 - (u0 + k as f64 * step)).abs() > 1e-9 * step.abs() {
            return Err(CliError::Input(format!("flux table row {}: states must be uniformly spaced and increasing", k + 1)));
        }
    }
    Ok(PiecewiseAffineFn::new(u0, step, 0, pts.iter().map(|p| p.1).collect())?)
}

fn index_of(f: &PiecewiseAffineFn, u: f64) -> Result<i64> {
    let m = ((u - f.origin()) / f.step()).round();
    if ((f.origin() + m * f.step()) - u).abs() > 1e-9 * f.step() || !f.contains(m as i64) {
        return Err(CliError::Input(format!("{u} is not a state of the flux table")));
    }
    Ok(m as i64)
}

/// Convex (or concave with `upper`) envelope of a flux table on `[a, b]`, as
/// one CSV line per affine run.
pub fn envelope_csv(f: &PiecewiseAffineFn, a: f64, b: f64, upper: bool) -> Result<String> {
    let (ia, ib) = (index_of(f, a)?, index_of(f, b)?);
    if ia >= ib {
        return Err(CliError::Input("need a < b".into()));
    }
    let env = if upper { upper_envelope(f, ia, ib)? } else { lower_envelope(f, ia, ib)? };
    let mut out = String::from("u_start,u_end,f_start,f_end,slope\n");
    for r in &env.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_f64(f.u(r.lo)),
            format_f64(f.u(r.hi)),
            format_f64(env.value(r.lo)),
            format_f64(env.value(r.hi)),
            format_f64(r.slope)
        );
    }
    Ok(out)
}

/// Writes `text` to `out`, or to standard output.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Ratio study over `L` with `ε = L³`, one CSV line per `L`.
pub fn sweep_csv(alpha: f64, ls: &[f64], q: u32) -> Result<String> {
    let reports = sweep(alpha, ls, q)?;
    let mut out = String::from("L,eps,ratio,factor,speed_change_w1,qbb_decrease,cancellation\n");
    for (i, r) in reports.iter().enumerate() {
        let factor = if i > 0 { format_f64(r.ratio / reports[i - 1].ratio) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_f64(r.params.l),
            format_f64(r.params.eps),
            format_f64(r.ratio),
            factor,
            format_f64(r.speed_change_w1),
            format_f64(r.qbb_decrease),
            format_f64(r.cancellation)
        );
    }
    Ok(out)
}
