//! The `wavelab` binary: outputs, exit codes and saved-run verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use wavelab::envelope::lower_envelope;
use wavelab_cli::commands::read_flux_table;
use wavelab_cli::output::{EVENTS_HEADER, SERIES_HEADER};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn wavelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavelab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn run_into(name: &str, dir: &Path) -> Output {
    wavelab(&["run", scenario(name).to_str().unwrap(), "--out", dir.to_str().unwrap()])
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_the_three_outputs() {
    let tmp = TempDir::new().unwrap();
    let o = run_into("two_shocks.scn", tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events = fs::read_to_string(tmp.path().join("events.csv")).unwrap();
    let mut lines = events.lines();
    assert_eq!(lines.next(), Some(EVENTS_HEADER));
    let merge: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(merge[2], "I");
    assert_eq!(merge[0].parse::<f64>().unwrap(), 4.0 / 3.0);
    assert_eq!(lines.next(), None);
    let series = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some(SERIES_HEADER));
    assert_eq!(series.lines().count(), 3);
    let r = report(tmp.path());
    assert_eq!(r["status"], "PASS");
    assert_eq!(r["scheme"], "Wft");
    assert_eq!(r["events"], 1);
    assert_eq!(r["failures"], 0);
}

#[test]
fn saved_runs_verify_and_tampering_is_caught() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run_into("rarefaction_cancellation.scn", tmp.path())), 0);
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(code(&wavelab(&["verify", dir])), 0);

    let path = tmp.path().join("events.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    fields[4] = "1000".into();
    lines[1] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&wavelab(&["verify", dir])), 2);

    fs::write(&path, "t,x\n").unwrap();
    assert_eq!(code(&wavelab(&["verify", dir])), 1);
}

#[test]
fn glimm_runs_verify() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run_into("glimm_burgers.scn", tmp.path())), 0);
    let r = report(tmp.path());
    assert_eq!(r["scheme"], "Glimm");
    assert_eq!(code(&wavelab(&["verify", tmp.path().to_str().unwrap()])), 0);
}

#[test]
fn scheme_override_switches_to_wavefront_tracking() {
    let tmp = TempDir::new().unwrap();
    let o = wavelab(&["run", scenario("glimm_burgers.scn").to_str().unwrap(), "--scheme", "wft", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(tmp.path())["scheme"], "Wft");
    let o = wavelab(&["run", scenario("two_shocks.scn").to_str().unwrap(), "--scheme", "glimm", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    assert_eq!(code(&wavelab(&[])), 1);
    assert_eq!(code(&wavelab(&["frobnicate"])), 1);
    assert_eq!(code(&wavelab(&["--help"])), 0);
    assert_eq!(code(&wavelab(&["run", "/nonexistent.scn"])), 1);
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.scn");
    fs::write(&bad, "[flux]\nkind = burgers\nstep = 0\n[datum]\nleft = 0\n").unwrap();
    let o = wavelab(&["run", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn envelope_matches_the_library() {
    let table = scenario("cubic_flux.csv");
    let o = wavelab(&["envelope", "--flux", table.to_str().unwrap(), "--a", "-1", "--b", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let f = read_flux_table(&fs::read_to_string(&table).unwrap()).unwrap();
    let env = lower_envelope(&f, 0, 8).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u_start,u_end,f_start,f_end,slope"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), env.runs.len());
    for (row, run) in rows.iter().zip(&env.runs) {
        assert_eq!(row[0], f.u(run.lo));
        assert_eq!(row[1], f.u(run.hi));
        assert_eq!(row[4], run.slope);
    }
    // The lower envelope of u³ on [-1, 1] is one chord up to the tangency
    // point near 1/2, then follows the samples.
    assert_eq!(rows[0][0], -1.0);
    assert_eq!(rows[0][1], 0.5);
    assert_eq!(rows[0][4], 0.75);
    assert_eq!(code(&wavelab(&["envelope", "--flux", table.to_str().unwrap(), "--a", "0.1", "--b", "1"])), 1);
}

#[test]
fn counterexample_and_sweep_write_reports() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(code(&wavelab(&["counterexample", "--q", "4", "--verify", "--out", dir])), 0);
    let r = report(tmp.path());
    assert_eq!(r["waves"], 1386);
    assert!(r["ratio"].as_f64().unwrap() > 1.0);
    assert_eq!(r["verification"]["status"], "PASS");

    let csv = tmp.path().join("sweep.csv");
    assert_eq!(code(&wavelab(&["sweep", "--q", "4", "--out", csv.to_str().unwrap()])), 0);
    let text = fs::read_to_string(csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert!(row[3].parse::<f64>().unwrap() >= 3.0, "{row:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for name in ["two_shocks.scn", "table_flux.scn", "glimm_uniform.scn"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(code(&run_into(name, a.path())), 0);
        assert_eq!(code(&run_into(name, b.path())), 0);
        for file in ["events.csv", "series.csv", "report.json"] {
            assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{name} {file}");
        }
    }
}
