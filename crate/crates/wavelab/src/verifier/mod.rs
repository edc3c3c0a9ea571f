//! Event by event checks of the interaction and cancellation bounds, with a
//! ledger of speed variations and the global totals.
//!
//! Every check compares a value with a bound and passes when
//! `bound - value >= -τ`, where `τ = 1e-9 ‖f''‖ TV₀²` scales with the size of
//! the global bound.

pub mod counterexample;
pub mod scan;
pub mod tree;

use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::Serialize;

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::error::Result;
use crate::glimm::{GlimmState, NodeKind, SamplingKind, SamplingSequence};
use crate::potentials::{q_bb, q_frak, q_gl, restricted_sum, Scheme, WaveSnapshot};
use crate::wft::{EventKind, WftSolver};

/// Constant of the global bound on the total speed variation.
pub const GLOBAL_CONSTANT: f64 = 3.0 + 2.0 * LN_2;
/// Constant of the bound on the interaction part.
pub const INTERACTION_CONSTANT: f64 = 2.0 * (1.0 + LN_2);
/// Relative tolerance, in units of `‖f''‖ TV₀²`.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// Name of the inequality.
    pub name: String,
    /// Left hand side.
    pub value: f64,
    /// Right hand side.
    pub bound: f64,
    /// `bound - value`.
    pub slack: f64,
    /// True when `slack >= -τ`.
    pub pass: bool,
}

impl Check {
    /// Checks `value <= bound + tau`.
    pub fn new(name: &str, value: f64, bound: f64, tau: f64) -> Self {
        let slack = bound - value;
        Self { name: name.to_string(), value, bound, slack, pass: slack >= -tau }
    }

    /// Checks that `value` is exactly zero.
    pub fn exact_zero(name: &str, value: f64) -> Self {
        Self { name: name.to_string(), value, bound: 0.0, slack: -value, pass: value == 0.0 }
    }
}

/// Constants entering the bounds of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    /// Second derivative bound `‖f''‖` over the range of the datum.
    pub k: f64,
    /// Total variation of the initial datum of the scheme.
    pub tv0: f64,
    /// Absolute tolerance `τ`.
    pub tau: f64,
}

impl Bounds {
    /// Bounds with the default tolerance.
    pub fn new(k: f64, tv0: f64) -> Self {
        Self { k, tv0, tau: RELATIVE_TOLERANCE * k * tv0 * tv0 }
    }
}

/// Speed variation bound at an interaction: `Σ |Δσ| |s| <= 2 (𝔔⁻ - 𝔔⁺)`.
pub fn check_interaction(b: &Bounds, variation: f64, q_before: f64, q_after: f64) -> Check {
    Check::new("interaction_decrease", variation, 2.0 * (q_before - q_after), b.tau)
}

/// Bounds at a cancellation removing `c`: the increase of `𝔔` is at most
/// `log 2 ‖f''‖ TV₀ c` and the speed variation at most `‖f''‖ TV₀ c`.
pub fn check_cancellation(b: &Bounds, variation: f64, q: Option<(f64, f64)>, c: f64) -> Vec<Check> {
    let mut out = vec![Check::new("cancellation_speed", variation, b.k * b.tv0 * c, b.tau)];
    if let Some((before, after)) = q {
        out.push(Check::new("cancellation_increase", after - before, LN_2 * b.k * b.tv0 * c, b.tau));
    }
    out
}

/// A node where waves arrive from one side only keeps every speed.
pub fn check_no_collision(variation: f64) -> Check {
    Check::exact_zero("no_collision", variation)
}

/// Kind of a ledger record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecordKind {
    /// Same sign collision.
    Interaction,
    /// Opposite sign collision.
    Cancellation,
    /// Glimm node reached from one side only.
    NoCollision,
}

impl RecordKind {
    /// One letter code used in event logs.
    pub fn letter(self) -> char {
        match self {
            RecordKind::Interaction => 'I',
            RecordKind::Cancellation => 'C',
            RecordKind::NoCollision => 'N',
        }
    }

    /// Parses a one letter code.
    pub fn from_letter(c: &str) -> Option<Self> {
        match c {
            "I" => Some(RecordKind::Interaction),
            "C" => Some(RecordKind::Cancellation),
            "N" => Some(RecordKind::NoCollision),
            _ => None,
        }
    }
}

/// One ledger line: a wavefront tracking event or a Glimm node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    /// Event time.
    pub t: f64,
    /// Event position.
    pub x: f64,
    /// Classification.
    pub kind: RecordKind,
    /// Total variation removed.
    pub cancellation: f64,
    /// Speed variation of the surviving waves.
    pub speed_variation: f64,
    /// Potential before: `𝔔⁻` for wavefront tracking; for a Glimm
    /// interaction node the sum of the weights over its `ℒ × ℛ` at time `n`,
    /// otherwise `𝔔` at time `n`.
    pub qfrak_before: Option<f64>,
    /// Potential after, in the same convention.
    pub qfrak_after: Option<f64>,
    /// `Q^BB` before.
    pub qbb_before: f64,
    /// `Q^BB` after.
    pub qbb_after: f64,
    /// Three or more fronts met at the same point.
    pub composite: bool,
    /// Checks performed on this record.
    pub checks: Vec<Check>,
}

/// Functionals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    /// Time.
    pub t: f64,
    /// Total variation.
    pub tv: f64,
    /// `Q^GL`.
    pub qgl: f64,
    /// `Q^BB`.
    pub qbb: f64,
    /// `𝔔`, when evaluated.
    pub qfrak: Option<f64>,
}

/// Records of a run with running totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Ledger {
    /// One record per event or node.
    pub records: Vec<EventRecord>,
    /// Functionals after every event or step.
    pub series: Vec<SeriesPoint>,
    /// Checks attached to whole Glimm steps.
    pub step_checks: Vec<Check>,
    /// Speed variation at interactions.
    pub interaction_total: f64,
    /// Speed variation at cancellations.
    pub cancellation_total: f64,
    /// Total amount of cancellation.
    pub cancellation_amount: f64,
}

impl Ledger {
    /// Appends a record and updates the totals.
    pub fn push(&mut self, r: EventRecord) {
        match r.kind {
            RecordKind::Cancellation => self.cancellation_total += r.speed_variation,
            _ => self.interaction_total += r.speed_variation,
        }
        self.cancellation_amount += r.cancellation;
        self.records.push(r);
    }

    /// All checks, per record and per step.
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.records.iter().flat_map(|r| r.checks.iter()).chain(self.step_checks.iter())
    }

    /// Number of failed checks.
    pub fn failures(&self) -> usize {
        self.checks().filter(|c| !c.pass).count()
    }
}

/// Global bounds on the ledger totals.
pub fn check_global(ledger: &Ledger, b: &Bounds) -> Vec<Check> {
    let scale = b.k * b.tv0 * b.tv0;
    let mut out = vec![
        Check::new(
            "total_speed_variation",
            ledger.interaction_total + ledger.cancellation_total,
            GLOBAL_CONSTANT * scale,
            b.tau,
        ),
        Check::new("cancellation_part", ledger.cancellation_total, scale, b.tau),
        Check::new("interaction_part", ledger.interaction_total, INTERACTION_CONSTANT * scale, b.tau),
    ];
    let worst = ledger
        .series
        .iter()
        .map(|p| (p.qbb, b.k * p.tv.powi(3)))
        .min_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)));
    if let Some((value, bound)) = worst {
        out.push(Check::new("qbb_cubic", value, bound, b.tau));
    }
    if let Some(q0) = ledger.series.first().and_then(|p| p.qfrak) {
        out.push(Check::new("qfrak_initial", q0, scale, b.tau));
    }
    out
}

/// Options of a verified run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Evaluate `𝔔` and run the checks that need it.
    pub qfrak: bool,
    /// Stop wavefront tracking after this many events.
    pub max_events: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { qfrak: true, max_events: 1_000_000 }
    }
}

/// Parameters of a Glimm run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlimmConfig {
    /// Grid step in space and time.
    pub eps_x: f64,
    /// Number of time steps.
    pub steps: usize,
    /// Sampling rule.
    pub sampling: SamplingKind,
}

/// Outcome of a verified run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Producing scheme.
    pub scheme: Scheme,
    /// Constants of the bounds.
    pub bounds: Bounds,
    /// Number of waves of the initial datum.
    pub waves: usize,
    /// Number of events (wavefront tracking) or node records (Glimm).
    pub events: usize,
    /// Events where three or more fronts met.
    pub composite_events: usize,
    /// False when the run stopped at the event limit.
    pub complete: bool,
    /// Ledger.
    pub ledger: Ledger,
    /// Global checks.
    pub global: Vec<Check>,
}

impl Report {
    /// Number of failed checks, local and global.
    pub fn failures(&self) -> usize {
        self.ledger.failures() + self.global.iter().filter(|c| !c.pass).count()
    }

    /// True when every check passed.
    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Second derivative bound of the flux over the range of a datum.
pub fn flux_bound(flux: &PiecewiseAffineFn, datum: &StepDatum) -> f64 {
    let (lo, hi) = datum.range();
    if hi - lo < 2 {
        0.0
    } else {
        flux.second_derivative_bound_on(lo, hi)
    }
}

fn wft_fronts(solver: &WftSolver) -> Vec<(f64, f64)> {
    let step = solver.flux().step();
    solver.fronts().iter().map(|f| (f.cells() as f64 * step, f.speed)).collect()
}

fn series_point(t: f64, tv: f64, fronts: &[(f64, f64)], qfrak: Option<f64>) -> SeriesPoint {
    SeriesPoint { t, tv, qgl: q_gl(fronts), qbb: q_bb(fronts), qfrak }
}

/// Runs wavefront tracking and checks every event.
pub fn run_wft(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, opts: &VerifyOptions) -> Result<Report> {
    let mut solver = WftSolver::init(datum, Arc::clone(&flux))?;
    let b = Bounds::new(flux_bound(&flux, datum), solver.total_variation());
    let eval_q = |s: &WftSolver| opts.qfrak.then(|| q_frak(&WaveSnapshot::from_wft(s, b.k), None));
    let mut ledger = Ledger::default();
    let mut q = eval_q(&solver);
    ledger.series.push(series_point(0.0, solver.total_variation(), &wft_fronts(&solver), q));
    let mut composite = 0;
    let mut complete = true;
    loop {
        if solver.event_count() >= opts.max_events {
            complete = solver.next_event().is_none();
            break;
        }
        let Some(ev) = solver.step()? else { break };
        let fronts_after = wft_fronts(&solver);
        let q_after = eval_q(&solver);
        let point = series_point(ev.t, solver.total_variation(), &fronts_after, q_after);
        let kind = match ev.kind {
            EventKind::Interaction => RecordKind::Interaction,
            EventKind::Cancellation => RecordKind::Cancellation,
        };
        let qpair = q.zip(q_after);
        let checks = match kind {
            RecordKind::Interaction => qpair.map(|(a, c)| check_interaction(&b, ev.speed_variation, a, c)).into_iter().collect(),
            _ => check_cancellation(&b, ev.speed_variation, qpair, ev.cancellation),
        };
        composite += ev.composite as usize;
        ledger.push(EventRecord {
            t: ev.t,
            x: ev.x,
            kind,
            cancellation: ev.cancellation,
            speed_variation: ev.speed_variation,
            qfrak_before: q,
            qfrak_after: q_after,
            qbb_before: ledger.series.last().map_or(0.0, |p| p.qbb),
            qbb_after: point.qbb,
            composite: ev.composite,
            checks,
        });
        ledger.series.push(point);
        q = q_after;
    }
    let global = check_global(&ledger, &b);
    Ok(Report {
        scheme: Scheme::Wft,
        bounds: b,
        waves: solver.waves().len(),
        events: ledger.records.len(),
        composite_events: composite,
        complete,
        ledger,
        global,
    })
}

/// Runs the Glimm scheme and checks every node and every step.
pub fn run_glimm(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, cfg: &GlimmConfig, opts: &VerifyOptions) -> Result<Report> {
    let mut state = GlimmState::init(datum, Arc::clone(&flux), cfg.eps_x)?;
    let mut seq = SamplingSequence::new(cfg.sampling.clone())?;
    let b = Bounds::new(flux_bound(&flux, datum), state.total_variation());
    let mut ledger = Ledger::default();
    let mut snap = opts.qfrak.then(|| state.snapshot(b.k));
    let mut q = snap.as_ref().map(|s| q_frak(s, None));
    let fronts = state.fronts();
    ledger.series.push(series_point(0.0, state.total_variation(), &fronts, q));
    for _ in 0..cfg.steps {
        let tv_before = state.total_variation();
        let qbb_before = ledger.series.last().map_or(0.0, |p| p.qbb);
        let nodes = state.step(seq.next_theta())?;
        let t = state.time_level() as f64 * cfg.eps_x;
        let fronts = state.fronts();
        let snap_after = opts.qfrak.then(|| state.snapshot(b.k));
        let q_after = snap_after.as_ref().map(|s| q_frak(s, None));
        let point = series_point(t, state.total_variation(), &fronts, q_after);
        let q_on_d = snap.as_ref().map(|s| q_frak(s, Some(state.alive_mask())));
        let mut di = (0.0, 0.0);
        for node in &nodes {
            let kind = match node.kind {
                NodeKind::Interaction => RecordKind::Interaction,
                NodeKind::Cancellation => RecordKind::Cancellation,
                NodeKind::NoCollision => RecordKind::NoCollision,
            };
            let (mut qb, mut qa) = (q, q_after);
            let mut checks = Vec::new();
            match kind {
                RecordKind::Interaction => {
                    if let (Some(s0), Some(s1)) = (&snap, &snap_after) {
                        let lr0 = restricted_sum(s0, &node.changed_left, &node.changed_right);
                        let lr1 = restricted_sum(s1, &node.changed_left, &node.changed_right);
                        di.0 += lr0;
                        di.1 += lr1;
                        checks.push(check_interaction(&b, node.speed_variation, lr0, lr1));
                        (qb, qa) = (Some(lr0), Some(lr1));
                    }
                }
                RecordKind::Cancellation => checks.extend(check_cancellation(&b, node.speed_variation, None, node.cancellation)),
                RecordKind::NoCollision => checks.push(check_no_collision(node.speed_variation)),
            }
            ledger.push(EventRecord {
                t,
                x: node.m as f64 * cfg.eps_x,
                kind,
                cancellation: node.cancellation,
                speed_variation: node.speed_variation,
                qfrak_before: qb,
                qfrak_after: qa,
                qbb_before,
                qbb_after: point.qbb,
                composite: false,
                checks,
            });
        }
        if let (Some(q0), Some(q1)) = (q_on_d, q_after) {
            let increase = (q1 - di.1) - (q0 - di.0);
            let c = tv_before - state.total_variation();
            ledger.step_checks.push(Check::new("glimm_increase", increase, LN_2 * b.k * b.tv0 * c, b.tau));
        }
        ledger.series.push(point);
        snap = snap_after;
        q = q_after;
    }
    let global = check_global(&ledger, &b);
    Ok(Report {
        scheme: Scheme::Glimm,
        bounds: b,
        waves: state.wave_count(),
        events: ledger.records.len(),
        composite_events: 0,
        complete: true,
        ledger,
        global,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_passes_within_tolerance() {
        assert!(Check::new("a", 1.0 + 1e-12, 1.0, 1e-9).pass);
        assert!(!Check::new("a", 1.0 + 1e-6, 1.0, 1e-9).pass);
        assert!(Check::exact_zero("z", 0.0).pass);
        assert!(!Check::exact_zero("z", 1e-300).pass);
    }

    #[test]
    fn tolerance_scales_with_the_bound() {
        let b = Bounds::new(2.0, 3.0);
        assert_eq!(b.tau, 1e-9 * 18.0);
    }
}
