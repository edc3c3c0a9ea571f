//! Exhaustive pair scans on small runs.
//!
//! Two live waves are joined when they share position and speed. For every
//! pair `s < s'` that has already interacted, the Riemann problem of the
//! history interval `ℐ(s, s')` must keep `s, s'` in one envelope run when
//! they are joined, and when they are divided it must put every divided pair
//! `p < p'` of `ℐ(s, s')` in different runs. A second scan checks that the
//! weight of a pair of waves not taking part in an event is unchanged by it.

use std::sync::Arc;

use serde::Serialize;

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::error::Result;
use crate::glimm::{GlimmState, NodeKind, SamplingSequence};
use crate::potentials::{pair_mass, WaveSnapshot};
use crate::verifier::{flux_bound, GlimmConfig};
use crate::wft::{WaveId, WftSolver};

/// Counts of a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScanSummary {
    /// Snapshots scanned.
    pub snapshots: usize,
    /// Interacted pairs examined.
    pub pairs: usize,
    /// History intervals that are not homogeneous.
    pub homogeneity_violations: usize,
    /// Joined pairs divided by their history Riemann problem.
    pub joined_violations: usize,
    /// Divided pairs of a history interval that its Riemann problem joins.
    pub divided_violations: usize,
}

impl ScanSummary {
    /// Total number of violations.
    pub fn violations(&self) -> usize {
        self.homogeneity_violations + self.joined_violations + self.divided_violations
    }

    fn add(&mut self, o: ScanSummary) {
        self.snapshots += o.snapshots;
        self.pairs += o.pairs;
        self.homogeneity_violations += o.homogeneity_violations;
        self.joined_violations += o.joined_violations;
        self.divided_violations += o.divided_violations;
    }
}

/// Scans every interacted pair of one snapshot.
pub fn separation_scan(snap: &WaveSnapshot) -> ScanSummary {
    let live: Vec<WaveId> = (1..=snap.n_waves() as WaveId).filter(|&s| snap.is_alive(s)).collect();
    let mut out = ScanSummary { snapshots: 1, ..Default::default() };
    for (i, &s) in live.iter().enumerate() {
        for &s2 in &live[i + 1..] {
            if !snap.interacted(s, s2) {
                continue;
            }
            out.pairs += 1;
            let (lo, hi) = (snap.hist(s2).0, snap.hist(s).1);
            if !snap.is_homogeneous(lo, hi) {
                out.homogeneity_violations += 1;
                continue;
            }
            let env = snap.history_envelope(lo, hi).expect("interacted pair has a history");
            let run = |p: WaveId| env.cell_run(snap.cell(p)).0;
            if snap.joined(s, s2) {
                out.joined_violations += (run(s) != run(s2)) as usize;
                continue;
            }
            let inside: Vec<WaveId> = live.iter().copied().filter(|&p| p >= lo && p <= hi).collect();
            for (k, &p) in inside.iter().enumerate() {
                for &p2 in &inside[k + 1..] {
                    if !snap.joined(p, p2) && run(p) == run(p2) {
                        out.divided_violations += 1;
                    }
                }
            }
        }
    }
    out
}

/// Separation scan after every wavefront tracking event.
pub fn scan_wft(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, max_events: usize) -> Result<ScanSummary> {
    let mut solver = WftSolver::init(datum, Arc::clone(&flux))?;
    let k = flux_bound(&flux, datum);
    let mut out = separation_scan(&WaveSnapshot::from_wft(&solver, k));
    while solver.event_count() < max_events && solver.step()?.is_some() {
        out.add(separation_scan(&WaveSnapshot::from_wft(&solver, k)));
    }
    Ok(out)
}

/// Separation scan after every Glimm step.
pub fn scan_glimm(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, cfg: &GlimmConfig) -> Result<ScanSummary> {
    let mut state = GlimmState::init(datum, Arc::clone(&flux), cfg.eps_x)?;
    let mut seq = SamplingSequence::new(cfg.sampling.clone())?;
    let k = flux_bound(&flux, datum);
    let mut out = separation_scan(&state.snapshot(k));
    for _ in 0..cfg.steps {
        state.step(seq.next_theta())?;
        out.add(separation_scan(&state.snapshot(k)));
    }
    Ok(out)
}

/// Counts of the uninvolved pair scan: `(pairs compared, pairs whose weight changed)`.
pub type StabilityCount = (usize, usize);

fn compare_pairs(before: &WaveSnapshot, after: &WaveSnapshot, free: &[WaveId]) -> Result<StabilityCount> {
    let mut out = (0, 0);
    for (i, &s) in free.iter().enumerate() {
        for &s2 in &free[i + 1..] {
            out.0 += 1;
            if pair_mass(before, s, s2)? != pair_mass(after, s, s2)? {
                out.1 += 1;
            }
        }
    }
    Ok(out)
}

/// Compares the weights of pairs of waves outside every event of a
/// wavefront tracking run.
pub fn uninvolved_scan_wft(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, max_events: usize) -> Result<StabilityCount> {
    let mut solver = WftSolver::init(datum, Arc::clone(&flux))?;
    let k = flux_bound(&flux, datum);
    let mut before = WaveSnapshot::from_wft(&solver, k);
    let mut out = (0, 0);
    while solver.event_count() < max_events {
        let Some(ev) = solver.step()? else { break };
        let after = WaveSnapshot::from_wft(&solver, k);
        let mut involved = vec![false; solver.waves().len()];
        for &(a, b) in ev.incoming_ids.iter().flatten() {
            for id in a..=b {
                involved[id as usize - 1] = true;
            }
        }
        let free: Vec<WaveId> =
            (1..=solver.waves().len() as WaveId).filter(|&s| after.is_alive(s) && !involved[s as usize - 1]).collect();
        let c = compare_pairs(&before, &after, &free)?;
        out = (out.0 + c.0, out.1 + c.1);
        before = after;
    }
    Ok(out)
}

/// Compares the weights of pairs of waves sitting at no-collision nodes
/// across every Glimm step.
pub fn uninvolved_scan_glimm(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, cfg: &GlimmConfig) -> Result<StabilityCount> {
    let mut state = GlimmState::init(datum, Arc::clone(&flux), cfg.eps_x)?;
    let mut seq = SamplingSequence::new(cfg.sampling.clone())?;
    let k = flux_bound(&flux, datum);
    let mut before = state.snapshot(k);
    let mut out = (0, 0);
    for _ in 0..cfg.steps {
        let nodes = state.step(seq.next_theta())?;
        let after = state.snapshot(k);
        let mut free: Vec<WaveId> = Vec::new();
        for node in nodes.iter().filter(|n| n.kind == NodeKind::NoCollision) {
            free.extend(node.left_in.iter().chain(&node.right_in).filter(|&&s| after.is_alive(s)));
        }
        free.sort_unstable();
        let c = compare_pairs(&before, &after, &free)?;
        out = (out.0 + c.0, out.1 + c.1);
        before = after;
    }
    Ok(out)
}
