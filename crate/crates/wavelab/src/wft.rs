//! Event driven wavefront tracking with a fixed enumeration of waves.
//!
//! Waves are the grid cells crossed by the initial jumps, numbered `1..=N` in
//! the order of the total variation function. A wave keeps its state `û` and
//! its sign for ever; its position and speed are those of the front carrying
//! it. Fronts move at constant speed between events, and every collision is
//! resolved by one Riemann problem at the collision point.
//!
//! Every wave keeps a history pair `(L, R)`: the smallest and largest wave
//! ever located at the same point as it. Along the waves of one front both
//! ends are nondecreasing.

use std::sync::Arc;

use serde::Serialize;

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::error::{Error, Result};
use crate::riemann::{solve, wave_cell};

/// Wave label.
pub type WaveId = u32;

/// Immutable per wave data plus the removal flag.
#[derive(Debug, Clone)]
pub struct WaveTable {
    uhat: Vec<i64>,
    sign: Vec<i8>,
    alive: Vec<bool>,
    initial_x: Vec<f64>,
    hist: Vec<(WaveId, WaveId)>,
}

impl WaveTable {
    /// Number of waves ever created.
    pub fn len(&self) -> usize {
        self.uhat.len()
    }

    /// True when there are no waves at all.
    pub fn is_empty(&self) -> bool {
        self.uhat.is_empty()
    }

    /// State index `û(s)`.
    pub fn uhat(&self, s: WaveId) -> i64 {
        self.uhat[s as usize - 1]
    }

    /// Sign of the wave.
    pub fn sign(&self, s: WaveId) -> i8 {
        self.sign[s as usize - 1]
    }

    /// False once the wave has been cancelled.
    pub fn is_alive(&self, s: WaveId) -> bool {
        self.alive[s as usize - 1]
    }

    /// Position of the wave at time zero.
    pub fn initial_position(&self, s: WaveId) -> f64 {
        self.initial_x[s as usize - 1]
    }

    /// History pair `(L, R)` of the wave.
    pub fn hist(&self, s: WaveId) -> (WaveId, WaveId) {
        self.hist[s as usize - 1]
    }

    /// Grid cell occupied by the wave, named by its right endpoint.
    pub fn cell(&self, s: WaveId) -> i64 {
        wave_cell(self.uhat(s), self.sign(s))
    }

    /// Number of waves still alive.
    pub fn live_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }
}

/// A discontinuity of the approximate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Front {
    /// Unique label, never reused.
    pub label: usize,
    /// Index of the event that created the front, `None` at time zero.
    pub born: Option<usize>,
    /// Creation time.
    pub t0: f64,
    /// Creation position.
    pub x0: f64,
    /// Left state index.
    pub left: i64,
    /// Right state index.
    pub right: i64,
    /// Speed.
    pub speed: f64,
    /// Live wave ids carried by the front, as increasing inclusive ranges.
    pub runs: Vec<(WaveId, WaveId)>,
}

impl Front {
    /// Position at time `t`.
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    /// Sign of the jump.
    pub fn sign(&self) -> i8 {
        if self.right > self.left {
            1
        } else {
            -1
        }
    }

    /// Number of waves carried.
    pub fn cells(&self) -> i64 {
        (self.right - self.left).abs()
    }

    /// Smaller and larger state.
    pub fn span(&self) -> (i64, i64) {
        (self.left.min(self.right), self.left.max(self.right))
    }

    /// Wave ids in increasing order.
    pub fn ids(&self) -> impl Iterator<Item = WaveId> + '_ {
        self.runs.iter().flat_map(|&(a, b)| a..=b)
    }

    /// Smallest wave id.
    pub fn first_id(&self) -> WaveId {
        self.runs[0].0
    }

    /// Largest wave id.
    pub fn last_id(&self) -> WaveId {
        self.runs[self.runs.len() - 1].1
    }

    /// Cell of the first wave; the k-th wave sits in `first_cell + sign * k`.
    pub fn first_cell(&self) -> i64 {
        wave_cell(self.left + self.sign() as i64, self.sign())
    }

    fn record(&self) -> FrontRecord {
        FrontRecord { label: self.label, left: self.left, right: self.right, speed: self.speed }
    }
}

/// Summary of a front taking part in an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontRecord {
    /// Front label.
    pub label: usize,
    /// Left state index.
    pub left: i64,
    /// Right state index.
    pub right: i64,
    /// Speed.
    pub speed: f64,
}

/// Classification of a collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// All colliding fronts have the same sign.
    Interaction,
    /// Fronts of both signs collide and some waves are removed.
    Cancellation,
}

/// One collision and its resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    /// Position in the event sequence.
    pub index: usize,
    /// Collision time.
    pub t: f64,
    /// Collision point.
    pub x: f64,
    /// Colliding fronts, left to right.
    pub incoming: Vec<FrontRecord>,
    /// Fronts leaving the collision point, left to right.
    pub outgoing: Vec<FrontRecord>,
    /// Interaction or cancellation.
    pub kind: EventKind,
    /// Drop of total variation at the event.
    pub cancellation: f64,
    /// Removed wave ids, sorted.
    pub removed: Vec<WaveId>,
    /// Sum over surviving waves of `|Δσ| |s|`.
    pub speed_variation: f64,
    /// True when three or more fronts met at the same point.
    pub composite: bool,
    /// Wave id runs of the colliding fronts.
    #[serde(skip)]
    pub incoming_ids: Vec<Vec<(WaveId, WaveId)>>,
    /// Wave id runs of the outgoing fronts.
    #[serde(skip)]
    pub outgoing_ids: Vec<Vec<(WaveId, WaveId)>>,
}

/// Wavefront tracking solver state.
#[derive(Debug, Clone)]
pub struct WftSolver {
    flux: Arc<PiecewiseAffineFn>,
    waves: WaveTable,
    fronts: Vec<Front>,
    collide: Vec<f64>,
    time: f64,
    events: usize,
    next_label: usize,
    tol_x: f64,
}

impl WftSolver {
    /// Enumerates the waves of `datum` and solves the initial Riemann problems.
    pub fn init(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>) -> Result<Self> {
        let (lo, hi) = datum.range();
        flux.check(lo)?;
        flux.check(hi)?;
        let jumps = datum.jumps();
        if jumps.is_empty() {
            return Err(Error::InvalidDatum("the datum has no jump".into()));
        }
        let mut waves = WaveTable { uhat: Vec::new(), sign: Vec::new(), alive: Vec::new(), initial_x: Vec::new(), hist: Vec::new() };
        let mut fronts = Vec::new();
        let mut label = 0;
        for &(x, a, b) in &jumps {
            let sign: i8 = if b > a { 1 } else { -1 };
            let first = waves.uhat.len() as WaveId + 1;
            for k in 1..=(b - a).abs() {
                waves.uhat.push(a + sign as i64 * k);
                waves.sign.push(sign);
                waves.alive.push(true);
                waves.initial_x.push(x);
            }
            let last = waves.uhat.len() as WaveId;
            waves.hist.extend(std::iter::repeat_n((first, last), (last + 1 - first) as usize));
            let mut next = first;
            for piece in solve(&flux, a, b)? {
                let n = piece.cells() as WaveId;
                fronts.push(Front {
                    label,
                    born: None,
                    t0: 0.0,
                    x0: x,
                    left: piece.left,
                    right: piece.right,
                    speed: piece.speed,
                    runs: vec![(next, next + n - 1)],
                });
                label += 1;
                next += n;
            }
        }
        let extent = jumps.last().unwrap().0 - jumps[0].0;
        let collide = fronts.windows(2).map(|w| collision_time(&w[0], &w[1])).collect();
        Ok(Self {
            flux,
            waves,
            fronts,
            collide,
            time: 0.0,
            events: 0,
            next_label: label,
            tol_x: 1e-12 * extent.abs().max(1.0),
        })
    }

    /// Flux used by the solver.
    pub fn flux(&self) -> &Arc<PiecewiseAffineFn> {
        &self.flux
    }

    /// Wave table.
    pub fn waves(&self) -> &WaveTable {
        &self.waves
    }

    /// Current fronts, left to right.
    pub fn fronts(&self) -> &[Front] {
        &self.fronts
    }

    /// Time of the last processed event.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of processed events.
    pub fn event_count(&self) -> usize {
        self.events
    }

    /// Total variation of the current solution.
    pub fn total_variation(&self) -> f64 {
        self.fronts.iter().map(|f| f.cells()).sum::<i64>() as f64 * self.flux.step()
    }

    /// Index of the front carrying each live wave, indexed by `id - 1`.
    pub fn wave_fronts(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.waves.len()];
        for (k, f) in self.fronts.iter().enumerate() {
            for id in f.ids() {
                out[id as usize - 1] = Some(k);
            }
        }
        out
    }

    /// Time, place and leftmost front index of the next collision, if any.
    pub fn next_event(&self) -> Option<(f64, f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, &t) in self.collide.iter().enumerate() {
            if t.is_finite() && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
        best.map(|(t, i)| (t, self.fronts[i].position(t), i))
    }

    /// Processes the next collision. Returns `None` when no collision is left.
    pub fn step(&mut self) -> Result<Option<Event>> {
        let Some((t, x, i)) = self.next_event() else {
            return Ok(None);
        };
        let (mut i0, mut i1) = (i, i + 1);
        while i1 + 1 < self.fronts.len()
            && (self.fronts[i1 + 1].position(t) - x).abs() <= self.tol_x
            && self.fronts[i1 + 1].speed < self.fronts[i1].speed
        {
            i1 += 1;
        }
        while i0 > 0
            && (self.fronts[i0 - 1].position(t) - x).abs() <= self.tol_x
            && self.fronts[i0 - 1].speed > self.fronts[i0].speed
        {
            i0 -= 1;
        }
        let t = t.max(self.time);
        let event = self.resolve(i0, i1, t, x)?;
        self.time = t;
        self.events += 1;
        Ok(Some(event))
    }

    /// Processes collisions until none is left or `max_events` were handled.
    pub fn run(&mut self, max_events: usize) -> Result<Vec<Event>> {
        let mut out = Vec::new();
        while out.len() < max_events {
            match self.step()? {
                Some(e) => out.push(e),
                None => break,
            }
        }
        Ok(out)
    }

    fn resolve(&mut self, i0: usize, i1: usize, t: f64, x: f64) -> Result<Event> {
        let flux = Arc::clone(&self.flux);
        let step = flux.step();
        let parts: Vec<Front> = self.fronts[i0..=i1].to_vec();
        let ul = parts[0].left;
        let ur = parts[parts.len() - 1].right;
        let incoming: Vec<FrontRecord> = parts.iter().map(Front::record).collect();
        let incoming_ids: Vec<Vec<(WaveId, WaveId)>> = parts.iter().map(|p| p.runs.clone()).collect();
        let in_cells: i64 = parts.iter().map(Front::cells).sum();
        let same_sign = parts.iter().all(|p| p.sign() == parts[0].sign());
        let index = self.events;
        let (first, last) = (parts[0].first_id(), parts[parts.len() - 1].last_id());
        for id in parts.iter().flat_map(Front::ids) {
            let h = &mut self.waves.hist[id as usize - 1];
            *h = (h.0.min(first), h.1.max(last));
        }

        let mut outgoing = Vec::new();
        let mut removed = Vec::new();
        let mut variation = 0.0;
        if same_sign {
            let (lo, hi) = (ul.min(ur), ul.max(ur));
            let speed = flux.chord_slope(lo, hi);
            let mut runs: Vec<(WaveId, WaveId)> = Vec::new();
            for p in &parts {
                for &(a, b) in &p.runs {
                    match runs.last_mut() {
                        Some(last) if last.1 + 1 == a => last.1 = b,
                        _ => runs.push((a, b)),
                    }
                }
                let (a, b) = p.span();
                if !flux.same_line(lo, hi, a, b) {
                    variation += (speed - p.speed).abs() * p.cells() as f64 * step;
                }
            }
            outgoing.push(self.new_front(index, t, x, ul, ur, speed, runs));
        } else {
            let mut stack: Vec<(WaveId, i64, i8, usize)> = Vec::new();
            for (k, p) in parts.iter().enumerate() {
                for id in p.ids() {
                    let cell = self.waves.cell(id);
                    let sign = self.waves.sign(id);
                    match stack.last() {
                        Some(&(top, c, sg, _)) if c == cell && sg != sign => {
                            removed.push(top);
                            removed.push(id);
                            stack.pop();
                        }
                        _ => stack.push((id, cell, sign, k)),
                    }
                }
            }
            removed.sort_unstable();
            for &id in &removed {
                self.waves.alive[id as usize - 1] = false;
            }
            debug_assert_eq!(stack.len() as i64, (ur - ul).abs());
            let pieces = solve(&flux, ul, ur)?;
            let mut cursor = 0;
            for piece in pieces {
                let n = piece.cells() as usize;
                let (lo, hi) = piece.span();
                let mut runs: Vec<(WaveId, WaveId)> = Vec::new();
                for &(id, _, _, k) in &stack[cursor..cursor + n] {
                    match runs.last_mut() {
                        Some(last) if last.1 + 1 == id => last.1 = id,
                        _ => runs.push((id, id)),
                    }
                    let (a, b) = parts[k].span();
                    if !flux.same_line(lo, hi, a, b) {
                        variation += (piece.speed - parts[k].speed).abs() * step;
                    }
                }
                cursor += n;
                outgoing.push(self.new_front(index, t, x, piece.left, piece.right, piece.speed, runs));
            }
        }

        let out_records: Vec<FrontRecord> = outgoing.iter().map(Front::record).collect();
        let outgoing_ids: Vec<Vec<(WaveId, WaveId)>> = outgoing.iter().map(|p| p.runs.clone()).collect();
        let out_cells = (ur - ul).abs();
        let old_len = self.fronts.len();
        let out_len = outgoing.len();
        self.fronts.splice(i0..=i1, outgoing);
        let new_len = self.fronts.len();
        let lo = i0.saturating_sub(1);
        let old_end = (i1 + 1).min(old_len.saturating_sub(1));
        let new_end = (i0 + out_len).min(new_len.saturating_sub(1));
        let fresh: Vec<f64> =
            (lo..new_end.max(lo)).map(|p| collision_time(&self.fronts[p], &self.fronts[p + 1])).collect();
        self.collide.splice(lo..old_end.max(lo), fresh);
        debug_assert_eq!(self.collide.len(), new_len.saturating_sub(1));

        Ok(Event {
            index,
            t,
            x,
            composite: incoming.len() >= 3,
            incoming,
            outgoing: out_records,
            kind: if same_sign { EventKind::Interaction } else { EventKind::Cancellation },
            cancellation: (in_cells - out_cells) as f64 * step,
            removed,
            speed_variation: variation,
            incoming_ids,
            outgoing_ids,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn new_front(
        &mut self,
        event: usize,
        t: f64,
        x: f64,
        left: i64,
        right: i64,
        speed: f64,
        runs: Vec<(WaveId, WaveId)>,
    ) -> Front {
        let label = self.next_label;
        self.next_label += 1;
        Front { label, born: Some(event), t0: t, x0: x, left, right, speed, runs }
    }
}


fn collision_time(a: &Front, b: &Front) -> f64 {
    if a.speed <= b.speed {
        return f64::INFINITY;
    }
    let t = a.t0.max(b.t0);
    let gap = (b.position(t) - a.position(t)).max(0.0);
    t + gap / (a.speed - b.speed)
}

/// Sum over the live waves of `after` of `|σ_after(s) - σ_before(s)| |s|`,
/// where equal speeds are decided exactly on the flux samples.
pub fn speed_variation(before: &WftSolver, after: &WftSolver) -> f64 {
    let flux = after.flux();
    let fb = before.wave_fronts();
    let fa = after.wave_fronts();
    let mut total = 0.0;
    for (id, slot) in fa.iter().enumerate() {
        let (Some(ka), Some(kb)) = (slot, fb[id]) else { continue };
        let (a, b) = (&after.fronts[*ka], &before.fronts[kb]);
        let ((p, q), (r, s)) = (a.span(), b.span());
        if !flux.same_line(p, q, r, s) {
            total += (a.speed - b.speed).abs() * flux.step();
        }
    }
    total
}
