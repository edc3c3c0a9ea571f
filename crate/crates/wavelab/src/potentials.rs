//! Functionals over waves and fronts: `Q^GL`, `Q^BB`, the interaction height
//! and the quadratic potential `𝔔` with its pair weights `𝔮`.
//!
//! A [`WaveSnapshot`] freezes the live waves of either scheme as an ordered
//! list of groups. A group is a maximal set of waves sitting at one point with
//! one history pair; its cells form a contiguous monotone chain. For two
//! groups `A < B` every pair `s ∈ A`, `s' ∈ B` shares the history interval
//! `[L_B, R_A]`, and `s'` has interacted with `s` exactly when `s' <= R_A`.
//! The interacted part of `A × B` is therefore a product of cell blocks on
//! which the speed gap of the history envelope is constant, and `𝔔` is a
//! finite sum of block weights:
//!
//! * wavefront tracking: `Σ_{i,j} 1 / (|j - i| + 1)` over the block, through
//!   partial sums of harmonic numbers;
//! * Glimm: the exact double integral of `1 / |u' - u|` over the block, through
//!   the primitive `x ↦ x log x`.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use serde::Serialize;

use crate::envelope::{lower_envelope, upper_envelope, EnvelopeResult, PiecewiseAffineFn};
use crate::error::{Error, Result};
use crate::wft::{WaveId, WftSolver};

/// Which scheme produced a snapshot; selects the pair weight denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Wavefront tracking: waves are atoms of size `ε_u`.
    Wft,
    /// Glimm scheme: waves form a continuum and pair weights are integrated.
    Glimm,
}

/// Waves located at one point with one sign and one history pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Index of the front or node carrying the group.
    pub front: usize,
    /// Live wave ids, increasing.
    pub ids: Vec<WaveId>,
    /// Common sign.
    pub sign: i8,
    /// Cell of the first wave; the k-th wave sits in `first_cell + sign * k`.
    pub first_cell: i64,
    /// Common history pair `(L, R)`.
    pub hist: (WaveId, WaveId),
    /// Position of the group.
    pub x: f64,
    /// Index of the Riemann piece carrying each wave, numbered along the
    /// front; waves of one front travel with the same speed exactly when
    /// their pieces agree.
    pub pieces: Vec<u32>,
}

impl Group {
    /// Splits the waves of one front into maximal runs of equal history.
    pub fn split_front(
        front: usize,
        ids: &[WaveId],
        sign: i8,
        first_cell: i64,
        x: f64,
        pieces: &[u32],
        hist: impl Fn(WaveId) -> (WaveId, WaveId),
    ) -> Vec<Group> {
        let mut out: Vec<Group> = Vec::new();
        let mut start = 0;
        for k in 1..=ids.len() {
            if k < ids.len() && hist(ids[k]) == hist(ids[start]) {
                continue;
            }
            out.push(Group {
                front,
                ids: ids[start..k].to_vec(),
                sign,
                first_cell: first_cell + sign as i64 * start as i64,
                hist: hist(ids[start]),
                x,
                pieces: pieces[start..k].to_vec(),
            });
            start = k;
        }
        out
    }

    fn cell(&self, k: usize) -> i64 {
        self.first_cell + self.sign as i64 * k as i64
    }
}

/// Frozen wave configuration with the data needed by the pair weights.
#[derive(Debug, Clone)]
pub struct WaveSnapshot {
    /// Producing scheme.
    pub scheme: Scheme,
    /// Flux.
    pub flux: Arc<PiecewiseAffineFn>,
    /// Second derivative bound `‖f''‖`.
    pub k: f64,
    /// Groups ordered by wave id.
    pub groups: Vec<Group>,
    alive: Vec<bool>,
    cell: Vec<i64>,
    sign: Vec<i8>,
    group_of: Vec<usize>,
    next_alive: Vec<WaveId>,
    prev_alive: Vec<WaveId>,
    rank: Vec<u32>,
}

/// Envelope of the flux over the states of a history interval.
#[derive(Debug)]
pub struct HistoryEnvelope {
    /// Envelope over the value interval spanned by the interval of waves.
    pub env: EnvelopeResult,
    /// Common sign of the waves.
    pub sign: i8,
    /// Live waves in the interval.
    pub first: WaveId,
    /// Last live wave in the interval.
    pub last: WaveId,
}

impl HistoryEnvelope {
    /// Run index and slope on a cell of the interval.
    pub fn cell_run(&self, cell: i64) -> (usize, f64) {
        let r = self.env.run_of_cell(cell).expect("cell inside the history interval");
        (r, self.env.runs[r].slope)
    }
}

impl WaveSnapshot {
    /// Builds a snapshot from groups over the wave ids `1..=n_waves`.
    pub fn new(scheme: Scheme, flux: Arc<PiecewiseAffineFn>, k: f64, n_waves: usize, groups: Vec<Group>) -> Self {
        let mut alive = vec![false; n_waves];
        let mut cell = vec![0; n_waves];
        let mut sign = vec![0; n_waves];
        let mut group_of = vec![usize::MAX; n_waves];
        for (g, grp) in groups.iter().enumerate() {
            for (k, &id) in grp.ids.iter().enumerate() {
                let i = id as usize - 1;
                alive[i] = true;
                cell[i] = grp.cell(k);
                sign[i] = grp.sign;
                group_of[i] = g;
            }
        }
        let n = n_waves as WaveId;
        let mut next_alive = vec![n + 1; n_waves + 2];
        for id in (1..=n).rev() {
            next_alive[id as usize] = if alive[id as usize - 1] { id } else { next_alive[id as usize + 1] };
        }
        let mut prev_alive = vec![0; n_waves + 2];
        let mut rank = vec![0u32; n_waves + 2];
        for id in 1..=n {
            let i = id as usize;
            prev_alive[i] = if alive[i - 1] { id } else { prev_alive[i - 1] };
            rank[i] = rank[i - 1] + alive[i - 1] as u32;
        }
        Self { scheme, flux, k, groups, alive, cell, sign, group_of, next_alive, prev_alive, rank }
    }

    /// Snapshot of the live waves of a wavefront tracking state.
    pub fn from_wft(solver: &WftSolver, k: f64) -> Self {
        let t = solver.time();
        let waves = solver.waves();
        let mut groups = Vec::new();
        for (i, f) in solver.fronts().iter().enumerate() {
            let ids: Vec<WaveId> = f.ids().collect();
            let pieces = vec![0; ids.len()];
            groups.extend(Group::split_front(i, &ids, f.sign(), f.first_cell(), f.position(t), &pieces, |s| {
                waves.hist(s)
            }));
        }
        Self::new(Scheme::Wft, Arc::clone(solver.flux()), k, solver.waves().len(), groups)
    }

    /// Number of wave ids, dead or alive.
    pub fn n_waves(&self) -> usize {
        self.alive.len()
    }

    /// True when wave `s` is alive.
    pub fn is_alive(&self, s: WaveId) -> bool {
        self.alive[s as usize - 1]
    }

    /// Cell of a live wave.
    pub fn cell(&self, s: WaveId) -> i64 {
        self.cell[s as usize - 1]
    }

    /// Sign of a live wave.
    pub fn sign(&self, s: WaveId) -> i8 {
        self.sign[s as usize - 1]
    }

    /// Group index of a live wave.
    pub fn group_of(&self, s: WaveId) -> usize {
        self.group_of[s as usize - 1]
    }

    /// History pair of a live wave.
    pub fn hist(&self, s: WaveId) -> (WaveId, WaveId) {
        self.groups[self.group_of(s)].hist
    }

    /// Number of live waves with ids in `[a, b]`.
    pub fn live_between(&self, a: WaveId, b: WaveId) -> u32 {
        if b < a {
            return 0;
        }
        self.rank[b as usize] - self.rank[a as usize - 1]
    }

    /// True when two live waves share position and speed.
    pub fn joined(&self, s: WaveId, s2: WaveId) -> bool {
        let (g, g2) = (&self.groups[self.group_of(s)], &self.groups[self.group_of(s2)]);
        if g.front != g2.front {
            return false;
        }
        let k = g.ids.binary_search(&s).expect("wave in its group");
        let k2 = g2.ids.binary_search(&s2).expect("wave in its group");
        g.pieces[k] == g2.pieces[k2]
    }

    /// True when the live waves `s < s'` have already interacted.
    pub fn interacted(&self, s: WaveId, s2: WaveId) -> bool {
        let (l, r) = self.hist(s);
        s2 >= l && s2 <= r
    }

    /// Live waves with ids in `[a, b]` form a homogeneous interval of waves:
    /// same sign and cells forming a contiguous chain.
    pub fn is_homogeneous(&self, a: WaveId, b: WaveId) -> bool {
        let (first, last) = (self.next_alive[a as usize], self.prev_alive[b as usize]);
        if first > last {
            return true;
        }
        let sg = self.sign(first);
        let count = self.live_between(first, last) as i64;
        let mut prev: Option<i64> = None;
        for id in first..=last {
            if !self.is_alive(id) {
                continue;
            }
            if self.sign(id) != sg {
                return false;
            }
            if let Some(p) = prev {
                if self.cell(id) != p + sg as i64 {
                    return false;
                }
            }
            prev = Some(self.cell(id));
        }
        (self.cell(last) - self.cell(first)).abs() == count - 1
    }

    /// Envelope over the states of the live waves with ids in `[a, b]`.
    pub fn history_envelope(&self, a: WaveId, b: WaveId) -> Option<HistoryEnvelope> {
        let a = a.max(1);
        let b = b.min(self.n_waves() as WaveId);
        if a > b {
            return None;
        }
        let (first, last) = (self.next_alive[a as usize], self.prev_alive[b as usize]);
        if first > last {
            return None;
        }
        let sign = self.sign(first);
        let (c0, c1) = (self.cell(first), self.cell(last));
        let (lo, hi) = (c0.min(c1) - 1, c0.max(c1));
        let env = if sign > 0 { lower_envelope(&self.flux, lo, hi) } else { upper_envelope(&self.flux, lo, hi) }
            .expect("history interval inside the flux domain");
        Some(HistoryEnvelope { env, sign, first, last })
    }

    /// Total variation carried by the live waves.
    pub fn total_variation(&self) -> f64 {
        self.alive.iter().filter(|&&a| a).count() as f64 * self.flux.step()
    }
}

/// Harmonic partial sums used by the wavefront tracking block weights.
struct Harmonic {
    sh: Vec<f64>,
}

impl Harmonic {
    fn new(n: usize) -> Self {
        let mut h = 0.0;
        let mut acc = 0.0;
        let mut sh = Vec::with_capacity(n + 1);
        sh.push(0.0);
        for k in 1..=n {
            h += 1.0 / k as f64;
            acc += h;
            sh.push(acc);
        }
        Self { sh }
    }

    fn s(&self, n: i64) -> f64 {
        if n <= 0 {
            0.0
        } else {
            self.sh[n as usize]
        }
    }
}

/// Double integral of `1 / (v - u)` over `[a1, a2] × [b1, b2]` with `a2 <= b1`.
pub fn inverse_distance_integral(a1: f64, a2: f64, b1: f64, b2: f64) -> f64 {
    let (p, q, g) = (a2 - a1, b2 - b1, b1 - a2);
    if p <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    // x ln(1 + q / x), continuous at x = 0
    let tail = |x: f64| if x <= 0.0 { 0.0 } else { x * (q / x).ln_1p() };
    q * (p / (g + q)).ln_1p() + tail(g + p) - tail(g)
}

/// `∫_a^ξ ∫_ξ^b du' du / (u' - u)`, which is largest at the midpoint where it
/// equals `log 2 · (b - a)`.
pub fn log_split_integral(a: f64, xi: f64, b: f64) -> f64 {
    inverse_distance_integral(a, xi, xi, b)
}

/// Block of consecutive cells with one history run, in oriented positions.
#[derive(Debug, Clone, Copy)]
struct Block {
    lo: i64,
    hi: i64,
    run: usize,
    slope: f64,
}

struct Weights<'a> {
    snap: &'a WaveSnapshot,
    harmonic: Harmonic,
    cache: HashMap<(WaveId, WaveId), Option<Rc<HistoryEnvelope>>>,
}

impl<'a> Weights<'a> {
    fn new(snap: &'a WaveSnapshot) -> Self {
        let n = match snap.scheme {
            Scheme::Wft => snap.n_waves() + 2,
            Scheme::Glimm => 0,
        };
        Self { snap, harmonic: Harmonic::new(n), cache: HashMap::new() }
    }

    fn envelope(&mut self, a: WaveId, b: WaveId) -> Option<Rc<HistoryEnvelope>> {
        let snap = self.snap;
        self.cache.entry((a, b)).or_insert_with(|| snap.history_envelope(a, b).map(Rc::new)).clone()
    }

    /// Weight of the cell block pair in index units; `a` lies below `b`.
    fn block(&self, a: &Block, b: &Block) -> f64 {
        debug_assert!(a.hi < b.lo);
        match self.snap.scheme {
            Scheme::Wft => {
                let (a1, a2, b1, b2) = (a.lo, a.hi, b.lo, b.hi);
                if (a2 - a1 + 1) * (b2 - b1 + 1) <= 64 {
                    let mut s = 0.0;
                    for i in a1..=a2 {
                        for j in b1..=b2 {
                            s += 1.0 / (j - i + 1) as f64;
                        }
                    }
                    s
                } else {
                    let h = &self.harmonic;
                    (h.s(b2 - a1 + 1) - h.s(b2 - a2)) - (h.s(b1 - a1) - h.s(b1 - a2 - 1))
                }
            }
            Scheme::Glimm => {
                inverse_distance_integral((a.lo - 1) as f64, a.hi as f64, (b.lo - 1) as f64, b.hi as f64)
            }
        }
    }

    /// Splits the waves `g.ids[range]` passing `mask` into blocks of constant run.
    fn blocks(&self, g: &Group, range: std::ops::Range<usize>, env: &HistoryEnvelope, mask: Option<&[bool]>) -> Vec<Block> {
        let mut out: Vec<Block> = Vec::new();
        let mut prev_k: Option<usize> = None;
        for k in range {
            let id = g.ids[k];
            if mask.is_some_and(|m| !m[id as usize - 1]) {
                continue;
            }
            let cell = g.cell(k);
            let (run, slope) = env.cell_run(cell);
            let pos = g.sign as i64 * cell;
            match out.last_mut() {
                Some(b) if b.run == run && prev_k == Some(k - 1) => b.hi = pos,
                _ => out.push(Block { lo: pos, hi: pos, run, slope }),
            }
            prev_k = Some(k);
        }
        out
    }

    fn cross(&self, xs: &[Block], ys: &[Block]) -> f64 {
        let mut s = 0.0;
        for a in xs {
            for b in ys {
                if a.run != b.run {
                    s += (a.slope - b.slope).abs() * self.block(a, b);
                }
            }
        }
        s
    }

    fn triangle(&self, xs: &[Block]) -> f64 {
        let mut s = 0.0;
        for (i, a) in xs.iter().enumerate() {
            for b in &xs[i + 1..] {
                if a.run != b.run {
                    s += (a.slope - b.slope).abs() * self.block(a, b);
                }
            }
        }
        s
    }
}

fn masked_count(ids: &[WaveId], mask: Option<&[bool]>) -> f64 {
    match mask {
        None => ids.len() as f64,
        Some(m) => ids.iter().filter(|&&id| m[id as usize - 1]).count() as f64,
    }
}

/// Quadratic potential `𝔔` of the snapshot. With a mask only the pairs of
/// masked waves are summed, while the weights still use the whole snapshot.
pub fn q_frak(snap: &WaveSnapshot, mask: Option<&[bool]>) -> f64 {
    let mut w = Weights::new(snap);
    let mut weighted = 0.0;
    let mut plain = 0.0;
    let groups = &snap.groups;
    for (ia, a) in groups.iter().enumerate() {
        let na = masked_count(&a.ids, mask);
        if na == 0.0 {
            continue;
        }
        if na >= 2.0 {
            if let Some(env) = w.envelope(a.hist.0, a.hist.1) {
                let bl = w.blocks(a, 0..a.ids.len(), &env, mask);
                weighted += w.triangle(&bl);
            }
        }
        for b in &groups[ia + 1..] {
            let nb = masked_count(&b.ids, mask);
            if nb == 0.0 {
                continue;
            }
            if b.sign != a.sign || b.ids[0] > a.hist.1 {
                plain += na * nb;
                continue;
            }
            let n_int = b.ids.partition_point(|&id| id <= a.hist.1);
            let nb_int = masked_count(&b.ids[..n_int], mask);
            plain += na * (nb - nb_int);
            if nb_int == 0.0 {
                continue;
            }
            let env = w.envelope(b.hist.0, a.hist.1).expect("interacted pair has a history");
            let xa = w.blocks(a, 0..a.ids.len(), &env, mask);
            let xb = w.blocks(b, 0..n_int, &env, mask);
            weighted += w.cross(&xa, &xb);
        }
    }
    let step = snap.flux.step();
    weighted * step + snap.k * step * step * plain
}

/// Sum of the pair masses over `left × right`, where every id of `left` is
/// smaller than every id of `right`.
pub fn restricted_sum(snap: &WaveSnapshot, left: &[WaveId], right: &[WaveId]) -> f64 {
    let mut w = Weights::new(snap);
    left.iter().flat_map(|&s| right.iter().map(move |&s2| (s, s2))).map(|(s, s2)| pair_mass_with(&mut w, s, s2)).sum()
}

/// Contribution of the pair `s < s'` to `𝔔`: `𝔮 |s||s'|` for wavefront
/// tracking, the integral of `𝔮` over the two cells for the Glimm scheme.
pub fn pair_mass(snap: &WaveSnapshot, s: WaveId, s2: WaveId) -> Result<f64> {
    check_pair(snap, s, s2)?;
    Ok(pair_mass_with(&mut Weights::new(snap), s, s2))
}

/// Pair weight `𝔮(s, s')`. For the Glimm scheme, whose weight varies inside
/// a pair of cells, this is the mean of the weight over the two cells.
pub fn q_weight(snap: &WaveSnapshot, s: WaveId, s2: WaveId) -> Result<f64> {
    let m = pair_mass(snap, s, s2)?;
    let step = snap.flux.step();
    Ok(m / (step * step))
}

fn check_pair(snap: &WaveSnapshot, s: WaveId, s2: WaveId) -> Result<()> {
    if s >= s2 {
        return Err(Error::InvalidParameters(format!("pair ({s}, {s2}) is not ordered")));
    }
    for id in [s, s2] {
        if id == 0 || id as usize > snap.n_waves() || !snap.is_alive(id) {
            return Err(Error::InvalidParameters(format!("wave {id} is not alive")));
        }
    }
    Ok(())
}

fn pair_mass_with(w: &mut Weights<'_>, s: WaveId, s2: WaveId) -> f64 {
    let snap = w.snap;
    let step = snap.flux.step();
    if snap.sign(s) != snap.sign(s2) || !snap.interacted(s, s2) {
        return snap.k * step * step;
    }
    let env = w.envelope(snap.hist(s2).0, snap.hist(s).1).expect("interacted pair has a history");
    let (c, c2) = (snap.cell(s), snap.cell(s2));
    let (r, sl) = env.cell_run(c);
    let (r2, sl2) = env.cell_run(c2);
    if r == r2 {
        return 0.0;
    }
    let sg = snap.sign(s) as i64;
    let a = Block { lo: sg * c, hi: sg * c, run: r, slope: sl };
    let b = Block { lo: sg * c2, hi: sg * c2, run: r2, slope: sl2 };
    (sl - sl2).abs() * w.block(&a, &b) * step
}

/// Glimm's quadratic functional over fronts given as `(strength, speed)`:
/// the sum over unordered pairs of distinct fronts of `|w||w'|`.
pub fn q_gl(fronts: &[(f64, f64)]) -> f64 {
    let total: f64 = fronts.iter().map(|f| f.0).sum();
    let squares: f64 = fronts.iter().map(|f| f.0 * f.0).sum();
    ((total * total - squares) / 2.0).max(0.0)
}

/// Cubic functional: the sum over unordered pairs of distinct fronts of
/// `|σ - σ'| |w| |w'|`, evaluated after sorting by speed.
pub fn q_bb(fronts: &[(f64, f64)]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = fronts.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut mass = 0.0;
    let mut moment = 0.0;
    let mut total = 0.0;
    for &(w, sigma) in &sorted {
        total += w * (sigma * mass - moment);
        mass += w;
        moment += w * sigma;
    }
    total
}

/// Both forms of the interaction height for states `ul < um < ur` (or the
/// mirrored order): the gap between the flux and its envelope at `um`, and
/// the triangle height `|Δσ| |w| |w'| / (|w| + |w'|)` of the two chords.
pub fn interaction_height(f: &PiecewiseAffineFn, ul: i64, um: i64, ur: i64) -> Result<(f64, f64)> {
    let increasing = ul < um && um < ur;
    let decreasing = ul > um && um > ur;
    if !increasing && !decreasing {
        return Err(Error::InvalidParameters("states must be strictly monotone".into()));
    }
    let (lo, hi) = (ul.min(ur), ul.max(ur));
    let by_env = if increasing {
        f.value(um) - lower_envelope(f, lo, hi)?.value(um)
    } else {
        upper_envelope(f, lo, hi)?.value(um) - f.value(um)
    };
    let w = (um - ul).abs() as f64 * f.step();
    let w2 = (ur - um).abs() as f64 * f.step();
    let ds = (f.chord_slope(ul.min(um), ul.max(um)) - f.chord_slope(um.min(ur), um.max(ur))).abs();
    Ok((by_env, ds * w * w2 / (w + w2)))
}

/// Mean speed of an interval of waves with states in `[lo, hi]`.
pub fn mean_speed(f: &PiecewiseAffineFn, lo: i64, hi: i64) -> f64 {
    f.chord_slope(lo, hi)
}
