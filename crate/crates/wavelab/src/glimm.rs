//! Glimm scheme on the grid `(n ε_t, m ε_x)` with `ε_t = ε_x`, tracking every
//! wave of the sampled datum.
//!
//! Wave `s` is the unit cell of the value grid crossed by the `s`-th quantum of
//! the initial total variation. Since the flux is affine on every cell, the
//! speed assigned by a node Riemann problem is constant on each wave, so the
//! continuous wave set is represented exactly by these cells and every
//! integral over waves is a finite sum.
//!
//! At each step the waves at node `m` with speed `σ <= θ` stay (`𝒲⁰`) and the
//! others move to node `m + 1` (`𝒲¹`). The new node `m` collects `𝒲¹(m - 1)`
//! followed by `𝒲⁰(m)`; opposite waves on the same cell annihilate, the
//! survivors receive the speeds of the new node Riemann problem.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::error::{Error, Result};
use crate::potentials::{Group, Scheme, WaveSnapshot};
use crate::riemann::{solve, wave_cell};
use crate::wft::WaveId;

/// Binary radical inverse of `n`: `1 → 1/2`, `2 → 1/4`, `3 → 3/4`, ...
pub fn van_der_corput(n: u64) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            x += base;
        }
        base *= 0.5;
        k >>= 1;
    }
    x
}

/// Rule producing the sampling values `θ_1, θ_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SamplingKind {
    /// Van der Corput sequence in base 2.
    VanDerCorput,
    /// Independent uniform samples from a seeded generator.
    SeededUniform(u64),
    /// Explicit values, repeated cyclically.
    Explicit(Vec<f64>),
}

/// Stateful generator of sampling values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SamplingSequence {
    kind: SamplingKind,
    n: u64,
    rng: Option<ChaCha8Rng>,
}

impl SamplingSequence {
    /// Creates the sequence; explicit lists must be nonempty with values in `[0, 1]`.
    pub fn new(kind: SamplingKind) -> Result<Self> {
        let rng = match &kind {
            SamplingKind::SeededUniform(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            SamplingKind::Explicit(v) => {
                if v.is_empty() || v.iter().any(|t| !(0.0..=1.0).contains(t)) {
                    return Err(Error::InvalidParameters("explicit samples must be nonempty and in [0, 1]".into()));
                }
                None
            }
            SamplingKind::VanDerCorput => None,
        };
        Ok(Self { kind, n: 0, rng })
    }

    /// Next sampling value.
    pub fn next_theta(&mut self) -> f64 {
        self.n += 1;
        match &self.kind {
            SamplingKind::VanDerCorput => van_der_corput(self.n),
            SamplingKind::SeededUniform(_) => self.rng.as_mut().expect("seeded generator").gen::<f64>(),
            SamplingKind::Explicit(v) => v[((self.n - 1) % v.len() as u64) as usize],
        }
    }
}

/// Classification of a node after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// Waves from both neighbours meet and have the same sign.
    Interaction,
    /// Waves from both neighbours meet with opposite signs.
    Cancellation,
    /// Waves arrive from one side only.
    NoCollision,
}

/// Record of one node of the new time level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeEvent {
    /// New time level `n + 1`.
    pub n: usize,
    /// Node index.
    pub m: i64,
    /// Node classification.
    pub kind: NodeKind,
    /// Total variation removed at the node.
    pub cancellation: f64,
    /// `∫ |σ_{n+1} - σ_n| ds` over the surviving waves of the node.
    pub speed_variation: f64,
    /// Waves arriving from node `m - 1`.
    pub left_in: Vec<WaveId>,
    /// Waves that stayed at node `m`.
    pub right_in: Vec<WaveId>,
    /// Waves removed at the node.
    pub removed: Vec<WaveId>,
    /// Surviving waves from `left_in` whose speed changed.
    pub changed_left: Vec<WaveId>,
    /// Surviving waves from `right_in` whose speed changed.
    pub changed_right: Vec<WaveId>,
}

/// Waves located at one node, with the pieces of the node Riemann problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Node index.
    pub m: i64,
    /// Wave ids in space order.
    pub ids: Vec<WaveId>,
    /// Left state `u_{n, m-1}`.
    pub left: i64,
    /// Right state `u_{n, m}`.
    pub right: i64,
}

/// Glimm scheme state at time level `n`.
#[derive(Debug, Clone)]
pub struct GlimmState {
    flux: Arc<PiecewiseAffineFn>,
    eps_x: f64,
    n: usize,
    m_lo: i64,
    u: Vec<i64>,
    uhat: Vec<i64>,
    sign: Vec<i8>,
    alive: Vec<bool>,
    hist: Vec<(WaveId, WaveId)>,
    speed: Vec<f64>,
    chord: Vec<(i64, i64)>,
    nodes: Vec<Node>,
}

impl GlimmState {
    /// Samples the datum at the nodes `m ε_x` and enumerates its waves.
    pub fn init(datum: &StepDatum, flux: Arc<PiecewiseAffineFn>, eps_x: f64) -> Result<Self> {
        if !(eps_x.is_finite() && eps_x > 0.0) {
            return Err(Error::InvalidParameters(format!("grid step {eps_x} must be positive")));
        }
        let (lo, hi) = datum.range();
        flux.check(lo)?;
        flux.check(hi)?;
        for c in lo + 1..=hi {
            let slope = flux.cell_slope(c);
            if !(slope > 0.0 && slope < 1.0) {
                return Err(Error::SpeedNormalization { cell: c, slope });
            }
        }
        let (m_lo, m_hi) = match (datum.steps().first(), datum.steps().last()) {
            (Some(a), Some(b)) => ((a.0 / eps_x).floor() as i64 - 1, (b.0 / eps_x).ceil() as i64 + 1),
            _ => (0, 0),
        };
        let u: Vec<i64> = (m_lo..=m_hi).map(|m| datum.value_at(m as f64 * eps_x)).collect();
        let mut state = Self {
            flux,
            eps_x,
            n: 0,
            m_lo,
            u,
            uhat: Vec::new(),
            sign: Vec::new(),
            alive: Vec::new(),
            hist: Vec::new(),
            speed: Vec::new(),
            chord: Vec::new(),
            nodes: Vec::new(),
        };
        for m in m_lo + 1..=m_hi {
            let (a, b) = (state.value(m - 1), state.value(m));
            if a == b {
                continue;
            }
            let sg: i8 = if b > a { 1 } else { -1 };
            let first = state.uhat.len() as WaveId + 1;
            let k = (b - a).abs();
            let ids: Vec<WaveId> = (0..k as WaveId).map(|j| first + j).collect();
            let last = first + k as WaveId - 1;
            for j in 1..=k {
                state.uhat.push(a + sg as i64 * j);
                state.sign.push(sg);
                state.alive.push(true);
                state.hist.push((first, last));
                state.speed.push(0.0);
                state.chord.push((0, 0));
            }
            state.nodes.push(Node { m, ids, left: a, right: b });
        }
        let nodes = state.nodes.clone();
        for node in &nodes {
            state.assign_speeds(node)?;
        }
        Ok(state)
    }

    fn assign_speeds(&mut self, node: &Node) -> Result<()> {
        let pieces = solve(&self.flux, node.left, node.right)?;
        let mut k = 0;
        for p in pieces {
            for _ in 0..p.cells() {
                let i = node.ids[k] as usize - 1;
                self.speed[i] = p.speed;
                self.chord[i] = p.span();
                k += 1;
            }
        }
        debug_assert_eq!(k, node.ids.len());
        Ok(())
    }

    /// Flux.
    pub fn flux(&self) -> &Arc<PiecewiseAffineFn> {
        &self.flux
    }

    /// Grid step in space and time.
    pub fn eps_x(&self) -> f64 {
        self.eps_x
    }

    /// Current time level.
    pub fn time_level(&self) -> usize {
        self.n
    }

    /// Value `u_{n, m}`.
    pub fn value(&self, m: i64) -> i64 {
        let k = (m - self.m_lo).clamp(0, self.u.len() as i64 - 1);
        self.u[k as usize]
    }

    /// Nodes carrying waves, ordered by position.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of wave ids.
    pub fn wave_count(&self) -> usize {
        self.uhat.len()
    }

    /// State `û(s)`.
    pub fn uhat(&self, s: WaveId) -> i64 {
        self.uhat[s as usize - 1]
    }

    /// Sign of wave `s`.
    pub fn sign(&self, s: WaveId) -> i8 {
        self.sign[s as usize - 1]
    }

    /// True when wave `s` is alive.
    pub fn is_alive(&self, s: WaveId) -> bool {
        self.alive[s as usize - 1]
    }

    /// Liveness flags indexed by `s - 1`.
    pub fn alive_mask(&self) -> &[bool] {
        &self.alive
    }

    /// Speed of a live wave.
    pub fn speed(&self, s: WaveId) -> f64 {
        self.speed[s as usize - 1]
    }

    /// State interval of the Riemann piece carrying a live wave.
    pub fn chord(&self, s: WaveId) -> (i64, i64) {
        self.chord[s as usize - 1]
    }

    /// History pair of a wave.
    pub fn hist(&self, s: WaveId) -> (WaveId, WaveId) {
        self.hist[s as usize - 1]
    }

    /// Total variation of the current grid values.
    pub fn total_variation(&self) -> f64 {
        self.alive.iter().filter(|&&a| a).count() as f64 * self.flux.step()
    }

    /// Fronts as `(strength, speed)`: every Riemann piece at every node.
    pub fn fronts(&self) -> Vec<(f64, f64)> {
        let step = self.flux.step();
        let mut out = Vec::new();
        for node in &self.nodes {
            let mut k = 0;
            while k < node.ids.len() {
                let c = self.chord(node.ids[k]);
                let n = (c.1 - c.0) as usize;
                out.push((n as f64 * step, self.speed(node.ids[k])));
                k += n;
            }
        }
        out
    }

    /// Snapshot of the live waves, one group per node.
    pub fn snapshot(&self, k: f64) -> WaveSnapshot {
        let mut groups = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let s = node.ids[0];
            let mut pieces = Vec::with_capacity(node.ids.len());
            let mut piece = 0;
            for (k, &id) in node.ids.iter().enumerate() {
                if k > 0 && self.chord(id) != self.chord(node.ids[k - 1]) {
                    piece += 1;
                }
                pieces.push(piece);
            }
            let first_cell = wave_cell(self.uhat(s), self.sign(s));
            let x = node.m as f64 * self.eps_x;
            groups.extend(Group::split_front(i, &node.ids, self.sign(s), first_cell, x, &pieces, |w| self.hist(w)));
        }
        WaveSnapshot::new(Scheme::Glimm, Arc::clone(&self.flux), k, self.wave_count(), groups)
    }

    /// Advances one time level with sampling value `θ` and returns one record
    /// per node of the new level that received waves.
    pub fn step(&mut self, theta: f64) -> Result<Vec<NodeEvent>> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameters(format!("sampling value {theta} outside [0, 1]")));
        }
        let step = self.flux.step();
        // Split every node into the waves that stay and the waves that move.
        let splits: Vec<(i64, &[WaveId], &[WaveId])> = self
            .nodes
            .iter()
            .map(|node| {
                let k0 = node.ids.partition_point(|&s| self.speed[s as usize - 1] <= theta);
                (node.m, &node.ids[..k0], &node.ids[k0..])
            })
            .collect();

        let mut new_u: Vec<(i64, i64)> = Vec::with_capacity(splits.len());
        for (node, &(m, w0, _)) in self.nodes.iter().zip(&splits) {
            new_u.push((m, node.left + self.sign[node.ids[0] as usize - 1] as i64 * w0.len() as i64));
        }

        let mut targets: Vec<(i64, Vec<WaveId>, Vec<WaveId>)> = Vec::new();
        for &(m, w0, w1) in &splits {
            if !w0.is_empty() {
                match targets.last_mut() {
                    Some(t) if t.0 == m => t.2 = w0.to_vec(),
                    _ => targets.push((m, Vec::new(), w0.to_vec())),
                }
            }
            if !w1.is_empty() {
                targets.push((m + 1, w1.to_vec(), Vec::new()));
            }
        }

        // Install the new grid values.
        let n_old = self.n;
        for &(m, v) in &new_u {
            self.set_value(m, v);
        }
        self.n = n_old + 1;

        let mut events = Vec::with_capacity(targets.len());
        let mut nodes = Vec::with_capacity(targets.len());
        for (m, left_in, right_in) in targets {
            let (ul, ur) = (self.value(m - 1), self.value(m));
            let first = left_in.first().or(right_in.first()).copied().expect("waves at the node");
            let last = right_in.last().or(left_in.last()).copied().expect("waves at the node");
            for &s in left_in.iter().chain(&right_in) {
                let h = &mut self.hist[s as usize - 1];
                *h = (h.0.min(first), h.1.max(last));
            }
            let mut stack: Vec<(WaveId, bool)> = Vec::new();
            let mut removed = Vec::new();
            for (&s, from_left) in left_in.iter().map(|s| (s, true)).chain(right_in.iter().map(|s| (s, false))) {
                let cell = wave_cell(self.uhat(s), self.sign(s));
                match stack.last() {
                    Some(&(top, _)) if wave_cell(self.uhat(top), self.sign(top)) == cell && self.sign(top) != self.sign(s) => {
                        removed.push(top);
                        removed.push(s);
                        stack.pop();
                    }
                    _ => stack.push((s, from_left)),
                }
            }
            removed.sort_unstable();
            for &s in &removed {
                self.alive[s as usize - 1] = false;
            }
            debug_assert_eq!(stack.len() as i64, (ur - ul).abs());

            let kind = match (left_in.is_empty(), right_in.is_empty()) {
                (false, false) if self.sign(left_in[0]) == self.sign(right_in[0]) => NodeKind::Interaction,
                (false, false) => NodeKind::Cancellation,
                _ => NodeKind::NoCollision,
            };
            let mut event = NodeEvent {
                n: self.n,
                m,
                kind,
                cancellation: removed.len() as f64 * step,
                speed_variation: 0.0,
                left_in,
                right_in,
                removed,
                changed_left: Vec::new(),
                changed_right: Vec::new(),
            };
            if stack.is_empty() {
                events.push(event);
                continue;
            }
            let ids: Vec<WaveId> = stack.iter().map(|p| p.0).collect();
            let old: Vec<((i64, i64), f64)> = ids.iter().map(|&s| (self.chord(s), self.speed(s))).collect();
            let node = Node { m, ids, left: ul, right: ur };
            self.assign_speeds(&node)?;
            for ((&(s, from_left), &(c_old, v_old)), _) in stack.iter().zip(&old).zip(0..) {
                let c_new = self.chord(s);
                if self.flux.same_line(c_old.0, c_old.1, c_new.0, c_new.1) {
                    continue;
                }
                event.speed_variation += (self.speed(s) - v_old).abs() * step;
                if from_left {
                    event.changed_left.push(s);
                } else {
                    event.changed_right.push(s);
                }
            }
            events.push(event);
            nodes.push(node);
        }
        self.nodes = nodes;
        Ok(events)
    }

    fn set_value(&mut self, m: i64, v: i64) {
        if m <= self.m_lo {
            let pad = (self.m_lo - m + 1) as usize;
            let fill = self.u[0];
            self.u.splice(0..0, std::iter::repeat_n(fill, pad));
            self.m_lo = m - 1;
        }
        let k = (m - self.m_lo) as usize;
        if k + 1 >= self.u.len() {
            let fill = *self.u.last().expect("grid values");
            self.u.resize(k + 2, fill);
        }
        self.u[k] = v;
    }
}

/// Recomputes `∫ |σ_{n+1} - σ_n| ds` over the surviving waves of node `m`
/// from the two states, independently of the step bookkeeping.
pub fn node_speed_variation(before: &GlimmState, after: &GlimmState, m: i64) -> f64 {
    let step = after.flux.step();
    let Some(node) = after.nodes.iter().find(|n| n.m == m) else {
        return 0.0;
    };
    node.ids
        .iter()
        .map(|&s| {
            let (a, b) = before.chord(s);
            let (c, d) = after.chord(s);
            if after.flux.same_line(a, b, c, d) {
                0.0
            } else {
                (after.speed(s) - before.speed(s)).abs() * step
            }
        })
        .sum()
}

/// Left and right participant sets of every interaction node: the
/// rectangles whose union is the interaction domain of the step.
pub fn interaction_domain(events: &[NodeEvent]) -> Vec<(Vec<WaveId>, Vec<WaveId>)> {
    events
        .iter()
        .filter(|e| e.kind == NodeKind::Interaction)
        .map(|e| (e.changed_left.clone(), e.changed_right.clone()))
        .collect()
}
