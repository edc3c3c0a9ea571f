//! Trees of a wavefront tracking event log.
//!
//! A splitting is a cancellation whose outgoing Riemann problem has more
//! than one front. The tree of a splitting gathers the backward trajectories
//! of the waves surviving it, each followed until time zero or until the last
//! earlier splitting it took part in.

use serde::Serialize;

use crate::wft::{Event, EventKind, WaveId};

/// True when the event is a cancellation producing several fronts.
pub fn is_splitting(ev: &Event) -> bool {
    ev.kind == EventKind::Cancellation && ev.outgoing.len() > 1
}

/// Events of one tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    /// Position of the splitting in the event list.
    pub root: usize,
    /// Positions of the tree events, increasing, ending with the root.
    pub events: Vec<usize>,
    /// Waves surviving the splitting.
    pub waves: Vec<WaveId>,
    /// Interactions in the tree.
    pub interactions: usize,
    /// Cancellations in the tree, the root included.
    pub cancellations: usize,
}

struct Traced {
    member: Vec<bool>,
    prefix: Vec<u32>,
}

impl Traced {
    fn new(member: Vec<bool>) -> Self {
        let mut t = Self { member, prefix: Vec::new() };
        t.rebuild();
        t
    }

    fn rebuild(&mut self) {
        self.prefix = std::iter::once(0)
            .chain(self.member.iter().scan(0u32, |acc, &m| {
                *acc += m as u32;
                Some(*acc)
            }))
            .collect();
    }

    fn hits(&self, runs: &[(WaveId, WaveId)]) -> bool {
        runs.iter().any(|&(a, b)| self.prefix[b as usize] > self.prefix[a as usize - 1])
    }
}

/// Tree of the splitting at position `root` of `events`, over `n_waves` wave ids.
pub fn tree_at(events: &[Event], root: usize, n_waves: usize) -> Tree {
    let mut member = vec![false; n_waves];
    let mut waves = Vec::new();
    for runs in &events[root].outgoing_ids {
        for &(a, b) in runs {
            for id in a..=b {
                member[id as usize - 1] = true;
                waves.push(id);
            }
        }
    }
    let mut traced = Traced::new(member);
    let mut picked = vec![root];
    for j in (0..root).rev() {
        let ev = &events[j];
        let involved: Vec<&Vec<(WaveId, WaveId)>> = ev.outgoing_ids.iter().filter(|r| traced.hits(r)).collect();
        if involved.is_empty() {
            continue;
        }
        if is_splitting(ev) {
            for runs in involved {
                for &(a, b) in runs {
                    for id in a..=b {
                        traced.member[id as usize - 1] = false;
                    }
                }
            }
            traced.rebuild();
        } else {
            picked.push(j);
        }
    }
    picked.reverse();
    let interactions = picked.iter().filter(|&&j| events[j].kind == EventKind::Interaction).count();
    let cancellations = picked.len() - interactions;
    Tree { root, events: picked, waves, interactions, cancellations }
}

/// Trees of every splitting of the log.
pub fn trees(events: &[Event], n_waves: usize) -> Vec<Tree> {
    (0..events.len()).filter(|&j| is_splitting(&events[j])).map(|j| tree_at(events, j, n_waves)).collect()
}
