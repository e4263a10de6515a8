//! Push-pull gossip.
//!
//! When a node activates it picks a partner `u` with probability `P_iu`
//! and both sides end up with the merge of their states: the union of
//! message sets for [`SpreadState`], the component-wise minimum for
//! [`MinVectorState`]. Contacting oneself (probability `P_ii`) is a no-op.
//!
//! Node indices are storage slots owned by the simulator. The exchange
//! rules never inspect them; partner choice goes through
//! [`ContactSampler`].

use serde::{Deserialize, Serialize};

use crate::engine::{SimClock, SyncSemantics, TimeModel};
use crate::graph::TransitionMatrix;
use crate::rng::{uniform_closed_open, SimRng};

/// Per-node protocol state that supports a symmetric push-pull merge.
pub trait GossipState: Clone {
    fn n(&self) -> usize;

    /// Both `a` and `b` take the merge of their two states.
    fn exchange(&mut self, a: usize, b: usize);

    /// Merges the state `src` had in `prior` into `dst`.
    fn absorb(&mut self, dst: usize, prior: &Self, src: usize);
}

/// Draws partners from the rows of a [`TransitionMatrix`] by binary search
/// over cumulative probabilities.
#[derive(Debug, Clone)]
pub struct ContactSampler {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    cumulative: Vec<f64>,
}

impl ContactSampler {
    pub fn new(p: &TransitionMatrix) -> Self {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        for i in 0..p.n() {
            let mut acc = 0.0;
            for &(j, pij) in p.row(i) {
                acc += pij;
                targets.push(j);
                cumulative.push(acc);
            }
            offsets.push(targets.len());
        }
        ContactSampler {
            offsets,
            targets,
            cumulative,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn sample(&self, i: usize, rng: &mut SimRng) -> usize {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        let cum = &self.cumulative[lo..hi];
        let total = cum[cum.len() - 1];
        let u = uniform_closed_open(rng) * total;
        let k = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.targets[lo + k]
    }
}

/// Message sets `M_i`, one bitset over message origins per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadState {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    sizes: Vec<usize>,
    complete_nodes: usize,
}

impl SpreadState {
    /// Each node starts holding only its own message.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            bits[i * words + i / 64] |= 1 << (i % 64);
        }
        SpreadState {
            n,
            words,
            bits,
            sizes: vec![1; n],
            complete_nodes: if n == 1 { 1 } else { 0 },
        }
    }

    fn set(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn holds(&self, node: usize, origin: usize) -> bool {
        self.set(node)[origin / 64] >> (origin % 64) & 1 == 1
    }

    /// `|M_i|`.
    pub fn message_count(&self, node: usize) -> usize {
        self.sizes[node]
    }

    /// Origins of the messages node `node` holds, ascending.
    pub fn messages(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&o| self.holds(node, o))
    }

    pub fn total_messages(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// True once every node holds every message.
    pub fn spreading_complete(&self) -> bool {
        self.complete_nodes == self.n
    }

    fn union_into(&mut self, dst: usize, other: &[u64]) {
        let before = self.sizes[dst];
        let set = &mut self.bits[dst * self.words..(dst + 1) * self.words];
        let mut count = 0;
        for (w, o) in set.iter_mut().zip(other) {
            *w |= o;
            count += w.count_ones() as usize;
        }
        self.sizes[dst] = count;
        if before < self.n && count == self.n {
            self.complete_nodes += 1;
        }
    }
}

impl GossipState for SpreadState {
    fn n(&self) -> usize {
        self.n
    }

    fn exchange(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.bits.split_at_mut(hi * w);
        let x = &mut head[lo * w..(lo + 1) * w];
        let y = &mut tail[..w];
        let mut count = 0;
        for (p, q) in x.iter_mut().zip(y.iter_mut()) {
            let u = *p | *q;
            *p = u;
            *q = u;
            count += u.count_ones() as usize;
        }
        for node in [a, b] {
            if self.sizes[node] < self.n && count == self.n {
                self.complete_nodes += 1;
            }
            self.sizes[node] = count;
        }
    }

    fn absorb(&mut self, dst: usize, prior: &Self, src: usize) {
        self.union_into(dst, prior.set(src));
    }
}

/// Running minimum vectors `w^i`, `r` components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MinVectorState {
    n: usize,
    r: usize,
    values: Vec<f64>,
}

impl MinVectorState {
    /// `vectors[i]` is node `i`'s initial vector; all must have length `r`.
    pub fn new(vectors: &[Vec<f64>]) -> crate::Result<Self> {
        let r = vectors.first().map_or(0, Vec::len);
        if r == 0 {
            return Err(crate::Error::invalid("min-vector state needs r >= 1 and n >= 1"));
        }
        let mut values = Vec::with_capacity(vectors.len() * r);
        for v in vectors {
            if v.len() != r {
                return Err(crate::Error::DimensionMismatch {
                    expected: r,
                    got: v.len(),
                });
            }
            values.extend_from_slice(v);
        }
        Ok(MinVectorState {
            n: vectors.len(),
            r,
            values,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn vector(&self, node: usize) -> &[f64] {
        &self.values[node * self.r..(node + 1) * self.r]
    }
}

impl GossipState for MinVectorState {
    fn n(&self) -> usize {
        self.n
    }

    fn exchange(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let r = self.r;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.values.split_at_mut(hi * r);
        for (x, y) in head[lo * r..(lo + 1) * r].iter_mut().zip(&mut tail[..r]) {
            let m = x.min(*y);
            *x = m;
            *y = m;
        }
    }

    fn absorb(&mut self, dst: usize, prior: &Self, src: usize) {
        let r = self.r;
        let from = prior.vector(src);
        for (x, y) in self.values[dst * r..(dst + 1) * r].iter_mut().zip(from) {
            *x = x.min(*y);
        }
    }
}

/// A message-set run and a min-vector run driven by the same contacts.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirrored {
    pub spread: SpreadState,
    pub minima: MinVectorState,
}

impl GossipState for Mirrored {
    fn n(&self) -> usize {
        self.spread.n
    }

    fn exchange(&mut self, a: usize, b: usize) {
        self.spread.exchange(a, b);
        self.minima.exchange(a, b);
    }

    fn absorb(&mut self, dst: usize, prior: &Self, src: usize) {
        self.spread.absorb(dst, &prior.spread, src);
        self.minima.absorb(dst, &prior.minima, src);
    }
}

/// Link capacity used for the minimum computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capacity {
    /// A whole `r`-vector crosses a link in one contact.
    #[default]
    Infinite,
    /// One number per contact: every contact takes `r` time units.
    Unit,
}

/// Factor applied to the time axis of a spreading run to obtain the
/// min-computation time under `mode`.
pub fn capacity_time_multiplier(mode: Capacity, r: usize) -> u64 {
    assert!(r >= 1, "r must be positive");
    match mode {
        Capacity::Infinite => 1,
        Capacity::Unit => r as u64,
    }
}

/// One node-initiated contact, as seen by a run observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exchange {
    /// Clock event index, starting at 1 (tick or slot).
    pub event: u64,
    pub time: f64,
    pub initiator: usize,
    pub partner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// Absolute time at which `done` first held.
    pub completion_time: f64,
    pub events: u64,
    pub contacts: u64,
}

/// Node `initiator` contacts a partner drawn from its row and exchanges.
/// Returns the partner.
pub fn gossip_step<S: GossipState>(
    state: &mut S,
    initiator: usize,
    sampler: &ContactSampler,
    rng: &mut SimRng,
) -> usize {
    let partner = sampler.sample(initiator, rng);
    state.exchange(initiator, partner);
    partner
}

/// Drives `state` with activation events from `clock` until `done` holds.
///
/// `observe` sees every contact after it has been applied. Under
/// [`SyncSemantics::Snapshot`] a slot's contacts are applied together and
/// observed after the slot commits.
pub fn run_until<S, D, O>(
    state: &mut S,
    clock: &mut SimClock,
    sampler: &ContactSampler,
    rng: &mut SimRng,
    semantics: SyncSemantics,
    done: D,
    mut observe: O,
) -> RunSummary
where
    S: GossipState,
    D: Fn(&S) -> bool,
    O: FnMut(&Exchange, &S),
{
    debug_assert_eq!(state.n(), sampler.n());
    let mut contacts = 0;
    if done(state) {
        return RunSummary {
            completion_time: clock.absolute_time(),
            events: clock.tick_index(),
            contacts,
        };
    }
    let snapshot = clock.model() == TimeModel::Sync && semantics == SyncSemantics::Snapshot;
    let mut pairs = Vec::new();
    loop {
        let event = clock.tick_index() + 1;
        let ev = clock.next_event();
        let time = ev.time;
        if snapshot {
            pairs.clear();
            pairs.extend(ev.initiators.iter().map(|&i| (i, sampler.sample(i, rng))));
            let prior = state.clone();
            for &(i, u) in &pairs {
                if i != u {
                    state.absorb(i, &prior, u);
                    state.absorb(u, &prior, i);
                }
            }
            for &(initiator, partner) in &pairs {
                contacts += 1;
                observe(&Exchange { event, time, initiator, partner }, state);
            }
        } else {
            for &initiator in ev.initiators {
                let partner = gossip_step(state, initiator, sampler, rng);
                contacts += 1;
                observe(&Exchange { event, time, initiator, partner }, state);
            }
        }
        if done(state) {
            return RunSummary {
                completion_time: time,
                events: event,
                contacts,
            };
        }
    }
}
