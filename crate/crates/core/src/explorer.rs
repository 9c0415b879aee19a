//! Bounded breadth-first exploration of mutation classes.
//!
//! Exploration is a semi-decision procedure: a witness proves the property,
//! an exhausted search proves its absence, and anything else is reported as
//! truncated with the limits that were hit.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::canonical::{canonical_key, CanonicalKey};
use crate::quiver::{Entries, MutationSequence, Quiver, QuiverError, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_states: u64,
    pub max_depth: Option<u32>,
    pub max_multiplicity: Option<BigUint>,
    pub time_budget: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 1_000_000,
            max_depth: None,
            max_multiplicity: Some(BigUint::one() << 64u32),
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LimitsError {
    #[error("limit {0} must be at least 1")]
    NotPositive(&'static str),
}

impl SearchLimits {
    /// No limits except the state count.
    pub fn unbounded(max_states: u64) -> Self {
        SearchLimits { max_states, max_depth: None, max_multiplicity: None, time_budget: None }
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        if self.max_states == 0 {
            return Err(LimitsError::NotPositive("max_states"));
        }
        if self.max_depth == Some(0) {
            return Err(LimitsError::NotPositive("max_depth"));
        }
        if self.max_multiplicity.as_ref().is_some_and(|m| *m == BigUint::ZERO) {
            return Err(LimitsError::NotPositive("max_multiplicity"));
        }
        if self.time_budget == Some(Duration::ZERO) {
            return Err(LimitsError::NotPositive("time_budget_ms"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// Some pair of vertices has exactly `k` arrows between it.
    PairExactlyK(BigUint),
    /// No arrows between frozen vertices.
    NoIcebound,
    /// Never satisfied; records `|b_uv|` over every visited state.
    CollectPairMultiplicities(VertexId, VertexId),
}

impl Predicate {
    fn holds(&self, q: &Quiver) -> bool {
        match self {
            Predicate::PairExactlyK(k) => q.has_pair_with_exactly_k(k),
            Predicate::NoIcebound => !q.has_icebound_arrows(),
            Predicate::CollectPairMultiplicities(..) => false,
        }
    }

    /// Checks that the vertices a predicate names exist in `q`.
    pub fn check_against(&self, q: &Quiver) -> Result<(), QuiverError> {
        if let Predicate::CollectPairMultiplicities(u, v) = self {
            q.multiplicity(u.as_str(), v.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dedup {
    Labeled,
    Isomorphism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Limit {
    MaxStates,
    MaxDepth,
    MaxMultiplicity,
    TimeBudget,
}

impl Limit {
    pub fn name(self) -> &'static str {
        match self {
            Limit::MaxStates => "max_states",
            Limit::MaxDepth => "max_depth",
            Limit::MaxMultiplicity => "max_multiplicity",
            Limit::TimeBudget => "time_budget_ms",
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationReport {
    pub visited: u64,
    pub dedup_mode: Dedup,
    /// The whole class was enumerated within the limits.
    pub exhausted: bool,
    /// Mutation sequence from the root to a state satisfying the predicate.
    pub witness: Option<MutationSequence>,
    pub truncated_by: BTreeSet<Limit>,
    pub collected: Option<BTreeSet<BigUint>>,
}

impl ExplorationReport {
    /// `Some(true)` with a witness, `Some(false)` when exhausted without one,
    /// `None` when the limits cut the search short.
    pub fn answer(&self) -> Option<bool> {
        if self.witness.is_some() {
            Some(true)
        } else if self.exhausted {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum StateKey {
    Labeled(Entries),
    Iso(CanonicalKey),
}

fn state_key(q: &Quiver, dedup: Dedup) -> StateKey {
    match dedup {
        Dedup::Labeled => StateKey::Labeled(q.entries().clone()),
        Dedup::Isomorphism => StateKey::Iso(canonical_key(q)),
    }
}

struct Node {
    parent: Option<usize>,
    via: usize,
}

fn path_to(nodes: &[Node], mut at: usize, q: &Quiver) -> MutationSequence {
    let mut steps = Vec::new();
    while let Some(parent) = nodes[at].parent {
        steps.push(q.vertices()[nodes[at].via].clone());
        at = parent;
    }
    steps.reverse();
    MutationSequence(steps)
}

/// Result of [`enumerate_class`]: the report and one representative per
/// visited state, in discovery order.
#[derive(Debug, Clone)]
pub struct ClassEnumeration {
    pub report: ExplorationReport,
    pub states: Vec<Quiver>,
}

fn run(
    root: &Quiver,
    predicate: Option<&Predicate>,
    limits: &SearchLimits,
    dedup: Dedup,
    keep_states: bool,
) -> (ExplorationReport, Vec<Quiver>) {
    let start = Instant::now();
    let max_states = limits.max_states.max(1);
    let collect_pair = match predicate {
        Some(Predicate::CollectPairMultiplicities(u, v)) => {
            match (root.index_of(u.as_str()), root.index_of(v.as_str())) {
                (Ok(i), Ok(j)) if i != j => Some((i, j)),
                _ => None,
            }
        }
        _ => None,
    };
    let mut collected = predicate
        .filter(|p| matches!(p, Predicate::CollectPairMultiplicities(..)))
        .map(|_| BTreeSet::new());
    let mutable = root.mutable_indices();

    let mut seen: HashSet<StateKey> = HashSet::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue: VecDeque<(usize, u32, Quiver)> = VecDeque::new();
    let mut states = Vec::new();
    let mut truncated_by = BTreeSet::new();
    let mut witness = None;

    let admit = |q: &Quiver, collected: &mut Option<BTreeSet<BigUint>>, states: &mut Vec<Quiver>| {
        if let (Some((i, j)), Some(set)) = (collect_pair, collected.as_mut()) {
            set.insert(q.abs_ref(i, j).magnitude().clone());
        }
        if keep_states {
            states.push(q.clone());
        }
    };

    seen.insert(state_key(root, dedup));
    nodes.push(Node { parent: None, via: 0 });
    admit(root, &mut collected, &mut states);
    queue.push_back((0, 0, root.clone()));

    let mut expansions: u64 = 0;
    'search: while let Some((id, depth, q)) = queue.pop_front() {
        expansions += 1;
        if expansions.is_multiple_of(64) {
            if let Some(budget) = limits.time_budget {
                if start.elapsed() >= budget {
                    truncated_by.insert(Limit::TimeBudget);
                    break;
                }
            }
        }
        let satisfied = predicate.is_some_and(|p| p.holds(&q));
        let too_big = limits.max_multiplicity.as_ref().is_some_and(|m| q.max_multiplicity() > *m);
        if too_big {
            truncated_by.insert(Limit::MaxMultiplicity);
        } else {
            let at_depth_limit = limits.max_depth.is_some_and(|d| depth >= d);
            for &v in &mutable {
                let child = q.mutate_index(v).expect("mutable vertex");
                let key = state_key(&child, dedup);
                if seen.contains(&key) {
                    continue;
                }
                if at_depth_limit {
                    truncated_by.insert(Limit::MaxDepth);
                    break;
                }
                if nodes.len() as u64 >= max_states {
                    truncated_by.insert(Limit::MaxStates);
                    if !satisfied {
                        break 'search;
                    }
                    break;
                }
                seen.insert(key);
                let child_id = nodes.len();
                nodes.push(Node { parent: Some(id), via: v });
                admit(&child, &mut collected, &mut states);
                queue.push_back((child_id, depth + 1, child));
            }
        }
        if satisfied {
            witness = Some(path_to(&nodes, id, root));
            break;
        }
    }

    let exhausted = queue.is_empty() && truncated_by.is_empty();
    let report = ExplorationReport {
        visited: nodes.len() as u64,
        dedup_mode: dedup,
        exhausted,
        witness,
        truncated_by,
        collected,
    };
    (report, states)
}

/// Breadth-first search over the mutation class of `q`.
///
/// States are expanded in discovery order and children generated in vertex
/// order, so a returned witness is the lexicographically least among the
/// shortest ones. The state satisfying the predicate is itself expanded
/// before the search stops, which lets small classes still be reported as
/// exhausted.
pub fn explore(q: &Quiver, predicate: &Predicate, limits: &SearchLimits, dedup: Dedup) -> ExplorationReport {
    run(q, Some(predicate), limits, dedup, false).0
}

/// Enumerates the mutation class of `q` within the limits, keeping one
/// representative per state.
pub fn enumerate_class(q: &Quiver, limits: &SearchLimits, dedup: Dedup) -> ClassEnumeration {
    let (report, states) = run(q, None, limits, dedup, true);
    ClassEnumeration { report, states }
}

/// Report for a plain enumeration of the class, without keeping states.
pub fn class_report(q: &Quiver, limits: &SearchLimits, dedup: Dedup) -> ExplorationReport {
    run(q, None, limits, dedup, false).0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrbitError {
    #[error("mutable vertices {0} and {1} are adjacent")]
    MutableAdjacency(VertexId, VertexId),
    #[error("mutations stop commuting after mutating at {subset:?}")]
    NonCommutingFamily { subset: Vec<VertexId> },
    #[error("{0} mutable vertices is too many to enumerate all subsets")]
    TooManyMutable(usize),
}

/// Largest number of mutable vertices accepted by [`CommutingOrbit`].
pub const MAX_ORBIT_MUTABLE: usize = 40;

/// One member of a commuting orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitEntry {
    /// Bit `i` set iff the `i`-th mutable vertex (in vertex order) is used.
    pub mask: u64,
    pub subset: Vec<VertexId>,
    pub quiver: Quiver,
}

/// Streaming enumeration of the quivers obtained by mutating each subset of
/// the mutable vertices once, when those vertices are pairwise nonadjacent.
///
/// Subsets come in binary counting order. Each quiver is derived from the
/// previous one by the mutations of the bits that flip, which is valid
/// because every produced quiver is checked to keep the mutable vertices
/// pairwise nonadjacent; on top of that a deterministic sample of subsets is
/// recomputed from the root in reverse order and compared.
pub struct CommutingOrbit {
    root: Quiver,
    mutable: Vec<usize>,
    next_mask: u64,
    end: u64,
    current: Quiver,
    current_mask: u64,
    sample_stride: u64,
    failed: bool,
}

impl CommutingOrbit {
    pub fn new(q: &Quiver) -> Result<Self, OrbitError> {
        let mutable = q.mutable_indices();
        if mutable.len() > MAX_ORBIT_MUTABLE {
            return Err(OrbitError::TooManyMutable(mutable.len()));
        }
        if let Some((a, b)) = adjacent_mutable_pair(q, &mutable) {
            return Err(OrbitError::MutableAdjacency(q.vertices()[a].clone(), q.vertices()[b].clone()));
        }
        let end = 1u64 << mutable.len();
        Ok(CommutingOrbit {
            root: q.clone(),
            mutable,
            next_mask: 0,
            end,
            current: q.clone(),
            current_mask: 0,
            sample_stride: (end / 64).max(1),
            failed: false,
        })
    }

    /// Number of subsets, `2^m`.
    pub fn size(&self) -> u64 {
        self.end
    }

    fn subset_ids(&self, mask: u64) -> Vec<VertexId> {
        self.mutable
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &v)| self.root.vertices()[v].clone())
            .collect()
    }

    fn step(&mut self, mask: u64) -> Result<Quiver, OrbitError> {
        let fail = |this: &Self| OrbitError::NonCommutingFamily { subset: this.subset_ids(mask) };
        let flips = self.current_mask ^ mask;
        let mut q = self.current.clone();
        for (bit, &v) in self.mutable.iter().enumerate() {
            if flips >> bit & 1 == 1 {
                q = q.mutate_index(v).expect("mutable vertex");
            }
        }
        if adjacent_mutable_pair(&q, &self.mutable).is_some() {
            return Err(fail(self));
        }
        if mask.count_ones() >= 2 && mask.is_multiple_of(self.sample_stride) {
            let mut reversed = self.root.clone();
            for (bit, &v) in self.mutable.iter().enumerate().rev() {
                if mask >> bit & 1 == 1 {
                    reversed = reversed.mutate_index(v).expect("mutable vertex");
                }
            }
            if reversed != q {
                return Err(fail(self));
            }
        }
        Ok(q)
    }
}

impl Iterator for CommutingOrbit {
    type Item = Result<OrbitEntry, OrbitError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next_mask >= self.end {
            return None;
        }
        let mask = self.next_mask;
        self.next_mask += 1;
        match self.step(mask) {
            Ok(q) => {
                self.current = q.clone();
                self.current_mask = mask;
                Some(Ok(OrbitEntry { mask, subset: self.subset_ids(mask), quiver: q }))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

fn adjacent_mutable_pair(q: &Quiver, mutable: &[usize]) -> Option<(usize, usize)> {
    for (a, &u) in mutable.iter().enumerate() {
        for &v in &mutable[a + 1..] {
            if q.b_sign(u, v) != num_bigint::Sign::NoSign {
                return Some((u, v));
            }
        }
    }
    None
}

/// The full commuting orbit of `q` as a list.
pub fn commuting_orbit(q: &Quiver) -> Result<Vec<OrbitEntry>, OrbitError> {
    CommutingOrbit::new(q)?.collect()
}
