//! Reduction quivers for Subset-Sum and exact cover by 3-sets, with classical
//! solvers for the source problems.
//!
//! Subset-Sum gadget: frozen `A`, `B`, mutable `C1..Cn`, arrows `Ci -> A`
//! with weight `x_i` and `B -> Ci` with weight 1. Mutating at an odd-parity
//! set `Y` of the `Ci` flips their arrows and puts `sum_{j in Y} x_j` arrows
//! `B -> A`.
//!
//! X3C gadget: frozen `A1..An` and `C`, one mutable `B_i_j_k` per triple,
//! arrows `Ai -> B_X` for `i in X`, `B_X -> C`, and `C -> Ai`. The icebound
//! arrows `C -> Ai` all cancel exactly when the mutated triples partition
//! `[n]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use thiserror::Error;

use crate::explorer::{explore, CommutingOrbit, Dedup, OrbitError, Predicate, SearchLimits};
use crate::quiver::{Arrow, Quiver, QuiverError, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid subset: index {0} is outside 1..={1}")]
    InvalidSubset(usize, usize),
    #[error("target {0} is outside the reduction's validity window (k > 1 and k not among the values)")]
    OutOfValidityWindow(u64),
    #[error("bounded search could not settle the question")]
    Inconclusive,
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

impl GadgetError {
    pub fn code(&self) -> &'static str {
        match self {
            GadgetError::InvalidInstance(_) => "InvalidInstance",
            GadgetError::InvalidSubset(..) => "InvalidSubset",
            GadgetError::OutOfValidityWindow(_) => "OutOfValidityWindow",
            GadgetError::Inconclusive => "Inconclusive",
            GadgetError::Quiver(e) => e.code(),
            GadgetError::Orbit(OrbitError::MutableAdjacency(..)) => "MutableAdjacency",
            GadgetError::Orbit(OrbitError::NonCommutingFamily { .. }) => "NonCommutingFamily",
            GadgetError::Orbit(OrbitError::TooManyMutable(_)) => "TooManyMutable",
        }
    }
}

fn id(name: String) -> VertexId {
    VertexId::new(name).expect("generated vertex names are valid")
}

/// Subset-Sum input: positive values (repeats allowed) and a target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub values: Vec<u64>,
    pub target: Option<u64>,
}

impl SubsetSumInstance {
    pub fn new(values: Vec<u64>, target: Option<u64>) -> Result<Self, GadgetError> {
        validate_values(&values)?;
        Ok(SubsetSumInstance { values, target })
    }
}

/// Text format: comma-separated values on the first line, optional target on
/// the second. Blank lines and `#` comments are ignored.
impl FromStr for SubsetSumInstance {
    type Err = GadgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let first = lines.next().ok_or_else(|| GadgetError::InvalidInstance("missing values line".into()))?;
        let values = parse_values(first)?;
        let target = lines
            .next()
            .map(|l| {
                l.parse::<u64>()
                    .map_err(|_| GadgetError::InvalidInstance(format!("line 2: bad target {l:?}")))
            })
            .transpose()?;
        if let Some(extra) = lines.next() {
            return Err(GadgetError::InvalidInstance(format!("unexpected line {extra:?}")));
        }
        SubsetSumInstance::new(values, target)
    }
}

/// Parses `3,5,7`.
pub fn parse_values(s: &str) -> Result<Vec<u64>, GadgetError> {
    s.split(',')
        .map(str::trim)
        .enumerate()
        .map(|(i, t)| {
            t.parse::<u64>()
                .map_err(|_| GadgetError::InvalidInstance(format!("value {}: {t:?} is not a nonnegative integer", i + 1)))
        })
        .collect()
}

fn validate_values(values: &[u64]) -> Result<(), GadgetError> {
    if values.is_empty() {
        return Err(GadgetError::InvalidInstance("no values".into()));
    }
    if let Some(i) = values.iter().position(|&x| x == 0) {
        return Err(GadgetError::InvalidInstance(format!("value {} is not positive", i + 1)));
    }
    Ok(())
}

pub fn subset_sum_vertex(i: usize) -> VertexId {
    id(format!("C{i}"))
}

/// Closed form of the Subset-Sum gadget after mutating an odd-parity set `Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetForm {
    /// 1-based indices.
    pub subset: BTreeSet<usize>,
    /// `epsilon[j-1]` is `-1` iff `j` is in the subset.
    pub epsilon: Vec<i8>,
    pub y: BigUint,
}

impl GadgetForm {
    pub fn new(values: &[u64], subset: &BTreeSet<usize>) -> Result<Self, GadgetError> {
        validate_values(values)?;
        let n = values.len();
        if let Some(&bad) = subset.iter().find(|&&j| j == 0 || j > n) {
            return Err(GadgetError::InvalidSubset(bad, n));
        }
        let epsilon = (1..=n).map(|j| if subset.contains(&j) { -1 } else { 1 }).collect();
        let y = subset.iter().map(|&j| BigUint::from(values[j - 1])).sum();
        Ok(GadgetForm { subset: subset.clone(), epsilon, y })
    }
}

fn subset_sum_vertices(n: usize) -> Vec<(VertexId, bool)> {
    let mut vertices = vec![(id("A".into()), true), (id("B".into()), true)];
    vertices.extend((1..=n).map(|i| (subset_sum_vertex(i), false)));
    vertices
}

/// Frozen `A`, `B`; mutable `C1..Cn`; `Ci -> A` with weight `x_i`, `B -> Ci`
/// with weight 1.
pub fn build_subset_sum_gadget(values: &[u64]) -> Result<Quiver, GadgetError> {
    gadget_form(values, &BTreeSet::new())
}

/// The quiver the gadget becomes after mutating an odd number of times at
/// exactly the `C_j` with `j` in `subset` (1-based).
pub fn gadget_form(values: &[u64], subset: &BTreeSet<usize>) -> Result<Quiver, GadgetError> {
    let form = GadgetForm::new(values, subset)?;
    let a = id("A".into());
    let b = id("B".into());
    let mut arrows = Vec::with_capacity(2 * values.len() + 1);
    for (j, (&x, &eps)) in values.iter().zip(&form.epsilon).enumerate() {
        let c = subset_sum_vertex(j + 1);
        if eps > 0 {
            arrows.push(Arrow::new(c.clone(), a.clone(), x));
            arrows.push(Arrow::new(b.clone(), c, 1));
        } else {
            arrows.push(Arrow::new(a.clone(), c.clone(), x));
            arrows.push(Arrow::new(c, b.clone(), 1));
        }
    }
    if form.y != BigUint::ZERO {
        arrows.push(Arrow::new(b, a, BigInt::from(form.y)));
    }
    Ok(Quiver::new(subset_sum_vertices(values.len()), arrows)?)
}

/// Pseudo-polynomial dynamic program over reachable sums.
pub fn subset_sum_oracle(values: &[u64], k: u64) -> bool {
    let total: u64 = values.iter().sum();
    if k > total {
        return false;
    }
    let k = k as usize;
    let mut reachable = vec![false; k + 1];
    reachable[0] = true;
    for &x in values {
        let x = x as usize;
        if x > k {
            continue;
        }
        for s in (x..=k).rev() {
            if reachable[s - x] {
                reachable[s] = true;
            }
        }
    }
    reachable[k]
}

/// Whether `k` arrows between two vertices occur in the gadget's mutation
/// class. Only defined for `k > 1` with `k` not among the values.
pub fn decide_k_via_gadget(values: &[u64], k: u64) -> Result<bool, GadgetError> {
    validate_values(values)?;
    if k <= 1 || values.contains(&k) {
        return Err(GadgetError::OutOfValidityWindow(k));
    }
    let q = build_subset_sum_gadget(values)?;
    let target = BigUint::from(k);
    match orbit_any(&q, |m| m.has_pair_with_exactly_k(&target)) {
        Ok(found) => Ok(found.is_some()),
        Err(GadgetError::Orbit(OrbitError::NonCommutingFamily { .. })) => {
            let report = explore(&q, &Predicate::PairExactlyK(target), &SearchLimits::default(), Dedup::Labeled);
            report.answer().ok_or(GadgetError::Inconclusive)
        }
        Err(e) => Err(e),
    }
}

/// First orbit member satisfying `pred`, as its subset of mutated vertices.
fn orbit_any(q: &Quiver, pred: impl Fn(&Quiver) -> bool) -> Result<Option<Vec<VertexId>>, GadgetError> {
    for entry in CommutingOrbit::new(q)? {
        let entry = entry?;
        if pred(&entry.quiver) {
            return Ok(Some(entry.subset));
        }
    }
    Ok(None)
}

/// Exact cover by 3-sets: triples of elements of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X3CInstance {
    n: usize,
    triples: Vec<[usize; 3]>,
}

impl X3CInstance {
    /// Triples are stored sorted. Every element must be covered by some
    /// triple, and triples must be distinct.
    pub fn new(n: usize, triples: Vec<[usize; 3]>) -> Result<Self, GadgetError> {
        if n == 0 {
            return Err(GadgetError::InvalidInstance("n must be positive".into()));
        }
        let mut sorted = Vec::with_capacity(triples.len());
        let mut seen = BTreeSet::new();
        for (t, mut triple) in triples.into_iter().enumerate() {
            triple.sort_unstable();
            if triple[0] == 0 || triple[2] > n {
                return Err(GadgetError::InvalidInstance(format!("triple {}: elements must lie in 1..={n}", t + 1)));
            }
            if triple[0] == triple[1] || triple[1] == triple[2] {
                return Err(GadgetError::InvalidInstance(format!("triple {}: elements must be distinct", t + 1)));
            }
            if !seen.insert(triple) {
                return Err(GadgetError::InvalidInstance(format!("triple {} repeats {:?}", t + 1, triple)));
            }
            sorted.push(triple);
        }
        let covered: BTreeSet<usize> = sorted.iter().flatten().copied().collect();
        if let Some(missing) = (1..=n).find(|i| !covered.contains(i)) {
            return Err(GadgetError::InvalidInstance(format!("element {missing} is in no triple")));
        }
        Ok(X3CInstance { n, triples: sorted })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }
}

/// Text format: `n` on the first line, then one triple `i j k` per line.
impl FromStr for X3CInstance {
    type Err = GadgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, first) = lines.next().ok_or_else(|| GadgetError::InvalidInstance("missing n".into()))?;
        let n = first
            .parse::<usize>()
            .map_err(|_| GadgetError::InvalidInstance(format!("line {line}: bad n {first:?}")))?;
        let mut triples = Vec::new();
        for (line, text) in lines {
            let parts: Vec<usize> = text
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| GadgetError::InvalidInstance(format!("line {line}: bad triple {text:?}")))?;
            let triple: [usize; 3] = parts
                .try_into()
                .map_err(|_| GadgetError::InvalidInstance(format!("line {line}: expected three elements")))?;
            triples.push(triple);
        }
        X3CInstance::new(n, triples)
    }
}

impl fmt::Display for X3CInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for [a, b, c] in &self.triples {
            writeln!(f, "{a} {b} {c}")?;
        }
        Ok(())
    }
}

pub fn x3c_triple_vertex(triple: &[usize; 3]) -> VertexId {
    id(format!("B_{}_{}_{}", triple[0], triple[1], triple[2]))
}

/// Frozen `A1..An`, one mutable `B_i_j_k` per triple, frozen `C`.
pub fn build_x3c_gadget(inst: &X3CInstance) -> Result<Quiver, GadgetError> {
    let a: Vec<VertexId> = (1..=inst.n).map(|i| id(format!("A{i}"))).collect();
    let bs: Vec<VertexId> = inst.triples.iter().map(x3c_triple_vertex).collect();
    let c = id("C".into());
    let vertices = a
        .iter()
        .map(|v| (v.clone(), true))
        .chain(bs.iter().map(|v| (v.clone(), false)))
        .chain(std::iter::once((c.clone(), true)));
    let mut arrows = Vec::new();
    for (triple, b) in inst.triples.iter().zip(&bs) {
        for &i in triple {
            arrows.push(Arrow::new(a[i - 1].clone(), b.clone(), 1));
        }
        arrows.push(Arrow::new(b.clone(), c.clone(), 1));
    }
    for ai in &a {
        arrows.push(Arrow::new(c.clone(), ai.clone(), 1));
    }
    Ok(Quiver::new(vertices, arrows)?)
}

/// Exact cover search, branching on the uncovered element with the fewest
/// usable triples. Returns indices into `inst.triples()`.
pub fn x3c_solve(inst: &X3CInstance) -> Option<Vec<usize>> {
    if !inst.n.is_multiple_of(3) {
        return None;
    }
    let mut by_element: Vec<Vec<usize>> = vec![Vec::new(); inst.n + 1];
    for (t, triple) in inst.triples.iter().enumerate() {
        for &i in triple {
            by_element[i].push(t);
        }
    }
    let mut covered = vec![false; inst.n + 1];
    let mut chosen = Vec::new();
    if cover(inst, &by_element, &mut covered, &mut chosen) {
        chosen.sort_unstable();
        Some(chosen)
    } else {
        None
    }
}

fn cover(inst: &X3CInstance, by_element: &[Vec<usize>], covered: &mut [bool], chosen: &mut Vec<usize>) -> bool {
    let usable = |t: usize, covered: &[bool]| inst.triples[t].iter().all(|&i| !covered[i]);
    let mut best: Option<(usize, usize)> = None;
    for i in 1..=inst.n {
        if covered[i] {
            continue;
        }
        let count = by_element[i].iter().filter(|&&t| usable(t, covered)).count();
        if count == 0 {
            return false;
        }
        if best.is_none_or(|(_, c)| count < c) {
            best = Some((i, count));
        }
    }
    let Some((element, _)) = best else {
        return true;
    };
    for &t in &by_element[element] {
        if !usable(t, covered) {
            continue;
        }
        for &i in &inst.triples[t] {
            covered[i] = true;
        }
        chosen.push(t);
        if cover(inst, by_element, covered, chosen) {
            return true;
        }
        chosen.pop();
        for &i in &inst.triples[t] {
            covered[i] = false;
        }
    }
    false
}

pub fn x3c_oracle(inst: &X3CInstance) -> bool {
    x3c_solve(inst).is_some()
}

/// First subset (in binary counting order) of triple vertices whose
/// mutation removes every icebound arrow.
pub fn find_icebound_free_subset(inst: &X3CInstance) -> Result<Option<Vec<VertexId>>, GadgetError> {
    let q = build_x3c_gadget(inst)?;
    orbit_any(&q, |m| !m.has_icebound_arrows())
}

pub fn decide_icebound_free_via_gadget(inst: &X3CInstance) -> Result<bool, GadgetError> {
    Ok(find_icebound_free_subset(inst)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{MutationSequence, QuiverBuilder};

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn single_value_gadget() {
        let q = build_subset_sum_gadget(&[3]).unwrap();
        let expected = QuiverBuilder::new()
            .frozen("A")
            .frozen("B")
            .mutable("C1")
            .arrow("C1", "A", 3)
            .arrow("B", "C1", 1)
            .build()
            .unwrap();
        assert_eq!(q, expected);
        assert_eq!(build_subset_sum_gadget(&[3, 5]).unwrap().arrow_list().len(), 4);
        assert!(matches!(build_subset_sum_gadget(&[]), Err(GadgetError::InvalidInstance(_))));
        assert!(matches!(build_subset_sum_gadget(&[2, 0]), Err(GadgetError::InvalidInstance(_))));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(gadget_form(&[3, 5], &set(&[])).unwrap(), build_subset_sum_gadget(&[3, 5]).unwrap());
        let both = QuiverBuilder::new()
            .frozen("A")
            .frozen("B")
            .mutable("C1")
            .mutable("C2")
            .arrow("A", "C1", 3)
            .arrow("A", "C2", 5)
            .arrow("C1", "B", 1)
            .arrow("C2", "B", 1)
            .arrow("B", "A", 8)
            .build()
            .unwrap();
        assert_eq!(gadget_form(&[3, 5], &set(&[1, 2])).unwrap(), both);
        let second = QuiverBuilder::new()
            .frozen("A")
            .frozen("B")
            .mutable("C1")
            .mutable("C2")
            .arrow("C1", "A", 3)
            .arrow("A", "C2", 5)
            .arrow("B", "C1", 1)
            .arrow("C2", "B", 1)
            .arrow("B", "A", 5)
            .build()
            .unwrap();
        assert_eq!(gadget_form(&[3, 5], &set(&[2])).unwrap(), second);
        assert_eq!(gadget_form(&[3, 5], &set(&[3])).unwrap_err(), GadgetError::InvalidSubset(3, 2));
        let form = GadgetForm::new(&[3, 5], &set(&[2])).unwrap();
        assert_eq!(form.epsilon, vec![1, -1]);
        assert_eq!(form.y, BigUint::from(5u32));
    }

    #[test]
    fn engine_agrees_with_closed_form_on_small_case() {
        let q = build_subset_sum_gadget(&[3, 5]).unwrap();
        let seq = MutationSequence::from_names(&["C1", "C2"]).unwrap();
        assert_eq!(q.mutate_seq(&seq).unwrap(), gadget_form(&[3, 5], &set(&[1, 2])).unwrap());
    }

    #[test]
    fn subset_sum_dp() {
        assert!(subset_sum_oracle(&[3, 5], 8));
        assert!(!subset_sum_oracle(&[3, 5], 4));
        assert!(subset_sum_oracle(&(1..=10).collect::<Vec<_>>(), 55));
        assert!(subset_sum_oracle(&[3, 5], 0));
        assert!(!subset_sum_oracle(&[3, 5], 9));
        assert!(subset_sum_oracle(&[2, 2], 4));
    }

    #[test]
    fn reduction_for_subset_sum() {
        assert!(decide_k_via_gadget(&[3, 5], 8).unwrap());
        assert!(!decide_k_via_gadget(&[3, 5], 4).unwrap());
        assert_eq!(decide_k_via_gadget(&[2, 2], 2).unwrap_err(), GadgetError::OutOfValidityWindow(2));
        assert_eq!(decide_k_via_gadget(&[3, 5], 1).unwrap_err(), GadgetError::OutOfValidityWindow(1));
        assert_eq!(decide_k_via_gadget(&[3, 5], 0).unwrap_err(), GadgetError::OutOfValidityWindow(0));
        assert!(decide_k_via_gadget(&[2, 2], 4).unwrap());
    }

    #[test]
    fn instance_text_formats() {
        let inst: SubsetSumInstance = "3, 5\n8\n".parse().unwrap();
        assert_eq!(inst.values, vec![3, 5]);
        assert_eq!(inst.target, Some(8));
        assert!("".parse::<SubsetSumInstance>().is_err());
        assert!("3,x".parse::<SubsetSumInstance>().is_err());

        let x: X3CInstance = "6\n1 2 3\n# comment\n4 5 6\n".parse().unwrap();
        assert_eq!(x.n(), 6);
        assert_eq!(x.triples(), &[[1, 2, 3], [4, 5, 6]]);
        assert_eq!(x.to_string().parse::<X3CInstance>().unwrap(), x);
        assert!("3\n1 2\n".parse::<X3CInstance>().is_err());
        assert!("3\n1 2 4\n".parse::<X3CInstance>().is_err());
    }

    #[test]
    fn x3c_instance_validation() {
        assert!(matches!(X3CInstance::new(4, vec![[1, 2, 3]]), Err(GadgetError::InvalidInstance(_))));
        assert!(matches!(X3CInstance::new(3, vec![[1, 1, 3]]), Err(GadgetError::InvalidInstance(_))));
        assert!(matches!(X3CInstance::new(3, vec![[1, 2, 3], [3, 2, 1]]), Err(GadgetError::InvalidInstance(_))));
        assert!(matches!(X3CInstance::new(3, vec![[0, 2, 3]]), Err(GadgetError::InvalidInstance(_))));
    }

    #[test]
    fn smallest_x3c_gadget() {
        let inst = X3CInstance::new(3, vec![[1, 2, 3]]).unwrap();
        let q = build_x3c_gadget(&inst).unwrap();
        let expected = QuiverBuilder::new()
            .frozen("A1")
            .frozen("A2")
            .frozen("A3")
            .mutable("B_1_2_3")
            .frozen("C")
            .arrow("A1", "B_1_2_3", 1)
            .arrow("A2", "B_1_2_3", 1)
            .arrow("A3", "B_1_2_3", 1)
            .arrow("B_1_2_3", "C", 1)
            .arrow("C", "A1", 1)
            .arrow("C", "A2", 1)
            .arrow("C", "A3", 1)
            .build()
            .unwrap();
        assert_eq!(q, expected);
        let ice = q.icebound_pairs();
        assert_eq!(ice.len(), 3);
        assert!(ice.iter().all(|(u, _, m)| u.as_str().starts_with('A') && *m == BigUint::from(1u32)));
        assert!(q.mutate("B_1_2_3").unwrap().icebound_pairs().is_empty());
        assert_eq!(
            find_icebound_free_subset(&inst).unwrap(),
            Some(vec![VertexId::new("B_1_2_3").unwrap()])
        );
    }

    #[test]
    fn x3c_examples() {
        let yes = X3CInstance::new(6, vec![[1, 2, 3], [4, 5, 6], [1, 4, 5]]).unwrap();
        assert!(x3c_oracle(&yes));
        assert_eq!(x3c_solve(&yes), Some(vec![0, 1]));
        let no = X3CInstance::new(6, vec![[1, 2, 3], [1, 4, 5], [2, 4, 6]]).unwrap();
        assert!(!x3c_oracle(&no));
        assert!(!decide_icebound_free_via_gadget(&no).unwrap());
        let disjoint = X3CInstance::new(6, vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        assert!(decide_icebound_free_via_gadget(&disjoint).unwrap());
        let not_multiple_of_three = X3CInstance::new(4, vec![[1, 2, 3], [2, 3, 4]]).unwrap();
        assert!(!x3c_oracle(&not_multiple_of_three));
        assert!(!decide_icebound_free_via_gadget(&not_multiple_of_three).unwrap());
    }

    #[test]
    fn triple_mutations_commute_and_involute() {
        let inst = X3CInstance::new(6, vec![[1, 2, 3], [1, 4, 5], [4, 5, 6]]).unwrap();
        let q = build_x3c_gadget(&inst).unwrap();
        for t in inst.triples() {
            let v = x3c_triple_vertex(t);
            assert_eq!(q.mutate(v.as_str()).unwrap().mutate(v.as_str()).unwrap(), q);
        }
        let (u, v) = (x3c_triple_vertex(&[1, 2, 3]), x3c_triple_vertex(&[1, 4, 5]));
        let uv = q.mutate(u.as_str()).unwrap().mutate(v.as_str()).unwrap();
        let vu = q.mutate(v.as_str()).unwrap().mutate(u.as_str()).unwrap();
        assert_eq!(uv, vu);
        // Element 1 is covered twice: its icebound arrow flips instead of cancelling.
        assert_eq!(uv.exchange("A1", "C").unwrap(), BigInt::from(1));
    }
}
