//! Quivers with frozen vertices and their mutations.
//!
//! A quiver is stored as a skew-symmetric exchange matrix `b` where `b[i][j]`
//! is the number of arrows `i -> j` minus the number of arrows `j -> i`.
//! Arrows between two frozen vertices (icebound arrows) are kept and take part
//! in mutation like any other arrow.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Quivers with at most this many vertices use dense triangular storage.
pub const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("invalid vertex id {0:?}: ids must be nonempty and contain no whitespace or commas")]
    InvalidVertexId(String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("arrow from {0} to itself")]
    SelfLoop(String),
    #[error("arrows between {0} and {1} given in both directions")]
    TwoCycleInInput(String, String),
    #[error("more than one arrow record from {0} to {1}")]
    DuplicateArrow(String, String),
    #[error("arrow {from} -> {to} has nonpositive weight")]
    NonpositiveWeight { from: String, to: String },
    #[error("cannot mutate at frozen vertex {0}")]
    FrozenVertexMutation(String),
    #[error("a quiver needs at least one vertex")]
    NoVertices,
    #[error("the vertex subset is empty")]
    EmptySubset,
    #[error("multiplicity of a vertex with itself ({0}) is undefined")]
    SameVertex(String),
    #[error("step {index} of the mutation sequence failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<QuiverError>,
    },
}

impl QuiverError {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            QuiverError::InvalidVertexId(_) => "InvalidVertexId",
            QuiverError::DuplicateVertex(_) => "DuplicateVertex",
            QuiverError::UnknownVertex(_) => "UnknownVertex",
            QuiverError::SelfLoop(_) => "SelfLoop",
            QuiverError::TwoCycleInInput(..) => "TwoCycleInInput",
            QuiverError::DuplicateArrow(..) => "DuplicateArrow",
            QuiverError::NonpositiveWeight { .. } => "NonpositiveWeight",
            QuiverError::FrozenVertexMutation(_) => "FrozenVertexMutation",
            QuiverError::NoVertices => "NoVertices",
            QuiverError::EmptySubset => "EmptySubset",
            QuiverError::SameVertex(_) => "SameVertex",
            QuiverError::Step { source, .. } => source.code(),
        }
    }
}

/// Name of a vertex. Nonempty, without whitespace or commas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Result<Self, QuiverError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(QuiverError::InvalidVertexId(name));
        }
        Ok(VertexId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for VertexId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for VertexId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<&str> for VertexId {
    type Error = QuiverError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        VertexId::new(value)
    }
}

/// An arrow record used to build a quiver: `weight` arrows `from -> to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub from: VertexId,
    pub to: VertexId,
    pub weight: BigInt,
}

impl Arrow {
    pub fn new(from: VertexId, to: VertexId, weight: impl Into<BigInt>) -> Self {
        Arrow { from, to, weight: weight.into() }
    }
}

/// An ordered list of vertices to mutate at, applied left to right.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MutationSequence(pub Vec<VertexId>);

impl MutationSequence {
    pub fn new(steps: Vec<VertexId>) -> Self {
        MutationSequence(steps)
    }

    /// Parses names such as `["C1", "C2"]`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, QuiverError> {
        names
            .iter()
            .map(|s| VertexId::new(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map(MutationSequence)
    }

    pub fn steps(&self) -> &[VertexId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for MutationSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, PartialEq, Eq)]
struct VertexTable {
    ids: Vec<VertexId>,
    frozen: Vec<bool>,
    index: HashMap<VertexId, usize>,
}

impl VertexTable {
    fn new(vertices: Vec<(VertexId, bool)>) -> Result<Self, QuiverError> {
        if vertices.is_empty() {
            return Err(QuiverError::NoVertices);
        }
        let mut index = HashMap::with_capacity(vertices.len());
        let mut ids = Vec::with_capacity(vertices.len());
        let mut frozen = Vec::with_capacity(vertices.len());
        for (i, (id, f)) in vertices.into_iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(QuiverError::DuplicateVertex(id.0));
            }
            ids.push(id);
            frozen.push(f);
        }
        Ok(VertexTable { ids, frozen, index })
    }
}

/// Strict upper triangle of the exchange matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Entries {
    /// Row-major strict upper triangle, `n(n-1)/2` entries.
    Dense(Vec<BigInt>),
    /// Nonzero entries keyed by `(i, j)` with `i < j`.
    Sparse(BTreeMap<(u32, u32), BigInt>),
}

impl Entries {
    fn zeros(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            Entries::Dense(vec![BigInt::zero(); n * n.saturating_sub(1) / 2])
        } else {
            Entries::Sparse(BTreeMap::new())
        }
    }

    #[inline]
    fn dense_slot(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// `b[i][j]` for `i < j`.
    #[inline]
    fn upper(&self, n: usize, i: usize, j: usize) -> &BigInt {
        match self {
            Entries::Dense(v) => &v[Self::dense_slot(n, i, j)],
            Entries::Sparse(m) => m.get(&(i as u32, j as u32)).unwrap_or(&BigInt::ZERO),
        }
    }

    fn set_upper(&mut self, n: usize, i: usize, j: usize, value: BigInt) {
        match self {
            Entries::Dense(v) => v[Self::dense_slot(n, i, j)] = value,
            Entries::Sparse(m) => {
                if value.is_zero() {
                    m.remove(&(i as u32, j as u32));
                } else {
                    m.insert((i as u32, j as u32), value);
                }
            }
        }
    }
}

/// A quiver: vertices with frozen flags and a skew-symmetric exchange matrix.
///
/// Values are immutable; every operation returns a new quiver. Equality is
/// labeled equality: same vertex ids in the same order, same frozen flags,
/// same matrix.
#[derive(Debug, Clone)]
pub struct Quiver {
    table: Arc<VertexTable>,
    entries: Entries,
}

impl PartialEq for Quiver {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.table, &other.table) || self.table == other.table)
            && self.entries == other.entries
    }
}

impl Eq for Quiver {}

impl Hash for Quiver {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.table.ids.hash(state);
        self.entries.hash(state);
    }
}

impl Quiver {
    /// Builds a quiver from vertices and arrow records.
    ///
    /// Each unordered pair may appear in at most one record, in one direction.
    pub fn new(
        vertices: impl IntoIterator<Item = (VertexId, bool)>,
        arrows: impl IntoIterator<Item = Arrow>,
    ) -> Result<Self, QuiverError> {
        let table = VertexTable::new(vertices.into_iter().collect())?;
        let n = table.ids.len();
        let mut entries = Entries::zeros(n);
        let mut seen: HashMap<(usize, usize), bool> = HashMap::new();
        for arrow in arrows {
            let i = *table
                .index
                .get(&arrow.from)
                .ok_or_else(|| QuiverError::UnknownVertex(arrow.from.0.clone()))?;
            let j = *table
                .index
                .get(&arrow.to)
                .ok_or_else(|| QuiverError::UnknownVertex(arrow.to.0.clone()))?;
            if i == j {
                return Err(QuiverError::SelfLoop(arrow.from.0));
            }
            if !arrow.weight.is_positive() {
                return Err(QuiverError::NonpositiveWeight { from: arrow.from.0, to: arrow.to.0 });
            }
            let key = (i.min(j), i.max(j));
            let forward = i < j;
            if let Some(&prev) = seen.get(&key) {
                return Err(if prev == forward {
                    QuiverError::DuplicateArrow(arrow.from.0, arrow.to.0)
                } else {
                    QuiverError::TwoCycleInInput(arrow.from.0, arrow.to.0)
                });
            }
            seen.insert(key, forward);
            let value = if forward { arrow.weight } else { -arrow.weight };
            entries.set_upper(n, key.0, key.1, value);
        }
        Ok(Quiver { table: Arc::new(table), entries })
    }

    /// Builds a quiver directly from a full exchange matrix. The matrix must be
    /// skew-symmetric.
    pub fn from_matrix(
        vertices: impl IntoIterator<Item = (VertexId, bool)>,
        matrix: &[Vec<BigInt>],
    ) -> Result<Self, QuiverError> {
        let table = VertexTable::new(vertices.into_iter().collect())?;
        let n = table.ids.len();
        assert_eq!(matrix.len(), n, "matrix has wrong number of rows");
        let mut entries = Entries::zeros(n);
        for i in 0..n {
            assert_eq!(matrix[i].len(), n, "matrix row {i} has wrong length");
            assert!(matrix[i][i].is_zero(), "diagonal entry {i} is nonzero");
            for j in i + 1..n {
                assert_eq!(matrix[i][j], -&matrix[j][i], "matrix is not skew-symmetric at ({i},{j})");
                entries.set_upper(n, i, j, matrix[i][j].clone());
            }
        }
        Ok(Quiver { table: Arc::new(table), entries })
    }

    pub fn len(&self) -> usize {
        self.table.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.ids.is_empty()
    }

    /// Vertex ids in construction order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.table.ids
    }

    pub fn is_frozen_at(&self, index: usize) -> bool {
        self.table.frozen[index]
    }

    pub fn frozen_flags(&self) -> &[bool] {
        &self.table.frozen
    }

    pub fn index_of(&self, v: &str) -> Result<usize, QuiverError> {
        self.table
            .index
            .get(v)
            .copied()
            .ok_or_else(|| QuiverError::UnknownVertex(v.to_string()))
    }

    pub fn is_frozen(&self, v: &str) -> Result<bool, QuiverError> {
        Ok(self.table.frozen[self.index_of(v)?])
    }

    pub fn mutable_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.table.frozen[i]).collect()
    }

    pub fn frozen_count(&self) -> usize {
        self.table.frozen.iter().filter(|&&f| f).count()
    }

    /// Exchange value `b[i][j]` by index.
    pub fn b(&self, i: usize, j: usize) -> BigInt {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => BigInt::zero(),
            Less => self.entries.upper(self.len(), i, j).clone(),
            Greater => -self.entries.upper(self.len(), j, i),
        }
    }

    /// Sign of `b[i][j]` without allocating.
    pub fn b_sign(&self, i: usize, j: usize) -> Sign {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Sign::NoSign,
            Less => self.entries.upper(self.len(), i, j).sign(),
            Greater => -self.entries.upper(self.len(), j, i).sign(),
        }
    }

    /// Magnitude of `b[i][j]` by reference.
    pub(crate) fn abs_ref(&self, i: usize, j: usize) -> &BigInt {
        if i == j {
            return &BigInt::ZERO;
        }
        self.entries.upper(self.len(), i.min(j), i.max(j))
    }

    /// Exchange value `b[u][v]` by vertex name.
    pub fn exchange(&self, u: &str, v: &str) -> Result<BigInt, QuiverError> {
        Ok(self.b(self.index_of(u)?, self.index_of(v)?))
    }

    /// Full exchange matrix.
    pub fn matrix(&self) -> Vec<Vec<BigInt>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.b(i, j)).collect()).collect()
    }

    pub(crate) fn entries(&self) -> &Entries {
        &self.entries
    }

    /// Mutation at the vertex with the given index.
    pub fn mutate_index(&self, v: usize) -> Result<Quiver, QuiverError> {
        if self.table.frozen[v] {
            return Err(QuiverError::FrozenVertexMutation(self.table.ids[v].0.clone()));
        }
        let n = self.len();
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for k in 0..n {
            match self.b_sign(k, v) {
                Sign::Plus => sources.push((k, self.b(k, v))),
                Sign::Minus => targets.push((k, self.b(v, k))),
                Sign::NoSign => {}
            }
        }
        let mut entries = self.entries.clone();
        // b'_ij = b_ij + sgn(b_iv) max(b_iv b_vj, 0): only pairs i -> v -> j
        // (and their transposes) change, by b_iv * b_vj.
        for (i, w_in) in &sources {
            for (j, w_out) in &targets {
                let delta = w_in * w_out;
                let (lo, hi, signed) = if i < j { (*i, *j, delta) } else { (*j, *i, -delta) };
                let updated = entries.upper(n, lo, hi) + signed;
                entries.set_upper(n, lo, hi, updated);
            }
        }
        for k in sources.iter().chain(targets.iter()).map(|(k, _)| *k) {
            let (lo, hi) = (k.min(v), k.max(v));
            let flipped = -entries.upper(n, lo, hi);
            entries.set_upper(n, lo, hi, flipped);
        }
        Ok(Quiver { table: Arc::clone(&self.table), entries })
    }

    /// Mutation at a mutable vertex.
    pub fn mutate(&self, v: &str) -> Result<Quiver, QuiverError> {
        self.mutate_index(self.index_of(v)?)
    }

    /// Applies the steps left to right.
    pub fn mutate_seq(&self, seq: &MutationSequence) -> Result<Quiver, QuiverError> {
        let mut q = self.clone();
        for (index, v) in seq.steps().iter().enumerate() {
            q = q
                .mutate(v.as_str())
                .map_err(|e| QuiverError::Step { index, source: Box::new(e) })?;
        }
        Ok(q)
    }

    /// Induced sub-quiver on `subset`, keeping the original vertex order.
    pub fn restrict<S: AsRef<str>>(&self, subset: &[S]) -> Result<Quiver, QuiverError> {
        if subset.is_empty() {
            return Err(QuiverError::EmptySubset);
        }
        let mut keep = HashSet::new();
        for s in subset {
            keep.insert(self.index_of(s.as_ref())?);
        }
        let mut order: Vec<usize> = keep.into_iter().collect();
        order.sort_unstable();
        Ok(self.reorder(&order))
    }

    /// Quiver whose vertex at position `p` is this quiver's vertex `order[p]`.
    /// `order` may select a subset of the vertices.
    pub fn reorder(&self, order: &[usize]) -> Quiver {
        let vertices: Vec<(VertexId, bool)> = order
            .iter()
            .map(|&i| (self.table.ids[i].clone(), self.table.frozen[i]))
            .collect();
        let table = VertexTable::new(vertices).expect("reorder keeps ids unique");
        let n = order.len();
        let mut entries = Entries::zeros(n);
        for p in 0..n {
            for r in p + 1..n {
                let value = self.b(order[p], order[r]);
                if !value.is_zero() {
                    entries.set_upper(n, p, r, value);
                }
            }
        }
        Quiver { table: Arc::new(table), entries }
    }

    /// The quiver in which vertices `u` and `v` trade places: the vertex named
    /// `u` gets `v`'s arrows and frozen flag and vice versa.
    pub fn swap_roles(&self, u: &str, v: &str) -> Result<Quiver, QuiverError> {
        let (iu, iv) = (self.index_of(u)?, self.index_of(v)?);
        let mut perm: Vec<usize> = (0..self.len()).collect();
        perm.swap(iu, iv);
        let n = self.len();
        let mut entries = Entries::zeros(n);
        for p in 0..n {
            for r in p + 1..n {
                let value = self.b(perm[p], perm[r]);
                if !value.is_zero() {
                    entries.set_upper(n, p, r, value);
                }
            }
        }
        let mut frozen = self.table.frozen.clone();
        frozen.swap(iu, iv);
        let table = VertexTable::new(self.table.ids.iter().cloned().zip(frozen).collect())
            .expect("ids unchanged");
        Ok(Quiver { table: Arc::new(table), entries })
    }

    /// Number of arrows between `u` and `v`, that is `|b_uv|`.
    pub fn multiplicity(&self, u: &str, v: &str) -> Result<BigUint, QuiverError> {
        let (i, j) = (self.index_of(u)?, self.index_of(v)?);
        if i == j {
            return Err(QuiverError::SameVertex(u.to_string()));
        }
        Ok(self.abs_ref(i, j).magnitude().clone())
    }

    /// Arrows as `(from, to, weight)` index triples, ordered by the pair
    /// `(min, max)` in construction order.
    pub fn arrow_list(&self) -> Vec<(usize, usize, BigUint)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let value = self.entries.upper(n, i, j);
                match value.sign() {
                    Sign::Plus => out.push((i, j, value.magnitude().clone())),
                    Sign::Minus => out.push((j, i, value.magnitude().clone())),
                    Sign::NoSign => {}
                }
            }
        }
        out
    }

    /// Frozen-frozen pairs carrying arrows, as `(u, v, multiplicity)` with
    /// `u` before `v` in vertex order.
    pub fn icebound_pairs(&self) -> Vec<(VertexId, VertexId, BigUint)> {
        let n = self.len();
        let frozen = &self.table.frozen;
        let mut out = Vec::new();
        for i in (0..n).filter(|&i| frozen[i]) {
            for j in (i + 1..n).filter(|&j| frozen[j]) {
                let value = self.entries.upper(n, i, j);
                if !value.is_zero() {
                    out.push((
                        self.table.ids[i].clone(),
                        self.table.ids[j].clone(),
                        value.magnitude().clone(),
                    ));
                }
            }
        }
        out
    }

    pub fn has_icebound_arrows(&self) -> bool {
        let n = self.len();
        let frozen = &self.table.frozen;
        (0..n).any(|i| {
            frozen[i] && (i + 1..n).any(|j| frozen[j] && !self.entries.upper(n, i, j).is_zero())
        })
    }

    /// Whether some unordered pair has exactly `k` arrows between it.
    pub fn has_pair_with_exactly_k(&self, k: &BigUint) -> bool {
        let n = self.len();
        (0..n).any(|i| (i + 1..n).any(|j| self.entries.upper(n, i, j).magnitude() == k))
    }

    /// Sum of all multiplicities.
    pub fn total_arrows(&self) -> BigUint {
        let n = self.len();
        let mut total = BigUint::zero();
        for i in 0..n {
            for j in i + 1..n {
                total += self.entries.upper(n, i, j).magnitude();
            }
        }
        total
    }

    /// Largest multiplicity over all pairs (zero for a single vertex).
    pub fn max_multiplicity(&self) -> BigUint {
        let n = self.len();
        let mut best = BigUint::zero();
        for i in 0..n {
            for j in i + 1..n {
                let m = self.entries.upper(n, i, j).magnitude();
                if *m > best {
                    best = m.clone();
                }
            }
        }
        best
    }

    /// Checks the exchange matrix stays skew-symmetric. The triangular storage
    /// guarantees it, so this compares the public accessor both ways.
    pub fn is_skew_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| self.b(i, i).is_zero() && (0..n).all(|j| self.b(i, j) == -self.b(j, i)))
    }
}

impl fmt::Display for Quiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids = &self.table.ids;
        let names: Vec<String> = ids
            .iter()
            .zip(&self.table.frozen)
            .map(|(id, &fr)| if fr { format!("[{id}]") } else { id.to_string() })
            .collect();
        write!(f, "{{{}}}", names.join(" "))?;
        for (i, j, w) in self.arrow_list() {
            write!(f, " {}->{}:{}", ids[i], ids[j], w)?;
        }
        Ok(())
    }
}

/// Convenience builder taking string names; validation happens in [`build`].
///
/// [`build`]: QuiverBuilder::build
#[derive(Debug, Default, Clone)]
pub struct QuiverBuilder {
    vertices: Vec<(String, bool)>,
    arrows: Vec<(String, String, BigInt)>,
}

impl QuiverBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mutable(mut self, name: &str) -> Self {
        self.vertices.push((name.to_string(), false));
        self
    }

    pub fn frozen(mut self, name: &str) -> Self {
        self.vertices.push((name.to_string(), true));
        self
    }

    pub fn arrow(mut self, from: &str, to: &str, weight: impl Into<BigInt>) -> Self {
        self.arrows.push((from.to_string(), to.to_string(), weight.into()));
        self
    }

    pub fn build(self) -> Result<Quiver, QuiverError> {
        let vertices = self
            .vertices
            .into_iter()
            .map(|(n, f)| VertexId::new(n).map(|id| (id, f)))
            .collect::<Result<Vec<_>, _>>()?;
        let arrows = self
            .arrows
            .into_iter()
            .map(|(a, b, w)| Ok(Arrow::new(VertexId::new(a)?, VertexId::new(b)?, w)))
            .collect::<Result<Vec<_>, QuiverError>>()?;
        Quiver::new(vertices, arrows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_vertex() -> Quiver {
        QuiverBuilder::new()
            .mutable("A")
            .mutable("B")
            .mutable("C")
            .mutable("D")
            .mutable("E")
            .arrow("A", "B", 2)
            .arrow("B", "E", 3)
            .arrow("C", "B", 1)
            .arrow("E", "A", 1)
            .arrow("E", "D", 1)
            .build()
            .unwrap()
    }

    fn big(n: i64) -> BigUint {
        BigUint::from(n as u64)
    }

    #[test]
    fn direct_encoding() {
        let q = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 2).build().unwrap();
        assert_eq!(q.exchange("A", "B").unwrap(), BigInt::from(2));
        assert_eq!(q.exchange("B", "A").unwrap(), BigInt::from(-2));
    }

    #[test]
    fn constructor_errors() {
        let err = QuiverBuilder::new()
            .mutable("A")
            .mutable("B")
            .arrow("A", "B", 1)
            .arrow("B", "A", 1)
            .build()
            .unwrap_err();
        assert_eq!(err, QuiverError::TwoCycleInInput("B".into(), "A".into()));

        let err = QuiverBuilder::new().mutable("A").mutable("A").build().unwrap_err();
        assert_eq!(err, QuiverError::DuplicateVertex("A".into()));

        let err = QuiverBuilder::new().mutable("A").arrow("A", "Z", 1).build().unwrap_err();
        assert_eq!(err, QuiverError::UnknownVertex("Z".into()));

        let err = QuiverBuilder::new().mutable("A").arrow("A", "A", 1).build().unwrap_err();
        assert_eq!(err, QuiverError::SelfLoop("A".into()));

        let err = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 0).build().unwrap_err();
        assert_eq!(err.code(), "NonpositiveWeight");

        let err = QuiverBuilder::new()
            .mutable("A")
            .mutable("B")
            .arrow("A", "B", 1)
            .arrow("A", "B", 2)
            .build()
            .unwrap_err();
        assert_eq!(err.code(), "DuplicateArrow");

        assert_eq!(QuiverBuilder::new().build().unwrap_err(), QuiverError::NoVertices);
        assert!(VertexId::new("a b").is_err());
        assert!(VertexId::new("a,b").is_err());
        assert!(VertexId::new("").is_err());
    }

    #[test]
    fn five_vertex_example_counts() {
        let q = five_vertex();
        assert_eq!(q.len(), 5);
        assert_eq!(q.total_arrows(), big(8));
        assert_eq!(q.multiplicity("A", "B").unwrap(), big(2));
        assert_eq!(q.multiplicity("A", "C").unwrap(), big(0));
        assert!(q.has_pair_with_exactly_k(&big(2)));
        assert!(!q.has_pair_with_exactly_k(&big(7)));
    }

    #[test]
    fn mutation_at_b_matches_worked_example() {
        let mu = five_vertex().mutate("B").unwrap();
        let expected = QuiverBuilder::new()
            .mutable("A")
            .mutable("B")
            .mutable("C")
            .mutable("D")
            .mutable("E")
            .arrow("A", "E", 5)
            .arrow("B", "A", 2)
            .arrow("B", "C", 1)
            .arrow("C", "E", 3)
            .arrow("E", "B", 3)
            .arrow("E", "D", 1)
            .build()
            .unwrap();
        assert_eq!(mu, expected);
        assert_eq!(mu.multiplicity("A", "E").unwrap(), big(5));
        assert_eq!(mu.total_arrows(), big(15));
        assert_eq!(mu.mutate("B").unwrap(), five_vertex());
    }

    #[test]
    fn mutation_through_frozen_neighbours() {
        let q = QuiverBuilder::new()
            .frozen("A")
            .frozen("B")
            .mutable("C")
            .mutable("D")
            .arrow("A", "C", 2)
            .arrow("C", "D", 3)
            .arrow("D", "B", 5)
            .build()
            .unwrap();
        let mu = q.mutate("C").unwrap();
        assert_eq!(mu.exchange("A", "D").unwrap(), BigInt::from(6));
        assert_eq!(mu.exchange("C", "A").unwrap(), BigInt::from(2));
        assert_eq!(mu.exchange("D", "C").unwrap(), BigInt::from(3));
        assert_eq!(mu.exchange("D", "B").unwrap(), BigInt::from(5));
        assert_eq!(mu.exchange("A", "B").unwrap(), BigInt::from(0));
        assert_eq!(q.mutate("A").unwrap_err(), QuiverError::FrozenVertexMutation("A".into()));
        assert_eq!(q.mutate("Q").unwrap_err(), QuiverError::UnknownVertex("Q".into()));
    }

    #[test]
    fn sequence_errors_carry_step_index() {
        let q = five_vertex();
        assert_eq!(q.mutate_seq(&MutationSequence::default()).unwrap(), q);
        let seq = MutationSequence::from_names(&["B", "B"]).unwrap();
        assert_eq!(q.mutate_seq(&seq).unwrap(), q);
        let bad = MutationSequence::from_names(&["B", "X"]).unwrap();
        match q.mutate_seq(&bad).unwrap_err() {
            QuiverError::Step { index, source } => {
                assert_eq!(index, 1);
                assert_eq!(*source, QuiverError::UnknownVertex("X".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn restriction() {
        let q = five_vertex();
        assert_eq!(q.restrict(&["A", "B", "C", "D", "E"]).unwrap(), q);
        let ab = q.restrict(&["B", "A"]).unwrap();
        let expected = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 2).build().unwrap();
        assert_eq!(ab, expected);
        assert_eq!(q.restrict::<&str>(&[]).unwrap_err(), QuiverError::EmptySubset);
        assert_eq!(q.restrict(&["A", "Z"]).unwrap_err(), QuiverError::UnknownVertex("Z".into()));
    }

    #[test]
    fn single_vertex_has_no_pairs() {
        let q = QuiverBuilder::new().mutable("A").build().unwrap();
        assert!(!q.has_pair_with_exactly_k(&big(0)));
        assert_eq!(q.multiplicity("A", "A").unwrap_err(), QuiverError::SameVertex("A".into()));
    }

    #[test]
    fn icebound_listing() {
        let q = QuiverBuilder::new()
            .frozen("F")
            .mutable("M")
            .frozen("G")
            .arrow("G", "F", 4)
            .arrow("M", "G", 1)
            .build()
            .unwrap();
        assert_eq!(q.icebound_pairs(), vec![(VertexId::new("F").unwrap(), VertexId::new("G").unwrap(), big(4))]);
        assert!(q.has_icebound_arrows());
        assert!(five_vertex().icebound_pairs().is_empty());
    }

    #[test]
    fn sparse_storage_behaves_like_dense() {
        let n = DENSE_LIMIT + 6;
        let mut b = QuiverBuilder::new();
        for i in 0..n {
            b = if i % 5 == 0 { b.frozen(&format!("v{i}")) } else { b.mutable(&format!("v{i}")) };
        }
        for i in 0..n - 1 {
            b = b.arrow(&format!("v{i}"), &format!("v{}", i + 1), (i % 3 + 1) as i64);
        }
        b = b.arrow(&format!("v{}", n - 1), "v0", 2);
        let q = b.build().unwrap();
        assert!(matches!(q.entries(), Entries::Sparse(_)));
        let small = q.restrict(&(0..10).map(|i| format!("v{i}")).collect::<Vec<_>>()).unwrap();
        assert!(matches!(small.entries(), Entries::Dense(_)));
        let mut mu = q.clone();
        for v in ["v1", "v2", "v3", "v1", "v7"] {
            mu = mu.mutate(v).unwrap();
            assert!(mu.is_skew_symmetric());
        }
        // Compare with the same computation done on the dense restriction.
        let names: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
        let mut dense = small;
        for v in ["v1", "v2", "v3", "v1", "v7"] {
            dense = dense.mutate(v).unwrap();
        }
        assert_eq!(mu.restrict(&names).unwrap(), dense);
        for v in ["v7", "v1", "v3", "v2", "v1"] {
            mu = mu.mutate(v).unwrap();
        }
        assert_eq!(mu, q);
    }

    #[test]
    fn swap_roles_exchanges_neighbourhoods() {
        let q = QuiverBuilder::new()
            .frozen("A")
            .mutable("C")
            .mutable("D")
            .arrow("A", "C", 2)
            .arrow("C", "D", 1)
            .build()
            .unwrap();
        let s = q.swap_roles("C", "D").unwrap();
        assert_eq!(s.exchange("A", "D").unwrap(), BigInt::from(2));
        assert_eq!(s.exchange("D", "C").unwrap(), BigInt::from(1));
        assert_eq!(s.swap_roles("C", "D").unwrap(), q);
    }
}
