//! Canonical forms of quivers up to relabeling.
//!
//! Two quivers get the same [`CanonicalKey`] exactly when some bijection of
//! their vertices maps mutable to mutable, frozen to frozen, and preserves
//! every exchange value.
//!
//! The key is the lexicographically least strict-lower-triangle encoding of
//! the exchange matrix over all vertex orders that respect an ordered
//! partition computed by colour refinement (mutable cells first). The
//! partition is isomorphism-invariant, so the minimum is a complete invariant.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::Zero;

use crate::quiver::{Quiver, VertexId};

/// Deterministic byte encoding of a canonical exchange matrix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        use fmt::Write;
        let mut s = String::with_capacity(self.0.len() * 2);
        for b in &self.0 {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

/// A canonical key together with the vertex order that realizes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub key: CanonicalKey,
    /// `order[p]` is the index (in the input quiver) of the vertex placed at
    /// canonical position `p`.
    pub order: Vec<usize>,
}

impl CanonicalForm {
    /// Canonical position of every vertex.
    pub fn positions(&self, q: &Quiver) -> BTreeMap<VertexId, usize> {
        self.order
            .iter()
            .enumerate()
            .map(|(p, &i)| (q.vertices()[i].clone(), p))
            .collect()
    }
}

/// Encodes `q` with its vertices taken in `order`: vertex count and frozen
/// count (u32 big-endian), then the entries `b[order[p]][order[r]]` for
/// `r < p` in row-major order, each as a sign byte, a u32 big-endian length
/// and the big-endian magnitude.
pub fn encode_in_order(q: &Quiver, order: &[usize]) -> CanonicalKey {
    let n = order.len();
    let mut out = Vec::with_capacity(8 + n * n * 3);
    out.extend_from_slice(&(n as u32).to_be_bytes());
    let frozen = order.iter().filter(|&&i| q.is_frozen_at(i)).count();
    out.extend_from_slice(&(frozen as u32).to_be_bytes());
    for p in 1..n {
        for r in 0..p {
            push_entry(&mut out, &q.b(order[p], order[r]));
        }
    }
    CanonicalKey(out)
}

fn push_entry(out: &mut Vec<u8>, value: &BigInt) {
    let (sign, magnitude) = value.to_bytes_be();
    match sign {
        Sign::NoSign => {
            out.push(0);
            out.extend_from_slice(&0u32.to_be_bytes());
        }
        Sign::Plus | Sign::Minus => {
            out.push(if sign == Sign::Plus { 1 } else { 2 });
            out.extend_from_slice(&(magnitude.len() as u32).to_be_bytes());
            out.extend_from_slice(&magnitude);
        }
    }
}

/// Colour refinement: returns a colour per vertex, colours ranked so that
/// mutable vertices precede frozen ones.
fn refine(q: &Quiver) -> Vec<usize> {
    let n = q.len();
    let mut colour: Vec<usize> = (0..n).map(|i| q.is_frozen_at(i) as usize).collect();
    let mut count = colour.iter().copied().max().map_or(0, |m| m + 1);
    let neighbours: Vec<Vec<(usize, BigInt)>> = (0..n)
        .map(|i| {
            (0..n)
                .filter_map(|j| {
                    let b = q.b(i, j);
                    (!b.is_zero()).then_some((j, b))
                })
                .collect()
        })
        .collect();
    loop {
        let signatures: Vec<(usize, Vec<(usize, BigInt)>)> = (0..n)
            .map(|i| {
                let mut s: Vec<(usize, BigInt)> =
                    neighbours[i].iter().map(|(j, b)| (colour[*j], b.clone())).collect();
                s.sort();
                (colour[i], s)
            })
            .collect();
        let mut distinct: Vec<&(usize, Vec<(usize, BigInt)>)> = signatures.iter().collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() == count {
            return colour;
        }
        let rank: HashMap<&(usize, Vec<(usize, BigInt)>), usize> =
            distinct.iter().enumerate().map(|(r, s)| (*s, r)).collect();
        colour = signatures.iter().map(|s| rank[s]).collect();
        count = distinct.len();
    }
}

struct Search<'a> {
    q: &'a Quiver,
    n: usize,
    colour: Vec<usize>,
    cell_of_position: Vec<usize>,
    best_rows: Vec<Vec<BigInt>>,
    best_order: Option<Vec<usize>>,
    generation: u64,
}

impl Search<'_> {
    fn row(&self, v: usize, prefix: &[usize]) -> Vec<BigInt> {
        prefix.iter().map(|&u| self.q.b(v, u)).collect()
    }

    /// Swapping `u` and `w` is an automorphism of the whole quiver.
    fn twins(&self, u: usize, w: usize) -> bool {
        if !self.q.b(u, w).is_zero() {
            return false;
        }
        (0..self.n).all(|x| x == u || x == w || self.q.b(u, x) == self.q.b(w, x))
    }

    fn run(&mut self, prefix: &mut Vec<usize>, rows: &mut Vec<Vec<BigInt>>, used: &mut [bool], tied: bool) {
        let p = prefix.len();
        if p == self.n {
            if self.best_order.is_none() || !tied {
                self.best_rows = rows.clone();
                self.best_order = Some(prefix.clone());
                self.generation += 1;
            }
            return;
        }
        let cell = self.cell_of_position[p];
        let candidates: Vec<(usize, Vec<BigInt>)> = (0..self.n)
            .filter(|&v| !used[v] && self.colour[v] == cell)
            .map(|v| (v, self.row(v, prefix)))
            .collect();
        let min_row = candidates.iter().map(|(_, r)| r).min().expect("cell has a free vertex").clone();

        let mut child_tied = false;
        if self.best_order.is_some() && tied {
            match min_row.cmp(&self.best_rows[p]) {
                Ordering::Greater => return,
                Ordering::Equal => child_tied = true,
                Ordering::Less => {}
            }
        }

        let mut representatives: Vec<usize> = Vec::new();
        for (v, r) in &candidates {
            if *r != min_row {
                continue;
            }
            if representatives.iter().any(|&u| self.twins(u, *v)) {
                continue;
            }
            representatives.push(*v);
        }

        for v in representatives {
            let before = self.generation;
            prefix.push(v);
            rows.push(min_row.clone());
            used[v] = true;
            self.run(prefix, rows, used, child_tied);
            used[v] = false;
            rows.pop();
            prefix.pop();
            if self.generation != before {
                child_tied = true;
            }
        }
    }
}

/// Canonical key of `q` and a vertex order realizing it. Among orders giving
/// the minimal encoding, the lexicographically least one is returned.
pub fn canonical_form(q: &Quiver) -> CanonicalForm {
    let n = q.len();
    let colour = refine(q);
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &colour {
        *sizes.entry(c).or_default() += 1;
    }
    let cell_of_position: Vec<usize> =
        sizes.iter().flat_map(|(&c, &size)| std::iter::repeat_n(c, size)).collect();
    let mut search = Search {
        q,
        n,
        colour,
        cell_of_position,
        best_rows: Vec::new(),
        best_order: None,
        generation: 0,
    };
    let mut used = vec![false; n];
    search.run(&mut Vec::with_capacity(n), &mut Vec::with_capacity(n), &mut used, false);
    let order = search.best_order.expect("search visits at least one leaf");
    CanonicalForm { key: encode_in_order(q, &order), order }
}

pub fn canonical_key(q: &Quiver) -> CanonicalKey {
    canonical_form(q).key
}

/// Isomorphism respecting the frozen/mutable partition.
pub fn is_isomorphic(a: &Quiver, b: &Quiver) -> bool {
    a.len() == b.len() && a.frozen_count() == b.frozen_count() && canonical_key(a) == canonical_key(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::QuiverBuilder;

    fn markov() -> Quiver {
        QuiverBuilder::new()
            .mutable("X")
            .mutable("Y")
            .mutable("Z")
            .arrow("X", "Y", 2)
            .arrow("Y", "Z", 2)
            .arrow("Z", "X", 2)
            .build()
            .unwrap()
    }

    #[test]
    fn vertex_listing_order_does_not_matter() {
        let a = QuiverBuilder::new()
            .frozen("F")
            .mutable("A")
            .mutable("B")
            .arrow("F", "A", 3)
            .arrow("A", "B", 1)
            .build()
            .unwrap();
        let b = QuiverBuilder::new()
            .mutable("B")
            .mutable("A")
            .frozen("F")
            .arrow("A", "B", 1)
            .arrow("F", "A", 3)
            .build()
            .unwrap();
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn reversed_mutable_arrow_is_isomorphic() {
        let a = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 1).build().unwrap();
        let b = QuiverBuilder::new().mutable("A").mutable("B").arrow("B", "A", 1).build().unwrap();
        assert!(is_isomorphic(&a, &b));
    }

    #[test]
    fn frozen_source_differs_from_frozen_target() {
        let a = QuiverBuilder::new().frozen("A").mutable("B").arrow("A", "B", 1).build().unwrap();
        let b = QuiverBuilder::new().mutable("A").frozen("B").arrow("A", "B", 1).build().unwrap();
        assert_ne!(canonical_key(&a), canonical_key(&b));
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn markov_quiver_is_isomorphic_to_its_mutations() {
        let q = markov();
        assert!(is_isomorphic(&q, &q));
        for v in ["X", "Y", "Z"] {
            assert!(is_isomorphic(&q, &q.mutate(v).unwrap()));
        }
    }

    #[test]
    fn different_multiplicities_are_not_isomorphic() {
        let a = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 1).build().unwrap();
        let b = QuiverBuilder::new().mutable("A").mutable("B").arrow("A", "B", 2).build().unwrap();
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn witness_order_reproduces_key() {
        let q = markov().mutate("X").unwrap();
        let form = canonical_form(&q);
        let identity: Vec<usize> = (0..q.len()).collect();
        assert_eq!(encode_in_order(&q.reorder(&form.order), &identity), form.key);
        let positions = form.positions(&q);
        assert_eq!(positions.len(), 3);
    }

    #[test]
    fn twins_do_not_explode() {
        // Twenty interchangeable mutable vertices hanging off a frozen hub.
        let mut b = QuiverBuilder::new().frozen("H");
        for i in 0..20 {
            b = b.mutable(&format!("v{i}")).arrow(&format!("v{i}"), "H", 1);
        }
        let q = b.build().unwrap();
        let form = canonical_form(&q);
        assert_eq!(form.order[0], 1);
        assert_eq!(*form.order.last().unwrap(), 0);
    }

    #[test]
    fn tie_break_prefers_least_permutation() {
        let q = QuiverBuilder::new().mutable("A").mutable("B").mutable("C").build().unwrap();
        assert_eq!(canonical_form(&q).order, vec![0, 1, 2]);
    }
}
