//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use qmut::{Quiver, VertexId};
use rand::Rng;

/// Arrow counts: `counts[i][j]` arrows from `i` to `j`.
pub type Counts = Vec<Vec<u128>>;

pub fn counts_of(q: &Quiver) -> Counts {
    let n = q.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let b = q.b(i, j);
                    if b.is_positive() {
                        b.to_u128().expect("small multiplicity")
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

/// Mutation by the arrow procedure: add a composite arrow for every two-step
/// path through `k`, reverse the arrows at `k`, then cancel 2-cycles.
pub fn three_step_mutate(counts: &Counts, k: usize) -> Counts {
    let n = counts.len();
    let mut c = counts.clone();
    for i in 0..n {
        for j in 0..n {
            if i != j && i != k && j != k {
                c[i][j] += counts[i][k] * counts[k][j];
            }
        }
    }
    for i in 0..n {
        c[i][k] = counts[k][i];
        c[k][i] = counts[i][k];
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = c[i][j].min(c[j][i]);
            c[i][j] -= m;
            c[j][i] -= m;
        }
    }
    c
}

pub fn ids(n: usize) -> Vec<VertexId> {
    (0..n).map(|i| VertexId::new(format!("v{i}")).unwrap()).collect()
}

/// Quiver on `v0..v{n-1}` with `frozen` flags and exchange entries
/// `upper[i][j]` for `i < j` (row-major).
pub fn quiver_from_upper(frozen: &[bool], upper: &[i64]) -> Quiver {
    let n = frozen.len();
    let mut m = vec![vec![BigInt::from(0); n]; n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in i + 1..n {
            let v = BigInt::from(*it.next().expect("enough entries"));
            m[j][i] = -&v;
            m[i][j] = v;
        }
    }
    Quiver::from_matrix(ids(n).into_iter().zip(frozen.iter().copied()), &m).unwrap()
}

/// Random quiver with `1..=max_n` vertices, entries in `[-max_w, max_w]`,
/// roughly half the pairs adjacent and about a quarter of vertices frozen
/// (at least one mutable).
pub fn random_quiver<R: Rng>(rng: &mut R, max_n: usize, max_w: i64) -> Quiver {
    let n = rng.gen_range(1..=max_n);
    let mut frozen: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.25)).collect();
    frozen[rng.gen_range(0..n)] = false;
    let upper: Vec<i64> = (0..n * (n - 1) / 2)
        .map(|_| if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..=max_w) * if rng.gen_bool(0.5) { 1 } else { -1 } })
        .collect();
    quiver_from_upper(&frozen, &upper)
}

pub fn arb_quiver(max_n: usize, max_w: i64) -> impl Strategy<Value = Quiver> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            (
                proptest::collection::vec(proptest::bool::weighted(0.25), n),
                proptest::collection::vec(-max_w..=max_w, n * (n - 1) / 2),
                0..n,
            )
        })
        .prop_map(|(mut frozen, upper, keep)| {
            frozen[keep] = false;
            quiver_from_upper(&frozen, &upper)
        })
}
