#![allow(dead_code)]

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use superholonomy::grassmann::{q, GrassmannElement, Q};

/// Product of two basis monomials by bubble sorting the concatenated index
/// list, counting swaps.
pub fn monomial_product(a: u64, b: u64) -> Option<(u64, bool)> {
    if a & b != 0 {
        return None;
    }
    let mut idx: Vec<u32> = (0..64).filter(|i| a >> i & 1 == 1).collect();
    idx.extend((0..64).filter(|i| b >> i & 1 == 1));
    let mut negative = false;
    for i in 0..idx.len() {
        for j in 0..idx.len() - 1 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                negative = !negative;
            }
        }
    }
    Some((a | b, negative))
}

pub fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = Q::one() / rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone() * inv.clone();
                for k in c..ncols {
                    let d = rows[r][k].clone() * f.clone();
                    rows[i][k] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

/// Dimension of the principal ideal of `mu` in the algebra on `n`
/// generators: rank of left multiplication by `mu`.
pub fn ideal_dim(mu: &GrassmannElement, n: usize) -> usize {
    let size = 1usize << n;
    let rows = (0..size as u64)
        .map(|j| {
            let mut row = vec![Q::zero(); size];
            for (m, c) in mu.terms() {
                if let Some((p, neg)) = monomial_product(*m, j) {
                    row[p as usize] += if neg { -c.clone() } else { c.clone() };
                }
            }
            row
        })
        .collect();
    rank(rows)
}

/// Random odd element on `n` generators whose ideal has dimension at least
/// `2^(n-1)`, by rejection.
pub fn random_free(rng: &mut ChaCha8Rng, n: usize) -> GrassmannElement {
    loop {
        let mut mu = GrassmannElement::zero();
        for m in (1u64..(1 << n)).filter(|m| m.count_ones() % 2 == 1) {
            if rng.gen_bool(0.35) {
                mu.add_term(m, q(rng.gen_range(-3i64..=3), rng.gen_range(1..=2)));
            }
        }
        if ideal_dim(&mu, n) >= 1 << (n - 1) {
            return mu;
        }
    }
}

/// Same as `ideal_dim`, with sparse rows so that ten or more generators stay
/// cheap.
pub fn sparse_ideal_dim(mu: &GrassmannElement, n: usize) -> usize {
    use std::collections::BTreeMap;
    let mut pivots: BTreeMap<u64, BTreeMap<u64, Q>> = BTreeMap::new();
    for j in 0..(1u64 << n) {
        let mut row: BTreeMap<u64, Q> = BTreeMap::new();
        for (m, c) in mu.terms() {
            if let Some((p, neg)) = monomial_product(*m, j) {
                *row.entry(p).or_insert_with(Q::zero) += if neg { -c.clone() } else { c.clone() };
            }
        }
        row.retain(|_, c| !c.is_zero());
        while let Some((&lead, lc)) = row.iter().next() {
            let Some(prow) = pivots.get(&lead) else { break };
            let f = lc.clone() / prow[&lead].clone();
            for (k, c) in prow {
                *row.entry(*k).or_insert_with(Q::zero) -= c.clone() * f.clone();
            }
            row.retain(|_, c| !c.is_zero());
        }
        if let Some(&lead) = row.keys().next() {
            pivots.insert(lead, row);
        }
    }
    pivots.len()
}
