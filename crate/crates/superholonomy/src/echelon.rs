//! Sparse exact row reduction over the rationals.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::grassmann::Q;

/// Sparse rational vector keyed by coordinate.
pub type SparseVec = BTreeMap<u64, Q>;

/// Reduced row echelon form of a growing set of vectors.
///
/// Rows are normalised to a leading 1 at their pivot (the smallest key) and
/// every pivot column is zero in all other rows, so the stored basis depends
/// only on the span.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowEchelon {
    rows: BTreeMap<u64, SparseVec>,
}

pub(crate) fn axpy(v: &mut SparseVec, c: &Q, row: &SparseVec) {
    for (k, x) in row {
        let e = v.entry(*k).or_insert_with(Q::zero);
        *e -= c * x;
        if e.is_zero() {
            v.remove(k);
        }
    }
}

impl RowEchelon {
    pub fn new() -> Self {
        RowEchelon { rows: BTreeMap::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &SparseVec> {
        self.rows.values()
    }

    pub fn pivots(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows.keys().copied()
    }

    /// Remainder of `v` after eliminating all pivot coordinates.
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        v.retain(|_, c| !c.is_zero());
        let hits: Vec<u64> = v.keys().filter(|k| self.rows.contains_key(k)).copied().collect();
        for p in hits {
            if let Some(c) = v.get(&p).cloned() {
                axpy(&mut v, &c, &self.rows[&p]);
            }
        }
        v
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_empty()
    }

    /// Insert a vector; returns `true` when it enlarged the span.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let mut r = self.reduce(v);
        let Some((&p, c)) = r.iter().next() else {
            return false;
        };
        let inv = c.recip();
        if !inv.is_one() {
            for x in r.values_mut() {
                *x *= &inv;
            }
        }
        for row in self.rows.values_mut() {
            if let Some(c) = row.get(&p).cloned() {
                axpy(row, &c, &r);
            }
        }
        r.retain(|_, c| !c.is_zero());
        self.rows.insert(p, r);
        true
    }

    pub fn into_rows(self) -> Vec<SparseVec> {
        self.rows.into_values().collect()
    }
}

/// Rank of a list of vectors.
pub fn rank(vectors: impl IntoIterator<Item = SparseVec>) -> usize {
    let mut e = RowEchelon::new();
    for v in vectors {
        e.insert(v);
    }
    e.rank()
}

/// Dense solve of `a x = b` over Q by Gauss-Jordan; `a` is `m x n`.
/// Returns one solution (free variables set to zero) or `None`.
pub fn solve_dense(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !aug[i][c].is_zero()) else {
            continue;
        };
        aug.swap(r, p);
        let inv = aug[r][c].recip();
        for x in aug[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..=n {
                    let t = &f * &aug[r][j];
                    aug[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    if aug[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = aug[i][n].clone();
    }
    Some(x)
}

/// Rank of a dense rational matrix.
pub fn dense_rank(a: &[Vec<Q>]) -> usize {
    rank(a.iter().map(|row| {
        row.iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(j, x)| (j as u64, x.clone()))
            .collect()
    }))
}

/// Inverse of a dense square rational matrix.
pub fn dense_inverse(a: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, p);
        let inv = aug[c][c].recip();
        for x in aug[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..2 * n {
                    let t = &f * &aug[c][j];
                    aug[i][j] -= t;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the null space of a dense matrix (`m x n`), as vectors of length `n`.
pub fn dense_kernel(a: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let m = a.len();
    let mut mat: Vec<Vec<Q>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        let inv = mat[r][c].recip();
        for x in mat[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in 0..n {
                    let t = &f * &mat[r][j];
                    mat[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -mat[i][f].clone();
            }
            v
        })
        .collect()
}
