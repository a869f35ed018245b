//! Spans and Lie closures of constant supermatrices over Q.

use crate::echelon::{RowEchelon, SparseVec};
use crate::grassmann::mask_indices;
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;

/// A graded Q-subspace of constant supermatrices kept in canonical form.
///
/// Matrices are flattened to `(monomial, cell)` coordinates; the stored
/// echelon form depends only on the span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieSubalgebra {
    par: Vec<u8>,
    echelon: RowEchelon,
    /// Matrices accepted in insertion order; they span the same space.
    accepted: Vec<SuperMatrix>,
    /// Number of bracket rounds run by the last closure.
    pub rounds: usize,
}

impl LieSubalgebra {
    pub fn zero(par: &[u8]) -> Self {
        LieSubalgebra { par: par.to_vec(), echelon: RowEchelon::new(), accepted: Vec::new(), rounds: 0 }
    }

    /// Span of the homogeneous parts of `gens`, without closing.
    pub fn span(par: &[u8], gens: &[SuperMatrix]) -> Self {
        let mut s = Self::zero(par);
        for g in gens {
            s.insert(g);
        }
        s
    }

    pub fn parities(&self) -> &[u8] {
        &self.par
    }

    pub fn dim(&self) -> usize {
        self.echelon.rank()
    }

    /// Insert the homogeneous parts of `m`; returns the parts that were new.
    pub fn insert(&mut self, m: &SuperMatrix) -> Vec<SuperMatrix> {
        let mut fresh = Vec::new();
        for (_, part) in m.homogeneous_parts() {
            if self.echelon.insert(part.flatten()) {
                self.accepted.push(part.clone());
                fresh.push(part);
            }
        }
        fresh
    }

    pub fn contains(&self, m: &SuperMatrix) -> bool {
        self.echelon.contains(&m.flatten())
    }

    pub fn contains_all(&self, other: &LieSubalgebra) -> bool {
        other.echelon.rows().all(|r| self.echelon.contains(r))
    }

    /// Canonical basis.
    pub fn basis(&self) -> Vec<SuperMatrix> {
        self.echelon.rows().map(|r| SuperMatrix::unflatten(&self.par, &self.par, r)).collect()
    }

    pub fn basis_vectors(&self) -> Vec<SparseVec> {
        self.echelon.rows().cloned().collect()
    }

    /// Dimension of the parity-`p` part.
    pub fn dim_parity(&self, p: u8) -> usize {
        self.basis().iter().filter(|b| b.parity() == Some(p)).count()
    }

    /// Close under the bracket by breadth-first rounds.
    pub fn close(&mut self) {
        let mut frontier: Vec<SuperMatrix> = self.accepted.clone();
        let mut rounds = 0;
        while !frontier.is_empty() {
            rounds += 1;
            let snapshot = self.accepted.clone();
            let mut next = Vec::new();
            for a in &frontier {
                for b in &snapshot {
                    let c = a.bracket(b);
                    if !c.is_zero() {
                        next.extend(self.insert(&c));
                    }
                }
            }
            frontier = next;
        }
        self.rounds = rounds;
    }

    /// Close under left multiplication by the monomials in the generators
    /// of `mask`.
    pub fn close_module(&mut self, mask: u64) {
        let gens = mask_indices(mask);
        let mut frontier = self.accepted.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for a in &frontier {
                for &g in &gens {
                    let m = a.left_scalar(&SuperFunction::generator(g));
                    if !m.is_zero() {
                        next.extend(self.insert(&m));
                    }
                }
            }
            frontier = next;
        }
    }

    pub fn is_closed(&self) -> bool {
        let b = self.basis();
        b.iter().all(|x| b.iter().all(|y| self.contains(&x.bracket(y))))
    }

    /// Sum of two subspaces (not closed).
    pub fn sum(&self, other: &LieSubalgebra) -> LieSubalgebra {
        let mut s = self.clone();
        for b in other.basis() {
            s.insert(&b);
        }
        s
    }
}

/// Smallest bracket-closed span containing the generators.
pub fn lie_closure(par: &[u8], generators: &[SuperMatrix]) -> LieSubalgebra {
    let mut s = LieSubalgebra::span(par, generators);
    s.close();
    s
}

/// Equality of spans.
pub fn span_equal(a: &LieSubalgebra, b: &LieSubalgebra) -> bool {
    a.par == b.par && a.echelon == b.echelon
}
