//! Supermatrices over function rings.
//!
//! A matrix `M` stands for the map sending the basis vector `e_C` to
//! `sum_B e_B M[B][C]`; module elements are columns of right coordinates.
//! Composition is then the ordinary matrix product, and a matrix of parity
//! `p` has entries of parity `p + |B| + |C|`.

use std::fmt;

use num_traits::{One, Zero};

use crate::echelon::{dense_inverse, SparseVec};
use crate::grassmann::{GeneratorContext, GrassmannElement, Q};
use crate::superfn::SuperFunction;
use crate::Error;

/// A matrix with row and column parities.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SuperMatrix {
    rows: Vec<u8>,
    cols: Vec<u8>,
    data: Vec<SuperFunction>,
}

/// Parities of a free module of rank `(r|s)`: `r` even then `s` odd.
pub fn block_parities(r: usize, s: usize) -> Vec<u8> {
    let mut v = vec![0u8; r];
    v.extend(std::iter::repeat(1u8).take(s));
    v
}

pub(crate) fn sign(neg: bool, f: SuperFunction) -> SuperFunction {
    if neg {
        -f
    } else {
        f
    }
}

impl SuperMatrix {
    pub fn zeros(rows: &[u8], cols: &[u8]) -> Self {
        SuperMatrix {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            data: vec![SuperFunction::zero(); rows.len() * cols.len()],
        }
    }

    pub fn identity(par: &[u8]) -> Self {
        let mut m = Self::zeros(par, par);
        for i in 0..par.len() {
            m.set(i, i, SuperFunction::one());
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> SuperFunction>(rows: &[u8], cols: &[u8], mut f: F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.len() {
            for j in 0..cols.len() {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_columns(rows: &[u8], cols: &[u8], columns: &[Vec<SuperFunction>]) -> Self {
        Self::from_fn(rows, cols, |i, j| columns[j][i].clone())
    }

    /// Square matrix of rationals (all entries constant).
    pub fn from_rationals(par: &[u8], m: &[Vec<Q>]) -> Self {
        Self::from_fn(par, par, |i, j| SuperFunction::rational(m[i][j].clone()))
    }

    /// Elementary matrix `E_{ij}` scaled by a Grassmann constant.
    pub fn elementary(par: &[u8], i: usize, j: usize, c: GrassmannElement) -> Self {
        let mut m = Self::zeros(par, par);
        m.set(i, j, SuperFunction::constant(c));
        m
    }

    pub fn row_parities(&self) -> &[u8] {
        &self.rows
    }

    pub fn col_parities(&self) -> &[u8] {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &SuperFunction {
        &self.data[i * self.cols.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: SuperFunction) {
        let n = self.cols.len();
        self.data[i * n + j] = v;
    }

    pub fn entries(&self) -> &[SuperFunction] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn map<F: FnMut(&SuperFunction) -> SuperFunction>(&self, f: F) -> Self {
        SuperMatrix { rows: self.rows.clone(), cols: self.cols.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn map_indexed<F: FnMut(usize, usize, &SuperFunction) -> SuperFunction>(&self, mut f: F) -> Self {
        let n = self.cols.len();
        SuperMatrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().enumerate().map(|(k, x)| f(k / n, k % n, x)).collect(),
        }
    }

    /// Substitute `value` for even variable `j` in every entry.
    pub fn eval_var(&self, j: usize, value: &Q) -> Self {
        self.map(|f| f.eval_var(j, value))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "shape mismatch");
        SuperMatrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "shape mismatch");
        SuperMatrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn multiply(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let (n, m, p) = (self.rows.len(), self.cols.len(), other.cols.len());
        let mut out = Self::zeros(&self.rows, &other.cols);
        for i in 0..n {
            for k in 0..m {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..p {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = a.multiply(b);
                    out.data[i * p + j] += &v;
                }
            }
        }
        out
    }

    /// Apply to a column of right coordinates.
    pub fn apply(&self, v: &[SuperFunction]) -> Vec<SuperFunction> {
        (0..self.rows.len())
            .map(|i| {
                let mut s = SuperFunction::zero();
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_zero() && !x.is_zero() {
                        s += &a.multiply(x);
                    }
                }
                s
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<SuperFunction> {
        (0..self.rows.len()).map(|i| self.get(i, j).clone()).collect()
    }

    /// Homogeneous component of parity `p`.
    pub fn parity_part(&self, p: u8) -> Self {
        let rows = self.rows.clone();
        let cols = self.cols.clone();
        self.map_indexed(|i, j, x| x.parity_part((p + rows[i] + cols[j]) % 2))
    }

    /// Parity if homogeneous; zero counts as even.
    pub fn parity(&self) -> Option<u8> {
        let e = self.parity_part(0);
        let o = self.parity_part(1);
        match (o.is_zero(), e.is_zero()) {
            (true, _) => Some(0),
            (false, true) => Some(1),
            _ => None,
        }
    }

    pub fn homogeneous_parts(&self) -> Vec<(u8, SuperMatrix)> {
        (0..2u8)
            .map(|p| (p, self.parity_part(p)))
            .filter(|(_, m)| !m.is_zero())
            .collect()
    }

    /// Scalar action `s -> f * M(s)`: row `B` picks up `(-1)^{|f||B|}`.
    pub fn left_scalar(&self, f: &SuperFunction) -> Self {
        let parts = f.homogeneous_parts();
        let rows = self.rows.clone();
        self.map_indexed(|i, _, x| {
            let mut s = SuperFunction::zero();
            for (p, fp) in &parts {
                s += &sign(p * rows[i] == 1, fp.multiply(x));
            }
            s
        })
    }

    /// Bracket `XY - (-1)^{|X||Y|} YX`, extended bilinearly over parity parts.
    pub fn bracket(&self, other: &Self) -> Self {
        let mut out = Self::zeros(&self.rows, &self.cols);
        for (p, a) in self.homogeneous_parts() {
            for (q, b) in other.homogeneous_parts() {
                let ab = a.multiply(&b);
                let ba = b.multiply(&a);
                out = if p * q == 1 { out.add(&ab).add(&ba) } else { out.add(&ab).sub(&ba) };
            }
        }
        out
    }

    /// Supercommutator of homogeneous matrices.
    pub fn supercommutator(&self, other: &Self) -> Result<Self, Error> {
        let (Some(p), Some(q)) = (self.parity(), other.parity()) else {
            return Err(Error::Parity("supercommutator needs homogeneous arguments".into()));
        };
        let ab = self.multiply(other);
        let ba = other.multiply(self);
        Ok(if p * q == 1 { ab.add(&ba) } else { ab.sub(&ba) })
    }

    /// Rational matrix of the terms free of every variable and generator.
    pub fn body(&self) -> Vec<Vec<Q>> {
        (0..self.rows.len())
            .map(|i| (0..self.cols.len()).map(|j| self.get(i, j).constant_part().body()).collect())
            .collect()
    }

    /// Inverse for a matrix whose body is a constant invertible rational
    /// matrix and whose remaining terms are nilpotent.
    pub fn inverse(&self) -> Result<Self, Error> {
        if self.rows != self.cols {
            return Err(Error::Invalid("inverse of a non-square matrix".into()));
        }
        let body = self.body();
        let binv = dense_inverse(&body).ok_or(Error::NotInvertible)?;
        let b = Self::from_rationals(&self.rows, &body);
        let nil = self.sub(&b);
        for e in nil.entries() {
            if e.terms().values().any(|g| !g.body().is_zero()) {
                return Err(Error::Invalid("matrix body depends on even variables".into()));
            }
        }
        let binv = Self::from_rationals(&self.rows, &binv);
        let step = binv.multiply(&nil).neg();
        let mut sum = Self::identity(&self.rows);
        let mut power = Self::identity(&self.rows);
        loop {
            power = power.multiply(&step);
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power);
        }
        Ok(sum.multiply(&binv))
    }

    /// True when every entry is free of even variables.
    pub fn is_constant(&self) -> bool {
        self.data.iter().all(|x| x.is_constant())
    }

    /// Flatten a constant matrix to a rational vector indexed by
    /// `(monomial, cell)`.
    pub fn flatten(&self) -> SparseVec {
        let ncell = self.data.len() as u64;
        assert!(ncell <= 256, "matrix too large to flatten");
        let mut v = SparseVec::new();
        for (cell, x) in self.data.iter().enumerate() {
            assert!(x.is_constant(), "flatten needs constant entries");
            for (m, c) in x.constant_part().terms() {
                assert!(*m < (1u64 << 56), "monomial too large to flatten");
                v.insert((m << 8) | cell as u64, c.clone());
            }
        }
        v
    }

    pub fn unflatten(rows: &[u8], cols: &[u8], v: &SparseVec) -> Self {
        let mut m = Self::zeros(rows, cols);
        let mut entries: Vec<GrassmannElement> = vec![GrassmannElement::zero(); rows.len() * cols.len()];
        for (k, c) in v {
            entries[(k & 0xff) as usize].add_term(k >> 8, c.clone());
        }
        for (i, g) in entries.into_iter().enumerate() {
            m.data[i] = SuperFunction::constant(g);
        }
        m
    }

    /// Union of Grassmann generators in all entries.
    pub fn support(&self) -> u64 {
        self.data.iter().fold(0, |a, x| a | x.support())
    }

    pub fn display(&self, ctx: &GeneratorContext) -> String {
        let rows: Vec<String> = (0..self.rows.len())
            .map(|i| {
                let cells: Vec<String> = (0..self.cols.len()).map(|j| self.get(i, j).display(ctx)).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut rows = self.rows.clone();
        rows.extend(&other.rows);
        let mut cols = self.cols.clone();
        cols.extend(&other.cols);
        let (r1, c1) = (self.rows.len(), self.cols.len());
        Self::from_fn(&rows, &cols, |i, j| {
            if i < r1 && j < c1 {
                self.get(i, j).clone()
            } else if i >= r1 && j >= c1 {
                other.get(i - r1, j - c1).clone()
            } else {
                SuperFunction::zero()
            }
        })
    }

    /// Sub-block with the given row and column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let rp: Vec<u8> = rows.iter().map(|&i| self.rows[i]).collect();
        let cp: Vec<u8> = cols.iter().map(|&j| self.cols[j]).collect();
        Self::from_fn(&rp, &cp, |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// True when the matrix is `d * id` for a single entry `d`.
    pub fn is_scalar(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let d = self.get(0, 0);
        (0..self.rows.len()).all(|i| {
            (0..self.cols.len()).all(|j| {
                let x = self.get(i, j);
                if i == j {
                    x == d
                } else {
                    x.is_zero()
                }
            })
        })
    }
}

impl fmt::Debug for SuperMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SuperMatrix rows={:?} cols={:?}", self.rows, self.cols)?;
        for i in 0..self.rows.len() {
            let cells: Vec<String> = (0..self.cols.len()).map(|j| format!("{:?}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", cells.join(" | "))?;
        }
        Ok(())
    }
}

/// Identity-check helper for rationals.
pub fn is_identity(m: &[Vec<Q>]) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::qi;

    #[test]
    fn sl2_bracket() {
        let par = [0u8, 0];
        let e12 = SuperMatrix::elementary(&par, 0, 1, GrassmannElement::one());
        let e21 = SuperMatrix::elementary(&par, 1, 0, GrassmannElement::one());
        let h = SuperMatrix::elementary(&par, 0, 0, GrassmannElement::one())
            .sub(&SuperMatrix::elementary(&par, 1, 1, GrassmannElement::one()));
        assert_eq!(e12.supercommutator(&e21).unwrap(), h);
        assert!(e12.supercommutator(&e12).unwrap().is_zero());
    }

    #[test]
    fn odd_self_bracket_is_twice_square() {
        let par = [0u8, 1];
        let x = SuperMatrix::elementary(&par, 0, 1, GrassmannElement::one())
            .add(&SuperMatrix::elementary(&par, 1, 0, GrassmannElement::one()));
        assert_eq!(x.parity(), Some(1));
        assert_eq!(x.supercommutator(&x).unwrap(), x.multiply(&x).scale(&qi(2)));
    }

    #[test]
    fn inverse_with_nilpotent_part() {
        let par = [0u8, 1];
        let mut m = SuperMatrix::identity(&par).scale(&qi(2));
        m.set(0, 1, SuperFunction::generator(0));
        m.set(1, 0, SuperFunction::generator(1));
        let inv = m.inverse().unwrap();
        assert_eq!(m.multiply(&inv), SuperMatrix::identity(&par));
        assert_eq!(inv.multiply(&m), SuperMatrix::identity(&par));
    }
}
