//! Free submodules of `O^n`, linear systems over the Grassmann algebra and
//! orthogonal complements for even supersymmetric forms.

use num_traits::{Signed, Zero};

use crate::echelon::{dense_rank, solve_dense};
use crate::geometry::pair_with;
use crate::grassmann::{monomial_product_sign, GrassmannElement, Q};
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::Error;

/// A column of Grassmann constants.
pub type Column = Vec<GrassmannElement>;

fn submasks(mask: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = mask;
    loop {
        out.push(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & mask;
    }
    out.sort_unstable();
    out
}

/// Solve `sum_i basis[i] c_i = target` for coefficients `c_i` built from the
/// generators in `mask` (coefficients multiply on the right).
pub fn solve_over_grassmann(basis: &[Column], target: &Column, mask: u64) -> Option<Vec<GrassmannElement>> {
    let monos = submasks(mask);
    let n = target.len();
    // equations indexed by (row, monomial of the full product)
    let mut eq_keys: Vec<(usize, u64)> = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    let mut key = |r: usize, m: u64, keys: &mut Vec<(usize, u64)>| -> usize {
        *index.entry((r, m)).or_insert_with(|| {
            keys.push((r, m));
            keys.len() - 1
        })
    };
    let nunk = basis.len() * monos.len();
    let mut entries: Vec<(usize, usize, Q)> = Vec::new();
    for (i, f) in basis.iter().enumerate() {
        for (j, &m) in monos.iter().enumerate() {
            let col = i * monos.len() + j;
            for (r, fr) in f.iter().enumerate() {
                for (fm, fc) in fr.terms() {
                    if let Some(neg) = monomial_product_sign(*fm, m) {
                        let k = key(r, fm | m, &mut eq_keys);
                        entries.push((k, col, if neg { -fc.clone() } else { fc.clone() }));
                    }
                }
            }
        }
    }
    let mut rhs_entries = Vec::new();
    for (r, tr) in target.iter().enumerate().take(n) {
        for (tm, tc) in tr.terms() {
            let k = key(r, *tm, &mut eq_keys);
            rhs_entries.push((k, tc.clone()));
        }
    }
    let neq = eq_keys.len();
    let mut a = vec![vec![Q::zero(); nunk]; neq];
    for (k, col, v) in entries {
        a[k][col] += v;
    }
    let mut b = vec![Q::zero(); neq];
    for (k, v) in rhs_entries {
        b[k] += v;
    }
    let x = solve_dense(&a, &b)?;
    Some(
        (0..basis.len())
            .map(|i| GrassmannElement::from_terms(monos.iter().enumerate().map(|(j, &m)| (m, x[i * monos.len() + j].clone()))))
            .collect(),
    )
}

/// Bodies of the basis vectors are linearly independent: the span is a
/// free direct summand with this basis.
pub fn body_independent(basis: &[Column]) -> bool {
    if basis.is_empty() {
        return true;
    }
    let rows: Vec<Vec<Q>> = basis.iter().map(|f| f.iter().map(|x| x.body()).collect()).collect();
    dense_rank(&rows) == basis.len()
}

/// Membership of `v` in the right `O`-span of `basis`.
pub fn in_span(basis: &[Column], v: &Column, mask: u64) -> bool {
    if v.iter().all(|x| x.is_zero()) {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    solve_over_grassmann(basis, v, mask).is_some()
}

/// Apply a constant supermatrix to a column.
pub fn apply_const(m: &SuperMatrix, v: &Column) -> Column {
    let col: Vec<SuperFunction> = v.iter().cloned().map(SuperFunction::constant).collect();
    m.apply(&col).into_iter().map(|f| f.constant_part()).collect()
}

/// An even supersymmetric bilinear form with constant Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperBilinearForm {
    pub par: Vec<u8>,
    pub gram: Vec<Vec<SuperFunction>>,
}

impl SuperBilinearForm {
    pub fn new(par: Vec<u8>, gram: Vec<Vec<SuperFunction>>) -> Self {
        SuperBilinearForm { par, gram }
    }

    pub fn pair(&self, u: &Column, v: &Column) -> GrassmannElement {
        let cu: Vec<SuperFunction> = u.iter().cloned().map(SuperFunction::constant).collect();
        let cv: Vec<SuperFunction> = v.iter().cloned().map(SuperFunction::constant).collect();
        pair_with(&self.gram, &self.par, &cu, &cv).constant_part()
    }

    /// Gram matrix of the form on a list of vectors.
    pub fn restricted(&self, basis: &[Column]) -> Vec<Vec<GrassmannElement>> {
        basis.iter().map(|u| basis.iter().map(|v| self.pair(u, v)).collect()).collect()
    }

    /// The restriction to the span of `basis` is nondegenerate.
    pub fn nondegenerate_on(&self, basis: &[Column]) -> bool {
        let g = self.restricted(basis);
        let body: Vec<Vec<Q>> = g.iter().map(|r| r.iter().map(|x| x.body()).collect()).collect();
        basis.is_empty() || dense_rank(&body) == basis.len()
    }
}

fn column_parity(par: &[u8], v: &Column) -> Option<u8> {
    let mut seen = None;
    for (b, x) in v.iter().enumerate() {
        for (m, _) in x.terms() {
            let p = ((m.count_ones() as u8) + par[b]) % 2;
            if seen.is_some_and(|s| s != p) {
                return None;
            }
            seen = Some(p);
        }
    }
    seen
}

/// Free basis of `W^perp` for a free nondegenerate `W` with homogeneous
/// basis: project the standard basis onto `W^perp` and keep a subset with
/// independent bodies.
pub fn orthogonal_complement(form: &SuperBilinearForm, basis: &[Column]) -> Result<Vec<Column>, Error> {
    if !body_independent(basis) {
        return Err(Error::Invalid("basis is not free".into()));
    }
    if !form.nondegenerate_on(basis) {
        return Err(Error::Invalid("degenerate candidate".into()));
    }
    let wpar: Vec<u8> = basis
        .iter()
        .map(|w| column_parity(&form.par, w).ok_or_else(|| Error::Parity("basis vector is not homogeneous".into())))
        .collect::<Result<_, _>>()?;
    let gw = form.restricted(basis);
    let gmat = SuperMatrix::from_fn(&wpar, &wpar, |i, j| SuperFunction::constant(gw[i][j].clone()));
    let ginv = gmat.inverse()?;
    let n = form.par.len();
    let mut out: Vec<Column> = Vec::new();
    for j in 0..n {
        let e: Column = (0..n).map(|i| if i == j { GrassmannElement::one() } else { GrassmannElement::zero() }).collect();
        // c = G_W^{-1} g(W, e_j); v = e_j - sum_i w_i c_i
        let rhs: Vec<SuperFunction> = basis.iter().map(|w| SuperFunction::constant(form.pair(w, &e))).collect();
        let c: Vec<GrassmannElement> = ginv.apply(&rhs).into_iter().map(|f| f.constant_part()).collect();
        let mut v = e.clone();
        for (w, ci) in basis.iter().zip(&c) {
            for (vb, wb) in v.iter_mut().zip(w) {
                *vb -= &wb.multiply(ci);
            }
        }
        let mut trial = out.clone();
        trial.push(v.clone());
        let mut with_w = basis.to_vec();
        with_w.extend(trial.iter().cloned());
        if body_independent(&with_w) {
            out.push(v);
        }
    }
    if out.len() + basis.len() != n {
        return Err(Error::Invalid("complement is not free".into()));
    }
    Ok(out)
}

/// All monomials over `mask`, including `1`.
pub fn monomials(mask: u64) -> Vec<u64> {
    submasks(mask)
}

/// Parity of a homogeneous column: entry parity plus row parity.
pub fn vector_parity(par: &[u8], v: &Column) -> Option<u8> {
    column_parity(par, v)
}

fn scale_column(v: &Column, s: &GrassmannElement) -> Column {
    v.iter().map(|x| x.multiply(s)).collect()
}

fn rational_sqrt(x: &Q) -> Option<Q> {
    let (n, d) = (x.numer().sqrt(), x.denom().sqrt());
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Q::new(n, d))
}

/// `u^{-1/2}` for `u = 1 + nilpotent`, by the terminating binomial series.
fn inverse_sqrt_unipotent(u: &GrassmannElement) -> GrassmannElement {
    let n = u - &GrassmannElement::one();
    let mut out = GrassmannElement::one();
    let mut power = GrassmannElement::one();
    let mut coeff = Q::from_integer(1.into());
    let mut k = 0i64;
    loop {
        power = power.multiply(&n);
        if power.is_zero() {
            return out;
        }
        // binom(-1/2, k+1) = binom(-1/2, k) * (-1/2 - k) / (k + 1)
        coeff = coeff * (Q::new((-1).into(), 2.into()) - Q::from_integer(k.into())) / Q::from_integer((k + 1).into());
        out = &out + &power.scale(&coeff);
        k += 1;
    }
}

/// Remove from `v` its components along `block`, whose Gram matrix is
/// invertible: `v - sum_i block_i c_i` with `c = G^{-1} g(block, v)`.
fn project_out(form: &SuperBilinearForm, block: &[Column], v: &Column) -> Result<Column, Error> {
    let bpar: Vec<u8> = block.iter().map(|b| column_parity(&form.par, b).unwrap_or(0)).collect();
    let g = form.restricted(block);
    let ginv = SuperMatrix::from_fn(&bpar, &bpar, |i, j| SuperFunction::constant(g[i][j].clone())).inverse()?;
    let rhs: Vec<SuperFunction> = block.iter().map(|b| SuperFunction::constant(form.pair(b, v))).collect();
    let mut out = v.clone();
    for (b, c) in block.iter().zip(ginv.apply(&rhs)) {
        let c = c.constant_part();
        for (o, x) in out.iter_mut().zip(b) {
            *o -= &x.multiply(&c);
        }
    }
    Ok(out)
}

/// Normal-form basis of the span of a free, nondegenerate, homogeneous
/// `basis`: orthogonal even vectors (norm `+1` before `-1`) followed by odd
/// pairs `(f, f')` with `g(f, f') = 1`. An even norm whose body is not a
/// rational square keeps that body.
fn normalize(form: &SuperBilinearForm, basis: &[Column]) -> Result<Vec<Column>, Error> {
    let mut even: Vec<Column> = Vec::new();
    let mut odd: Vec<Column> = Vec::new();
    for v in basis {
        match column_parity(&form.par, v) {
            Some(0) => even.push(v.clone()),
            Some(_) => odd.push(v.clone()),
            None => return Err(Error::Parity("basis vector is not homogeneous".into())),
        }
    }
    let mut done: Vec<Column> = Vec::new();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    while !even.is_empty() {
        let i = match (0..even.len()).find(|&i| !form.pair(&even[i], &even[i]).body().is_zero()) {
            Some(i) => i,
            None => {
                let (i, j) = (0..even.len())
                    .flat_map(|i| (i + 1..even.len()).map(move |j| (i, j)))
                    .find(|&(i, j)| !form.pair(&even[i], &even[j]).body().is_zero())
                    .ok_or_else(|| Error::Invalid("degenerate restriction".into()))?;
                even[i] = even[i].iter().zip(&even[j]).map(|(a, b)| a + b).collect();
                i
            }
        };
        let v = even.remove(i);
        let c = form.pair(&v, &v);
        let c0 = c.body();
        let mut e = scale_column(&v, &inverse_sqrt_unipotent(&c.scale(&(Q::from_integer(1.into()) / &c0))));
        if let Some(r) = rational_sqrt(&c0.abs()) {
            e = scale_column(&e, &GrassmannElement::constant(Q::from_integer(1.into()) / r));
        }
        for w in even.iter_mut().chain(odd.iter_mut()) {
            *w = project_out(form, std::slice::from_ref(&e), w)?;
        }
        if c0 > Q::zero() {
            pos.push(e.clone());
        } else {
            neg.push(e.clone());
        }
        done.push(e);
    }
    let mut out: Vec<Column> = pos.into_iter().chain(neg).collect();
    while !odd.is_empty() {
        let f = odd.remove(0);
        let j = (0..odd.len())
            .find(|&j| !form.pair(&f, &odd[j]).body().is_zero())
            .ok_or_else(|| Error::Invalid("degenerate restriction".into()))?;
        let h = odd.remove(j);
        let h = scale_column(&h, &form.pair(&f, &h).invert()?);
        let pair = [f, h];
        for w in odd.iter_mut() {
            *w = project_out(form, &pair, w)?;
        }
        out.extend(pair);
    }
    Ok(out)
}

/// Basis of the whole space in normal form whose first `basis.len()`
/// vectors span the free nondegenerate submodule spanned by `basis`; each of
/// the two parts is in normal form on its own.
pub fn osp_complete(form: &SuperBilinearForm, basis: &[Column]) -> Result<Vec<Column>, Error> {
    if !body_independent(basis) {
        return Err(Error::Invalid("basis is not free".into()));
    }
    if !form.nondegenerate_on(basis) {
        return Err(Error::Invalid("degenerate restriction".into()));
    }
    let w = normalize(form, basis)?;
    let comp = orthogonal_complement(form, &w)?;
    let mut out = w;
    out.extend(normalize(form, &comp)?);
    Ok(out)
}
