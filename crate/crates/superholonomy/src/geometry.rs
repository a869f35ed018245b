//! Coordinate patches, connections, curvature-type tensors and metrics.
//!
//! Coordinates are indexed `0..p+q`: first the even `x1..xp`, then the odd
//! `th1..thq`. Tangent vectors and bundle sections are columns of right
//! coordinates, `X = sum_a d_a X^a`.

use num_traits::{One, Zero};

use crate::echelon::{dense_inverse, RowEchelon};
use crate::grassmann::{qi, GeneratorContext, Q};
use crate::superfn::SuperFunction;
use crate::supermatrix::{sign, SuperMatrix};
use crate::Error;

/// A coordinate patch of `R^{p|q}` over `S = R^{0|L}`, with room for `L'`
/// functor generators.
///
/// Generators are laid out as `etaS1..etaSL, th1..thq, etaT1..etaTL'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchModel {
    pub p: usize,
    pub q: usize,
    pub l: usize,
    pub lprime: usize,
    ctx: GeneratorContext,
}

impl PatchModel {
    pub fn new(p: usize, q: usize, l: usize, lprime: usize) -> Result<Self, Error> {
        let ctx = GeneratorContext::new(&[("etaS", l), ("th", q), ("etaT", lprime)])?;
        Ok(PatchModel { p, q, l, lprime, ctx })
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn coord_parity(&self, a: usize) -> u8 {
        u8::from(a >= self.p)
    }

    pub fn parities(&self) -> Vec<u8> {
        (0..self.dim()).map(|a| self.coord_parity(a)).collect()
    }

    /// Global generator of `th{i+1}`.
    pub fn theta(&self, i: usize) -> usize {
        self.l + i
    }

    /// Global generator of `etaS{i+1}`.
    pub fn eta_s(&self, i: usize) -> usize {
        i
    }

    /// Global generator of `etaT{i+1}`.
    pub fn eta_t(&self, i: usize) -> usize {
        assert!(i < self.lprime, "etaT{} exceeds L' = {}", i + 1, self.lprime);
        self.l + self.q + i
    }

    pub fn s_mask(&self) -> u64 {
        crate::grassmann::range_mask(0, self.l)
    }

    pub fn theta_mask(&self) -> u64 {
        crate::grassmann::range_mask(self.l, self.q)
    }

    /// Mask of the first `n` functor generators.
    pub fn t_mask(&self, n: usize) -> u64 {
        crate::grassmann::range_mask(self.l + self.q, n.min(self.lprime))
    }

    /// Coordinate derivative `d_a`.
    pub fn partial(&self, a: usize, f: &SuperFunction) -> SuperFunction {
        if a < self.p {
            f.d_even(a)
        } else {
            f.left_partial(self.theta(a - self.p))
        }
    }

    /// The coordinate function `x^a` or `th^i`.
    pub fn coordinate(&self, a: usize) -> SuperFunction {
        if a < self.p {
            SuperFunction::var(a)
        } else {
            SuperFunction::generator(self.theta(a - self.p))
        }
    }

    /// Unit column `e_a` of length `dim`.
    pub fn unit(&self, a: usize) -> Vec<SuperFunction> {
        unit(self.dim(), a)
    }
}

pub fn unit(n: usize, a: usize) -> Vec<SuperFunction> {
    (0..n).map(|i| if i == a { SuperFunction::one() } else { SuperFunction::zero() }).collect()
}

/// Right-coordinate matrix of a Christoffel table `G[B][C]` meaning
/// `nabla e_B = sum_C G[B][C] e_C`: entry `(B, C)` of the result is
/// `(-1)^{|B||G[C][B]|} G[C][B]`.
pub fn right_matrix(par: &[u8], table: &[Vec<SuperFunction>]) -> SuperMatrix {
    SuperMatrix::from_fn(par, par, |b, c| {
        let g = &table[c][b];
        let mut out = SuperFunction::zero();
        for (p, part) in g.homogeneous_parts() {
            out += &sign(p * par[b] == 1, part);
        }
        out
    })
}

/// Apply a derivation-type operator `v -> A v + S(D v)` where `(S D v)^B`
/// is `(-1)^{|X||B|} X(v^B)`.
pub fn apply_connection<D>(a: &SuperMatrix, par: &[u8], dir_parity: u8, deriv: D, v: &[SuperFunction]) -> Vec<SuperFunction>
where
    D: Fn(&SuperFunction) -> SuperFunction,
{
    let mut out = a.apply(v);
    for (b, x) in v.iter().enumerate() {
        let d = deriv(x);
        out[b] += &sign(dir_parity * par[b] == 1, d);
    }
    out
}

/// A connection on a trivial bundle over a patch, plus the auxiliary
/// connection on the tangent bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionModel {
    pub patch: PatchModel,
    pub bundle: Vec<u8>,
    /// `gamma[a][B][C]`: `nabla_{d_a} e_B = sum_C gamma[a][B][C] e_C`.
    pub gamma: Vec<Vec<Vec<SuperFunction>>>,
    /// Same layout on the tangent bundle.
    pub aux: Vec<Vec<Vec<SuperFunction>>>,
    mats: Vec<SuperMatrix>,
    aux_mats: Vec<SuperMatrix>,
}

fn zero_table(n: usize, r: usize) -> Vec<Vec<Vec<SuperFunction>>> {
    vec![vec![vec![SuperFunction::zero(); r]; r]; n]
}

fn check_table(patch: &PatchModel, par: &[u8], t: &[Vec<Vec<SuperFunction>>], what: &str) -> Result<(), Error> {
    if t.len() != patch.dim() || t.iter().any(|m| m.len() != par.len() || m.iter().any(|r| r.len() != par.len())) {
        return Err(Error::Invalid(format!("{what} table has the wrong shape")));
    }
    for (a, m) in t.iter().enumerate() {
        for (b, row) in m.iter().enumerate() {
            for (c, g) in row.iter().enumerate() {
                let p = (patch.coord_parity(a) + par[b] + par[c]) % 2;
                if !g.is_homogeneous(p) {
                    return Err(Error::Parity(format!(
                        "{what}[{}][{}][{}] must have parity {p}",
                        a + 1,
                        b + 1,
                        c + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

impl ConnectionModel {
    pub fn new(
        patch: PatchModel,
        bundle: Vec<u8>,
        gamma: Vec<Vec<Vec<SuperFunction>>>,
        aux: Option<Vec<Vec<Vec<SuperFunction>>>>,
    ) -> Result<Self, Error> {
        let n = patch.dim();
        check_table(&patch, &bundle, &gamma, "connection")?;
        let tpar = patch.parities();
        let aux = aux.unwrap_or_else(|| zero_table(n, n));
        check_table(&patch, &tpar, &aux, "aux_connection")?;
        let mats = gamma.iter().map(|t| right_matrix(&bundle, t)).collect();
        let aux_mats = aux.iter().map(|t| right_matrix(&tpar, t)).collect();
        Ok(ConnectionModel { patch, bundle, gamma, aux, mats, aux_mats })
    }

    /// The flat connection `gamma = 0`.
    pub fn flat(patch: PatchModel, bundle: Vec<u8>) -> Self {
        let n = patch.dim();
        let r = bundle.len();
        Self::new(patch, bundle, zero_table(n, r), None).expect("zero table is valid")
    }

    /// Replace the auxiliary tangent connection.
    pub fn with_aux(&self, aux: Vec<Vec<Vec<SuperFunction>>>) -> Result<Self, Error> {
        Self::new(self.patch.clone(), self.bundle.clone(), self.gamma.clone(), Some(aux))
    }

    pub fn rank(&self) -> usize {
        self.bundle.len()
    }

    /// Right-coordinate connection matrix `A_a`.
    pub fn matrix(&self, a: usize) -> &SuperMatrix {
        &self.mats[a]
    }

    pub fn aux_matrix(&self, a: usize) -> &SuperMatrix {
        &self.aux_mats[a]
    }

    /// `nabla_{d_a} v` for a section in right coordinates.
    pub fn nabla(&self, a: usize, v: &[SuperFunction]) -> Vec<SuperFunction> {
        apply_connection(&self.mats[a], &self.bundle, self.patch.coord_parity(a), |f| self.patch.partial(a, f), v)
    }

    /// `nabla_{d_a} Y` for a tangent vector, with the auxiliary connection.
    pub fn nabla_tangent(&self, a: usize, y: &[SuperFunction]) -> Vec<SuperFunction> {
        let tpar = self.patch.parities();
        apply_connection(&self.aux_mats[a], &tpar, self.patch.coord_parity(a), |f| self.patch.partial(a, f), y)
    }

    /// Matrix of the operator `v -> nabla_a(v)` commuted with an endomorphism:
    /// column `C` of `nabla_a o F - (-1)^{|a||F|} F o nabla_a`.
    pub fn commutator(&self, a: usize, f: &SuperMatrix, f_parity: u8) -> SuperMatrix {
        let pa = self.patch.coord_parity(a);
        let r = self.rank();
        let cols: Vec<Vec<SuperFunction>> = (0..r)
            .map(|c| {
                let mut col = self.nabla(a, &f.column(c));
                let fa = f.apply(&self.mats[a].column(c));
                let neg = pa * f_parity == 1;
                for (x, y) in col.iter_mut().zip(fa) {
                    if neg {
                        *x += &y;
                    } else {
                        *x -= &y;
                    }
                }
                col
            })
            .collect();
        SuperMatrix::from_columns(&self.bundle, &self.bundle, &cols)
    }
}

/// Even tensor with `slots` tangent arguments and values in `End(E)`.
///
/// Components are indexed by coordinate tuples read left to right; for the
/// curvature the two slots are `(X, Y)`, and each covariant derivative adds
/// a slot on the left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub slots: usize,
    pub dim: usize,
    pub tpar: Vec<u8>,
    pub bundle: Vec<u8>,
    comps: Vec<SuperMatrix>,
}

/// The curvature tensor, two slots.
pub type CurvatureTensor = Tensor;

impl Tensor {
    pub fn zero(slots: usize, tpar: &[u8], bundle: &[u8]) -> Self {
        let dim = tpar.len();
        Tensor {
            slots,
            dim,
            tpar: tpar.to_vec(),
            bundle: bundle.to_vec(),
            comps: vec![SuperMatrix::zeros(bundle, bundle); dim.pow(slots as u32)],
        }
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn tuple(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.slots];
        for s in (0..self.slots).rev() {
            out[s] = k % self.dim;
            k /= self.dim;
        }
        out
    }

    pub fn comp(&self, idx: &[usize]) -> &SuperMatrix {
        &self.comps[self.index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], m: SuperMatrix) {
        let k = self.index(idx);
        self.comps[k] = m;
    }

    pub fn comps(&self) -> &[SuperMatrix] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|m| m.is_zero())
    }

    pub fn map<F: FnMut(&SuperMatrix) -> SuperMatrix>(&self, f: F) -> Self {
        Tensor { comps: self.comps.iter().map(f).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        Tensor { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        Tensor { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(), ..self.clone() }
    }

    /// Parity of component `idx` as an endomorphism.
    pub fn comp_parity(&self, idx: &[usize]) -> u8 {
        idx.iter().map(|&i| self.tpar[i]).sum::<u8>() % 2
    }

    /// Matrix of `w -> F(Z_1, ..., Z_n) w` for vectors in right coordinates.
    ///
    /// Moving the scalar of slot `s` to the right past the basis vectors of
    /// the later slots and of `w` gives the sign.
    pub fn eval(&self, vectors: &[Vec<SuperFunction>]) -> SuperMatrix {
        assert_eq!(vectors.len(), self.slots);
        let parts: Vec<Vec<Vec<(u8, SuperFunction)>>> =
            vectors.iter().map(|v| v.iter().map(|x| x.homogeneous_parts()).collect()).collect();
        let mut out = SuperMatrix::zeros(&self.bundle, &self.bundle);
        let mut idx = vec![0usize; self.slots];
        self.eval_rec(0, &parts, &mut idx, SuperFunction::one(), 0, &mut Vec::new(), &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_rec(
        &self,
        s: usize,
        parts: &[Vec<Vec<(u8, SuperFunction)>>],
        idx: &mut Vec<usize>,
        scalar: SuperFunction,
        scalar_parity: u8,
        scal_pars: &mut Vec<u8>,
        out: &mut SuperMatrix,
    ) {
        if s == self.slots {
            let comp = self.comp(idx);
            if comp.is_zero() {
                return;
            }
            let mut e = 0u32;
            for (k, &zp) in scal_pars.iter().enumerate() {
                let later: u32 = idx[k + 1..].iter().map(|&i| self.tpar[i] as u32).sum();
                e += zp as u32 * later;
            }
            let bundle = self.bundle.clone();
            let term = comp.map_indexed(|_, c, x| {
                let neg = (e + (scalar_parity * bundle[c]) as u32) % 2 == 1;
                sign(neg, x.multiply(&scalar))
            });
            *out = out.add(&term);
            return;
        }
        for a in 0..self.dim {
            for (p, z) in &parts[s][a] {
                let next = scalar.multiply(z);
                if next.is_zero() {
                    continue;
                }
                idx[s] = a;
                scal_pars.push(*p);
                self.eval_rec(s + 1, parts, idx, next, (scalar_parity + p) % 2, scal_pars, out);
                scal_pars.pop();
            }
        }
    }

    /// Fix the leading slots to the given vectors.
    pub fn partial_eval(&self, leading: &[Vec<SuperFunction>]) -> Tensor {
        let k = leading.len();
        let rest = self.slots - k;
        let mut out = Tensor::zero(rest, &self.tpar, &self.bundle);
        for j in 0..self.dim.pow(rest as u32) {
            let tail = out.tuple(j);
            let mut vecs = leading.to_vec();
            vecs.extend(tail.iter().map(|&i| unit(self.dim, i)));
            out.comps[j] = self.eval(&vecs);
        }
        out
    }
}

/// How the correction terms of the recursive covariant derivative are signed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignRule {
    /// Graded Leibniz rule: slot `j` picks up the parities of the slots to
    /// its left. The resulting `nabla^k F` is a tensor.
    Leibniz,
    /// One common sign for every direction slot, as in the literal
    /// recursion `(-1)^{|Y_{k+1}|(|Y_k| + ... + |Y_1|)}`.
    Uniform,
}

impl ConnectionModel {
    /// Curvature `R_ab = [nabla_a, nabla_b]` on unit columns.
    pub fn curvature(&self) -> CurvatureTensor {
        let n = self.patch.dim();
        let r = self.rank();
        let tpar = self.patch.parities();
        let mut t = Tensor::zero(2, &tpar, &self.bundle);
        for a in 0..n {
            for b in 0..n {
                let neg = tpar[a] * tpar[b] == 1;
                let cols: Vec<Vec<SuperFunction>> = (0..r)
                    .map(|c| {
                        let e = unit(r, c);
                        let ab = self.nabla(a, &self.nabla(b, &e));
                        let ba = self.nabla(b, &self.nabla(a, &e));
                        ab.iter().zip(&ba).map(|(x, y)| if neg { x + y } else { x - y }).collect()
                    })
                    .collect();
                t.set(&[a, b], SuperMatrix::from_columns(&self.bundle, &self.bundle, &cols));
            }
        }
        t
    }

    /// `R(X, Y)` from the operator formula `[nabla_X, nabla_Y] - nabla_[X,Y]`.
    pub fn curvature_operator(&self, x: &[SuperFunction], y: &[SuperFunction]) -> SuperMatrix {
        let r = self.rank();
        let px = vector_parity(&self.patch.parities(), x);
        let py = vector_parity(&self.patch.parities(), y);
        let bracket = self.vector_bracket(x, y);
        let cols: Vec<Vec<SuperFunction>> = (0..r)
            .map(|c| {
                let e = unit(r, c);
                let xy = self.nabla_vector(x, &self.nabla_vector(y, &e));
                let yx = self.nabla_vector(y, &self.nabla_vector(x, &e));
                let br = self.nabla_vector(&bracket, &e);
                xy.iter()
                    .zip(&yx)
                    .zip(&br)
                    .map(|((a, b), c)| {
                        let s = if px * py == 1 { a + b } else { a - b };
                        &s - c
                    })
                    .collect()
            })
            .collect();
        SuperMatrix::from_columns(&self.bundle, &self.bundle, &cols)
    }

    /// Left components `X_L^a = (-1)^{|a||X^a|} X^a` of a vector field.
    pub fn left_components(&self, x: &[SuperFunction]) -> Vec<SuperFunction> {
        x.iter()
            .enumerate()
            .map(|(a, xa)| {
                let pa = self.patch.coord_parity(a);
                let mut out = SuperFunction::zero();
                for (p, part) in xa.homogeneous_parts() {
                    out += &sign(p * pa == 1, part);
                }
                out
            })
            .collect()
    }

    /// `X(f)` for a vector field in right coordinates.
    pub fn derive(&self, x: &[SuperFunction], f: &SuperFunction) -> SuperFunction {
        let xl = self.left_components(x);
        let mut out = SuperFunction::zero();
        for (a, c) in xl.iter().enumerate() {
            if !c.is_zero() {
                out += &c.multiply(&self.patch.partial(a, f));
            }
        }
        out
    }

    /// `nabla_X v = sum_a X_L^a nabla_a v` on sections.
    pub fn nabla_vector(&self, x: &[SuperFunction], v: &[SuperFunction]) -> Vec<SuperFunction> {
        let xl = self.left_components(x);
        let mut out = vec![SuperFunction::zero(); v.len()];
        for (a, c) in xl.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = self.nabla(a, v);
            for (b, (o, di)) in out.iter_mut().zip(&d).enumerate() {
                *o += &left_scalar_entry(c, di, self.bundle[b]);
            }
        }
        out
    }

    /// Bracket of vector fields in right coordinates.
    pub fn vector_bracket(&self, x: &[SuperFunction], y: &[SuperFunction]) -> Vec<SuperFunction> {
        let tpar = self.patch.parities();
        let px = vector_parity(&tpar, x);
        let py = vector_parity(&tpar, y);
        // On coordinates: [X, Y](f) = X(Y f) - (-1)^{|X||Y|} Y(X f); compute
        // the left components X(Y_L^a) - (-1)^{|X||Y|} Y(X_L^a).
        let xl = self.left_components(x);
        let yl = self.left_components(y);
        let left: Vec<SuperFunction> = (0..x.len())
            .map(|a| {
                let u = self.derive(x, &yl[a]);
                let v = self.derive(y, &xl[a]);
                if px * py == 1 {
                    &u + &v
                } else {
                    &u - &v
                }
            })
            .collect();
        self.left_components(&left)
    }
}

/// `c * (e_B d)` written as `e_B (-1)^{|c||B|} c d`.
fn left_scalar_entry(c: &SuperFunction, d: &SuperFunction, row_parity: u8) -> SuperFunction {
    let mut out = SuperFunction::zero();
    for (p, part) in c.homogeneous_parts() {
        out += &sign(p * row_parity == 1, part.multiply(d));
    }
    out
}

/// Parity of a homogeneous vector in right coordinates (first nonzero part).
pub fn vector_parity(par: &[u8], v: &[SuperFunction]) -> u8 {
    for (a, x) in v.iter().enumerate() {
        for (p, _) in x.homogeneous_parts() {
            return (p + par[a]) % 2;
        }
    }
    0
}

impl ConnectionModel {
    /// Covariant derivative of a tensor in the coordinate direction `c`.
    pub fn covariant_derivative(&self, t: &Tensor, c: usize, rule: SignRule, direction_slots: usize) -> Tensor {
        let tpar = &t.tpar;
        let pc = tpar[c];
        let mut out = Tensor::zero(t.slots, tpar, &t.bundle);
        for k in 0..t.comps.len() {
            let idx = t.tuple(k);
            let fpar = t.comp_parity(&idx);
            let comm_parity = match rule {
                SignRule::Leibniz => fpar,
                SignRule::Uniform => idx[direction_slots..].iter().map(|&i| tpar[i]).sum::<u8>() % 2,
            };
            let mut m = self.commutator(c, &t.comps[k], comm_parity);
            for s in 0..t.slots {
                let before: u8 = match rule {
                    SignRule::Leibniz => idx[..s].iter().map(|&i| tpar[i]).sum::<u8>() % 2,
                    SignRule::Uniform => {
                        if s < direction_slots {
                            idx[..direction_slots].iter().map(|&i| tpar[i]).sum::<u8>() % 2
                        } else {
                            idx[direction_slots..s].iter().map(|&i| tpar[i]).sum::<u8>() % 2
                        }
                    }
                };
                let mut vecs: Vec<Vec<SuperFunction>> = idx.iter().map(|&i| unit(t.dim, i)).collect();
                vecs[s] = self.aux_matrix(c).column(idx[s]);
                let corr = t.eval(&vecs);
                m = if pc * before == 1 { m.add(&corr) } else { m.sub(&corr) };
            }
            out.comps[k] = m;
        }
        out
    }

    /// The full tensor `nabla F` with one more slot on the left.
    pub fn nabla_tensor(&self, t: &Tensor, rule: SignRule, direction_slots: usize) -> Tensor {
        let mut out = Tensor::zero(t.slots + 1, &t.tpar, &t.bundle);
        let block = t.comps.len();
        for c in 0..t.dim {
            let d = self.covariant_derivative(t, c, rule, direction_slots);
            for (k, m) in d.comps.into_iter().enumerate() {
                out.comps[c * block + k] = m;
            }
        }
        out
    }

    /// `nabla^k F` as a tensor with `k` direction slots followed by the
    /// slots of `F`.
    pub fn higher_tensor(&self, f: &Tensor, k: usize, rule: SignRule) -> Tensor {
        let mut t = f.clone();
        for j in 0..k {
            t = self.nabla_tensor(&t, rule, j);
        }
        t
    }

    /// `nabla^k_{Y_k,...,Y_1} F` for directions listed as `[Y_k, ..., Y_1]`.
    pub fn higher_covariant_derivative(
        &self,
        f: &Tensor,
        directions: &[Vec<SuperFunction>],
        rule: SignRule,
    ) -> Result<Tensor, Error> {
        let tpar = self.patch.parities();
        for d in directions {
            if d.len() != tpar.len() {
                return Err(Error::Invalid("direction has the wrong length".into()));
            }
            let mut seen = None;
            for (a, x) in d.iter().enumerate() {
                for (p, _) in x.homogeneous_parts() {
                    let q = (p + tpar[a]) % 2;
                    if seen.is_some_and(|s| s != q) {
                        return Err(Error::Parity("direction is not homogeneous".into()));
                    }
                    seen = Some(q);
                }
            }
        }
        let t = self.higher_tensor(f, directions.len(), rule);
        Ok(t.partial_eval(directions))
    }

    /// Torsion of the auxiliary connection: `T[a][b]` in right coordinates.
    pub fn torsion(&self) -> Vec<Vec<Vec<SuperFunction>>> {
        let n = self.patch.dim();
        let tpar = self.patch.parities();
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let ab = self.nabla_tangent(a, &unit(n, b));
                        let ba = self.nabla_tangent(b, &unit(n, a));
                        ab.iter()
                            .zip(&ba)
                            .map(|(x, y)| if tpar[a] * tpar[b] == 1 { x + y } else { x - y })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Gram components `g[a][b] = g(d_a, d_b)` of an even supersymmetric form.
///
/// The form is left linear in the first slot and right linear in the
/// second: `g(d_a X^a, d_b Y^b) = (-1)^{|X^a||b|} g_ab X^a Y^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricModel {
    pub patch: PatchModel,
    pub g: Vec<Vec<SuperFunction>>,
}

impl MetricModel {
    pub fn new(patch: PatchModel, g: Vec<Vec<SuperFunction>>) -> Result<Self, Error> {
        let n = patch.dim();
        if g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("metric has the wrong shape".into()));
        }
        for a in 0..n {
            for b in 0..n {
                let pa = patch.coord_parity(a);
                let pb = patch.coord_parity(b);
                if !g[a][b].is_homogeneous((pa + pb) % 2) {
                    return Err(Error::Parity(format!("metric entry ({}, {}) has the wrong parity", a + 1, b + 1)));
                }
                let expect = if pa * pb == 1 { -g[b][a].clone() } else { g[b][a].clone() };
                if g[a][b] != expect {
                    return Err(Error::Invalid("metric is not supersymmetric".into()));
                }
            }
        }
        let m = MetricModel { patch, g };
        if dense_inverse(&m.gram().body()).is_none() {
            return Err(Error::Invalid("metric body is degenerate".into()));
        }
        Ok(m)
    }

    pub fn gram(&self) -> SuperMatrix {
        let par = self.patch.parities();
        SuperMatrix::from_fn(&par, &par, |a, b| self.g[a][b].clone())
    }

    /// `g(X, Y)` for vectors in right coordinates.
    pub fn pair(&self, x: &[SuperFunction], y: &[SuperFunction]) -> SuperFunction {
        pair_with(&self.g, &self.patch.parities(), x, y)
    }
}

/// `g(X, Y)` for a Gram table and vectors in right coordinates.
pub fn pair_with(g: &[Vec<SuperFunction>], par: &[u8], x: &[SuperFunction], y: &[SuperFunction]) -> SuperFunction {
    let mut out = SuperFunction::zero();
    for (a, xa) in x.iter().enumerate() {
        for (p, xp) in xa.homogeneous_parts() {
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() || g[a][b].is_zero() {
                    continue;
                }
                let t = g[a][b].multiply(&xp).multiply(yb);
                out += &sign(p * par[b] == 1, t);
            }
        }
    }
    out
}

/// Levi-Civita connection of a metric whose body is constant.
pub fn levi_civita(metric: &MetricModel) -> Result<ConnectionModel, Error> {
    let patch = &metric.patch;
    let n = patch.dim();
    let par = patch.parities();
    let sgn = |x: u8, y: u8| if x * y % 2 == 1 { -Q::one() } else { Q::one() };
    // Unknowns L[a][b][c] = g(d_c, nabla_a d_b) with a <= b.
    let unknown = |a: usize, b: usize, c: usize| -> (usize, Q) {
        if a == b && par[a] == 1 {
            (((a * n + b) * n) + c, Q::zero())
        } else if a <= b {
            (((a * n + b) * n) + c, Q::one())
        } else {
            (((b * n + a) * n) + c, sgn(par[a], par[b]))
        }
    };
    let nvars = n * n * n;
    // d_a g_bc = (-1)^{(|a|+|b|)|c|} L[a][b][c] + (-1)^{|a||b|} L[a][c][b]
    let mut rows: Vec<(Vec<Q>, (usize, usize, usize))> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut row = vec![Q::zero(); nvars];
                let (u1, s1) = unknown(a, b, c);
                row[u1] += s1 * sgn((par[a] + par[b]) % 2, par[c]);
                let (u2, s2) = unknown(a, c, b);
                row[u2] += s2 * sgn(par[a], par[b]);
                rows.push((row, (a, b, c)));
            }
        }
    }
    // Odd diagonal pairs are forced to 0 and never occur.
    let used: Vec<usize> = (0..nvars).filter(|&u| rows.iter().any(|(r, _)| !r[u].is_zero())).collect();
    let mut ech = RowEchelon::new();
    let mut chosen = Vec::new();
    for (k, (row, _)) in rows.iter().enumerate() {
        let v = used
            .iter()
            .enumerate()
            .filter(|(_, &u)| !row[u].is_zero())
            .map(|(j, &u)| (j as u64, row[u].clone()))
            .collect();
        if ech.insert(v) {
            chosen.push(k);
        }
    }
    if chosen.len() != used.len() {
        return Err(Error::Invalid("Koszul system is singular".into()));
    }
    let square: Vec<Vec<Q>> = chosen.iter().map(|&k| used.iter().map(|&u| rows[k].0[u].clone()).collect()).collect();
    let inv = dense_inverse(&square).ok_or_else(|| Error::Invalid("Koszul system is singular".into()))?;
    let rhs: Vec<SuperFunction> = chosen
        .iter()
        .map(|&k| {
            let (a, b, c) = rows[k].1;
            patch.partial(a, &metric.g[b][c])
        })
        .collect();
    let mut lvals = vec![SuperFunction::zero(); nvars];
    for (j, &u) in used.iter().enumerate() {
        let mut s = SuperFunction::zero();
        for (k, r) in rhs.iter().enumerate() {
            if !inv[j][k].is_zero() {
                s += &r.scale(&inv[j][k]);
            }
        }
        lvals[u] = s;
    }
    let lval = |a: usize, b: usize, c: usize| {
        let (u, s) = unknown(a, b, c);
        lvals[u].scale(&s)
    };
    let ginv = metric.gram().inverse().map_err(|_| Error::Invalid("metric cannot be inverted exactly".into()))?;
    // nabla_a d_b = sum_d d_d G^d_ab with G = g^{-1} L in right coordinates.
    let mut table = vec![vec![vec![SuperFunction::zero(); n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let lcol: Vec<SuperFunction> = (0..n).map(|c| lval(a, b, c)).collect();
            let gam = ginv.apply(&lcol);
            // convert right coordinates to the left-coefficient table
            for (d, gd) in gam.iter().enumerate() {
                let mut v = SuperFunction::zero();
                for (p, part) in gd.homogeneous_parts() {
                    v += &sign(p * par[d] == 1, part);
                }
                table[a][b][d] = v;
            }
        }
    }
    ConnectionModel::new(patch.clone(), par.clone(), table.clone(), Some(table))
}

/// Residual of the metric identity `X g(Y,Z) - g(nabla_X Y, Z) -
/// (-1)^{|X||Y|} g(Y, nabla_X Z)` on coordinate fields; all zero when metric.
pub fn metric_defect(conn: &ConnectionModel, metric: &MetricModel) -> Vec<SuperFunction> {
    let n = conn.patch.dim();
    let par = conn.patch.parities();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let lhs = conn.patch.partial(a, &metric.g[b][c]);
                let y = unit(n, b);
                let z = unit(n, c);
                let t1 = metric.pair(&conn.nabla_tangent(a, &y), &z);
                let t2 = metric.pair(&y, &conn.nabla_tangent(a, &z));
                let t2 = if par[a] * par[b] == 1 { -t2 } else { t2 };
                out.push(&(&lhs - &t1) - &t2);
            }
        }
    }
    out
}

/// Scalar multiple of a tensor component table, used by tests.
pub fn scale_tensor(t: &Tensor, c: i64) -> Tensor {
    t.map(|m| m.scale(&qi(c)))
}

impl ConnectionModel {
    /// `nabla_X Y` with the auxiliary connection for a general field `X`.
    pub fn nabla_vector_tangent(&self, x: &[SuperFunction], y: &[SuperFunction]) -> Vec<SuperFunction> {
        let tpar = self.patch.parities();
        let xl = self.left_components(x);
        let mut out = vec![SuperFunction::zero(); y.len()];
        for (a, c) in xl.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = self.nabla_tangent(a, y);
            for (b, (o, di)) in out.iter_mut().zip(&d).enumerate() {
                *o += &left_scalar_entry(c, di, tpar[b]);
            }
        }
        out
    }

    /// Matrix of `nabla_X o F - (-1)^{|X||F|} F o nabla_X` for a general field.
    pub fn commutator_vector(&self, x: &[SuperFunction], f: &SuperMatrix) -> SuperMatrix {
        let px = vector_parity(&self.patch.parities(), x);
        let mut out = SuperMatrix::zeros(&self.bundle, &self.bundle);
        for (fp, part) in f.homogeneous_parts() {
            let cols: Vec<Vec<SuperFunction>> = (0..self.rank())
                .map(|c| {
                    let a = self.nabla_vector(x, &part.column(c));
                    let b = part.apply(&self.nabla_vector(x, &unit(self.rank(), c)));
                    a.iter().zip(&b).map(|(u, v)| if px * fp == 1 { u + v } else { u - v }).collect()
                })
                .collect();
            out = out.add(&SuperMatrix::from_columns(&self.bundle, &self.bundle, &cols));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(i: usize) -> SuperFunction {
        SuperFunction::generator(i)
    }

    fn golden() -> ConnectionModel {
        let patch = PatchModel::new(0, 1, 2, 2).unwrap();
        let a = g(0).multiply(&g(1)).multiply(&g(patch.theta(0)));
        ConnectionModel::new(patch, vec![1], vec![vec![vec![a]]], None).unwrap()
    }

    #[test]
    fn golden_curvature() {
        let c = golden();
        let r = c.curvature();
        let a = g(0).multiply(&g(1));
        let expect = SuperMatrix::from_fn(&[1], &[1], |_, _| a.scale(&qi(2)));
        assert_eq!(r.comp(&[0, 0]), &expect);
        let u = g(c.patch.eta_t(0));
        let v = g(c.patch.eta_t(1));
        let val = r.eval(&[vec![u.clone()], vec![v.clone()]]);
        let want = a.multiply(&u).multiply(&v).scale(&qi(-2));
        assert_eq!(val.get(0, 0), &want);
        assert_eq!(c.curvature_operator(&[u.clone()], &[v.clone()]), val);
    }

    fn mixed_model() -> ConnectionModel {
        // R^{1|2} over L = 2, bundle of rank (1|1)
        let patch = PatchModel::new(1, 2, 2, 0).unwrap();
        let x = SuperFunction::var(0);
        let (t1, t2) = (g(patch.theta(0)), g(patch.theta(1)));
        let (e1, e2) = (g(0), g(1));
        let mut gamma = zero_table(3, 2);
        gamma[0][0][0] = x.multiply(&t1).multiply(&t2);
        gamma[0][0][1] = &e1 + &x.multiply(&t1);
        gamma[1][0][0] = t2.clone();
        gamma[1][1][1] = &t1 + &e2.multiply(&x);
        gamma[2][0][1] = &SuperFunction::from_int(1) + &t1.multiply(&t2);
        gamma[2][1][0] = x.multiply(&x).multiply(&e1.multiply(&e2));
        let mut aux = zero_table(3, 3);
        aux[1][2][0] = e1.multiply(&t2);
        aux[2][1][0] = x.clone();
        aux[0][1][2] = t1.multiply(&t2);
        ConnectionModel::new(patch, vec![0, 1], gamma, Some(aux)).unwrap()
    }

    fn fields(c: &ConnectionModel) -> Vec<Vec<SuperFunction>> {
        let p = &c.patch;
        let x = SuperFunction::var(0);
        let (t1, t2) = (g(p.theta(0)), g(p.theta(1)));
        let one = SuperFunction::from_int(1);
        vec![
            vec![&x + &SuperFunction::from_int(2), g(0), x.multiply(&t1)],
            vec![t1.clone(), x.clone(), &one + &t1.multiply(&t2)],
            vec![g(1).multiply(&t1).multiply(&t2), &x + &t1.multiply(&t2), x.multiply(&g(0).multiply(&g(1)))],
            vec![t1.multiply(&t2), t2.clone(), g(1)],
        ]
    }

    #[test]
    fn curvature_matches_operator_formula() {
        let c = mixed_model();
        let r = c.curvature();
        for x in fields(&c) {
            for y in fields(&c) {
                assert_eq!(r.eval(&[x.clone(), y.clone()]), c.curvature_operator(&x, &y));
            }
        }
    }

    #[test]
    fn curvature_is_supersymmetric_in_slots() {
        let c = mixed_model();
        let r = c.curvature();
        let par = c.patch.parities();
        for a in 0..3 {
            for b in 0..3 {
                let s = r.comp(&[b, a]);
                let s = if par[a] * par[b] == 1 { s.clone() } else { s.neg() };
                assert_eq!(r.comp(&[a, b]), &s);
            }
        }
    }

    #[test]
    fn leibniz_derivative_is_tensorial() {
        let c = mixed_model();
        let r = c.curvature();
        let d = c.nabla_tensor(&r, SignRule::Leibniz, 0);
        let fs = fields(&c);
        for x in &fs {
            for y in &fs {
                for z in &fs {
                    let px = vector_parity(&c.patch.parities(), x);
                    let py = vector_parity(&c.patch.parities(), y);
                    let ryz = r.eval(&[y.clone(), z.clone()]);
                    let mut want = c.commutator_vector(x, &ryz);
                    want = want.sub(&r.eval(&[c.nabla_vector_tangent(x, y), z.clone()]));
                    let last = r.eval(&[y.clone(), c.nabla_vector_tangent(x, z)]);
                    want = if px * py == 1 { want.add(&last) } else { want.sub(&last) };
                    assert_eq!(d.eval(&[x.clone(), y.clone(), z.clone()]), want);
                }
            }
        }
    }

    #[test]
    fn uniform_rule_differs_with_odd_directions() {
        let c = mixed_model();
        let r = c.curvature();
        let lb = c.higher_tensor(&r, 2, SignRule::Leibniz);
        let un = c.higher_tensor(&r, 2, SignRule::Uniform);
        assert_eq!(c.higher_tensor(&r, 1, SignRule::Leibniz), c.higher_tensor(&r, 1, SignRule::Uniform));
        assert_ne!(lb, un);
        // all-even direction slots agree
        assert_eq!(lb.comp(&[0, 0, 1, 2]), un.comp(&[0, 0, 1, 2]));
    }

    #[test]
    fn levi_civita_is_metric_and_torsion_free() {
        let patch = PatchModel::new(1, 2, 2, 0).unwrap();
        let x = SuperFunction::var(0);
        let (t1, t2) = (g(patch.theta(0)), g(patch.theta(1)));
        let e12 = g(0).multiply(&g(1));
        let f = &SuperFunction::from_int(1) + &e12.multiply(&t1).multiply(&t2);
        let gx = &SuperFunction::from_int(1) + &x.multiply(&t1).multiply(&t2);
        let h = g(0).multiply(&t1).multiply(&t2);
        let m = vec![
            vec![gx, h.clone(), g(1)],
            vec![h, SuperFunction::zero(), f.clone()],
            vec![g(1), -f.clone(), SuperFunction::zero()],
        ];
        let metric = MetricModel::new(patch, m).unwrap();
        let lc = levi_civita(&metric).unwrap();
        assert!(lc.torsion().iter().flatten().flatten().all(|t| t.is_zero()));
        assert!(metric_defect(&lc, &metric).iter().all(|t| t.is_zero()));
    }
}
