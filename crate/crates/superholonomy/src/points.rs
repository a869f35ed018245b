//! S-points, families of points, pullbacks and special points.
//!
//! A family `y: S x T x [params] -> M` is a list of coordinate images; each
//! is a [`SuperFunction`] whose even variables are the parameters (`t` is
//! variable 0, a second parameter `s` is variable 1) and whose generators are
//! the `etaS`/`etaT` generators of the patch context.

use crate::geometry::{apply_connection, unit, ConnectionModel, PatchModel, Tensor};
use crate::grassmann::{GrassmannElement, Q};
use crate::superfn::SuperFunction;
use crate::supermatrix::{sign, SuperMatrix};
use crate::Error;

/// A morphism `S x T x [params] -> M`, given by coordinate images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointMap {
    pub images: Vec<SuperFunction>,
}

/// An S-point: coordinate images are constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SPoint {
    pub images: Vec<GrassmannElement>,
}

fn check_images(patch: &PatchModel, images: &[SuperFunction]) -> Result<(), Error> {
    if images.len() != patch.dim() {
        return Err(Error::Invalid(format!("expected {} coordinate images, got {}", patch.dim(), images.len())));
    }
    for (a, img) in images.iter().enumerate() {
        if !img.is_homogeneous(patch.coord_parity(a)) {
            return Err(Error::Parity(format!("image of coordinate {} has the wrong parity", a + 1)));
        }
        if img.support() & patch.theta_mask() != 0 {
            return Err(Error::Invalid("point images may not involve coordinate generators".into()));
        }
    }
    Ok(())
}

impl SPoint {
    pub fn new(patch: &PatchModel, images: Vec<GrassmannElement>) -> Result<Self, Error> {
        let fs: Vec<SuperFunction> = images.iter().cloned().map(SuperFunction::constant).collect();
        check_images(patch, &fs)?;
        Ok(SPoint { images })
    }

    /// The point with every coordinate at 0.
    pub fn origin(patch: &PatchModel) -> Self {
        SPoint { images: vec![GrassmannElement::zero(); patch.dim()] }
    }

    pub fn as_map(&self) -> PointMap {
        PointMap { images: self.images.iter().cloned().map(SuperFunction::constant).collect() }
    }

    /// The underlying topological point.
    pub fn body(&self, patch: &PatchModel) -> Vec<Q> {
        self.images[..patch.p].iter().map(|g| g.body()).collect()
    }
}

impl PointMap {
    pub fn new(patch: &PatchModel, images: Vec<SuperFunction>) -> Result<Self, Error> {
        check_images(patch, &images)?;
        Ok(PointMap { images })
    }

    /// Substitute `value` for parameter `var`.
    pub fn eval_var(&self, var: usize, value: &Q) -> PointMap {
        PointMap { images: self.images.iter().map(|f| f.eval_var(var, value)).collect() }
    }

    /// The S-point when no parameters remain.
    pub fn as_point(&self) -> Option<SPoint> {
        let images = self.images.iter().map(|f| f.as_constant()).collect::<Option<Vec<_>>>()?;
        Some(SPoint { images })
    }

    /// Reparametrize: parameter `j` becomes `params[j]`.
    pub fn reparametrize(&self, params: &[SuperFunction]) -> PointMap {
        PointMap { images: self.images.iter().map(|f| f.compose(params, |_| None)).collect() }
    }

    /// Support of all images.
    pub fn support(&self) -> u64 {
        self.images.iter().fold(0, |m, f| m | f.support())
    }
}

/// `y*f`: substitute coordinate images into a function on the patch.
pub fn pull_back_fn(patch: &PatchModel, f: &SuperFunction, y: &PointMap) -> SuperFunction {
    let even = &y.images[..patch.p];
    f.compose(even, |g| {
        if g >= patch.theta(0) && g < patch.theta(0) + patch.q {
            Some(y.images[patch.p + g - patch.theta(0)].clone())
        } else {
            None
        }
    })
}

/// `x*f` for an S-point.
pub fn pull_back(patch: &PatchModel, f: &SuperFunction, x: &SPoint) -> GrassmannElement {
    pull_back_fn(patch, f, &x.as_map()).constant_part()
}

pub fn pull_back_matrix(patch: &PatchModel, m: &SuperMatrix, y: &PointMap) -> SuperMatrix {
    m.map(|f| pull_back_fn(patch, f, y))
}

pub fn pull_back_tensor(patch: &PatchModel, t: &Tensor, y: &PointMap) -> Tensor {
    t.map(|m| pull_back_matrix(patch, m, y))
}

/// Minimal `L'` for the special point of order `k`.
pub fn special_point_width(p: usize, q: usize, k: usize) -> usize {
    q + k * 2 * p
}

/// The special point `y` over `q`: `th^i -> etaT^i + q(th^i)` and
/// `x^j -> sum_{n<k} etaT^{q+2np+2j-1} etaT^{q+2np+2j} + q(x^j)`.
pub fn special_point(patch: &PatchModel, base: &PointMap, k: usize) -> Result<PointMap, Error> {
    let need = special_point_width(patch.p, patch.q, k);
    if patch.lprime < need {
        return Err(Error::TTooSmall { need, have: patch.lprime });
    }
    let t = |i: usize| SuperFunction::generator(patch.eta_t(i - 1));
    let mut images = base.images.clone();
    for i in 1..=patch.q {
        images[patch.p + i - 1] = &t(i) + &base.images[patch.p + i - 1];
    }
    for j in 1..=patch.p {
        for n in 0..k {
            let a = patch.q + 2 * n * patch.p + 2 * j - 1;
            images[j - 1] += &t(a).multiply(&t(a + 1));
        }
    }
    Ok(PointMap { images })
}

/// A direction on the parameter space `S x T x [params]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `d/d(var j)`.
    Even(usize),
    /// Left derivative by a generator.
    Odd(usize),
}

impl Direction {
    pub fn parity(self) -> u8 {
        match self {
            Direction::Even(_) => 0,
            Direction::Odd(_) => 1,
        }
    }

    pub fn apply(self, f: &SuperFunction) -> SuperFunction {
        match self {
            Direction::Even(j) => f.d_even(j),
            Direction::Odd(g) => f.left_partial(g),
        }
    }

    pub fn apply_matrix(self, m: &SuperMatrix) -> SuperMatrix {
        m.map(|f| self.apply(f))
    }
}

/// Right components of `dy[X]` in the coordinate frame.
pub fn pushforward(patch: &PatchModel, y: &PointMap, x: Direction) -> Vec<SuperFunction> {
    y.images
        .iter()
        .enumerate()
        .map(|(a, img)| {
            let l = x.apply(img);
            let pa = patch.coord_parity(a);
            let mut out = SuperFunction::zero();
            for (p, part) in l.homogeneous_parts() {
                out += &sign(p * pa == 1, part);
            }
            out
        })
        .collect()
}

/// Connection matrix of the pullback connection in direction `X`:
/// `sum_a X(y^a) . y*(A_a)` with the left scalar action.
pub fn pullback_matrix_in(patch: &PatchModel, mats: &[SuperMatrix], par: &[u8], y: &PointMap, x: Direction) -> SuperMatrix {
    let mut out = SuperMatrix::zeros(par, par);
    for (a, img) in y.images.iter().enumerate() {
        let l = x.apply(img);
        if l.is_zero() || mats[a].is_zero() {
            continue;
        }
        out = out.add(&pull_back_matrix(patch, &mats[a], y).left_scalar(&l));
    }
    out
}

/// The pullback of a connection model to a family of points.
#[derive(Clone, Debug)]
pub struct Pullback<'a> {
    pub conn: &'a ConnectionModel,
    pub y: PointMap,
}

impl<'a> Pullback<'a> {
    pub fn new(conn: &'a ConnectionModel, y: PointMap) -> Result<Self, Error> {
        check_images(&conn.patch, &y.images)?;
        Ok(Pullback { conn, y })
    }

    fn mats(&self) -> Vec<SuperMatrix> {
        (0..self.conn.patch.dim()).map(|a| self.conn.matrix(a).clone()).collect()
    }

    fn aux_mats(&self) -> Vec<SuperMatrix> {
        (0..self.conn.patch.dim()).map(|a| self.conn.aux_matrix(a).clone()).collect()
    }

    /// `A_X` on `y*E`.
    pub fn matrix(&self, x: Direction) -> SuperMatrix {
        pullback_matrix_in(&self.conn.patch, &self.mats(), &self.conn.bundle, &self.y, x)
    }

    /// `A_X` on `y*TM` from the auxiliary connection.
    pub fn aux_matrix(&self, x: Direction) -> SuperMatrix {
        pullback_matrix_in(&self.conn.patch, &self.aux_mats(), &self.conn.patch.parities(), &self.y, x)
    }

    /// `(y*nabla)_X v` on sections of `y*E`.
    pub fn nabla(&self, x: Direction, v: &[SuperFunction]) -> Vec<SuperFunction> {
        apply_connection(&self.matrix(x), &self.conn.bundle, x.parity(), |f| x.apply(f), v)
    }

    /// `(y*nabla)_X u` on sections of `y*TM`.
    pub fn nabla_tangent(&self, x: Direction, u: &[SuperFunction]) -> Vec<SuperFunction> {
        apply_connection(&self.aux_matrix(x), &self.conn.patch.parities(), x.parity(), |f| x.apply(f), u)
    }

    /// `dy[X]` as a section of `y*TM`.
    pub fn pushforward(&self, x: Direction) -> Vec<SuperFunction> {
        pushforward(&self.conn.patch, &self.y, x)
    }

    /// Graded commutator `[nabla_X, M]` for an endomorphism of `y*E`.
    pub fn commutator(&self, x: Direction, m: &SuperMatrix) -> SuperMatrix {
        commutator_with(&self.matrix(x), &self.conn.bundle, x, m)
    }

    /// Curvature of the pullback connection on two parameter directions,
    /// from the operator commutator.
    pub fn curvature(&self, x: Direction, z: Direction) -> SuperMatrix {
        let r = self.conn.rank();
        let neg = x.parity() * z.parity() == 1;
        let cols: Vec<Vec<SuperFunction>> = (0..r)
            .map(|c| {
                let e = unit(r, c);
                let xz = self.nabla(x, &self.nabla(z, &e));
                let zx = self.nabla(z, &self.nabla(x, &e));
                xz.iter().zip(&zx).map(|(a, b)| if neg { a + b } else { a - b }).collect()
            })
            .collect();
        SuperMatrix::from_columns(&self.conn.bundle, &self.conn.bundle, &cols)
    }

    /// `(y*nabla)_X F` for the pullback of a tensor given by its components
    /// in the coordinate frame.
    pub fn covariant_derivative(&self, f: &Tensor, x: Direction) -> Tensor {
        let px = x.parity();
        let aux = self.aux_matrix(x);
        let mut out = Tensor::zero(f.slots, &f.tpar, &f.bundle);
        for k in 0..f.comps().len() {
            let idx = f.tuple(k);
            let mut m = self.commutator(x, &f.comps()[k]);
            for s in 0..f.slots {
                let before: u8 = idx[..s].iter().map(|&i| f.tpar[i]).sum::<u8>() % 2;
                let mut vecs: Vec<Vec<SuperFunction>> = idx.iter().map(|&i| unit(f.dim, i)).collect();
                vecs[s] = aux.column(idx[s]);
                let corr = f.eval(&vecs);
                m = if px * before == 1 { m.add(&corr) } else { m.sub(&corr) };
            }
            out.set(&idx, m);
        }
        out
    }
}

/// `[nabla_X, M]` for a connection matrix `a`: column `C` is
/// `nabla_X(M e_C) - (-1)^{|X||M|} M nabla_X e_C`.
pub fn commutator_with(a: &SuperMatrix, par: &[u8], x: Direction, m: &SuperMatrix) -> SuperMatrix {
    let mut out = SuperMatrix::zeros(par, par);
    for (mp, part) in m.homogeneous_parts() {
        let d = SuperMatrix::from_fn(par, par, |b, c| sign(x.parity() * par[b] == 1, x.apply(part.get(b, c))));
        let mut t = a.multiply(&part).add(&d);
        let back = part.multiply(a);
        t = if x.parity() * mp == 1 { t.add(&back) } else { t.sub(&back) };
        out = out.add(&t);
    }
    out
}
