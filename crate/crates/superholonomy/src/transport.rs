//! Parallel transport along polynomial paths.
//!
//! Exact mode solves `P' = -A P` by Picard iteration over polynomials in the
//! path parameter; it applies when the body of `A` vanishes. Hybrid mode
//! integrates the same system with RK4 in `f64` coefficients.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};

use crate::geometry::{ConnectionModel, Tensor};
use crate::grassmann::{monomial_product_sign, Q};
use crate::points::{commutator_with, pull_back_tensor, Direction, PointMap, Pullback};
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::Error;

/// A piecewise polynomial path; segment `i` is parametrized by variable 0
/// over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathModel {
    pub segments: Vec<PointMap>,
}

fn endpoint(seg: &PointMap, t: i64) -> PointMap {
    seg.eval_var(0, &Q::from_integer(t.into()))
}

impl PathModel {
    pub fn new(segments: Vec<PointMap>) -> Result<Self, Error> {
        if segments.is_empty() {
            return Err(Error::Invalid("a path needs at least one segment".into()));
        }
        for w in segments.windows(2) {
            if endpoint(&w[0], 1) != endpoint(&w[1], 0) {
                return Err(Error::Invalid("path segments do not join".into()));
            }
        }
        Ok(PathModel { segments })
    }

    pub fn single(seg: PointMap) -> Self {
        PathModel { segments: vec![seg] }
    }

    pub fn start(&self) -> PointMap {
        endpoint(&self.segments[0], 0)
    }

    pub fn end(&self) -> PointMap {
        endpoint(self.segments.last().expect("nonempty"), 1)
    }

    pub fn is_loop(&self) -> bool {
        self.start() == self.end()
    }

    /// Traverse `self` then `other`.
    pub fn concat(&self, other: &PathModel) -> Result<PathModel, Error> {
        let mut s = self.segments.clone();
        s.extend(other.segments.iter().cloned());
        PathModel::new(s)
    }

    /// The reversed path, `t -> 1 - t` on each segment.
    pub fn reversed(&self) -> PathModel {
        let flip = vec![&SuperFunction::one() - &SuperFunction::var(0)];
        PathModel { segments: self.segments.iter().rev().map(|s| s.reparametrize(&flip)).collect() }
    }

    /// Split every segment at `t = 1/2`.
    pub fn halved(&self) -> PathModel {
        let half = SuperFunction::rational(Q::new(1.into(), 2.into()));
        let lo = vec![SuperFunction::var(0).scale(&Q::new(1.into(), 2.into()))];
        let hi = vec![&half + &lo[0]];
        let segments = self.segments.iter().flat_map(|s| [s.reparametrize(&lo), s.reparametrize(&hi)]).collect();
        PathModel { segments }
    }
}

/// How a transport operator was computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportMode {
    /// Picard iterations used on each segment.
    Exact { iterations: Vec<usize> },
    /// RK4 steps per segment.
    Hybrid { steps: usize },
}

/// Numeric Grassmann coefficient.
pub type NumElem = BTreeMap<u64, f64>;

/// Square matrix with numeric Grassmann entries, acting on right coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NumMatrix {
    pub n: usize,
    pub data: Vec<NumElem>,
}

fn num_mul(a: &NumElem, b: &NumElem) -> NumElem {
    let mut out = NumElem::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            if let Some(neg) = monomial_product_sign(*ma, *mb) {
                let v = if neg { -ca * cb } else { ca * cb };
                *out.entry(ma | mb).or_insert(0.0) += v;
            }
        }
    }
    out
}

fn num_axpy(out: &mut NumElem, s: f64, x: &NumElem) {
    for (m, c) in x {
        *out.entry(*m).or_insert(0.0) += s * c;
    }
}

impl NumMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![NumElem::new(); n * n];
        for i in 0..n {
            data[i * n + i].insert(0, 1.0);
        }
        NumMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        NumMatrix { n, data: vec![NumElem::new(); n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> &NumElem {
        &self.data[i * self.n + j]
    }

    pub fn multiply(&self, o: &NumMatrix) -> NumMatrix {
        let n = self.n;
        let mut out = NumMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_empty() {
                    continue;
                }
                for j in 0..n {
                    let p = num_mul(a, &o.data[k * n + j]);
                    num_axpy(&mut out.data[i * n + j], 1.0, &p);
                }
            }
        }
        out
    }

    /// `self + s * o`.
    pub fn axpy(&self, s: f64, o: &NumMatrix) -> NumMatrix {
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&o.data) {
            num_axpy(x, s, y);
        }
        out
    }

    /// Exact matrix evaluated at a parameter value.
    pub fn from_exact(m: &SuperMatrix, t: f64) -> NumMatrix {
        let n = m.nrows();
        let mut out = NumMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = eval_num(m.get(i, j), t);
            }
        }
        out
    }

    /// Largest entrywise difference over all monomials.
    pub fn max_diff(&self, o: &NumMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (x, y) in self.data.iter().zip(&o.data) {
            for m in x.keys().chain(y.keys()) {
                let d = x.get(m).copied().unwrap_or(0.0) - y.get(m).copied().unwrap_or(0.0);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Largest difference in the body entries.
    pub fn max_body_diff(&self, o: &NumMatrix) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(x, y)| (x.get(&0).copied().unwrap_or(0.0) - y.get(&0).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluate a function of variable 0 at `t`.
pub fn eval_num(f: &SuperFunction, t: f64) -> NumElem {
    let mut out = NumElem::new();
    for (deg, g) in f.terms() {
        let e = deg.first().copied().unwrap_or(0);
        assert!(deg.iter().skip(1).all(|&d| d == 0), "hybrid transport supports one path parameter");
        let w = t.powi(e as i32);
        for (m, c) in g.terms() {
            *out.entry(*m).or_insert(0.0) += w * c.to_f64().unwrap_or(f64::NAN);
        }
    }
    out
}

/// Parallel transport `P_gamma`, from the start to the end of the path.
#[derive(Clone, Debug)]
pub struct TransportOperator {
    /// Exact matrix; present in exact mode.
    pub matrix: Option<SuperMatrix>,
    pub numeric: NumMatrix,
    pub mode: TransportMode,
}

impl TransportOperator {
    pub fn is_exact(&self) -> bool {
        self.matrix.is_some()
    }

    pub fn exact(&self) -> Result<&SuperMatrix, Error> {
        self.matrix.as_ref().ok_or(Error::HybridModeUnsupported)
    }
}

fn body_vanishes(a: &SuperMatrix) -> bool {
    a.entries().iter().all(|f| f.terms().values().all(|g| g.body().is_zero()))
}

/// Picard solution `P(s)` of `dP/ds = -A_s P`, `P(0) = id`, along variable
/// `var` of a family `y`; other parameters ride along. Returns the matrix
/// function and the number of Picard steps.
pub fn picard(conn: &ConnectionModel, y: &PointMap, var: usize) -> Result<(SuperMatrix, usize), Error> {
    let pb = Pullback::new(conn, y.clone())?;
    let a = pb.matrix(Direction::Even(var));
    if !body_vanishes(&a) {
        return Err(Error::HybridModeUnsupported);
    }
    let bound = a.support().count_ones() as usize + 1;
    let id = SuperMatrix::identity(&conn.bundle);
    let mut p = id.clone();
    let mut steps = 0;
    loop {
        steps += 1;
        let next = id.sub(&a.multiply(&p).map(|f| f.integrate(var)));
        if next == p {
            break;
        }
        p = next;
        assert!(steps <= bound, "Picard iteration exceeded {bound} steps");
    }
    Ok((p, steps))
}

/// Transport with automatic mode selection.
pub fn parallel_transport(conn: &ConnectionModel, path: &PathModel) -> Result<TransportOperator, Error> {
    match exact_transport(conn, path) {
        Err(Error::HybridModeUnsupported) => hybrid_transport(conn, path, 256),
        other => other,
    }
}

pub fn exact_transport(conn: &ConnectionModel, path: &PathModel) -> Result<TransportOperator, Error> {
    let mut total = SuperMatrix::identity(&conn.bundle);
    let mut iterations = Vec::new();
    for seg in &path.segments {
        let (p, n) = picard(conn, seg, 0)?;
        total = p.eval_var(0, &Q::from_integer(1.into())).multiply(&total);
        iterations.push(n);
    }
    Ok(TransportOperator { numeric: NumMatrix::from_exact(&total, 0.0), matrix: Some(total), mode: TransportMode::Exact { iterations } })
}

/// RK4 with `steps` fixed steps per segment.
pub fn hybrid_transport(conn: &ConnectionModel, path: &PathModel, steps: usize) -> Result<TransportOperator, Error> {
    let r = conn.rank();
    let mut total = NumMatrix::identity(r);
    for seg in &path.segments {
        let a = Pullback::new(conn, seg.clone())?.matrix(Direction::Even(0));
        let f = |t: f64, p: &NumMatrix| NumMatrix::zeros(r).axpy(-1.0, &NumMatrix::from_exact(&a, t).multiply(p));
        let h = 1.0 / steps as f64;
        let mut p = NumMatrix::identity(r);
        for k in 0..steps {
            let t = k as f64 * h;
            let k1 = f(t, &p);
            let k2 = f(t + h / 2.0, &p.axpy(h / 2.0, &k1));
            let k3 = f(t + h / 2.0, &p.axpy(h / 2.0, &k2));
            let k4 = f(t + h, &p.axpy(h, &k3));
            p = p.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
        }
        total = p.multiply(&total);
    }
    Ok(TransportOperator { matrix: None, numeric: total, mode: TransportMode::Hybrid { steps } })
}

/// Two sides of an identity between matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub lhs: SuperMatrix,
    pub rhs: SuperMatrix,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Data of the variation of transport in an odd direction.
#[derive(Clone, Debug)]
pub struct EtaVariation {
    /// `P_gamma`.
    pub transport: SuperMatrix,
    /// `J = int_0^1 P(t)^{-1} R(d_t, d_eta) P(t) dt`, summed over segments.
    pub curvature_integral: SuperMatrix,
}

fn sign_rows(par: &[u8], m: &SuperMatrix) -> SuperMatrix {
    m.map_indexed(|b, _, f| if par[b] == 1 { -f.clone() } else { f.clone() })
}

/// Compute `P_gamma` and the curvature integral for the direction of
/// generator `g`.
pub fn eta_variation(conn: &ConnectionModel, path: &PathModel, g: usize) -> Result<EtaVariation, Error> {
    if conn.patch.t_mask(conn.patch.lprime) & (1u64 << g) == 0 {
        return Err(Error::Invalid("the odd direction must be a functor generator".into()));
    }
    let curv = conn.curvature();
    let one = Q::from_integer(1.into());
    let mut total = SuperMatrix::identity(&conn.bundle);
    let mut j = SuperMatrix::zeros(&conn.bundle, &conn.bundle);
    for seg in &path.segments {
        let (p, _) = picard(conn, seg, 0)?;
        let pt = p.multiply(&total);
        let pinv = pt.inverse()?;
        let pb = Pullback::new(conn, seg.clone())?;
        let dt = pb.pushforward(Direction::Even(0));
        let de = pb.pushforward(Direction::Odd(g));
        let r = pull_back_tensor(&conn.patch, &curv, seg).eval(&[dt, de]);
        let integrand = pinv.multiply(&r).multiply(&pt);
        j = j.add(&integrand.map(|f| f.integrate(0).eval_var(0, &one)));
        total = p.eval_var(0, &one).multiply(&total);
    }
    Ok(EtaVariation { transport: total, curvature_integral: j })
}

/// `[nabla_eta, P_gamma] = P_gamma J`, written with the entrywise
/// derivative: `S dP = P J + P A_eta(x) - A_eta(y) P` with `S` the row signs.
pub fn eta_derivative_of_transport(conn: &ConnectionModel, path: &PathModel, g: usize) -> Result<IdentityReport, Error> {
    let var = eta_variation(conn, path, g)?;
    let p = &var.transport;
    let dir = Direction::Odd(g);
    let lhs = sign_rows(&conn.bundle, &dir.apply_matrix(p));
    let ax = Pullback::new(conn, path.start())?.matrix(dir);
    let ay = Pullback::new(conn, path.end())?.matrix(dir);
    let rhs = p.multiply(&var.curvature_integral).add(&p.multiply(&ax)).sub(&ay.multiply(p));
    Ok(IdentityReport { lhs, rhs })
}

/// `[nabla_eta, P^{-1} F_y(u,v) P]` against
/// `P^{-1}(((y*nabla)_eta F)(u,v) + F(nabla_eta u, v) + (-1)^{|u|} F(u, nabla_eta v))P - [J, P^{-1} F_y(u,v) P]`.
pub fn conjugated_curvature_derivative(
    conn: &ConnectionModel,
    path: &PathModel,
    f: &Tensor,
    u: &[SuperFunction],
    v: &[SuperFunction],
    g: usize,
) -> Result<IdentityReport, Error> {
    let patch = &conn.patch;
    let var = eta_variation(conn, path, g)?;
    let p = &var.transport;
    let pinv = p.inverse()?;
    let y = path.end();
    let fy = pull_back_tensor(patch, f, &y);
    let conj = |m: &SuperMatrix| pinv.multiply(m).multiply(p);
    let m = conj(&fy.eval(&[u.to_vec(), v.to_vec()]));
    let dir = Direction::Odd(g);
    let ax = Pullback::new(conn, path.start())?.matrix(dir);
    let lhs = commutator_with(&ax, &conn.bundle, dir, &m);
    let pby = Pullback::new(conn, y)?;
    let dfy = pby.covariant_derivative(&fy, dir);
    let up = crate::geometry::vector_parity(&patch.parities(), u);
    let mut inner = dfy.eval(&[u.to_vec(), v.to_vec()]);
    inner = inner.add(&fy.eval(&[pby.nabla_tangent(dir, u), v.to_vec()]));
    let last = fy.eval(&[u.to_vec(), pby.nabla_tangent(dir, v)]);
    inner = if up == 1 { inner.sub(&last) } else { inner.add(&last) };
    let rhs = conj(&inner).sub(&var.curvature_integral.bracket(&m));
    Ok(IdentityReport { lhs, rhs })
}

/// Body entries of an exact matrix at `t = 0` as `f64`.
pub fn body_f64(m: &SuperMatrix) -> Vec<Vec<f64>> {
    m.body().iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect()
}
