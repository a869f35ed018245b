//! Holonomy algebras from finite samples of paths, points and vectors.
//!
//! Every sample path is swept: the generator attached to the sub-path ending
//! at `gamma(t)` is polynomial in `t`, and the span over all `t` is the span
//! of its `t`-coefficients.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bilinear::{body_independent, in_span, monomials, Column};
use crate::geometry::{ConnectionModel, SignRule, Tensor};
use crate::grassmann::{q, GrassmannElement, Q};
use crate::lie::{span_equal, LieSubalgebra};
use crate::points::{commutator_with, pull_back_tensor, Direction, PointMap, Pullback, SPoint};
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::transport::{exact_transport, picard, PathModel};
use crate::Error;

/// Finite sample standing in for "all points, paths and vectors".
#[derive(Clone, Debug)]
pub struct SampleSpec {
    pub base: SPoint,
    /// S-paths starting at `base`; each is swept.
    pub paths: Vec<PathModel>,
    /// S-loops at `base` for group-level checks.
    pub loops: Vec<PathModel>,
    pub kmax: usize,
    pub lprime_max: usize,
    pub seed: u64,
    pub rule: SignRule,
}

fn small_rational(rng: &mut ChaCha8Rng) -> Q {
    let opts = [q(-1, 1), q(1, 2), q(1, 1), q(2, 1), q(-1, 2)];
    opts[rng.gen_range(0..opts.len())].clone()
}

/// Random Grassmann element of parity `p` in the S generators.
fn random_soul(rng: &mut ChaCha8Rng, l: usize, p: u8) -> GrassmannElement {
    let mut out = GrassmannElement::zero();
    for m in 1..(1u64 << l) {
        if (m.count_ones() % 2) as u8 == p && rng.gen_bool(0.5) {
            out.add_term(m, small_rational(rng));
        }
    }
    out
}

impl SampleSpec {
    /// Deterministic sample: straight and quadratic paths from `base` to
    /// seeded random targets, and loops built from them.
    pub fn standard(conn: &ConnectionModel, base: SPoint, npaths: usize, kmax: usize, lprime_max: usize, seed: u64) -> Self {
        let patch = &conn.patch;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = SuperFunction::var(0);
        let one_minus = &SuperFunction::one() - &t;
        let mut paths = Vec::new();
        let mut loops = Vec::new();
        for k in 0..npaths {
            let target: Vec<GrassmannElement> = (0..patch.dim())
                .map(|a| {
                    let p = patch.coord_parity(a);
                    let mut g = random_soul(&mut rng, patch.l, p);
                    if p == 0 && rng.gen_bool(0.5) {
                        g += &GrassmannElement::constant(small_rational(&mut rng));
                    }
                    g
                })
                .collect();
            let images: Vec<SuperFunction> = (0..patch.dim())
                .map(|a| {
                    let x0 = SuperFunction::constant(base.images[a].clone());
                    let d = SuperFunction::constant(&target[a] - &base.images[a]);
                    let lin = t.multiply(&d);
                    if k % 2 == 1 {
                        &x0 + &t.multiply(&lin)
                    } else {
                        &x0 + &lin
                    }
                })
                .collect();
            let seg = PointMap { images };
            let bump: Vec<SuperFunction> = (0..patch.dim())
                .map(|a| {
                    let p = patch.coord_parity(a);
                    let d = SuperFunction::constant(random_soul(&mut rng, patch.l, p));
                    &SuperFunction::constant(base.images[a].clone()) + &t.multiply(&one_minus).multiply(&d)
                })
                .collect();
            paths.push(PathModel::single(seg.clone()));
            let lp = PathModel::single(seg);
            let back = lp.reversed();
            loops.push(PathModel::single(PointMap { images: bump }));
            if let Ok(l) = lp.concat(&back) {
                loops.push(l);
            }
        }
        SampleSpec { base, paths, loops, kmax, lprime_max, seed, rule: SignRule::Leibniz }
    }

    /// All paths including the constant path at the base.
    fn swept_paths(&self) -> Vec<PathModel> {
        let mut out = vec![PathModel::single(self.base.as_map())];
        out.extend(self.paths.iter().cloned());
        out
    }
}

/// Constant matrices from the coefficients of every even variable.
pub fn parameter_coefficients(m: &SuperMatrix) -> Vec<SuperMatrix> {
    let mut by_deg: BTreeMap<Vec<u32>, SuperMatrix> = BTreeMap::new();
    let rows = m.row_parities().to_vec();
    let cols = m.col_parities().to_vec();
    for (cell, f) in m.entries().iter().enumerate() {
        for (deg, g) in f.terms() {
            let e = by_deg.entry(deg.clone()).or_insert_with(|| SuperMatrix::zeros(&rows, &cols));
            let (i, j) = (cell / cols.len(), cell % cols.len());
            e.set(i, j, SuperFunction::constant(g.clone()));
        }
    }
    by_deg.into_values().filter(|x| !x.is_zero()).collect()
}

/// `M = sum_I eta^I . M^I` over the generators of `mask`, with the left
/// scalar action; keys are the monomials `I`.
pub fn split_matrix(m: &SuperMatrix, mask: u64) -> BTreeMap<u64, SuperMatrix> {
    let rows = m.row_parities().to_vec();
    let cols = m.col_parities().to_vec();
    let mut out: BTreeMap<u64, SuperMatrix> = BTreeMap::new();
    for (cell, f) in m.entries().iter().enumerate() {
        let (i, j) = (cell / cols.len(), cell % cols.len());
        let g = f.as_constant().expect("split needs constant entries");
        for (mono, a) in g.coefficient_split_mask(mask) {
            let deg = mono.count_ones() as u8 % 2;
            let mut v = GrassmannElement::zero();
            for p in [0u8, 1] {
                let part = a.parity_part(p);
                if part.is_zero() {
                    continue;
                }
                let neg = deg * ((rows[i] + p) % 2) == 1;
                v += &if neg { -part } else { part };
            }
            let e = out.entry(mono).or_insert_with(|| SuperMatrix::zeros(&rows, &cols));
            let cur = e.get(i, j).clone();
            e.set(i, j, &cur + &SuperFunction::constant(v));
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Which monomials may dress a generator `G(e_a, e_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dressing {
    /// Vector coefficients of any parity.
    Any,
    /// Even vectors: `u = e_a m_u` with `|m_u| = |a|`, same for `v`.
    Even(u8, u8),
}

impl Dressing {
    /// Is `m` (total parity `pm`, degree `dm`) a product `m_u m_v` of the
    /// allowed kind?
    pub fn allows(self, dm: u32) -> bool {
        match self {
            Dressing::Any => true,
            Dressing::Even(a, b) => {
                let pm = (dm % 2) as u8;
                pm == (a + b) % 2 && (a * b == 0 || dm >= 2)
            }
        }
    }

    /// Can an S-monomial of degree `ds` be completed by a T-monomial on
    /// `free` unused generators to an allowed dressing?
    pub fn completable(self, ds: u32, free: u32) -> bool {
        match self {
            Dressing::Any => true,
            Dressing::Even(..) => (0..=free).any(|k| self.allows(ds + k)),
        }
    }
}

/// A generator over `O_{S x T}` with its dressing rule.
#[derive(Clone, Debug)]
pub struct Generator {
    pub matrix: SuperMatrix,
    pub dressing: Dressing,
}

/// Sweep data along one path: for each segment, the point family and the
/// transport from the base to `gamma(t)`.
fn sweep(conn: &ConnectionModel, path: &PathModel) -> Result<Vec<(PointMap, SuperMatrix)>, Error> {
    let one = Q::from_integer(1.into());
    let mut prefix = SuperMatrix::identity(&conn.bundle);
    let mut out = Vec::new();
    for seg in &path.segments {
        let (p, _) = picard(conn, seg, 0)?;
        out.push((seg.clone(), p.multiply(&prefix)));
        prefix = p.eval_var(0, &one).multiply(&prefix);
    }
    Ok(out)
}

/// Shift as many coordinates as `lp` functor generators allow: odd
/// coordinates first, then pairs for even coordinates.
pub fn special_point_sized(conn: &ConnectionModel, base: &PointMap, lp: usize) -> PointMap {
    let patch = &conn.patch;
    let g = |i: usize| SuperFunction::generator(patch.eta_t(i));
    let mut images = base.images.clone();
    for i in 0..patch.q.min(lp) {
        images[patch.p + i] = &images[patch.p + i] + &g(i);
    }
    let mut n = 0;
    'outer: loop {
        for j in 0..patch.p {
            let a = patch.q + 2 * n * patch.p + 2 * j;
            if a + 1 >= lp {
                break 'outer;
            }
            images[j] = &images[j] + &g(a).multiply(&g(a + 1));
        }
        n += 1;
        if patch.p == 0 {
            break;
        }
    }
    PointMap { images }
}

/// Cache of `nabla^k R` for `k <= kmax`.
#[derive(Clone, Debug)]
pub struct CurvatureTower {
    pub levels: Vec<Tensor>,
}

impl CurvatureTower {
    pub fn new(conn: &ConnectionModel, kmax: usize, rule: SignRule) -> Self {
        let mut levels = vec![conn.curvature()];
        for k in 0..kmax {
            let next = conn.nabla_tensor(&levels[k], rule, k);
            levels.push(next);
        }
        CurvatureTower { levels }
    }
}

fn conjugate(p: &SuperMatrix, pinv: &SuperMatrix, m: &SuperMatrix) -> SuperMatrix {
    pinv.multiply(m).multiply(p)
}

/// Constant generators of the Galaev algebra: `t`-coefficients of
/// `P(t)^{-1} (nabla^k R)_{gamma(t)} P(t)` on coordinate directions.
pub fn galaev_generators(conn: &ConnectionModel, spec: &SampleSpec, tower: &CurvatureTower) -> Result<Vec<SuperMatrix>, Error> {
    let patch = &conn.patch;
    let mut out = Vec::new();
    for path in spec.swept_paths() {
        for (seg, p) in sweep(conn, &path)? {
            let pinv = p.inverse()?;
            for (k, t) in tower.levels.iter().enumerate().take(spec.kmax + 1) {
                let _ = k;
                let tp = pull_back_tensor(patch, t, &seg);
                for m in tp.comps() {
                    if m.is_zero() {
                        continue;
                    }
                    out.extend(parameter_coefficients(&conjugate(&p, &pinv, m)));
                }
            }
        }
    }
    Ok(out)
}

/// Span of `s . C` for every S-monomial `s`, or only `s = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanKind {
    Real,
    Module,
}

pub fn galaev_algebra(conn: &ConnectionModel, spec: &SampleSpec, kind: SpanKind) -> Result<LieSubalgebra, Error> {
    let tower = CurvatureTower::new(conn, spec.kmax, spec.rule);
    galaev_from(conn, spec, &tower, kind)
}

pub fn galaev_from(conn: &ConnectionModel, spec: &SampleSpec, tower: &CurvatureTower, kind: SpanKind) -> Result<LieSubalgebra, Error> {
    let gens = galaev_generators(conn, spec, tower)?;
    let mut alg = LieSubalgebra::zero(&conn.bundle);
    for g in &gens {
        alg.insert(g);
    }
    if kind == SpanKind::Module {
        alg.close_module(conn.patch.s_mask());
    }
    alg.close();
    Ok(alg)
}

/// Generators `P^{-1} R_y(e_a, e_b) P` of `hol_x(T)` at `T`-size `lp`,
/// with `y` the special point over `gamma(t)` reached by a straight
/// connecting segment.
pub fn functorial_generators(conn: &ConnectionModel, spec: &SampleSpec, lp: usize) -> Result<Vec<Generator>, Error> {
    let patch = &conn.patch;
    if lp > patch.lprime {
        return Err(Error::TTooSmall { need: lp, have: patch.lprime });
    }
    let r = conn.curvature();
    let par = patch.parities();
    let tau = SuperFunction::var(1);
    let one = Q::from_integer(1.into());
    let mut out = Vec::new();
    for path in spec.swept_paths() {
        for (seg, p) in sweep(conn, &path)? {
            let y = special_point_sized(conn, &seg, lp);
            let conn_images: Vec<SuperFunction> = seg
                .images
                .iter()
                .zip(&y.images)
                .map(|(a, b)| a + &tau.multiply(&(b - a)))
                .collect();
            let c = PointMap { images: conn_images };
            let (pc, _) = picard(conn, &c, 1)?;
            let total = pc.eval_var(1, &one).multiply(&p);
            let tinv = total.inverse()?;
            let ry = pull_back_tensor(patch, &r, &y);
            for a in 0..patch.dim() {
                for b in 0..patch.dim() {
                    let m = ry.comp(&[a, b]);
                    if m.is_zero() {
                        continue;
                    }
                    for coeff in parameter_coefficients(&conjugate(&total, &tinv, m)) {
                        out.push(Generator { matrix: coeff, dressing: Dressing::Even(par[a], par[b]) });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn left_mono(m: &SuperMatrix, mono: u64) -> SuperMatrix {
    m.left_scalar(&SuperFunction::constant(GrassmannElement::monomial(mono)))
}

/// Coefficient matrices of the dressed generators, before closing.
pub fn coefficient_generators(conn: &ConnectionModel, gens: &[Generator], lp: usize) -> Vec<SuperMatrix> {
    let tmask = conn.patch.t_mask(lp);
    let smonos = monomials(conn.patch.s_mask());
    let mut out = Vec::new();
    for g in gens {
        for (j, c) in split_matrix(&g.matrix, tmask) {
            let free = lp as u32 - j.count_ones();
            for &s in &smonos {
                if g.dressing.completable(s.count_ones(), free) {
                    let m = left_mono(&c, s);
                    if !m.is_zero() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// `hol^C` from the sample at `T`-size `lp`.
pub fn coefficient_algebra(conn: &ConnectionModel, spec: &SampleSpec, lp: usize) -> Result<LieSubalgebra, Error> {
    let gens = functorial_generators(conn, spec, lp)?;
    let mut alg = LieSubalgebra::zero(&conn.bundle);
    for m in coefficient_generators(conn, &gens, lp) {
        alg.insert(&m);
    }
    alg.close();
    Ok(alg)
}

/// All dressed generators `m . G` over `S` and the first `lp` functor
/// generators.
pub fn dressed_generators(conn: &ConnectionModel, gens: &[Generator], lp: usize) -> Vec<SuperMatrix> {
    let mask = conn.patch.s_mask() | conn.patch.t_mask(lp);
    let monos = monomials(mask);
    let mut out = Vec::new();
    for g in gens {
        for &m in &monos {
            if g.dressing.allows(m.count_ones()) {
                let d = left_mono(&g.matrix, m);
                if !d.is_zero() {
                    out.push(d);
                }
            }
        }
    }
    out
}

/// `hol_x(T)` itself: the closure of the dressed generators.
pub fn functorial_algebra(conn: &ConnectionModel, spec: &SampleSpec, lp: usize) -> Result<LieSubalgebra, Error> {
    let gens = functorial_generators(conn, spec, lp)?;
    let mut alg = LieSubalgebra::zero(&conn.bundle);
    for m in dressed_generators(conn, &gens, lp) {
        alg.insert(&m);
    }
    alg.close();
    Ok(alg)
}

/// Dimensions of `hol^C` for `L' = 0..=lprime_max` and the first `L'`
/// after which three consecutive values agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilization {
    pub dims: Vec<usize>,
    pub threshold: Option<usize>,
}

pub fn stabilization_threshold(conn: &ConnectionModel, spec: &SampleSpec) -> Result<Stabilization, Error> {
    let mut dims = Vec::new();
    let mut threshold = None;
    for lp in 0..=spec.lprime_max.min(conn.patch.lprime) {
        dims.push(coefficient_algebra(conn, spec, lp)?.dim());
        let n = dims.len();
        if n >= 3 && dims[n - 1] == dims[n - 2] && dims[n - 2] == dims[n - 3] {
            threshold = Some(n - 3);
            break;
        }
    }
    Ok(Stabilization { dims, threshold })
}

/// Result of comparing the coefficient algebra with the Galaev algebra.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub lprime: usize,
    pub stabilization: Stabilization,
    pub galaev: LieSubalgebra,
    pub galaev_real: LieSubalgebra,
    pub coefficient: LieSubalgebra,
    /// Every coefficient generator lies in the Galaev algebra.
    pub coefficient_in_galaev: bool,
    /// Every Galaev generator lies in the coefficient algebra.
    pub galaev_in_coefficient: bool,
    pub equal: bool,
}

pub fn comparison_check(conn: &ConnectionModel, spec: &SampleSpec) -> Result<Comparison, Error> {
    let stab = stabilization_threshold(conn, spec)?;
    let lprime = match stab.threshold {
        Some(t) => t + 2,
        None => *[spec.lprime_max, conn.patch.lprime].iter().min().expect("two values"),
    };
    let tower = CurvatureTower::new(conn, spec.kmax, spec.rule);
    let galaev = galaev_from(conn, spec, &tower, SpanKind::Module)?;
    let galaev_real = galaev_from(conn, spec, &tower, SpanKind::Real)?;
    let fgens = functorial_generators(conn, spec, lprime)?;
    let cgens = coefficient_generators(conn, &fgens, lprime);
    let mut coefficient = LieSubalgebra::zero(&conn.bundle);
    for m in &cgens {
        coefficient.insert(m);
    }
    coefficient.close();
    let coefficient_in_galaev = cgens.iter().all(|m| galaev.contains(m));
    let ggens = galaev_generators(conn, spec, &tower)?;
    let galaev_in_coefficient = ggens.iter().all(|m| coefficient.contains(m));
    let equal = span_equal(&galaev, &coefficient);
    Ok(Comparison {
        lprime,
        stabilization: stab,
        galaev,
        galaev_real,
        coefficient,
        coefficient_in_galaev,
        galaev_in_coefficient,
        equal,
    })
}

/// Check `hol_x(T) = hol_x(T)_{deg <= n} + (hol^Gal (x) O_T^{deg > n})_even`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeDecomposition {
    pub n: usize,
    pub lprime: usize,
    pub functorial_dim: usize,
    /// `(hol^Gal (x) O_T^{deg > n})_even` is inside `hol_x(T)`.
    pub high_part_contained: bool,
    /// The degree `> n` part of every element of `hol_x(T)` lies in it.
    pub projection_contained: bool,
}

impl DegreeDecomposition {
    pub fn holds(&self) -> bool {
        self.high_part_contained && self.projection_contained
    }
}

pub fn degree_decomposition_check(conn: &ConnectionModel, spec: &SampleSpec, n: usize, lp: usize) -> Result<DegreeDecomposition, Error> {
    let hol = functorial_algebra(conn, spec, lp)?;
    let gal = galaev_algebra(conn, spec, SpanKind::Module)?;
    let tmask = conn.patch.t_mask(lp);
    let mut high = LieSubalgebra::zero(&conn.bundle);
    for tau in monomials(tmask) {
        if (tau.count_ones() as usize) <= n {
            continue;
        }
        for b in gal.basis() {
            for (p, part) in b.homogeneous_parts() {
                if (p as u32 + tau.count_ones()) % 2 == 0 {
                    high.insert(&left_mono(&part, tau));
                }
            }
        }
    }
    let high_part_contained = hol.contains_all(&high);
    let projection_contained = hol.basis().iter().all(|b| {
        let mut proj = SuperMatrix::zeros(&conn.bundle, &conn.bundle);
        for (j, c) in split_matrix(b, tmask) {
            if j.count_ones() as usize > n {
                proj = proj.add(&left_mono(&c, j));
            }
        }
        high.contains(&proj)
    });
    Ok(DegreeDecomposition { n, lprime: lp, functorial_dim: hol.dim(), high_part_contained, projection_contained })
}

/// Both sides of the twofold invariance statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Twofold {
    pub a_group: bool,
    pub a_algebra: bool,
    pub b_group: bool,
    pub b_algebra: bool,
}

impl Twofold {
    pub fn a(&self) -> bool {
        self.a_group && self.a_algebra
    }

    pub fn b(&self) -> bool {
        self.b_group && self.b_algebra
    }

    pub fn agree(&self) -> bool {
        self.a() == self.b()
    }
}

/// Loops at the base with functor generators mixed into their interior.
pub fn functorial_loops(conn: &ConnectionModel, spec: &SampleSpec, lp: usize) -> Vec<PathModel> {
    let patch = &conn.patch;
    let t = SuperFunction::var(0);
    let bump = t.multiply(&(&SuperFunction::one() - &t));
    let mut out = Vec::new();
    for lo in &spec.loops {
        let segs: Vec<PointMap> = lo
            .segments
            .iter()
            .map(|s| {
                let y = special_point_sized(conn, &PointMap { images: vec![SuperFunction::zero(); patch.dim()] }, lp);
                PointMap { images: s.images.iter().zip(&y.images).map(|(a, d)| a + &bump.multiply(d)).collect() }
            })
            .collect();
        out.push(PathModel { segments: segs });
    }
    out
}

fn nilpotent_exp(h: &SuperMatrix, bound: usize) -> Option<SuperMatrix> {
    let mut term = SuperMatrix::identity(h.row_parities());
    let mut sum = term.clone();
    for k in 1..=bound {
        term = term.multiply(h).scale(&q(1, k as i64));
        if term.is_zero() {
            return Some(sum);
        }
        sum = sum.add(&term);
    }
    None
}

fn to_column(v: &Column) -> Vec<SuperFunction> {
    v.iter().cloned().map(SuperFunction::constant).collect()
}

fn from_column(v: Vec<SuperFunction>) -> Column {
    v.into_iter().map(|f| f.constant_part()).collect()
}

fn transports(conn: &ConnectionModel, loops: &[PathModel]) -> Result<Vec<SuperMatrix>, Error> {
    loops.iter().map(|l| exact_transport(conn, l).and_then(|op| op.exact().cloned())).collect()
}

/// Invariance of a vector `X` in the fibre at the base.
pub fn invariance_vector(conn: &ConnectionModel, spec: &SampleSpec, x: &Column, lp: usize) -> Result<Twofold, Error> {
    invariance_submodule_inner(conn, spec, &[x.clone()], lp, true)
}

/// Invariance of a free submodule with the given basis.
pub fn invariance_submodule(conn: &ConnectionModel, spec: &SampleSpec, basis: &[Column], lp: usize) -> Result<Twofold, Error> {
    if !body_independent(basis) {
        return Err(Error::Invalid("submodule basis is not free".into()));
    }
    invariance_submodule_inner(conn, spec, basis, lp, false)
}

fn invariance_submodule_inner(conn: &ConnectionModel, spec: &SampleSpec, basis: &[Column], lp: usize, fixed: bool) -> Result<Twofold, Error> {
    let smask = conn.patch.s_mask();
    let stmask = smask | conn.patch.t_mask(lp);
    let bound = conn.patch.context().total() + conn.rank() + 1;
    // `fixed`: every operator must fix each basis vector; otherwise it must
    // map the span into itself.
    let group_ok = |m: &SuperMatrix, mask: u64| -> bool {
        basis.iter().all(|f| {
            let img = from_column(m.apply(&to_column(f)));
            if fixed {
                &img == f
            } else {
                in_span(basis, &img, mask)
            }
        })
    };
    let alg_ok = |m: &SuperMatrix, mask: u64| -> bool {
        basis.iter().all(|f| {
            let img = from_column(m.apply(&to_column(f)));
            if fixed {
                img.iter().all(|x| x.is_zero())
            } else {
                in_span(basis, &img, mask)
            }
        })
    };
    let tower = CurvatureTower::new(conn, spec.kmax, spec.rule);
    let gal = galaev_from(conn, spec, &tower, SpanKind::Module)?;
    let a_algebra = gal.basis().iter().all(|h| alg_ok(h, smask));
    let mut a_group = transports(conn, &spec.loops)?.iter().all(|p| group_ok(p, smask));
    for h in gal.basis() {
        if let Some(e) = nilpotent_exp(&h, bound) {
            a_group &= group_ok(&e, smask);
        }
    }
    let fgens = functorial_generators(conn, spec, lp)?;
    let dressed = dressed_generators(conn, &fgens, lp);
    let b_algebra = dressed.iter().all(|h| alg_ok(h, stmask));
    let mut b_group = transports(conn, &functorial_loops(conn, spec, lp))?.iter().all(|p| group_ok(p, stmask));
    for h in &dressed {
        if let Some(e) = nilpotent_exp(h, bound) {
            b_group &= group_ok(&e, stmask);
        }
    }
    Ok(Twofold { a_group, a_algebra, b_group, b_algebra })
}

/// `alg_x` against `P^{-1} alg_y P` along `gamma: x -> y`, where the sample
/// at `y` runs back along `gamma` first.
pub fn conjugation_check(conn: &ConnectionModel, spec: &SampleSpec, gamma: &PathModel, lp: usize) -> Result<bool, Error> {
    let p = exact_transport(conn, gamma)?.exact()?.clone();
    let pinv = p.inverse()?;
    let mut at_x = spec.clone();
    at_x.paths.push(gamma.clone());
    let yb = gamma.end().as_point().ok_or_else(|| Error::Invalid("path end is not an S-point".into()))?;
    let back = gamma.reversed();
    let mut at_y = spec.clone();
    at_y.base = yb;
    at_y.paths = vec![back.clone()];
    for s in &spec.paths {
        at_y.paths.push(back.concat(s)?);
    }
    let ax = coefficient_algebra(conn, &at_x, lp)?;
    let ay = coefficient_algebra(conn, &at_y, lp)?;
    let conj = LieSubalgebra::span(&conn.bundle, &ay.basis().iter().map(|m| conjugate(&p, &pinv, m)).collect::<Vec<_>>());
    Ok(span_equal(&ax, &conj))
}

/// Every element of `hol_x(T)` lies in `(hol^Gal (x) O_T)_even`.
pub fn inclusion_check(conn: &ConnectionModel, spec: &SampleSpec, lp: usize) -> Result<bool, Error> {
    let gal = galaev_algebra(conn, spec, SpanKind::Module)?;
    let hol = functorial_algebra(conn, spec, lp)?;
    let tmask = conn.patch.t_mask(lp);
    Ok(hol.basis().iter().all(|b| split_matrix(b, tmask).values().all(|c| gal.contains(c))))
}

/// `hol_x(T)^{(k)}` at a single `S x T`-point family: closure of
/// `P^{-1} ((y*nabla)_{eta_{i_l}} ... (y*nabla)_{eta_{i_1}} R_y)(e_a, e_b) P`,
/// `l <= k`, dressed by all monomials.
pub fn holk_algebra(conn: &ConnectionModel, y: &PointMap, path_to_y: &PathModel, k: usize, lp: usize) -> Result<LieSubalgebra, Error> {
    let patch = &conn.patch;
    let p = exact_transport(conn, path_to_y)?.exact()?.clone();
    let pinv = p.inverse()?;
    let pb = Pullback::new(conn, y.clone())?;
    let mut level = vec![pull_back_tensor(patch, &conn.curvature(), y)];
    let dirs: Vec<Direction> = (0..lp).map(|i| Direction::Odd(patch.eta_t(i))).collect();
    for _ in 0..k {
        let mut next = Vec::new();
        for f in &level {
            for d in &dirs {
                next.push(pb.covariant_derivative(f, *d));
            }
        }
        for t in next {
            if !level.contains(&t) {
                level.push(t);
            }
        }
    }
    let mut alg = LieSubalgebra::zero(&conn.bundle);
    let mask = patch.s_mask() | patch.t_mask(lp);
    for f in &level {
        for m in f.comps() {
            let c = conjugate(&p, &pinv, m);
            for coeff in parameter_coefficients(&c) {
                for mono in monomials(mask) {
                    let d = left_mono(&coeff, mono);
                    if !d.is_zero() {
                        alg.insert(&d);
                    }
                }
            }
        }
    }
    alg.close();
    Ok(alg)
}

/// `hol_x(T)^{(k)}` from every point of `path`: the conjugated `l`-fold
/// pullback derivatives `P_t^{-1} ((y*nabla)_{eta} ... R)_{gamma(t)} P_t`,
/// `l <= k`, split into `t`-coefficients and dressed by all monomials.
pub fn holk_swept(conn: &ConnectionModel, path: &PathModel, k: usize, lp: usize) -> Result<LieSubalgebra, Error> {
    let patch = &conn.patch;
    let dirs: Vec<Direction> = (0..lp).map(|i| Direction::Odd(patch.eta_t(i))).collect();
    let mask = patch.s_mask() | patch.t_mask(lp);
    let mut alg = LieSubalgebra::zero(&conn.bundle);
    for (seg, p) in sweep(conn, path)? {
        let pinv = p.inverse()?;
        let pb = Pullback::new(conn, seg.clone())?;
        let mut level = vec![pull_back_tensor(patch, &conn.curvature(), &seg)];
        let mut frontier = level.clone();
        for _ in 0..k {
            let mut next = Vec::new();
            for f in &frontier {
                for d in &dirs {
                    let t = pb.covariant_derivative(f, *d);
                    if !t.is_zero() && !level.contains(&t) && !next.contains(&t) {
                        next.push(t);
                    }
                }
            }
            level.extend(next.iter().cloned());
            frontier = next;
        }
        for f in &level {
            for m in f.comps() {
                for coeff in parameter_coefficients(&conjugate(&p, &pinv, m)) {
                    for mono in monomials(mask) {
                        let d = left_mono(&coeff, mono);
                        if !d.is_zero() {
                            alg.insert(&d);
                        }
                    }
                }
            }
        }
    }
    alg.close();
    Ok(alg)
}

/// Iterated odd derivatives of a conjugated curvature operator differ from
/// the conjugated iterated pullback derivatives by an element of
/// `hol_x(T)^{(k-1)}`. Checked on coordinate vectors for every sequence of
/// `k` functor generators among the first `lp`; `path` starts at an
/// `S`-point and ends at an `S x T`-point.
pub fn eta_derivative_structure_check(conn: &ConnectionModel, path: &PathModel, k: usize, lp: usize) -> Result<bool, Error> {
    if k == 0 {
        return Ok(true);
    }
    let patch = &conn.patch;
    let p = exact_transport(conn, path)?.exact()?.clone();
    let pinv = p.inverse()?;
    let y = path.end();
    let ry = pull_back_tensor(patch, &conn.curvature(), &y);
    let pb = Pullback::new(conn, y)?;
    let lower = holk_swept(conn, path, k - 1, lp)?;
    let zero = SuperMatrix::zeros(&conn.bundle, &conn.bundle);
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..k {
        seqs = seqs.into_iter().flat_map(|s| (0..lp).map(move |i| [s.clone(), vec![i]].concat())).collect();
    }
    for seq in seqs {
        let mut f = ry.clone();
        for &i in &seq {
            f = pb.covariant_derivative(&f, Direction::Odd(patch.eta_t(i)));
        }
        for (idx, m) in ry.comps().iter().enumerate() {
            let mut lhs = conjugate(&p, &pinv, m);
            for &i in &seq {
                lhs = commutator_with(&zero, &conn.bundle, Direction::Odd(patch.eta_t(i)), &lhs);
            }
            let rhs = conjugate(&p, &pinv, &f.comps()[idx]);
            if !lower.contains(&lhs.sub(&rhs)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
