//! Submersions of superpoints, their freeness, fibred products and gluing
//! of sections over covers.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::echelon::{dense_rank, solve_dense};
use crate::geometry::ConnectionModel;
use crate::grassmann::{ideal_dimension, mask_indices, q, GrassmannElement, GrassmannMorphism, Q};
use crate::holonomy::{functorial_algebra, galaev_algebra, split_matrix, SampleSpec, SpanKind};
use crate::lie::LieSubalgebra;
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::Error;

/// The differential at the topological point is surjective: the linear part
/// of `phi` has full rank `source`.
pub fn is_submersion(phi: &GrassmannMorphism) -> bool {
    dense_rank(&phi.linear_part()) == phi.source
}

/// `target` algebra is free over the one-generator source via `phi`.
pub fn is_free_rank1(phi: &GrassmannMorphism) -> Result<bool, Error> {
    if phi.source != 1 {
        return Err(Error::Precondition("source must have one generator".into()));
    }
    if phi.target == 0 {
        return Ok(false);
    }
    let half = 1usize << (phi.target - 1);
    let d = ideal_dimension(phi.image(0), phi.target);
    assert!(d <= half, "ideal of an odd element exceeds half the algebra");
    Ok(d >= half)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Audit {
    pub submersion: bool,
    /// Freeness when the source has one generator.
    pub free: Option<bool>,
    /// `(submersion, free)` for every restriction to one source generator.
    pub restrictions: Vec<(bool, bool)>,
}

impl Audit {
    /// The independent verdicts agree, and a submersion restricts to free
    /// one-generator morphisms.
    pub fn agree(&self) -> bool {
        let own = self.free.is_none_or(|f| f == self.submersion);
        let parts = self.restrictions.iter().all(|(s, f)| s == f);
        let down = !self.submersion || self.restrictions.iter().all(|(s, _)| *s);
        own && parts && down
    }
}

fn restriction(phi: &GrassmannMorphism, j: usize) -> GrassmannMorphism {
    GrassmannMorphism::new(1, phi.target, vec![phi.image(j).clone()]).expect("image is odd")
}

pub fn equivalence_audit(phi: &GrassmannMorphism) -> Audit {
    let submersion = is_submersion(phi);
    let free = (phi.source == 1).then(|| is_free_rank1(phi).expect("one generator"));
    let restrictions = (0..phi.source)
        .map(|j| {
            let r = restriction(phi, j);
            (is_submersion(&r), is_free_rank1(&r).expect("one generator"))
        })
        .collect();
    Audit { submersion, free, restrictions }
}

/// Odd monomials over `l` generators.
pub fn odd_monomials(l: usize) -> Vec<u64> {
    (1..(1u64 << l)).filter(|m| m.count_ones() % 2 == 1).collect()
}

/// Outcome of auditing a family of one-generator morphisms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub checked: usize,
    pub submersions: usize,
    pub disagreements: Vec<GrassmannMorphism>,
}

impl AuditSummary {
    fn record(&mut self, phi: GrassmannMorphism) {
        let a = equivalence_audit(&phi);
        self.checked += 1;
        self.submersions += a.submersion as usize;
        if !a.agree() {
            self.disagreements.push(phi);
        }
    }
}

/// Every image `sum c_m eta^m` with coefficients from `coeffs`, for
/// `1 <= L <= lmax`.
pub fn exhaustive_audit(lmax: usize, coeffs: &[Q]) -> AuditSummary {
    let mut out = AuditSummary::default();
    for l in 1..=lmax {
        let monos = odd_monomials(l);
        let total = coeffs.len().pow(monos.len() as u32);
        for mut code in 0..total {
            let mut mu = GrassmannElement::zero();
            for &m in &monos {
                let c = &coeffs[code % coeffs.len()];
                code /= coeffs.len();
                if !c.is_zero() {
                    mu.add_term(m, c.clone());
                }
            }
            out.record(GrassmannMorphism::new(1, l, vec![mu]).expect("odd image"));
        }
    }
    out
}

/// Random sparse rational images; half of them have no linear part.
pub fn random_audit(count: usize, lmax: usize, seed: u64) -> AuditSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = AuditSummary::default();
    for _ in 0..count {
        let l = rng.gen_range(1..=lmax);
        let drop_linear = rng.gen_bool(0.5);
        let mut mu = GrassmannElement::zero();
        for m in odd_monomials(l) {
            if (drop_linear && m.count_ones() == 1) || !rng.gen_bool(0.4) {
                continue;
            }
            let num = rng.gen_range(-5i64..=5);
            if num != 0 {
                mu.add_term(m, q(num, rng.gen_range(1..=3)));
            }
        }
        out.record(GrassmannMorphism::new(1, l, vec![mu]).expect("odd image"));
    }
    out
}

/// Matrix of an algebra morphism on the monomial basis.
fn monomial_matrix(phi: &GrassmannMorphism) -> Vec<Vec<Q>> {
    let rows = 1usize << phi.target;
    let cols = 1usize << phi.source;
    let mut a = vec![vec![Q::zero(); cols]; rows];
    for m in 0..cols as u64 {
        for (t, c) in phi.apply(&GrassmannElement::monomial(m)).terms() {
            a[*t as usize][m as usize] = c.clone();
        }
    }
    a
}

/// `phi^*` is injective on functions.
pub fn is_injective(phi: &GrassmannMorphism) -> bool {
    dense_rank(&monomial_matrix(phi)) == 1usize << phi.source
}

fn invert_automorphism(beta: &GrassmannMorphism) -> Result<GrassmannMorphism, Error> {
    let a = monomial_matrix(beta);
    let n = beta.target;
    let images = (0..n)
        .map(|j| {
            let mut rhs = vec![Q::zero(); 1 << n];
            rhs[1 << j] = Q::one();
            let x = solve_dense(&a, &rhs).ok_or(Error::NotInvertible)?;
            Ok(GrassmannElement::from_terms(x.into_iter().enumerate().map(|(m, c)| (m as u64, c))))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    GrassmannMorphism::new(n, n, images)
}

/// Coordinates in which a submersion is a generator projection.
#[derive(Clone, Debug)]
pub struct Straightening {
    /// Target generators replaced by the images of the source generators.
    pub pivots: Vec<usize>,
    /// Remaining target generators, in order.
    pub fibre: Vec<usize>,
    /// `beta^{-1}`, where `beta` sends pivot `j_k` to `phi(theta_k)`.
    pub inverse: GrassmannMorphism,
}

pub fn straighten(phi: &GrassmannMorphism) -> Result<Straightening, Error> {
    if !is_submersion(phi) {
        return Err(Error::Precondition("morphism is not a submersion".into()));
    }
    let lin = phi.linear_part();
    let mut pivots = Vec::new();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for (j, row) in lin.iter().enumerate() {
        rows.push(row.clone());
        if dense_rank(&rows) > pivots.len() {
            pivots.push(j);
        } else {
            rows.pop();
        }
    }
    let mut images: Vec<GrassmannElement> = (0..phi.target).map(GrassmannElement::generator).collect();
    for (k, &j) in pivots.iter().enumerate() {
        images[j] = phi.image(k).clone();
    }
    let beta = GrassmannMorphism::new(phi.target, phi.target, images)?;
    let inverse = invert_automorphism(&beta)?;
    let fibre = (0..phi.target).filter(|j| !pivots.contains(j)).collect();
    Ok(Straightening { pivots, fibre, inverse })
}

/// `P_1 x_P P_2` with its two projections (algebra direction).
#[derive(Clone, Debug)]
pub struct FibredProduct {
    pub generators: usize,
    pub pr1: GrassmannMorphism,
    pub pr2: GrassmannMorphism,
}

/// Generators of the product: those of `P_2`, then the fibre coordinates of
/// the submersion `phi1`.
pub fn fibred_product(phi1: &GrassmannMorphism, phi2: &GrassmannMorphism) -> Result<FibredProduct, Error> {
    if phi1.source != phi2.source {
        return Err(Error::ContextMismatch);
    }
    let st = straighten(phi1)?;
    let l2 = phi2.target;
    let generators = phi1.target + l2 - phi1.source;
    let sigma = |g: usize| -> GrassmannElement {
        if let Some(k) = st.pivots.iter().position(|&j| j == g) {
            phi2.image(k).clone()
        } else {
            let i = st.fibre.iter().position(|&j| j == g).expect("fibre generator");
            GrassmannElement::generator(l2 + i)
        }
    };
    let pr1_images = (0..phi1.target).map(|j| st.inverse.image(j).substitute(sigma)).collect();
    let pr1 = GrassmannMorphism::new(phi1.target, generators, pr1_images)?;
    let pr2 = GrassmannMorphism::new(l2, generators, (0..l2).map(GrassmannElement::generator).collect())?;
    Ok(FibredProduct { generators, pr1, pr2 })
}

fn shift(e: &GrassmannElement, offset: usize) -> GrassmannElement {
    GrassmannElement::from_terms(e.terms().iter().map(|(m, c)| (m << offset, c.clone())))
}

/// `phi` acting on the last generators, the first `offset` fixed.
pub fn lift(phi: &GrassmannMorphism, offset: usize) -> GrassmannMorphism {
    let mut images: Vec<GrassmannElement> = (0..offset).map(GrassmannElement::generator).collect();
    images.extend(phi.images().iter().map(|i| shift(i, offset)));
    GrassmannMorphism::new(offset + phi.source, offset + phi.target, images).expect("lift of a morphism")
}

/// Entrywise pullback of a constant matrix.
pub fn pull_back_section(m: &SuperMatrix, phi: &GrassmannMorphism, offset: usize) -> SuperMatrix {
    let l = lift(phi, offset);
    m.map(|f| SuperFunction::constant(l.apply(&f.constant_part())))
}

/// Finite family of submersions into a common base with `base`
/// generators.
#[derive(Clone, Debug)]
pub struct Cover {
    pub base: usize,
    pub maps: Vec<GrassmannMorphism>,
}

impl Cover {
    pub fn new(base: usize, maps: Vec<GrassmannMorphism>) -> Result<Self, Error> {
        if maps.is_empty() {
            return Err(Error::Invalid("cover is empty".into()));
        }
        if maps.iter().any(|m| m.source != base || !is_submersion(m)) {
            return Err(Error::Invalid("cover members must be submersions from the base".into()));
        }
        Ok(Cover { base, maps })
    }
}

/// Why a family did not glue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlueFailure {
    /// Section `i` is not in the subfunctor.
    NotInSubfunctor(usize),
    /// Sections `i` and `j` differ on `P_i x P_j`.
    Incompatible(usize, usize),
    /// A section depends on fibre coordinates.
    NoDescent(usize),
}

/// Membership in a subfunctor: a constant matrix over a superpoint with the
/// given number of generators.
pub type Predicate<'a> = dyn Fn(&SuperMatrix, usize) -> bool + 'a;

/// The unique section over the base whose pullbacks are `sections`.
pub fn glue_sections(cover: &Cover, sections: &[SuperMatrix], offset: usize, pred: &Predicate) -> Result<SuperMatrix, GlueFailure> {
    for (i, (s, phi)) in sections.iter().zip(&cover.maps).enumerate() {
        if !pred(s, phi.target) {
            return Err(GlueFailure::NotInSubfunctor(i));
        }
    }
    for i in 0..sections.len() {
        for j in i..sections.len() {
            let fp = fibred_product(&cover.maps[i], &cover.maps[j]).expect("cover members are submersions");
            if pull_back_section(&sections[i], &fp.pr1, offset) != pull_back_section(&sections[j], &fp.pr2, offset) {
                return Err(if i == j { GlueFailure::NoDescent(i) } else { GlueFailure::Incompatible(i, j) });
            }
        }
    }
    let st = straighten(&cover.maps[0]).expect("submersion");
    let inv = lift(&st.inverse, offset);
    let fibre_mask: u64 = st.fibre.iter().map(|&j| 1u64 << (j + offset)).sum();
    let mut glued = sections[0].clone();
    for (n, f) in sections[0].entries().iter().enumerate() {
        let b = inv.apply(&f.constant_part());
        if b.support() & fibre_mask != 0 {
            return Err(GlueFailure::NoDescent(0));
        }
        let a = b.substitute(|g| {
            if g < offset {
                GrassmannElement::generator(g)
            } else {
                let k = st.pivots.iter().position(|&j| j + offset == g).expect("pivot generator");
                GrassmannElement::generator(offset + k)
            }
        });
        let c = sections[0].ncols();
        glued.set(n / c, n % c, SuperFunction::constant(a));
    }
    for (i, s) in sections.iter().enumerate() {
        if &pull_back_section(&glued, &cover.maps[i], offset) != s {
            return Err(GlueFailure::NoDescent(i));
        }
    }
    if !pred(&glued, cover.base) {
        return Err(GlueFailure::NotInSubfunctor(usize::MAX));
    }
    Ok(glued)
}

/// Model layout of a section over a superpoint with `l` generators: the
/// superpoint's generators are the first `l` functor generators.
pub fn model_offset(conn: &ConnectionModel) -> usize {
    conn.patch.eta_t(0)
}

fn unipotent_log(g: &SuperMatrix) -> Option<SuperMatrix> {
    let id = SuperMatrix::identity(g.row_parities());
    let n = g.sub(&id);
    if n.body().iter().flatten().any(|x| !x.is_zero()) {
        return None;
    }
    let mut out = SuperMatrix::zeros(g.row_parities(), g.col_parities());
    let mut pow = n.clone();
    for k in 1..=64 {
        if pow.is_zero() {
            return Some(out);
        }
        let c = q(if k % 2 == 1 { 1 } else { -1 }, k);
        out = out.add(&pow.scale(&c));
        pow = pow.multiply(&n);
    }
    None
}

/// Truncated exponential of a nilpotent matrix.
pub fn nilpotent_exp(h: &SuperMatrix) -> Option<SuperMatrix> {
    let mut term = SuperMatrix::identity(h.row_parities());
    let mut sum = term.clone();
    for k in 1..=64 {
        term = term.multiply(h).scale(&q(1, k));
        if term.is_zero() {
            return Some(sum);
        }
        sum = sum.add(&term);
    }
    None
}

/// The two subfunctors of `gl` checked for the sheaf property.
pub struct HolonomySubfunctors<'a> {
    conn: &'a ConnectionModel,
    spec: &'a SampleSpec,
    galaev: LieSubalgebra,
    functorial: std::cell::RefCell<BTreeMap<usize, LieSubalgebra>>,
}

impl<'a> HolonomySubfunctors<'a> {
    pub fn new(conn: &'a ConnectionModel, spec: &'a SampleSpec) -> Result<Self, Error> {
        let galaev = galaev_algebra(conn, spec, SpanKind::Module)?;
        Ok(HolonomySubfunctors { conn, spec, galaev, functorial: Default::default() })
    }

    pub fn functorial(&self, l: usize) -> LieSubalgebra {
        self.functorial
            .borrow_mut()
            .entry(l)
            .or_insert_with(|| functorial_algebra(self.conn, self.spec, l).expect("L' fits the model"))
            .clone()
    }

    /// `g` lies in the connected holonomy group: it is unipotent with
    /// logarithm in `hol_x(T)`.
    pub fn in_group(&self, g: &SuperMatrix, l: usize) -> bool {
        if l > self.conn.patch.lprime || g.support() & !(self.conn.patch.s_mask() | self.conn.patch.t_mask(l)) != 0 {
            return false;
        }
        unipotent_log(g).is_some_and(|h| self.functorial(l).contains(&h))
    }

    /// `h` lies in `(hol^Gal (x) O_T)_even`.
    pub fn in_galaev(&self, h: &SuperMatrix, l: usize) -> bool {
        if l > self.conn.patch.lprime || h.support() & !(self.conn.patch.s_mask() | self.conn.patch.t_mask(l)) != 0 {
            return false;
        }
        h.parity_part(1).is_zero() && split_matrix(h, self.conn.patch.t_mask(l)).values().all(|c| self.galaev.contains(c))
    }
}

/// Sheaf-property verdicts for one cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SheafAudit {
    pub cover_size: usize,
    pub families: usize,
    /// Compatible families glued back to their base section.
    pub group_glues: bool,
    pub algebra_glues: bool,
    /// A family with its last member replaced by another section's
    /// pullback was rejected; vacuous for one-member covers.
    pub group_corrupted_rejected: bool,
    pub algebra_corrupted_rejected: bool,
    /// Some cover member has an injective pullback, so gluings are unique.
    pub unique: bool,
}

impl SheafAudit {
    pub fn holds(&self) -> bool {
        self.group_glues && self.algebra_glues && self.group_corrupted_rejected && self.algebra_corrupted_rejected && self.unique
    }
}

fn glue_family(cover: &Cover, base: &[SuperMatrix], offset: usize, pred: &Predicate) -> (bool, bool) {
    let mut glues = true;
    let mut rejected = true;
    for (n, a) in base.iter().enumerate() {
        let family: Vec<SuperMatrix> = cover.maps.iter().map(|phi| pull_back_section(a, phi, offset)).collect();
        glues &= glue_sections(cover, &family, offset, pred).as_ref() == Ok(a);
        if cover.maps.len() < 2 {
            continue;
        }
        if let Some(other) = base.iter().cycle().skip(n + 1).take(base.len()).find(|b| *b != a) {
            let mut bad = family.clone();
            let last = bad.len() - 1;
            bad[last] = pull_back_section(other, &cover.maps[last], offset);
            rejected &= glue_sections(cover, &bad, offset, pred).is_err();
        }
    }
    (glues, rejected)
}

/// Glue pullbacks of base sections built from the algebras at the base,
/// and check that corrupted families fail.
pub fn sheaf_audit_holonomy(conn: &ConnectionModel, spec: &SampleSpec, cover: &Cover) -> Result<SheafAudit, Error> {
    let subs = HolonomySubfunctors::new(conn, spec)?;
    let offset = model_offset(conn);
    let l = cover.base;
    let alg: Vec<SuperMatrix> = subs.functorial(l).basis().into_iter().filter(|h| h.parity_part(1).is_zero()).collect();
    let mut group: Vec<SuperMatrix> = alg.iter().filter_map(nilpotent_exp).collect();
    group.push(SuperMatrix::identity(&conn.bundle));
    let mut algebra: Vec<SuperMatrix> = alg.clone();
    for b in subs.galaev.basis() {
        for mono in crate::bilinear::monomials(conn.patch.t_mask(l)) {
            let m = b.left_scalar(&SuperFunction::constant(GrassmannElement::monomial(mono))).parity_part(0);
            if !m.is_zero() && mask_indices(mono).len() <= 2 {
                algebra.push(m);
            }
        }
    }
    algebra.push(SuperMatrix::zeros(&conn.bundle, &conn.bundle));
    let gpred = |m: &SuperMatrix, n: usize| subs.in_group(m, n);
    let apred = |m: &SuperMatrix, n: usize| subs.in_galaev(m, n);
    let (group_glues, group_corrupted_rejected) = glue_family(cover, &group, offset, &gpred);
    let (algebra_glues, algebra_corrupted_rejected) = glue_family(cover, &algebra, offset, &apred);
    Ok(SheafAudit {
        cover_size: cover.maps.len(),
        families: group.len() + algebra.len(),
        group_glues,
        algebra_glues,
        group_corrupted_rejected,
        algebra_corrupted_rejected,
        unique: cover.maps.iter().any(is_injective),
    })
}
