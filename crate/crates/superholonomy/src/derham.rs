//! Splitting of the tangent space by the Levi-Civita holonomy.

use num_traits::Zero;

use crate::bilinear::{apply_const, in_span, orthogonal_complement, Column, SuperBilinearForm};

use crate::echelon::dense_kernel;
use crate::geometry::{levi_civita, MetricModel, PatchModel};
use crate::grassmann::Q;
use crate::lie::{span_equal, LieSubalgebra};
use crate::grassmann::GrassmannElement;
use crate::holonomy::{galaev_algebra, SampleSpec, SpanKind};
use crate::points::{pull_back, pull_back_fn, PointMap, SPoint};
use crate::transport::PathModel;
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::Error;

/// One factor of the decomposition, as a set of coordinate directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub coords: Vec<usize>,
    /// Holonomy acts trivially on this factor.
    pub flat: bool,
    /// No proper nondegenerate invariant coordinate subspace.
    pub weakly_irreducible: bool,
}

#[derive(Clone, Debug)]
pub struct DeRhamWu {
    pub factors: Vec<Factor>,
    pub holonomy_dim: usize,
    /// Each factor is invariant and nondegenerate.
    pub factors_invariant: bool,
    pub factors_nondegenerate: bool,
    /// The free orthogonal complement of each factor is the sum of the others.
    pub complements_match: bool,
    /// Every holonomy element is block diagonal for the factors.
    pub block_diagonal: bool,
    /// Metric components couple no two factors and each factor's block only
    /// depends on its own coordinates.
    pub local_product: bool,
    /// Real vectors killed by every holonomy element span exactly the flat
    /// factor.
    pub kernel_is_flat_block: bool,
    /// The holonomy equals the direct sum of the factor holonomies.
    pub direct_sum: bool,
}

impl DeRhamWu {
    pub fn holds(&self) -> bool {
        self.factors_invariant && self.factors_nondegenerate && self.complements_match && self.block_diagonal && self.local_product && self.kernel_is_flat_block && self.direct_sum
    }
}

fn coord_span(n: usize, coords: &[usize]) -> Vec<Column> {
    coords
        .iter()
        .map(|&a| (0..n).map(|i| if i == a { GrassmannElement::one() } else { GrassmannElement::zero() }).collect())
        .collect()
}

fn invariant(hol: &[SuperMatrix], basis: &[Column], mask: u64) -> bool {
    hol.iter().all(|h| basis.iter().all(|v| in_span(basis, &apply_const(h, v), mask)))
}

fn trivial(hol: &[SuperMatrix], basis: &[Column]) -> bool {
    hol.iter().all(|h| basis.iter().all(|v| apply_const(h, v).iter().all(|x| x.is_zero())))
}

/// Invariant, nondegenerate coordinate blocks whose complement is invariant
/// too, split as finely as possible.
fn finest_blocks(form: &SuperBilinearForm, hol: &[SuperMatrix], coords: &[usize], mask: u64) -> Vec<Vec<usize>> {
    let n = form.par.len();
    let k = coords.len();
    for size in 1..k {
        for pick in 0u64..(1 << k) {
            if pick.count_ones() as usize != size {
                continue;
            }
            let (w, rest): (Vec<usize>, Vec<usize>) = coords.iter().enumerate().fold((vec![], vec![]), |(mut a, mut b), (i, &c)| {
                if pick >> i & 1 == 1 {
                    a.push(c)
                } else {
                    b.push(c)
                }
                (a, b)
            });
            let wb = coord_span(n, &w);
            let rb = coord_span(n, &rest);
            if form.nondegenerate_on(&wb) && form.nondegenerate_on(&rb) && invariant(hol, &wb, mask) && invariant(hol, &rb, mask) {
                let mut out = finest_blocks(form, hol, &w, mask);
                out.extend(finest_blocks(form, hol, &rest, mask));
                return out;
            }
        }
    }
    vec![coords.to_vec()]
}

/// Decompose `T_x M` for the Levi-Civita connection of `metric`, using the
/// Galaev algebra of the sample and coordinate subspaces as candidates.
pub fn de_rham_wu(metric: &MetricModel, spec: &SampleSpec) -> Result<DeRhamWu, Error> {
    let patch = &metric.patch;
    let n = patch.dim();
    let par = patch.parities();
    let conn = levi_civita(metric)?;
    let hol = galaev_algebra(&conn, spec, SpanKind::Module)?.basis();
    let gram: Vec<Vec<_>> = metric
        .g
        .iter()
        .map(|r| r.iter().map(|f| SuperFunction::constant(pull_back(patch, f, &spec.base))).collect())
        .collect();
    let form = SuperBilinearForm::new(par.clone(), gram);
    let mask = patch.s_mask();
    let all: Vec<usize> = (0..n).collect();
    let blocks = finest_blocks(&form, &hol, &all, mask);
    let mut flat = Vec::new();
    let mut factors = Vec::new();
    for b in blocks {
        if trivial(&hol, &coord_span(n, &b)) {
            flat.extend(b);
        } else {
            factors.push(Factor { coords: b, flat: false, weakly_irreducible: true });
        }
    }
    if !flat.is_empty() {
        flat.sort_unstable();
        let irreducible = flat.len() == 1;
        factors.insert(0, Factor { coords: flat, flat: true, weakly_irreducible: irreducible });
    }
    let spans: Vec<Vec<Column>> = factors.iter().map(|f| coord_span(n, &f.coords)).collect();
    let factors_invariant = spans.iter().all(|s| invariant(&hol, s, mask));
    let factors_nondegenerate = spans.iter().all(|s| form.nondegenerate_on(s));
    let mut complements_match = true;
    for (i, s) in spans.iter().enumerate() {
        let others: Vec<Column> = spans.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, o)| o.clone()).collect();
        let comp = orthogonal_complement(&form, s)?;
        complements_match &= comp.len() == others.len()
            && comp.iter().all(|v| in_span(&others, v, mask))
            && others.iter().all(|v| in_span(&comp, v, mask));
    }
    let block_diagonal = hol.iter().all(|h| {
        (0..n).all(|r| (0..n).all(|c| {
            let same = factors.iter().any(|f| f.coords.contains(&r) && f.coords.contains(&c));
            same || h.get(r, c).is_zero()
        }))
    });
    let local_product = (0..n).all(|a| {
        (0..n).all(|b| {
            let fa = factors.iter().position(|f| f.coords.contains(&a));
            let fb = factors.iter().position(|f| f.coords.contains(&b));
            if fa != fb {
                return metric.g[a][b].is_zero();
            }
            let own = &factors[fa.expect("every coordinate is in a factor")].coords;
            (0..n).filter(|c| !own.contains(c)).all(|c| patch.partial(c, &metric.g[a][b]).is_zero())
        })
    });
    let kernel = joint_kernel(&hol, n);
    let flat_coords: Vec<usize> = factors.iter().filter(|f| f.flat).flat_map(|f| f.coords.clone()).collect();
    let kernel_is_flat_block = kernel.len() == flat_coords.len()
        && kernel.iter().all(|v| v.iter().enumerate().all(|(i, x)| x.is_zero() || flat_coords.contains(&i)));
    let par_all = patch.parities();
    let mut summed = Vec::new();
    for f in factors.iter().filter(|f| !f.flat) {
        let (fm, fspec) = restrict(metric, spec, &f.coords)?;
        let fconn = levi_civita(&fm)?;
        for h in galaev_algebra(&fconn, &fspec, SpanKind::Module)?.basis() {
            summed.push(SuperMatrix::from_fn(&par_all, &par_all, |r, c| {
                match (f.coords.iter().position(|&x| x == r), f.coords.iter().position(|&x| x == c)) {
                    (Some(i), Some(j)) => h.get(i, j).clone(),
                    _ => SuperFunction::zero(),
                }
            }));
        }
    }
    let direct_sum = span_equal(&LieSubalgebra::span(&par_all, &summed), &LieSubalgebra::span(&par_all, &hol));
    Ok(DeRhamWu {
        factors,
        holonomy_dim: hol.len(),
        factors_invariant,
        factors_nondegenerate,
        complements_match,
        block_diagonal,
        local_product,
        kernel_is_flat_block,
        direct_sum,
    })
}

/// Real vectors `v` with `h v = 0` for every `h`.
fn joint_kernel(hol: &[SuperMatrix], n: usize) -> Vec<Vec<Q>> {
    let mut rows = Vec::new();
    for h in hol {
        for r in 0..n {
            let mut by_mono: std::collections::BTreeMap<u64, Vec<Q>> = std::collections::BTreeMap::new();
            for c in 0..n {
                let e = h.get(r, c).constant_part();
                for (m, x) in e.terms() {
                    by_mono.entry(*m).or_insert_with(|| vec![Q::from_integer(0.into()); n])[c] += x;
                }
            }
            rows.extend(by_mono.into_values());
        }
    }
    dense_kernel(&rows, n)
}

/// The metric and sample seen on one factor, other coordinates frozen at
/// the base point.
fn restrict(metric: &MetricModel, spec: &SampleSpec, coords: &[usize]) -> Result<(MetricModel, SampleSpec), Error> {
    let patch = &metric.patch;
    let fp = coords.iter().filter(|&&a| a < patch.p).count();
    let fpatch = PatchModel::new(fp, coords.len() - fp, patch.l, patch.lprime)?;
    let images: Vec<SuperFunction> = (0..patch.dim())
        .map(|a| match coords.iter().position(|&x| x == a) {
            Some(i) if i < fp => SuperFunction::var(i),
            Some(i) => SuperFunction::generator(fpatch.theta(i - fp)),
            None => SuperFunction::constant(spec.base.images[a].clone()),
        })
        .collect();
    let sub = PointMap { images };
    let g = coords
        .iter()
        .map(|&a| coords.iter().map(|&b| pull_back_fn(patch, &metric.g[a][b], &sub)).collect())
        .collect();
    let fm = MetricModel::new(fpatch, g)?;
    let pick = |m: &PointMap| PointMap { images: coords.iter().map(|&a| m.images[a].clone()).collect() };
    let pick_path = |p: &PathModel| PathModel { segments: p.segments.iter().map(pick).collect() };
    let mut fspec = spec.clone();
    fspec.base = SPoint { images: coords.iter().map(|&a| spec.base.images[a].clone()).collect() };
    fspec.paths = spec.paths.iter().map(pick_path).collect();
    fspec.loops = spec.loops.iter().map(pick_path).collect();
    Ok((fm, fspec))
}
