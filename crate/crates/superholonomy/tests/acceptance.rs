//! End-to-end acceptance suite. Prints one line per criterion, then fails if
//! any criterion failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superholonomy::catalog;
use superholonomy::derham::de_rham_wu;
use superholonomy::fppf::{exhaustive_audit, is_submersion, random_audit, sheaf_audit_holonomy, Cover};
use superholonomy::geometry::{levi_civita, ConnectionModel};
use superholonomy::grassmann::{esin_koc_dimension, ideal_dimension, q, qi, replacement_algorithm, GrassmannElement as G, GrassmannMorphism};
use superholonomy::holonomy::*;
use superholonomy::points::{pull_back_tensor, PointMap, SPoint};
use superholonomy::superfn::SuperFunction;
use superholonomy::supermatrix::SuperMatrix;
use superholonomy::transport::*;

const HYBRID_TOL: f64 = 1e-8;

fn spec(conn: &ConnectionModel, kmax: usize, lmax: usize) -> SampleSpec {
    SampleSpec::standard(conn, SPoint::origin(&conn.patch), 2, kmax, lmax, 7)
}

fn g(i: usize) -> SuperFunction {
    SuperFunction::generator(i)
}

fn t() -> SuperFunction {
    SuperFunction::var(0)
}

fn segment(conn: &ConnectionModel, images: Vec<SuperFunction>) -> PathModel {
    PathModel::single(PointMap::new(&conn.patch, images).unwrap())
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn golden_example() -> Outcome {
    let conn = catalog::example(4);
    let p = &conn.patch;
    let r = conn.curvature();
    let eta12 = g(p.eta_s(0)).multiply(&g(p.eta_s(1)));
    let u = vec![g(p.eta_t(2))];
    let v = vec![g(p.eta_t(3))];
    let w = vec![&SuperFunction::one() + &g(p.eta_t(0))];
    let want = eta12.multiply(&u[0]).multiply(&v[0]).multiply(&w[0]).scale(&qi(-2));
    let out = segment(&conn, vec![t().multiply(&g(p.eta_t(0)))]);
    let wiggle = segment(&conn, vec![t().multiply(&(&SuperFunction::one() - &t())).multiply(&g(p.eta_t(1)))]);
    let paths = vec![
        PathModel::single(PointMap::new(p, vec![SuperFunction::zero()]).unwrap()),
        out.concat(&out.reversed()).unwrap(),
        wiggle,
        out,
    ];
    let mut ok = true;
    for path in &paths {
        let pm = exact_transport(&conn, path).unwrap();
        let pm = pm.exact().unwrap();
        let ry = pull_back_tensor(p, &r, &path.end()).eval(&[u.clone(), v.clone()]);
        let conj = pm.inverse().unwrap().multiply(&ry).multiply(pm);
        ok &= conj.apply(&w) == vec![want.clone()];
    }
    let s = spec(&conn, 3, 4);
    let id = SuperMatrix::identity(&[1]).left_scalar(&SuperFunction::constant(G::monomial(0b11)));
    let gal = galaev_algebra(&conn, &s, SpanKind::Module).unwrap();
    let coeff = coefficient_algebra(&conn, &s, 4).unwrap();
    ok &= gal.dim() == 1 && gal.contains(&id) && coeff.dim() == 1 && coeff.contains(&id);
    outcome(ok, format!("{} paths bit-exact, dim hol^Gal = {}, dim hol^C = {}", paths.len(), gal.dim(), coeff.dim()))
}

fn comparison() -> Outcome {
    let mut ok = true;
    let mut dims = Vec::new();
    for conn in [catalog::example(6), catalog::product(6), catalog::rank_one_one(6)] {
        let c = comparison_check(&conn, &spec(&conn, 3, 6)).unwrap();
        ok &= c.equal && c.coefficient_in_galaev && c.galaev_in_coefficient;
        dims.push(c.galaev.dim());
    }
    outcome(ok, format!("3 models, kmax = 3, dims {dims:?}"))
}

/// Families of pairwise disjoint odd-size subsets of `rest`.
fn disjoint_odd_families(rest: u64) -> Vec<Vec<u64>> {
    if rest == 0 {
        return vec![vec![]];
    }
    let low = rest & rest.wrapping_neg();
    let without = rest & !low;
    let mut out = disjoint_odd_families(without);
    // subsets containing the lowest element
    let mut sub = without;
    loop {
        let block = sub | low;
        if block.count_ones() % 2 == 1 {
            for mut f in disjoint_odd_families(without & !sub) {
                f.push(block);
                out.push(f);
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & without;
    }
    out
}

fn esin_koc() -> Outcome {
    let mut checked = 0;
    let mut ok = true;
    for n in 1..=6usize {
        for fam in disjoint_odd_families((1u64 << n) - 1) {
            if fam.is_empty() {
                continue;
            }
            for signs in 0u64..(1 << fam.len()) {
                let mu = G::from_terms(fam.iter().enumerate().map(|(i, m)| (*m, qi(if signs >> i & 1 == 1 { -1 } else { 1 }))));
                ok &= ideal_dimension(&mu, n) == esin_koc_dimension(&mu, n).unwrap();
                if n <= 4 {
                    ok &= common::ideal_dim(&mu, n) == ideal_dimension(&mu, n);
                }
                checked += 1;
            }
        }
    }
    outcome(ok, format!("{checked} elements, L <= 6"))
}

/// Random odd element with `dim >= 2^(n-1)` and few, short monomials, so the
/// rewritten element stays within reach of the brute-force oracle.
fn random_sparse_free(rng: &mut ChaCha8Rng, n: usize) -> G {
    let odd: Vec<u64> = (1u64..(1 << n)).filter(|m| m.count_ones() % 2 == 1).collect();
    loop {
        let mut mu = G::zero();
        for _ in 0..rng.gen_range(1..=4) {
            let m = odd[rng.gen_range(0..odd.len())];
            mu.add_term(m, q(rng.gen_range(-3i64..=3), rng.gen_range(1..=2)));
        }
        let length: u32 = mu.terms().keys().map(|m| m.count_ones()).sum();
        if length <= 12 && !mu.is_zero() && common::ideal_dim(&mu, n) >= 1 << (n - 1) {
            return mu;
        }
    }
}

/// Ideal dimension on `n` generators, brute-forced on the generators `mu`
/// actually uses; each unused generator doubles it.
fn ideal_dim_on_support(mu: &G, n: usize) -> usize {
    let support = mu.terms().keys().fold(0u64, |a, m| a | m);
    let used: Vec<u32> = (0..64).filter(|i| support >> i & 1 == 1).collect();
    let squeeze = |m: u64| used.iter().enumerate().filter(|(_, &b)| m >> b & 1 == 1).fold(0u64, |a, (i, _)| a | 1 << i);
    let packed = G::from_terms(mu.terms().iter().map(|(m, c)| (squeeze(*m), c.clone())));
    common::sparse_ideal_dim(&packed, used.len()) << (n - used.len())
}

fn replacement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut ok = true;
    let mut max_l = 0;
    let cases = 120;
    for _ in 0..cases {
        let n = rng.gen_range(1..=5);
        let mu = random_sparse_free(&mut rng, n);
        let r = replacement_algorithm(&mu, n).unwrap();
        let l = r.generators;
        max_l = max_l.max(l);
        // length-preserving bijection between the supports
        let old: Vec<u64> = r.lambda.iter().map(|p| p.0).collect();
        let mut new: Vec<u64> = r.lambda.iter().map(|p| p.1).collect();
        new.sort_unstable();
        new.dedup();
        ok &= l >= n
            && old.iter().copied().eq(mu.terms().keys().copied())
            && new.iter().copied().eq(r.mu.terms().keys().copied())
            && r.lambda.iter().all(|(a, b)| a.count_ones() == b.count_ones());
        // product of all monomials is nonzero
        let product = r.mu.terms().keys().try_fold(0u64, |acc, m| common::monomial_product(acc, *m).map(|p| p.0));
        ok &= product.is_some();
        ok &= ideal_dim_on_support(&r.mu, l) >= 1 << (l - 1);
        ok &= r.mu.terms().keys().any(|m| m.count_ones() == 1);
    }
    outcome(ok, format!("{cases} random elements, L <= 5, L' <= {max_l}"))
}

fn submersion_free() -> Outcome {
    let ex = exhaustive_audit(4, &[qi(-1), qi(0), qi(1)]);
    let rnd = random_audit(1000, 5, 2024);
    let ok = ex.checked == 3 + 9 + 81 + 6561 && ex.disagreements.is_empty() && rnd.checked == 1000 && rnd.disagreements.is_empty();
    outcome(ok, format!("{} exhaustive + {} random, {} disagreements", ex.checked, rnd.checked, ex.disagreements.len() + rnd.disagreements.len()))
}

fn mixed_path(conn: &ConnectionModel) -> PathModel {
    let p = &conn.patch;
    let x = &t() + &t().multiply(&t()).multiply(&g(0).multiply(&g(1)));
    let th1 = &t().multiply(&g(p.eta_s(0))) + &g(p.eta_t(0));
    let th2 = &g(p.eta_s(1)) + &t().multiply(&t()).multiply(&g(p.eta_t(1)));
    segment(conn, vec![x, th1, th2])
}

fn transport() -> Outcome {
    let mut ok = true;
    let ex = catalog::example(4);
    let ep = &ex.patch;
    let ex_path = segment(&ex, vec![&g(ep.eta_t(0)) + &t().multiply(&g(ep.eta_t(1)))]);
    let mx = catalog::mixed(3);
    for (conn, path) in [(&ex, &ex_path), (&mx, &mixed_path(&mx))] {
        let whole = exact_transport(conn, path).unwrap();
        let halves = exact_transport(conn, &path.halved()).unwrap();
        ok &= whole.matrix == halves.matrix;
        let back = exact_transport(conn, &path.reversed()).unwrap();
        ok &= back.exact().unwrap().multiply(whole.exact().unwrap()) == SuperMatrix::identity(&conn.bundle);
        let n = conn.patch.context().total();
        ok &= matches!(&whole.mode, TransportMode::Exact { iterations } if iterations.iter().all(|&k| k <= n + 1));
        for gen in [conn.patch.eta_t(0), conn.patch.eta_t(1)] {
            ok &= eta_derivative_of_transport(conn, path, gen).unwrap().holds();
        }
    }
    let r = ex.curvature();
    let (u, v) = (vec![g(ep.eta_t(2))], vec![g(ep.eta_t(3))]);
    ok &= conjugated_curvature_derivative(&ex, &ex_path, &r, &u, &v, ep.eta_t(0)).unwrap().holds();
    let mp = &mx.patch;
    let r = mx.curvature();
    let u = vec![SuperFunction::one(), g(mp.eta_t(2)), SuperFunction::zero()];
    let v = vec![g(mp.eta_s(0)), SuperFunction::one(), g(mp.eta_t(2)).multiply(&g(mp.eta_s(1)))];
    for gen in [mp.eta_t(0), mp.eta_t(1)] {
        ok &= conjugated_curvature_derivative(&mx, &mixed_path(&mx), &r, &u, &v, gen).unwrap().holds();
    }
    let bodied = catalog::bodied(0).unwrap();
    let path = segment(&bodied, vec![&t() + &t().multiply(&g(0)).multiply(&g(0)), t().multiply(&g(0))]);
    let a = hybrid_transport(&bodied, &path, 128).unwrap();
    let b = hybrid_transport(&bodied, &path, 256).unwrap();
    let diff = a.numeric.max_diff(&b.numeric);
    ok &= diff < HYBRID_TOL;
    outcome(ok, format!("step-halving diff {diff:.1e} < {HYBRID_TOL:.0e}"))
}

fn mono(m: u64) -> G {
    G::monomial(m)
}

fn twofold() -> Outcome {
    let vectors: Vec<(ConnectionModel, Vec<G>)> = vec![
        (catalog::example(4), vec![mono(1)]),
        (catalog::example(4), vec![G::one()]),
        (catalog::example(4), vec![mono(0b11)]),
        (catalog::product(4), vec![mono(3), G::zero()]),
        (catalog::product(4), vec![mono(1), mono(2)]),
        (catalog::product(4), vec![G::zero(), G::one()]),
        (catalog::rank_one_one(4), vec![mono(3).scale(&q(1, 2)), G::zero()]),
        (catalog::rank_one_one(4), vec![G::zero(), mono(2)]),
        (catalog::rank_one_one(4), vec![G::zero(), mono(1)]),
        (catalog::rank_one_one(4), vec![G::one(), mono(1)]),
        (catalog::mixed(4), vec![G::one(), G::zero()]),
    ];
    let mut cases = 0;
    let mut invariant = 0;
    let mut ok = true;
    for (conn, x) in &vectors {
        let tf = invariance_vector(conn, &spec(conn, 2, 4), x, 3).unwrap();
        ok &= tf.agree();
        invariant += tf.a() as usize;
        cases += 1;
    }
    let submodules: Vec<(ConnectionModel, Vec<Vec<G>>)> = vec![
        (catalog::product(4), vec![vec![G::one(), G::zero()]]),
        (catalog::product(4), vec![vec![G::one(), G::zero()], vec![G::zero(), G::one()]]),
        (catalog::rank_one_one(4), vec![vec![G::one(), G::zero()]]),
    ];
    for (conn, basis) in &submodules {
        let tf = invariance_submodule(conn, &spec(conn, 2, 4), basis, 3).unwrap();
        ok &= tf.agree();
        invariant += tf.a() as usize;
        cases += 1;
    }
    ok &= invariant > 0 && invariant < cases;
    outcome(ok, format!("{cases} cases, {invariant} invariant, 0 disagreements required"))
}

fn de_rham() -> Outcome {
    let metric = catalog::product_metric(2);
    let conn = levi_civita(&metric).unwrap();
    let s = SampleSpec::standard(&conn, SPoint::origin(&metric.patch), 2, 2, 2, 3);
    let d = de_rham_wu(&metric, &s).unwrap();
    let flat: Vec<&Vec<usize>> = d.factors.iter().filter(|f| f.flat).map(|f| &f.coords).collect();
    let ok = d.block_diagonal && d.kernel_is_flat_block && d.direct_sum && d.holds() && flat == vec![&vec![0]];
    outcome(ok, format!("factors {:?}, dim hol = {}", d.factors.iter().map(|f| &f.coords).collect::<Vec<_>>(), d.holonomy_dim))
}

fn morph(source: usize, target: usize, images: Vec<G>) -> GrassmannMorphism {
    GrassmannMorphism::new(source, target, images).unwrap()
}

fn sheaf() -> Outcome {
    let e = G::generator;
    let covers = vec![
        Cover::new(2, vec![GrassmannMorphism::identity(2)]).unwrap(),
        Cover::new(2, vec![morph(2, 3, vec![e(0), &e(1) + &mono(0b111)]), morph(2, 2, vec![e(1), e(0)])]).unwrap(),
        Cover::new(
            2,
            vec![
                morph(2, 3, vec![&e(2) + &mono(0b111), e(0)]),
                morph(2, 4, vec![e(0), &e(1) + &mono(0b1101)]),
                morph(2, 3, vec![&e(0) - &e(1), &e(1) + &e(2)]),
            ],
        )
        .unwrap(),
    ];
    let mut ok = covers.iter().all(|c| c.maps.len() <= 3 && c.maps.iter().all(|m| m.target <= 4 && is_submersion(m)));
    let mut audits = 0;
    for conn in [catalog::example(4), catalog::product(4)] {
        let s = SampleSpec::standard(&conn, SPoint::origin(&conn.patch), 2, 1, 4, 5);
        for cover in &covers {
            let a = sheaf_audit_holonomy(&conn, &s, cover).unwrap();
            ok &= a.holds() && a.group_glues && a.algebra_glues && a.unique;
            if cover.maps.len() > 1 {
                ok &= a.group_corrupted_rejected && a.algebra_corrupted_rejected;
            }
            audits += 1;
        }
    }
    outcome(ok, format!("{audits} cover audits, both predicates"))
}

fn degree_decomposition() -> Outcome {
    let mut ok = true;
    let mut thresholds = Vec::new();
    for conn in [catalog::example(4), catalog::product(4)] {
        let s = spec(&conn, 1, 4);
        let st = stabilization_threshold(&conn, &s).unwrap();
        match st.threshold {
            Some(n) if n <= 4 && n + 2 <= conn.patch.lprime => {
                ok &= degree_decomposition_check(&conn, &s, n, n + 2).unwrap().holds();
                thresholds.push(n);
            }
            _ => ok = false,
        }
    }
    outcome(ok, format!("thresholds {thresholds:?} <= 4"))
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 10] = [
        ("golden example", golden_example, Duration::from_secs(1)),
        ("comparison", comparison, Duration::from_secs(60)),
        ("Esin-Koc closed form", esin_koc, Duration::from_secs(10)),
        ("replacement algorithm", replacement, Duration::from_secs(60)),
        ("submersion iff free", submersion_free, Duration::from_secs(60)),
        ("transport identities", transport, Duration::from_secs(60)),
        ("twofold A = B", twofold, Duration::from_secs(60)),
        ("de Rham-Wu", de_rham, Duration::from_secs(60)),
        ("sheaf gluing", sheaf, Duration::from_secs(60)),
        ("degree decomposition", degree_decomposition, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && took < *limit, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        println!(
            "criterion {:>2}: {} {name}: {detail}; {:.2} s (limit {} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
