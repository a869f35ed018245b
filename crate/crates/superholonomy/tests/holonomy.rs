use superholonomy::catalog;
use superholonomy::geometry::{ConnectionModel, PatchModel};
use superholonomy::grassmann::{q, GrassmannElement as G};
use superholonomy::holonomy::*;
use superholonomy::lie::{span_equal, LieSubalgebra};
use superholonomy::points::SPoint;
use superholonomy::superfn::SuperFunction;
use superholonomy::supermatrix::SuperMatrix;

fn spec(conn: &ConnectionModel, kmax: usize, lmax: usize) -> SampleSpec {
    SampleSpec::standard(conn, SPoint::origin(&conn.patch), 2, kmax, lmax, 7)
}

fn mono(m: u64) -> G {
    G::monomial(m)
}

#[test]
fn flat_connection_has_trivial_algebras() {
    let conn = ConnectionModel::flat(PatchModel::new(1, 1, 2, 4).unwrap(), vec![0, 1]);
    let s = spec(&conn, 2, 4);
    assert_eq!(galaev_algebra(&conn, &s, SpanKind::Module).unwrap().dim(), 0);
    assert_eq!(coefficient_algebra(&conn, &s, 4).unwrap().dim(), 0);
    assert_eq!(functorial_algebra(&conn, &s, 3).unwrap().dim(), 0);
}

#[test]
fn example_galaev_algebra_is_spanned_by_eta12_identity() {
    let conn = catalog::example(4);
    let s = spec(&conn, 3, 4);
    let expected = SuperMatrix::identity(&[1]).left_scalar(&SuperFunction::constant(mono(0b11)));
    for kind in [SpanKind::Real, SpanKind::Module] {
        let g = galaev_algebra(&conn, &s, kind).unwrap();
        assert_eq!(g.dim(), 1);
        assert!(g.contains(&expected));
    }
}

#[test]
fn comparison_holds_on_reference_models() {
    for conn in [catalog::example(6), catalog::product(6), catalog::rank_one_one(6)] {
        let c = comparison_check(&conn, &spec(&conn, 3, 6)).unwrap();
        assert!(c.coefficient_in_galaev && c.galaev_in_coefficient && c.equal);
        assert_eq!(c.stabilization.threshold, Some(2));
    }
}

#[test]
fn comparison_holds_with_even_coordinates() {
    let conn = catalog::mixed(6);
    let c = comparison_check(&conn, &spec(&conn, 2, 6)).unwrap();
    assert!(c.equal);
    assert_eq!(c.stabilization.dims, vec![4, 11, 13, 13, 13]);
}

#[test]
fn galaev_algebra_ignores_the_auxiliary_connection() {
    let conn = catalog::mixed(4);
    let s = spec(&conn, 2, 4);
    let a = galaev_algebra(&conn, &s, SpanKind::Module).unwrap();
    let zero_aux = vec![vec![vec![SuperFunction::zero(); 3]; 3]; 3];
    let b = galaev_algebra(&conn.with_aux(zero_aux).unwrap(), &s, SpanKind::Module).unwrap();
    assert!(span_equal(&a, &b));
}

// oracle: the coefficient algebra equals the closure of the T-coefficients
// of the literal hol_x(T)
#[test]
fn coefficient_algebra_matches_literal_coefficients() {
    for conn in [catalog::example(4), catalog::product(4), catalog::rank_one_one(4)] {
        let s = spec(&conn, 1, 4);
        for lp in 0..=4 {
            let hol = functorial_algebra(&conn, &s, lp).unwrap();
            let tmask = conn.patch.t_mask(lp);
            let coeffs: Vec<SuperMatrix> = hol.basis().iter().flat_map(|b| split_matrix(b, tmask).into_values()).collect();
            let oracle = LieSubalgebra::span(&conn.bundle, &coeffs);
            let c = coefficient_algebra(&conn, &s, lp).unwrap();
            assert!(span_equal(&oracle, &c), "lp = {lp}");
        }
    }
}

#[test]
fn split_reassembles() {
    let conn = catalog::mixed(3);
    let s = spec(&conn, 0, 3);
    let tmask = conn.patch.t_mask(3);
    for g in functorial_generators(&conn, &s, 3).unwrap() {
        let parts = split_matrix(&g.matrix, tmask);
        let mut sum = SuperMatrix::zeros(&conn.bundle, &conn.bundle);
        for (j, c) in parts {
            sum = sum.add(&c.left_scalar(&SuperFunction::constant(mono(j))));
        }
        assert_eq!(sum, g.matrix);
    }
}

#[test]
fn dressing_rules() {
    let oo = Dressing::Even(1, 1);
    assert!(!oo.allows(0) && !oo.allows(1) && oo.allows(2) && !oo.allows(3) && oo.allows(4));
    let eo = Dressing::Even(0, 1);
    assert!(eo.allows(1) && !eo.allows(2));
    let ee = Dressing::Even(0, 0);
    assert!(ee.allows(0) && !ee.allows(1));
    assert!(oo.completable(0, 2) && !oo.completable(0, 1) && oo.completable(1, 1) && !oo.completable(1, 0));
}

#[test]
fn degree_decomposition_at_threshold() {
    for conn in [catalog::example(4), catalog::product(4), catalog::rank_one_one(4), catalog::mixed(4)] {
        let s = spec(&conn, 1, 4);
        let st = stabilization_threshold(&conn, &s).unwrap();
        let n = st.threshold.unwrap();
        assert!(n <= 4);
        assert!(degree_decomposition_check(&conn, &s, n, n + 2).unwrap().holds());
    }
}

#[test]
fn functorial_algebra_sits_in_galaev_tensor_t() {
    for conn in [catalog::example(4), catalog::mixed(4)] {
        assert!(inclusion_check(&conn, &spec(&conn, 2, 4), 3).unwrap());
    }
}

#[test]
fn conjugation_along_a_path() {
    for conn in [catalog::product(3), catalog::mixed(3)] {
        let s = spec(&conn, 1, 3);
        let gamma = s.paths[0].clone();
        assert!(conjugation_check(&conn, &s, &gamma, 3).unwrap());
    }
}

#[test]
fn twofold_sides_agree() {
    let cases: Vec<(ConnectionModel, Vec<G>, bool)> = vec![
        (catalog::example(4), vec![mono(1)], true),
        (catalog::example(4), vec![G::one()], false),
        (catalog::product(4), vec![mono(3), G::zero()], true),
        (catalog::product(4), vec![mono(1), mono(2)], true),
        (catalog::product(4), vec![G::zero(), G::one()], false),
        (catalog::rank_one_one(4), vec![mono(3).multiply(&G::constant(q(1, 2))), G::zero()], true),
        (catalog::rank_one_one(4), vec![G::zero(), mono(2)], true),
        (catalog::rank_one_one(4), vec![G::zero(), mono(1)], false),
        (catalog::rank_one_one(4), vec![G::one(), mono(1)], false),
        (catalog::mixed(4), vec![G::one(), G::zero()], false),
    ];
    for (conn, x, invariant) in cases {
        let t = invariance_vector(&conn, &spec(&conn, 2, 4), &x, 3).unwrap();
        assert!(t.agree());
        assert_eq!(t.a(), invariant);
    }
}

#[test]
fn invariant_submodules() {
    let conn = catalog::product(4);
    let s = spec(&conn, 2, 4);
    let e0 = vec![G::one(), G::zero()];
    let t = invariance_submodule(&conn, &s, &[e0], 3).unwrap();
    assert!(t.agree() && t.a());
    let nilpotent = vec![mono(1), G::zero()];
    assert!(invariance_submodule(&conn, &s, &[nilpotent], 3).is_err());
    let conn = catalog::rank_one_one(4);
    let t = invariance_submodule(&conn, &spec(&conn, 2, 4), &[vec![G::one(), G::zero()]], 3).unwrap();
    assert!(t.agree() && !t.a());
}

#[test]
fn holk_is_increasing_in_k() {
    let conn = catalog::example(3);
    let s = spec(&conn, 0, 3);
    let y = special_point_sized(&conn, &s.base.as_map(), 3);
    let path = superholonomy::transport::PathModel::single(s.base.as_map());
    let h0 = holk_algebra(&conn, &y, &path, 0, 3).unwrap();
    let h1 = holk_algebra(&conn, &y, &path, 1, 3).unwrap();
    assert!(h0.dim() > 0 && h1.contains_all(&h0));
}

fn t_family(conn: &ConnectionModel, ends: Vec<SuperFunction>) -> superholonomy::transport::PathModel {
    let t = SuperFunction::var(0);
    let images = ends.iter().map(|e| t.multiply(e)).collect();
    superholonomy::transport::PathModel::single(superholonomy::points::PointMap::new(&conn.patch, images).unwrap())
}

#[test]
fn eta_derivatives_differ_by_lower_order_terms() {
    let g = SuperFunction::generator;
    let ex = catalog::example(2);
    let path = t_family(&ex, vec![&g(ex.patch.eta_t(0)) + &g(0).multiply(&g(1)).multiply(&g(ex.patch.eta_t(1)))]);
    for k in 1..=2 {
        assert!(eta_derivative_structure_check(&ex, &path, k, 2).unwrap(), "example k={k}");
    }
    let lower = holk_swept(&ex, &path, 0, 2).unwrap();
    assert!(lower.dim() > 0 && !lower.contains(&SuperMatrix::identity(&ex.bundle)));
    let r = catalog::rank_one_one(2);
    let path = t_family(&r, vec![&g(r.patch.eta_t(0)) + &g(0)]);
    for k in 1..=2 {
        assert!(eta_derivative_structure_check(&r, &path, k, 2).unwrap(), "rank (1|1) k={k}");
    }
    let mx = catalog::mixed(2);
    let p = &mx.patch;
    let path = t_family(&mx, vec![&SuperFunction::one() + &g(p.eta_t(0)).multiply(&g(p.eta_t(1))), g(p.eta_t(0)), &g(p.eta_t(1)) + &g(0)]);
    assert!(eta_derivative_structure_check(&mx, &path, 1, 2).unwrap(), "mixed");
}

#[test]
fn functor_inclusion_pushes_forward() {
    for conn in [catalog::example(4), catalog::rank_one_one(4), catalog::product(4)] {
        let s = spec(&conn, 2, 4);
        for lp in 0..4 {
            let small = functorial_algebra(&conn, &s, lp).unwrap();
            let big = functorial_algebra(&conn, &s, lp + 1).unwrap();
            assert!(big.contains_all(&small), "L' = {lp}");
        }
    }
}
