use superholonomy::catalog;
use superholonomy::geometry::{levi_civita, pair_with, unit, SignRule};
use superholonomy::points::{pull_back_fn, special_point, Direction, PointMap, Pullback};
use superholonomy::superfn::SuperFunction as F;

fn g(i: usize) -> F {
    F::generator(i)
}

#[test]
fn higher_derivative_at_order_zero_is_the_identity() {
    for conn in [catalog::example(2), catalog::mixed(2), catalog::rank_one_one(2)] {
        let r = conn.curvature();
        for rule in [SignRule::Leibniz, SignRule::Uniform] {
            assert_eq!(conn.higher_covariant_derivative(&r, &[], rule).unwrap(), r);
        }
    }
}

#[test]
fn higher_derivative_is_additive_and_keeps_parity() {
    let conn = catalog::mixed(2);
    let r = conn.curvature();
    let s = r.map(|m| m.multiply(&m).add(&m.scale(&superholonomy::grassmann::q(1, 3))));
    let par = conn.patch.parities();
    for k in 0..3 {
        let sum = conn.higher_tensor(&r.add(&s), k, SignRule::Leibniz);
        assert_eq!(sum, conn.higher_tensor(&r, k, SignRule::Leibniz).add(&conn.higher_tensor(&s, k, SignRule::Leibniz)));
        let t = conn.higher_tensor(&r, k, SignRule::Leibniz);
        for (i, m) in t.comps().iter().enumerate() {
            let p = t.comp_parity(&t.tuple(i));
            assert!(m.is_zero() || m.parity() == Some(p), "order {k} component {:?}", t.tuple(i));
        }
        let dirs: Vec<Vec<F>> = (0..k).map(|j| unit(par.len(), j % par.len())).collect();
        let d = conn.higher_covariant_derivative(&r, &dirs, SignRule::Leibniz).unwrap();
        assert_eq!(d.slots, 2);
    }
}

/// Along a family of points, the pullback of a Levi-Civita connection is
/// compatible with the pulled-back metric in every odd parameter direction.
#[test]
fn pulled_back_metric_is_parallel() {
    let metric = catalog::product_metric(4);
    let conn = levi_civita(&metric).unwrap();
    let p = &conn.patch;
    let base = PointMap::new(p, vec![&F::rational(superholonomy::grassmann::q(1, 3)) + &g(0).multiply(&g(1)), g(0), F::zero()]).unwrap();
    let y = special_point(p, &base, 1).unwrap();
    let gy: Vec<Vec<F>> = metric.g.iter().map(|r| r.iter().map(|f| pull_back_fn(p, f, &y)).collect()).collect();
    let par = p.parities();
    let pb = Pullback::new(&conn, y).unwrap();
    let e = |a: usize| unit(par.len(), a);
    let sections: Vec<(u8, Vec<F>)> = vec![
        (0, e(0)),
        (1, e(1)),
        (1, e(2)),
        (0, vec![&F::one() + &g(0).multiply(&g(p.eta_t(0))), g(p.eta_t(1)), g(1)]),
        (1, vec![g(p.eta_t(2)), &F::one() + &g(p.eta_t(0)).multiply(&g(p.eta_t(1))), g(0).multiply(&g(p.eta_t(1)))]),
    ];
    for i in 0..p.lprime {
        let x = Direction::Odd(p.eta_t(i));
        for (py, yv) in &sections {
            for (_, zv) in &sections {
                let lhs = x.apply(&pair_with(&gy, &par, yv, zv));
                let first = pair_with(&gy, &par, &pb.nabla(x, yv), zv);
                let second = pair_with(&gy, &par, yv, &pb.nabla(x, zv));
                let rhs = if *py == 1 { &first - &second } else { &first + &second };
                assert_eq!(lhs, rhs, "direction {i}");
            }
        }
    }
}
