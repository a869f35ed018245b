use superholonomy::bilinear::*;
use superholonomy::grassmann::{q, GrassmannElement as G};
use superholonomy::superfn::SuperFunction;

fn m(mask: u64) -> G {
    G::monomial(mask)
}

fn odd_plane(w: G) -> SuperBilinearForm {
    let z = SuperFunction::zero();
    let w = SuperFunction::constant(w);
    SuperBilinearForm::new(
        vec![0, 1, 1],
        vec![vec![SuperFunction::one(), z.clone(), z.clone()], vec![z.clone(), z.clone(), w.clone()], vec![z.clone(), -w, z]],
    )
}

#[test]
fn solutions_reproduce_the_target() {
    let basis = vec![vec![G::one(), m(1)], vec![m(2), G::one()]];
    let target = vec![&m(4) + &m(3), &m(1) + &G::constant(q(2, 1))];
    let c = solve_over_grassmann(&basis, &target, 0b111).unwrap();
    let mut back = vec![G::zero(), G::zero()];
    for (f, ci) in basis.iter().zip(&c) {
        for (b, fb) in back.iter_mut().zip(f) {
            *b += &fb.multiply(ci);
        }
    }
    assert_eq!(back, target);
    // eta1 e0 is not a multiple of e0 + eta1 e1 over eta1 alone
    assert!(!in_span(&[vec![G::one(), m(1)]], &vec![m(1), G::one()], 0b1));
}

#[test]
fn complement_is_orthogonal_and_free() {
    let form = odd_plane(&G::one() + &m(3));
    let w = vec![vec![G::one(), m(1), G::zero()]];
    let comp = orthogonal_complement(&form, &w).unwrap();
    assert_eq!(comp.len(), 2);
    for v in &comp {
        assert!(form.pair(&w[0], v).is_zero());
    }
    let mut all = w.clone();
    all.extend(comp);
    assert!(body_independent(&all));
}

#[test]
fn degenerate_and_non_free_candidates_are_rejected() {
    let form = odd_plane(G::one());
    let odd_line = vec![vec![G::zero(), G::one(), G::zero()]];
    assert!(orthogonal_complement(&form, &odd_line).is_err());
    let nilpotent = vec![vec![m(1), G::zero(), G::zero()]];
    assert!(orthogonal_complement(&form, &nilpotent).is_err());
    assert!(!form.nondegenerate_on(&odd_line));
}
