use proptest::prelude::*;
use superholonomy::bilinear::{in_span, orthogonal_complement, osp_complete, solve_over_grassmann, vector_parity, Column, SuperBilinearForm};
use superholonomy::grassmann::{q, GrassmannElement as G};
use superholonomy::lie::{lie_closure, span_equal, LieSubalgebra};
use superholonomy::superfn::SuperFunction as F;
use superholonomy::supermatrix::SuperMatrix;

const PAR: [u8; 3] = [0, 0, 1];
const GENS: usize = 4;

fn arb_g() -> impl Strategy<Value = G> {
    proptest::collection::vec((0u64..(1 << GENS), -3i64..4), 0..4).prop_map(|t| G::from_terms(t.into_iter().map(|(m, c)| (m, q(c, 1)))))
}

fn arb_matrix(p: u8) -> impl Strategy<Value = SuperMatrix> {
    proptest::collection::vec(arb_g(), 9).prop_map(move |cells| {
        SuperMatrix::from_fn(&PAR, &PAR, |i, j| F::constant(cells[3 * i + j].parity_part((p + PAR[i] + PAR[j]) % 2)))
    })
}

fn arb_homogeneous() -> impl Strategy<Value = SuperMatrix> {
    (0u8..2).prop_flat_map(arb_matrix)
}

fn e(i: usize, j: usize) -> SuperMatrix {
    SuperMatrix::elementary(&[0, 0, 0], i, j, G::one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn super_jacobi(x in arb_homogeneous(), y in arb_homogeneous(), z in arb_homogeneous()) {
        let (px, py, pz) = (x.parity().unwrap_or(0), y.parity().unwrap_or(0), z.parity().unwrap_or(0));
        let s = |a: u8, b: u8| if a * b == 1 { -1 } else { 1 };
        let br = |a: &SuperMatrix, b: &SuperMatrix| a.bracket(b);
        let t1 = br(&x, &br(&y, &z)).scale(&q(s(px, pz), 1));
        let t2 = br(&y, &br(&z, &x)).scale(&q(s(py, px), 1));
        let t3 = br(&z, &br(&x, &y)).scale(&q(s(pz, py), 1));
        prop_assert!(t1.add(&t2).add(&t3).is_zero());
    }

    #[test]
    fn graded_antisymmetry(x in arb_homogeneous(), y in arb_homogeneous()) {
        let s = if x.parity() == Some(1) && y.parity() == Some(1) { 1 } else { -1 };
        prop_assert_eq!(x.supercommutator(&y).unwrap(), y.supercommutator(&x).unwrap().scale(&q(s, 1)));
    }

    #[test]
    fn closure_is_canonical(gens in proptest::collection::vec(arb_homogeneous(), 1..4), c in 1i64..4) {
        let a = lie_closure(&PAR, &gens);
        prop_assert!(a.is_closed());
        let mut again = a.clone();
        again.close();
        prop_assert_eq!(again.basis(), a.basis());
        let mut permuted: Vec<SuperMatrix> = gens.iter().rev().map(|g| g.scale(&q(-c, 2))).collect();
        permuted.rotate_left(1);
        let b = lie_closure(&PAR, &permuted);
        prop_assert_eq!(b.basis(), a.basis());
        prop_assert!(span_equal(&a, &b));
    }
}

#[test]
fn closure_examples() {
    let par = [0, 0, 0];
    assert_eq!(lie_closure(&par, &[e(0, 1)]).dim(), 1);
    let a = lie_closure(&par, &[e(0, 1), e(1, 2)]);
    assert_eq!(a.dim(), 3);
    assert!(a.contains(&e(0, 2)));
    assert!(span_equal(&LieSubalgebra::span(&par, &[e(0, 0)]), &LieSubalgebra::span(&par, &[e(0, 0).scale(&q(2, 1))])));
    assert!(!span_equal(&LieSubalgebra::span(&par, &[e(0, 0)]), &LieSubalgebra::span(&par, &[e(1, 1)])));
    let x = SuperMatrix::elementary(&[0, 1], 0, 1, G::one());
    assert_eq!(x.supercommutator(&x).unwrap(), x.multiply(&x).scale(&q(2, 1)));
    assert!(x.add(&e2()).supercommutator(&x).is_err());
}

fn e2() -> SuperMatrix {
    SuperMatrix::elementary(&[0, 1], 0, 0, G::one())
}

fn unit(n: usize, i: usize) -> Column {
    (0..n).map(|k| if k == i { G::one() } else { G::zero() }).collect()
}

/// `R^{2|2}` with body `diag(1, -1)` plus a symplectic odd block, perturbed
/// by nilpotent terms that keep it even and supersymmetric.
fn perturbed() -> SuperBilinearForm {
    let par = vec![0, 0, 1, 1];
    let n12 = G::monomial(0b11);
    let mut g = vec![vec![F::zero(); 4]; 4];
    g[0][0] = F::constant(&G::one() + &n12);
    g[1][1] = F::constant(-&(&G::one() + &G::monomial(0b1100)));
    g[0][1] = F::constant(n12.scale(&q(3, 1)));
    g[1][0] = g[0][1].clone();
    g[2][3] = F::constant(&G::from_int(2) + &G::monomial(0b110));
    g[3][2] = -g[2][3].clone();
    g[0][2] = F::constant(G::generator(2));
    g[2][0] = g[0][2].clone();
    g[1][3] = F::constant(G::monomial(0b111));
    g[3][1] = g[1][3].clone();
    SuperBilinearForm::new(par, g)
}

fn is_normal_form(form: &SuperBilinearForm, basis: &[Column], split: usize) -> bool {
    let g = form.restricted(basis);
    let n = basis.len();
    let parts = [0..split, split..n];
    let par: Vec<u8> = basis.iter().map(|v| vector_parity(&form.par, v).unwrap()).collect();
    for r in &parts {
        let idx: Vec<usize> = r.clone().collect();
        let even: Vec<usize> = idx.iter().copied().filter(|&i| par[i] == 0).collect();
        let odd: Vec<usize> = idx.iter().copied().filter(|&i| par[i] == 1).collect();
        if idx != [even.clone(), odd.clone()].concat() || odd.len() % 2 == 1 {
            return false;
        }
        let signs: Vec<bool> = even.iter().map(|&i| g[i][i] == G::one()).collect();
        if even.iter().any(|&i| g[i][i] != G::one() && g[i][i] != G::from_int(-1)) || signs.windows(2).any(|w| !w[0] && w[1]) {
            return false;
        }
        for k in (0..odd.len()).step_by(2) {
            let (a, b) = (odd[k], odd[k + 1]);
            if g[a][b] != G::one() || g[b][a] != G::from_int(-1) {
                return false;
            }
        }
    }
    (0..n).all(|i| {
        (0..n).all(|j| {
            let paired = par[i] == 1 && par[j] == 1 && {
                let r = if i < split { 0 } else { split };
                let (a, b) = (i - r, j - r);
                let start = basis[r..].iter().take_while(|v| vector_parity(&form.par, v) == Some(0)).count();
                (i < split) == (j < split) && a >= start && b >= start && (a - start) / 2 == (b - start) / 2 && i != j
            };
            i == j || paired || g[i][j].is_zero()
        })
    })
}

#[test]
fn osp_examples() {
    let euclid = SuperBilinearForm::new(vec![0, 0], vec![vec![F::one(), F::zero()], vec![F::zero(), F::one()]]);
    assert_eq!(osp_complete(&euclid, &[unit(2, 0)]).unwrap(), vec![unit(2, 0), unit(2, 1)]);
    let symp = SuperBilinearForm::new(vec![1, 1], vec![vec![F::zero(), F::one()], vec![-F::one(), F::zero()]]);
    assert_eq!(osp_complete(&symp, &[]).unwrap(), vec![unit(2, 0), unit(2, 1)]);
    let form = perturbed();
    for w in [vec![], vec![unit(4, 0)], vec![unit(4, 1)], vec![unit(4, 2), unit(4, 3)], vec![unit(4, 0), unit(4, 2), unit(4, 3)]] {
        let b = osp_complete(&form, &w).unwrap();
        assert_eq!(b.len(), 4);
        assert!(is_normal_form(&form, &b, w.len()), "{w:?}: {:?}", form.restricted(&b));
        let mask = 0b1111;
        assert!(w.iter().all(|v| in_span(&b[..w.len()], v, mask)));
        assert!(b[..w.len()].iter().all(|v| in_span(&w, v, mask)));
    }
    let iso = SuperBilinearForm::new(vec![0, 0], vec![vec![F::zero(), F::one()], vec![F::one(), F::zero()]]);
    assert!(osp_complete(&iso, &[unit(2, 0)]).is_err());
    let b = osp_complete(&iso, &[]).unwrap();
    assert_eq!(iso.restricted(&b)[0][0], G::from_int(2));
    assert_eq!(iso.restricted(&b)[1][1], G::constant(q(-1, 2)));
}

#[test]
fn complement_dimensions_add_up_per_parity() {
    let form = perturbed();
    for w in [vec![unit(4, 0)], vec![unit(4, 2), unit(4, 3)], vec![unit(4, 0), unit(4, 1)]] {
        let c = orthogonal_complement(&form, &w).unwrap();
        let count = |s: &[Column], p| s.iter().filter(|v| vector_parity(&form.par, v) == Some(p)).count();
        assert_eq!(count(&w, 0) + count(&c, 0), 2);
        assert_eq!(count(&w, 1) + count(&c, 1), 2);
        assert!(w.iter().all(|a| c.iter().all(|b| form.pair(a, b).is_zero())));
    }
    assert!(orthogonal_complement(&form, &[unit(4, 2)]).is_err());
}

#[test]
fn solving_over_grassmann() {
    let one = vec![vec![&G::one() + &G::monomial(0b11)]];
    assert_eq!(solve_over_grassmann(&one, &vec![G::one()], 0b11).unwrap(), vec![&G::one() - &G::monomial(0b11)]);
    let basis = vec![vec![&G::from_int(2) + &G::monomial(0b11), G::generator(2)], vec![G::generator(0), &G::one() - &G::monomial(0b110)]];
    let target = vec![&G::from_int(3) + &G::monomial(0b101), G::monomial(0b111)];
    let c = solve_over_grassmann(&basis, &target, 0b111).unwrap();
    let back: Column = (0..2).map(|r| &basis[0][r].multiply(&c[0]) + &basis[1][r].multiply(&c[1])).collect();
    assert_eq!(back, target);
    assert!(solve_over_grassmann(&[vec![G::generator(0)]], &vec![G::one()], 0b1).is_none());
}
