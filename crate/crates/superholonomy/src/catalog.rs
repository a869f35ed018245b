//! Ready-made connection models used by the tests, the guide and the CLI.

use crate::geometry::{ConnectionModel, MetricModel, PatchModel};
use crate::superfn::SuperFunction;
use crate::Error;

fn g(i: usize) -> SuperFunction {
    SuperFunction::generator(i)
}

fn table(n: usize, r: usize) -> Vec<Vec<Vec<SuperFunction>>> {
    vec![vec![vec![SuperFunction::zero(); r]; r]; n]
}

/// `M = R^{0|1}`, `L = 2`, tangent bundle with
/// `nabla_{d th} d th = etaS1 etaS2 th d th`.
pub fn example(lprime: usize) -> ConnectionModel {
    let patch = PatchModel::new(0, 1, 2, lprime).expect("small context");
    let a = g(0).multiply(&g(1)).multiply(&g(patch.theta(0)));
    ConnectionModel::new(patch, vec![1], vec![vec![vec![a]]], None).expect("valid model")
}

/// `M = R^{1|2}`, `L = 2`, bundle of rank `(1|1)`; every Christoffel symbol
/// is nilpotent along points, so transport is exact.
pub fn mixed(lprime: usize) -> ConnectionModel {
    let patch = PatchModel::new(1, 2, 2, lprime).expect("small context");
    let x = SuperFunction::var(0);
    let (t1, t2) = (g(patch.theta(0)), g(patch.theta(1)));
    let (e1, e2) = (g(0), g(1));
    let mut gamma = table(3, 2);
    gamma[0][0][0] = x.multiply(&t1).multiply(&t2);
    gamma[0][0][1] = &e1 + &x.multiply(&t1);
    gamma[1][0][0] = t2.clone();
    gamma[1][1][1] = &t1 + &e2.multiply(&x);
    gamma[2][0][1] = &e1.multiply(&e2) + &t1.multiply(&t2);
    gamma[2][1][0] = x.multiply(&x).multiply(&e1.multiply(&e2));
    gamma[2][1][1] = e2.multiply(&t1).multiply(&t2);
    let mut aux = table(3, 3);
    aux[1][2][0] = e1.multiply(&t2);
    aux[2][1][0] = x.multiply(&e1.multiply(&e2));
    aux[0][1][2] = t1.multiply(&t2);
    ConnectionModel::new(patch, vec![0, 1], gamma, Some(aux)).expect("valid model")
}

/// `M = R^{1|1}`, `L = 1`, bundle `(1|0)` with `nabla_{d x} e = x e`; its
/// transport has an invertible non-identity body and needs hybrid mode.
pub fn bodied(lprime: usize) -> Result<ConnectionModel, Error> {
    let patch = PatchModel::new(1, 1, 1, lprime)?;
    let mut gamma = table(2, 1);
    gamma[0][0][0] = &SuperFunction::var(0) + &g(0).multiply(&g(patch.theta(0)));
    gamma[1][0][0] = g(0).multiply(&SuperFunction::var(0));
    ConnectionModel::new(patch, vec![0], gamma, None)
}

/// `M = R^{0|1} x R^{0|1}`, `L = 3`, tangent bundle with a block-diagonal
/// connection, one Example-like factor per odd coordinate.
pub fn product(lprime: usize) -> ConnectionModel {
    let patch = PatchModel::new(0, 2, 3, lprime).expect("small context");
    let (t1, t2) = (g(patch.theta(0)), g(patch.theta(1)));
    let mut gamma = table(2, 2);
    gamma[0][0][0] = g(0).multiply(&g(1)).multiply(&t1);
    gamma[1][1][1] = g(1).multiply(&g(2)).multiply(&t2);
    ConnectionModel::new(patch, vec![1, 1], gamma, None).expect("valid model")
}

/// `M = R^{0|1}`, `L = 2`, bundle of rank `(1|1)` whose Christoffel
/// symbols depend on `th`.
pub fn rank_one_one(lprime: usize) -> ConnectionModel {
    let patch = PatchModel::new(0, 1, 2, lprime).expect("small context");
    let th = g(patch.theta(0));
    let (e1, e2) = (g(0), g(1));
    let mut gamma = table(1, 2);
    gamma[0][0][0] = e1.multiply(&e2).multiply(&th);
    gamma[0][0][1] = e1.multiply(&th);
    gamma[0][1][0] = e2.multiply(&th);
    gamma[0][1][1] = e2.clone();
    ConnectionModel::new(patch, vec![0, 1], gamma, None).expect("valid model")
}

/// Metric `dx^2 + (1 + etaS1 etaS2 th1 th2) dth1 dth2` on `R^{1|2}`, `L = 2`:
/// a flat line times an odd plane.
pub fn product_metric(lprime: usize) -> MetricModel {
    let patch = PatchModel::new(1, 2, 2, lprime).expect("small context");
    let (t1, t2) = (g(patch.theta(0)), g(patch.theta(1)));
    let w = &SuperFunction::one() + &g(0).multiply(&g(1)).multiply(&t1).multiply(&t2);
    let z = SuperFunction::zero();
    let gram = vec![vec![SuperFunction::one(), z.clone(), z.clone()], vec![z.clone(), z.clone(), w.clone()], vec![z, -w, SuperFunction::zero()]];
    MetricModel::new(patch, gram).expect("valid metric")
}
