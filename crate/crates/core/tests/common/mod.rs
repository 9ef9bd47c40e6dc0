#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvsobolev::{CsrMatrix, GeoGraph, Metric, NodeTable, SamplingMask, TvSignal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_nodes(rng: &mut ChaCha8Rng, n: usize) -> NodeTable<f64> {
    NodeTable::unlabeled((0..n).map(|_| (rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0))).collect())
        .unwrap()
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, k: usize) -> GeoGraph<f64> {
    GeoGraph::build(&random_nodes(rng, n), k, Metric::EuclideanDegrees).unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize, m: usize) -> TvSignal<f64> {
    TvSignal::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_mask(rng: &mut ChaCha8Rng, truth: &TvSignal<f64>, p: f64) -> SamplingMask<f64> {
    let mask: Vec<bool> = (0..truth.as_slice().len()).map(|_| rng.gen_bool(p)).collect();
    let observed = TvSignal::from_fn(truth.n_nodes(), truth.n_steps(), |i, t| truth.get(i, t));
    SamplingMask::new(mask, observed).unwrap()
}

pub fn to_na(l: &CsrMatrix<f64>) -> DMatrix<f64> {
    let n = l.dim();
    let mut d = DMatrix::zeros(n, n);
    for (i, j, v) in l.iter() {
        d[(i, j)] = v;
    }
    d
}

/// `D_h`, M×(M−1): column t holds −1 at row t and +1 at row t+1.
pub fn diff_matrix(m: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m, m - 1);
    for t in 0..m - 1 {
        d[(t, t)] = -1.0;
        d[(t + 1, t)] = 1.0;
    }
    d
}

/// `(L + εI)^β` from an independent eigendecomposition.
pub fn shifted_power(l: &DMatrix<f64>, eps: f64, beta: f64) -> DMatrix<f64> {
    let n = l.nrows();
    let e = SymmetricEigen::new(l.clone() + DMatrix::identity(n, n) * eps);
    let vals = e.eigenvalues.map(|v| if beta == 0.0 { 1.0 } else { v.max(0.0).powf(beta) });
    &e.eigenvectors * DMatrix::from_diagonal(&vals) * e.eigenvectors.transpose()
}

/// Dense Hessian `Q + λ (D_h D_hᵀ) ⊗ (L + εI)^β` on `vec(X)`.
pub fn dense_hessian(l: &DMatrix<f64>, mask: &[bool], m: usize, lambda: f64, eps: f64, beta: f64) -> DMatrix<f64> {
    let dh = diff_matrix(m);
    let gram = &dh * dh.transpose();
    let q = DMatrix::from_diagonal(&DVector::from_iterator(mask.len(), mask.iter().map(|&b| if b { 1.0 } else { 0.0 })));
    q + gram.kronecker(&shifted_power(l, eps, beta)) * lambda
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Eigenvalues ascending.
pub fn sym_eigs(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
