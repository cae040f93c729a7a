#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pointreg::align::{Mode, Transform};
use pointreg::stats::{PairTable, PointSet};
use pointreg::synth::{random_rotation, rng_for};
use pointreg::SquareMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, dim: usize, half_width: f64) -> PointSet<f64> {
    PointSet::new(dim, (0..n * dim).map(|_| rng.random_range(-half_width..half_width)).collect()).unwrap()
}

pub fn jitter(rng: &mut ChaCha8Rng, set: &PointSet<f64>, sigma: f64) -> PointSet<f64> {
    let noisy: Vec<f64> = set.as_slice().iter().map(|x| x + rng.random_range(-sigma..sigma)).collect();
    PointSet::new(set.dim(), noisy).unwrap()
}

pub fn random_transform(rng: &mut ChaCha8Rng, dim: usize, mode: Mode) -> Transform<f64> {
    let rotation = random_rotation(dim, rng);
    let translation = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    match mode {
        Mode::Rigid => Transform::rigid(rotation, translation),
        Mode::Similarity => Transform::similarity(rotation, translation, rng.random_range(0.3..3.0)),
    }
}

/// A weighted unlabeled instance: the template is a perturbed, transformed
/// copy of the source; weights favour the true pairs but cover every cross
/// pair with random mass.
pub struct WeightedInstance {
    pub u: PointSet<f64>,
    pub v: PointSet<f64>,
    pub table: PairTable<f64>,
}

pub fn weighted_instance(seed: u64, dim: usize, n: usize) -> WeightedInstance {
    let mut rng = rng_for(seed);
    let u = random_set(&mut rng, n, dim, 1.0);
    let truth = random_transform(&mut rng, dim, Mode::Similarity);
    let v = jitter(&mut rng, &u.map_points(|p| truth.apply(p)), 0.1);
    let boost = rng.random_range(0.0..3.0);
    let table = PairTable::full_cross(n, n, |i, k| rng.random_range(0.0..1.0) + if i == k { boost } else { 0.0 })
        .unwrap();
    WeightedInstance { u, v, table }
}

pub fn frobenius_diff(a: &SquareMatrix<f64>, b: &SquareMatrix<f64>) -> f64 {
    a.sub(b).frobenius_norm()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Weighted Kabsch–Umeyama through an SVD of the weighted covariance,
/// computed with nalgebra. Returns `(R, t, s)`.
pub fn procrustes_oracle(
    us: &[Vec<f64>],
    vs: &[Vec<f64>],
    weights: &[f64],
    with_scale: bool,
) -> (DMatrix<f64>, DVector<f64>, f64) {
    let dim = us[0].len();
    let total: f64 = weights.iter().sum();
    let mut mu = DVector::zeros(dim);
    let mut mv = DVector::zeros(dim);
    for ((u, v), w) in us.iter().zip(vs).zip(weights) {
        mu += DVector::from_column_slice(u) * (*w / total);
        mv += DVector::from_column_slice(v) * (*w / total);
    }
    let mut cov = DMatrix::zeros(dim, dim);
    let mut spread = 0.0;
    for ((u, v), w) in us.iter().zip(vs).zip(weights) {
        let du = DVector::from_column_slice(u) - &mu;
        let dv = DVector::from_column_slice(v) - &mv;
        cov += &dv * du.transpose() * (*w / total);
        spread += du.norm_squared() * (*w / total);
    }
    let svd = cov.clone().svd(true, true);
    let left = svd.u.unwrap();
    let right_t = svd.v_t.unwrap();
    let mut d = DVector::from_element(dim, 1.0);
    if (&left * &right_t).determinant() < 0.0 {
        // nalgebra sorts singular values descending
        d[dim - 1] = -1.0;
    }
    let rotation = &left * DMatrix::from_diagonal(&d) * &right_t;
    let scale = if with_scale {
        svd.singular_values.iter().zip(d.iter()).map(|(s, d)| s * d).sum::<f64>() / spread
    } else {
        1.0
    };
    let translation = &mv - &rotation * &mu * scale;
    (rotation, translation, scale)
}

pub fn to_nalgebra(m: &SquareMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

/// Prints one line per criterion so the suite output doubles as a report.
/// Writes to the stdout handle directly, which the test harness does not
/// capture, so the line shows up without `--nocapture`.
pub fn verdict(id: &str, description: &str, pass: bool, detail: String) {
    use std::io::Write;
    let line = format!("[{}] {id}: {description} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "{id} failed: {detail}");
}
