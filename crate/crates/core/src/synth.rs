//! Seeded synthetic instances with ground truth, a proximity-kernel initial
//! weighting, and a brute-force angle-grid oracle for 2-D alignment.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`; Gaussian noise uses `rand_distr::StandardNormal`. The same
//! seed reproduces the same instance bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::align::{Mode, Transform};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Real;
use crate::stats::{normalize_weights, PairTable, PointSet};

pub const DEFAULT_KERNEL_SIGMA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SynthSpec<T> {
    pub dim: usize,
    pub n_points: usize,
    pub noise_sigma: T,
    /// Unmatched points appended to `V`.
    pub outlier_count: usize,
    /// Wrong candidate pairs mixed into the initial table.
    pub spurious_pairs: usize,
    pub transform: Transform<T>,
    pub seed: u64,
    /// Per-axis `(low, high)` range for the source points.
    pub bounding_box: Vec<(T, T)>,
}

impl<T: Real> SynthSpec<T> {
    /// Unit box, identity transform, no noise, no outliers.
    pub fn unit(dim: usize, n_points: usize, seed: u64) -> Self {
        Self {
            dim,
            n_points,
            noise_sigma: T::zero(),
            outlier_count: 0,
            spurious_pairs: 0,
            transform: Transform::identity(dim, Mode::Rigid),
            seed,
            bounding_box: vec![(T::zero(), T::one()); dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.n_points < self.dim + 1 {
            return bad(format!("need at least {} points in {} dimensions", self.dim + 1, self.dim));
        }
        if !(self.noise_sigma >= T::zero() && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be nonnegative, got {}", self.noise_sigma));
        }
        if self.bounding_box.len() != self.dim || self.bounding_box.iter().any(|&(lo, hi)| !(lo < hi)) {
            return bad("bounding box needs one nonempty range per axis".into());
        }
        if self.transform.dim() != self.dim || self.transform.rotation.dim() != self.dim {
            return bad("transform dimension differs from spec dimension".into());
        }
        if !(self.transform.scale > T::zero()) {
            return bad("transform scale must be positive".into());
        }
        if self.transform.rotation.orthogonality_error() > T::tol(1e-9) {
            return bad("transform rotation is not orthogonal".into());
        }
        let n_v = self.n_points + self.outlier_count;
        let wrong_pairs = self.n_points * n_v - self.n_points;
        if self.spurious_pairs > wrong_pairs {
            return bad(format!("only {wrong_pairs} wrong pairs exist, {} requested", self.spurious_pairs));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthInstance<T> {
    pub u: PointSet<T>,
    pub v: PointSet<T>,
    pub true_pairs: Vec<(usize, usize)>,
    pub ground_truth: Transform<T>,
    /// True pairs followed by the spurious candidates, all with weight 1.
    pub initial_table: PairTable<T>,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Haar-ish random rotation: Gram–Schmidt on a Gaussian matrix, with the
/// first column negated if needed so that `det = +1`.
pub fn random_rotation<T: Real, R: Rng>(dim: usize, rng: &mut R) -> SquareMatrix<T> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let mut degenerate = false;
        for c in 0..dim {
            for prev in 0..c {
                let (done, rest) = cols.split_at_mut(c);
                let (col, basis) = (&mut rest[0], &done[prev]);
                let proj: f64 = col.iter().zip(basis).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(basis).for_each(|(a, b)| *a -= proj * b);
            }
            let len = cols[c].iter().map(|x| x * x).sum::<f64>().sqrt();
            if len < 1e-8 {
                degenerate = true;
                break;
            }
            cols[c].iter_mut().for_each(|x| *x /= len);
        }
        if degenerate {
            continue;
        }
        let mut m = SquareMatrix::zeros(dim);
        for c in 0..dim {
            for r in 0..dim {
                m[(r, c)] = lit::<T>(cols[c][r]);
            }
        }
        if m.determinant() < T::zero() {
            for r in 0..dim {
                m[(r, 0)] = -m[(r, 0)];
            }
        }
        return m;
    }
}

pub fn rotation_2d<T: Real>(angle: T) -> SquareMatrix<T> {
    let (s, c) = angle.sin_cos();
    SquareMatrix::from_row_major(2, vec![c, -s, s, c]).expect("2x2")
}

pub fn generate<T: Real>(spec: &SynthSpec<T>) -> Result<SynthInstance<T>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let dim = spec.dim;

    let mut u_coords = Vec::with_capacity(spec.n_points * dim);
    for _ in 0..spec.n_points {
        for &(lo, hi) in &spec.bounding_box {
            let t: f64 = rng.random();
            u_coords.push(lo + (hi - lo) * lit::<T>(t));
        }
    }
    let u = PointSet::new(dim, u_coords)?;

    let mut v_coords = Vec::with_capacity((spec.n_points + spec.outlier_count) * dim);
    for p in u.points() {
        for x in spec.transform.apply(p) {
            let n: f64 = rng.sample(StandardNormal);
            v_coords.push(x + spec.noise_sigma * lit::<T>(n));
        }
    }
    let matched = PointSet::new(dim, v_coords.clone())?;
    let ranges: Vec<(T, T)> = (0..dim)
        .map(|j| {
            matched
                .points()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])))
        })
        .collect();
    for _ in 0..spec.outlier_count {
        for &(lo, hi) in &ranges {
            let t: f64 = rng.random();
            v_coords.push(lo + (hi - lo) * lit::<T>(t));
        }
    }
    let v = PointSet::new(dim, v_coords)?;

    let true_pairs: Vec<(usize, usize)> = (0..spec.n_points).map(|i| (i, i)).collect();
    let mut candidates: Vec<(usize, usize)> = true_pairs.clone();
    let n_v = v.len();
    let mut taken = std::collections::HashSet::new();
    while taken.len() < spec.spurious_pairs {
        let i = rng.random_range(0..spec.n_points);
        let k = rng.random_range(0..n_v);
        if i != k && taken.insert((i, k)) {
            candidates.push((i, k));
        }
    }
    let initial_table = PairTable::from_triplets(candidates.into_iter().map(|(i, k)| (i, k, T::one())))?;

    Ok(SynthInstance { u, v, true_pairs, ground_truth: spec.transform.clone(), initial_table })
}

/// Gaussian-kernel weights over every cross pair, after centering each set
/// on its centroid and scaling it to unit RMS radius.
pub fn proximity_weights<T: Real>(u: &PointSet<T>, v: &PointSet<T>, kernel_sigma: T) -> Result<PairTable<T>> {
    if !(kernel_sigma > T::zero()) {
        return Err(Error::InvalidConfig(format!("kernel sigma must be positive, got {kernel_sigma}")));
    }
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    let nu = standardize(u)?;
    let nv = standardize(v)?;
    let two_s2 = lit::<T>(2.0) * kernel_sigma * kernel_sigma;
    let table = PairTable::full_cross(u.len(), v.len(), |i, k| {
        let d2 = nu
            .point(i)
            .iter()
            .zip(nv.point(k))
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        (-d2 / two_s2).exp()
    })?;
    normalize_weights(&table)
}

fn standardize<T: Real>(set: &PointSet<T>) -> Result<PointSet<T>> {
    let n = T::from_usize(set.len()).expect("count fits");
    let dim = set.dim();
    let centroid: Vec<T> = (0..dim)
        .map(|j| set.points().map(|p| p[j]).sum::<T>() / n)
        .collect();
    let ms = set
        .points()
        .map(|p| p.iter().zip(&centroid).fold(T::zero(), |acc, (&x, &c)| acc + (x - c) * (x - c)))
        .sum::<T>()
        / n;
    let rms = ms.sqrt();
    if !(rms > T::zero()) {
        return Err(Error::DegenerateSet);
    }
    Ok(set.map_points(|p| p.iter().zip(&centroid).map(|(&x, &c)| (x - c) / rms).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum<T> {
    pub angle: T,
    pub scale: T,
    pub e_best: T,
}

/// Exhaustive search over `n_angles` evenly spaced rotation angles in 2-D.
///
/// For each angle the translation (and, in similarity mode, the scale) is
/// set to its conditional optimum and the weighted cost is summed directly.
/// Shares no code with the closed-form solver.
pub fn oracle_grid_2d<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    n_angles: usize,
    mode: Mode,
) -> Result<GridOptimum<f64>> {
    if u.dim() != 2 || v.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: u.dim().max(v.dim()) });
    }
    if n_angles < 1000 {
        return Err(Error::InvalidConfig(format!("grid needs at least 1000 angles, got {n_angles}")));
    }
    table.check_indices(u.len(), v.len())?;

    // plain f64 copies: (weight, u, v)
    let pairs: Vec<(f64, [f64; 2], [f64; 2])> = table
        .entries()
        .iter()
        .map(|e| {
            let a = u.point(e.i);
            let b = v.point(e.k);
            (e.weight.as_f64(), [a[0].as_f64(), a[1].as_f64()], [b[0].as_f64(), b[1].as_f64()])
        })
        .collect();
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeightMass);
    }
    let mut ubar = [0.0; 2];
    let mut vbar = [0.0; 2];
    for (w, a, b) in &pairs {
        for j in 0..2 {
            ubar[j] += w * a[j] / total;
            vbar[j] += w * b[j] / total;
        }
    }
    let spread_u: f64 = pairs
        .iter()
        .map(|(w, a, _)| w * ((a[0] - ubar[0]).powi(2) + (a[1] - ubar[1]).powi(2)))
        .sum::<f64>()
        / total;

    let mut best = GridOptimum { angle: 0.0, scale: 1.0, e_best: f64::INFINITY };
    for step in 0..n_angles {
        let angle = std::f64::consts::TAU * step as f64 / n_angles as f64;
        let (sn, cs) = angle.sin_cos();
        let rot = |a: &[f64; 2]| [cs * a[0] - sn * a[1], sn * a[0] + cs * a[1]];
        let scale = match mode {
            Mode::Rigid => 1.0,
            Mode::Similarity => {
                let corr: f64 = pairs
                    .iter()
                    .map(|(w, a, b)| {
                        let ra = rot(&[a[0] - ubar[0], a[1] - ubar[1]]);
                        w * (ra[0] * (b[0] - vbar[0]) + ra[1] * (b[1] - vbar[1]))
                    })
                    .sum::<f64>()
                    / total;
                (corr / spread_u).max(0.0)
            }
        };
        let ru = rot(&ubar);
        let t = [vbar[0] - scale * ru[0], vbar[1] - scale * ru[1]];
        let e: f64 = pairs
            .iter()
            .map(|(w, a, b)| {
                let ra = rot(a);
                let dx = scale * ra[0] + t[0] - b[0];
                let dy = scale * ra[1] + t[1] - b[1];
                w * (dx * dx + dy * dy)
            })
            .sum::<f64>()
            / total;
        if e < best.e_best {
            best = GridOptimum { angle, scale, e_best: e };
        }
    }
    Ok(best)
}
