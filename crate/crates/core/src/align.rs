//! Closed-form weighted alignment of one pair table.
//!
//! Rigid: `L̂ = (√(Z Zᵀ))⁻¹ Z`, `t̂ = v̄ − L̂ ū`,
//! `e_min = Σⱼ(σ²_uʲ + σ²_vʲ) − 2 Tr(√(Z Zᵀ))`.
//!
//! Similarity adds `ŝ = Tr(√(Z Zᵀ)) / Σⱼ σ²_uʲ`, `t̂ = v̄ − ŝ L̂ ū` and
//! `e_min = Σⱼ σ²_vʲ − Tr(√(Z Zᵀ))² / Σⱼ σ²_uʲ`; the rotation is unchanged.
//!
//! When the proper-rotation correction fires, `Tr(√(Z Zᵀ))` is replaced by
//! `Tr(L̂ Zᵀ)`, which is what the corrected rotation attains.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::{CompensatedSum, Real};
use crate::stats::{check_well_posed, moments, normalize_weights, MomentSummary, PairTable, PointSet};
use crate::symmat::{pd_sqrt, polar_rotation, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rotation and translation.
    Rigid,
    /// Rotation, translation and uniform scale.
    Similarity,
}

/// `x ↦ s L x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform<T> {
    pub rotation: SquareMatrix<T>,
    pub translation: Vec<T>,
    pub scale: T,
    pub mode: Mode,
}

impl<T: Real> Transform<T> {
    pub fn identity(dim: usize, mode: Mode) -> Self {
        Self {
            rotation: SquareMatrix::identity(dim),
            translation: vec![T::zero(); dim],
            scale: T::one(),
            mode,
        }
    }

    pub fn rigid(rotation: SquareMatrix<T>, translation: Vec<T>) -> Self {
        Self { rotation, translation, scale: T::one(), mode: Mode::Rigid }
    }

    pub fn similarity(rotation: SquareMatrix<T>, translation: Vec<T>, scale: T) -> Self {
        Self { rotation, translation, scale, mode: Mode::Similarity }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.rotation
            .mul_vec(x)
            .into_iter()
            .zip(&self.translation)
            .map(|(r, &t)| self.scale * r + t)
            .collect()
    }

    /// `A ∘ self`: apply `self`, then `outer`.
    pub fn then(&self, outer: &Transform<T>) -> Transform<T> {
        let rotation = &outer.rotation * &self.rotation;
        let shifted = outer.apply(&self.translation);
        Transform {
            rotation,
            translation: shifted,
            scale: outer.scale * self.scale,
            mode: if self.mode == Mode::Rigid && outer.mode == Mode::Rigid {
                Mode::Rigid
            } else {
                Mode::Similarity
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions<T> {
    /// Return the raw polar factor even when it is a reflection.
    pub allow_reflection: bool,
    pub rank_tol: T,
}

impl<T: Real> Default for AlignOptions<T> {
    fn default() -> Self {
        Self { allow_reflection: false, rank_tol: T::lit(DEFAULT_RANK_TOL) }
    }
}

#[derive(Debug, Clone)]
pub struct AlignmentSolution<T> {
    pub transform: Transform<T>,
    pub e_min: T,
    pub det_sign: i8,
    /// Eigenvalues of `Z Zᵀ`, descending.
    pub eigenvalues_zzt: Vec<T>,
    pub reflection_corrected: bool,
    /// `Tr(√(Z Zᵀ))`.
    pub trace_sqrt: T,
    /// `Tr(L̂ Zᵀ)`; equals `trace_sqrt` unless the correction fired.
    pub signed_trace: T,
    pub moments: MomentSummary<T>,
}

/// Weighted mean squared distance `Σ m ‖s L u + t − v‖² / Σ m`.
pub fn cost<T: Real>(u: &PointSet<T>, v: &PointSet<T>, table: &PairTable<T>, transform: &Transform<T>) -> Result<T> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    if transform.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: transform.dim() });
    }
    table.check_indices(u.len(), v.len())?;
    let total = table.total_weight();
    if !(total > T::zero()) {
        return Err(Error::ZeroWeightMass);
    }
    let mut acc = CompensatedSum::new();
    for e in table.entries() {
        let mapped = transform.apply(u.point(e.i));
        let d2 = mapped
            .iter()
            .zip(v.point(e.k))
            .fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
        acc.add(e.weight * d2);
    }
    Ok(acc.value() / total)
}

pub fn solve<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    mode: Mode,
    options: &AlignOptions<T>,
) -> Result<AlignmentSolution<T>> {
    let table = if table.is_normalized() { table.clone() } else { normalize_weights(table)? };
    let summary = moments(u, v, &table)?;
    let source_extent = u.extent();
    solve_from_moments(summary, source_extent, mode, options)
}

pub fn solve_rigid<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    options: &AlignOptions<T>,
) -> Result<AlignmentSolution<T>> {
    solve(u, v, table, Mode::Rigid, options)
}

pub fn solve_similarity<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    options: &AlignOptions<T>,
) -> Result<AlignmentSolution<T>> {
    solve(u, v, table, Mode::Similarity, options)
}

fn solve_from_moments<T: Real>(
    summary: MomentSummary<T>,
    source_extent: T,
    mode: Mode,
    options: &AlignOptions<T>,
) -> Result<AlignmentSolution<T>> {
    let var_u = summary.total_var_u();
    let var_v = summary.total_var_v();
    if mode == Mode::Similarity && !(var_u > options.rank_tol * source_extent * source_extent) {
        return Err(Error::DegenerateSource);
    }
    let posedness = check_well_posed(&summary, options.rank_tol);
    if !posedness.is_well_posed() {
        return Err(Error::IllPosed { ratio: posedness.margin().as_f64() });
    }
    let polar = polar_rotation(&summary.cross_cov, options.allow_reflection, options.rank_tol)?;
    let rotation = polar.rotation;
    let rotated_mean = rotation.mul_vec(&summary.mean_u);

    let (scale, e_min) = match mode {
        Mode::Rigid => {
            let two = T::lit(2.0);
            (T::one(), var_u + var_v - two * polar.signed_trace)
        }
        Mode::Similarity => {
            let s = polar.signed_trace / var_u;
            if !(s > T::zero()) {
                // corrected rotation attains no positive correlation
                return Err(Error::IllPosed { ratio: 0.0 });
            }
            (s, var_v - polar.signed_trace * polar.signed_trace / var_u)
        }
    };
    let translation = summary
        .mean_v
        .iter()
        .zip(&rotated_mean)
        .map(|(&vb, &lu)| vb - scale * lu)
        .collect();

    Ok(AlignmentSolution {
        transform: Transform { rotation, translation, scale, mode },
        e_min: e_min.max(T::zero()),
        det_sign: polar.det_sign,
        eigenvalues_zzt: polar.spectrum.eigenvalues,
        reflection_corrected: polar.reflection_corrected,
        trace_sqrt: polar.trace_sqrt,
        signed_trace: polar.signed_trace,
        moments: summary,
    })
}

/// One labeled correspondence with its match strength.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub weight: T,
}

/// Alignment with known correspondence: the unlabeled solver on the table
/// `m_nn = w_n / Σ w`.
pub fn solve_labeled<T: Real>(
    pairs: &[LabeledPair<T>],
    mode: Mode,
    options: &AlignOptions<T>,
) -> Result<AlignmentSolution<T>> {
    let dim = pairs.first().map(|p| p.u.len()).unwrap_or(0);
    if pairs.len() < dim.max(2) {
        return Err(Error::InvalidPointSet(format!(
            "{} labeled pairs cannot fix a {dim}-dimensional alignment",
            pairs.len()
        )));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.weight > T::zero()) || !p.weight.is_finite()) {
        return Err(Error::InvalidWeight(p.weight.as_f64()));
    }
    let u = PointSet::from_rows(&pairs.iter().map(|p| p.u.clone()).collect::<Vec<_>>())?;
    let v = PointSet::from_rows(&pairs.iter().map(|p| p.v.clone()).collect::<Vec<_>>())?;
    let table = PairTable::from_triplets(pairs.iter().enumerate().map(|(n, p)| (n, n, p.weight)))?;
    solve(&u, &v, &table, mode, options)
}

/// Error of the discarded branch `L = −(√(Z Zᵀ))⁻¹ Z`:
/// `e′ = Σⱼ(σ²_uʲ + σ²_vʲ) + 2 Tr(√(Z Zᵀ))`.
pub fn negative_branch_error<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    options: &AlignOptions<T>,
) -> Result<T> {
    let table = normalize_weights(table)?;
    let summary = moments(u, v, &table)?;
    let posedness = check_well_posed(&summary, options.rank_tol);
    if !posedness.is_well_posed() {
        return Err(Error::IllPosed { ratio: posedness.margin().as_f64() });
    }
    let z = &summary.cross_cov;
    let root = pd_sqrt(&(z * &z.transpose()))?;
    let two = T::lit(2.0);
    Ok(summary.total_var_u() + summary.total_var_v() + two * root.trace())
}
