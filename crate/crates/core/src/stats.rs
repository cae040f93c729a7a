//! Point sets, weighted pair tables and their first and second moments.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::{compensated_sum, CompensatedSum, Real};
use crate::symmat::{eigen_ratio, sym_eigen};

/// Ordered points in `ℝᴺ`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Real> PointSet<T> {
    pub fn new(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidPointSet(format!(
                "{} coordinates do not form whole {dim}-dimensional points",
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPointSet("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidPointSet("no points".into()))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        let coords = self.points().flat_map(f).collect();
        Self { dim: self.dim, coords }
    }

    pub fn translated(&self, offset: &[T]) -> Self {
        assert_eq!(offset.len(), self.dim);
        self.map_points(|p| p.iter().zip(offset).map(|(&x, &d)| x + d).collect())
    }

    pub fn push(&mut self, point: &[T]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        self.coords.extend_from_slice(point);
        Ok(())
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> T {
        let n = self.len();
        let mut best = T::zero();
        for a in 0..n {
            for b in a + 1..n {
                best = best.max(crate::scalar::distance(self.point(a), self.point(b)));
            }
        }
        best
    }

    /// Length of the bounding-box diagonal.
    pub fn extent(&self) -> T {
        let mut acc = T::zero();
        for j in 0..self.dim {
            let (lo, hi) = self.points().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                (lo.min(p[j]), hi.max(p[j]))
            });
            acc = acc + (hi - lo) * (hi - lo);
        }
        acc.sqrt()
    }
}

/// One candidate cross pair `(u_i, v_k)` and its weight `m_ik`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry<T> {
    pub i: usize,
    pub k: usize,
    pub weight: T,
}

/// Sparse list of candidate pairs.
///
/// Zero-mass tables are representable; [`normalize_weights`] rejects them.
/// The same `(i, k)` may appear more than once and a point may take part in
/// several pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable<T> {
    entries: Vec<PairEntry<T>>,
    normalized: bool,
}

impl<T: Real> PairTable<T> {
    pub fn new(entries: Vec<PairEntry<T>>) -> Result<Self> {
        for e in &entries {
            if !(e.weight.is_finite() && e.weight >= T::zero()) {
                return Err(Error::InvalidWeight(e.weight.as_f64()));
            }
        }
        Ok(Self { entries, normalized: false })
    }

    pub fn from_triplets(triplets: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        Self::new(
            triplets
                .into_iter()
                .map(|(i, k, weight)| PairEntry { i, k, weight })
                .collect(),
        )
    }

    /// Every cross pair `(i, k)` with weight `f(i, k)`.
    pub fn full_cross(n_u: usize, n_v: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut triplets = Vec::with_capacity(n_u * n_v);
        for i in 0..n_u {
            for k in 0..n_v {
                triplets.push((i, k, f(i, k)));
            }
        }
        Self::from_triplets(triplets)
    }

    /// Separable weights `m_ik = a_i · b_k` over the full cross product.
    pub fn separable(a: &[T], b: &[T]) -> Result<Self> {
        Self::full_cross(a.len(), b.len(), |i, k| a[i] * b[k])
    }

    pub fn entries(&self) -> &[PairEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_weight(&self) -> T {
        compensated_sum(self.entries.iter().map(|e| e.weight))
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.i, e.k)).collect()
    }

    pub fn check_indices(&self, n_u: usize, n_v: usize) -> Result<()> {
        match self.entries.iter().find(|e| e.i >= n_u || e.k >= n_v) {
            Some(e) => Err(Error::IndexOutOfRange { i: e.i, k: e.k, n_u, n_v }),
            None => Ok(()),
        }
    }
}

/// Scales the weights to sum to one, preserving entry order.
pub fn normalize_weights<T: Real>(table: &PairTable<T>) -> Result<PairTable<T>> {
    let total = table.total_weight();
    if !(total > T::zero()) {
        return Err(Error::ZeroWeightMass);
    }
    let entries = table
        .entries
        .iter()
        .map(|e| PairEntry { weight: e.weight / total, ..*e })
        .collect();
    Ok(PairTable { entries, normalized: true })
}

/// Weighted means, per-feature variances and the cross-covariance
/// `Z = Σ m_ik v_k u_iᵀ − v̄ ūᵀ`.
#[derive(Debug, Clone)]
pub struct MomentSummary<T> {
    pub mean_u: Vec<T>,
    pub mean_v: Vec<T>,
    pub var_u: Vec<T>,
    pub var_v: Vec<T>,
    /// Row index follows `v`, column index follows `u`.
    pub cross_cov: SquareMatrix<T>,
    /// Total weight of the table the moments were taken over.
    pub weight_sum: T,
}

impl<T: Real> MomentSummary<T> {
    pub fn dim(&self) -> usize {
        self.mean_u.len()
    }

    pub fn total_var_u(&self) -> T {
        self.var_u.iter().copied().sum()
    }

    pub fn total_var_v(&self) -> T {
        self.var_v.iter().copied().sum()
    }
}

/// Moments of the pair table. Weights are divided by their total, so a
/// normalized table is used as-is.
///
/// The second moments are accumulated about the weighted means (an exact
/// rewrite of `Σ m v uᵀ − v̄ ūᵀ`) with compensated summation.
pub fn moments<T: Real>(u: &PointSet<T>, v: &PointSet<T>, table: &PairTable<T>) -> Result<MomentSummary<T>> {
    let n = u.dim();
    if v.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
    }
    table.check_indices(u.len(), v.len())?;
    let weight_sum = table.total_weight();
    if !(weight_sum > T::zero()) {
        return Err(Error::ZeroWeightMass);
    }
    let w = |e: &PairEntry<T>| {
        if table.normalized {
            e.weight
        } else {
            e.weight / weight_sum
        }
    };

    let mut su = vec![CompensatedSum::new(); n];
    let mut sv = vec![CompensatedSum::new(); n];
    for e in table.entries() {
        let m = w(e);
        for j in 0..n {
            su[j].add(m * u.point(e.i)[j]);
            sv[j].add(m * v.point(e.k)[j]);
        }
    }
    let mean_u: Vec<T> = su.iter().map(CompensatedSum::value).collect();
    let mean_v: Vec<T> = sv.iter().map(CompensatedSum::value).collect();

    let mut z = vec![CompensatedSum::new(); n * n];
    let mut vu = vec![CompensatedSum::new(); n];
    let mut vv = vec![CompensatedSum::new(); n];
    let mut du = vec![T::zero(); n];
    let mut dv = vec![T::zero(); n];
    for e in table.entries() {
        let m = w(e);
        if m == T::zero() {
            continue;
        }
        for j in 0..n {
            du[j] = u.point(e.i)[j] - mean_u[j];
            dv[j] = v.point(e.k)[j] - mean_v[j];
            vu[j].add(m * du[j] * du[j]);
            vv[j].add(m * dv[j] * dv[j]);
        }
        for r in 0..n {
            let mv = m * dv[r];
            for c in 0..n {
                z[r * n + c].add(mv * du[c]);
            }
        }
    }
    let clamp = |acc: &CompensatedSum<T>| acc.value().max(T::zero());
    let cross_cov = SquareMatrix::from_row_major(n, z.iter().map(CompensatedSum::value).collect())?;
    Ok(MomentSummary {
        var_u: vu.iter().map(clamp).collect(),
        var_v: vv.iter().map(clamp).collect(),
        mean_u,
        mean_v,
        cross_cov,
        weight_sum,
    })
}

/// Whether the weights couple the two sets enough to pin down a rotation.
///
/// `eigen_ratio` is `λ_min / λ_max` of `Z Zᵀ`; `coupling` is
/// `λ_max / (Σσ²_u · Σσ²_v)`, which lies in `[0, 1]` by Cauchy–Schwarz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WellPosedness<T> {
    WellPosed { eigen_ratio: T, coupling: T },
    IllPosed { eigen_ratio: T, coupling: T },
}

impl<T: Real> WellPosedness<T> {
    pub fn is_well_posed(&self) -> bool {
        matches!(self, WellPosedness::WellPosed { .. })
    }

    pub fn eigen_ratio(&self) -> T {
        match *self {
            WellPosedness::WellPosed { eigen_ratio, .. } | WellPosedness::IllPosed { eigen_ratio, .. } => eigen_ratio,
        }
    }

    pub fn coupling(&self) -> T {
        match *self {
            WellPosedness::WellPosed { coupling, .. } | WellPosedness::IllPosed { coupling, .. } => coupling,
        }
    }

    /// The smaller of the two diagnostics, for error reporting.
    pub fn margin(&self) -> T {
        self.eigen_ratio().min(self.coupling())
    }
}

/// Ill-posed when `λ_min(Z Zᵀ) ≤ rank_tol · λ_max(Z Zᵀ)` (rank deficiency) or
/// `λ_max(Z Zᵀ) ≤ rank_tol · Σσ²_u · Σσ²_v` (`Z` vanishes at the scale of
/// the data, as it does for separable weights).
pub fn check_well_posed<T: Real>(summary: &MomentSummary<T>, rank_tol: T) -> WellPosedness<T> {
    let z = &summary.cross_cov;
    let zzt = z * &z.transpose();
    let (largest, smallest) = match sym_eigen(&zzt) {
        Ok(spectrum) => (spectrum.largest(), spectrum.smallest()),
        Err(_) => (T::zero(), T::zero()),
    };
    let eigen_ratio = eigen_ratio(largest, smallest);
    let spread = summary.total_var_u() * summary.total_var_v();
    let coupling = if spread > T::zero() { largest / spread } else { T::zero() };
    if eigen_ratio > rank_tol && coupling > rank_tol {
        WellPosedness::WellPosed { eigen_ratio, coupling }
    } else {
        WellPosedness::IllPosed { eigen_ratio, coupling }
    }
}
