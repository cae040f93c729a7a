//! Symmetric eigendecomposition, positive-semidefinite square roots and the
//! orthogonal polar factor for small dense matrices.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Real;

pub const MAX_DIM: usize = 64;
pub const MAX_SWEEPS: usize = 100;
/// Extra sweeps run once the off-diagonal mass drops below `1e-12 ‖A‖_F`.
const POLISH_SWEEPS: usize = 2;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `A = P · diag(λ) · Pᵀ` with eigenvalues sorted in descending order and the
/// eigenvectors stored as the columns of `P`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: SquareMatrix<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    /// `P · diag(f(λ)) · Pᵀ`.
    pub fn compose(&self, f: impl Fn(T) -> T) -> SquareMatrix<T> {
        let n = self.eigenvalues.len();
        let p = &self.eigenvectors;
        let mapped: Vec<T> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = SquareMatrix::zeros(n);
        for r in 0..n {
            for c in r..n {
                let v = (0..n).fold(T::zero(), |acc, j| acc + p[(r, j)] * mapped[j] * p[(c, j)]);
                out[(r, c)] = v;
                out[(c, r)] = v;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SquareMatrix<T> {
        self.compose(|l| l)
    }

    pub fn largest(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn smallest(&self) -> T {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
pub fn sym_eigen<T: Real>(a: &SquareMatrix<T>) -> Result<SpectralDecomposition<T>> {
    let n = a.dim();
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = a.frobenius_norm();
    let asym = a.asymmetry();
    if asym > T::tol(1e-9) * scale {
        return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
    }

    // work on the exact symmetric part
    let mut m = a.add(&a.transpose()).scaled(T::lit(0.5));
    let mut v = SquareMatrix::identity(n);
    let target = T::tol(1e-12) * scale;

    let floor = T::epsilon() * scale;
    let mut converged = false;
    let mut polish = POLISH_SWEEPS;
    for _ in 0..=MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= target {
            converged = true;
            // quadratic convergence: a couple more sweeps reach rounding level
            if polish == 0 || off <= floor {
                break;
            }
            polish -= 1;
        }
        jacobi_sweep(&mut m, &mut v);
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    // stable sort keeps ties in solver order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        m[(y, y)]
            .partial_cmp(&m[(x, x)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&j| m[(j, j)]).collect();
    let mut eigenvectors = SquareMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

fn jacobi_sweep<T: Real>(m: &mut SquareMatrix<T>, v: &mut SquareMatrix<T>) {
    let n = m.dim();
    let two = T::lit(2.0);
    for p in 0..n {
        for q in p + 1..n {
            let apq = m[(p, q)];
            if apq == T::zero() {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
            let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                T::one() / (two * theta)
            } else {
                let sgn = if theta < T::zero() { -T::one() } else { T::one() };
                sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..n {
                if k == p || k == q {
                    continue;
                }
                let akp = m[(k, p)];
                let akq = m[(k, q)];
                let new_kp = c * akp - s * akq;
                let new_kq = s * akp + c * akq;
                m[(k, p)] = new_kp;
                m[(p, k)] = new_kp;
                m[(k, q)] = new_kq;
                m[(q, k)] = new_kq;
            }
            m[(p, p)] = m[(p, p)] - t * apq;
            m[(q, q)] = m[(q, q)] + t * apq;
            m[(p, q)] = T::zero();
            m[(q, p)] = T::zero();
            for k in 0..n {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
}

fn off_diagonal_norm<T: Real>(m: &SquareMatrix<T>) -> T {
    let n = m.dim();
    let mut acc = T::zero();
    for p in 0..n {
        for q in p + 1..n {
            acc = acc + m[(p, q)] * m[(p, q)];
        }
    }
    (acc + acc).sqrt()
}

/// The unique positive-semidefinite square root `P · diag(√λ) · Pᵀ`.
pub fn pd_sqrt<T: Real>(a: &SquareMatrix<T>) -> Result<SquareMatrix<T>> {
    let spectrum = sym_eigen(a)?;
    check_psd(&spectrum)?;
    Ok(spectrum.compose(|l| l.max(T::zero()).sqrt()))
}

fn check_psd<T: Real>(spectrum: &SpectralDecomposition<T>) -> Result<()> {
    let magnitude = spectrum
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, &l| acc.max(l.abs()));
    let floor = -T::tol(1e-10) * magnitude;
    match spectrum.eigenvalues.iter().find(|&&l| l < floor) {
        Some(&l) => Err(Error::NotPsd { eigenvalue: l.as_f64() }),
        None => Ok(()),
    }
}

/// Orthogonal polar factor of `Z` computed through the spectrum of `Z Zᵀ`.
#[derive(Debug, Clone)]
pub struct PolarRotation<T> {
    /// `P · diag(σᵢ / √λᵢ) · Pᵀ · Z` where every sign `σᵢ` is `+1` unless
    /// the reflection correction fired.
    pub rotation: SquareMatrix<T>,
    /// Sign of `det(Z)`.
    pub det_sign: i8,
    pub reflection_corrected: bool,
    /// Spectrum of `Z Zᵀ`, descending.
    pub spectrum: SpectralDecomposition<T>,
    /// `Tr(√(Z Zᵀ))`.
    pub trace_sqrt: T,
    /// `Tr(Q Zᵀ) = Σ σᵢ √λᵢ`; equals `trace_sqrt` unless corrected.
    pub signed_trace: T,
}

/// Polar factor `Q = (√(Z Zᵀ))⁻¹ Z`.
///
/// With `allow_reflection` off and `det Z < 0`, the eigen-direction of `Z Zᵀ`
/// with the smallest eigenvalue (the last one after the descending sort) is
/// negated before composing, which yields the closest proper rotation.
pub fn polar_rotation<T: Real>(
    z: &SquareMatrix<T>,
    allow_reflection: bool,
    rank_tol: T,
) -> Result<PolarRotation<T>> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = z.dim();
    let zzt = z * &z.transpose();
    let spectrum = sym_eigen(&zzt)?;
    let largest = spectrum.largest();
    let smallest = spectrum.smallest();
    if !(smallest > rank_tol * largest) {
        return Err(Error::RankDeficient { ratio: eigen_ratio(largest, smallest).as_f64() });
    }

    let det_sign: i8 = if z.determinant() < T::zero() { -1 } else { 1 };
    let reflection_corrected = !allow_reflection && det_sign < 0;
    let mut signs = vec![T::one(); n];
    if reflection_corrected {
        signs[n - 1] = -T::one();
    }
    // Rows of Pᵀ Z have norms √λⱼ; measuring them directly avoids the
    // precision lost to forming Z Zᵀ, so P · diag(σ/√λ) · Pᵀ · Z reduces to
    // P · diag(σ) · (Pᵀ Z with unit rows).
    let p = &spectrum.eigenvectors;
    let projected = &p.transpose() * z;
    let roots: Vec<T> = (0..n).map(|j| crate::scalar::norm(projected.row(j))).collect();
    let mut rotation = SquareMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            rotation[(r, c)] = (0..n).fold(T::zero(), |acc, j| {
                acc + p[(r, j)] * (signs[j] / roots[j]) * projected[(j, c)]
            });
        }
    }

    let trace_sqrt = roots.iter().copied().sum();
    let signed_trace = roots.iter().zip(&signs).map(|(&r, &s)| r * s).sum();
    Ok(PolarRotation {
        rotation,
        det_sign,
        reflection_corrected,
        spectrum,
        trace_sqrt,
        signed_trace,
    })
}

/// `λ_min / λ_max`, or zero for the zero matrix.
pub fn eigen_ratio<T: Real>(largest: T, smallest: T) -> T {
    if largest > T::zero() {
        smallest / largest
    } else {
        T::zero()
    }
}
