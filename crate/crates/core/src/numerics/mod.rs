//! Dense complex linear algebra and a small semidefinite-program solver.
//!
//! Matrices are plain `nalgebra` dynamic matrices over `Complex64`; the only
//! extra type is [`HermitianMatrix`], which carries the conjugate-symmetry
//! invariant. Everything in here is a pure function of its inputs.

mod linalg;
mod sdp;

pub use linalg::{
    hermitian_eig, null_space_basis, principal_eigenvector, principal_generalized_eig,
    solve_linear, HermitianEigen, RANK_TOLERANCE,
};
pub use sdp::{
    solve_sdp, solve_sdp_with, ConstraintSense, SdpConstraint, SdpProblem, SdpSettings,
    SdpSolution, SdpStatus, SlackDomain,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix; vectors are the single-column case.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Shorthand for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit-modulus complex number at angle `phase` (radians).
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("null space is empty")]
    EmptyNullSpace,
    #[error("matrix is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Hermitian matrix: `m[(i, j)] == conj(m[(j, i)])`, real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking conjugate symmetry to a relative 1e-10 and
    /// finiteness. The stored matrix is exactly symmetrized.
    pub fn new(m: CMatrix) -> Result<Self, NumericsError> {
        if !m.is_square() {
            return Err(NumericsError::InvalidInput(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(&m) {
            return Err(NumericsError::InvalidInput("non-finite entry".into()));
        }
        let adj = m.adjoint();
        let scale = 1.0 + m.norm();
        if (&m - &adj).norm() > 1e-10 * scale {
            return Err(NumericsError::InvalidInput(
                "matrix is not conjugate symmetric".into(),
            ));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(m + mᴴ) / 2`, with no symmetry check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        let mut h = (m + adj) * c64(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        HermitianMatrix(h)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    /// Rank-one `v vᴴ`.
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c64(x, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `tr(self · other)` for Hermitian `other`; always real.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// `vᴴ · self · v`, real for Hermitian `self`.
    pub fn quad_form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * c64(s, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }
}

pub(crate) fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}
