use nalgebra::{DVector, SymmetricEigen};

use super::{all_finite, c64, CMatrix, CVector, HermitianMatrix, NumericsError};

/// Singular values below `RANK_TOLERANCE * σ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

const MAX_CONDITION: f64 = 1e12;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn principal(&self) -> CVector {
        self.vectors.column(0).into_owned()
    }
}

/// Rotates `v` so that its largest-magnitude entry (first one on ties) is real
/// and nonnegative.
fn normalize_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let rot = v[best].conj() / best_abs;
        v.apply(|z| *z *= rot);
    }
}

pub fn hermitian_eig(m: &HermitianMatrix) -> Result<HermitianEigen, NumericsError> {
    let a = m.as_matrix();
    if !all_finite(a) {
        return Err(NumericsError::InvalidInput("non-finite entry".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: DVector::zeros(0),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: CVector = eig.eigenvectors.column(src).into_owned();
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= c64(nrm, 0.0);
        }
        normalize_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Unit-norm eigenvector for the largest eigenvalue, plus that eigenvalue.
pub fn principal_eigenvector(m: &HermitianMatrix) -> Result<(f64, CVector), NumericsError> {
    let e = hermitian_eig(m)?;
    if e.values.is_empty() {
        return Err(NumericsError::InvalidInput("empty matrix".into()));
    }
    Ok((e.values[0], e.principal()))
}

/// Largest eigenpair of `s⁻¹ q` for Hermitian `q` and positive definite `s`.
///
/// Solved as the Hermitian problem `L⁻¹ q L⁻ᴴ` with `s = L Lᴴ`; the returned
/// eigenvector is unit-norm and phase-normalized.
pub fn principal_generalized_eig(
    q: &HermitianMatrix,
    s: &HermitianMatrix,
) -> Result<(f64, CVector), NumericsError> {
    let chol = s
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(NumericsError::NotPositiveDefinite)?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(NumericsError::NotPositiveDefinite)?;
    let reduced = HermitianMatrix::symmetrized(&linv * q.as_matrix() * linv.adjoint());
    let (mu, u) = principal_eigenvector(&reduced)?;
    let mut v = linv.adjoint() * u;
    let nrm = v.norm();
    if nrm > 0.0 {
        v /= c64(nrm, 0.0);
    }
    normalize_phase(&mut v);
    Ok((mu, v))
}

/// Orthonormal basis (as columns) of the null space of `m`.
///
/// The rank is the count of singular values above `RANK_TOLERANCE · σ_max`;
/// the basis spans the orthogonal complement of the corresponding right
/// singular vectors.
pub fn null_space_basis(m: &CMatrix) -> Result<CMatrix, NumericsError> {
    if !all_finite(m) {
        return Err(NumericsError::InvalidInput("non-finite entry".into()));
    }
    let cols = m.ncols();
    if cols == 0 {
        return Err(NumericsError::EmptyNullSpace);
    }
    let row_space = if m.nrows() == 0 {
        CMatrix::zeros(cols, 0)
    } else {
        let svd = m.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested v_t");
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| sigma_max > 0.0 && svd.singular_values[i] > RANK_TOLERANCE * sigma_max)
            .collect();
        let mut basis = CMatrix::zeros(cols, keep.len());
        for (k, &i) in keep.iter().enumerate() {
            basis.set_column(k, &v_t.row(i).adjoint());
        }
        basis
    };
    let rank = row_space.ncols();
    if rank >= cols {
        return Err(NumericsError::EmptyNullSpace);
    }
    // Projector onto the complement has eigenvalues exactly 0 (rank times)
    // and 1 (cols - rank times).
    let projector =
        CMatrix::identity(cols, cols) - &row_space * row_space.adjoint();
    let eig = hermitian_eig(&HermitianMatrix::symmetrized(projector))?;
    Ok(eig.vectors.columns(0, cols - rank).into_owned())
}

/// Solves `a x = b` by LU, rejecting systems with condition number above 1e12.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::InvalidInput(format!(
            "system matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != a.nrows() {
        return Err(NumericsError::InvalidInput(format!(
            "right-hand side has {} rows, expected {}",
            b.nrows(),
            a.nrows()
        )));
    }
    if !all_finite(a) || !all_finite(b) {
        return Err(NumericsError::InvalidInput("non-finite entry".into()));
    }
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(NumericsError::IllConditioned(if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(NumericsError::IllConditioned(f64::INFINITY))
}
