//! Transmit precoding for a fixed reflect state.
//!
//! MMSE solves the power-minimization problem exactly through the virtual
//! uplink: the dual powers `λ` come from a fixed-point iteration, the
//! directions from the regularized inverse `Σ = I + Σ_j λ_j Q_j`, and the
//! powers from the `(L+1)`-dimensional linear system `Q̄ p = 1`.
//! ZF inverts the low-mobility channels and puts the high-mobility beam in
//! their null space.
//!
//! Index convention: streams `0..L` are the low-mobility users, stream `L`
//! is the common high-mobility stream. Without high-mobility users the last
//! stream has zero power and no constraint.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{
    c64, null_space_basis, principal_eigenvector, principal_generalized_eig, solve_linear,
    CMatrix, CVector, HermitianMatrix, NumericsError,
};

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_SWEEPS: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TxError {
    #[error("dual fixed point did not converge after {sweeps} sweeps (targets likely infeasible)")]
    DualNotConverged { sweeps: usize },
    #[error("SINR targets infeasible: {0}")]
    InfeasibleTargets(String),
    #[error("effective low-mobility channel matrix is rank deficient")]
    RankDeficient,
    #[error("null space of the low-mobility channels is empty")]
    EmptyNullSpace,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransmitMethod {
    Mmse,
    Zf,
}

/// `w_j = √p_j · w̄_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub low_beams: Vec<CVector>,
    pub high_beam: CVector,
    /// `L+1` powers, high-mobility stream last.
    pub powers: Vec<f64>,
}

impl PrecoderSet {
    pub fn from_directions(directions: &[CVector], powers: Vec<f64>) -> Self {
        let mut beams: Vec<CVector> = directions
            .iter()
            .zip(&powers)
            .map(|(d, p)| d * c64(p.max(0.0).sqrt(), 0.0))
            .collect();
        let high_beam = beams.pop().expect("at least the high stream");
        PrecoderSet {
            low_beams: beams,
            high_beam,
            powers,
        }
    }

    /// All `L+1` beams, high-mobility beam last.
    pub fn beams(&self) -> Vec<&CVector> {
        self.low_beams.iter().chain(std::iter::once(&self.high_beam)).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.beams().iter().map(|w| w.norm_squared()).sum()
    }

    pub fn low_count(&self) -> usize {
        self.low_beams.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    /// `Q_l = h̄_l h̄_lᴴ / σ²`.
    pub low: Vec<HermitianMatrix>,
    /// `Q_{L+1} = (I + 2RᴴR) / σ̄²`; `None` without high-mobility users.
    pub high: Option<HermitianMatrix>,
    pub sigma_bar_sq: Option<f64>,
    pub sigma2: f64,
}

impl CorrelationSet {
    pub fn dim(&self) -> usize {
        self.low
            .first()
            .or(self.high.as_ref())
            .map(|q| q.dim())
            .unwrap_or(0)
    }

    fn has_high(&self) -> bool {
        self.high.is_some()
    }

    /// `I + Σ_l λ_l Q_l + λ_{L+1} Q_{L+1}`.
    pub fn regularized(&self, lambdas: &[f64]) -> HermitianMatrix {
        let m = self.dim();
        let mut s = CMatrix::identity(m, m);
        for (q, &l) in self.low.iter().zip(lambdas) {
            s += q.as_matrix() * c64(l, 0.0);
        }
        if let Some(q) = &self.high {
            s += q.as_matrix() * c64(lambdas[self.low.len()], 0.0);
        }
        HermitianMatrix::symmetrized(s)
    }
}

/// `h̄_l` with `h̄_lᴴ = h_lᴴ + e^{iφ} g_lᴴ diag(θ) R` at element level.
pub fn effective_low_channel(
    h_l: &CVector,
    g_l: &CVector,
    theta: &CVector,
    r: &CMatrix,
    phi: f64,
) -> CVector {
    // (g_lᴴ diag(θ) R)ᴴ = Rᴴ diag(θ*) g_l
    let tg = CVector::from_iterator(
        g_l.len(),
        g_l.iter().zip(theta.iter()).map(|(g, t)| g * t.conj()),
    );
    h_l + r.adjoint() * tg * Complex64::from_polar(1.0, -phi)
}

/// `σ̄² = max_k d_k^α σ² / β`, or `None` when there are no high-mobility users.
pub fn sigma_bar_sq(distances: &[f64], alpha: f64, sigma2: f64, beta: f64) -> Option<f64> {
    distances
        .iter()
        .map(|d| d.powf(alpha) * sigma2 / beta)
        .reduce(f64::max)
}

/// Correlation matrices from the effective channels and `I + 2RᴴR`.
pub fn build_correlations(
    effective: &[CVector],
    high_gram: &CMatrix,
    sigma2: f64,
    sigma_bar_sq: Option<f64>,
) -> CorrelationSet {
    let low = effective
        .iter()
        .map(|h| HermitianMatrix::outer(h).scale(1.0 / sigma2))
        .collect();
    let high = sigma_bar_sq.map(|s| HermitianMatrix::symmetrized(high_gram * c64(1.0 / s, 0.0)));
    CorrelationSet {
        low,
        high,
        sigma_bar_sq,
        sigma2,
    }
}

/// `h̄ᴴ Σ⁻¹ h̄ / σ²`, the only nonzero eigenvalue of `Σ⁻¹ Q_l`.
fn low_eig(sigma: &HermitianMatrix, h: &CVector, sigma2: f64) -> Result<f64, TxError> {
    let chol = sigma
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(NumericsError::NotPositiveDefinite)?;
    Ok(h.dotc(&chol.solve(h)).re / sigma2)
}

fn fixed_point_images(
    corr: &CorrelationSet,
    effective: &[CVector],
    targets: &[f64],
    lambdas: &[f64],
) -> Result<Vec<f64>, TxError> {
    let sigma = corr.regularized(lambdas);
    let mut out = Vec::with_capacity(lambdas.len());
    for (l, h) in effective.iter().enumerate() {
        out.push(1.0 / ((1.0 + 1.0 / targets[l]) * low_eig(&sigma, h, corr.sigma2)?));
    }
    if let Some(q) = &corr.high {
        let (mu, _) = principal_generalized_eig(q, &sigma)?;
        out.push(1.0 / ((1.0 + 1.0 / targets[effective.len()]) * mu));
    } else {
        out.push(0.0);
    }
    Ok(out)
}

/// Dual uplink powers from the fixed-point equations, iterated cyclically
/// from `λ = 1`.
///
/// `targets` holds `L+1` values (the last is ignored without high users).
pub fn mmse_fixed_point(
    corr: &CorrelationSet,
    effective: &[CVector],
    targets: &[f64],
) -> Result<DualVariables, TxError> {
    let l = effective.len();
    let mut lambdas = vec![1.0; l + 1];
    if !corr.has_high() {
        lambdas[l] = 0.0;
    }
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for j in 0..=l {
            if j == l && !corr.has_high() {
                continue;
            }
            let sigma = corr.regularized(&lambdas);
            let eig = if j < l {
                low_eig(&sigma, &effective[j], corr.sigma2)?
            } else {
                principal_generalized_eig(corr.high.as_ref().expect("checked"), &sigma)?.0
            };
            let new = 1.0 / ((1.0 + 1.0 / targets[j]) * eig);
            if !new.is_finite() {
                return Err(TxError::DualNotConverged { sweeps: 0 });
            }
            change = change.max((new - lambdas[j]).abs() / new.max(f64::MIN_POSITIVE));
            lambdas[j] = new;
        }
        if change <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(TxError::DualNotConverged {
            sweeps: FIXED_POINT_MAX_SWEEPS,
        });
    }
    let images = fixed_point_images(corr, effective, targets, &lambdas)?;
    let residual = images
        .iter()
        .zip(&lambdas)
        .filter(|(_, &l)| l > 0.0)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL {
        return Err(TxError::DualNotConverged {
            sweeps: FIXED_POINT_MAX_SWEEPS,
        });
    }
    Ok(DualVariables { lambdas })
}

/// Unit-norm MMSE directions; the high-mobility direction is the principal
/// eigenvector of `Σ⁻¹ Q_{L+1}` (zero without high users).
pub fn mmse_directions(
    corr: &CorrelationSet,
    lambdas: &[f64],
    effective: &[CVector],
) -> Result<Vec<CVector>, TxError> {
    let m = corr.dim().max(effective.first().map_or(0, |h| h.len()));
    let sigma = corr.regularized(lambdas);
    let chol = sigma
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(NumericsError::NotPositiveDefinite)?;
    let mut dirs: Vec<CVector> = effective
        .iter()
        .map(|h| {
            let v = chol.solve(h);
            let n = v.norm();
            if n > 0.0 {
                v / c64(n, 0.0)
            } else {
                v
            }
        })
        .collect();
    dirs.push(match &corr.high {
        Some(q) => principal_generalized_eig(q, &sigma)?.1,
        None => CVector::zeros(m),
    });
    Ok(dirs)
}

/// The `Q̄` matrix of the SINR-equality system.
pub fn power_system(
    directions: &[CVector],
    corr: &CorrelationSet,
    effective: &[CVector],
    targets: &[f64],
) -> CMatrix {
    let l = effective.len();
    let n = if corr.has_high() { l + 1 } else { l };
    let s2 = corr.sigma2;
    CMatrix::from_fn(n, n, |i, j| {
        let v = if i < l {
            let g = effective[i].dotc(&directions[j]).norm_sqr() / s2;
            if i == j {
                g / targets[i]
            } else {
                -g
            }
        } else {
            let q = corr.high.as_ref().expect("row exists only with high users");
            let g = q.quad_form(&directions[j]);
            if j == l {
                g / targets[l]
            } else {
                -g
            }
        };
        c64(v, 0.0)
    })
}

/// `p = Q̄⁻¹ 1`, rejecting nonpositive powers.
pub fn mmse_power_allocation(
    directions: &[CVector],
    corr: &CorrelationSet,
    effective: &[CVector],
    targets: &[f64],
) -> Result<PrecoderSet, TxError> {
    let l = effective.len();
    let qbar = power_system(directions, corr, effective, targets);
    let n = qbar.nrows();
    let p = solve_linear(&qbar, &CMatrix::from_element(n, 1, c64(1.0, 0.0))).map_err(|e| match e {
        NumericsError::IllConditioned(c) => {
            TxError::InfeasibleTargets(format!("power system singular (condition {c:.2e})"))
        }
        other => TxError::Numerics(other),
    })?;
    let mut powers: Vec<f64> = p.iter().map(|z| z.re).collect();
    if let Some((j, v)) = powers.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(TxError::InfeasibleTargets(format!("stream {j} needs power {v:.3e}")));
    }
    if powers.len() == l {
        powers.push(0.0);
    }
    Ok(PrecoderSet::from_directions(directions, powers))
}

/// Fixed point, directions and powers in one call.
pub fn mmse_precode(
    corr: &CorrelationSet,
    effective: &[CVector],
    targets: &[f64],
) -> Result<(PrecoderSet, DualVariables), TxError> {
    let duals = mmse_fixed_point(corr, effective, targets)?;
    let dirs = mmse_directions(corr, &duals.lambdas, effective)?;
    let set = mmse_power_allocation(&dirs, corr, effective, targets)?;
    Ok((set, duals))
}

/// Stacked `H̄ = [h̄_1, …, h̄_L]` (M×L).
pub fn stack_channels(effective: &[CVector], m: usize) -> CMatrix {
    let mut h = CMatrix::zeros(m, effective.len());
    for (j, v) in effective.iter().enumerate() {
        h.set_column(j, v);
    }
    h
}

/// `W = H̄ (H̄ᴴ H̄)⁻¹ diag(√(γ_l σ²))`.
pub fn zf_precode(
    effective: &[CVector],
    targets_low: &[f64],
    sigma2: f64,
) -> Result<Vec<CVector>, TxError> {
    let Some(first) = effective.first() else {
        return Ok(Vec::new());
    };
    let m = first.len();
    let l = effective.len();
    if l > m {
        return Err(TxError::RankDeficient);
    }
    let hbar = stack_channels(effective, m);
    let gram = hbar.adjoint() * &hbar;
    let pbar = CMatrix::from_fn(l, l, |i, j| {
        if i == j {
            c64((targets_low[i] * sigma2).sqrt(), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let x = solve_linear(&gram, &pbar).map_err(|e| match e {
        NumericsError::IllConditioned(_) => TxError::RankDeficient,
        other => TxError::Numerics(other),
    })?;
    let w = hbar * x;
    Ok((0..l).map(|j| w.column(j).into_owned()).collect())
}

/// Orthonormal null-space basis of `H̄ᴴ` (identity when L = 0).
pub fn low_null_space(effective: &[CVector], m: usize) -> Result<CMatrix, TxError> {
    let hh = stack_channels(effective, m).adjoint();
    null_space_basis(&hh).map_err(|e| match e {
        NumericsError::EmptyNullSpace => TxError::EmptyNullSpace,
        other => TxError::Numerics(other),
    })
}

/// High-mobility beam `F v̄ √p` meeting the average-SINR target with equality.
pub fn null_space_high_beam(
    f: &CMatrix,
    high_gram: &CMatrix,
    zf_beams: &[CVector],
    gamma_high: f64,
    sigma_bar_sq: f64,
) -> Result<(CVector, f64), TxError> {
    if f.ncols() == 0 {
        return Err(TxError::EmptyNullSpace);
    }
    let reduced = HermitianMatrix::symmetrized(f.adjoint() * high_gram * f);
    let (mu, v) = principal_eigenvector(&reduced)?;
    let interference: f64 = zf_beams.iter().map(|w| w.dotc(&(high_gram * w)).re).sum();
    let p = gamma_high * (interference + sigma_bar_sq) / mu;
    Ok((f * v * c64(p.sqrt(), 0.0), p))
}

/// ZF low beams plus the null-space high beam.
pub fn zf_null_space_precode(
    effective: &[CVector],
    m: usize,
    high_gram: &CMatrix,
    targets: &[f64],
    sigma2: f64,
    sigma_bar_sq: Option<f64>,
) -> Result<PrecoderSet, TxError> {
    let l = effective.len();
    let low = zf_precode(effective, &targets[..l], sigma2)?;
    let mut powers: Vec<f64> = low.iter().map(|w| w.norm_squared()).collect();
    let high = match sigma_bar_sq {
        Some(sb) => {
            let f = low_null_space(effective, m)?;
            let (w, p) = null_space_high_beam(&f, high_gram, &low, targets[l], sb)?;
            powers.push(p);
            w
        }
        None => {
            powers.push(0.0);
            CVector::zeros(m)
        }
    };
    Ok(PrecoderSet {
        low_beams: low,
        high_beam: high,
        powers,
    })
}

/// Low-mobility SINR of stream `l` under effective channels `h̄`.
pub fn low_sinr(set: &PrecoderSet, effective: &[CVector], l: usize, sigma2: f64) -> f64 {
    let h = &effective[l];
    let beams = set.beams();
    let signal = h.dotc(beams[l]).norm_sqr();
    let interf: f64 = beams
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != l)
        .map(|(_, w)| h.dotc(w).norm_sqr())
        .sum();
    signal / (interf + sigma2)
}

/// Average high-mobility SINR in the reduced `σ̄²` form.
pub fn high_sinr(set: &PrecoderSet, high_gram: &CMatrix, sigma_bar_sq: f64) -> f64 {
    let q = |w: &CVector| w.dotc(&(high_gram * w)).re;
    q(&set.high_beam) / (set.low_beams.iter().map(q).sum::<f64>() + sigma_bar_sq)
}

/// `min_j SINR_j / γ_j` over every constrained stream.
pub fn min_margin(
    set: &PrecoderSet,
    effective: &[CVector],
    high_gram: &CMatrix,
    targets: &[f64],
    sigma2: f64,
    sigma_bar_sq: Option<f64>,
) -> f64 {
    let l = effective.len();
    let mut m = (0..l)
        .map(|i| low_sinr(set, effective, i, sigma2) / targets[i])
        .fold(f64::INFINITY, f64::min);
    if let Some(sb) = sigma_bar_sq {
        m = m.min(high_sinr(set, high_gram, sb) / targets[l]);
    }
    m
}
