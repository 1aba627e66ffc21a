//! Reflect-precoding subproblem: with the transmit beams fixed, the low-user
//! SINR constraints are quadratic in the group phases. The phases are lifted
//! to `θ̃ = (θ̄, t)` and `Θ̃ = θ̃θ̃ᴴ`, the rank-one constraint is dropped, and
//! a unit-modulus point is recovered by Gaussian randomization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::channel::Grouping;
use crate::numerics::{
    c64, hermitian_eig, solve_sdp, CMatrix, CVector, ConstraintSense, HermitianMatrix,
    NumericsError, SdpConstraint, SdpProblem, SdpSolution, SdpStatus, SlackDomain,
};
use crate::txprecode::PrecoderSet;

pub const DEFAULT_RANDOMIZATIONS: usize = 1000;
const RANK_ONE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReflectError {
    #[error("no reflect phases satisfy the relaxed constraints for the current beams")]
    Infeasible,
    #[error("reflect SDP reported an unbounded objective")]
    Unbounded,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Group phases `θ̄` plus the common phase `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectState {
    pub group_phases: CVector,
    pub common_phase: f64,
}

impl ReflectState {
    pub fn all_ones(groups: usize) -> Self {
        ReflectState {
            group_phases: CVector::from_element(groups, c64(1.0, 0.0)),
            common_phase: 0.0,
        }
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        ReflectState {
            group_phases: CVector::from_iterator(angles.len(), angles.iter().map(|&a| Complex64::cis(a))),
            common_phase: 0.0,
        }
    }

    pub fn groups(&self) -> usize {
        self.group_phases.len()
    }

    /// Element-level `θ = θ̄` expanded over the grouping.
    pub fn element_phases(&self, grouping: &Grouping) -> CVector {
        grouping.expand(&self.group_phases)
    }
}

/// Per-group cascade `C` (N_g×M) of the reflected link to one user:
/// row `gr` is `Σ_{n∈gr} g[n]* R[n,:]`, so that
/// `g_lᴴ diag(θ) R = θ̄ᵀ C` whenever `θ` is constant on each group.
pub fn group_lift(r: &CMatrix, g: &CVector, grouping: &Grouping) -> CMatrix {
    let mut c = CMatrix::zeros(grouping.group_count(), r.ncols());
    for (n, &gr) in grouping.group_of.iter().enumerate() {
        let gn = g[n].conj();
        for m in 0..r.ncols() {
            c[(gr, m)] += gn * r[(n, m)];
        }
    }
    c
}

/// Group-level `h̄_l = h_l + e^{-iφ} Cᴴ θ̄*`.
pub fn grouped_effective_channel(
    h: &CVector,
    cascade: &CMatrix,
    theta_bar: &CVector,
    phi: f64,
) -> CVector {
    h + cascade.adjoint() * theta_bar.map(|t| t.conj()) * Complex64::cis(-phi)
}

/// Coefficients of the relaxed reflect problem at fixed beams.
#[derive(Debug, Clone)]
pub struct SdrInstance {
    /// `a[l][j]` with `a*_{l,j} = h_lᴴ w_j`.
    pub a: Vec<Vec<Complex64>>,
    /// `b[l][j]` with `b_{l,j}ᴴ θ̄ = e^{iφ} θ̄ᵀ C_l w_j`.
    pub b: Vec<Vec<CVector>>,
    pub b_matrices: Vec<Vec<HermitianMatrix>>,
    pub targets: Vec<f64>,
    pub sigma2: f64,
}

/// `[[b bᴴ, a* b], [a bᴴ, 0]]`.
pub fn lifted_block(a: Complex64, b: &CVector) -> HermitianMatrix {
    let n = b.len();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(b * b.adjoint()));
    for i in 0..n {
        m[(i, n)] = a.conj() * b[i];
        m[(n, i)] = a * b[i].conj();
    }
    HermitianMatrix::symmetrized(m)
}

pub fn build_sdr(
    precoders: &PrecoderSet,
    direct_low: &[CVector],
    cascades: &[CMatrix],
    phi: f64,
    targets_low: &[f64],
    sigma2: f64,
) -> SdrInstance {
    let beams = precoders.beams();
    let rot = Complex64::cis(phi);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut mats = Vec::new();
    for (h, c) in direct_low.iter().zip(cascades) {
        let al: Vec<Complex64> = beams.iter().map(|w| h.dotc(w).conj()).collect();
        let bl: Vec<CVector> = beams
            .iter()
            .map(|w| (c * *w * rot).map(|z| z.conj()))
            .collect();
        mats.push(al.iter().zip(&bl).map(|(&x, y)| lifted_block(x, y)).collect());
        a.push(al);
        b.push(bl);
    }
    SdrInstance {
        a,
        b,
        b_matrices: mats,
        targets: targets_low.to_vec(),
        sigma2,
    }
}

impl SdrInstance {
    pub fn low_count(&self) -> usize {
        self.a.len()
    }

    pub fn groups(&self) -> usize {
        self.b.first().and_then(|r| r.first()).map_or(0, |v| v.len())
    }

    /// `b_{l,j}ᴴ θ̄ + a*_{l,j}`, the amplitude of beam `j` at user `l`.
    pub fn amplitude(&self, l: usize, j: usize, theta_bar: &CVector) -> Complex64 {
        self.b[l][j].dotc(theta_bar) + self.a[l][j].conj()
    }

    /// SINR of low user `l` at unit-modulus `θ̄`.
    pub fn sinr(&self, l: usize, theta_bar: &CVector) -> f64 {
        let mut signal = 0.0;
        let mut interf = 0.0;
        for j in 0..self.a[l].len() {
            let p = self.amplitude(l, j, theta_bar).norm_sqr();
            if j == l {
                signal = p;
            } else {
                interf += p;
            }
        }
        signal / (interf + self.sigma2)
    }

    /// `min_l SINR_l / γ_l`.
    pub fn min_margin(&self, theta_bar: &CVector) -> f64 {
        (0..self.low_count())
            .map(|l| self.sinr(l, theta_bar) / self.targets[l])
            .fold(f64::INFINITY, f64::min)
    }

    /// SINR residual `c_l` of each user at a rank-one point.
    pub fn residuals(&self, theta_bar: &CVector) -> Vec<f64> {
        (0..self.low_count())
            .map(|l| {
                let mut signal = 0.0;
                let mut interf = 0.0;
                for j in 0..self.a[l].len() {
                    let p = self.amplitude(l, j, theta_bar).norm_sqr();
                    if j == l {
                        signal = p;
                    } else {
                        interf += p;
                    }
                }
                signal - self.targets[l] * (interf + self.sigma2)
            })
            .collect()
    }

    /// The relaxed program. Rows are divided by `σ²`, so the slacks are
    /// `c_l / σ²`.
    pub fn to_problem(&self) -> SdpProblem {
        let l_count = self.low_count();
        let dim = self.groups() + 1;
        let s2 = self.sigma2;
        let constraints = (0..l_count)
            .map(|l| {
                let gamma = self.targets[l];
                let mut m = CMatrix::zeros(dim, dim);
                let mut rhs = gamma * s2;
                for (j, bm) in self.b_matrices[l].iter().enumerate() {
                    let p = self.a[l][j].norm_sqr();
                    if j == l {
                        m += bm.as_matrix();
                        rhs -= p;
                    } else {
                        m -= bm.as_matrix() * c64(gamma, 0.0);
                        rhs += gamma * p;
                    }
                }
                let mut coeffs = vec![0.0; l_count];
                coeffs[l] = -1.0;
                SdpConstraint {
                    matrix: Some(HermitianMatrix::symmetrized(m * c64(1.0 / s2, 0.0))),
                    slack_coeffs: coeffs,
                    sense: ConstraintSense::AtLeast,
                    offset: rhs / s2,
                }
            })
            .collect();
        SdpProblem {
            dimension: dim,
            objective_weights: vec![1.0; l_count],
            slack_domains: vec![SlackDomain::Nonnegative; l_count],
            constraints,
            unit_diagonal: true,
        }
    }
}

/// Solve the relaxation; `slacks` in the result are rescaled to `c_l`.
pub fn solve_reflect(instance: &SdrInstance) -> Result<SdpSolution, ReflectError> {
    let mut sol = solve_sdp(&instance.to_problem())?;
    match sol.status {
        SdpStatus::Infeasible => return Err(ReflectError::Infeasible),
        SdpStatus::Unbounded => return Err(ReflectError::Unbounded),
        _ => {}
    }
    for c in sol.slacks.iter_mut() {
        *c *= instance.sigma2;
    }
    Ok(sol)
}

/// Project each entry to the unit circle and de-rotate by the last one.
pub fn project_lifted(v: &CVector) -> CVector {
    let n = v.len() - 1;
    let unit = |z: Complex64| {
        let a = z.norm();
        if a > 0.0 {
            z / a
        } else {
            c64(1.0, 0.0)
        }
    };
    let t = unit(v[n]).conj();
    CVector::from_iterator(n, v.iter().take(n).map(|&z| unit(z) * t))
}

/// Outcome of randomization; `margin < 1` flags an infeasible pick.
#[derive(Debug, Clone)]
pub struct Randomized {
    pub state: ReflectState,
    pub margin: f64,
    pub exact: bool,
}

/// Best of `count` Gaussian draws with covariance `Θ̃` (plus the principal
/// eigenvector), ranked by minimum SINR margin.
pub fn gaussian_randomize<R: Rng + ?Sized>(
    sol: &SdpSolution,
    instance: &SdrInstance,
    count: usize,
    phi: f64,
    rng: &mut R,
) -> Result<Randomized, ReflectError> {
    let eig = hermitian_eig(&sol.matrix)?;
    let top = eig.values.iter().cloned().fold(0.0, f64::max);
    let rest: f64 = eig.values.iter().filter(|&&v| v > 0.0).sum::<f64>() - top;
    let principal = eig.principal();
    let pick = |theta: CVector, exact: bool| Randomized {
        margin: instance.min_margin(&theta),
        state: ReflectState {
            group_phases: theta,
            common_phase: phi,
        },
        exact,
    };
    if rest <= RANK_ONE_TOL * top.max(f64::MIN_POSITIVE) {
        return Ok(pick(project_lifted(&principal), true));
    }
    // Θ̃ = U Λ Uᴴ, so U Λ^{1/2} z with z ~ CN(0, I) has covariance Θ̃.
    let n = sol.matrix.dim();
    let factor = CMatrix::from_fn(n, n, |i, k| eig.vectors[(i, k)] * eig.values[k].max(0.0).sqrt());
    let mut best = pick(project_lifted(&principal), false);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..count {
        let z = CVector::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c64(re * s, im * s)
        });
        let cand = pick(project_lifted(&(&factor * z)), false);
        if cand.margin > best.margin {
            best = cand;
        }
    }
    Ok(best)
}
