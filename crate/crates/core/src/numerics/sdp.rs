//! Dense primal-dual interior-point solver for small complex SDPs.
//!
//! The user-facing problem has one Hermitian PSD variable `Θ` (optionally
//! with unit diagonal) and a handful of scalar slack variables:
//!
//! ```text
//! maximize    Σ_k w_k s_k
//! subject to  tr(A_i Θ) + Σ_k a_ik s_k  {≥, ≤, =}  b_i
//!             Θ ⪰ 0,  [Θ]_nn = 1 (optional),  s_k ≥ 0 or free
//! ```
//!
//! Internally `Θ` is replaced by the real symmetric embedding
//! `Y = [[Re Θ, -Im Θ], [Im Θ, Re Θ]]` (so `tr(AΘ) = ½⟨A_emb, Y⟩`), slacks
//! and surplus variables go into a nonnegative LP block, and the resulting
//! standard-form problem `min ⟨C, X⟩ s.t. 𝒜(X) = b, X ⪰ 0` is solved with an
//! infeasible-start path-following method using the HKM search direction and
//! a Mehrotra predictor-corrector step.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{c64, CMatrix, HermitianMatrix, NumericsError};

const MAX_DIMENSION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    AtLeast,
    AtMost,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackDomain {
    Free,
    Nonnegative,
}

/// `tr(matrix · Θ) + Σ_k slack_coeffs[k] · s_k  (sense)  offset`.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    /// `None` stands for the zero matrix.
    pub matrix: Option<HermitianMatrix>,
    pub slack_coeffs: Vec<f64>,
    pub sense: ConstraintSense,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dimension: usize,
    /// Maximized objective `Σ_k w_k s_k`.
    pub objective_weights: Vec<f64>,
    pub slack_domains: Vec<SlackDomain>,
    pub constraints: Vec<SdpConstraint>,
    pub unit_diagonal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub matrix: HermitianMatrix,
    pub slacks: Vec<f64>,
    /// Maximized objective at the returned point.
    pub primal_objective: f64,
    /// Dual bound; equals `primal_objective` at optimality.
    pub dual_objective: f64,
    pub duality_gap: f64,
    /// Largest constraint violation, relative to `1 + |offset|`.
    pub primal_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Threshold for the normalized infeasibility certificates.
    pub certificate_tolerance: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 120,
            certificate_tolerance: 1e-8,
        }
    }
}

pub fn solve_sdp(problem: &SdpProblem) -> Result<SdpSolution, NumericsError> {
    solve_sdp_with(problem, &SdpSettings::default())
}

pub fn solve_sdp_with(
    problem: &SdpProblem,
    settings: &SdpSettings,
) -> Result<SdpSolution, NumericsError> {
    validate(problem)?;
    let std = StandardForm::build(problem);
    let out = std.solve(settings);
    Ok(std.recover(problem, out))
}

fn validate(p: &SdpProblem) -> Result<(), NumericsError> {
    let bad = |msg: String| Err(NumericsError::InvalidInput(msg));
    if p.dimension == 0 || p.dimension > MAX_DIMENSION {
        return bad(format!("SDP dimension {} outside 1..={MAX_DIMENSION}", p.dimension));
    }
    let ns = p.slack_domains.len();
    if p.objective_weights.len() != ns {
        return bad("objective weight count differs from slack count".into());
    }
    if p.objective_weights.iter().any(|w| !w.is_finite()) {
        return bad("non-finite objective weight".into());
    }
    for (i, c) in p.constraints.iter().enumerate() {
        if c.slack_coeffs.len() != ns {
            return bad(format!("constraint {i}: slack coefficient count mismatch"));
        }
        if !c.offset.is_finite() || c.slack_coeffs.iter().any(|a| !a.is_finite()) {
            return bad(format!("constraint {i}: non-finite data"));
        }
        if let Some(m) = &c.matrix {
            if m.dim() != p.dimension {
                return bad(format!("constraint {i}: matrix dimension {}", m.dim()));
            }
            if !super::all_finite(m.as_matrix()) {
                return bad(format!("constraint {i}: non-finite matrix entry"));
            }
        }
    }
    Ok(())
}

/// Symmetric coefficient block of one constraint row.
#[derive(Debug, Clone)]
enum Block {
    Zero,
    /// Entries `(r, c, v)`; off-diagonal entries are listed in both orders.
    Sparse(Vec<(usize, usize, f64)>),
    Dense(DMatrix<f64>),
}

impl Block {
    fn inner(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            Block::Zero => 0.0,
            Block::Sparse(e) => e.iter().map(|&(r, c, v)| v * x[(r, c)]).sum(),
            Block::Dense(a) => a.dot(x),
        }
    }

    fn add_scaled_to(&self, out: &mut DMatrix<f64>, s: f64) {
        match self {
            Block::Zero => {}
            Block::Sparse(e) => {
                for &(r, c, v) in e {
                    out[(r, c)] += s * v;
                }
            }
            Block::Dense(a) => *out += a * s,
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Block::Zero => 0.0,
            Block::Sparse(e) => e.iter().map(|&(_, _, v)| v * v).sum(),
            Block::Dense(a) => a.norm_squared(),
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            Block::Zero => {}
            Block::Sparse(e) => e.iter_mut().for_each(|t| t.2 *= s),
            Block::Dense(a) => *a *= s,
        }
    }

    /// `zinv · self · x`.
    fn sandwich(&self, zinv: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        match self {
            Block::Zero => DMatrix::zeros(n, n),
            Block::Sparse(e) => {
                let mut g = DMatrix::zeros(n, n);
                for &(r, c, v) in e {
                    g.ger(v, &zinv.column(r), &x.row(c).transpose(), 1.0);
                }
                g
            }
            Block::Dense(a) => zinv * a * x,
        }
    }
}

#[derive(Debug, Clone)]
struct Row {
    psd: Block,
    lin: Vec<(usize, f64)>,
    rhs: f64,
}

impl Row {
    fn apply(&self, xs: &DMatrix<f64>, xl: &DVector<f64>) -> f64 {
        self.psd.inner(xs) + self.lin.iter().map(|&(k, v)| v * xl[k]).sum::<f64>()
    }
}

/// Index of the LP variables carrying a user slack.
#[derive(Debug, Clone, Copy)]
struct SlackVars {
    pos: usize,
    neg: Option<usize>,
}

struct StandardForm {
    n: usize,
    ns: usize,
    nl: usize,
    rows: Vec<Row>,
    c_lin: DVector<f64>,
    slack_vars: Vec<SlackVars>,
    /// Per user constraint, the row index in `rows`.
    constraint_rows: Vec<usize>,
}

struct Iterate {
    xs: DMatrix<f64>,
    xl: DVector<f64>,
    y: DVector<f64>,
    zs: DMatrix<f64>,
    zl: DVector<f64>,
}

struct SolveOutcome {
    it: Iterate,
    iterations: usize,
    status: SdpStatus,
}

fn embed(m: &CMatrix, scale: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = scale * z.re;
            out[(i + n, j + n)] = scale * z.re;
            out[(i + n, j)] = scale * z.im;
            out[(i, j + n)] = -scale * z.im;
        }
    }
    out
}

impl StandardForm {
    fn build(p: &SdpProblem) -> Self {
        let n = p.dimension;
        let ns = 2 * n;
        let mut nl = 0;
        let mut c_lin = Vec::new();
        let mut slack_vars = Vec::with_capacity(p.slack_domains.len());
        for (k, dom) in p.slack_domains.iter().enumerate() {
            let w = p.objective_weights[k];
            let pos = nl;
            nl += 1;
            c_lin.push(-w);
            let neg = match dom {
                SlackDomain::Nonnegative => None,
                SlackDomain::Free => {
                    nl += 1;
                    c_lin.push(w);
                    Some(pos + 1)
                }
            };
            slack_vars.push(SlackVars { pos, neg });
        }

        let mut rows = Vec::new();
        if p.unit_diagonal {
            for k in 0..n {
                rows.push(Row {
                    psd: Block::Sparse(vec![(k, k, 0.5), (k + n, k + n, 0.5)]),
                    lin: Vec::new(),
                    rhs: 1.0,
                });
            }
        }
        let mut constraint_rows = Vec::with_capacity(p.constraints.len());
        for c in &p.constraints {
            let psd = match &c.matrix {
                Some(m) if m.as_matrix().iter().any(|z| z.norm() > 0.0) => {
                    Block::Dense(embed(m.as_matrix(), 0.5))
                }
                _ => Block::Zero,
            };
            let mut lin = Vec::new();
            for (k, &a) in c.slack_coeffs.iter().enumerate() {
                if a != 0.0 {
                    let sv = slack_vars[k];
                    lin.push((sv.pos, a));
                    if let Some(neg) = sv.neg {
                        lin.push((neg, -a));
                    }
                }
            }
            match c.sense {
                ConstraintSense::AtLeast => {
                    lin.push((nl, -1.0));
                    nl += 1;
                    c_lin.push(0.0);
                }
                ConstraintSense::AtMost => {
                    lin.push((nl, 1.0));
                    nl += 1;
                    c_lin.push(0.0);
                }
                ConstraintSense::Equal => {}
            }
            constraint_rows.push(rows.len());
            rows.push(Row {
                psd,
                lin,
                rhs: c.offset,
            });
        }

        // Unit-norm rows; the problem is unchanged, the Schur matrix is
        // better conditioned.
        for row in &mut rows {
            let nrm = (row.psd.norm_sq() + row.lin.iter().map(|t| t.1 * t.1).sum::<f64>()).sqrt();
            if nrm > 0.0 {
                let s = 1.0 / nrm;
                row.psd.scale(s);
                row.lin.iter_mut().for_each(|t| t.1 *= s);
                row.rhs *= s;
            }
        }

        StandardForm {
            n,
            ns,
            nl,
            rows,
            c_lin: DVector::from_vec(c_lin),
            slack_vars,
            constraint_rows,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn a_op(&self, xs: &DMatrix<f64>, xl: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.apply(xs, xl)))
    }

    fn a_adj(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut s = DMatrix::zeros(self.ns, self.ns);
        let mut l = DVector::zeros(self.nl);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            row.psd.add_scaled_to(&mut s, yi);
            for &(k, v) in &row.lin {
                l[k] += yi * v;
            }
        }
        (s, l)
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.rhs))
    }

    fn schur(&self, zinv: &DMatrix<f64>, it: &Iterate) -> DMatrix<f64> {
        let m = self.m();
        let mut mat = DMatrix::zeros(m, m);
        let ratio: DVector<f64> = it.xl.component_div(&it.zl);
        // Dense columns: G_j = Z⁻¹ A_j X, then M_ij = ⟨A_i, G_j⟩.
        for j in 0..m {
            if let Block::Dense(_) = self.rows[j].psd {
                let g = self.rows[j].psd.sandwich(zinv, &it.xs);
                for i in 0..m {
                    let v = self.rows[i].psd.inner(&g.transpose());
                    mat[(i, j)] = v;
                    mat[(j, i)] = v;
                }
            }
        }
        for i in 0..m {
            let Block::Sparse(ei) = &self.rows[i].psd else { continue };
            for j in 0..=i {
                let Block::Sparse(ej) = &self.rows[j].psd else { continue };
                let mut v = 0.0;
                for &(a, b, u) in ei {
                    for &(c, d, w) in ej {
                        v += u * w * zinv[(b, c)] * it.xs[(d, a)];
                    }
                }
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        for i in 0..m {
            for j in 0..=i {
                let mut v = 0.0;
                for &(k, a) in &self.rows[i].lin {
                    for &(k2, b) in &self.rows[j].lin {
                        if k == k2 {
                            v += a * b * ratio[k];
                        }
                    }
                }
                if v != 0.0 {
                    mat[(i, j)] += v;
                    if i != j {
                        mat[(j, i)] += v;
                    }
                }
            }
        }
        mat
    }

    fn initial(&self) -> Iterate {
        let dim = (self.ns + self.nl) as f64;
        let b = self.rhs();
        let mut xi: f64 = 10.0f64.max(dim.sqrt());
        for (row, bi) in self.rows.iter().zip(b.iter()) {
            let an = (row.psd.norm_sq() + row.lin.iter().map(|t| t.1 * t.1).sum::<f64>()).sqrt();
            xi = xi.max(dim * (1.0 + bi.abs()) / (1.0 + an));
        }
        let eta = 10.0f64.max(dim.sqrt()).max(self.c_lin.norm());
        Iterate {
            xs: DMatrix::identity(self.ns, self.ns) * xi,
            xl: DVector::from_element(self.nl, xi),
            y: DVector::zeros(self.m()),
            zs: DMatrix::identity(self.ns, self.ns) * eta,
            zl: DVector::from_element(self.nl, eta),
        }
    }

    fn solve(&self, settings: &SdpSettings) -> SolveOutcome {
        let b = self.rhs();
        let b_norm = b.norm();
        let c_norm = self.c_lin.norm();
        let total = (self.ns + self.nl) as f64;
        let mut it = self.initial();
        let mut best: Option<(f64, Iterate)> = None;
        let mut stalled = 0;
        // Smallest certificate ratios seen, for a relaxed verdict when the
        // iteration breaks down before reaching the strict threshold.
        let mut infeas_ratio = f64::INFINITY;
        let mut unbdd_ratio = f64::INFINITY;

        for iter in 0..settings.max_iterations {
            let ax = self.a_op(&it.xs, &it.xl);
            let rp = &b - &ax;
            let (aty_s, aty_l) = self.a_adj(&it.y);
            let rd_s = -(&aty_s + &it.zs);
            let rd_l = &self.c_lin - &aty_l - &it.zl;
            let pobj = self.c_lin.dot(&it.xl);
            let dobj = b.dot(&it.y);
            let mu = (it.xs.dot(&it.zs) + it.xl.dot(&it.zl)) / total;

            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = (rd_s.norm_squared() + rd_l.norm_squared()).sqrt() / (1.0 + c_norm);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let merit = pinf.max(dinf).max(gap);
            if best.as_ref().is_none_or(|(m, _)| merit < *m) {
                best = Some((merit, clone_iterate(&it)));
            }
            if pinf <= settings.tolerance && dinf <= settings.tolerance && gap <= settings.tolerance {
                return SolveOutcome {
                    it,
                    iterations: iter,
                    status: SdpStatus::Optimal,
                };
            }
            // Primal infeasibility: y with bᵀy > 0 and 𝒜*y + Z ≈ 0.
            if dobj > 0.0 {
                let ray = (aty_s.clone() + &it.zs).norm() + (&aty_l + &it.zl).norm();
                infeas_ratio = infeas_ratio.min(ray / dobj);
                if ray / dobj < settings.certificate_tolerance {
                    return SolveOutcome {
                        it,
                        iterations: iter,
                        status: SdpStatus::Infeasible,
                    };
                }
            }
            // Dual infeasibility: X with ⟨C, X⟩ < 0 and 𝒜(X) ≈ 0.
            if pobj < 0.0 {
                unbdd_ratio = unbdd_ratio.min(ax.norm() / (-pobj));
            }
            if pobj < 0.0 && ax.norm() / (-pobj) < settings.certificate_tolerance {
                return SolveOutcome {
                    it,
                    iterations: iter,
                    status: SdpStatus::Unbounded,
                };
            }

            let Some(zinv) = spd_inverse(&it.zs) else { break };
            let schur = self.schur(&zinv, &it);
            let Some(fact) = SchurFactor::new(schur) else { break };

            let zinv_rd_x = &zinv * &rd_s * &it.xs;
            let rd_l_ratio = rd_l.component_mul(&it.xl).component_div(&it.zl);

            // Predictor.
            let rc_s = -it.xs.clone();
            let rc_l = -it.xl.clone();
            let aff = self.direction(&fact, &zinv, &it, &rp, &rd_s, &rd_l, &zinv_rd_x, &rd_l_ratio, rc_s, rc_l);
            let ap = max_step(&it.xs, &it.xl, &aff.dxs, &aff.dxl).min(1.0);
            let ad = max_step(&it.zs, &it.zl, &aff.dzs, &aff.dzl).min(1.0);
            let mu_aff = ((&it.xs + &aff.dxs * ap).dot(&(&it.zs + &aff.dzs * ad))
                + (&it.xl + &aff.dxl * ap).dot(&(&it.zl + &aff.dzl * ad)))
                / total;
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };

            // Corrector.
            let rc_s = &zinv * (sigma * mu) - &it.xs - &zinv * &aff.dzs * &aff.dxs;
            let rc_l = DVector::from_iterator(
                self.nl,
                (0..self.nl).map(|k| {
                    (sigma * mu - aff.dzl[k] * aff.dxl[k]) / it.zl[k] - it.xl[k]
                }),
            );
            let dir = self.direction(&fact, &zinv, &it, &rp, &rd_s, &rd_l, &zinv_rd_x, &rd_l_ratio, rc_s, rc_l);
            let tau = if merit < 1e-4 { 0.99 } else { 0.95 };
            let ap = (tau * max_step(&it.xs, &it.xl, &dir.dxs, &dir.dxl)).min(1.0);
            let ad = (tau * max_step(&it.zs, &it.zl, &dir.dzs, &dir.dzl)).min(1.0);
            if ap < 1e-10 && ad < 1e-10 {
                stalled += 1;
                if stalled >= 3 {
                    break;
                }
            } else {
                stalled = 0;
            }
            it.xs += &dir.dxs * ap;
            it.xl += &dir.dxl * ap;
            it.y += &dir.dy * ad;
            it.zs += &dir.dzs * ad;
            it.zl += &dir.dzl * ad;
            symmetrize(&mut it.xs);
            symmetrize(&mut it.zs);
        }
        let iterations = settings.max_iterations;
        let relaxed = 100.0 * settings.certificate_tolerance;
        let status = if infeas_ratio < relaxed {
            SdpStatus::Infeasible
        } else if unbdd_ratio < relaxed {
            SdpStatus::Unbounded
        } else {
            SdpStatus::MaxIterations
        };
        let it = best.map(|(_, it)| it).unwrap_or(it);
        SolveOutcome {
            it,
            iterations,
            status,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        fact: &SchurFactor,
        zinv: &DMatrix<f64>,
        it: &Iterate,
        rp: &DVector<f64>,
        rd_s: &DMatrix<f64>,
        rd_l: &DVector<f64>,
        zinv_rd_x: &DMatrix<f64>,
        rd_l_ratio: &DVector<f64>,
        rc_s: DMatrix<f64>,
        rc_l: DVector<f64>,
    ) -> Direction {
        let t_s = &rc_s - zinv_rd_x;
        let t_l = &rc_l - rd_l_ratio;
        let rhs = rp - self.a_op(&t_s, &t_l);
        let dy = fact.solve(&rhs);
        let (aty_s, aty_l) = self.a_adj(&dy);
        let dzs = rd_s - aty_s;
        let dzl = rd_l - aty_l;
        let mut dxs = rc_s - zinv * &dzs * &it.xs;
        symmetrize(&mut dxs);
        let dxl = DVector::from_iterator(
            self.nl,
            (0..self.nl).map(|k| rc_l[k] - dzl[k] * it.xl[k] / it.zl[k]),
        );
        Direction {
            dxs,
            dxl,
            dy,
            dzs,
            dzl,
        }
    }

    fn recover(&self, p: &SdpProblem, out: SolveOutcome) -> SdpSolution {
        let n = self.n;
        let y = &out.it.xs;
        let theta = CMatrix::from_fn(n, n, |i, j| {
            c64(
                0.5 * (y[(i, j)] + y[(i + n, j + n)]),
                0.5 * (y[(i + n, j)] - y[(i, j + n)]),
            )
        });
        let matrix = HermitianMatrix::symmetrized(theta);
        let slacks: Vec<f64> = self
            .slack_vars
            .iter()
            .map(|sv| out.it.xl[sv.pos] - sv.neg.map_or(0.0, |k| out.it.xl[k]))
            .collect();
        let primal_objective: f64 = slacks
            .iter()
            .zip(&p.objective_weights)
            .map(|(s, w)| s * w)
            .sum();
        let dual_objective = -self.rhs().dot(&out.it.y);

        let mut residual: f64 = 0.0;
        if p.unit_diagonal {
            for k in 0..n {
                residual = residual.max((matrix.as_matrix()[(k, k)].re - 1.0).abs() / 2.0);
            }
        }
        for (c, _) in p.constraints.iter().zip(&self.constraint_rows) {
            let lhs = c.matrix.as_ref().map_or(0.0, |m| m.trace_product(&matrix))
                + c.slack_coeffs.iter().zip(&slacks).map(|(a, s)| a * s).sum::<f64>();
            let viol = match c.sense {
                ConstraintSense::AtLeast => (c.offset - lhs).max(0.0),
                ConstraintSense::AtMost => (lhs - c.offset).max(0.0),
                ConstraintSense::Equal => (lhs - c.offset).abs(),
            };
            residual = residual.max(viol / (1.0 + c.offset.abs()));
        }
        for (sv, dom) in self.slack_vars.iter().zip(&p.slack_domains) {
            if *dom == SlackDomain::Nonnegative {
                residual = residual.max((-out.it.xl[sv.pos]).max(0.0));
            }
        }
        SdpSolution {
            matrix,
            slacks,
            primal_objective,
            dual_objective,
            duality_gap: (dual_objective - primal_objective).abs(),
            primal_residual: residual,
            iterations: out.iterations,
            status: out.status,
        }
    }
}

struct Direction {
    dxs: DMatrix<f64>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dzs: DMatrix<f64>,
    dzl: DVector<f64>,
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        if m.nrows() == 0 {
            return m.clone().cholesky().map(SchurFactor::Chol);
        }
        if let Some(c) = m.clone().cholesky() {
            return Some(SchurFactor::Chol(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Chol(c) => c.solve(rhs),
            SchurFactor::Lu(l) => l.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        xs: it.xs.clone(),
        xl: it.xl.clone(),
        y: it.y.clone(),
        zs: it.zs.clone(),
        zl: it.zl.clone(),
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = m.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Largest `α` keeping `x + α dx` in the cone (may be infinite).
fn max_step(xs: &DMatrix<f64>, xl: &DVector<f64>, dxs: &DMatrix<f64>, dxl: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, d) in xl.iter().zip(dxl.iter()) {
        if *d < 0.0 {
            alpha = alpha.min(-x / d);
        }
    }
    if xs.nrows() > 0 {
        let Some(chol) = xs.clone().cholesky() else { return 0.0 };
        let l = chol.l();
        let Some(linv) = l.try_inverse() else { return 0.0 };
        let mut w = &linv * dxs * linv.transpose();
        symmetrize(&mut w);
        let lmin = SymmetricEigen::new(w)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cis, hermitian_eig, CVector};

    fn slack_only(weight: f64, dom: SlackDomain, rows: Vec<(f64, ConstraintSense, f64)>, dim: usize) -> SdpProblem {
        SdpProblem {
            dimension: dim,
            objective_weights: vec![weight],
            slack_domains: vec![dom],
            constraints: rows
                .into_iter()
                .map(|(a, sense, offset)| SdpConstraint {
                    matrix: None,
                    slack_coeffs: vec![a],
                    sense,
                    offset,
                })
                .collect(),
            unit_diagonal: true,
        }
    }

    #[test]
    fn bounded_free_slack() {
        let p = slack_only(1.0, SlackDomain::Free, vec![(1.0, ConstraintSense::AtMost, 1.0)], 2);
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.slacks[0] - 1.0).abs() < 1e-6, "{}", s.slacks[0]);
        for k in 0..2 {
            assert!((s.matrix.as_matrix()[(k, k)].re - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let p = slack_only(1.0, SlackDomain::Nonnegative, vec![(1.0, ConstraintSense::AtMost, -1.0)], 2);
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_slack_detected() {
        let p = slack_only(1.0, SlackDomain::Nonnegative, vec![(1.0, ConstraintSense::AtLeast, 0.0)], 2);
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
    }

    #[test]
    fn max_eigen_via_trace() {
        // maximize s subject to tr(A Θ) - s ≥ 0, Θ ⪰ 0, tr(Θ) = 1 gives λ_max(A).
        let a = HermitianMatrix::symmetrized(CMatrix::from_row_slice(
            2,
            2,
            &[c64(2.0, 0.0), c64(0.5, 1.0), c64(0.5, -1.0), c64(-1.0, 0.0)],
        ));
        let p = SdpProblem {
            dimension: 2,
            objective_weights: vec![1.0],
            slack_domains: vec![SlackDomain::Free],
            constraints: vec![
                SdpConstraint {
                    matrix: Some(a.clone()),
                    slack_coeffs: vec![-1.0],
                    sense: ConstraintSense::AtLeast,
                    offset: 0.0,
                },
                SdpConstraint {
                    matrix: Some(HermitianMatrix::identity(2)),
                    slack_coeffs: vec![0.0],
                    sense: ConstraintSense::Equal,
                    offset: 1.0,
                },
            ],
            unit_diagonal: false,
        };
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        let lmax = hermitian_eig(&a).unwrap().values[0];
        assert!((s.primal_objective - lmax).abs() < 1e-6 * (1.0 + lmax.abs()));
    }

    #[test]
    fn rank_one_phase_alignment() {
        // maximize s subject to |bᴴθ + a t|² ≥ s over unit-modulus (θ, t):
        // the optimum is (|b| + |a|)², attained with a rank-one Θ.
        let b = c64(0.3, -0.4);
        let a = c64(-0.2, 0.1);
        let v = CVector::from_vec(vec![b, a]);
        let p = SdpProblem {
            dimension: 2,
            objective_weights: vec![1.0],
            slack_domains: vec![SlackDomain::Free],
            constraints: vec![SdpConstraint {
                matrix: Some(HermitianMatrix::outer(&v)),
                slack_coeffs: vec![-1.0],
                sense: ConstraintSense::AtLeast,
                offset: 0.0,
            }],
            unit_diagonal: true,
        };
        let s = solve_sdp(&p).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        let expected = (b.norm() + a.norm()).powi(2);
        assert!((s.primal_objective - expected).abs() < 1e-6);
        let grid_best = (0..4096)
            .map(|k| {
                let th = cis(2.0 * std::f64::consts::PI * k as f64 / 4096.0);
                (b.conj() * th + a.conj()).norm_sqr()
            })
            .fold(0.0, f64::max);
        assert!((s.primal_objective - grid_best).abs() <= 1e-4 * grid_best);
    }
}
