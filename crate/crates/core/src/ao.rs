//! Alternating optimization of transmit and reflect precoding for minimum
//! BS transmit power.

use rand::Rng;
use thiserror::Error;

use crate::channel::{high_gram, ChannelSet, ExperimentConfig, Grouping};
use crate::numerics::{CMatrix, CVector};
use crate::reflect::{
    build_sdr, gaussian_randomize, group_lift, grouped_effective_channel, solve_reflect,
    ReflectState, DEFAULT_RANDOMIZATIONS,
};
use crate::txprecode::{
    build_correlations, min_margin, mmse_precode, sigma_bar_sq, zf_null_space_precode,
    PrecoderSet, TransmitMethod, TxError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoSettings {
    /// Relative decrease below which the loop stops.
    pub threshold: f64,
    pub max_iterations: usize,
    pub method: TransmitMethod,
    pub randomizations: usize,
    pub common_phase: f64,
}

impl Default for AoSettings {
    fn default() -> Self {
        AoSettings {
            threshold: 1e-4,
            max_iterations: 30,
            method: TransmitMethod::Mmse,
            randomizations: DEFAULT_RANDOMIZATIONS,
            common_phase: 0.0,
        }
    }
}

impl AoSettings {
    pub fn with_method(method: TransmitMethod) -> Self {
        AoSettings {
            method,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoIteration {
    pub total_power: f64,
    pub min_margin: f64,
    pub state: ReflectState,
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoTrace {
    pub iterations: Vec<AoIteration>,
    pub status: AoStatus,
}

impl AoTrace {
    pub fn powers(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.total_power).collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.iterations.windows(2).all(|w| w[1].total_power <= w[0].total_power)
    }
}

#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub precoders: PrecoderSet,
    pub state: ReflectState,
    pub trace: AoTrace,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AoError {
    #[error("transmit precoding infeasible at the initial reflect state: {0}")]
    Infeasible(TxError),
}

/// Everything the two subproblems need, at group granularity.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub direct_low: Vec<CVector>,
    /// One N_g×M cascade per low user.
    pub cascades: Vec<CMatrix>,
    /// `I + 2RᴴR`.
    pub high_gram: CMatrix,
    pub sigma2: f64,
    pub sigma_bar_sq: Option<f64>,
    /// `L+1` targets, high-mobility last.
    pub targets: Vec<f64>,
    pub antennas: usize,
    pub groups: usize,
}

impl ProblemData {
    pub fn new(cfg: &ExperimentConfig, channels: &ChannelSet, grouping: &Grouping) -> Self {
        let cascades = channels
            .irs_low
            .iter()
            .map(|g| group_lift(&channels.bs_irs, g, grouping))
            .collect();
        ProblemData {
            direct_low: channels.direct_low.clone(),
            cascades,
            high_gram: high_gram(&channels.bs_irs),
            sigma2: cfg.noise_power,
            sigma_bar_sq: sigma_bar_sq(
                &channels.high_distances,
                cfg.alpha_user,
                cfg.noise_power,
                cfg.beta,
            ),
            targets: targets(cfg),
            antennas: cfg.bs_antennas,
            groups: grouping.group_count(),
        }
    }

    /// Same users with the reflected path removed (`R = 0`, `θ̄ = 0`).
    pub fn without_irs(&self) -> Self {
        let m = self.antennas;
        ProblemData {
            cascades: self
                .cascades
                .iter()
                .map(|c| CMatrix::zeros(c.nrows(), c.ncols()))
                .collect(),
            high_gram: CMatrix::identity(m, m),
            ..self.clone()
        }
    }

    pub fn low_count(&self) -> usize {
        self.direct_low.len()
    }

    pub fn effective_channels(&self, state: &ReflectState) -> Vec<CVector> {
        self.direct_low
            .iter()
            .zip(&self.cascades)
            .map(|(h, c)| grouped_effective_channel(h, c, &state.group_phases, state.common_phase))
            .collect()
    }

    pub fn transmit(
        &self,
        state: &ReflectState,
        method: TransmitMethod,
    ) -> Result<PrecoderSet, TxError> {
        let eff = self.effective_channels(state);
        match method {
            TransmitMethod::Mmse => {
                let corr = build_correlations(&eff, &self.high_gram, self.sigma2, self.sigma_bar_sq);
                if corr.dim() == 0 {
                    return Ok(PrecoderSet::from_directions(
                        &[CVector::zeros(self.antennas)],
                        vec![0.0],
                    ));
                }
                Ok(mmse_precode(&corr, &eff, &self.targets)?.0)
            }
            TransmitMethod::Zf => zf_null_space_precode(
                &eff,
                self.antennas,
                &self.high_gram,
                &self.targets,
                self.sigma2,
                self.sigma_bar_sq,
            ),
        }
    }

    pub fn min_margin(&self, set: &PrecoderSet, state: &ReflectState) -> f64 {
        min_margin(
            set,
            &self.effective_channels(state),
            &self.high_gram,
            &self.targets,
            self.sigma2,
            self.sigma_bar_sq,
        )
    }
}

pub fn targets(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut t = cfg.sinr_targets_low.clone();
    t.push(cfg.sinr_target_high);
    t
}

pub fn total_power(p: &PrecoderSet) -> f64 {
    p.total_power()
}

pub fn alternating_optimize<R: Rng + ?Sized>(
    data: &ProblemData,
    settings: &AoSettings,
    rng: &mut R,
) -> Result<AoOutcome, AoError> {
    let mut state = ReflectState::all_ones(data.groups);
    state.common_phase = settings.common_phase;
    let mut current = data
        .transmit(&state, settings.method)
        .map_err(AoError::Infeasible)?;
    let record = |set: &PrecoderSet, st: &ReflectState| AoIteration {
        total_power: set.total_power(),
        min_margin: data.min_margin(set, st),
        state: st.clone(),
        powers: set.powers.clone(),
    };
    let mut iterations = vec![record(&current, &state)];
    let low_targets = &data.targets[..data.low_count()];
    let mut status = AoStatus::MaxIterations;
    for _ in 0..settings.max_iterations {
        if data.low_count() == 0 || data.groups == 0 {
            status = AoStatus::Converged;
            break;
        }
        let inst = build_sdr(
            &current,
            &data.direct_low,
            &data.cascades,
            state.common_phase,
            low_targets,
            data.sigma2,
        );
        let Ok(sol) = solve_reflect(&inst) else {
            status = AoStatus::Converged;
            break;
        };
        let Ok(cand) =
            gaussian_randomize(&sol, &inst, settings.randomizations, state.common_phase, rng)
        else {
            status = AoStatus::Converged;
            break;
        };
        let Ok(next) = data.transmit(&cand.state, settings.method) else {
            status = AoStatus::Converged;
            break;
        };
        let old = current.total_power();
        let new = next.total_power();
        if !(new <= old) {
            status = AoStatus::Converged;
            break;
        }
        current = next;
        state = cand.state;
        iterations.push(record(&current, &state));
        if (old - new) / old < settings.threshold {
            status = AoStatus::Converged;
            break;
        }
    }
    Ok(AoOutcome {
        precoders: current,
        state,
        trace: AoTrace { iterations, status },
    })
}
