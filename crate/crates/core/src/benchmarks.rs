//! Comparison schemes: reflect-phase baselines for the power experiments and
//! the high-mobility transmission schemes for the SER experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::ao::{alternating_optimize, AoError, AoSettings, AoTrace, ProblemData};
use crate::channel::{ChannelSet, ExperimentConfig};
use crate::numerics::{c64, hermitian_eig, CMatrix, CVector, HermitianMatrix};
use crate::reflect::ReflectState;
use crate::stcode::{
    alamouti_encode, combine, detect, detect_symbol, draw_noise, encode_pair, random_psk,
    receive_slot, simulate_pair, unit, FadingSampler, Interferer, PairLink,
};
use crate::txprecode::{low_null_space, low_sinr, PrecoderSet, TransmitMethod, TxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    ProposedAoMmse,
    ProposedAoZf,
    RandomPhaseMmse,
    DftCodebookMmse,
    NoIrsMmse,
    NoIrsZf,
    ProposedDiversity,
    NullSpaceNoIrs,
    NullSpaceDumbIrs,
    NullSpaceAlamouti,
    BeamformedAlamoutiNoIrs,
}

impl SchemeId {
    pub const ALL: [SchemeId; 11] = [
        SchemeId::ProposedAoMmse,
        SchemeId::ProposedAoZf,
        SchemeId::RandomPhaseMmse,
        SchemeId::DftCodebookMmse,
        SchemeId::NoIrsMmse,
        SchemeId::NoIrsZf,
        SchemeId::ProposedDiversity,
        SchemeId::NullSpaceNoIrs,
        SchemeId::NullSpaceDumbIrs,
        SchemeId::NullSpaceAlamouti,
        SchemeId::BeamformedAlamoutiNoIrs,
    ];

    pub const POWER: [SchemeId; 6] = [
        SchemeId::ProposedAoMmse,
        SchemeId::ProposedAoZf,
        SchemeId::RandomPhaseMmse,
        SchemeId::DftCodebookMmse,
        SchemeId::NoIrsMmse,
        SchemeId::NoIrsZf,
    ];

    pub const SER: [SchemeId; 4] = [
        SchemeId::ProposedDiversity,
        SchemeId::NullSpaceNoIrs,
        SchemeId::NullSpaceDumbIrs,
        SchemeId::NullSpaceAlamouti,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SchemeId::ProposedAoMmse => "ProposedAO_MMSE",
            SchemeId::ProposedAoZf => "ProposedAO_ZF",
            SchemeId::RandomPhaseMmse => "RandomPhase_MMSE",
            SchemeId::DftCodebookMmse => "DftCodebook_MMSE",
            SchemeId::NoIrsMmse => "NoIrs_MMSE",
            SchemeId::NoIrsZf => "NoIrs_ZF",
            SchemeId::ProposedDiversity => "ProposedDiversity",
            SchemeId::NullSpaceNoIrs => "NullSpaceNoIrs",
            SchemeId::NullSpaceDumbIrs => "NullSpaceDumbIrs",
            SchemeId::NullSpaceAlamouti => "NullSpaceAlamouti",
            SchemeId::BeamformedAlamoutiNoIrs => "BeamformedAlamoutiNoIrs",
        }
    }

    pub fn is_ser(self) -> bool {
        SchemeId::SER.contains(&self) || self == SchemeId::BeamformedAlamoutiNoIrs
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeId {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .iter()
            .copied()
            .find(|id| id.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SchemeError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("unknown scheme '{0}'")]
    Unknown(String),
    #[error("scheme {0} is not supported by this experiment")]
    Unsupported(SchemeId),
    #[error(transparent)]
    Transmit(#[from] TxError),
    #[error(transparent)]
    Ao(#[from] AoError),
}

/// Result of one power-minimization scheme on one drop.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub precoders: PrecoderSet,
    pub state: ReflectState,
    pub trace: Option<AoTrace>,
}

/// I.i.d. uniform group phases, then MMSE.
pub fn random_phase_scheme<R: Rng + ?Sized>(
    data: &ProblemData,
    rng: &mut R,
) -> Result<(PrecoderSet, ReflectState), TxError> {
    let angles: Vec<f64> = (0..data.groups).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let state = ReflectState::from_angles(&angles);
    Ok((data.transmit(&state, TransmitMethod::Mmse)?, state))
}

/// Word `(p, q)` of the separable DFT codebook on a `gx × gz` group grid.
pub fn dft_word(p: usize, q: usize, grid: (usize, usize)) -> CVector {
    let (gx, gz) = grid;
    CVector::from_fn(gx * gz, |n, _| {
        let (iz, ix) = (n / gx, n % gx);
        Complex64::cis(-2.0 * PI * (p as f64 * ix as f64 / gx as f64 + q as f64 * iz as f64 / gz as f64))
    })
}

pub fn dft_codebook(grid: (usize, usize)) -> Vec<CVector> {
    let mut words = Vec::with_capacity(grid.0 * grid.1);
    for q in 0..grid.1 {
        for p in 0..grid.0 {
            words.push(dft_word(p, q, grid));
        }
    }
    words
}

/// `min_l ‖h̄_l‖²` at common phase 0.
pub fn min_channel_gain(data: &ProblemData, theta_bar: &CVector) -> f64 {
    let state = ReflectState {
        group_phases: theta_bar.clone(),
        common_phase: 0.0,
    };
    data.effective_channels(&state)
        .iter()
        .map(|h| h.norm_squared())
        .fold(f64::INFINITY, f64::min)
}

/// Max-min channel gain over the codebook (first word on ties), then MMSE.
pub fn dft_codebook_scheme(
    data: &ProblemData,
    grid: (usize, usize),
) -> Result<(PrecoderSet, ReflectState), TxError> {
    let mut best: Option<(f64, CVector)> = None;
    for w in dft_codebook(grid) {
        let s = min_channel_gain(data, &w);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, w));
        }
    }
    let theta = best.map(|(_, w)| w).unwrap_or_else(|| CVector::zeros(0));
    let state = ReflectState {
        group_phases: theta,
        common_phase: 0.0,
    };
    Ok((data.transmit(&state, TransmitMethod::Mmse)?, state))
}

/// Transmit precoding with the reflected path removed.
pub fn no_irs_scheme(data: &ProblemData, method: TransmitMethod) -> Result<PrecoderSet, TxError> {
    data.without_irs()
        .transmit(&ReflectState::all_ones(data.groups), method)
}

/// Any of the six power-minimization schemes on one drop.
pub fn run_power_scheme<R: Rng + ?Sized>(
    scheme: SchemeId,
    data: &ProblemData,
    grid: (usize, usize),
    settings: &AoSettings,
    rng: &mut R,
) -> Result<SchemeOutcome, SchemeError> {
    let plain = |(precoders, state): (PrecoderSet, ReflectState)| SchemeOutcome {
        precoders,
        state,
        trace: None,
    };
    match scheme {
        SchemeId::ProposedAoMmse | SchemeId::ProposedAoZf => {
            let method = if scheme == SchemeId::ProposedAoMmse {
                TransmitMethod::Mmse
            } else {
                TransmitMethod::Zf
            };
            let s = AoSettings { method, ..*settings };
            let out = alternating_optimize(data, &s, rng)?;
            Ok(SchemeOutcome {
                precoders: out.precoders,
                state: out.state,
                trace: Some(out.trace),
            })
        }
        SchemeId::RandomPhaseMmse => Ok(plain(random_phase_scheme(data, rng)?)),
        SchemeId::DftCodebookMmse => Ok(plain(dft_codebook_scheme(data, grid)?)),
        SchemeId::NoIrsMmse | SchemeId::NoIrsZf => {
            let method = if scheme == SchemeId::NoIrsMmse {
                TransmitMethod::Mmse
            } else {
                TransmitMethod::Zf
            };
            Ok(SchemeOutcome {
                precoders: no_irs_scheme(data, method)?,
                state: ReflectState::all_ones(data.groups),
                trace: None,
            })
        }
        other => Err(SchemeError::Unsupported(other)),
    }
}

/// High-mobility beams as unit directions.
#[derive(Debug, Clone, PartialEq)]
pub enum HighBeams {
    Single(CVector),
    Pair(CVector, CVector),
}

/// Everything needed to simulate one SER scheme on one drop.
#[derive(Debug, Clone)]
pub struct SerSetup {
    pub scheme: SchemeId,
    pub low_beams: Vec<CVector>,
    pub beams: HighBeams,
    pub sampler: FadingSampler,
    /// Per-slot common phase used by the single-beam and Alamouti schemes.
    pub fixed_phase: f64,
}

/// Low-user designs shared by the SER schemes of one drop: AO with ZF on the
/// IRS system, plain ZF without the IRS.
#[derive(Debug, Clone)]
pub struct SerDrop {
    pub irs: PrecoderSet,
    pub irs_state: ReflectState,
    pub no_irs: PrecoderSet,
    /// Null space of the IRS-system low channels and of the no-IRS ones.
    pub irs_null: CMatrix,
    pub no_irs_null: CMatrix,
    pub irs_gram: CMatrix,
    pub bs_irs: CMatrix,
    pub path_gain: f64,
    pub antennas: usize,
}

impl SerDrop {
    pub fn prepare<R: Rng + ?Sized>(
        cfg: &ExperimentConfig,
        channels: &ChannelSet,
        data: &ProblemData,
        settings: &AoSettings,
        rng: &mut R,
    ) -> Result<Self, SchemeError> {
        let ao = alternating_optimize(
            data,
            &AoSettings {
                method: TransmitMethod::Zf,
                ..*settings
            },
            rng,
        )?;
        let m = cfg.bs_antennas;
        let irs_null = low_null_space(&data.effective_channels(&ao.state), m)?;
        let plain = data.without_irs();
        let no_irs = plain.transmit(&ReflectState::all_ones(data.groups), TransmitMethod::Zf)?;
        let no_irs_null = low_null_space(&plain.effective_channels(&ReflectState::all_ones(data.groups)), m)?;
        Ok(SerDrop {
            irs: ao.precoders,
            irs_state: ao.state,
            no_irs,
            irs_null,
            no_irs_null,
            irs_gram: data.high_gram.clone(),
            bs_irs: channels.bs_irs.clone(),
            path_gain: cfg.user_path_gain(),
            antennas: m,
        })
    }

    pub fn setup(&self, scheme: SchemeId) -> Result<SerSetup, SchemeError> {
        let m = self.antennas;
        let irs_sampler = || FadingSampler::new(Some(&self.bs_irs), m, self.path_gain);
        let plain_sampler = || FadingSampler::new(None, m, self.path_gain);
        let out = match scheme {
            SchemeId::ProposedDiversity | SchemeId::NullSpaceDumbIrs => SerSetup {
                scheme,
                low_beams: self.irs.low_beams.clone(),
                beams: HighBeams::Single(unit(&self.irs.high_beam)),
                sampler: irs_sampler(),
                fixed_phase: 0.0,
            },
            SchemeId::NullSpaceNoIrs => SerSetup {
                scheme,
                low_beams: self.no_irs.low_beams.clone(),
                beams: HighBeams::Single(unit(&self.no_irs.high_beam)),
                sampler: plain_sampler(),
                fixed_phase: 0.0,
            },
            SchemeId::NullSpaceAlamouti => {
                let (w1, w2) = leading_pair(&self.no_irs_null, &CMatrix::identity(m, m))?;
                SerSetup {
                    scheme,
                    low_beams: self.no_irs.low_beams.clone(),
                    beams: HighBeams::Pair(w1, w2),
                    sampler: plain_sampler(),
                    fixed_phase: 0.0,
                }
            }
            other => return Err(SchemeError::Unsupported(other)),
        };
        Ok(out)
    }
}

/// Mean of `min_l SINR_l/γ_l` over the common phases the diversity code
/// actually uses with `order`-PSK (uniform on `2πk/order`), for beams and
/// θ̄ designed at `φ = 0`.
pub fn dynamic_low_margin(
    data: &ProblemData,
    set: &PrecoderSet,
    state: &ReflectState,
    order: usize,
) -> f64 {
    let l = data.low_count();
    if l == 0 || order == 0 {
        return f64::INFINITY;
    }
    let total: f64 = (0..order)
        .map(|k| {
            let st = ReflectState {
                group_phases: state.group_phases.clone(),
                common_phase: 2.0 * PI * k as f64 / order as f64,
            };
            let eff = data.effective_channels(&st);
            (0..l)
                .map(|i| low_sinr(set, &eff, i, data.sigma2) / data.targets[i])
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / order as f64
}

/// Two leading orthonormal directions of `Fᴴ G F`, mapped back through `F`.
pub fn leading_pair(f: &CMatrix, gram: &CMatrix) -> Result<(CVector, CVector), TxError> {
    if f.ncols() < 2 {
        return Err(TxError::EmptyNullSpace);
    }
    let reduced = HermitianMatrix::symmetrized(f.adjoint() * gram * f);
    let e = hermitian_eig(&reduced).map_err(TxError::Numerics)?;
    let v1 = f * e.vectors.column(0);
    let v2 = f * e.vectors.column(1);
    Ok((v1, v2))
}

/// Symbol errors over a block of pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SerCount {
    pub errors: u64,
    pub symbols: u64,
}

impl SerCount {
    pub fn add(&mut self, other: SerCount) {
        self.errors += other.errors;
        self.symbols += other.symbols;
    }

    pub fn rate(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }
}

/// Monte Carlo SER of one scheme at high-mobility power `power` (watts),
/// with independent fading per symbol pair.
pub fn simulate_ser<R: Rng + ?Sized>(
    setup: &SerSetup,
    power: f64,
    pairs: usize,
    order: usize,
    sigma2: f64,
    rng: &mut R,
) -> SerCount {
    let mut count = SerCount::default();
    let amp = |share: f64| c64((power * share).sqrt(), 0.0);
    for _ in 0..pairs {
        let link: PairLink = setup.sampler.sample(rng);
        let (i1, s1) = random_psk(order, rng);
        let (i2, s2) = random_psk(order, rng);
        let inter_syms: Vec<[Complex64; 2]> = setup
            .low_beams
            .iter()
            .map(|_| [random_psk(order, rng).1, random_psk(order, rng).1])
            .collect();
        let interferers: Vec<Interferer<'_>> = setup
            .low_beams
            .iter()
            .zip(&inter_syms)
            .map(|(beam, &symbols)| Interferer { beam, symbols })
            .collect();
        let noise = draw_noise(sigma2, rng);
        let (d1, d2) = match &setup.beams {
            HighBeams::Single(v) if setup.scheme == SchemeId::ProposedDiversity => {
                let w = v * amp(1.0);
                let sched = encode_pair(s1, s2, &w);
                detect(simulate_pair(&sched, &w, &link, &interferers, noise).combined, order)
            }
            HighBeams::Single(v) => {
                let w = v * amp(1.0);
                let phi = setup.fixed_phase;
                let c = link.respond(phi, &w);
                let y1 = receive_slot(&link, phi, &(&w * s1), &interferers, 0, noise[0]);
                let y2 = receive_slot(&link, phi, &(&w * s2), &interferers, 1, noise[1]);
                (detect_symbol(c.conj() * y1, order), detect_symbol(c.conj() * y2, order))
            }
            HighBeams::Pair(v1, v2) => {
                let (w1, w2) = (v1 * amp(0.5), v2 * amp(0.5));
                let phi = setup.fixed_phase;
                let (x1, x2) = alamouti_encode(s1, s2, &w1, &w2);
                let y1 = receive_slot(&link, phi, &x1, &interferers, 0, noise[0]);
                let y2 = receive_slot(&link, phi, &x2, &interferers, 1, noise[1]);
                let (a, b) = (link.respond(phi, &w1), link.respond(phi, &w2));
                detect(combine(a, b, [y1, y2]), order)
            }
        };
        count.errors += (d1 != i1) as u64 + (d2 != i2) as u64;
        count.symbols += 2;
    }
    count
}
