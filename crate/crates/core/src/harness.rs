//! Experiment orchestration: seeded drops, parallel Monte Carlo, aggregation
//! and CSV output.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ao::{AoSettings, AoStatus, ProblemData};
use crate::benchmarks::{
    dynamic_low_margin, run_power_scheme, simulate_ser, SchemeError, SchemeId, SerCount, SerDrop,
};
use crate::channel::{dbm_to_watts, realize, watts_to_dbm, ChannelError, ExperimentConfig};
use crate::txprecode::TransmitMethod;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: f64,
    pub scheme: String,
    pub metric: String,
    pub value: f64,
    pub trials: u64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl ExperimentResult {
    fn new(experiment: &str, seed: u64, config: &ExperimentConfig) -> Self {
        ExperimentResult {
            experiment: experiment.to_string(),
            rows: Vec::new(),
            seed,
            config: config.clone(),
        }
    }

    /// Sweep value, then scheme tag, then metric.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep
                .total_cmp(&b.sweep)
                .then_with(|| a.scheme.cmp(&b.scheme))
                .then_with(|| a.metric.cmp(&b.metric))
        });
    }

    /// True when no drop was feasible anywhere.
    pub fn infeasible_everywhere(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.metric == "infeasible_drops")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// User distance in meters.
    Distance,
    /// Low-mobility SINR target in dB.
    SinrTargetDb,
    /// Number of IRS elements.
    IrsElements,
    /// High-mobility beam power in dBm (SER only).
    PowerDbm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

impl Sweep {
    /// `name=start:stop:step` or `name=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self, HarnessError> {
        let err = |m: &str| HarnessError::Sweep(format!("{m} in '{spec}'"));
        let (name, range) = spec.split_once('=').ok_or_else(|| err("missing '='"))?;
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "distance" | "d" => SweepKind::Distance,
            "sinr" | "gamma" | "sinr_target" => SweepKind::SinrTargetDb,
            "irs" | "n" | "irs_elements" => SweepKind::IrsElements,
            "power" | "power_dbm" => SweepKind::PowerDbm,
            _ => return Err(err("unknown sweep name")),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err("bad number"));
        let values = if range.contains(':') {
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(err("expected start:stop:step"));
            }
            let (a, b, s) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(s > 0.0) || b < a {
                return Err(err("empty range"));
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * s).collect()
        } else {
            range.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(err("no usable values"));
        }
        Ok(Sweep { kind, values })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SweepKind::Distance => "distance",
            SweepKind::SinrTargetDb => "sinr",
            SweepKind::IrsElements => "irs",
            SweepKind::PowerDbm => "power",
        }
    }

    /// Configuration at one sweep value (power sweeps leave it unchanged).
    pub fn apply(&self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, HarnessError> {
        let mut c = cfg.clone();
        match self.kind {
            SweepKind::Distance => c.user_distance = value,
            SweepKind::SinrTargetDb => c.set_low_target(10f64.powf(value / 10.0)),
            SweepKind::IrsElements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(HarnessError::Sweep(format!("IRS size {value} is not a count")));
                }
                c.irs_elements = value as usize;
            }
            SweepKind::PowerDbm => {}
        }
        c.validate()?;
        Ok(c)
    }
}

/// Monte Carlo sizes and solver settings shared by the experiments.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub seed: u64,
    pub drops: usize,
    pub ao: AoSettings,
    pub pairs_per_drop: usize,
    pub psk_order: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            drops: 100,
            ao: AoSettings::default(),
            pairs_per_drop: 1000,
            psk_order: 8,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream keyed by (seed, experiment, point, purpose) and the
/// drop index, so parallel scheduling never changes results.
pub fn stream_rng(seed: u64, experiment: &str, point: usize, purpose: u64, drop: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for b in experiment.bytes() {
        h = splitmix(h ^ b as u64);
    }
    h = splitmix(h ^ point as u64);
    h = splitmix(h ^ purpose);
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.set_stream(drop);
    rng
}

const PURPOSE_CHANNEL: u64 = 0;
const PURPOSE_SCHEME: u64 = 1;
const PURPOSE_SER: u64 = 2;

/// `(dBm of mean, delta-method stderr in dB)` of linear powers.
pub fn dbm_of_mean(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    (watts_to_dbm(mean), 10.0 / std::f64::consts::LN_10 * se / mean)
}

/// Total power of every scheme on one drop; `None` marks an infeasible run.
pub fn power_drop(
    cfg: &ExperimentConfig,
    schemes: &[SchemeId],
    settings: &RunSettings,
    experiment: &str,
    point: usize,
    drop: u64,
) -> Result<Vec<Option<f64>>, HarnessError> {
    let mut rng = stream_rng(settings.seed, experiment, point, PURPOSE_CHANNEL, drop);
    let (geom, ch) = realize(cfg, &mut rng)?;
    let data = ProblemData::new(cfg, &ch, &geom.grouping);
    schemes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = stream_rng(settings.seed, experiment, point, PURPOSE_SCHEME + 16 * i as u64, drop);
            match run_power_scheme(s, &data, geom.grouping.grid, &settings.ao, &mut rng) {
                Ok(o) => Ok(Some(o.precoders.total_power())),
                Err(SchemeError::Unsupported(id)) => Err(SchemeError::Unsupported(id).into()),
                Err(_) => Ok(None),
            }
        })
        .collect()
}

fn push_power_rows(
    out: &mut ExperimentResult,
    x: f64,
    schemes: &[SchemeId],
    per_drop: &[Vec<Option<f64>>],
) {
    for (i, s) in schemes.iter().enumerate() {
        let vals: Vec<f64> = per_drop.iter().filter_map(|d| d[i]).collect();
        let failed = per_drop.len() - vals.len();
        if !vals.is_empty() {
            let (dbm, se) = dbm_of_mean(&vals);
            out.rows.push(ResultRow {
                sweep: x,
                scheme: s.tag().into(),
                metric: "power_dbm".into(),
                value: dbm,
                trials: vals.len() as u64,
                stderr: se,
            });
        }
        if failed > 0 && !per_drop.is_empty() {
            out.rows.push(ResultRow {
                sweep: x,
                scheme: s.tag().into(),
                metric: "infeasible_drops".into(),
                value: failed as f64,
                trials: per_drop.len() as u64,
                stderr: 0.0,
            });
        }
    }
}

/// Average converged power per scheme at every sweep point.
pub fn run_power_sweep(
    cfg: &ExperimentConfig,
    sweep: &Sweep,
    schemes: &[SchemeId],
    settings: &RunSettings,
) -> Result<ExperimentResult, HarnessError> {
    if let Some(s) = schemes.iter().find(|s| s.is_ser()) {
        return Err(SchemeError::Unsupported(*s).into());
    }
    if sweep.kind == SweepKind::PowerDbm {
        return Err(HarnessError::Sweep("power sweeps apply to ser-sweep only".into()));
    }
    let id = format!("power-{}", sweep.name());
    let mut out = ExperimentResult::new(&id, settings.seed, cfg);
    for (pi, &x) in sweep.values.iter().enumerate() {
        let c = sweep.apply(cfg, x)?;
        let per_drop = (0..settings.drops as u64)
            .into_par_iter()
            .map(|d| power_drop(&c, schemes, settings, &id, pi, d))
            .collect::<Result<Vec<_>, _>>()?;
        push_power_rows(&mut out, x, schemes, &per_drop);
    }
    out.sort();
    Ok(out)
}

/// Per-iteration power of AO with MMSE and ZF on the same drops.
pub fn run_convergence(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<ExperimentResult, HarnessError> {
    let id = "convergence";
    let mut out = ExperimentResult::new(id, settings.seed, cfg);
    cfg.validate()?;
    let cap = settings.ao.max_iterations + 1;
    let methods = [
        (SchemeId::ProposedAoMmse, TransmitMethod::Mmse),
        (SchemeId::ProposedAoZf, TransmitMethod::Zf),
    ];
    let runs = (0..settings.drops as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = stream_rng(settings.seed, id, 0, PURPOSE_CHANNEL, d);
            let (geom, ch) = realize(cfg, &mut rng)?;
            let data = ProblemData::new(cfg, &ch, &geom.grouping);
            Ok(methods
                .iter()
                .enumerate()
                .map(|(i, &(_, m))| {
                    let mut rng = stream_rng(settings.seed, id, 0, PURPOSE_SCHEME + 16 * i as u64, d);
                    let ao = AoSettings {
                        method: m,
                        ..settings.ao
                    };
                    crate::ao::alternating_optimize(&data, &ao, &mut rng)
                        .ok()
                        .map(|o| o.trace)
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    for (i, (scheme, _)) in methods.iter().enumerate() {
        let traces: Vec<_> = runs.iter().filter_map(|r| r[i].as_ref()).collect();
        let failed = runs.len() - traces.len();
        if failed > 0 {
            out.rows.push(ResultRow {
                sweep: 0.0,
                scheme: scheme.tag().into(),
                metric: "infeasible_drops".into(),
                value: failed as f64,
                trials: runs.len() as u64,
                stderr: 0.0,
            });
        }
        if traces.is_empty() {
            continue;
        }
        for it in 0..cap {
            let vals: Vec<f64> = traces
                .iter()
                .map(|t| {
                    let k = it.min(t.iterations.len() - 1);
                    t.iterations[k].total_power
                })
                .collect();
            let (dbm, se) = dbm_of_mean(&vals);
            out.rows.push(ResultRow {
                sweep: it as f64,
                scheme: scheme.tag().into(),
                metric: "power_dbm".into(),
                value: dbm,
                trials: vals.len() as u64,
                stderr: se,
            });
        }
        let conv = traces
            .iter()
            .filter(|t| t.status == AoStatus::Converged)
            .count() as f64
            / traces.len() as f64;
        out.rows.push(ResultRow {
            sweep: 0.0,
            scheme: scheme.tag().into(),
            metric: "converged_fraction".into(),
            value: conv,
            trials: traces.len() as u64,
            stderr: (conv * (1.0 - conv) / traces.len() as f64).sqrt(),
        });
    }
    out.sort();
    Ok(out)
}

/// One drop of an SER experiment.
#[derive(Debug, Clone)]
pub struct SerDropResult {
    /// `counts[scheme][power]`.
    pub counts: Vec<Vec<SerCount>>,
    /// Low-user margin under the per-symbol common phase, see
    /// [`dynamic_low_margin`].
    pub low_margin_dynamic: f64,
}

/// SER counts of every scheme at every power on one drop; `None` when the
/// low-user design is infeasible.
pub fn ser_drop(
    cfg: &ExperimentConfig,
    powers_w: &[f64],
    schemes: &[SchemeId],
    settings: &RunSettings,
    experiment: &str,
    point: usize,
    drop: u64,
) -> Result<Option<SerDropResult>, HarnessError> {
    let mut rng = stream_rng(settings.seed, experiment, point, PURPOSE_CHANNEL, drop);
    let (geom, ch) = realize(cfg, &mut rng)?;
    let data = ProblemData::new(cfg, &ch, &geom.grouping);
    let mut rng = stream_rng(settings.seed, experiment, point, PURPOSE_SCHEME, drop);
    let prepared = match SerDrop::prepare(cfg, &ch, &data, &settings.ao, &mut rng) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    let mut counts = Vec::with_capacity(schemes.len());
    for (si, &s) in schemes.iter().enumerate() {
        let setup = prepared.setup(s)?;
        let row = powers_w
            .iter()
            .enumerate()
            .map(|(pi, &p)| {
                let purpose = PURPOSE_SER + 16 * (si as u64 + 1) + 4096 * pi as u64;
                let mut rng = stream_rng(settings.seed, experiment, point, purpose, drop);
                simulate_ser(&setup, p, settings.pairs_per_drop, settings.psk_order, cfg.noise_power, &mut rng)
            })
            .collect();
        counts.push(row);
    }
    let low_margin_dynamic = dynamic_low_margin(&data, &prepared.irs, &prepared.irs_state, settings.psk_order);
    Ok(Some(SerDropResult {
        counts,
        low_margin_dynamic,
    }))
}

fn push_ser_rows(
    out: &mut ExperimentResult,
    xs: &[f64],
    schemes: &[SchemeId],
    drops: &[Option<SerDropResult>],
) {
    let feasible: Vec<_> = drops.iter().flatten().collect();
    let failed = drops.len() - feasible.len();
    for (si, s) in schemes.iter().enumerate() {
        for (pi, &x) in xs.iter().enumerate() {
            if failed > 0 {
                out.rows.push(ResultRow {
                    sweep: x,
                    scheme: s.tag().into(),
                    metric: "infeasible_drops".into(),
                    value: failed as f64,
                    trials: drops.len() as u64,
                    stderr: 0.0,
                });
            }
            let mut total = SerCount::default();
            for d in &feasible {
                total.add(d.counts[si][pi]);
            }
            if total.symbols == 0 {
                continue;
            }
            let p = total.rate();
            out.rows.push(ResultRow {
                sweep: x,
                scheme: s.tag().into(),
                metric: "ser".into(),
                value: p,
                trials: total.symbols,
                stderr: (p * (1.0 - p) / total.symbols as f64).sqrt(),
            });
        }
    }
    if schemes.contains(&SchemeId::ProposedDiversity) && !feasible.is_empty() {
        let v: Vec<f64> = feasible.iter().map(|d| d.low_margin_dynamic).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let se = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        for &x in xs {
            out.rows.push(ResultRow {
                sweep: x,
                scheme: SchemeId::ProposedDiversity.tag().into(),
                metric: "low_margin_dynamic".into(),
                value: mean,
                trials: v.len() as u64,
                stderr: se,
            });
        }
    }
}

/// SER of the high-mobility schemes versus beam power (dBm) or IRS size.
/// IRS-size sweeps use `fixed_power_dbm` for the beam.
pub fn run_ser_sweep(
    cfg: &ExperimentConfig,
    sweep: &Sweep,
    schemes: &[SchemeId],
    settings: &RunSettings,
    fixed_power_dbm: f64,
) -> Result<ExperimentResult, HarnessError> {
    if let Some(s) = schemes.iter().find(|s| !SchemeId::SER.contains(s)) {
        return Err(SchemeError::Unsupported(*s).into());
    }
    let id = format!("ser-{}", sweep.name());
    let mut out = ExperimentResult::new(&id, settings.seed, cfg);
    if sweep.kind == SweepKind::PowerDbm {
        cfg.validate()?;
        let powers: Vec<f64> = sweep.values.iter().map(|&p| dbm_to_watts(p)).collect();
        let drops = (0..settings.drops as u64)
            .into_par_iter()
            .map(|d| ser_drop(cfg, &powers, schemes, settings, &id, 0, d))
            .collect::<Result<Vec<_>, _>>()?;
        push_ser_rows(&mut out, &sweep.values, schemes, &drops);
    } else {
        let powers = [dbm_to_watts(fixed_power_dbm)];
        for (pi, &x) in sweep.values.iter().enumerate() {
            let c = sweep.apply(cfg, x)?;
            let drops = (0..settings.drops as u64)
                .into_par_iter()
                .map(|d| ser_drop(&c, &powers, schemes, settings, &id, pi, d))
                .collect::<Result<Vec<_>, _>>()?;
            push_ser_rows(&mut out, &[x], schemes, &drops);
        }
    }
    out.sort();
    Ok(out)
}

pub const CSV_HEADER: [&str; 8] = [
    "experiment", "sweep", "scheme", "metric", "value", "trials", "stderr", "seed",
];

pub fn write_csv<W: std::io::Write>(result: &ExperimentResult, w: W) -> Result<(), HarnessError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in &result.rows {
        wr.write_record([
            result.experiment.clone(),
            r.sweep.to_string(),
            r.scheme.clone(),
            r.metric.clone(),
            r.value.to_string(),
            r.trials.to_string(),
            r.stderr.to_string(),
            result.seed.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| HarnessError::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    write_csv(result, std::io::BufWriter::new(file))
}

/// Parse a CSV written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(r: R) -> Result<ExperimentResult, HarnessError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    let mut experiment = String::new();
    let mut seed = 0;
    let bad = |m: &str| HarnessError::Sweep(format!("malformed CSV: {m}"));
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(bad("field count"));
        }
        experiment = rec[0].to_string();
        seed = rec[7].parse().map_err(|_| bad("seed"))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        rows.push(ResultRow {
            sweep: f(1)?,
            scheme: rec[2].to_string(),
            metric: rec[3].to_string(),
            value: f(4)?,
            trials: rec[5].parse().map_err(|_| bad("trials"))?,
            stderr: f(6)?,
        });
    }
    Ok(ExperimentResult {
        experiment,
        rows,
        seed,
        config: ExperimentConfig::default(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Algebraic identities and solver invariants on a few seeded drops.
pub fn run_invariant_suite(cfg: &ExperimentConfig, seed: u64, drops: usize) -> Result<Vec<InvariantCheck>, HarnessError> {
    use crate::channel::complex_gaussian;
    use crate::numerics::{c64, HermitianMatrix};
    use crate::reflect::{build_sdr, ReflectState};
    use crate::stcode::equivalent_channel;
    use crate::txprecode::{build_correlations, low_null_space, mmse_precode, zf_precode};
    use rand::Rng;

    cfg.validate()?;
    let mut worst = [0.0f64; 6];
    let mut monotone = true;
    for d in 0..drops as u64 {
        let mut rng = stream_rng(seed, "validate", 0, PURPOSE_CHANNEL, d);
        let (geom, ch) = realize(cfg, &mut rng)?;
        let data = ProblemData::new(cfg, &ch, &geom.grouping);

        let hg = complex_gaussian(&mut rng, 2, 1.0);
        let h = equivalent_channel(hg[0], hg[1]);
        let e = (h.adjoint() * &h - crate::numerics::CMatrix::identity(2, 2) * c64(hg.norm_squared(), 0.0)).norm();
        worst[0] = worst[0].max(e / hg.norm_squared());

        let angles: Vec<f64> = (0..data.groups).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
        let mut state = ReflectState::from_angles(&angles);
        let eff = data.effective_channels(&state);
        if let Some(c) = data.cascades.first() {
            let w = complex_gaussian(&mut rng, cfg.bs_antennas, 1.0);
            let g0 = (state.group_phases.transpose() * c * &w)[0].norm_sqr();
            for phi in [0.7, 2.0, 4.1] {
                state.common_phase = phi;
                let g1 = (state.group_phases.transpose() * c * &w * num_complex::Complex64::cis(phi))[0].norm_sqr();
                worst[1] = worst[1].max((g1 - g0).abs() / g0.max(f64::MIN_POSITIVE));
            }
            state.common_phase = 0.0;
        }

        if let Ok(set) = data.transmit(&state, TransmitMethod::Mmse) {
            let inst = build_sdr(&set, &data.direct_low, &data.cascades, 0.0, &data.targets[..data.low_count()], data.sigma2);
            let mut lifted = state.group_phases.clone().insert_row(data.groups, c64(1.0, 0.0));
            lifted *= num_complex::Complex64::cis(0.3);
            let big = HermitianMatrix::outer(&lifted);
            for l in 0..inst.low_count() {
                for j in 0..inst.a[l].len() {
                    let lhs = inst.b_matrices[l][j].trace_product(&big) + inst.a[l][j].norm_sqr();
                    let rhs = inst.amplitude(l, j, &state.group_phases).norm_sqr();
                    worst[2] = worst[2].max((lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE));
                }
            }
        }

        if let Ok(w) = zf_precode(&eff, &data.targets[..eff.len()], data.sigma2) {
            for (l, h) in eff.iter().enumerate() {
                for (j, wj) in w.iter().enumerate() {
                    let v = h.dotc(wj).norm_sqr();
                    if l != j {
                        worst[3] = worst[3].max(v / (data.targets[l] * data.sigma2));
                    }
                }
            }
        }
        if let Ok(f) = low_null_space(&eff, cfg.bs_antennas) {
            for h in &eff {
                worst[4] = worst[4].max((h.adjoint() * &f).norm() / h.norm());
            }
        }

        let corr = build_correlations(&eff, &data.high_gram, data.sigma2, data.sigma_bar_sq);
        if let Ok((set, duals)) = mmse_precode(&corr, &eff, &data.targets) {
            let sl: f64 = duals.lambdas.iter().sum();
            worst[5] = worst[5].max((set.total_power() - sl).abs() / sl);
        }

        let settings = AoSettings { randomizations: 200, max_iterations: 5, ..AoSettings::default() };
        let mut rng = stream_rng(seed, "validate", 0, PURPOSE_SCHEME, d);
        if let Ok(out) = crate::ao::alternating_optimize(&data, &settings, &mut rng) {
            monotone &= out.trace.is_non_increasing();
        }
    }
    let check = |name, v: f64, tol: f64| InvariantCheck {
        name,
        passed: v <= tol,
        detail: format!("worst {v:.3e} (tolerance {tol:.0e})"),
    };
    Ok(vec![
        check("space-time code orthogonality", worst[0], 1e-12),
        check("reflected gain invariant under common phase", worst[1], 1e-10),
        check("lifting identity", worst[2], 1e-9),
        check("zero-forcing interference", worst[3], 1e-10),
        check("null-space residual", worst[4], 1e-10),
        check("transmit duality gap", worst[5], 1e-5),
        InvariantCheck {
            name: "AO power non-increasing",
            passed: monotone,
            detail: String::new(),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("distance=20:60:20").unwrap();
        assert_eq!(s.kind, SweepKind::Distance);
        assert_eq!(s.values, vec![20.0, 40.0, 60.0]);
        assert_eq!(Sweep::parse("irs=100,400").unwrap().values, vec![100.0, 400.0]);
        assert!(Sweep::parse("bogus=1:2:1").is_err());
        assert!(Sweep::parse("sinr=5:1:1").is_err());
        assert!(Sweep::parse("sinr").is_err());
    }

    #[test]
    fn streams_are_keyed() {
        use rand::Rng;
        let mut a = stream_rng(1, "x", 0, 0, 3);
        let mut b = stream_rng(1, "x", 0, 0, 3);
        let mut c = stream_rng(1, "x", 0, 0, 4);
        let (va, vb, vc): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }

    #[test]
    fn delta_method() {
        let (db, se) = dbm_of_mean(&[1e-3, 1e-3]);
        assert!(db.abs() < 1e-12 && se == 0.0);
    }

    #[test]
    fn empty_result_is_header_only() {
        let r = ExperimentResult::new("e", 7, &ExperimentConfig::default());
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,sweep,scheme,metric,value,trials,stderr,seed\n"
        );
    }
}
