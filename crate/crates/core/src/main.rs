use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use irs_codesign::benchmarks::SchemeId;
use irs_codesign::channel::ExperimentConfig;
use irs_codesign::harness::{
    emit_csv, run_convergence, run_invariant_suite, run_power_sweep, run_ser_sweep, write_csv,
    ExperimentResult, RunSettings, Sweep,
};

#[derive(Parser)]
#[command(name = "irs-codesign", version, about = "IRS-integrated BS precoding and transmit-diversity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (key = value lines); defaults to the built-in scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Independent drops per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration AO power with MMSE and ZF on the same drops.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Average BS power versus distance, SINR target (dB) or IRS size.
    PowerSweep {
        #[command(flatten)]
        common: Common,
        /// distance=a:b:s, sinr=a:b:s (dB) or irs=n1,n2,...
        #[arg(long)]
        sweep: String,
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<String>>,
    },
    /// SER of the high-mobility schemes versus beam power (dBm) or IRS size.
    SerSweep {
        #[command(flatten)]
        common: Common,
        /// power=a:b:s (dBm) or irs=n1,n2,...
        #[arg(long)]
        sweep: String,
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<String>>,
        /// Symbol pairs per drop and point.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Beam power for IRS-size sweeps.
        #[arg(long, default_value_t = 10.0)]
        power_dbm: f64,
    },
    /// Check the algebraic identities and solver invariants.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, default_target: Option<f64>) -> Result<(ExperimentConfig, RunSettings)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => {
            let mut c = ExperimentConfig::default();
            if let Some(g) = default_target {
                c.set_low_target(g);
            }
            c
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let mut settings = RunSettings {
        seed: cfg.seed,
        ..RunSettings::default()
    };
    if let Some(t) = common.trials {
        if t == 0 {
            bail!("--trials must be positive");
        }
        settings.drops = t;
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok((cfg, settings))
}

fn schemes(names: &Option<Vec<String>>, default: &[SchemeId]) -> Result<Vec<SchemeId>> {
    match names {
        None => Ok(default.to_vec()),
        Some(v) => v
            .iter()
            .map(|s| s.parse::<SchemeId>().map_err(Into::into))
            .collect(),
    }
}

fn output(result: &ExperimentResult, out: &Option<PathBuf>) -> Result<ExitCode> {
    match out {
        Some(p) => emit_csv(result, p)?,
        None => write_csv(result, std::io::stdout().lock())?,
    }
    if result.infeasible_everywhere() {
        eprintln!("every drop was infeasible");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Convergence { common } => {
            let (cfg, mut settings) = load(&common, Some(8.0))?;
            if common.trials.is_none() {
                settings.drops = 1;
            }
            output(&run_convergence(&cfg, &settings)?, &common.out)
        }
        Command::PowerSweep {
            common,
            sweep,
            schemes: names,
        } => {
            let (cfg, settings) = load(&common, None)?;
            let sweep = Sweep::parse(&sweep)?;
            let list = schemes(&names, &SchemeId::POWER)?;
            output(&run_power_sweep(&cfg, &sweep, &list, &settings)?, &common.out)
        }
        Command::SerSweep {
            common,
            sweep,
            schemes: names,
            pairs,
            power_dbm,
        } => {
            let (cfg, mut settings) = load(&common, None)?;
            if pairs == 0 {
                bail!("--pairs must be positive");
            }
            settings.pairs_per_drop = pairs;
            let sweep = Sweep::parse(&sweep)?;
            let list = schemes(&names, &SchemeId::SER)?;
            output(&run_ser_sweep(&cfg, &sweep, &list, &settings, power_dbm)?, &common.out)
        }
        Command::Validate { common } => {
            let (cfg, settings) = load(&common, None)?;
            let drops = common.trials.unwrap_or(3);
            let checks = run_invariant_suite(&cfg, settings.seed, drops)?;
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
