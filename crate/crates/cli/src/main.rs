use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldp_testing::channel::{hr_bit_channel, ldp_ratio, rr_binary_channel, subset_then_rr, Channel, Rappor, MAX_ENUMERABLE_BITS};
use ldp_testing::dist::Subset;
use ldp_testing::experiment::{
    minimal_players, read_config, write_csv, ExperimentConfig, ExperimentRow, PlayerCounts, ProtocolId, SeedPolicy,
};
use ldp_testing::hadamard::HadamardSpec;
use ldp_testing::verify::{verify_suite, Level, Mutation};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;

/// Simulate locally private distribution testers.
#[derive(Parser, Debug)]
#[command(name = "ldptest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the trials described by a config file and emit CSV.
    Run {
        config: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Search for the smallest player count meeting the error target, for
    /// one or several domain sizes.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Domain sizes to search; the config's `k` when absent.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        /// First player count tried; doubled until the target is met.
        #[arg(long, default_value_t = 100)]
        start: usize,
        #[arg(long, default_value_t = 1 << 26)]
        max_n: usize,
        /// Relative width at which bisection stops.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the exact-oracle self-checks.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Corrupt one constant by 1% (negative control).
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
    },
    /// Certify a mechanism's privacy level by enumeration.
    LdpCheck {
        #[arg(value_enum)]
        mechanism: Mechanism,
        rho: f64,
        k: usize,
    },
}

/// Flags that take precedence over the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    protocol: Option<ProtocolId>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// One count or a comma-separated increasing sweep.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long, value_enum)]
    public_seed_policy: Option<PolicyArg>,
    #[arg(long)]
    t_reps: Option<usize>,
    #[arg(long)]
    players_constant: Option<f64>,
    #[arg(long)]
    eps_prime_scale: Option<f64>,
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MutationArg {
    Alpha,
    Threshold,
    Flip,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    FreshPerTrial,
    Fixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mechanism {
    Rappor,
    Hadamard,
    SubsetRr,
    BinaryRr,
}

enum Failure {
    Usage(String),
    Verify(String),
}

impl From<ldp_testing::Error> for Failure {
    fn from(e: ldp_testing::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(p) = self.protocol {
            config.protocol = p;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(eps) = self.eps {
            config.eps = eps;
        }
        if let Some(rho) = self.rho {
            config.rho = rho;
        }
        if let Some(delta) = self.delta {
            config.delta = delta;
        }
        match self.n.as_slice() {
            [] => {}
            [n] => config.n = Some(PlayerCounts::One(*n)),
            ns => config.n = Some(PlayerCounts::Sweep(ns.to_vec())),
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(s) = self.master_seed {
            config.master_seed = s;
        }
        if let Some(p) = self.public_seed_policy {
            config.public_seed_policy = match p {
                PolicyArg::FreshPerTrial => SeedPolicy::FreshPerTrial,
                PolicyArg::Fixed => SeedPolicy::Fixed,
            };
        }
        if self.t_reps.is_some() {
            config.t_reps = self.t_reps;
        }
        if self.players_constant.is_some() {
            config.calibration.players_constant = self.players_constant;
        }
        if self.eps_prime_scale.is_some() {
            config.calibration.eps_prime_scale = self.eps_prime_scale;
        }
        config.timing |= self.timing;
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, Failure> {
    let mut config = read_config(path)?;
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn emit(rows: &[ExperimentRow], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_csv(rows, std::fs::File::create(path)?)?,
        None => write_csv(rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn ldp_check(mechanism: Mechanism, rho: f64, k: usize) -> Result<(), Failure> {
    if k < 2 {
        return Err(Failure::Usage("k must be at least 2".into()));
    }
    let channels: Vec<Box<dyn Channel>> = match mechanism {
        Mechanism::Rappor => {
            if k > MAX_ENUMERABLE_BITS {
                return Err(Failure::Usage(format!("RAPPOR outputs {k} bits; at most {MAX_ENUMERABLE_BITS} can be enumerated")));
            }
            vec![Box::new(Rappor::new(k, rho)?)]
        }
        Mechanism::Hadamard => HadamardSpec::new(k)
            .column_sets()
            .iter()
            .filter(|s| !s.is_empty() && s.len() < s.universe())
            .map(|s| hr_bit_channel(s.clone(), rho).map(|c| Box::new(c) as Box<dyn Channel>))
            .collect::<Result<_, _>>()?,
        Mechanism::SubsetRr => {
            if k > MAX_ENUMERABLE_BITS {
                return Err(Failure::Usage(format!("at most {MAX_ENUMERABLE_BITS} elements for exhaustive subsets")));
            }
            (1..(1u32 << k) - 1)
                .map(|mask| {
                    let s = Subset::from_members(k, (0..k).filter(|&x| mask >> x & 1 == 1))?;
                    subset_then_rr(s, rho).map(|c| Box::new(c) as Box<dyn Channel>)
                })
                .collect::<Result<_, _>>()?
        }
        Mechanism::BinaryRr => {
            if k != 2 {
                return Err(Failure::Usage("binary randomized response needs k = 2".into()));
            }
            vec![Box::new(rr_binary_channel(rho)?)]
        }
    };
    let mut worst = 1.0f64;
    for ch in &channels {
        worst = worst.max(ldp_ratio(ch.as_ref())?);
    }
    let target = rho.exp();
    let rel = (worst / target - 1.0).abs();
    println!(
        "{mechanism:?} rho={rho} k={k} channels={} max_ratio={worst:.15} e^rho={target:.15} rel_err={rel:.3e}",
        channels.len()
    );
    if rel <= 1e-12 {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Verify(format!("ratio {worst} differs from e^rho = {target}")))
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, overrides } => {
            let config = load(&config, &overrides)?;
            let result = ldp_testing::experiment::run_experiment(&config)?;
            emit(&result.rows, out.as_deref())
        }
        Command::Sweep {
            config,
            out,
            ks,
            start,
            max_n,
            tolerance,
            overrides,
        } => {
            let base = load(&config, &overrides)?;
            let ks = if ks.is_empty() { vec![base.k] } else { ks };
            let mut rows = Vec::new();
            for k in ks {
                let mut config = base.clone();
                config.k = k;
                config.validate()?;
                let found = minimal_players(&config, start, max_n, tolerance)?;
                eprintln!("{} k={k} minimal_n={}", config.protocol, found.n);
                rows.extend(found.rows);
            }
            emit(&rows, out.as_deref())
        }
        Command::Verify { level, mutate } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let mutation = mutate.map(|m| match m {
                MutationArg::Alpha => Mutation::Alpha,
                MutationArg::Threshold => Mutation::ThresholdConstant,
                MutationArg::Flip => Mutation::FlipProbability,
            });
            let report = verify_suite(level, mutation)?;
            println!("{report}");
            std::io::stdout().flush()?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verify(format!("{} check(s) failed", report.failures().count())))
            }
        }
        Command::LdpCheck { mechanism, rho, k } => ldp_check(mechanism, rho, k),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
