//! Configuration-driven Monte-Carlo experiments.
//!
//! Each trial draws matched null and alternative sample sets from the same
//! stream, runs the configured protocol on both with the same seeds and
//! records whether it erred. Trials run in parallel; results depend only on
//! the configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{rr_gain, validate_rho, RapporParams};
use crate::dist::{paninski, Distribution, JointDistribution, SignPattern};
use crate::error::{Error, Result};
use crate::identity::{
    amplify, hr_identity_test, public_coin_identity_test, rappor_identity_test, IdentityGapMode, PublicCoinParams, TestVerdict,
};
use crate::independence::{private_coin_independence_test, public_coin_independence_test, PublicIndependenceParams};
use crate::reduction::independence_hardness_instance;
use crate::rng::{derive_seed, stream, tag};
use crate::smp::PublicSeed;

/// Exact CSV header written by [`write_csv`].
pub const CSV_HEADER: &str = "protocol,k,eps,rho,delta,n,trials,seed,public_seed_policy,type1,type2,wall_ms";

/// Error level at which a single (unamplified) run is considered successful.
pub const BASE_ERROR: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    RapporId,
    HrId,
    PublicId,
    PrivateIndep,
    PublicIndep,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 5] = [
        ProtocolId::RapporId,
        ProtocolId::HrId,
        ProtocolId::PublicId,
        ProtocolId::PrivateIndep,
        ProtocolId::PublicIndep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolId::RapporId => "rappor-id",
            ProtocolId::HrId => "hr-id",
            ProtocolId::PublicId => "public-id",
            ProtocolId::PrivateIndep => "private-indep",
            ProtocolId::PublicIndep => "public-indep",
        }
    }

    pub fn is_independence(&self) -> bool {
        matches!(self, ProtocolId::PrivateIndep | ProtocolId::PublicIndep)
    }

    /// Frozen constant `C` in `n = C·rate(k, ε, ρ)`; see [`Self::rate`].
    pub fn players_constant(&self) -> f64 {
        match self {
            ProtocolId::RapporId => 0.20,
            ProtocolId::HrId => 0.90,
            ProtocolId::PublicId => 2.6,
            ProtocolId::PrivateIndep => 3.4,
            ProtocolId::PublicIndep => 9.5,
        }
    }

    /// Asymptotic player count without its leading constant:
    /// `k^{3/2}/(α²ε²)` for RAPPOR and, with `γ = (e^ρ−1)/(e^ρ+1)`,
    /// `k^{3/2}/(γ²ε²)`, `k/(γ²ε²)`, `k³/(γ²ε²)`, `k²/(γ²ε²)` for the
    /// Hadamard, random-subset, learn-then-test and product-subset testers.
    pub fn rate(&self, k: usize, eps: f64, rho: f64) -> Result<f64> {
        let k = k as f64;
        let gain = rr_gain(validate_rho(rho)?);
        let per = |scale: f64| scale / (eps * eps);
        Ok(match self {
            ProtocolId::RapporId => {
                let alpha = RapporParams::new(rho)?.alpha;
                per(k.powf(1.5) / (alpha * alpha))
            }
            ProtocolId::HrId => per(k.powf(1.5) / (gain * gain)),
            ProtocolId::PublicId => per(k / (gain * gain)),
            ProtocolId::PrivateIndep => per(k.powi(3) / (gain * gain)),
            ProtocolId::PublicIndep => per(k * k / (gain * gain)),
        })
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// A new public seed for every trial.
    #[default]
    FreshPerTrial,
    /// One public seed for the whole experiment.
    Fixed,
}

impl SeedPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeedPolicy::FreshPerTrial => "fresh-per-trial",
            SeedPolicy::Fixed => "fixed",
        }
    }
}

/// Where samples come from. Sign patterns left out are drawn afresh for
/// every trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Identity: the reference itself. Independence: uniform product.
    Null,
    /// Identity only. `gamma` defaults to `eps`.
    Paninski {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<Vec<i8>>,
    },
    /// Independence only: uniform on the diagonal.
    Correlated,
    /// Independence only: the embedded Paninski instance, `ε`-far from every
    /// product. Needs `k` divisible by 4 and `3ε ≤ 1/2`.
    Hardness {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<Vec<i8>>,
    },
    /// A JSON array of masses: `k` entries, or `k²` row-major entries for
    /// independence protocols.
    Custom { path: PathBuf },
}

/// Optional overrides of frozen calibration constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// A single player count or a strictly increasing sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlayerCounts {
    One(usize),
    Sweep(Vec<usize>),
}

impl PlayerCounts {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            PlayerCounts::One(n) => vec![*n],
            PlayerCounts::Sweep(v) => v.clone(),
        }
    }
}

fn one_third() -> f64 {
    BASE_ERROR
}

fn default_trials() -> usize {
    300
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolId,
    pub k: usize,
    pub eps: f64,
    pub rho: f64,
    #[serde(default = "one_third")]
    pub delta: f64,
    /// Player counts; the calibrated count when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<PlayerCounts>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub public_seed_policy: SeedPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null: Option<InstanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<InstanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_reps: Option<usize>,
    #[serde(default)]
    pub calibration: Calibration,
    /// Fill the `wall_ms` column. Off by default so that output bytes are
    /// reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// A config with every optional key at its default.
    pub fn new(protocol: ProtocolId, k: usize, eps: f64, rho: f64) -> Self {
        Self {
            protocol,
            k,
            eps,
            rho,
            delta: BASE_ERROR,
            n: None,
            trials: default_trials(),
            master_seed: 0,
            public_seed_policy: SeedPolicy::default(),
            null: None,
            alternative: None,
            t_reps: None,
            calibration: Calibration::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(config_error("eps", format!("{} is outside (0, 1)", self.eps)));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(config_error("rho", format!("{} is not a finite positive number", self.rho)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_error("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        if self.k < 2 {
            return Err(config_error("k", "must be at least 2"));
        }
        if self.trials == 0 {
            return Err(config_error("trials", "must be at least 1"));
        }
        if let Some(counts) = &self.n {
            let v = counts.to_vec();
            if v.is_empty() {
                return Err(config_error("n", "sweep is empty"));
            }
            if v.contains(&0) {
                return Err(config_error("n", "player counts must be positive"));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config_error("n", format!("sweep {v:?} is not strictly increasing")));
            }
        }
        if self.t_reps == Some(0) {
            return Err(config_error("t_reps", "must be at least 1"));
        }
        if let Some(c) = self.calibration.players_constant {
            if !(c.is_finite() && c > 0.0) {
                return Err(config_error("calibration.players_constant", "must be positive"));
            }
        }
        Ok(())
    }

    /// Calibrated player count for this protocol and parameters.
    pub fn calibrated_players(&self) -> Result<usize> {
        let constant = self
            .calibration
            .players_constant
            .unwrap_or_else(|| self.protocol.players_constant());
        let base = (constant * self.protocol.rate(self.k, self.eps, self.rho)?).ceil() as usize;
        Ok(match amplification(self.delta)? {
            Some(rounds) => base * rounds,
            None => base,
        })
    }

    pub fn player_counts(&self) -> Result<Vec<usize>> {
        match &self.n {
            Some(counts) => Ok(counts.to_vec()),
            None => Ok(vec![self.calibrated_players()?]),
        }
    }

    pub fn public_coin_params(&self) -> PublicCoinParams {
        let d = PublicCoinParams::default();
        PublicCoinParams {
            t_reps: self.t_reps.unwrap_or(d.t_reps),
            c: self.calibration.c.unwrap_or(d.c),
            eps_prime_scale: self.calibration.eps_prime_scale.unwrap_or(d.eps_prime_scale),
        }
    }

    pub fn public_independence_params(&self) -> PublicIndependenceParams {
        let d = PublicIndependenceParams::default();
        PublicIndependenceParams {
            t_reps: self.t_reps.unwrap_or(d.t_reps),
            c: self.calibration.c.unwrap_or(d.c),
            eps_prime_scale: self.calibration.eps_prime_scale.unwrap_or(d.eps_prime_scale),
        }
    }
}

/// Rounds of majority amplification used for a target error `delta`; none
/// when a single run already meets it.
pub fn amplification(delta: f64) -> Result<Option<usize>> {
    if delta >= BASE_ERROR {
        Ok(None)
    } else {
        crate::identity::amplification_rounds(delta).map(Some)
    }
}

/// Reads and validates a JSON config, reporting the line and column of
/// syntax errors and the name of missing or unknown keys.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { location, message } => config_error(format!("{}:{location}", path.display()), message),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| config_error(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// A resolved sampling target.
#[derive(Clone, Debug)]
enum Instance {
    Fixed(Source),
    RandomPaninski { gamma: f64 },
    RandomHardness,
}

#[derive(Clone, Debug)]
enum Source {
    Single(Distribution),
    Pair(JointDistribution),
}

enum Samples {
    Single(Vec<usize>),
    Pair(Vec<(usize, usize)>),
}

fn load_masses(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string()))
}

/// Everything a trial needs, resolved once per experiment.
struct Setup {
    protocol: ProtocolId,
    k: usize,
    eps: f64,
    rho: f64,
    amplify_rounds: Option<usize>,
    delta: f64,
    reference: Distribution,
    null: Instance,
    alternative: Instance,
    public_id: PublicCoinParams,
    public_indep: PublicIndependenceParams,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let indep = config.protocol.is_independence();
        let null_spec = config.null.clone().unwrap_or(InstanceSpec::Null);
        let alt_spec = config.alternative.clone().unwrap_or(if indep {
            InstanceSpec::Correlated
        } else {
            InstanceSpec::Paninski { gamma: None, z: None }
        });
        let null = resolve(&null_spec, config, "null")?;
        let alternative = resolve(&alt_spec, config, "alternative")?;
        let reference = match (&null, indep) {
            (Instance::Fixed(Source::Single(q)), false) => q.clone(),
            (_, false) => return Err(config_error("null", "identity protocols need a fixed null distribution")),
            (_, true) => Distribution::uniform(config.k),
        };
        let setup = Self {
            protocol: config.protocol,
            k: config.k,
            eps: config.eps,
            rho: config.rho,
            amplify_rounds: amplification(config.delta)?,
            delta: config.delta,
            reference,
            null,
            alternative,
            public_id: config.public_coin_params(),
            public_indep: config.public_independence_params(),
        };
        setup.public_id.validate()?;
        setup.public_indep.validate()?;
        Ok(setup)
    }

    fn source(&self, instance: &Instance, trial_seed: u64) -> Result<Source> {
        let mut rng = stream(trial_seed, tag::INSTANCE);
        Ok(match instance {
            Instance::Fixed(s) => s.clone(),
            Instance::RandomPaninski { gamma } => {
                Source::Single(paninski(self.k, *gamma, &SignPattern::random(self.k / 2, &mut rng))?)
            }
            Instance::RandomHardness => {
                let half = self.k / 2;
                let z = SignPattern::random(half * half / 2, &mut rng);
                Source::Pair(independence_hardness_instance(half, self.eps, &z)?)
            }
        })
    }

    fn draw(&self, instance: &Instance, n: usize, trial_seed: u64) -> Result<Samples> {
        let mut rng = stream(trial_seed, tag::SAMPLES);
        Ok(match self.source(instance, trial_seed)? {
            Source::Single(p) => Samples::Single(p.sample(n, &mut rng)),
            Source::Pair(p) => Samples::Pair(p.sample(n, &mut rng)),
        })
    }

    fn run_once(&self, samples: &Samples, seed: u64, public: PublicSeed) -> Result<TestVerdict> {
        let (k, eps, rho) = (self.k, self.eps, self.rho);
        match (self.protocol, samples) {
            (ProtocolId::RapporId, Samples::Single(s)) => rappor_identity_test(s, &self.reference, eps, rho, seed),
            (ProtocolId::HrId, Samples::Single(s)) => {
                hr_identity_test(s, &self.reference, IdentityGapMode::ExactVsTv { eps }, rho, seed)
            }
            (ProtocolId::PublicId, Samples::Single(s)) => {
                public_coin_identity_test(s, &self.reference, eps, rho, public, seed, &self.public_id)
            }
            (ProtocolId::PrivateIndep, Samples::Pair(s)) => private_coin_independence_test(s, k, eps, rho, seed),
            (ProtocolId::PublicIndep, Samples::Pair(s)) => {
                public_coin_independence_test(s, k, eps, rho, public, seed, &self.public_indep)
            }
            _ => unreachable!("instance kind is checked when the setup is resolved"),
        }
    }

    fn run(&self, samples: &Samples, seed: u64, public: PublicSeed) -> Result<TestVerdict> {
        if self.amplify_rounds.is_none() {
            return self.run_once(samples, seed, public);
        }
        let rep_seeds = |rep: usize| (derive_seed(seed, rep as u64), PublicSeed(derive_seed(public.0, rep as u64)));
        match samples {
            Samples::Single(s) => amplify(s, self.delta, |chunk, rep| {
                let (seed, public) = rep_seeds(rep);
                self.run_once(&Samples::Single(chunk.to_vec()), seed, public)
            }),
            Samples::Pair(s) => amplify(s, self.delta, |chunk, rep| {
                let (seed, public) = rep_seeds(rep);
                self.run_once(&Samples::Pair(chunk.to_vec()), seed, public)
            }),
        }
    }
}

fn resolve(spec: &InstanceSpec, config: &ExperimentConfig, location: &str) -> Result<Instance> {
    let k = config.k;
    let indep = config.protocol.is_independence();
    let wrong_kind = || {
        config_error(
            location,
            format!("instance kind {spec:?} does not apply to protocol {}", config.protocol),
        )
    };
    Ok(match spec {
        InstanceSpec::Null if indep => Instance::Fixed(Source::Pair(JointDistribution::uniform(k, k))),
        InstanceSpec::Null => Instance::Fixed(Source::Single(Distribution::uniform(k))),
        InstanceSpec::Paninski { .. } if indep => return Err(wrong_kind()),
        InstanceSpec::Paninski { gamma, z } => {
            if !k.is_multiple_of(2) {
                return Err(config_error(location, "the Paninski family needs an even k"));
            }
            let gamma = gamma.unwrap_or(config.eps);
            match z {
                Some(z) => Instance::Fixed(Source::Single(paninski(k, gamma, &SignPattern::new(z.clone())?)?)),
                None => {
                    paninski(k, gamma, &SignPattern::all_plus(k / 2))?;
                    Instance::RandomPaninski { gamma }
                }
            }
        }
        InstanceSpec::Correlated if indep => Instance::Fixed(Source::Pair(JointDistribution::diagonal(k))),
        InstanceSpec::Hardness { z } if indep => {
            if !k.is_multiple_of(4) {
                return Err(config_error(location, "the hardness instance needs k divisible by 4"));
            }
            let half = k / 2;
            match z {
                Some(z) => Instance::Fixed(Source::Pair(independence_hardness_instance(
                    half,
                    config.eps,
                    &SignPattern::new(z.clone())?,
                )?)),
                None => {
                    independence_hardness_instance(half, config.eps, &SignPattern::all_plus(half * half / 2))?;
                    Instance::RandomHardness
                }
            }
        }
        InstanceSpec::Correlated | InstanceSpec::Hardness { .. } => return Err(wrong_kind()),
        InstanceSpec::Custom { path } => {
            let masses = load_masses(path)?;
            if indep {
                Instance::Fixed(Source::Pair(JointDistribution::new(k, k, masses)?))
            } else {
                if masses.len() != k {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        actual: masses.len(),
                    });
                }
                Instance::Fixed(Source::Single(Distribution::new(masses)?))
            }
        }
    })
}

/// One output row; field order and names form the CSV header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub protocol: ProtocolId,
    pub k: usize,
    pub eps: f64,
    pub rho: f64,
    pub delta: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub public_seed_policy: SeedPolicy,
    /// Fraction of null trials rejected.
    pub type1: f64,
    /// Fraction of alternative trials accepted.
    pub type2: f64,
    pub wall_ms: Option<f64>,
}

impl ExperimentRow {
    pub fn max_error(&self) -> f64 {
        self.type1.max(self.type2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
}

fn public_seed_for(config: &ExperimentConfig, trial_seed: u64) -> PublicSeed {
    match config.public_seed_policy {
        SeedPolicy::FreshPerTrial => PublicSeed(derive_seed(trial_seed, tag::PUBLIC)),
        SeedPolicy::Fixed => PublicSeed(derive_seed(config.master_seed, tag::PUBLIC)),
    }
}

fn run_row(setup: &Setup, config: &ExperimentConfig, n: usize) -> Result<ExperimentRow> {
    let start = Instant::now();
    let outcomes = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let trial_seed = derive_seed(config.master_seed, t);
            let public = public_seed_for(config, trial_seed);
            let protocol_seed = derive_seed(trial_seed, tag::SUBGROUP);
            let null = setup.draw(&setup.null, n, trial_seed)?;
            let null_rejected = !setup.run(&null, protocol_seed, public)?.accepted();
            let alt = setup.draw(&setup.alternative, n, trial_seed)?;
            let alt_accepted = setup.run(&alt, protocol_seed, public)?.accepted();
            Ok((null_rejected, alt_accepted))
        })
        .collect::<Result<Vec<_>>>()?;
    let trials = config.trials as f64;
    let type1 = outcomes.iter().filter(|o| o.0).count() as f64 / trials;
    let type2 = outcomes.iter().filter(|o| o.1).count() as f64 / trials;
    Ok(ExperimentRow {
        protocol: config.protocol,
        k: config.k,
        eps: config.eps,
        rho: config.rho,
        delta: config.delta,
        n,
        trials: config.trials,
        seed: config.master_seed,
        public_seed_policy: config.public_seed_policy,
        type1,
        type2,
        wall_ms: config.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs every player count of the sweep, in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = Setup::new(config)?;
    let rows = config
        .player_counts()?
        .into_iter()
        .map(|n| run_row(&setup, config, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: config.clone(),
        rows,
    })
}

/// Outcome of [`minimal_players`].
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalPlayers {
    pub n: usize,
    /// Every evaluated point, sorted by `n`.
    pub rows: Vec<ExperimentRow>,
}

/// Smallest `n` (to relative precision `tolerance`) whose larger error rate
/// is at most `config.delta`: doubles from `start` until the target is met,
/// then bisects. Counts below a protocol's minimum count as failures. Seeds
/// are shared across `n`, so the search is deterministic.
pub fn minimal_players(config: &ExperimentConfig, start: usize, max_n: usize, tolerance: f64) -> Result<MinimalPlayers> {
    let setup = Setup::new(config)?;
    let target = config.delta;
    let mut rows = Vec::new();
    let mut eval = |n: usize| -> Result<bool> {
        let row = match run_row(&setup, config, n) {
            Err(Error::InsufficientPlayers { .. }) => return Ok(false),
            other => other?,
        };
        let ok = row.max_error() <= target;
        rows.push(row);
        Ok(ok)
    };
    let mut lo = 0usize;
    let mut hi = start.max(1);
    while !eval(hi)? {
        lo = hi;
        hi *= 2;
        if hi > max_n {
            return Err(config_error("n", format!("error above {target} up to {max_n} players")));
        }
    }
    while lo > 0 && (hi - lo) as f64 > tolerance * lo as f64 && hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    rows.sort_by_key(|r| r.n);
    Ok(MinimalPlayers { n: hi, rows })
}

pub fn write_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    if rows.is_empty() {
        writer.write_record(CSV_HEADER.split(','))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ExperimentRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(config_error("csv header", format!("expected `{CSV_HEADER}`, found `{}`", header.join(","))));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}
