//! Locally private identity testers: decide `p = q` versus `TV(p, q) > ε`
//! for a known reference `q`.

use crate::channel::{hr_bit_channel, rr_flip, rr_gain, subset_then_rr, validate_rho, Channel, Message, Rappor, RapporParams};
use crate::dist::{Distribution, Subset};
use crate::error::{invalid, Error, Result};
use crate::hadamard::HadamardSpec;
use crate::smp::{partition_players, run_private_coin, run_public_coin, ChannelPlan, GroupAssignment, PublicSeed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

/// Referee output. `decision` is `Accept` iff `statistic < threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestVerdict {
    pub decision: Decision,
    pub statistic: f64,
    pub threshold: f64,
    pub n_used: usize,
}

impl TestVerdict {
    pub fn new(statistic: f64, threshold: f64, n_used: usize) -> Self {
        let decision = if statistic < threshold {
            Decision::Accept
        } else {
            Decision::Reject
        };
        Self {
            decision,
            statistic,
            threshold,
            n_used,
        }
    }

    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

pub(crate) fn validate_eps(eps: f64) -> Result<f64> {
    if eps.is_finite() && eps > 0.0 && eps <= 1.0 {
        Ok(eps)
    } else {
        Err(invalid("eps", format!("{eps} is outside (0, 1]")))
    }
}

fn check_samples(samples: &[usize], k: usize) -> Result<()> {
    match samples.iter().find(|&&x| x >= k) {
        Some(x) => Err(invalid("samples", format!("{x} is outside [0, {k})"))),
        None => Ok(()),
    }
}

/// Per-coordinate counts of ones across k-bit messages.
pub fn rappor_counts(messages: &[Message], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for (index, msg) in messages.iter().enumerate() {
        let bits = msg.as_bits().unwrap_or(&[]);
        if bits.len() != k {
            return Err(Error::MessageWidth {
                index,
                expected: k,
                actual: bits.len(),
            });
        }
        for (c, &b) in counts.iter_mut().zip(bits) {
            *c += usize::from(b);
        }
    }
    Ok(counts)
}

/// `Σ_x [(N_x − (n−1)λ_x)² − N_x + (n−1)λ_x²]` with `λ_x = α·q(x) + β`.
/// Unbiased for `n(n−1)α²‖p−q‖²`.
pub fn rappor_statistic(counts: &[usize], n: usize, q: &Distribution, params: &RapporParams) -> f64 {
    let m = n as f64 - 1.0;
    counts
        .iter()
        .enumerate()
        .map(|(x, &c)| {
            let lambda = params.coordinate_bias(q.prob(x));
            let c = c as f64;
            (c - m * lambda).powi(2) - c + m * lambda * lambda
        })
        .sum()
}

/// `n(n−1)α²ε²/k`.
pub fn rappor_threshold(n: usize, k: usize, eps: f64, params: &RapporParams) -> f64 {
    n as f64 * (n as f64 - 1.0) * params.alpha * params.alpha * eps * eps / k as f64
}

/// Player count sufficient for error 1/3 by the Chebyshev argument:
/// `9k^{3/2}/(α²ε²) + 1`.
pub fn rappor_sufficient_players(k: usize, eps: f64, rho: f64) -> Result<usize> {
    let params = RapporParams::new(rho)?;
    let bound = 9.0 * (k as f64).powf(1.5) / (params.alpha * params.alpha * eps * eps) + 1.0;
    Ok(bound.ceil() as usize)
}

/// Every player sends its sample through RAPPOR; the referee thresholds the
/// unbiased collision-style statistic.
pub fn rappor_identity_test(samples: &[usize], q: &Distribution, eps: f64, rho: f64, master_seed: u64) -> Result<TestVerdict> {
    let eps = validate_eps(eps)?;
    let k = q.k();
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientPlayers { needed: 2, available: n });
    }
    check_samples(samples, k)?;
    let params = RapporParams::new(rho)?;
    let plan = ChannelPlan::shared(Box::new(Rappor::new(k, rho)?), n);
    let transcript = run_private_coin(&plan, samples, master_seed)?;
    let counts = rappor_counts(&transcript.messages, k)?;
    Ok(TestVerdict::new(
        rappor_statistic(&counts, n, q, &params),
        rappor_threshold(n, k, eps, &params),
        n,
    ))
}

/// What separates null from alternative for the Hadamard tester.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdentityGapMode {
    /// `p = q` versus `TV(p, q) > ε`.
    ExactVsTv { eps: f64 },
    /// `‖p−q‖² ≤ lower` versus `‖p−q‖² ≥ upper`.
    L2Gap { lower: f64, upper: f64 },
}

impl IdentityGapMode {
    pub fn l2_gap(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && lower < upper && upper.is_finite()) {
            return Err(invalid("gap", format!("need 0 ≤ lower < upper, got {lower} and {upper}")));
        }
        Ok(Self::L2Gap { lower, upper })
    }

    /// Squared-ℓ2 cut on the source domain `[k]`: `2ε²/k` (halfway to the
    /// `4ε²/k` implied by TV > ε) or the gap midpoint.
    pub fn l2_cut(&self, k: usize) -> f64 {
        match *self {
            Self::ExactVsTv { eps } => 2.0 * eps * eps / k as f64,
            Self::L2Gap { lower, upper } => 0.5 * (lower + upper),
        }
    }
}

/// `g = (e^ρ−1)/(2(e^ρ+1))`: scale between `‖p−q‖` and the per-column
/// mean distance divided by `√K`.
pub fn hr_scale(rho: f64) -> f64 {
    0.5 * rr_gain(rho)
}

/// `μ_j = ((e^ρ−1)/(e^ρ+1))·p(C_j) + 1/(e^ρ+1)`: expected bit of group `j`.
pub fn hr_mean_vector(p: &Distribution, spec: &HadamardSpec, rho: f64) -> Vec<f64> {
    let gain = rr_gain(rho);
    let flip = rr_flip(rho);
    spec.column_masses(p).into_iter().map(|m| gain * m + flip).collect()
}

/// `μ`-space threshold `g²·K·cut`.
pub fn hr_threshold(gap: &IdentityGapMode, k: usize, order: usize, rho: f64) -> f64 {
    let g = hr_scale(rho);
    g * g * order as f64 * gap.l2_cut(k)
}

/// Unbiased U-statistic for `‖μ − μ_ref‖²` from independent bit columns:
/// `Σ_j (1/(m_j(m_j−1))) Σ_{i≠i'} (B_ij − μ_j)(B_i'j − μ_j)`.
pub fn mean_test_l2(columns: &[Vec<bool>], mu_ref: &[f64], threshold: f64) -> Result<TestVerdict> {
    if columns.len() != mu_ref.len() {
        return Err(Error::LengthMismatch {
            expected: mu_ref.len(),
            actual: columns.len(),
        });
    }
    let mut stat = 0.0;
    let mut used = 0;
    for (col, &mu) in columns.iter().zip(mu_ref) {
        let m = col.len();
        if m < 2 {
            return Err(Error::InsufficientPlayers { needed: 2, available: m });
        }
        let ones = col.iter().filter(|&&b| b).count() as f64;
        let mf = m as f64;
        let sum = ones - mf * mu;
        let sum_sq = ones * (1.0 - mu).powi(2) + (mf - ones) * mu * mu;
        stat += (sum * sum - sum_sq) / (mf * (mf - 1.0));
        used += m;
    }
    Ok(TestVerdict::new(stat, threshold, used))
}

/// Group `j` of `K` equal groups reports one-bit Hadamard responses for
/// column set `C_j`; the referee runs the mean test against `μ(q)`.
pub fn hr_identity_test(
    samples: &[usize],
    q: &Distribution,
    gap: IdentityGapMode,
    rho: f64,
    master_seed: u64,
) -> Result<TestVerdict> {
    if let IdentityGapMode::ExactVsTv { eps } = gap {
        validate_eps(eps)?;
    }
    let rho = validate_rho(rho)?;
    let k = q.k();
    check_samples(samples, k)?;
    let spec = HadamardSpec::new(k);
    let order = spec.order();
    if samples.len() < 2 * order {
        return Err(Error::InsufficientPlayers {
            needed: 2 * order,
            available: samples.len(),
        });
    }
    let groups = partition_players(samples.len(), order)?;
    let channels = spec
        .column_sets()
        .iter()
        .map(|c| -> Result<Box<dyn Channel>> { Ok(Box::new(hr_bit_channel(c.clone(), rho)?)) })
        .collect::<Result<Vec<_>>>()?;
    let plan = ChannelPlan::grouped(channels, &groups)?;
    let transcript = run_private_coin(&plan, &samples[..groups.used()], master_seed)?;
    let columns = group_bits(&transcript.messages, &groups)?;
    mean_test_l2(&columns, &hr_mean_vector(q, &spec, rho), hr_threshold(&gap, k, order, rho))
}

pub(crate) fn group_bits(messages: &[Message], groups: &GroupAssignment) -> Result<Vec<Vec<bool>>> {
    groups
        .ranges()
        .iter()
        .map(|r| {
            messages[r.clone()]
                .iter()
                .enumerate()
                .map(|(offset, m)| {
                    m.as_bit().ok_or(Error::MessageWidth {
                        index: r.start + offset,
                        expected: 1,
                        actual: m.as_bits().map_or(0, <[bool]>::len),
                    })
                })
                .collect()
        })
        .collect()
}

/// Inverts the randomized-response bias map: `(mean − 1/(e^ρ+1))·(e^ρ+1)/(e^ρ−1)`.
pub fn debias(mean: f64, rho: f64) -> f64 {
    (mean - rr_flip(rho)) / rr_gain(rho)
}

/// Accepts iff the debiased mean of randomized-response bits lies within
/// `eps_prime/2` of `q_bias`.
pub fn binary_bias_test(bits: &[bool], q_bias: f64, eps_prime: f64, rho: f64) -> Result<TestVerdict> {
    if bits.is_empty() {
        return Err(Error::InsufficientPlayers { needed: 1, available: 0 });
    }
    let mean = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
    Ok(TestVerdict::new(
        (debias(mean, rho) - q_bias).abs(),
        eps_prime / 2.0,
        bits.len(),
    ))
}

/// Hoeffding sizing for [`binary_bias_test`]:
/// `⌈2·ln(2/δ0) / (((e^ρ−1)/(e^ρ+1))²·ε'²)⌉` players give error at most `δ0`.
pub fn bias_test_players(eps_prime: f64, rho: f64, delta0: f64) -> usize {
    let gain = rr_gain(rho);
    (2.0 * (2.0 / delta0).ln() / (gain * gain * eps_prime * eps_prime)).ceil() as usize
}

/// Knobs of the random-subset tester.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublicCoinParams {
    /// Number of groups, each with its own shared random subset.
    pub t_reps: usize,
    /// Perturbation probability constant.
    pub c: f64,
    /// Multiplier on the per-group resolution `ε/√(2k)`.
    pub eps_prime_scale: f64,
}

impl PublicCoinParams {
    /// Constants exactly as stated by the worst-case analysis.
    pub fn worst_case() -> Self {
        Self {
            t_reps: 200,
            c: 1.0 / 288.0,
            eps_prime_scale: 1.0,
        }
    }

    /// `δ0 = c/(2(1+c))`.
    pub fn delta0(&self) -> f64 {
        self.c / (2.0 * (1.0 + self.c))
    }

    /// Largest rejected fraction still accepted overall: `δ0 + c/4`.
    pub fn reject_budget(&self) -> f64 {
        self.delta0() + self.c / 4.0
    }

    pub fn eps_prime(&self, eps: f64, k: usize) -> f64 {
        self.eps_prime_scale * eps / (2.0 * k as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_reps == 0 {
            return Err(invalid("t_reps", "must be at least 1"));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(invalid("c", format!("{} is outside (0, 1]", self.c)));
        }
        if !(self.eps_prime_scale.is_finite() && self.eps_prime_scale > 0.0) {
            return Err(invalid("eps_prime_scale", "must be positive"));
        }
        Ok(())
    }
}

impl Default for PublicCoinParams {
    /// Calibrated for error at most 1/3 at moderate sample sizes.
    fn default() -> Self {
        Self {
            t_reps: 2,
            c: 1.0 / 288.0,
            eps_prime_scale: 2.1,
        }
    }
}

/// Draws the `t` shared subsets of `[k]` in order from the public stream.
pub fn shared_subsets(public_seed: PublicSeed, k: usize, t: usize) -> Vec<Subset> {
    let mut shared = public_seed.stream();
    (0..t).map(|_| Subset::random(k, &mut shared)).collect()
}

/// Group `t` reports `1{X ∈ S_t}` through randomized response for a shared
/// uniformly random `S_t`; each group runs a bias test against `q(S_t)` and
/// the referee accepts iff the rejected fraction stays below `δ0 + c/4`.
pub fn public_coin_identity_test(
    samples: &[usize],
    q: &Distribution,
    eps: f64,
    rho: f64,
    public_seed: PublicSeed,
    master_seed: u64,
    params: &PublicCoinParams,
) -> Result<TestVerdict> {
    let eps = validate_eps(eps)?;
    let rho = validate_rho(rho)?;
    params.validate()?;
    let k = q.k();
    check_samples(samples, k)?;
    let groups = partition_players(samples.len(), params.t_reps)?;
    let sets = shared_subsets(public_seed, k, params.t_reps);
    let setup = |seed: PublicSeed| {
        let channels = shared_subsets(seed, k, params.t_reps)
            .into_iter()
            .map(|s| -> Result<Box<dyn Channel>> { Ok(Box::new(subset_then_rr(s, rho)?)) })
            .collect::<Result<Vec<_>>>()?;
        ChannelPlan::grouped(channels, &groups)
    };
    let transcript = run_public_coin(setup, &samples[..groups.used()], public_seed, master_seed)?;
    let columns = group_bits(&transcript.messages, &groups)?;
    let eps_prime = params.eps_prime(eps, k);
    let mut rejected = 0usize;
    for (bits, set) in columns.iter().zip(&sets) {
        if !binary_bias_test(bits, q.mass_of(set), eps_prime, rho)?.accepted() {
            rejected += 1;
        }
    }
    Ok(TestVerdict::new(
        rejected as f64 / params.t_reps as f64,
        params.reject_budget(),
        groups.used(),
    ))
}

/// `R = ⌈18·ln(1/δ)⌉` majority rounds.
pub fn amplification_rounds(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1)")));
    }
    Ok((18.0 * (1.0 / delta).ln()).ceil() as usize)
}

/// Runs `base` on `R` disjoint contiguous blocks of `samples` and takes the
/// majority; the statistic is the rejected fraction and ties reject.
pub fn amplify<T, F>(samples: &[T], delta: f64, mut base: F) -> Result<TestVerdict>
where
    F: FnMut(&[T], usize) -> Result<TestVerdict>,
{
    let rounds = amplification_rounds(delta)?;
    if samples.len() < rounds {
        return Err(Error::InsufficientPlayers {
            needed: rounds,
            available: samples.len(),
        });
    }
    let groups = partition_players(samples.len(), rounds)?;
    let mut rejected = 0usize;
    let mut used = 0usize;
    for (rep, range) in groups.ranges().iter().enumerate() {
        let verdict = base(&samples[range.clone()], rep)?;
        rejected += usize::from(!verdict.accepted());
        used += verdict.n_used;
    }
    Ok(TestVerdict::new(rejected as f64 / rounds as f64, 0.5, used))
}
