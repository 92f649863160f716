//! Locally private independence testers over `[k]×[k]`.
//!
//! Pair samples `(x, y)` are flattened to `x·k + y` wherever a channel acts
//! on the pair.

use crate::channel::{hr_bit_channel, rr_gain, subset_then_rr, validate_rho, Channel};
use crate::dist::{Distribution, JointDistribution, Subset};
use crate::error::{invalid, Error, Result};
use crate::hadamard::{sylvester_entry, HadamardSpec};
use crate::identity::{debias, group_bits, hr_identity_test, validate_eps, IdentityGapMode, TestVerdict};
use crate::rng::derive_seed;
use crate::smp::{partition_players, run_private_coin, run_public_coin, ChannelPlan, GroupAssignment, PublicSeed};

fn mean(bits: &[bool]) -> f64 {
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

fn check_pairs(samples: &[(usize, usize)], k: usize) -> Result<()> {
    match samples.iter().find(|&&(x, y)| x >= k || y >= k) {
        Some(p) => Err(invalid("samples", format!("{p:?} is outside [0, {k})²"))),
        None => Ok(()),
    }
}

fn flatten(samples: &[(usize, usize)], k: usize) -> Vec<usize> {
    samples.iter().map(|&(x, y)| x * k + y).collect()
}

/// Inverts `2·p(C_j) − 1 = Σ_x H[x][j]·p(x)`: `p(x) = (1/K)·Σ_j H[x][j]·(2·p(C_j) − 1)`
/// for `x < k`. The result may leave the simplex when the masses are noisy.
pub fn recover_from_column_masses(masses: &[f64], k: usize) -> Vec<f64> {
    let order = masses.len();
    (0..k)
        .map(|x| {
            masses
                .iter()
                .enumerate()
                .map(|(j, &m)| f64::from(sylvester_entry(x, j)) * (2.0 * m - 1.0))
                .sum::<f64>()
                / order as f64
        })
        .collect()
}

/// Clips negative entries to zero and rescales to unit mass; falls back to
/// uniform if nothing positive remains.
pub fn clip_and_normalize(raw: &[f64]) -> Distribution {
    let clipped: Vec<f64> = raw.iter().map(|&v| if v.is_finite() { v.max(0.0) } else { 0.0 }).collect();
    Distribution::from_weights(&clipped).unwrap_or_else(|_| Distribution::uniform(raw.len()))
}

/// One-bit-per-player frequency estimate: group `j` of `K` reports Hadamard
/// responses for `C_j`, the referee debiases each group mean into `p̂(C_j)`
/// and inverts the column-mass system. Column 0 covers the whole domain, so
/// its mass is pinned to one.
pub fn hr_frequency_estimate(samples: &[usize], k: usize, rho: f64, master_seed: u64) -> Result<Distribution> {
    let rho = validate_rho(rho)?;
    if let Some(x) = samples.iter().find(|&&x| x >= k) {
        return Err(invalid("samples", format!("{x} is outside [0, {k})")));
    }
    let spec = HadamardSpec::new(k);
    let order = spec.order();
    if samples.len() < order {
        return Err(Error::InsufficientPlayers {
            needed: order,
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
    let mut masses: Vec<f64> = group_bits(&transcript.messages, &groups)?
        .iter()
        .map(|bits| debias(mean(bits), rho))
        .collect();
    masses[0] = 1.0;
    Ok(clip_and_normalize(&recover_from_column_masses(&masses, k)))
}

/// Marginal estimates produced by the learning half of the private-coin test.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedProduct {
    pub p1_hat: Distribution,
    pub p2_hat: Distribution,
    /// Target bound on `‖p̂1⊗p̂2 − p1⊗p2‖²`.
    pub l2_error_budget: f64,
}

impl LearnedProduct {
    pub fn product(&self) -> JointDistribution {
        JointDistribution::product(&self.p1_hat, &self.p2_hat)
    }
}

/// Learn-then-test. The first half of the players learns the marginals (one
/// quarter each); the second half runs the Hadamard identity test on `[k²]`
/// against `p̂1⊗p̂2`, separating `‖·‖² ≤ ε²/(2k²)` from `‖·‖² ≥ 2ε²/k²`.
pub fn private_coin_independence_test(
    samples: &[(usize, usize)],
    k: usize,
    eps: f64,
    rho: f64,
    master_seed: u64,
) -> Result<TestVerdict> {
    let (verdict, _) = private_coin_independence_test_detailed(samples, k, eps, rho, master_seed)?;
    Ok(verdict)
}

/// As [`private_coin_independence_test`], also returning the learned product.
pub fn private_coin_independence_test_detailed(
    samples: &[(usize, usize)],
    k: usize,
    eps: f64,
    rho: f64,
    master_seed: u64,
) -> Result<(TestVerdict, LearnedProduct)> {
    let eps = validate_eps(eps)?;
    let rho = validate_rho(rho)?;
    check_pairs(samples, k)?;
    let marginal_order = HadamardSpec::new(k).order();
    let joint_order = HadamardSpec::new(k * k).order();
    let needed = 4 * marginal_order.max(joint_order);
    if samples.len() < needed {
        return Err(Error::InsufficientPlayers {
            needed,
            available: samples.len(),
        });
    }
    let quarter = samples.len() / 4;
    let halves = GroupAssignment::with_sizes(samples.len(), &[quarter, quarter, samples.len() - 2 * quarter])?;
    let xs: Vec<usize> = samples[halves.range(0)].iter().map(|&(x, _)| x).collect();
    let ys: Vec<usize> = samples[halves.range(1)].iter().map(|&(_, y)| y).collect();
    let learned = LearnedProduct {
        p1_hat: hr_frequency_estimate(&xs, k, rho, derive_seed(master_seed, 1))?,
        p2_hat: hr_frequency_estimate(&ys, k, rho, derive_seed(master_seed, 2))?,
        l2_error_budget: eps * eps / (2.0 * (k * k) as f64),
    };
    let kk = (k * k) as f64;
    let gap = IdentityGapMode::l2_gap(eps * eps / (2.0 * kk), 2.0 * eps * eps / kk)?;
    let reference = learned.product().flatten();
    let tested = flatten(&samples[halves.range(2)], k);
    let verdict = hr_identity_test(&tested, &reference, gap, rho, derive_seed(master_seed, 3))?;
    Ok((
        TestVerdict {
            n_used: 2 * quarter + verdict.n_used,
            ..verdict
        },
        learned,
    ))
}

/// Given randomized-response bits estimating `a = p(S1×S2)`, `b = p1(S1)` and
/// `c = p2(S2)`, accepts iff `|ã − b̃·c̃| < threshold`.
pub fn binary_independence_referee(a_bits: &[bool], b_bits: &[bool], c_bits: &[bool], threshold: f64, rho: f64) -> Result<TestVerdict> {
    let used = a_bits.len() + b_bits.len() + c_bits.len();
    if a_bits.is_empty() || b_bits.is_empty() || c_bits.is_empty() {
        return Err(Error::InsufficientPlayers { needed: 3, available: used });
    }
    let a = debias(mean(a_bits), rho);
    let b = debias(mean(b_bits), rho);
    let c = debias(mean(c_bits), rho);
    Ok(TestVerdict::new((a - b * c).abs(), threshold, used))
}

/// Players per third so that each of the three estimates is within `ε/16`
/// with probability `1 − δ/3` (Hoeffding).
pub fn binary_independence_players(eps: f64, rho: f64, delta: f64) -> usize {
    let margin = rr_gain(rho) * eps / 16.0;
    ((6.0 / delta).ln() / (2.0 * margin * margin)).ceil() as usize
}

/// Independence over `{0,1}²`: thirds report `1{(X,Y)=(0,0)}`, `1{X=0}` and
/// `1{Y=0}` through randomized response; accept iff
/// `|p̃(0,0) − p̃1(0)·p̃2(0)| < ε/4`.
pub fn binary_independence_test(pairs: &[(usize, usize)], eps: f64, rho: f64, master_seed: u64) -> Result<TestVerdict> {
    let eps = validate_eps(eps)?;
    let rho = validate_rho(rho)?;
    check_pairs(pairs, 2)?;
    if pairs.len() < 3 {
        return Err(Error::InsufficientPlayers {
            needed: 3,
            available: pairs.len(),
        });
    }
    let groups = partition_players(pairs.len(), 3)?;
    let zero = Subset::from_members(2, [0])?;
    let sets = [
        Subset::product(&zero, &zero),
        Subset::product(&zero, &Subset::full(2)),
        Subset::product(&Subset::full(2), &zero),
    ];
    let channels = sets
        .into_iter()
        .map(|s| -> Result<Box<dyn Channel>> { Ok(Box::new(subset_then_rr(s, rho)?)) })
        .collect::<Result<Vec<_>>>()?;
    let plan = ChannelPlan::grouped(channels, &groups)?;
    let flat = flatten(&pairs[..groups.used()], 2);
    let transcript = run_private_coin(&plan, &flat, master_seed)?;
    let bits = group_bits(&transcript.messages, &groups)?;
    binary_independence_referee(&bits[0], &bits[1], &bits[2], eps / 4.0, rho)
}

/// Knobs of the product-subset tester.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublicIndependenceParams {
    /// Number of repetitions, each using three groups.
    pub t_reps: usize,
    pub c: f64,
    /// Multiplier on the per-repetition resolution `ε/(√8·k)`.
    pub eps_prime_scale: f64,
}

impl PublicIndependenceParams {
    /// Constants exactly as stated by the worst-case analysis.
    pub fn worst_case() -> Self {
        Self {
            t_reps: 200,
            c: 1.0 / 4096.0,
            eps_prime_scale: 1.0,
        }
    }

    pub fn delta0(&self) -> f64 {
        self.c / (2.0 * (1.0 + self.c))
    }

    pub fn reject_budget(&self) -> f64 {
        self.delta0() + self.c / 4.0
    }

    pub fn eps_prime(&self, eps: f64, k: usize) -> f64 {
        self.eps_prime_scale * eps / (8.0f64.sqrt() * k as f64)
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

impl Default for PublicIndependenceParams {
    /// Calibrated for error at most 1/3 at moderate sample sizes.
    fn default() -> Self {
        Self {
            t_reps: 4,
            c: 1.0 / 4096.0,
            eps_prime_scale: 16.0,
        }
    }
}

/// The `t` shared subset pairs `(S_{1,t}, S_{2,t})`, drawn in order.
pub fn shared_subset_pairs(public_seed: PublicSeed, k: usize, t: usize) -> Vec<(Subset, Subset)> {
    let mut shared = public_seed.stream();
    (0..t)
        .map(|_| {
            let s1 = Subset::random(k, &mut shared);
            let s2 = Subset::random(k, &mut shared);
            (s1, s2)
        })
        .collect()
}

/// Repetition `t` uses three groups reporting `1{(X,Y) ∈ S1×S2}`,
/// `1{X ∈ S1}` and `1{Y ∈ S2}` for shared random `S1, S2`; each repetition
/// runs the binary referee at `ε'/4` and the overall test accepts iff the
/// rejected fraction stays below `δ0 + c/4`.
pub fn public_coin_independence_test(
    samples: &[(usize, usize)],
    k: usize,
    eps: f64,
    rho: f64,
    public_seed: PublicSeed,
    master_seed: u64,
    params: &PublicIndependenceParams,
) -> Result<TestVerdict> {
    let eps = validate_eps(eps)?;
    let rho = validate_rho(rho)?;
    params.validate()?;
    check_pairs(samples, k)?;
    let groups = partition_players(samples.len(), 3 * params.t_reps)?;
    let full = Subset::full(k);
    let pair_sets = |pairs: Vec<(Subset, Subset)>| -> Vec<Subset> {
        pairs
            .iter()
            .flat_map(|(s1, s2)| [Subset::product(s1, s2), Subset::product(s1, &full), Subset::product(&full, s2)])
            .collect()
    };
    let setup = |seed: PublicSeed| {
        let channels = pair_sets(shared_subset_pairs(seed, k, params.t_reps))
            .into_iter()
            .map(|s| -> Result<Box<dyn Channel>> { Ok(Box::new(subset_then_rr(s, rho)?)) })
            .collect::<Result<Vec<_>>>()?;
        ChannelPlan::grouped(channels, &groups)
    };
    let flat = flatten(&samples[..groups.used()], k);
    let transcript = run_public_coin(setup, &flat, public_seed, master_seed)?;
    let bits = group_bits(&transcript.messages, &groups)?;
    let threshold = params.eps_prime(eps, k) / 4.0;
    let mut rejected = 0usize;
    for rep in bits.chunks(3) {
        if !binary_independence_referee(&rep[0], &rep[1], &rep[2], threshold, rho)?.accepted() {
            rejected += 1;
        }
    }
    Ok(TestVerdict::new(
        rejected as f64 / params.t_reps as f64,
        params.reject_budget(),
        groups.used(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::l2_distance_sq;
    use crate::rng::stream;

    #[test]
    fn exact_column_masses_round_trip() {
        let mut rng = stream(30, 0);
        for k in [1, 2, 5, 8, 13] {
            let spec = HadamardSpec::new(k);
            for _ in 0..20 {
                let p = Distribution::random(k, &mut rng);
                let back = recover_from_column_masses(&spec.column_masses(&p), k);
                for (a, b) in back.iter().zip(p.mass()) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_and_normalize(&[0.5, -0.1, 0.5]).mass(), &[0.5, 0.0, 0.5]);
        assert_eq!(clip_and_normalize(&[-1.0, -1.0]), Distribution::uniform(2));
    }

    #[test]
    fn estimate_of_point_mass() {
        let k = 4;
        let p = Distribution::point_mass(k, 0).unwrap();
        let mut good = 0;
        for t in 0..200u64 {
            let est = hr_frequency_estimate(&vec![0; 100_000], k, 1.0, t).unwrap();
            good += usize::from(l2_distance_sq(&est, &p).unwrap() <= 0.01);
        }
        assert!(good >= 180, "{good}");
    }

    #[test]
    fn estimate_of_uniform_pair() {
        let n = 20_000;
        let trials = 400;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for t in 0..trials {
            let samples = Distribution::uniform(2).sample(n, &mut stream(31, t));
            let est = hr_frequency_estimate(&samples, 2, 1.0, t).unwrap().prob(0);
            sum += est;
            sum_sq += est * est;
        }
        let m = sum / trials as f64;
        let sd = (sum_sq / trials as f64 - m * m).sqrt();
        assert!((m - 0.5).abs() < 3.0 * sd / (trials as f64).sqrt() + 1e-3);
    }

    #[test]
    fn estimator_rejects_short_input() {
        assert!(hr_frequency_estimate(&[0, 1, 2], 4, 1.0, 0).is_err());
        assert!(hr_frequency_estimate(&[9; 16], 4, 1.0, 0).is_err());
    }

    #[test]
    fn two_by_two_identity() {
        // p(0,0)=0.4, p1(0)=0.5, p2(0)=0.6.
        let p = JointDistribution::new(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let (p1, p2) = p.marginals();
        let d00 = (p.prob(0, 0) - p1.prob(0) * p2.prob(0)).abs();
        for x in 0..2 {
            for y in 0..2 {
                let d = (p.prob(x, y) - p1.prob(x) * p2.prob(y)).abs();
                assert!((d - d00).abs() < 1e-15);
            }
        }
        assert!((d00 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn binary_test_separates() {
        let (eps, rho, delta) = (0.5, 1.0, 0.1);
        let m = binary_independence_players(eps, rho, delta);
        let independent = JointDistribution::uniform(2, 2);
        let correlated = JointDistribution::diagonal(2);
        let trials = 100u64;
        let mut errors = [0; 2];
        for t in 0..trials {
            let mut rng = stream(32, t);
            let a = independent.sample(3 * m, &mut rng);
            errors[0] += usize::from(!binary_independence_test(&a, eps, rho, t).unwrap().accepted());
            let b = correlated.sample(3 * m, &mut rng);
            errors[1] += usize::from(binary_independence_test(&b, eps, rho, t).unwrap().accepted());
        }
        assert!(errors.iter().all(|&e| e as f64 <= delta * trials as f64), "{errors:?}");
    }

    #[test]
    fn product_subsets_factorize() {
        let k = 4;
        let mut rng = stream(33, 0);
        let p = JointDistribution::product(&Distribution::random(k, &mut rng), &Distribution::random(k, &mut rng));
        let (p1, p2) = p.marginals();
        for a in 0..1usize << k {
            for b in 0..1usize << k {
                let s1 = Subset::from_members(k, (0..k).filter(|i| a >> i & 1 == 1)).unwrap();
                let s2 = Subset::from_members(k, (0..k).filter(|i| b >> i & 1 == 1)).unwrap();
                let joint = p.flatten().mass_of(&Subset::product(&s1, &s2));
                assert!((joint - p1.mass_of(&s1) * p2.mass_of(&s2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn public_test_rejects_bad_input() {
        let params = PublicIndependenceParams::default();
        assert!(public_coin_independence_test(&[(0, 0); 5], 2, 0.5, 1.0, PublicSeed(0), 0, &params).is_err());
        assert!(public_coin_independence_test(&[(0, 5); 50], 2, 0.5, 1.0, PublicSeed(0), 0, &params).is_err());
        assert!(private_coin_independence_test(&[(0, 0); 10], 4, 0.5, 1.0, 0).is_err());
    }
}
