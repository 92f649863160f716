//! Self-checks against exact oracles.
//!
//! Each check compares a measured value with a bound. Exact checks enumerate
//! every output of a channel or every pair of subsets; the only sampled check
//! is the agreement between the reduction's sample converter and the map it
//! implements on Paninski inputs, measured cell by cell in standard errors.
//! A [`Mutation`] perturbs one constant by 1% so that the suite can be shown
//! to notice.

use std::fmt;
use std::time::Instant;

use crate::channel::{ldp_ratio, rr_binary_channel, subset_then_rr, hr_bit_channel, Channel, RapporParams, Rappor};
use crate::dist::{l2_distance_sq, paninski, tv_distance, Distribution, JointDistribution, SignPattern, Subset};
use crate::error::Result;
use crate::hadamard::{sylvester, HadamardSpec};
use crate::identity::{rappor_statistic, rappor_threshold};
use crate::reduction::{phi_map, phi_sample_convert, BlockLayout};
use crate::rng::stream;

const MUTATION_FACTOR: f64 = 1.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// A deliberate 1% corruption, used as a negative control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// RAPPOR's `α` as seen by the referee.
    Alpha,
    /// The constant in RAPPOR's acceptance threshold.
    ThresholdConstant,
    /// RAPPOR's flip probability as used by the players.
    FlipProbability,
}

#[derive(Clone, Copy, Debug, Default)]
struct Knobs {
    alpha: f64,
    threshold: f64,
    flip: f64,
}

impl Knobs {
    fn new(mutation: Option<Mutation>) -> Self {
        let mut k = Self {
            alpha: 1.0,
            threshold: 1.0,
            flip: 1.0,
        };
        match mutation {
            Some(Mutation::Alpha) => k.alpha = MUTATION_FACTOR,
            Some(Mutation::ThresholdConstant) => k.threshold = MUTATION_FACTOR,
            Some(Mutation::FlipProbability) => k.flip = MUTATION_FACTOR,
            None => {}
        }
        k
    }

    fn referee_params(&self, rho: f64) -> Result<RapporParams> {
        let mut params = RapporParams::new(rho)?;
        params.alpha *= self.alpha;
        Ok(params)
    }

    fn rappor(&self, k: usize, rho: f64) -> Result<Rappor> {
        Rappor::with_flip(k, rho, RapporParams::new(rho)?.flip * self.flip)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `|value − bound| ≤ tolerance`
    Equal,
    /// `value ≤ bound + tolerance`
    AtMost,
    /// `value ≥ bound − tolerance`
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub relation: Relation,
}

impl Check {
    pub fn new(name: impl Into<String>, relation: Relation, value: f64, bound: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Equal => (value - bound).abs() <= tolerance,
            Relation::AtMost => value <= bound + tolerance,
            Relation::AtLeast => value >= bound - tolerance,
        };
        Self {
            name: name.into(),
            pass: pass && value.is_finite() == bound.is_finite(),
            value,
            bound,
            tolerance,
            relation,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::Equal => "==",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}: value={:.6e} {} bound={:.6e} (tol {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            op,
            self.bound,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub level: Level,
    pub mutation: Option<Mutation>,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(f, "{check}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} of {} checks passed in {:.1}s",
            self.checks.len() - failed,
            self.checks.len(),
            self.elapsed_secs
        )
    }
}

struct Sizes {
    ldp_rhos: &'static [f64],
    parseval_ks: &'static [usize],
    parseval_pairs: usize,
    orthogonality_max: usize,
    hash_ks: &'static [usize],
    product_ks: &'static [usize],
    hash_instances: usize,
    moment_ks: &'static [usize],
    four_wise_ks: &'static [usize],
    tv_pairs: usize,
    converter_draws: usize,
}

const QUICK: Sizes = Sizes {
    ldp_rhos: &[0.25, 0.5, 1.0, 2.0],
    parseval_ks: &[2, 3, 5, 8],
    parseval_pairs: 50,
    orthogonality_max: 256,
    hash_ks: &[4, 6, 8],
    product_ks: &[2, 4, 6],
    hash_instances: 10,
    moment_ks: &[2, 3, 4, 6],
    four_wise_ks: &[2, 4],
    tv_pairs: 100,
    converter_draws: 100_000,
};

const FULL: Sizes = Sizes {
    ldp_rhos: &[0.25, 0.5, 1.0, 2.0],
    parseval_ks: &[2, 3, 5, 8, 16, 33],
    parseval_pairs: 200,
    orthogonality_max: 1024,
    hash_ks: &[4, 6, 8, 10],
    product_ks: &[2, 4, 6, 8],
    hash_instances: 50,
    moment_ks: &[2, 3, 4, 5, 6, 7, 8],
    four_wise_ks: &[2, 4, 6, 8],
    tv_pairs: 500,
    converter_draws: 400_000,
};

/// Runs every check. Failures are report entries, not errors.
pub fn verify_suite(level: Level, mutation: Option<Mutation>) -> Result<Report> {
    let start = Instant::now();
    let sizes = match level {
        Level::Quick => &QUICK,
        Level::Full => &FULL,
    };
    let knobs = Knobs::new(mutation);
    let mut checks = Vec::new();
    ldp_checks(sizes, &knobs, &mut checks)?;
    rappor_moment_checks(&knobs, &mut checks)?;
    hadamard_checks(sizes, &mut checks)?;
    subset_hash_checks(sizes, &mut checks)?;
    product_moment_checks(sizes, &mut checks)?;
    reduction_checks(sizes, &mut checks)?;
    let elapsed_secs = start.elapsed().as_secs_f64();
    if level == Level::Quick {
        checks.push(Check::new("runtime/quick-seconds", Relation::AtMost, elapsed_secs, 60.0, 0.0));
    }
    Ok(Report {
        level,
        mutation,
        checks,
        elapsed_secs,
    })
}

/// Relative distance of the channel's likelihood ratio from the ratio a
/// channel of its kind must attain: `e^ρ`, or 1 when the channel ignores its
/// input.
fn ratio_error(ch: &dyn Channel, informative: bool) -> Result<f64> {
    let target = if informative { ch.rho().exp() } else { 1.0 };
    Ok((ldp_ratio(ch)? / target - 1.0).abs())
}

fn ldp_checks(sizes: &Sizes, knobs: &Knobs, out: &mut Vec<Check>) -> Result<()> {
    for &rho in sizes.ldp_rhos {
        let mut worst = 0.0f64;
        for k in 2..=12 {
            worst = worst.max(ratio_error(&knobs.rappor(k, rho)?, true)?);
        }
        out.push(Check::new(format!("ldp/rappor/rho={rho}"), Relation::Equal, worst, 0.0, 1e-12));

        let mut worst = 0.0f64;
        for k in 2..=16 {
            let spec = HadamardSpec::new(k);
            for set in spec.column_sets() {
                let informative = !set.is_empty() && set.len() < set.universe();
                worst = worst.max(ratio_error(&hr_bit_channel(set.clone(), rho)?, informative)?);
            }
        }
        out.push(Check::new(format!("ldp/hadamard-bit/rho={rho}"), Relation::Equal, worst, 0.0, 1e-12));

        let mut worst = 0.0f64;
        let mut rng = stream(0x1d9, rho.to_bits());
        for k in 2..=12 {
            for _ in 0..20 {
                let set = Subset::random(k, &mut rng);
                let informative = !set.is_empty() && set.len() < k;
                worst = worst.max(ratio_error(&subset_then_rr(set, rho)?, informative)?);
            }
        }
        out.push(Check::new(format!("ldp/subset-rr/rho={rho}"), Relation::Equal, worst, 0.0, 1e-12));

        let worst = ratio_error(&rr_binary_channel(rho)?, true)?;
        out.push(Check::new(format!("ldp/binary-rr/rho={rho}"), Relation::Equal, worst, 0.0, 1e-12));
    }
    Ok(())
}

/// Exact law of the RAPPOR statistic for `n` players by enumerating all
/// joint transcripts. Returns `(E[T], Var[T])`.
fn rappor_law(ch: &dyn Channel, p: &Distribution, q: &Distribution, n: usize, params: &RapporParams) -> Result<(f64, f64)> {
    let k = p.k();
    let outputs = ch.output_space().enumerate()?;
    let out_probs: Vec<f64> = outputs
        .iter()
        .map(|y| (0..k).map(|x| p.prob(x) * ch.prob(y, x)).sum())
        .collect();
    let out_bits: Vec<&[bool]> = outputs.iter().map(|y| y.as_bits().unwrap_or(&[])).collect();
    let total = outputs.len().pow(n as u32);
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut counts = vec![0usize; k];
    for code in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut prob = 1.0;
        let mut rest = code;
        for _ in 0..n {
            let y = rest % outputs.len();
            rest /= outputs.len();
            prob *= out_probs[y];
            for (c, &b) in counts.iter_mut().zip(out_bits[y]) {
                *c += usize::from(b);
            }
        }
        let t = rappor_statistic(&counts, n, q, params);
        m1 += prob * t;
        m2 += prob * t * t;
    }
    Ok((m1, m2 - m1 * m1))
}

/// 20 `(p, q, ρ)` tuples over a binary domain; every fourth has `p = q`.
fn rappor_tuples() -> Vec<(Distribution, Distribution, f64)> {
    let rhos = [0.25, 0.5, 1.0, 2.0];
    let mut rng = stream(0x2a, 0);
    (0..20)
        .map(|i| {
            let p = Distribution::random(2, &mut rng);
            let q = if i % 4 == 0 { p.clone() } else { Distribution::random(2, &mut rng) };
            (p, q, rhos[i % 4])
        })
        .collect()
}

fn rappor_moment_checks(knobs: &Knobs, out: &mut Vec<Check>) -> Result<()> {
    let mut mean_err = 0.0f64;
    let mut var_ratio = 0.0f64;
    for (p, q, rho) in rappor_tuples() {
        let alpha = RapporParams::new(rho)?.alpha;
        let ch = knobs.rappor(2, rho)?;
        let params = knobs.referee_params(rho)?;
        let d2 = l2_distance_sq(&p, &q)?;
        for n in [2usize, 3] {
            let (mean, var) = rappor_law(&ch, &p, &q, n, &params)?;
            let nf = n as f64;
            mean_err = mean_err.max((mean - nf * (nf - 1.0) * alpha * alpha * d2).abs());
            let bound = 2.0 * 2.0 * nf * nf + 5.0 * nf.powi(3) * alpha * alpha * d2;
            var_ratio = var_ratio.max(var / bound);
        }
    }
    out.push(Check::new("rappor/mean-exact", Relation::Equal, mean_err, 0.0, 1e-9));
    out.push(Check::new("rappor/variance-bound-ratio", Relation::AtMost, var_ratio, 1.0, 0.0));

    // Against the binary pair at distance exactly ε the statistic's mean is
    // four times the threshold.
    let mut worst = 0.0f64;
    for (i, eps) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let rho = [0.5, 1.0, 2.0][i];
        let q = Distribution::uniform(2);
        let p = Distribution::new(vec![0.5 + eps, 0.5 - eps])?;
        let ch = knobs.rappor(2, rho)?;
        let params = knobs.referee_params(rho)?;
        for n in [2usize, 3] {
            let (mean, _) = rappor_law(&ch, &p, &q, n, &params)?;
            let threshold = rappor_threshold(n, 2, eps, &params) * knobs.threshold;
            worst = worst.max((threshold / mean - 0.25).abs());
        }
    }
    out.push(Check::new("rappor/threshold-quarter-of-far-mean", Relation::Equal, worst, 0.0, 1e-10));
    Ok(())
}

fn hadamard_checks(sizes: &Sizes, out: &mut Vec<Check>) -> Result<()> {
    let mut worst = 0.0f64;
    let mut order = 1;
    while order <= sizes.orthogonality_max {
        let h = sylvester(order)?;
        for a in 0..order {
            for b in a..order {
                let dot: i64 = (0..order).map(|i| i64::from(h[i][a]) * i64::from(h[i][b])).sum();
                let expected = if a == b { order as i64 } else { 0 };
                worst = worst.max((dot - expected).abs() as f64);
            }
        }
        order *= 2;
    }
    out.push(Check::new("hadamard/orthogonality", Relation::Equal, worst, 0.0, 0.0));

    let mut worst = 0.0f64;
    for &k in sizes.parseval_ks {
        let spec = HadamardSpec::new(k);
        let mut rng = stream(0x9a5e, k as u64);
        for _ in 0..sizes.parseval_pairs {
            let p = Distribution::random(k, &mut rng);
            let q = Distribution::random(k, &mut rng);
            let lhs: f64 = spec
                .column_masses(&p)
                .iter()
                .zip(spec.column_masses(&q))
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let rhs = spec.order() as f64 / 4.0 * l2_distance_sq(&p, &q)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    out.push(Check::new("hadamard/parseval", Relation::Equal, worst, 0.0, 1e-10));
    Ok(())
}

/// Fraction of subsets `S ⊆ [k]` with `(p(S) − q(S))² > threshold`.
pub fn subset_perturbation_fraction(p: &Distribution, q: &Distribution, threshold: f64) -> f64 {
    let k = p.k();
    let diff: Vec<f64> = (0..k).map(|x| p.prob(x) - q.prob(x)).collect();
    let mut hits = 0usize;
    for mask in 0u32..(1 << k) {
        let d: f64 = (0..k).filter(|&x| mask >> x & 1 == 1).map(|x| diff[x]).sum();
        hits += usize::from(d * d > threshold);
    }
    hits as f64 / (1u64 << k) as f64
}

/// `δ_{ij} = p(i, j) − p₁(i)p₂(j)`, row-major.
pub fn product_deviation(joint: &JointDistribution) -> Vec<f64> {
    let product = joint.marginal_product();
    joint.mass().iter().zip(product.mass()).map(|(a, b)| a - b).collect()
}

/// Calls `f(weight, z)` for every pair of 0/1 vectors `(x, y)` drawn from
/// the weighted families `xs` and `ys`, with `z = Σ δ_{ij} x_i y_j`.
fn for_each_z(delta: &[f64], k: usize, xs: &[(u32, f64)], ys: &[(u32, f64)], mut f: impl FnMut(f64, f64)) {
    let mut row_sums = vec![0.0; k];
    for &(x, wx) in xs {
        for (j, r) in row_sums.iter_mut().enumerate() {
            *r = (0..k).filter(|&i| x >> i & 1 == 1).map(|i| delta[i * k + j]).sum();
        }
        for &(y, wy) in ys {
            let z: f64 = (0..k).filter(|&j| y >> j & 1 == 1).map(|j| row_sums[j]).sum();
            f(wx * wy, z);
        }
    }
}

fn uniform_family(k: usize) -> Vec<(u32, f64)> {
    let w = 1.0 / (1u64 << k) as f64;
    (0..1u32 << k).map(|m| (m, w)).collect()
}

/// Fraction of subset pairs `(S₁, S₂)` with
/// `(p(S₁×S₂) − p₁(S₁)p₂(S₂))² ≥ threshold`.
pub fn product_perturbation_fraction(joint: &JointDistribution, threshold: f64) -> f64 {
    let (k, _) = joint.dims();
    let delta = product_deviation(joint);
    let family = uniform_family(k);
    let mut hit = 0.0;
    for_each_z(&delta, k, &family, &family, |w, z| {
        if z * z >= threshold {
            hit += w;
        }
    });
    hit
}

/// `E[Z]`, `E[Z²]`, `E[Z⁴]` and `Pr[Z² ≥ t]` over the given families.
fn z_moments(delta: &[f64], k: usize, xs: &[(u32, f64)], ys: &[(u32, f64)], t: f64) -> [f64; 4] {
    let mut m = [0.0; 4];
    for_each_z(delta, k, xs, ys, |w, z| {
        let z2 = z * z;
        m[0] += w * z;
        m[1] += w * z2;
        m[2] += w * z2 * z2;
        if z2 >= t {
            m[3] += w;
        }
    });
    m
}

fn gf8_mul(mut a: u8, mut b: u8) -> u8 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & 0b1000 != 0 {
            a ^= 0b1011;
        }
    }
    acc
}

/// A 4-wise independent family of `k ≤ 8` uniform bits: the low bit of a
/// random cubic over GF(8) evaluated at `k` distinct points. Returned as a
/// histogram over bit patterns.
pub fn four_wise_family(k: usize) -> Vec<(u32, f64)> {
    assert!(k <= 8, "GF(8) has only 8 evaluation points");
    let mut weights = vec![0.0; 1 << k];
    for coeffs in 0u16..4096 {
        let c = [0, 3, 6, 9].map(|s| (coeffs >> s & 7) as u8);
        let mut mask = 0u32;
        for point in 0..k as u8 {
            let mut v = 0u8;
            for &ci in c.iter().rev() {
                v = gf8_mul(v, point) ^ ci;
            }
            mask |= u32::from(v & 1) << point;
        }
        weights[mask as usize] += 1.0 / 4096.0;
    }
    weights.into_iter().enumerate().filter(|(_, w)| *w > 0.0).map(|(m, w)| (m as u32, w)).collect()
}

fn far_pair(k: usize, rng: &mut crate::rng::StreamRng) -> Result<(Distribution, Distribution, f64)> {
    let p = Distribution::random(k, rng);
    let q = Distribution::random(k, rng);
    let tv = tv_distance(&p, &q)?;
    Ok((p, q, tv * (1.0 - 1e-9)))
}

fn subset_hash_checks(sizes: &Sizes, out: &mut Vec<Check>) -> Result<()> {
    let mut worst = 1.0f64;
    for &k in sizes.hash_ks {
        let mut rng = stream(0x5b5e, k as u64);
        for _ in 0..sizes.hash_instances {
            let (p, q, eps) = far_pair(k, &mut rng)?;
            worst = worst.min(subset_perturbation_fraction(&p, &q, eps * eps / (2.0 * k as f64)));
        }
    }
    out.push(Check::new("subset-hash/identity", Relation::AtLeast, worst, 1.0 / 288.0, 0.0));

    let (mut stated, mut proven) = (1.0f64, 1.0f64);
    for &k in sizes.product_ks {
        let mut rng = stream(0x9b5e, k as u64);
        for _ in 0..sizes.hash_instances {
            let joint = JointDistribution::random(k, k, &mut rng);
            let eps = joint.tv_distance(&joint.marginal_product())? * (1.0 - 1e-9);
            let kf = k as f64;
            stated = stated.min(product_perturbation_fraction(&joint, eps * eps / (8.0 * kf)));
            proven = proven.min(product_perturbation_fraction(&joint, eps * eps / (8.0 * kf * kf)));
        }
    }
    out.push(Check::new("subset-hash/product-eps2-over-8k", Relation::AtLeast, stated, 1.0 / 4096.0, 0.0));
    out.push(Check::new("subset-hash/product-eps2-over-8k2", Relation::AtLeast, proven, 1.0 / 4096.0, 0.0));
    Ok(())
}

fn product_moment_checks(sizes: &Sizes, out: &mut Vec<Check>) -> Result<()> {
    let mut margin_err = 0.0f64;
    let (mut m1_err, mut m2_err, mut m4_ratio, mut pz) = (0.0f64, 0.0f64, 0.0f64, 1.0f64);
    for &k in sizes.moment_ks {
        let family = uniform_family(k);
        let mut rng = stream(0x30e7, k as u64);
        for _ in 0..sizes.hash_instances {
            let joint = JointDistribution::random(k, k, &mut rng);
            let delta = product_deviation(&joint);
            for i in 0..k {
                margin_err = margin_err.max((0..k).map(|j| delta[i * k + j]).sum::<f64>().abs());
                margin_err = margin_err.max((0..k).map(|j| delta[j * k + i]).sum::<f64>().abs());
            }
            let f2: f64 = delta.iter().map(|d| d * d).sum();
            let [m1, m2, m4, tail] = z_moments(&delta, k, &family, &family, f2 / 32.0);
            m1_err = m1_err.max(m1.abs());
            m2_err = m2_err.max((m2 - f2 / 16.0).abs());
            m4_ratio = m4_ratio.max(m4 / (4.0 * f2 * f2));
            pz = pz.min(tail);
        }
    }
    out.push(Check::new("moments/row-column-sums", Relation::Equal, margin_err, 0.0, 1e-12));
    out.push(Check::new("moments/mean", Relation::Equal, m1_err, 0.0, 1e-10));
    out.push(Check::new("moments/second", Relation::Equal, m2_err, 0.0, 1e-10));
    out.push(Check::new("moments/fourth-ratio", Relation::AtMost, m4_ratio, 1.0, 0.0));
    out.push(Check::new("moments/tail-at-frobenius-over-32", Relation::AtLeast, pz, 1.0 / 4096.0, 0.0));

    let mut worst = 0.0f64;
    for &k in sizes.four_wise_ks {
        let full = uniform_family(k);
        let limited = four_wise_family(k);
        let mut rng = stream(0x4a15, k as u64);
        for _ in 0..sizes.hash_instances.min(10) {
            let delta = product_deviation(&JointDistribution::random(k, k, &mut rng));
            let a = z_moments(&delta, k, &full, &full, 0.0);
            let b = z_moments(&delta, k, &limited, &limited, 0.0);
            for i in 0..3 {
                worst = worst.max((a[i] - b[i]).abs());
            }
        }
    }
    out.push(Check::new("moments/four-wise-family", Relation::Equal, worst, 0.0, 1e-10));
    Ok(())
}

fn reduction_checks(sizes: &Sizes, out: &mut Vec<Check>) -> Result<()> {
    let mut bad_cells = 0usize;
    for k in [2, 4, 6, 8] {
        let layout = BlockLayout::new(k)?;
        let side = layout.side();
        let mut cover = vec![0usize; side * side];
        for x in 1..=k * k {
            for (r, c) in layout.cells_of(x) {
                cover[(r - 1) * side + (c - 1)] += 1;
            }
        }
        bad_cells += cover.iter().filter(|&&c| c != 1).count();
    }
    out.push(Check::new("reduction/tiling-defects", Relation::Equal, bad_cells as f64, 0.0, 0.0));

    let (mut tv_err, mut marginal_err) = (0.0f64, 0.0f64);
    for k in [2, 4] {
        let mut rng = stream(0x7e5e, k as u64);
        for _ in 0..sizes.tv_pairs {
            let p = Distribution::random(k * k, &mut rng);
            let q = Distribution::random(k * k, &mut rng);
            let mapped = phi_map(&p)?.tv_distance(&phi_map(&q)?)?;
            tv_err = tv_err.max((mapped - tv_distance(&p, &q)?).abs());
        }
        for _ in 0..20 {
            let z = SignPattern::random(k * k / 2, &mut rng);
            let joint = phi_map(&paninski(k * k, 0.5, &z)?)?;
            let (m1, m2) = joint.marginals();
            let u = 1.0 / (2 * k) as f64;
            for v in m1.mass().iter().chain(m2.mass()) {
                marginal_err = marginal_err.max((v - u).abs());
            }
        }
    }
    out.push(Check::new("reduction/tv-preservation", Relation::Equal, tv_err, 0.0, 1e-12));
    out.push(Check::new("reduction/uniform-marginals", Relation::Equal, marginal_err, 0.0, 1e-12));

    let mut worst_z = 0.0f64;
    for k in [2, 4] {
        let layout = BlockLayout::new(k)?;
        let mut rng = stream(0xc0de, k as u64);
        let z = SignPattern::random(k * k / 2, &mut rng);
        let p = paninski(k * k, 0.25, &z)?;
        let target = phi_map(&p)?;
        let side = layout.side();
        let sampler = p.sampler();
        let mut counts = vec![0usize; side * side];
        for _ in 0..sizes.converter_draws {
            let (r, c) = phi_sample_convert(&layout, sampler.draw(&mut rng), &mut rng)?;
            counts[r * side + c] += 1;
        }
        let n = sizes.converter_draws as f64;
        for (&count, &pi) in counts.iter().zip(target.mass()) {
            let se = (pi * (1.0 - pi) / n).sqrt();
            worst_z = worst_z.max((count as f64 / n - pi).abs() / se);
        }
    }
    out.push(Check::new("reduction/converter-worst-cell-se", Relation::AtMost, worst_z, 3.0, 0.0));
    Ok(())
}
