//! Locally private channels with exact evaluators and samplers.

use rand::distributions::{Bernoulli, Distribution as _};

use crate::dist::Subset;
use crate::error::{invalid, Error, Result};
use crate::rng::StreamRng;

/// Largest bit-vector width the privacy certifier will enumerate.
pub const MAX_ENUMERABLE_BITS: usize = 20;

/// Relative slack allowed when certifying `ldp_ratio ≤ e^ρ`.
pub const LDP_TOLERANCE: f64 = 1e-12;

/// A player's message to the referee.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Message {
    Bit(bool),
    Bits(Vec<bool>),
}

impl Message {
    pub fn as_bit(&self) -> Option<bool> {
        match self {
            Message::Bit(b) => Some(*b),
            Message::Bits(_) => None,
        }
    }

    pub fn as_bits(&self) -> Option<&[bool]> {
        match self {
            Message::Bit(_) => None,
            Message::Bits(v) => Some(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputSpace {
    Bit,
    Bits(usize),
}

impl OutputSpace {
    /// Every output, or `NotEnumerable` for vectors wider than
    /// [`MAX_ENUMERABLE_BITS`].
    pub fn enumerate(&self) -> Result<Vec<Message>> {
        match *self {
            OutputSpace::Bit => Ok(vec![Message::Bit(false), Message::Bit(true)]),
            OutputSpace::Bits(width) if width <= MAX_ENUMERABLE_BITS => Ok((0..1u64 << width)
                .map(|code| Message::Bits((0..width).map(|j| code >> j & 1 == 1).collect()))
                .collect()),
            OutputSpace::Bits(width) => Err(Error::NotEnumerable(width)),
        }
    }
}

/// A conditional distribution `W(y | x)` over inputs `[input_size]`.
pub trait Channel: Send + Sync {
    fn input_size(&self) -> usize;
    fn output_space(&self) -> OutputSpace;
    /// Privacy level the channel claims.
    fn rho(&self) -> f64;
    /// Exact `W(y | x)`; zero for messages outside the output space.
    fn prob(&self, y: &Message, x: usize) -> f64;
    fn sample(&self, x: usize, rng: &mut StreamRng) -> Message;
}

pub fn validate_rho(rho: f64) -> Result<f64> {
    if rho.is_finite() && rho > 0.0 {
        Ok(rho)
    } else {
        Err(invalid("rho", format!("{rho} is not a finite positive number")))
    }
}

/// `1/(e^ρ+1)`: flip probability of binary randomized response.
pub fn rr_flip(rho: f64) -> f64 {
    1.0 / (rho.exp() + 1.0)
}

/// `(e^ρ−1)/(e^ρ+1)`: gap between the two output biases of binary
/// randomized response.
pub fn rr_gain(rho: f64) -> f64 {
    (rho / 2.0).tanh()
}

fn bernoulli(p: f64) -> Bernoulli {
    Bernoulli::new(p).expect("probability lies in [0, 1]")
}

/// Coordinate-law constants of RAPPOR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RapporParams {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub flip: f64,
}

impl RapporParams {
    pub fn new(rho: f64) -> Result<Self> {
        let rho = validate_rho(rho)?;
        let flip = 1.0 / ((rho / 2.0).exp() + 1.0);
        Ok(Self {
            rho,
            alpha: (rho / 4.0).tanh(),
            beta: flip,
            flip,
        })
    }

    /// `λ = α·p + β`: bias of one output coordinate when its input mass is `p`.
    pub fn coordinate_bias(&self, p: f64) -> f64 {
        self.alpha * p + self.beta
    }
}

/// One-hot encode then flip every bit independently.
#[derive(Clone, Debug)]
pub struct Rappor {
    k: usize,
    rho: f64,
    flip: f64,
    coin: Bernoulli,
}

impl Rappor {
    pub fn new(k: usize, rho: f64) -> Result<Self> {
        let params = RapporParams::new(rho)?;
        Self::with_flip(k, rho, params.flip)
    }

    /// A RAPPOR-shaped channel claiming `rho` but flipping with an arbitrary
    /// probability. Used to build deliberately miscalibrated channels.
    pub fn with_flip(k: usize, rho: f64, flip: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&flip) {
            return Err(invalid("flip", format!("{flip} is not a probability")));
        }
        Ok(Self {
            k,
            rho: validate_rho(rho)?,
            flip,
            coin: bernoulli(flip),
        })
    }

    pub fn flip(&self) -> f64 {
        self.flip
    }
}

impl Channel for Rappor {
    fn input_size(&self) -> usize {
        self.k
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Bits(self.k)
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn prob(&self, y: &Message, x: usize) -> f64 {
        match y.as_bits() {
            Some(bits) if bits.len() == self.k && x < self.k => bits
                .iter()
                .enumerate()
                .map(|(j, &b)| if b == (j == x) { 1.0 - self.flip } else { self.flip })
                .product(),
            _ => 0.0,
        }
    }

    fn sample(&self, x: usize, rng: &mut StreamRng) -> Message {
        Message::Bits(
            (0..self.k)
                .map(|j| (j == x) ^ self.coin.sample(rng))
                .collect(),
        )
    }
}

/// Reports `1{x ∈ S}` through binary randomized response. With `S` a
/// Hadamard column set this is the one-bit Hadamard response.
#[derive(Clone, Debug)]
pub struct SubsetResponse {
    set: Subset,
    rho: f64,
    keep: Bernoulli,
}

impl SubsetResponse {
    /// Inputs range over `set.universe()`.
    pub fn new(set: Subset, rho: f64) -> Result<Self> {
        let rho = validate_rho(rho)?;
        Ok(Self {
            set,
            rho,
            keep: bernoulli(1.0 - rr_flip(rho)),
        })
    }

    pub fn set(&self) -> &Subset {
        &self.set
    }

    /// `Pr[B = 1 | x]`.
    pub fn one_prob(&self, x: usize) -> f64 {
        let keep = 1.0 - rr_flip(self.rho);
        if self.set.contains(x) {
            keep
        } else {
            1.0 - keep
        }
    }
}

/// One-bit Hadamard response for column set `c`.
pub fn hr_bit_channel(c: Subset, rho: f64) -> Result<SubsetResponse> {
    SubsetResponse::new(c, rho)
}

pub fn subset_then_rr(s: Subset, rho: f64) -> Result<SubsetResponse> {
    SubsetResponse::new(s, rho)
}

impl Channel for SubsetResponse {
    fn input_size(&self) -> usize {
        self.set.universe()
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Bit
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn prob(&self, y: &Message, x: usize) -> f64 {
        match y {
            Message::Bit(true) => self.one_prob(x),
            Message::Bit(false) => 1.0 - self.one_prob(x),
            Message::Bits(_) => 0.0,
        }
    }

    fn sample(&self, x: usize, rng: &mut StreamRng) -> Message {
        Message::Bit(self.set.contains(x) == self.keep.sample(rng))
    }
}

/// Binary randomized response over inputs `{0, 1}`.
#[derive(Clone, Debug)]
pub struct BinaryRr {
    inner: SubsetResponse,
}

impl BinaryRr {
    pub fn new(rho: f64) -> Result<Self> {
        let one = Subset::from_members(2, [1])?;
        Ok(Self {
            inner: SubsetResponse::new(one, rho)?,
        })
    }

    pub fn flip(&self) -> f64 {
        rr_flip(self.inner.rho)
    }

    /// Output bias when the input is Bernoulli(`p`).
    pub fn output_bias(&self, p: f64) -> f64 {
        self.flip() + p * rr_gain(self.inner.rho)
    }
}

pub fn rr_binary_channel(rho: f64) -> Result<BinaryRr> {
    BinaryRr::new(rho)
}

impl Channel for BinaryRr {
    fn input_size(&self) -> usize {
        2
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Bit
    }

    fn rho(&self) -> f64 {
        self.inner.rho
    }

    fn prob(&self, y: &Message, x: usize) -> f64 {
        self.inner.prob(y, x)
    }

    fn sample(&self, x: usize, rng: &mut StreamRng) -> Message {
        self.inner.sample(x, rng)
    }
}

/// Forwards a bit unchanged. Not private for any finite `ρ`.
#[derive(Clone, Copy, Debug)]
pub struct Noiseless {
    claimed_rho: f64,
}

impl Noiseless {
    pub fn new(claimed_rho: f64) -> Self {
        Self { claimed_rho }
    }
}

impl Channel for Noiseless {
    fn input_size(&self) -> usize {
        2
    }

    fn output_space(&self) -> OutputSpace {
        OutputSpace::Bit
    }

    fn rho(&self) -> f64 {
        self.claimed_rho
    }

    fn prob(&self, y: &Message, x: usize) -> f64 {
        match y {
            Message::Bit(b) if *b == (x == 1) => 1.0,
            _ => 0.0,
        }
    }

    fn sample(&self, x: usize, _rng: &mut StreamRng) -> Message {
        Message::Bit(x == 1)
    }
}

/// Exact `max_{y,x,x'} W(y|x') / W(y|x)` by enumeration. Returns
/// `f64::INFINITY` when some output has zero probability under one input
/// and positive probability under another.
pub fn ldp_ratio(ch: &dyn Channel) -> Result<f64> {
    let outputs = ch.output_space().enumerate()?;
    let mut worst = 1.0f64;
    for y in &outputs {
        let probs: Vec<f64> = (0..ch.input_size()).map(|x| ch.prob(y, x)).collect();
        let hi = probs.iter().copied().fold(0.0, f64::max);
        let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
        if hi == 0.0 {
            continue;
        }
        if lo == 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(hi / lo);
    }
    Ok(worst)
}

/// Whether the channel meets its claimed privacy level.
pub fn certify(ch: &dyn Channel) -> Result<bool> {
    Ok(ldp_ratio(ch)? <= ch.rho().exp() * (1.0 + LDP_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::rng::stream;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rappor_constants() {
        let p = RapporParams::new(2.0).unwrap();
        assert!(close(p.alpha, 0.462117, 1e-6));
        assert!(close(p.beta, 0.268941, 1e-6));
        for rho in [0.1, 0.5, 1.0, 2.0, 7.0] {
            let p = RapporParams::new(rho).unwrap();
            let e = (rho / 2.0).exp();
            assert!(close(p.alpha, (e - 1.0) / (e + 1.0), 1e-12));
            assert!(close(p.alpha, 1.0 - 2.0 * p.flip, 1e-12));
            assert_eq!(p.beta, p.flip);
        }
        assert!(RapporParams::new(0.0).is_err());
        assert!(RapporParams::new(-1.0).is_err());
        assert!(RapporParams::new(f64::NAN).is_err());
        assert!(Rappor::new(3, f64::INFINITY).is_err());
    }

    #[test]
    fn rappor_prob_is_per_bit_product() {
        let ch = Rappor::with_flip(2, 1.0, 0.25).unwrap();
        let y = Message::Bits(vec![false, true]);
        assert!(close(ch.prob(&y, 1), 0.5625, 1e-15));
        assert_eq!(ch.prob(&Message::Bit(true), 0), 0.0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let channels: Vec<Box<dyn Channel>> = vec![
            Box::new(Rappor::new(5, 0.7).unwrap()),
            Box::new(rr_binary_channel(1.3).unwrap()),
            Box::new(hr_bit_channel(Subset::from_members(6, [1, 4]).unwrap(), 0.4).unwrap()),
        ];
        for ch in &channels {
            let outputs = ch.output_space().enumerate().unwrap();
            for x in 0..ch.input_size() {
                let total: f64 = outputs.iter().map(|y| ch.prob(y, x)).sum();
                assert!(close(total, 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn rappor_ratio_is_exactly_e_rho() {
        for k in [2, 3] {
            for rho in [0.5, 1.0, 2.0] {
                let ratio = ldp_ratio(&Rappor::new(k, rho).unwrap()).unwrap();
                assert!(close(ratio, rho.exp(), 1e-12 * rho.exp()), "k={k} rho={rho}");
            }
        }
    }

    #[test]
    fn every_channel_certifies() {
        for rho in [0.25, 0.5, 1.0, 2.0] {
            for k in 1..=12 {
                assert!(certify(&Rappor::new(k, rho).unwrap()).unwrap());
            }
            assert!(certify(&rr_binary_channel(rho).unwrap()).unwrap());
            for k in [1, 4, 9, 33] {
                let spec = crate::hadamard::HadamardSpec::new(k);
                for c in spec.column_sets() {
                    let ch = hr_bit_channel(c.clone(), rho).unwrap();
                    assert!(close(ldp_ratio(&ch).unwrap(), rho.exp(), 1e-12 * rho.exp()) || c.len() == spec.order());
                    assert!(certify(&ch).unwrap());
                }
            }
        }
    }

    #[test]
    fn hr_bit_examples() {
        let rho = 3f64.ln();
        let ch = hr_bit_channel(Subset::from_members(4, [0, 1]).unwrap(), rho).unwrap();
        assert!(close(ch.prob(&Message::Bit(true), 0), 0.75, 1e-15));
        assert!(close(ch.prob(&Message::Bit(true), 3), 0.25, 1e-15));
        let empty = hr_bit_channel(Subset::empty(4), rho).unwrap();
        for x in 0..4 {
            assert!(close(empty.one_prob(x), 1.0 / (rho.exp() + 1.0), 1e-15));
        }
        assert!(close(ldp_ratio(&ch).unwrap(), 3.0, 1e-12));
    }

    #[test]
    fn rr_examples() {
        let ch = rr_binary_channel(3f64.ln()).unwrap();
        assert!(close(ch.flip(), 0.25, 1e-15));
        assert!(close(ch.prob(&Message::Bit(true), 1), 0.75, 1e-15));
        assert!(close(ch.prob(&Message::Bit(true), 0), 0.25, 1e-15));
        assert!(close(ch.output_bias(0.0), 0.25, 1e-15));
        assert!(close(ldp_ratio(&rr_binary_channel(1.0).unwrap()).unwrap(), 1f64.exp(), 1e-12));
    }

    #[test]
    fn subset_then_rr_extremes() {
        let rho = 1.0;
        let full = subset_then_rr(Subset::full(4), rho).unwrap();
        let none = subset_then_rr(Subset::empty(4), rho).unwrap();
        for x in 0..4 {
            assert!(close(full.one_prob(x), rho.exp() / (rho.exp() + 1.0), 1e-15));
            assert!(close(none.one_prob(x), 1.0 / (rho.exp() + 1.0), 1e-15));
        }
        let mixed = subset_then_rr(Subset::from_members(4, [2]).unwrap(), rho).unwrap();
        assert!(ldp_ratio(&mixed).unwrap() <= rho.exp() * (1.0 + LDP_TOLERANCE));
    }

    #[test]
    fn noiseless_is_infinitely_leaky() {
        assert_eq!(ldp_ratio(&Noiseless::new(1.0)).unwrap(), f64::INFINITY);
        assert!(!certify(&Noiseless::new(1.0)).unwrap());
    }

    #[test]
    fn wide_rappor_is_sampling_only() {
        let ch = Rappor::new(MAX_ENUMERABLE_BITS + 1, 1.0).unwrap();
        assert!(matches!(ldp_ratio(&ch), Err(Error::NotEnumerable(21))));
    }

    #[test]
    fn rappor_coordinate_law() {
        let k = 4;
        let rho = 1.0;
        let params = RapporParams::new(rho).unwrap();
        let ch = Rappor::new(k, rho).unwrap();
        let p = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let n = 1_000_000;
        let mut rng = stream(21, 0);
        let mut ones = vec![0usize; k];
        for x in p.sample(n, &mut rng) {
            for (j, &b) in ch.sample(x, &mut rng).as_bits().unwrap().iter().enumerate() {
                ones[j] += usize::from(b);
            }
        }
        for (j, &count) in ones.iter().enumerate() {
            let lambda = params.coordinate_bias(p.prob(j));
            let se = (lambda * (1.0 - lambda) / n as f64).sqrt();
            let freq = count as f64 / n as f64;
            assert!((freq - lambda).abs() < 3.0 * se + 1e-4, "coord {j}: {freq} vs {lambda}");
        }
    }

    #[test]
    fn one_bit_sampler_matches_evaluator() {
        let ch = hr_bit_channel(Subset::from_members(3, [1]).unwrap(), 0.8).unwrap();
        let n = 200_000;
        for x in 0..3 {
            let mut rng = stream(22, x as u64);
            let ones = (0..n).filter(|_| ch.sample(x, &mut rng) == Message::Bit(true)).count();
            let p = ch.prob(&Message::Bit(true), x);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((ones as f64 / n as f64 - p).abs() < 3.0 * se + 1e-4);
        }
    }

    mod props {
        use super::*;
        use crate::dist::Subset;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn proper_subset_responses_attain_exactly_e_rho(
                rho in 0.01f64..5.0,
                indicator in proptest::collection::vec(any::<bool>(), 2..12),
            ) {
                let set = Subset::from_indicator(&indicator);
                prop_assume!(!set.is_empty() && set.len() < indicator.len());
                let ratio = ldp_ratio(&subset_then_rr(set, rho).unwrap()).unwrap();
                prop_assert!((ratio / rho.exp() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn rappor_attains_exactly_e_rho(rho in 0.01f64..5.0, k in 2usize..9) {
                let ratio = ldp_ratio(&Rappor::new(k, rho).unwrap()).unwrap();
                prop_assert!((ratio / rho.exp() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn rappor_coordinate_bias_matches_channel(rho in 0.01f64..5.0, mass in 0.0f64..=1.0) {
                let params = RapporParams::new(rho).unwrap();
                let f = params.flip;
                let direct = mass * (1.0 - f) + (1.0 - mass) * f;
                prop_assert!((params.coordinate_bias(mass) - direct).abs() < 1e-12);
            }
        }
    }
}
