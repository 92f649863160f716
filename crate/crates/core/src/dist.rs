//! Probability distributions over finite domains.
//!
//! Domain elements are 0-based: a distribution over `[k]` assigns mass to
//! `0..k`. Joint distributions over `[k1]×[k2]` are stored row-major.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Absolute tolerance for normalization invariants.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Inputs further than this from summing to one are rejected rather than
/// renormalized.
const NORMALIZE_SLACK: f64 = 1e-9;

fn normalized(mass: Vec<f64>) -> Result<Vec<f64>> {
    if mass.is_empty() {
        return Err(Error::InvalidDistribution("empty domain".into()));
    }
    if let Some((i, &v)) = mass.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {v}, expected a finite non-negative number"
        )));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > NORMALIZE_SLACK {
        return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
    }
    Ok(mass.into_iter().map(|v| v / total).collect())
}

/// A probability mass function over `[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    mass: Vec<f64>,
}

impl Distribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        Ok(Self {
            mass: normalized(mass)?,
        })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution over an empty domain");
        Self {
            mass: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, x: usize) -> Result<Self> {
        if x >= k {
            return Err(invalid("x", format!("{x} is outside [0, {k})")));
        }
        let mut mass = vec![0.0; k];
        mass[x] = 1.0;
        Ok(Self { mass })
    }

    /// Builds a distribution from arbitrary non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Uniformly random point of the simplex (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let weights: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        Self::from_weights(&weights).expect("exponential weights are positive")
    }

    pub fn k(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    /// Total mass of `set`; members outside `[k]` carry zero mass.
    pub fn mass_of(&self, set: &Subset) -> f64 {
        set.members().iter().map(|&x| self.prob(x)).sum()
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let sampler = self.sampler();
        (0..n).map(|_| sampler.draw(rng)).collect()
    }
}

fn check_same_domain(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::DomainMismatch {
            left: p.k(),
            right: q.k(),
        });
    }
    Ok(())
}

/// Total variation distance, half the ℓ1 distance.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_domain(p, q)?;
    let l1: f64 = p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}

/// Squared ℓ2 distance.
pub fn l2_distance_sq(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_domain(p, q)?;
    Ok(p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Inverse-CDF sampler over a cumulative table; `O(log k)` per draw.
#[derive(Clone, Debug)]
pub struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new(p: &Distribution) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = p
            .mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        // Pin the top of the table to the last element with mass so that
        // rounding never returns a zero-mass element or overruns the table.
        let last = p.mass.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        for c in cumulative[last..].iter_mut() {
            *c = f64::INFINITY;
        }
        Self { cumulative }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// A probability mass function over `[k1]×[k2]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    k1: usize,
    k2: usize,
    mass: Vec<f64>,
}

impl JointDistribution {
    pub fn new(k1: usize, k2: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != k1 * k2 {
            return Err(Error::LengthMismatch {
                expected: k1 * k2,
                actual: mass.len(),
            });
        }
        Ok(Self {
            k1,
            k2,
            mass: normalized(mass)?,
        })
    }

    /// `(p1⊗p2)(x1, x2) = p1(x1)·p2(x2)`.
    pub fn product(p1: &Distribution, p2: &Distribution) -> Self {
        let mass = p1
            .mass
            .iter()
            .flat_map(|a| p2.mass.iter().map(move |b| a * b))
            .collect();
        Self {
            k1: p1.k(),
            k2: p2.k(),
            mass,
        }
    }

    pub fn uniform(k1: usize, k2: usize) -> Self {
        Self::product(&Distribution::uniform(k1), &Distribution::uniform(k2))
    }

    /// Uniform on the diagonal of `[k]×[k]`: both coordinates equal.
    pub fn diagonal(k: usize) -> Self {
        let mut mass = vec![0.0; k * k];
        for i in 0..k {
            mass[i * k + i] = 1.0 / k as f64;
        }
        Self { k1: k, k2: k, mass }
    }

    pub fn random<R: Rng + ?Sized>(k1: usize, k2: usize, rng: &mut R) -> Self {
        let flat = Distribution::random(k1 * k2, rng);
        Self {
            k1,
            k2,
            mass: flat.mass,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    pub fn prob(&self, x1: usize, x2: usize) -> f64 {
        self.mass[x1 * self.k2 + x2]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn marginals(&self) -> (Distribution, Distribution) {
        let mut m1 = vec![0.0; self.k1];
        let mut m2 = vec![0.0; self.k2];
        for (idx, &v) in self.mass.iter().enumerate() {
            m1[idx / self.k2] += v;
            m2[idx % self.k2] += v;
        }
        (Distribution { mass: m1 }, Distribution { mass: m2 })
    }

    /// Product of this distribution's own marginals.
    pub fn marginal_product(&self) -> Self {
        let (p1, p2) = self.marginals();
        Self::product(&p1, &p2)
    }

    /// The same masses viewed as a distribution over `[k1·k2]`.
    pub fn flatten(&self) -> Distribution {
        Distribution {
            mass: self.mass.clone(),
        }
    }

    pub fn from_flat(k1: usize, k2: usize, flat: &Distribution) -> Result<Self> {
        Self::new(k1, k2, flat.mass.clone())
    }

    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DomainMismatch {
                left: self.mass.len(),
                right: other.mass.len(),
            });
        }
        tv_distance(&self.flatten(), &other.flatten())
    }

    /// `n` i.i.d. pairs.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let sampler = self.flatten().sampler();
        (0..n)
            .map(|_| {
                let idx = sampler.draw(rng);
                (idx / self.k2, idx % self.k2)
            })
            .collect()
    }
}

/// A vector of ±1 signs indexing one member of the Paninski family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPattern {
    bits: Vec<i8>,
}

impl SignPattern {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(invalid("z", "entries must be +1 or -1"));
        }
        Ok(Self { bits })
    }

    pub fn all_plus(len: usize) -> Self {
        Self { bits: vec![1; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }
}

/// Member `z` of the Paninski family over `[k_sq]`: consecutive pairs
/// `(2i, 2i+1)` receive `(1 ∓ 2γ·z_i)/k_sq`, placing it at total variation
/// distance exactly `γ` from uniform.
pub fn paninski(k_sq: usize, gamma: f64, z: &SignPattern) -> Result<Distribution> {
    if k_sq == 0 || !k_sq.is_multiple_of(2) {
        return Err(Error::OddDomain(k_sq));
    }
    if !(0.0..=0.5).contains(&gamma) {
        return Err(invalid("gamma", format!("{gamma} is outside [0, 1/2]")));
    }
    if z.len() != k_sq / 2 {
        return Err(Error::LengthMismatch {
            expected: k_sq / 2,
            actual: z.len(),
        });
    }
    let base = 1.0 / k_sq as f64;
    let mass = z
        .bits
        .iter()
        .flat_map(|&s| {
            let shift = 2.0 * gamma * f64::from(s);
            [(1.0 - shift) * base, (1.0 + shift) * base]
        })
        .collect();
    Ok(Distribution { mass })
}

/// A subset of `[universe]`, kept both as a sorted member list and as a
/// bitset for constant-time membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subset {
    universe: usize,
    members: Vec<usize>,
    words: Vec<u64>,
}

impl Subset {
    pub fn from_members(universe: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut words = vec![0u64; universe.div_ceil(64)];
        for x in members {
            if x >= universe {
                return Err(invalid("subset", format!("{x} is outside [0, {universe})")));
            }
            words[x / 64] |= 1 << (x % 64);
        }
        Ok(Self::from_words(universe, words))
    }

    pub fn from_indicator(indicator: &[bool]) -> Self {
        let mut words = vec![0u64; indicator.len().div_ceil(64)];
        for (x, _) in indicator.iter().enumerate().filter(|(_, &b)| b) {
            words[x / 64] |= 1 << (x % 64);
        }
        Self::from_words(indicator.len(), words)
    }

    fn from_words(universe: usize, words: Vec<u64>) -> Self {
        let members = (0..universe)
            .filter(|&x| words[x / 64] >> (x % 64) & 1 == 1)
            .collect();
        Self {
            universe,
            members,
            words,
        }
    }

    pub fn empty(universe: usize) -> Self {
        Self::from_words(universe, vec![0; universe.div_ceil(64)])
    }

    pub fn full(universe: usize) -> Self {
        Self::from_indicator(&vec![true; universe])
    }

    /// Uniformly random subset: each element joins independently w.p. 1/2.
    pub fn random<R: Rng + ?Sized>(universe: usize, rng: &mut R) -> Self {
        let indicator: Vec<bool> = (0..universe).map(|_| rng.gen()).collect();
        Self::from_indicator(&indicator)
    }

    /// `{ a·width + b : a ∈ rows, b ∈ cols }` inside `[rows.universe × cols.universe]`.
    pub fn product(rows: &Subset, cols: &Subset) -> Self {
        let width = cols.universe;
        let mut indicator = vec![false; rows.universe * width];
        for &a in &rows.members {
            for &b in &cols.members {
                indicator[a * width + b] = true;
            }
        }
        Self::from_indicator(&indicator)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        x < self.universe && self.words[x / 64] >> (x % 64) & 1 == 1
    }
}
