//! Embedding of distributions over `[k²]` into joint distributions over
//! `[2k]×[2k]` whose marginals are uniform whenever the input is a member of
//! the Paninski family.
//!
//! The target grid is tiled by `2ℓ²` blocks (`ℓ = k/2`) of two rows and four
//! columns. Block `i` (1-based) sits at block-row `⌊(i−1)/ℓ⌋` and
//! block-column `(i−1) mod ℓ` and is laid out as
//!
//! ```text
//! a1 b1 a2 b2
//! b3 a3 b4 a4
//! ```
//!
//! Element `2i−1` of the source spreads its mass evenly over the `a` cells
//! of block `i`, element `2i` over the `b` cells.

use rand::Rng;

use crate::dist::{paninski, Distribution, JointDistribution, SignPattern};
use crate::error::{invalid, Error, Result};

/// Block coordinates for a source domain of size `k²`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    k: usize,
}

/// Column offsets (1..=4) of `a_{i,1..4}` and `b_{i,1..4}` within a block,
/// paired with the block row (1 or 2).
const A_OFFSETS: [(usize, usize); 4] = [(1, 1), (1, 3), (2, 2), (2, 4)];
const B_OFFSETS: [(usize, usize); 4] = [(1, 2), (1, 4), (2, 1), (2, 3)];

impl BlockLayout {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || !k.is_multiple_of(2) {
            return Err(Error::OddDomain(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.k / 2
    }

    /// Number of blocks, `2ℓ² = k²/2`.
    pub fn blocks(&self) -> usize {
        2 * self.ell() * self.ell()
    }

    /// Side of the target grid, `2k`.
    pub fn side(&self) -> usize {
        2 * self.k
    }

    /// `(r_i, c_i)` for block `i ∈ [1, 2ℓ²]`.
    pub fn block_origin(&self, i: usize) -> (usize, usize) {
        assert!((1..=self.blocks()).contains(&i), "block {i} out of range");
        ((i - 1) / self.ell(), (i - 1) % self.ell())
    }

    fn cell(&self, i: usize, (dr, dc): (usize, usize)) -> (usize, usize) {
        let (r, c) = self.block_origin(i);
        (2 * r + dr, 4 * c + dc)
    }

    /// `a_{i,j}` for `j ∈ [1, 4]`, as a 1-based `(row, column)`.
    pub fn a(&self, i: usize, j: usize) -> (usize, usize) {
        self.cell(i, A_OFFSETS[j - 1])
    }

    /// `b_{i,j}` for `j ∈ [1, 4]`, as a 1-based `(row, column)`.
    pub fn b(&self, i: usize, j: usize) -> (usize, usize) {
        self.cell(i, B_OFFSETS[j - 1])
    }

    /// The four 1-based cells that receive the mass of source element
    /// `x ∈ [1, k²]`.
    pub fn cells_of(&self, x: usize) -> [(usize, usize); 4] {
        let i = x.div_ceil(2);
        let offsets = if x % 2 == 1 { A_OFFSETS } else { B_OFFSETS };
        offsets.map(|o| self.cell(i, o))
    }
}

fn square_root_side(len: usize) -> Result<usize> {
    let k = (len as f64).sqrt().round() as usize;
    if k * k != len {
        return Err(invalid("p", format!("domain size {len} is not a perfect square")));
    }
    Ok(k)
}

/// `Φ(p)`: mass `p(2i−1)/4` on each `a` cell of block `i`, `p(2i)/4` on each
/// `b` cell.
pub fn phi_map(p: &Distribution) -> Result<JointDistribution> {
    let layout = BlockLayout::new(square_root_side(p.k())?)?;
    let side = layout.side();
    let mut mass = vec![0.0; side * side];
    for (x0, &px) in p.mass().iter().enumerate() {
        for (r, c) in layout.cells_of(x0 + 1) {
            mass[(r - 1) * side + (c - 1)] = px / 4.0;
        }
    }
    JointDistribution::new(side, side, mass)
}

/// Maps one sample `x ∈ [0, k²)` of `p` to a sample of `Φ(p)` over
/// `[0, 2k)²`: a uniform choice among the four cells carrying `x`'s mass.
pub fn phi_sample_convert<R: Rng + ?Sized>(layout: &BlockLayout, x: usize, rng: &mut R) -> Result<(usize, usize)> {
    if x >= layout.k() * layout.k() {
        return Err(invalid("x", format!("{x} is outside [0, {})", layout.k() * layout.k())));
    }
    let (r, c) = layout.cells_of(x + 1)[rng.gen_range(0..4)];
    Ok((r - 1, c - 1))
}

/// `Φ(p_z)` for the Paninski member `p_z` over `[k²]` at distance `3ε` from
/// uniform; at least `ε`-far from every product distribution.
pub fn independence_hardness_instance(k: usize, eps: f64, z: &SignPattern) -> Result<JointDistribution> {
    BlockLayout::new(k)?;
    if !(eps > 0.0 && 3.0 * eps <= 0.5) {
        return Err(invalid("eps", format!("need 0 < 3·{eps} ≤ 1/2")));
    }
    phi_map(&paninski(k * k, 3.0 * eps, z)?)
}

fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.iter().map(|&v| v as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            rec(dim, left - v, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Smallest TV distance from `joint` to a product of two marginals taken
/// from the grid `{v/steps}` on each simplex. Only meant for tiny domains;
/// the grid minimum upper-bounds the true infimum.
pub fn nearest_product_tv_on_grid(joint: &JointDistribution, steps: usize) -> f64 {
    let (k1, k2) = joint.dims();
    let rows = simplex_grid(k1, steps);
    let cols = simplex_grid(k2, steps);
    let mass = joint.mass();
    let mut best = f64::INFINITY;
    for a in &rows {
        for b in &cols {
            let mut l1 = 0.0;
            for (x, &ax) in a.iter().enumerate() {
                for (y, &by) in b.iter().enumerate() {
                    l1 += (mass[x * k2 + y] - ax * by).abs();
                }
            }
            best = best.min(0.5 * l1);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tv_distance;
    use crate::rng::stream;

    #[test]
    fn layout_for_k2_matches_hand_drawing() {
        // k = 2: ℓ = 1, two blocks stacked vertically in a 4×4 grid.
        let l = BlockLayout::new(2).unwrap();
        assert_eq!(l.blocks(), 2);
        assert_eq!(l.a(1, 1), (1, 1));
        assert_eq!(l.b(1, 1), (1, 2));
        assert_eq!(l.a(1, 2), (1, 3));
        assert_eq!(l.b(1, 2), (1, 4));
        assert_eq!(l.b(1, 3), (2, 1));
        assert_eq!(l.a(1, 3), (2, 2));
        assert_eq!(l.b(1, 4), (2, 3));
        assert_eq!(l.a(1, 4), (2, 4));
        assert_eq!(l.a(2, 1), (3, 1));
        assert_eq!(l.a(2, 4), (4, 4));
        assert_eq!(l.b(2, 3), (4, 1));
        assert!(BlockLayout::new(3).is_err());
    }

    #[test]
    fn blocks_tile_the_grid() {
        for k in [2, 4, 6, 8] {
            let l = BlockLayout::new(k).unwrap();
            let side = l.side();
            let mut hits = vec![0u32; side * side];
            for i in 1..=l.blocks() {
                for j in 1..=4 {
                    for (r, c) in [l.a(i, j), l.b(i, j)] {
                        hits[(r - 1) * side + (c - 1)] += 1;
                    }
                }
            }
            assert!(hits.iter().all(|&h| h == 1), "k={k}");
        }
    }

    #[test]
    fn uniform_maps_to_uniform() {
        let joint = phi_map(&Distribution::uniform(4)).unwrap();
        assert!(joint.mass().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));
        assert!(phi_map(&Distribution::uniform(5)).is_err());
        assert!(phi_map(&Distribution::uniform(9)).is_err());
    }

    #[test]
    fn paninski_example() {
        let z = SignPattern::all_plus(2);
        let p = paninski(4, 0.25, &z).unwrap();
        let joint = phi_map(&p).unwrap();
        let u = JointDistribution::uniform(4, 4);
        assert!((joint.tv_distance(&u).unwrap() - 0.25).abs() < 1e-12);
        let (m1, m2) = joint.marginals();
        for m in [m1, m2] {
            assert!(m.mass().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
        assert_eq!(independence_hardness_instance(2, 1.0 / 12.0, &z).unwrap(), joint);
    }

    #[test]
    fn block_row_and_column_sums() {
        let mut rng = stream(40, 0);
        let k = 4;
        let l = BlockLayout::new(k).unwrap();
        let p = Distribution::random(k * k, &mut rng);
        let joint = phi_map(&p).unwrap();
        for i in 1..=l.blocks() {
            let pair = p.prob(2 * i - 2) + p.prob(2 * i - 1);
            let (r, c) = l.block_origin(i);
            for dr in 0..2 {
                let row: f64 = (0..4).map(|dc| joint.prob(2 * r + dr, 4 * c + dc)).sum();
                assert!((row - pair / 2.0).abs() < 1e-15);
            }
            for dc in 0..4 {
                let col: f64 = (0..2).map(|dr| joint.prob(2 * r + dr, 4 * c + dc)).sum();
                assert!((col - pair / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tv_is_preserved() {
        let mut rng = stream(41, 0);
        for k in [2, 4] {
            for _ in 0..500 {
                let p = Distribution::random(k * k, &mut rng);
                let q = Distribution::random(k * k, &mut rng);
                let lhs = phi_map(&p).unwrap().tv_distance(&phi_map(&q).unwrap()).unwrap();
                assert!((lhs - tv_distance(&p, &q).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn converter_rejects_out_of_range() {
        let l = BlockLayout::new(2).unwrap();
        assert!(phi_sample_convert(&l, 4, &mut stream(0, 0)).is_err());
        assert!(independence_hardness_instance(2, 0.2, &SignPattern::all_plus(2)).is_err());
        assert!(independence_hardness_instance(3, 0.1, &SignPattern::all_plus(2)).is_err());
    }

    #[test]
    fn converter_first_element_hits_a_cells() {
        let l = BlockLayout::new(2).unwrap();
        let mut rng = stream(42, 0);
        let n = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(phi_sample_convert(&l, 0, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        let expected: Vec<(usize, usize)> = (1..=4).map(|j| l.a(1, j)).map(|(r, c)| (r - 1, c - 1)).collect();
        assert_eq!(counts.len(), 4);
        let se = (0.25 * 0.75 / n as f64).sqrt();
        for cell in expected {
            let freq = counts[&cell] as f64 / n as f64;
            assert!((freq - 0.25).abs() < 3.0 * se + 1e-3, "{cell:?}: {freq}");
        }
    }

    #[test]
    fn grid_oracle_on_hardness_instance() {
        let eps = 1.0 / 12.0;
        let joint = independence_hardness_instance(2, eps, &SignPattern::new(vec![1, -1]).unwrap()).unwrap();
        let steps = 20;
        let best = nearest_product_tv_on_grid(&joint, steps);
        assert!(best >= eps - 1.0 / steps as f64, "{best}");
        // Uniform marginals: the uniform product is on the grid and sits at 3ε.
        assert!(best <= 3.0 * eps + 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(0.01f64..1.0, len)
        }

        proptest! {
            #[test]
            fn embedding_preserves_tv(half in 1usize..4, seed in any::<u64>()) {
                let k = 2 * half;
                let mut rng = stream(seed, 0);
                let p = Distribution::random(k * k, &mut rng);
                let q = Distribution::random(k * k, &mut rng);
                let mapped = phi_map(&p).unwrap().tv_distance(&phi_map(&q).unwrap()).unwrap();
                prop_assert!((mapped - tv_distance(&p, &q).unwrap()).abs() < 1e-12);
            }

            #[test]
            fn paninski_members_embed_with_uniform_marginals(
                half in 1usize..4,
                gamma in 0.0f64..=0.5,
                seed in any::<u64>(),
            ) {
                let k = 2 * half;
                let z = SignPattern::random(k * k / 2, &mut stream(seed, 1));
                let joint = phi_map(&paninski(k * k, gamma, &z).unwrap()).unwrap();
                let (m1, m2) = joint.marginals();
                for v in m1.mass().iter().chain(m2.mass()) {
                    prop_assert!((v - 1.0 / (2 * k) as f64).abs() < 1e-12);
                }
            }

            #[test]
            fn converter_lands_on_cells_carrying_the_sample(w in weights(16), seed in any::<u64>()) {
                let p = Distribution::from_weights(&w).unwrap();
                let layout = BlockLayout::new(4).unwrap();
                let target = phi_map(&p).unwrap();
                let mut rng = stream(seed, 2);
                for x in 0..16 {
                    let (r, c) = phi_sample_convert(&layout, x, &mut rng).unwrap();
                    prop_assert!((target.prob(r, c) - p.prob(x) / 4.0).abs() < 1e-15);
                }
            }
        }
    }
}
