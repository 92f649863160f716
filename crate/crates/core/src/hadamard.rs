//! Sylvester Hadamard matrices and their column sets.

use crate::dist::{Distribution, Subset};
use crate::error::{Error, Result};

/// Entry `(i, j)` of the Sylvester matrix of any order larger than both
/// indices: `(-1)^{popcount(i & j)}`.
#[inline]
pub fn sylvester_entry(i: usize, j: usize) -> i8 {
    if (i & j).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// The Sylvester Hadamard matrix of the given order, row-major.
pub fn sylvester(order: usize) -> Result<Vec<Vec<i8>>> {
    if !order.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(order));
    }
    let mut h = vec![vec![1i8]];
    while h.len() < order {
        let m = h.len();
        let mut next = vec![vec![0i8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                let v = h[i][j];
                next[i][j] = v;
                next[i][j + m] = v;
                next[i + m][j] = v;
                next[i + m][j + m] = -v;
            }
        }
        h = next;
    }
    Ok(h)
}

/// Smallest power of two strictly larger than `k`.
pub fn smallest_order(k: usize) -> usize {
    (k + 1).next_power_of_two()
}

/// A Hadamard matrix sized for a domain of `k` elements together with its
/// column sets `C_j = { i : H[i][j] = +1 }`.
#[derive(Clone, Debug)]
pub struct HadamardSpec {
    k: usize,
    order: usize,
    column_sets: Vec<Subset>,
}

impl HadamardSpec {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "Hadamard spec over an empty domain");
        let order = smallest_order(k);
        let column_sets = (0..order)
            .map(|j| {
                let indicator: Vec<bool> = (0..order).map(|i| sylvester_entry(i, j) == 1).collect();
                Subset::from_indicator(&indicator)
            })
            .collect();
        Self {
            k,
            order,
            column_sets,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Matrix order `K`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn column_sets(&self) -> &[Subset] {
        &self.column_sets
    }

    pub fn column_set(&self, j: usize) -> &Subset {
        &self.column_sets[j]
    }

    /// `p(C_j)` for every column.
    pub fn column_masses(&self, p: &Distribution) -> Vec<f64> {
        self.column_sets.iter().map(|c| subset_mass(p, c)).collect()
    }
}

/// Alias with the conventional name.
pub fn column_sets(k: usize) -> HadamardSpec {
    HadamardSpec::new(k)
}

/// `p(C)`, treating elements of `C` beyond the support of `p` as mass zero.
pub fn subset_mass(p: &Distribution, c: &Subset) -> f64 {
    p.mass_of(c)
}
