use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::EnumError;

/// Whether every variable of a scope must receive at least one hole.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// Exactly `n` non-empty blocks.
    #[default]
    #[serde(alias = "exact")]
    ExactBlocks,
    /// Between 1 and `n` non-empty blocks (unused variables allowed).
    #[serde(alias = "atmost", alias = "at_most")]
    AtMostBlocks,
}

/// A set partition in restricted-growth-string form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PartitionRGS {
    pub codes: Vec<usize>,
    pub block_count: usize,
}

impl PartitionRGS {
    pub fn from_codes(codes: Vec<usize>) -> Option<PartitionRGS> {
        let mut max: Option<usize> = None;
        for &c in &codes {
            let limit = max.map_or(0, |m| m + 1);
            if c > limit {
                return None;
            }
            max = Some(max.map_or(c, |m| m.max(c)));
        }
        Some(PartitionRGS { block_count: max.map_or(0, |m| m + 1), codes })
    }

    /// Blocks as lists of 1-based item ids.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count];
        for (i, &c) in self.codes.iter().enumerate() {
            out[c].push(i + 1);
        }
        out
    }
}

/// Stirling number of the second kind: partitions of `k` items into `n`
/// non-empty blocks.
pub fn stirling2(k: usize, n: usize) -> BigUint {
    if n > k {
        return BigUint::zero();
    }
    // row[j] = S(i, j) for the current i
    let mut row = vec![BigUint::zero(); n + 1];
    row[0] = BigUint::one();
    for _ in 0..k {
        for j in (1..=n).rev() {
            let prev = std::mem::take(&mut row[j]);
            row[j] = prev * j + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row[n].clone()
}

/// Number of partitions `enumerate_partitions(k, n, mode)` yields.
pub fn partition_count(k: usize, n: usize, mode: PartitionMode) -> BigUint {
    match mode {
        PartitionMode::ExactBlocks => stirling2(k, n),
        PartitionMode::AtMostBlocks if k == 0 => BigUint::one(),
        PartitionMode::AtMostBlocks => (1..=n).map(|i| stirling2(k, i)).sum(),
    }
}

/// Lexicographic stream of restricted growth strings of length `k` with at
/// most `n` blocks, or exactly `n` in exact mode.
pub fn enumerate_partitions(k: usize, n: usize, mode: PartitionMode) -> Result<Partitions, EnumError> {
    let exact = mode == PartitionMode::ExactBlocks;
    if exact && (k < n || (n == 0 && k > 0)) {
        return Err(EnumError::EmptyEnumeration { items: k, blocks: n });
    }
    if !exact && n == 0 && k > 0 {
        return Err(EnumError::EmptyEnumeration { items: k, blocks: n });
    }
    let mut codes = vec![0; k];
    if exact && n > 0 {
        for (j, c) in codes[k - n + 1..].iter_mut().enumerate() {
            *c = j + 1;
        }
    }
    Ok(Partitions { codes: Some(codes), n, exact })
}

pub struct Partitions {
    codes: Option<Vec<usize>>,
    n: usize,
    exact: bool,
}

impl Partitions {
    fn advance(&self, codes: &mut [usize]) -> bool {
        let k = codes.len();
        for i in (1..k).rev() {
            let prefix_max = codes[..i].iter().copied().max().unwrap_or(0);
            let hi = (prefix_max + 1).min(self.n - 1);
            for v in codes[i] + 1..=hi {
                let blocks = prefix_max.max(v) + 1;
                let rest = k - i - 1;
                if self.exact && self.n - blocks > rest {
                    continue;
                }
                codes[i] = v;
                // smallest tail: zeros, then the missing blocks in order
                let missing = if self.exact { self.n - blocks } else { 0 };
                for (j, c) in codes[i + 1..].iter_mut().enumerate() {
                    *c = if j + missing >= rest { blocks + j + missing - rest } else { 0 };
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = PartitionRGS;

    fn next(&mut self) -> Option<PartitionRGS> {
        let current = self.codes.take()?;
        let mut succ = current.clone();
        if self.advance(&mut succ) {
            self.codes = Some(succ);
        }
        PartitionRGS::from_codes(current)
    }
}
