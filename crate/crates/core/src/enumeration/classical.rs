//! Scope-respecting classical assignments, one per orbit under per-scope
//! variable renaming.
//!
//! Each hole picks an owning scope among the variable-bearing scopes that
//! enclose it, then a block of that scope's partition. Blocks are numbered
//! by first hole and bound to the scope's variables in declaration order.
//! Counting and unranking run a memoized DP over (hole position, per-scope
//! block counts), so huge spaces can be sampled without being listed.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::skeleton::{ClassicalAssignment, Skeleton};

use super::partitions::PartitionMode;
use super::EnumError;

pub struct ClassicalSpace {
    mode: PartitionMode,
    /// Per hole: eligible owner slots, outermost scope first.
    choices: Vec<Vec<usize>>,
    /// Per owner slot: the scope's variables in declaration order.
    vars: Vec<Vec<String>>,
    hole_ids: Vec<usize>,
    memo: HashMap<(usize, Vec<u8>), BigUint>,
    total: BigUint,
}

impl ClassicalSpace {
    pub fn new(sk: &Skeleton, mode: PartitionMode) -> Result<ClassicalSpace, EnumError> {
        let tree = &sk.scopes;
        let owners: Vec<usize> = tree.scopes.iter().filter(|s| !s.vars.is_empty()).map(|s| s.id).collect();
        let vars: Vec<Vec<String>> = owners.iter().map(|&s| tree.scopes[s].vars.clone()).collect();
        let mut choices = Vec::with_capacity(sk.classical_holes.len());
        for h in &sk.classical_holes {
            let eligible: Vec<usize> = tree
                .chain(h.scope)
                .into_iter()
                .filter_map(|s| owners.iter().position(|&o| o == s))
                .collect();
            if eligible.is_empty() {
                return Err(EnumError::NoEligibleVariable { hole: h.id });
            }
            choices.push(eligible);
        }
        let mut space = ClassicalSpace {
            mode,
            choices,
            vars,
            hole_ids: sk.classical_holes.iter().map(|h| h.id).collect(),
            memo: HashMap::new(),
            total: BigUint::zero(),
        };
        let start = vec![0u8; space.vars.len()];
        space.total = space.count(0, &start);
        if space.total.is_zero() {
            return Err(EnumError::EmptyEnumeration { items: space.hole_ids.len(), blocks: space.var_count() });
        }
        Ok(space)
    }

    fn var_count(&self) -> usize {
        self.vars.iter().map(Vec::len).sum()
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    fn accepts(&self, state: &[u8]) -> bool {
        match self.mode {
            PartitionMode::ExactBlocks => state.iter().zip(&self.vars).all(|(&b, v)| b as usize == v.len()),
            PartitionMode::AtMostBlocks => true,
        }
    }

    fn count(&mut self, pos: usize, state: &[u8]) -> BigUint {
        if pos == self.choices.len() {
            return if self.accepts(state) { BigUint::one() } else { BigUint::zero() };
        }
        if let Some(v) = self.memo.get(&(pos, state.to_vec())) {
            return v.clone();
        }
        let mut total = BigUint::zero();
        let mut next = state.to_vec();
        for i in 0..self.choices[pos].len() {
            let s = self.choices[pos][i];
            if state[s] > 0 {
                total += self.count(pos + 1, state) * state[s] as u32;
            }
            if (state[s] as usize) < self.vars[s].len() {
                next[s] += 1;
                total += self.count(pos + 1, &next);
                next[s] -= 1;
            }
        }
        self.memo.insert((pos, state.to_vec()), total.clone());
        total
    }

    /// The assignment with the given rank in enumeration order.
    pub fn unrank(&mut self, rank: &BigUint) -> ClassicalAssignment {
        assert!(rank < &self.total, "rank out of range");
        let mut r = rank.clone();
        let mut state = vec![0u8; self.vars.len()];
        let mut out = ClassicalAssignment::new();
        for pos in 0..self.choices.len() {
            let mut chosen = None;
            for i in 0..self.choices[pos].len() {
                let s = self.choices[pos][i];
                let b = state[s] as usize;
                if b > 0 {
                    let sub = self.count(pos + 1, &state);
                    let span = &sub * b as u32;
                    if r < span {
                        let j = (&r / &sub).to_usize().unwrap();
                        r %= &sub;
                        chosen = Some((s, j));
                        break;
                    }
                    r -= span;
                }
                if b < self.vars[s].len() {
                    state[s] += 1;
                    let sub = self.count(pos + 1, &state);
                    if r < sub {
                        chosen = Some((s, b));
                        break;
                    }
                    state[s] -= 1;
                    r -= sub;
                }
            }
            let (s, j) = chosen.expect("rank within subtree total");
            out.insert(self.hole_ids[pos], self.vars[s][j].clone());
        }
        out
    }

    pub fn iter(&mut self) -> impl Iterator<Item = ClassicalAssignment> + '_ {
        let total = self.total.clone();
        let mut rank = BigUint::zero();
        std::iter::from_fn(move || {
            if rank >= total {
                return None;
            }
            let a = self.unrank(&rank);
            rank += 1u32;
            Some(a)
        })
    }
}

/// All scope-respecting classical assignments of `sk`, one per equivalence
/// class under per-scope variable renaming, in rank order.
pub fn enumerate_classical(sk: &Skeleton, mode: PartitionMode) -> Result<Vec<ClassicalAssignment>, EnumError> {
    let mut space = ClassicalSpace::new(sk, mode)?;
    Ok(space.iter().collect())
}

/// |V|^|H| over all variables and classical holes, ignoring scopes.
pub fn naive_count(sk: &Skeleton) -> BigUint {
    let vars = sk.scopes.all_vars().len();
    BigUint::from(vars).pow(sk.classical_holes.len() as u32)
}

/// Product over holes of the number of variables eligible at the hole.
pub fn scope_valid_count(sk: &Skeleton) -> BigUint {
    sk.classical_holes
        .iter()
        .map(|h| BigUint::from(sk.scopes.eligible_vars(h.scope).len()))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{demo, parse};
    use crate::skeleton::extract;
    use std::collections::{BTreeMap, HashSet};

    /// Orbits of scope-legal labelings under per-scope variable permutations,
    /// found by listing every labeling.
    fn brute_force_orbits(sk: &Skeleton, mode: PartitionMode) -> HashSet<Vec<String>> {
        let eligible: Vec<Vec<&str>> =
            sk.classical_holes.iter().map(|h| sk.scopes.eligible_vars(h.scope)).collect();
        let mut orbits = HashSet::new();
        let mut idx = vec![0usize; eligible.len()];
        loop {
            let labels: Vec<&str> = idx.iter().zip(&eligible).map(|(&i, e)| e[i]).collect();
            let all_used = sk.scopes.all_vars().iter().all(|v| labels.contains(v));
            if mode == PartitionMode::AtMostBlocks || all_used {
                // rename each scope's variables in order of first use
                let mut rename: BTreeMap<&str, String> = BTreeMap::new();
                let mut used: BTreeMap<usize, usize> = BTreeMap::new();
                let canon: Vec<String> = labels
                    .iter()
                    .map(|&v| {
                        let owner = sk.scopes.owner(v).unwrap();
                        rename
                            .entry(v)
                            .or_insert_with(|| {
                                let k = used.entry(owner).or_insert(0);
                                *k += 1;
                                sk.scopes.scopes[owner].vars[*k - 1].clone()
                            })
                            .clone()
                    })
                    .collect();
                orbits.insert(canon);
            }
            let mut i = 0;
            while i < idx.len() {
                idx[i] += 1;
                if idx[i] < eligible[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == idx.len() {
                break;
            }
        }
        orbits
    }

    fn as_vec(a: &ClassicalAssignment) -> Vec<String> {
        a.values().cloned().collect()
    }

    #[test]
    fn demo_counts() {
        let sk = extract(&demo());
        assert_eq!(naive_count(&sk), BigUint::from(2187u32));
        assert_eq!(scope_valid_count(&sk), BigUint::from(648u32));
        for (mode, expected) in [(PartitionMode::ExactBlocks, 245usize), (PartitionMode::AtMostBlocks, 324)] {
            let oracle = brute_force_orbits(&sk, mode);
            assert_eq!(oracle.len(), expected);
            let fast = enumerate_classical(&sk, mode).unwrap();
            assert_eq!(fast.len(), expected);
            let got: HashSet<Vec<String>> = fast.iter().map(as_vec).collect();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn flat_two_variable_program_gives_stirling() {
        let sk = extract(&parse("qubits 1\na = 1\nb = 0\na = b + a\nb = a\n").unwrap());
        assert_eq!(sk.classical_holes.len(), 7);
        assert_eq!(enumerate_classical(&sk, PartitionMode::ExactBlocks).unwrap().len(), 63);
        assert_eq!(enumerate_classical(&sk, PartitionMode::AtMostBlocks).unwrap().len(), 64);
    }

    #[test]
    fn demo_variant_partition_is_emitted() {
        let sk = extract(&demo());
        let all = enumerate_classical(&sk, PartitionMode::ExactBlocks).unwrap();
        let target: Vec<String> = ["a", "b", "b", "c", "a", "c", "c"].iter().map(|s| s.to_string()).collect();
        assert!(all.iter().any(|a| as_vec(a) == target));
        let seed: Vec<String> = sk.classical_holes.iter().map(|h| h.original.clone()).collect();
        assert!(all.iter().any(|a| as_vec(a) == seed));
    }

    #[test]
    fn nested_scopes_match_brute_force() {
        let src = "qubits 2\na = 1\nwhile a < 2 {\n  b = a + 1\n  if b {\n    c = b\n    a = c\n  }\n}\n";
        let sk = extract(&parse(src).unwrap());
        assert!(sk.classical_holes.len() <= 10);
        for mode in [PartitionMode::ExactBlocks, PartitionMode::AtMostBlocks] {
            let oracle = brute_force_orbits(&sk, mode);
            let fast = enumerate_classical(&sk, mode).unwrap();
            assert_eq!(fast.len(), oracle.len());
            let got: HashSet<Vec<String>> = fast.iter().map(as_vec).collect();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn no_variables_yields_single_empty_assignment() {
        let sk = extract(&parse("qubits 1\nh q[0]\n").unwrap());
        let all = enumerate_classical(&sk, PartitionMode::ExactBlocks).unwrap();
        assert_eq!(all, vec![ClassicalAssignment::new()]);
        assert_eq!(naive_count(&sk), BigUint::one());
    }

    #[test]
    fn hole_outside_owner_scope_is_rejected() {
        let sk = extract(&parse("qubits 1\nif k {\n  k = 1\n}\n").unwrap());
        assert!(matches!(
            ClassicalSpace::new(&sk, PartitionMode::ExactBlocks),
            Err(EnumError::NoEligibleVariable { hole: 1 })
        ));
    }
}
