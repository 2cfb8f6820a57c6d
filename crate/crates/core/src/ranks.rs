//! Rank statistics of the response.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SeedSpec, Stream};

/// Ranks `R_i = #{j : Y_j ≤ Y_i}`, reverse counts `L_i = #{j : Y_j ≥ Y_i}`
/// and renormalized ECDF values `R_i / (n + 1)`.
///
/// Tied responses are put into a seeded random strict order before
/// counting, so `R` is always a permutation of `1..=n` and
/// `L_i = n + 1 - R_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub r: Vec<u32>,
    pub l: Vec<u32>,
    pub gstar: Vec<f64>,
    pub tie_flag: bool,
    /// Number of distinct values in the original (unperturbed) response.
    pub distinct: usize,
}

impl RankProfile {
    pub fn n(&self) -> usize {
        self.r.len()
    }

    /// True when the response took a single value before tie-breaking.
    pub fn is_constant(&self) -> bool {
        self.distinct <= 1
    }
}

pub fn rank_profile(y: &[f64], seed: SeedSpec) -> Result<RankProfile> {
    let n = y.len();
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let mut rng = seed.rng(Stream::YTies);
    let mut tie_flag = false;
    let mut distinct = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && y[order[end]] == y[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            tie_flag = true;
            order[start..end].shuffle(&mut rng);
        }
        distinct += 1;
        start = end;
    }

    let mut r = vec![0u32; n];
    for (pos, &i) in order.iter().enumerate() {
        r[i] = pos as u32 + 1;
    }
    let l = r.iter().map(|&ri| n as u32 + 1 - ri).collect();
    let gstar = r.iter().map(|&ri| ri as f64 / (n + 1) as f64).collect();
    Ok(RankProfile {
        r,
        l,
        gstar,
        tie_flag,
        distinct,
    })
}

fn count_at_most(y: &[f64], q: f64) -> usize {
    y.iter().filter(|&&v| v <= q).count()
}

/// `(1/n) Σ 1[Y_k ≤ q]`.
pub fn ecdf(y: &[f64], q: f64) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    count_at_most(y, q) as f64 / y.len() as f64
}

/// `(1/(n+1)) Σ 1[Y_k ≤ q]`.
pub fn renormalized_ecdf(y: &[f64], q: f64) -> f64 {
    count_at_most(y, q) as f64 / (y.len() + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorted_and_permuted_input() {
        let rp = rank_profile(&[10.0, 20.0, 30.0], SeedSpec::new(1)).unwrap();
        assert_eq!(rp.r, vec![1, 2, 3]);
        assert_eq!(rp.l, vec![3, 2, 1]);
        assert_eq!(rp.gstar, vec![0.25, 0.5, 0.75]);
        assert!(!rp.tie_flag);

        let rp = rank_profile(&[30.0, 10.0, 20.0], SeedSpec::new(1)).unwrap();
        assert_eq!(rp.r, vec![3, 1, 2]);
    }

    #[test]
    fn ties_are_broken_reproducibly() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..32 {
            let a = rank_profile(&[5.0, 5.0], SeedSpec::new(s)).unwrap();
            let b = rank_profile(&[5.0, 5.0], SeedSpec::new(s)).unwrap();
            assert_eq!(a, b);
            assert!(a.tie_flag);
            assert!(a.r == vec![1, 2] || a.r == vec![2, 1]);
            assert_eq!(a.distinct, 1);
            assert!(a.is_constant());
            seen.insert(a.r);
        }
        // both orderings occur across seeds
        assert_eq!(seen.len(), 2);
        // frozen outcome for seed 0
        assert_eq!(
            rank_profile(&[5.0, 5.0], SeedSpec::new(0)).unwrap().r,
            vec![1, 2]
        );
    }

    #[test]
    fn too_short() {
        assert_eq!(
            rank_profile(&[1.0], SeedSpec::new(0)),
            Err(Error::TooFewObservations {
                required: 2,
                got: 1
            })
        );
    }

    #[test]
    fn ecdf_counts() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(ecdf(&y, 2.0), 2.0 / 3.0);
        assert_eq!(renormalized_ecdf(&y, 2.0), 0.5);
        assert_eq!(ecdf(&y, 0.0), 0.0);
        assert_eq!(renormalized_ecdf(&y, -1.0), 0.0);
        assert_eq!(ecdf(&y, 3.0), 1.0);
        assert_eq!(renormalized_ecdf(&y, 3.0), 0.75);
    }

    proptest! {
        #[test]
        fn rank_invariants(y in prop::collection::vec(-1e3f64..1e3, 2..60), seed in any::<u64>()) {
            let rp = rank_profile(&y, SeedSpec::new(seed)).unwrap();
            let n = y.len() as u32;
            let mut sorted = rp.r.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
            for i in 0..y.len() {
                prop_assert_eq!(rp.l[i], n + 1 - rp.r[i]);
                prop_assert!(rp.gstar[i] > 0.0 && rp.gstar[i] < 1.0);
                // ranks respect the order of distinct values
                for j in 0..y.len() {
                    if y[i] < y[j] {
                        prop_assert!(rp.r[i] < rp.r[j]);
                    }
                }
            }
        }

        #[test]
        fn monotone_transform_invariance(y in prop::collection::hash_set(-1000i32..1000, 2..50)) {
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let z: Vec<f64> = y.iter().map(|v| (v / 100.0).exp() * 3.0 - 7.0).collect();
            let a = rank_profile(&y, SeedSpec::new(3)).unwrap();
            let b = rank_profile(&z, SeedSpec::new(99)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
