//! Nearest-neighbour estimator of the ψ copula.
//!
//! For observation k the atom is `(G(Y_k), G(Y_{N(k)}))` where `G` is the
//! renormalized ECDF `R/(n+1)` (the default) or the plain ECDF `R/n`. The
//! estimate is the empirical distribution function of these n atoms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, GridCopula, SeedSpec, DEFAULT_GRID};
use crate::nn::{nn_index, NnIndex};
use crate::ranks::{rank_profile, RankProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// `G*_n = R/(n+1)`; atoms lie strictly inside the unit square.
    DStar,
    /// `G_n = R/n`.
    CPlain,
}

impl Variant {
    fn denominator(self, n: usize) -> usize {
        match self {
            Variant::DStar => n + 1,
            Variant::CPlain => n,
        }
    }
}

/// Step-function estimate of ψ built from n weighted atoms.
#[derive(Debug, Clone)]
pub struct EmpiricalPsi {
    variant: Variant,
    /// `R_k`, a permutation of `1..=n`.
    u_rank: Vec<u32>,
    /// `R_{N(k)}`.
    v_rank: Vec<u32>,
    denom: usize,
    index: DominanceIndex,
}

impl EmpiricalPsi {
    pub fn from_parts(rp: &RankProfile, nn: &NnIndex, variant: Variant) -> Self {
        let n = rp.n();
        assert_eq!(
            n,
            nn.n(),
            "rank profile and NN index come from different samples"
        );
        let u_rank = rp.r.clone();
        let v_rank: Vec<u32> = nn.n_of.iter().map(|&j| rp.r[j]).collect();
        let mut by_u = vec![0u32; n];
        for (k, &r) in u_rank.iter().enumerate() {
            by_u[r as usize - 1] = v_rank[k];
        }
        Self {
            variant,
            u_rank,
            v_rank,
            denom: variant.denominator(n),
            index: DominanceIndex::new(&by_u),
        }
    }

    pub fn n(&self) -> usize {
        self.u_rank.len()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Atoms `(u_k, v_k)` in observation order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.atoms().collect()
    }

    fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let denom = self.denom as f64;
        self.u_rank
            .iter()
            .zip(&self.v_rank)
            .map(move |(&u, &v)| (u as f64 / denom, v as f64 / denom))
    }

    /// Largest rank r with `r / denom ≤ x`.
    fn rank_threshold(&self, x: f64) -> usize {
        let n = self.n();
        let denom = self.denom as f64;
        let mut r = ((x * denom).floor().max(0.0) as usize).min(n);
        while r < n && (r + 1) as f64 / denom <= x {
            r += 1;
        }
        while r > 0 && r as f64 / denom > x {
            r -= 1;
        }
        r
    }

    /// `(1/n) Σ 1[u_k ≤ s] 1[v_k ≤ t]`.
    pub fn evaluate(&self, s: f64, t: f64) -> Result<f64> {
        for (name, value) in [("s", s), ("t", t)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitInterval { name, value });
            }
        }
        let count = self
            .index
            .count_prefix_at_most(self.rank_threshold(s), self.rank_threshold(t) as u32);
        Ok(count as f64 / self.n() as f64)
    }

    /// Values at the nodes of an N-grid, in O(n + N²).
    pub fn to_grid(&self, resolution: usize) -> Result<GridCopula> {
        if resolution == 0 {
            return Err(Error::ZeroResolution);
        }
        let side = resolution + 1;
        let thresholds: Vec<usize> = (0..side)
            .map(|i| self.rank_threshold(i as f64 / resolution as f64))
            .collect();
        // node_of[r] = first node whose threshold admits rank r
        let mut node_of = vec![side; self.n() + 1];
        let mut node = 0;
        for (r, slot) in node_of.iter_mut().enumerate().skip(1) {
            while node < side && thresholds[node] < r {
                node += 1;
            }
            *slot = node;
        }
        let mut counts = vec![0u64; side * side];
        for (&u, &v) in self.u_rank.iter().zip(&self.v_rank) {
            let (i, j) = (node_of[u as usize], node_of[v as usize]);
            if i < side && j < side {
                counts[i * side + j] += 1;
            }
        }
        for i in 0..side {
            for j in 0..side {
                let mut c = counts[i * side + j];
                if i > 0 {
                    c += counts[(i - 1) * side + j];
                }
                if j > 0 {
                    c += counts[i * side + j - 1];
                }
                if i > 0 && j > 0 {
                    c -= counts[(i - 1) * side + j - 1];
                }
                counts[i * side + j] = c;
            }
        }
        let n = self.n() as f64;
        GridCopula::from_empirical(
            resolution,
            counts.into_iter().map(|c| c as f64 / n).collect(),
        )
    }

    fn mean_of(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.atoms().map(|(u, v)| f(u, v)).sum::<f64>() / self.n() as f64
    }

    /// `∫ D(t,t) dt`, exact for the step function.
    pub fn diagonal_integral(&self) -> f64 {
        self.mean_of(|u, v| 1.0 - u.max(v))
    }

    /// `∫ D(t,1-t) dt`, exact.
    pub fn anti_diagonal_integral(&self) -> f64 {
        self.mean_of(|u, v| (1.0 - u - v).max(0.0))
    }

    /// `∫ D̄(t,t) dt` where `D̄(s,t) = (1/n) Σ 1[u_k > s] 1[v_k > t]` is the
    /// joint survival function; equals the mean of `min(u, v)`.
    pub fn survival_diagonal_integral(&self) -> f64 {
        self.mean_of(f64::min)
    }

    /// `∫ D̄(t,1-t) dt`, the mean of `(u + v - 1)⁺`.
    pub fn survival_anti_diagonal_integral(&self) -> f64 {
        self.mean_of(|u, v| (u + v - 1.0).max(0.0))
    }

    /// `∬ D(s,t) ds dt`, the mean of `(1-u)(1-v)`.
    pub fn integral(&self) -> f64 {
        self.mean_of(|u, v| (1.0 - u) * (1.0 - v))
    }

    /// Mean of the second coordinate; 1/2 only when every observation is
    /// some other observation's nearest neighbour exactly once.
    pub fn second_margin_mean(&self) -> f64 {
        self.mean_of(|_, v| v)
    }
}

pub fn estimate_psi(ds: &Dataset, seed: SeedSpec, variant: Variant) -> Result<EmpiricalPsi> {
    let rp = rank_profile(ds.y(), seed)?;
    let nn = nn_index(ds, seed)?;
    Ok(EmpiricalPsi::from_parts(&rp, &nn, variant))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `sup |C_n - D_n|` over the default grid.
    pub gap: f64,
    /// `(c + 1)/n` with c the observed maximum indegree.
    pub bound: f64,
}

/// Distance between the plain-ECDF and renormalized estimates on the default grid.
pub fn cn_dn_gap(ds: &Dataset, seed: SeedSpec) -> Result<GapReport> {
    let rp = rank_profile(ds.y(), seed)?;
    let nn = nn_index(ds, seed)?;
    let d_n = EmpiricalPsi::from_parts(&rp, &nn, Variant::DStar).to_grid(DEFAULT_GRID)?;
    let c_n = EmpiricalPsi::from_parts(&rp, &nn, Variant::CPlain).to_grid(DEFAULT_GRID)?;
    let n = ds.n() as f64;
    Ok(GapReport {
        gap: d_n.sup_distance(&c_n)?,
        bound: (nn.max_indegree() as f64 + 1.0) / n,
    })
}

/// Merge-sort tree answering "how many of `values[..m]` are ≤ q".
#[derive(Debug, Clone)]
struct DominanceIndex {
    size: usize,
    nodes: Vec<Vec<u32>>,
}

impl DominanceIndex {
    fn new(values: &[u32]) -> Self {
        let size = values.len().next_power_of_two();
        let mut nodes = vec![Vec::new(); 2 * size];
        for (k, &v) in values.iter().enumerate() {
            nodes[size + k] = vec![v];
        }
        for node in (1..size).rev() {
            let (left, right) = (&nodes[2 * node], &nodes[2 * node + 1]);
            let mut merged = Vec::with_capacity(left.len() + right.len());
            let (mut a, mut b) = (0, 0);
            while a < left.len() && b < right.len() {
                if left[a] <= right[b] {
                    merged.push(left[a]);
                    a += 1;
                } else {
                    merged.push(right[b]);
                    b += 1;
                }
            }
            merged.extend_from_slice(&left[a..]);
            merged.extend_from_slice(&right[b..]);
            nodes[node] = merged;
        }
        Self { size, nodes }
    }

    fn count_prefix_at_most(&self, m: usize, q: u32) -> usize {
        let (mut lo, mut hi) = (self.size, self.size + m);
        let mut count = 0;
        while lo < hi {
            if lo & 1 == 1 {
                count += self.nodes[lo].partition_point(|&v| v <= q);
                lo += 1;
            }
            if hi & 1 == 1 {
                hi -= 1;
                count += self.nodes[hi].partition_point(|&v| v <= q);
            }
            lo /= 2;
            hi /= 2;
        }
        count
    }
}

/// Grid export parallelized over rows; identical to [`EmpiricalPsi::to_grid`].
pub fn to_grid_by_queries(psi: &EmpiricalPsi, resolution: usize) -> Result<GridCopula> {
    let side = resolution + 1;
    let values: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|k| {
            psi.evaluate(
                (k / side) as f64 / resolution as f64,
                (k % side) as f64 / resolution as f64,
            )
        })
        .collect::<Result<_>>()?;
    GridCopula::from_empirical(resolution, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{nn_index_with, NnAlgorithm};
    use proptest::prelude::*;

    fn two_point() -> EmpiricalPsi {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![10.0, 20.0]).unwrap();
        estimate_psi(&ds, SeedSpec::new(0), Variant::DStar).unwrap()
    }

    #[test]
    fn two_point_atoms_and_values() {
        let psi = two_point();
        assert_eq!(
            psi.points(),
            vec![(1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0 / 3.0)]
        );
        assert_eq!(psi.evaluate(0.4, 0.7).unwrap(), 0.5);
        assert_eq!(psi.evaluate(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(psi.evaluate(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(psi.evaluate(0.5, 0.5).unwrap(), 0.0);
        assert!(matches!(
            psi.evaluate(1.5, 0.2),
            Err(Error::OutOfUnitInterval { name: "s", .. })
        ));
    }

    #[test]
    fn two_point_grids() {
        let psi = two_point();
        assert_eq!(psi.to_grid(1).unwrap().values(), &[0.0, 0.0, 0.0, 1.0]);
        let g = psi.to_grid(3).unwrap();
        assert_eq!(g.get(1, 2), 0.5);
        assert_eq!(g, to_grid_by_queries(&psi, 3).unwrap());
    }

    #[test]
    fn plain_variant_reaches_one() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![10.0, 20.0]).unwrap();
        let psi = estimate_psi(&ds, SeedSpec::new(0), Variant::CPlain).unwrap();
        assert_eq!(psi.points(), vec![(0.5, 1.0), (1.0, 0.5)]);
    }

    #[test]
    fn gap_small_cases() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![10.0, 20.0]).unwrap();
        let gap = cn_dn_gap(&ds, SeedSpec::new(0)).unwrap();
        assert!(gap.gap <= 1.5 && gap.gap <= gap.bound);

        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64).collect();
        let ds = Dataset::new(x, y).unwrap();
        let gap = cn_dn_gap(&ds, SeedSpec::new(0)).unwrap();
        assert!(gap.gap <= 0.03, "{gap:?}");
        assert!(gap.gap <= gap.bound);
    }

    #[test]
    fn variants_agree_where_indicators_agree() {
        // n = 3: D atoms sit at r/4, C atoms at r/3. The indicators agree for
        // coordinates in [0, 1/4), [1/3, 1/2), [2/3, 3/4) and at 1.
        let ds = Dataset::new(vec![vec![0.0], vec![1.0], vec![3.0]], vec![1.0, 2.0, 3.0]).unwrap();
        let rp = rank_profile(ds.y(), SeedSpec::new(0)).unwrap();
        let nn = nn_index(&ds, SeedSpec::new(0)).unwrap();
        let d = EmpiricalPsi::from_parts(&rp, &nn, Variant::DStar);
        let c = EmpiricalPsi::from_parts(&rp, &nn, Variant::CPlain);
        for (s, t) in [
            (0.1, 0.1),
            (0.4, 0.7),
            (0.7, 0.4),
            (0.4, 0.4),
            (0.7, 1.0),
            (1.0, 1.0),
        ] {
            assert_eq!(
                d.evaluate(s, t).unwrap(),
                c.evaluate(s, t).unwrap(),
                "({s}, {t})"
            );
        }
        assert_eq!(d.evaluate(0.5, 1.0).unwrap(), 2.0 / 3.0);
        assert_eq!(c.evaluate(0.5, 1.0).unwrap(), 1.0 / 3.0);
    }

    fn random_psi(y: &[f64], x: &[f64], seed: u64) -> EmpiricalPsi {
        let s = SeedSpec::new(seed);
        let rp = rank_profile(y, s).unwrap();
        let nn = nn_index_with(x, 1, s, NnAlgorithm::Auto).unwrap();
        EmpiricalPsi::from_parts(&rp, &nn, Variant::DStar)
    }

    proptest! {
        #[test]
        fn evaluate_matches_definition_and_is_monotone(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..120),
            queries in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..0.3, 0.0f64..0.3), 1..20),
            seed in any::<u64>(),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let psi = random_psi(&y, &x, seed);
            let atoms = psi.points();
            for (s, t, ds, dt) in queries {
                let direct = atoms.iter().filter(|(u, v)| *u <= s && *v <= t).count() as f64
                    / atoms.len() as f64;
                let value = psi.evaluate(s, t).unwrap();
                prop_assert_eq!(value, direct);
                let s2 = (s + ds).min(1.0);
                let t2 = (t + dt).min(1.0);
                prop_assert!(psi.evaluate(s2, t).unwrap() >= value);
                prop_assert!(psi.evaluate(s, t2).unwrap() >= value);
            }
            prop_assert_eq!(psi.evaluate(1.0, 1.0).unwrap(), 1.0);
            prop_assert_eq!(psi.evaluate(0.0, 0.7).unwrap(), 0.0);
            prop_assert_eq!(psi.evaluate(0.7, 0.0).unwrap(), 0.0);
            for (u, v) in atoms {
                prop_assert!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0);
            }
        }

        #[test]
        fn fast_grid_matches_pointwise_queries(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..200),
            resolution in 1usize..40,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let psi = random_psi(&y, &x, 1);
            prop_assert_eq!(psi.to_grid(resolution).unwrap(), to_grid_by_queries(&psi, resolution).unwrap());
        }
    }
}
