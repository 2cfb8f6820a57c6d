//! Euclidean nearest-neighbour map `i ↦ N(i)` over the predictor rows.
//!
//! Queries go through a k-d tree for d ≤ 16. Whenever the two closest
//! candidates are within a relative 1e-12 of each other the row is re-solved
//! by exhaustive search, where ties are decided by exact comparison of
//! squared distances and broken uniformly at random from the row's own
//! substream.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, SeedSpec, Stream};

/// Largest dimension served by the k-d tree.
pub const KD_TREE_MAX_DIM: usize = 16;

/// Relative gap below which two candidate distances are treated as a tie
/// and handed to the exact search.
pub const TIE_REL_TOL: f64 = 1e-12;

const LEAF_SIZE: usize = 8;
const BRUTE_FORCE_BELOW: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NnIndex {
    /// Zero-based index of the nearest neighbour of each row; never the row itself.
    pub n_of: Vec<usize>,
    /// Rows whose neighbour was chosen among several equidistant candidates.
    pub tie_count: usize,
    /// `K_i = #{j : N(j) = i}`.
    pub indegree: Vec<usize>,
}

impl NnIndex {
    fn from_neighbors(n_of: Vec<usize>, tie_count: usize) -> Self {
        let mut indegree = vec![0; n_of.len()];
        for &j in &n_of {
            indegree[j] += 1;
        }
        Self {
            n_of,
            tie_count,
            indegree,
        }
    }

    pub fn n(&self) -> usize {
        self.n_of.len()
    }

    pub fn max_indegree(&self) -> usize {
        self.indegree.iter().copied().max().unwrap_or(0)
    }
}

/// Which search strategy [`nn_index_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NnAlgorithm {
    /// k-d tree when the dimension allows it, otherwise exhaustive.
    Auto,
    /// Exhaustive O(n² d) reference.
    BruteForce,
}

pub fn nn_index(ds: &Dataset, seed: SeedSpec) -> Result<NnIndex> {
    nn_index_with(ds.x_flat(), ds.d(), seed, NnAlgorithm::Auto)
}

/// Nearest neighbours of the rows of a row-major `n × d` buffer.
pub fn nn_index_with(
    x: &[f64],
    d: usize,
    seed: SeedSpec,
    algorithm: NnAlgorithm,
) -> Result<NnIndex> {
    if d == 0 {
        return Err(Error::NoPredictors);
    }
    let n = x.len() / d;
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            got: n,
        });
    }
    let points = Points { x, d };
    let use_tree = algorithm == NnAlgorithm::Auto && d <= KD_TREE_MAX_DIM && n >= BRUTE_FORCE_BELOW;
    let tree = use_tree.then(|| KdTree::build(&points));

    let resolved: Vec<(usize, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(tree) = &tree {
                let [(best, j), (second, _)] = tree.two_nearest(&points, i);
                if second > best * (1.0 + TIE_REL_TOL) {
                    return (j, false);
                }
            }
            exhaustive(&points, i, seed)
        })
        .collect();

    let tie_count = resolved.iter().filter(|(_, tied)| *tied).count();
    Ok(NnIndex::from_neighbors(
        resolved.into_iter().map(|(j, _)| j).collect(),
        tie_count,
    ))
}

#[derive(Clone, Copy)]
struct Points<'a> {
    x: &'a [f64],
    d: usize,
}

impl Points<'_> {
    fn n(&self) -> usize {
        self.x.len() / self.d
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    fn coord(&self, i: usize, k: usize) -> f64 {
        self.x[i * self.d + k]
    }

    fn dist2(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Exact search for row `i`; returns the chosen neighbour and whether a tie was broken.
fn exhaustive(points: &Points<'_>, i: usize, seed: SeedSpec) -> (usize, bool) {
    let mut best = f64::INFINITY;
    let mut candidates: Vec<usize> = Vec::new();
    for j in (0..points.n()).filter(|&j| j != i) {
        let dist = points.dist2(i, j);
        if dist < best {
            best = dist;
            candidates.clear();
            candidates.push(j);
        } else if dist == best {
            candidates.push(j);
        }
    }
    if candidates.len() == 1 {
        (candidates[0], false)
    } else {
        let pick = seed
            .rng_at(Stream::NnTies, i as u64)
            .random_range(0..candidates.len());
        (candidates[pick], true)
    }
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

struct KdTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl KdTree {
    fn build(points: &Points<'_>) -> Self {
        let mut tree = KdTree {
            nodes: Vec::new(),
            order: (0..points.n()).collect(),
        };
        tree.build_node(points, 0, points.n());
        tree
    }

    fn build_node(&mut self, points: &Points<'_>, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &mut self.order[start..end];
        let (dim, spread) = (0..points.d)
            .map(|k| {
                let (lo, hi) =
                    slice
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            let c = points.coord(i, k);
                            (lo.min(c), hi.max(c))
                        });
                (k, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if spread <= 0.0 {
            // all rows identical
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            points.coord(a, dim).total_cmp(&points.coord(b, dim))
        });
        let value = points.coord(slice[mid], dim);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, start + mid);
        let right = self.build_node(points, start + mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// Two smallest `(dist², index)` pairs over all rows other than `i`.
    fn two_nearest(&self, points: &Points<'_>, i: usize) -> [(f64, usize); 2] {
        let mut best = [(f64::INFINITY, usize::MAX); 2];
        self.search(points, 0, i, &mut best);
        best
    }

    fn search(&self, points: &Points<'_>, node: usize, i: usize, best: &mut [(f64, usize); 2]) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == i {
                        continue;
                    }
                    let dist = points.dist2(i, j);
                    if dist < best[0].0 {
                        best[1] = best[0];
                        best[0] = (dist, j);
                    } else if dist < best[1].0 {
                        best[1] = (dist, j);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = points.coord(i, dim) - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(points, near, i, best);
                if diff * diff <= best[1].0 {
                    self.search(points, far, i, best);
                }
            }
        }
    }
}

/// Observed maximum indegree against the dimension's geometric bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndegreeReport {
    pub max_indegree: usize,
    /// Kissing-number bound on how many points can share a nearest
    /// neighbour in general position; `None` where no value is tabulated.
    pub bound: Option<usize>,
    /// Only set in one dimension, where the bound of 2 is exact for tie-free data.
    pub exceeds_bound: bool,
}

/// Kissing numbers of R^d for the dimensions where they are known exactly.
pub fn indegree_bound(d: usize) -> Option<usize> {
    match d {
        1 => Some(2),
        2 => Some(6),
        3 => Some(12),
        4 => Some(24),
        8 => Some(240),
        24 => Some(196_560),
        _ => None,
    }
}

pub fn indegree_bound_check(nn: &NnIndex, d: usize) -> IndegreeReport {
    let max_indegree = nn.max_indegree();
    let bound = indegree_bound(d);
    let exceeds_bound = d == 1 && nn.tie_count == 0 && max_indegree > 2;
    IndegreeReport {
        max_indegree,
        bound,
        exceeds_bound,
    }
}
