//! Shared data model: observations, bivariate copulas on a node grid, and
//! the seeding contract used by every randomized operation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid cells per axis.
pub const DEFAULT_GRID: usize = 50;

/// Slack for grounded / uniform-margin checks on analytic grids.
pub const MARGIN_TOL: f64 = 1e-9;

/// Slack for the 2-increasing (rectangle inequality) check.
pub const RECTANGLE_TOL: f64 = 1e-12;

/// An n × (d+1) sample `(X_1..X_d, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from predictor rows and the response vector.
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut x = Vec::with_capacity(rows.len() * d);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != d {
                return Err(Error::RaggedRow {
                    row,
                    expected: d,
                    got: values.len(),
                });
            }
            x.extend_from_slice(values);
        }
        Self::from_flat(x, d, y)
    }

    /// Builds a dataset from a row-major predictor buffer with `d` columns.
    pub fn from_flat(x: Vec<f64>, d: usize, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::TooFewObservations {
                required: 2,
                got: n,
            });
        }
        if d == 0 {
            return Err(Error::NoPredictors);
        }
        if x.len() != n * d {
            return Err(Error::LengthMismatch {
                x_rows: x.len() / d,
                y_len: n,
            });
        }
        for (k, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k / d,
                    column: k % d,
                });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column: d });
        }
        Ok(Self {
            x,
            y,
            d,
            column_names: None,
        })
    }

    /// Attaches d+1 labels, predictors first and the response last.
    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d + 1 {
            return Err(Error::ColumnNames {
                expected: self.d + 1,
                got: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major predictor buffer.
    pub fn x_flat(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().skip(j).step_by(self.d).copied().collect()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Restricts the predictors to `columns` (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::NoPredictors);
        }
        if let Some(&index) = columns.iter().find(|&&c| c >= self.d) {
            return Err(Error::ColumnOutOfRange { index, d: self.d });
        }
        let mut x = Vec::with_capacity(self.n() * columns.len());
        for i in 0..self.n() {
            let row = self.row(i);
            x.extend(columns.iter().map(|&c| row[c]));
        }
        let column_names = self.column_names.as_ref().map(|names| {
            columns
                .iter()
                .map(|&c| names[c].clone())
                .chain(std::iter::once(names[self.d].clone()))
                .collect()
        });
        Ok(Self {
            x,
            y: self.y.clone(),
            d: columns.len(),
            column_names,
        })
    }
}

/// Named random streams. Each randomized operation draws from its own
/// stream so that, e.g., changing the sampler does not shift NN tie-breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Sampling,
    NnTies,
    YTies,
}

impl Stream {
    fn label(self) -> u64 {
        match self {
            Stream::Sampling => 1,
            Stream::NnTies => 2,
            Stream::YTies => 3,
        }
    }
}

/// Root seed for all randomized operations.
///
/// Identical seed and inputs give bit-identical outputs. Substreams are
/// addressed by `(stream, index)` so that work split across threads draws
/// exactly the numbers a serial run would.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
}

impl SeedSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        self.rng_at(stream, 0)
    }

    /// Independent generator for item `index` of `stream`.
    pub fn rng_at(&self, stream: Stream, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.label() << 56 ^ (index & ((1 << 56) - 1)));
        rng
    }

    /// Child seed for replicate `tag`, e.g. one entry of a simulation campaign.
    pub fn derive(&self, tag: u64) -> SeedSpec {
        SeedSpec::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5eed))))
    }
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self::new(0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A bivariate copula sampled at the nodes `(i/N, j/N)`, `0 ≤ i, j ≤ N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCopula {
    resolution: usize,
    values: Vec<f64>,
}

impl GridCopula {
    /// Validates a full copula grid: grounded, uniform margins, 2-increasing.
    pub fn from_values(resolution: usize, values: Vec<f64>) -> Result<Self> {
        let grid = Self::unchecked(resolution, values)?;
        grid.check_grounded()?;
        grid.check_margins()?;
        grid.check_rectangles()?;
        Ok(grid)
    }

    /// Grid of an empirical (sub)copula. Only groundedness and the
    /// rectangle inequality are enforced; the second margin of a
    /// nearest-neighbour estimate is not uniform at finite n.
    pub fn from_empirical(resolution: usize, values: Vec<f64>) -> Result<Self> {
        let grid = Self::unchecked(resolution, values)?;
        grid.check_grounded()?;
        grid.check_rectangles()?;
        Ok(grid)
    }

    fn unchecked(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::ZeroResolution);
        }
        let side = resolution + 1;
        if values.len() != side * side {
            return Err(Error::LengthMismatch {
                x_rows: values.len(),
                y_len: side * side,
            });
        }
        Ok(Self { resolution, values })
    }

    fn check_grounded(&self) -> Result<()> {
        for k in 0..=self.resolution {
            for (i, j) in [(0, k), (k, 0)] {
                let v = self.get(i, j);
                if v.abs() > MARGIN_TOL {
                    return Err(Error::GridInvariant {
                        property: "groundedness",
                        i,
                        j,
                        amount: v.abs(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_margins(&self) -> Result<()> {
        let n = self.resolution;
        for k in 0..=n {
            let expected = k as f64 / n as f64;
            for (i, j) in [(n, k), (k, n)] {
                let gap = (self.get(i, j) - expected).abs();
                if gap > MARGIN_TOL {
                    return Err(Error::GridInvariant {
                        property: "uniform margins",
                        i,
                        j,
                        amount: gap,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_rectangles(&self) -> Result<()> {
        for i in 0..self.resolution {
            for j in 0..self.resolution {
                let mass = self.get(i + 1, j + 1) - self.get(i + 1, j) - self.get(i, j + 1)
                    + self.get(i, j);
                if mass < -RECTANGLE_TOL {
                    return Err(Error::GridInvariant {
                        property: "2-increasing",
                        i,
                        j,
                        amount: -mass,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `C(i/N, j/N)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.resolution + 1) + j]
    }

    /// Row-major node values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node coordinate `k/N`.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.resolution as f64
    }

    /// `δ(k/N) = C(k/N, k/N)` for `k = 0..=N`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..=self.resolution).map(|k| self.get(k, k)).collect()
    }

    /// `C(k/N, 1 - k/N)` for `k = 0..=N`.
    pub fn anti_diagonal(&self) -> Vec<f64> {
        (0..=self.resolution)
            .map(|k| self.get(k, self.resolution - k))
            .collect()
    }

    /// Iterates `(s, t, value)` in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let side = self.resolution + 1;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.node(k / side), self.node(k % side), v))
    }

    /// Largest absolute node-wise difference.
    pub fn sup_distance(&self, other: &GridCopula) -> Result<f64> {
        grid_sup_distance(self, other)
    }
}

/// d∞ distance between two grids of equal resolution.
pub fn grid_sup_distance(a: &GridCopula, b: &GridCopula) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch {
            left: a.resolution,
            right: b.resolution,
        });
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Samples `f` at the nodes of an N-grid and checks the copula invariants.
pub fn grid_from_function<F>(f: F, resolution: usize) -> Result<GridCopula>
where
    F: Fn(f64, f64) -> f64,
{
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    let side = resolution + 1;
    let step = resolution as f64;
    let mut values = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            values.push(f(i as f64 / step, j as f64 / step));
        }
    }
    GridCopula::from_values(resolution, values)
}

/// Comonotonicity copula M.
pub fn upper_bound(s: f64, t: f64) -> f64 {
    s.min(t)
}

/// Independence copula Π.
pub fn independence(s: f64, t: f64) -> f64 {
    s * t
}

/// Countermonotonicity copula W.
pub fn lower_bound(s: f64, t: f64) -> f64 {
    (s + t - 1.0).max(0.0)
}
