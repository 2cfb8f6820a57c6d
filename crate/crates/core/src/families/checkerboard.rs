//! Checkerboard discretizations and the exact ψ of a checkerboard copula.

use serde::{Deserialize, Serialize};

use super::FamilySpec;
use crate::error::{Error, Result};
use crate::model::GridCopula;

const TOTAL_MASS_TOL: f64 = 1e-12;
const SLAB_MASS_TOL: f64 = 1e-9;
const MAX_CELLS: usize = 1 << 26;

/// Cell masses `μ(S_i × T_j)` of a (d+1)-dimensional copula on the
/// uniform N-grid. The predictor cell `i` is flattened row-major over its
/// d coordinates; the index of cell `(i, j)` is `i * N + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardDensity {
    resolution: usize,
    d: usize,
    masses: Vec<f64>,
}

impl CheckerboardDensity {
    pub fn new(resolution: usize, d: usize, masses: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::ZeroResolution);
        }
        if d == 0 {
            return Err(Error::NoPredictors);
        }
        let x_cells = resolution
            .checked_pow(d as u32)
            .filter(|&c| c.saturating_mul(resolution) <= MAX_CELLS)
            .ok_or_else(|| Error::Unsupported(format!("{resolution}^{} cells", d + 1)))?;
        if masses.len() != x_cells * resolution {
            return Err(Error::LengthMismatch {
                x_rows: masses.len(),
                y_len: x_cells * resolution,
            });
        }
        let cb = Self {
            resolution,
            d,
            masses,
        };
        cb.validate()?;
        Ok(cb)
    }

    fn validate(&self) -> Result<()> {
        let n = self.resolution;
        if let Some(index) = self.masses.iter().position(|&m| m.is_nan() || m < -TOTAL_MASS_TOL) {
            return Err(Error::CheckerboardInvariant {
                property: "nonnegative mass",
                index,
                amount: -self.masses[index],
            });
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > TOTAL_MASS_TOL {
            return Err(Error::CheckerboardInvariant {
                property: "total mass",
                index: 0,
                amount: (total - 1.0).abs(),
            });
        }
        let expected = 1.0 / n as f64;
        let mut y_slabs = vec![0.0; n];
        let mut x_slabs = vec![0.0; self.d * n];
        for (i, row) in self.masses.chunks(n).enumerate() {
            let row_mass: f64 = row.iter().sum();
            for (j, &m) in row.iter().enumerate() {
                y_slabs[j] += m;
            }
            let mut rest = i;
            for k in (0..self.d).rev() {
                x_slabs[k * n + rest % n] += row_mass;
                rest /= n;
            }
        }
        for (property, slabs) in [("Y-slab mass", &y_slabs), ("X-slab mass", &x_slabs)] {
            if let Some((index, m)) = slabs
                .iter()
                .enumerate()
                .find(|(_, &m)| (m - expected).abs() > SLAB_MASS_TOL)
            {
                return Err(Error::CheckerboardInvariant {
                    property,
                    index,
                    amount: (m - expected).abs(),
                });
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Bivariate checkerboard with these masses when d = 1.
    pub fn as_bivariate(&self) -> Option<CheckerboardCopula> {
        (self.d == 1).then(|| CheckerboardCopula::from_masses(self.resolution, self.masses.clone()))
    }
}

/// Bivariate copula with piecewise constant density on the N-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardCopula {
    resolution: usize,
    masses: Vec<f64>,
    /// `C(i/N, j/N)`, (N+1)² values.
    cumulative: Vec<f64>,
}

impl CheckerboardCopula {
    fn from_masses(resolution: usize, masses: Vec<f64>) -> Self {
        let side = resolution + 1;
        let mut cumulative = vec![0.0; side * side];
        for i in 1..side {
            for j in 1..side {
                cumulative[i * side + j] = masses[(i - 1) * resolution + (j - 1)]
                    + cumulative[(i - 1) * side + j]
                    + cumulative[i * side + j - 1]
                    - cumulative[(i - 1) * side + j - 1];
            }
        }
        Self {
            resolution,
            masses,
            cumulative,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Mass of output cell `(j, k)`.
    pub fn mass(&self, j: usize, k: usize) -> f64 {
        self.masses[j * self.resolution + k]
    }

    /// Exact value; bilinear inside each cell.
    pub fn evaluate(&self, s: f64, t: f64) -> f64 {
        let n = self.resolution as f64;
        let side = self.resolution + 1;
        let locate = |x: f64| {
            let scaled = (x.clamp(0.0, 1.0) * n).min(n);
            let cell = (scaled.floor() as usize).min(self.resolution - 1);
            (cell, scaled - cell as f64)
        };
        let (i, fs) = locate(s);
        let (j, ft) = locate(t);
        let at = |a: usize, b: usize| self.cumulative[a * side + b];
        (1.0 - fs) * (1.0 - ft) * at(i, j)
            + fs * (1.0 - ft) * at(i + 1, j)
            + (1.0 - fs) * ft * at(i, j + 1)
            + fs * ft * at(i + 1, j + 1)
    }

    /// Values at the nodes of an M-grid.
    pub fn to_grid(&self, resolution: usize) -> Result<GridCopula> {
        if resolution == self.resolution {
            return GridCopula::from_values(resolution, self.cumulative.clone());
        }
        crate::model::grid_from_function(|s, t| self.evaluate(s, t), resolution)
    }
}

/// `ψ` of a checkerboard copula: output cell `(j, k)` receives
/// `Σ_i μ(S_i × T_j) μ(S_i × T_k) / μ(S_i × I)` over predictor cells of
/// positive mass.
pub fn psi_checkerboard(cb: &CheckerboardDensity) -> Result<CheckerboardCopula> {
    cb.validate()?;
    let n = cb.resolution;
    let mut out = vec![0.0; n * n];
    for row in cb.masses.chunks(n) {
        let row_mass: f64 = row.iter().sum();
        if row_mass <= 0.0 {
            continue;
        }
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let scaled = a / row_mass;
            for (k, &b) in row.iter().enumerate() {
                out[j * n + k] += scaled * b;
            }
        }
    }
    Ok(CheckerboardCopula::from_masses(n, out))
}

/// Exact cell masses of a family on the N-grid by inclusion–exclusion of
/// its distribution function.
pub fn discretize(family: &FamilySpec, resolution: usize) -> Result<CheckerboardDensity> {
    family.validate()?;
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    let n = resolution;
    let node = |k: usize| k as f64 / n as f64;
    let masses = match (*family, family.bivariate_cdf()) {
        (FamilySpec::Efgm { alpha, d }, _) if d > 1 => {
            let cells = n
                .checked_pow(d as u32)
                .filter(|&c| c.saturating_mul(n) <= MAX_CELLS)
                .ok_or_else(|| Error::Unsupported(format!("{n}^{} cells", d + 1)))?;
            // A = ∏u·v + α v(1-v) ∏ u_i(1-u_i) factorizes over coordinates
            let g = |x: f64| x * (1.0 - x);
            let tilt: Vec<f64> = (0..n).map(|k| g(node(k + 1)) - g(node(k))).collect();
            let width = 1.0 / n as f64;
            let mut masses = Vec::with_capacity(cells * n);
            for i in 0..cells {
                let mut rest = i;
                let mut product = 1.0;
                for _ in 0..d {
                    product *= tilt[rest % n];
                    rest /= n;
                }
                let base = width.powi(d as i32 + 1);
                masses.extend((0..n).map(|j| base + alpha * tilt[j] * product));
            }
            masses
        }
        (_, Some(cdf)) => {
            let side = n + 1;
            let values: Vec<f64> = (0..side * side)
                .map(|k| cdf(node(k / side), node(k % side)))
                .collect();
            let at = |i: usize, j: usize| values[i * side + j];
            let mut masses = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let m = at(i + 1, j + 1) - at(i + 1, j) - at(i, j + 1) + at(i, j);
                    masses.push(if m < 0.0 && m > -TOTAL_MASS_TOL {
                        0.0
                    } else {
                        m
                    });
                }
            }
            masses
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "cell masses of {family} need a closed-form distribution function"
            )))
        }
    };
    CheckerboardDensity::new(n, family.dimension(), masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DependenceFunctionals;

    #[test]
    fn independence_is_a_fixed_point() {
        let cb = discretize(
            &FamilySpec::Frechet {
                alpha: 0.0,
                beta: 0.0,
            },
            7,
        )
        .unwrap();
        assert!(cb.masses().iter().all(|&m| (m - 1.0 / 49.0).abs() < 1e-15));
        let out = psi_checkerboard(&cb).unwrap();
        for j in 0..7 {
            for k in 0..7 {
                assert!((out.mass(j, k) - 1.0 / 49.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn comonotone_is_a_fixed_point() {
        let cb = discretize(
            &FamilySpec::Frechet {
                alpha: 1.0,
                beta: 0.0,
            },
            6,
        )
        .unwrap();
        let out = psi_checkerboard(&cb).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let expected = if j == k { 1.0 / 6.0 } else { 0.0 };
                assert!((cb.masses()[j * 6 + k] - expected).abs() < 1e-15);
                assert!((out.mass(j, k) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn efgm_cell_by_inclusion_exclusion() {
        let cb = discretize(&FamilySpec::Efgm { alpha: 1.0, d: 1 }, 4).unwrap();
        let a = |u: f64, v: f64| u * v + u * v * (1.0 - u) * (1.0 - v);
        let expected = a(0.5, 0.5) - a(0.5, 0.25) - a(0.25, 0.5) + a(0.25, 0.25);
        assert!((cb.masses()[4 + 1] - expected).abs() < 1e-15);
        let first = a(0.25, 0.25);
        assert!((cb.masses()[0] - first).abs() < 1e-15);
    }

    #[test]
    fn efgm_spearman_of_oracle() {
        let out =
            psi_checkerboard(&discretize(&FamilySpec::Efgm { alpha: 1.0, d: 1 }, 100).unwrap())
                .unwrap();
        let rho = out.to_grid(100).unwrap().spearman_rho();
        assert!((rho - 1.0 / 9.0).abs() < 0.01, "{rho}");
    }

    #[test]
    fn multivariate_efgm_is_a_valid_density() {
        let cb = discretize(&FamilySpec::Efgm { alpha: -0.8, d: 3 }, 6).unwrap();
        assert_eq!(cb.masses().len(), 6usize.pow(4));
        let out = psi_checkerboard(&cb).unwrap();
        assert!(out.to_grid(6).is_ok());
    }

    #[test]
    fn rejects_bad_margins() {
        let err = CheckerboardDensity::new(2, 1, vec![0.5, 0.0, 0.25, 0.25]).unwrap_err();
        assert!(matches!(err, Error::CheckerboardInvariant { .. }));
        assert!(discretize(&FamilySpec::GaussianEquicorrelated { r: 0.5, d: 2 }, 4).is_err());
    }

    #[test]
    fn bilinear_evaluation_matches_nodes() {
        let out = psi_checkerboard(
            &discretize(
                &FamilySpec::Frechet {
                    alpha: 0.3,
                    beta: 0.2,
                },
                5,
            )
            .unwrap(),
        )
        .unwrap();
        let grid = out.to_grid(5).unwrap();
        for i in 0..=5 {
            for j in 0..=5 {
                assert!(
                    (out.evaluate(i as f64 / 5.0, j as f64 / 5.0) - grid.get(i, j)).abs() < 1e-14
                );
            }
        }
        // exchangeable
        for j in 0..5 {
            for k in 0..5 {
                assert!((out.mass(j, k) - out.mass(k, j)).abs() < 1e-15);
            }
        }
    }
}
