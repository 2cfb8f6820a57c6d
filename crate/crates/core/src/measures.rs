//! Footrule, Spearman's rho and Gini's gamma as functionals of a bivariate
//! copula representation, and the rank estimators T_n, R²_n, Q_n.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, GridCopula, SeedSpec};
use crate::nn::{nn_index, NnIndex};
use crate::psi::{EmpiricalPsi, Variant};
use crate::ranks::{rank_profile, RankProfile};

/// Concordance-type functionals of a bivariate copula.
pub trait DependenceFunctionals {
    /// `6 ∫ C(t,t) dt - 2`.
    fn footrule(&self) -> f64;
    /// `12 ∬ C - 3`.
    fn spearman_rho(&self) -> f64;
    /// `4 ∫ C(t,t) + C(t,1-t) dt - 2`.
    fn gini_gamma(&self) -> f64;
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Trapezoid rule at grid resolution. Exact for piecewise bilinear
/// (checkerboard) copulas whose cells coincide with the grid.
impl DependenceFunctionals for GridCopula {
    fn footrule(&self) -> f64 {
        let h = 1.0 / self.resolution() as f64;
        6.0 * trapezoid(&self.diagonal(), h) - 2.0
    }

    fn spearman_rho(&self) -> f64 {
        let n = self.resolution();
        let h = 1.0 / n as f64;
        let rows: Vec<f64> = (0..=n)
            .map(|i| {
                let row: Vec<f64> = (0..=n).map(|j| self.get(i, j)).collect();
                trapezoid(&row, h)
            })
            .collect();
        12.0 * trapezoid(&rows, h) - 3.0
    }

    fn gini_gamma(&self) -> f64 {
        let h = 1.0 / self.resolution() as f64;
        4.0 * (trapezoid(&self.diagonal(), h) + trapezoid(&self.anti_diagonal(), h)) - 2.0
    }
}

/// Exact integrals of the step function.
///
/// A copula functional has several integral forms that agree on copulas
/// but not on an empirical estimate whose second margin is not uniform.
/// Footrule and gamma are read off the joint survival function
/// (`∫ C̄(t,t) = ∫ C(t,t)` and `∫ C̄(t,1-t) = ∫ C(t,1-t)` for every copula),
/// rho off the distribution function. With these forms the three plug-ins
/// reproduce the rank estimators exactly:
/// `T_n = n/(n-1)·φ(D_n) - 1/(n-1)`, `R²_n = ρ_S(D_n)` and `Q_n = γ(D_n)`.
impl DependenceFunctionals for EmpiricalPsi {
    fn footrule(&self) -> f64 {
        6.0 * self.survival_diagonal_integral() - 2.0
    }

    fn spearman_rho(&self) -> f64 {
        12.0 * self.integral() - 3.0
    }

    fn gini_gamma(&self) -> f64 {
        4.0 * (self.survival_diagonal_integral() + self.survival_anti_diagonal_integral()) - 2.0
    }
}

pub fn footrule<C: DependenceFunctionals + ?Sized>(c: &C) -> f64 {
    c.footrule()
}

pub fn spearman_rho<C: DependenceFunctionals + ?Sized>(c: &C) -> f64 {
    c.spearman_rho()
}

pub fn gini_gamma<C: DependenceFunctionals + ?Sized>(c: &C) -> f64 {
    c.gini_gamma()
}

/// Integer sums shared by the three estimators.
struct RankSums {
    n: i128,
    sum_r: i128,
    sum_r_nn: i128,
}

impl RankSums {
    fn new(rp: &RankProfile, nn: &NnIndex) -> Result<Self> {
        assert_eq!(
            rp.n(),
            nn.n(),
            "rank profile and NN index come from different samples"
        );
        if rp.is_constant() {
            return Err(Error::ConstantResponse);
        }
        Ok(Self {
            n: rp.n() as i128,
            sum_r: rp.r.iter().map(|&r| r as i128).sum(),
            sum_r_nn: nn.n_of.iter().map(|&j| rp.r[j] as i128).sum(),
        })
    }

    /// `Σ R_{N(i)} + Σ R_i - n(n+1)`, zero when every row is hit exactly once.
    fn margin_excess(&self) -> i128 {
        self.sum_r_nn + self.sum_r - self.n * (self.n + 1)
    }
}

fn pairs<'a>(rp: &'a RankProfile, nn: &'a NnIndex) -> impl Iterator<Item = (i128, i128)> + 'a {
    rp.r.iter()
        .zip(&nn.n_of)
        .map(|(&r, &j)| (r as i128, rp.r[j] as i128))
}

/// `Σ (n min{R_i, R_N(i)} - L_i²) / Σ L_i (n - L_i)`.
pub fn t_n(rp: &RankProfile, nn: &NnIndex) -> Result<f64> {
    let sums = RankSums::new(rp, nn)?;
    let n = sums.n;
    let numerator: i128 = pairs(rp, nn)
        .zip(&rp.l)
        .map(|((r, r_nn), &l)| n * r.min(r_nn) - (l as i128) * (l as i128))
        .sum();
    let denominator: i128 = rp.l.iter().map(|&l| l as i128 * (n - l as i128)).sum();
    if denominator == 0 {
        return Err(Error::ConstantResponse);
    }
    Ok(numerator as f64 / denominator as f64)
}

/// `12/(n(n+1)²) Σ R_i R_N(i) - 3 - 12/(n(n+1)) (Σ R_N(i) + Σ R_i - n(n+1))`.
pub fn r2_n(rp: &RankProfile, nn: &NnIndex) -> Result<f64> {
    let sums = RankSums::new(rp, nn)?;
    let n = sums.n as f64;
    let cross: i128 = pairs(rp, nn).map(|(r, r_nn)| r * r_nn).sum();
    Ok(12.0 * cross as f64 / (n * (n + 1.0) * (n + 1.0))
        - 3.0
        - 12.0 * sums.margin_excess() as f64 / (n * (n + 1.0)))
}

/// `2/(n(n+1)) (Σ |R_i + R_N(i) - (n+1)| - Σ |R_i - R_N(i)|) + 4/(n(n+1)) (Σ R_N(i) + Σ R_i - n(n+1))`.
pub fn q_n(rp: &RankProfile, nn: &NnIndex) -> Result<f64> {
    let sums = RankSums::new(rp, nn)?;
    let n1 = sums.n + 1;
    let spread: i128 = pairs(rp, nn)
        .map(|(r, r_nn)| (r + r_nn - n1).abs() - (r - r_nn).abs())
        .sum();
    let scale = (sums.n * n1) as f64;
    Ok((2 * spread + 4 * sums.margin_excess()) as f64 / scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub t: f64,
    pub r2: f64,
    pub q: f64,
    pub n: usize,
    /// `|T_n - (n/(n-1)) φ(D_n) + 1/(n-1)|`.
    pub identity_residual: f64,
    pub seed: u64,
}

/// The three estimators from a precomputed rank profile and NN map.
pub fn measure_report_from_parts(
    rp: &RankProfile,
    nn: &NnIndex,
    seed: SeedSpec,
) -> Result<MeasureReport> {
    let t = t_n(rp, nn)?;
    let psi = EmpiricalPsi::from_parts(rp, nn, Variant::DStar);
    let n = rp.n() as f64;
    let identity_residual = (t - (n / (n - 1.0)) * psi.footrule() + 1.0 / (n - 1.0)).abs();
    Ok(MeasureReport {
        t,
        r2: r2_n(rp, nn)?,
        q: q_n(rp, nn)?,
        n: rp.n(),
        identity_residual,
        seed: seed.seed,
    })
}

pub fn measure_report(ds: &Dataset, seed: SeedSpec) -> Result<MeasureReport> {
    let rp = rank_profile(ds.y(), seed)?;
    let nn = nn_index(ds, seed)?;
    measure_report_from_parts(&rp, &nn, seed)
}
