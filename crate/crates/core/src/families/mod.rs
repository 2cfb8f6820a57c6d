//! Parametric copula families with closed-form ψ images: samplers, the
//! transformed copulas, their footrule / rho / gamma values, the Bertino
//! lower bound and the checkerboard oracle.

pub mod bvn;
pub mod checkerboard;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{grid_from_function, Dataset, GridCopula, SeedSpec, Stream};

pub use bvn::{bivariate_normal_cdf, normal_cdf, normal_quantile};
pub use checkerboard::{discretize, psi_checkerboard, CheckerboardCopula, CheckerboardDensity};

/// A (d+1)-dimensional copula `A` of `(X_1..X_d, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Equicorrelated Gaussian with common correlation `r ∈ (-1/d, 1)`.
    GaussianEquicorrelated { r: f64, d: usize },
    /// `min(u^{1-α} v, u v^{1-β})`, bivariate.
    MarshallOlkin { alpha: f64, beta: f64 },
    /// `α M + (1-α-β) Π + β W`, bivariate.
    Frechet { alpha: f64, beta: f64 },
    /// `Π(u, v) + α v(1-v) ∏ u_i(1-u_i)`.
    Efgm { alpha: f64, d: usize },
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} must lie in [0, 1]"
                )))
            }
        };
        match *self {
            FamilySpec::GaussianEquicorrelated { r, d } => {
                if d == 0 {
                    return Err(Error::InvalidParameter("d must be at least 1".into()));
                }
                let lower = -1.0 / d as f64;
                if !(r > lower && r < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "r = {r} must lie in (-1/d, 1) = ({lower}, 1)"
                    )));
                }
                Ok(())
            }
            FamilySpec::MarshallOlkin { alpha, beta } => {
                unit("alpha", alpha)?;
                unit("beta", beta)
            }
            FamilySpec::Frechet { alpha, beta } => {
                unit("alpha", alpha)?;
                unit("beta", beta)?;
                if alpha + beta > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha + beta = {} must not exceed 1",
                        alpha + beta
                    )));
                }
                Ok(())
            }
            FamilySpec::Efgm { alpha, d } => {
                if d == 0 {
                    return Err(Error::InvalidParameter("d must be at least 1".into()));
                }
                if !(-1.0..=1.0).contains(&alpha) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha = {alpha} must lie in [-1, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of predictors.
    pub fn dimension(&self) -> usize {
        match *self {
            FamilySpec::GaussianEquicorrelated { d, .. } | FamilySpec::Efgm { d, .. } => d,
            FamilySpec::MarshallOlkin { .. } | FamilySpec::Frechet { .. } => 1,
        }
    }

    /// Bivariate copula `A(u, v)`; `None` for d > 1.
    pub fn bivariate_cdf(&self) -> Option<Box<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        if self.dimension() != 1 {
            return None;
        }
        Some(match *self {
            FamilySpec::GaussianEquicorrelated { r, .. } => {
                Box::new(move |u, v| gaussian_copula(u, v, r))
            }
            FamilySpec::MarshallOlkin { alpha, beta } => {
                Box::new(move |u, v| marshall_olkin(u, v, alpha, beta))
            }
            FamilySpec::Frechet { alpha, beta } => Box::new(move |u, v| frechet(u, v, alpha, beta)),
            FamilySpec::Efgm { alpha, .. } => Box::new(move |u, v| efgm(u, v, alpha)),
        })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilySpec::GaussianEquicorrelated { r, d } => write!(f, "gauss:r={r},d={d}"),
            FamilySpec::MarshallOlkin { alpha, beta } => write!(f, "mo:a={alpha},b={beta}"),
            FamilySpec::Frechet { alpha, beta } => write!(f, "frechet:a={alpha},b={beta}"),
            FamilySpec::Efgm { alpha, d } => write!(f, "efgm:a={alpha},d={d}"),
        }
    }
}

/// Parses `gauss:r=0.6,d=1`, `mo:a=1,b=0.4`, `frechet:a=0.5,b=0.5`, `efgm:a=1,d=2`.
/// `d` defaults to 1.
impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: String| Error::FamilyParse {
            spec: spec.to_string(),
            reason,
        };
        let (kind, params) = spec
            .split_once(':')
            .ok_or_else(|| fail("expected `<family>:<key>=<value>,...`".into()))?;
        let mut values = std::collections::BTreeMap::new();
        for item in params.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| fail(format!("`{item}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| fail(format!("`{value}` is not a number")))?;
            values.insert(key.trim().to_string(), value);
        }
        let mut take = |key: &str, default: Option<f64>| {
            values
                .remove(key)
                .or(default)
                .ok_or_else(|| fail(format!("missing parameter `{key}`")))
        };
        let dim = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(fail(format!("d = {v} must be a positive integer")))
            }
        };
        let family = match kind.trim() {
            "gauss" | "gaussian" => FamilySpec::GaussianEquicorrelated {
                r: take("r", None)?,
                d: dim(take("d", Some(1.0))?)?,
            },
            "mo" | "marshall-olkin" => FamilySpec::MarshallOlkin {
                alpha: take("a", None)?,
                beta: take("b", None)?,
            },
            "frechet" => FamilySpec::Frechet {
                alpha: take("a", None)?,
                beta: take("b", None)?,
            },
            "efgm" => FamilySpec::Efgm {
                alpha: take("a", None)?,
                d: dim(take("d", Some(1.0))?)?,
            },
            other => return Err(fail(format!("unknown family `{other}`"))),
        };
        if let Some(key) = values.keys().next() {
            return Err(fail(format!("unexpected parameter `{key}`")));
        }
        family.validate()?;
        Ok(family)
    }
}

pub fn gaussian_copula(u: f64, v: f64, r: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v.min(1.0);
    }
    if v >= 1.0 {
        return u;
    }
    bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), r)
}

pub fn marshall_olkin(u: f64, v: f64, alpha: f64, beta: f64) -> f64 {
    (u.powf(1.0 - alpha) * v).min(u * v.powf(1.0 - beta))
}

pub fn frechet(u: f64, v: f64, alpha: f64, beta: f64) -> f64 {
    alpha * u.min(v) + (1.0 - alpha - beta) * u * v + beta * (u + v - 1.0).max(0.0)
}

pub fn efgm(u: f64, v: f64, alpha: f64) -> f64 {
    u * v + alpha * u * (1.0 - u) * v * (1.0 - v)
}

/// Draws n i.i.d. observations on the copula scale.
pub fn sample(family: &FamilySpec, n: usize, seed: SeedSpec) -> Result<Dataset> {
    family.validate()?;
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            got: n,
        });
    }
    let d = family.dimension();
    let mut rng = seed.rng(Stream::Sampling);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    match *family {
        FamilySpec::GaussianEquicorrelated { r, d } => {
            let factor = equicorrelation_cholesky(r, d)?;
            let mut z = vec![0.0; d + 1];
            let mut e = vec![0.0; d + 1];
            for _ in 0..n {
                for slot in e.iter_mut() {
                    *slot = rng.sample(StandardNormal);
                }
                for (row, zi) in z.iter_mut().enumerate() {
                    *zi = (0..=row).map(|col| factor[(row, col)] * e[col]).sum();
                }
                x.extend(z[..d].iter().map(|&v| normal_cdf(v)));
                y.push(normal_cdf(z[d]));
            }
        }
        FamilySpec::MarshallOlkin { alpha, beta } => {
            // U = max(V1^{1/(1-α)}, V12^{1/α}), V = max(V2^{1/(1-β)}, V12^{1/β})
            // with independent uniforms; a vanishing exponent drops its shock.
            let shock = |w: f64, share: f64| {
                if share > 0.0 {
                    w.powf(1.0 / share)
                } else {
                    0.0
                }
            };
            for _ in 0..n {
                let (w1, w2, w12): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
                x.push(shock(w1, 1.0 - alpha).max(shock(w12, alpha)));
                y.push(shock(w2, 1.0 - beta).max(shock(w12, beta)));
            }
        }
        FamilySpec::Frechet { alpha, beta } => {
            for _ in 0..n {
                let u: f64 = rng.random();
                let pick: f64 = rng.random();
                let v = if pick < alpha {
                    u
                } else if pick < alpha + beta {
                    1.0 - u
                } else {
                    rng.random()
                };
                x.push(u);
                y.push(v);
            }
        }
        FamilySpec::Efgm { alpha, d } => {
            for _ in 0..n {
                let mut tilt = alpha;
                for _ in 0..d {
                    let u: f64 = rng.random();
                    tilt *= 1.0 - 2.0 * u;
                    x.push(u);
                }
                // conditional cdf v + a v (1 - v) = w, solved for the root in [0, 1]
                let w: f64 = rng.random();
                let v = if tilt.abs() < 1e-12 {
                    w
                } else {
                    let b = 1.0 + tilt;
                    (2.0 * w) / (b + (b * b - 4.0 * tilt * w).sqrt())
                };
                y.push(v);
            }
        }
    }
    Dataset::from_flat(x, d, y)
}

/// Lower-triangular factor of `(1-r) I + r 11ᵀ` of size d+1.
fn equicorrelation_cholesky(r: f64, d: usize) -> Result<DMatrix<f64>> {
    let size = d + 1;
    // eigenvalues 1 - r (multiplicity d) and 1 + d r
    if 1.0 - r <= 0.0 || 1.0 + d as f64 * r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "equicorrelation matrix with r = {r}, d = {d} is not positive definite"
        )));
    }
    let matrix = DMatrix::from_fn(size, size, |i, j| if i == j { 1.0 } else { r });
    matrix
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidParameter(format!("Cholesky failed for r = {r}, d = {d}")))
}

/// `r*(d) = d r² / (1 + (d-1) r)`.
pub fn gaussian_r_star(r: f64, d: usize) -> f64 {
    let d = d as f64;
    d * r * r / (1.0 + (d - 1.0) * r)
}

/// The exact ψ image of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiClosedForm {
    Independence,
    Gaussian {
        r_star: f64,
    },
    /// A bivariate Marshall-Olkin copula (the α = 1 image is `A_{β,β}`).
    MarshallOlkin {
        alpha: f64,
        beta: f64,
    },
    /// ψ of `A_{α,β}` for `α ∉ {0, 1}`, which is not itself Marshall-Olkin.
    MarshallOlkinImage {
        alpha: f64,
        beta: f64,
    },
    Frechet {
        alpha_star: f64,
        beta_star: f64,
    },
    Efgm {
        alpha_star: f64,
    },
}

impl PsiClosedForm {
    pub fn evaluate(&self, s: f64, t: f64) -> f64 {
        match *self {
            PsiClosedForm::Independence => s * t,
            PsiClosedForm::Gaussian { r_star } => gaussian_copula(s, t, r_star),
            PsiClosedForm::MarshallOlkin { alpha, beta } => marshall_olkin(s, t, alpha, beta),
            PsiClosedForm::MarshallOlkinImage { alpha, beta } => mo_image(s, t, alpha, beta),
            PsiClosedForm::Frechet {
                alpha_star,
                beta_star,
            } => frechet(s, t, alpha_star, beta_star),
            PsiClosedForm::Efgm { alpha_star } => efgm(s, t, alpha_star),
        }
    }

    /// Values at the nodes of an N-grid; copula invariants are checked.
    pub fn grid(&self, resolution: usize) -> Result<GridCopula> {
        grid_from_function(|s, t| self.evaluate(s, t), resolution)
    }
}

/// ψ of a Marshall-Olkin copula with `0 < α < 1`, `β > 0`:
/// `Π + α²/(1-2α) Π (1 - max(s,t)^{β(1-2α)/α})`, and at `α = 1/2`
/// the limit `Π + (β/2) Π (log M - log Π)`.
fn mo_image(s: f64, t: f64, alpha: f64, beta: f64) -> f64 {
    let pi = s * t;
    let top = s.max(t);
    if pi == 0.0 {
        return 0.0;
    }
    if (alpha - 0.5).abs() < 1e-12 {
        return pi - 0.5 * beta * pi * top.ln();
    }
    let exponent = beta * (1.0 - 2.0 * alpha) / alpha;
    pi + alpha * alpha / (1.0 - 2.0 * alpha) * pi * (1.0 - top.powf(exponent))
}

pub fn psi_closed_form(family: &FamilySpec) -> Result<PsiClosedForm> {
    family.validate()?;
    Ok(match *family {
        FamilySpec::GaussianEquicorrelated { r, d } => PsiClosedForm::Gaussian {
            r_star: gaussian_r_star(r, d),
        },
        FamilySpec::MarshallOlkin { alpha, beta } => {
            if alpha.min(beta) == 0.0 {
                PsiClosedForm::Independence
            } else if alpha == 1.0 {
                PsiClosedForm::MarshallOlkin { alpha: beta, beta }
            } else {
                PsiClosedForm::MarshallOlkinImage { alpha, beta }
            }
        }
        FamilySpec::Frechet { alpha, beta } => PsiClosedForm::Frechet {
            alpha_star: alpha * alpha + beta * beta,
            beta_star: 2.0 * alpha * beta,
        },
        FamilySpec::Efgm { alpha, d } => PsiClosedForm::Efgm {
            alpha_star: alpha * alpha / 3f64.powi(d as i32),
        },
    })
}

/// Population values of footrule, Spearman's rho and Gini's gamma of ψ(A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormMeasures {
    pub t: f64,
    pub r2: f64,
    pub q: f64,
}

pub fn closed_form_measures(family: &FamilySpec) -> Result<ClosedFormMeasures> {
    family.validate()?;
    Ok(match *family {
        FamilySpec::GaussianEquicorrelated { r, d } => {
            let rs = gaussian_r_star(r, d);
            let upper = ((1.0 + rs) / 2.0).asin();
            let lower = ((1.0 - rs) / 2.0).asin();
            ClosedFormMeasures {
                t: 3.0 / PI * upper - 0.5,
                r2: 6.0 / PI * (rs / 2.0).asin(),
                q: 2.0 / PI * (upper - lower),
            }
        }
        FamilySpec::MarshallOlkin { alpha, beta } => {
            if alpha.min(beta) == 0.0 {
                ClosedFormMeasures {
                    t: 0.0,
                    r2: 0.0,
                    q: 0.0,
                }
            } else if alpha == 1.0 {
                ClosedFormMeasures {
                    t: 2.0 * beta / (3.0 - beta),
                    r2: 3.0 * beta / (4.0 - beta),
                    q: (4.0 - beta) / ((2.0 - beta) * (3.0 - beta)) * (4.0 - 2f64.powf(beta)) - 2.0,
                }
            } else {
                return Err(Error::NoClosedForm(format!(
                    "Marshall-Olkin measures are tabulated for alpha = 1 only (got alpha = {alpha})"
                )));
            }
        }
        FamilySpec::Frechet { alpha, beta } => ClosedFormMeasures {
            t: (alpha - beta).powi(2) + alpha * beta,
            r2: (alpha - beta).powi(2),
            q: (alpha - beta).powi(2),
        },
        FamilySpec::Efgm { alpha, d } => {
            let three_d = 3f64.powi(d as i32);
            ClosedFormMeasures {
                t: alpha * alpha / (three_d * 5.0),
                r2: alpha * alpha / (three_d * 3.0),
                q: 4.0 * alpha * alpha / (three_d * 3.0 * 5.0),
            }
        }
    })
}

/// Bertino copula with diagonal `t²`, the pointwise lower bound of every ψ(A).
pub fn bertino_bound(s: f64, t: f64) -> f64 {
    let (lo, hi) = (s.min(t), s.max(t));
    if s + t <= 1.0 {
        lo * lo
    } else {
        lo - hi + hi * hi
    }
}
