//! Directed dependence of a response `Y` on predictors `X = (X_1, …, X_d)`
//! through the bivariate copula ψ(A): the law of `(G(Y), G(Y'))` where `Y`
//! and `Y'` are conditionally independent copies given `X`.
//!
//! Evaluating ψ(A) with Spearman's footrule, Spearman's rho and Gini's gamma
//! gives three measures:
//!
//! | measure | functional | zero iff | one iff |
//! |---------|------------|----------|---------|
//! | `T` | footrule | `Y ⟂ X` | `Y = f(X)` |
//! | `R²` | rho | `E(G(Y) | X)` constant | `Y = f(X)` |
//! | `Q` | gamma | `(X, Y)` and `(X, -Y)` share a copula | `Y = f(X)` |
//!
//! The sample versions use ranks of `Y` and the Euclidean nearest-neighbour
//! graph of the `X` rows ([`measures::t_n`], [`measures::r2_n`],
//! [`measures::q_n`]); ψ itself is estimated by [`psi::estimate_psi`].

pub mod error;
pub mod families;
pub mod measures;
pub mod model;
pub mod nn;
pub mod psi;
pub mod ranks;
pub mod selection;

pub use error::{Error, Result};
pub use families::{
    bertino_bound, closed_form_measures, discretize, psi_checkerboard, psi_closed_form, sample,
    FamilySpec, PsiClosedForm,
};
pub use measures::{
    footrule, gini_gamma, measure_report, q_n, r2_n, spearman_rho, t_n, DependenceFunctionals,
    MeasureReport,
};
pub use model::{grid_from_function, grid_sup_distance, Dataset, GridCopula, SeedSpec, Stream};
pub use nn::{indegree_bound_check, nn_index, NnIndex};
pub use psi::{cn_dn_gap, estimate_psi, EmpiricalPsi, Variant};
pub use ranks::{ecdf, rank_profile, renormalized_ecdf, RankProfile};
pub use selection::{select_features, SelectionTrace};
