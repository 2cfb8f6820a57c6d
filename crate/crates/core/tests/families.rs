use depsi_core::families::checkerboard::psi_checkerboard;
use depsi_core::families::gaussian_r_star;
use depsi_core::measures::DependenceFunctionals;
use depsi_core::model::upper_bound;
use depsi_core::{
    bertino_bound, closed_form_measures, discretize, grid_sup_distance, psi_closed_form,
    FamilySpec, GridCopula,
};

fn families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::GaussianEquicorrelated { r: 0.6, d: 1 },
        FamilySpec::GaussianEquicorrelated { r: -0.5, d: 1 },
        FamilySpec::GaussianEquicorrelated { r: 0.4, d: 3 },
        FamilySpec::MarshallOlkin {
            alpha: 1.0,
            beta: 0.4,
        },
        FamilySpec::MarshallOlkin {
            alpha: 0.3,
            beta: 0.7,
        },
        FamilySpec::MarshallOlkin {
            alpha: 0.5,
            beta: 0.6,
        },
        FamilySpec::Frechet {
            alpha: 0.3,
            beta: 0.2,
        },
        FamilySpec::Frechet {
            alpha: 0.5,
            beta: 0.5,
        },
        FamilySpec::Efgm { alpha: 1.0, d: 1 },
        FamilySpec::Efgm { alpha: -0.7, d: 2 },
    ]
}

/// ψ(A)(s,t) = ∫ ∂₁A(x,s) ∂₁A(x,t) dx for d = 1, by central differences and
/// the midpoint rule. Independent of every closed form in the crate.
fn markov_product(family: &FamilySpec, s: f64, t: f64) -> f64 {
    let cdf = family.bivariate_cdf().expect("d = 1");
    let m = 4000;
    let h = 1e-6;
    (0..m)
        .map(|k| {
            let x = (k as f64 + 0.5) / m as f64;
            let ds = (cdf(x + h, s) - cdf(x - h, s)) / (2.0 * h);
            let dt = (cdf(x + h, t) - cdf(x - h, t)) / (2.0 * h);
            ds * dt
        })
        .sum::<f64>()
        / m as f64
}

#[test]
fn closed_forms_match_markov_product_quadrature() {
    let probes = [
        (0.1, 0.9),
        (0.25, 0.75),
        (0.5, 0.5),
        (0.3, 0.35),
        (0.8, 0.95),
        (0.6, 0.2),
    ];
    for family in families().iter().filter(|f| f.dimension() == 1) {
        let psi = psi_closed_form(family).unwrap();
        for &(s, t) in &probes {
            let oracle = markov_product(family, s, t);
            let got = psi.evaluate(s, t);
            assert!(
                (oracle - got).abs() < 2e-3,
                "{family} at ({s},{t}): closed form {got}, quadrature {oracle}"
            );
        }
    }
}

#[test]
fn grid_functionals_agree_with_tabulated_measures() {
    for family in families() {
        let Ok(expected) = closed_form_measures(&family) else {
            continue;
        };
        let grid = psi_closed_form(&family).unwrap().grid(200).unwrap();
        assert!((grid.footrule() - expected.t).abs() < 5e-3, "{family}: T");
        assert!(
            (grid.spearman_rho() - expected.r2).abs() < 5e-3,
            "{family}: R2"
        );
        assert!((grid.gini_gamma() - expected.q).abs() < 5e-3, "{family}: Q");
    }
}

#[test]
fn frechet_half_half_is_a_fixed_point() {
    let family = FamilySpec::Frechet {
        alpha: 0.5,
        beta: 0.5,
    };
    let psi = psi_closed_form(&family).unwrap();
    let cdf = family.bivariate_cdf().unwrap();
    for i in 0..=20 {
        for j in 0..=20 {
            let (s, t) = (i as f64 / 20.0, j as f64 / 20.0);
            assert_eq!(psi.evaluate(s, t), cdf(s, t), "at ({s},{t})");
        }
    }
    assert_eq!(psi.evaluate(0.25, 0.75), 2.0 / 16.0);
    assert!(psi.evaluate(0.25, 0.75) < 0.25 * 0.75);
}

fn grids() -> Vec<(FamilySpec, GridCopula)> {
    families()
        .into_iter()
        .map(|f| {
            let g = psi_closed_form(&f).unwrap().grid(50).unwrap();
            (f, g)
        })
        .collect()
}

#[test]
fn every_image_lies_between_bertino_and_upper_bound() {
    for (family, grid) in grids() {
        for (s, t, v) in grid.nodes() {
            assert!(
                bertino_bound(s, t) - 1e-9 <= v,
                "{family} below Bertino at ({s},{t})"
            );
            assert!(
                v <= upper_bound(s, t) + 1e-9,
                "{family} above M at ({s},{t})"
            );
        }
    }
}

#[test]
fn every_image_is_exchangeable() {
    for (family, grid) in grids() {
        let n = grid.resolution();
        for i in 0..=n {
            for j in 0..i {
                assert!(
                    (grid.get(i, j) - grid.get(j, i)).abs() <= 1e-9,
                    "{family} at ({i},{j})"
                );
            }
        }
    }
}

#[test]
fn holder_diagonal_domination() {
    for (family, grid) in grids() {
        let n = grid.resolution();
        for i in 0..=n {
            for j in 0..=n {
                let lhs = grid.get(i, j).powi(2);
                let rhs = grid.get(i, i) * grid.get(j, j);
                assert!(lhs <= rhs + 1e-9, "{family} at ({i},{j}): {lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn r_star_is_below_r_and_grows_with_dimension() {
    for k in 1..20 {
        let r = k as f64 / 20.0;
        let mut previous = 0.0;
        for d in 1..=12 {
            let rs = gaussian_r_star(r, d);
            assert!(rs < r, "r = {r}, d = {d}");
            assert!(rs > previous, "r = {r}, d = {d}");
            previous = rs;
        }
    }
}

#[test]
fn checkerboard_oracle_converges_to_closed_form() {
    for family in [
        FamilySpec::Frechet {
            alpha: 0.3,
            beta: 0.2,
        },
        FamilySpec::Efgm { alpha: 1.0, d: 1 },
    ] {
        let exact = psi_closed_form(&family).unwrap().grid(160).unwrap();
        let distances: Vec<f64> = [10, 40, 160]
            .iter()
            .map(|&n| {
                let cb = psi_checkerboard(&discretize(&family, n).unwrap()).unwrap();
                grid_sup_distance(&cb.to_grid(160).unwrap(), &exact).unwrap()
            })
            .collect();
        assert!(
            distances.windows(2).all(|w| w[1] < w[0]),
            "{family}: {distances:?}"
        );
        assert!(distances[2] <= 0.02, "{family}: {distances:?}");
    }
}

#[test]
fn efgm_checkerboard_rho() {
    let family = FamilySpec::Efgm { alpha: 1.0, d: 1 };
    let cb = psi_checkerboard(&discretize(&family, 160).unwrap()).unwrap();
    let rho = cb.to_grid(200).unwrap().spearman_rho();
    assert!((rho - 1.0 / 9.0).abs() < 0.01, "rho = {rho}");
}

#[test]
fn multivariate_efgm_checkerboard_tracks_alpha_star() {
    let family = FamilySpec::Efgm { alpha: 1.0, d: 2 };
    let cb = psi_checkerboard(&discretize(&family, 60).unwrap()).unwrap();
    let exact = psi_closed_form(&family).unwrap().grid(60).unwrap();
    assert!(grid_sup_distance(&cb.to_grid(60).unwrap(), &exact).unwrap() < 0.01);
}
