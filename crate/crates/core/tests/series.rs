use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use schwarz_core::esums::{esum_nn_with, esum_with, required_indices, Kernels, MultiIndex};
use schwarz_core::geometry::rsa_generate;
use schwarz_core::series::{
    a13, cluster_coeffs, contrast_bracket, lambda_cluster, lambda_contrast, lambda_dilute, lambda_pade, zeta1,
    ContrastReduction, Provenance,
};
use schwarz_core::solver::shape_factor;
use schwarz_core::{Cell, DiskConfiguration, EnsembleDescriptor};

fn config(seed: u64) -> DiskConfiguration {
    rsa_generate(&EnsembleDescriptor::new(12, 0.3, 1, seed)).unwrap()
}

fn esum_table(config: &DiskConfiguration) -> (HashMap<MultiIndex, Complex64>, BTreeMap<usize, Complex64>) {
    let config = config.with_max_order(12);
    let kernels = Kernels::build(&config, 12).unwrap();
    let table = required_indices(6)
        .unwrap()
        .into_iter()
        .map(|m| {
            let v = esum_with(&kernels, &m).unwrap();
            (m, v)
        })
        .collect();
    let enn = (2..=12).map(|n| (n, esum_nn_with(&kernels, n).unwrap())).collect();
    (table, enn)
}

/// Coefficients of the interpolating polynomial through `(x_i, y_i)`.
fn interpolate(xs: &[f64], ys: &[Complex64]) -> Vec<Complex64> {
    let n = xs.len();
    // Newton divided differences, then expand to monomials.
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        // coeffs <- coeffs * (x - xs[i]) + dd[i]
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            if k + 1 < n {
                next[k + 1] += coeffs[k];
            }
            next[k] -= coeffs[k] * xs[i];
        }
        next[0] += dd[i];
        coeffs = next;
    }
    coeffs
}

fn e(table: &HashMap<MultiIndex, Complex64>, s: &str) -> Complex64 {
    table[&s.parse::<MultiIndex>().unwrap()]
}

#[test]
fn coefficient_structure_in_rho() {
    let (table, _) = esum_table(&config(4));
    let rhos = [-1.0, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8];
    let values: Vec<Vec<Complex64>> = rhos
        .iter()
        .map(|&rho| cluster_coeffs(&table, rho, 6, Provenance::PerConfiguration).unwrap().values)
        .collect();
    for n in 1..=6 {
        let ys: Vec<Complex64> = values.iter().map(|v| v[n - 1]).collect();
        let poly = interpolate(&rhos, &ys);
        let scale = ys.iter().map(|y| y.norm()).fold(1.0, f64::max);
        assert!(poly[0].norm() < 1e-12 * scale);
        if n >= 2 {
            assert!(poly[1].norm() < 1e-12 * scale);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let idx = format!("{n}-{n}");
            let expected = if n == 2 { e(&table, "2-2") } else { e(&table, &idx) * (sign * (n - 1) as f64) };
            assert!((poly[2] - expected / PI.powi(n as i32)).norm() < 1e-10 * scale, "A{n}");
        }
        let chain = vec!["2"; n].join("-");
        assert!((poly[n] - e(&table, &chain) / PI.powi(n as i32)).norm() < 1e-10 * scale, "A{n}");
        // Parity: A_n(-ρ) flips exactly the odd powers.
        for (i, &rho) in rhos.iter().enumerate() {
            let flipped: Complex64 = poly.iter().enumerate().map(|(p, c)| c * (-rho).powi(p as i32)).sum();
            let direct = cluster_coeffs(&table, -rho, 6, Provenance::PerConfiguration).unwrap().values[n - 1];
            assert!((flipped - direct).norm() < 1e-10 * scale, "A{n} at {}", rhos[i]);
        }
    }
}

#[test]
fn truncation_orders_scale_with_concentration() {
    let (table, _) = esum_table(&config(6));
    let rho = 0.9;
    for j in 2..=6 {
        let hi = cluster_coeffs(&table, rho, j, Provenance::PerConfiguration).unwrap();
        let lo = cluster_coeffs(&table, rho, j - 1, Provenance::PerConfiguration).unwrap();
        let nus = [0.05, 0.1, 0.15, 0.2, 0.25];
        let diffs: Vec<f64> = nus
            .iter()
            .map(|&nu| (lambda_cluster(rho, nu, &hi).unwrap().lambda11 - lambda_cluster(rho, nu, &lo).unwrap().lambda11).abs())
            .collect();
        let slope = (diffs[4] / diffs[0]).ln() / (nus[4] / nus[0]).ln();
        assert!(slope >= j as f64 + 0.5, "J={j}: slope {slope}");
    }
}

#[test]
fn cluster_and_contrast_share_low_order_coefficients() {
    let cfg = config(8);
    let (table, enn) = esum_table(&cfg);
    let nu = 0.2;
    // The cluster series is a degree-7 polynomial in ρ.
    let rhos: Vec<f64> = (0..8).map(|i| -0.9 + 0.25 * i as f64).collect();
    let ys: Vec<Complex64> = rhos
        .iter()
        .map(|&rho| {
            let c = cluster_coeffs(&table, rho, 6, Provenance::PerConfiguration).unwrap();
            lambda_cluster(rho, nu, &c).unwrap().complex()
        })
        .collect();
    let cluster = interpolate(&rhos, &ys);
    let e2 = e(&table, "2");
    // Contrast series: exact polynomial of degree 3 in ρ.
    let cs: Vec<Complex64> = [-0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&rho| {
            lambda_contrast(nu, &enn, rho, 6, ContrastReduction::PerConfiguration { e2 }).unwrap().complex()
        })
        .collect();
    let contrast = interpolate(&[-0.5, 0.0, 0.5, 1.0], &cs);
    for p in 0..=3 {
        assert!((cluster[p] - contrast[p]).norm() < 1e-8, "rho^{p}: {} vs {}", cluster[p], contrast[p]);
    }
    assert!((contrast[1] - 2.0 * nu).norm() < 1e-12);
}

#[test]
fn isotropic_contrast_uses_pi() {
    let (_, enn) = esum_table(&config(2));
    for nu in [0.05, 0.2, 0.4] {
        let at = |rho: f64| lambda_contrast(nu, &enn, rho, 12, ContrastReduction::Isotropic).unwrap().complex();
        // Second finite difference at 0 isolates 2 * (coefficient of ρ²) h².
        let h = 1e-2;
        let rho2 = (at(h) + at(-h) - 2.0 * at(0.0)) / (2.0 * h * h);
        let (bracket, _) = contrast_bracket(nu, &enn, 12).unwrap();
        assert!((rho2 - 2.0 * nu * nu).norm() < 1e-9);
        let rho3 = (at(h) - at(-h)) / (2.0 * h) - 2.0 * nu;
        assert!((rho3 - bracket * 2.0 * nu.powi(3) * h * h).norm() < 1e-12);
    }
    assert!(lambda_contrast(0.1, &enn, 0.0, 12, ContrastReduction::Isotropic).unwrap().lambda11 == 1.0);
    assert!(lambda_contrast(0.1, &enn, 0.5, 1, ContrastReduction::Isotropic).is_err());
}

#[test]
fn zeta1_and_a13_identity() {
    let (_, enn) = esum_table(&config(3));
    for nu in [0.1, 0.3, 0.45] {
        let z = zeta1(nu, &enn, 12).unwrap();
        let direct = {
            let mut s = 0.0;
            for n in 2..=12 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * (n - 1) as f64 * enn[&n].re * nu.powi(n as i32 - 2) / PI.powi(n as i32);
            }
            nu.powi(3) * (s - 1.0)
        };
        assert!((a13(nu, &enn, 12).unwrap() - z * nu * (1.0 - nu)).abs() < 1e-14);
        assert!((a13(nu, &enn, 12).unwrap() - direct).abs() < 1e-14);
    }
    // Leading behaviour with only the n = 2 term.
    let nu: f64 = 0.01;
    let z = zeta1(nu, &enn, 2).unwrap();
    assert!((z - nu * nu * (enn[&2].re / (PI * PI) - 1.0) / (1.0 - nu)).abs() < 1e-16);
}

#[test]
fn shape_factor_is_close_to_one() {
    let cell = Cell::square();
    let r = |nu: f64| (nu / PI).sqrt();
    let a1 = shape_factor(&cell, r(0.1), 1.0).unwrap();
    let a05 = shape_factor(&cell, r(0.1), 0.5).unwrap();
    assert!((a1 - 1.0).abs() < 0.05);
    assert!((a1 - a05).abs() < 0.1 * 0.1);
    let small = shape_factor(&cell, r(0.01), 1.0).unwrap();
    assert!((small - 1.0).abs() < (a1 - 1.0).abs());
}

proptest! {
    #[test]
    fn pade_dominates_dilute(nu in 0.01f64..0.6, rho in 0.0f64..1.0, alpha in 0.5f64..1.5) {
        prop_assume!(rho * nu * alpha < 0.9);
        let d = lambda_dilute(nu, rho, alpha).unwrap().lambda11;
        let p = lambda_pade(nu, rho, alpha).unwrap().lambda11;
        prop_assert!(p >= d - 1e-15);
        prop_assert!(d >= 1.0 - 1e-15);
    }

    #[test]
    fn zero_contrast_gives_unity(nu in 0.01f64..0.9, j in 1usize..7, seed in 0u64..4) {
        let (table, enn) = esum_table(&config(seed));
        let c = cluster_coeffs(&table, 0.0, j, Provenance::Ensemble).unwrap();
        prop_assert_eq!(lambda_cluster(0.0, nu, &c).unwrap().complex(), Complex64::new(1.0, 0.0));
        let cs = lambda_contrast(nu, &enn, 0.0, 12, ContrastReduction::Isotropic).unwrap();
        prop_assert_eq!(cs.lambda11, 1.0);
    }
}
