//! Closed-form series for the effective conductivity.
//!
//! * Cluster series in the concentration:
//!   `λ11 - iλ12 = 1 + 2ρν(1 + A_1 ν + ... + A_J ν^J)`, with each `A_n`
//!   a fixed polynomial in `ρ` over structural sums.
//! * Contrast series in `ρ` to third order, per configuration or for an
//!   isotropic ensemble.
//! * The Torquato–Milton parameter `ζ1`, the related `A3^(1)`, and the dilute
//!   and Padé (1,1) formulas.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esums::MultiIndex;

pub const MAX_CLUSTER_ORDER: usize = 6;

type Term = (i32, f64, &'static [usize]);

/// `A_n = π^{-n} Σ coeff · ρ^power · e_index`, one slice per order.
pub(crate) const CLUSTER_TERMS: [&[Term]; MAX_CLUSTER_ORDER] = [
    &[(1, 1.0, &[2])],
    &[(2, 1.0, &[2, 2])],
    &[(2, -2.0, &[3, 3]), (3, 1.0, &[2, 2, 2])],
    &[
        (2, 3.0, &[4, 4]),
        (3, -2.0, &[3, 3, 2]),
        (3, -2.0, &[2, 3, 3]),
        (4, 1.0, &[2, 2, 2, 2]),
    ],
    &[
        (2, -4.0, &[5, 5]),
        (3, 3.0, &[4, 4, 2]),
        (3, 6.0, &[3, 4, 3]),
        (3, 3.0, &[2, 4, 4]),
        (4, -2.0, &[3, 3, 2, 2]),
        (4, -2.0, &[2, 3, 3, 2]),
        (4, -2.0, &[2, 2, 3, 3]),
        (5, 1.0, &[2, 2, 2, 2, 2]),
    ],
    &[
        (2, 5.0, &[6, 6]),
        (3, -4.0, &[2, 5, 5]),
        (3, -12.0, &[3, 5, 4]),
        (3, -12.0, &[4, 5, 3]),
        (3, -4.0, &[5, 5, 2]),
        (4, 3.0, &[2, 2, 4, 4]),
        (4, 6.0, &[2, 3, 4, 3]),
        (4, 4.0, &[3, 3, 3, 3]),
        (4, 3.0, &[2, 4, 4, 2]),
        (4, 6.0, &[3, 4, 3, 2]),
        (4, 3.0, &[4, 4, 2, 2]),
        (5, -2.0, &[2, 2, 2, 3, 3]),
        (5, -2.0, &[2, 2, 3, 3, 2]),
        (5, -2.0, &[2, 3, 3, 2, 2]),
        (5, -2.0, &[3, 3, 2, 2, 2]),
        (6, 1.0, &[2, 2, 2, 2, 2, 2]),
    ],
];

/// Whether structural sums come from one configuration or an ensemble mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PerConfiguration,
    Ensemble,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterCoefficients {
    /// `values[n - 1] = A_n`.
    pub values: Vec<Complex64>,
    pub rho: f64,
    pub provenance: Provenance,
}

impl ClusterCoefficients {
    pub fn order(&self) -> usize {
        self.values.len()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    Ok(())
}

/// `A_1..A_order` from a table of structural sums.
pub fn cluster_coeffs(
    esums: &HashMap<MultiIndex, Complex64>,
    rho: f64,
    order: usize,
    provenance: Provenance,
) -> Result<ClusterCoefficients> {
    check_rho(rho)?;
    if !(1..=MAX_CLUSTER_ORDER).contains(&order) {
        return Err(Error::Domain(format!(
            "cluster order must lie in 1..={MAX_CLUSTER_ORDER}, got {order}"
        )));
    }
    let mut values = Vec::with_capacity(order);
    for (n, terms) in CLUSTER_TERMS[..order].iter().enumerate() {
        let mut a = Complex64::new(0.0, 0.0);
        for &(power, coeff, idx) in terms.iter() {
            let mi = MultiIndex::new(idx.to_vec())?;
            let e = esums.get(&mi).ok_or_else(|| Error::MissingIndex(mi.to_string()))?;
            a += e * coeff * rho.powi(power);
        }
        values.push(a / PI.powi(n as i32 + 1));
    }
    Ok(ClusterCoefficients { values, rho, provenance })
}

/// Method used to obtain an effective conductivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClusterSeries,
    ContrastSeries,
    Solver,
    Dilute,
    Pade,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClusterSeries => "cluster-series",
            Method::ContrastSeries => "contrast-series",
            Method::Solver => "solver",
            Method::Dilute => "dilute",
            Method::Pade => "pade",
        }
    }
}

/// Effective conductivity tensor components `λ11`, `λ12` and the isotropic
/// reading `λ_e = λ11`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveResult {
    pub lambda11: f64,
    pub lambda12: f64,
    pub lambda_e: f64,
    pub method: Method,
    pub rho: f64,
    pub nu: f64,
    /// Cluster order `J` or contrast tail length `n_max`.
    pub order: Option<usize>,
    /// Magnitude of the last retained term, when the method truncates.
    pub last_term: Option<f64>,
}

impl EffectiveResult {
    /// Builds a result from `λ11 - iλ12`.
    pub fn from_complex(value: Complex64, method: Method, rho: f64, nu: f64) -> Self {
        EffectiveResult {
            lambda11: value.re,
            lambda12: -value.im,
            lambda_e: value.re,
            method,
            rho,
            nu,
            order: None,
            last_term: None,
        }
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.lambda11, -self.lambda12)
    }
}

/// Cluster series truncated at the order of `coeffs`.
pub fn lambda_cluster(rho: f64, nu: f64, coeffs: &ClusterCoefficients) -> Result<EffectiveResult> {
    check_nu(nu)?;
    check_rho(rho)?;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut last = 0.0;
    for (n, a) in coeffs.values.iter().enumerate() {
        let term = a * nu.powi(n as i32 + 1);
        last = (term * 2.0 * rho * nu).norm();
        sum += term;
    }
    let value = 1.0 + sum * 2.0 * rho * nu;
    let mut r = EffectiveResult::from_complex(value, Method::ClusterSeries, rho, nu);
    r.order = Some(coeffs.order());
    r.last_term = Some(last);
    Ok(r)
}

/// `Σ_{n=2}^{n_max} (-1)^n (n-1) e_nn ν^{n-2} / π^n`, with the magnitude of
/// its last term.
pub fn contrast_bracket(nu: f64, enn: &BTreeMap<usize, Complex64>, n_max: usize) -> Result<(Complex64, f64)> {
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max must be >= 2, got {n_max}")));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = 0.0;
    for n in 2..=n_max {
        let e = enn.get(&n).ok_or_else(|| Error::MissingIndex(format!("{n}-{n}")))?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = e * (sign * (n - 1) as f64 * nu.powi(n as i32 - 2) / PI.powi(n as i32));
        last = term.norm();
        sum += term;
    }
    Ok((sum, last))
}

/// How the second-order term of the contrast series is formed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContrastReduction {
    /// A single configuration with its own `e_2`.
    PerConfiguration { e2: Complex64 },
    /// Isotropic ensemble mean, where `ê_2 = π`.
    Isotropic,
}

/// Contrast series to third order in `ρ`.
pub fn lambda_contrast(
    nu: f64,
    enn: &BTreeMap<usize, Complex64>,
    rho: f64,
    n_max: usize,
    reduction: ContrastReduction,
) -> Result<EffectiveResult> {
    check_nu(nu)?;
    check_rho(rho)?;
    let (bracket, last) = contrast_bracket(nu, enn, n_max)?;
    let e2 = match reduction {
        ContrastReduction::PerConfiguration { e2 } => e2,
        ContrastReduction::Isotropic => Complex64::new(PI, 0.0),
    };
    let cube = 2.0 * rho.powi(3) * nu.powi(3);
    let value = 1.0 + 2.0 * rho * nu + e2 * (2.0 * rho * rho * nu * nu / PI) + bracket * cube;
    let mut r = EffectiveResult::from_complex(value, Method::ContrastSeries, rho, nu);
    r.order = Some(n_max);
    r.last_term = Some(last * cube.abs());
    Ok(r)
}

fn check_zeta_nu(nu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::Domain(format!("nu must lie in [0, 1), got {nu}")));
    }
    Ok(())
}

/// `ζ1 = ν²/(1-ν) [bracket - 1]` as a complex number; its imaginary part
/// should vanish for an isotropic ensemble.
pub fn zeta1_complex(nu: f64, enn: &BTreeMap<usize, Complex64>, n_max: usize) -> Result<Complex64> {
    check_zeta_nu(nu)?;
    let (bracket, _) = contrast_bracket(nu, enn, n_max)?;
    Ok((bracket - 1.0) * (nu * nu / (1.0 - nu)))
}

/// Real part of [`zeta1_complex`].
pub fn zeta1(nu: f64, enn: &BTreeMap<usize, Complex64>, n_max: usize) -> Result<f64> {
    Ok(zeta1_complex(nu, enn, n_max)?.re)
}

/// `A3^(1) = ζ1 ν (1 - ν)`.
pub fn a13(nu: f64, enn: &BTreeMap<usize, Complex64>, n_max: usize) -> Result<f64> {
    Ok(zeta1(nu, enn, n_max)? * nu * (1.0 - nu))
}

/// `λ ≈ 1 + 2ρνα`.
pub fn lambda_dilute(nu: f64, rho: f64, alpha: f64) -> Result<EffectiveResult> {
    check_nu(nu)?;
    check_rho(rho)?;
    let value = Complex64::new(1.0 + 2.0 * rho * nu * alpha, 0.0);
    Ok(EffectiveResult::from_complex(value, Method::Dilute, rho, nu))
}

/// `λ ≈ (1 + ρνα) / (1 - ρνα)`.
pub fn lambda_pade(nu: f64, rho: f64, alpha: f64) -> Result<EffectiveResult> {
    check_nu(nu)?;
    check_rho(rho)?;
    let x = rho * nu * alpha;
    if (1.0 - x).abs() < 1e-12 {
        return Err(Error::Pole(x));
    }
    let value = Complex64::new((1.0 + x) / (1.0 - x), 0.0);
    Ok(EffectiveResult::from_complex(value, Method::Pade, rho, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esums::required_indices;

    fn table(value: impl Fn(&MultiIndex) -> Complex64) -> HashMap<MultiIndex, Complex64> {
        required_indices(6).unwrap().into_iter().map(|m| (m.clone(), value(&m))).collect()
    }

    #[test]
    fn single_disk_square_first_coefficients() {
        let esums = table(|m| match m.to_string().as_str() {
            "2" => Complex64::new(PI, 0.0),
            "2-2" => Complex64::new(PI * PI, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let c = cluster_coeffs(&esums, 1.0, 2, Provenance::PerConfiguration).unwrap();
        assert!((c.values[0] - 1.0).norm() < 1e-15);
        assert!((c.values[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn zero_contrast() {
        let esums = table(|m| Complex64::new(m.weight(), 1.0));
        let c = cluster_coeffs(&esums, 0.0, 6, Provenance::Ensemble).unwrap();
        assert!(c.values.iter().all(|a| a.norm() == 0.0));
        let r = lambda_cluster(0.0, 0.3, &c).unwrap();
        assert_eq!((r.lambda11, r.lambda12), (1.0, 0.0));
    }

    #[test]
    fn missing_index_is_named() {
        let mut esums = table(|_| Complex64::new(1.0, 0.0));
        esums.remove(&"3-3".parse().unwrap());
        match cluster_coeffs(&esums, 0.5, 3, Provenance::Ensemble) {
            Err(Error::MissingIndex(s)) => assert_eq!(s, "3-3"),
            other => panic!("{other:?}"),
        }
        assert!(cluster_coeffs(&esums, 0.5, 2, Provenance::Ensemble).is_ok());
    }

    #[test]
    fn dilute_and_pade() {
        assert!((lambda_pade(0.5, 1.0, 1.0).unwrap().lambda11 - 3.0).abs() < 1e-15);
        assert_eq!(lambda_pade(0.5, 0.0, 1.0).unwrap().lambda11, 1.0);
        assert_eq!(lambda_dilute(0.5, 0.0, 1.0).unwrap().lambda11, 1.0);
        assert!((lambda_dilute(0.05, 1.0, 1.0).unwrap().lambda11 - 1.1).abs() < 1e-15);
        assert!(matches!(lambda_pade(0.5, 1.0, 2.0), Err(Error::Pole(_))));
        assert!(lambda_dilute(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zeta1_edge_cases() {
        let zeros: BTreeMap<usize, Complex64> = (2..=12).map(|n| (n, Complex64::new(0.0, 0.0))).collect();
        let nu: f64 = 0.3;
        assert!((zeta1(nu, &zeros, 12).unwrap() + nu * nu / (1.0 - nu)).abs() < 1e-15);
        let mut only22 = zeros.clone();
        only22.insert(2, Complex64::new(PI * PI, 0.0));
        assert!(zeta1(0.2, &only22, 12).unwrap().abs() < 1e-15);
        assert!(a13(0.2, &only22, 12).unwrap().abs() < 1e-15);
        assert!(zeta1(1.0, &zeros, 12).is_err());
        assert!(zeta1(0.3, &zeros, 1).is_err());
    }
}
