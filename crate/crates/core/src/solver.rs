//! Successive approximations for the functional equations on disks.
//!
//! Each flux `ψ_k` is a Taylor polynomial of degree `L` around `a_k`. The
//! lattice-summed operator `W` sends a monomial `c (z - a_m)^l` to
//! `conj(c) r^{2l+2} E_{l+2}(z - a_m)`, which is re-expanded around every
//! `a_k` using `E_n' = -n E_{n+1}`:
//!
//! ```text
//! [z - a_k]^j coefficient = (-1)^j C(l+1+j, j) E_{l+2+j}(a_k - a_m)
//! ```
//!
//! with the self term `m = k` regularized to `S_{l+2+j}`. The iteration is
//! `ψ <- ρ W ψ + 1` from `ψ ≡ 1`, and
//! `λ11 - iλ12 = 1 + 2ρν (1/N) Σ_k ψ_k(a_k)`.

use std::fs;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::esums::Kernels;
use crate::format::F17;
use crate::geometry::DiskConfiguration;
use crate::lattice::Cell;
use crate::series::{EffectiveResult, Method};

/// Eisenstein order needed by a field of degree `degree`: one order past
/// the retained degrees, to measure what truncation drops.
pub fn required_order(degree: usize) -> usize {
    2 * degree + 3
}

/// Per-disk Taylor coefficients `c[k][l]`, `l = 0..=degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorField {
    degree: usize,
    coeffs: Vec<Vec<Complex64>>,
}

impl TaylorField {
    pub fn zeros(n: usize, degree: usize) -> Self {
        TaylorField {
            degree,
            coeffs: vec![vec![Complex64::new(0.0, 0.0); degree + 1]; n],
        }
    }

    /// `ψ_k ≡ value` on every disk.
    pub fn constant(n: usize, degree: usize, value: Complex64) -> Self {
        let mut f = TaylorField::zeros(n, degree);
        for c in &mut f.coeffs {
            c[0] = value;
        }
        f
    }

    pub fn from_coeffs(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        let degree = coeffs.first().map(|c| c.len()).unwrap_or(1).saturating_sub(1);
        if coeffs.is_empty() || coeffs.iter().any(|c| c.len() != degree + 1) {
            return Err(Error::Domain("every disk needs the same number of coefficients".into()));
        }
        Ok(TaylorField { degree, coeffs })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: usize, l: usize) -> Complex64 {
        self.coeffs[k][l]
    }

    pub fn disk(&self, k: usize) -> &[Complex64] {
        &self.coeffs[k]
    }

    /// Only the degree-`l` coefficients kept.
    pub fn masked(&self, l: usize) -> Self {
        let mut f = TaylorField::zeros(self.n(), self.degree);
        for (dst, src) in f.coeffs.iter_mut().zip(&self.coeffs) {
            dst[l] = src[l];
        }
        f
    }

    /// `ψ_k(a_k + dz)`.
    pub fn eval(&self, k: usize, dz: Complex64) -> Complex64 {
        self.coeffs[k].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * dz + c)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        TaylorField {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.iter().map(|x| x * s).collect()).collect(),
        }
    }

    pub fn add(&self, other: &TaylorField) -> Self {
        TaylorField {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    /// `max_{k,l} |a_{k,l} - b_{k,l}| r^l`.
    pub fn distance(&self, other: &TaylorField, r: f64) -> f64 {
        let mut best: f64 = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            let mut rl = 1.0;
            for (x, y) in a.iter().zip(b) {
                best = best.max((x - y).norm() * rl);
                rl *= r;
            }
        }
        best
    }

    /// Mean of the center values `(1/N) Σ_k ψ_k(a_k)`.
    pub fn mean_center_value(&self) -> Complex64 {
        self.coeffs.iter().map(|c| c[0]).sum::<Complex64>() / self.n() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// The operator `W` for one configuration, with its kernel cache.
pub struct Operator {
    kernels: Kernels,
    radius: f64,
    degree: usize,
    // binom[l][j] = C(l+1+j, j)
    binom: Vec<Vec<f64>>,
}

impl Operator {
    /// Needs lattice sums up to `required_order(degree)` in the cell cache.
    pub fn new(config: &DiskConfiguration, degree: usize) -> Result<Self> {
        let kernels = Kernels::build(config, required_order(degree))?;
        Operator::from_kernels(kernels, config.radius(), degree)
    }

    /// Wraps kernels that were built for the same configuration.
    pub fn from_kernels(kernels: Kernels, radius: f64, degree: usize) -> Result<Self> {
        let needed = required_order(degree);
        if kernels.max_order() < needed {
            return Err(Error::Resource {
                needed,
                available: kernels.max_order(),
            });
        }
        let binom = (0..=degree)
            .map(|l| {
                let mut row = Vec::with_capacity(degree + 2);
                let mut b = 1.0;
                for j in 0..=degree + 1 {
                    row.push(b);
                    b = b * (l + 2 + j) as f64 / (j + 1) as f64;
                }
                row
            })
            .collect();
        Ok(Operator {
            kernels,
            radius,
            degree,
            binom,
        })
    }

    pub fn kernels(&self) -> &Kernels {
        &self.kernels
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `W field`, together with the largest weighted coefficient of degree
    /// `L + 1` that truncation drops.
    pub fn apply_with_dropped(&self, field: &TaylorField) -> (TaylorField, f64) {
        let n = self.kernels.n();
        let deg = self.degree;
        let r2 = self.radius * self.radius;
        // g[l][m] = conj(c_{m,l}) r^{2l+2}
        let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; deg + 1];
        let mut scale = r2;
        for (l, gl) in g.iter_mut().enumerate() {
            for (m, x) in gl.iter_mut().enumerate() {
                *x = field.coeffs[m][l].conj() * scale;
            }
            scale *= r2;
        }
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut out = vec![Complex64::new(0.0, 0.0); deg + 2];
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, gl) in g.iter().enumerate() {
                        let mat = self.kernels.matrix(l + 2 + j).expect("kernel orders cover 2L+3");
                        let row = &mat[k * n..(k + 1) * n];
                        let dot: Complex64 = row.iter().zip(gl).map(|(a, b)| a * b).sum();
                        acc += dot * self.binom[l][j];
                    }
                    *o = if j % 2 == 0 { acc } else { -acc };
                }
                out
            })
            .collect();
        let mut dropped: f64 = 0.0;
        let rl = self.radius.powi(deg as i32 + 1);
        let coeffs = rows
            .into_iter()
            .map(|mut row| {
                dropped = dropped.max(row[deg + 1].norm() * rl);
                row.truncate(deg + 1);
                row
            })
            .collect();
        (TaylorField { degree: deg, coeffs }, dropped)
    }

    pub fn apply(&self, field: &TaylorField) -> TaylorField {
        self.apply_with_dropped(field).0
    }
}

/// `W field` on a configuration. Builds a fresh operator.
pub fn apply_w(config: &DiskConfiguration, field: &TaylorField) -> Result<TaylorField> {
    if field.n() != config.n() {
        return Err(Error::Domain(format!(
            "field has {} disks, configuration has {}",
            field.n(),
            config.n()
        )));
    }
    Ok(Operator::new(config, field.degree())?.apply(field))
}

/// Stopping rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverMode {
    /// Exactly `P` iterations: the field is the contrast series truncated
    /// after `ρ^P`.
    ContrastOrder(usize),
    /// Iterate until the weighted coefficient change is at most `ε`.
    Tolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Taylor degree `L`.
    pub degree: usize,
    pub mode: SolverMode,
    pub max_iterations: usize,
    /// When set, every iterate is written to this JSON file.
    pub dump: Option<PathBuf>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams::for_series_order(6)
    }
}

impl SolverParams {
    /// Degree `2J + 2` for a target cluster order `J`, tolerance `1e-12`.
    pub fn for_series_order(j: usize) -> Self {
        SolverParams {
            degree: 2 * j + 2,
            mode: SolverMode::Tolerance(1e-12),
            max_iterations: 500,
            dump: None,
        }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_mode(mut self, mode: SolverMode) -> Self {
        self.mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if let SolverMode::Tolerance(eps) = self.mode {
            if !(eps > 0.0) {
                return Err(Error::Domain(format!("tolerance must be positive, got {eps}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: TaylorField,
    pub lambda11: f64,
    pub lambda12: f64,
    pub iterations: usize,
    /// Weighted coefficient change of the last iteration.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Largest weighted degree-`L+1` coefficient dropped in the last step.
    pub dropped: f64,
}

impl SolveResult {
    pub fn effective(&self, rho: f64, nu: f64) -> EffectiveResult {
        let mut r = EffectiveResult::from_complex(Complex64::new(self.lambda11, -self.lambda12), Method::Solver, rho, nu);
        r.order = Some(self.field.degree());
        r.last_term = Some(self.residual);
        r
    }
}

#[derive(Serialize)]
struct DumpEntry {
    iteration: usize,
    residual: F17,
    coeffs: Vec<Vec<[F17; 2]>>,
}

/// Solves `ψ = ρ W ψ + 1` by successive approximations.
pub fn solve_contrast(config: &DiskConfiguration, rho: f64, params: &SolverParams) -> Result<SolveResult> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    params.validate()?;
    let op = Operator::new(config, params.degree)?;
    solve_with(&op, config, rho, params)
}

/// As [`solve_contrast`] with a prebuilt operator.
pub fn solve_with(op: &Operator, config: &DiskConfiguration, rho: f64, params: &SolverParams) -> Result<SolveResult> {
    let n = config.n();
    let r = config.radius();
    let one = TaylorField::constant(n, op.degree(), Complex64::new(1.0, 0.0));
    let mut psi = one.clone();
    let mut history = Vec::new();
    let mut dumps = Vec::new();
    let mut dropped = 0.0;
    let (limit, eps) = match params.mode {
        SolverMode::ContrastOrder(p) => (p, None),
        SolverMode::Tolerance(eps) => (params.max_iterations, Some(eps)),
    };
    let mut converged = eps.is_none();
    let mut iterations = 0;
    while iterations < limit {
        let (w, d) = op.apply_with_dropped(&psi);
        dropped = d * rho.abs();
        let next = w.scaled(Complex64::new(rho, 0.0)).add(&one);
        let residual = next.distance(&psi, r);
        psi = next;
        iterations += 1;
        history.push(residual);
        if params.dump.is_some() {
            dumps.push(dump_entry(iterations, residual, &psi));
        }
        if !residual.is_finite() || !psi.is_finite() {
            break;
        }
        if let Some(eps) = eps {
            if residual <= eps {
                converged = true;
                break;
            }
        }
    }
    if let Some(path) = &params.dump {
        fs::write(path, serde_json::to_string(&dumps)?)?;
    }
    let residual = history.last().copied().unwrap_or(0.0);
    if !converged || !residual.is_finite() {
        return Err(Error::NonConvergence {
            iterations,
            last: residual,
            history,
        });
    }
    // The constant of the potential problem resolves to C = 1, which is the
    // "+ 1" of the iteration.
    let lambda = 1.0 + psi.mean_center_value() * (2.0 * rho * config.concentration());
    Ok(SolveResult {
        field: psi,
        lambda11: lambda.re,
        lambda12: -lambda.im,
        iterations,
        residual,
        residual_history: history,
        converged,
        dropped,
    })
}

fn dump_entry(iteration: usize, residual: f64, field: &TaylorField) -> DumpEntry {
    DumpEntry {
        iteration,
        residual: F17(residual),
        coeffs: field
            .coeffs
            .iter()
            .map(|c| c.iter().map(|x| [F17(x.re), F17(x.im)]).collect())
            .collect(),
    }
}

/// `E_n(z - a_src)` expanded around `a_dst` to degree `degree`, regularized
/// when `src == dst`: coefficient `j` is `(-1)^j C(n+j-1, j) E_{n+j}(a_dst - a_src)`.
fn expand(config: &DiskConfiguration, n: usize, dst: usize, src: usize, degree: usize) -> Result<Vec<Complex64>> {
    let cell = config.cell();
    let values = if dst == src {
        cell.lattice_sums()[..=n + degree].to_vec()
    } else {
        cell.eisenstein_all(config.difference(dst, src), n + degree)?
    };
    let mut out = Vec::with_capacity(degree + 1);
    let mut binom = 1.0;
    for j in 0..=degree {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(values[n + j] * (sign * binom));
        binom = binom * (n + j) as f64 / (j + 1) as f64;
    }
    Ok(out)
}

fn kernel_value(config: &DiskConfiguration, n: usize, j: usize, k: usize) -> Result<Complex64> {
    if j == k {
        config.cell().lattice_sum(n)
    } else {
        config.cell().eisenstein(n, config.difference(j, k))
    }
}

/// Low-order flux terms written out explicitly as Taylor fields:
///
/// ```text
/// ψ(0) = 1
/// ψ(1)(z) = ρ Σ_k E_2(z - a_k)
/// ψ(2)(z) = ρ² Σ_{k,k1} conj(E_2(a_k - a_k1)) E_2(z - a_k)
/// ψ(3)(z) = ρ³ Σ_{k,k1,k2} E_2(a_k - a_k1) conj(E_2(a_k1 - a_k2)) E_2(z - a_k2)
///           - 2ρ² Σ_{k,k1} conj(E_3(a_k - a_k1)) E_3(z - a_k)
/// ```
///
/// The flux is `Σ_p ψ(p) r^{2p}`. Self terms use the regularized convention.
pub fn cluster_terms_exact(config: &DiskConfiguration, rho: f64, upto: usize, degree: usize) -> Result<Vec<TaylorField>> {
    if upto > 3 {
        return Err(Error::Domain(format!("explicit terms are available through order 3, got {upto}")));
    }
    let n = config.n();
    let top = 3 + degree;
    let config = &config.with_max_order(top);
    let mut out = vec![TaylorField::constant(n, degree, Complex64::new(1.0, 0.0))];
    if upto == 0 {
        return Ok(out);
    }
    // Weights w[k] multiplying E_order(z - a_k) in each term.
    let mut terms: Vec<Vec<(usize, Vec<Complex64>)>> = vec![vec![(2, vec![Complex64::new(rho, 0.0); n])]];
    if upto >= 2 {
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (k, wk) in w.iter_mut().enumerate() {
            for k1 in 0..n {
                *wk += kernel_value(config, 2, k, k1)?.conj();
            }
            *wk *= rho * rho;
        }
        terms.push(vec![(2, w)]);
    }
    if upto >= 3 {
        let mut w2 = vec![Complex64::new(0.0, 0.0); n];
        for (k2, wk2) in w2.iter_mut().enumerate() {
            for k in 0..n {
                for k1 in 0..n {
                    *wk2 += kernel_value(config, 2, k, k1)? * kernel_value(config, 2, k1, k2)?.conj();
                }
            }
            *wk2 *= rho.powi(3);
        }
        let mut w3 = vec![Complex64::new(0.0, 0.0); n];
        for (k, wk) in w3.iter_mut().enumerate() {
            for k1 in 0..n {
                *wk += kernel_value(config, 3, k, k1)?.conj();
            }
            *wk *= -2.0 * rho * rho;
        }
        terms.push(vec![(2, w2), (3, w3)]);
    }
    for parts in terms {
        let mut field = TaylorField::zeros(n, degree);
        for (order, weights) in parts {
            for (src, w) in weights.iter().enumerate() {
                for dst in 0..n {
                    let e = expand(config, order, dst, src, degree)?;
                    for (c, x) in field.coeffs[dst].iter_mut().zip(e) {
                        *c += w * x;
                    }
                }
            }
        }
        out.push(field);
    }
    Ok(out)
}

/// Shape factor of a single disk of radius `r` in `cell`: the `α` for which
/// the Padé form `(1 + ρνα)/(1 - ρνα)` reproduces the one-disk solution.
/// Equals 1 at `ρ = 0` and tends to 1 as `ν → 0`.
pub fn shape_factor(cell: &Cell, r: f64, rho: f64) -> Result<f64> {
    let params = SolverParams::default();
    let cell = cell.with_max_order(required_order(params.degree));
    let config = DiskConfiguration::new(cell, vec![Complex64::new(0.0, 0.0)], r)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let nu = config.concentration();
    let lambda = solve_contrast(&config, rho, &params)?.lambda11;
    Ok((lambda - 1.0) / (rho * nu * (lambda + 1.0)))
}
