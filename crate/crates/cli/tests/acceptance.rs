//! Acceptance criteria, one test each. Every test prints a single
//! `PASS criterion k: ...` or `FAIL criterion k: ...` line before asserting.
//!
//! ```text
//! cargo test -p schwarz-cli --test acceptance -- --nocapture --test-threads 1
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schwarz_core::esums::{esum_nn_with, esum_with, required_indices, Kernels, MultiIndex};
use schwarz_core::geometry::{regular_array, rsa_generate, rsa_place, ArrayKind};
use schwarz_core::pipeline::{compare_methods, parse_quantities, run_ensemble, RunOptions};
use schwarz_core::series::{cluster_coeffs, lambda_cluster, lambda_contrast, ContrastReduction, Provenance};
use schwarz_core::solver::{apply_w, cluster_terms_exact, required_order, solve_contrast, SolverMode, SolverParams, TaylorField};
use schwarz_core::{Cell, DiskConfiguration, EnsembleDescriptor};

fn report(k: usize, pass: bool, detail: String) {
    println!("{} criterion {k}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {k}: {detail}");
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fitted_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

// Criterion 1 --------------------------------------------------------------

#[test]
fn criterion_1_ensemble_e2_equals_pi() {
    let desc = EnsembleDescriptor::new(64, 0.3, 1500, 7);
    let run = run_ensemble(&desc, &parse_quantities("e2").unwrap(), &RunOptions::default()).unwrap();
    let col = run.stats.column("e2.re").unwrap();
    let mean = col.mean.0;
    let se = col.stderr.unwrap().0;
    let rel = (mean - PI).abs() / PI;
    let z = (mean - PI).abs() / se;
    report(
        1,
        col.trials == 1500 && rel < 0.01 && z < 3.0,
        format!("mean e2 = {mean:.6} stderr {se:.2e}, |e2 - pi|/pi = {rel:.2e} (< 1e-2), {z:.2} stderr (< 3)"),
    );
}

// Criterion 2 --------------------------------------------------------------

/// Lattice sum of `(m1 ω1 + m2 ω2)^{-2}`, inner index first, rows summed
/// symmetrically, Richardson-extrapolated in the inner cutoff.
fn s2_eisenstein_ordered(cell: &Cell) -> Complex64 {
    let outer = (14.0 / cell.tau().im).ceil() as i64;
    let truncated = |inner: i64| {
        let mut acc = c(0.0, 0.0);
        for m2 in -outer..=outer {
            let p = cell.omega2() * m2 as f64;
            let mut row = c(0.0, 0.0);
            for m1 in (1..=inner).rev() {
                row += (p + cell.omega1() * m1 as f64).powi(-2);
                row += (p - cell.omega1() * m1 as f64).powi(-2);
            }
            if m2 != 0 {
                row += p.powi(-2);
            }
            acc += row;
        }
        acc
    };
    let mut t: Vec<Complex64> = (0..5).map(|k| truncated(400 << k)).collect();
    let mut factor = 2.0;
    while t.len() > 1 {
        t = t.windows(2).map(|w| (w[1] * factor - w[0]) / (factor - 1.0)).collect();
        factor *= 2.0;
    }
    t[0]
}

#[test]
fn criterion_2_lattice_sums() {
    let cell = Cell::square();
    let brute = s2_eisenstein_ordered(&cell);
    let s2 = cell.lattice_sum(2).unwrap();
    let s3 = cell.lattice_sum(3).unwrap();
    let s5 = cell.lattice_sum(5).unwrap();
    let zero = c(0.0, 0.0);
    let d_brute = (brute - PI).norm();
    let d_impl = (s2 - brute).norm();
    report(
        2,
        d_brute < 1e-8 && d_impl < 1e-8 && s3 == zero && s5 == zero,
        format!("|S2_brute - pi| = {d_brute:.1e}, |S2 - S2_brute| = {d_impl:.1e} (< 1e-8); S3 = {s3}, S5 = {s5}"),
    );
}

// Criterion 3 --------------------------------------------------------------

#[test]
fn criterion_3_quasi_periodicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_jump: f64 = 0.0;
    let mut worst_periodic: f64 = 0.0;
    for cell in [Cell::square(), Cell::hexagonal(), Cell::new(1.0, c(0.3, 1.7)).unwrap()] {
        let jump = -2.0 * PI * c(0.0, 1.0) / cell.omega1();
        for _ in 0..100 {
            let z = cell.omega1() * (rng.gen::<f64>() - 0.5) + cell.omega2() * (rng.gen::<f64>() - 0.5);
            let e = cell.eisenstein(1, z).unwrap();
            let e_w1 = cell.eisenstein(1, z + cell.omega1()).unwrap();
            let e_w2 = cell.eisenstein(1, z + cell.omega2()).unwrap();
            worst_jump = worst_jump.max((e_w1 - e).norm()).max((e_w2 - e - jump).norm());
            if cell.lattice_distance(z) < 0.05 {
                continue;
            }
            let base = cell.eisenstein_all(z, 8).unwrap();
            let a = cell.eisenstein_all(z + cell.omega1(), 8).unwrap();
            let b = cell.eisenstein_all(z - cell.omega2(), 8).unwrap();
            for n in 2..=8 {
                let scale = base[n].norm().max(1.0);
                worst_periodic = worst_periodic.max((a[n] - base[n]).norm() / scale).max((b[n] - base[n]).norm() / scale);
            }
        }
    }
    report(
        3,
        worst_jump < 1e-10 && worst_periodic < 1e-10,
        format!("max E1 jump error {worst_jump:.1e}, max E2..E8 period error {worst_periodic:.1e} (< 1e-10)"),
    );
}

// Criterion 4 --------------------------------------------------------------

fn nested_sum(config: &DiskConfiguration, index: &[usize]) -> Complex64 {
    let cell = config.cell();
    let a = config.centers();
    let n = a.len();
    let kernel = |order: usize, j: usize, k: usize| {
        if j == k {
            cell.lattice_sum(order).unwrap()
        } else {
            cell.eisenstein(order, a[j] - a[k]).unwrap()
        }
    };
    let q = index.len();
    let mut ks = vec![0usize; q + 1];
    let mut total = c(0.0, 0.0);
    loop {
        let mut prod = c(1.0, 0.0);
        for j in 1..=q {
            let v = kernel(index[j - 1], ks[j - 1], ks[j]);
            prod *= if j % 2 == 0 { v.conj() } else { v };
        }
        total += prod;
        let mut pos = 0;
        while pos <= q {
            ks[pos] += 1;
            if ks[pos] < n {
                break;
            }
            ks[pos] = 0;
            pos += 1;
        }
        if pos > q {
            break;
        }
    }
    total / (n as f64).powf(1.0 + index.iter().sum::<usize>() as f64 / 2.0)
}

#[test]
fn criterion_4_convolution_identities() {
    let mut worst_pair: f64 = 0.0;
    for seed in [11u64, 12, 13] {
        let config = rsa_generate(&EnsembleDescriptor::new(64, 0.3, 1, seed)).unwrap();
        let kernels = Kernels::build(&config, 6).unwrap();
        for n in 2..=6 {
            let chain = esum_with(&kernels, &MultiIndex::new(vec![n, n]).unwrap()).unwrap();
            let identity = esum_nn_with(&kernels, n).unwrap();
            worst_pair = worst_pair.max((chain - identity).norm() / identity.norm());
        }
    }
    let mut worst_chain: f64 = 0.0;
    for (n, seed) in [(1usize, 21u64), (2, 22), (3, 23), (4, 24)] {
        for cell in [Cell::square(), Cell::new(1.0, c(0.4, 1.3)).unwrap()] {
            let config = rsa_generate(&EnsembleDescriptor::new(n, 0.3, 1, seed).with_cell(cell)).unwrap();
            let kernels = Kernels::build(&config, 5).unwrap();
            let mut indices = Vec::new();
            for a in 2..=5 {
                indices.push(vec![a]);
                for b in 2..=5 {
                    indices.push(vec![a, b]);
                    for d in 2..=5 {
                        indices.push(vec![a, b, d]);
                    }
                }
            }
            for idx in indices {
                let oracle = nested_sum(&config, &idx);
                let fast = esum_with(&kernels, &MultiIndex::new(idx).unwrap()).unwrap();
                worst_chain = worst_chain.max((fast - oracle).norm() / oracle.norm().max(1.0));
            }
        }
    }
    report(
        4,
        worst_pair < 1e-10 && worst_chain < 1e-12,
        format!("pair identity rel. error {worst_pair:.1e} (< 1e-10), chain vs nested {worst_chain:.1e} (< 1e-12)"),
    );
}

// Criterion 5 --------------------------------------------------------------

fn rel_distance(a: &TaylorField, b: &TaylorField, r: f64) -> f64 {
    let zero = TaylorField::zeros(a.n(), a.degree());
    a.distance(b, r) / b.distance(&zero, r).max(1e-300)
}

fn cluster_lambda(config: &DiskConfiguration, rho: f64) -> f64 {
    let kernels = Kernels::build(config, 6).unwrap();
    let esums = required_indices(6)
        .unwrap()
        .into_iter()
        .map(|m| {
            let v = esum_with(&kernels, &m).unwrap();
            (m, v)
        })
        .collect();
    let coeffs = cluster_coeffs(&esums, rho, 6, Provenance::PerConfiguration).unwrap();
    lambda_cluster(rho, config.concentration(), &coeffs).unwrap().lambda11
}

#[test]
fn criterion_5_expansions_agree_with_the_solver() {
    let degree = 14;
    let rho = 0.7;
    let mut worst_term: f64 = 0.0;
    for (n, seed) in [(1usize, 1u64), (3, 2), (5, 3), (8, 4)] {
        let config = rsa_generate(&EnsembleDescriptor::new(n, 0.2, 1, seed))
            .unwrap()
            .with_max_order(required_order(degree));
        let r = config.radius();
        let r2 = c(r * r, 0.0);
        let exact = cluster_terms_exact(&config, rho, 3, degree).unwrap();
        let one = TaylorField::constant(n, degree, c(1.0, 0.0));
        let p1 = SolverParams::default().with_mode(SolverMode::ContrastOrder(1));
        let first = solve_contrast(&config, rho, &p1).unwrap().field.add(&one.scaled(c(-1.0, 0.0)));
        let w1 = apply_w(&config, &one).unwrap();
        let w_p0_w1 = apply_w(&config, &w1.masked(0)).unwrap();
        let second = w_p0_w1.scaled(c(rho * rho, 0.0));
        let chain = apply_w(&config, &w_p0_w1.masked(0)).unwrap().scaled(c(rho.powi(3), 0.0));
        let cross = apply_w(&config, &w1.masked(1)).unwrap().scaled(c(rho * rho, 0.0));
        let third = chain.add(&cross);
        worst_term = worst_term
            .max(rel_distance(&first, &exact[1].scaled(r2), r))
            .max(rel_distance(&second, &exact[2].scaled(r2 * r2), r))
            .max(rel_distance(&third, &exact[3].scaled(r2 * r2 * r2), r));
    }

    let base = rsa_generate(&EnsembleDescriptor::new(8, 0.3, 1, 21))
        .unwrap()
        .with_max_order(required_order(degree));
    let square = regular_array(&Cell::square(), ArrayKind::Square, 1, 0.2)
        .unwrap()
        .with_max_order(required_order(degree));
    let nus = [0.05, 0.1, 0.15];
    let mut worst_slope = f64::INFINITY;
    for (config, rho) in [(base.clone(), 1.0), (base, -1.0), (square, 1.0)] {
        let diffs: Vec<f64> = nus
            .iter()
            .map(|&nu| {
                let r = (nu / (config.n() as f64 * PI)).sqrt();
                let c = config.with_radius(r).unwrap();
                let solver = solve_contrast(&c, rho, &SolverParams::default()).unwrap().lambda11;
                (solver - cluster_lambda(&c, rho)).abs()
            })
            .collect();
        worst_slope = worst_slope.min(fitted_exponent(&nus, &diffs));
    }
    report(
        5,
        worst_term < 1e-10 && worst_slope >= 7.5,
        format!("explicit psi terms rel. error {worst_term:.1e} (< 1e-10); cluster vs solver exponent {worst_slope:.2} (>= 7.5)"),
    );
}

// Criterion 6 --------------------------------------------------------------

#[test]
fn criterion_6_successive_approximations_converge() {
    let degree = 18;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_refine: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for seed in [1u64, 2, 3] {
        let n = 32;
        let r = (0.3 / (n as f64 * PI)).sqrt();
        let config = rsa_place(&Cell::square(), n, 1.1 * r, seed, 1_000_000)
            .unwrap()
            .with_radius(r)
            .unwrap()
            .with_max_order(required_order(degree + 4));
        min_gap = min_gap.min(config.min_gap() / r);
        for rho in [1.0, -1.0] {
            let coarse = solve_contrast(&config, rho, &SolverParams::default().with_degree(degree)).unwrap();
            let fine = solve_contrast(&config, rho, &SolverParams::default().with_degree(degree + 4)).unwrap();
            let h = &coarse.residual_history;
            for w in h[h.len().saturating_sub(21)..].windows(2) {
                worst_ratio = worst_ratio.max(w[1] / w[0]);
            }
            if h.len() < 21 {
                worst_ratio = f64::INFINITY;
            }
            worst_refine = worst_refine
                .max((coarse.lambda11 - fine.lambda11).abs())
                .max((coarse.lambda12 - fine.lambda12).abs());
        }
    }
    report(
        6,
        min_gap >= 0.2 && worst_ratio < 0.95 && worst_refine < 1e-8,
        format!(
            "min gap {min_gap:.3} r; worst residual ratio over last 20 iterations {worst_ratio:.3} (< 0.95); \
             degree {degree} -> {} change {worst_refine:.1e} (< 1e-8)",
            degree + 4
        ),
    );
}

// Criterion 7 --------------------------------------------------------------

#[test]
fn criterion_7_contrast_series_is_third_order() {
    let degree = 14;
    // Tail long enough that the truncated ρ³ coefficient matches the
    // degree-14 operator.
    let n_max = degree + 2;
    let rhos = [0.1, 0.2, 0.3];
    let mut worst_slope = f64::INFINITY;
    let mut detail = Vec::new();
    for seed in [3u64, 4] {
        let config = rsa_generate(&EnsembleDescriptor::new(16, 0.1, 1, seed))
            .unwrap()
            .with_max_order(required_order(degree));
        let kernels = Kernels::build(&config, n_max).unwrap();
        let enn: BTreeMap<usize, Complex64> = (2..=n_max).map(|n| (n, esum_nn_with(&kernels, n).unwrap())).collect();
        let e2 = esum_with(&kernels, &MultiIndex::new(vec![2]).unwrap()).unwrap();
        let nu = config.concentration();
        let diffs: Vec<f64> = rhos
            .iter()
            .map(|&rho| {
                let series = lambda_contrast(nu, &enn, rho, n_max, ContrastReduction::PerConfiguration { e2 })
                    .unwrap()
                    .lambda11;
                let solver = solve_contrast(&config, rho, &SolverParams::default().with_degree(degree))
                    .unwrap()
                    .lambda11;
                (series - solver).abs()
            })
            .collect();
        let slope = fitted_exponent(&rhos, &diffs);
        detail.push(format!("{slope:.2}"));
        worst_slope = worst_slope.min(slope);
    }
    report(
        7,
        worst_slope >= 3.5,
        format!("fitted exponent of |contrast - solver| in rho: {} (>= 3.5)", detail.join(", ")),
    );
}

// Criterion 8 --------------------------------------------------------------

#[test]
fn criterion_8_dilute_and_pade_near_the_solver() {
    let desc = EnsembleDescriptor::new(64, 0.05, 24, 5);
    let report_rows = compare_methods(&desc, 1.0, 6, &RunOptions::default()).unwrap();
    let solver = report_rows.row("solver").unwrap().lambda_e;
    let dilute = report_rows.row("dilute").unwrap().diff_solver.abs();
    let pade = report_rows.row("pade").unwrap().diff_solver.abs();
    report(
        8,
        dilute < 2e-3 && pade < 2e-3 && pade < dilute,
        format!(
            "solver {solver:.6}, alpha {:.6}: |dilute - solver| = {dilute:.2e}, |pade - solver| = {pade:.2e} \
             (both < 2e-3, pade closer)",
            report_rows.alpha
        ),
    );
}

// Criterion 9 --------------------------------------------------------------

fn mc(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_schwarz"))
        .arg("mc")
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
}

fn manifest_without_run_details(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let obj = v.as_object_mut().unwrap();
    for key in ["started_unix", "finished_unix", "outputs"] {
        obj.remove(key);
    }
    v
}

#[test]
fn criterion_9_rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    mc(&[
        "--n", "16", "--nu", "0.3", "--trials", "8", "--seed", "7",
        "--quantities", "e2,e22,e3-3,lambda-solver:1.0,lambda-series:0.8:6,zeta1:12",
        "--out", first.to_str().unwrap(),
    ]);
    let manifest = first.join("manifest.json");
    mc(&["--manifest", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    let mut same = true;
    for f in ["stats.json", "trials.csv"] {
        same &= std::fs::read(first.join(f)).unwrap() == std::fs::read(second.join(f)).unwrap();
    }
    same &= manifest_without_run_details(&manifest) == manifest_without_run_details(&second.join("manifest.json"));
    report(9, same, "stats.json and trials.csv byte-identical after rerun from manifest".to_string());
}
