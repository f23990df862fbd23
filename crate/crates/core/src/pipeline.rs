//! Monte Carlo ensembles over random configurations.
//!
//! Trials run concurrently with seeds split from the master seed; the
//! reduction is sequential in trial order so results do not depend on
//! scheduling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esums::{esum_nn_with, esum_with, required_indices, Kernels, MultiIndex};
use crate::format::{f17, F17};
use crate::geometry::{rsa_trial, DiskConfiguration, EnsembleDescriptor};
use crate::lattice::Cell;
use crate::series::{
    cluster_coeffs, lambda_cluster, lambda_contrast, lambda_dilute, lambda_pade, zeta1_complex, ContrastReduction,
    Provenance, MAX_CLUSTER_ORDER,
};
use crate::solver::{required_order, shape_factor, solve_with, Operator, SolverMode, SolverParams};

pub const DEFAULT_N: usize = 64;
pub const DEFAULT_TRIALS: usize = 1500;
pub const DEFAULT_N_MAX: usize = 12;
pub const GENERATOR: &str = "rsa";

/// A per-configuration quantity to average over the ensemble.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    /// Structural sum, written `e2`, `e22`, `e3-3-2`.
    ESum(MultiIndex),
    /// Solver λ at contrast `ρ`: `lambda-solver:1.0`.
    LambdaSolver { rho: f64 },
    /// Cluster series at contrast `ρ` and order `J`: `lambda-series:0.8:6`.
    LambdaSeries { rho: f64, order: usize },
    /// `ζ1` with tail length `n_max`: `zeta1:12`.
    Zeta1 { n_max: usize },
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::ESum(m) => {
                if m.entries().iter().all(|&e| e < 10) {
                    write!(f, "e{}", m.entries().iter().map(|e| e.to_string()).collect::<String>())
                } else {
                    write!(f, "e{m}")
                }
            }
            Quantity::LambdaSolver { rho } => write!(f, "lambda-solver:{rho}"),
            Quantity::LambdaSeries { rho, order } => write!(f, "lambda-series:{rho}:{order}"),
            Quantity::Zeta1 { n_max } => write!(f, "zeta1:{n_max}"),
        }
    }
}

fn parse_rho(s: &str) -> Result<f64> {
    let rho: f64 = s.parse().map_err(|_| Error::Domain(format!("cannot parse rho {s:?}")))?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    Ok(rho)
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Domain(format!("cannot parse {what} {s:?}")))
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["lambda-solver", rho] => Ok(Quantity::LambdaSolver { rho: parse_rho(rho)? }),
            ["lambda-series", rho] => Ok(Quantity::LambdaSeries {
                rho: parse_rho(rho)?,
                order: MAX_CLUSTER_ORDER,
            }),
            ["lambda-series", rho, order] => {
                let order = parse_usize(order, "order")?;
                if !(1..=MAX_CLUSTER_ORDER).contains(&order) {
                    return Err(Error::Domain(format!("cluster order must lie in 1..={MAX_CLUSTER_ORDER}")));
                }
                Ok(Quantity::LambdaSeries { rho: parse_rho(rho)?, order })
            }
            ["zeta1"] => Ok(Quantity::Zeta1 { n_max: DEFAULT_N_MAX }),
            ["zeta1", n] => {
                let n_max = parse_usize(n, "n_max")?;
                if n_max < 2 {
                    return Err(Error::Domain("n_max must be >= 2".into()));
                }
                Ok(Quantity::Zeta1 { n_max })
            }
            [e] if e.starts_with('e') && e.len() > 1 => Ok(Quantity::ESum(e[1..].parse()?)),
            _ => Err(Error::Domain(format!("unknown quantity {s:?}"))),
        }
    }
}

/// Parses a comma-separated quantity list.
pub fn parse_quantities(s: &str) -> Result<Vec<Quantity>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// Settings that are not part of the ensemble descriptor.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub solver: SolverParams,
    /// Tail length of the contrast series used by [`compare_methods`].
    pub n_max: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            solver: SolverParams::default(),
            n_max: DEFAULT_N_MAX,
        }
    }
}

/// Descriptor as written to disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub n: usize,
    pub nu: F17,
    pub trials: usize,
    pub seed: u64,
    pub cell: Cell,
    pub nu_guard: F17,
    pub max_attempts: u64,
}

impl From<&EnsembleDescriptor> for DescriptorRecord {
    fn from(d: &EnsembleDescriptor) -> Self {
        DescriptorRecord {
            n: d.n,
            nu: F17(d.nu),
            trials: d.trials,
            seed: d.seed,
            cell: d.cell.clone(),
            nu_guard: F17(d.nu_guard),
            max_attempts: d.max_attempts,
        }
    }
}

impl From<&DescriptorRecord> for EnsembleDescriptor {
    fn from(d: &DescriptorRecord) -> Self {
        EnsembleDescriptor {
            n: d.n,
            nu: d.nu.0,
            trials: d.trials,
            seed: d.seed,
            cell: d.cell.clone(),
            nu_guard: d.nu_guard.0,
            max_attempts: d.max_attempts,
        }
    }
}

/// Everything that determines the numbers of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunParameters {
    pub descriptor: DescriptorRecord,
    pub radius: F17,
    pub generator: String,
    pub quantities: Vec<String>,
    pub solver_degree: usize,
    pub solver_tolerance: F17,
    pub solver_max_iterations: usize,
    pub trial_seeds: Vec<u64>,
    pub code_version: String,
}

impl RunParameters {
    pub fn new(desc: &EnsembleDescriptor, quantities: &[Quantity], options: &RunOptions) -> Self {
        let tol = match options.solver.mode {
            SolverMode::Tolerance(eps) => eps,
            SolverMode::ContrastOrder(_) => f64::NAN,
        };
        RunParameters {
            descriptor: desc.into(),
            radius: F17(desc.radius()),
            generator: GENERATOR.to_string(),
            quantities: quantities.iter().map(|q| q.to_string()).collect(),
            solver_degree: options.solver.degree,
            solver_tolerance: F17(tol),
            solver_max_iterations: options.solver.max_iterations,
            trial_seeds: (0..desc.trials).map(|i| desc.trial_seed(i)).collect(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Descriptor, quantities and options needed to repeat the run.
    pub fn restore(&self) -> Result<(EnsembleDescriptor, Vec<Quantity>, RunOptions)> {
        let desc = EnsembleDescriptor::from(&self.descriptor);
        let quantities = self.quantities.iter().map(|q| q.parse()).collect::<Result<Vec<_>>>()?;
        let mut options = RunOptions::default();
        options.solver.degree = self.solver_degree;
        options.solver.max_iterations = self.solver_max_iterations;
        if self.solver_tolerance.0.is_finite() {
            options.solver.mode = SolverMode::Tolerance(self.solver_tolerance.0);
        }
        Ok((desc, quantities, options))
    }
}

/// Run parameters plus wall-clock bookkeeping and output paths.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub run: RunParameters,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Mean and standard error of one scalar column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: F17,
    /// `sample stdev / sqrt(trials)`; null for a single trial.
    pub stderr: Option<F17>,
    pub trials: usize,
}

/// Ensemble reading of one λ quantity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub quantity: String,
    /// Mean of the per-trial `λ11`.
    pub lambda_e: F17,
    pub lambda_e_stderr: Option<F17>,
    pub lambda12_mean: F17,
    pub lambda12_stderr: Option<F17>,
    /// `|mean λ12| < 3 stderr`; null when the stderr is undefined.
    pub isotropic: Option<bool>,
    /// Cluster series assembled from the ensemble-mean structural sums.
    pub average_then_assemble: Option<F17>,
    /// `average_then_assemble - lambda_e`.
    pub reduction_discrepancy: Option<F17>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub run: RunParameters,
    pub columns: Vec<ColumnStats>,
    pub lambdas: Vec<LambdaSummary>,
}

impl EnsembleStats {
    pub fn column(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Per-trial output.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<f64>,
    series_esums: HashMap<MultiIndex, Complex64>,
}

/// Full ensemble result: statistics plus the per-trial table.
#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub stats: EnsembleStats,
    pub column_names: Vec<String>,
    pub trials: Vec<TrialRecord>,
}

fn column_names(quantities: &[Quantity]) -> Vec<String> {
    let mut names = Vec::new();
    for q in quantities {
        let label = q.to_string();
        match q {
            Quantity::ESum(_) => {
                names.push(format!("{label}.re"));
                names.push(format!("{label}.im"));
            }
            Quantity::LambdaSolver { .. } => {
                names.push(format!("{label}.lambda11"));
                names.push(format!("{label}.lambda12"));
                names.push(format!("{label}.iterations"));
            }
            Quantity::LambdaSeries { .. } => {
                names.push(format!("{label}.lambda11"));
                names.push(format!("{label}.lambda12"));
            }
            Quantity::Zeta1 { .. } => {
                names.push(format!("{label}.re"));
                names.push(format!("{label}.im"));
            }
        }
    }
    names
}

/// Highest Eisenstein order any requested quantity needs.
fn kernel_order(quantities: &[Quantity], options: &RunOptions) -> usize {
    quantities
        .iter()
        .map(|q| match q {
            Quantity::ESum(m) => m.max_entry(),
            Quantity::LambdaSolver { .. } => required_order(options.solver.degree),
            Quantity::LambdaSeries { .. } => MAX_CLUSTER_ORDER,
            Quantity::Zeta1 { n_max } => *n_max,
        })
        .max()
        .unwrap_or(2)
}

/// Evaluates every quantity on one configuration.
fn evaluate(config: &DiskConfiguration, quantities: &[Quantity], options: &RunOptions) -> Result<(Vec<f64>, HashMap<MultiIndex, Complex64>)> {
    let top = kernel_order(quantities, options);
    let config = config.with_max_order(top);
    let built = Kernels::build(&config, top)?;
    let needs_solver = quantities.iter().any(|q| matches!(q, Quantity::LambdaSolver { .. }));
    let (operator, plain) = if needs_solver {
        (Some(Operator::from_kernels(built, config.radius(), options.solver.degree)?), None)
    } else {
        (None, Some(built))
    };
    let kernels: &Kernels = match (&operator, &plain) {
        (Some(op), _) => op.kernels(),
        (None, Some(k)) => k,
        (None, None) => unreachable!(),
    };
    let nu = config.concentration();
    let mut values = Vec::new();
    let mut series_esums = HashMap::new();
    for q in quantities {
        match q {
            Quantity::ESum(m) => {
                let v = esum_with(kernels, m)?;
                values.extend([v.re, v.im]);
            }
            Quantity::LambdaSolver { rho } => {
                let op = operator.as_ref().expect("operator built when a solver quantity is requested");
                let s = solve_with(op, &config, *rho, &options.solver)?;
                values.extend([s.lambda11, s.lambda12, s.iterations as f64]);
            }
            Quantity::LambdaSeries { rho, order } => {
                for m in required_indices(*order)? {
                    if !series_esums.contains_key(&m) {
                        let v = esum_with(kernels, &m)?;
                        series_esums.insert(m, v);
                    }
                }
                let c = cluster_coeffs(&series_esums, *rho, *order, Provenance::PerConfiguration)?;
                let r = lambda_cluster(*rho, nu, &c)?;
                values.extend([r.lambda11, r.lambda12]);
            }
            Quantity::Zeta1 { n_max } => {
                let enn = enn_table(kernels, *n_max)?;
                let z = zeta1_complex(nu, &enn, *n_max)?;
                values.extend([z.re, z.im]);
            }
        }
    }
    Ok((values, series_esums))
}

fn enn_table(kernels: &Kernels, n_max: usize) -> Result<BTreeMap<usize, Complex64>> {
    (2..=n_max).map(|n| Ok((n, esum_nn_with(kernels, n)?))).collect()
}

/// Mean and standard error, summed in the given order.
pub fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Generates `desc.trials` configurations and averages the quantities.
/// Any failing trial aborts the run.
pub fn run_ensemble(desc: &EnsembleDescriptor, quantities: &[Quantity], options: &RunOptions) -> Result<EnsembleRun> {
    desc.validate()?;
    if quantities.is_empty() {
        return Err(Error::Domain("no quantities requested".into()));
    }
    let records: Vec<Result<TrialRecord>> = (0..desc.trials)
        .into_par_iter()
        .map(|i| {
            let wrap = |e: Error| match e {
                Error::Trial { .. } => e,
                other => Error::Trial { trial: i, source: Box::new(other) },
            };
            let config = rsa_trial(desc, i).map_err(wrap)?;
            let (values, series_esums) = evaluate(&config, quantities, options).map_err(wrap)?;
            Ok(TrialRecord {
                trial: i,
                seed: desc.trial_seed(i),
                values,
                series_esums,
            })
        })
        .collect();
    let trials = records.into_iter().collect::<Result<Vec<_>>>()?;
    let names = column_names(quantities);
    let columns: Vec<ColumnStats> = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let xs: Vec<f64> = trials.iter().map(|t| t.values[c]).collect();
            let (mean, se) = mean_stderr(&xs);
            ColumnStats {
                name: name.clone(),
                mean: F17(mean),
                stderr: se.map(F17),
                trials: xs.len(),
            }
        })
        .collect();
    let lambdas = summarize_lambdas(desc, quantities, &columns, &trials)?;
    Ok(EnsembleRun {
        stats: EnsembleStats {
            run: RunParameters::new(desc, quantities, options),
            columns,
            lambdas,
        },
        column_names: names,
        trials,
    })
}

fn summarize_lambdas(
    desc: &EnsembleDescriptor,
    quantities: &[Quantity],
    columns: &[ColumnStats],
    trials: &[TrialRecord],
) -> Result<Vec<LambdaSummary>> {
    let mut out = Vec::new();
    for q in quantities {
        let label = q.to_string();
        let (rho, order) = match q {
            Quantity::LambdaSolver { rho } => (*rho, None),
            Quantity::LambdaSeries { rho, order } => (*rho, Some(*order)),
            _ => continue,
        };
        let find = |suffix: &str| columns.iter().find(|c| c.name == format!("{label}.{suffix}")).expect("column exists");
        let l11 = find("lambda11");
        let l12 = find("lambda12");
        let isotropic = l12.stderr.map(|se| l12.mean.0.abs() < 3.0 * se.0);
        let average_then_assemble = match order {
            Some(order) => {
                let mut mean: HashMap<MultiIndex, Complex64> = HashMap::new();
                for m in required_indices(order)? {
                    let s: Complex64 = trials.iter().map(|t| t.series_esums[&m]).sum();
                    mean.insert(m, s / trials.len() as f64);
                }
                let c = cluster_coeffs(&mean, rho, order, Provenance::Ensemble)?;
                Some(lambda_cluster(rho, desc.nu, &c)?.lambda11)
            }
            None => None,
        };
        out.push(LambdaSummary {
            quantity: label,
            lambda_e: l11.mean,
            lambda_e_stderr: l11.stderr,
            lambda12_mean: l12.mean,
            lambda12_stderr: l12.stderr,
            isotropic,
            average_then_assemble: average_then_assemble.map(F17),
            reduction_discrepancy: average_then_assemble.map(|a| F17(a - l11.mean.0)),
        });
    }
    Ok(out)
}

/// Per-trial CSV: `trial,seed,<columns>`.
pub fn write_trials_csv<W: Write>(out: &mut W, run: &EnsembleRun) -> Result<()> {
    writeln!(out, "trial,seed,{}", run.column_names.join(","))?;
    for t in &run.trials {
        let vals: Vec<String> = t.values.iter().map(|&v| f17(v)).collect();
        writeln!(out, "{},{},{}", t.trial, t.seed, vals.join(","))?;
    }
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs the ensemble and writes `stats.json`, `trials.csv` and
/// `manifest.json` into `dir`.
pub fn run_to_dir(desc: &EnsembleDescriptor, quantities: &[Quantity], options: &RunOptions, dir: &Path) -> Result<EnsembleRun> {
    let started = unix_now();
    let run = run_ensemble(desc, quantities, options)?;
    fs::create_dir_all(dir)?;
    let stats_path = dir.join("stats.json");
    let trials_path = dir.join("trials.csv");
    let manifest_path = dir.join("manifest.json");
    fs::write(&stats_path, serde_json::to_string_pretty(&run.stats)? + "\n")?;
    let mut csv = Vec::new();
    write_trials_csv(&mut csv, &run)?;
    fs::write(&trials_path, csv)?;
    let manifest = RunManifest {
        run: run.stats.run.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: [&stats_path, &trials_path]
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(run)
}

/// One row of a method comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    /// How per-configuration values were combined.
    pub reduction: String,
    pub rho: f64,
    pub nu: f64,
    /// Cluster order, contrast tail length or Taylor degree.
    pub order: Option<usize>,
    pub lambda_e: f64,
    pub stderr: Option<f64>,
    pub diff_solver: f64,
    /// Size of the neglected terms: `ν^{J+1}` for the cluster series,
    /// `ρ⁴ν⁴` for the contrast series, `(ρν)²` for the dilute and Padé
    /// formulas.
    pub expected_scale: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

struct MethodTrial {
    solver: f64,
    cluster: f64,
    contrast: f64,
    series_esums: HashMap<MultiIndex, Complex64>,
    enn: BTreeMap<usize, Complex64>,
}

/// λ_e of one ensemble by every method, with differences to the solver.
pub fn compare_methods(desc: &EnsembleDescriptor, rho: f64, order: usize, options: &RunOptions) -> Result<ComparisonReport> {
    desc.validate()?;
    if !(1..=MAX_CLUSTER_ORDER).contains(&order) {
        return Err(Error::Domain(format!("cluster order must lie in 1..={MAX_CLUSTER_ORDER}, got {order}")));
    }
    let n_max = options.n_max;
    let degree = options.solver.degree;
    let top = required_order(degree).max(n_max).max(MAX_CLUSTER_ORDER);
    let per_trial: Vec<Result<MethodTrial>> = (0..desc.trials)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<MethodTrial> {
                let config = rsa_trial(desc, i)?.with_max_order(top);
                let kernels = Kernels::build(&config, top)?;
                let op = Operator::from_kernels(kernels, config.radius(), degree)?;
                let kernels = op.kernels();
                let nu = config.concentration();
                let solver = solve_with(&op, &config, rho, &options.solver)?.lambda11;
                let mut series_esums = HashMap::new();
                for m in required_indices(order)? {
                    let v = esum_with(kernels, &m)?;
                    series_esums.insert(m, v);
                }
                let c = cluster_coeffs(&series_esums, rho, order, Provenance::PerConfiguration)?;
                let cluster = lambda_cluster(rho, nu, &c)?.lambda11;
                let enn = enn_table(kernels, n_max)?;
                let e2 = esum_with(kernels, &MultiIndex::new(vec![2])?)?;
                let contrast = lambda_contrast(nu, &enn, rho, n_max, ContrastReduction::PerConfiguration { e2 })?.lambda11;
                Ok(MethodTrial {
                    solver,
                    cluster,
                    contrast,
                    series_esums,
                    enn,
                })
            };
            run().map_err(|e| match e {
                Error::Trial { .. } => e,
                other => Error::Trial { trial: i, source: Box::new(other) },
            })
        })
        .collect();
    let trials = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let count = trials.len() as f64;
    let nu = desc.nu;

    let col = |f: &dyn Fn(&MethodTrial) -> f64| mean_stderr(&trials.iter().map(f).collect::<Vec<_>>());
    let (solver, solver_se) = col(&|t| t.solver);
    let (cluster, cluster_se) = col(&|t| t.cluster);
    let (contrast, contrast_se) = col(&|t| t.contrast);

    let mut mean_esums: HashMap<MultiIndex, Complex64> = HashMap::new();
    for m in required_indices(order)? {
        let s: Complex64 = trials.iter().map(|t| t.series_esums[&m]).sum();
        mean_esums.insert(m, s / count);
    }
    let c = cluster_coeffs(&mean_esums, rho, order, Provenance::Ensemble)?;
    let cluster_avg = lambda_cluster(rho, nu, &c)?.lambda11;
    let mut mean_enn = BTreeMap::new();
    for n in 2..=n_max {
        let s: Complex64 = trials.iter().map(|t| t.enn[&n]).sum();
        mean_enn.insert(n, s / count);
    }
    let contrast_iso = lambda_contrast(nu, &mean_enn, rho, n_max, ContrastReduction::Isotropic)?.lambda11;

    let radius = (nu / std::f64::consts::PI).sqrt();
    let alpha = shape_factor(&desc.cell, radius, rho)?;
    let dilute = lambda_dilute(nu, rho, alpha)?.lambda11;
    let pade = lambda_pade(nu, rho, alpha)?.lambda11;

    let row = |method: &str, reduction: &str, order: Option<usize>, value: f64, se: Option<f64>, scale: f64| ComparisonRow {
        method: method.to_string(),
        reduction: reduction.to_string(),
        rho,
        nu,
        order,
        lambda_e: value,
        stderr: se,
        diff_solver: value - solver,
        expected_scale: scale,
    };
    let cluster_scale = nu.powi(order as i32 + 1);
    let contrast_scale = (rho * nu).powi(4);
    let dilute_scale = (rho * nu).powi(2);
    let rows = vec![
        row("solver", "assemble-then-average", Some(degree), solver, solver_se, 0.0),
        row("cluster-series", "assemble-then-average", Some(order), cluster, cluster_se, cluster_scale),
        row("cluster-series", "average-then-assemble", Some(order), cluster_avg, None, cluster_scale),
        row("contrast-series", "assemble-then-average", Some(n_max), contrast, contrast_se, contrast_scale),
        row("contrast-series", "isotropic", Some(n_max), contrast_iso, None, contrast_scale),
        row("dilute", "shape-factor", None, dilute, None, dilute_scale),
        row("pade", "shape-factor", None, pade, None, dilute_scale),
    ];
    Ok(ComparisonReport { alpha, rows })
}

/// CSV of a comparison report.
pub fn write_comparison_csv<W: Write>(out: &mut W, report: &ComparisonReport) -> Result<()> {
    writeln!(out, "method,reduction,rho,nu,order,lambda_e,stderr,diff_solver,expected_scale")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            r.reduction,
            f17(r.rho),
            f17(r.nu),
            r.order.map(|o| o.to_string()).unwrap_or_default(),
            f17(r.lambda_e),
            r.stderr.map(f17).unwrap_or_default(),
            f17(r.diff_solver),
            f17(r.expected_scale)
        )?;
    }
    Ok(())
}

/// Output directory paths used by [`run_to_dir`].
pub fn output_paths(dir: &Path) -> [PathBuf; 3] {
    [dir.join("stats.json"), dir.join("trials.csv"), dir.join("manifest.json")]
}
