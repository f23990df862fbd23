use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use schwarz_core::esums::{esum_nn_with, esum_with, required_indices, write_csv, Kernels, MultiIndex, MultiIndexSum};
use schwarz_core::format::{f17, F17};
use schwarz_core::geometry::{rsa_trial, EnsembleDescriptor};
use schwarz_core::io::{read_config, write_config};
use schwarz_core::pipeline::{
    compare_methods, parse_quantities, run_to_dir, write_comparison_csv, RunManifest, RunOptions, RunParameters, GENERATOR,
};
use schwarz_core::series::{
    cluster_coeffs, lambda_cluster, lambda_contrast, lambda_dilute, lambda_pade, ContrastReduction, EffectiveResult,
    Provenance, MAX_CLUSTER_ORDER,
};
use schwarz_core::solver::{required_order, shape_factor, solve_contrast, SolverMode, SolverParams};
use schwarz_core::{make_cell, Cell, DiskConfiguration, Error, Result};

#[derive(Parser)]
#[command(name = "schwarz", version, about = "Effective conductivity of periodic composites with circular inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random configurations and write one JSON file per trial.
    Gen {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structural sums of one configuration as CSV.
    Esum {
        #[arg(long)]
        config: PathBuf,
        /// Multi-index such as `3-3-2`; repeatable.
        #[arg(long, required = true)]
        index: Vec<String>,
    },
    /// Cluster coefficients A_1..A_J of one configuration as CSV.
    Coeffs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = MAX_CLUSTER_ORDER)]
        order: usize,
    },
    /// Effective conductivity of one configuration as JSON.
    Lambda {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Cluster series order J.
        #[arg(long, default_value_t = MAX_CLUSTER_ORDER)]
        order: usize,
        /// Tail length of the contrast series.
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo ensemble: stats.json, trials.csv and manifest.json.
    Mc {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Comma-separated list, e.g. `e2,e22,lambda-solver:1.0,zeta1:12`.
        #[arg(long, required_unless_present = "manifest")]
        quantities: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Repeat the run described by a manifest; other run flags are ignored.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare every method on one ensemble; CSV to stdout or `--out`.
    Compare {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = MAX_CLUSTER_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    #[arg(long, default_value_t = 1500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Periods `w1,w2re,w2im`, rescaled to unit area.
    #[arg(long, allow_hyphen_values = true)]
    cell: Option<String>,
}

#[derive(Args)]
struct SolverArgs {
    /// Taylor degree of the solver.
    #[arg(long, default_value_t = 14)]
    degree: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Write every solver iterate to this JSON file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cluster,
    Contrast,
    Solver,
    Dilute,
    Pade,
}

fn parse_cell(s: &str) -> Result<Cell> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Domain(format!("cannot parse cell {s:?}")))?;
    match parts.as_slice() {
        [w1, re, im] => make_cell(*w1, Complex64::new(*re, *im)),
        _ => Err(Error::Domain(format!("cell needs three numbers w1,w2re,w2im, got {s:?}"))),
    }
}

impl EnsembleArgs {
    fn descriptor(&self) -> Result<EnsembleDescriptor> {
        let mut desc = EnsembleDescriptor::new(self.n, self.nu, self.trials, self.seed);
        if let Some(c) = &self.cell {
            desc = desc.with_cell(parse_cell(c)?);
        }
        desc.validate()?;
        Ok(desc)
    }
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        let mut p = SolverParams::default()
            .with_degree(self.degree)
            .with_mode(SolverMode::Tolerance(self.tol));
        p.max_iterations = self.max_iter;
        p.dump = self.dump.clone();
        p
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn gen(ensemble: &EnsembleArgs, out: &Path) -> Result<()> {
    let desc = ensemble.descriptor()?;
    let started = unix_now();
    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    for i in 0..desc.trials {
        let config = rsa_trial(&desc, i)?;
        let path = out.join(format!("config_{i:05}.json"));
        write_config(&path, &config, Some(desc.trial_seed(i)), GENERATOR)?;
        outputs.push(path.display().to_string());
    }
    let manifest = RunManifest {
        run: RunParameters::new(&desc, &[], &RunOptions::default()),
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", out.display());
    Ok(())
}

fn esum_cmd(config: &Path, indices: &[String]) -> Result<()> {
    let config = read_config(config)?;
    let indices: Vec<MultiIndex> = indices.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let top = indices.iter().map(MultiIndex::max_entry).max().unwrap_or(2);
    let config = config.with_max_order(top);
    let kernels = Kernels::build(&config, top)?;
    let rows = indices
        .into_iter()
        .map(|index| {
            let value = esum_with(&kernels, &index)?;
            Ok((0, MultiIndexSum { index, value }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = io::stdout().lock();
    write_csv(&mut out, &rows)
}

fn series_esums(config: &DiskConfiguration, order: usize) -> Result<HashMap<MultiIndex, Complex64>> {
    let top = order.max(2);
    let config = config.with_max_order(top);
    let kernels = Kernels::build(&config, top)?;
    required_indices(order)?
        .into_iter()
        .map(|m| {
            let v = esum_with(&kernels, &m)?;
            Ok((m, v))
        })
        .collect()
}

fn coeffs_cmd(config: &Path, rho: f64, order: usize) -> Result<()> {
    let config = read_config(config)?;
    let table = series_esums(&config, order)?;
    let c = cluster_coeffs(&table, rho, order, Provenance::PerConfiguration)?;
    let mut out = io::stdout().lock();
    writeln!(out, "n,re,im")?;
    for (i, a) in c.values.iter().enumerate() {
        writeln!(out, "{},{},{}", i + 1, f17(a.re), f17(a.im))?;
    }
    Ok(())
}

#[derive(Serialize, Default)]
struct LambdaOutput {
    method: &'static str,
    rho: F17,
    nu: F17,
    order: Option<usize>,
    lambda11: F17,
    lambda12: F17,
    lambda_e: F17,
    last_term: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
}

impl From<&EffectiveResult> for LambdaOutput {
    fn from(r: &EffectiveResult) -> Self {
        LambdaOutput {
            method: r.method.name(),
            rho: F17(r.rho),
            nu: F17(r.nu),
            order: r.order,
            lambda11: F17(r.lambda11),
            lambda12: F17(r.lambda12),
            lambda_e: F17(r.lambda_e),
            last_term: r.last_term.map(F17),
            ..LambdaOutput::default()
        }
    }
}

fn lambda_cmd(config: &Path, rho: f64, method: MethodArg, order: usize, nmax: usize, solver: &SolverArgs) -> Result<()> {
    let config = read_config(config)?;
    let nu = config.concentration();
    let output = match method {
        MethodArg::Cluster => {
            let c = cluster_coeffs(&series_esums(&config, order)?, rho, order, Provenance::PerConfiguration)?;
            LambdaOutput::from(&lambda_cluster(rho, nu, &c)?)
        }
        MethodArg::Contrast => {
            let top = nmax.max(2);
            let config = config.with_max_order(top);
            let kernels = Kernels::build(&config, top)?;
            let enn: BTreeMap<usize, Complex64> =
                (2..=nmax).map(|n| Ok((n, esum_nn_with(&kernels, n)?))).collect::<Result<_>>()?;
            let e2 = esum_with(&kernels, &MultiIndex::new(vec![2])?)?;
            LambdaOutput::from(&lambda_contrast(nu, &enn, rho, nmax, ContrastReduction::PerConfiguration { e2 })?)
        }
        MethodArg::Solver => {
            let params = solver.params();
            let config = config.with_max_order(required_order(params.degree));
            let s = solve_contrast(&config, rho, &params)?;
            LambdaOutput {
                iterations: Some(s.iterations),
                residual: Some(F17(s.residual)),
                converged: Some(s.converged),
                ..LambdaOutput::from(&s.effective(rho, nu))
            }
        }
        MethodArg::Dilute | MethodArg::Pade => {
            let alpha = shape_factor(config.cell(), (nu / PI).sqrt(), rho)?;
            let r = if matches!(method, MethodArg::Dilute) {
                lambda_dilute(nu, rho, alpha)?
            } else {
                lambda_pade(nu, rho, alpha)?
            };
            LambdaOutput {
                alpha: Some(F17(alpha)),
                ..LambdaOutput::from(&r)
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

fn mc_cmd(
    ensemble: &EnsembleArgs,
    quantities: Option<&str>,
    out: &Path,
    manifest: Option<&Path>,
    solver: &SolverArgs,
) -> Result<()> {
    let (desc, qs, options) = match manifest {
        Some(path) => RunManifest::read(path)?.run.restore()?,
        None => {
            let options = RunOptions {
                solver: solver.params(),
                ..RunOptions::default()
            };
            let qs = parse_quantities(quantities.unwrap_or_default())?;
            (ensemble.descriptor()?, qs, options)
        }
    };
    let run = run_to_dir(&desc, &qs, &options, out)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "quantity,mean,stderr,trials")?;
    for c in &run.stats.columns {
        let se = c.stderr.map(|s| f17(s.0)).unwrap_or_default();
        writeln!(stdout, "{},{},{},{}", c.name, f17(c.mean.0), se, c.trials)?;
    }
    Ok(())
}

fn compare_cmd(ensemble: &EnsembleArgs, rho: f64, order: usize, nmax: usize, out: Option<&Path>, solver: &SolverArgs) -> Result<()> {
    let desc = ensemble.descriptor()?;
    let options = RunOptions {
        solver: solver.params(),
        n_max: nmax,
    };
    let report = compare_methods(&desc, rho, order, &options)?;
    let mut buf = Vec::new();
    write_comparison_csv(&mut buf, &report)?;
    match out {
        Some(path) => fs::write(path, buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { ensemble, out } => gen(&ensemble, &out),
        Command::Esum { config, index } => esum_cmd(&config, &index),
        Command::Coeffs { config, rho, order } => coeffs_cmd(&config, rho, order),
        Command::Lambda {
            config,
            rho,
            method,
            order,
            nmax,
            solver,
        } => lambda_cmd(&config, rho, method, order, nmax, &solver),
        Command::Mc {
            ensemble,
            quantities,
            out,
            manifest,
            solver,
        } => mc_cmd(&ensemble, quantities.as_deref(), &out, manifest.as_deref(), &solver),
        Command::Compare {
            ensemble,
            rho,
            order,
            nmax,
            out,
            solver,
        } => compare_cmd(&ensemble, rho, order, nmax, out.as_deref(), &solver),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
