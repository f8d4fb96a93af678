//! Experiment CLI: run sampling experiments from JSON configs, compare
//! algorithms, print tuning reports, and run the built-in selftest.
//!
//! Exit codes: 0 success, 1 config error, 2 numeric failure, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxmh::diagnostics::detailed_balance_max_violation;
use proxmh::experiment::{
    compare_command, config_hash, exit_code_for, resolve_eta, run_experiment, ExperimentConfig,
};
use proxmh::oracle::{laplace_log_partition_1d, laplace_oracle_mixture, oracle_for_target};
use proxmh::quad::{quadrature_1d, IntegrationWindow, Quadrature1DConfig};
use proxmh::rng::RngStream;
use proxmh::sampler::{
    run_baseline_chain_indexed, run_chain, BaselineKind, InitSpec, SamplerConfig, SmoothTarget,
};
use proxmh::{targets, Error};

#[derive(Parser)]
#[command(name = "proxmh", version, about = "Proximal Metropolis-Hastings experiments")]
struct Cli {
    /// Worker threads for multi-chain runs (default: PROXMH_THREADS env var,
    /// then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare two or more configs over the same target.
    Compare {
        configs: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "compare-out")]
        out_dir: PathBuf,
    },
    /// Print the tuning report for a config's target.
    Tune { config: PathBuf },
    /// Run the built-in invariant suite.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("PROXMH_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        eprintln!("warning: could not configure thread pool: {e}");
    }

    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
        } => cmd_run(&config, seed, out_dir),
        Command::Compare {
            configs,
            seed,
            out_dir,
        } => cmd_compare(&configs, seed, &out_dir),
        Command::Tune { config } => cmd_tune(&config),
        Command::Selftest => cmd_selftest(),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(seed) = seed {
        config.sampler.seed = seed;
    }
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base))
}

fn cmd_run(path: &Path, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<(), Error> {
    let (mut config, base) = load_config(path, seed)?;
    if let Some(dir) = out_dir {
        config.output.directory = dir.to_string_lossy().into_owned();
    }
    let output = run_experiment(&config, &base)?;
    println!(
        "wrote {} (config {})",
        output.out_dir.display(),
        &config_hash(&config)[..12]
    );
    println!(
        "algorithm={} eta={:.3e} acceptance={:.3} tv_to_truth={}",
        output.metrics.algorithm,
        output.metrics.eta,
        output.metrics.acceptance_rate,
        output
            .metrics
            .tv_to_truth
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(())
}

fn cmd_compare(paths: &[PathBuf], seed: Option<u64>, out_dir: &Path) -> Result<(), Error> {
    if paths.len() < 2 {
        return Err(Error::InvalidParameter(
            "compare needs at least two configs".into(),
        ));
    }
    let mut configs = Vec::new();
    let mut base = PathBuf::from(".");
    for p in paths {
        let (c, b) = load_config(p, seed)?;
        base = b;
        configs.push(c);
    }
    let rows = compare_command(&configs, &base, out_dir)?;
    println!("algorithm      dim   eta         iters_to_tv  accept  ess/sec");
    for row in &rows {
        println!(
            "{:<14} {:<5} {:<11.3e} {:<12} {:<7.3} {:.1}",
            row.algorithm,
            row.dim,
            row.eta,
            row.iterations_to_tv
                .map(|v| v.to_string())
                .unwrap_or_else(|| "unreached".into()),
            row.acceptance_rate,
            row.ess_per_sec,
        );
    }
    println!("table written to {}", out_dir.join("comparison.csv").display());
    Ok(())
}

fn cmd_tune(path: &Path) -> Result<(), Error> {
    let (config, base) = load_config(path, None)?;
    let target = proxmh::experiment::build_target(&config.target, &base)?;
    let (eta, report) = resolve_eta(&target, &config.sampler.eta)?;
    println!("dim              = {}", target.dim());
    println!("grad_norm_a0     = {:.6e}", report.grad_norm_a0);
    println!("radius_r         = {:.6e}", report.radius_r);
    println!("recommended_eta  = {:.6e}", report.recommended_eta);
    println!("effective_eta    = {:.6e}", eta);
    println!("warmness_log_m0  = {:.6e}", report.warmness_log_m0);
    println!("tail_radius_rs   = {:.6e}", report.tail_radius_rs);
    Ok(())
}

struct SelfTest {
    failures: u32,
}

impl SelfTest {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if pass {
            println!("PASS {name} ({detail})");
        } else {
            println!("FAIL {name} ({detail})");
            self.failures += 1;
        }
    }
}

fn cmd_selftest() -> Result<(), Error> {
    let mut t = SelfTest { failures: 0 };

    // l1 partition closed form against adaptive quadrature
    let mut rng = RngStream::root(20250810);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = 4.0 * rng.standard_normal();
        let eta = 0.01 + 0.5 * rng.uniform();
        let lambda = 0.1 + 2.0 * rng.uniform();
        let closed = laplace_log_partition_1d(u, eta, lambda);
        let cfg = Quadrature1DConfig {
            rel_tol: 1e-12,
            window: IntegrationWindow::AutoExpand {
                center: u,
                initial_half_width: 1.0,
            },
            breakpoints: vec![0.0],
            ..Default::default()
        };
        let quad = quadrature_1d(
            |y| -(y - u) * (y - u) / (4.0 * eta) - lambda * y.abs(),
            &cfg,
        )?
        .log_integral;
        worst = worst.max((closed - quad).abs() / quad.abs().max(1.0));
    }
    t.check(
        "l1-partition-vs-quadrature",
        worst <= 1e-8,
        format!("max rel {worst:.2e}"),
    );

    // mixture weights sum to one and are symmetric at the origin
    let m = laplace_oracle_mixture(0.0, 0.25, 1.0);
    t.check(
        "l1-mixture-symmetry",
        (m.weight_plus - 0.5).abs() < 1e-12
            && (m.weight_plus + m.weight_minus - 1.0).abs() < 1e-12,
        format!("w+ = {}", m.weight_plus),
    );

    // reduction: prox chain == MALA when g = 0
    let gauss = targets::standard_gaussian(2)?;
    let oracle = oracle_for_target(&gauss)?;
    let smooth = SmoothTarget::from_smooth_composite(&gauss)?;
    let config = SamplerConfig::new(0.1, 500, 42, InitSpec::GaussianAtCenter(vec![0.0, 0.0]));
    let a = run_chain(&gauss, oracle.as_ref(), &config)?;
    let b = run_baseline_chain_indexed(&gauss, &smooth, BaselineKind::Mala, &config, 0)?;
    let identical = a
        .samples
        .iter()
        .zip(&b.samples)
        .all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    t.check(
        "smooth-reduction-identity",
        identical,
        "500 shared-stream steps".into(),
    );

    // detailed balance on the 1D lasso posterior
    let lasso = targets::gaussian_l1(1, 1.0, &[1.0])?;
    let lasso_oracle = oracle_for_target(&lasso)?;
    let violation = detailed_balance_max_violation(&lasso, lasso_oracle.as_ref(), 0.05, 50, 7)?;
    t.check(
        "detailed-balance-1d-lasso",
        violation <= 1e-8,
        format!("max log violation {violation:.2e}"),
    );

    // deterministic replay
    let replay_config =
        SamplerConfig::new(0.05, 500, 42, InitSpec::GaussianAtCenter(vec![1.0]));
    let r1 = run_chain(&lasso, lasso_oracle.as_ref(), &replay_config)?;
    let r2 = run_chain(&lasso, lasso_oracle.as_ref(), &replay_config)?;
    let replay = r1
        .samples
        .iter()
        .zip(&r2.samples)
        .all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    t.check("seeded-replay", replay, "two identical runs".into());

    if t.failures > 0 {
        return Err(Error::InvalidParameter(format!(
            "{} selftest failure(s)",
            t.failures
        )));
    }
    println!("all selftests passed");
    Ok(())
}
