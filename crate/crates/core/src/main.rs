use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use besov_lab::error::{Error, Result};
use besov_lab::estimators::{solve_map_multistart, tau_lambda_sq, PlsConfig};
use besov_lab::harness::output::{write_compare, write_sweep};
use besov_lab::harness::{
    compare_priors, delta_eps, level_for, make_truth, run_rate_sweep, theoretical_exponents,
    ExperimentConfig, ExponentModel,
};
use besov_lab::mcmc::{run_chain, ChainConfig};
use besov_lab::observation::Observation;
use besov_lab::prior::PriorSpec;
use besov_lab::wavelet::CoefficientTree;

#[derive(Parser)]
#[command(
    name = "besov-lab",
    version,
    about = "Wavelet-prior estimation in white-noise inverse problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an observation of the configured truth.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Resolution level; chosen from the noise level when omitted.
        #[arg(long)]
        level: Option<u32>,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Penalized least squares estimate from an observation file.
    Map {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        /// Regularization weight; `C δ_ε²` from the config when omitted.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// pCN posterior sampling; writes per-sample summaries as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate sweep over the configured noise grid.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Laplace MAP against the best-tuned Gaussian linear estimator.
    ComparePriors {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Exact rate exponents.
    Exponents {
        /// direct, smoothing, darcy or schroedinger
        #[arg(long)]
        model: String,
        #[arg(long)]
        alpha: i64,
        #[arg(long, default_value_t = 1)]
        dim: i64,
        /// Smoothing degree for the smoothing model.
        #[arg(long, default_value_t = 1)]
        kappa: i64,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_obs(path: &Path) -> Result<Observation> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Observation::read_csv(BufReader::new(file))
}

fn truth_at(cfg: &ExperimentConfig, level: u32) -> Result<CoefficientTree> {
    let basis = cfg.basis(level)?;
    Ok(make_truth(
        &cfg.truth,
        &basis,
        cfg.prior.alpha,
        &cfg.cutoff().unwrap_or_default(),
    )?
    .coefficients)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            eps,
            seed,
            level,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let level = match level {
                Some(l) => l,
                None => level_for(&cfg, eps)?,
            };
            let model = cfg.forward_model(level)?;
            let obs = Observation::simulate(&model, &truth_at(&cfg, level)?, eps, seed)?;
            obs.write_csv(output(&out)?)?;
        }
        Command::Map {
            config,
            obs,
            lambda,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let obs = read_obs(&obs)?;
            let model = cfg.forward_model(obs.basis.max_level)?;
            if model.basis != obs.basis {
                return Err(Error::Config(
                    "observation basis differs from the configured model".into(),
                ));
            }
            let delta = delta_eps(obs.eps, cfg.prior.alpha, model.kappa(), cfg.model.dim);
            let mut pls = PlsConfig::new(
                lambda.unwrap_or(cfg.sweep.lambda_constant * delta * delta),
                cfg.prior.alpha,
            );
            pls.max_iters = cfg.map.max_iters;
            pls.tol = cfg.map.tol;
            let truth = truth_at(&cfg, obs.basis.max_level)?;
            let mut report =
                solve_map_multistart(&obs, &model, &pls, &[CoefficientTree::zeros(&model.basis)])?;
            report.tau_sq = Some(tau_lambda_sq(
                &report.estimate,
                &truth,
                &model,
                pls.lambda,
                pls.alpha,
            )?);
            let mut w = output(&out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        Command::Sample {
            config,
            obs,
            samples,
            burn_in,
            beta,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let obs = read_obs(&obs)?;
            let model = cfg.forward_model(obs.basis.max_level)?;
            let delta = delta_eps(obs.eps, cfg.prior.alpha, model.kappa(), cfg.model.dim);
            let rho = (obs.eps / delta).powi(2);
            let prior = PriorSpec::new(cfg.prior.kind, cfg.prior.alpha, rho, None, model.basis)
                .map_err(|e| Error::Config(e.to_string()))?;
            let chain_cfg = ChainConfig::new(
                samples.unwrap_or(cfg.chain.n_samples),
                burn_in.unwrap_or(cfg.chain.burn_in),
                beta.unwrap_or(cfg.chain.beta),
                seed,
            );
            let chain = run_chain(&obs, &model, &prior, &chain_cfg)?;
            let truth = truth_at(&cfg, obs.basis.max_level)?;
            let (ess_pred, ess_param) = chain.ess(&model, &truth)?;
            eprintln!(
                "acceptance {:.3}, beta {:.4}, ESS pred {:.1}, ESS param {:.1}",
                chain.acceptance_rate, chain.beta, ess_pred, ess_param
            );
            chain.write_summary_csv(&model, &truth, output(&out)?)?;
        }
        Command::Rates { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = run_rate_sweep(&cfg)?;
            write_sweep(&out_dir.unwrap_or_else(|| cfg.output_dir.clone()), &result)?;
            for f in &result.fits {
                println!(
                    "{} {}: slope {:.4} ± {:.4} (theory {})",
                    f.estimator,
                    f.quantity,
                    f.slope,
                    f.se,
                    f.theoretical
                        .map_or("n/a".to_string(), |t| format!("{t:.4}"))
                );
            }
        }
        Command::ComparePriors { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = compare_priors(&cfg)?;
            write_compare(&out_dir.unwrap_or_else(|| cfg.output_dir.clone()), &report)?;
            println!(
                "laplace {:.4}, gaussian {:.4}, gap {:.4} [{:.4}, {:.4}]",
                report.laplace.slope,
                report.gaussian.slope,
                report.gap,
                report.ci_low,
                report.ci_high
            );
        }
        Command::Exponents {
            model,
            alpha,
            dim,
            kappa,
        } => {
            let model = match model.as_str() {
                "direct" | "identity" => ExponentModel::Direct,
                "smoothing" => ExponentModel::Smoothing { kappa },
                "darcy" => ExponentModel::Darcy,
                "schroedinger" | "schrodinger" => ExponentModel::Schroedinger,
                other => return Err(Error::Config(format!("unknown model `{other}`"))),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&theoretical_exponents(model, alpha, dim)?)?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
