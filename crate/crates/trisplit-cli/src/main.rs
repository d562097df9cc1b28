//! Command-line front end: plan parameters from moduli, solve problem files,
//! and run the certification suites.
//!
//! Exit codes are a stable contract:
//! 0 success, 1 file/parse error, 2 infeasible parameters, 3 iteration limit
//! reached, 4 divergence detected, 5 certification violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trisplit::certify::{self, SuiteOutcome};
use trisplit::engine::{self, RunStatus, StopRule};
use trisplit::io::{fmt_float, write_report, write_trace, ProblemFile};
use trisplit::linalg::Vector;
use trisplit::operators::Cocoercivity;
use trisplit::params::{self, ParamError, ParamPlan, Regime};

const EXIT_OK: u8 = 0;
const EXIT_PARSE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_MAX_ITERS: u8 = 3;
const EXIT_DIVERGED: u8 = 4;
const EXIT_VIOLATION: u8 = 5;

#[derive(Parser)]
#[command(name = "trisplit")]
#[command(about = "Adaptive three-operator splitting: parameter planning, solving, certification")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Validate or suggest algorithm parameters for given moduli
    Plan {
        /// Monotonicity modulus of operator A
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Monotonicity modulus of operator B
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Cocoercivity constant of C ("inf" for the zero map)
        #[arg(long)]
        sigma: f64,
        /// First resolvent parameter; suggested when omitted
        #[arg(long)]
        gamma: Option<f64>,
        /// Second resolvent parameter; derived when omitted
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Solve a problem file and write a report and optional trace
    Solve {
        /// Path to the problem file (JSON)
        file: PathBuf,
        /// Stopping tolerance for both the fixed-point and KKT residuals
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Iteration cap
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        /// Report output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trace CSV output path
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a certification suite and report the worst margin
    Certify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// Algebraic norm identity
    Lemma31,
    /// Conical averagedness inequality, generic vs specialized
    Conical,
    /// Resolvent and forward-map cocoercivity
    Cocoercive,
    /// Threshold/interval feasibility equivalence
    Lemma43,
}

fn sigma_of(value: f64) -> Cocoercivity<f64> {
    if value.is_infinite() {
        Cocoercivity::Unbounded
    } else {
        Cocoercivity::Finite(value)
    }
}

fn param_error_code(err: &ParamError) -> &'static str {
    match err {
        ParamError::InfeasibleGamma { .. } => "InfeasibleGamma",
        ParamError::NotNeutral { .. } => "NotNeutral",
        ParamError::NonStrongPair { .. } => "NonStrongPair",
        ParamError::NonMonotonePair { .. } => "NonMonotonePair",
        ParamError::GammaBelowThreshold { .. } => "GammaBelowThreshold",
        ParamError::InfeasiblePair { .. } => "InfeasiblePair",
        ParamError::BadEtaFraction(_) => "BadEtaFraction",
        ParamError::NonPositiveParameter { .. } => "NonPositiveParameter",
    }
}

fn print_plan(plan: &ParamPlan<f64>) {
    let regime = match plan.regime {
        Regime::Neutral => "neutral",
        Regime::Strong => "strong",
    };
    println!("regime: {regime}");
    println!("gamma: {}", fmt_float(plan.gamma));
    println!("delta: {}", fmt_float(plan.delta));
    println!("lambda: {}", fmt_float(plan.lambda));
    println!("eta: {}", fmt_float(plan.eta));
    println!("eta_star: {}", fmt_float(plan.eta_star));
}

fn cmd_plan(alpha: f64, beta: f64, sigma: f64, gamma: Option<f64>, delta: Option<f64>) -> u8 {
    if !(sigma > 0.0) {
        eprintln!("InfeasibleGamma: sigma must be positive (or \"inf\" for the zero map)");
        return EXIT_INFEASIBLE;
    }
    if delta.is_some() && gamma.is_none() {
        eprintln!("InfeasibleGamma: --delta requires --gamma");
        return EXIT_INFEASIBLE;
    }
    let sigma = sigma_of(sigma);
    let sum = alpha + beta;
    let neutral = sum.abs() <= params::NEUTRAL_SUM_TOL;

    if neutral {
        if let (Some(d), Some(gamma)) = (delta, gamma) {
            // the neutral regime fixes delta; a mismatched request is infeasible
            let tied = gamma / (1.0 + 2.0 * gamma * alpha);
            if (d - tied).abs() > 1e-9 * tied.abs().max(1.0) {
                eprintln!(
                    "InfeasibleGamma: neutral regime requires delta = gamma/(1+2*gamma*alpha) = {}",
                    fmt_float(tied)
                );
                return EXIT_INFEASIBLE;
            }
        }
        let result = match gamma {
            Some(g) => params::plan_neutral(alpha, beta, sigma, g, params::DEFAULT_ETA_FRACTION),
            None => params::suggest(alpha, beta, sigma),
        };
        match result {
            Ok(plan) => {
                print_plan(&plan);
                EXIT_OK
            }
            Err(err) => {
                eprintln!("{}: {err}", param_error_code(&err));
                EXIT_INFEASIBLE
            }
        }
    } else if sum > 0.0 {
        let gamma0 = match params::gamma_threshold(alpha, beta, sigma) {
            Ok(g0) => g0,
            Err(err) => {
                eprintln!("{}: {err}", param_error_code(&err));
                return EXIT_INFEASIBLE;
            }
        };
        println!("gamma0: {}", fmt_float(gamma0));
        let result = match (gamma, delta) {
            (None, _) => params::suggest(alpha, beta, sigma),
            (Some(g), d) => match params::delta_range(alpha, beta, sigma, g) {
                Ok(range) => {
                    println!("discriminant: {}", fmt_float(range.discriminant));
                    println!(
                        "inv_delta_range: ({}, {})",
                        fmt_float(range.inv_delta_lo),
                        fmt_float(range.inv_delta_hi)
                    );
                    let chosen = d.unwrap_or(2.0 / (range.inv_delta_lo + range.inv_delta_hi));
                    params::plan_strong(alpha, beta, sigma, g, chosen, params::DEFAULT_ETA_FRACTION)
                }
                Err(err) => Err(err),
            },
        };
        match result {
            Ok(plan) => {
                print_plan(&plan);
                EXIT_OK
            }
            Err(err) => {
                eprintln!("{}: {err}", param_error_code(&err));
                EXIT_INFEASIBLE
            }
        }
    } else {
        let err = params::suggest(alpha, beta, sigma).unwrap_err();
        eprintln!("{}: {err}", param_error_code(&err));
        EXIT_INFEASIBLE
    }
}

/// Builds the plan a problem file asks for: explicit parameters when given,
/// otherwise the suggestion derived from the certified moduli.
fn plan_from_file(built: &trisplit::io::BuiltProblem) -> Result<ParamPlan<f64>, ParamError> {
    let alpha = built.problem.a.modulus();
    let beta = built.problem.b.modulus();
    let sigma = built.problem.c.sigma();
    match &built.params {
        None => params::suggest(alpha, beta, sigma),
        Some(p) => {
            let fraction = p.eta_fraction.unwrap_or(params::DEFAULT_ETA_FRACTION);
            let sum = alpha + beta;
            if sum.abs() <= params::NEUTRAL_SUM_TOL {
                let plan = params::plan_neutral(alpha, beta, sigma, p.gamma, fraction)?;
                if let Some(d) = p.delta {
                    if (d - plan.delta).abs() > 1e-9 * plan.delta.abs().max(1.0) {
                        return Err(ParamError::InfeasibleGamma {
                            gamma: p.gamma,
                            one_plus: 1.0 + 2.0 * p.gamma * alpha,
                            eta_star: plan.eta_star,
                        });
                    }
                }
                Ok(plan)
            } else {
                let delta = match p.delta {
                    Some(d) => d,
                    None => {
                        let range = params::delta_range(alpha, beta, sigma, p.gamma)?;
                        2.0 / (range.inv_delta_lo + range.inv_delta_hi)
                    }
                };
                params::plan_strong(alpha, beta, sigma, p.gamma, delta, fraction)
            }
        }
    }
}

fn cmd_solve(
    file: &PathBuf,
    tol: f64,
    max_iter: usize,
    out: Option<&PathBuf>,
    trace: Option<&PathBuf>,
) -> u8 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("cannot read {}: {err}", file.display());
            return EXIT_PARSE;
        }
    };
    let built = match ProblemFile::parse(&text).and_then(|f| f.build()) {
        Ok(b) => b,
        Err(err) => {
            eprintln!("invalid problem file: {err}");
            return EXIT_PARSE;
        }
    };
    let plan = match plan_from_file(&built) {
        Ok(p) => p,
        Err(err) => {
            eprintln!("{}: {err}", param_error_code(&err));
            return EXIT_INFEASIBLE;
        }
    };
    let dim = built.problem.dim();
    let x0 = built.x0.clone().unwrap_or_else(|| Vector::zeros(dim));
    let stop = StopRule::new(tol, tol, max_iter);
    let report = match engine::solve(&built.problem, &plan, &x0, &stop) {
        Ok(r) => r,
        Err(err) => {
            eprintln!("solve failed: {err}");
            return EXIT_INFEASIBLE;
        }
    };

    let report_text = write_report(&report);
    if let Some(path) = out {
        if let Err(err) = std::fs::write(path, &report_text) {
            eprintln!("cannot write {}: {err}", path.display());
            return EXIT_PARSE;
        }
    } else {
        print!("{report_text}");
    }
    if let Some(path) = trace {
        if let Err(err) = std::fs::write(path, write_trace(&report)) {
            eprintln!("cannot write {}: {err}", path.display());
            return EXIT_PARSE;
        }
    }
    match report.status {
        RunStatus::Converged => EXIT_OK,
        RunStatus::MaxIters => EXIT_MAX_ITERS,
        RunStatus::Diverged => EXIT_DIVERGED,
    }
}

fn cmd_certify(suite: Suite, samples: usize, seed: u64) -> u8 {
    let (name, outcome): (&str, SuiteOutcome) = match suite {
        Suite::Lemma31 => ("lemma31", certify::lemma31_suite::<f64>(samples, seed)),
        Suite::Conical => ("conical", certify::conical_suite::<f64>(samples, seed, 1.0)),
        Suite::Cocoercive => (
            "cocoercive",
            certify::cocoercive_suite::<f64>(samples, seed),
        ),
        Suite::Lemma43 => ("lemma43", certify::lemma43_suite::<f64>(samples, seed)),
    };
    println!(
        "suite: {name}\nsamples: {}\nworst_margin_rel_tol: {}",
        outcome.samples,
        fmt_float(outcome.worst_rel)
    );
    match &outcome.violation {
        None => {
            println!("status: pass");
            EXIT_OK
        }
        Some(instance) => {
            println!("status: fail");
            eprintln!("violation: {instance}");
            EXIT_VIOLATION
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Commands::Plan {
            alpha,
            beta,
            sigma,
            gamma,
            delta,
        } => cmd_plan(alpha, beta, sigma, gamma, delta),
        Commands::Solve {
            file,
            tol,
            max_iter,
            out,
            trace,
        } => cmd_solve(&file, tol, max_iter, out.as_ref(), trace.as_ref()),
        Commands::Certify {
            suite,
            samples,
            seed,
        } => cmd_certify(suite, samples, seed),
    };
    ExitCode::from(code)
}
