//! Command-line interface: generators, certificates, factorization and
//! classification, normal directions, rationalization, and the experiment
//! harness.
//!
//! Matrices travel as files, JSON by default ({"dim": n, "entries":
//! [row-major]}), with the whitespace text format (first line n, then n
//! rows) accepted on input everywhere. Parameter files are JSON objects
//! ({"x": [...], "y": [...], "z": [...]} for the Horn locus, {"d1": [...],
//! "theta": [...], "d2": [...]} for the Hildebrand locus). Completed
//! experiments exit 0 regardless of their statistical outcome; acceptance
//! checks live in the test suite, not here.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary::{
    hildebrand_certificate, hildebrand_factor, horn_certificate, horn_factor, rank4_sample,
    rationalize_hildebrand, rationalize_horn, zero_locus_sample, HildebrandParams, HornParams,
};
use crate::experiments::{
    default_distances, run_table1, run_table2, run_table3, sample_dnn, verify_examples,
    ExperimentConfig,
};
use crate::geometry::{normal_direction, perturb_outward, BoundaryChart, NormalData};
use crate::mat::{read_sym_text, write_sym_text, FactorMatrix, SymMatrix};
use crate::solver::{classify, factorize, factorize_patterned, SolveOptions};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cpcone",
    about = "Toolkit for the cone of 5x5 completely positive matrices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed for all random draws and solver restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Success tolerance on the Frobenius residual.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Number of independent solver restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Maximal trust-region iterations per restart.
    #[arg(long, global = true)]
    maxit: Option<usize>,

    /// Factorization rank.
    #[arg(long, global = true)]
    rank: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Draw doubly nonnegative matrices by rejection sampling.
    Sample {
        /// How many matrices to draw.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Generate a boundary matrix.
    Gen {
        #[command(subcommand)]
        locus: GenLocus,
    },
    /// Certify boundary membership.
    Certify {
        #[command(subcommand)]
        locus: CertifyLocus,
    },
    /// Compute a cp-factorization of a matrix file.
    Factorize {
        matrix: PathBuf,
        /// Factor file whose support is enforced as the zero pattern.
        #[arg(long)]
        pattern: Option<PathBuf>,
    },
    /// Classify the cp-rank of a matrix file.
    Classify { matrix: PathBuf },
    /// Compute the outward boundary normal at a parametrized point.
    Normal {
        #[command(subcommand)]
        locus: NormalLocus,
    },
    /// Move a boundary point along its stored normal direction.
    Perturb {
        normal: PathBuf,
        /// Step length.
        #[arg(long)]
        t: f64,
    },
    /// Produce exact rational points on a boundary locus.
    Rationalize {
        #[command(subcommand)]
        target: RationalizeTarget,
    },
    /// Run an experiment at configurable scale.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
}

#[derive(Args)]
struct GenCommon {
    /// Parameter file to use instead of random parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Where to write the parameters that were used.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenLocus {
    /// Gram matrix of a Horn-locus factor.
    Horn {
        #[command(flatten)]
        common: GenCommon,
    },
    /// Gram matrix of a Hildebrand-locus factor.
    Hildebrand {
        #[command(flatten)]
        common: GenCommon,
    },
    /// Gram matrix of a random rank-4 nonnegative factor.
    Rank4,
    /// Gram matrix with an exactly zero entry.
    Zero,
}

#[derive(Subcommand)]
enum CertifyLocus {
    Horn {
        matrix: PathBuf,
        /// Horn parameter file; the diagonal scaling x defaults to ones.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    Hildebrand {
        matrix: PathBuf,
        /// Hildebrand parameter file (required: the witness depends on it).
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Subcommand)]
enum NormalLocus {
    Horn {
        #[arg(long)]
        params: PathBuf,
    },
    Hildebrand {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Subcommand)]
enum RationalizeTarget {
    /// Round a matrix near the Horn locus and solve one diagonal entry
    /// exactly from the determinant equation.
    Horn {
        matrix: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
        /// Diagonal index to solve for when the default cofactor vanishes.
        #[arg(long, default_value_t = 0)]
        diag_index: usize,
    },
    /// Round a W-pattern factor and solve its first entry exactly from the
    /// binomial equation.
    Hildebrand {
        factor: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Rejection-sample and classify.
    Table1 {
        #[arg(long)]
        samples: Option<usize>,
        /// Original scale: 50000 samples.
        #[arg(long)]
        full_scale: bool,
    },
    /// Reconstruction sweep over the five parts of the cone.
    Table2 {
        #[arg(long)]
        per_locus: Option<usize>,
        #[arg(long)]
        full_scale: bool,
    },
    /// Nearest-point sweep at several distances from the boundary.
    Table3 {
        #[arg(long)]
        per_locus: Option<usize>,
        /// Comma-separated perturbation distances.
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
        #[arg(long)]
        full_scale: bool,
    },
    /// Check the built-in reference factorizations.
    Verify,
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text and picks the stream
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn solve_options(cli: &Cli) -> SolveOptions {
    let mut opts = SolveOptions {
        seed: cli.seed,
        ..SolveOptions::default()
    };
    if let Some(tol) = cli.tol {
        opts.success_tol = tol;
    }
    if let Some(restarts) = cli.restarts {
        opts.restarts = restarts;
    }
    if let Some(maxit) = cli.maxit {
        opts.max_iter = maxit;
    }
    opts
}

fn run(cli: Cli) -> Result<()> {
    let opts = solve_options(&cli);
    match &cli.command {
        Command::Sample { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            if *count == 1 {
                let m = sample_dnn(&mut rng)?;
                emit_matrix(&cli, &m)
            } else {
                let ms: Vec<SymMatrix> = (0..*count)
                    .map(|_| sample_dnn(&mut rng))
                    .collect::<Result<_>>()?;
                emit_json(&cli, &ms)
            }
        }
        Command::Gen { locus } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            match locus {
                GenLocus::Horn { common } => {
                    let params: HornParams = match &common.params {
                        Some(path) => read_json(path)?,
                        None => HornParams::sample(&mut rng),
                    };
                    params.validate()?;
                    if let Some(path) = &common.params_out {
                        write_json_to(path, &params)?;
                    }
                    emit_matrix(&cli, &horn_factor(&params)?.gram())
                }
                GenLocus::Hildebrand { common } => {
                    let params: HildebrandParams = match &common.params {
                        Some(path) => read_json(path)?,
                        None => HildebrandParams::sample(&mut rng),
                    };
                    params.validate()?;
                    if let Some(path) = &common.params_out {
                        write_json_to(path, &params)?;
                    }
                    emit_matrix(&cli, &hildebrand_factor(&params)?.gram())
                }
                GenLocus::Rank4 => emit_matrix(&cli, &rank4_sample(&mut rng)),
                GenLocus::Zero => emit_matrix(&cli, &zero_locus_sample(&mut rng)),
            }
        }
        Command::Certify { locus } => match locus {
            CertifyLocus::Horn { matrix, params } => {
                let a = read_matrix(matrix)?;
                let x = match params {
                    Some(path) => read_json::<HornParams>(path)?.x,
                    None => [1.0; 5],
                };
                emit_json(&cli, &horn_certificate(&a, &x)?)
            }
            CertifyLocus::Hildebrand { matrix, params } => {
                let a = read_matrix(matrix)?;
                let p: HildebrandParams = read_json(params)?;
                emit_json(&cli, &hildebrand_certificate(&a, &p)?)
            }
        },
        Command::Factorize { matrix, pattern } => {
            let a = read_matrix(matrix)?;
            let rank = cli.rank.unwrap_or(a.dim());
            let report = match pattern {
                Some(path) => {
                    let factor: FactorMatrix = read_json(path)?;
                    factorize_patterned(&a, rank, factor.support(), &opts)?
                }
                None => factorize(&a, rank, &opts)?,
            };
            if cli.format == Format::Text {
                println!(
                    "residual {:e}  grad {:e}  iterations {}  converged {}  restart {}",
                    report.residual,
                    report.grad_norm,
                    report.iterations,
                    report.converged,
                    report.restart_index
                );
                emit_report(&cli, &report)
            } else {
                emit_json(&cli, &report)
            }
        }
        Command::Classify { matrix } => {
            let a = read_matrix(matrix)?;
            let result = classify(&a, &opts)?;
            if cli.format == Format::Text {
                println!("{:?}", result.verdict);
                emit_report(&cli, &result)
            } else {
                emit_json(&cli, &result)
            }
        }
        Command::Normal { locus } => {
            let chart = match locus {
                NormalLocus::Horn { params } => {
                    BoundaryChart::horn(&read_json::<HornParams>(params)?)?
                }
                NormalLocus::Hildebrand { params } => {
                    BoundaryChart::hildebrand_from_params(&read_json::<HildebrandParams>(params)?)?
                }
            };
            emit_json(&cli, &normal_direction(&chart, &opts)?)
        }
        Command::Perturb { normal, t } => {
            let nd: NormalData = read_json(normal)?;
            let (matrix, dnn) = perturb_outward(&nd, *t)?;
            #[derive(Serialize)]
            struct Perturbed {
                matrix: SymMatrix,
                dnn: bool,
            }
            if let Some(path) = &cli.out {
                write_json_to(path, &matrix)?;
                println!("dnn: {dnn}");
                Ok(())
            } else {
                emit_json(&cli, &Perturbed { matrix, dnn })
            }
        }
        Command::Rationalize { target } => match target {
            RationalizeTarget::Horn {
                matrix,
                max_den,
                diag_index,
            } => {
                let a = read_matrix(matrix)?;
                let exact = if *diag_index == 0 {
                    rationalize_horn(&a, *max_den)?
                } else {
                    crate::boundary::rationalize_horn_at(&a, *max_den, *diag_index)?
                };
                emit_json(&cli, &exact)
            }
            RationalizeTarget::Hildebrand { factor, max_den } => {
                let b: FactorMatrix = read_json(factor)?;
                emit_json(&cli, &rationalize_hildebrand(&b, *max_den)?)
            }
        },
        Command::Experiment { which } => {
            let mut cfg = match which {
                ExperimentCmd::Table1 { .. } => ExperimentConfig::table1(),
                ExperimentCmd::Table2 { .. } => ExperimentConfig::table2(),
                ExperimentCmd::Table3 { .. } => ExperimentConfig::table3(),
                ExperimentCmd::Verify => ExperimentConfig::verify(),
            };
            cfg.seed = cli.seed;
            cfg.solve = opts.clone();
            cfg.output_path = cli.out.clone();
            match which {
                ExperimentCmd::Table1 {
                    samples,
                    full_scale,
                } => {
                    cfg.samples = samples.unwrap_or(if *full_scale { 50_000 } else { 1000 });
                    let report = run_table1(&cfg)?;
                    println!(
                        "table1: total {}  not_cp {}  rank5 {}  rank6 {}  ({:.1}s)",
                        report.counts.total,
                        report.counts.not_cp,
                        report.counts.rank5,
                        report.counts.rank6,
                        report.wall_time_secs
                    );
                    emit_report(&cli, &report)
                }
                ExperimentCmd::Table2 {
                    per_locus,
                    full_scale,
                } => {
                    cfg.per_locus = per_locus.unwrap_or(if *full_scale { 100 } else { 20 });
                    let report = run_table2(&cfg)?;
                    for row in &report.rows {
                        println!(
                            "table2 {:?}: any {}/{}  original {}",
                            row.locus,
                            row.any_success,
                            row.trials,
                            row.original_success
                                .map_or("-".to_string(), |v| format!("{v}/{}", row.trials))
                        );
                    }
                    emit_report(&cli, &report)
                }
                ExperimentCmd::Table3 {
                    per_locus,
                    distances,
                    full_scale,
                } => {
                    cfg.per_locus = per_locus.unwrap_or(if *full_scale { 100 } else { 20 });
                    cfg.distances = distances.clone().unwrap_or_else(default_distances);
                    let report = run_table3(&cfg)?;
                    for row in &report.rows {
                        println!(
                            "table3 t={:.0e}: any {}/{}  original {}/{}  in-band {}/{}",
                            row.distance,
                            row.any_success,
                            row.trials,
                            row.original_success,
                            row.trials,
                            row.residual_in_band,
                            row.trials
                        );
                    }
                    emit_report(&cli, &report)
                }
                ExperimentCmd::Verify => {
                    let report = verify_examples()?;
                    for item in &report.items {
                        println!(
                            "verify {}: {} ({})",
                            item.name,
                            if item.pass { "pass" } else { "FAIL" },
                            item.detail
                        );
                    }
                    emit_report(&cli, &report)
                }
            }
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Matrix files are JSON or the whitespace text format.
fn read_matrix(path: &Path) -> Result<SymMatrix> {
    let text = read_file(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        Ok(serde_json::from_str(&text)?)
    } else {
        read_sym_text(&text)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_file(path)?)?)
}

fn write_json_to<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_matrix(cli: &Cli, m: &SymMatrix) -> Result<()> {
    match cli.format {
        Format::Text => {
            let text = write_sym_text(m);
            match &cli.out {
                Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Format::Json => emit_json(cli, m),
    }
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    match &cli.out {
        Some(path) => write_json_to(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

/// Experiment reports always go to the output file when one is given; the
/// summary lines above already went to stdout.
fn emit_report<T: Serialize>(cli: &Cli, report: &T) -> Result<()> {
    if let Some(path) = &cli.out {
        write_json_to(path, report)?;
    }
    Ok(())
}
