mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use config::RunConfig;
use iwpca::algorithms::{
    item_weighted_pca_constrained, weights_interpolate, weights_interpolate_text,
    weights_inverse_count, weights_proper, Algorithm, ItemPartition, SolveReport, WeightRule,
    WeightScheme, WeightVector,
};
use iwpca::evaluation::{
    attach_diagnostics, item_auc, rank_sweep, robustness_sweep, write_tidy_csv, TidyRow,
};
use iwpca::ingest::{
    load_lastfm, load_movielens, popularity, row_normalize, FilterStats, IdsSidecar, LastFmOptions,
    MovieLensOptions, RowNorm,
};
use iwpca::io::{read_matrix, to_json_string, write_json, write_matrix_csv};
use iwpca::matrix::{DenseMatrix, Projection};
use iwpca::theory::{
    bernoulli_verdict, diminishing_returns_verdict, proposition4_verdict, theorem1_verdict,
    theorem3_verdict, theorem5_verdict, Verdict,
};
use iwpca::Error;

#[derive(Parser)]
#[command(name = "iwpca", version, about = "Item-Weighted PCA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a raw LastFM or MovieLens dump into a matrix, ids and manifest.
    Ingest(IngestArgs),
    /// Fit one algorithm at one rank and write the projection.
    Fit(RunConfig),
    /// Item AUC and popularity diagnostics for one algorithm and rank.
    Eval(RunConfig),
    /// Item AUC over several algorithms and ranks.
    Sweep(RunConfig),
    /// Item AUC as a growing fraction of entries is removed.
    Robustness(RunConfig),
    /// Run structural checks and print their verdicts.
    Theory(TheoryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Source {
    Lastfm,
    Movielens,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RowNormArg {
    L1,
    L2,
    None,
}

#[derive(clap::Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    source: Source,
    /// Directory holding the dump (or the `user_artists.dat` file for LastFM).
    #[arg(long)]
    input: PathBuf,
    /// Row normalization; LastFM defaults to l1, MovieLens to none.
    #[arg(long, value_enum)]
    row_norm: Option<RowNormArg>,
    #[arg(long)]
    min_artist_listeners: Option<usize>,
    #[arg(long)]
    min_user_total: Option<f64>,
    #[arg(long)]
    per_genre: Option<usize>,
    #[arg(long)]
    top_users: Option<usize>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    All,
    Theorem1,
    Theorem3,
    Proposition4,
    Theorem5,
    Diminishing,
    Bernoulli,
}

#[derive(clap::Args)]
struct TheoryArgs {
    #[arg(value_enum)]
    check: Check,
    #[command(flatten)]
    run: RunConfig,
}

enum CliError {
    /// Bad input, flags or files: exit code 2.
    Usage(String),
    /// A computation or check failed: exit code 1.
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::InvalidArgument(_)
            | Error::InvalidShape { .. }
            | Error::NonFinite { .. }
            | Error::DimensionMismatch { .. }
            | Error::RankOutOfRange { .. }
            | Error::NotOrthonormal { .. } => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Fit(cfg) => resolve(cfg).and_then(|c| cmd_fit(&c)),
        Command::Eval(cfg) => resolve(cfg).and_then(|c| cmd_eval(&c)),
        Command::Sweep(cfg) => resolve(cfg).and_then(|c| cmd_sweep(&c)),
        Command::Robustness(cfg) => resolve(cfg).and_then(|c| cmd_robustness(&c)),
        Command::Theory(args) => cmd_theory(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn resolve(cfg: RunConfig) -> CliResult<RunConfig> {
    cfg.resolve().map_err(CliError::Usage)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))
}

#[derive(Serialize)]
struct Manifest {
    dataset: Source,
    shape: [usize; 2],
    normalization: iwpca::ingest::Normalization,
    filter: FilterStats,
    matrix: String,
    ids: String,
}

fn cmd_ingest(args: IngestArgs) -> CliResult<()> {
    let run = resolve(args.run)?;
    let (pref, stats) = match args.source {
        Source::Lastfm => {
            let path = if args.input.is_dir() {
                args.input.join("user_artists.dat")
            } else {
                args.input.clone()
            };
            let defaults = LastFmOptions::default();
            let opts = LastFmOptions {
                min_artist_listeners: args
                    .min_artist_listeners
                    .unwrap_or(defaults.min_artist_listeners),
                min_user_total: args.min_user_total.unwrap_or(defaults.min_user_total),
            };
            load_lastfm(&path, &opts)?
        }
        Source::Movielens => {
            let defaults = MovieLensOptions::default();
            let opts = MovieLensOptions {
                per_genre: args.per_genre.unwrap_or(defaults.per_genre),
                top_users: args.top_users.unwrap_or(defaults.top_users),
            };
            load_movielens(
                &args.input.join("ratings.dat"),
                &args.input.join("movies.dat"),
                &opts,
            )?
        }
    };
    let norm = args.row_norm.unwrap_or(match args.source {
        Source::Lastfm => RowNormArg::L1,
        Source::Movielens => RowNormArg::None,
    });
    let pref = match norm {
        RowNormArg::L1 => row_normalize(&pref, RowNorm::L1)?,
        RowNormArg::L2 => row_normalize(&pref, RowNorm::L2)?,
        RowNormArg::None => pref,
    };

    let out = run.output_dir();
    ensure_dir(&out)?;
    let stem = match args.source {
        Source::Lastfm => "lastfm",
        Source::Movielens => "movielens",
    };
    let matrix_name = format!("{stem}.csv");
    let ids_name = format!("{stem}.ids.json");
    write_matrix_csv(&out.join(&matrix_name), pref.matrix())?;
    write_json(&out.join(&ids_name), &IdsSidecar::from(&pref))?;
    let (rows, cols) = pref.shape();
    let manifest = Manifest {
        dataset: args.source,
        shape: [rows, cols],
        normalization: pref.normalization(),
        filter: stats,
        matrix: matrix_name,
        ids: ids_name,
    };
    write_json(&out.join(format!("{stem}.manifest.json")), &manifest)?;
    print!("{}", to_json_string(&manifest)?);
    Ok(())
}

fn load_data(cfg: &RunConfig) -> CliResult<DenseMatrix> {
    let path = cfg.data_path().map_err(usage)?;
    Ok(read_matrix(path)?)
}

fn load_item_ids(cfg: &RunConfig, d: usize) -> CliResult<Option<Vec<String>>> {
    let Some(path) = &cfg.ids else {
        return Ok(None);
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let ids: IdsSidecar =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if ids.item_ids.len() != d {
        return Err(usage(format!(
            "{} lists {} items but the matrix has {d} columns",
            path.display(),
            ids.item_ids.len()
        )));
    }
    Ok(Some(ids.item_ids))
}

fn parse_scheme(name: &str) -> CliResult<WeightScheme> {
    name.parse::<WeightScheme>()
        .map_err(|e| usage(e.to_string()))
}

/// Mean number of nonzero entries per item in each block.
fn block_counts(x: &DenseMatrix, part: &ItemPartition) -> (f64, f64) {
    let counts: Vec<f64> = (0..x.cols())
        .map(|j| x.column(j).iter().filter(|v| **v != 0.0).count() as f64)
        .collect();
    let mean = |idx: &[usize]| idx.iter().map(|&j| counts[j]).sum::<f64>() / idx.len() as f64;
    (mean(part.popular()), mean(part.unpopular()))
}

fn weight_rule(cfg: &RunConfig, x: &DenseMatrix) -> CliResult<WeightRule> {
    let scheme = parse_scheme(cfg.weight_scheme.as_deref().unwrap_or("inverse_sign_norm"))?;
    let partition = || -> CliResult<ItemPartition> {
        let k = cfg
            .popular_top
            .ok_or_else(|| usage(format!("weight scheme {scheme} needs --popular-top")))?;
        Ok(ItemPartition::top_k(&popularity(x), k)?)
    };
    let counts = |part: &ItemPartition| {
        let (mean_p, mean_u) = block_counts(x, part);
        (cfg.n_p.unwrap_or(mean_p), cfg.n_u.unwrap_or(mean_u))
    };
    Ok(match scheme {
        WeightScheme::Uniform => WeightRule::Uniform,
        WeightScheme::InverseSignNorm => WeightRule::InverseSignNorm,
        WeightScheme::Proper => WeightRule::Fixed(weights_proper(x, &partition()?)?),
        WeightScheme::Interpolate | WeightScheme::InterpolateText | WeightScheme::InverseCount => {
            let part = partition()?;
            let (n_p, n_u) = counts(&part);
            let w = match scheme {
                WeightScheme::Interpolate => weights_interpolate(&part, n_p, n_u)?,
                WeightScheme::InterpolateText => weights_interpolate_text(&part, n_p, n_u)?,
                _ => weights_inverse_count(&part, n_p, n_u)?,
            };
            WeightRule::Fixed(w)
        }
        WeightScheme::Custom => {
            let path = cfg
                .weights_file
                .as_ref()
                .ok_or_else(|| usage("weight scheme custom needs --weights-file"))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let values: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            WeightRule::Fixed(WeightVector::new(values, WeightScheme::Custom)?)
        }
    })
}

fn build_algorithm(name: &str, cfg: &RunConfig, x: &DenseMatrix) -> CliResult<Algorithm> {
    Ok(match name {
        "vanilla" => Algorithm::Vanilla,
        "colnorm" => Algorithm::ColumnNormalized {
            keep_zero_cols: cfg.keep_zero_cols.unwrap_or(false),
        },
        "iwpca" => Algorithm::ItemWeighted {
            weights: weight_rule(cfg, x)?,
        },
        other => {
            return Err(usage(format!(
                "unknown algorithm {other:?} (vanilla, colnorm, iwpca)"
            )))
        }
    })
}

fn algorithms(cfg: &RunConfig, x: &DenseMatrix) -> CliResult<Vec<Algorithm>> {
    let default = ["vanilla", "colnorm", "iwpca"].map(String::from).to_vec();
    let names = cfg
        .algorithms
        .clone()
        .or_else(|| cfg.algorithm.clone().map(|a| vec![a]))
        .unwrap_or(default);
    names.iter().map(|n| build_algorithm(n, cfg, x)).collect()
}

fn fit(cfg: &RunConfig, x: &DenseMatrix) -> CliResult<(Algorithm, Projection, SolveReport)> {
    let name = cfg.algorithm.as_deref().unwrap_or("iwpca");
    let alg = build_algorithm(name, cfg, x)?;
    let r = cfg.rank.ok_or_else(|| usage("missing --rank"))?;
    let (p, report) = match (&alg, cfg.error_slack) {
        (_, None) => alg.fit(x, r)?,
        (Algorithm::ItemWeighted { weights }, Some(slack)) => {
            item_weighted_pca_constrained(x, &weights.resolve(x)?, r, slack)?
        }
        (_, Some(_)) => return Err(usage("--error-slack applies only to --algorithm iwpca")),
    };
    Ok((alg, p, report))
}

#[derive(Serialize, Deserialize)]
struct ProjectionFile {
    d: usize,
    r: usize,
    #[serde(rename = "U")]
    u: Vec<f64>,
    algorithm: String,
    scheme: Option<WeightScheme>,
    solve_report: Option<SolveReport>,
}

fn cmd_fit(cfg: &RunConfig) -> CliResult<()> {
    let x = load_data(cfg)?;
    let (alg, p, report) = fit(cfg, &x)?;
    let file = ProjectionFile {
        d: p.dim(),
        r: p.rank(),
        u: p.basis().to_vec(),
        algorithm: alg.name().to_string(),
        scheme: alg.weight_scheme(),
        solve_report: Some(report),
    };
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join("projection.json"), &file)?;
    Ok(())
}

fn write_csv(path: &Path, rows: &[TidyRow]) -> CliResult<()> {
    let file =
        std::fs::File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(write_tidy_csv(std::io::BufWriter::new(file), rows)?)
}

fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let x = load_data(cfg)?;
    let (algorithm, scheme, p, solve) = match &cfg.projection {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let file: ProjectionFile = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let p = if file.r == 0 {
                Projection::zero(file.d)
            } else {
                Projection::from_basis(file.d, file.r, file.u)?
            };
            (file.algorithm, file.scheme, p, file.solve_report)
        }
        None => {
            let (alg, p, solve) = fit(cfg, &x)?;
            (alg.name().to_string(), alg.weight_scheme(), p, Some(solve))
        }
    };
    let mut report = item_auc(&x, &p)?.with_tags(&cfg.dataset_tag(), &algorithm, scheme);
    report.solve_report = solve;
    attach_diagnostics(
        &mut report,
        &x,
        &p,
        cfg.groups.unwrap_or(3),
        cfg.half_error.unwrap_or(false),
    )?;
    let ids = load_item_ids(cfg, x.cols())?;
    let rows = report.tidy_rows(None, cfg.per_item.unwrap_or(true), ids.as_deref());
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join("eval.json"), &report)?;
    write_csv(&out.join("eval.csv"), &rows)
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let x = load_data(cfg)?;
    let ranks = cfg
        .ranks
        .clone()
        .or_else(|| cfg.rank.map(|r| vec![r]))
        .ok_or_else(|| usage("missing --ranks"))?;
    if ranks.is_empty() {
        return Err(usage("--ranks must not be empty"));
    }
    let algs = algorithms(cfg, &x)?;
    let tag = cfg.dataset_tag();
    let reports: Vec<_> = rank_sweep(&x, &algs, &ranks)?
        .into_iter()
        .map(|r| {
            let (alg, scheme) = (r.algorithm.clone(), r.weight_scheme);
            r.with_tags(&tag, &alg, scheme)
        })
        .collect();
    let ids = load_item_ids(cfg, x.cols())?;
    let per_item = cfg.per_item.unwrap_or(false);
    let rows: Vec<TidyRow> = reports
        .iter()
        .flat_map(|r| r.tidy_rows(None, per_item, ids.as_deref()))
        .collect();
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join("sweep.json"), &reports)?;
    write_csv(&out.join("sweep.csv"), &rows)
}

fn cmd_robustness(cfg: &RunConfig) -> CliResult<()> {
    let x = load_data(cfg)?;
    let alphas = cfg
        .alphas
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.2, 0.4, 0.6, 0.8]);
    let r = cfg
        .rank
        .unwrap_or(iwpca::evaluation::DEFAULT_ROBUSTNESS_RANK);
    let robust_cfg = RunConfig {
        keep_zero_cols: Some(cfg.keep_zero_cols.unwrap_or(true)),
        ..cfg.clone()
    };
    let tag = cfg.dataset_tag();
    let ids = load_item_ids(cfg, x.cols())?;
    let per_item = cfg.per_item.unwrap_or(false);
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for alg in algorithms(&robust_cfg, &x)? {
        for mut point in robustness_sweep(&x, &alg, r, &alphas, cfg.seed())? {
            point.report = point
                .report
                .with_tags(&tag, alg.name(), alg.weight_scheme());
            rows.extend(
                point
                    .report
                    .tidy_rows(Some(point.alpha), per_item, ids.as_deref()),
            );
            points.push(point);
        }
    }
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join("robustness.json"), &points)?;
    write_csv(&out.join("robustness.csv"), &rows)
}

fn run_check(check: Check, seed: u64) -> iwpca::Result<Verdict> {
    let seeds = |count: u64| (seed..seed + count).collect::<Vec<_>>();
    match check {
        Check::Theorem1 => theorem1_verdict(&seeds(10), &[200, 2000, 20000]),
        Check::Theorem3 => theorem3_verdict(&seeds(20)),
        Check::Proposition4 => proposition4_verdict(&seeds(20)),
        Check::Theorem5 => theorem5_verdict(&seeds(10)),
        Check::Diminishing => diminishing_returns_verdict(&seeds(50), 30, 12),
        Check::Bernoulli => bernoulli_verdict(seed, &[500, 1000, 2000, 4000], 100),
        Check::All => unreachable!("expanded by the caller"),
    }
}

fn cmd_theory(args: TheoryArgs) -> CliResult<()> {
    let run = resolve(args.run)?;
    let checks = match args.check {
        Check::All => vec![
            Check::Theorem1,
            Check::Theorem3,
            Check::Proposition4,
            Check::Theorem5,
            Check::Diminishing,
            Check::Bernoulli,
        ],
        one => vec![one],
    };
    let verdicts = checks
        .into_iter()
        .map(|c| run_check(c, run.seed()))
        .collect::<iwpca::Result<Vec<_>>>()?;
    let text = to_json_string(&verdicts)?;
    if let Some(dir) = &run.output_dir {
        ensure_dir(dir)?;
        std::fs::write(dir.join("theory.json"), &text).map_err(|e| usage(e.to_string()))?;
    }
    print!("{text}");
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| {
            format!(
                "{} {}",
                v.name,
                serde_json::to_string(&v.statistics).unwrap_or_default()
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "checks failed: {}",
            failed.join("; ")
        )))
    }
}
