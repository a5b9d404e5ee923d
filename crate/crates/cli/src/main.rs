//! `bdci`: BD and BDCI from R-D files, corpus generation, training and
//! benchmarks.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdci_core::bdci::{compute_bdci, train_bundle, SegmentHead, DEFAULT_DENSE_THRESHOLD};
use bdci_core::bench::{eval_runtime, run_bench, BenchConfig};
use bdci_core::classic::{compute_bd, compute_bd_dense_anchor, BD_MIN_POINTS};
use bdci_core::interp::min_points;
use bdci_core::io::{read_rd_file, RdFile, ResultDocument};
use bdci_core::nn::bundle::sha256_hex;
use bdci_core::nn::{ModelBundle, TrainConfig, TrainReport};
use bdci_core::synth::{build_corpus, Corpus, CorpusConfig, Split};
use bdci_core::{Error, Method, Mode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod fail;

use fail::{CliError, CliResult, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "bdci", version, about = "Bjøntegaard Delta metrics with neural confidence intervals")]
struct Cli {
    /// Worker threads for corpus generation, training and bench. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical BD-BR or BD-quality of TARGET against ANCHOR.
    Bd(BdArgs),
    /// BD estimate with its 3-sigma confidence interval from a model bundle.
    Bdci(BdciArgs),
    /// Generate a synthetic corpus of curve pairs and segment records.
    GenCorpus(GenArgs),
    /// Train a model bundle on a corpus.
    Train(TrainArgs),
    /// Bias, calibration and width reports on a test corpus.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Br,
    Quality,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Br => Mode::Rate,
            ModeArg::Quality => Mode::Quality,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cubic,
    Csi,
    Pchip,
    Akima,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cubic => Method::Cubic,
            MethodArg::Csi => Method::Csi,
            MethodArg::Pchip => Method::Pchip,
            MethodArg::Akima => Method::Akima,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Full-precision JSON result document.
    Json,
    /// One human-readable line, percents at 4 decimals.
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Direct,
    PchipLocal,
}

impl From<HeadArg> for SegmentHead {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Direct => SegmentHead::Direct,
            HeadArg::PchipLocal => SegmentHead::PchipLocal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args)]
struct PairArgs {
    /// R-D file of the reference codec.
    anchor: PathBuf,
    /// R-D file of the codec under evaluation.
    target: PathBuf,
    #[arg(long, value_enum, default_value = "br")]
    mode: ModeArg,
    /// Anchors with at least this many points are integrated exactly with PCHIP.
    #[arg(long, default_value_t = DEFAULT_DENSE_THRESHOLD)]
    dense_anchor_threshold: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BdArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, value_enum, default_value = "pchip")]
    method: MethodArg,
}

#[derive(Args)]
struct BdciArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Model bundle written by `bdci train`.
    #[arg(long)]
    models: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of anchor/target curve pairs.
    #[arg(long, default_value_t = 1000)]
    curves: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,
    /// Independent samplings of every curve.
    #[arg(long, default_value_t = 4)]
    samplings: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Bundle path; the training report goes to `<out>.train.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    #[arg(long, value_enum)]
    head: Option<HeadArg>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    models: PathBuf,
    /// JSON report path.
    #[arg(long)]
    report: PathBuf,
    /// Mean interval width per n as CSV; defaults to `<report>.widths.csv`.
    #[arg(long)]
    widths: Option<PathBuf>,
    /// Also time BDCI calls this many times per n (not part of the report).
    #[arg(long, default_value_t = 0)]
    runtime_reps: usize,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::from_core(Error::from(e), Some(path)))
}

fn load_rd(path: &Path, role: &str, required: usize) -> CliResult<RdFile> {
    let f = read_rd_file(path, role).map_err(|e| CliError::from_core(e, Some(path)))?;
    if f.samples.len() < required {
        let e = Error::TooFewPoints { required, got: f.samples.len() };
        return Err(CliError::from_core(e, Some(path)));
    }
    Ok(f)
}

fn load_bundle(path: &Path) -> CliResult<ModelBundle> {
    let bytes = fs::read(path).map_err(|e| CliError::from_core(Error::from(e), Some(path)))?;
    ModelBundle::from_bytes(&bytes).map_err(|e| CliError::from_core(e, Some(path)))
}

fn emit(doc: &ResultDocument, format: Format) {
    match format {
        Format::Json => print!("{}", doc.to_json()),
        Format::Text => println!("{}", doc.summary),
    }
}

fn cmd_bd(args: BdArgs) -> CliResult<()> {
    let method = Method::from(args.method);
    let p = &args.pair;
    let required = min_points(method).max(BD_MIN_POINTS);
    let anchor = load_rd(&p.anchor, "anchor", required)?;
    let target = load_rd(&p.target, "target", required)?;
    let mode = Mode::from(p.mode);
    let bd = if anchor.samples.len() >= p.dense_anchor_threshold {
        compute_bd_dense_anchor(&anchor.samples, &target.samples, mode, method)
    } else {
        compute_bd(&anchor.samples, &target.samples, mode, method)
    }
    .map_err(|e| CliError::from_core(e, None))?;
    emit(&ResultDocument::from_bd(&bd, vec![anchor.digest, target.digest]), p.format);
    Ok(())
}

fn cmd_bdci(args: BdciArgs) -> CliResult<()> {
    let p = &args.pair;
    let anchor = load_rd(&p.anchor, "anchor", BD_MIN_POINTS)?;
    let target = load_rd(&p.target, "target", BD_MIN_POINTS)?;
    let bundle = load_bundle(&args.models)?;
    let r = compute_bdci(&anchor.samples, &target.samples, Mode::from(p.mode), &bundle, p.dense_anchor_threshold)
        .map_err(|e| CliError::from_core(e, None))?;
    emit(&ResultDocument::from_bdci(&r, &bundle.digest(), vec![anchor.digest, target.digest]), p.format);
    Ok(())
}

fn cmd_gen_corpus(args: GenArgs) -> CliResult<()> {
    let cfg = CorpusConfig {
        pairs: args.curves,
        n_min: args.n_min,
        n_max: args.n_max,
        seed: args.seed,
        split: args.split.into(),
        samplings_per_curve: args.samplings,
    };
    let corpus = build_corpus(&cfg).map_err(|e| CliError::from_core(e, None))?;
    corpus.write_dir(&args.out).map_err(|e| CliError::from_core(e, Some(&args.out)))?;
    let m = &corpus.manifest;
    eprintln!("wrote {} records from {} curve pairs to {}", m.records, m.pairs, args.out.display());
    println!("{}", serde_json::to_string_pretty(m).expect("manifest serializes"));
    Ok(())
}

#[derive(Serialize)]
struct TrainingDocument<'a> {
    tool_version: &'static str,
    bundle_sha256: String,
    corpus_hash: String,
    corpus_split: &'static str,
    config: &'a TrainConfig,
    categories: BTreeMap<String, TrainReport>,
}

fn read_corpus(dir: &Path) -> CliResult<Corpus> {
    Corpus::read_dir(dir).map_err(|e| CliError::from_core(e, Some(dir)))
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let corpus = read_corpus(&args.corpus)?;
    if corpus.manifest.split == Split::Test {
        eprintln!("warning: training on a corpus whose manifest says split=test");
    }
    let d = TrainConfig::default();
    let config = TrainConfig {
        seed: args.seed,
        max_epochs: args.epochs.unwrap_or(d.max_epochs),
        learning_rate: args.learning_rate.unwrap_or(d.learning_rate),
        batch_size: args.batch_size.unwrap_or(d.batch_size),
        patience: args.patience.unwrap_or(d.patience),
        validation_fraction: args.validation_fraction.unwrap_or(d.validation_fraction),
        head: args.head.map_or(d.head, SegmentHead::from),
        ..d
    };
    let (bundle, reports) = train_bundle(&corpus.records, &config, &corpus.hash()).map_err(|e| CliError::from_core(e, Some(&args.corpus)))?;
    let bytes = bundle.to_bytes();
    write_file(&args.out, &bytes)?;
    let doc = TrainingDocument {
        tool_version: bdci_core::VERSION,
        bundle_sha256: sha256_hex(&bytes),
        corpus_hash: corpus.hash(),
        corpus_split: corpus.manifest.split.as_str(),
        config: &config,
        categories: reports.into_iter().map(|(c, r)| (c.to_string(), r)).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&doc).expect("training report serializes");
    json.push(b'\n');
    write_file(&with_suffix(&args.out, ".train.json"), &json)?;
    println!("{}", doc.bundle_sha256);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let corpus = read_corpus(&args.corpus)?;
    if corpus.manifest.split == Split::Train {
        eprintln!("warning: benchmarking on a corpus whose manifest says split=train; results are not held-out");
    }
    let bundle = load_bundle(&args.models)?;
    let fail = |e| CliError::from_core(e, None);
    let report = run_bench(&corpus, &bundle, &BenchConfig::default()).map_err(fail)?;
    let json = report.to_json_bytes();
    write_file(&args.report, &json)?;
    let cal = report.calibration.as_ref().expect("calibration present");
    let widths = args.widths.clone().unwrap_or_else(|| with_suffix(&args.report, ".widths.csv"));
    write_file(&widths, cal.width_csv().as_bytes())?;
    println!("{}", report.bias.to_table());
    println!("{}", cal.to_table());
    if args.runtime_reps > 0 {
        let rows = eval_runtime(&corpus.pairs[0], &bundle, &[4, 6, 8], args.runtime_reps).map_err(fail)?;
        for r in rows {
            eprintln!("runtime n={} median {:.3} ms mean {:.3} ms over {} calls", r.n, r.median_ms, r.mean_ms, r.repetitions);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bd(a) => cmd_bd(a),
        Command::Bdci(a) => cmd_bdci(a),
        Command::GenCorpus(a) => cmd_gen_corpus(a),
        Command::Train(a) => cmd_train(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: kind=ThreadPool file=- detail={e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code)
        }
    }
}
