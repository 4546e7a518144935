use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use star_asqp::augment::{
    build_training_corpus, enumerate_pairwise_candidates, enumerate_quad_orders, pps_sample, TaskKind,
};
use star_asqp::config::RunConfig;
use star_asqp::dataset::{compute_stats, write_canonical, DatasetError, ElementOrder, Split};
use star_asqp::decode::{DecodingSchema, GenerationConfig, PredictionRow};
use star_asqp::error::{Error, Result};
use star_asqp::eval::score_exact_match;
use star_asqp::loss::{balanced_contribution_loss, group_losses, pooled_sum_loss, InstanceLoss};
use star_asqp::order::{
    aggregate_score_rows, ranking_report, read_score_rows, score_rows, select_top_k, write_score_rows, ToyScorer,
};
use star_asqp::pipeline::{self, FinalPrediction, ProviderKind};

/// Aspect sentiment quad prediction toolkit: ingest data, build the
/// multi-task corpus, decode under constraints, vote and score.
#[derive(Parser, Debug)]
#[command(name = "star", version)]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a raw `####` file into canonical JSONL and print statistics.
    Ingest(IngestArgs),
    /// Print statistics of a canonical JSONL file.
    Stats(StatsArgs),
    /// Build the multi-task augmented training corpus.
    Augment(AugmentArgs),
    /// Score all 24 orders with the built-in toy scorer (writes scores JSONL).
    ScoreOrders(ScoreOrdersArgs),
    /// Rank orders from a scores JSONL and keep the top k.
    SelectOrders(SelectOrdersArgs),
    /// Constrained decoding of every (sentence, order) with a mock provider.
    Decode(DecodeArgs),
    /// Check prediction rows against the decoding schema.
    Validate(ValidateArgs),
    /// Aggregate per-order predictions by threshold voting.
    Vote(VoteArgs),
    /// Exact-match precision/recall/F1 of final predictions against gold.
    Eval(EvalArgs),
    /// Compute balanced and pooled losses from dumped per-instance losses.
    LossCheck(LossCheckArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Raw dataset file, one `<text>####<quad list>` per line.
    input: PathBuf,
    /// Canonical JSONL output (stdout stats only when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// In-file element layout, e.g. `acso`.
    #[arg(long)]
    element_order: Option<ElementOrder>,
    /// Dataset name used in sentence ids (default: file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "train")]
    split: Split,
    /// Reject quads whose category is not listed in this file.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Print statistics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// Canonical JSONL training split.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Ranking report from `select-orders`.
    #[arg(long)]
    orders: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample k pairwise candidates instead of all 16.
    #[arg(long)]
    pps: bool,
    #[arg(long)]
    no_pairwise: bool,
    #[arg(long)]
    no_overall: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreOrdersArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    /// Salt for the toy hash scorer.
    #[arg(long, default_value_t = 0)]
    salt: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectOrdersArgs {
    /// Scores JSONL (`{"order", "source_id", "score"}` rows).
    scores: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Ranking report JSON (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProviderArg {
    Gold,
    Random,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// Canonical JSONL of the split to decode.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    orders: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "gold")]
    provider: ProviderArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Require aspect/opinion spans to be contiguous in the sentence.
    #[arg(long)]
    strict_spans: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Predictions JSONL (`{"source_id", "order", "sequence"}` rows).
    predictions: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    strict_spans: bool,
    /// Exit with status 2 if any row is invalid.
    #[arg(long)]
    fail_on_invalid: bool,
}

#[derive(Args, Debug)]
struct VoteArgs {
    predictions: PathBuf,
    /// Number of views per sentence (default: from config, 15).
    #[arg(long)]
    k: Option<usize>,
    /// Vote threshold (default k/2).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Final predictions JSONL (`{"source_id", "quads"}` rows).
    predictions: PathBuf,
    /// Canonical gold JSONL.
    #[arg(long)]
    gold: PathBuf,
    /// Report JSON output.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct LossCheckArgs {
    /// JSONL of `{"task": "quad|pairwise|overall", "loss": <real>}` rows.
    losses: PathBuf,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn finish(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let snap = cfg.write_snapshot(out)?;
    log::info!("wrote {} and {}", out.display(), snap.display());
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("`{key}` is required (flag or config key)")))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest(a) => {
            set(&mut cfg.element_order, a.element_order);
            set(&mut cfg.taxonomy, a.taxonomy.map(Some));
            cfg.validate()?;
            let taxonomy = cfg.taxonomy.as_deref().map(pipeline::load_taxonomy).transpose()?;
            let data = pipeline::load_raw(
                &a.input,
                a.name.as_deref(),
                a.split,
                cfg.element_order,
                taxonomy.as_ref(),
            )?;
            let stats = compute_stats(&data);
            if let Some(out) = &a.out {
                let mut w = pipeline::create(out)?;
                write_canonical(&data, &mut w).map_err(|e| Error::io(out, e))?;
                w.flush().map_err(|e| Error::io(out, e))?;
                finish(&cfg, out)?;
            }
            if a.json {
                print_json(
                    &json!({ "dataset": data.name, "split": data.split, "n_sentences": stats.n_sentences, "n_quads": stats.n_quads }),
                );
            } else {
                println!("{stats}");
            }
        }
        Command::Stats(a) => {
            let data = pipeline::load_canonical(&a.input)?;
            let stats = compute_stats(&data);
            if a.json {
                print_json(&json!({ "n_sentences": stats.n_sentences, "n_quads": stats.n_quads }));
            } else {
                println!("{:<12}{:>8}", "#S", stats.n_sentences);
                println!("{:<12}{:>8}", "#Q", stats.n_quads);
            }
        }
        Command::Augment(a) => {
            set(&mut cfg.train, a.train.map(Some));
            set(&mut cfg.orders, a.orders.map(Some));
            set(&mut cfg.k, a.k);
            set(&mut cfg.seed, a.seed);
            cfg.pps |= a.pps;
            cfg.pairwise &= !a.no_pairwise;
            cfg.overall &= !a.no_overall;
            cfg.validate()?;
            let train = pipeline::load_canonical(required(&cfg.train, "train")?)?;
            let orders = pipeline::load_orders(cfg.orders.as_deref(), cfg.k)?;
            let pairwise = match (cfg.pairwise, cfg.pps) {
                (false, _) => Vec::new(),
                (true, true) => pps_sample(cfg.k, cfg.seed)?,
                (true, false) => enumerate_pairwise_candidates(),
            };
            let corpus = build_training_corpus(&train, &orders, &pairwise, cfg.overall)?;
            pipeline::write_jsonl(&a.out, &corpus)?;
            finish(&cfg, &a.out)?;
            for task in [TaskKind::Quad, TaskKind::Pairwise, TaskKind::Overall] {
                println!("{task:<10}{:>10}", corpus.iter().filter(|i| i.task == task).count());
            }
            println!("{:<10}{:>10}", "total", corpus.len());
        }
        Command::ScoreOrders(a) => {
            set(&mut cfg.train, a.train.map(Some));
            cfg.validate()?;
            let train = pipeline::load_canonical(required(&cfg.train, "train")?)?;
            let scorer = ToyScorer { salt: a.salt };
            let rows: Vec<_> = enumerate_quad_orders()
                .iter()
                .flat_map(|t| score_rows(t, &train, &scorer))
                .collect();
            let mut w = pipeline::create(&a.out)?;
            write_score_rows(&rows, &mut w).map_err(|e| Error::io(&a.out, e))?;
            w.flush().map_err(|e| Error::io(&a.out, e))?;
            finish(&cfg, &a.out)?;
            println!("{} rows (scorer: toy-hash)", rows.len());
        }
        Command::SelectOrders(a) => {
            set(&mut cfg.k, a.k);
            cfg.validate()?;
            let rows = read_score_rows(pipeline::open(&a.scores)?)?;
            let scores = aggregate_score_rows(&rows)?;
            let report = ranking_report(&select_top_k(&scores, cfg.k)?);
            match &a.out {
                Some(out) => {
                    pipeline::write_json(out, &report)?;
                    finish(&cfg, out)?;
                    for r in &report {
                        println!("{:>3}  {}  {:.6}", r.rank, r.order, r.mean_score);
                    }
                }
                None => print_json(&serde_json::to_value(&report).expect("json")),
            }
        }
        Command::Decode(a) => {
            set(&mut cfg.train, a.train.map(Some));
            set(&mut cfg.taxonomy, a.taxonomy.map(Some));
            set(&mut cfg.orders, a.orders.map(Some));
            set(&mut cfg.k, a.k);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.beam, a.beam);
            set(&mut cfg.max_steps, a.max_steps);
            cfg.strict_spans |= a.strict_spans;
            cfg.validate()?;
            let data = pipeline::load_canonical(&a.data)?;
            let taxonomy = pipeline::resolve_taxonomy(cfg.taxonomy.as_deref(), cfg.train.as_deref(), &data)?;
            let orders = pipeline::load_orders(cfg.orders.as_deref(), cfg.k)?;
            let schema = DecodingSchema::new(taxonomy, orders[0])?.strict_spans(cfg.strict_spans);
            let provider = match a.provider {
                ProviderArg::Gold => ProviderKind::Gold,
                ProviderArg::Random => ProviderKind::Random,
            };
            let gen = GenerationConfig {
                beam: cfg.beam,
                max_steps: cfg.max_steps,
            };
            let rows = pipeline::decode_dataset(&data, &orders, &schema, provider, cfg.seed, gen)?;
            pipeline::write_jsonl(&a.out, &rows)?;
            finish(&cfg, &a.out)?;
            println!(
                "{} rows ({} sentences x {} orders)",
                rows.len(),
                data.examples.len(),
                orders.len()
            );
        }
        Command::Validate(a) => {
            set(&mut cfg.train, a.train.map(Some));
            set(&mut cfg.taxonomy, a.taxonomy.map(Some));
            cfg.strict_spans |= a.strict_spans;
            cfg.validate()?;
            let data = pipeline::load_canonical(&a.data)?;
            let taxonomy = pipeline::resolve_taxonomy(cfg.taxonomy.as_deref(), cfg.train.as_deref(), &data)?;
            let rows: Vec<PredictionRow> = pipeline::read_jsonl(&a.predictions)?;
            let schema = DecodingSchema::new(taxonomy, enumerate_quad_orders()[0])?.strict_spans(cfg.strict_spans);
            let verdicts = pipeline::validate_predictions(&rows, &data, &schema)?;
            let invalid: Vec<_> = verdicts.iter().filter(|v| v.violation.is_some()).collect();
            for v in &invalid {
                eprintln!(
                    "{} {}: {}",
                    v.source_id,
                    v.order,
                    v.violation.as_ref().expect("filtered")
                );
            }
            println!("{} of {} rows valid", verdicts.len() - invalid.len(), verdicts.len());
            if a.fail_on_invalid && !invalid.is_empty() {
                return Err(Error::Config(format!("{} invalid prediction row(s)", invalid.len())));
            }
        }
        Command::Vote(a) => {
            set(&mut cfg.k, a.k);
            cfg.tau = a.tau.or(cfg.tau);
            cfg.validate()?;
            let rows: Vec<PredictionRow> = pipeline::read_jsonl(&a.predictions)?;
            let (finals, summary) = pipeline::vote_predictions(&rows, cfg.k, cfg.tau())?;
            pipeline::write_jsonl(&a.out, &finals)?;
            finish(&cfg, &a.out)?;
            println!(
                "{} sentences, {} quads kept (k = {}, tau = {}), {} malformed segment(s)",
                summary.sentences,
                summary.quads,
                cfg.k,
                cfg.tau(),
                summary.malformed_segments
            );
        }
        Command::Eval(a) => {
            let preds: Vec<FinalPrediction> = pipeline::read_jsonl(&a.predictions)?;
            let gold = pipeline::load_canonical(&a.gold)?;
            let report = score_exact_match(&pipeline::predictions_by_id(preds)?, &pipeline::gold_by_id(&gold))?;
            let value = json!({
                "averaging": "micro",
                "semantics": "exact match, per-sentence sets",
                "precision": report.precision,
                "recall": report.recall,
                "f1": report.f1,
                "tp": report.tp,
                "n_pred": report.n_pred,
                "n_gold": report.n_gold,
            });
            if let Some(out) = &a.out {
                pipeline::write_json(out, &value)?;
            }
            if a.json {
                print_json(&value);
            } else {
                println!("{report}");
            }
        }
        Command::LossCheck(a) => {
            let rows: Vec<InstanceLoss> = pipeline::read_jsonl(&a.losses)?;
            let (q, p, o) = group_losses(&rows);
            let counts: BTreeMap<&str, usize> = [("quad", q.len()), ("pairwise", p.len()), ("overall", o.len())].into();
            let bcl = balanced_contribution_loss(&q, &p, &o)?;
            let pooled = pooled_sum_loss(&q, &p, &o)?;
            print_json(&json!({
                "per_instance_loss": "mean token negative log-likelihood",
                "counts": counts,
                "bcl": bcl,
                "pooled": pooled,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Error::Dataset(DatasetError::Parse(errors)) = &e {
                for err in errors {
                    eprintln!("{err}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
