//! `fedrank`: one subcommand per pipeline stage, so every intermediate
//! artifact is an inspectable file. Exit codes: 0 success, 1 usage error,
//! 2 data or config error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fedrank_core::config::{load_config, ExperimentConfig};
use fedrank_core::corpus::{generate_corpus, load_corpus, save_corpus, Corpus, Vertical};
use fedrank_core::error::Result;
use fedrank_core::evaluation::{format_table, run_ablation, Suite};
use fedrank_core::expertise::{load_expertise_model, save_expertise_model, ExpertiseModel};
use fedrank_core::federation::{load_federator, save_federator, FEDERATOR_FILE};
use fedrank_core::intent::{load_intent_model, save_intent_model, save_intent_records, IntentModel};
use fedrank_core::labels::{load_labels, save_labels, LabeledExample};
use fedrank_core::model_io::save_json;
use fedrank_core::pipeline::{
    ad_hoc_query, collect_vertical_labels, expertise_model_path, intent_model_path,
    intent_records, load_ranker_map, run_search, train_expertise_stage, train_federator_stage,
    train_intent_stage, LabelPlan, SearchContext, INTENTS_FILE, INTENT_MODEL_FILE, LABELS_FILE,
    REPORT_FILE,
};
use fedrank_core::vertical_search::{save_ranker, train_ranker, FeatureMask};

/// Like `println!`, but a closed stdout (e.g. piping into `head`) is not
/// an error worth dying for.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "fedrank",
    version,
    about = "Personalized federated search over a synthetic professional network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; built-in defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's seed (default 42).
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Full,
    Bias,
    Homophily,
    Intent,
}

impl From<SuiteArg> for Suite {
    fn from(arg: SuiteArg) -> Suite {
        match arg {
            SuiteArg::Full => Suite::Full,
            SuiteArg::Bias => Suite::Bias,
            SuiteArg::Homophily => Suite::Homophily,
            SuiteArg::Intent => Suite::Intent,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.data_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train the supervised expertise scorer and factorize the matrix
    TrainExpertise {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.models_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train the intent heads and write per-member intent estimates
    TrainIntent {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.models_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Simulate randomized-slice click logs into labels.jsonl
    CollectLabels {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.data_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train one ranker per vertical from labels.jsonl
    TrainRanker {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.models_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train the federated vertical scorer
    TrainFederator {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: paths.models_dir)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run one federated search and print the blended page
    Search {
        #[command(flatten)]
        common: Common,
        /// Query text
        #[arg(long, value_name = "STR")]
        query: String,
        /// Searching member id
        #[arg(long, value_name = "INT")]
        member: u64,
        /// Also write the page JSON here
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run an ablation suite and write report.json
    Eval {
        #[command(flatten)]
        common: Common,
        /// Which comparison to run
        #[arg(long, value_enum, default_value = "full")]
        suite: SuiteArg,
        /// Report file (default: report.json)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn resolve_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_trained_base(cfg: &ExperimentConfig) -> Result<(Corpus, ExpertiseModel, IntentModel)> {
    let corpus = load_corpus(&cfg.paths.data_dir)?;
    let expertise = load_expertise_model(&expertise_model_path(&cfg.paths.models_dir))?;
    let intent = load_intent_model(&intent_model_path(&cfg.paths.models_dir))?;
    Ok((corpus, expertise, intent))
}

fn cmd_gen(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = generate_corpus(&cfg.corpus, cfg.seed)?;
    let dir = out.unwrap_or_else(|| cfg.paths.data_dir.clone());
    save_corpus(&corpus, &dir)?;
    say!(
        "wrote corpus to {}: {} members, {} docs, {} queries",
        dir.display(),
        corpus.n_members(),
        corpus.docs.len(),
        corpus.queries.len()
    );
    Ok(())
}

fn cmd_train_expertise(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = load_corpus(&cfg.paths.data_dir)?;
    let model = train_expertise_stage(&corpus, &cfg.expertise, cfg.seed)?;
    let dir = out.unwrap_or_else(|| cfg.paths.models_dir.clone());
    let path = expertise_model_path(&dir);
    save_expertise_model(&model, &path)?;
    say!(
        "wrote {} (K={}, {} members x {} skills)",
        path.display(),
        model.k,
        model.member_factors.len(),
        model.skill_factors.len()
    );
    Ok(())
}

fn cmd_train_intent(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = load_corpus(&cfg.paths.data_dir)?;
    let (model, report) = train_intent_stage(&corpus, &cfg.intent)?;
    let dir = out.unwrap_or_else(|| cfg.paths.models_dir.clone());
    let model_path = dir.join(INTENT_MODEL_FILE);
    save_intent_model(&model, &model_path)?;
    let records = intent_records(&corpus, &model)?;
    let records_path = dir.join(INTENTS_FILE);
    save_intent_records(&records, &records_path)?;
    for head in &report.heads {
        if head.fallback {
            say!("head {} fell back to its base rate (single-class data)", head.intent.name());
        }
    }
    say!("wrote {} and {} ({} members)", model_path.display(), records_path.display(), records.len());
    Ok(())
}

fn cmd_collect_labels(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let (corpus, expertise, intent) = load_trained_base(cfg)?;
    let ctx = SearchContext::build(&corpus, &expertise, &intent, cfg.intent.threshold, &cfg.ranker)?;
    let mut all: Vec<LabeledExample> = Vec::new();
    for &vertical in &Vertical::ALL {
        let labels = collect_vertical_labels(
            &ctx,
            corpus.train_queries(),
            vertical,
            &cfg.click,
            cfg.seed,
            LabelPlan::Randomized,
        )?;
        say!("{vertical}: {} labeled examples", labels.len());
        all.extend(labels);
    }
    let path = out.unwrap_or_else(|| cfg.paths.data_dir.clone()).join(LABELS_FILE);
    save_labels(&all, &path)?;
    say!("wrote {} ({} rows)", path.display(), all.len());
    Ok(())
}

fn cmd_train_ranker(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = load_corpus(&cfg.paths.data_dir)?;
    let labels = load_labels(&cfg.paths.data_dir.join(LABELS_FILE))?;
    let mut by_vertical: BTreeMap<Vertical, Vec<LabeledExample>> = BTreeMap::new();
    for example in labels {
        let vertical = corpus.doc(example.doc_id)?.vertical;
        by_vertical.entry(vertical).or_default().push(example);
    }
    let dir = out.unwrap_or_else(|| cfg.paths.models_dir.clone());
    let hyper = cfg.ranker.hyper(cfg.seed);
    for &vertical in &Vertical::ALL {
        let subset = by_vertical.remove(&vertical).unwrap_or_default();
        let (model, report) = train_ranker(&subset, vertical, &hyper, &FeatureMask::full())?;
        let path = fedrank_core::pipeline::ranker_path(&dir, vertical);
        save_ranker(&model, &hyper, &path)?;
        say!(
            "wrote {} ({} pairs, final loss {:.4})",
            path.display(),
            report.pair_count,
            report.final_loss
        );
    }
    Ok(())
}

fn cmd_train_federator(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let (corpus, expertise, intent) = load_trained_base(cfg)?;
    let rankers = load_ranker_map(&cfg.paths.models_dir)?;
    let ctx = SearchContext::build(&corpus, &expertise, &intent, cfg.intent.threshold, &cfg.ranker)?;
    let model = train_federator_stage(&ctx, &rankers, &cfg.federation, cfg.seed)?;
    let path = out.unwrap_or_else(|| cfg.paths.models_dir.clone()).join(FEDERATOR_FILE);
    save_federator(&model, &path)?;
    say!("wrote {}", path.display());
    Ok(())
}

fn cmd_search(cfg: &ExperimentConfig, query: &str, member: u64, out: Option<PathBuf>) -> Result<()> {
    let (corpus, expertise, intent) = load_trained_base(cfg)?;
    let rankers = load_ranker_map(&cfg.paths.models_dir)?;
    let federator = load_federator(&fedrank_core::pipeline::federator_path(&cfg.paths.models_dir))?;
    let ctx = SearchContext::build(&corpus, &expertise, &intent, cfg.intent.threshold, &cfg.ranker)?;
    let page = run_search(&ctx, &rankers, &federator, &ad_hoc_query(query, member))?;
    say!("{}", serde_json::to_string_pretty(&page).expect("page serializes"));
    if let Some(path) = out {
        save_json(&page, &path)?;
    }
    Ok(())
}

fn cmd_eval(cfg: &ExperimentConfig, suite: Suite, out: Option<PathBuf>) -> Result<()> {
    let corpus = load_corpus(&cfg.paths.data_dir)?;
    let report = run_ablation(&corpus, cfg, suite)?;
    {
        use std::io::Write;
        let _ = write!(std::io::stdout(), "{}", format_table(&report));
    }
    let path = out.unwrap_or_else(|| PathBuf::from(REPORT_FILE));
    save_json(&report, &path)?;
    say!("\nwrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, out } => cmd_gen(&resolve_config(&common)?, out),
        Command::TrainExpertise { common, out } => cmd_train_expertise(&resolve_config(&common)?, out),
        Command::TrainIntent { common, out } => cmd_train_intent(&resolve_config(&common)?, out),
        Command::CollectLabels { common, out } => cmd_collect_labels(&resolve_config(&common)?, out),
        Command::TrainRanker { common, out } => cmd_train_ranker(&resolve_config(&common)?, out),
        Command::TrainFederator { common, out } => cmd_train_federator(&resolve_config(&common)?, out),
        Command::Search { common, query, member, out } => {
            cmd_search(&resolve_config(&common)?, &query, member, out)
        }
        Command::Eval { common, suite, out } => {
            cmd_eval(&resolve_config(&common)?, suite.into(), out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
