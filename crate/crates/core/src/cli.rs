//! Command-line frontend. Diagnostics go to stderr; with `--json` stdout
//! carries only machine-readable output using the service schemas.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::disambig::{SenseModel, Window};
use crate::egograph::{build_ego_graph, EgoParams};
use crate::evalbench::{
    evaluate_similarity, inventory_stats, inventory_stats_for, Benchmark, Scoring,
};
use crate::inventory::{
    build_inventory, BuildOptions, InductionParams, SenseInventory, WordSelection,
};
use crate::service::{self, disambiguate_body, neighbors_body, senses_body, ServiceConfig};
use crate::vectorstore::{EmbeddingMatrix, DEFAULT_VOCAB_LIMIT};
use crate::whispers::DEFAULT_MAX_ITER;

#[derive(Debug, Parser)]
#[command(
    name = "egvi",
    version,
    about = "Word sense induction and disambiguation over word embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Induce a sense inventory from word embeddings
    Induce(InduceArgs),
    /// Show the senses of a word
    Senses(SensesArgs),
    /// Disambiguate every ambiguous word of a text
    Disambiguate(DisambiguateArgs),
    /// Evaluate word relatedness against a benchmark
    Eval(EvalArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
    /// Nearest neighbours of a word
    Neighbors(NeighborsArgs),
    /// Write the ego-graph of a word in DOT format
    Graph(GraphArgs),
    /// Sense-count statistics of an inventory
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct InduceArgs {
    /// Embeddings in word2vec text format
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Neighbours of the ego word
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Neighbours of each graph vertex
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Vocabulary size (most frequent words kept)
    #[arg(long, default_value_t = DEFAULT_VOCAB_LIMIT)]
    pub limit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop clusters with fewer members
    #[arg(long, default_value_t = 1)]
    pub min_size: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// "all", or a file with one word per line
    #[arg(long, default_value = "all")]
    pub words: String,
    #[arg(long, default_value = "und")]
    pub lang: String,
    /// Worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Resumable progress file
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub checkpoint_every: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SensesArgs {
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long)]
    pub text: String,
    /// Context window in tokens on each side (default: whole text)
    #[arg(long)]
    pub window: Option<usize>,
    /// Vocabulary size (default: the inventory's)
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(
        long,
        required_unless_present = "baseline",
        conflicts_with = "baseline"
    )]
    pub inventory: Option<PathBuf>,
    /// Score pairs by plain word-vector cosine
    #[arg(long)]
    pub baseline: bool,
    /// TSV of word1, word2, gold score
    #[arg(long)]
    pub benchmark: PathBuf,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = service::DEFAULT_NEIGHBORS)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_VOCAB_LIMIT)]
    pub limit: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_VOCAB_LIMIT)]
    pub limit: usize,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub inventory: PathBuf,
    /// Only count words appearing in this benchmark
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

fn load_matrix(path: &Path, limit: usize) -> Result<EmbeddingMatrix> {
    let started = Instant::now();
    let matrix = EmbeddingMatrix::load(path, limit)
        .with_context(|| format!("loading {}", path.display()))?;
    log::info!(
        "loaded {} vectors of dim {} in {:.1}s",
        matrix.len(),
        matrix.dim(),
        started.elapsed().as_secs_f64()
    );
    Ok(matrix)
}

fn load_inventory(path: &Path) -> Result<SenseInventory> {
    SenseInventory::load(path).with_context(|| format!("loading {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct InduceSummary {
    words: usize,
    resumed: usize,
    failures: usize,
    mean_senses: f64,
    seconds: f64,
}

fn induce(args: InduceArgs) -> Result<()> {
    let started = Instant::now();
    let matrix = load_matrix(&args.embeddings, args.limit)?;
    let words = if args.words == "all" {
        WordSelection::All
    } else {
        let text =
            fs::read_to_string(&args.words).with_context(|| format!("reading {}", args.words))?;
        WordSelection::Words(
            text.lines()
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(String::from)
                .collect(),
        )
    };
    let params = InductionParams {
        n: args.n,
        k: args.k,
        lambda: args.lambda,
        seed: args.seed,
        min_size: args.min_size,
        max_iter: args.max_iter,
        anti_depth: 1,
    };
    let options = BuildOptions {
        language: args.lang,
        source: service::source_id(&args.embeddings),
        vocab_limit: args.limit,
        jobs: args.jobs,
        checkpoint: args.checkpoint,
        checkpoint_every: args.checkpoint_every,
    };
    let report = build_inventory(&matrix, &words, &params, &options)?;
    for (word, reason) in &report.failures {
        log::warn!("skipped {word:?}: {reason}");
    }
    report
        .inventory
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;

    let inv = &report.inventory;
    let senses: usize = inv.entries.values().map(Vec::len).sum();
    let summary = InduceSummary {
        words: inv.len(),
        resumed: report.resumed,
        failures: report.failures.len(),
        mean_senses: if inv.is_empty() {
            0.0
        } else {
            senses as f64 / inv.len() as f64
        },
        seconds: started.elapsed().as_secs_f64(),
    };
    if args.json {
        print_json(&summary)?;
    } else {
        println!(
            "words processed: {} ({} resumed, {} skipped)\nmean senses: {:.3}\nwall time: {:.2}s",
            summary.words, summary.resumed, summary.failures, summary.mean_senses, summary.seconds
        );
    }
    Ok(())
}

fn senses(args: SensesArgs) -> Result<()> {
    let inventory = load_inventory(&args.inventory)?;
    let Some(senses) = inventory.senses(&args.word) else {
        bail!(
            "no senses for {:?} in {}",
            args.word,
            args.inventory.display()
        );
    };
    if args.json {
        return print_json(&senses_body(senses));
    }
    println!("sense_id\tkeyword\tsize\tmembers");
    for s in senses {
        let members: Vec<String> = s
            .members
            .iter()
            .map(|m| format!("{}:{:.6}", m.word, m.weight))
            .collect();
        println!(
            "{}\t{}\t{}\t{}",
            s.sense_id,
            s.keyword,
            s.len(),
            members.join(",")
        );
    }
    Ok(())
}

fn disambiguate(args: DisambiguateArgs) -> Result<()> {
    let inventory = load_inventory(&args.inventory)?;
    let matrix = load_matrix(
        &args.embeddings,
        args.limit.unwrap_or(inventory.header.vocab_limit),
    )?;
    let window = args.window.map_or(Window::Sentence, Window::Tokens);
    let analyses = SenseModel::new(&matrix, &inventory).disambiguate_text(&args.text, window)?;
    if args.json {
        return print_json(&disambiguate_body(&inventory.header.language, &analyses));
    }
    for a in &analyses {
        if let Some(r) = &a.result {
            println!(
                "{}\t{}\t{}\t{:.4}\t{:.4}{}",
                a.token.surface,
                r.sense_id,
                r.keyword,
                r.score,
                r.margin,
                if r.low_confidence {
                    "\tlow-confidence"
                } else {
                    ""
                }
            );
        }
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let benchmark = Benchmark::load(&args.benchmark)
        .with_context(|| format!("reading {}", args.benchmark.display()))?;
    let inventory = args.inventory.as_deref().map(load_inventory).transpose()?;
    let limit = args
        .limit
        .or(inventory.as_ref().map(|i| i.header.vocab_limit))
        .unwrap_or(DEFAULT_VOCAB_LIMIT);
    let matrix = load_matrix(&args.embeddings, limit)?;
    let scoring = match &inventory {
        Some(inv) => Scoring::Senses(inv),
        None => Scoring::Baseline,
    };
    let report = evaluate_similarity(&matrix, scoring, &benchmark)
        .with_context(|| format!("evaluating {}", args.benchmark.display()))?;
    if args.json {
        print_json(&report)
    } else {
        println!("{report}");
        Ok(())
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let config = ServiceConfig::load(&args.config)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(service::serve(config))?;
    Ok(())
}

fn neighbors(args: NeighborsArgs) -> Result<()> {
    let matrix = load_matrix(&args.embeddings, args.limit)?;
    let body = neighbors_body(&matrix, &args.word, args.k)?;
    if args.json {
        return print_json(&body);
    }
    for n in body {
        println!("{}\t{:.6}", n.word, n.score);
    }
    Ok(())
}

fn graph(args: GraphArgs) -> Result<()> {
    let matrix = load_matrix(&args.embeddings, args.limit)?;
    let ego = matrix.lookup(&args.word)?;
    let graph = build_ego_graph(&matrix, ego, EgoParams::new(args.n, args.k))?;
    log::info!(
        "{} vertices, {} edges, {} anti-edges, {} neighbours pruned",
        graph.vertices.len(),
        graph.edges.len(),
        graph.anti_edges.len(),
        graph.pruned()
    );
    let dot = graph.to_dot(&matrix);
    match args.out {
        Some(path) => {
            fs::write(&path, dot).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let inventory = load_inventory(&args.inventory)?;
    let stats = match &args.benchmark {
        Some(path) => {
            let bench =
                Benchmark::load(path).with_context(|| format!("reading {}", path.display()))?;
            inventory_stats_for(
                &inventory,
                bench
                    .pairs
                    .iter()
                    .flat_map(|p| [p.first.as_str(), p.second.as_str()]),
            )?
        }
        None => inventory_stats(&inventory)?,
    };
    if args.json {
        return print_json(&stats);
    }
    println!(
        "words\t{}\nmean\t{:.3}\nmedian\t{}\nmax\t{}",
        stats.words, stats.mean, stats.median, stats.max
    );
    println!("senses\twords");
    for (senses, words) in &stats.histogram {
        println!("{senses}\t{words}");
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Induce(args) => induce(args),
        Command::Senses(args) => senses(args),
        Command::Disambiguate(args) => disambiguate(args),
        Command::Eval(args) => eval(args),
        Command::Serve(args) => serve(args),
        Command::Neighbors(args) => neighbors(args),
        Command::Graph(args) => graph(args),
        Command::Stats(args) => stats(args),
    }
}
