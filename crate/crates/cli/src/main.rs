use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use encoded_concepts::clustering::Engine;
use encoded_concepts::composition::CompositionMode;
use encoded_concepts::corpus::{filter_occurrences, load_corpus, FilterConfig};
use encoded_concepts::pipeline::{self, PipelineConfig};
use encoded_concepts::synth::{generate_synthetic, SynthSpec};
use encoded_concepts::{Error, Result};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "encoded-concepts",
    version,
    about = "Discover and align latent concepts in contextual embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency-filter a corpus into an occurrence list for extraction.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Output TSV (`word_id\tword\tsentence_id\tposition`).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        min_frequency: usize,
        #[arg(long, default_value_t = 10)]
        max_occurrences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a planted synthetic dataset with its ground truth.
    Synth {
        /// TOML synth spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cluster each layer and write the dendrogram and cluster exports.
    Cluster(RunArgs),
    /// Align existing cluster exports with the configured schemes.
    Align(RunArgs),
    /// Explain existing cluster exports as unions of classes.
    Compose(RunArgs),
    /// Print a digest of the reports in an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage.
    Pipeline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML pipeline config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file, when running without a config.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// ECX embeddings file, when running without a config.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of clusters per layer [default: 1000].
    #[arg(long)]
    k: Option<usize>,
    /// Alignment threshold [default: 0.9].
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated layer indices [default: all].
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// `nnchain` or `naive`.
    #[arg(long)]
    engine: Option<Engine>,
    /// Largest composition size searched [default: 6].
    #[arg(long)]
    max_n: Option<usize>,
    /// `cross` or `within:<scheme>`.
    #[arg(long)]
    mode: Option<CompositionMode>,
}

impl RunArgs {
    fn config(self) -> Result<PipelineConfig> {
        let mut cfg = match (&self.config, &self.corpus) {
            (Some(path), _) => PipelineConfig::load(path)?,
            (None, Some(corpus)) => {
                PipelineConfig::new(corpus, self.embeddings.clone().unwrap_or_default())
            }
            (None, None) => return Err(Error::InvalidConfig("pass --config or --corpus".into())),
        };
        if self.config.is_some() {
            if let Some(c) = self.corpus {
                cfg.corpus = c;
            }
            if let Some(e) = self.embeddings {
                cfg.embeddings = e;
            }
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if self.layers.is_some() {
            cfg.layers = self.layers;
        }
        if let Some(v) = self.engine {
            cfg.engine = v;
        }
        if let Some(v) = self.max_n {
            cfg.max_n = v;
        }
        if let Some(v) = self.mode {
            cfg.composition_mode = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            corpus,
            out,
            min_frequency,
            max_occurrences,
            seed,
        } => {
            let stage = |e: Error| e.in_stage("ingest");
            let cfg = FilterConfig {
                min_frequency,
                max_occurrences,
                seed,
            };
            let corpus = load_corpus(&corpus).map_err(stage)?;
            let set = filter_occurrences(&corpus, &cfg).map_err(stage)?;
            set.write_tsv(&corpus, &out).map_err(stage)?;
            println!(
                "{} occurrences of {} word types -> {}",
                set.len(),
                corpus.vocab_size(),
                out.display()
            );
        }
        Command::Synth { spec, out, seed } => {
            let stage = |e: Error| e.in_stage("synth");
            let mut spec = SynthSpec::load(&spec).map_err(stage)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let bundle = generate_synthetic(&spec, &out).map_err(stage)?;
            println!(
                "wrote {} (run: pipeline --config {})",
                out.display(),
                bundle.pipeline_config.display()
            );
        }
        Command::Cluster(args) => {
            let cfg = args.config().map_err(|e| e.in_stage("config"))?;
            let layers = pipeline::run_cluster(&cfg)?;
            println!(
                "clustered {} layer(s) into {}",
                layers.len(),
                cfg.out.display()
            );
        }
        Command::Align(args) => {
            let cfg = args.config().map_err(|e| e.in_stage("config"))?;
            let outcome = pipeline::run_align(&cfg)?;
            println!("overall aligned fraction {:.4}", outcome.overall);
        }
        Command::Compose(args) => {
            let cfg = args.config().map_err(|e| e.in_stage("config"))?;
            let report = pipeline::run_compose(&cfg)?;
            let h = &report.histogram;
            println!(
                "explained {} of {} clusters",
                h.total - h.unexplained,
                h.total
            );
        }
        Command::Report { out } => {
            print!(
                "{}",
                pipeline::render_report(&out).map_err(|e| e.in_stage("report"))?
            );
        }
        Command::Pipeline(args) => {
            let cfg = args.config().map_err(|e| e.in_stage("config"))?;
            let outcome = pipeline::run_pipeline(&cfg)?;
            println!(
                "overall aligned fraction {:.4}; reports in {}",
                outcome.summary.overall,
                cfg.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !e.to_string().contains(&s.to_string()) {
                    eprintln!("  caused by: {s}");
                }
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_invariant_violation() {
        return EXIT_INVARIANT;
    }
    match e {
        Error::Stage {
            stage: "config",
            source,
        } if matches!(**source, Error::InvalidConfig(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}
