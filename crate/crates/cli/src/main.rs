mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand};
use labeltopic::weighting::WeightingMode;

use crate::commands::SeriesRequest;
use crate::config::{parse_utc_offset, PipelineConfig};
use crate::error::{CliError, Result};

/// Labeled camera images to topic time series.
#[derive(Parser)]
#[command(name = "labeltopic", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fail on the first malformed input line.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WeightingArgs {
    /// binary, per-camera-tf-idf or global-tf-idf.
    #[arg(long)]
    weighting: Option<WeightingMode>,
}

#[derive(Args)]
struct LdaArgs {
    /// Number of topics.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Independent VB initializations; the best final bound wins.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean label records into a corpus, vocabulary and weighted matrix.
    Ingest {
        /// JSON-lines label files.
        inputs: Vec<PathBuf>,
        /// Frequency cutoff; words with f_j below it are dropped.
        #[arg(long)]
        cutoff: Option<f64>,
        /// Blacklist pattern (repeatable); replaces the configured list.
        #[arg(long)]
        blacklist: Vec<String>,
        /// Keep every label, including the default watermark.
        #[arg(long, conflicts_with = "blacklist")]
        no_blacklist: bool,
        #[command(flatten)]
        weighting: WeightingArgs,
    },
    /// Fit a topic model to a corpus.
    Fit {
        /// Corpus artifact; defaults to <out>/corpus.json.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Use the collapsed Gibbs sampler (binary weighting only).
        #[arg(long)]
        gibbs: bool,
        #[command(flatten)]
        lda: LdaArgs,
        #[command(flatten)]
        weighting: WeightingArgs,
    },
    /// Binned per-camera series of topics and labels.
    #[command(group(ArgGroup::new("keys").required(true).multiple(true).args(["topics", "labels"])))]
    Series {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Model file; defaults to <out>/model.json.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Topic number, 1-based (repeatable).
        #[arg(long = "topic")]
        topics: Vec<usize>,
        /// Label word such as "LS1: snow" (repeatable).
        #[arg(long = "label")]
        labels: Vec<String>,
        /// Also write weekly overlays.
        #[arg(long)]
        weekly: bool,
        /// Date whose week is highlighted in overlays (repeatable).
        #[arg(long = "highlight")]
        highlights: Vec<NaiveDate>,
        /// Bin width in minutes.
        #[arg(long)]
        bin_minutes: Option<u32>,
        /// Fixed display offset such as -05:00, used by plots and overlays.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_utc_offset)]
        utc_offset: Option<i32>,
        #[command(flatten)]
        weighting: WeightingArgs,
    },
    /// Draw a corpus from the generative model, with its ground truth.
    Simulate {
        #[arg(long)]
        images: Option<usize>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Labels per image.
        #[arg(long)]
        weight: Option<f64>,
        #[arg(long)]
        cameras: Option<usize>,
    },
    /// Held-out likelihood for several topic counts.
    Likelihood {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated topic counts.
        #[arg(long, value_delimiter = ',')]
        k_values: Vec<usize>,
        #[command(flatten)]
        lda: LdaArgs,
        #[command(flatten)]
        weighting: WeightingArgs,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl WeightingArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        set(&mut cfg.weighting.mode, self.weighting);
    }
}

impl LdaArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        if let Some(k) = self.k {
            cfg.lda.k = k;
        }
        if self.alpha.is_some() {
            cfg.lda.alpha = self.alpha;
        }
        set(&mut cfg.lda.beta, self.beta);
        set(&mut cfg.lda.passes, self.passes);
        set(&mut cfg.lda.batch_size, self.batch_size);
        set(&mut cfg.lda.restarts, self.restarts);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out, cli.out);
    if cli.strict {
        cfg.corpus.strict = true;
    }
    let default_corpus =
        |cfg: &PipelineConfig, p: Option<PathBuf>| p.unwrap_or_else(|| cfg.out.join("corpus.json"));

    match cli.command {
        Command::Ingest {
            inputs,
            cutoff,
            blacklist,
            no_blacklist,
            weighting,
        } => {
            if !inputs.is_empty() {
                cfg.corpus.inputs = inputs;
            }
            set(&mut cfg.corpus.cutoff, cutoff);
            if no_blacklist {
                cfg.corpus.blacklist.clear();
            } else if !blacklist.is_empty() {
                cfg.corpus.blacklist = blacklist;
            }
            weighting.apply(&mut cfg);
            cfg.resolve();
            commands::cmd_ingest(&cfg)
        }
        Command::Fit {
            corpus,
            gibbs,
            lda,
            weighting,
        } => {
            lda.apply(&mut cfg);
            weighting.apply(&mut cfg);
            cfg.resolve();
            let corpus = default_corpus(&cfg, corpus);
            commands::cmd_fit(&cfg, &corpus, gibbs)
        }
        Command::Series {
            corpus,
            model,
            topics,
            labels,
            weekly,
            highlights,
            bin_minutes,
            utc_offset,
            weighting,
        } => {
            set(&mut cfg.timeseries.bin_width_minutes, bin_minutes);
            set(&mut cfg.timeseries.utc_offset_minutes, utc_offset);
            weighting.apply(&mut cfg);
            cfg.resolve();
            let corpus = default_corpus(&cfg, corpus);
            let model = model.unwrap_or_else(|| cfg.out.join("model.json"));
            let request = SeriesRequest {
                topics,
                labels,
                weekly,
                highlights,
            };
            commands::cmd_series(&cfg, &corpus, &model, &request)
        }
        Command::Simulate {
            images,
            vocab_size,
            k,
            alpha,
            beta,
            weight,
            cameras,
        } => {
            let s = &mut cfg.simulate;
            set(&mut s.images, images);
            set(&mut s.vocab_size, vocab_size);
            set(&mut s.k, k);
            set(&mut s.alpha, alpha);
            set(&mut s.beta, beta);
            set(&mut s.weight, weight);
            set(&mut s.cameras, cameras);
            cfg.resolve();
            commands::cmd_simulate(&cfg)
        }
        Command::Likelihood {
            corpus,
            k_values,
            lda,
            weighting,
        } => {
            if !k_values.is_empty() {
                cfg.likelihood.k_values = k_values;
            }
            lda.apply(&mut cfg);
            weighting.apply(&mut cfg);
            cfg.resolve();
            let corpus = default_corpus(&cfg, corpus);
            commands::cmd_likelihood(&cfg, &corpus)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(move || run(cli)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
