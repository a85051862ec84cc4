use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, TimeDelta};
use labeltopic::corpus::{
    binarize, ingest, parse_timestamp, to_bags, Blacklist, CorpusArtifact, CorpusSource,
    ImageRecord, LabelWord, RawLabel, Service, Vocabulary,
};
use labeltopic::lda::{
    fit_gibbs, fit_vb, log_likelihood_report, simulate_corpus, top_labels, write_likelihood_csv,
    DenseMatrix, LdaConfig, TopicModel,
};
use labeltopic::timeseries::{
    label_series, overlay_svg, series_svg, topic_series, weekly_overlay, write_overlay_csv,
    write_series_csv, TopicSeries,
};
use labeltopic::weighting::{build_matrix, ImageLabelMatrix, RowMeta};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", cfg.out.display())))
}

/// Records, vocabulary and weighted matrix of a stored corpus.
struct Prepared {
    vocab: Vocabulary,
    matrix: ImageLabelMatrix,
}

fn prepare(artifact: &CorpusArtifact, cfg: &PipelineConfig) -> Result<Prepared> {
    let records = artifact.records()?;
    let vocab = artifact.vocabulary()?;
    if vocab.hash() != artifact.vocabulary_hash {
        return Err(CliError::Data(
            "corpus artifact vocabulary hash does not match its records".into(),
        ));
    }
    let bags = to_bags(&records, &vocab);
    let meta = records.iter().map(RowMeta::from).collect();
    let matrix = build_matrix(&bags, meta, &vocab, cfg.weighting.mode)?;
    Ok(Prepared { vocab, matrix })
}

fn write_matrix_files(cfg: &PipelineConfig, matrix: &ImageLabelMatrix) -> Result<()> {
    let mut coo = create(&cfg.out.join("matrix.coo"))?;
    matrix.write_coordinate(&mut coo)?;
    coo.flush()?;
    matrix.write_row_meta(create(&cfg.out.join("matrix_rows.csv"))?)?;
    Ok(())
}

fn write_vocabulary(cfg: &PipelineConfig, vocab: &Vocabulary) -> Result<()> {
    vocab.write_csv(create(&cfg.out.join("vocabulary.csv"))?)?;
    Ok(())
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<()> {
    if cfg.corpus.inputs.is_empty() {
        return Err(CliError::Usage("no input files given".into()));
    }
    prepare_out(cfg)?;
    let mut records: Vec<ImageRecord> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut rejected = 0usize;
    for path in &cfg.corpus.inputs {
        let ingested = ingest(path, cfg.corpus.strict).map_err(|e| match e {
            labeltopic::corpus::CorpusError::MalformedRecord { .. }
            | labeltopic::corpus::CorpusError::DuplicateImageId(_) => {
                CliError::Data(format!("{}: {e}", path.display()))
            }
            other => other.into(),
        })?;
        for r in &ingested.rejected {
            eprintln!("{}: skipped line {}: {}", path.display(), r.line, r.reason);
        }
        rejected += ingested.rejected.len();
        for record in ingested.records {
            if !seen.insert(record.image_id.clone()) {
                let msg = format!(
                    "{}: image id `{}` already seen in an earlier file",
                    path.display(),
                    record.image_id
                );
                if cfg.corpus.strict {
                    return Err(CliError::Data(msg));
                }
                eprintln!("{msg}; skipped");
                rejected += 1;
                continue;
            }
            records.push(record);
        }
    }
    let records = binarize(records);
    let artifact = CorpusArtifact::new(
        CorpusSource::Ingest,
        &records,
        &Blacklist::new(&cfg.corpus.blacklist),
        cfg.corpus.cutoff,
    )?;
    let prepared = prepare(&artifact, cfg)?;
    artifact.save(&cfg.out.join("corpus.json"))?;
    write_vocabulary(cfg, &prepared.vocab)?;
    write_matrix_files(cfg, &prepared.matrix)?;
    let inputs: Vec<&Path> = cfg.corpus.inputs.iter().map(PathBuf::as_path).collect();
    cfg.echo("ingest", &inputs)?;
    println!(
        "{} images, {} label words, {} nonzero entries, {} lines skipped",
        artifact.len(),
        prepared.vocab.len(),
        prepared.matrix.nnz(),
        rejected
    );
    Ok(())
}

fn load_artifact(path: &Path) -> Result<CorpusArtifact> {
    Ok(CorpusArtifact::load(path)?)
}

pub fn cmd_fit(cfg: &PipelineConfig, corpus: &Path, gibbs: bool) -> Result<()> {
    prepare_out(cfg)?;
    let artifact = load_artifact(corpus)?;
    let prepared = prepare(&artifact, cfg)?;
    let lda = cfg.lda_config();
    let model = if gibbs {
        fit_gibbs(&prepared.matrix, &lda)?
    } else {
        fit_vb(&prepared.matrix, &lda)?
    };
    model.save(&cfg.out.join("model.json"))?;
    top_labels(&model, cfg.lda.top_labels)
        .write_csv(&prepared.vocab, create(&cfg.out.join("topics.csv"))?)?;
    let mut elbo = csv_writer(&cfg.out.join("elbo.csv"))?;
    elbo.write_record(["update", "elbo"]).map_err(csv_error)?;
    for (t, v) in model.elbo_trace.iter().enumerate() {
        elbo.write_record([(t + 1).to_string(), v.to_string()])
            .map_err(csv_error)?;
    }
    elbo.flush()?;
    cfg.echo("fit", &[corpus])?;
    match model.elbo_trace.last() {
        Some(v) => println!(
            "fitted K = {} on {} images, final bound {v}",
            model.k(),
            prepared.matrix.n_rows()
        ),
        None => println!(
            "fitted K = {} on {} images",
            model.k(),
            prepared.matrix.n_rows()
        ),
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

/// Keys requested for `series`, as given on the command line.
pub struct SeriesRequest {
    pub topics: Vec<usize>,
    pub labels: Vec<String>,
    pub weekly: bool,
    pub highlights: Vec<NaiveDate>,
}

fn file_stem(camera: &str, key: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    };
    format!("{}.{}", clean(camera), clean(&key.replace(':', "-")))
}

pub fn cmd_series(
    cfg: &PipelineConfig,
    corpus: &Path,
    model_path: &Path,
    request: &SeriesRequest,
) -> Result<()> {
    if request.topics.is_empty() && request.labels.is_empty() {
        return Err(CliError::Usage(
            "give at least one --topic or --label".into(),
        ));
    }
    prepare_out(cfg)?;
    let artifact = load_artifact(corpus)?;
    let prepared = prepare(&artifact, cfg)?;
    let model = TopicModel::load(model_path)?;
    if model.vocabulary_hash != prepared.vocab.hash() {
        return Err(CliError::Data(format!(
            "vocabulary mismatch: model {} was fitted on a different vocabulary than corpus {}",
            model_path.display(),
            corpus.display()
        )));
    }
    if model.theta.rows() != prepared.matrix.n_rows() {
        return Err(CliError::Data(format!(
            "model has {} images, corpus has {}",
            model.theta.rows(),
            prepared.matrix.n_rows()
        )));
    }

    let width = cfg.bin_width()?;
    let mut all: Vec<Vec<TopicSeries>> = Vec::new();
    for &topic in &request.topics {
        if topic == 0 || topic > model.k() {
            return Err(CliError::Usage(format!(
                "--topic {topic} outside 1..={}",
                model.k()
            )));
        }
        all.push(topic_series(
            &model.theta,
            prepared.matrix.row_meta(),
            topic - 1,
            width,
        )?);
    }
    for label in &request.labels {
        let word: LabelWord = label
            .parse()
            .map_err(|e| CliError::Usage(format!("--label {label:?}: {e}")))?;
        let j = prepared
            .vocab
            .index_of(&word)
            .ok_or_else(|| CliError::Usage(format!("label `{word}` is not in the vocabulary")))?;
        all.push(label_series(&prepared.matrix, j, width)?);
    }

    let dir = cfg.out.join("series");
    fs::create_dir_all(&dir)?;
    let offset = cfg.utc_offset();
    let mut files = 0;
    for series in all.iter().flatten() {
        let stem = file_stem(&series.camera, &series.key.to_string());
        write_series_csv(
            std::slice::from_ref(series),
            create(&dir.join(format!("{stem}.csv")))?,
        )?;
        let local = series.shifted(offset);
        fs::write(
            dir.join(format!("{stem}.svg")),
            series_svg(std::slice::from_ref(&local)),
        )?;
        files += 2;
        if request.weekly {
            let overlay = weekly_overlay(&local, &request.highlights)?;
            write_overlay_csv(
                std::slice::from_ref(&overlay),
                create(&dir.join(format!("{stem}.weekly.csv")))?,
            )?;
            fs::write(
                dir.join(format!("{stem}.weekly.svg")),
                overlay_svg(&[overlay]),
            )?;
            files += 2;
        }
    }
    cfg.echo("series", &[corpus, model_path])?;
    println!("wrote {files} files to {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct Table<'a> {
    rows: usize,
    cols: usize,
    data: &'a [f64],
}

impl<'a> From<&'a DenseMatrix> for Table<'a> {
    fn from(m: &'a DenseMatrix) -> Self {
        Table {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data(),
        }
    }
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    /// Column names of `phi`, in order.
    words: Vec<String>,
    phi: Table<'a>,
    theta: Table<'a>,
}

/// Synthetic label word for column `j` of a simulation.
pub fn synthetic_word(j: usize, width: usize) -> LabelWord {
    LabelWord::new(Service::Ls1, &format!("w{:0width$}", j + 1)).expect("non-empty")
}

pub fn cmd_simulate(cfg: &PipelineConfig) -> Result<()> {
    let s = &cfg.simulate;
    if s.images == 0 || s.cameras == 0 {
        return Err(CliError::Usage(
            "simulate needs at least one image and one camera".into(),
        ));
    }
    let start = parse_timestamp(&s.start)
        .ok_or_else(|| CliError::Usage(format!("bad start time `{}`", s.start)))?;
    prepare_out(cfg)?;
    let lda = LdaConfig::new(s.k)
        .with_priors(s.alpha, s.beta)
        .with_seed(cfg.seed);
    let sim = simulate_corpus(&lda, &vec![s.weight; s.images], s.vocab_size)?;

    let width = s.vocab_size.to_string().len().max(4);
    let words: Vec<LabelWord> = (0..s.vocab_size)
        .map(|j| synthetic_word(j, width))
        .collect();
    let digits = s.images.to_string().len();
    let interval = TimeDelta::seconds(i64::from(s.interval_seconds));
    let records: Vec<ImageRecord> = sim
        .bags
        .iter()
        .enumerate()
        .map(|(i, bag)| ImageRecord {
            image_id: format!("sim-{:0digits$}", i + 1),
            camera: format!("cam-{}", i % s.cameras + 1),
            timestamp: start + interval * (i / s.cameras) as i32,
            raw_labels: bag
                .entries()
                .iter()
                .map(|&(j, count)| RawLabel {
                    word: words[j].clone(),
                    score: count,
                })
                .collect(),
        })
        .collect();
    let artifact = CorpusArtifact::new(CorpusSource::Simulate, &records, &Blacklist::empty(), 0.0)?;
    artifact.save(&cfg.out.join("corpus.json"))?;
    write_vocabulary(cfg, &artifact.vocabulary()?)?;

    let truth = GroundTruth {
        k: s.k,
        alpha: s.alpha,
        beta: s.beta,
        seed: cfg.seed,
        words: words.iter().map(LabelWord::rendered).collect(),
        phi: (&sim.phi).into(),
        theta: (&sim.theta).into(),
    };
    let mut out = create(&cfg.out.join("ground_truth.json"))?;
    serde_json::to_writer(&mut out, &truth).map_err(|e| CliError::Internal(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    cfg.echo("simulate", &[])?;
    println!(
        "simulated {} images over {} cameras",
        records.len(),
        s.cameras
    );
    Ok(())
}

pub fn cmd_likelihood(cfg: &PipelineConfig, corpus: &Path) -> Result<()> {
    prepare_out(cfg)?;
    let artifact = load_artifact(corpus)?;
    let prepared = prepare(&artifact, cfg)?;
    let rows = log_likelihood_report(
        &prepared.matrix,
        &cfg.lda_config(),
        &cfg.likelihood.k_values,
    )?;
    write_likelihood_csv(&rows, create(&cfg.out.join("likelihood.csv"))?)?;
    cfg.echo("likelihood", &[corpus])?;
    for r in &rows {
        println!(
            "K = {:>3}  held-out bound per label {:.6}",
            r.k, r.per_token_bound
        );
    }
    Ok(())
}
