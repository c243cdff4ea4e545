//! Command-line pipelines: files in, JSON/CSV reports out.
//!
//! Every run is deterministic for a fixed configuration. Reports embed the
//! configuration they were produced with (minus the thread count, which
//! never changes results).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dissim::{
    for_each_softmax_block, pairwise_matrix, prob_distance_stats, topk_precomputed, topk_stream,
    Measure, TopkOptions, DEFAULT_BLOCK_SIZE,
};
use crate::error::{HubError, Result};
use crate::freqcorr::{all_token_frequency_correlation, hub_frequency_correlation};
use crate::hubstats::{
    detect_hubs, distance_histogram, hub_summary, mean_l2_to_uniform, ConcentrationDiag,
    HistogramOptions, HubSet, KOccurrence, DEFAULT_BINS, DEFAULT_HUB_THRESHOLD, DEFAULT_K,
    DEFAULT_SAMPLE_PAIRS,
};
use crate::matrixio::report::MitigationSummary;
use crate::matrixio::{
    read_frequency_table, read_gold_labels, read_matrix, read_vocabulary, to_json_string,
    write_matrix, AnalysisReport, DenseMatrix, Diagnostics, HubEntry, Vocabulary,
};
use crate::mitigate::{secondary, SecondaryKind};
use crate::predeval::{accuracy_partition, top1_predict};
use crate::synth::{rv_scan, sweep_matrix, SweepMode, SweepOptions};

#[derive(Debug, Parser)]
#[command(name = "hubkit", version, about = "Hubness analysis for representation spaces")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Prediction hubs: contexts against vocabulary under probability distance.
    Predictions(PredictionsArgs),
    /// One matrix against itself under a geometric or softmax measure.
    Pairwise(PairwiseArgs),
    /// Sampled distance distribution and relative variance.
    Concentration(ConcentrationArgs),
    /// Mean L2 distance of probability rows to the uniform distribution.
    Uniformdist(UniformArgs),
    /// Synthetic dimension sweep: relative variance and k-skew per dimension.
    Synth(SynthArgs),
    /// Pairwise analysis after a hubness-reducing secondary distance.
    Mitigate(PairwiseArgs),
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    s.parse().map_err(|e: HubError| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<SecondaryKind, String> {
    s.parse().map_err(|e: HubError| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct PredictionsArgs {
    /// Context representations, n × d.
    #[arg(long, requires = "unembed", conflicts_with = "probs")]
    pub contexts: Option<PathBuf>,
    /// Unembedding matrix, v × d.
    #[arg(long, requires = "contexts")]
    pub unembed: Option<PathBuf>,
    /// Precomputed next-token probabilities, n × v.
    #[arg(long, required_unless_present = "contexts")]
    pub probs: Option<PathBuf>,
    /// Gold next-token ids, one per context.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Corpus token counts (`<id>\t<count>`).
    #[arg(long)]
    pub freq: Option<PathBuf>,
    /// Label for the frequency source (default: file name).
    #[arg(long)]
    pub freq_label: Option<String>,
    /// Correlate over every token instead of hubs only.
    #[arg(long)]
    pub all_tokens: bool,
    /// Token strings (JSON array).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_HUB_THRESHOLD)]
    pub hub_threshold: u64,
    /// Scatter CSV: token-id, token-string, N_k, count.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    /// k-occurrence distribution CSV.
    #[arg(long)]
    pub occurrence_csv: Option<PathBuf>,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PairwiseArgs {
    /// Matrix compared with itself, n × d.
    #[arg(long)]
    pub input: PathBuf,
    /// euclidean | normalized-euclidean | softmax-dot
    #[arg(long, value_parser = parse_measure, default_value = "euclidean")]
    pub measure: Measure,
    /// Override the measure's self-exclusion default.
    #[arg(long)]
    pub exclude_self: Option<bool>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_HUB_THRESHOLD)]
    pub hub_threshold: u64,
    /// Token strings for the rows (JSON array).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Secondary distance applied before hub detection: mp | gcr.
    #[arg(long, value_parser = parse_kind)]
    pub mitigate: Option<SecondaryKind>,
    /// k-occurrence distribution CSV.
    #[arg(long)]
    pub occurrence_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConcentrationArgs {
    /// Query rows (or probability rows for the probability measure).
    #[arg(long)]
    pub queries: PathBuf,
    /// Candidate rows (default: the queries themselves).
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long, value_parser = parse_measure, default_value = "euclidean")]
    pub measure: Measure,
    #[arg(long)]
    pub exclude_self: Option<bool>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_PAIRS)]
    pub sample_pairs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram CSV: bin-left, bin-right, count.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct UniformArgs {
    /// Probability rows.
    #[arg(long, conflicts_with = "queries", required_unless_present = "queries")]
    pub probs: Option<PathBuf>,
    /// Rows softmaxed against the candidates.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Candidate rows (default: the queries themselves).
    #[arg(long, requires = "queries")]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Points per data set.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Comma-separated ascending dimensions (vocabulary sizes for probability).
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// euclidean (Gaussian points) | probability (peaked softmax rows)
    #[arg(long, value_parser = parse_measure, default_value = "euclidean")]
    pub measure: Measure,
    /// Logit scale of peaked softmax rows.
    #[arg(long, default_value_t = 1.0)]
    pub sharpness: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_PAIRS)]
    pub sample_pairs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write each generated data set as `<dir>/synth_<dim>.hubm`.
    #[arg(long)]
    pub emit_dir: Option<PathBuf>,
    /// CSV path: dim, rv, kskew (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct ConcentrationReport {
    pub measure: String,
    pub exclude_self: bool,
    pub diagnostics: ConcentrationDiag,
    pub config: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct UniformReport {
    pub source: String,
    pub rows: usize,
    pub v: usize,
    pub mean_l2_to_uniform: f64,
    pub config: serde_json::Value,
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(HubError::Param("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HubError::Param(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| run(&cli.command))),
        None => run(&cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {}", e.kind(), msg);
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    let config = serde_json::to_value(command)
        .map_err(|e| HubError::Data(format!("config serialization: {e}")))?;
    match command {
        Command::Predictions(a) => predictions(a, config),
        Command::Pairwise(a) => pairwise(a, config),
        Command::Mitigate(a) => {
            if a.mitigate.is_none() {
                return Err(HubError::Param("mitigate requires --mitigate mp|gcr".into()));
            }
            pairwise(a, config)
        }
        Command::Concentration(a) => concentration(a, config),
        Command::Uniformdist(a) => uniformdist(a, config),
        Command::Synth(a) => synth(a),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| HubError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HubError::io("<stdout>", e)),
    }
}

fn load_vocab(path: Option<&Path>, size: usize) -> Result<Option<Vocabulary>> {
    let Some(path) = path else { return Ok(None) };
    let vocab = read_vocabulary(path)?;
    if vocab.len() != size {
        return Err(HubError::Shape(format!(
            "vocabulary has {} tokens, matrix has {size}",
            vocab.len()
        )));
    }
    Ok(Some(vocab))
}

fn hub_entries(hubs: &HubSet, vocab: Option<&Vocabulary>) -> Vec<HubEntry> {
    hubs.members
        .iter()
        .map(|h| HubEntry {
            id: h.id,
            n_k: h.n_k,
            token: vocab.and_then(|v| v.get(h.id)).map(str::to_owned),
        })
        .collect()
}

/// k-occurrence distribution as unit-width bins `[N_k, N_k + 1)`.
pub fn occurrence_csv(occ: &KOccurrence) -> String {
    let mut out = String::from("bin-left,bin-right,count\n");
    for (value, count) in occ.distribution() {
        out.push_str(&format!("{},{},{}\n", value, value + 1, count));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.starts_with(' ') || s.ends_with(' ') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn base_report(
    measure: Measure,
    k: usize,
    threshold: u64,
    occ: &KOccurrence,
    vocab: Option<&Vocabulary>,
    config: serde_json::Value,
) -> Result<(AnalysisReport, HubSet)> {
    let hubs = detect_hubs(occ, threshold);
    let report = AnalysisReport {
        measure: measure.name().to_owned(),
        k,
        hub_threshold: threshold,
        k_skew: occ.k_skew()?,
        hubs: hub_entries(&hubs, vocab),
        summary: hub_summary(&hubs),
        diagnostics: None,
        correlation: None,
        accuracy: None,
        mitigation: None,
        config,
    };
    Ok((report, hubs))
}

fn predictions(a: &PredictionsArgs, config: serde_json::Value) -> Result<()> {
    let (result, top1, v, diagnostics, measure) = if let Some(probs) = &a.probs {
        let probs = read_matrix(probs)?;
        let v = probs.cols();
        let opts = TopkOptions::new(Measure::Probability, a.k, false);
        let result = topk_stream(&probs, None, &opts)?;
        let stats = prob_distance_stats(&probs)?;
        let diagnostics = Diagnostics {
            relative_variance: Some(stats.relative_variance),
            mean_distance: Some(stats.mean),
            histogram: None,
            mean_l2_to_uniform: Some(mean_l2_to_uniform(&probs)?),
        };
        (result, top1_predict(&probs)?, v, diagnostics, Measure::Probability)
    } else {
        let contexts = read_matrix(a.contexts.as_ref().expect("clap enforces contexts"))?;
        let unembed = read_matrix(a.unembed.as_ref().expect("clap enforces unembed"))?;
        let v = unembed.rows();
        let opts = TopkOptions::new(Measure::SoftmaxDot, a.k, false);
        let result = topk_stream(&contexts, Some(&unembed), &opts)?;
        let top1: Vec<usize> = result.neighbors.iter().map(|l| l.entries[0].id).collect();
        let diagnostics = softmax_diagnostics(&contexts, Some(&unembed))?;
        (result, top1, v, diagnostics, Measure::SoftmaxDot)
    };

    let vocab = load_vocab(a.vocab.as_deref(), v)?;
    let (mut report, hubs) = base_report(
        measure,
        a.k,
        a.hub_threshold,
        &result.occurrence,
        vocab.as_ref(),
        config,
    )?;
    report.diagnostics = Some(diagnostics);

    if let Some(gold) = &a.gold {
        let gold = read_gold_labels(gold)?;
        if let Some(&bad) = gold.iter().find(|&&g| g >= v) {
            return Err(HubError::Data(format!(
                "gold token id {bad} outside vocabulary of size {v}"
            )));
        }
        report.accuracy = Some(accuracy_partition(&top1, &gold, &hubs)?);
    }

    if let Some(freq_path) = &a.freq {
        let freq = read_frequency_table(freq_path)?;
        freq.check_vocab_size(v)?;
        let label = a.freq_label.clone().unwrap_or_else(|| {
            freq_path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
        report.correlation = Some(if a.all_tokens {
            all_token_frequency_correlation(&result.occurrence, &freq, &label)?
        } else {
            hub_frequency_correlation(&hubs, &freq, &label)?
        });
        if let Some(path) = &a.scatter {
            let mut csv = String::from("token-id,token-string,N_k,count\n");
            let ids: Vec<usize> = if a.all_tokens {
                (0..v).collect()
            } else {
                hubs.members.iter().map(|h| h.id).collect()
            };
            for id in ids {
                let token = vocab.as_ref().and_then(|voc| voc.get(id)).unwrap_or("");
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    id,
                    csv_field(token),
                    result.occurrence.counts()[id],
                    freq.count(id)
                ));
            }
            emit(&csv, Some(path))?;
        }
    } else if a.scatter.is_some() {
        return Err(HubError::Param("--scatter needs --freq".into()));
    }

    if let Some(path) = &a.occurrence_csv {
        emit(&occurrence_csv(&result.occurrence), Some(path))?;
    }
    report.check_consistency()?;
    emit(&to_json_string(&report)?, a.out.as_deref())
}

/// Relative variance, mean distance and L2-to-uniform of softmax rows,
/// computed block by block.
fn softmax_diagnostics(queries: &DenseMatrix, candidates: Option<&DenseMatrix>) -> Result<Diagnostics> {
    let mut rows = 0usize;
    let (mut mean_sum, mut var_sum, mut l2_sum) = (0.0, 0.0, 0.0);
    for_each_softmax_block(queries, candidates, DEFAULT_BLOCK_SIZE, |probs| {
        let stats = prob_distance_stats(probs)?;
        let n = probs.rows() as f64;
        mean_sum += stats.mean * n;
        var_sum += stats.variance * n;
        l2_sum += mean_l2_to_uniform(probs)? * n;
        rows += probs.rows();
        Ok(())
    })?;
    if rows == 0 {
        return Err(HubError::Data("no context rows".into()));
    }
    let n = rows as f64;
    let mean = mean_sum / n;
    Ok(Diagnostics {
        relative_variance: Some((var_sum / n) / (mean * mean)),
        mean_distance: Some(mean),
        histogram: None,
        mean_l2_to_uniform: Some(l2_sum / n),
    })
}

fn pairwise(a: &PairwiseArgs, config: serde_json::Value) -> Result<()> {
    if a.measure == Measure::Probability {
        return Err(HubError::Param(
            "pairwise takes euclidean, normalized-euclidean or softmax-dot".into(),
        ));
    }
    if a.mitigate == Some(SecondaryKind::MutualProximity) && a.measure == Measure::SoftmaxDot {
        return Err(HubError::Param(
            "mutual proximity needs a zero self-distance; softmax-dot does not have one".into(),
        ));
    }
    let input = read_matrix(&a.input)?;
    let vocab = load_vocab(a.vocab.as_deref(), input.rows())?;

    let (occurrence, mitigation) = match a.mitigate {
        None => {
            let exclude_self = a.exclude_self.unwrap_or(a.measure.default_exclude_self());
            let opts = TopkOptions::new(a.measure, a.k, exclude_self);
            (topk_stream(&input, None, &opts)?.occurrence, None)
        }
        Some(kind) => {
            if a.exclude_self == Some(false) {
                return Err(HubError::Param(
                    "mitigated analyses always exclude self-matches".into(),
                ));
            }
            let dist = pairwise_matrix(&input, None, a.measure)?;
            let before = topk_precomputed(&dist, a.k, true)?.occurrence;
            let after = secondary(&dist, kind)?.topk(a.k)?.occurrence;
            let summary = MitigationSummary {
                method: kind.name().to_owned(),
                k_skew_before: before.k_skew()?,
                k_skew_after: after.k_skew()?,
                num_hubs_before: detect_hubs(&before, a.hub_threshold).len(),
            };
            (after, Some(summary))
        }
    };
    let (mut report, _) = base_report(
        a.measure,
        a.k,
        a.hub_threshold,
        &occurrence,
        vocab.as_ref(),
        config,
    )?;
    report.mitigation = mitigation;
    if let Some(path) = &a.occurrence_csv {
        emit(&occurrence_csv(&occurrence), Some(path))?;
    }
    report.check_consistency()?;
    emit(&to_json_string(&report)?, a.out.as_deref())
}

fn concentration(a: &ConcentrationArgs, config: serde_json::Value) -> Result<()> {
    let queries = read_matrix(&a.queries)?;
    let candidates = a.candidates.as_ref().map(read_matrix).transpose()?;
    let exclude_self = a
        .exclude_self
        .unwrap_or(candidates.is_none() && a.measure.default_exclude_self());
    let diag = distance_histogram(
        &queries,
        candidates.as_ref(),
        &HistogramOptions {
            measure: a.measure,
            bins: a.bins,
            sample_pairs: a.sample_pairs,
            seed: a.seed,
            exclude_self,
        },
    )?;
    if let Some(path) = &a.csv {
        emit(&diag.histogram.to_csv(), Some(path))?;
    }
    let report = ConcentrationReport {
        measure: a.measure.name().to_owned(),
        exclude_self,
        diagnostics: diag,
        config,
    };
    emit(&to_json_string(&report)?, a.out.as_deref())
}

fn uniformdist(a: &UniformArgs, config: serde_json::Value) -> Result<()> {
    let report = if let Some(probs) = &a.probs {
        let probs = read_matrix(probs)?;
        UniformReport {
            source: "probabilities".into(),
            rows: probs.rows(),
            v: probs.cols(),
            mean_l2_to_uniform: mean_l2_to_uniform(&probs)?,
            config,
        }
    } else {
        let queries = read_matrix(a.queries.as_ref().expect("clap enforces queries"))?;
        let candidates = a.candidates.as_ref().map(read_matrix).transpose()?;
        let diag = softmax_diagnostics(&queries, candidates.as_ref())?;
        UniformReport {
            source: "softmax-dot".into(),
            rows: queries.rows(),
            v: candidates.as_ref().unwrap_or(&queries).rows(),
            mean_l2_to_uniform: diag.mean_l2_to_uniform.unwrap_or_default(),
            config,
        }
    };
    emit(&to_json_string(&report)?, a.out.as_deref())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mode = match a.measure {
        Measure::Euclidean => SweepMode::EuclideanGaussian,
        Measure::Probability => SweepMode::ProbabilityPeaked {
            sharpness: a.sharpness,
        },
        other => {
            return Err(HubError::Param(format!(
                "synth supports euclidean or probability, not {other}"
            )))
        }
    };
    let result = rv_scan(
        &a.dims,
        a.n,
        mode,
        a.seed,
        &SweepOptions {
            k: a.k,
            sample_pairs: a.sample_pairs,
        },
    )?;
    if let Some(dir) = &a.emit_dir {
        fs::create_dir_all(dir).map_err(|e| HubError::io(dir, e))?;
        for &d in &a.dims {
            write_matrix(
                &sweep_matrix(mode, a.n, d, a.seed)?,
                dir.join(format!("synth_{d}.hubm")),
            )?;
        }
    }
    emit(&result.to_csv(), a.out.as_deref())
}
