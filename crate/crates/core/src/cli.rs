//! `mavils` command-line interface.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors (bad flags,
//! unreadable or malformed inputs), 1 for internal failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::align::{dp_align, Alignment, AlignmentConfig, JumpDirectionMode, LinearPenaltyMode};
use crate::combine::{
    combine_max, combine_mean, combine_weighted, optimize_weights, ModalityWeights,
    OptimizerSettings, WeightOptimization,
};
use crate::error::{Error, Result};
use crate::eval::{no_slide_ratio, score_alignment, volatility_score, EvalReport};
use crate::io;
use crate::matrix::{cosine_similarity_matrix, EmbeddingKind, SimilarityMatrix};
use crate::synth::{generate, SynthSpec};

pub const THREADS_ENV: &str = "MAVILS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mavils", version, about = "Align lecture video segments to slides")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cosine similarity between frame and slide embedding files.
    Similarity {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        slides: PathBuf,
        /// Output path; `.csv` writes CSV, anything else the MVLS container.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode the slide sequence for one lecture.
    Align(AlignArgs),
    /// Fit text/audio/image weights for the weighted-sum fusion.
    OptimizeWeights {
        #[command(flatten)]
        inputs: ModalityInputs,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an alignment against ground truth.
    Eval {
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Deck size; read from the truth sidecar when omitted.
        #[arg(long)]
        total_slides: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV to append to [default: summary.csv next to --out].
        #[arg(long)]
        summary_csv: Option<PathBuf>,
        /// Row label in the summary [default: alignment file stem].
        #[arg(long)]
        lecture_id: Option<String>,
    },
    /// Align and score every lecture of a corpus over a grid of jump penalties.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.15,0.2,0.25")]
        lambda_jump_grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Mean)]
        method: Method,
        #[arg(long, default_value_t = 0.0)]
        lambda_linear: f64,
        #[arg(long, value_enum, default_value_t = LinearMode::SlideDeviation)]
        linear_mode: LinearMode,
        #[arg(long, value_enum, default_value_t = JumpMode::AsWritten)]
        jump_mode: JumpMode,
        #[arg(long, value_enum, default_value_t = Metric::Accuracy)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic lectures with a planted slide path.
    Synth {
        #[command(flatten)]
        spec: SynthArgs,
        /// Number of lectures; more than one writes `lecture_NNN` subdirectories
        /// with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        lectures: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print volatility and no-slide ratio of a ground-truth file as JSON.
    Stats {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        total_slides: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mean,
    Max,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinearMode {
    SlideDeviation,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JumpMode {
    AsWritten,
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Accuracy,
    F1Macro,
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda_jump: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_linear: f64,
    #[arg(long, value_enum, default_value_t = LinearMode::SlideDeviation)]
    pub linear_mode: LinearMode,
    #[arg(long, value_enum, default_value_t = JumpMode::AsWritten)]
    pub jump_mode: JumpMode,
}

impl PenaltyArgs {
    fn config(&self) -> AlignmentConfig {
        alignment_config(self.lambda_jump, self.lambda_linear, self.linear_mode, self.jump_mode)
    }
}

fn alignment_config(lj: f64, ll: f64, linear: LinearMode, jump: JumpMode) -> AlignmentConfig {
    AlignmentConfig {
        lambda_jump: lj,
        lambda_linear: ll,
        linear_penalty_mode: match linear {
            LinearMode::SlideDeviation => LinearPenaltyMode::SlideDeviation,
            LinearMode::Literal => LinearPenaltyMode::Literal,
        },
        jump_direction_mode: match jump {
            JumpMode::AsWritten => JumpDirectionMode::AsWritten,
            JumpMode::Swapped => JumpDirectionMode::Swapped,
        },
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
}

impl OptimizerArgs {
    fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            ..OptimizerSettings::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModalityInputs {
    /// OCR text similarity matrix.
    #[arg(long)]
    pub text: PathBuf,
    /// Transcript similarity matrix.
    #[arg(long)]
    pub audio: PathBuf,
    /// Image-feature similarity matrix.
    #[arg(long)]
    pub image: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Pre-combined similarity matrix.
    #[arg(long, conflicts_with_all = ["text", "audio", "image"], required_unless_present = "text")]
    pub sim: Option<PathBuf>,
    #[arg(long, requires_all = ["audio", "image"])]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub audio: Option<PathBuf>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Mean)]
    pub method: Method,
    /// Weights JSON for `--method weighted`; fitted when omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub penalties: PenaltyArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n_frames: usize,
    #[arg(long, default_value_t = 20)]
    pub m_slides: usize,
    #[arg(long, default_value_t = 0.6)]
    pub signal: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub volatility: f64,
    #[arg(long, default_value_t = 0.0)]
    pub no_slide_fraction: f64,
    #[arg(long, default_value_t = 0.15)]
    pub distractor_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SynthArgs {
    fn spec(&self) -> SynthSpec {
        SynthSpec {
            n_frames: self.n_frames,
            m_slides: self.m_slides,
            signal: self.signal,
            noise_sigma: self.noise_sigma,
            volatility: self.volatility,
            no_slide_fraction: self.no_slide_fraction,
            distractor_prob: self.distractor_prob,
            seed: self.seed,
        }
    }
}

/// Run record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment_config: Option<AlignmentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<ModalityWeights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    fn new(command: &str, inputs: &[&Path]) -> Self {
        Self {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            alignment_config: None,
            method: None,
            weights: None,
            optimizer: None,
            synth: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
        }
    }

    fn finish(mut self, started: Instant, path: &Path) -> Result<()> {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        io::write_json(&self, path)
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// `<out stem>.weights.json` next to `out`.
pub fn weights_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("alignment");
    out.with_file_name(format!("{stem}.weights.json"))
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Similarity { frames, slides, out } => {
            let f = io::read_embeddings(&frames)?;
            let s = io::read_embeddings(&slides)?;
            if f.kind() != EmbeddingKind::Frame || s.kind() != EmbeddingKind::Slide {
                return Err(Error::invalid("--frames must hold frame embeddings and --slides slide embeddings"));
            }
            let sim = cosine_similarity_matrix(&f, &s)?;
            io::write_similarity(&sim, &out)?;
            RunManifest::new("similarity", &[&frames, &slides]).finish(started, &manifest_path(&out))
        }
        Command::Align(args) => cmd_align(args, started),
        Command::OptimizeWeights {
            inputs,
            penalties,
            optimizer,
            out,
        } => {
            let [a, b, c] = read_modalities(&inputs.text, &inputs.audio, &inputs.image)?;
            let config = penalties.config();
            let settings = optimizer.settings();
            let fit = optimize_weights(&a, &b, &c, &config, &settings)?;
            io::write_weights(&fit, &out)?;
            let mut manifest =
                RunManifest::new("optimize-weights", &[&inputs.text, &inputs.audio, &inputs.image]);
            manifest.alignment_config = Some(config);
            manifest.optimizer = Some(settings);
            manifest.weights = Some(fit.weights);
            manifest.finish(started, &manifest_path(&out))
        }
        Command::Eval {
            alignment,
            truth,
            total_slides,
            out,
            summary_csv,
            lecture_id,
        } => {
            let pred = io::read_alignment(&alignment)?;
            let gt = io::read_ground_truth(&truth, total_slides)?;
            let report = score_alignment(&pred, &gt)?;
            io::write_report(&report, &out)?;
            let summary = summary_csv.unwrap_or_else(|| out.with_file_name("summary.csv"));
            let id = lecture_id.unwrap_or_else(|| file_stem(&alignment));
            io::append_summary_row(&summary, &id, &report)?;
            RunManifest::new("eval", &[&alignment, &truth]).finish(started, &manifest_path(&out))
        }
        Command::Sweep {
            corpus,
            lambda_jump_grid,
            method,
            lambda_linear,
            linear_mode,
            jump_mode,
            metric,
            out,
        } => {
            let base = alignment_config(0.0, lambda_linear, linear_mode, jump_mode);
            let table = sweep(&corpus, &lambda_jump_grid, method, &base, metric)?;
            std::fs::write(&out, table.to_csv()).map_err(|e| Error::file(&out, e))?;
            let mut manifest = RunManifest::new("sweep", &[&corpus]);
            manifest.alignment_config = Some(base);
            manifest.method = Some(method);
            manifest.finish(started, &manifest_path(&out))
        }
        Command::Synth { spec, lectures, out } => {
            if lectures == 0 {
                return Err(Error::invalid("--lectures must be >= 1"));
            }
            let spec = spec.spec();
            std::fs::create_dir_all(&out).map_err(|e| Error::file(&out, e))?;
            for k in 0..lectures {
                let dir = if lectures == 1 {
                    out.clone()
                } else {
                    out.join(format!("lecture_{k:03}"))
                };
                let lecture_spec = SynthSpec {
                    seed: spec.seed + k as u64,
                    ..spec
                };
                write_synth_lecture(&lecture_spec, &dir)?;
            }
            let mut manifest = RunManifest::new("synth", &[]);
            manifest.synth = Some(spec);
            manifest.finish(started, &out.join("manifest.json"))
        }
        Command::Stats { truth, total_slides } => {
            let gt = io::read_ground_truth(&truth, total_slides)?;
            let stats = serde_json::json!({
                "segments": gt.len(),
                "total_slides": gt.total_slides,
                "volatility": volatility_score(&gt),
                "no_slide_ratio": no_slide_ratio(&gt)?,
            });
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(())
        }
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("lecture")
        .to_string()
}

fn read_modalities(text: &Path, audio: &Path, image: &Path) -> Result<[SimilarityMatrix; 3]> {
    Ok([
        io::read_similarity(text)?.with_tag("text"),
        io::read_similarity(audio)?.with_tag("audio"),
        io::read_similarity(image)?.with_tag("image"),
    ])
}

/// Fuses the three modality matrices. For `Weighted` without explicit weights
/// the weights are fitted first and returned alongside.
fn fuse(
    [a, b, c]: &[SimilarityMatrix; 3],
    method: Method,
    weights: Option<ModalityWeights>,
    config: &AlignmentConfig,
    settings: &OptimizerSettings,
) -> Result<(SimilarityMatrix, Option<WeightOptimization>)> {
    match method {
        Method::Mean => Ok((combine_mean(&[a, b, c])?, None)),
        Method::Max => Ok((combine_max(&[a, b, c])?, None)),
        Method::Weighted => match weights {
            Some(w) => Ok((combine_weighted(a, b, c, &w)?, None)),
            None => {
                let fit = optimize_weights(a, b, c, config, settings)?;
                Ok((combine_weighted(a, b, c, &fit.weights)?, Some(fit)))
            }
        },
    }
}

fn cmd_align(args: AlignArgs, started: Instant) -> Result<()> {
    let config = args.penalties.config();
    let settings = args.optimizer.settings();
    let mut manifest;
    let alignment: Alignment;

    if let Some(sim_path) = &args.sim {
        let sim = io::read_similarity(sim_path)?;
        alignment = dp_align(&sim, &config)?;
        manifest = RunManifest::new("align", &[sim_path]);
    } else {
        let (Some(t), Some(a), Some(i)) = (&args.text, &args.audio, &args.image) else {
            return Err(Error::invalid("pass --sim or all of --text, --audio, --image"));
        };
        let mats = read_modalities(t, a, i)?;
        let weights = args.weights.as_ref().map(io::read_weights).transpose()?;
        let (fused, fit) = fuse(&mats, args.method, weights, &config, &settings)?;
        alignment = dp_align(&fused, &config)?;
        manifest = RunManifest::new("align", &[t, a, i]);
        manifest.method = Some(args.method);
        manifest.weights = weights.or(fit.as_ref().map(|f| f.weights));
        if let Some(fit) = fit {
            io::write_weights(&fit, weights_path(&args.out))?;
            manifest.optimizer = Some(settings);
        }
    }

    io::write_alignment(&alignment, &args.out)?;
    manifest.alignment_config = Some(config);
    manifest.finish(started, &manifest_path(&args.out))
}

fn write_synth_lecture(spec: &SynthSpec, dir: &Path) -> Result<()> {
    let lecture = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    io::write_ground_truth(&lecture.truth, dir.join("truth.csv"))?;
    for m in lecture.matrices() {
        io::write_similarity_csv(m, dir.join(format!("{}.csv", m.tag())))?;
    }
    Ok(())
}

/// One lecture of a sweep corpus.
#[derive(Debug, Clone)]
pub struct CorpusLecture {
    pub id: String,
    pub dir: PathBuf,
}

/// Lists lecture directories (those holding `truth.csv`) in name order.
pub fn list_corpus(corpus: &Path) -> Result<Vec<CorpusLecture>> {
    let entries = std::fs::read_dir(corpus).map_err(|e| Error::file(corpus, e))?;
    let mut lectures = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_dir() && path.join("truth.csv").is_file() {
            lectures.push(CorpusLecture {
                id: file_name(&path),
                dir: path,
            });
        }
    }
    if lectures.is_empty() && corpus.join("truth.csv").is_file() {
        lectures.push(CorpusLecture {
            id: file_name(corpus),
            dir: corpus.to_path_buf(),
        });
    }
    if lectures.is_empty() {
        return Err(Error::invalid(format!(
            "no lectures (directories with truth.csv) under {}",
            corpus.display()
        )));
    }
    lectures.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(lectures)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("lecture")
        .to_string()
}

fn find_matrix(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["csv", "mvls"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

/// Per-lecture scores over the jump-penalty grid, last row the column mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub grid: Vec<f64>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl SweepTable {
    pub fn averages(&self) -> Vec<f64> {
        let n = self.rows.len() as f64;
        (0..self.grid.len())
            .map(|c| self.rows.iter().map(|(_, r)| r[c]).sum::<f64>() / n)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let fmt_row = |name: &str, vals: &[f64]| {
            let mut cells = vec![name.to_string()];
            cells.extend(vals.iter().map(|v| format!("{v:.4}")));
            cells.join(",") + "\n"
        };
        let mut out = String::from("lecture");
        for g in &self.grid {
            out.push_str(&format!(",{g}"));
        }
        out.push('\n');
        for (name, vals) in &self.rows {
            out.push_str(&fmt_row(name, vals));
        }
        out.push_str(&fmt_row("average", &self.averages()));
        out
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Aligns and scores every lecture at every jump penalty in `grid`.
pub fn sweep(
    corpus: &Path,
    grid: &[f64],
    method: Method,
    base: &AlignmentConfig,
    metric: Metric,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    for &g in grid {
        AlignmentConfig {
            lambda_jump: g,
            ..*base
        }
        .validate()?;
    }
    let lectures = list_corpus(corpus)?;
    let settings = OptimizerSettings::default();

    let score_lecture = |lecture: &CorpusLecture| -> Result<(String, Vec<f64>)> {
        let truth = io::read_ground_truth(lecture.dir.join("truth.csv"), None)?;
        let fused_source = find_matrix(&lecture.dir, "similarity");
        let modalities = match fused_source {
            Some(_) => None,
            None => {
                let paths: Vec<PathBuf> = ["text", "audio", "image"]
                    .iter()
                    .map(|s| {
                        find_matrix(&lecture.dir, s).ok_or_else(|| {
                            Error::invalid(format!("{}: missing {s} matrix", lecture.dir.display()))
                        })
                    })
                    .collect::<Result<_>>()?;
                Some(read_modalities(&paths[0], &paths[1], &paths[2])?)
            }
        };
        let fixed = fused_source.map(io::read_similarity).transpose()?;

        let mut scores = Vec::with_capacity(grid.len());
        for &lj in grid {
            let config = AlignmentConfig {
                lambda_jump: lj,
                ..*base
            };
            let sim = match (&fixed, &modalities) {
                (Some(s), _) => s.clone(),
                (None, Some(m)) => fuse(m, method, None, &config, &settings)?.0,
                (None, None) => unreachable!(),
            };
            let alignment = dp_align(&sim, &config)?;
            let report: EvalReport = score_alignment(&alignment, &truth)?;
            scores.push(match metric {
                Metric::Accuracy => report.accuracy,
                Metric::F1Macro => report.f1_macro,
            });
        }
        Ok((lecture.id.clone(), scores))
    };

    let compute = || lectures.par_iter().map(score_lecture).collect::<Result<Vec<_>>>();
    let rows = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(compute)?,
        None => compute()?,
    };
    Ok(SweepTable {
        grid: grid.to_vec(),
        rows,
    })
}
