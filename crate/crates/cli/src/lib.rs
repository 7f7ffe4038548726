//! Pipeline front end: element detection, interaction recovery, pattern
//! mining, sequence generation and fixture synthesis over visual-log
//! directories.
//!
//! Exit codes: 0 success, 2 unusable input (flags, config, manifest, spec),
//! 3 failure while processing plausible input. Parallel detection fans
//! sampled frames over a worker pool and merges in frame order, so outputs
//! are byte-identical for any worker count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vislog_core::detection::{
    detect_elements_with_report, DetectorConfig, ElementType, ErrorPolicy, FrameElements,
    TextDetector,
};
use vislog_core::geom::Rect;
use vislog_core::imaging::Raster;
use vislog_core::mining::{mine_patterns, GenerationMode, NGramModel};
use vislog_core::synthgui::{demo_scenario, render_log, LogScript};
use vislog_core::tracking::{
    infer_interactions, label_slug, tokenize, Interaction, InteractionKind, Sample,
    SwipeDirection, TrackingConfig,
};
use vislog_core::vislog::{detect_major_events, load_log, sample_frames, MajorEvent, VisualLog};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// The input itself is unusable.
    Invalid(String),
    /// The input was plausible but processing it failed.
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Pipeline(_) => EXIT_PIPELINE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Pipeline(m) => write!(f, "pipeline failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn pipeline(e: impl fmt::Display) -> CliError {
    CliError::Pipeline(e.to_string())
}

fn default_theta() -> f64 {
    0.01
}
fn default_sample_delay() -> usize {
    2
}
fn default_ngram_n() -> usize {
    2
}
fn default_ngram_k() -> f64 {
    1.0
}
fn default_min_support() -> usize {
    2
}
fn default_min_pattern_len() -> usize {
    2
}
fn default_max_pattern_len() -> usize {
    8
}
fn default_anomaly_z() -> f64 {
    2.0
}
fn default_text_detector() -> String {
    "none".into()
}
fn default_error_policy() -> String {
    "strict".into()
}

/// Everything the pipeline can be tuned with, as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub tracking: TrackingConfig,
    /// Inter-frame MSE above this marks a major event.
    pub theta: f64,
    /// Frames skipped past a major event before sampling.
    pub sample_delay: usize,
    pub ngram_n: usize,
    pub ngram_k: f64,
    pub min_support: usize,
    pub min_pattern_len: usize,
    pub max_pattern_len: usize,
    pub anomaly_z: f64,
    /// none | oracle | external:<command>
    pub text_detector: String,
    /// strict | lenient
    pub error_policy: String,
    /// Detection worker threads; 0 picks the runtime default.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detector: DetectorConfig::default(),
            tracking: TrackingConfig::default(),
            theta: default_theta(),
            sample_delay: default_sample_delay(),
            ngram_n: default_ngram_n(),
            ngram_k: default_ngram_k(),
            min_support: default_min_support(),
            min_pattern_len: default_min_pattern_len(),
            max_pattern_len: default_max_pattern_len(),
            anomaly_z: default_anomaly_z(),
            text_detector: default_text_detector(),
            error_policy: default_error_policy(),
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.detector.validate().map_err(invalid)?;
        let t = &self.tracking;
        let fracs = [
            ("iou_match", t.iou_match),
            ("center_dist_frac", t.center_dist_frac),
            ("area_ratio_tol", t.area_ratio_tol),
            ("click_delta", t.click_delta),
            ("swipe_min_frac", t.swipe_min_frac),
            ("adjust_max_rel", t.adjust_max_rel),
        ];
        for (name, v) in fracs {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(invalid(format!("tracking.{name} must be in (0, 1], got {v}")));
            }
        }
        if t.swipe_quorum == 0 {
            return Err(invalid("tracking.swipe_quorum must be at least 1"));
        }
        if t.pixel_jitter < 0 || t.adjust_min_px <= 0 {
            return Err(invalid("tracking pixel thresholds must be positive"));
        }
        if !self.theta.is_finite() || self.theta <= 0.0 {
            return Err(invalid(format!("theta must be positive, got {}", self.theta)));
        }
        if !(2..=5).contains(&self.ngram_n) {
            return Err(invalid(format!("ngram_n must be in [2, 5], got {}", self.ngram_n)));
        }
        if !self.ngram_k.is_finite() || self.ngram_k <= 0.0 {
            return Err(invalid(format!("ngram_k must be positive, got {}", self.ngram_k)));
        }
        if self.min_support == 0 {
            return Err(invalid("min_support must be at least 1"));
        }
        if self.min_pattern_len == 0 || self.max_pattern_len < self.min_pattern_len {
            return Err(invalid(format!(
                "pattern length bounds invalid: [{}, {}]",
                self.min_pattern_len, self.max_pattern_len
            )));
        }
        if !self.anomaly_z.is_finite() || self.anomaly_z < 0.0 {
            return Err(invalid(format!("anomaly_z must be non-negative, got {}", self.anomaly_z)));
        }
        parse_policy(&self.error_policy)?;
        parse_text_detector(&self.text_detector, Path::new("."))?;
        Ok(())
    }
}

pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let cfg = match path {
        None => PipelineConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| invalid(format!("config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| invalid(format!("config {}: {e}", p.display())))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_policy(s: &str) -> Result<ErrorPolicy, CliError> {
    match s {
        "strict" => Ok(ErrorPolicy::Strict),
        "lenient" => Ok(ErrorPolicy::Lenient),
        other => Err(invalid(format!("error_policy must be strict or lenient, got {other:?}"))),
    }
}

/// `none`, `oracle` (reads `truth.json` beside the log), or
/// `external:<command>`.
pub fn parse_text_detector(s: &str, log_dir: &Path) -> Result<TextDetector, CliError> {
    if s == "none" {
        Ok(TextDetector::None)
    } else if s == "oracle" {
        Ok(TextDetector::Oracle { truth_path: log_dir.join("truth.json") })
    } else if let Some(cmd) = s.strip_prefix("external:") {
        if cmd.trim().is_empty() {
            return Err(invalid("external text detector command is empty"));
        }
        Ok(TextDetector::External { command: cmd.to_string() })
    } else {
        Err(invalid(format!(
            "text detector must be none, oracle or external:<cmd>, got {s:?}"
        )))
    }
}

/// One interaction in `interactions.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionRecord {
    pub t_ms: u64,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<i64>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionsFile {
    pub log: String,
    pub events: Vec<InteractionRecord>,
}

pub fn to_record(i: &Interaction, t_ms: u64) -> InteractionRecord {
    let mut r = InteractionRecord {
        t_ms,
        action: String::new(),
        target_id: None,
        target_label: None,
        direction: None,
        delta: None,
        low_confidence: i.low_confidence,
    };
    match &i.kind {
        InteractionKind::Click { target, label } => {
            r.action = "click".into();
            r.target_id = Some(*target);
            r.target_label = label.clone();
        }
        InteractionKind::Swipe { direction } => {
            r.action = "swipe".into();
            r.direction = Some(
                match direction {
                    SwipeDirection::Left => "left",
                    SwipeDirection::Right => "right",
                    SwipeDirection::Up => "up",
                    SwipeDirection::Down => "down",
                }
                .into(),
            );
        }
        InteractionKind::Adjust { target, label, delta } => {
            r.action = "adjust".into();
            r.target_id = Some(*target);
            r.target_label = label.clone();
            r.delta = Some(*delta);
        }
        InteractionKind::Transition => r.action = "transition".into(),
    }
    r
}

/// Token for a stored record; matches `tracking::tokenize` on the
/// interaction it was built from.
pub fn record_token(r: &InteractionRecord) -> String {
    let handle = || match (&r.target_label, r.target_id) {
        (Some(l), _) => label_slug(l),
        (None, Some(id)) => format!("#{id}"),
        (None, None) => "#?".into(),
    };
    match r.action.as_str() {
        "click" => format!("click:{}", handle()),
        "swipe" => format!("swipe:{}", r.direction.as_deref().unwrap_or("?")),
        "adjust" => {
            let sign = if r.delta.unwrap_or(0) > 0 { "+" } else { "-" };
            format!("adjust:{}:{sign}", handle())
        }
        other => other.to_string(),
    }
}

const TEXT_COLOR: [f32; 3] = [0.25, 0.55, 1.0];
const ICON_COLOR: [f32; 3] = [0.20, 0.95, 0.35];
const COMB_COLOR: [f32; 3] = [1.00, 0.45, 0.20];

fn draw_box(img: &mut Raster, rect: &Rect, color: [f32; 3]) {
    let x2 = rect.x2().min(img.width());
    let y2 = rect.y2().min(img.height());
    if x2 <= rect.x || y2 <= rect.y {
        return;
    }
    let mut put = |x: u32, y: u32| {
        for (c, v) in color.iter().enumerate() {
            img.set(x, y, c as u8, *v);
        }
    };
    for x in rect.x..x2 {
        put(x, rect.y);
        put(x, y2 - 1);
    }
    for y in rect.y..y2 {
        put(rect.x, y);
        put(x2 - 1, y);
    }
}

/// Frame with 1-px bbox outlines, color-coded by element type.
pub fn annotate(frame: &Raster, fe: &FrameElements) -> Raster {
    let mut rgb = Raster::rgb(frame.width(), frame.height());
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            let v = frame.luma(x, y);
            for c in 0..3 {
                rgb.set(x, y, c, v);
            }
        }
    }
    for e in &fe.elements {
        let color = match e.kind {
            ElementType::Text => TEXT_COLOR,
            ElementType::Icon => ICON_COLOR,
            ElementType::Comb => COMB_COLOR,
        };
        draw_box(&mut rgb, &e.bbox, color);
    }
    rgb
}

pub struct AnalyzedLog {
    pub log: VisualLog,
    pub majors: Vec<MajorEvent>,
    pub samples: Vec<Sample>,
    pub warnings: Vec<String>,
}

/// Load a log, find its major events, detect elements on every sampled
/// frame. Detection fans out over `workers` threads; results are merged in
/// frame order.
pub fn detect_sampled(
    log_dir: &Path,
    cfg: &PipelineConfig,
    text_detector: Option<&str>,
    workers: Option<usize>,
) -> Result<AnalyzedLog, CliError> {
    let log = load_log(log_dir).map_err(invalid)?;
    let majors = detect_major_events(&log, cfg.theta).map_err(pipeline)?;
    let indices = sample_frames(&log, &majors, cfg.sample_delay);
    let detector = parse_text_detector(text_detector.unwrap_or(&cfg.text_detector), log_dir)?;
    let policy = parse_policy(&cfg.error_policy)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(cfg.workers))
        .build()
        .map_err(pipeline)?;
    let detected: Result<Vec<(FrameElements, Vec<String>)>, _> = pool.install(|| {
        indices
            .par_iter()
            .map(|&i| {
                let frame = &log.frames[i];
                let png = log_dir.join(&log.frame_files[i]);
                detect_elements_with_report(
                    &frame.image,
                    i,
                    Some(&png),
                    &cfg.detector,
                    &detector,
                    policy,
                )
            })
            .collect()
    });
    let detected = detected.map_err(pipeline)?;

    let mut samples = Vec::with_capacity(indices.len());
    let mut warnings = Vec::new();
    for (&i, (elements, warns)) in indices.iter().zip(detected) {
        warnings.extend(warns);
        samples.push(Sample {
            frame_index: i,
            t_ms: log.frames[i].t_ms,
            elements,
            image: log.frames[i].image.clone(),
        });
    }
    Ok(AnalyzedLog { log, majors, samples, warnings })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut buf = serde_json::to_vec_pretty(value)
        .map_err(|e| pipeline(format!("{}: {e}", path.display())))?;
    buf.push(b'\n');
    fs::write(path, buf).map_err(|e| pipeline(format!("{}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| pipeline(format!("{}: {e}", path.display())))
}

pub fn cmd_detect(
    log_dir: &Path,
    out: &Path,
    cfg: &PipelineConfig,
    text_detector: Option<&str>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let analyzed = detect_sampled(log_dir, cfg, text_detector, workers)?;
    for w in &analyzed.warnings {
        eprintln!("warning: {w}");
    }
    let elements_dir = out.join("elements");
    let annotated_dir = out.join("annotated");
    ensure_dir(&elements_dir)?;
    ensure_dir(&annotated_dir)?;
    for s in &analyzed.samples {
        let stem = format!("f{:05}", s.frame_index);
        write_json(&elements_dir.join(format!("{stem}.json")), &s.elements)?;
        let overlay = annotate(&s.image, &s.elements);
        vislog_core::vislog::save_frame_png(&overlay, &annotated_dir.join(format!("{stem}.png")))
            .map_err(pipeline)?;
    }
    println!(
        "sampled {} of {} frames; wrote elements/ and annotated/ under {}",
        analyzed.samples.len(),
        analyzed.log.frames.len(),
        out.display()
    );
    Ok(())
}

fn log_id(log_dir: &Path) -> String {
    log_dir
        .canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(log_dir)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "log".into())
}

pub fn cmd_analyze(
    log_dir: &Path,
    out: &Path,
    cfg: &PipelineConfig,
    text_detector: Option<&str>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let analyzed = detect_sampled(log_dir, cfg, text_detector, workers)?;
    for w in &analyzed.warnings {
        eprintln!("warning: {w}");
    }
    let interactions =
        infer_interactions(&analyzed.samples, &analyzed.log.events, &analyzed.majors, &cfg.tracking);
    let records: Vec<InteractionRecord> = interactions
        .iter()
        .map(|i| to_record(i, analyzed.samples[i.step + 1].t_ms))
        .collect();
    let file = InteractionsFile { log: log_id(log_dir), events: records };
    ensure_dir(out)?;
    write_json(&out.join("interactions.json"), &file)?;
    println!(
        "{} samples, {} interactions: {}",
        analyzed.samples.len(),
        file.events.len(),
        tokenize(&interactions).join(" ")
    );
    Ok(())
}

fn read_interactions(path: &Path) -> Result<Vec<String>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let file: InteractionsFile = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(file.events.iter().map(record_token).collect())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_mine(
    inputs: &[PathBuf],
    out: &Path,
    cfg: &PipelineConfig,
    n: Option<usize>,
    k: Option<f64>,
    min_support: Option<usize>,
) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(invalid("at least one interactions file is required"));
    }
    let corpus: Vec<Vec<String>> =
        inputs.iter().map(|p| read_interactions(p)).collect::<Result<_, _>>()?;
    let n = n.unwrap_or(cfg.ngram_n);
    let k = k.unwrap_or(cfg.ngram_k);
    let min_support = min_support.unwrap_or(cfg.min_support);

    let model = NGramModel::train(&corpus, n, k).map_err(invalid)?;
    let patterns = mine_patterns(&corpus, min_support, cfg.min_pattern_len, cfg.max_pattern_len)
        .map_err(invalid)?;
    let anomalies = model.detect_anomalies(&corpus, cfg.anomaly_z);

    ensure_dir(out)?;
    write_json(&out.join("model.json"), &model.to_json())?;
    write_json(&out.join("patterns.json"), &patterns)?;

    let stats = model.train_stats();
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();
    println!("sequences: {}", corpus.len());
    println!("tokens: {total_tokens}");
    println!("vocabulary: {}", model.predictable_vocab().count());
    println!("mean logprob: {:.6} (std {:.6})", stats.mean, stats.std);
    println!("patterns (support >= {min_support}): {}", patterns.len());
    for a in &anomalies {
        println!("anomaly: sequence {} scores {:.6}", a.sequence_index, a.score);
    }
    Ok(())
}

pub fn cmd_generate(
    model_path: &Path,
    mode: GenerateMode,
    seed: u64,
    max_len: usize,
    count: usize,
) -> Result<(), CliError> {
    let text = fs::read_to_string(model_path)
        .map_err(|e| invalid(format!("{}: {e}", model_path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", model_path.display())))?;
    let model = NGramModel::from_json(&value)
        .map_err(|e| invalid(format!("{}: {e}", model_path.display())))?;
    for i in 0..count {
        let gen_mode = match mode {
            GenerateMode::Greedy => GenerationMode::Greedy,
            GenerateMode::Sample => GenerationMode::Sample { seed: seed + i as u64 },
        };
        println!("{}", model.generate(gen_mode, max_len).join(" "));
    }
    Ok(())
}

pub fn cmd_synth(
    spec: Option<&Path>,
    demo: bool,
    out: &Path,
    cfg: &PipelineConfig,
) -> Result<(), CliError> {
    let script: LogScript = match (spec, demo) {
        (Some(_), true) => {
            return Err(invalid("give either a spec file or --demo, not both"));
        }
        (None, true) => demo_scenario(),
        (Some(p), false) => {
            let text =
                fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        (None, false) => return Err(invalid("a spec file or --demo is required")),
    };
    vislog_core::synthgui::validate_script(&script).map_err(invalid)?;
    let truth = render_log(&script, out, cfg.theta).map_err(pipeline)?;
    println!(
        "wrote {} frames, {} major events, truth.json under {}",
        script.frames.len(),
        truth.major_events.len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateMode {
    Greedy,
    Sample,
}

#[derive(Parser)]
#[command(name = "vislog", version, about = "Mine usage patterns from GUI visual logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON pipeline configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Detection worker threads (0 = runtime default)
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Text detector: none | oracle | external:<cmd>
    #[arg(long, global = true, value_name = "KIND")]
    pub text_detector: Option<String>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Detect GUI elements on the sampled frames of a log
    Detect { log_dir: PathBuf },
    /// Recover the interaction sequence of a log
    Analyze { log_dir: PathBuf },
    /// Train an n-gram model and mine usage patterns from interactions files
    Mine {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Model order (overrides config)
        #[arg(long)]
        n: Option<usize>,
        /// Add-k smoothing (overrides config)
        #[arg(long)]
        k: Option<f64>,
        /// Minimum pattern support (overrides config)
        #[arg(long)]
        min_support: Option<usize>,
    },
    /// Generate token sequences from a trained model
    Generate {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = GenerateMode::Greedy)]
        mode: GenerateMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        max_len: usize,
        /// Sequences to print, one per line
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Render a scripted synthetic log with ground truth
    Synth {
        /// JSON log script; omit with --demo
        spec: Option<PathBuf>,
        /// Render the bundled demo scenario
        #[arg(long)]
        demo: bool,
    },
}

fn require_out(out: Option<&PathBuf>) -> Result<&Path, CliError> {
    out.map(PathBuf::as_path).ok_or_else(|| invalid("--out <dir> is required"))
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Detect { log_dir } => cmd_detect(
            log_dir,
            require_out(cli.out.as_ref())?,
            &cfg,
            cli.text_detector.as_deref(),
            cli.workers,
        ),
        Command::Analyze { log_dir } => cmd_analyze(
            log_dir,
            require_out(cli.out.as_ref())?,
            &cfg,
            cli.text_detector.as_deref(),
            cli.workers,
        ),
        Command::Mine { inputs, n, k, min_support } => {
            cmd_mine(inputs, require_out(cli.out.as_ref())?, &cfg, *n, *k, *min_support)
        }
        Command::Generate { model, mode, seed, max_len, count } => {
            cmd_generate(model, *mode, *seed, *max_len, *count)
        }
        Command::Synth { spec, demo } => {
            cmd_synth(spec.as_deref(), *demo, require_out(cli.out.as_ref())?, &cfg)
        }
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
