//! Monte-Carlo experiment runner.
//!
//! A sweep is the Cartesian product schemes × channels × densities; each
//! (scheme, channel, density) cell runs `trials` independent realizations and
//! is summarized as one [`ResultRow`].
//!
//! Every trial owns a ChaCha8 stream seeded from `(master_seed, K, M, trial
//! index)`. The scene is drawn first and the dither (when the channel needs
//! one) second, so all cells of a sweep see the same scenes and results never
//! depend on how trials are scheduled across workers.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{build_dictionary, InterpolatedDictionary, InterpolationScheme};
use crate::error::{QcompError, Result};
use crate::evaluation::{aggregate, pair_estimates, residue_metric, TrialOutcome};
use crate::quantization::{choose_delta, draw_dither, MeasurementChannel};
use crate::signal::{sample_scene_separated, synthesize, RadarConfig, Scene};
use crate::solver::{qcomp, SolverProblem};

/// Grid densities `N/M` of the published performance curves.
pub const DEFAULT_DENSITIES: [f64; 12] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0];
pub const DEFAULT_M: usize = 256;
pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_K: usize = 2;

/// CSV header, in field order.
pub const CSV_HEADER: [&str; 13] = [
    "scheme",
    "channel",
    "k",
    "m",
    "n",
    "rho",
    "trials",
    "seed",
    "avg_error",
    "miss_rate",
    "avg_hit_error",
    "avg_residue",
    "wall_time_ms",
];

/// Measurement model of a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "onebit")]
    OneBit,
    #[serde(rename = "onebit_dither")]
    OneBitDither,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [Self::Full, Self::OneBit, Self::OneBitDither];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::OneBit => "onebit",
            Self::OneBitDither => "onebit_dither",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = QcompError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Self::Full),
            "onebit" => Ok(Self::OneBit),
            "onebit_dither" => Ok(Self::OneBitDither),
            other => Err(QcompError::InvalidExperiment(format!(
                "unknown channel {other:?} (expected full, onebit or onebit_dither)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = QcompError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(QcompError::InvalidExperiment(format!(
                "unknown format {other:?} (expected csv or json)"
            ))),
        }
    }
}

fn default_radar() -> RadarConfig {
    RadarConfig::normalized(DEFAULT_M).expect("default radar is valid")
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_schemes() -> Vec<InterpolationScheme> {
    vec![InterpolationScheme::None, InterpolationScheme::Taylor1]
}

fn default_channels() -> Vec<ChannelKind> {
    ChannelKind::ALL.to_vec()
}

fn default_densities() -> Vec<f64> {
    DEFAULT_DENSITIES.to_vec()
}

/// Full description of a sweep. The JSON config file has exactly these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_radar")]
    pub radar: RadarConfig,
    #[serde(default = "default_k")]
    pub k_targets: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<InterpolationScheme>,
    #[serde(default = "default_channels")]
    pub channels: Vec<ChannelKind>,
    #[serde(default = "default_densities")]
    pub densities: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Fill `wall_time_ms`; off by default so output files are reproducible.
    #[serde(default)]
    pub record_timing: bool,
    /// Optional minimum target separation, in resolution cells.
    #[serde(default)]
    pub min_separation: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            radar: default_radar(),
            k_targets: DEFAULT_K,
            trials: DEFAULT_TRIALS,
            schemes: default_schemes(),
            channels: default_channels(),
            densities: default_densities(),
            master_seed: 0,
            output: None,
            format: OutputFormat::Csv,
            workers: 0,
            record_timing: false,
            min_separation: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| QcompError::InvalidExperiment(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QcompError::InvalidExperiment(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of grid bins for density `rho`: `round(ρ M)`.
    pub fn n_bins(&self, rho: f64) -> usize {
        (rho * self.radar.m_samples() as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(QcompError::InvalidExperiment(msg));
        if self.k_targets == 0 {
            return bad("k_targets must be >= 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.schemes.is_empty() || self.channels.is_empty() || self.densities.is_empty() {
            return bad("schemes, channels and densities must be non-empty".into());
        }
        for &rho in &self.densities {
            if !(rho > 0.0 && rho.is_finite()) {
                return bad(format!("density {rho} must be positive"));
            }
            let n = self.n_bins(rho);
            if n == 0 {
                return bad(format!("density {rho} gives an empty grid"));
            }
            if n < self.k_targets {
                return bad(format!("density {rho} gives {n} bins for {} targets", self.k_targets));
            }
        }
        let widest = self.schemes.iter().map(|s| s.order()).max().unwrap_or(1);
        if widest * self.k_targets > self.radar.m_samples() {
            return bad(format!(
                "K·I = {} exceeds the {} samples",
                widest * self.k_targets,
                self.radar.m_samples()
            ));
        }
        if let Some(sep) = self.min_separation {
            if sep.is_nan() || sep < 0.0 || sep * self.k_targets as f64 > self.radar.m_samples() as f64 {
                return bad(format!("min_separation {sep} is infeasible"));
            }
        }
        Ok(())
    }

    /// Cells in canonical order: schemes, then channels, then densities, each
    /// in configuration order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &channel in &self.channels {
                for &rho in &self.densities {
                    out.push(Cell {
                        scheme,
                        channel,
                        rho,
                        n_bins: self.n_bins(rho),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub scheme: InterpolationScheme,
    pub channel: ChannelKind,
    pub rho: f64,
    pub n_bins: usize,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/N={}", self.scheme, self.channel, self.n_bins)
    }
}

/// Everything a trial needs; shared read-only by workers.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub radar: RadarConfig,
    pub k_targets: usize,
    pub channel: ChannelKind,
    pub dict: Arc<InterpolatedDictionary>,
    pub master_seed: u64,
    pub min_separation: Option<f64>,
}

impl TrialContext {
    pub fn new(
        radar: RadarConfig,
        k_targets: usize,
        scheme: InterpolationScheme,
        channel: ChannelKind,
        n_bins: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let dict = Arc::new(build_dictionary(&radar, n_bins, scheme)?);
        Ok(Self {
            radar,
            k_targets,
            channel,
            dict,
            master_seed,
            min_separation: None,
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` for a given master seed, target count and sample
/// count: a SplitMix64 chain over the four words.
pub fn trial_seed(master_seed: u64, k_targets: usize, m_samples: usize, trial: usize) -> u64 {
    [k_targets as u64, m_samples as u64, trial as u64]
        .iter()
        .fold(splitmix64(master_seed), |h, &w| splitmix64(h ^ w))
}

/// The random stream of one trial.
pub fn trial_rng(ctx: &TrialContext, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(ctx.master_seed, ctx.k_targets, ctx.radar.m_samples(), trial))
}

/// One Monte-Carlo realization: scene, measurement, QCOMP, metrics.
pub fn run_trial(ctx: &TrialContext, trial: usize) -> Result<TrialOutcome> {
    let mut rng = trial_rng(ctx, trial);
    let scene = sample_scene_separated(&ctx.radar, ctx.k_targets, ctx.min_separation, &mut rng)?;
    run_trial_on_scene(ctx, &scene, &mut rng)
}

/// Runs a trial on a given scene; `rng` only feeds the dither.
pub fn run_trial_on_scene(ctx: &TrialContext, scene: &Scene, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let y = synthesize(&ctx.radar, scene);
    let channel = match ctx.channel {
        ChannelKind::Full => MeasurementChannel::FullResolution,
        ChannelKind::OneBit => MeasurementChannel::one_bit(choose_delta(&y)?)?,
        ChannelKind::OneBitDither => {
            let delta = choose_delta(&y)?;
            MeasurementChannel::one_bit_dithered(draw_dither(delta, ctx.radar.m_samples(), rng))
        }
    };
    let z = channel.apply(&y)?;
    let problem = SolverProblem::new(z, channel, &ctx.dict, scene.len())?;
    let (estimates, trace) = qcomp(&problem)?;
    let v_hat: Vec<f64> = estimates.iter().map(|e| e.velocity).collect();
    let pairing = pair_estimates(&v_hat, &scene.velocities(), &ctx.radar)?;
    let residue = residue_metric(&problem.channel, &problem.z, &trace.final_reconstruction)?;
    Ok(TrialOutcome::new(pairing, residue))
}

/// Runs `trials` trials of one cell, in trial order.
pub fn run_cell(ctx: &TrialContext, trials: usize, label: &str) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(ctx, t).map_err(|e| QcompError::TrialFailed {
                cell: label.to_string(),
                trial: t,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Summary of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: InterpolationScheme,
    pub channel: ChannelKind,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    pub trials: usize,
    pub seed: u64,
    pub avg_error: f64,
    pub miss_rate: f64,
    pub avg_hit_error: Option<f64>,
    pub avg_residue: f64,
    pub wall_time_ms: u64,
}

/// Runs every cell of the sweep; rows follow [`ExperimentConfig::cells`].
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| QcompError::InvalidExperiment(format!("thread pool: {e}")))?;
    let mut dictionaries: HashMap<(InterpolationScheme, usize), Arc<InterpolatedDictionary>> = HashMap::new();
    let mut rows = Vec::new();
    for cell in cfg.cells() {
        let start = Instant::now();
        let dict = match dictionaries.get(&(cell.scheme, cell.n_bins)) {
            Some(d) => d.clone(),
            None => {
                let d = Arc::new(build_dictionary(&cfg.radar, cell.n_bins, cell.scheme)?);
                dictionaries.insert((cell.scheme, cell.n_bins), d.clone());
                d
            }
        };
        let ctx = TrialContext {
            radar: cfg.radar,
            k_targets: cfg.k_targets,
            channel: cell.channel,
            dict,
            master_seed: cfg.master_seed,
            min_separation: cfg.min_separation,
        };
        let label = cell.to_string();
        let outcomes = pool.install(|| run_cell(&ctx, cfg.trials, &label))?;
        let summary = aggregate(&outcomes)?;
        rows.push(ResultRow {
            scheme: cell.scheme,
            channel: cell.channel,
            k: cfg.k_targets,
            m: cfg.radar.m_samples(),
            n: cell.n_bins,
            rho: cell.rho,
            trials: cfg.trials,
            seed: cfg.master_seed,
            avg_error: summary.avg_error,
            miss_rate: summary.miss_rate,
            avg_hit_error: summary.avg_hit_error,
            avg_residue: summary.avg_residue,
            wall_time_ms: if cfg.record_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
    }
    Ok(rows)
}

/// Formats `x` as a plain decimal with 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let split = (exp + 1) as usize;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

fn round_sig9(x: f64) -> f64 {
    if x.is_finite() {
        format_sig9(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

impl ResultRow {
    /// Copy with every real-valued field rounded to 9 significant digits, as
    /// it appears in emitted files.
    pub fn rounded(&self) -> ResultRow {
        ResultRow {
            rho: round_sig9(self.rho),
            avg_error: round_sig9(self.avg_error),
            miss_rate: round_sig9(self.miss_rate),
            avg_hit_error: self.avg_hit_error.map(round_sig9),
            avg_residue: round_sig9(self.avg_residue),
            ..self.clone()
        }
    }

    fn csv_record(&self) -> [String; 13] {
        [
            self.scheme.name().to_string(),
            self.channel.name().to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            format_sig9(self.rho),
            self.trials.to_string(),
            self.seed.to_string(),
            format_sig9(self.avg_error),
            format_sig9(self.miss_rate),
            self.avg_hit_error.map(format_sig9).unwrap_or_default(),
            format_sig9(self.avg_residue),
            self.wall_time_ms.to_string(),
        ]
    }
}

/// Writes rows as CSV (header first) or as a JSON array.
pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(QcompError::InvalidExperiment("no rows to emit".into()));
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for row in rows {
                w.write_record(row.csv_record())?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let rounded: Vec<ResultRow> = rows.iter().map(ResultRow::rounded).collect();
            serde_json::to_writer_pretty(&mut out, &rounded)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes rows to `path`.
pub fn emit(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parses CSV or JSON produced by [`write_rows`].
pub fn parse_rows(text: &str, format: OutputFormat) -> Result<Vec<ResultRow>> {
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
            if header != CSV_HEADER {
                return Err(QcompError::InvalidExperiment(format!(
                    "unexpected CSV header {header:?}"
                )));
            }
            r.deserialize().map(|row| row.map_err(QcompError::from)).collect()
        }
        OutputFormat::Json => Ok(serde_json::from_str(text)?),
    }
}
