//! Accuracy sweeps and decode-throughput measurement.
//!
//! Synthetic corpora have no interocular distance, so NME is normalised by
//! the input image width; every report header says so. Timing covers decode
//! calls only, over heatmaps that are already in memory.

use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{EncodingConfig, Heatmap, Landmark};
use crate::decoders::{decode, DecodeConfig, DecoderKind};
use crate::error::{config, domain, Error, Result};
use crate::metrics::{combined_loss_with, ma_loss_with, mse_loss, LossValue, MaskSource};
use crate::synth::{gen_landmarks, Corpus, NoiseSpec};

/// Heatmap sides evaluated by default.
pub const DEFAULT_RESOLUTIONS: [usize; 5] = [64, 32, 16, 8, 4];

/// A timed repetition shorter than this is re-run over a repeated batch.
pub const MIN_REPETITION_TIME: Duration = Duration::from_millis(20);

pub const NORMALIZER_NOTE: &str = "NME normalised by input image width (synthetic corpus, no interocular distance)";

/// Where sweep inputs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusSource {
    /// Fresh landmarks in a square `image_size` image, re-encoded per resolution.
    Generate {
        count: usize,
        image_size: u32,
        seed: u64,
        #[serde(default)]
        noise: NoiseSpec,
    },
    /// A corpus directory written by `Corpus::save`; fixes the resolution.
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// Square heatmap sides.
    pub resolutions: Vec<usize>,
    pub decoders: Vec<DecoderKind>,
    pub corpus: CorpusSource,
    pub decode_cfg: DecodeConfig,
    /// Timed repetitions; the first is a discarded warm-up.
    pub repetitions: usize,
    /// Decode items on the rayon pool instead of one thread.
    pub parallel: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            decoders: DecoderKind::ALL.to_vec(),
            corpus: CorpusSource::Generate {
                count: 1000,
                image_size: 256,
                seed: 0,
                noise: NoiseSpec::none(),
            },
            decode_cfg: DecodeConfig::default(),
            repetitions: 3,
            parallel: false,
        }
    }
}

impl SweepSpec {
    /// 64×64 heatmaps from 256-pixel inputs, the setting of the throughput
    /// comparison.
    pub fn throughput_default() -> Self {
        Self {
            resolutions: vec![64],
            corpus: CorpusSource::Generate {
                count: 2000,
                image_size: 256,
                seed: 0,
                noise: NoiseSpec::none(),
            },
            ..Self::default()
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.corpus {
            CorpusSource::Generate { seed, .. } => Some(*seed),
            CorpusSource::Manifest { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(config("sweep needs at least one resolution"));
        }
        if self.decoders.is_empty() {
            return Err(config("sweep needs at least one decoder"));
        }
        if self.repetitions < 1 {
            return Err(config("repetitions must be >= 1"));
        }
        if self.resolutions.contains(&0) {
            return Err(config("resolution must be positive"));
        }
        self.decode_cfg.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub resolution: usize,
    pub decoder: DecoderKind,
    pub mean_nme: Option<f64>,
    pub std_nme: Option<f64>,
    /// Mean Euclidean error in input-image pixels.
    pub mean_px_error: Option<f64>,
    /// Heatmaps decoded per second.
    #[serde(default)]
    pub decode_throughput: Option<f64>,
    /// Seconds per heatmap.
    #[serde(default)]
    pub mean_latency: Option<f64>,
    pub failures: usize,
    pub items: usize,
    /// How many passes over the corpus made up one timed repetition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_multiplier: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvironment {
    /// Unix seconds.
    pub timestamp: u64,
    pub seed: Option<u64>,
    pub version: String,
    pub normalizer: String,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: ReportEnvironment,
}

impl BenchReport {
    pub fn row(&self, resolution: usize, decoder: DecoderKind) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.resolution == resolution && r.decoder == decoder)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(config(format!("unknown report format '{s}'"))),
        }
    }
}

/// One resolution's worth of preloaded inputs.
struct Prepared {
    resolution: usize,
    lambda: f64,
    normalizer: f64,
    truth: Vec<Landmark>,
    maps: Vec<Heatmap>,
}

fn environment(spec: &SweepSpec) -> ReportEnvironment {
    ReportEnvironment {
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: spec.seed(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        normalizer: NORMALIZER_NOTE.to_owned(),
        parallel: spec.parallel,
    }
}

fn prepare(spec: &SweepSpec) -> Result<Vec<Prepared>> {
    match &spec.corpus {
        CorpusSource::Generate {
            count,
            image_size,
            seed,
            noise,
        } => {
            let size = f64::from(*image_size);
            let landmarks = gen_landmarks(*count, (size, size), *seed)?;
            spec.resolutions
                .iter()
                .map(|&res| {
                    if !(*image_size as usize).is_multiple_of(res) {
                        return Err(config(format!(
                            "image size {image_size} is not a multiple of resolution {res}"
                        )));
                    }
                    let lambda = *image_size / res as u32;
                    let cfg = EncodingConfig::new(lambda, spec.decode_cfg.sigma, res, res);
                    let corpus = Corpus::generate(&landmarks, &cfg, noise)?;
                    Ok(from_corpus(res, size, corpus))
                })
                .collect()
        }
        CorpusSource::Manifest { path } => {
            let corpus = Corpus::load(path)?;
            let res = corpus.cfg.heatmap_w;
            if corpus.cfg.heatmap_h != res || spec.resolutions != [res] {
                return Err(config(format!(
                    "corpus at {} is {}x{}; the sweep must request exactly that resolution",
                    path.display(),
                    corpus.cfg.heatmap_h,
                    corpus.cfg.heatmap_w
                )));
            }
            let width = corpus.cfg.image_dims().0;
            Ok(vec![from_corpus(res, width, corpus)])
        }
    }
}

fn from_corpus(resolution: usize, normalizer: f64, corpus: Corpus) -> Prepared {
    let lambda = f64::from(corpus.cfg.lambda);
    let (truth, maps) = corpus
        .items
        .into_iter()
        .flat_map(|item| {
            let lm = item.landmark;
            item.stack.maps().to_vec().into_iter().map(move |m| (lm, m))
        })
        .unzip();
    Prepared {
        resolution,
        lambda,
        normalizer,
        truth,
        maps,
    }
}

fn accuracy_row(prep: &Prepared, kind: DecoderKind, cfg: &DecodeConfig, parallel: bool) -> BenchRow {
    let score = |(map, truth): (&Heatmap, &Landmark)| {
        decode(kind, map, cfg)
            .ok()
            .map(|d| d.to_landmark(prep.lambda).distance(truth))
    };
    let errors: Vec<Option<f64>> = if parallel {
        prep.maps.par_iter().zip(prep.truth.par_iter()).map(score).collect()
    } else {
        prep.maps.iter().zip(prep.truth.iter()).map(score).collect()
    };
    let px: Vec<f64> = errors.iter().flatten().copied().collect();
    let failures = errors.len() - px.len();
    let (mean_px, mean_nme, std_nme) = if px.is_empty() {
        (None, None, None)
    } else {
        let n = px.len() as f64;
        let mean_px = px.iter().sum::<f64>() / n;
        let nmes: Vec<f64> = px.iter().map(|e| e / prep.normalizer).collect();
        let mean = nmes.iter().sum::<f64>() / n;
        let var = nmes.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        (Some(mean_px), Some(mean), Some(var.sqrt()))
    };
    BenchRow {
        resolution: prep.resolution,
        decoder: kind,
        mean_nme,
        std_nme,
        mean_px_error: mean_px,
        decode_throughput: None,
        mean_latency: None,
        failures,
        items: errors.len(),
        batch_multiplier: None,
    }
}

/// Decodes every corpus item with every requested decoder at every requested
/// resolution. Per-item decoder failures are counted, not fatal.
pub fn run_accuracy_sweep(spec: &SweepSpec) -> Result<BenchReport> {
    spec.validate()?;
    let prepared = prepare(spec)?;
    let mut rows = Vec::with_capacity(prepared.len() * spec.decoders.len());
    for prep in &prepared {
        for &kind in &spec.decoders {
            rows.push(accuracy_row(prep, kind, &spec.decode_cfg, spec.parallel));
        }
    }
    Ok(BenchReport {
        rows,
        environment: environment(spec),
    })
}

fn timed_pass(maps: &[Heatmap], kind: DecoderKind, cfg: &DecodeConfig, passes: usize, parallel: bool) -> Duration {
    let start = Instant::now();
    for _ in 0..passes {
        if parallel {
            maps.par_iter().for_each(|m| {
                let _ = black_box(decode(kind, black_box(m), cfg));
            });
        } else {
            for m in maps {
                let _ = black_box(decode(kind, black_box(m), cfg));
            }
        }
    }
    start.elapsed()
}

/// Wall-clock decode throughput per decoder. The first repetition is a
/// warm-up; if it is shorter than [`MIN_REPETITION_TIME`] each repetition
/// loops over the corpus several times and the row records the multiplier.
pub fn run_throughput(spec: &SweepSpec) -> Result<BenchReport> {
    spec.validate()?;
    if spec.repetitions < 3 {
        return Err(config(format!(
            "throughput needs at least 3 repetitions (first is warm-up), got {}",
            spec.repetitions
        )));
    }
    let prepared = prepare(spec)?;
    let mut rows = Vec::new();
    for prep in &prepared {
        if prep.maps.is_empty() {
            return Err(domain("throughput corpus is empty"));
        }
        for &kind in &spec.decoders {
            let mut row = accuracy_row(prep, kind, &spec.decode_cfg, spec.parallel);
            let warmup = timed_pass(&prep.maps, kind, &spec.decode_cfg, 1, spec.parallel);
            let multiplier = if warmup < MIN_REPETITION_TIME {
                let ratio = MIN_REPETITION_TIME.as_secs_f64() / warmup.as_secs_f64().max(1e-9);
                (ratio.ceil() as usize).clamp(1, 1_000_000)
            } else {
                1
            };
            let mut total = Duration::ZERO;
            for _ in 1..spec.repetitions {
                total += timed_pass(&prep.maps, kind, &spec.decode_cfg, multiplier, spec.parallel);
            }
            let decoded = (prep.maps.len() * multiplier * (spec.repetitions - 1)) as f64;
            let secs = total.as_secs_f64().max(f64::MIN_POSITIVE);
            row.decode_throughput = Some(decoded / secs);
            row.mean_latency = Some(secs / decoded);
            row.batch_multiplier = Some(multiplier);
            rows.push(row);
        }
    }
    Ok(BenchReport {
        rows,
        environment: environment(spec),
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Serialises a report. CSV columns are fixed: `resolution, decoder,
/// mean_nme, std_nme, mean_px_error, throughput, latency, failures`.
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(domain("report has no rows"));
    }
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "resolution",
                "decoder",
                "mean_nme",
                "std_nme",
                "mean_px_error",
                "throughput",
                "latency",
                "failures",
            ])?;
            for r in &report.rows {
                w.write_record([
                    r.resolution.to_string(),
                    r.decoder.to_string(),
                    fmt_opt(r.mean_nme),
                    fmt_opt(r.std_nme),
                    fmt_opt(r.mean_px_error),
                    fmt_opt(r.decode_throughput),
                    fmt_opt(r.mean_latency),
                    r.failures.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let env = &report.environment;
            let mut out = format!(
                "<!-- version {} | seed {} | {} -->\n\n",
                env.version,
                env.seed.map(|s| s.to_string()).unwrap_or_else(|| "n/a".into()),
                env.normalizer
            );
            out.push_str(
                "| resolution | decoder | NME (%) | std | px error | heatmaps/s | latency (ms) | failures |\n",
            );
            out.push_str("|---:|:---|---:|---:|---:|---:|---:|---:|\n");
            let cell = |x: Option<f64>, scale: f64, digits: usize| {
                x.map(|v| format!("{:.*}", digits, v * scale))
                    .unwrap_or_else(|| "-".into())
            };
            for r in &report.rows {
                out.push_str(&format!(
                    "| {0}x{0} | {1} | {2} | {3} | {4} | {5} | {6} | {7} |\n",
                    r.resolution,
                    r.decoder,
                    cell(r.mean_nme, 100.0, 4),
                    cell(r.std_nme, 100.0, 4),
                    cell(r.mean_px_error, 1.0, 4),
                    cell(r.decode_throughput, 1.0, 1),
                    cell(r.mean_latency, 1e3, 4),
                    r.failures
                ));
            }
            Ok(out)
        }
    }
}

/// Losses between a predicted and a ground-truth corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub items: usize,
    pub k: usize,
    pub weight: f64,
    pub mask_source: MaskSource,
    pub mse: LossValue,
    pub ma: LossValue,
    pub combined: LossValue,
}

/// Pools every heatmap of both corpora into one stack pair and evaluates
/// the MSE, anchor and combined losses.
pub fn evaluate_losses(pred: &Corpus, gt: &Corpus, k: usize, weight: f64, source: MaskSource) -> Result<LossReport> {
    if pred.len() != gt.len() {
        return Err(domain(format!(
            "corpora differ in size: pred {}, gt {}",
            pred.len(),
            gt.len()
        )));
    }
    let pool = |c: &Corpus| {
        let maps = c.items.iter().flat_map(|i| i.stack.maps().iter().cloned()).collect();
        crate::synth::HeatmapStack::new(maps)
    };
    let (p, g) = (pool(pred)?, pool(gt)?);
    Ok(LossReport {
        items: pred.len(),
        k,
        weight,
        mask_source: source,
        mse: mse_loss(&p, &g)?,
        ma: ma_loss_with(&p, &g, k, source)?,
        combined: combined_loss_with(&p, &g, k, weight, source)?,
    })
}
