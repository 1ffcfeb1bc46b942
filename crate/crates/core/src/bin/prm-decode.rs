use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prm_decode::anchors::select_anchors;
use prm_decode::bench::{
    emit_report, evaluate_losses, run_accuracy_sweep, run_throughput, CorpusSource, ReportFormat, SweepSpec,
};
use prm_decode::codec::{distance_transform, EncodingConfig, Heatmap};
use prm_decode::decoders::{decode, DecoderKind};
use prm_decode::metrics::{MaskSource, DEFAULT_LOSS_WEIGHT};
use prm_decode::synth::{gen_landmarks, Corpus, NoiseKind, NoiseSpec};

/// Heatmap landmark decoding toolkit: corpus generation, single-map
/// decoding, accuracy sweeps and throughput benchmarks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Seed for generated corpora (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON sweep configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted (required by `gen`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: json, csv or markdown.
    #[arg(long, global = true, default_value = "json")]
    format: ReportFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic corpus directory.
    Gen(GenArgs),
    /// Decode one heatmap file (.hmap or .json) to a JSON landmark.
    Decode(DecodeArgs),
    /// Accuracy sweep over resolutions and decoders.
    Sweep(SweepArgs),
    /// Decode throughput per decoder.
    Bench(SweepArgs),
    /// MSE / anchor / combined loss between two corpora.
    Losses(LossArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    image_size: u32,
    /// Square heatmap side.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// none, additive_gaussian or peak_jitter.
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
}

#[derive(Args)]
struct DecodeArgs {
    heatmap: PathBuf,
    #[arg(long, default_value = "pppsc")]
    decoder: DecoderKind,
    /// Also print the anchor set used by multilateration decoders.
    #[arg(long)]
    anchors: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Decode items on all cores.
    #[arg(long)]
    parallel: bool,
    /// Read inputs from a corpus directory instead of generating them.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Override the number of generated landmarks.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_LOSS_WEIGHT)]
    weight: f64,
    /// gt or pred.
    #[arg(long, default_value = "gt")]
    mask: String,
}

fn load_spec(cli: &Cli, fallback: SweepSpec) -> Result<SweepSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => fallback,
    };
    if let (Some(s), CorpusSource::Generate { seed, .. }) = (cli.seed, &mut spec.corpus) {
        *seed = s;
    }
    Ok(spec)
}

fn apply_sweep_args(spec: &mut SweepSpec, args: &SweepArgs) -> Result<()> {
    spec.parallel |= args.parallel;
    if let Some(dir) = &args.corpus {
        let corpus = Corpus::load(dir).with_context(|| format!("loading corpus {}", dir.display()))?;
        spec.resolutions = vec![corpus.cfg.heatmap_w];
        spec.corpus = CorpusSource::Manifest { path: dir.clone() };
    }
    if let Some(n) = args.count {
        match &mut spec.corpus {
            CorpusSource::Generate { count, .. } => *count = n,
            CorpusSource::Manifest { .. } => bail!("--count cannot be combined with --corpus"),
        }
    }
    Ok(())
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            let newline = if text.ends_with('\n') { "" } else { "\n" };
            match write!(stdout, "{text}{newline}").and_then(|()| stdout.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.context("writing to stdout"),
            }
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(args) => {
            let out = cli.out.as_deref().context("gen needs --out <dir>")?;
            if args.resolution == 0 || !(args.image_size as usize).is_multiple_of(args.resolution) {
                bail!(
                    "image size {} is not a multiple of resolution {}",
                    args.image_size,
                    args.resolution
                );
            }
            let kind: NoiseKind = serde_json::from_value(serde_json::Value::String(args.noise.clone()))
                .with_context(|| format!("unknown noise kind '{}'", args.noise))?;
            let seed = cli.seed.unwrap_or(0);
            let cfg = EncodingConfig::new(
                args.image_size / args.resolution as u32,
                args.sigma,
                args.resolution,
                args.resolution,
            );
            let size = f64::from(args.image_size);
            let landmarks = gen_landmarks(args.count, (size, size), seed)?;
            let spec = NoiseSpec {
                kind,
                amplitude: args.amplitude,
                seed,
            };
            let corpus = Corpus::generate(&landmarks, &cfg, &spec)?;
            corpus.save(out)?;
            eprintln!("wrote {} items to {}", corpus.len(), out.display());
        }
        Command::Decode(args) => {
            let spec = load_spec(&cli, SweepSpec::default())?;
            let map = Heatmap::load(&args.heatmap).with_context(|| format!("loading {}", args.heatmap.display()))?;
            let mut cfg = spec.decode_cfg;
            if let Some(meta) = map.meta() {
                cfg.sigma = meta.sigma;
            }
            let hit = decode(args.decoder, &map, &cfg)?;
            let mut doc = serde_json::to_value(hit)?;
            if args.anchors {
                let dmap = distance_transform(&map, cfg.sigma)?;
                let set = select_anchors(&map, &dmap, cfg.k.min(map.len()))?;
                doc["anchors"] = serde_json::to_value(set.anchors())?;
            }
            write_out(cli.out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
        }
        Command::Sweep(args) => {
            let mut spec = load_spec(&cli, SweepSpec::default())?;
            apply_sweep_args(&mut spec, args)?;
            let report = run_accuracy_sweep(&spec)?;
            write_out(cli.out.as_deref(), &emit_report(&report, cli.format)?)?;
        }
        Command::Bench(args) => {
            let mut spec = load_spec(&cli, SweepSpec::throughput_default())?;
            apply_sweep_args(&mut spec, args)?;
            let report = run_throughput(&spec)?;
            write_out(cli.out.as_deref(), &emit_report(&report, cli.format)?)?;
        }
        Command::Losses(args) => {
            let source: MaskSource = serde_json::from_value(serde_json::Value::String(args.mask.clone()))
                .with_context(|| format!("unknown mask source '{}'", args.mask))?;
            let pred = Corpus::load(&args.pred).with_context(|| format!("loading {}", args.pred.display()))?;
            let gt = Corpus::load(&args.gt).with_context(|| format!("loading {}", args.gt.display()))?;
            let report = evaluate_losses(&pred, &gt, args.k, args.weight, source)?;
            write_out(cli.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}
