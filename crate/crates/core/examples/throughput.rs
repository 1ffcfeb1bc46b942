//! Heatmaps per second for every decoder on 64×64 maps.
//!
//! ```text
//! cargo run --release --example throughput -- 2000
//! ```

use prm_decode::bench::{emit_report, run_throughput, CorpusSource, ReportFormat, SweepSpec};

fn main() -> prm_decode::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let mut spec = SweepSpec::throughput_default();
    if let CorpusSource::Generate { count: c, .. } = &mut spec.corpus {
        *c = count;
    }
    let report = run_throughput(&spec)?;
    print!("{}", emit_report(&report, ReportFormat::Markdown)?);
    Ok(())
}
