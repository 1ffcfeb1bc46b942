//! Noiseless accuracy of every decoder across heatmap resolutions, as a
//! markdown table.
//!
//! ```text
//! cargo run --release --example accuracy_sweep -- 500
//! ```

use prm_decode::bench::{emit_report, run_accuracy_sweep, CorpusSource, ReportFormat, SweepSpec};

fn main() -> prm_decode::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let mut spec = SweepSpec {
        parallel: true,
        ..SweepSpec::default()
    };
    if let CorpusSource::Generate { count: c, .. } = &mut spec.corpus {
        *c = count;
    }
    let report = run_accuracy_sweep(&spec)?;
    print!("{}", emit_report(&report, ReportFormat::Markdown)?);
    Ok(())
}
