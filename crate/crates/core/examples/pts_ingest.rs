//! Read a `.pts` annotation and show how malformed files are reported.

use std::path::Path;

use prm_decode::synth::{load_pts, parse_pts};

fn main() -> prm_decode::Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/face68.pts");
    let record = load_pts(&fixture)?;
    println!(
        "{} landmarks from {}",
        record.landmarks.len(),
        record.source_path.display()
    );
    for (i, lm) in record.landmarks.iter().take(5).enumerate() {
        println!("  {i:2}: ({:.3}, {:.3})", lm.u, lm.v);
    }

    let broken = "version: 1\nn_points: 2\n{\n10 20\n30 x\n}\n";
    if let Err(e) = parse_pts(broken, Path::new("inline.pts")) {
        println!("rejected: {e}");
    }
    Ok(())
}
