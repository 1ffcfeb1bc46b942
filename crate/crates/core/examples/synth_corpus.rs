//! Generate a seeded corpus with additive noise, save it and read it back.
//!
//! ```text
//! cargo run --example synth_corpus -- /tmp/corpus
//! ```

use std::path::PathBuf;

use prm_decode::codec::EncodingConfig;
use prm_decode::decoders::decode_onehot;
use prm_decode::synth::{gen_landmarks, Corpus, NoiseSpec, REALISTIC_NOISE};

fn main() -> prm_decode::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("prm-decode-corpus"));

    let cfg = EncodingConfig::new(4, 2.0, 64, 64);
    let landmarks = gen_landmarks(100, cfg.image_dims(), 42)?;
    let corpus = Corpus::generate(&landmarks, &cfg, &NoiseSpec::additive(REALISTIC_NOISE, 42))?;
    corpus.save(&dir)?;

    let back = Corpus::load(&dir)?;
    let mean_err: f64 = back
        .items
        .iter()
        .map(|item| {
            let d = decode_onehot(&item.stack.maps()[0]).expect("noisy maps keep a peak");
            d.to_landmark(f64::from(cfg.lambda)).distance(&item.landmark)
        })
        .sum::<f64>()
        / back.len() as f64;
    println!(
        "{} items in {}; argmax error {:.3} px",
        back.len(),
        dir.display(),
        mean_err
    );
    Ok(())
}
