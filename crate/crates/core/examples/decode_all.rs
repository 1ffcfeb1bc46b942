//! Run all six decoders on one heatmap and compare them with the truth.
//!
//! ```text
//! cargo run --example decode_all -- 10.37 22.81
//! ```

use prm_decode::codec::{encode_unbiased, EncodingConfig, Landmark};
use prm_decode::decoders::{decode, DecodeConfig, DecoderKind};

fn main() -> prm_decode::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<f64>().expect("coordinates are numbers"));
    let u = args.next().unwrap_or(10.37);
    let v = args.next().unwrap_or(22.81);

    let enc = EncodingConfig::new(8, 2.0, 8, 8);
    let truth = Landmark::new(u, v);
    let map = encode_unbiased(&truth, &enc)?;
    let cfg = DecodeConfig::default();

    println!("{:<8} {:>9} {:>9} {:>11}", "decoder", "u (px)", "v (px)", "error (px)");
    for kind in DecoderKind::ALL {
        let d = decode(kind, &map, &cfg)?;
        let lm = d.to_landmark(f64::from(enc.lambda));
        println!("{:<8} {:>9.4} {:>9.4} {:>11.2e}", kind, lm.u, lm.v, lm.distance(&truth));
    }
    Ok(())
}
