//! Plain MSE against the anchor-focused loss on a slightly shifted
//! prediction.

use prm_decode::codec::{encode_unbiased, EncodingConfig, Landmark};
use prm_decode::metrics::{combined_loss, ma_loss, mse_loss, DEFAULT_LOSS_WEIGHT};
use prm_decode::synth::HeatmapStack;

fn main() -> prm_decode::Result<()> {
    let cfg = EncodingConfig::new(4, 2.0, 32, 32);
    let truth = [Landmark::new(40.0, 52.5), Landmark::new(90.2, 61.7)];
    let guess = [Landmark::new(41.5, 51.0), Landmark::new(90.0, 64.0)];

    let gt = HeatmapStack::new(
        truth
            .iter()
            .map(|l| encode_unbiased(l, &cfg))
            .collect::<Result<_, _>>()?,
    )?;
    let pred = HeatmapStack::new(
        guess
            .iter()
            .map(|l| encode_unbiased(l, &cfg))
            .collect::<Result<_, _>>()?,
    )?;

    println!("mse      {:.6}", mse_loss(&pred, &gt)?.value);
    for k in [1, 5, 10, 25] {
        println!("ma k={k:<3} {:.6}", ma_loss(&pred, &gt, k)?.value);
    }
    let combined = combined_loss(&pred, &gt, 10, DEFAULT_LOSS_WEIGHT)?;
    println!("combined {:.6} {:?}", combined.value, combined.components);
    Ok(())
}
