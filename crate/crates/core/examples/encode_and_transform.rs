//! Render a landmark as a Gaussian heatmap and invert it back into
//! per-cell distances.

use prm_decode::codec::{distance_transform, encode_biased, encode_unbiased, EncodingConfig, Landmark};

fn main() -> prm_decode::Result<()> {
    let cfg = EncodingConfig::new(8, 2.0, 8, 8);
    let lm = Landmark::new(10.37, 22.81);

    let map = encode_unbiased(&lm, &cfg)?;
    let dmap = distance_transform(&map, cfg.sigma)?;
    println!("heatmap (unbiased, centre at {:.5}, {:.5}):", lm.u / 8.0, lm.v / 8.0);
    for i in 0..map.rows() {
        let row: Vec<String> = (0..map.cols()).map(|j| format!("{:.3}", map.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    println!("distance map:");
    for i in 0..dmap.dims().0 {
        let row: Vec<String> = (0..dmap.dims().1).map(|j| format!("{:5.2}", dmap.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }

    let biased = encode_biased(&lm, &cfg)?;
    let peak = biased.argmax();
    println!(
        "biased peak at row {}, col {}",
        peak / biased.cols(),
        peak % biased.cols()
    );
    Ok(())
}
