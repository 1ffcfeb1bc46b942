//! Pick the strongest heatmap cells as multilateration anchors.

use prm_decode::anchors::{anchor_mask, select_anchors, DEFAULT_K};
use prm_decode::codec::{distance_transform, encode_unbiased, EncodingConfig, Landmark};

fn main() -> prm_decode::Result<()> {
    let cfg = EncodingConfig::new(8, 2.0, 8, 8);
    let map = encode_unbiased(&Landmark::new(10.37, 22.81), &cfg)?;
    let dmap = distance_transform(&map, cfg.sigma)?;

    let set = select_anchors(&map, &dmap, DEFAULT_K)?;
    for a in set.iter() {
        println!("({}, {})  activation {:.4}  range {:.4}", a.x, a.y, a.activation, a.d);
    }

    let mask = anchor_mask(&map, DEFAULT_K)?;
    for i in 0..mask.dims().0 {
        let row: String = (0..mask.dims().1)
            .map(|j| if mask.get(i, j) { '#' } else { '.' })
            .collect();
        println!("{row}");
    }
    println!("{}", set.to_json().expect("anchors serialise"));
    Ok(())
}
