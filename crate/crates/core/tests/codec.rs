mod common;

use proptest::prelude::*;

use prm_decode::codec::{
    distance_transform, encode, encode_biased, encode_unbiased, pseudo_range, quantize, EncodingConfig, EncodingMode,
    Heatmap, Landmark, ACTIVATION_FLOOR,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn distance_matches_geometry(u in 0.0f64..128.0, v in 0.0f64..128.0, sigma in 0.5f64..4.0) {
        let cfg = EncodingConfig::new(8, sigma, 16, 16);
        let map = encode_unbiased(&Landmark::new(u, v), &cfg).unwrap();
        let dmap = distance_transform(&map, sigma).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                if map.get(i, j) > ACTIVATION_FLOOR {
                    let r = (j as f64 - u / 8.0).hypot(i as f64 - v / 8.0);
                    prop_assert!((dmap.get(i, j) - r).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pseudo_range_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, sigma in 0.1f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(pseudo_range(lo, sigma) >= pseudo_range(hi, sigma));
        prop_assert!(pseudo_range(lo, sigma) >= 0.0);
    }

    #[test]
    fn encoding_is_deterministic(u in 0.0f64..64.0, v in 0.0f64..64.0) {
        let cfg = EncodingConfig::new(4, 2.0, 16, 16);
        let lm = Landmark::new(u, v);
        prop_assert_eq!(encode_unbiased(&lm, &cfg).unwrap(), encode_unbiased(&lm, &cfg).unwrap());
    }

    #[test]
    fn on_node_modes_agree(i in 0u32..16, j in 0u32..16, lambda in 1u32..9) {
        let cfg = EncodingConfig::new(lambda, 2.0, 16, 16);
        let lm = Landmark::new(f64::from(j * lambda), f64::from(i * lambda));
        let unbiased = encode_unbiased(&lm, &cfg).unwrap();
        let biased = encode_biased(&lm, &cfg).unwrap();
        prop_assert_eq!(unbiased.values(), biased.values());
        prop_assert_eq!(unbiased.get(i as usize, j as usize), 1.0);
    }

    #[test]
    fn binary_container_roundtrip(u in 0.0f64..32.0, v in 0.0f64..32.0) {
        let cfg = EncodingConfig::new(4, 1.5, 8, 8);
        let map = encode_unbiased(&Landmark::new(u, v), &cfg).unwrap();
        let mut buf = Vec::new();
        map.write_binary(&mut buf).unwrap();
        let back = Heatmap::from_binary_bytes(&buf).unwrap();
        prop_assert_eq!(back.values(), map.values());
        let meta = back.meta().unwrap();
        prop_assert_eq!((meta.sigma, meta.lambda), (1.5, 4.0));
    }
}

#[test]
fn quantisation_error_is_a_quarter_pixel() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let (u, v) = (rng.random_range(0.0..128.0) / 8.0, rng.random_range(0.0..128.0) / 8.0);
        sum += (quantize(u) - u).abs() + (quantize(v) - v).abs();
    }
    let mean = sum / (2 * n) as f64;
    // uniform rounding error has mean 1/4 and standard deviation 1/√48
    let tolerance = 4.0 * (1.0 / 48f64).sqrt() / ((2 * n) as f64).sqrt();
    assert!((mean - 0.25).abs() < tolerance, "mean {mean}");
}

#[test]
fn biased_peak_sits_on_the_rounded_cell() {
    let cfg = EncodingConfig::new(8, 2.0, 8, 8).with_mode(EncodingMode::Biased);
    let map = encode(&Landmark::new(10.37, 22.81), &cfg).unwrap();
    assert_eq!(map.argmax(), 3 * 8 + 1);
    assert_eq!(map.max_value(), 1.0);
}

#[test]
fn matches_reference_gaussian() {
    let cfg = EncodingConfig::new(8, 2.0, 8, 8);
    let map = encode_unbiased(&Landmark::new(10.37, 22.81), &cfg).unwrap();
    let reference = common::gaussian(8, 8, 1.29625, 2.85125, 2.0);
    for (a, b) in map.values().iter().zip(reference.values()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn json_and_binary_files_load_alike() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EncodingConfig::new(4, 2.0, 8, 8);
    let map = encode_unbiased(&Landmark::new(13.2, 9.9), &cfg).unwrap();
    let (bin, json) = (dir.path().join("m.hmap"), dir.path().join("m.json"));
    map.save(&bin).unwrap();
    map.save(&json).unwrap();
    let (a, b) = (Heatmap::load(&bin).unwrap(), Heatmap::load(&json).unwrap());
    assert_eq!(a.values(), map.values());
    assert_eq!(b.values(), map.values());
}

#[test]
fn truncated_container_is_rejected() {
    let cfg = EncodingConfig::new(4, 2.0, 4, 4);
    let map = encode_unbiased(&Landmark::new(5.0, 5.0), &cfg).unwrap();
    let mut buf = Vec::new();
    map.write_binary(&mut buf).unwrap();
    assert!(Heatmap::from_binary_bytes(&buf[..buf.len() - 3]).is_err());
    assert!(Heatmap::from_binary_bytes(b"NOPE").is_err());
}
