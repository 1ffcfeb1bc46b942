mod common;

use proptest::prelude::*;

use prm_decode::anchors::select_anchors;
use prm_decode::codec::{distance_transform, encode_unbiased, EncodingConfig, Landmark};
use prm_decode::decoders::{
    decode, decode_igno, decode_least_squares, decode_onehot, objective_eval, objective_eval_parallel, prm_objective,
    CandidateGrid, DecodeConfig, DecoderKind,
};
use prm_decode::synth::gen_landmarks;

const TRUE_U: f64 = 1.29625;
const TRUE_V: f64 = 2.85125;

fn reference_map() -> prm_decode::codec::Heatmap {
    encode_unbiased(&Landmark::new(10.37, 22.81), &EncodingConfig::new(8, 2.0, 8, 8)).unwrap()
}

#[test]
fn reference_landmark_through_every_decoder() {
    let map = reference_map();
    let cfg = DecodeConfig::default();

    let onehot = decode(DecoderKind::Onehot, &map, &cfg).unwrap();
    assert_eq!((onehot.u, onehot.v), (1.0, 3.0));
    assert!(((TRUE_U - onehot.u).abs() - 0.29625).abs() < 1e-12);
    assert!(((TRUE_V - onehot.v).abs() - 0.14875).abs() < 1e-12);

    for kind in [DecoderKind::Lsq, DecoderKind::Igno, DecoderKind::Taylor] {
        let d = decode(kind, &map, &cfg).unwrap();
        assert!(
            (d.u - TRUE_U).abs() < 1e-6 && (d.v - TRUE_V).abs() < 1e-6,
            "{kind}: {d:?}"
        );
    }
    let igno = decode(DecoderKind::Igno, &map, &cfg).unwrap();
    assert!(igno.objective.unwrap() < 1e-12);
    assert_eq!(igno.converged, Some(true));

    let grid = decode(DecoderKind::Pppsc, &map, &cfg).unwrap();
    let (u, v) = common::scan_grid(&map, cfg.sigma, cfg.k, cfg.tau, cfg.window);
    assert_eq!((grid.u, grid.v), (u, v));
    assert!((grid.u - 1.3).abs() < 1e-12 && (grid.v - 2.9).abs() < 1e-12);
    assert!((grid.u - TRUE_U).abs() <= 0.05 && (grid.v - TRUE_V).abs() <= 0.05);
}

#[test]
fn gauss_newton_agrees_with_closed_form() {
    let map = reference_map();
    let dmap = distance_transform(&map, 2.0).unwrap();
    let anchors = select_anchors(&map, &dmap, 10).unwrap();
    let cfg = DecodeConfig::default();
    let lsq = decode_least_squares(&anchors).unwrap();
    let start = decode_onehot(&map).unwrap();
    let gn = decode_igno(&anchors, &cfg, &start).unwrap();
    assert!((gn.u - lsq.u).abs() < 1e-8 && (gn.v - lsq.v).abs() < 1e-8);
    assert!(prm_objective(&anchors, gn.u, gn.v) <= prm_objective(&anchors, start.u, start.v));
}

#[test]
fn twohot_beats_onehot_on_average() {
    let enc = EncodingConfig::new(16, 2.0, 16, 16);
    let cfg = DecodeConfig::default();
    let (mut one, mut two) = (0.0, 0.0);
    for lm in gen_landmarks(1000, enc.image_dims(), 21).unwrap() {
        let map = encode_unbiased(&lm, &enc).unwrap();
        let truth = Landmark::new(lm.u / 16.0, lm.v / 16.0);
        let a = decode(DecoderKind::Onehot, &map, &cfg).unwrap();
        let b = decode(DecoderKind::Twohot, &map, &cfg).unwrap();
        one += Landmark::new(a.u, a.v).distance(&truth);
        two += Landmark::new(b.u, b.v).distance(&truth);
    }
    assert!(two < one, "twohot {two} vs onehot {one}");
}

#[test]
fn parallel_scoring_is_exact() {
    let map = common::gaussian(32, 32, 17.42, 9.07, 2.0);
    let dmap = distance_transform(&map, 2.0).unwrap();
    let anchors = select_anchors(&map, &dmap, 10).unwrap();
    let grid = CandidateGrid::around(17.0, 9.0, 20, 2.0, 32, 32);
    assert_eq!(
        objective_eval(&grid, &anchors),
        objective_eval_parallel(&grid, &anchors)
    );
}

#[test]
fn all_zero_map_is_rejected_by_every_decoder() {
    let map = prm_decode::codec::Heatmap::new(4, 4, vec![0.0; 16]).unwrap();
    for kind in DecoderKind::ALL {
        assert!(decode(kind, &map, &DecodeConfig::default()).is_err(), "{kind}");
    }
}

proptest! {
    #[test]
    fn noiseless_decoders_are_consistent(u in 30.0f64..226.0, v in 30.0f64..226.0) {
        let enc = EncodingConfig::new(4, 2.0, 64, 64);
        let map = encode_unbiased(&Landmark::new(u, v), &enc).unwrap();
        let cfg = DecodeConfig::default();
        let (tu, tv) = (u / 4.0, v / 4.0);
        for kind in [DecoderKind::Lsq, DecoderKind::Igno, DecoderKind::Taylor] {
            let d = decode(kind, &map, &cfg).unwrap();
            prop_assert!((d.u - tu).abs() < 1e-6 && (d.v - tv).abs() < 1e-6);
        }
        // the objective is anisotropic, so the best candidate can sit one
        // step away from the nearest one on an axis
        let grid = decode(DecoderKind::Pppsc, &map, &cfg).unwrap();
        prop_assert!((grid.u - tu).abs() < 0.1 && (grid.v - tv).abs() < 0.1);
    }

    #[test]
    fn grid_stays_inside_the_map(
        cu in 0usize..12, cv in 0usize..12, tau in 1u32..12, window in 0.1f64..3.0,
    ) {
        let grid = CandidateGrid::around(cu as f64, cv as f64, tau, window, 12, 12);
        prop_assert!(!grid.is_empty());
        for (u, v) in grid.points() {
            prop_assert!((-0.5..=11.5).contains(&u) && (-0.5..=11.5).contains(&v));
            prop_assert!((u - cu as f64).abs() <= window + 1e-9 && (v - cv as f64).abs() <= window + 1e-9);
        }
    }

    #[test]
    fn grid_decoder_matches_scan_on_noisy_maps(
        noise in prop::collection::vec(0.0f64..0.05, 256), u in 2.0f64..13.0, v in 2.0f64..13.0,
    ) {
        let clean = common::gaussian(16, 16, u, v, 2.0);
        let values: Vec<f64> = clean.values().iter().zip(&noise).map(|(a, b)| a + b).collect();
        let map = prm_decode::codec::Heatmap::new(16, 16, values).unwrap();
        let cfg = DecodeConfig::default();
        let got = decode(DecoderKind::Pppsc, &map, &cfg).unwrap();
        let (su, sv) = common::scan_grid(&map, cfg.sigma, cfg.k, cfg.tau, cfg.window);
        prop_assert_eq!((got.u.to_bits(), got.v.to_bits()), (su.to_bits(), sv.to_bits()));
    }
}
