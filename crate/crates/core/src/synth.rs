//! Synthetic corpora and annotation ingestion.
//!
//! All randomness comes from `ChaCha8Rng` seeded through
//! `SeedableRng::seed_from_u64`, so a `(inputs, seed)` pair reproduces the
//! same corpus on every platform. Per-item streams use [`item_seed`] so
//! results do not depend on how work is split across threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{encode_at, encode_unbiased, EncodingConfig, Heatmap, Landmark};
use crate::error::{config, domain, Error, Result};

/// Fraction of each image side kept clear of generated landmarks.
pub const MARGIN_FRACTION: f64 = 0.1;

/// Additive noise level of the "realistic" benchmark tier.
pub const REALISTIC_NOISE: f64 = 0.02;

/// Heatmaps for the landmarks of one sample, all the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapStack {
    maps: Vec<Heatmap>,
    landmark_ids: Vec<String>,
}

impl HeatmapStack {
    /// Stack with ids `"0"`, `"1"`, ...
    pub fn new(maps: Vec<Heatmap>) -> Result<Self> {
        let ids = (0..maps.len()).map(|i| i.to_string()).collect();
        Self::with_ids(maps, ids)
    }

    pub fn with_ids(maps: Vec<Heatmap>, landmark_ids: Vec<String>) -> Result<Self> {
        if maps.len() != landmark_ids.len() {
            return Err(domain(format!(
                "{} heatmaps but {} landmark ids",
                maps.len(),
                landmark_ids.len()
            )));
        }
        if let Some(first) = maps.first() {
            if let Some(bad) = maps.iter().find(|m| m.dims() != first.dims()) {
                return Err(domain(format!(
                    "stack mixes {:?} and {:?} heatmaps",
                    first.dims(),
                    bad.dims()
                )));
            }
        }
        Ok(Self { maps, landmark_ids })
    }

    pub fn maps(&self) -> &[Heatmap] {
        &self.maps
    }

    pub fn landmark_ids(&self) -> &[String] {
        &self.landmark_ids
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// `(rows, cols)` shared by every member, `None` when empty.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.maps.first().map(Heatmap::dims)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    /// i.i.d. Gaussian noise on every activation, then clamped to `[0, 1]`.
    AdditiveGaussian,
    /// Re-encodes with the centre displaced by a Gaussian offset (px).
    PeakJitter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn additive(amplitude: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::AdditiveGaussian,
            amplitude,
            seed,
        }
    }

    pub fn jitter(amplitude: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::PeakJitter,
            amplitude,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind != NoiseKind::None && !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(config(format!(
                "noise amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// Mixes a base seed with an item index (SplitMix64 finaliser).
pub fn item_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform random landmarks inside a 10%-inset margin of a `(W, H)` image.
pub fn gen_landmarks(count: usize, image_dims: (f64, f64), seed: u64) -> Result<Vec<Landmark>> {
    let (width, height) = image_dims;
    if count < 1 {
        return Err(config("landmark count must be >= 1"));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(config(format!("image dims must be positive, got {width}x{height}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u_lo, u_hi) = (MARGIN_FRACTION * width, (1.0 - MARGIN_FRACTION) * width);
    let (v_lo, v_hi) = (MARGIN_FRACTION * height, (1.0 - MARGIN_FRACTION) * height);
    Ok((0..count)
        .map(|_| Landmark::new(rng.random_range(u_lo..=u_hi), rng.random_range(v_lo..=v_hi)))
        .collect())
}

/// Applies `spec` to a heatmap. Deterministic in `spec.seed`.
pub fn perturb(heatmap: &Heatmap, spec: &NoiseSpec) -> Result<Heatmap> {
    spec.validate()?;
    match spec.kind {
        NoiseKind::None => Ok(heatmap.clone()),
        NoiseKind::AdditiveGaussian if spec.amplitude == 0.0 => Ok(heatmap.clone()),
        NoiseKind::AdditiveGaussian => {
            let normal = Normal::new(0.0, spec.amplitude).map_err(|e| config(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let values = heatmap
                .values()
                .iter()
                .map(|&h| (h + normal.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            let noisy = Heatmap::new(heatmap.rows(), heatmap.cols(), values)?;
            Ok(match heatmap.meta() {
                Some(meta) => noisy.with_meta(*meta),
                None => noisy,
            })
        }
        NoiseKind::PeakJitter => {
            let meta = heatmap
                .meta()
                .copied()
                .ok_or_else(|| config("peak jitter needs an encoded heatmap with a known centre"))?;
            let [cu, cv] = meta
                .center
                .ok_or_else(|| config("peak jitter needs an encoded heatmap with a known centre"))?;
            let normal = Normal::new(0.0, spec.amplitude).map_err(|e| config(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let (du, dv) = (normal.sample(&mut rng), normal.sample(&mut rng));
            let cfg = EncodingConfig::new(meta.lambda.max(1.0) as u32, meta.sigma, heatmap.rows(), heatmap.cols());
            let jittered = encode_at(cu + du, cv + dv, &cfg)?;
            let mut new_meta = meta;
            new_meta.center = Some([cu + du, cv + dv]);
            Ok(jittered.with_meta(new_meta))
        }
    }
}

/// Ground truth paired with its (possibly perturbed) heatmaps.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub landmark: Landmark,
    pub stack: HeatmapStack,
}

/// Encodes every landmark without bias, perturbs it with a per-item seed
/// derived from `spec.seed`, and pairs it with its ground truth.
pub fn build_corpus(landmarks: &[Landmark], cfg: &EncodingConfig, spec: &NoiseSpec) -> Result<Vec<CorpusItem>> {
    cfg.validate()?;
    spec.validate()?;
    landmarks
        .par_iter()
        .enumerate()
        .map(|(i, lm)| {
            let clean = encode_unbiased(lm, cfg)?;
            let noise = NoiseSpec {
                seed: item_seed(spec.seed, i as u64),
                ..*spec
            };
            let map = perturb(&clean, &noise)?;
            Ok(CorpusItem {
                landmark: *lm,
                stack: HeatmapStack::new(vec![map])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub landmark: Landmark,
    pub files: Vec<String>,
}

/// `manifest.json` of an on-disk corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub cfg: EncodingConfig,
    pub spec: NoiseSpec,
    pub items: Vec<ManifestItem>,
}

/// A corpus together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub cfg: EncodingConfig,
    pub spec: NoiseSpec,
    pub items: Vec<CorpusItem>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl Corpus {
    pub fn generate(landmarks: &[Landmark], cfg: &EncodingConfig, spec: &NoiseSpec) -> Result<Self> {
        Ok(Self {
            cfg: *cfg,
            spec: *spec,
            items: build_corpus(landmarks, cfg, spec)?,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Writes one `HMAP` file per heatmap plus `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut items = Vec::with_capacity(self.items.len());
        for (i, item) in self.items.iter().enumerate() {
            let mut files = Vec::with_capacity(item.stack.len());
            for (j, map) in item.stack.maps().iter().enumerate() {
                let name = format!("item{i:06}_{j:02}.hmap");
                map.save(&dir.join(&name))?;
                files.push(name);
            }
            items.push(ManifestItem {
                landmark: item.landmark,
                files,
            });
        }
        let manifest = CorpusManifest {
            seed: self.spec.seed,
            cfg: self.cfg,
            spec: self.spec,
            items,
        };
        fs::write(dir.join(MANIFEST_NAME), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reads a corpus directory written by [`Corpus::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: CorpusManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
        let items = manifest
            .items
            .iter()
            .map(|item| {
                let maps = item
                    .files
                    .iter()
                    .map(|f| Heatmap::load(&dir.join(f)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CorpusItem {
                    landmark: item.landmark,
                    stack: HeatmapStack::new(maps)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg: manifest.cfg,
            spec: manifest.spec,
            items,
        })
    }
}

/// Landmarks read from an annotation file.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub source_path: PathBuf,
    pub landmarks: Vec<Landmark>,
    pub image_dims: Option<(f64, f64)>,
}

/// Reads a `.pts` annotation (`version`, `n_points`, braces around
/// 1-indexed `x y` lines) and shifts coordinates to 0-indexed.
pub fn load_pts(path: &Path) -> Result<AnnotationRecord> {
    let text = fs::read_to_string(path)?;
    parse_pts(&text, path)
}

pub fn parse_pts(text: &str, path: &Path) -> Result<AnnotationRecord> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(text.lines().count(), format!("missing '{key}:' header")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.trim_start().strip_prefix(':'))
            .ok_or_else(|| err(no, format!("expected '{key}:' header, found '{line}'")))?;
        Ok((no, value.trim().to_owned()))
    };

    let (no, version) = header("version")?;
    if version.parse::<f64>().is_err() {
        return Err(err(no, format!("version '{version}' is not a number")));
    }
    let (no, count) = header("n_points")?;
    let expected: usize = count
        .parse()
        .map_err(|_| err(no, format!("n_points '{count}' is not a non-negative integer")))?;

    match lines.next() {
        Some((_, "{")) => {}
        Some((no, other)) => return Err(err(no, format!("expected '{{', found '{other}'"))),
        None => return Err(err(no, "missing '{' after header".into())),
    }

    let mut landmarks = Vec::with_capacity(expected);
    let mut last = no;
    loop {
        let Some((no, line)) = lines.next() else {
            return Err(err(
                last,
                format!("missing closing '}}' after {} of {expected} points", landmarks.len()),
            ));
        };
        last = no;
        if line == "}" {
            if landmarks.len() != expected {
                return Err(err(
                    no,
                    format!(
                        "expected {expected} points, found {} ({} short)",
                        landmarks.len(),
                        expected - landmarks.len()
                    ),
                ));
            }
            break;
        }
        if landmarks.len() == expected {
            return Err(err(no, format!("more than the declared {expected} points")));
        }
        let parse = |tok: Option<&str>, axis: &str| -> Result<f64> {
            let tok = tok.ok_or_else(|| err(no, format!("missing {axis} coordinate")))?;
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(no, format!("'{tok}' is not a finite number")))
        };
        let mut toks = line.split_whitespace();
        let x = parse(toks.next(), "x")?;
        let y = parse(toks.next(), "y")?;
        if let Some(extra) = toks.next() {
            return Err(err(no, format!("unexpected token '{extra}'")));
        }
        landmarks.push(Landmark::new(x - 1.0, y - 1.0));
    }
    if let Some((no, line)) = lines.next() {
        return Err(err(no, format!("trailing content '{line}'")));
    }

    Ok(AnnotationRecord {
        source_path: path.to_path_buf(),
        landmarks,
        image_dims: None,
    })
}

/// Renders landmarks in `.pts` form (1-indexed).
pub fn format_pts(landmarks: &[Landmark]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version: 1");
    let _ = writeln!(out, "n_points: {}", landmarks.len());
    out.push_str("{\n");
    for lm in landmarks {
        let _ = writeln!(out, "{} {}", lm.u + 1.0, lm.v + 1.0);
    }
    out.push_str("}\n");
    out
}

pub fn save_pts(path: &Path, landmarks: &[Landmark]) -> Result<()> {
    fs::write(path, format_pts(landmarks))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmarks_are_seeded_and_inset() {
        let a = gen_landmarks(1000, (256.0, 256.0), 7).unwrap();
        assert_eq!(a, gen_landmarks(1000, (256.0, 256.0), 7).unwrap());
        assert_ne!(a, gen_landmarks(1000, (256.0, 256.0), 8).unwrap());
        for lm in &a {
            assert!((25.6..=230.4).contains(&lm.u) && (25.6..=230.4).contains(&lm.v));
        }
        assert!(gen_landmarks(0, (256.0, 256.0), 1).is_err());
        assert!(gen_landmarks(5, (0.0, 256.0), 1).is_err());
    }

    #[test]
    fn landmark_mean_near_centre() {
        let n = 1000;
        let a = gen_landmarks(n, (256.0, 256.0), 11).unwrap();
        let mean_u = a.iter().map(|l| l.u).sum::<f64>() / n as f64;
        let mean_v = a.iter().map(|l| l.v).sum::<f64>() / n as f64;
        // uniform on a 204.8-wide interval: sd = 204.8 / sqrt(12)
        let se = 204.8 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean_u - 128.0).abs() < 3.0 * se);
        assert!((mean_v - 128.0).abs() < 3.0 * se);
    }

    #[test]
    fn identity_noise_is_bit_exact() {
        let cfg = EncodingConfig::new(4, 2.0, 16, 16);
        let map = encode_unbiased(&Landmark::new(30.3, 21.7), &cfg).unwrap();
        assert_eq!(perturb(&map, &NoiseSpec::none()).unwrap(), map);
        assert_eq!(perturb(&map, &NoiseSpec::additive(0.0, 3)).unwrap(), map);
    }

    #[test]
    fn additive_noise_stays_in_unit_range() {
        let cfg = EncodingConfig::new(4, 2.0, 16, 16);
        let map = encode_unbiased(&Landmark::new(30.3, 21.7), &cfg).unwrap();
        let noisy = perturb(&map, &NoiseSpec::additive(0.3, 3)).unwrap();
        assert_ne!(noisy, map);
        assert!(noisy.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(noisy, perturb(&map, &NoiseSpec::additive(0.3, 3)).unwrap());
        assert!(perturb(&map, &NoiseSpec::additive(-1.0, 3)).is_err());
    }

    #[test]
    fn jitter_moves_the_peak() {
        let cfg = EncodingConfig::new(4, 2.0, 16, 16);
        let map = encode_unbiased(&Landmark::new(30.3, 21.7), &cfg).unwrap();
        let moved = perturb(&map, &NoiseSpec::jitter(0.5, 9)).unwrap();
        let [cu, cv] = moved.meta().unwrap().center.unwrap();
        assert!((cu, cv) != (30.3 / 4.0, 21.7 / 4.0));
        let bare = Heatmap::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(perturb(&bare, &NoiseSpec::jitter(0.5, 9)).is_err());
    }

    #[test]
    fn item_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| item_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn pts_minimal() {
        let rec = parse_pts("version: 1\nn_points: 1\n{\n10.5 20.5\n}\n", Path::new("a.pts")).unwrap();
        assert_eq!(rec.landmarks, vec![Landmark::new(9.5, 19.5)]);
    }

    #[test]
    fn pts_errors_carry_lines() {
        let short = "version: 1\nn_points: 3\n{\n1 1\n2 2\n}\n";
        match parse_pts(short, Path::new("s.pts")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 6);
                assert!(message.contains("1 short"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad_token = "version: 1\nn_points: 2\n{\n1 1\n2 x\n}\n";
        assert!(matches!(
            parse_pts(bad_token, Path::new("t.pts")),
            Err(Error::Parse { line: 5, .. })
        ));
        let bad_header = "version: 1\npoints: 2\n{\n}\n";
        assert!(matches!(
            parse_pts(bad_header, Path::new("h.pts")),
            Err(Error::Parse { line: 2, .. })
        ));
        let extra = "version: 1\nn_points: 1\n{\n1 1\n2 2\n}\n";
        assert!(matches!(
            parse_pts(extra, Path::new("e.pts")),
            Err(Error::Parse { line: 5, .. })
        ));
        let unclosed = "version: 1\nn_points: 1\n{\n1 1\n";
        assert!(matches!(
            parse_pts(unclosed, Path::new("u.pts")),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn pts_roundtrip() {
        let lms = gen_landmarks(68, (256.0, 256.0), 5).unwrap();
        let rec = parse_pts(&format_pts(&lms), Path::new("r.pts")).unwrap();
        for (a, b) in lms.iter().zip(&rec.landmarks) {
            assert!((a.u - b.u).abs() < 1e-6 && (a.v - b.v).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_corpus() {
        let cfg = EncodingConfig::new(4, 2.0, 16, 16);
        assert!(build_corpus(&[], &cfg, &NoiseSpec::none()).unwrap().is_empty());
    }
}
