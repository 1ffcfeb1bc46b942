//! Gaussian landmark encoding and the heatmap-to-distance-map transform.
//!
//! Coordinates follow the image convention: a [`Landmark`] is `(u, v)` =
//! `(column, row)` in input-image pixels, heatmap cell `(i, j)` is
//! `(row, column)`, and the origin sits on the centre of the top-left cell.
//! Encoded Gaussians are peak-normalised (`H = 1` at the centre) so that the
//! distance transform maps the centre to a pseudo-range of exactly zero.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};

/// Activations below this value are clamped before taking the logarithm.
pub const ACTIVATION_FLOOR: f64 = 1e-12;

const HMAP_MAGIC: &[u8; 4] = b"HMAP";
const HMAP_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

/// A continuous 2-D landmark position in input-image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub u: f64,
    pub v: f64,
}

impl Landmark {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Euclidean distance to another landmark.
    pub fn distance(&self, other: &Landmark) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    /// Gaussian centred on the exact sub-pixel coordinate `β / λ`.
    Unbiased,
    /// Gaussian centred on the per-axis rounded coordinate.
    Biased,
}

/// Parameters for rendering a landmark into a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Input pixels per heatmap pixel.
    pub lambda: u32,
    /// Gaussian standard deviation in heatmap pixels.
    pub sigma: f64,
    pub heatmap_h: usize,
    pub heatmap_w: usize,
    pub mode: EncodingMode,
}

impl EncodingConfig {
    pub fn new(lambda: u32, sigma: f64, heatmap_h: usize, heatmap_w: usize) -> Self {
        Self {
            lambda,
            sigma,
            heatmap_h,
            heatmap_w,
            mode: EncodingMode::Unbiased,
        }
    }

    pub fn with_mode(mut self, mode: EncodingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 1 {
            return Err(config(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.heatmap_h < 1 || self.heatmap_w < 1 {
            return Err(config(format!(
                "heatmap dims must be positive, got {}x{}",
                self.heatmap_h, self.heatmap_w
            )));
        }
        Ok(())
    }

    /// Input-image size `(W, H)` covered by the heatmap.
    pub fn image_dims(&self) -> (f64, f64) {
        let lambda = f64::from(self.lambda);
        (lambda * self.heatmap_w as f64, lambda * self.heatmap_h as f64)
    }
}

/// Provenance attached to a heatmap. Maps read from disk only keep the
/// scalars stored in the container.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMeta {
    pub sigma: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<EncodingMode>,
    /// Gaussian centre `(u, v)` in heatmap pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
}

/// Row-major grid of non-negative activations for one landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    meta: Option<HeatmapMeta>,
}

impl Heatmap {
    /// Wraps a row-major buffer, rejecting negative or non-finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(config(format!("heatmap dims must be positive, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(domain(format!(
                "expected {} values for a {rows}x{cols} heatmap, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(domain(format!(
                "activation at cell ({}, {}) is {}; heatmaps must be finite and non-negative",
                pos / cols,
                pos % cols,
                values[pos]
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            meta: None,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn with_meta(mut self, meta: HeatmapMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> Option<&HeatmapMeta> {
        self.meta.as_ref()
    }

    /// Activation at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Row-major index of the largest activation; the smallest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_val = self.values[0];
        for (idx, &val) in self.values.iter().enumerate().skip(1) {
            if val > best_val {
                best = idx;
                best_val = val;
            }
        }
        best
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.argmax()]
    }

    /// Writes the little-endian `HMAP` container. Maps without provenance
    /// store NaN for sigma and lambda.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let (sigma, lambda) = self.meta.map(|m| (m.sigma, m.lambda)).unwrap_or((f64::NAN, f64::NAN));
        let rows = u32::try_from(self.rows).map_err(|_| config("heatmap too tall for container"))?;
        let cols = u32::try_from(self.cols).map_err(|_| config("heatmap too wide for container"))?;
        let mut buf = Vec::with_capacity(HMAP_HEADER_LEN + 8 * self.values.len());
        buf.extend_from_slice(HMAP_MAGIC);
        buf.extend_from_slice(&rows.to_le_bytes());
        buf.extend_from_slice(&cols.to_le_bytes());
        buf.extend_from_slice(&sigma.to_le_bytes());
        buf.extend_from_slice(&lambda.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        Self::from_binary_bytes(&buf)
    }

    pub fn from_binary_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < HMAP_HEADER_LEN {
            return Err(Error::Format(format!("{} bytes is shorter than the header", buf.len())));
        }
        if &buf[..4] != HMAP_MAGIC {
            return Err(Error::Format("missing HMAP magic".into()));
        }
        let u32_at = |off: usize| u32::from_le_bytes(buf[off..off + 4].try_into().unwrap());
        let f64_at = |off: usize| f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
        let rows = u32_at(4) as usize;
        let cols = u32_at(8) as usize;
        let sigma = f64_at(12);
        let lambda = f64_at(20);
        let expected = HMAP_HEADER_LEN + 8 * rows * cols;
        if buf.len() != expected {
            return Err(Error::Format(format!(
                "{rows}x{cols} container should be {expected} bytes, found {}",
                buf.len()
            )));
        }
        let values = buf[HMAP_HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut map = Self::new(rows, cols, values)?;
        if sigma.is_finite() && lambda.is_finite() {
            map.meta = Some(HeatmapMeta {
                sigma,
                lambda,
                mode: None,
                center: None,
            });
        }
        Ok(map)
    }

    pub fn to_json(&self) -> HeatmapJson {
        HeatmapJson {
            h: self.rows,
            w: self.cols,
            sigma: self.meta.map(|m| m.sigma),
            lambda: self.meta.map(|m| m.lambda),
            values: self.values.clone(),
        }
    }

    pub fn from_json(doc: HeatmapJson) -> Result<Self> {
        let mut map = Self::new(doc.h, doc.w, doc.values)?;
        if let (Some(sigma), Some(lambda)) = (doc.sigma, doc.lambda) {
            map.meta = Some(HeatmapMeta {
                sigma,
                lambda,
                mode: None,
                center: None,
            });
        }
        Ok(map)
    }

    /// Loads either container form, choosing by extension (`.json` or binary).
    pub fn load(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "json") {
            let doc: HeatmapJson = serde_json::from_reader(std::fs::File::open(path)?)?;
            Self::from_json(doc)
        } else {
            Self::read_binary(std::fs::File::open(path)?)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if path.extension().is_some_and(|e| e == "json") {
            let file = std::fs::File::create(path)?;
            serde_json::to_writer(std::io::BufWriter::new(file), &self.to_json())?;
            Ok(())
        } else {
            self.write_binary(std::io::BufWriter::new(std::fs::File::create(path)?))
        }
    }
}

/// JSON debug form of a heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapJson {
    pub h: usize,
    pub w: usize,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub values: Vec<f64>,
}

/// Per-cell pseudo-ranges in heatmap pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    sigma: f64,
}

impl DistanceMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(domain(format!(
                "expected {} distances for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(domain("pseudo-ranges must be finite and non-negative"));
        }
        Ok(Self {
            rows,
            cols,
            values,
            sigma,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

fn check_encodable(landmark: &Landmark, cfg: &EncodingConfig) -> Result<()> {
    cfg.validate()?;
    let (width, height) = cfg.image_dims();
    if !landmark.is_finite() || landmark.u < 0.0 || landmark.v < 0.0 || landmark.u >= width || landmark.v >= height {
        return Err(domain(format!(
            "landmark ({}, {}) outside encodable image {width}x{height}",
            landmark.u, landmark.v
        )));
    }
    Ok(())
}

fn render(center_u: f64, center_v: f64, cfg: &EncodingConfig, mode: EncodingMode) -> Result<Heatmap> {
    let inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let map = Heatmap::from_fn(cfg.heatmap_h, cfg.heatmap_w, |i, j| {
        let du = j as f64 - center_u;
        let dv = i as f64 - center_v;
        (-(du * du + dv * dv) * inv).exp()
    })?;
    Ok(map.with_meta(HeatmapMeta {
        sigma: cfg.sigma,
        lambda: f64::from(cfg.lambda),
        mode: Some(mode),
        center: Some([center_u, center_v]),
    }))
}

/// Renders a Gaussian centred on a given heatmap-pixel position. The centre
/// may lie anywhere, including outside the grid.
pub fn encode_at(center_u: f64, center_v: f64, cfg: &EncodingConfig) -> Result<Heatmap> {
    cfg.validate()?;
    if !(center_u.is_finite() && center_v.is_finite()) {
        return Err(domain("Gaussian centre must be finite"));
    }
    render(center_u, center_v, cfg, cfg.mode)
}

/// Gaussian centred on the exact sub-pixel position `β / λ`.
pub fn encode_unbiased(landmark: &Landmark, cfg: &EncodingConfig) -> Result<Heatmap> {
    check_encodable(landmark, cfg)?;
    let lambda = f64::from(cfg.lambda);
    render(landmark.u / lambda, landmark.v / lambda, cfg, EncodingMode::Unbiased)
}

/// Round-half-up quantisation used by the biased encoder.
pub fn quantize(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Gaussian centred on the quantised heatmap cell `Quan(β / λ)`.
pub fn encode_biased(landmark: &Landmark, cfg: &EncodingConfig) -> Result<Heatmap> {
    check_encodable(landmark, cfg)?;
    let lambda = f64::from(cfg.lambda);
    render(
        quantize(landmark.u / lambda),
        quantize(landmark.v / lambda),
        cfg,
        EncodingMode::Biased,
    )
}

/// Encodes with whichever mode the config names.
pub fn encode(landmark: &Landmark, cfg: &EncodingConfig) -> Result<Heatmap> {
    match cfg.mode {
        EncodingMode::Unbiased => encode_unbiased(landmark, cfg),
        EncodingMode::Biased => encode_biased(landmark, cfg),
    }
}

/// Pseudo-range of a single activation: `sqrt(-2 σ² ln H)` with `H` clamped
/// into `[ACTIVATION_FLOOR, 1]`.
#[inline]
pub fn pseudo_range(activation: f64, sigma: f64) -> f64 {
    let h = activation.clamp(ACTIVATION_FLOOR, 1.0);
    let squared = -2.0 * sigma * sigma * h.ln();
    // ln(1) = 0 would otherwise yield -0.0
    if squared > 0.0 {
        squared.sqrt()
    } else {
        0.0
    }
}

/// Inverts the Gaussian cell by cell.
pub fn distance_transform(heatmap: &Heatmap, sigma: f64) -> Result<DistanceMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(config(format!("sigma must be positive, got {sigma}")));
    }
    let values = heatmap.values.iter().map(|&h| pseudo_range(h, sigma)).collect();
    Ok(DistanceMap {
        rows: heatmap.rows,
        cols: heatmap.cols,
        values,
        sigma,
    })
}
