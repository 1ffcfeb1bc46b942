//! Heatmap losses and the normalised mean error metric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::anchors::anchor_mask;
use crate::codec::{Heatmap, Landmark};
use crate::error::{config, domain, Result};
use crate::synth::HeatmapStack;

/// Weight on the anchor loss when none is given.
pub const DEFAULT_LOSS_WEIGHT: f64 = 6.0;

/// Which heatmap of the pair the top-K mask is taken from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    #[default]
    Gt,
    Pred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub components: BTreeMap<String, f64>,
}

impl LossValue {
    fn single(name: &str, value: f64) -> Self {
        Self {
            value,
            components: BTreeMap::from([(name.to_owned(), value)]),
        }
    }
}

fn check_pair(pred: &HeatmapStack, gt: &HeatmapStack) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(domain(format!(
            "stack sizes differ: pred has {}, gt has {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(domain("heatmap stacks are empty"));
    }
    if pred.dims() != gt.dims() {
        return Err(domain(format!(
            "heatmap dims differ: pred {:?}, gt {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    Ok(())
}

/// Mean squared difference over every cell of every landmark.
pub fn mse_loss(pred: &HeatmapStack, gt: &HeatmapStack) -> Result<LossValue> {
    check_pair(pred, gt)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, g) in pred.maps().iter().zip(gt.maps()) {
        for (a, b) in p.values().iter().zip(g.values()) {
            let diff = a - b;
            sum += diff * diff;
        }
        n += p.len();
    }
    Ok(LossValue::single("mse", sum / n as f64))
}

fn masked_l2(p: &Heatmap, g: &Heatmap, mask: &[bool]) -> f64 {
    p.values()
        .iter()
        .zip(g.values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// Multilateration anchor loss with the mask drawn from `source`: per
/// landmark, the L2 norm of the difference restricted to the top-`k` cells,
/// summed over landmarks.
pub fn ma_loss_with(pred: &HeatmapStack, gt: &HeatmapStack, k: usize, source: MaskSource) -> Result<LossValue> {
    check_pair(pred, gt)?;
    let mut total = 0.0;
    for (p, g) in pred.maps().iter().zip(gt.maps()) {
        let mask = match source {
            MaskSource::Gt => anchor_mask(g, k)?,
            MaskSource::Pred => anchor_mask(p, k)?,
        };
        total += masked_l2(p, g, mask.bits());
    }
    Ok(LossValue::single("ma", total))
}

/// [`ma_loss_with`] using the ground-truth mask.
pub fn ma_loss(pred: &HeatmapStack, gt: &HeatmapStack, k: usize) -> Result<LossValue> {
    ma_loss_with(pred, gt, k, MaskSource::Gt)
}

/// `mse + weight · ma`.
pub fn combined_loss(pred: &HeatmapStack, gt: &HeatmapStack, k: usize, weight: f64) -> Result<LossValue> {
    combined_loss_with(pred, gt, k, weight, MaskSource::Gt)
}

pub fn combined_loss_with(
    pred: &HeatmapStack,
    gt: &HeatmapStack,
    k: usize,
    weight: f64,
    source: MaskSource,
) -> Result<LossValue> {
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(config(format!("loss weight must be non-negative, got {weight}")));
    }
    let mse = mse_loss(pred, gt)?.value;
    let ma = ma_loss_with(pred, gt, k, source)?.value;
    Ok(LossValue {
        value: mse + weight * ma,
        components: BTreeMap::from([("mse".to_owned(), mse), ("ma".to_owned(), ma)]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmeReport {
    pub per_landmark_errors: Vec<f64>,
    pub mean: f64,
    pub normalizer: f64,
}

/// Normalised mean error: mean Euclidean error over landmarks, divided by
/// `normalizer`.
pub fn nme(pred: &[Landmark], gt: &[Landmark], normalizer: f64) -> Result<NmeReport> {
    if pred.len() != gt.len() {
        return Err(domain(format!(
            "landmark counts differ: pred {}, gt {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(domain("no landmarks to score"));
    }
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(config(format!("normalizer must be positive, got {normalizer}")));
    }
    let per_landmark_errors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| p.distance(g) / normalizer).collect();
    let mean = per_landmark_errors.iter().sum::<f64>() / per_landmark_errors.len() as f64;
    Ok(NmeReport {
        per_landmark_errors,
        mean,
        normalizer,
    })
}
