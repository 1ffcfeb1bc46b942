//! Top-K anchor selection.
//!
//! Anchors are the K highest-activation cells, ordered by descending
//! activation with equal activations resolved by the smaller row-major index.
//! The same ranking backs [`anchor_mask`], so the training-side mask and the
//! decode-time stations always pick identical cells.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::codec::{DistanceMap, Heatmap};
use crate::error::{config, domain, Result};

/// Anchor count used when nothing else is configured.
pub const DEFAULT_K: usize = 10;

/// One multilateration station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Column index.
    pub x: usize,
    /// Row index.
    pub y: usize,
    /// Pseudo-range in heatmap pixels.
    pub d: f64,
    pub activation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Anchor>,
    source_dims: (usize, usize),
}

impl AnchorSet {
    /// Builds a set from explicit stations, e.g. for solver tests.
    pub fn from_anchors(anchors: Vec<Anchor>, source_dims: (usize, usize)) -> Result<Self> {
        if anchors.is_empty() {
            return Err(config("anchor set must not be empty"));
        }
        if let Some(a) = anchors.iter().find(|a| !(a.d.is_finite() && a.d >= 0.0)) {
            return Err(domain(format!("anchor ({}, {}) has invalid range {}", a.x, a.y, a.d)));
        }
        Ok(Self { anchors, source_dims })
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Anchor> {
        self.anchors.iter()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(&self.anchors)
    }
}

/// Binary h×w mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

fn check_k(k: usize, cells: usize) -> Result<()> {
    if k < 1 || k > cells {
        return Err(config(format!("k must lie in 1..={cells}, got {k}")));
    }
    Ok(())
}

/// Row-major indices of the `k` highest activations, in rank order.
pub fn top_k_indices(heatmap: &Heatmap, k: usize) -> Result<Vec<usize>> {
    check_k(k, heatmap.len())?;
    let values = heatmap.values();
    let rank = |a: &usize, b: &usize| -> Ordering { values[*b].total_cmp(&values[*a]).then(a.cmp(b)) };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, rank);
        idx.truncate(k);
    }
    idx.sort_unstable_by(rank);
    Ok(idx)
}

/// Picks the `k` strongest cells of `heatmap` and reads their pseudo-ranges
/// from `dmap`.
pub fn select_anchors(heatmap: &Heatmap, dmap: &DistanceMap, k: usize) -> Result<AnchorSet> {
    if heatmap.dims() != dmap.dims() {
        return Err(domain(format!(
            "heatmap is {:?} but distance map is {:?}",
            heatmap.dims(),
            dmap.dims()
        )));
    }
    let cols = heatmap.cols();
    let anchors = top_k_indices(heatmap, k)?
        .into_iter()
        .map(|idx| Anchor {
            x: idx % cols,
            y: idx / cols,
            d: dmap.values()[idx],
            activation: heatmap.values()[idx],
        })
        .collect();
    Ok(AnchorSet {
        anchors,
        source_dims: heatmap.dims(),
    })
}

/// Mask with ones on exactly the cells [`select_anchors`] would return.
pub fn anchor_mask(heatmap: &Heatmap, k: usize) -> Result<Mask> {
    let mut bits = vec![false; heatmap.len()];
    for idx in top_k_indices(heatmap, k)? {
        bits[idx] = true;
    }
    Ok(Mask {
        rows: heatmap.rows(),
        cols: heatmap.cols(),
        bits,
    })
}
