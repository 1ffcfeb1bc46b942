use crate::codec::{Heatmap, ACTIVATION_FLOOR};
use crate::error::{config, Error, Result};

use super::{DecodedLandmark, DecoderKind};

/// Quarter-pixel shift applied by the two-hot decoder.
pub const TWOHOT_SHIFT: f64 = 0.25;

// |det| below this fraction of |Hxx·Hyy| counts as singular
const HESSIAN_REL_EPS: f64 = 1e-12;

fn argmax_cell(heatmap: &Heatmap) -> Result<(usize, usize)> {
    let idx = heatmap.argmax();
    if heatmap.values()[idx] <= 0.0 {
        return Err(Error::DegenerateInput("heatmap has no positive activation".into()));
    }
    Ok((idx / heatmap.cols(), idx % heatmap.cols()))
}

/// Argmax cell, smallest row-major index on ties.
pub fn decode_onehot(heatmap: &Heatmap) -> Result<DecodedLandmark> {
    let (row, col) = argmax_cell(heatmap)?;
    Ok(DecodedLandmark::at(col as f64, row as f64, DecoderKind::Onehot))
}

/// Argmax shifted [`TWOHOT_SHIFT`] toward the strongest in-bounds 4-neighbour.
pub fn decode_twohot(heatmap: &Heatmap) -> Result<DecodedLandmark> {
    if heatmap.len() < 2 {
        return Err(Error::DegenerateInput(
            "two-hot decoding needs at least two cells".into(),
        ));
    }
    let (row, col) = argmax_cell(heatmap)?;
    let (rows, cols) = heatmap.dims();

    // candidates listed in row-major order so the first maximum wins ties
    let mut neighbours: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(4);
    if row > 0 {
        neighbours.push((row - 1, col, 0.0, -1.0));
    }
    if col > 0 {
        neighbours.push((row, col - 1, -1.0, 0.0));
    }
    if col + 1 < cols {
        neighbours.push((row, col + 1, 1.0, 0.0));
    }
    if row + 1 < rows {
        neighbours.push((row + 1, col, 0.0, 1.0));
    }
    let mut best = neighbours[0];
    for &n in &neighbours[1..] {
        if heatmap.get(n.0, n.1) > heatmap.get(best.0, best.1) {
            best = n;
        }
    }
    Ok(DecodedLandmark::at(
        col as f64 + TWOHOT_SHIFT * best.2,
        row as f64 + TWOHOT_SHIFT * best.3,
        DecoderKind::Twohot,
    ))
}

/// Newton step on `ln H` at the argmax, using central differences over the
/// 3×3 neighbourhood. Falls back to the argmax on borders; a singular
/// Hessian also falls back and sets `degenerate`. The offset is clamped to
/// one pixel per axis.
///
/// For a noiseless Gaussian the log-map is exactly quadratic, so the step
/// lands on the true centre regardless of `sigma`; `sigma` is only checked.
pub fn decode_taylor(heatmap: &Heatmap, sigma: f64) -> Result<DecodedLandmark> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(config(format!("sigma must be positive, got {sigma}")));
    }
    let (row, col) = argmax_cell(heatmap)?;
    let (rows, cols) = heatmap.dims();
    let fallback = |degenerate: bool| DecodedLandmark {
        degenerate,
        ..DecodedLandmark::at(col as f64, row as f64, DecoderKind::Taylor)
    };
    if row == 0 || col == 0 || row + 1 >= rows || col + 1 >= cols {
        return Ok(fallback(false));
    }

    let log = |r: usize, c: usize| heatmap.get(r, c).max(ACTIVATION_FLOOR).ln();
    let centre = log(row, col);
    let (left, right) = (log(row, col - 1), log(row, col + 1));
    let (up, down) = (log(row - 1, col), log(row + 1, col));

    let gx = 0.5 * (right - left);
    let gy = 0.5 * (down - up);
    let hxx = right - 2.0 * centre + left;
    let hyy = down - 2.0 * centre + up;
    let hxy = 0.25 * (log(row + 1, col + 1) - log(row + 1, col - 1) - log(row - 1, col + 1) + log(row - 1, col - 1));

    let det = hxx * hyy - hxy * hxy;
    if !det.is_finite() || det.abs() <= HESSIAN_REL_EPS * (hxx * hyy).abs() || det == 0.0 {
        return Ok(fallback(true));
    }
    let du = -(hyy * gx - hxy * gy) / det;
    let dv = -(hxx * gy - hxy * gx) / det;
    if !(du.is_finite() && dv.is_finite()) {
        return Ok(fallback(true));
    }
    Ok(DecodedLandmark::at(
        col as f64 + du.clamp(-1.0, 1.0),
        row as f64 + dv.clamp(-1.0, 1.0),
        DecoderKind::Taylor,
    ))
}
