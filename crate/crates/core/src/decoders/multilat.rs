use crate::anchors::{Anchor, AnchorSet};
use crate::error::{Error, Result};

use super::{DecodeConfig, DecodedLandmark, DecoderKind};

const MAX_STEP_HALVINGS: usize = 8;
const SINGULAR_REL_EPS: f64 = 1e-12;

/// Squared-range residual `(x - u)² + (y - v)² - d²` for one anchor.
#[inline]
pub fn prm_residual(anchor: &Anchor, u: f64, v: f64) -> f64 {
    let dx = anchor.x as f64 - u;
    let dy = anchor.y as f64 - v;
    dx * dx + dy * dy - anchor.d * anchor.d
}

/// Sum of squared residuals over all anchors.
pub fn prm_objective(anchors: &AnchorSet, u: f64, v: f64) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let r = prm_residual(a, u, v);
            r * r
        })
        .sum()
}

/// Solves `[[a, b], [b, c]] · x = rhs`, or `None` when the system is
/// numerically singular.
fn solve_sym2(a: f64, b: f64, c: f64, rhs: [f64; 2]) -> Option<[f64; 2]> {
    let det = a * c - b * b;
    let scale = (a * c).abs().max(b * b);
    if !det.is_finite() || scale == 0.0 || det.abs() <= SINGULAR_REL_EPS * scale {
        return None;
    }
    Some([(c * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - b * rhs[0]) / det])
}

/// Closed-form trilateration: subtracting the first anchor's circle from the
/// others gives a linear system in `(u, v)`, solved through its normal
/// equations.
pub fn decode_least_squares(anchors: &AnchorSet) -> Result<DecodedLandmark> {
    if anchors.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "least squares needs at least 3 anchors, got {}",
            anchors.len()
        )));
    }
    let first = anchors.anchors()[0];
    let (x0, y0) = (first.x as f64, first.y as f64);
    let c0 = x0 * x0 + y0 * y0 - first.d * first.d;

    let (mut ata00, mut ata01, mut ata11) = (0.0, 0.0, 0.0);
    let (mut atb0, mut atb1) = (0.0, 0.0);
    for a in &anchors.anchors()[1..] {
        let (x, y) = (a.x as f64, a.y as f64);
        let row = [2.0 * (x - x0), 2.0 * (y - y0)];
        let rhs = (x * x + y * y - a.d * a.d) - c0;
        ata00 += row[0] * row[0];
        ata01 += row[0] * row[1];
        ata11 += row[1] * row[1];
        atb0 += row[0] * rhs;
        atb1 += row[1] * rhs;
    }
    let [u, v] = solve_sym2(ata00, ata01, ata11, [atb0, atb1])
        .ok_or_else(|| Error::DegenerateGeometry("anchors are collinear or coincident".into()))?;
    Ok(DecodedLandmark {
        objective: Some(prm_objective(anchors, u, v)),
        ..DecodedLandmark::at(u, v, DecoderKind::Lsq)
    })
}

/// Gauss-Newton on the squared-range residuals.
///
/// Each step solves `(JᵀJ) Δ = -Jᵀr`. A step that raises the objective is
/// halved up to eight times; if none of those help the solver stops where it
/// is. Iteration ends when `‖Δ‖ < conv_tol` or after `max_iter` steps. A
/// singular normal matrix returns the best iterate with `degenerate` set.
pub fn decode_igno(anchors: &AnchorSet, cfg: &DecodeConfig, init: &DecodedLandmark) -> Result<DecodedLandmark> {
    cfg.validate()?;
    if anchors.len() < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "Gauss-Newton needs at least 2 anchors, got {}",
            anchors.len()
        )));
    }
    if !(init.u.is_finite() && init.v.is_finite()) {
        return Err(Error::Domain("initial guess must be finite".into()));
    }

    let (mut u, mut v) = (init.u, init.v);
    let mut objective = prm_objective(anchors, u, v);
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut jtr0, mut jtr1) = (0.0, 0.0);
        for a in anchors.iter() {
            let r = prm_residual(a, u, v);
            let j = [2.0 * (u - a.x as f64), 2.0 * (v - a.y as f64)];
            jtj00 += j[0] * j[0];
            jtj01 += j[0] * j[1];
            jtj11 += j[1] * j[1];
            jtr0 += j[0] * r;
            jtr1 += j[1] * r;
        }
        let Some(delta) = solve_sym2(jtj00, jtj01, jtj11, [-jtr0, -jtr1]) else {
            degenerate = true;
            break;
        };
        let norm = delta[0].hypot(delta[1]);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let (cu, cv) = (u + step * delta[0], v + step * delta[1]);
            let candidate = prm_objective(anchors, cu, cv);
            if candidate <= objective {
                accepted = Some((cu, cv, candidate));
                break;
            }
            step *= 0.5;
        }
        if let Some((cu, cv, candidate)) = accepted {
            u = cu;
            v = cv;
            objective = candidate;
        }
        if norm < cfg.conv_tol {
            converged = true;
            break;
        }
        if accepted.is_none() {
            break;
        }
    }

    Ok(DecodedLandmark {
        objective: Some(objective),
        iterations: Some(iterations),
        converged: Some(converged),
        degenerate,
        ..DecodedLandmark::at(u, v, DecoderKind::Igno)
    })
}
