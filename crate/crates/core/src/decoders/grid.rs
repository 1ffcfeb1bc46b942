//! Parallel candidate sampling around the heatmap argmax.
//!
//! The candidate grid is centred on the argmax cell with spacing `1/τ` and
//! `2⌊window·τ⌋ + 1` samples per axis, truncated to the heatmap extent
//! `[-0.5, w - 0.5] × [-0.5, h - 0.5]`. Every candidate is scored against
//! every anchor in a single pass ([`objective_eval`]) and the smallest score
//! wins, with the first row-major candidate taking ties.

use std::cell::Cell;
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;

use crate::anchors::{select_anchors, AnchorSet};
use crate::codec::{DistanceMap, Heatmap};
use crate::error::{domain, Result};

use super::baseline::decode_onehot;
use super::{DecodeConfig, DecodedLandmark, DecoderKind};

/// Sub-pixel sample lattice. Candidate `(iu, iv)` sits at
/// `(center_u + iu/τ, center_v + iv/τ)` for offsets in the inclusive ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateGrid {
    pub center_u: f64,
    pub center_v: f64,
    pub tau: u32,
    pub u_steps: (i64, i64),
    pub v_steps: (i64, i64),
}

impl CandidateGrid {
    /// Grid of half-extent `window` around `(center_u, center_v)`, clipped to
    /// a `rows × cols` heatmap.
    pub fn around(center_u: f64, center_v: f64, tau: u32, window: f64, rows: usize, cols: usize) -> Self {
        let t = f64::from(tau);
        // tolerate window·τ landing a hair below an integer
        let half = (window * t + 1e-9).floor() as i64;
        let clip = |center: f64, extent: usize| {
            let lo = ((-0.5 - center) * t).ceil() as i64;
            let hi = ((extent as f64 - 0.5 - center) * t).floor() as i64;
            (lo.max(-half).min(0), hi.min(half).max(0))
        };
        Self {
            center_u,
            center_v,
            tau,
            u_steps: clip(center_u, cols),
            v_steps: clip(center_v, rows),
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / f64::from(self.tau)
    }

    pub fn count_u(&self) -> usize {
        (self.u_steps.1 - self.u_steps.0 + 1) as usize
    }

    pub fn count_v(&self) -> usize {
        (self.v_steps.1 - self.v_steps.0 + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.count_u() * self.count_v()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin_u(&self) -> f64 {
        self.u_at(0)
    }

    pub fn origin_v(&self) -> f64 {
        self.v_at(0)
    }

    #[inline]
    pub fn u_at(&self, iu: usize) -> f64 {
        self.center_u + (self.u_steps.0 + iu as i64) as f64 / f64::from(self.tau)
    }

    #[inline]
    pub fn v_at(&self, iv: usize) -> f64 {
        self.center_v + (self.v_steps.0 + iv as i64) as f64 / f64::from(self.tau)
    }

    /// Coordinates of candidate `index` in row-major order (`v` outer).
    pub fn point(&self, index: usize) -> (f64, f64) {
        let cu = self.count_u();
        (self.u_at(index % cu), self.v_at(index / cu))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Objective value for every candidate, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    pub values: Vec<f64>,
    pub count_u: usize,
    pub count_v: usize,
}

impl ErrorMatrix {
    /// Index of the smallest entry; the first one wins ties.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &e) in self.values.iter().enumerate().skip(1) {
            if e < self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Arithmetic the error kernel is written against, so the same code can run
/// on plain floats or on an operation-counting wrapper.
trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn lift(x: f64) -> Self;
}

impl Scalar for f64 {
    #[inline(always)]
    fn lift(x: f64) -> Self {
        x
    }
}

thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
}

/// f64 that tallies every add, sub and mul it performs.
#[derive(Clone, Copy)]
struct Counted(f64);

impl Counted {
    fn tick() {
        FLOPS.with(|c| c.set(c.get() + 1));
    }
}

impl Scalar for Counted {
    fn lift(x: f64) -> Self {
        Counted(x)
    }
}

impl Add for Counted {
    type Output = Counted;
    fn add(self, rhs: Counted) -> Counted {
        Counted::tick();
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, rhs: Counted) -> Counted {
        Counted::tick();
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, rhs: Counted) -> Counted {
        Counted::tick();
        Counted(self.0 * rhs.0)
    }
}

/// Squared-range constants per anchor: `(x, y, d²)`.
fn stations<S: Scalar>(anchors: &AnchorSet) -> Vec<(S, S, S)> {
    anchors
        .iter()
        .map(|a| {
            let d = S::lift(a.d);
            (S::lift(a.x as f64), S::lift(a.y as f64), d * d)
        })
        .collect()
}

/// Scores one grid row (fixed `iv`) into `out`.
#[inline]
fn score_row<S: Scalar>(grid: &CandidateGrid, stations: &[(S, S, S)], iv: usize, out: &mut [S]) {
    let cv = S::lift(grid.v_at(iv));
    for (iu, slot) in out.iter_mut().enumerate() {
        let cu = S::lift(grid.u_at(iu));
        let mut acc = S::lift(0.0);
        for &(x, y, d2) in stations {
            let dx = x - cu;
            let dy = y - cv;
            let r = dx * dx + dy * dy - d2;
            acc = acc + r * r;
        }
        *slot = acc;
    }
}

/// Error matrix `E[i] = Σ_k (‖c_i - A_k‖² - d_k²)²` over all candidates.
pub fn objective_eval(grid: &CandidateGrid, anchors: &AnchorSet) -> ErrorMatrix {
    let stations = stations::<f64>(anchors);
    let (count_u, count_v) = (grid.count_u(), grid.count_v());
    let mut values = vec![0.0; count_u * count_v];
    for (iv, row) in values.chunks_exact_mut(count_u).enumerate() {
        score_row(grid, &stations, iv, row);
    }
    ErrorMatrix {
        values,
        count_u,
        count_v,
    }
}

/// Same matrix as [`objective_eval`], rows split across the rayon pool.
pub fn objective_eval_parallel(grid: &CandidateGrid, anchors: &AnchorSet) -> ErrorMatrix {
    let stations = stations::<f64>(anchors);
    let (count_u, count_v) = (grid.count_u(), grid.count_v());
    let mut values = vec![0.0; count_u * count_v];
    values
        .par_chunks_exact_mut(count_u)
        .enumerate()
        .for_each(|(iv, row)| score_row(grid, &stations, iv, row));
    ErrorMatrix {
        values,
        count_u,
        count_v,
    }
}

/// Runs the error kernel on counting scalars and returns the matrix together
/// with the number of floating-point adds, subs and muls it took.
pub fn objective_eval_counted(grid: &CandidateGrid, anchors: &AnchorSet) -> (ErrorMatrix, u64) {
    FLOPS.with(|c| c.set(0));
    let stations = stations::<Counted>(anchors);
    let (count_u, count_v) = (grid.count_u(), grid.count_v());
    let mut scratch = vec![Counted(0.0); count_u * count_v];
    for (iv, row) in scratch.chunks_exact_mut(count_u).enumerate() {
        score_row(grid, &stations, iv, row);
    }
    let ops = FLOPS.with(|c| c.get());
    let matrix = ErrorMatrix {
        values: scratch.into_iter().map(|c| c.0).collect(),
        count_u,
        count_v,
    };
    (matrix, ops)
}

/// Single-step grid decoder: select anchors, lay the candidate grid over the
/// argmax, score everything, take the minimum.
pub fn decode_pppsc(heatmap: &Heatmap, dmap: &DistanceMap, cfg: &DecodeConfig) -> Result<DecodedLandmark> {
    cfg.validate()?;
    if heatmap.dims() != dmap.dims() {
        return Err(domain(format!(
            "heatmap is {:?} but distance map is {:?}",
            heatmap.dims(),
            dmap.dims()
        )));
    }
    let peak = decode_onehot(heatmap)?;
    let anchors = select_anchors(heatmap, dmap, cfg.k.min(heatmap.len()))?;
    let grid = CandidateGrid::around(peak.u, peak.v, cfg.tau, cfg.window, heatmap.rows(), heatmap.cols());
    let errors = objective_eval(&grid, &anchors);
    let best = errors.argmin();
    let (u, v) = grid.point(best);
    Ok(DecodedLandmark {
        objective: Some(errors.values[best]),
        ..DecodedLandmark::at(u, v, DecoderKind::Pppsc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::Anchor;
    use crate::codec::{distance_transform, encode_at, EncodingConfig};

    fn pythagorean() -> AnchorSet {
        let a = |x, y, d| Anchor {
            x,
            y,
            d,
            activation: 1.0,
        };
        AnchorSet::from_anchors(vec![a(0, 0, 5.0), a(3, 0, 4.0), a(0, 4, 3.0)], (8, 8)).unwrap()
    }

    fn single(u: f64, v: f64) -> CandidateGrid {
        CandidateGrid {
            center_u: u,
            center_v: v,
            tau: 1,
            u_steps: (0, 0),
            v_steps: (0, 0),
        }
    }

    #[test]
    fn hand_computed_errors() {
        assert_eq!(objective_eval(&single(3.0, 4.0), &pythagorean()).values, vec![0.0]);
        // (0 - 25)² + (9 - 16)² + (16 - 9)²
        assert_eq!(objective_eval(&single(0.0, 0.0), &pythagorean()).values, vec![723.0]);

        let on_anchor = AnchorSet::from_anchors(
            vec![Anchor {
                x: 2,
                y: 5,
                d: 0.0,
                activation: 1.0,
            }],
            (8, 8),
        )
        .unwrap();
        assert_eq!(objective_eval(&single(2.0, 5.0), &on_anchor).values, vec![0.0]);
    }

    #[test]
    fn anchor_order_does_not_matter() {
        let grid = CandidateGrid::around(2.0, 2.0, 10, 1.0, 8, 8);
        let a = pythagorean();
        let mut rev = a.anchors().to_vec();
        rev.reverse();
        let b = AnchorSet::from_anchors(rev, (8, 8)).unwrap();
        let ea = objective_eval(&grid, &a);
        let eb = objective_eval(&grid, &b);
        for (x, y) in ea.values.iter().zip(&eb.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn grid_shape_and_clipping() {
        let g = CandidateGrid::around(5.0, 5.0, 10, 1.0, 16, 16);
        assert_eq!((g.count_u(), g.count_v()), (21, 21));
        assert_eq!(g.point(g.len() / 2), (5.0, 5.0));
        assert!((g.origin_u() - 4.0).abs() < 1e-12);

        // at the corner the grid keeps its centre and loses the outside half
        let g = CandidateGrid::around(0.0, 0.0, 10, 1.0, 4, 4);
        assert_eq!((g.count_u(), g.count_v()), (16, 16));
        assert!((g.origin_u() + 0.5).abs() < 1e-12);
        assert_eq!(g.point(5 * 16 + 5), (0.0, 0.0));

        let g = CandidateGrid::around(3.0, 1.0, 1, 0.5, 4, 4);
        assert_eq!(g.len(), 1);
        assert_eq!(g.point(0), (3.0, 1.0));
    }

    #[test]
    fn parallel_matches_sequential() {
        let grid = CandidateGrid::around(3.0, 2.0, 10, 2.0, 8, 8);
        let a = pythagorean();
        assert_eq!(objective_eval(&grid, &a), objective_eval_parallel(&grid, &a));
        let (counted, ops) = objective_eval_counted(&grid, &a);
        assert_eq!(counted, objective_eval(&grid, &a));
        assert_eq!(ops, 3 + 8 * 3 * grid.len() as u64);
    }

    #[test]
    fn centred_peak_decodes_to_node() {
        let cfg = EncodingConfig::new(1, 2.0, 9, 9);
        let map = encode_at(4.0, 5.0, &cfg).unwrap();
        let dmap = distance_transform(&map, 2.0).unwrap();
        let d = decode_pppsc(&map, &dmap, &DecodeConfig::default()).unwrap();
        assert_eq!((d.u, d.v), (4.0, 5.0));
    }

    #[test]
    fn single_candidate_equals_onehot() {
        let cfg = EncodingConfig::new(1, 2.0, 9, 9);
        let map = encode_at(4.3, 5.4, &cfg).unwrap();
        let dmap = distance_transform(&map, 2.0).unwrap();
        let dc = DecodeConfig {
            tau: 1,
            window: 0.5,
            ..Default::default()
        };
        let d = decode_pppsc(&map, &dmap, &dc).unwrap();
        let o = decode_onehot(&map).unwrap();
        assert_eq!((d.u, d.v), (o.u, o.v));
    }
}
