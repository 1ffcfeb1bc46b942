//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the decoder internals; each helper is written
//! from the definitions directly so it can serve as an oracle.

#![allow(dead_code)]

use prm_decode::codec::Heatmap;

/// Peak-1 Gaussian rendered cell by cell.
pub fn gaussian(rows: usize, cols: usize, cu: f64, cv: f64, sigma: f64) -> Heatmap {
    Heatmap::from_fn(rows, cols, |i, j| {
        let (du, dv) = (j as f64 - cu, i as f64 - cv);
        (-(du * du + dv * dv) / (2.0 * sigma * sigma)).exp()
    })
    .unwrap()
}

/// Row-major indices of the `k` strongest cells by a full stable sort.
pub fn top_k_by_sort(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Exhaustive sequential scan over the sub-pixel grid around the argmax,
/// scoring `Σ (‖c - a‖² - d²)²` with `d = √(-2σ² ln H)`.
pub fn scan_grid(map: &Heatmap, sigma: f64, k: usize, tau: u32, window: f64) -> (f64, f64) {
    let (rows, cols) = map.dims();
    let values = map.values();
    let peak = first_argmax(values);
    let (cu, cv) = ((peak % cols) as f64, (peak / cols) as f64);

    let stations: Vec<(f64, f64, f64)> = top_k_by_sort(values, k)
        .into_iter()
        .map(|idx| {
            let h = values[idx].clamp(1e-12, 1.0);
            let sq = -2.0 * sigma * sigma * h.ln();
            let d = if sq > 0.0 { sq.sqrt() } else { 0.0 };
            ((idx % cols) as f64, (idx / cols) as f64, d * d)
        })
        .collect();

    let t = f64::from(tau);
    let n = (window * t + 1e-9).floor() as i64;
    let inside = |c: f64, extent: usize| c >= -0.5 && c <= extent as f64 - 0.5;

    let mut best = (f64::INFINITY, cu, cv);
    for kv in -n..=n {
        let v = cv + kv as f64 / t;
        if !inside(v, rows) {
            continue;
        }
        for ku in -n..=n {
            let u = cu + ku as f64 / t;
            if !inside(u, cols) {
                continue;
            }
            let mut e = 0.0;
            for &(x, y, d2) in &stations {
                let dx = x - u;
                let dy = y - v;
                let r = dx * dx + dy * dy - d2;
                e += r * r;
            }
            if e < best.0 {
                best = (e, u, v);
            }
        }
    }
    (best.1, best.2)
}

/// `√Σ (p - g)²` over the `k` strongest cells of `g`.
pub fn masked_norm(p: &Heatmap, g: &Heatmap, k: usize) -> f64 {
    top_k_by_sort(g.values(), k)
        .into_iter()
        .map(|i| (p.values()[i] - g.values()[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}
