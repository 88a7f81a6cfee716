//! Threshold baselines applied directly to the aerial image.
//!
//! A pixel clears when its intensity exceeds the threshold. The variable
//! threshold rises with the brightest intensity in a square window:
//! `t(x, y) = m1 + m2 * max_window(I)`.

use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};
use crate::grids::{BinaryImage, Field2D};

/// A tile for fitting: aerial image and ground-truth pattern.
pub type FitPair<'a> = (&'a Field2D, &'a BinaryImage);

pub fn fixed_threshold_predict(aerial: &Field2D, threshold: f64) -> BinaryImage {
    BinaryImage::from_fn(aerial.width(), aerial.height(), aerial.pitch_nm(), |x, y| {
        aerial.get(x, y) > threshold
    })
    .expect("dimensions come from a valid field")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarThresholdParams {
    pub m1: f64,
    pub m2: f64,
    /// Side of the square window in pixels; odd.
    pub window_px: usize,
}

pub const DEFAULT_WINDOW_PX: usize = 21;

impl Default for VarThresholdParams {
    fn default() -> Self {
        VarThresholdParams {
            m1: 0.3,
            m2: 0.0,
            window_px: DEFAULT_WINDOW_PX,
        }
    }
}

fn check_window(window_px: usize) -> Result<()> {
    if window_px == 0 || window_px.is_multiple_of(2) {
        return Err(ResistError::invalid(format!(
            "window must be an odd number of pixels, got {window_px}"
        )));
    }
    Ok(())
}

/// Maximum over a `window x window` square centred on each pixel, with the
/// window clipped at the image edges.
pub fn local_max(aerial: &Field2D, window_px: usize) -> Result<Vec<f64>> {
    check_window(window_px)?;
    let (w, h) = (aerial.width(), aerial.height());
    let r = window_px / 2;
    let v = aerial.values();
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let row = &v[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = row[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = (lo..=hi).map(|j| rows[j * w + x]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    Ok(out)
}

pub fn variable_threshold_predict(aerial: &Field2D, p: &VarThresholdParams) -> Result<BinaryImage> {
    let peak = local_max(aerial, p.window_px)?;
    let v = aerial.values();
    let w = aerial.width();
    BinaryImage::from_fn(w, aerial.height(), aerial.pitch_nm(), |x, y| {
        let i = y * w + x;
        v[i] > p.m1 + p.m2 * peak[i]
    })
}

struct Sample {
    value: f64,
    weight: f64,
    cleared: bool,
}

/// Threshold on `value` minimising the mean per-tile error percentage,
/// found by an exact sweep over every distinct value.
fn sweep(mut samples: Vec<Sample>, start_error: f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.value.total_cmp(&b.value));
    // below the smallest value every pixel is predicted cleared
    let mut error = start_error;
    let first = samples.first().map_or(0.0, |s| s.value);
    let mut best = (first - 1.0, error);
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].value;
        while i < samples.len() && samples[i].value == v {
            let s = &samples[i];
            error += if s.cleared { s.weight } else { -s.weight };
            i += 1;
        }
        let threshold = match samples.get(i) {
            Some(next) => 0.5 * (v + next.value),
            None => v,
        };
        if error < best.1 - 1e-12 {
            best = (threshold, error);
        }
    }
    best
}

fn check_pairs(tiles: &[FitPair<'_>]) -> Result<()> {
    if tiles.is_empty() {
        return Err(ResistError::invalid("no tiles to fit a threshold on"));
    }
    for (a, w) in tiles {
        if a.width() != w.width() || a.height() != w.height() {
            return Err(ResistError::ShapeMismatch(format!(
                "aerial {}x{} vs wafer {}x{}",
                a.width(),
                a.height(),
                w.width(),
                w.height()
            )));
        }
    }
    Ok(())
}

/// Builds sweep samples for `value(i) = I_i - m2 * peak_i`.
fn samples(tiles: &[FitPair<'_>], peaks: &[Vec<f64>], m2: f64) -> (Vec<Sample>, f64) {
    let n_tiles = tiles.len() as f64;
    let mut out = Vec::new();
    let mut start = 0.0;
    for ((aerial, wafer), peak) in tiles.iter().zip(peaks) {
        let weight = 100.0 / (n_tiles * aerial.len() as f64);
        for ((&v, &c), &pk) in aerial.values().iter().zip(wafer.values()).zip(peak) {
            let cleared = c != 0;
            if !cleared {
                start += weight;
            }
            out.push(Sample {
                value: v - m2 * pk,
                weight,
                cleared,
            });
        }
    }
    (out, start)
}

/// Best fixed threshold and its mean pixel difference (%).
pub fn fit_fixed_threshold(tiles: &[FitPair<'_>]) -> Result<(f64, f64)> {
    check_pairs(tiles)?;
    let zeros: Vec<Vec<f64>> = tiles.iter().map(|(a, _)| vec![0.0; a.len()]).collect();
    let (s, start) = samples(tiles, &zeros, 0.0);
    Ok(sweep(s, start))
}

/// Best variable threshold and its mean pixel difference (%). `m1` is
/// solved exactly for each `m2`; `m2` is searched on a grid refined around
/// the best point. Ties keep the smaller `|m2|`, so a fixed threshold wins
/// when nothing beats it.
pub fn fit_variable_threshold(tiles: &[FitPair<'_>], window_px: usize) -> Result<(VarThresholdParams, f64)> {
    check_pairs(tiles)?;
    check_window(window_px)?;
    let peaks: Vec<Vec<f64>> = tiles
        .iter()
        .map(|(a, _)| local_max(a, window_px))
        .collect::<Result<_>>()?;
    let evaluate = |m2: f64| {
        let (s, start) = samples(tiles, &peaks, m2);
        let (m1, err) = sweep(s, start);
        (m1, m2, err)
    };
    let mut best = evaluate(0.0);
    let consider = |cand: (f64, f64, f64), best: &mut (f64, f64, f64)| {
        let better = cand.2 < best.2 - 1e-12 || (cand.2 <= best.2 + 1e-12 && cand.1.abs() < best.1.abs());
        if better {
            *best = cand;
        }
    };
    let (mut centre, mut step) = (0.0, 0.1);
    for _ in 0..4 {
        for i in -10i32..=10 {
            let m2 = centre + i as f64 * step;
            if i != 0 || centre != 0.0 {
                consider(evaluate(m2), &mut best);
            }
        }
        centre = best.1;
        step /= 10.0;
    }
    let (m1, m2, err) = best;
    Ok((VarThresholdParams { m1, m2, window_px }, err))
}
