use crate::error::{ResistError, Result};
use crate::grids::{BinaryImage, Field2D};

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one pixel together with `dloss/dx`, where the
/// prediction is `sigmoid(x)`. The derivative is zero while the probability
/// sits on a clamp.
#[inline]
pub(crate) fn pixel_bce(x: f64, target: bool) -> (f64, f64) {
    let p = sigmoid(x);
    let clamped = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let loss = if target { -clamped.ln() } else { -(1.0 - clamped).ln() };
    let slope = if clamped == p { p - f64::from(u8::from(target)) } else { 0.0 };
    (loss, slope)
}

pub(crate) fn check_pair(depth_w: usize, depth_h: usize, wafer: &BinaryImage) -> Result<()> {
    if depth_w != wafer.width() || depth_h != wafer.height() {
        return Err(ResistError::ShapeMismatch(format!(
            "depth map is {depth_w}x{depth_h} but wafer is {}x{}",
            wafer.width(),
            wafer.height()
        )));
    }
    Ok(())
}

/// Mean binary cross-entropy between `sigmoid(s (depth - tau))` and the wafer.
pub fn soft_loss(depth: &Field2D, wafer: &BinaryImage, tau: f64, s: f64) -> Result<f64> {
    check_pair(depth.width(), depth.height(), wafer)?;
    let total: f64 = depth
        .values()
        .iter()
        .zip(wafer.values())
        .map(|(&d, &w)| pixel_bce(s * (d - tau), w != 0).0)
        .sum();
    Ok(total / depth.len() as f64)
}
