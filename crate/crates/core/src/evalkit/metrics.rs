use serde::Serialize;

use crate::error::{ResistError, Result};
use crate::grids::BinaryImage;

fn check_same(a: &BinaryImage, b: &BinaryImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(ResistError::ShapeMismatch(format!(
            "images are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Percentage of pixels whose labels differ.
pub fn pixel_difference(pred: &BinaryImage, truth: &BinaryImage) -> Result<f64> {
    check_same(pred, truth)?;
    let diff = pred
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(a, b)| a != b)
        .count();
    Ok(100.0 * diff as f64 / truth.len() as f64)
}

/// Foreground pixels with at least one 4-neighbour in the background.
/// Pixels outside the image count as background.
pub fn extract_boundary(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let v = img.values();
    let fg = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && v[y as usize * w + x as usize] != 0
    };
    BinaryImage::from_fn(w, h, img.pitch_nm(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        fg(x, y) && !(fg(x - 1, y) && fg(x + 1, y) && fg(x, y - 1) && fg(x, y + 1))
    })
    .expect("dimensions come from a valid image")
}

/// One-dimensional squared distance transform (lower envelope of parabolas
/// rooted at the finite entries of `f`).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut k: Option<usize> = None;
    for q in 0..f.len() {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            let Some(top) = k else {
                k = Some(0);
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            };
            let p = v[top];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[top] {
                k = top.checked_sub(1);
                continue;
            }
            v[top + 1] = q;
            z[top + 1] = s;
            z[top + 2] = f64::INFINITY;
            k = Some(top + 1);
            break;
        }
    }
    if k.is_none() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance, in pixels², from every pixel to the
/// nearest set pixel; infinite when the image is empty.
pub fn squared_distance_transform(img: &BinaryImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let n = w.max(h);
    let mut grid: Vec<f64> = img
        .values()
        .iter()
        .map(|&b| if b != 0 { 0.0 } else { f64::INFINITY })
        .collect();
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 2]);
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        let row = &mut grid[y * w..(y + 1) * w];
        f[..w].copy_from_slice(row);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        row.copy_from_slice(&out[..w]);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpeReport {
    pub epe_mean_nm: f64,
    pub epe_max_nm: f64,
    /// Number of ground-truth boundary pixels measured.
    pub site_count: usize,
    /// True when the prediction had no boundary and every site was assigned
    /// the cap distance.
    pub capped: bool,
}

/// Edge placement error: distance from each ground-truth boundary pixel to
/// the nearest predicted boundary pixel, in nm. `cap_nm` defaults to the
/// image diagonal and is used when the prediction has no boundary at all.
pub fn epe_stats(pred: &BinaryImage, truth: &BinaryImage, cap_nm: Option<f64>) -> Result<EpeReport> {
    check_same(pred, truth)?;
    let pitch = truth.pitch_nm();
    let cap = cap_nm.unwrap_or_else(|| {
        let (w, h) = (truth.width() as f64, truth.height() as f64);
        pitch * (w * w + h * h).sqrt()
    });
    let sites = extract_boundary(truth);
    let target = extract_boundary(pred);
    let site_count = sites.count_ones();
    if site_count == 0 {
        return Ok(EpeReport {
            epe_mean_nm: 0.0,
            epe_max_nm: 0.0,
            site_count: 0,
            capped: false,
        });
    }
    if target.count_ones() == 0 {
        return Ok(EpeReport {
            epe_mean_nm: cap,
            epe_max_nm: cap,
            site_count,
            capped: true,
        });
    }
    let dist = squared_distance_transform(&target);
    let (mut sum, mut max) = (0.0, 0.0f64);
    for (i, _) in sites.values().iter().enumerate().filter(|(_, &s)| s != 0) {
        let d = dist[i].sqrt() * pitch;
        sum += d;
        max = max.max(d);
    }
    Ok(EpeReport {
        epe_mean_nm: sum / site_count as f64,
        epe_max_nm: max,
        site_count,
        capped: false,
    })
}
