//! Synthetic aerial/wafer datasets with a known reference resist.
//!
//! Masks are random axis-aligned rectangles (openings = 1). The aerial image
//! is the mask blurred by a Gaussian, a stand-in for projection optics and
//! in no way an optical model. Wafers come from the reference resist
//! parameters, so a perfectly calibrated model reproduces them exactly.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::develop::MackParams;
use crate::error::{ResistError, Result};
use crate::exposure::ExposureParams;
use crate::gradcal::{forward_depth, CalibRecord, ResistParams, Split};
use crate::grids::{binarize, Field2D};
use crate::io::{save_field, save_wafer, DatasetManifest, TileEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub count: usize,
    pub tile_px: usize,
    pub pitch_nm: f64,
    pub blur_sigma_nm: f64,
    /// Fraction of tiles assigned to the calibration split.
    pub calibration_fraction: f64,
    pub min_rects: usize,
    pub max_rects: usize,
    pub min_rect_nm: f64,
    pub max_rect_nm: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            count: 64,
            tile_px: 128,
            pitch_nm: 7.0,
            blur_sigma_nm: 25.0,
            calibration_fraction: 0.2,
            min_rects: 3,
            max_rects: 9,
            min_rect_nm: 40.0,
            max_rect_nm: 320.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || self.tile_px == 0 {
            return Err(ResistError::Config("count and tile_px must be >= 1".into()));
        }
        if !(self.pitch_nm > 0.0 && self.blur_sigma_nm > 0.0) {
            return Err(ResistError::Config("pitch and blur sigma must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.calibration_fraction) {
            return Err(ResistError::Config("calibration_fraction must lie in [0, 1]".into()));
        }
        if self.min_rects > self.max_rects || !(0.0 < self.min_rect_nm && self.min_rect_nm <= self.max_rect_nm) {
            return Err(ResistError::Config("rectangle count and size ranges are inverted".into()));
        }
        Ok(())
    }

    /// Number of calibration tiles: the fraction of the count, rounded, and
    /// at least one.
    pub fn calibration_count(&self) -> usize {
        ((self.calibration_fraction * self.count as f64).round() as usize).clamp(1, self.count)
    }
}

/// Reference resist for synthetic data: a penetrable film (B = 6.186/µm)
/// that clears where the blurred openings are bright.
pub fn reference_params() -> ResistParams {
    ResistParams {
        exposure: ExposureParams {
            a: 0.0,
            b: 6.186e-3,
            c_eff: 1.0,
            thickness_nm: 75.0,
            nz: 26,
        },
        development: MackParams {
            n: 5,
            m_th: 0.5,
            r_max: 2.5,
            r_min: 0.025,
            t_dev: 60.0,
        },
        ..ResistParams::default()
    }
}

fn random_mask(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Vec<f64> {
    let n = spec.tile_px;
    let extent = n as f64 * spec.pitch_nm;
    let mut mask = vec![0.0; n * n];
    let count = rng.gen_range(spec.min_rects..=spec.max_rects);
    for _ in 0..count {
        let w = rng.gen_range(spec.min_rect_nm..=spec.max_rect_nm);
        let h = rng.gen_range(spec.min_rect_nm..=spec.max_rect_nm);
        let x0 = rng.gen_range(-0.5 * w..extent - 0.5 * w);
        let y0 = rng.gen_range(-0.5 * h..extent - 0.5 * h);
        let px = |v: f64| ((v / spec.pitch_nm).round().max(0.0) as usize).min(n);
        for y in px(y0)..px(y0 + h) {
            mask[y * n + px(x0)..y * n + px(x0 + w)].fill(1.0);
        }
    }
    mask
}

fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with clamp-to-edge borders; a constant field is
/// left unchanged.
pub fn gaussian_blur(field: &Field2D, sigma_nm: f64) -> Result<Field2D> {
    if !(sigma_nm.is_finite() && sigma_nm > 0.0) {
        return Err(ResistError::invalid(format!("blur sigma must be > 0, got {sigma_nm}")));
    }
    let kernel = gaussian_kernel(sigma_nm / field.pitch_nm());
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (field.width(), field.height());
    let src = field.values();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, k)| k * src[y * w + clamp(x as isize + j as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, k)| k * rows[clamp(y as isize + j as isize - r, h) * w + x])
                .sum();
        }
    }
    Field2D::new(w, h, field.pitch_nm(), out)
}

fn tile_id(i: usize) -> String {
    format!("tile_{i:03}")
}

/// Generates the dataset in memory. Aerial values are rounded to `f32` so
/// that the records equal what [`synth_dataset`] writes to disk.
pub fn synth_records(seed: u64, spec: &SynthSpec, theta_star: &ResistParams) -> Result<Vec<CalibRecord>> {
    spec.validate()?;
    theta_star.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..spec.count).collect();
    order.shuffle(&mut rng);
    let mut split = vec![Split::Test; spec.count];
    for &i in &order[..spec.calibration_count()] {
        split[i] = Split::Calibration;
    }
    (0..spec.count)
        .map(|i| {
            let mask = Field2D::new(spec.tile_px, spec.tile_px, spec.pitch_nm, random_mask(&mut rng, spec))?;
            let blurred = gaussian_blur(&mask, spec.blur_sigma_nm)?;
            let values = blurred.into_values().into_iter().map(|v| v as f32 as f64).collect();
            let aerial = Field2D::new(spec.tile_px, spec.tile_px, spec.pitch_nm, values)?;
            let wafer = binarize(&forward_depth(&aerial, theta_star)?, theta_star.tau)?;
            CalibRecord::new(tile_id(i), aerial, wafer, split[i])
        })
        .collect()
}

/// Writes a synthetic dataset under `dir` and returns its manifest, which
/// is saved as `dir/manifest.json`.
pub fn synth_dataset(dir: &Path, seed: u64, spec: &SynthSpec, theta_star: &ResistParams) -> Result<DatasetManifest> {
    let records = synth_records(seed, spec, theta_star)?;
    let mut tiles = Vec::with_capacity(records.len());
    for r in &records {
        let aerial = PathBuf::from("aerial").join(format!("{}.f32", r.id));
        let wafer = PathBuf::from("wafer").join(format!("{}.png", r.id));
        save_field(&dir.join(&aerial), &r.aerial)?;
        save_wafer(&dir.join(&wafer), &r.wafer)?;
        tiles.push(TileEntry {
            id: r.id.clone(),
            aerial,
            wafer,
            split: r.split,
        });
    }
    let manifest = DatasetManifest {
        root: PathBuf::from("."),
        pitch_nm: spec.pitch_nm,
        seed,
        tiles,
        base_dir: dir.to_path_buf(),
    };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::pixel_difference;

    fn small() -> SynthSpec {
        SynthSpec {
            count: 6,
            tile_px: 32,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn blur_preserves_constants_and_mass() {
        let flat = Field2D::filled(20, 11, 7.0, 1.0).unwrap();
        for v in gaussian_blur(&flat, 25.0).unwrap().values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let spot = Field2D::from_fn(64, 64, 7.0, |x, y| f64::from(u8::from(x == 32 && y == 32))).unwrap();
        let blurred = gaussian_blur(&spot, 25.0).unwrap();
        let total: f64 = blurred.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(blurred.get(32, 32) > blurred.get(34, 32));
    }

    #[test]
    fn split_sizes() {
        let spec = SynthSpec::default();
        assert_eq!(spec.calibration_count(), 13);
        let records = synth_records(5, &small(), &reference_params()).unwrap();
        let calib = records.iter().filter(|r| r.split == Split::Calibration).count();
        assert_eq!(calib, 1);
    }

    #[test]
    fn reference_model_reproduces_its_wafers() {
        let theta = reference_params();
        for r in synth_records(9, &small(), &theta).unwrap() {
            let pred = binarize(&forward_depth(&r.aerial, &theta).unwrap(), theta.tau).unwrap();
            assert_eq!(pixel_difference(&pred, &r.wafer).unwrap(), 0.0);
        }
    }

    #[test]
    fn wafers_are_not_trivial() {
        let records = synth_records(1, &SynthSpec { count: 8, ..SynthSpec::default() }, &reference_params()).unwrap();
        let cleared: usize = records.iter().map(|r| r.wafer.count_ones()).sum();
        let total: usize = records.iter().map(|r| r.wafer.len()).sum();
        let fraction = cleared as f64 / total as f64;
        assert!(fraction > 0.05 && fraction < 0.8, "{fraction}");
        for r in &records {
            assert!(r.aerial.max() <= 1.0 + 1e-6 && r.aerial.min() >= 0.0);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let theta = reference_params();
        let ma = synth_dataset(a.path(), 4, &small(), &theta).unwrap();
        let mb = synth_dataset(b.path(), 4, &small(), &theta).unwrap();
        assert_eq!(ma.content_hash().unwrap(), mb.content_hash().unwrap());
        for t in &ma.tiles {
            let fa = std::fs::read(a.path().join(&t.aerial)).unwrap();
            let fb = std::fs::read(b.path().join(&t.aerial)).unwrap();
            assert_eq!(fa, fb);
        }
        let loaded = DatasetManifest::load(&a.path().join("manifest.json")).unwrap();
        let records = loaded.load_records().unwrap();
        let memory = synth_records(4, &small(), &theta).unwrap();
        for (r, m) in records.iter().zip(&memory) {
            assert_eq!(r.aerial, m.aerial);
            assert_eq!(r.wafer, m.wafer);
            assert_eq!(r.split, m.split);
        }
    }
}
