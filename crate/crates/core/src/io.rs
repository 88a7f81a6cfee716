//! Reading and writing fields, patterns and dataset manifests.
//!
//! Scalar fields are stored as raw little-endian `f32` with a JSON sidecar
//! of the same stem (`tile.f32` + `tile.json`). Aerial images may also come
//! as 16-bit grayscale PNG, in which case the sidecar is still required for
//! the pitch and the intensity scale. Binary patterns are PNG, nonzero = 1.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ResistError, Result};
use crate::gradcal::{CalibRecord, Split};
use crate::grids::{BinaryImage, Field2D, Field3D};

/// Sidecar describing a lateral field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub width: usize,
    pub height: usize,
    pub pitch_nm: f64,
    /// Intensity of a full-scale PNG pixel; ignored for raw data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeHeader {
    pub nz: usize,
    pub width: usize,
    pub height: usize,
    pub pitch_nm: f64,
    pub thickness_nm: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| ResistError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| ResistError::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        ResistError::io(path, e)
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| ResistError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| ResistError::load(path, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ResistError::load(path, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn f32_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = read_bytes(path)?;
    if bytes.len() != 4 * expected {
        return Err(ResistError::load(
            path,
            format!("expected {} bytes of f32 data, found {}", 4 * expected, bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Saves a field as raw `f32` plus sidecar. Values are rounded to `f32`.
pub fn save_field(path: &Path, field: &Field2D) -> Result<()> {
    write_atomic(path, &f32_bytes(field.values()))?;
    let header = FieldHeader {
        width: field.width(),
        height: field.height(),
        pitch_nm: field.pitch_nm(),
        intensity_scale: None,
    };
    write_json(&sidecar_path(path), &header)
}

fn load_header(path: &Path) -> Result<FieldHeader> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(ResistError::load(
            path,
            format!("missing sidecar {}", side.display()),
        ));
    }
    read_json(&side)
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn decode_png(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|e| ResistError::load(path, e.to_string()))
}

/// Loads an aerial image from raw `f32` or 16-bit PNG (scaled to
/// `[0, intensity_scale]`).
pub fn load_aerial(path: &Path) -> Result<Field2D> {
    let header = load_header(path)?;
    let values = if is_png(path) {
        let img = decode_png(path)?.into_luma16();
        if (img.width() as usize, img.height() as usize) != (header.width, header.height) {
            return Err(ResistError::load(
                path,
                format!(
                    "image is {}x{} but sidecar says {}x{}",
                    img.width(),
                    img.height(),
                    header.width,
                    header.height
                ),
            ));
        }
        let scale = header.intensity_scale.unwrap_or(1.0);
        img.into_raw()
            .into_iter()
            .map(|p| p as f64 / u16::MAX as f64 * scale)
            .collect()
    } else {
        read_f32(path, header.width * header.height)?
    };
    Field2D::new(header.width, header.height, header.pitch_nm, values)
        .map_err(|e| ResistError::load(path, e.to_string()))
}

/// Saves an aerial image as 16-bit PNG with sidecar; intensities are
/// quantised against `intensity_scale`.
pub fn save_aerial_png(path: &Path, field: &Field2D, intensity_scale: f64) -> Result<()> {
    if !(intensity_scale.is_finite() && intensity_scale > 0.0) {
        return Err(ResistError::invalid("intensity_scale must be > 0"));
    }
    let pixels: Vec<u16> = field
        .values()
        .iter()
        .map(|v| (v / intensity_scale * u16::MAX as f64).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect();
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(field.width() as u32, field.height() as u32, pixels)
        .expect("buffer length matches dimensions");
    write_png(path, image::DynamicImage::ImageLuma16(img))?;
    let header = FieldHeader {
        width: field.width(),
        height: field.height(),
        pitch_nm: field.pitch_nm(),
        intensity_scale: Some(intensity_scale),
    };
    write_json(&sidecar_path(path), &header)
}

fn write_png(path: &Path, img: image::DynamicImage) -> Result<()> {
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, image::ImageFormat::Png)
        .map_err(|e| ResistError::load(path, e.to_string()))?;
    write_atomic(path, &bytes.into_inner())
}

/// Loads a binary pattern; any nonzero pixel is 1.
pub fn load_wafer(path: &Path, pitch_nm: f64) -> Result<BinaryImage> {
    let img = decode_png(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = img.into_raw().into_iter().map(|p| u8::from(p != 0)).collect();
    BinaryImage::new(w, h, pitch_nm, values).map_err(|e| ResistError::load(path, e.to_string()))
}

/// Saves a binary pattern as 8-bit PNG with values 0 and 255.
pub fn save_wafer(path: &Path, img: &BinaryImage) -> Result<()> {
    let pixels: Vec<u8> = img.values().iter().map(|&b| if b != 0 { 255 } else { 0 }).collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, pixels)
        .expect("buffer length matches dimensions");
    write_png(path, image::DynamicImage::ImageLuma8(buf))
}

pub fn save_volume(path: &Path, volume: &Field3D) -> Result<()> {
    write_atomic(path, &f32_bytes(volume.values()))?;
    let header = VolumeHeader {
        nz: volume.nz(),
        width: volume.width(),
        height: volume.height(),
        pitch_nm: volume.pitch_nm(),
        thickness_nm: volume.thickness_nm(),
    };
    write_json(&sidecar_path(path), &header)
}

pub fn load_volume(path: &Path) -> Result<Field3D> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(ResistError::load(path, format!("missing sidecar {}", side.display())));
    }
    let h: VolumeHeader = read_json(&side)?;
    let values = read_f32(path, h.nz * h.width * h.height)?;
    Field3D::new(h.nz, h.width, h.height, h.pitch_nm, h.thickness_nm, values)
        .map_err(|e| ResistError::load(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileEntry {
    pub id: String,
    /// Relative to the manifest root.
    pub aerial: PathBuf,
    pub wafer: PathBuf,
    pub split: Split,
}

/// List of aerial/wafer pairs making up a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    /// Directory the tile paths are relative to; itself relative to the
    /// manifest file.
    #[serde(default = "default_root")]
    pub root: PathBuf,
    pub pitch_nm: f64,
    pub seed: u64,
    pub tiles: Vec<TileEntry>,
    /// Directory of the manifest file, filled in on load.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_root() -> PathBuf {
    PathBuf::from(".")
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: DatasetManifest = read_json(path)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.validate(path)?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.base_dir.join(&self.root).join(relative)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.tiles.is_empty() {
            return Err(ResistError::load(path, "manifest lists no tiles"));
        }
        if !(self.pitch_nm.is_finite() && self.pitch_nm > 0.0) {
            return Err(ResistError::load(path, format!("invalid pitch {}", self.pitch_nm)));
        }
        let mut seen = HashSet::new();
        for t in &self.tiles {
            if !seen.insert(t.id.as_str()) {
                return Err(ResistError::load(path, format!("duplicate tile id '{}'", t.id)));
            }
            for file in [&t.aerial, &t.wafer] {
                let full = self.resolve(file);
                if !full.exists() {
                    return Err(ResistError::load(full, format!("referenced by tile '{}' but missing", t.id)));
                }
            }
        }
        Ok(())
    }

    pub fn count(&self, split: Split) -> usize {
        self.tiles.iter().filter(|t| t.split == split).count()
    }

    pub fn load_tile(&self, tile: &TileEntry) -> Result<CalibRecord> {
        let aerial_path = self.resolve(&tile.aerial);
        let wafer_path = self.resolve(&tile.wafer);
        let aerial = load_aerial(&aerial_path)?;
        if (aerial.pitch_nm() - self.pitch_nm).abs() > 1e-9 * self.pitch_nm {
            return Err(ResistError::load(
                &aerial_path,
                format!("pitch {} nm but manifest says {} nm", aerial.pitch_nm(), self.pitch_nm),
            ));
        }
        let wafer = load_wafer(&wafer_path, self.pitch_nm)?;
        if (wafer.width(), wafer.height()) != (aerial.width(), aerial.height()) {
            return Err(ResistError::load(
                &wafer_path,
                format!(
                    "wafer is {}x{} but aerial is {}x{}",
                    wafer.width(),
                    wafer.height(),
                    aerial.width(),
                    aerial.height()
                ),
            ));
        }
        CalibRecord::new(tile.id.clone(), aerial, wafer, tile.split)
    }

    pub fn load_records(&self) -> Result<Vec<CalibRecord>> {
        self.tiles.iter().map(|t| self.load_tile(t)).collect()
    }

    /// SHA-256 over the manifest entries and the bytes of every referenced
    /// file, in manifest order.
    pub fn content_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.pitch_nm.to_le_bytes());
        h.update(self.seed.to_le_bytes());
        for t in &self.tiles {
            h.update(t.id.as_bytes());
            h.update([0, t.split as u8]);
            let aerial = self.resolve(&t.aerial);
            for file in [aerial.clone(), sidecar_path(&aerial), self.resolve(&t.wafer)] {
                if file.exists() {
                    h.update(read_bytes(&file)?);
                }
            }
        }
        Ok(hex::encode(h.finalize()))
    }
}

/// Serialises rows as CSV and writes them atomically.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| ResistError::load(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ResistError::load(path, e.to_string()))?;
    write_atomic(path, &bytes)
}
