//! Scalar grids shared by every stage of the pipeline.
//!
//! Lateral grids ([`Field2D`], [`BinaryImage`]) are row-major. Resist volumes
//! ([`Field3D`]) are stored slice by slice from the resist top (`z = 0`) down
//! to the substrate, each slice row-major. Physical coordinates are anchored
//! at pixel centres: sample `i` sits at `i * pitch_nm`, so a grid of `w`
//! pixels spans `(w - 1) * pitch_nm` nanometres.

use crate::error::{ResistError, Result};

fn check_lateral(width: usize, height: usize, pitch_nm: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(ResistError::invalid(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    if !(pitch_nm.is_finite() && pitch_nm > 0.0) {
        return Err(ResistError::invalid(format!(
            "pitch must be positive and finite, got {pitch_nm}"
        )));
    }
    Ok(())
}

/// Lateral scalar grid: an aerial image or a developed-depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    width: usize,
    height: usize,
    pitch_nm: f64,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(width: usize, height: usize, pitch_nm: f64, values: Vec<f64>) -> Result<Self> {
        check_lateral(width, height, pitch_nm)?;
        if values.len() != width * height {
            return Err(ResistError::ShapeMismatch(format!(
                "{}x{} grid needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ResistError::invalid(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Field2D {
            width,
            height,
            pitch_nm,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, pitch_nm: f64, value: f64) -> Result<Self> {
        Self::new(width, height, pitch_nm, vec![value; width * height])
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        pitch_nm: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, pitch_nm, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch_nm(&self) -> f64 {
        self.pitch_nm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Physical span `(x, y)` between the first and last pixel centres.
    pub fn extent_nm(&self) -> (f64, f64) {
        (
            (self.width - 1) as f64 * self.pitch_nm,
            (self.height - 1) as f64 * self.pitch_nm,
        )
    }

    pub fn same_shape(&self, other: &Field2D) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Resist-volume scalar grid (inhibitor, development rate, arrival time).
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    nz: usize,
    width: usize,
    height: usize,
    pitch_nm: f64,
    dz_nm: f64,
    values: Vec<f64>,
}

impl Field3D {
    /// `thickness_nm` is split into `nz - 1` equal intervals; slice 0 is the
    /// resist top and slice `nz - 1` the substrate interface.
    pub fn new(
        nz: usize,
        width: usize,
        height: usize,
        pitch_nm: f64,
        thickness_nm: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_lateral(width, height, pitch_nm)?;
        if nz < 2 {
            return Err(ResistError::invalid(format!("need at least 2 slices, got {nz}")));
        }
        if !(thickness_nm.is_finite() && thickness_nm > 0.0) {
            return Err(ResistError::invalid(format!(
                "thickness must be positive, got {thickness_nm}"
            )));
        }
        if values.len() != nz * width * height {
            return Err(ResistError::ShapeMismatch(format!(
                "{nz}x{height}x{width} volume needs {} values, got {}",
                nz * width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ResistError::invalid(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Field3D {
            nz,
            width,
            height,
            pitch_nm,
            dz_nm: thickness_nm / (nz - 1) as f64,
            values,
        })
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch_nm(&self) -> f64 {
        self.pitch_nm
    }

    pub fn dz_nm(&self) -> f64 {
        self.dz_nm
    }

    pub fn thickness_nm(&self) -> f64 {
        self.dz_nm * (self.nz - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Number of lateral pixels in one slice.
    pub fn slice_len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, k: usize, x: usize, y: usize) -> usize {
        (k * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, k: usize, x: usize, y: usize) -> f64 {
        self.values[self.index(k, x, y)]
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.slice_len();
        &self.values[k * n..(k + 1) * n]
    }

    /// Values of the vertical column at `(x, y)`, top to bottom.
    pub fn column(&self, x: usize, y: usize) -> impl Iterator<Item = f64> + '_ {
        let n = self.slice_len();
        let offset = y * self.width + x;
        (0..self.nz).map(move |k| self.values[k * n + offset])
    }

    pub fn same_shape(&self, other: &Field3D) -> bool {
        self.nz == other.nz && self.width == other.width && self.height == other.height
    }

    /// Replaces every value through `f`, keeping the geometry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field3D> {
        Field3D::new(
            self.nz,
            self.width,
            self.height,
            self.pitch_nm,
            self.thickness_nm(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Thresholded wafer or resist pattern with pixel values exactly 0 or 1.
///
/// A 1 marks resist that has been developed through (cleared).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pitch_nm: f64,
    values: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pitch_nm: f64, values: Vec<u8>) -> Result<Self> {
        check_lateral(width, height, pitch_nm)?;
        if values.len() != width * height {
            return Err(ResistError::ShapeMismatch(format!(
                "{}x{} image needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|&v| v > 1) {
            return Err(ResistError::invalid(format!(
                "binary image value {} at index {i}",
                values[i]
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            pitch_nm,
            values,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        pitch_nm: f64,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y) as u8);
            }
        }
        Self::new(width, height, pitch_nm, values)
    }

    pub fn zeros(width: usize, height: usize, pitch_nm: f64) -> Result<Self> {
        Self::new(width, height, pitch_nm, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch_nm(&self) -> f64 {
        self.pitch_nm
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x] != 0
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn complement(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            pitch_nm: self.pitch_nm,
            values: self.values.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// The image as a 0.0/1.0 field, e.g. to feed it back through [`binarize`].
    pub fn to_field(&self) -> Field2D {
        Field2D {
            width: self.width,
            height: self.height,
            pitch_nm: self.pitch_nm,
            values: self.values.iter().map(|&v| v as f64).collect(),
        }
    }
}

fn resampled_len(len: usize, pitch: f64, target: f64) -> Result<usize> {
    let span = (len - 1) as f64 * pitch / target;
    if !span.is_finite() || span > (u32::MAX as f64) {
        return Err(ResistError::invalid(format!(
            "resampling {len} pixels from {pitch} nm to {target} nm is out of range"
        )));
    }
    let n = span.round() as usize + 1;
    if n == 0 {
        return Err(ResistError::invalid("resampled dimension is zero"));
    }
    Ok(n)
}

/// Lower sample index and interpolation weight for a source coordinate,
/// clamped to the source grid.
#[inline]
fn bracket(u: f64, len: usize) -> (usize, f64) {
    if len == 1 {
        return (0, 0.0);
    }
    let u = u.clamp(0.0, (len - 1) as f64);
    let i0 = (u.floor() as usize).min(len - 2);
    (i0, u - i0 as f64)
}

/// Resamples `src` onto a grid of pitch `target_pitch_nm` covering the same
/// physical extent, using bilinear interpolation with clamp-to-edge borders.
pub fn resample_bilinear(src: &Field2D, target_pitch_nm: f64) -> Result<Field2D> {
    if !(target_pitch_nm.is_finite() && target_pitch_nm > 0.0) {
        return Err(ResistError::invalid(format!(
            "target pitch must be positive, got {target_pitch_nm}"
        )));
    }
    let width = resampled_len(src.width, src.pitch_nm, target_pitch_nm)?;
    let height = resampled_len(src.height, src.pitch_nm, target_pitch_nm)?;
    let scale = target_pitch_nm / src.pitch_nm;

    let cols: Vec<(usize, f64)> = (0..width)
        .map(|i| bracket(i as f64 * scale, src.width))
        .collect();
    let x_step = usize::from(src.width > 1);
    let mut values = Vec::with_capacity(width * height);
    for j in 0..height {
        let (y0, fy) = bracket(j as f64 * scale, src.height);
        let y1 = if src.height > 1 { y0 + 1 } else { y0 };
        let row0 = &src.values[y0 * src.width..(y0 + 1) * src.width];
        let row1 = &src.values[y1 * src.width..(y1 + 1) * src.width];
        for &(x0, fx) in &cols {
            let x1 = x0 + x_step;
            let top = (1.0 - fx) * row0[x0] + fx * row0[x1];
            let bottom = (1.0 - fx) * row1[x0] + fx * row1[x1];
            values.push((1.0 - fy) * top + fy * bottom);
        }
    }
    Field2D::new(width, height, target_pitch_nm, values)
}

/// Thresholds a normalized depth map: 1 where `depth > tau`, ties go to 0.
pub fn binarize(depth: &Field2D, tau: f64) -> Result<BinaryImage> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ResistError::invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    Ok(BinaryImage {
        width: depth.width,
        height: depth.height,
        pitch_nm: depth.pitch_nm,
        values: depth.values.iter().map(|&d| (d > tau) as u8).collect(),
    })
}
