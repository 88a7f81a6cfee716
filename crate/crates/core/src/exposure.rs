//! Dill exposure: light absorption through the resist and photolytic
//! destruction of the inhibitor.
//!
//! With `M` the fractional inhibitor concentration and `I` the intensity,
//!
//! ```text
//! dI/dz = -I (A M + B)          I(0)   = R(x, y)
//! dM/dt = -I M C                M(z,0) = 1
//! ```
//!
//! Exposure time is normalised to 1 and folded into `c_eff`. When `A = 0`
//! the intensity no longer depends on `M` and the system has the closed
//! form `M = exp(-c_eff R exp(-B z))`.

use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};
use crate::grids::{Field2D, Field3D};

/// Default number of exposure time steps for the general solver.
pub const DEFAULT_TIME_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExposureParams {
    /// Bleachable absorption, 1/nm.
    pub a: f64,
    /// Non-bleachable absorption, 1/nm.
    pub b: f64,
    /// Exposure rate constant times exposure time, per unit aerial intensity.
    pub c_eff: f64,
    pub thickness_nm: f64,
    /// Number of depth slices, top and bottom surfaces included.
    pub nz: usize,
}

impl Default for ExposureParams {
    fn default() -> Self {
        ExposureParams {
            a: 0.0,
            b: 6.186,
            c_eff: 1.0,
            thickness_nm: 75.0,
            nz: 26,
        }
    }
}

impl ExposureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(ResistError::invalid(format!("A must be >= 0, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(ResistError::invalid(format!("B must be >= 0, got {}", self.b)));
        }
        if !(self.c_eff.is_finite() && self.c_eff > 0.0) {
            return Err(ResistError::invalid(format!(
                "C_eff must be > 0, got {}",
                self.c_eff
            )));
        }
        if !(self.thickness_nm.is_finite() && self.thickness_nm > 0.0) {
            return Err(ResistError::invalid(format!(
                "thickness must be > 0, got {}",
                self.thickness_nm
            )));
        }
        if self.nz < 2 {
            return Err(ResistError::invalid(format!("nz must be >= 2, got {}", self.nz)));
        }
        Ok(())
    }

    pub fn dz_nm(&self) -> f64 {
        self.thickness_nm / (self.nz - 1) as f64
    }

    /// Depth of slice `k` below the resist top.
    pub fn depth_nm(&self, k: usize) -> f64 {
        k as f64 * self.dz_nm()
    }
}

fn check_aerial(aerial: &Field2D) -> Result<()> {
    if let Some(v) = aerial.values().iter().find(|&&v| v < 0.0) {
        return Err(ResistError::invalid(format!(
            "aerial intensity must be non-negative, found {v}"
        )));
    }
    Ok(())
}

fn volume(aerial: &Field2D, p: &ExposureParams, values: Vec<f64>) -> Result<Field3D> {
    Field3D::new(
        p.nz,
        aerial.width(),
        aerial.height(),
        aerial.pitch_nm(),
        p.thickness_nm,
        values,
    )
}

/// Inhibitor concentration at the end of exposure for a non-bleaching
/// resist (`A = 0`).
pub fn solve_exposure_closed_form(aerial: &Field2D, p: &ExposureParams) -> Result<Field3D> {
    p.validate()?;
    if p.a != 0.0 {
        return Err(ResistError::invalid(
            "closed-form exposure requires A = 0; use solve_exposure_general",
        ));
    }
    check_aerial(aerial)?;
    let mut values = Vec::with_capacity(p.nz * aerial.len());
    for k in 0..p.nz {
        let attenuation = (-p.b * p.depth_nm(k)).exp();
        values.extend(
            aerial
                .values()
                .iter()
                .map(|&r| (-p.c_eff * r * attenuation).exp()),
        );
    }
    volume(aerial, p, values)
}

/// Integrates `dI/dz = -I (A M + B)` down every column with the exact
/// exponential of the trapezoid-averaged absorption over each slice gap.
/// `inhibitor` and `out` are slice-major with `surface.len()` pixels per slice.
fn attenuate(surface: &[f64], inhibitor: &[f64], a: f64, b: f64, dz: f64, out: &mut [f64]) {
    let n = surface.len();
    out[..n].copy_from_slice(surface);
    let bleach = 0.5 * a * dz;
    let base = (-b * dz).exp();
    let nz = out.len() / n;
    for k in 1..nz {
        let (above, below) = out.split_at_mut(k * n);
        let above = &above[(k - 1) * n..];
        let below = &mut below[..n];
        let m_above = &inhibitor[(k - 1) * n..k * n];
        let m_below = &inhibitor[k * n..(k + 1) * n];
        if bleach == 0.0 {
            for (o, &i) in below.iter_mut().zip(above) {
                *o = i * base;
            }
        } else {
            for j in 0..n {
                below[j] = above[j] * base * (-bleach * (m_above[j] + m_below[j])).exp();
            }
        }
    }
}

/// General Dill solver for any `A >= 0`.
///
/// Each column tracks the accumulated dose `D = C ∫ I dt` so that
/// `M = exp(-D)` stays in (0, 1]. Every step predicts the half-step
/// inhibitor from the previous mid-step intensity, integrates the intensity
/// through it, and advances the dose by a full step. The scheme is second
/// order in `1 / nt` and exact in time when `A = 0`.
pub fn solve_exposure_general(aerial: &Field2D, p: &ExposureParams, nt: usize) -> Result<Field3D> {
    p.validate()?;
    if nt < 2 {
        return Err(ResistError::invalid(format!("need at least 2 time steps, got {nt}")));
    }
    check_aerial(aerial)?;

    let n = aerial.len();
    let total = p.nz * n;
    let dz = p.dz_nm();
    let step = p.c_eff / nt as f64;
    let surface = aerial.values();

    let mut dose = vec![0.0; total];
    let mut inhibitor = vec![1.0; total];
    let mut intensity = vec![0.0; total];
    attenuate(surface, &inhibitor, p.a, p.b, dz, &mut intensity);

    for _ in 0..nt {
        if p.a != 0.0 {
            for ((m, &d), &i) in inhibitor.iter_mut().zip(&dose).zip(&intensity) {
                *m = (-(d + 0.5 * step * i)).exp();
            }
        }
        attenuate(surface, &inhibitor, p.a, p.b, dz, &mut intensity);
        for (d, &i) in dose.iter_mut().zip(&intensity) {
            *d += step * i;
        }
    }

    let values = dose.into_iter().map(|d| (-d).exp()).collect();
    volume(aerial, p, values)
}

/// Intensity inside the resist for a given inhibitor distribution.
pub fn intensity_profile(aerial: &Field2D, inhibitor: &Field3D, p: &ExposureParams) -> Result<Field3D> {
    p.validate()?;
    if inhibitor.width() != aerial.width()
        || inhibitor.height() != aerial.height()
        || inhibitor.nz() != p.nz
    {
        return Err(ResistError::invalid(format!(
            "inhibitor volume {}x{}x{} does not match aerial {}x{} with {} slices",
            inhibitor.nz(),
            inhibitor.height(),
            inhibitor.width(),
            aerial.height(),
            aerial.width(),
            p.nz
        )));
    }
    let mut out = vec![0.0; inhibitor.values().len()];
    attenuate(aerial.values(), inhibitor.values(), p.a, p.b, p.dz_nm(), &mut out);
    volume(aerial, p, out)
}
