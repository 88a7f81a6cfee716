//! Development: Mack dissolution rate and propagation of the developer front.

mod fmm;

pub use fmm::{develop_fmm, fast_march, Seed};

use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};
use crate::grids::{Field2D, Field3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MackParams {
    /// Dissolution reaction order.
    pub n: u32,
    /// Inhibitor concentration at the inflection of the rate curve.
    pub m_th: f64,
    /// Maximum development rate, nm/s.
    pub r_max: f64,
    /// Dark (unexposed) development rate, nm/s.
    pub r_min: f64,
    /// Development time, s.
    pub t_dev: f64,
}

impl Default for MackParams {
    fn default() -> Self {
        MackParams {
            n: 5,
            m_th: 0.5,
            r_max: 2.5,
            r_min: 0.025,
            t_dev: 60.0,
        }
    }
}

impl MackParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ResistError::invalid(format!(
                "reaction order must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.m_th > 0.0 && self.m_th < 1.0) {
            return Err(ResistError::invalid(format!(
                "m_th must lie in (0, 1), got {}",
                self.m_th
            )));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(ResistError::invalid(format!("r_max must be > 0, got {}", self.r_max)));
        }
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return Err(ResistError::invalid(format!("r_min must be >= 0, got {}", self.r_min)));
        }
        if !(self.t_dev.is_finite() && self.t_dev > 0.0) {
            return Err(ResistError::invalid(format!("t_dev must be > 0, got {}", self.t_dev)));
        }
        Ok(())
    }

    pub fn curve(&self) -> Result<MackCurve> {
        self.validate()?;
        Ok(MackCurve {
            n: self.n as i32,
            a: inflection_a(self.n, self.m_th)?,
            r_max: self.r_max,
            r_min: self.r_min,
        })
    }
}

/// `a = (n + 1) / (n - 1) * (1 - m_th)^n`, placing the inflection of the
/// rate curve at `M = m_th`.
pub fn inflection_a(n: u32, m_th: f64) -> Result<f64> {
    if n < 2 {
        return Err(ResistError::invalid(format!("reaction order must be >= 2, got {n}")));
    }
    if !(m_th > 0.0 && m_th < 1.0) {
        return Err(ResistError::invalid(format!("m_th must lie in (0, 1), got {m_th}")));
    }
    let n = n as f64;
    Ok((n + 1.0) / (n - 1.0) * (1.0 - m_th).powf(n))
}

/// The Mack rate law with `a` already resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MackCurve {
    pub n: i32,
    pub a: f64,
    pub r_max: f64,
    pub r_min: f64,
}

/// Rate and its partial derivatives at one inhibitor value.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RatePartials {
    pub rate: f64,
    /// dr/dr_max, the normalised saturation term.
    pub shape: f64,
    pub d_inhibitor: f64,
    pub d_a: f64,
}

impl MackCurve {
    /// `r = r_max (a + 1) (1 - M)^n / (a + (1 - M)^n) + r_min`
    #[inline]
    pub fn rate(&self, inhibitor: f64) -> f64 {
        let u = (1.0 - inhibitor).powi(self.n);
        self.r_max * (self.a + 1.0) * u / (self.a + u) + self.r_min
    }

    #[inline]
    pub(crate) fn partials(&self, inhibitor: f64) -> RatePartials {
        let x = 1.0 - inhibitor;
        let u_prev = x.powi(self.n - 1);
        let u = u_prev * x;
        let denom = self.a + u;
        let shape = (self.a + 1.0) * u / denom;
        let d_u = self.r_max * (self.a + 1.0) * self.a / (denom * denom);
        RatePartials {
            rate: self.r_max * shape + self.r_min,
            shape,
            d_inhibitor: -d_u * self.n as f64 * u_prev,
            d_a: self.r_max * u * (u - 1.0) / (denom * denom),
        }
    }
}

/// Pointwise development rate for an inhibitor volume.
pub fn mack_rate(inhibitor: &Field3D, p: &MackParams) -> Result<Field3D> {
    let curve = p.curve()?;
    if let Some(m) = inhibitor
        .values()
        .iter()
        .find(|&&m| !(-1e-9..=1.0 + 1e-9).contains(&m))
    {
        return Err(ResistError::invalid(format!(
            "inhibitor concentration {m} outside [0, 1]"
        )));
    }
    inhibitor.map(|m| curve.rate(m.clamp(0.0, 1.0)))
}

/// Where the developer front stopped in one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Envelope {
    /// Developed depth normalised by the resist thickness.
    pub depth: f64,
    /// Slice `k` and fraction `f` with the front between slices `k` and
    /// `k + 1`; `None` when the depth sits on a clamp.
    pub bracket: Option<(usize, f64)>,
}

/// Deepest point of a column whose arrival time is at most `t_dev`,
/// interpolated linearly between slices.
pub(crate) fn envelope(times: &[f64], t_dev: f64) -> Envelope {
    let last = times.len() - 1;
    match times.iter().rposition(|&t| t <= t_dev) {
        None => Envelope {
            depth: 0.0,
            bracket: None,
        },
        Some(k) if k == last => Envelope {
            depth: 1.0,
            bracket: None,
        },
        Some(k) => {
            let f = (t_dev - times[k]) / (times[k + 1] - times[k]);
            Envelope {
                depth: (k as f64 + f) / last as f64,
                bracket: Some((k, f)),
            }
        }
    }
}

/// Cumulative trapezoid integral of `1 / r` down a column.
pub(crate) fn vertical_times(rates: &[f64], dz: f64, out: &mut [f64]) {
    out[0] = 0.0;
    for k in 1..rates.len() {
        out[k] = out[k - 1] + 0.5 * dz * (1.0 / rates[k - 1] + 1.0 / rates[k]);
    }
}

pub(crate) fn check_rate(rate: &Field3D) -> Result<()> {
    if let Some(r) = rate.values().iter().find(|&&r| r <= 0.0) {
        return Err(ResistError::invalid(format!(
            "development rate must be positive, found {r}"
        )));
    }
    Ok(())
}

pub(crate) fn check_t_dev(t_dev: f64) -> Result<()> {
    if !(t_dev.is_finite() && t_dev > 0.0) {
        return Err(ResistError::invalid(format!("t_dev must be > 0, got {t_dev}")));
    }
    Ok(())
}

/// Arrival times along purely vertical development paths.
pub fn vertical_arrival_times(rate: &Field3D) -> Result<Field3D> {
    check_rate(rate)?;
    let n = rate.slice_len();
    let dz = rate.dz_nm();
    let mut times = vec![0.0; rate.values().len()];
    for k in 1..rate.nz() {
        let (above, below) = times.split_at_mut(k * n);
        let above = &above[(k - 1) * n..];
        let r_above = rate.slice(k - 1);
        let r_below = rate.slice(k);
        for j in 0..n {
            below[j] = above[j] + 0.5 * dz * (1.0 / r_above[j] + 1.0 / r_below[j]);
        }
    }
    Field3D::new(
        rate.nz(),
        rate.width(),
        rate.height(),
        rate.pitch_nm(),
        rate.thickness_nm(),
        times,
    )
}

/// Developed depth (normalised to [0, 1]) when the developer only travels
/// straight down each column.
pub fn develop_vertical(rate: &Field3D, t_dev: f64) -> Result<Field2D> {
    check_t_dev(t_dev)?;
    let times = vertical_arrival_times(rate)?;
    depth_map(&times, t_dev)
}

/// Per-column envelope `T = t_dev` of an arrival-time volume.
pub(crate) fn depth_map(times: &Field3D, t_dev: f64) -> Result<Field2D> {
    let mut column = vec![0.0; times.nz()];
    Field2D::from_fn(times.width(), times.height(), times.pitch_nm(), |x, y| {
        for (c, t) in column.iter_mut().zip(times.column(x, y)) {
            *c = t;
        }
        envelope(&column, t_dev).depth
    })
}
