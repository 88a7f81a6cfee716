//! Differentiable forward model: closed-form exposure, Mack rate, vertical
//! development, evaluated column by column without materialising volumes.
//!
//! The reverse pass for one column mirrors the forward steps:
//!
//! ```text
//! depth = (k + f) / (nz - 1),   f = (t_dev - T_k) / (T_{k+1} - T_k)
//! T_m   = sum_{j<m} dz/2 (1/r_j + 1/r_{j+1})
//! r_j   = r_max (a+1) u_j / (a + u_j) + r_min,   u_j = (1 - M_j)^n
//! M_j   = exp(-C R exp(-B z_j))
//! ```
//!
//! Columns that reach the substrate (or never start) sit on a clamp and
//! contribute no gradient.

use crate::develop::{envelope, vertical_times, MackCurve};
use crate::error::{ResistError, Result};
use crate::grids::{BinaryImage, Field2D};

use super::loss::{check_pair, pixel_bce};
use super::params::{ParamId, ParamVec, ResistParams};

pub(crate) struct ColumnModel {
    c_eff: f64,
    dz: f64,
    t_dev: f64,
    curve: MackCurve,
    da_dmth: f64,
    depth_nm: Vec<f64>,
    attenuation: Vec<f64>,
}

#[derive(Default)]
pub(crate) struct Scratch {
    inhibitor: Vec<f64>,
    rate: Vec<f64>,
    times: Vec<f64>,
}

impl ColumnModel {
    pub fn new(params: &ResistParams) -> Result<Self> {
        params.validate()?;
        let exposure = &params.exposure;
        if exposure.a != 0.0 {
            return Err(ResistError::invalid(
                "the differentiable model requires a non-bleaching resist (A = 0)",
            ));
        }
        let mack = &params.development;
        let curve = mack.curve()?;
        let n = mack.n as f64;
        let depth_nm: Vec<f64> = (0..exposure.nz).map(|k| exposure.depth_nm(k)).collect();
        Ok(ColumnModel {
            c_eff: exposure.c_eff,
            dz: exposure.dz_nm(),
            t_dev: mack.t_dev,
            curve,
            da_dmth: -n * (n + 1.0) / (n - 1.0) * (1.0 - mack.m_th).powi(mack.n as i32 - 1),
            attenuation: depth_nm.iter().map(|z| (-exposure.b * z).exp()).collect(),
            depth_nm,
        })
    }

    fn nz(&self) -> usize {
        self.depth_nm.len()
    }

    fn fill(&self, intensity: f64, s: &mut Scratch) {
        let nz = self.nz();
        s.inhibitor.resize(nz, 0.0);
        s.rate.resize(nz, 0.0);
        s.times.resize(nz, 0.0);
        for k in 0..nz {
            let m = (-self.c_eff * intensity * self.attenuation[k]).exp();
            s.inhibitor[k] = m;
            s.rate[k] = self.curve.rate(m);
        }
        vertical_times(&s.rate, self.dz, &mut s.times);
    }

    pub fn depth(&self, intensity: f64, s: &mut Scratch) -> f64 {
        self.fill(intensity, s);
        envelope(&s.times, self.t_dev).depth
    }

    /// Depth of one column; accumulates `upstream * d(depth)/d(param)` into
    /// `grad` for B, C_eff, m_th, r_max, r_min and t_dev.
    pub fn depth_backward(&self, intensity: f64, upstream: f64, s: &mut Scratch, grad: &mut ParamVec) -> f64 {
        self.fill(intensity, s);
        let env = envelope(&s.times, self.t_dev);
        let Some((k, f)) = env.bracket else {
            return env.depth;
        };
        let last = (self.nz() - 1) as f64;
        let gap = s.times[k + 1] - s.times[k];
        let g = upstream / last;
        grad[ParamId::TDev] += g / gap;

        // adjoints of T_k and T_{k+1}
        let g_lo = g * (f - 1.0) / gap;
        let g_hi = -g * f / gap;
        let half = 0.5 * self.dz;
        let mut g_a = 0.0;
        for j in 0..=k + 1 {
            // how many trapezoid cells of T_m contain slowness j
            let cells = |m: usize| (1..=m).contains(&j) as u8 as f64 + (j < m) as u8 as f64;
            let g_slowness = half * (g_lo * cells(k) + g_hi * cells(k + 1));
            let m = s.inhibitor[j];
            let p = self.curve.partials(m);
            let g_rate = -g_slowness / (p.rate * p.rate);
            grad[ParamId::RMax] += g_rate * p.shape;
            grad[ParamId::RMin] += g_rate;
            g_a += g_rate * p.d_a;
            let g_m = g_rate * p.d_inhibitor;
            let e = self.attenuation[j];
            grad[ParamId::CEff] += g_m * (-intensity * e * m);
            grad[ParamId::B] += g_m * (self.c_eff * intensity * self.depth_nm[j] * e * m);
        }
        grad[ParamId::MTh] += g_a * self.da_dmth;
        env.depth
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

/// Normalised developed depth for an aerial image.
pub fn forward_depth(aerial: &Field2D, params: &ResistParams) -> Result<Field2D> {
    let model = ColumnModel::new(params)?;
    check_aerial(aerial)?;
    let mut scratch = Scratch::default();
    let values = aerial
        .values()
        .iter()
        .map(|&r| model.depth(r, &mut scratch))
        .collect();
    Field2D::new(aerial.width(), aerial.height(), aerial.pitch_nm(), values)
}

/// Soft loss of one aerial/wafer pair and its gradient with respect to every
/// parameter, frozen or not.
pub fn loss_and_full_grad(
    aerial: &Field2D,
    wafer: &BinaryImage,
    params: &ResistParams,
) -> Result<(f64, ParamVec)> {
    let model = ColumnModel::new(params)?;
    check_aerial(aerial)?;
    check_pair(aerial.width(), aerial.height(), wafer)?;
    let n = aerial.len() as f64;
    let (tau, s) = (params.tau, params.sharpness);
    let mut scratch = Scratch::default();
    let mut grad = ParamVec::zeros();
    let mut loss = 0.0;
    let mut column_grad = ParamVec::zeros();
    for (&r, &w) in aerial.values().iter().zip(wafer.values()) {
        // The loss slope needs the depth first; a cheap forward pass gives
        // it, then the reverse pass runs only where the slope is non-zero.
        let depth = model.depth(r, &mut scratch);
        let (l, slope) = pixel_bce(s * (depth - tau), w != 0);
        loss += l;
        if slope == 0.0 {
            continue;
        }
        grad[ParamId::Tau] -= s * slope;
        grad[ParamId::Sharpness] += (depth - tau) * slope;
        column_grad.0 = [0.0; 8];
        model.depth_backward(r, s * slope, &mut scratch, &mut column_grad);
        grad.add_scaled(&column_grad, 1.0);
    }
    for v in grad.0.iter_mut() {
        *v /= n;
    }
    Ok((loss / n, grad))
}
