use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::develop::MackParams;
use crate::error::{ResistError, Result};
use crate::exposure::ExposureParams;

/// Parameters that calibration may adjust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    B,
    CEff,
    MTh,
    RMax,
    RMin,
    TDev,
    Tau,
    Sharpness,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::B,
        ParamId::CEff,
        ParamId::MTh,
        ParamId::RMax,
        ParamId::RMin,
        ParamId::TDev,
        ParamId::Tau,
        ParamId::Sharpness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::B => "b",
            ParamId::CEff => "c_eff",
            ParamId::MTh => "m_th",
            ParamId::RMax => "r_max",
            ParamId::RMin => "r_min",
            ParamId::TDev => "t_dev",
            ParamId::Tau => "tau",
            ParamId::Sharpness => "sharpness",
        }
    }

    #[inline]
    fn slot(self) -> usize {
        self as usize
    }

    /// Closed interval each parameter is projected back into after an
    /// optimizer step.
    pub fn domain(self) -> (f64, f64) {
        const TINY: f64 = 1e-9;
        match self {
            ParamId::B => (0.0, f64::INFINITY),
            ParamId::CEff | ParamId::RMax | ParamId::RMin | ParamId::TDev => (TINY, f64::INFINITY),
            ParamId::MTh => (1e-4, 1.0 - 1e-4),
            ParamId::Tau => (1e-6, 1.0 - 1e-6),
            ParamId::Sharpness => (1e-6, f64::INFINITY),
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = ResistError;

    fn from_str(s: &str) -> Result<Self> {
        ParamId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ResistError::invalid(format!("unknown parameter '{s}'")))
    }
}

/// One value per [`ParamId`]; used for gradients and optimizer moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamVec(pub [f64; 8]);

impl ParamVec {
    pub fn zeros() -> Self {
        ParamVec([0.0; 8])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, f64)> + '_ {
        ParamId::ALL.into_iter().map(move |p| (p, self[p]))
    }

    pub fn add_scaled(&mut self, other: &ParamVec, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += scale * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<ParamId> for ParamVec {
    type Output = f64;

    fn index(&self, p: ParamId) -> &f64 {
        &self.0[p.slot()]
    }
}

impl IndexMut<ParamId> for ParamVec {
    fn index_mut(&mut self, p: ParamId) -> &mut f64 {
        &mut self.0[p.slot()]
    }
}

/// Full parameter set of the resist model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResistParams {
    pub exposure: ExposureParams,
    pub development: MackParams,
    /// Threshold on the normalised depth.
    pub tau: f64,
    /// Sigmoid sharpness of the differentiable threshold.
    pub sharpness: f64,
    /// Parameters the optimizer may move; all others stay frozen.
    pub calibrate: Vec<ParamId>,
}

impl Default for ResistParams {
    fn default() -> Self {
        ResistParams {
            exposure: ExposureParams::default(),
            development: MackParams::default(),
            tau: 0.5,
            sharpness: 6.0,
            calibrate: vec![
                ParamId::CEff,
                ParamId::MTh,
                ParamId::RMax,
                ParamId::RMin,
                ParamId::TDev,
                ParamId::Tau,
            ],
        }
    }
}

impl ResistParams {
    /// Starting point for calibration: a dose and rate scale that can both
    /// clear and retain resist within the development time.
    pub fn initial_guess(exposure: ExposureParams, t_dev: f64) -> Self {
        let r_max = 2.0 * exposure.thickness_nm / t_dev;
        ResistParams {
            exposure: ExposureParams {
                c_eff: 1.0,
                ..exposure
            },
            development: MackParams {
                n: 5,
                m_th: 0.5,
                r_max,
                r_min: 0.01 * r_max,
                t_dev,
            },
            ..ResistParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.exposure.validate()?;
        self.development.validate()?;
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(ResistError::invalid(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.sharpness.is_finite() && self.sharpness > 0.0) {
            return Err(ResistError::invalid(format!(
                "sharpness must be > 0, got {}",
                self.sharpness
            )));
        }
        Ok(())
    }

    pub fn get(&self, p: ParamId) -> f64 {
        match p {
            ParamId::B => self.exposure.b,
            ParamId::CEff => self.exposure.c_eff,
            ParamId::MTh => self.development.m_th,
            ParamId::RMax => self.development.r_max,
            ParamId::RMin => self.development.r_min,
            ParamId::TDev => self.development.t_dev,
            ParamId::Tau => self.tau,
            ParamId::Sharpness => self.sharpness,
        }
    }

    pub fn set(&mut self, p: ParamId, value: f64) {
        let slot = match p {
            ParamId::B => &mut self.exposure.b,
            ParamId::CEff => &mut self.exposure.c_eff,
            ParamId::MTh => &mut self.development.m_th,
            ParamId::RMax => &mut self.development.r_max,
            ParamId::RMin => &mut self.development.r_min,
            ParamId::TDev => &mut self.development.t_dev,
            ParamId::Tau => &mut self.tau,
            ParamId::Sharpness => &mut self.sharpness,
        };
        *slot = value;
    }

    pub fn values(&self) -> ParamVec {
        let mut v = ParamVec::zeros();
        for p in ParamId::ALL {
            v[p] = self.get(p);
        }
        v
    }

    pub fn is_calibratable(&self, p: ParamId) -> bool {
        self.calibrate.contains(&p)
    }

    /// Zeroes the entries of frozen parameters.
    pub fn mask(&self, grads: &ParamVec) -> ParamVec {
        let mut out = ParamVec::zeros();
        for p in ParamId::ALL {
            if self.is_calibratable(p) {
                out[p] = grads[p];
            }
        }
        out
    }

    /// Clamps every calibratable parameter into its domain.
    pub fn project(&mut self) {
        for &p in &self.calibrate.clone() {
            let (lo, hi) = p.domain();
            self.set(p, self.get(p).clamp(lo, hi));
        }
    }
}
