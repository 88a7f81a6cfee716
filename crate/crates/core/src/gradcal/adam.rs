use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};

use super::params::{ParamId, ParamVec, ResistParams};

/// Optimizer hyperparameters and step-decay learning-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub lr: f64,
    /// Multiplier applied every `decay_every` epochs.
    pub decay: f64,
    pub decay_every: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Take steps relative to each parameter's starting magnitude instead of
    /// in raw units.
    pub relative_steps: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            lr: 1e-2,
            decay: 0.3,
            decay_every: 3,
            epochs: 9,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            relative_steps: true,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(ResistError::Config(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if !(self.decay.is_finite() && self.decay > 0.0) {
            return Err(ResistError::Config(format!("decay must be > 0, got {}", self.decay)));
        }
        if self.decay_every == 0 || self.batch_size == 0 {
            return Err(ResistError::Config("decay_every and batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(ResistError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(ResistError::Config("Adam eps must be > 0".into()));
        }
        Ok(())
    }

    /// Learning rate for a 1-based epoch.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let drops = epoch.saturating_sub(1) / self.decay_every;
        self.lr * self.decay.powi(drops as i32)
    }
}

/// Bias-corrected Adam state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first: ParamVec,
    pub second: ParamVec,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Per-parameter step scale; 1 gives plain Adam.
    pub scale: ParamVec,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        let s = Schedule::default();
        AdamState {
            first: ParamVec::zeros(),
            second: ParamVec::zeros(),
            step: 0,
            lr,
            beta1: s.beta1,
            beta2: s.beta2,
            eps: s.eps,
            scale: ParamVec([1.0; 8]),
        }
    }

    pub fn from_schedule(schedule: &Schedule, init: &ResistParams) -> Self {
        let mut state = AdamState {
            beta1: schedule.beta1,
            beta2: schedule.beta2,
            eps: schedule.eps,
            ..AdamState::new(schedule.lr)
        };
        if schedule.relative_steps {
            for p in ParamId::ALL {
                let v = init.get(p).abs();
                state.scale[p] = if v > 0.0 { v } else { 1.0 };
            }
        }
        state
    }
}

/// One Adam update of the calibratable parameters, followed by projection
/// into their domains. Frozen parameters and their moments are untouched.
pub fn adam_step(params: &ResistParams, grads: &ParamVec, state: &mut AdamState) -> Result<ResistParams> {
    let grads = params.mask(grads);
    if !grads.is_finite() {
        return Err(ResistError::Numerical(format!("non-finite gradient {:?}", grads.0)));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let mut next = params.clone();
    for &p in &params.calibrate {
        // the optimizer sees theta / scale, so its gradient is g * scale
        let g = grads[p] * state.scale[p];
        state.first[p] = state.beta1 * state.first[p] + (1.0 - state.beta1) * g;
        state.second[p] = state.beta2 * state.second[p] + (1.0 - state.beta2) * g * g;
        let m_hat = state.first[p] / c1;
        let v_hat = state.second[p] / c2;
        let delta = state.scale[p] * state.lr * m_hat / (v_hat.sqrt() + state.eps);
        next.set(p, params.get(p) - delta);
    }
    next.project();
    if !next.values().is_finite() {
        return Err(ResistError::Numerical("parameters became non-finite".into()));
    }
    Ok(next)
}
