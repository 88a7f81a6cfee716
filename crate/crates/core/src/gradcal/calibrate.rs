use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};
use crate::grids::{BinaryImage, Field2D};

use super::adam::{adam_step, AdamState, Schedule};
use super::forward::loss_and_full_grad;
use super::params::{ParamVec, ResistParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Calibration,
    Test,
}

/// One aerial image with its measured wafer pattern.
#[derive(Debug, Clone)]
pub struct CalibRecord {
    pub id: String,
    pub aerial: Field2D,
    pub wafer: BinaryImage,
    pub split: Split,
}

impl CalibRecord {
    pub fn new(id: impl Into<String>, aerial: Field2D, wafer: BinaryImage, split: Split) -> Result<Self> {
        let id = id.into();
        if aerial.width() != wafer.width() || aerial.height() != wafer.height() {
            return Err(ResistError::ShapeMismatch(format!(
                "tile {id}: aerial is {}x{} but wafer is {}x{}",
                aerial.width(),
                aerial.height(),
                wafer.width(),
                wafer.height()
            )));
        }
        if (aerial.pitch_nm() - wafer.pitch_nm()).abs() > 1e-9 * aerial.pitch_nm() {
            return Err(ResistError::ShapeMismatch(format!(
                "tile {id}: aerial pitch {} nm differs from wafer pitch {} nm",
                aerial.pitch_nm(),
                wafer.pitch_nm()
            )));
        }
        Ok(CalibRecord {
            id,
            aerial,
            wafer,
            split,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    /// Parameters with the lowest calibration-split loss seen, the starting
    /// point included.
    pub params: ResistParams,
    /// 0 when no epoch improved on the starting point.
    pub best_epoch: usize,
    pub best_loss: f64,
    /// Full calibration-split loss; index 0 is the starting point.
    pub epoch_losses: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Mean loss over a batch and the masked gradient.
pub fn batch_loss_and_grad(records: &[&CalibRecord], params: &ResistParams) -> Result<(f64, ParamVec)> {
    if records.is_empty() {
        return Err(ResistError::invalid("empty batch"));
    }
    let parts: Vec<(f64, ParamVec)> = records
        .par_iter()
        .map(|r| loss_and_full_grad(&r.aerial, &r.wafer, params))
        .collect::<Result<_>>()?;
    let n = parts.len() as f64;
    let mut loss = 0.0;
    let mut grad = ParamVec::zeros();
    for (l, g) in &parts {
        loss += l / n;
        grad.add_scaled(g, 1.0 / n);
    }
    Ok((loss, params.mask(&grad)))
}

fn split_loss(records: &[&CalibRecord], params: &ResistParams) -> Result<f64> {
    Ok(batch_loss_and_grad(records, params)?.0)
}

/// Mini-batch Adam on the calibration split.
pub fn calibrate(
    dataset: &[CalibRecord],
    init: &ResistParams,
    schedule: &Schedule,
    seed: u64,
) -> Result<Calibration> {
    schedule.validate()?;
    init.validate()?;
    if init.calibrate.is_empty() {
        return Err(ResistError::Config("no parameters are marked calibratable".into()));
    }
    let mut order: Vec<&CalibRecord> = dataset.iter().filter(|r| r.split == Split::Calibration).collect();
    if order.is_empty() {
        return Err(ResistError::invalid("calibration split is empty"));
    }
    let calibration_set = order.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = AdamState::from_schedule(schedule, init);
    let mut params = init.clone();
    let init_loss = split_loss(&calibration_set, &params)?;
    let mut result = Calibration {
        params: init.clone(),
        best_epoch: 0,
        best_loss: init_loss,
        epoch_losses: vec![init_loss],
        trace: Vec::new(),
    };
    if schedule.lr == 0.0 {
        return Ok(result);
    }

    for epoch in 1..=schedule.epochs {
        state.lr = schedule.lr_at_epoch(epoch);
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(schedule.batch_size).enumerate() {
            let (loss, grad) = batch_loss_and_grad(chunk, &params)?;
            if !loss.is_finite() {
                return Err(ResistError::Numerical(format!("loss became {loss} at epoch {epoch}")));
            }
            result.trace.push(TraceRow {
                epoch,
                batch,
                loss,
                lr: state.lr,
            });
            params = adam_step(&params, &grad, &mut state)?;
        }
        let loss = split_loss(&calibration_set, &params)?;
        result.epoch_losses.push(loss);
        if loss < result.best_loss {
            result.best_loss = loss;
            result.best_epoch = epoch;
            result.params = params.clone();
        }
    }
    Ok(result)
}
