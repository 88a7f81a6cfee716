//! Gradient-based calibration of the resist model against wafer patterns.

mod adam;
mod calibrate;
mod forward;
mod loss;
mod params;

pub use adam::{adam_step, AdamState, Schedule};
pub use calibrate::{batch_loss_and_grad, calibrate, CalibRecord, Calibration, Split, TraceRow};
pub use forward::{forward_depth, loss_and_full_grad};
pub use loss::{sigmoid, soft_loss, PROB_EPS};
pub use params::{ParamId, ParamVec, ResistParams};

/// Loss of one record and its gradient with frozen parameters zeroed.
pub fn grad_params(record: &CalibRecord, params: &ResistParams) -> crate::Result<(f64, ParamVec)> {
    let (loss, grad) = loss_and_full_grad(&record.aerial, &record.wafer, params)?;
    Ok((loss, params.mask(&grad)))
}
