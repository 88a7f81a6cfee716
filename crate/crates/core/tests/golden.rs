//! Forward model against frozen values from `oracle/forward_depth.py`.

use resist::develop::{develop_vertical, mack_rate, MackParams};
use resist::exposure::{solve_exposure_closed_form, ExposureParams};
use resist::gradcal::{forward_depth, soft_loss, ResistParams};
use resist::grids::{BinaryImage, Field2D};
use resist::synth::reference_params;

const INTENSITIES: [f64; 10] = [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 1.0, 1.3, 2.0];
const TOL: f64 = 1e-12;

fn steep() -> ResistParams {
    ResistParams {
        exposure: ExposureParams {
            a: 0.0,
            b: 0.004,
            c_eff: 1.4,
            thickness_nm: 100.0,
            nz: 41,
        },
        development: MackParams {
            n: 3,
            m_th: 0.4,
            r_max: 4.0,
            r_min: 0.05,
            t_dev: 30.0,
        },
        tau: 0.35,
        sharpness: 9.0,
        ..ResistParams::default()
    }
}

fn check(params: &ResistParams, depth: [f64; 10], loss: f64) {
    let aerial = Field2D::new(10, 1, 7.0, INTENSITIES.to_vec()).unwrap();
    let fused = forward_depth(&aerial, params).unwrap();
    let inhibitor = solve_exposure_closed_form(&aerial, &params.exposure).unwrap();
    let rate = mack_rate(&inhibitor, &params.development).unwrap();
    let composed = develop_vertical(&rate, params.development.t_dev).unwrap();
    for (i, expected) in depth.iter().enumerate() {
        assert!((fused.values()[i] - expected).abs() < TOL, "fused[{i}] {} vs {expected}", fused.values()[i]);
        assert!((composed.values()[i] - expected).abs() < TOL, "composed[{i}]");
    }
    let wafer = BinaryImage::from_fn(10, 1, 7.0, |x, _| x % 2 == 0).unwrap();
    let got = soft_loss(&fused, &wafer, params.tau, params.sharpness).unwrap();
    assert!((got - loss).abs() < TOL, "loss {got} vs {loss}");
}

#[test]
fn reference_resist_depths() {
    check(
        &reference_params(),
        [
            0.02,
            0.020333800366097905,
            0.04236006005997694,
            0.15915688122992352,
            0.2962063042776823,
            0.45492576639846105,
            0.691268257342313,
            1.0,
            1.0,
            1.0,
        ],
        1.4388337131247866,
    );
}

#[test]
fn steep_resist_depths() {
    check(
        &steep(),
        [
            0.015,
            0.023702049517657232,
            0.10681082269999238,
            0.25490479220057466,
            0.3614796387107379,
            0.46250066896888675,
            0.5958923142684127,
            0.7679188044288048,
            0.9090352167933421,
            1.0,
        ],
        1.7476272312963557,
    );
}
