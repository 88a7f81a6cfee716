//! End-to-end simulation: aerial image to developed depth and resist pattern.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::develop::{develop_fmm, develop_vertical, mack_rate};
use crate::error::{ResistError, Result};
use crate::exposure::{solve_exposure_closed_form, solve_exposure_general, DEFAULT_TIME_STEPS};
use crate::gradcal::{forward_depth, ResistParams};
use crate::grids::{binarize, BinaryImage, Field2D, Field3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Developer moves straight down each column.
    #[default]
    Vertical,
    /// Fast marching with lateral development.
    Fmm,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Vertical => "vertical",
            Solver::Fmm => "fmm",
        })
    }
}

impl FromStr for Solver {
    type Err = ResistError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(Solver::Vertical),
            "fmm" => Ok(Solver::Fmm),
            other => Err(ResistError::invalid(format!(
                "unknown solver '{other}', expected vertical or fmm"
            ))),
        }
    }
}

/// Final inhibitor concentration; the closed form is used whenever `A = 0`.
pub fn exposure(aerial: &Field2D, params: &ResistParams, time_steps: usize) -> Result<Field3D> {
    if params.exposure.a == 0.0 {
        solve_exposure_closed_form(aerial, &params.exposure)
    } else {
        solve_exposure_general(aerial, &params.exposure, time_steps)
    }
}

/// Normalised developed depth of every column.
pub fn simulate_depth(aerial: &Field2D, params: &ResistParams, solver: Solver) -> Result<Field2D> {
    params.validate()?;
    match solver {
        // fused per-column path, no volumes allocated
        Solver::Vertical if params.exposure.a == 0.0 => forward_depth(aerial, params),
        Solver::Vertical => {
            let m = exposure(aerial, params, DEFAULT_TIME_STEPS)?;
            let r = mack_rate(&m, &params.development)?;
            develop_vertical(&r, params.development.t_dev)
        }
        Solver::Fmm => {
            let m = exposure(aerial, params, DEFAULT_TIME_STEPS)?;
            let r = mack_rate(&m, &params.development)?;
            Ok(develop_fmm(&r, params.development.t_dev)?.1)
        }
    }
}

/// Binary resist pattern; 1 marks resist cleared by the developer.
pub fn simulate_pattern(aerial: &Field2D, params: &ResistParams, solver: Solver) -> Result<BinaryImage> {
    binarize(&simulate_depth(aerial, params, solver)?, params.tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ResistParams {
        let mut p = ResistParams::default();
        p.exposure.b = 0.006186;
        p
    }

    fn aerial() -> Field2D {
        Field2D::from_fn(10, 8, 7.0, |x, y| {
            let d2 = (x as f64 - 4.5).powi(2) + (y as f64 - 3.5).powi(2);
            1.3 * (-d2 / 8.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn fused_and_general_vertical_agree() {
        let p = params();
        let fused = simulate_depth(&aerial(), &p, Solver::Vertical).unwrap();
        let m = solve_exposure_general(&aerial(), &p.exposure, 64).unwrap();
        let r = mack_rate(&m, &p.development).unwrap();
        let general = develop_vertical(&r, p.development.t_dev).unwrap();
        for (a, b) in fused.values().iter().zip(general.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fmm_develops_at_least_as_deep() {
        let p = params();
        let v = simulate_depth(&aerial(), &p, Solver::Vertical).unwrap();
        let f = simulate_depth(&aerial(), &p, Solver::Fmm).unwrap();
        for (dv, df) in v.values().iter().zip(f.values()) {
            assert!(*df >= dv - 1e-12);
        }
    }

    #[test]
    fn bleaching_resist_uses_general_solver() {
        let mut p = params();
        p.exposure.a = 0.004;
        let d = simulate_depth(&aerial(), &p, Solver::Vertical).unwrap();
        let clear = simulate_depth(&aerial(), &params(), Solver::Vertical).unwrap();
        // extra absorption can only slow the exposure at depth
        for (a, b) in d.values().iter().zip(clear.values()) {
            assert!(*a <= b + 1e-9);
        }
    }

    #[test]
    fn solver_names() {
        for s in [Solver::Vertical, Solver::Fmm] {
            assert_eq!(s.to_string().parse::<Solver>().unwrap(), s);
        }
        assert!("lateral".parse::<Solver>().is_err());
    }
}
