//! Run configuration and fitted-parameter files, both TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ResistError, Result};
use crate::evalkit::DEFAULT_WINDOW_PX;
use crate::gradcal::{ResistParams, Schedule};
use crate::io::write_atomic;
use crate::pipeline::Solver;
use crate::synth::SynthSpec;

/// Unit of the absorption coefficients `a` and `b` in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AbsorptionUnit {
    #[default]
    #[serde(rename = "1/nm")]
    PerNm,
    #[serde(rename = "1/um")]
    PerUm,
}

/// Where calibration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitRule {
    /// Rate scale derived from thickness and development time.
    #[default]
    Guess,
    /// The `[params]` table as given.
    Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub init: InitRule,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { init: InitRule::Guess }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Window of the variable-threshold baseline, pixels.
    pub window_px: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            window_px: DEFAULT_WINDOW_PX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub tiles: usize,
    pub warmups: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { tiles: 20, warmups: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub solver: Solver,
    pub out: PathBuf,
    /// Fine output pitch for simulate, bench and robustness, nm.
    pub resolution_nm: f64,
    /// Also write arrival-time volumes from `simulate`.
    pub write_volumes: bool,
    pub absorption_unit: AbsorptionUnit,
    pub params: ResistParams,
    pub schedule: Schedule,
    pub calibration: CalibrationConfig,
    pub evaluation: EvaluationConfig,
    pub bench: BenchConfig,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            solver: Solver::Vertical,
            out: PathBuf::from("out"),
            resolution_nm: 1.0,
            write_volumes: false,
            absorption_unit: AbsorptionUnit::PerNm,
            params: ResistParams::default(),
            schedule: Schedule::default(),
            calibration: CalibrationConfig::default(),
            evaluation: EvaluationConfig::default(),
            bench: BenchConfig::default(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config; absorption is converted to 1/nm.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ResistError::Config(e.to_string()))?;
        if cfg.absorption_unit == AbsorptionUnit::PerUm {
            cfg.params.exposure.a *= 1e-3;
            cfg.params.exposure.b *= 1e-3;
            cfg.absorption_unit = AbsorptionUnit::PerNm;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ResistError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            ResistError::Config(msg) => ResistError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| ResistError::Config(e.to_string()))?;
        self.schedule.validate()?;
        self.synth.validate()?;
        if !(self.resolution_nm.is_finite() && self.resolution_nm > 0.0) {
            return Err(ResistError::Config(format!(
                "resolution_nm must be > 0, got {}",
                self.resolution_nm
            )));
        }
        if self.evaluation.window_px.is_multiple_of(2) {
            return Err(ResistError::Config("evaluation.window_px must be odd".into()));
        }
        Ok(())
    }

    /// Starting parameters for calibration.
    pub fn initial_params(&self) -> ResistParams {
        match self.calibration.init {
            InitRule::Params => self.params.clone(),
            InitRule::Guess => ResistParams {
                calibrate: self.params.calibrate.clone(),
                tau: 0.5,
                sharpness: self.params.sharpness,
                ..ResistParams::initial_guess(self.params.exposure, self.params.development.t_dev)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    /// SHA-256 of the calibration dataset.
    pub dataset_hash: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_loss: f64,
}

/// Fitted parameters as written by `calibrate` and read by `--params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub params: ResistParams,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ResistError::io(path, e))?;
        let file: ParamsFile = toml::from_str(&text).map_err(|e| ResistError::load(path, e.to_string()))?;
        file.params
            .validate()
            .map_err(|e| ResistError::load(path, e.to_string()))?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| ResistError::Config(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcal::ParamId;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["sed = 1", "[params]\nalpha = 1.0", "[params.exposure]\nthickness = 3.0", "[schedule]\nlr0 = 0.1"] {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}");
        }
    }

    #[test]
    fn per_micron_absorption_is_converted() {
        let cfg = RunConfig::from_toml("absorption_unit = \"1/um\"\n[params.exposure]\nb = 6.186\n").unwrap();
        assert!((cfg.params.exposure.b - 0.006186).abs() < 1e-15);
    }

    #[test]
    fn partial_tables_fill_defaults() {
        let cfg = RunConfig::from_toml(
            "solver = \"fmm\"\n[params]\ncalibrate = [\"tau\", \"r_max\"]\n[params.development]\nt_dev = 30.0\n",
        )
        .unwrap();
        assert_eq!(cfg.solver, Solver::Fmm);
        assert_eq!(cfg.params.development.t_dev, 30.0);
        assert_eq!(cfg.params.development.n, 5);
        assert_eq!(cfg.params.calibrate, vec![ParamId::Tau, ParamId::RMax]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(RunConfig::from_toml("[params]\ntau = 1.5").is_err());
        assert!(RunConfig::from_toml("resolution_nm = 0.0").is_err());
        assert!(RunConfig::from_toml("solver = \"lateral\"").is_err());
    }

    #[test]
    fn guess_rule() {
        let cfg = RunConfig::from_toml("[params.development]\nt_dev = 50.0\nr_max = 9.0").unwrap();
        let init = cfg.initial_params();
        assert!((init.development.r_max - 3.0).abs() < 1e-12);
        assert_eq!(init.development.m_th, 0.5);
    }

    #[test]
    fn params_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        let file = ParamsFile {
            provenance: Some(Provenance {
                seed: 7,
                dataset_hash: "ab".repeat(32),
                epochs: 9,
                best_epoch: 4,
                best_loss: 0.125,
            }),
            params: crate::synth::reference_params(),
        };
        file.save(&path).unwrap();
        assert_eq!(ParamsFile::load(&path).unwrap(), file);
        std::fs::write(&path, "[params]\nbogus = 1\n").unwrap();
        assert_eq!(ParamsFile::load(&path).unwrap_err().exit_code(), 2);
    }
}
