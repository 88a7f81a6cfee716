//! Dataset-level workflows behind the command-line verbs.
//!
//! Each `*_records` function works on loaded records and returns a report;
//! the matching `cmd_*` function adds file handling around it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ParamsFile, Provenance, RunConfig};
use crate::develop::{develop_fmm, mack_rate, vertical_arrival_times};
use crate::error::{ResistError, Result};
use crate::evalkit::{
    epe_stats, fit_fixed_threshold, fit_variable_threshold, fixed_threshold_predict, pixel_difference,
    variable_threshold_predict, FitPair, VarThresholdParams,
};
use crate::exposure::DEFAULT_TIME_STEPS;
use crate::gradcal::{calibrate, CalibRecord, Calibration, ResistParams, Split};
use crate::grids::{binarize, resample_bilinear, BinaryImage, Field2D, Field3D};
use crate::io::{save_field, save_volume, save_wafer, write_atomic, write_csv, DatasetManifest};
use crate::pipeline::{exposure, simulate_depth, Solver};
use crate::synth::{reference_params, synth_dataset};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub solver: Option<Solver>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution_nm: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.resolution_nm {
            cfg.resolution_nm = r;
        }
        cfg.validate()
    }
}

fn split(records: &[CalibRecord], which: Split) -> Vec<&CalibRecord> {
    records.iter().filter(|r| r.split == which).collect()
}

fn same_pitch(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.max(b)
}

/// Depth at the input pitch, resampled to `output_nm` and then thresholded.
pub fn simulate_at(aerial: &Field2D, params: &ResistParams, solver: Solver, output_nm: f64) -> Result<(Field2D, BinaryImage)> {
    let depth = simulate_depth(aerial, params, solver)?;
    let depth = if same_pitch(depth.pitch_nm(), output_nm) {
        depth
    } else {
        resample_bilinear(&depth, output_nm)?
    };
    let pattern = binarize(&depth, params.tau)?;
    Ok((depth, pattern))
}

/// Arrival-time volume of the chosen development solver.
pub fn arrival_times(aerial: &Field2D, params: &ResistParams, solver: Solver) -> Result<Field3D> {
    let m = exposure(aerial, params, DEFAULT_TIME_STEPS)?;
    let r = mack_rate(&m, &params.development)?;
    match solver {
        Solver::Vertical => vertical_arrival_times(&r),
        Solver::Fmm => Ok(develop_fmm(&r, params.development.t_dev)?.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileScore {
    pub id: String,
    pub method: String,
    pub pixel_diff_pct: f64,
    pub epe_mean_nm: f64,
    pub epe_max_nm: f64,
    pub epe_sites: usize,
    pub epe_capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub tiles: usize,
    pub pixel_diff_pct: f64,
    pub epe_mean_nm: f64,
    pub epe_max_nm: f64,
    pub capped_tiles: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub tiles: Vec<TileScore>,
    pub summary: Vec<MethodSummary>,
    pub fixed_threshold: f64,
    pub variable_threshold: VarThresholdParams,
}

pub const METHOD_MODEL: &str = "model";
pub const METHOD_FIXED: &str = "fixed_threshold";
pub const METHOD_VARIABLE: &str = "variable_threshold";

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.summary.iter().find(|m| m.method == name)
    }
}

fn score(id: &str, method: &str, pred: &BinaryImage, truth: &BinaryImage) -> Result<TileScore> {
    let epe = epe_stats(pred, truth, None)?;
    Ok(TileScore {
        id: id.to_string(),
        method: method.to_string(),
        pixel_diff_pct: pixel_difference(pred, truth)?,
        epe_mean_nm: epe.epe_mean_nm,
        epe_max_nm: epe.epe_max_nm,
        epe_sites: epe.site_count,
        epe_capped: epe.capped,
    })
}

/// Scores the model and both threshold baselines on the test split. The
/// baselines are fitted on the calibration split. Everything is compared at
/// the wafer pitch.
pub fn evaluate_records(records: &[CalibRecord], params: &ResistParams, solver: Solver, window_px: usize) -> Result<EvalReport> {
    let calib = split(records, Split::Calibration);
    let test = split(records, Split::Test);
    if calib.is_empty() || test.is_empty() {
        return Err(ResistError::invalid("evaluation needs non-empty calibration and test splits"));
    }
    let pairs: Vec<FitPair<'_>> = calib.iter().map(|r| (&r.aerial, &r.wafer)).collect();
    let (fixed, _) = fit_fixed_threshold(&pairs)?;
    let (variable, _) = fit_variable_threshold(&pairs, window_px)?;

    let per_tile: Vec<[TileScore; 3]> = test
        .par_iter()
        .map(|r| {
            let model = simulate_at(&r.aerial, params, solver, r.wafer.pitch_nm())?.1;
            let fx = fixed_threshold_predict(&r.aerial, fixed);
            let vt = variable_threshold_predict(&r.aerial, &variable)?;
            Ok([
                score(&r.id, METHOD_MODEL, &model, &r.wafer)?,
                score(&r.id, METHOD_FIXED, &fx, &r.wafer)?,
                score(&r.id, METHOD_VARIABLE, &vt, &r.wafer)?,
            ])
        })
        .collect::<Result<_>>()?;
    let tiles: Vec<TileScore> = per_tile.into_iter().flatten().collect();

    let summary = [METHOD_MODEL, METHOD_FIXED, METHOD_VARIABLE]
        .into_iter()
        .map(|method| {
            let rows: Vec<&TileScore> = tiles.iter().filter(|t| t.method == method).collect();
            let n = rows.len() as f64;
            MethodSummary {
                method: method.to_string(),
                tiles: rows.len(),
                pixel_diff_pct: rows.iter().map(|t| t.pixel_diff_pct).sum::<f64>() / n,
                epe_mean_nm: rows.iter().map(|t| t.epe_mean_nm).sum::<f64>() / n,
                epe_max_nm: rows.iter().map(|t| t.epe_max_nm).fold(0.0, f64::max),
                capped_tiles: rows.iter().filter(|t| t.epe_capped).count(),
            }
        })
        .collect();
    Ok(EvalReport {
        tiles,
        summary,
        fixed_threshold: fixed,
        variable_threshold: variable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub pitch_nm: f64,
    pub tiles: usize,
    pub pixels_per_tile: usize,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub coarse: BenchRow,
    pub fine: BenchRow,
    /// Fine over coarse mean time.
    pub ratio: f64,
}

fn time_pitch(aerials: &[Field2D], params: &ResistParams, solver: Solver, warmups: usize) -> Result<BenchRow> {
    for a in aerials.iter().cycle().take(warmups) {
        simulate_at(a, params, solver, a.pitch_nm())?;
    }
    let start = Instant::now();
    for a in aerials {
        std::hint::black_box(simulate_at(a, params, solver, a.pitch_nm())?);
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(BenchRow {
        pitch_nm: aerials[0].pitch_nm(),
        tiles: aerials.len(),
        pixels_per_tile: aerials[0].len(),
        mean_ms: 1e3 * elapsed / aerials.len() as f64,
    })
}

/// Mean wall-clock time per tile for the forward model plus thresholding,
/// at the input pitch and at `fine_nm`. Resampling the aerial images is
/// done up front and not timed.
pub fn bench_records(
    records: &[CalibRecord],
    params: &ResistParams,
    solver: Solver,
    fine_nm: f64,
    tiles: usize,
    warmups: usize,
) -> Result<BenchReport> {
    if tiles == 0 || records.len() < tiles {
        return Err(ResistError::invalid(format!(
            "benchmark needs {tiles} tiles, dataset has {}",
            records.len()
        )));
    }
    let coarse: Vec<Field2D> = records[..tiles].iter().map(|r| r.aerial.clone()).collect();
    let fine: Vec<Field2D> = coarse
        .iter()
        .map(|a| resample_bilinear(a, fine_nm))
        .collect::<Result<_>>()?;
    let coarse = time_pitch(&coarse, params, solver, warmups)?;
    let fine = time_pitch(&fine, params, solver, warmups)?;
    let ratio = fine.mean_ms / coarse.mean_ms;
    Ok(BenchReport { coarse, fine, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub id: String,
    pub pixel_diff_pct: f64,
}

/// Compares simulating directly on aerials resampled to `fine_nm` against
/// simulating at the input pitch and upsampling the depth, both thresholded
/// at `fine_nm`. Returns per-tile rows for the test split and their mean.
pub fn robustness_records(records: &[CalibRecord], params: &ResistParams, solver: Solver, fine_nm: f64) -> Result<(Vec<RobustnessRow>, f64)> {
    let test = split(records, Split::Test);
    if test.is_empty() {
        return Err(ResistError::invalid("robustness needs a non-empty test split"));
    }
    let rows: Vec<RobustnessRow> = test
        .par_iter()
        .map(|r| {
            let fine_aerial = resample_bilinear(&r.aerial, fine_nm)?;
            let direct = simulate_at(&fine_aerial, params, solver, fine_nm)?.1;
            let upsampled = simulate_at(&r.aerial, params, solver, fine_nm)?.1;
            Ok(RobustnessRow {
                id: r.id.clone(),
                pixel_diff_pct: pixel_difference(&direct, &upsampled)?,
            })
        })
        .collect::<Result<_>>()?;
    let mean = rows.iter().map(|r| r.pixel_diff_pct).sum::<f64>() / rows.len() as f64;
    Ok((rows, mean))
}

fn load_dataset(manifest: &Path) -> Result<(DatasetManifest, Vec<CalibRecord>)> {
    let m = DatasetManifest::load(manifest)?;
    let records = m.load_records()?;
    Ok((m, records))
}

fn model_params(cfg: &RunConfig, params: Option<&Path>) -> Result<ResistParams> {
    match params {
        Some(p) => Ok(ParamsFile::load(p)?.params),
        None => Ok(cfg.params.clone()),
    }
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<String> {
    let m = synth_dataset(&cfg.out, cfg.seed, &cfg.synth, &reference_params())?;
    Ok(format!(
        "wrote {} tiles ({} calibration) to {}",
        m.tiles.len(),
        m.count(Split::Calibration),
        cfg.out.join("manifest.json").display()
    ))
}

pub fn cmd_simulate(cfg: &RunConfig, manifest: &Path, params: Option<&Path>) -> Result<String> {
    let params = model_params(cfg, params)?;
    let (_, records) = load_dataset(manifest)?;
    let out = &cfg.out;
    records.par_iter().try_for_each(|r| -> Result<()> {
        let (depth, pattern) = simulate_at(&r.aerial, &params, cfg.solver, cfg.resolution_nm)?;
        save_field(&out.join("depth").join(format!("{}.f32", r.id)), &depth)?;
        save_wafer(&out.join("pattern").join(format!("{}.png", r.id)), &pattern)?;
        if cfg.write_volumes {
            let times = arrival_times(&r.aerial, &params, cfg.solver)?;
            save_volume(&out.join("arrival").join(format!("{}.f32", r.id)), &times)?;
        }
        Ok(())
    })?;
    Ok(format!(
        "simulated {} tiles with the {} solver at {} nm into {}",
        records.len(),
        cfg.solver,
        cfg.resolution_nm,
        out.display()
    ))
}

pub fn calibrate_records(cfg: &RunConfig, records: &[CalibRecord]) -> Result<Calibration> {
    calibrate(records, &cfg.initial_params(), &cfg.schedule, cfg.seed)
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    loss: f64,
}

pub fn cmd_calibrate(cfg: &RunConfig, manifest: &Path) -> Result<String> {
    let (m, records) = load_dataset(manifest)?;
    let result = calibrate_records(cfg, &records)?;
    let file = ParamsFile {
        provenance: Some(Provenance {
            seed: cfg.seed,
            dataset_hash: m.content_hash()?,
            epochs: cfg.schedule.epochs,
            best_epoch: result.best_epoch,
            best_loss: result.best_loss,
        }),
        params: result.params.clone(),
    };
    let params_path = cfg.out.join("params.toml");
    file.save(&params_path)?;
    write_csv(&cfg.out.join("loss_trace.csv"), &result.trace)?;
    let epochs: Vec<EpochRow> = result
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| EpochRow { epoch, loss })
        .collect();
    write_csv(&cfg.out.join("epoch_loss.csv"), &epochs)?;
    Ok(format!(
        "calibrated on {} tiles: loss {:.6} -> {:.6} (best epoch {}), parameters in {}",
        m.count(Split::Calibration),
        result.epoch_losses[0],
        result.best_loss,
        result.best_epoch,
        params_path.display()
    ))
}

pub fn cmd_evaluate(cfg: &RunConfig, manifest: &Path, params: Option<&Path>) -> Result<String> {
    let params = model_params(cfg, params)?;
    let (_, records) = load_dataset(manifest)?;
    let report = evaluate_records(&records, &params, cfg.solver, cfg.evaluation.window_px)?;
    write_csv(&cfg.out.join("eval_tiles.csv"), &report.tiles)?;
    write_csv(&cfg.out.join("eval_summary.csv"), &report.summary)?;
    let baselines = serde_json::to_string_pretty(&serde_json::json!({
        "fixed_threshold": report.fixed_threshold,
        "variable_threshold": report.variable_threshold,
    }))
    .expect("plain numbers serialise");
    write_atomic(&cfg.out.join("baselines.json"), baselines.as_bytes())?;
    let lines: Vec<String> = report
        .summary
        .iter()
        .map(|s| {
            format!(
                "{:<20} pixel difference {:.4}%  EPE mean {:.3} nm",
                s.method, s.pixel_diff_pct, s.epe_mean_nm
            )
        })
        .collect();
    Ok(lines.join("\n"))
}

pub fn cmd_bench(cfg: &RunConfig, manifest: &Path, params: Option<&Path>) -> Result<String> {
    let params = model_params(cfg, params)?;
    let (_, records) = load_dataset(manifest)?;
    let report = bench_records(&records, &params, cfg.solver, cfg.resolution_nm, cfg.bench.tiles, cfg.bench.warmups)?;
    write_csv(&cfg.out.join("bench.csv"), &[report.coarse.clone(), report.fine.clone()])?;
    Ok(format!(
        "{} nm: {:.2} ms/tile, {} nm: {:.2} ms/tile, ratio {:.2}",
        report.coarse.pitch_nm, report.coarse.mean_ms, report.fine.pitch_nm, report.fine.mean_ms, report.ratio
    ))
}

pub fn cmd_robustness(cfg: &RunConfig, manifest: &Path, params: Option<&Path>) -> Result<String> {
    let params = model_params(cfg, params)?;
    let (m, records) = load_dataset(manifest)?;
    let (rows, mean) = robustness_records(&records, &params, cfg.solver, cfg.resolution_nm)?;
    write_csv(&cfg.out.join("robustness.csv"), &rows)?;
    Ok(format!(
        "mean pixel difference between {} nm and {} nm simulation: {:.4}% over {} tiles",
        cfg.resolution_nm,
        m.pitch_nm,
        mean,
        rows.len()
    ))
}
