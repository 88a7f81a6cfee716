//! Fixed and variable aerial-threshold baselines on wafers from a bleaching
//! resist developed by fast marching, which no aerial threshold reproduces
//! exactly.

use resist::evalkit::{fit_fixed_threshold, fit_variable_threshold, FitPair};
use resist::gradcal::{CalibRecord, Split};
use resist::grids::binarize;
use resist::pipeline::{simulate_depth, Solver};
use resist::synth::{reference_params, synth_records, SynthSpec};
use resist::workflow::evaluate_records;

fn main() -> resist::Result<()> {
    let mut truth = reference_params();
    truth.exposure.a = 0.01;
    let spec = SynthSpec {
        count: 20,
        tile_px: 64,
        ..SynthSpec::default()
    };
    // wafers from the bleaching model, which the fused path cannot produce
    let records = synth_records(3, &spec, &reference_params())?
        .into_iter()
        .map(|r| {
            let depth = simulate_depth(&r.aerial, &truth, Solver::Fmm)?;
            let wafer = binarize(&depth, truth.tau)?;
            CalibRecord::new(r.id, r.aerial, wafer, r.split)
        })
        .collect::<resist::Result<Vec<_>>>()?;

    let pairs: Vec<FitPair<'_>> = records
        .iter()
        .filter(|r| r.split == Split::Calibration)
        .map(|r| (&r.aerial, &r.wafer))
        .collect();
    let (t, fixed_err) = fit_fixed_threshold(&pairs)?;
    let (vt, var_err) = fit_variable_threshold(&pairs, 21)?;
    println!("fixed threshold {t:.4}: calibration error {fixed_err:.3}%");
    println!("variable threshold m1 {:.4} m2 {:.4}: calibration error {var_err:.3}%", vt.m1, vt.m2);

    let report = evaluate_records(&records, &truth, Solver::Fmm, 21)?;
    for m in &report.summary {
        println!("{:<20} test {:.3}%  EPE {:.2} nm", m.method, m.pixel_diff_pct, m.epe_mean_nm);
    }
    Ok(())
}
