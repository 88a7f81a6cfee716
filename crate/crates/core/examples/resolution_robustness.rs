//! The same parameters simulated at 7 nm and 1 nm, and what it costs.

use resist::synth::{reference_params, synth_records, SynthSpec};
use resist::pipeline::Solver;
use resist::workflow::{bench_records, robustness_records};

fn main() -> resist::Result<()> {
    let params = reference_params();
    let spec = SynthSpec {
        count: 10,
        calibration_fraction: 0.1,
        ..SynthSpec::default()
    };
    let records = synth_records(11, &spec, &params)?;

    let (rows, mean) = robustness_records(&records, &params, Solver::Vertical, 1.0)?;
    for row in &rows {
        println!("{}: {:.4}%", row.id, row.pixel_diff_pct);
    }
    println!("mean pixel difference {mean:.4}%");

    let bench = bench_records(&records, &params, Solver::Vertical, 1.0, 5, 1)?;
    println!(
        "{:.2} ms per tile at 7 nm, {:.1} ms at 1 nm (x{:.1}, pixels x{:.1})",
        bench.coarse.mean_ms,
        bench.fine.mean_ms,
        bench.ratio,
        bench.fine.pixels_per_tile as f64 / bench.coarse.pixels_per_tile as f64
    );
    Ok(())
}
