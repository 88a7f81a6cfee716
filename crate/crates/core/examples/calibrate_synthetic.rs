//! Recovers a known resist from synthetic aerial/wafer pairs, starting
//! from parameters 20% off.

use resist::gradcal::{calibrate, Schedule};
use resist::pipeline::Solver;
use resist::synth::{reference_params, synth_records, SynthSpec};
use resist::workflow::{evaluate_records, METHOD_MODEL};

fn main() -> resist::Result<()> {
    let truth = reference_params();
    let spec = SynthSpec {
        count: 24,
        ..SynthSpec::default()
    };
    let records = synth_records(7, &spec, &truth)?;

    let mut init = truth.clone();
    for (i, &id) in truth.calibrate.iter().enumerate() {
        let factor = if i % 2 == 0 { 1.2 } else { 0.8 };
        init.set(id, truth.get(id) * factor);
    }
    let schedule = Schedule {
        epochs: 30,
        decay_every: 10,
        batch_size: 4,
        ..Schedule::default()
    };
    let fit = calibrate(&records, &init, &schedule, 0)?;

    for (epoch, loss) in fit.epoch_losses.iter().enumerate().step_by(5) {
        println!("epoch {epoch:>2}: loss {loss:.5}");
    }
    println!("{:>10} {:>10} {:>10} {:>10}", "param", "truth", "start", "fitted");
    for &id in &truth.calibrate {
        println!("{:>10} {:>10.4} {:>10.4} {:>10.4}", id.name(), truth.get(id), init.get(id), fit.params.get(id));
    }
    let report = evaluate_records(&records, &fit.params, Solver::Vertical, 21)?;
    let model = report.method(METHOD_MODEL).expect("model row");
    println!(
        "held-out pixel difference {:.3}%, EPE {:.2} nm",
        model.pixel_diff_pct, model.epe_mean_nm
    );
    Ok(())
}
