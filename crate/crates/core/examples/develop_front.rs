//! A bright spot developed with vertical paths and with fast marching.
//! Fast marching lets the developer turn sideways under the spot edge.

use resist::develop::{develop_fmm, develop_vertical, mack_rate};
use resist::exposure::solve_exposure_closed_form;
use resist::grids::Field2D;
use resist::synth::reference_params;

fn main() -> resist::Result<()> {
    let p = reference_params();
    let aerial = Field2D::from_fn(41, 41, 7.0, |x, y| {
        let r2 = (x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2);
        0.9 * (-r2 / 60.0).exp()
    })?;
    let inhibitor = solve_exposure_closed_form(&aerial, &p.exposure)?;
    let rate = mack_rate(&inhibitor, &p.development)?;
    let vertical = develop_vertical(&rate, p.development.t_dev)?;
    let (times, fmm) = develop_fmm(&rate, p.development.t_dev)?;

    println!("{:>5} {:>10} {:>10}", "x nm", "vertical", "fmm");
    for x in (0..41).step_by(2) {
        println!("{:>5} {:>10.4} {:>10.4}", x * 7, vertical.get(x, 20), fmm.get(x, 20));
    }
    let bottom = times.nz() - 1;
    println!("centre reaches the substrate after {:.1} s", times.get(bottom, 20, 20));
    Ok(())
}
