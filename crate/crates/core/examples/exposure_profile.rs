//! Inhibitor and intensity down one resist column, with and without
//! bleaching.

use resist::exposure::{intensity_profile, solve_exposure_closed_form, solve_exposure_general, ExposureParams};
use resist::grids::Field2D;

fn main() -> resist::Result<()> {
    let aerial = Field2D::filled(1, 1, 7.0, 0.8)?;
    let plain = ExposureParams {
        a: 0.0,
        b: 6.186e-3,
        c_eff: 1.0,
        thickness_nm: 75.0,
        nz: 26,
    };
    let bleaching = ExposureParams { a: 8e-3, ..plain };

    let closed = solve_exposure_closed_form(&aerial, &plain)?;
    let general = solve_exposure_general(&aerial, &plain, 256)?;
    let bleached = solve_exposure_general(&aerial, &bleaching, 256)?;
    let intensity = intensity_profile(&aerial, &bleached, &bleaching)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "z nm", "M closed", "M general", "M bleach", "I bleach");
    for k in (0..plain.nz).step_by(5) {
        println!(
            "{:>6.1} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            plain.depth_nm(k),
            closed.get(k, 0, 0),
            general.get(k, 0, 0),
            bleached.get(k, 0, 0),
            intensity.get(k, 0, 0)
        );
    }
    Ok(())
}
