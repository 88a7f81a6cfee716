//! The Mack rate curve for a few reaction orders.

use resist::develop::{inflection_a, MackParams};

fn main() -> resist::Result<()> {
    let orders = [2u32, 3, 5, 9];
    let curves = orders
        .iter()
        .map(|&n| MackParams { n, ..MackParams::default() }.curve())
        .collect::<resist::Result<Vec<_>>>()?;

    for &n in &orders {
        println!("n = {n}: a = {:.6}", inflection_a(n, 0.5)?);
    }
    print!("{:>6}", "M");
    for n in orders {
        print!(" {:>10}", format!("r(n={n})"));
    }
    println!();
    for i in 0..=10 {
        let m = i as f64 / 10.0;
        print!("{m:>6.2}");
        for c in &curves {
            print!(" {:>10.5}", c.rate(m));
        }
        println!();
    }
    Ok(())
}
