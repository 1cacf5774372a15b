//! First-order Sobol indices of the open-loop car objectives.
//!
//! Run with `cargo run --release --example sensitivity [samples]`.

use mompc::analysis::{car_objectives, car_parameter_ranges, sobol_first_order};

fn main() -> mompc::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let report = sobol_first_order(|y| car_objectives(y, 0.0), &car_parameter_ranges(), n, 200, 0)?;
    print!("{}", report.to_csv(&[]));
    println!("J1 most sensitive to {:?}, J2 to {:?}", report.dominant(0), report.dominant(1));
    Ok(())
}
