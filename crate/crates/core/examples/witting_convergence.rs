//! Median Delta_2 of stochastic-search archives on the witting problem as the
//! budget grows, in decision and objective space.
//!
//! Run with `cargo run --release --example witting_convergence [runs]`.

use mompc::analysis::delta2_convergence;
use mompc::bench::WittingProblem;

fn main() -> mompc::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    for alpha in [0.5, 1.5] {
        let lost = WittingProblem::lost_fraction(0.5, alpha, 200);
        println!("alpha {alpha}: {:.1}% of the alpha=0.5 efficient set is lost", 100.0 * lost);
    }
    let table = delta2_convergence(0.5, &[500, 1_000, 10_000], runs, 100, 200, 0)?;
    print!("{}", table.to_csv(&[format!("{runs} runs per budget")]));
    Ok(())
}
