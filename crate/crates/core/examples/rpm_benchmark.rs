//! Reference point method on the witting problem with an uncertain `alpha`,
//! started far from the efficient set.
//!
//! Run with `cargo run --example rpm_benchmark`.

use mompc::bench::WittingOcp;
use mompc::control::{rpm_refine, RpmConfig};
use mompc::ocp::UncertaintyBox;

fn main() -> mompc::Result<()> {
    // alpha = 0.5 +- 0.4, sampled at 21 points.
    let unc = UncertaintyBox::symmetric(0.4, 21)?;
    let res = rpm_refine(&WittingOcp { alpha: 0.5 }, &[-1.8, -1.6], &unc, &[0.0, 0.0], &RpmConfig::default())?;
    println!("start (-1.8, -1.6): phi = {:.6}", res.phi_init);
    println!(
        "refined ({:.6}, {:.6}): phi = {:.6} after {} evaluations",
        res.controls[0], res.controls[1], res.phi, res.evaluations
    );
    Ok(())
}
