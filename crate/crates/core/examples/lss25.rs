//! Set-based robust efficiency on four fixed candidates under a box uncertainty.
//!
//! Run with `cargo run --example lss25`.

use mompc::bench::Lss25Problem;
use mompc::moo::sup_vector;

fn main() -> mompc::Result<()> {
    for (name, u) in Lss25Problem::CANDIDATES {
        let r = Lss25Problem::realizations(u, 21)?;
        let sup = sup_vector(&r);
        println!("{name:>6} u = {u:?}  sup point = ({:.4}, {:.4})", sup.as_slice()[0], sup.as_slice()[1]);
    }
    let archive = Lss25Problem::efficient_set(21)?;
    let names: Vec<_> = archive.iter().filter_map(|e| Lss25Problem::label(&e.decision.values)).collect();
    println!("robustly efficient: {names:?}");
    Ok(())
}
