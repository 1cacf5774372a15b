//! Online phase: drive the synthetic test track with all four controller
//! variants and compare centerline distance, lap time and maximum offset.
//!
//! Run with `cargo run --release --example simulate_methods [budget]`.

use std::sync::Arc;

use mompc::control::{mpc_run, MethodVariant, MpcConfig};
use mompc::library::{build_library, BuildOptions, GridSpec, LibraryManifest};
use mompc::vehicle::Track;

fn main() -> mompc::Result<()> {
    let budget = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let manifest = LibraryManifest::new(GridSpec::compact(), budget, 1);
    let library = Arc::new(build_library(&manifest, &BuildOptions::default())?);
    let track = Arc::new(Track::synthetic_test());

    println!("method   int|d|dt   max|d|   lap time");
    for method in MethodVariant::ALL {
        let log = mpc_run(method, track.clone(), Some(library.clone()), track.start_state(), 400, MpcConfig::default())?;
        let m = log.metrics;
        println!(
            "{:<8} {:>8.3} {:>8.3} {:>10}",
            method.to_string(),
            m.accumulated_distance,
            m.max_distance,
            m.lap_time.map_or("-".into(), |t| format!("{t:.2} s"))
        );
    }
    Ok(())
}
