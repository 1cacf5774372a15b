//! Offline phase: solve robust and nominal efficient sets on a small grid,
//! save the library, load it back and look up a state between nodes.
//!
//! Run with `cargo run --release --example build_library [out.bin]`.

use mompc::library::{build_library, load, neighbors, save, BuildOptions, GridSpec, LibraryManifest, NeighborStrategy};
use mompc::vehicle::ReducedState;

fn main() -> mompc::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "coarse.bin".into());
    let manifest = LibraryManifest::new(GridSpec::coarse(), 500, 7);
    let library = build_library(&manifest, &BuildOptions::default())?;
    let checksum = save(&library, out.as_ref())?;
    println!("saved {} nodes to {out} (checksum {checksum:016x})", library.nodes.len());

    let loaded = load(out.as_ref(), Some(&manifest))?.library;
    assert_eq!(loaded, library);
    let x = ReducedState::new(0.1, -0.2, 0.05, 1.3, 0.01);
    let hood = neighbors(loaded.spec(), &x, NeighborStrategy::CellCorners);
    for (index, dist) in hood.nodes.iter().take(4) {
        let node = loaded.node(*index).expect("complete library");
        println!("node {index} at distance {dist:.3}: {} robust entries", node.robust.entries.len());
    }
    Ok(())
}
