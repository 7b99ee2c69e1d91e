//! Every run writes `manifest.json` next to its artifacts: the full
//! subcommand configuration, the seed, crate versions, and wall time.
//! Everything except wall_time is a pure function of the invocation, so an
//! artifact is reproducible from its manifest alone.

use anyhow::Result;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Serialize)]
struct Versions {
    selector_lab: &'static str,
    selector_core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    config: &'a C,
    seed: u64,
    versions: Versions,
    wall_time: f64,
}

pub fn write_manifest<C: Serialize>(
    out_dir: &Path,
    config: &C,
    seed: u64,
    started: Instant,
) -> Result<()> {
    let manifest = Manifest {
        config,
        seed,
        versions: Versions {
            selector_lab: env!("CARGO_PKG_VERSION"),
            selector_core: selector_core::VERSION,
        },
        wall_time: started.elapsed().as_secs_f64(),
    };
    crate::io::write_json(&out_dir.join("manifest.json"), &manifest)
}
