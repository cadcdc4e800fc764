//! Materializes a small synthetic benchmark and searches it in-process.
//!
//! ```text
//! cargo run --example make_demo [DIR]
//! ```
//!
//! The directory (default `target/demo`) afterwards contains a
//! `manifest.toml` the `multifault` binary can be pointed at.

use std::path::PathBuf;

use multifault::analytics;
use multifault::fixture::FixtureBuilder;
use multifault::manifest::BenchmarkManifest;
use multifault::{build_adapter, Searcher};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/demo".to_string()),
    );
    std::fs::create_dir_all(&dir)?;

    // Six faults; three of them linger in older versions, with one gap
    // (fault 2 skips version 4) that only an oracle run can see past.
    let mut fx = FixtureBuilder::new("Demo");
    fx.fault(1).exists_in(&[2, 3]);
    fx.fault(2).exists_in(&[3, 5]);
    fx.fault(3);
    fx.fault(4).exists_in(&[5]);
    fx.fault(5);
    fx.fault(6);
    let fx = fx.build();
    let manifest_path = fx.materialize_synthetic(&dir)?;

    // Everything below is exactly what `multifault search` does.
    let manifest = BenchmarkManifest::parse(&manifest_path)?;
    let adapter = build_adapter(
        manifest.adapter_config(),
        manifest.base_dir(),
        manifest.normalizer_chain().clone(),
    )?;
    let trace = Searcher::new(&manifest, adapter.as_ref()).run()?;
    print!("{}", trace.summary_text());

    println!("\npairs (fault revealed in older version):");
    for (n, m) in trace.relation().pairs() {
        println!("  {n} -> {m}");
    }

    let subjects = analytics::build_subjects(&manifest, trace.relation());
    println!("\nsubjects:");
    for s in &subjects {
        match s.fault_count() {
            1 => println!("  {} (single fault)", s.version),
            n => println!("  {} (multi-fault, {n} faults)", s.version),
        }
    }

    println!("\nnext steps:");
    let m = manifest_path.display();
    println!("  multifault --manifest {m} search -o {}", dir.display());
    println!(
        "  multifault --manifest {m} verify   # exits 1: fault 2 skips version 4, \
         so the oracle finds one extra pair"
    );
    println!(
        "  multifault --manifest {m} checkout Demo-1-2-3 --relation {}/relation.csv -w {}/subject",
        dir.display(),
        dir.display()
    );
    Ok(())
}
