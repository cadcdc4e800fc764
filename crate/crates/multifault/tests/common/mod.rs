//! Shared helpers for the integration suites.

#![allow(dead_code)] // not every suite uses every helper

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use multifault::fixture::{Fixture, FixtureBuilder};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Generates a benchmark whose ground truth is known by construction.
///
/// With `contiguous`, every fault is planted into a prefix of its
/// predecessor chain (nearest-first), so the early-stopping scan finds
/// everything the exhaustive check finds. Without it, at least one
/// fault has a hole in its planted range.
pub fn random_fixture(seed: u64, contiguous: bool) -> Fixture {
    let mut rng = StdRng::seed_from_u64(seed);
    let count: u32 = rng.random_range(5..=20);

    let mut planted: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for n in 1..count {
        let predecessors: Vec<u32> = (n + 1..=count).collect();
        let set = if contiguous {
            let len = rng.random_range(0..=predecessors.len());
            predecessors[..len].to_vec()
        } else {
            predecessors
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.4))
                .collect()
        };
        planted.insert(n, set);
    }
    if !contiguous {
        let has_gap = planted.iter().any(|(n, set)| {
            let chain: Vec<u32> = (n + 1..=count).collect();
            !chain.starts_with(set)
        });
        if !has_gap {
            // Hole at the second predecessor of fault 1.
            planted.insert(1, vec![2, 4]);
        }
    }

    let mut builder = FixtureBuilder::new("Rand");
    for n in 1..=count {
        builder.fault(n);
        if let Some(set) = planted.get(&n) {
            builder.fault(n).exists_in(set);
        }
    }
    builder.build()
}

/// A scratch directory on the fastest filesystem around: tmpfs when the
/// host has one, the default temp dir otherwise. Search scratch space is
/// pure churn (thousands of tiny trees written and deleted), which
/// dominates suite runtime on spinning or virtual disks.
pub fn fast_scratch() -> tempfile::TempDir {
    let shm = Path::new("/dev/shm");
    if shm.is_dir() {
        if let Ok(dir) = tempfile::tempdir_in(shm) {
            return dir;
        }
    }
    tempfile::tempdir().expect("temp dir is creatable")
}

/// Relative path to content for every file under `root`.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.expect("tree is readable");
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(root).unwrap().to_path_buf();
            map.insert(rel, fs::read(entry.path()).expect("file is readable"));
        }
    }
    map
}

/// Paths present in `after` with different bytes than in `before`.
/// Additions and removals count as differences.
pub fn tree_diff(
    before: &BTreeMap<PathBuf, Vec<u8>>,
    after: &BTreeMap<PathBuf, Vec<u8>>,
) -> Vec<PathBuf> {
    let mut diff: Vec<PathBuf> = after
        .iter()
        .filter(|(p, bytes)| before.get(*p) != Some(bytes))
        .map(|(p, _)| p.clone())
        .collect();
    for p in before.keys() {
        if !after.contains_key(p) {
            diff.push(p.clone());
        }
    }
    diff.sort();
    diff
}
