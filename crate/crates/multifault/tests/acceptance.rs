//! Acceptance gate for the pipeline. Each criterion is one test, so the
//! harness prints one pass/fail line per criterion:
//!
//! 1. a two-fault project yields exactly its one co-existence pair and a
//!    two-fault subject, in under a second;
//! 2. early stopping consults exactly one version past the last
//!    revealing predecessor, and none beyond;
//! 3. the scan agrees with exhaustive checking on contiguous ground
//!    truth and finds the maximal contiguous prefix otherwise;
//! 4. transplantation touches only the planned test files, and the
//!    extractor re-locates every inserted method;
//! 5. signature matching is an equivalence relation under the default
//!    normalizer chain;
//! 6. lifespan arithmetic is exact, including the zero case;
//! 7. census totals over a constructed catalog come out exactly;
//! 8. checkouts are deterministic and single-id tokens match plain
//!    checkouts byte for byte;
//! 9. a command-adapter run over shell stubs matches the synthetic run
//!    on the same logical fixture.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use multifault::adapter::{build_adapter, AdapterConfig, ExecutionAdapter};
use multifault::analytics;
use multifault::checkout::{checkout_token, MultiFaultToken};
use multifault::extract;
use multifault::fixture::FixtureBuilder;
use multifault::manifest::BenchmarkManifest;
use multifault::model::{FaultId, FaultRecord, TestRef, VersionRef};
use multifault::relation::ExistenceRelation;
use multifault::search::{Searcher, VerdictReason};
use multifault::signatures_match;
use multifault::transplant::{self, PlanOutcome};
use multifault::NormalizerChain;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use common::{random_fixture, snapshot, tree_diff};

fn id(project: &str, n: u32) -> FaultId {
    FaultId::new(project, n).unwrap()
}

#[test]
fn criterion_1_motivating_two_fault_project() {
    let started = Instant::now();

    // Fault 1 was patched after fault 2; its test transplants into
    // fault 2's faulty version and still fails there.
    let mut b = FixtureBuilder::new("Motiv");
    b.fault(1).exists_in(&[2]);
    b.fault(2);
    let fx = b.build();

    let adapter = fx.adapter();
    let trace = Searcher::new(fx.manifest(), &adapter).run().unwrap();

    assert_eq!(trace.relation().len(), 1);
    assert!(trace.relation().contains(&id("Motiv", 1), &id("Motiv", 2)));
    assert_eq!(trace.verdicts().len(), 1);
    assert_eq!(trace.verdicts()[0].reason, VerdictReason::AllConditionsMet);

    let subjects = analytics::build_subjects(fx.manifest(), trace.relation());
    let b2 = subjects
        .iter()
        .find(|s| s.version.number() == 2)
        .expect("fault 2's version is a subject");
    assert!(b2.is_multi_fault());
    assert_eq!(b2.fault_count(), 2);
    assert_eq!(b2.numbers(), vec![1, 2]);
    let b1 = subjects.iter().find(|s| s.version.number() == 1).unwrap();
    assert!(!b1.is_multi_fault());

    assert!(
        started.elapsed() < Duration::from_secs(1),
        "took {:?}",
        started.elapsed()
    );
}

#[test]
fn criterion_2_early_stopping_consultations() {
    // Twenty versions; fault 3 is present in ranks 4 through 16 and
    // gone from 17 onward.
    let mut b = FixtureBuilder::new("Lang");
    for n in 1..=20 {
        b.fault(n);
    }
    b.fault(3).exists_in(&(4..=16).collect::<Vec<_>>());
    let fx = b.build();

    let adapter = fx.adapter();
    let searcher = Searcher::new(fx.manifest(), &adapter);
    let verdicts = searcher.scan_fault(&id("Lang", 3)).unwrap();

    // One consultation per rank 4..=17: thirteen hits, then the first
    // miss stops the scan.
    assert_eq!(verdicts.len(), 14);
    assert_eq!(verdicts.iter().filter(|v| v.revealed).count(), 13);
    let consulted: Vec<u32> = verdicts.iter().map(|v| v.version.number()).collect();
    assert_eq!(consulted, (4..=17).collect::<Vec<u32>>());
    assert!(consulted.iter().all(|&m| m <= 17), "consulted beyond 17");
    assert!(!verdicts.last().unwrap().revealed);

    // The full run agrees: thirteen pairs, all for fault 3.
    let trace = searcher.run().unwrap();
    assert_eq!(trace.relation().len(), 13);
    assert_eq!(trace.relation().revealing_versions(&id("Lang", 3)).len(), 13);
}

#[test]
fn criterion_3_oracle_equivalence() {
    let started = Instant::now();
    let scratch = common::fast_scratch();
    let relation_of = |fx: &multifault::fixture::Fixture, oracle: bool, tag: &str| {
        let adapter = fx.adapter();
        Searcher::new(fx.manifest(), &adapter)
            .oracle(oracle)
            .scratch_root(scratch.path().join(tag))
            .run()
            .unwrap()
            .into_relation()
    };

    // Contiguous ground truth: the early-stopping scan and the
    // exhaustive oracle agree exactly, and both match the plant.
    for seed in 0..100u64 {
        let fx = random_fixture(seed, true);
        let scan = relation_of(&fx, false, &format!("c{seed}-scan"));
        let brute = relation_of(&fx, true, &format!("c{seed}-oracle"));
        assert_eq!(scan, brute, "seed {seed}: scan vs oracle");
        assert_eq!(
            brute,
            fx.expected_relation_bruteforce(),
            "seed {seed}: oracle vs plant"
        );
    }

    // Non-contiguous ground truth: the scan finds a subset, and per
    // fault exactly the maximal contiguous prefix.
    for seed in 1000..1050u64 {
        let fx = random_fixture(seed, false);
        let scan = relation_of(&fx, false, &format!("n{seed}-scan"));
        let brute = relation_of(&fx, true, &format!("n{seed}-oracle"));
        assert_eq!(
            brute,
            fx.expected_relation_bruteforce(),
            "seed {seed}: oracle vs plant"
        );
        assert_eq!(
            scan,
            fx.expected_relation_scan(),
            "seed {seed}: scan vs maximal contiguous prefix"
        );
        for (n, m) in scan.pairs() {
            assert!(brute.contains(n, m), "seed {seed}: ({n}, {m}) not in oracle");
        }
    }

    assert!(
        started.elapsed() < Duration::from_secs(30),
        "took {:?}",
        started.elapsed()
    );
}

#[test]
fn criterion_4_transplant_purity() {
    // Fixture part: a real pair out of a planted benchmark.
    let mut b = FixtureBuilder::new("Pure");
    b.fault(1).extra_test("test_fault_1_edge").exists_in(&[3]);
    b.fault(2);
    b.fault(3);
    let fx = b.build();
    let adapter = fx.adapter();
    let donor = fx.manifest().fault_by_number(1).unwrap();
    let target = fx.manifest().fault_by_number(3).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let donor_root = tmp.path().join("donor");
    let target_root = tmp.path().join("target");
    let augmented_root = tmp.path().join("augmented");
    adapter.checkout(&donor.faulty_ref, &donor_root).unwrap();
    adapter.checkout(&target.faulty_ref, &target_root).unwrap();

    let plan = match transplant::plan(
        &donor.faulty_ref,
        &donor_root,
        &target.faulty_ref,
        &target_root,
        &donor.tests,
    )
    .unwrap()
    {
        PlanOutcome::Planned(p) => p,
        other => panic!("expected a clean plan, got {other:?}"),
    };
    transplant::apply(&plan, &target_root, &augmented_root).unwrap();

    let before = snapshot(&target_root);
    let after = snapshot(&augmented_root);
    let mut planned_files: Vec<PathBuf> = plan
        .moves
        .iter()
        .map(|m| PathBuf::from(m.test.class_path()))
        .collect();
    planned_files.sort();
    planned_files.dedup();
    assert_eq!(tree_diff(&before, &after), planned_files);

    for m in &plan.moves {
        let src = fs::read_to_string(augmented_root.join(m.test.class_path())).unwrap();
        let span = extract::locate_method(&src, m.test.method_name()).unwrap();
        assert!(span.text.contains(m.test.method_name()));
        extract::list_methods(&src).expect("augmented class scans without imbalance");
    }

    // Property part: generated sources whose strings and comments are
    // full of stray braces still transplant cleanly.
    let fragments = [
        r#"String s = "left { brace";"#,
        r#"String s2 = "right } and } again";"#,
        r#"// dangling } in a line comment"#,
        r#"/* { braces } inside { a block comment */"#,
        r#"char open = '{';"#,
        r#"char close = '}';"#,
        r#"String esc = "escaped \" quote and { brace";"#,
        r#"String path = "C:\\tmp\\{dir}";"#,
        r#"if (flag) { count += 1; }"#,
        r#"while (count > 0) { count -= 1; }"#,
        r#"int[] xs = {1, 2, 3};"#,
    ];
    let body = prop::collection::vec(prop::sample::select(fragments.to_vec()), 1..6).prop_map(
        |lines| {
            let mut text = String::from("boolean flag = true;\n        int count = 2;");
            for l in lines {
                text.push_str("\n        ");
                text.push_str(l);
            }
            text
        },
    );
    let cases = (
        prop::collection::vec(body.clone(), 1..=4),
        prop::collection::vec(body, 1..=3),
    );

    let render = |prefix: &str, bodies: &[String]| {
        let mut src = String::from(
            "package org.example;\n\nimport org.junit.Test;\n\npublic class GenTest {\n",
        );
        for (i, b) in bodies.iter().enumerate() {
            src.push_str(&format!(
                "\n    @Test\n    public void {prefix}_{i}() {{\n        {b}\n    }}\n"
            ));
        }
        src.push_str("}\n");
        src
    };

    let mut runner = TestRunner::new(Config {
        cases: 200,
        ..Config::default()
    });
    runner
        .run(&cases, |(donor_bodies, target_bodies)| {
            let tmp = tempfile::tempdir().unwrap();
            let donor_root = tmp.path().join("donor");
            let target_root = tmp.path().join("target");
            let augmented_root = tmp.path().join("augmented");
            let class = "src/test/GenTest.java";
            for (root, prefix, bodies) in [
                (&donor_root, "moved", &donor_bodies),
                (&target_root, "base", &target_bodies),
            ] {
                fs::create_dir_all(root.join("src/test")).unwrap();
                fs::write(root.join(class), render(prefix, bodies)).unwrap();
                fs::create_dir_all(root.join("src/main")).unwrap();
                fs::write(root.join("src/main/Calc.java"), "public class Calc { }\n").unwrap();
            }

            let tests: Vec<TestRef> = (0..donor_bodies.len())
                .map(|i| TestRef::new(class, &format!("moved_{i}")).unwrap())
                .collect();
            let outcome = transplant::plan(
                &VersionRef::new("gen-donor").unwrap(),
                &donor_root,
                &VersionRef::new("gen-target").unwrap(),
                &target_root,
                &tests,
            )
            .unwrap();
            let plan = match outcome {
                PlanOutcome::Planned(p) => p,
                other => {
                    return Err(TestCaseError::fail(format!("expected a plan, got {other:?}")))
                }
            };
            transplant::apply(&plan, &target_root, &augmented_root).unwrap();

            let diff = tree_diff(&snapshot(&target_root), &snapshot(&augmented_root));
            prop_assert_eq!(diff, vec![PathBuf::from(class)]);

            let src = fs::read_to_string(augmented_root.join(class)).unwrap();
            let methods = extract::list_methods(&src).unwrap();
            prop_assert_eq!(methods.len(), donor_bodies.len() + target_bodies.len());
            for t in &tests {
                let span = extract::locate_method(&src, t.method_name()).unwrap();
                prop_assert!(span.text.contains(t.method_name()));
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn criterion_5_signature_matching_is_an_equivalence() {
    // Raw failures drawn from a small pool of true identities, each
    // decorated with noise the default chain is meant to erase.
    const BASES: [(&str, &str); 3] = [
        ("AssertionFailedError", "expected:<4> but was:<5>"),
        ("NullPointerException", "null dereference in Frame"),
        ("IllegalStateException", "stack underflow while folding"),
    ];
    const DIRS: [&str; 3] = ["/tmp/scan-17/", "/var/ci/jobs/9/work/", "/home/bench/scratch/"];

    #[derive(Debug, Clone)]
    struct Raw {
        base: usize,
        with_path: bool,
        error_type: String,
        message: String,
    }

    fn raw() -> impl Strategy<Value = Raw> {
        (
            0..BASES.len(),
            any::<bool>(),
            0..DIRS.len(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            1u32..999,
            1u32..99,
        )
            .prop_map(
                |(base, with_path, dir, pad_type, double_ws, coords, stack, line, col)| {
                    let (error_type, message) = BASES[base];
                    let error_type = if pad_type {
                        format!("  {error_type}\t")
                    } else {
                        error_type.to_string()
                    };
                    let mut message = message.to_string();
                    if double_ws {
                        message = message.replace(' ', " \t ");
                    }
                    if with_path {
                        message.push_str(&format!(" at {}Calc.java", DIRS[dir]));
                    }
                    if coords {
                        message.push_str(&format!(":{line}:{col}"));
                    }
                    if stack {
                        message.push_str("\n\tat org.example.CalcTest.testRound(CalcTest.java:41)");
                    }
                    Raw {
                        base,
                        with_path,
                        error_type,
                        message,
                    }
                },
            )
    }

    let chain = NormalizerChain::default_chain();
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        ..Config::default()
    });
    runner
        .run(&(raw(), raw(), raw()), |(a, b, c)| {
            let na = chain.normalize(&a.error_type, &a.message);
            let nb = chain.normalize(&b.error_type, &b.message);
            let nc = chain.normalize(&c.error_type, &c.message);

            // Reflexive, also across re-normalization.
            prop_assert!(signatures_match(&na, &na));
            prop_assert!(signatures_match(
                &na,
                &chain.normalize(&a.error_type, &a.message)
            ));

            // Symmetric.
            prop_assert_eq!(signatures_match(&na, &nb), signatures_match(&nb, &na));
            prop_assert_eq!(signatures_match(&nb, &nc), signatures_match(&nc, &nb));

            // Transitive, in every rotation.
            if signatures_match(&na, &nb) && signatures_match(&nb, &nc) {
                prop_assert!(signatures_match(&na, &nc));
            }
            if signatures_match(&na, &nc) && signatures_match(&nc, &nb) {
                prop_assert!(signatures_match(&na, &nb));
            }
            if signatures_match(&nb, &na) && signatures_match(&na, &nc) {
                prop_assert!(signatures_match(&nb, &nc));
            }

            // Non-vacuous: the decorations never change identity, so
            // matching is exactly agreement on the undecorated failure.
            let same = (a.base, a.with_path) == (b.base, b.with_path);
            prop_assert_eq!(signatures_match(&na, &nb), same);
            Ok(())
        })
        .unwrap();
}

#[test]
fn criterion_6_lifespan_arithmetic() {
    // Fault 1's revision sits 1,187 days after the revision of the
    // oldest version revealing it; fault 2 is revealed nowhere else.
    let mut b = FixtureBuilder::new("Lang");
    b.fault(1).date("2010-07-01").exists_in(&[2, 3]);
    b.fault(2).date("2009-06-15");
    b.fault(3).date("2007-04-01");
    let fx = b.build();

    let adapter = fx.adapter();
    let relation = Searcher::new(fx.manifest(), &adapter)
        .run()
        .unwrap()
        .into_relation();
    assert_eq!(relation.len(), 2);

    let rows = analytics::lifespans(fx.manifest(), &relation);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].fault, id("Lang", 1));
    assert_eq!(rows[0].days, 1187);
    assert_eq!(rows[0].oldest, Some(id("Lang", 3)));
    assert_eq!(rows[1].days, 0);
    assert_eq!(rows[1].oldest, None);
    assert_eq!(rows[2].days, 0);
}

#[test]
fn criterion_7_census_totals() {
    // A 326-version catalog built to known totals: 15 single-fault
    // versions, 185 with two faults, 104 with ten, 21 with twenty and
    // one with twenty-four.
    let newest = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let records: Vec<FaultRecord> = (1..=326u32)
        .map(|r| FaultRecord {
            id: id("Catalog", r),
            rank: r,
            revision_date: newest - chrono::Days::new(u64::from(r)),
            tests: vec![
                TestRef::new("src/test/CatalogTest.java", &format!("test_fault_{r}")).unwrap(),
            ],
            faulty_ref: VersionRef::new(format!("Catalog-{r}b")).unwrap(),
            fixed_ref: VersionRef::new(format!("Catalog-{r}f")).unwrap(),
            excluded: false,
        })
        .collect();
    let manifest = BenchmarkManifest::from_records(
        "Catalog".to_string(),
        AdapterConfig::Synthetic {
            root: None,
            timeout_seconds: 60,
        },
        NormalizerChain::default_chain(),
        records,
        Path::new("."),
    )
    .unwrap();

    let mut relation = ExistenceRelation::new();
    for host in 1..=326u32 {
        let donors: u32 = match host {
            1..=15 => 0,
            16..=200 => 1,
            201..=304 => 9,
            305..=325 => 19,
            326 => 23,
            _ => unreachable!(),
        };
        for n in 1..=donors {
            relation.insert(id("Catalog", n), id("Catalog", host));
        }
    }
    relation.validate(&manifest).unwrap();

    let subjects = analytics::build_subjects(&manifest, &relation);
    let stats = analytics::census(&subjects);
    assert_eq!(stats.versions, 326);
    assert_eq!(stats.multi, 311);
    assert_eq!(stats.ge10, 126);
    assert_eq!(stats.ge20, 22);
    assert_eq!(stats.max, 24);
    assert_eq!(stats.max_version, Some(id("Catalog", 326)));
    assert_eq!(
        stats.summary_lines(),
        "versions=326\nmulti=311 (95.4%)\nge10=126\nge20=22\nmax=24 (Catalog-326)\n"
    );

    let hist = analytics::fault_count_histogram(&subjects);
    let expected: Vec<(usize, usize)> = vec![(1, 15), (2, 185), (10, 104), (20, 21), (24, 1)];
    assert_eq!(hist.into_iter().collect::<Vec<_>>(), expected);
}

#[test]
fn criterion_8_checkout_determinism() {
    let mut b = FixtureBuilder::new("Demo");
    b.fault(1).exists_in(&[2, 3]);
    b.fault(2).exists_in(&[3]);
    b.fault(3);
    let fx = b.build();
    let adapter = fx.adapter();
    let relation = Searcher::new(fx.manifest(), &adapter)
        .run()
        .unwrap()
        .into_relation();

    let tmp = tempfile::tempdir().unwrap();
    let token: MultiFaultToken = "Demo-1-2-3".parse().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let report = checkout_token(
        fx.manifest(),
        &adapter,
        &token,
        Some(&relation),
        false,
        &first,
    )
    .unwrap();
    checkout_token(
        fx.manifest(),
        &adapter,
        &token,
        Some(&relation),
        false,
        &second,
    )
    .unwrap();
    assert_eq!(report.base, id("Demo", 3));
    assert_eq!(report.transplanted, vec![id("Demo", 1), id("Demo", 2)]);
    assert_eq!(snapshot(&first), snapshot(&second), "checkout is not deterministic");

    // A single-id token assembles nothing, so it must equal the plain
    // adapter checkout of that version, byte for byte.
    let via_token = tmp.path().join("via-token");
    let plain = tmp.path().join("plain");
    let single: MultiFaultToken = "Demo-2".parse().unwrap();
    checkout_token(fx.manifest(), &adapter, &single, None, false, &via_token).unwrap();
    adapter
        .checkout(&fx.manifest().fault_by_number(2).unwrap().faulty_ref, &plain)
        .unwrap();
    assert_eq!(snapshot(&via_token), snapshot(&plain));
}

#[test]
fn criterion_9_command_adapter_parity() {
    // One logical fixture exercising every verdict flavor, run three
    // ways: in-memory synthetic, synthetic loaded from disk, and shell
    // stubs through the command adapter.
    let mut b = FixtureBuilder::new("Para");
    b.fault(1).exists_in(&[2, 3]).mismatch_in(&[4]);
    b.fault(2).compile_error_in(&[3]);
    b.fault(3).times_out_in(&[4]);
    b.fault(4).extra_test("test_fault_4_edge").partial_in(&[5]);
    b.fault(5).exists_in(&[6]);
    b.fault(6);
    let fx = b.build();

    let in_memory = fx.adapter();
    let reference = Searcher::new(fx.manifest(), &in_memory).run().unwrap();
    assert_eq!(reference.relation().len(), 3);

    let tmp = tempfile::tempdir().unwrap();
    let synth_manifest =
        BenchmarkManifest::parse(&fx.materialize_synthetic(&tmp.path().join("synth")).unwrap())
            .unwrap();
    let command_manifest =
        BenchmarkManifest::parse(&fx.materialize_command(&tmp.path().join("cmd")).unwrap())
            .unwrap();

    for manifest in [&synth_manifest, &command_manifest] {
        let adapter = build_adapter(
            manifest.adapter_config(),
            manifest.base_dir(),
            manifest.normalizer_chain().clone(),
        )
        .unwrap();
        let trace = Searcher::new(manifest, adapter.as_ref()).run().unwrap();
        assert_eq!(trace.trace_csv(), reference.trace_csv());
        assert_eq!(trace.summary_text(), reference.summary_text());
        assert_eq!(trace.relation(), reference.relation());
    }
}
