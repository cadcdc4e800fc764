//! Programmable benchmark fixtures.
//!
//! A fixture plants a whole single-fault benchmark: a manifest, virtual
//! source trees for every faulty and fixed version, and a script of test
//! outcomes. The builder speaks in scenario terms (`exists_in`,
//! `compile_error_in`, `shadowed_in`) and takes care of the bookkeeping
//! that makes the data internally consistent: tests accumulate over
//! history (older versions carry fewer tests), every fault's tests fail
//! on its own faulty version and pass on its fixed one, and shared test
//! names resolve to one method with one per-version outcome.
//!
//! Fixtures also compute their own expected relations by pure set logic
//! over the planted scenario, independent of the search implementation,
//! so tests can compare a real run against planted ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::adapter::signature::NormalizerChain;
use crate::adapter::synthetic::{ScriptedOutcome, SyntheticAdapter, SyntheticBuilder};
use crate::adapter::AdapterConfig;
use crate::manifest::{render_manifest, BenchmarkManifest};
use crate::model::{FaultId, FaultRecord, TestRef, VersionRef};
use crate::relation::ExistenceRelation;

/// Scenario description for one fault, mutated through the builder.
#[derive(Debug, Clone)]
pub struct FaultSpec {
    number: u32,
    rank: Option<u32>,
    date: Option<NaiveDate>,
    excluded: bool,
    primary_test: Option<String>,
    extra_tests: Vec<String>,
    class: Option<String>,
    own_class: bool,
    error_type: String,
    message: Option<String>,
    exists_in: BTreeSet<u32>,
    compile_error_in: BTreeSet<u32>,
    times_out_in: BTreeSet<u32>,
    mismatch_in: BTreeSet<u32>,
    partial_in: BTreeSet<u32>,
    shadowed_in: BTreeSet<u32>,
    independent_overlap_in: BTreeSet<u32>,
    broken_baseline: bool,
}

impl FaultSpec {
    fn new(number: u32) -> Self {
        Self {
            number,
            rank: None,
            date: None,
            excluded: false,
            primary_test: None,
            extra_tests: Vec::new(),
            class: None,
            own_class: false,
            error_type: "AssertionFailedError".to_string(),
            message: None,
            exists_in: BTreeSet::new(),
            compile_error_in: BTreeSet::new(),
            times_out_in: BTreeSet::new(),
            mismatch_in: BTreeSet::new(),
            partial_in: BTreeSet::new(),
            shadowed_in: BTreeSet::new(),
            independent_overlap_in: BTreeSet::new(),
            broken_baseline: false,
        }
    }

    pub fn rank(&mut self, rank: u32) -> &mut Self {
        self.rank = Some(rank);
        self
    }

    /// Revision date as `YYYY-MM-DD`. Defaults to a synthetic history
    /// spaced 30 days per rank, newest at 2021-01-01.
    pub fn date(&mut self, iso: &str) -> &mut Self {
        self.date = Some(
            NaiveDate::parse_from_str(iso, "%Y-%m-%d").expect("fixture dates are ISO dates"),
        );
        self
    }

    pub fn excluded(&mut self) -> &mut Self {
        self.excluded = true;
        self
    }

    /// Names the primary fault-revealing test instead of the default
    /// `test_fault_<n>`. Two faults naming the same test in the same
    /// class share one method, which is how overlap scenarios are built.
    pub fn test_named(&mut self, method: &str) -> &mut Self {
        self.primary_test = Some(method.to_string());
        self
    }

    /// Adds a second (third, ...) revealing test on top of the primary.
    pub fn extra_test(&mut self, method: &str) -> &mut Self {
        self.extra_tests.push(method.to_string());
        self
    }

    /// Puts this fault's tests in a class born with the fault's fix, so
    /// every older version lacks the class entirely.
    pub fn own_class(&mut self) -> &mut Self {
        self.own_class = true;
        self
    }

    pub fn error_type(&mut self, error_type: &str) -> &mut Self {
        self.error_type = error_type.to_string();
        self
    }

    /// Overrides the failure message used everywhere this fault's tests
    /// fail. Defaults to a message derived from the test name, so shared
    /// tests agree across faults.
    pub fn message(&mut self, message: &str) -> &mut Self {
        self.message = Some(message.to_string());
        self
    }

    /// Plants the fault into the listed older versions: the transplanted
    /// tests will fail there with the baseline error.
    pub fn exists_in(&mut self, versions: &[u32]) -> &mut Self {
        self.exists_in.extend(versions.iter().copied());
        self
    }

    /// The augmented version fails to build in these versions.
    pub fn compile_error_in(&mut self, versions: &[u32]) -> &mut Self {
        self.compile_error_in.extend(versions.iter().copied());
        self
    }

    /// The transplanted tests hang in these versions.
    pub fn times_out_in(&mut self, versions: &[u32]) -> &mut Self {
        self.times_out_in.extend(versions.iter().copied());
        self
    }

    /// Tests fail there, but with a different error than the baseline.
    pub fn mismatch_in(&mut self, versions: &[u32]) -> &mut Self {
        self.mismatch_in.extend(versions.iter().copied());
        self
    }

    /// Only the first of several tests fails there; the rest pass.
    pub fn partial_in(&mut self, versions: &[u32]) -> &mut Self {
        self.partial_in.extend(versions.iter().copied());
        self
    }

    /// The listed versions natively carry a method with this fault's
    /// test name (without listing it as their own revealing test).
    pub fn shadowed_in(&mut self, versions: &[u32]) -> &mut Self {
        self.shadowed_in.extend(versions.iter().copied());
        self
    }

    /// Leaves this fault's own faulty version unscripted, so its tests
    /// pass where they are supposed to fail. Searching such a fault
    /// must be rejected as a data-quality problem.
    pub fn broken_baseline(&mut self) -> &mut Self {
        self.broken_baseline = true;
        self
    }

    /// For manifest-level overlaps with these versions, script the
    /// shared tests to keep failing on the version's fixed revision, so
    /// attribution to this fault succeeds. This deliberately contradicts
    /// the other fault's own baseline, which makes it usable only with
    /// pairwise checks, never with a full scan of that fault.
    pub fn independent_overlap_in(&mut self, versions: &[u32]) -> &mut Self {
        self.independent_overlap_in.extend(versions.iter().copied());
        self
    }

    fn effective_rank(&self) -> u32 {
        self.rank.unwrap_or(self.number)
    }

    fn method_names(&self) -> Vec<String> {
        let primary = self
            .primary_test
            .clone()
            .unwrap_or_else(|| format!("test_fault_{}", self.number));
        std::iter::once(primary).chain(self.extra_tests.iter().cloned()).collect()
    }
}

fn class_ident(project: &str) -> String {
    let clean: String = project.chars().filter(|c| c.is_alphanumeric()).collect();
    if clean.is_empty() {
        "Project".to_string()
    } else {
        clean
    }
}

fn spec_class(project: &str, spec: &FaultSpec) -> String {
    if let Some(c) = &spec.class {
        return c.clone();
    }
    if spec.own_class {
        format!("src/test/{}Fault{}Test.java", class_ident(project), spec.number)
    } else {
        format!("src/test/{}Test.java", class_ident(project))
    }
}

fn spec_tests(project: &str, spec: &FaultSpec) -> Vec<TestRef> {
    let class = spec_class(project, spec);
    spec.method_names()
        .iter()
        .map(|m| TestRef::new(&class, m).expect("fixture test refs are valid"))
        .collect()
}

fn message_for(spec: &FaultSpec, method: &str) -> String {
    spec.message
        .clone()
        .unwrap_or_else(|| format!("invariant {method} violated"))
}

fn locator(project: &str, number: u32, suffix: &str) -> String {
    format!("{project}-{number}{suffix}")
}

pub struct FixtureBuilder {
    project: String,
    faults: BTreeMap<u32, FaultSpec>,
}

impl FixtureBuilder {
    pub fn new(project: &str) -> Self {
        Self {
            project: project.to_string(),
            faults: BTreeMap::new(),
        }
    }

    /// Accesses (creating on first use) the scenario for fault `number`.
    pub fn fault(&mut self, number: u32) -> &mut FaultSpec {
        self.faults
            .entry(number)
            .or_insert_with(|| FaultSpec::new(number))
    }

    pub fn build(self) -> Fixture {
        let newest = NaiveDate::from_ymd_opt(2021, 1, 1).expect("fixed date");
        let mut records = Vec::new();
        for spec in self.faults.values() {
            self.check_spec(spec);
            let rank = spec.effective_rank();
            let date = spec
                .date
                .unwrap_or_else(|| newest - chrono::Days::new(30 * u64::from(rank)));
            records.push(FaultRecord {
                id: FaultId::new(&self.project, spec.number).expect("fixture ids are valid"),
                rank,
                revision_date: date,
                tests: if spec.excluded {
                    Vec::new()
                } else {
                    spec_tests(&self.project, spec)
                },
                faulty_ref: VersionRef::new(locator(&self.project, spec.number, "b"))
                    .expect("refs are non-empty"),
                fixed_ref: VersionRef::new(locator(&self.project, spec.number, "f"))
                    .expect("refs are non-empty"),
                excluded: spec.excluded,
            });
        }
        let manifest = BenchmarkManifest::from_records(
            self.project.clone(),
            AdapterConfig::Synthetic {
                root: None,
                timeout_seconds: 60,
            },
            NormalizerChain::default_chain(),
            records,
            Path::new("."),
        )
        .expect("fixture manifests are valid by construction");

        let synthetic = self.plant_trees_and_script();
        Fixture {
            project: self.project,
            specs: self.faults,
            manifest,
            synthetic,
        }
    }

    fn check_spec(&self, spec: &FaultSpec) {
        let rank = spec.effective_rank();
        let all: [(&str, &BTreeSet<u32>); 7] = [
            ("exists_in", &spec.exists_in),
            ("compile_error_in", &spec.compile_error_in),
            ("times_out_in", &spec.times_out_in),
            ("mismatch_in", &spec.mismatch_in),
            ("partial_in", &spec.partial_in),
            ("shadowed_in", &spec.shadowed_in),
            ("independent_overlap_in", &spec.independent_overlap_in),
        ];
        for (name, set) in all {
            for &m in set.iter() {
                let target = self.faults.get(&m).unwrap_or_else(|| {
                    panic!("fault {} {name} references unknown fault {m}", spec.number)
                });
                assert!(
                    target.effective_rank() > rank,
                    "fault {} {name} references {m}, which is not older",
                    spec.number
                );
            }
        }
        // A version hosts at most one scripted behavior per fault.
        let behavior_sets = [
            &spec.exists_in,
            &spec.compile_error_in,
            &spec.times_out_in,
            &spec.mismatch_in,
            &spec.partial_in,
        ];
        for (i, a) in behavior_sets.iter().enumerate() {
            for b in behavior_sets.iter().skip(i + 1) {
                assert!(
                    a.is_disjoint(b),
                    "fault {} plants conflicting behaviors in one version",
                    spec.number
                );
            }
        }
    }

    /// Builds every version tree and the outcome script.
    fn plant_trees_and_script(&self) -> SyntheticBuilder {
        let mut b = SyntheticBuilder::default();
        let ident = class_ident(&self.project);

        // Method text is derived from the name alone so that shared
        // tests are byte-identical no matter which fault contributed
        // them.
        let method_text = |name: &str| {
            format!(
                "    @Test\n    public void {name}() {{\n        Fixtures.record(\"{name}\");\n    }}\n"
            )
        };

        for host in self.faults.values() {
            let host_rank = host.effective_rank();
            for suffix in ["b", "f"] {
                let loc = locator(&self.project, host.number, suffix);

                // Production source differs per version so trees are
                // never accidentally identical.
                b.file(
                    &loc,
                    format!("src/main/{ident}.java"),
                    format!(
                        "package com.fixture;\n\npublic class {ident} {{\n    // state as of r{host_rank}{suffix}\n}}\n"
                    ),
                );
                b.file(&loc, "VERSION", format!("{loc}\n"));

                // Tests accumulate: version k carries the tests of every
                // fault at least as old as k, plus explicitly planted
                // shadow methods.
                let mut classes: BTreeMap<String, (BTreeSet<u32>, Vec<String>)> = BTreeMap::new();
                for donor in self.faults.values() {
                    if donor.excluded {
                        continue;
                    }
                    let native = donor.effective_rank() >= host_rank;
                    let shadowed = donor.shadowed_in.contains(&host.number);
                    if !native && !shadowed {
                        continue;
                    }
                    let class = spec_class(&self.project, donor);
                    let entry = classes.entry(class).or_default();
                    entry.0.insert(donor.number);
                    for m in donor.method_names() {
                        if !entry.1.contains(&m) {
                            entry.1.push(m);
                        }
                    }
                }
                for (class_path, (importers, methods)) in classes {
                    let class_name = Path::new(&class_path)
                        .file_stem()
                        .expect("class files have names")
                        .to_string_lossy()
                        .into_owned();
                    let mut src = String::from("package com.fixture;\n\nimport org.junit.Test;\n");
                    for n in &importers {
                        src.push_str(&format!("import util.Helper{n};\n"));
                    }
                    src.push_str(&format!("\npublic class {class_name} {{\n"));
                    for m in &methods {
                        src.push('\n');
                        src.push_str(&method_text(m));
                    }
                    src.push_str("}\n");
                    b.file(&loc, class_path, src);
                }
            }
        }

        // Outcome script.
        for spec in self.faults.values() {
            if spec.excluded {
                continue;
            }
            let tests = spec_tests(&self.project, spec);
            let fail = |spec: &FaultSpec, t: &TestRef, suffix: &str| ScriptedOutcome::Failed {
                error_type: spec.error_type.clone(),
                message: format!("{}{suffix}", message_for(spec, t.method_name())),
            };
            if !spec.broken_baseline {
                for t in &tests {
                    b.outcome(
                        &locator(&self.project, spec.number, "b"),
                        t.clone(),
                        fail(spec, t, ""),
                    );
                }
            }
            for &m in &spec.exists_in {
                for t in &tests {
                    b.outcome(&locator(&self.project, m, "b"), t.clone(), fail(spec, t, ""));
                }
            }
            for &m in &spec.mismatch_in {
                for t in &tests {
                    b.outcome(
                        &locator(&self.project, m, "b"),
                        t.clone(),
                        fail(spec, t, &format!(" (divergent in r{m})")),
                    );
                }
            }
            for &m in &spec.compile_error_in {
                for t in &tests {
                    b.outcome(
                        &locator(&self.project, m, "b"),
                        t.clone(),
                        ScriptedOutcome::CompileError {
                            detail: format!("cannot find symbol Fixtures in r{m}"),
                        },
                    );
                }
            }
            for &m in &spec.times_out_in {
                for t in &tests {
                    b.outcome(
                        &locator(&self.project, m, "b"),
                        t.clone(),
                        ScriptedOutcome::RunTimeout,
                    );
                }
            }
            for &m in &spec.partial_in {
                if let Some(first) = tests.first() {
                    b.outcome(
                        &locator(&self.project, m, "b"),
                        first.clone(),
                        fail(spec, first, ""),
                    );
                }
            }
            for &m in &spec.independent_overlap_in {
                let m_tests: BTreeSet<TestRef> =
                    spec_tests(&self.project, &self.faults[&m]).into_iter().collect();
                for t in tests.iter().filter(|t| m_tests.contains(t)) {
                    b.outcome(&locator(&self.project, m, "f"), t.clone(), fail(spec, t, ""));
                }
            }
        }
        b
    }
}

/// A fully planted benchmark, ready to search in memory or to write to
/// disk for the command-line paths.
pub struct Fixture {
    project: String,
    specs: BTreeMap<u32, FaultSpec>,
    manifest: BenchmarkManifest,
    synthetic: SyntheticBuilder,
}

impl Fixture {
    pub fn manifest(&self) -> &BenchmarkManifest {
        &self.manifest
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    /// A fresh adapter over the planted trees and script.
    pub fn adapter(&self) -> SyntheticAdapter {
        self.synthetic
            .clone()
            .build(self.manifest.normalizer_chain().clone())
    }

    fn id(&self, n: u32) -> FaultId {
        FaultId::new(&self.project, n).expect("fixture ids are valid")
    }

    /// Whether a pairwise check of `(n, m)` should come out revealed,
    /// by pure scenario logic.
    pub fn pair_expected(&self, n: u32, m: u32) -> bool {
        let spec = &self.specs[&n];
        if spec.broken_baseline || !spec.exists_in.contains(&m) {
            return false;
        }
        if spec.own_class {
            return false;
        }
        // Manifest-level overlap: shared tests must be scripted to keep
        // failing on the other fault's fixed version.
        let m_spec = &self.specs[&m];
        if !m_spec.excluded {
            let m_tests: BTreeSet<TestRef> =
                spec_tests(&self.project, m_spec).into_iter().collect();
            let shared = spec_tests(&self.project, spec)
                .into_iter()
                .any(|t| m_tests.contains(&t));
            if shared && !spec.independent_overlap_in.contains(&m) {
                return false;
            }
        }
        true
    }

    /// Ground truth under exhaustive checking: every effective pair.
    pub fn expected_relation_bruteforce(&self) -> ExistenceRelation {
        let mut relation = ExistenceRelation::new();
        for (&n, spec) in &self.specs {
            if spec.excluded {
                continue;
            }
            for &m in &spec.exists_in {
                if self.specs[&m].excluded {
                    continue;
                }
                if self.pair_expected(n, m) {
                    relation.insert(self.id(n), self.id(m));
                }
            }
        }
        relation
    }

    /// Ground truth under the early-stopping scan: per fault, the
    /// longest unbroken run of revealing predecessors, nearest first.
    pub fn expected_relation_scan(&self) -> ExistenceRelation {
        let mut relation = ExistenceRelation::new();
        for (&n, spec) in &self.specs {
            if spec.excluded {
                continue;
            }
            let n_rank = spec.effective_rank();
            let mut predecessors: Vec<(u32, u32)> = self
                .specs
                .values()
                .filter(|s| !s.excluded && s.effective_rank() > n_rank)
                .map(|s| (s.effective_rank(), s.number))
                .collect();
            predecessors.sort_unstable();
            for (_, m) in predecessors {
                if self.pair_expected(n, m) {
                    relation.insert(self.id(n), self.id(m));
                } else {
                    break;
                }
            }
        }
        relation
    }

    /// Writes a loadable benchmark layout driven by the in-process
    /// adapter: `manifest.toml`, `fixture/trees/...`, `fixture/script.toml`.
    /// Returns the manifest path.
    pub fn materialize_synthetic(&self, dir: &Path) -> io::Result<PathBuf> {
        let fixture_dir = dir.join("fixture");
        self.write_trees(&fixture_dir)?;
        fs::write(fixture_dir.join("script.toml"), self.synthetic.render_script())?;
        let manifest_path = dir.join("manifest.toml");
        let config = AdapterConfig::Synthetic {
            root: Some(PathBuf::from("fixture")),
            timeout_seconds: 60,
        };
        fs::write(
            &manifest_path,
            render_manifest(&self.project, None, &config, self.manifest.faults()),
        )?;
        Ok(manifest_path)
    }

    /// Writes a benchmark layout driven by shell stubs through the
    /// command adapter: `manifest.toml`, `stubs/*.sh`, `fixture/trees/`,
    /// and the TSV the stubs consult. Returns the manifest path.
    pub fn materialize_command(&self, dir: &Path) -> io::Result<PathBuf> {
        let fixture_dir = dir.join("fixture");
        self.write_trees(&fixture_dir)?;
        fs::write(fixture_dir.join("outcomes.tsv"), self.outcomes_tsv())?;

        let stubs = dir.join("stubs");
        fs::create_dir_all(&stubs)?;
        fs::write(stubs.join("checkout.sh"), CHECKOUT_STUB)?;
        fs::write(stubs.join("compile.sh"), COMPILE_STUB)?;
        fs::write(stubs.join("test.sh"), TEST_STUB)?;

        let manifest_path = dir.join("manifest.toml");
        let config = AdapterConfig::Command {
            checkout_cmd: "sh stubs/checkout.sh {version} {workdir}".to_string(),
            compile_cmd: "sh stubs/compile.sh {workdir}".to_string(),
            test_cmd: "sh stubs/test.sh {workdir} {tests}".to_string(),
            timeout_seconds: 60,
            env_allowlist: Vec::new(),
        };
        fs::write(
            &manifest_path,
            render_manifest(&self.project, None, &config, self.manifest.faults()),
        )?;
        Ok(manifest_path)
    }

    fn write_trees(&self, fixture_dir: &Path) -> io::Result<()> {
        for version in self.synthetic.versions() {
            let tree = self
                .synthetic
                .tree(version)
                .expect("listed version has a tree");
            for (rel, content) in &tree.files {
                let path = fixture_dir.join("trees").join(version).join(rel);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(path, content)?;
            }
        }
        Ok(())
    }

    /// One line per scripted outcome:
    /// `version<TAB>test<TAB>status<TAB>error_type<TAB>message`.
    fn outcomes_tsv(&self) -> String {
        let mut out = String::new();
        let failed_line = |version: &str, t: &TestRef, spec: &FaultSpec, suffix: &str| {
            format!(
                "{version}\t{t}\tfailed\t{}\t{}{suffix}\n",
                spec.error_type,
                message_for(spec, t.method_name())
            )
        };
        for spec in self.specs.values() {
            if spec.excluded {
                continue;
            }
            let tests = spec_tests(&self.project, spec);
            if !spec.broken_baseline {
                for t in &tests {
                    out.push_str(&failed_line(
                        &locator(&self.project, spec.number, "b"),
                        t,
                        spec,
                        "",
                    ));
                }
            }
            for &m in &spec.exists_in {
                for t in &tests {
                    out.push_str(&failed_line(&locator(&self.project, m, "b"), t, spec, ""));
                }
            }
            for &m in &spec.mismatch_in {
                for t in &tests {
                    out.push_str(&failed_line(
                        &locator(&self.project, m, "b"),
                        t,
                        spec,
                        &format!(" (divergent in r{m})"),
                    ));
                }
            }
            for &m in &spec.compile_error_in {
                for t in &tests {
                    out.push_str(&format!(
                        "{}\t{t}\tcompile_error\t\t\n",
                        locator(&self.project, m, "b")
                    ));
                }
            }
            for &m in &spec.times_out_in {
                for t in &tests {
                    out.push_str(&format!(
                        "{}\t{t}\ttimeout\t\t\n",
                        locator(&self.project, m, "b")
                    ));
                }
            }
            for &m in &spec.partial_in {
                if let Some(first) = tests.first() {
                    out.push_str(&failed_line(&locator(&self.project, m, "b"), first, spec, ""));
                }
            }
            for &m in &spec.independent_overlap_in {
                let m_tests: BTreeSet<TestRef> =
                    spec_tests(&self.project, &self.specs[&m]).into_iter().collect();
                for t in tests.iter().filter(|t| m_tests.contains(t)) {
                    out.push_str(&failed_line(&locator(&self.project, m, "f"), t, spec, ""));
                }
            }
        }
        out
    }
}

const CHECKOUT_STUB: &str = r#"#!/bin/sh
# args: version workdir
set -eu
version="$1"
workdir="$2"
src="fixture/trees/$version"
[ -d "$src" ] || { echo "no such version: $version" >&2; exit 1; }
mkdir -p "$workdir"
cp -R "$src/." "$workdir/"
"#;

const COMPILE_STUB: &str = r#"#!/bin/sh
# args: workdir
set -eu
workdir="$1"
version="$(cat "$workdir/VERSION")"
tab="$(printf '\t')"
# Transplants are recorded as trailing comments in the test classes.
tests="$(grep -rh '^// TRANSPLANTED-TEST:' "$workdir" 2>/dev/null | sed 's|^// TRANSPLANTED-TEST: *||' || true)"
for test in $tests; do
    if grep -Fq "${version}${tab}${test}${tab}compile_error" fixture/outcomes.tsv; then
        echo "compilation failed for $test" >&2
        exit 10
    fi
done
exit 0
"#;

const TEST_STUB: &str = r#"#!/bin/sh
# args: workdir test...
set -eu
workdir="$1"
shift
version="$(cat "$workdir/VERSION")"
tab="$(printf '\t')"
for test in "$@"; do
    class="${test%%#*}"
    method="${test##*#}"
    if [ ! -f "$workdir/$class" ]; then
        printf 'missing\t%s\n' "$test"
        continue
    fi
    if ! grep -q "void ${method}(" "$workdir/$class"; then
        printf 'missing\t%s\n' "$test"
        continue
    fi
    line="$(grep -F "${version}${tab}${test}${tab}" fixture/outcomes.tsv | head -n 1 || true)"
    if [ -n "$line" ]; then
        status="$(printf '%s\n' "$line" | cut -f3)"
        rest="$(printf '%s\n' "$line" | cut -f4-)"
        printf '%s\t%s\t%s\n' "$status" "$test" "$rest"
    else
        printf 'passed\t%s\n' "$test"
    fi
done
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::{CompileStatus, ExecutionAdapter, TestStatus};

    fn small() -> Fixture {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1);
        fx.fault(2).exists_in(&[3]);
        fx.fault(3);
        fx.fault(4).excluded();
        fx.build()
    }

    #[test]
    fn manifest_reflects_specs() {
        let fx = small();
        let m = fx.manifest();
        assert_eq!(m.project(), "Demo");
        assert_eq!(m.faults().len(), 4);
        let f2 = m.fault_by_number(2).unwrap();
        assert_eq!(f2.tests.len(), 1);
        assert_eq!(f2.tests[0].method_name(), "test_fault_2");
        assert!(m.fault_by_number(4).unwrap().excluded);
        // The synthetic history grows strictly older as rank grows.
        let dates: Vec<_> = m.faults().iter().map(|f| f.revision_date).collect();
        assert!(dates.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn trees_accumulate_tests_backwards() {
        let fx = small();
        let a = fx.adapter();
        let tmp = tempfile::tempdir().unwrap();

        // Newest version carries everything; oldest only its own test.
        let newest = tmp.path().join("v1");
        a.checkout(&VersionRef::new("Demo-1b").unwrap(), &newest).unwrap();
        let newest_src = fs::read_to_string(newest.join("src/test/DemoTest.java")).unwrap();
        assert!(newest_src.contains("test_fault_1"));
        assert!(newest_src.contains("test_fault_2"));
        assert!(newest_src.contains("test_fault_3"));

        let oldest = tmp.path().join("v3");
        a.checkout(&VersionRef::new("Demo-3b").unwrap(), &oldest).unwrap();
        let oldest_src = fs::read_to_string(oldest.join("src/test/DemoTest.java")).unwrap();
        assert!(!oldest_src.contains("test_fault_1"));
        assert!(!oldest_src.contains("test_fault_2"));
        assert!(oldest_src.contains("test_fault_3"));

        // Trees compile under the adapter's lexical javac stand-in.
        assert_eq!(a.compile(&newest).unwrap(), CompileStatus::Ok);
    }

    #[test]
    fn baselines_hold_on_own_versions() {
        let fx = small();
        let a = fx.adapter();
        let tmp = tempfile::tempdir().unwrap();
        let t = fx.manifest().fault_by_number(2).unwrap().tests.clone();

        let faulty = tmp.path().join("b");
        a.checkout(&VersionRef::new("Demo-2b").unwrap(), &faulty).unwrap();
        let out = a.run_tests(&faulty, &t).unwrap();
        assert_eq!(out[0].status, TestStatus::Failed);

        let fixed = tmp.path().join("f");
        a.checkout(&VersionRef::new("Demo-2f").unwrap(), &fixed).unwrap();
        let out = a.run_tests(&fixed, &t).unwrap();
        assert_eq!(out[0].status, TestStatus::Passed);
    }

    #[test]
    fn expected_relations_follow_the_scenario() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2, 3, 5]); // gap at 4 stops the scan
        fx.fault(2);
        fx.fault(3);
        fx.fault(4);
        fx.fault(5);
        let fx = fx.build();
        let brute = fx.expected_relation_bruteforce();
        assert_eq!(brute.len(), 3);
        let scan = fx.expected_relation_scan();
        let id = |n| FaultId::new("Demo", n).unwrap();
        assert_eq!(scan.len(), 2);
        assert!(scan.contains(&id(1), &id(2)));
        assert!(scan.contains(&id(1), &id(3)));
        assert!(!scan.contains(&id(1), &id(5)));
    }

    #[test]
    fn excluded_predecessors_do_not_break_scan_expectations() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2, 4]);
        fx.fault(2);
        fx.fault(3).excluded(); // skipped by the scan, not a gap
        fx.fault(4);
        let fx = fx.build();
        let scan = fx.expected_relation_scan();
        assert_eq!(scan.len(), 2);
    }

    #[test]
    fn own_class_means_never_revealed() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).own_class().exists_in(&[2]);
        fx.fault(2);
        let fx = fx.build();
        assert!(fx.expected_relation_bruteforce().is_empty());
        // The class file genuinely does not exist in the older tree.
        let a = fx.adapter();
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        a.checkout(&VersionRef::new("Demo-2b").unwrap(), &wd).unwrap();
        assert!(!wd.join("src/test/DemoFault1Test.java").exists());
    }

    #[test]
    fn materialized_synthetic_layout_parses_back() {
        let fx = small();
        let tmp = tempfile::tempdir().unwrap();
        let path = fx.materialize_synthetic(tmp.path()).unwrap();
        let manifest = BenchmarkManifest::parse(&path).unwrap();
        assert_eq!(manifest.project(), "Demo");
        assert_eq!(manifest.faults().len(), 4);
        assert!(tmp.path().join("fixture/trees/Demo-1b/VERSION").is_file());
        assert!(tmp.path().join("fixture/script.toml").is_file());
    }

    #[test]
    fn shared_test_names_yield_one_method() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).test_named("testShared").exists_in(&[2]);
        fx.fault(2).test_named("testShared");
        let fx = fx.build();
        let a = fx.adapter();
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        a.checkout(&VersionRef::new("Demo-1b").unwrap(), &wd).unwrap();
        let src = fs::read_to_string(wd.join("src/test/DemoTest.java")).unwrap();
        assert_eq!(src.matches("void testShared(").count(), 1);
        // Overlap without independence: the pair is expected to fall.
        assert!(!fx.pair_expected(1, 2));
        let mut fx2 = FixtureBuilder::new("Demo");
        fx2.fault(1)
            .test_named("testShared")
            .exists_in(&[2])
            .independent_overlap_in(&[2]);
        fx2.fault(2).test_named("testShared");
        let fx2 = fx2.build();
        assert!(fx2.pair_expected(1, 2));
    }
}
