//! Scripted in-process adapter for tests, demos and benchmarks of the
//! search itself.
//!
//! Versions are virtual file trees; test outcomes are looked up in a
//! script keyed by `(version, test)`. Unscripted tests pass, which makes
//! "fault N is invisible in version M" the default and keeps scripts
//! small. The adapter still performs real work where it matters for
//! fidelity: checkouts materialize actual trees on disk, compilation
//! lexes every Java source (so a botched transplant genuinely fails to
//! build), and test lookup consults the checked-out tree, not the
//! script, to decide whether a test exists.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::signature::NormalizerChain;
use super::{
    ensure_workdir_usable, AdapterError, CompileStatus, ExecutionAdapter, TestOutcome, TestStatus,
};
use crate::extract;
use crate::model::{TestRef, VersionRef};
use crate::transplant;

/// File written at checkout so later phases know which version a workdir
/// holds. Hidden so tree diffs against fixture sources stay clean.
pub const VERSION_MARKER: &str = ".SYNTHETIC_VERSION";

/// A virtual source tree: relative path to file content.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VirtualTree {
    pub files: BTreeMap<String, String>,
}

/// What the scripted runner reports for one test in one version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedOutcome {
    Passed,
    Failed { error_type: String, message: String },
    /// Compiling any tree that contains this transplanted test fails.
    CompileError { detail: String },
    CompileTimeout,
    RunTimeout,
}

#[derive(Debug, Clone, Default)]
struct OutcomeScript {
    entries: BTreeMap<(String, TestRef), ScriptedOutcome>,
    /// Versions whose compile fails regardless of transplants.
    broken: BTreeMap<String, String>,
}

pub struct SyntheticAdapter {
    trees: BTreeMap<String, VirtualTree>,
    script: OutcomeScript,
    chain: NormalizerChain,
}

#[derive(Debug, Clone, Default)]
pub struct SyntheticBuilder {
    trees: BTreeMap<String, VirtualTree>,
    script: OutcomeScript,
}

impl SyntheticBuilder {
    pub fn file(
        &mut self,
        version: &str,
        rel_path: impl Into<String>,
        content: impl Into<String>,
    ) -> &mut Self {
        self.trees
            .entry(version.to_string())
            .or_default()
            .files
            .insert(rel_path.into(), content.into());
        self
    }

    pub fn outcome(&mut self, version: &str, test: TestRef, out: ScriptedOutcome) -> &mut Self {
        self.script
            .entries
            .insert((version.to_string(), test), out);
        self
    }

    pub fn broken_version(&mut self, version: &str, detail: impl Into<String>) -> &mut Self {
        self.script
            .broken
            .insert(version.to_string(), detail.into());
        self
    }

    pub fn versions(&self) -> impl Iterator<Item = &str> {
        self.trees.keys().map(String::as_str)
    }

    pub fn tree(&self, version: &str) -> Option<&VirtualTree> {
        self.trees.get(version)
    }

    pub fn build(self, chain: NormalizerChain) -> SyntheticAdapter {
        SyntheticAdapter {
            trees: self.trees,
            script: self.script,
            chain,
        }
    }

    /// Renders the script part as a `script.toml` document.
    pub fn render_script(&self) -> String {
        let file = ScriptFile {
            entries: self
                .script
                .entries
                .iter()
                .map(|((version, test), out)| {
                    let (outcome, error_type, message, detail) = match out {
                        ScriptedOutcome::Passed => ("passed", None, None, None),
                        ScriptedOutcome::Failed {
                            error_type,
                            message,
                        } => (
                            "failed",
                            Some(error_type.clone()),
                            Some(message.clone()),
                            None,
                        ),
                        ScriptedOutcome::CompileError { detail } => {
                            ("compile_error", None, None, Some(detail.clone()))
                        }
                        ScriptedOutcome::CompileTimeout => ("compile_timeout", None, None, None),
                        ScriptedOutcome::RunTimeout => ("run_timeout", None, None, None),
                    };
                    ScriptEntry {
                        version: version.clone(),
                        test: test.to_string(),
                        outcome: outcome.to_string(),
                        error_type,
                        message,
                        detail,
                    }
                })
                .collect(),
            broken: self
                .script
                .broken
                .iter()
                .map(|(version, detail)| BrokenVersion {
                    version: version.clone(),
                    detail: detail.clone(),
                })
                .collect(),
        };
        toml::to_string_pretty(&file).expect("script serialization cannot fail")
    }
}

/// On-disk form of the outcome script (`script.toml`).
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default)]
    pub entries: Vec<ScriptEntry>,
    #[serde(default)]
    pub broken: Vec<BrokenVersion>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub version: String,
    pub test: String,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BrokenVersion {
    pub version: String,
    pub detail: String,
}

impl SyntheticAdapter {
    pub fn builder() -> SyntheticBuilder {
        SyntheticBuilder::default()
    }

    /// Loads trees from `<root>/trees/<version>/**` and the script from
    /// `<root>/script.toml` (optional; missing means everything passes).
    pub fn from_dir(root: &Path, chain: NormalizerChain) -> Result<Self, AdapterError> {
        let mut builder = Self::builder();
        let trees_dir = root.join("trees");
        let entries = fs::read_dir(&trees_dir).map_err(|e| {
            AdapterError::Config(format!(
                "synthetic root `{}` has no readable trees/ directory: {e}",
                root.display()
            ))
        })?;
        for entry in entries {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let version = entry.file_name().to_string_lossy().into_owned();
            for file in walkdir::WalkDir::new(entry.path()).sort_by_file_name() {
                let file = file.map_err(|e| AdapterError::RunnerFailed {
                    detail: format!("walking fixture trees: {e}"),
                })?;
                if !file.file_type().is_file() {
                    continue;
                }
                let rel = file
                    .path()
                    .strip_prefix(entry.path())
                    .expect("walked path is under the version dir")
                    .to_string_lossy()
                    .into_owned();
                let content = fs::read_to_string(file.path())?;
                builder.file(&version, rel, content);
            }
        }

        let script_path = root.join("script.toml");
        match fs::read_to_string(&script_path) {
            Ok(text) => {
                let file: ScriptFile = toml::from_str(&text).map_err(|e| {
                    AdapterError::Config(format!("script.toml is invalid: {}", e.message()))
                })?;
                for raw in file.entries {
                    let test: TestRef = raw.test.parse().map_err(|e| {
                        AdapterError::Config(format!("script.toml test `{}`: {e}", raw.test))
                    })?;
                    let outcome = match raw.outcome.as_str() {
                        "passed" => ScriptedOutcome::Passed,
                        "failed" => ScriptedOutcome::Failed {
                            error_type: raw.error_type.unwrap_or_default(),
                            message: raw.message.unwrap_or_default(),
                        },
                        "compile_error" => ScriptedOutcome::CompileError {
                            detail: raw.detail.unwrap_or_default(),
                        },
                        "compile_timeout" => ScriptedOutcome::CompileTimeout,
                        "run_timeout" => ScriptedOutcome::RunTimeout,
                        other => {
                            return Err(AdapterError::Config(format!(
                                "script.toml outcome `{other}` is not recognized"
                            )))
                        }
                    };
                    builder.outcome(&raw.version, test, outcome);
                }
                for b in file.broken {
                    builder.broken_version(&b.version, b.detail);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(builder.build(chain))
    }

    fn workdir_version(&self, workdir: &Path) -> Result<String, AdapterError> {
        match fs::read_to_string(workdir.join(VERSION_MARKER)) {
            Ok(s) => Ok(s.trim().to_string()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(AdapterError::UnmarkedWorkdir(workdir.to_path_buf()))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn scripted(&self, version: &str, test: &TestRef) -> Option<&ScriptedOutcome> {
        self.script.entries.get(&(version.to_string(), test.clone()))
    }
}

impl ExecutionAdapter for SyntheticAdapter {
    fn checkout(&self, version: &VersionRef, workdir: &Path) -> Result<(), AdapterError> {
        let tree = self
            .trees
            .get(version.as_str())
            .ok_or_else(|| AdapterError::CheckoutFailed {
                version: version.as_str().to_string(),
                detail: "version is not in the fixture".to_string(),
            })?;
        ensure_workdir_usable(workdir)?;
        fs::create_dir_all(workdir)?;
        for (rel, content) in &tree.files {
            let path = workdir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, content)?;
        }
        fs::write(workdir.join(VERSION_MARKER), format!("{version}\n"))?;
        Ok(())
    }

    fn compile(&self, workdir: &Path) -> Result<CompileStatus, AdapterError> {
        let version = self.workdir_version(workdir)?;
        if let Some(detail) = self.script.broken.get(&version) {
            return Ok(CompileStatus::CompileError(detail.clone()));
        }
        // Scripted build outcomes for transplanted tests.
        let transplanted: BTreeSet<TestRef> = transplant::read_marker(workdir)?
            .into_iter()
            .collect();
        for test in &transplanted {
            match self.scripted(&version, test) {
                Some(ScriptedOutcome::CompileError { detail }) => {
                    return Ok(CompileStatus::CompileError(detail.clone()))
                }
                Some(ScriptedOutcome::CompileTimeout) => return Ok(CompileStatus::Timeout),
                _ => {}
            }
        }
        // A light stand-in for javac: every Java source must survive the
        // strict lexical scan.
        for entry in walkdir::WalkDir::new(workdir).sort_by_file_name() {
            let entry = entry.map_err(|e| AdapterError::RunnerFailed {
                detail: format!("walking workdir: {e}"),
            })?;
            if !entry.file_type().is_file()
                || entry.path().extension().is_none_or(|e| e != "java")
            {
                continue;
            }
            let src = fs::read_to_string(entry.path())?;
            if let Err(e) = extract::list_methods(&src) {
                return Ok(CompileStatus::CompileError(format!(
                    "{}: {e}",
                    entry.path().display()
                )));
            }
        }
        Ok(CompileStatus::Ok)
    }

    fn run_tests(
        &self,
        workdir: &Path,
        tests: &[TestRef],
    ) -> Result<Vec<TestOutcome>, AdapterError> {
        let version = self.workdir_version(workdir)?;
        let mut outcomes = Vec::with_capacity(tests.len());
        for test in tests {
            let class_file = workdir.join(test.class_path());
            let present = match fs::read_to_string(&class_file) {
                Ok(src) => extract::has_method(&src, test.method_name()).unwrap_or(false),
                Err(e) if e.kind() == io::ErrorKind::NotFound => false,
                Err(e) => return Err(e.into()),
            };
            if !present {
                outcomes.push(TestOutcome::with_status(test.clone(), TestStatus::Missing));
                continue;
            }
            let outcome = match self.scripted(&version, test) {
                Some(ScriptedOutcome::Failed {
                    error_type,
                    message,
                }) => TestOutcome::failed(test.clone(), self.chain.normalize(error_type, message)),
                Some(ScriptedOutcome::CompileError { .. }) => {
                    TestOutcome::with_status(test.clone(), TestStatus::CompileError)
                }
                Some(ScriptedOutcome::CompileTimeout) | Some(ScriptedOutcome::RunTimeout) => {
                    TestOutcome::with_status(test.clone(), TestStatus::Timeout)
                }
                Some(ScriptedOutcome::Passed) | None => TestOutcome::passed(test.clone()),
            };
            outcomes.push(outcome);
        }
        Ok(outcomes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::signature::FailureSignature;

    const CLASS: &str = "import org.junit.Test;\npublic class VecTest {\n  @Test public void testA() { }\n}\n";

    fn test_a() -> TestRef {
        TestRef::new("src/test/VecTest.java", "testA").unwrap()
    }

    fn adapter() -> SyntheticAdapter {
        let mut b = SyntheticAdapter::builder();
        b.file("v1", "src/test/VecTest.java", CLASS);
        b.file("v1", "src/main/Vec.java", "public class Vec { }");
        b.outcome(
            "v1",
            test_a(),
            ScriptedOutcome::Failed {
                error_type: "AssertionFailedError".to_string(),
                message: "expected:  <1>   but was: <2>".to_string(),
            },
        );
        b.build(NormalizerChain::default_chain())
    }

    #[test]
    fn checkout_materializes_and_marks() {
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        let a = adapter();
        let v = VersionRef::new("v1").unwrap();
        a.checkout(&v, &wd).unwrap();
        assert!(wd.join("src/test/VecTest.java").is_file());
        assert_eq!(
            fs::read_to_string(wd.join(VERSION_MARKER)).unwrap().trim(),
            "v1"
        );
        // A second checkout into the same dir is refused.
        let err = a.checkout(&v, &wd).unwrap_err();
        assert!(matches!(err, AdapterError::WorkdirNotEmpty(_)));
    }

    #[test]
    fn unknown_version_fails_checkout() {
        let tmp = tempfile::tempdir().unwrap();
        let a = adapter();
        let err = a
            .checkout(&VersionRef::new("nope").unwrap(), &tmp.path().join("w"))
            .unwrap_err();
        assert!(matches!(err, AdapterError::CheckoutFailed { .. }));
    }

    #[test]
    fn scripted_failure_is_normalized() {
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        let a = adapter();
        a.checkout(&VersionRef::new("v1").unwrap(), &wd).unwrap();
        assert_eq!(a.compile(&wd).unwrap(), CompileStatus::Ok);
        let out = a.run_tests(&wd, &[test_a()]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].status, TestStatus::Failed);
        assert_eq!(
            out[0].signature,
            Some(FailureSignature {
                error_type: "AssertionFailedError".to_string(),
                message: "expected: <1> but was: <2>".to_string(),
            })
        );
    }

    #[test]
    fn absent_test_is_missing_not_passed() {
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        let a = adapter();
        a.checkout(&VersionRef::new("v1").unwrap(), &wd).unwrap();
        let ghost = TestRef::new("src/test/VecTest.java", "testGhost").unwrap();
        let gone = TestRef::new("src/test/GoneTest.java", "testX").unwrap();
        let out = a.run_tests(&wd, &[ghost, gone]).unwrap();
        assert!(out.iter().all(|o| o.status == TestStatus::Missing));
    }

    #[test]
    fn compile_rejects_broken_java() {
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        let a = adapter();
        a.checkout(&VersionRef::new("v1").unwrap(), &wd).unwrap();
        fs::write(wd.join("src/main/Vec.java"), "public class Vec { {").unwrap();
        let status = a.compile(&wd).unwrap();
        assert!(matches!(status, CompileStatus::CompileError(_)));
    }

    #[test]
    fn phases_demand_a_marked_workdir() {
        let tmp = tempfile::tempdir().unwrap();
        let a = adapter();
        let err = a.compile(tmp.path()).unwrap_err();
        assert!(matches!(err, AdapterError::UnmarkedWorkdir(_)));
    }

    #[test]
    fn broken_version_never_compiles() {
        let tmp = tempfile::tempdir().unwrap();
        let wd = tmp.path().join("w");
        let mut b = SyntheticAdapter::builder();
        b.file("v9", "src/main/A.java", "class A { }");
        b.broken_version("v9", "dependency archive 404s");
        let a = b.build(NormalizerChain::default_chain());
        a.checkout(&VersionRef::new("v9").unwrap(), &wd).unwrap();
        assert_eq!(
            a.compile(&wd).unwrap(),
            CompileStatus::CompileError("dependency archive 404s".to_string())
        );
    }

    #[test]
    fn roundtrips_through_a_fixture_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("fixture");
        let src = adapter();
        // Materialize by hand: trees plus rendered script.
        for (version, tree) in &src.trees {
            for (rel, content) in &tree.files {
                let p = root.join("trees").join(version).join(rel);
                fs::create_dir_all(p.parent().unwrap()).unwrap();
                fs::write(p, content).unwrap();
            }
        }
        let mut b = SyntheticAdapter::builder();
        b.outcome(
            "v1",
            test_a(),
            ScriptedOutcome::Failed {
                error_type: "AssertionFailedError".to_string(),
                message: "expected:  <1>   but was: <2>".to_string(),
            },
        );
        fs::write(root.join("script.toml"), b.render_script()).unwrap();

        let loaded = SyntheticAdapter::from_dir(&root, NormalizerChain::default_chain()).unwrap();
        let wd = tmp.path().join("w");
        loaded
            .checkout(&VersionRef::new("v1").unwrap(), &wd)
            .unwrap();
        let out = loaded.run_tests(&wd, &[test_a()]).unwrap();
        assert_eq!(out[0].status, TestStatus::Failed);
        assert_eq!(
            out[0].signature.as_ref().unwrap().message,
            "expected: <1> but was: <2>"
        );
    }
}
