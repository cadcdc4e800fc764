//! Core domain types: fault identifiers, test references, version
//! references and per-fault benchmark records.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("fault id has an empty project name")]
    EmptyProject,
    #[error("fault number must be >= 1")]
    ZeroFaultNumber,
    #[error("cannot parse fault id `{0}` (expected <project>-<number>)")]
    BadFaultId(String),
    #[error("test reference `{0}` is invalid: {1}")]
    BadTestRef(String, String),
    #[error("version reference must be non-empty")]
    EmptyVersionRef,
}

/// Identifies one benchmark fault, rendered as `<project>-<number>`,
/// e.g. `Math-5`.
///
/// Numbers follow the benchmark's convention that a lower id refers to a
/// more recently fixed fault; the chronological position actually used by
/// the search is [`FaultRecord::rank`], which defaults to this number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaultId {
    project: String,
    number: u32,
}

impl FaultId {
    pub fn new(project: impl Into<String>, number: u32) -> Result<Self, ModelError> {
        let project = project.into();
        if project.is_empty() {
            return Err(ModelError::EmptyProject);
        }
        if number == 0 {
            return Err(ModelError::ZeroFaultNumber);
        }
        Ok(Self { project, number })
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    pub fn number(&self) -> u32 {
        self.number
    }
}

impl fmt::Display for FaultId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.project, self.number)
    }
}

impl FromStr for FaultId {
    type Err = ModelError;

    /// Parses `Math-5`. The number is everything after the last `-`, so
    /// project names may themselves contain dashes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (project, number) = s
            .rsplit_once('-')
            .ok_or_else(|| ModelError::BadFaultId(s.to_string()))?;
        let number: u32 = number
            .parse()
            .map_err(|_| ModelError::BadFaultId(s.to_string()))?;
        Self::new(project, number).map_err(|_| ModelError::BadFaultId(s.to_string()))
    }
}

/// Points at one test method: the test source file (relative path within
/// the version tree, forward slashes) and the method name.
///
/// Rendered as `class_path#method_name`, the same form the manifest and
/// the test report use.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TestRef {
    class_path: String,
    method_name: String,
}

impl TestRef {
    /// Builds a test reference, normalizing the class path: `./` segments
    /// are dropped and duplicate slashes collapsed. Absolute paths,
    /// backslashes and parent-directory segments are rejected.
    pub fn new(class_path: &str, method_name: &str) -> Result<Self, ModelError> {
        let raw = format!("{class_path}#{method_name}");
        let bad = |why: &str| ModelError::BadTestRef(raw.clone(), why.to_string());
        if method_name.is_empty() {
            return Err(bad("empty method name"));
        }
        if method_name.contains(['/', '#']) {
            return Err(bad("method name contains a path separator"));
        }
        if class_path.starts_with('/') {
            return Err(bad("class path must be relative"));
        }
        if class_path.contains('\\') {
            return Err(bad("class path must use forward slashes"));
        }
        if class_path.contains('#') {
            return Err(bad("class path contains `#`"));
        }
        let segments: Vec<&str> = class_path
            .split('/')
            .filter(|s| !s.is_empty() && *s != ".")
            .collect();
        if segments.is_empty() {
            return Err(bad("empty class path"));
        }
        if segments.contains(&"..") {
            return Err(bad("class path contains a parent-directory segment"));
        }
        Ok(Self {
            class_path: segments.join("/"),
            method_name: method_name.to_string(),
        })
    }

    pub fn class_path(&self) -> &str {
        &self.class_path
    }

    pub fn method_name(&self) -> &str {
        &self.method_name
    }
}

impl fmt::Display for TestRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.class_path, self.method_name)
    }
}

impl FromStr for TestRef {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, method) = s
            .split_once('#')
            .ok_or_else(|| ModelError::BadTestRef(s.to_string(), "missing `#`".to_string()))?;
        Self::new(path, method)
    }
}

/// Opaque locator for one subject version, resolved by the execution
/// adapter (a benchmark checkout token, a fixture tree key, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VersionRef(String);

impl VersionRef {
    pub fn new(locator: impl Into<String>) -> Result<Self, ModelError> {
        let locator = locator.into();
        if locator.is_empty() {
            return Err(ModelError::EmptyVersionRef);
        }
        Ok(Self(locator))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VersionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One benchmark fault: identity, chronological position, revision date,
/// fault-revealing tests and the two version locators (faulty and fixed).
///
/// `rank` orders versions chronologically (lower = more recently fixed)
/// and defaults to the fault number; manifests override it for the few
/// entries that were added out of chronological order. Excluded faults
/// stay in the manifest for bookkeeping but never participate in the
/// search, neither as a scanned fault nor as a predecessor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub id: FaultId,
    pub rank: u32,
    pub revision_date: NaiveDate,
    pub tests: Vec<TestRef>,
    pub faulty_ref: VersionRef,
    pub fixed_ref: VersionRef,
    pub excluded: bool,
}

impl FaultRecord {
    /// Tests shared with `other` by exact test-reference equality. Used by
    /// the overlap rule of the existence check.
    pub fn overlapping_tests(&self, other: &FaultRecord) -> Vec<TestRef> {
        self.tests
            .iter()
            .filter(|t| other.tests.contains(t))
            .cloned()
            .collect()
    }
}
