//! Execution contract for subject versions: checkout, compile, run tests.
//!
//! The search never touches benchmark tooling directly; everything flows
//! through [`ExecutionAdapter`]. Two implementations ship with the crate:
//! [`command::CommandAdapter`] shells out to configurable command
//! templates (the path to a real benchmark installation), and
//! [`synthetic::SyntheticAdapter`] replays scripted outcomes over fixture
//! trees, hermetically, for tests and demos.

pub mod command;
pub mod signature;
pub mod synthetic;

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TestRef, VersionRef};
use signature::{FailureSignature, NormalizerChain};

pub use command::CommandAdapter;
pub use synthetic::SyntheticAdapter;

fn default_timeout() -> u64 {
    300
}

/// Adapter selection and settings, as carried by the manifest's
/// `[adapter]` section.
///
/// Command templates may use the placeholders `{version}`, `{workdir}` and
/// `{tests}`; `{tests}` expands to space-separated `class#method` tokens.
/// The timeout applies to each phase individually.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterConfig {
    Synthetic {
        /// Directory holding `trees/<locator>/` and `script.toml`,
        /// relative to the manifest. Absent for purely in-memory use.
        #[serde(skip_serializing_if = "Option::is_none")]
        root: Option<PathBuf>,
        #[serde(default = "default_timeout")]
        timeout_seconds: u64,
    },
    Command {
        checkout_cmd: String,
        compile_cmd: String,
        test_cmd: String,
        #[serde(default = "default_timeout")]
        timeout_seconds: u64,
        /// Environment variables passed through to phase commands.
        /// `PATH` is always passed.
        #[serde(default)]
        env_allowlist: Vec<String>,
    },
}

impl AdapterConfig {
    pub fn timeout_seconds(&self) -> u64 {
        match self {
            AdapterConfig::Synthetic {
                timeout_seconds, ..
            }
            | AdapterConfig::Command {
                timeout_seconds, ..
            } => *timeout_seconds,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_seconds() == 0 {
            return Err("adapter timeout_seconds must be > 0".to_string());
        }
        if let AdapterConfig::Command {
            checkout_cmd,
            compile_cmd,
            test_cmd,
            ..
        } = self
        {
            for (name, tpl) in [
                ("checkout_cmd", checkout_cmd),
                ("compile_cmd", compile_cmd),
                ("test_cmd", test_cmd),
            ] {
                if tpl.trim().is_empty() {
                    return Err(format!("command adapter requires a non-empty {name}"));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of running one requested test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub test: TestRef,
    pub status: TestStatus,
    /// Present exactly when `status` is [`TestStatus::Failed`].
    pub signature: Option<FailureSignature>,
}

impl TestOutcome {
    pub fn passed(test: TestRef) -> Self {
        Self {
            test,
            status: TestStatus::Passed,
            signature: None,
        }
    }

    pub fn failed(test: TestRef, signature: FailureSignature) -> Self {
        Self {
            test,
            status: TestStatus::Failed,
            signature: Some(signature),
        }
    }

    pub fn with_status(test: TestRef, status: TestStatus) -> Self {
        debug_assert!(status != TestStatus::Failed);
        Self {
            test,
            status,
            signature: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestStatus {
    Passed,
    Failed,
    CompileError,
    Timeout,
    /// The test runner produced no record for the requested test.
    Missing,
}

/// Result of the compile phase. `CompileError` and `Timeout` are ordinary
/// results, not errors: the search maps both to "not revealed".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileStatus {
    Ok,
    CompileError(String),
    Timeout,
}

/// Environment-level adapter failures. These are distinct from negative
/// verdicts: an `AdapterError` aborts a search run rather than marking a
/// pair "not revealed".
#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("checkout of `{version}` failed: {detail}")]
    CheckoutFailed { version: String, detail: String },
    #[error("workdir `{0}` already exists and is not empty")]
    WorkdirNotEmpty(PathBuf),
    #[error("test runner failed: {detail}")]
    RunnerFailed { detail: String },
    #[error("workdir `{0}` was not produced by this adapter (missing version marker)")]
    UnmarkedWorkdir(PathBuf),
    #[error("adapter configuration invalid: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

/// Uniform contract for checking out, compiling and testing subject
/// versions.
///
/// Implementations must tolerate concurrent invocations as long as each
/// call targets a distinct workdir; none of the methods may keep global
/// mutable state.
pub trait ExecutionAdapter: Send + Sync {
    /// Materializes the version's full source tree in `workdir`, which
    /// must be empty or absent.
    fn checkout(&self, version: &VersionRef, workdir: &Path) -> Result<(), AdapterError>;

    /// Compiles a checked-out (possibly augmented) tree.
    fn compile(&self, workdir: &Path) -> Result<CompileStatus, AdapterError>;

    /// Runs the requested tests, returning one outcome per request, in
    /// request order. Tests absent from the runner's report come back as
    /// [`TestStatus::Missing`].
    fn run_tests(&self, workdir: &Path, tests: &[TestRef])
        -> Result<Vec<TestOutcome>, AdapterError>;
}

/// Builds the adapter described by `config`. Relative paths and command
/// working directories resolve against `base_dir` (the manifest's
/// directory).
pub fn build_adapter(
    config: &AdapterConfig,
    base_dir: &Path,
    chain: NormalizerChain,
) -> Result<Box<dyn ExecutionAdapter>, AdapterError> {
    config.validate().map_err(AdapterError::Config)?;
    match config {
        AdapterConfig::Synthetic { root, .. } => {
            let root = root.as_ref().ok_or_else(|| {
                AdapterError::Config(
                    "synthetic adapter needs a `root` directory when built from a manifest"
                        .to_string(),
                )
            })?;
            let root = if root.is_absolute() {
                root.clone()
            } else {
                base_dir.join(root)
            };
            Ok(Box::new(SyntheticAdapter::from_dir(&root, chain)?))
        }
        AdapterConfig::Command {
            checkout_cmd,
            compile_cmd,
            test_cmd,
            timeout_seconds,
            env_allowlist,
        } => Ok(Box::new(CommandAdapter::new(
            checkout_cmd.clone(),
            compile_cmd.clone(),
            test_cmd.clone(),
            *timeout_seconds,
            env_allowlist.clone(),
            base_dir.to_path_buf(),
            chain,
        ))),
    }
}

pub(crate) fn ensure_workdir_usable(workdir: &Path) -> Result<(), AdapterError> {
    match std::fs::read_dir(workdir) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                Err(AdapterError::WorkdirNotEmpty(workdir.to_path_buf()))
            } else {
                Ok(())
            }
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(e.into()),
    }
}
