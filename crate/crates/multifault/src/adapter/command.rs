//! Adapter that drives a real benchmark installation through shell
//! command templates.
//!
//! Three templates are configured per manifest: checkout, compile, test.
//! Each is run through `sh -c` from the manifest's directory with a
//! scrubbed environment (`PATH` plus an explicit allowlist). The
//! placeholders `{version}`, `{workdir}` and `{tests}` expand to
//! shell-quoted values; `{tests}` becomes space-separated
//! `class#method` tokens.
//!
//! Phase contract:
//! - checkout: exit 0 after materializing the version into the workdir.
//! - compile: exit 0 on success, exit 10 for a compilation failure, any
//!   other exit for an environment problem.
//! - test: exit 0 whenever the run itself worked, whether or not tests
//!   failed, and report one tab-separated line per test on stdout:
//!   `status<TAB>class#method<TAB>error_type<TAB>message` with status
//!   one of `passed`, `failed`, `compile_error`, `timeout`, `missing`.
//!   Only the first record per test counts; unparsable lines are
//!   skipped. A nonzero exit or a report with no parsable record at all
//!   is an environment error, not a verdict.
//!
//! Every phase runs in its own process group and is killed as a group on
//! timeout, so a stuck build cannot leak grandchildren.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use super::signature::NormalizerChain;
use super::{
    ensure_workdir_usable, AdapterError, CompileStatus, ExecutionAdapter, TestOutcome, TestStatus,
};
use crate::model::{TestRef, VersionRef};

/// Exit code by which the compile template signals "the code does not
/// compile" as opposed to "the tooling broke".
pub const COMPILE_FAILED_EXIT: i32 = 10;

pub struct CommandAdapter {
    checkout_cmd: String,
    compile_cmd: String,
    test_cmd: String,
    timeout: Duration,
    env_allowlist: Vec<String>,
    base_dir: PathBuf,
    chain: NormalizerChain,
}

struct RunResult {
    code: Option<i32>,
    timed_out: bool,
    stdout: String,
    stderr: String,
}

impl RunResult {
    fn success(&self) -> bool {
        self.code == Some(0) && !self.timed_out
    }

    fn stderr_tail(&self) -> String {
        const KEEP: usize = 8;
        let lines: Vec<&str> = self.stderr.lines().collect();
        let start = lines.len().saturating_sub(KEEP);
        lines[start..].join("\n")
    }
}

fn shell_quote(value: &str) -> String {
    format!("'{}'", value.replace('\'', r"'\''"))
}

impl CommandAdapter {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        checkout_cmd: String,
        compile_cmd: String,
        test_cmd: String,
        timeout_seconds: u64,
        env_allowlist: Vec<String>,
        base_dir: PathBuf,
        chain: NormalizerChain,
    ) -> Self {
        Self {
            checkout_cmd,
            compile_cmd,
            test_cmd,
            timeout: Duration::from_secs(timeout_seconds),
            env_allowlist,
            base_dir,
            chain,
        }
    }

    fn expand(template: &str, subs: &[(&str, String)]) -> String {
        let mut out = template.to_string();
        for (key, value) in subs {
            out = out.replace(key, value);
        }
        out
    }

    fn run(&self, command_line: &str) -> Result<RunResult, AdapterError> {
        use std::os::unix::process::CommandExt;
        let mut child = Command::new("/bin/sh")
            .arg("-c")
            .arg(command_line)
            .current_dir(&self.base_dir)
            .env_clear()
            .envs(self.passed_env())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()
            .map_err(|e| AdapterError::RunnerFailed {
                detail: format!("cannot spawn `{command_line}`: {e}"),
            })?;

        let stdout = child.stdout.take().expect("stdout is piped");
        let stderr = child.stderr.take().expect("stderr is piped");
        let out_thread = std::thread::spawn(move || slurp(stdout));
        let err_thread = std::thread::spawn(move || slurp(stderr));

        let deadline = Instant::now() + self.timeout;
        let (code, timed_out) = self.wait_with_deadline(&mut child, deadline)?;
        let stdout = out_thread.join().unwrap_or_default();
        let stderr = err_thread.join().unwrap_or_default();
        log::debug!(
            "ran `{command_line}` -> code {code:?}, timed_out {timed_out}, {} stdout bytes",
            stdout.len()
        );
        Ok(RunResult {
            code,
            timed_out,
            stdout,
            stderr,
        })
    }

    fn wait_with_deadline(
        &self,
        child: &mut Child,
        deadline: Instant,
    ) -> Result<(Option<i32>, bool), AdapterError> {
        loop {
            if let Some(status) = child.try_wait()? {
                return Ok((status.code(), false));
            }
            if Instant::now() >= deadline {
                // Negative pid addresses the whole process group.
                unsafe {
                    libc::kill(-(child.id() as i32), libc::SIGKILL);
                }
                let _ = child.wait();
                return Ok((None, true));
            }
            std::thread::sleep(Duration::from_millis(10));
        }
    }

    fn passed_env(&self) -> Vec<(String, String)> {
        let mut env = Vec::new();
        if let Ok(path) = std::env::var("PATH") {
            env.push(("PATH".to_string(), path));
        }
        for key in &self.env_allowlist {
            if key == "PATH" {
                continue;
            }
            if let Ok(value) = std::env::var(key) {
                env.push((key.clone(), value));
            }
        }
        env
    }
}

fn slurp(mut reader: impl Read) -> String {
    let mut buf = Vec::new();
    let _ = reader.read_to_end(&mut buf);
    String::from_utf8_lossy(&buf).into_owned()
}

impl ExecutionAdapter for CommandAdapter {
    fn checkout(&self, version: &VersionRef, workdir: &Path) -> Result<(), AdapterError> {
        ensure_workdir_usable(workdir)?;
        std::fs::create_dir_all(workdir)?;
        let cmd = Self::expand(
            &self.checkout_cmd,
            &[
                ("{version}", shell_quote(version.as_str())),
                ("{workdir}", shell_quote(&workdir.to_string_lossy())),
            ],
        );
        let result = self.run(&cmd)?;
        if result.timed_out {
            return Err(AdapterError::CheckoutFailed {
                version: version.as_str().to_string(),
                detail: format!("timed out after {}s", self.timeout.as_secs()),
            });
        }
        if !result.success() {
            return Err(AdapterError::CheckoutFailed {
                version: version.as_str().to_string(),
                detail: format!("exit {:?}: {}", result.code, result.stderr_tail()),
            });
        }
        Ok(())
    }

    fn compile(&self, workdir: &Path) -> Result<CompileStatus, AdapterError> {
        let cmd = Self::expand(
            &self.compile_cmd,
            &[("{workdir}", shell_quote(&workdir.to_string_lossy()))],
        );
        let result = self.run(&cmd)?;
        if result.timed_out {
            return Ok(CompileStatus::Timeout);
        }
        match result.code {
            Some(0) => Ok(CompileStatus::Ok),
            Some(COMPILE_FAILED_EXIT) => Ok(CompileStatus::CompileError(result.stderr_tail())),
            other => Err(AdapterError::RunnerFailed {
                detail: format!("compile command exited with {other:?}: {}", result.stderr_tail()),
            }),
        }
    }

    fn run_tests(
        &self,
        workdir: &Path,
        tests: &[TestRef],
    ) -> Result<Vec<TestOutcome>, AdapterError> {
        if tests.is_empty() {
            return Ok(Vec::new());
        }
        let joined = tests
            .iter()
            .map(|t| shell_quote(&t.to_string()))
            .collect::<Vec<_>>()
            .join(" ");
        let cmd = Self::expand(
            &self.test_cmd,
            &[
                ("{workdir}", shell_quote(&workdir.to_string_lossy())),
                ("{tests}", joined),
            ],
        );
        let result = self.run(&cmd)?;
        if result.timed_out {
            return Ok(tests
                .iter()
                .map(|t| TestOutcome::with_status(t.clone(), TestStatus::Timeout))
                .collect());
        }
        if !result.success() {
            return Err(AdapterError::RunnerFailed {
                detail: format!(
                    "test command exited with {:?}: {}",
                    result.code,
                    result.stderr_tail()
                ),
            });
        }

        let mut records: HashMap<TestRef, TestOutcome> = HashMap::new();
        let mut parsed = 0usize;
        for line in result.stdout.lines() {
            let mut parts = line.splitn(4, '\t');
            let (Some(status), Some(test_str)) = (parts.next(), parts.next()) else {
                continue;
            };
            let Ok(test) = test_str.trim().parse::<TestRef>() else {
                continue;
            };
            let error_type = parts.next().unwrap_or("");
            let message = parts.next().unwrap_or("");
            let outcome = match status.trim() {
                "passed" => TestOutcome::passed(test.clone()),
                "failed" => {
                    TestOutcome::failed(test.clone(), self.chain.normalize(error_type, message))
                }
                "compile_error" => {
                    TestOutcome::with_status(test.clone(), TestStatus::CompileError)
                }
                "timeout" => TestOutcome::with_status(test.clone(), TestStatus::Timeout),
                "missing" => TestOutcome::with_status(test.clone(), TestStatus::Missing),
                _ => continue,
            };
            parsed += 1;
            records.entry(test).or_insert(outcome);
        }
        if parsed == 0 {
            return Err(AdapterError::RunnerFailed {
                detail: "test command produced no parsable report line".to_string(),
            });
        }
        Ok(tests
            .iter()
            .map(|t| {
                records
                    .remove(t)
                    .unwrap_or_else(|| TestOutcome::with_status(t.clone(), TestStatus::Missing))
            })
            .collect())
    }
}
