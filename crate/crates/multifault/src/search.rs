//! Existence search: which older faulty versions reveal which faults.
//!
//! For a fault N with revealing tests T_N, the searcher establishes a
//! baseline (T_N fails on N's faulty version and passes on its fixed
//! one), then walks N's predecessors from nearest to oldest. For each
//! candidate B_M it transplants T_N into a copy of B_M and decides
//! whether N is revealed there:
//!
//! 1. the target must carry the test class at all,
//! 2. the augmented tree must compile and every transplanted test must
//!    fail,
//! 3. each failure must carry the same normalized signature as on N's
//!    own faulty version,
//! 4. tests shared with M's own revealing set must keep failing on M's
//!    fixed version, otherwise the failure belongs to M and cannot be
//!    credited to N.
//!
//! The default scan stops at the first non-revealing predecessor, on
//! the argument that a fault absent from one revision is absent from
//! everything older. Oracle mode keeps going and checks every
//! predecessor, which is what the early stop is validated against.
//!
//! Baseline violations are not searchable conditions but broken input
//! data, so they abort the fault with [`SearchError::ManifestQuality`]
//! rather than producing a verdict.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::adapter::signature::{signatures_match, FailureSignature};
use crate::adapter::{CompileStatus, ExecutionAdapter, TestOutcome, TestStatus};
use crate::manifest::BenchmarkManifest;
use crate::model::{FaultId, FaultRecord, TestRef};
use crate::relation::ExistenceRelation;
use crate::transplant::{self, PlanOutcome};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    /// The benchmark data contradicts itself: a baseline does not hold
    /// or a fixed version is unusable. Scanning cannot continue for
    /// this fault.
    #[error("manifest quality problem for {fault}: {detail}")]
    ManifestQuality { fault: FaultId, detail: String },
    #[error("unknown fault: {0}")]
    UnknownFault(String),
    /// Pairwise checks require the candidate version to be older.
    #[error("{older} is not older than {newer}")]
    PairOrder { newer: FaultId, older: FaultId },
    #[error(transparent)]
    Adapter(#[from] crate::adapter::AdapterError),
    #[error(transparent)]
    Transplant(#[from] crate::transplant::TransplantError),
    #[error("scratch directory: {0}")]
    Scratch(#[from] io::Error),
}

/// Why a single existence check came out the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerdictReason {
    /// Revealed: class present, everything failed with matching
    /// signatures, overlapping tests independent.
    AllConditionsMet,
    /// The target version does not carry the test class.
    ClassMissing,
    /// The augmented version does not build.
    CompileError,
    /// At least one transplanted test passed.
    TestPassed,
    /// Failures with a different error than the baseline.
    SignatureMismatch,
    /// A test shared with the target fault's own revealing set stopped
    /// failing on the target's fixed version; the failure is the
    /// target's, not the searched fault's.
    OverlapNotIndependent,
    /// Compilation or execution exceeded the time budget.
    Timeout,
    /// The runner could not locate a transplanted test.
    Missing,
}

impl VerdictReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AllConditionsMet => "AllConditionsMet",
            Self::ClassMissing => "ClassMissing",
            Self::CompileError => "CompileError",
            Self::TestPassed => "TestPassed",
            Self::SignatureMismatch => "SignatureMismatch",
            Self::OverlapNotIndependent => "OverlapNotIndependent",
            Self::Timeout => "Timeout",
            Self::Missing => "Missing",
        }
    }
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one existence check of fault `fault` against the faulty
/// version of `version`.
#[derive(Debug, Clone)]
pub struct ExistenceVerdict {
    pub fault: FaultId,
    pub version: FaultId,
    pub revealed: bool,
    pub reason: VerdictReason,
    /// Per-test outcomes from the augmented version (synthesized for
    /// compile-stage verdicts).
    pub evidence: Vec<TestOutcome>,
    /// Outcomes of shared tests on the target's fixed version, when the
    /// overlap rule had to be consulted.
    pub overlap: Vec<TestOutcome>,
    /// Tests that already had a same-named method in the target and
    /// therefore ran natively instead of being transplanted.
    pub shadowed: Vec<TestRef>,
    /// Compiler diagnostics for compile-stage verdicts.
    pub detail: Option<String>,
}

/// Everything a completed search run produced: the scan order, every
/// consultation, and the resulting relation.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    project: String,
    scanned: Vec<FaultId>,
    verdicts: Vec<ExistenceVerdict>,
    relation: ExistenceRelation,
}

impl SearchTrace {
    fn empty(project: &str) -> Self {
        Self {
            project: project.to_string(),
            scanned: Vec::new(),
            verdicts: Vec::new(),
            relation: ExistenceRelation::new(),
        }
    }

    fn absorb(&mut self, fault: FaultId, verdicts: Vec<ExistenceVerdict>) {
        for v in &verdicts {
            if v.revealed {
                self.relation.insert(v.fault.clone(), v.version.clone());
            }
        }
        self.scanned.push(fault);
        self.verdicts.extend(verdicts);
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    /// Faults whose scan ran to completion, newest first.
    pub fn scanned(&self) -> &[FaultId] {
        &self.scanned
    }

    pub fn verdicts(&self) -> &[ExistenceVerdict] {
        &self.verdicts
    }

    pub fn relation(&self) -> &ExistenceRelation {
        &self.relation
    }

    pub fn into_relation(self) -> ExistenceRelation {
        self.relation
    }

    /// One line per consultation, in scan order:
    /// `fault,version,reason,revealed`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&format!(
                "{},{},{},{}\n",
                v.fault, v.version, v.reason, v.revealed
            ));
        }
        out
    }

    /// Stable `key=value` lines summarizing the run, including one
    /// `reason.<name>` count per verdict reason that occurred.
    pub fn summary_text(&self) -> String {
        let mut out = format!(
            "project={}\nscanned={}\nconsultations={}\nrevealed={}\n",
            self.project,
            self.scanned.len(),
            self.verdicts.len(),
            self.relation.len()
        );
        let mut counts: BTreeMap<VerdictReason, usize> = BTreeMap::new();
        for v in &self.verdicts {
            *counts.entry(v.reason).or_default() += 1;
        }
        for (reason, count) in counts {
            out.push_str(&format!("reason.{reason}={count}\n"));
        }
        out
    }
}

/// A run that failed partway: everything completed before the failure,
/// plus its cause.
#[derive(Debug)]
pub struct SearchAbort {
    pub partial: SearchTrace,
    pub cause: SearchError,
}

impl fmt::Display for SearchAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "search aborted after {} fault(s): {}",
            self.partial.scanned().len(),
            self.cause
        )
    }
}

impl std::error::Error for SearchAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.cause)
    }
}

/// Baseline established on the searched fault's own versions. The
/// checked-out faulty tree doubles as the transplant donor.
struct Baseline {
    donor_root: PathBuf,
    signatures: BTreeMap<TestRef, FailureSignature>,
}

enum Scratch {
    Temp(tempfile::TempDir),
    Fixed(PathBuf),
}

impl Scratch {
    fn path(&self) -> &Path {
        match self {
            Self::Temp(t) => t.path(),
            Self::Fixed(p) => p,
        }
    }
}

pub struct Searcher<'a> {
    manifest: &'a BenchmarkManifest,
    adapter: &'a dyn ExecutionAdapter,
    jobs: usize,
    scratch_root: Option<PathBuf>,
    keep_scratch: bool,
    oracle: bool,
}

impl<'a> Searcher<'a> {
    pub fn new(manifest: &'a BenchmarkManifest, adapter: &'a dyn ExecutionAdapter) -> Self {
        Self {
            manifest,
            adapter,
            jobs: 1,
            scratch_root: None,
            keep_scratch: false,
            oracle: false,
        }
    }

    /// Number of faults scanned concurrently. Defaults to 1, which also
    /// makes abort behavior deterministic.
    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    /// Work under this directory instead of a temporary one.
    pub fn scratch_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.scratch_root = Some(root.into());
        self
    }

    /// Leave checkouts and augmented trees behind for inspection.
    pub fn keep_scratch(mut self, keep: bool) -> Self {
        self.keep_scratch = keep;
        self
    }

    /// Check every predecessor instead of stopping at the first
    /// non-revealing one.
    pub fn oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    fn scratch(&self) -> Result<Scratch, SearchError> {
        match &self.scratch_root {
            Some(root) => {
                fs::create_dir_all(root)?;
                Ok(Scratch::Fixed(root.clone()))
            }
            None if self.keep_scratch => {
                let path = tempfile::tempdir()?.keep();
                log::info!("keeping scratch at {}", path.display());
                Ok(Scratch::Fixed(path))
            }
            None => Ok(Scratch::Temp(tempfile::tempdir()?)),
        }
    }

    fn discard(&self, dir: &Path) {
        if !self.keep_scratch {
            let _ = fs::remove_dir_all(dir);
        }
    }

    /// Scans every non-excluded fault and merges the results in rank
    /// order, newest fault first. On failure, returns whatever
    /// completed together with the first error in rank order.
    pub fn run(&self) -> Result<SearchTrace, Box<SearchAbort>> {
        let faults: Vec<&FaultRecord> = self.manifest.non_excluded().collect();
        let scratch = match self.scratch() {
            Ok(s) => s,
            Err(e) => {
                return Err(Box::new(SearchAbort {
                    partial: SearchTrace::empty(self.manifest.project()),
                    cause: e,
                }))
            }
        };

        type Slot = Mutex<Option<Result<Vec<ExistenceVerdict>, SearchError>>>;
        let results: Vec<Slot> = faults.iter().map(|_| Mutex::new(None)).collect();
        if self.jobs <= 1 || faults.len() <= 1 {
            for (i, fault) in faults.iter().enumerate() {
                let r = self.scan_records(fault, scratch.path());
                let failed = r.is_err();
                *results[i].lock().expect("no panics hold this lock") = Some(r);
                if failed {
                    break;
                }
            }
        } else {
            let queue: Mutex<VecDeque<usize>> = Mutex::new((0..faults.len()).collect());
            let stop = AtomicBool::new(false);
            thread::scope(|s| {
                for _ in 0..self.jobs.min(faults.len()) {
                    s.spawn(|| loop {
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                        let next = queue.lock().expect("no panics hold this lock").pop_front();
                        let Some(i) = next else { break };
                        let r = self.scan_records(faults[i], scratch.path());
                        if r.is_err() {
                            stop.store(true, Ordering::Relaxed);
                        }
                        *results[i].lock().expect("no panics hold this lock") = Some(r);
                    });
                }
            });
        }

        let mut trace = SearchTrace::empty(self.manifest.project());
        let mut cause = None;
        for (fault, slot) in faults.iter().zip(results) {
            match slot.into_inner().expect("workers have exited") {
                Some(Ok(verdicts)) => trace.absorb(fault.id.clone(), verdicts),
                Some(Err(e)) if cause.is_none() => cause = Some(e),
                Some(Err(_)) | None => {}
            }
        }
        match cause {
            None => Ok(trace),
            Some(cause) => Err(Box::new(SearchAbort {
                partial: trace,
                cause,
            })),
        }
    }

    /// Scans one fault's predecessors. Stops at the first non-revealing
    /// version unless oracle mode is on.
    pub fn scan_fault(&self, fault: &FaultId) -> Result<Vec<ExistenceVerdict>, SearchError> {
        let record = self
            .manifest
            .fault(fault)
            .ok_or_else(|| SearchError::UnknownFault(fault.to_string()))?;
        let scratch = self.scratch()?;
        self.scan_records(record, scratch.path())
    }

    /// Checks a single pair without scanning: is `fault` revealed in
    /// the faulty version of `older`?
    pub fn check_pair(
        &self,
        fault: &FaultId,
        older: &FaultId,
    ) -> Result<ExistenceVerdict, SearchError> {
        let n = self
            .manifest
            .fault(fault)
            .ok_or_else(|| SearchError::UnknownFault(fault.to_string()))?;
        let m = self
            .manifest
            .fault(older)
            .ok_or_else(|| SearchError::UnknownFault(older.to_string()))?;
        if m.rank <= n.rank {
            return Err(SearchError::PairOrder {
                newer: n.id.clone(),
                older: m.id.clone(),
            });
        }
        let scratch = self.scratch()?;
        let prep = scratch.path().join(format!("prep-{}", n.id.number()));
        let baseline = self.prepare_fault(n, &prep)?;
        let pair_dir = scratch
            .path()
            .join(format!("pair-{}-{}", n.id.number(), m.id.number()));
        let verdict = self.check_existence(n, &baseline, m, &pair_dir);
        self.discard(&pair_dir);
        self.discard(&prep);
        verdict
    }

    fn scan_records(
        &self,
        n: &FaultRecord,
        scratch: &Path,
    ) -> Result<Vec<ExistenceVerdict>, SearchError> {
        let prep = scratch.join(format!("prep-{}", n.id.number()));
        let baseline = self.prepare_fault(n, &prep)?;
        let mut verdicts = Vec::new();
        for m in self.manifest.predecessors(n) {
            let pair_dir = scratch.join(format!("pair-{}-{}", n.id.number(), m.id.number()));
            let verdict = self.check_existence(n, &baseline, m, &pair_dir);
            self.discard(&pair_dir);
            let verdict = verdict?;
            let stop = !verdict.revealed && !self.oracle;
            verdicts.push(verdict);
            if stop {
                break;
            }
        }
        self.discard(&prep);
        Ok(verdicts)
    }

    /// Establishes that the manifest's claims about `n` hold: tests
    /// fail on the faulty version and pass on the fixed one. Leaves the
    /// faulty checkout in place as the transplant donor.
    fn prepare_fault(&self, n: &FaultRecord, prep: &Path) -> Result<Baseline, SearchError> {
        let quality = |detail: String| SearchError::ManifestQuality {
            fault: n.id.clone(),
            detail,
        };

        let donor_root = prep.join("faulty");
        self.adapter.checkout(&n.faulty_ref, &donor_root)?;
        match self.adapter.compile(&donor_root)? {
            CompileStatus::Ok => {}
            CompileStatus::CompileError(d) => {
                return Err(quality(format!("faulty version does not compile: {d}")))
            }
            CompileStatus::Timeout => {
                return Err(quality("faulty version compile timed out".to_string()))
            }
        }
        let mut signatures = BTreeMap::new();
        for outcome in self.adapter.run_tests(&donor_root, &n.tests)? {
            match (outcome.status, outcome.signature) {
                (TestStatus::Failed, Some(sig)) => {
                    signatures.insert(outcome.test, sig);
                }
                (status, _) => {
                    return Err(quality(format!(
                        "revealing test {} is {status:?} on the faulty version, expected a failure",
                        outcome.test
                    )))
                }
            }
        }
        for t in &n.tests {
            if !signatures.contains_key(t) {
                return Err(quality(format!("no outcome reported for revealing test {t}")));
            }
        }

        let fixed_root = prep.join("fixed");
        self.adapter.checkout(&n.fixed_ref, &fixed_root)?;
        match self.adapter.compile(&fixed_root)? {
            CompileStatus::Ok => {}
            CompileStatus::CompileError(d) => {
                return Err(quality(format!("fixed version does not compile: {d}")))
            }
            CompileStatus::Timeout => {
                return Err(quality("fixed version compile timed out".to_string()))
            }
        }
        for outcome in self.adapter.run_tests(&fixed_root, &n.tests)? {
            if outcome.status != TestStatus::Passed {
                return Err(quality(format!(
                    "revealing test {} is {:?} on the fixed version, expected a pass",
                    outcome.test, outcome.status
                )));
            }
        }
        self.discard(&fixed_root);

        Ok(Baseline {
            donor_root,
            signatures,
        })
    }

    /// One existence check of `n` against `m`'s faulty version, using
    /// `pair_dir` for the checkout and the augmented tree.
    fn check_existence(
        &self,
        n: &FaultRecord,
        baseline: &Baseline,
        m: &FaultRecord,
        pair_dir: &Path,
    ) -> Result<ExistenceVerdict, SearchError> {
        let verdict = |revealed, reason, evidence, overlap, shadowed, detail| ExistenceVerdict {
            fault: n.id.clone(),
            version: m.id.clone(),
            revealed,
            reason,
            evidence,
            overlap,
            shadowed,
            detail,
        };

        let target_root = pair_dir.join("target");
        self.adapter.checkout(&m.faulty_ref, &target_root)?;

        let plan = transplant::plan(
            &n.faulty_ref,
            &baseline.donor_root,
            &m.faulty_ref,
            &target_root,
            &n.tests,
        )?;
        let augmented_root = pair_dir.join("augmented");
        let shadowed = match plan {
            PlanOutcome::ClassMissing { missing } => {
                let evidence = missing
                    .iter()
                    .map(|t| TestOutcome::with_status(t.clone(), TestStatus::Missing))
                    .collect();
                return Ok(verdict(
                    false,
                    VerdictReason::ClassMissing,
                    evidence,
                    Vec::new(),
                    Vec::new(),
                    None,
                ));
            }
            PlanOutcome::Planned(plan) => {
                transplant::apply(&plan, &target_root, &augmented_root)?;
                Vec::new()
            }
            PlanOutcome::DuplicateMethod {
                duplicates,
                remainder,
            } => {
                // Same-named methods already exist in the target; they
                // run natively. Whatever is left is transplanted.
                match remainder {
                    Some(plan) => {
                        transplant::apply(&plan, &target_root, &augmented_root)?;
                    }
                    None => {
                        transplant::copy_tree(&target_root, &augmented_root)?;
                    }
                }
                duplicates
            }
        };

        match self.adapter.compile(&augmented_root)? {
            CompileStatus::Ok => {}
            CompileStatus::CompileError(detail) => {
                let evidence = n
                    .tests
                    .iter()
                    .map(|t| TestOutcome::with_status(t.clone(), TestStatus::CompileError))
                    .collect();
                return Ok(verdict(
                    false,
                    VerdictReason::CompileError,
                    evidence,
                    Vec::new(),
                    shadowed,
                    Some(detail),
                ));
            }
            CompileStatus::Timeout => {
                let evidence = n
                    .tests
                    .iter()
                    .map(|t| TestOutcome::with_status(t.clone(), TestStatus::Timeout))
                    .collect();
                return Ok(verdict(
                    false,
                    VerdictReason::Timeout,
                    evidence,
                    Vec::new(),
                    shadowed,
                    Some("compile timed out".to_string()),
                ));
            }
        }

        let evidence = self.adapter.run_tests(&augmented_root, &n.tests)?;
        if let Some(reason) = classify(&evidence, &baseline.signatures) {
            return Ok(verdict(false, reason, evidence, Vec::new(), shadowed, None));
        }

        // Overlap rule: tests revealing both N and M prove nothing
        // about N unless they also fail on M's fixed version.
        let shared = n.overlapping_tests(m);
        let mut overlap = Vec::new();
        if !shared.is_empty() {
            let fixed_root = pair_dir.join("fixed");
            self.adapter.checkout(&m.fixed_ref, &fixed_root)?;
            let quality = |detail: String| SearchError::ManifestQuality {
                fault: m.id.clone(),
                detail,
            };
            match self.adapter.compile(&fixed_root)? {
                CompileStatus::Ok => {}
                CompileStatus::CompileError(d) => {
                    return Err(quality(format!("fixed version does not compile: {d}")))
                }
                CompileStatus::Timeout => {
                    return Err(quality("fixed version compile timed out".to_string()))
                }
            }
            overlap = self.adapter.run_tests(&fixed_root, &shared)?;
            let independent = !overlap.is_empty()
                && overlap.iter().all(|o| {
                    o.status == TestStatus::Failed
                        && matches!(
                            (&o.signature, baseline.signatures.get(&o.test)),
                            (Some(got), Some(want)) if signatures_match(got, want)
                        )
                });
            if !independent {
                return Ok(verdict(
                    false,
                    VerdictReason::OverlapNotIndependent,
                    evidence,
                    overlap,
                    shadowed,
                    None,
                ));
            }
        }

        Ok(verdict(
            true,
            VerdictReason::AllConditionsMet,
            evidence,
            overlap,
            shadowed,
            None,
        ))
    }
}

/// Decides the failure reason from run outcomes, or `None` when every
/// test failed with its baseline signature. Severity order: a timeout
/// or missing test means the run told us nothing, a compile problem
/// beats a pass, and a pass beats a signature mismatch.
fn classify(
    outcomes: &[TestOutcome],
    baseline: &BTreeMap<TestRef, FailureSignature>,
) -> Option<VerdictReason> {
    let any = |status: TestStatus| outcomes.iter().any(|o| o.status == status);
    if any(TestStatus::Timeout) {
        return Some(VerdictReason::Timeout);
    }
    if any(TestStatus::Missing) {
        return Some(VerdictReason::Missing);
    }
    if any(TestStatus::CompileError) {
        return Some(VerdictReason::CompileError);
    }
    if any(TestStatus::Passed) {
        return Some(VerdictReason::TestPassed);
    }
    let all_match = outcomes.iter().all(|o| {
        matches!(
            (&o.signature, baseline.get(&o.test)),
            (Some(got), Some(want)) if signatures_match(got, want)
        )
    });
    if all_match {
        None
    } else {
        Some(VerdictReason::SignatureMismatch)
    }
}
