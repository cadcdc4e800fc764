//! Assembling multi-fault versions on disk.
//!
//! A token such as `Math-1-2-3` names a set of co-existing faults. The
//! base version is the oldest fault in the set; every newer fault's
//! revealing tests are transplanted into it, and the assembled tree is
//! validated by compiling it and checking that all revealing tests
//! fail. The existence relation gates assembly: a token is only
//! honored when every transplant is backed by a recorded pair, unless
//! the caller forces it.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use crate::adapter::{ensure_workdir_usable, CompileStatus, ExecutionAdapter, TestStatus};
use crate::analytics::MultiFaultSubject;
use crate::manifest::BenchmarkManifest;
use crate::model::{FaultId, FaultRecord, TestRef};
use crate::relation::ExistenceRelation;
use crate::transplant::{self, PlanOutcome};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token has no project prefix: {0}")]
    NoProject(String),
    #[error("token has no fault numbers: {0}")]
    NoNumbers(String),
}

/// A project plus the fault numbers contained in one assembled
/// version, canonically ascending. Note the grammar: trailing numeric
/// segments are fault numbers, everything before them is the project,
/// so a project name ending in a purely numeric segment is not
/// representable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiFaultToken {
    project: String,
    numbers: Vec<u32>,
}

impl MultiFaultToken {
    pub fn new(project: &str, numbers: impl IntoIterator<Item = u32>) -> Result<Self, TokenError> {
        if project.is_empty() {
            return Err(TokenError::NoProject(String::new()));
        }
        let mut numbers: Vec<u32> = numbers.into_iter().collect();
        numbers.sort_unstable();
        numbers.dedup();
        if numbers.is_empty() {
            return Err(TokenError::NoNumbers(project.to_string()));
        }
        Ok(Self {
            project: project.to_string(),
            numbers,
        })
    }

    pub fn from_subject(subject: &MultiFaultSubject) -> Self {
        Self::new(subject.version.project(), subject.numbers())
            .expect("subjects always contain their own fault")
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    pub fn numbers(&self) -> &[u32] {
        &self.numbers
    }

    pub fn fault_ids(&self) -> Vec<FaultId> {
        self.numbers
            .iter()
            .map(|&n| FaultId::new(&self.project, n).expect("token project is non-empty"))
            .collect()
    }
}

impl fmt::Display for MultiFaultToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.project)?;
        for n in &self.numbers {
            write!(f, "-{n}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiFaultToken {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, TokenError> {
        if s.is_empty() {
            return Err(TokenError::Empty);
        }
        let segments: Vec<&str> = s.split('-').collect();
        let mut split = segments.len();
        while split > 0 && segments[split - 1].parse::<u32>().is_ok() {
            split -= 1;
        }
        let numbers: Vec<u32> = segments[split..]
            .iter()
            .map(|seg| seg.parse().expect("segments past the split are numeric"))
            .collect();
        if numbers.is_empty() {
            return Err(TokenError::NoNumbers(s.to_string()));
        }
        let project = segments[..split].join("-");
        Self::new(&project, numbers).map_err(|e| match e {
            TokenError::NoProject(_) => TokenError::NoProject(s.to_string()),
            other => other,
        })
    }
}

/// File written at the root of an assembled tree, one inserted test
/// per line in application order. Absent when nothing was inserted,
/// so a single-fault checkout stays byte-identical to a plain one.
pub const TRANSPLANT_MANIFEST_FILE: &str = "TRANSPLANT_MANIFEST";

#[derive(Debug, thiserror::Error)]
pub enum CheckoutError {
    #[error("token names project {token}, manifest is for {manifest}")]
    ProjectMismatch { token: String, manifest: String },
    #[error("unknown fault: {0}")]
    UnknownFault(FaultId),
    #[error("{0} is excluded from analysis")]
    ExcludedFault(FaultId),
    #[error("no relation given; pass one or force the checkout")]
    MissingRelation,
    #[error("{fault} is not recorded as revealed in {base}; force to assemble anyway")]
    NotRevealed { fault: FaultId, base: FaultId },
    #[error("cannot transplant {fault} into {base}: {detail}")]
    NotTransplantable {
        fault: FaultId,
        base: FaultId,
        detail: String,
    },
    /// The assembled tree failed its validity check.
    #[error("assembled subject is broken: {detail}")]
    SubjectBroken { detail: String },
    #[error(transparent)]
    Adapter(#[from] crate::adapter::AdapterError),
    #[error(transparent)]
    Transplant(#[from] crate::transplant::TransplantError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// What an assembly produced.
#[derive(Debug, Clone)]
pub struct CheckoutReport {
    pub token: MultiFaultToken,
    /// The fault whose faulty version served as the base tree.
    pub base: FaultId,
    /// Faults whose tests were transplanted in, ascending rank.
    pub transplanted: Vec<FaultId>,
    /// Tests that already existed in the base under the same name.
    pub shadowed: Vec<TestRef>,
    /// Revealing tests confirmed failing on the assembled tree.
    pub tests_failing: usize,
}

/// Materializes the version named by `token` into `dest`, which must
/// be empty or absent.
///
/// `relation` backs each transplant; pass `force` to assemble without
/// one (or against one with missing pairs). The assembled tree must
/// still compile and fail every revealing test, force or not.
pub fn checkout_token(
    manifest: &BenchmarkManifest,
    adapter: &dyn ExecutionAdapter,
    token: &MultiFaultToken,
    relation: Option<&ExistenceRelation>,
    force: bool,
    dest: &Path,
) -> Result<CheckoutReport, CheckoutError> {
    if token.project() != manifest.project() {
        return Err(CheckoutError::ProjectMismatch {
            token: token.project().to_string(),
            manifest: manifest.project().to_string(),
        });
    }
    let mut records: Vec<&FaultRecord> = Vec::new();
    for id in token.fault_ids() {
        let record = manifest
            .fault(&id)
            .ok_or_else(|| CheckoutError::UnknownFault(id.clone()))?;
        if record.excluded {
            return Err(CheckoutError::ExcludedFault(id));
        }
        records.push(record);
    }
    // Oldest fault hosts the rest; ranks are unique by construction.
    records.sort_by_key(|r| r.rank);
    let base = records.pop().expect("tokens carry at least one number");
    let donors = records;

    // A single-id token needs no transplants, so no relation either.
    if !force && !donors.is_empty() {
        let relation = relation.ok_or(CheckoutError::MissingRelation)?;
        for n in &donors {
            if !relation.contains(&n.id, &base.id) {
                return Err(CheckoutError::NotRevealed {
                    fault: n.id.clone(),
                    base: base.id.clone(),
                });
            }
        }
    }

    ensure_workdir_usable(dest)?;
    let scratch = tempfile::tempdir()?;

    let mut current = scratch.path().join("stage-0");
    adapter.checkout(&base.faulty_ref, &current)?;
    let mut shadowed = Vec::new();
    let mut inserted: Vec<TestRef> = Vec::new();
    for (i, n) in donors.iter().enumerate() {
        let donor_root = scratch.path().join(format!("donor-{}", n.id.number()));
        adapter.checkout(&n.faulty_ref, &donor_root)?;
        let plan = transplant::plan(&n.faulty_ref, &donor_root, &base.faulty_ref, &current, &n.tests)?;
        let next = scratch.path().join(format!("stage-{}", i + 1));
        match plan {
            PlanOutcome::Planned(p) => {
                transplant::apply(&p, &current, &next)?;
                inserted.extend(p.moves.iter().map(|m| m.test.clone()));
                current = next;
            }
            PlanOutcome::ClassMissing { missing } => {
                return Err(CheckoutError::NotTransplantable {
                    fault: n.id.clone(),
                    base: base.id.clone(),
                    detail: format!(
                        "test class absent for {}",
                        missing
                            .iter()
                            .map(TestRef::to_string)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                });
            }
            PlanOutcome::DuplicateMethod {
                duplicates,
                remainder,
            } => {
                shadowed.extend(duplicates);
                if let Some(p) = remainder {
                    transplant::apply(&p, &current, &next)?;
                    inserted.extend(p.moves.iter().map(|m| m.test.clone()));
                    current = next;
                }
            }
        }
    }

    transplant::copy_tree(&current, dest)?;
    if !inserted.is_empty() {
        let listing: String = inserted.iter().map(|t| format!("{t}\n")).collect();
        fs::write(dest.join(TRANSPLANT_MANIFEST_FILE), listing)?;
    }

    // Validity gate: the assembled subject must build and every
    // contained fault must be observable.
    match adapter.compile(dest)? {
        CompileStatus::Ok => {}
        CompileStatus::CompileError(d) => {
            return Err(CheckoutError::SubjectBroken {
                detail: format!("does not compile: {d}"),
            })
        }
        CompileStatus::Timeout => {
            return Err(CheckoutError::SubjectBroken {
                detail: "compile timed out".to_string(),
            })
        }
    }
    let mut all_tests: Vec<TestRef> = Vec::new();
    for r in donors.iter().chain([&base]) {
        all_tests.extend(r.tests.iter().cloned());
    }
    all_tests.sort();
    all_tests.dedup();
    let outcomes = adapter.run_tests(dest, &all_tests)?;
    let mut failing = 0;
    for o in &outcomes {
        if o.status == TestStatus::Failed {
            failing += 1;
        } else {
            return Err(CheckoutError::SubjectBroken {
                detail: format!("revealing test {} is {:?}, expected a failure", o.test, o.status),
            });
        }
    }

    Ok(CheckoutReport {
        token: token.clone(),
        base: base.id.clone(),
        transplanted: donors.iter().map(|r| r.id.clone()).collect(),
        shadowed,
        tests_failing: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::FixtureBuilder;
    use std::fs;

    fn id(n: u32) -> FaultId {
        FaultId::new("Demo", n).unwrap()
    }

    #[test]
    fn tokens_parse_and_canonicalize() {
        let t: MultiFaultToken = "Math-1-2-3".parse().unwrap();
        assert_eq!(t.project(), "Math");
        assert_eq!(t.numbers(), &[1, 2, 3]);
        assert_eq!(t.to_string(), "Math-1-2-3");

        let t: MultiFaultToken = "Commons-Lang-5-3-5".parse().unwrap();
        assert_eq!(t.project(), "Commons-Lang");
        assert_eq!(t.to_string(), "Commons-Lang-3-5");

        assert_eq!("".parse::<MultiFaultToken>(), Err(TokenError::Empty));
        assert!(matches!(
            "Math".parse::<MultiFaultToken>(),
            Err(TokenError::NoNumbers(_))
        ));
        assert!(matches!(
            "5-3".parse::<MultiFaultToken>(),
            Err(TokenError::NoProject(_))
        ));
    }

    #[test]
    fn assembles_a_backed_token() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2, 3]);
        fx.fault(2).exists_in(&[3]);
        fx.fault(3);
        let fx = fx.build();
        let adapter = fx.adapter();
        let relation = fx.expected_relation_bruteforce();
        let token: MultiFaultToken = "Demo-1-2-3".parse().unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dest = tmp.path().join("subject");

        let report = checkout_token(
            fx.manifest(),
            &adapter,
            &token,
            Some(&relation),
            false,
            &dest,
        )
        .unwrap();
        assert_eq!(report.base, id(3));
        assert_eq!(report.transplanted, vec![id(1), id(2)]);
        assert_eq!(report.tests_failing, 3);

        // The tree is the old base plus the newer tests.
        assert_eq!(fs::read_to_string(dest.join("VERSION")).unwrap(), "Demo-3b\n");
        let tests = fs::read_to_string(dest.join("src/test/DemoTest.java")).unwrap();
        for m in ["test_fault_1", "test_fault_2", "test_fault_3"] {
            assert!(tests.contains(m), "{m}");
        }
        let marker = transplant::read_marker(&dest).unwrap();
        assert_eq!(marker.len(), 2);
        assert_eq!(
            fs::read_to_string(dest.join(TRANSPLANT_MANIFEST_FILE)).unwrap(),
            "src/test/DemoTest.java#test_fault_1\nsrc/test/DemoTest.java#test_fault_2\n"
        );
    }

    #[test]
    fn unbacked_pairs_are_refused_and_force_hits_the_validity_gate() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2]);
        fx.fault(2);
        fx.fault(3);
        let fx = fx.build();
        let adapter = fx.adapter();
        let relation = fx.expected_relation_bruteforce();
        let token: MultiFaultToken = "Demo-1-3".parse().unwrap();
        let tmp = tempfile::tempdir().unwrap();

        let err = checkout_token(
            fx.manifest(),
            &adapter,
            &token,
            Some(&relation),
            false,
            &tmp.path().join("a"),
        )
        .unwrap_err();
        assert!(matches!(err, CheckoutError::NotRevealed { fault, base }
            if fault == id(1) && base == id(3)));

        // Forcing assembles anyway, but fault 1's test passes on the
        // old base, so the subject is rejected as broken.
        let err = checkout_token(
            fx.manifest(),
            &adapter,
            &token,
            Some(&relation),
            true,
            &tmp.path().join("b"),
        )
        .unwrap_err();
        assert!(matches!(err, CheckoutError::SubjectBroken { .. }), "{err}");
    }

    #[test]
    fn gates_before_doing_work() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2]);
        fx.fault(2);
        fx.fault(9).excluded();
        let fx = fx.build();
        let adapter = fx.adapter();
        let tmp = tempfile::tempdir().unwrap();
        let dest = tmp.path().join("d");
        let call = |token: &str, relation: Option<&ExistenceRelation>| {
            checkout_token(
                fx.manifest(),
                &adapter,
                &token.parse().unwrap(),
                relation,
                false,
                &dest,
            )
        };

        assert!(matches!(
            call("Demo-1-2", None).unwrap_err(),
            CheckoutError::MissingRelation
        ));
        let relation = fx.expected_relation_bruteforce();
        assert!(matches!(
            call("Demo-1-7", Some(&relation)).unwrap_err(),
            CheckoutError::UnknownFault(f) if f == id(7)
        ));
        assert!(matches!(
            call("Demo-1-9", Some(&relation)).unwrap_err(),
            CheckoutError::ExcludedFault(f) if f == id(9)
        ));
        assert!(matches!(
            call("Other-1-2", Some(&relation)).unwrap_err(),
            CheckoutError::ProjectMismatch { .. }
        ));
        // Nothing was written by the refused attempts.
        assert!(!dest.exists());
    }

    #[test]
    fn single_fault_tokens_reduce_to_a_plain_checkout() {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1);
        fx.fault(2);
        let fx = fx.build();
        let adapter = fx.adapter();
        let relation = ExistenceRelation::new();
        let tmp = tempfile::tempdir().unwrap();
        let dest = tmp.path().join("solo");
        let report = checkout_token(
            fx.manifest(),
            &adapter,
            &"Demo-2".parse().unwrap(),
            Some(&relation),
            false,
            &dest,
        )
        .unwrap();
        assert_eq!(report.base, id(2));
        assert!(report.transplanted.is_empty());
        assert_eq!(report.tests_failing, 1);
        assert!(transplant::read_marker(&dest).unwrap().is_empty());
        assert!(!dest.join(TRANSPLANT_MANIFEST_FILE).exists());
    }
}
