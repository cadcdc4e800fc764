//! Test transplantation: planning and applying the move of fault-revealing
//! test methods from a donor version into an older target version.
//!
//! Planning is pure analysis over two checked-out trees and can fail soft
//! (target class missing, method already present) without touching disk.
//! Applying never edits the target tree in place: it copies the whole
//! tree and rewrites only the affected test classes; each move is
//! recorded as a trailing comment in the rewritten class. Everything
//! else is copied byte for byte, which keeps augmented versions
//! comparable to their originals: the diff against the target touches
//! planned test files and nothing more.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{self, ExtractError, ImportLine, MethodSpan};
use crate::model::{TestRef, VersionRef};

/// Prefix of the comment lines recording transplants. Each rewritten
/// class ends with one `// TRANSPLANTED-TEST: class_path#method` line
/// per inserted method, so augmented trees carry their own provenance
/// without adding files outside the rewritten test classes.
pub const TRANSPLANT_MARKER: &str = "// TRANSPLANTED-TEST:";

#[derive(Debug, Error)]
pub enum TransplantError {
    #[error("donor `{donor}` lacks promised test `{test}`: {detail}")]
    DonorTest {
        donor: String,
        test: TestRef,
        detail: String,
    },
    #[error("cannot analyze target class `{path}`: {detail}")]
    TargetClass { path: PathBuf, detail: ExtractError },
    #[error("augmented root `{0}` already exists and is not empty")]
    DestinationNotEmpty(PathBuf),
    #[error("i/o failure on `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TransplantError + '_ {
    move |source| TransplantError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One test method scheduled for insertion, with everything needed to
/// rewrite the target class: the donor span and the donor file's imports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedMove {
    pub test: TestRef,
    pub span: MethodSpan,
    pub imports: Vec<ImportLine>,
}

/// A deterministic description of one transplantation. Planning the same
/// pair of trees twice yields identical plans, serialized bytes included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransplantPlan {
    pub donor: VersionRef,
    pub target: VersionRef,
    pub moves: Vec<PlannedMove>,
}

/// Soft outcomes of planning. Only donor-side defects are hard errors:
/// the manifest promises the donor carries its fault-revealing tests.
#[derive(Debug)]
pub enum PlanOutcome {
    Planned(TransplantPlan),
    /// At least one test's class does not exist in the target tree.
    ClassMissing { missing: Vec<TestRef> },
    /// Some tests already exist verbatim-named in the target. The
    /// remainder (if any) can still be transplanted.
    DuplicateMethod {
        duplicates: Vec<TestRef>,
        remainder: Option<TransplantPlan>,
    },
}

/// Plans moving `tests` (present in the donor tree) into the target tree.
pub fn plan(
    donor: &VersionRef,
    donor_root: &Path,
    target: &VersionRef,
    target_root: &Path,
    tests: &[TestRef],
) -> Result<PlanOutcome, TransplantError> {
    let mut missing = Vec::new();
    let mut duplicates = Vec::new();
    let mut moves = Vec::new();
    for test in tests {
        let donor_file = donor_root.join(test.class_path());
        let donor_src = fs::read_to_string(&donor_file).map_err(|e| TransplantError::DonorTest {
            donor: donor.as_str().to_string(),
            test: test.clone(),
            detail: format!("cannot read donor class: {e}"),
        })?;
        let span = extract::locate_method(&donor_src, test.method_name()).map_err(|e| {
            TransplantError::DonorTest {
                donor: donor.as_str().to_string(),
                test: test.clone(),
                detail: e.to_string(),
            }
        })?;
        let imports = extract::extract_imports(&donor_src).imports;

        let target_file = target_root.join(test.class_path());
        let target_src = match fs::read_to_string(&target_file) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                missing.push(test.clone());
                continue;
            }
            Err(e) => return Err(io_err(&target_file)(e)),
        };
        let present =
            extract::has_method(&target_src, test.method_name()).map_err(|e| {
                TransplantError::TargetClass {
                    path: target_file.clone(),
                    detail: e,
                }
            })?;
        if present {
            duplicates.push(test.clone());
        } else {
            moves.push(PlannedMove {
                test: test.clone(),
                span,
                imports,
            });
        }
    }
    if !missing.is_empty() {
        return Ok(PlanOutcome::ClassMissing { missing });
    }
    let remainder = if moves.is_empty() {
        None
    } else {
        Some(TransplantPlan {
            donor: donor.clone(),
            target: target.clone(),
            moves,
        })
    };
    if !duplicates.is_empty() {
        return Ok(PlanOutcome::DuplicateMethod {
            duplicates,
            remainder,
        });
    }
    Ok(PlanOutcome::Planned(remainder.expect("no duplicates and no missing means moves exist")))
}

/// Recursively copies `src` into `dst` (created if needed). Returns the
/// number of files copied.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<usize, TransplantError> {
    let mut copied = 0;
    fs::create_dir_all(dst).map_err(io_err(dst))?;
    for entry in walkdir::WalkDir::new(src).sort_by_file_name() {
        let entry = entry.map_err(|e| TransplantError::Io {
            path: src.to_path_buf(),
            source: e.into(),
        })?;
        let rel = entry
            .path()
            .strip_prefix(src)
            .expect("walked path is under src");
        if rel.as_os_str().is_empty() {
            continue;
        }
        let dest = dst.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(io_err(&dest))?;
        } else {
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::copy(entry.path(), &dest).map_err(io_err(&dest))?;
            copied += 1;
        }
    }
    Ok(copied)
}

/// Applies a plan: copies the target tree to `augmented_root`, inserts
/// the planned methods and any missing imports into their classes, and
/// appends one marker comment per move to each rewritten class.
/// `augmented_root` must be empty or absent. Chained applications
/// accumulate marker comments.
pub fn apply(
    plan: &TransplantPlan,
    target_root: &Path,
    augmented_root: &Path,
) -> Result<(), TransplantError> {
    match fs::read_dir(augmented_root) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(TransplantError::DestinationNotEmpty(
                    augmented_root.to_path_buf(),
                ));
            }
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(augmented_root)(e)),
    }
    copy_tree(target_root, augmented_root)?;

    // Group moves per class, in plan order.
    let mut class_order: Vec<&str> = Vec::new();
    for m in &plan.moves {
        if !class_order.contains(&m.test.class_path()) {
            class_order.push(m.test.class_path());
        }
    }
    for class_path in class_order {
        let file = augmented_root.join(class_path);
        let content = fs::read_to_string(&file).map_err(io_err(&file))?;
        let had_final_newline = content.ends_with('\n');
        let mut lines: Vec<String> = content.lines().map(str::to_string).collect();

        let class_moves: Vec<&PlannedMove> = plan
            .moves
            .iter()
            .filter(|m| m.test.class_path() == class_path)
            .collect();

        // Imports: donor order, minus ones the target already has and
        // in-batch repeats.
        let existing = extract::extract_imports(&content);
        let mut queued: Vec<&ImportLine> = Vec::new();
        let mut seen: BTreeSet<(String, bool)> = BTreeSet::new();
        for m in &class_moves {
            for imp in &m.imports {
                let key = (imp.path.clone(), imp.is_static);
                if existing.has_import(&imp.path, imp.is_static) || seen.contains(&key) {
                    continue;
                }
                seen.insert(key);
                queued.push(imp);
            }
        }
        for (at, imp) in (existing.insertion_line() - 1..).zip(queued) {
            lines.insert(at.min(lines.len()), imp.raw.clone());
        }

        // Methods go right before the primary type's closing brace,
        // separated by a blank line each.
        let shifted = lines.join("\n");
        let close = extract::primary_close_line(&shifted).map_err(|e| {
            TransplantError::TargetClass {
                path: file.clone(),
                detail: e,
            }
        })?;
        let mut at = close - 1;
        for m in &class_moves {
            lines.insert(at, String::new());
            at += 1;
            for line in m.span.text.lines() {
                lines.insert(at, line.to_string());
                at += 1;
            }
        }

        let mut out = lines.join("\n");
        if had_final_newline {
            out.push('\n');
        }
        // Provenance footer, after the class body.
        if !out.ends_with('\n') {
            out.push('\n');
        }
        for m in &class_moves {
            out.push_str(&format!("{TRANSPLANT_MARKER} {}\n", m.test));
        }
        fs::write(&file, out).map_err(io_err(&file))?;
    }
    Ok(())
}

/// Collects every transplant recorded in a tree's marker comments, in
/// (file name, line) order. An unaugmented checkout yields the empty
/// list.
pub fn read_marker(root: &Path) -> io::Result<Vec<TestRef>> {
    let mut tests = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(io::Error::from)?;
        if !entry.file_type().is_file()
            || entry.path().extension().is_none_or(|e| e != "java")
        {
            continue;
        }
        let text = fs::read_to_string(entry.path())?;
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix(TRANSPLANT_MARKER) {
                let parsed = rest
                    .trim()
                    .parse()
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{e}")))?;
                tests.push(parsed);
            }
        }
    }
    Ok(tests)
}
