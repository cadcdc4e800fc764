//! Benchmark manifests: the TOML catalog of a project's faults.
//!
//! A manifest lists every fault of one project in chronological rank
//! order (rank 1 is the newest fix, higher ranks are older), names the
//! fault-revealing tests, and selects the execution adapter. Everything
//! downstream (search, checkout, reports) starts from a parsed
//! [`BenchmarkManifest`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::signature::NormalizerChain;
use crate::adapter::AdapterConfig;
use crate::model::{FaultId, FaultRecord, TestRef, VersionRef};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest `{path}` is not valid TOML: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("manifest is invalid: {0}")]
    Invalid(String),
}

/// Serde-facing schema. Dates and tests stay as strings here so that
/// validation can report the offending fault instead of a bare parse
/// error.
#[derive(Debug, Serialize, Deserialize)]
struct RawManifest {
    schema_version: u32,
    project: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalizers: Option<Vec<String>>,
    adapter: AdapterConfig,
    #[serde(default)]
    faults: Vec<RawFault>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFault {
    id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<u32>,
    revision_date: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    faulty_ref: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_ref: Option<String>,
    #[serde(default)]
    tests: Vec<String>,
    #[serde(default)]
    excluded: bool,
}

/// A parsed, validated project manifest.
///
/// Faults are stored sorted by ascending rank; lookups by fault number go
/// through an index. The manifest's directory is retained so relative
/// adapter paths and command working directories resolve predictably.
#[derive(Debug)]
pub struct BenchmarkManifest {
    project: String,
    adapter: AdapterConfig,
    chain: NormalizerChain,
    faults: Vec<FaultRecord>,
    by_number: BTreeMap<u32, usize>,
    base_dir: PathBuf,
}

impl BenchmarkManifest {
    /// Reads and validates a manifest file.
    pub fn parse(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::parse_str(&text, path, &base_dir)
    }

    /// Parses manifest text. `path` only labels error messages.
    pub fn parse_str(text: &str, path: &Path, base_dir: &Path) -> Result<Self, ManifestError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| ManifestError::Syntax {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::Invalid(format!(
                "unsupported schema_version {} (expected {})",
                raw.schema_version, SCHEMA_VERSION
            )));
        }
        let project = raw.project.trim().to_string();
        if project.is_empty() {
            return Err(ManifestError::Invalid("project must be non-empty".into()));
        }
        raw.adapter
            .validate()
            .map_err(ManifestError::Invalid)?;
        let chain = match &raw.normalizers {
            Some(names) => {
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                NormalizerChain::from_names(&refs)
                    .map_err(|e| ManifestError::Invalid(e.to_string()))?
            }
            None => NormalizerChain::default_chain(),
        };

        let mut records = Vec::with_capacity(raw.faults.len());
        for f in &raw.faults {
            records.push(Self::cook_fault(&project, f)?);
        }
        Self::from_records(project, raw.adapter, chain, records, base_dir)
    }

    fn cook_fault(project: &str, raw: &RawFault) -> Result<FaultRecord, ManifestError> {
        let label = format!("{project}-{}", raw.id);
        let id = FaultId::new(project, raw.id)
            .map_err(|e| ManifestError::Invalid(format!("fault {label}: {e}")))?;
        let rank = raw.rank.unwrap_or(raw.id);
        if rank == 0 {
            return Err(ManifestError::Invalid(format!(
                "fault {label}: rank must be >= 1"
            )));
        }
        let revision_date = NaiveDate::parse_from_str(raw.revision_date.trim(), "%Y-%m-%d")
            .map_err(|_| {
                ManifestError::Invalid(format!(
                    "fault {label}: revision_date `{}` is not a YYYY-MM-DD date",
                    raw.revision_date
                ))
            })?;
        let mut tests = Vec::with_capacity(raw.tests.len());
        for t in &raw.tests {
            let parsed: TestRef = t
                .parse()
                .map_err(|e| ManifestError::Invalid(format!("fault {label}: {e}")))?;
            if tests.contains(&parsed) {
                return Err(ManifestError::Invalid(format!(
                    "fault {label}: duplicate test `{parsed}`"
                )));
            }
            tests.push(parsed);
        }
        let faulty_ref = match &raw.faulty_ref {
            Some(s) => VersionRef::new(s)
                .map_err(|e| ManifestError::Invalid(format!("fault {label}: {e}")))?,
            None => VersionRef::new(format!("{label}b")).expect("derived ref is non-empty"),
        };
        let fixed_ref = match &raw.fixed_ref {
            Some(s) => VersionRef::new(s)
                .map_err(|e| ManifestError::Invalid(format!("fault {label}: {e}")))?,
            None => VersionRef::new(format!("{label}f")).expect("derived ref is non-empty"),
        };
        Ok(FaultRecord {
            id,
            rank,
            revision_date,
            tests,
            faulty_ref,
            fixed_ref,
            excluded: raw.excluded,
        })
    }

    /// Assembles a manifest from already-built records, applying the same
    /// validation as file parsing. Records may arrive in any order.
    pub fn from_records(
        project: String,
        adapter: AdapterConfig,
        chain: NormalizerChain,
        mut records: Vec<FaultRecord>,
        base_dir: &Path,
    ) -> Result<Self, ManifestError> {
        records.sort_by_key(|f| f.rank);
        let mut by_number = BTreeMap::new();
        let mut last_rank = None;
        for (idx, f) in records.iter().enumerate() {
            if f.id.project() != project {
                return Err(ManifestError::Invalid(format!(
                    "fault {} does not belong to project {project}",
                    f.id
                )));
            }
            if by_number.insert(f.id.number(), idx).is_some() {
                return Err(ManifestError::Invalid(format!("duplicate fault id {}", f.id)));
            }
            if last_rank == Some(f.rank) {
                return Err(ManifestError::Invalid(format!(
                    "fault {}: rank {} is already taken",
                    f.id, f.rank
                )));
            }
            last_rank = Some(f.rank);
            if !f.excluded && f.tests.is_empty() {
                return Err(ManifestError::Invalid(format!(
                    "fault {}: non-excluded faults need at least one fault-revealing test",
                    f.id
                )));
            }
        }
        Ok(Self {
            project,
            adapter,
            chain,
            faults: records,
            by_number,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    pub fn adapter_config(&self) -> &AdapterConfig {
        &self.adapter
    }

    pub fn normalizer_chain(&self) -> &NormalizerChain {
        &self.chain
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// All faults, ascending by rank (newest first).
    pub fn faults(&self) -> &[FaultRecord] {
        &self.faults
    }

    pub fn non_excluded(&self) -> impl Iterator<Item = &FaultRecord> {
        self.faults.iter().filter(|f| !f.excluded)
    }

    pub fn fault_by_number(&self, number: u32) -> Option<&FaultRecord> {
        self.by_number.get(&number).map(|&i| &self.faults[i])
    }

    pub fn fault(&self, id: &FaultId) -> Option<&FaultRecord> {
        if id.project() != self.project {
            return None;
        }
        self.fault_by_number(id.number())
    }

    /// Non-excluded faults strictly older than `n`, nearest first
    /// (ascending rank). These are the candidate hosts for `n`'s
    /// transplanted tests.
    pub fn predecessors(&self, n: &FaultRecord) -> Vec<&FaultRecord> {
        self.faults
            .iter()
            .filter(|m| !m.excluded && m.rank > n.rank)
            .collect()
    }
}

impl fmt::Display for BenchmarkManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} faults, {} excluded)",
            self.project,
            self.faults.len(),
            self.faults.iter().filter(|x| x.excluded).count()
        )
    }
}

/// Serializes a manifest back to TOML. Used by fixtures and the demo
/// generator; hand-written manifests are the normal input.
pub fn render_manifest(
    project: &str,
    normalizers: Option<&[String]>,
    adapter: &AdapterConfig,
    faults: &[FaultRecord],
) -> String {
    let raw = RawManifest {
        schema_version: SCHEMA_VERSION,
        project: project.to_string(),
        normalizers: normalizers.map(<[String]>::to_vec),
        adapter: adapter.clone(),
        faults: faults
            .iter()
            .map(|f| RawFault {
                id: f.id.number(),
                rank: Some(f.rank),
                revision_date: f.revision_date.format("%Y-%m-%d").to_string(),
                faulty_ref: Some(f.faulty_ref.as_str().to_string()),
                fixed_ref: Some(f.fixed_ref.as_str().to_string()),
                tests: f.tests.iter().map(|t| t.to_string()).collect(),
                excluded: f.excluded,
            })
            .collect(),
    };
    toml::to_string_pretty(&raw).expect("manifest serialization cannot fail")
}
