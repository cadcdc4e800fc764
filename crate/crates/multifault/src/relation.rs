//! The existence relation: which faults are revealed in which older
//! faulty versions.
//!
//! A pair `(N, M)` states that fault `N`'s transplanted tests fail in
//! faulty version `B_M` with the baseline error, where `M` is strictly
//! older than `N` (higher rank). The relation is the pipeline's central
//! artifact: searches produce it, reports and checkouts consume it, and
//! its CSV form is byte-stable so runs can be diffed directly.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::manifest::BenchmarkManifest;
use crate::model::FaultId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("relation line {line_no}: {detail}")]
    Parse { line_no: usize, detail: String },
    #[error("relation mentions unknown fault {0}")]
    UnknownFault(FaultId),
    #[error("relation mentions excluded fault {0}")]
    ExcludedFault(FaultId),
    #[error("pair ({n}, {m}) violates rank order: {m} is not older than {n}")]
    RankOrder { n: FaultId, m: FaultId },
    #[error("pair ({n}, {m}) crosses projects")]
    CrossProject { n: FaultId, m: FaultId },
}

/// Set of `(N, M)` pairs, kept sorted for deterministic iteration and
/// serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExistenceRelation {
    pairs: BTreeSet<(FaultId, FaultId)>,
}

impl ExistenceRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: FaultId, m: FaultId) -> bool {
        self.pairs.insert((n, m))
    }

    pub fn contains(&self, n: &FaultId, m: &FaultId) -> bool {
        self.pairs.contains(&(n.clone(), m.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(FaultId, FaultId)> {
        self.pairs.iter()
    }

    /// All `M` in which `n` is revealed, ascending.
    pub fn revealing_versions(&self, n: &FaultId) -> Vec<&FaultId> {
        self.pairs
            .iter()
            .filter(|(pn, _)| pn == n)
            .map(|(_, m)| m)
            .collect()
    }

    /// Faults co-existing in faulty version `B_m`: `m` itself plus every
    /// `n` with `(n, m)` in the relation.
    pub fn faults_in(&self, m: &FaultId) -> BTreeSet<FaultId> {
        let mut set: BTreeSet<FaultId> = self
            .pairs
            .iter()
            .filter(|(_, pm)| pm == m)
            .map(|(n, _)| n.clone())
            .collect();
        set.insert(m.clone());
        set
    }

    /// One `project,N,M` line per pair, sorted by `(N, M)`, no header.
    /// Output is byte-stable across runs over the same relation.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (n, m) in &self.pairs {
            out.push_str(&format!(
                "{},{},{}\n",
                n.project(),
                n.number(),
                m.number()
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, RelationError> {
        let mut relation = Self::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(RelationError::Parse {
                    line_no,
                    detail: format!("expected `project,N,M`, got `{line}`"),
                });
            }
            let project = parts[0].trim();
            let n_num: u32 = parts[1].trim().parse().map_err(|_| RelationError::Parse {
                line_no,
                detail: format!("`{}` is not a fault number", parts[1]),
            })?;
            let m_num: u32 = parts[2].trim().parse().map_err(|_| RelationError::Parse {
                line_no,
                detail: format!("`{}` is not a fault number", parts[2]),
            })?;
            let n = FaultId::new(project, n_num).map_err(|e| RelationError::Parse {
                line_no,
                detail: e.to_string(),
            })?;
            let m = FaultId::new(project, m_num).map_err(|e| RelationError::Parse {
                line_no,
                detail: e.to_string(),
            })?;
            relation.insert(n, m);
        }
        Ok(relation)
    }

    /// Checks every pair against a manifest: both faults known and not
    /// excluded, same project, and `M` strictly older than `N`.
    pub fn validate(&self, manifest: &BenchmarkManifest) -> Result<(), RelationError> {
        for (n, m) in &self.pairs {
            if n.project() != m.project() {
                return Err(RelationError::CrossProject {
                    n: n.clone(),
                    m: m.clone(),
                });
            }
            let n_rec = manifest
                .fault(n)
                .ok_or_else(|| RelationError::UnknownFault(n.clone()))?;
            let m_rec = manifest
                .fault(m)
                .ok_or_else(|| RelationError::UnknownFault(m.clone()))?;
            if n_rec.excluded {
                return Err(RelationError::ExcludedFault(n.clone()));
            }
            if m_rec.excluded {
                return Err(RelationError::ExcludedFault(m.clone()));
            }
            if m_rec.rank <= n_rec.rank {
                return Err(RelationError::RankOrder {
                    n: n.clone(),
                    m: m.clone(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExistenceRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pairs", self.pairs.len())
    }
}
