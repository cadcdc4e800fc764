//! Reports over a computed existence relation.
//!
//! Three products: the subject catalog (which faults co-exist in each
//! faulty version), census statistics over fault counts, and fault
//! lifespans derived from revision dates. All output formats are
//! byte-stable so they can be diffed across runs.

use std::collections::BTreeMap;

use crate::manifest::BenchmarkManifest;
use crate::model::FaultId;
use crate::relation::ExistenceRelation;

/// One faulty version together with every fault it contains: its own
/// plus all newer faults revealed in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiFaultSubject {
    pub version: FaultId,
    pub rank: u32,
    /// All contained faults, ascending by number. Always includes the
    /// version's own fault.
    pub faults: Vec<FaultId>,
}

impl MultiFaultSubject {
    pub fn fault_count(&self) -> usize {
        self.faults.len()
    }

    pub fn is_multi_fault(&self) -> bool {
        self.faults.len() > 1
    }

    /// Contained fault numbers, ascending.
    pub fn numbers(&self) -> Vec<u32> {
        self.faults.iter().map(FaultId::number).collect()
    }
}

/// One subject per non-excluded version, in manifest (rank) order.
pub fn build_subjects(
    manifest: &BenchmarkManifest,
    relation: &ExistenceRelation,
) -> Vec<MultiFaultSubject> {
    manifest
        .non_excluded()
        .map(|record| {
            let faults: Vec<FaultId> = relation.faults_in(&record.id).into_iter().collect();
            MultiFaultSubject {
                version: record.id.clone(),
                rank: record.rank,
                faults,
            }
        })
        .collect()
}

/// One line per subject: `project,version,count,n1-n2-...`.
pub fn catalog_csv(subjects: &[MultiFaultSubject]) -> String {
    let mut out = String::new();
    for s in subjects {
        let numbers: Vec<String> = s.numbers().iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.version.project(),
            s.version.number(),
            s.fault_count(),
            numbers.join("-")
        ));
    }
    out
}

/// Headline counts over the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusStats {
    pub versions: usize,
    pub multi: usize,
    pub ge10: usize,
    pub ge20: usize,
    pub max: usize,
    /// Version holding the maximum; the oldest (highest rank) wins ties.
    pub max_version: Option<FaultId>,
}

pub fn census(subjects: &[MultiFaultSubject]) -> CensusStats {
    let mut stats = CensusStats {
        versions: subjects.len(),
        multi: 0,
        ge10: 0,
        ge20: 0,
        max: 0,
        max_version: None,
    };
    let mut max_rank = 0;
    for s in subjects {
        let count = s.fault_count();
        if count > 1 {
            stats.multi += 1;
        }
        if count >= 10 {
            stats.ge10 += 1;
        }
        if count >= 20 {
            stats.ge20 += 1;
        }
        // Ties go to the highest rank, i.e. the oldest version.
        let beats = count > stats.max || (count == stats.max && s.rank > max_rank);
        if beats {
            stats.max = count;
            stats.max_version = Some(s.version.clone());
            max_rank = s.rank;
        }
    }
    stats
}

impl CensusStats {
    /// Stable `key=value` lines:
    ///
    /// ```text
    /// versions=326
    /// multi=311 (95.4%)
    /// ge10=126
    /// ge20=22
    /// max=24 (Closure-90)
    /// ```
    pub fn summary_lines(&self) -> String {
        let pct = if self.versions == 0 {
            0.0
        } else {
            100.0 * self.multi as f64 / self.versions as f64
        };
        let max_line = match &self.max_version {
            Some(v) => format!("max={} ({v})", self.max),
            None => format!("max={}", self.max),
        };
        format!(
            "versions={}\nmulti={} ({pct:.1}%)\nge10={}\nge20={}\n{max_line}\n",
            self.versions, self.multi, self.ge10, self.ge20
        )
    }
}

/// Versions per contained-fault count, for plotting.
pub fn fault_count_histogram(subjects: &[MultiFaultSubject]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for s in subjects {
        *hist.entry(s.fault_count()).or_insert(0) += 1;
    }
    hist
}

/// How long one fault lived: days from the revision of the oldest
/// version revealing it to the revision of its own (newest) version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifespan {
    pub fault: FaultId,
    pub days: i64,
    /// The oldest version revealing the fault; `None` when it is
    /// revealed nowhere else (then `days` is zero).
    pub oldest: Option<FaultId>,
}

/// One lifespan per non-excluded fault, ascending by fault number.
/// Day counts never go negative; a disordered revision date pair clamps
/// to zero and is logged.
pub fn lifespans(manifest: &BenchmarkManifest, relation: &ExistenceRelation) -> Vec<Lifespan> {
    let mut rows: Vec<Lifespan> = manifest
        .non_excluded()
        .map(|n| {
            let oldest = relation
                .revealing_versions(&n.id)
                .into_iter()
                .filter_map(|m| manifest.fault(m))
                .max_by_key(|m| m.rank);
            let days = match oldest {
                Some(m) => {
                    let raw = (n.revision_date - m.revision_date).num_days();
                    if raw < 0 {
                        log::warn!(
                            "{} is dated {} before its older revealing version {}; \
                             clamping lifespan to zero",
                            n.id,
                            -raw,
                            m.id
                        );
                    }
                    raw.max(0)
                }
                None => 0,
            };
            Lifespan {
                fault: n.id.clone(),
                days,
                oldest: oldest.map(|m| m.id.clone()),
            }
        })
        .collect();
    rows.sort_by_key(|r| r.fault.number());
    rows
}

/// Lifespans ordered for reporting: days non-increasing, ties broken by
/// ascending rank. The ordering is total, so output bytes are stable.
pub fn lifespan_series(manifest: &BenchmarkManifest, relation: &ExistenceRelation) -> Vec<Lifespan> {
    let mut rows = lifespans(manifest, relation);
    rows.sort_by_key(|r| {
        let rank = manifest.fault(&r.fault).map(|f| f.rank).unwrap_or(u32::MAX);
        (std::cmp::Reverse(r.days), rank)
    });
    rows
}

/// One line per fault: `fault,days,oldest` (empty `oldest` when the
/// fault is revealed nowhere else).
pub fn lifespan_csv(rows: &[Lifespan]) -> String {
    let mut out = String::new();
    for r in rows {
        let oldest = r.oldest.as_ref().map(FaultId::to_string).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", r.fault, r.days, oldest));
    }
    out
}

/// Mean and population standard deviation over all lifespans.
#[derive(Debug, Clone, PartialEq)]
pub struct LifespanStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn lifespan_stats(rows: &[Lifespan]) -> LifespanStats {
    if rows.is_empty() {
        return LifespanStats {
            count: 0,
            mean: 0.0,
            std: 0.0,
        };
    }
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.days as f64).sum::<f64>() / n;
    let var = rows
        .iter()
        .map(|r| {
            let d = r.days as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    LifespanStats {
        count: rows.len(),
        mean,
        std: var.sqrt(),
    }
}

impl LifespanStats {
    /// Stable `key=value` lines; rounded figures first, exact values
    /// with six decimals after.
    pub fn summary_lines(&self) -> String {
        format!(
            "faults={}\nlifespan_mean={}\nlifespan_std={}\nlifespan_mean_exact={:.6}\nlifespan_std_exact={:.6}\n",
            self.count,
            self.mean.round() as i64,
            self.std.round() as i64,
            self.mean,
            self.std
        )
    }
}
