//! Mining multi-fault versions out of a chronologically indexed
//! single-fault benchmark.
//!
//! Benchmarks in the Defects4J style isolate one fault per version: each
//! faulty version ships with the fault-revealing tests of exactly that
//! fault. Because versions are indexed chronologically, a fault that was
//! patched recently may silently exist in many older faulty versions,
//! unrevealed only because its tests are not present there. This crate
//! transplants fault-revealing test methods backwards through the version
//! history, records in which older versions each fault is revealed, and
//! derives multi-fault subjects, co-existence statistics, and fault
//! lifespans from the result.
//!
//! The pipeline, end to end:
//!
//! 1. [`manifest`] ingests a benchmark manifest describing the faults,
//!    their chronological ranks and revision dates, and how versions are
//!    checked out and tested.
//! 2. [`extract`] locates test methods and imports in subject sources with
//!    a brace-aware lexical scanner.
//! 3. [`transplant`] copies fault-revealing test methods (plus missing
//!    imports) into an older version's test class, in a scratch copy,
//!    never touching production sources.
//! 4. [`adapter`] checks out, compiles and runs subject versions, either
//!    through configurable shell commands or through a hermetic synthetic
//!    adapter for tests and demos.
//! 5. [`search`] runs the backward scan with early stopping and the
//!    three-condition existence check, producing the existence relation.
//! 6. [`relation`] and [`analytics`] build multi-fault subjects and report
//!    fault-count histograms and lifespans.
//!
//! The `multifault` binary in this crate wires the pipeline into the
//! `search`, `report`, `checkout` and `verify` subcommands; see the
//! guide under `book/` for a walkthrough.

pub mod adapter;
pub mod analytics;
pub mod checkout;
pub mod cli;
pub mod extract;
pub mod fixture;
pub mod manifest;
pub mod model;
pub mod plot;
pub mod relation;
pub mod search;
pub mod transplant;

pub use adapter::{
    build_adapter,
    signature::{signatures_match, FailureSignature, NormalizerChain},
    AdapterConfig, AdapterError, CompileStatus, ExecutionAdapter, TestOutcome, TestStatus,
};
pub use analytics::MultiFaultSubject;
pub use checkout::MultiFaultToken;
pub use manifest::{BenchmarkManifest, ManifestError};
pub use model::{FaultId, FaultRecord, TestRef, VersionRef};
pub use relation::ExistenceRelation;
pub use search::{ExistenceVerdict, SearchTrace, Searcher, VerdictReason};

// The guide chapters under book/src double as doctests so their code
// stays compilable against the current API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/manifest.md")]
    pub struct ManifestChapter;
    #[doc = include_str!("../../../book/src/extraction.md")]
    pub struct ExtractionChapter;
    #[doc = include_str!("../../../book/src/transplantation.md")]
    pub struct TransplantationChapter;
    #[doc = include_str!("../../../book/src/adapters.md")]
    pub struct AdaptersChapter;
    #[doc = include_str!("../../../book/src/search.md")]
    pub struct SearchChapter;
    #[doc = include_str!("../../../book/src/reports.md")]
    pub struct ReportsChapter;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CliChapter;
}
