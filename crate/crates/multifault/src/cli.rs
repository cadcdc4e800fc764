//! The `multifault` command-line interface.
//!
//! Exit codes separate who has to act: 0 success, 1 the input data or
//! request was refused (`REFUSED:` on stderr), 2 the invocation was
//! malformed (`USAGE:`), 3 the environment failed underneath us
//! (`ENV:`).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::adapter::{build_adapter, AdapterError, ExecutionAdapter};
use crate::analytics;
use crate::checkout::{checkout_token, CheckoutError, MultiFaultToken};
use crate::manifest::{BenchmarkManifest, ManifestError};
use crate::model::FaultId;
use crate::plot;
use crate::relation::ExistenceRelation;
use crate::search::{SearchError, Searcher};
use crate::transplant::TransplantError;

#[derive(Parser)]
#[command(name = "multifault", version, about = "Find and assemble multi-fault versions in a single-fault benchmark")]
struct Cli {
    /// Benchmark manifest.
    #[arg(long, global = true, default_value = "manifest.toml")]
    manifest: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover which older faulty versions reveal which faults.
    Search(SearchArgs),
    /// Reports over a previously computed relation.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Assemble the multi-fault version named by a token.
    Checkout(CheckoutArgs),
    /// Re-run the search in both scan and oracle mode and confirm the
    /// relations agree.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Scan a single fault, given as a full label like Math-5.
    #[arg(long, conflicts_with = "pair")]
    fault: Option<String>,
    /// Check one pair: is FAULT revealed in OLDER's faulty version?
    #[arg(long, num_args = 2, value_names = ["FAULT", "OLDER"])]
    pair: Option<Vec<String>>,
    /// Consult every predecessor instead of stopping at the first
    /// non-revealing one.
    #[arg(long)]
    oracle: bool,
    /// Faults scanned concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for relation.csv, trace.csv and summary.txt.
    #[arg(long, short = 'o', default_value = ".")]
    out: PathBuf,
    /// Work under this directory instead of a temporary one.
    #[arg(long)]
    scratch: Option<PathBuf>,
    /// Keep checkouts and augmented trees for inspection.
    #[arg(long)]
    keep_scratch: bool,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Subject catalog, census figures and the report figure.
    Stats(ReportArgs),
    /// Fault lifespans in days.
    Lifespan(ReportArgs),
}

#[derive(Args)]
struct ReportArgs {
    /// Relation file produced by `search`.
    #[arg(long)]
    relation: PathBuf,
    /// Directory for the report artifacts.
    #[arg(long, short = 'o', default_value = ".")]
    out: PathBuf,
    /// Also render the SVG figure.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct CheckoutArgs {
    /// Token naming the faults to assemble, like Math-1-2-3.
    token: String,
    /// Directory receiving the assembled tree; must be empty or absent.
    #[arg(long, short = 'w')]
    workdir: PathBuf,
    /// Relation file backing the transplants.
    #[arg(long)]
    relation: Option<PathBuf>,
    /// Assemble without a backing relation. The validity gate still
    /// applies.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Relation file to check against the freshly computed one.
    #[arg(long)]
    relation: Option<PathBuf>,
    /// Faults scanned concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Work under this directory instead of a temporary one.
    #[arg(long)]
    scratch: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn refused(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn env(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn prefix(&self) -> &'static str {
        match self.code {
            1 => "REFUSED:",
            2 => "USAGE:",
            _ => "ENV:",
        }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("USAGE: {e}");
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            // One line however wordy the underlying error, so scripts
            // can match on the prefix.
            let flat: Vec<&str> = f.message.split_whitespace().collect();
            eprintln!("{} {}", f.prefix(), flat.join(" "));
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let manifest = BenchmarkManifest::parse(&cli.manifest).map_err(manifest_failure)?;
    match cli.command {
        Command::Search(args) => {
            let adapter = load_adapter(&manifest)?;
            cmd_search(&manifest, adapter.as_ref(), args)
        }
        Command::Report(ReportCommand::Stats(args)) => cmd_report_stats(&manifest, args),
        Command::Report(ReportCommand::Lifespan(args)) => cmd_report_lifespan(&manifest, args),
        Command::Checkout(args) => {
            let adapter = load_adapter(&manifest)?;
            cmd_checkout(&manifest, adapter.as_ref(), args)
        }
        Command::Verify(args) => {
            let adapter = load_adapter(&manifest)?;
            cmd_verify(&manifest, adapter.as_ref(), args)
        }
    }
}

fn load_adapter(manifest: &BenchmarkManifest) -> Result<Box<dyn ExecutionAdapter>, Failure> {
    build_adapter(
        manifest.adapter_config(),
        manifest.base_dir(),
        manifest.normalizer_chain().clone(),
    )
    .map_err(adapter_failure)
}

fn load_relation(path: &Path, manifest: &BenchmarkManifest) -> Result<ExistenceRelation, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::env(format!("cannot read relation `{}`: {e}", path.display())))?;
    let relation = ExistenceRelation::parse_csv(&text)
        .map_err(|e| Failure::refused(format!("relation `{}`: {e}", path.display())))?;
    relation
        .validate(manifest)
        .map_err(|e| Failure::refused(format!("relation `{}`: {e}", path.display())))?;
    Ok(relation)
}

fn parse_fault_label(label: &str) -> Result<FaultId, Failure> {
    label
        .parse()
        .map_err(|e| Failure::usage(format!("bad fault label `{label}`: {e}")))
}

fn cmd_search(
    manifest: &BenchmarkManifest,
    adapter: &dyn ExecutionAdapter,
    args: SearchArgs,
) -> Result<(), Failure> {
    let mut searcher = Searcher::new(manifest, adapter)
        .jobs(args.jobs)
        .oracle(args.oracle)
        .keep_scratch(args.keep_scratch);
    if let Some(root) = &args.scratch {
        searcher = searcher.scratch_root(root);
    }

    if let Some(pair) = &args.pair {
        let fault = parse_fault_label(&pair[0])?;
        let older = parse_fault_label(&pair[1])?;
        let v = searcher
            .check_pair(&fault, &older)
            .map_err(search_failure)?;
        println!("{},{},{},{}", v.fault, v.version, v.reason, v.revealed);
        return Ok(());
    }

    if let Some(label) = &args.fault {
        let fault = parse_fault_label(label)?;
        let verdicts = searcher.scan_fault(&fault).map_err(search_failure)?;
        for v in &verdicts {
            println!("{},{},{},{}", v.fault, v.version, v.reason, v.revealed);
        }
        return Ok(());
    }

    match searcher.run() {
        Ok(trace) => {
            write_search_artifacts(&args.out, &trace)?;
            print!("{}", trace.summary_text());
            Ok(())
        }
        Err(abort) => {
            // Whatever completed is still worth keeping.
            let _ = write_search_artifacts(&args.out, &abort.partial);
            Err(search_failure(abort.cause))
        }
    }
}

fn write_search_artifacts(out: &Path, trace: &crate::search::SearchTrace) -> Result<(), Failure> {
    let write = |name: &str, content: String| -> Result<(), Failure> {
        fs::write(out.join(name), content)
            .map_err(|e| Failure::env(format!("cannot write {name}: {e}")))
    };
    fs::create_dir_all(out)
        .map_err(|e| Failure::env(format!("cannot create `{}`: {e}", out.display())))?;
    write("relation.csv", trace.relation().to_csv())?;
    write("trace.csv", trace.trace_csv())?;
    write("summary.txt", trace.summary_text())
}

fn cmd_report_stats(manifest: &BenchmarkManifest, args: ReportArgs) -> Result<(), Failure> {
    let relation = load_relation(&args.relation, manifest)?;
    let subjects = analytics::build_subjects(manifest, &relation);
    let census = analytics::census(&subjects);

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::env(format!("cannot create `{}`: {e}", args.out.display())))?;
    fs::write(args.out.join("subjects.csv"), analytics::catalog_csv(&subjects))
        .map_err(|e| Failure::env(format!("cannot write subjects.csv: {e}")))?;
    if args.plot {
        let hist = analytics::fault_count_histogram(&subjects);
        let series: Vec<i64> = analytics::lifespan_series(manifest, &relation)
            .iter()
            .map(|r| r.days)
            .collect();
        fs::write(args.out.join("stats.svg"), plot::report_svg(&hist, &series))
            .map_err(|e| Failure::env(format!("cannot write stats.svg: {e}")))?;
    }
    print!("{}", census.summary_lines());
    Ok(())
}

fn cmd_report_lifespan(manifest: &BenchmarkManifest, args: ReportArgs) -> Result<(), Failure> {
    let relation = load_relation(&args.relation, manifest)?;
    let rows = analytics::lifespan_series(manifest, &relation);
    let stats = analytics::lifespan_stats(&rows);
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::env(format!("cannot create `{}`: {e}", args.out.display())))?;
    fs::write(args.out.join("lifespans.csv"), analytics::lifespan_csv(&rows))
        .map_err(|e| Failure::env(format!("cannot write lifespans.csv: {e}")))?;
    if args.plot {
        let days: Vec<i64> = rows.iter().map(|r| r.days).collect();
        fs::write(args.out.join("lifespans.svg"), plot::series_svg(&days))
            .map_err(|e| Failure::env(format!("cannot write lifespans.svg: {e}")))?;
    }
    print!("{}", stats.summary_lines());
    Ok(())
}

fn cmd_checkout(
    manifest: &BenchmarkManifest,
    adapter: &dyn ExecutionAdapter,
    args: CheckoutArgs,
) -> Result<(), Failure> {
    let token: MultiFaultToken = args
        .token
        .parse()
        .map_err(|e| Failure::usage(format!("bad token `{}`: {e}", args.token)))?;
    let relation = match &args.relation {
        Some(path) => Some(load_relation(path, manifest)?),
        None => None,
    };
    let report = checkout_token(
        manifest,
        adapter,
        &token,
        relation.as_ref(),
        args.force,
        &args.workdir,
    )
    .map_err(checkout_failure)?;
    print!(
        "token={}\nbase={}\ntransplanted={}\nshadowed={}\ntests_failing={}\nworkdir={}\n",
        report.token,
        report.base,
        report.transplanted.len(),
        report.shadowed.len(),
        report.tests_failing,
        args.workdir.display()
    );
    Ok(())
}

fn cmd_verify(
    manifest: &BenchmarkManifest,
    adapter: &dyn ExecutionAdapter,
    args: VerifyArgs,
) -> Result<(), Failure> {
    let stored = match &args.relation {
        Some(path) => Some(load_relation(path, manifest)?),
        None => None,
    };
    let compute = |oracle: bool| -> Result<ExistenceRelation, Failure> {
        let mut s = Searcher::new(manifest, adapter)
            .jobs(args.jobs)
            .oracle(oracle);
        if let Some(root) = &args.scratch {
            s = s.scratch_root(root.join(if oracle { "oracle" } else { "scan" }));
        }
        s.run()
            .map(crate::search::SearchTrace::into_relation)
            .map_err(|abort| search_failure(abort.cause))
    };

    let scan = compute(false)?;
    let oracle = compute(true)?;
    if scan != oracle {
        let extra: Vec<String> = oracle
            .pairs()
            .filter(|(n, m)| !scan.contains(n, m))
            .map(|(n, m)| format!("({n},{m})"))
            .collect();
        return Err(Failure::refused(format!(
            "scan and oracle relations differ; the oracle additionally found: {}",
            extra.join(", ")
        )));
    }
    if let Some(stored) = stored {
        if stored != scan {
            return Err(Failure::refused(format!(
                "stored relation has {} pair(s), the computed one {}; they differ",
                stored.len(),
                scan.len()
            )));
        }
    }
    println!("relations identical ({} pairs)", scan.len());
    Ok(())
}

fn manifest_failure(e: ManifestError) -> Failure {
    match e {
        ManifestError::Read { .. } => Failure::env(e.to_string()),
        ManifestError::Syntax { .. } | ManifestError::Invalid(_) => Failure::refused(e.to_string()),
    }
}

fn adapter_failure(e: AdapterError) -> Failure {
    match e {
        AdapterError::WorkdirNotEmpty(_)
        | AdapterError::UnmarkedWorkdir(_)
        | AdapterError::Config(_) => Failure::refused(e.to_string()),
        AdapterError::CheckoutFailed { .. }
        | AdapterError::RunnerFailed { .. }
        | AdapterError::Io(_) => Failure::env(e.to_string()),
    }
}

fn transplant_failure(e: TransplantError) -> Failure {
    match e {
        TransplantError::Io { .. } => Failure::env(e.to_string()),
        _ => Failure::refused(e.to_string()),
    }
}

fn search_failure(e: SearchError) -> Failure {
    match e {
        SearchError::ManifestQuality { .. } => Failure::refused(e.to_string()),
        SearchError::UnknownFault(_) | SearchError::PairOrder { .. } => {
            Failure::usage(e.to_string())
        }
        SearchError::Adapter(inner) => adapter_failure(inner),
        SearchError::Transplant(inner) => transplant_failure(inner),
        SearchError::Scratch(inner) => Failure::env(format!("scratch directory: {inner}")),
    }
}

fn checkout_failure(e: CheckoutError) -> Failure {
    match e {
        CheckoutError::ProjectMismatch { .. }
        | CheckoutError::UnknownFault(_)
        | CheckoutError::MissingRelation => Failure::usage(e.to_string()),
        CheckoutError::ExcludedFault(_)
        | CheckoutError::NotRevealed { .. }
        | CheckoutError::NotTransplantable { .. }
        | CheckoutError::SubjectBroken { .. } => Failure::refused(e.to_string()),
        CheckoutError::Adapter(inner) => adapter_failure(inner),
        CheckoutError::Transplant(inner) => transplant_failure(inner),
        CheckoutError::Io(inner) => Failure::env(inner.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::FixtureBuilder;

    fn materialized() -> (tempfile::TempDir, PathBuf) {
        let mut fx = FixtureBuilder::new("Demo");
        fx.fault(1).exists_in(&[2, 3]);
        fx.fault(2).exists_in(&[3]);
        fx.fault(3);
        let fx = fx.build();
        let tmp = tempfile::tempdir().unwrap();
        let manifest = fx.materialize_synthetic(tmp.path()).unwrap();
        (tmp, manifest)
    }

    fn run_cli(args: &[&str]) -> i32 {
        run(std::iter::once("multifault").chain(args.iter().copied()))
    }

    #[test]
    fn full_search_writes_artifacts() {
        let (tmp, manifest) = materialized();
        let out = tmp.path().join("out");
        let code = run_cli(&[
            "search",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let relation = fs::read_to_string(out.join("relation.csv")).unwrap();
        assert_eq!(relation, "Demo,1,2\nDemo,1,3\nDemo,2,3\n");
        assert!(out.join("trace.csv").is_file());
        let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
        assert!(summary.contains("revealed=3"), "{summary}");
    }

    #[test]
    fn reports_consume_the_relation() {
        let (tmp, manifest) = materialized();
        let out = tmp.path().join("out");
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let relation = out.join("relation.csv");
        assert_eq!(
            run_cli(&[
                "report",
                "stats",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                relation.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            fs::read_to_string(out.join("subjects.csv")).unwrap(),
            "Demo,1,1,1\nDemo,2,2,1-2\nDemo,3,3,1-2-3\n"
        );
        // The figure is opt-in.
        assert!(!out.join("stats.svg").exists());
        assert_eq!(
            run_cli(&[
                "report",
                "stats",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                relation.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--plot",
            ]),
            0
        );
        assert!(fs::read_to_string(out.join("stats.svg"))
            .unwrap()
            .starts_with("<svg "));
        assert_eq!(
            run_cli(&[
                "report",
                "lifespan",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                relation.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--plot",
            ]),
            0
        );
        // Rows come out sorted by days, longest first.
        assert_eq!(
            fs::read_to_string(out.join("lifespans.csv")).unwrap(),
            "Demo-1,60,Demo-3\nDemo-2,30,Demo-3\nDemo-3,0,\n"
        );
        assert!(out.join("lifespans.svg").is_file());
    }

    #[test]
    fn exit_codes_separate_usage_refusal_and_environment() {
        let (tmp, manifest) = materialized();
        // Unknown flag: usage.
        assert_eq!(run_cli(&["search", "--bogus"]), 2);
        // Unknown fault label: usage.
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--fault",
                "Demo-99",
            ]),
            2
        );
        // Missing manifest file: environment.
        assert_eq!(
            run_cli(&["search", "--manifest", "/nonexistent/manifest.toml"]),
            3
        );
        // Syntactically broken manifest: refused.
        let bad = tmp.path().join("bad.toml");
        fs::write(&bad, "schema_version = ").unwrap();
        assert_eq!(run_cli(&["search", "--manifest", bad.to_str().unwrap()]), 1);
        // Relation referencing unknown faults: refused.
        let bad_rel = tmp.path().join("bad.csv");
        fs::write(&bad_rel, "Demo,7,9\n").unwrap();
        assert_eq!(
            run_cli(&[
                "verify",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                bad_rel.to_str().unwrap(),
            ]),
            1
        );
    }

    #[test]
    fn checkout_assembles_from_the_cli() {
        let (tmp, manifest) = materialized();
        let out = tmp.path().join("out");
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let dest = tmp.path().join("subject");
        assert_eq!(
            run_cli(&[
                "checkout",
                "Demo-1-2-3",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                out.join("relation.csv").to_str().unwrap(),
                "-w",
                dest.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            fs::read_to_string(dest.join("VERSION")).unwrap(),
            "Demo-3b\n"
        );
        // Without a relation the same request is a usage error.
        assert_eq!(
            run_cli(&[
                "checkout",
                "Demo-1-2",
                "--manifest",
                manifest.to_str().unwrap(),
                "--workdir",
                tmp.path().join("x").to_str().unwrap(),
            ]),
            2
        );
    }

    #[test]
    fn verify_compares_scan_and_oracle() {
        let (tmp, manifest) = materialized();
        let out = tmp.path().join("out");
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run_cli(&[
                "verify",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                out.join("relation.csv").to_str().unwrap(),
            ]),
            0
        );
        // A stale relation file is refused.
        let stale = tmp.path().join("stale.csv");
        fs::write(&stale, "Demo,1,2\n").unwrap();
        assert_eq!(
            run_cli(&[
                "verify",
                "--manifest",
                manifest.to_str().unwrap(),
                "--relation",
                stale.to_str().unwrap(),
            ]),
            1
        );
    }

    #[test]
    fn pair_checks_print_a_single_verdict() {
        let (_tmp, manifest) = materialized();
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--pair",
                "Demo-1",
                "Demo-3",
            ]),
            0
        );
        // Reversed order is a usage error, not a crash.
        assert_eq!(
            run_cli(&[
                "search",
                "--manifest",
                manifest.to_str().unwrap(),
                "--pair",
                "Demo-3",
                "Demo-1",
            ]),
            2
        );
    }
}
