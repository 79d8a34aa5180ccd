//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use abirange_core::detect::detect;
use abirange_core::diff::collect_incompatible_changes;
use abirange_core::scan::{load_manifest, scan, DepBugReport, ScanOutput};
use abirange_core::usage::read_elf_imports_file;
use abirange_core::version::compare_versions;
use abirange_core::{ChangeKind, SymbolKey, VersionRange};

use common::generate::{generate, oracle, pipeline};
use common::kinds::{case, expected_version, Side};
use common::{fixture, incompatible_members, run_pair, v, versions};

/// Wall-clock limit for the motivating example.
const MOTIVATING_BUDGET: Duration = Duration::from_secs(1);
/// Generated instances checked against the link simulator.
const ORACLE_INSTANCES: u64 = 256;
const ORACLE_MIN_INSTANCES: u64 = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
/// Allowed disagreements; the pipeline must be exact.
const ORACLE_MAX_MISMATCHES: usize = 0;
const VERSION_CORPUS_MIN_PAIRS: usize = 30;
const ELF_MIN_GOLDENS: usize = 2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table_row<'a>(reports: &'a [DepBugReport], app: &str) -> Option<&'a DepBugReport> {
    reports.iter().find(|r| r.app == app)
}

fn motivating_example() -> Outcome {
    let start = Instant::now();
    let (h, cockpit) = run_pair("glib/history.json", "usage/cockpit.json", ">= 2.37.6");
    let (_, homebank) = run_pair("glib/history.json", "usage/homebank.json", ">= 2.37.3");
    let elapsed = start.elapsed();
    let c = incompatible_members(&h, cockpit.as_ref());
    let hb = incompatible_members(&h, homebank.as_ref());
    let render = |r: &Option<DepBugReport>| {
        r.as_ref()
            .map_or("{}".into(), |r| r.incompatible.to_string())
    };
    check(
        c == versions(&["2.37.6", "2.39.1"])
            && hb == versions(&["2.37.3", "2.37.6", "2.39.1"])
            && elapsed < MOTIVATING_BUDGET,
        format!(
            "cockpit {} homebank {} (2.37.3 = V_init) in {elapsed:.2?}",
            render(&cockpit),
            render(&homebank)
        ),
    )
}

fn remove_then_restore() -> Outcome {
    let (h, report) = run_pair("zlib-restore/history.json", "usage/aewan.json", "");
    let got = incompatible_members(&h, report.as_ref());
    let shown: Vec<String> = got.iter().map(ToString::to_string).collect();
    check(
        got == versions(&["1.2.5.2"]),
        format!("gzgetc importer -> {{{}}}", shown.join(", ")),
    )
}

fn spot_rows() -> Outcome {
    let manifest = load_manifest(&fixture("repos/table4.json")).map_err(|e| e.to_string())?;
    let out = scan(&manifest, 0);
    let mut details = Vec::new();
    let mut ok = out.errors.is_empty();
    for (app, expected) in [
        ("qgis-providers", "[3.5.9, 3.7.6.3]"),
        ("unalz", "[1.2.7, V_last]"),
        ("alsa-utils", "[1.2.1, V_last]"),
        ("geeqie", "[V_init, 2.51.0]"),
    ] {
        let got = table_row(&out.reports, app).map_or("{}".into(), |r| r.incompatible.to_string());
        ok &= got == expected;
        details.push(format!("{app} {got}"));
    }
    check(ok, details.join(", "))
}

fn two_change_union() -> Outcome {
    let (_, report) = run_pair("pcre/history.json", "usage/mongodb.json", "");
    let got = report.map_or("{}".into(), |r| r.incompatible.to_string());
    check(got == "[V_init, 5.0] ∪ [7.0, V_last]", got)
}

fn rule_table() -> Outcome {
    let mut passed = 0;
    let mut failed = Vec::new();
    for kind in ChangeKind::ALL {
        let c = case(kind);
        let records: Vec<_> = collect_incompatible_changes(&c.history)
            .into_iter()
            .filter(|ic| ic.kind == kind)
            .collect();
        let ok = !records.is_empty()
            && records.iter().all(|ic| {
                let out = detect(&c.app, &VersionRange::any(), ic, &c.history);
                match c.expected {
                    Side::Undecidable => out.undecidable && out.bug_version().is_none(),
                    _ => !out.undecidable && out.bug_version() == expected_version(&c).as_ref(),
                }
            });
        if ok {
            passed += 1;
        } else {
            failed.push(kind.id());
        }
    }
    check(
        failed.is_empty(),
        format!("{passed}/18 kinds, failing {failed:?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for seed in 0..ORACLE_INSTANCES {
        let inst = generate(seed);
        if pipeline(&inst) != oracle(&inst) {
            mismatches.push(seed);
        }
    }
    let elapsed = start.elapsed();
    check(
        ORACLE_INSTANCES >= ORACLE_MIN_INSTANCES
            && within_mismatch_tolerance(mismatches.len())
            && elapsed < ORACLE_BUDGET,
        format!(
            "{ORACLE_INSTANCES} instances, {} mismatches {mismatches:?}, {elapsed:.2?}",
            mismatches.len()
        ),
    )
}

fn version_corpus() -> Outcome {
    let text = fs::read_to_string(fixture("version-corpus.txt")).map_err(|e| e.to_string())?;
    let mut total = 0;
    let mut wrong = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let want = match parts[1] {
            "<" => Ordering::Less,
            "=" => Ordering::Equal,
            _ => Ordering::Greater,
        };
        total += 1;
        if compare_versions(&v(parts[0]), &v(parts[2])) != want {
            wrong.push(line.to_string());
        }
    }
    check(
        total >= VERSION_CORPUS_MIN_PAIRS && wrong.is_empty(),
        format!("{}/{total} pairs agree {wrong:?}", total - wrong.len()),
    )
}

fn elf_goldens() -> Outcome {
    let mut checked = 0;
    let mut versioned = false;
    let mut wrong = Vec::new();
    for name in ["alsa-utils", "three-undef-two-def", "static", "gcc-hello"] {
        let golden: BTreeSet<SymbolKey> = serde_json::from_str::<Vec<SymbolKey>>(
            &fs::read_to_string(fixture(&format!("elf/{name}.imports.json")))
                .map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect();
        let got = read_elf_imports_file(&fixture(&format!("elf/{name}.bin")))
            .map_err(|e| e.to_string())?;
        versioned |= golden.iter().any(|k| k.version_tag.is_some());
        checked += 1;
        if got != golden {
            wrong.push(name);
        }
    }
    check(
        checked >= ELF_MIN_GOLDENS && versioned && wrong.is_empty(),
        format!("{checked} binaries, mismatching {wrong:?}"),
    )
}

fn cli_contract() -> Outcome {
    let run = |repo: &str, format: &str| {
        Command::new(env!("CARGO_BIN_EXE_abirange"))
            .args(["scan", &fixture(repo).to_string_lossy(), "--format", format])
            .output()
            .expect("cli runs")
    };
    let first = run("repos/combined.json", "json");
    let second = run("repos/combined.json", "json");
    let parsed: ScanOutput = serde_json::from_slice(&first.stdout).map_err(|e| e.to_string())?;
    let mut reserialized = serde_json::to_string_pretty(&parsed).map_err(|e| e.to_string())?;
    reserialized.push('\n');
    let text_a = run("repos/combined.json", "text");
    let text_b = run("repos/combined.json", "text");
    let clean = run("repos/clean.json", "json");
    let codes = (first.status.code(), clean.status.code());
    check(
        codes == (Some(1), Some(0))
            && reserialized.as_bytes() == first.stdout
            && first.stdout == second.stdout
            && text_a.stdout == text_b.stdout
            && parsed.has_bugs(),
        format!(
            "exit codes combined={:?} clean={:?}, round-trip {}, deterministic {}",
            codes.0,
            codes.1,
            reserialized.as_bytes() == first.stdout,
            first.stdout == second.stdout && text_a.stdout == text_b.stdout
        ),
    )
}

#[allow(clippy::absurd_extreme_comparisons)]
fn within_mismatch_tolerance(n: usize) -> bool {
    n <= ORACLE_MAX_MISMATCHES
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("motivating example", motivating_example),
        ("remove-then-restore", remove_then_restore),
        ("spot fixtures", spot_rows),
        ("two-change union", two_change_union),
        ("rule-table coverage", rule_table),
        ("oracle equivalence", oracle_equivalence),
        ("version comparator", version_corpus),
        ("ELF import reader", elf_goldens),
        ("CLI contract", cli_contract),
    ];
    let mut failures = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {verdict} {name}: {detail}", n + 1);
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
