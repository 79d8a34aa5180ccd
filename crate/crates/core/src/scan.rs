//! Runs change collection, detection and suggestion over every
//! (application, library) pair of a small repository.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abi::{load_history, LibraryHistory, SymbolKey};
use crate::detect::detect;
use crate::diff::{collect_incompatible_changes, ElementRef, IncompatibleChange};
use crate::error::LoadError;
use crate::interval::IntervalSet;
use crate::suggest::{suggest_incompatible_versions, union_over_changes};
use crate::usage::{
    load_usage_facts, read_elf_imports_file, scan_source_file, AppUsage, UsageFact,
};
use crate::version::{parse_depends, Version, VersionRange};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    #[serde(default)]
    libraries: Vec<BindingDoc>,
    #[serde(default)]
    packages: Vec<PackageDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BindingDoc {
    package: String,
    library: String,
    history: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackageDoc {
    name: String,
    version: String,
    #[serde(default)]
    depends: String,
    #[serde(default)]
    usage: UsageSourcesDoc,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UsageSourcesDoc {
    facts: Option<PathBuf>,
    #[serde(default)]
    binaries: Vec<PathBuf>,
    #[serde(default)]
    sources: Vec<PathBuf>,
}

/// Maps a binary package name to the history of the library it ships.
#[derive(Debug, Clone)]
pub struct LibraryBinding {
    pub package: String,
    pub library: String,
    pub history: PathBuf,
}

/// Where an application's usage comes from. Paths are already resolved
/// against the manifest directory.
#[derive(Debug, Clone, Default)]
pub struct UsageSources {
    pub facts: Option<PathBuf>,
    pub binaries: Vec<PathBuf>,
    pub sources: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AppPackage {
    pub name: String,
    pub version: Version,
    pub depends: Vec<(String, VersionRange)>,
    pub usage: UsageSources,
}

impl AppPackage {
    /// Conjunction of every constraint on `package`, or `None` if the
    /// package is not a declared dependency.
    pub fn requirement(&self, package: &str) -> Option<VersionRange> {
        self.depends
            .iter()
            .filter(|(name, _)| name == package)
            .map(|(_, range)| range)
            .fold(None, |acc: Option<VersionRange>, r| {
                Some(acc.map_or_else(|| r.clone(), |a| a.and(r)))
            })
    }
}

#[derive(Debug, Clone)]
pub struct RepoManifest {
    pub libraries: Vec<LibraryBinding>,
    pub packages: Vec<AppPackage>,
}

impl RepoManifest {
    fn from_doc(doc: ManifestDoc, origin: &Path) -> Result<Self, LoadError> {
        let base = origin.parent().unwrap_or(Path::new("."));
        let mut bound = BTreeSet::new();
        let mut libraries = Vec::new();
        for (i, b) in doc.libraries.into_iter().enumerate() {
            if !bound.insert(b.package.clone()) {
                return Err(LoadError::schema(
                    origin,
                    format!("libraries[{i}].package"),
                    format!("package {:?} is bound more than once", b.package),
                ));
            }
            let history = base.join(&b.history);
            if !history.is_file() {
                return Err(LoadError::schema(
                    origin,
                    format!("libraries[{i}].history"),
                    format!("no history manifest at {}", history.display()),
                ));
            }
            libraries.push(LibraryBinding {
                package: b.package,
                library: b.library,
                history,
            });
        }
        let mut names = BTreeSet::new();
        let mut packages = Vec::new();
        for (i, p) in doc.packages.into_iter().enumerate() {
            if !names.insert(p.name.clone()) {
                return Err(LoadError::schema(
                    origin,
                    format!("packages[{i}].name"),
                    format!("duplicate package {:?}", p.name),
                ));
            }
            let version = Version::parse(&p.version).map_err(|e| {
                LoadError::schema(origin, format!("packages[{i}].version"), e.to_string())
            })?;
            let depends = parse_depends(&p.depends).map_err(|e| {
                LoadError::schema(origin, format!("packages[{i}].depends"), e.to_string())
            })?;
            let join = |paths: Vec<PathBuf>| paths.into_iter().map(|p| base.join(p)).collect();
            packages.push(AppPackage {
                name: p.name,
                version,
                depends,
                usage: UsageSources {
                    facts: p.usage.facts.map(|f| base.join(f)),
                    binaries: join(p.usage.binaries),
                    sources: join(p.usage.sources),
                },
            });
        }
        Ok(RepoManifest {
            libraries,
            packages,
        })
    }
}

pub fn load_manifest(path: &Path) -> Result<RepoManifest, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: ManifestDoc = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    RepoManifest::from_doc(doc, path)
}

/// One detected bug: a change, the version the application cannot use, and
/// every release that looks the same as that version for the changed element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub change: IncompatibleChange,
    pub summary: String,
    pub bug_version: Version,
    pub incompatible: IntervalSet,
}

/// A change whose incompatible side could not be determined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub change: IncompatibleChange,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepBugReport {
    pub app: String,
    pub app_version: Version,
    pub library: String,
    pub library_package: String,
    pub required: VersionRange,
    pub findings: Vec<Finding>,
    /// Union over all findings.
    pub incompatible: IntervalSet,
    pub warnings: Vec<Warning>,
}

impl DepBugReport {
    pub fn has_bugs(&self) -> bool {
        !self.findings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairError {
    pub app: String,
    pub library_package: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOutput {
    pub reports: Vec<DepBugReport>,
    pub errors: Vec<PairError>,
}

impl ScanOutput {
    pub fn has_bugs(&self) -> bool {
        self.reports.iter().any(DepBugReport::has_bugs)
    }

    /// 0 when clean, 1 when bugs were found, 2 when any pair failed.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            2
        } else if self.has_bugs() {
            1
        } else {
            0
        }
    }
}

/// Runs detection and suggestion for one application against one library.
/// Returns `None` when there is nothing to report.
pub fn check_pair(
    app: &AppUsage,
    library_package: &str,
    required: &VersionRange,
    h: &LibraryHistory,
    changes: &BTreeSet<IncompatibleChange>,
) -> Option<DepBugReport> {
    let mut findings: Vec<Finding> = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    for ic in changes {
        let outcome = detect(app, required, ic, h);
        if outcome.undecidable {
            warnings.push(Warning {
                change: ic.clone(),
                reason: outcome.reason,
            });
            continue;
        }
        let Some(v_bug) = outcome.bug_version() else {
            continue;
        };
        // Type changes are recorded once per direction with the same verdict.
        let key = (&ic.v_old, &ic.v_new, ic.kind, &ic.element, v_bug.clone());
        if !seen.insert(key) {
            continue;
        }
        findings.push(Finding {
            change: ic.clone(),
            summary: ic.describe(),
            bug_version: v_bug.clone(),
            incompatible: suggest_incompatible_versions(h, ic, v_bug, required),
        });
    }
    warnings.dedup_by(|a, b| {
        a.change.v_old == b.change.v_old
            && a.change.v_new == b.change.v_new
            && a.change.kind == b.change.kind
            && a.change.element == b.change.element
    });
    if findings.is_empty() && warnings.is_empty() {
        return None;
    }
    let sets: Vec<IntervalSet> = findings.iter().map(|f| f.incompatible.clone()).collect();
    Some(DepBugReport {
        app: app.app.clone(),
        app_version: app.app_version.clone(),
        library: h.library().to_string(),
        library_package: library_package.to_string(),
        required: required.clone(),
        incompatible: union_over_changes(&h.release_slots(), &sets),
        findings,
        warnings,
    })
}

/// Builds the usage model of one package for one library's changes.
pub fn gather_usage(
    pkg: &AppPackage,
    changes: &BTreeSet<IncompatibleChange>,
) -> Result<AppUsage, LoadError> {
    let mut usage = AppUsage::new(pkg.name.clone(), pkg.version.clone());
    if let Some(path) = &pkg.usage.facts {
        let declared = load_usage_facts(path)?;
        usage.imports = declared.imports;
        usage.facts = declared.facts;
    }
    for bin in &pkg.usage.binaries {
        usage.imports.extend(read_elf_imports_file(bin)?);
    }
    if !pkg.usage.sources.is_empty() {
        let interest: BTreeSet<ElementRef> = changes.iter().map(|c| c.element.clone()).collect();
        let mut scanned = BTreeSet::new();
        for src in &pkg.usage.sources {
            scanned.extend(scan_source_file(src, &interest)?);
        }
        // Without a binary to read, a symbol the sources call or read is
        // taken as an unversioned import.
        if pkg.usage.binaries.is_empty() {
            usage.imports.extend(
                scanned
                    .iter()
                    .filter_map(UsageFact::symbol)
                    .map(SymbolKey::unversioned),
            );
        }
        usage.facts.extend(scanned);
    }
    usage
        .validate()
        .map_err(|message| LoadError::schema(&pkg.name, "usage", message))?;
    Ok(usage)
}

type Loaded = Result<(LibraryHistory, BTreeSet<IncompatibleChange>), String>;

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
}

/// Scans every declared (application, bound library) pair. `jobs == 0`
/// lets the pool pick its own size.
pub fn scan(manifest: &RepoManifest, jobs: usize) -> ScanOutput {
    let mut pairs: Vec<(&AppPackage, &LibraryBinding, VersionRange)> = Vec::new();
    for pkg in &manifest.packages {
        for lib in &manifest.libraries {
            if let Some(required) = pkg.requirement(&lib.package) {
                pairs.push((pkg, lib, required));
            }
        }
    }
    pairs.sort_by(|a, b| (&a.0.name, &a.1.package).cmp(&(&b.0.name, &b.1.package)));

    let paths: BTreeSet<&PathBuf> = pairs.iter().map(|(_, lib, _)| &lib.history).collect();
    let workers = pool(jobs);
    let histories: BTreeMap<&PathBuf, Loaded> = workers.install(|| {
        paths
            .into_par_iter()
            .map(|p| {
                let loaded = load_history(p).map(|h| {
                    let changes = collect_incompatible_changes(&h);
                    (h, changes)
                });
                (p, loaded.map_err(|e| e.to_string()))
            })
            .collect()
    });

    let results: Vec<Result<Option<DepBugReport>, PairError>> = workers.install(|| {
        pairs
            .par_iter()
            .map(|(pkg, lib, required)| {
                let fail = |error: String| PairError {
                    app: pkg.name.clone(),
                    library_package: lib.package.clone(),
                    error,
                };
                let (h, changes) = histories[&lib.history]
                    .as_ref()
                    .map_err(|e| fail(e.clone()))?;
                if h.library() != lib.library {
                    return Err(fail(format!(
                        "binding names library {:?} but the history is for {:?}",
                        lib.library,
                        h.library()
                    )));
                }
                let usage = gather_usage(pkg, changes).map_err(|e| fail(e.to_string()))?;
                Ok(check_pair(&usage, &lib.package, required, h, changes))
            })
            .collect()
    });

    let mut out = ScanOutput::default();
    for r in results {
        match r {
            Ok(Some(report)) => out.reports.push(report),
            Ok(None) => {}
            Err(e) => out.errors.push(e),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

fn render_table(rows: &[[String; 5]]) -> String {
    let width = |col: usize| {
        rows.iter()
            .map(|r| r[col].chars().count())
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..5).map(width).collect();
    let mut out = String::new();
    for (n, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if n == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

/// Deterministic rendering of a scan result.
pub fn emit_report(output: &ScanOutput, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(output).expect("report serializes");
            text.push('\n');
            text.into_bytes()
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let mut rows = vec![[
                "Application Package".to_string(),
                "Library Package".to_string(),
                "Change Versions".to_string(),
                "Change Symbol/Data-type".to_string(),
                "Incompatible Versions".to_string(),
            ]];
            for r in output.reports.iter().filter(|r| r.has_bugs()) {
                let versions: Vec<String> = r
                    .findings
                    .iter()
                    .map(|f| format!("<{}, {}>", f.change.v_old, f.change.v_new))
                    .collect();
                let changes: Vec<&str> = r.findings.iter().map(|f| f.summary.as_str()).collect();
                rows.push([
                    r.app.clone(),
                    r.library_package.clone(),
                    versions.join("; "),
                    changes.join("; "),
                    r.incompatible.to_string(),
                ]);
            }
            if rows.len() == 1 {
                out.push_str("no dependency bugs found\n");
            } else {
                out.push_str(&render_table(&rows));
            }
            for r in &output.reports {
                for w in &r.warnings {
                    let _ = writeln!(
                        out,
                        "warning: {} / {}: {}: undecidable: {}",
                        r.app, r.library_package, w.change, w.reason
                    );
                }
            }
            for e in &output.errors {
                let _ = writeln!(out, "error: {} / {}: {}", e.app, e.library_package, e.error);
            }
            out.into_bytes()
        }
    }
}
