//! Helpers shared by the integration test targets.

#![allow(dead_code)]

pub mod generate;
pub mod kinds;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use abirange_core::abi::{
    load_history, AbiSnapshot, LibraryHistory, MemberDoc, SnapshotDoc, SymbolDoc, SymbolKind,
    TypeDoc, TypeKind,
};
use abirange_core::diff::collect_incompatible_changes;
use abirange_core::scan::{check_pair, DepBugReport};
use abirange_core::usage::load_usage_facts;
use abirange_core::{Version, VersionRange};

pub fn fixtures_dir() -> PathBuf {
    // Both the core and cli crates sit under crates/.
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

pub fn v(s: &str) -> Version {
    Version::parse(s).unwrap_or_else(|e| panic!("bad version {s:?}: {e}"))
}

pub fn versions(items: &[&str]) -> BTreeSet<Version> {
    items.iter().map(|s| v(s)).collect()
}

pub fn range(text: &str) -> VersionRange {
    if text.is_empty() {
        VersionRange::any()
    } else {
        VersionRange::parse(text).unwrap_or_else(|e| panic!("bad range {text:?}: {e}"))
    }
}

/// Detection and suggestion for one history and one usage-facts file.
pub fn run_pair(
    history: &str,
    usage: &str,
    depends: &str,
) -> (LibraryHistory, Option<DepBugReport>) {
    let h = load_history(&fixture(history)).expect("history loads");
    let app = load_usage_facts(&fixture(usage)).expect("usage loads");
    let changes = collect_incompatible_changes(&h);
    let report = check_pair(&app, h.library(), &range(depends), &h, &changes);
    (h, report)
}

/// Concrete released versions covered by a report's union.
pub fn incompatible_members(
    h: &LibraryHistory,
    report: Option<&DepBugReport>,
) -> BTreeSet<Version> {
    report
        .map(|r| {
            r.incompatible
                .members(&h.release_slots())
                .into_iter()
                .collect()
        })
        .unwrap_or_default()
}

pub fn func(name: &str, ret: Option<&str>, params: &[&str]) -> SymbolDoc {
    SymbolDoc {
        name: name.to_string(),
        version_tag: None,
        default: false,
        kind: SymbolKind::Function,
        ret: ret.map(str::to_string),
        params: params.iter().map(|p| p.to_string()).collect(),
        var_type: None,
    }
}

pub fn var(name: &str, ty: &str) -> SymbolDoc {
    SymbolDoc {
        name: name.to_string(),
        version_tag: None,
        default: false,
        kind: SymbolKind::Variable,
        ret: None,
        params: Vec::new(),
        var_type: Some(ty.to_string()),
    }
}

pub fn enum_type(name: &str, members: &[(&str, i64)]) -> TypeDoc {
    TypeDoc {
        name: name.to_string(),
        kind: TypeKind::Enum,
        members: members
            .iter()
            .map(|(m, value)| MemberDoc {
                name: m.to_string(),
                value: Some(*value),
                ty: None,
            })
            .collect(),
    }
}

pub fn struct_type(name: &str, fields: &[(&str, &str)]) -> TypeDoc {
    TypeDoc {
        name: name.to_string(),
        kind: TypeKind::Struct,
        members: fields
            .iter()
            .map(|(m, ty)| MemberDoc {
                name: m.to_string(),
                value: None,
                ty: Some(ty.to_string()),
            })
            .collect(),
    }
}

pub fn snapshot(
    library: &str,
    version: &str,
    symbols: Vec<SymbolDoc>,
    types: Vec<TypeDoc>,
) -> AbiSnapshot {
    let doc = SnapshotDoc {
        library: library.to_string(),
        version: version.to_string(),
        soname: format!("lib{library}.so.1"),
        symbols,
        types,
        opaque: Vec::new(),
    };
    AbiSnapshot::from_doc(doc, Path::new("<test>")).expect("test snapshot is valid")
}
