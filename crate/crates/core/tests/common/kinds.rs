//! One minimal two-release fixture per change kind.

use abirange_core::abi::{LibraryHistory, SymbolDoc, TypeDoc};
use abirange_core::usage::UsageDoc;
use abirange_core::{AppUsage, ChangeKind, SymbolKey};

use super::{enum_type, func, snapshot, struct_type, v, var};

/// Side the rule table assigns to a kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Old,
    New,
    Undecidable,
}

pub struct KindCase {
    pub kind: ChangeKind,
    pub history: LibraryHistory,
    pub app: AppUsage,
    pub expected: Side,
}

fn app(imports: &[&str], facts: serde_json::Value) -> AppUsage {
    let doc = UsageDoc {
        app: "probe".into(),
        version: "1.0".into(),
        imports: imports.iter().map(|n| SymbolKey::unversioned(*n)).collect(),
        facts: serde_json::from_value(facts).expect("facts parse"),
    };
    doc.into_usage(std::path::Path::new("<test>"))
        .expect("usage is valid")
}

type Release = (Vec<SymbolDoc>, Vec<TypeDoc>);

fn history(old: Release, new: Release) -> LibraryHistory {
    LibraryHistory::new(
        "probe",
        vec![
            snapshot("probe", "1.0", old.0, old.1),
            snapshot("probe", "2.0", new.0, new.1),
        ],
    )
    .expect("history is valid")
}

fn with_enum(members: &[(&str, i64)]) -> Release {
    (
        vec![func("use_e", None, &["E"])],
        vec![enum_type("E", members)],
    )
}

fn with_struct(fields: &[(&str, &str)]) -> Release {
    (
        vec![func("use_s", None, &["S *"])],
        vec![struct_type("S", fields)],
    )
}

fn syms(s: Vec<SymbolDoc>) -> Release {
    (s, Vec::new())
}

pub fn case(kind: ChangeKind) -> KindCase {
    use serde_json::json;
    use ChangeKind::*;
    let (history, app, expected) = match kind {
        EnumAddsMember => (
            history(with_enum(&[("A", 0)]), with_enum(&[("A", 0), ("B", 1)])),
            app(
                &["use_e"],
                json!([{"fact": "uses_enum_member", "type": "E", "member": "B"}]),
            ),
            Side::Old,
        ),
        EnumRemovesMember => (
            history(with_enum(&[("A", 0), ("B", 1)]), with_enum(&[("A", 0)])),
            app(
                &["use_e"],
                json!([{"fact": "uses_enum_member", "type": "E", "member": "B"}]),
            ),
            Side::New,
        ),
        EnumChangesMemberValue => (
            history(
                with_enum(&[("A", 0), ("B", 1)]),
                with_enum(&[("A", 0), ("B", 2)]),
            ),
            app(
                &["use_e"],
                json!([{"fact": "uses_enum_member", "type": "E", "member": "B"}]),
            ),
            Side::Undecidable,
        ),
        StructAddsField => (
            history(
                with_struct(&[("a", "int")]),
                with_struct(&[("a", "int"), ("b", "int")]),
            ),
            app(
                &["use_s"],
                json!([{"fact": "uses_field", "type": "S", "field": "b"}]),
            ),
            Side::Old,
        ),
        StructRemovesField => (
            history(
                with_struct(&[("a", "int"), ("b", "int")]),
                with_struct(&[("a", "int")]),
            ),
            app(
                &["use_s"],
                json!([{"fact": "uses_field", "type": "S", "field": "b"}]),
            ),
            Side::New,
        ),
        StructChangesFieldType => (
            history(with_struct(&[("a", "int")]), with_struct(&[("a", "long")])),
            app(
                &["use_s"],
                json!([{"fact": "field_type_hint", "type": "S", "field": "a", "type_text": "int"}]),
            ),
            Side::New,
        ),
        StructChangesFieldOrder => (
            history(
                with_struct(&[("a", "int"), ("b", "int")]),
                with_struct(&[("b", "int"), ("a", "int")]),
            ),
            app(
                &["use_s"],
                json!([{"fact": "uses_field", "type": "S", "field": "a"}]),
            ),
            Side::Undecidable,
        ),
        VariableAdds => (
            history(syms(vec![]), syms(vec![var("g", "int")])),
            app(&["g"], json!([])),
            Side::Old,
        ),
        VariableRemoves => (
            history(syms(vec![var("g", "int")]), syms(vec![])),
            app(&["g"], json!([])),
            Side::New,
        ),
        VariableChangesType => (
            history(syms(vec![var("g", "int")]), syms(vec![var("g", "long")])),
            app(
                &["g"],
                json!([{"fact": "var_type_hint", "symbol": "g", "type_text": "int"}]),
            ),
            Side::New,
        ),
        FunctionAdds => (
            history(syms(vec![]), syms(vec![func("f", None, &[])])),
            app(
                &["f"],
                json!([{"fact": "calls", "symbol": "f", "arity": 0}]),
            ),
            Side::Old,
        ),
        FunctionRemoves => (
            history(syms(vec![func("f", None, &[])]), syms(vec![])),
            app(
                &["f"],
                json!([{"fact": "calls", "symbol": "f", "arity": 0}]),
            ),
            Side::New,
        ),
        FunctionAddsParam => (
            history(
                syms(vec![func("f", None, &["int"])]),
                syms(vec![func("f", None, &["int", "int"])]),
            ),
            app(
                &["f"],
                json!([{"fact": "calls", "symbol": "f", "arity": 2}]),
            ),
            Side::Old,
        ),
        FunctionRemovesParam => (
            history(
                syms(vec![func("f", None, &["int", "int"])]),
                syms(vec![func("f", None, &["int"])]),
            ),
            app(
                &["f"],
                json!([{"fact": "calls", "symbol": "f", "arity": 2}]),
            ),
            Side::New,
        ),
        FunctionChangesParamType => (
            history(
                syms(vec![func("f", None, &["int"])]),
                syms(vec![func("f", None, &["long"])]),
            ),
            app(
                &["f"],
                json!([
                    {"fact": "calls", "symbol": "f", "arity": 1},
                    {"fact": "param_type_hint", "symbol": "f", "index": 0, "type_text": "int"}
                ]),
            ),
            Side::New,
        ),
        FunctionAddsReturn => (
            history(
                syms(vec![func("f", None, &[])]),
                syms(vec![func("f", Some("int"), &[])]),
            ),
            app(
                &["f"],
                json!([{"fact": "uses_return_value", "symbol": "f"}]),
            ),
            Side::Old,
        ),
        FunctionRemovesReturn => (
            history(
                syms(vec![func("f", Some("int"), &[])]),
                syms(vec![func("f", None, &[])]),
            ),
            app(
                &["f"],
                json!([{"fact": "uses_return_value", "symbol": "f"}]),
            ),
            Side::New,
        ),
        FunctionChangesReturnType => (
            history(
                syms(vec![func("f", Some("int"), &[])]),
                syms(vec![func("f", Some("long"), &[])]),
            ),
            app(
                &["f"],
                json!([{"fact": "return_type_hint", "symbol": "f", "type_text": "int"}]),
            ),
            Side::New,
        ),
    };
    KindCase {
        kind,
        history,
        app,
        expected,
    }
}

/// The version the rule table points at for a case.
pub fn expected_version(c: &KindCase) -> Option<abirange_core::Version> {
    match c.expected {
        Side::Old => Some(v("1.0")),
        Side::New => Some(v("2.0")),
        Side::Undecidable => None,
    }
}
