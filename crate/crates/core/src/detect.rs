//! Per-(application, change) detection: a filtering phase followed by the
//! rule table that decides which side of a change the application cannot
//! run against.

use serde::{Deserialize, Serialize};

use crate::abi::{symbols_using_type, AbiSnapshot, LibraryHistory, TypeRef};
use crate::diff::{ChangeDetail, ChangeKind, ElementRef, IncompatibleChange};
use crate::usage::{AppUsage, UsageFact};
use crate::version::{Version, VersionRange};

/// Outcome of checking one change against one application. At most one of
/// `bug_old`/`bug_new` is set, and neither is set when `undecidable`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectOutcome {
    pub bug_old: Option<Version>,
    pub bug_new: Option<Version>,
    pub undecidable: bool,
    pub reason: String,
}

impl DetectOutcome {
    fn none(reason: impl Into<String>) -> Self {
        DetectOutcome {
            bug_old: None,
            bug_new: None,
            undecidable: false,
            reason: reason.into(),
        }
    }

    fn undecidable(reason: impl Into<String>) -> Self {
        DetectOutcome {
            undecidable: true,
            ..Self::none(reason)
        }
    }

    fn old(ic: &IncompatibleChange, reason: impl Into<String>) -> Self {
        DetectOutcome {
            bug_old: Some(ic.v_old.clone()),
            ..Self::none(reason)
        }
    }

    fn new(ic: &IncompatibleChange, reason: impl Into<String>) -> Self {
        DetectOutcome {
            bug_new: Some(ic.v_new.clone()),
            ..Self::none(reason)
        }
    }

    /// The detected bug version, if any.
    pub fn bug_version(&self) -> Option<&Version> {
        self.bug_old.as_ref().or(self.bug_new.as_ref())
    }
}

fn imports_any_symbol_of(app: &AppUsage, s: &AbiSnapshot, element: &ElementRef) -> bool {
    match element {
        ElementRef::Symbol(key) => s
            .symbol(key)
            .is_some_and(|def| app.imports_symbol(key, def.is_default)),
        ElementRef::TypeMember { type_name, .. } => symbols_using_type(s, type_name)
            .map(|keys| {
                keys.iter().any(|k| {
                    s.symbol(k)
                        .is_some_and(|def| app.imports_symbol(k, def.is_default))
                })
            })
            .unwrap_or(false),
    }
}

/// Whether the change touches the required range and an element the
/// application actually links against.
pub fn filter_phase(
    app: &AppUsage,
    required: &VersionRange,
    ic: &IncompatibleChange,
    h: &LibraryHistory,
) -> bool {
    if !required.contains(&ic.v_old) && !required.contains(&ic.v_new) {
        return false;
    }
    [&ic.v_old, &ic.v_new]
        .into_iter()
        .filter_map(|v| h.snapshot(v))
        .any(|s| imports_any_symbol_of(app, s, &ic.element))
}

fn symbol_name(ic: &IncompatibleChange) -> Option<&str> {
    match &ic.element {
        ElementRef::Symbol(key) => Some(&key.name),
        ElementRef::TypeMember { .. } => None,
    }
}

fn member_of(ic: &IncompatibleChange) -> Option<(&str, &str)> {
    match &ic.element {
        ElementRef::TypeMember {
            type_name,
            member: Some(m),
        } => Some((type_name, m)),
        _ => None,
    }
}

/// Whether the application touches the parameter slot `index` of `symbol`.
fn uses_param(app: &AppUsage, symbol: &str, index: usize) -> bool {
    app.facts_for_symbol(symbol).any(|f| match f {
        UsageFact::UsesParam { index: i, .. } | UsageFact::ParamTypeHint { index: i, .. } => {
            *i == index
        }
        UsageFact::Calls { arity, .. } => *arity > index,
        _ => false,
    })
}

fn uses_return(app: &AppUsage, symbol: &str) -> bool {
    app.facts_for_symbol(symbol).any(|f| {
        matches!(
            f,
            UsageFact::UsesReturnValue { .. } | UsageFact::ReturnTypeHint { .. }
        )
    })
}

fn uses_member(app: &AppUsage, type_name: &str, member: &str, enumerator: bool) -> bool {
    app.facts_for_member(type_name, member).any(|f| match f {
        UsageFact::UsesEnumMember { .. } => enumerator,
        UsageFact::UsesField { .. } | UsageFact::FieldTypeHint { .. } => !enumerator,
        _ => false,
    })
}

/// Type hints the application recorded for the element of a type change.
fn type_hints<'a>(ic: &IncompatibleChange, app: &'a AppUsage) -> Vec<&'a TypeRef> {
    let symbol = symbol_name(ic);
    let member = member_of(ic);
    app.facts
        .iter()
        .filter_map(|f| match (f, &ic.detail) {
            (
                UsageFact::FieldTypeHint {
                    type_name,
                    field,
                    type_text,
                },
                ChangeDetail::FieldType { .. },
            ) if member == Some((type_name.as_str(), field.as_str())) => Some(type_text),
            (
                UsageFact::VarTypeHint {
                    symbol: s,
                    type_text,
                },
                ChangeDetail::VariableType { .. },
            )
            | (
                UsageFact::ReturnTypeHint {
                    symbol: s,
                    type_text,
                },
                ChangeDetail::ReturnType { .. },
            ) if symbol == Some(s.as_str()) => Some(type_text),
            (
                UsageFact::ParamTypeHint {
                    symbol: s,
                    index,
                    type_text,
                },
                ChangeDetail::ParamType { index: changed, .. },
            ) if symbol == Some(s.as_str()) && index == changed => Some(type_text),
            _ => None,
        })
        .collect()
}

fn decide_type_change(ic: &IncompatibleChange, app: &AppUsage) -> DetectOutcome {
    let Some((old, new)) = ic.detail.type_texts() else {
        return DetectOutcome::undecidable("change record carries no type texts");
    };
    let hints = type_hints(ic, app);
    if hints.is_empty() {
        return DetectOutcome::undecidable(format!(
            "no type hint for {}; cannot tell which side the application was built against",
            ic.element
        ));
    }
    let matches_old = hints.contains(&old);
    let matches_new = hints.contains(&new);
    match (matches_old, matches_new) {
        (true, false) => DetectOutcome::new(ic, format!("usage matches the old type {old}")),
        (false, true) => DetectOutcome::old(ic, format!("usage matches the new type {new}")),
        (true, true) => DetectOutcome::undecidable("type hints match both sides"),
        (false, false) => {
            DetectOutcome::undecidable(format!("type hints match neither {old} nor {new}"))
        }
    }
}

/// Applies the rule table to a change the filtering phase let through.
pub fn decide_side(ic: &IncompatibleChange, app: &AppUsage) -> DetectOutcome {
    use ChangeKind::*;
    let symbol = symbol_name(ic).unwrap_or_default();
    let member = member_of(ic);
    let param_index = match &ic.detail {
        ChangeDetail::Param { index, .. } => Some(*index),
        _ => None,
    };
    let unused = || DetectOutcome::none("usage does not touch the changed aspect");
    match ic.kind {
        EnumAddsMember | StructAddsField => match member {
            Some((t, m)) if uses_member(app, t, m, ic.kind == EnumAddsMember) => {
                DetectOutcome::old(ic, format!("uses {t}::{m}, absent in the old version"))
            }
            _ => unused(),
        },
        EnumRemovesMember | StructRemovesField => match member {
            Some((t, m)) if uses_member(app, t, m, ic.kind == EnumRemovesMember) => {
                DetectOutcome::new(ic, format!("uses {t}::{m}, absent in the new version"))
            }
            _ => unused(),
        },
        FunctionAddsParam => match param_index {
            Some(i) if uses_param(app, symbol, i) => DetectOutcome::old(
                ic,
                format!("passes parameter {i}, absent in the old version"),
            ),
            _ => unused(),
        },
        FunctionRemovesParam => match param_index {
            Some(i) if uses_param(app, symbol, i) => DetectOutcome::new(
                ic,
                format!("passes parameter {i}, absent in the new version"),
            ),
            _ => unused(),
        },
        FunctionAddsReturn if uses_return(app, symbol) => {
            DetectOutcome::old(ic, "uses the return value, void in the old version")
        }
        FunctionRemovesReturn if uses_return(app, symbol) => {
            DetectOutcome::new(ic, "uses the return value, void in the new version")
        }
        FunctionAddsReturn | FunctionRemovesReturn => unused(),
        VariableAdds | FunctionAdds => {
            DetectOutcome::old(ic, "imports a symbol absent in the old version")
        }
        VariableRemoves | FunctionRemoves => {
            DetectOutcome::new(ic, "imports a symbol absent in the new version")
        }
        StructChangesFieldType
        | VariableChangesType
        | FunctionChangesParamType
        | FunctionChangesReturnType => decide_type_change(ic, app),
        EnumChangesMemberValue | StructChangesFieldOrder => DetectOutcome::undecidable(
            "member values and field order cannot be inferred from usage",
        ),
    }
}

/// Filter, decide, then drop any bug version outside the required range.
pub fn detect(
    app: &AppUsage,
    required: &VersionRange,
    ic: &IncompatibleChange,
    h: &LibraryHistory,
) -> DetectOutcome {
    if !filter_phase(app, required, ic, h) {
        return DetectOutcome::none("filtered");
    }
    let mut outcome = decide_side(ic, app);
    if outcome.bug_version().is_some_and(|v| !required.contains(v)) {
        outcome.bug_old = None;
        outcome.bug_new = None;
        outcome.reason = format!("{}; bug version outside the required range", outcome.reason);
    }
    outcome
}
