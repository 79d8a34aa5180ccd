//! Classified differences between two snapshots of the same library.
//!
//! Only backward regressions are computed directly. A forward
//! incompatibility from `a` to `b` is a backward regression from `b` to `a`,
//! re-labelled so that "removes" kinds become the matching "adds" kinds.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abi::{
    AbiSnapshot, LibraryHistory, MemberValue, Signature, SymbolDef, SymbolKey, SymbolKind, TypeDef,
    TypeKind, TypeRef,
};
use crate::error::AbiError;
use crate::version::Version;

/// The eighteen kinds of incompatible change, numbered as in the rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ChangeKind {
    EnumAddsMember = 1,
    EnumRemovesMember = 2,
    EnumChangesMemberValue = 3,
    StructAddsField = 4,
    StructRemovesField = 5,
    StructChangesFieldType = 6,
    StructChangesFieldOrder = 7,
    VariableAdds = 8,
    VariableRemoves = 9,
    VariableChangesType = 10,
    FunctionAdds = 11,
    FunctionRemoves = 12,
    FunctionAddsParam = 13,
    FunctionRemovesParam = 14,
    FunctionChangesParamType = 15,
    FunctionAddsReturn = 16,
    FunctionRemovesReturn = 17,
    FunctionChangesReturnType = 18,
}

impl ChangeKind {
    pub const ALL: [ChangeKind; 18] = [
        ChangeKind::EnumAddsMember,
        ChangeKind::EnumRemovesMember,
        ChangeKind::EnumChangesMemberValue,
        ChangeKind::StructAddsField,
        ChangeKind::StructRemovesField,
        ChangeKind::StructChangesFieldType,
        ChangeKind::StructChangesFieldOrder,
        ChangeKind::VariableAdds,
        ChangeKind::VariableRemoves,
        ChangeKind::VariableChangesType,
        ChangeKind::FunctionAdds,
        ChangeKind::FunctionRemoves,
        ChangeKind::FunctionAddsParam,
        ChangeKind::FunctionRemovesParam,
        ChangeKind::FunctionChangesParamType,
        ChangeKind::FunctionAddsReturn,
        ChangeKind::FunctionRemovesReturn,
        ChangeKind::FunctionChangesReturnType,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        ChangeKind::ALL
            .get(usize::from(id).checked_sub(1)?)
            .copied()
    }

    pub fn name(self) -> &'static str {
        use ChangeKind::*;
        match self {
            EnumAddsMember => "Enum adds member",
            EnumRemovesMember => "Enum removes member",
            EnumChangesMemberValue => "Enum changes member value",
            StructAddsField => "Struct adds field",
            StructRemovesField => "Struct removes field",
            StructChangesFieldType => "Struct changes field type",
            StructChangesFieldOrder => "Struct changes field order",
            VariableAdds => "Global variable adds",
            VariableRemoves => "Global variable removes",
            VariableChangesType => "Global variable changes type",
            FunctionAdds => "Function adds",
            FunctionRemoves => "Function removes",
            FunctionAddsParam => "Function adds para",
            FunctionRemovesParam => "Function removes para",
            FunctionChangesParamType => "Function changes para type",
            FunctionAddsReturn => "Function adds return value",
            FunctionRemovesReturn => "Function removes return value",
            FunctionChangesReturnType => "Function changes return type",
        }
    }

    /// Pure additions: breaking only for binaries built against the newer side.
    pub fn is_addition(self) -> bool {
        use ChangeKind::*;
        matches!(
            self,
            EnumAddsMember
                | StructAddsField
                | VariableAdds
                | FunctionAdds
                | FunctionAddsParam
                | FunctionAddsReturn
        )
    }

    pub fn is_removal(self) -> bool {
        use ChangeKind::*;
        matches!(
            self,
            EnumRemovesMember
                | StructRemovesField
                | VariableRemoves
                | FunctionRemoves
                | FunctionRemovesParam
                | FunctionRemovesReturn
        )
    }

    /// The kind seen when the two versions are swapped.
    pub fn reversed(self) -> Self {
        use ChangeKind::*;
        match self {
            EnumAddsMember => EnumRemovesMember,
            EnumRemovesMember => EnumAddsMember,
            StructAddsField => StructRemovesField,
            StructRemovesField => StructAddsField,
            VariableAdds => VariableRemoves,
            VariableRemoves => VariableAdds,
            FunctionAdds => FunctionRemoves,
            FunctionRemoves => FunctionAdds,
            FunctionAddsParam => FunctionRemovesParam,
            FunctionRemovesParam => FunctionAddsParam,
            FunctionAddsReturn => FunctionRemovesReturn,
            FunctionRemovesReturn => FunctionAddsReturn,
            other => other,
        }
    }
}

impl From<ChangeKind> for u8 {
    fn from(kind: ChangeKind) -> u8 {
        kind.id()
    }
}

impl TryFrom<u8> for ChangeKind {
    type Error = String;

    fn try_from(id: u8) -> Result<Self, Self::Error> {
        ChangeKind::from_id(id).ok_or_else(|| format!("change kind {id} is not in 1..=18"))
    }
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.id(), self.name())
    }
}

/// The changed element: a symbol, or a member of a data type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRef {
    Symbol(SymbolKey),
    TypeMember {
        #[serde(rename = "type")]
        type_name: String,
        /// `None` addresses every member of the type.
        member: Option<String>,
    },
}

impl ElementRef {
    pub fn member(type_name: impl Into<String>, member: impl Into<String>) -> Self {
        ElementRef::TypeMember {
            type_name: type_name.into(),
            member: Some(member.into()),
        }
    }

    /// True if a change recorded on `other` falls under this element.
    pub fn covers(&self, other: &ElementRef) -> bool {
        match (self, other) {
            (
                ElementRef::TypeMember {
                    type_name,
                    member: None,
                },
                ElementRef::TypeMember { type_name: t, .. },
            ) => type_name == t,
            _ => self == other,
        }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Symbol(key) => write!(f, "{key}"),
            ElementRef::TypeMember {
                type_name,
                member: Some(m),
            } => write!(f, "{type_name}::{m}"),
            ElementRef::TypeMember {
                type_name,
                member: None,
            } => f.write_str(type_name),
        }
    }
}

/// Kind-specific payload. `old`/`new` always refer to the change's
/// `v_old`/`v_new` side, whichever direction it was derived in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "detail", rename_all = "snake_case")]
pub enum ChangeDetail {
    Symbol {
        kind: SymbolKind,
    },
    Member {
        type_kind: TypeKind,
    },
    EnumValue {
        old: i64,
        new: i64,
    },
    FieldType {
        type_kind: TypeKind,
        old: TypeRef,
        new: TypeRef,
    },
    FieldOrder {
        type_kind: TypeKind,
        old: usize,
        new: usize,
    },
    VariableType {
        old: TypeRef,
        new: TypeRef,
    },
    Param {
        index: usize,
        ty: TypeRef,
    },
    ParamType {
        index: usize,
        old: TypeRef,
        new: TypeRef,
    },
    Return {
        ty: TypeRef,
    },
    ReturnType {
        old: TypeRef,
        new: TypeRef,
    },
}

impl ChangeDetail {
    fn swapped(self) -> Self {
        use ChangeDetail::*;
        match self {
            EnumValue { old, new } => EnumValue { old: new, new: old },
            FieldType {
                type_kind,
                old,
                new,
            } => FieldType {
                type_kind,
                old: new,
                new: old,
            },
            FieldOrder {
                type_kind,
                old,
                new,
            } => FieldOrder {
                type_kind,
                old: new,
                new: old,
            },
            VariableType { old, new } => VariableType { old: new, new: old },
            ParamType { index, old, new } => ParamType {
                index,
                old: new,
                new: old,
            },
            ReturnType { old, new } => ReturnType { old: new, new: old },
            other => other,
        }
    }

    /// The `(old, new)` type texts of a type-change record.
    pub fn type_texts(&self) -> Option<(&TypeRef, &TypeRef)> {
        match self {
            ChangeDetail::FieldType { old, new, .. }
            | ChangeDetail::VariableType { old, new }
            | ChangeDetail::ParamType { old, new, .. }
            | ChangeDetail::ReturnType { old, new } => Some((old, new)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Breaks binaries built against `v_old` when run with `v_new`.
    Backward,
    /// Breaks binaries built against `v_new` when run with `v_old`.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IncompatibleChange {
    pub library: String,
    pub v_old: Version,
    pub v_new: Version,
    pub kind: ChangeKind,
    pub element: ElementRef,
    pub detail: ChangeDetail,
    pub direction: Direction,
}

impl IncompatibleChange {
    /// One-line description in the style of a changelog entry.
    pub fn describe(&self) -> String {
        use ChangeKind::*;
        let (type_name, member) = match &self.element {
            ElementRef::TypeMember { type_name, member } => {
                (type_name.as_str(), member.as_deref().unwrap_or("*"))
            }
            ElementRef::Symbol(_) => ("", ""),
        };
        let symbol = self.element.to_string();
        let container = match &self.detail {
            ChangeDetail::Member { type_kind }
            | ChangeDetail::FieldType { type_kind, .. }
            | ChangeDetail::FieldOrder { type_kind, .. } => type_kind.as_str(),
            _ => "enum",
        };
        match (&self.kind, &self.detail) {
            (EnumAddsMember, _) => format!("enum {type_name} adds member {member}"),
            (EnumRemovesMember, _) => format!("enum {type_name} removes member {member}"),
            (EnumChangesMemberValue, ChangeDetail::EnumValue { old, new }) => {
                format!("enum {type_name} changes value of {member} from {old} to {new}")
            }
            (StructAddsField, _) => format!("{container} {type_name} adds {member}"),
            (StructRemovesField, _) => format!("{container} {type_name} removes {member}"),
            (StructChangesFieldType, ChangeDetail::FieldType { old, new, .. }) => {
                format!("{container} {type_name} changes type of {member} from {old} to {new}")
            }
            (StructChangesFieldOrder, ChangeDetail::FieldOrder { old, new, .. }) => {
                format!("{container} {type_name} moves {member} from position {old} to {new}")
            }
            (VariableAdds, _) => format!("Add variable {symbol}"),
            (VariableRemoves, _) => format!("Remove variable {symbol}"),
            (VariableChangesType, ChangeDetail::VariableType { old, new }) => {
                format!("{symbol} changes type from {old} to {new}")
            }
            (FunctionAdds, _) => format!("Add {symbol}"),
            (FunctionRemoves, _) => format!("Remove {symbol}"),
            (FunctionAddsParam, ChangeDetail::Param { ty, .. }) => {
                format!("{symbol} adds parameter {ty}")
            }
            (FunctionRemovesParam, ChangeDetail::Param { ty, .. }) => {
                format!("{symbol} removes parameter {ty}")
            }
            (FunctionChangesParamType, ChangeDetail::ParamType { index, old, new }) => {
                format!("{symbol} changes type of parameter {index} from {old} to {new}")
            }
            (FunctionAddsReturn, _) => format!("{symbol} adds return value"),
            (FunctionRemovesReturn, _) => format!("{symbol} removes return value"),
            (FunctionChangesReturnType, ChangeDetail::ReturnType { old, new }) => {
                format!("{symbol} changes return value from {old} to {new}")
            }
            (kind, _) => format!("{} on {}", kind.name(), self.element),
        }
    }
}

impl fmt::Display for IncompatibleChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} <{}, {}> {}",
            self.library,
            self.v_old,
            self.v_new,
            self.describe()
        )
    }
}

/// A regression seen when moving from `from` to `to`; `detail` is oriented
/// with `old = from`.
type Regression = (ChangeKind, ElementRef, ChangeDetail);

fn symbol_regressions(
    key: &SymbolKey,
    from: &SymbolDef,
    to: Option<&SymbolDef>,
) -> Vec<Regression> {
    let element = ElementRef::Symbol(key.clone());
    let removed = |def: &SymbolDef| {
        let kind = match def.kind() {
            SymbolKind::Function => ChangeKind::FunctionRemoves,
            SymbolKind::Variable => ChangeKind::VariableRemoves,
        };
        vec![(
            kind,
            element.clone(),
            ChangeDetail::Symbol { kind: def.kind() },
        )]
    };
    let Some(to) = to else {
        return removed(from);
    };

    match (&from.signature, &to.signature) {
        (Signature::Variable { ty: a }, Signature::Variable { ty: b }) => {
            if a == b {
                Vec::new()
            } else {
                vec![(
                    ChangeKind::VariableChangesType,
                    element,
                    ChangeDetail::VariableType {
                        old: a.clone(),
                        new: b.clone(),
                    },
                )]
            }
        }
        (
            Signature::Function {
                ret: ret_a,
                params: params_a,
            },
            Signature::Function {
                ret: ret_b,
                params: params_b,
            },
        ) => {
            let mut out = Vec::new();
            for (index, (a, b)) in params_a.iter().zip(params_b).enumerate() {
                if a != b {
                    out.push((
                        ChangeKind::FunctionChangesParamType,
                        element.clone(),
                        ChangeDetail::ParamType {
                            index,
                            old: a.clone(),
                            new: b.clone(),
                        },
                    ));
                }
            }
            for (index, ty) in params_a.iter().enumerate().skip(params_b.len()) {
                out.push((
                    ChangeKind::FunctionRemovesParam,
                    element.clone(),
                    ChangeDetail::Param {
                        index,
                        ty: ty.clone(),
                    },
                ));
            }
            match (ret_a, ret_b) {
                (Some(ty), None) => out.push((
                    ChangeKind::FunctionRemovesReturn,
                    element,
                    ChangeDetail::Return { ty: ty.clone() },
                )),
                (Some(a), Some(b)) if a != b => out.push((
                    ChangeKind::FunctionChangesReturnType,
                    element,
                    ChangeDetail::ReturnType {
                        old: a.clone(),
                        new: b.clone(),
                    },
                )),
                _ => {}
            }
            out
        }
        // A symbol that turns from function into variable (or back) is gone
        // as far as old binaries are concerned.
        _ => removed(from),
    }
}

fn same_shape(a: &TypeDef, b: &TypeDef) -> bool {
    (a.kind == TypeKind::Enum) == (b.kind == TypeKind::Enum)
}

fn member_regressions(from: &TypeDef, member: &str, to: Option<&TypeDef>) -> Vec<Regression> {
    let Some((from_pos, from_member)) = from.member(member) else {
        return Vec::new();
    };
    let element = ElementRef::member(&from.name, member);
    let to_member = to
        .filter(|t| same_shape(from, t))
        .and_then(|t| t.member(member).map(|hit| (t, hit)));

    let Some((to_def, (to_pos, to_member))) = to_member else {
        let kind = if from.kind == TypeKind::Enum {
            ChangeKind::EnumRemovesMember
        } else {
            ChangeKind::StructRemovesField
        };
        return vec![(
            kind,
            element,
            ChangeDetail::Member {
                type_kind: from.kind,
            },
        )];
    };

    let mut out = Vec::new();
    match (&from_member.value, &to_member.value) {
        (MemberValue::Enumerator(a), MemberValue::Enumerator(b)) if a != b => out.push((
            ChangeKind::EnumChangesMemberValue,
            element.clone(),
            ChangeDetail::EnumValue { old: *a, new: *b },
        )),
        (MemberValue::Field(a), MemberValue::Field(b)) => {
            if a != b {
                out.push((
                    ChangeKind::StructChangesFieldType,
                    element.clone(),
                    ChangeDetail::FieldType {
                        type_kind: from.kind,
                        old: a.clone(),
                        new: b.clone(),
                    },
                ));
            }
            // Order is judged among the fields both versions share, so plain
            // insertions and deletions do not count as reordering.
            let rank = |def: &TypeDef, other: &TypeDef| {
                def.members
                    .iter()
                    .filter(|m| other.member(&m.name).is_some())
                    .position(|m| m.name == member)
            };
            if rank(from, to_def) != rank(to_def, from) {
                out.push((
                    ChangeKind::StructChangesFieldOrder,
                    element,
                    ChangeDetail::FieldOrder {
                        type_kind: from.kind,
                        old: from_pos,
                        new: to_pos,
                    },
                ));
            }
        }
        _ => {}
    }
    out
}

/// Regressions of one element from `from` to `to`.
fn element_regressions(
    from: &AbiSnapshot,
    to: &AbiSnapshot,
    element: &ElementRef,
) -> Vec<Regression> {
    match element {
        ElementRef::Symbol(key) => match from.symbol(key) {
            Some(def) => symbol_regressions(key, def, to.symbol(key)),
            None => Vec::new(),
        },
        ElementRef::TypeMember { type_name, member } => {
            let Some(from_def) = from.type_def(type_name) else {
                return Vec::new();
            };
            let to_def = to.type_def(type_name);
            match member {
                Some(m) => member_regressions(from_def, m, to_def),
                None => from_def
                    .members
                    .iter()
                    .flat_map(|m| member_regressions(from_def, &m.name, to_def))
                    .collect(),
            }
        }
    }
}

fn all_regressions(from: &AbiSnapshot, to: &AbiSnapshot) -> Vec<Regression> {
    let mut out = Vec::new();
    for (key, def) in from.symbols() {
        out.extend(symbol_regressions(key, def, to.symbol(key)));
    }
    for def in from.types().values() {
        let to_def = to.type_def(&def.name);
        for m in &def.members {
            out.extend(member_regressions(def, &m.name, to_def));
        }
    }
    out
}

fn check_same_library(a: &AbiSnapshot, b: &AbiSnapshot) -> Result<(), AbiError> {
    if a.library() != b.library() {
        return Err(AbiError::LibraryMismatch {
            left: a.library().to_string(),
            right: b.library().to_string(),
        });
    }
    Ok(())
}

fn label(
    regressions: Vec<Regression>,
    a: &AbiSnapshot,
    b: &AbiSnapshot,
    direction: Direction,
) -> BTreeSet<IncompatibleChange> {
    regressions
        .into_iter()
        .map(|(kind, element, detail)| {
            let (kind, detail) = match direction {
                Direction::Backward => (kind, detail),
                Direction::Forward => (kind.reversed(), detail.swapped()),
            };
            IncompatibleChange {
                library: a.library().to_string(),
                v_old: a.version().clone(),
                v_new: b.version().clone(),
                kind,
                element,
                detail,
                direction,
            }
        })
        .collect()
}

/// Changes that break a binary built against `a` when it runs with `b`.
/// Pure additions never appear here.
pub fn diff_backward(
    a: &AbiSnapshot,
    b: &AbiSnapshot,
) -> Result<BTreeSet<IncompatibleChange>, AbiError> {
    check_same_library(a, b)?;
    Ok(label(all_regressions(a, b), a, b, Direction::Backward))
}

/// Changes that break a binary built against `b` when it runs with `a`,
/// recorded on the pair `<a, b>`.
pub fn diff_forward(
    a: &AbiSnapshot,
    b: &AbiSnapshot,
) -> Result<BTreeSet<IncompatibleChange>, AbiError> {
    check_same_library(a, b)?;
    Ok(label(all_regressions(b, a), a, b, Direction::Forward))
}

/// Whether `element` breaks backward compatibility from `from` to `to`.
pub fn element_bbc(from: &AbiSnapshot, to: &AbiSnapshot, element: &ElementRef) -> bool {
    !element_regressions(from, to, element).is_empty()
}

/// Backward and forward changes over every adjacent pair of releases. Pairs
/// whose sonames differ are skipped: such releases ship as separate packages.
pub fn collect_incompatible_changes(h: &LibraryHistory) -> BTreeSet<IncompatibleChange> {
    let mut all = BTreeSet::new();
    for pair in h.releases().windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.soname() != b.soname() {
            continue;
        }
        all.extend(label(all_regressions(a, b), a, b, Direction::Backward));
        all.extend(label(all_regressions(b, a), a, b, Direction::Forward));
    }
    all
}
