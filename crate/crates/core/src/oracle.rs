//! Brute-force link simulator. It checks an application's imports and facts
//! against each snapshot directly, without consulting any diff, so it can
//! serve as ground truth for the detection pipeline.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abi::{
    AbiSnapshot, LibraryHistory, MemberValue, Signature, SymbolDef, SymbolKey, TypeRef,
};
use crate::usage::{AppUsage, UsageFact};
use crate::version::{Version, VersionRange};

/// Why an application would fail against a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "failure", rename_all = "snake_case")]
pub enum LinkFailure {
    MissingSymbol {
        symbol: SymbolKey,
    },
    WrongSymbolKind {
        symbol: String,
        expected: String,
    },
    VoidReturnUsed {
        symbol: String,
    },
    TooManyArguments {
        symbol: String,
        arity: usize,
        params: usize,
    },
    MissingParameter {
        symbol: String,
        index: usize,
        params: usize,
    },
    TypeMismatch {
        element: String,
        expected: TypeRef,
        found: String,
    },
    MissingMember {
        type_name: String,
        member: String,
    },
}

impl fmt::Display for LinkFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkFailure::MissingSymbol { symbol } => write!(f, "undefined symbol {symbol}"),
            LinkFailure::WrongSymbolKind { symbol, expected } => {
                write!(f, "{symbol} is not a {expected}")
            }
            LinkFailure::VoidReturnUsed { symbol } => {
                write!(f, "return value of {symbol} used but it returns void")
            }
            LinkFailure::TooManyArguments {
                symbol,
                arity,
                params,
            } => write!(
                f,
                "{symbol} called with {arity} arguments but takes {params}"
            ),
            LinkFailure::MissingParameter {
                symbol,
                index,
                params,
            } => write!(f, "{symbol} has no parameter {index} (takes {params})"),
            LinkFailure::TypeMismatch {
                element,
                expected,
                found,
            } => write!(f, "{element}: used as {expected}, declared as {found}"),
            LinkFailure::MissingMember { type_name, member } => {
                write!(f, "{type_name} has no member {member}")
            }
        }
    }
}

fn function(def: &SymbolDef) -> Option<(Option<&TypeRef>, &[TypeRef])> {
    match &def.signature {
        Signature::Function { ret, params } => Some((ret.as_ref(), params)),
        Signature::Variable { .. } => None,
    }
}

fn wrong_kind(symbol: &str, expected: &str) -> LinkFailure {
    LinkFailure::WrongSymbolKind {
        symbol: symbol.to_string(),
        expected: expected.to_string(),
    }
}

fn mismatch(element: String, expected: &TypeRef, found: Option<&TypeRef>) -> Option<LinkFailure> {
    let found_text = found.map_or("void", TypeRef::as_str);
    (found_text != expected.as_str()).then(|| LinkFailure::TypeMismatch {
        element,
        expected: expected.clone(),
        found: found_text.to_string(),
    })
}

fn check_symbol_fact(fact: &UsageFact, def: &SymbolDef) -> Option<LinkFailure> {
    let name = def.key.name.as_str();
    match fact {
        UsageFact::VarTypeHint { type_text, .. } => match &def.signature {
            Signature::Variable { ty } => mismatch(name.to_string(), type_text, Some(ty)),
            Signature::Function { .. } => Some(wrong_kind(name, "variable")),
        },
        _ => {
            let Some((ret, params)) = function(def) else {
                return Some(wrong_kind(name, "function"));
            };
            match fact {
                UsageFact::Calls { arity, .. } if *arity > params.len() => {
                    Some(LinkFailure::TooManyArguments {
                        symbol: name.to_string(),
                        arity: *arity,
                        params: params.len(),
                    })
                }
                UsageFact::UsesParam { index, .. } if *index >= params.len() => {
                    Some(LinkFailure::MissingParameter {
                        symbol: name.to_string(),
                        index: *index,
                        params: params.len(),
                    })
                }
                UsageFact::ParamTypeHint {
                    index, type_text, ..
                } => match params.get(*index) {
                    None => Some(LinkFailure::MissingParameter {
                        symbol: name.to_string(),
                        index: *index,
                        params: params.len(),
                    }),
                    Some(ty) => mismatch(format!("{name} parameter {index}"), type_text, Some(ty)),
                },
                UsageFact::UsesReturnValue { .. } if ret.is_none() => {
                    Some(LinkFailure::VoidReturnUsed {
                        symbol: name.to_string(),
                    })
                }
                UsageFact::ReturnTypeHint { type_text, .. } => {
                    mismatch(format!("{name} return value"), type_text, ret)
                }
                _ => None,
            }
        }
    }
}

fn check_member_fact(fact: &UsageFact, s: &AbiSnapshot) -> Option<LinkFailure> {
    let (type_name, member) = fact.type_member()?;
    let missing = || LinkFailure::MissingMember {
        type_name: type_name.to_string(),
        member: member.to_string(),
    };
    let Some((_, m)) = s.type_def(type_name).and_then(|t| t.member(member)) else {
        return Some(missing());
    };
    match (fact, &m.value) {
        (UsageFact::UsesEnumMember { .. }, MemberValue::Enumerator(_)) => None,
        (UsageFact::UsesField { .. }, MemberValue::Field(_)) => None,
        (UsageFact::FieldTypeHint { type_text, .. }, MemberValue::Field(ty)) => {
            mismatch(format!("{type_name}::{member}"), type_text, Some(ty))
        }
        _ => Some(missing()),
    }
}

/// Every way `app` fails to link or run correctly against `s`.
pub fn simulate_link(app: &AppUsage, s: &AbiSnapshot) -> Vec<LinkFailure> {
    let mut failures = BTreeSet::new();
    let mut bound: Vec<&SymbolDef> = Vec::new();
    for import in &app.imports {
        match s.resolve(import) {
            Some(def) => bound.push(def),
            None => {
                failures.insert(LinkFailure::MissingSymbol {
                    symbol: import.clone(),
                });
            }
        }
    }
    for fact in &app.facts {
        match fact.symbol() {
            Some(name) => {
                // Facts about symbols the application does not bind are
                // not checkable here.
                for def in bound.iter().filter(|d| d.key.name == name) {
                    failures.extend(check_symbol_fact(fact, def));
                }
            }
            None => failures.extend(check_member_fact(fact, s)),
        }
    }
    failures.into_iter().collect()
}

/// Released versions inside `required` that the application fails against.
pub fn oracle_incompatible_versions(
    app: &AppUsage,
    required: &VersionRange,
    h: &LibraryHistory,
) -> BTreeSet<Version> {
    h.releases()
        .iter()
        .filter(|s| required.contains(s.version()))
        .filter(|s| !simulate_link(app, s).is_empty())
        .map(|s| s.version().clone())
        .collect()
}
