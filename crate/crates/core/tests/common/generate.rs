//! Random history/usage instances for checking the pipeline against the
//! link simulator.
//!
//! Every element varies along exactly one observable dimension between two
//! states, and the application is built against one release `b`: its facts
//! describe the element as it looks in `b`. The required range always
//! contains `b`, so every release with a differing state is reachable from
//! `b` through adjacent in-range changes.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use abirange_core::abi::{LibraryHistory, SymbolDoc, TypeDoc};
use abirange_core::diff::collect_incompatible_changes;
use abirange_core::oracle::oracle_incompatible_versions;
use abirange_core::scan::check_pair;
use abirange_core::{AppUsage, SymbolKey, TypeRef, UsageFact, Version, VersionRange};

use super::{enum_type, func, snapshot, struct_type, var};

pub const MAX_VERSIONS: usize = 8;
pub const MAX_ELEMENTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    FunctionPresence,
    ReturnPresence,
    ParamCount,
    ParamType,
    ReturnType,
    VariablePresence,
    VariableType,
    EnumMember,
    FieldPresence,
    FieldType,
}

const DIMS: [Dim; 10] = [
    Dim::FunctionPresence,
    Dim::ReturnPresence,
    Dim::ParamCount,
    Dim::ParamType,
    Dim::ReturnType,
    Dim::VariablePresence,
    Dim::VariableType,
    Dim::EnumMember,
    Dim::FieldPresence,
    Dim::FieldType,
];

#[derive(Debug, Clone)]
pub struct Element {
    pub dim: Dim,
    pub tag: Option<String>,
    /// State per release; `true` is the "present", "wide" or "long" side.
    pub states: Vec<bool>,
}

#[derive(Debug)]
pub struct Instance {
    pub seed: u64,
    pub elements: Vec<Element>,
    pub history: LibraryHistory,
    pub app: AppUsage,
    pub required: VersionRange,
    pub build: Version,
}

fn name(dim: Dim, i: usize) -> String {
    match dim {
        Dim::VariablePresence | Dim::VariableType => format!("v{i}"),
        Dim::EnumMember => format!("use_e{i}"),
        Dim::FieldPresence | Dim::FieldType => format!("use_s{i}"),
        _ => format!("f{i}"),
    }
}

fn ty(state: bool) -> &'static str {
    if state {
        "long"
    } else {
        "int"
    }
}

fn tagged(mut s: SymbolDoc, tag: &Option<String>) -> SymbolDoc {
    s.version_tag = tag.clone();
    s.default = tag.is_some();
    s
}

fn release_items(i: usize, e: &Element, state: bool) -> (Option<SymbolDoc>, Option<TypeDoc>) {
    let n = name(e.dim, i);
    let (sym, t) = match e.dim {
        Dim::FunctionPresence => (state.then(|| func(&n, Some("int"), &["int"])), None),
        Dim::ReturnPresence => (Some(func(&n, state.then_some("int"), &[])), None),
        Dim::ParamCount => {
            let params: &[&str] = if state { &["int", "int"] } else { &["int"] };
            (Some(func(&n, None, params)), None)
        }
        Dim::ParamType => (Some(func(&n, None, &[ty(state)])), None),
        Dim::ReturnType => (Some(func(&n, Some(ty(state)), &[])), None),
        Dim::VariablePresence => (state.then(|| var(&n, "int")), None),
        Dim::VariableType => (Some(var(&n, ty(state))), None),
        Dim::EnumMember => {
            let members: &[(&str, i64)] = if state {
                &[("A", 0), ("B", 1)]
            } else {
                &[("A", 0)]
            };
            let e_name = format!("E{i}");
            (
                Some(func(&n, None, &[&e_name])),
                Some(enum_type(&e_name, members)),
            )
        }
        Dim::FieldPresence => {
            let fields: &[(&str, &str)] = if state {
                &[("a", "int"), ("b", "int")]
            } else {
                &[("a", "int")]
            };
            let s_name = format!("S{i}");
            (
                Some(func(&n, None, &[&format!("{s_name} *")])),
                Some(struct_type(&s_name, fields)),
            )
        }
        Dim::FieldType => {
            let s_name = format!("S{i}");
            (
                Some(func(&n, None, &[&format!("{s_name} *")])),
                Some(struct_type(&s_name, &[("a", ty(state))])),
            )
        }
    };
    (sym.map(|s| tagged(s, &e.tag)), t)
}

/// Facts of an application built against a release where the element is in
/// `state`, plus whether the application imports the element's symbol.
fn usage_items(i: usize, e: &Element, state: bool) -> (bool, Vec<UsageFact>) {
    let symbol = name(e.dim, i);
    let hint = TypeRef::new(ty(state));
    let s = symbol.clone();
    match e.dim {
        Dim::FunctionPresence => (
            state,
            if state {
                vec![UsageFact::Calls {
                    symbol: s,
                    arity: 1,
                }]
            } else {
                vec![]
            },
        ),
        Dim::ReturnPresence => {
            let mut facts = vec![UsageFact::Calls {
                symbol: s.clone(),
                arity: 0,
            }];
            if state {
                facts.push(UsageFact::UsesReturnValue { symbol: s });
            }
            (true, facts)
        }
        Dim::ParamCount => (
            true,
            vec![UsageFact::Calls {
                symbol: s,
                arity: if state { 2 } else { 1 },
            }],
        ),
        Dim::ParamType => (
            true,
            vec![
                UsageFact::Calls {
                    symbol: s.clone(),
                    arity: 1,
                },
                UsageFact::ParamTypeHint {
                    symbol: s,
                    index: 0,
                    type_text: hint,
                },
            ],
        ),
        Dim::ReturnType => (
            true,
            vec![
                UsageFact::UsesReturnValue { symbol: s.clone() },
                UsageFact::ReturnTypeHint {
                    symbol: s,
                    type_text: hint,
                },
            ],
        ),
        Dim::VariablePresence => (state, vec![]),
        Dim::VariableType => (
            true,
            vec![UsageFact::VarTypeHint {
                symbol: s,
                type_text: hint,
            }],
        ),
        Dim::EnumMember => {
            let type_name = format!("E{i}");
            let mut facts = vec![UsageFact::UsesEnumMember {
                type_name: type_name.clone(),
                member: "A".into(),
            }];
            if state {
                facts.push(UsageFact::UsesEnumMember {
                    type_name,
                    member: "B".into(),
                });
            }
            (true, facts)
        }
        Dim::FieldPresence => {
            let type_name = format!("S{i}");
            let mut facts = vec![UsageFact::UsesField {
                type_name: type_name.clone(),
                field: "a".into(),
            }];
            if state {
                facts.push(UsageFact::UsesField {
                    type_name,
                    field: "b".into(),
                });
            }
            (true, facts)
        }
        Dim::FieldType => (
            true,
            vec![UsageFact::FieldTypeHint {
                type_name: format!("S{i}"),
                field: "a".into(),
                type_text: hint,
            }],
        ),
    }
}

fn random_versions(rng: &mut StdRng, n: usize) -> Vec<Version> {
    let mut pool: BTreeSet<Version> = BTreeSet::new();
    while pool.len() < n {
        let (a, b, c) = (
            rng.gen_range(0..4),
            rng.gen_range(0..12),
            rng.gen_range(0..10),
        );
        let text = match rng.gen_range(0..10) {
            0 => format!("{a}.{b}~rc{c}"),
            1 => format!("{a}.{b}.{c}-{}", rng.gen_range(1..3)),
            2 => format!("{a}.{b}+dfsg{c}"),
            3 | 4 => format!("{a}.{b}"),
            _ => format!("{a}.{b}.{c}"),
        };
        let v = Version::parse(&text).expect("generated version parses");
        // Equal-comparing spellings such as 1.01 and 1.1 collapse here.
        pool.insert(v);
    }
    pool.into_iter().collect()
}

fn random_range(rng: &mut StdRng, vs: &[Version], b: usize) -> VersionRange {
    let lo = rng.gen_range(0..=b);
    let hi = rng.gen_range(b..vs.len());
    let text = match rng.gen_range(0..6) {
        0 => String::new(),
        1 => format!(">= {}", vs[lo]),
        2 => format!(">= {}, <= {}", vs[lo], vs[hi]),
        3 if hi + 1 < vs.len() => format!(">= {}, << {}", vs[lo], vs[hi + 1]),
        4 => format!("<= {}", vs[hi]),
        5 => format!("= {}", vs[b]),
        _ => format!(">= {}", vs[lo]),
    };
    VersionRange::parse(&text).expect("generated range parses")
}

pub fn generate(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(2..=MAX_VERSIONS);
    let k = rng.gen_range(1..=MAX_ELEMENTS);
    let versions = random_versions(&mut rng, n);
    let flip = rng.gen_range(0.2..0.6);
    let elements: Vec<Element> = (0..k)
        .map(|_| {
            let dim = DIMS[rng.gen_range(0..DIMS.len())];
            let mut state = rng.gen_bool(0.5);
            let states = (0..n)
                .map(|_| {
                    if rng.gen_bool(flip) {
                        state = !state;
                    }
                    state
                })
                .collect();
            let tag = rng.gen_bool(0.25).then(|| "PROBE_1".to_string());
            Element { dim, tag, states }
        })
        .collect();

    let releases = versions
        .iter()
        .enumerate()
        .map(|(j, ver)| {
            let mut symbols = Vec::new();
            let mut types = Vec::new();
            for (i, e) in elements.iter().enumerate() {
                let (s, t) = release_items(i, e, e.states[j]);
                symbols.extend(s);
                types.extend(t);
            }
            snapshot("gen", &ver.to_string(), symbols, types)
        })
        .collect();
    let history = LibraryHistory::new("gen", releases).expect("generated history is valid");

    let b = rng.gen_range(0..n);
    let mut app = AppUsage::new("gen-app", Version::parse("1.0").unwrap());
    for (i, e) in elements.iter().enumerate() {
        let (imported, facts) = usage_items(i, e, e.states[b]);
        if imported {
            app.imports
                .insert(SymbolKey::new(name(e.dim, i), e.tag.as_deref()));
        }
        app.facts.extend(facts);
    }
    app.validate().expect("generated usage is valid");
    let required = random_range(&mut rng, &versions, b);
    Instance {
        seed,
        elements,
        history,
        app,
        required,
        build: versions[b].clone(),
    }
}

/// Releases the detection pipeline reports as incompatible.
pub fn pipeline(inst: &Instance) -> BTreeSet<Version> {
    let changes = collect_incompatible_changes(&inst.history);
    check_pair(&inst.app, "gen", &inst.required, &inst.history, &changes)
        .map(|r| {
            r.incompatible
                .members(&inst.history.release_slots())
                .into_iter()
                .collect()
        })
        .unwrap_or_default()
}

pub fn oracle(inst: &Instance) -> BTreeSet<Version> {
    oracle_incompatible_versions(&inst.app, &inst.required, &inst.history)
}
