//! Lexical usage scanner for C-like source text.
//!
//! This is a heuristic: no preprocessing, no dataflow, no scoping beyond
//! "the last declaration of a name before its use". Anything it cannot make
//! sense of yields fewer facts, never an error. Every fact is gated on the
//! element it names, so a larger set of elements of interest can only add
//! facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::abi::TypeRef;
use crate::diff::ElementRef;
use crate::error::LoadError;
use crate::usage::UsageFact;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Punct(&'static str),
    Lit,
}

const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "(", ")", "[", "]", "{", "}", ";", ",", ".",
    "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~", "?", ":", "#",
];

const KEYWORDS: &[&str] = &[
    "return",
    "if",
    "else",
    "while",
    "for",
    "do",
    "switch",
    "case",
    "default",
    "goto",
    "break",
    "continue",
    "sizeof",
    "typedef",
    "new",
    "delete",
    "throw",
    "using",
    "namespace",
    "template",
    "operator",
];

const STORAGE: &[&str] = &[
    "static",
    "extern",
    "register",
    "inline",
    "auto",
    "thread_local",
    "_Thread_local",
    "constexpr",
    "mutable",
    "virtual",
];

/// Words that can only appear in a type, which makes a declaration certain.
const TYPE_MARKERS: &[&str] = &[
    "struct", "union", "enum", "class", "const", "volatile", "unsigned", "signed", "void", "char",
    "short", "int", "long", "float", "double", "bool", "_Bool",
];

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn lex(src: &str) -> Vec<Tok> {
    let b = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line_start = true;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && line_start {
            // Preprocessor line, including backslash continuations.
            while i < b.len() && b[i] != b'\n' {
                if b[i] == b'\\' && i + 1 < b.len() {
                    i += 1;
                }
                i += 1;
            }
            continue;
        }
        line_start = false;
        if b[i..].starts_with(b"//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b[i..].starts_with(b"/*") {
            i += 2;
            while i < b.len() && !b[i..].starts_with(b"*/") {
                i += 1;
            }
            i = (i + 2).min(b.len());
            continue;
        }
        if c == b'"' || c == b'\'' {
            i += 1;
            while i < b.len() && b[i] != c && b[i] != b'\n' {
                if b[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
            toks.push(Tok::Lit);
            continue;
        }
        if c.is_ascii_digit() {
            while i < b.len() && (is_ident_char(b[i]) || b[i] == b'.') {
                i += 1;
            }
            toks.push(Tok::Lit);
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            loop {
                while i < b.len() && is_ident_char(b[i]) {
                    i += 1;
                }
                // Qualified C++ names are kept whole: a::b::c.
                if b[i..].starts_with(b"::") && i + 2 < b.len() && is_ident_start(b[i + 2]) {
                    i += 2;
                } else {
                    break;
                }
            }
            toks.push(Tok::Word(src[start..i].to_string()));
            continue;
        }
        match PUNCTS.iter().find(|p| b[i..].starts_with(p.as_bytes())) {
            Some(p) => {
                toks.push(Tok::Punct(p));
                i += p.len();
            }
            None => {
                // Non-ASCII or stray byte: skip the whole character.
                i += src[i..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    toks
}

struct Decl {
    name: String,
    name_at: usize,
    ty: TypeRef,
    is_extern: bool,
    /// Index of the token after the declared name.
    after: usize,
}

struct Source {
    toks: Vec<Tok>,
    /// Matching bracket for every bracket token.
    pair: Vec<Option<usize>>,
    /// Innermost unclosed bracket around each token.
    enclosing: Vec<Option<usize>>,
    brace_depth: Vec<usize>,
}

impl Source {
    fn new(src: &str) -> Self {
        let toks = lex(src);
        let n = toks.len();
        let mut pair = vec![None; n];
        let mut enclosing = vec![None; n];
        let mut brace_depth = vec![0; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut braces = 0usize;
        for i in 0..n {
            enclosing[i] = stack.last().copied();
            brace_depth[i] = braces;
            match toks[i] {
                Tok::Punct(p @ ("(" | "[" | "{")) => {
                    stack.push(i);
                    if p == "{" {
                        braces += 1;
                    }
                }
                Tok::Punct(p @ (")" | "]" | "}")) => {
                    let want = match p {
                        ")" => "(",
                        "]" => "[",
                        _ => "{",
                    };
                    if let Some(pos) = stack.iter().rposition(|&o| toks[o] == Tok::Punct(want)) {
                        let open = stack[pos];
                        stack.truncate(pos);
                        pair[open] = Some(i);
                        pair[i] = Some(open);
                        enclosing[i] = stack.last().copied();
                    }
                    if p == "}" {
                        braces = braces.saturating_sub(1);
                    }
                }
                _ => {}
            }
        }
        Source {
            toks,
            pair,
            enclosing,
            brace_depth,
        }
    }

    fn punct(&self, i: usize) -> Option<&'static str> {
        match self.toks.get(i) {
            Some(Tok::Punct(p)) => Some(p),
            _ => None,
        }
    }

    fn word(&self, i: usize) -> Option<&str> {
        match self.toks.get(i) {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn is_punct(&self, i: Option<usize>, p: &str) -> bool {
        i.and_then(|i| self.punct(i)) == Some(p)
    }

    fn prev(i: usize) -> Option<usize> {
        i.checked_sub(1)
    }

    /// Tries to read `T name` starting at `start`.
    fn declaration(&self, start: usize) -> Option<Decl> {
        let mut i = start;
        let mut words: Vec<&str> = Vec::new();
        let mut is_extern = false;
        while let Some(w) = self.word(i) {
            if KEYWORDS.contains(&w) {
                return None;
            }
            if STORAGE.contains(&w) {
                is_extern |= w == "extern";
            } else {
                words.push(w);
            }
            i += 1;
        }
        let mut stars: Vec<&str> = Vec::new();
        while let Some(t) = self
            .punct(i)
            .filter(|p| *p == "*" || *p == "&")
            .or_else(|| {
                self.word(i).filter(|w| {
                    !stars.is_empty() && matches!(*w, "const" | "volatile" | "restrict")
                })
            })
        {
            stars.push(t);
            i += 1;
        }
        let (type_words, name, name_at) = if stars.is_empty() {
            if words.len() < 2 {
                return None;
            }
            let (name, ty) = words.split_last()?;
            (ty.to_vec(), name.to_string(), i - 1)
        } else {
            let name = self.word(i)?;
            if KEYWORDS.contains(&name) || words.is_empty() {
                return None;
            }
            i += 1;
            (words.clone(), name.to_string(), i - 1)
        };
        if !matches!(self.punct(i), Some("=" | ";" | "," | "[" | ")")) {
            return None;
        }
        if type_words
            .iter()
            .all(|w| matches!(*w, "const" | "volatile"))
        {
            return None;
        }
        let ambiguous =
            !stars.is_empty() && type_words.len() == 1 && !TYPE_MARKERS.contains(&type_words[0]);
        let prev = Self::prev(start).and_then(|p| self.punct(p));
        let statement_start = matches!(prev, None | Some(";" | "{" | "}"));
        let file_scope = self.brace_depth[start] == 0;
        if !(statement_start || file_scope || !ambiguous) {
            return None;
        }
        let mut text = type_words.join(" ");
        for s in &stars {
            text.push(' ');
            text.push_str(s);
        }
        Some(Decl {
            name,
            name_at,
            ty: TypeRef::new(&text),
            is_extern,
            after: i,
        })
    }

    fn declarations(&self) -> Vec<Decl> {
        let mut out = Vec::new();
        for i in 0..self.toks.len() {
            let at_start = match Self::prev(i) {
                None => true,
                Some(p) => matches!(self.punct(p), Some(";" | "{" | "}" | "(" | ",")),
            };
            if at_start && self.word(i).is_some() {
                if let Some(d) = self.declaration(i) {
                    out.push(d);
                }
            }
        }
        out
    }

    fn arguments(&self, open: usize, close: usize) -> Vec<(usize, usize)> {
        let mut args = Vec::new();
        let mut start = open + 1;
        let mut i = open + 1;
        while i < close {
            match self.toks[i] {
                Tok::Punct("(" | "[" | "{") => {
                    i = self.pair[i].unwrap_or(close);
                }
                Tok::Punct(",") => {
                    args.push((start, i));
                    start = i + 1;
                }
                _ => {}
            }
            i += 1;
        }
        if start < close || !args.is_empty() {
            args.push((start, close));
        }
        if args.len() == 1 && self.word(open + 1) == Some("void") && open + 2 == close {
            args.clear();
        }
        args
    }

    /// Whether there is a `?` between the start of the statement and `at`.
    fn inside_conditional(&self, at: usize) -> bool {
        let mut i = at;
        while let Some(p) = Self::prev(i) {
            match self.toks[p] {
                Tok::Punct(";" | "{" | "}") => return false,
                Tok::Punct("?") => return true,
                _ => {}
            }
            i = p;
        }
        false
    }

    fn statement_position(&self, prev: Option<usize>) -> bool {
        let Some(p) = prev else { return true };
        match &self.toks[p] {
            Tok::Punct(";" | "{" | "}") => true,
            Tok::Punct(":") => !self.inside_conditional(p),
            Tok::Word(w) => w == "else" || w == "do",
            Tok::Punct(")") => self.pair[p]
                .and_then(Self::prev)
                .and_then(|k| self.word(k))
                .is_some_and(|w| matches!(w, "if" | "while" | "for" | "switch")),
            _ => false,
        }
    }

    /// Whether the value of the call spanning `name_at..=close` is consumed.
    fn result_used(&self, name_at: usize, close: usize) -> bool {
        let prev = Self::prev(name_at);
        let next = self.punct(close + 1);
        if let Some(p) = prev.filter(|&p| self.punct(p) == Some(")")) {
            if let Some(open) = self.pair[p] {
                if open + 2 == p && self.word(open + 1) == Some("void") {
                    return false;
                }
            }
        }
        let discarded_after = matches!(next, Some(";" | ","));
        let enclosing = self.enclosing[name_at];
        let in_parens = enclosing.is_some_and(|o| self.punct(o) == Some("("));
        if !in_parens && self.statement_position(prev) && discarded_after {
            return false;
        }
        if self.is_punct(prev, ",") && discarded_after {
            let block = match enclosing {
                None => true,
                Some(o) => self.punct(o) == Some("{") && !self.is_punct(Self::prev(o), "="),
            };
            if block {
                return false;
            }
        }
        if let Some(open) = enclosing.filter(|&o| self.punct(o) == Some("(")) {
            let is_for = Self::prev(open).and_then(|k| self.word(k)) == Some("for");
            if is_for {
                let clause = (open + 1..name_at)
                    .filter(|&k| self.punct(k) == Some(";") && self.enclosing[k] == Some(open))
                    .count();
                let starts = matches!(prev.and_then(|p| self.punct(p)), Some("(" | ";" | ","));
                let ends = matches!(next, Some(";" | ")" | ","));
                if clause != 1 && starts && ends {
                    return false;
                }
            }
        }
        true
    }
}

fn base_type_name(ty: &TypeRef) -> Option<&str> {
    ty.referenced_names().next()
}

struct Interest<'a> {
    symbols: BTreeSet<&'a str>,
    elements: &'a BTreeSet<ElementRef>,
    /// Member name to the types that have it listed explicitly.
    members: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> Interest<'a> {
    fn new(elements: &'a BTreeSet<ElementRef>) -> Self {
        let mut symbols = BTreeSet::new();
        let mut members: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in elements {
            match e {
                ElementRef::Symbol(key) => {
                    symbols.insert(key.name.as_str());
                }
                ElementRef::TypeMember {
                    type_name,
                    member: Some(m),
                } => members.entry(m.as_str()).or_default().push(type_name),
                ElementRef::TypeMember { member: None, .. } => {}
            }
        }
        Interest {
            symbols,
            elements,
            members,
        }
    }

    fn member(&self, type_name: &str, member: &str) -> bool {
        let wanted = ElementRef::member(type_name, member);
        self.elements.iter().any(|e| e.covers(&wanted))
    }
}

/// Usage facts for the elements of interest found in `source`.
pub fn scan_source_usage(source: &str, interest: &BTreeSet<ElementRef>) -> BTreeSet<UsageFact> {
    let src = Source::new(source);
    let want = Interest::new(interest);
    let mut facts = BTreeSet::new();

    let decls = src.declarations();
    let mut by_name: BTreeMap<&str, Vec<(usize, &TypeRef)>> = BTreeMap::new();
    let mut decl_names = BTreeSet::new();
    for d in &decls {
        by_name.entry(&d.name).or_default().push((d.name_at, &d.ty));
        decl_names.insert(d.name_at);
    }
    let type_of = |name: &str, at: usize| -> Option<&TypeRef> {
        by_name
            .get(name)?
            .iter()
            .rev()
            .find(|(pos, _)| *pos <= at)
            .map(|(_, ty)| *ty)
    };
    let field_of = |base_at: usize, access: usize| -> Option<(&str, &str)> {
        if !matches!(src.punct(access), Some("." | "->")) {
            return None;
        }
        let var = src.word(base_at)?;
        let field = src.word(access + 1)?;
        let ty = type_of(var, base_at)?;
        Some((base_type_name(ty)?, field))
    };

    for d in &decls {
        if d.is_extern && want.symbols.contains(d.name.as_str()) {
            facts.insert(UsageFact::VarTypeHint {
                symbol: d.name.clone(),
                type_text: d.ty.clone(),
            });
        }
        if src.punct(d.after) != Some("=") {
            continue;
        }
        let init = d.after + 1;
        // T v = x->field;
        if matches!(src.punct(init + 3), Some(";" | ",")) {
            if let Some((t, f)) = field_of(init, init + 1) {
                if want.member(t, f) {
                    facts.insert(UsageFact::FieldTypeHint {
                        type_name: t.to_string(),
                        field: f.to_string(),
                        type_text: d.ty.clone(),
                    });
                }
            }
        }
        // T v = { .field = ... };
        if src.punct(init) == Some("{") {
            if let (Some(close), Some(t)) = (src.pair[init], base_type_name(&d.ty)) {
                for k in init + 1..close {
                    let designator = src.punct(k) == Some(".")
                        && src.enclosing[k] == Some(init)
                        && matches!(src.punct(k - 1), Some("{" | ","))
                        && src.punct(k + 2) == Some("=");
                    if let Some(f) = src.word(k + 1).filter(|_| designator) {
                        if want.member(t, f) {
                            facts.insert(UsageFact::UsesField {
                                type_name: t.to_string(),
                                field: f.to_string(),
                            });
                        }
                    }
                }
            }
        }
    }

    for i in 0..src.toks.len() {
        let Some(name) = src.word(i) else { continue };
        let prev = Source::prev(i);
        if let Some(p) = prev.filter(|&p| matches!(src.punct(p), Some("." | "->"))) {
            if let Some((t, f)) = p.checked_sub(1).and_then(|b| field_of(b, p)) {
                if want.member(t, f) {
                    facts.insert(UsageFact::UsesField {
                        type_name: t.to_string(),
                        field: f.to_string(),
                    });
                }
            }
            continue;
        }
        let is_call = src.punct(i + 1) == Some("(");
        if want.symbols.contains(name) && !decl_names.contains(&i) {
            if is_call {
                scan_call(&src, i, name, &type_of, &mut facts);
            } else if src.is_punct(prev, "=") && matches!(src.punct(i + 1), Some(";" | ",")) {
                if let Some(v) = prev.and_then(|p| p.checked_sub(1)) {
                    if let Some(ty) = src.word(v).and_then(|w| type_of(w, v)) {
                        facts.insert(UsageFact::VarTypeHint {
                            symbol: name.to_string(),
                            type_text: ty.clone(),
                        });
                    }
                }
            }
        }
        if !is_call && !decl_names.contains(&i) {
            for t in want.members.get(name).into_iter().flatten() {
                facts.insert(UsageFact::UsesEnumMember {
                    type_name: t.to_string(),
                    member: name.to_string(),
                });
            }
        }
    }
    facts
}

fn scan_call<'t>(
    src: &Source,
    at: usize,
    name: &str,
    type_of: &dyn Fn(&str, usize) -> Option<&'t TypeRef>,
    facts: &mut BTreeSet<UsageFact>,
) {
    let Some(close) = src.pair[at + 1] else {
        return;
    };
    let prev = Source::prev(at);
    // A type word or a file-scope `*` in front means a prototype, not a call.
    let prototype = match prev {
        Some(p) => match &src.toks[p] {
            Tok::Word(w) => !KEYWORDS.contains(&w.as_str()),
            Tok::Punct("*") => src.brace_depth[at] == 0,
            _ => false,
        },
        None => false,
    };
    if prototype {
        return;
    }
    let args = src.arguments(at + 1, close);
    facts.insert(UsageFact::Calls {
        symbol: name.to_string(),
        arity: args.len(),
    });
    for (index, &(s, e)) in args.iter().enumerate() {
        if e == s + 1 {
            if let Some(ty) = src.word(s).and_then(|w| type_of(w, s)) {
                facts.insert(UsageFact::ParamTypeHint {
                    symbol: name.to_string(),
                    index,
                    type_text: ty.clone(),
                });
            }
        }
    }
    if !src.result_used(at, close) {
        return;
    }
    facts.insert(UsageFact::UsesReturnValue {
        symbol: name.to_string(),
    });
    let whole_value = matches!(src.punct(close + 1), Some(";" | ","));
    if src.is_punct(prev, "=") && whole_value {
        if let Some(v) = prev.and_then(|p| p.checked_sub(1)) {
            if let Some(ty) = src.word(v).and_then(|w| type_of(w, v)) {
                facts.insert(UsageFact::ReturnTypeHint {
                    symbol: name.to_string(),
                    type_text: ty.clone(),
                });
            }
        }
    }
}

pub fn scan_source_file(
    path: &Path,
    interest: &BTreeSet<ElementRef>,
) -> Result<BTreeSet<UsageFact>, LoadError> {
    let bytes = fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(scan_source_usage(
        &String::from_utf8_lossy(&bytes),
        interest,
    ))
}
