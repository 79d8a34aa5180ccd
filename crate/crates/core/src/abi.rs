//! In-memory model of one library version's binary interface, and the
//! declarative snapshot/history files it is loaded from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{AbiError, LoadError};
use crate::interval::ReleaseSlot;
use crate::version::Version;

/// A type as written in a signature, compared after whitespace normalization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeRef(String);

const QUALIFIERS: &[&str] = &[
    "const", "volatile", "restrict", "struct", "union", "enum", "class", "typename", "signed",
    "unsigned",
];

const BUILTINS: &[&str] = &[
    "void",
    "char",
    "short",
    "int",
    "long",
    "float",
    "double",
    "bool",
    "_Bool",
    "wchar_t",
    "char16_t",
    "char32_t",
    "size_t",
    "ssize_t",
    "ptrdiff_t",
    "intptr_t",
    "uintptr_t",
    "off_t",
    "int8_t",
    "int16_t",
    "int32_t",
    "int64_t",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
];

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Word(&'a str),
    Punct(char),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let bytes = text.as_bytes();
    let is_word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if is_word(b) {
            let start = i;
            loop {
                while i < bytes.len() && is_word(bytes[i]) {
                    i += 1;
                }
                // `ns::name` stays one word.
                if bytes[i..].starts_with(b"::") && bytes.get(i + 2).is_some_and(|&c| is_word(c)) {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(Token::Word(&text[start..i]));
        } else {
            let c = text[i..].chars().next().unwrap();
            tokens.push(Token::Punct(c));
            i += c.len_utf8();
        }
    }
    tokens
}

impl TypeRef {
    pub fn new(text: &str) -> Self {
        let mut out = String::new();
        let mut prev: Option<Token> = None;
        for tok in tokenize(text) {
            let spaced = matches!(
                (&prev, &tok),
                (Some(Token::Word(_)), Token::Word(_))
                    | (Some(Token::Word(_)), Token::Punct('*' | '&'))
                    | (Some(Token::Punct('*' | '&')), Token::Word(_))
            );
            if spaced {
                out.push(' ');
            }
            match tok {
                Token::Word(w) => out.push_str(w),
                Token::Punct(c) => out.push(c),
            }
            prev = Some(tok);
        }
        TypeRef(out)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_void(&self) -> bool {
        self.0 == "void"
    }

    /// Identifiers in this type that name a user type (qualifiers, builtins
    /// and array sizes excluded).
    pub fn referenced_names(&self) -> impl Iterator<Item = &str> {
        tokenize(&self.0).into_iter().filter_map(|t| match t {
            Token::Word(w)
                if !QUALIFIERS.contains(&w)
                    && !BUILTINS.contains(&w)
                    && !w.starts_with(|c: char| c.is_ascii_digit()) =>
            {
                Some(w)
            }
            _ => None,
        })
    }

    pub fn references(&self, type_name: &str) -> bool {
        self.referenced_names().any(|n| n == type_name)
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for TypeRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TypeRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(TypeRef::new(&String::deserialize(deserializer)?))
    }
}

/// Symbol identity: name plus optional symbol-version tag. Two symbols that
/// differ only in tag are distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolKey {
    pub name: String,
    pub version_tag: Option<String>,
}

impl SymbolKey {
    pub fn new(name: impl Into<String>, version_tag: Option<&str>) -> Self {
        SymbolKey {
            name: name.into(),
            version_tag: version_tag.map(str::to_string),
        }
    }

    pub fn unversioned(name: impl Into<String>) -> Self {
        SymbolKey::new(name, None)
    }
}

impl fmt::Display for SymbolKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.version_tag {
            Some(tag) => write!(f, "{}@{}", self.name, tag),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Function,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Signature {
    /// `ret` is `None` for void functions.
    Function {
        ret: Option<TypeRef>,
        params: Vec<TypeRef>,
    },
    Variable {
        ty: TypeRef,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolDef {
    pub key: SymbolKey,
    /// The `name@@tag` binding used for unversioned references.
    pub is_default: bool,
    pub signature: Signature,
}

impl SymbolDef {
    pub fn kind(&self) -> SymbolKind {
        match self.signature {
            Signature::Function { .. } => SymbolKind::Function,
            Signature::Variable { .. } => SymbolKind::Variable,
        }
    }

    pub fn type_refs(&self) -> Vec<&TypeRef> {
        match &self.signature {
            Signature::Function { ret, params } => ret.iter().chain(params.iter()).collect(),
            Signature::Variable { ty } => vec![ty],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeKind {
    Enum,
    Struct,
    Union,
    Class,
}

impl TypeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeKind::Enum => "enum",
            TypeKind::Struct => "struct",
            TypeKind::Union => "union",
            TypeKind::Class => "class",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberValue {
    /// Enumerator value.
    Enumerator(i64),
    /// Field type of a struct, union or class.
    Field(TypeRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub name: String,
    pub value: MemberValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDef {
    pub name: String,
    pub kind: TypeKind,
    /// Declaration order; a member's ordinal is its index here.
    pub members: Vec<Member>,
}

impl TypeDef {
    pub fn member(&self, name: &str) -> Option<(usize, &Member)> {
        self.members
            .iter()
            .enumerate()
            .find(|(_, m)| m.name == name)
    }
}

/// The exported surface of one library release.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbiSnapshot {
    library: String,
    version: Version,
    soname: String,
    symbols: BTreeMap<SymbolKey, SymbolDef>,
    types: BTreeMap<String, TypeDef>,
    opaque: BTreeSet<String>,
}

impl AbiSnapshot {
    pub fn library(&self) -> &str {
        &self.library
    }

    pub fn version(&self) -> &Version {
        &self.version
    }

    pub fn soname(&self) -> &str {
        &self.soname
    }

    pub fn symbols(&self) -> &BTreeMap<SymbolKey, SymbolDef> {
        &self.symbols
    }

    pub fn types(&self) -> &BTreeMap<String, TypeDef> {
        &self.types
    }

    pub fn symbol(&self, key: &SymbolKey) -> Option<&SymbolDef> {
        self.symbols.get(key)
    }

    /// Resolves a reference the way the dynamic linker would: a versioned
    /// reference binds only to the exact tag, an unversioned one to the
    /// unversioned symbol or to the default (`@@`) version.
    pub fn resolve(&self, wanted: &SymbolKey) -> Option<&SymbolDef> {
        if let Some(def) = self.symbols.get(wanted) {
            return Some(def);
        }
        if wanted.version_tag.is_some() {
            return None;
        }
        self.symbols
            .values()
            .find(|d| d.key.name == wanted.name && d.is_default)
    }

    pub fn type_def(&self, name: &str) -> Option<&TypeDef> {
        self.types.get(name)
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self, LoadError> {
        let doc: SnapshotDoc = serde_json::from_str(text).map_err(|source| LoadError::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        AbiSnapshot::from_doc(doc, origin)
    }

    /// Validates a parsed snapshot document. Invariant violations are
    /// rejected, never repaired.
    pub fn from_doc(doc: SnapshotDoc, origin: &Path) -> Result<Self, LoadError> {
        let schema = |pointer: String, message: String| LoadError::schema(origin, pointer, message);

        for (field, value) in [("library", &doc.library), ("soname", &doc.soname)] {
            if value.trim().is_empty() {
                return Err(schema(field.to_string(), "must not be empty".into()));
            }
        }
        let version = Version::parse(&doc.version)
            .map_err(|e| schema("version".to_string(), e.to_string()))?;

        let mut types = BTreeMap::new();
        for (i, t) in doc.types.into_iter().enumerate() {
            let pointer = format!("types[{i}] ({})", t.name);
            if t.name.trim().is_empty() {
                return Err(schema(pointer, "type name must not be empty".into()));
            }
            let mut seen = BTreeSet::new();
            let mut members = Vec::with_capacity(t.members.len());
            for (j, m) in t.members.into_iter().enumerate() {
                let pointer = format!("{pointer}.members[{j}] ({})", m.name);
                if !seen.insert(m.name.clone()) {
                    return Err(schema(pointer, "duplicate member name".into()));
                }
                let value = match (t.kind, m.value, m.ty) {
                    (TypeKind::Enum, Some(value), None) => MemberValue::Enumerator(value),
                    (TypeKind::Enum, _, _) => {
                        return Err(schema(
                            pointer,
                            "enum members need a value and no type".into(),
                        ))
                    }
                    (_, None, Some(ty)) => MemberValue::Field(TypeRef::new(&ty)),
                    (_, _, _) => {
                        return Err(schema(pointer, "fields need a type and no value".into()))
                    }
                };
                members.push(Member {
                    name: m.name,
                    value,
                });
            }
            let def = TypeDef {
                name: t.name.clone(),
                kind: t.kind,
                members,
            };
            if types.insert(t.name, def).is_some() {
                return Err(schema(pointer, "duplicate type name".into()));
            }
        }

        let opaque: BTreeSet<String> = doc.opaque.into_iter().collect();

        let mut symbols: BTreeMap<SymbolKey, SymbolDef> = BTreeMap::new();
        let mut defaults = BTreeSet::new();
        for (i, s) in doc.symbols.into_iter().enumerate() {
            let pointer = format!("symbols[{i}] ({})", s.name);
            if s.name.is_empty() {
                return Err(schema(pointer, "symbol name must not be empty".into()));
            }
            if s.version_tag.as_deref() == Some("") {
                return Err(schema(
                    pointer,
                    "version_tag must be null or non-empty".into(),
                ));
            }
            if s.default && s.version_tag.is_none() {
                return Err(schema(
                    pointer,
                    "default binding requires a version_tag".into(),
                ));
            }
            let signature = match s.kind {
                SymbolKind::Function => {
                    if s.var_type.is_some() {
                        return Err(schema(pointer, "functions must not carry var_type".into()));
                    }
                    let ret = s.ret.map(|r| TypeRef::new(&r)).filter(|r| !r.is_void());
                    let params = s.params.iter().map(|p| TypeRef::new(p)).collect();
                    Signature::Function { ret, params }
                }
                SymbolKind::Variable => {
                    if s.ret.is_some() || !s.params.is_empty() {
                        return Err(schema(
                            pointer,
                            "variables must not carry return or params".into(),
                        ));
                    }
                    let Some(ty) = s.var_type else {
                        return Err(schema(pointer, "variables need a var_type".into()));
                    };
                    Signature::Variable {
                        ty: TypeRef::new(&ty),
                    }
                }
            };
            let key = SymbolKey {
                name: s.name,
                version_tag: s.version_tag,
            };
            let def = SymbolDef {
                key: key.clone(),
                is_default: s.default,
                signature,
            };
            for ty in def.type_refs() {
                if let Some(unknown) = ty
                    .referenced_names()
                    .find(|n| !types.contains_key(*n) && !opaque.contains(*n))
                {
                    return Err(schema(
                        pointer,
                        format!("type {unknown:?} is neither declared nor opaque"),
                    ));
                }
            }
            if def.is_default && !defaults.insert(key.name.clone()) {
                return Err(schema(
                    pointer,
                    format!("second default version for {:?}", key.name),
                ));
            }
            if symbols.contains_key(&key) {
                return Err(LoadError::DuplicateSymbol {
                    path: origin.to_path_buf(),
                    pointer,
                    key: key.to_string(),
                });
            }
            symbols.insert(key, def);
        }

        Ok(AbiSnapshot {
            library: doc.library,
            version,
            soname: doc.soname,
            symbols,
            types,
            opaque,
        })
    }

    /// Canonical document: symbols ordered by key, types by name.
    pub fn to_doc(&self) -> SnapshotDoc {
        SnapshotDoc {
            library: self.library.clone(),
            version: self.version.to_string(),
            soname: self.soname.clone(),
            symbols: self
                .symbols
                .values()
                .map(|d| {
                    let (kind, ret, params, var_type) = match &d.signature {
                        Signature::Function { ret, params } => (
                            SymbolKind::Function,
                            ret.as_ref().map(|r| r.to_string()),
                            params.iter().map(|p| p.to_string()).collect(),
                            None,
                        ),
                        Signature::Variable { ty } => {
                            (SymbolKind::Variable, None, Vec::new(), Some(ty.to_string()))
                        }
                    };
                    SymbolDoc {
                        name: d.key.name.clone(),
                        version_tag: d.key.version_tag.clone(),
                        default: d.is_default,
                        kind,
                        ret,
                        params,
                        var_type,
                    }
                })
                .collect(),
            types: self
                .types
                .values()
                .map(|t| TypeDoc {
                    name: t.name.clone(),
                    kind: t.kind,
                    members: t
                        .members
                        .iter()
                        .map(|m| match &m.value {
                            MemberValue::Enumerator(v) => MemberDoc {
                                name: m.name.clone(),
                                value: Some(*v),
                                ty: None,
                            },
                            MemberValue::Field(ty) => MemberDoc {
                                name: m.name.clone(),
                                value: None,
                                ty: Some(ty.to_string()),
                            },
                        })
                        .collect(),
                })
                .collect(),
            opaque: self.opaque.iter().cloned().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("snapshot serializes")
    }
}

/// On-disk snapshot schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDoc {
    pub library: String,
    pub version: String,
    pub soname: String,
    #[serde(default)]
    pub symbols: Vec<SymbolDoc>,
    #[serde(default)]
    pub types: Vec<TypeDoc>,
    /// Type names that may appear in signatures without a definition
    /// (typedefs, forward-declared handles).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub opaque: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDoc {
    pub name: String,
    #[serde(default)]
    pub version_tag: Option<String>,
    #[serde(default)]
    pub default: bool,
    pub kind: SymbolKind,
    #[serde(rename = "return", default)]
    pub ret: Option<String>,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub var_type: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDoc {
    pub name: String,
    pub kind: TypeKind,
    #[serde(default)]
    pub members: Vec<MemberDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberDoc {
    pub name: String,
    #[serde(default)]
    pub value: Option<i64>,
    #[serde(rename = "type", default)]
    pub ty: Option<String>,
}

fn read_file(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_snapshot(path: &Path) -> Result<AbiSnapshot, LoadError> {
    AbiSnapshot::from_json_str(&read_file(path)?, path)
}

/// Every symbol whose return, parameter or variable type names `type_name`
/// directly. Types reached only through members of other types are not
/// followed.
pub fn symbols_using_type(
    s: &AbiSnapshot,
    type_name: &str,
) -> Result<BTreeSet<SymbolKey>, AbiError> {
    if !s.types.contains_key(type_name) && !s.opaque.contains(type_name) {
        return Err(AbiError::UnknownType(type_name.to_string()));
    }
    Ok(s.symbols
        .values()
        .filter(|d| d.type_refs().iter().any(|t| t.references(type_name)))
        .map(|d| d.key.clone())
        .collect())
}

/// Releases of one library in release order.
#[derive(Debug, Clone)]
pub struct LibraryHistory {
    library: String,
    releases: Vec<AbiSnapshot>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryDoc {
    library: String,
    releases: Vec<PathBuf>,
}

impl LibraryHistory {
    pub fn new(library: impl Into<String>, releases: Vec<AbiSnapshot>) -> Result<Self, LoadError> {
        Self::validated(library.into(), releases, Path::new("<memory>"))
    }

    fn validated(
        library: String,
        releases: Vec<AbiSnapshot>,
        origin: &Path,
    ) -> Result<Self, LoadError> {
        if releases.is_empty() {
            return Err(LoadError::schema(
                origin,
                "releases",
                "history has no releases",
            ));
        }
        for (i, r) in releases.iter().enumerate() {
            if r.library != library {
                return Err(LoadError::schema(
                    origin,
                    format!("releases[{i}]"),
                    format!(
                        "snapshot is for library {:?}, expected {library:?}",
                        r.library
                    ),
                ));
            }
            if i > 0 && releases[i - 1].version >= r.version {
                return Err(LoadError::schema(
                    origin,
                    format!("releases[{i}]"),
                    format!(
                        "version {} does not increase over {}",
                        r.version,
                        releases[i - 1].version
                    ),
                ));
            }
        }
        Ok(LibraryHistory { library, releases })
    }

    pub fn library(&self) -> &str {
        &self.library
    }

    pub fn releases(&self) -> &[AbiSnapshot] {
        &self.releases
    }

    pub fn snapshot(&self, version: &Version) -> Option<&AbiSnapshot> {
        self.releases.iter().find(|r| &r.version == version)
    }

    pub fn versions(&self) -> impl Iterator<Item = &Version> {
        self.releases.iter().map(|r| &r.version)
    }

    /// Releases annotated with their soname group boundaries. A group is a
    /// maximal run of consecutive releases sharing one soname.
    pub fn release_slots(&self) -> Vec<ReleaseSlot> {
        let n = self.releases.len();
        self.releases
            .iter()
            .enumerate()
            .map(|(i, r)| ReleaseSlot {
                version: r.version.clone(),
                soname: r.soname.clone(),
                group_start: i == 0 || self.releases[i - 1].soname != r.soname,
                group_end: i + 1 == n || self.releases[i + 1].soname != r.soname,
            })
            .collect()
    }
}

/// Loads a history manifest; release paths are relative to the manifest.
pub fn load_history(path: &Path) -> Result<LibraryHistory, LoadError> {
    let doc: HistoryDoc =
        serde_json::from_str(&read_file(path)?).map_err(|source| LoadError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let releases = doc
        .releases
        .iter()
        .map(|rel| load_snapshot(&base.join(rel)))
        .collect::<Result<Vec<_>, _>>()?;
    LibraryHistory::validated(doc.library, releases, path)
}
