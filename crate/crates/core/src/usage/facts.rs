use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abi::{SymbolKey, TypeRef};
use crate::error::LoadError;
use crate::version::Version;

/// One observation about how an application uses a library element.
/// Facts name elements, never library versions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case", deny_unknown_fields)]
pub enum UsageFact {
    UsesEnumMember {
        #[serde(rename = "type")]
        type_name: String,
        member: String,
    },
    UsesField {
        #[serde(rename = "type")]
        type_name: String,
        field: String,
    },
    FieldTypeHint {
        #[serde(rename = "type")]
        type_name: String,
        field: String,
        type_text: TypeRef,
    },
    VarTypeHint {
        symbol: String,
        type_text: TypeRef,
    },
    Calls {
        symbol: String,
        arity: usize,
    },
    UsesParam {
        symbol: String,
        index: usize,
    },
    ParamTypeHint {
        symbol: String,
        index: usize,
        type_text: TypeRef,
    },
    UsesReturnValue {
        symbol: String,
    },
    ReturnTypeHint {
        symbol: String,
        type_text: TypeRef,
    },
}

impl UsageFact {
    /// The symbol a fact talks about, if it is about a symbol.
    pub fn symbol(&self) -> Option<&str> {
        match self {
            UsageFact::VarTypeHint { symbol, .. }
            | UsageFact::Calls { symbol, .. }
            | UsageFact::UsesParam { symbol, .. }
            | UsageFact::ParamTypeHint { symbol, .. }
            | UsageFact::UsesReturnValue { symbol }
            | UsageFact::ReturnTypeHint { symbol, .. } => Some(symbol),
            _ => None,
        }
    }

    /// `(type, member)` for facts about a data-type member.
    pub fn type_member(&self) -> Option<(&str, &str)> {
        match self {
            UsageFact::UsesEnumMember { type_name, member } => Some((type_name, member)),
            UsageFact::UsesField { type_name, field }
            | UsageFact::FieldTypeHint {
                type_name, field, ..
            } => Some((type_name, field)),
            _ => None,
        }
    }
}

/// What an application imports from its libraries and how it uses them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppUsage {
    pub app: String,
    pub app_version: Version,
    pub imports: BTreeSet<SymbolKey>,
    pub facts: BTreeSet<UsageFact>,
}

impl AppUsage {
    pub fn new(app: impl Into<String>, app_version: Version) -> Self {
        AppUsage {
            app: app.into(),
            app_version,
            imports: BTreeSet::new(),
            facts: BTreeSet::new(),
        }
    }

    pub fn facts_for_symbol<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a UsageFact> {
        self.facts.iter().filter(move |f| f.symbol() == Some(name))
    }

    pub fn facts_for_member<'a>(
        &'a self,
        type_name: &'a str,
        member: &'a str,
    ) -> impl Iterator<Item = &'a UsageFact> {
        self.facts
            .iter()
            .filter(move |f| f.type_member() == Some((type_name, member)))
    }

    /// Whether an import would bind to a library symbol with key `key`.
    /// `key_is_default` tells whether that symbol is the `@@` binding.
    pub fn imports_symbol(&self, key: &SymbolKey, key_is_default: bool) -> bool {
        if self.imports.contains(key) {
            return true;
        }
        key.version_tag.is_some()
            && key_is_default
            && self
                .imports
                .contains(&SymbolKey::unversioned(key.name.clone()))
    }

    pub fn merge(&mut self, other: AppUsage) {
        self.imports.extend(other.imports);
        self.facts.extend(other.facts);
    }

    /// Checks that no parameter index reaches past the widest call.
    pub fn validate(&self) -> Result<(), String> {
        let mut widest: BTreeMap<&str, usize> = BTreeMap::new();
        for fact in &self.facts {
            if let UsageFact::Calls { symbol, arity } = fact {
                let w = widest.entry(symbol).or_default();
                *w = (*w).max(*arity);
            }
        }
        for fact in &self.facts {
            let (symbol, index) = match fact {
                UsageFact::UsesParam { symbol, index }
                | UsageFact::ParamTypeHint { symbol, index, .. } => (symbol, *index),
                _ => continue,
            };
            if let Some(&arity) = widest.get(symbol.as_str()) {
                if index >= arity {
                    return Err(format!(
                        "parameter index {index} of {symbol} is not below its call arity {arity}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> UsageDoc {
        UsageDoc {
            app: self.app.clone(),
            version: self.app_version.to_string(),
            imports: self.imports.iter().cloned().collect(),
            facts: self.facts.iter().cloned().collect(),
        }
    }
}

/// On-disk usage-facts schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageDoc {
    pub app: String,
    pub version: String,
    #[serde(default)]
    pub imports: Vec<SymbolKey>,
    #[serde(default)]
    pub facts: Vec<UsageFact>,
}

impl UsageDoc {
    pub fn into_usage(self, origin: &Path) -> Result<AppUsage, LoadError> {
        if self.app.trim().is_empty() {
            return Err(LoadError::schema(origin, "app", "must not be empty"));
        }
        let app_version = Version::parse(&self.version)
            .map_err(|e| LoadError::schema(origin, "version", e.to_string()))?;
        for (i, import) in self.imports.iter().enumerate() {
            if import.name.is_empty() || import.version_tag.as_deref() == Some("") {
                return Err(LoadError::schema(
                    origin,
                    format!("imports[{i}]"),
                    "import needs a name and a null or non-empty version_tag",
                ));
            }
        }
        let usage = AppUsage {
            app: self.app,
            app_version,
            imports: self.imports.into_iter().collect(),
            facts: self.facts.into_iter().collect(),
        };
        usage
            .validate()
            .map_err(|message| LoadError::schema(origin, "facts", message))?;
        Ok(usage)
    }
}

pub fn load_usage_facts(path: &Path) -> Result<AppUsage, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: UsageDoc = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    doc.into_usage(path)
}
