//! Debian-style package versions, relational constraints and dependency lines.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// A package version of the form `[epoch:]upstream[-revision]`.
///
/// Equality and ordering follow the Debian comparison algorithm, so `1.0`,
/// `0:1.0` and `1.00` are all equal even though they render differently.
#[derive(Debug, Clone)]
pub struct Version {
    epoch: u64,
    upstream: String,
    revision: String,
}

impl Version {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        if text.is_empty() {
            return Err(ParseError::version(text, "version", "empty version string"));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(ParseError::version(text, "version", "contains whitespace"));
        }

        let (epoch, rest) = match text.split_once(':') {
            Some((epoch, rest)) => {
                if epoch.is_empty() || !epoch.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(ParseError::version(text, "epoch", "epoch must be numeric"));
                }
                let epoch = epoch
                    .parse::<u64>()
                    .map_err(|_| ParseError::version(text, "epoch", "epoch out of range"))?;
                (epoch, rest)
            }
            None => (0, text),
        };

        let (upstream, revision) = match rest.rsplit_once('-') {
            Some((upstream, revision)) => {
                if revision.is_empty() {
                    return Err(ParseError::version(text, "revision", "empty revision"));
                }
                (upstream, revision)
            }
            None => (rest, ""),
        };

        if upstream.is_empty() {
            return Err(ParseError::version(
                text,
                "upstream",
                "empty upstream version",
            ));
        }
        if let Some(c) = upstream
            .chars()
            .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '~' | '-' | ':')))
        {
            return Err(ParseError::version(
                text,
                "upstream",
                format!("invalid character {c:?}"),
            ));
        }
        if let Some(c) = revision
            .chars()
            .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '~')))
        {
            return Err(ParseError::version(
                text,
                "revision",
                format!("invalid character {c:?}"),
            ));
        }

        Ok(Version {
            epoch,
            upstream: upstream.to_string(),
            revision: revision.to_string(),
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn upstream(&self) -> &str {
        &self.upstream
    }

    /// Distribution revision; empty when the version had none.
    pub fn revision(&self) -> &str {
        &self.revision
    }
}

/// Parses a version; see [`Version::parse`].
pub fn parse_version(text: &str) -> Result<Version, ParseError> {
    Version::parse(text)
}

/// Total order over versions using the dpkg algorithm.
pub fn compare_versions(a: &Version, b: &Version) -> Ordering {
    a.epoch
        .cmp(&b.epoch)
        .then_with(|| verrevcmp(a.upstream.as_bytes(), b.upstream.as_bytes()))
        .then_with(|| verrevcmp(a.revision.as_bytes(), b.revision.as_bytes()))
}

/// Weight of a non-digit character. End of string and digits weigh 0, `~`
/// sorts before everything, letters before other punctuation.
fn char_order(c: Option<u8>) -> i32 {
    match c {
        None => 0,
        Some(c) if c.is_ascii_digit() => 0,
        Some(c) if c.is_ascii_alphabetic() => c as i32,
        Some(b'~') => -1,
        Some(c) => c as i32 + 256,
    }
}

fn verrevcmp(a: &[u8], b: &[u8]) -> Ordering {
    let (mut i, mut j) = (0usize, 0usize);
    let at = |s: &[u8], k: usize| s.get(k).copied();
    let is_digit = |c: Option<u8>| c.is_some_and(|c| c.is_ascii_digit());

    while i < a.len() || j < b.len() {
        while (i < a.len() && !is_digit(at(a, i))) || (j < b.len() && !is_digit(at(b, j))) {
            let ac = char_order(at(a, i));
            let bc = char_order(at(b, j));
            if ac != bc {
                return ac.cmp(&bc);
            }
            i += 1;
            j += 1;
        }
        while at(a, i) == Some(b'0') {
            i += 1;
        }
        while at(b, j) == Some(b'0') {
            j += 1;
        }
        let mut first_diff = Ordering::Equal;
        while is_digit(at(a, i)) && is_digit(at(b, j)) {
            if first_diff == Ordering::Equal {
                first_diff = a[i].cmp(&b[j]);
            }
            i += 1;
            j += 1;
        }
        if is_digit(at(a, i)) {
            return Ordering::Greater;
        }
        if is_digit(at(b, j)) {
            return Ordering::Less;
        }
        if first_diff != Ordering::Equal {
            return first_diff;
        }
    }
    Ordering::Equal
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        compare_versions(self, other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_versions(self, other)
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // An upstream part containing ':' only round-trips with an explicit epoch.
        if self.epoch != 0 || self.upstream.contains(':') {
            write!(f, "{}:", self.epoch)?;
        }
        f.write_str(&self.upstream)?;
        if !self.revision.is_empty() {
            write!(f, "-{}", self.revision)?;
        }
        Ok(())
    }
}

impl FromStr for Version {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Version::parse(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Version::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// One of the five Debian version relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Less,
    LessEq,
    Equal,
    GreaterEq,
    Greater,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Less => "<<",
            Relation::LessEq => "<=",
            Relation::Equal => "=",
            Relation::GreaterEq => ">=",
            Relation::Greater => ">>",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            Relation::Less => ord == Ordering::Less,
            Relation::LessEq => ord != Ordering::Greater,
            Relation::Equal => ord == Ordering::Equal,
            Relation::GreaterEq => ord != Ordering::Less,
            Relation::Greater => ord == Ordering::Greater,
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "<<" | "<" => Ok(Relation::Less),
            "<=" => Ok(Relation::LessEq),
            "=" => Ok(Relation::Equal),
            ">=" => Ok(Relation::GreaterEq),
            ">>" | ">" => Ok(Relation::Greater),
            other => Err(format!("unknown relation {other:?}")),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionConstraint {
    pub relation: Relation,
    pub bound: Version,
}

impl VersionConstraint {
    pub fn new(relation: Relation, bound: Version) -> Self {
        VersionConstraint { relation, bound }
    }

    pub fn accepts(&self, v: &Version) -> bool {
        self.relation.holds(compare_versions(v, &self.bound))
    }

    /// Parses `rel ver`, with or without whitespace between the two.
    fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let split = text
            .find(|c: char| !matches!(c, '<' | '>' | '='))
            .unwrap_or(text.len());
        let (rel, ver) = text.split_at(split);
        if rel.is_empty() {
            return Err(format!("missing relation in {text:?}"));
        }
        let relation = rel.parse::<Relation>()?;
        let bound = Version::parse(ver.trim()).map_err(|e| e.to_string())?;
        Ok(VersionConstraint { relation, bound })
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.relation, self.bound)
    }
}

/// A conjunction of constraints. The empty conjunction accepts every version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionRange {
    constraints: Vec<VersionConstraint>,
}

impl VersionRange {
    pub fn any() -> Self {
        VersionRange::default()
    }

    pub fn new(constraints: Vec<VersionConstraint>) -> Self {
        VersionRange { constraints }
    }

    pub fn constraints(&self) -> &[VersionConstraint] {
        &self.constraints
    }

    pub fn accepts_all(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, v: &Version) -> bool {
        self.constraints.iter().all(|c| c.accepts(v))
    }

    /// Conjunction of both ranges.
    pub fn and(mut self, other: &VersionRange) -> Self {
        self.constraints.extend(other.constraints.iter().cloned());
        self
    }

    /// Parses a comma-separated constraint list such as `>= 1.0, << 2.0`.
    ///
    /// Each constraint may be wrapped in parentheses, as in a control file.
    /// Empty input yields the accept-all range.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(VersionRange::any());
        }
        let constraints = text
            .split(',')
            .enumerate()
            .map(|(index, part)| {
                let part = part.trim();
                let inner = part
                    .strip_prefix('(')
                    .and_then(|p| p.strip_suffix(')'))
                    .unwrap_or(part);
                VersionConstraint::parse(inner).map_err(|message| ParseError::Range {
                    index,
                    text: part.to_string(),
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VersionRange { constraints })
    }
}

/// Membership test of `v` in `r`.
pub fn range_contains(r: &VersionRange, v: &Version) -> bool {
    r.contains(v)
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Serialize for VersionRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VersionRange {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        VersionRange::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Parses a control-file style dependency line: `name (rel ver), name, ...`.
///
/// Each entry yields one pair; an entry without a parenthesized constraint
/// accepts every version. An empty line yields no entries.
pub fn parse_depends(line: &str) -> Result<Vec<(String, VersionRange)>, ParseError> {
    if line.trim().is_empty() {
        return Ok(Vec::new());
    }
    line.split(',')
        .enumerate()
        .map(|(index, entry)| {
            parse_depends_entry(entry).map_err(|message| ParseError::Depends {
                index,
                entry: entry.trim().to_string(),
                message,
            })
        })
        .collect()
}

fn parse_depends_entry(entry: &str) -> Result<(String, VersionRange), String> {
    let entry = entry.trim();
    if entry.is_empty() {
        return Err("empty entry".to_string());
    }
    let opens = entry.matches('(').count();
    let closes = entry.matches(')').count();
    if opens != closes || opens > 1 {
        return Err("unbalanced parentheses".to_string());
    }

    let (name, constraint) = match entry.find('(') {
        Some(open) => {
            let close = entry
                .find(')')
                .filter(|&c| c > open)
                .ok_or("unbalanced parentheses")?;
            if !entry[close + 1..].trim().is_empty() {
                return Err("trailing text after constraint".to_string());
            }
            (entry[..open].trim(), Some(&entry[open + 1..close]))
        }
        None => (entry, None),
    };

    if name.is_empty() {
        return Err("missing package name".to_string());
    }
    if let Some(c) = name
        .chars()
        .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-' | '_' | ':')))
    {
        return Err(format!("invalid character {c:?} in package name"));
    }

    let range = match constraint {
        Some(text) => VersionRange::new(vec![VersionConstraint::parse(text)?]),
        None => VersionRange::any(),
    };
    Ok((name.to_string(), range))
}
