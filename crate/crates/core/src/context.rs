//! Contexts, context sets and the context calculus.
//!
//! A [`Context`] is a finite map from dimension names to tags: the point at
//! which an intensional expression is evaluated. Contexts are plain immutable
//! values; every operator returns a fresh context. Bindings are kept in a
//! `BTreeMap`, so iteration order, serialization and hashing are all canonical
//! (sorted by dimension name) without extra work.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("unbound dimension `{0}`")]
    UnboundDimension(DimensionName),
    #[error("conflicting tags for dimension `{dim}`: {left} vs {right}")]
    ConflictingTags {
        dim: DimensionName,
        left: Tag,
        right: Tag,
    },
    #[error("cannot order tags of different kinds: {0} and {1}")]
    MixedTagKinds(Tag, Tag),
    #[error("invalid dimension name `{0}`")]
    InvalidDimension(String),
    #[error("invalid tag domain for `{0}`: {1}")]
    InvalidDomain(DimensionName, &'static str),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("malformed context text at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// A coordinate along one dimension.
#[derive(Debug, Clone)]
pub enum Tag {
    Int(i64),
    Str(String),
    Float(f64),
    Bool(bool),
}

impl Tag {
    fn kind_rank(&self) -> u8 {
        match self {
            Tag::Int(_) => 0,
            Tag::Float(_) => 1,
            Tag::Str(_) => 2,
            Tag::Bool(_) => 3,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Tag::Int(_) => "int",
            Tag::Float(_) => "float",
            Tag::Str(_) => "string",
            Tag::Bool(_) => "bool",
        }
    }

    /// Ordering used by programs. Only tags of the same kind are comparable.
    pub fn try_cmp(&self, other: &Tag) -> Result<Ordering, ContextError> {
        match (self, other) {
            (Tag::Int(a), Tag::Int(b)) => Ok(a.cmp(b)),
            (Tag::Float(a), Tag::Float(b)) => Ok(a.total_cmp(b)),
            (Tag::Str(a), Tag::Str(b)) => Ok(a.cmp(b)),
            (Tag::Bool(a), Tag::Bool(b)) => Ok(a.cmp(b)),
            _ => Err(ContextError::MixedTagKinds(self.clone(), other.clone())),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Tag::Int(i) => Some(*i),
            _ => None,
        }
    }
}

// Canonical (storage) order: by kind first, then by value. This is not the
// program-visible ordering, see `try_cmp`.
impl Ord for Tag {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Tag::Int(a), Tag::Int(b)) => a.cmp(b),
            (Tag::Float(a), Tag::Float(b)) => a.total_cmp(b),
            (Tag::Str(a), Tag::Str(b)) => a.cmp(b),
            (Tag::Bool(a), Tag::Bool(b)) => a.cmp(b),
            _ => self.kind_rank().cmp(&other.kind_rank()),
        }
    }
}

impl PartialOrd for Tag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Tag {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Tag {}

impl Hash for Tag {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind_rank().hash(state);
        match self {
            Tag::Int(i) => i.hash(state),
            Tag::Float(f) => f.to_bits().hash(state),
            Tag::Str(s) => s.hash(state),
            Tag::Bool(b) => b.hash(state),
        }
    }
}

impl From<i64> for Tag {
    fn from(v: i64) -> Self {
        Tag::Int(v)
    }
}

impl From<&str> for Tag {
    fn from(v: &str) -> Self {
        Tag::Str(v.to_string())
    }
}

impl From<bool> for Tag {
    fn from(v: bool) -> Self {
        Tag::Bool(v)
    }
}

impl From<f64> for Tag {
    fn from(v: f64) -> Self {
        Tag::Float(v)
    }
}

/// Shortest round-trip decimal that always reads back as a float.
pub fn format_float(f: f64) -> String {
    if f.is_nan() {
        return "nan".to_string();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{f:?}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn quote_str(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Int(i) => write!(f, "{i}"),
            Tag::Float(x) => f.write_str(&format_float(*x)),
            Tag::Bool(b) => write!(f, "{b}"),
            Tag::Str(s) => {
                let mut out = String::new();
                quote_str(s, &mut out);
                f.write_str(&out)
            }
        }
    }
}

/// Name of a dimension. Always a valid identifier lexeme.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DimensionName(String);

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl DimensionName {
    pub fn new(name: impl Into<String>) -> Result<Self, ContextError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(DimensionName(name))
        } else {
            Err(ContextError::InvalidDimension(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DimensionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for DimensionName {
    type Err = ContextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DimensionName::new(s)
    }
}

impl std::borrow::Borrow<str> for DimensionName {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A point in the context space.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    bindings: BTreeMap<DimensionName, Tag>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a context; a later binding for the same dimension wins.
    pub fn from_pairs<I, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (DimensionName, T)>,
        T: Into<Tag>,
    {
        Context {
            bindings: pairs.into_iter().map(|(d, t)| (d, t.into())).collect(),
        }
    }

    pub fn with(mut self, dim: DimensionName, tag: impl Into<Tag>) -> Self {
        self.bindings.insert(dim, tag.into());
        self
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn dims(&self) -> impl Iterator<Item = &DimensionName> {
        self.bindings.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DimensionName, &Tag)> {
        self.bindings.iter()
    }

    pub fn contains(&self, dim: &str) -> bool {
        self.bindings.contains_key(dim)
    }

    pub fn get(&self, dim: &str) -> Option<&Tag> {
        self.bindings.get(dim)
    }

    pub fn lookup(&self, dim: &DimensionName) -> Result<&Tag, ContextError> {
        self.bindings
            .get(dim)
            .ok_or_else(|| ContextError::UnboundDimension(dim.clone()))
    }

    /// `self † delta`: right-biased union.
    pub fn override_with(&self, delta: &Context) -> Context {
        let mut bindings = self.bindings.clone();
        for (d, t) in &delta.bindings {
            bindings.insert(d.clone(), t.clone());
        }
        Context { bindings }
    }

    pub fn project<'a, I>(&self, dims: I) -> Context
    where
        I: IntoIterator<Item = &'a DimensionName>,
    {
        let mut bindings = BTreeMap::new();
        for d in dims {
            if let Some(t) = self.bindings.get(d) {
                bindings.insert(d.clone(), t.clone());
            }
        }
        Context { bindings }
    }

    /// Drops the bindings of the given dimensions.
    pub fn hide<'a, I>(&self, dims: I) -> Context
    where
        I: IntoIterator<Item = &'a DimensionName>,
    {
        let mut bindings = self.bindings.clone();
        for d in dims {
            bindings.remove(d);
        }
        Context { bindings }
    }

    /// The `.` operator: the tag of `dim` in the projection onto `{dim}`.
    pub fn dot(&self, dim: &DimensionName) -> Result<Tag, ContextError> {
        self.project(std::iter::once(dim)).lookup(dim).cloned()
    }

    /// Union of bindings; both sides must agree on shared dimensions.
    pub fn merge(&self, other: &Context) -> Result<Context, ContextError> {
        let mut bindings = self.bindings.clone();
        for (d, t) in &other.bindings {
            match bindings.get(d) {
                Some(existing) if existing != t => {
                    return Err(ContextError::ConflictingTags {
                        dim: d.clone(),
                        left: existing.clone(),
                        right: t.clone(),
                    })
                }
                _ => {
                    bindings.insert(d.clone(), t.clone());
                }
            }
        }
        Ok(Context { bindings })
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (d, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}:{t}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Context {
    type Err = ContextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = TextCursor::new(s);
        let c = cur.context()?;
        cur.finish()?;
        Ok(c)
    }
}

/// A finite set of contexts in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextSet {
    elements: BTreeSet<Context>,
}

impl ContextSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Context) -> bool {
        self.elements.insert(c)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, c: &Context) -> bool {
        self.elements.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Context> {
        self.elements.iter()
    }

    pub fn union(&self, other: &ContextSet) -> ContextSet {
        self.elements.union(&other.elements).cloned().collect()
    }

    pub fn intersect(&self, other: &ContextSet) -> ContextSet {
        self.elements.intersection(&other.elements).cloned().collect()
    }

    pub fn difference(&self, other: &ContextSet) -> ContextSet {
        self.elements.difference(&other.elements).cloned().collect()
    }

    pub fn is_subset(&self, other: &ContextSet) -> bool {
        self.elements.is_subset(&other.elements)
    }
}

impl FromIterator<Context> for ContextSet {
    fn from_iter<I: IntoIterator<Item = Context>>(iter: I) -> Self {
        ContextSet {
            elements: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for ContextSet {
    type Item = Context;
    type IntoIter = std::collections::btree_set::IntoIter<Context>;
    fn into_iter(self) -> Self::IntoIter {
        self.elements.into_iter()
    }
}

impl fmt::Display for ContextSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

impl FromStr for ContextSet {
    type Err = ContextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = TextCursor::new(s);
        let set = cur.context_set()?;
        cur.finish()?;
        Ok(set)
    }
}

/// The finite range of tags a `Box` enumerates for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagDomain {
    dimension: DimensionName,
    values: Vec<Tag>,
}

impl TagDomain {
    pub fn new(dimension: DimensionName, values: Vec<Tag>) -> Result<Self, ContextError> {
        if values.is_empty() {
            return Err(ContextError::InvalidDomain(dimension, "empty domain"));
        }
        let distinct: BTreeSet<&Tag> = values.iter().collect();
        if distinct.len() != values.len() {
            return Err(ContextError::InvalidDomain(dimension, "duplicate tag"));
        }
        Ok(TagDomain { dimension, values })
    }

    /// Inclusive integer range `lo..=hi`.
    pub fn range(dimension: DimensionName, lo: i64, hi: i64) -> Result<Self, ContextError> {
        Self::new(dimension, (lo..=hi).map(Tag::Int).collect())
    }

    pub fn dimension(&self) -> &DimensionName {
        &self.dimension
    }

    pub fn values(&self) -> &[Tag] {
        &self.values
    }
}

/// `Box[d1 in D1, …, dn in Dn | p]`: every context of the cross product of
/// the domains that satisfies `predicate`.
pub fn box_contexts<E, F>(domains: &[TagDomain], mut predicate: F) -> Result<ContextSet, E>
where
    E: From<ContextError>,
    F: FnMut(&Context) -> Result<bool, E>,
{
    if domains.is_empty() {
        return Err(ContextError::InvalidBox("no dimensions".into()).into());
    }
    let mut seen = BTreeSet::new();
    for d in domains {
        if !seen.insert(d.dimension()) {
            return Err(ContextError::InvalidBox(format!("dimension `{}` listed twice", d.dimension())).into());
        }
    }

    let mut out = ContextSet::new();
    // odometer over the domain indices
    let mut idx = vec![0usize; domains.len()];
    loop {
        let candidate = Context::from_pairs(
            domains
                .iter()
                .zip(&idx)
                .map(|(d, &i)| (d.dimension.clone(), d.values[i].clone())),
        );
        if predicate(&candidate)? {
            out.insert(candidate);
        }
        let mut pos = domains.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < domains[pos].values.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Cursor over the canonical text forms of tags, contexts and sets.
/// Also reused by the value parser in `lang`.
pub(crate) struct TextCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> TextCursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        TextCursor { src, pos: 0 }
    }

    pub(crate) fn err(&self, message: impl Into<String>) -> ContextError {
        ContextError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    pub(crate) fn advance(&mut self, n: usize) {
        self.pos += n;
    }

    pub(crate) fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub(crate) fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<(), ContextError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    pub(crate) fn finish(&mut self) -> Result<(), ContextError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<&'a str, ContextError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_alphanumeric() || c == '_' || (i > 0 && c == '\'')))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    pub(crate) fn string(&mut self) -> Result<String, ContextError> {
        self.expect('"')?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, c @ ('"' | '\\'))) => out.push(c),
                    _ => return Err(self.err("bad escape")),
                },
                c => out.push(c),
            }
        }
        Err(self.err("unterminated string"))
    }

    /// A scalar: int, float, string or bool.
    pub(crate) fn tag(&mut self) -> Result<Tag, ContextError> {
        match self.peek() {
            Some('"') => Ok(Tag::Str(self.string()?)),
            Some(c) if c == '-' || c.is_ascii_digit() || c == 'i' || c == 'n' => self.number(),
            _ => {
                if self.eat_word("true") {
                    Ok(Tag::Bool(true))
                } else if self.eat_word("false") {
                    Ok(Tag::Bool(false))
                } else {
                    Err(self.err("expected tag"))
                }
            }
        }
    }

    /// Consumes `w` only when it is not the prefix of a longer identifier.
    pub(crate) fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with(w)
            && !rest[w.len()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<Tag, ContextError> {
        self.skip_ws();
        for (word, v) in [("-inf", f64::NEG_INFINITY), ("inf", f64::INFINITY), ("nan", f64::NAN)] {
            if self.eat_word(word) {
                return Ok(Tag::Float(v));
            }
        }
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || ((c == '-' || c == '+') && (i == 0 || matches!(rest.as_bytes()[i - 1], b'e' | b'E'))))
            })
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let lexeme = &rest[..len];
        let tag = if lexeme.contains(['.', 'e', 'E']) {
            lexeme.parse::<f64>().map(Tag::Float).map_err(|_| self.err("bad float"))?
        } else {
            lexeme.parse::<i64>().map(Tag::Int).map_err(|_| self.err("bad integer"))?
        };
        self.pos += len;
        Ok(tag)
    }

    pub(crate) fn context(&mut self) -> Result<Context, ContextError> {
        self.expect('[')?;
        let mut ctx = Context::new();
        if self.eat(']') {
            return Ok(ctx);
        }
        loop {
            let dim = DimensionName::new(self.ident()?)?;
            self.expect(':')?;
            let tag = self.tag()?;
            if ctx.contains(dim.as_str()) {
                return Err(self.err(format!("dimension `{dim}` bound twice")));
            }
            ctx.bindings.insert(dim, tag);
            if self.eat(']') {
                return Ok(ctx);
            }
            self.expect(',')?;
        }
    }

    pub(crate) fn context_set(&mut self) -> Result<ContextSet, ContextError> {
        self.expect('{')?;
        let mut set = ContextSet::new();
        if self.eat('}') {
            return Ok(set);
        }
        loop {
            set.insert(self.context()?);
            if self.eat('}') {
                return Ok(set);
            }
            self.expect(',')?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(s: &str) -> DimensionName {
        DimensionName::new(s).unwrap()
    }

    fn ctx(s: &str) -> Context {
        s.parse().unwrap()
    }

    #[test]
    fn override_examples() {
        assert_eq!(Context::new().override_with(&ctx("[d:1]")), ctx("[d:1]"));
        assert_eq!(ctx("[d:0,e:2]").override_with(&ctx("[d:5]")), ctx("[d:5,e:2]"));
        assert_eq!(ctx("[x:1]").override_with(&ctx("[x:1]")), ctx("[x:1]"));
    }

    #[test]
    fn lookup_examples() {
        assert_eq!(ctx("[t:0]").lookup(&dim("t")).unwrap(), &Tag::Int(0));
        let c = ctx(r#"[day:3,place:"Montreal"]"#);
        assert_eq!(c.lookup(&dim("place")).unwrap(), &Tag::from("Montreal"));
        assert_eq!(
            ctx("[t:0]").lookup(&dim("s")),
            Err(ContextError::UnboundDimension(dim("s")))
        );
    }

    #[test]
    fn project_and_dot() {
        let c = ctx("[x:3,y:4]");
        assert_eq!(c.project([&dim("x")]), ctx("[x:3]"));
        assert_eq!(ctx("[x:3]").project([]), Context::new());
        assert_eq!(ctx("[x:3]").project([&dim("y")]), Context::new());
        assert_eq!(c.dot(&dim("x")).unwrap(), Tag::Int(3));
        assert_eq!(ctx("[day:7]").dot(&dim("day")).unwrap(), Tag::Int(7));
        assert!(matches!(ctx("[x:3]").dot(&dim("z")), Err(ContextError::UnboundDimension(_))));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(ctx("[x:1]").merge(&ctx("[y:2]")).unwrap(), ctx("[x:1,y:2]"));
        assert_eq!(ctx("[x:1]").merge(&ctx("[x:1,y:2]")).unwrap(), ctx("[x:1,y:2]"));
        assert!(matches!(
            ctx("[x:1]").merge(&ctx("[x:2]")),
            Err(ContextError::ConflictingTags { .. })
        ));
    }

    #[test]
    fn hide_drops_dims() {
        assert_eq!(ctx("[x:1,y:2]").hide([&dim("y")]), ctx("[x:1]"));
    }

    #[test]
    fn box_examples() {
        let doms = [
            TagDomain::range(dim("d1"), 0, 1).unwrap(),
            TagDomain::range(dim("d2"), 0, 1).unwrap(),
        ];
        let all = box_contexts::<ContextError, _>(&doms, |_| Ok(true)).unwrap();
        assert_eq!(all.len(), 4);

        let le = box_contexts::<ContextError, _>(&doms, |c| {
            Ok(c.get("d1").unwrap().try_cmp(c.get("d2").unwrap())? != Ordering::Greater)
        })
        .unwrap();
        assert_eq!(le, "{[d1:0,d2:0],[d1:0,d2:1],[d1:1,d2:1]}".parse().unwrap());

        let one = [TagDomain::range(dim("d"), 1, 3).unwrap()];
        assert!(box_contexts::<ContextError, _>(&one, |_| Ok(false)).unwrap().is_empty());
    }

    #[test]
    fn box_rejects_bad_shapes() {
        assert!(box_contexts::<ContextError, _>(&[], |_| Ok(true)).is_err());
        let d = TagDomain::range(dim("d"), 0, 1).unwrap();
        assert!(box_contexts::<ContextError, _>(&[d.clone(), d], |_| Ok(true)).is_err());
        assert!(TagDomain::new(dim("d"), vec![]).is_err());
        assert!(TagDomain::new(dim("d"), vec![Tag::Int(1), Tag::Int(1)]).is_err());
    }

    #[test]
    fn set_examples() {
        let a: ContextSet = "{[d:1]}".parse().unwrap();
        let b: ContextSet = "{[d:2]}".parse().unwrap();
        assert_eq!(a.union(&b), "{[d:1],[d:2]}".parse().unwrap());
        let ab = a.union(&b);
        assert_eq!(ab.intersect(&b), b);
        assert!(a.difference(&a).is_empty());
    }

    #[test]
    fn mixed_kind_ordering_is_an_error() {
        assert!(Tag::Int(1).try_cmp(&Tag::from("a")).is_err());
        assert_eq!(Tag::Int(1).try_cmp(&Tag::Int(2)).unwrap(), Ordering::Less);
    }

    #[test]
    fn canonical_text() {
        let c = Context::new()
            .with(dim("z"), 1.0)
            .with(dim("a"), "x \"q\"")
            .with(dim("m"), true)
            .with(dim("b"), -4);
        assert_eq!(c.to_string(), r#"[a:"x \"q\"",b:-4,m:true,z:1.0]"#);
        assert_eq!(c.to_string().parse::<Context>().unwrap(), c);
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(1e300), "1e300");
        assert!("[t:]".parse::<Context>().is_err());
        assert!("[t:1,t:2]".parse::<Context>().is_err());
        assert!("[1t:2]".parse::<Context>().is_err());
    }

    #[test]
    fn dimension_names() {
        assert!(DimensionName::new("t_1").is_ok());
        assert!(DimensionName::new("").is_err());
        assert!(DimensionName::new("_t").is_err());
        assert!(DimensionName::new("a-b").is_err());
    }
}
