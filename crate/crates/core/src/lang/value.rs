use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::context::{format_float, quote_str, Context, ContextError, ContextSet, DimensionName, Tag, TextCursor};

/// Runtime values.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Ctx(Context),
    CtxSet(ContextSet),
    DimRef(DimensionName),
    FunRef(String),
    OpRef(String),
    Eod,
    /// Result of evaluating an expression over a context set.
    ValueSet(BTreeSet<Value>),
}

impl Value {
    fn kind_rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Str(_) => 3,
            Value::Ctx(_) => 4,
            Value::CtxSet(_) => 5,
            Value::DimRef(_) => 6,
            Value::FunRef(_) => 7,
            Value::OpRef(_) => 8,
            Value::Eod => 9,
            Value::ValueSet(_) => 10,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Ctx(_) => "context",
            Value::CtxSet(_) => "context set",
            Value::DimRef(_) => "dimension",
            Value::FunRef(_) => "function",
            Value::OpRef(_) => "operator",
            Value::Eod => "eod",
            Value::ValueSet(_) => "value set",
        }
    }

    /// Scalars double as tags.
    pub fn to_tag(&self) -> Option<Tag> {
        match self {
            Value::Int(i) => Some(Tag::Int(*i)),
            Value::Float(f) => Some(Tag::Float(*f)),
            Value::Bool(b) => Some(Tag::Bool(*b)),
            Value::Str(s) => Some(Tag::Str(s.clone())),
            _ => None,
        }
    }

    /// Ground values carry no references to program identifiers.
    pub fn is_ground(&self) -> bool {
        match self {
            Value::DimRef(_) | Value::FunRef(_) | Value::OpRef(_) => false,
            Value::ValueSet(vs) => vs.iter().all(Value::is_ground),
            _ => true,
        }
    }

    /// How this value is written as a source literal.
    pub fn source_form(&self) -> String {
        match self {
            Value::Float(f) if f.is_nan() => "(0.0 / 0.0)".into(),
            Value::Float(f) if f.is_infinite() => {
                if *f > 0.0 { "(1.0 / 0.0)".into() } else { "(-1.0 / 0.0)".into() }
            }
            Value::DimRef(d) => d.to_string(),
            Value::FunRef(f) | Value::OpRef(f) => f.clone(),
            other => other.to_string(),
        }
    }
}

impl From<Tag> for Value {
    fn from(t: Tag) -> Self {
        match t {
            Tag::Int(i) => Value::Int(i),
            Tag::Float(f) => Value::Float(f),
            Tag::Bool(b) => Value::Bool(b),
            Tag::Str(s) => Value::Str(s),
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Bool(a), Bool(b)) => a.cmp(b),
            (Str(a), Str(b)) => a.cmp(b),
            (Ctx(a), Ctx(b)) => a.cmp(b),
            (CtxSet(a), CtxSet(b)) => a.cmp(b),
            (DimRef(a), DimRef(b)) => a.cmp(b),
            (FunRef(a), FunRef(b)) | (OpRef(a), OpRef(b)) => a.cmp(b),
            (Eod, Eod) => Ordering::Equal,
            (ValueSet(a), ValueSet(b)) => a.cmp(b),
            _ => self.kind_rank().cmp(&other.kind_rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind_rank().hash(state);
        match self {
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Bool(b) => b.hash(state),
            Value::Str(s) | Value::FunRef(s) | Value::OpRef(s) => s.hash(state),
            Value::Ctx(c) => c.hash(state),
            Value::CtxSet(s) => s.hash(state),
            Value::DimRef(d) => d.hash(state),
            Value::Eod => {}
            Value::ValueSet(vs) => vs.hash(state),
        }
    }
}

/// Canonical value text: scalars as tags, contexts and context sets in their
/// canonical forms, `dim(t)`, `fun(f)`, `op(+)`, `eod`, and `set{v,…}`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => {
                let mut out = String::new();
                quote_str(s, &mut out);
                f.write_str(&out)
            }
            Value::Ctx(c) => write!(f, "{c}"),
            Value::CtxSet(s) => write!(f, "{s}"),
            Value::DimRef(d) => write!(f, "dim({d})"),
            Value::FunRef(n) => write!(f, "fun({n})"),
            Value::OpRef(n) => write!(f, "op({n})"),
            Value::Eod => f.write_str("eod"),
            Value::ValueSet(vs) => {
                f.write_str("set{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl FromStr for Value {
    type Err = ContextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = TextCursor::new(s);
        let v = parse_value(&mut cur)?;
        cur.finish()?;
        Ok(v)
    }
}

fn parse_value(cur: &mut TextCursor<'_>) -> Result<Value, ContextError> {
    match cur.peek() {
        Some('[') => return Ok(Value::Ctx(cur.context()?)),
        Some('{') => return Ok(Value::CtxSet(cur.context_set()?)),
        _ => {}
    }
    if cur.eat_word("eod") {
        return Ok(Value::Eod);
    }
    if cur.eat_str("set{") {
        let mut vs = BTreeSet::new();
        if !cur.eat('}') {
            loop {
                vs.insert(parse_value(cur)?);
                if cur.eat('}') {
                    break;
                }
                cur.expect(',')?;
            }
        }
        return Ok(Value::ValueSet(vs));
    }
    for (prefix, ctor) in [
        ("dim(", 0u8),
        ("fun(", 1),
        ("op(", 2),
    ] {
        if cur.eat_str(prefix) {
            let rest = cur.rest();
            let end = rest.find(')').ok_or_else(|| cur.err("unterminated reference"))?;
            let name = rest[..end].trim().to_string();
            let consumed = end + 1;
            let v = match ctor {
                0 => Value::DimRef(DimensionName::new(name)?),
                1 => Value::FunRef(name),
                _ => Value::OpRef(name),
            };
            cur.advance(consumed);
            return Ok(v);
        }
    }
    Ok(Value::from(cur.tag()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let vs: Vec<Value> = vec![
            Value::Int(-3),
            Value::Float(2.5),
            Value::Float(3.0),
            Value::Bool(false),
            Value::Str("a,b)".into()),
            Value::Ctx("[t:1]".parse().unwrap()),
            Value::CtxSet("{[t:1],[t:2]}".parse().unwrap()),
            Value::DimRef(DimensionName::new("t").unwrap()),
            Value::FunRef("f'2".into()),
            Value::OpRef("<=".into()),
            Value::Eod,
            Value::ValueSet([Value::Int(10), Value::Int(20)].into_iter().collect()),
            Value::ValueSet([Value::Ctx("[t:1]".parse().unwrap())].into_iter().collect()),
        ];
        for v in vs {
            let text = v.to_string();
            assert_eq!(text.parse::<Value>().unwrap(), v, "{text}");
        }
        assert_eq!(Value::Float(3.0).to_string(), "3.0");
    }

    #[test]
    fn int_and_float_are_distinct() {
        assert_ne!(Value::Int(1), Value::Float(1.0));
        assert_eq!("1".parse::<Value>().unwrap(), Value::Int(1));
        assert_eq!("1.0".parse::<Value>().unwrap(), Value::Float(1.0));
    }
}
