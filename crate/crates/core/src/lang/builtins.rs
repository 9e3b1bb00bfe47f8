//! The built-in operator table, preloaded into every program's dictionary
//! as `(op, f)` entries.

/// What family an operator belongs to. Context and set operators are the
/// `cop`/`sop` classes of the context calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpClass {
    Scalar,
    Context,
    Set,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OpInfo {
    pub name: &'static str,
    pub arity: Arity,
    pub class: OpClass,
}

const OPS: &[OpInfo] = &[
    op("+", 2, OpClass::Scalar),
    op("-", 2, OpClass::Scalar),
    op("*", 2, OpClass::Scalar),
    op("/", 2, OpClass::Scalar),
    op("%", 2, OpClass::Scalar),
    op("==", 2, OpClass::Scalar),
    op("!=", 2, OpClass::Scalar),
    op("<", 2, OpClass::Scalar),
    op("<=", 2, OpClass::Scalar),
    op(">", 2, OpClass::Scalar),
    op(">=", 2, OpClass::Scalar),
    op("&&", 2, OpClass::Scalar),
    op("||", 2, OpClass::Scalar),
    op("!", 1, OpClass::Scalar),
    op("neg", 1, OpClass::Scalar),
    op("iseod", 1, OpClass::Scalar),
    op("merge", 2, OpClass::Context),
    op("override", 2, OpClass::Context),
    OpInfo { name: "project", arity: Arity::AtLeast(1), class: OpClass::Context },
    OpInfo { name: "hide", arity: Arity::AtLeast(1), class: OpClass::Context },
    op("union", 2, OpClass::Set),
    op("intersect", 2, OpClass::Set),
    op("difference", 2, OpClass::Set),
];

const fn op(name: &'static str, n: usize, class: OpClass) -> OpInfo {
    OpInfo { name, arity: Arity::Exactly(n), class }
}

pub fn lookup(name: &str) -> Option<&'static OpInfo> {
    OPS.iter().find(|o| o.name == name)
}

pub fn all() -> &'static [OpInfo] {
    OPS
}

/// Operators written between their operands in source.
pub fn is_infix(sym: &str) -> bool {
    matches!(
        sym,
        "+" | "-" | "*" | "/" | "%" | "==" | "!=" | "<" | "<=" | ">" | ">=" | "&&" | "||"
    )
}

/// Operators that can be referenced by name in source (`union(a, b)`).
pub fn is_named(name: &str) -> bool {
    lookup(name).is_some_and(|o| o.name.chars().all(|c| c.is_ascii_alphabetic()) && o.name != "neg")
}
