//! Sample programs with the tag ranges they are meant to be run over.

use crate::context::{Context, DimensionName, Tag};

#[derive(Debug, Clone, Copy)]
pub enum Range {
    /// Inclusive integer range.
    Ints(i64, i64),
    Strs(&'static [&'static str]),
}

impl Range {
    pub fn tags(&self) -> Vec<Tag> {
        match self {
            Range::Ints(lo, hi) => (*lo..=*hi).map(Tag::Int).collect(),
            Range::Strs(v) => v.iter().map(|s| Tag::Str(s.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub source: &'static str,
    pub ranges: &'static [(&'static str, Range)],
}

impl CorpusProgram {
    /// Every point of the cartesian product of the ranges.
    pub fn points(&self) -> Vec<Context> {
        let mut out = vec![Context::new()];
        for (dim, range) in self.ranges {
            let d = DimensionName::new(*dim).expect("corpus dimension names are valid");
            out = out
                .iter()
                .flat_map(|c| range.tags().into_iter().map(|t| c.clone().with(d.clone(), t)))
                .collect();
        }
        out
    }
}

pub const PLACES: &[&str] = &["Montreal", "Honolulu", "New York", "Tampa"];

macro_rules! program {
    ($name:literal, [$(($dim:literal, $range:expr)),* $(,)?]) => {
        CorpusProgram {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".ipl")),
            ranges: &[$(($dim, $range)),*],
        }
    };
}

pub const CORPUS: &[CorpusProgram] = &[
    program!("raining", [("day", Range::Ints(0, 10))]),
    program!("raining_places", [("day", Range::Ints(0, 8)), ("place", Range::Strs(PLACES))]),
    program!("naturals", [("t", Range::Ints(0, 12))]),
    program!("fib", [("t", Range::Ints(0, 20))]),
    program!("factorial", [("n", Range::Ints(0, 12))]),
    program!("running_sum", [("t", Range::Ints(0, 12))]),
    program!("whenever", [("t", Range::Ints(-1, 8))]),
    program!("as_soon_as", [("t", Range::Ints(0, 3)), ("s", Range::Ints(0, 20))]),
    program!("upon", [("t", Range::Ints(-1, 10))]),
    program!("first_prev", [("t", Range::Ints(-2, 6))]),
    program!("grid", [("i", Range::Ints(0, 4)), ("j", Range::Ints(0, 4))]),
    program!("transpose", [("i", Range::Ints(0, 4)), ("j", Range::Ints(0, 4))]),
    program!("context_ops", [("i", Range::Ints(0, 3)), ("j", Range::Ints(0, 3))]),
    program!("box_set", [("d", Range::Ints(0, 2))]),
    program!("context_set", [("d", Range::Ints(0, 2)), ("e", Range::Ints(0, 3))]),
    program!("select", [("t", Range::Ints(0, 8))]),
    program!("nested_where", [("t", Range::Ints(0, 6))]),
    program!("collatz", [("n", Range::Ints(0, 30))]),
    program!("hypotenuse", [("k", Range::Ints(0, 5))]),
    program!("merge_dot", [("t", Range::Ints(0, 6))]),
    program!("tuple_eod", [("t", Range::Ints(-1, 5))]),
    program!("gcd", [("a", Range::Ints(0, 9)), ("b", Range::Ints(0, 9))]),
    program!("powers", [("t", Range::Ints(0, 16))]),
    program!("floats", [("t", Range::Ints(0, 6))]),
    program!("strings", [("w", Range::Ints(0, 2))]),
    program!("set_ops", [("e", Range::Ints(0, 5))]),
    program!("collatz_sum", [("n", Range::Ints(0, 59))]),
];

pub fn find(name: &str) -> Option<&'static CorpusProgram> {
    CORPUS.iter().find(|p| p.name == name)
}
