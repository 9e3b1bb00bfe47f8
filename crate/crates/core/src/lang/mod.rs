//! Language core: syntax trees, runtime values and the GEER dictionary.

pub mod ast;
pub mod builtins;
pub mod geer;
pub mod rank;
pub mod sexp;
pub mod value;

pub use ast::{BoxDim, Decl, Expr, NavOp, Pos};
pub use geer::{EntryKind, Geer, GeerEntry, GeerError};
pub use rank::{free_dims, Rank, UnresolvedIdentifier};
pub use value::Value;
