//! Intensional language toolchain: the context calculus, a compiler from
//! source to the GEER dictionary, and eductive evaluation.

pub mod context;
pub mod corpus;
pub mod gee;
pub mod gipc;
pub mod lang;

pub use context::{Context, ContextError, ContextSet, DimensionName, Tag, TagDomain};
pub use gee::EvalError;
pub use gipc::{compile, compile_surface, CompileError};
pub use lang::{Geer, Value};
