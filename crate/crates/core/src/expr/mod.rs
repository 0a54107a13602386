//! Scalar expressions in `(t, x, v)` with exact second-order partials in `(x, v)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right associative, binds tighter than unary minus
//! atom  := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `t`, `x`, `v` and the functions `sin`, `cos`,
//! `exp`, `ln`, `sqrt`. Non-smooth primitives (`abs`, `min`, `max`, `sign`)
//! are rejected on purpose: every ingredient must be twice differentiable.

mod ast;
mod eval;
mod hyperdual;
mod parse;

pub use ast::{BinOp, Expr, Func, Var};
pub use eval::{eval2, validate_arity};
pub use hyperdual::HyperDual;
pub use parse::{parse, ParseError, ParseErrorKind};
