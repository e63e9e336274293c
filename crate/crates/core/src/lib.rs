//! LanQ: a typed imperative language for quantum programs, with an
//! interpreter over density-matrix states.

pub mod eval;
pub mod internal;
pub mod memory;
pub mod name;
pub mod parser;
pub mod program;
pub mod quantum;
pub mod types;
pub mod typing;
pub mod varprops;

pub use name::Name;
pub use types::TypeExpr;
