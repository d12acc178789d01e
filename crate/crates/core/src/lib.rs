//! A workbench for the finite probabilistic pi-calculus: parsing, operational
//! semantics, testing, characteristic formulas and tests, and may/must preorders.

pub mod error;
mod flow;
pub mod gen;
pub mod logic;
pub mod lp;
pub mod name;
pub mod preorders;
pub mod dist;
pub mod rat;
pub mod semantics;
pub mod syntax;
pub mod testing;

pub use error::{Error, Result};
pub use name::{fresh, Name, Polarity};
pub use rat::Rat;
