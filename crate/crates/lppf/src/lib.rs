//! Logic programs with partial functions.
//!
//! Answer set programming where every atom is a function with at most one
//! value: `:=` assigns, `^=` assigns a default that yields to any other
//! value, `~p` makes a Boolean function false. Solving records every rule
//! instance that supports each value so conclusions can be explained as
//! proof trees, optionally filtered through natural-language rule labels.
//!
//! The pipeline is [`syntax::parse`] → [`ground::ground`] →
//! [`solve::solve`] → [`explain::explain`].

pub mod explain;
pub mod ground;
pub mod output;
pub mod solve;
pub mod syntax;
pub mod value;

pub use value::{Assignment, Key, Value};
