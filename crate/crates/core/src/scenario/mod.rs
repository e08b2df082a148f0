//! Scenario (`.scn`) and situation (`.sit`) description language.
//!
//! A scenario describes the stationary world: ground obstacles, a layered
//! road network of lanes with ordered waypoints and connectors, and zones.
//! A situation places dynamic objects with scripted or external behavior
//! into a named scenario. The normative grammar is `docs/grammar.ebnf`.

mod lexer;
mod model;
mod obstacles;
mod parser;
mod printer;
mod route;
mod validate;

pub use model::*;
pub use obstacles::{extract_obstacles, ground_segments, Footprint, CYLINDER_FACETS};
pub use parser::{parse, parse_scenario, parse_situation};
pub use route::{Route, RouteError, RouteGraph};
pub use validate::{validate_scenario, validate_situation, Rule, SemanticError};

use std::fmt;

/// A lexical or grammatical error at a 1-based line/column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SyntaxError {}
