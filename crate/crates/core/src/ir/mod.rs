//! Plonkish circuit model: a grid of advice, fixed, instance and selector
//! columns constrained by custom gates, lookups and copy equalities.

pub mod builder;
pub mod check;
pub mod column;
pub mod expression;
pub mod layout;

pub use builder::{CircuitBuilder, GateId, LookupId, DEFAULT_BLINDING_ROWS, DEFAULT_MAX_DEGREE};
pub use check::{check_constraints, SatisfactionReport, Violation, ViolationKind};
pub use column::{CellRef, Column, ColumnKind, PagedColumn};
pub use expression::{Expression, Query};
pub use layout::{padded_rows, CircuitLayout, CopyConstraintSet, CustomGate, LayoutStats, LookupArgument, WitnessGrid};
