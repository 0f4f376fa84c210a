use alloc::string::String;
use core::fmt;

use crate::network::VarId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong while building a network or running a query.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyStates(String),
    DuplicateVariable(String),
    DuplicateState {
        variable: String,
        state: String,
    },
    UnknownVariable(String),
    MissingCpt(String),
    DuplicateCpt(String),
    DuplicateParent {
        child: String,
        parent: String,
    },
    Cycle(String),
    TableLength {
        child: String,
        expected: usize,
        found: usize,
    },
    ProbabilityOutOfRange {
        child: String,
        index: usize,
        value: f64,
    },
    RowNotNormalized {
        child: String,
        row: usize,
        sum: f64,
    },

    UnknownVariableId(VarId),
    StateOutOfRange {
        variable: VarId,
        state: usize,
        cardinality: usize,
    },

    /// A variable would be eliminated twice: the factoring is malformed.
    TracebackCollision(VarId),
    /// Entries being summed carry different argmax records.
    TracebackDivergence(VarId),
    NotInScope(VarId),
    CardinalityMismatch(VarId),
    SpaceMismatch,

    EmptyFactorList,
    TooManyFactorsForExhaustive {
        count: usize,
        max: usize,
    },
    InvalidPlan(String),

    EmptyNetwork,
    PartialAssignment(VarId),

    EmptyQuery,
    QueryOverlapsEvidence(VarId),

    TooLargeForOracle {
        size: u128,
        max: u128,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyStates(v) => write!(f, "variable `{v}` has no states"),
            Error::DuplicateVariable(v) => write!(f, "duplicate variable `{v}`"),
            Error::DuplicateState { variable, state } => {
                write!(f, "variable `{variable}` lists state `{state}` twice")
            }
            Error::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            Error::MissingCpt(v) => write!(f, "no conditional table for `{v}`"),
            Error::DuplicateCpt(v) => write!(f, "more than one conditional table for `{v}`"),
            Error::DuplicateParent { child, parent } => {
                write!(f, "`{child}` lists parent `{parent}` twice (or itself)")
            }
            Error::Cycle(v) => write!(f, "the parent graph has a cycle through `{v}`"),
            Error::TableLength { child, expected, found } => {
                write!(f, "table for `{child}` has {found} entries, expected {expected}")
            }
            Error::ProbabilityOutOfRange { child, index, value } => {
                write!(f, "table for `{child}` entry {index} = {value} is not a probability")
            }
            Error::RowNotNormalized { child, row, sum } => {
                write!(f, "table for `{child}` row {row} sums to {sum}")
            }
            Error::UnknownVariableId(v) => write!(f, "unknown variable id {v}"),
            Error::StateOutOfRange { variable, state, cardinality } => {
                write!(f, "state {state} out of range for variable {variable} (cardinality {cardinality})")
            }
            Error::TracebackCollision(v) => {
                write!(f, "variable {v} is eliminated on both sides of a product")
            }
            Error::TracebackDivergence(v) => {
                write!(f, "summing out variable {v} would merge entries with different argmax records")
            }
            Error::NotInScope(v) => write!(f, "variable {v} is not in the factor's scope"),
            Error::CardinalityMismatch(v) => {
                write!(f, "variable {v} has different cardinalities in two factors")
            }
            Error::SpaceMismatch => write!(f, "factors use different value spaces"),
            Error::EmptyFactorList => write!(f, "cannot build a factoring over zero factors"),
            Error::TooManyFactorsForExhaustive { count, max } => {
                write!(f, "exhaustive factoring allows at most {max} factors, got {count}")
            }
            Error::InvalidPlan(msg) => write!(f, "invalid factoring plan: {msg}"),
            Error::EmptyNetwork => write!(f, "the network has no variables"),
            Error::PartialAssignment(v) => write!(f, "assignment is missing variable {v}"),
            Error::EmptyQuery => write!(f, "the query set is empty"),
            Error::QueryOverlapsEvidence(v) => {
                write!(f, "query variable {v} is also observed as evidence")
            }
            Error::TooLargeForOracle { size, max } => {
                write!(f, "brute force would enumerate {size} assignments (limit {max})")
            }
        }
    }
}

impl core::error::Error for Error {}
