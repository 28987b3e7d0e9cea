use core::fmt;

/// Errors raised by the table builders, oracles and the policy executor.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A prevalence outside the open interval (0, 1), or not finite.
    InvalidPrevalence { q: f64 },
    /// An argument violated a documented domain constraint.
    Domain(&'static str),
    /// An exponent or population size beyond what the kernel was built for.
    Capacity { requested: usize, capacity: usize },
    /// A state or population size beyond what a table holds.
    OutOfRange { index: usize, limit: usize },
    /// A group size that breaks the subset rules of the state it is applied to.
    Contract { m: usize, x: usize },
    /// The triangular R1 state space would not fit the configured memory budget.
    MemoryBudget {
        n_top: usize,
        states: usize,
        bytes: u128,
        budget: u64,
    },
    /// Exhaustive enumeration would visit more assignments than allowed.
    EnumerationBudget {
        n: usize,
        assignments: u128,
        limit: u128,
    },
    /// An outcome was reported for a group that is not the one outstanding.
    Protocol(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidPrevalence { q } => {
                write!(f, "prevalence q must satisfy 0 < q < 1 and be finite, got {q}")
            }
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Capacity {
                requested,
                capacity,
            } => write!(
                f,
                "exponent {requested} exceeds kernel capacity {capacity}"
            ),
            Error::OutOfRange { index, limit } => {
                write!(f, "index {index} is outside the table (largest is {limit})")
            }
            Error::Contract { m, x } => write!(
                f,
                "group of {x} units is not a proper nonempty subset of a defective set of {m}"
            ),
            Error::MemoryBudget {
                n_top,
                states,
                bytes,
                budget,
            } => write!(
                f,
                "R1 table for n_top={n_top} needs {states} triangular states ({bytes} bytes), over the {budget}-byte budget"
            ),
            Error::EnumerationBudget {
                n,
                assignments,
                limit,
            } => write!(
                f,
                "exhaustive search at n={n} would enumerate {assignments} policies (limit {limit})"
            ),
            Error::Protocol(what) => write!(f, "protocol error: {what}"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Resource errors (capacity, memory and enumeration budgets) as opposed to
    /// bad arguments.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Capacity { .. } | Error::MemoryBudget { .. } | Error::EnumerationBudget { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
