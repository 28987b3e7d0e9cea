//! Dynamic programs for nested group testing.
//!
//! Two procedures are covered: the optimal nested procedure ([`R1Table`]),
//! where units left untested in a split defective set rejoin the pool, and the
//! restricted procedure ([`R3Table`]), where they are resolved in isolation.
//! The [`oracle`] module enumerates policies exhaustively at small sizes,
//! [`baselines`] holds closed-form references, and [`sim`] executes a table's
//! policy on labelled units.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature only adds
//! parallel Monte Carlo trials.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod baselines;
pub mod error;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod r1;
pub mod r3;
pub mod sim;

pub use baselines::{dorfman_cost, info_bound, n_max, BoundReport};
pub use error::{Error, Result};
pub use model::{
    BinomialState, DefectiveState, GroupChoice, PowerKernel, Prevalence, Procedure, State,
};
pub use policy::Policy;
pub use r1::{R1Options, R1Table};
pub use r3::R3Table;
pub use sim::{simulate, SimEstimate};
