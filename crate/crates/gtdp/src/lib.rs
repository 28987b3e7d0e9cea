//! Persistence, reproduction checks, interactive sessions and the `gtdp`
//! command line on top of `gtdp-core`.

pub mod cli;
pub mod session;
pub mod store;
pub mod table;
pub mod verify;

pub use store::{load_table, save_table, Cache, DecodeError, StoreError};
pub use table::{obtain, Provenance, Table, TableSpec};
