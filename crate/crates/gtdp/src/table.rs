//! One type over both engines' tables, plus cached construction.

use std::path::PathBuf;
use std::time::Instant;

use gtdp_core::{Policy, Prevalence, Procedure, R1Options, R1Table, R3Table};

use crate::store::{Cache, StoreError};

/// A built table of either procedure.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    R1(R1Table),
    R3(R3Table),
}

impl Table {
    pub fn procedure(&self) -> Procedure {
        match self {
            Table::R1(_) => Procedure::R1,
            Table::R3(_) => Procedure::R3,
        }
    }

    pub fn prevalence(&self) -> Prevalence {
        match self {
            Table::R1(t) => t.prevalence(),
            Table::R3(t) => t.prevalence(),
        }
    }

    pub fn n_top(&self) -> usize {
        match self {
            Table::R1(t) => t.n_top(),
            Table::R3(t) => t.n_top(),
        }
    }

    pub fn expected(&self, n: usize) -> gtdp_core::Result<f64> {
        match self {
            Table::R1(t) => t.expected(n),
            Table::R3(t) => t.expected(n),
        }
    }

    /// First test size, `None` for an empty population.
    pub fn first_test(&self, n: usize) -> gtdp_core::Result<Option<usize>> {
        if n == 0 {
            self.expected(0)?;
            return Ok(None);
        }
        match self {
            Table::R1(t) => t.first_test_size(n).map(Some),
            Table::R3(t) => t.first_test_size(n).map(Some),
        }
    }

    pub fn policy(&self) -> &(dyn Policy + Sync) {
        match self {
            Table::R1(t) => t,
            Table::R3(t) => t,
        }
    }
}

/// What to build: procedure, prevalence, size and engine flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSpec {
    pub procedure: Procedure,
    pub prevalence: Prevalence,
    pub n_top: usize,
    /// R3 only: restrict first groups to at most `n_max(q)`.
    pub cap_to_nmax: bool,
    /// R1 only: windowed argmin search.
    pub windowed: bool,
    pub memory_budget: u64,
}

impl TableSpec {
    pub fn new(procedure: Procedure, prevalence: Prevalence, n_top: usize) -> Self {
        TableSpec {
            procedure,
            prevalence,
            n_top,
            cap_to_nmax: false,
            windowed: false,
            memory_budget: gtdp_core::r1::DEFAULT_MEMORY_BUDGET,
        }
    }

    /// Engine flags that change the stored planes, as a cache-name suffix.
    pub(crate) fn variant(&self) -> &'static str {
        match self.procedure {
            Procedure::R1 if self.windowed => "-win",
            Procedure::R3 if self.cap_to_nmax => "-cap",
            _ => "",
        }
    }

    pub fn build(&self) -> gtdp_core::Result<Table> {
        match self.procedure {
            Procedure::R1 => R1Table::build(
                self.prevalence,
                self.n_top,
                R1Options {
                    windowed: self.windowed,
                    memory_budget: self.memory_budget,
                },
            )
            .map(Table::R1),
            Procedure::R3 => {
                R3Table::build(self.prevalence, self.n_top, self.cap_to_nmax).map(Table::R3)
            }
        }
    }
}

/// Where a table came from and how long it took to obtain.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub from_cache: bool,
    pub path: Option<PathBuf>,
    pub elapsed_ms: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ObtainError {
    #[error(transparent)]
    Engine(#[from] gtdp_core::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Loads a cached table covering `spec`, or builds one and caches it.
pub fn obtain(spec: &TableSpec, cache: Option<&Cache>) -> Result<(Table, Provenance), ObtainError> {
    let start = Instant::now();
    if let Some(cache) = cache {
        if let Some((table, path)) = cache.lookup(spec)? {
            return Ok((
                table,
                Provenance {
                    from_cache: true,
                    path: Some(path),
                    elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                },
            ));
        }
    }
    let table = spec.build()?;
    let path = match cache {
        Some(cache) => Some(cache.store(spec, &table)?),
        None => None,
    };
    Ok((
        table,
        Provenance {
            from_cache: false,
            path,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    ))
}
