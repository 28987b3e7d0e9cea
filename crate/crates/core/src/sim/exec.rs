use alloc::vec;
use alloc::vec::Vec;

use super::labels::LabelSet;
use crate::error::{Error, Result};
use crate::model::Procedure;
use crate::policy::Policy;

/// What the executor wants done next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Pool these units and report whether the test is positive.
    Test(LabelSet),
    /// Every unit is classified.
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Outstanding {
    group: LabelSet,
    from_defective_set: bool,
}

/// Live knowledge while running a nested policy on labelled units.
///
/// Every label sits in exactly one of the pool, the defective set, a pending
/// subproblem, or one of the two classified sets. Pending subproblems only
/// arise under the restricted procedure and are worked last-in-first-out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionState {
    procedure: Procedure,
    population: usize,
    pool: LabelSet,
    defective_set: LabelSet,
    pending: Vec<LabelSet>,
    classified_good: LabelSet,
    classified_defective: LabelSet,
    tests_used: u64,
    outstanding: Option<Outstanding>,
}

impl ExecutionState {
    /// Fresh state for units `0..n`, all in the pool.
    pub fn new(procedure: Procedure, n: usize) -> Self {
        ExecutionState {
            procedure,
            population: n,
            pool: LabelSet::range(0, n as u32),
            defective_set: LabelSet::new(),
            pending: Vec::new(),
            classified_good: LabelSet::new(),
            classified_defective: LabelSet::new(),
            tests_used: 0,
            outstanding: None,
        }
    }

    pub fn procedure(&self) -> Procedure {
        self.procedure
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn pool(&self) -> &LabelSet {
        &self.pool
    }

    pub fn defective_set(&self) -> &LabelSet {
        &self.defective_set
    }

    pub fn pending(&self) -> &[LabelSet] {
        &self.pending
    }

    pub fn classified_good(&self) -> &LabelSet {
        &self.classified_good
    }

    pub fn classified_defective(&self) -> &LabelSet {
        &self.classified_defective
    }

    pub fn tests_used(&self) -> u64 {
        self.tests_used
    }

    pub fn is_complete(&self) -> bool {
        self.classified_good.len() + self.classified_defective.len() == self.population
    }

    /// The group handed out by the last `next_group` and not yet resolved.
    pub fn outstanding(&self) -> Option<&LabelSet> {
        self.outstanding.as_ref().map(|o| &o.group)
    }

    /// Checks that every label `0..population` sits in exactly one place.
    pub fn partition_holds(&self) -> bool {
        let mut seen = vec![0u8; self.population];
        let parts = [
            &self.pool,
            &self.defective_set,
            &self.classified_good,
            &self.classified_defective,
        ];
        for label in parts
            .into_iter()
            .chain(self.pending.iter())
            .flat_map(|s| s.iter())
        {
            match seen.get_mut(label as usize) {
                Some(c) => *c += 1,
                None => return false,
            }
        }
        seen.iter().all(|&c| c == 1)
    }

    fn count_holds(&self) -> bool {
        let pending: usize = self.pending.iter().map(LabelSet::len).sum();
        self.pool.len()
            + self.defective_set.len()
            + pending
            + self.classified_good.len()
            + self.classified_defective.len()
            == self.population
    }

    /// Decides the next group to test. Singleton defective sets are classified
    /// on the spot without a test. Calling again before `apply_outcome`
    /// returns the same group.
    pub fn next_group<P: Policy + ?Sized>(&mut self, policy: &P) -> Result<Step> {
        if policy.procedure() != self.procedure {
            return Err(Error::Protocol("policy belongs to the other procedure"));
        }
        if let Some(o) = &self.outstanding {
            return Ok(Step::Test(o.group.clone()));
        }
        loop {
            let m = self.defective_set.len();
            if m == 1 {
                let unit = core::mem::take(&mut self.defective_set);
                self.classified_defective.absorb(unit);
                continue;
            }
            if m >= 2 {
                let x = policy.defective_choice(m, self.pool.len());
                debug_assert!(x >= 1 && x < m, "subtest must be a proper subset");
                return Ok(self.issue(self.defective_set.front(x), true));
            }
            if !self.pool.is_empty() {
                let x = policy.pool_choice(self.pool.len());
                debug_assert!(x >= 1 && x <= self.pool.len());
                return Ok(self.issue(self.pool.front(x), false));
            }
            match self.pending.pop() {
                Some(sub) => self.pool = sub,
                None => return Ok(Step::Complete),
            }
        }
    }

    fn issue(&mut self, group: LabelSet, from_defective_set: bool) -> Step {
        self.outstanding = Some(Outstanding {
            group: group.clone(),
            from_defective_set,
        });
        Step::Test(group)
    }

    /// Records the outcome of the outstanding group.
    pub fn apply_outcome(&mut self, group: &LabelSet, positive: bool) -> Result<()> {
        let outstanding = match &self.outstanding {
            Some(o) if &o.group == group => self.outstanding.take().unwrap(),
            Some(_) => return Err(Error::Protocol("outcome for a group that was not issued")),
            None => return Err(Error::Protocol("no test is outstanding")),
        };
        let k = outstanding.group.len();
        let source = if outstanding.from_defective_set {
            &mut self.defective_set
        } else {
            &mut self.pool
        };
        let tested = source.take_front(k);
        debug_assert_eq!(tested, outstanding.group);
        self.tests_used += 1;

        if !positive {
            self.classified_good.absorb(tested);
        } else if outstanding.from_defective_set {
            let remainder = core::mem::replace(&mut self.defective_set, tested);
            match self.procedure {
                Procedure::R1 => self.pool.absorb(remainder),
                Procedure::R3 => self.pending.push(remainder),
            }
        } else {
            debug_assert!(self.defective_set.is_empty());
            self.defective_set = tested;
        }
        debug_assert!(self.count_holds());
        Ok(())
    }
}
