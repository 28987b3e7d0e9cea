//! Interactive pooling session: recommends the next group, reads `+`/`-`
//! outcomes and keeps the running classification.
//!
//! Units are shown 1-based (`u1`..`un`); consecutive labels collapse to
//! ranges such as `u1-u6765`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use gtdp_core::sim::{ExecutionState, LabelSet, Step};

use crate::table::Table;

/// One line of input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Positive,
    Negative,
    State,
    Quit,
}

impl Command {
    pub fn parse(line: &str) -> Option<Command> {
        match line.trim() {
            "+" => Some(Command::Positive),
            "-" => Some(Command::Negative),
            "state" => Some(Command::State),
            "quit" => Some(Command::Quit),
            _ => None,
        }
    }
}

/// Renders labels 1-based with runs collapsed, e.g. `u1-u3 u7`.
pub fn format_units(set: &LabelSet) -> String {
    if set.is_empty() {
        return "(none)".into();
    }
    let mut out = String::new();
    for (i, &(a, b)) in set.runs().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if b - a == 1 {
            let _ = write!(out, "u{}", a + 1);
        } else {
            let _ = write!(out, "u{}-u{}", a + 1, b);
        }
    }
    out
}

/// How a session ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutcome {
    /// Groups tested with their outcomes, in order.
    pub steps: Vec<(LabelSet, bool)>,
    pub state: ExecutionState,
    pub complete: bool,
}

/// Drives a session over `input`, writing the protocol to `output`.
/// Blank lines and lines starting with `#` are skipped, which lets a
/// transcript file carry comments.
pub fn run_session(
    table: &Table,
    n: usize,
    input: impl BufRead,
    mut output: impl Write,
) -> io::Result<SessionOutcome> {
    let policy = table.policy();
    let invalid = |e: gtdp_core::Error| io::Error::new(io::ErrorKind::InvalidInput, e);
    if n > table.n_top() {
        return Err(invalid(gtdp_core::Error::OutOfRange {
            index: n,
            limit: table.n_top(),
        }));
    }
    let mut state = ExecutionState::new(table.procedure(), n);
    let mut steps = Vec::new();
    writeln!(
        output,
        "session: procedure {}, q = {}, n = {}, expected tests {:.5}",
        table.procedure(),
        table.prevalence().q(),
        n,
        table.expected(n).map_err(invalid)?
    )?;
    let mut lines = input.lines();
    loop {
        let group = match state.next_group(policy).map_err(invalid)? {
            Step::Test(g) => g,
            Step::Complete => {
                writeln!(
                    output,
                    "complete after {} test(s); defective: {}",
                    state.tests_used(),
                    format_units(state.classified_defective())
                )?;
                return Ok(SessionOutcome {
                    steps,
                    state,
                    complete: true,
                });
            }
        };
        writeln!(
            output,
            "test {}: {} unit(s): {}",
            state.tests_used() + 1,
            group.len(),
            format_units(&group)
        )?;
        loop {
            write!(output, "outcome [+/-/state/quit]> ")?;
            output.flush()?;
            let Some(line) = lines.next().transpose()? else {
                writeln!(output)?;
                writeln!(output, "input ended before the session completed")?;
                return Ok(SessionOutcome {
                    steps,
                    state,
                    complete: false,
                });
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match Command::parse(trimmed) {
                Some(Command::Positive) | Some(Command::Negative) => {
                    let positive = Command::parse(trimmed) == Some(Command::Positive);
                    state.apply_outcome(&group, positive).map_err(invalid)?;
                    steps.push((group, positive));
                    writeln!(
                        output,
                        "{}: {} good, {} defective, {} unresolved",
                        if positive { "positive" } else { "negative" },
                        state.classified_good().len(),
                        state.classified_defective().len(),
                        n - state.classified_good().len() - state.classified_defective().len()
                    )?;
                    break;
                }
                Some(Command::State) => dump_state(&state, &mut output)?,
                Some(Command::Quit) => {
                    writeln!(output, "quit after {} test(s)", state.tests_used())?;
                    return Ok(SessionOutcome {
                        steps,
                        state,
                        complete: false,
                    });
                }
                None => writeln!(
                    output,
                    "unrecognized input {trimmed:?}; expected +, -, state or quit"
                )?,
            }
        }
    }
}

fn dump_state(state: &ExecutionState, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "  tests used:    {}", state.tests_used())?;
    writeln!(out, "  pool:          {}", format_units(state.pool()))?;
    writeln!(
        out,
        "  defective set: {}",
        format_units(state.defective_set())
    )?;
    for (i, p) in state.pending().iter().enumerate() {
        writeln!(out, "  pending {}:     {}", i + 1, format_units(p))?;
    }
    writeln!(
        out,
        "  good:          {}",
        format_units(state.classified_good())
    )?;
    writeln!(
        out,
        "  defective:     {}",
        format_units(state.classified_defective())
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use gtdp_core::{Prevalence, R3Table};

    fn r3(q: f64, n: usize) -> Table {
        Table::R3(R3Table::build(Prevalence::new(q).unwrap(), n, false).unwrap())
    }

    #[test]
    fn unit_formatting() {
        assert_eq!(format_units(&LabelSet::range(0, 3)), "u1-u3");
        assert_eq!(format_units(&LabelSet::from_labels([0, 2, 3])), "u1 u3-u4");
        assert_eq!(format_units(&LabelSet::new()), "(none)");
    }

    #[test]
    fn single_unit_session() {
        let t = r3(0.9, 1);
        let mut out = Vec::new();
        let o = run_session(&t, 1, "-\n".as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(o.complete);
        assert_eq!(o.state.tests_used(), 1);
        assert!(text.contains("test 1: 1 unit(s): u1"), "{text}");
        assert!(text.contains("complete after 1 test(s)"));
    }

    #[test]
    fn bad_tokens_reprompt_without_change() {
        let t = r3(0.5, 2);
        let mut out = Vec::new();
        let o = run_session(&t, 2, "x\nstate\n# note\n\n+\n-\n".as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("unrecognized input \"x\""));
        assert!(text.contains("pool:          u1-u2"));
        assert!(o.complete);
        assert_eq!(o.steps.len(), 2);
        assert_eq!(o.state.classified_defective(), &LabelSet::range(0, 1));
    }

    #[test]
    fn quit_and_eof_leave_incomplete() {
        let t = r3(0.99, 10);
        let o = run_session(&t, 10, "quit\n".as_bytes(), io::sink()).unwrap();
        assert!(!o.complete && o.steps.is_empty());
        let o = run_session(&t, 10, "".as_bytes(), io::sink()).unwrap();
        assert!(!o.complete);
    }
}
