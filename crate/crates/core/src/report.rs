//! CSV emission. Column order is fixed and every float is written with 17
//! significant digits.

use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::montecarlo::{SweepRow, TrialOutcome};

pub const TRIALS_HEADER: [&str; 6] = ["trial_id", "seed", "class", "steps", "q0", "q_final"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["trial_id", "t", "agent", "x"];
pub const SWEEP_HEADER: [&str; 5] = ["p0", "mean_final", "var_final", "herd1_freq", "ci"];

fn opt(v: Option<f64>) -> String {
    v.map(g17).unwrap_or_default()
}

fn write_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per trial, in the order given.
pub fn trials_csv(outcomes: &[TrialOutcome]) -> Result<String> {
    write_rows(
        &TRIALS_HEADER,
        outcomes.iter().map(|o| {
            [
                o.trial_id.to_string(),
                o.seed.to_string(),
                o.class.to_string(),
                o.steps.to_string(),
                g17(o.q0),
                g17(o.q_final),
            ]
        }),
    )
}

/// Long format: one row per (trial, sampled step, agent).
pub fn trajectory_csv(outcomes: &[TrialOutcome]) -> Result<String> {
    write_rows(
        &TRAJECTORY_HEADER,
        outcomes.iter().flat_map(|o| {
            o.x_samples.iter().flat_map(move |(t, x)| {
                x.iter().enumerate().map(move |(agent, v)| {
                    [o.trial_id.to_string(), t.to_string(), agent.to_string(), g17(*v)]
                })
            })
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    write_rows(
        &SWEEP_HEADER,
        rows.iter().map(|r| [g17(r.p0), g17(r.mean_final), g17(r.var_final), opt(r.herd1_freq), opt(r.ci)]),
    )
}

/// Generic table with a caller-supplied header.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    write_rows(header, rows.iter().cloned())
}
