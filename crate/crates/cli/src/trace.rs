//! Per-episode trace CSV: `step,x,y,z,f_z,reward,event`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wipelab_core::metrics::EpisodeTrace;

use crate::error::{CliError, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub f_z: f64,
    pub reward: f64,
    /// `;`-separated events: `landing`, `wipe:<i>`, `complete`, `collision`, `timeout`.
    pub event: String,
}

pub fn rows(trace: &EpisodeTrace) -> Vec<TraceRow> {
    let last = trace.steps.len().saturating_sub(1);
    trace
        .steps
        .iter()
        .zip(&trace.rewards)
        .enumerate()
        .map(|(i, (s, r))| {
            let mut ev = Vec::new();
            if s.landing_event() {
                ev.push("landing".to_string());
            }
            if let Some(w) = s.waypoint_wiped_this_step {
                ev.push(format!("wipe:{w}"));
            }
            if s.final_waypoint_wiped {
                ev.push("complete".into());
            }
            if s.collided {
                ev.push("collision".into());
            }
            if i == last && trace.status == wipelab_core::sim::TerminalStatus::TimedOut {
                ev.push("timeout".into());
            }
            TraceRow {
                step: s.step_index,
                x: s.ee_position[0],
                y: s.ee_position[1],
                z: s.ee_position[2],
                f_z: s.f_z,
                reward: *r,
                event: ev.join(";"),
            }
        })
        .collect()
}

pub fn write_trace(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows(trace) {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().at(path)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let row: TraceRow = rec.map_err(|e| csv_error(path, e))?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(CliError::Parse {
            path: path.into(),
            line: 1,
            message: "trace has no rows".into(),
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.into(),
            source,
        },
        kind => CliError::Parse {
            path: path.into(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn malformed_row_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut f = std::fs::File::create(&p).unwrap();
        writeln!(f, "step,x,y,z,f_z,reward,event").unwrap();
        writeln!(f, "1,0,0,0,0,0,").unwrap();
        writeln!(f, "2,0,zero,0,0,0,").unwrap();
        drop(f);
        match read_trace(&p) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
