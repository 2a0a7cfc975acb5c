//! Convergence trace CSV.
//!
//! ```text
//! iter,lambda,r,step_time_ms,skipped_updates,eta
//! 0,1.0000000000000000e0,...
//! # status=Converged
//! ```
//!
//! Floats carry 17 significant digits so values survive a round trip exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::solver::{IterationRecord, Status, Trace};

pub const TRACE_HEADER: &str = "iter,lambda,r,step_time_ms,skipped_updates,eta";

pub fn write_trace_csv<W: Write>(trace: &Trace, mut sink: W) -> Result<()> {
    let mut out = String::with_capacity(64 * (trace.records.len() + 2));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for rec in &trace.records {
        let eta = rec.eta.map(|e| format!("{e:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{}\n",
            rec.k, rec.lambda, rec.r, rec.step_time_ms, rec.skipped_updates, eta
        ));
    }
    out.push_str(&format!("# status={}\n", trace.status));
    sink.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads back the records and the status line.
pub fn read_trace_csv<R: BufRead>(reader: R) -> Result<(Vec<IterationRecord>, Status)> {
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == TRACE_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing trace header".into(),
            })
        }
    }

    let mut records = Vec::new();
    let mut status = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(s) = rest.trim().strip_prefix("status=") {
                status = Some(s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad status '{s}'"),
                })?);
            }
            continue;
        }
        if status.is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "record after status line".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: lineno,
            msg: format!("bad {what}"),
        };
        records.push(IterationRecord {
            k: fields[0].parse().map_err(|_| bad("iter"))?,
            lambda: fields[1].parse().map_err(|_| bad("lambda"))?,
            r: fields[2].parse().map_err(|_| bad("r"))?,
            step_time_ms: fields[3].parse().map_err(|_| bad("step_time_ms"))?,
            skipped_updates: fields[4].parse().map_err(|_| bad("skipped_updates"))?,
            eta: match fields[5] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("eta"))?),
            },
        });
    }
    let status = status.ok_or(Error::Parse {
        line: 0,
        msg: "missing status line".into(),
    })?;
    Ok((records, status))
}
