//! Text time-tag format.
//!
//! ```text
//! # tick_ps=81
//! GC,1000
//! GD,1000
//! DC,1012
//! ```
//!
//! UTF-8, one record per line, `<channel>,<ticks>` with channel one of
//! `GC`, `GD`, `DC`, `DD` and ticks a base-10 `u64`. Lines starting with
//! `#` are comments; a `# tick_ps=<n>` comment, if present, must say 81.
//! Empty lines are ignored. Ticks may not decrease within a channel.

use std::io::{BufRead, Write};

use super::{Channel, TimeTagRecord, TICK_PS};
use crate::error::{HomError, Result};

pub const HEADER: &str = "# tick_ps=81";

/// Reads a time-tag stream. Errors carry the 1-based line number and the
/// byte offset of the offending line.
pub fn parse_timetags<R: BufRead>(mut reader: R) -> Result<Vec<TimeTagRecord>> {
    let mut records = Vec::new();
    let mut last = [None::<u64>; 4];
    let mut buf = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| HomError::ParseError {
                line: line_no + 1,
                offset,
                reason: format!("read failed: {e}"),
            })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let here = offset;
        offset += n;
        let err = |reason: String| HomError::ParseError {
            line: line_no,
            offset: here,
            reason,
        };

        let text = std::str::from_utf8(&buf).map_err(|_| err("line is not valid UTF-8".into()))?;
        let text = text.strip_suffix('\n').unwrap_or(text);
        let text = text.strip_suffix('\r').unwrap_or(text);
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("tick_ps=") {
                match value.trim().parse::<u64>() {
                    Ok(TICK_PS) => {}
                    _ => return Err(err(format!("unsupported tick duration `{value}` ps"))),
                }
            }
            continue;
        }
        let (code, ticks) = text
            .split_once(',')
            .ok_or_else(|| err(format!("expected `<channel>,<ticks>`, found `{text}`")))?;
        let channel = Channel::from_code(code)
            .ok_or_else(|| err(format!("unknown channel code `{code}`")))?;
        let ticks: u64 = ticks
            .parse()
            .map_err(|e| err(format!("bad timestamp `{ticks}`: {e}")))?;
        let slot = &mut last[channel.index()];
        if let Some(prev) = *slot {
            if ticks < prev {
                return Err(err(format!(
                    "timestamp {ticks} on {} goes back from {prev}",
                    channel.code()
                )));
            }
        }
        *slot = Some(ticks);
        records.push(TimeTagRecord { channel, ticks });
    }
    Ok(records)
}

/// Writes the header followed by one line per record.
pub fn write_timetags<W: Write>(records: &[TimeTagRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in records {
        write_record(&mut out, r)?;
    }
    Ok(())
}

pub(crate) fn write_record<W: Write>(out: &mut W, r: &TimeTagRecord) -> std::io::Result<()> {
    writeln!(out, "{},{}", r.channel.code(), r.ticks)
}

pub fn timetags_to_string(records: &[TimeTagRecord]) -> String {
    let mut out = Vec::with_capacity(12 * (records.len() + 1));
    write_timetags(records, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("format is ASCII")
}
