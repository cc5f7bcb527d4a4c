//! Plain-text weights:
//!
//! ```text
//! compass-policy v1
//! dim 6
//! 0.125
//! -1.5
//! ...
//! ```

use std::io::Write;

use super::PolicyParams;
use crate::error::CheckpointError;

pub const CHECKPOINT_MAGIC: &str = "compass-policy v1";

pub fn write_checkpoint<W: Write>(params: &PolicyParams, sink: &mut W) -> Result<(), CheckpointError> {
    writeln!(sink, "{CHECKPOINT_MAGIC}")?;
    writeln!(sink, "dim {}", params.dim())?;
    for w in &params.w {
        // Rust's shortest float formatting round-trips exactly.
        writeln!(sink, "{w}")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_checkpoint(text: &str) -> Result<PolicyParams, CheckpointError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == CHECKPOINT_MAGIC => {}
        Some(l) => {
            return Err(CheckpointError::Format(format!(
                "unsupported header `{l}`, expected `{CHECKPOINT_MAGIC}`"
            )))
        }
        None => return Err(CheckpointError::Format("empty checkpoint".into())),
    }
    let dim = lines
        .next()
        .and_then(|l| l.trim().strip_prefix("dim "))
        .and_then(|d| d.trim().parse::<usize>().ok())
        .ok_or_else(|| CheckpointError::Format("second line must be `dim <n>`".into()))?;
    let w = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CheckpointError::Format(format!("bad weight `{l}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if w.len() != dim {
        return Err(CheckpointError::Format(format!("header declares {dim} weights, found {}", w.len())));
    }
    Ok(PolicyParams { w })
}
