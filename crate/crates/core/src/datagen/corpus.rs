//! Newline-delimited JSON corpus.
//!
//! ```text
//! {"type":"episode","id":0,"map_seed":7,"goal":[3,4],"outcome":"success","path_len_m":2.250000,"opt_len_m":1.957107}
//! {"type":"step","episode_id":0,"t":0,"pose":[x,y,heading],"candidates":[{"id":1,"r_m":..,"theta_rad":..,"e":1},..],"distances":[..],"optimal_id":1,"g":0.5,"trace":""}
//! ```
//!
//! Field order is fixed and floats carry six decimals, so writing a corpus
//! that was read back reproduces the original bytes.

use std::fmt::Write as _;
use std::io::Write;

use serde_json::Value;

use super::{EpisodeRecord, Outcome, StepAnnotation};
use crate::error::CorpusError;
use crate::proposer::{Candidate, CandidateSet, TURN_AROUND_ID};
use crate::reward::argmin;
use crate::world::{Cell, Pose, DEFAULT_CELL_SIZE};

pub const CORPUS_FLOAT_DECIMALS: usize = 6;

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn episode_line(r: &EpisodeRecord) -> String {
    format!(
        "{{\"type\":\"episode\",\"id\":{},\"map_seed\":{},\"goal\":[{},{}],\"outcome\":\"{}\",\"path_len_m\":{},\"opt_len_m\":{}}}",
        r.id,
        r.map_seed,
        r.goal.x,
        r.goal.y,
        r.outcome,
        f6(r.path_length),
        f6(r.optimal_length)
    )
}

fn step_line(s: &StepAnnotation) -> String {
    let mut out = String::with_capacity(256);
    let _ = write!(
        out,
        "{{\"type\":\"step\",\"episode_id\":{},\"t\":{},\"pose\":[{},{},{}],\"candidates\":[",
        s.episode_id,
        s.step_index,
        f6(s.pose.x),
        f6(s.pose.y),
        f6(s.pose.heading)
    );
    for (i, c) in s.candidates.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"id\":{},\"r_m\":{},\"theta_rad\":{},\"e\":{}}}",
            c.id,
            f6(c.r),
            f6(c.theta),
            u8::from(c.unexplored)
        );
    }
    out.push_str("],\"distances\":[");
    for (i, d) in s.distances.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&f6(*d));
    }
    let _ = write!(out, "],\"optimal_id\":{},\"g\":{},\"trace\":\"\"}}", s.optimal_id, f6(s.certainty));
    out
}

/// Writes one header line per episode followed by its step lines.
/// Returns the number of lines written.
pub fn write_records<W: Write>(records: &[EpisodeRecord], sink: &mut W) -> std::io::Result<usize> {
    let mut lines = 0;
    for r in records {
        writeln!(sink, "{}", episode_line(r))?;
        lines += 1;
        for s in &r.steps {
            writeln!(sink, "{}", step_line(s))?;
            lines += 1;
        }
    }
    sink.flush()?;
    Ok(lines)
}

struct Ctx {
    line: usize,
}

impl Ctx {
    fn err(&self, reason: impl Into<String>) -> CorpusError {
        CorpusError::Schema { line: self.line, reason: reason.into() }
    }

    fn field<'a>(&self, v: &'a Value, key: &str) -> Result<&'a Value, CorpusError> {
        v.get(key).ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    fn u64(&self, v: &Value, key: &str) -> Result<u64, CorpusError> {
        self.field(v, key)?
            .as_u64()
            .ok_or_else(|| self.err(format!("`{key}` must be a non-negative integer")))
    }

    fn f64(&self, v: &Value, key: &str) -> Result<f64, CorpusError> {
        self.field(v, key)?.as_f64().ok_or_else(|| self.err(format!("`{key}` must be a number")))
    }

    fn array<'a>(&self, v: &'a Value, key: &str) -> Result<&'a Vec<Value>, CorpusError> {
        self.field(v, key)?.as_array().ok_or_else(|| self.err(format!("`{key}` must be an array")))
    }

    fn numbers(&self, v: &Value, key: &str) -> Result<Vec<f64>, CorpusError> {
        self.array(v, key)?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| self.err(format!("`{key}` entries must be numbers"))))
            .collect()
    }
}

fn parse_step(ctx: &Ctx, v: &Value) -> Result<StepAnnotation, CorpusError> {
    let pose = ctx.numbers(v, "pose")?;
    if pose.len() != 3 {
        return Err(ctx.err("`pose` must be [x, y, heading]"));
    }
    let pose = Pose { x: pose[0], y: pose[1], heading: pose[2] };
    let mut candidates = Vec::new();
    for c in ctx.array(v, "candidates")? {
        let id = ctx.u64(c, "id")? as usize;
        let r = ctx.f64(c, "r_m")?;
        let theta = ctx.f64(c, "theta_rad")?;
        let e = ctx.u64(c, "e")?;
        if e > 1 {
            return Err(ctx.err("`e` must be 0 or 1"));
        }
        // Landing cells aren't stored; recover them from the pose.
        let (s, co) = (pose.heading + theta).sin_cos();
        let landing = Cell::new(
            ((pose.x + r * co) / DEFAULT_CELL_SIZE).floor().max(0.0) as usize,
            ((pose.y + r * s) / DEFAULT_CELL_SIZE).floor().max(0.0) as usize,
        );
        candidates.push(Candidate { id, r, theta, landing, unexplored: e == 1 });
    }
    if candidates.is_empty() {
        return Err(ctx.err("step has no candidates"));
    }
    if candidates.iter().filter(|c| c.id == TURN_AROUND_ID).any(|c| c.r != 0.0) {
        return Err(ctx.err("turn-around candidate must have r = 0"));
    }
    let distances = ctx.numbers(v, "distances")?;
    if distances.len() != candidates.len() {
        return Err(ctx.err(format!("{} distances for {} candidates", distances.len(), candidates.len())));
    }
    if distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(ctx.err("distances must be finite and non-negative"));
    }
    let optimal_id = ctx.u64(v, "optimal_id")? as usize;
    let best = argmin(&distances).expect("non-empty");
    if candidates[best].id != optimal_id {
        return Err(
            ctx.err(format!("optimal_id {optimal_id} is not the argmin (id {})", candidates[best].id))
        );
    }
    let g = ctx.f64(v, "g")?;
    if !(0.0..=1.0).contains(&g) {
        return Err(ctx.err("`g` must lie in [0, 1]"));
    }
    if ctx.field(v, "trace")?.as_str().is_none() {
        return Err(ctx.err("`trace` must be a string"));
    }
    Ok(StepAnnotation {
        episode_id: ctx.u64(v, "episode_id")? as usize,
        step_index: ctx.u64(v, "t")? as usize,
        pose,
        candidates: CandidateSet { candidates },
        distances,
        optimal_id,
        certainty: g,
    })
}

/// Parses and validates a corpus produced by [`write_records`].
pub fn read_corpus(text: &str) -> Result<Vec<EpisodeRecord>, CorpusError> {
    let mut records: Vec<EpisodeRecord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let ctx = Ctx { line: i + 1 };
        let v: Value =
            serde_json::from_str(raw).map_err(|source| CorpusError::Json { line: i + 1, source })?;
        match v.get("type").and_then(Value::as_str) {
            Some("episode") => {
                let goal = ctx.array(&v, "goal")?;
                let goal = match goal.as_slice() {
                    [x, y] => Cell::new(
                        x.as_u64().ok_or_else(|| ctx.err("goal x"))? as usize,
                        y.as_u64().ok_or_else(|| ctx.err("goal y"))? as usize,
                    ),
                    _ => return Err(ctx.err("`goal` must be [x, y]")),
                };
                let outcome = ctx.field(&v, "outcome")?.as_str().and_then(Outcome::parse);
                records.push(EpisodeRecord {
                    id: ctx.u64(&v, "id")? as usize,
                    map_seed: ctx.u64(&v, "map_seed")?,
                    goal,
                    outcome: outcome.ok_or_else(|| ctx.err("unknown outcome"))?,
                    path_length: ctx.f64(&v, "path_len_m")?,
                    optimal_length: ctx.f64(&v, "opt_len_m")?,
                    steps: Vec::new(),
                    taken: Vec::new(),
                });
            }
            Some("step") => {
                let step = parse_step(&ctx, &v)?;
                let rec = records.last_mut().ok_or_else(|| ctx.err("step before any episode header"))?;
                if step.episode_id != rec.id {
                    return Err(ctx.err(format!(
                        "step belongs to episode {} inside episode {}",
                        step.episode_id, rec.id
                    )));
                }
                if step.step_index != rec.steps.len() {
                    return Err(ctx.err(format!(
                        "expected t = {}, got {}",
                        rec.steps.len(),
                        step.step_index
                    )));
                }
                rec.taken.push(step.optimal_id);
                rec.steps.push(step);
            }
            _ => return Err(ctx.err("`type` must be \"episode\" or \"step\"")),
        }
    }
    Ok(records)
}
