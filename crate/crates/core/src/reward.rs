//! Decision rewards over a vector of per-candidate geodesic distances.
//!
//! The gap-aware hybrid reward adds a certainty-scaled bonus to a softmax
//! base score:
//!
//! ```text
//! s_i = exp(-d_i/τ) / Σ_k exp(-d_k/τ)
//! g   = clip((d⁽²⁾ - d⁽¹⁾) / (|d⁽¹⁾| + ε), 0, 1)
//! r_i = clip(s_i + β_max · g · 1[i = argmin d], 0, 1)
//! ```
//!
//! Binary, Min-Max and pure softmax rewards are provided for comparison.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::RewardError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardFamily {
    Hybrid,
    Binary,
    MinMax,
    Softmax,
}

impl RewardFamily {
    pub const ALL: [RewardFamily; 4] = [Self::Binary, Self::MinMax, Self::Softmax, Self::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hybrid => "hybrid",
            Self::Binary => "binary",
            Self::MinMax => "minmax",
            Self::Softmax => "softmax",
        }
    }
}

impl fmt::Display for RewardFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hybrid" => Ok(Self::Hybrid),
            "binary" => Ok(Self::Binary),
            "minmax" | "min-max" => Ok(Self::MinMax),
            "softmax" => Ok(Self::Softmax),
            other => Err(format!("unknown reward family `{other}` (expected hybrid|binary|minmax|softmax)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    pub tau: f64,
    pub beta_max: f64,
    pub epsilon: f64,
    pub family: RewardFamily,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { tau: 0.5, beta_max: 1.0, epsilon: 1e-6, family: RewardFamily::Hybrid }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(RewardError::BadTemperature(self.tau));
        }
        Ok(())
    }

    /// Reward of `chosen` under the configured family.
    pub fn score(&self, d: &[f64], chosen: usize) -> Result<f64, RewardError> {
        match self.family {
            RewardFamily::Hybrid => hybrid_reward(d, chosen, self),
            RewardFamily::Binary => binary_reward(d, chosen),
            RewardFamily::MinMax => minmax_reward(d, chosen),
            RewardFamily::Softmax => softmax_reward(d, chosen, self.tau),
        }
    }
}

fn check(d: &[f64]) -> Result<(), RewardError> {
    if d.is_empty() {
        return Err(RewardError::Empty);
    }
    if let Some(bad) = d.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(RewardError::BadDistance(*bad));
    }
    Ok(())
}

fn check_index(d: &[f64], chosen: usize) -> Result<(), RewardError> {
    check(d)?;
    if chosen >= d.len() {
        return Err(RewardError::IndexOutOfRange { index: chosen, len: d.len() });
    }
    Ok(())
}

/// Index of the smallest distance; ties go to the lowest index.
pub fn argmin(d: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in d.iter().enumerate() {
        if best.is_none_or(|b| x < d[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the second-smallest entry (the argmin excluded), lowest index on ties.
pub fn second_best(d: &[f64]) -> Option<usize> {
    let first = argmin(d)?;
    let mut best: Option<usize> = None;
    for (i, &x) in d.iter().enumerate() {
        if i != first && best.is_none_or(|b| x < d[b]) {
            best = Some(i);
        }
    }
    best
}

/// Softmax over negated distances, max-shifted for stability.
pub fn base_scores(d: &[f64], tau: f64) -> Result<Vec<f64>, RewardError> {
    check(d)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(RewardError::BadTemperature(tau));
    }
    let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = d.iter().map(|x| (-(x - dmin) / tau).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Normalized best/second-best gap in `[0, 1]`. A single option is fully decisive.
pub fn certainty(d: &[f64], epsilon: f64) -> f64 {
    if d.len() < 2 {
        return 1.0;
    }
    let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
    for &x in d {
        if x < d1 {
            d2 = d1;
            d1 = x;
        } else if x < d2 {
            d2 = x;
        }
    }
    let raw = (d2 - d1) / (d1.abs() + epsilon);
    if raw.is_nan() {
        // 0/0 with ε = 0 and d⁽¹⁾ = d⁽²⁾ = 0: no gap.
        return 0.0;
    }
    raw.clamp(0.0, 1.0)
}

pub fn hybrid_reward(d: &[f64], chosen: usize, params: &RewardParams) -> Result<f64, RewardError> {
    check_index(d, chosen)?;
    let s = base_scores(d, params.tau)?;
    let best = argmin(d).expect("non-empty");
    let bonus = if chosen == best { params.beta_max * certainty(d, params.epsilon) } else { 0.0 };
    Ok((s[chosen] + bonus).clamp(0.0, 1.0))
}

pub fn binary_reward(d: &[f64], chosen: usize) -> Result<f64, RewardError> {
    check_index(d, chosen)?;
    Ok(if argmin(d) == Some(chosen) { 1.0 } else { 0.0 })
}

/// Linear rescale of distances; all-equal vectors score 1.0.
pub fn minmax_reward(d: &[f64], chosen: usize) -> Result<f64, RewardError> {
    check_index(d, chosen)?;
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(1.0);
    }
    Ok(((hi - d[chosen]) / (hi - lo)).clamp(0.0, 1.0))
}

pub fn softmax_reward(d: &[f64], chosen: usize, tau: f64) -> Result<f64, RewardError> {
    check_index(d, chosen)?;
    Ok(base_scores(d, tau)?[chosen])
}

/// Reward of the optimal action minus the runner-up, per `(τ, β)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub tau: f64,
    pub beta: f64,
    pub gap_high: f64,
    pub gap_low: f64,
}

pub fn best_vs_second_gap(d: &[f64], params: &RewardParams) -> Result<f64, RewardError> {
    let best = argmin(d).ok_or(RewardError::Empty)?;
    let second = second_best(d).ok_or(RewardError::IndexOutOfRange { index: 1, len: d.len() })?;
    Ok(params.score(d, best)? - params.score(d, second)?)
}

/// Hybrid-reward gap over a `τ × β` grid for a high- and a low-certainty scenario.
pub fn sweep_gap(
    taus: &[f64],
    betas: &[f64],
    high: &[f64],
    low: &[f64],
    epsilon: f64,
) -> Result<Vec<GapRow>, RewardError> {
    let mut rows = Vec::with_capacity(taus.len() * betas.len());
    for &tau in taus {
        for &beta in betas {
            let p = RewardParams { tau, beta_max: beta, epsilon, family: RewardFamily::Hybrid };
            p.validate()?;
            rows.push(GapRow {
                tau,
                beta,
                gap_high: best_vs_second_gap(high, &p)?,
                gap_low: best_vs_second_gap(low, &p)?,
            });
        }
    }
    Ok(rows)
}

/// Shortest round-trip form, always with a decimal point (`1` prints as `1.0`).
pub fn fmt_param(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        s + ".0"
    }
}

pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut out = String::from("tau,beta,gap_high,gap_low\n");
    for r in rows {
        let _ =
            writeln!(out, "{},{},{:.6},{:.6}", fmt_param(r.tau), fmt_param(r.beta), r.gap_high, r.gap_low);
    }
    out
}

/// Representative inputs for the three canonical decision situations.
pub mod scenarios {
    pub const DECISIVE: [f64; 3] = [1.0, 3.0, 5.0];
    pub const AMBIGUOUS: [f64; 3] = [2.0, 2.1, 5.0];
    pub const INDISTINGUISHABLE: [f64; 4] = [2.0, 2.0, 2.0, 2.0];

    pub fn all() -> [(&'static str, &'static [f64]); 3] {
        [("decisive", &DECISIVE), ("ambiguous", &AMBIGUOUS), ("indistinguishable", &INDISTINGUISHABLE)]
    }
}

/// `scenario,family,best,second` rows: rewards of the optimal and runner-up actions.
pub fn scenario_table(params: &RewardParams) -> Result<String, RewardError> {
    let mut out = String::from("scenario,family,best,second\n");
    for (name, d) in scenarios::all() {
        let best = argmin(d).expect("non-empty");
        let second = second_best(d).expect("at least two entries");
        for family in RewardFamily::ALL {
            let p = RewardParams { family, ..*params };
            let _ = writeln!(out, "{name},{family},{:.6},{:.6}", p.score(d, best)?, p.score(d, second)?);
        }
    }
    Ok(out)
}
