use std::io;

use thiserror::Error;

use crate::world::Cell;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("grid must be at least 3x3, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("border cell ({x},{y}) is free; the world must be sealed")]
    UnsealedBorder { x: usize, y: usize },
    #[error("goal ({x},{y}) lies outside the {width}x{height} grid")]
    GoalOutOfBounds { x: usize, y: usize, width: usize, height: usize },
    #[error("goal ({x},{y}) is on an occupied cell")]
    GoalOccupied { x: usize, y: usize },
    #[error("cell size must be positive and finite, got {0}")]
    BadCellSize(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum GeodesicError {
    #[error("endpoint {0:?} is occupied or out of bounds")]
    BlockedEndpoint(Cell),
}

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("action radius must be non-negative and finite, got {0}")]
    NegativeRadius(f64),
    #[error("action angle must be finite, got {0}")]
    NonFiniteAngle(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("distance vector is empty")]
    Empty,
    #[error("chosen index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("distance {0} is not finite and non-negative")]
    BadDistance(f64),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("valid candidate set is empty")]
    EmptyValidSet,
    #[error("expected {expected} feature vectors, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("KL support violation at index {0}: q = 0 where p > 0")]
    SupportViolation(usize),
    #[error("target index {index} out of range for {len} candidates")]
    TargetOutOfRange { index: usize, len: usize },
    #[error("empty training batch")]
    EmptyBatch,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("geodesic: {0}")]
    Geodesic(#[from] GeodesicError),
    #[error("controller: {0}")]
    Controller(#[from] ControllerError),
    #[error("reward: {0}")]
    Reward(#[from] RewardError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("learner: {0}")]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("goal {goal:?} is unreachable from start {start:?}")]
    UnreachableGoal { start: Cell, goal: Cell },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
