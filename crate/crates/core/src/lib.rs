//! Desk-scale navigation decision lab.
//!
//! Grid worlds stand in for photoreal scenes, an A* oracle densely annotates
//! every candidate action with its geodesic distance to the goal, and a small
//! masked-softmax policy is trained with supervised imitation followed by
//! group-relative policy optimization on gap-aware rewards.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod geodesic;
pub mod learner;
pub mod nav;
pub mod pipeline;
pub mod proposer;
pub mod reward;
pub mod rng;
pub mod world;

pub use error::{Error, Result};
