//! Parallel Tower of Hanoi: `t` towers of `n` disks on `p` posts, where one
//! step may move several disks at once as long as every moved disk leaves the
//! top of its post and no two moved disks share a source or destination.
//!
//! * [`config`]: configurations, EREW adjacency, transition graphs, neighbors
//!   and the text/JSON formats.
//! * [`cluster`]: gradings, clusters, translative and reflective mappings.
//! * [`denoise`]: excursion and detour rewrites and the `denoise` loop.
//! * [`oracle`]: exhaustive state graph and shortest-walk distances.
//! * [`rl`]: tabular Q-learning with an optional denoise replay.

pub mod cluster;
pub mod config;
pub mod denoise;
pub mod error;
pub mod oracle;
pub mod rl;

pub use cluster::{ClusterId, Grading};
pub use config::{ConfigSequence, Configuration, DiskId, PuzzleParams, TransitionGraph};
pub use denoise::{denoise, DenoiseReport, RewriteKind, RewriteSite};
pub use error::{HanoiError, Result};
pub use oracle::{Measure, Oracle, StateGraph};
pub use rl::{
    optimal_values, train, train_learner, ActionSpace, EpisodeRecord, Exploration, LearnConfig,
    LearningCurve, QLearner, Scalar, ValueTable,
};

pub type LearnConfigF32 = LearnConfig<f32>;
pub type LearnConfigF64 = LearnConfig<f64>;
pub type LearningCurveF32 = LearningCurve<f32>;
pub type LearningCurveF64 = LearningCurve<f64>;
pub type QLearnerF32 = QLearner<f32>;
pub type QLearnerF64 = QLearner<f64>;
