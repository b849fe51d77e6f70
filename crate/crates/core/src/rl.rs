//! Tabular Q-learning on the puzzle with an optional denoise replay.
//!
//! States are configurations, actions are moves to a neighboring
//! configuration (single-disk moves only, or any parallel step). Each step
//! pays `-tgec`; the goal is terminal with value 0. After every episode the
//! learner can denoise the rollout and replay the one-step updates along the
//! shorter walk.
//!
//! The learner is generic over the floating-point scalar; see [`Scalar`].

use std::fmt;
use std::time::Instant;

use num_traits::{Float, FromPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigSequence, Configuration, PuzzleParams};
use crate::denoise::denoise;
use crate::error::{HanoiError, Result};
use crate::oracle::{Measure, StateGraph};

/// Floating-point type the learner computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

fn lit<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("representable")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    /// One disk per step.
    SingleDisk,
    /// Any EREW-adjacent configuration.
    FullParallel,
}

impl ActionSpace {
    fn admits(self, tgec: u16) -> bool {
        match self {
            ActionSpace::SingleDisk => tgec == 1,
            ActionSpace::FullParallel => true,
        }
    }
}

/// Exploration rate for episode `e` (0-based) is
/// `max(floor, initial · decay^e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exploration<F> {
    pub initial: F,
    pub decay: F,
    pub floor: F,
}

impl<F: Scalar> Exploration<F> {
    pub fn rate(&self, episode: usize) -> F {
        let decayed = self.initial * self.decay.powi(episode.min(i32::MAX as usize) as i32);
        decayed.max(self.floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig<F> {
    pub params: PuzzleParams,
    /// Greedy-path origin; also the episode start unless `random_starts`.
    pub start: Configuration,
    pub goal: Configuration,
    pub episodes: usize,
    pub step_cap: usize,
    /// In `(0, 1]`.
    pub learning_rate: F,
    /// In `(0, 1]`.
    pub discount: F,
    pub exploration: Exploration<F>,
    pub seed: u64,
    pub denoise: bool,
    pub action_space: ActionSpace,
    /// Start each episode from a uniformly drawn non-goal configuration.
    pub random_starts: bool,
    /// Record wall-clock time per episode. Off by default so curves are
    /// reproducible byte for byte.
    pub record_time: bool,
    pub vertex_cap: u64,
}

impl<F: Scalar> LearnConfig<F> {
    /// Defaults: 500 episodes of at most 200 steps, learning rate 0.5,
    /// discount 1, exploration 1.0 decaying by 0.99 per episode to 0.05,
    /// seed 0, single-disk actions, random starts, no denoise.
    pub fn new(start: Configuration, goal: Configuration) -> Self {
        LearnConfig {
            params: start.params(),
            start,
            goal,
            episodes: 500,
            step_cap: 200,
            learning_rate: lit(0.5),
            discount: F::one(),
            exploration: Exploration {
                initial: F::one(),
                decay: lit(0.99),
                floor: lit(0.05),
            },
            seed: 0,
            denoise: false,
            action_space: ActionSpace::SingleDisk,
            random_starts: true,
            record_time: false,
            vertex_cap: crate::oracle::DEFAULT_VERTEX_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HanoiError::InvalidConfig(msg));
        if self.start.params() != self.params || self.goal.params() != self.params {
            return bad("start and goal must use the configured parameters".into());
        }
        if self.step_cap == 0 {
            return bad("step_cap must be at least 1".into());
        }
        let unit = |x: F| x > F::zero() && x <= F::one();
        if !unit(self.learning_rate) {
            return bad(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            ));
        }
        if !unit(self.discount) {
            return bad(format!("discount {} outside (0, 1]", self.discount));
        }
        let e = self.exploration;
        let prob = |x: F| x >= F::zero() && x <= F::one();
        if !prob(e.initial) || !prob(e.floor) || !prob(e.decay) {
            return bad("exploration initial, decay and floor must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord<F> {
    /// 1-based.
    pub episode: usize,
    pub time_s: f64,
    /// Mean squared error of greedy state values against the optimal values.
    pub mse: F,
    /// Transfer length of the greedy walk from `start`, if it reaches the goal.
    pub greedy_len: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LearningCurve<F> {
    pub records: Vec<EpisodeRecord<F>>,
}

impl<F: Scalar> LearningCurve<F> {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First episode whose MSE is at most `threshold`.
    pub fn episodes_to_threshold(&self, threshold: F) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.mse <= threshold)
            .map(|r| r.episode)
    }

    /// `episode,time_s,mse,greedy_len`; an unreached goal leaves `greedy_len`
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,time_s,mse,greedy_len\n");
        for r in &self.records {
            let greedy = r.greedy_len.map(|g| g.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.6},{},{}\n",
                r.episode, r.time_s, r.mse, greedy
            ));
        }
        out
    }
}

/// Optimal state values for reaching a goal: `-(least transfer count)` under
/// the chosen action space, `None` where the goal is unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTable {
    params: PuzzleParams,
    values: Vec<Option<i64>>,
}

impl ValueTable {
    pub fn get(&self, config: &Configuration) -> Option<i64> {
        self.values[config.code() as usize]
    }

    pub fn by_code(&self) -> &[Option<i64>] {
        &self.values
    }

    pub fn params(&self) -> PuzzleParams {
        self.params
    }
}

/// Action lists per state, restricted to the action space.
struct ActionGraph {
    actions: Vec<Vec<(u32, u16)>>,
}

impl ActionGraph {
    fn new(graph: &StateGraph, space: ActionSpace) -> Self {
        let actions = (0..graph.vertex_count() as u64)
            .map(|v| {
                graph
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&(_, c)| space.admits(c))
                    .collect()
            })
            .collect();
        ActionGraph { actions }
    }

    fn distances_to(&self, goal: u64) -> Vec<Option<u64>> {
        // Edges are symmetric, so distances from the goal are distances to it.
        let mut dist = vec![None; self.actions.len()];
        let mut heap = std::collections::BinaryHeap::new();
        dist[goal as usize] = Some(0u64);
        heap.push(std::cmp::Reverse((0u64, goal)));
        while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
            if dist[v as usize].is_some_and(|best| d > best) {
                continue;
            }
            for &(w, c) in &self.actions[v as usize] {
                let nd = d + c as u64;
                if dist[w as usize].is_none_or(|best| nd < best) {
                    dist[w as usize] = Some(nd);
                    heap.push(std::cmp::Reverse((nd, w as u64)));
                }
            }
        }
        dist
    }
}

pub fn optimal_values(
    params: PuzzleParams,
    goal: &Configuration,
    action_space: ActionSpace,
    vertex_cap: u64,
) -> Result<ValueTable> {
    if goal.params() != params {
        return Err(HanoiError::ParamsMismatch);
    }
    let graph = StateGraph::build(params, vertex_cap)?;
    let values = match action_space {
        ActionSpace::FullParallel => {
            graph.distances_from(goal.code(), Measure::Transfers, &|_| true)
        }
        ActionSpace::SingleDisk => ActionGraph::new(&graph, action_space).distances_to(goal.code()),
    }
    .into_iter()
    .map(|d| d.map(|d| -(d as i64)))
    .collect();
    Ok(ValueTable { params, values })
}

/// Q-table over the action graph.
pub struct QLearner<F> {
    params: PuzzleParams,
    goal: u64,
    actions: ActionGraph,
    q: Vec<Vec<F>>,
}

impl<F: Scalar> QLearner<F> {
    fn new(graph: &StateGraph, goal: u64, space: ActionSpace) -> Self {
        let actions = ActionGraph::new(graph, space);
        let q = actions
            .actions
            .iter()
            .map(|a| vec![F::zero(); a.len()])
            .collect();
        QLearner {
            params: graph.params(),
            goal,
            actions,
            q,
        }
    }

    fn best(&self, s: u64) -> Option<usize> {
        let row = &self.q[s as usize];
        (0..row.len()).fold(None, |best: Option<usize>, k| match best {
            Some(b) if row[b] >= row[k] => Some(b),
            _ => Some(k),
        })
    }

    /// Greedy state value; the goal is worth 0.
    pub fn value(&self, s: u64) -> F {
        if s == self.goal {
            return F::zero();
        }
        self.best(s).map_or(F::zero(), |k| self.q[s as usize][k])
    }

    fn update(&mut self, s: u64, k: usize, lr: F, discount: F) -> u64 {
        let (next, cost) = self.actions.actions[s as usize][k];
        let next = next as u64;
        let reward = -F::from_u16(cost).expect("small integer");
        let target = reward + discount * self.value(next);
        let q = &mut self.q[s as usize][k];
        *q = *q + lr * (target - *q);
        next
    }

    fn action_to(&self, s: u64, next: u64) -> Option<usize> {
        self.actions.actions[s as usize]
            .iter()
            .position(|&(w, _)| w as u64 == next)
    }

    /// Mean squared error of greedy values over all states with a defined
    /// optimal value.
    pub fn mse(&self, optimal: &ValueTable) -> F {
        let (sum, count) =
            optimal
                .values
                .iter()
                .enumerate()
                .fold((F::zero(), 0usize), |(sum, count), (s, v)| match v {
                    Some(v) => {
                        let err = self.value(s as u64) - F::from_i64(*v).expect("small integer");
                        (sum + err * err, count + 1)
                    }
                    None => (sum, count),
                });
        if count == 0 {
            F::zero()
        } else {
            sum / F::from_usize(count).expect("small integer")
        }
    }

    /// Transfer length of the greedy walk from `start`, or `None` if it
    /// revisits a state or gets stuck before the goal.
    pub fn greedy_len(&self, start: &Configuration) -> Option<usize> {
        let mut s = start.code();
        let mut seen = vec![false; self.q.len()];
        let mut total = 0usize;
        while s != self.goal {
            if std::mem::replace(&mut seen[s as usize], true) {
                return None;
            }
            let k = self.best(s)?;
            let (next, cost) = self.actions.actions[s as usize][k];
            total += cost as usize;
            s = next as u64;
        }
        Some(total)
    }

    pub fn params(&self) -> PuzzleParams {
        self.params
    }
}

/// Runs Q-learning and returns the learner along with its curve.
pub fn train_learner<F: Scalar>(
    config: &LearnConfig<F>,
) -> Result<(QLearner<F>, LearningCurve<F>)> {
    config.validate()?;
    let clock = Instant::now();
    let graph = StateGraph::build(config.params, config.vertex_cap)?;
    let optimal = optimal_values(
        config.params,
        &config.goal,
        config.action_space,
        config.vertex_cap,
    )?;
    let goal = config.goal.code();
    let mut learner = QLearner::<F>::new(&graph, goal, config.action_space);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let states = config.params.state_count();
    let lr = config.learning_rate;
    let mut curve = LearningCurve {
        records: Vec::with_capacity(config.episodes),
    };

    for episode in 0..config.episodes {
        let epsilon = config.exploration.rate(episode).to_f64().unwrap_or(0.0);
        let mut s = if config.random_starts && states > 1 {
            let mut pick = rng.gen_range(0..states - 1);
            if pick >= goal {
                pick += 1;
            }
            pick
        } else {
            config.start.code()
        };
        let mut rollout = vec![s];
        for _ in 0..config.step_cap {
            if s == goal {
                break;
            }
            let options = learner.actions.actions[s as usize].len();
            if options == 0 {
                break;
            }
            let k = if rng.gen::<f64>() < epsilon {
                rng.gen_range(0..options)
            } else {
                learner.best(s).expect("non-empty")
            };
            s = learner.update(s, k, lr, config.discount);
            rollout.push(s);
        }

        if config.denoise && rollout.len() > 1 {
            let configs = rollout
                .iter()
                .map(|&c| Configuration::from_code(config.params, c))
                .collect::<Result<Vec<_>>>()?;
            let (cleaned, _) = denoise(&ConfigSequence::new(configs)?)?;
            for pair in cleaned.configs().windows(2) {
                let (from, to) = (pair[0].code(), pair[1].code());
                let k = learner.action_to(from, to).ok_or_else(|| {
                    HanoiError::InternalInvariantViolation(format!(
                        "denoised step {} -> {} is not an available action",
                        pair[0], pair[1]
                    ))
                })?;
                learner.update(from, k, lr, config.discount);
            }
        }

        curve.records.push(EpisodeRecord {
            episode: episode + 1,
            time_s: if config.record_time {
                clock.elapsed().as_secs_f64()
            } else {
                0.0
            },
            mse: learner.mse(&optimal),
            greedy_len: learner.greedy_len(&config.start),
        });
    }
    Ok((learner, curve))
}

pub fn train<F: Scalar>(config: &LearnConfig<F>) -> Result<LearningCurve<F>> {
    train_learner(config).map(|(_, curve)| curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn towers(n: usize) -> (Configuration, Configuration) {
        let params = PuzzleParams::new(1, n, 3).unwrap();
        (
            Configuration::tower(params, 0).unwrap(),
            Configuration::tower(params, 1).unwrap(),
        )
    }

    #[test]
    fn optimal_values_examples() {
        let (start, goal) = towers(2);
        let table = optimal_values(start.params(), &goal, ActionSpace::SingleDisk, 1000).unwrap();
        assert_eq!(table.get(&goal), Some(0));
        assert_eq!(table.get(&start), Some(-3));

        let graph = StateGraph::build(start.params(), 1000).unwrap();
        let full = optimal_values(start.params(), &goal, ActionSpace::FullParallel, 1000).unwrap();
        for v in 0..graph.vertex_count() as u64 {
            for &(w, c) in graph.neighbors(v) {
                let (a, b) = (
                    full.by_code()[v as usize].unwrap(),
                    full.by_code()[w as usize].unwrap(),
                );
                assert!((a - b).abs() <= c as i64);
            }
        }
    }

    #[test]
    fn single_disk_values_are_classic() {
        let (start, goal) = towers(4);
        let table = optimal_values(start.params(), &goal, ActionSpace::SingleDisk, 1000).unwrap();
        assert_eq!(table.get(&start), Some(-15));
    }

    #[test]
    fn zero_episodes() {
        let (start, goal) = towers(2);
        let mut config = LearnConfig::<f64>::new(start, goal);
        config.episodes = 0;
        assert!(train(&config).unwrap().is_empty());
    }

    #[test]
    fn converges_on_three_disks() {
        let (start, goal) = towers(3);
        let mut config = LearnConfig::<f64>::new(start, goal);
        config.episodes = 400;
        let (learner, curve) = train_learner(&config).unwrap();
        assert_eq!(curve.records.last().unwrap().greedy_len, Some(7));
        assert!(
            learner.mse(
                &optimal_values(config.params, &config.goal, ActionSpace::SingleDisk, 1000)
                    .unwrap()
            ) < 1e-6
        );
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (start, goal) = towers(3);
        let mut config = LearnConfig::<f32>::new(start, goal);
        config.episodes = 50;
        config.seed = 11;
        assert_eq!(train(&config).unwrap(), train(&config).unwrap());
        config.denoise = true;
        assert_eq!(
            train(&config).unwrap().to_csv(),
            train(&config).unwrap().to_csv()
        );
    }

    #[test]
    fn parallel_actions_with_denoise() {
        let params = PuzzleParams::new(2, 1, 4).unwrap();
        let start = Configuration::new(params, &[vec![0], vec![1]]).unwrap();
        let goal = Configuration::new(params, &[vec![2], vec![3]]).unwrap();
        let mut config = LearnConfig::<f64>::new(start, goal);
        config.action_space = ActionSpace::FullParallel;
        config.denoise = true;
        config.episodes = 200;
        let curve = train(&config).unwrap();
        assert_eq!(curve.records.last().unwrap().greedy_len, Some(2));
    }

    #[test]
    fn rejects_bad_configs() {
        let (start, goal) = towers(2);
        let mut config = LearnConfig::<f64>::new(start, goal);
        config.learning_rate = 0.0;
        assert!(matches!(train(&config), Err(HanoiError::InvalidConfig(_))));
        let mut config = LearnConfig::<f64>::new(config.start.clone(), config.goal.clone());
        config.step_cap = 0;
        assert!(matches!(train(&config), Err(HanoiError::InvalidConfig(_))));
        let mut config = LearnConfig::<f64>::new(config.start.clone(), config.goal.clone());
        config.vertex_cap = 4;
        assert!(matches!(
            train(&config),
            Err(HanoiError::CapExceeded { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let curve = LearningCurve {
            records: vec![
                EpisodeRecord {
                    episode: 1,
                    time_s: 0.0,
                    mse: 2.5f64,
                    greedy_len: None,
                },
                EpisodeRecord {
                    episode: 2,
                    time_s: 0.0,
                    mse: 0.0,
                    greedy_len: Some(3),
                },
            ],
        };
        assert_eq!(
            curve.to_csv(),
            "episode,time_s,mse,greedy_len\n1,0.000000,2.5,\n2,0.000000,0,3\n"
        );
        assert_eq!(curve.episodes_to_threshold(1.0), Some(2));
    }
}
