//! Exhaustive state graph and shortest walks.
//!
//! Vertices are canonical configuration codes. Small instances (at most
//! [`MATERIALIZE_LIMIT`] states) are searched on a prebuilt [`StateGraph`];
//! larger ones, up to the vertex cap, are searched lazily by generating
//! neighbors on demand. Unreachable targets come back as `None`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::ClusterId;
use crate::config::{
    enumerate_neighbors, moved_count, ConfigSequence, Configuration, PuzzleParams,
};
use crate::error::{HanoiError, Result};

pub const DEFAULT_VERTEX_CAP: u64 = 1_000_000;
pub const MATERIALIZE_LIMIT: u64 = 10_000;

/// Edge weight used by a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Transition-graph edge count of each step.
    Transfers,
    /// One per parallel step.
    Steps,
}

impl Measure {
    fn weight(self, tgec: u64) -> u64 {
        match self {
            Measure::Transfers => tgec,
            Measure::Steps => 1,
        }
    }
}

fn check_cap(params: PuzzleParams, cap: u64) -> Result<()> {
    let states = params.state_count();
    if states > cap {
        return Err(HanoiError::CapExceeded {
            states: states as u128,
            cap,
        });
    }
    Ok(())
}

/// Explicit state graph: adjacency lists of `(neighbor code, tgec)` in code
/// order.
#[derive(Debug, Clone)]
pub struct StateGraph {
    params: PuzzleParams,
    adjacency: Vec<Vec<(u32, u16)>>,
}

impl StateGraph {
    /// Builds the whole graph, spreading vertices over the rayon pool.
    pub fn build(params: PuzzleParams, cap: u64) -> Result<Self> {
        check_cap(params, cap)?;
        if params.state_count() > u32::MAX as u64 {
            return Err(HanoiError::CapExceeded {
                states: params.state_count() as u128,
                cap: u32::MAX as u64,
            });
        }
        let adjacency = (0..params.state_count())
            .into_par_iter()
            .map(|code| {
                let a = Configuration::from_code(params, code).expect("in range");
                enumerate_neighbors(&a)
                    .iter()
                    .map(|b| (b.code() as u32, moved_count(&a, b) as u16))
                    .collect()
            })
            .collect();
        Ok(StateGraph { params, adjacency })
    }

    pub fn params(&self) -> PuzzleParams {
        self.params
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, code: u64) -> &[(u32, u16)] {
        &self.adjacency[code as usize]
    }

    pub fn config(&self, code: u64) -> Configuration {
        Configuration::from_code(self.params, code).expect("vertex in range")
    }

    /// Single-source distances to every vertex, walking only through
    /// vertices accepted by `allowed` (the source is always accepted).
    pub fn distances_from(
        &self,
        source: u64,
        measure: Measure,
        allowed: &dyn Fn(u64) -> bool,
    ) -> Vec<Option<u64>> {
        let mut dist: Vec<Option<u64>> = vec![None; self.adjacency.len()];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = Some(0);
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if dist[v as usize].is_some_and(|best| d > best) {
                continue;
            }
            for &(w, tgec) in &self.adjacency[v as usize] {
                let w = w as u64;
                if !allowed(w) {
                    continue;
                }
                let nd = d + measure.weight(tgec as u64);
                if dist[w as usize].is_none_or(|best| nd < best) {
                    dist[w as usize] = Some(nd);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        dist
    }

    fn distance(
        &self,
        source: u64,
        target: u64,
        measure: Measure,
        allowed: &dyn Fn(u64) -> bool,
    ) -> Option<u64> {
        let mut dist: Vec<Option<u64>> = vec![None; self.adjacency.len()];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = Some(0);
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if v == target {
                return Some(d);
            }
            if dist[v as usize].is_some_and(|best| d > best) {
                continue;
            }
            for &(w, tgec) in &self.adjacency[v as usize] {
                let w = w as u64;
                if !allowed(w) {
                    continue;
                }
                let nd = d + measure.weight(tgec as u64);
                if dist[w as usize].is_none_or(|best| nd < best) {
                    dist[w as usize] = Some(nd);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        None
    }

    /// Graphviz rendering. Vertices are labelled with the text format of
    /// their configuration; every edge carries its tgec as attribute `w`.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "graph H_{}_{}_{} {{",
            self.params.towers(),
            self.params.disks(),
            self.params.posts()
        );
        for code in 0..self.adjacency.len() as u64 {
            let _ = writeln!(out, "  v{code} [label=\"{}\"];", self.config(code));
        }
        for (v, list) in self.adjacency.iter().enumerate() {
            for &(w, tgec) in list {
                if (w as usize) > v {
                    let _ = writeln!(out, "  v{v} -- v{w} [w={tgec}];");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// One JSON object per vertex:
    /// `{"vertex":code,"config":"…","neighbors":[[code,tgec],…]}`.
    pub fn adjacency_json_lines(&self) -> String {
        self.adjacency
            .iter()
            .enumerate()
            .map(|(v, list)| {
                let line = serde_json::json!({
                    "vertex": v,
                    "config": self.config(v as u64).to_string(),
                    "neighbors": list.iter().map(|&(w, c)| [w as u64, c as u64]).collect::<Vec<_>>(),
                });
                format!("{line}\n")
            })
            .collect()
    }
}

pub fn build_state_graph(params: PuzzleParams, cap: u64) -> Result<StateGraph> {
    StateGraph::build(params, cap)
}

fn lazy_distance(
    source: &Configuration,
    target: &Configuration,
    measure: Measure,
    allowed: &dyn Fn(&Configuration) -> bool,
) -> Option<u64> {
    let params = source.params();
    let goal = target.code();
    let mut dist: HashMap<u64, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source.code(), 0);
    heap.push(Reverse((0u64, source.code())));
    while let Some(Reverse((d, v))) = heap.pop() {
        if v == goal {
            return Some(d);
        }
        if dist.get(&v).is_some_and(|&best| d > best) {
            continue;
        }
        let a = Configuration::from_code(params, v).expect("in range");
        for b in enumerate_neighbors(&a) {
            if !allowed(&b) {
                continue;
            }
            let nd = d + measure.weight(moved_count(&a, &b) as u64);
            let w = b.code();
            if dist.get(&w).is_none_or(|&best| nd < best) {
                dist.insert(w, nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
    None
}

/// Shortest-walk queries on one parameter set.
#[derive(Debug, Clone)]
pub struct Oracle {
    params: PuzzleParams,
    graph: Option<StateGraph>,
}

impl Oracle {
    /// Fails with `CapExceeded` when the state count is above `cap`.
    pub fn new(params: PuzzleParams, cap: u64) -> Result<Self> {
        check_cap(params, cap)?;
        let graph = if params.state_count() <= MATERIALIZE_LIMIT {
            Some(StateGraph::build(params, cap)?)
        } else {
            None
        };
        Ok(Oracle { params, graph })
    }

    /// Always materializes the graph (still subject to `cap`).
    pub fn materialized(params: PuzzleParams, cap: u64) -> Result<Self> {
        Ok(Oracle {
            params,
            graph: Some(StateGraph::build(params, cap)?),
        })
    }

    pub fn params(&self) -> PuzzleParams {
        self.params
    }

    pub fn graph(&self) -> Option<&StateGraph> {
        self.graph.as_ref()
    }

    fn check(&self, configs: &[&Configuration]) -> Result<()> {
        if configs.iter().any(|c| c.params() != self.params) {
            return Err(HanoiError::ParamsMismatch);
        }
        Ok(())
    }

    /// Shortest walk from `a` to `b` through configurations accepted by
    /// `allowed`; `a` itself is always accepted.
    pub fn distance_restricted(
        &self,
        a: &Configuration,
        b: &Configuration,
        measure: Measure,
        allowed: &dyn Fn(&Configuration) -> bool,
    ) -> Result<Option<u64>> {
        self.check(&[a, b])?;
        if a == b {
            return Ok(Some(0));
        }
        Ok(match &self.graph {
            Some(graph) => {
                let params = self.params;
                let by_code =
                    |code: u64| allowed(&Configuration::from_code(params, code).expect("in range"));
                graph.distance(a.code(), b.code(), measure, &by_code)
            }
            None => lazy_distance(a, b, measure, allowed),
        })
    }

    /// Least total transfer count over valid sequences from `a` to `b`.
    pub fn min_transfer_dist(&self, a: &Configuration, b: &Configuration) -> Result<Option<u64>> {
        self.distance_restricted(a, b, Measure::Transfers, &|_| true)
    }

    /// Least number of parallel steps from `a` to `b`.
    pub fn min_step_dist(&self, a: &Configuration, b: &Configuration) -> Result<Option<u64>> {
        self.distance_restricted(a, b, Measure::Steps, &|_| true)
    }

    /// Least transfer count over sequences that never leave `cluster`.
    pub fn min_transfer_dist_within(
        &self,
        a: &Configuration,
        b: &Configuration,
        cluster: &ClusterId,
    ) -> Result<Option<u64>> {
        if !cluster.contains(a) || !cluster.contains(b) {
            return Err(HanoiError::NotMember);
        }
        self.distance_restricted(a, b, Measure::Transfers, &|c| cluster.contains(c))
    }

    /// Distances from `source` to every configuration, indexed by code.
    pub fn distances_from(
        &self,
        source: &Configuration,
        measure: Measure,
    ) -> Result<Vec<Option<u64>>> {
        self.check(&[source])?;
        match &self.graph {
            Some(graph) => Ok(graph.distances_from(source.code(), measure, &|_| true)),
            None => {
                let graph = StateGraph::build(self.params, u64::MAX)?;
                Ok(graph.distances_from(source.code(), measure, &|_| true))
            }
        }
    }
}

/// Seeded random walk of `length` configurations starting at `start`. At
/// each step the walk stays put with probability `stay_probability`,
/// otherwise moves to a uniformly chosen neighbor.
pub fn random_walk(
    start: &Configuration,
    length: usize,
    seed: u64,
    stay_probability: f64,
) -> Result<ConfigSequence> {
    if length == 0 {
        return Err(HanoiError::EmptySequence);
    }
    if !(0.0..=1.0).contains(&stay_probability) {
        return Err(HanoiError::InvalidConfig(format!(
            "stay probability {stay_probability} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut configs = Vec::with_capacity(length);
    configs.push(start.clone());
    while configs.len() < length {
        let current = configs.last().expect("non-empty");
        let next = if stay_probability > 0.0 && rng.gen_bool(stay_probability) {
            current.clone()
        } else {
            let mut options = enumerate_neighbors(current);
            let k = rng.gen_range(0..options.len());
            options.swap_remove(k)
        };
        configs.push(next);
    }
    Ok(ConfigSequence::from_vec_unchecked(configs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{cluster_id, Grading};
    use crate::config::{parse_config, transition_graph};

    fn params(t: usize, n: usize, p: usize) -> PuzzleParams {
        PuzzleParams::new(t, n, p).unwrap()
    }

    #[test]
    fn k12() {
        let g = build_state_graph(params(2, 1, 4), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.edge_count(), 66);
    }

    #[test]
    fn small_graphs() {
        assert_eq!(
            build_state_graph(params(1, 2, 4), DEFAULT_VERTEX_CAP)
                .unwrap()
                .vertex_count(),
            16
        );
        let tri = build_state_graph(params(1, 1, 3), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!((tri.vertex_count(), tri.edge_count()), (3, 3));
        assert!(matches!(
            build_state_graph(params(1, 5, 3), 100),
            Err(HanoiError::CapExceeded {
                states: 243,
                cap: 100
            })
        ));
    }

    #[test]
    fn classic_distances() {
        // n = 3 beats the classic 7: the largest disk can land on post 1 in
        // the same step that the smallest disk leaves it.
        for (n, expected) in [(1, 1), (2, 3), (3, 6)] {
            let o = Oracle::new(params(1, n, 3), DEFAULT_VERTEX_CAP).unwrap();
            let a = Configuration::tower(o.params(), 0).unwrap();
            let b = Configuration::tower(o.params(), 1).unwrap();
            assert_eq!(o.min_transfer_dist(&a, &b).unwrap(), Some(expected));
            assert_eq!(o.min_transfer_dist(&a, &a).unwrap(), Some(0));
        }
        let o = Oracle::new(params(1, 2, 3), DEFAULT_VERTEX_CAP).unwrap();
        let a = Configuration::tower(o.params(), 0).unwrap();
        let b = Configuration::tower(o.params(), 1).unwrap();
        assert_eq!(o.min_step_dist(&a, &b).unwrap(), Some(3));
    }

    #[test]
    fn k12_distances() {
        let o = Oracle::new(params(2, 1, 4), DEFAULT_VERTEX_CAP).unwrap();
        let all: Vec<_> = crate::config::all_configurations(o.params()).collect();
        for a in &all {
            for b in &all {
                let d = o.min_transfer_dist(a, b).unwrap().unwrap();
                let s = o.min_step_dist(a, b).unwrap().unwrap();
                if a == b {
                    assert_eq!((d, s), (0, 0));
                    continue;
                }
                assert_eq!(s, 1);
                assert!(d <= 2);
                let differing = (0..2).filter(|&u| a.cell(u, 0) != b.cell(u, 0)).count();
                if differing == 1 {
                    assert_eq!(d, 1);
                }
            }
        }
    }

    #[test]
    fn lazy_search_agrees_with_materialized() {
        let p = params(1, 4, 3);
        let dense = Oracle::materialized(p, DEFAULT_VERTEX_CAP).unwrap();
        let a = parse_config("0 1 2 0", 3).unwrap();
        for b in crate::config::all_configurations(p).step_by(7) {
            let lazy = lazy_distance(&a, &b, Measure::Transfers, &|_| true);
            assert_eq!(lazy, dense.min_transfer_dist(&a, &b).unwrap());
        }
    }

    #[test]
    fn within_cluster() {
        let o = Oracle::new(params(1, 3, 3), DEFAULT_VERTEX_CAP).unwrap();
        let a = parse_config("0 0 0", 3).unwrap();
        let b = parse_config("0 1 1", 3).unwrap();
        let cluster = cluster_id(&a, &Grading::uniform(1, 1)).unwrap();
        assert_eq!(
            o.min_transfer_dist_within(&a, &b, &cluster).unwrap(),
            o.min_transfer_dist(&a, &b).unwrap()
        );
        assert_eq!(
            o.min_transfer_dist_within(&a, &a, &cluster).unwrap(),
            Some(0)
        );
        let universal = cluster_id(&a, &Grading::uniform(1, 0)).unwrap();
        let far = parse_config("2 2 2", 3).unwrap();
        assert_eq!(
            o.min_transfer_dist_within(&a, &far, &universal).unwrap(),
            o.min_transfer_dist(&a, &far).unwrap()
        );
        assert_eq!(
            o.min_transfer_dist_within(&a, &far, &cluster),
            Err(HanoiError::NotMember)
        );
    }

    #[test]
    fn random_walk_contract() {
        let start = parse_config("0 1; 2 3", 4).unwrap();
        assert_eq!(random_walk(&start, 1, 9, 0.0).unwrap().len(), 1);
        let w1 = random_walk(&start, 30, 42, 0.2).unwrap();
        let w2 = random_walk(&start, 30, 42, 0.2).unwrap();
        assert_eq!(w1, w2);
        for pair in w1.configs().windows(2) {
            transition_graph(&pair[0], &pair[1]).unwrap();
        }
        assert_ne!(w1, random_walk(&start, 30, 43, 0.2).unwrap());
    }

    #[test]
    fn dot_export_labels_round_trip() {
        let g = build_state_graph(params(1, 1, 3), DEFAULT_VERTEX_CAP).unwrap();
        let dot = g.to_dot();
        assert_eq!(
            dot,
            "graph H_1_1_3 {\n  v0 [label=\"0\"];\n  v1 [label=\"1\"];\n  v2 [label=\"2\"];\n  v0 -- v1 [w=1];\n  v0 -- v2 [w=1];\n  v1 -- v2 [w=1];\n}\n"
        );
        let lines = g.adjacency_json_lines();
        assert_eq!(
            lines.lines().next().unwrap(),
            r#"{"config":"0","neighbors":[[1,1],[2,1]],"vertex":0}"#
        );
    }
}
