//! Configurations of the parallel puzzle, EREW adjacency and transition graphs.
//!
//! A configuration of `t` towers with `n` disks each on `p` posts is a `t × n`
//! matrix: row `u` is a color, column `j` a disk size (column 0 holds the
//! largest disks), and each entry is the post the disk sits on. Disks of one
//! column have equal size, so they must occupy pairwise distinct posts.
//!
//! Disks are named 1-based through [`DiskId`]; matrix accessors are 0-based.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AdjacencyViolation, HanoiError, Result};

/// Post index, `0..p`.
pub type Post = u8;

/// Number of ways to place `t` distinguishable disks on `p` posts with no
/// two on the same post: `p (p-1) ... (p-t+1)`.
pub fn falling_factorial(p: usize, t: usize) -> u128 {
    (0..t).map(|i| (p - i) as u128).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PuzzleParams {
    t: usize,
    n: usize,
    p: usize,
}

impl PuzzleParams {
    /// Requires `t ≥ 1`, `n ≥ 1`, `2 ≤ p ≤ 256`, `p ≥ t`, and a state count
    /// that fits the 64-bit canonical encoding.
    pub fn new(t: usize, n: usize, p: usize) -> Result<Self> {
        if t == 0 {
            return Err(HanoiError::InvalidParams(
                "tower count t must be at least 1".into(),
            ));
        }
        if n == 0 {
            return Err(HanoiError::InvalidParams(
                "disk count n must be at least 1".into(),
            ));
        }
        if p < 2 {
            return Err(HanoiError::InvalidParams(
                "post count p must be at least 2".into(),
            ));
        }
        if p > Post::MAX as usize + 1 {
            return Err(HanoiError::InvalidParams(format!(
                "post count p = {p} exceeds 256"
            )));
        }
        if p < t {
            return Err(HanoiError::InvalidParams(format!(
                "post count p = {p} is smaller than tower count t = {t}"
            )));
        }
        let params = PuzzleParams { t, n, p };
        match params.checked_state_count() {
            Some(c) if c <= u64::MAX as u128 => Ok(params),
            _ => Err(HanoiError::InvalidParams(format!(
                "state space for t = {t}, n = {n}, p = {p} exceeds 64-bit encoding"
            ))),
        }
    }

    pub fn towers(&self) -> usize {
        self.t
    }

    pub fn disks(&self) -> usize {
        self.n
    }

    pub fn posts(&self) -> usize {
        self.p
    }

    /// Placements of one column of equal-sized disks.
    pub fn column_placements(&self) -> u64 {
        falling_factorial(self.p, self.t) as u64
    }

    /// Total number of valid configurations, `(p falling t)^n`.
    pub fn state_count(&self) -> u64 {
        self.checked_state_count().expect("checked in constructor") as u64
    }

    fn checked_state_count(&self) -> Option<u128> {
        let f = falling_factorial(self.p, self.t);
        (0..self.n).try_fold(1u128, |acc, _| acc.checked_mul(f))
    }

    /// `p ≥ t + 2`, the regime in which the puzzle is normally posed. Outside
    /// it the library still works but connectivity is doubtful.
    pub fn is_standard_regime(&self) -> bool {
        self.p >= self.t + 2
    }
}

impl fmt::Display for PuzzleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} n={} p={}", self.t, self.n, self.p)
    }
}

/// Disk `(color, index)`, both 1-based; index 1 is the largest size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiskId {
    pub color: usize,
    pub index: usize,
}

impl DiskId {
    pub fn new(color: usize, index: usize) -> Self {
        DiskId { color, index }
    }
}

impl fmt::Display for DiskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.color, self.index)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    params: PuzzleParams,
    // Row-major t × n.
    cells: Vec<Post>,
}

impl Configuration {
    /// Builds a configuration from rows of posts, checking dimensions, post
    /// range, and column distinctness.
    pub fn new(params: PuzzleParams, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != params.t {
            return Err(HanoiError::DimensionMismatch {
                expected: format!("{} rows", params.t),
                found: format!("{} rows", rows.len()),
            });
        }
        let mut cells = Vec::with_capacity(params.t * params.n);
        for row in rows {
            if row.len() != params.n {
                return Err(HanoiError::DimensionMismatch {
                    expected: format!("{} columns", params.n),
                    found: format!("{} columns", row.len()),
                });
            }
            for &post in row {
                if post >= params.p {
                    return Err(HanoiError::PostOutOfRange {
                        post,
                        posts: params.p,
                    });
                }
                cells.push(post as Post);
            }
        }
        let config = Configuration { params, cells };
        config.check_columns()?;
        Ok(config)
    }

    /// Every disk on `post`: the tower configuration for `t = 1`.
    pub fn tower(params: PuzzleParams, post: usize) -> Result<Self> {
        if params.t != 1 {
            return Err(HanoiError::InvalidParams(
                "a single full tower needs t = 1".into(),
            ));
        }
        Configuration::new(params, &[vec![post; params.n]])
    }

    fn check_columns(&self) -> Result<()> {
        for j in 0..self.params.n {
            for u in 0..self.params.t {
                for v in (u + 1)..self.params.t {
                    if self.cell(u, j) == self.cell(v, j) {
                        return Err(HanoiError::ColumnCollision {
                            column: j + 1,
                            first: u + 1,
                            second: v + 1,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> PuzzleParams {
        self.params
    }

    /// Post of the disk in row `color` and column `index`, both 0-based.
    #[inline]
    pub fn cell(&self, color: usize, index: usize) -> usize {
        self.cells[color * self.params.n + index] as usize
    }

    #[inline]
    pub(crate) fn set_cell(&mut self, color: usize, index: usize, post: usize) {
        self.cells[color * self.params.n + index] = post as Post;
    }

    pub fn post_of(&self, disk: DiskId) -> usize {
        self.cell(disk.color - 1, disk.index - 1)
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.cells
            .chunks(self.params.n)
            .map(|row| row.iter().map(|&c| c as usize).collect())
            .collect()
    }

    /// Smallest disk on each post as `(color, column)`, 0-based.
    pub(crate) fn tops(&self) -> Vec<Option<(usize, usize)>> {
        let mut tops: Vec<Option<(usize, usize)>> = vec![None; self.params.p];
        for u in 0..self.params.t {
            for j in 0..self.params.n {
                let q = self.cell(u, j);
                if tops[q].is_none_or(|(_, k)| j > k) {
                    tops[q] = Some((u, j));
                }
            }
        }
        tops
    }

    /// Canonical integer encoding in `0..state_count()`.
    ///
    /// Each column is ranked as an injective placement (mixed radix
    /// `p, p-1, ..., p-t+1`, color 1 most significant, each digit being the
    /// rank of the post among posts not used by earlier colors), and the
    /// column codes form a mixed-radix number with column 1 most significant.
    pub fn code(&self) -> u64 {
        let base = self.params.column_placements();
        (0..self.params.n).fold(0u64, |acc, j| {
            let (digit, _) =
                rank_injective((0..self.params.t).map(|u| self.cell(u, j)), self.params.p);
            acc * base + digit
        })
    }

    /// Inverse of [`Configuration::code`].
    pub fn from_code(params: PuzzleParams, mut code: u64) -> Result<Self> {
        if code >= params.state_count() {
            return Err(HanoiError::InvalidParams(format!(
                "code {code} out of range for {params}"
            )));
        }
        let base = params.column_placements();
        let mut cells = vec![0 as Post; params.t * params.n];
        for j in (0..params.n).rev() {
            let column = unrank_injective(code % base, params.t, params.p);
            code /= base;
            for (u, post) in column.into_iter().enumerate() {
                cells[u * params.n + j] = post as Post;
            }
        }
        Ok(Configuration { params, cells })
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// Canonical text format: rows separated by `"; "`, posts by single spaces.
impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (u, row) in self.cells.chunks(self.params.n).enumerate() {
            if u > 0 {
                f.write_str("; ")?;
            }
            for (j, post) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{post}")?;
            }
        }
        Ok(())
    }
}

/// Rank of a sequence of distinct posts among all injective sequences of
/// the same length over `0..p`. Returns `(code, radix)`.
pub(crate) fn rank_injective(posts: impl Iterator<Item = usize>, p: usize) -> (u64, u64) {
    // Bitset over at most 256 posts.
    let mut used_bits = [0u64; 4];
    let mut code = 0u64;
    let mut radix = 1u64;
    for (k, post) in posts.enumerate() {
        let below = (0..post)
            .filter(|&q| used_bits[q / 64] >> (q % 64) & 1 == 1)
            .count();
        let digit = (post - below) as u64;
        let span = (p - k) as u64;
        code = code * span + digit;
        radix *= span;
        used_bits[post / 64] |= 1 << (post % 64);
    }
    (code, radix)
}

pub(crate) fn unrank_injective(mut code: u64, len: usize, p: usize) -> Vec<usize> {
    let mut digits = vec![0usize; len];
    for k in (0..len).rev() {
        let span = (p - k) as u64;
        digits[k] = (code % span) as usize;
        code /= span;
    }
    let mut free: Vec<usize> = (0..p).collect();
    digits.into_iter().map(|d| free.remove(d)).collect()
}

/// All valid configurations in canonical code order.
pub fn all_configurations(params: PuzzleParams) -> impl Iterator<Item = Configuration> {
    (0..params.state_count()).map(move |c| Configuration::from_code(params, c).expect("in range"))
}

/// Validates a raw `t × n` post matrix against `params`.
pub fn validate_config(cells: &[Vec<usize>], params: PuzzleParams) -> Result<Configuration> {
    Configuration::new(params, cells)
}

/// One disk transfer inside a parallel step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub disk: DiskId,
}

/// Directed, disk-labelled graph on posts describing one parallel step.
/// Edges are ordered by disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionGraph {
    edges: Vec<Transfer>,
}

impl TransitionGraph {
    pub fn edges(&self) -> &[Transfer] {
        &self.edges
    }

    /// Edge count: the number of disks moved, i.e. the transfer cost.
    pub fn tgec(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn reversed(&self) -> TransitionGraph {
        TransitionGraph {
            edges: self
                .edges
                .iter()
                .map(|e| Transfer {
                    from: e.to,
                    to: e.from,
                    disk: e.disk,
                })
                .collect(),
        }
    }
}

/// Transition graph of the pair `(a, b)`: empty when `a == b`, the set of
/// moved disks when `a` and `b` are EREW-adjacent, `NotAdjacent` otherwise.
///
/// A moved disk `(u, j)` must have no strictly smaller disk (any color,
/// index `> j`) on its post in `a`, nor on its new post in `b`.
pub fn transition_graph(a: &Configuration, b: &Configuration) -> Result<TransitionGraph> {
    if a.params != b.params {
        return Err(HanoiError::ParamsMismatch);
    }
    let PuzzleParams { t, n, .. } = a.params;
    let mut edges = Vec::new();
    for u in 0..t {
        for j in 0..n {
            let (from, to) = (a.cell(u, j), b.cell(u, j));
            if from == to {
                continue;
            }
            let moved = DiskId::new(u + 1, j + 1);
            for v in 0..t {
                for y in (j + 1)..n {
                    if a.cell(v, y) == from {
                        return Err(HanoiError::NotAdjacent(AdjacencyViolation::SourceCovered {
                            moved,
                            blocker: DiskId::new(v + 1, y + 1),
                        }));
                    }
                }
            }
            for v in 0..t {
                for y in (j + 1)..n {
                    if b.cell(v, y) == to {
                        return Err(HanoiError::NotAdjacent(
                            AdjacencyViolation::DestinationCovered {
                                moved,
                                blocker: DiskId::new(v + 1, y + 1),
                            },
                        ));
                    }
                }
            }
            edges.push(Transfer {
                from,
                to,
                disk: moved,
            });
        }
    }
    Ok(TransitionGraph { edges })
}

/// Number of cells in which `a` and `b` differ; equals the tgec of the pair
/// when they are adjacent.
pub(crate) fn moved_count(a: &Configuration, b: &Configuration) -> usize {
    a.cells.iter().zip(&b.cells).filter(|(x, y)| x != y).count()
}

/// Every configuration EREW-adjacent to `a`, in canonical code order.
///
/// Generated directly: pick a nonempty set of top disks, send them to
/// pairwise distinct new posts, and keep the result when no moved disk
/// lands on a smaller disk or an equal-sized one.
pub fn enumerate_neighbors(a: &Configuration) -> Vec<Configuration> {
    let p = a.params.p;
    let movers: Vec<(usize, (usize, usize))> = a
        .tops()
        .into_iter()
        .enumerate()
        .filter_map(|(q, top)| top.map(|d| (q, d)))
        .collect();
    let mut out = Vec::new();
    let mut assignment: Vec<Option<usize>> = vec![None; movers.len()];
    let mut dest_used = vec![false; p];
    assign_destinations(a, &movers, 0, &mut assignment, &mut dest_used, &mut out);
    out.sort_by_key(Configuration::code);
    out
}

fn assign_destinations(
    a: &Configuration,
    movers: &[(usize, (usize, usize))],
    k: usize,
    assignment: &mut Vec<Option<usize>>,
    dest_used: &mut Vec<bool>,
    out: &mut Vec<Configuration>,
) {
    if k == movers.len() {
        if assignment.iter().all(Option::is_none) {
            return;
        }
        let mut b = a.clone();
        for (&(_, (u, j)), dest) in movers.iter().zip(assignment.iter()) {
            if let Some(r) = dest {
                b.set_cell(u, j, *r);
            }
        }
        if landings_are_legal(&b, movers, assignment) {
            debug_assert!(transition_graph(a, &b).is_ok_and(|g| g.tgec() >= 1));
            out.push(b);
        }
        return;
    }
    assignment[k] = None;
    assign_destinations(a, movers, k + 1, assignment, dest_used, out);
    let source = movers[k].0;
    for r in 0..a.params.p {
        if r == source || dest_used[r] {
            continue;
        }
        dest_used[r] = true;
        assignment[k] = Some(r);
        assign_destinations(a, movers, k + 1, assignment, dest_used, out);
        assignment[k] = None;
        dest_used[r] = false;
    }
}

fn landings_are_legal(
    b: &Configuration,
    movers: &[(usize, (usize, usize))],
    assignment: &[Option<usize>],
) -> bool {
    let PuzzleParams { t, n, .. } = b.params;
    movers.iter().zip(assignment).all(|(&(_, (u, j)), dest)| {
        let Some(r) = *dest else { return true };
        let equal_clash = (0..t).any(|v| v != u && b.cell(v, j) == r);
        let smaller_below = (0..t).any(|v| ((j + 1)..n).any(|y| b.cell(v, y) == r));
        !equal_clash && !smaller_below
    })
}

/// A walk through configuration space; consecutive entries are equal or
/// EREW-adjacent. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigSequence {
    configs: Vec<Configuration>,
}

impl ConfigSequence {
    pub fn new(configs: Vec<Configuration>) -> Result<Self> {
        let first = configs.first().ok_or(HanoiError::EmptySequence)?;
        if configs.iter().any(|c| c.params != first.params) {
            return Err(HanoiError::ParamsMismatch);
        }
        for (step, w) in configs.windows(2).enumerate() {
            match transition_graph(&w[0], &w[1]) {
                Ok(_) => {}
                Err(HanoiError::NotAdjacent(violation)) => {
                    return Err(HanoiError::InvalidSequence { step, violation })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(ConfigSequence { configs })
    }

    pub(crate) fn from_vec_unchecked(configs: Vec<Configuration>) -> Self {
        debug_assert!(!configs.is_empty());
        ConfigSequence { configs }
    }

    pub fn singleton(config: Configuration) -> Self {
        ConfigSequence {
            configs: vec![config],
        }
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn into_configs(self) -> Vec<Configuration> {
        self.configs
    }

    pub fn params(&self) -> PuzzleParams {
        self.configs[0].params
    }

    pub fn first(&self) -> &Configuration {
        &self.configs[0]
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("non-empty")
    }

    /// Sequence length: the number of configurations.
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of the transition-graph edge counts over consecutive pairs.
    pub fn transfer_length(&self) -> usize {
        self.configs
            .windows(2)
            .map(|w| moved_count(&w[0], &w[1]))
            .sum()
    }

    pub fn reversed(&self) -> ConfigSequence {
        let mut configs = self.configs.clone();
        configs.reverse();
        ConfigSequence { configs }
    }
}

impl std::ops::Index<usize> for ConfigSequence {
    type Output = Configuration;

    fn index(&self, i: usize) -> &Configuration {
        &self.configs[i]
    }
}

/// Parses the text format (`"0 1; 2 3"`) on `p` posts; `t` and `n` are taken
/// from the shape of the text.
pub fn parse_config(text: &str, p: usize) -> Result<Configuration> {
    parse_config_at(text, p, 1)
}

fn parse_config_at(text: &str, p: usize, line: usize) -> Result<Configuration> {
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut offset = 0;
    for segment in text.split(';') {
        let mut row = Vec::new();
        let mut pos = 0;
        for token in segment.split_whitespace() {
            let at = segment[pos..].find(token).map_or(pos, |i| pos + i);
            pos = at + token.len();
            let column = offset + at + 1;
            if !token.bytes().all(|b| b.is_ascii_digit()) {
                return Err(HanoiError::Parse {
                    line,
                    column,
                    message: format!("expected a post index, found {token:?}"),
                });
            }
            let post = token.parse::<usize>().map_err(|e| HanoiError::Parse {
                line,
                column,
                message: e.to_string(),
            })?;
            row.push(post);
        }
        if row.is_empty() {
            return Err(HanoiError::Parse {
                line,
                column: offset + 1,
                message: "empty row".into(),
            });
        }
        rows.push(row);
        offset += segment.len() + 1;
    }
    let t = rows.len();
    let n = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(HanoiError::DimensionMismatch {
            expected: format!("{n} columns in every row"),
            found: format!("{} columns", bad.len()),
        });
    }
    let params = PuzzleParams::new(t, n, p)?;
    Configuration::new(params, &rows)
}

pub fn format_config(config: &Configuration) -> String {
    config.to_string()
}

/// Parses a sequence file: one configuration per line, `#` starts a comment,
/// blank lines are skipped.
pub fn parse_sequence(text: &str, p: usize) -> Result<ConfigSequence> {
    let mut configs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        configs.push(parse_config_at(content, p, i + 1)?);
    }
    ConfigSequence::new(configs)
}

pub fn format_sequence(seq: &ConfigSequence) -> String {
    seq.configs.iter().map(|c| format!("{c}\n")).collect()
}

/// JSON mirror `{"t":…, "n":…, "p":…, "cells":[[…],…]}`.
#[derive(Serialize, Deserialize)]
struct ConfigurationJson {
    t: usize,
    n: usize,
    p: usize,
    cells: Vec<Vec<usize>>,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationJson {
            t: self.params.t,
            n: self.params.n,
            p: self.params.p,
            cells: self.rows(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = ConfigurationJson::deserialize(deserializer)?;
        let params = PuzzleParams::new(raw.t, raw.n, raw.p).map_err(serde::de::Error::custom)?;
        Configuration::new(params, &raw.cells).map_err(serde::de::Error::custom)
    }
}
