//! Gradings, clusters, and the translative and reflective mappings.
//!
//! A cluster of grading `g = (g_1, …, g_t)` is the set of configurations in
//! which the `g_u` largest disks of every color `u` sit on fixed posts. A
//! [`ClusterId`] records those fixed posts.
//!
//! # Canonical encoding
//!
//! [`ClusterId::code`] numbers the clusters of one grading. Column `j` of the
//! fixed prefix holds the colors `u` with `g_u ≥ j`; their posts are ranked as
//! an injective placement (radix `p, p-1, …`, each digit the rank of the post
//! among posts not yet used in the column), and columns combine as a mixed
//! radix number with column 1 most significant. For uniform gradings this is
//! exactly the configuration code restricted to the first `g` columns.
//!
//! Worked example, `t = 2`, `p = 4`, uniform grading 2, fixed posts
//! `[[3, 0], [1, 2]]`:
//!
//! * column 1 holds posts `(3, 1)`: digits `3` (radix 4) and `1` (post 1 is
//!   the second unused post once 3 is taken; radix 3), code `3·3 + 1 = 10`;
//! * column 2 holds posts `(0, 2)`: digits `0` and `1`, code `1`;
//! * cluster code `10 · 12 + 1 = 121`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::config::{
    falling_factorial, rank_injective, ConfigSequence, Configuration, PuzzleParams,
};
use crate::error::{HanoiError, Result};

/// Per-color count of fixed largest disks. Ordered componentwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grading(Vec<usize>);

impl Grading {
    pub fn new(levels: Vec<usize>) -> Self {
        Grading(levels)
    }

    /// `g · 1` over `t` colors.
    pub fn uniform(t: usize, g: usize) -> Self {
        Grading(vec![g; t])
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    /// The common level when all colors agree.
    pub fn as_uniform(&self) -> Option<usize> {
        let first = *self.0.first()?;
        self.0.iter().all(|&g| g == first).then_some(first)
    }

    fn check(&self, params: PuzzleParams) -> Result<()> {
        if self.0.len() != params.towers() || self.0.iter().any(|&g| g > params.disks()) {
            return Err(HanoiError::GradingOutOfRange {
                grading: self.0.clone(),
                disks: params.disks(),
            });
        }
        Ok(())
    }
}

impl PartialOrd for Grading {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.0.len() != other.0.len() {
            return None;
        }
        let le = self.0.iter().zip(&other.0).all(|(a, b)| a <= b);
        let ge = self.0.iter().zip(&other.0).all(|(a, b)| a >= b);
        match (le, ge) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

/// A cluster: a grading plus the posts of the fixed disks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ClusterIdJson")]
pub struct ClusterId {
    grading: Grading,
    /// `fixed[u]` lists the posts of disks `(u,1) … (u,g_u)`.
    fixed: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct ClusterIdJson {
    grading: Grading,
    fixed: Vec<Vec<usize>>,
}

impl TryFrom<ClusterIdJson> for ClusterId {
    type Error = HanoiError;

    fn try_from(raw: ClusterIdJson) -> Result<Self> {
        ClusterId::new(raw.grading, raw.fixed)
    }
}

impl ClusterId {
    /// Checks that row lengths match the grading and that equal-sized fixed
    /// disks sit on distinct posts.
    pub fn new(grading: Grading, fixed: Vec<Vec<usize>>) -> Result<Self> {
        if fixed.len() != grading.0.len() {
            return Err(HanoiError::DimensionMismatch {
                expected: format!("{} fixed rows", grading.0.len()),
                found: format!("{} fixed rows", fixed.len()),
            });
        }
        for (row, &g) in fixed.iter().zip(&grading.0) {
            if row.len() != g {
                return Err(HanoiError::DimensionMismatch {
                    expected: format!("{g} fixed posts"),
                    found: format!("{} fixed posts", row.len()),
                });
            }
        }
        let depth = grading.0.iter().copied().max().unwrap_or(0);
        for j in 0..depth {
            for u in 0..fixed.len() {
                for v in (u + 1)..fixed.len() {
                    if let (Some(x), Some(y)) = (fixed[u].get(j), fixed[v].get(j)) {
                        if x == y {
                            return Err(HanoiError::ColumnCollision {
                                column: j + 1,
                                first: u + 1,
                                second: v + 1,
                            });
                        }
                    }
                }
            }
        }
        Ok(ClusterId { grading, fixed })
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn fixed(&self) -> &[Vec<usize>] {
        &self.fixed
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        let params = config.params();
        self.fixed.len() == params.towers()
            && self.fixed.iter().enumerate().all(|(u, row)| {
                row.len() <= params.disks()
                    && row
                        .iter()
                        .enumerate()
                        .all(|(j, &post)| config.cell(u, j) == post)
            })
    }

    /// Canonical index of this cluster among clusters of the same grading on
    /// `p` posts; see the module docs.
    pub fn code(&self, p: usize) -> u64 {
        let depth = self.grading.0.iter().copied().max().unwrap_or(0);
        (0..depth).fold(0u64, |acc, j| {
            let posts = self.fixed.iter().filter_map(|row| row.get(j).copied());
            let (digit, radix) = rank_injective(posts, p);
            acc * radix + digit
        })
    }

    fn check_posts(&self, params: PuzzleParams) -> Result<()> {
        match self.fixed.iter().flatten().find(|&&q| q >= params.posts()) {
            Some(&post) => Err(HanoiError::PostOutOfRange {
                post,
                posts: params.posts(),
            }),
            None => Ok(()),
        }
    }
}

/// The cluster of grading `grading` that contains `a`.
pub fn cluster_id(a: &Configuration, grading: &Grading) -> Result<ClusterId> {
    grading.check(a.params())?;
    let fixed = grading
        .0
        .iter()
        .enumerate()
        .map(|(u, &g)| (0..g).map(|j| a.cell(u, j)).collect())
        .collect();
    Ok(ClusterId {
        grading: grading.clone(),
        fixed,
    })
}

/// Number of clusters of uniform grading `j`: `(p falling t)^j`.
pub fn count_clusters(params: PuzzleParams, j: usize) -> u64 {
    falling_factorial(params.posts(), params.towers()).pow(j as u32) as u64
}

fn uniform_level(cluster: &ClusterId, params: PuzzleParams) -> Result<usize> {
    if cluster.fixed.len() != params.towers() {
        return Err(HanoiError::DimensionMismatch {
            expected: format!("{} colors", params.towers()),
            found: format!("{} colors", cluster.fixed.len()),
        });
    }
    let g = cluster
        .grading
        .as_uniform()
        .ok_or_else(|| HanoiError::NonUniformGrading(cluster.grading.0.clone()))?;
    cluster.grading.check(params)?;
    cluster.check_posts(params)?;
    Ok(g)
}

/// Overwrites the fixed prefix of `a` with the cluster's posts. `cluster`
/// must have a uniform grading valid for `a`'s parameters.
pub fn translate_config(a: &Configuration, cluster: &ClusterId) -> Configuration {
    let mut out = a.clone();
    for (u, row) in cluster.fixed.iter().enumerate() {
        for (j, &post) in row.iter().enumerate() {
            out.set_cell(u, j, post);
        }
    }
    out
}

/// Translative map applied pointwise: projects `seq` into `cluster`.
pub fn translate(seq: &ConfigSequence, cluster: &ClusterId) -> Result<ConfigSequence> {
    uniform_level(cluster, seq.params())?;
    let configs: Vec<Configuration> = seq
        .configs()
        .iter()
        .map(|a| translate_config(a, cluster))
        .collect();
    debug_assert!(ConfigSequence::new(configs.clone()).is_ok());
    Ok(ConfigSequence::from_vec_unchecked(configs))
}

/// Swaps posts `q` and `r` for every disk of index `≥ g` (1-based).
pub fn reflect_config(a: &Configuration, g: usize, q: usize, r: usize) -> Configuration {
    let params = a.params();
    let mut out = a.clone();
    if q == r {
        return out;
    }
    for u in 0..params.towers() {
        for j in (g - 1)..params.disks() {
            let post = a.cell(u, j);
            if post == q {
                out.set_cell(u, j, r);
            } else if post == r {
                out.set_cell(u, j, q);
            }
        }
    }
    out
}

/// Reflective map applied pointwise. `seq` must stay inside one cluster of
/// uniform grading `g - 1`, i.e. never move a disk of index below `g`.
pub fn reflect(seq: &ConfigSequence, g: usize, q: usize, r: usize) -> Result<ConfigSequence> {
    let params = seq.params();
    if g == 0 || g > params.disks() {
        return Err(HanoiError::GradingOutOfRange {
            grading: vec![g; params.towers()],
            disks: params.disks(),
        });
    }
    for post in [q, r] {
        if post >= params.posts() {
            return Err(HanoiError::PostOutOfRange {
                post,
                posts: params.posts(),
            });
        }
    }
    let first = seq.first();
    let contained = seq.configs().iter().all(|c| {
        (0..params.towers()).all(|u| (0..g - 1).all(|j| c.cell(u, j) == first.cell(u, j)))
    });
    if !contained {
        return Err(HanoiError::NotContained { level: g - 1 });
    }
    let configs: Vec<Configuration> = seq
        .configs()
        .iter()
        .map(|a| reflect_config(a, g, q, r))
        .collect();
    debug_assert!(ConfigSequence::new(configs.clone()).is_ok());
    Ok(ConfigSequence::from_vec_unchecked(configs))
}

/// `true` iff the reflection swapping `q` and `r` from index `g` leaves `a`
/// unchanged, i.e. `q == r` or no disk of index `≥ g` is on `q` or `r`.
pub fn is_fixed_under_reflection(a: &Configuration, g: usize, q: usize, r: usize) -> bool {
    if q == r {
        return true;
    }
    let params = a.params();
    (0..params.towers()).all(|u| {
        (g.saturating_sub(1)..params.disks()).all(|j| {
            let post = a.cell(u, j);
            post != q && post != r
        })
    })
}

/// A maximal stretch of consecutive configurations in one cluster.
/// `start` and `end` are inclusive, 0-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Run {
    pub cluster: ClusterId,
    pub start: usize,
    pub end: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn same_prefix(a: &Configuration, b: &Configuration, g: usize) -> bool {
    let params = a.params();
    (0..params.towers()).all(|u| (0..g).all(|j| a.cell(u, j) == b.cell(u, j)))
}

/// Splits `seq` into maximal runs sharing a cluster of uniform grading `g`.
pub fn grading_decomposition(seq: &ConfigSequence, g: usize) -> Result<Vec<Run>> {
    let params = seq.params();
    let grading = Grading::uniform(params.towers(), g);
    grading.check(params)?;
    let configs = seq.configs();
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=configs.len() {
        if i == configs.len() || !same_prefix(&configs[start], &configs[i], g) {
            runs.push(Run {
                cluster: cluster_id(&configs[start], &grading)?,
                start,
                end: i - 1,
            });
            start = i;
        }
    }
    Ok(runs)
}
