//! Transfer-length reducing rewrites of configuration sequences.
//!
//! Two rewrites are detected and applied at a uniform grading level `g`:
//!
//! * **Excursion removal.** If the sequence leaves a level-`g` cluster and
//!   later comes back, the stretch between is translated into that cluster.
//!   The step leaving the cluster moved a disk of index `≤ g`, which the
//!   translation erases, so the transfer length drops.
//! * **Detour removal.** Three consecutive level-`g` runs `A, C, B` that differ
//!   only in the post of one disk `(v, g)` (`a`, `c`, `b`, pairwise distinct)
//!   describe that disk taking a detour `a → c → b`. When the first
//!   configuration of `A` has no disk of index `≥ g` on `b` or `c`, reflecting
//!   `A` and `C` through the swap of `b` and `c` sends the disk straight to
//!   `b` and deletes the final `c → b` transfer. The mirrored case (the last
//!   configuration of `B` fixed by the swap of `a` and `c`) is handled by
//!   reversing the sequence.
//!
//! [`denoise`] applies both until neither fires at any level.
//!
//! Positions in [`RewriteSite`] are 0-based.

use serde::Serialize;

use crate::cluster::{grading_decomposition, is_fixed_under_reflection, reflect, translate, Run};
use crate::config::{ConfigSequence, Configuration};
use crate::error::{HanoiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteKind {
    /// Excursion removal by translation.
    Excursion,
    /// Detour removal, fixed point at the start of the `A` run.
    DetourForward,
    /// Detour removal, fixed point at the end of the `B` run.
    DetourReversed,
}

/// Posts visited by the detouring disk: `a` (first run), `c` (middle run),
/// `b` (last run), in sequence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DetourPosts {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

/// Inclusive position ranges of the three consecutive runs of a detour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DetourBlocks {
    pub first: (usize, usize),
    pub middle: (usize, usize),
    pub last: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RewriteSite {
    pub kind: RewriteKind,
    pub g: usize,
    /// `(u, v)` with `u < v`. Excursions: the end of the first run and the
    /// start of the returning run. Detours: `(first.start, last.start)` when
    /// forward, `(first.end, last.end)` when reversed.
    pub span: (usize, usize),
    pub posts: Option<DetourPosts>,
    /// 1-based color of the detouring disk.
    pub color: Option<usize>,
    pub blocks: Option<DetourBlocks>,
}

/// Merges consecutive duplicate configurations.
pub fn compact(seq: &ConfigSequence) -> ConfigSequence {
    let mut configs: Vec<Configuration> = seq.configs().to_vec();
    configs.dedup();
    ConfigSequence::from_vec_unchecked(configs)
}

/// Leftmost excursion at level `g`: the earliest run whose cluster recurs
/// later, paired with its last recurrence.
pub fn find_excursion_site(seq: &ConfigSequence, g: usize) -> Result<Option<RewriteSite>> {
    let runs = grading_decomposition(seq, g)?;
    Ok(excursion_in(&runs, g))
}

fn excursion_in(runs: &[Run], g: usize) -> Option<RewriteSite> {
    runs.iter().enumerate().find_map(|(i, run)| {
        let back = runs.iter().rposition(|r| r.cluster == run.cluster)?;
        (back > i).then(|| RewriteSite {
            kind: RewriteKind::Excursion,
            g,
            span: (run.end, runs[back].start),
            posts: None,
            color: None,
            blocks: None,
        })
    })
}

fn check_decrease(before: usize, after: &ConfigSequence, site: &RewriteSite) -> Result<()> {
    if after.transfer_length() >= before {
        return Err(HanoiError::InternalInvariantViolation(format!(
            "{:?} rewrite at g = {} span {:?} did not shorten the sequence ({} -> {})",
            site.kind,
            site.g,
            site.span,
            before,
            after.transfer_length()
        )));
    }
    Ok(())
}

fn revalidate(configs: Vec<Configuration>) -> Result<ConfigSequence> {
    let mut configs = configs;
    configs.dedup();
    ConfigSequence::new(configs).map_err(|e| {
        HanoiError::InternalInvariantViolation(format!("rewrite produced an invalid sequence: {e}"))
    })
}

/// Translates positions `u..=v` into the cluster shared by both ends, then
/// compacts.
pub fn remove_excursion(seq: &ConfigSequence, site: &RewriteSite) -> Result<ConfigSequence> {
    let (u, v) = site.span;
    if site.kind != RewriteKind::Excursion || u >= v || v >= seq.len() {
        return Err(HanoiError::InternalInvariantViolation(format!(
            "not an excursion site: {site:?}"
        )));
    }
    let runs = grading_decomposition(seq, site.g)?;
    let home = runs
        .iter()
        .find(|r| r.start <= u && u <= r.end)
        .map(|r| r.cluster.clone())
        .expect("position inside some run");
    if !home.contains(&seq[v]) {
        return Err(HanoiError::InternalInvariantViolation(format!(
            "excursion ends in different clusters: {site:?}"
        )));
    }
    let stretch = ConfigSequence::from_vec_unchecked(seq.configs()[u..=v].to_vec());
    let projected = translate(&stretch, &home)?;
    let mut configs = seq.configs()[..u].to_vec();
    configs.extend(projected.into_configs());
    configs.extend_from_slice(&seq.configs()[v + 1..]);
    let out = revalidate(configs)?;
    check_decrease(seq.transfer_length(), &out, site)?;
    Ok(out)
}

/// If runs `i, i+1, i+2` differ only in one disk of index `g`, returns that
/// disk's 0-based color and its posts `(a, c, b)`.
fn detour_shape(runs: &[Run], i: usize, g: usize) -> Option<(usize, usize, usize, usize)> {
    let (first, middle, last) = (&runs[i], &runs[i + 1], &runs[i + 2]);
    let t = first.cluster.fixed().len();
    let mut color = None;
    for u in 0..t {
        let rows = [
            &first.cluster.fixed()[u],
            &middle.cluster.fixed()[u],
            &last.cluster.fixed()[u],
        ];
        if rows.iter().any(|r| r[..g - 1] != rows[0][..g - 1]) {
            return None;
        }
        let cells = [rows[0][g - 1], rows[1][g - 1], rows[2][g - 1]];
        if cells[0] != cells[1] || cells[1] != cells[2] {
            if color.is_some() {
                return None;
            }
            color = Some((u, cells));
        }
    }
    let (u, [a, c, b]) = color?;
    (a != c && c != b && a != b).then_some((u, a, c, b))
}

fn forward_site(seq: &ConfigSequence, runs: &[Run], i: usize, g: usize) -> Option<RewriteSite> {
    let (color, a, c, b) = detour_shape(runs, i, g)?;
    let (first, middle, last) = (&runs[i], &runs[i + 1], &runs[i + 2]);
    is_fixed_under_reflection(&seq[first.start], g, b, c).then(|| RewriteSite {
        kind: RewriteKind::DetourForward,
        g,
        span: (first.start, last.start),
        posts: Some(DetourPosts { a, b, c }),
        color: Some(color + 1),
        blocks: Some(DetourBlocks {
            first: (first.start, first.end),
            middle: (middle.start, middle.end),
            last: (last.start, last.end),
        }),
    })
}

/// Maps a forward site found on the reversed sequence back to the original
/// orientation.
fn unreverse(site: RewriteSite, len: usize) -> RewriteSite {
    let flip = |(s, e): (usize, usize)| (len - 1 - e, len - 1 - s);
    let posts = site.posts.expect("detour site");
    let blocks = site.blocks.expect("detour site");
    let first = flip(blocks.last);
    let last = flip(blocks.first);
    RewriteSite {
        kind: RewriteKind::DetourReversed,
        g: site.g,
        span: (first.1, last.1),
        posts: Some(DetourPosts {
            a: posts.b,
            b: posts.a,
            c: posts.c,
        }),
        color: site.color,
        blocks: Some(DetourBlocks {
            first,
            middle: flip(blocks.middle),
            last,
        }),
    }
}

/// Leftmost detour at level `g`, forward before reversed at equal position.
///
/// Meant to be called once [`find_excursion_site`] finds nothing at `g`; on a
/// sequence with excursions it still reports detours among consecutive runs.
pub fn find_detour_site(seq: &ConfigSequence, g: usize) -> Result<Option<RewriteSite>> {
    if g == 0 {
        return Ok(None);
    }
    let runs = grading_decomposition(seq, g)?;
    if runs.len() < 3 {
        return Ok(None);
    }
    let reversed = seq.reversed();
    let reversed_runs = grading_decomposition(&reversed, g)?;
    let count = runs.len();
    for i in 0..count - 2 {
        if let Some(site) = forward_site(seq, &runs, i, g) {
            return Ok(Some(site));
        }
        // Runs i..i+2 appear as runs (count-3-i)..(count-1-i) in the reversal.
        if let Some(site) = forward_site(&reversed, &reversed_runs, count - 3 - i, g) {
            return Ok(Some(unreverse(site, seq.len())));
        }
    }
    Ok(None)
}

fn apply_forward_detour(seq: &ConfigSequence, site: &RewriteSite) -> Result<ConfigSequence> {
    let (posts, blocks) = match (site.posts, site.blocks) {
        (Some(p), Some(b)) => (p, b),
        _ => {
            return Err(HanoiError::InternalInvariantViolation(format!(
                "detour site without posts: {site:?}"
            )))
        }
    };
    let (start, stop) = (blocks.first.0, blocks.last.0);
    let head = ConfigSequence::from_vec_unchecked(seq.configs()[start..stop].to_vec());
    let mirrored = reflect(&head, site.g, posts.b, posts.c)?;
    let mut configs = seq.configs()[..start].to_vec();
    configs.extend(mirrored.into_configs());
    configs.extend_from_slice(&seq.configs()[stop..]);
    revalidate(configs)
}

fn reverse_site(site: &RewriteSite, len: usize) -> RewriteSite {
    let flip = |(s, e): (usize, usize)| (len - 1 - e, len - 1 - s);
    let posts = site.posts.expect("detour site");
    let blocks = site.blocks.expect("detour site");
    let first = flip(blocks.last);
    let last = flip(blocks.first);
    RewriteSite {
        kind: RewriteKind::DetourForward,
        g: site.g,
        span: (first.0, last.0),
        posts: Some(DetourPosts {
            a: posts.b,
            b: posts.a,
            c: posts.c,
        }),
        color: site.color,
        blocks: Some(DetourBlocks {
            first,
            middle: flip(blocks.middle),
            last,
        }),
    }
}

/// Reflects the detour runs so the disk goes straight to its final post,
/// then compacts.
pub fn remove_detour(seq: &ConfigSequence, site: &RewriteSite) -> Result<ConfigSequence> {
    let out = match site.kind {
        RewriteKind::DetourForward => apply_forward_detour(seq, site)?,
        RewriteKind::DetourReversed => {
            let mirrored = reverse_site(site, seq.len());
            apply_forward_detour(&seq.reversed(), &mirrored)?.reversed()
        }
        RewriteKind::Excursion => {
            return Err(HanoiError::InternalInvariantViolation(format!(
                "not a detour site: {site:?}"
            )))
        }
    };
    check_decrease(seq.transfer_length(), &out, site)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewriteRecord {
    pub site: RewriteSite,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DenoiseReport {
    pub rewrites: Vec<RewriteRecord>,
    pub initial_sequence_length: usize,
    pub final_sequence_length: usize,
    pub initial_transfer_length: usize,
    pub final_transfer_length: usize,
    /// Full sweeps over `g = 1..=n`, including the final quiet one.
    pub passes: usize,
    /// Rewrites applied at each level; index 0 is `g = 1`.
    pub rewrites_per_level: Vec<usize>,
}

impl DenoiseReport {
    pub fn is_empty(&self) -> bool {
        self.rewrites.is_empty()
    }

    /// One JSON object per rewrite:
    /// `{"kind", "g", "span":[u,v], "posts":{"a","b","c"}|null, "before", "after"}`.
    pub fn to_json_lines(&self) -> String {
        self.rewrites
            .iter()
            .map(|r| {
                let line = serde_json::json!({
                    "kind": r.site.kind,
                    "g": r.site.g,
                    "span": [r.site.span.0, r.site.span.1],
                    "posts": r.site.posts,
                    "before": r.before,
                    "after": r.after,
                });
                format!("{line}\n")
            })
            .collect()
    }
}

/// Runs both rewrites to exhaustion.
///
/// Each sweep walks `g = 1..=n`; at each level the leftmost excursion is
/// removed first, otherwise the leftmost detour, until neither exists. Sweeps
/// repeat until one changes nothing. Every rewrite strictly lowers the
/// transfer length, so this terminates.
pub fn denoise(seq: &ConfigSequence) -> Result<(ConfigSequence, DenoiseReport)> {
    let n = seq.params().disks();
    let mut report = DenoiseReport {
        initial_sequence_length: seq.len(),
        initial_transfer_length: seq.transfer_length(),
        rewrites_per_level: vec![0; n],
        ..DenoiseReport::default()
    };
    let mut current = compact(seq);
    loop {
        report.passes += 1;
        let mut changed = false;
        for g in 1..=n {
            loop {
                let before = current.transfer_length();
                let next = if let Some(site) = find_excursion_site(&current, g)? {
                    Some((remove_excursion(&current, &site)?, site))
                } else if let Some(site) = find_detour_site(&current, g)? {
                    Some((remove_detour(&current, &site)?, site))
                } else {
                    None
                };
                let Some((rewritten, site)) = next else { break };
                current = rewritten;
                report.rewrites.push(RewriteRecord {
                    site,
                    before,
                    after: current.transfer_length(),
                });
                report.rewrites_per_level[g - 1] += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    report.final_sequence_length = current.len();
    report.final_transfer_length = current.transfer_length();
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn seq(lines: &[&str], p: usize) -> ConfigSequence {
        ConfigSequence::new(lines.iter().map(|l| parse_config(l, p).unwrap()).collect()).unwrap()
    }

    const WORKED: [&str; 5] = ["0 0", "0 1", "2 1", "2 0", "1 0"];

    #[test]
    fn compact_examples() {
        assert_eq!(compact(&seq(&["0", "0", "1"], 3)), seq(&["0", "1"], 3));
        assert_eq!(compact(&seq(&["0"], 3)), seq(&["0"], 3));
        let s = seq(&["0", "1", "1", "0"], 3);
        let c = compact(&s);
        assert_eq!(c, seq(&["0", "1", "0"], 3));
        assert_eq!(c.transfer_length(), s.transfer_length());
    }

    #[test]
    fn excursion_detection() {
        // Runs at g = 1: 0 (0..1), 1 (2), 0 (3..4), 2 (5).
        let s = seq(&["0 2", "0 2", "1 2", "0 2", "0 1", "2 1"], 3);
        let site = find_excursion_site(&s, 1).unwrap().unwrap();
        assert_eq!(site.span, (1, 3));

        let acyclic = seq(&WORKED, 3);
        assert_eq!(find_excursion_site(&acyclic, 1).unwrap(), None);
        assert_eq!(
            find_excursion_site(&seq(&["0 1", "0 1"], 3), 1).unwrap(),
            None
        );
    }

    #[test]
    fn excursion_examples() {
        let s = seq(&["0 2", "1 2", "0 2"], 3);
        let site = find_excursion_site(&s, 1).unwrap().unwrap();
        let out = remove_excursion(&s, &site).unwrap();
        assert_eq!(out, seq(&["0 2"], 3));
        assert_eq!((s.transfer_length(), out.transfer_length()), (2, 0));

        let s = seq(&["0 0", "0 1", "2 1", "0 1"], 3);
        let site = find_excursion_site(&s, 1).unwrap().unwrap();
        assert_eq!(site.span, (1, 3));
        let out = remove_excursion(&s, &site).unwrap();
        assert_eq!(out, seq(&["0 0", "0 1"], 3));
        assert_eq!((s.transfer_length(), out.transfer_length()), (3, 1));
    }

    #[test]
    fn excursion_keeps_free_moves() {
        // Disk 1 wanders off while disk 2 moves 1 -> 2; the disk-2 move survives.
        let s = seq(&["0 1", "3 1", "3 2", "0 2"], 4);
        let site = find_excursion_site(&s, 1).unwrap().unwrap();
        let out = remove_excursion(&s, &site).unwrap();
        assert_eq!(out, seq(&["0 1", "0 2"], 4));
    }

    #[test]
    fn detour_forward_example() {
        let s = seq(&WORKED, 3);
        let site = find_detour_site(&s, 1).unwrap().unwrap();
        assert_eq!(site.kind, RewriteKind::DetourForward);
        assert_eq!(site.posts, Some(DetourPosts { a: 0, b: 1, c: 2 }));
        assert_eq!(
            site.blocks,
            Some(DetourBlocks {
                first: (0, 1),
                middle: (2, 3),
                last: (4, 4)
            })
        );
        assert_eq!(site.span, (0, 4));
        let out = remove_detour(&s, &site).unwrap();
        assert_eq!(out, seq(&["0 0", "0 2", "1 2", "1 0"], 3));
        assert_eq!((s.transfer_length(), out.transfer_length()), (4, 3));
    }

    #[test]
    fn detour_reversed_example() {
        let s = seq(&WORKED, 3).reversed();
        let site = find_detour_site(&s, 1).unwrap().unwrap();
        assert_eq!(site.kind, RewriteKind::DetourReversed);
        assert_eq!(site.posts, Some(DetourPosts { a: 1, b: 0, c: 2 }));
        assert_eq!(
            site.blocks,
            Some(DetourBlocks {
                first: (0, 0),
                middle: (1, 2),
                last: (3, 4)
            })
        );
        let out = remove_detour(&s, &site).unwrap();
        assert_eq!(out, seq(&["0 0", "0 2", "1 2", "1 0"], 3).reversed());
    }

    #[test]
    fn detour_needs_fixed_point() {
        // Disk 2 sits on b = 1 at the start and on a = 0 at the end.
        let s = seq(&["0 1", "2 1", "2 0", "1 0"], 3);
        let runs = grading_decomposition(&s, 1).unwrap();
        assert_eq!(runs.len(), 3);
        assert_eq!(find_detour_site(&s, 1).unwrap(), None);
    }

    #[test]
    fn denoise_worked_example() {
        let s = seq(&WORKED, 3);
        let (out, report) = denoise(&s).unwrap();
        assert_eq!(out.transfer_length(), 3);
        assert_eq!(out.first(), s.first());
        assert_eq!(out.last(), s.last());
        assert_eq!(report.rewrites.len(), 1);
        assert_eq!(report.rewrites[0].site.kind, RewriteKind::DetourForward);
        assert_eq!(
            (report.rewrites[0].before, report.rewrites[0].after),
            (4, 3)
        );
        assert_eq!(report.rewrites_per_level, vec![1, 0]);

        let (again, second) = denoise(&out).unwrap();
        assert_eq!(again, out);
        assert!(second.is_empty());
    }

    #[test]
    fn denoise_constant_sequence() {
        let s = seq(&["0 1", "0 1", "0 1"], 3);
        let (out, report) = denoise(&s).unwrap();
        assert_eq!(out, seq(&["0 1"], 3));
        assert!(report.is_empty());
        assert_eq!(report.final_transfer_length, 0);
    }

    #[test]
    fn report_json_lines() {
        let (_, report) = denoise(&seq(&WORKED, 3)).unwrap();
        assert_eq!(
            report.to_json_lines(),
            "{\"after\":3,\"before\":4,\"g\":1,\"kind\":\"detour_forward\",\"posts\":{\"a\":0,\"b\":1,\"c\":2},\"span\":[0,4]}\n"
        );
    }
}
