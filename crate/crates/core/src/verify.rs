//! Candidate verification. Each candidate anchors a data position `j` to a
//! query position `i_q`; the data trajectory is split there and a DP runs
//! outward in both directions, stopping a direction as soon as its column
//! minimum reaches the residual threshold. Columns are cached in one trie
//! per (direction, anchor position), so candidates that share a prefix or
//! suffix around their anchors reuse each other's work.

use std::collections::{BTreeMap, HashMap};

use crate::cost::CostModel;
use crate::error::Result;
use crate::network::RoadNetwork;
use crate::traj::{Symbol, TrajectoryDb};
use crate::wed::{boundary_column, step_dp};

/// A filter hit: trajectory `traj`, data position `j`, query position `i_q`
/// (both 1-based). The symbol at `j` lies in the substitution neighborhood
/// of the query symbol at `i_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub traj: u32,
    pub j: usize,
    pub i_q: usize,
}

/// A verified subtrajectory `s..=t` (1-based, inclusive) of trajectory
/// `traj` whose distance to the query is below the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub traj: u32,
    pub s: usize,
    pub t: usize,
    pub value: f64,
}

/// Verification work counters.
///
/// Accounting: for every candidate, the baseline is the full column count a
/// plain per-candidate DP scan would compute (the trajectory length).
/// Columns actually walked and passing the early-termination bound are
/// `columns_considered`, split into trie hits and fresh column computations;
/// everything else (positions skipped by early termination, the terminal
/// column that tripped the bound, and the anchor position itself) counts as
/// pruned. So `columns_considered + columns_pruned_early` equals the
/// baseline and `step_dp_calls + cache_hits == columns_considered` by
/// construction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyStats {
    pub columns_considered: u64,
    pub columns_pruned_early: u64,
    pub step_dp_calls: u64,
    pub cache_hits: u64,
}

impl VerifyStats {
    fn baseline(&self) -> u64 {
        self.columns_considered + self.columns_pruned_early
    }

    /// Fraction of baseline columns that survived early termination.
    pub fn unpruned_rate(&self) -> f64 {
        ratio(self.columns_considered, self.baseline())
    }

    /// Fraction of surviving columns that had to be computed rather than
    /// served from a trie.
    pub fn cache_miss_rate(&self) -> f64 {
        ratio(self.step_dp_calls, self.columns_considered)
    }

    /// Product of the two rates: fraction of baseline columns computed.
    pub fn total_unpruned_rate(&self) -> f64 {
        ratio(self.step_dp_calls, self.baseline())
    }

    pub fn merge(&mut self, other: &VerifyStats) {
        self.columns_considered += other.columns_considered;
        self.columns_pruned_early += other.columns_pruned_early;
        self.step_dp_calls += other.step_dp_calls;
        self.cache_hits += other.cache_hits;
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Knobs for verification. `residual_tighten` artificially tightens the
/// early-termination threshold; it exists purely as a fault-injection hook
/// for the test harness (a positive value must make the oracle comparison
/// fail) and is zero in normal operation.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub residual_tighten: f64,
}

struct TrieNode {
    column: Vec<f64>,
    min: f64,
    children: Vec<(Symbol, u32)>,
}

/// Column cache for one (direction, anchor position) pair. A node at depth k
/// holds the DP column of the length-k symbol path from the root against
/// this trie's fixed query part (already reversed for the backward
/// direction).
pub struct CacheTrie {
    query_part: Vec<Symbol>,
    nodes: Vec<TrieNode>,
}

impl CacheTrie {
    pub fn new(query_part: Vec<Symbol>, model: &CostModel, network: &RoadNetwork) -> Self {
        let column = boundary_column(&query_part, model, network);
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        CacheTrie {
            query_part,
            nodes: vec![TrieNode {
                column,
                min,
                children: Vec::new(),
            }],
        }
    }

    pub fn query_part(&self) -> &[Symbol] {
        &self.query_part
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn child(&self, node: u32, sym: Symbol) -> Option<u32> {
        self.nodes[node as usize]
            .children
            .iter()
            .find(|&&(s, _)| s == sym)
            .map(|&(_, c)| c)
    }

    fn add_child(&mut self, node: u32, sym: Symbol, column: Vec<f64>) -> u32 {
        let id = self.nodes.len() as u32;
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        self.nodes.push(TrieNode {
            column,
            min,
            children: Vec::new(),
        });
        self.nodes[node as usize].children.push((sym, id));
        id
    }

    /// Recompute every cached column from its symbol path and compare.
    /// Test/diagnostic support for cache soundness.
    pub fn validate(&self, model: &CostModel, network: &RoadNetwork) -> bool {
        let mut stack: Vec<(u32, Vec<f64>)> = vec![(0, self.nodes[0].column.clone())];
        let root = boundary_column(&self.query_part, model, network);
        if self.nodes[0].column != root {
            return false;
        }
        while let Some((node, column)) = stack.pop() {
            for &(sym, child) in &self.nodes[node as usize].children {
                let expected = step_dp(&self.query_part, sym, &column, model, network);
                let stored = &self.nodes[child as usize].column;
                if stored.len() != expected.len()
                    || stored
                        .iter()
                        .zip(&expected)
                        .any(|(a, b)| (a - b).abs() > 1e-9)
                {
                    return false;
                }
                stack.push((child, expected));
            }
        }
        true
    }
}

/// Distances from this trie's query part to every prefix of `part`, walked
/// through the trie: `out[k]` is the distance against the length-k prefix.
/// The walk stops at the first column whose minimum reaches
/// `residual_threshold`; no deeper prefix can recover, because column minima
/// never decrease as the prefix grows.
pub fn all_prefix_wed(
    trie: &mut CacheTrie,
    part: impl ExactSizeIterator<Item = Symbol>,
    residual_threshold: f64,
    model: &CostModel,
    network: &RoadNetwork,
    stats: &mut VerifyStats,
) -> Vec<f64> {
    let total = part.len() as u64;
    let mut out = vec![*trie.nodes[0].column.last().unwrap()];
    if trie.nodes[0].min >= residual_threshold {
        stats.columns_pruned_early += total;
        return out;
    }
    let mut node = 0u32;
    let mut walked = 0u64;
    for sym in part {
        walked += 1;
        let (child, fresh) = match trie.child(node, sym) {
            Some(c) => (c, false),
            None => {
                let column = step_dp(
                    trie.query_part(),
                    sym,
                    &trie.nodes[node as usize].column,
                    model,
                    network,
                );
                (trie.add_child(node, sym, column), true)
            }
        };
        if trie.nodes[child as usize].min >= residual_threshold {
            stats.columns_pruned_early += total - walked + 1;
            return out;
        }
        stats.columns_considered += 1;
        if fresh {
            stats.step_dp_calls += 1;
        } else {
            stats.cache_hits += 1;
        }
        out.push(*trie.nodes[child as usize].column.last().unwrap());
        node = child;
    }
    out
}

/// Verify one candidate: split the trajectory and the query at the anchor,
/// run both directional walks under the residual threshold, and emit every
/// span whose three-part decomposition stays below the full threshold.
#[allow(clippy::too_many_arguments)]
pub fn verify_candidate(
    query: &[Symbol],
    cand: Candidate,
    tau: f64,
    forward: &mut CacheTrie,
    backward: &mut CacheTrie,
    db: &TrajectoryDb,
    model: &CostModel,
    network: &RoadNetwork,
    stats: &mut VerifyStats,
    opts: &VerifyOptions,
) -> Result<Vec<MatchResult>> {
    let traj = db.get(cand.traj)?;
    let p = &traj.symbols;
    debug_assert!(cand.j >= 1 && cand.j <= p.len());
    debug_assert!(cand.i_q >= 1 && cand.i_q <= query.len());

    let anchor_cost = model.sub(Some(query[cand.i_q - 1]), Some(p[cand.j - 1]), network);
    let residual = tau - anchor_cost - opts.residual_tighten;

    // The anchor column itself is never computed by the bidirectional walk.
    stats.columns_pruned_early += 1;

    let back = all_prefix_wed(
        backward,
        p[..cand.j - 1].iter().rev().copied(),
        residual,
        model,
        network,
        stats,
    );
    let fwd = all_prefix_wed(
        forward,
        p[cand.j..].iter().copied(),
        residual,
        model,
        network,
        stats,
    );

    let mut out = Vec::new();
    for (k_b, &vb) in back.iter().enumerate() {
        for (k_f, &vf) in fwd.iter().enumerate() {
            let value = anchor_cost + vb + vf;
            if value < tau {
                out.push(MatchResult {
                    traj: cand.traj,
                    s: cand.j - k_b,
                    t: cand.j + k_f,
                    value,
                });
            }
        }
    }
    Ok(out)
}

/// Verify a candidate set: one forward and one backward trie per distinct
/// anchor position in the query, candidates processed in the given order,
/// results deduplicated by span (keeping the smallest decomposition value,
/// which equals the true distance) and sorted by `(traj, s, t)`.
pub fn verify(
    candidates: &[Candidate],
    query: &[Symbol],
    tau: f64,
    db: &TrajectoryDb,
    model: &CostModel,
    network: &RoadNetwork,
    opts: &VerifyOptions,
) -> Result<(Vec<MatchResult>, VerifyStats)> {
    let mut tries: BTreeMap<usize, (CacheTrie, CacheTrie)> = BTreeMap::new();
    for cand in candidates {
        tries.entry(cand.i_q).or_insert_with(|| {
            let fwd = CacheTrie::new(query[cand.i_q..].to_vec(), model, network);
            let mut rev_prefix: Vec<Symbol> = query[..cand.i_q - 1].to_vec();
            rev_prefix.reverse();
            let back = CacheTrie::new(rev_prefix, model, network);
            (fwd, back)
        });
    }

    let mut stats = VerifyStats::default();
    let mut best: HashMap<(u32, usize, usize), f64> = HashMap::new();
    for &cand in candidates {
        let (fwd, back) = tries.get_mut(&cand.i_q).expect("trie created above");
        for m in verify_candidate(
            query, cand, tau, fwd, back, db, model, network, &mut stats, opts,
        )? {
            best.entry((m.traj, m.s, m.t))
                .and_modify(|v| *v = v.min(m.value))
                .or_insert(m.value);
        }
    }

    let mut results: Vec<MatchResult> = best
        .into_iter()
        .map(|((traj, s, t), value)| MatchResult { traj, s, t, value })
        .collect();
    results.sort_by_key(|a| (a.traj, a.s, a.t));
    Ok((results, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostModel;
    use crate::network::RoadNetwork;
    use crate::traj::{Representation, Trajectory, TrajectoryDb};

    fn clique_net(n: i64) -> RoadNetwork {
        let nodes: Vec<(i64, f64, f64)> = (0..n).map(|i| (i, i as f64, 0.0)).collect();
        let mut edges = Vec::new();
        let mut eid = 0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    edges.push((eid, a, b, 1.0));
                    eid += 1;
                }
            }
        }
        RoadNetwork::from_records(&nodes, &edges).unwrap()
    }

    fn plain_db(seqs: &[(i64, Vec<u32>)], alphabet: usize) -> TrajectoryDb {
        TrajectoryDb::from_parts(
            Representation::Vertex,
            alphabet,
            seqs.iter()
                .map(|(id, symbols)| Trajectory {
                    external_id: *id,
                    symbols: symbols.clone(),
                    timestamps: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn shared_prefix_columns_come_from_cache() {
        let net = clique_net(8);
        let m = CostModel::lev(Representation::Vertex);
        // Forward query part "CDE" = 2,3,4; first walk CDXY, second CDYZ:
        // the second reuses the cached C and D columns.
        let mut trie = CacheTrie::new(vec![2, 3, 4], &m, &net);
        let mut stats = VerifyStats::default();
        let e1 = all_prefix_wed(
            &mut trie,
            [2u32, 3, 5, 6].into_iter(),
            f64::INFINITY,
            &m,
            &net,
            &mut stats,
        );
        assert_eq!(stats.step_dp_calls, 4);
        assert_eq!(stats.cache_hits, 0);
        assert_eq!(e1.len(), 5);
        let e2 = all_prefix_wed(
            &mut trie,
            [2u32, 3, 6, 7].into_iter(),
            f64::INFINITY,
            &m,
            &net,
            &mut stats,
        );
        assert_eq!(stats.cache_hits, 2);
        assert_eq!(stats.step_dp_calls, 6);
        assert_eq!(e2.len(), 5);
        assert!(trie.validate(&m, &net));
    }

    #[test]
    fn unbounded_walk_matches_direct_prefix_distances() {
        use rand::{Rng, SeedableRng};
        let net = clique_net(6);
        let models = vec![
            CostModel::lev(Representation::Vertex),
            CostModel::erp(net.barycenter()),
            crate::cost::tests::example_table(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for m in &models {
            let n = if matches!(m.kind(), crate::cost::CostModelKind::Table) {
                4u32
            } else {
                6
            };
            for _ in 0..20 {
                let q: Vec<u32> = (0..rng.gen_range(0..5))
                    .map(|_| rng.gen_range(0..n))
                    .collect();
                let p: Vec<u32> = (0..rng.gen_range(0..10))
                    .map(|_| rng.gen_range(0..n))
                    .collect();
                let mut trie = CacheTrie::new(q.clone(), m, &net);
                let mut stats = VerifyStats::default();
                let e = all_prefix_wed(
                    &mut trie,
                    p.iter().copied(),
                    f64::INFINITY,
                    m,
                    &net,
                    &mut stats,
                );
                assert_eq!(e.len(), p.len() + 1);
                for k in 0..=p.len() {
                    let direct = crate::wed::wed(&p[..k], &q, m, &net);
                    assert!((e[k] - direct).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn empty_part_returns_boundary_only() {
        let net = clique_net(4);
        let m = CostModel::lev(Representation::Vertex);
        let mut trie = CacheTrie::new(vec![1, 2], &m, &net);
        let mut stats = VerifyStats::default();
        let e = all_prefix_wed(&mut trie, std::iter::empty(), 10.0, &m, &net, &mut stats);
        assert_eq!(e, vec![2.0]);
        assert_eq!(stats, VerifyStats::default());
    }

    #[test]
    fn early_termination_is_safe() {
        // Walk once with a finite threshold and once unbounded: every
        // position the bounded walk skipped must have a prefix distance at
        // or above the residual threshold.
        use rand::{Rng, SeedableRng};
        let net = clique_net(6);
        let m = CostModel::lev(Representation::Vertex);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let q: Vec<u32> = (0..rng.gen_range(1..5))
                .map(|_| rng.gen_range(0..6))
                .collect();
            let p: Vec<u32> = (0..rng.gen_range(1..12))
                .map(|_| rng.gen_range(0..6))
                .collect();
            let residual = rng.gen_range(0.5..3.5);

            let mut bounded_trie = CacheTrie::new(q.clone(), &m, &net);
            let mut bounded_stats = VerifyStats::default();
            let bounded = all_prefix_wed(
                &mut bounded_trie,
                p.iter().copied(),
                residual,
                &m,
                &net,
                &mut bounded_stats,
            );

            let mut full_trie = CacheTrie::new(q.clone(), &m, &net);
            let mut full_stats = VerifyStats::default();
            let full = all_prefix_wed(
                &mut full_trie,
                p.iter().copied(),
                f64::INFINITY,
                &m,
                &net,
                &mut full_stats,
            );

            for k in 0..bounded.len() {
                assert!((bounded[k] - full[k]).abs() < 1e-12);
            }
            for (k, &v) in full.iter().enumerate().skip(bounded.len()) {
                assert!(
                    v >= residual - 1e-12,
                    "pruned prefix {k} has distance {v} below residual {residual}"
                );
            }
            assert_eq!(
                bounded_stats.step_dp_calls + bounded_stats.cache_hits,
                bounded_stats.columns_considered
            );
        }
    }

    #[test]
    fn worked_candidates_verify_to_expected_spans() {
        // Database {BCDBCD, DABCBA, ABABAB} over symbols A=0..D=3 with the
        // 4-symbol cost table, query ABC, threshold 3. The anchor-at-A
        // candidates are exactly the ones a neighborhood filter generates;
        // verification finds the zero-cost span (2,4) and the (2,5) span
        // that pays one trailing deletion.
        let net = clique_net(4);
        let m = crate::cost::tests::example_table();
        let db = plain_db(
            &[
                (1, vec![1, 2, 3, 1, 2, 3]),
                (2, vec![3, 0, 1, 2, 1, 0]),
                (3, vec![0, 1, 0, 1, 0, 1]),
            ],
            4,
        );
        let query = vec![0u32, 1, 2];
        let candidates = vec![
            Candidate {
                traj: 1,
                j: 2,
                i_q: 1,
            },
            Candidate {
                traj: 1,
                j: 6,
                i_q: 1,
            },
            Candidate {
                traj: 2,
                j: 1,
                i_q: 1,
            },
            Candidate {
                traj: 2,
                j: 3,
                i_q: 1,
            },
            Candidate {
                traj: 2,
                j: 5,
                i_q: 1,
            },
        ];
        let (results, stats) = verify(
            &candidates,
            &query,
            3.0,
            &db,
            &m,
            &net,
            &VerifyOptions::default(),
        )
        .unwrap();
        let spans: Vec<(u32, usize, usize)> = results.iter().map(|r| (r.traj, r.s, r.t)).collect();
        assert_eq!(spans, vec![(1, 2, 4), (1, 2, 5)]);
        assert_eq!(results[0].value, 0.0);
        assert_eq!(results[1].value, 1.0);
        // Reported values equal independently computed distances.
        for r in &results {
            let p = &db.get(r.traj).unwrap().symbols;
            let direct = crate::wed::wed(&p[r.s - 1..r.t], &query, &m, &net);
            assert!((r.value - direct).abs() < 1e-9);
        }
        assert_eq!(
            stats.step_dp_calls + stats.cache_hits,
            stats.columns_considered
        );
        // Baseline: every candidate's full trajectory length.
        assert_eq!(stats.columns_considered + stats.columns_pruned_early, 5 * 6);
    }

    #[test]
    fn empty_candidate_set_verifies_to_nothing() {
        let net = clique_net(4);
        let m = CostModel::lev(Representation::Vertex);
        let db = plain_db(&[(1, vec![0, 1])], 4);
        let (results, stats) =
            verify(&[], &[0, 1], 1.0, &db, &m, &net, &VerifyOptions::default()).unwrap();
        assert!(results.is_empty());
        assert_eq!(stats, VerifyStats::default());
    }

    #[test]
    fn anchor_decomposition_finds_all_covered_spans() {
        // Random instances: verifying a full cover of candidates recovers
        // exactly the reference matches.
        use rand::{Rng, SeedableRng};
        let net = clique_net(5);
        let m = CostModel::lev(Representation::Vertex);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let p: Vec<u32> = (0..rng.gen_range(3..14))
                .map(|_| rng.gen_range(0..5))
                .collect();
            let q: Vec<u32> = (0..rng.gen_range(1..5))
                .map(|_| rng.gen_range(0..5))
                .collect();
            // Keep the threshold below the summed escape costs (here |Q|),
            // which is what guarantees the anchor cover is complete.
            let tau = rng.gen_range(0.4..0.95) * q.len() as f64;
            let db = plain_db(&[(1, p.clone())], 5);
            // Cover: anchor every data position against query position 1
            // (unit-cost neighborhoods make every decomposition reachable
            // through matching anchor symbols; use all i_q to be thorough).
            let mut candidates = Vec::new();
            for j in 1..=p.len() {
                for i_q in 1..=q.len() {
                    if p[j - 1] == q[i_q - 1] {
                        candidates.push(Candidate { traj: 0, j, i_q });
                    }
                }
            }
            let (results, _) = verify(
                &candidates,
                &q,
                tau,
                &db,
                &m,
                &net,
                &VerifyOptions::default(),
            )
            .unwrap();
            let expected = crate::wed::all_matches(&q, &p, &m, &net, tau);
            // The candidate cover anchors only equal symbols, which is the
            // neighborhood filter at threshold zero; every reference match
            // must be recovered (soundness of the anchored decomposition).
            let got: std::collections::BTreeSet<(usize, usize)> =
                results.iter().map(|r| (r.s, r.t)).collect();
            let want: std::collections::BTreeSet<(usize, usize)> =
                expected.iter().map(|ms| (ms.s, ms.t)).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn fault_injection_breaks_the_walk() {
        let net = clique_net(4);
        let m = crate::cost::tests::example_table();
        let db = plain_db(&[(2, vec![3, 0, 1, 2, 1, 0])], 4);
        let query = vec![0u32, 1, 2];
        let candidates = vec![Candidate {
            traj: 0,
            j: 2,
            i_q: 1,
        }];
        let healthy = verify(
            &candidates,
            &query,
            3.0,
            &db,
            &m,
            &net,
            &VerifyOptions::default(),
        )
        .unwrap()
        .0;
        let broken = verify(
            &candidates,
            &query,
            3.0,
            &db,
            &m,
            &net,
            &VerifyOptions {
                residual_tighten: 2.5,
            },
        )
        .unwrap()
        .0;
        assert!(broken.len() < healthy.len());
    }
}
