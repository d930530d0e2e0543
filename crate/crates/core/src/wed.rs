//! Weighted edit distance: full dynamic programming, the single-column step
//! used by the verifier, a best-substring local alignment, and an exhaustive
//! all-match scan that serves as the reference answer for the whole engine.
//!
//! Conventions: sequences are slices of dense symbols; positions in returned
//! spans are 1-based and inclusive, so `(s, t)` denotes the substring from
//! the s-th through the t-th symbol.

use crate::cost::CostModel;
use crate::network::RoadNetwork;
use crate::traj::Symbol;

/// A matching substring `(s, t)` (1-based, inclusive) with its distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchSpan {
    pub s: usize,
    pub t: usize,
    pub value: f64,
}

/// Column of distances against the length-0 prefix of the data side:
/// `col[j]` is the cost of inserting the first `j` query symbols.
pub fn boundary_column(q: &[Symbol], model: &CostModel, network: &RoadNetwork) -> Vec<f64> {
    let mut col = Vec::with_capacity(q.len() + 1);
    let mut acc = 0.0;
    col.push(acc);
    for &sym in q {
        acc += model.ins(sym, network);
        col.push(acc);
    }
    col
}

/// Advance a DP column by one data symbol `p`: `out[j]` becomes the distance
/// between the extended data prefix and the first `j` query symbols.
pub fn step_dp(
    q: &[Symbol],
    p: Symbol,
    prev: &[f64],
    model: &CostModel,
    network: &RoadNetwork,
) -> Vec<f64> {
    debug_assert_eq!(prev.len(), q.len() + 1);
    let mut sub_row = Vec::new();
    let mut out = Vec::with_capacity(prev.len());
    step_dp_into(q, p, prev, model, network, &mut sub_row, &mut out);
    out
}

pub(crate) fn step_dp_into(
    q: &[Symbol],
    p: Symbol,
    prev: &[f64],
    model: &CostModel,
    network: &RoadNetwork,
    sub_row: &mut Vec<f64>,
    out: &mut Vec<f64>,
) {
    model.sub_row(p, q, network, sub_row);
    let del_p = model.del(p, network);
    out.clear();
    out.push(prev[0] + del_p);
    for (j, &qj) in q.iter().enumerate() {
        let diag = prev[j] + sub_row[j];
        let up = prev[j + 1] + del_p;
        let left = out[j] + model.ins(qj, network);
        out.push(diag.min(up).min(left));
    }
}

/// Weighted edit distance between two whole sequences.
pub fn wed(p: &[Symbol], q: &[Symbol], model: &CostModel, network: &RoadNetwork) -> f64 {
    let mut col = boundary_column(q, model, network);
    let mut next = Vec::with_capacity(col.len());
    let mut sub_row = Vec::new();
    for &sym in p {
        step_dp_into(q, sym, &col, model, network, &mut sub_row, &mut next);
        std::mem::swap(&mut col, &mut next);
    }
    *col.last().unwrap()
}

/// Find a nonempty substring of `p` minimizing the distance to `q`, with the
/// 1-based inclusive span and its distance. Ties are broken by scan order:
/// the first minimal end position encountered, preferring the substitution,
/// then insertion, then deletion predecessor.
///
/// Two interleaved recurrences are carried: the unrestricted one (which may
/// realize an empty substring via the free boundary) and one restricted to
/// nonempty substrings. Only the restricted value is reported.
pub fn sw_best_match(
    q: &[Symbol],
    p: &[Symbol],
    model: &CostModel,
    network: &RoadNetwork,
) -> (usize, usize, f64) {
    assert!(!p.is_empty(), "data sequence must be nonempty");
    let n = q.len();

    // Column state at the previous data position; index i = query prefix len.
    let mut d_prev: Vec<f64> = boundary_column(q, model, network);
    let mut kd_prev: Vec<usize> = vec![1; n + 1];
    let mut e_prev: Vec<f64> = vec![f64::INFINITY; n + 1];
    let mut ke_prev: Vec<usize> = vec![0; n + 1];

    let mut d_cur = vec![0.0; n + 1];
    let mut kd_cur = vec![0usize; n + 1];
    let mut e_cur = vec![0.0; n + 1];
    let mut ke_cur = vec![0usize; n + 1];

    let mut best = (0usize, 0usize, f64::INFINITY);
    let mut sub_row = Vec::new();

    for (jm1, &pj) in p.iter().enumerate() {
        let j = jm1 + 1;
        model.sub_row(pj, q, network, &mut sub_row);
        let del_p = model.del(pj, network);

        // Empty substring starting just past j.
        d_cur[0] = 0.0;
        kd_cur[0] = j + 1;
        // Shortest nonempty substring ending at j against the empty query.
        e_cur[0] = del_p;
        ke_cur[0] = j;

        for i in 1..=n {
            let ins_q = model.ins(q[i - 1], network);

            let diag = d_prev[i - 1] + sub_row[i - 1];
            let vert = d_cur[i - 1] + ins_q;
            let horiz = d_prev[i] + del_p;
            if diag <= vert && diag <= horiz {
                d_cur[i] = diag;
                kd_cur[i] = kd_prev[i - 1];
            } else if vert <= horiz {
                d_cur[i] = vert;
                kd_cur[i] = kd_cur[i - 1];
            } else {
                d_cur[i] = horiz;
                kd_cur[i] = kd_prev[i];
            }

            // Nonempty variant: the moves consuming p_j may extend any
            // prefix (the consumption itself makes the substring nonempty);
            // the insertion move must stay within the nonempty recurrence.
            let e_vert = e_cur[i - 1] + ins_q;
            if diag <= e_vert && diag <= horiz {
                e_cur[i] = diag;
                ke_cur[i] = kd_prev[i - 1];
            } else if e_vert <= horiz {
                e_cur[i] = e_vert;
                ke_cur[i] = ke_cur[i - 1];
            } else {
                e_cur[i] = horiz;
                ke_cur[i] = kd_prev[i];
            }
        }

        if e_cur[n] < best.2 {
            best = (ke_cur[n], j, e_cur[n]);
        }

        std::mem::swap(&mut d_prev, &mut d_cur);
        std::mem::swap(&mut kd_prev, &mut kd_cur);
        std::mem::swap(&mut e_prev, &mut e_cur);
        std::mem::swap(&mut ke_prev, &mut ke_cur);
    }
    best
}

/// Every nonempty substring of `p` whose distance to `q` is strictly below
/// `tau`, by direct enumeration: one forward DP per start position. This is
/// the quadratic reference scan the indexed engine is checked against.
pub fn all_matches(
    q: &[Symbol],
    p: &[Symbol],
    model: &CostModel,
    network: &RoadNetwork,
    tau: f64,
) -> Vec<MatchSpan> {
    let mut out = Vec::new();
    if tau <= 0.0 {
        return out;
    }
    let mut col = Vec::new();
    let mut next = Vec::new();
    let mut sub_row = Vec::new();
    for s in 1..=p.len() {
        col.clear();
        col.extend_from_slice(&boundary_column(q, model, network));
        for (off, &sym) in p[s - 1..].iter().enumerate() {
            let t = s + off;
            step_dp_into(q, sym, &col, model, network, &mut sub_row, &mut next);
            std::mem::swap(&mut col, &mut next);
            let value = *col.last().unwrap();
            if value < tau {
                out.push(MatchSpan { s, t, value });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostModel;
    use crate::network::RoadNetwork;
    use crate::traj::Representation;
    use rand::{Rng, SeedableRng};

    fn tiny_net(n: i64) -> RoadNetwork {
        // Fully connected small graph so any symbol sequence is usable.
        let nodes: Vec<(i64, f64, f64)> =
            (0..n).map(|i| (i, i as f64, (i * i % 7) as f64)).collect();
        let mut edges = Vec::new();
        let mut eid = 0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    edges.push((eid, a, b, 1.0 + ((a + b) % 3) as f64));
                    eid += 1;
                }
            }
        }
        RoadNetwork::from_records(&nodes, &edges).unwrap()
    }

    /// Independent full-matrix DP used as the oracle for the column step.
    fn full_matrix(p: &[Symbol], q: &[Symbol], m: &CostModel, net: &RoadNetwork) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; q.len() + 1]; p.len() + 1];
        for j in 1..=q.len() {
            d[0][j] = d[0][j - 1] + m.ins(q[j - 1], net);
        }
        for i in 1..=p.len() {
            d[i][0] = d[i - 1][0] + m.del(p[i - 1], net);
            for j in 1..=q.len() {
                let sub = d[i - 1][j - 1] + m.sub(Some(p[i - 1]), Some(q[j - 1]), net);
                let del = d[i - 1][j] + m.del(p[i - 1], net);
                let ins = d[i][j - 1] + m.ins(q[j - 1], net);
                d[i][j] = sub.min(del).min(ins);
            }
        }
        d
    }

    #[test]
    fn lev_known_value() {
        let net = tiny_net(8);
        let m = CostModel::lev(Representation::Vertex);
        // "BCD" vs "BFD" with B=1, C=2, D=3, F=5.
        assert_eq!(wed(&[1, 2, 3], &[1, 5, 3], &m, &net), 1.0);
        assert_eq!(wed(&[], &[1, 5, 3], &m, &net), 3.0);
        assert_eq!(wed(&[1, 5, 3], &[], &m, &net), 3.0);
    }

    #[test]
    fn wed_of_sequence_with_itself_is_zero() {
        let net = tiny_net(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = CostModel::erp(net.barycenter());
        for _ in 0..20 {
            let len = rng.gen_range(0..10);
            let p: Vec<Symbol> = (0..len).map(|_| rng.gen_range(0..6)).collect();
            assert_eq!(wed(&p, &p, &m, &net), 0.0);
        }
    }

    #[test]
    fn nonnegativity_symmetry_sampled_per_model() {
        let net = tiny_net(6);
        let models = vec![
            CostModel::lev(Representation::Vertex),
            CostModel::edr(1.5).unwrap(),
            CostModel::erp(net.barycenter()),
            CostModel::net_edr(2.0).unwrap(),
            CostModel::net_erp(2.5).unwrap(),
            crate::cost::tests::example_table(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for m in &models {
            let n = m.alphabet_size(&net) as u32;
            for _ in 0..500 {
                let lp = rng.gen_range(0..8);
                let lq = rng.gen_range(0..8);
                let p: Vec<Symbol> = (0..lp).map(|_| rng.gen_range(0..n)).collect();
                let q: Vec<Symbol> = (0..lq).map(|_| rng.gen_range(0..n)).collect();
                let pq = wed(&p, &q, m, &net);
                let qp = wed(&q, &p, m, &net);
                assert!(pq >= 0.0);
                assert!((pq - qp).abs() < 1e-9, "{:?}", m.kind());
            }
        }
        // Edge-symbol model sampled separately.
        let m = CostModel::surs();
        let n = net.edge_count() as u32;
        for _ in 0..500 {
            let lp = rng.gen_range(0..8);
            let lq = rng.gen_range(0..8);
            let p: Vec<Symbol> = (0..lp).map(|_| rng.gen_range(0..n)).collect();
            let q: Vec<Symbol> = (0..lq).map(|_| rng.gen_range(0..n)).collect();
            let pq = wed(&p, &q, &m, &net);
            assert!(pq >= 0.0);
            assert!((pq - wed(&q, &p, &m, &net)).abs() < 1e-9);
        }
    }

    #[test]
    fn step_dp_reproduces_full_matrix_columns() {
        let net = tiny_net(7);
        let models = vec![
            CostModel::lev(Representation::Vertex),
            CostModel::erp(net.barycenter()),
            CostModel::net_erp(2.0).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for m in &models {
            for _ in 0..30 {
                let lp = rng.gen_range(1..9);
                let lq = rng.gen_range(0..9);
                let p: Vec<Symbol> = (0..lp).map(|_| rng.gen_range(0..7)).collect();
                let q: Vec<Symbol> = (0..lq).map(|_| rng.gen_range(0..7)).collect();
                let matrix = full_matrix(&p, &q, m, &net);
                let mut col = boundary_column(&q, m, &net);
                assert_eq!(col, matrix[0]);
                for (i, &sym) in p.iter().enumerate() {
                    col = step_dp(&q, sym, &col, m, &net);
                    for j in 0..=q.len() {
                        assert!((col[j] - matrix[i + 1][j]).abs() < 1e-9);
                    }
                }
                assert!((col.last().unwrap() - wed(&p, &q, m, &net)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_dp_with_empty_query_side() {
        let net = tiny_net(4);
        let m = CostModel::lev(Representation::Vertex);
        let col = step_dp(&[], 2, &[5.0], &m, &net);
        assert_eq!(col, vec![6.0]);
    }

    #[test]
    fn boundary_is_nondecreasing_in_query_length() {
        let net = tiny_net(6);
        let m = CostModel::erp(net.barycenter());
        let q: Vec<Symbol> = vec![0, 3, 1, 5, 2];
        let col = boundary_column(&q, &m, &net);
        for w in col.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn best_match_known_example() {
        let net = tiny_net(8);
        let m = CostModel::lev(Representation::Vertex);
        // P = "ABCDE" (0,1,2,3,4), Q = "BFD" (1,5,3): best substring is
        // "BCD" = positions 2..4 at distance 1.
        let (s, t, v) = sw_best_match(&[1, 5, 3], &[0, 1, 2, 3, 4], &m, &net);
        assert_eq!((s, t), (2, 4));
        assert_eq!(v, 1.0);
    }

    #[test]
    fn exact_containment_scores_zero() {
        let net = tiny_net(8);
        let m = CostModel::lev(Representation::Vertex);
        let (s, t, v) = sw_best_match(&[2, 3], &[0, 1, 2, 3, 4], &m, &net);
        assert_eq!((s, t, v), (3, 4, 0.0));
    }

    #[test]
    fn best_match_value_matches_exhaustive_minimum() {
        let net = tiny_net(6);
        let models = vec![
            CostModel::lev(Representation::Vertex),
            CostModel::edr(1.5).unwrap(),
            CostModel::erp(net.barycenter()),
            CostModel::net_erp(1.5).unwrap(),
            crate::cost::tests::example_table(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for m in &models {
            let n = if m.kind() == crate::cost::CostModelKind::Table {
                4
            } else {
                6
            };
            for _ in 0..40 {
                let lp = rng.gen_range(1..12);
                let lq = rng.gen_range(1..6);
                let p: Vec<Symbol> = (0..lp).map(|_| rng.gen_range(0..n)).collect();
                let q: Vec<Symbol> = (0..lq).map(|_| rng.gen_range(0..n)).collect();
                let (s, t, v) = sw_best_match(&q, &p, m, &net);
                // Exhaustive minimum over nonempty substrings, computed with
                // an independent per-substring distance call.
                let mut expected = f64::INFINITY;
                for a in 1..=p.len() {
                    for b in a..=p.len() {
                        expected = expected.min(wed(&p[a - 1..b], &q, m, &net));
                    }
                }
                assert!((v - expected).abs() < 1e-9, "{:?}", m.kind());
                assert!(s >= 1 && s <= t && t <= p.len());
                assert!((wed(&p[s - 1..t], &q, m, &net) - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_matches_agrees_with_per_substring_enumeration() {
        let net = tiny_net(5);
        let models = vec![
            CostModel::lev(Representation::Vertex),
            CostModel::erp(net.barycenter()),
            crate::cost::tests::example_table(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for m in &models {
            let n = if m.kind() == crate::cost::CostModelKind::Table {
                4
            } else {
                5
            };
            for _ in 0..25 {
                let lp = rng.gen_range(1..=30usize);
                let lq = rng.gen_range(1..6);
                let p: Vec<Symbol> = (0..lp).map(|_| rng.gen_range(0..n)).collect();
                let q: Vec<Symbol> = (0..lq).map(|_| rng.gen_range(0..n)).collect();
                let tau = rng.gen_range(0.5..4.0);
                let got = all_matches(&q, &p, m, &net, tau);
                let mut expected = Vec::new();
                for s in 1..=p.len() {
                    for t in s..=p.len() {
                        let v = wed(&p[s - 1..t], &q, m, &net);
                        if v < tau {
                            expected.push((s, t));
                        }
                    }
                }
                let got_spans: Vec<(usize, usize)> = got.iter().map(|ms| (ms.s, ms.t)).collect();
                let mut sorted = got_spans.clone();
                sorted.sort_unstable();
                let mut expected_sorted = expected.clone();
                expected_sorted.sort_unstable();
                assert_eq!(sorted, expected_sorted, "{:?}", m.kind());
                for ms in &got {
                    assert!((ms.value - wed(&p[ms.s - 1..ms.t], &q, m, &net)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn all_matches_known_example_and_degenerate_tau() {
        let net = tiny_net(4);
        let m = crate::cost::tests::example_table();
        // P = "DABCBA" (3,0,1,2,1,0), Q = "ABC" (0,1,2), tau = 3.
        let p = [3u32, 0, 1, 2, 1, 0];
        let q = [0u32, 1, 2];
        let got = all_matches(&q, &p, &m, &net, 3.0);
        assert!(got
            .iter()
            .any(|ms| ms.s == 2 && ms.t == 4 && ms.value == 0.0));
        assert!(all_matches(&q, &p, &m, &net, 0.0).is_empty());
        assert!(all_matches(&q, &p, &m, &net, -1.0).is_empty());
    }
}
