//! Query engine: resolve the threshold and neighborhood parameters, choose
//! the anchor subsequence, generate candidates from the inverted index,
//! apply temporal pre-filters, verify, apply the exact temporal condition,
//! and return deduplicated, ordered matches with instrumentation.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cost::{default_eta, CostModel, CostModelKind};
use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::index::{IndexOrdering, InvertedIndex};
use crate::mincand::{solve_approx, SelectionItem, TauSubsequence};
use crate::network::RoadNetwork;
use crate::traj::{Symbol, TrajectoryDb};
use crate::verify::{verify, Candidate, MatchResult, VerifyOptions, VerifyStats};
use crate::wed::all_matches;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Absolute(f64),
    /// Resolved as `ratio` times the summed escape costs of the query.
    Ratio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalConstraint {
    /// The matched span's time interval must lie inside the given interval.
    ContainedIn(f64, f64),
    /// The matched span's time interval must intersect the given interval.
    Overlaps(f64, f64),
}

impl TemporalConstraint {
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            TemporalConstraint::ContainedIn(a, b) | TemporalConstraint::Overlaps(a, b) => (a, b),
        }
    }

    pub fn accepts(&self, span: (f64, f64)) -> bool {
        match *self {
            TemporalConstraint::ContainedIn(lo, hi) => span.0 >= lo && span.1 <= hi,
            TemporalConstraint::Overlaps(lo, hi) => span.0 <= hi && span.1 >= lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSetting {
    /// Model-specific default, escalated to `tau / |Q|` if the default
    /// leaves no feasible anchor subsequence.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct Query {
    pub symbols: Vec<Symbol>,
    pub threshold: Threshold,
    pub temporal: Option<TemporalConstraint>,
}

#[derive(Debug, Clone, Default)]
pub struct QueryStats {
    pub tau: f64,
    pub eta: f64,
    pub chosen: Vec<(Symbol, usize)>,
    /// Candidate count before temporal pre-filtering; equals the selection
    /// objective by construction of the index.
    pub candidates_generated: u64,
    pub candidates_verified: u64,
    pub verify: VerifyStats,
    pub selection_time: Duration,
    pub lookup_time: Duration,
    pub verify_time: Duration,
}

#[derive(Debug, Clone)]
pub struct QueryResult {
    pub matches: Vec<MatchResult>,
    pub stats: QueryStats,
}

pub struct Engine {
    network: Arc<RoadNetwork>,
    db: Arc<TrajectoryDb>,
    index: Arc<InvertedIndex>,
    model: CostModel,
    eta: EtaSetting,
    verify_opts: VerifyOptions,
}

/// Per-query resolved state shared by the indexed search and the reference
/// scan: the effective model (with its neighborhood threshold), the absolute
/// threshold, and the per-position selection items.
struct Resolved {
    model: CostModel,
    tau: f64,
    items: Vec<SelectionItem>,
    neighborhoods: HashMap<Symbol, Vec<Symbol>>,
}

impl Engine {
    pub fn new(
        network: Arc<RoadNetwork>,
        db: Arc<TrajectoryDb>,
        index: Arc<InvertedIndex>,
        model: CostModel,
        eta: EtaSetting,
    ) -> Result<Self> {
        model.check_representation(db.representation())?;
        if index.representation() != db.representation() {
            return Err(Error::Representation(format!(
                "index uses {} representation, database uses {}",
                index.representation(),
                db.representation()
            )));
        }
        if index.alphabet_size() != db.alphabet_size()
            || model.alphabet_size(&network) != db.alphabet_size()
        {
            return Err(Error::Representation(format!(
                "alphabet sizes disagree: model {}, database {}, index {}",
                model.alphabet_size(&network),
                db.alphabet_size(),
                index.alphabet_size()
            )));
        }
        Ok(Engine {
            network,
            db,
            index,
            model,
            eta,
            verify_opts: VerifyOptions::default(),
        })
    }

    /// Replace verification knobs (fault injection for the test harness).
    pub fn with_verify_options(mut self, opts: VerifyOptions) -> Self {
        self.verify_opts = opts;
        self
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn db(&self) -> &TrajectoryDb {
        &self.db
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    fn validate_symbols(&self, symbols: &[Symbol]) -> Result<()> {
        let n = self.db.alphabet_size() as u32;
        if let Some(&bad) = symbols.iter().find(|&&s| s >= n) {
            return Err(Error::UnknownSymbol(bad as i64));
        }
        Ok(())
    }

    fn items_under(
        &self,
        model: &CostModel,
        symbols: &[Symbol],
    ) -> (Vec<SelectionItem>, HashMap<Symbol, Vec<Symbol>>) {
        let mut neighborhoods: HashMap<Symbol, Vec<Symbol>> = HashMap::new();
        let mut escapes: HashMap<Symbol, f64> = HashMap::new();
        let mut items = Vec::with_capacity(symbols.len());
        for (i, &sym) in symbols.iter().enumerate() {
            let nb = neighborhoods
                .entry(sym)
                .or_insert_with(|| model.neighbors(sym, &self.network));
            let weight: u64 = nb.iter().map(|&b| self.index.frequency(b)).sum();
            let value = *escapes
                .entry(sym)
                .or_insert_with(|| model.escape_cost(sym, &self.network));
            items.push(SelectionItem {
                symbol: sym,
                position: i + 1,
                value,
                weight,
            });
        }
        (items, neighborhoods)
    }

    /// Resolve the neighborhood threshold and the absolute distance
    /// threshold for a query. With an automatic neighborhood threshold and
    /// an absolute distance threshold, an infeasible default escalates to
    /// `tau / |Q|`, which restores feasibility whenever deletion costs allow
    /// it; a fixed threshold fails fast instead.
    fn resolve(&self, query: &Query) -> Result<Resolved> {
        self.validate_symbols(&query.symbols)?;
        let base_eta = match self.eta {
            EtaSetting::Fixed(e) => e,
            EtaSetting::Auto => default_eta(self.model.kind(), &self.network),
        };
        let model = self.model.clone().with_eta(base_eta)?;
        let (items, neighborhoods) = self.items_under(&model, &query.symbols);
        let escape_total: f64 = items.iter().map(|it| it.value).sum();

        let tau = match query.threshold {
            Threshold::Absolute(t) => t,
            Threshold::Ratio(r) => {
                if !(0.0..=1.0).contains(&r) || r == 0.0 {
                    return Err(Error::Infeasible(format!(
                        "threshold ratio {r} must lie in (0, 1]"
                    )));
                }
                r * escape_total
            }
        };
        if tau <= 0.0 {
            return Err(Error::Infeasible(format!(
                "threshold {tau} must be positive"
            )));
        }
        let gap_total: f64 = query
            .symbols
            .iter()
            .map(|&s| model.ins(s, &self.network))
            .sum();
        if gap_total < tau {
            return Err(Error::Infeasible(format!(
                "the empty subtrajectory would match: total insertion cost {gap_total} \
                 is below the threshold {tau}"
            )));
        }

        if escape_total >= tau {
            return Ok(Resolved {
                model,
                tau,
                items,
                neighborhoods,
            });
        }

        // Infeasible under the configured neighborhood threshold.
        let guarantee = tau / query.symbols.len() as f64;
        if self.eta == EtaSetting::Auto
            && matches!(
                self.model.kind(),
                CostModelKind::Erp | CostModelKind::NetErp
            )
        {
            let model = self.model.clone().with_eta(guarantee)?;
            let (items, neighborhoods) = self.items_under(&model, &query.symbols);
            let escape_total: f64 = items.iter().map(|it| it.value).sum();
            if escape_total >= tau {
                return Ok(Resolved {
                    model,
                    tau,
                    items,
                    neighborhoods,
                });
            }
        }
        Err(Error::Infeasible(format!(
            "total escape cost {escape_total} under neighborhood threshold {} is below the \
             distance threshold {tau}; raise the neighborhood threshold toward tau/|Q| = {guarantee}",
            model.eta(),
        )))
    }

    fn temporal_prefilter(&self, constraint: &TemporalConstraint, traj: u32) -> bool {
        // Full-span intersection check: safe for both constraint types.
        // Trajectories without timestamps are exempt from temporal pruning.
        let (lo, hi) = constraint.interval();
        match self.db.trajectories()[traj as usize].time_span() {
            Some((a, b)) => a <= hi && b >= lo,
            None => true,
        }
    }

    fn temporal_postfilter(&self, constraint: &TemporalConstraint, m: &MatchResult) -> bool {
        let traj = &self.db.trajectories()[m.traj as usize];
        match traj.span_interval(self.db.representation(), m.s, m.t) {
            Some(span) => constraint.accepts(span),
            None => true,
        }
    }

    fn generate_candidates(
        &self,
        selection: &TauSubsequence,
        neighborhoods: &HashMap<Symbol, Vec<Symbol>>,
        temporal: Option<&TemporalConstraint>,
    ) -> Result<Vec<Candidate>> {
        let mut out = Vec::new();
        for &(sym, pos) in &selection.chosen {
            let nb = &neighborhoods[&sym];
            for &b in nb {
                match temporal {
                    Some(c) if self.index.ordering() == IndexOrdering::ByDeparture => {
                        let (lo, hi) = c.interval();
                        for p in self.index.lookup_temporal(b, lo, hi)? {
                            out.push(Candidate {
                                traj: p.traj,
                                j: p.pos as usize,
                                i_q: pos,
                            });
                        }
                    }
                    Some(c) => {
                        for p in self.index.lookup(b) {
                            if self.temporal_prefilter(c, p.traj) {
                                out.push(Candidate {
                                    traj: p.traj,
                                    j: p.pos as usize,
                                    i_q: pos,
                                });
                            }
                        }
                    }
                    None => {
                        for p in self.index.lookup(b) {
                            out.push(Candidate {
                                traj: p.traj,
                                j: p.pos as usize,
                                i_q: pos,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Indexed search. Exact: returns precisely the subtrajectories whose
    /// distance to the query is below the threshold, subject to the temporal
    /// constraint if one is given.
    pub fn search(&self, query: &Query) -> Result<QueryResult> {
        let resolved = self.resolve(query)?;

        let t0 = Instant::now();
        let selection = solve_approx(&resolved.items, resolved.tau)?;
        let selection_time = t0.elapsed();

        let t1 = Instant::now();
        let candidates =
            self.generate_candidates(&selection, &resolved.neighborhoods, query.temporal.as_ref())?;
        let lookup_time = t1.elapsed();

        // Pre-temporal candidate total: by index completeness this equals
        // the summed posting counts of the chosen neighborhoods.
        let candidates_generated: u64 = selection
            .chosen
            .iter()
            .map(|&(sym, _)| {
                resolved.neighborhoods[&sym]
                    .iter()
                    .map(|&b| self.index.frequency(b))
                    .sum::<u64>()
            })
            .sum();

        let t2 = Instant::now();
        let (mut matches, verify_stats) = verify(
            &candidates,
            &query.symbols,
            resolved.tau,
            &self.db,
            &resolved.model,
            &self.network,
            &self.verify_opts,
        )?;
        if let Some(c) = &query.temporal {
            matches.retain(|m| self.temporal_postfilter(c, m));
        }
        let verify_time = t2.elapsed();

        Ok(QueryResult {
            matches,
            stats: QueryStats {
                tau: resolved.tau,
                eta: resolved.model.eta(),
                chosen: selection.chosen,
                candidates_generated,
                candidates_verified: candidates.len() as u64,
                verify: verify_stats,
                selection_time,
                lookup_time,
                verify_time,
            },
        })
    }

    /// Reference answer: enumerate every subtrajectory of every trajectory
    /// by direct dynamic programming, then apply the temporal condition.
    /// Ground truth for the indexed search.
    pub fn plain_sw_scan(&self, query: &Query, mode: ExecMode) -> Result<QueryResult> {
        let resolved = self.resolve(query)?;
        let t0 = Instant::now();
        let per_traj: Vec<Vec<MatchResult>> = crate::exec::map_range(self.db.len(), mode, |i| {
            let traj = &self.db.trajectories()[i];
            all_matches(
                &query.symbols,
                &traj.symbols,
                &resolved.model,
                &self.network,
                resolved.tau,
            )
            .into_iter()
            .map(|ms| MatchResult {
                traj: i as u32,
                s: ms.s,
                t: ms.t,
                value: ms.value,
            })
            .collect()
        });
        let mut matches: Vec<MatchResult> = per_traj.into_iter().flatten().collect();
        if let Some(c) = &query.temporal {
            matches.retain(|m| self.temporal_postfilter(c, m));
        }
        matches.sort_by_key(|a| (a.traj, a.s, a.t));
        let verify_time = t0.elapsed();
        Ok(QueryResult {
            matches,
            stats: QueryStats {
                tau: resolved.tau,
                eta: resolved.model.eta(),
                verify_time,
                ..QueryStats::default()
            },
        })
    }

    /// The candidate triples the filter would hand to verification, before
    /// any temporal pruning. Exposed for diagnostics and the test harness.
    pub fn candidate_set(&self, query: &Query) -> Result<Vec<Candidate>> {
        let resolved = self.resolve(query)?;
        let selection = solve_approx(&resolved.items, resolved.tau)?;
        self.generate_candidates(&selection, &resolved.neighborhoods, None)
    }

    /// Size of the pre-temporal candidate set.
    pub fn candidate_count(&self, query: &Query) -> Result<u64> {
        Ok(self.candidate_set(query)?.len() as u64)
    }

    /// Run a batch of queries, results in input order.
    pub fn run_batch(&self, queries: &[Query], mode: ExecMode) -> Vec<Result<QueryResult>> {
        map_collect(queries, mode, |q| self.search(q))
    }
}
