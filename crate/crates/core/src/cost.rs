//! Edit-operation cost models: the substitution/insertion/deletion triple,
//! substitution neighborhoods, and per-symbol escape costs for each of the
//! supported distance instances.
//!
//! Six instances are built in (unit-cost, spatial threshold, spatial
//! real-penalty, their network-distance variants, and unshared-road-weight),
//! plus an explicit cost-table instance used for small worked examples and
//! tests. All models share the same contract: `sub` is nonnegative and
//! symmetric with zero diagonal, and insertion/deletion cost equals
//! substitution against the empty symbol.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::network::{RoadNetwork, VertexId};
use crate::traj::{Representation, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostModelKind {
    Lev,
    Edr,
    Erp,
    NetEdr,
    NetErp,
    Surs,
    Table,
}

impl std::fmt::Display for CostModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CostModelKind::Lev => "lev",
            CostModelKind::Edr => "edr",
            CostModelKind::Erp => "erp",
            CostModelKind::NetEdr => "netedr",
            CostModelKind::NetErp => "neterp",
            CostModelKind::Surs => "surs",
            CostModelKind::Table => "table",
        };
        write!(f, "{s}")
    }
}

impl CostModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lev" => Ok(CostModelKind::Lev),
            "edr" => Ok(CostModelKind::Edr),
            "erp" => Ok(CostModelKind::Erp),
            "netedr" => Ok(CostModelKind::NetEdr),
            "neterp" => Ok(CostModelKind::NetErp),
            "surs" => Ok(CostModelKind::Surs),
            other => Err(Error::CostModel(format!("unknown cost model {other:?}"))),
        }
    }

    pub fn all_standard() -> [CostModelKind; 6] {
        [
            CostModelKind::Lev,
            CostModelKind::Edr,
            CostModelKind::Erp,
            CostModelKind::NetEdr,
            CostModelKind::NetErp,
            CostModelKind::Surs,
        ]
    }
}

/// Explicit cost matrix over a small alphabet: `sub[a][b]` plus a deletion
/// column. Validated for symmetry, zero diagonal, and nonnegativity.
#[derive(Debug, Clone)]
pub struct CostTable {
    size: usize,
    sub: Vec<f64>,
    del: Vec<f64>,
}

impl CostTable {
    pub fn new(sub_rows: Vec<Vec<f64>>, del: Vec<f64>) -> Result<Self> {
        let size = sub_rows.len();
        if del.len() != size {
            return Err(Error::CostModel(
                "deletion column length does not match matrix size".into(),
            ));
        }
        let mut sub = Vec::with_capacity(size * size);
        for row in &sub_rows {
            if row.len() != size {
                return Err(Error::CostModel("cost matrix is not square".into()));
            }
            sub.extend_from_slice(row);
        }
        for a in 0..size {
            if sub[a * size + a] != 0.0 {
                return Err(Error::CostModel(format!("sub({a},{a}) must be 0")));
            }
            if del[a] < 0.0 {
                return Err(Error::CostModel(format!("del({a}) must be nonnegative")));
            }
            for b in 0..size {
                let v = sub[a * size + b];
                if v < 0.0 {
                    return Err(Error::CostModel(format!(
                        "sub({a},{b}) must be nonnegative"
                    )));
                }
                if (v - sub[b * size + a]).abs() > 0.0 {
                    return Err(Error::CostModel(format!("sub({a},{b}) must be symmetric")));
                }
            }
        }
        Ok(CostTable { size, sub, del })
    }

    fn sub(&self, a: usize, b: usize) -> f64 {
        self.sub[a * self.size + b]
    }
}

/// A fully configured cost model. Immutable; all operations are pure given
/// the network and safe for concurrent use.
#[derive(Debug, Clone)]
pub struct CostModel {
    kind: CostModelKind,
    eta: f64,
    epsilon: f64,
    reference: (f64, f64),
    net_del: f64,
    table: Option<Arc<CostTable>>,
    representation: Representation,
}

impl CostModel {
    pub fn lev(representation: Representation) -> Self {
        CostModel {
            kind: CostModelKind::Lev,
            eta: 0.0,
            epsilon: 0.0,
            reference: (0.0, 0.0),
            net_del: 0.0,
            table: None,
            representation,
        }
    }

    /// Spatial threshold model: substitution is free within Euclidean
    /// distance `epsilon`, unit otherwise; unit insert/delete.
    pub fn edr(epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::CostModel(
                "matching threshold must be positive".into(),
            ));
        }
        Ok(CostModel {
            kind: CostModelKind::Edr,
            eta: 0.0,
            epsilon,
            reference: (0.0, 0.0),
            net_del: 0.0,
            table: None,
            representation: Representation::Vertex,
        })
    }

    /// Real-penalty spatial model: substitution costs the Euclidean distance,
    /// insert/delete cost the distance to a fixed reference point.
    pub fn erp(reference: (f64, f64)) -> Self {
        CostModel {
            kind: CostModelKind::Erp,
            eta: 0.0,
            epsilon: 0.0,
            reference,
            net_del: 0.0,
            table: None,
            representation: Representation::Vertex,
        }
    }

    pub fn net_edr(epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::CostModel(
                "matching threshold must be positive".into(),
            ));
        }
        Ok(CostModel {
            kind: CostModelKind::NetEdr,
            eta: 0.0,
            epsilon,
            reference: (0.0, 0.0),
            net_del: 0.0,
            table: None,
            representation: Representation::Vertex,
        })
    }

    /// Network real-penalty model: substitution costs the shortest-path
    /// distance; insert/delete cost a user-supplied constant.
    pub fn net_erp(del_cost: f64) -> Result<Self> {
        if del_cost <= 0.0 {
            return Err(Error::CostModel(
                "deletion constant must be positive".into(),
            ));
        }
        Ok(CostModel {
            kind: CostModelKind::NetErp,
            eta: 0.0,
            epsilon: 0.0,
            reference: (0.0, 0.0),
            net_del: del_cost,
            table: None,
            representation: Representation::Vertex,
        })
    }

    /// Unshared-road-weight model over edge symbols: substituting distinct
    /// edges costs both weights, so the distance totals the travel cost of
    /// edges not shared by the two trajectories.
    pub fn surs() -> Self {
        CostModel {
            kind: CostModelKind::Surs,
            eta: 0.0,
            epsilon: 0.0,
            reference: (0.0, 0.0),
            net_del: 0.0,
            table: None,
            representation: Representation::Edge,
        }
    }

    pub fn from_table(table: CostTable, eta: f64) -> Self {
        CostModel {
            kind: CostModelKind::Table,
            eta,
            epsilon: 0.0,
            reference: (0.0, 0.0),
            net_del: 0.0,
            table: Some(Arc::new(table)),
            representation: Representation::Vertex,
        }
    }

    /// Replace the neighborhood threshold. Rejected for the unshared-road
    /// model, where a positive threshold would admit spatially unrelated
    /// short segments as neighbors.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if eta < 0.0 || !eta.is_finite() {
            return Err(Error::CostModel(
                "neighborhood threshold must be nonnegative".into(),
            ));
        }
        if self.kind == CostModelKind::Surs && eta > 0.0 {
            return Err(Error::CostModel(
                "unshared-road-weight model requires a zero neighborhood threshold".into(),
            ));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn kind(&self) -> CostModelKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn alphabet_size(&self, network: &RoadNetwork) -> usize {
        if let Some(t) = &self.table {
            return t.size;
        }
        match self.representation {
            Representation::Vertex => network.vertex_count(),
            Representation::Edge => network.edge_count(),
        }
    }

    /// Substitution cost between two symbols, `None` standing for the empty
    /// symbol (so `sub(a, None)` is the deletion cost of `a`).
    pub fn sub(&self, a: Option<Symbol>, b: Option<Symbol>, network: &RoadNetwork) -> f64 {
        debug_assert!(a.is_some() || b.is_some());
        match (a, b) {
            (Some(a), Some(b)) => self.sub_symbols(a, b, network),
            (Some(a), None) | (None, Some(a)) => self.gap_cost(a, network),
            (None, None) => 0.0,
        }
    }

    fn sub_symbols(&self, a: Symbol, b: Symbol, network: &RoadNetwork) -> f64 {
        match self.kind {
            CostModelKind::Lev => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            CostModelKind::Edr => {
                let d = network.euclid(VertexId(a), VertexId(b)).unwrap();
                if d <= self.epsilon {
                    0.0
                } else {
                    1.0
                }
            }
            CostModelKind::Erp => network.euclid(VertexId(a), VertexId(b)).unwrap(),
            CostModelKind::NetEdr => {
                let d = network.network_distance(VertexId(a), VertexId(b)).unwrap();
                if d <= self.epsilon {
                    0.0
                } else {
                    1.0
                }
            }
            CostModelKind::NetErp => network.network_distance(VertexId(a), VertexId(b)).unwrap(),
            CostModelKind::Surs => {
                if a == b {
                    0.0
                } else {
                    network.edge_weight(crate::network::EdgeId(a))
                        + network.edge_weight(crate::network::EdgeId(b))
                }
            }
            CostModelKind::Table => self.table.as_ref().unwrap().sub(a as usize, b as usize),
        }
    }

    fn gap_cost(&self, a: Symbol, network: &RoadNetwork) -> f64 {
        match self.kind {
            CostModelKind::Lev | CostModelKind::Edr | CostModelKind::NetEdr => 1.0,
            CostModelKind::Erp => network
                .euclid_to_point(VertexId(a), self.reference)
                .unwrap(),
            CostModelKind::NetErp => self.net_del,
            CostModelKind::Surs => network.edge_weight(crate::network::EdgeId(a)),
            CostModelKind::Table => self.table.as_ref().unwrap().del[a as usize],
        }
    }

    pub fn ins(&self, a: Symbol, network: &RoadNetwork) -> f64 {
        self.gap_cost(a, network)
    }

    pub fn del(&self, a: Symbol, network: &RoadNetwork) -> f64 {
        self.gap_cost(a, network)
    }

    /// Substitution costs of `p` against every symbol of `q_seq`, written to
    /// `out`. For the network-distance models this fetches the memoized
    /// distance array once instead of once per pair.
    pub fn sub_row(&self, p: Symbol, q_seq: &[Symbol], network: &RoadNetwork, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(q_seq.len());
        match self.kind {
            CostModelKind::NetEdr => {
                let dist = network.distances_from(VertexId(p));
                out.extend(q_seq.iter().map(|&q| {
                    if dist[q as usize] <= self.epsilon {
                        0.0
                    } else {
                        1.0
                    }
                }));
            }
            CostModelKind::NetErp => {
                let dist = network.distances_from(VertexId(p));
                out.extend(q_seq.iter().map(|&q| dist[q as usize]));
            }
            _ => out.extend(q_seq.iter().map(|&q| self.sub_symbols(p, q, network))),
        }
    }

    /// The substitution neighborhood of `q`: every symbol reachable by a
    /// substitution of cost at most the threshold. Always contains `q`;
    /// sorted by symbol id.
    pub fn neighbors(&self, q: Symbol, network: &RoadNetwork) -> Vec<Symbol> {
        match self.kind {
            CostModelKind::Lev => {
                if self.eta >= 1.0 {
                    (0..self.alphabet_size(network) as u32).collect()
                } else {
                    vec![q]
                }
            }
            CostModelKind::Edr => {
                if self.eta >= 1.0 {
                    (0..self.alphabet_size(network) as u32).collect()
                } else {
                    network
                        .range_query(network.coord(VertexId(q)), self.epsilon)
                        .into_iter()
                        .map(|v| v.0)
                        .collect()
                }
            }
            CostModelKind::Erp => network
                .range_query(network.coord(VertexId(q)), self.eta)
                .into_iter()
                .map(|v| v.0)
                .collect(),
            CostModelKind::NetEdr => {
                if self.eta >= 1.0 {
                    (0..self.alphabet_size(network) as u32).collect()
                } else {
                    network
                        .network_ball(VertexId(q), self.epsilon)
                        .0
                        .into_iter()
                        .map(|(v, _)| v.0)
                        .collect()
                }
            }
            CostModelKind::NetErp => network
                .network_ball(VertexId(q), self.eta)
                .0
                .into_iter()
                .map(|(v, _)| v.0)
                .collect(),
            CostModelKind::Surs => {
                let w = network.edge_weight(crate::network::EdgeId(q));
                if w == 0.0 {
                    let mut out: Vec<Symbol> = (0..network.edge_count() as u32)
                        .filter(|&e| network.edge_weight(crate::network::EdgeId(e)) == 0.0)
                        .collect();
                    if !out.contains(&q) {
                        out.push(q);
                        out.sort_unstable();
                    }
                    out
                } else {
                    vec![q]
                }
            }
            CostModelKind::Table => {
                let t = self.table.as_ref().unwrap();
                (0..t.size as u32)
                    .filter(|&b| t.sub(q as usize, b as usize) <= self.eta)
                    .collect()
            }
        }
    }

    /// Minimum cost of editing `q` into anything outside its neighborhood:
    /// the cheaper of deleting `q` and substituting it with the nearest
    /// excluded symbol.
    pub fn escape_cost(&self, q: Symbol, network: &RoadNetwork) -> f64 {
        match self.kind {
            CostModelKind::Lev | CostModelKind::Edr | CostModelKind::NetEdr => 1.0,
            CostModelKind::Erp => {
                let del = self.gap_cost(q, network);
                let beyond = network
                    .nearest_beyond(network.coord(VertexId(q)), self.eta)
                    .unwrap_or(f64::INFINITY);
                del.min(beyond)
            }
            CostModelKind::NetErp => {
                let (_, beyond) = network.network_ball(VertexId(q), self.eta);
                self.net_del.min(beyond.unwrap_or(f64::INFINITY))
            }
            CostModelKind::Surs => network.edge_weight(crate::network::EdgeId(q)),
            CostModelKind::Table => {
                let t = self.table.as_ref().unwrap();
                let mut best = t.del[q as usize];
                for b in 0..t.size {
                    let v = t.sub(q as usize, b);
                    if v > self.eta && v < best {
                        best = v;
                    }
                }
                best
            }
        }
    }

    /// Check that the model can serve a database in the given representation.
    pub fn check_representation(&self, db_representation: Representation) -> Result<()> {
        if self.representation == db_representation {
            Ok(())
        } else {
            Err(Error::Representation(format!(
                "cost model {} requires {} representation, database uses {}",
                self.kind, self.representation, db_representation
            )))
        }
    }
}

/// Neighborhood-threshold default for each model: zero for the unit-cost and
/// unshared-road models, a small data-derived positive value for the
/// real-penalty models (scaled to be dimensionless in the input units).
pub fn default_eta(kind: CostModelKind, network: &RoadNetwork) -> f64 {
    match kind {
        CostModelKind::Erp => 1e-4 * network.median_nn_distance(),
        CostModelKind::NetErp => network.median_edge_weight(),
        _ => 0.0,
    }
}
