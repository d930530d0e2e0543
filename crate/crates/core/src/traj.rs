//! Trajectory database: ingestion with path validation, vertex/edge
//! representation handling, timestamps, and by-id access.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{parse_tabular, RoadNetwork, VertexId};

/// Dense symbol over the alphabet: a vertex id in vertex representation, an
/// edge id in edge representation.
pub type Symbol = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Vertex,
    Edge,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Vertex => write!(f, "vertex"),
            Representation::Edge => write!(f, "edge"),
        }
    }
}

/// One data trajectory: a path over the alphabet plus optional per-vertex
/// timestamps. In vertex representation there is one timestamp per symbol;
/// in edge representation there are `|symbols| + 1` (one per visited vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub external_id: i64,
    pub symbols: Vec<Symbol>,
    pub timestamps: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Full time span `[first, last]` of the trajectory, if timestamped.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        self.timestamps
            .as_ref()
            .and_then(|ts| Some((*ts.first()?, *ts.last()?)))
    }

    /// Time interval covered by the subtrajectory `s..=t` (1-based symbol
    /// positions). In edge representation the end time is taken at the head
    /// vertex of the final edge.
    pub fn span_interval(&self, rep: Representation, s: usize, t: usize) -> Option<(f64, f64)> {
        let ts = self.timestamps.as_ref()?;
        match rep {
            Representation::Vertex => Some((ts[s - 1], ts[t - 1])),
            Representation::Edge => Some((ts[s - 1], ts[t])),
        }
    }
}

/// A raw trajectory record prior to ingestion: external vertex ids, in path
/// order, plus optional timestamps.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub external_id: i64,
    pub vertices: Vec<i64>,
    pub timestamps: Option<Vec<f64>>,
}

/// Why a record was rejected during ingestion, with the offending 1-based
/// position where applicable.
#[derive(Debug, Clone)]
pub struct RejectedTrajectory {
    pub external_id: i64,
    pub position: usize,
    pub reason: String,
}

impl std::fmt::Display for RejectedTrajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trajectory {} rejected at position {}: {}",
            self.external_id, self.position, self.reason
        )
    }
}

/// Immutable trajectory database with a per-symbol occurrence count
/// (repeats counted once per occurrence).
#[derive(Debug)]
pub struct TrajectoryDb {
    trajs: Vec<Trajectory>,
    representation: Representation,
    alphabet_size: usize,
    freq: Vec<u64>,
    by_ext: HashMap<i64, u32>,
}

impl TrajectoryDb {
    /// Ingest records into a database over the given network. Records that
    /// violate the path or timestamp invariants are rejected and reported,
    /// not repaired. With `Representation::Edge` the validated vertex paths
    /// are converted to edge sequences (length-1 records are dropped with a
    /// report).
    pub fn ingest(
        records: &[TrajectoryRecord],
        network: &RoadNetwork,
        representation: Representation,
    ) -> Result<(Self, Vec<RejectedTrajectory>)> {
        let alphabet_size = match representation {
            Representation::Vertex => network.vertex_count(),
            Representation::Edge => network.edge_count(),
        };
        let mut db = TrajectoryDb {
            trajs: Vec::new(),
            representation,
            alphabet_size,
            freq: vec![0; alphabet_size],
            by_ext: HashMap::new(),
        };
        let mut rejected = Vec::new();

        'records: for rec in records {
            let reject = |position: usize, reason: String| RejectedTrajectory {
                external_id: rec.external_id,
                position,
                reason,
            };
            if db.by_ext.contains_key(&rec.external_id) {
                rejected.push(reject(0, "duplicate trajectory id".into()));
                continue;
            }
            if rec.vertices.is_empty() {
                rejected.push(reject(0, "empty trajectory".into()));
                continue;
            }
            if let Some(ts) = &rec.timestamps {
                if ts.len() != rec.vertices.len() {
                    rejected.push(reject(
                        0,
                        "timestamp count does not match vertex count".into(),
                    ));
                    continue;
                }
                for (i, pair) in ts.windows(2).enumerate() {
                    if pair[1] < pair[0] {
                        rejected.push(reject(i + 2, "timestamp regression".into()));
                        continue 'records;
                    }
                }
                if ts.iter().any(|&t| t < 0.0 || !t.is_finite()) {
                    rejected.push(reject(0, "negative or non-finite timestamp".into()));
                    continue;
                }
            }

            let mut path = Vec::with_capacity(rec.vertices.len());
            for (i, &ext) in rec.vertices.iter().enumerate() {
                match network.vertex_by_external(ext) {
                    Some(v) => path.push(v),
                    None => {
                        rejected.push(reject(i + 1, format!("unknown vertex {ext}")));
                        continue 'records;
                    }
                }
            }
            for (i, pair) in path.windows(2).enumerate() {
                match network.edge_from_to(pair[0], pair[1]) {
                    Ok(Some(_)) => {}
                    Ok(None) => {
                        rejected.push(reject(
                            i + 2,
                            format!(
                                "no edge from vertex {} to vertex {}",
                                network.external_vertex_id(pair[0]),
                                network.external_vertex_id(pair[1])
                            ),
                        ));
                        continue 'records;
                    }
                    Err(e) => {
                        rejected.push(reject(i + 2, e.to_string()));
                        continue 'records;
                    }
                }
            }

            let symbols: Vec<Symbol> = match representation {
                Representation::Vertex => path.iter().map(|v| v.0).collect(),
                Representation::Edge => {
                    if path.len() < 2 {
                        rejected.push(reject(
                            1,
                            "length-1 trajectory has no edge representation".into(),
                        ));
                        continue;
                    }
                    path.windows(2)
                        .map(|p| network.edge_from_to(p[0], p[1]).unwrap().unwrap().0)
                        .collect()
                }
            };
            db.push_unchecked(Trajectory {
                external_id: rec.external_id,
                symbols,
                timestamps: rec.timestamps.clone(),
            });
        }
        Ok((db, rejected))
    }

    fn push_unchecked(&mut self, traj: Trajectory) {
        for &sym in &traj.symbols {
            self.freq[sym as usize] += 1;
        }
        self.by_ext
            .insert(traj.external_id, self.trajs.len() as u32);
        self.trajs.push(traj);
    }

    /// Rebuild from already-dense trajectories (persistence, generators).
    /// The frequency table is recomputed; symbol bounds are validated.
    pub fn from_parts(
        representation: Representation,
        alphabet_size: usize,
        trajs: Vec<Trajectory>,
    ) -> Result<Self> {
        let mut db = TrajectoryDb {
            trajs: Vec::new(),
            representation,
            alphabet_size,
            freq: vec![0; alphabet_size],
            by_ext: HashMap::new(),
        };
        for t in trajs {
            if let Some(&bad) = t.symbols.iter().find(|&&s| s as usize >= alphabet_size) {
                return Err(Error::UnknownSymbol(bad as i64));
            }
            if let Some(ts) = &t.timestamps {
                let expected = match representation {
                    Representation::Vertex => t.symbols.len(),
                    Representation::Edge => t.symbols.len() + 1,
                };
                if ts.len() != expected {
                    return Err(Error::Representation(format!(
                        "trajectory {}: {} timestamps for {} symbols in {} representation",
                        t.external_id,
                        ts.len(),
                        t.symbols.len(),
                        representation
                    )));
                }
            }
            db.push_unchecked(t);
        }
        Ok(db)
    }

    /// Convert a vertex-representation database to edge representation.
    /// Length-1 trajectories have no edge form and are dropped with a report.
    pub fn to_edge_representation(
        &self,
        network: &RoadNetwork,
    ) -> Result<(Self, Vec<RejectedTrajectory>)> {
        if self.representation != Representation::Vertex {
            return Err(Error::Representation(
                "database is not in vertex representation".into(),
            ));
        }
        let mut out = TrajectoryDb {
            trajs: Vec::new(),
            representation: Representation::Edge,
            alphabet_size: network.edge_count(),
            freq: vec![0; network.edge_count()],
            by_ext: HashMap::new(),
        };
        let mut rejected = Vec::new();
        for t in &self.trajs {
            if t.symbols.len() < 2 {
                rejected.push(RejectedTrajectory {
                    external_id: t.external_id,
                    position: 1,
                    reason: "length-1 trajectory has no edge representation".into(),
                });
                continue;
            }
            let mut edges = Vec::with_capacity(t.symbols.len() - 1);
            for pair in t.symbols.windows(2) {
                let e = network
                    .edge_from_to(VertexId(pair[0]), VertexId(pair[1]))?
                    .ok_or_else(|| {
                        Error::Representation(format!(
                            "trajectory {}: no edge between consecutive vertices",
                            t.external_id
                        ))
                    })?;
                edges.push(e.0);
            }
            out.push_unchecked(Trajectory {
                external_id: t.external_id,
                symbols: edges,
                timestamps: t.timestamps.clone(),
            });
        }
        Ok((out, rejected))
    }

    pub fn get(&self, id: u32) -> Result<&Trajectory> {
        self.trajs
            .get(id as usize)
            .ok_or(Error::UnknownTrajectory(id as i64))
    }

    pub fn get_by_external(&self, ext: i64) -> Result<&Trajectory> {
        let id = self.by_ext.get(&ext).ok_or(Error::UnknownTrajectory(ext))?;
        Ok(&self.trajs[*id as usize])
    }

    pub fn len(&self) -> usize {
        self.trajs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Trajectory)> {
        self.trajs.iter().enumerate().map(|(i, t)| (i as u32, t))
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajs
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Occurrence count of `sym` across the database, repeats included.
    pub fn frequency(&self, sym: Symbol) -> u64 {
        self.freq.get(sym as usize).copied().unwrap_or(0)
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    pub fn total_symbols(&self) -> u64 {
        self.freq.iter().sum()
    }
}

/// Parse a trajectory file: one record per line,
/// `traj_id<TAB>v1:t1,v2:t2,...` with timestamps, or `traj_id<TAB>v1,v2,...`
/// without. Mixing the two forms inside one record is an error.
pub fn parse_trajectory_file(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    parse_tabular(path, 2, |fields, err| {
        let external_id: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad trajectory id {:?}", fields[0])))?;
        let mut vertices = Vec::new();
        let mut timestamps = Vec::new();
        let mut with_ts = None;
        for item in fields[1].split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(err("empty path element".into()));
            }
            match item.split_once(':') {
                Some((v, t)) => {
                    if with_ts == Some(false) {
                        return Err(err("mixed timestamped and plain elements".into()));
                    }
                    with_ts = Some(true);
                    vertices.push(v.parse().map_err(|_| err(format!("bad vertex id {v:?}")))?);
                    timestamps.push(t.parse().map_err(|_| err(format!("bad timestamp {t:?}")))?);
                }
                None => {
                    if with_ts == Some(true) {
                        return Err(err("mixed timestamped and plain elements".into()));
                    }
                    with_ts = Some(false);
                    vertices.push(
                        item.parse()
                            .map_err(|_| err(format!("bad vertex id {item:?}")))?,
                    );
                }
            }
        }
        Ok(TrajectoryRecord {
            external_id,
            vertices,
            timestamps: if with_ts == Some(true) {
                Some(timestamps)
            } else {
                None
            },
        })
    })
}
