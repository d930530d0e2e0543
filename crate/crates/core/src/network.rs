//! Road network: directed graph with vertex coordinates and nonnegative edge
//! weights. Serves Euclidean distance, symmetrized shortest-path distance
//! (memoized Dijkstra over the undirected view), and exact spatial range
//! queries over vertices.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Node record as parsed from input: `(external_id, lon, lat)`.
pub type NodeRecord = (i64, f64, f64);
/// Edge record as parsed from input: `(external_id, src, dst, weight)`.
pub type EdgeRecord = (i64, i64, i64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for EdgeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
enum EdgeLookup {
    Unique(EdgeId),
    Ambiguous,
}

/// Directed road graph, immutable after load. Vertex and edge ids are dense
/// (`0..|V|-1`, `0..|E|-1`); the external ids from the input files are
/// retained for reporting and CLI round-trips.
pub struct RoadNetwork {
    coords: Vec<(f64, f64)>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    // Undirected view used for shortest-path distance: weight per neighbor is
    // the minimum over the (up to two) directed edges joining the pair.
    undirected: Vec<Vec<(u32, f64)>>,
    edge_between: HashMap<(u32, u32), EdgeLookup>,
    ext_vertex: Vec<i64>,
    ext_edge: Vec<i64>,
    vertex_by_ext: HashMap<i64, u32>,
    edge_by_ext: HashMap<i64, u32>,
    distance_cache: DistanceCache,
    spatial: OnceLock<SpatialIndex>,
}

impl std::fmt::Debug for RoadNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoadNetwork")
            .field("vertices", &self.coords.len())
            .field("edges", &self.edges.len())
            .finish()
    }
}

impl RoadNetwork {
    /// Build a network from in-memory records. Node records are
    /// `(external_id, lon, lat)`; edge records are
    /// `(external_id, src_external, dst_external, weight)`.
    pub fn from_records(nodes: &[NodeRecord], edges: &[EdgeRecord]) -> Result<Self> {
        let mut coords = Vec::with_capacity(nodes.len());
        let mut ext_vertex = Vec::with_capacity(nodes.len());
        let mut vertex_by_ext = HashMap::with_capacity(nodes.len());
        for &(ext, lon, lat) in nodes {
            if vertex_by_ext.insert(ext, coords.len() as u32).is_some() {
                return Err(Error::Parse {
                    path: "<records>".into(),
                    line: 0,
                    msg: format!("duplicate node id {ext}"),
                });
            }
            coords.push((lon, lat));
            ext_vertex.push(ext);
        }

        let mut edge_list = Vec::with_capacity(edges.len());
        let mut ext_edge = Vec::with_capacity(edges.len());
        let mut edge_by_ext = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); coords.len()];
        let mut edge_between: HashMap<(u32, u32), EdgeLookup> = HashMap::new();
        let mut undirected_min: HashMap<(u32, u32), f64> = HashMap::new();

        for &(ext, src_ext, dst_ext, weight) in edges {
            let src = *vertex_by_ext.get(&src_ext).ok_or(Error::EdgeEndpoint {
                edge: ext,
                vertex: src_ext,
            })?;
            let dst = *vertex_by_ext.get(&dst_ext).ok_or(Error::EdgeEndpoint {
                edge: ext,
                vertex: dst_ext,
            })?;
            if weight < 0.0 || !weight.is_finite() {
                return Err(Error::NegativeWeight { edge: ext, weight });
            }
            let id = EdgeId(edge_list.len() as u32);
            if edge_by_ext.insert(ext, id.0).is_some() {
                return Err(Error::Parse {
                    path: "<records>".into(),
                    line: 0,
                    msg: format!("duplicate edge id {ext}"),
                });
            }
            edge_list.push(Edge {
                src: VertexId(src),
                dst: VertexId(dst),
                weight,
            });
            ext_edge.push(ext);
            out_edges[src as usize].push(id);
            edge_between
                .entry((src, dst))
                .and_modify(|e| *e = EdgeLookup::Ambiguous)
                .or_insert(EdgeLookup::Unique(id));
            let key = if src <= dst { (src, dst) } else { (dst, src) };
            undirected_min
                .entry(key)
                .and_modify(|w| *w = w.min(weight))
                .or_insert(weight);
        }

        let mut undirected = vec![Vec::new(); coords.len()];
        let mut pairs: Vec<_> = undirected_min.into_iter().collect();
        pairs.sort_by_key(|&((a, b), _)| (a, b));
        for ((a, b), w) in pairs {
            undirected[a as usize].push((b, w));
            if a != b {
                undirected[b as usize].push((a, w));
            }
        }

        Ok(RoadNetwork {
            coords,
            edges: edge_list,
            out_edges,
            undirected,
            edge_between,
            ext_vertex,
            ext_edge,
            vertex_by_ext,
            edge_by_ext,
            distance_cache: DistanceCache::new(1024),
            spatial: OnceLock::new(),
        })
    }

    /// Load from tab-separated node and edge files. Node lines are
    /// `node_id<TAB>lon<TAB>lat`, edge lines `edge_id<TAB>src<TAB>dst<TAB>weight`;
    /// lines starting with `#` are comments.
    pub fn load(nodes_path: &Path, edges_path: &Path) -> Result<Self> {
        let nodes = parse_tabular(nodes_path, 3, |fields, err| {
            Ok((
                parse_i64(fields[0], err)?,
                parse_f64(fields[1], err)?,
                parse_f64(fields[2], err)?,
            ))
        })?;
        let edges = parse_tabular(edges_path, 4, |fields, err| {
            Ok((
                parse_i64(fields[0], err)?,
                parse_i64(fields[1], err)?,
                parse_i64(fields[2], err)?,
                parse_f64(fields[3], err)?,
            ))
        })?;
        Self::from_records(&nodes, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn coord(&self, v: VertexId) -> (f64, f64) {
        self.coords[v.0 as usize]
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e.0 as usize]
    }

    pub fn edge_weight(&self, e: EdgeId) -> f64 {
        self.edges[e.0 as usize].weight
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0 as usize]
    }

    pub fn external_vertex_id(&self, v: VertexId) -> i64 {
        self.ext_vertex[v.0 as usize]
    }

    pub fn external_edge_id(&self, e: EdgeId) -> i64 {
        self.ext_edge[e.0 as usize]
    }

    pub fn vertex_by_external(&self, ext: i64) -> Option<VertexId> {
        self.vertex_by_ext.get(&ext).map(|&d| VertexId(d))
    }

    pub fn edge_by_external(&self, ext: i64) -> Option<EdgeId> {
        self.edge_by_ext.get(&ext).map(|&d| EdgeId(d))
    }

    /// The directed edge from `a` to `b`, if exactly one exists.
    pub fn edge_from_to(&self, a: VertexId, b: VertexId) -> Result<Option<EdgeId>> {
        match self.edge_between.get(&(a.0, b.0)) {
            None => Ok(None),
            Some(EdgeLookup::Unique(e)) => Ok(Some(*e)),
            Some(EdgeLookup::Ambiguous) => Err(Error::AmbiguousEdge {
                src: self.external_vertex_id(a),
                dst: self.external_vertex_id(b),
            }),
        }
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if (v.0 as usize) < self.coords.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.0 as i64))
        }
    }

    /// Euclidean distance between two vertices, in coordinate units.
    pub fn euclid(&self, a: VertexId, b: VertexId) -> Result<f64> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        Ok(point_dist(self.coord(a), self.coord(b)))
    }

    /// Euclidean distance from a vertex to an arbitrary point.
    pub fn euclid_to_point(&self, a: VertexId, p: (f64, f64)) -> Result<f64> {
        self.check_vertex(a)?;
        Ok(point_dist(self.coord(a), p))
    }

    /// Shortest-path distance on the undirected view, in travel-cost units.
    /// Returns `f64::INFINITY` when the vertices are disconnected. Distance
    /// arrays are memoized per source vertex.
    pub fn network_distance(&self, a: VertexId, b: VertexId) -> Result<f64> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        Ok(self.distances_from(a)[b.0 as usize])
    }

    /// Full distance array from `src` (undirected view), served from the
    /// memo cache when available. Safe for concurrent callers.
    pub fn distances_from(&self, src: VertexId) -> Arc<Vec<f64>> {
        if let Some(hit) = self.distance_cache.get(src.0) {
            return hit;
        }
        let dist = Arc::new(self.dijkstra_full(src));
        self.distance_cache.insert(src.0, Arc::clone(&dist));
        dist
    }

    fn dijkstra_full(&self, src: VertexId) -> Vec<f64> {
        let n = self.coords.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[src.0 as usize] = 0.0;
        heap.push(HeapEntry {
            cost: 0.0,
            vertex: src.0,
        });
        while let Some(HeapEntry { cost, vertex }) = heap.pop() {
            if cost > dist[vertex as usize] {
                continue;
            }
            for &(next, w) in &self.undirected[vertex as usize] {
                let cand = cost + w;
                if cand < dist[next as usize] {
                    dist[next as usize] = cand;
                    heap.push(HeapEntry {
                        cost: cand,
                        vertex: next,
                    });
                }
            }
        }
        dist
    }

    /// Dijkstra truncated at `radius` (undirected view). Returns the vertices
    /// with distance `<= radius`, sorted by id, plus the smallest distance
    /// strictly beyond the radius (if any vertex lies beyond it).
    pub fn network_ball(&self, src: VertexId, radius: f64) -> (Vec<(VertexId, f64)>, Option<f64>) {
        let n = self.coords.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut inside = Vec::new();
        let mut heap = BinaryHeap::new();
        dist[src.0 as usize] = 0.0;
        heap.push(HeapEntry {
            cost: 0.0,
            vertex: src.0,
        });
        let mut beyond = None;
        while let Some(HeapEntry { cost, vertex }) = heap.pop() {
            if cost > dist[vertex as usize] {
                continue;
            }
            if cost > radius {
                // Pops come in nondecreasing distance order, so the first pop
                // past the radius is the closest vertex outside the ball.
                beyond = Some(cost);
                break;
            }
            inside.push((VertexId(vertex), cost));
            for &(next, w) in &self.undirected[vertex as usize] {
                let cand = cost + w;
                if cand < dist[next as usize] {
                    dist[next as usize] = cand;
                    heap.push(HeapEntry {
                        cost: cand,
                        vertex: next,
                    });
                }
            }
        }
        inside.sort_by_key(|&(v, _)| v);
        (inside, beyond)
    }

    fn spatial_index(&self) -> &SpatialIndex {
        self.spatial
            .get_or_init(|| SpatialIndex::build(&self.coords))
    }

    /// All vertices within Euclidean `radius` of `center` (inclusive),
    /// sorted by id. Exact: every grid hit is checked against the true
    /// distance.
    pub fn range_query(&self, center: (f64, f64), radius: f64) -> Vec<VertexId> {
        self.spatial_index().range(&self.coords, center, radius)
    }

    /// Smallest Euclidean distance from `center` to any vertex strictly
    /// farther than `threshold`. `None` when no such vertex exists.
    pub fn nearest_beyond(&self, center: (f64, f64), threshold: f64) -> Option<f64> {
        self.spatial_index()
            .nearest_beyond(&self.coords, center, threshold, None)
    }

    /// Distance from vertex `v` to its nearest other vertex.
    pub fn nearest_neighbor_distance(&self, v: VertexId) -> Option<f64> {
        self.spatial_index().nearest_beyond(
            &self.coords,
            self.coord(v),
            f64::NEG_INFINITY,
            Some(v.0),
        )
    }

    /// Median over vertices of the nearest-neighbor Euclidean distance.
    pub fn median_nn_distance(&self) -> f64 {
        let mut ds: Vec<f64> = (0..self.coords.len() as u32)
            .filter_map(|v| self.nearest_neighbor_distance(VertexId(v)))
            .collect();
        median(&mut ds).unwrap_or(0.0)
    }

    pub fn median_edge_weight(&self) -> f64 {
        let mut ws: Vec<f64> = self.edges.iter().map(|e| e.weight).collect();
        median(&mut ws).unwrap_or(0.0)
    }

    /// Barycenter of the vertex coordinates.
    pub fn barycenter(&self) -> (f64, f64) {
        if self.coords.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.coords.len() as f64;
        let (sx, sy) = self
            .coords
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
        (sx / n, sy / n)
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Some(values[values.len() / 2])
}

pub(crate) fn point_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    vertex: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want smallest cost first.
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Uniform grid over vertex coordinates. Cell size is derived from the data
/// extent so occupancy stays near one vertex per cell; all queries verify the
/// true distance on every bucket hit, so results are exact regardless of the
/// cell size.
struct SpatialIndex {
    cell: f64,
    grid: HashMap<(i64, i64), Vec<u32>>,
    key_min: (i64, i64),
    key_max: (i64, i64),
}

impl SpatialIndex {
    fn build(coords: &[(f64, f64)]) -> Self {
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in coords {
            min.0 = min.0.min(x);
            min.1 = min.1.min(y);
            max.0 = max.0.max(x);
            max.1 = max.1.max(y);
        }
        let extent = if coords.is_empty() {
            1.0
        } else {
            ((max.0 - min.0).hypot(max.1 - min.1)).max(f64::MIN_POSITIVE)
        };
        let cell = (extent / ((coords.len() as f64).sqrt() + 1.0)).max(extent * 1e-12);
        let cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            1.0
        };

        let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        let mut key_min = (i64::MAX, i64::MAX);
        let mut key_max = (i64::MIN, i64::MIN);
        for (i, &(x, y)) in coords.iter().enumerate() {
            let key = ((x / cell).floor() as i64, (y / cell).floor() as i64);
            key_min.0 = key_min.0.min(key.0);
            key_min.1 = key_min.1.min(key.1);
            key_max.0 = key_max.0.max(key.0);
            key_max.1 = key_max.1.max(key.1);
            grid.entry(key).or_default().push(i as u32);
        }
        SpatialIndex {
            cell,
            grid,
            key_min,
            key_max,
        }
    }

    fn key_of(&self, p: (f64, f64)) -> (i64, i64) {
        (
            (p.0 / self.cell).floor() as i64,
            (p.1 / self.cell).floor() as i64,
        )
    }

    fn range(&self, coords: &[(f64, f64)], center: (f64, f64), radius: f64) -> Vec<VertexId> {
        if radius < 0.0 || self.grid.is_empty() {
            return Vec::new();
        }
        let lo = self.key_of((center.0 - radius, center.1 - radius));
        let hi = self.key_of((center.0 + radius, center.1 + radius));
        let mut out = Vec::new();
        for kx in lo.0.max(self.key_min.0)..=hi.0.min(self.key_max.0) {
            for ky in lo.1.max(self.key_min.1)..=hi.1.min(self.key_max.1) {
                if let Some(bucket) = self.grid.get(&(kx, ky)) {
                    for &v in bucket {
                        if point_dist(coords[v as usize], center) <= radius {
                            out.push(VertexId(v));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Minimum distance from `center` to a vertex with distance strictly
    /// greater than `threshold`, optionally excluding one vertex id.
    /// Expanding ring search; a ring at Chebyshev cell distance `r` cannot
    /// hold a point closer than `(r-1) * cell`, which bounds the scan.
    fn nearest_beyond(
        &self,
        coords: &[(f64, f64)],
        center: (f64, f64),
        threshold: f64,
        exclude: Option<u32>,
    ) -> Option<f64> {
        if self.grid.is_empty() {
            return None;
        }
        let ck = self.key_of(center);
        let max_ring = {
            let dx = (ck.0 - self.key_min.0)
                .abs()
                .max((self.key_max.0 - ck.0).abs());
            let dy = (ck.1 - self.key_min.1)
                .abs()
                .max((self.key_max.1 - ck.1).abs());
            dx.max(dy)
        };
        let mut best: Option<f64> = None;
        for ring in 0..=max_ring {
            if let Some(b) = best {
                if (ring as f64 - 1.0) * self.cell > b {
                    break;
                }
            }
            self.for_ring_cells(ck, ring, |bucket| {
                for &v in bucket {
                    if exclude == Some(v) {
                        continue;
                    }
                    let d = point_dist(coords[v as usize], center);
                    if d > threshold && best.is_none_or(|b| d < b) {
                        best = Some(d);
                    }
                }
            });
        }
        best
    }

    fn for_ring_cells(&self, center: (i64, i64), ring: i64, mut f: impl FnMut(&Vec<u32>)) {
        let mut visit = |kx: i64, ky: i64| {
            if kx < self.key_min.0
                || kx > self.key_max.0
                || ky < self.key_min.1
                || ky > self.key_max.1
            {
                return;
            }
            if let Some(bucket) = self.grid.get(&(kx, ky)) {
                f(bucket);
            }
        };
        if ring == 0 {
            visit(center.0, center.1);
            return;
        }
        for kx in (center.0 - ring)..=(center.0 + ring) {
            visit(kx, center.1 - ring);
            visit(kx, center.1 + ring);
        }
        for ky in (center.1 - ring + 1)..=(center.1 + ring - 1) {
            visit(center.0 - ring, ky);
            visit(center.0 + ring, ky);
        }
    }
}

/// Bounded memo of full Dijkstra distance arrays, keyed by source vertex.
/// Least-recently-used entry is evicted once the capacity is reached.
type CacheSlot = (Arc<Vec<f64>>, u64);

struct DistanceCache {
    cap: usize,
    tick: AtomicU64,
    map: Mutex<HashMap<u32, CacheSlot>>,
}

impl DistanceCache {
    fn new(cap: usize) -> Self {
        DistanceCache {
            cap: cap.max(1),
            tick: AtomicU64::new(0),
            map: Mutex::new(HashMap::new()),
        }
    }

    fn stamp(&self) -> u64 {
        self.tick.fetch_add(1, AtomicOrdering::Relaxed)
    }

    fn get(&self, src: u32) -> Option<Arc<Vec<f64>>> {
        let mut map = self.map.lock().unwrap();
        let stamp = self.stamp();
        map.get_mut(&src).map(|entry| {
            entry.1 = stamp;
            Arc::clone(&entry.0)
        })
    }

    fn insert(&self, src: u32, dist: Arc<Vec<f64>>) {
        let mut map = self.map.lock().unwrap();
        if map.len() >= self.cap && !map.contains_key(&src) {
            if let Some((&oldest, _)) = map.iter().min_by_key(|(_, (_, t))| *t) {
                map.remove(&oldest);
            }
        }
        let stamp = self.stamp();
        map.insert(src, (dist, stamp));
    }
}

fn parse_i64(s: &str, err: &dyn Fn(String) -> Error) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| err(format!("expected integer, got {s:?}")))
}

fn parse_f64(s: &str, err: &dyn Fn(String) -> Error) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| err(format!("expected number, got {s:?}")))
}

/// Parse a tab-separated file, skipping `#` comments and blank lines.
/// `min_fields` is enforced per record; errors carry the 1-based line number.
pub(crate) fn parse_tabular<T>(
    path: &Path,
    min_fields: usize,
    parse: impl Fn(&[&str], &dyn Fn(String) -> Error) -> Result<T>,
) -> Result<Vec<T>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = {
            let display = display.clone();
            move |msg: String| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg,
            }
        };
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < min_fields {
            return Err(err(format!(
                "expected {min_fields} tab-separated fields, got {}",
                fields.len()
            )));
        }
        out.push(parse(&fields, &err)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: i64, cols: i64) -> RoadNetwork {
        // Unit grid, 4-neighbor, both directions, weight 1.
        let mut nodes = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push((r * cols + c, c as f64, r as f64));
            }
        }
        let mut edges = Vec::new();
        let mut eid = 0;
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((eid, v, v + 1, 1.0));
                    edges.push((eid + 1, v + 1, v, 1.0));
                    eid += 2;
                }
                if r + 1 < rows {
                    edges.push((eid, v, v + cols, 1.0));
                    edges.push((eid + 1, v + cols, v, 1.0));
                    eid += 2;
                }
            }
        }
        RoadNetwork::from_records(&nodes, &edges).unwrap()
    }

    #[test]
    fn minimal_graph_loads() {
        let net = RoadNetwork::from_records(&[(10, 0.0, 0.0), (20, 1.0, 0.0)], &[(5, 10, 20, 2.5)])
            .unwrap();
        assert_eq!(net.vertex_count(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.external_vertex_id(VertexId(0)), 10);
        assert_eq!(net.vertex_by_external(20), Some(VertexId(1)));
    }

    #[test]
    fn edge_with_unknown_endpoint_is_rejected() {
        let err = RoadNetwork::from_records(&[(1, 0.0, 0.0)], &[(0, 1, 7, 1.0)]).unwrap_err();
        match err {
            Error::EdgeEndpoint { vertex, .. } => assert_eq!(vertex, 7),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_weight_is_rejected() {
        let err = RoadNetwork::from_records(&[(1, 0.0, 0.0), (2, 1.0, 0.0)], &[(0, 1, 2, -1.0)])
            .unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { .. }));
    }

    #[test]
    fn hundred_node_grid_has_expected_counts() {
        let net = grid(10, 10);
        assert_eq!(net.vertex_count(), 100);
        assert_eq!(net.edge_count(), 360);
    }

    #[test]
    fn euclid_identity_symmetry_and_grid_units() {
        let net = grid(5, 5);
        for v in 0..net.vertex_count() as u32 {
            assert_eq!(net.euclid(VertexId(v), VertexId(v)).unwrap(), 0.0);
        }
        for (a, b) in [(0u32, 7u32), (3, 24), (11, 12)] {
            let ab = net.euclid(VertexId(a), VertexId(b)).unwrap();
            let ba = net.euclid(VertexId(b), VertexId(a)).unwrap();
            assert_eq!(ab, ba);
        }
        // Horizontal neighbors are one grid unit apart.
        assert_eq!(net.euclid(VertexId(0), VertexId(1)).unwrap(), 1.0);
        assert!(net.euclid(VertexId(0), VertexId(999)).is_err());
    }

    fn bellman_ford(net: &RoadNetwork, src: u32) -> Vec<f64> {
        // Brute-force oracle over the undirected view.
        let n = net.vertex_count();
        let mut dist = vec![f64::INFINITY; n];
        dist[src as usize] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for v in 0..n {
                if dist[v].is_infinite() {
                    continue;
                }
                for &(u, w) in &net.undirected[v] {
                    if dist[v] + w < dist[u as usize] {
                        dist[u as usize] = dist[v] + w;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    #[test]
    fn network_distance_matches_bellman_ford() {
        let net = grid(10, 10);
        for src in [0u32, 17, 42, 99] {
            let oracle = bellman_ford(&net, src);
            let got = net.distances_from(VertexId(src));
            for v in 0..net.vertex_count() {
                assert!((oracle[v] - got[v]).abs() < 1e-9);
            }
        }
        assert_eq!(net.network_distance(VertexId(5), VertexId(5)).unwrap(), 0.0);
        assert_eq!(net.network_distance(VertexId(0), VertexId(1)).unwrap(), 1.0);
    }

    #[test]
    fn network_distance_symmetric_and_triangle() {
        let net = grid(6, 6);
        let n = net.vertex_count() as u32;
        let picks = [(0u32, 35u32), (3, 20), (7, 31), (10, 11)];
        for &(a, b) in &picks {
            let ab = net.network_distance(VertexId(a), VertexId(b)).unwrap();
            let ba = net.network_distance(VertexId(b), VertexId(a)).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
        for a in (0..n).step_by(7) {
            for b in (1..n).step_by(11) {
                for c in (2..n).step_by(13) {
                    let ab = net.network_distance(VertexId(a), VertexId(b)).unwrap();
                    let ac = net.network_distance(VertexId(a), VertexId(c)).unwrap();
                    let cb = net.network_distance(VertexId(c), VertexId(b)).unwrap();
                    assert!(ab <= ac + cb + 1e-9);
                }
            }
        }
    }

    #[test]
    fn disconnected_pairs_are_infinite() {
        let net = RoadNetwork::from_records(
            &[(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 5.0, 5.0)],
            &[(0, 0, 1, 1.0)],
        )
        .unwrap();
        assert!(net
            .network_distance(VertexId(0), VertexId(2))
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn antiparallel_edges_use_minimum_weight() {
        let net = RoadNetwork::from_records(
            &[(0, 0.0, 0.0), (1, 1.0, 0.0)],
            &[(0, 0, 1, 5.0), (1, 1, 0, 2.0)],
        )
        .unwrap();
        assert_eq!(net.network_distance(VertexId(0), VertexId(1)).unwrap(), 2.0);
        assert_eq!(net.network_distance(VertexId(1), VertexId(0)).unwrap(), 2.0);
    }

    #[test]
    fn range_query_matches_linear_scan() {
        let net = grid(10, 10);
        let scan = |center: (f64, f64), r: f64| -> Vec<VertexId> {
            let mut out: Vec<VertexId> = (0..net.vertex_count() as u32)
                .map(VertexId)
                .filter(|&v| point_dist(net.coord(v), center) <= r)
                .collect();
            out.sort();
            out
        };
        // Degenerate radius at an exact vertex location.
        assert_eq!(net.range_query((3.0, 4.0), 0.0), scan((3.0, 4.0), 0.0));
        assert_eq!(net.range_query((3.0, 4.0), 0.0).len(), 1);
        // Full cover.
        assert_eq!(net.range_query((4.5, 4.5), 100.0).len(), 100);
        // Random centers and radii.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c = (rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0));
            let r = rng.gen_range(0.0..8.0);
            assert_eq!(net.range_query(c, r), scan(c, r));
        }
    }

    #[test]
    fn nearest_beyond_matches_scan() {
        let net = grid(8, 8);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c = (rng.gen_range(-1.0..9.0), rng.gen_range(-1.0..9.0));
            let t = rng.gen_range(0.0..6.0);
            let expected = (0..net.vertex_count() as u32)
                .map(|v| point_dist(net.coord(VertexId(v)), c))
                .filter(|&d| d > t)
                .fold(None::<f64>, |acc, d| Some(acc.map_or(d, |a: f64| a.min(d))));
            let got = net.nearest_beyond(c, t);
            match (expected, got) {
                (None, None) => {}
                (Some(e), Some(g)) => assert!((e - g).abs() < 1e-12),
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn network_ball_matches_full_dijkstra() {
        let net = grid(7, 7);
        for src in [0u32, 24, 48] {
            for radius in [0.0, 1.0, 2.5, 4.0] {
                let full = net.distances_from(VertexId(src));
                let (inside, beyond) = net.network_ball(VertexId(src), radius);
                let expected: Vec<(VertexId, f64)> = (0..net.vertex_count() as u32)
                    .filter(|&v| full[v as usize] <= radius)
                    .map(|v| (VertexId(v), full[v as usize]))
                    .collect();
                assert_eq!(inside, expected);
                let expected_beyond = (0..net.vertex_count())
                    .map(|v| full[v])
                    .filter(|&d| d > radius)
                    .fold(None::<f64>, |acc, d| Some(acc.map_or(d, |a| a.min(d))));
                match (beyond, expected_beyond) {
                    (None, None) => {}
                    (Some(b), Some(e)) => assert!((b - e).abs() < 1e-12),
                    other => panic!("mismatch {other:?}"),
                }
            }
        }
    }

    #[test]
    fn distance_cache_concurrent_reads_are_consistent() {
        let net = std::sync::Arc::new(grid(6, 6));
        let mut handles = Vec::new();
        for t in 0..4u32 {
            let net = std::sync::Arc::clone(&net);
            handles.push(std::thread::spawn(move || {
                for i in 0..50u32 {
                    let src = VertexId((t * 13 + i) % 36);
                    let dst = VertexId((i * 7) % 36);
                    let d = net.network_distance(src, dst).unwrap();
                    let manhattan = {
                        let (ax, ay) = net.coord(src);
                        let (bx, by) = net.coord(dst);
                        (ax - bx).abs() + (ay - by).abs()
                    };
                    assert!((d - manhattan).abs() < 1e-9);
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn distance_cache_evicts_but_stays_correct() {
        let cache = DistanceCache::new(2);
        cache.insert(0, Arc::new(vec![0.0]));
        cache.insert(1, Arc::new(vec![1.0]));
        assert!(cache.get(0).is_some());
        cache.insert(2, Arc::new(vec![2.0]));
        // Capacity 2: one of the earlier entries is gone, the newest stays.
        assert!(cache.get(2).is_some());
        let live = [0u32, 1, 2]
            .iter()
            .filter(|&&k| cache.get(k).is_some())
            .count();
        assert_eq!(live, 2);
    }
}
