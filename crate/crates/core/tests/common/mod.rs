//! Shared fixtures for the integration suites: the 4-symbol worked-example
//! cost table and a small complete network so any symbol sequence ingests
//! as a valid path.

// Each integration binary compiles this module; not all of them use every
// helper.
#![allow(dead_code)]

use std::sync::Arc;

use subtraj_core::engine::{Engine, EtaSetting};
use subtraj_core::{
    CostModel, CostTable, IndexOrdering, InvertedIndex, Representation, RoadNetwork, TrajectoryDb,
    TrajectoryRecord,
};

/// Cost table over symbols A=0, B=1, C=2, D=3 used by the worked examples:
/// escape costs come out as {A:3, B:1, C:2, D:4} at a zero neighborhood
/// threshold, with B and D mutual zero-cost substitutes.
pub fn example_cost_model() -> CostModel {
    let table = CostTable::new(
        vec![
            vec![0.0, 5.0, 3.0, 6.0],
            vec![5.0, 0.0, 2.0, 0.0],
            vec![3.0, 2.0, 0.0, 5.0],
            vec![6.0, 0.0, 5.0, 0.0],
        ],
        vec![4.0, 1.0, 3.0, 4.0],
    )
    .unwrap();
    CostModel::from_table(table, 0.0)
}

/// Complete directed graph on `n` vertices (unit weights).
pub fn clique_network(n: i64) -> RoadNetwork {
    let nodes: Vec<(i64, f64, f64)> = (0..n)
        .map(|i| (i, i as f64, ((i * 2) % 5) as f64))
        .collect();
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

pub fn engine_over(network: RoadNetwork, model: CostModel, records: &[(i64, Vec<i64>)]) -> Engine {
    let network = Arc::new(network);
    let recs: Vec<TrajectoryRecord> = records
        .iter()
        .map(|(id, vs)| TrajectoryRecord {
            external_id: *id,
            vertices: vs.clone(),
            timestamps: None,
        })
        .collect();
    let (db, rejected) = TrajectoryDb::ingest(&recs, &network, Representation::Vertex).unwrap();
    assert!(rejected.is_empty(), "{rejected:?}");
    let db = Arc::new(db);
    let index = Arc::new(InvertedIndex::build_with_ordering(
        &db,
        IndexOrdering::ByPosition,
    ));
    Engine::new(network, db, index, model, EtaSetting::Auto).unwrap()
}

/// The three-trajectory worked instance: {BCDBCD, DABCBA, ABABAB} over the
/// 4-symbol table model.
pub fn worked_engine() -> Engine {
    engine_over(
        clique_network(4),
        example_cost_model(),
        &[
            (1, vec![1, 2, 3, 1, 2, 3]),
            (2, vec![3, 0, 1, 2, 1, 0]),
            (3, vec![0, 1, 0, 1, 0, 1]),
        ],
    )
}
