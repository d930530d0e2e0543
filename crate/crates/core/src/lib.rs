//! Subtrajectory similarity search over road networks.
//!
//! Given a database of network-constrained trajectories and a query
//! trajectory, find every subtrajectory whose weighted edit distance to the
//! query is below a threshold. The distance is parameterized by a cost
//! model (six instances built in, from unit-cost to network-distance and
//! unshared-road-weight variants); the engine is exact for all of them.
//!
//! Query processing is filter-and-verify: a subsequence of the query is
//! chosen so that any match must contain a neighborhood symbol of one of
//! the chosen anchors (a minimum-knapsack selection solved by a factor-2
//! greedy), candidate positions come from an inverted index, and
//! verification runs a bidirectional DP from each anchor with early
//! termination and trie-cached columns.

pub mod cost;
pub mod engine;
pub mod error;
pub mod exec;
pub mod index;
pub mod mincand;
pub mod network;
pub mod persist;
pub mod scenario;
pub mod traj;
pub mod verify;
pub mod wed;

pub use cost::{default_eta, CostModel, CostModelKind, CostTable};
pub use engine::{
    Engine, EtaSetting, Query, QueryResult, QueryStats, TemporalConstraint, Threshold,
};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use index::{IndexOrdering, InvertedIndex, Posting};
pub use mincand::{solve_approx, solve_exact, SelectionItem, TauSubsequence};
pub use network::{EdgeId, RoadNetwork, VertexId};
pub use traj::{Representation, Symbol, Trajectory, TrajectoryDb, TrajectoryRecord};
pub use verify::{Candidate, MatchResult, VerifyOptions, VerifyStats};
