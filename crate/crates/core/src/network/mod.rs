//! Spatial network generation and exact graph-search oracles.
//!
//! Networks are built in two steps: neuron positions are drawn by dart-throw
//! rejection sampling under a minimum packing distance, then every pair whose
//! distance falls strictly inside a spatial annulus is connected in both
//! directions. BFS-based oracles over the same structure provide the ground
//! truth that simulation results are verified against.

mod environment;

pub use environment::{BoundingBox, Environment, PRESET_NAMES};

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonutil::canon_f64;

/// Rejection-sampling attempt budget per point.
pub const ATTEMPTS_PER_POINT: usize = 10_000;

/// Budget of seed increments when regenerating for source/target reachability.
pub const REACHABILITY_RETRIES: u64 = 16;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("placement exhausted after {attempts} attempts: placed {placed} of {requested} points (region too small for this packing distance)")]
    PlacementExhausted {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("target {to} unreachable from source {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("no network with reachable targets found after {attempts} seeds starting at {first_seed}")]
    RetriesExhausted { first_seed: u64, attempts: u64 },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
}

/// Dense node identifier, stable across a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Network generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_neurons: usize,
    /// Minimum packing distance between any two neurons (m).
    pub p_min: f64,
    /// Inner annulus radius (m); pairs at or below this distance stay unconnected.
    pub d_min: f64,
    /// Outer annulus radius (m); pairs at or beyond this distance stay unconnected.
    pub d_max: f64,
    pub seed: u64,
}

impl GenParams {
    /// Parameter set used throughout the navigation experiments.
    pub fn reference(seed: u64) -> Self {
        Self {
            n_neurons: 1000,
            p_min: 0.01,
            d_min: 0.05,
            d_max: 0.15,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.n_neurons < 2 {
            return Err(NetworkError::InvalidParams("n_neurons must be >= 2".into()));
        }
        if self.p_min.is_nan() || self.p_min <= 0.0 {
            return Err(NetworkError::InvalidParams("p_min must be > 0".into()));
        }
        if self.d_min.is_nan() || self.d_max.is_nan() || self.d_min < 0.0 || self.d_min >= self.d_max
        {
            return Err(NetworkError::InvalidParams(
                "need 0 <= d_min < d_max".into(),
            ));
        }
        Ok(())
    }
}

/// Immutable spatial network: positions plus symmetric directed adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialNetwork {
    positions: Vec<Point2>,
    adjacency: Vec<Vec<NodeId>>,
    environment: Environment,
}

impl SpatialNetwork {
    /// Assemble a network from explicit parts. Used for synthetic topologies
    /// (path graphs, grids) where adjacency is not annulus-derived.
    pub fn from_parts(
        positions: Vec<Point2>,
        adjacency: Vec<Vec<NodeId>>,
        environment: Environment,
    ) -> Self {
        assert_eq!(positions.len(), adjacency.len());
        let mut adjacency = adjacency;
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            positions,
            adjacency,
            environment,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, v: NodeId) -> Point2 {
        self.positions[v.index()]
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.index()]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn environment(&self) -> &Environment {
        &self.environment
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len() as u32).map(NodeId)
    }

    /// All directed edges, sorted ascending by (u, v).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                edges.push((NodeId(u as u32), v));
            }
        }
        edges.sort_unstable();
        edges
    }
}

// ============================================================================
// Generation
// ============================================================================

/// Draw neuron positions inside the environment by dart throwing.
///
/// Coordinates come from a single `ChaCha8` stream seeded with `gp.seed`, two
/// uniform draws (x then y) per attempt, so the layout is reproducible across
/// platforms. Coordinates are quantized to 9 significant digits before the
/// packing test so stored positions satisfy the invariants exactly.
pub fn generate_positions(env: &Environment, gp: &GenParams) -> Result<Vec<Point2>, NetworkError> {
    gp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(gp.seed);
    let mut points: Vec<Point2> = Vec::with_capacity(gp.n_neurons);
    let p_min2 = gp.p_min * gp.p_min;
    while points.len() < gp.n_neurons {
        let mut placed = false;
        for _ in 0..ATTEMPTS_PER_POINT {
            let x = canon_f64(env.bbox.min_x + rng.random::<f64>() * env.bbox.width());
            let y = canon_f64(env.bbox.min_y + rng.random::<f64>() * env.bbox.height());
            let p = Point2::new(x, y);
            if !env.contains(p) {
                continue;
            }
            if points.iter().all(|&q| p.dist2(q) >= p_min2) {
                points.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(NetworkError::PlacementExhausted {
                placed: points.len(),
                requested: gp.n_neurons,
                attempts: ATTEMPTS_PER_POINT,
            });
        }
    }
    Ok(points)
}

/// Connect every pair whose squared distance lies strictly inside
/// (d_min^2, d_max^2). Adjacency is symmetric by construction and carries no
/// self-edges.
pub fn build_annulus_graph(
    positions: Vec<Point2>,
    d_min: f64,
    d_max: f64,
    environment: Environment,
) -> SpatialNetwork {
    let n = positions.len();
    let (lo, hi) = (d_min * d_min, d_max * d_max);
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = positions[i].dist2(positions[j]);
            if lo < d2 && d2 < hi {
                adjacency[i].push(NodeId(j as u32));
                adjacency[j].push(NodeId(i as u32));
            }
        }
    }
    SpatialNetwork::from_parts(positions, adjacency, environment)
}

/// Generate positions and the annulus graph in one step.
pub fn generate_network(env: &Environment, gp: &GenParams) -> Result<SpatialNetwork, NetworkError> {
    let positions = generate_positions(env, gp)?;
    Ok(build_annulus_graph(positions, gp.d_min, gp.d_max, env.clone()))
}

/// How a source or target node is selected on a generated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodePick {
    /// Node nearest to a point (ties go to the lowest id).
    Near(Point2),
    /// Explicit node id.
    Id(NodeId),
}

impl NodePick {
    fn resolve(self, net: &SpatialNetwork) -> Result<NodeId, NetworkError> {
        match self {
            NodePick::Near(p) => Ok(pick_node_near(net, p)),
            NodePick::Id(id) => {
                if id.index() < net.len() {
                    Ok(id)
                } else {
                    Err(NetworkError::InvalidParams(format!(
                        "node id {id} out of range (n = {})",
                        net.len()
                    )))
                }
            }
        }
    }
}

/// Outcome of [`generate_reachable`]: the network, resolved endpoints, and
/// the seed that finally produced a connected instance.
#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub net: SpatialNetwork,
    pub source: NodeId,
    pub targets: Vec<NodeId>,
    pub requested_seed: u64,
    pub used_seed: u64,
    pub retries: u64,
}

/// Generate a network on which every target is reachable from the source,
/// bumping the seed by one (up to [`REACHABILITY_RETRIES`]) until that holds.
pub fn generate_reachable(
    env: &Environment,
    gp: &GenParams,
    source: NodePick,
    targets: &[NodePick],
) -> Result<GeneratedNetwork, NetworkError> {
    if targets.is_empty() {
        return Err(NetworkError::InvalidParams("no targets given".into()));
    }
    for retry in 0..=REACHABILITY_RETRIES {
        let seed = gp.seed.wrapping_add(retry);
        let attempt = GenParams { seed, ..*gp };
        let net = generate_network(env, &attempt)?;
        let source_id = source.resolve(&net)?;
        let target_ids: Vec<NodeId> = targets
            .iter()
            .map(|t| t.resolve(&net))
            .collect::<Result<_, _>>()?;
        let dist = bfs_distances(&net, source_id);
        if target_ids.iter().all(|t| dist[t.index()].is_some()) {
            return Ok(GeneratedNetwork {
                net,
                source: source_id,
                targets: target_ids,
                requested_seed: gp.seed,
                used_seed: seed,
                retries: retry,
            });
        }
    }
    Err(NetworkError::RetriesExhausted {
        first_seed: gp.seed,
        attempts: REACHABILITY_RETRIES + 1,
    })
}

// ============================================================================
// Oracles
// ============================================================================

/// Hop distances from `root` over arbitrary adjacency lists; `None` marks
/// unreachable nodes.
pub fn bfs_on(adjacency: &[Vec<NodeId>], root: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; adjacency.len()];
    dist[root.index()] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.index()].expect("visited");
        for &v in &adjacency[u.index()] {
            if dist[v.index()].is_none() {
                dist[v.index()] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Hop distances from `root` on a spatial network.
pub fn bfs_distances(net: &SpatialNetwork, root: NodeId) -> Vec<Option<u32>> {
    bfs_on(net.adjacency(), root)
}

/// Adjacency with every edge reversed.
pub fn reverse_adjacency(adjacency: &[Vec<NodeId>]) -> Vec<Vec<NodeId>> {
    let mut rev = vec![Vec::new(); adjacency.len()];
    for (u, list) in adjacency.iter().enumerate() {
        for &v in list {
            rev[v.index()].push(NodeId(u as u32));
        }
    }
    for list in &mut rev {
        list.sort_unstable();
    }
    rev
}

/// All nodes lying on at least one shortest path from `source` to `target`:
/// exactly those v with d(source, v) + d(v, target) = d(source, target).
pub fn shortest_path_node_set(
    net: &SpatialNetwork,
    source: NodeId,
    target: NodeId,
) -> Result<BTreeSet<NodeId>, NetworkError> {
    shortest_path_node_set_on(net.adjacency(), source, target)
}

/// [`shortest_path_node_set`] over raw adjacency lists.
pub fn shortest_path_node_set_on(
    adjacency: &[Vec<NodeId>],
    source: NodeId,
    target: NodeId,
) -> Result<BTreeSet<NodeId>, NetworkError> {
    let from_source = bfs_on(adjacency, source);
    let to_target = bfs_on(&reverse_adjacency(adjacency), target);
    let total = from_source[target.index()].ok_or(NetworkError::Unreachable {
        from: source,
        to: target,
    })?;
    Ok((0..adjacency.len() as u32)
        .map(NodeId)
        .filter(|v| {
            matches!(
                (from_source[v.index()], to_target[v.index()]),
                (Some(ds), Some(dt)) if ds + dt == total
            )
        })
        .collect())
}

/// Node minimizing Euclidean distance to `p`; ties break to the lowest id.
pub fn pick_node_near(net: &SpatialNetwork, p: Point2) -> NodeId {
    assert!(!net.is_empty(), "pick_node_near on empty network");
    let mut best = NodeId(0);
    let mut best_d2 = net.position(best).dist2(p);
    for v in net.node_ids().skip(1) {
        let d2 = net.position(v).dist2(p);
        if d2 < best_d2 {
            best = v;
            best_d2 = d2;
        }
    }
    best
}

// ============================================================================
// Synthetic topologies and the network file
// ============================================================================

/// Path graph 0 - 1 - ... - (n-1), laid out on a horizontal line.
pub fn path_graph(n: usize) -> SpatialNetwork {
    assert!(n >= 2);
    let spacing = 1.0 / (n as f64 - 1.0);
    let positions = (0..n)
        .map(|i| Point2::new(canon_f64(i as f64 * spacing), 0.5))
        .collect();
    let adjacency = (0..n)
        .map(|i| {
            let mut list = Vec::new();
            if i > 0 {
                list.push(NodeId((i - 1) as u32));
            }
            if i + 1 < n {
                list.push(NodeId((i + 1) as u32));
            }
            list
        })
        .collect();
    SpatialNetwork::from_parts(positions, adjacency, Environment::square())
}

/// 4-neighbor grid graph of `w` x `h` nodes; node (x, y) has id y*w + x.
pub fn grid_graph(w: usize, h: usize) -> SpatialNetwork {
    assert!(w >= 2 && h >= 2);
    let id = |x: usize, y: usize| NodeId((y * w + x) as u32);
    let mut positions = Vec::with_capacity(w * h);
    let mut adjacency = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            positions.push(Point2::new(
                canon_f64(x as f64 / (w as f64 - 1.0)),
                canon_f64(y as f64 / (h as f64 - 1.0)),
            ));
            let mut list = Vec::new();
            if x > 0 {
                list.push(id(x - 1, y));
            }
            if x + 1 < w {
                list.push(id(x + 1, y));
            }
            if y > 0 {
                list.push(id(x, y - 1));
            }
            if y + 1 < h {
                list.push(id(x, y + 1));
            }
            adjacency.push(list);
        }
    }
    SpatialNetwork::from_parts(positions, adjacency, Environment::square())
}

/// Build the `network.json` document: `{seed, gen_params, positions, edges}`
/// with directed edges sorted ascending.
pub fn network_json(net: &SpatialNetwork, gp: &GenParams, used_seed: u64) -> serde_json::Value {
    let positions: Vec<[f64; 2]> = net.positions().iter().map(|p| [p.x, p.y]).collect();
    let edges: Vec<[u32; 2]> = net.edges().iter().map(|&(u, v)| [u.0, v.0]).collect();
    serde_json::json!({
        "seed": used_seed,
        "gen_params": gp,
        "positions": positions,
        "edges": edges,
    })
}

/// Rebuild a network from a `network.json` document. The environment is not
/// stored in the file; verification only needs positions and adjacency.
pub fn network_from_json(value: &serde_json::Value) -> Result<SpatialNetwork, NetworkError> {
    let positions: Vec<[f64; 2]> =
        serde_json::from_value(value["positions"].clone()).map_err(|e| {
            NetworkError::InvalidParams(format!("bad positions in network file: {e}"))
        })?;
    let edges: Vec<[u32; 2]> = serde_json::from_value(value["edges"].clone())
        .map_err(|e| NetworkError::InvalidParams(format!("bad edges in network file: {e}")))?;
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for [u, v] in edges {
        if u as usize >= n || v as usize >= n {
            return Err(NetworkError::InvalidParams(
                "edge endpoint out of range in network file".into(),
            ));
        }
        adjacency[u as usize].push(NodeId(v));
    }
    Ok(SpatialNetwork::from_parts(
        positions
            .into_iter()
            .map(|[x, y]| Point2::new(x, y))
            .collect(),
        adjacency,
        Environment::square(),
    ))
}
