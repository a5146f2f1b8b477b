//! Benchmark instance family: double-star topologies with a first-level
//! bus, a small mesh in the first sub-cluster and extra root-attached
//! leaves, loaded with enough flows to congest every node.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PfarError, Result};
use crate::network::{Edge, Flow, Network, NodeId, PfarInstance, PriorityFn};
use crate::paths::attach_paths;

/// Link capacity ceilings per level, in integer bandwidth units
/// (30/10/2 Mbps expressed in kbps).
pub const L0: u64 = 30_000;
pub const L1: u64 = 10_000;
pub const L2: u64 = 2_000;

pub const PRIORITY_LEVELS: [u64; 5] = [1, 10, 100, 1000, 10000];
pub const PRIORITY_WEIGHTS: [f64; 5] = [0.50, 0.27, 0.13, 0.07, 0.03];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopoConfig {
    pub nodes: usize,
    pub l0: u64,
    pub l1: u64,
    pub l2: u64,
    pub seed: u64,
}

impl TopoConfig {
    pub fn new(nodes: usize, seed: u64) -> Self {
        TopoConfig { nodes, l0: L0, l1: L1, l2: L2, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(PfarError::TooFewNodes(self.nodes));
        }
        if !(self.l0 >= self.l1 && self.l1 >= self.l2 && self.l2 >= 10) {
            return Err(PfarError::InvalidConfig(format!(
                "need l0 >= l1 >= l2 >= 10, got {}/{}/{}",
                self.l0, self.l1, self.l2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowGenConfig {
    pub priority_levels: Vec<u64>,
    pub priority_weights: Vec<f64>,
    pub seed: u64,
}

impl FlowGenConfig {
    pub fn new(seed: u64) -> Self {
        FlowGenConfig { priority_levels: PRIORITY_LEVELS.to_vec(), priority_weights: PRIORITY_WEIGHTS.to_vec(), seed }
    }

    fn validate(&self) -> Result<()> {
        if self.priority_levels.is_empty() || self.priority_levels.len() != self.priority_weights.len() {
            return Err(PfarError::InvalidConfig("priority levels and weights differ in length".into()));
        }
        if self.priority_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PfarError::InvalidConfig("priority levels must be strictly increasing".into()));
        }
        let sum: f64 = self.priority_weights.iter().sum();
        if self.priority_weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(PfarError::InvalidConfig("priority weights must be non-negative and sum to 1".into()));
        }
        Ok(())
    }
}

/// Facts about a generated instance that are not part of the model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenMeta {
    pub generator: String,
    pub nodes: usize,
    pub children_per_node: usize,
    pub l0: u64,
    pub l1: u64,
    pub l2: u64,
    pub topo_seed: u64,
    pub flow_seed: u64,
    /// Mesh links are added for the first sub-cluster only, clipped to
    /// existing nodes.
    pub mesh_rule: String,
    /// Whether every flow fits the smallest link of the network.
    pub flows_fit_smallest_link: bool,
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub instance: PfarInstance,
    pub meta: GenMeta,
}

/// Largest `n` with `n^2 + n + 1 <= nodes`, i.e. the floor of the positive
/// root of `nodes = n^2 + n + 1`.
pub fn children_per_node(nodes: usize) -> usize {
    let mut n = 0;
    while (n + 1) * (n + 1) + (n + 1) < nodes {
        n += 1;
    }
    n
}

struct LinkSet {
    links: Vec<(Edge, u64)>,
    seen: std::collections::HashSet<Edge>,
    nodes: usize,
}

impl LinkSet {
    fn contains(&self, src: NodeId, dst: NodeId) -> bool {
        self.seen.contains(&Edge::new(src, dst))
    }

    fn add(&mut self, src: NodeId, dst: NodeId, cap: u64) {
        debug_assert!(src < self.nodes && dst < self.nodes && src != dst);
        if self.seen.insert(Edge::new(src, dst)) {
            self.links.push((Edge::new(src, dst), cap.max(1)));
        }
    }
}

pub fn gen_topology(cfg: &TopoConfig) -> Result<Network> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = move || rng.gen_range(1..=10u64);
    let n_nodes = cfg.nodes;
    let n = children_per_node(n_nodes);
    let mut g = LinkSet { links: Vec::new(), seen: Default::default(), nodes: n_nodes };

    // root to first level
    for i in 1..=n {
        g.add(0, i, cfg.l0 / draw());
        g.add(i, 0, cfg.l0 / (2 * draw()));
    }
    // bus across the first level
    for i in 1..n {
        g.add(i, i + 1, cfg.l1 / draw());
        g.add(i + 1, i, cfg.l1 / draw());
    }
    // first level to second level
    for i in 1..=n {
        for j in i * n + 1..=i * n + n {
            g.add(i, j, cfg.l1 / draw());
            g.add(j, i, cfg.l1 / (2 * draw()));
        }
    }
    // mesh for the first sub-cluster
    for j in n + 1..=2 * n {
        for k in 2..=3 {
            if j == k || j >= n_nodes || k >= n_nodes || g.contains(j, k) || g.contains(k, j) {
                continue;
            }
            g.add(j, k, cfg.l2 / draw());
            g.add(k, j, cfg.l2 / draw());
        }
    }
    // remaining nodes hang off the root
    for i in n * n + n + 1..n_nodes {
        g.add(0, i, cfg.l0 / draw());
        g.add(i, 0, cfg.l0 / (2 * draw()));
    }

    Network::new(n_nodes, g.links)
}

/// Bandwidth interval for one flow given the divisor draw `r`.
fn bandwidth_range(l2: u64, r: u64) -> (u64, u64) {
    let low = (l2 / (2 * r)).max(1);
    let high = (l2 / r).saturating_sub(1).max(1);
    (low, high)
}

/// Generates flows node by node until each node's demand exceeds its
/// outgoing capacity. Flow `k` gets header `k`; priorities are inlined.
pub fn gen_flows(network: &Network, l2: u64, cfg: &FlowGenConfig) -> Result<Vec<Flow>> {
    cfg.validate()?;
    let nodes = network.node_count();
    if nodes < 2 {
        return Err(PfarError::TooFewNodes(nodes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights = WeightedIndex::new(&cfg.priority_weights)
        .map_err(|e| PfarError::InvalidConfig(format!("priority weights: {e}")))?;
    let mut flows = Vec::new();
    for src in 0..nodes {
        let out = network.out_capacity(src);
        if out == 0 {
            continue;
        }
        let mut demand = 0u64;
        while demand <= out {
            let mut dst = rng.gen_range(0..nodes - 1);
            if dst >= src {
                dst += 1;
            }
            let r = rng.gen_range(1..=10u64);
            let (low, high) = bandwidth_range(l2, r);
            let bandwidth = if low > high { low } else { rng.gen_range(low..=high) };
            let priority = cfg.priority_levels[weights.sample(&mut rng)];
            let header = flows.len() as u64;
            flows.push(Flow::new(src, dst, bandwidth, header).with_priority(priority));
            demand += bandwidth;
        }
    }
    Ok(flows)
}

/// Topology, flows and candidate paths. The flow stream is seeded with
/// `flow_cfg.seed`, independent of the topology seed.
pub fn gen_instance(topo: &TopoConfig, flow_cfg: &FlowGenConfig, max_path_len: usize) -> Result<GeneratedInstance> {
    let network = gen_topology(topo)?;
    let flows = gen_flows(&network, topo.l2, flow_cfg)?;
    let smallest_link = network.capacities().iter().copied().min().unwrap_or(0);
    let flows_fit_smallest_link = flows.iter().all(|f| f.bandwidth <= smallest_link);
    let meta = GenMeta {
        generator: "double-star".into(),
        nodes: topo.nodes,
        children_per_node: children_per_node(topo.nodes),
        l0: topo.l0,
        l1: topo.l1,
        l2: topo.l2,
        topo_seed: topo.seed,
        flow_seed: flow_cfg.seed,
        mesh_rule: "first-subcluster-clipped".into(),
        flows_fit_smallest_link,
    };
    let instance = PfarInstance::new(network, flows, PriorityFn::default(), max_path_len)?;
    Ok(GeneratedInstance { instance: attach_paths(instance), meta })
}

/// Seeds for the `k`-th instance of a sweep; the flow seed is derived from
/// the topology seed.
pub fn derived_seeds(base: u64, nodes: usize, k: u64) -> (u64, u64) {
    let topo = base.wrapping_mul(1_000_003).wrapping_add((nodes as u64) << 20).wrapping_add(k);
    (topo, topo ^ 0x9e37_79b9_7f4a_7c15)
}
