//! Networks, flows, candidate paths and the feasibility/objective checks
//! every solver in the crate is measured against.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PfarError, Result};

pub type NodeId = usize;
/// Position of an edge in [`Network::edges`].
pub type EdgeId = usize;

pub const DEFAULT_HEADER_BITS: u32 = 32;
pub const DEFAULT_PRIORITY: u64 = 1;

/// A directed link `src -> dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Edge { src, dst }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.src, self.dst)
    }
}

/// Directed graph with positive integer capacities.
///
/// Edges are kept sorted by `(src, dst)`, so an [`EdgeId`] is also the
/// edge's rank in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
    capacity: Vec<u64>,
    index: HashMap<Edge, EdgeId>,
    successors: Vec<Vec<(NodeId, EdgeId)>>,
}

impl Network {
    pub fn new<I>(node_count: usize, links: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, u64)>,
    {
        let mut links: Vec<(Edge, u64)> = links.into_iter().collect();
        for &(edge, cap) in &links {
            if edge.src >= node_count || edge.dst >= node_count {
                return Err(PfarError::edge_out_of_range(edge, node_count));
            }
            if edge.src == edge.dst {
                return Err(PfarError::SelfLoop { src: edge.src, dst: edge.dst });
            }
            if cap == 0 {
                return Err(PfarError::ZeroCapacity { src: edge.src, dst: edge.dst });
            }
        }
        links.sort_by_key(|&(edge, _)| edge);
        if let Some(w) = links.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PfarError::DuplicateEdge { src: w[0].0.src, dst: w[0].0.dst });
        }

        let edges: Vec<Edge> = links.iter().map(|&(e, _)| e).collect();
        let capacity = links.iter().map(|&(_, c)| c).collect();
        let index = edges.iter().enumerate().map(|(id, &e)| (e, id)).collect();
        let mut successors = vec![Vec::new(); node_count];
        // edges are sorted, so each successor list comes out sorted by dst
        for (id, e) in edges.iter().enumerate() {
            successors[e.src].push((e.dst, id));
        }
        Ok(Network { node_count, edges, capacity, index, successors })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    pub fn capacity(&self, id: EdgeId) -> u64 {
        self.capacity[id]
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacity
    }

    pub fn edge_id(&self, edge: Edge) -> Option<EdgeId> {
        self.index.get(&edge).copied()
    }

    pub fn capacity_of(&self, edge: Edge) -> Option<u64> {
        self.edge_id(edge).map(|id| self.capacity[id])
    }

    /// Outgoing `(neighbor, edge)` pairs of `node`, ascending by neighbor.
    pub fn successors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.successors[node]
    }

    /// Total capacity of the links leaving `node`.
    pub fn out_capacity(&self, node: NodeId) -> u64 {
        self.successors[node].iter().map(|&(_, id)| self.capacity[id]).sum()
    }

    /// True iff every node reaches every other node along directed edges.
    pub fn is_connected(&self) -> bool {
        if self.node_count <= 1 {
            return true;
        }
        let mut predecessors = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            predecessors[e.dst].push(e.src);
        }
        let forward = |n: NodeId| self.successors[n].iter().map(|&(m, _)| m).collect::<Vec<_>>();
        let backward = |n: NodeId| predecessors[n].clone();
        reaches_all(self.node_count, forward) && reaches_all(self.node_count, backward)
    }
}

fn reaches_all(node_count: usize, next: impl Fn(NodeId) -> Vec<NodeId>) -> bool {
    let mut seen = vec![false; node_count];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(n) = queue.pop_front() {
        for m in next(n) {
            if !seen[m] {
                seen[m] = true;
                count += 1;
                queue.push_back(m);
            }
        }
    }
    count == node_count
}

/// Header-to-priority table with a fallback for unlisted headers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityFn {
    table: HashMap<u64, u64>,
    default: u64,
}

impl Default for PriorityFn {
    fn default() -> Self {
        PriorityFn { table: HashMap::new(), default: DEFAULT_PRIORITY }
    }
}

impl PriorityFn {
    pub fn new(default: u64) -> Self {
        PriorityFn { table: HashMap::new(), default }
    }

    pub fn with_entry(mut self, header: u64, priority: u64) -> Self {
        self.table.insert(header, priority);
        self
    }

    pub fn insert(&mut self, header: u64, priority: u64) {
        self.table.insert(header, priority);
    }

    pub fn lookup(&self, header: u64) -> u64 {
        self.table.get(&header).copied().unwrap_or(self.default)
    }

    pub fn default_priority(&self) -> u64 {
        self.default
    }

    /// Table entries sorted by header.
    pub fn entries(&self) -> Vec<(u64, u64)> {
        let mut entries: Vec<_> = self.table.iter().map(|(&h, &p)| (h, p)).collect();
        entries.sort_unstable();
        entries
    }
}

/// A bandwidth demand between two nodes.
///
/// `priority`, when set, overrides the header lookup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub bandwidth: u64,
    pub header: u64,
    pub priority: Option<u64>,
}

impl Flow {
    pub fn new(src: NodeId, dst: NodeId, bandwidth: u64, header: u64) -> Self {
        Flow { src, dst, bandwidth, header, priority: None }
    }

    pub fn with_priority(mut self, priority: u64) -> Self {
        self.priority = Some(priority);
        self
    }
}

/// A sequence of directed edges. The empty path stands for DROP.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    edges: Vec<Edge>,
}

impl Path {
    pub fn drop_path() -> Self {
        Path { edges: Vec::new() }
    }

    pub fn from_edges(edges: Vec<Edge>) -> Self {
        Path { edges }
    }

    /// Builds the path visiting `nodes` in order. Fewer than two nodes
    /// yields the empty path.
    pub fn from_nodes(nodes: &[NodeId]) -> Self {
        Path { edges: nodes.windows(2).map(|w| Edge::new(w[0], w[1])).collect() }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Visited nodes; only meaningful for chained paths.
    pub fn nodes(&self) -> Vec<NodeId> {
        match self.edges.first() {
            None => Vec::new(),
            Some(first) => std::iter::once(first.src).chain(self.edges.iter().map(|e| e.dst)).collect(),
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.edges.is_empty() {
            return f.write_str("DROP");
        }
        for e in &self.edges {
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// True iff `path` is DROP, or a simple chained path from `flow.src` to
/// `flow.dst` over edges of `network`.
pub fn validate_path(network: &Network, flow: &Flow, path: &Path) -> bool {
    let edges = path.edges();
    let (Some(first), Some(last)) = (edges.first(), edges.last()) else {
        return true;
    };
    if first.src != flow.src || last.dst != flow.dst {
        return false;
    }
    if edges.windows(2).any(|w| w[0].dst != w[1].src) {
        return false;
    }
    if edges.iter().any(|&e| network.edge_id(e).is_none()) {
        return false;
    }
    let mut seen = vec![false; network.node_count()];
    path.nodes().into_iter().all(|n| !std::mem::replace(&mut seen[n], true))
}

/// A network, an ordered flow list and, once attached, the candidate paths
/// of every flow.
#[derive(Clone, Debug, PartialEq)]
pub struct PfarInstance {
    network: Network,
    flows: Vec<Flow>,
    priorities: PriorityFn,
    header_bits: u32,
    max_path_len: usize,
    flow_priority: Vec<u64>,
    paths: Option<Vec<Vec<Path>>>,
    path_edges: Vec<Vec<Vec<EdgeId>>>,
}

impl PfarInstance {
    pub fn new(network: Network, flows: Vec<Flow>, priorities: PriorityFn, max_path_len: usize) -> Result<Self> {
        Self::with_header_bits(network, flows, priorities, max_path_len, DEFAULT_HEADER_BITS)
    }

    pub fn with_header_bits(
        network: Network,
        flows: Vec<Flow>,
        priorities: PriorityFn,
        max_path_len: usize,
        header_bits: u32,
    ) -> Result<Self> {
        if max_path_len == 0 {
            return Err(PfarError::ZeroPathLength);
        }
        let node_count = network.node_count();
        for (i, f) in flows.iter().enumerate() {
            for node in [f.src, f.dst] {
                if node >= node_count {
                    return Err(PfarError::NodeOutOfRange { node, node_count });
                }
            }
            if f.src == f.dst {
                return Err(PfarError::SameEndpoints { flow: i, node: f.src });
            }
            if f.bandwidth == 0 {
                return Err(PfarError::ZeroBandwidth { flow: i });
            }
            if header_bits < 64 && f.header >> header_bits != 0 {
                return Err(PfarError::HeaderTooWide { header: f.header, bits: header_bits });
            }
        }
        let flow_priority = flows.iter().map(|f| f.priority.unwrap_or_else(|| priorities.lookup(f.header))).collect();
        Ok(PfarInstance {
            network,
            flows,
            priorities,
            header_bits,
            max_path_len,
            flow_priority,
            paths: None,
            path_edges: Vec::new(),
        })
    }

    /// Installs explicit candidate path lists after checking that every
    /// path is valid for its flow and each list is strictly increasing.
    pub fn with_paths(mut self, paths: Vec<Vec<Path>>) -> Result<Self> {
        if paths.len() != self.flows.len() {
            return Err(PfarError::PathListCount { expected: self.flows.len(), got: paths.len() });
        }
        for (i, list) in paths.iter().enumerate() {
            for (m, p) in list.iter().enumerate() {
                if p.is_empty() || !validate_path(&self.network, &self.flows[i], p) {
                    return Err(PfarError::InvalidCandidatePath { flow: i, path: m });
                }
            }
            if list.windows(2).any(|w| crate::paths::path_order(&w[0], &w[1]).is_ge()) {
                return Err(PfarError::UnorderedCandidatePaths { flow: i });
            }
        }
        self.set_paths_unchecked(paths);
        Ok(self)
    }

    pub(crate) fn set_paths_unchecked(&mut self, paths: Vec<Vec<Path>>) {
        let net = &self.network;
        self.path_edges = paths
            .iter()
            .map(|list| {
                list.iter()
                    .map(|p| p.edges().iter().map(|&e| net.edge_id(e).expect("path edge in network")).collect())
                    .collect()
            })
            .collect();
        self.paths = Some(paths);
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn priorities(&self) -> &PriorityFn {
        &self.priorities
    }

    pub fn header_bits(&self) -> u32 {
        self.header_bits
    }

    pub fn max_path_len(&self) -> usize {
        self.max_path_len
    }

    /// Effective priority of flow `i`.
    pub fn priority(&self, i: usize) -> u64 {
        self.flow_priority[i]
    }

    /// Sum of all flow priorities: the objective if every flow were admitted.
    pub fn priority_sum(&self) -> u64 {
        self.flow_priority.iter().sum()
    }

    pub fn has_paths(&self) -> bool {
        self.paths.is_some()
    }

    pub fn paths(&self) -> Result<&[Vec<Path>]> {
        self.paths.as_deref().ok_or(PfarError::PathsNotAttached)
    }

    pub fn flow_paths(&self, i: usize) -> &[Path] {
        self.paths.as_ref().map(|p| p[i].as_slice()).unwrap_or(&[])
    }

    /// Edge ids of candidate path `m` of flow `i`.
    pub fn path_edge_ids(&self, i: usize, m: usize) -> &[EdgeId] {
        &self.path_edges[i][m]
    }

    pub(crate) fn all_path_edge_ids(&self) -> &[Vec<Vec<EdgeId>>] {
        &self.path_edges
    }

    pub fn total_path_count(&self) -> usize {
        self.path_edges.iter().map(Vec::len).sum()
    }

    fn ensure_complete(&self, assignment: &RouteAssignment) -> Result<()> {
        if assignment.len() != self.flows.len() {
            return Err(PfarError::AssignmentIncomplete { expected: self.flows.len(), got: assignment.len() });
        }
        Ok(())
    }

    fn chosen_edges(&self, i: usize, m: usize) -> Option<&[EdgeId]> {
        self.path_edges.get(i).and_then(|list| list.get(m)).map(Vec::as_slice)
    }
}

/// Per-flow routing decision: `None` is DROP, `Some(m)` selects candidate
/// path `m` (0-based) of that flow.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RouteAssignment {
    choice: Vec<Option<usize>>,
}

impl RouteAssignment {
    pub fn new(choice: Vec<Option<usize>>) -> Self {
        RouteAssignment { choice }
    }

    pub fn all_dropped(flow_count: usize) -> Self {
        RouteAssignment { choice: vec![None; flow_count] }
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn choice(&self, flow: usize) -> Option<usize> {
        self.choice[flow]
    }

    pub fn choices(&self) -> &[Option<usize>] {
        &self.choice
    }

    pub fn set(&mut self, flow: usize, choice: Option<usize>) {
        self.choice[flow] = choice;
    }

    pub fn admitted(&self) -> usize {
        self.choice.iter().filter(|c| c.is_some()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    PathInvalid { flow: usize },
    CapacityExceeded { edge: Edge, load: u64, capacity: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub valid: bool,
    pub objective: u64,
    pub violations: Vec<Violation>,
}

/// Checks path validity and link capacities; the objective is reported
/// whether or not the assignment is feasible.
pub fn check_solution(instance: &PfarInstance, assignment: &RouteAssignment) -> Result<CheckReport> {
    instance.ensure_complete(assignment)?;
    let net = instance.network();
    let mut violations = Vec::new();
    let mut load = vec![0u64; net.edge_count()];
    for (i, choice) in assignment.choices().iter().enumerate() {
        let Some(m) = *choice else { continue };
        let valid =
            instance.flow_paths(i).get(m).is_some_and(|p| !p.is_empty() && validate_path(net, &instance.flows()[i], p));
        if !valid {
            violations.push(Violation::PathInvalid { flow: i });
            continue;
        }
        for &e in instance.path_edge_ids(i, m) {
            load[e] += instance.flows()[i].bandwidth;
        }
    }
    for (id, &l) in load.iter().enumerate() {
        if l > net.capacity(id) {
            violations.push(Violation::CapacityExceeded { edge: net.edge(id), load: l, capacity: net.capacity(id) });
        }
    }
    Ok(CheckReport { valid: violations.is_empty(), objective: objective_value(instance, assignment)?, violations })
}

/// Total priority of the admitted (non-DROP) flows.
pub fn objective_value(instance: &PfarInstance, assignment: &RouteAssignment) -> Result<u64> {
    instance.ensure_complete(assignment)?;
    Ok(assignment.choices().iter().enumerate().filter(|(_, c)| c.is_some()).map(|(i, _)| instance.priority(i)).sum())
}

/// Capacity minus routed bandwidth per edge, indexed by [`EdgeId`].
/// Negative entries mark overloaded links.
pub fn residual_capacities(instance: &PfarInstance, assignment: &RouteAssignment) -> Result<Vec<i64>> {
    instance.ensure_complete(assignment)?;
    let mut residual: Vec<i64> = instance.network().capacities().iter().map(|&c| c as i64).collect();
    for (i, choice) in assignment.choices().iter().enumerate() {
        if let Some(edges) = choice.and_then(|m| instance.chosen_edges(i, m)) {
            for &e in edges {
                residual[e] -= instance.flows()[i].bandwidth as i64;
            }
        }
    }
    Ok(residual)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The four-node example network, nodes N1..N4 mapped to 0..3.
    pub fn example_network() -> Network {
        let caps = [
            ((1, 2), 2),
            ((1, 3), 2),
            ((1, 4), 2),
            ((2, 1), 1),
            ((2, 3), 3),
            ((2, 4), 1),
            ((3, 1), 3),
            ((3, 2), 2),
            ((3, 4), 1),
            ((4, 1), 4),
            ((4, 2), 2),
            ((4, 3), 2),
        ];
        Network::new(4, caps.iter().map(|&((s, d), c)| (Edge::new(s - 1, d - 1), c))).unwrap()
    }

    /// The four example flows, with priorities attached through headers.
    pub fn example_instance(max_path_len: usize) -> PfarInstance {
        let flows = vec![Flow::new(0, 1, 2, 1), Flow::new(0, 1, 2, 2), Flow::new(2, 1, 1, 3), Flow::new(0, 1, 2, 4)];
        let priorities = PriorityFn::new(0).with_entry(1, 10).with_entry(2, 1000).with_entry(3, 1).with_entry(4, 100);
        crate::paths::attach_paths(PfarInstance::new(example_network(), flows, priorities, max_path_len).unwrap())
    }

    pub fn path(nodes: &[usize]) -> Path {
        Path::from_nodes(&nodes.iter().map(|n| n - 1).collect::<Vec<_>>())
    }

    /// Index of the 1-based node sequence in flow `i`'s candidate list.
    pub fn index_of(instance: &PfarInstance, i: usize, nodes: &[usize]) -> usize {
        let p = path(nodes);
        instance.flow_paths(i).iter().position(|q| *q == p).unwrap()
    }

    /// The narrated solution: f2 direct, f4 via N3, f1 via N4, f3 dropped.
    pub fn narrated_assignment(instance: &PfarInstance) -> RouteAssignment {
        RouteAssignment::new(vec![
            Some(index_of(instance, 0, &[1, 4, 2])),
            Some(index_of(instance, 1, &[1, 2])),
            None,
            Some(index_of(instance, 3, &[1, 3, 2])),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn validate_path_examples() {
        let net = example_network();
        let f1 = Flow::new(0, 1, 2, 1);
        assert!(validate_path(&net, &f1, &path(&[1, 3, 4, 2])));
        assert!(validate_path(&net, &f1, &Path::drop_path()));
        let broken = Path::from_edges(vec![Edge::new(0, 2), Edge::new(3, 1)]);
        assert!(!validate_path(&net, &f1, &broken));
    }

    #[test]
    fn validate_path_rejects_wrong_endpoints_cycles_and_missing_edges() {
        let net = example_network();
        let f1 = Flow::new(0, 1, 2, 1);
        assert!(!validate_path(&net, &f1, &path(&[1, 3])));
        assert!(!validate_path(&net, &f1, &path(&[3, 2])));
        assert!(!validate_path(&net, &f1, &path(&[1, 3, 1, 2])));
        let sparse = Network::new(3, [(Edge::new(0, 1), 1), (Edge::new(1, 2), 1)]).unwrap();
        let f = Flow::new(0, 2, 1, 0);
        assert!(validate_path(&sparse, &f, &Path::from_nodes(&[0, 1, 2])));
        assert!(!validate_path(&sparse, &f, &Path::from_nodes(&[0, 2])));
    }

    #[test]
    fn check_narrated_solution() {
        let inst = example_instance(3);
        let report = check_solution(&inst, &narrated_assignment(&inst)).unwrap();
        assert!(report.valid, "{report:?}");
        assert_eq!(report.objective, 1110);
    }

    #[test]
    fn check_all_dropped() {
        let inst = example_instance(3);
        let report = check_solution(&inst, &RouteAssignment::all_dropped(4)).unwrap();
        assert!(report.valid);
        assert_eq!(report.objective, 0);
    }

    #[test]
    fn check_reports_overloaded_link() {
        let inst = example_instance(3);
        let direct = index_of(&inst, 0, &[1, 2]);
        let a = RouteAssignment::new(vec![Some(direct), Some(direct), None, None]);
        let report = check_solution(&inst, &a).unwrap();
        assert!(!report.valid);
        assert_eq!(
            report.violations,
            vec![Violation::CapacityExceeded { edge: Edge::new(0, 1), load: 4, capacity: 2 }]
        );
    }

    #[test]
    fn check_flags_out_of_range_path_index() {
        let inst = example_instance(3);
        let a = RouteAssignment::new(vec![Some(99), None, None, None]);
        let report = check_solution(&inst, &a).unwrap();
        assert_eq!(report.violations, vec![Violation::PathInvalid { flow: 0 }]);
        assert_eq!(report.objective, 10);
    }

    #[test]
    fn incomplete_assignment_is_an_error() {
        let inst = example_instance(3);
        let short = RouteAssignment::all_dropped(3);
        assert!(matches!(check_solution(&inst, &short), Err(PfarError::AssignmentIncomplete { .. })));
        assert!(matches!(objective_value(&inst, &short), Err(PfarError::AssignmentIncomplete { .. })));
    }

    #[test]
    fn objective_examples() {
        let inst = example_instance(3);
        assert_eq!(objective_value(&inst, &narrated_assignment(&inst)).unwrap(), 1110);
        assert_eq!(objective_value(&inst, &RouteAssignment::all_dropped(4)).unwrap(), 0);
        let all = RouteAssignment::new(vec![Some(0); 4]);
        assert_eq!(objective_value(&inst, &all).unwrap(), 1111);
    }

    #[test]
    fn residual_examples() {
        let inst = example_instance(3);
        let caps: Vec<i64> = inst.network().capacities().iter().map(|&c| c as i64).collect();
        assert_eq!(residual_capacities(&inst, &RouteAssignment::all_dropped(4)).unwrap(), caps);

        let direct = index_of(&inst, 0, &[1, 2]);
        let n1n2 = inst.network().edge_id(Edge::new(0, 1)).unwrap();
        let one = RouteAssignment::new(vec![None, Some(direct), None, None]);
        let mut expected = caps.clone();
        expected[n1n2] = 0;
        assert_eq!(residual_capacities(&inst, &one).unwrap(), expected);

        let two = RouteAssignment::new(vec![Some(direct), Some(direct), None, None]);
        expected[n1n2] = -2;
        assert_eq!(residual_capacities(&inst, &two).unwrap(), expected);
    }

    #[test]
    fn connectivity() {
        assert!(example_network().is_connected());
        assert!(!Network::new(2, [(Edge::new(0, 1), 1)]).unwrap().is_connected());
        assert!(Network::new(1, []).unwrap().is_connected());
    }

    #[test]
    fn network_rejects_bad_links() {
        assert!(matches!(Network::new(2, [(Edge::new(0, 0), 1)]), Err(PfarError::SelfLoop { .. })));
        assert!(matches!(Network::new(2, [(Edge::new(0, 1), 0)]), Err(PfarError::ZeroCapacity { .. })));
        assert!(matches!(
            Network::new(2, [(Edge::new(0, 1), 1), (Edge::new(0, 1), 2)]),
            Err(PfarError::DuplicateEdge { .. })
        ));
        assert!(matches!(Network::new(2, [(Edge::new(0, 2), 1)]), Err(PfarError::NodeOutOfRange { node: 2, .. })));
    }

    #[test]
    fn instance_rejects_bad_flows() {
        let net = example_network();
        let same = vec![Flow::new(1, 1, 1, 0)];
        assert!(matches!(
            PfarInstance::new(net.clone(), same, PriorityFn::default(), 3),
            Err(PfarError::SameEndpoints { flow: 0, node: 1 })
        ));
        let zero = vec![Flow::new(0, 1, 0, 0)];
        assert!(matches!(
            PfarInstance::new(net.clone(), zero, PriorityFn::default(), 3),
            Err(PfarError::ZeroBandwidth { flow: 0 })
        ));
        let wide = vec![Flow::new(0, 1, 1, 1 << 40)];
        assert!(matches!(PfarInstance::new(net, wide, PriorityFn::default(), 3), Err(PfarError::HeaderTooWide { .. })));
    }

    #[test]
    fn priority_lookup_falls_back_to_default() {
        let table = PriorityFn::default().with_entry(0b1010, 7);
        assert_eq!(table.lookup(0b1010), 7);
        assert_eq!(table.lookup(0b1111), DEFAULT_PRIORITY);
        let flows = vec![Flow::new(0, 1, 1, 0b1010), Flow::new(0, 1, 1, 3), Flow::new(0, 1, 1, 3).with_priority(42)];
        let inst = PfarInstance::new(example_network(), flows, table, 3).unwrap();
        assert_eq!((inst.priority(0), inst.priority(1), inst.priority(2)), (7, 1, 42));
    }

    #[test]
    fn with_paths_validates_lists() {
        let inst = PfarInstance::new(example_network(), vec![Flow::new(0, 1, 1, 0)], PriorityFn::default(), 3).unwrap();
        let ok = inst.clone().with_paths(vec![vec![path(&[1, 2]), path(&[1, 3, 2])]]);
        assert!(ok.is_ok());
        let bad = inst.clone().with_paths(vec![vec![path(&[1, 3])]]);
        assert!(matches!(bad, Err(PfarError::InvalidCandidatePath { flow: 0, path: 0 })));
        let unordered = inst.with_paths(vec![vec![path(&[1, 3, 2]), path(&[1, 2])]]);
        assert!(matches!(unordered, Err(PfarError::UnorderedCandidatePaths { flow: 0 })));
    }
}
