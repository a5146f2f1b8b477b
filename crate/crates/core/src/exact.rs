//! Exact solvers: depth-first branch-and-bound, an exhaustive oracle and
//! the strict (class-by-class) prioritization variant.
//!
//! The branch-and-bound decides flows by non-increasing priority, smaller
//! bandwidth first within a priority, and tries each still-fitting
//! candidate path in enumeration order with DROP last. A node is pruned when
//! the smaller of two upper bounds cannot beat the incumbent:
//!
//! * the priority sum of undecided flows that still have a fitting path;
//! * a Lagrangian bound with link multipliers `l_e >= 0`. Each undecided
//!   flow contributes `max(0, max_m p_i - b_i * l(m))` over its fitting
//!   paths, except that flows grouped under a redundant knapsack constraint
//!   (see [`knapsack_groups`]) are packed optimally against it. The bound
//!   is valid for any multipliers; they are tuned by subgradient steps at
//!   the root, from scratch whenever the search enters a new priority
//!   class, and with a few warm-started steps at every other node.
//!
//! Flows with equal endpoints and priority are interchangeable up to
//! bandwidth, so once such a flow is dropped the search never admits a later
//! one that is at least as large (swapping them keeps the objective and
//! frees capacity). This keeps at least one optimum in the search space.
//!
//! Each expanded node also runs a greedy completion to improve the
//! incumbent early.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{PfarError, Result};
use crate::network::{check_solution, objective_value, EdgeId, PfarInstance, RouteAssignment};

/// Hard cap on the number of brute-force leaves.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

const ROOT_SUBGRADIENT_ITERS: usize = 300;
const NODE_SUBGRADIENT_ITERS: usize = 10;
const LIMIT_CHECK_INTERVAL: u64 = 256;
const BOUND_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Skip dominated admissions of interchangeable flows (see module docs).
    pub symmetry_breaking: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { time_limit: None, node_limit: None, symmetry_breaking: true }
    }
}

impl ExactConfig {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = Some(limit);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.time_limit.is_some_and(|t| t.is_zero()) || self.node_limit == Some(0) {
            return Err(PfarError::InvalidConfig("solver limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub nodes_explored: u64,
    #[serde(skip)]
    pub elapsed: Duration,
    /// Best known upper bound on the optimum.
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub assignment: RouteAssignment,
    pub objective: u64,
    pub proven_optimal: bool,
    pub stats: SolveStats,
}

/// Tries every per-flow choice (each candidate path or DROP) and keeps the
/// best feasible one. Partial assignments that already overload a link are
/// abandoned, since no extension can repair them.
pub fn solve_brute_force(instance: &PfarInstance) -> Result<SolveResult> {
    let started = Instant::now();
    let paths = instance.paths()?;
    let combinations: f64 = paths.iter().map(|p| (p.len() + 1) as f64).product();
    if combinations > BRUTE_FORCE_LIMIT {
        return Err(PfarError::InstanceTooLarge { combinations, limit: BRUTE_FORCE_LIMIT });
    }

    struct Brute<'a> {
        inst: &'a PfarInstance,
        load: Vec<u64>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_value: Option<u64>,
        leaves: u64,
    }

    impl Brute<'_> {
        fn visit(&mut self, i: usize) {
            if i == self.current.len() {
                self.leaves += 1;
                let value: u64 = (0..i).filter(|&k| self.current[k].is_some()).map(|k| self.inst.priority(k)).sum();
                if self.best_value.is_none_or(|b| value > b) {
                    self.best_value = Some(value);
                    self.best.clone_from(&self.current);
                }
                return;
            }
            let bw = self.inst.flows()[i].bandwidth;
            let net = self.inst.network();
            self.current[i] = None;
            self.visit(i + 1);
            for m in 0..self.inst.flow_paths(i).len() {
                let edges = self.inst.path_edge_ids(i, m);
                for &e in edges {
                    self.load[e] += bw;
                }
                if edges.iter().all(|&e| self.load[e] <= net.capacity(e)) {
                    self.current[i] = Some(m);
                    self.visit(i + 1);
                }
                for &e in edges {
                    self.load[e] -= bw;
                }
            }
            self.current[i] = None;
        }
    }

    let n = instance.flow_count();
    let mut brute = Brute {
        inst: instance,
        load: vec![0; instance.network().edge_count()],
        current: vec![None; n],
        best: vec![None; n],
        best_value: None,
        leaves: 0,
    };
    brute.visit(0);
    let assignment = RouteAssignment::new(brute.best);
    debug_assert!(check_solution(instance, &assignment)?.valid);
    let objective = objective_value(instance, &assignment)?;
    Ok(SolveResult {
        assignment,
        objective,
        proven_optimal: true,
        stats: SolveStats { nodes_explored: brute.leaves, elapsed: started.elapsed(), bound: objective },
    })
}

/// Branch-and-bound over all flows of the instance.
pub fn solve_exact(instance: &PfarInstance, cfg: &ExactConfig) -> Result<SolveResult> {
    instance.paths()?;
    cfg.validate()?;
    let started = Instant::now();
    let capacity: Vec<i64> = instance.network().capacities().iter().map(|&c| c as i64).collect();
    let flows: Vec<usize> = (0..instance.flow_count()).collect();
    let deadline = cfg.time_limit.map(|t| started + t);
    let outcome = Search::new(instance, &flows, capacity, cfg, deadline).run();
    finish(instance, outcome.choice, outcome.nodes, outcome.bound, outcome.complete, started)
}

/// Strict prioritization: priority classes are solved to optimality one at
/// a time, highest first, each on the capacity left by the classes before
/// it. No amount of lower-priority traffic can displace a higher class.
pub fn solve_strict(instance: &PfarInstance, cfg: &ExactConfig) -> Result<SolveResult> {
    instance.paths()?;
    cfg.validate()?;
    let started = Instant::now();
    let deadline = cfg.time_limit.map(|t| started + t);
    let mut classes: Vec<u64> = (0..instance.flow_count()).map(|i| instance.priority(i)).collect();
    classes.sort_unstable_by(|a, b| b.cmp(a));
    classes.dedup();

    let mut residual: Vec<i64> = instance.network().capacities().iter().map(|&c| c as i64).collect();
    let mut choice = vec![None; instance.flow_count()];
    let mut nodes = 0;
    let mut bound = 0;
    let mut complete = true;
    for class in classes {
        let members: Vec<usize> = (0..instance.flow_count()).filter(|&i| instance.priority(i) == class).collect();
        let mut class_cfg = cfg.clone();
        if let Some(limit) = cfg.node_limit {
            if nodes >= limit {
                complete = false;
                break;
            }
            class_cfg.node_limit = Some(limit - nodes);
        }
        let outcome = Search::new(instance, &members, residual.clone(), &class_cfg, deadline).run();
        nodes += outcome.nodes;
        bound += outcome.bound;
        complete &= outcome.complete;
        for &i in &members {
            if let Some(m) = outcome.choice[i] {
                choice[i] = Some(m);
                for &e in instance.path_edge_ids(i, m) {
                    residual[e] -= instance.flows()[i].bandwidth as i64;
                }
            }
        }
        if !outcome.complete {
            break;
        }
    }
    // classes skipped after a limit keep everything dropped
    finish(instance, choice, nodes, bound, complete, started)
}

fn finish(
    instance: &PfarInstance,
    choice: Vec<Option<usize>>,
    nodes: u64,
    bound: u64,
    complete: bool,
    started: Instant,
) -> Result<SolveResult> {
    let assignment = RouteAssignment::new(choice);
    debug_assert!(check_solution(instance, &assignment)?.valid);
    let objective = objective_value(instance, &assignment)?;
    Ok(SolveResult {
        assignment,
        objective,
        proven_optimal: complete,
        stats: SolveStats {
            nodes_explored: nodes,
            elapsed: started.elapsed(),
            bound: if complete { objective } else { bound.max(objective) },
        },
    })
}

struct Outcome {
    /// Indexed by instance flow; flows outside the searched subset are `None`.
    choice: Vec<Option<usize>>,
    nodes: u64,
    /// Root upper bound on the subset's optimum.
    bound: u64,
    complete: bool,
}

/// Per-flow data in branching order.
struct Item<'a> {
    flow: usize,
    priority: u64,
    bandwidth: i64,
    paths: &'a [Vec<EdgeId>],
    /// Group of interchangeable flows (same endpoints and priority).
    class: usize,
}

struct Search<'a> {
    items: Vec<Item<'a>>,
    residual: Vec<i64>,
    multipliers: Vec<f64>,
    /// Multiplier weight of each candidate path, `l(m)`, per item.
    path_weight: Vec<Vec<f64>>,
    current: Vec<Option<usize>>,
    admitted: u64,
    incumbent: Vec<Option<usize>>,
    incumbent_value: u64,
    /// Smallest bandwidth dropped so far per class of interchangeable flows.
    min_dropped: Vec<i64>,
    symmetry_breaking: bool,
    root_bound: u64,
    nodes: u64,
    node_limit: Option<u64>,
    deadline: Option<Instant>,
    aborted: bool,
    flow_count: usize,
    /// Knapsack group of each item, if any.
    group: Vec<Option<usize>>,
    /// Links whose summed residual capacity bounds each group's load.
    group_edges: Vec<Vec<EdgeId>>,
    pools: Vec<Vec<KnapsackItem>>,
    #[cfg(test)]
    trace: Option<Vec<TracePoint>>,
}

impl<'a> Search<'a> {
    fn new(
        instance: &'a PfarInstance,
        subset: &[usize],
        residual: Vec<i64>,
        cfg: &ExactConfig,
        deadline: Option<Instant>,
    ) -> Self {
        let mut order = subset.to_vec();
        order.sort_by_key(|&i| (std::cmp::Reverse(instance.priority(i)), instance.flows()[i].bandwidth, i));
        let mut classes: HashMap<(usize, usize, u64), usize> = HashMap::new();
        let items: Vec<Item<'a>> = order
            .iter()
            .map(|&i| {
                let f = &instance.flows()[i];
                let next = classes.len();
                let class = *classes.entry((f.src, f.dst, instance.priority(i))).or_insert(next);
                Item {
                    flow: i,
                    priority: instance.priority(i),
                    bandwidth: f.bandwidth as i64,
                    paths: &instance.all_path_edge_ids()[i],
                    class,
                }
            })
            .collect();
        let edges = residual.len();
        let path_weight = items.iter().map(|it| vec![0.0; it.paths.len()]).collect();
        let (group, group_edges) = knapsack_groups(instance, &items, &residual);
        Search {
            min_dropped: vec![i64::MAX; classes.len()],
            group,
            pools: vec![Vec::new(); group_edges.len()],
            group_edges,
            items,
            residual,
            multipliers: vec![0.0; edges],
            path_weight,
            current: vec![None; instance.flow_count()],
            admitted: 0,
            incumbent: vec![None; instance.flow_count()],
            incumbent_value: 0,
            symmetry_breaking: cfg.symmetry_breaking,
            root_bound: u64::MAX,
            nodes: 0,
            node_limit: cfg.node_limit,
            deadline,
            aborted: false,
            flow_count: instance.flow_count(),
            #[cfg(test)]
            trace: None,
        }
    }

    fn run(mut self) -> Outcome {
        self.seed_incumbent();
        self.tune_multipliers();
        self.root_bound = self.bound(0).min(self.trivial_bound(0));
        if self.incumbent_value < self.root_bound {
            self.dfs(0);
        } else {
            self.nodes = 1;
        }
        debug_assert_eq!(self.current, vec![None; self.flow_count]);
        Outcome { choice: self.incumbent, nodes: self.nodes, bound: self.root_bound, complete: !self.aborted }
    }

    fn fits(&self, paths: &[EdgeId], bandwidth: i64) -> bool {
        paths.iter().all(|&e| self.residual[e] >= bandwidth)
    }

    fn route(&mut self, k: usize, m: usize, sign: i64) {
        let bw = self.items[k].bandwidth * sign;
        for &e in &self.items[k].paths[m] {
            self.residual[e] -= bw;
        }
    }

    fn seed_incumbent(&mut self) {
        self.complete_greedily(0, false);
        self.complete_greedily(0, true);
    }

    /// Greedy completion of the current node in branching order. Each item
    /// takes the first fitting path, or with `priced` the fitting path of
    /// smallest multiplier weight. Replaces the incumbent if better.
    fn complete_greedily(&mut self, depth: usize, priced: bool) {
        let mut placed = Vec::new();
        let mut value = self.admitted;
        for k in depth..self.items.len() {
            if !self.admissible(k) {
                continue;
            }
            let it = &self.items[k];
            let fitting = (0..it.paths.len()).filter(|&m| self.fits(&it.paths[m], it.bandwidth));
            let pick = if priced {
                fitting.min_by(|&a, &b| self.path_weight[k][a].total_cmp(&self.path_weight[k][b]))
            } else {
                fitting.min()
            };
            if let Some(m) = pick {
                value += it.priority;
                self.route(k, m, 1);
                placed.push((k, m));
            }
        }
        for &(k, m) in &placed {
            self.route(k, m, -1);
        }
        if value > self.incumbent_value {
            self.incumbent_value = value;
            self.incumbent.clone_from(&self.current);
            for (k, m) in placed {
                self.incumbent[self.items[k].flow] = Some(m);
            }
        }
    }

    /// Whether item `k` may still be admitted below the current node.
    fn admissible(&self, k: usize) -> bool {
        !self.symmetry_breaking || self.items[k].bandwidth < self.min_dropped[self.items[k].class]
    }

    /// Priority sum of undecided items that still have a fitting path.
    fn trivial_bound(&self, depth: usize) -> u64 {
        let mut total = self.admitted;
        for k in depth..self.items.len() {
            let it = &self.items[k];
            if self.admissible(k) && it.paths.iter().any(|p| self.fits(p, it.bandwidth)) {
                total += it.priority;
            }
        }
        total
    }

    /// Lagrangian bound for the subtree below `depth`; also returns the
    /// capacity subgradient when `subgradient` is given.
    fn lagrangian(&mut self, depth: usize, mut subgradient: Option<&mut Vec<f64>>) -> f64 {
        let mut value = self.admitted as f64;
        for (e, &l) in self.multipliers.iter().enumerate() {
            value += l * self.residual[e].max(0) as f64;
        }
        if let Some(s) = subgradient.as_deref_mut() {
            s.clear();
            s.extend(self.residual.iter().map(|&r| r.max(0) as f64));
        }
        let mut pools = std::mem::take(&mut self.pools);
        pools.iter_mut().for_each(Vec::clear);
        for k in depth..self.items.len() {
            if !self.admissible(k) {
                continue;
            }
            let it = &self.items[k];
            let mut best = 0.0;
            let mut best_path = None;
            for (m, p) in it.paths.iter().enumerate() {
                let gain = it.priority as f64 - it.bandwidth as f64 * self.path_weight[k][m];
                if gain > best && self.fits(p, it.bandwidth) {
                    best = gain;
                    best_path = Some(m);
                }
            }
            let Some(m) = best_path else { continue };
            if let Some(g) = self.group[k] {
                pools[g].push(KnapsackItem { value: best, weight: it.bandwidth, item: k, path: m });
                continue;
            }
            value += best;
            if let Some(s) = subgradient.as_deref_mut() {
                for &e in &it.paths[m] {
                    s[e] -= it.bandwidth as f64;
                }
            }
        }
        let mut chosen = Vec::new();
        for (g, pool) in pools.iter_mut().enumerate() {
            if pool.is_empty() {
                continue;
            }
            let capacity = self.group_edges[g].iter().map(|&e| self.residual[e].max(0)).sum();
            value += knapsack(pool, capacity, &mut chosen);
            if let Some(s) = subgradient.as_deref_mut() {
                for &c in &chosen {
                    let KnapsackItem { item, path, weight, .. } = pool[c];
                    for &e in &self.items[item].paths[path] {
                        s[e] -= weight as f64;
                    }
                }
            }
        }
        self.pools = pools;
        value
    }

    fn bound(&mut self, depth: usize) -> u64 {
        let value = self.lagrangian(depth, None);
        (value + BOUND_EPS * value.abs().max(1.0)).floor() as u64
    }

    /// Installs new multipliers; path weights are refreshed for items from
    /// `depth` on, the only ones a bound below `depth` looks at.
    fn set_multipliers(&mut self, multipliers: Vec<f64>, depth: usize) {
        for (k, it) in self.items.iter().enumerate().skip(depth) {
            for (m, p) in it.paths.iter().enumerate() {
                self.path_weight[k][m] = p.iter().map(|&e| multipliers[e]).sum();
            }
        }
        self.multipliers = multipliers;
    }

    /// Subgradient descent on the root Lagrangian with Polyak steps towards
    /// the incumbent value. Keeps the best multipliers seen.
    fn tune_multipliers(&mut self) {
        self.tune_from_scratch(0);
    }

    /// Subgradient descent from zero multipliers on the Lagrangian below
    /// `depth`, Polyak steps towards the incumbent. Installs the best
    /// multipliers seen (possibly the ones already installed) and returns
    /// their bound.
    fn tune_from_scratch(&mut self, depth: usize) -> f64 {
        let mut best = self.lagrangian(depth, None);
        let mut best_multipliers = self.multipliers.clone();
        if depth == self.items.len() || self.residual.is_empty() {
            return best;
        }
        let target = self.incumbent_value as f64;
        self.set_multipliers(vec![0.0; self.residual.len()], depth);
        let mut step_scale = 2.0;
        let mut stale = 0;
        let mut subgradient = Vec::new();
        for _ in 0..ROOT_SUBGRADIENT_ITERS {
            let value = self.lagrangian(depth, Some(&mut subgradient));
            if value < best - 1e-9 {
                best = value;
                best_multipliers.clone_from(&self.multipliers);
                stale = 0;
            } else {
                stale += 1;
                if stale >= 15 {
                    step_scale /= 2.0;
                    stale = 0;
                }
            }
            if best < target + 1.0 || step_scale < 1e-4 {
                break;
            }
            let norm: f64 = subgradient.iter().map(|s| s * s).sum();
            if norm == 0.0 {
                break;
            }
            let step = step_scale * (value - target).max(1e-9) / norm;
            let next: Vec<f64> =
                self.multipliers.iter().zip(&subgradient).map(|(&l, &s)| (l - step * s).max(0.0)).collect();
            self.set_multipliers(next, depth);
        }
        self.set_multipliers(best_multipliers, depth);
        best
    }

    /// A few warm-started subgradient steps on the Lagrangian of the
    /// current node. Returns whether the node can be pruned; otherwise the
    /// best multipliers found stay installed for the subtree.
    fn tune_node(&mut self, depth: usize) -> bool {
        let target = self.incumbent_value as f64 + 1.0;
        let incumbent = self.incumbent_value;
        let prunes = |v: f64| (v + BOUND_EPS * v.abs().max(1.0)).floor() as u64 <= incumbent;
        let mut subgradient = Vec::new();
        let mut value = self.lagrangian(depth, Some(&mut subgradient));
        if prunes(value) {
            return true;
        }
        let mut best = value;
        let mut best_multipliers = None;
        let start = self.multipliers.clone();
        for _ in 0..NODE_SUBGRADIENT_ITERS {
            let norm: f64 = subgradient.iter().map(|s| s * s).sum();
            if norm == 0.0 {
                break;
            }
            let step = (value - target).max(1e-9) / norm;
            let next = self.multipliers.iter().zip(&subgradient).map(|(&l, &s)| (l - step * s).max(0.0)).collect();
            self.set_multipliers(next, depth);
            value = self.lagrangian(depth, Some(&mut subgradient));
            if value < best {
                best = value;
                if prunes(best) {
                    return true;
                }
                best_multipliers = Some(self.multipliers.clone());
            }
        }
        self.set_multipliers(best_multipliers.unwrap_or(start), depth);
        false
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        self.aborted = self.node_limit.is_some_and(|limit| self.nodes >= limit)
            || (self.nodes.is_multiple_of(LIMIT_CHECK_INTERVAL) && self.deadline.is_some_and(|d| Instant::now() >= d));
        self.aborted
    }

    fn dfs(&mut self, depth: usize) {
        if self.out_of_budget() {
            return;
        }
        self.nodes += 1;
        if depth == self.items.len() {
            if self.admitted > self.incumbent_value {
                self.incumbent_value = self.admitted;
                self.incumbent.clone_from(&self.current);
            }
            return;
        }
        let it = &self.items[depth];
        if !self.admissible(depth) || !it.paths.iter().any(|p| self.fits(p, it.bandwidth)) {
            self.drop_branch(depth);
            return;
        }
        let trivial = self.trivial_bound(depth);
        #[cfg(test)]
        self.record(depth, trivial);
        if trivial <= self.incumbent_value {
            return;
        }
        let saved = self.multipliers.clone();
        let class_start = depth > 0 && self.items[depth].priority != self.items[depth - 1].priority;
        if class_start {
            let value = self.tune_from_scratch(depth);
            if (value + BOUND_EPS * value.abs().max(1.0)).floor() as u64 <= self.incumbent_value {
                self.set_multipliers(saved, depth);
                return;
            }
        }
        if self.tune_node(depth) {
            self.set_multipliers(saved, depth);
            return;
        }
        self.complete_greedily(depth, true);
        self.branch(depth);
        self.set_multipliers(saved, depth);
    }

    fn drop_branch(&mut self, depth: usize) {
        let class = self.items[depth].class;
        let saved = self.min_dropped[class];
        self.min_dropped[class] = saved.min(self.items[depth].bandwidth);
        self.dfs(depth + 1);
        self.min_dropped[class] = saved;
    }

    fn branch(&mut self, depth: usize) {
        let k = depth;
        let flow = self.items[k].flow;
        for m in 0..self.items[k].paths.len() {
            if !self.fits(&self.items[k].paths[m], self.items[k].bandwidth) {
                continue;
            }
            self.route(k, m, 1);
            self.current[flow] = Some(m);
            self.admitted += self.items[k].priority;
            self.dfs(depth + 1);
            self.admitted -= self.items[k].priority;
            self.current[flow] = None;
            self.route(k, m, -1);
            if self.aborted || self.incumbent_value >= self.root_bound {
                return;
            }
        }
        self.drop_branch(depth);
    }
}

/// Groups flows under redundant knapsack constraints. Every admitted flow
/// loads each link on all of its candidate paths, the in-links of its
/// destination and the out-links of its source by its full bandwidth, so the
/// bandwidth of any subset of such flows is bounded by the (summed) residual
/// capacity of those links. Each flow joins the tightest such constraint;
/// constraints that cannot bind are skipped.
fn knapsack_groups(
    instance: &PfarInstance,
    items: &[Item],
    residual: &[i64],
) -> (Vec<Option<usize>>, Vec<Vec<EdgeId>>) {
    let net = instance.network();
    let mut candidates: Vec<(Vec<EdgeId>, Vec<usize>)> = Vec::new();

    let mut mandatory: Vec<Vec<usize>> = vec![Vec::new(); residual.len()];
    let mut count = vec![0usize; residual.len()];
    for (k, it) in items.iter().enumerate() {
        if it.paths.is_empty() {
            continue;
        }
        let mut touched = Vec::new();
        for p in it.paths {
            for &e in p {
                if count[e] == 0 {
                    touched.push(e);
                }
                count[e] += 1;
            }
        }
        for e in touched {
            if count[e] == it.paths.len() {
                mandatory[e].push(k);
            }
            count[e] = 0;
        }
    }
    candidates.extend(mandatory.into_iter().enumerate().map(|(e, members)| (vec![e], members)));

    let mut incoming: Vec<Vec<EdgeId>> = vec![Vec::new(); net.node_count()];
    let mut outgoing: Vec<Vec<EdgeId>> = vec![Vec::new(); net.node_count()];
    for (e, edge) in net.edges().iter().enumerate() {
        outgoing[edge.src].push(e);
        incoming[edge.dst].push(e);
    }
    let live: Vec<usize> = (0..items.len()).filter(|&k| !items[k].paths.is_empty()).collect();
    for v in 0..net.node_count() {
        let to_v = live.iter().copied().filter(|&k| instance.flows()[items[k].flow].dst == v).collect();
        candidates.push((incoming[v].clone(), to_v));
        let from_v = live.iter().copied().filter(|&k| instance.flows()[items[k].flow].src == v).collect();
        candidates.push((outgoing[v].clone(), from_v));
    }

    let capacity = |edges: &[EdgeId]| edges.iter().map(|&e| residual[e].max(0)).sum::<i64>();
    let demand = |members: &[usize]| members.iter().map(|&k| items[k].bandwidth).sum::<i64>();
    let tightness =
        |(edges, members): &(Vec<EdgeId>, Vec<usize>)| demand(members) as f64 / capacity(edges).max(1) as f64;
    candidates.retain(|c| c.1.len() >= 2 && tightness(c) > 1.0);
    candidates.sort_by(|a, b| tightness(b).total_cmp(&tightness(a)));

    let mut group = vec![None; items.len()];
    let mut group_edges = Vec::new();
    for (edges, members) in candidates {
        let free: Vec<usize> = members.into_iter().filter(|&k| group[k].is_none()).collect();
        if free.len() < 2 || demand(&free) <= capacity(&edges) {
            continue;
        }
        free.iter().for_each(|&k| group[k] = Some(group_edges.len()));
        group_edges.push(edges);
    }
    (group, group_edges)
}

#[derive(Clone, Copy, Debug)]
struct KnapsackItem {
    value: f64,
    weight: i64,
    item: usize,
    path: usize,
}

const KNAPSACK_NODE_LIMIT: u32 = 20_000;

/// Optimal 0/1 knapsack value by depth-first search with the fractional
/// bound. Sorts `items` by value density; `chosen` receives positions into
/// the sorted slice. If the search gives up, the fractional bound is
/// returned instead, which is still an upper bound.
fn knapsack(items: &mut [KnapsackItem], capacity: i64, chosen: &mut Vec<usize>) -> f64 {
    items.sort_by(|a, b| (b.value / b.weight as f64).total_cmp(&(a.value / a.weight as f64)));
    let fractional = |from: usize, mut cap: i64| {
        let mut total = 0.0;
        for it in &items[from..] {
            if it.weight <= cap {
                cap -= it.weight;
                total += it.value;
            } else {
                total += it.value * cap as f64 / it.weight as f64;
                break;
            }
        }
        total
    };

    struct State {
        best: f64,
        best_set: Vec<usize>,
        current: Vec<usize>,
        nodes: u32,
    }
    fn go(
        items: &[KnapsackItem],
        i: usize,
        cap: i64,
        value: f64,
        st: &mut State,
        fractional: &dyn Fn(usize, i64) -> f64,
    ) {
        st.nodes += 1;
        if value > st.best {
            st.best = value;
            st.best_set.clone_from(&st.current);
        }
        if i == items.len() || st.nodes > KNAPSACK_NODE_LIMIT || value + fractional(i, cap) <= st.best + 1e-9 {
            return;
        }
        if items[i].weight <= cap {
            st.current.push(i);
            go(items, i + 1, cap - items[i].weight, value + items[i].value, st, fractional);
            st.current.pop();
        }
        go(items, i + 1, cap, value, st, fractional);
    }

    let mut st = State { best: 0.0, best_set: Vec::new(), current: Vec::new(), nodes: 0 };
    go(items, 0, capacity, 0.0, &mut st, &fractional);
    chosen.clone_from(&st.best_set);
    if st.nodes > KNAPSACK_NODE_LIMIT {
        fractional(0, capacity)
    } else {
        st.best
    }
}

#[cfg(test)]
#[derive(Clone, Debug)]
struct TracePoint {
    depth: usize,
    /// Decisions for items `0..depth`, by instance flow.
    decided: Vec<(usize, Option<usize>)>,
    bound: u64,
}

#[cfg(test)]
impl Search<'_> {
    fn record(&mut self, depth: usize, trivial: u64) {
        if self.trace.is_none() {
            return;
        }
        let bound = trivial.min(self.bound(depth));
        let decided = self.items[..depth].iter().map(|it| (it.flow, self.current[it.flow])).collect();
        self.trace.as_mut().unwrap().push(TracePoint { depth, decided, bound });
    }
}
