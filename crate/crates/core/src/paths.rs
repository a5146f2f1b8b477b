//! Hop-limited simple path enumeration.
//!
//! Candidate paths are listed shortest first, and paths of equal length in
//! ascending node-sequence order. This is the order the ILP path index `m`
//! and the chromosome bit layout both refer to.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{PfarError, Result};
use crate::network::{Network, NodeId, Path, PfarInstance};

pub const DEFAULT_MAX_PATH_LEN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathEnumConfig {
    /// Maximum number of edges per path.
    pub max_path_len: usize,
}

impl Default for PathEnumConfig {
    fn default() -> Self {
        PathEnumConfig { max_path_len: DEFAULT_MAX_PATH_LEN }
    }
}

/// Candidate path order: hop count, then node sequence.
pub fn path_order(a: &Path, b: &Path) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.edges().cmp(b.edges()))
}

/// All simple paths `src -> dst` with at most `cfg.max_path_len` edges.
pub fn enumerate_paths(network: &Network, src: NodeId, dst: NodeId, cfg: PathEnumConfig) -> Result<Vec<Path>> {
    let node_count = network.node_count();
    if let Some(&node) = [src, dst].iter().find(|&&n| n >= node_count) {
        return Err(PfarError::NodeOutOfRange { node, node_count });
    }
    if src == dst {
        return Err(PfarError::SameEndpoints { flow: 0, node: src });
    }
    if cfg.max_path_len == 0 {
        return Err(PfarError::ZeroPathLength);
    }

    // DFS expanding successors in ascending order yields node-sequence
    // order; the stable sort by length then gives the candidate order.
    let mut found = Vec::new();
    let mut on_path = vec![false; node_count];
    let mut stack = vec![src];
    on_path[src] = true;
    extend(network, dst, cfg.max_path_len, &mut stack, &mut on_path, &mut found);
    found.sort_by_key(Vec::len);
    Ok(found.iter().map(|nodes| Path::from_nodes(nodes)).collect())
}

fn extend(
    network: &Network,
    dst: NodeId,
    budget: usize,
    stack: &mut Vec<NodeId>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<NodeId>>,
) {
    let here = *stack.last().unwrap();
    for &(next, _) in network.successors(here) {
        if on_path[next] {
            continue;
        }
        if next == dst {
            stack.push(next);
            found.push(stack.clone());
            stack.pop();
        } else if budget > 1 {
            stack.push(next);
            on_path[next] = true;
            extend(network, dst, budget - 1, stack, on_path, found);
            on_path[next] = false;
            stack.pop();
        }
    }
}

/// Fills in every flow's candidate list. Flows with the same endpoints get
/// identical lists; a flow may end up with none, in which case it can only
/// be dropped.
pub fn attach_paths(mut instance: PfarInstance) -> PfarInstance {
    let cfg = PathEnumConfig { max_path_len: instance.max_path_len() };
    let mut cache: HashMap<(NodeId, NodeId), Vec<Path>> = HashMap::new();
    let paths = instance
        .flows()
        .iter()
        .map(|f| {
            cache
                .entry((f.src, f.dst))
                .or_insert_with(|| {
                    enumerate_paths(instance.network(), f.src, f.dst, cfg)
                        .expect("flow endpoints checked at construction")
                })
                .clone()
        })
        .collect();
    instance.set_paths_unchecked(paths);
    instance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::network::{validate_path, Edge, Flow, PriorityFn};
    use proptest::prelude::*;

    fn cfg(max_path_len: usize) -> PathEnumConfig {
        PathEnumConfig { max_path_len }
    }

    fn complete(n: usize) -> Network {
        let links = (0..n).flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (Edge::new(s, d), 1)));
        Network::new(n, links).unwrap()
    }

    /// Independent count: extend partial node sequences without reuse,
    /// counting each arrival at `dst`.
    fn brute_count(n: usize, src: usize, dst: usize, max_len: usize) -> usize {
        fn go(n: usize, dst: usize, max_len: usize, seq: &mut Vec<usize>) -> usize {
            let mut count = 0;
            for next in 0..n {
                if seq.contains(&next) {
                    continue;
                }
                if next == dst {
                    count += 1;
                } else if seq.len() < max_len {
                    seq.push(next);
                    count += go(n, dst, max_len, seq);
                    seq.pop();
                }
            }
            count
        }
        go(n, dst, max_len, &mut vec![src])
    }

    #[test]
    fn example_paths_from_n1_to_n2() {
        let got = enumerate_paths(&example_network(), 0, 1, cfg(3)).unwrap();
        let want: Vec<Path> =
            [&[1, 2][..], &[1, 3, 2], &[1, 4, 2], &[1, 3, 4, 2], &[1, 4, 3, 2]].iter().map(|p| path(p)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn example_paths_from_n3_to_n2() {
        let got = enumerate_paths(&example_network(), 2, 1, cfg(3)).unwrap();
        let want: Vec<Path> =
            [&[3, 2][..], &[3, 1, 2], &[3, 4, 2], &[3, 1, 4, 2], &[3, 4, 1, 2]].iter().map(|p| path(p)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn two_node_network() {
        let net = Network::new(2, [(Edge::new(0, 1), 1), (Edge::new(1, 0), 1)]).unwrap();
        assert_eq!(enumerate_paths(&net, 0, 1, cfg(1)).unwrap(), vec![Path::from_nodes(&[0, 1])]);
    }

    #[test]
    fn same_endpoints_rejected() {
        assert!(matches!(enumerate_paths(&example_network(), 2, 2, cfg(3)), Err(PfarError::SameEndpoints { .. })));
    }

    #[test]
    fn attach_paths_on_example() {
        let inst = example_instance(3);
        assert_eq!(inst.total_path_count(), 20);
        assert!((0..4).all(|i| inst.flow_paths(i).len() == 5));
        assert_eq!(inst.flow_paths(0), inst.flow_paths(3));

        let short = example_instance(1);
        for i in [0, 1, 3] {
            assert_eq!(short.flow_paths(i), &[path(&[1, 2])]);
        }
        assert_eq!(short.flow_paths(2), &[path(&[3, 2])]);
    }

    #[test]
    fn unreachable_flow_gets_empty_list() {
        let net = Network::new(3, [(Edge::new(0, 1), 1), (Edge::new(1, 2), 1)]).unwrap();
        let inst = PfarInstance::new(net, vec![Flow::new(0, 2, 1, 0), Flow::new(2, 0, 1, 0)], PriorityFn::default(), 1)
            .unwrap();
        let inst = attach_paths(inst);
        assert!(inst.flow_paths(0).is_empty());
        assert!(inst.flow_paths(1).is_empty());
    }

    #[test]
    fn complete_graph_counts_match_brute_force() {
        for n in 2..=6 {
            let net = complete(n);
            let got = enumerate_paths(&net, 0, 1, cfg(n - 1)).unwrap().len();
            assert_eq!(got, brute_count(n, 0, 1, n - 1), "n = {n}");
        }
        // 1 + 2 + 2 on four nodes
        assert_eq!(brute_count(4, 0, 1, 3), 5);
    }

    /// Counts simple node sequences whose consecutive pairs are all edges.
    fn brute_paths(net: &Network, src: usize, dst: usize, max_len: usize) -> usize {
        fn go(net: &Network, dst: usize, max_len: usize, seq: &mut Vec<usize>) -> usize {
            let mut count = 0;
            let last = *seq.last().unwrap();
            for next in 0..net.node_count() {
                if seq.contains(&next) || net.edge_id(Edge::new(last, next)).is_none() {
                    continue;
                }
                if next == dst {
                    count += 1;
                } else if seq.len() < max_len {
                    seq.push(next);
                    count += go(net, dst, max_len, seq);
                    seq.pop();
                }
            }
            count
        }
        go(net, dst, max_len, &mut vec![src])
    }

    fn arb_network() -> impl Strategy<Value = Network> {
        (2usize..7).prop_flat_map(|n| {
            proptest::collection::vec(proptest::bool::weighted(0.45), n * n).prop_map(move |mask| {
                let links = (0..n * n)
                    .filter(|&k| mask[k] && k / n != k % n)
                    .map(|k| (Edge::new(k / n, k % n), 1 + (k as u64 % 3)));
                Network::new(n, links).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn enumeration_is_sound_ordered_and_complete(net in arb_network(), max_len in 1usize..5) {
            let n = net.node_count();
            let flow = Flow::new(0, n - 1, 1, 0);
            let got = enumerate_paths(&net, 0, n - 1, cfg(max_len)).unwrap();
            for p in &got {
                prop_assert!(validate_path(&net, &flow, p));
                prop_assert!(!p.is_empty() && p.len() <= max_len);
            }
            for w in got.windows(2) {
                prop_assert_eq!(path_order(&w[0], &w[1]), Ordering::Less);
            }
            let brute = brute_paths(&net, 0, n - 1, max_len);
            prop_assert_eq!(got.len(), brute);
            let again = enumerate_paths(&net, 0, n - 1, cfg(max_len)).unwrap();
            prop_assert_eq!(&got, &again);
        }
    }
}
