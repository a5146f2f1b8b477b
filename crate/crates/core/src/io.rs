//! JSON instance and solution documents, and the GA statistics CSV.
//!
//! Instances are written in canonical form: every flow carries its resolved
//! priority inline, so a reader never needs the header table. Reading also
//! accepts an optional `priority_table` for flows without inline priority.

use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PfarError, Result};
use crate::ga::GaStats;
use crate::generate::GenMeta;
use crate::network::{Edge, Flow, Network, PfarInstance, PriorityFn, RouteAssignment, DEFAULT_HEADER_BITS};
use crate::paths::attach_paths;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub src: usize,
    pub dst: usize,
    pub cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub src: usize,
    pub dst: usize,
    pub bw: u64,
    #[serde(default)]
    pub header: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorityTableDoc {
    pub default: u64,
    #[serde(default)]
    pub entries: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub nodes: usize,
    pub edges: Vec<EdgeDoc>,
    pub flows: Vec<FlowDoc>,
    pub max_path_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority_table: Option<PriorityTableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<GenMeta>,
}

impl InstanceDoc {
    pub fn from_instance(instance: &PfarInstance, meta: Option<&GenMeta>) -> Self {
        let net = instance.network();
        let edges =
            net.edges().iter().zip(net.capacities()).map(|(e, &cap)| EdgeDoc { src: e.src, dst: e.dst, cap }).collect();
        let flows = instance
            .flows()
            .iter()
            .enumerate()
            .map(|(i, f)| FlowDoc {
                src: f.src,
                dst: f.dst,
                bw: f.bandwidth,
                header: f.header,
                priority: Some(instance.priority(i)),
            })
            .collect();
        let header_bits = Some(instance.header_bits()).filter(|&b| b != DEFAULT_HEADER_BITS);
        InstanceDoc {
            nodes: net.node_count(),
            edges,
            flows,
            max_path_len: instance.max_path_len(),
            header_bits,
            priority_table: None,
            meta: meta.cloned(),
        }
    }

    /// Validates the document and enumerates candidate paths.
    pub fn into_instance(self) -> Result<PfarInstance> {
        let network = Network::new(self.nodes, self.edges.iter().map(|e| (Edge::new(e.src, e.dst), e.cap)))?;
        let flows = self
            .flows
            .iter()
            .map(|f| {
                let flow = Flow::new(f.src, f.dst, f.bw, f.header);
                match f.priority {
                    Some(p) => flow.with_priority(p),
                    None => flow,
                }
            })
            .collect();
        let priorities = match &self.priority_table {
            Some(t) => t.entries.iter().fold(PriorityFn::new(t.default), |pf, &(h, p)| pf.with_entry(h, p)),
            None => PriorityFn::default(),
        };
        let bits = self.header_bits.unwrap_or(DEFAULT_HEADER_BITS);
        Ok(attach_paths(PfarInstance::with_header_bits(network, flows, priorities, self.max_path_len, bits)?))
    }
}

pub fn instance_to_json(instance: &PfarInstance, meta: Option<&GenMeta>) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceDoc::from_instance(instance, meta)).expect("serializable");
    text.push('\n');
    text
}

pub fn instance_from_json(text: &str) -> Result<PfarInstance> {
    serde_json::from_str::<InstanceDoc>(text)?.into_instance()
}

pub fn read_instance(path: impl AsRef<FsPath>) -> Result<PfarInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

/// A solved instance: `routes[i]` is flow `i`'s node sequence, or null when
/// dropped. `stats` holds solver counters but never timings, so identical
/// runs serialize identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub routes: Vec<Option<Vec<usize>>>,
    pub objective: u64,
    pub proven_optimal: bool,
    pub stats: Value,
}

impl SolutionDoc {
    pub fn new(
        instance: &PfarInstance,
        assignment: &RouteAssignment,
        objective: u64,
        proven_optimal: bool,
        stats: Value,
    ) -> Result<Self> {
        if assignment.len() != instance.flow_count() {
            return Err(PfarError::AssignmentIncomplete { expected: instance.flow_count(), got: assignment.len() });
        }
        let routes = assignment
            .choices()
            .iter()
            .enumerate()
            .map(|(i, c)| c.map(|m| instance.flow_paths(i)[m].nodes()))
            .collect();
        Ok(SolutionDoc { routes, objective, proven_optimal, stats })
    }

    /// Maps each route back to its candidate index.
    pub fn to_assignment(&self, instance: &PfarInstance) -> Result<RouteAssignment> {
        if self.routes.len() != instance.flow_count() {
            return Err(PfarError::AssignmentIncomplete { expected: instance.flow_count(), got: self.routes.len() });
        }
        let mut choices = Vec::with_capacity(self.routes.len());
        for (i, route) in self.routes.iter().enumerate() {
            let choice = match route {
                None => None,
                Some(nodes) => Some(
                    instance
                        .flow_paths(i)
                        .iter()
                        .position(|p| p.nodes() == *nodes)
                        .ok_or_else(|| PfarError::UnknownPath { flow: i, path: format!("{nodes:?}") })?,
                ),
            };
            choices.push(choice);
        }
        Ok(RouteAssignment::new(choices))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("serializable");
        text.push('\n');
        text
    }
}

pub fn ga_stats_csv(stats: &GaStats) -> String {
    let mut out = String::from("generation,best_fitness,mr,cr,elapsed_ms\n");
    for r in &stats.history {
        let ms = r.elapsed.as_secs_f64() * 1e3;
        writeln!(out, "{},{},{:.6},{:.6},{:.3}", r.generation, r.best_fitness, r.rates.mr, r.rates.cr, ms).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::{GenerationRecord, Rates, Termination};
    use crate::generate::{gen_instance, FlowGenConfig, TopoConfig};
    use crate::network::fixtures::*;
    use std::time::Duration;

    #[test]
    fn example_round_trip() {
        let inst = example_instance(3);
        let text = instance_to_json(&inst, None);
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back.paths().unwrap(), inst.paths().unwrap());
        assert_eq!((0..4).map(|i| back.priority(i)).collect::<Vec<_>>(), vec![10, 1000, 1, 100]);
        assert_eq!(instance_to_json(&back, None), text);
    }

    #[test]
    fn generated_round_trip_keeps_meta() {
        let g = gen_instance(&TopoConfig::new(7, 3), &FlowGenConfig::new(4), 4).unwrap();
        let text = instance_to_json(&g.instance, Some(&g.meta));
        let doc: InstanceDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.meta.as_ref(), Some(&g.meta));
        let back = doc.into_instance().unwrap();
        assert_eq!(back.flows(), g.instance.flows());
        assert_eq!(back.network(), g.instance.network());
    }

    #[test]
    fn header_table_is_honoured() {
        let text = r#"{"nodes":2,"edges":[{"src":0,"dst":1,"cap":5}],
            "flows":[{"src":0,"dst":1,"bw":1,"header":7},{"src":0,"dst":1,"bw":1,"header":2,"priority":4}],
            "max_path_len":1,"priority_table":{"default":3,"entries":[[7,50]]}}"#;
        let inst = instance_from_json(text).unwrap();
        assert_eq!((inst.priority(0), inst.priority(1)), (50, 4));
    }

    #[test]
    fn invalid_documents_rejected() {
        assert!(matches!(instance_from_json("{"), Err(PfarError::Json(_))));
        let self_loop = r#"{"nodes":2,"edges":[{"src":1,"dst":1,"cap":5}],"flows":[],"max_path_len":1}"#;
        assert!(matches!(instance_from_json(self_loop), Err(PfarError::SelfLoop { .. })));
        let same = r#"{"nodes":2,"edges":[],"flows":[{"src":1,"dst":1,"bw":1}],"max_path_len":1}"#;
        assert!(matches!(instance_from_json(same), Err(PfarError::SameEndpoints { .. })));
    }

    #[test]
    fn solution_routes() {
        let inst = example_instance(3);
        let a = narrated_assignment(&inst);
        let doc = SolutionDoc::new(&inst, &a, 1110, true, Value::Null).unwrap();
        assert_eq!(doc.routes, vec![Some(vec![0, 3, 1]), Some(vec![0, 1]), None, Some(vec![0, 2, 1])]);
        let back: SolutionDoc = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(back.to_assignment(&inst).unwrap(), a);

        let mut bad = doc.clone();
        bad.routes[2] = Some(vec![2, 0]);
        assert!(matches!(bad.to_assignment(&inst), Err(PfarError::UnknownPath { flow: 2, .. })));
    }

    #[test]
    fn stats_csv_layout() {
        let stats = GaStats {
            generations: 1,
            history: vec![
                GenerationRecord {
                    generation: 0,
                    best_fitness: 5,
                    rates: Rates { mr: 0.1, cr: 0.9 },
                    elapsed: Duration::ZERO,
                },
                GenerationRecord {
                    generation: 1,
                    best_fitness: -3,
                    rates: Rates { mr: 0.5, cr: 0.5 },
                    elapsed: Duration::from_micros(1500),
                },
            ],
            elapsed: Duration::from_millis(2),
            terminated_by: Termination::TimeExhausted,
        };
        let csv = ga_stats_csv(&stats);
        assert_eq!(
            csv,
            "generation,best_fitness,mr,cr,elapsed_ms\n0,5,0.100000,0.900000,0.000\n1,-3,0.500000,0.500000,1.500\n"
        );
    }
}
