//! The 0-1 program for an instance: admission variables `a_i`, path
//! variables `r_i_m` and edge-usage variables `e_i_j_l`, with CPLEX LP
//! export, certificate verification and decoding back to routes.
//!
//! Variable names use 1-based flow, path and node numbers, so that `e_3_3_2`
//! is flow 3 crossing node 3 -> node 2 (node indices 2 -> 1 in the network).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use crate::error::{PfarError, Result};
use crate::network::{EdgeId, PfarInstance, RouteAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Flow `i` is admitted.
    Alpha { flow: usize },
    /// Flow `i` uses its candidate path `m`.
    Rho { flow: usize, path: usize },
    /// Flow `i` may cross edge `edge`.
    Epsilon { flow: usize, edge: EdgeId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpVariable {
    pub kind: VarKind,
    pub name: String,
}

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

/// Row families of the model, in export order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// Exactly one path iff admitted.
    PathChoice,
    /// A chosen path needs all of its edges.
    PathEdges,
    /// Link capacity.
    Capacity,
    /// Edges on none of a flow's paths stay unused.
    UnusedEdges,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub terms: Vec<(i64, VarId)>,
    pub relation: Relation,
    pub rhs: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpProgram {
    /// Maximized.
    pub objective: Vec<(i64, VarId)>,
    pub constraints: Vec<Constraint>,
    pub variables: Vec<IlpVariable>,
}

impl IlpProgram {
    pub fn count_of(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    pub fn variable_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn name_index(&self) -> HashMap<&str, VarId> {
        self.variables.iter().enumerate().map(|(id, v)| (v.name.as_str(), id)).collect()
    }
}

pub fn alpha_name(flow: usize) -> String {
    format!("a_{}", flow + 1)
}

pub fn rho_name(flow: usize, path: usize) -> String {
    format!("r_{}_{}", flow + 1, path + 1)
}

pub fn epsilon_name(flow: usize, src: usize, dst: usize) -> String {
    format!("e_{}_{}_{}", flow + 1, src + 1, dst + 1)
}

pub fn build_ilp(instance: &PfarInstance) -> Result<IlpProgram> {
    let paths = instance.paths()?;
    let net = instance.network();
    let flows = instance.flow_count();
    let edges = net.edge_count();

    let mut variables = Vec::new();
    let mut alpha = Vec::with_capacity(flows);
    for i in 0..flows {
        alpha.push(variables.len());
        variables.push(IlpVariable { kind: VarKind::Alpha { flow: i }, name: alpha_name(i) });
    }
    let mut rho = Vec::with_capacity(flows);
    for (i, list) in paths.iter().enumerate() {
        rho.push((0..list.len()).map(|m| variables.len() + m).collect::<Vec<_>>());
        for m in 0..list.len() {
            variables.push(IlpVariable { kind: VarKind::Rho { flow: i, path: m }, name: rho_name(i, m) });
        }
    }
    // epsilon id of (flow i, edge e) is eps_base + i * edges + e
    let eps_base = variables.len();
    for i in 0..flows {
        for (e, edge) in net.edges().iter().enumerate() {
            variables.push(IlpVariable {
                kind: VarKind::Epsilon { flow: i, edge: e },
                name: epsilon_name(i, edge.src, edge.dst),
            });
        }
    }
    let eps = |i: usize, e: EdgeId| eps_base + i * edges + e;

    let objective = (0..flows).map(|i| (instance.priority(i) as i64, alpha[i])).collect();
    let mut constraints = Vec::new();

    for i in 0..flows {
        let mut terms: Vec<(i64, VarId)> = rho[i].iter().map(|&v| (1, v)).collect();
        terms.push((-1, alpha[i]));
        constraints.push(Constraint {
            name: format!("choice_{}", i + 1),
            kind: ConstraintKind::PathChoice,
            terms,
            relation: Relation::Eq,
            rhs: 0,
        });
    }
    for (i, flow_rho) in rho.iter().enumerate() {
        for (m, &r) in flow_rho.iter().enumerate() {
            let path_edges = instance.path_edge_ids(i, m);
            let mut terms: Vec<(i64, VarId)> = path_edges.iter().map(|&e| (1, eps(i, e))).collect();
            terms.push((-(path_edges.len() as i64), r));
            constraints.push(Constraint {
                name: format!("path_{}_{}", i + 1, m + 1),
                kind: ConstraintKind::PathEdges,
                terms,
                relation: Relation::Ge,
                rhs: 0,
            });
        }
    }
    for (e, edge) in net.edges().iter().enumerate() {
        let terms = (0..flows).map(|i| (instance.flows()[i].bandwidth as i64, eps(i, e))).collect();
        constraints.push(Constraint {
            name: format!("cap_{}_{}", edge.src + 1, edge.dst + 1),
            kind: ConstraintKind::Capacity,
            terms,
            relation: Relation::Le,
            rhs: net.capacity(e) as i64,
        });
    }
    for (i, flow_paths) in paths.iter().enumerate() {
        let mut used = vec![false; edges];
        for m in 0..flow_paths.len() {
            for &e in instance.path_edge_ids(i, m) {
                used[e] = true;
            }
        }
        let terms: Vec<(i64, VarId)> = (0..edges).filter(|&e| !used[e]).map(|e| (1, eps(i, e))).collect();
        if !terms.is_empty() {
            constraints.push(Constraint {
                name: format!("unused_{}", i + 1),
                kind: ConstraintKind::UnusedEdges,
                terms,
                relation: Relation::Eq,
                rhs: 0,
            });
        }
    }

    Ok(IlpProgram { objective, constraints, variables })
}

const TERMS_PER_LINE: usize = 10;

fn write_terms(out: &mut String, terms: &[(i64, VarId)], vars: &[IlpVariable]) {
    for (k, &(coef, var)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &vars[var].name;
        match (k, coef < 0) {
            (0, false) => write!(out, " {coef} {name}"),
            (0, true) => write!(out, " - {} {name}", -coef),
            (_, false) => write!(out, " + {coef} {name}"),
            (_, true) => write!(out, " - {} {name}", -coef),
        }
        .unwrap();
    }
}

/// Renders the program in CPLEX LP format. Output is deterministic: rows
/// appear in [`ConstraintKind`] order, then flow/path/edge order.
pub fn export_lp(program: &IlpProgram) -> String {
    let mut out = String::new();
    out.push_str("\\ Priority flow admission and routing\n");
    out.push_str("Maximize\n obj:");
    if program.objective.is_empty() {
        out.push_str(" 0");
    } else {
        write_terms(&mut out, &program.objective, &program.variables);
    }
    out.push_str("\nSubject To\n");
    for c in &program.constraints {
        write!(out, " {}:", c.name).unwrap();
        if c.terms.is_empty() {
            out.push_str(" 0");
        } else {
            write_terms(&mut out, &c.terms, &program.variables);
        }
        writeln!(out, " {} {}", c.relation.symbol(), c.rhs).unwrap();
    }
    out.push_str("Binary\n");
    for chunk in program.variables.chunks(TERMS_PER_LINE) {
        let names: Vec<&str> = chunk.iter().map(|v| v.name.as_str()).collect();
        writeln!(out, " {}", names.join(" ")).unwrap();
    }
    out.push_str("End\n");
    out
}

/// Variable name to value, as read from a solver solution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IlpSolutionValues {
    values: BTreeMap<String, i64>,
}

impl IlpSolutionValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every program variable set to zero.
    pub fn zeros(program: &IlpProgram) -> Self {
        IlpSolutionValues { values: program.variables.iter().map(|v| (v.name.clone(), 0)).collect() }
    }

    pub fn set(&mut self, name: impl Into<String>, value: i64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Parses `name value` lines. Blank lines and lines starting with `#`
    /// are skipped; values must be integral (`1`, `0`, `1.0`, `-0` ...).
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |reason: &str| PfarError::ValuesSyntax { line: n + 1, reason: reason.to_string() };
            let mut parts = line.split_whitespace();
            let (Some(name), Some(raw), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(syntax("expected `name value`"));
            };
            let value: f64 = raw.parse().map_err(|_| syntax("value is not a number"))?;
            let rounded = value.round();
            if (value - rounded).abs() > 1e-6 {
                return Err(syntax("value is not integral"));
            }
            values.insert(name.to_string(), rounded as i64);
        }
        Ok(IlpSolutionValues { values })
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IlpVerification {
    pub feasible: bool,
    /// Indices into `program.constraints`.
    pub violated: Vec<usize>,
    pub non_binary: Vec<String>,
}

/// Checks a full set of values against every row and the 0-1 domains.
pub fn verify_ilp_values(program: &IlpProgram, values: &IlpSolutionValues) -> Result<IlpVerification> {
    let index = program.name_index();
    if let Some((name, _)) = values.iter().find(|(name, _)| !index.contains_key(name)) {
        return Err(PfarError::UnknownVariable(name.to_string()));
    }
    let mut dense = Vec::with_capacity(program.variables.len());
    for v in &program.variables {
        dense.push(values.get(&v.name).ok_or_else(|| PfarError::MissingVariable(v.name.clone()))?);
    }
    let non_binary: Vec<String> =
        program.variables.iter().zip(&dense).filter(|(_, &x)| x != 0 && x != 1).map(|(v, _)| v.name.clone()).collect();
    let violated: Vec<usize> = program
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let lhs: i64 = c.terms.iter().map(|&(coef, v)| coef * dense[v]).sum();
            !c.relation.holds(lhs, c.rhs)
        })
        .map(|(k, _)| k)
        .collect();
    Ok(IlpVerification { feasible: violated.is_empty() && non_binary.is_empty(), violated, non_binary })
}

/// Reads the selected path of every flow off the `r_i_m` values. Absent
/// path variables count as zero.
pub fn decode_assignment(instance: &PfarInstance, values: &IlpSolutionValues) -> Result<RouteAssignment> {
    let paths = instance.paths()?;
    let mut choice = Vec::with_capacity(paths.len());
    for (i, list) in paths.iter().enumerate() {
        let mut selected = (0..list.len()).filter(|&m| values.get(&rho_name(i, m)).unwrap_or(0) == 1);
        let first = selected.next();
        if selected.next().is_some() {
            return Err(PfarError::MultiplePathsSelected { flow: i });
        }
        choice.push(first);
    }
    Ok(RouteAssignment::new(choice))
}

/// The minimal certificate of an assignment: `a_i` and `r_i_m` from the
/// choices, `e_i_j_l` set exactly on the chosen path's edges.
pub fn encode_assignment(instance: &PfarInstance, assignment: &RouteAssignment) -> Result<IlpSolutionValues> {
    let paths = instance.paths()?;
    if assignment.len() != paths.len() {
        return Err(PfarError::AssignmentIncomplete { expected: paths.len(), got: assignment.len() });
    }
    let net = instance.network();
    let mut values = IlpSolutionValues::new();
    for (i, list) in paths.iter().enumerate() {
        let choice = assignment.choice(i);
        values.set(alpha_name(i), choice.is_some() as i64);
        for m in 0..list.len() {
            values.set(rho_name(i, m), (choice == Some(m)) as i64);
        }
        let mut used = vec![0; net.edge_count()];
        if let Some(m) = choice.filter(|&m| m < list.len()) {
            for &e in instance.path_edge_ids(i, m) {
                used[e] = 1;
            }
        }
        for (e, edge) in net.edges().iter().enumerate() {
            values.set(epsilon_name(i, edge.src, edge.dst), used[e]);
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::network::{check_solution, Edge, Flow, Network, PriorityFn};
    use crate::paths::attach_paths;

    fn terms_by_name(program: &IlpProgram, c: &Constraint) -> Vec<(i64, String)> {
        c.terms.iter().map(|&(k, v)| (k, program.variables[v].name.clone())).collect()
    }

    #[test]
    fn example_program_shape() {
        let p = build_ilp(&example_instance(3)).unwrap();
        let count = |f: fn(&VarKind) -> bool| p.variables.iter().filter(|v| f(&v.kind)).count();
        assert_eq!(count(|k| matches!(k, VarKind::Alpha { .. })), 4);
        assert_eq!(count(|k| matches!(k, VarKind::Rho { .. })), 20);
        assert_eq!(count(|k| matches!(k, VarKind::Epsilon { .. })), 48);
        assert_eq!(p.count_of(ConstraintKind::PathChoice), 4);
        assert_eq!(p.count_of(ConstraintKind::PathEdges), 20);
        assert_eq!(p.count_of(ConstraintKind::Capacity), 12);
        assert_eq!(p.count_of(ConstraintKind::UnusedEdges), 4);
        let coefs: Vec<i64> = p.objective.iter().map(|&(k, _)| k).collect();
        assert_eq!(coefs, vec![10, 1000, 1, 100]);
    }

    #[test]
    fn example_capacity_row_for_n2_n4() {
        let p = build_ilp(&example_instance(3)).unwrap();
        let row = p.constraints.iter().find(|c| c.name == "cap_2_4").unwrap();
        assert_eq!(row.relation, Relation::Le);
        assert_eq!(row.rhs, 1);
        let want: Vec<(i64, String)> =
            vec![(2, "e_1_2_4".into()), (2, "e_2_2_4".into()), (1, "e_3_2_4".into()), (2, "e_4_2_4".into())];
        assert_eq!(terms_by_name(&p, row), want);
    }

    #[test]
    fn example_path_rows_follow_candidate_order() {
        let p = build_ilp(&example_instance(3)).unwrap();
        let row = |name: &str| p.constraints.iter().find(|c| c.name == name).unwrap();
        // third candidate of flow 1 is N1 -> N4 -> N2
        let want: Vec<(i64, String)> = vec![(1, "e_1_1_4".into()), (1, "e_1_4_2".into()), (-2, "r_1_3".into())];
        assert_eq!(terms_by_name(&p, row("path_1_3")), want);
        let want: Vec<(i64, String)> = vec![(1, "e_3_3_2".into()), (-1, "r_3_1".into())];
        assert_eq!(terms_by_name(&p, row("path_3_1")), want);
        let unused: Vec<String> = terms_by_name(&p, row("unused_3")).into_iter().map(|(_, n)| n).collect();
        let mut want = vec!["e_3_1_3", "e_3_2_1", "e_3_2_3", "e_3_2_4", "e_3_4_3"];
        want.sort();
        let mut unused_sorted = unused.clone();
        unused_sorted.sort();
        assert_eq!(unused_sorted, want);
    }

    #[test]
    fn flow_without_paths_is_forced_out() {
        let net = Network::new(2, [(Edge::new(0, 1), 1)]).unwrap();
        let inst = attach_paths(PfarInstance::new(net, vec![Flow::new(1, 0, 1, 0)], PriorityFn::default(), 1).unwrap());
        let p = build_ilp(&inst).unwrap();
        assert_eq!(p.objective, vec![(1, 0)]);
        let choice = &p.constraints[0];
        assert_eq!(choice.terms, vec![(-1, 0)]);
        assert_eq!((choice.relation, choice.rhs), (Relation::Eq, 0));
        let lp = export_lp(&p);
        assert!(lp.contains(" choice_1: - 1 a_1 = 0\n"), "{lp}");
    }

    #[test]
    fn paths_required() {
        let inst = PfarInstance::new(example_network(), vec![], PriorityFn::default(), 3).unwrap();
        assert!(matches!(build_ilp(&inst), Err(PfarError::PathsNotAttached)));
    }

    #[test]
    fn empty_instance_exports_zero_objective() {
        let inst = attach_paths(PfarInstance::new(example_network(), vec![], PriorityFn::default(), 3).unwrap());
        let lp = export_lp(&build_ilp(&inst).unwrap());
        assert!(lp.starts_with("\\ Priority flow admission and routing\nMaximize\n obj: 0\nSubject To\n"), "{lp}");
        assert!(lp.ends_with("Binary\nEnd\n"));
    }

    #[test]
    fn single_flow_two_nodes() {
        let net = Network::new(2, [(Edge::new(0, 1), 5), (Edge::new(1, 0), 5)]).unwrap();
        let inst = attach_paths(PfarInstance::new(net, vec![Flow::new(0, 1, 2, 0)], PriorityFn::default(), 4).unwrap());
        let lp = export_lp(&build_ilp(&inst).unwrap());
        assert!(lp.contains("Binary\n a_1 r_1_1 e_1_1_2 e_1_2_1\nEnd\n"), "{lp}");
    }

    #[test]
    fn objective_line_matches_example() {
        let lp = export_lp(&build_ilp(&example_instance(3)).unwrap());
        assert!(lp.contains("Maximize\n obj: 10 a_1 + 1000 a_2 + 1 a_3 + 100 a_4\n"), "{lp}");
    }

    #[test]
    fn long_rows_wrap() {
        let p = IlpProgram {
            objective: (0..12).map(|v| (1, v)).collect(),
            constraints: vec![],
            variables: (0..12).map(|i| IlpVariable { kind: VarKind::Alpha { flow: i }, name: alpha_name(i) }).collect(),
        };
        let lp = export_lp(&p);
        assert!(lp.contains("+ 1 a_10\n    + 1 a_11 + 1 a_12\n"), "{lp}");
    }

    #[test]
    fn verify_examples() {
        let inst = example_instance(3);
        let p = build_ilp(&inst).unwrap();
        assert!(verify_ilp_values(&p, &IlpSolutionValues::zeros(&p)).unwrap().feasible);

        let narrated = encode_assignment(&inst, &narrated_assignment(&inst)).unwrap();
        assert!(verify_ilp_values(&p, &narrated).unwrap().feasible);

        let mut clash = IlpSolutionValues::zeros(&p);
        for name in ["a_1", "a_2", "r_1_1", "r_2_1", "e_1_1_2", "e_2_1_2"] {
            clash.set(name, 1);
        }
        let v = verify_ilp_values(&p, &clash).unwrap();
        assert!(!v.feasible);
        let names: Vec<&str> = v.violated.iter().map(|&k| p.constraints[k].name.as_str()).collect();
        assert_eq!(names, vec!["cap_1_2"]);
    }

    #[test]
    fn verify_flags_unknown_missing_and_non_binary() {
        let p = build_ilp(&example_instance(3)).unwrap();
        let mut v = IlpSolutionValues::zeros(&p);
        v.set("bogus", 0);
        assert!(matches!(verify_ilp_values(&p, &v), Err(PfarError::UnknownVariable(n)) if n == "bogus"));

        let mut v = IlpSolutionValues::new();
        v.set("a_1", 0);
        assert!(matches!(verify_ilp_values(&p, &v), Err(PfarError::MissingVariable(_))));

        let mut v = IlpSolutionValues::zeros(&p);
        v.set("e_1_2_1", 2);
        let r = verify_ilp_values(&p, &v).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.non_binary, vec!["e_1_2_1".to_string()]);
    }

    #[test]
    fn spurious_epsilon_is_accepted() {
        // the >= on path rows tolerates edge variables set off the chosen path
        let inst = example_instance(3);
        let p = build_ilp(&inst).unwrap();
        let mut v = encode_assignment(&inst, &narrated_assignment(&inst)).unwrap();
        v.set("e_3_3_4", 1);
        assert!(verify_ilp_values(&p, &v).unwrap().feasible);
    }

    #[test]
    fn decode_examples() {
        let inst = example_instance(3);
        let p = build_ilp(&inst).unwrap();
        let narrated = narrated_assignment(&inst);
        let decoded = decode_assignment(&inst, &encode_assignment(&inst, &narrated).unwrap()).unwrap();
        assert_eq!(decoded, narrated);
        assert_eq!(check_solution(&inst, &decoded).unwrap().objective, 1110);

        assert_eq!(decode_assignment(&inst, &IlpSolutionValues::zeros(&p)).unwrap(), RouteAssignment::all_dropped(4));

        let mut only3 = IlpSolutionValues::zeros(&p);
        for name in ["r_3_1", "a_3", "e_3_3_2"] {
            only3.set(name, 1);
        }
        assert!(verify_ilp_values(&p, &only3).unwrap().feasible);
        let decoded = decode_assignment(&inst, &only3).unwrap();
        assert_eq!(decoded, RouteAssignment::new(vec![None, None, Some(0), None]));
        assert_eq!(inst.flow_paths(2)[0], path(&[3, 2]));
    }

    #[test]
    fn decode_rejects_two_paths() {
        let inst = example_instance(3);
        let mut v = IlpSolutionValues::new();
        v.set("r_2_1", 1);
        v.set("r_2_4", 1);
        assert!(matches!(decode_assignment(&inst, &v), Err(PfarError::MultiplePathsSelected { flow: 1 })));
    }

    #[test]
    fn parse_values_file() {
        let v = IlpSolutionValues::parse("# solver output\na_1 1\n\nr_1_1 1.0\ne_1_1_2 -0\n").unwrap();
        assert_eq!(v.get("a_1"), Some(1));
        assert_eq!(v.get("r_1_1"), Some(1));
        assert_eq!(v.get("e_1_1_2"), Some(0));
        assert!(matches!(IlpSolutionValues::parse("a_1\n"), Err(PfarError::ValuesSyntax { line: 1, .. })));
        assert!(matches!(IlpSolutionValues::parse("a_1 0.5\n"), Err(PfarError::ValuesSyntax { .. })));
        assert_eq!(IlpSolutionValues::parse(&v.to_text()).unwrap(), v);
    }
}
