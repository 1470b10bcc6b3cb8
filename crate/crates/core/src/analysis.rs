//! Positive dependencies, absolute tightness and stable-computation guarantees.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::sync::Arc;

use petgraph::algo::{is_cyclic_directed, tarjan_scc};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{Atom, AtomSet, CRule, GroundProgram, Monotonicity};

/// A directed graph over atoms or rules.
#[derive(Clone, Debug)]
pub struct DepGraph<T> {
    pub graph: DiGraph<T, ()>,
}

impl<T: Clone + Ord> DepGraph<T> {
    fn build(vertices: impl IntoIterator<Item = T>, edges: &BTreeSet<(T, T)>) -> Self {
        let mut graph = DiGraph::new();
        let mut index = BTreeMap::new();
        for v in vertices {
            index
                .entry(v.clone())
                .or_insert_with(|| graph.add_node(v));
        }
        for (a, b) in edges {
            graph.add_edge(index[a], index[b], ());
        }
        DepGraph { graph }
    }

    pub fn vertices(&self) -> Vec<T> {
        self.graph.node_weights().cloned().collect()
    }

    /// Edges as sorted vertex pairs.
    pub fn edges(&self) -> Vec<(T, T)> {
        let mut out: Vec<(T, T)> = self
            .graph
            .edge_indices()
            .map(|e| {
                let (a, b) = self.graph.edge_endpoints(e).expect("edge exists");
                (self.graph[a].clone(), self.graph[b].clone())
            })
            .collect();
        out.sort();
        out
    }

    pub fn is_acyclic(&self) -> bool {
        !is_cyclic_directed(&self.graph)
    }

    /// Some cycle `v0 → v1 → … → v0`, listed with `v0` repeated at the end.
    pub fn cycle(&self) -> Option<Vec<T>> {
        let g = &self.graph;
        let scc = tarjan_scc(g)
            .into_iter()
            .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
            .min_by_key(|c| c.iter().map(|n| g[*n].clone()).min())?;
        let start = scc.iter().copied().min_by_key(|n| g[*n].clone())?;
        if g.contains_edge(start, start) {
            return Some(vec![g[start].clone(), g[start].clone()]);
        }
        let members: BTreeSet<NodeIndex> = scc.iter().copied().collect();
        let mut prev: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let mut succ: Vec<NodeIndex> = g.neighbors(u).collect();
            succ.sort_by_key(|n| g[*n].clone());
            for v in succ {
                if v == start {
                    let mut path = vec![u];
                    while let Some(&p) = prev.get(path.last().expect("nonempty")) {
                        path.push(p);
                    }
                    path.reverse();
                    path.push(start);
                    return Some(path.into_iter().map(|n| g[n].clone()).collect());
                }
                if members.contains(&v) && v != start && !prev.contains_key(&v) {
                    prev.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

fn head_occ(r: &CRule, cap: usize) -> AtomSet {
    r.head
        .iter()
        .flat_map(|h| h.positive_occurrences(cap))
        .collect()
}

fn body_occ(r: &CRule, cap: usize) -> AtomSet {
    r.body()
        .flat_map(|l| l.positive_form().positive_occurrences(cap))
        .collect()
}

/// Edges `(a, b)` with `a` positively in a head and `b` positively in the body of one rule.
pub fn dependency_graph(p: &GroundProgram, limits: &Limits) -> DepGraph<Atom> {
    let cap = limits.enumeration;
    let mut edges = BTreeSet::new();
    for r in p.rules() {
        let body = body_occ(r, cap);
        for a in head_occ(r, cap) {
            for b in &body {
                edges.insert((a.clone(), b.clone()));
            }
        }
    }
    DepGraph::build(p.universe().iter().cloned(), &edges)
}

/// Edges `(i, j)` between rule indices when the body of rule `i` positively
/// mentions an atom occurring positively in the head of rule `j`.
pub fn rule_dependency_graph(p: &GroundProgram, limits: &Limits) -> DepGraph<usize> {
    let cap = limits.enumeration;
    let mut by_head: BTreeMap<Atom, Vec<usize>> = BTreeMap::new();
    for (j, r) in p.rules().iter().enumerate() {
        for a in head_occ(r, cap) {
            by_head.entry(a).or_default().push(j);
        }
    }
    let mut edges = BTreeSet::new();
    for (i, r) in p.rules().iter().enumerate() {
        for b in body_occ(r, cap) {
            for &j in by_head.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                edges.insert((i, j));
            }
        }
    }
    DepGraph::build(0..p.len(), &edges)
}

pub fn is_absolutely_tight(p: &GroundProgram, limits: &Limits) -> bool {
    dependency_graph(p, limits).is_acyclic()
}

/// Rules ordered so that every rule comes after the rules it positively depends on.
///
/// Among ready rules the canonically smallest goes first.
pub fn topological_rule_order(p: &GroundProgram, limits: &Limits) -> Result<Vec<Arc<CRule>>> {
    let g = rule_dependency_graph(p, limits);
    let n = p.len();
    let mut pending = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in g.edges() {
        pending[i] += 1;
        dependents[j].push(i);
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse(j)) = ready.pop() {
        out.push(p.rules()[j].clone());
        for &i in &dependents[j] {
            pending[i] -= 1;
            if pending[i] == 0 {
                ready.push(Reverse(i));
            }
        }
    }
    if out.len() < n {
        let witness = g
            .cycle()
            .unwrap_or_default()
            .into_iter()
            .map(|k| p.rules()[k].text())
            .collect();
        return Err(Error::CyclicGraph { witness });
    }
    Ok(out)
}

/// Whether the stable-computation theorem applies, with a step order or the reason it does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guarantee {
    pub holds: bool,
    pub normal: bool,
    pub convex: bool,
    pub tight: bool,
    pub certificate: Option<Vec<Arc<CRule>>>,
    pub violation: Option<String>,
    pub cycle_witness: Option<Vec<String>>,
}

fn first_non_convex(p: &GroundProgram, limits: &Limits) -> Result<Option<String>> {
    for r in p.rules() {
        for h in &r.head {
            if h.classify(limits.enumeration)? == Monotonicity::Neither {
                return Ok(Some(format!("head c-atom {h} of {} is not convex", r.text())));
            }
        }
        for l in r.body() {
            if l.classify(limits.enumeration)? == Monotonicity::Neither {
                return Ok(Some(format!("body literal {l} of {} is not convex", r.text())));
            }
        }
    }
    Ok(None)
}

/// Normal (at most one head c-atom; constraints allowed), convex and absolutely tight.
pub fn stable_guarantee(p: &GroundProgram, limits: &Limits) -> Result<Guarantee> {
    let disjunctive = p.rules().iter().find(|r| r.head.len() > 1);
    let normal = disjunctive.is_none();
    let non_convex = first_non_convex(p, limits)?;
    let convex = non_convex.is_none();
    let dep = dependency_graph(p, limits);
    let cycle = dep.cycle();
    let tight = cycle.is_none();
    let cycle_witness = cycle.map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>());
    let holds = normal && convex && tight;
    let violation = if let Some(r) = disjunctive {
        Some(format!("rule {} has a disjunctive head", r.text()))
    } else if let Some(v) = non_convex {
        Some(v)
    } else {
        cycle_witness
            .as_ref()
            .map(|c| format!("positive dependency cycle {}", c.join(" -> ")))
    };
    let certificate = if holds {
        Some(topological_rule_order(p, limits)?)
    } else {
        None
    };
    Ok(Guarantee {
        holds,
        normal,
        convex,
        tight,
        certificate,
        violation,
        cycle_witness,
    })
}

/// The `analyze` report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub normal: bool,
    pub convex: bool,
    pub tight: bool,
    pub stable_guarantee: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_witness: Option<Vec<String>>,
}

pub fn analyze(p: &GroundProgram, limits: &Limits) -> Result<AnalysisReport> {
    let g = stable_guarantee(p, limits)?;
    Ok(AnalysisReport {
        normal: g.normal,
        convex: g.convex,
        tight: g.tight,
        stable_guarantee: g.holds,
        cycle_witness: g.cycle_witness,
    })
}
