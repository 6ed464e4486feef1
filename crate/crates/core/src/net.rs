//! Network model: validated acyclic multigraphs, adversary models, edge cuts.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Symbol = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alphabet {
    size: u8,
}

impl Alphabet {
    pub fn new(size: u8) -> Result<Self, NetworkError> {
        if size < 2 {
            return Err(NetworkError::AlphabetTooSmall { size });
        }
        Ok(Alphabet { size })
    }

    pub fn size(self) -> u8 {
        self.size
    }

    pub fn symbols(self) -> impl Iterator<Item = Symbol> {
        0..self.size
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("alphabet size must be at least 2, got {size}")]
    AlphabetTooSmall { size: u8 },
    #[error("duplicate node {name:?}")]
    DuplicateNode { name: String },
    #[error("duplicate edge id {id:?}")]
    DuplicateEdge { id: String },
    #[error("edge {edge:?} references unknown node {node:?}")]
    UnknownEndpoint { edge: String, node: String },
    #[error("unknown node {name:?}")]
    UnknownNode { name: String },
    #[error("unknown edge id {id:?}")]
    UnknownEdge { id: String },
    #[error("network lists no terminals")]
    NoTerminals,
    #[error("source {name:?} is also listed as a terminal")]
    SourceIsTerminal { name: String },
    #[error("terminal {name:?} listed more than once")]
    DuplicateTerminal { name: String },
    #[error("cycle through node {node:?}")]
    CyclicGraph { node: String },
    #[error("source has incoming edge {edge:?}")]
    SourceHasInEdges { edge: String },
    #[error("terminal {terminal:?} has outgoing edge {edge:?}")]
    TerminalHasOutEdges { terminal: String, edge: String },
    #[error("terminal {terminal:?} is not reachable from the source")]
    UnreachableTerminal { terminal: String },
    #[error("node {node:?} lies on no source-terminal path")]
    DanglingIntermediate { node: String },
    #[error("edge order is not a linear extension: {later:?} precedes {earlier:?} but is listed after it")]
    OrderNotLinearExtension { earlier: String, later: String },
    #[error("node {name:?} is not a terminal")]
    NotATerminal { name: String },
    #[error("edges do not form a cut for terminal {terminal:?}")]
    NotACut { terminal: String },
    #[error("adversary budget {budget} exceeds the {vulnerable} vulnerable edges")]
    BudgetExceedsVulnerable { budget: usize, vulnerable: usize },
    #[error("round count must be at least 1")]
    ZeroRounds,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDescription {
    pub id: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDescription {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDescription>,
    pub source: String,
    pub terminals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
}

/// A validated network. Edge indices follow the file order of the
/// description, which is checked to be a linear extension of the edge
/// precedence order and stays authoritative for positional symbol layouts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    source: usize,
    terminals: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    edge_index: BTreeMap<String, usize>,
    reach: Vec<Vec<bool>>,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_name(&self, v: usize) -> &str {
        &self.nodes[v]
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn edge_ids(&self, edges: &[usize]) -> Vec<String> {
        edges.iter().map(|&e| self.edges[e].id.clone()).collect()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.terminals.contains(&v)
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn source_degree(&self) -> usize {
        self.out_edges[self.source].len()
    }

    /// Node reachability, reflexive.
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }

    /// Edge precedence: `e1` equals `e2` or a directed path leads from the
    /// head of `e1` to the tail of `e2`.
    pub fn edge_precedes(&self, e1: usize, e2: usize) -> bool {
        e1 == e2 || self.reach[self.edges[e1].head][self.edges[e2].tail]
    }

    pub fn description(&self) -> NetworkDescription {
        NetworkDescription {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDescription {
                    id: e.id.clone(),
                    from: self.nodes[e.tail].clone(),
                    to: self.nodes[e.head].clone(),
                })
                .collect(),
            source: self.nodes[self.source].clone(),
            terminals: self.terminals.iter().map(|&t| self.nodes[t].clone()).collect(),
        }
    }

    /// Nodes reachable from the source when the given edges are removed.
    fn reachable_avoiding(&self, removed: &BTreeSet<usize>) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.out_edges[v] {
                if removed.contains(&e) {
                    continue;
                }
                let h = self.edges[e].head;
                if !seen[h] {
                    seen[h] = true;
                    stack.push(h);
                }
            }
        }
        seen
    }

    pub fn disconnects(&self, removed: &BTreeSet<usize>, terminal: usize) -> bool {
        !self.reachable_avoiding(removed)[terminal]
    }
}

pub fn validate_network(desc: &NetworkDescription) -> Result<Network, NetworkError> {
    let mut node_index = BTreeMap::new();
    for (i, name) in desc.nodes.iter().enumerate() {
        if node_index.insert(name.clone(), i).is_some() {
            return Err(NetworkError::DuplicateNode { name: name.clone() });
        }
    }
    let resolve = |name: &str| {
        node_index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::UnknownNode { name: name.to_owned() })
    };

    let mut edge_index = BTreeMap::new();
    let mut edges = Vec::with_capacity(desc.edges.len());
    for (i, e) in desc.edges.iter().enumerate() {
        if edge_index.insert(e.id.clone(), i).is_some() {
            return Err(NetworkError::DuplicateEdge { id: e.id.clone() });
        }
        let endpoint = |name: &String| {
            node_index.get(name).copied().ok_or_else(|| NetworkError::UnknownEndpoint {
                edge: e.id.clone(),
                node: name.clone(),
            })
        };
        edges.push(Edge { id: e.id.clone(), tail: endpoint(&e.from)?, head: endpoint(&e.to)? });
    }

    let source = resolve(&desc.source)?;
    if desc.terminals.is_empty() {
        return Err(NetworkError::NoTerminals);
    }
    let mut terminals = Vec::new();
    for name in &desc.terminals {
        let t = resolve(name)?;
        if t == source {
            return Err(NetworkError::SourceIsTerminal { name: name.clone() });
        }
        if terminals.contains(&t) {
            return Err(NetworkError::DuplicateTerminal { name: name.clone() });
        }
        terminals.push(t);
    }

    for e in &edges {
        if e.head == source {
            return Err(NetworkError::SourceHasInEdges { edge: e.id.clone() });
        }
        if terminals.contains(&e.tail) {
            return Err(NetworkError::TerminalHasOutEdges {
                terminal: desc.nodes[e.tail].clone(),
                edge: e.id.clone(),
            });
        }
    }

    let n = desc.nodes.len();
    let mut in_edges = vec![Vec::new(); n];
    let mut out_edges = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        out_edges[e.tail].push(i);
        in_edges[e.head].push(i);
    }

    let topo = topological_order(&desc.nodes, &edges, &in_edges)?;

    // Reflexive reachability by a reverse topological sweep.
    let mut reach = vec![vec![false; n]; n];
    for &v in topo.iter().rev() {
        reach[v][v] = true;
        let heads: Vec<usize> = out_edges[v].iter().map(|&e| edges[e].head).collect();
        for h in heads {
            for w in 0..n {
                if reach[h][w] {
                    reach[v][w] = true;
                }
            }
        }
    }

    for (i, &t) in terminals.iter().enumerate() {
        if !reach[source][t] {
            return Err(NetworkError::UnreachableTerminal { terminal: desc.terminals[i].clone() });
        }
    }
    for v in 0..n {
        if v == source || terminals.contains(&v) {
            continue;
        }
        let on_path = reach[source][v] && terminals.iter().any(|&t| reach[v][t]);
        if !on_path {
            return Err(NetworkError::DanglingIntermediate { node: desc.nodes[v].clone() });
        }
    }

    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            if reach[edges[j].head][edges[i].tail] {
                return Err(NetworkError::OrderNotLinearExtension {
                    earlier: edges[i].id.clone(),
                    later: edges[j].id.clone(),
                });
            }
        }
    }

    Ok(Network { nodes: desc.nodes.clone(), edges, source, terminals, in_edges, out_edges, edge_index, reach })
}

fn topological_order(
    nodes: &[String],
    edges: &[Edge],
    in_edges: &[Vec<usize>],
) -> Result<Vec<usize>, NetworkError> {
    let n = nodes.len();
    let mut indegree: Vec<usize> = in_edges.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        order.push(v);
        for e in edges.iter().filter(|e| e.tail == v) {
            indegree[e.head] -= 1;
            if indegree[e.head] == 0 {
                ready.insert(e.head);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk backwards through unresolved nodes until one repeats.
    let leftover: BTreeSet<usize> = (0..n).filter(|v| !order.contains(v)).collect();
    let mut visited = BTreeSet::new();
    let mut cur = *leftover.iter().next().expect("leftover nonempty");
    loop {
        if !visited.insert(cur) {
            return Err(NetworkError::CyclicGraph { node: nodes[cur].clone() });
        }
        cur = edges
            .iter()
            .filter(|e| e.head == cur && leftover.contains(&e.tail))
            .map(|e| e.tail)
            .min()
            .expect("unresolved node has an unresolved predecessor");
    }
}

/// An edge cut separating the source from one terminal. Edges are kept in
/// ascending file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCut {
    edges: Vec<usize>,
    from_terminal: usize,
}

impl EdgeCut {
    pub fn new(net: &Network, edge_ids: &[&str], terminal: &str) -> Result<Self, NetworkError> {
        let t = net
            .node_index(terminal)
            .ok_or_else(|| NetworkError::UnknownNode { name: terminal.to_owned() })?;
        if !net.is_terminal(t) {
            return Err(NetworkError::NotATerminal { name: terminal.to_owned() });
        }
        let mut set = BTreeSet::new();
        for id in edge_ids {
            let e = net
                .edge_index(id)
                .ok_or_else(|| NetworkError::UnknownEdge { id: (*id).to_owned() })?;
            set.insert(e);
        }
        if !net.disconnects(&set, t) {
            return Err(NetworkError::NotACut { terminal: terminal.to_owned() });
        }
        Ok(EdgeCut { edges: set.into_iter().collect(), from_terminal: t })
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn from_terminal(&self) -> usize {
        self.from_terminal
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }
}

/// All minimal edge cuts separating the source from `terminal`, sorted
/// lexicographically by their edge index sequences.
pub fn enumerate_edge_cuts(net: &Network, terminal: &str) -> Result<Vec<EdgeCut>, NetworkError> {
    let t = net
        .node_index(terminal)
        .ok_or_else(|| NetworkError::UnknownNode { name: terminal.to_owned() })?;
    if !net.is_terminal(t) {
        return Err(NetworkError::NotATerminal { name: terminal.to_owned() });
    }
    let others: Vec<usize> =
        (0..net.node_count()).filter(|&v| v != net.source() && v != t).collect();
    let mut found = BTreeSet::new();
    // Every minimal cut is the out-edge boundary of the source side that it
    // induces, so scanning vertex bipartitions is exhaustive.
    for mask in 0u64..(1 << others.len()) {
        let mut side = vec![false; net.node_count()];
        side[net.source()] = true;
        for (bit, &v) in others.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        let cut: BTreeSet<usize> = (0..net.edge_count())
            .filter(|&e| side[net.edge(e).tail] && !side[net.edge(e).head])
            .collect();
        if cut.is_empty() {
            continue;
        }
        let minimal = cut.iter().all(|&e| {
            let mut rest = cut.clone();
            rest.remove(&e);
            !net.disconnects(&rest, t)
        });
        if minimal && net.disconnects(&cut, t) {
            found.insert(cut.into_iter().collect::<Vec<_>>());
        }
    }
    Ok(found.into_iter().map(|edges| EdgeCut { edges, from_terminal: t }).collect())
}

/// Cut precedence: every edge of `c2` is preceded by (or equal to) some edge
/// of `c1`.
pub fn precedes(net: &Network, c1: &EdgeCut, c2: &EdgeCut) -> bool {
    c2.edges().iter().all(|&e2| c1.edges().iter().any(|&e1| net.edge_precedes(e1, e2)))
}

/// Edges of `cut` that precede `e` with no other cut edge strictly between.
pub fn immediate_predecessors(net: &Network, e: usize, cut: &EdgeCut) -> Vec<usize> {
    let pred: Vec<usize> =
        cut.edges().iter().copied().filter(|&e1| net.edge_precedes(e1, e)).collect();
    pred.iter()
        .copied()
        .filter(|&e1| {
            !pred.iter().any(|&mid| mid != e1 && net.edge_precedes(e1, mid))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "fixed")]
    FixedEdges,
    #[serde(rename = "free")]
    FreeEdges,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::FixedEdges => "fixed",
            Scenario::FreeEdges => "free",
        }
    }
}

/// Adversary acting on a network: may rewrite the symbols of up to `budget`
/// vulnerable edges in each of `rounds` transmission rounds. Under
/// `FixedEdges` the attacked edge set is chosen once for all rounds, under
/// `FreeEdges` it may differ per round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryModel {
    vulnerable: BTreeSet<usize>,
    budget: usize,
    rounds: usize,
    scenario: Scenario,
}

impl AdversaryModel {
    pub fn new(
        net: &Network,
        vulnerable_ids: &[&str],
        budget: usize,
        rounds: usize,
        scenario: Scenario,
    ) -> Result<Self, NetworkError> {
        let mut vulnerable = BTreeSet::new();
        for id in vulnerable_ids {
            let e = net
                .edge_index(id)
                .ok_or_else(|| NetworkError::UnknownEdge { id: (*id).to_owned() })?;
            vulnerable.insert(e);
        }
        Self::from_indices(vulnerable, budget, rounds, scenario)
    }

    pub fn from_indices(
        vulnerable: BTreeSet<usize>,
        budget: usize,
        rounds: usize,
        scenario: Scenario,
    ) -> Result<Self, NetworkError> {
        if budget > vulnerable.len() {
            return Err(NetworkError::BudgetExceedsVulnerable {
                budget,
                vulnerable: vulnerable.len(),
            });
        }
        if rounds == 0 {
            return Err(NetworkError::ZeroRounds);
        }
        Ok(AdversaryModel { vulnerable, budget, rounds, scenario })
    }

    pub fn vulnerable(&self) -> &BTreeSet<usize> {
        &self.vulnerable
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn with_rounds(&self, rounds: usize) -> Self {
        let mut adv = self.clone();
        adv.rounds = rounds.max(1);
        adv
    }

    pub fn with_scenario(&self, scenario: Scenario) -> Self {
        let mut adv = self.clone();
        adv.scenario = scenario;
        adv
    }

    /// Restriction to the given edges; the budget is clamped to the size of
    /// the restricted vulnerable set.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let vulnerable: BTreeSet<usize> =
            keep.iter().copied().filter(|e| self.vulnerable.contains(e)).collect();
        let budget = self.budget.min(vulnerable.len());
        AdversaryModel { vulnerable, budget, rounds: self.rounds, scenario: self.scenario }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct InstanceDescription {
    alphabet_size: u8,
    nodes: Vec<String>,
    edges: Vec<EdgeDescription>,
    source: String,
    terminals: Vec<String>,
    vulnerable: Vec<String>,
    t: usize,
    rounds: usize,
    scenario: Scenario,
}

/// A network together with its alphabet and adversary model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub alphabet: Alphabet,
    pub network: Network,
    pub adversary: AdversaryModel,
}

impl Instance {
    pub fn new(alphabet: Alphabet, network: Network, adversary: AdversaryModel) -> Self {
        Instance { alphabet, network, adversary }
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let desc: InstanceDescription = serde_json::from_str(text)?;
        let network = validate_network(&NetworkDescription {
            nodes: desc.nodes,
            edges: desc.edges,
            source: desc.source,
            terminals: desc.terminals,
        })?;
        let ids: Vec<&str> = desc.vulnerable.iter().map(String::as_str).collect();
        let adversary = AdversaryModel::new(&network, &ids, desc.t, desc.rounds, desc.scenario)?;
        Ok(Instance { alphabet: Alphabet::new(desc.alphabet_size)?, network, adversary })
    }

    pub fn to_json(&self) -> String {
        let net = self.network.description();
        let desc = InstanceDescription {
            alphabet_size: self.alphabet.size(),
            nodes: net.nodes,
            edges: net.edges,
            source: net.source,
            terminals: net.terminals,
            vulnerable: self
                .adversary
                .vulnerable()
                .iter()
                .map(|&e| self.network.edge(e).id.clone())
                .collect(),
            t: self.adversary.budget(),
            rounds: self.adversary.rounds(),
            scenario: self.adversary.scenario(),
        };
        serde_json::to_string_pretty(&desc).expect("instance serialization cannot fail")
    }
}
