//! Cut-set bounds, 2-level degree profiles, and network reductions.

use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{self, CapacityResult, ChannelError};
use crate::code::{CodeError, NetworkCode, TableSpace};
use crate::net::{
    self, enumerate_edge_cuts, validate_network, AdversaryModel, EdgeCut, EdgeDescription,
    Instance, Network, NetworkDescription, NetworkError, Scenario,
};
use crate::search::SearchBudget;
use crate::transfer::{self, TransferError};
use crate::word;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("{what} needs {need} but the budget allows {limit}")]
    BudgetExceeded { what: &'static str, need: u128, limit: u128 },
    #[error("the first cut must precede the second")]
    CutsNotOrdered,
    #[error("network is not 3-level: {reason}")]
    NotThreeLevel { reason: String },
    #[error("bad profile: {reason}")]
    BadProfile { reason: String },
    #[error("candidate mode needs at least one network code")]
    NoCandidates,
    #[error(transparent)]
    Net(#[from] NetworkError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Degree profile of a simple 2-level network: intermediate node k receives
/// `in_degrees[k]` parallel edges from the source and sends `out_degrees[k]`
/// parallel edges to the terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoLevelProfile {
    in_degrees: Vec<usize>,
    out_degrees: Vec<usize>,
}

impl TwoLevelProfile {
    pub fn new(in_degrees: Vec<usize>, out_degrees: Vec<usize>) -> Result<Self, BoundsError> {
        if in_degrees.is_empty() || in_degrees.len() != out_degrees.len() {
            return Err(BoundsError::BadProfile {
                reason: "need equally many in and out degrees, at least one pair".into(),
            });
        }
        if in_degrees.iter().chain(&out_degrees).any(|&d| d == 0) {
            return Err(BoundsError::BadProfile { reason: "degrees must be at least 1".into() });
        }
        if in_degrees.len() > 32 {
            return Err(BoundsError::BadProfile {
                reason: "more than 32 intermediate nodes".into(),
            });
        }
        Ok(TwoLevelProfile { in_degrees, out_degrees })
    }

    pub fn node_count(&self) -> usize {
        self.in_degrees.len()
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degrees
    }

    pub fn out_degrees(&self) -> &[usize] {
        &self.out_degrees
    }

    pub fn total_in(&self) -> usize {
        self.in_degrees.iter().sum()
    }

    pub fn total_out(&self) -> usize {
        self.out_degrees.iter().sum()
    }

    /// The (in, out) degree pairs as a sorted multiset, the shape invariant
    /// under relabeling intermediate nodes.
    pub fn degree_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> =
            self.in_degrees.iter().copied().zip(self.out_degrees.iter().copied()).collect();
        pairs.sort_unstable();
        pairs
    }

    /// Builds the profiled network with nodes S, V1..Vj, T and edge ids e1,
    /// e2, ... numbering the source edges first, grouped per node.
    pub fn realize(&self) -> Network {
        let j = self.node_count();
        let mut nodes = vec!["S".to_owned()];
        nodes.extend((1..=j).map(|k| format!("V{k}")));
        nodes.push("T".to_owned());
        let mut edges = Vec::new();
        for (k, &d) in self.in_degrees.iter().enumerate() {
            for _ in 0..d {
                edges.push(edge_desc(edges.len() + 1, "S".into(), format!("V{}", k + 1)));
            }
        }
        for (k, &d) in self.out_degrees.iter().enumerate() {
            for _ in 0..d {
                edges.push(edge_desc(edges.len() + 1, format!("V{}", k + 1), "T".into()));
            }
        }
        let desc = NetworkDescription { nodes, edges, source: "S".into(), terminals: vec!["T".into()] };
        validate_network(&desc).expect("profile realizations are valid networks")
    }
}

fn edge_desc(number: usize, from: String, to: String) -> EdgeDescription {
    EdgeDescription { id: format!("e{number}"), from, to }
}

/// Reads off the degree profile when `net` is a simple 2-level network:
/// one terminal, and every intermediate node fed only by the source and
/// feeding only the terminal.
pub fn two_level_profile(net: &Network) -> Option<TwoLevelProfile> {
    if net.terminals().len() != 1 {
        return None;
    }
    let s = net.source();
    let t = net.terminals()[0];
    if net.out_edges(s).iter().any(|&e| net.edge(e).head == t) {
        return None;
    }
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for v in 0..net.node_count() {
        if v == s || v == t {
            continue;
        }
        if net.in_edges(v).iter().any(|&e| net.edge(e).tail != s) {
            return None;
        }
        if net.out_edges(v).iter().any(|&e| net.edge(e).head != t) {
            return None;
        }
        ins.push(net.in_edges(v).len());
        outs.push(net.out_edges(v).len());
    }
    TwoLevelProfile::new(ins, outs).ok()
}

/// A bound value: a per-round symbol count, or an exact code size over a
/// number of rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundValue {
    Symbols(u64),
    CodeSize { q: u8, size: u128, rounds: usize },
}

impl BoundValue {
    /// Rate in symbols per round.
    pub fn rate(&self) -> f64 {
        match *self {
            BoundValue::Symbols(s) => s as f64,
            BoundValue::CodeSize { q, size, rounds } => {
                (size as f64).log2() / (q as f64).log2() / rounds as f64
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundWitness {
    Cut { terminal: String, edges: Vec<String> },
    Partition { first: Vec<usize>, second: Vec<usize> },
    CutPair { from: Vec<String>, to: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundMode {
    Exact,
    Exhaustive { explored: u128, same_tables_each_round: bool },
    Candidates { count: usize },
    Analytic { basis: String },
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub name: &'static str,
    pub value: BoundValue,
    pub witness: BoundWitness,
    pub mode: BoundMode,
}

/// Network singleton bound. For each minimal cut, the adversary can erase
/// the information of 2t vulnerable cut edges; what remains caps the
/// one-shot rate in symbols. Reports the minimizing cut, preferring earlier
/// terminals and lexicographically smaller cuts on ties.
pub fn singleton_cut_set_bound(
    net: &Network,
    adv: &AdversaryModel,
) -> Result<BoundReport, BoundsError> {
    let mut best: Option<(u64, EdgeCut)> = None;
    for &term in net.terminals() {
        for cut in enumerate_edge_cuts(net, net.node_name(term))? {
            let value = singleton_cut_value(&cut, adv);
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, cut));
            }
        }
    }
    let (value, cut) = best.expect("validated networks have terminal cuts");
    Ok(BoundReport {
        name: "network singleton",
        value: BoundValue::Symbols(value),
        witness: BoundWitness::Cut {
            terminal: net.node_name(cut.from_terminal()).to_owned(),
            edges: net.edge_ids(cut.edges()),
        },
        mode: BoundMode::Exact,
    })
}

/// Safe edges plus vulnerable edges beyond the 2t the adversary can void.
pub fn singleton_cut_value(cut: &EdgeCut, adv: &AdversaryModel) -> u64 {
    let vulnerable = cut.edges().iter().filter(|e| adv.vulnerable().contains(e)).count();
    let safe = cut.edges().len() - vulnerable;
    (safe + vulnerable.saturating_sub(2 * adv.budget())) as u64
}

/// Closed-form singleton bound for a 2-level profile with every source edge
/// vulnerable: minimize, over splits of the intermediate nodes, the terminal
/// edges of the first part plus the source edges of the second part less 2t.
pub fn generalized_network_singleton_bound(profile: &TwoLevelProfile, t: usize) -> BoundReport {
    let j = profile.node_count();
    let mut best_value = u64::MAX;
    let mut best_mask = 0u64;
    for mask in 0u64..1 << j {
        let mut in_sum = 0usize;
        let mut out_sum = 0usize;
        for k in 0..j {
            if mask & (1 << k) != 0 {
                in_sum += profile.in_degrees[k];
            } else {
                out_sum += profile.out_degrees[k];
            }
        }
        let value = (out_sum + in_sum.saturating_sub(2 * t)) as u64;
        if value < best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    BoundReport {
        name: "generalized network singleton",
        value: BoundValue::Symbols(best_value),
        witness: BoundWitness::Partition {
            first: (0..j).filter(|k| best_mask & (1 << k) == 0).collect(),
            second: (0..j).filter(|k| best_mask & (1 << k) != 0).collect(),
        },
        mode: BoundMode::Exact,
    }
}

/// One-shot capacity of the pure corruption channel across one cut: the
/// adversary rewrites its vulnerable cut edges and everything else passes
/// through. Independent of any network code.
pub fn cut_corruption_capacity(
    inst: &Instance,
    cut: &EdgeCut,
    budget: &SearchBudget,
) -> Result<CapacityResult, BoundsError> {
    let q = inst.alphabet.size();
    let rounds = inst.adversary.rounds();
    let need = word::checked_space_size(q, cut.edges().len() * rounds).unwrap_or(u128::MAX);
    if need > budget.max_domain {
        return Err(BoundsError::BudgetExceeded {
            what: "cut domain",
            need,
            limit: budget.max_domain,
        });
    }
    let empty = NetworkCode::per_round(vec![BTreeMap::new(); rounds]);
    let chan = transfer::channel_between_cuts(inst, &empty, cut, cut)?;
    Ok(channel::one_shot_capacity(&[&chan], None)?)
}

/// Multishot cut-set bound: the minimum over minimal cuts of the one-shot
/// capacity across the cut under pure corruption, as a code size over the
/// instance's rounds.
pub fn multishot_cut_set_bound(
    inst: &Instance,
    budget: &SearchBudget,
) -> Result<BoundReport, BoundsError> {
    let net = &inst.network;
    let mut cuts = Vec::new();
    for &term in net.terminals() {
        cuts.extend(enumerate_edge_cuts(net, net.node_name(term))?);
    }
    let sizes = cuts
        .par_iter()
        .map(|cut| cut_corruption_capacity(inst, cut, budget).map(|cap| cap.size))
        .collect::<Result<Vec<u64>, BoundsError>>()?;
    let mut best = 0usize;
    for (idx, &size) in sizes.iter().enumerate() {
        if size < sizes[best] {
            best = idx;
        }
    }
    Ok(BoundReport {
        name: "multishot cut-set",
        value: BoundValue::CodeSize {
            q: inst.alphabet.size(),
            size: sizes[best] as u128,
            rounds: inst.adversary.rounds(),
        },
        witness: BoundWitness::Cut {
            terminal: net.node_name(cuts[best].from_terminal()).to_owned(),
            edges: net.edge_ids(cuts[best].edges()),
        },
        mode: BoundMode::Exact,
    })
}

/// How `double_cut_set_bound` ranges over inner codes.
pub enum DoubleCutMode {
    /// Enumerate every table assignment for the nodes between the cuts, one
    /// table per node reused each round.
    Exhaustive,
    /// Maximize over the supplied network codes only.
    Candidates(Vec<NetworkCode>),
    /// Reduce the cut pair to a simple 2-level network and use a closed
    /// form when one applies, else the reduced network's singleton bound.
    Analytic,
}

/// Upper bound from an ordered cut pair: the best capacity any inner code
/// can realize for the channel from the first cut to the second.
pub fn double_cut_set_bound(
    inst: &Instance,
    from: &EdgeCut,
    to: &EdgeCut,
    mode: DoubleCutMode,
    budget: &SearchBudget,
) -> Result<BoundReport, BoundsError> {
    let net = &inst.network;
    if !net::precedes(net, from, to) {
        return Err(BoundsError::CutsNotOrdered);
    }
    let q = inst.alphabet.size();
    let rounds = inst.adversary.rounds();
    let witness = BoundWitness::CutPair {
        from: net.edge_ids(from.edges()),
        to: net.edge_ids(to.edges()),
    };
    let domain = word::checked_space_size(q, from.edges().len() * rounds).unwrap_or(u128::MAX);
    let check_domain = |what: &'static str| {
        if domain > budget.max_domain {
            Err(BoundsError::BudgetExceeded { what, need: domain, limit: budget.max_domain })
        } else {
            Ok(())
        }
    };
    match mode {
        DoubleCutMode::Exhaustive => {
            check_domain("cut domain")?;
            let analysis = transfer::analyze_cut_pair(net, from, to)?;
            let space = TableSpace::new(net, inst.alphabet, analysis.demanded_nodes(), 1, false);
            let total = space.as_ref().and_then(TableSpace::count);
            let total = match total {
                Some(total)
                    if total <= budget.max_network_codes && total <= usize::MAX as u128 =>
                {
                    total
                }
                other => {
                    return Err(BoundsError::BudgetExceeded {
                        what: "network code enumeration",
                        need: other.unwrap_or(u128::MAX),
                        limit: budget.max_network_codes,
                    })
                }
            };
            let space = space.expect("a finite enumeration count implies a table space");
            let start = Instant::now();
            let deadline = start + Duration::from_secs(budget.max_seconds);
            let timed_out = AtomicBool::new(false);
            let sizes = (0..total as usize)
                .into_par_iter()
                .map(|index| {
                    if timed_out.load(Ordering::Relaxed) {
                        return Ok(0);
                    }
                    if Instant::now() > deadline {
                        timed_out.store(true, Ordering::Relaxed);
                        return Ok(0);
                    }
                    let code = NetworkCode::per_round_same(space.map_at(index as u128), rounds);
                    let chan = transfer::channel_between_cuts(inst, &code, from, to)?;
                    Ok(channel::one_shot_capacity(&[&chan], None)?.size)
                })
                .collect::<Result<Vec<u64>, BoundsError>>()?;
            if timed_out.load(Ordering::Relaxed) {
                return Err(BoundsError::BudgetExceeded {
                    what: "wall clock seconds",
                    need: start.elapsed().as_secs() as u128,
                    limit: budget.max_seconds as u128,
                });
            }
            let size = sizes.iter().copied().max().unwrap_or(0);
            Ok(BoundReport {
                name: "double cut-set",
                value: BoundValue::CodeSize { q, size: size as u128, rounds },
                witness,
                mode: BoundMode::Exhaustive { explored: total, same_tables_each_round: true },
            })
        }
        DoubleCutMode::Candidates(codes) => {
            if codes.is_empty() {
                return Err(BoundsError::NoCandidates);
            }
            check_domain("cut domain")?;
            let sizes = codes
                .par_iter()
                .map(|code| {
                    let chan = transfer::channel_between_cuts(inst, code, from, to)?;
                    Ok(channel::one_shot_capacity(&[&chan], None)?.size)
                })
                .collect::<Result<Vec<u64>, BoundsError>>()?;
            let size = sizes.iter().copied().max().expect("candidate list is nonempty");
            Ok(BoundReport {
                name: "double cut-set",
                value: BoundValue::CodeSize { q, size: size as u128, rounds },
                witness,
                mode: BoundMode::Candidates { count: codes.len() },
            })
        }
        DoubleCutMode::Analytic => {
            let (reduced, origin) = cut_pair_reduction(net, from, to)?;
            let profile =
                two_level_profile(&reduced).expect("cut pair reductions are 2-level");
            let fully_vulnerable =
                from.edges().iter().all(|e| inst.adversary.vulnerable().contains(e));
            let t = inst.adversary.budget();
            if fully_vulnerable {
                if let Some((size, basis)) = closed_form_capacity(
                    &profile.degree_pairs(),
                    t,
                    inst.adversary.scenario(),
                    q,
                    rounds,
                ) {
                    return Ok(BoundReport {
                        name: "double cut-set",
                        value: BoundValue::CodeSize { q, size, rounds },
                        witness,
                        mode: BoundMode::Analytic { basis },
                    });
                }
            }
            // No closed form: take the reduced network's singleton bound,
            // carrying the vulnerability through the reduction.
            let vulnerable_ids: Vec<String> = origin
                .iter()
                .enumerate()
                .filter(|(_, orig)| inst.adversary.vulnerable().contains(orig))
                .map(|(k, _)| reduced.edge(k).id.clone())
                .collect();
            let refs: Vec<&str> = vulnerable_ids.iter().map(String::as_str).collect();
            let adv = AdversaryModel::new(
                &reduced,
                &refs,
                t.min(refs.len()),
                rounds,
                inst.adversary.scenario(),
            )?;
            let singleton = singleton_cut_set_bound(&reduced, &adv)?;
            let symbols = match singleton.value {
                BoundValue::Symbols(s) => s,
                BoundValue::CodeSize { .. } => unreachable!("singleton reports symbols"),
            };
            let size = word::checked_space_size(q, symbols as usize * rounds)
                .unwrap_or(u128::MAX);
            Ok(BoundReport {
                name: "double cut-set",
                value: BoundValue::CodeSize { q, size, rounds },
                witness,
                mode: BoundMode::Analytic {
                    basis: "singleton bound of the reduced network".into(),
                },
            })
        }
    }
}

/// Exact multishot capacities for reduced shapes whose values are known in
/// closed form. Applies only with every source-side edge vulnerable.
fn closed_form_capacity(
    pairs: &[(usize, usize)],
    t: usize,
    scenario: Scenario,
    q: u8,
    rounds: usize,
) -> Option<(u128, String)> {
    if t == 0 {
        return None;
    }
    let q = q as u128;
    let i = rounds as u32;
    match *pairs {
        [(1, 1), (2, 1)] if t == 1 => {
            let size = match scenario {
                Scenario::FixedEdges => q.pow(i) - 1,
                Scenario::FreeEdges => (q - 1).pow(i),
            };
            Some((size, "diamond".into()))
        }
        [(a1, 1), (a2, 1)] if a1 == 2 * t && a2 == 2 * t => {
            Some((q.pow(i), "family-d".into()))
        }
        [(a1, b1), (a2, b2)] if t >= 2 && (a1, b1) == (t, t) && (a2, b2) == (t + 1, t) => {
            Some((q.pow(i), "family-c".into()))
        }
        _ => None,
    }
}

/// Realizes the channel between two ordered cuts as a 3-level network: one
/// relay per edge of each cut, connected where the first-cut edge is an
/// immediate predecessor of the second-cut edge.
pub fn cut_pair_to_3level(
    net: &Network,
    from: &EdgeCut,
    to: &EdgeCut,
) -> Result<Network, BoundsError> {
    if !net::precedes(net, from, to) {
        return Err(BoundsError::CutsNotOrdered);
    }
    let mut nodes = vec!["S".to_owned()];
    nodes.extend((1..=from.edges().len()).map(|k| format!("U{k}")));
    nodes.extend((1..=to.edges().len()).map(|l| format!("W{l}")));
    nodes.push("T".to_owned());
    let mut edges = Vec::new();
    for k in 1..=from.edges().len() {
        edges.push(edge_desc(edges.len() + 1, "S".into(), format!("U{k}")));
    }
    for (l, &f) in to.edges().iter().enumerate() {
        for e in net::immediate_predecessors(net, f, from) {
            let k = from
                .edges()
                .iter()
                .position(|&x| x == e)
                .expect("immediate predecessors lie in the first cut");
            edges.push(edge_desc(edges.len() + 1, format!("U{}", k + 1), format!("W{}", l + 1)));
        }
    }
    for l in 1..=to.edges().len() {
        edges.push(edge_desc(edges.len() + 1, format!("W{l}"), "T".into()));
    }
    let desc =
        NetworkDescription { nodes, edges, source: "S".into(), terminals: vec!["T".into()] };
    Ok(validate_network(&desc)?)
}

/// Merges the middle levels of a 3-level network into one intermediate node
/// per connected component of the middle bipartite graph.
pub fn reduce_3level_to_2level(net: &Network) -> Result<Network, BoundsError> {
    reduce_3level(net).map(|(reduced, _)| reduced)
}

/// Full reduction of an ordered cut pair to a simple 2-level network.
pub fn cut_pair_to_2level(
    net: &Network,
    from: &EdgeCut,
    to: &EdgeCut,
) -> Result<Network, BoundsError> {
    cut_pair_reduction(net, from, to).map(|(reduced, _)| reduced)
}

/// Like `cut_pair_to_2level`, also mapping each source edge of the reduced
/// network back to the `from` edge it stands for.
fn cut_pair_reduction(
    net: &Network,
    from: &EdgeCut,
    to: &EdgeCut,
) -> Result<(Network, Vec<usize>), BoundsError> {
    let three = cut_pair_to_3level(net, from, to)?;
    let (reduced, origin) = reduce_3level(&three)?;
    // Level-1 edges of the 3-level network appear in cut order.
    Ok((reduced, origin.into_iter().map(|k| from.edges()[k]).collect()))
}

/// Returns the reduced network and, for each of its source edges in order,
/// the index of the originating level-1 edge.
fn reduce_3level(net: &Network) -> Result<(Network, Vec<usize>), BoundsError> {
    if net.terminals().len() != 1 {
        return Err(BoundsError::NotThreeLevel { reason: "need exactly one terminal".into() });
    }
    let s = net.source();
    let t = net.terminals()[0];
    // Levels are breadth-first depths; every edge must advance one level
    // and the terminal must sit at depth 3.
    let mut level = vec![usize::MAX; net.node_count()];
    level[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &e in net.out_edges(v) {
            let head = net.edge(e).head;
            if level[head] == usize::MAX {
                level[head] = level[v] + 1;
                queue.push_back(head);
            }
        }
    }
    if level[t] != 3 {
        return Err(BoundsError::NotThreeLevel {
            reason: format!("terminal sits at depth {} instead of 3", level[t]),
        });
    }
    for e in 0..net.edge_count() {
        let edge = net.edge(e);
        if level[edge.head] != level[edge.tail] + 1 {
            return Err(BoundsError::NotThreeLevel {
                reason: format!("edge {} skips a level", edge.id),
            });
        }
    }
    // Connected components of the middle bipartite graph, numbered by their
    // smallest node index.
    let mut component = vec![usize::MAX; net.node_count()];
    let mut count = 0usize;
    for v in 0..net.node_count() {
        if level[v] == 0 || level[v] == 3 || component[v] != usize::MAX {
            continue;
        }
        component[v] = count;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &e in net.out_edges(u).iter().chain(net.in_edges(u)) {
                let d = net.edge(e);
                if level[d.tail] == 0 || level[d.head] == 3 {
                    continue;
                }
                let w = if d.tail == u { d.head } else { d.tail };
                if component[w] == usize::MAX {
                    component[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    let mut nodes = vec!["S".to_owned()];
    nodes.extend((1..=count).map(|c| format!("V{c}")));
    nodes.push("T".to_owned());
    let mut edges = Vec::new();
    let mut origin = Vec::new();
    for c in 0..count {
        for e in 0..net.edge_count() {
            let d = net.edge(e);
            if level[d.tail] == 0 && component[d.head] == c {
                origin.push(e);
                edges.push(edge_desc(edges.len() + 1, "S".into(), format!("V{}", c + 1)));
            }
        }
    }
    for c in 0..count {
        for e in 0..net.edge_count() {
            let d = net.edge(e);
            if level[d.head] == 3 && component[d.tail] == c {
                edges.push(edge_desc(edges.len() + 1, format!("V{}", c + 1), "T".into()));
            }
        }
    }
    let desc =
        NetworkDescription { nodes, edges, source: "S".into(), terminals: vec!["T".into()] };
    Ok((validate_network(&desc)?, origin))
}
