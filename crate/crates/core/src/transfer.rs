//! Evaluation of network codes and the adversarial fan-outs they induce.
//!
//! Multishot words are laid out round-major everywhere: a source word is the
//! concatenation of one symbol block per round, each block holding one
//! symbol per source out-edge in file order, and observations follow the
//! same convention over a terminal's in-edges.

use crate::channel::{Channel, Space};
use crate::code::{CodeError, FnTable, NetworkCode};
use crate::net::{self, AdversaryModel, Alphabet, EdgeCut, Instance, Network, Scenario, Symbol};
use crate::word::{self, FanOutSet};
use itertools::Itertools;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("input word has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("round {round} out of range for a {rounds}-round code")]
    RoundOutOfRange { round: usize, rounds: usize },
    #[error("window tables evaluate whole windows, not single rounds")]
    WindowCodePerRoundEval,
    #[error("window tables require the fixed-edge scenario")]
    BlockCodeFreeEdges,
    #[error("cut channels require the first cut to precede the second")]
    CutsNotOrdered,
    #[error("edge {edge:?} is not determined by the values on the first cut")]
    UndeterminedEdge { edge: String },
    #[error(transparent)]
    Code(#[from] CodeError),
}

fn check_word(alphabet: Alphabet, x: &[Symbol], expected: usize) -> Result<(), TransferError> {
    if x.len() != expected {
        return Err(TransferError::LengthMismatch { expected, got: x.len() });
    }
    if let Some(&s) = x.iter().find(|&&s| s >= alphabet.size()) {
        return Err(CodeError::SymbolRange { symbol: s, q: alphabet.size() }.into());
    }
    Ok(())
}

fn position(net: &Network, e: usize) -> usize {
    let tail = net.edge(e).tail;
    net.out_edges(tail).iter().position(|&f| f == e).expect("edge listed at its tail")
}

/// One round of evaluation. Replacements in `overrides` (sorted by edge)
/// take effect after the tail writes the edge, so downstream nodes read the
/// corrupted values. Returns the effective value of every edge.
fn eval_round(
    net: &Network,
    tables: &BTreeMap<usize, FnTable>,
    x: &[Symbol],
    overrides: &[(usize, Symbol)],
) -> Vec<Symbol> {
    let mut values = vec![0; net.edge_count()];
    let mut node_out: Vec<Option<Vec<Symbol>>> = vec![None; net.node_count()];
    let mut inputs = Vec::new();
    for e in 0..net.edge_count() {
        let tail = net.edge(e).tail;
        let raw = if tail == net.source() {
            x[position(net, e)]
        } else {
            if node_out[tail].is_none() {
                inputs.clear();
                inputs.extend(net.in_edges(tail).iter().map(|&f| values[f]));
                node_out[tail] = Some(tables[&tail].eval(&inputs).to_vec());
            }
            node_out[tail].as_ref().expect("just filled")[position(net, e)]
        };
        values[e] = match overrides.binary_search_by_key(&e, |&(f, _)| f) {
            Ok(k) => overrides[k].1,
            Err(_) => raw,
        };
    }
    values
}

/// Whole-window evaluation for window tables; values are per-edge windows of
/// one symbol per round.
fn eval_window(
    net: &Network,
    tables: &BTreeMap<usize, FnTable>,
    rounds: usize,
    x: &[Symbol],
    overrides: &[(usize, Vec<Symbol>)],
) -> Vec<Vec<Symbol>> {
    let deg = net.source_degree();
    let mut values: Vec<Vec<Symbol>> = vec![Vec::new(); net.edge_count()];
    let mut node_out: Vec<Option<Vec<Symbol>>> = vec![None; net.node_count()];
    for e in 0..net.edge_count() {
        let tail = net.edge(e).tail;
        let pos = position(net, e);
        let raw: Vec<Symbol> = if tail == net.source() {
            (0..rounds).map(|r| x[r * deg + pos]).collect()
        } else {
            if node_out[tail].is_none() {
                let ins = net.in_edges(tail);
                let mut input = Vec::with_capacity(ins.len() * rounds);
                for r in 0..rounds {
                    for &f in ins {
                        input.push(values[f][r]);
                    }
                }
                node_out[tail] = Some(tables[&tail].eval(&input).to_vec());
            }
            let out = node_out[tail].as_ref().expect("just filled");
            let outdeg = net.out_edges(tail).len();
            (0..rounds).map(|r| out[r * outdeg + pos]).collect()
        };
        values[e] = match overrides.binary_search_by_key(&e, |(f, _)| *f) {
            Ok(k) => overrides[k].1.clone(),
            Err(_) => raw,
        };
    }
    values
}

/// Honest single-round evaluation: the value every edge carries in the given
/// round when the adversary does nothing.
pub fn evaluate_deterministic(
    net: &Network,
    alphabet: Alphabet,
    code: &NetworkCode,
    round: usize,
    x: &[Symbol],
) -> Result<Vec<Symbol>, TransferError> {
    code.validate(net, alphabet)?;
    check_word(alphabet, x, net.source_degree())?;
    let tables = match code {
        NetworkCode::PerRound { rounds } => rounds
            .get(round)
            .ok_or(TransferError::RoundOutOfRange { round, rounds: rounds.len() })?,
        NetworkCode::Block { rounds: 1, tables } if round == 0 => tables,
        NetworkCode::Block { rounds, .. } => {
            return Err(if round >= *rounds {
                TransferError::RoundOutOfRange { round, rounds: *rounds }
            } else {
                TransferError::WindowCodePerRoundEval
            });
        }
    };
    Ok(eval_round(net, tables, x, &[]))
}

/// Honest multishot evaluation: the window every edge carries.
pub fn evaluate_honest_window(
    net: &Network,
    alphabet: Alphabet,
    code: &NetworkCode,
    x: &[Symbol],
) -> Result<Vec<Vec<Symbol>>, TransferError> {
    code.validate(net, alphabet)?;
    let rounds = code.rounds();
    check_word(alphabet, x, net.source_degree() * rounds)?;
    match code {
        NetworkCode::Block { tables, .. } => Ok(eval_window(net, tables, rounds, x, &[])),
        NetworkCode::PerRound { rounds: maps } => {
            let deg = net.source_degree();
            let mut values = vec![vec![0; rounds]; net.edge_count()];
            for (r, tables) in maps.iter().enumerate() {
                let round_vals = eval_round(net, tables, &x[r * deg..(r + 1) * deg], &[]);
                for (e, &v) in round_vals.iter().enumerate() {
                    values[e][r] = v;
                }
            }
            Ok(values)
        }
    }
}

/// Fan-out sets of one source word, one set per terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanOut {
    pub per_terminal: Vec<FanOutSet>,
}

/// Single-round fan-out at every terminal when the adversary rewrites
/// exactly the edges in `attacked` (values free, including the honest one).
fn round_fan_fixed(
    net: &Network,
    q: u8,
    tables: &BTreeMap<usize, FnTable>,
    x: &[Symbol],
    attacked: &[usize],
) -> Vec<FanOutSet> {
    let mut per_terminal = vec![Vec::new(); net.terminals().len()];
    let mut overrides: Vec<(usize, Symbol)> = attacked.iter().map(|&e| (e, 0)).collect();
    let count = word::space_size(q, attacked.len()) as u64;
    let mut tuple = Vec::new();
    for v in 0..count {
        tuple.clear();
        word::decode_into(q, attacked.len(), v, &mut tuple);
        for (slot, &s) in overrides.iter_mut().zip(&tuple) {
            slot.1 = s;
        }
        let values = eval_round(net, tables, x, &overrides);
        for (ti, &t) in net.terminals().iter().enumerate() {
            let obs: Vec<Symbol> = net.in_edges(t).iter().map(|&f| values[f]).collect();
            per_terminal[ti].push(word::encode(q, &obs));
        }
    }
    for set in &mut per_terminal {
        word::sort_dedup(set);
    }
    per_terminal
}

fn window_fan_fixed(
    net: &Network,
    q: u8,
    tables: &BTreeMap<usize, FnTable>,
    rounds: usize,
    x: &[Symbol],
    attacked: &[usize],
    out: &mut [FanOutSet],
) {
    let width = attacked.len() * rounds;
    let total = word::space_size(q, width) as u64;
    let mut syms = Vec::new();
    for idx in 0..total {
        syms.clear();
        word::decode_into(q, width, idx, &mut syms);
        let overrides: Vec<(usize, Vec<Symbol>)> = attacked
            .iter()
            .enumerate()
            .map(|(j, &e)| (e, syms[j * rounds..(j + 1) * rounds].to_vec()))
            .collect();
        let values = eval_window(net, tables, rounds, x, &overrides);
        for (ti, &t) in net.terminals().iter().enumerate() {
            let ins = net.in_edges(t);
            let mut obs = Vec::with_capacity(ins.len() * rounds);
            for r in 0..rounds {
                for &f in ins {
                    obs.push(values[f][r]);
                }
            }
            out[ti].push(word::encode(q, &obs));
        }
    }
}

fn product_step(acc: &[u64], set: &[u64], radix: u64) -> Vec<u64> {
    let mut next = Vec::with_capacity(acc.len() * set.len());
    for &a in acc {
        for &y in set {
            next.push(a * radix + y);
        }
    }
    next
}

/// Multishot fan-out of source word `x` at every terminal.
pub fn fan_out_multishot(
    inst: &Instance,
    code: &NetworkCode,
    x: &[Symbol],
) -> Result<FanOut, TransferError> {
    let net = &inst.network;
    let adv = &inst.adversary;
    let q = inst.alphabet.size();
    code.validate(net, inst.alphabet)?;
    if code.rounds() != adv.rounds() {
        return Err(CodeError::WrongRounds { expected: adv.rounds(), got: code.rounds() }.into());
    }
    let rounds = adv.rounds();
    let deg = net.source_degree();
    check_word(inst.alphabet, x, deg * rounds)?;
    let vuln: Vec<usize> = adv.vulnerable().iter().copied().collect();
    let t = adv.budget().min(vuln.len());
    let n_t = net.terminals().len();
    let radix = |term: usize| word::space_size(q, net.in_edges(term).len()) as u64;

    match (code, adv.scenario()) {
        (NetworkCode::PerRound { rounds: maps }, Scenario::FreeEdges) => {
            // Product over rounds of the per-round unions.
            let mut per_terminal: Vec<FanOutSet> = vec![vec![0]; n_t];
            for (r, tables) in maps.iter().enumerate() {
                let xr = &x[r * deg..(r + 1) * deg];
                let mut round_sets: Vec<FanOutSet> = vec![Vec::new(); n_t];
                for attacked in vuln.iter().copied().combinations(t) {
                    for (acc, s) in
                        round_sets.iter_mut().zip(round_fan_fixed(net, q, tables, xr, &attacked))
                    {
                        acc.extend(s);
                    }
                }
                for (ti, &term) in net.terminals().iter().enumerate() {
                    word::sort_dedup(&mut round_sets[ti]);
                    per_terminal[ti] = product_step(&per_terminal[ti], &round_sets[ti], radix(term));
                }
            }
            Ok(FanOut { per_terminal })
        }
        (NetworkCode::PerRound { rounds: maps }, Scenario::FixedEdges) => {
            // Union over edge sets of the product over rounds.
            let mut per_terminal: Vec<FanOutSet> = vec![Vec::new(); n_t];
            for attacked in vuln.iter().copied().combinations(t) {
                let mut combo: Vec<FanOutSet> = vec![vec![0]; n_t];
                for (r, tables) in maps.iter().enumerate() {
                    let xr = &x[r * deg..(r + 1) * deg];
                    let sets = round_fan_fixed(net, q, tables, xr, &attacked);
                    for (ti, &term) in net.terminals().iter().enumerate() {
                        combo[ti] = product_step(&combo[ti], &sets[ti], radix(term));
                    }
                }
                for (acc, s) in per_terminal.iter_mut().zip(combo) {
                    acc.extend(s);
                }
            }
            for set in &mut per_terminal {
                word::sort_dedup(set);
            }
            Ok(FanOut { per_terminal })
        }
        (NetworkCode::Block { tables, .. }, Scenario::FixedEdges) => {
            let mut per_terminal: Vec<FanOutSet> = vec![Vec::new(); n_t];
            for attacked in vuln.iter().copied().combinations(t) {
                window_fan_fixed(net, q, tables, rounds, x, &attacked, &mut per_terminal);
            }
            for set in &mut per_terminal {
                word::sort_dedup(set);
            }
            Ok(FanOut { per_terminal })
        }
        (NetworkCode::Block { .. }, Scenario::FreeEdges) => Err(TransferError::BlockCodeFreeEdges),
    }
}

/// Single-round fan-out; requires a one-round adversary.
pub fn fan_out_single(
    inst: &Instance,
    code: &NetworkCode,
    x: &[Symbol],
) -> Result<FanOut, TransferError> {
    if inst.adversary.rounds() != 1 {
        return Err(CodeError::WrongRounds { expected: 1, got: inst.adversary.rounds() }.into());
    }
    fan_out_multishot(inst, code, x)
}

/// The end-to-end set-valued channel one terminal sees.
pub struct TerminalChannel {
    inst: Instance,
    code: NetworkCode,
    terminal_index: usize,
}

/// One channel per terminal, in the network's terminal order.
pub fn terminal_channels(
    inst: &Instance,
    code: &NetworkCode,
) -> Result<Vec<TerminalChannel>, TransferError> {
    code.validate(&inst.network, inst.alphabet)?;
    if code.rounds() != inst.adversary.rounds() {
        return Err(
            CodeError::WrongRounds { expected: inst.adversary.rounds(), got: code.rounds() }.into()
        );
    }
    if code.is_block() && inst.adversary.scenario() == Scenario::FreeEdges {
        return Err(TransferError::BlockCodeFreeEdges);
    }
    Ok((0..inst.network.terminals().len())
        .map(|terminal_index| TerminalChannel {
            inst: inst.clone(),
            code: code.clone(),
            terminal_index,
        })
        .collect())
}

impl Channel for TerminalChannel {
    fn domain(&self) -> Space {
        Space {
            q: self.inst.alphabet.size(),
            len: self.inst.network.source_degree() * self.inst.adversary.rounds(),
        }
    }

    fn codomain(&self) -> Space {
        let term = self.inst.network.terminals()[self.terminal_index];
        Space {
            q: self.inst.alphabet.size(),
            len: self.inst.network.in_edges(term).len() * self.inst.adversary.rounds(),
        }
    }

    fn eval(&self, x: u64) -> FanOutSet {
        let d = self.domain();
        let xs = word::decode(d.q, d.len, x);
        let mut fan =
            fan_out_multishot(&self.inst, &self.code, &xs).expect("validated at construction");
        fan.per_terminal.swap_remove(self.terminal_index)
    }
}

/// The set-valued channel from the values on cut `from` to the values on cut
/// `to`, with the adversary restricted to vulnerable edges of `from`.
pub struct CutChannel {
    net: Network,
    q: u8,
    code: NetworkCode,
    from: Vec<usize>,
    to: Vec<usize>,
    adv: AdversaryModel,
    analysis: CutAnalysis,
}

/// What evaluating the values on `to` from the values on `from` touches:
/// which edges must be produced and which node tables get consulted.
pub struct CutAnalysis {
    needed: Vec<bool>,
    demanded: Vec<usize>,
}

impl CutAnalysis {
    /// Intermediate nodes whose tables a cut channel evaluates.
    pub fn demanded_nodes(&self) -> &[usize] {
        &self.demanded
    }
}

/// Checks that `from` precedes `to` and that the `from` values determine the
/// `to` values, and reports which edges and node tables are involved.
pub fn analyze_cut_pair(
    net: &Network,
    from: &EdgeCut,
    to: &EdgeCut,
) -> Result<CutAnalysis, TransferError> {
    if !net::precedes(net, from, to) {
        return Err(TransferError::CutsNotOrdered);
    }
    let mut determined = vec![false; net.edge_count()];
    for e in 0..net.edge_count() {
        let tail = net.edge(e).tail;
        determined[e] = from.contains(e)
            || (tail != net.source() && net.in_edges(tail).iter().all(|&f| determined[f]));
    }
    if let Some(&e) = to.edges().iter().find(|&&e| !determined[e]) {
        return Err(TransferError::UndeterminedEdge { edge: net.edge(e).id.clone() });
    }

    // Ancestors of `to` short of `from`: the edges evaluation must produce.
    let mut needed = vec![false; net.edge_count()];
    for &e in to.edges() {
        needed[e] = true;
    }
    for e in (0..net.edge_count()).rev() {
        if needed[e] && !from.contains(e) {
            for &f in net.in_edges(net.edge(e).tail) {
                needed[f] = true;
            }
        }
    }

    let mut demanded: Vec<usize> = (0..net.edge_count())
        .filter(|&e| needed[e] && !from.contains(e))
        .map(|e| net.edge(e).tail)
        .collect();
    demanded.sort_unstable();
    demanded.dedup();
    debug_assert!(demanded.iter().all(|&v| v != net.source()));
    Ok(CutAnalysis { needed, demanded })
}

pub fn channel_between_cuts(
    inst: &Instance,
    code: &NetworkCode,
    from: &EdgeCut,
    to: &EdgeCut,
) -> Result<CutChannel, TransferError> {
    let net = &inst.network;
    if code.rounds() != inst.adversary.rounds() {
        return Err(
            CodeError::WrongRounds { expected: inst.adversary.rounds(), got: code.rounds() }.into()
        );
    }
    if code.is_block() && inst.adversary.scenario() == Scenario::FreeEdges {
        return Err(TransferError::BlockCodeFreeEdges);
    }
    let analysis = analyze_cut_pair(net, from, to)?;
    let channel = CutChannel {
        net: net.clone(),
        q: inst.alphabet.size(),
        code: code.clone(),
        from: from.edges().to_vec(),
        to: to.edges().to_vec(),
        adv: inst.adversary.restrict(from.edges()),
        analysis,
    };
    channel.check_tables(inst.alphabet)?;
    Ok(channel)
}

impl CutChannel {
    /// Like code validation, but only for the nodes this channel evaluates,
    /// so partial table maps are accepted.
    fn check_tables(&self, alphabet: Alphabet) -> Result<(), TransferError> {
        let window = match &self.code {
            NetworkCode::PerRound { .. } => 1,
            NetworkCode::Block { rounds, .. } => *rounds,
        };
        let round_maps: Vec<(usize, &BTreeMap<usize, FnTable>)> = match &self.code {
            NetworkCode::PerRound { rounds } => rounds.iter().enumerate().collect(),
            NetworkCode::Block { tables, .. } => vec![(0, tables)],
        };
        for &v in self.analysis.demanded_nodes() {
            for (round, tables) in &round_maps {
                let table = tables.get(&v).ok_or_else(|| CodeError::MissingTable {
                    node: self.net.node_name(v).to_owned(),
                    round: *round,
                })?;
                let expected_in = self.net.in_edges(v).len() * window;
                let expected_out = self.net.out_edges(v).len() * window;
                if table.in_len() != expected_in || table.out_len() != expected_out {
                    return Err(CodeError::TableArity {
                        node: self.net.node_name(v).to_owned(),
                        expected_in,
                        expected_out,
                        got_in: table.in_len(),
                        got_out: table.out_len(),
                    }
                    .into());
                }
                if table.q() != alphabet.size() {
                    return Err(CodeError::TableAlphabet {
                        node: self.net.node_name(v).to_owned(),
                        expected: alphabet.size(),
                        got: table.q(),
                    }
                    .into());
                }
            }
        }
        Ok(())
    }

    fn eval_round_cut(
        &self,
        tables: &BTreeMap<usize, FnTable>,
        cut_vals: &[Symbol],
        overrides: &[(usize, Symbol)],
    ) -> Vec<Symbol> {
        let net = &self.net;
        let mut values = vec![0; net.edge_count()];
        let mut node_out: Vec<Option<Vec<Symbol>>> = vec![None; net.node_count()];
        for e in 0..net.edge_count() {
            if !self.analysis.needed[e] {
                continue;
            }
            let raw = match self.from.binary_search(&e) {
                Ok(k) => cut_vals[k],
                Err(_) => {
                    let tail = net.edge(e).tail;
                    if node_out[tail].is_none() {
                        let inputs: Vec<Symbol> =
                            net.in_edges(tail).iter().map(|&f| values[f]).collect();
                        node_out[tail] = Some(tables[&tail].eval(&inputs).to_vec());
                    }
                    node_out[tail].as_ref().expect("just filled")[position(net, e)]
                }
            };
            values[e] = match overrides.binary_search_by_key(&e, |&(f, _)| f) {
                Ok(k) => overrides[k].1,
                Err(_) => raw,
            };
        }
        self.to.iter().map(|&e| values[e]).collect()
    }

    fn eval_window_cut(
        &self,
        tables: &BTreeMap<usize, FnTable>,
        cut_windows: &[Vec<Symbol>],
        overrides: &[(usize, Vec<Symbol>)],
    ) -> Vec<Symbol> {
        let net = &self.net;
        let rounds = self.adv.rounds();
        let mut values: Vec<Vec<Symbol>> = vec![Vec::new(); net.edge_count()];
        let mut node_out: Vec<Option<Vec<Symbol>>> = vec![None; net.node_count()];
        for e in 0..net.edge_count() {
            if !self.analysis.needed[e] {
                continue;
            }
            let raw: Vec<Symbol> = match self.from.binary_search(&e) {
                Ok(k) => cut_windows[k].clone(),
                Err(_) => {
                    let tail = net.edge(e).tail;
                    if node_out[tail].is_none() {
                        let ins = net.in_edges(tail);
                        let mut input = Vec::with_capacity(ins.len() * rounds);
                        for r in 0..rounds {
                            for &f in ins {
                                input.push(values[f][r]);
                            }
                        }
                        node_out[tail] = Some(tables[&tail].eval(&input).to_vec());
                    }
                    let out = node_out[tail].as_ref().expect("just filled");
                    let outdeg = net.out_edges(tail).len();
                    (0..rounds).map(|r| out[r * outdeg + position(net, e)]).collect()
                }
            };
            values[e] = match overrides.binary_search_by_key(&e, |(f, _)| *f) {
                Ok(k) => overrides[k].1.clone(),
                Err(_) => raw,
            };
        }
        // Round-major readout across the target cut.
        let mut obs = Vec::with_capacity(self.to.len() * rounds);
        for r in 0..rounds {
            for &e in &self.to {
                obs.push(values[e][r]);
            }
        }
        obs
    }
}

impl Channel for CutChannel {
    fn domain(&self) -> Space {
        Space { q: self.q, len: self.from.len() * self.adv.rounds() }
    }

    fn codomain(&self) -> Space {
        Space { q: self.q, len: self.to.len() * self.adv.rounds() }
    }

    fn eval(&self, x: u64) -> FanOutSet {
        let rounds = self.adv.rounds();
        let k = self.from.len();
        let xs = word::decode(self.q, k * rounds, x);
        let vuln: Vec<usize> = self.adv.vulnerable().iter().copied().collect();
        let t = self.adv.budget();
        let radix = word::space_size(self.q, self.to.len()) as u64;
        let q = self.q;

        let round_outputs = |tables: &BTreeMap<usize, FnTable>,
                             cut_vals: &[Symbol],
                             attacked: &[usize]|
         -> FanOutSet {
            let mut out = Vec::new();
            let mut overrides: Vec<(usize, Symbol)> = attacked.iter().map(|&e| (e, 0)).collect();
            let count = word::space_size(q, attacked.len()) as u64;
            let mut tuple = Vec::new();
            for v in 0..count {
                tuple.clear();
                word::decode_into(q, attacked.len(), v, &mut tuple);
                for (slot, &s) in overrides.iter_mut().zip(&tuple) {
                    slot.1 = s;
                }
                out.push(word::encode(q, &self.eval_round_cut(tables, cut_vals, &overrides)));
            }
            word::sort_dedup(&mut out);
            out
        };

        match (&self.code, self.adv.scenario()) {
            (NetworkCode::PerRound { rounds: maps }, Scenario::FreeEdges) => {
                let mut acc: FanOutSet = vec![0];
                for (r, tables) in maps.iter().enumerate() {
                    let cut_vals = &xs[r * k..(r + 1) * k];
                    let mut set = Vec::new();
                    for attacked in vuln.iter().copied().combinations(t) {
                        set.extend(round_outputs(tables, cut_vals, &attacked));
                    }
                    word::sort_dedup(&mut set);
                    acc = product_step(&acc, &set, radix);
                }
                acc
            }
            (NetworkCode::PerRound { rounds: maps }, Scenario::FixedEdges) => {
                let mut out = Vec::new();
                for attacked in vuln.iter().copied().combinations(t) {
                    let mut acc: FanOutSet = vec![0];
                    for (r, tables) in maps.iter().enumerate() {
                        let set = round_outputs(tables, &xs[r * k..(r + 1) * k], &attacked);
                        acc = product_step(&acc, &set, radix);
                    }
                    out.extend(acc);
                }
                word::sort_dedup(&mut out);
                out
            }
            (NetworkCode::Block { tables, .. }, Scenario::FixedEdges) => {
                let cut_windows: Vec<Vec<Symbol>> =
                    (0..k).map(|p| (0..rounds).map(|r| xs[r * k + p]).collect()).collect();
                let mut out = Vec::new();
                for attacked in vuln.iter().copied().combinations(t) {
                    let width = attacked.len() * rounds;
                    let total = word::space_size(q, width) as u64;
                    let mut syms = Vec::new();
                    for idx in 0..total {
                        syms.clear();
                        word::decode_into(q, width, idx, &mut syms);
                        let overrides: Vec<(usize, Vec<Symbol>)> = attacked
                            .iter()
                            .enumerate()
                            .map(|(j, &e)| (e, syms[j * rounds..(j + 1) * rounds].to_vec()))
                            .collect();
                        out.push(word::encode(
                            q,
                            &self.eval_window_cut(tables, &cut_windows, &overrides),
                        ));
                    }
                }
                word::sort_dedup(&mut out);
                out
            }
            (NetworkCode::Block { .. }, Scenario::FreeEdges) => {
                unreachable!("rejected at construction")
            }
        }
    }
}

/// The substitution channel on `n` parallel symbols with at most `t`
/// replacements: fan-outs are Hamming balls of radius `t`.
#[derive(Clone, Copy, Debug)]
pub struct HammingChannel {
    q: u8,
    n: usize,
    t: usize,
}

pub fn hamming_channel(n: usize, t: usize, alphabet: Alphabet) -> HammingChannel {
    assert!(n >= 1);
    HammingChannel { q: alphabet.size(), n, t: t.min(n) }
}

impl Channel for HammingChannel {
    fn domain(&self) -> Space {
        Space { q: self.q, len: self.n }
    }

    fn codomain(&self) -> Space {
        Space { q: self.q, len: self.n }
    }

    fn eval(&self, x: u64) -> FanOutSet {
        let orig = word::decode(self.q, self.n, x);
        let mut out = vec![x];
        let mut tuple = Vec::new();
        for k in 1..=self.t {
            for positions in (0..self.n).combinations(k) {
                // Count replacements over q-1 values, skipping the original
                // symbol at each position.
                let count = word::space_size(self.q - 1, k) as u64;
                for idx in 0..count {
                    tuple.clear();
                    word::decode_into(self.q - 1, k, idx, &mut tuple);
                    let mut w = orig.clone();
                    for (j, &p) in positions.iter().enumerate() {
                        let mut v = tuple[j];
                        if v >= orig[p] {
                            v += 1;
                        }
                        w[p] = v;
                    }
                    out.push(word::encode(self.q, &w));
                }
            }
        }
        word::sort_dedup(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::testnets::{cut, diamond};
    use crate::net::{validate_network, NetworkDescription};
    use crate::word::encode;

    fn alphabet(q: u8) -> Alphabet {
        Alphabet::new(q).unwrap()
    }

    /// Per-round diamond tables: the first relay forwards, the second
    /// compares its two copies and emits `star` on disagreement.
    fn diamond_round_tables(net: &Network, q: u8, star: Symbol) -> BTreeMap<usize, FnTable> {
        let v1 = net.node_index("V1").unwrap();
        let v2 = net.node_index("V2").unwrap();
        BTreeMap::from([
            (v1, FnTable::identity(q, 1)),
            (v2, FnTable::from_fn(q, 2, 1, |w| vec![if w[0] == w[1] { w[0] } else { star }])),
        ])
    }

    /// Window variant of the same strategy over `rounds`-symbol windows.
    fn diamond_window_tables(
        net: &Network,
        q: u8,
        star: Symbol,
        rounds: usize,
    ) -> BTreeMap<usize, FnTable> {
        let v1 = net.node_index("V1").unwrap();
        let v2 = net.node_index("V2").unwrap();
        BTreeMap::from([
            (v1, FnTable::identity(q, rounds)),
            (v2, FnTable::from_fn(q, 2 * rounds, rounds, move |w| {
                // Round-major input: symbol 2r is the first in-edge, 2r+1
                // the second. Compare the two edge windows.
                let a: Vec<Symbol> = (0..rounds).map(|r| w[2 * r]).collect();
                let b: Vec<Symbol> = (0..rounds).map(|r| w[2 * r + 1]).collect();
                if a == b {
                    a
                } else {
                    vec![star; rounds]
                }
            })),
        ])
    }

    fn diamond_instance(q: u8, t: usize, rounds: usize, scenario: Scenario) -> Instance {
        let net = diamond();
        let adv = AdversaryModel::new(&net, &["e1", "e2", "e3"], t, rounds, scenario).unwrap();
        Instance::new(alphabet(q), net, adv)
    }

    #[test]
    fn honest_evaluation_of_diamond() {
        let net = diamond();
        let code = NetworkCode::per_round_same(diamond_round_tables(&net, 2, 1), 1);
        let values = evaluate_deterministic(&net, alphabet(2), &code, 0, &[0, 0, 0]).unwrap();
        assert_eq!(values, vec![0, 0, 0, 0, 0]);
        let values = evaluate_deterministic(&net, alphabet(2), &code, 0, &[1, 0, 1]).unwrap();
        // e4 copies e1; e5 sees (0, 1) and emits the alarm symbol.
        assert_eq!(values, vec![1, 0, 1, 1, 1]);
        assert!(matches!(
            evaluate_deterministic(&net, alphabet(2), &code, 1, &[0, 0, 0]),
            Err(TransferError::RoundOutOfRange { round: 1, rounds: 1 })
        ));
        assert!(matches!(
            evaluate_deterministic(&net, alphabet(2), &code, 0, &[0, 0]),
            Err(TransferError::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn single_round_fan_out_of_the_diamond() {
        let inst = diamond_instance(2, 1, 1, Scenario::FixedEdges);
        let code = NetworkCode::per_round_same(diamond_round_tables(&inst.network, 2, 1), 1);
        let fan = fan_out_single(&inst, &code, &[0, 0, 0]).unwrap();
        // Observations on (e4, e5): honest (0,0), attack on e1 gives (1,0),
        // attacks on e2 or e3 give (0,1).
        let want: Vec<u64> = vec![encode(2, &[0, 0]), encode(2, &[0, 1]), encode(2, &[1, 0])];
        assert_eq!(fan.per_terminal, vec![want]);
        // One round: the scenarios coincide.
        let free = diamond_instance(2, 1, 1, Scenario::FreeEdges);
        assert_eq!(fan_out_single(&free, &code, &[0, 0, 0]).unwrap(), fan);
    }

    #[test]
    fn budget_zero_keeps_only_the_honest_observation() {
        let net = diamond();
        let adv = AdversaryModel::new(&net, &["e1"], 0, 1, Scenario::FixedEdges).unwrap();
        let inst = Instance::new(alphabet(2), net, adv);
        let code = NetworkCode::per_round_same(diamond_round_tables(&inst.network, 2, 1), 1);
        let fan = fan_out_single(&inst, &code, &[1, 1, 1]).unwrap();
        assert_eq!(fan.per_terminal, vec![vec![encode(2, &[1, 1])]]);
    }

    #[test]
    fn fixed_edges_refine_free_edges() {
        let code_net = diamond();
        let code = NetworkCode::per_round_same(diamond_round_tables(&code_net, 2, 1), 2);
        let fixed = diamond_instance(2, 1, 2, Scenario::FixedEdges);
        let free = diamond_instance(2, 1, 2, Scenario::FreeEdges);
        for x in 0..64u64 {
            let xs = word::decode(2, 6, x);
            let a = fan_out_multishot(&fixed, &code, &xs).unwrap();
            let b = fan_out_multishot(&free, &code, &xs).unwrap();
            assert!(word::is_subset(&a.per_terminal[0], &b.per_terminal[0]), "word {xs:?}");
        }
    }

    #[test]
    fn free_edges_fan_out_is_the_round_product() {
        let net = diamond();
        let code = NetworkCode::per_round_same(diamond_round_tables(&net, 2, 1), 2);
        let single_code = NetworkCode::per_round_same(diamond_round_tables(&net, 2, 1), 1);
        let multi = diamond_instance(2, 1, 2, Scenario::FreeEdges);
        let single = diamond_instance(2, 1, 1, Scenario::FreeEdges);
        for x in 0..64u64 {
            let xs = word::decode(2, 6, x);
            let got = fan_out_multishot(&multi, &code, &xs).unwrap();
            let first = fan_out_single(&single, &single_code, &xs[..3]).unwrap();
            let second = fan_out_single(&single, &single_code, &xs[3..]).unwrap();
            let product = product_step(&first.per_terminal[0], &second.per_terminal[0], 4);
            assert_eq!(got.per_terminal[0], product);
        }
    }

    #[test]
    fn window_fan_out_of_the_repetition_word() {
        // q = 3, two rounds, window tables, message (0,0) sent as (a|a|a)
        // per round. Hand count: attacks on e1 give 9 observations
        // (w, 00); attacks on e2 or e3 only add (00, 22).
        let inst = diamond_instance(3, 1, 2, Scenario::FixedEdges);
        let code = NetworkCode::block(diamond_window_tables(&inst.network, 3, 2, 2), 2);
        let fan = fan_out_multishot(&inst, &code, &[0, 0, 0, 0, 0, 0]).unwrap();
        let obs = &fan.per_terminal[0];
        assert_eq!(obs.len(), 10);
        // Round-major observation (e4 e5 | e4 e5): (w1 0 w2 0) and (0 2 0 2).
        for w in 0..9u64 {
            let (w1, w2) = (w / 3, w % 3);
            assert!(obs.binary_search(&encode(3, &[w1 as u8, 0, w2 as u8, 0])).is_ok());
        }
        assert!(obs.binary_search(&encode(3, &[0, 2, 0, 2])).is_ok());
        assert!(matches!(
            fan_out_multishot(
                &diamond_instance(3, 1, 2, Scenario::FreeEdges),
                &code,
                &[0, 0, 0, 0, 0, 0]
            ),
            Err(TransferError::BlockCodeFreeEdges)
        ));
    }

    #[test]
    fn parallel_edges_reproduce_hamming_balls() {
        for (n, t, q) in [(3, 1, 2), (4, 2, 2), (3, 1, 3), (4, 1, 3), (2, 2, 2)] {
            let desc = NetworkDescription {
                nodes: vec!["S".into(), "T".into()],
                edges: (1..=n)
                    .map(|k| crate::net::testnets::edge(&format!("e{k}"), "S", "T"))
                    .collect(),
                source: "S".into(),
                terminals: vec!["T".into()],
            };
            let net = validate_network(&desc).unwrap();
            let ids: Vec<String> = (1..=n).map(|k| format!("e{k}")).collect();
            let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let adv =
                AdversaryModel::new(&net, &id_refs, t, 1, Scenario::FixedEdges).unwrap();
            let inst = Instance::new(alphabet(q), net, adv);
            let code = NetworkCode::per_round_same(BTreeMap::new(), 1);
            let ball = hamming_channel(n, t, alphabet(q));
            for x in 0..word::space_size(q, n) as u64 {
                let xs = word::decode(q, n, x);
                let fan = fan_out_single(&inst, &code, &xs).unwrap();
                assert_eq!(fan.per_terminal[0], ball.eval(x), "n={n} t={t} q={q} x={xs:?}");
            }
        }
    }

    #[test]
    fn hamming_ball_sizes() {
        let ball = hamming_channel(3, 1, alphabet(2));
        assert_eq!(ball.eval(0).len(), 4);
        let ball = hamming_channel(4, 2, alphabet(3));
        assert_eq!(ball.eval(0).len(), 1 + 4 * 2 + 6 * 4);
        let full = hamming_channel(2, 5, alphabet(2));
        assert_eq!(full.eval(0).len(), 4);
    }

    #[test]
    fn terminal_channels_expose_fan_outs() {
        let inst = diamond_instance(2, 1, 1, Scenario::FixedEdges);
        let code = NetworkCode::per_round_same(diamond_round_tables(&inst.network, 2, 1), 1);
        let chans = terminal_channels(&inst, &code).unwrap();
        assert_eq!(chans.len(), 1);
        assert_eq!(chans[0].domain(), Space { q: 2, len: 3 });
        assert_eq!(chans[0].codomain(), Space { q: 2, len: 2 });
        let fan = fan_out_single(&inst, &code, &[0, 0, 0]).unwrap();
        assert_eq!(chans[0].eval(0), fan.per_terminal[0]);
    }

    #[test]
    fn cut_channel_between_source_and_sink_cuts() {
        let inst = diamond_instance(2, 1, 1, Scenario::FixedEdges);
        let net = &inst.network;
        let code = NetworkCode::per_round_same(diamond_round_tables(net, 2, 1), 1);
        let src = cut(net, &["e1", "e2", "e3"], "T");
        let snk = cut(net, &["e4", "e5"], "T");
        let ch = channel_between_cuts(&inst, &code, &src, &snk).unwrap();
        assert_eq!(ch.domain(), Space { q: 2, len: 3 });
        assert_eq!(ch.codomain(), Space { q: 2, len: 2 });
        // Values on the source cut determine the network input exactly, so
        // the cut channel agrees with the terminal fan-out.
        for x in 0..8u64 {
            let xs = word::decode(2, 3, x);
            let fan = fan_out_single(&inst, &code, &xs).unwrap();
            assert_eq!(ch.eval(x), fan.per_terminal[0]);
        }
        assert!(matches!(
            channel_between_cuts(&inst, &code, &snk, &src),
            Err(TransferError::CutsNotOrdered)
        ));
    }

    #[test]
    fn equal_cuts_give_a_pure_corruption_channel() {
        let inst = diamond_instance(2, 1, 1, Scenario::FixedEdges);
        let net = &inst.network;
        let code = NetworkCode::per_round_same(diamond_round_tables(net, 2, 1), 1);
        let src = cut(net, &["e1", "e2", "e3"], "T");
        let ch = channel_between_cuts(&inst, &code, &src, &src).unwrap();
        let ball = hamming_channel(3, 1, alphabet(2));
        for x in 0..8u64 {
            assert_eq!(ch.eval(x), ball.eval(x));
        }
        // No node table is consulted, so an empty code works too.
        let empty = NetworkCode::per_round_same(BTreeMap::new(), 1);
        let ch = channel_between_cuts(&inst, &empty, &src, &src).unwrap();
        assert_eq!(ch.eval(5), ball.eval(5));
    }

    #[test]
    fn cut_channel_restricts_the_adversary_to_the_first_cut() {
        // Between (e4, e5) and itself nothing is vulnerable, so the channel
        // is the identity even though e1, e2, e3 are attackable upstream.
        let inst = diamond_instance(2, 1, 1, Scenario::FixedEdges);
        let net = &inst.network;
        let code = NetworkCode::per_round_same(diamond_round_tables(net, 2, 1), 1);
        let snk = cut(net, &["e4", "e5"], "T");
        let ch = channel_between_cuts(&inst, &code, &snk, &snk).unwrap();
        for x in 0..4u64 {
            assert_eq!(ch.eval(x), vec![x]);
        }
    }

    #[test]
    fn multishot_cut_channel_matches_scenario_semantics() {
        let net = diamond();
        let code = NetworkCode::per_round_same(diamond_round_tables(&net, 2, 1), 2);
        let src_ids = ["e1", "e2", "e3"];
        for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
            let inst = diamond_instance(2, 1, 2, scenario);
            let src = cut(&inst.network, &src_ids, "T");
            let snk = cut(&inst.network, &["e4", "e5"], "T");
            let ch = channel_between_cuts(&inst, &code, &src, &snk).unwrap();
            for x in 0..64u64 {
                let xs = word::decode(2, 6, x);
                let fan = fan_out_multishot(&inst, &code, &xs).unwrap();
                assert_eq!(ch.eval(x), fan.per_terminal[0], "{scenario:?} {xs:?}");
            }
        }
    }
}
