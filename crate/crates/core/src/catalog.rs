//! Built-in networks and their verified transmission strategies.
//!
//! Each strategy bundles an outer code, the node tables realizing it, and a
//! decoder per terminal. `verify_strategy` replays every adversarial action
//! and checks unambiguity and decoder correctness by enumeration, so the
//! constructions here carry mechanical evidence instead of trust.

use crate::bounds::TwoLevelProfile;
use crate::code::{CodeError, FnTable, NetworkCode, OuterCode};
use crate::net::{
    validate_network, AdversaryModel, Alphabet, EdgeDescription, Instance, Network,
    NetworkDescription, NetworkError, Scenario, Symbol,
};
use crate::transfer::{fan_out_multishot, TransferError};
use crate::word;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("bad parameter: {reason}")]
    BadParameter { reason: String },
    #[error("reserved set rejected: {reason}")]
    BadReservedSet { reason: String },
    #[error("verification needs {need} channel evaluations, over the limit {limit}")]
    ScaleExceeded { need: u128, limit: u128 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

fn bad(reason: impl Into<String>) -> CatalogError {
    CatalogError::BadParameter { reason: reason.into() }
}

/// The built-in networks. Two-level family parameters follow the catalog
/// ranges: `FamilyA`, `FamilyD`, `FamilyE` need `t >= 1`, `FamilyB` needs
/// `s >= 1`, and `FamilyC` needs `t >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkKind {
    Diamond,
    MirroredDiamond,
    FamilyA { t: usize },
    FamilyB { s: usize },
    FamilyC { t: usize },
    FamilyD { t: usize },
    FamilyE { t: usize },
    Butterfly,
}

impl NetworkKind {
    /// The adversary budget the capacity statements for this network assume.
    pub fn standard_budget(self) -> usize {
        match self {
            NetworkKind::Diamond | NetworkKind::MirroredDiamond | NetworkKind::Butterfly => 1,
            NetworkKind::FamilyA { t }
            | NetworkKind::FamilyC { t }
            | NetworkKind::FamilyD { t }
            | NetworkKind::FamilyE { t } => t,
            NetworkKind::FamilyB { .. } => 1,
        }
    }

    fn profile(self) -> Result<Option<TwoLevelProfile>, CatalogError> {
        let check = |p: usize, least: usize, name: &str| {
            if p < least {
                Err(bad(format!("{name} needs its parameter to be at least {least}, got {p}")))
            } else {
                Ok(p)
            }
        };
        let profile = match self {
            NetworkKind::Diamond => TwoLevelProfile::new(vec![1, 2], vec![1, 1]),
            NetworkKind::MirroredDiamond => TwoLevelProfile::new(vec![2, 2], vec![1, 1]),
            NetworkKind::FamilyA { t } => {
                let t = check(t, 1, "family A")?;
                TwoLevelProfile::new(vec![t, 2 * t], vec![t, t])
            }
            NetworkKind::FamilyB { s } => {
                let s = check(s, 1, "family B")?;
                TwoLevelProfile::new(vec![1, s + 1], vec![1, s])
            }
            NetworkKind::FamilyC { t } => {
                let t = check(t, 2, "family C")?;
                TwoLevelProfile::new(vec![t, t + 1], vec![t, t])
            }
            NetworkKind::FamilyD { t } => {
                let t = check(t, 1, "family D")?;
                TwoLevelProfile::new(vec![2 * t, 2 * t], vec![1, 1])
            }
            NetworkKind::FamilyE { t } => {
                let t = check(t, 1, "family E")?;
                TwoLevelProfile::new(vec![t, t + 1], vec![1, 1])
            }
            NetworkKind::Butterfly => return Ok(None),
        };
        profile.map(Some).map_err(|e| bad(e.to_string()))
    }
}

fn butterfly_network() -> Network {
    let edge = |id: &str, from: &str, to: &str| EdgeDescription {
        id: id.into(),
        from: from.into(),
        to: to.into(),
    };
    let desc = NetworkDescription {
        nodes: ["S", "V1", "V2", "V3", "V4", "T1", "T2"].map(String::from).to_vec(),
        edges: vec![
            edge("e1", "S", "V1"),
            edge("e2", "S", "V1"),
            edge("e3", "S", "V2"),
            edge("e4", "S", "V2"),
            edge("e5", "V1", "T1"),
            edge("e6", "V1", "V3"),
            edge("e7", "V2", "V3"),
            edge("e8", "V2", "T2"),
            edge("e9", "V3", "V4"),
            edge("e10", "V4", "T1"),
            edge("e11", "V4", "T2"),
        ],
        source: "S".into(),
        terminals: vec!["T1".into(), "T2".into()],
    };
    validate_network(&desc).expect("the butterfly description is a valid network")
}

/// Builds one of the built-in networks.
pub fn build_network(kind: NetworkKind) -> Result<Network, CatalogError> {
    match kind.profile()? {
        Some(profile) => Ok(profile.realize()),
        None => Ok(butterfly_network()),
    }
}

/// The edges the adversary may rewrite: all source edges for the two-level
/// networks. The butterfly keeps the two direct source-to-terminal branches
/// safe, so each terminal retains one trusted input; everything upstream of
/// the relay chain is exposed.
pub fn vulnerable_edges(kind: NetworkKind, net: &Network) -> Vec<usize> {
    match kind {
        NetworkKind::Butterfly => ["e1", "e2", "e3", "e4", "e6", "e7", "e9"]
            .iter()
            .map(|id| net.edge_index(id).expect("butterfly edge ids are fixed"))
            .collect(),
        _ => net.out_edges(net.source()).to_vec(),
    }
}

/// A built-in network with its standard adversary.
pub fn build_instance(
    kind: NetworkKind,
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Instance, CatalogError> {
    let net = build_network(kind)?;
    let vulnerable = vulnerable_edges(kind, &net);
    let adversary = AdversaryModel::from_indices(
        vulnerable.into_iter().collect(),
        kind.standard_budget(),
        rounds,
        scenario,
    )?;
    Ok(Instance::new(alphabet, net, adversary))
}

/// The reserved vectors a detection strategy keeps out of its code, together
/// with their per-round repetitions. The first and last parts split each
/// vector at position `t`, matching the receive alphabets of the two relays
/// of a `FamilyE` network; the split projections stay pairwise distinct so
/// all three derived sets keep the cardinality of the base set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReservedSet {
    q: u8,
    t: usize,
    vectors: Vec<Vec<Symbol>>,
}

impl ReservedSet {
    pub fn new(
        alphabet: Alphabet,
        t: usize,
        vectors: &[Vec<Symbol>],
    ) -> Result<Self, CatalogError> {
        let reject = |reason: String| CatalogError::BadReservedSet { reason };
        if t == 0 {
            return Err(reject("the adversary budget must be at least 1".into()));
        }
        if vectors.is_empty() {
            return Err(reject("the reserved set must be nonempty".into()));
        }
        let q = alphabet.size();
        let len = 2 * t + 1;
        for v in vectors {
            if v.len() != len {
                return Err(reject(format!(
                    "reserved vectors must have length {len}, got {}",
                    v.len()
                )));
            }
            if let Some(&s) = v.iter().find(|&&s| s >= q) {
                return Err(reject(format!("symbol {s} out of range for alphabet size {q}")));
            }
        }
        let mut vectors: Vec<Vec<Symbol>> = vectors.to_vec();
        vectors.sort();
        vectors.dedup();
        let distinct = |take: &dyn Fn(&[Symbol]) -> Vec<Symbol>| {
            let mut parts: Vec<Vec<Symbol>> = vectors.iter().map(|v| take(v)).collect();
            parts.sort();
            parts.dedup();
            parts.len() == vectors.len()
        };
        if !distinct(&|v| v[..t].to_vec()) || !distinct(&|v| v[t..].to_vec()) {
            return Err(reject(
                "reserved vectors must stay distinct on both relay projections".into(),
            ));
        }
        Ok(ReservedSet { q, t, vectors })
    }

    /// The `b` constant vectors over the top `b` symbols, the default
    /// reservation.
    pub fn constant_top(alphabet: Alphabet, t: usize, b: usize) -> Result<Self, CatalogError> {
        let q = alphabet.size();
        if b == 0 || b >= q as usize {
            return Err(CatalogError::BadReservedSet {
                reason: format!("need between 1 and {} reserved symbols, got {b}", q - 1),
            });
        }
        let vectors: Vec<Vec<Symbol>> =
            (q - b as u8..q).map(|s| vec![s; 2 * t + 1]).collect();
        Self::new(alphabet, t, &vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn budget(&self) -> usize {
        self.t
    }

    pub fn alphabet_size(&self) -> u8 {
        self.q
    }

    pub fn vectors(&self) -> &[Vec<Symbol>] {
        &self.vectors
    }

    fn repeat_parts(&self, rounds: usize, lo: usize, hi: usize) -> Vec<Vec<Symbol>> {
        self.vectors
            .iter()
            .map(|v| {
                let mut w = Vec::with_capacity((hi - lo) * rounds);
                for _ in 0..rounds {
                    w.extend_from_slice(&v[lo..hi]);
                }
                w
            })
            .collect()
    }

    /// Whole vectors repeated every round, in round-major layout.
    pub fn repeated(&self, rounds: usize) -> Vec<Vec<Symbol>> {
        self.repeat_parts(rounds, 0, 2 * self.t + 1)
    }

    /// The first `t` coordinates repeated every round.
    pub fn first_part_repeated(&self, rounds: usize) -> Vec<Vec<Symbol>> {
        self.repeat_parts(rounds, 0, self.t)
    }

    /// The last `t + 1` coordinates repeated every round.
    pub fn second_part_repeated(&self, rounds: usize) -> Vec<Vec<Symbol>> {
        self.repeat_parts(rounds, self.t, 2 * self.t + 1)
    }

    /// The constant symbols when every reserved vector is constant.
    pub fn constant_symbols(&self) -> Option<Vec<Symbol>> {
        self.vectors
            .iter()
            .map(|v| if v.iter().all(|&s| s == v[0]) { Some(v[0]) } else { None })
            .collect()
    }
}

/// A code size kept in the form `log_q(size) / rounds` so displays and
/// cross-checks stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClaimedRate {
    pub q: u8,
    pub size: u128,
    pub rounds: usize,
}

impl ClaimedRate {
    pub fn value(&self) -> f64 {
        (self.size as f64).log2() / (self.q as f64).log2() / self.rounds as f64
    }

    /// The exponent when the size is an exact alphabet power.
    pub fn exact_exponent(&self) -> Option<u32> {
        let mut size = self.size;
        let mut k = 0;
        while size % self.q as u128 == 0 {
            size /= self.q as u128;
            k += 1;
        }
        (size == 1).then_some(k)
    }
}

impl fmt::Display for ClaimedRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_exponent() {
            Some(k) if k as usize % self.rounds == 0 => {
                write!(f, "{}", k as usize / self.rounds)
            }
            Some(k) => write!(f, "{}/{}", k, self.rounds),
            None if self.rounds == 1 => write!(f, "log_{}({})", self.q, self.size),
            None => write!(f, "log_{}({})/{}", self.q, self.size, self.rounds),
        }
    }
}

pub type DecodeFn = Box<dyn Fn(&[Symbol]) -> Option<Vec<Symbol>> + Send + Sync>;

/// An outer code, the node tables realizing it, and one decoder per
/// terminal. Decoders take the terminal's round-major observation and return
/// the decoded source word, or `None` where no codeword explains the
/// observation.
pub struct Strategy {
    pub name: String,
    pub instance: Instance,
    pub code: OuterCode,
    pub network_code: NetworkCode,
    pub claimed: ClaimedRate,
    pub decoders: Vec<DecodeFn>,
}

impl Strategy {
    pub fn decode(&self, terminal: usize, observation: &[Symbol]) -> Option<Vec<Symbol>> {
        (self.decoders[terminal])(observation)
    }
}

/// The source word repeating each round symbol of `message` on `deg` edges.
fn repetition_word(deg: usize, message: &[Symbol]) -> Vec<Symbol> {
    let mut w = Vec::with_capacity(deg * message.len());
    for &s in message {
        w.extend(std::iter::repeat_n(s, deg));
    }
    w
}

/// All repetition codewords over `rounds`-symbol messages, minus the listed
/// messages. Message order is numeric, which keeps the code sorted.
fn repetition_code(
    alphabet: Alphabet,
    deg: usize,
    rounds: usize,
    excluded: &[Vec<Symbol>],
) -> Result<OuterCode, CatalogError> {
    let q = alphabet.size();
    let count = word::space_size(q, rounds);
    if count > 1 << 24 {
        return Err(bad(format!("message space of {count} words is too large to enumerate")));
    }
    let mut words = Vec::new();
    for message in word::space(q, rounds) {
        if excluded.contains(&message) {
            continue;
        }
        words.push(repetition_word(deg, &message));
    }
    if words.is_empty() {
        return Err(bad("the exclusions empty the code"));
    }
    Ok(OuterCode::new(q, &words)?)
}

/// The word each in-edge of a node carries, split out of the node's
/// round-major window input.
fn edge_words(input: &[Symbol], degree: usize, rounds: usize) -> Vec<Vec<Symbol>> {
    (0..degree)
        .map(|k| (0..rounds).map(|r| input[r * degree + k]).collect())
        .collect()
}

/// Round-major interleaving of one word copied onto `copies` out-edges.
fn spread_word(word: &[Symbol], copies: usize) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(word.len() * copies);
    for &s in word {
        out.extend(std::iter::repeat_n(s, copies));
    }
    out
}

/// Window table that forwards the common received word and answers any
/// disagreement between its in-edges with the flag word.
fn consistency_window_table(
    q: u8,
    degree: usize,
    rounds: usize,
    out_degree: usize,
    flag: &[Symbol],
) -> FnTable {
    let flag = flag.to_vec();
    FnTable::from_fn(q, degree * rounds, out_degree * rounds, move |input| {
        let words = edge_words(input, degree, rounds);
        let agreed = words[1..].iter().all(|w| *w == words[0]);
        let word = if agreed { &words[0] } else { &flag };
        spread_word(word, out_degree)
    })
}

/// Per-round variant: forwards the common symbol, flags disagreement.
fn consistency_round_table(q: u8, degree: usize, out_degree: usize, flag: Symbol) -> FnTable {
    FnTable::from_fn(q, degree, out_degree, move |input| {
        let s = if input[1..].iter().all(|&y| y == input[0]) { input[0] } else { flag };
        vec![s; out_degree]
    })
}

fn star_word(alphabet: Alphabet, rounds: usize) -> Vec<Symbol> {
    vec![alphabet.size() - 1; rounds]
}

/// Middle-relay routing: prefer the unflagged branch, forward agreement,
/// and flag any unresolved disagreement.
fn route_preferring_unflagged(x: &[Symbol], y: &[Symbol], flag: &[Symbol]) -> Vec<Symbol> {
    match (x == flag, y == flag) {
        (true, false) => y.to_vec(),
        (false, true) => x.to_vec(),
        (false, false) if x == y => x.to_vec(),
        _ => flag.to_vec(),
    }
}

/// Splits a two-input terminal observation into its per-edge words.
fn observation_pair(observation: &[Symbol], rounds: usize) -> (Vec<Symbol>, Vec<Symbol>) {
    let words = edge_words(observation, 2, rounds);
    let mut it = words.into_iter();
    (it.next().expect("two words"), it.next().expect("two words"))
}

/// The diamond strategy. With a pinned adversary the relays compare whole
/// round windows, so only the all-star message is reserved; with a roaming
/// adversary the comparison has to be repeated per round and one symbol per
/// round is reserved instead.
pub fn diamond_strategy(
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    let q = alphabet.size();
    if rounds == 0 {
        return Err(bad("at least one round is needed"));
    }
    let instance = build_instance(NetworkKind::Diamond, alphabet, rounds, scenario)?;
    let star = q - 1;
    let stars = star_word(alphabet, rounds);
    let (code, network_code, claimed) = match scenario {
        Scenario::FixedEdges => {
            let code = repetition_code(alphabet, 3, rounds, &[stars.clone()])?;
            let tables = BTreeMap::from([
                (1, FnTable::identity(q, rounds)),
                (2, consistency_window_table(q, 2, rounds, 1, &stars)),
            ]);
            let claimed =
                ClaimedRate { q, size: word::space_size(q, rounds) - 1, rounds };
            (code, NetworkCode::block(tables, rounds), claimed)
        }
        Scenario::FreeEdges => {
            let per_round: Vec<Vec<Symbol>> = word::space(q, rounds)
                .filter(|m| m.contains(&star))
                .collect();
            let code = repetition_code(alphabet, 3, rounds, &per_round)?;
            let tables = BTreeMap::from([
                (1, FnTable::identity(q, 1)),
                (2, consistency_round_table(q, 2, 1, star)),
            ]);
            let claimed =
                ClaimedRate { q, size: word::space_size(q - 1, rounds), rounds };
            (code, NetworkCode::per_round_same(tables, rounds), claimed)
        }
    };
    let decoder = trust_second_unless_flagged(3, rounds, scenario, vec![stars]);
    Ok(Strategy {
        name: "diamond".into(),
        instance,
        code,
        network_code,
        claimed,
        decoders: vec![decoder],
    })
}

/// Decoder for two-branch detection strategies: take the checked branch
/// unless it shows a reserved word, then fall back to the plain branch. The
/// result must itself avoid the reserved words to be a codeword. `deg` is
/// the source degree used to rebuild the repetition codeword.
fn trust_second_unless_flagged(
    deg: usize,
    rounds: usize,
    scenario: Scenario,
    reserved: Vec<Vec<Symbol>>,
) -> DecodeFn {
    let reserved_symbols: Vec<Symbol> = reserved.iter().map(|w| w[0]).collect();
    Box::new(move |observation| {
        let (u, v) = observation_pair(observation, rounds);
        let message = match scenario {
            Scenario::FixedEdges => {
                if reserved.contains(&v) {
                    u
                } else {
                    v
                }
            }
            Scenario::FreeEdges => u
                .iter()
                .zip(&v)
                .map(|(&ur, &vr)| if reserved_symbols.contains(&vr) { ur } else { vr })
                .collect(),
        };
        let excluded = match scenario {
            Scenario::FixedEdges => reserved.contains(&message),
            Scenario::FreeEdges => message.iter().any(|s| reserved_symbols.contains(s)),
        };
        (!excluded).then(|| repetition_word(deg, &message))
    })
}

/// The mirrored diamond strategy: each relay receives two copies, forwards
/// the common value, and answers an attacked pair with the smaller of the
/// two values. A corrupted relay can therefore only undercut the true value,
/// so the terminal takes the larger branch. Rate 1 in both scenarios.
pub fn mirrored_strategy(
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    let mut s = family_d_strategy(1, alphabet, rounds, scenario)?;
    s.name = "mirrored-diamond".into();
    Ok(s)
}

/// Table for a relay that forwards the most frequent received value and
/// breaks ties downward.
fn plurality_min_table(q: u8, degree: usize, out_degree: usize) -> FnTable {
    FnTable::from_fn(q, degree, out_degree, move |input| {
        let mut counts = vec![0usize; q as usize];
        for &s in input {
            counts[s as usize] += 1;
        }
        let best = *counts.iter().max().expect("alphabet is nonempty");
        let s = counts.iter().position(|&c| c == best).expect("some count is maximal") as Symbol;
        vec![s; out_degree]
    })
}

/// The family D strategy: each relay sees `2t` copies of the round symbol,
/// of which the adversary rewrites at most `t` in total across both relays.
/// A relay output differs from the truth only under a full-budget attack,
/// which forces a tie broken downward, so the larger branch is always the
/// sent symbol. Rate 1 in both scenarios.
pub fn family_d_strategy(
    t: usize,
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    if rounds == 0 {
        return Err(bad("at least one round is needed"));
    }
    let q = alphabet.size();
    let kind = NetworkKind::FamilyD { t };
    let instance = build_instance(kind, alphabet, rounds, scenario)?;
    let code = repetition_code(alphabet, 4 * t, rounds, &[])?;
    let tables = BTreeMap::from([
        (1, plurality_min_table(q, 2 * t, 1)),
        (2, plurality_min_table(q, 2 * t, 1)),
    ]);
    let network_code = NetworkCode::per_round_same(tables, rounds);
    let claimed = ClaimedRate { q, size: word::space_size(q, rounds), rounds };
    let decoder: DecodeFn = Box::new(move |observation| {
        let (u, v) = observation_pair(observation, rounds);
        let message: Vec<Symbol> =
            u.iter().zip(&v).map(|(&ur, &vr)| ur.max(vr)).collect();
        Some(repetition_word(4 * t, &message))
    });
    Ok(Strategy {
        name: format!("family-d(t={t})"),
        instance,
        code,
        network_code,
        claimed,
        decoders: vec![decoder],
    })
}

/// How a family C relay reports its `t + 1` received copies on `t` out-edges:
/// unanimity repeats the value, anything else selects one of the non-constant
/// patterns, keyed by the plurality value and its count (or a tie marker).
/// Count information is what lets the terminal price every candidate symbol
/// against the adversary budget.
struct PluralitySummary {
    q: u8,
    t: usize,
}

impl PluralitySummary {
    fn new(q: u8, t: usize) -> Self {
        let slots = (t - 1) * q as usize + 1;
        let spare = word::space_size(q, t) - q as u128;
        assert!((slots as u128) <= spare + 1, "pattern space covers the summaries");
        PluralitySummary { q, t }
    }

    fn spare_pattern(&self, index: usize) -> Vec<Symbol> {
        word::space(self.q, self.t)
            .filter(|w| w[1..].iter().any(|&s| s != w[0]))
            .nth(index)
            .expect("summary indices stay within the non-constant patterns")
    }

    fn counts(&self, input: &[Symbol]) -> Vec<usize> {
        let mut counts = vec![0usize; self.q as usize];
        for &s in input {
            counts[s as usize] += 1;
        }
        counts
    }

    /// The table output for one received tuple.
    fn summarize(&self, input: &[Symbol]) -> Vec<Symbol> {
        let counts = self.counts(input);
        let best = *counts.iter().max().expect("alphabet is nonempty");
        if best == self.t + 1 {
            return vec![input[0]; self.t];
        }
        let tied: Vec<usize> =
            (0..counts.len()).filter(|&s| counts[s] == best).collect();
        let index = if tied.len() == 1 {
            (best - 2) * self.q as usize + tied[0]
        } else {
            (self.t - 1) * self.q as usize
        };
        self.spare_pattern(index)
    }

    fn table(&self) -> FnTable {
        FnTable::from_fn(self.q, self.t + 1, self.t, |input| self.summarize(input))
    }

    /// For every reachable summary, the count profiles of the tuples mapping
    /// to it. The decoder reads off, per candidate symbol, the cheapest
    /// corruption consistent with the summary.
    fn preimage_counts(&self) -> BTreeMap<u64, Vec<Vec<usize>>> {
        let mut map: BTreeMap<u64, Vec<Vec<usize>>> = BTreeMap::new();
        for input in word::space(self.q, self.t + 1) {
            let summary = word::encode(self.q, &self.summarize(&input));
            let counts = self.counts(&input);
            let entry = map.entry(summary).or_default();
            if !entry.contains(&counts) {
                entry.push(counts);
            }
        }
        map
    }
}

/// The family C strategy: the first relay passes its `t` copies through
/// unchanged, the second summarizes its `t + 1` copies as above, and the
/// terminal keeps the unique symbol explainable within the budget. Rate 1 in
/// both scenarios.
pub fn family_c_strategy(
    t: usize,
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    if t < 2 {
        return Err(bad(format!("family C needs its parameter to be at least 2, got {t}")));
    }
    if rounds == 0 {
        return Err(bad("at least one round is needed"));
    }
    let q = alphabet.size();
    let kind = NetworkKind::FamilyC { t };
    let instance = build_instance(kind, alphabet, rounds, scenario)?;
    let code = repetition_code(alphabet, 2 * t + 1, rounds, &[])?;
    let summary = PluralitySummary::new(q, t);
    let tables =
        BTreeMap::from([(1, FnTable::identity(q, t)), (2, summary.table())]);
    let network_code = NetworkCode::per_round_same(tables, rounds);
    let claimed = ClaimedRate { q, size: word::space_size(q, rounds), rounds };
    let preimages = summary.preimage_counts();
    let decoder: DecodeFn = Box::new(move |observation| {
        let blocks = edge_words(observation, 2 * t, rounds);
        let mut message = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let pass: Vec<Symbol> = (0..t).map(|k| blocks[k][r]).collect();
            let summarized: Vec<Symbol> = (t..2 * t).map(|k| blocks[k][r]).collect();
            let profiles = preimages.get(&word::encode(q, &summarized))?;
            let mut fits = (0..q).filter(|&a| {
                let direct = pass.iter().filter(|&&s| s != a).count();
                let summarized_cost = profiles
                    .iter()
                    .map(|counts| t + 1 - counts[a as usize])
                    .min()
                    .expect("every summary has a preimage");
                direct + summarized_cost <= t
            });
            match (fits.next(), fits.next()) {
                (Some(a), None) => message.push(a),
                _ => return None,
            }
        }
        Some(repetition_word(2 * t + 1, &message))
    });
    Ok(Strategy {
        name: format!("family-c(t={t})"),
        instance,
        code,
        network_code,
        claimed,
        decoders: vec![decoder],
    })
}

/// The family E strategy. Both relays forward their received word when its
/// copies agree and emit the first reserved word otherwise; the terminal
/// trusts the wider relay unless it flagged. Only constant reservations are
/// compatible with a repetition code, and the detection signal fits the
/// single out-edge only at `t = 1`, where this is exactly the diamond
/// strategy; larger budgets let the adversary trip both relays at once, and
/// verification reports the resulting ambiguity honestly.
pub fn family_e_strategy(
    t: usize,
    alphabet: Alphabet,
    rounds: usize,
    reserved: &ReservedSet,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    if rounds == 0 {
        return Err(bad("at least one round is needed"));
    }
    let q = alphabet.size();
    if reserved.alphabet_size() != q || reserved.budget() != t {
        return Err(CatalogError::BadReservedSet {
            reason: "the reserved set was built for different parameters".into(),
        });
    }
    let Some(symbols) = reserved.constant_symbols() else {
        return Err(CatalogError::BadReservedSet {
            reason: "a repetition code can only reserve constant vectors".into(),
        });
    };
    if reserved.len() >= q as usize {
        return Err(CatalogError::BadReservedSet {
            reason: "the reservation exhausts the alphabet".into(),
        });
    }
    let kind = NetworkKind::FamilyE { t };
    let instance = build_instance(kind, alphabet, rounds, scenario)?;
    let flag = symbols[0];
    let flag_word = vec![flag; rounds];
    let b = reserved.len() as u128;
    let (code, network_code, claimed) = match scenario {
        Scenario::FixedEdges => {
            let excluded: Vec<Vec<Symbol>> =
                symbols.iter().map(|&s| vec![s; rounds]).collect();
            let code = repetition_code(alphabet, 2 * t + 1, rounds, &excluded)?;
            let tables = BTreeMap::from([
                (1, consistency_window_table(q, t, rounds, 1, &flag_word)),
                (2, consistency_window_table(q, t + 1, rounds, 1, &flag_word)),
            ]);
            let claimed =
                ClaimedRate { q, size: word::space_size(q, rounds) - b, rounds };
            (code, NetworkCode::block(tables, rounds), claimed)
        }
        Scenario::FreeEdges => {
            let excluded: Vec<Vec<Symbol>> = word::space(q, rounds)
                .filter(|m| m.iter().any(|s| symbols.contains(s)))
                .collect();
            let code = repetition_code(alphabet, 2 * t + 1, rounds, &excluded)?;
            let tables = BTreeMap::from([
                (1, consistency_round_table(q, t, 1, flag)),
                (2, consistency_round_table(q, t + 1, 1, flag)),
            ]);
            let claimed = ClaimedRate {
                q,
                size: word::space_size(q - reserved.len() as u8, rounds),
                rounds,
            };
            (code, NetworkCode::per_round_same(tables, rounds), claimed)
        }
    };
    let reserved_words: Vec<Vec<Symbol>> =
        symbols.iter().map(|&s| vec![s; rounds]).collect();
    let decoder = trust_second_unless_flagged(2 * t + 1, rounds, scenario, reserved_words);
    Ok(Strategy {
        name: format!("family-e(t={t})"),
        instance,
        code,
        network_code,
        claimed,
        decoders: vec![decoder],
    })
}

/// The butterfly strategy: the two source-side relays compare their copies
/// and flag disagreement with the star word, the middle relay forwards the
/// agreed word (preferring an unflagged branch, flagging unresolved
/// disagreement), and each terminal trusts its direct branch unless that
/// branch shows the star word. The direct branches are safe, so a flagged
/// direct branch pins the attack to that relay's source edges and the
/// relayed branch is clean.
pub fn butterfly_strategy(
    alphabet: Alphabet,
    rounds: usize,
    scenario: Scenario,
) -> Result<Strategy, CatalogError> {
    let q = alphabet.size();
    if rounds == 0 {
        return Err(bad("at least one round is needed"));
    }
    let instance = build_instance(NetworkKind::Butterfly, alphabet, rounds, scenario)?;
    let star = q - 1;
    let stars = star_word(alphabet, rounds);
    let (code, network_code, claimed) = match scenario {
        Scenario::FixedEdges => {
            let code = repetition_code(alphabet, 4, rounds, &[stars.clone()])?;
            let routing = {
                let stars = stars.clone();
                FnTable::from_fn(q, 2 * rounds, rounds, move |input| {
                    let words = edge_words(input, 2, rounds);
                    route_preferring_unflagged(&words[0], &words[1], &stars)
                })
            };
            let tables = BTreeMap::from([
                (1, consistency_window_table(q, 2, rounds, 2, &stars)),
                (2, consistency_window_table(q, 2, rounds, 2, &stars)),
                (3, routing),
                (4, FnTable::from_fn(q, rounds, 2 * rounds, |w| spread_word(w, 2))),
            ]);
            let claimed =
                ClaimedRate { q, size: word::space_size(q, rounds) - 1, rounds };
            (code, NetworkCode::block(tables, rounds), claimed)
        }
        Scenario::FreeEdges => {
            let per_round: Vec<Vec<Symbol>> = word::space(q, rounds)
                .filter(|m| m.contains(&star))
                .collect();
            let code = repetition_code(alphabet, 4, rounds, &per_round)?;
            let routing = FnTable::from_fn(q, 2, 1, move |input| {
                route_preferring_unflagged(&input[..1], &input[1..], &[star])
            });
            let tables = BTreeMap::from([
                (1, consistency_round_table(q, 2, 2, star)),
                (2, consistency_round_table(q, 2, 2, star)),
                (3, routing),
                (4, FnTable::from_fn(q, 1, 2, |w| vec![w[0], w[0]])),
            ]);
            let claimed =
                ClaimedRate { q, size: word::space_size(q - 1, rounds), rounds };
            (code, NetworkCode::per_round_same(tables, rounds), claimed)
        }
    };
    let decoder = |alphabet: Alphabet, scenario: Scenario| -> DecodeFn {
        let stars = star_word(alphabet, rounds);
        let star = alphabet.size() - 1;
        Box::new(move |observation: &[Symbol]| {
            let (direct, relayed) = observation_pair(observation, rounds);
            let message = match scenario {
                Scenario::FixedEdges => {
                    if direct == stars {
                        relayed
                    } else {
                        direct
                    }
                }
                Scenario::FreeEdges => direct
                    .iter()
                    .zip(&relayed)
                    .map(|(&d, &w)| if d == star { w } else { d })
                    .collect(),
            };
            let excluded = match scenario {
                Scenario::FixedEdges => message == stars,
                Scenario::FreeEdges => message.contains(&star),
            };
            (!excluded).then(|| repetition_word(4, &message))
        })
    };
    Ok(Strategy {
        name: "butterfly".into(),
        instance,
        code,
        network_code,
        claimed,
        decoders: vec![decoder(alphabet, scenario), decoder(alphabet, scenario)],
    })
}

/// Mechanical verdict on a strategy: pairwise-disjoint fan-outs at every
/// terminal, a decoder that recovers the sent word from every reachable
/// observation, and the realized rate.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyReport {
    pub unambiguous: bool,
    /// Two codewords and the terminal where their fan-outs meet.
    pub collision: Option<(u64, u64, usize)>,
    pub decoder_correct: bool,
    /// Codeword, observation, and terminal of the first decoding miss.
    pub decode_miss: Option<(u64, u64, usize)>,
    pub achieved_rate: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for j in 0..k {
        result = result.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    result
}

pub fn verify_strategy(strategy: &Strategy) -> Result<StrategyReport, CatalogError> {
    verify_strategy_with_limit(strategy, 1 << 22)
}

/// Enumeration bound: the number of adversarial evaluations the fan-out
/// computation performs, codewords times edge choices times substitutions.
fn verification_cost(strategy: &Strategy) -> u128 {
    let adv = &strategy.instance.adversary;
    let q = strategy.instance.alphabet.size();
    let rounds = adv.rounds();
    let t = adv.budget().min(adv.vulnerable().len());
    let combos = binomial(adv.vulnerable().len(), t);
    let per_combo = if strategy.network_code.is_block() {
        word::space_size(q, t * rounds)
    } else {
        (rounds as u128).saturating_mul(word::space_size(q, t))
    };
    (strategy.code.len() as u128).saturating_mul(combos).saturating_mul(per_combo)
}

pub fn verify_strategy_with_limit(
    strategy: &Strategy,
    limit: u128,
) -> Result<StrategyReport, CatalogError> {
    let need = verification_cost(strategy);
    if need > limit {
        return Err(CatalogError::ScaleExceeded { need, limit });
    }
    let inst = &strategy.instance;
    let q = inst.alphabet.size();
    let word_len = inst.network.source_degree() * inst.adversary.rounds();
    let words = strategy.code.words();
    let fans = words
        .par_iter()
        .map(|&w| {
            let symbols = word::decode(q, word_len, w);
            fan_out_multishot(inst, &strategy.network_code, &symbols)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let terminals = inst.network.terminals().len();
    let pairs: Vec<(usize, usize)> =
        (0..words.len()).flat_map(|i| (i + 1..words.len()).map(move |j| (i, j))).collect();
    let collision = (0..terminals).find_map(|ti| {
        pairs
            .par_iter()
            .find_map_first(|&(i, j)| {
                word::sets_intersect(&fans[i].per_terminal[ti], &fans[j].per_terminal[ti])
                    .then_some((words[i], words[j], ti))
            })
    });

    let decode_miss = (0..words.len()).find_map(|i| {
        let expected = word::decode(q, word_len, words[i]);
        (0..terminals).find_map(|ti| {
            let obs_len =
                inst.network.in_edges(inst.network.terminals()[ti]).len() * inst.adversary.rounds();
            fans[i].per_terminal[ti].iter().find_map(|&obs| {
                let symbols = word::decode(q, obs_len, obs);
                (strategy.decode(ti, &symbols).as_deref() != Some(&expected[..]))
                    .then_some((words[i], obs, ti))
            })
        })
    });

    Ok(StrategyReport {
        unambiguous: collision.is_none(),
        collision,
        decoder_correct: decode_miss.is_none(),
        decode_miss,
        achieved_rate: (strategy.code.len() as f64).log2()
            / (q as f64).log2()
            / inst.adversary.rounds() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::two_level_profile;
    use crate::net::testnets;
    use std::collections::BTreeSet;

    fn alpha(size: u8) -> Alphabet {
        Alphabet::new(size).unwrap()
    }

    fn assert_verified(strategy: &Strategy) -> StrategyReport {
        let report = verify_strategy(strategy).unwrap();
        assert!(
            report.unambiguous && report.decoder_correct,
            "{} failed: {report:?}",
            strategy.name
        );
        report
    }

    #[test]
    fn built_networks_match_the_reference_shapes() {
        let expect = |kind, reference: Network| {
            assert_eq!(build_network(kind).unwrap().description(), reference.description());
        };
        expect(NetworkKind::Diamond, testnets::diamond());
        expect(NetworkKind::MirroredDiamond, testnets::mirrored());
        expect(NetworkKind::Butterfly, testnets::butterfly());
        expect(NetworkKind::FamilyE { t: 1 }, testnets::diamond());

        let profile = |kind| {
            let net = build_network(kind).unwrap();
            let p = two_level_profile(&net).unwrap();
            (p.in_degrees().to_vec(), p.out_degrees().to_vec())
        };
        assert_eq!(profile(NetworkKind::FamilyA { t: 2 }), (vec![2, 4], vec![2, 2]));
        assert_eq!(profile(NetworkKind::FamilyB { s: 3 }), (vec![1, 4], vec![1, 3]));
        assert_eq!(profile(NetworkKind::FamilyC { t: 2 }), (vec![2, 3], vec![2, 2]));
        assert_eq!(profile(NetworkKind::FamilyD { t: 2 }), (vec![4, 4], vec![1, 1]));
        assert_eq!(profile(NetworkKind::FamilyE { t: 3 }), (vec![3, 4], vec![1, 1]));
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        for kind in [
            NetworkKind::FamilyA { t: 0 },
            NetworkKind::FamilyB { s: 0 },
            NetworkKind::FamilyC { t: 1 },
            NetworkKind::FamilyD { t: 0 },
            NetworkKind::FamilyE { t: 0 },
        ] {
            assert!(matches!(
                build_network(kind),
                Err(CatalogError::BadParameter { .. })
            ));
        }
        assert!(matches!(
            diamond_strategy(alpha(3), 0, Scenario::FixedEdges),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            family_c_strategy(1, alpha(3), 1, Scenario::FixedEdges),
            Err(CatalogError::BadParameter { .. })
        ));
    }

    #[test]
    fn vulnerable_edges_cover_the_exposed_part() {
        let net = build_network(NetworkKind::Diamond).unwrap();
        assert_eq!(vulnerable_edges(NetworkKind::Diamond, &net), net.out_edges(net.source()));
        let net = build_network(NetworkKind::Butterfly).unwrap();
        let ids: Vec<&str> = vulnerable_edges(NetworkKind::Butterfly, &net)
            .into_iter()
            .map(|e| net.edge(e).id.as_str())
            .collect();
        assert_eq!(ids, ["e1", "e2", "e3", "e4", "e6", "e7", "e9"]);
    }

    #[test]
    fn diamond_strategy_achieves_the_expected_sizes() {
        let s = diamond_strategy(alpha(3), 2, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 8);
        assert_eq!(s.claimed.size, 8);
        let report = assert_verified(&s);
        assert!((report.achieved_rate - s.claimed.value()).abs() < 1e-12);

        let s = diamond_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 2);
        assert_verified(&s);

        // Binary one-shot: only one word survives, so nothing is conveyed.
        let s = diamond_strategy(alpha(2), 1, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 1);
        let report = assert_verified(&s);
        assert_eq!(report.achieved_rate, 0.0);

        let s = diamond_strategy(alpha(3), 2, Scenario::FreeEdges).unwrap();
        assert_eq!(s.code.len(), 4);
        assert!(!s.network_code.is_block());
        assert_verified(&s);
    }

    #[test]
    fn mirrored_strategy_achieves_rate_one() {
        for q in [2u8, 3] {
            for rounds in [1usize, 2] {
                for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
                    let s = mirrored_strategy(alpha(q), rounds, scenario).unwrap();
                    assert_eq!(s.code.len() as u128, word::space_size(q, rounds));
                    let report = assert_verified(&s);
                    assert!((report.achieved_rate - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn family_c_achieves_rate_one() {
        for q in [2u8, 3] {
            for rounds in [1usize, 2] {
                for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
                    let s = family_c_strategy(2, alpha(q), rounds, scenario).unwrap();
                    assert_eq!(s.code.len() as u128, word::space_size(q, rounds));
                    let report = assert_verified(&s);
                    assert!((report.achieved_rate - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn family_c_handles_a_tighter_alphabet_or_budget() {
        let s = family_c_strategy(3, alpha(2), 1, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 2);
        assert_verified(&s);
        let s = family_c_strategy(2, alpha(4), 1, Scenario::FreeEdges).unwrap();
        assert_eq!(s.code.len(), 4);
        assert_verified(&s);
    }

    #[test]
    fn family_d_achieves_rate_one() {
        for t in [1usize, 2] {
            for q in [2u8, 3] {
                for rounds in [1usize, 2] {
                    for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
                        let s = family_d_strategy(t, alpha(q), rounds, scenario).unwrap();
                        assert_eq!(s.code.len() as u128, word::space_size(q, rounds));
                        let report = assert_verified(&s);
                        assert!((report.achieved_rate - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn family_e_at_budget_one_is_the_diamond_strategy() {
        for scenario in [Scenario::FixedEdges, Scenario::FreeEdges] {
            let reserved = ReservedSet::constant_top(alpha(3), 1, 1).unwrap();
            let e = family_e_strategy(1, alpha(3), 2, &reserved, scenario).unwrap();
            let d = diamond_strategy(alpha(3), 2, scenario).unwrap();
            assert_eq!(
                e.instance.network.description(),
                d.instance.network.description()
            );
            assert_eq!(e.instance.adversary.vulnerable(), d.instance.adversary.vulnerable());
            assert_eq!(e.instance.adversary.budget(), d.instance.adversary.budget());
            assert_eq!(e.code.words(), d.code.words());
            assert_eq!(e.network_code, d.network_code);
            assert_eq!(e.claimed, d.claimed);
        }
    }

    #[test]
    fn family_e_reserves_the_requested_words() {
        let reserved = ReservedSet::constant_top(alpha(3), 1, 1).unwrap();
        let s = family_e_strategy(1, alpha(3), 2, &reserved, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 8);
        assert_verified(&s);

        let reserved = ReservedSet::constant_top(alpha(2), 1, 1).unwrap();
        let s = family_e_strategy(1, alpha(2), 2, &reserved, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 3);
        assert_verified(&s);

        let reserved = ReservedSet::constant_top(alpha(3), 1, 1).unwrap();
        let s = family_e_strategy(1, alpha(3), 2, &reserved, Scenario::FreeEdges).unwrap();
        assert_eq!(s.code.len(), 4);
        assert_verified(&s);

        // Two reserved words shrink the window code accordingly.
        let reserved = ReservedSet::constant_top(alpha(3), 1, 2).unwrap();
        let s = family_e_strategy(1, alpha(3), 2, &reserved, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 7);
        assert_verified(&s);
    }

    #[test]
    fn reserved_sets_keep_their_projections_distinct() {
        let set = ReservedSet::constant_top(alpha(4), 2, 2).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.vectors(), [vec![2; 5], vec![3; 5]]);
        for rounds in 1..=3 {
            assert_eq!(set.repeated(rounds).len(), set.len());
            assert_eq!(set.first_part_repeated(rounds).len(), set.len());
            assert_eq!(set.second_part_repeated(rounds).len(), set.len());
            assert!(set.repeated(rounds).iter().all(|w| w.len() == 5 * rounds));
            assert!(set.first_part_repeated(rounds).iter().all(|w| w.len() == 2 * rounds));
            assert!(set.second_part_repeated(rounds).iter().all(|w| w.len() == 3 * rounds));
        }

        let reject = |vectors: &[Vec<Symbol>]| {
            assert!(matches!(
                ReservedSet::new(alpha(2), 1, vectors),
                Err(CatalogError::BadReservedSet { .. })
            ));
        };
        reject(&[]);
        reject(&[vec![0, 1]]);
        reject(&[vec![0, 2, 0]]);
        // Same first coordinate: the narrow relay could not tell them apart.
        reject(&[vec![0, 0, 1], vec![0, 1, 1]]);
        assert!(ReservedSet::constant_top(alpha(2), 1, 0).is_err());
        assert!(ReservedSet::constant_top(alpha(2), 1, 2).is_err());
    }

    #[test]
    fn family_e_rejects_unusable_reservations() {
        // Non-constant reserved words never meet a repetition codeword.
        let reserved = ReservedSet::new(alpha(2), 1, &[vec![0, 1, 0]]).unwrap();
        assert!(matches!(
            family_e_strategy(1, alpha(2), 2, &reserved, Scenario::FixedEdges),
            Err(CatalogError::BadReservedSet { .. })
        ));
        // Parameter mismatch between the set and the strategy.
        let reserved = ReservedSet::constant_top(alpha(3), 1, 1).unwrap();
        assert!(matches!(
            family_e_strategy(2, alpha(3), 1, &reserved, Scenario::FixedEdges),
            Err(CatalogError::BadReservedSet { .. })
        ));
        assert!(matches!(
            family_e_strategy(1, alpha(2), 1, &reserved, Scenario::FixedEdges),
            Err(CatalogError::BadReservedSet { .. })
        ));
    }

    #[test]
    fn family_e_detection_saturates_at_larger_budgets() {
        // With budget 2 the adversary can trip both relays at once, leaving
        // every codeword with the doubly-flagged observation.
        let reserved = ReservedSet::constant_top(alpha(3), 2, 1).unwrap();
        let s = family_e_strategy(2, alpha(3), 1, &reserved, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 2);
        let report = verify_strategy(&s).unwrap();
        assert!(!report.unambiguous);
        assert!(report.collision.is_some());
        assert!(!report.decoder_correct);
    }

    #[test]
    fn butterfly_strategy_serves_both_terminals() {
        let s = butterfly_strategy(alpha(3), 2, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 8);
        assert_eq!(s.decoders.len(), 2);
        assert_verified(&s);

        let s = butterfly_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 2);
        assert_verified(&s);

        let s = butterfly_strategy(alpha(2), 2, Scenario::FixedEdges).unwrap();
        assert_eq!(s.code.len(), 3);
        assert_verified(&s);

        let s = butterfly_strategy(alpha(3), 2, Scenario::FreeEdges).unwrap();
        assert_eq!(s.code.len(), 4);
        assert_verified(&s);
    }

    #[test]
    fn butterfly_observations_take_the_documented_forms() {
        // One-shot ternary run, message a = 0, star = 2. Observations are
        // encoded as 3 * first + second.
        let mut s = butterfly_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        let net = &s.instance.network;
        let restrict = |id: &str| {
            AdversaryModel::from_indices(
                BTreeSet::from([net.edge_index(id).unwrap()]),
                1,
                1,
                Scenario::FixedEdges,
            )
            .unwrap()
        };
        let word = [0, 0, 0, 0];

        // Attack on e1: T1 sees (0,0) or a flagged direct branch (2,0);
        // T2 stays clean.
        s.instance.adversary = restrict("e1");
        let fan = fan_out_multishot(&s.instance, &s.network_code, &word).unwrap();
        assert_eq!(fan.per_terminal[0], vec![0, 6]);
        assert_eq!(fan.per_terminal[1], vec![0]);

        // Attack on e3: the mirror image.
        s.instance.adversary = restrict("e3");
        let fan = fan_out_multishot(&s.instance, &s.network_code, &word).unwrap();
        assert_eq!(fan.per_terminal[0], vec![0]);
        assert_eq!(fan.per_terminal[1], vec![0, 6]);

        // Attack on e6: only the relayed branch can degrade, to (0,2).
        s.instance.adversary = restrict("e6");
        let fan = fan_out_multishot(&s.instance, &s.network_code, &word).unwrap();
        assert_eq!(fan.per_terminal[0], vec![0, 2]);
        assert_eq!(fan.per_terminal[1], vec![0, 2]);

        // Attack on e9: the relayed value is arbitrary, the direct one safe.
        s.instance.adversary = restrict("e9");
        let fan = fan_out_multishot(&s.instance, &s.network_code, &word).unwrap();
        assert_eq!(fan.per_terminal[0], vec![0, 1, 2]);
        assert_eq!(fan.per_terminal[1], vec![0, 1, 2]);
    }

    #[test]
    fn corrupting_a_relay_breaks_unambiguity() {
        let mut s = diamond_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        // The checking relay now forwards its first input blindly, so a
        // rewrite there reaches the terminal unchecked.
        let tables = BTreeMap::from([
            (1, FnTable::identity(3, 1)),
            (2, FnTable::from_fn(3, 2, 1, |w| vec![w[0]])),
        ]);
        s.network_code = NetworkCode::block(tables, 1);
        let report = verify_strategy(&s).unwrap();
        assert!(!report.unambiguous);
        let (a, b, terminal) = report.collision.unwrap();
        assert_ne!(a, b);
        assert_eq!(terminal, 0);
        assert!(!report.decoder_correct);
    }

    #[test]
    fn relabeling_the_alphabet_preserves_verification() {
        // Conjugating tables, code, and decoder by a symbol permutation must
        // leave the verdict unchanged: the star convention is arbitrary.
        let sigma: [Symbol; 3] = [1, 2, 0];
        let inv: [Symbol; 3] = [2, 0, 1];
        let base = diamond_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        let mut donor = diamond_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();

        let conjugate = |table: &FnTable| {
            FnTable::from_fn(table.q(), table.in_len(), table.out_len(), |w| {
                let pre: Vec<Symbol> = w.iter().map(|&x| inv[x as usize]).collect();
                table.eval(&pre).iter().map(|&x| sigma[x as usize]).collect()
            })
        };
        let network_code = match &base.network_code {
            NetworkCode::Block { rounds, tables } => NetworkCode::block(
                tables.iter().map(|(&v, t)| (v, conjugate(t))).collect(),
                *rounds,
            ),
            NetworkCode::PerRound { .. } => unreachable!("diamond window code is a block code"),
        };
        let words: Vec<Vec<Symbol>> = base
            .code
            .decoded()
            .into_iter()
            .map(|w| w.iter().map(|&x| sigma[x as usize]).collect())
            .collect();
        let inner = donor.decoders.remove(0);
        let decoder: DecodeFn = Box::new(move |observation| {
            let pre: Vec<Symbol> = observation.iter().map(|&x| inv[x as usize]).collect();
            inner(&pre).map(|w| w.iter().map(|&x| sigma[x as usize]).collect())
        });
        let relabeled = Strategy {
            name: "diamond-relabeled".into(),
            instance: base.instance.clone(),
            code: OuterCode::new(3, &words).unwrap(),
            network_code,
            claimed: base.claimed,
            decoders: vec![decoder],
        };
        let report = assert_verified(&relabeled);
        let original = assert_verified(&base);
        assert_eq!(report.achieved_rate, original.achieved_rate);
    }

    #[test]
    fn an_idle_adversary_makes_any_injective_strategy_unambiguous() {
        let mut s = diamond_strategy(alpha(3), 1, Scenario::FixedEdges).unwrap();
        s.instance.adversary =
            AdversaryModel::from_indices(BTreeSet::new(), 0, 1, Scenario::FixedEdges).unwrap();
        let report = assert_verified(&s);
        assert!(report.unambiguous);
    }

    #[test]
    fn verification_respects_the_scale_limit() {
        let s = diamond_strategy(alpha(3), 2, Scenario::FixedEdges).unwrap();
        match verify_strategy_with_limit(&s, 1) {
            Err(CatalogError::ScaleExceeded { need, limit }) => {
                assert!(need > 1);
                assert_eq!(limit, 1);
            }
            other => panic!("expected a scale error, got {:?}", other.map(|r| r.unambiguous)),
        }
    }

    #[test]
    fn claimed_rates_display_exactly() {
        let rate = |q, size, rounds| ClaimedRate { q, size, rounds }.to_string();
        assert_eq!(rate(3, 8, 2), "log_3(8)/2");
        assert_eq!(rate(3, 8, 1), "log_3(8)");
        assert_eq!(rate(2, 4, 2), "1");
        assert_eq!(rate(2, 8, 2), "3/2");
        assert_eq!(rate(2, 1, 1), "0");
        assert!((ClaimedRate { q: 3, size: 8, rounds: 2 }.value() - 8f64.log(3.0) / 2.0).abs() < 1e-12);
    }
}
