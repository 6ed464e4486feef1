//! Brute-force search: maximum unambiguous codes for a fixed network code,
//! exhaustion over network codes, and Hamming-style channel oracles.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::TwoLevelProfile;
use crate::channel::{
    self, CapacityResult, Channel, ChannelError, CompatibilityGraph, Space, TableChannel,
};
use crate::clique::{self, BitGraph};
use crate::code::{CodeError, NetworkCode, OuterCode, TableSpace};
use crate::net::{Alphabet, Instance, Scenario, Symbol};
use crate::transfer::{self, TransferError};
use crate::word;

/// Ceilings for exhaustive work. A search that would overrun one of them
/// fails with `BudgetExceeded` instead of truncating silently.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    /// Largest message domain a clique search may materialize.
    pub max_domain: u128,
    /// Largest number of network codes an enumeration may visit.
    pub max_network_codes: u128,
    /// Wall-clock ceiling for one enumeration, in seconds.
    pub max_seconds: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_domain: 1 << 15, max_network_codes: 1 << 24, max_seconds: 3600 }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("{what} needs {need} but the budget allows {limit}")]
    BudgetExceeded { what: &'static str, need: u128, limit: u128 },
    #[error("bad parameter: {reason}")]
    BadParameter { reason: String },
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// A maximum unambiguous code found for one fixed network code.
#[derive(Clone, Debug)]
pub struct CodeSearchOutcome {
    pub size: u64,
    /// Lexicographically least maximum code over the source words.
    pub code: OuterCode,
}

/// Flags controlling `max_over_network_codes`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EnumerationOptions {
    /// Enumerate independent tables for every round instead of one shared
    /// per-round assignment; raises the enumeration cost to the i-th power.
    pub per_round_codes: bool,
    /// Fix nodes of degree (1,1) to plain forwarding.
    pub pin_forwarding: bool,
}

/// The joint maximum over network codes and outer codes.
#[derive(Clone, Debug)]
pub struct NetworkCodeSearchOutcome {
    pub size: u64,
    pub code: OuterCode,
    pub network_code: NetworkCode,
    pub per_round_codes: bool,
    pub pinned_forwarding: bool,
    /// Number of network codes visited.
    pub explored: u128,
}

fn check_domain(inst: &Instance, budget: &SearchBudget) -> Result<u64, SearchError> {
    let len = inst.network.source_degree() * inst.adversary.rounds();
    let need = word::checked_space_size(inst.alphabet.size(), len).unwrap_or(u128::MAX);
    if need > budget.max_domain || need > u64::MAX as u128 {
        return Err(SearchError::BudgetExceeded {
            what: "message domain",
            need,
            limit: budget.max_domain,
        });
    }
    Ok(need as u64)
}

/// Evaluates every fan-out once per source word and splits the result into
/// one materialized channel per terminal.
fn materialized_terminal_channels(
    inst: &Instance,
    code: &NetworkCode,
) -> Result<Vec<TableChannel>, SearchError> {
    code.validate(&inst.network, inst.alphabet)?;
    let rounds = inst.adversary.rounds();
    if code.rounds() != rounds {
        return Err(CodeError::WrongRounds { expected: rounds, got: code.rounds() }.into());
    }
    if code.is_block() && inst.adversary.scenario() == Scenario::FreeEdges {
        return Err(TransferError::BlockCodeFreeEdges.into());
    }
    let q = inst.alphabet.size();
    let len = inst.network.source_degree() * rounds;
    let size = word::space_size(q, len) as usize;
    let fans = (0..size)
        .into_par_iter()
        .map(|x| {
            let xs = word::decode(q, len, x as u64);
            transfer::fan_out_multishot(inst, code, &xs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let domain = Space { q, len };
    Ok((0..inst.network.terminals().len())
        .map(|t| {
            let term = inst.network.terminals()[t];
            let codomain = Space { q, len: inst.network.in_edges(term).len() * rounds };
            let map = fans.iter().map(|fan| fan.per_terminal[t].clone()).collect();
            TableChannel::new(domain, codomain, map)
        })
        .collect())
}

/// Exact maximum unambiguous code for a fixed network code: a maximum clique
/// over the message domain under compatibility at every terminal.
pub fn max_code_for_fixed_f(
    inst: &Instance,
    code: &NetworkCode,
    budget: &SearchBudget,
) -> Result<CodeSearchOutcome, SearchError> {
    check_domain(inst, budget)?;
    let channels = materialized_terminal_channels(inst, code)?;
    let refs: Vec<&dyn Channel> = channels.iter().map(|c| c as &dyn Channel).collect();
    let cap = channel::one_shot_capacity(&refs, None)?;
    let len = inst.network.source_degree() * inst.adversary.rounds();
    let witness = OuterCode::from_encoded(inst.alphabet.size(), len, cap.witness)?;
    Ok(CodeSearchOutcome { size: cap.size, code: witness })
}

/// Exact maximum of `max_code_for_fixed_f` over every network code in the
/// enumerated space. Ties in code size resolve to the earliest assignment,
/// so the reported witness is deterministic.
pub fn max_over_network_codes(
    inst: &Instance,
    options: EnumerationOptions,
    budget: &SearchBudget,
) -> Result<NetworkCodeSearchOutcome, SearchError> {
    let domain_size = check_domain(inst, budget)?;
    let net = &inst.network;
    let rounds = inst.adversary.rounds();
    let inner: Vec<usize> =
        (0..net.node_count()).filter(|&v| v != net.source() && !net.is_terminal(v)).collect();
    let space = TableSpace::new(net, inst.alphabet, &inner, 1, options.pin_forwarding);
    let per_round = space.as_ref().and_then(TableSpace::count);
    let total = per_round.and_then(|c| {
        if options.per_round_codes {
            c.checked_pow(rounds as u32)
        } else {
            Some(c)
        }
    });
    let total = match total {
        Some(total) if total <= budget.max_network_codes && total <= usize::MAX as u128 => total,
        other => {
            return Err(SearchError::BudgetExceeded {
                what: "network code enumeration",
                need: other.unwrap_or(u128::MAX),
                limit: budget.max_network_codes,
            })
        }
    };
    let space = space.expect("a finite enumeration count implies a table space");
    let per_round = per_round.expect("a finite enumeration count implies a slot count");
    let code_at = |index: u128| {
        if options.per_round_codes {
            let mut index = index;
            let maps = (0..rounds)
                .map(|_| {
                    let digit = index % per_round;
                    index /= per_round;
                    space.map_at(digit)
                })
                .collect();
            NetworkCode::per_round(maps)
        } else {
            NetworkCode::per_round_same(space.map_at(index), rounds)
        }
    };

    let words: Vec<u64> = (0..domain_size).collect();
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
            let code = code_at(index as u128);
            let channels = materialized_terminal_channels(inst, &code)?;
            let refs: Vec<&dyn Channel> = channels.iter().map(|c| c as &dyn Channel).collect();
            Ok(CompatibilityGraph::build(&refs, &words)?.max_clique_size())
        })
        .collect::<Result<Vec<u64>, SearchError>>()?;
    if timed_out.load(Ordering::Relaxed) {
        return Err(SearchError::BudgetExceeded {
            what: "wall clock seconds",
            need: start.elapsed().as_secs() as u128,
            limit: budget.max_seconds as u128,
        });
    }

    let mut best = 0usize;
    for (index, &size) in sizes.iter().enumerate() {
        if size > sizes[best] {
            best = index;
        }
    }
    let network_code = code_at(best as u128);
    let outcome = max_code_for_fixed_f(inst, &network_code, budget)?;
    debug_assert_eq!(outcome.size, sizes[best]);
    Ok(NetworkCodeSearchOutcome {
        size: outcome.size,
        code: outcome.code,
        network_code,
        per_round_codes: options.per_round_codes,
        pinned_forwarding: options.pin_forwarding,
        explored: total,
    })
}

/// Pairwise unambiguity rule for multishot Hamming-style channels: two words
/// qualify when some round keeps them at or beyond the threshold distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceRule {
    /// Threshold 2t+1: survives t replacements on each side.
    UniqueDecoding,
    /// Threshold 3t: survives t replacements while keeping a t-strong
    /// plurality for the sent value.
    PluralityMargin,
}

impl DistanceRule {
    pub fn threshold(self, t: usize) -> usize {
        match self {
            DistanceRule::UniqueDecoding => 2 * t + 1,
            DistanceRule::PluralityMargin => 3 * t,
        }
    }
}

/// True when some round-block of `x` and `y` has Hamming distance at least
/// `threshold`. Words are round-major: block r spans positions rn..(r+1)n.
fn blocks_apart(x: &[Symbol], y: &[Symbol], n: usize, i: usize, threshold: usize) -> bool {
    (0..i).any(|r| (r * n..(r + 1) * n).filter(|&p| x[p] != y[p]).count() >= threshold)
}

fn distance_graph(q: u8, n: usize, i: usize, threshold: usize, words: &[u64]) -> BitGraph {
    let decoded: Vec<Vec<Symbol>> =
        words.iter().map(|&w| word::decode(q, n * i, w)).collect();
    let stride = words.len().div_ceil(64);
    let rows: Vec<Vec<u64>> = (0..words.len())
        .into_par_iter()
        .map(|a| {
            let mut row = vec![0u64; stride];
            for b in 0..words.len() {
                if b != a && blocks_apart(&decoded[a], &decoded[b], n, i, threshold) {
                    row[b / 64] |= 1 << (b % 64);
                }
            }
            row
        })
        .collect();
    let mut graph = BitGraph::new(words.len());
    for (a, row) in rows.iter().enumerate() {
        graph.set_row(a, row);
    }
    graph
}

/// Maximum code on `n` symbols over `i` rounds under the per-pair rule that
/// some round reaches the rule's distance threshold.
pub fn hamming_max_code(
    n: usize,
    t: usize,
    alphabet: Alphabet,
    i: usize,
    rule: DistanceRule,
    budget: &SearchBudget,
) -> Result<CapacityResult, SearchError> {
    if n == 0 || i == 0 {
        return Err(SearchError::BadParameter { reason: "n and i must be at least 1".into() });
    }
    let q = alphabet.size();
    let size = word::checked_space_size(q, n * i).unwrap_or(u128::MAX);
    if size > budget.max_domain || size > u64::MAX as u128 {
        return Err(SearchError::BudgetExceeded {
            what: "hamming domain",
            need: size,
            limit: budget.max_domain,
        });
    }
    let words: Vec<u64> = (0..size as u64).collect();
    let graph = distance_graph(q, n, i, rule.threshold(t), &words);
    let (size, members) = clique::max_clique(&graph);
    Ok(CapacityResult {
        size: size as u64,
        witness: members.iter().map(|&v| words[v]).collect(),
        space: Space { q, len: n * i },
        restricted: false,
    })
}

/// Outcome of mechanizing a coincidence counting argument at desk scale.
#[derive(Clone, Debug)]
pub struct CoincidenceReport {
    /// Claimed maximum code size, (q - reserved)^i.
    pub target: u128,
    /// Words whose round blocks all avoid the reserved blocks.
    pub domain_size: u128,
    /// Unordered compatible pairs sharing the first round block that were
    /// tested, up to the first extension found.
    pub shared_pairs_checked: u128,
    /// Whether some sharing pair extends to a code of size target + 1.
    pub extension_exists: bool,
    /// A sharing pair admitting such an extension, when one exists.
    pub extension_witness: Option<(u64, u64)>,
    /// Maximum code over the whole restricted domain. May exceed the target:
    /// the claim under test constrains codes containing a sharing pair, not
    /// every code over the relation.
    pub max_code: u64,
    /// No sharing pair extends to a code of size target + 1.
    pub confirmed: bool,
}

/// Checks computationally that no code of size target + 1 contains two
/// codewords agreeing on a round block, where target = (q - reserved)^i.
/// The condition and the restricted domain are both invariant under
/// permuting rounds, so agreement on the first round block is general.
pub fn coincidence_argument_check(
    n: usize,
    t: usize,
    alphabet: Alphabet,
    i: usize,
    rule: DistanceRule,
    reserved: u8,
    budget: &SearchBudget,
) -> Result<CoincidenceReport, SearchError> {
    if n == 0 || i == 0 {
        return Err(SearchError::BadParameter { reason: "n and i must be at least 1".into() });
    }
    let q = alphabet.size();
    if reserved >= q {
        return Err(SearchError::BadParameter {
            reason: "reserved symbols exhaust the alphabet".into(),
        });
    }
    // Reserved round blocks: the constant blocks over the top symbols.
    let reserved_blocks: Vec<u64> =
        (q - reserved..q).map(|s| word::encode(q, &vec![s; n])).collect();
    let block_count = word::space_size(q, n);
    if block_count > u64::MAX as u128 {
        return Err(SearchError::BudgetExceeded {
            what: "round block space",
            need: block_count,
            limit: budget.max_domain,
        });
    }
    let allowed: Vec<u64> =
        (0..block_count as u64).filter(|b| !reserved_blocks.contains(b)).collect();
    let domain_size = (allowed.len() as u128).checked_pow(i as u32).unwrap_or(u128::MAX);
    if domain_size > budget.max_domain {
        return Err(SearchError::BudgetExceeded {
            what: "restricted domain",
            need: domain_size,
            limit: budget.max_domain,
        });
    }
    // Round-major big-endian assembly keeps the words ascending, so words
    // sharing the first round block form contiguous groups.
    let mut words: Vec<u64> = Vec::with_capacity(domain_size as usize);
    let mut assemble = vec![0u64; i];
    loop {
        let value = assemble.iter().fold(0u64, |acc, &d| {
            acc * block_count as u64 + allowed[d as usize]
        });
        words.push(value);
        let mut pos = i;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            assemble[pos] += 1;
            if (assemble[pos] as usize) < allowed.len() {
                break;
            }
            assemble[pos] = 0;
        }
        if assemble.iter().all(|&d| d == 0) {
            break;
        }
    }
    debug_assert!(words.windows(2).all(|p| p[0] < p[1]));
    debug_assert_eq!(words.len() as u128, domain_size);

    let threshold = rule.threshold(t);
    let graph = distance_graph(q, n, i, threshold, &words);
    let (max_code, _) = clique::max_clique(&graph);
    let target = ((q - reserved) as u128).checked_pow(i as u32).unwrap_or(u128::MAX);

    let group = allowed.len().pow((i - 1) as u32);
    let scans: Vec<(u128, Option<(u64, u64)>)> = (0..allowed.len())
        .into_par_iter()
        .map(|first| {
            let start = first * group;
            let mut checked = 0u128;
            for a in start..start + group {
                for b in a + 1..start + group {
                    if !graph.test(a, b) {
                        continue;
                    }
                    checked += 1;
                    if target + 1 <= words.len() as u128
                        && clique::has_clique_containing(&graph, &[a, b], (target + 1) as usize)
                    {
                        return (checked, Some((words[a], words[b])));
                    }
                }
            }
            (checked, None)
        })
        .collect();
    let mut shared_pairs_checked = 0u128;
    let mut extension_witness = None;
    for (checked, witness) in scans {
        shared_pairs_checked += checked;
        if witness.is_some() && extension_witness.is_none() {
            extension_witness = witness;
        }
    }
    let extension_exists = extension_witness.is_some();
    Ok(CoincidenceReport {
        target,
        domain_size,
        shared_pairs_checked,
        extension_exists,
        extension_witness,
        max_code: max_code as u64,
        confirmed: !extension_exists,
    })
}

/// A lower bound valid conditionally on the existence of a one-shot
/// capacity-achieving pair reserving `b` vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionalBound {
    pub q: u8,
    /// Achievable code size over `rounds` rounds: q^(a i) - b.
    pub size: u128,
    pub rounds: usize,
    pub conditional: bool,
}

/// Code size q^(a i) - b achievable over i rounds on a simple 2-level
/// network whose one-shot capacity is met by a pair reserving b vectors.
pub fn general_2level_lower_bound(
    profile: &TwoLevelProfile,
    alphabet: Alphabet,
    i: usize,
    a: usize,
    b: u128,
) -> Result<ConditionalBound, SearchError> {
    if a == 0 || b == 0 || i == 0 {
        return Err(SearchError::BadParameter {
            reason: "a, b and i must all be at least 1".into(),
        });
    }
    if a > profile.total_in().min(profile.total_out()) {
        return Err(SearchError::BadParameter {
            reason: "a exceeds the profile's minimum cut".into(),
        });
    }
    let q = alphabet.size();
    let full = match word::checked_space_size(q, a * i) {
        Some(full) if full > b => full,
        _ => {
            return Err(SearchError::BadParameter {
                reason: "no codewords remain after reserving b vectors".into(),
            })
        }
    };
    Ok(ConditionalBound { q, size: full - b, rounds: i, conditional: true })
}
