//! Set-valued channels: the algebra of fan-out maps and unambiguous codes.

use crate::clique::{self, BitGraph};
use crate::code::OuterCode;
use crate::word::{self, FanOutSet};
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

/// Memory guard for materialized compatibility graphs.
const MAX_GRAPH_WORDS: u128 = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Space {
    pub q: u8,
    pub len: usize,
}

impl Space {
    pub fn size(&self) -> u128 {
        word::space_size(self.q, self.len)
    }

    /// All words of the space in ascending encoded order.
    pub fn words(&self) -> impl Iterator<Item = u64> {
        let n = self.size();
        assert!(n <= 1 << 40, "space too large to enumerate");
        0..n as u64
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "words of length {} over {} symbols", self.len, self.q)
    }
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel spaces do not match: {left} vs {right}")]
    DomainMismatch { left: Space, right: Space },
    #[error("code words have length {got}, channel domain expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no channels given")]
    NoChannels,
    #[error("candidate domain is empty")]
    EmptyDomain,
    #[error("domain of {size} words exceeds the in-memory limit of {limit}")]
    DomainTooLarge { size: u128, limit: u128 },
}

/// A set-valued channel: each input word maps to the set of output words the
/// adversary can cause.
pub trait Channel: Sync {
    fn domain(&self) -> Space;
    fn codomain(&self) -> Space;
    /// Fan-out of `x`, sorted ascending without duplicates.
    fn eval(&self, x: u64) -> FanOutSet;
}

impl<C: Channel + ?Sized> Channel for &C {
    fn domain(&self) -> Space {
        (**self).domain()
    }

    fn codomain(&self) -> Space {
        (**self).codomain()
    }

    fn eval(&self, x: u64) -> FanOutSet {
        (**self).eval(x)
    }
}

/// A channel materialized as an explicit fan-out table.
#[derive(Clone, Debug)]
pub struct TableChannel {
    domain: Space,
    codomain: Space,
    map: Vec<FanOutSet>,
}

impl TableChannel {
    pub fn new(domain: Space, codomain: Space, map: Vec<FanOutSet>) -> Self {
        assert_eq!(map.len() as u128, domain.size());
        let bound = codomain.size();
        let mut map = map;
        for set in &mut map {
            word::sort_dedup(set);
            assert!(set.iter().all(|&y| (y as u128) < bound));
            assert!(!set.is_empty(), "fan-out sets must be nonempty");
        }
        TableChannel { domain, codomain, map }
    }

    pub fn identity(space: Space) -> Self {
        let map = space.words().map(|x| vec![x]).collect();
        TableChannel::new(space, space, map)
    }

    /// Materializes any channel; useful for caching repeated evaluation.
    pub fn materialize(ch: &dyn Channel) -> Self {
        let map = ch.domain().words().map(|x| ch.eval(x)).collect();
        TableChannel { domain: ch.domain(), codomain: ch.codomain(), map }
    }
}

impl Channel for TableChannel {
    fn domain(&self) -> Space {
        self.domain
    }

    fn codomain(&self) -> Space {
        self.codomain
    }

    fn eval(&self, x: u64) -> FanOutSet {
        self.map[x as usize].clone()
    }
}

/// The `exponent`-fold product of a channel: independent uses side by side,
/// first factor most significant.
pub struct Power<C> {
    base: C,
    exponent: usize,
}

pub fn power<C: Channel>(base: C, exponent: usize) -> Power<C> {
    assert!(exponent >= 1, "power requires a positive exponent");
    Power { base, exponent }
}

impl<C: Channel> Channel for Power<C> {
    fn domain(&self) -> Space {
        let d = self.base.domain();
        Space { q: d.q, len: d.len * self.exponent }
    }

    fn codomain(&self) -> Space {
        let c = self.base.codomain();
        Space { q: c.q, len: c.len * self.exponent }
    }

    fn eval(&self, x: u64) -> FanOutSet {
        let q_in = self.base.domain().size() as u64;
        let q_out = self.base.codomain().size() as u64;
        let mut factors = vec![0u64; self.exponent];
        let mut rest = x;
        for k in (0..self.exponent).rev() {
            factors[k] = rest % q_in;
            rest /= q_in;
        }
        let mut acc: FanOutSet = vec![0];
        for &f in &factors {
            let set = self.base.eval(f);
            let mut next = Vec::with_capacity(acc.len() * set.len());
            for &a in &acc {
                for &y in &set {
                    next.push(a * q_out + y);
                }
            }
            acc = next;
        }
        debug_assert!(acc.windows(2).all(|w| w[0] < w[1]));
        acc
    }
}

/// Serial composition: feed every possible output of `first` into `second`.
pub struct Concat<C1, C2> {
    first: C1,
    second: C2,
}

pub fn concatenate<C1: Channel, C2: Channel>(
    first: C1,
    second: C2,
) -> Result<Concat<C1, C2>, ChannelError> {
    if first.codomain() != second.domain() {
        return Err(ChannelError::DomainMismatch {
            left: first.codomain(),
            right: second.domain(),
        });
    }
    Ok(Concat { first, second })
}

impl<C1: Channel, C2: Channel> Channel for Concat<C1, C2> {
    fn domain(&self) -> Space {
        self.first.domain()
    }

    fn codomain(&self) -> Space {
        self.second.codomain()
    }

    fn eval(&self, x: u64) -> FanOutSet {
        let mut out = Vec::new();
        for y in self.first.eval(x) {
            out.extend(self.second.eval(y));
        }
        word::sort_dedup(&mut out);
        out
    }
}

/// Whether `c1` is finer than `c2`: every fan-out of `c1` is contained in
/// the corresponding fan-out of `c2`.
pub fn is_finer(c1: &dyn Channel, c2: &dyn Channel) -> Result<bool, ChannelError> {
    if c1.domain() != c2.domain() {
        return Err(ChannelError::DomainMismatch { left: c1.domain(), right: c2.domain() });
    }
    if c1.codomain() != c2.codomain() {
        return Err(ChannelError::DomainMismatch { left: c1.codomain(), right: c2.codomain() });
    }
    let n = c1.domain().size() as u64;
    Ok((0..n).into_par_iter().all(|x| word::is_subset(&c1.eval(x), &c2.eval(x))))
}

/// Whether every pair of distinct code words has disjoint fan-outs under
/// every channel, one channel per terminal.
pub fn is_unambiguous(code: &OuterCode, channels: &[&dyn Channel]) -> Result<bool, ChannelError> {
    for ch in channels {
        let d = ch.domain();
        if d.len != code.word_len() {
            return Err(ChannelError::LengthMismatch { expected: d.len, got: code.word_len() });
        }
        if d.q != code.q() {
            return Err(ChannelError::DomainMismatch {
                left: d,
                right: Space { q: code.q(), len: code.word_len() },
            });
        }
    }
    for ch in channels {
        let fans: Vec<FanOutSet> = code.words().par_iter().map(|&x| ch.eval(x)).collect();
        for i in 0..fans.len() {
            for j in i + 1..fans.len() {
                if word::sets_intersect(&fans[i], &fans[j]) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Pairwise compatibility of candidate words: an edge means the fan-outs are
/// disjoint under every channel.
pub struct CompatibilityGraph {
    words: Vec<u64>,
    graph: BitGraph,
}

impl CompatibilityGraph {
    pub fn build(channels: &[&dyn Channel], candidates: &[u64]) -> Result<Self, ChannelError> {
        if channels.is_empty() {
            return Err(ChannelError::NoChannels);
        }
        let domain = channels[0].domain();
        for ch in &channels[1..] {
            if ch.domain() != domain {
                return Err(ChannelError::DomainMismatch { left: domain, right: ch.domain() });
            }
        }
        let mut words = candidates.to_vec();
        words.sort_unstable();
        words.dedup();
        if words.is_empty() {
            return Err(ChannelError::EmptyDomain);
        }
        if words.len() as u128 > MAX_GRAPH_WORDS {
            return Err(ChannelError::DomainTooLarge {
                size: words.len() as u128,
                limit: MAX_GRAPH_WORDS,
            });
        }
        let bound = domain.size();
        assert!(words.iter().all(|&w| (w as u128) < bound), "candidate word outside the domain");
        let n = words.len();
        // Fan-outs per channel, then pairwise disjointness, in parallel.
        let fans: Vec<Vec<FanOutSet>> = channels
            .iter()
            .map(|ch| words.par_iter().map(|&x| ch.eval(x)).collect())
            .collect();
        let row_words = n.div_ceil(64);
        let rows: Vec<Vec<u64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0u64; row_words];
                for j in 0..n {
                    if j != i
                        && fans.iter().all(|f| !word::sets_intersect(&f[i], &f[j]))
                    {
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
                row
            })
            .collect();
        let mut graph = BitGraph::new(n);
        for (i, row) in rows.iter().enumerate() {
            graph.set_row(i, row);
        }
        Ok(CompatibilityGraph { words, graph })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_compatible(&self, i: usize, j: usize) -> bool {
        self.graph.test(i, j)
    }

    /// Size of the largest clique together with its lexicographically least
    /// witness, translated back to words.
    pub fn max_clique(&self) -> (u64, Vec<u64>) {
        let (size, verts) = clique::max_clique(&self.graph);
        (size as u64, verts.into_iter().map(|v| self.words[v]).collect())
    }

    pub fn max_clique_size(&self) -> u64 {
        clique::max_clique_size(&self.graph) as u64
    }

    /// Whether some clique of `total` vertices contains all of `seed`
    /// (given as indices into `words`).
    pub fn has_clique_containing(&self, seed: &[usize], total: usize) -> bool {
        clique::has_clique_containing(&self.graph, seed, total)
    }

    pub fn index_of(&self, word: u64) -> Option<usize> {
        self.words.binary_search(&word).ok()
    }
}

#[derive(Clone, Debug)]
pub struct CapacityResult {
    pub size: u64,
    /// Lexicographically least maximum code, ascending.
    pub witness: Vec<u64>,
    pub space: Space,
    /// True when the search ran over a caller-restricted candidate set.
    pub restricted: bool,
}

impl CapacityResult {
    /// One-shot capacity in alphabet digits: log_q of the code size.
    pub fn log_capacity(&self) -> f64 {
        (self.size as f64).ln() / (self.space.q as f64).ln()
    }
}

/// Exact one-shot capacity of a family of channels sharing one domain, by
/// maximum clique over the compatibility graph. `candidates` restricts the
/// words considered; `None` scans the whole domain.
pub fn one_shot_capacity(
    channels: &[&dyn Channel],
    candidates: Option<&[u64]>,
) -> Result<CapacityResult, ChannelError> {
    if channels.is_empty() {
        return Err(ChannelError::NoChannels);
    }
    let domain = channels[0].domain();
    let all;
    let words: &[u64] = match candidates {
        Some(words) => words,
        None => {
            let size = domain.size();
            if size > MAX_GRAPH_WORDS {
                return Err(ChannelError::DomainTooLarge { size, limit: MAX_GRAPH_WORDS });
            }
            all = domain.words().collect::<Vec<u64>>();
            &all
        }
    };
    let graph = CompatibilityGraph::build(channels, words)?;
    let (size, witness) = graph.max_clique();
    Ok(CapacityResult { size, witness, space: domain, restricted: candidates.is_some() })
}
