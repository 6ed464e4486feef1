//! Node function tables, network codes, and outer codes.

use crate::net::{Alphabet, Network, Symbol};
use crate::word;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("no table for node {node:?} in round {round}")]
    MissingTable { node: String, round: usize },
    #[error("table for node {node:?} expects {expected_in} in and {expected_out} out symbols, has {got_in} and {got_out}")]
    TableArity { node: String, expected_in: usize, expected_out: usize, got_in: usize, got_out: usize },
    #[error("table for node {node:?} uses alphabet size {got}, expected {expected}")]
    TableAlphabet { node: String, expected: u8, got: u8 },
    #[error("table attached to node {node:?}, which computes nothing")]
    TableOnEndpoint { node: String },
    #[error("code has {got} rounds, expected {expected}")]
    WrongRounds { expected: usize, got: usize },
    #[error("code words must share one length; word {index} has length {got}, expected {expected}")]
    WordLength { index: usize, expected: usize, got: usize },
    #[error("duplicate code word at index {index}")]
    DuplicateWord { index: usize },
    #[error("outer code must be nonempty")]
    EmptyCode,
    #[error("symbol {symbol} out of range for alphabet size {q}")]
    SymbolRange { symbol: Symbol, q: u8 },
}

/// A total function table from input words to output words over one
/// alphabet. Rows are indexed by the packed input word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnTable {
    q: u8,
    in_len: usize,
    out_len: usize,
    data: Vec<Symbol>,
}

impl FnTable {
    pub fn from_fn(q: u8, in_len: usize, out_len: usize, mut f: impl FnMut(&[Symbol]) -> Vec<Symbol>) -> Self {
        let rows = word::space_size(q, in_len);
        assert!(rows <= 1 << 24, "table domain too large");
        let mut data = Vec::with_capacity(rows as usize * out_len);
        let mut input = Vec::new();
        for x in 0..rows as u64 {
            input.clear();
            word::decode_into(q, in_len, x, &mut input);
            let out = f(&input);
            assert_eq!(out.len(), out_len, "table row has wrong output length");
            assert!(out.iter().all(|&s| s < q), "table row has out-of-range symbol");
            data.extend_from_slice(&out);
        }
        FnTable { q, in_len, out_len, data }
    }

    pub fn identity(q: u8, len: usize) -> Self {
        Self::from_fn(q, len, len, |w| w.to_vec())
    }

    /// Number of distinct tables with the given shape.
    pub fn count(q: u8, in_len: usize, out_len: usize) -> Option<u128> {
        let rows = word::space_size(q, in_len);
        let values = word::space_size(q, out_len);
        let rows: u32 = rows.try_into().ok()?;
        values.checked_pow(rows)
    }

    /// Decodes table number `index` with row 0 most significant.
    pub fn from_index(q: u8, in_len: usize, out_len: usize, mut index: u128) -> Self {
        let rows = word::space_size(q, in_len) as usize;
        let values = word::space_size(q, out_len);
        let mut data = vec![0; rows * out_len];
        for r in (0..rows).rev() {
            let digit = (index % values) as u64;
            index /= values;
            let mut row = Vec::with_capacity(out_len);
            word::decode_into(q, out_len, digit, &mut row);
            data[r * out_len..(r + 1) * out_len].copy_from_slice(&row);
        }
        debug_assert_eq!(index, 0);
        FnTable { q, in_len, out_len, data }
    }

    pub fn eval(&self, input: &[Symbol]) -> &[Symbol] {
        debug_assert_eq!(input.len(), self.in_len);
        self.eval_encoded(word::encode(self.q, input))
    }

    pub fn eval_encoded(&self, x: u64) -> &[Symbol] {
        let i = x as usize * self.out_len;
        &self.data[i..i + self.out_len]
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }
}

/// The functions the intermediate nodes apply. `PerRound` codes carry one
/// memoryless table per node and round; `Block` codes carry one table per
/// node acting on whole round windows, which is the same-function-each-round
/// notion over the `rounds`-fold product alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetworkCode {
    PerRound { rounds: Vec<BTreeMap<usize, FnTable>> },
    Block { rounds: usize, tables: BTreeMap<usize, FnTable> },
}

impl NetworkCode {
    pub fn per_round(rounds: Vec<BTreeMap<usize, FnTable>>) -> Self {
        assert!(!rounds.is_empty(), "a code must cover at least one round");
        NetworkCode::PerRound { rounds }
    }

    pub fn per_round_same(tables: BTreeMap<usize, FnTable>, rounds: usize) -> Self {
        assert!(rounds >= 1);
        NetworkCode::PerRound { rounds: vec![tables; rounds] }
    }

    pub fn block(tables: BTreeMap<usize, FnTable>, rounds: usize) -> Self {
        assert!(rounds >= 1);
        NetworkCode::Block { rounds, tables }
    }

    pub fn rounds(&self) -> usize {
        match self {
            NetworkCode::PerRound { rounds } => rounds.len(),
            NetworkCode::Block { rounds, .. } => *rounds,
        }
    }

    pub fn is_block(&self) -> bool {
        matches!(self, NetworkCode::Block { .. })
    }

    pub fn same_each_round(&self) -> bool {
        match self {
            NetworkCode::PerRound { rounds } => rounds.iter().all(|r| *r == rounds[0]),
            NetworkCode::Block { .. } => true,
        }
    }

    /// Checks that every intermediate node has a table of the right shape
    /// and that no table is attached elsewhere.
    pub fn validate(&self, net: &Network, alphabet: Alphabet) -> Result<(), CodeError> {
        let round_maps: Vec<(usize, &BTreeMap<usize, FnTable>)> = match self {
            NetworkCode::PerRound { rounds } => rounds.iter().enumerate().collect(),
            NetworkCode::Block { tables, .. } => vec![(0, tables)],
        };
        let window = match self {
            NetworkCode::PerRound { .. } => 1,
            NetworkCode::Block { rounds, .. } => *rounds,
        };
        for (round, tables) in round_maps {
            for v in 0..net.node_count() {
                let computes = v != net.source() && !net.is_terminal(v);
                let table = tables.get(&v);
                if !computes {
                    if table.is_some() {
                        return Err(CodeError::TableOnEndpoint { node: net.node_name(v).to_owned() });
                    }
                    continue;
                }
                let table = table.ok_or_else(|| CodeError::MissingTable {
                    node: net.node_name(v).to_owned(),
                    round,
                })?;
                let expected_in = net.in_edges(v).len() * window;
                let expected_out = net.out_edges(v).len() * window;
                if table.in_len() != expected_in || table.out_len() != expected_out {
                    return Err(CodeError::TableArity {
                        node: net.node_name(v).to_owned(),
                        expected_in,
                        expected_out,
                        got_in: table.in_len(),
                        got_out: table.out_len(),
                    });
                }
                if table.q() != alphabet.size() {
                    return Err(CodeError::TableAlphabet {
                        node: net.node_name(v).to_owned(),
                        expected: alphabet.size(),
                        got: table.q(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// The set of source words the encoder may emit: nonempty, deduplicated,
/// all of one length, stored packed and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterCode {
    q: u8,
    word_len: usize,
    words: Vec<u64>,
}

impl OuterCode {
    pub fn new(q: u8, words: &[Vec<Symbol>]) -> Result<Self, CodeError> {
        if words.is_empty() {
            return Err(CodeError::EmptyCode);
        }
        let word_len = words[0].len();
        for (index, w) in words.iter().enumerate() {
            if w.len() != word_len {
                return Err(CodeError::WordLength { index, expected: word_len, got: w.len() });
            }
            if let Some(&symbol) = w.iter().find(|&&s| s >= q) {
                return Err(CodeError::SymbolRange { symbol, q });
            }
        }
        Self::from_encoded(q, word_len, words.iter().map(|w| word::encode(q, w)).collect())
    }

    pub fn from_encoded(q: u8, word_len: usize, mut words: Vec<u64>) -> Result<Self, CodeError> {
        if words.is_empty() {
            return Err(CodeError::EmptyCode);
        }
        let size = word::space_size(q, word_len);
        if let Some(&w) = words.iter().find(|&&w| w as u128 >= size) {
            return Err(CodeError::SymbolRange { symbol: (w % q as u64) as Symbol, q });
        }
        words.sort_unstable();
        if let Some(index) = words.windows(2).position(|p| p[0] == p[1]) {
            return Err(CodeError::DuplicateWord { index });
        }
        Ok(OuterCode { q, word_len, words })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn word_len(&self) -> usize {
        self.word_len
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

    pub fn decoded(&self) -> Vec<Vec<Symbol>> {
        self.words.iter().map(|&w| word::decode(self.q, self.word_len, w)).collect()
    }
}

struct TableSlot {
    node: usize,
    in_len: usize,
    out_len: usize,
    count: u128,
    pinned: bool,
}

/// The space of table assignments for a set of nodes, indexed in mixed
/// radix with the first node least significant. Pinned nodes contribute only
/// the identity table.
pub struct TableSpace {
    q: u8,
    slots: Vec<TableSlot>,
}

impl TableSpace {
    /// Table assignments for `nodes` (ascending indices), each table acting
    /// on `window` symbols per edge. With `pin_forwarding`, nodes of degree
    /// (1,1) are fixed to the identity. Returns None when a single node's
    /// table count overflows.
    pub fn new(
        net: &Network,
        alphabet: Alphabet,
        nodes: &[usize],
        window: usize,
        pin_forwarding: bool,
    ) -> Option<Self> {
        debug_assert!(nodes.windows(2).all(|p| p[0] < p[1]));
        let mut slots = Vec::with_capacity(nodes.len());
        for &node in nodes {
            let ins = net.in_edges(node).len();
            let outs = net.out_edges(node).len();
            let in_len = ins * window;
            let out_len = outs * window;
            let pinned = pin_forwarding && ins == 1 && outs == 1;
            let count =
                if pinned { 1 } else { FnTable::count(alphabet.size(), in_len, out_len)? };
            slots.push(TableSlot { node, in_len, out_len, count, pinned });
        }
        Some(TableSpace { q: alphabet.size(), slots })
    }

    /// Total number of assignments; None on overflow.
    pub fn count(&self) -> Option<u128> {
        self.slots.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.count))
    }

    pub fn map_at(&self, mut index: u128) -> BTreeMap<usize, FnTable> {
        let mut map = BTreeMap::new();
        for slot in &self.slots {
            let table = if slot.pinned {
                FnTable::identity(self.q, slot.in_len)
            } else {
                let digit = index % slot.count;
                index /= slot.count;
                FnTable::from_index(self.q, slot.in_len, slot.out_len, digit)
            };
            map.insert(slot.node, table);
        }
        debug_assert_eq!(index, 0);
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::testnets::diamond;

    #[test]
    fn table_from_fn_and_eval() {
        let xor = FnTable::from_fn(2, 2, 1, |w| vec![w[0] ^ w[1]]);
        assert_eq!(xor.eval(&[0, 1]), &[1]);
        assert_eq!(xor.eval(&[1, 1]), &[0]);
        let id = FnTable::identity(3, 2);
        assert_eq!(id.eval(&[2, 1]), &[2, 1]);
    }

    #[test]
    fn table_enumeration_round_trips() {
        let total = FnTable::count(2, 1, 1).unwrap();
        assert_eq!(total, 4);
        let tables: Vec<FnTable> = (0..total).map(|i| FnTable::from_index(2, 1, 1, i)).collect();
        for (i, a) in tables.iter().enumerate() {
            for (j, b) in tables.iter().enumerate() {
                assert_eq!(a == b, i == j);
            }
        }
        // Row 0 is the most significant digit.
        assert_eq!(tables[0].eval(&[0]), &[0]);
        assert_eq!(tables[0].eval(&[1]), &[0]);
        assert_eq!(tables[1].eval(&[0]), &[0]);
        assert_eq!(tables[1].eval(&[1]), &[1]);
        assert_eq!(tables[2].eval(&[0]), &[1]);
        assert_eq!(tables[2].eval(&[1]), &[0]);
        assert_eq!(FnTable::count(3, 2, 1), Some(3u128.pow(9)));
    }

    #[test]
    fn code_validation() {
        let net = diamond();
        let alphabet = Alphabet::new(2).unwrap();
        let v1 = net.node_index("V1").unwrap();
        let v2 = net.node_index("V2").unwrap();
        let tables = BTreeMap::from([
            (v1, FnTable::identity(2, 1)),
            (v2, FnTable::from_fn(2, 2, 1, |w| vec![if w[0] == w[1] { w[0] } else { 1 }])),
        ]);
        let code = NetworkCode::per_round_same(tables.clone(), 2);
        assert!(code.validate(&net, alphabet).is_ok());
        assert!(code.same_each_round());
        assert_eq!(code.rounds(), 2);

        let mut missing = tables.clone();
        missing.remove(&v2);
        let bad = NetworkCode::per_round_same(missing, 1);
        assert!(matches!(
            bad.validate(&net, alphabet),
            Err(CodeError::MissingTable { node, round: 0 }) if node == "V2"
        ));

        let mut wrong = tables.clone();
        wrong.insert(v2, FnTable::identity(2, 1));
        let bad = NetworkCode::per_round_same(wrong, 1);
        assert!(matches!(bad.validate(&net, alphabet), Err(CodeError::TableArity { .. })));

        let bad = NetworkCode::per_round_same(tables.clone(), 1);
        assert!(matches!(
            bad.validate(&net, Alphabet::new(3).unwrap()),
            Err(CodeError::TableAlphabet { .. })
        ));

        let mut extra = tables.clone();
        extra.insert(net.source(), FnTable::identity(2, 3));
        let bad = NetworkCode::per_round_same(extra, 1);
        assert!(matches!(
            bad.validate(&net, alphabet),
            Err(CodeError::TableOnEndpoint { node }) if node == "S"
        ));

        let block = NetworkCode::block(
            BTreeMap::from([
                (v1, FnTable::identity(2, 2)),
                (v2, FnTable::from_fn(2, 4, 2, |w| vec![w[0], w[1]])),
            ]),
            2,
        );
        assert!(block.validate(&net, alphabet).is_ok());
        assert!(block.same_each_round());
    }

    #[test]
    fn outer_code_invariants() {
        let code = OuterCode::new(2, &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(code.words(), &[1, 2]);
        assert_eq!(code.decoded(), vec![vec![0, 1], vec![1, 0]]);
        assert!(matches!(OuterCode::new(2, &[]), Err(CodeError::EmptyCode)));
        assert!(matches!(
            OuterCode::new(2, &[vec![0], vec![0]]),
            Err(CodeError::DuplicateWord { .. })
        ));
        assert!(matches!(
            OuterCode::new(2, &[vec![0, 1], vec![1]]),
            Err(CodeError::WordLength { index: 1, expected: 2, got: 1 })
        ));
        assert!(matches!(
            OuterCode::new(2, &[vec![0, 2]]),
            Err(CodeError::SymbolRange { symbol: 2, q: 2 })
        ));
    }

    #[test]
    fn table_space_enumerates_all_assignments() {
        let net = diamond();
        let alphabet = Alphabet::new(2).unwrap();
        let v1 = net.node_index("V1").unwrap();
        let v2 = net.node_index("V2").unwrap();

        let space = TableSpace::new(&net, alphabet, &[v1, v2], 1, false).unwrap();
        // V1 has 2^2 tables, V2 has 2^4.
        assert_eq!(space.count(), Some(64));
        let mut seen = std::collections::BTreeSet::new();
        for idx in 0..64 {
            let map = space.map_at(idx);
            assert_eq!(map.len(), 2);
            assert!(NetworkCode::per_round_same(map.clone(), 1).validate(&net, alphabet).is_ok());
            let key: Vec<Vec<Symbol>> =
                map.values().map(|t| t.eval_encoded(0).to_vec()).collect();
            let full: Vec<(usize, Vec<Symbol>)> = map
                .iter()
                .flat_map(|(&n, t)| {
                    (0..word::space_size(2, t.in_len()) as u64)
                        .map(move |x| (n, t.eval_encoded(x).to_vec()))
                })
                .collect();
            assert!(seen.insert(full), "assignment {idx} repeats {key:?}");
        }

        let pinned = TableSpace::new(&net, alphabet, &[v1, v2], 1, true).unwrap();
        assert_eq!(pinned.count(), Some(16));
        let map = pinned.map_at(3);
        assert_eq!(map[&v1].eval(&[0]), &[0]);
        assert_eq!(map[&v1].eval(&[1]), &[1]);
    }
}
