//! Fixed-radix word encoding and sorted word-set helpers.
//!
//! Words over an alphabet of size `q` are packed into `u64` values with the
//! first symbol most significant, so numeric order equals lexicographic
//! order on the underlying symbol sequences.

use crate::net::Symbol;

/// A set of encoded words, kept sorted and deduplicated.
pub type FanOutSet = Vec<u64>;

pub fn space_size(q: u8, len: usize) -> u128 {
    checked_space_size(q, len).expect("word space size overflows u128")
}

/// Like `space_size` but reports overflow instead of panicking, for callers
/// that turn oversized requests into budget errors.
pub fn checked_space_size(q: u8, len: usize) -> Option<u128> {
    (q as u128).checked_pow(u32::try_from(len).ok()?)
}

/// Encodes `word` with the first symbol most significant. Requires the
/// packed value to fit in 63 bits.
pub fn encode(q: u8, word: &[Symbol]) -> u64 {
    debug_assert!(space_size(q, word.len()) <= 1 << 63);
    let mut x = 0u64;
    for &s in word {
        debug_assert!(s < q);
        x = x * q as u64 + s as u64;
    }
    x
}

pub fn decode_into(q: u8, len: usize, mut x: u64, out: &mut Vec<Symbol>) {
    let start = out.len();
    out.resize(start + len, 0);
    for k in (0..len).rev() {
        out[start + k] = (x % q as u64) as Symbol;
        x /= q as u64;
    }
    debug_assert_eq!(x, 0);
}

pub fn decode(q: u8, len: usize, x: u64) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(len);
    decode_into(q, len, x, &mut out);
    out
}

/// Iterates every word of the space in numeric order. Requires a space small
/// enough to enumerate.
pub fn space(q: u8, len: usize) -> impl Iterator<Item = Vec<Symbol>> {
    let count = space_size(q, len);
    assert!(count <= 1 << 32, "word space too large to enumerate");
    (0..count as u64).map(move |x| decode(q, len, x))
}

/// Extracts the symbol at position `pos` of an encoded word of length `len`.
pub fn symbol_at(q: u8, len: usize, x: u64, pos: usize) -> Symbol {
    debug_assert!(pos < len);
    let shift = (q as u64).pow((len - 1 - pos) as u32);
    ((x / shift) % q as u64) as Symbol
}

pub fn sort_dedup(set: &mut FanOutSet) {
    set.sort_unstable();
    set.dedup();
}

/// Whether two sorted sets share an element.
pub fn sets_intersect(a: &[u64], b: &[u64]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Whether sorted `a` is contained in sorted `b`.
pub fn is_subset(a: &[u64], b: &[u64]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}
