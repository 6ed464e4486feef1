//! Exact maximum clique search on small bitset graphs.

pub(crate) struct BitGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitGraph { n, words, rows: vec![0; n * words] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    #[cfg(test)]
    pub fn add_edge(&mut self, i: usize, j: usize) {
        debug_assert_ne!(i, j);
        self.rows[i * self.words + j / 64] |= 1 << (j % 64);
        self.rows[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn test(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set_row(&mut self, i: usize, row: &[u64]) {
        debug_assert_eq!(row.len(), self.words);
        self.rows[i * self.words..(i + 1) * self.words].copy_from_slice(row);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn full_set(&self) -> Vec<u64> {
        let mut set = vec![u64::MAX; self.words];
        let spare = self.words * 64 - self.n;
        if spare > 0 {
            set[self.words - 1] >>= spare;
        }
        set
    }
}

fn collect_bits(set: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (w, &bits) in set.iter().enumerate() {
        let mut bits = bits;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            out.push(w * 64 + b);
            bits &= bits - 1;
        }
    }
    out
}

fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn disjoint(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

fn clear_bit(set: &mut [u64], v: usize) {
    set[v / 64] &= !(1 << (v % 64));
}

fn test_bit(set: &[u64], v: usize) -> bool {
    set[v / 64] >> (v % 64) & 1 == 1
}

struct Searcher<'a> {
    g: &'a BitGraph,
    best: usize,
    stop_at: Option<usize>,
    found: bool,
}

impl Searcher<'_> {
    /// Branch and bound with a greedy coloring bound, processing candidates
    /// in ascending vertex order within ascending color classes.
    fn expand(&mut self, size: usize, mut cand: Vec<u64>) {
        if self.found {
            return;
        }
        let verts = collect_bits(&cand);
        if verts.is_empty() {
            if size > self.best {
                self.best = size;
                if self.stop_at.is_some_and(|t| self.best >= t) {
                    self.found = true;
                }
            }
            return;
        }
        let mut color = vec![0usize; verts.len()];
        let mut classes: Vec<Vec<u64>> = Vec::new();
        for (k, &v) in verts.iter().enumerate() {
            let c = classes
                .iter()
                .position(|class| disjoint(class, self.g.row(v)))
                .unwrap_or_else(|| {
                    classes.push(vec![0; cand.len()]);
                    classes.len() - 1
                });
            classes[c][v / 64] |= 1 << (v % 64);
            color[k] = c + 1;
        }
        let mut order: Vec<usize> = (0..verts.len()).collect();
        order.sort_by_key(|&k| color[k]);
        for &k in order.iter().rev() {
            if size + color[k] <= self.best {
                return;
            }
            let v = verts[k];
            self.expand(size + 1, intersect(&cand, self.g.row(v)));
            if self.found {
                return;
            }
            clear_bit(&mut cand, v);
        }
    }
}

pub(crate) fn max_clique_size(g: &BitGraph) -> usize {
    if g.len() == 0 {
        return 0;
    }
    let mut s = Searcher { g, best: 0, stop_at: None, found: false };
    s.expand(0, g.full_set());
    s.best
}

fn has_clique_at_least(g: &BitGraph, cand: Vec<u64>, target: usize) -> bool {
    if target == 0 {
        return true;
    }
    let mut s = Searcher { g, best: target - 1, stop_at: Some(target), found: false };
    s.expand(0, cand);
    s.found
}

/// The lexicographically least maximum clique, as ascending vertex indices.
pub(crate) fn lex_min_max_clique(g: &BitGraph, size: usize) -> Vec<usize> {
    let mut forced = Vec::with_capacity(size);
    let mut cand = g.full_set();
    let mut v = 0;
    while forced.len() < size {
        debug_assert!(v < g.len(), "no clique of the requested size");
        if !test_bit(&cand, v) {
            v += 1;
            continue;
        }
        let with_v = intersect(&cand, g.row(v));
        let need = size - forced.len() - 1;
        if has_clique_at_least(g, with_v.clone(), need) {
            forced.push(v);
            cand = with_v;
        } else {
            clear_bit(&mut cand, v);
        }
        v += 1;
    }
    forced
}

pub(crate) fn max_clique(g: &BitGraph) -> (usize, Vec<usize>) {
    let size = max_clique_size(g);
    if size == 0 {
        return (0, Vec::new());
    }
    (size, lex_min_max_clique(g, size))
}

/// Whether a clique of `total` vertices exists that contains all of `seed`.
pub(crate) fn has_clique_containing(g: &BitGraph, seed: &[usize], total: usize) -> bool {
    for (a, &i) in seed.iter().enumerate() {
        for &j in &seed[a + 1..] {
            if !g.test(i, j) {
                return false;
            }
        }
    }
    if seed.len() >= total {
        return true;
    }
    let mut cand = g.full_set();
    for &v in seed {
        cand = intersect(&cand, g.row(v));
    }
    has_clique_at_least(g, cand, total - seed.len())
}
