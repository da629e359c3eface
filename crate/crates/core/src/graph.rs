//! Adjacency state of the microscale model.
//!
//! Besides the symmetric 0/1 adjacency matrix the state keeps
//!
//! * `common[i][j] = (A^2)_{ij}` for `i != j`,
//! * index lists of present and absent pairs for O(1) uniform sampling,
//! * a Fenwick tree over the open-wedge weights `(A^2)_{ij} (1 - A_{ij})`
//!   of every unordered pair, so triadic targets are sampled in O(log N).
//!
//! Flipping one edge touches O(n) cache entries.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Initial configuration of a microscale run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Every pair present independently with probability `p`.
    ErdosRenyi(f64),
    /// Exactly `m` edges placed uniformly at random.
    EdgeCount(usize),
    /// `round(N / 2)` edges placed uniformly at random.
    HalfEdges,
}

impl InitialCondition {
    pub fn validate(&self, n: usize) -> Result<()> {
        let n_edges = n * n.saturating_sub(1) / 2;
        match *self {
            InitialCondition::ErdosRenyi(p) if !(0.0..=1.0).contains(&p) => Err(
                Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")),
            ),
            InitialCondition::EdgeCount(m) if m > n_edges => Err(Error::InvalidParameter(
                format!("edge count {m} exceeds the {n_edges} available pairs"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphState {
    n: usize,
    adjacency: Vec<bool>,
    common: Vec<u32>,
    pairs: Vec<(u32, u32)>,
    /// Position of each pair inside `present` or `absent`.
    slot: Vec<u32>,
    present: Vec<u32>,
    absent: Vec<u32>,
    wedges: Fenwick,
}

impl PartialEq for GraphState {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.adjacency == other.adjacency
    }
}

impl GraphState {
    pub fn empty(n: usize) -> Self {
        let n_edges = n * n.saturating_sub(1) / 2;
        let mut pairs = Vec::with_capacity(n_edges);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i as u32, j as u32));
            }
        }
        Self {
            n,
            adjacency: vec![false; n * n],
            common: vec![0; n * n],
            pairs,
            slot: (0..n_edges as u32).collect(),
            present: Vec::new(),
            absent: (0..n_edges as u32).collect(),
            wedges: Fenwick::new(n_edges),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut state = Self::empty(n);
        let all: Vec<usize> = (0..state.pairs.len()).collect();
        state.bulk_load(&all);
        state
    }

    /// Builds a graph from 0-indexed node pairs. Duplicate pairs are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut state = Self::empty(n);
        let mut idx = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            idx.push(state.pair_index(i, j)?);
        }
        idx.sort_unstable();
        idx.dedup();
        state.bulk_load(&idx);
        Ok(state)
    }

    /// Erdős–Rényi sample: each pair present independently with probability `p`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        InitialCondition::ErdosRenyi(p).validate(n)?;
        let mut state = Self::empty(n);
        let chosen: Vec<usize> = (0..state.pairs.len())
            .filter(|_| rng.random_bool(p))
            .collect();
        state.bulk_load(&chosen);
        Ok(state)
    }

    /// Seeded form of [`erdos_renyi`](Self::erdos_renyi).
    pub fn init_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        Self::erdos_renyi(n, p, &mut crate::rng::seeded(seed))
    }

    /// Exactly `m` edges at uniformly random positions.
    pub fn with_edge_count<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        InitialCondition::EdgeCount(m).validate(n)?;
        let mut state = Self::empty(n);
        let mut chosen = index::sample(rng, state.pairs.len(), m).into_vec();
        chosen.sort_unstable();
        state.bulk_load(&chosen);
        Ok(state)
    }

    pub fn from_initial<R: Rng + ?Sized>(
        n: usize,
        initial: &InitialCondition,
        rng: &mut R,
    ) -> Result<Self> {
        match *initial {
            InitialCondition::ErdosRenyi(p) => Self::erdos_renyi(n, p, rng),
            InitialCondition::EdgeCount(m) => Self::with_edge_count(n, m, rng),
            InitialCondition::HalfEdges => {
                let m = (n * (n - 1) / 2) as f64 / 2.0;
                Self::with_edge_count(n, m.round() as usize, rng)
            }
        }
    }

    fn bulk_load(&mut self, pair_indices: &[usize]) {
        for &p in pair_indices {
            let (i, j) = self.pairs[p];
            let (i, j) = (i as usize, j as usize);
            self.adjacency[i * self.n + j] = true;
            self.adjacency[j * self.n + i] = true;
        }
        self.rebuild_caches();
    }

    /// Recomputes every cache from the adjacency matrix.
    fn rebuild_caches(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let row_i = &self.adjacency[i * n..(i + 1) * n];
                let row_j = &self.adjacency[j * n..(j + 1) * n];
                let c = row_i.iter().zip(row_j).filter(|(a, b)| **a && **b).count() as u32;
                self.common[i * n + j] = c;
                self.common[j * n + i] = c;
            }
        }
        self.present.clear();
        self.absent.clear();
        let mut weights = vec![0u64; self.pairs.len()];
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            if self.adjacency[i * n + j] {
                self.slot[p] = self.present.len() as u32;
                self.present.push(p as u32);
            } else {
                self.slot[p] = self.absent.len() as u32;
                self.absent.push(p as u32);
                weights[p] = u64::from(self.common[i * n + j]);
            }
        }
        self.wedges = Fenwick::from_weights(&weights);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of node pairs `N`.
    pub fn n_edges(&self) -> usize {
        self.pairs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.present.len()
    }

    /// Edge density `edge_count / N`.
    pub fn density(&self) -> f64 {
        self.present.len() as f64 / self.pairs.len() as f64
    }

    /// Index of the unordered pair `{i, j}` in upper-triangle row-major order.
    pub fn pair_index(&self, i: usize, j: usize) -> Result<usize> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidPair { i, j, n: self.n });
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        Ok(i * (2 * self.n - i - 1) / 2 + (j - i - 1))
    }

    /// Nodes `(i, j)` with `i < j` of a pair index.
    pub fn pair_nodes(&self, pair: usize) -> (usize, usize) {
        let (i, j) = self.pairs[pair];
        (i as usize, j as usize)
    }

    /// `A_{ij}`; false on the diagonal.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Cached `(A^2)_{ij}` for `i != j`.
    pub fn common_neighbors(&self, i: usize, j: usize) -> u32 {
        if i == j {
            0
        } else {
            self.common[i * self.n + j]
        }
    }

    /// Number of triangles that closing `{i, j}` would create:
    /// `(A^2)_{ij} (1 - A_{ij})`.
    pub fn wedge_weight(&self, i: usize, j: usize) -> Result<u32> {
        self.pair_index(i, j)?;
        Ok(if self.has_edge(i, j) {
            0
        } else {
            self.common[i * self.n + j]
        })
    }

    /// Sum of [`wedge_weight`](Self::wedge_weight) over all unordered pairs.
    pub fn open_wedge_total(&self) -> u64 {
        self.wedges.total()
    }

    /// Present edges as 0-indexed `(i, j)` pairs with `i < j`, lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs
            .iter()
            .map(|&(i, j)| (i as usize, j as usize))
            .filter(|&(i, j)| self.has_edge(i, j))
    }

    /// Upper-triangle indicator vector in pair-index order.
    pub fn upper_triangle(&self) -> impl Iterator<Item = bool> + '_ {
        self.pairs
            .iter()
            .map(|&(i, j)| self.adjacency[i as usize * self.n + j as usize])
    }

    /// Edge list text: one `i j` line per edge, 1-indexed, `i < j`, sorted.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }

    /// Parses the format written by [`edge_list_text`](Self::edge_list_text).
    pub fn parse_edge_list(n: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidParameter(format!("edge list line {}: {line:?}", lineno + 1));
            let mut it = line.split_whitespace();
            let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() || i == 0 || j == 0 {
                return Err(bad());
            }
            edges.push((i - 1, j - 1));
        }
        Self::from_edges(n, &edges)
    }

    /// Inserts or removes the edge `{i, j}`; returns whether anything changed.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) -> Result<bool> {
        let p = self.pair_index(i, j)?;
        if self.has_edge(i, j) == present {
            return Ok(false);
        }
        self.flip(p);
        Ok(true)
    }

    /// Flips the pair with index `pair` and updates every cache.
    pub(crate) fn flip(&mut self, pair: usize) {
        let n = self.n;
        let (i, j) = self.pair_nodes(pair);
        let adding = !self.adjacency[i * n + j];

        if adding {
            self.wedges.add(pair, -i64::from(self.common[i * n + j]));
            move_between(&mut self.absent, &mut self.present, &mut self.slot, pair);
        } else {
            move_between(&mut self.present, &mut self.absent, &mut self.slot, pair);
        }
        self.adjacency[i * n + j] = adding;
        self.adjacency[j * n + i] = adding;

        let delta: i32 = if adding { 1 } else { -1 };
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            // k is a common neighbour of (i, k) via j iff j-k is present.
            if self.adjacency[j * n + k] {
                self.bump_common(i, k, delta);
            }
            if self.adjacency[i * n + k] {
                self.bump_common(j, k, delta);
            }
        }

        if !adding {
            self.wedges.add(pair, i64::from(self.common[i * n + j]));
        }
    }

    fn bump_common(&mut self, a: usize, b: usize, delta: i32) {
        let n = self.n;
        let c = (self.common[a * n + b] as i32 + delta) as u32;
        self.common[a * n + b] = c;
        self.common[b * n + a] = c;
        if !self.adjacency[a * n + b] {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p = lo * (2 * n - lo - 1) / 2 + (hi - lo - 1);
            self.wedges.add(p, i64::from(delta));
        }
    }

    /// Uniformly random present pair.
    pub(crate) fn sample_present<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.present.is_empty() {
            return None;
        }
        Some(self.present[rng.random_range(0..self.present.len())] as usize)
    }

    /// Uniformly random absent pair.
    pub(crate) fn sample_absent<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.absent.is_empty() {
            return None;
        }
        Some(self.absent[rng.random_range(0..self.absent.len())] as usize)
    }

    /// Absent pair drawn with probability proportional to its wedge weight.
    pub(crate) fn sample_open_wedge<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let total = self.wedges.total();
        if total == 0 {
            return None;
        }
        Some(self.wedges.find(rng.random_range(0..total)))
    }

    /// Checks every cache against a recomputation from the adjacency matrix.
    pub fn caches_consistent(&self) -> bool {
        let mut fresh = self.clone();
        fresh.rebuild_caches();
        let lists_ok = self.present.len() == fresh.present.len()
            && self
                .present
                .iter()
                .all(|&p| self.adjacency[self.pairs[p as usize].0 as usize * self.n + self.pairs[p as usize].1 as usize]);
        let weights_ok = (0..self.pairs.len()).all(|p| self.wedges.weight(p) == fresh.wedges.weight(p));
        self.common == fresh.common && lists_ok && weights_ok && self.wedges.total() == fresh.wedges.total()
    }
}

fn move_between(from: &mut Vec<u32>, to: &mut Vec<u32>, slot: &mut [u32], pair: usize) {
    let pos = slot[pair] as usize;
    from.swap_remove(pos);
    if let Some(&moved) = from.get(pos) {
        slot[moved as usize] = pos as u32;
    }
    slot[pair] = to.len() as u32;
    to.push(pair as u32);
}

/// Binary indexed tree over nonnegative integer weights.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
    total: u64,
}

impl Fenwick {
    fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
            total: 0,
        }
    }

    fn from_weights(weights: &[u64]) -> Self {
        let len = weights.len();
        let mut tree = vec![0u64; len + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=len {
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                tree[parent] += tree[i];
            }
        }
        Self {
            tree,
            total: weights.iter().sum(),
        }
    }

    fn total(&self) -> u64 {
        self.total
    }

    fn add(&mut self, idx: usize, delta: i64) {
        if delta == 0 {
            return;
        }
        self.total = self.total.wrapping_add_signed(delta);
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, idx: usize) -> u64 {
        let mut i = idx;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    fn weight(&self, idx: usize) -> u64 {
        self.prefix(idx + 1) - self.prefix(idx)
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let len = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = len.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= len && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
