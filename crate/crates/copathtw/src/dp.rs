//! Machinery shared by both dynamic programs: bag states encoded as packed
//! label keys, connectivity matchings with cycle-safe path merging, table
//! entries with reconstruction back-references, and the representative-family
//! shrink step that enforces the per-state size bound.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{EdgeId, UnionFind, VertexId};
use crate::matroid::{complete_graph_column, complete_graph_representation, max_q_representative, WeightedSet};

/// Pairing of the in-bag endpoints of each tracked path. Pairs are over
/// global vertex ids with `u < v`, kept sorted so equal matchings encode
/// identically; every unpaired ground vertex is isolated. Only degree-1
/// vertices are ever paired.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Matching {
    pairs: Vec<(VertexId, VertexId)>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching::default()
    }

    pub fn pairs(&self) -> &[(VertexId, VertexId)] {
        &self.pairs
    }

    pub fn partner(&self, v: VertexId) -> Option<VertexId> {
        for &(a, b) in &self.pairs {
            if a == v {
                return Some(b);
            }
            if b == v {
                return Some(a);
            }
        }
        None
    }

    fn with_pair(&self, u: VertexId, v: VertexId) -> Matching {
        let mut pairs = self.pairs.clone();
        pairs.push((u.min(v), u.max(v)));
        pairs.sort_unstable();
        Matching { pairs }
    }

    fn without_vertex(&self, v: VertexId) -> Matching {
        let mut pairs = self.pairs.clone();
        pairs.retain(|&(a, b)| a != v && b != v);
        Matching { pairs }
    }

    /// Adds a path edge between bag vertices `u` and `v` whose current
    /// degrees in the partial solution are `deg_u` and `deg_v` (both at
    /// most 1). Returns `None` when the edge would close a tracked path
    /// into a cycle; otherwise the two paths merge and the surviving
    /// in-bag endpoints become paired.
    pub fn add_path_edge(
        &self,
        u: VertexId,
        deg_u: u8,
        v: VertexId,
        deg_v: u8,
    ) -> Option<Matching> {
        debug_assert!(u != v && deg_u <= 1 && deg_v <= 1);
        match (deg_u, deg_v) {
            (0, 0) => Some(self.with_pair(u, v)),
            (0, 1) => Some(self.relink(v, u)),
            (1, 0) => Some(self.relink(u, v)),
            (1, 1) => {
                if self.partner(u) == Some(v) {
                    return None;
                }
                let fu = self.partner(u);
                let fv = self.partner(v);
                let mut out = self.without_vertex(u).without_vertex(v);
                if let (Some(a), Some(b)) = (fu, fv) {
                    out = out.with_pair(a, b);
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// `end` had degree 1; its path gains the fresh endpoint `new_end`.
    fn relink(&self, end: VertexId, new_end: VertexId) -> Matching {
        match self.partner(end) {
            Some(far) => self.without_vertex(end).with_pair(far, new_end),
            // The far end was already forgotten; the new endpoint stays
            // unpaired just like the old one.
            None => self.clone(),
        }
    }

    /// Removes `v` from the ground set; a partner of `v` becomes isolated.
    pub fn forget(&self, v: VertexId) -> Matching {
        self.without_vertex(v)
    }

    /// Combines the connectivity of two child states over the same bag.
    /// `r1_a`/`r1_b` list the degree-1 vertices of each side; an unpaired
    /// degree-1 vertex is a path end whose far end is already forgotten.
    /// Returns `None` when the union of path segments contains a cycle
    /// (including a pair repeated on both sides); otherwise pairs the
    /// endpoints of each maximal merged path.
    pub fn merge(
        a: &Matching,
        r1_a: &[VertexId],
        b: &Matching,
        r1_b: &[VertexId],
    ) -> Option<Matching> {
        let all_pairs: Vec<(VertexId, VertexId)> = a
            .pairs
            .iter()
            .chain(b.pairs.iter())
            .copied()
            .collect();
        let mut vertices: Vec<VertexId> = Vec::new();
        for &(x, y) in &all_pairs {
            vertices.push(x);
            vertices.push(y);
        }
        vertices.sort_unstable();
        vertices.dedup();
        let index =
            |v: VertexId| -> usize { vertices.binary_search(&v).expect("pair vertex indexed") };

        let mut uf = UnionFind::new(vertices.len());
        for &(x, y) in &all_pairs {
            if !uf.union(index(x), index(y)) {
                return None;
            }
        }

        let dangler = |v: VertexId| -> usize {
            let da = r1_a.binary_search(&v).is_ok() && a.partner(v).is_none();
            let db = r1_b.binary_search(&v).is_ok() && b.partner(v).is_none();
            da as usize + db as usize
        };

        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        for (e, &(x, y)) in all_pairs.iter().enumerate() {
            adjacency[index(x)].push(e);
            adjacency[index(y)].push(e);
        }
        let mut seen_edge = vec![false; all_pairs.len()];
        let mut out = Matching::empty();
        for start in 0..vertices.len() {
            if adjacency[start].len() != 1 || seen_edge[adjacency[start][0]] {
                continue;
            }
            // Walk the chain of segments to its other endpoint.
            let mut cur = start;
            loop {
                let next_edge = adjacency[cur].iter().find(|&&e| !seen_edge[e]);
                let Some(&e) = next_edge else { break };
                seen_edge[e] = true;
                let (x, y) = all_pairs[e];
                cur = if index(x) == cur { index(y) } else { index(x) };
            }
            let (u, w) = (vertices[start], vertices[cur]);
            if dangler(u) == 0 && dangler(w) == 0 {
                out = out.with_pair(u, w);
            }
        }
        Some(out)
    }
}

/// Where an entry came from; walking back-references down the tree
/// reconstructs the kept edge or vertex set without storing partial
/// solutions in the tables.
#[derive(Debug, Clone)]
pub(crate) enum BackRef {
    Leaf,
    /// Introduce or forget step above `child`. `edges` are edge ids added
    /// to the partial solution, `vertex` a vertex id added to it.
    Step {
        child: EntryRef,
        edges: Vec<EdgeId>,
        vertex: Option<VertexId>,
    },
    Join { left: EntryRef, right: EntryRef },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EntryRef {
    pub state: StateKey,
    pub index: u32,
}

/// One stored partial solution: its connectivity matching, total weight,
/// and provenance.
#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub matching: Matching,
    pub weight: u64,
    pub backref: BackRef,
}

/// Per-bag-vertex labels packed two bits per position (bag sorted by
/// vertex id). Label values are the solution degrees 0..=2; the packing
/// problem uses 3 for deleted vertices.
pub(crate) type StateKey = u64;

pub(crate) const LABEL_DELETED: u8 = 3;

pub(crate) fn key_label(key: StateKey, pos: usize) -> u8 {
    (key >> (2 * pos) & 3) as u8
}

pub(crate) fn key_with_label(key: StateKey, pos: usize, label: u8) -> StateKey {
    (key & !(3 << (2 * pos))) | ((label as u64) << (2 * pos))
}

/// Inserts a new position (shifting higher positions up) with `label`.
pub(crate) fn key_insert(key: StateKey, pos: usize, label: u8) -> StateKey {
    let low_mask = (1u64 << (2 * pos)) - 1;
    let low = key & low_mask;
    let high = (key & !low_mask) << 2;
    low | high | ((label as u64) << (2 * pos))
}

/// Removes a position (shifting higher positions down).
pub(crate) fn key_remove(key: StateKey, pos: usize) -> StateKey {
    let low_mask = (1u64 << (2 * pos)) - 1;
    let low = key & low_mask;
    let high = (key >> (2 * (pos + 1))) << (2 * pos);
    low | high
}

#[cfg(test)]
pub(crate) fn key_from_labels(labels: &[u8]) -> StateKey {
    labels
        .iter()
        .enumerate()
        .fold(0, |key, (pos, &l)| key | ((l as u64) << (2 * pos)))
}

pub(crate) fn labels_from_key(key: StateKey, len: usize) -> Vec<u8> {
    (0..len).map(|pos| key_label(key, pos)).collect()
}

/// Bag vertices labeled degree 0 or 1: the ground set of the state's
/// connectivity matching.
pub(crate) fn state_ground(bag: &[VertexId], key: StateKey) -> Vec<VertexId> {
    bag.iter()
        .enumerate()
        .filter(|&(pos, _)| key_label(key, pos) <= 1)
        .map(|(_, &v)| v)
        .collect()
}

/// Bag vertices labeled degree 1.
pub(crate) fn state_r1(bag: &[VertexId], key: StateKey) -> Vec<VertexId> {
    bag.iter()
        .enumerate()
        .filter(|&(pos, _)| key_label(key, pos) == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// All entry lists of one node, keyed by state. BTreeMap keeps iteration
/// order canonical so runs are reproducible regardless of thread count.
pub(crate) type StateTable = BTreeMap<StateKey, Vec<Entry>>;

/// Drops duplicate (matching, weight) entries, keeping the first.
pub(crate) fn dedup_entries(entries: Vec<Entry>) -> Vec<Entry> {
    let mut seen: HashMap<(Vec<(VertexId, VertexId)>, u64), ()> = HashMap::new();
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let key = (e.matching.pairs().to_vec(), e.weight);
        if seen.insert(key, ()).is_none() {
            out.push(e);
        }
    }
    out
}

/// Shrinks one state's entry list to a weighted representative family.
///
/// Entries are bucketed by matching size i; bucket i is replaced by a max
/// (k-1-i)-representative family in the graphic matroid of the complete
/// graph on the ground set (k = |ground|, matroid rank k-1). The i = 0
/// bucket degenerates to keeping one maximum-weight entry. Output is a
/// subset of the input, at most 2^k entries, in input order.
pub(crate) fn shrink(ground: &[VertexId], entries: Vec<Entry>, fault: Option<Fault>) -> Vec<Entry> {
    let k = ground.len();
    if entries.len() <= 1 {
        return entries;
    }
    let max_pairs = k / 2;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_pairs + 1];
    for (i, e) in entries.iter().enumerate() {
        buckets[e.matching.pairs().len()].push(i);
    }
    let rep = complete_graph_representation(k);
    let rank = k.saturating_sub(1);
    let mut keep = vec![false; entries.len()];
    for (pairs, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        if matches!(fault, Some(Fault::SkipEmptyShrinkBucket)) && pairs == 0 {
            continue;
        }
        let family: Vec<WeightedSet> = bucket
            .iter()
            .map(|&i| {
                let columns: Vec<u32> = entries[i]
                    .matching
                    .pairs()
                    .iter()
                    .map(|&(u, v)| {
                        let a = ground.binary_search(&u).expect("pair vertex in ground");
                        let b = ground.binary_search(&v).expect("pair vertex in ground");
                        complete_graph_column(k, a, b)
                    })
                    .collect();
                WeightedSet {
                    columns,
                    weight: entries[i].weight,
                    payload: i,
                }
            })
            .collect();
        let kept = max_q_representative(&rep, &family, pairs, rank - pairs)
            .expect("bucket members sized by construction");
        for i in kept {
            keep[i] = true;
        }
    }
    let out: Vec<Entry> = entries
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, e)| e)
        .collect();
    debug_assert!(out.len() <= 1 << k);
    out
}

/// Test-only fault injection for checking suite sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum Fault {
    SkipEmptyShrinkBucket,
}

/// Knobs for a solver run.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Parallelism cap: 0 = automatic, 1 = sequential, n = at most n threads.
    pub threads: usize,
    pub(crate) fault: Option<Fault>,
}

impl SolveOptions {
    pub fn with_threads(threads: usize) -> Self {
        SolveOptions {
            threads,
            fault: None,
        }
    }
}

/// Post-shrink table shape per node, recorded during a solve.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    /// Width of the decomposition that was solved.
    pub width: usize,
    /// Total entries stored at each node, indexed by node id.
    pub per_node_entries: Vec<usize>,
    /// Largest single-state family at each node.
    pub per_node_max_state: Vec<usize>,
    /// Largest single-state family anywhere.
    pub max_state_entries: usize,
    /// States whose post-shrink family exceeded 2^(|R0|+|R1|); always 0.
    pub size_invariant_violations: usize,
}

impl SolveStats {
    pub fn node_count(&self) -> usize {
        self.per_node_entries.len()
    }

    pub(crate) fn record_node(&mut self, node: usize, bag: &[VertexId], table: &StateTable) {
        let mut total = 0;
        let mut max_state = 0;
        for (&key, entries) in table {
            total += entries.len();
            max_state = max_state.max(entries.len());
            let k = state_ground(bag, key).len();
            if entries.len() > 1 << k {
                self.size_invariant_violations += 1;
            }
        }
        self.per_node_entries[node] = total;
        self.per_node_max_state[node] = max_state;
        self.max_state_entries = self.max_state_entries.max(max_state);
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("weight sum overflows u64")]
    WeightOverflow,
    #[error("decomposition does not fit the graph: {0}")]
    InvalidDecomposition(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

/// Sanity checks shared by both solvers: bag ids in range, empty root and
/// leaf bags, and the schedule covering each edge exactly once.
pub(crate) fn check_inputs(
    g: &crate::graph::Graph,
    nice: &crate::decomposition::NiceTreeDecomposition,
    schedule: &crate::decomposition::EdgeSchedule,
) -> Result<(), SolveError> {
    use crate::decomposition::NodeKind;
    let n = g.vertex_count();
    let mut scheduled = vec![0usize; g.edge_count()];
    for (id, node) in nice.nodes().iter().enumerate() {
        if node.bag.iter().any(|&v| v as usize >= n) {
            return Err(SolveError::InvalidDecomposition(format!(
                "node {id} mentions a vertex outside the graph"
            )));
        }
        if matches!(node.kind, NodeKind::Leaf) && !node.bag.is_empty() {
            return Err(SolveError::InvalidDecomposition(format!(
                "leaf node {id} has a non-empty bag"
            )));
        }
        for &e in schedule.incident(id) {
            if e as usize >= g.edge_count() {
                return Err(SolveError::InvalidDecomposition(format!(
                    "scheduled edge {e} out of range"
                )));
            }
            scheduled[e as usize] += 1;
        }
    }
    if !nice.node(nice.root()).bag.is_empty() {
        return Err(SolveError::InvalidDecomposition(
            "root bag is not empty".into(),
        ));
    }
    if let Some(e) = scheduled.iter().position(|&c| c != 1) {
        return Err(SolveError::InvalidDecomposition(format!(
            "edge {e} scheduled {} times",
            scheduled[e]
        )));
    }
    Ok(())
}

/// Walks back-references from the root entry, returning the edge ids and
/// vertex ids accumulated along the way.
pub(crate) fn reconstruct(
    tables: &[StateTable],
    nice: &crate::decomposition::NiceTreeDecomposition,
) -> (Vec<EdgeId>, Vec<VertexId>) {
    let root = nice.root();
    let mut edges = std::collections::BTreeSet::new();
    let mut vertices = std::collections::BTreeSet::new();
    let Some((&key, entries)) = tables[root].iter().next() else {
        return (Vec::new(), Vec::new());
    };
    debug_assert_eq!(key, 0);
    debug_assert_eq!(entries.len(), 1);
    let mut stack = vec![(root, EntryRef { state: key, index: 0 })];
    while let Some((node, eref)) = stack.pop() {
        let entry = &tables[node][&eref.state][eref.index as usize];
        let children = &nice.node(node).children;
        match &entry.backref {
            BackRef::Leaf => {}
            BackRef::Step {
                child,
                edges: added,
                vertex,
            } => {
                edges.extend(added.iter().copied());
                if let Some(v) = vertex {
                    vertices.insert(*v);
                }
                stack.push((children[0], *child));
            }
            BackRef::Join { left, right } => {
                stack.push((children[0], *left));
                stack.push((children[1], *right));
            }
        }
    }
    (edges.into_iter().collect(), vertices.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pairs(m: &Matching) -> Vec<(u32, u32)> {
        m.pairs().to_vec()
    }

    #[test]
    fn add_path_edge_cases() {
        // Closing a tracked path is rejected.
        let m = Matching::empty().with_pair(0, 1);
        assert!(m.add_path_edge(0, 1, 1, 1).is_none());

        // Concatenation: (a,b) + (c,d) joined at b-c pairs (a,d).
        let m = Matching::empty().with_pair(0, 1).with_pair(2, 3);
        let merged = m.add_path_edge(1, 1, 2, 1).unwrap();
        assert_eq!(pairs(&merged), vec![(0, 3)]);

        // Two isolated degree-0 vertices become a pair.
        let m = Matching::empty();
        assert_eq!(pairs(&m.add_path_edge(4, 0, 7, 0).unwrap()), vec![(4, 7)]);

        // Extending a dangling end leaves the new end unpaired.
        let m = Matching::empty();
        assert_eq!(pairs(&m.add_path_edge(3, 0, 5, 1).unwrap()), vec![]);
    }

    #[test]
    fn forget_cases() {
        let m = Matching::empty().with_pair(0, 1);
        assert_eq!(pairs(&m.forget(1)), vec![]);
        assert_eq!(pairs(&Matching::empty().forget(9)), vec![]);
        let m = Matching::empty().with_pair(0, 1).with_pair(2, 3);
        assert_eq!(pairs(&m.forget(3)), vec![(0, 1)]);
    }

    #[test]
    fn merge_cases() {
        let ab = Matching::empty().with_pair(0, 1);
        // Same pair on both sides closes a 2-cycle.
        assert!(Matching::merge(&ab, &[0, 1], &ab, &[0, 1]).is_none());

        // (a,b) + (b,c) chains into (a,c).
        let bc = Matching::empty().with_pair(1, 2);
        let merged = Matching::merge(&ab, &[0, 1], &bc, &[1, 2]).unwrap();
        assert_eq!(pairs(&merged), vec![(0, 2)]);

        // (a,b),(c,d) against (b,c),(d,a) closes a 4-cycle.
        let f1 = Matching::empty().with_pair(0, 1).with_pair(2, 3);
        let f2 = Matching::empty().with_pair(1, 2).with_pair(0, 3);
        assert!(Matching::merge(&f1, &[0, 1, 2, 3], &f2, &[0, 1, 2, 3]).is_none());
    }

    #[test]
    fn merge_respects_dangling_ends() {
        // Side a pairs (0,1); side b has vertex 1 as an unpaired degree-1
        // end, so the combined path runs 0 - 1 - <forgotten> and 0 stays
        // unpaired.
        let a = Matching::empty().with_pair(0, 1);
        let b = Matching::empty();
        let merged = Matching::merge(&a, &[0, 1], &b, &[1]).unwrap();
        assert_eq!(pairs(&merged), vec![]);

        // Without the dangler on side b, 0 and 1 stay paired.
        let merged = Matching::merge(&a, &[0, 1], &b, &[]).unwrap();
        assert_eq!(pairs(&merged), vec![(0, 1)]);
    }

    #[test]
    fn key_encoding_roundtrip() {
        let labels = vec![2u8, 0, 1, 3, 1];
        let key = key_from_labels(&labels);
        assert_eq!(labels_from_key(key, 5), labels);
        let inserted = key_insert(key, 2, 3);
        assert_eq!(labels_from_key(inserted, 6), vec![2, 0, 3, 1, 3, 1]);
        assert_eq!(key_remove(inserted, 2), key);
        assert_eq!(key_label(key_with_label(key, 0, 1), 0), 1);
    }

    fn entry(matching: Matching, weight: u64) -> Entry {
        Entry {
            matching,
            weight,
            backref: BackRef::Leaf,
        }
    }

    #[test]
    fn shrink_degenerate_states() {
        // Empty or singleton ground: a single maximum-weight entry survives.
        for ground in [vec![], vec![5u32]] {
            let entries = vec![
                entry(Matching::empty(), 3),
                entry(Matching::empty(), 9),
                entry(Matching::empty(), 7),
            ];
            let out = shrink(&ground, entries, None);
            assert_eq!(out.len(), 1);
            assert_eq!(out[0].weight, 9);
        }
    }

    #[test]
    fn shrink_empty_matchings_keep_single_max() {
        let ground = vec![0u32, 1, 2, 3];
        let entries: Vec<Entry> = (0..10).map(|w| entry(Matching::empty(), w)).collect();
        let out = shrink(&ground, entries, None);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].weight, 9);
    }

    #[test]
    fn shrink_is_representative_per_bucket() {
        for ground in [vec![4u32, 9, 13], vec![2, 5, 7, 11], vec![1, 3, 5, 7, 9]] {
            shrink_representative_on(&ground);
        }
    }

    fn shrink_representative_on(ground: &[u32]) {
        use crate::matroid::{complete_graph_representation, WeightedSet};
        use crate::oracle::check_representative;
        let mut rng = StdRng::seed_from_u64(41 + ground.len() as u64);
        let ground: Vec<u32> = ground.to_vec();
        let k = ground.len();
        for _ in 0..20 {
            let mut entries = Vec::new();
            for _ in 0..100 {
                // Random valid matching on the ground set.
                let mut m = Matching::empty();
                let mut free: Vec<u32> = ground.clone();
                while free.len() >= 2 && rng.random_bool(0.6) {
                    let i = rng.random_range(0..free.len());
                    let a = free.swap_remove(i);
                    let j = rng.random_range(0..free.len());
                    let b = free.swap_remove(j);
                    m = m.with_pair(a, b);
                }
                entries.push(entry(m, rng.random_range(0..50)));
            }
            let entries = dedup_entries(entries);
            let out = shrink(&ground, entries.clone(), None);
            assert!(out.len() <= 1 << k);

            // Per-bucket representative property, checked exhaustively.
            let rep = complete_graph_representation(k);
            for pairs in 0..=k / 2 {
                let family: Vec<WeightedSet> = entries
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.matching.pairs().len() == pairs)
                    .map(|(i, e)| WeightedSet {
                        columns: e
                            .matching
                            .pairs()
                            .iter()
                            .map(|&(u, v)| {
                                complete_graph_column(
                                    k,
                                    ground.binary_search(&u).unwrap(),
                                    ground.binary_search(&v).unwrap(),
                                )
                            })
                            .collect(),
                        weight: e.weight,
                        payload: i,
                    })
                    .collect();
                if family.is_empty() {
                    continue;
                }
                let kept: Vec<usize> = (0..family.len())
                    .filter(|&fi| {
                        out.iter().any(|oe| {
                            oe.weight == family[fi].weight
                                && oe.matching.pairs() == entries[family[fi].payload].matching.pairs()
                        })
                    })
                    .collect();
                assert!(check_representative(&rep, &family, &kept, k - 1 - pairs));
            }
        }
    }

    #[test]
    fn dedup_keeps_first() {
        let m = Matching::empty().with_pair(0, 1);
        let entries = vec![
            entry(m.clone(), 5),
            entry(m.clone(), 5),
            entry(m, 4),
            entry(Matching::empty(), 5),
        ];
        let out = dedup_entries(entries);
        assert_eq!(out.len(), 3);
    }
}
