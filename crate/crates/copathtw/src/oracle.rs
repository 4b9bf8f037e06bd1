//! Independent brute-force references: exhaustive optima for both
//! problems at desk scale, a direct check of the representative-family
//! property, and seeded random instance generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeId, Graph, UnionFind, VertexId, WeightKind};
use crate::matroid::{gf2_rank, BinaryMatrix, WeightedSet};

/// Exact maximum-weight edge set inducing a linear forest, by pruned DFS
/// over edge subsets. Supersets of an infeasible kept set stay infeasible,
/// so branches die as soon as a degree-3 vertex or cycle appears.
/// Intended for m <= 24.
pub fn brute_set(g: &Graph) -> (u64, Vec<EdgeId>) {
    let m = g.edge_count();
    let mut suffix_weight = vec![0u64; m + 1];
    for e in (0..m).rev() {
        suffix_weight[e] = suffix_weight[e + 1] + g.edge_weight(e as EdgeId);
    }
    struct Search<'a> {
        g: &'a Graph,
        suffix_weight: Vec<u64>,
        best: u64,
        witness: Vec<EdgeId>,
        kept: Vec<EdgeId>,
    }
    impl Search<'_> {
        fn run(&mut self, e: usize, weight: u64, degrees: &mut Vec<u8>, uf: &UnionFind) {
            if e == self.g.edge_count() {
                if weight > self.best {
                    self.best = weight;
                    self.witness = self.kept.clone();
                }
                return;
            }
            // The empty kept set already realizes weight 0, so pruning at
            // equality never loses a witness.
            if weight + self.suffix_weight[e] <= self.best {
                return;
            }
            let (u, v) = self.g.endpoints(e as EdgeId);
            // Include branch first so ties resolve toward earlier edges.
            if degrees[u as usize] < 2 && degrees[v as usize] < 2 {
                let mut uf2 = uf.clone();
                if uf2.union(u as usize, v as usize) {
                    degrees[u as usize] += 1;
                    degrees[v as usize] += 1;
                    self.kept.push(e as EdgeId);
                    self.run(e + 1, weight + self.g.edge_weight(e as EdgeId), degrees, &uf2);
                    self.kept.pop();
                    degrees[u as usize] -= 1;
                    degrees[v as usize] -= 1;
                }
            }
            self.run(e + 1, weight, degrees, uf);
        }
    }
    let mut search = Search {
        g,
        suffix_weight,
        best: 0,
        witness: Vec::new(),
        kept: Vec::new(),
    };
    let mut degrees = vec![0u8; g.vertex_count()];
    let uf = UnionFind::new(g.vertex_count());
    search.run(0, 0, &mut degrees, &uf);
    (search.best, search.witness)
}

/// Exact maximum-weight vertex set inducing a linear forest, by flat
/// enumeration of vertex subsets with early degree checks. Intended for
/// n <= 20.
pub fn brute_packing(g: &Graph) -> (u64, Vec<VertexId>) {
    let n = g.vertex_count();
    assert!(n <= 25, "brute_packing is a desk-scale oracle");
    let mut best = 0u64;
    let mut witness: Vec<VertexId> = Vec::new();
    let mut have_any = false;
    'mask: for mask in 0u32..1 << n {
        let mut weight = 0u64;
        for v in 0..n {
            if mask >> v & 1 == 1 {
                weight += g.vertex_weight(v as VertexId);
            }
        }
        if have_any && weight <= best {
            continue;
        }
        let mut uf = UnionFind::new(n);
        for v in 0..n {
            if mask >> v & 1 == 0 {
                continue;
            }
            let mut deg = 0;
            for &w in g.neighbors(v as VertexId) {
                if mask >> w & 1 == 1 {
                    deg += 1;
                    if deg > 2 {
                        continue 'mask;
                    }
                    if (w as usize) > v && !uf.union(v, w as usize) {
                        continue 'mask;
                    }
                }
            }
        }
        best = weight;
        have_any = true;
        witness = (0..n as VertexId).filter(|&v| mask >> v & 1 == 1).collect();
    }
    (best, witness)
}

/// Directly checks the max q-representative property: for every extension
/// set Y of at most q ground columns, any family member disjoint from Y
/// and jointly independent with it must be matched by a kept member that
/// is disjoint, jointly independent, and at least as heavy. `kept` holds
/// indices into `family`. Intended for grounds of at most 15 columns.
pub fn check_representative(
    ground: &BinaryMatrix,
    family: &[WeightedSet],
    kept: &[usize],
    q: usize,
) -> bool {
    let cols = ground.cols();
    assert!(cols <= 15, "extension enumeration is desk-scale");
    let extends = |set: &WeightedSet, y: &[u32]| -> bool {
        if set.columns.iter().any(|c| y.contains(c)) {
            return false;
        }
        let mut union: Vec<u32> = set.columns.clone();
        union.extend_from_slice(y);
        gf2_rank(ground, &union) == union.len()
    };
    for mask in 0u32..1 << cols {
        if (mask.count_ones() as usize) > q {
            continue;
        }
        let y: Vec<u32> = (0..cols as u32).filter(|&c| mask >> c & 1 == 1).collect();
        for x in family {
            if !extends(x, &y) {
                continue;
            }
            let matched = kept
                .iter()
                .any(|&i| family[i].weight >= x.weight && extends(&family[i], &y));
            if !matched {
                return false;
            }
        }
    }
    true
}

/// Graph families for seeded instance generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// Each vertex pair drawn independently with probability ~1/2.
    Gnp,
    /// Near-square grid on n vertices.
    Grid,
    /// Cycle on n vertices (n >= 3).
    Cycle,
    /// Random tree plus a couple of extra edges.
    TreePlusEdges,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::Gnp,
        InstanceKind::Grid,
        InstanceKind::Cycle,
        InstanceKind::TreePlusEdges,
    ];
}

/// Deterministic per seed; the output is canonicalized like any other
/// graph, so edge ids are stable across runs.
pub fn random_instance(seed: u64, n: usize, kind: InstanceKind) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(VertexId, VertexId)> = match kind {
        InstanceKind::Gnp => {
            let mut out = Vec::new();
            for u in 0..n as VertexId {
                for v in u + 1..n as VertexId {
                    if rng.random_bool(0.5) {
                        out.push((u, v));
                    }
                }
            }
            out
        }
        InstanceKind::Grid => {
            // Most-square factorization r x c with r*c = n.
            let r = (1..=n)
                .filter(|&d| n.is_multiple_of(d))
                .take_while(|&d| d * d <= n)
                .last()
                .unwrap_or(1);
            let c = n / r.max(1);
            let mut out = Vec::new();
            for i in 0..r {
                for j in 0..c {
                    let id = (i * c + j) as VertexId;
                    if j + 1 < c {
                        out.push((id, id + 1));
                    }
                    if i + 1 < r {
                        out.push((id, id + c as VertexId));
                    }
                }
            }
            out
        }
        InstanceKind::Cycle => {
            assert!(n >= 3);
            let mut out: Vec<(VertexId, VertexId)> =
                (0..n - 1).map(|i| (i as VertexId, i as VertexId + 1)).collect();
            out.push((0, n as VertexId - 1));
            out
        }
        InstanceKind::TreePlusEdges => {
            let mut out: Vec<(VertexId, VertexId)> = (1..n)
                .map(|v| (rng.random_range(0..v) as VertexId, v as VertexId))
                .collect();
            let extra = rng.random_range(0..=2usize.min(n / 3));
            let mut added = 0;
            let mut attempts = 0;
            while added < extra && attempts < 32 {
                attempts += 1;
                let u = rng.random_range(0..n) as VertexId;
                let v = rng.random_range(0..n) as VertexId;
                if u != v && !out.contains(&(u.min(v), u.max(v))) && !out.contains(&(v.min(u), v.max(u))) {
                    out.push((u.min(v), u.max(v)));
                    added += 1;
                }
            }
            out
        }
    };
    Graph::new(n, &edges).expect("generated edges are in range")
}

/// One instance of the mixed random corpus used by the self-check and
/// acceptance suites: the structure family, size, and seed all derive
/// deterministically from `index`. Edge counts stay within the set
/// oracle's budget.
pub fn corpus_instance(index: u64, max_n: usize) -> Graph {
    let kind = InstanceKind::ALL[(index % 4) as usize];
    let max_n = max_n.max(4);
    let n = 4 + (index / 4) as usize % (max_n - 3);
    let mut attempt = 0;
    loop {
        let g = random_instance(index * 1009 + attempt * 31 + 7, n, kind);
        if g.edge_count() <= 24 {
            return g;
        }
        attempt += 1;
    }
}

/// Seeded integer weights in 0..=10, one per vertex or edge.
pub fn random_weights(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count).map(|_| rng.random_range(0..=10u64)).collect()
}

/// Cycle on n vertices plus `chords` seeded random chords. Chord count
/// steers the decomposition width while keeping a long sparse spine.
pub fn chorded_cycle(n: usize, chords: usize, seed: u64) -> Graph {
    assert!(n >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
    let mut edges: Vec<(VertexId, VertexId)> =
        (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
    edges.push((0, n as u32 - 1));
    let mut added = 0;
    while added < chords {
        let u = rng.random_range(0..n) as VertexId;
        let v = rng.random_range(0..n) as VertexId;
        if u != v && !edges.contains(&(u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v)));
            added += 1;
        }
    }
    Graph::new(n, &edges).expect("chord endpoints in range")
}

/// Seeded random family of weighted p-subsets of the edge columns of K_k,
/// for exercising the representative-family engine with q = k - 1 - p.
pub fn random_family(seed: u64, k: usize, p: usize, members: usize) -> Vec<WeightedSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let cols = k * k.saturating_sub(1) / 2;
    let mut family = Vec::with_capacity(members);
    for payload in 0..members {
        if cols < p {
            break;
        }
        let mut columns: Vec<u32> = (0..cols as u32).collect();
        for i in (1..columns.len()).rev() {
            columns.swap(i, rng.random_range(0..=i));
        }
        columns.truncate(p);
        columns.sort_unstable();
        family.push(WeightedSet {
            columns,
            weight: rng.random_range(0..=50),
            payload,
        });
    }
    family
}

/// Attaches seeded random weights for the given problem side.
pub fn with_random_weights(g: &Graph, kind: WeightKind, seed: u64) -> Graph {
    let mut out = g.clone();
    match kind {
        WeightKind::Vertices => out
            .set_vertex_weights(random_weights(seed, g.vertex_count()))
            .unwrap(),
        WeightKind::Edges => out
            .set_edge_weights(random_weights(seed, g.edge_count()))
            .unwrap(),
    }
    out
}
