//! Simple undirected graphs with optional vertex/edge weights, linear-forest
//! recognition, and solution verification for both deletion problems.

use std::fmt;

use thiserror::Error;

pub type VertexId = u32;
pub type EdgeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex id {0} out of range (n = {1})")]
    VertexOutOfRange(u32, usize),
    #[error("edge id {0} out of range (m = {1})")]
    EdgeOutOfRange(u32, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("weight list has {got} entries, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("weight sum overflows u64")]
    WeightOverflow,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

impl ParseError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            msg: msg.into(),
        }
    }
}

/// Which id space a weight or id set refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Vertices,
    Edges,
}

/// An immutable simple undirected graph.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted lexicographically, so
/// edge ids are dense and reproducible no matter how the input was ordered.
/// Absent weight lists mean unit weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<VertexId>>,
    edges: Vec<(VertexId, VertexId)>,
    vertex_weights: Option<Vec<u64>>,
    edge_weights: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a canonical graph from an edge list. Duplicate edges collapse;
    /// self-loops are rejected.
    pub fn new(n: usize, edge_list: &[(VertexId, VertexId)]) -> Result<Graph, GraphError> {
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(a, b) in edge_list {
            if a as usize >= n {
                return Err(GraphError::VertexOutOfRange(a, n));
            }
            if b as usize >= n {
                return Err(GraphError::VertexOutOfRange(b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            adjacency,
            edges,
            vertex_weights: None,
            edge_weights: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e as usize]
    }

    /// Dense id of edge `{u, v}`, if present.
    pub fn edge_id(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok().map(|i| i as EdgeId)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn set_vertex_weights(&mut self, weights: Vec<u64>) -> Result<(), GraphError> {
        if weights.len() != self.vertex_count() {
            return Err(GraphError::WeightLength {
                got: weights.len(),
                expected: self.vertex_count(),
            });
        }
        self.vertex_weights = Some(weights);
        Ok(())
    }

    pub fn set_edge_weights(&mut self, weights: Vec<u64>) -> Result<(), GraphError> {
        if weights.len() != self.edge_count() {
            return Err(GraphError::WeightLength {
                got: weights.len(),
                expected: self.edge_count(),
            });
        }
        self.edge_weights = Some(weights);
        Ok(())
    }

    pub fn vertex_weight(&self, v: VertexId) -> u64 {
        match &self.vertex_weights {
            Some(w) => w[v as usize],
            None => 1,
        }
    }

    pub fn edge_weight(&self, e: EdgeId) -> u64 {
        match &self.edge_weights {
            Some(w) => w[e as usize],
            None => 1,
        }
    }

    /// Same structure, all weights reset to 1.
    pub fn with_unit_weights(&self) -> Graph {
        Graph {
            adjacency: self.adjacency.clone(),
            edges: self.edges.clone(),
            vertex_weights: None,
            edge_weights: None,
        }
    }

    /// Parses the PACE-style `.gr` edge-list format: a `p tw n m` header
    /// followed by 1-indexed `u v` lines; `c`/`#` lines are comments.
    pub fn from_gr_str(text: &str) -> Result<Graph, ParseError> {
        let mut n: Option<usize> = None;
        let mut declared_m = 0usize;
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                if n.is_some() {
                    return Err(ParseError::at(lineno, "duplicate problem line"));
                }
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 3 || fields[0] != "tw" {
                    return Err(ParseError::at(lineno, "expected header 'p tw <n> <m>'"));
                }
                let nv: usize = fields[1]
                    .parse()
                    .map_err(|_| ParseError::at(lineno, "bad vertex count"))?;
                declared_m = fields[2]
                    .parse()
                    .map_err(|_| ParseError::at(lineno, "bad edge count"))?;
                n = Some(nv);
                continue;
            }
            let n = n.ok_or_else(|| ParseError::at(lineno, "edge before 'p tw' header"))?;
            let mut it = line.split_whitespace();
            let (a, b) = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(ParseError::at(lineno, "expected 'u v'")),
            };
            let parse_vertex = |s: &str| -> Result<VertexId, ParseError> {
                let v: usize = s
                    .parse()
                    .map_err(|_| ParseError::at(lineno, format!("bad vertex '{s}'")))?;
                if v == 0 || v > n {
                    return Err(ParseError::at(
                        lineno,
                        format!("vertex {v} outside 1..={n}"),
                    ));
                }
                Ok((v - 1) as VertexId)
            };
            let u = parse_vertex(a)?;
            let v = parse_vertex(b)?;
            if u == v {
                return Err(ParseError::at(lineno, "self-loop"));
            }
            edges.push((u, v));
        }
        let n = n.ok_or_else(|| ParseError::at(0, "missing 'p tw' header"))?;
        let g = Graph::new(n, &edges).map_err(|e| ParseError::at(0, e.to_string()))?;
        if declared_m != edges.len() {
            // Header count disagreeing with the body is tolerated after dedup,
            // but a shortfall in raw lines is a malformed file.
            if edges.len() < declared_m {
                return Err(ParseError::at(
                    0,
                    format!("header declares {declared_m} edges, found {}", edges.len()),
                ));
            }
        }
        Ok(g)
    }

    pub fn to_gr_string(&self) -> String {
        let mut out = format!("p tw {} {}\n", self.vertex_count(), self.edge_count());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graph(n={}, m={})",
            self.vertex_count(),
            self.edge_count()
        )
    }
}

/// Parses a weight file: one non-negative integer per line, in id order.
pub fn parse_weights(text: &str) -> Result<Vec<u64>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('#') {
            continue;
        }
        let w: u64 = line
            .parse()
            .map_err(|_| ParseError::at(idx + 1, format!("bad weight '{line}'")))?;
        out.push(w);
    }
    Ok(out)
}

/// True iff every vertex has degree at most 2 and the graph is acyclic,
/// i.e. every connected component is a path (isolated vertices count as
/// trivial paths).
///
/// This characterization coincides with "every component is an *induced*
/// path" for both verification targets here: in the kept subgraph, any
/// chord or extra edge between two vertices of a component would itself be
/// a kept edge, so it would either raise a degree above 2 or close a
/// cycle. Nothing outside the kept subgraph can break inducedness.
pub fn is_linear_forest(g: &Graph) -> bool {
    if g.adjacency.iter().any(|nb| nb.len() > 2) {
        return false;
    }
    // With max degree <= 2, acyclicity is per-component |E| = |V| - 1.
    let mut uf = UnionFind::new(g.vertex_count());
    for &(u, v) in g.edges() {
        if !uf.union(u as usize, v as usize) {
            return false;
        }
    }
    true
}

/// Subgraph on the vertices incident to `kept`, with exactly those edges.
/// Vertex ids are remapped densely in increasing original order; weights
/// are inherited through the remap.
pub fn edge_subgraph(g: &Graph, kept: &[EdgeId]) -> Result<Graph, GraphError> {
    let m = g.edge_count();
    let mut vertices: Vec<VertexId> = Vec::new();
    for &e in kept {
        if e as usize >= m {
            return Err(GraphError::EdgeOutOfRange(e, m));
        }
        let (u, v) = g.endpoints(e);
        vertices.push(u);
        vertices.push(v);
    }
    vertices.sort_unstable();
    vertices.dedup();
    let rank = |v: VertexId| vertices.binary_search(&v).unwrap() as VertexId;
    let edge_list: Vec<(VertexId, VertexId)> = kept
        .iter()
        .map(|&e| {
            let (u, v) = g.endpoints(e);
            (rank(u), rank(v))
        })
        .collect();
    let mut sub = Graph::new(vertices.len(), &edge_list)?;
    if g.vertex_weights.is_some() {
        sub.set_vertex_weights(vertices.iter().map(|&v| g.vertex_weight(v)).collect())?;
    }
    if g.edge_weights.is_some() {
        let mut ws = Vec::with_capacity(sub.edge_count());
        for &(a, b) in sub.edges() {
            let (u, v) = (vertices[a as usize], vertices[b as usize]);
            let orig = g.edge_id(u, v).expect("kept edge exists in parent");
            ws.push(g.edge_weight(orig));
        }
        sub.set_edge_weights(ws)?;
    }
    Ok(sub)
}

/// Subgraph induced by `kept`: those vertices plus every edge with both
/// endpoints kept. Ids remap densely in increasing original order.
pub fn induced_subgraph(g: &Graph, kept: &[VertexId]) -> Result<Graph, GraphError> {
    let n = g.vertex_count();
    let mut vertices = kept.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    for &v in &vertices {
        if v as usize >= n {
            return Err(GraphError::VertexOutOfRange(v, n));
        }
    }
    let rank = |v: VertexId| vertices.binary_search(&v).map(|i| i as VertexId);
    let mut edge_list = Vec::new();
    let mut edge_ids = Vec::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if let (Ok(a), Ok(b)) = (rank(u), rank(v)) {
            edge_list.push((a, b));
            edge_ids.push(e as EdgeId);
        }
    }
    let mut sub = Graph::new(vertices.len(), &edge_list)?;
    if g.vertex_weights.is_some() {
        sub.set_vertex_weights(vertices.iter().map(|&v| g.vertex_weight(v)).collect())?;
    }
    if g.edge_weights.is_some() {
        sub.set_edge_weights(edge_ids.iter().map(|&e| g.edge_weight(e)).collect())?;
    }
    Ok(sub)
}

/// True iff keeping exactly these edges leaves a linear forest.
/// Out-of-range ids are not a valid solution and yield `false`.
pub fn verify_set_solution(g: &Graph, kept: &[EdgeId]) -> bool {
    match edge_subgraph(g, kept) {
        Ok(sub) => is_linear_forest(&sub),
        Err(_) => false,
    }
}

/// True iff the subgraph induced by these vertices is a linear forest.
pub fn verify_packing_solution(g: &Graph, kept: &[VertexId]) -> bool {
    match induced_subgraph(g, kept) {
        Ok(sub) => is_linear_forest(&sub),
        Err(_) => false,
    }
}

/// Sum of the selected weights; the empty set weighs 0. Overflow is an
/// error, never wraparound.
pub fn weight_of(g: &Graph, kind: WeightKind, ids: &[u32]) -> Result<u64, GraphError> {
    let mut total: u64 = 0;
    for &id in ids {
        let w = match kind {
            WeightKind::Vertices => {
                if id as usize >= g.vertex_count() {
                    return Err(GraphError::VertexOutOfRange(id, g.vertex_count()));
                }
                g.vertex_weight(id)
            }
            WeightKind::Edges => {
                if id as usize >= g.edge_count() {
                    return Err(GraphError::EdgeOutOfRange(id, g.edge_count()));
                }
                g.edge_weight(id)
            }
        };
        total = total.checked_add(w).ok_or(GraphError::WeightOverflow)?;
    }
    Ok(total)
}

#[derive(Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub(crate) fn find(&mut self, x: usize) -> u32 {
        let mut root = x as u32;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x as u32;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Returns false when x and y were already connected.
    pub(crate) fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        self.parent[rx as usize] = ry;
        true
    }
}


#[cfg(test)]
mod tests {
    use super::tests_support::{complete, cycle, path, star};
    use super::*;

    #[test]
    fn linear_forest_recognition() {
        assert!(is_linear_forest(&path(4)));
        assert!(!is_linear_forest(&cycle(3)));
        assert!(!is_linear_forest(&star(3)));
        assert!(is_linear_forest(&Graph::new(5, &[]).unwrap()));
    }

    #[test]
    fn edge_subgraph_cases() {
        let c4 = cycle(4);
        let sub = edge_subgraph(&c4, &[0, 1, 2]).unwrap();
        assert_eq!(sub.vertex_count(), 4);
        assert_eq!(sub.edge_count(), 3);
        assert!(is_linear_forest(&sub));

        let empty = edge_subgraph(&c4, &[]).unwrap();
        assert_eq!(empty.vertex_count(), 0);
        assert_eq!(empty.edge_count(), 0);
        assert!(is_linear_forest(&empty));

        // K4 edges sort as 01,02,03,12,13,23; ids 0,3,5 give the path 0-1-2-3.
        let k4 = complete(4);
        let p4 = edge_subgraph(&k4, &[0, 3, 5]).unwrap();
        assert_eq!(p4.edge_count(), 3);
        assert!(is_linear_forest(&p4));
        assert_eq!(p4.degree(1), 2);
        assert_eq!(p4.degree(2), 2);

        assert!(edge_subgraph(&c4, &[99]).is_err());
    }

    #[test]
    fn induced_subgraph_cases() {
        let k4 = complete(4);
        assert_eq!(induced_subgraph(&k4, &[0, 2]).unwrap().edge_count(), 1);
        assert_eq!(induced_subgraph(&k4, &[0, 1, 3]).unwrap().edge_count(), 3);
        let c5 = cycle(5);
        let p4 = induced_subgraph(&c5, &[0, 1, 2, 3]).unwrap();
        assert_eq!(p4.edge_count(), 3);
        assert!(is_linear_forest(&p4));
    }

    #[test]
    fn verify_solutions() {
        let k4 = complete(4);
        assert!(verify_packing_solution(&k4, &[0, 1]));
        assert!(!verify_packing_solution(&k4, &[0, 1, 2]));
        let c5 = cycle(5);
        assert!(verify_packing_solution(&c5, &[0, 1, 2, 3]));
        assert!(verify_set_solution(&c5, &[0, 1, 2, 3]));
        assert!(!verify_set_solution(&c5, &[0, 1, 2, 3, 4]));
        assert!(!verify_set_solution(&c5, &[77]));
    }

    #[test]
    fn weights() {
        let mut p4 = path(4);
        assert_eq!(weight_of(&p4, WeightKind::Edges, &[0, 1, 2]).unwrap(), 3);
        assert_eq!(weight_of(&p4, WeightKind::Edges, &[]).unwrap(), 0);
        p4.set_edge_weights(vec![2, 5, 7]).unwrap();
        assert_eq!(weight_of(&p4, WeightKind::Edges, &[0, 1, 2]).unwrap(), 14);

        let mut g = path(2);
        g.set_vertex_weights(vec![u64::MAX, 2]).unwrap();
        assert!(matches!(
            weight_of(&g, WeightKind::Vertices, &[0, 1]),
            Err(GraphError::WeightOverflow)
        ));
    }

    #[test]
    fn gr_parsing() {
        let g = Graph::from_gr_str("c comment\np tw 4 3\n1 2\n2 3\n# more\n3 4\n").unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edge_id(0, 1), Some(0));

        assert!(Graph::from_gr_str("1 2\n").is_err());
        assert!(Graph::from_gr_str("p tw 2 1\n1 3\n").is_err());
        assert!(Graph::from_gr_str("p tw 2 2\n1 2\n").is_err());
    }

    #[test]
    fn canonical_edge_ids_independent_of_input_order() {
        let a = Graph::new(4, &[(3, 2), (0, 1), (2, 0)]).unwrap();
        let b = Graph::new(4, &[(0, 2), (1, 0), (2, 3)]).unwrap();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn component_wise_characterization() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..9usize);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.3) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            // Component-wise: every component has |E| = |V|-1 and max degree <= 2.
            let mut uf = UnionFind::new(n);
            for &(u, v) in g.edges() {
                uf.union(u as usize, v as usize);
            }
            let mut comp_v = std::collections::HashMap::new();
            let mut comp_e = std::collections::HashMap::new();
            for v in 0..n {
                *comp_v.entry(uf.find(v)).or_insert(0usize) += 1;
            }
            for &(u, _) in g.edges() {
                *comp_e.entry(uf.find(u as usize)).or_insert(0usize) += 1;
            }
            let expected = (0..n as u32).all(|v| g.degree(v) <= 2)
                && comp_v
                    .iter()
                    .all(|(c, &nv)| comp_e.get(c).copied().unwrap_or(0) == nv - 1);
            assert_eq!(is_linear_forest(&g), expected);
        }
    }

    #[test]
    fn relabeling_invariance() {
        use rand::rngs::StdRng;
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..8usize);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rng);
            let relabeled: Vec<_> = edges
                .iter()
                .map(|&(u, v)| (perm[u as usize], perm[v as usize]))
                .collect();
            let h = Graph::new(n, &relabeled).unwrap();
            assert_eq!(is_linear_forest(&g), is_linear_forest(&h));
        }
    }
}
