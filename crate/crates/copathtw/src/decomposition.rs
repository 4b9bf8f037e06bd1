//! Tree decompositions: PACE `.td` parsing and writing, validation,
//! min-degree/min-fill elimination heuristics, and conversion to nice
//! (leaf/introduce/forget/join) form with the per-forget edge schedule.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, ParseError, VertexId};

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("decomposition does not fit the graph: {0}")]
    Invalid(String),
    #[error("edge {0}-{1} scheduled {2} times (expected exactly once)")]
    BadSchedule(VertexId, VertexId, usize),
}

/// An unrooted tree decomposition: one bag per node plus tree edges.
#[derive(Debug, Clone)]
pub struct TreeDecomposition {
    bags: Vec<Vec<VertexId>>,
    tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(mut bags: Vec<Vec<VertexId>>, tree_edges: Vec<(usize, usize)>) -> Self {
        for bag in &mut bags {
            bag.sort_unstable();
            bag.dedup();
        }
        TreeDecomposition { bags, tree_edges }
    }

    pub fn bags(&self) -> &[Vec<VertexId>] {
        &self.bags
    }

    pub fn tree_edges(&self) -> &[(usize, usize)] {
        &self.tree_edges
    }

    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    /// Max bag size minus one; an empty decomposition has width 0.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.tree_edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Parses the PACE `.td` format: `s td <#bags> <width+1> <n>`, bag lines
/// `b <id> <vertices...>`, then tree edges `a b` (all 1-indexed).
pub fn parse_td(text: &str) -> Result<TreeDecomposition, ParseError> {
    let syntax = |line: usize, msg: String| ParseError::Syntax { line, msg };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<VertexId>>> = Vec::new();
    let mut tree_edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("s ") {
            if header.is_some() {
                return Err(syntax(lineno, "duplicate 's td' header".into()));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "td" {
                return Err(syntax(
                    lineno,
                    "expected header 's td <#bags> <width+1> <n>'".into(),
                ));
            }
            let nums: Result<Vec<usize>, _> = fields[1..].iter().map(|s| s.parse()).collect();
            let nums = nums.map_err(|_| syntax(lineno, "bad header numbers".into()))?;
            header = Some((nums[0], nums[1], nums[2]));
            bags = vec![None; nums[0]];
            continue;
        }
        let (bag_count, _, n) = header.ok_or_else(|| {
            syntax(lineno, "content before 's td' header".into())
        })?;
        if let Some(rest) = line.strip_prefix("b ") {
            let mut it = rest.split_whitespace();
            let id: usize = it
                .next()
                .ok_or_else(|| syntax(lineno, "bag line without id".into()))?
                .parse()
                .map_err(|_| syntax(lineno, "bad bag id".into()))?;
            if id == 0 || id > bag_count {
                return Err(syntax(lineno, format!("bag id {id} outside 1..={bag_count}")));
            }
            let mut bag = Vec::new();
            for tok in it {
                let v: usize = tok
                    .parse()
                    .map_err(|_| syntax(lineno, format!("bad vertex '{tok}'")))?;
                if v == 0 || v > n {
                    return Err(syntax(lineno, format!("vertex {v} outside 1..={n}")));
                }
                bag.push((v - 1) as VertexId);
            }
            if bags[id - 1].is_some() {
                return Err(syntax(lineno, format!("duplicate bag {id}")));
            }
            bags[id - 1] = Some(bag);
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(syntax(lineno, "expected tree edge 'a b'".into())),
        };
        let parse_node = |s: &str| -> Result<usize, ParseError> {
            let id: usize = s
                .parse()
                .map_err(|_| syntax(lineno, format!("bad node id '{s}'")))?;
            if id == 0 || id > bag_count {
                return Err(syntax(lineno, format!("node id {id} outside 1..={bag_count}")));
            }
            Ok(id - 1)
        };
        tree_edges.push((parse_node(a)?, parse_node(b)?));
    }
    if header.is_none() {
        return Err(syntax(0, "missing 's td' header".into()));
    }
    let bags: Vec<Vec<VertexId>> = bags.into_iter().map(|b| b.unwrap_or_default()).collect();
    Ok(TreeDecomposition::new(bags, tree_edges))
}

/// Writes a decomposition back in `.td` form, e.g. to cache heuristic output.
pub fn write_td(td: &TreeDecomposition, n: usize) -> String {
    let mut out = format!(
        "s td {} {} {}\n",
        td.node_count(),
        td.width() + 1,
        n
    );
    for (i, bag) in td.bags().iter().enumerate() {
        out.push_str(&format!("b {}", i + 1));
        for &v in bag {
            out.push_str(&format!(" {}", v + 1));
        }
        out.push('\n');
    }
    for &(a, b) in td.tree_edges() {
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// T1: vertex appears in no bag.
    MissingVertex(VertexId),
    /// T2: no bag contains both endpoints.
    UncoveredEdge(VertexId, VertexId),
    /// T3: the bags containing this vertex do not form a connected subtree.
    DisconnectedVertex(VertexId),
    /// The node graph is not a tree.
    NotATree(String),
    /// A bag mentions a vertex outside the graph.
    UnknownVertex(VertexId),
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks conditions T1 (all vertices covered), T2 (all edges covered),
/// T3 (per-vertex connectivity), and that the node graph is a tree.
/// Every violation is reported with a witness.
pub fn validate(g: &Graph, td: &TreeDecomposition) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = g.vertex_count();
    let nodes = td.node_count();

    if nodes == 0 {
        report.violations.push(Violation::NotATree("no nodes".into()));
        return report;
    }
    if td.tree_edges().len() != nodes - 1 {
        report.violations.push(Violation::NotATree(format!(
            "{} nodes but {} tree edges",
            nodes,
            td.tree_edges().len()
        )));
    }
    let adj = td.adjacency();
    let mut seen = vec![false; nodes];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(t) = stack.pop() {
        for &u in &adj[t] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        report
            .violations
            .push(Violation::NotATree("node graph is disconnected".into()));
    }
    if !report.is_valid() {
        return report;
    }

    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, bag) in td.bags().iter().enumerate() {
        for &v in bag {
            if (v as usize) < n {
                containing[v as usize].push(t);
            } else {
                report.violations.push(Violation::UnknownVertex(v));
            }
        }
    }
    for v in 0..n as VertexId {
        if containing[v as usize].is_empty() {
            report.violations.push(Violation::MissingVertex(v));
        }
    }
    for &(u, v) in g.edges() {
        let covered = td
            .bags()
            .iter()
            .any(|bag| bag.binary_search(&u).is_ok() && bag.binary_search(&v).is_ok());
        if !covered {
            report.violations.push(Violation::UncoveredEdge(u, v));
        }
    }
    // T3: BFS restricted to bags containing v must reach all of them.
    for (v, occ) in containing.iter().enumerate() {
        if occ.len() <= 1 {
            continue;
        }
        let inside: std::collections::HashSet<usize> = occ.iter().copied().collect();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![occ[0]];
        seen.insert(occ[0]);
        while let Some(t) = stack.pop() {
            for &u in &adj[t] {
                if inside.contains(&u) && seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        if seen.len() != occ.len() {
            report
                .violations
                .push(Violation::DisconnectedVertex(v as VertexId));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    MinDegree,
    MinFill,
}

/// Elimination-ordering heuristic. Produces a valid decomposition whose
/// width is an upper bound on the true treewidth; ties between candidate
/// vertices are broken with the seeded RNG so runs are reproducible.
pub fn heuristic_decomposition(g: &Graph, strategy: Strategy, seed: u64) -> TreeDecomposition {
    let n = g.vertex_count();
    if n == 0 {
        return TreeDecomposition::new(vec![Vec::new()], Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<std::collections::BTreeSet<VertexId>> = (0..n)
        .map(|v| g.neighbors(v as VertexId).iter().copied().collect())
        .collect();
    let mut alive: Vec<bool> = vec![true; n];
    let mut position = vec![0usize; n];
    let mut bags: Vec<Vec<VertexId>> = Vec::with_capacity(n);
    let mut elim_neighbors: Vec<Vec<VertexId>> = Vec::with_capacity(n);

    let fill_cost = |adj: &[std::collections::BTreeSet<VertexId>], v: usize| -> usize {
        let nb: Vec<VertexId> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if !adj[nb[i] as usize].contains(&nb[j]) {
                    missing += 1;
                }
            }
        }
        missing
    };

    for step in 0..n {
        let mut best_score = usize::MAX;
        let mut candidates: Vec<usize> = Vec::new();
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let score = match strategy {
                Strategy::MinDegree => adj[v].len(),
                Strategy::MinFill => fill_cost(&adj, v),
            };
            if score < best_score {
                best_score = score;
                candidates.clear();
                candidates.push(v);
            } else if score == best_score {
                candidates.push(v);
            }
        }
        let v = *candidates.choose(&mut rng).expect("some vertex alive");
        position[v] = step;
        let nb: Vec<VertexId> = adj[v].iter().copied().collect();
        let mut bag = nb.clone();
        bag.push(v as VertexId);
        bag.sort_unstable();
        bags.push(bag);
        elim_neighbors.push(nb.clone());
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                adj[nb[i] as usize].insert(nb[j]);
                adj[nb[j] as usize].insert(nb[i]);
            }
        }
        for &w in &nb {
            adj[w as usize].remove(&(v as VertexId));
        }
        alive[v] = false;
    }

    // Bag i hangs below the bag of the next-eliminated vertex among its
    // elimination neighborhood; isolated eliminations chain forward so the
    // node graph stays a tree.
    let mut tree_edges = Vec::new();
    let mut order: Vec<usize> = vec![0; n];
    for v in 0..n {
        order[position[v]] = v;
    }
    for (step, nb) in elim_neighbors.iter().enumerate() {
        if let Some(next) = nb.iter().map(|&w| position[w as usize]).min() {
            tree_edges.push((step, next));
        } else if step + 1 < n {
            tree_edges.push((step, step + 1));
        }
    }
    TreeDecomposition::new(bags, tree_edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Introduce(VertexId),
    Forget(VertexId),
    Join,
}

#[derive(Debug, Clone)]
pub struct NiceNode {
    pub kind: NodeKind,
    /// Sorted bag after this node's operation.
    pub bag: Vec<VertexId>,
    pub children: Vec<usize>,
}

/// A rooted nice tree decomposition: leaf and root bags are empty, and
/// every inner node is an introduce, forget, or join.
#[derive(Debug, Clone)]
pub struct NiceTreeDecomposition {
    nodes: Vec<NiceNode>,
    root: usize,
}

impl NiceTreeDecomposition {
    pub fn nodes(&self) -> &[NiceNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &NiceNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn width(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.bag.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Children-before-parent order ending at the root.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in &self.nodes[id].children {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Converts back to a plain decomposition (used by tests and for
    /// re-validation of nicified output).
    pub fn to_tree_decomposition(&self) -> TreeDecomposition {
        let bags = self.nodes.iter().map(|n| n.bag.clone()).collect();
        let mut edges = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                edges.push((id, c));
            }
        }
        TreeDecomposition::new(bags, edges)
    }
}

/// True iff the decomposition has no join node, i.e. it is path-shaped.
pub fn is_path_shape(nice: &NiceTreeDecomposition) -> bool {
    nice.nodes().iter().all(|n| n.kind != NodeKind::Join)
}

/// For each forget node, the graph edges between the forgotten vertex and
/// the remaining bag. Every graph edge appears at exactly one forget node.
#[derive(Debug, Clone)]
pub struct EdgeSchedule {
    at_node: Vec<Vec<EdgeId>>,
}

impl EdgeSchedule {
    pub fn incident(&self, node: usize) -> &[EdgeId] {
        &self.at_node[node]
    }
}

struct NiceBuilder {
    nodes: Vec<NiceNode>,
}

impl NiceBuilder {
    fn push(&mut self, kind: NodeKind, bag: Vec<VertexId>, children: Vec<usize>) -> usize {
        self.nodes.push(NiceNode { kind, bag, children });
        self.nodes.len() - 1
    }

    /// Chain from `below` (with bag `from`) up to bag `to`: forgets for
    /// vertices leaving, then introduces for vertices entering.
    fn transition(&mut self, below: usize, from: &[VertexId], to: &[VertexId]) -> usize {
        let mut cur = below;
        let mut bag: Vec<VertexId> = from.to_vec();
        for &v in from.iter().filter(|v| to.binary_search(v).is_err()) {
            bag.retain(|&x| x != v);
            cur = self.push(NodeKind::Forget(v), bag.clone(), vec![cur]);
        }
        for &v in to.iter().filter(|v| from.binary_search(v).is_err()) {
            let pos = bag.binary_search(&v).unwrap_err();
            bag.insert(pos, v);
            cur = self.push(NodeKind::Introduce(v), bag.clone(), vec![cur]);
        }
        cur
    }

    /// Leaf with empty bag, then an introduce chain up to `bag`.
    fn grow_leaf(&mut self, bag: &[VertexId]) -> usize {
        let leaf = self.push(NodeKind::Leaf, Vec::new(), Vec::new());
        self.transition(leaf, &[], bag)
    }
}

/// Contracts tree edges whose two bags are comparable, so no bag contains
/// a neighboring bag. Keeps node count linear before nicification.
fn compress(td: &TreeDecomposition) -> TreeDecomposition {
    let mut bags: Vec<Option<Vec<VertexId>>> = td.bags().iter().cloned().map(Some).collect();
    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); bags.len()];
    for &(a, b) in td.tree_edges() {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let subset = |a: &[VertexId], b: &[VertexId]| a.iter().all(|v| b.binary_search(v).is_ok());
    loop {
        let mut contracted = false;
        'scan: for a in 0..bags.len() {
            if bags[a].is_none() {
                continue;
            }
            for &b in adj[a].clone().iter() {
                let (ba, bb) = (bags[a].as_ref().unwrap(), bags[b].as_ref().unwrap());
                if subset(ba, bb) || subset(bb, ba) {
                    // Merge a into b, keeping the superset bag at b.
                    if subset(bb, ba) {
                        bags[b] = bags[a].clone();
                    }
                    let neighbors: Vec<usize> = adj[a].iter().copied().collect();
                    for x in neighbors {
                        adj[x].remove(&a);
                        if x != b {
                            adj[x].insert(b);
                            adj[b].insert(x);
                        }
                    }
                    adj[a].clear();
                    bags[a] = None;
                    contracted = true;
                    break 'scan;
                }
            }
        }
        if !contracted {
            break;
        }
    }
    let mut remap = HashMap::new();
    let mut new_bags = Vec::new();
    for (i, bag) in bags.iter().enumerate() {
        if let Some(bag) = bag {
            remap.insert(i, new_bags.len());
            new_bags.push(bag.clone());
        }
    }
    let mut new_edges = Vec::new();
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            if i < j {
                new_edges.push((remap[&i], remap[&j]));
            }
        }
    }
    TreeDecomposition::new(new_bags, new_edges)
}

/// Turns a valid tree decomposition into a nice one of the same width with
/// empty root and leaf bags, plus the schedule placing each graph edge at
/// the forget node of its first-forgotten endpoint.
pub fn nicify(
    g: &Graph,
    td: &TreeDecomposition,
) -> Result<(NiceTreeDecomposition, EdgeSchedule), DecompositionError> {
    let report = validate(g, td);
    if !report.is_valid() {
        return Err(DecompositionError::Invalid(format!(
            "{:?}",
            report.violations
        )));
    }
    let td = compress(td);
    let adj = td.adjacency();
    let root = 0usize;

    let mut builder = NiceBuilder { nodes: Vec::new() };
    // Iterative post-order over the compressed tree; each original node
    // resolves to the id of the nice node carrying its bag.
    let mut resolved: Vec<Option<usize>> = vec![None; td.node_count()];
    let mut stack: Vec<(usize, usize, bool)> = vec![(root, usize::MAX, false)];
    while let Some((t, parent, expanded)) = stack.pop() {
        if !expanded {
            stack.push((t, parent, true));
            for &c in &adj[t] {
                if c != parent {
                    stack.push((c, t, false));
                }
            }
            continue;
        }
        let bag = &td.bags()[t];
        let children: Vec<usize> = adj[t].iter().copied().filter(|&c| c != parent).collect();
        let top = if children.is_empty() {
            builder.grow_leaf(bag)
        } else {
            // Bring each child chain up to this bag, then fold joins left-deep.
            let mut tops: Vec<usize> = Vec::new();
            for &c in &children {
                let child_top = resolved[c].expect("child resolved in post-order");
                let from = builder.nodes[child_top].bag.clone();
                tops.push(builder.transition(child_top, &from, bag));
            }
            let mut cur = tops[0];
            for &next in &tops[1..] {
                cur = builder.push(NodeKind::Join, bag.clone(), vec![cur, next]);
            }
            cur
        };
        resolved[t] = Some(top);
    }
    let body_top = resolved[root].unwrap();
    let top_bag = builder.nodes[body_top].bag.clone();
    let nice_root = builder.transition(body_top, &top_bag, &[]);
    let nice = NiceTreeDecomposition {
        nodes: builder.nodes,
        root: nice_root,
    };

    let mut at_node = vec![Vec::new(); nice.node_count()];
    let mut times_scheduled = vec![0usize; g.edge_count()];
    for (id, node) in nice.nodes().iter().enumerate() {
        if let NodeKind::Forget(v) = node.kind {
            for &w in &node.bag {
                if let Some(e) = g.edge_id(v, w) {
                    at_node[id].push(e);
                    times_scheduled[e as usize] += 1;
                }
            }
            at_node[id].sort_unstable();
        }
    }
    for (e, &count) in times_scheduled.iter().enumerate() {
        if count != 1 {
            let (u, v) = g.endpoints(e as EdgeId);
            return Err(DecompositionError::BadSchedule(u, v, count));
        }
    }
    Ok((nice, EdgeSchedule { at_node }))
}
