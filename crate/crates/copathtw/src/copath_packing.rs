//! Dynamic program for weighted Co-Path Packing over a nice tree or path
//! decomposition: find a maximum-weight vertex set whose induced subgraph
//! is a linear forest.
//!
//! Bag vertices carry one of four labels: deleted, or kept with solution
//! degree 0, 1, or 2. Kept vertices pay their weight when introduced;
//! joins subtract the doubly counted kept bag weight. Edges between kept
//! vertices enter forcibly when an endpoint is forgotten.

use std::collections::BTreeMap;

use crate::decomposition::{EdgeSchedule, NiceTreeDecomposition, NodeKind};
use crate::dp::{
    check_inputs, dedup_entries, key_insert, key_label, key_remove, key_with_label,
    labels_from_key, reconstruct, shrink, state_ground, state_r1, BackRef, Entry, EntryRef,
    Matching, SolveError, SolveOptions, SolveStats, StateKey, StateTable, LABEL_DELETED,
};
use crate::exec::Executor;
use crate::graph::{EdgeId, Graph, VertexId};

/// Optimal kept vertex set and the table shape observed while solving.
#[derive(Debug, Clone)]
pub struct PackingSolution {
    pub weight: u64,
    pub kept_vertices: Vec<VertexId>,
    pub stats: SolveStats,
}

/// Solves weighted Co-Path Packing exactly. The decomposition must be nice
/// and valid for `g` (as produced by `nicify`).
pub fn solve_packing(
    g: &Graph,
    nice: &NiceTreeDecomposition,
    schedule: &EdgeSchedule,
    opts: &SolveOptions,
) -> Result<PackingSolution, SolveError> {
    let (tables, stats) = run_dp(g, nice, schedule, opts)?;
    let weight = tables[nice.root()]
        .get(&0)
        .and_then(|entries| entries.first())
        .map(|e| e.weight)
        .ok_or_else(|| SolveError::Internal("empty root table".into()))?;
    let (_, kept_vertices) = reconstruct(&tables, nice);
    Ok(PackingSolution {
        weight,
        kept_vertices,
        stats,
    })
}

/// Decision form: can at most `k` vertices be deleted so the rest induces
/// a linear forest? Judged at unit weights.
pub fn decide_packing(
    g: &Graph,
    k: usize,
    nice: &NiceTreeDecomposition,
    schedule: &EdgeSchedule,
    opts: &SolveOptions,
) -> Result<(bool, Vec<VertexId>), SolveError> {
    let unit = g.with_unit_weights();
    let sol = solve_packing(&unit, nice, schedule, opts)?;
    let deleted: Vec<VertexId> = (0..g.vertex_count() as VertexId)
        .filter(|v| sol.kept_vertices.binary_search(v).is_err())
        .collect();
    let yes = g.vertex_count() as u64 - sol.weight <= k as u64;
    Ok((yes, deleted))
}

pub(crate) fn run_dp(
    g: &Graph,
    nice: &NiceTreeDecomposition,
    schedule: &EdgeSchedule,
    opts: &SolveOptions,
) -> Result<(Vec<StateTable>, SolveStats), SolveError> {
    check_inputs(g, nice, schedule)?;
    let exec = Executor::new(opts.threads);
    let mut tables: Vec<StateTable> = vec![StateTable::new(); nice.node_count()];
    let mut stats = SolveStats {
        width: nice.width(),
        per_node_entries: vec![0; nice.node_count()],
        per_node_max_state: vec![0; nice.node_count()],
        ..Default::default()
    };
    for id in nice.post_order() {
        let node = nice.node(id);
        let table = match node.kind {
            NodeKind::Leaf => leaf_table(),
            NodeKind::Introduce(v) => {
                introduce_table(g, &tables[node.children[0]], &node.bag, v)?
            }
            NodeKind::Forget(v) => {
                let child = node.children[0];
                let child_bag = &nice.node(child).bag;
                forget_table(
                    g,
                    &tables[child],
                    child_bag,
                    &node.bag,
                    v,
                    schedule.incident(id),
                    &exec,
                    opts,
                )
            }
            NodeKind::Join => join_table(
                g,
                &tables[node.children[0]],
                &tables[node.children[1]],
                &node.bag,
                &exec,
                opts,
            )?,
        };
        stats.record_node(id, &node.bag, &table);
        tables[id] = table;
    }
    Ok((tables, stats))
}

fn leaf_table() -> StateTable {
    let mut table = StateTable::new();
    table.insert(
        0,
        vec![Entry {
            matching: Matching::empty(),
            weight: 0,
            backref: BackRef::Leaf,
        }],
    );
    table
}

/// The introduced vertex is either deleted (entries copy over) or kept
/// with degree 0 (weight grows by its vertex weight and the matching
/// gains it as an isolated ground vertex). Degree labels 1 and 2 are
/// impossible for a vertex with no edges yet.
fn introduce_table(
    g: &Graph,
    child: &StateTable,
    bag: &[VertexId],
    v: VertexId,
) -> Result<StateTable, SolveError> {
    let pos = bag.binary_search(&v).expect("introduced vertex in bag");
    let w_v = g.vertex_weight(v);
    let mut table = StateTable::new();
    for (&ckey, entries) in child {
        let deleted_key = key_insert(ckey, pos, LABEL_DELETED);
        let deleted: Vec<Entry> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| Entry {
                matching: e.matching.clone(),
                weight: e.weight,
                backref: BackRef::Step {
                    child: EntryRef {
                        state: ckey,
                        index: i as u32,
                    },
                    edges: Vec::new(),
                    vertex: None,
                },
            })
            .collect();
        table.insert(deleted_key, deleted);

        let kept_key = key_insert(ckey, pos, 0);
        let mut kept = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            kept.push(Entry {
                matching: e.matching.clone(),
                weight: e.weight.checked_add(w_v).ok_or(SolveError::WeightOverflow)?,
                backref: BackRef::Step {
                    child: EntryRef {
                        state: ckey,
                        index: i as u32,
                    },
                    edges: Vec::new(),
                    vertex: Some(v),
                },
            });
        }
        table.insert(kept_key, kept);
    }
    Ok(table)
}

/// Forgetting a deleted vertex just drops its label. Forgetting a kept
/// vertex forces every scheduled edge towards a kept neighbor into the
/// partial solution, so those neighbors' degrees rise by one and cycles
/// are rejected through the matching.
#[allow(clippy::too_many_arguments)]
fn forget_table(
    g: &Graph,
    child: &StateTable,
    child_bag: &[VertexId],
    bag: &[VertexId],
    v: VertexId,
    incident: &[EdgeId],
    exec: &Executor,
    opts: &SolveOptions,
) -> StateTable {
    let pos = child_bag.binary_search(&v).expect("forgotten vertex in child bag");
    let other_pos: Vec<usize> = incident
        .iter()
        .map(|&e| {
            let (a, b) = g.endpoints(e);
            let w = if a == v { b } else { a };
            child_bag.binary_search(&w).expect("incident endpoint in bag")
        })
        .collect();

    let mut grouped: BTreeMap<StateKey, Vec<StateKey>> = BTreeMap::new();
    for &ckey in child.keys() {
        let dv = key_label(ckey, pos);
        if dv == LABEL_DELETED {
            grouped.entry(key_remove(ckey, pos)).or_default().push(ckey);
            continue;
        }
        // Kept: all edges to kept in-bag neighbors materialize now.
        let kept_nbrs: Vec<usize> = other_pos
            .iter()
            .copied()
            .filter(|&wp| key_label(ckey, wp) != LABEL_DELETED)
            .collect();
        if dv as usize + kept_nbrs.len() > 2 {
            continue;
        }
        if kept_nbrs.iter().any(|&wp| key_label(ckey, wp) >= 2) {
            continue;
        }
        let mut tkey = ckey;
        for &wp in &kept_nbrs {
            tkey = key_with_label(tkey, wp, key_label(tkey, wp) + 1);
        }
        tkey = key_remove(tkey, pos);
        grouped.entry(tkey).or_default().push(ckey);
    }

    let targets: Vec<(StateKey, Vec<StateKey>)> = grouped.into_iter().collect();
    let results = exec.map(targets, |(tkey, sources)| {
        let mut entries = Vec::new();
        for ckey in sources {
            let labels = labels_from_key(ckey, child_bag.len());
            let dv = labels[pos];
            if dv == LABEL_DELETED {
                for (idx, entry) in child[&ckey].iter().enumerate() {
                    entries.push(Entry {
                        matching: entry.matching.clone(),
                        weight: entry.weight,
                        backref: BackRef::Step {
                            child: EntryRef {
                                state: ckey,
                                index: idx as u32,
                            },
                            edges: Vec::new(),
                            vertex: None,
                        },
                    });
                }
                continue;
            }
            let kept_nbrs: Vec<usize> = other_pos
                .iter()
                .copied()
                .filter(|&wp| labels[wp] != LABEL_DELETED)
                .collect();
            for (idx, entry) in child[&ckey].iter().enumerate() {
                let mut matching = entry.matching.clone();
                let mut deg_v = dv;
                let mut feasible = true;
                for &wp in &kept_nbrs {
                    let w = child_bag[wp];
                    match matching.add_path_edge(v, deg_v, w, labels[wp]) {
                        Some(next) => {
                            matching = next;
                            deg_v += 1;
                        }
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if !feasible {
                    continue;
                }
                entries.push(Entry {
                    matching: matching.forget(v),
                    weight: entry.weight,
                    backref: BackRef::Step {
                        child: EntryRef {
                            state: ckey,
                            index: idx as u32,
                        },
                        edges: Vec::new(),
                        vertex: None,
                    },
                });
            }
        }
        let entries = dedup_entries(entries);
        let ground = state_ground(bag, tkey);
        (tkey, shrink(&ground, entries, opts.fault))
    });
    results.into_iter().collect()
}

/// Compatible child states delete exactly the same bag vertices and sum
/// kept degrees to at most 2. Kept bag vertices are counted by both
/// children, so their weight comes off the combined total once.
fn join_table(
    g: &Graph,
    left: &StateTable,
    right: &StateTable,
    bag: &[VertexId],
    exec: &Executor,
    opts: &SolveOptions,
) -> Result<StateTable, SolveError> {
    let len = bag.len();
    let mut grouped: BTreeMap<StateKey, Vec<(StateKey, StateKey)>> = BTreeMap::new();
    for &lk in left.keys() {
        for &rk in right.keys() {
            let mut tkey = 0u64;
            let mut ok = true;
            for posn in 0..len {
                let (a, b) = (key_label(lk, posn), key_label(rk, posn));
                if (a == LABEL_DELETED) != (b == LABEL_DELETED) {
                    ok = false;
                    break;
                }
                let label = if a == LABEL_DELETED {
                    LABEL_DELETED
                } else {
                    let sum = a + b;
                    if sum > 2 {
                        ok = false;
                        break;
                    }
                    sum
                };
                tkey |= (label as u64) << (2 * posn);
            }
            if ok {
                grouped.entry(tkey).or_default().push((lk, rk));
            }
        }
    }
    let targets: Vec<(StateKey, Vec<(StateKey, StateKey)>)> = grouped.into_iter().collect();
    let results = exec.map(targets, |(tkey, pairs)| {
        let kept_bag_weight: u64 = bag
            .iter()
            .enumerate()
            .filter(|&(posn, _)| key_label(tkey, posn) != LABEL_DELETED)
            .map(|(_, &v)| g.vertex_weight(v))
            .sum();
        let mut entries = Vec::new();
        for (lk, rk) in pairs {
            let r1_left = state_r1(bag, lk);
            let r1_right = state_r1(bag, rk);
            for (i, le) in left[&lk].iter().enumerate() {
                for (j, re) in right[&rk].iter().enumerate() {
                    let Some(matching) =
                        Matching::merge(&le.matching, &r1_left, &re.matching, &r1_right)
                    else {
                        continue;
                    };
                    let weight = le
                        .weight
                        .checked_add(re.weight)
                        .ok_or(SolveError::WeightOverflow)?
                        .checked_sub(kept_bag_weight)
                        .ok_or(SolveError::WeightOverflow)?;
                    entries.push(Entry {
                        matching,
                        weight,
                        backref: BackRef::Join {
                            left: EntryRef {
                                state: lk,
                                index: i as u32,
                            },
                            right: EntryRef {
                                state: rk,
                                index: j as u32,
                            },
                        },
                    });
                }
            }
        }
        let entries = dedup_entries(entries);
        let ground = state_ground(bag, tkey);
        Ok((tkey, shrink(&ground, entries, opts.fault)))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{heuristic_decomposition, nicify, parse_td, Strategy};
    use crate::graph::tests_support::{complete, cycle, path, star};
    use crate::graph::{verify_packing_solution, weight_of, WeightKind};
    use crate::oracle::{brute_packing, corpus_instance, random_instance, with_random_weights, InstanceKind};

    fn solve(g: &Graph) -> PackingSolution {
        let td = heuristic_decomposition(g, Strategy::MinFill, 0);
        let (nice, schedule) = nicify(g, &td).unwrap();
        solve_packing(g, &nice, &schedule, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn small_closed_forms() {
        assert_eq!(solve(&complete(4)).weight, 2);
        assert_eq!(solve(&cycle(5)).weight, 4);
        assert_eq!(solve(&star(3)).weight, 3);
        assert_eq!(solve(&cycle(4)).weight, 3);
        assert_eq!(solve(&path(6)).weight, 6);
        assert_eq!(solve(&Graph::new(5, &[]).unwrap()).weight, 5);
        assert_eq!(solve(&Graph::new(0, &[]).unwrap()).weight, 0);
    }

    #[test]
    fn introduce_splits_into_deleted_and_kept() {
        let mut g = Graph::new(3, &[]).unwrap();
        g.set_vertex_weights(vec![4, 9, 1]).unwrap();
        let child = leaf_table();
        let table = introduce_table(&g, &child, &[1], 1).unwrap();
        assert_eq!(table.len(), 2);
        let deleted_key = crate::dp::key_from_labels(&[LABEL_DELETED]);
        let kept_key = crate::dp::key_from_labels(&[0]);
        assert_eq!(table[&deleted_key][0].weight, 0);
        assert_eq!(table[&kept_key][0].weight, 9);
    }

    #[test]
    fn forget_deleted_branch_copies_entries() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let mut child = StateTable::new();
        let key = crate::dp::key_from_labels(&[0, LABEL_DELETED]);
        child.insert(
            key,
            vec![Entry {
                matching: Matching::empty(),
                weight: 7,
                backref: BackRef::Leaf,
            }],
        );
        let exec = Executor::new(1);
        let out = forget_table(
            &g,
            &child,
            &[0, 1],
            &[0],
            1,
            &[0],
            &exec,
            &SolveOptions::default(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[&0][0].weight, 7);
    }

    #[test]
    fn join_shaped_decomposition_matches_oracle() {
        // 2x3 grid with a branching decomposition of pairwise-incomparable
        // bags, so the root becomes a genuine join.
        let g = random_instance(0, 6, InstanceKind::Grid);
        let td = parse_td(
            "s td 3 4 6\nb 1 2 3 4 5\nb 2 1 2 4 5\nb 3 2 3 5 6\n1 2\n1 3\n",
        )
        .unwrap();
        let (nice, schedule) = nicify(&g, &td).unwrap();
        assert!(!crate::decomposition::is_path_shape(&nice));
        let sol = solve_packing(&g, &nice, &schedule, &SolveOptions::default()).unwrap();
        assert_eq!(sol.weight, brute_packing(&g).0);
        assert!(verify_packing_solution(&g, &sol.kept_vertices));
    }

    #[test]
    fn decide_examples() {
        let k4 = complete(4);
        let td = heuristic_decomposition(&k4, Strategy::MinFill, 0);
        let (nice, schedule) = nicify(&k4, &td).unwrap();
        let opts = SolveOptions::default();
        assert!(decide_packing(&k4, 2, &nice, &schedule, &opts).unwrap().0);
        assert!(!decide_packing(&k4, 1, &nice, &schedule, &opts).unwrap().0);

        let p6 = path(6);
        let td = heuristic_decomposition(&p6, Strategy::MinFill, 0);
        let (nice, schedule) = nicify(&p6, &td).unwrap();
        assert!(decide_packing(&p6, 0, &nice, &schedule, &opts).unwrap().0);
    }

    #[test]
    fn matches_oracle_on_random_corpus() {
        for index in 0..60u64 {
            let base = corpus_instance(index, 8);
            for weighted in [false, true] {
                let g = if weighted {
                    with_random_weights(&base, WeightKind::Vertices, index)
                } else {
                    base.clone()
                };
                let (opt, _) = brute_packing(&g);
                let sol = solve(&g);
                assert_eq!(sol.weight, opt, "index={index} weighted={weighted}");
                assert!(verify_packing_solution(&g, &sol.kept_vertices));
                assert_eq!(
                    weight_of(&g, WeightKind::Vertices, &sol.kept_vertices).unwrap(),
                    opt
                );
                assert_eq!(sol.stats.size_invariant_violations, 0);
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        for index in [5u64, 21, 38] {
            let g = with_random_weights(&corpus_instance(index, 8), WeightKind::Vertices, index);
            let td = heuristic_decomposition(&g, Strategy::MinFill, 1);
            let (nice, schedule) = nicify(&g, &td).unwrap();
            let seq = solve_packing(&g, &nice, &schedule, &SolveOptions::with_threads(1)).unwrap();
            let par = solve_packing(&g, &nice, &schedule, &SolveOptions::with_threads(0)).unwrap();
            assert_eq!(seq.weight, par.weight);
            assert_eq!(seq.kept_vertices, par.kept_vertices);
            assert_eq!(seq.stats.per_node_entries, par.stats.per_node_entries);
        }
    }

    /// Same exhaustive per-entry audit as the set solver, over vertex sets:
    /// reconstructed kept vertices reproduce the weight, the labels match
    /// the degrees in the node's graph, and matchings pair exactly the
    /// degree-1 kept bag vertices sharing a path.
    #[test]
    fn entry_audit_on_small_instances() {
        for index in 0..20u64 {
            let base = corpus_instance(index, 8);
            let g = with_random_weights(&base, WeightKind::Vertices, index);
            let td = heuristic_decomposition(&g, Strategy::MinFill, 0);
            let (nice, schedule) = nicify(&g, &td).unwrap();
            let (tables, _) = run_dp(&g, &nice, &schedule, &SolveOptions::default()).unwrap();
            audit_tables(&g, &nice, &schedule, &tables);
        }
    }

    fn audit_tables(
        g: &Graph,
        nice: &NiceTreeDecomposition,
        schedule: &EdgeSchedule,
        tables: &[StateTable],
    ) {
        use std::collections::{BTreeSet, HashMap, HashSet};
        let mut below_edges: Vec<BTreeSet<EdgeId>> = vec![BTreeSet::new(); nice.node_count()];
        let mut below_vertices: Vec<BTreeSet<VertexId>> =
            vec![BTreeSet::new(); nice.node_count()];
        for id in nice.post_order() {
            let node = nice.node(id);
            let mut edges: BTreeSet<EdgeId> = schedule.incident(id).iter().copied().collect();
            let mut vertices: BTreeSet<VertexId> = node.bag.iter().copied().collect();
            for &c in &node.children {
                edges.extend(below_edges[c].iter().copied());
                vertices.extend(below_vertices[c].iter().copied());
            }
            below_edges[id] = edges;
            below_vertices[id] = vertices;
        }
        for id in nice.post_order() {
            let bag = &nice.node(id).bag;
            for (&key, entries) in &tables[id] {
                for (index, entry) in entries.iter().enumerate() {
                    let kept = reconstruct_vertices(tables, nice, id, key, index);
                    assert!(kept.iter().all(|v| below_vertices[id].contains(v)));
                    assert_eq!(
                        weight_of(g, WeightKind::Vertices, &kept).unwrap(),
                        entry.weight
                    );
                    let kept_set: HashSet<VertexId> = kept.iter().copied().collect();
                    // Partial-solution edges: scheduled edges among kept vertices.
                    let solution_edges: Vec<EdgeId> = below_edges[id]
                        .iter()
                        .copied()
                        .filter(|&e| {
                            let (a, b) = g.endpoints(e);
                            kept_set.contains(&a) && kept_set.contains(&b)
                        })
                        .collect();
                    let mut degree: HashMap<VertexId, u8> = HashMap::new();
                    for &e in &solution_edges {
                        let (a, b) = g.endpoints(e);
                        *degree.entry(a).or_insert(0) += 1;
                        *degree.entry(b).or_insert(0) += 1;
                    }
                    for (posn, &v) in bag.iter().enumerate() {
                        let label = crate::dp::key_label(key, posn);
                        if label == LABEL_DELETED {
                            assert!(!kept_set.contains(&v));
                        } else {
                            assert!(kept_set.contains(&v));
                            assert_eq!(degree.get(&v).copied().unwrap_or(0), label);
                        }
                    }
                    // Acyclic with max degree 2.
                    assert!(degree.values().all(|&d| d <= 2));
                    let mut parent: HashMap<VertexId, VertexId> =
                        kept.iter().map(|&v| (v, v)).collect();
                    fn find(parent: &mut HashMap<u32, u32>, v: u32) -> u32 {
                        let p = parent[&v];
                        if p == v {
                            return v;
                        }
                        let root = find(parent, p);
                        parent.insert(v, root);
                        root
                    }
                    for &e in &solution_edges {
                        let (a, b) = g.endpoints(e);
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        assert_ne!(ra, rb, "partial solution contains a cycle");
                        parent.insert(ra, rb);
                    }
                    let ground = state_ground(bag, key);
                    for (gi, &u) in ground.iter().enumerate() {
                        for &v in ground.iter().skip(gi + 1) {
                            let same_path = degree.get(&u).copied().unwrap_or(0) == 1
                                && degree.get(&v).copied().unwrap_or(0) == 1
                                && find(&mut parent, u) == find(&mut parent, v);
                            let paired = entry.matching.partner(u) == Some(v);
                            assert_eq!(same_path, paired);
                        }
                    }
                }
            }
        }
    }

    fn reconstruct_vertices(
        tables: &[StateTable],
        nice: &NiceTreeDecomposition,
        node: usize,
        state: StateKey,
        index: usize,
    ) -> Vec<VertexId> {
        let mut vertices = std::collections::BTreeSet::new();
        let mut stack = vec![(
            node,
            EntryRef {
                state,
                index: index as u32,
            },
        )];
        while let Some((node, eref)) = stack.pop() {
            let entry = &tables[node][&eref.state][eref.index as usize];
            let children = &nice.node(node).children;
            match &entry.backref {
                BackRef::Leaf => {}
                BackRef::Step { child, vertex, .. } => {
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
        vertices.into_iter().collect()
    }
}
