//! Dynamic program for weighted Co-Path Set over a nice tree or path
//! decomposition: find a maximum-weight edge set inducing a linear forest.
//!
//! Each bag partition (R0, R1, R2) classifies bag vertices by their degree
//! in the partial solution below the node; entry lists are shrunk to
//! weighted representative families after every forget and join.

use std::collections::BTreeMap;

use crate::decomposition::{EdgeSchedule, NiceTreeDecomposition, NodeKind};
use crate::dp::{
    check_inputs, dedup_entries, key_insert, key_label, key_remove, key_with_label,
    labels_from_key, reconstruct, shrink, state_ground, state_r1, BackRef, Entry, EntryRef,
    Matching, SolveError, SolveOptions, SolveStats, StateKey, StateTable,
};
use crate::exec::Executor;
use crate::graph::{EdgeId, Graph, VertexId};

/// Optimal kept edge set and the table shape observed while solving.
#[derive(Debug, Clone)]
pub struct SetSolution {
    pub weight: u64,
    pub kept_edges: Vec<EdgeId>,
    pub stats: SolveStats,
}

/// Solves weighted Co-Path Set exactly. The decomposition must be nice and
/// valid for `g` (as produced by `nicify`).
pub fn solve_set(
    g: &Graph,
    nice: &NiceTreeDecomposition,
    schedule: &EdgeSchedule,
    opts: &SolveOptions,
) -> Result<SetSolution, SolveError> {
    let (tables, stats) = run_dp(g, nice, schedule, opts)?;
    let weight = tables[nice.root()]
        .get(&0)
        .and_then(|entries| entries.first())
        .map(|e| e.weight)
        .ok_or_else(|| SolveError::Internal("empty root table".into()))?;
    let (kept_edges, _) = reconstruct(&tables, nice);
    Ok(SetSolution {
        weight,
        kept_edges,
        stats,
    })
}

/// Decision form: can at most `k` edges be deleted so the rest is a linear
/// forest? Always judged at unit weights. Returns the verdict and an
/// optimal deleted set (of size m - opt, whatever the verdict).
pub fn decide_set(
    g: &Graph,
    k: usize,
    nice: &NiceTreeDecomposition,
    schedule: &EdgeSchedule,
    opts: &SolveOptions,
) -> Result<(bool, Vec<EdgeId>), SolveError> {
    let unit = g.with_unit_weights();
    let sol = solve_set(&unit, nice, schedule, opts)?;
    let deleted: Vec<EdgeId> = (0..g.edge_count() as EdgeId)
        .filter(|e| sol.kept_edges.binary_search(e).is_err())
        .collect();
    let yes = g.edge_count() as u64 - sol.weight <= k as u64;
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
                introduce_table(&tables[node.children[0]], &node.bag, v)
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
                )?
            }
            NodeKind::Join => join_table(
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

/// The empty bag holds exactly the empty partial solution.
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

/// The introduced vertex has degree 0 in the node's graph, so it can only
/// be labeled R0; entries carry over with the vertex isolated.
fn introduce_table(child: &StateTable, bag: &[VertexId], v: VertexId) -> StateTable {
    let pos = bag.binary_search(&v).expect("introduced vertex in bag");
    child
        .iter()
        .map(|(&ckey, entries)| {
            let key = key_insert(ckey, pos, 0);
            let copied = entries
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
            (key, copied)
        })
        .collect()
}

/// Forgetting `v` makes its edges to the remaining bag available; every
/// subset D of at most two of them may enter the partial solution. Label
/// arithmetic rejects degree overflows, the matching rejects cycles, and
/// each target state is shrunk afterwards.
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
) -> Result<StateTable, SolveError> {
    let pos = child_bag.binary_search(&v).expect("forgotten vertex in child bag");
    let other_pos: Vec<usize> = incident
        .iter()
        .map(|&e| {
            let (a, b) = g.endpoints(e);
            let w = if a == v { b } else { a };
            child_bag.binary_search(&w).expect("incident endpoint in bag")
        })
        .collect();

    // Candidate subsets of incident edges, by index: empty, singles, pairs.
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..incident.len() {
        subsets.push(vec![i]);
    }
    for i in 0..incident.len() {
        for j in i + 1..incident.len() {
            subsets.push(vec![i, j]);
        }
    }

    let mut grouped: BTreeMap<StateKey, Vec<(StateKey, Vec<usize>)>> = BTreeMap::new();
    for &ckey in child.keys() {
        let dv = key_label(ckey, pos);
        for subset in &subsets {
            if dv as usize + subset.len() > 2 {
                continue;
            }
            if subset.iter().any(|&i| key_label(ckey, other_pos[i]) >= 2) {
                continue;
            }
            let mut tkey = ckey;
            for &i in subset {
                let wp = other_pos[i];
                tkey = key_with_label(tkey, wp, key_label(tkey, wp) + 1);
            }
            tkey = key_remove(tkey, pos);
            grouped.entry(tkey).or_default().push((ckey, subset.clone()));
        }
    }

    let targets: Vec<_> = grouped.into_iter().collect();
    let results = exec.map(targets, |(tkey, sources)| {
        let mut entries = Vec::new();
        for (ckey, subset) in sources {
            let labels = labels_from_key(ckey, child_bag.len());
            let dv = labels[pos];
            for (idx, entry) in child[&ckey].iter().enumerate() {
                let mut matching = entry.matching.clone();
                let mut deg_v = dv;
                let mut weight = entry.weight;
                let mut edge_ids = Vec::with_capacity(subset.len());
                let mut feasible = true;
                for &i in &subset {
                    let e = incident[i];
                    let (a, b) = g.endpoints(e);
                    let w = if a == v { b } else { a };
                    match matching.add_path_edge(v, deg_v, w, labels[other_pos[i]]) {
                        Some(next) => {
                            matching = next;
                            deg_v += 1;
                        }
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                    weight = match weight.checked_add(g.edge_weight(e)) {
                        Some(w) => w,
                        None => return Err(SolveError::WeightOverflow),
                    };
                    edge_ids.push(e);
                }
                if !feasible {
                    continue;
                }
                entries.push(Entry {
                    matching: matching.forget(v),
                    weight,
                    backref: BackRef::Step {
                        child: EntryRef {
                            state: ckey,
                            index: idx as u32,
                        },
                        edges: edge_ids,
                        vertex: None,
                    },
                });
            }
        }
        let entries = dedup_entries(entries);
        let ground = state_ground(bag, tkey);
        Ok((tkey, shrink(&ground, entries, opts.fault)))
    });
    results.into_iter().collect()
}

/// Children of a join see disjoint edge sets, so weights add; states pair
/// up when per-vertex degrees sum to at most 2, and matchings merge with
/// cycle rejection.
fn join_table(
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
                let sum = key_label(lk, posn) + key_label(rk, posn);
                if sum > 2 {
                    ok = false;
                    break;
                }
                tkey |= (sum as u64) << (2 * posn);
            }
            if ok {
                grouped.entry(tkey).or_default().push((lk, rk));
            }
        }
    }
    let targets: Vec<(StateKey, Vec<(StateKey, StateKey)>)> = grouped.into_iter().collect();
    let results = exec.map(targets, |(tkey, pairs)| {
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
