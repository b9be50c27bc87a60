//! Exhaustive simple-cycle enumeration.
//!
//! Each cycle is reported once: it starts at its smallest vertex, only higher
//! vertices are visited, and of the two traversal directions the one leaving
//! towards the smaller neighbour is kept (smaller edge id for 2-cycles).

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::graph::{Cycle, DirectedEdge, Graph, VertexId};

pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

struct Dense {
    ids: Vec<VertexId>,
    // (neighbour index, directed edge leaving this vertex)
    adj: Vec<Vec<(usize, DirectedEdge)>>,
}

impl Dense {
    fn new(g: &Graph) -> Self {
        let ids: Vec<VertexId> = g.vertices().collect();
        let index = |v: VertexId| ids.binary_search(&v).unwrap();
        let mut adj = vec![Vec::new(); ids.len()];
        for (i, &v) in ids.iter().enumerate() {
            for &e in g.incident(v) {
                let edge = g.edge(e).unwrap();
                adj[i].push((index(edge.other(v)), DirectedEdge::leaving(edge, v)));
            }
            adj[i].sort_by_key(|&(j, d)| (j, d.edge));
        }
        Dense { ids, adj }
    }
}

/// Calls `visit` once per simple cycle. Fails once more than `cap` cycles
/// have been produced.
pub fn for_each_simple_cycle<F>(g: &Graph, cap: usize, mut visit: F) -> Result<usize>
where
    F: FnMut(&Cycle) -> ControlFlow<()>,
{
    let d = Dense::new(g);
    let n = d.ids.len();
    let mut count = 0usize;
    let mut on_path = vec![false; n];
    let mut path_v: Vec<usize> = Vec::new();
    let mut path_e: Vec<DirectedEdge> = Vec::new();

    struct Ctx<'a, F> {
        d: &'a Dense,
        cap: usize,
        count: &'a mut usize,
        visit: &'a mut F,
    }

    fn dfs<F: FnMut(&Cycle) -> ControlFlow<()>>(
        cx: &mut Ctx<'_, F>,
        s: usize,
        x: usize,
        on_path: &mut [bool],
        path_v: &mut Vec<usize>,
        path_e: &mut Vec<DirectedEdge>,
    ) -> Result<ControlFlow<()>> {
        for &(y, de) in &cx.d.adj[x] {
            if y == s {
                if path_e.is_empty() {
                    continue;
                }
                let first = path_e[0];
                if de.edge == first.edge {
                    continue;
                }
                let keep = if path_e.len() == 1 {
                    first.edge < de.edge
                } else {
                    path_v[1] < x
                };
                if !keep {
                    continue;
                }
                *cx.count += 1;
                if *cx.count > cx.cap {
                    return Err(Error::CycleCapExceeded { cap: cx.cap });
                }
                let mut edges = path_e.clone();
                edges.push(de);
                let vertices = path_v.iter().map(|&i| cx.d.ids[i]).collect();
                let c = Cycle::from_parts_unchecked(edges, vertices);
                if (cx.visit)(&c).is_break() {
                    return Ok(ControlFlow::Break(()));
                }
            } else if y > s && !on_path[y] {
                on_path[y] = true;
                path_v.push(y);
                path_e.push(de);
                let r = dfs(cx, s, y, on_path, path_v, path_e)?;
                path_v.pop();
                path_e.pop();
                on_path[y] = false;
                if r.is_break() {
                    return Ok(r);
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    let mut cx = Ctx { d: &d, cap, count: &mut count, visit: &mut visit };
    for s in 0..n {
        on_path[s] = true;
        path_v.push(s);
        let r = dfs(&mut cx, s, s, &mut on_path, &mut path_v, &mut path_e)?;
        path_v.pop();
        on_path[s] = false;
        if r.is_break() {
            break;
        }
    }
    Ok(count)
}

pub fn enumerate_simple_cycles(g: &Graph, cap: usize) -> Result<Vec<Cycle>> {
    let mut out = Vec::new();
    for_each_simple_cycle(g, cap, |c| {
        out.push(c.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

pub fn count_simple_cycles(g: &Graph, cap: usize) -> Result<usize> {
    for_each_simple_cycle(g, cap, |_| ControlFlow::Continue(()))
}

/// Simple s-t paths as directed edge sequences, in DFS order.
pub fn for_each_simple_path<F>(g: &Graph, s: VertexId, t: VertexId, mut visit: F)
where
    F: FnMut(&[DirectedEdge]),
{
    let d = Dense::new(g);
    let Ok(si) = d.ids.binary_search(&s) else { return };
    let Ok(ti) = d.ids.binary_search(&t) else { return };
    let mut on_path = vec![false; d.ids.len()];
    let mut path = Vec::new();

    fn go<F: FnMut(&[DirectedEdge])>(
        d: &Dense,
        x: usize,
        t: usize,
        on_path: &mut [bool],
        path: &mut Vec<DirectedEdge>,
        visit: &mut F,
    ) {
        if x == t {
            visit(path);
            return;
        }
        for &(y, de) in &d.adj[x] {
            if !on_path[y] {
                on_path[y] = true;
                path.push(de);
                go(d, y, t, on_path, path, visit);
                path.pop();
                on_path[y] = false;
            }
        }
    }

    on_path[si] = true;
    go(&d, si, ti, &mut on_path, &mut path, &mut visit);
}
