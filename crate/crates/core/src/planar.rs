//! Planarity testing and combinatorial embeddings.
//!
//! Blocks are embedded with the Demoucron-Malgrange-Pertuiset fragment
//! algorithm. An embedding is a rotation system: for each vertex, the cyclic
//! order of darts leaving it. Faces are traced with
//! `next(d) = succ_{head(d)}(reverse(d))`, so every dart lies on exactly one face.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, EdgeId, EdgeTag, Graph, VertexId};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Embedding {
    rotation: BTreeMap<VertexId, Vec<DirectedEdge>>,
}

pub type Face = Vec<DirectedEdge>;

impl Embedding {
    pub fn rotation(&self, v: VertexId) -> &[DirectedEdge] {
        self.rotation.get(&v).map_or(&[], |r| r.as_slice())
    }

    fn succ(&self, v: VertexId, d: DirectedEdge) -> DirectedEdge {
        let r = &self.rotation[&v];
        let i = r.iter().position(|&x| x == d).expect("dart in rotation");
        r[(i + 1) % r.len()]
    }

    /// Faces as closed dart walks, in a deterministic order.
    pub fn faces(&self, g: &Graph) -> Vec<Face> {
        let mut seen = BTreeSet::new();
        let mut faces = Vec::new();
        for darts in self.rotation.values() {
            for &d0 in darts {
                if seen.contains(&d0) {
                    continue;
                }
                let mut face = Vec::new();
                let mut d = d0;
                loop {
                    seen.insert(d);
                    face.push(d);
                    d = self.succ(d.head(g), d.reverse());
                    if d == d0 {
                        break;
                    }
                }
                faces.push(face);
            }
        }
        faces
    }

    /// Inserts `extra`, parallel to the already embedded `rep`, so that the two
    /// bound a new 2-face. With `after` the new edge is placed on the side of
    /// the face containing `reverse(leaving rep at u)`, otherwise on the other.
    fn insert_parallel(&mut self, g: &Graph, rep: EdgeId, extra: EdgeId, after: bool) {
        let r = g.edge(rep).unwrap();
        let x = g.edge(extra).unwrap();
        let d = DirectedEdge::leaving(r, r.u);
        let dx = DirectedEdge::leaving(x, r.u);
        let ru = self.rotation.get_mut(&r.u).unwrap();
        let i = ru.iter().position(|&y| y == d).unwrap();
        ru.insert(if after { i + 1 } else { i }, dx);
        let rv = self.rotation.get_mut(&r.v).unwrap();
        let j = rv.iter().position(|&y| y == d.reverse()).unwrap();
        rv.insert(if after { j } else { j + 1 }, dx.reverse());
    }
}

/// Euler characteristic check for a connected embedded graph.
pub fn satisfies_euler(g: &Graph, emb: &Embedding) -> bool {
    if g.vertex_count() <= 1 {
        return true;
    }
    let f = emb.faces(g).len() as i64;
    g.vertex_count() as i64 - g.edge_count() as i64 + f == 2
}

/// Biconnected components as edge-induced subgraphs (ids preserved).
/// Isolated vertices come back as single-vertex graphs.
pub fn blocks(g: &Graph) -> Vec<Graph> {
    let ids: Vec<VertexId> = g.vertices().collect();
    let n = ids.len();
    let idx = |v: VertexId| ids.binary_search(&v).unwrap();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut stack: Vec<EdgeId> = Vec::new();
    let mut out: Vec<Vec<EdgeId>> = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        if g.degree(ids[root]) == 0 {
            disc[root] = timer;
            timer += 1;
            out.push(Vec::new());
            continue;
        }
        // iterative DFS: (vertex, parent edge, next incident index)
        let mut frames: Vec<(usize, Option<EdgeId>, usize)> = vec![(root, None, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&(x, pe, next)) = frames.last() {
            let inc = g.incident(ids[x]);
            if next < inc.len() {
                let e = inc[next];
                frames.last_mut().unwrap().2 += 1;
                if Some(e) == pe {
                    continue;
                }
                let y = idx(g.edge(e).unwrap().other(ids[x]));
                if disc[y] == usize::MAX {
                    stack.push(e);
                    disc[y] = timer;
                    low[y] = timer;
                    timer += 1;
                    frames.push((y, Some(e), 0));
                } else if disc[y] < disc[x] {
                    stack.push(e);
                    low[x] = low[x].min(disc[y]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _, _)) = frames.last() {
                    low[p] = low[p].min(low[x]);
                    if low[x] >= disc[p] {
                        let pe = pe.unwrap();
                        let mut comp = Vec::new();
                        while let Some(e) = stack.pop() {
                            comp.push(e);
                            if e == pe {
                                break;
                            }
                        }
                        out.push(comp);
                    }
                }
            }
        }
    }

    let mut isolated = g.vertices().filter(|&v| g.degree(v) == 0);
    out.into_iter()
        .map(|es| {
            let mut b = Graph::new();
            if es.is_empty() {
                b.add_vertex(isolated.next().unwrap());
                return b;
            }
            for &e in &es {
                let edge = g.edge(e).unwrap();
                b.add_vertex(edge.u);
                b.add_vertex(edge.v);
            }
            let mut es = es;
            es.sort();
            for e in es {
                let edge = g.edge(e).unwrap();
                b.add_edge(e, edge.u, edge.v, edge.tag).unwrap();
            }
            b
        })
        .collect()
}

pub fn is_planar(g: &Graph) -> bool {
    blocks(g).iter().all(|b| embed_block(b, |_| false).is_ok())
}

/// Embeds a biconnected multigraph. Parallel edges are added after the
/// underlying simple graph is embedded; `protected` marks faces that must keep
/// the representative edge (a virtual edge when one is present).
pub fn embed_block<P>(g: &Graph, protected: P) -> Result<Embedding>
where
    P: Fn(&[DirectedEdge]) -> bool,
{
    let mut reps: BTreeMap<(VertexId, VertexId), EdgeId> = BTreeMap::new();
    let mut extras: Vec<(EdgeId, EdgeId)> = Vec::new();
    let mut pairs: BTreeMap<(VertexId, VertexId), Vec<EdgeId>> = BTreeMap::new();
    for e in g.edges() {
        let key = (e.u.min(e.v), e.u.max(e.v));
        pairs.entry(key).or_default().push(e.id);
    }
    for (key, mut es) in pairs {
        es.sort_by_key(|&e| (g.edge(e).unwrap().tag != EdgeTag::Virtual, e));
        reps.insert(key, es[0]);
        for &x in &es[1..] {
            extras.push((es[0], x));
        }
    }
    let mut simple = Graph::new();
    for v in g.vertices() {
        simple.add_vertex(v);
    }
    for &e in reps.values() {
        let edge = g.edge(e).unwrap();
        simple.add_edge(e, edge.u, edge.v, edge.tag)?;
    }
    let mut emb = embed_simple_block(&simple)?;
    for (rep, extra) in extras {
        let r = g.edge(rep).unwrap();
        let back = DirectedEdge::leaving(r, r.u).reverse();
        let faces = emb.faces(g);
        let face_of_back = faces.iter().find(|f| f.contains(&back)).unwrap();
        emb.insert_parallel(g, rep, extra, !protected(face_of_back));
    }
    Ok(emb)
}

fn embed_simple_block(g: &Graph) -> Result<Embedding> {
    let ids: Vec<VertexId> = g.vertices().collect();
    let n = ids.len();
    let mut emb = Embedding::default();
    if n <= 2 {
        for &v in &ids {
            let darts = g
                .incident(v)
                .iter()
                .map(|&e| DirectedEdge::leaving(g.edge(e).unwrap(), v))
                .collect();
            emb.rotation.insert(v, darts);
        }
        return Ok(emb);
    }
    let idx = |v: VertexId| ids.binary_search(&v).unwrap();
    let mut adj: Vec<Vec<(usize, EdgeId)>> = vec![Vec::new(); n];
    for e in g.edges() {
        adj[idx(e.u)].push((idx(e.v), e.id));
        adj[idx(e.v)].push((idx(e.u), e.id));
    }
    for a in &mut adj {
        a.sort();
    }
    let edge_between = |a: usize, b: usize| adj[a].iter().find(|x| x.0 == b).unwrap().1;

    // initial cycle through vertex 0 and its first neighbour
    let (x0, e0) = adj[0][0];
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([x0]);
    prev[x0] = x0;
    while let Some(x) = queue.pop_front() {
        for &(y, e) in &adj[x] {
            if e == e0 || prev[y] != usize::MAX {
                continue;
            }
            prev[y] = x;
            queue.push_back(y);
        }
    }
    if prev[0] == usize::MAX {
        return Err(Error::structural("embed_block called on a graph that is not biconnected"));
    }
    let mut cycle = vec![0usize];
    let mut c = prev[0];
    while c != x0 {
        cycle.push(c);
        c = prev[c];
    }
    cycle.push(x0);

    let mut in_h = vec![false; n];
    let mut edge_in_h: BTreeSet<EdgeId> = BTreeSet::new();
    for i in 0..cycle.len() {
        in_h[cycle[i]] = true;
        edge_in_h.insert(edge_between(cycle[i], cycle[(i + 1) % cycle.len()]));
    }
    let mut faces: Vec<Vec<usize>> = vec![cycle.clone(), cycle.iter().rev().copied().collect()];

    while edge_in_h.len() < g.edge_count() {
        // fragments: (attachments, path between first two attachments)
        let mut fragments: Vec<(BTreeSet<usize>, Vec<usize>)> = Vec::new();
        for e in g.edges() {
            let (a, b) = (idx(e.u), idx(e.v));
            if !edge_in_h.contains(&e.id) && in_h[a] && in_h[b] {
                fragments.push(([a, b].into(), vec![a, b]));
            }
        }
        let mut comp_of = vec![usize::MAX; n];
        for s in 0..n {
            if in_h[s] || comp_of[s] != usize::MAX {
                continue;
            }
            let cid = fragments.len();
            let mut members = vec![s];
            comp_of[s] = cid;
            let mut i = 0;
            let mut att = BTreeSet::new();
            while i < members.len() {
                let x = members[i];
                i += 1;
                for &(y, _) in &adj[x] {
                    if in_h[y] {
                        att.insert(y);
                    } else if comp_of[y] == usize::MAX {
                        comp_of[y] = cid;
                        members.push(y);
                    }
                }
            }
            let mut it = att.iter();
            let a = *it.next().ok_or_else(|| Error::structural("detached fragment"))?;
            let b = *it
                .next()
                .ok_or_else(|| Error::structural("fragment with a single attachment"))?;
            // BFS inside the component from a's neighbours to a neighbour of b
            let mut par = BTreeMap::new();
            let mut q = VecDeque::new();
            for &(y, _) in &adj[a] {
                if comp_of[y] == cid && !par.contains_key(&y) {
                    par.insert(y, a);
                    q.push_back(y);
                }
            }
            let mut end = None;
            while let Some(x) = q.pop_front() {
                if adj[x].iter().any(|&(y, _)| y == b) {
                    end = Some(x);
                    break;
                }
                for &(y, _) in &adj[x] {
                    if comp_of[y] == cid && !in_h[y] && !par.contains_key(&y) {
                        par.insert(y, x);
                        q.push_back(y);
                    }
                }
            }
            let mut path = vec![b];
            let mut x = end.ok_or_else(|| Error::structural("no path through fragment"))?;
            while x != a {
                path.push(x);
                x = par[&x];
            }
            path.push(a);
            path.reverse();
            fragments.push((att, path));
        }

        let mut choice: Option<(usize, usize)> = None;
        let mut fallback: Option<(usize, usize)> = None;
        for (fi, (att, _)) in fragments.iter().enumerate() {
            let admissible: Vec<usize> = (0..faces.len())
                .filter(|&f| att.iter().all(|a| faces[f].contains(a)))
                .collect();
            match admissible.len() {
                0 => return Err(Error::NonPlanar),
                1 => {
                    choice = Some((fi, admissible[0]));
                    break;
                }
                _ => {
                    if fallback.is_none() {
                        fallback = Some((fi, admissible[0]));
                    }
                }
            }
        }
        let (fi, f) = choice.or(fallback).expect("at least one fragment");
        let path = fragments[fi].1.clone();
        let (a, b) = (path[0], *path.last().unwrap());
        let face = faces.swap_remove(f);
        let k = face.len();
        let ia = face.iter().position(|&v| v == a).unwrap();
        let ib = face.iter().position(|&v| v == b).unwrap();
        let inner = &path[1..path.len() - 1];
        let mut f1 = Vec::new();
        let mut i = ia;
        loop {
            f1.push(face[i]);
            if i == ib {
                break;
            }
            i = (i + 1) % k;
        }
        f1.extend(inner.iter().rev());
        let mut f2 = Vec::new();
        let mut i = ib;
        loop {
            f2.push(face[i]);
            if i == ia {
                break;
            }
            i = (i + 1) % k;
        }
        f2.extend(inner.iter());
        faces.push(f1);
        faces.push(f2);
        for w in path.windows(2) {
            edge_in_h.insert(edge_between(w[0], w[1]));
        }
        for &v in inner {
            in_h[v] = true;
        }
    }

    // rotation from faces: succ_y(y->x) = (y->z) for consecutive x, y, z
    let dart = |a: usize, b: usize| {
        let e = edge_between(a, b);
        DirectedEdge::leaving(g.edge(e).unwrap(), ids[a])
    };
    let mut succ: BTreeMap<DirectedEdge, DirectedEdge> = BTreeMap::new();
    for face in &faces {
        let k = face.len();
        for i in 0..k {
            let (x, y, z) = (face[(i + k - 1) % k], face[i], face[(i + 1) % k]);
            succ.insert(dart(y, x), dart(y, z));
        }
    }
    for (i, &v) in ids.iter().enumerate() {
        let start = dart(i, adj[i][0].0);
        let mut order = vec![start];
        let mut d = succ[&start];
        while d != start {
            order.push(d);
            d = succ[&d];
        }
        if order.len() != adj[i].len() {
            return Err(Error::structural("faces do not induce a rotation system"));
        }
        emb.rotation.insert(v, order);
    }
    Ok(emb)
}
