//! Normalization of a component tree so that
//! (1) separating sets inside a node are pairwise disjoint,
//! (2) no node carries the same separating set on two tree edges, and
//! (3) every virtual triangle of a planar node bounds a face.
//!
//! Shared separating sets are replaced by the multi-star gadget, shared
//! vertices by the star gadget. Each step records, for every edge of the
//! previous graph, the walk that replaces it; these compose into one map
//! from the input graph to the normalized one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::decompose::{ComponentNode, ComponentTree, NodeKind, TreeEdge};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, EdgeId, EdgeTag, Graph, VertexId, WeightAssignment};
use crate::planar::is_planar;
use crate::treedec::{star_gadget_decomposition, BagOrigin};

const MAX_ROUNDS: usize = 64;

/// For each edge of an earlier graph, the walk replacing it in a later graph,
/// plus vertex provenance in both directions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetMap {
    pub paths: BTreeMap<EdgeId, Vec<DirectedEdge>>,
    /// Later vertex to the earlier vertex it stands for.
    pub provenance: BTreeMap<VertexId, VertexId>,
    /// Earlier vertex to the later vertex at which its walks start and end.
    pub home: BTreeMap<VertexId, VertexId>,
}

impl GadgetMap {
    pub fn identity(g: &Graph) -> Self {
        GadgetMap {
            paths: g.edges().map(|e| (e.id, vec![DirectedEdge::forward(e.id)])).collect(),
            provenance: g.vertices().map(|v| (v, v)).collect(),
            home: g.vertices().map(|v| (v, v)).collect(),
        }
    }

    /// `self` maps A to B, `step` maps B to C; the result maps A to C.
    /// Edges and vertices missing from `step` are carried over unchanged.
    pub fn compose(&self, step: &GadgetMap) -> GadgetMap {
        let paths = self
            .paths
            .iter()
            .map(|(&e, walk)| {
                let mut out = Vec::new();
                for &d in walk {
                    match step.paths.get(&d.edge) {
                        Some(sub) if d.forward => out.extend(sub.iter().copied()),
                        Some(sub) => out.extend(sub.iter().rev().map(|x| x.reverse())),
                        None => out.push(d),
                    }
                }
                (e, out)
            })
            .collect();
        let mut provenance = BTreeMap::new();
        for (&c, &b) in &step.provenance {
            provenance.insert(c, *self.provenance.get(&b).unwrap_or(&b));
        }
        for (&b, &a) in &self.provenance {
            provenance.entry(b).or_insert(a);
        }
        let home = self
            .home
            .iter()
            .map(|(&a, &b)| (a, *step.home.get(&b).unwrap_or(&b)))
            .collect();
        GadgetMap { paths, provenance, home }
    }

    /// Checks that each walk runs through `later` from the home of the
    /// edge's tail to the home of its head.
    pub fn validate(&self, earlier: &Graph, later: &Graph) -> Result<()> {
        for e in earlier.edges() {
            let walk = self
                .paths
                .get(&e.id)
                .ok_or_else(|| Error::structural(format!("gadget map lacks edge {}", e.id)))?;
            let mut at = self.home[&e.u];
            for d in walk {
                if !later.has_edge(d.edge) || d.tail(later) != at {
                    return Err(Error::structural(format!("walk of edge {} is broken", e.id)));
                }
                at = d.head(later);
            }
            if at != self.home[&e.v] {
                return Err(Error::structural(format!("walk of edge {} ends at {at}", e.id)));
            }
        }
        for (&e, walk) in &self.paths {
            if !walk.contains(&DirectedEdge::forward(e)) {
                return Err(Error::structural(format!("walk of edge {e} does not use the edge itself")));
            }
        }
        Ok(())
    }
}

/// `w1(e) = sum of w2 over the walk replacing e`.
pub fn pull_circulation_through_gadget(w2: &WeightAssignment, m: &GadgetMap) -> Result<WeightAssignment> {
    let mut w1 = WeightAssignment::new();
    for (&e, walk) in &m.paths {
        let mut s = BigInt::zero();
        for &d in walk {
            s += w2.weight(d)?;
        }
        w1.set(e, s);
    }
    Ok(w1)
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub tree: ComponentTree,
    pub map: GadgetMap,
}

struct Fresh {
    v: u32,
    e: u32,
}

impl Fresh {
    fn of(t: &ComponentTree) -> Self {
        Fresh { v: t.next_vertex_id().0, e: t.next_edge_id().0 }
    }
    fn vertex(&mut self) -> VertexId {
        self.v += 1;
        VertexId(self.v - 1)
    }
    fn edge(&mut self) -> EdgeId {
        self.e += 1;
        EdgeId(self.e - 1)
    }
}

fn ensure_clique(g: &mut Graph, s: &BTreeSet<VertexId>, fresh: &mut Fresh) {
    for &u in s {
        for &v in s {
            if u < v && g.find_edge(u, v, EdgeTag::Virtual).is_none() {
                g.add_edge(fresh.edge(), u, v, EdgeTag::Virtual).expect("clique edge");
            }
        }
    }
}

/// Groups of tree edges with identical separators that are connected
/// through shared nodes.
fn label_groups(t: &ComponentTree) -> Vec<Vec<usize>> {
    let mut by_label: BTreeMap<&BTreeSet<VertexId>, Vec<usize>> = BTreeMap::new();
    for (i, e) in t.edges.iter().enumerate() {
        by_label.entry(&e.separator).or_default().push(i);
    }
    let mut groups = Vec::new();
    for (_, idxs) in by_label {
        let mut left: BTreeSet<usize> = idxs.into_iter().collect();
        while let Some(&first) = left.iter().next() {
            left.remove(&first);
            let mut group = vec![first];
            let mut nodes: BTreeSet<usize> = [t.edges[first].a, t.edges[first].b].into();
            loop {
                let next = left
                    .iter()
                    .copied()
                    .find(|&i| nodes.contains(&t.edges[i].a) || nodes.contains(&t.edges[i].b));
                let Some(i) = next else { break };
                left.remove(&i);
                group.push(i);
                nodes.insert(t.edges[i].a);
                nodes.insert(t.edges[i].b);
            }
            group.sort();
            groups.push(group);
        }
    }
    groups.sort();
    groups
}

/// Nodes reachable from `start` without using the edges in `cut`.
fn branch(t: &ComponentTree, start: usize, cut: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut q = VecDeque::from([start]);
    while let Some(x) = q.pop_front() {
        for (y, ei) in t.neighbors(x) {
            if !cut.contains(&ei) && seen.insert(y) {
                q.push_back(y);
            }
        }
    }
    seen
}

fn rename_decomposition(node: &mut ComponentNode, f: &dyn Fn(VertexId) -> VertexId) {
    if let Some(td) = &mut node.decomposition {
        for b in &mut td.bags {
            b.vertices = b.vertices.iter().map(|&v| f(v)).collect();
        }
    }
}

/// Replaces every separating set shared by three or more nodes with the
/// multi-star gadget. Returns the new tree and the step map.
pub fn dedupe_separating_sets(t: &ComponentTree) -> Result<(ComponentTree, GadgetMap)> {
    let mut t = t.clone();
    let mut fresh = Fresh::of(&t);
    let mut step = GadgetMap::default();
    loop {
        let Some(group) = label_groups(&t).into_iter().find(|g| g.len() >= 2) else { break };
        // one map per group; a later group may rename edges an earlier one did
        let mut gm = GadgetMap::default();
        let s = t.edges[group[0]].separator.clone();
        let xs: Vec<VertexId> = s.iter().copied().collect();
        let cut: BTreeSet<usize> = group.iter().copied().collect();
        let mut members: BTreeSet<usize> = BTreeSet::new();
        for &i in &group {
            members.insert(t.edges[i].a);
            members.insert(t.edges[i].b);
        }
        let members: Vec<usize> = members.into_iter().collect();
        let beta_index = t.nodes.len();

        let mut beta = Graph::new();
        for &x in &xs {
            beta.add_vertex(x);
        }
        let mut leaves: Vec<Vec<VertexId>> = Vec::new();
        let mut new_edges: Vec<TreeEdge> = Vec::new();
        let mut moved: Vec<(EdgeId, VertexId, VertexId)> = Vec::new();
        for &d in &members {
            let copies: Vec<VertexId> = xs.iter().map(|_| fresh.vertex()).collect();
            let rename: BTreeMap<VertexId, VertexId> = xs.iter().copied().zip(copies.iter().copied()).collect();
            for (&x, &c) in &rename {
                gm.provenance.insert(c, x);
            }
            let f = |v: VertexId| *rename.get(&v).unwrap_or(&v);
            let part = branch(&t, d, &cut);
            for &m in &part {
                let old = t.nodes[m].graph.clone();
                let mut g = Graph::new();
                for v in old.vertices() {
                    g.add_vertex(f(v));
                }
                for e in old.edges() {
                    let inside = s.contains(&e.u) && s.contains(&e.v);
                    if inside && e.is_real() && m == d {
                        moved.push((e.id, e.u, e.v));
                        continue;
                    }
                    g.add_edge(e.id, f(e.u), f(e.v), e.tag).expect("renamed edge");
                    if e.is_real() && (rename.contains_key(&e.u) || rename.contains_key(&e.v)) {
                        gm.paths.insert(e.id, Vec::new());
                    }
                }
                t.nodes[m].graph = g;
                rename_decomposition(&mut t.nodes[m], &f);
            }
            for (ei, e) in t.edges.iter_mut().enumerate() {
                if !cut.contains(&ei) && part.contains(&e.a) {
                    e.separator = e.separator.iter().map(|&v| f(v)).collect();
                }
            }
            let leaf_set: BTreeSet<VertexId> = copies.iter().copied().collect();
            ensure_clique(&mut t.nodes[d].graph, &leaf_set, &mut fresh);
            for (&x, &c) in xs.iter().zip(&copies) {
                beta.add_vertex(c);
                beta.add_edge(fresh.edge(), x, c, EdgeTag::Real)?;
            }
            ensure_clique(&mut beta, &leaf_set, &mut fresh);
            new_edges.push(TreeEdge { a: beta_index, b: d, sep_index: 0, separator: leaf_set });
            leaves.push(copies);
        }
        ensure_clique(&mut beta, &s, &mut fresh);
        for &(id, u, v) in &moved {
            beta.add_edge(id, u, v, EdgeTag::Real)?;
        }

        // walks for renamed real edges: through the star edge at each renamed end
        let star_of: BTreeMap<VertexId, (EdgeId, VertexId)> = beta
            .real_edges()
            .filter(|e| s.contains(&e.u) && !s.contains(&e.v))
            .map(|e| (e.v, (e.id, e.u)))
            .collect();
        let pending: Vec<EdgeId> = gm
            .paths
            .iter()
            .filter(|(_, w)| w.is_empty())
            .map(|(&e, _)| e)
            .collect();
        for e in pending {
            let owner = t.nodes.iter().find(|n| n.graph.has_edge(e)).unwrap();
            let edge = *owner.graph.edge(e).unwrap();
            let mut walk = Vec::new();
            if let Some(&(star, _)) = star_of.get(&edge.u) {
                walk.push(DirectedEdge::forward(star));
            }
            walk.push(DirectedEdge::forward(e));
            if let Some(&(star, _)) = star_of.get(&edge.v) {
                walk.push(DirectedEdge::backward(star));
            }
            gm.paths.insert(e, walk);
        }

        let mut node = ComponentNode::new(beta, NodeKind::CType);
        let mut td = star_gadget_decomposition(&xs, &leaves);
        for b in &mut td.bags {
            b.origin = BagOrigin::Plain;
        }
        node.width = Some(td.width());
        node.decomposition = Some(td);
        t.nodes.push(node);
        let mut remaining: Vec<TreeEdge> = t
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !cut.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        remaining.extend(new_edges);
        t.edges = remaining;
        t.reindex();
        let mut merged = step.compose(&gm);
        for (e, walk) in gm.paths {
            merged.paths.entry(e).or_insert(walk);
        }
        step = merged;
    }
    Ok((t, step))
}

/// Splits every vertex that lies in two or more separating sets of one node
/// into a star: one leaf per tree edge whose separator contains it, and a
/// centre per node holding several such edges.
pub fn split_shared_vertices(t: &ComponentTree) -> Result<(ComponentTree, GadgetMap)> {
    let mut fresh = Fresh::of(t);
    let mut step = GadgetMap::default();

    // tree edges of each node whose separator contains x
    let x_edges = |d: usize, x: VertexId| -> Vec<usize> {
        t.neighbors(d)
            .into_iter()
            .map(|(_, ei)| ei)
            .filter(|&ei| t.edges[ei].separator.contains(&x))
            .collect::<BTreeSet<usize>>()
            .into_iter()
            .collect()
    };
    let mut split: BTreeSet<VertexId> = BTreeSet::new();
    for d in 0..t.nodes.len() {
        for x in t.nodes[d].graph.vertices() {
            if x_edges(d, x).len() >= 2 {
                split.insert(x);
            }
        }
    }
    if split.is_empty() {
        return Ok((t.clone(), step));
    }

    let mut leaf: BTreeMap<(VertexId, usize), VertexId> = BTreeMap::new();
    let mut center: BTreeMap<(VertexId, usize), VertexId> = BTreeMap::new();
    for &x in &split {
        for (ei, e) in t.edges.iter().enumerate() {
            if e.separator.contains(&x) {
                let c = fresh.vertex();
                leaf.insert((x, ei), c);
                step.provenance.insert(c, x);
            }
        }
        let mut first = true;
        for d in 0..t.nodes.len() {
            if t.nodes[d].graph.has_vertex(x) && x_edges(d, x).len() >= 2 {
                let c = if first { x } else { fresh.vertex() };
                first = false;
                center.insert((x, d), c);
                step.provenance.insert(c, x);
            }
        }
    }
    let version = |d: usize, x: VertexId, y: Option<VertexId>| -> VertexId {
        if !split.contains(&x) {
            return x;
        }
        let es = x_edges(d, x);
        match es.len() {
            0 => x,
            1 => leaf[&(x, es[0])],
            _ => {
                if let Some(y) = y {
                    if let Some(&ei) = es.iter().find(|&&ei| t.edges[ei].separator.contains(&y)) {
                        return leaf[&(x, ei)];
                    }
                }
                center[&(x, d)]
            }
        }
    };

    let mut out = t.clone();
    let mut star_edges: BTreeMap<VertexId, Vec<(VertexId, EdgeId)>> = BTreeMap::new();
    let mut moved: BTreeMap<EdgeId, (VertexId, VertexId, VertexId, VertexId)> = BTreeMap::new();
    for d in 0..t.nodes.len() {
        let old = &t.nodes[d].graph;
        let mut g = Graph::new();
        for x in old.vertices() {
            if split.contains(&x) {
                let es = x_edges(d, x);
                if es.len() >= 2 {
                    g.add_vertex(center[&(x, d)]);
                }
                for ei in es {
                    g.add_vertex(leaf[&(x, ei)]);
                }
            } else {
                g.add_vertex(x);
            }
        }
        for e in old.edges() {
            let (u2, v2) = (version(d, e.u, Some(e.v)), version(d, e.v, Some(e.u)));
            if e.tag == EdgeTag::Virtual && g.find_edge(u2, v2, EdgeTag::Virtual).is_some() {
                continue;
            }
            g.add_edge(e.id, u2, v2, e.tag)?;
            if e.is_real() && (u2 != e.u || v2 != e.v) {
                moved.insert(e.id, (e.u, e.v, u2, v2));
            }
        }
        for &x in &split {
            if let Some(&c) = center.get(&(x, d)) {
                for ei in x_edges(d, x) {
                    let l = leaf[&(x, ei)];
                    let id = fresh.edge();
                    g.add_edge(id, c, l, EdgeTag::Real)?;
                    star_edges.entry(c).or_default().push((l, id));
                    star_edges.entry(l).or_default().push((c, id));
                }
            }
        }
        let node = &mut out.nodes[d];
        node.graph = g;
        let has_center = split.iter().any(|&x| center.contains_key(&(x, d)));
        if has_center {
            node.decomposition = None;
            if node.kind == NodeKind::CType {
                node.width = None;
            }
        } else {
            let map: BTreeMap<VertexId, VertexId> = node
                .graph
                .vertices()
                .filter_map(|nv| step.provenance.get(&nv).map(|&x| (x, nv)))
                .collect();
            rename_decomposition(node, &|v| *map.get(&v).unwrap_or(&v));
        }
    }
    for (ei, e) in out.edges.iter_mut().enumerate() {
        e.separator = e
            .separator
            .iter()
            .map(|&x| if split.contains(&x) { leaf[&(x, ei)] } else { x })
            .collect();
    }
    for e in out.edges.clone() {
        ensure_clique(&mut out.nodes[e.a].graph, &e.separator, &mut fresh);
        ensure_clique(&mut out.nodes[e.b].graph, &e.separator, &mut fresh);
    }
    out.reindex();

    // star path between two copies of the same vertex
    let star_path = |from: VertexId, to: VertexId| -> Vec<DirectedEdge> {
        if from == to {
            return Vec::new();
        }
        let mut prev: BTreeMap<VertexId, (VertexId, EdgeId)> = BTreeMap::new();
        let mut q = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(x) = q.pop_front() {
            if x == to {
                break;
            }
            for &(y, e) in star_edges.get(&x).map(|v| v.as_slice()).unwrap_or(&[]) {
                if seen.insert(y) {
                    prev.insert(y, (x, e));
                    q.push_back(y);
                }
            }
        }
        let mut walk = Vec::new();
        let mut x = to;
        while x != from {
            let (p, e) = prev[&x];
            walk.push((p, e));
            x = p;
        }
        walk.reverse();
        walk.into_iter()
            .map(|(p, e)| {
                let edge = out.nodes.iter().find_map(|n| n.graph.edge(e)).unwrap();
                DirectedEdge::leaving(edge, p)
            })
            .collect()
    };
    for (&id, &(u, v, u2, v2)) in &moved {
        let hu = if split.contains(&u) { u } else { u2 };
        let hv = if split.contains(&v) { v } else { v2 };
        let mut walk = star_path(hu, u2);
        walk.push(DirectedEdge::forward(id));
        walk.extend(star_path(v2, hv));
        step.paths.insert(id, walk);
    }
    Ok((out, step))
}

/// Splits planar nodes at virtual triangles that separate the node.
/// Returns whether anything changed.
pub fn enforce_facial_virtual_triangles(t: &ComponentTree) -> Result<(ComponentTree, bool)> {
    let mut t = t.clone();
    let mut fresh = Fresh::of(&t);
    for d in 0..t.nodes.len() {
        if t.nodes[d].kind != NodeKind::PType {
            continue;
        }
        let sets = t.nodes[d].separating_sets.clone();
        for s in sets.iter().filter(|s| s.len() == 3) {
            let g = &t.nodes[d].graph;
            let comps = g.components_without(s);
            if comps.len() < 2 {
                continue;
            }
            let mut v1: BTreeSet<VertexId> = comps[0].clone();
            v1.extend(s.iter().copied());
            let mut g1 = Graph::new();
            let mut g2 = Graph::new();
            for v in g.vertices() {
                if v1.contains(&v) {
                    g1.add_vertex(v);
                }
                if !v1.contains(&v) || s.contains(&v) {
                    g2.add_vertex(v);
                }
            }
            for e in g.edges() {
                if v1.contains(&e.u) && v1.contains(&e.v) {
                    g1.add_edge(e.id, e.u, e.v, e.tag)?;
                } else {
                    g2.add_edge(e.id, e.u, e.v, e.tag)?;
                }
            }
            ensure_clique(&mut g1, s, &mut fresh);
            ensure_clique(&mut g2, s, &mut fresh);
            let q = t.nodes.len();
            for e in &mut t.edges {
                for end in [&mut e.a, &mut e.b] {
                    if *end == d && !e.separator.is_subset(g1.vertex_set()) {
                        *end = q;
                    }
                }
            }
            t.nodes[d].graph = g1;
            t.nodes.push(ComponentNode::new(g2, NodeKind::PType));
            t.edges.push(TreeEdge { a: d, b: q, sep_index: 0, separator: s.clone() });
            t.reindex();
            return Ok((t, true));
        }
    }
    Ok((t, false))
}

/// Verifies the three normalization properties.
pub fn check_properties(t: &ComponentTree) -> Result<()> {
    for (d, node) in t.nodes.iter().enumerate() {
        let sets = &node.separating_sets;
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if !sets[i].is_disjoint(&sets[j]) {
                    return Err(Error::structural(format!(
                        "node {d}: separating sets {:?} and {:?} share a vertex",
                        sets[i], sets[j]
                    )));
                }
            }
        }
        let labels: Vec<&BTreeSet<VertexId>> = t
            .neighbors(d)
            .iter()
            .map(|&(_, ei)| &t.edges[ei].separator)
            .collect();
        let distinct: BTreeSet<_> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::structural(format!(
                "node {d}: a separating set is shared by more than two nodes"
            )));
        }
        if node.kind == NodeKind::PType {
            if !is_planar(&node.graph) {
                return Err(Error::structural(format!("p-type node {d} is not planar")));
            }
            for s in sets.iter().filter(|s| s.len() == 3) {
                if node.graph.components_without(s).len() >= 2 {
                    return Err(Error::structural(format!(
                        "node {d}: virtual triangle {:?} is not a face",
                        s.iter().map(|v| v.0).collect::<Vec<_>>()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Runs the gadget steps and the facial-triangle enforcement to a fixpoint.
pub fn normalize(t0: &ComponentTree) -> Result<Normalized> {
    let g0 = t0.reassemble();
    let mut map = GadgetMap::identity(&g0);
    let mut t = t0.clone();
    for _ in 0..MAX_ROUNDS {
        let (t1, m1) = dedupe_separating_sets(&t)?;
        map = map.compose(&m1);
        let (t2, m2) = split_shared_vertices(&t1)?;
        map = map.compose(&m2);
        let (t3, changed) = enforce_facial_virtual_triangles(&t2)?;
        t = t3;
        if !changed {
            check_properties(&t)?;
            return Ok(Normalized { tree: t, map });
        }
    }
    Err(Error::structural("normalization did not reach a fixpoint"))
}
