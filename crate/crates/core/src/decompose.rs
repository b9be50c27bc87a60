//! Component trees: decomposition of a biconnected graph into planar and
//! bounded-treewidth pieces glued along separating sets of size at most 3.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeTag, Graph, VertexId};
use crate::planar::{blocks, is_planar};
use crate::treedec::{treewidth_at_most, treewidth_upper_bound, TreeDecomp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    PType,
    CType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    PType,
    CType,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentNode {
    /// Real and virtual edges; vertex ids are global.
    pub graph: Graph,
    pub kind: NodeKind,
    pub separating_sets: Vec<BTreeSet<VertexId>>,
    /// Width bound recorded for c-type nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// A decomposition supplied with the node instead of being computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<TreeDecomp>,
}

impl ComponentNode {
    pub fn new(graph: Graph, kind: NodeKind) -> Self {
        ComponentNode { graph, kind, separating_sets: Vec::new(), width: None, decomposition: None }
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        self.graph.vertex_set()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    /// Index of the separator in `nodes[a].separating_sets`.
    pub sep_index: usize,
    pub separator: BTreeSet<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentTree {
    pub nodes: Vec<ComponentNode>,
    pub edges: Vec<TreeEdge>,
    pub root: usize,
}

impl ComponentTree {
    pub fn single(graph: Graph, kind: NodeKind) -> Self {
        ComponentTree { nodes: vec![ComponentNode::new(graph, kind)], edges: Vec::new(), root: 0 }
    }

    pub fn add_edge(&mut self, a: usize, b: usize, separator: BTreeSet<VertexId>) {
        self.edges.push(TreeEdge { a, b, sep_index: 0, separator });
        self.reindex();
    }

    /// Rebuilds every node's separator list from the tree edges.
    pub fn reindex(&mut self) {
        for n in &mut self.nodes {
            n.separating_sets.clear();
        }
        for e in &mut self.edges {
            for x in [e.a, e.b] {
                let sets = &mut self.nodes[x].separating_sets;
                if !sets.contains(&e.separator) {
                    sets.push(e.separator.clone());
                }
            }
            e.sep_index = self.nodes[e.a]
                .separating_sets
                .iter()
                .position(|s| *s == e.separator)
                .unwrap();
        }
    }

    /// `(neighbour, edge index)` pairs of `node`.
    pub fn neighbors(&self, node: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                if e.a == node {
                    Some((e.b, i))
                } else if e.b == node {
                    Some((e.a, i))
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn next_vertex_id(&self) -> VertexId {
        VertexId(
            self.nodes
                .iter()
                .filter_map(|n| n.graph.vertices().last())
                .map(|v| v.0 + 1)
                .max()
                .unwrap_or(0),
        )
    }

    pub fn next_edge_id(&self) -> EdgeId {
        EdgeId(self.nodes.iter().map(|n| n.graph.next_edge_id().0).max().unwrap_or(0))
    }

    /// The glued graph: all vertices and real edges of all nodes.
    pub fn reassemble(&self) -> Graph {
        let mut g = Graph::new();
        for n in &self.nodes {
            for v in n.graph.vertices() {
                g.add_vertex(v);
            }
        }
        let mut real: BTreeMap<EdgeId, (VertexId, VertexId)> = BTreeMap::new();
        for n in &self.nodes {
            for e in n.graph.real_edges() {
                real.insert(e.id, (e.u, e.v));
            }
        }
        for (id, (u, v)) in real {
            g.add_edge(id, u, v, EdgeTag::Real).expect("reassembled edge");
        }
        g
    }

    /// Structural checks: tree shape, separators present with virtual
    /// cliques on both sides, real edges owned by one node, node kinds.
    pub fn validate(&self, width: usize) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || self.root >= n {
            return Err(Error::structural("component tree has no root"));
        }
        if self.edges.len() != n - 1 {
            return Err(Error::structural("component tree edge count is not nodes - 1"));
        }
        let mut seen = BTreeSet::from([self.root]);
        let mut q = VecDeque::from([self.root]);
        while let Some(x) = q.pop_front() {
            for (y, _) in self.neighbors(x) {
                if seen.insert(y) {
                    q.push_back(y);
                }
            }
        }
        if seen.len() != n {
            return Err(Error::structural("component tree is not connected"));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.separator.is_empty() || e.separator.len() > 3 {
                return Err(Error::structural(format!("tree edge {i} has separator of size {}", e.separator.len())));
            }
            for x in [e.a, e.b] {
                let g = &self.nodes[x].graph;
                if !e.separator.is_subset(g.vertex_set()) {
                    return Err(Error::structural(format!("separator of tree edge {i} not inside node {x}")));
                }
                for &u in &e.separator {
                    for &v in &e.separator {
                        if u < v && g.find_edge(u, v, EdgeTag::Virtual).is_none() {
                            return Err(Error::structural(format!(
                                "node {x} lacks virtual edge {u}-{v} of its separating set"
                            )));
                        }
                    }
                }
            }
        }
        let mut owner: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for (x, node) in self.nodes.iter().enumerate() {
            for e in node.graph.real_edges() {
                if let Some(o) = owner.insert(e.id, x) {
                    return Err(Error::structural(format!("real edge {} in nodes {o} and {x}", e.id)));
                }
            }
        }
        for (x, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::PType => {
                    if !is_planar(&node.graph) {
                        return Err(Error::structural(format!("p-type node {x} is not planar")));
                    }
                }
                NodeKind::CType => {
                    if let Some(td) = &node.decomposition {
                        td.validate(&node.graph)?;
                    } else {
                        let w = node.width.unwrap_or(width);
                        if treewidth_at_most(&node.graph, w) == Some(false) {
                            return Err(Error::structural(format!("c-type node {x} exceeds width {w}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Every tree edge's separator disconnects the glued graph into the
    /// vertices of its two sides.
    pub fn separators_are_genuine(&self) -> bool {
        let g = self.reassemble();
        for (i, e) in self.edges.iter().enumerate() {
            let side_a = self.side_vertices(e.a, i);
            let side_b = self.side_vertices(e.b, i);
            let comps = g.components_without(&e.separator);
            for c in comps {
                let in_a = c.iter().any(|v| side_a.contains(v));
                let in_b = c.iter().any(|v| side_b.contains(v));
                if in_a && in_b {
                    return false;
                }
            }
        }
        true
    }

    /// Vertices of the subtree containing `start` after removing tree edge `cut`.
    fn side_vertices(&self, start: usize, cut: usize) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::from([start]);
        let mut q = VecDeque::from([start]);
        while let Some(x) = q.pop_front() {
            for (y, ei) in self.neighbors(x) {
                if ei != cut && seen.insert(y) {
                    q.push_back(y);
                }
            }
        }
        seen.iter()
            .flat_map(|&x| self.nodes[x].graph.vertices())
            .collect()
    }

    fn remove_node(&mut self, x: usize) {
        let last = self.nodes.len() - 1;
        self.nodes.swap_remove(x);
        for e in &mut self.edges {
            if e.a == last {
                e.a = x;
            }
            if e.b == last {
                e.b = x;
            }
        }
        if self.root == last {
            self.root = x;
        }
    }
}

pub fn split_biconnected(g: &Graph) -> Vec<Graph> {
    blocks(g)
}

pub fn classify(g: &Graph, width: usize) -> Classification {
    if is_planar(g) {
        Classification::PType
    } else if treewidth_at_most(g, width) == Some(true) {
        Classification::CType
    } else {
        Classification::Neither
    }
}

fn is_biconnected(g: &Graph) -> bool {
    g.vertex_count() <= 2 && g.is_connected() || blocks(g).len() == 1
}

/// Lexicographically smallest vertex set of size 2, then 3, whose removal
/// leaves at least two components.
fn find_separator(g: &Graph) -> Option<BTreeSet<VertexId>> {
    let vs: Vec<VertexId> = g.vertices().collect();
    let n = vs.len();
    for size in 2..=3 {
        if n < size + 2 {
            continue;
        }
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let s: BTreeSet<VertexId> = idx.iter().map(|&i| vs[i]).collect();
            if g.components_without(&s).len() >= 2 {
                return Some(s);
            }
            // next combination
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] < n - size + i {
                    idx[i] += 1;
                    for j in i + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    None
}

fn add_virtual_clique(g: &mut Graph, s: &BTreeSet<VertexId>, next_edge: &mut u32) {
    for &u in s {
        for &v in s {
            if u < v && g.find_edge(u, v, EdgeTag::Virtual).is_none() {
                g.add_edge(EdgeId(*next_edge), u, v, EdgeTag::Virtual).expect("virtual edge");
                *next_edge += 1;
            }
        }
    }
}

/// Splits `g` at `s`: side one is the first component plus `s` (and keeps the
/// real edges inside `s`), side two the remaining components plus `s`.
fn split_at(g: &Graph, s: &BTreeSet<VertexId>, next_edge: &mut u32) -> (Graph, Graph) {
    let comps = g.components_without(s);
    let mut v1: BTreeSet<VertexId> = comps[0].clone();
    v1.extend(s.iter().copied());
    let mut v2: BTreeSet<VertexId> = comps[1..].iter().flatten().copied().collect();
    v2.extend(s.iter().copied());
    let mut g1 = Graph::new();
    let mut g2 = Graph::new();
    for &v in &v1 {
        g1.add_vertex(v);
    }
    for &v in &v2 {
        g2.add_vertex(v);
    }
    for e in g.edges() {
        // v1 includes the separator, so edges inside it stay on the first side
        let target = if v1.contains(&e.u) && v1.contains(&e.v) {
            &mut g1
        } else {
            &mut g2
        };
        target.add_edge(e.id, e.u, e.v, e.tag).expect("split edge");
    }
    add_virtual_clique(&mut g1, s, next_edge);
    add_virtual_clique(&mut g2, s, next_edge);
    (g1, g2)
}

/// Decomposes a biconnected graph. Planar pieces are split at every
/// separator of size 2 or 3 (smallest first); a nonplanar piece is kept whole
/// when its treewidth is at most `width`, otherwise split the same way.
pub fn decompose(g: &Graph, width: usize) -> Result<ComponentTree> {
    if g.vertex_count() == 0 {
        return Err(Error::invalid("empty graph"));
    }
    if !is_biconnected(g) {
        return Err(Error::invalid("decompose expects a biconnected graph"));
    }
    let mut base = g.clone();
    base.clear_bipartition();
    let mut next_edge = base.next_edge_id().0;
    let mut pieces: Vec<Graph> = vec![base];
    let mut kinds: Vec<Option<NodeKind>> = vec![None];
    let mut widths: Vec<Option<usize>> = vec![None];
    let mut tedges: Vec<(usize, usize, BTreeSet<VertexId>)> = Vec::new();
    let mut work = vec![0usize];

    while let Some(p) = work.pop() {
        let piece = &pieces[p];
        let planar = is_planar(piece);
        if !planar && treewidth_at_most(piece, width) == Some(true) {
            kinds[p] = Some(NodeKind::CType);
            widths[p] = Some(treewidth_upper_bound(piece)?);
            continue;
        }
        match find_separator(piece) {
            None if planar => kinds[p] = Some(NodeKind::PType),
            None => {
                return Err(Error::NotDecomposable {
                    width,
                    witness: piece.vertices().collect(),
                })
            }
            Some(s) => {
                let (g1, g2) = split_at(piece, &s, &mut next_edge);
                let q = pieces.len();
                for e in tedges.iter_mut() {
                    for end in [&mut e.0, &mut e.1] {
                        if *end == p && !e.2.is_subset(g1.vertex_set()) {
                            *end = q;
                        }
                    }
                }
                pieces[p] = g1;
                pieces.push(g2);
                kinds.push(None);
                widths.push(None);
                tedges.push((p, q, s));
                work.push(q);
                work.push(p);
            }
        }
    }

    let nodes = pieces
        .into_iter()
        .zip(kinds)
        .zip(widths)
        .map(|((graph, kind), width)| {
            let mut node = ComponentNode::new(graph, kind.expect("classified"));
            node.width = width;
            node
        })
        .collect();
    let mut t = ComponentTree { nodes, edges: Vec::new(), root: 0 };
    for (a, b, s) in tedges {
        t.edges.push(TreeEdge { a, b, sep_index: 0, separator: s });
    }
    t.reindex();
    Ok(t)
}

/// Merges adjacent c-type nodes until no tree edge joins two of them. The
/// merged width is recorded as the sum of both widths plus the separator size.
pub fn merge_ctype_neighbors(mut t: ComponentTree) -> ComponentTree {
    loop {
        let Some(ei) = t.edges.iter().position(|e| {
            t.nodes[e.a].kind == NodeKind::CType && t.nodes[e.b].kind == NodeKind::CType
        }) else {
            break;
        };
        let e = t.edges.remove(ei);
        let (a, b) = (e.a.min(e.b), e.a.max(e.b));
        let nb = t.nodes[b].clone();
        for te in &mut t.edges {
            if te.a == b {
                te.a = a;
            }
            if te.b == b {
                te.b = a;
            }
        }
        let keep: Vec<BTreeSet<VertexId>> = t
            .edges
            .iter()
            .filter(|te| te.a == a || te.b == a)
            .map(|te| te.separator.clone())
            .collect();
        let na = &mut t.nodes[a];
        let mut merged = Graph::new();
        for v in na.graph.vertices().chain(nb.graph.vertices()) {
            merged.add_vertex(v);
        }
        for edge in na.graph.edges().chain(nb.graph.edges()) {
            let internal = e.separator.contains(&edge.u) && e.separator.contains(&edge.v);
            let still_needed = keep.iter().any(|s| s.contains(&edge.u) && s.contains(&edge.v));
            if edge.tag == EdgeTag::Virtual && internal && !still_needed {
                continue;
            }
            if merged.find_edge(edge.u, edge.v, edge.tag).is_some() {
                continue;
            }
            merged.add_edge(edge.id, edge.u, edge.v, edge.tag).expect("merged edge");
        }
        na.graph = merged;
        na.width = Some(na.width.unwrap_or(0) + nb.width.unwrap_or(0) + e.separator.len());
        na.decomposition = None;
        if t.root == b {
            t.root = a;
        }
        t.remove_node(b);
        t.reindex();
    }
    t
}
