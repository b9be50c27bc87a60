//! Undirected multigraphs with real/virtual edge tags, directed edge views,
//! skew-symmetric weight assignments and cycles.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTag {
    Real,
    Virtual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    pub tag: EdgeTag,
}

impl Edge {
    /// The endpoint opposite to `x`. `x` must be an endpoint.
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            debug_assert_eq!(x, self.v);
            self.u
        }
    }

    pub fn is_real(&self) -> bool {
        self.tag == EdgeTag::Real
    }

    pub fn joins(&self, a: VertexId, b: VertexId) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub left: BTreeSet<VertexId>,
    pub right: BTreeSet<VertexId>,
}

impl Bipartition {
    pub fn is_left(&self, v: VertexId) -> bool {
        self.left.contains(&v)
    }
}

/// Undirected multigraph. Parallel edges are only allowed as a real edge
/// alongside a virtual edge between the same pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Edge>,
    adj: BTreeMap<VertexId, Vec<EdgeId>>,
    bipartition: Option<Bipartition>,
}

/// Wire format: `{vertices, edges: [{id, u, v, tag}], bipartition?}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bipartition: Option<Bipartition>,
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            vertices: g.vertices.iter().copied().collect(),
            edges: g.edges.values().copied().collect(),
            bipartition: g.bipartition,
        }
    }
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        let mut g = Graph::new();
        for v in j.vertices {
            g.add_vertex(v);
        }
        for e in j.edges {
            g.add_edge(e.id, e.u, e.v, e.tag)?;
        }
        if let Some(b) = j.bipartition {
            g.set_bipartition(b)?;
        }
        Ok(g)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph with real edges numbered in the order given.
    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Graph::new();
        for v in 0..n {
            g.add_vertex(VertexId(v));
        }
        for &(u, v) in edges {
            g.add_edge_auto(VertexId(u), VertexId(v), EdgeTag::Real)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        if self.vertices.insert(v) {
            self.adj.insert(v, Vec::new());
        }
    }

    pub fn add_edge(&mut self, id: EdgeId, u: VertexId, v: VertexId, tag: EdgeTag) -> Result<()> {
        if u == v {
            return Err(Error::invalid(format!("self-loop at vertex {u}")));
        }
        if self.edges.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate edge id {id}")));
        }
        for x in [u, v] {
            if !self.vertices.contains(&x) {
                return Err(Error::invalid(format!("edge {id} uses unknown vertex {x}")));
            }
        }
        for e in self.edges_between(u, v) {
            if self.edges[&e].tag == tag {
                return Err(Error::invalid(format!(
                    "parallel {tag:?} edges {e} and {id} between {u} and {v}"
                )));
            }
        }
        if let Some(bp) = &self.bipartition {
            if bp.is_left(u) == bp.is_left(v) {
                return Err(Error::invalid(format!("edge {id} does not cross the bipartition")));
            }
        }
        self.edges.insert(id, Edge { id, u, v, tag });
        self.adj.get_mut(&u).unwrap().push(id);
        self.adj.get_mut(&v).unwrap().push(id);
        Ok(())
    }

    pub fn add_edge_auto(&mut self, u: VertexId, v: VertexId, tag: EdgeTag) -> Result<EdgeId> {
        let id = self.next_edge_id();
        self.add_edge(id, u, v, tag)?;
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Option<Edge> {
        let e = self.edges.remove(&id)?;
        for x in [e.u, e.v] {
            self.adj.get_mut(&x).unwrap().retain(|&f| f != id);
        }
        Some(e)
    }

    pub fn remove_vertex(&mut self, v: VertexId) {
        if let Some(inc) = self.adj.remove(&v) {
            for e in inc {
                if let Some(edge) = self.edges.remove(&e) {
                    let o = edge.other(v);
                    if let Some(l) = self.adj.get_mut(&o) {
                        l.retain(|&f| f != e);
                    }
                }
            }
        }
        self.vertices.remove(&v);
        if let Some(bp) = &mut self.bipartition {
            bp.left.remove(&v);
            bp.right.remove(&v);
        }
    }

    pub fn set_bipartition(&mut self, bp: Bipartition) -> Result<()> {
        let covered: BTreeSet<_> = bp.left.union(&bp.right).copied().collect();
        if covered != self.vertices || !bp.left.is_disjoint(&bp.right) {
            return Err(Error::invalid("bipartition does not partition the vertex set"));
        }
        for e in self.edges.values() {
            if bp.is_left(e.u) == bp.is_left(e.v) {
                return Err(Error::invalid(format!("edge {} does not cross the bipartition", e.id)));
            }
        }
        self.bipartition = Some(bp);
        Ok(())
    }

    pub fn clear_bipartition(&mut self) {
        self.bipartition = None;
    }

    pub fn bipartition(&self) -> Option<&Bipartition> {
        self.bipartition.as_ref()
    }

    pub fn next_edge_id(&self) -> EdgeId {
        EdgeId(self.edges.keys().next_back().map_or(0, |e| e.0 + 1))
    }

    pub fn next_vertex_id(&self) -> VertexId {
        VertexId(self.vertices.iter().next_back().map_or(0, |v| v.0 + 1))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.values()
    }

    pub fn real_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.values().filter(|e| e.is_real())
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn has_edge(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        self.adj.get(&v).map_or(&[], |l| l.as_slice())
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident(v).len()
    }

    pub fn edges_between(&self, a: VertexId, b: VertexId) -> Vec<EdgeId> {
        self.incident(a)
            .iter()
            .copied()
            .filter(|e| self.edges[e].other(a) == b)
            .collect()
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId, tag: EdgeTag) -> Option<EdgeId> {
        self.edges_between(a, b)
            .into_iter()
            .find(|e| self.edges[e].tag == tag)
    }

    pub fn adjacent(&self, a: VertexId, b: VertexId) -> bool {
        !self.edges_between(a, b).is_empty()
    }

    /// Distinct neighbours of `v`, sorted.
    pub fn neighbors(&self, v: VertexId) -> BTreeSet<VertexId> {
        self.incident(v).iter().map(|e| self.edges[e].other(v)).collect()
    }

    /// Subgraph induced by `keep`, keeping edge ids.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> Graph {
        let mut g = Graph::new();
        for &v in keep {
            if self.has_vertex(v) {
                g.add_vertex(v);
            }
        }
        for e in self.edges.values() {
            if keep.contains(&e.u) && keep.contains(&e.v) {
                g.add_edge(e.id, e.u, e.v, e.tag).expect("induced edge");
            }
        }
        g
    }

    /// Same vertices, real edges only.
    pub fn real_part(&self) -> Graph {
        let mut g = Graph::new();
        for v in self.vertices() {
            g.add_vertex(v);
        }
        for e in self.real_edges() {
            g.add_edge(e.id, e.u, e.v, e.tag).expect("real edge");
        }
        g.bipartition = self.bipartition.clone();
        g
    }

    /// Connected components of the graph with `removed` deleted.
    pub fn components_without(&self, removed: &BTreeSet<VertexId>) -> Vec<BTreeSet<VertexId>> {
        let mut seen: BTreeSet<VertexId> = removed.clone();
        let mut comps = Vec::new();
        for s in self.vertices() {
            if seen.contains(&s) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([s]);
            seen.insert(s);
            while let Some(x) = queue.pop_front() {
                comp.insert(x);
                for &e in self.incident(x) {
                    let y = self.edges[&e].other(x);
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        self.components_without(&BTreeSet::new())
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// A proper 2-colouring, if one exists. Left side gets the smallest vertex
    /// of each component.
    pub fn two_coloring(&self) -> Option<Bipartition> {
        let mut side: BTreeMap<VertexId, bool> = BTreeMap::new();
        for s in self.vertices() {
            if side.contains_key(&s) {
                continue;
            }
            side.insert(s, true);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let sx = side[&x];
                for &e in self.incident(x) {
                    let y = self.edges[&e].other(x);
                    match side.get(&y) {
                        Some(&sy) if sy == sx => return None,
                        Some(_) => {}
                        None => {
                            side.insert(y, !sx);
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        let mut bp = Bipartition::default();
        for (v, left) in side {
            if left {
                bp.left.insert(v);
            } else {
                bp.right.insert(v);
            }
        }
        Some(bp)
    }
}

/// An edge traversed in one of its two directions. `forward` follows the
/// stored `(u, v)` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub edge: EdgeId,
    pub forward: bool,
}

impl DirectedEdge {
    pub fn forward(edge: EdgeId) -> Self {
        DirectedEdge { edge, forward: true }
    }

    pub fn backward(edge: EdgeId) -> Self {
        DirectedEdge { edge, forward: false }
    }

    pub fn reverse(self) -> Self {
        DirectedEdge { edge: self.edge, forward: !self.forward }
    }

    /// Orientation of `e` leaving `from`.
    pub fn leaving(e: &Edge, from: VertexId) -> Self {
        DirectedEdge { edge: e.id, forward: e.u == from }
    }

    pub fn tail(self, g: &Graph) -> VertexId {
        let e = g.edge(self.edge).expect("edge in graph");
        if self.forward {
            e.u
        } else {
            e.v
        }
    }

    pub fn head(self, g: &Graph) -> VertexId {
        let e = g.edge(self.edge).expect("edge in graph");
        if self.forward {
            e.v
        } else {
            e.u
        }
    }
}

/// Skew-symmetric integer weights. Only the forward weight of each edge is
/// stored; the reverse direction is its negation.
/// Serialized as `{edge_id: decimal-string}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightAssignment {
    #[serde(with = "crate::io::bigint_map")]
    forward: BTreeMap<EdgeId, BigInt>,
}

impl WeightAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zero_on(g: &Graph) -> Self {
        WeightAssignment {
            forward: g.edges().map(|e| (e.id, BigInt::zero())).collect(),
        }
    }

    pub fn set(&mut self, edge: EdgeId, forward_weight: BigInt) {
        self.forward.insert(edge, forward_weight);
    }

    /// Sets the weight of `de`; the opposite direction becomes its negation.
    pub fn set_directed(&mut self, de: DirectedEdge, w: BigInt) {
        let fw = if de.forward { w } else { -w };
        self.forward.insert(de.edge, fw);
    }

    pub fn add_directed(&mut self, de: DirectedEdge, w: &BigInt) {
        let entry = self.forward.entry(de.edge).or_default();
        if de.forward {
            *entry += w;
        } else {
            *entry -= w;
        }
    }

    pub fn forward_weight(&self, edge: EdgeId) -> Option<&BigInt> {
        self.forward.get(&edge)
    }

    pub fn get(&self, de: DirectedEdge) -> Option<BigInt> {
        self.forward
            .get(&de.edge)
            .map(|w| if de.forward { w.clone() } else { -w })
    }

    pub fn weight(&self, de: DirectedEdge) -> Result<BigInt> {
        self.get(de).ok_or(Error::IncompleteAssignment(de.edge))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, &BigInt)> + '_ {
        self.forward.iter().map(|(&e, w)| (e, w))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn contains(&self, edge: EdgeId) -> bool {
        self.forward.contains_key(&edge)
    }

    pub fn is_total_on(&self, g: &Graph) -> bool {
        g.edges().all(|e| self.forward.contains_key(&e.id))
    }

    pub fn max_abs(&self) -> BigInt {
        self.forward.values().map(|w| w.abs()).max().unwrap_or_default()
    }

    /// Bit length of the largest absolute weight.
    pub fn max_bits(&self) -> u64 {
        self.max_abs().bits()
    }

    pub fn restrict(&self, edges: impl IntoIterator<Item = EdgeId>) -> Self {
        WeightAssignment {
            forward: edges
                .into_iter()
                .filter_map(|e| self.forward.get(&e).map(|w| (e, w.clone())))
                .collect(),
        }
    }

    /// Explicit weights for both directions of every edge.
    pub fn to_directed(&self) -> DirectedWeights {
        let mut out = DirectedWeights::new();
        for (&e, w) in &self.forward {
            out.insert(DirectedEdge::forward(e), w.clone());
            out.insert(DirectedEdge::backward(e), -w);
        }
        out
    }

    pub fn from_directed(dw: &DirectedWeights) -> Result<Self> {
        let mut wa = WeightAssignment::new();
        for (de, w) in dw {
            match dw.get(&de.reverse()) {
                Some(r) if *r == -w => wa.set_directed(*de, w.clone()),
                _ => {
                    return Err(Error::Parameter(format!(
                        "edge {} is not skew-symmetric",
                        de.edge
                    )))
                }
            }
        }
        Ok(wa)
    }
}

/// Weights stored separately for each direction, as read from external data.
pub type DirectedWeights = BTreeMap<DirectedEdge, BigInt>;

/// A simple cycle given as a closed sequence of directed edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cycle {
    edges: Vec<DirectedEdge>,
    vertices: Vec<VertexId>,
}

impl Cycle {
    /// Validates that `edges` is a closed walk visiting no vertex twice.
    pub fn new(g: &Graph, edges: Vec<DirectedEdge>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid("a cycle needs at least two edges"));
        }
        for de in &edges {
            if !g.has_edge(de.edge) {
                return Err(Error::invalid(format!("cycle uses unknown edge {}", de.edge)));
            }
        }
        let vertices: Vec<VertexId> = edges.iter().map(|de| de.tail(g)).collect();
        for i in 0..edges.len() {
            let next = (i + 1) % edges.len();
            if edges[i].head(g) != vertices[next] {
                return Err(Error::invalid("cycle edges are not consecutive"));
            }
        }
        let distinct: BTreeSet<_> = vertices.iter().collect();
        if distinct.len() != vertices.len() {
            return Err(Error::invalid("cycle repeats a vertex"));
        }
        let distinct_edges: BTreeSet<_> = edges.iter().map(|d| d.edge).collect();
        if distinct_edges.len() != edges.len() {
            return Err(Error::invalid("cycle repeats an edge"));
        }
        Ok(Cycle { edges, vertices })
    }

    /// Builds a cycle through `vertices` in order, picking for each step the
    /// edge with the smallest id joining the two vertices.
    pub fn through(g: &Graph, vertices: &[VertexId]) -> Result<Self> {
        let k = vertices.len();
        let mut edges = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b) = (vertices[i], vertices[(i + 1) % k]);
            let e = g
                .edges_between(a, b)
                .into_iter()
                .min()
                .ok_or_else(|| Error::invalid(format!("no edge between {a} and {b}")))?;
            edges.push(DirectedEdge::leaving(g.edge(e).unwrap(), a));
        }
        Cycle::new(g, edges)
    }

    pub(crate) fn from_parts_unchecked(edges: Vec<DirectedEdge>, vertices: Vec<VertexId>) -> Self {
        Cycle { edges, vertices }
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    /// `vertices()[i]` is the tail of `edges()[i]`.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn reversed(&self) -> Cycle {
        let k = self.edges.len();
        let edges: Vec<_> = self.edges.iter().rev().map(|d| d.reverse()).collect();
        // tail of reversed edge i is head of original edge k-1-i
        let vertices = (0..k).map(|i| self.vertices[(k - i) % k]).collect();
        Cycle { edges, vertices }
    }

    /// Rotated to start at the smallest vertex and oriented towards the
    /// smaller of its two neighbours (smaller edge id for 2-cycles).
    pub fn canonical(&self) -> Cycle {
        let k = self.edges.len();
        let start = (0..k).min_by_key(|&i| self.vertices[i]).unwrap();
        let rotated = Cycle {
            edges: (0..k).map(|i| self.edges[(start + i) % k]).collect(),
            vertices: (0..k).map(|i| self.vertices[(start + i) % k]).collect(),
        };
        let first_next = rotated.vertices[1 % k];
        let last_prev = rotated.vertices[k - 1];
        let flip = if k == 2 {
            rotated.edges[0].edge > rotated.edges[1].edge
        } else {
            last_prev < first_next
        };
        if flip {
            let r = rotated.reversed();
            // reversal keeps vertex 0 at index 0
            r
        } else {
            rotated
        }
    }

    pub fn vertex_set(&self) -> BTreeSet<VertexId> {
        self.vertices.iter().copied().collect()
    }
}

/// Sum of `w` over the directed edges of `c` in traversal order.
pub fn circulation(c: &Cycle, w: &WeightAssignment) -> Result<BigInt> {
    walk_weight(c.edges(), w)
}

/// Sum of `w` over an arbitrary sequence of directed edges.
pub fn walk_weight(walk: &[DirectedEdge], w: &WeightAssignment) -> Result<BigInt> {
    let mut total = BigInt::zero();
    for &de in walk {
        total += w.weight(de)?;
    }
    Ok(total)
}

/// Combines layers as `e -> sum_i w_i(e) * base^(k-i)`, after checking that
/// `base > n * max |w_i(e)|` so that no layer can overflow into the next.
pub fn combine_shifted(
    layers: &[WeightAssignment],
    base: &BigInt,
    n: usize,
) -> Result<WeightAssignment> {
    let Some(first) = layers.first() else {
        return Ok(WeightAssignment::new());
    };
    for layer in layers {
        for (e, _) in first.iter() {
            if !layer.contains(e) {
                return Err(Error::IncompleteAssignment(e));
            }
        }
        for (e, _) in layer.iter() {
            if !first.contains(e) {
                return Err(Error::IncompleteAssignment(e));
            }
        }
    }
    // only the lower layers must stay below the base
    let max = layers[1..].iter().map(|l| l.max_abs()).max().unwrap_or_default();
    let required = max * BigInt::from(n);
    if layers.len() > 1 && *base <= required {
        return Err(Error::ShiftBaseTooSmall {
            base: base.to_string(),
            required: required.to_string(),
        });
    }
    let mut out = WeightAssignment::new();
    for (e, _) in first.iter() {
        let mut acc = BigInt::zero();
        for layer in layers {
            acc = acc * base + layer.forward_weight(e).unwrap();
        }
        out.set(e, acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn weights(pairs: &[(u32, i64)]) -> WeightAssignment {
        let mut w = WeightAssignment::new();
        for &(e, x) in pairs {
            w.set(EdgeId(e), BigInt::from(x));
        }
        w
    }

    #[test]
    fn rejects_self_loops_and_duplicate_parallels() {
        let mut g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(g.add_edge_auto(VertexId(0), VertexId(0), EdgeTag::Real).is_err());
        assert!(g.add_edge_auto(VertexId(0), VertexId(1), EdgeTag::Real).is_err());
        g.add_edge_auto(VertexId(1), VertexId(0), EdgeTag::Virtual).unwrap();
        assert!(g.add_edge_auto(VertexId(0), VertexId(1), EdgeTag::Virtual).is_err());
    }

    #[test]
    fn bipartition_must_be_crossed() {
        let mut g = triangle();
        let bp = Bipartition {
            left: [VertexId(0)].into(),
            right: [VertexId(1), VertexId(2)].into(),
        };
        assert!(g.set_bipartition(bp).is_err());
        assert!(g.two_coloring().is_none());
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(c4.two_coloring().is_some());
    }

    #[test]
    fn triangle_circulation_is_direct_sum() {
        let g = triangle();
        let c = Cycle::through(&g, &[VertexId(0), VertexId(1), VertexId(2)]).unwrap();
        let w = weights(&[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(circulation(&c, &w).unwrap(), BigInt::from(6));
        assert_eq!(circulation(&c.reversed(), &w).unwrap(), BigInt::from(-6));
        assert_eq!(circulation(&c, &WeightAssignment::zero_on(&g)).unwrap(), BigInt::zero());
    }

    #[test]
    fn telescoping_four_cycle_is_zero() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c = Cycle::through(&g, &[VertexId(0), VertexId(1), VertexId(2), VertexId(3)]).unwrap();
        let w = weights(&[(0, 1), (1, 2), (2, -1), (3, -2)]);
        assert_eq!(circulation(&c, &w).unwrap(), BigInt::zero());
    }

    #[test]
    fn missing_weight_is_reported() {
        let g = triangle();
        let c = Cycle::through(&g, &[VertexId(0), VertexId(1), VertexId(2)]).unwrap();
        let w = weights(&[(0, 1), (1, 2)]);
        assert!(matches!(circulation(&c, &w), Err(Error::IncompleteAssignment(EdgeId(2)))));
    }

    #[test]
    fn edge_and_its_reverse_cancel() {
        let w = weights(&[(0, 17)]);
        let walk = [DirectedEdge::forward(EdgeId(0)), DirectedEdge::backward(EdgeId(0))];
        assert_eq!(walk_weight(&walk, &w).unwrap(), BigInt::zero());
        let d = DirectedEdge::forward(EdgeId(3));
        assert_eq!(d.reverse().reverse(), d);
    }

    #[test]
    fn combine_single_layer_is_identity() {
        let w = weights(&[(0, 5), (1, -3)]);
        let out = combine_shifted(std::slice::from_ref(&w), &BigInt::from(2), 10).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn combine_two_layers_formula() {
        let out = combine_shifted(
            &[weights(&[(0, 1)]), weights(&[(0, 2)])],
            &BigInt::from(100),
            2,
        )
        .unwrap();
        assert_eq!(out.forward_weight(EdgeId(0)).unwrap(), &BigInt::from(102));
    }

    #[test]
    fn combine_rejects_small_base() {
        let r = combine_shifted(&[weights(&[(0, 2)]), weights(&[(0, 10)])], &BigInt::from(20), 4);
        assert!(matches!(r, Err(Error::ShiftBaseTooSmall { .. })));
    }

    #[test]
    fn combine_zero_top_layer_keeps_lower_circulation() {
        // layer 1 telescopes to zero on the 4-cycle, layer 2 sums to 5
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c = Cycle::through(&g, &[VertexId(0), VertexId(1), VertexId(2), VertexId(3)]).unwrap();
        let l1 = weights(&[(0, 1), (1, 2), (2, -1), (3, -2)]);
        let l2 = weights(&[(0, 1), (1, 1), (2, 1), (3, 2)]);
        assert_eq!(circulation(&c, &l1).unwrap(), BigInt::zero());
        assert_eq!(circulation(&c, &l2).unwrap(), BigInt::from(5));
        let combined = combine_shifted(&[l1, l2], &BigInt::from(1000), 4).unwrap();
        assert_eq!(circulation(&c, &combined).unwrap(), BigInt::from(5));
    }

    #[test]
    fn canonical_form_is_rotation_and_reflection_invariant() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let vs = [VertexId(2), VertexId(3), VertexId(0), VertexId(1)];
        let c = Cycle::through(&g, &vs).unwrap();
        let canon = c.canonical();
        assert_eq!(canon.vertices()[0], VertexId(0));
        assert_eq!(canon.vertices()[1], VertexId(1));
        assert_eq!(c.reversed().canonical(), canon);
    }

    #[test]
    fn directed_round_trip_detects_asymmetry() {
        let w = weights(&[(0, 3), (1, -4)]);
        let dw = w.to_directed();
        assert_eq!(WeightAssignment::from_directed(&dw).unwrap(), w);
        let mut bad = dw.clone();
        bad.insert(DirectedEdge::backward(EdgeId(0)), BigInt::from(3));
        assert!(WeightAssignment::from_directed(&bad).is_err());
    }
}
