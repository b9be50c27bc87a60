//! The lifted graph: one copy of each vertex per bag of a rooted tree
//! decomposition, intra-bag edges hosted at the highest bag holding both
//! endpoints, and copy edges between copies in adjacent bags.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Cycle, EdgeId, EdgeTag, Graph, VertexId};
use crate::treedec::{is_connected_bag_set, TreeDecomp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lifted {
    pub vertex: VertexId,
    pub bag: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LiftedEdge {
    /// Copy of an edge of the base graph.
    Intra { original: EdgeId },
    /// Joins the copies of `vertex` in `child` and its parent bag.
    Copy { vertex: VertexId, child: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GPrime {
    pub graph: Graph,
    pub provenance: BTreeMap<VertexId, Lifted>,
    /// bag -> base vertex -> its copy in that bag
    pub lift: BTreeMap<usize, BTreeMap<VertexId, VertexId>>,
    pub association: BTreeMap<EdgeId, usize>,
    pub kinds: BTreeMap<EdgeId, LiftedEdge>,
    /// base edge -> its unique intra-bag copy
    pub intra_of: BTreeMap<EdgeId, EdgeId>,
    pub tprime: TreeDecomp,
}

impl GPrime {
    pub fn copy(&self, v: VertexId, bag: usize) -> Option<VertexId> {
        self.lift.get(&bag).and_then(|m| m.get(&v)).copied()
    }

    pub fn is_copy_edge(&self, e: EdgeId) -> bool {
        matches!(self.kinds.get(&e), Some(LiftedEdge::Copy { .. }))
    }

    /// Edges associated with bag `b`, sorted by id.
    pub fn associated(&self, b: usize) -> Vec<EdgeId> {
        self.association.iter().filter(|&(_, &x)| x == b).map(|(&e, _)| e).collect()
    }

    /// Bags having at least one edge of `c` associated with them.
    pub fn support(&self, c: &Cycle) -> BTreeSet<usize> {
        c.edges().iter().map(|d| self.association[&d.edge]).collect()
    }
}

/// Builds the lifted graph of `g` over the rooted decomposition `td`.
pub fn build_gprime(g: &Graph, td: &TreeDecomp) -> Result<GPrime> {
    let mut graph = Graph::new();
    let mut provenance = BTreeMap::new();
    let mut lift: BTreeMap<usize, BTreeMap<VertexId, VertexId>> = BTreeMap::new();
    let mut next = 0u32;
    for b in &td.bags {
        let m = lift.entry(b.id).or_default();
        for &v in &b.vertices {
            let x = VertexId(next);
            next += 1;
            graph.add_vertex(x);
            provenance.insert(x, Lifted { vertex: v, bag: b.id });
            m.insert(v, x);
        }
    }
    let mut association = BTreeMap::new();
    let mut kinds = BTreeMap::new();
    let mut intra_of = BTreeMap::new();
    let mut eid = 0u32;
    let mut edges: Vec<_> = g.edges().copied().collect();
    edges.sort_by_key(|e| e.id);
    for e in edges {
        let hosts: Vec<usize> = td
            .bags
            .iter()
            .filter(|b| b.vertices.contains(&e.u) && b.vertices.contains(&e.v))
            .filter(|b| match td.parent[b.id] {
                Some(p) => !(td.bags[p].vertices.contains(&e.u) && td.bags[p].vertices.contains(&e.v)),
                None => true,
            })
            .map(|b| b.id)
            .collect();
        if hosts.len() != 1 {
            return Err(Error::structural(format!(
                "edge {} has {} host bags under the parent rule",
                e.id,
                hosts.len()
            )));
        }
        let b = hosts[0];
        let id = EdgeId(eid);
        eid += 1;
        graph.add_edge(id, lift[&b][&e.u], lift[&b][&e.v], EdgeTag::Real)?;
        association.insert(id, b);
        kinds.insert(id, LiftedEdge::Intra { original: e.id });
        intra_of.insert(e.id, id);
    }
    for b in &td.bags {
        let Some(p) = td.parent[b.id] else { continue };
        for &v in b.vertices.intersection(&td.bags[p].vertices) {
            let id = EdgeId(eid);
            eid += 1;
            graph.add_edge(id, lift[&p][&v], lift[&b.id][&v], EdgeTag::Real)?;
            association.insert(id, p);
            kinds.insert(id, LiftedEdge::Copy { vertex: v, child: b.id });
        }
    }
    Ok(GPrime { graph, provenance, lift, association, kinds, intra_of, tprime: td.clone() })
}

/// Whether the bags carrying edges of `c` form a connected subtree.
pub fn check_connected_support(gp: &GPrime, c: &Cycle) -> bool {
    is_connected_bag_set(&gp.tprime, &gp.support(c))
}
