//! Weights on the lifted graph.
//!
//! Two layers are combined as `w' = B_shift * cross + local`. The cross layer
//! gives planar bags face weights next to the attachment points of their
//! auxiliary-tree children, and gives constant-size bags distinct powers of
//! two scaled by `K^(h-1) * l`. The local layer gives every bounded face of a
//! planar bag weight one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::auxtree::AuxTree;
use crate::decompose::ComponentTree;
use crate::error::{Error, Result};
use crate::gprime::{GPrime, LiftedEdge};
use crate::graph::{combine_shifted, DirectedEdge, Edge, EdgeId, EdgeTag, Graph, VertexId, WeightAssignment};
use crate::planar::{blocks, embed_block, Embedding, Face};
use crate::treedec::BagOrigin;

/// Largest number of faces that may border one attachment set.
pub const MAX_ATTACHMENT_FACES: usize = 3;

/// `K = max(2^(m+2), 7) + 1`.
pub fn choose_k(m: usize) -> BigInt {
    let p = BigInt::one() << (m + 2);
    p.max(BigInt::from(7)) + 1
}

/// Largest number of edges associated with a constant-size bag.
pub fn max_ctype_edges(gp: &GPrime) -> usize {
    gp.tprime
        .bags
        .iter()
        .filter(|b| !matches!(b.origin, BagOrigin::PType { .. }))
        .map(|b| gp.associated(b.id).len())
        .max()
        .unwrap_or(0)
}

/// Edge weights realising the given face weights: each bounded face's
/// boundary sum, in tracing order, equals its weight. Edges for which
/// `prefer` holds go into the primal spanning tree first and get weight 0.
pub fn faces_to_edges(
    g: &Graph,
    faces: &[Face],
    outer: usize,
    weight: &[BigInt],
    prefer: impl Fn(&Edge) -> bool,
) -> Result<WeightAssignment> {
    let mut out = WeightAssignment::zero_on(g);
    if faces.len() <= 1 {
        return Ok(out);
    }
    let mut face_of: BTreeMap<DirectedEdge, usize> = BTreeMap::new();
    for (i, f) in faces.iter().enumerate() {
        for &d in f {
            face_of.insert(d, i);
        }
    }
    // primal spanning tree by Kruskal
    let mut order: Vec<&Edge> = g.edges().collect();
    order.sort_by_key(|e| (!prefer(e), e.id));
    let mut uf: BTreeMap<VertexId, VertexId> = g.vertices().map(|v| (v, v)).collect();
    fn find(uf: &mut BTreeMap<VertexId, VertexId>, v: VertexId) -> VertexId {
        let p = uf[&v];
        if p == v {
            return v;
        }
        let r = find(uf, p);
        uf.insert(v, r);
        r
    }
    let mut cotree: Vec<EdgeId> = Vec::new();
    for e in order {
        let (a, b) = (find(&mut uf, e.u), find(&mut uf, e.v));
        if a == b {
            cotree.push(e.id);
        } else {
            uf.insert(a, b);
        }
    }
    // dual tree over co-tree edges, rooted at the outer face
    let mut dual: Vec<Vec<(usize, DirectedEdge)>> = vec![Vec::new(); faces.len()];
    for &e in &cotree {
        let (f, b) = (DirectedEdge::forward(e), DirectedEdge::backward(e));
        let (ff, fb) = (face_of[&f], face_of[&b]);
        dual[ff].push((fb, f));
        dual[fb].push((ff, b));
    }
    let mut parent_dart: Vec<Option<DirectedEdge>> = vec![None; faces.len()];
    let mut seen = vec![false; faces.len()];
    seen[outer] = true;
    let mut bfs = vec![outer];
    let mut q = VecDeque::from([outer]);
    while let Some(x) = q.pop_front() {
        for &(y, d) in &dual[x] {
            if !seen[y] {
                seen[y] = true;
                // the dart of this edge lying on y
                parent_dart[y] = Some(d.reverse());
                bfs.push(y);
                q.push_back(y);
            }
        }
    }
    if bfs.len() != faces.len() {
        return Err(Error::structural("dual of the embedding is disconnected"));
    }
    let mut subtotal: Vec<BigInt> = weight.to_vec();
    subtotal[outer] = BigInt::zero();
    for &f in bfs.iter().rev() {
        if let Some(d) = parent_dart[f] {
            let s = subtotal[f].clone();
            out.add_directed(d, &s);
            let p = face_of[&d.reverse()];
            subtotal[p] += s;
        }
    }
    Ok(out)
}

/// Faces of one block with the chosen outer face.
struct BlockFaces {
    block: Graph,
    faces: Vec<Face>,
    outer: usize,
}

fn embed_with_outer(block: &Graph, designated: &dyn Fn(&[DirectedEdge]) -> bool) -> Result<BlockFaces> {
    let emb: Embedding = embed_block(block, designated)?;
    let faces = emb.faces(block);
    // the longest face that is not designated; ties to the first
    let outer = (0..faces.len())
        .filter(|&i| !designated(&faces[i]))
        .min_by_key(|&i| (std::cmp::Reverse(faces[i].len()), i))
        .unwrap_or(0);
    Ok(BlockFaces { block: block.clone(), faces, outer })
}

/// Unit weight on every bounded face, block by block: every simple cycle of
/// a planar graph gets circulation equal to the number of faces it encloses.
pub fn planar_local_weights(g: &Graph) -> Result<WeightAssignment> {
    let mut out = WeightAssignment::zero_on(g);
    for block in blocks(g) {
        if block.edge_count() < 2 {
            continue;
        }
        let bf = embed_with_outer(&block, &|_| false)?;
        let mut fw = vec![BigInt::one(); bf.faces.len()];
        fw[bf.outer] = BigInt::zero();
        let w = faces_to_edges(&bf.block, &bf.faces, bf.outer, &fw, |_| false)?;
        for (e, x) in w.iter() {
            out.set(e, x.clone());
        }
    }
    Ok(out)
}

/// An auxiliary-tree child hanging off a planar bag.
#[derive(Clone, Debug)]
pub struct Attachment {
    pub at: BTreeSet<VertexId>,
    pub height: u32,
    pub leaves: u64,
}

/// Cross-layer weights of a planar bag graph `h` (real edges of the bag plus
/// the virtual cliques of its separating sets). A face bordering a virtual
/// edge of an attachment set gets `2 * K^height * leaves` per such set, except
/// the set's own triangle face and the outer face. Returns the edge weights
/// and, per attachment, the number of faces it weighted.
pub fn planar_cross_weights(
    h: &Graph,
    separators: &[BTreeSet<VertexId>],
    attachments: &[Attachment],
    k: &BigInt,
) -> Result<(WeightAssignment, Vec<usize>)> {
    let mut out = WeightAssignment::zero_on(h);
    let mut counts = vec![0usize; attachments.len()];
    let virtual_ids = |s: &BTreeSet<VertexId>| -> BTreeSet<EdgeId> {
        let mut ids = BTreeSet::new();
        for &a in s {
            for &b in s {
                if a < b {
                    if let Some(e) = h.find_edge(a, b, EdgeTag::Virtual) {
                        ids.insert(e);
                    }
                }
            }
        }
        ids
    };
    let triangles: Vec<BTreeSet<EdgeId>> = separators
        .iter()
        .filter(|s| s.len() == 3)
        .map(virtual_ids)
        .filter(|ids| ids.len() == 3)
        .collect();
    let att_ids: Vec<BTreeSet<EdgeId>> = attachments.iter().map(|a| virtual_ids(&a.at)).collect();
    for block in blocks(h) {
        if block.edge_count() < 2 {
            continue;
        }
        let is_triangle = |f: &[DirectedEdge]| -> bool {
            let ids: BTreeSet<EdgeId> = f.iter().map(|d| d.edge).collect();
            f.len() == 3 && triangles.contains(&ids)
        };
        let bf = embed_with_outer(&block, &is_triangle)?;
        // one designated face per triangle
        let mut designated: BTreeMap<BTreeSet<EdgeId>, usize> = BTreeMap::new();
        for (i, f) in bf.faces.iter().enumerate() {
            if i != bf.outer && is_triangle(f) {
                designated.entry(f.iter().map(|d| d.edge).collect()).or_insert(i);
            }
        }
        let mut fw = vec![BigInt::zero(); bf.faces.len()];
        for (j, a) in attachments.iter().enumerate() {
            let ids = &att_ids[j];
            if ids.is_empty() {
                continue;
            }
            let own = designated.get(ids).copied();
            let amount = BigInt::from(2) * k.pow(a.height) * BigInt::from(a.leaves);
            for (i, f) in bf.faces.iter().enumerate() {
                if i == bf.outer || Some(i) == own {
                    continue;
                }
                if f.iter().any(|d| ids.contains(&d.edge)) {
                    fw[i] += &amount;
                    counts[j] += 1;
                }
            }
        }
        let w = faces_to_edges(&bf.block, &bf.faces, bf.outer, &fw, |e| e.tag == EdgeTag::Virtual)?;
        for (e, x) in w.iter() {
            out.set(e, x.clone());
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > MAX_ATTACHMENT_FACES {
            return Err(Error::structural(format!(
                "attachment set {:?} borders {c} weighted faces",
                attachments[j].at.iter().map(|v| v.0).collect::<Vec<_>>()
            )));
        }
    }
    Ok((out, counts))
}

/// `e_j -> 2^j * K^(h-1) * l` for `j = 1..=edges.len()`.
pub fn csize_weights(edges: &[EdgeId], height: u32, leaves: u64, k: &BigInt) -> WeightAssignment {
    let scale = k.pow(height.saturating_sub(1)) * BigInt::from(leaves);
    let mut out = WeightAssignment::new();
    for (j, &e) in edges.iter().enumerate() {
        out.set(e, (BigInt::one() << (j + 1)) * &scale);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WPrime {
    #[serde(rename = "K", with = "crate::io::bigint_string")]
    pub k: BigInt,
    #[serde(rename = "B_shift", with = "crate::io::bigint_string")]
    pub b_shift: BigInt,
    pub m: usize,
    pub cross: WeightAssignment,
    pub local: WeightAssignment,
    pub weights: WeightAssignment,
}

/// The planar bag graph of bag `b`: node vertices lifted into the bag, the
/// node's virtual edges, and the real lifted edges hosted at the bag (with
/// their base edge ids).
pub fn planar_bag_graph(gp: &GPrime, tree: &ComponentTree, b: usize, node: usize) -> Result<Graph> {
    let ng = &tree.nodes[node].graph;
    let mut h = Graph::new();
    for v in ng.vertices() {
        h.add_vertex(v);
    }
    for e in ng.edges().filter(|e| !e.is_real()) {
        h.add_edge(e.id, e.u, e.v, EdgeTag::Virtual)?;
    }
    for e in gp.associated(b) {
        if let LiftedEdge::Intra { original } = gp.kinds[&e] {
            let le = gp.graph.edge(e).unwrap();
            let (u, v) = (gp.provenance[&le.u].vertex, gp.provenance[&le.v].vertex);
            h.add_edge(original, u, v, EdgeTag::Real)?;
        }
    }
    Ok(h)
}

/// Builds `w'`. `boost` doubles `K` and `B_shift` that many times.
pub fn assemble_wprime(gp: &GPrime, tree: &ComponentTree, aux: &AuxTree, boost: u32) -> Result<WPrime> {
    let stats = aux.all_stats();
    let m = max_ctype_edges(gp);
    let k = choose_k(m) << boost;
    let mut cross = WeightAssignment::zero_on(&gp.graph);
    let mut local = WeightAssignment::zero_on(&gp.graph);
    for bag in &gp.tprime.bags {
        let b = bag.id;
        let (h, l) = stats[&b];
        let assoc = gp.associated(b);
        match bag.origin {
            BagOrigin::PType { node } => {
                let hg = planar_bag_graph(gp, tree, b, node)?;
                let separators = &tree.nodes[node].separating_sets;
                let mut attachments = Vec::new();
                for c in aux.children(b) {
                    let at = aux.nodes[&c].attached_at.clone().unwrap_or_default();
                    if at.len() >= 2 && !separators.contains(&at) {
                        return Err(Error::structural(format!(
                            "bag {b}: attachment set {at:?} is not a separating set"
                        )));
                    }
                    let (hc, lc) = stats[&c];
                    attachments.push(Attachment { at, height: hc, leaves: lc });
                }
                let (wc, _) = planar_cross_weights(&hg, separators, &attachments, &k)?;
                // the bag's local graph: lifted intra edges only
                let mut lg = Graph::new();
                for v in &bag.vertices {
                    lg.add_vertex(gp.copy(*v, b).unwrap());
                }
                for &e in &assoc {
                    if let LiftedEdge::Intra { original } = gp.kinds[&e] {
                        let le = gp.graph.edge(e).unwrap();
                        lg.add_edge(e, le.u, le.v, EdgeTag::Real)?;
                        cross.set(e, wc.forward_weight(original).unwrap().clone());
                    }
                }
                for (e, x) in planar_local_weights(&lg)?.iter() {
                    local.set(e, x.clone());
                }
            }
            _ => {
                for (e, x) in csize_weights(&assoc, h, l, &k).iter() {
                    cross.set(e, x.clone());
                }
            }
        }
    }
    let n = gp.graph.vertex_count().max(1);
    let b_shift = (local.max_abs() * BigInt::from(n) + 1) << boost;
    let weights = combine_shifted(&[cross.clone(), local.clone()], &b_shift, n)?;
    Ok(WPrime { k, b_shift, m, cross, local, weights })
}
