//! Seeded random instances built by clique-sums of planar pieces and
//! treewidth-3 pieces, together with their ground-truth component trees.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{ComponentNode, ComponentTree, NodeKind, TreeEdge};
use crate::graph::{EdgeId, EdgeTag, Graph, VertexId};
use crate::planar::is_planar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Upper bound on the number of pieces; at least one is produced.
    pub pieces: usize,
    pub min_pieces: usize,
    pub planar_max: usize,
    pub tw_max: usize,
    pub total_max: usize,
    /// Largest clique used in a sum (1..=3).
    pub max_sum: usize,
    pub bipartite: bool,
    /// Probability that a piece is a treewidth-3 piece.
    pub ctype_prob: f64,
    /// Probability that a real clique edge is dropped after a sum.
    pub delete_prob: f64,
    /// Probability that a non-clique edge of a piece is dropped.
    pub thin_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            pieces: 5,
            min_pieces: 1,
            planar_max: 10,
            tw_max: 8,
            total_max: 28,
            max_sum: 3,
            bipartite: false,
            ctype_prob: 0.35,
            delete_prob: 0.3,
            thin_prob: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub tree: ComponentTree,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Origin {
    Planar,
    LowWidth,
}

struct Piece {
    origin: Origin,
    n: u32,
    edges: BTreeSet<(u32, u32)>,
    /// Cliques usable for gluing (local ids, sorted), besides single vertices.
    triangles: Vec<[u32; 3]>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn local_graph(n: u32, edges: &BTreeSet<(u32, u32)>) -> Graph {
    let es: Vec<(u32, u32)> = edges.iter().copied().collect();
    Graph::from_edges(n, &es).expect("piece graph")
}

fn triangulation(rng: &mut ChaCha8Rng, n: u32) -> BTreeSet<(u32, u32)> {
    let mut faces: Vec<[u32; 3]> = vec![[0, 1, 2], [0, 2, 1]];
    let mut edges: BTreeSet<(u32, u32)> = [(0, 1), (1, 2), (0, 2)].into();
    for x in 3..n {
        let fi = rng.gen_range(0..faces.len());
        let [a, b, c] = faces.swap_remove(fi);
        faces.extend([[a, b, x], [b, c, x], [c, a, x]]);
        edges.extend([key(a, x), key(b, x), key(c, x)]);
    }
    let mut deg = vec![0usize; n as usize];
    for &(a, b) in &edges {
        deg[a as usize] += 1;
        deg[b as usize] += 1;
    }
    for _ in 0..(2 * n) {
        let fi = rng.gen_range(0..faces.len());
        let [a, b, c] = faces[fi];
        let Some(fj) = faces.iter().position(|f| {
            (f[0] == b && f[1] == a) || (f[1] == b && f[2] == a) || (f[2] == b && f[0] == a)
        }) else {
            continue;
        };
        let f = faces[fj];
        let d = *f.iter().find(|&&v| v != a && v != b).unwrap();
        if d == c || edges.contains(&key(c, d)) || deg[a as usize] <= 3 || deg[b as usize] <= 3 {
            continue;
        }
        edges.remove(&key(a, b));
        edges.insert(key(c, d));
        deg[a as usize] -= 1;
        deg[b as usize] -= 1;
        deg[c as usize] += 1;
        deg[d as usize] += 1;
        let (i, j) = (fi.max(fj), fi.min(fj));
        faces.swap_remove(i);
        faces.swap_remove(j);
        faces.push([c, a, d]);
        faces.push([d, b, c]);
    }
    edges
}

fn quadrangulation(rng: &mut ChaCha8Rng, n: u32) -> BTreeSet<(u32, u32)> {
    let mut faces: Vec<[u32; 4]> = vec![[0, 1, 2, 3], [0, 3, 2, 1]];
    let mut edges: BTreeSet<(u32, u32)> = [(0, 1), (1, 2), (2, 3), (0, 3)].into();
    for x in 4..n {
        let fi = rng.gen_range(0..faces.len());
        let [a, b, c, d] = faces.swap_remove(fi);
        if rng.gen_bool(0.5) {
            faces.extend([[a, b, c, x], [a, x, c, d]]);
            edges.extend([key(a, x), key(c, x)]);
        } else {
            faces.extend([[b, c, d, x], [b, x, d, a]]);
            edges.extend([key(b, x), key(d, x)]);
        }
    }
    edges
}

fn three_tree(rng: &mut ChaCha8Rng, n: u32) -> (BTreeSet<(u32, u32)>, Vec<[u32; 3]>) {
    let mut edges = BTreeSet::new();
    for a in 0..4 {
        for b in a + 1..4 {
            edges.insert((a, b));
        }
    }
    let mut tris: Vec<[u32; 3]> = vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    for x in 4..n {
        let [a, b, c] = *tris.choose(rng).unwrap();
        edges.extend([key(a, x), key(b, x), key(c, x)]);
        tris.extend([[a, b, x], [a, c, x], [b, c, x]]);
    }
    (edges, tris)
}

/// Non-separating triangles of `g`; these bound a face in every embedding.
fn facial_triangles(g: &Graph) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    let vs: Vec<VertexId> = g.vertices().collect();
    for &a in &vs {
        for &b in g.neighbors(a).range(a..) {
            if b == a {
                continue;
            }
            for &c in g.neighbors(b).range(b..) {
                if c == b || !g.adjacent(a, c) {
                    continue;
                }
                let s: BTreeSet<VertexId> = [a, b, c].into();
                if g.components_without(&s).len() <= 1 {
                    out.push([a.0, b.0, c.0]);
                }
            }
        }
    }
    out
}

fn biconnected(n: u32, edges: &BTreeSet<(u32, u32)>) -> bool {
    let g = local_graph(n, edges);
    g.is_connected() && (0..n).all(|v| g.components_without(&[VertexId(v)].into()).len() <= 1)
}

fn thin(rng: &mut ChaCha8Rng, n: u32, edges: &mut BTreeSet<(u32, u32)>, p: f64, keep_biconnected: bool) {
    let all: Vec<(u32, u32)> = edges.iter().copied().collect();
    for e in all {
        if rng.gen_bool(p) {
            edges.remove(&e);
            let ok = if keep_biconnected {
                biconnected(n, edges)
            } else {
                local_graph(n, edges).is_connected()
            };
            if !ok {
                edges.insert(e);
            }
        }
    }
}

fn planar_piece(rng: &mut ChaCha8Rng, n: u32, bipartite: bool, thin_p: f64) -> Piece {
    let mut edges = if bipartite { quadrangulation(rng, n.max(4)) } else { triangulation(rng, n.max(3)) };
    let n = if bipartite { n.max(4) } else { n.max(3) };
    if n > 4 {
        thin(rng, n, &mut edges, thin_p, true);
    }
    let triangles = if bipartite { Vec::new() } else { facial_triangles(&local_graph(n, &edges)) };
    Piece { origin: Origin::Planar, n, edges, triangles }
}

fn low_width_piece(rng: &mut ChaCha8Rng, n: u32, bipartite: bool, thin_p: f64) -> Piece {
    if bipartite {
        let r = n.clamp(6, 8) - 3;
        let mut edges = BTreeSet::new();
        for a in 0..3 {
            for b in 3..3 + r {
                edges.insert((a, b));
            }
        }
        let total = 3 + r;
        thin(rng, total, &mut edges, thin_p, true);
        return Piece { origin: Origin::LowWidth, n: total, edges, triangles: Vec::new() };
    }
    let n = n.max(5);
    let mut best = None;
    for _ in 0..20 {
        let (mut edges, tris) = three_tree(rng, n);
        thin(rng, n, &mut edges, thin_p.max(0.15), false);
        let planar = is_planar(&local_graph(n, &edges));
        let piece = Piece { origin: Origin::LowWidth, n, edges, triangles: tris };
        if !planar {
            return piece;
        }
        best.get_or_insert(piece);
    }
    best.unwrap()
}

/// Builds a random clique-sum instance. Deterministic in `seed`.
pub fn generate_instance(seed: u64, params: &GenParams) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_sum = if params.bipartite { params.max_sum.min(2) } else { params.max_sum.min(3) }.max(1);
    let count = rng.gen_range(params.min_pieces.max(1)..=params.pieces.max(params.min_pieces).max(1));

    // global state
    let mut next_v: u32 = 0;
    let mut color: BTreeMap<u32, bool> = BTreeMap::new();
    let mut node_vertices: Vec<BTreeSet<u32>> = Vec::new();
    let mut node_real: Vec<BTreeSet<(u32, u32)>> = Vec::new();
    let mut node_virtual: Vec<BTreeSet<(u32, u32)>> = Vec::new();
    let mut node_cliques: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut origins: Vec<Origin> = Vec::new();
    let mut tedges: Vec<(usize, usize, BTreeSet<u32>)> = Vec::new();

    for i in 0..count {
        let used = next_v as usize;
        let room = params.total_max.saturating_sub(used);
        let want_c = rng.gen_bool(params.ctype_prob.clamp(0.0, 1.0));
        let (lo, hi) = if want_c { (5usize, params.tw_max.max(5)) } else { (4usize, params.planar_max.max(4)) };
        let k = if i == 0 { 0 } else { rng.gen_range(1..=max_sum) };
        let hi = hi.min(room + k);
        if hi < lo {
            break;
        }
        let n = rng.gen_range(lo..=hi) as u32;
        let piece = if want_c {
            low_width_piece(&mut rng, n, params.bipartite, params.thin_prob)
        } else {
            planar_piece(&mut rng, n, params.bipartite, params.thin_prob)
        };
        if i > 0 && piece.n as usize > room + k {
            break;
        }
        let local_colors = local_graph(piece.n, &piece.edges).two_coloring();

        // glue clique in the new piece (local ids) and in an existing node
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        let mut glued: Option<(usize, Vec<u32>)> = None;
        let mut flip_colors = false;
        if i > 0 {
            let j = rng.gen_range(0..node_vertices.len());
            let target_cliques: Vec<&Vec<u32>> = node_cliques[j].iter().filter(|c| c.len() == k).collect();
            let own: Vec<Vec<u32>> = match k {
                1 => (0..piece.n).map(|v| vec![v]).collect(),
                2 => piece.edges.iter().map(|&(a, b)| vec![a, b]).collect(),
                _ => piece.triangles.iter().map(|t| t.to_vec()).collect(),
            };
            if let (Some(target), Some(mine)) = (target_cliques.choose(&mut rng), own.choose(&mut rng)) {
                let target = (*target).clone();
                let mut mine = mine.clone();
                if let (true, Some(lc)) = (params.bipartite, &local_colors) {
                    // an edge target has opposite colours, so fixing the first end suffices
                    flip_colors = lc.is_left(VertexId(mine[0])) != color[&target[0]];
                } else {
                    mine.shuffle(&mut rng);
                }
                for (a, b) in mine.iter().zip(&target) {
                    map.insert(*a, *b);
                }
                glued = Some((j, target));
            }
        }
        if i > 0 && glued.is_none() {
            continue;
        }
        for v in 0..piece.n {
            if let std::collections::btree_map::Entry::Vacant(e) = map.entry(v) {
                e.insert(next_v);
                if let Some(lc) = &local_colors {
                    color.insert(next_v, lc.is_left(VertexId(v)) != flip_colors);
                }
                next_v += 1;
            }
        }
        if i == 0 {
            if let Some(lc) = &local_colors {
                for v in 0..piece.n {
                    color.insert(map[&v], lc.is_left(VertexId(v)));
                }
            }
        }

        let x = node_vertices.len();
        let verts: BTreeSet<u32> = (0..piece.n).map(|v| map[&v]).collect();
        let mut real: BTreeSet<(u32, u32)> = piece.edges.iter().map(|&(a, b)| key(map[&a], map[&b])).collect();
        let mut cliques: Vec<Vec<u32>> = Vec::new();
        for t in &piece.triangles {
            let mut c: Vec<u32> = t.iter().map(|v| map[v]).collect();
            c.sort();
            cliques.push(c);
        }
        for &(a, b) in &piece.edges {
            let mut c = vec![map[&a], map[&b]];
            c.sort();
            cliques.push(c);
        }
        for v in 0..piece.n {
            cliques.push(vec![map[&v]]);
        }
        let mut virt: BTreeSet<(u32, u32)> = BTreeSet::new();
        if let Some((j, target)) = &glued {
            let sep: BTreeSet<u32> = target.iter().copied().collect();
            let pairs: Vec<(u32, u32)> = target
                .iter()
                .flat_map(|&a| target.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
                .collect();
            for &p in &pairs {
                virt.insert(p);
                node_virtual[*j].insert(p);
                let in_new = real.remove(&p);
                let owner = node_real.iter().position(|r| r.contains(&p));
                if (in_new || owner.is_some()) && !rng.gen_bool(params.delete_prob) {
                    if owner.is_none() {
                        node_real[*j].insert(p);
                    }
                } else if let Some(o) = owner {
                    node_real[o].remove(&p);
                }
            }
            tedges.push((*j, x, sep));
        }
        node_vertices.push(verts);
        node_real.push(real);
        node_virtual.push(virt);
        node_cliques.push(cliques);
        origins.push(piece.origin);
    }

    // global graph with real edges numbered first
    let mut g = Graph::new();
    for v in 0..next_v {
        g.add_vertex(VertexId(v));
    }
    let mut real_id: BTreeMap<(u32, u32), EdgeId> = BTreeMap::new();
    let mut all_real: Vec<(usize, (u32, u32))> = Vec::new();
    for (x, es) in node_real.iter().enumerate() {
        for &e in es {
            all_real.push((x, e));
        }
    }
    all_real.sort_by_key(|&(_, e)| e);
    for (_, (a, b)) in &all_real {
        let id = g.add_edge_auto(VertexId(*a), VertexId(*b), EdgeTag::Real).expect("real edge");
        real_id.insert((*a, *b), id);
    }
    if params.bipartite {
        let bp = g.two_coloring().expect("bipartite assembly");
        g.set_bipartition(bp).expect("bipartition");
    }

    let mut next_e = g.next_edge_id().0;
    let mut nodes = Vec::new();
    for x in 0..node_vertices.len() {
        let mut ng = Graph::new();
        for &v in &node_vertices[x] {
            ng.add_vertex(VertexId(v));
        }
        for &(a, b) in &node_real[x] {
            ng.add_edge(real_id[&(a, b)], VertexId(a), VertexId(b), EdgeTag::Real).unwrap();
        }
        for &(a, b) in &node_virtual[x] {
            ng.add_edge(EdgeId(next_e), VertexId(a), VertexId(b), EdgeTag::Virtual).unwrap();
            next_e += 1;
        }
        let kind = match origins[x] {
            Origin::Planar => NodeKind::PType,
            Origin::LowWidth => {
                let sets: Vec<BTreeSet<VertexId>> = tedges
                    .iter()
                    .filter(|(a, b, _)| *a == x || *b == x)
                    .map(|(_, _, s)| s.iter().map(|&v| VertexId(v)).collect())
                    .collect();
                let facial = sets.iter().all(|s| s.len() < 3 || ng.components_without(s).len() <= 1);
                if facial && is_planar(&ng) {
                    NodeKind::PType
                } else {
                    NodeKind::CType
                }
            }
        };
        let mut node = ComponentNode::new(ng, kind);
        if kind == NodeKind::CType {
            node.width = Some(3);
        }
        nodes.push(node);
    }
    let mut tree = ComponentTree { nodes, edges: Vec::new(), root: 0 };
    for (a, b, s) in tedges {
        tree.edges.push(TreeEdge {
            a,
            b,
            sep_index: 0,
            separator: s.into_iter().map(VertexId).collect(),
        });
    }
    tree.reindex();
    Instance { graph: g, tree }
}

/// Adds up to `n` new edges between non-adjacent vertices on opposite sides
/// of `g`'s bipartition (computed if absent). Returns the grown graph and
/// the new edge ids in insertion order.
pub fn insertion_batch(g: &Graph, seed: u64, n: usize) -> (Graph, Vec<EdgeId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    let Some(bp) = g.bipartition().cloned().or_else(|| g.two_coloring()) else {
        return (out, Vec::new());
    };
    if out.bipartition().is_none() {
        out.set_bipartition(bp.clone()).expect("two-colouring is a bipartition");
    }
    let mut pairs: Vec<(VertexId, VertexId)> = Vec::new();
    for &a in &bp.left {
        for &b in &bp.right {
            if !g.adjacent(a, b) {
                pairs.push((a, b));
            }
        }
    }
    pairs.shuffle(&mut rng);
    let mut ids = Vec::new();
    for &(a, b) in pairs.iter().take(n) {
        let id = out.next_edge_id();
        out.add_edge(id, a, b, EdgeTag::Real).expect("fresh crossing edge");
        ids.push(id);
    }
    (out, ids)
}

/// Removes each edge of `g` with probability `p`.
pub fn deletion_batch(g: &Graph, seed: u64, p: f64) -> (Graph, Vec<EdgeId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    let ids: Vec<EdgeId> = g.edges().map(|e| e.id).filter(|_| rng.gen_bool(p)).collect();
    for &e in &ids {
        out.remove_edge(e);
    }
    (out, ids)
}

/// Small hand-built graphs used across tests and the CLI.
pub mod fixtures {
    use super::*;

    pub fn complete(n: u32) -> Graph {
        let mut es = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                es.push((i, j));
            }
        }
        Graph::from_edges(n, &es).unwrap()
    }

    pub fn cycle(n: u32) -> Graph {
        let es: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &es).unwrap()
    }

    /// Two K4s sharing the triangle {0, 1, 2}.
    pub fn two_k4() -> Graph {
        Graph::from_edges(
            5,
            &[(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4)],
        )
        .unwrap()
    }

    pub fn k33() -> Graph {
        let mut es = Vec::new();
        for i in 0..3 {
            for j in 3..6 {
                es.push((i, j));
            }
        }
        let mut g = Graph::from_edges(6, &es).unwrap();
        let bp = g.two_coloring().unwrap();
        g.set_bipartition(bp).unwrap();
        g
    }

    pub fn octahedron() -> Graph {
        // antipodal pairs (0,5), (1,3), (2,4)
        let mut es = Vec::new();
        for a in 0..6u32 {
            for b in a + 1..6 {
                if !matches!((a, b), (0, 5) | (1, 3) | (2, 4)) {
                    es.push((a, b));
                }
            }
        }
        Graph::from_edges(6, &es).unwrap()
    }

    /// Two p-type nodes glued on {0, 1, 2}. In node 0 the triangle separates
    /// vertex 3 from vertex 4, so it is not a face in any embedding.
    pub fn nonfacial_triangle_tree() -> ComponentTree {
        let node = |vs: &[u32], real: &[(u32, u32, u32)], virt: &[(u32, u32, u32)]| {
            let mut g = Graph::new();
            for &v in vs {
                g.add_vertex(VertexId(v));
            }
            for &(id, a, b) in real {
                g.add_edge(EdgeId(id), VertexId(a), VertexId(b), EdgeTag::Real).unwrap();
            }
            for &(id, a, b) in virt {
                g.add_edge(EdgeId(id), VertexId(a), VertexId(b), EdgeTag::Virtual).unwrap();
            }
            g
        };
        let a = node(
            &[0, 1, 2, 3, 4],
            &[(0, 0, 1), (1, 1, 2), (2, 0, 2), (3, 0, 3), (4, 1, 3), (5, 2, 3), (6, 0, 4), (7, 1, 4), (8, 2, 4)],
            &[(100, 0, 1), (101, 1, 2), (102, 0, 2)],
        );
        let b = node(&[0, 1, 2, 5], &[(9, 0, 5), (10, 1, 5), (11, 2, 5)], &[(103, 0, 1), (104, 1, 2), (105, 0, 2)]);
        let mut t = ComponentTree {
            nodes: vec![ComponentNode::new(a, NodeKind::PType), ComponentNode::new(b, NodeKind::PType)],
            edges: Vec::new(),
            root: 0,
        };
        t.add_edge(0, 1, [0, 1, 2].into_iter().map(VertexId).collect());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::planar::blocks;

    fn real_set(g: &Graph) -> BTreeSet<(VertexId, VertexId)> {
        g.real_edges().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect()
    }

    #[test]
    fn deterministic_in_seed() {
        let p = GenParams::default();
        let a = generate_instance(7, &p);
        let b = generate_instance(7, &p);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.tree, b.tree);
    }

    #[test]
    fn single_piece_is_trivial_tree() {
        let p = GenParams { pieces: 1, ctype_prob: 0.0, ..GenParams::default() };
        let inst = generate_instance(3, &p);
        assert_eq!(inst.tree.nodes.len(), 1);
        assert!(inst.tree.edges.is_empty());
        assert_eq!(inst.tree.nodes[0].kind, NodeKind::PType);
    }

    #[test]
    fn ground_truth_trees_are_valid() {
        for seed in 0..40 {
            let inst = generate_instance(seed, &GenParams::default());
            inst.tree.validate(3).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(real_set(&inst.tree.reassemble()), real_set(&inst.graph), "seed {seed}");
            assert!(inst.graph.vertex_count() <= 28);
            assert!(inst.tree.separators_are_genuine(), "seed {seed}");
        }
    }

    #[test]
    fn bipartite_flag_gives_bipartite_graphs() {
        let p = GenParams { bipartite: true, ..GenParams::default() };
        for seed in 0..20 {
            let inst = generate_instance(seed, &p);
            assert!(inst.graph.two_coloring().is_some());
            assert!(inst.graph.bipartition().is_some());
            inst.tree.validate(3).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        }
    }

    #[test]
    fn three_piece_round_trip_through_decompose() {
        let p = GenParams { pieces: 3, min_pieces: 3, ..GenParams::default() };
        for seed in 0..10 {
            let inst = generate_instance(seed, &p);
            for b in blocks(&inst.graph) {
                if b.edge_count() < 2 {
                    continue;
                }
                let t = decompose(&b, 3).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
                t.validate(3).unwrap();
                assert_eq!(real_set(&t.reassemble()), real_set(&b));
            }
        }
    }
}
