//! Tree decompositions: exact treewidth for small graphs, validation, and the
//! closed-form decomposition of the multi-star gadget.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::decompose::{ComponentTree, NodeKind};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Largest graph handled by the exact elimination-ordering search.
pub const MAX_EXACT_VERTICES: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BagOrigin {
    Plain,
    PType { node: usize },
    CType { node: usize, local: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bag {
    pub id: usize,
    pub vertices: BTreeSet<VertexId>,
    pub origin: BagOrigin,
    #[serde(default)]
    pub separators: Vec<BTreeSet<VertexId>>,
}

/// A rooted tree decomposition. Bag ids are indices into `bags`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomp {
    pub bags: Vec<Bag>,
    pub parent: Vec<Option<usize>>,
    pub root: usize,
}

impl TreeDecomp {
    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.vertices.len()).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn children(&self, b: usize) -> Vec<usize> {
        (0..self.bags.len()).filter(|&c| self.parent[c] == Some(b)).collect()
    }

    pub fn neighbors(&self, b: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.children(b);
        if let Some(p) = self.parent[b] {
            out.push(p);
        }
        out.sort();
        out
    }

    pub fn tree_edges(&self) -> Vec<(usize, usize)> {
        (0..self.bags.len())
            .filter_map(|c| self.parent[c].map(|p| (p, c)))
            .collect()
    }

    pub fn depth(&self, b: usize) -> usize {
        let mut d = 0;
        let mut x = b;
        while let Some(p) = self.parent[x] {
            d += 1;
            x = p;
        }
        d
    }

    /// True when `a` is `b` or an ancestor of `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut x = Some(b);
        while let Some(y) = x {
            if y == a {
                return true;
            }
            x = self.parent[y];
        }
        false
    }

    /// Bags on the tree path from `a` to `b`, both included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let up = |mut x: usize| {
            let mut v = vec![x];
            while let Some(p) = self.parent[x] {
                v.push(p);
                x = p;
            }
            v
        };
        let pa = up(a);
        let pb = up(b);
        let sb: BTreeSet<usize> = pb.iter().copied().collect();
        let lca = *pa.iter().find(|x| sb.contains(x)).unwrap();
        let mut out: Vec<usize> = pa.iter().copied().take_while(|&x| x != lca).collect();
        out.push(lca);
        let mut down: Vec<usize> = pb.iter().copied().take_while(|&x| x != lca).collect();
        down.reverse();
        out.extend(down);
        out
    }

    /// The unique highest bag containing `v`.
    pub fn top_bag(&self, v: VertexId) -> Option<usize> {
        (0..self.bags.len())
            .filter(|&b| self.bags[b].vertices.contains(&v))
            .min_by_key(|&b| (self.depth(b), b))
    }

    pub fn bags_containing(&self, v: VertexId) -> Vec<usize> {
        (0..self.bags.len())
            .filter(|&b| self.bags[b].vertices.contains(&v))
            .collect()
    }

    /// Checks the three tree-decomposition conditions for `g`, plus tree shape.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = self.bags.len();
        if n == 0 {
            return if g.vertex_count() == 0 {
                Ok(())
            } else {
                Err(Error::structural("empty decomposition of a nonempty graph"))
            };
        }
        if self.parent.len() != n || self.parent[self.root].is_some() {
            return Err(Error::structural("malformed parent array"));
        }
        for b in 0..n {
            if self.bags[b].id != b {
                return Err(Error::structural(format!("bag {b} has id {}", self.bags[b].id)));
            }
            let mut x = b;
            let mut steps = 0;
            while let Some(p) = self.parent[x] {
                x = p;
                steps += 1;
                if steps > n {
                    return Err(Error::structural("parent pointers contain a cycle"));
                }
            }
            if x != self.root {
                return Err(Error::structural(format!("bag {b} is not under the root")));
            }
        }
        for v in g.vertices() {
            let holders = self.bags_containing(v);
            if holders.is_empty() {
                return Err(Error::structural(format!("vertex {v} is in no bag")));
            }
            // connected iff exactly one holder has its parent outside the set
            let set: BTreeSet<usize> = holders.iter().copied().collect();
            let tops = holders
                .iter()
                .filter(|&&b| self.parent[b].is_none_or(|p| !set.contains(&p)))
                .count();
            if tops != 1 {
                return Err(Error::structural(format!("bags containing {v} are not connected")));
            }
        }
        for e in g.edges() {
            if !self
                .bags
                .iter()
                .any(|b| b.vertices.contains(&e.u) && b.vertices.contains(&e.v))
            {
                return Err(Error::structural(format!("edge {} has no host bag", e.id)));
            }
        }
        Ok(())
    }
}

struct Masks {
    ids: Vec<VertexId>,
    adj: Vec<u64>,
}

impl Masks {
    fn new(g: &Graph) -> Self {
        let ids: Vec<VertexId> = g.vertices().collect();
        let idx = |v: VertexId| ids.binary_search(&v).unwrap();
        let mut adj = vec![0u64; ids.len()];
        for e in g.edges() {
            let (a, b) = (idx(e.u), idx(e.v));
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        Masks { ids, adj }
    }

    /// Vertices outside `s ∪ {v}` reachable from `v` through `s`.
    fn q(&self, s: u64, v: usize) -> u64 {
        let mut seen = 1u64 << v;
        let mut frontier = 1u64 << v;
        let mut out = 0u64;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = self.adj[x] & !seen;
            seen |= nb;
            out |= nb & !s;
            frontier |= nb & s;
        }
        out
    }
}

/// An elimination ordering of width at most `k`, if one exists.
fn ordering_within(m: &Masks, k: usize) -> Option<Vec<usize>> {
    let n = m.ids.len();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut layer: Vec<u64> = vec![0];
    let mut pred: HashMap<u64, (u64, usize)> = HashMap::new();
    for _ in 0..n {
        let mut next: Vec<u64> = Vec::new();
        for &s in &layer {
            for v in 0..n {
                if s >> v & 1 == 1 {
                    continue;
                }
                let t = s | 1 << v;
                if pred.contains_key(&t) {
                    continue;
                }
                if (m.q(s, v).count_ones() as usize) <= k {
                    pred.insert(t, (s, v));
                    next.push(t);
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        layer = next;
    }
    if !pred.contains_key(&full) && n > 0 {
        return None;
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let (p, v) = pred[&s];
        order.push(v);
        s = p;
    }
    order.reverse();
    Some(order)
}

/// Greedy min-fill elimination ordering and its width. Ties go to the lower
/// degree, then the lower index.
fn min_fill_order(m: &Masks) -> (Vec<usize>, usize) {
    let n = m.ids.len();
    let mut adj = m.adj.clone();
    let mut left: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    while left != 0 {
        let mut best: Option<(usize, u32, usize)> = None;
        let mut bits = left;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let nb = adj[v] & left;
            let mut fill = 0;
            let mut xs = nb;
            while xs != 0 {
                let x = xs.trailing_zeros() as usize;
                xs &= xs - 1;
                fill += (nb & !adj[x] & !(1u64 << x)).count_ones() as usize;
            }
            let key = (fill / 2, nb.count_ones(), v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (_, deg, v) = best.unwrap();
        width = width.max(deg as usize);
        let nb = adj[v] & left;
        let mut xs = nb;
        while xs != 0 {
            let x = xs.trailing_zeros() as usize;
            xs &= xs - 1;
            adj[x] |= nb & !(1u64 << x);
        }
        left &= !(1u64 << v);
        order.push(v);
    }
    (order, width)
}

/// Exact treewidth (graphs up to `MAX_EXACT_VERTICES` vertices).
pub fn treewidth(g: &Graph) -> Result<usize> {
    Ok(exact(g, usize::MAX)?.1)
}

fn exact(g: &Graph, limit: usize) -> Result<(Vec<usize>, usize)> {
    let n = g.vertex_count();
    if n > MAX_EXACT_VERTICES {
        return Err(Error::Config(format!(
            "exact treewidth limited to {MAX_EXACT_VERTICES} vertices, graph has {n}"
        )));
    }
    let m = Masks::new(g);
    for k in 0..n.max(1) {
        if k > limit {
            break;
        }
        if let Some(order) = ordering_within(&m, k) {
            return Ok((order, k));
        }
    }
    Err(Error::WidthExceeded { width: limit, actual: usize::MAX })
}

/// Exact treewidth when the graph is small enough, otherwise the width of
/// the min-fill ordering.
pub fn treewidth_upper_bound(g: &Graph) -> Result<usize> {
    if g.vertex_count() <= MAX_EXACT_VERTICES {
        return treewidth(g);
    }
    if g.vertex_count() > 64 {
        return Err(Error::Config(format!("treewidth bound limited to 64 vertices, graph has {}", g.vertex_count())));
    }
    Ok(min_fill_order(&Masks::new(g)).1)
}

/// Whether treewidth is at most `width`. Past the exact search limit only a
/// heuristic yes is possible; otherwise `None`.
pub fn treewidth_at_most(g: &Graph, width: usize) -> Option<bool> {
    if g.vertex_count() > MAX_EXACT_VERTICES {
        if g.vertex_count() <= 64 && min_fill_order(&Masks::new(g)).1 <= width {
            return Some(true);
        }
        return None;
    }
    let m = Masks::new(g);
    Some(ordering_within(&m, width).is_some())
}

/// A tree decomposition of minimum width, rejected when that exceeds `width`.
/// Graphs past the exact limit get a min-fill decomposition instead.
/// Bags that are subsets of a neighbour are merged away; bag 0 is the root
/// and every parent has a smaller id than its children.
pub fn tree_decompose(g: &Graph, width: usize) -> Result<TreeDecomp> {
    let n = g.vertex_count();
    if n == 0 {
        return Ok(TreeDecomp { bags: Vec::new(), parent: Vec::new(), root: 0 });
    }
    let order = match exact(g, width) {
        Ok((order, _)) => order,
        // too large for the exact search: accept a heuristic order within the bound
        Err(Error::Config(msg)) if n <= 64 => {
            let (order, w) = min_fill_order(&Masks::new(g));
            if w > width {
                return Err(Error::Config(format!("{msg}; min-fill heuristic reaches only width {w}")));
            }
            order
        }
        Err(Error::WidthExceeded { .. }) => {
            let actual = treewidth(g)?;
            return Err(Error::WidthExceeded { width, actual });
        }
        Err(e) => return Err(e),
    };
    let m = Masks::new(g);
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    // bag of v = v plus its higher neighbours in the filled graph
    let mut prefix = 0u64;
    let mut bag_of: Vec<u64> = vec![0; n];
    for &v in &order {
        bag_of[v] = m.q(prefix, v) | 1 << v;
        prefix |= 1 << v;
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for &v in &order {
        let higher = bag_of[v] & !(1u64 << v);
        if higher != 0 {
            let mut best = None;
            let mut bits = higher;
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if best.is_none_or(|b: usize| pos[u] < pos[b]) {
                    best = Some(u);
                }
            }
            parent[v] = best;
        }
    }
    let root = order[n - 1];
    for &v in &order {
        if v != root && parent[v].is_none() {
            parent[v] = Some(root);
        }
    }

    // contract bags contained in a neighbour
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for &v in &order {
            if !alive[v] {
                continue;
            }
            let nbrs: Vec<usize> = (0..n)
                .filter(|&c| alive[c] && (parent[c] == Some(v) || parent[v] == Some(c)))
                .collect();
            let target = nbrs
                .iter()
                .copied()
                .find(|&u| bag_of[v] & !bag_of[u] == 0);
            if let Some(u) = target {
                alive[v] = false;
                let vp = parent[v];
                for c in 0..n {
                    if alive[c] && parent[c] == Some(v) {
                        parent[c] = if c == u { vp } else { Some(u) };
                    }
                }
                if parent[u] == Some(v) {
                    parent[u] = vp;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let root = (0..n).find(|&v| alive[v] && parent[v].is_none()).unwrap();

    // renumber breadth-first from the root
    let mut new_id = vec![usize::MAX; n];
    let mut order_bfs = vec![root];
    new_id[root] = 0;
    let mut i = 0;
    while i < order_bfs.len() {
        let x = order_bfs[i];
        i += 1;
        let mut kids: Vec<usize> = (0..n).filter(|&c| alive[c] && parent[c] == Some(x)).collect();
        kids.sort_by_key(|&c| bag_of[c].trailing_zeros());
        for c in kids {
            new_id[c] = order_bfs.len();
            order_bfs.push(c);
        }
    }
    let bags = order_bfs
        .iter()
        .enumerate()
        .map(|(id, &x)| Bag {
            id,
            vertices: (0..n).filter(|&i| bag_of[x] >> i & 1 == 1).map(|i| m.ids[i]).collect(),
            origin: BagOrigin::Plain,
            separators: Vec::new(),
        })
        .collect();
    let parent = order_bfs.iter().map(|&x| parent[x].map(|p| new_id[p])).collect();
    Ok(TreeDecomp { bags, parent, root: 0 })
}

/// Closed-form decomposition of the multi-star gadget: root bag holds the
/// centres, and bag j adds the j-th leaf of every star.
pub fn star_gadget_decomposition(centers: &[VertexId], leaves: &[Vec<VertexId>]) -> TreeDecomp {
    let b0: BTreeSet<VertexId> = centers.iter().copied().collect();
    let mut bags = vec![Bag { id: 0, vertices: b0.clone(), origin: BagOrigin::Plain, separators: Vec::new() }];
    let mut parent = vec![None];
    for (j, group) in leaves.iter().enumerate() {
        let mut vs = b0.clone();
        vs.extend(group.iter().copied());
        bags.push(Bag { id: j + 1, vertices: vs, origin: BagOrigin::Plain, separators: Vec::new() });
        parent.push(Some(0));
    }
    TreeDecomp { bags, parent, root: 0 }
}

/// Tree decomposition of the glued graph built from a normalized component
/// tree: one bag per p-type node, the decomposition bags of each c-type node,
/// and one link per tree edge. A link into a c-type node lands on the bag
/// containing the shared set that is closest to that decomposition's root.
/// Bags are renumbered breadth-first from the root node's bag.
pub fn build_tprime(t: &ComponentTree) -> Result<TreeDecomp> {
    let mut bags: Vec<Bag> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    // per node: (local decomposition, global id of its local bag 0)
    let mut locals: Vec<Option<(TreeDecomp, usize)>> = Vec::new();
    let mut p_bag: Vec<usize> = Vec::new();
    for (ni, node) in t.nodes.iter().enumerate() {
        let first = bags.len();
        p_bag.push(first);
        match node.kind {
            NodeKind::PType => {
                bags.push(Bag {
                    id: first,
                    vertices: node.vertex_set().clone(),
                    origin: BagOrigin::PType { node: ni },
                    separators: node.separating_sets.clone(),
                });
                adj.push(Vec::new());
                locals.push(None);
            }
            NodeKind::CType => {
                let td = match &node.decomposition {
                    Some(td) => {
                        td.validate(&node.graph)?;
                        td.clone()
                    }
                    None => tree_decompose(&node.graph, node.graph.vertex_count())?,
                };
                for (li, b) in td.bags.iter().enumerate() {
                    bags.push(Bag {
                        id: first + li,
                        vertices: b.vertices.clone(),
                        origin: BagOrigin::CType { node: ni, local: li },
                        separators: node
                            .separating_sets
                            .iter()
                            .filter(|s| s.is_subset(&b.vertices))
                            .cloned()
                            .collect(),
                    });
                    adj.push(Vec::new());
                }
                for (a, b) in td.tree_edges() {
                    adj[first + a].push(first + b);
                    adj[first + b].push(first + a);
                }
                locals.push(Some((td, first)));
            }
        }
    }
    let link = |ni: usize, sep: &BTreeSet<VertexId>| -> Result<usize> {
        match &locals[ni] {
            None => Ok(p_bag[ni]),
            Some((td, first)) => (0..td.len())
                .filter(|&b| sep.is_subset(&td.bags[b].vertices))
                .min_by_key(|&b| (td.depth(b), b))
                .map(|b| first + b)
                .ok_or_else(|| {
                    Error::structural(format!("no bag of c-type node {ni} contains its separating set {sep:?}"))
                }),
        }
    };
    for e in &t.edges {
        let (x, y) = (link(e.a, &e.separator)?, link(e.b, &e.separator)?);
        adj[x].push(y);
        adj[y].push(x);
    }
    let root = match &locals[t.root] {
        None => p_bag[t.root],
        Some((td, first)) => first + td.root,
    };
    // breadth-first renumbering so that parents precede children
    let mut order = vec![root];
    let mut par_old: Vec<Option<usize>> = vec![None; bags.len()];
    let mut seen = vec![false; bags.len()];
    seen[root] = true;
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        let mut ns = adj[x].clone();
        ns.sort();
        for y in ns {
            if !seen[y] {
                seen[y] = true;
                par_old[y] = Some(x);
                order.push(y);
            }
        }
    }
    if order.len() != bags.len() {
        return Err(Error::structural("component tree is disconnected"));
    }
    let mut new_id = vec![0; bags.len()];
    for (k, &x) in order.iter().enumerate() {
        new_id[x] = k;
    }
    let parent = order.iter().map(|&x| par_old[x].map(|p| new_id[p])).collect();
    let bags = order
        .iter()
        .enumerate()
        .map(|(k, &x)| Bag { id: k, ..bags[x].clone() })
        .collect();
    Ok(TreeDecomp { bags, parent, root: 0 })
}

/// Connected components of a bag subset, by brute force over tree adjacency.
pub fn is_connected_bag_set(td: &TreeDecomp, set: &BTreeSet<usize>) -> bool {
    let Some(&start) = set.iter().next() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut q = VecDeque::from([start]);
    while let Some(x) = q.pop_front() {
        for y in td.neighbors(x) {
            if set.contains(&y) && seen.insert(y) {
                q.push_back(y);
            }
        }
    }
    seen.len() == set.len()
}

/// Bags keyed by id, as a map from bag to vertex list (for reports).
pub fn bag_map(td: &TreeDecomp) -> BTreeMap<usize, Vec<VertexId>> {
    td.bags.iter().map(|b| (b.id, b.vertices.iter().copied().collect())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u32) -> Graph {
        let mut es = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                es.push((i, j));
            }
        }
        Graph::from_edges(n, &es).unwrap()
    }

    fn cycle(n: u32) -> Graph {
        let es: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &es).unwrap()
    }

    /// Independent oracle: minimum over all elimination orders (n <= 7).
    fn brute_treewidth(g: &Graph) -> usize {
        let ids: Vec<VertexId> = g.vertices().collect();
        let n = ids.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = usize::MAX;
        fn heap(k: usize, p: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if k <= 1 {
                f(p);
                return;
            }
            for i in 0..k {
                heap(k - 1, p, f);
                let j = if k.is_multiple_of(2) { i } else { 0 };
                p.swap(j, k - 1);
            }
        }
        let base: Vec<BTreeSet<usize>> = (0..n)
            .map(|i| g.neighbors(ids[i]).iter().map(|v| ids.binary_search(v).unwrap()).collect())
            .collect();
        heap(n, &mut perm, &mut |p| {
            let mut adj = base.clone();
            let mut gone = vec![false; n];
            let mut w = 0;
            for &v in p {
                let nb: Vec<usize> = adj[v].iter().copied().filter(|&u| !gone[u]).collect();
                w = w.max(nb.len());
                for &a in &nb {
                    for &b in &nb {
                        if a != b {
                            adj[a].insert(b);
                        }
                    }
                }
                gone[v] = true;
            }
            best = best.min(w);
        });
        best
    }

    #[test]
    fn treewidth_matches_brute_force() {
        let graphs = [
            complete(4),
            complete(5),
            cycle(5),
            cycle(6),
            Graph::from_edges(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]).unwrap(),
            Graph::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (0, 3), (2, 5)]).unwrap(),
        ];
        for g in &graphs {
            assert_eq!(treewidth(g).unwrap(), brute_treewidth(g));
        }
    }

    #[test]
    fn large_three_tree_uses_min_fill() {
        // each new vertex joins a triangle of earlier ones
        let mut es = vec![(0, 1), (0, 2), (1, 2)];
        for v in 3..30u32 {
            let (a, b, c) = (v - 1, v - 2, v - 3);
            es.extend([(a, v), (b, v), (c, v)]);
        }
        let g = Graph::from_edges(30, &es).unwrap();
        assert!(g.vertex_count() > MAX_EXACT_VERTICES);
        let td = tree_decompose(&g, 3).unwrap();
        td.validate(&g).unwrap();
        assert_eq!(td.width(), 3);
        assert_eq!(treewidth_at_most(&g, 3), Some(true));
        assert_eq!(treewidth_at_most(&g, 2), None);
        assert!(matches!(tree_decompose(&g, 2), Err(Error::Config(_))));
    }

    #[test]
    fn tree_gives_edge_bags() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let td = tree_decompose(&g, 1).unwrap();
        td.validate(&g).unwrap();
        assert_eq!(td.len(), 4);
        assert!(td.bags.iter().all(|b| b.vertices.len() == 2));
    }

    #[test]
    fn k4_is_one_bag() {
        let td = tree_decompose(&complete(4), 3).unwrap();
        assert_eq!(td.len(), 1);
        assert_eq!(td.bags[0].vertices.len(), 4);
    }

    #[test]
    fn c5_is_path_of_three_bags() {
        let g = cycle(5);
        let td = tree_decompose(&g, 2).unwrap();
        td.validate(&g).unwrap();
        assert_eq!(td.len(), 3);
        assert!(td.bags.iter().all(|b| b.vertices.len() == 3));
        let degrees: Vec<usize> = (0..3).map(|b| td.neighbors(b).len()).collect();
        let mut sorted = degrees.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 1, 2]);
    }

    #[test]
    fn width_exceeded_reports_actual() {
        assert!(matches!(
            tree_decompose(&complete(6), 4),
            Err(Error::WidthExceeded { width: 4, actual: 5 })
        ));
    }

    #[test]
    fn star_gadget_has_width_five() {
        let c: Vec<VertexId> = (0..3).map(VertexId).collect();
        let leaves: Vec<Vec<VertexId>> =
            (0..3).map(|j| (0..3).map(|i| VertexId(10 + 3 * j + i)).collect()).collect();
        let td = star_gadget_decomposition(&c, &leaves);
        assert_eq!(td.len(), 4);
        assert_eq!(td.width(), 5);
    }

    #[test]
    fn path_and_ancestry() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let td = tree_decompose(&g, 1).unwrap();
        let leaves: Vec<usize> = (0..td.len()).filter(|&b| td.children(b).is_empty()).collect();
        let p = td.path(leaves[0], *leaves.last().unwrap());
        assert_eq!(p.first(), Some(&leaves[0]));
        assert!(td.is_ancestor(td.root, leaves[0]));
    }

    mod tprime {
        use super::*;
        use crate::decompose::{ComponentNode, ComponentTree, NodeKind};
        use crate::generate::{fixtures, generate_instance, GenParams};
        use crate::graph::{EdgeId, EdgeTag};
        use crate::normalize::normalize;

        fn vs(xs: &[u32]) -> BTreeSet<VertexId> {
            xs.iter().map(|&x| VertexId(x)).collect()
        }

        #[test]
        fn two_ptype_nodes_give_two_linked_bags() {
            let g = fixtures::two_k4();
            let t = crate::decompose::decompose(&g, 3).unwrap();
            assert_eq!(t.nodes.len(), 2);
            let td = build_tprime(&t).unwrap();
            assert_eq!(td.len(), 2);
            assert_eq!(td.parent, vec![None, Some(0)]);
            td.validate(&t.reassemble()).unwrap();
        }

        #[test]
        fn single_ctype_node_keeps_its_decomposition() {
            let g = fixtures::complete(5);
            let t = ComponentTree::single(g.clone(), NodeKind::CType);
            let td = build_tprime(&t).unwrap();
            assert_eq!(td.len(), 1);
            assert_eq!(td.bags[0].vertices.len(), 5);
        }

        #[test]
        fn ptype_node_links_to_gadget_leaf_bag() {
            // triangle {0,1,2} shared by three K4s; after the multi-star gadget
            // each K4 hangs off a bag of six vertices
            let mut nodes = Vec::new();
            for apex in [3u32, 4, 5] {
                let mut g = Graph::new();
                for v in [0, 1, 2, apex] {
                    g.add_vertex(VertexId(v));
                }
                let mut id = apex * 10;
                for (a, b) in [(0, apex), (1, apex), (2, apex)] {
                    g.add_edge(EdgeId(id), VertexId(a), VertexId(b), EdgeTag::Real).unwrap();
                    id += 1;
                }
                for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                    g.add_edge(EdgeId(id), VertexId(a), VertexId(b), EdgeTag::Virtual).unwrap();
                    id += 1;
                }
                nodes.push(ComponentNode::new(g, NodeKind::PType));
            }
            let mut t = ComponentTree { nodes, edges: Vec::new(), root: 0 };
            t.add_edge(0, 1, vs(&[0, 1, 2]));
            t.add_edge(0, 2, vs(&[0, 1, 2]));
            let n = normalize(&t).unwrap();
            let td = build_tprime(&n.tree).unwrap();
            assert_eq!(td.len(), 3 + 4);
            for b in &td.bags {
                if let BagOrigin::PType { .. } = b.origin {
                    let nbrs = td.neighbors(b.id);
                    assert_eq!(nbrs.len(), 1);
                    assert_eq!(td.bags[nbrs[0]].vertices.len(), 6);
                }
            }
            td.validate(&n.tree.reassemble()).unwrap();
        }

        #[test]
        fn generated_instances_give_valid_decompositions() {
            for seed in 0..30 {
                for bipartite in [false, true] {
                    let inst = generate_instance(seed, &GenParams { bipartite, ..GenParams::default() });
                    let n = normalize(&inst.tree).unwrap();
                    let td = build_tprime(&n.tree).unwrap();
                    td.validate(&n.tree.reassemble()).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
                    for e in &n.tree.edges {
                        assert!(td.bags.iter().any(|b| e.separator.is_subset(&b.vertices)));
                    }
                    assert!((1..td.len()).all(|b| td.parent[b].unwrap() < b));
                }
            }
        }
    }
}
