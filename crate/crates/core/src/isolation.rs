//! Isolation consequences of nonzero circulation: a unique minimum-weight
//! bipartite perfect matching, and unique minimum-weight paths once every
//! edge is shifted by a large constant `M`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cycles::for_each_simple_path;
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, EdgeId, Graph, VertexId, WeightAssignment};

/// Undirected edge weights.
pub type EdgeWeights = BTreeMap<EdgeId, BigInt>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub edges: Vec<EdgeId>,
    #[serde(with = "crate::io::bigint_string")]
    pub weight: BigInt,
}

/// `w_und(e) = w(e directed left to right)`.
pub fn matching_weights(g: &Graph, w: &WeightAssignment) -> Result<EdgeWeights> {
    let bp = match g.bipartition() {
        Some(bp) => bp.clone(),
        None => g.two_coloring().ok_or(Error::NotBipartite)?,
    };
    let mut out = EdgeWeights::new();
    for e in g.edges() {
        let d = if bp.is_left(e.u) { DirectedEdge::forward(e.id) } else { DirectedEdge::backward(e.id) };
        if bp.is_left(e.u) == bp.is_left(e.v) {
            return Err(Error::NotBipartite);
        }
        out.insert(e.id, w.weight(d)?);
    }
    Ok(out)
}

fn sides(g: &Graph) -> Result<(Vec<VertexId>, Vec<VertexId>)> {
    let bp = match g.bipartition() {
        Some(bp) => bp.clone(),
        None => g.two_coloring().ok_or(Error::NotBipartite)?,
    };
    let (l, r): (Vec<VertexId>, Vec<VertexId>) = g.vertices().partition(|&v| bp.is_left(v));
    Ok((l, r))
}

fn total(edges: &[EdgeId], w: &EdgeWeights) -> BigInt {
    edges.iter().map(|e| &w[e]).sum()
}

/// Minimum-weight matching among those of maximum cardinality, by successive
/// shortest augmenting paths with Bellman-Ford over exact integers.
pub fn min_weight_max_matching(g: &Graph, w: &EdgeWeights) -> Result<Matching> {
    let (left, _) = sides(g)?;
    let left_set: BTreeSet<VertexId> = left.iter().copied().collect();
    let mut mate: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
    loop {
        // residual arcs: unmatched edges left -> right, matched edges right -> left
        let mut dist: BTreeMap<VertexId, BigInt> = BTreeMap::new();
        let mut pred: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
        for &v in &left {
            if !mate.contains_key(&v) {
                dist.insert(v, BigInt::zero());
            }
        }
        for _ in 0..g.vertex_count() {
            let mut changed = false;
            for e in g.edges() {
                let (l, r) = if left_set.contains(&e.u) { (e.u, e.v) } else { (e.v, e.u) };
                let matched = mate.get(&l) == Some(&e.id);
                let (from, to, c) = if matched { (r, l, -w[&e.id].clone()) } else { (l, r, w[&e.id].clone()) };
                let Some(df) = dist.get(&from) else { continue };
                let cand = df + c;
                if dist.get(&to).is_none_or(|dt| cand < *dt) {
                    dist.insert(to, cand);
                    pred.insert(to, e.id);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let target = g
            .vertices()
            .filter(|v| !left_set.contains(v) && !mate.contains_key(v) && dist.contains_key(v))
            .min_by(|a, b| dist[a].cmp(&dist[b]).then(a.cmp(b)));
        let Some(mut x) = target else { break };
        // flip the augmenting path back to its free left end
        loop {
            let e = pred[&x];
            let l = g.edge(e).unwrap().other(x);
            let old = mate.insert(l, e);
            mate.insert(x, e);
            match old {
                Some(o) => x = g.edge(o).unwrap().other(l),
                None => break,
            }
        }
    }
    let mut edges: Vec<EdgeId> = left.iter().filter_map(|v| mate.get(v).copied()).collect();
    edges.sort();
    edges.dedup();
    let weight = total(&edges, w);
    Ok(Matching { edges, weight })
}

/// Calls `visit` on every perfect matching.
pub fn for_each_perfect_matching<F: FnMut(&[EdgeId])>(g: &Graph, mut visit: F) -> Result<()> {
    let (left, right) = sides(g)?;
    if left.len() != right.len() {
        return Ok(());
    }
    let mut used: BTreeSet<VertexId> = BTreeSet::new();
    let mut chosen = Vec::new();

    fn go<F: FnMut(&[EdgeId])>(
        g: &Graph,
        left: &[VertexId],
        used: &mut BTreeSet<VertexId>,
        chosen: &mut Vec<EdgeId>,
        visit: &mut F,
    ) {
        let Some(&u) = left.iter().find(|v| !used.contains(v)) else {
            let mut m = chosen.clone();
            m.sort();
            visit(&m);
            return;
        };
        used.insert(u);
        for &e in g.incident(u) {
            let v = g.edge(e).unwrap().other(u);
            if used.insert(v) {
                chosen.push(e);
                go(g, left, used, chosen, visit);
                chosen.pop();
                used.remove(&v);
            }
        }
        used.remove(&u);
    }

    go(g, &left, &mut used, &mut chosen, &mut visit);
    Ok(())
}

/// Calls `visit` on every matching of maximum cardinality.
pub fn for_each_maximum_matching<F: FnMut(&[EdgeId])>(g: &Graph, mut visit: F) -> Result<()> {
    let (left, _) = sides(g)?;
    let size = {
        let unit: EdgeWeights = g.edges().map(|e| (e.id, BigInt::zero())).collect();
        min_weight_max_matching(g, &unit)?.edges.len()
    };
    let mut used: BTreeSet<VertexId> = BTreeSet::new();
    let mut chosen = Vec::new();

    // each left vertex is matched or skipped; skips are bounded by |L| - size
    #[allow(clippy::too_many_arguments)]
    fn go<F: FnMut(&[EdgeId])>(
        g: &Graph,
        left: &[VertexId],
        i: usize,
        skips: usize,
        used: &mut BTreeSet<VertexId>,
        chosen: &mut Vec<EdgeId>,
        size: usize,
        visit: &mut F,
    ) {
        if chosen.len() == size {
            let mut m = chosen.clone();
            m.sort();
            visit(&m);
            return;
        }
        if i == left.len() {
            return;
        }
        let u = left[i];
        for &e in g.incident(u) {
            let v = g.edge(e).unwrap().other(u);
            if used.insert(v) {
                chosen.push(e);
                go(g, left, i + 1, skips, used, chosen, size, visit);
                chosen.pop();
                used.remove(&v);
            }
        }
        if skips > 0 {
            go(g, left, i + 1, skips - 1, used, chosen, size, visit);
        }
    }

    let skips = left.len() - size;
    go(g, &left, 0, skips, &mut used, &mut chosen, size, &mut visit);
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingAudit {
    pub count: usize,
    pub minimum: Option<Matching>,
    /// A second matching of minimum weight, if one exists.
    pub tie: Option<Matching>,
}

fn audit<E>(enumerate: E, w: &EdgeWeights) -> Result<MatchingAudit>
where
    E: FnOnce(&mut dyn FnMut(&[EdgeId])) -> Result<()>,
{
    let mut a = MatchingAudit::default();
    enumerate(&mut |m: &[EdgeId]| {
        a.count += 1;
        let x = total(m, w);
        match &a.minimum {
            Some(best) if x > best.weight => {}
            Some(best) if x == best.weight => {
                if a.tie.is_none() {
                    a.tie = Some(Matching { edges: m.to_vec(), weight: x });
                }
            }
            _ => {
                a.minimum = Some(Matching { edges: m.to_vec(), weight: x });
                a.tie = None;
            }
        }
    })?;
    Ok(a)
}

/// Exhaustive audit over all perfect matchings.
pub fn audit_perfect_matchings(g: &Graph, w: &EdgeWeights) -> Result<MatchingAudit> {
    audit(|f| for_each_perfect_matching(g, f), w)
}

/// Exhaustive audit over all maximum-cardinality matchings.
pub fn audit_maximum_matchings(g: &Graph, w: &EdgeWeights) -> Result<MatchingAudit> {
    audit(|f| for_each_maximum_matching(g, f), w)
}

fn tie_error(a: &MatchingAudit) -> Error {
    let (m1, m2) = (a.minimum.as_ref().unwrap(), a.tie.as_ref().unwrap());
    Error::IsolationViolated(format!(
        "matchings {:?} and {:?} both weigh {}",
        m1.edges.iter().map(|e| e.0).collect::<Vec<_>>(),
        m2.edges.iter().map(|e| e.0).collect::<Vec<_>>(),
        m1.weight
    ))
}

/// The unique minimum-weight perfect matching, or `None` without one.
pub fn extract_min_pm(g: &Graph, w: &EdgeWeights) -> Result<Option<Matching>> {
    let (left, right) = sides(g)?;
    let m = min_weight_max_matching(g, w)?;
    if left.len() != right.len() || m.edges.len() != left.len() {
        return Ok(None);
    }
    let a = audit_perfect_matchings(g, w)?;
    if a.tie.is_some() {
        return Err(tie_error(&a));
    }
    let best = a.minimum.expect("a perfect matching exists");
    if best != m {
        return Err(Error::structural("augmenting-path matching disagrees with enumeration"));
    }
    Ok(Some(m))
}

/// The unique minimum-weight maximum matching.
pub fn extract_min_max_matching(g: &Graph, w: &EdgeWeights) -> Result<Matching> {
    let m = min_weight_max_matching(g, w)?;
    let a = audit_maximum_matchings(g, w)?;
    if a.tie.is_some() {
        return Err(tie_error(&a));
    }
    match a.minimum {
        Some(best) if best == m => Ok(m),
        None if m.edges.is_empty() => Ok(m),
        _ => Err(Error::structural("augmenting-path matching disagrees with enumeration")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathTie {
    pub s: VertexId,
    pub t: VertexId,
    pub first: Vec<DirectedEdge>,
    pub second: Vec<DirectedEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathReport {
    #[serde(rename = "M", with = "crate::io::bigint_string")]
    pub m: BigInt,
    pub pairs: usize,
    pub paths: usize,
    pub ties: Vec<PathTie>,
    /// Pairs where the shortest-walk distance disagrees with the best path.
    pub distance_mismatches: Vec<(VertexId, VertexId)>,
}

impl PathReport {
    pub fn passed(&self) -> bool {
        self.ties.is_empty() && self.distance_mismatches.is_empty()
    }
}

/// `n * max|w| + 1`, the smallest shift making every `M + w(e)` dominate.
pub fn default_shift(g: &Graph, w: &WeightAssignment) -> BigInt {
    w.max_abs() * BigInt::from(g.vertex_count().max(1)) + 1
}

/// Shortest-walk distances from `s` under `M + w` on the bidirected graph.
fn walk_distances(g: &Graph, w: &WeightAssignment, m: &BigInt, s: VertexId) -> Result<BTreeMap<VertexId, BigInt>> {
    let mut dist = BTreeMap::from([(s, BigInt::zero())]);
    for _ in 0..g.vertex_count() {
        let mut changed = false;
        for e in g.edges() {
            for d in [DirectedEdge::forward(e.id), DirectedEdge::backward(e.id)] {
                let (a, b) = (d.tail(g), d.head(g));
                let Some(da) = dist.get(&a) else { continue };
                let cand = da + m + w.weight(d)?;
                if dist.get(&b).is_none_or(|db| cand < *db) {
                    dist.insert(b, cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(dist)
}

/// For every ordered pair in one component, checks that exactly one simple
/// path attains the minimum of `M * len + w` and that it matches the
/// shortest-walk distance.
pub fn unique_shortest_paths(g: &Graph, w: &WeightAssignment, m: &BigInt) -> Result<PathReport> {
    if w.max_abs() * BigInt::from(g.vertex_count().max(1)) >= *m {
        return Err(Error::Parameter(format!("shift {m} does not exceed n * max|w|")));
    }
    let mut report = PathReport { m: m.clone(), pairs: 0, paths: 0, ties: Vec::new(), distance_mismatches: Vec::new() };
    for s in g.vertices() {
        let dist = walk_distances(g, w, m, s)?;
        for t in g.vertices() {
            if s == t || !dist.contains_key(&t) {
                continue;
            }
            report.pairs += 1;
            let mut best: Option<(BigInt, Vec<DirectedEdge>)> = None;
            let mut tie: Option<Vec<DirectedEdge>> = None;
            let mut err = None;
            for_each_simple_path(g, s, t, |p| {
                report.paths += 1;
                let mut x = m * BigInt::from(p.len());
                for &d in p {
                    match w.weight(d) {
                        Ok(y) => x += y,
                        Err(e) => err = Some(e),
                    }
                }
                match &best {
                    Some((b, _)) if x > *b => {}
                    Some((b, _)) if x == *b => {
                        tie.get_or_insert_with(|| p.to_vec());
                    }
                    _ => {
                        best = Some((x, p.to_vec()));
                        tie = None;
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            let (bx, bp) = best.expect("connected pair has a path");
            if let Some(second) = tie {
                report.ties.push(PathTie { s, t, first: bp, second });
            }
            if dist[&t] != bx {
                report.distance_mismatches.push((s, t));
            }
        }
    }
    Ok(report)
}

/// Sum of `|w|` over the whole assignment.
pub fn total_abs(w: &WeightAssignment) -> BigInt {
    w.iter().map(|(_, x)| x.abs()).sum()
}
