//! Reweighting after a batch of edge insertions into a bipartite graph that
//! already carries a nonzero circulation. Old edges keep their weights; the
//! new edges get a family of candidate weights built from residues of `2^j`
//! modulo small primes, at least one of which isolates the minimum-weight
//! perfect matching. Deletions need no new weights at all.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cycles::for_each_simple_cycle;
use crate::error::{Error, Result};
use crate::graph::{Cycle, DirectedEdge, EdgeId, Graph};
use crate::isolation::{audit_perfect_matchings, for_each_perfect_matching, EdgeWeights, MatchingAudit};

/// Old (fictitious) edges and the newly inserted (real) edges `e_1..e_N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePartition {
    pub fictitious: Vec<EdgeId>,
    pub real: Vec<EdgeId>,
}

impl EdgePartition {
    /// Real edges are `inserted`, in the given order; everything else in `g`
    /// is fictitious.
    pub fn new(g: &Graph, inserted: &[EdgeId]) -> Result<Self> {
        let real_set: BTreeSet<EdgeId> = inserted.iter().copied().collect();
        if real_set.len() != inserted.len() {
            return Err(Error::Parameter("inserted edge listed twice".into()));
        }
        if let Some(e) = inserted.iter().find(|e| !g.has_edge(**e)) {
            return Err(Error::Parameter(format!("inserted edge {e} is not in the graph")));
        }
        let fictitious = g.edges().map(|e| e.id).filter(|e| !real_set.contains(e)).collect();
        Ok(EdgePartition { fictitious, real: inserted.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.real.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynConfig {
    /// Largest batch accepted.
    pub max_real: usize,
    /// Primes have at most `ceil(c0 * log2(4N))` bits.
    pub c0: u32,
}

impl Default for DynConfig {
    fn default() -> Self {
        DynConfig { max_real: 8, c0: 1 }
    }
}

/// `l = ceil(log2 N)`, and 1 when `N <= 2`.
pub fn stages(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (n as u64).next_power_of_two().trailing_zeros() as usize
    }
}

pub fn prime_bits(n: usize, c0: u32) -> u32 {
    let x = (4 * n.max(1)) as f64;
    (c0 as f64 * x.log2()).ceil() as u32
}

/// Odd primes below `2^bits`. 2 is left out: `2^j mod 2 = 0` would erase
/// every real edge.
pub fn odd_primes(bits: u32) -> Vec<u64> {
    let limit = 1u64 << bits;
    (3..limit).step_by(2).filter(|&p| (3..).step_by(2).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

/// `w_0(e_j) = 2^j` on the real edges, 0 on the old ones.
pub fn base_weights(part: &EdgePartition) -> EdgeWeights {
    let mut w: EdgeWeights = part.fictitious.iter().map(|&e| (e, BigInt::zero())).collect();
    for (j, &e) in part.real.iter().enumerate() {
        w.insert(e, BigInt::one() << (j + 1));
    }
    w
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub primes: Vec<u64>,
    /// Per-stage base `B`.
    #[serde(with = "crate::io::bigint_string")]
    pub b: BigInt,
    /// Multiplier of `W_l` in the final weights.
    #[serde(with = "crate::io::bigint_string")]
    pub scale: BigInt,
    /// `W_l` on the real edges.
    #[serde(with = "crate::io::bigint_map")]
    pub staged: BTreeMap<EdgeId, BigInt>,
    #[serde(with = "crate::io::bigint_map")]
    pub weights: BTreeMap<EdgeId, BigInt>,
}

/// Stage weights `w_i(e_j) = 2^j mod p_i` for one prime vector.
fn stage_weights(part: &EdgePartition, primes: &[u64]) -> Vec<BTreeMap<EdgeId, u64>> {
    primes
        .iter()
        .map(|&p| {
            part.real
                .iter()
                .enumerate()
                .map(|(j, &e)| {
                    // 2^(j+1) mod p by repeated doubling
                    let r = (0..=j).fold(1u64, |acc, _| acc * 2 % p);
                    (e, r)
                })
                .collect()
        })
        .collect()
}

/// `W_1 = w_1`, `W_{i+1} = W_i * B + w_{i+1}`, with `B` one more than
/// `N` times the largest stage weight.
fn accumulate(part: &EdgePartition, stage: &[BTreeMap<EdgeId, u64>]) -> (BigInt, Vec<BTreeMap<EdgeId, BigInt>>) {
    let max = stage.iter().flat_map(|s| s.values()).copied().max().unwrap_or(0);
    let b = BigInt::from(part.n() as u64) * BigInt::from(max) + 1;
    let mut acc: BTreeMap<EdgeId, BigInt> = part.real.iter().map(|&e| (e, BigInt::zero())).collect();
    let mut out = Vec::new();
    for s in stage {
        for (e, x) in acc.iter_mut() {
            *x = &*x * &b + BigInt::from(s[e]);
        }
        out.push(acc.clone());
    }
    (b, out)
}

/// All candidates `S * W_l + w_old` over prime vectors in lexicographic
/// order. `S` exceeds twice the total old weight so any difference on the
/// real edges outweighs every difference on the old ones. Old edges keep
/// `w_old` exactly. A batch without insertions gives no candidates.
pub fn candidate_families(part: &EdgePartition, w_old: &EdgeWeights, cfg: &DynConfig) -> Result<Vec<Candidate>> {
    let n = part.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > cfg.max_real {
        return Err(Error::Config(format!("{n} insertions exceed the configured bound {}", cfg.max_real)));
    }
    for e in &part.fictitious {
        if !w_old.contains_key(e) {
            return Err(Error::IncompleteAssignment(*e));
        }
    }
    let primes = odd_primes(prime_bits(n, cfg.c0));
    if primes.is_empty() {
        return Err(Error::Config("no odd primes within the bit budget".into()));
    }
    let l = stages(n);
    let old_total: BigInt = part.fictitious.iter().map(|e| w_old[e].abs()).sum();
    let floor: BigInt = old_total * 2 + 1;
    let mut out = Vec::new();
    let mut idx = vec![0usize; l];
    loop {
        let pv: Vec<u64> = idx.iter().map(|&i| primes[i]).collect();
        let stage = stage_weights(part, &pv);
        let (b, acc) = accumulate(part, &stage);
        let staged = acc.last().unwrap().clone();
        let scale = b.clone().max(floor.clone());
        let mut weights: BTreeMap<EdgeId, BigInt> =
            part.fictitious.iter().map(|&e| (e, w_old[&e].clone())).collect();
        for (&e, x) in &staged {
            weights.insert(e, &scale * x);
        }
        out.push(Candidate { primes: pv, b, scale, staged, weights });
        // odometer over prime indices
        let mut k = l;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < primes.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Upper bound on the family size: `(number of odd primes)^l`.
pub fn family_bound(n: usize, cfg: &DynConfig) -> usize {
    odd_primes(prime_bits(n, cfg.c0)).len().pow(stages(n) as u32)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub candidate: Candidate,
    pub audit: MatchingAudit,
}

/// The first candidate under which the minimum-weight perfect matching is
/// unique (or the graph has none). Fails with the tie of every candidate
/// summarised when none isolates.
pub fn select_isolating(candidates: &[Candidate], g: &Graph) -> Result<Selection> {
    let mut ties = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let a = audit_perfect_matchings(g, &c.weights)?;
        if a.tie.is_none() {
            return Ok(Selection { index: i, candidate: c.clone(), audit: a });
        }
        ties.push(format!("{:?}", c.primes));
    }
    Err(Error::IsolationViolated(format!(
        "none of {} candidates isolates a perfect matching; tied prime vectors: {}",
        candidates.len(),
        ties.join(" ")
    )))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Update {
    pub partition: EdgePartition,
    pub family_size: usize,
    /// `None` when nothing was inserted and the old weights are reused.
    pub selected: Option<Selection>,
    #[serde(with = "crate::io::bigint_map")]
    pub weights: BTreeMap<EdgeId, BigInt>,
}

/// One batch step on the current graph `g` (deletions already applied,
/// insertions present). Without insertions the old weights carry over
/// verbatim; otherwise the first isolating candidate is taken.
pub fn update(g: &Graph, inserted: &[EdgeId], w_old: &EdgeWeights, cfg: &DynConfig) -> Result<Update> {
    let partition = EdgePartition::new(g, inserted)?;
    if partition.real.is_empty() {
        return Ok(Update { weights: after_deletions(g, w_old)?, partition, family_size: 0, selected: None });
    }
    let candidates = candidate_families(&partition, w_old, cfg)?;
    let s = select_isolating(&candidates, g)?;
    Ok(Update { weights: s.candidate.weights.clone(), partition, family_size: candidates.len(), selected: Some(s) })
}

/// Union of the minimum-weight perfect matchings of `g` under `w`, as a
/// subgraph on the same vertices.
pub fn min_pm_union(g: &Graph, w: &BTreeMap<EdgeId, BigInt>) -> Result<Graph> {
    let mut best: Option<BigInt> = None;
    let mut union: BTreeSet<EdgeId> = BTreeSet::new();
    for_each_perfect_matching(g, |m| {
        let x: BigInt = m.iter().map(|e| w.get(e).cloned().unwrap_or_default()).sum();
        match &best {
            Some(b) if x > *b => {}
            Some(b) if x == *b => union.extend(m.iter().copied()),
            _ => {
                best = Some(x);
                union = m.iter().copied().collect();
            }
        }
    })?;
    let mut out = Graph::new();
    for v in g.vertices() {
        out.add_vertex(v);
    }
    for e in g.edges().filter(|e| union.contains(&e.id)) {
        out.add_edge(e.id, e.u, e.v, e.tag)?;
    }
    if let Some(bp) = g.bipartition() {
        out.set_bipartition(bp.clone())?;
    }
    Ok(out)
}

/// `G_0 = g`, `G_{i+1}` = union of minimum-weight perfect matchings of `G_i`
/// under `W_{i+1}`.
pub fn staged_graphs(g: &Graph, part: &EdgePartition, primes: &[u64]) -> Result<Vec<Graph>> {
    let stage = stage_weights(part, primes);
    let (_, acc) = accumulate(part, &stage);
    let mut out = vec![g.clone()];
    for w in &acc {
        let next = min_pm_union(out.last().unwrap(), w)?;
        out.push(next);
    }
    Ok(out)
}

fn real_count(c: &Cycle, real: &BTreeSet<EdgeId>) -> usize {
    c.edges().iter().filter(|d| real.contains(&d.edge)).count()
}

/// Whether `g_i` has no simple cycle with between 1 and `2^(i+1)` real
/// edges. Cycles of old edges only are not counted: their real weight is 0
/// at every stage and they are separated by the old circulation instead.
pub fn check_invariant_stage(g_i: &Graph, i: usize, real: &BTreeSet<EdgeId>) -> Result<bool> {
    let limit = 1usize << (i + 1);
    let mut ok = true;
    for_each_simple_cycle(g_i, usize::MAX, |c| {
        let k = real_count(c, real);
        if k >= 1 && k <= limit {
            ok = false;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    Ok(ok)
}

/// The 4-tuple of a cycle traversed from its least real edge `f_0` in the
/// direction `d0`: the real edges at positions `0, q, 2q, 3q` of the
/// traversal, where `q = floor(k / 4)`. `None` when `k < 4`.
pub fn four_tuple(c: &Cycle, real_order: &BTreeMap<EdgeId, usize>, forward: bool) -> Option<[DirectedEdge; 4]> {
    let edges: Vec<DirectedEdge> = if forward {
        c.edges().to_vec()
    } else {
        c.reversed().edges().to_vec()
    };
    let reals: Vec<usize> = (0..edges.len()).filter(|&i| real_order.contains_key(&edges[i].edge)).collect();
    let k = reals.len();
    if k < 4 {
        return None;
    }
    let start = *reals.iter().min_by_key(|&&i| real_order[&edges[i].edge]).unwrap();
    let rotated: Vec<DirectedEdge> = edges[start..].iter().chain(&edges[..start]).copied().collect();
    let r: Vec<DirectedEdge> = rotated.into_iter().filter(|d| real_order.contains_key(&d.edge)).collect();
    let q = k / 4;
    Some([r[0], r[q], r[2 * q], r[3 * q]])
}

/// Whether distinct cycles of `g` with between 4 and `2^(i+2)` real edges
/// always have distinct 4-tuples (both traversal directions considered).
/// Returns the first shared tuple otherwise.
pub fn check_four_tuples(g: &Graph, i: usize, part: &EdgePartition) -> Result<Option<[DirectedEdge; 4]>> {
    let order: BTreeMap<EdgeId, usize> = part.real.iter().enumerate().map(|(j, &e)| (e, j)).collect();
    let limit = 1usize << (i + 2);
    let mut seen: BTreeMap<[DirectedEdge; 4], usize> = BTreeMap::new();
    let mut clash = None;
    let mut index = 0usize;
    for_each_simple_cycle(g, usize::MAX, |c| {
        index += 1;
        let k = c.edges().iter().filter(|d| order.contains_key(&d.edge)).count();
        if k > limit {
            return ControlFlow::Continue(());
        }
        for fwd in [true, false] {
            if let Some(t) = four_tuple(c, &order, fwd) {
                if let Some(&other) = seen.get(&t) {
                    if other != index {
                        clash = Some(t);
                        return ControlFlow::Break(());
                    }
                }
                seen.insert(t, index);
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(clash)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OldOrderAudit {
    /// Old-only perfect matchings, and those using a new edge.
    pub old_only: usize,
    pub with_new: usize,
    /// Whether every old-only matching is lighter than every matching using
    /// a new edge.
    pub old_lighter: bool,
    /// Whether the old edges carry exactly `w_old`.
    pub old_weights_kept: bool,
}

pub fn audit_old_order(g: &Graph, part: &EdgePartition, w_old: &EdgeWeights, c: &Candidate) -> Result<OldOrderAudit> {
    let real: BTreeSet<EdgeId> = part.real.iter().copied().collect();
    let mut heaviest_old: Option<BigInt> = None;
    let mut lightest_new: Option<BigInt> = None;
    let (mut old_only, mut with_new) = (0, 0);
    for_each_perfect_matching(g, |m| {
        let x: BigInt = m.iter().map(|e| &c.weights[e]).sum();
        if m.iter().any(|e| real.contains(e)) {
            with_new += 1;
            if lightest_new.as_ref().is_none_or(|y| x < *y) {
                lightest_new = Some(x);
            }
        } else {
            old_only += 1;
            if heaviest_old.as_ref().is_none_or(|y| x > *y) {
                heaviest_old = Some(x);
            }
        }
    })?;
    let old_lighter = match (heaviest_old, lightest_new) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    };
    let old_weights_kept = part.fictitious.iter().all(|e| c.weights[e] == w_old[e]);
    Ok(OldOrderAudit { old_only, with_new, old_lighter, old_weights_kept })
}

/// Weights after a deletion-only step: `w_old` restricted to the survivors.
pub fn after_deletions(g: &Graph, w_old: &EdgeWeights) -> Result<EdgeWeights> {
    g.edges()
        .map(|e| w_old.get(&e.id).cloned().map(|x| (e.id, x)).ok_or(Error::IncompleteAssignment(e.id)))
        .collect()
}
