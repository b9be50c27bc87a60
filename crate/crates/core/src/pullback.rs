//! Pulling weights and cycles back from the lifted graph to the glued graph,
//! and through the gadget map to the input graph; the end-to-end pipeline.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auxtree::{build_aux_tree, AuxTree};
use crate::cycles::for_each_simple_cycle;
use crate::decompose::{decompose, merge_ctype_neighbors, split_biconnected, ComponentTree};
use crate::error::{Error, Result};
use crate::gprime::{build_gprime, GPrime, LiftedEdge};
use crate::graph::{circulation, Cycle, DirectedEdge, EdgeId, Graph, VertexId, WeightAssignment};
use crate::normalize::{normalize, pull_circulation_through_gadget, Normalized};
use crate::treedec::{build_tprime, TreeDecomp};
use crate::weights::{assemble_wprime, WPrime};

/// Cancels consecutive `e, reverse(e)` pairs of a closed walk, cyclically,
/// and returns the remaining simple cycle.
pub fn cancel_reverse_pairs(g: &Graph, walk: &[DirectedEdge]) -> Result<Cycle> {
    let mut stack: Vec<DirectedEdge> = Vec::with_capacity(walk.len());
    for &d in walk {
        if stack.last() == Some(&d.reverse()) {
            stack.pop();
        } else {
            stack.push(d);
        }
    }
    // wrap-around cancellation
    let mut lo = 0;
    while stack.len() >= lo + 2 && stack[lo] == stack[stack.len() - 1].reverse() {
        lo += 1;
        stack.pop();
    }
    let edges = stack.split_off(lo);
    if edges.is_empty() {
        return Err(Error::structural("walk cancels to nothing"));
    }
    Cycle::new(g, edges)
}

/// For each edge `(u, v)` of the glued graph, the walk `P(u, v)` in the lifted
/// graph, traversed from `u` to `v`. The reverse walk is implied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullbackMap {
    pub paths: BTreeMap<EdgeId, Vec<DirectedEdge>>,
}

impl PullbackMap {
    pub fn walk(&self, d: DirectedEdge) -> Vec<DirectedEdge> {
        let p = &self.paths[&d.edge];
        if d.forward {
            p.clone()
        } else {
            p.iter().rev().map(|x| x.reverse()).collect()
        }
    }

    /// `P(C)` for a cycle of the glued graph.
    pub fn lift_cycle(&self, c: &Cycle) -> Vec<DirectedEdge> {
        c.edges().iter().flat_map(|&d| self.walk(d)).collect()
    }
}

/// Copy edges from the highest bag holding `v` down to bag `to`.
fn copy_chain(
    td: &TreeDecomp,
    copies: &BTreeMap<(VertexId, usize), EdgeId>,
    v: VertexId,
    to: usize,
) -> Result<Vec<DirectedEdge>> {
    let top = td.top_bag(v).ok_or_else(|| Error::structural(format!("vertex {v} is in no bag")))?;
    if !td.is_ancestor(top, to) {
        return Err(Error::structural(format!("highest bag of {v} is not above bag {to}")));
    }
    let mut chain = Vec::new();
    let mut b = to;
    while b != top {
        let e = copies
            .get(&(v, b))
            .ok_or_else(|| Error::structural(format!("missing copy edge of {v} into bag {b}")))?;
        chain.push(DirectedEdge::forward(*e));
        b = td.parent[b].unwrap();
    }
    chain.reverse();
    Ok(chain)
}

pub fn build_pullback_map(g: &Graph, gp: &GPrime) -> Result<PullbackMap> {
    let td = &gp.tprime;
    let copies: BTreeMap<(VertexId, usize), EdgeId> = gp
        .kinds
        .iter()
        .filter_map(|(&e, k)| match *k {
            LiftedEdge::Copy { vertex, child } => Some(((vertex, child), e)),
            LiftedEdge::Intra { .. } => None,
        })
        .collect();
    let mut paths = BTreeMap::new();
    for e in g.edges() {
        let lifted = *gp
            .intra_of
            .get(&e.id)
            .ok_or_else(|| Error::structural(format!("edge {} has no lifted copy", e.id)))?;
        let host = gp.association[&lifted];
        let mut walk = copy_chain(td, &copies, e.u, host)?;
        walk.push(DirectedEdge::forward(lifted));
        walk.extend(copy_chain(td, &copies, e.v, host)?.into_iter().rev().map(|d| d.reverse()));
        paths.insert(e.id, walk);
    }
    Ok(PullbackMap { paths })
}

/// `w(u, v) = sum of w' over P(u, v)`.
pub fn pull_weights(wp: &WeightAssignment, pm: &PullbackMap) -> Result<WeightAssignment> {
    let mut out = WeightAssignment::new();
    for (&e, walk) in &pm.paths {
        let mut s = BigInt::zero();
        for &d in walk {
            s += wp.weight(d)?;
        }
        out.set(e, s);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Treewidth bound for the non-planar pieces.
    pub width: usize,
    /// Enumerate the input's cycles and retry with larger constants on a
    /// zero circulation. `None` skips the check.
    pub verify_cap: Option<usize>,
    /// How many times `K` and `B_shift` may be doubled.
    pub max_boost: u32,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { width: 3, verify_cap: None, max_boost: 3 }
    }
}

/// Every intermediate artifact of one biconnected block.
#[derive(Clone, Debug)]
pub struct BlockRun {
    pub block: Graph,
    pub tree: ComponentTree,
    pub normalized: Normalized,
    /// The glued graph after normalization.
    pub glued: Graph,
    pub tprime: TreeDecomp,
    pub gprime: GPrime,
    pub aux: AuxTree,
    pub wprime: WPrime,
    pub pullback: PullbackMap,
    /// Weights on the glued graph.
    pub glued_weights: WeightAssignment,
    /// Weights on the block's edges.
    pub weights: WeightAssignment,
    pub boost: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "K", with = "crate::io::bigint_string")]
    pub k: BigInt,
    #[serde(rename = "B_shift", with = "crate::io::bigint_string")]
    pub b_shift: BigInt,
    pub m: usize,
    pub weights: WeightAssignment,
    pub max_bits: u64,
    /// SHA-256 of every intermediate artifact, keyed by name.
    pub provenance: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub blocks: Vec<BlockRun>,
    pub weights: WeightAssignment,
    pub manifest: Manifest,
}

pub fn sha256_json<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Some zero-circulation cycle of `g` under `w`, if any.
pub fn find_zero_cycle(g: &Graph, w: &WeightAssignment, cap: usize) -> Result<Option<Cycle>> {
    let mut witness = None;
    let mut failure = None;
    for_each_simple_cycle(g, cap, |c| match circulation(c, w) {
        Ok(x) if x.is_zero() => {
            witness = Some(c.clone());
            ControlFlow::Break(())
        }
        Ok(_) => ControlFlow::Continue(()),
        Err(e) => {
            failure = Some(e);
            ControlFlow::Break(())
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(witness),
    }
}

fn run_block(block: Graph, tree: ComponentTree, opts: &PipelineOptions) -> Result<BlockRun> {
    let normalized = normalize(&tree)?;
    let glued = normalized.tree.reassemble();
    normalized.map.validate(&block, &glued)?;
    let tprime = build_tprime(&normalized.tree)?;
    tprime.validate(&glued)?;
    let gprime = build_gprime(&glued, &tprime)?;
    let aux = build_aux_tree(&tprime)?;
    let pullback = build_pullback_map(&glued, &gprime)?;
    let mut boost = 0;
    loop {
        let wprime = assemble_wprime(&gprime, &normalized.tree, &aux, boost)?;
        let glued_weights = pull_weights(&wprime.weights, &pullback)?;
        let weights = pull_circulation_through_gadget(&glued_weights, &normalized.map)?;
        let witness = match opts.verify_cap {
            Some(cap) => find_zero_cycle(&block, &weights, cap)?,
            None => None,
        };
        match witness {
            None => {
                return Ok(BlockRun {
                    block,
                    tree,
                    normalized,
                    glued,
                    tprime,
                    gprime,
                    aux,
                    wprime,
                    pullback,
                    glued_weights,
                    weights,
                    boost,
                })
            }
            Some(c) if boost >= opts.max_boost => {
                return Err(Error::ZeroCirculation { vertices: c.vertices().to_vec() })
            }
            Some(_) => boost += 1,
        }
    }
}

fn finish(g0: &Graph, blocks: Vec<BlockRun>) -> Result<Run> {
    let mut weights = WeightAssignment::zero_on(g0);
    let mut k = BigInt::zero();
    let mut b_shift = BigInt::zero();
    let mut m = 0;
    let mut provenance = BTreeMap::new();
    provenance.insert("input".to_string(), sha256_json(g0)?);
    for (i, b) in blocks.iter().enumerate() {
        for (e, x) in b.weights.iter() {
            weights.set(e, x.clone());
        }
        k = k.max(b.wprime.k.clone());
        b_shift = b_shift.max(b.wprime.b_shift.clone());
        m = m.max(b.wprime.m);
        provenance.insert(format!("block{i}.tree"), sha256_json(&b.tree)?);
        provenance.insert(format!("block{i}.normalized"), sha256_json(&b.normalized.tree)?);
        provenance.insert(format!("block{i}.gadget_map"), sha256_json(&b.normalized.map)?);
        provenance.insert(format!("block{i}.tprime"), sha256_json(&b.tprime)?);
        provenance.insert(format!("block{i}.gprime"), sha256_json(&b.gprime)?);
        provenance.insert(format!("block{i}.aux"), sha256_json(&b.aux)?);
        provenance.insert(format!("block{i}.wprime"), sha256_json(&b.wprime.weights)?);
    }
    let max_bits = weights.max_bits();
    provenance.insert("weights".to_string(), sha256_json(&weights)?);
    let manifest = Manifest { k, b_shift, m, weights: weights.clone(), max_bits, provenance };
    Ok(Run { blocks, weights, manifest })
}

/// Decomposes each biconnected block of `g0` and builds nonzero-circulation
/// weights for it. Edges outside every cycle get weight 0.
pub fn end_to_end(g0: &Graph, opts: &PipelineOptions) -> Result<Run> {
    let g = g0.real_part();
    let mut runs = Vec::new();
    for block in split_biconnected(&g) {
        if block.edge_count() < 2 {
            continue;
        }
        let tree = merge_ctype_neighbors(decompose(&block, opts.width)?);
        runs.push(run_block(block, tree, opts)?);
    }
    finish(&g, runs)
}

/// Same as [`end_to_end`] with a caller-supplied component tree for the
/// whole graph.
pub fn end_to_end_with_tree(g0: &Graph, tree: &ComponentTree, opts: &PipelineOptions) -> Result<Run> {
    let g = g0.real_part();
    tree.validate(opts.width)?;
    let glued = tree.reassemble();
    if glued.vertex_set() != g.vertex_set()
        || glued.edges().count() != g.edge_count()
        || g.edges().any(|e| glued.edge(e.id).map(|x| !x.joins(e.u, e.v)).unwrap_or(true))
    {
        return Err(Error::invalid("component tree does not reassemble to the input graph"));
    }
    let run = run_block(g.clone(), tree.clone(), opts)?;
    finish(&g, vec![run])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::enumerate_simple_cycles;
    use crate::generate::{fixtures, generate_instance, GenParams};
    use crate::treedec::{Bag, BagOrigin};

    fn bag(id: usize, vs: &[u32]) -> Bag {
        Bag { id, vertices: vs.iter().map(|&v| VertexId(v)).collect(), origin: BagOrigin::Plain, separators: Vec::new() }
    }

    #[test]
    fn single_bag_paths_are_single_edges() {
        let g = fixtures::complete(4);
        let td = TreeDecomp { bags: vec![bag(0, &[0, 1, 2, 3])], parent: vec![None], root: 0 };
        let gp = build_gprime(&g, &td).unwrap();
        let pm = build_pullback_map(&g, &gp).unwrap();
        assert!(pm.paths.values().all(|p| p.len() == 1));
    }

    #[test]
    fn deep_endpoint_gives_copy_chain() {
        // u = 0 lives only in the root; v = 3 first appears two levels down
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let td = TreeDecomp {
            bags: vec![bag(0, &[0, 1, 2]), bag(1, &[0, 2]), bag(2, &[0, 2, 3])],
            parent: vec![None, Some(0), Some(1)],
            root: 0,
        };
        td.validate(&g).unwrap();
        let gp = build_gprime(&g, &td).unwrap();
        let pm = build_pullback_map(&g, &gp).unwrap();
        let p = &pm.paths[&EdgeId(3)];
        assert_eq!(p.len(), 3);
        let rev = pm.walk(DirectedEdge::backward(EdgeId(3)));
        assert_eq!(rev, p.iter().rev().map(|d| d.reverse()).collect::<Vec<_>>());
        // P(C) for the 4-cycle cancels nothing here but the sums agree
        let c = Cycle::through(&g, &[0, 1, 2, 3].map(VertexId)).unwrap();
        let residue = cancel_reverse_pairs(&gp.graph, &pm.lift_cycle(&c)).unwrap();
        let mut wp = WeightAssignment::zero_on(&gp.graph);
        for (i, e) in gp.graph.edges().enumerate() {
            wp.set(e.id, BigInt::from(1u64 << i));
        }
        let w = pull_weights(&wp, &pm).unwrap();
        assert_eq!(circulation(&c, &w).unwrap(), circulation(&residue, &wp).unwrap());
    }

    #[test]
    fn cancellation_through_shared_copies() {
        // vertex 2 has copies in three bags; the cycle turns at 2 below the root
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 2), (2, 0)]).unwrap();
        let td = TreeDecomp {
            bags: vec![bag(0, &[0, 1, 2]), bag(1, &[2, 3, 4])],
            parent: vec![None, Some(0)],
            root: 0,
        };
        let gp = build_gprime(&g, &td).unwrap();
        let pm = build_pullback_map(&g, &gp).unwrap();
        let c = Cycle::through(&g, &[2, 3, 4].map(VertexId)).unwrap();
        let walk = pm.lift_cycle(&c);
        let residue = cancel_reverse_pairs(&gp.graph, &walk).unwrap();
        assert!(walk.len() > residue.len());
        assert_eq!(residue.len(), 3);
    }

    #[test]
    fn every_cycle_transfers_exactly() {
        let params = GenParams { total_max: 14, planar_max: 7, tw_max: 6, ..GenParams::default() };
        for seed in 0..15 {
            let inst = generate_instance(seed, &params);
            let run = end_to_end_with_tree(&inst.graph, &inst.tree, &PipelineOptions::default()).unwrap();
            let b = &run.blocks[0];
            for c in enumerate_simple_cycles(&b.glued, 200_000).unwrap() {
                let residue = cancel_reverse_pairs(&b.gprime.graph, &b.pullback.lift_cycle(&c)).unwrap();
                assert_eq!(
                    circulation(&c, &b.glued_weights).unwrap(),
                    circulation(&residue, &b.wprime.weights).unwrap()
                );
            }
            for c in enumerate_simple_cycles(&inst.graph, 200_000).unwrap() {
                assert!(!circulation(&c, &run.weights).unwrap().is_zero(), "seed {seed}");
            }
        }
    }

    #[test]
    fn decomposing_pipeline_on_fixtures() {
        let opts = PipelineOptions { verify_cap: Some(1_000_000), ..PipelineOptions::default() };
        for (g, width) in [
            (fixtures::octahedron(), 3),
            (fixtures::two_k4(), 3),
            (fixtures::k33(), 3),
            (fixtures::complete(5), 4),
        ] {
            let run = end_to_end(&g, &PipelineOptions { width, ..opts.clone() }).unwrap();
            assert_eq!(run.blocks[0].boost, 0);
            assert!(find_zero_cycle(&g, &run.weights, 1_000_000).unwrap().is_none());
        }
        let k6 = fixtures::complete(6);
        assert!(matches!(end_to_end(&k6, &PipelineOptions { width: 4, ..opts }), Err(Error::NotDecomposable { .. })));
    }

    #[test]
    fn decomposer_path_on_hard_seeds() {
        // overlapping multi-star groups, and a merged piece past the exact treewidth limit
        let params = GenParams { thin_prob: 0.3, ..GenParams::default() };
        let opts = PipelineOptions { verify_cap: Some(1_000_000), ..PipelineOptions::default() };
        for seed in [0, 7, 61, 91, 101, 141] {
            let inst = generate_instance(seed, &params);
            let run = end_to_end(&inst.graph, &opts).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(run.blocks.iter().all(|b| b.boost == 0), "seed {seed}");
        }
    }

    #[test]
    fn manifest_is_deterministic() {
        let inst = generate_instance(3, &GenParams::default());
        let a = end_to_end(&inst.graph, &PipelineOptions::default()).unwrap();
        let b = end_to_end(&inst.graph, &PipelineOptions::default()).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert!(a.manifest.provenance.contains_key("block0.gprime"));
    }
}
