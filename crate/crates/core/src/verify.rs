//! Brute-force checks over all simple cycles: nonzero circulation, skew
//! symmetry, connected support in the lifted graph, and the per-subtree
//! bounds on the cross layer.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::auxtree::AuxTree;
use crate::cycles::for_each_simple_cycle;
use crate::error::Result;
use crate::gprime::{check_connected_support, GPrime};
use crate::normalize::GadgetMap;
use crate::pullback::cancel_reverse_pairs;
use crate::graph::{circulation, Cycle, DirectedEdge, DirectedWeights, Graph, VertexId, WeightAssignment};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<DirectedEdge>,
}

impl From<&Cycle> for Witness {
    fn from(c: &Cycle) -> Self {
        Witness { vertices: c.vertices().to_vec(), edges: c.edges().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub cycles_total: usize,
    pub zero_witnesses: Vec<Witness>,
    #[serde(with = "opt_bigint")]
    pub min_abs_circulation: Option<BigInt>,
    pub lemma4_violations: usize,
    pub lemma5_violations: usize,
    pub max_bits: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.zero_witnesses.is_empty() && self.lemma4_violations == 0 && self.lemma5_violations == 0
    }
}

mod opt_bigint {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|x| x.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

/// Enumerates every simple cycle of `g` and evaluates its circulation.
/// Fails with `CycleCapExceeded` past `cap` cycles.
pub fn verify_nonzero_circulation(g: &Graph, w: &WeightAssignment, cap: usize) -> Result<Report> {
    let mut zero = Vec::new();
    let mut min: Option<BigInt> = None;
    let mut err = None;
    let total = for_each_simple_cycle(g, cap, |c| {
        match circulation(c, w) {
            Ok(x) => {
                let a = x.abs();
                if a.is_zero() {
                    zero.push(Witness::from(c));
                }
                if min.as_ref().is_none_or(|m| &a < m) {
                    min = Some(a);
                }
            }
            Err(e) => {
                err = Some(e);
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Report {
        cycles_total: total,
        zero_witnesses: zero,
        min_abs_circulation: min,
        lemma4_violations: 0,
        lemma5_violations: 0,
        max_bits: w.max_bits(),
    })
}

/// Whether both orientations of every edge carry opposite weights.
pub fn verify_skew_symmetry(w: &DirectedWeights) -> bool {
    w.iter().all(|(&d, x)| match w.get(&d.reverse()) {
        Some(y) => *x == -y,
        None => false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub cycle: Witness,
    pub bag: usize,
    #[serde(with = "crate::io::bigint_string")]
    pub sum: BigInt,
    #[serde(with = "crate::io::bigint_string")]
    pub bound: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub cycles: usize,
    pub multi_bag_cycles: usize,
    pub connectivity_violations: Vec<Witness>,
    pub lemma4_violations: Vec<LemmaViolation>,
    pub lemma5_violations: Vec<LemmaViolation>,
    /// Largest `|sum| / (K^h * l)` seen; below 1 when the bound holds.
    pub max_lemma4_ratio: f64,
    /// Smallest `|top| / |rest|` over multi-bag cycles with nonzero rest.
    pub min_lemma5_ratio: Option<f64>,
}

fn ratio(a: &BigInt, b: &BigInt) -> f64 {
    // both sides scaled down together so huge values stay finite
    let shift = b.bits().max(a.bits()).saturating_sub(60);
    let (x, y) = ((a >> shift).to_f64().unwrap_or(f64::MAX), (b >> shift).to_f64().unwrap_or(f64::MAX));
    if y == 0.0 {
        f64::INFINITY
    } else {
        x / y
    }
}

/// Audits every simple cycle of the lifted graph against the cross layer:
/// for each auxiliary subtree the cycle's sum on edges associated with it is
/// strictly below `K^h * l` of its root, and on multi-bag cycles the
/// highest bag outweighs everything else.
pub fn audit_lemma_bounds(gp: &GPrime, aux: &AuxTree, cross: &WeightAssignment, k: &BigInt, cap: usize) -> Result<LemmaAudit> {
    let stats = aux.all_stats();
    let bound: BTreeMap<usize, BigInt> =
        stats.iter().map(|(&b, &(h, l))| (b, k.pow(h) * BigInt::from(l))).collect();
    let mut ancestors: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &b in aux.nodes.keys() {
        let mut chain = vec![b];
        let mut x = b;
        while let Some(p) = aux.nodes[&x].parent {
            chain.push(p);
            x = p;
        }
        ancestors.insert(b, chain);
    }
    let mut audit = LemmaAudit {
        cycles: 0,
        multi_bag_cycles: 0,
        connectivity_violations: Vec::new(),
        lemma4_violations: Vec::new(),
        lemma5_violations: Vec::new(),
        max_lemma4_ratio: 0.0,
        min_lemma5_ratio: None,
    };
    let mut err = None;
    let total = for_each_simple_cycle(&gp.graph, cap, |c| {
        if !check_connected_support(gp, c) {
            audit.connectivity_violations.push(Witness::from(c));
        }
        let mut per_bag: BTreeMap<usize, BigInt> = BTreeMap::new();
        let mut subtree: BTreeMap<usize, BigInt> = BTreeMap::new();
        for &d in c.edges() {
            let x = match cross.weight(d) {
                Ok(x) => x,
                Err(e) => {
                    err = Some(e);
                    return ControlFlow::Break(());
                }
            };
            let b = gp.association[&d.edge];
            *per_bag.entry(b).or_default() += &x;
            for &a in &ancestors[&b] {
                *subtree.entry(a).or_default() += &x;
            }
        }
        for (&r, s) in &subtree {
            let s = s.abs();
            let r_ratio = ratio(&s, &bound[&r]);
            audit.max_lemma4_ratio = audit.max_lemma4_ratio.max(r_ratio);
            if s >= bound[&r] {
                audit.lemma4_violations.push(LemmaViolation {
                    cycle: Witness::from(c),
                    bag: r,
                    sum: s,
                    bound: bound[&r].clone(),
                });
            }
        }
        if per_bag.len() > 1 {
            audit.multi_bag_cycles += 1;
            // the support is connected, so one bag is an ancestor of all
            let top = per_bag
                .keys()
                .copied()
                .find(|&t| per_bag.keys().all(|&x| aux.is_ancestor(t, x)));
            match top {
                Some(t) => {
                    let top_sum = per_bag[&t].abs();
                    let rest: BigInt = per_bag.iter().filter(|(&b, _)| b != t).map(|(_, x)| x).sum();
                    let rest = rest.abs();
                    if !rest.is_zero() {
                        let q = ratio(&top_sum, &rest);
                        audit.min_lemma5_ratio = Some(audit.min_lemma5_ratio.map_or(q, |m: f64| m.min(q)));
                    }
                    if top_sum <= rest {
                        audit.lemma5_violations.push(LemmaViolation {
                            cycle: Witness::from(c),
                            bag: t,
                            sum: top_sum,
                            bound: rest,
                        });
                    }
                }
                None => audit.lemma5_violations.push(LemmaViolation {
                    cycle: Witness::from(c),
                    bag: usize::MAX,
                    sum: BigInt::zero(),
                    bound: BigInt::zero(),
                }),
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    audit.cycles = total;
    Ok(audit)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferReport {
    pub cycles: usize,
    /// Cycles whose image does not reduce to a simple cycle.
    pub invalid_images: Vec<Witness>,
    /// Cycles whose circulation differs from that of their image.
    pub mismatches: Vec<Witness>,
}

impl TransferReport {
    pub fn passed(&self) -> bool {
        self.invalid_images.is_empty() && self.mismatches.is_empty()
    }
}

/// For every simple cycle `C` of `earlier`, concatenates the walks replacing
/// its edges, cancels backtracking, and checks that what remains is a simple
/// cycle of `later` with `w_later(image) = w_earlier(C)`.
pub fn audit_transfer<F>(
    earlier: &Graph,
    later: &Graph,
    walk: F,
    w_earlier: &WeightAssignment,
    w_later: &WeightAssignment,
    cap: usize,
) -> Result<TransferReport>
where
    F: Fn(DirectedEdge) -> Vec<DirectedEdge>,
{
    let mut report = TransferReport { cycles: 0, invalid_images: Vec::new(), mismatches: Vec::new() };
    let mut err = None;
    report.cycles = for_each_simple_cycle(earlier, cap, |c| {
        let image: Vec<DirectedEdge> = c.edges().iter().flat_map(|&d| walk(d)).collect();
        let Ok(residue) = cancel_reverse_pairs(later, &image) else {
            report.invalid_images.push(Witness::from(c));
            return ControlFlow::Continue(());
        };
        match (circulation(c, w_earlier), circulation(&residue, w_later)) {
            (Ok(a), Ok(b)) => {
                if a != b {
                    report.mismatches.push(Witness::from(c));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Walk replacement through a gadget map, in either direction.
pub fn gadget_walk(map: &GadgetMap, d: DirectedEdge) -> Vec<DirectedEdge> {
    let p = &map.paths[&d.edge];
    if d.forward {
        p.clone()
    } else {
        p.iter().rev().map(|x| x.reverse()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBound {
    pub max_bits: Vec<(usize, u64)>,
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log2 max|w|` against `log2 n` over `(n, w)` samples.
pub fn report_weight_bound(samples: &[(usize, &WeightAssignment)]) -> WeightBound {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(n, w)| ((n.max(1) as f64).log2(), log2_big(&w.max_abs())))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    WeightBound { max_bits: samples.iter().map(|&(n, w)| (n, w.max_bits())).collect(), slope, intercept }
}

/// `log2 |x|`, with 0 and 1 both mapped to 0.
pub fn log2_big(x: &BigInt) -> f64 {
    let x = x.abs();
    if x <= BigInt::from(1) {
        return 0.0;
    }
    let shift = x.bits().saturating_sub(53);
    (x >> shift).to_f64().unwrap().log2() + shift as f64
}

pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, pts.first().map_or(0.0, |p| p.1));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::DEFAULT_CYCLE_CAP;
    use crate::generate::fixtures;
    use crate::graph::EdgeId;
    use crate::pullback::{end_to_end, PipelineOptions};

    fn weights(vals: &[i64]) -> WeightAssignment {
        let mut w = WeightAssignment::new();
        for (i, &x) in vals.iter().enumerate() {
            w.set(EdgeId(i as u32), BigInt::from(x));
        }
        w
    }

    #[test]
    fn triangle_passes() {
        let g = fixtures::cycle(3);
        let r = verify_nonzero_circulation(&g, &weights(&[1, 2, 3]), DEFAULT_CYCLE_CAP).unwrap();
        assert_eq!(r.cycles_total, 1);
        assert_eq!(r.min_abs_circulation, Some(BigInt::from(6)));
        assert!(r.passed());
    }

    #[test]
    fn cancelling_square_fails_with_witness() {
        let g = fixtures::cycle(4);
        let r = verify_nonzero_circulation(&g, &weights(&[1, 2, -1, -2]), DEFAULT_CYCLE_CAP).unwrap();
        assert!(!r.passed());
        assert_eq!(r.zero_witnesses.len(), 1);
        assert_eq!(r.zero_witnesses[0].edges.len(), 4);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["min_abs_circulation"], "0");
    }

    #[test]
    fn cap_is_enforced() {
        let g = fixtures::complete(5);
        let w = weights(&[1; 10]);
        assert!(verify_nonzero_circulation(&g, &w, 3).is_err());
    }

    #[test]
    fn skew_symmetry() {
        let mut d = DirectedWeights::new();
        assert!(verify_skew_symmetry(&d));
        d.insert(DirectedEdge::forward(EdgeId(0)), BigInt::from(3));
        d.insert(DirectedEdge::backward(EdgeId(0)), BigInt::from(-3));
        assert!(verify_skew_symmetry(&d));
        d.insert(DirectedEdge::backward(EdgeId(0)), BigInt::from(3));
        assert!(!verify_skew_symmetry(&d));
        d.remove(&DirectedEdge::backward(EdgeId(0)));
        assert!(!verify_skew_symmetry(&d));
    }

    #[test]
    fn slope_controls() {
        let ns = [8usize, 16, 32, 64];
        let constant: Vec<WeightAssignment> = ns.iter().map(|_| weights(&[5])).collect();
        let samples: Vec<_> = ns.iter().zip(&constant).map(|(&n, w)| (n, w)).collect();
        assert!(report_weight_bound(&samples).slope.abs() < 1e-9);
        let square: Vec<WeightAssignment> = ns.iter().map(|&n| weights(&[(n * n) as i64])).collect();
        let samples: Vec<_> = ns.iter().zip(&square).map(|(&n, w)| (n, w)).collect();
        assert!((report_weight_bound(&samples).slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn transfer_audits_on_pipeline_stages() {
        use crate::generate::{generate_instance, GenParams};
        let params = GenParams { thin_prob: 0.3, ..GenParams::default() };
        for seed in [0, 101] {
            let run = end_to_end(&generate_instance(seed, &params).graph, &PipelineOptions::default()).unwrap();
            for b in &run.blocks {
                let r = audit_transfer(
                    &b.block,
                    &b.glued,
                    |d| gadget_walk(&b.normalized.map, d),
                    &b.weights,
                    &b.glued_weights,
                    DEFAULT_CYCLE_CAP,
                )
                .unwrap();
                assert!(r.passed() && r.cycles > 0);
                let r = audit_transfer(
                    &b.glued,
                    &b.gprime.graph,
                    |d| b.pullback.walk(d),
                    &b.glued_weights,
                    &b.wprime.weights,
                    DEFAULT_CYCLE_CAP,
                )
                .unwrap();
                assert!(r.passed() && r.cycles > 0);
            }
        }
    }

    #[test]
    fn tampered_image_weights_are_caught() {
        let g = fixtures::cycle(4);
        let w = weights(&[1, 2, 4, 8]);
        let mut w2 = w.clone();
        w2.set(EdgeId(2), BigInt::from(5));
        let r = audit_transfer(&g, &g, |d| vec![d], &w, &w2, DEFAULT_CYCLE_CAP).unwrap();
        assert_eq!(r.mismatches.len(), 1);
    }

    #[test]
    fn pipeline_fixtures_pass_all_audits() {
        for g in [fixtures::two_k4(), fixtures::octahedron(), fixtures::k33()] {
            let run = end_to_end(&g, &PipelineOptions::default()).unwrap();
            let r = verify_nonzero_circulation(&g, &run.weights, DEFAULT_CYCLE_CAP).unwrap();
            assert!(r.passed());
            for b in &run.blocks {
                let a = audit_lemma_bounds(&b.gprime, &b.aux, &b.wprime.cross, &b.wprime.k, DEFAULT_CYCLE_CAP).unwrap();
                assert!(a.connectivity_violations.is_empty());
                assert!(a.lemma4_violations.is_empty(), "{:?}", a.lemma4_violations.first());
                assert!(a.lemma5_violations.is_empty(), "{:?}", a.lemma5_violations.first());
                assert!(a.max_lemma4_ratio < 1.0);
            }
        }
    }
}
