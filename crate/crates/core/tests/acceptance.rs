//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cliquesum::auxtree::{check_property_ii, height_bound};
use cliquesum::cycles::{for_each_simple_cycle, DEFAULT_CYCLE_CAP};
use cliquesum::dynamic::{after_deletions, audit_old_order, update, DynConfig};
use cliquesum::generate::{deletion_batch, fixtures, generate_instance, insertion_batch, GenParams};
use cliquesum::isolation::{
    audit_perfect_matchings, default_shift, extract_min_pm, matching_weights, min_weight_max_matching,
    unique_shortest_paths, EdgeWeights,
};
use cliquesum::normalize::{check_properties, pull_circulation_through_gadget};
use cliquesum::pullback::{end_to_end, PipelineOptions, Run};
use cliquesum::verify::{
    audit_lemma_bounds, audit_transfer, gadget_walk, least_squares, verify_nonzero_circulation,
};
use cliquesum::{circulation, Error, Graph, WeightAssignment};

/// Bit length of max|w| is at most C1 · log2 n + C2 on the measured family.
const C1: f64 = 13.0;
const C2: f64 = 29.0;
/// Pooled least-squares slope of bits against log2 n on the measured family.
const SLOPE: f64 = 12.09;

const CYCLE_CAP: usize = DEFAULT_CYCLE_CAP;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Acceptance instances drop 30% of the non-clique edges of each piece so
/// that exhaustive cycle enumeration stays within budget.
fn params() -> GenParams {
    GenParams { thin_prob: 0.3, ..GenParams::default() }
}

fn run(g: &Graph) -> Run {
    end_to_end(g, &PipelineOptions::default()).expect("pipeline")
}

fn c1_nonzero_circulation() -> Outcome {
    let t = Instant::now();
    let p = params();
    let (mut cycles, mut bad) = (0usize, Vec::new());
    for seed in 0..200 {
        let inst = generate_instance(seed, &p);
        let r = verify_nonzero_circulation(&inst.graph, &run(&inst.graph).weights, CYCLE_CAP).unwrap();
        cycles += r.cycles_total;
        if !r.passed() {
            bad.push(seed);
        }
    }
    let dt = t.elapsed();
    outcome(
        bad.is_empty() && dt < Duration::from_secs(300),
        format!("200 instances, {cycles} cycles, zero-circulation instances {bad:?}, {dt:.1?}"),
    )
}

fn c2_weight_bound() -> Outcome {
    let mut groups = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for group in 0..4u64 {
        let mut pts = Vec::new();
        for n in (8..=64).step_by(4) {
            for s in 0..25u64 {
                let seed = group * 10000 + n as u64 * 100 + s;
                let p = GenParams { total_max: n, pieces: (n / 5).max(1), ..params() };
                let inst = generate_instance(seed, &p);
                let logn = (inst.graph.vertex_count() as f64).log2();
                let bits = run(&inst.graph).manifest.max_bits as f64;
                worst = worst.max(bits - (C1 * logn + C2));
                pts.push((logn, bits));
                count += 1;
            }
        }
        groups.push(least_squares(&pts).0);
    }
    let stable = groups.iter().all(|s| (s - SLOPE).abs() <= 0.1 * SLOPE);
    outcome(
        worst <= 0.0 && stable,
        format!(
            "{count} instances, n in 8..64, bits - ({C1}·log2 n + {C2}) max {worst:.2}, group slopes {:?} vs {SLOPE}",
            groups.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

/// Criteria 3 to 6 share one set of 50 instances.
struct StageAudits {
    pullback: Outcome,
    connectivity: Outcome,
    lemmas: Outcome,
    aux: Outcome,
}

fn c3_to_c6() -> StageAudits {
    let p = params();
    let (mut glued_cycles, mut pull_bad, mut gadget_bad) = (0usize, 0usize, 0usize);
    let (mut gp_cycles, mut multi, mut conn, mut l4, mut l5) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut max_ratio: f64 = 0.0;
    let (mut trees, mut height_bad, mut brute, mut prop_bad) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..50 {
        let inst = generate_instance(seed, &p);
        for b in &run(&inst.graph).blocks {
            let r = audit_transfer(
                &b.glued,
                &b.gprime.graph,
                |d| b.pullback.walk(d),
                &b.glued_weights,
                &b.wprime.weights,
                CYCLE_CAP,
            )
            .unwrap();
            glued_cycles += r.cycles;
            pull_bad += r.invalid_images.len() + r.mismatches.len();
            let r = audit_transfer(
                &b.block,
                &b.glued,
                |d| gadget_walk(&b.normalized.map, d),
                &b.weights,
                &b.glued_weights,
                CYCLE_CAP,
            )
            .unwrap();
            gadget_bad += r.invalid_images.len() + r.mismatches.len();

            let a = audit_lemma_bounds(&b.gprime, &b.aux, &b.wprime.cross, &b.wprime.k, 2 * CYCLE_CAP).unwrap();
            gp_cycles += a.cycles;
            multi += a.multi_bag_cycles;
            conn += a.connectivity_violations.len();
            l4 += a.lemma4_violations.len();
            l5 += a.lemma5_violations.len();
            max_ratio = max_ratio.max(a.max_lemma4_ratio);

            trees += 1;
            let bags = b.tprime.len();
            if b.aux.height(b.aux.root()).unwrap() > height_bound(bags) {
                height_bad += 1;
            }
            if bags <= 12 {
                brute += 1;
                if check_property_ii(&b.tprime, &b.aux).is_some() {
                    prop_bad += 1;
                }
            }
        }
    }
    StageAudits {
        pullback: outcome(
            pull_bad == 0 && gadget_bad == 0 && glued_cycles > 0,
            format!("50 instances, {glued_cycles} glued-graph cycles, pull-back mismatches {pull_bad}, gadget mismatches {gadget_bad}"),
        ),
        connectivity: outcome(
            conn == 0 && gp_cycles > 0,
            format!("{gp_cycles} cycles of G', disconnected bag supports {conn}"),
        ),
        lemmas: outcome(
            l4 == 0 && l5 == 0 && multi > 0,
            format!("{multi} multi-bag cycles, subtree-bound violations {l4}, top-bag dominance violations {l5}, max |sum|/bound {max_ratio:.3}"),
        ),
        aux: outcome(
            height_bad == 0 && prop_bad == 0 && brute > 0,
            format!("{trees} auxiliary trees, height violations {height_bad}, {brute} brute-forced (≤12 bags), ancestor violations {prop_bad}"),
        ),
    }
}

fn c7_perfect_matchings() -> Outcome {
    let p = GenParams { bipartite: true, ..params() };
    let (mut found, mut seed, mut ties, mut disagree) = (0, 0u64, 0, 0);
    while found < 100 && seed < 3000 {
        let inst = generate_instance(seed, &p);
        seed += 1;
        let wu = matching_weights(&inst.graph, &run(&inst.graph).weights).unwrap();
        let a = audit_perfect_matchings(&inst.graph, &wu).unwrap();
        if a.count < 2 {
            continue;
        }
        found += 1;
        if a.tie.is_some() {
            ties += 1;
            continue;
        }
        let min = a.minimum.unwrap();
        let ssp = min_weight_max_matching(&inst.graph, &wu).unwrap();
        match extract_min_pm(&inst.graph, &wu) {
            Ok(Some(m)) if m == min && ssp.weight == min.weight => {}
            _ => disagree += 1,
        }
    }
    outcome(
        found == 100 && ties == 0 && disagree == 0,
        format!("{found} instances with ≥2 perfect matchings ({seed} seeds), ties {ties}, extraction mismatches {disagree}"),
    )
}

fn c8_paths() -> Outcome {
    let p = GenParams { total_max: 14, ..params() };
    let (mut pairs, mut bad) = (0, 0);
    for seed in 0..50 {
        let inst = generate_instance(seed, &p);
        let w = run(&inst.graph).weights;
        let r = unique_shortest_paths(&inst.graph, &w, &default_shift(&inst.graph, &w)).unwrap();
        pairs += r.pairs;
        bad += r.ties.len() + r.distance_mismatches.len();
    }
    outcome(bad == 0, format!("50 instances (≤14 vertices), {pairs} ordered pairs, ties or distance mismatches {bad}"))
}

fn c9_gadget_fixtures() -> Outcome {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut fixtures, mut cycles, mut bad, mut seed) = (0, 0, 0, 0u64);
    while fixtures < 20 && seed < 1000 {
        let inst = generate_instance(seed, &p);
        seed += 1;
        for b in run(&inst.graph).blocks {
            if fixtures == 20 || b.glued.vertex_count() == b.block.vertex_count() {
                continue;
            }
            fixtures += 1;
            // arbitrary weights after the gadgets, pulled back through them
            let mut w2 = WeightAssignment::new();
            for e in b.glued.edges() {
                w2.set(e.id, BigInt::from(rng.gen_range(-1000i64..=1000)));
            }
            let w1 = pull_circulation_through_gadget(&w2, &b.normalized.map).unwrap();
            let r = audit_transfer(&b.block, &b.glued, |d| gadget_walk(&b.normalized.map, d), &w1, &w2, CYCLE_CAP)
                .unwrap();
            cycles += r.cycles;
            bad += r.invalid_images.len() + r.mismatches.len();
        }
    }
    outcome(
        fixtures == 20 && bad == 0,
        format!("{fixtures} blocks with gadgets, {cycles} cycles, circulation mismatches {bad}"),
    )
}

fn c10_dynamic() -> Outcome {
    let t = Instant::now();
    let p = GenParams { bipartite: true, ..params() };
    let cfg = DynConfig::default();
    let (mut scenarios, mut seed) = (0, 0u64);
    let (mut inserted, mut unsel, mut order_bad, mut del_bad) = (0, 0, 0, 0);
    while scenarios < 50 && seed < 3000 {
        let inst = generate_instance(seed, &p);
        seed += 1;
        let w = run(&inst.graph).weights;
        let w_old = matching_weights(&inst.graph, &w).unwrap();
        let (g2, ids) = insertion_batch(&inst.graph, seed, 1 + seed as usize % 6);
        let probe: EdgeWeights = g2.edges().map(|e| (e.id, BigInt::from(0))).collect();
        if audit_perfect_matchings(&g2, &probe).unwrap().count < 2 {
            continue;
        }
        scenarios += 1;
        let u = update(&g2, &ids, &w_old, &cfg).unwrap();
        if !ids.is_empty() {
            inserted += 1;
            match &u.selected {
                Some(s) if s.audit.tie.is_none() => {
                    let o = audit_old_order(&g2, &u.partition, &w_old, &s.candidate).unwrap();
                    if !(o.old_lighter && o.old_weights_kept) {
                        order_bad += 1;
                    }
                }
                _ => unsel += 1,
            }
        }
        // deletions keep the old weights and must not need a new family
        let (g3, _) = deletion_batch(&inst.graph, seed, 0.2);
        let kept = after_deletions(&g3, &w_old).unwrap();
        let ok = verify_nonzero_circulation(&g3, &w.restrict(g3.edges().map(|e| e.id)), CYCLE_CAP).unwrap().passed()
            && audit_perfect_matchings(&g3, &kept).unwrap().tie.is_none()
            && kept.iter().all(|(e, x)| w_old.get(e) == Some(x));
        if !ok {
            del_bad += 1;
        }
    }
    let dt = t.elapsed();
    outcome(
        scenarios == 50 && unsel == 0 && order_bad == 0 && del_bad == 0 && dt < Duration::from_secs(120),
        format!(
            "{scenarios} scenarios ({inserted} with insertions), not isolated {unsel}, order violations {order_bad}, deletion failures {del_bad}, {dt:.1?}"
        ),
    )
}

fn c11_negative_controls() -> Outcome {
    // tampered weights: shift one edge so that some cycle sums to zero
    let inst = generate_instance(3, &params());
    let mut w = run(&inst.graph).weights;
    let mut first = None;
    for_each_simple_cycle(&inst.graph, CYCLE_CAP, |c| {
        first = Some(c.clone());
        ControlFlow::Break(())
    })
    .unwrap();
    let c = first.unwrap();
    let circ = circulation(&c, &w).unwrap();
    let d = c.edges()[0];
    let old = w.forward_weight(d.edge).unwrap().clone();
    w.set(d.edge, if d.forward { old - circ } else { old + circ });
    let tampered = verify_nonzero_circulation(&inst.graph, &w, CYCLE_CAP).unwrap();
    let tampered_ok = !tampered.passed() && !tampered.zero_witnesses.is_empty();

    let square = fixtures::cycle(4);
    let mut w = WeightAssignment::new();
    for (i, x) in [1, 2, -1, -2].into_iter().enumerate() {
        w.set(cliquesum::EdgeId(i as u32), BigInt::from(x));
    }
    let r = verify_nonzero_circulation(&square, &w, CYCLE_CAP).unwrap();
    let square_ok = r.zero_witnesses.len() == 1;

    let triangle_ok = matches!(check_properties(&fixtures::nonfacial_triangle_tree()), Err(Error::Structural(m)) if m.contains("not a face"));

    let mut seen = BTreeSet::new();
    seen.extend(tampered.zero_witnesses.iter().map(|x| x.edges.len()));
    outcome(
        tampered_ok && square_ok && triangle_ok,
        format!(
            "tampered weights caught {tampered_ok} (witness lengths {seen:?}), zero 4-cycle caught {square_ok}, non-facial virtual triangle rejected {triangle_ok}"
        ),
    )
}

fn main() {
    let t = Instant::now();
    let mut results: BTreeMap<usize, (&str, Outcome)> = BTreeMap::new();
    results.insert(1, ("nonzero circulation on generated instances", c1_nonzero_circulation()));
    results.insert(2, ("polynomially bounded weights", c2_weight_bound()));
    let s = c3_to_c6();
    results.insert(3, ("pull-back exactness", s.pullback));
    results.insert(4, ("cycles of G' have connected bag support", s.connectivity));
    results.insert(5, ("cross-layer subtree bounds", s.lemmas));
    results.insert(6, ("auxiliary tree height and ancestor property", s.aux));
    results.insert(7, ("unique minimum perfect matching", c7_perfect_matchings()));
    results.insert(8, ("unique shortest paths", c8_paths()));
    results.insert(9, ("gadget circulation transfer", c9_gadget_fixtures()));
    results.insert(10, ("dynamic isolation", c10_dynamic()));
    results.insert(11, ("negative controls", c11_negative_controls()));
    let mut failed = 0;
    for (i, (name, o)) in &results {
        println!("{} criterion {i:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed, {:.1?}", results.len() - failed, t.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
