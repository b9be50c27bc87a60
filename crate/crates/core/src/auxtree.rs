//! Balanced auxiliary tree over the bags of a tree decomposition, built by
//! recursive centroid selection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::treedec::{is_connected_bag_set, TreeDecomp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxNode {
    pub parent: Option<usize>,
    pub height: u32,
    /// Vertices shared between the parent centre and this node's subtree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attached_at: Option<BTreeSet<VertexId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuxTree {
    pub nodes: BTreeMap<usize, AuxNode>,
}

impl AuxTree {
    pub fn root(&self) -> usize {
        self.nodes.iter().find(|(_, n)| n.parent.is_none()).map(|(&b, _)| b).expect("non-empty tree")
    }

    pub fn height(&self, b: usize) -> Result<u32> {
        self.nodes.get(&b).map(|n| n.height).ok_or(Error::UnknownBag(b))
    }

    pub fn children(&self, b: usize) -> Vec<usize> {
        self.nodes.iter().filter(|(_, n)| n.parent == Some(b)).map(|(&c, _)| c).collect()
    }

    pub fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.nodes[&b].parent {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    /// `(h(b), number of leaves of the subtree rooted at b)`.
    pub fn subtree_stats(&self, b: usize) -> Result<(u32, u64)> {
        let h = self.height(b)?;
        let mut leaves = 0u64;
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            let cs = self.children(x);
            if cs.is_empty() {
                leaves += 1;
            }
            stack.extend(cs);
        }
        Ok((h, leaves))
    }

    /// All subtree statistics at once, keyed by bag.
    pub fn all_stats(&self) -> BTreeMap<usize, (u32, u64)> {
        let mut kids: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&b, n) in &self.nodes {
            if let Some(p) = n.parent {
                kids.entry(p).or_default().push(b);
            }
        }
        let mut order = vec![self.root()];
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            order.extend(kids.get(&x).into_iter().flatten().copied());
        }
        let mut leaves: BTreeMap<usize, u64> = BTreeMap::new();
        for &x in order.iter().rev() {
            let l = match kids.get(&x) {
                Some(cs) => cs.iter().map(|c| leaves[c]).sum(),
                None => 1,
            };
            leaves.insert(x, l);
        }
        self.nodes.iter().map(|(&b, n)| (b, (n.height, leaves[&b]))).collect()
    }
}

fn component(td: &TreeDecomp, within: &BTreeSet<usize>, start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut q = VecDeque::from([start]);
    while let Some(x) = q.pop_front() {
        for y in td.neighbors(x) {
            if within.contains(&y) && seen.insert(y) {
                q.push_back(y);
            }
        }
    }
    seen
}

/// The bag whose removal leaves the smallest largest piece; ties go to the
/// smallest id.
fn centroid(td: &TreeDecomp, set: &BTreeSet<usize>) -> usize {
    let mut best = (usize::MAX, usize::MAX);
    for &c in set {
        let mut rest = set.clone();
        rest.remove(&c);
        let mut worst = 0;
        while let Some(&s) = rest.iter().next() {
            let comp = component(td, &rest, s);
            worst = worst.max(comp.len());
            for x in comp {
                rest.remove(&x);
            }
        }
        best = best.min((worst, c));
    }
    best.1
}

pub fn build_aux_tree(td: &TreeDecomp) -> Result<AuxTree> {
    if td.is_empty() {
        return Err(Error::Parameter("auxiliary tree of an empty decomposition".into()));
    }
    let mut parent: BTreeMap<usize, (Option<usize>, Option<BTreeSet<VertexId>>)> = BTreeMap::new();
    let mut depth: BTreeMap<usize, u32> = BTreeMap::new();
    let all: BTreeSet<usize> = (0..td.len()).collect();
    let mut work: Vec<(BTreeSet<usize>, Option<usize>, u32)> = vec![(all, None, 0)];
    while let Some((set, up, d)) = work.pop() {
        let c = centroid(td, &set);
        let attached = up.map(|p| {
            let via = td.neighbors(p).into_iter().find(|x| set.contains(x)).expect("adjacent subtree");
            td.bags[p].vertices.intersection(&td.bags[via].vertices).copied().collect()
        });
        parent.insert(c, (up, attached));
        depth.insert(c, d);
        let mut rest = set;
        rest.remove(&c);
        while let Some(&s) = rest.iter().next() {
            let comp = component(td, &rest, s);
            for x in &comp {
                rest.remove(x);
            }
            work.push((comp, Some(c), d + 1));
        }
    }
    let max_depth = *depth.values().max().unwrap();
    let nodes = parent
        .into_iter()
        .map(|(b, (p, attached_at))| (b, AuxNode { parent: p, height: max_depth + 1 - depth[&b], attached_at }))
        .collect();
    Ok(AuxTree { nodes })
}

/// `⌈log2 b⌉ + 1`.
pub fn height_bound(bags: usize) -> u32 {
    (bags.max(1) as u64).next_power_of_two().trailing_zeros() + 1
}

/// Brute-force check that every connected bag set has a member that is an
/// auxiliary-tree ancestor of all the others. Returns a violating set.
pub fn check_property_ii(td: &TreeDecomp, aux: &AuxTree) -> Option<BTreeSet<usize>> {
    let n = td.len();
    assert!(n <= 20, "brute force over {n} bags");
    for mask in 1u32..(1 << n) {
        let set: BTreeSet<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if !is_connected_bag_set(td, &set) {
            continue;
        }
        if !set.iter().any(|&b| set.iter().all(|&x| aux.is_ancestor(b, x))) {
            return Some(set);
        }
    }
    None
}
