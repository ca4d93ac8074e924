//! Compare steps and bisection for capacity-constrained families.
//!
//! With item weights `w_i = v_i (p_i - K)`, the best set of at most C items
//! is the C largest positive weights, so a comparison is a top-C selection.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::search::{bisect, check_eps, Probe};
use crate::error::{Error, Result};
use crate::model::{Assortment, Instance, SolverResult};

/// Feasible family for [`assort_mnl_capacitated`].
#[derive(Debug, Clone, PartialEq)]
pub enum CapacityConstraint {
    /// `|S| <= cap`.
    AtMost(usize),
    /// `|S| <= cap`, always including the `min` highest-weight items.
    WithForcedTop { cap: usize, min: usize },
    /// Items split into blocks, at most `caps[b]` items from block `b`.
    Partitioned { blocks: Vec<Vec<u32>>, caps: Vec<usize> },
}

#[derive(Clone, Copy)]
struct Ranked {
    w: f64,
    item: u32,
}

impl Ranked {
    // Higher weight ranks first; equal weights prefer the lower item.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.w.total_cmp(&other.w).then(other.item.cmp(&self.item))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// The `cap` best-ranked items among `items`, best first, in O(len log cap).
fn top_ranked(items: impl Iterator<Item = u32>, weights: &[f64], cap: usize, positive_only: bool) -> Vec<Ranked> {
    if cap == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(cap + 1);
    for item in items {
        let r = Ranked { w: weights[item as usize - 1], item };
        if positive_only && !(r.w > 0.0) {
            continue;
        }
        if heap.len() < cap {
            heap.push(Reverse(r));
        } else if heap.peek().is_some_and(|worst| r > worst.0) {
            heap.pop();
            heap.push(Reverse(r));
        }
    }
    let mut out: Vec<Ranked> = heap.into_iter().map(|r| r.0).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

fn weights_at(inst: &Instance, k: f64) -> Vec<f64> {
    inst.weights().iter().zip(inst.prices()).map(|(v, p)| v * (p - k)).collect()
}

fn outcome(inst: &Instance, k: f64, chosen: &[Ranked]) -> (bool, Assortment, f64) {
    let sum: f64 = chosen.iter().map(|r| r.w).sum();
    let mut items: Vec<u32> = chosen.iter().map(|r| r.item).collect();
    items.sort_unstable();
    (sum >= inst.v0() * k, Assortment::from_sorted(items), sum)
}

fn all_items(inst: &Instance) -> impl Iterator<Item = u32> {
    1..=inst.n() as u32
}

/// Top-`cap` strictly positive weights; `exists` iff their sum is at least
/// `v0 K`. The witness is returned either way.
pub fn compare_step_capacitated(k: f64, inst: &Instance, cap: usize) -> (bool, Assortment) {
    let (ok, w, _) = capacitated_probe(k, inst, cap);
    (ok, w)
}

fn capacitated_probe(k: f64, inst: &Instance, cap: usize) -> (bool, Assortment, f64) {
    let w = weights_at(inst, k);
    outcome(inst, k, &top_ranked(all_items(inst), &w, cap, true))
}

/// Like [`compare_step_capacitated`] but the `min` highest-weight items are
/// kept whatever their sign; further positive items fill up to `cap`.
pub fn compare_step_capacitated_lb(k: f64, inst: &Instance, cap: usize, min: usize) -> Result<(bool, Assortment)> {
    check_lb(cap, min)?;
    let (ok, w, _) = lb_probe(k, inst, cap, min);
    Ok((ok, w))
}

fn check_lb(cap: usize, min: usize) -> Result<()> {
    if min > cap {
        return Err(Error::InvalidParameter(format!("forced count {min} exceeds capacity {cap}")));
    }
    Ok(())
}

fn lb_probe(k: f64, inst: &Instance, cap: usize, min: usize) -> (bool, Assortment, f64) {
    let w = weights_at(inst, k);
    let ranked = top_ranked(all_items(inst), &w, cap, false);
    let chosen: Vec<Ranked> =
        ranked.into_iter().enumerate().filter(|(r, x)| *r < min || x.w > 0.0).map(|(_, x)| x).collect();
    outcome(inst, k, &chosen)
}

/// Per-block top-`caps[b]` positive weights; `exists` iff the total is at
/// least `v0 K`. Blocks must partition `1..=n`.
pub fn compare_step_partitioned(
    k: f64,
    inst: &Instance,
    blocks: &[Vec<u32>],
    caps: &[usize],
) -> Result<(bool, Assortment)> {
    check_partition(inst.n(), blocks, caps)?;
    let (ok, w, _) = partitioned_probe(k, inst, blocks, caps);
    Ok((ok, w))
}

fn partitioned_probe(k: f64, inst: &Instance, blocks: &[Vec<u32>], caps: &[usize]) -> (bool, Assortment, f64) {
    let w = weights_at(inst, k);
    let chosen: Vec<Ranked> =
        blocks.iter().zip(caps).flat_map(|(b, &c)| top_ranked(b.iter().copied(), &w, c, true)).collect();
    outcome(inst, k, &chosen)
}

fn check_partition(n: usize, blocks: &[Vec<u32>], caps: &[usize]) -> Result<()> {
    if blocks.len() != caps.len() {
        return Err(Error::InvalidParameter(format!("{} blocks but {} capacities", blocks.len(), caps.len())));
    }
    let mut seen = vec![false; n];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            if i == 0 || i as usize > n {
                return Err(Error::ItemOutOfRange { set: b, item: i, n });
            }
            if std::mem::replace(&mut seen[i as usize - 1], true) {
                return Err(Error::InvalidParameter(format!("item {i} appears in more than one block")));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidParameter(format!("item {} is in no block", missing + 1)));
    }
    Ok(())
}

/// ε-optimal assortment under a capacity constraint, `O(n log C)` per
/// comparison. Capacities above n behave as n; a zero overall capacity is
/// rejected.
pub fn assort_mnl_capacitated(inst: &Instance, constraint: &CapacityConstraint, eps: f64) -> Result<SolverResult> {
    check_eps(eps)?;
    let n = inst.n();
    let v0 = inst.v0();
    let lift = |(_, w, sum): (bool, Assortment, f64)| -> Probe { Some((sum / v0, w.items().to_vec())) };
    let res = match constraint {
        CapacityConstraint::AtMost(cap) => {
            let cap = (*cap).min(n);
            check_cap(cap)?;
            bisect(inst, eps, 0.0, |k| lift(capacitated_probe(k, inst, cap)), |_| {})
        }
        CapacityConstraint::WithForcedTop { cap, min } => {
            check_lb(*cap, *min)?;
            let cap = (*cap).min(n);
            check_cap(cap)?;
            let min = (*min).min(cap);
            bisect(inst, eps, 0.0, |k| lift(lb_probe(k, inst, cap, min)), |_| {})
        }
        CapacityConstraint::Partitioned { blocks, caps } => {
            check_partition(n, blocks, caps)?;
            check_cap(caps.iter().sum())?;
            bisect(inst, eps, 0.0, |k| lift(partitioned_probe(k, inst, blocks, caps)), |_| {})
        }
    };
    Ok(res)
}

fn check_cap(cap: usize) -> Result<()> {
    if cap == 0 {
        return Err(Error::InvalidParameter("capacity must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::e1;

    #[test]
    fn capacitated_examples() {
        let inst = e1();
        let (ok, w) = compare_step_capacitated(3.0, &inst, 2);
        assert!(ok);
        assert_eq!(w.items(), &[1, 2]);
        let (ok, w) = compare_step_capacitated(4.0, &inst, 2);
        assert!(!ok);
        assert_eq!(w.items(), &[1, 2]);
        let (ok, w) = compare_step_capacitated(11.0, &inst, 2);
        assert!(!ok && w.is_empty());
    }

    #[test]
    fn lower_bound_examples() {
        let inst = e1();
        let (ok, w) = compare_step_capacitated_lb(6.0, &inst, 2, 2).unwrap();
        assert!(!ok);
        assert_eq!(w.items(), &[1, 2]);
        for k in [0.5, 3.0, 4.0, 7.0, 11.0] {
            assert_eq!(compare_step_capacitated_lb(k, &inst, 2, 0).unwrap(), compare_step_capacitated(k, &inst, 2));
        }
        // All weights negative: the least negative item is forced in.
        let (ok, w) = compare_step_capacitated_lb(11.0, &inst, 2, 1).unwrap();
        assert!(!ok);
        assert_eq!(w.items(), &[1]);
        assert!(compare_step_capacitated_lb(1.0, &inst, 1, 2).is_err());
    }

    #[test]
    fn partitioned_examples() {
        let inst = e1();
        let (ok, w) = compare_step_partitioned(3.0, &inst, &[vec![1], vec![2, 3]], &[1, 1]).unwrap();
        assert!(ok);
        assert_eq!(w.items(), &[1, 2]);
        for k in [1.0, 3.0, 4.0] {
            assert_eq!(
                compare_step_partitioned(k, &inst, &[vec![1, 2, 3]], &[2]).unwrap(),
                compare_step_capacitated(k, &inst, 2)
            );
        }
        let (ok, w) = compare_step_partitioned(0.0, &inst, &[vec![1], vec![2, 3]], &[0, 0]).unwrap();
        assert!(ok && w.is_empty());
        assert!(!compare_step_partitioned(0.1, &inst, &[vec![1], vec![2, 3]], &[0, 0]).unwrap().0);
        assert!(compare_step_partitioned(1.0, &inst, &[vec![1], vec![2]], &[1, 1]).is_err());
        assert!(compare_step_partitioned(1.0, &inst, &[vec![1, 2], vec![2, 3]], &[1, 1]).is_err());
        assert!(compare_step_partitioned(1.0, &inst, &[vec![1, 2, 3]], &[1, 1]).is_err());
    }

    #[test]
    fn solver_examples() {
        let inst = e1();
        let r = assort_mnl_capacitated(&inst, &CapacityConstraint::AtMost(2), 0.01).unwrap();
        assert_eq!(r.assortment.items(), &[1, 2]);
        assert!((r.revenue - 3.25).abs() < 1e-12);
        let r = assort_mnl_capacitated(&inst, &CapacityConstraint::AtMost(3), 0.01).unwrap();
        assert!((r.revenue - 11.0 / 3.0).abs() < 1e-12);
        let r = assort_mnl_capacitated(&inst, &CapacityConstraint::AtMost(1), 0.01).unwrap();
        assert_eq!(r.assortment.items(), &[2]);
        assert!((r.revenue - 3.2 / 1.4).abs() < 1e-12);
        assert!(assort_mnl_capacitated(&inst, &CapacityConstraint::AtMost(0), 0.01).is_err());
    }

    #[test]
    fn top_ranked_prefers_lower_item_on_ties() {
        let w = [1.0, 2.0, 2.0, 2.0, -1.0];
        let top = top_ranked(1..=5, &w, 2, true);
        assert_eq!(top.iter().map(|r| r.item).collect::<Vec<_>>(), vec![2, 3]);
        assert!(top_ranked(1..=5, &w, 0, true).is_empty());
        assert_eq!(top_ranked(1..=5, &w, 10, true).len(), 4);
        assert_eq!(top_ranked(1..=5, &w, 10, false).len(), 5);
    }
}
