//! Ground-truth oracles and a noisy comparison simulator.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate_collection, Assortment, AssortmentCollection, Instance, SolverResult};
use crate::Exec;

/// Largest n accepted by the subset enumerators.
pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Revenue of every set in the collection; the best wins, lowest index on
/// ties. Θ(total items).
pub fn exhaustive_search(c: &AssortmentCollection, inst: &Instance) -> Result<SolverResult> {
    exhaustive_search_with(c, inst, Exec::default())
}

pub fn exhaustive_search_with(c: &AssortmentCollection, inst: &Instance, exec: Exec) -> Result<SolverResult> {
    validate_collection(c, inst)?;
    let start = Instant::now();
    let pick = |a: (usize, f64), b: (usize, f64)| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    let init = (usize::MAX, f64::NEG_INFINITY);
    let (id, rev) = match exec {
        Exec::Sequential => (0..c.len()).map(|id| (id, inst.revenue_of(c.get(id)))).fold(init, pick),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..c.len())
                .into_par_iter()
                .with_min_len(256)
                .map(|id| (id, inst.revenue_of(c.get(id))))
                .reduce(|| init, pick)
        }
    };
    Ok(SolverResult {
        assortment: c.assortment(id),
        revenue: rev,
        revenue_interval: (rev, rev),
        iterations: 0,
        wall_time: start.elapsed(),
    })
}

/// Best subset among those accepted by `feasible`, by depth-first
/// enumeration of all 2^n subsets. The empty set (revenue 0) is a candidate
/// when feasible; ties keep the first subset found.
pub fn brute_force_subsets<F>(inst: &Instance, mut feasible: F) -> Result<SolverResult>
where
    F: FnMut(&[u32]) -> bool,
{
    let n = inst.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let start = Instant::now();
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut items = Vec::with_capacity(n);
    enumerate(inst, 0, 0.0, inst.v0(), &mut items, &mut |items, rev| {
        if best.as_ref().is_none_or(|b| rev > b.1) && feasible(items) {
            best = Some((items.to_vec(), rev));
        }
    });
    let (items, rev) = best.ok_or_else(|| Error::Infeasible("no subset satisfies the constraint".into()))?;
    Ok(SolverResult {
        assortment: Assortment::from_sorted(items),
        revenue: rev,
        revenue_interval: (rev, rev),
        iterations: 0,
        wall_time: start.elapsed(),
    })
}

fn enumerate(
    inst: &Instance,
    next: usize,
    num: f64,
    den: f64,
    items: &mut Vec<u32>,
    visit: &mut dyn FnMut(&[u32], f64),
) {
    if next == inst.n() {
        visit(items, num / den);
        return;
    }
    enumerate(inst, next + 1, num, den, items, visit);
    let (p, v) = (inst.prices()[next], inst.weights()[next]);
    items.push(next as u32 + 1);
    enumerate(inst, next + 1, num + p * v, den + v, items, visit);
    items.pop();
}

/// Exact optimum over `{S : |S| <= cap}`. `cap = 0` yields the empty set.
pub fn brute_force_capacitated(inst: &Instance, cap: usize) -> Result<SolverResult> {
    brute_force_subsets(inst, |s| s.len() <= cap)
}

/// One-sided noisy answers to "K <= theta*?": thresholds above `theta*` are
/// always answered 0; others are answered 1 with probability `1 - p_j` and 0
/// with probability `p_j`, where `p_j` follows the schedule cyclically.
#[derive(Debug, Clone)]
pub struct NoisyComparator {
    theta_star: f64,
    error_probs: Vec<f64>,
    round: usize,
    rng: ChaCha8Rng,
}

impl NoisyComparator {
    pub fn new(theta_star: f64, error_prob: f64, seed: u64) -> Result<Self> {
        Self::with_schedule(theta_star, vec![error_prob], seed)
    }

    pub fn with_schedule(theta_star: f64, error_probs: Vec<f64>, seed: u64) -> Result<Self> {
        if error_probs.is_empty() || error_probs.iter().any(|p| !(*p >= 0.0 && *p < 0.5)) {
            return Err(Error::InvalidParameter("error probabilities must lie in [0, 0.5)".into()));
        }
        Ok(NoisyComparator { theta_star, error_probs, round: 0, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    /// Largest error probability in the schedule.
    pub fn max_error_prob(&self) -> f64 {
        self.error_probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Draws the next comparison bit.
pub fn noisy_compare(nc: &mut NoisyComparator, k: f64) -> bool {
    let p = nc.error_probs[nc.round % nc.error_probs.len()];
    nc.round += 1;
    if k > nc.theta_star {
        return false;
    }
    nc.rng.random::<f64>() >= p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::e1;

    fn all_subsets(n: u32) -> AssortmentCollection {
        let lists = (1u32..1 << n).map(|m| (1..=n).filter(|i| m >> (i - 1) & 1 == 1).collect());
        AssortmentCollection::from_item_lists(n as usize, lists).unwrap()
    }

    #[test]
    fn exhaustive_e1() {
        let inst = e1();
        let c = all_subsets(3);
        for exec in [Exec::Sequential, Exec::default()] {
            let r = exhaustive_search_with(&c, &inst, exec).unwrap();
            assert_eq!(r.assortment.items(), &[1, 2, 3]);
            assert!((r.revenue - 11.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_ties_lowest_index() {
        let inst = e1();
        let c = AssortmentCollection::from_item_lists(3, vec![vec![3], vec![1, 2], vec![1, 2]]).unwrap();
        assert_eq!(exhaustive_search(&c, &inst).unwrap().assortment.items(), &[1, 2]);
        let c = AssortmentCollection::from_item_lists(3, vec![vec![1], vec![3]]).unwrap();
        // {1} and {3} both earn 5/3.
        assert_eq!(exhaustive_search_with(&c, &inst, Exec::Sequential).unwrap().assortment.items(), &[1]);
    }

    #[test]
    fn capacitated_examples() {
        let inst = e1();
        let r = brute_force_capacitated(&inst, 2).unwrap();
        assert_eq!(r.assortment.items(), &[1, 2]);
        assert!((r.revenue - 3.25).abs() < 1e-12);
        let r = brute_force_capacitated(&inst, 0).unwrap();
        assert!(r.assortment.is_empty() && r.revenue == 0.0);
        let r = brute_force_capacitated(&inst, 3).unwrap();
        assert!((r.revenue - exhaustive_search(&all_subsets(3), &inst).unwrap().revenue).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_n() {
        let inst = Instance::new(vec![1.0; 26], vec![0.5; 26], 1.0).unwrap();
        assert!(matches!(brute_force_capacitated(&inst, 2), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn noisy_comparator_rules() {
        let mut exact = NoisyComparator::new(0.5, 0.0, 1).unwrap();
        assert!(noisy_compare(&mut exact, 0.5));
        assert!(noisy_compare(&mut exact, 0.1));
        let mut nc = NoisyComparator::new(0.5, 0.4, 2).unwrap();
        assert!((0..1000).all(|_| !noisy_compare(&mut nc, 0.6)));
        let mut nc = NoisyComparator::new(0.5, 0.3, 3).unwrap();
        let zeros = (0..100_000).filter(|_| !noisy_compare(&mut nc, 0.2)).count();
        assert!((zeros as f64 / 1e5 - 0.3).abs() <= 0.01);
        assert!(NoisyComparator::new(0.5, 0.5, 1).is_err());
    }
}
