use std::time::Instant;

use crate::error::{Error, Result};
use crate::mips::MipsOracle;
use crate::model::{Assortment, Instance, SolverResult};

/// Bisection state after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub lower: f64,
    pub upper: f64,
    pub best: Assortment,
    pub iteration: usize,
}

/// Answer to "is some feasible set worth at least K?": the normalized score
/// `(1/v0) sum_{i in S} v_i (p_i - K)` of a candidate and its items.
pub(crate) type Probe = Option<(f64, Vec<u32>)>;

/// Shared revenue bisection.
///
/// The bracket is kept as `(lower, width)`; in the exact case the width is
/// `p1 / 2^j` without rounding, so the loop runs exactly `⌈log2(p1/eps)⌉`
/// times. `nu_hat` widens the acceptance band: a candidate scoring in
/// `[K̂, K)` with `K̂ = K - nu_hat (1 - K)` lifts the lower end to `K̂`. With
/// `nu_hat = 0` the band is empty and this is plain bisection.
pub(crate) fn bisect<F>(
    inst: &Instance,
    eps: f64,
    nu_hat: f64,
    mut probe: F,
    mut observe: impl FnMut(&SearchState),
) -> SolverResult
where
    F: FnMut(f64) -> Probe,
{
    let start = Instant::now();
    let mut lower = 0.0;
    let mut width = inst.max_price();
    let mut best = vec![1u32];
    let mut best_rev = inst.revenue_of(&best);
    let mut initial = true;
    let mut iteration = 0;
    while width > eps {
        let k = lower + width / 2.0;
        let k_hat = k - nu_hat * (1.0 - k);
        let half = width / 2.0;
        let hit = match probe(k) {
            Some((s, items)) if k <= s => {
                lower = k;
                width = half;
                Some(items)
            }
            Some((s, items)) if k_hat <= s => {
                lower = k_hat;
                width = half + (k - k_hat);
                Some(items)
            }
            _ => {
                width = half;
                None
            }
        };
        if let Some(items) = hit {
            let rev = inst.revenue_of(&items);
            if initial || rev >= best_rev {
                best = items;
                best_rev = rev;
                initial = false;
            }
        }
        iteration += 1;
        observe(&SearchState { lower, upper: lower + width, best: Assortment::from_sorted(best.clone()), iteration });
    }
    SolverResult {
        assortment: Assortment::from_sorted(best),
        revenue: best_rev,
        revenue_interval: (lower, lower + width),
        iterations: iteration,
        wall_time: start.elapsed(),
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be positive and finite, got {eps}")))
    }
}

fn oracle_probe<O: MipsOracle + ?Sized>(oracle: &O) -> impl FnMut(f64) -> Probe + '_ {
    let v0 = oracle.instance().v0();
    move |k| oracle.search(k).map(|c| (c.score / v0, oracle.set(c.set_id).to_vec()))
}

/// Decides `K <= max_S (1/v0) sum_{i in S} v_i (p_i - K)` through a MIPS
/// oracle. With an approximate oracle a `false` may be wrong, a `true` never
/// is, since the witness score is exact. Equality counts as `true`.
pub fn compare_step_general<O: MipsOracle + ?Sized>(k: f64, oracle: &O) -> (bool, Option<Assortment>) {
    let v0 = oracle.instance().v0();
    match oracle.search(k) {
        Some(c) if k <= c.score / v0 => (true, Some(Assortment::from_sorted(oracle.set(c.set_id).to_vec()))),
        _ => (false, None),
    }
}

/// ε-optimal assortment over the oracle's collection by revenue bisection.
///
/// Starts from the singleton `{1}`, which is returned only if no comparison
/// succeeds. With an exact oracle the result is within `eps` of the optimum
/// and the loop runs `⌈log2(p1/eps)⌉` times.
pub fn assort_mnl<O: MipsOracle + ?Sized>(oracle: &O, eps: f64) -> Result<SolverResult> {
    check_eps(eps)?;
    Ok(bisect(oracle.instance(), eps, 0.0, oracle_probe(oracle), |_| {}))
}

/// [`assort_mnl`] that also returns the bracket after every iteration.
pub fn assort_mnl_traced<O: MipsOracle + ?Sized>(oracle: &O, eps: f64) -> Result<(SolverResult, Vec<SearchState>)> {
    check_eps(eps)?;
    let mut trace = Vec::new();
    let res = bisect(oracle.instance(), eps, 0.0, oracle_probe(oracle), |s| trace.push(s.clone()));
    Ok((res, trace))
}

/// Bisection with a single threshold driven by an approximate oracle. Same
/// loop as [`assort_mnl`]; with an LSH oracle a missed candidate shrinks the
/// upper end, so there is no optimality guarantee.
pub fn assort_mnl_approx_simple<O: MipsOracle + ?Sized>(oracle: &O, eps: f64) -> Result<SolverResult> {
    assort_mnl(oracle, eps)
}

/// `nu^2 + 2 nu`: the additive slack of a `(1 + nu)`-approximate search on
/// unit-scale inner products.
pub fn nu_slack(nu: f64) -> f64 {
    nu * nu + 2.0 * nu
}

/// Upper bound on iterations of [`assort_mnl_approx`]:
/// `⌈log2(p1 / (eps - 2 slack))⌉`.
pub fn approx_iteration_bound(p1: f64, eps: f64, nu: f64) -> Result<usize> {
    let floor = 2.0 * nu_slack(nu);
    if !(eps > floor) {
        return Err(Error::InfeasibleTolerance { eps, floor });
    }
    Ok((p1 / (eps - floor)).log2().ceil().max(0.0) as usize)
}

fn check_approx(oracle_inst: &Instance, eps: f64, nu: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu must be non-negative and finite, got {nu}")));
    }
    if oracle_inst.max_price() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "instance must be normalized (highest price <= 1), got {}",
            oracle_inst.max_price()
        )));
    }
    let slack = nu_slack(nu);
    if !(eps > 2.0 * slack) {
        return Err(Error::InfeasibleTolerance { eps, floor: 2.0 * slack });
    }
    Ok(slack)
}

/// Bisection tolerant to a `(1 + nu)`-approximate oracle.
///
/// Expects an oracle over a normalized instance (highest price at most 1);
/// rescale the result with [`SolverResult::rescaled`]. A candidate scoring
/// below `K` but at least `K̂ = 1 + (1 + nu)^2 (K - 1)` still raises the lower
/// end, to `K̂`. The bracket obeys `U_j - L_j <= p1 / 2^j + 2 (nu^2 + 2 nu)`.
pub fn assort_mnl_approx<O: MipsOracle + ?Sized>(oracle: &O, eps: f64, nu: f64) -> Result<SolverResult> {
    let slack = check_approx(oracle.instance(), eps, nu)?;
    Ok(bisect(oracle.instance(), eps, slack, oracle_probe(oracle), |_| {}))
}

/// [`assort_mnl_approx`] that also returns the bracket after every iteration.
pub fn assort_mnl_approx_traced<O: MipsOracle + ?Sized>(
    oracle: &O,
    eps: f64,
    nu: f64,
) -> Result<(SolverResult, Vec<SearchState>)> {
    let slack = check_approx(oracle.instance(), eps, nu)?;
    let mut trace = Vec::new();
    let res = bisect(oracle.instance(), eps, slack, oracle_probe(oracle), |s| trace.push(s.clone()));
    Ok((res, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mips::{embed_collection, ExactMips};
    use crate::model::tests::e1;
    use crate::model::AssortmentCollection;

    fn all_subsets(n: u32) -> AssortmentCollection {
        let lists = (1u32..1 << n).map(|m| (1..=n).filter(|i| m >> (i - 1) & 1 == 1).collect());
        AssortmentCollection::from_item_lists(n as usize, lists).unwrap()
    }

    #[test]
    fn compare_step_examples() {
        let inst = e1();
        let c = AssortmentCollection::from_item_lists(3, vec![vec![1], vec![1, 2], vec![2, 3]]).unwrap();
        let emb = embed_collection(&c, &inst).unwrap();
        let oracle = ExactMips::new(&emb);
        let (ok, w) = compare_step_general(3.0, &oracle);
        assert!(ok);
        assert_eq!(w.unwrap().items(), &[1, 2]);
        assert_eq!(compare_step_general(4.0, &oracle), (false, None));
        assert!(compare_step_general(0.0, &oracle).0);
    }

    #[test]
    fn e1_all_subsets() {
        let inst = e1();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        let res = assort_mnl(&ExactMips::new(&emb), 0.01).unwrap();
        assert!(res.revenue >= 11.0 / 3.0 - 0.01);
        assert_eq!(res.iterations, 10);
        let (lo, hi) = res.revenue_interval;
        assert!(hi - lo <= 0.01 && lo <= 11.0 / 3.0 && 11.0 / 3.0 <= hi);
    }

    #[test]
    fn seven_iterations_at_p10_eps_tenth() {
        let inst = e1();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        assert_eq!(assort_mnl(&ExactMips::new(&emb), 0.1).unwrap().iterations, 7);
    }

    #[test]
    fn sentinel_survives_when_nothing_clears() {
        // Every set is worth less than the smallest probed threshold.
        let inst = Instance::new(vec![10.0, 0.01, 0.01], vec![0.001, 0.5, 0.5], 1.0).unwrap();
        let c = AssortmentCollection::from_item_lists(3, vec![vec![2], vec![3], vec![2, 3]]).unwrap();
        let emb = embed_collection(&c, &inst).unwrap();
        let res = assort_mnl(&ExactMips::new(&emb), 0.5).unwrap();
        assert_eq!(res.assortment.items(), &[1]);
        assert_eq!(res.revenue_interval.0, 0.0);
    }

    #[test]
    fn bracket_holds_optimum_every_iteration() {
        let inst = e1();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        let (_, trace) = assort_mnl_traced(&ExactMips::new(&emb), 0.001).unwrap();
        for s in &trace {
            assert!(s.lower <= 11.0 / 3.0 && 11.0 / 3.0 <= s.upper, "{s:?}");
        }
    }

    #[test]
    fn approx_with_zero_nu_matches_exact() {
        let inst = e1().normalize().unwrap();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        let oracle = ExactMips::new(&emb);
        let a = assort_mnl(&oracle, 0.001).unwrap();
        let b = assort_mnl_approx(&oracle, 0.001, 0.0).unwrap();
        assert_eq!(a.assortment, b.assortment);
        assert_eq!(a.revenue, b.revenue);
        assert_eq!(a.revenue_interval, b.revenue_interval);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn approx_requires_normalized_instance_and_feasible_eps() {
        let inst = e1();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        assert!(assort_mnl_approx(&ExactMips::new(&emb), 0.1, 0.0).is_err());
        let norm = inst.normalize().unwrap();
        let emb = embed_collection(&c, &norm).unwrap();
        let err = assort_mnl_approx(&ExactMips::new(&emb), 0.04, 0.01).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTolerance { .. }));
        assert!(assort_mnl_approx(&ExactMips::new(&emb), 0.05, 0.01).is_ok());
    }

    #[test]
    fn approx_bound_example() {
        assert_eq!(approx_iteration_bound(1.0, 0.1, 0.01).unwrap(), 5);
        assert!(approx_iteration_bound(1.0, 0.04, 0.01).is_err());
    }

    #[test]
    fn rejects_bad_eps() {
        let inst = e1();
        let c = all_subsets(3);
        let emb = embed_collection(&c, &inst).unwrap();
        for eps in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(assort_mnl(&ExactMips::new(&emb), eps).is_err());
        }
    }
}
