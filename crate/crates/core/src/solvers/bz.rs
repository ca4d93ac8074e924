//! Noisy bisection that keeps a piecewise-constant posterior over the optimal
//! revenue and queries near its median (Burnashev-Zigangirov).

use std::time::Instant;

use rand::Rng;

use super::search::check_eps;
use crate::error::{Error, Result};
use crate::mips::MipsOracle;
use crate::model::{Assortment, SolverResult};

/// Posterior over `[0, p1]` with constant density on bins of width `eps`:
/// `I_1 = [0, eps]`, `I_i = (eps (i-1), eps i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    mass: Vec<f64>,
    eps: f64,
    p1: f64,
}

impl Posterior {
    /// Uniform posterior; `p1 / eps` must be a whole number.
    pub fn uniform(p1: f64, eps: f64) -> Result<Self> {
        let bins = bin_count(p1, eps)?;
        Ok(Posterior { mass: vec![1.0 / bins as f64; bins], eps, p1 })
    }

    /// Posterior with explicit bin masses (not renormalized).
    pub fn from_masses(mass: Vec<f64>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if mass.is_empty() || mass.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter("bin masses must be non-negative and finite".into()));
        }
        let p1 = eps * mass.len() as f64;
        Ok(Posterior { mass, eps, p1 })
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// 1-based index of the first bin where the cumulative mass exceeds 1/2.
    pub fn median_bin(&self) -> usize {
        let mut acc = 0.0;
        for (i, a) in self.mass.iter().enumerate() {
            acc += a;
            if acc > 0.5 {
                return i + 1;
            }
        }
        self.mass.len()
    }

    /// Point where the posterior CDF reaches 1/2, interpolated inside its bin.
    pub fn median(&self) -> f64 {
        let u = self.median_bin();
        let below: f64 = self.mass[..u - 1].iter().sum();
        let a = self.mass[u - 1];
        let frac = if a > 0.0 { ((0.5 - below) / a).clamp(0.0, 1.0) } else { 1.0 };
        self.eps * ((u - 1) as f64 + frac)
    }

    /// 1-based bin containing `x`, clamped to the support.
    pub fn bin_of(&self, x: f64) -> usize {
        ((x / self.eps).ceil() as usize).clamp(1, self.bins())
    }

    /// `sum_{i <= u} a_i - sum_{i > u} a_i`.
    fn split(&self, u: usize) -> f64 {
        let low: f64 = self.mass[..u].iter().sum();
        let high: f64 = self.mass[u..].iter().sum();
        low - high
    }
}

fn bin_count(p1: f64, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let ratio = p1 / eps;
    let bins = ratio.round();
    if !(bins >= 1.0) || (ratio - bins).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!("p1 / eps = {ratio} must be a positive whole number")));
    }
    Ok(bins as usize)
}

/// Picks the next threshold. With `u` the median bin, returns `K = eps (u-1)`
/// with probability `tau2 / (tau1 + tau2)` and `K = eps u` otherwise, where
/// `tau1 = sum_{i >= u} a_i - sum_{i < u} a_i` and
/// `tau2 = sum_{i <= u} a_i - sum_{i > u} a_i`.
pub fn bz_sample_selection<R: Rng + ?Sized>(post: &Posterior, rng: &mut R) -> (f64, usize) {
    let u = post.median_bin();
    let tau1 = -post.split(u - 1);
    let tau2 = post.split(u);
    let denom = tau1 + tau2;
    let k = if denom > 0.0 {
        let q = tau2 / denom;
        if rng.random::<f64>() < q {
            u - 1
        } else {
            u
        }
    } else {
        u
    };
    (post.eps * k as f64, u)
}

/// Bayes update after observing bit `h` at threshold `K = eps u`.
///
/// Bins at or below `u` are scaled by `2 beta / (1 + tau (beta - alpha))`
/// when `h = 0` and by `2 alpha / (1 - tau (beta - alpha))` when `h = 1`;
/// bins above `u` by `2 alpha / (1 + tau (beta - alpha))` and
/// `2 beta / (1 - tau (beta - alpha))`. The denominators make the masses sum
/// to one without renormalizing.
pub fn bz_posterior_update(post: &Posterior, u: usize, h: bool, alpha: f64) -> Posterior {
    let mut next = post.clone();
    update_in_place(&mut next, u, h, alpha);
    next
}

fn update_in_place(post: &mut Posterior, u: usize, h: bool, alpha: f64) {
    let beta = 1.0 - alpha;
    // Measured against the current total so rounding drift in the total is
    // carried forward instead of amplified.
    let tau = post.split(u) / post.total();
    let gap = beta - alpha;
    let (low, high) = if h {
        let d = 1.0 - tau * gap;
        (2.0 * alpha / d, 2.0 * beta / d)
    } else {
        let d = 1.0 + tau * gap;
        (2.0 * beta / d, 2.0 * alpha / d)
    };
    for (i, a) in post.mass.iter_mut().enumerate() {
        *a *= if i < u { low } else { high };
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0, 0.5), got {alpha}")))
    }
}

/// Runs `rounds` rounds of sample selection, observation and update from a
/// uniform posterior. `observe(round, K)` returns the comparison bit;
/// `inspect` sees the posterior after every update.
pub fn bz_search<R, F, G>(
    p1: f64,
    eps: f64,
    rounds: usize,
    alpha: f64,
    rng: &mut R,
    mut observe: F,
    mut inspect: G,
) -> Result<Posterior>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64) -> bool,
    G: FnMut(&Posterior),
{
    check_alpha(alpha)?;
    let mut post = Posterior::uniform(p1, eps)?;
    for round in 0..rounds {
        let (k, _) = bz_sample_selection(&post, rng);
        let h = observe(round, k);
        let u = (k / eps).round() as usize;
        update_in_place(&mut post, u, h, alpha);
        inspect(&post);
    }
    Ok(post)
}

/// Outcome of [`assort_mnl_bz`].
#[derive(Debug, Clone)]
pub struct BzOutcome {
    /// Best witness seen, its revenue, and the bin holding `estimate`.
    pub result: SolverResult,
    /// `max(median, revenue of the best witness)`.
    pub estimate: f64,
    pub median: f64,
    pub posterior: Posterior,
}

/// Noisy bisection over the oracles' collection.
///
/// Round `j` queries `oracles[j % len]`, so passing T independently seeded
/// LSH indexes gives independent errors across rounds. A round's bit is
/// `1{K <= score / v0}` for the returned candidate, 0 if none. `p1 / eps`
/// must be a whole number.
pub fn assort_mnl_bz<O, R>(oracles: &[O], eps: f64, rounds: usize, alpha: f64, rng: &mut R) -> Result<BzOutcome>
where
    O: MipsOracle,
    R: Rng + ?Sized,
{
    let start = Instant::now();
    let first = oracles.first().ok_or_else(|| Error::InvalidParameter("no oracles supplied".into()))?;
    let inst = first.instance();
    let v0 = inst.v0();
    let mut best = vec![1u32];
    let mut best_rev = inst.revenue_of(&best);
    let post = bz_search(
        inst.max_price(),
        eps,
        rounds,
        alpha,
        rng,
        |round, k| {
            let oracle = &oracles[round % oracles.len()];
            match oracle.search(k) {
                Some(c) => {
                    let items = oracle.set(c.set_id);
                    let rev = inst.revenue_of(items);
                    if rev > best_rev {
                        best = items.to_vec();
                        best_rev = rev;
                    }
                    k <= c.score / v0
                }
                None => false,
            }
        },
        |_| {},
    )?;
    let median = post.median();
    let estimate = median.max(best_rev);
    let bin = post.bin_of(estimate);
    let result = SolverResult {
        assortment: Assortment::from_sorted(best),
        revenue: best_rev,
        revenue_interval: (eps * (bin - 1) as f64, eps * bin as f64),
        iterations: rounds,
        wall_time: start.elapsed(),
    };
    Ok(BzOutcome { result, estimate, median, posterior: post })
}

/// `((p1 - eps) / eps) (pe / 2 alpha + (1 - pe) / 2 beta)^T`.
pub fn bz_error_bound(p1: f64, eps: f64, pe: f64, alpha: f64, rounds: usize) -> f64 {
    let beta = 1.0 - alpha;
    let w = pe / (2.0 * alpha) + (1.0 - pe) / (2.0 * beta);
    (p1 - eps) / eps * w.powi(rounds as i32)
}

/// Rounds needed for failure probability at most `gamma` when the per-round
/// error is at most `p_max < 1/4` and `alpha = sqrt(p_max)`:
/// `⌈log_{1/2 + sqrt(p_max)} (gamma eps / (p1 - eps))⌉`.
pub fn bz_required_rounds(p1: f64, eps: f64, p_max: f64, gamma: f64) -> Result<usize> {
    if !(0.0..0.25).contains(&p_max) {
        return Err(Error::InvalidParameter(format!("p_max must lie in [0, 0.25), got {p_max}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) || !(p1 > eps && eps > 0.0) {
        return Err(Error::InvalidParameter("need 0 < gamma < 1 and 0 < eps < p1".into()));
    }
    let base = 0.5 + p_max.sqrt();
    Ok(((gamma * eps / (p1 - eps)).ln() / base.ln()).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn uniform_four_bins_selects_two_eps() {
        let post = Posterior::uniform(1.0, 0.25).unwrap();
        let mut r = rng();
        for _ in 0..50 {
            assert_eq!(bz_sample_selection(&post, &mut r), (0.5, 3));
        }
    }

    #[test]
    fn mass_in_first_bin() {
        let post = Posterior::from_masses(vec![1.0, 0.0, 0.0, 0.0], 0.25).unwrap();
        let mut r = rng();
        for _ in 0..50 {
            let (k, u) = bz_sample_selection(&post, &mut r);
            assert_eq!(u, 1);
            assert!(k == 0.0 || k == 0.25);
        }
    }

    #[test]
    fn symmetric_posterior_hits_median_boundary() {
        let post = Posterior::from_masses(vec![0.1, 0.4, 0.4, 0.1], 0.5).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            assert_eq!(bz_sample_selection(&post, &mut r).0, 1.0);
        }
        assert_eq!(post.median(), 1.0);
    }

    #[test]
    fn update_examples() {
        let post = Posterior::uniform(1.0, 0.25).unwrap();
        let up = bz_posterior_update(&post, 2, true, 0.1);
        for (a, want) in up.masses().iter().zip([0.05, 0.05, 0.45, 0.45]) {
            assert!((a - want).abs() < 1e-15);
        }
        let down = bz_posterior_update(&post, 2, false, 0.1);
        for (a, want) in down.masses().iter().zip([0.45, 0.45, 0.05, 0.05]) {
            assert!((a - want).abs() < 1e-15);
        }
    }

    #[test]
    fn update_keeps_unit_mass_at_edges() {
        let post = Posterior::from_masses(vec![0.1, 0.2, 0.3, 0.4], 1.0).unwrap();
        for u in 0..=4 {
            for h in [false, true] {
                let next = bz_posterior_update(&post, u, h, 0.2);
                assert!((next.total() - 1.0).abs() < 1e-12, "u={u} h={h}");
            }
        }
    }

    #[test]
    fn median_interpolates() {
        let post = Posterior::from_masses(vec![0.2, 0.6, 0.2], 1.0).unwrap();
        assert!((post.median() - 1.5).abs() < 1e-12);
        assert_eq!(post.bin_of(0.0), 1);
        assert_eq!(post.bin_of(1.0), 1);
        assert_eq!(post.bin_of(1.0001), 2);
        assert_eq!(post.bin_of(9.0), 3);
    }

    #[test]
    fn rejects_fractional_bin_count() {
        assert!(Posterior::uniform(1.0, 0.3).is_err());
        assert!(Posterior::uniform(1.0, 0.1).is_ok());
        assert_eq!(Posterior::uniform(10.0, 0.1).unwrap().bins(), 100);
    }

    #[test]
    fn noiseless_search_converges() {
        let theta = 0.537;
        let mut r = rng();
        let post =
            bz_search(1.0, 0.01, 7 + 10, 0.1, &mut r, |_, k| k <= theta, |p| assert!((p.total() - 1.0).abs() < 1e-9))
                .unwrap();
        assert!((post.median() - theta).abs() <= 0.01);
    }

    #[test]
    fn required_rounds_example() {
        assert_eq!(bz_required_rounds(1.0, 0.1, 0.04, 0.05).unwrap(), 15);
        assert!(bz_required_rounds(1.0, 0.1, 0.3, 0.05).is_err());
    }

    #[test]
    fn error_bound_noiseless() {
        let b = bz_error_bound(1.0, 0.1, 0.0, 0.1, 3);
        assert!((b - 9.0 * (1.0f64 / 1.8).powi(3)).abs() < 1e-12);
    }
}
