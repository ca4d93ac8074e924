use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssortmentCollection, Instance};

/// How the no-purchase weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Mode {
    Fixed(f64),
    /// Drawn from `U[lo, hi]`, clipped into (0, 1].
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl Default for V0Mode {
    fn default() -> Self {
        V0Mode::Fixed(1.0)
    }
}

/// Feasible family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionSpec {
    /// `sets` distinct non-empty subsets drawn uniformly.
    General { sets: usize },
    /// No explicit collection; the caller imposes a capacity.
    Capacitated,
}

/// Synthetic instance recipe. Prices are `U[price_lo, price_hi]`, weights
/// `U[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub price_lo: f64,
    pub price_hi: f64,
    #[serde(default)]
    pub v0: V0Mode,
    pub collection: CollectionSpec,
    pub seed: u64,
}

impl GenSpec {
    /// `n` items with prices in `U[0, 1000]`, `v0 = 1`, `sets` random sets.
    pub fn general(n: usize, sets: usize, seed: u64) -> Self {
        GenSpec {
            n,
            price_lo: 0.0,
            price_hi: 1000.0,
            v0: V0Mode::Fixed(1.0),
            collection: CollectionSpec::General { sets },
            seed,
        }
    }

    pub fn capacitated(n: usize, seed: u64) -> Self {
        GenSpec { collection: CollectionSpec::Capacitated, ..Self::general(n, 1, seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.price_lo >= 0.0 && self.price_lo <= self.price_hi && self.price_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "price range [{}, {}] must satisfy 0 <= lo <= hi < inf",
                self.price_lo, self.price_hi
            )));
        }
        match self.v0 {
            V0Mode::Fixed(v) if !(v > 0.0 && v <= 1.0) => {
                return Err(Error::InvalidParameter(format!("v0 = {v} outside (0, 1]")));
            }
            V0Mode::Uniform { lo, hi } if !(lo > 0.0 && lo <= hi && hi <= 1.0) => {
                return Err(Error::InvalidParameter(format!("v0 range [{lo}, {hi}] must lie in (0, 1]")));
            }
            _ => {}
        }
        if let CollectionSpec::General { sets } = self.collection {
            if sets == 0 {
                return Err(Error::InvalidParameter("at least one set is required".into()));
            }
            let available = if self.n >= 64 { u64::MAX } else { (1u64 << self.n) - 1 };
            if sets as u64 > available {
                return Err(Error::Infeasible(format!(
                    "{sets} distinct non-empty sets requested but only {available} exist over {} items",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// A generated instance and, for general specs, its collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    pub collection: Option<AssortmentCollection>,
}

/// Draws an instance; a pure function of the spec.
pub fn generate_instance(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let prices = draw_prices(&mut rng, n, spec.price_lo, spec.price_hi);
    let weights = (0..n).map(|_| rng.random::<f64>()).collect();
    let v0 = match spec.v0 {
        V0Mode::Fixed(v) => v,
        V0Mode::Uniform { lo, hi } => draw_range(&mut rng, lo, hi),
    };
    let instance = Instance::new(prices, weights, v0)?;
    let collection = match spec.collection {
        CollectionSpec::General { sets } => Some(random_sets(&mut rng, n, sets)?),
        CollectionSpec::Capacitated => None,
    };
    Ok(Generated { instance, collection })
}

pub(crate) fn draw_prices<R: Rng + ?Sized>(rng: &mut R, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..count).map(|_| draw_range(rng, lo, hi)).collect()
}

fn draw_range<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

// Below this many items all 2^n - 1 subsets can be indexed directly.
const DENSE_LIMIT: usize = 20;

/// `count` distinct non-empty subsets of `1..=n`, uniform over all such
/// subsets.
fn random_sets<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Result<AssortmentCollection> {
    let total = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let lists: Vec<Vec<u32>> = if n <= DENSE_LIMIT && count as u64 * 2 > total {
        // Dense request: sample masks without replacement.
        index::sample(rng, total as usize, count).into_iter().map(|k| mask_items(k as u64 + 1, n)).collect()
    } else {
        let words = n.div_ceil(64);
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let bits: Vec<u64> = (0..words)
                .map(|w| {
                    let r: u64 = rng.random();
                    let width = (n - 64 * w).min(64);
                    if width == 64 {
                        r
                    } else {
                        r & ((1u64 << width) - 1)
                    }
                })
                .collect();
            if bits.iter().all(|&b| b == 0) || seen.contains(&bits) {
                continue;
            }
            let items = (0..n).filter(|&i| bits[i / 64] >> (i % 64) & 1 == 1).map(|i| i as u32 + 1).collect();
            seen.insert(bits);
            out.push(items);
        }
        out
    };
    AssortmentCollection::from_item_lists(n, lists)
}

fn mask_items(mask: u64, n: usize) -> Vec<u32> {
    (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| i as u32 + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_items_seven_sets_is_everything() {
        let g = generate_instance(&GenSpec::general(3, 7, 1)).unwrap();
        let c = g.collection.unwrap();
        let mut sets: Vec<Vec<u32>> = c.iter().map(<[u32]>::to_vec).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![1], vec![1, 2], vec![1, 2, 3], vec![1, 3], vec![2], vec![2, 3], vec![3]]);
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate_instance(&GenSpec::general(40, 300, 9)).unwrap();
        let b = generate_instance(&GenSpec::general(40, 300, 9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a.instance).unwrap(), serde_json::to_string(&b.instance).unwrap());
        assert_ne!(a, generate_instance(&GenSpec::general(40, 300, 10)).unwrap());
    }

    #[test]
    fn sets_are_distinct_and_nonempty() {
        for (n, count) in [(5, 20), (12, 4000), (70, 500)] {
            let c = generate_instance(&GenSpec::general(n, count, 3)).unwrap().collection.unwrap();
            assert_eq!(c.len(), count);
            let distinct: HashSet<&[u32]> = c.iter().collect();
            assert_eq!(distinct.len(), count);
            assert!(c.iter().all(|s| !s.is_empty() && s.iter().all(|&i| i >= 1 && i as usize <= n)));
        }
    }

    #[test]
    fn too_many_sets_is_an_error() {
        assert!(matches!(generate_instance(&GenSpec::general(3, 8, 1)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn prices_sorted_and_in_range() {
        let g = generate_instance(&GenSpec::capacitated(500, 2)).unwrap();
        assert!(g.collection.is_none());
        let p = g.instance.prices();
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert!(p.iter().all(|&x| (0.0..=1000.0).contains(&x)));
        assert!(g.instance.weights().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn uniform_v0_in_range() {
        let spec = GenSpec { v0: V0Mode::Uniform { lo: 0.2, hi: 0.6 }, ..GenSpec::capacitated(5, 4) };
        let v0 = generate_instance(&spec).unwrap().instance.v0();
        assert!((0.2..=0.6).contains(&v0));
        let bad = GenSpec { v0: V0Mode::Fixed(1.5), ..GenSpec::capacitated(5, 4) };
        assert!(generate_instance(&bad).is_err());
    }
}
