//! Instance generation, itemset and price ingestion, result files.

mod generate;
mod itemsets;
mod prices;
mod results;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use generate::{generate_instance, CollectionSpec, GenSpec, Generated, V0Mode};
pub use itemsets::{filter_and_index, load_itemsets, parse_itemsets, save_itemsets, write_itemsets, ItemMap};
pub use prices::{load_prices, read_prices};
pub use results::{read_results_json, write_results, write_results_to, OutputFormat, ResultRow, RESULT_COLUMNS};

use crate::error::Result;
use crate::model::{AssortmentCollection, Instance};

/// Settings for turning mined itemsets into a full problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub price_lo: f64,
    pub price_hi: f64,
    pub v0: f64,
    pub seed: u64,
}

impl Default for Assembly {
    fn default() -> Self {
        Assembly { price_lo: 0.0, price_hi: 1000.0, v0: 1.0, seed: 0 }
    }
}

/// Attaches prices and weights to the items of a loaded collection. Items
/// missing from `known_prices` get prices drawn from `U[price_lo, price_hi]`;
/// weights are `U[0, 1]`. The returned collection is expressed in the
/// instance's price-rank labels, and `Instance::item_ids` holds the external
/// ids.
pub fn assemble(
    collection: &AssortmentCollection,
    map: &ItemMap,
    known_prices: &[(u64, f64)],
    opts: &Assembly,
) -> Result<(Instance, AssortmentCollection)> {
    let known: HashMap<u64, f64> = known_prices.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let ids = map.ids().to_vec();
    let mut prices = Vec::with_capacity(ids.len());
    for id in &ids {
        let p = match known.get(id) {
            Some(&p) => p,
            None if opts.price_lo == opts.price_hi => opts.price_lo,
            None => rng.random_range(opts.price_lo..=opts.price_hi),
        };
        prices.push(p);
    }
    let weights = (0..ids.len()).map(|_| rng.random::<f64>()).collect();
    let inst = Instance::with_item_ids(ids, prices, weights, opts.v0)?;
    let mut rank = vec![0u32; map.len()];
    for (r, id) in inst.item_ids().iter().enumerate() {
        let dense = map.dense(*id).expect("instance ids come from the map");
        rank[dense as usize - 1] = r as u32 + 1;
    }
    let relabeled = collection.relabel(inst.n(), &rank)?;
    Ok((inst, relabeled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assembled_sets_follow_price_ranks() {
        let sets = parse_itemsets("10 20\n30\n20 30 40\n".as_bytes(), "mem").unwrap();
        let (c, map) = filter_and_index(sets, 1, 5).unwrap();
        let prices = [(10, 1.0), (20, 4.0), (30, 3.0), (40, 2.0)];
        let (inst, rc) = assemble(&c, &map, &prices, &Assembly::default()).unwrap();
        assert_eq!(inst.item_ids(), &[20, 30, 40, 10]);
        assert_eq!(inst.prices(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(rc.get(0), &[1, 4]);
        assert_eq!(rc.get(1), &[2]);
        assert_eq!(rc.get(2), &[1, 2, 3]);
    }

    #[test]
    fn missing_prices_are_drawn() {
        let (c, map) = filter_and_index(vec![vec![1, 2, 3]], 1, 5).unwrap();
        let opts = Assembly { price_lo: 5.0, price_hi: 6.0, ..Assembly::default() };
        let (inst, _) = assemble(&c, &map, &[(2, 100.0)], &opts).unwrap();
        assert_eq!(inst.item_ids()[0], 2);
        assert!(inst.prices()[1..].iter().all(|p| (5.0..=6.0).contains(p)));
    }
}
