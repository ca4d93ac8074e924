//! Instances, assortments and exact MNL revenue.
//!
//! Items are identified by their 1-based rank in descending price order, so
//! item 1 always carries the highest price `p_1`. External identifiers survive
//! through [`Instance::item_ids`].

use std::collections::HashSet;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// An MNL assortment-planning instance.
///
/// Prices are stored non-increasing; the constructor sorts unsorted input and
/// keeps the external item ids aligned with the new order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    prices: Vec<f64>,
    weights: Vec<f64>,
    v0: f64,
    price_scale: f64,
    item_ids: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    prices: Vec<f64>,
    weights: Vec<f64>,
    v0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    item_ids: Option<Vec<u64>>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        let ids = r.item_ids.unwrap_or_else(|| (1..=r.prices.len() as u64).collect());
        let mut inst = Instance::with_item_ids(ids, r.prices, r.weights, r.v0)?;
        if let Some(scale) = r.price_scale {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::InvalidInstance(format!("price_scale {scale} must be positive")));
            }
            inst.price_scale = scale;
        }
        Ok(inst)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        InstanceRepr {
            prices: inst.prices,
            weights: inst.weights,
            v0: inst.v0,
            price_scale: Some(inst.price_scale),
            item_ids: Some(inst.item_ids),
        }
    }
}

impl Instance {
    /// Builds an instance whose external item ids are the 1-based input positions.
    pub fn new(prices: Vec<f64>, weights: Vec<f64>, v0: f64) -> Result<Self> {
        let ids = (1..=prices.len() as u64).collect();
        Self::with_item_ids(ids, prices, weights, v0)
    }

    pub fn with_item_ids(ids: Vec<u64>, prices: Vec<f64>, weights: Vec<f64>, v0: f64) -> Result<Self> {
        let n = prices.len();
        if n == 0 {
            return Err(Error::InvalidInstance("at least one item is required".into()));
        }
        if weights.len() != n || ids.len() != n {
            return Err(Error::InvalidInstance(format!(
                "length mismatch: {n} prices, {} weights, {} ids",
                weights.len(),
                ids.len()
            )));
        }
        if !(v0 > 0.0 && v0 <= 1.0) {
            return Err(Error::InvalidInstance(format!("v0 = {v0} outside (0, 1]")));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidInstance(format!("price {p} must be finite and non-negative")));
        }
        if let Some(v) = weights.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInstance(format!("weight {v} outside [0, 1]")));
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(id) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::InvalidInstance(format!("duplicate item id {id}")));
        }

        if prices.windows(2).all(|w| w[0] >= w[1]) {
            return Ok(Instance { prices, weights, v0, price_scale: 1.0, item_ids: ids });
        }
        // stable, so equal prices keep their input order
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| prices[b].total_cmp(&prices[a]));
        Ok(Instance {
            prices: order.iter().map(|&i| prices[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
            v0,
            price_scale: 1.0,
            item_ids: order.iter().map(|&i| ids[i]).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Factor that converts prices and revenues back to the original units.
    pub fn price_scale(&self) -> f64 {
        self.price_scale
    }

    /// External id of each item, indexed by rank - 1.
    pub fn item_ids(&self) -> &[u64] {
        &self.item_ids
    }

    /// The highest price `p_1`, an upper bound on every revenue.
    pub fn max_price(&self) -> f64 {
        self.prices[0]
    }

    /// Exact MNL revenue of a set of 1-based item ranks.
    ///
    /// Panics if an item is out of range; use [`revenue`] for checked input.
    pub fn revenue_of(&self, items: &[u32]) -> f64 {
        if items.is_empty() {
            return 0.0;
        }
        let (num, den) = items.iter().fold((0.0, self.v0), |(num, den), &i| {
            let k = i as usize - 1;
            (num + self.prices[k] * self.weights[k], den + self.weights[k])
        });
        num / den
    }

    /// Divides prices by `p_1`; revenues scale by the same factor and every
    /// argmax is unchanged. Normalizing twice is a no-op.
    pub fn normalize(&self) -> Result<Instance> {
        let p1 = self.max_price();
        if p1 <= 0.0 {
            return Err(Error::DegenerateInstance);
        }
        Ok(Instance {
            prices: self.prices.iter().map(|p| p / p1).collect(),
            weights: self.weights.clone(),
            v0: self.v0,
            price_scale: self.price_scale * p1,
            item_ids: self.item_ids.clone(),
        })
    }
}

/// Exact revenue with range checking against the instance.
pub fn revenue(a: &Assortment, inst: &Instance) -> Result<f64> {
    a.check_range(0, inst.n())?;
    Ok(inst.revenue_of(a.items()))
}

/// Returns a copy of `inst` with prices divided by `p_1`.
pub fn normalize(inst: &Instance) -> Result<Instance> {
    inst.normalize()
}

/// A set of 1-based item ranks, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assortment(Vec<u32>);

impl Assortment {
    /// Sorts the items; duplicates are rejected.
    pub fn new(mut items: Vec<u32>) -> Result<Self> {
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem { set: 0, item: w[0] });
        }
        Ok(Assortment(items))
    }

    /// The empty sentinel meaning "no feasible set found".
    pub fn empty() -> Self {
        Assortment(Vec::new())
    }

    pub(crate) fn from_sorted(items: Vec<u32>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Assortment(items)
    }

    pub fn items(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: u32) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Fraction of `reference` covered by `self`: |A ∩ A*| / |A*|.
    ///
    /// An empty reference is fully covered only by an empty set.
    pub fn overlap(&self, reference: &Assortment) -> f64 {
        if reference.is_empty() {
            return if self.is_empty() { 1.0 } else { 0.0 };
        }
        let common = reference.0.iter().filter(|i| self.contains(**i)).count();
        common as f64 / reference.len() as f64
    }

    fn check_range(&self, set: usize, n: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i == 0 || i as usize > n) {
            Some(&item) => Err(Error::ItemOutOfRange { set, item, n }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Assortment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// The explicit feasible family: a non-empty list of non-empty assortments
/// over items `1..=n`, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssortmentCollection {
    n: usize,
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl AssortmentCollection {
    /// Validates every set against `n` and packs the collection.
    pub fn new(n: usize, sets: Vec<Assortment>) -> Result<Self> {
        check_sets(&sets, n)?;
        let total = sets.iter().map(Assortment::len).sum();
        let mut offsets = Vec::with_capacity(sets.len() + 1);
        let mut items = Vec::with_capacity(total);
        offsets.push(0);
        for s in sets {
            items.extend_from_slice(s.items());
            offsets.push(items.len());
        }
        Ok(AssortmentCollection { n, offsets, items })
    }

    /// Builds a collection from raw item lists, sorting each list.
    pub fn from_item_lists<I>(n: usize, lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let sets = lists
            .into_iter()
            .enumerate()
            .map(|(k, items)| {
                Assortment::new(items).map_err(|e| match e {
                    Error::DuplicateItem { item, .. } => Error::DuplicateItem { set: k, item },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, sets)
    }

    /// Number of items the sets range over.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sets, N.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Items of set `id`, sorted.
    pub fn get(&self, id: usize) -> &[u32] {
        &self.items[self.offsets[id]..self.offsets[id + 1]]
    }

    pub fn assortment(&self, id: usize) -> Assortment {
        Assortment::from_sorted(self.get(id).to_vec())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.offsets.windows(2).map(move |w| &self.items[w[0]..w[1]])
    }

    /// Total number of stored item references.
    pub fn total_items(&self) -> usize {
        self.items.len()
    }

    /// Renames items through `map` (old 1-based item -> new 1-based item).
    pub fn relabel(&self, new_n: usize, map: &[u32]) -> Result<Self> {
        if map.len() != self.n {
            return Err(Error::ItemCountMismatch { expected: self.n, found: map.len() });
        }
        Self::from_item_lists(new_n, self.iter().map(|s| s.iter().map(|&i| map[i as usize - 1]).collect()))
    }
}

fn check_sets(sets: &[Assortment], n: usize) -> Result<()> {
    if sets.is_empty() {
        return Err(Error::EmptyCollection);
    }
    for (k, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptySet { set: k });
        }
        s.check_range(k, n)?;
        if let Some(w) = s.0.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem { set: k, item: w[0] });
        }
    }
    Ok(())
}

/// Checks raw sets against an instance; reports the first offending set.
pub fn validate_sets(sets: &[Assortment], inst: &Instance) -> Result<()> {
    check_sets(sets, inst.n())
}

/// Checks that a packed collection ranges over the instance's items.
pub fn validate_collection(c: &AssortmentCollection, inst: &Instance) -> Result<()> {
    if c.n() != inst.n() {
        return Err(Error::ItemCountMismatch { expected: inst.n(), found: c.n() });
    }
    if c.is_empty() {
        return Err(Error::EmptyCollection);
    }
    for (k, s) in c.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptySet { set: k });
        }
        if let Some(&item) = s.iter().find(|&&i| i == 0 || i as usize > c.n()) {
            return Err(Error::ItemOutOfRange { set: k, item, n: c.n() });
        }
    }
    Ok(())
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub assortment: Assortment,
    /// Exact revenue of `assortment`, not the search bound.
    pub revenue: f64,
    /// Final search bracket `(L, U)`.
    pub revenue_interval: (f64, f64),
    pub iterations: usize,
    #[serde(rename = "wall_time_s", serialize_with = "as_seconds")]
    pub wall_time: Duration,
}

impl SolverResult {
    /// Converts revenue and bracket from normalized back to original units.
    pub fn rescaled(mut self, scale: f64) -> Self {
        self.revenue *= scale;
        self.revenue_interval = (self.revenue_interval.0 * scale, self.revenue_interval.1 * scale);
        self
    }
}

fn as_seconds<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The three-item fixture used throughout the test suite.
    pub(crate) fn e1() -> Instance {
        Instance::new(vec![10.0, 8.0, 5.0], vec![0.2, 0.4, 0.5], 1.0).unwrap()
    }

    fn set(items: &[u32]) -> Assortment {
        Assortment::new(items.to_vec()).unwrap()
    }

    #[test]
    fn revenue_examples() {
        let inst = e1();
        assert_eq!(revenue(&Assortment::empty(), &inst).unwrap(), 0.0);
        assert!((revenue(&set(&[1, 2]), &inst).unwrap() - 3.25).abs() < 1e-12);
        assert!((revenue(&set(&[1, 2, 3]), &inst).unwrap() - 3.666_666_666_7).abs() < 1e-4);
    }

    #[test]
    fn revenue_rejects_out_of_range() {
        let inst = e1();
        assert!(matches!(revenue(&set(&[4]), &inst), Err(Error::ItemOutOfRange { item: 4, .. })));
        assert!(matches!(revenue(&set(&[0]), &inst), Err(Error::ItemOutOfRange { item: 0, .. })));
    }

    #[test]
    fn normalize_examples() {
        let inst = e1();
        let norm = inst.normalize().unwrap();
        assert_eq!(norm.prices(), &[1.0, 0.8, 0.5]);
        assert_eq!(norm.price_scale(), 10.0);
        assert!((norm.revenue_of(&[1, 2]) - 0.325).abs() < 1e-12);

        let unit = Instance::new(vec![1.0, 0.5], vec![0.3, 0.3], 1.0).unwrap();
        let again = unit.normalize().unwrap();
        assert_eq!(again, unit);
        assert_eq!(again.price_scale(), 1.0);
        assert_eq!(norm.normalize().unwrap(), norm);
    }

    #[test]
    fn normalize_rejects_zero_prices() {
        let inst = Instance::new(vec![0.0, 0.0], vec![0.5, 0.5], 1.0).unwrap();
        assert!(matches!(inst.normalize(), Err(Error::DegenerateInstance)));
    }

    #[test]
    fn unsorted_prices_are_reordered_with_ids() {
        let inst = Instance::with_item_ids(vec![7, 8, 9], vec![5.0, 10.0, 8.0], vec![0.5, 0.2, 0.4], 1.0).unwrap();
        assert_eq!(inst.prices(), &[10.0, 8.0, 5.0]);
        assert_eq!(inst.weights(), &[0.2, 0.4, 0.5]);
        assert_eq!(inst.item_ids(), &[8, 9, 7]);
    }

    #[test]
    fn instance_validation() {
        assert!(Instance::new(vec![], vec![], 1.0).is_err());
        assert!(Instance::new(vec![1.0], vec![1.5], 1.0).is_err());
        assert!(Instance::new(vec![1.0], vec![0.5], 0.0).is_err());
        assert!(Instance::new(vec![1.0], vec![0.5], 1.5).is_err());
        assert!(Instance::new(vec![-1.0], vec![0.5], 1.0).is_err());
        assert!(Instance::new(vec![1.0, 2.0], vec![0.5], 1.0).is_err());
        assert!(Instance::with_item_ids(vec![1, 1], vec![1.0, 2.0], vec![0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = e1().normalize().unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
        let minimal: Instance = serde_json::from_str(r#"{"prices":[5,10],"weights":[0.1,0.2],"v0":1}"#).unwrap();
        assert_eq!(minimal.item_ids(), &[2, 1]);
    }

    #[test]
    fn validate_collection_examples() {
        let inst = e1();
        assert!(validate_sets(&[set(&[1, 2])], &inst).is_ok());
        assert!(matches!(validate_sets(&[set(&[0])], &inst), Err(Error::ItemOutOfRange { set: 0, item: 0, n: 3 })));
        assert!(matches!(validate_sets(&[], &inst), Err(Error::EmptyCollection)));
        assert!(matches!(
            validate_sets(&[set(&[1]), set(&[2, 5])], &inst),
            Err(Error::ItemOutOfRange { set: 1, item: 5, .. })
        ));
        assert!(matches!(
            AssortmentCollection::new(3, vec![set(&[1]), Assortment::empty()]),
            Err(Error::EmptySet { set: 1 })
        ));
        assert!(matches!(
            AssortmentCollection::from_item_lists(3, vec![vec![1], vec![2, 2]]),
            Err(Error::DuplicateItem { set: 1, item: 2 })
        ));

        let c = AssortmentCollection::new(3, vec![set(&[1, 2])]).unwrap();
        assert!(validate_collection(&c, &inst).is_ok());
        let wide = AssortmentCollection::new(4, vec![set(&[4])]).unwrap();
        assert!(matches!(validate_collection(&wide, &inst), Err(Error::ItemCountMismatch { .. })));
    }

    #[test]
    fn collection_access_and_relabel() {
        let c = AssortmentCollection::from_item_lists(3, vec![vec![2, 1], vec![3]]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(0), &[1, 2]);
        assert_eq!(c.iter().map(<[u32]>::len).collect::<Vec<_>>(), vec![2, 1]);
        let r = c.relabel(3, &[3, 1, 2]).unwrap();
        assert_eq!(r.get(0), &[1, 3]);
        assert_eq!(r.get(1), &[2]);
    }

    #[test]
    fn overlap_metric() {
        let a = set(&[1, 2, 3]);
        assert_eq!(a.overlap(&a), 1.0);
        assert!((set(&[1]).overlap(&a) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(set(&[4]).overlap(&a), 0.0);
        assert_eq!(a.to_string(), "{1,2,3}");
    }
}
