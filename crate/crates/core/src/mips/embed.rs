use crate::error::{Error, Result};
use crate::model::{validate_collection, AssortmentCollection, Instance};

/// A collection embedded for inner-product search.
///
/// Set `S` maps to `ẑ^S = (p ∘ u^S, u^S)` in 2n dimensions, where `u^S` is the
/// indicator of `S`. Only the support is stored; the dense vector is rebuilt on
/// request.
#[derive(Debug, Clone)]
pub struct Embedding<'a> {
    instance: &'a Instance,
    sets: &'a AssortmentCollection,
    norms: Vec<f64>,
}

/// View of one embedded set.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddedPoint<'a> {
    pub set_id: usize,
    items: &'a [u32],
    prices: &'a [f64],
    norm: f64,
}

impl EmbeddedPoint<'_> {
    pub fn items(&self) -> &[u32] {
        self.items
    }

    /// Euclidean norm of `ẑ^S`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dense(&self) -> Vec<f64> {
        let n = self.prices.len();
        let mut z = vec![0.0; 2 * n];
        for &i in self.items {
            let k = i as usize - 1;
            z[k] = self.prices[k];
            z[n + k] = 1.0;
        }
        z
    }

    /// Inner product with an arbitrary dense 2n query.
    pub fn dot(&self, q: &[f64]) -> f64 {
        let n = self.prices.len();
        self.items
            .iter()
            .map(|&i| {
                let k = i as usize - 1;
                q[k] * self.prices[k] + q[n + k]
            })
            .sum()
    }
}

/// Embeds every set of `c`, preserving order.
pub fn embed_collection<'a>(c: &'a AssortmentCollection, inst: &'a Instance) -> Result<Embedding<'a>> {
    validate_collection(c, inst)?;
    let prices = inst.prices();
    let norms = c
        .iter()
        .map(|s| {
            s.iter()
                .map(|&i| {
                    let p = prices[i as usize - 1];
                    p * p + 1.0
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(Embedding { instance: inst, sets: c, norms })
}

impl<'a> Embedding<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn sets(&self) -> &'a AssortmentCollection {
        self.sets
    }

    /// Embedding dimension, 2n.
    pub fn dim(&self) -> usize {
        2 * self.instance.n()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn point(&self, id: usize) -> EmbeddedPoint<'a> {
        EmbeddedPoint { set_id: id, items: self.sets.get(id), prices: self.instance.prices(), norm: self.norms[id] }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = EmbeddedPoint<'a>> + '_ {
        (0..self.len()).map(move |id| self.point(id))
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }
}

/// The query `v̂_K = (v, -K v)` for threshold `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    weights: Vec<f64>,
    threshold: f64,
}

impl QueryVector {
    pub fn new(inst: &Instance, threshold: f64) -> Self {
        QueryVector { weights: inst.weights().to_vec(), threshold }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        2 * self.weights.len()
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut q = self.weights.clone();
        q.extend(self.weights.iter().map(|v| -self.threshold * v));
        q
    }

    pub fn norm(&self) -> f64 {
        let w2: f64 = self.weights.iter().map(|v| v * v).sum();
        (w2 * (1.0 + self.threshold * self.threshold)).sqrt()
    }

    /// Per-item contributions `v_i (p_i - K)`; the score of a set is their sum
    /// over its items.
    pub fn item_coefficients(&self, prices: &[f64]) -> Result<Vec<f64>> {
        if prices.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: prices.len() });
        }
        Ok(item_coefficients(&self.weights, prices, self.threshold))
    }
}

pub(crate) fn item_coefficients(weights: &[f64], prices: &[f64], k: f64) -> Vec<f64> {
    weights.iter().zip(prices).map(|(v, p)| v * (p - k)).collect()
}

/// Sum of per-item coefficients over a set. Every scoring path goes through
/// here so exact and approximate engines agree bit for bit on a given set.
#[inline]
pub fn set_score(items: &[u32], coeffs: &[f64]) -> f64 {
    items.iter().map(|&i| coeffs[i as usize - 1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::e1;

    #[test]
    fn embedding_of_e1_pair() {
        let inst = e1();
        let c = AssortmentCollection::from_item_lists(3, vec![vec![1, 2], vec![3]]).unwrap();
        let emb = embed_collection(&c, &inst).unwrap();
        assert_eq!(emb.dim(), 6);
        let z = emb.point(0).dense();
        assert_eq!(z, vec![10.0, 8.0, 0.0, 1.0, 1.0, 0.0]);
        assert!((emb.point(0).norm() - (100.0f64 + 64.0 + 2.0).sqrt()).abs() < 1e-12);

        let q = QueryVector::new(&inst, 4.0);
        assert_eq!(q.dense(), vec![0.2, 0.4, 0.5, -0.8, -1.6, -2.0]);
        let dense: f64 = q.dense().iter().zip(&z).map(|(a, b)| a * b).sum();
        assert!((dense - 2.8).abs() < 1e-12);
        assert!((emb.point(0).dot(&q.dense()) - 2.8).abs() < 1e-12);
        let coeffs = q.item_coefficients(inst.prices()).unwrap();
        assert!((set_score(c.get(0), &coeffs) - 2.8).abs() < 1e-12);
    }

    #[test]
    fn price_equal_to_threshold_cancels() {
        let inst = e1();
        let c = AssortmentCollection::from_item_lists(3, vec![vec![3]]).unwrap();
        let q = QueryVector::new(&inst, 5.0);
        let emb = embed_collection(&c, &inst).unwrap();
        assert_eq!(emb.point(0).dot(&q.dense()), 0.0);
    }

    #[test]
    fn query_norm_matches_dense() {
        let inst = e1();
        let q = QueryVector::new(&inst, 3.5);
        let dense: f64 = q.dense().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((q.norm() - dense).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_collection() {
        let inst = e1();
        let c = AssortmentCollection::from_item_lists(4, vec![vec![4]]).unwrap();
        assert!(embed_collection(&c, &inst).is_err());
    }
}
