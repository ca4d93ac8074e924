use super::embed::{item_coefficients, set_score, Embedding, QueryVector};
use crate::error::{Error, Result};
use crate::model::AssortmentCollection;
use crate::Exec;

/// A set returned by a MIPS query with its inner product against the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub set_id: usize,
    pub score: f64,
}

impl Candidate {
    /// Keeps the higher score; on equal scores the lower set id wins.
    #[inline]
    pub(crate) fn better(self, other: Candidate) -> Candidate {
        if other.score > self.score || (other.score == self.score && other.set_id < self.set_id) {
            other
        } else {
            self
        }
    }
}

/// Full linear scan for the set maximizing `dot(q, ẑ^S)`.
pub fn query_exact(q: &QueryVector, emb: &Embedding<'_>) -> Result<Candidate> {
    query_exact_with(q, emb, Exec::default())
}

pub fn query_exact_with(q: &QueryVector, emb: &Embedding<'_>, exec: Exec) -> Result<Candidate> {
    if q.dim() != emb.dim() {
        return Err(Error::DimensionMismatch { expected: emb.dim(), found: q.dim() });
    }
    if emb.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let coeffs = item_coefficients(q.weights(), emb.instance().prices(), q.threshold());
    Ok(scan(emb.sets(), &coeffs, exec))
}

/// Best set under per-item coefficients. The collection must be non-empty.
pub(crate) fn scan(sets: &AssortmentCollection, coeffs: &[f64], exec: Exec) -> Candidate {
    let start = Candidate { set_id: usize::MAX, score: f64::NEG_INFINITY };
    let best = match exec {
        Exec::Sequential => (0..sets.len())
            .map(|id| Candidate { set_id: id, score: set_score(sets.get(id), coeffs) })
            .fold(start, Candidate::better),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..sets.len())
                .into_par_iter()
                .with_min_len(256)
                .map(|id| Candidate { set_id: id, score: set_score(sets.get(id), coeffs) })
                .reduce(|| start, Candidate::better)
        }
    };
    debug_assert!(best.set_id != usize::MAX);
    best
}
