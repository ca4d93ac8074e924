use super::embed::{item_coefficients, Embedding};
use super::exact::{scan, Candidate};
use super::lsh::{check_index, LshIndex, QueryProjector};
use crate::error::Result;
use crate::model::Instance;
use crate::Exec;

/// Answers "which stored set maximizes `sum_{i in S} v_i (p_i - K)`?".
///
/// `None` means no candidate was found; callers treat it as a negative
/// comparison.
pub trait MipsOracle {
    fn instance(&self) -> &Instance;

    fn search(&self, k: f64) -> Option<Candidate>;

    /// Items of the set with the given id.
    fn set(&self, id: usize) -> &[u32];
}

/// Linear-scan oracle.
#[derive(Debug, Clone)]
pub struct ExactMips<'a> {
    emb: &'a Embedding<'a>,
    exec: Exec,
}

impl<'a> ExactMips<'a> {
    pub fn new(emb: &'a Embedding<'a>) -> Self {
        Self::with_exec(emb, Exec::default())
    }

    pub fn with_exec(emb: &'a Embedding<'a>, exec: Exec) -> Self {
        ExactMips { emb, exec }
    }
}

impl MipsOracle for ExactMips<'_> {
    fn instance(&self) -> &Instance {
        self.emb.instance()
    }

    fn search(&self, k: f64) -> Option<Candidate> {
        let inst = self.emb.instance();
        let coeffs = item_coefficients(inst.weights(), inst.prices(), k);
        Some(scan(self.emb.sets(), &coeffs, self.exec))
    }

    fn set(&self, id: usize) -> &[u32] {
        self.emb.sets().get(id)
    }
}

/// LSH oracle. Query projections are precomputed for the instance weights so
/// each threshold costs O(L1 L2) hashing plus at most L3 rescored sets.
#[derive(Debug, Clone)]
pub struct LshMips<'a> {
    emb: &'a Embedding<'a>,
    index: &'a LshIndex,
    projector: QueryProjector,
}

impl<'a> LshMips<'a> {
    pub fn new(emb: &'a Embedding<'a>, index: &'a LshIndex) -> Result<Self> {
        check_index(index, emb)?;
        let projector = QueryProjector::new(index, emb.instance().weights())?;
        Ok(LshMips { emb, index, projector })
    }
}

impl MipsOracle for LshMips<'_> {
    fn instance(&self) -> &Instance {
        self.emb.instance()
    }

    fn search(&self, k: f64) -> Option<Candidate> {
        let inst = self.emb.instance();
        let coeffs = item_coefficients(inst.weights(), inst.prices(), k);
        let keys = self.projector.keys(k, self.index.params().bits);
        self.index.probe(keys, self.emb, &coeffs)
    }

    fn set(&self, id: usize) -> &[u32] {
        self.emb.sets().get(id)
    }
}

impl<T: MipsOracle + ?Sized> MipsOracle for &T {
    fn instance(&self) -> &Instance {
        (**self).instance()
    }

    fn search(&self, k: f64) -> Option<Candidate> {
        (**self).search(k)
    }

    fn set(&self, id: usize) -> &[u32] {
        (**self).set(id)
    }
}
