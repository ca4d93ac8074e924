//! Maximum inner product search over embedded assortments.

mod embed;
mod exact;
mod lsh;
mod oracle;

pub use embed::{embed_collection, set_score, EmbeddedPoint, Embedding, QueryVector};
pub use exact::{query_exact, query_exact_with, Candidate};
pub use lsh::{
    build_lsh_index, build_lsh_index_with, hash_key, query_lsh, query_transform, simple_lsh_transform, Hyperplanes,
    LshIndex, LshParams, QueryProjector, DEFAULT_RHO,
};
pub use oracle::{ExactMips, LshMips, MipsOracle};
