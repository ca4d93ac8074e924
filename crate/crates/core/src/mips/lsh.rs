//! Sign-random-projection LSH over the Simple-LSH transform.
//!
//! Stored points are scaled by the largest point norm `M` and lifted to the
//! unit sphere with one extra coordinate; queries are normalized and padded
//! with a zero. Each table hashes a point to an `L1`-bit key, bit `t` being
//! `1{a_t · x >= 0}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::embed::{item_coefficients, set_score, Embedding, QueryVector};
use super::exact::Candidate;
use crate::error::{Error, Result};
use crate::Exec;

/// Index shape: bits per key (L1), table count (L2), scan cap (L3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LshParams {
    pub bits: usize,
    pub tables: usize,
    pub scan_cap: usize,
}

pub const DEFAULT_RHO: f64 = 0.5;

impl LshParams {
    pub fn new(bits: usize, tables: usize, scan_cap: usize) -> Result<Self> {
        let p = LshParams { bits, tables, scan_cap };
        p.validate()?;
        Ok(p)
    }

    /// `L1 = ⌈log2 N⌉`, `L2 = ⌈N^rho⌉`, `L3 = 3 L2`.
    pub fn for_size(num_points: usize, rho: f64) -> Result<Self> {
        if num_points == 0 {
            return Err(Error::EmptyCollection);
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1], got {rho}")));
        }
        let bits = usize::BITS as usize - (num_points - 1).leading_zeros() as usize;
        let tables = ceil_tolerant((num_points as f64).powf(rho)).max(1);
        Self::new(bits.min(64), tables, 3 * tables)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables == 0 || self.scan_cap == 0 {
            return Err(Error::InvalidParameter(format!(
                "LSH needs at least one table and a positive scan cap, got L2 = {}, L3 = {}",
                self.tables, self.scan_cap
            )));
        }
        if self.bits > 64 {
            return Err(Error::InvalidParameter(format!("at most 64 bits per key, got {}", self.bits)));
        }
        Ok(())
    }

    fn planes(&self) -> usize {
        self.bits * self.tables
    }
}

// powf is not exact on perfect powers, e.g. 4^0.5 may land a hair above 2.
fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// `[x / M ; sqrt(1 - |x / M|^2)]`.
pub fn simple_lsh_transform(x: &[f64], scale: f64) -> Result<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(scale > 0.0) || norm > scale * (1.0 + 1e-12) {
        return Err(Error::Scaling { norm, scale });
    }
    let mut out: Vec<f64> = x.iter().map(|v| v / scale).collect();
    out.push(lift(norm / scale));
    Ok(out)
}

/// Unit-norm query `[q / |q| ; 0]`. A zero query stays zero.
pub fn query_transform(q: &[f64]) -> Vec<f64> {
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out: Vec<f64> = if norm > 0.0 { q.iter().map(|v| v / norm).collect() } else { q.to_vec() };
    out.push(0.0);
    out
}

#[inline]
fn lift(r: f64) -> f64 {
    (1.0 - r * r).max(0.0).sqrt()
}

/// Gaussian projection directions, `tables x bits` rows of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplanes {
    dim: usize,
    bits: usize,
    tables: usize,
    data: Vec<f64>,
}

impl Hyperplanes {
    pub fn generate(seed: u64, tables: usize, bits: usize, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..tables * bits * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Hyperplanes { dim, bits, tables, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Direction for bit `bit` of table `table`.
    pub fn plane(&self, table: usize, bit: usize) -> &[f64] {
        let start = (table * self.bits + bit) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Key of `x` in `table`. Bit `t` is set when `a_t · x >= 0`.
    ///
    /// # Panics
    /// If `x` does not have the hyperplane dimension.
    pub fn key(&self, x: &[f64], table: usize) -> u64 {
        assert_eq!(x.len(), self.dim, "hash input has wrong dimension");
        (0..self.bits).fold(0u64, |key, t| {
            let dot: f64 = self.plane(table, t).iter().zip(x).map(|(a, b)| a * b).sum();
            key | (((dot >= 0.0) as u64) << t)
        })
    }
}

/// One hash table: `(key, set id)` pairs sorted by key then id.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Table {
    keys: Vec<u64>,
    ids: Vec<u32>,
}

impl Table {
    fn bucket(&self, key: u64) -> &[u32] {
        let lo = self.keys.partition_point(|&k| k < key);
        let hi = lo + self.keys[lo..].partition_point(|&k| k == key);
        &self.ids[lo..hi]
    }
}

/// Multi-table LSH index over an embedded collection.
#[derive(Debug, Clone, PartialEq)]
pub struct LshIndex {
    params: LshParams,
    seed: u64,
    scale: f64,
    num_points: usize,
    planes: Hyperplanes,
    tables: Vec<Table>,
}

/// Hashes `x` (already transformed, dimension 2n+1) into table `table`.
pub fn hash_key(x: &[f64], table: usize, idx: &LshIndex) -> u64 {
    idx.planes.key(x, table)
}

/// Builds an index with the default execution strategy.
pub fn build_lsh_index(emb: &Embedding<'_>, params: LshParams, seed: u64) -> Result<LshIndex> {
    build_lsh_index_with(emb, params, seed, Exec::default())
}

pub fn build_lsh_index_with(emb: &Embedding<'_>, params: LshParams, seed: u64, exec: Exec) -> Result<LshIndex> {
    params.validate()?;
    if emb.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if emb.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("{} points exceed the u32 id space", emb.len())));
    }
    let dim = emb.dim() + 1;
    let planes = Hyperplanes::generate(seed, params.tables, params.bits, dim);
    let scale = emb.max_norm();
    let keys = point_keys(emb, &planes, scale, exec);

    let n_pts = emb.len();
    let tables = (0..params.tables)
        .map(|t| {
            let mut pairs: Vec<(u64, u32)> = (0..n_pts).map(|p| (keys[p * params.tables + t], p as u32)).collect();
            pairs.sort_unstable();
            let (keys, ids) = pairs.into_iter().unzip();
            Table { keys, ids }
        })
        .collect();
    Ok(LshIndex { params, seed, scale, num_points: n_pts, planes, tables })
}

// Planes hashed per pass, points per tile, and 8-item blocks whose lookup
// tables are applied together. Tuned so a group's tables sit in L2.
const LANES: usize = 16;
const TILE_POINTS: usize = 4096;
const GROUP: usize = 4;

type Row = [f32; LANES];

/// Keys of every point for every table, point-major.
///
/// The transformed point of set S is `sum_{i in S} e_i + lift · e_tail`, with
/// per-item vector `e_i = (p_i e_i + e_{n+i}) / M`. Projections are therefore
/// sums of per-item coefficients. Within a tile of points, every pattern of 8
/// consecutive items is tabulated once, so each point costs about n/8 row
/// additions per pass instead of |S|. Passes cover 16 consecutive planes and
/// may straddle tables. Accumulation is in f32, so a bit can differ from
/// [`Hyperplanes::key`] only when the projection is within rounding of zero.
fn point_keys(emb: &Embedding<'_>, planes: &Hyperplanes, scale: f64, exec: Exec) -> Vec<u64> {
    let n = emb.instance().n();
    let (bits, tables) = (planes.bits, planes.tables);
    let n_pts = emb.len();
    let mut keys = vec![0u64; n_pts * tables];
    let total = bits * tables;
    if total == 0 {
        return keys;
    }
    let prices = emb.instance().prices();
    let blocks = n.div_ceil(8 * GROUP) * GROUP;
    let masks = block_masks(emb, blocks);
    let lifts: Vec<f64> = emb.norms().iter().map(|&r| lift(r / scale)).collect();

    let passes = total.div_ceil(LANES);
    // coeffs[pass * n + item][lane], tails[pass][lane]; unused lanes stay zero
    let mut coeffs = vec![[0.0; LANES]; passes * n];
    let mut tails = vec![[0.0; LANES]; passes];
    for g in 0..total {
        let (pass, lane) = (g / LANES, g % LANES);
        let a = planes.plane(g / bits, g % bits);
        for i in 0..n {
            coeffs[pass * n + i][lane] = ((a[i] * prices[i] + a[n + i]) / scale) as f32;
        }
        tails[pass][lane] = a[2 * n] as f32;
    }

    let hash_tile = |tile: usize, out: &mut [u64]| {
        let start = tile * TILE_POINTS;
        let count = out.len() / tables;
        let mut lut: Vec<Row> = vec![[0.0; LANES]; GROUP * 256];
        let mut nib: [[Row; 16]; 2] = [[[0.0; LANES]; 16]; 2];
        let mut acc: Vec<Row> = vec![[0.0; LANES]; count];
        for pass in 0..passes {
            let coeff = &coeffs[pass * n..(pass + 1) * n];
            for (a, pt) in acc.iter_mut().zip(start..) {
                *a = tails[pass].map(|t| t * lifts[pt] as f32);
            }
            for group in (0..blocks).step_by(GROUP) {
                for (g, block_lut) in lut.chunks_exact_mut(256).enumerate() {
                    let b = group + g;
                    // Patterns of the low and high four items, then all 256 sums.
                    for half in 0..2 {
                        for mask in 1..16usize {
                            let item = 8 * b + 4 * half + mask.trailing_zeros() as usize;
                            nib[half][mask] =
                                if item < n { add(&nib[half][mask & (mask - 1)], &coeff[item]) } else { [0.0; LANES] };
                        }
                    }
                    for (hi, rows) in block_lut.chunks_exact_mut(16).enumerate() {
                        for (row, lo) in rows.iter_mut().zip(&nib[0]) {
                            *row = add(lo, &nib[1][hi]);
                        }
                    }
                }
                let tile_masks = &masks[(start * blocks + group * count)..];
                for (k, a) in acc.iter_mut().enumerate() {
                    let mut sum = *a;
                    for g in 0..GROUP {
                        sum = add(&sum, &lut[g * 256 + tile_masks[g * count + k] as usize]);
                    }
                    *a = sum;
                }
            }
            let first = pass * LANES;
            let lanes = LANES.min(total - first);
            for (k, a) in acc.iter().enumerate() {
                for (lane, &x) in a[..lanes].iter().enumerate() {
                    let g = first + lane;
                    out[k * tables + g / bits] |= ((x >= 0.0) as u64) << (g % bits);
                }
            }
        }
    };
    let tile_len = TILE_POINTS * tables;
    match exec {
        Exec::Sequential => keys.chunks_mut(tile_len).enumerate().for_each(|(t, out)| hash_tile(t, out)),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            keys.par_chunks_mut(tile_len).enumerate().for_each(|(t, out)| hash_tile(t, out));
        }
    }
    keys
}

#[inline(always)]
fn add(a: &Row, b: &Row) -> Row {
    let mut out = *a;
    for (o, x) in out.iter_mut().zip(b) {
        *o += x;
    }
    out
}

/// Item-membership bytes, laid out per tile as `[block][point]`.
fn block_masks(emb: &Embedding<'_>, blocks: usize) -> Vec<u8> {
    let mut masks = vec![0u8; emb.len() * blocks];
    for (pt, set) in emb.sets().iter().enumerate() {
        let (tile, k) = (pt / TILE_POINTS, pt % TILE_POINTS);
        let start = tile * TILE_POINTS;
        let count = TILE_POINTS.min(emb.len() - start);
        let base = start * blocks;
        for &i in set {
            let j = i as usize - 1;
            masks[base + (j / 8) * count + k] |= 1 << (j % 8);
        }
    }
    masks
}

/// Projections of the query direction `(v, -K v)` onto every plane, kept as
/// `alpha_t - K beta_t` so keys for any threshold cost O(L1 L2).
#[derive(Debug, Clone)]
pub struct QueryProjector {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl QueryProjector {
    pub fn new(idx: &LshIndex, weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if 2 * n + 1 != idx.planes.dim {
            return Err(Error::DimensionMismatch { expected: idx.planes.dim, found: 2 * n + 1 });
        }
        let total = idx.params.planes();
        let mut alpha = Vec::with_capacity(total);
        let mut beta = Vec::with_capacity(total);
        for t in 0..idx.params.tables {
            for b in 0..idx.params.bits {
                let a = idx.planes.plane(t, b);
                alpha.push(a[..n].iter().zip(weights).map(|(x, v)| x * v).sum());
                beta.push(a[n..2 * n].iter().zip(weights).map(|(x, v)| x * v).sum());
            }
        }
        Ok(QueryProjector { alpha, beta })
    }

    /// Keys of `v̂_K` in every table. Normalizing the query is a positive
    /// rescaling and does not change any sign.
    pub fn keys(&self, k: f64, bits: usize) -> impl Iterator<Item = u64> + '_ {
        let tables = self.alpha.len().checked_div(bits).unwrap_or(0);
        (0..tables).map(move |t| {
            (0..bits).fold(0u64, |key, b| {
                let p = t * bits + b;
                key | ((((self.alpha[p] - k * self.beta[p]) >= 0.0) as u64) << b)
            })
        })
    }
}

impl LshIndex {
    pub fn params(&self) -> LshParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The norm bound `M` used to scale stored points.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// Dimension of transformed vectors, 2n+1.
    pub fn dim(&self) -> usize {
        self.planes.dim
    }

    pub fn hyperplanes(&self) -> &Hyperplanes {
        &self.planes
    }

    /// Ids sharing `key` in `table`, ascending.
    pub fn bucket(&self, table: usize, key: u64) -> &[u32] {
        self.tables[table].bucket(key)
    }

    fn check(&self, emb: &Embedding<'_>) -> Result<()> {
        if emb.dim() + 1 != self.planes.dim {
            return Err(Error::DimensionMismatch { expected: self.planes.dim, found: emb.dim() + 1 });
        }
        if emb.len() != self.num_points {
            return Err(Error::InvalidParameter(format!(
                "index holds {} points but the collection has {}",
                self.num_points,
                emb.len()
            )));
        }
        Ok(())
    }

    /// Probes one bucket per table in table order, scanning at most `L3`
    /// retrieved ids (duplicates count), and returns the best by exact score.
    pub(crate) fn probe<I>(&self, keys: I, emb: &Embedding<'_>, coeffs: &[f64]) -> Option<Candidate>
    where
        I: IntoIterator<Item = u64>,
    {
        let mut best: Option<Candidate> = None;
        let mut budget = self.params.scan_cap;
        for (t, key) in keys.into_iter().enumerate() {
            for &id in self.tables[t].bucket(key) {
                if budget == 0 {
                    return best;
                }
                budget -= 1;
                let c = Candidate { set_id: id as usize, score: set_score(emb.sets().get(id as usize), coeffs) };
                best = Some(best.map_or(c, |b| b.better(c)));
            }
        }
        best
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// Little-endian layout: magic, version, seed, L1, L2, L3, dim, scale,
    /// point count, plane coefficients, then per table the sorted keys and
    /// ids.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_u32::<LittleEndian>(INDEX_VERSION)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        for v in [self.params.bits, self.params.tables, self.params.scan_cap, self.planes.dim, self.num_points] {
            w.write_u64::<LittleEndian>(v as u64)?;
        }
        w.write_f64::<LittleEndian>(self.scale)?;
        for &a in &self.planes.data {
            w.write_f64::<LittleEndian>(a)?;
        }
        for t in &self.tables {
            for &k in &t.keys {
                w.write_u64::<LittleEndian>(k)?;
            }
            for &id in &t.ids {
                w.write_u32::<LittleEndian>(id)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(Error::IndexMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != INDEX_VERSION {
            return Err(Error::IndexVersion(version));
        }
        let seed = r.read_u64::<LittleEndian>()?;
        let mut head = [0usize; 5];
        for h in &mut head {
            *h = usize::try_from(r.read_u64::<LittleEndian>()?)
                .map_err(|_| Error::InvalidParameter("index header field overflows usize".into()))?;
        }
        let [bits, tables, scan_cap, dim, num_points] = head;
        let params = LshParams::new(bits, tables, scan_cap)?;
        let scale = r.read_f64::<LittleEndian>()?;
        let mut data = vec![0.0; tables * bits * dim];
        r.read_f64_into::<LittleEndian>(&mut data)?;
        let mut tabs = Vec::with_capacity(tables);
        for _ in 0..tables {
            let mut keys = vec![0u64; num_points];
            r.read_u64_into::<LittleEndian>(&mut keys)?;
            let mut ids = vec![0u32; num_points];
            r.read_u32_into::<LittleEndian>(&mut ids)?;
            tabs.push(Table { keys, ids });
        }
        Ok(LshIndex { params, seed, scale, num_points, planes: Hyperplanes { dim, bits, tables, data }, tables: tabs })
    }
}

const INDEX_MAGIC: &[u8; 8] = b"AMXLSH\0\0";
const INDEX_VERSION: u32 = 1;

/// Approximate MIPS: probe the query's buckets and rescore candidates in the
/// original space. `None` when every probed bucket is empty.
pub fn query_lsh(q: &QueryVector, idx: &LshIndex, emb: &Embedding<'_>) -> Result<Option<Candidate>> {
    idx.check(emb)?;
    if q.dim() + 1 != idx.dim() {
        return Err(Error::DimensionMismatch { expected: idx.dim(), found: q.dim() + 1 });
    }
    let x = query_transform(&q.dense());
    let keys: Vec<u64> = (0..idx.params.tables).map(|t| idx.planes.key(&x, t)).collect();
    let coeffs = item_coefficients(q.weights(), emb.instance().prices(), q.threshold());
    Ok(idx.probe(keys, emb, &coeffs))
}

pub(crate) fn check_index(idx: &LshIndex, emb: &Embedding<'_>) -> Result<()> {
    idx.check(emb)
}
