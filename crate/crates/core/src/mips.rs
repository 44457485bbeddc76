//! KS1: maximum inner-product search over projection posting lists.
//!
//! Every rotated codeword `H·u_j` owns a posting list of data ids sorted by
//! `⟨x, H·u_j⟩`. A query picks the `s0` rotated codewords closest to it,
//! scans the head of their lists and re-ranks the union exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::*;
use crate::config::ProjectionConfig;
use crate::data::{exact_top_k, Dataset, Metric};
use crate::error::{Error, Result};
use crate::linalg::{dot_f32, Rotation};

pub const KS1_MAGIC: &[u8; 4] = b"AKS1";
pub const KS1_VERSION: u16 = 1;

/// Codewords scored per dense block during construction.
const BUILD_BLOCK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MipsQueryParams {
    pub k: usize,
    /// Number of probed projection vectors.
    pub s0: usize,
    /// Points scanned per probed list.
    pub probe: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipsResult {
    /// `(id, ⟨x, q⟩)` sorted by descending inner product, ties by id.
    pub hits: Vec<(u32, f32)>,
    /// Exact inner products evaluated.
    pub exact_evals: usize,
}

#[derive(Clone, Debug)]
pub struct Ks1Index {
    config: ProjectionConfig,
    rotation: Rotation,
    /// Row-major `m × d` rotated codewords.
    rotated: Vec<f32>,
    truncation: usize,
    /// `m × truncation` ids and raw scores, list-major.
    ids: Vec<u32>,
    scores: Vec<f32>,
    data: Dataset,
}

/// Descending score, ascending id.
fn posting_cmp(a: &(f32, u32), b: &(f32, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn rotate_codewords(config: &ProjectionConfig, rotation: &Rotation) -> Result<Vec<f32>> {
    let d = config.layout().dim();
    let mut out = Vec::with_capacity(config.codewords().len());
    for u in config.codewords().chunks_exact(d) {
        out.extend(rotation.apply(u)?.into_iter().map(|v| v as f32));
    }
    Ok(out)
}

impl Ks1Index {
    /// Builds the posting lists. `truncation` keeps only the top `T` ids per
    /// list (default: all `n`); queries may then probe at most `T`.
    pub fn build(data: &Dataset, config: &ProjectionConfig, rotation: Rotation, truncation: Option<usize>) -> Result<Self> {
        data.require_nonempty("KS1 build")?;
        if config.layout().levels() != 1 {
            return Err(Error::invalid(format!("KS1 needs L = 1, got L = {}", config.layout().levels())));
        }
        Error::check_dim(config.layout().dim(), data.dim())?;
        Error::check_dim(data.dim(), rotation.dim())?;
        let n = data.len();
        if n > u32::MAX as usize {
            return Err(Error::invalid("dataset too large for u32 ids"));
        }
        let t = truncation.unwrap_or(n);
        if t == 0 || t > n {
            return Err(Error::invalid(format!("truncation {t} must be in 1..={n}")));
        }
        let config = config.storage_rounded()?;
        let (m, d) = (config.m(), data.dim());
        let rotated = rotate_codewords(&config, &rotation)?;
        let x = ArrayView2::from_shape((n, d), data.as_slice()).expect("data shape");

        let blocks: Vec<(Vec<u32>, Vec<f32>)> = (0..m.div_ceil(BUILD_BLOCK))
            .into_par_iter()
            .map(|b| {
                let lo = b * BUILD_BLOCK;
                let hi = (lo + BUILD_BLOCK).min(m);
                let u = ArrayView2::from_shape((hi - lo, d), &rotated[lo * d..hi * d]).expect("block shape");
                let s = x.dot(&u.t());
                let mut ids = Vec::with_capacity((hi - lo) * t);
                let mut scores = Vec::with_capacity((hi - lo) * t);
                let mut list: Vec<(f32, u32)> = Vec::with_capacity(n);
                for col in s.columns() {
                    list.clear();
                    list.extend(col.iter().enumerate().map(|(i, &v)| (v, i as u32)));
                    if t < n {
                        list.select_nth_unstable_by(t - 1, posting_cmp);
                        list.truncate(t);
                    }
                    list.sort_unstable_by(posting_cmp);
                    ids.extend(list.iter().map(|p| p.1));
                    scores.extend(list.iter().map(|p| p.0));
                }
                (ids, scores)
            })
            .collect();
        let mut ids = Vec::with_capacity(m * t);
        let mut scores = Vec::with_capacity(m * t);
        for (i, s) in blocks {
            ids.extend(i);
            scores.extend(s);
        }
        Ok(Self { config, rotation, rotated, truncation: t, ids, scores, data: data.clone() })
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.config
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn m(&self) -> usize {
        self.config.m()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Posting list `j` as `(ids, scores)`.
    pub fn posting(&self, j: usize) -> (&[u32], &[f32]) {
        let t = self.truncation;
        (&self.ids[j * t..(j + 1) * t], &self.scores[j * t..(j + 1) * t])
    }

    /// Indices of the `s0` rotated codewords with the largest `⟨H·u_j, q̂⟩`,
    /// ties by index.
    pub fn closest_projections(&self, q: &[f32], s0: usize) -> Result<Vec<usize>> {
        Error::check_dim(self.dim(), q.len())?;
        let norm = q.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("query must be a nonzero finite vector"));
        }
        let qn: Vec<f32> = q.iter().map(|&v| (v as f64 / norm) as f32).collect();
        let d = self.dim();
        let mut scored: Vec<(f32, u32)> =
            self.rotated.chunks_exact(d).enumerate().map(|(j, u)| (dot_f32(u, &qn), j as u32)).collect();
        let s0 = s0.min(scored.len());
        if s0 < scored.len() {
            scored.select_nth_unstable_by(s0 - 1, posting_cmp);
            scored.truncate(s0);
        }
        scored.sort_unstable_by(posting_cmp);
        Ok(scored.into_iter().map(|p| p.1 as usize).collect())
    }

    pub fn searcher(&self) -> Ks1Searcher<'_> {
        Ks1Searcher { index: self, stamp: vec![0; self.len()], epoch: 0 }
    }

    pub fn query(&self, q: &[f32], p: MipsQueryParams) -> Result<MipsResult> {
        self.searcher().query(q, p)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(KS1_MAGIC)?;
        put_u16(w, KS1_VERSION)?;
        put_usize32(w, self.len(), "n")?;
        put_usize32(w, self.m(), "m")?;
        put_usize32(w, self.dim(), "d")?;
        put_rotation(w, &self.rotation)?;
        put_usize32(w, self.truncation, "T")?;
        self.config.write_to(w)?;
        for (id, s) in self.ids.iter().zip(&self.scores) {
            put_u32(w, *id)?;
            put_f32(w, *s)?;
        }
        Ok(())
    }

    /// Reads an index written by [`Ks1Index::write_to`]; the raw vectors are
    /// supplied by the caller and must match the stored shape.
    pub fn read_from<R: Read>(r: &mut R, data: Dataset) -> Result<Self> {
        expect_magic(r, KS1_MAGIC)?;
        expect_version(r, KS1_VERSION)?;
        let n = get_u32(r)? as usize;
        let m = get_u32(r)? as usize;
        let d = get_u32(r)? as usize;
        if n != data.len() || d != data.dim() {
            return Err(Error::format(format!(
                "index is {n}×{d} but the dataset is {}×{}",
                data.len(),
                data.dim()
            )));
        }
        let rotation = get_rotation(r, d)?;
        let t = get_u32(r)? as usize;
        if t == 0 || t > n {
            return Err(Error::format(format!("bad truncation {t}")));
        }
        let config = ProjectionConfig::read_from(r)?;
        if config.m() != m || config.layout().dim() != d || config.layout().levels() != 1 {
            return Err(Error::format("embedded configuration does not match the index header"));
        }
        let len = checked_len(&[m, t], "posting block")?;
        let mut ids = Vec::with_capacity(len);
        let mut scores = Vec::with_capacity(len);
        for _ in 0..len {
            let id = get_u32(r)?;
            if id as usize >= n {
                return Err(Error::format(format!("posting id {id} out of range")));
            }
            ids.push(id);
            scores.push(get_f32(r)?);
        }
        let rotated = rotate_codewords(&config, &rotation)?;
        Ok(Self { config, rotation, rotated, truncation: t, ids, scores, data })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }
}

/// Per-thread query scratch (a visited stamp per data point).
pub struct Ks1Searcher<'a> {
    index: &'a Ks1Index,
    stamp: Vec<u32>,
    epoch: u32,
}

#[derive(PartialEq)]
struct Hit(f32, u32);

impl Eq for Hit {}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Hit {
    /// Greater means worse, so a max-heap keeps the current worst on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

impl Ks1Searcher<'_> {
    pub fn query(&mut self, q: &[f32], p: MipsQueryParams) -> Result<MipsResult> {
        let idx = self.index;
        if p.k == 0 || p.s0 == 0 || p.s0 > idx.m() || p.probe == 0 || p.probe > idx.len() {
            return Err(Error::invalid(format!(
                "need k ≥ 1, 1 ≤ s0 ≤ {} and 1 ≤ probe ≤ {} (got {p:?})",
                idx.m(),
                idx.len()
            )));
        }
        if p.probe > idx.truncation {
            return Err(Error::invalid(format!("probe {} exceeds the stored list length {}", p.probe, idx.truncation)));
        }
        let lists = idx.closest_projections(q, p.s0)?;
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let mut heap: BinaryHeap<Hit> = BinaryHeap::with_capacity(p.k + 1);
        let mut evals = 0;
        for j in lists {
            let (ids, _) = idx.posting(j);
            for &id in &ids[..p.probe] {
                let s = &mut self.stamp[id as usize];
                if *s == self.epoch {
                    continue;
                }
                *s = self.epoch;
                evals += 1;
                let hit = Hit(dot_f32(idx.data.row(id as usize), q), id);
                if heap.len() < p.k {
                    heap.push(hit);
                } else if hit < *heap.peek().expect("full heap") {
                    heap.pop();
                    heap.push(hit);
                }
            }
        }
        let hits = heap.into_sorted_vec().into_iter().map(|h| (h.1, h.0)).collect();
        Ok(MipsResult { hits, exact_evals: evals })
    }
}

/// Exact top-k by inner product, ties by ascending id.
pub fn brute_force_mips(data: &Dataset, q: &[f32], k: usize) -> Result<Vec<(u32, f32)>> {
    data.require_nonempty("brute-force MIPS")?;
    Error::check_dim(data.dim(), q.len())?;
    Ok(exact_top_k(data, q, k, Metric::InnerProduct))
}
