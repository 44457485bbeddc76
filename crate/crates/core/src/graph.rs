//! HNSW graph search with the KS2 routing test.
//!
//! After [`Hnsw::attach_ks2`], every layer-0 edge `v → w` carries the codes
//! of its normalised rotated direction `ê = H(w − v)/‖w − v‖` and two
//! scalars. At query time a table `lut[i][j] = ⟨(Hq)ᵢ, u^i_j⟩` turns the
//! projection `⟨Hq, Z_S(ê)⟩` into `L` lookups, and the exact distance to `w`
//! is computed only when
//!
//! ```text
//! Σᵢ lut[i][codes[i]] ≥ c1 − c2·(τ + vᵀq),   τ = (δ² − ‖q‖²)/2,
//! c1 = A_S‖w‖²/(2‖e‖),  c2 = A_S/‖e‖,
//! ```
//!
//! where `δ²` is the current worst result distance. With an exact estimator
//! (`A_S = 1`) this is precisely `‖w − q‖² ≤ δ²`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::codec::*;
use crate::config::{assign_unchecked, ProjectionConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{l2_sq_f32, Rotation};
use crate::rng::{self, streams};

pub const KS2_MAGIC: &[u8; 4] = b"AKS2";
pub const KS2_VERSION: u16 = 1;

/// Codebook size of the KS2 path (one byte per level).
pub const KS2_M: usize = 256;

const MAX_LEVEL: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HnswParams {
    /// Maximum out-degree on upper layers; layer 0 allows `2M`.
    pub m: usize,
    pub efc: usize,
    pub efs: usize,
    /// Level assignment rate; `None` means `1/ln M`.
    pub level_lambda: Option<f64>,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self { m: 16, efc: 200, efs: 64, level_lambda: None }
    }
}

impl HnswParams {
    fn validate(&self) -> Result<()> {
        if self.m < 2 || self.efc < self.m || self.efs == 0 {
            return Err(Error::invalid(format!("need M ≥ 2, efc ≥ M and efs ≥ 1 (got {self:?})")));
        }
        if let Some(l) = self.level_lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::invalid(format!("level_lambda = {l} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }

    fn lambda(&self) -> f64 {
        self.level_lambda.unwrap_or(1.0 / (self.m as f64).ln())
    }

    fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// `(distance, id)` ordered by distance then id.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Cand(f32, u32);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Per-edge scalars: full `f32` or 16-bit per-node linear quantisation.
#[derive(Clone, Debug, PartialEq)]
enum Scalars {
    Exact { c1: Vec<f32>, c2: Vec<f32> },
    /// `params[v] = [c1_min, c1_step, c2_min, c2_step]`.
    Quantized { q1: Vec<u16>, q2: Vec<u16>, params: Vec<[f32; 4]> },
}

#[derive(Clone, Debug, PartialEq)]
struct Ks2Meta {
    config: ProjectionConfig,
    rotation: Rotation,
    /// `n·2M·L` codes, slot-major with levels interleaved.
    codes: Vec<u8>,
    /// Zero-length edges carry no meta and always pass.
    valid: Vec<bool>,
    scalars: Scalars,
    norms2: Vec<f32>,
}

impl Ks2Meta {
    fn levels(&self) -> usize {
        self.config.layout().levels()
    }

    fn scalars(&self, slot: usize, node: usize) -> (f32, f32) {
        match &self.scalars {
            Scalars::Exact { c1, c2 } => (c1[slot], c2[slot]),
            Scalars::Quantized { q1, q2, params } => {
                let p = params[node];
                (p[0] + p[1] * q1[slot] as f32, p[2] + p[3] * q2[slot] as f32)
            }
        }
    }
}

/// Metadata of one layer-0 edge, for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct Ks2EdgeMeta {
    pub codes: Vec<u8>,
    pub c1: f32,
    pub c2: f32,
}

/// Per-query KS2 state: the rotated query, its lookup table and `‖q‖²`.
#[derive(Clone, Debug)]
pub struct Ks2QueryState {
    pub hq: Vec<f64>,
    /// Row-major `L × 256`.
    pub lut: Vec<f32>,
    pub qnorm2: f32,
}

impl Ks2QueryState {
    /// `Σᵢ lut[i][codes[i]]`.
    pub fn projection(&self, codes: &[u8]) -> f32 {
        codes.iter().enumerate().map(|(i, &c)| self.lut[i * KS2_M + c as usize]).sum()
    }
}

/// `lut[i][j] = ⟨(Hq)ᵢ, u^i_j⟩`.
pub fn query_lut(config: &ProjectionConfig, hq: &[f64]) -> Result<Vec<f32>> {
    Error::check_dim(config.layout().dim(), hq.len())?;
    if config.m() != KS2_M {
        return Err(Error::invalid(format!("KS2 needs m = 256, got {}", config.m())));
    }
    let dp = config.layout().sub_dim();
    let mut lut = Vec::with_capacity(config.layout().levels() * KS2_M);
    for (i, sub) in hq.chunks_exact(dp).enumerate() {
        for j in 0..KS2_M {
            lut.push(crate::linalg::dot(sub, config.codeword(i, j)) as f32);
        }
    }
    Ok(lut)
}

/// The KS2 inequality. `v_ip` is `vᵀq` for the expanded node `v`; an
/// infinite `delta2` always passes.
pub fn ks2_test(state: &Ks2QueryState, meta: &Ks2EdgeMeta, v_ip: f32, delta2: f32) -> bool {
    ks2_inequality(state.projection(&meta.codes), meta.c1, meta.c2, state.qnorm2, v_ip, delta2)
}

#[inline]
fn ks2_inequality(lhs: f32, c1: f32, c2: f32, qnorm2: f32, v_ip: f32, delta2: f32) -> bool {
    if delta2 == f32::INFINITY {
        return true;
    }
    let tau = (delta2 - qnorm2) / 2.0;
    lhs >= c1 - c2 * (tau + v_ip)
}

/// How the KS2 test is applied during a search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Skip the test (every edge passes); results then equal plain search.
    pub always_pass: bool,
    /// For every finite-`δ` test, also compute the true distance (not
    /// counted as an evaluation) and tally [`RoutingCounts`].
    pub record_routing: bool,
}

/// Test outcomes split by whether the neighbour was truly within `δ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoutingCounts {
    pub within: u64,
    pub within_passed: u64,
    pub outside: u64,
    pub outside_passed: u64,
}

impl RoutingCounts {
    pub fn add(&mut self, o: &RoutingCounts) {
        self.within += o.within;
        self.within_passed += o.within_passed;
        self.outside += o.outside;
        self.outside_passed += o.outside_passed;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Exact distance computations on all layers.
    pub exact_evals: u64,
    /// KS2 tests evaluated (layer 0).
    pub tests: u64,
    pub passed: u64,
    pub routing: RoutingCounts,
}

impl SearchStats {
    pub fn add(&mut self, o: &SearchStats) {
        self.exact_evals += o.exact_evals;
        self.tests += o.tests;
        self.passed += o.passed;
        self.routing.add(&o.routing);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// `(id, squared distance)` ascending, ties by id.
    pub hits: Vec<(u32, f32)>,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn ids(&self) -> Vec<u32> {
        self.hits.iter().map(|h| h.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hnsw {
    params: HnswParams,
    seed: u64,
    data: Dataset,
    levels: Vec<u8>,
    /// `n × 2M` layer-0 slots; `deg0[v]` are in use.
    links0: Vec<u32>,
    deg0: Vec<u16>,
    /// `upper[v][l − 1]` for `1 ≤ l ≤ levels[v]`.
    upper: Vec<Vec<Vec<u32>>>,
    entry: u32,
    max_level: usize,
    ks2: Option<Ks2Meta>,
}

/// Visited stamps reused across searches.
#[derive(Clone, Debug)]
pub struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Self { stamp: vec![0; n], epoch: 0 }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn seen(&self, id: u32) -> bool {
        self.stamp[id as usize] == self.epoch
    }

    #[inline]
    fn mark(&mut self, id: u32) {
        self.stamp[id as usize] = self.epoch;
    }
}

impl Hnsw {
    /// Inserts points in id order. Deterministic for a given seed.
    pub fn build(data: &Dataset, params: HnswParams, seed: u64) -> Result<Self> {
        params.validate()?;
        data.require_nonempty("HNSW build")?;
        let n = data.len();
        if n >= u32::MAX as usize {
            return Err(Error::invalid("dataset too large for u32 ids"));
        }
        let mut r = rng::rng_for(seed, streams::HNSW_LEVELS);
        let lambda = params.lambda();
        let levels: Vec<u8> = (0..n)
            .map(|_| {
                let u: f64 = 1.0 - r.random::<f64>();
                ((-u.ln() * lambda).floor() as usize).min(MAX_LEVEL) as u8
            })
            .collect();
        let upper = levels.iter().map(|&l| vec![Vec::new(); l as usize]).collect();
        let mut g = Hnsw {
            params,
            seed,
            data: data.clone(),
            levels,
            links0: vec![0; n * 2 * params.m],
            deg0: vec![0; n],
            upper,
            entry: 0,
            max_level: 0,
            ks2: None,
        };
        g.max_level = g.levels[0] as usize;
        let mut scratch = Scratch::new(n);
        for i in 1..n as u32 {
            g.insert(i, &mut scratch);
        }
        Ok(g)
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

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn entry_point(&self) -> u32 {
        self.entry
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level(&self, v: u32) -> usize {
        self.levels[v as usize] as usize
    }

    pub fn has_ks2(&self) -> bool {
        self.ks2.is_some()
    }

    pub fn neighbors(&self, v: u32, layer: usize) -> &[u32] {
        if layer == 0 {
            let base = v as usize * 2 * self.params.m;
            &self.links0[base..base + self.deg0[v as usize] as usize]
        } else {
            &self.upper[v as usize][layer - 1]
        }
    }

    fn set_neighbors(&mut self, v: u32, layer: usize, list: &[u32]) {
        if layer == 0 {
            let base = v as usize * 2 * self.params.m;
            self.links0[base..base + list.len()].copy_from_slice(list);
            self.links0[base + list.len()..base + 2 * self.params.m].fill(0);
            self.deg0[v as usize] = list.len() as u16;
        } else {
            self.upper[v as usize][layer - 1] = list.to_vec();
        }
    }

    #[inline]
    fn dist(&self, q: &[f32], id: u32) -> f32 {
        l2_sq_f32(q, self.data.row(id as usize))
    }

    fn greedy(&self, q: &[f32], mut cur: Cand, layer: usize, evals: &mut u64) -> Cand {
        loop {
            let mut moved = false;
            for &w in self.neighbors(cur.1, layer) {
                let d = self.dist(q, w);
                *evals += 1;
                let c = Cand(d, w);
                if c < cur {
                    cur = c;
                    moved = true;
                }
            }
            if !moved {
                return cur;
            }
        }
    }

    /// Beam search on one layer; returns candidates ascending.
    fn search_layer(&self, q: &[f32], ep: Cand, ef: usize, layer: usize, scratch: &mut Scratch, evals: &mut u64) -> Vec<Cand> {
        scratch.reset();
        scratch.mark(ep.1);
        let mut frontier = BinaryHeap::from([Reverse(ep)]);
        let mut results = BinaryHeap::from([ep]);
        while let Some(Reverse(c)) = frontier.pop() {
            if results.len() >= ef && c.0 > results.peek().expect("nonempty").0 {
                break;
            }
            for &w in self.neighbors(c.1, layer) {
                if scratch.seen(w) {
                    continue;
                }
                scratch.mark(w);
                let d = self.dist(q, w);
                *evals += 1;
                if results.len() < ef || d < results.peek().expect("nonempty").0 {
                    frontier.push(Reverse(Cand(d, w)));
                    results.push(Cand(d, w));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    /// Keeps a candidate only if it is closer to the base than to every
    /// neighbour already kept.
    fn select_heuristic(&self, candidates: &[Cand], max: usize) -> Vec<u32> {
        let mut kept: Vec<Cand> = Vec::with_capacity(max);
        for &c in candidates {
            if kept.len() >= max {
                break;
            }
            let x = self.data.row(c.1 as usize);
            if kept.iter().all(|k| l2_sq_f32(x, self.data.row(k.1 as usize)) >= c.0) {
                kept.push(c);
            }
        }
        kept.into_iter().map(|c| c.1).collect()
    }

    fn insert(&mut self, i: u32, scratch: &mut Scratch) {
        let q = self.data.row(i as usize).to_vec();
        let level = self.levels[i as usize] as usize;
        let mut evals = 0;
        let mut ep = Cand(self.dist(&q, self.entry), self.entry);
        for l in (level + 1..=self.max_level).rev() {
            ep = self.greedy(&q, ep, l, &mut evals);
        }
        for l in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(&q, ep, self.params.efc, l, scratch, &mut evals);
            let chosen = self.select_heuristic(&found, self.params.m);
            self.set_neighbors(i, l, &chosen);
            let cap = self.params.max_degree(l);
            for &nb in &chosen {
                let mut list = self.neighbors(nb, l).to_vec();
                if list.len() < cap {
                    list.push(i);
                } else {
                    let base = self.data.row(nb as usize);
                    let mut cands: Vec<Cand> = list
                        .iter()
                        .chain(std::iter::once(&i))
                        .map(|&w| Cand(l2_sq_f32(base, self.data.row(w as usize)), w))
                        .collect();
                    cands.sort();
                    list = self.select_heuristic(&cands, cap);
                }
                self.set_neighbors(nb, l, &list);
            }
            ep = found[0];
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = i;
        }
    }

    /// Greedy descent through the upper layers.
    fn descend(&self, q: &[f32], stats: &mut SearchStats) -> Cand {
        let mut ep = Cand(self.dist(q, self.entry), self.entry);
        stats.exact_evals += 1;
        for l in (1..=self.max_level).rev() {
            ep = self.greedy(q, ep, l, &mut stats.exact_evals);
        }
        ep
    }

    /// Plain HNSW search.
    pub fn search(&self, q: &[f32], k: usize, efs: usize, scratch: &mut Scratch) -> Result<SearchResult> {
        self.check_query(q, k, efs)?;
        let mut stats = SearchStats::default();
        let ep = self.descend(q, &mut stats);
        let hits = self.layer0(q, ep, k, efs, None, SearchOptions::default(), scratch, &mut stats);
        Ok(SearchResult { hits, stats })
    }

    /// Best-first layer-0 search guarded by the KS2 test.
    pub fn search_ks2(
        &self,
        q: &[f32],
        k: usize,
        efs: usize,
        opts: SearchOptions,
        scratch: &mut Scratch,
    ) -> Result<SearchResult> {
        self.check_query(q, k, efs)?;
        let state = self.query_state(q)?;
        let mut stats = SearchStats::default();
        let ep = self.descend(q, &mut stats);
        let hits = self.layer0(q, ep, k, efs, Some(&state), opts, scratch, &mut stats);
        Ok(SearchResult { hits, stats })
    }

    fn check_query(&self, q: &[f32], k: usize, efs: usize) -> Result<()> {
        Error::check_dim(self.dim(), q.len())?;
        if k == 0 || efs < k {
            return Err(Error::invalid(format!("need 1 ≤ k ≤ efs (k = {k}, efs = {efs})")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("query has non-finite entries"));
        }
        Ok(())
    }

    pub fn query_state(&self, q: &[f32]) -> Result<Ks2QueryState> {
        let meta = self.ks2.as_ref().ok_or_else(|| Error::invalid("KS2 metadata not attached"))?;
        let qf: Vec<f64> = q.iter().map(|&v| v as f64).collect();
        let hq = meta.rotation.apply(&qf)?;
        let lut = query_lut(&meta.config, &hq)?;
        let qnorm2 = qf.iter().map(|v| v * v).sum::<f64>() as f32;
        Ok(Ks2QueryState { hq, lut, qnorm2 })
    }

    #[allow(clippy::too_many_arguments)]
    fn layer0(
        &self,
        q: &[f32],
        ep: Cand,
        k: usize,
        efs: usize,
        state: Option<&Ks2QueryState>,
        opts: SearchOptions,
        scratch: &mut Scratch,
        stats: &mut SearchStats,
    ) -> Vec<(u32, f32)> {
        let m2 = 2 * self.params.m;
        scratch.reset();
        scratch.mark(ep.1);
        let mut frontier = BinaryHeap::from([Reverse(ep)]);
        let mut results = BinaryHeap::from([ep]);
        while let Some(Reverse(c)) = frontier.pop() {
            if results.len() >= efs && c.0 > results.peek().expect("nonempty").0 {
                break;
            }
            let v = c.1 as usize;
            let v_ip = match (state, &self.ks2) {
                (Some(s), Some(meta)) => (meta.norms2[v] + s.qnorm2 - c.0) / 2.0,
                _ => 0.0,
            };
            for (slot, &w) in self.neighbors(c.1, 0).iter().enumerate() {
                if scratch.seen(w) {
                    continue;
                }
                if let (Some(s), Some(meta)) = (state, &self.ks2) {
                    let delta2 = if results.len() < efs { f32::INFINITY } else { results.peek().expect("nonempty").0 };
                    let e = v * m2 + slot;
                    stats.tests += 1;
                    let pass = opts.always_pass || !meta.valid[e] || {
                        let lv = meta.levels();
                        let (c1, c2) = meta.scalars(e, v);
                        ks2_inequality(s.projection(&meta.codes[e * lv..(e + 1) * lv]), c1, c2, s.qnorm2, v_ip, delta2)
                    };
                    if opts.record_routing && delta2.is_finite() {
                        let within = self.dist(q, w) < delta2;
                        let r = &mut stats.routing;
                        if within {
                            r.within += 1;
                            r.within_passed += pass as u64;
                        } else {
                            r.outside += 1;
                            r.outside_passed += pass as u64;
                        }
                    }
                    if !pass {
                        continue;
                    }
                    stats.passed += 1;
                }
                scratch.mark(w);
                let d = self.dist(q, w);
                stats.exact_evals += 1;
                if results.len() < efs || d < results.peek().expect("nonempty").0 {
                    frontier.push(Reverse(Cand(d, w)));
                    results.push(Cand(d, w));
                    if results.len() > efs {
                        results.pop();
                    }
                }
            }
        }
        let mut out = results.into_sorted_vec();
        out.truncate(k);
        out.into_iter().map(|c| (c.1, c.0)).collect()
    }

    /// Computes per-edge KS2 metadata on layer 0. `config` must have
    /// `m = 256`; with `quantize` the scalars are stored as 16-bit values on
    /// a per-node linear scale.
    pub fn attach_ks2(&mut self, config: &ProjectionConfig, rotation: Rotation, quantize: bool) -> Result<()> {
        if config.m() != KS2_M {
            return Err(Error::invalid(format!("KS2 needs m = 256, got {}", config.m())));
        }
        Error::check_dim(self.dim(), config.layout().dim())?;
        Error::check_dim(self.dim(), rotation.dim())?;
        let config = config.storage_rounded()?;
        let n = self.len();
        let m2 = 2 * self.params.m;
        let lv = config.layout().levels();
        let norms2: Vec<f32> =
            self.data.rows().take(n).map(|r| r.iter().map(|&x| x as f64 * x as f64).sum::<f64>() as f32).collect();
        let mut codes = vec![0u8; n * m2 * lv];
        let mut valid = vec![false; n * m2];
        let mut c1 = vec![0f32; n * m2];
        let mut c2 = vec![0f32; n * m2];
        let d = self.dim();
        let mut e = vec![0.0f64; d];
        let mut he = vec![0.0f64; d];
        for v in 0..n {
            let xv = self.data.row(v);
            for (slot, &w) in self.neighbors(v as u32, 0).iter().enumerate() {
                let xw = self.data.row(w as usize);
                e.iter_mut().zip(xv.iter().zip(xw)).for_each(|(o, (a, b))| *o = *b as f64 - *a as f64);
                let len = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len == 0.0 {
                    continue;
                }
                e.iter_mut().for_each(|x| *x /= len);
                rotation.apply_into(&e, &mut he)?;
                let a = assign_unchecked(&he, &config);
                if a.a_s <= 0.0 {
                    return Err(Error::Contract(format!("edge {v}→{w} has A_S = {} ≤ 0", a.a_s)));
                }
                let idx = v * m2 + slot;
                valid[idx] = true;
                for (i, &code) in a.codes.iter().enumerate() {
                    codes[idx * lv + i] = code as u8;
                }
                let wn2: f64 = xw.iter().map(|&x| x as f64 * x as f64).sum();
                c1[idx] = (a.a_s * wn2 / (2.0 * len)) as f32;
                c2[idx] = (a.a_s / len) as f32;
            }
        }
        let scalars = if quantize { quantize_scalars(&c1, &c2, &valid, m2) } else { Scalars::Exact { c1, c2 } };
        self.ks2 = Some(Ks2Meta { config, rotation, codes, valid, scalars, norms2 });
        Ok(())
    }

    /// Metadata of layer-0 edge `slot` of `v` (`None` for zero-length edges
    /// or without KS2).
    pub fn edge_meta(&self, v: u32, slot: usize) -> Option<Ks2EdgeMeta> {
        let meta = self.ks2.as_ref()?;
        if slot >= self.deg0[v as usize] as usize {
            return None;
        }
        let e = v as usize * 2 * self.params.m + slot;
        if !meta.valid[e] {
            return None;
        }
        let lv = meta.levels();
        let (c1, c2) = meta.scalars(e, v as usize);
        Some(Ks2EdgeMeta { codes: meta.codes[e * lv..(e + 1) * lv].to_vec(), c1, c2 })
    }

    /// Worst-case absolute rounding error of `(c1, c2)` at node `v`
    /// (zero for exact scalars).
    pub fn quantization_error(&self, v: u32) -> (f32, f32) {
        match self.ks2.as_ref().map(|m| &m.scalars) {
            Some(Scalars::Quantized { params, .. }) => {
                let p = params[v as usize];
                (p[1] / 2.0, p[3] / 2.0)
            }
            _ => (0.0, 0.0),
        }
    }

    pub fn ks2_config(&self) -> Option<&ProjectionConfig> {
        self.ks2.as_ref().map(|m| &m.config)
    }

    pub fn ks2_rotation(&self) -> Option<&Rotation> {
        self.ks2.as_ref().map(|m| &m.rotation)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(KS2_MAGIC)?;
        put_u16(w, KS2_VERSION)?;
        put_usize32(w, self.len(), "n")?;
        put_usize32(w, self.dim(), "d")?;
        put_usize32(w, self.params.m, "M")?;
        put_usize32(w, self.params.efc, "efc")?;
        put_usize32(w, self.params.efs, "efs")?;
        put_f64(w, self.params.level_lambda.unwrap_or(f64::NAN))?;
        put_u64(w, self.seed)?;
        put_u32(w, self.entry)?;
        put_u8(w, self.max_level as u8)?;
        w.write_all(&self.levels)?;
        for v in 0..self.len() as u32 {
            for l in 0..=self.level(v) {
                let nb = self.neighbors(v, l);
                put_u16(w, nb.len() as u16)?;
                for &x in nb {
                    put_u32(w, x)?;
                }
            }
        }
        match &self.ks2 {
            None => put_u8(w, 0)?,
            Some(meta) => {
                put_u8(w, if matches!(meta.scalars, Scalars::Exact { .. }) { 1 } else { 2 })?;
                put_rotation(w, &meta.rotation)?;
                meta.config.write_to(w)?;
                let m2 = 2 * self.params.m;
                let lv = meta.levels();
                for v in 0..self.len() {
                    if let Scalars::Quantized { params, .. } = &meta.scalars {
                        for p in params[v] {
                            put_f32(w, p)?;
                        }
                    }
                    for slot in 0..self.deg0[v] as usize {
                        let e = v * m2 + slot;
                        put_u8(w, meta.valid[e] as u8)?;
                        w.write_all(&meta.codes[e * lv..(e + 1) * lv])?;
                        match &meta.scalars {
                            Scalars::Exact { c1, c2 } => {
                                put_f32(w, c1[e])?;
                                put_f32(w, c2[e])?;
                            }
                            Scalars::Quantized { q1, q2, .. } => {
                                put_u16(w, q1[e])?;
                                put_u16(w, q2[e])?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a graph written by [`Hnsw::write_to`] over the caller's vectors.
    pub fn read_from<R: Read>(r: &mut R, data: Dataset) -> Result<Self> {
        expect_magic(r, KS2_MAGIC)?;
        expect_version(r, KS2_VERSION)?;
        let n = get_u32(r)? as usize;
        let d = get_u32(r)? as usize;
        if n != data.len() || d != data.dim() || n == 0 {
            return Err(Error::format(format!("graph is {n}×{d} but the dataset is {}×{}", data.len(), data.dim())));
        }
        let m = get_u32(r)? as usize;
        let efc = get_u32(r)? as usize;
        let efs = get_u32(r)? as usize;
        let lambda = get_f64(r)?;
        let params = HnswParams { m, efc, efs, level_lambda: if lambda.is_nan() { None } else { Some(lambda) } };
        params.validate().map_err(|e| Error::format(e.to_string()))?;
        let seed = get_u64(r)?;
        let entry = get_u32(r)?;
        let max_level = get_u8(r)? as usize;
        let mut levels = vec![0u8; n];
        r.read_exact(&mut levels).map_err(|_| Error::format("truncated file"))?;
        if entry as usize >= n || levels[entry as usize] as usize != max_level {
            return Err(Error::format("bad entry point"));
        }
        let m2 = checked_len(&[2, m], "degree")?;
        let mut links0 = vec![0u32; checked_len(&[n, m2], "layer 0")?];
        let mut deg0 = vec![0u16; n];
        let mut upper: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n);
        for v in 0..n {
            let mut ups = Vec::with_capacity(levels[v] as usize);
            for l in 0..=levels[v] as usize {
                let deg = get_u16(r)? as usize;
                let cap = if l == 0 { m2 } else { m };
                if deg > cap {
                    return Err(Error::format(format!("node {v} layer {l} degree {deg} exceeds {cap}")));
                }
                let mut nb = Vec::with_capacity(deg);
                for _ in 0..deg {
                    let x = get_u32(r)?;
                    if x as usize >= n || (levels[x as usize] as usize) < l {
                        return Err(Error::format(format!("bad neighbour {x} of node {v}")));
                    }
                    nb.push(x);
                }
                if l == 0 {
                    links0[v * m2..v * m2 + deg].copy_from_slice(&nb);
                    deg0[v] = deg as u16;
                } else {
                    ups.push(nb);
                }
            }
            upper.push(ups);
        }
        let mut g = Hnsw { params, seed, data, levels, links0, deg0, upper, entry, max_level, ks2: None };
        let flag = get_u8(r)?;
        if flag > 2 {
            return Err(Error::format(format!("unknown KS2 block flag {flag}")));
        }
        if flag != 0 {
            let rotation = get_rotation(r, d)?;
            let config = ProjectionConfig::read_from(r)?;
            if config.m() != KS2_M || config.layout().dim() != d {
                return Err(Error::format("embedded configuration does not fit the graph"));
            }
            let lv = config.layout().levels();
            let slots = n * m2;
            let mut codes = vec![0u8; slots * lv];
            let mut valid = vec![false; slots];
            let (mut a, mut b) = (vec![0f32; slots], vec![0f32; slots]);
            let (mut qa, mut qb) = (vec![0u16; slots], vec![0u16; slots]);
            let mut params = vec![[0f32; 4]; if flag == 2 { n } else { 0 }];
            for v in 0..n {
                if flag == 2 {
                    for p in params[v].iter_mut() {
                        *p = get_f32(r)?;
                    }
                }
                for slot in 0..g.deg0[v] as usize {
                    let e = v * m2 + slot;
                    valid[e] = match get_u8(r)? {
                        0 => false,
                        1 => true,
                        x => return Err(Error::format(format!("bad edge flag {x}"))),
                    };
                    r.read_exact(&mut codes[e * lv..(e + 1) * lv]).map_err(|_| Error::format("truncated file"))?;
                    if flag == 1 {
                        a[e] = get_f32(r)?;
                        b[e] = get_f32(r)?;
                    } else {
                        qa[e] = get_u16(r)?;
                        qb[e] = get_u16(r)?;
                    }
                }
            }
            let scalars = if flag == 1 { Scalars::Exact { c1: a, c2: b } } else { Scalars::Quantized { q1: qa, q2: qb, params } };
            let norms2 =
                g.data.rows().take(n).map(|row| row.iter().map(|&x| x as f64 * x as f64).sum::<f64>() as f32).collect();
            g.ks2 = Some(Ks2Meta { config, rotation, codes, valid, scalars, norms2 });
        }
        Ok(g)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }
}

fn quantize_scalars(c1: &[f32], c2: &[f32], valid: &[bool], m2: usize) -> Scalars {
    let n = valid.len() / m2;
    let mut q1 = vec![0u16; c1.len()];
    let mut q2 = vec![0u16; c2.len()];
    let mut params = vec![[0f32; 4]; n];
    let grid = |vals: &[f32], ok: &[bool]| {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for (&x, &k) in vals.iter().zip(ok) {
            if k {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, (hi - lo) / u16::MAX as f32)
        }
    };
    let encode = |x: f32, (lo, step): (f32, f32)| if step > 0.0 { ((x - lo) / step).round().clamp(0.0, u16::MAX as f32) as u16 } else { 0 };
    for v in 0..n {
        let r = v * m2..(v + 1) * m2;
        let g1 = grid(&c1[r.clone()], &valid[r.clone()]);
        let g2 = grid(&c2[r.clone()], &valid[r.clone()]);
        params[v] = [g1.0, g1.1, g2.0, g2.1];
        for e in r {
            if valid[e] {
                q1[e] = encode(c1[e], g1);
                q2[e] = encode(c2[e], g2);
            }
        }
    }
    Scalars::Quantized { q1, q2, params }
}
