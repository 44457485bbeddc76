//! Datasets: `.fvecs`/`.ivecs`/`.bvecs` IO, synthetic generators, exact
//! ground truth and recall.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot_f32, l2_sq_f32};
use crate::rng::{self, streams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    L2,
    /// ℓ2 on unit-normalised rows.
    Angular,
    InnerProduct,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Metric::L2),
            "angular" | "cosine" => Ok(Metric::Angular),
            "ip" | "inner-product" | "mips" => Ok(Metric::InnerProduct),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecsFormat {
    Fvecs,
    Ivecs,
    Bvecs,
}

impl VecsFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("fvecs") => Ok(VecsFormat::Fvecs),
            Some("ivecs") => Ok(VecsFormat::Ivecs),
            Some("bvecs") => Ok(VecsFormat::Bvecs),
            _ => Err(Error::invalid(format!("cannot infer vecs format of {}", path.display()))),
        }
    }

    fn elem_size(self) -> usize {
        match self {
            VecsFormat::Bvecs => 1,
            _ => 4,
        }
    }
}

/// Row-major `n × d` matrix of finite `f32` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    vectors: Vec<f32>,
    n: usize,
    dim: usize,
    metric: Metric,
    normalized: bool,
}

impl Dataset {
    pub fn new(vectors: Vec<f32>, dim: usize, metric: Metric) -> Result<Self> {
        if dim == 0 {
            if !vectors.is_empty() {
                return Err(Error::invalid("zero dimension with nonempty data"));
            }
            return Ok(Self { vectors, n: 0, dim, metric, normalized: false });
        }
        if !vectors.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!("{} values do not form rows of {dim}", vectors.len())));
        }
        if let Some(i) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at flat index {i}")));
        }
        let n = vectors.len() / dim;
        let mut ds = Self { vectors, n, dim, metric, normalized: false };
        if metric == Metric::Angular {
            ds.normalize()?;
        }
        Ok(ds)
    }

    pub fn empty() -> Self {
        Self { vectors: Vec::new(), n: 0, dim: 0, metric: Metric::L2, normalized: false }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.vectors.chunks_exact(self.dim.max(1))
    }

    /// Scales every row to unit norm. Zero rows are rejected.
    pub fn normalize(&mut self) -> Result<()> {
        for (i, row) in self.vectors.chunks_exact_mut(self.dim.max(1)).enumerate() {
            let n = row.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            if n == 0.0 {
                return Err(Error::invalid(format!("row {i} is zero and cannot be normalised")));
            }
            row.iter_mut().for_each(|x| *x = (*x as f64 / n) as f32);
        }
        self.normalized = true;
        Ok(())
    }

    pub fn with_metric(mut self, metric: Metric) -> Result<Self> {
        self.metric = metric;
        if metric == Metric::Angular && !self.normalized {
            self.normalize()?;
        }
        Ok(self)
    }

    /// Rows `range` as a new dataset with the same metric.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            vectors: self.vectors[range.start * self.dim..range.end * self.dim].to_vec(),
            n: range.len(),
            dim: self.dim,
            metric: self.metric,
            normalized: self.normalized,
        }
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid(format!("{what}: dataset is empty")));
        }
        Ok(())
    }
}

fn read_header<R: Read>(r: &mut R) -> Result<Option<usize>> {
    let mut b = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let k = r.read(&mut b[got..])?;
        if k == 0 {
            if got == 0 {
                return Ok(None);
            }
            return Err(Error::format("truncated record header"));
        }
        got += k;
    }
    let d = i32::from_le_bytes(b);
    if d <= 0 {
        return Err(Error::format(format!("invalid record dimension {d}")));
    }
    Ok(Some(d as usize))
}

/// Reads a whole `.fvecs`, `.ivecs` or `.bvecs` stream. Integer formats
/// are converted to `f32`; `.ivecs` entries must be exactly representable.
pub fn read_vecs_from<R: Read>(r: &mut R, format: VecsFormat) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut dim = None;
    let mut buf = Vec::new();
    while let Some(d) = read_header(r)? {
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::format(format!("inconsistent dimension: {d} after {prev}")));
            }
            _ => {}
        }
        let bytes = d.checked_mul(format.elem_size()).ok_or_else(|| Error::format("element count overflow"))?;
        buf.resize(bytes, 0);
        r.read_exact(&mut buf).map_err(|_| Error::format("truncated record"))?;
        match format {
            VecsFormat::Fvecs => values.extend(buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))),
            VecsFormat::Bvecs => values.extend(buf.iter().map(|&b| b as f32)),
            VecsFormat::Ivecs => {
                for c in buf.chunks_exact(4) {
                    let v = i32::from_le_bytes(c.try_into().unwrap());
                    if v.unsigned_abs() > 1 << 24 {
                        return Err(Error::format(format!("ivecs entry {v} is not exactly representable as f32")));
                    }
                    values.push(v as f32);
                }
            }
        }
    }
    match dim {
        None => Ok(Dataset::empty()),
        Some(d) => Dataset::new(values, d, Metric::L2).map_err(|e| Error::format(e.to_string())),
    }
}

pub fn read_vecs(path: impl AsRef<Path>, format: VecsFormat) -> Result<Dataset> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_vecs_from(&mut f, format)
}

pub fn write_vecs_to<W: Write>(w: &mut W, data: &Dataset, format: VecsFormat) -> Result<()> {
    let d = i32::try_from(data.dim()).map_err(|_| Error::invalid("dimension exceeds i32"))?;
    for row in data.rows().take(data.len()) {
        w.write_all(&d.to_le_bytes())?;
        for &v in row {
            match format {
                VecsFormat::Fvecs => w.write_all(&v.to_le_bytes())?,
                VecsFormat::Ivecs => {
                    if v.fract() != 0.0 || v.abs() > (1 << 24) as f32 {
                        return Err(Error::invalid(format!("{v} is not an ivecs integer")));
                    }
                    w.write_all(&(v as i32).to_le_bytes())?
                }
                VecsFormat::Bvecs => {
                    if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                        return Err(Error::invalid(format!("{v} is not a bvecs byte")));
                    }
                    w.write_all(&[v as u8])?
                }
            }
        }
    }
    Ok(())
}

pub fn write_vecs(path: impl AsRef<Path>, data: &Dataset, format: VecsFormat) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vecs_to(&mut f, data, format)?;
    f.flush()?;
    Ok(())
}

/// Exact top-k per query. Ids are sorted by score (ascending distance for
/// ℓ2/angular, descending inner product), ties by ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub k: usize,
    pub metric: Metric,
    pub ids: Vec<Vec<u32>>,
    pub scores: Vec<Vec<f32>>,
}

impl GroundTruth {
    /// Ids as an `.ivecs` stream (one record per query).
    pub fn write_ivecs<W: Write>(&self, w: &mut W) -> Result<()> {
        for ids in &self.ids {
            w.write_all(&(ids.len() as i32).to_le_bytes())?;
            for &id in ids {
                w.write_all(&(id as i32).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `a` ranks before `b`: for distances smaller first, for inner products
/// larger first; ties by id.
fn rank_cmp(metric: Metric, a: (f32, u32), b: (f32, u32)) -> Ordering {
    let by_score = match metric {
        Metric::InnerProduct => b.0.total_cmp(&a.0),
        _ => a.0.total_cmp(&b.0),
    };
    by_score.then(a.1.cmp(&b.1))
}

/// Exact top-k of one query.
pub fn exact_top_k(data: &Dataset, q: &[f32], k: usize, metric: Metric) -> Vec<(u32, f32)> {
    let mut all: Vec<(f32, u32)> = data
        .rows()
        .take(data.len())
        .enumerate()
        .map(|(i, x)| {
            let s = match metric {
                Metric::InnerProduct => dot_f32(x, q),
                _ => l2_sq_f32(x, q),
            };
            (s, i as u32)
        })
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, |a, b| rank_cmp(metric, *a, *b));
        all.truncate(k);
    }
    all.sort_by(|a, b| rank_cmp(metric, *a, *b));
    all.into_iter().map(|(s, i)| (i, s)).collect()
}

pub fn compute_ground_truth(data: &Dataset, queries: &Dataset, k: usize, metric: Metric) -> Result<GroundTruth> {
    data.require_nonempty("ground truth")?;
    Error::check_dim(data.dim(), queries.dim())?;
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if metric == Metric::Angular && !(data.is_normalized() && queries.is_normalized()) {
        return Err(Error::invalid("angular ground truth needs normalised data and queries"));
    }
    let res: Vec<Vec<(u32, f32)>> =
        (0..queries.len()).into_par_iter().map(|i| exact_top_k(data, queries.row(i), k, metric)).collect();
    Ok(GroundTruth {
        k,
        metric,
        ids: res.iter().map(|r| r.iter().map(|x| x.0).collect()).collect(),
        scores: res.iter().map(|r| r.iter().map(|x| x.1).collect()).collect(),
    })
}

/// `|result[..k] ∩ truth[..k]| / k`.
pub fn recall_at_k(result: &[u32], truth: &[u32], k: usize) -> Result<f64> {
    if k == 0 || result.len() < k || truth.len() < k {
        return Err(Error::invalid(format!(
            "recall@{k} needs lists of length ≥ k (got {} and {})",
            result.len(),
            truth.len()
        )));
    }
    let t = &truth[..k];
    let hits = result[..k].iter().filter(|id| t.contains(id)).count();
    Ok(hits as f64 / k as f64)
}

/// Mean recall over a batch of queries.
pub fn mean_recall(results: &[Vec<u32>], truth: &GroundTruth, k: usize) -> Result<f64> {
    Error::check_dim(truth.ids.len(), results.len())?;
    let mut s = 0.0;
    for (r, t) in results.iter().zip(&truth.ids) {
        s += recall_at_k(r, t, k)?;
    }
    Ok(s / results.len().max(1) as f64)
}

/// `n` points uniform on the unit sphere of `R^d`.
pub fn synthetic_sphere(n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    let mut r = rng::rng_for(seed, streams::SYNTHETIC);
    let mut v = vec![0.0f64; dim];
    let mut out = Vec::with_capacity(n * dim);
    for _ in 0..n {
        crate::linalg::fill_uniform_sphere(&mut v, &mut r);
        out.extend(v.iter().map(|&x| x as f32));
    }
    Dataset::new(out, dim, Metric::L2)
}

/// Gaussian mixture: `clusters` centres drawn from `N(0, I)`, points are a
/// uniformly chosen centre plus `N(0, spread² I)` noise.
///
/// The first `n` rows are the data; pass a different `stream` to draw
/// queries from the same mixture (the centres depend only on `seed`).
pub fn synthetic_clusters(n: usize, dim: usize, clusters: usize, spread: f64, seed: u64, stream: u64) -> Result<Dataset> {
    if clusters == 0 {
        return Err(Error::invalid("need at least one cluster"));
    }
    let mut cr = rng::rng_for(seed, streams::SYNTHETIC);
    let centres: Vec<f64> = (0..clusters * dim).map(|_| cr.sample(StandardNormal)).collect();
    let mut r = rng::rng_for(seed, rng::substream(streams::SYNTHETIC, stream));
    let mut out = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = r.random_range(0..clusters);
        for j in 0..dim {
            let g: f64 = r.sample(StandardNormal);
            out.push((centres[c * dim + j] + spread * g) as f32);
        }
    }
    Dataset::new(out, dim, Metric::L2)
}

/// Gaussian mixture with a power-law spectrum: within each cluster the
/// `j`-th principal direction has standard deviation `spread·(j+1)^(−decay)`,
/// and the principal axes are a fixed random rotation shared by all
/// clusters. Centres are `N(0, I)` in the same rotated frame. With
/// `decay = 0` this is [`synthetic_clusters`] up to the rotation.
pub fn synthetic_spectral(
    n: usize,
    dim: usize,
    clusters: usize,
    spread: f64,
    decay: f64,
    seed: u64,
    stream: u64,
) -> Result<Dataset> {
    if clusters == 0 || !(decay >= 0.0 && decay.is_finite()) {
        return Err(Error::invalid("need at least one cluster and a finite decay ≥ 0"));
    }
    let axes = crate::linalg::Rotation::sample(dim, rng::mix_seed(seed, 0x5bec), crate::linalg::RotationMode::Exact)?;
    let mut cr = rng::rng_for(seed, streams::SYNTHETIC);
    let centres: Vec<f64> = (0..clusters * dim).map(|_| cr.sample(StandardNormal)).collect();
    let sigma: Vec<f64> = (0..dim).map(|j| spread * ((j + 1) as f64).powf(-decay)).collect();
    let mut r = rng::rng_for(seed, rng::substream(streams::SYNTHETIC, stream));
    let mut out = Vec::with_capacity(n * dim);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    for _ in 0..n {
        let c = r.random_range(0..clusters);
        for j in 0..dim {
            let g: f64 = r.sample(StandardNormal);
            x[j] = centres[c * dim + j] + sigma[j] * g;
        }
        axes.apply_into(&x, &mut y)?;
        out.extend(y.iter().map(|&v| v as f32));
    }
    Dataset::new(out, dim, Metric::L2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_variances_follow_the_power_law() {
        let (n, dim, spread, decay) = (20_000, 6, 0.8, 1.0);
        let ds = synthetic_spectral(n, dim, 1, spread, decay, 9, 0).unwrap();
        let axes = crate::linalg::Rotation::sample(dim, rng::mix_seed(9, 0x5bec), crate::linalg::RotationMode::Exact).unwrap();
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for row in ds.rows() {
            let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            for (j, v) in axes.apply_transpose(&x).unwrap().into_iter().enumerate() {
                sum[j] += v;
                sq[j] += v * v;
            }
        }
        for j in 0..dim {
            let mean = sum[j] / n as f64;
            let sd = (sq[j] / n as f64 - mean * mean).sqrt();
            let want = spread / (j + 1) as f64;
            assert!((sd / want - 1.0).abs() < 0.03, "axis {j}: sd {sd} want {want}");
        }
        assert!(synthetic_spectral(10, dim, 1, spread, -1.0, 9, 0).is_err());
        assert_eq!(synthetic_spectral(50, dim, 3, spread, 0.5, 9, 1).unwrap(), synthetic_spectral(50, dim, 3, spread, 0.5, 9, 1).unwrap());
    }

    #[test]
    fn fvecs_record_layout() {
        let ds = Dataset::new(vec![1.0, 2.0], 2, Metric::L2).unwrap();
        let mut buf = Vec::new();
        write_vecs_to(&mut buf, &ds, VecsFormat::Fvecs).unwrap();
        assert_eq!(buf.len(), 12);
        assert_eq!(&buf[..4], &[2, 0, 0, 0]);
        assert_eq!(&buf[4..8], &1.0f32.to_le_bytes());
        let back = read_vecs_from(&mut buf.as_slice(), VecsFormat::Fvecs).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn empty_and_malformed() {
        let e = read_vecs_from(&mut [].as_slice(), VecsFormat::Fvecs).unwrap();
        assert!(e.is_empty());
        assert!(compute_ground_truth(&e, &e, 1, Metric::L2).is_err());

        let mut buf = Vec::new();
        buf.extend(2i32.to_le_bytes());
        buf.extend(1.0f32.to_le_bytes());
        assert!(matches!(read_vecs_from(&mut buf.as_slice(), VecsFormat::Fvecs), Err(Error::Format(_))));

        let mut buf = Vec::new();
        for d in [1i32, 2] {
            buf.extend(d.to_le_bytes());
            for _ in 0..d {
                buf.extend(0f32.to_le_bytes());
            }
        }
        assert!(matches!(read_vecs_from(&mut buf.as_slice(), VecsFormat::Fvecs), Err(Error::Format(_))));
        let neg = (-3i32).to_le_bytes();
        assert!(read_vecs_from(&mut neg.as_slice(), VecsFormat::Fvecs).is_err());
        assert!(read_vecs_from(&mut [1u8, 0].as_slice(), VecsFormat::Fvecs).is_err());
    }

    #[test]
    fn integer_formats_round_trip() {
        let ds = Dataset::new(vec![0.0, 255.0, 7.0, 1.0, 2.0, 3.0], 3, Metric::L2).unwrap();
        for fmt in [VecsFormat::Ivecs, VecsFormat::Bvecs] {
            let mut buf = Vec::new();
            write_vecs_to(&mut buf, &ds, fmt).unwrap();
            let back = read_vecs_from(&mut buf.as_slice(), fmt).unwrap();
            assert_eq!(back, ds);
            let mut again = Vec::new();
            write_vecs_to(&mut again, &back, fmt).unwrap();
            assert_eq!(again, buf);
        }
        let bad = Dataset::new(vec![0.5], 1, Metric::L2).unwrap();
        assert!(write_vecs_to(&mut Vec::new(), &bad, VecsFormat::Bvecs).is_err());
    }

    #[test]
    fn angular_rows_are_unit() {
        let ds = synthetic_clusters(100, 8, 3, 0.3, 1, 0).unwrap().with_metric(Metric::Angular).unwrap();
        for row in ds.rows() {
            let n: f64 = row.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-6);
        }
        assert!(Dataset::new(vec![0.0, 0.0], 2, Metric::Angular).is_err());
    }

    #[test]
    fn ground_truth_examples() {
        let data = Dataset::new(vec![0.0, 0.0, 1.0, 0.0, 3.0, 1.0], 2, Metric::L2).unwrap();
        let q = Dataset::new(vec![2.6, 0.4, 1.0, 0.0], 2, Metric::L2).unwrap();
        let gt = compute_ground_truth(&data, &q, 1, Metric::L2).unwrap();
        // (2.6,0.4): distances² 6.92, 2.72, 0.52.
        assert_eq!(gt.ids, vec![vec![2], vec![1]]);
        assert_eq!(gt.scores[1][0], 0.0);
        let ip = compute_ground_truth(&data, &q, 3, Metric::InnerProduct).unwrap();
        assert_eq!(ip.ids[0], vec![2, 1, 0]);
        assert!(compute_ground_truth(&data, &q, 1, Metric::Angular).is_err());
    }

    #[test]
    fn ground_truth_ties_by_id() {
        let data = Dataset::new(vec![1.0, 1.0, 1.0, 0.0], 1, Metric::L2).unwrap();
        let q = Dataset::new(vec![1.0], 1, Metric::L2).unwrap();
        let gt = compute_ground_truth(&data, &q, 4, Metric::L2).unwrap();
        assert_eq!(gt.ids[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn ground_truth_is_permutation_invariant() {
        let data = synthetic_sphere(300, 6, 2).unwrap();
        let q = synthetic_sphere(20, 6, 3).unwrap();
        let perm: Vec<usize> = (0..300).map(|i| (i * 7) % 300).collect();
        let shuffled: Vec<f32> = perm.iter().flat_map(|&i| data.row(i).to_vec()).collect();
        let sdata = Dataset::new(shuffled, 6, Metric::L2).unwrap();
        let a = compute_ground_truth(&data, &q, 10, Metric::L2).unwrap();
        let b = compute_ground_truth(&sdata, &q, 10, Metric::L2).unwrap();
        for (x, y) in a.ids.iter().zip(&b.ids) {
            let mapped: Vec<u32> = y.iter().map(|&j| perm[j as usize] as u32).collect();
            assert_eq!(x, &mapped);
        }
    }

    #[test]
    fn recall_examples() {
        let a: Vec<u32> = (0..10).collect();
        let b: Vec<u32> = (10..20).collect();
        let h: Vec<u32> = (5..15).collect();
        assert_eq!(recall_at_k(&a, &a, 10).unwrap(), 1.0);
        assert_eq!(recall_at_k(&a, &b, 10).unwrap(), 0.0);
        assert_eq!(recall_at_k(&h, &a, 10).unwrap(), 0.5);
        assert!(recall_at_k(&a[..5], &a, 10).is_err());
        // Entries past position k are ignored on both sides.
        let long: Vec<u32> = (0..20).collect();
        assert_eq!(recall_at_k(&b, &long, 10).unwrap(), 0.0);
        assert_eq!(recall_at_k(&long, &b, 10).unwrap(), 0.0);
        assert_eq!(recall_at_k(&long[5..], &h, 10).unwrap(), 1.0);
        assert_eq!(recall_at_k(&h, &long[5..], 10).unwrap(), 1.0);
        let r: Vec<u32> = vec![0, 1, 2, 3, 4, 30, 31, 32, 33, 34, 5, 6];
        let t: Vec<u32> = (0..10).collect();
        assert_eq!(recall_at_k(&r, &t, 10).unwrap(), 0.5);
        assert_eq!(recall_at_k(&t, &r, 10).unwrap(), 0.5);
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(synthetic_clusters(50, 4, 2, 0.1, 9, 0).unwrap(), synthetic_clusters(50, 4, 2, 0.1, 9, 0).unwrap());
        assert_ne!(synthetic_clusters(50, 4, 2, 0.1, 9, 0).unwrap(), synthetic_clusters(50, 4, 2, 0.1, 9, 1).unwrap());
    }
}
