//! Benchmark drivers and CSV plumbing shared by the CLI and the tests.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{build_gaussian, build_pol, build_ran, build_sym, ConfigKind, PolParams, ProjectionConfig};
use crate::data::{recall_at_k, Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::graph::{Hnsw, Scratch, SearchOptions, SearchStats};
use crate::linalg::{Rotation, RotationMode, SubspaceLayout};
use crate::mips::{Ks1Index, MipsQueryParams};
use crate::rng::mix_seed;
use crate::special::{refangle_lower_bound, QuadratureSpec};

/// Version of every CSV schema written by this crate.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the dimension and raw little-endian vector bytes.
pub fn dataset_hash(data: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((data.dim() as u64).to_le_bytes());
    for v in data.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance of one CLI run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub seed: u64,
    pub config_hashes: Vec<(String, String)>,
    pub dataset_hashes: Vec<(String, String)>,
    pub versions: Vec<(String, String)>,
    pub host: String,
    /// Not part of [`RunManifest::hash`], so reruns hash identically.
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        Self {
            command,
            seed,
            versions: vec![
                ("akann".into(), env!("CARGO_PKG_VERSION").into()),
                ("csv_schema".into(), CSV_SCHEMA_VERSION.to_string()),
                ("config_format".into(), crate::config::CONFIG_VERSION.to_string()),
                ("ks1_format".into(), crate::mips::KS1_VERSION.to_string()),
                ("ks2_format".into(), crate::graph::KS2_VERSION.to_string()),
            ],
            host: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            ..Default::default()
        }
    }

    pub fn add_config(&mut self, name: &str, cfg: &ProjectionConfig) {
        self.config_hashes.push((name.into(), sha256_hex(&cfg.to_bytes())));
    }

    pub fn add_dataset(&mut self, name: &str, data: &Dataset) {
        self.dataset_hashes.push((name.into(), dataset_hash(data)));
    }

    pub fn hash(&self) -> String {
        let mut m = self.clone();
        m.wall_clock_secs = 0.0;
        sha256_hex(&serde_json::to_vec(&m).expect("manifest serialises"))
    }

    /// The comment line that heads every CSV output.
    pub fn csv_header(&self) -> String {
        format!("# akann schema={} manifest={}\n", CSV_SCHEMA_VERSION, self.hash())
    }
}

/// Writes the manifest comment line and then `rows` as CSV.
pub fn write_csv<W: Write, T: Serialize>(mut w: W, manifest: &RunManifest, rows: &[T]) -> Result<()> {
    w.write_all(manifest.csv_header().as_bytes())?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub m: usize,
    pub d: usize,
    pub levels: usize,
    pub value: Option<f64>,
    /// Strictly above the previous `L` at the same `(m, d)`.
    pub increasing_in_l: Option<bool>,
    /// Strictly above the previous `m` at the same `(d, L)`.
    pub increasing_in_m: Option<bool>,
    pub error: Option<String>,
}

/// Closed-form expected reference cosine for every `(m, d, L)`, with
/// monotonicity flags against the preceding entry of each list.
pub fn bound_table(ms: &[usize], ds: &[usize], ls: &[usize], quad: &QuadratureSpec) -> Vec<BoundRow> {
    let eval = |m: usize, d: usize, l: usize| -> Result<f64> { refangle_lower_bound(m, &SubspaceLayout::new(d, l)?, quad) };
    let mut rows = Vec::new();
    for &m in ms {
        for &d in ds {
            for &l in ls {
                let (value, error) = match eval(m, d, l) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                rows.push(BoundRow { m, d, levels: l, value, increasing_in_l: None, increasing_in_m: None, error });
            }
        }
    }
    let find = |rows: &[BoundRow], m: usize, d: usize, l: usize| rows.iter().find(|r| (r.m, r.d, r.levels) == (m, d, l)).and_then(|r| r.value);
    let flags: Vec<(Option<bool>, Option<bool>)> = rows
        .iter()
        .map(|r| {
            let li = ls.iter().position(|&x| x == r.levels).expect("listed");
            let mi = ms.iter().position(|&x| x == r.m).expect("listed");
            let by_l = (li > 0).then(|| find(&rows, r.m, r.d, ls[li - 1])).flatten().zip(r.value).map(|(p, v)| v > p);
            let by_m = (mi > 0).then(|| find(&rows, ms[mi - 1], r.d, r.levels)).flatten().zip(r.value).map(|(p, v)| v > p);
            (by_l, by_m)
        })
        .collect();
    for (r, (a, b)) in rows.iter_mut().zip(flags) {
        r.increasing_in_l = a;
        r.increasing_in_m = b;
    }
    rows
}

/// Builds a configuration of the given kind. Gaussian ignores `layout`'s
/// levels and uses `L = 1`.
pub fn build_config(kind: ConfigKind, m: usize, layout: SubspaceLayout, pol: PolParams, seed: u64) -> Result<ProjectionConfig> {
    match kind {
        ConfigKind::Sym => build_sym(m, layout, seed),
        ConfigKind::Pol => build_pol(m, layout, pol, seed),
        ConfigKind::Ran => build_ran(m, layout, seed),
        ConfigKind::Gaussian => build_gaussian(m, layout.dim(), seed),
    }
}

#[derive(Clone, Debug)]
pub struct MipsBenchParams {
    pub m: usize,
    pub s0: usize,
    pub k: usize,
    pub probes: Vec<usize>,
    pub runs: usize,
    /// Posting-list length kept per codeword (at least the largest probe).
    pub truncation: Option<usize>,
    pub pol: PolParams,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MipsRow {
    pub config: String,
    pub probe: usize,
    pub runs: usize,
    pub recall: f64,
    /// Standard error of the mean over runs.
    pub recall_se: f64,
    pub evals_per_query: f64,
}

/// Mean recall@k per probe level over `runs` independent configurations.
pub fn mips_bench(data: &Dataset, queries: &Dataset, gt: &GroundTruth, kinds: &[ConfigKind], p: &MipsBenchParams) -> Result<Vec<MipsRow>> {
    Error::check_dim(data.dim(), queries.dim())?;
    Error::check_dim(queries.len(), gt.ids.len())?;
    if p.runs == 0 || p.probes.is_empty() {
        return Err(Error::invalid("need at least one run and one probe level"));
    }
    let max_probe = *p.probes.iter().max().expect("nonempty");
    let t = p.truncation.map(|t| t.max(max_probe).min(data.len()));
    let layout = SubspaceLayout::new(data.dim(), 1)?;
    let mut rows = Vec::new();
    for &kind in kinds {
        // per_run[run][probe] = (recall, evals)
        let mut per_run = Vec::with_capacity(p.runs);
        for run in 0..p.runs {
            let s = mix_seed(p.seed, run as u64);
            let cfg = build_config(kind, p.m, layout, p.pol, s)?;
            let index = Ks1Index::build(data, &cfg, Rotation::identity(data.dim()), t)?;
            let res: Vec<Vec<(f64, f64)>> = (0..queries.len())
                .into_par_iter()
                .map_init(
                    || index.searcher(),
                    |searcher, qi| {
                        p.probes
                            .iter()
                            .map(|&probe| {
                                let r = searcher.query(queries.row(qi), MipsQueryParams { k: p.k, s0: p.s0, probe })?;
                                let ids: Vec<u32> = r.hits.iter().map(|h| h.0).collect();
                                Ok((recall_at_k(&ids, &gt.ids[qi], p.k)?, r.exact_evals as f64))
                            })
                            .collect::<Result<Vec<_>>>()
                    },
                )
                .collect::<Result<_>>()?;
            let nq = queries.len() as f64;
            per_run.push(
                (0..p.probes.len())
                    .map(|j| (res.iter().map(|r| r[j].0).sum::<f64>() / nq, res.iter().map(|r| r[j].1).sum::<f64>() / nq))
                    .collect::<Vec<_>>(),
            );
        }
        for (j, &probe) in p.probes.iter().enumerate() {
            let vals: Vec<f64> = per_run.iter().map(|r| r[j].0).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let se = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ((vals.len() - 1) * vals.len()) as f64).sqrt()
            } else {
                0.0
            };
            let evals = per_run.iter().map(|r| r[j].1).sum::<f64>() / per_run.len() as f64;
            rows.push(MipsRow { config: kind.name().into(), probe, runs: p.runs, recall: mean, recall_se: se, evals_per_query: evals });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphVariant {
    Plain,
    Ks2,
}

impl GraphVariant {
    pub fn name(self) -> &'static str {
        match self {
            GraphVariant::Plain => "hnsw",
            GraphVariant::Ks2 => "hnsw+ks2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphRow {
    pub variant: String,
    pub levels: Option<usize>,
    pub efs: usize,
    pub recall: f64,
    pub exact_dist_evals: f64,
    pub tests_evaluated: f64,
    /// Single-threaded queries per second; `None` when timing is off.
    pub qps: Option<f64>,
}

/// Totals of a query batch.
#[derive(Clone, Debug, Default)]
pub struct BatchOutcome {
    pub recall: f64,
    pub stats: SearchStats,
    pub results: Vec<Vec<u32>>,
}

/// Runs every query once. Statistics do not depend on the thread count.
pub fn run_queries(
    g: &Hnsw,
    queries: &Dataset,
    gt: &GroundTruth,
    k: usize,
    efs: usize,
    variant: GraphVariant,
    opts: SearchOptions,
) -> Result<BatchOutcome> {
    Error::check_dim(queries.len(), gt.ids.len())?;
    let out: Vec<(Vec<u32>, SearchStats)> = (0..queries.len())
        .into_par_iter()
        .map_init(
            || Scratch::new(g.len()),
            |s, qi| {
                let r = match variant {
                    GraphVariant::Plain => g.search(queries.row(qi), k, efs, s)?,
                    GraphVariant::Ks2 => g.search_ks2(queries.row(qi), k, efs, opts, s)?,
                };
                Ok((r.ids(), r.stats))
            },
        )
        .collect::<Result<_>>()?;
    let mut stats = SearchStats::default();
    let mut recall = 0.0;
    for ((ids, st), t) in out.iter().zip(&gt.ids) {
        stats.add(st);
        recall += recall_at_k(ids, t, k)?;
    }
    Ok(BatchOutcome {
        recall: recall / queries.len().max(1) as f64,
        stats,
        results: out.into_iter().map(|x| x.0).collect(),
    })
}

fn time_queries(g: &Hnsw, queries: &Dataset, k: usize, efs: usize, variant: GraphVariant) -> Result<f64> {
    let mut s = Scratch::new(g.len());
    let start = Instant::now();
    for q in queries.rows() {
        match variant {
            GraphVariant::Plain => g.search(q, k, efs, &mut s)?,
            GraphVariant::Ks2 => g.search_ks2(q, k, efs, SearchOptions::default(), &mut s)?,
        };
    }
    Ok(queries.len() as f64 / start.elapsed().as_secs_f64().max(1e-9))
}

/// One row per `(variant, efs)`. `timing` adds a single-threaded QPS pass.
pub fn graph_bench(
    g: &Hnsw,
    queries: &Dataset,
    gt: &GroundTruth,
    k: usize,
    efs_list: &[usize],
    variants: &[GraphVariant],
    timing: bool,
) -> Result<Vec<GraphRow>> {
    let nq = queries.len().max(1) as f64;
    let levels = g.ks2_config().map(|c| c.layout().levels());
    let mut rows = Vec::new();
    for &variant in variants {
        for &efs in efs_list {
            let efs = efs.max(k);
            let o = run_queries(g, queries, gt, k, efs, variant, SearchOptions::default())?;
            let qps = if timing { Some(time_queries(g, queries, k, efs, variant)?) } else { None };
            rows.push(GraphRow {
                variant: variant.name().into(),
                levels: if variant == GraphVariant::Ks2 { levels } else { None },
                efs,
                recall: o.recall,
                exact_dist_evals: o.stats.exact_evals as f64 / nq,
                tests_evaluated: o.stats.tests as f64 / nq,
                qps,
            });
        }
    }
    Ok(rows)
}

/// KS2 rows for each `L` dividing `d`, reattaching metadata to one graph.
#[allow(clippy::too_many_arguments)]
pub fn graph_l_sweep(
    g: &mut Hnsw,
    queries: &Dataset,
    gt: &GroundTruth,
    k: usize,
    efs_list: &[usize],
    levels: &[usize],
    kind: ConfigKind,
    pol: PolParams,
    seed: u64,
    timing: bool,
) -> Result<Vec<GraphRow>> {
    let d = g.dim();
    let rotation = Rotation::sample(d, mix_seed(seed, 1), RotationMode::Exact)?;
    let mut rows = Vec::new();
    for &l in levels {
        let layout = SubspaceLayout::new(d, l)?;
        let cfg = build_config(kind, crate::graph::KS2_M, layout, pol, mix_seed(seed, 100 + l as u64))?;
        g.attach_ks2(&cfg, rotation.clone(), false)?;
        rows.extend(graph_bench(g, queries, gt, k, efs_list, &[GraphVariant::Ks2], timing)?);
    }
    Ok(rows)
}

/// Mean exact evaluations per query at `target` recall, interpolated
/// linearly between the first two consecutive rows (by `efs`) that bracket
/// it. `None` when the curve never reaches the target.
pub fn evals_at_recall(rows: &[GraphRow], target: f64) -> Option<f64> {
    let mut r: Vec<&GraphRow> = rows.iter().collect();
    r.sort_by_key(|x| x.efs);
    if r.first()?.recall >= target {
        return Some(r[0].exact_dist_evals);
    }
    r.windows(2).find(|w| w[0].recall < target && w[1].recall >= target).map(|w| {
        let t = (target - w[0].recall) / (w[1].recall - w[0].recall);
        w[0].exact_dist_evals + t * (w[1].exact_dist_evals - w[0].exact_dist_evals)
    })
}

/// Parses `a:b` (inclusive, doubling from `a`) or a comma list.
pub fn parse_efs_sweep(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("bad efs sweep '{s}' (use lo:hi or a,b,c)"));
    if let Some((a, b)) = s.split_once(':') {
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        let mut v = Vec::new();
        let mut x = lo;
        while x < hi {
            v.push(x);
            x = (x * 3).div_ceil(2);
        }
        v.push(hi);
        Ok(v)
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{compute_ground_truth, synthetic_sphere, Metric};
    use crate::graph::HnswParams;

    #[test]
    fn manifest_hash_ignores_wall_clock() {
        let mut a = RunManifest::new(vec!["akann".into(), "bound".into()], 7);
        let h = a.hash();
        a.wall_clock_secs = 12.5;
        assert_eq!(a.hash(), h);
        a.seed = 8;
        assert_ne!(a.hash(), h);
        assert!(a.csv_header().starts_with("# akann schema=1 manifest="));
    }

    #[test]
    fn bound_flags() {
        let rows = bound_table(&[256], &[128], &[1, 2, 4, 8], &QuadratureSpec::default());
        assert_eq!(rows[0].increasing_in_l, None);
        assert!(rows[1..].iter().all(|r| r.increasing_in_l == Some(true)));
        let bad = bound_table(&[256], &[10], &[4], &QuadratureSpec::default());
        assert!(bad[0].value.is_none() && bad[0].error.is_some());
        let one = bound_table(&[1], &[16], &[1], &QuadratureSpec::default());
        assert!(one[0].value.unwrap().abs() < 1e-9);
    }

    #[test]
    fn efs_sweep_parsing() {
        assert_eq!(parse_efs_sweep("10,20").unwrap(), vec![10, 20]);
        let v = parse_efs_sweep("10:50").unwrap();
        assert_eq!((v[0], *v.last().unwrap()), (10, 50));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(parse_efs_sweep("5:1").is_err());
    }

    #[test]
    fn interpolation() {
        let row = |efs, recall, evals| GraphRow { variant: "x".into(), levels: None, efs, recall, exact_dist_evals: evals, tests_evaluated: 0.0, qps: None };
        let rows = vec![row(20, 0.8, 100.0), row(40, 1.0, 200.0)];
        assert_eq!(evals_at_recall(&rows, 0.9), Some(150.0));
        assert_eq!(evals_at_recall(&rows, 0.5), Some(100.0));
        assert_eq!(evals_at_recall(&rows[..1], 0.9), None);
    }

    #[test]
    fn graph_bench_is_deterministic() {
        let data = synthetic_sphere(1500, 16, 1).unwrap();
        let qs = synthetic_sphere(50, 16, 2).unwrap();
        let gt = compute_ground_truth(&data, &qs, 10, Metric::L2).unwrap();
        let mut g = Hnsw::build(&data, HnswParams { m: 8, efc: 64, efs: 32, level_lambda: None }, 3).unwrap();
        let rows = graph_l_sweep(&mut g, &qs, &gt, 10, &[16, 64], &[2, 4], ConfigKind::Sym, PolParams::default(), 4, false).unwrap();
        let again = graph_l_sweep(&mut g, &qs, &gt, 10, &[16, 64], &[2, 4], ConfigKind::Sym, PolParams::default(), 4, false).unwrap();
        assert_eq!(rows, again);
        assert_eq!(rows.len(), 4);
        let plain = graph_bench(&g, &qs, &gt, 10, &[64], &[GraphVariant::Plain], false).unwrap();
        assert!(plain[0].recall >= 0.95);
    }

    #[test]
    fn mips_bench_shapes() {
        let data = crate::data::synthetic_clusters(2000, 16, 10, 0.5, 1, 0).unwrap();
        let qs = crate::data::synthetic_clusters(20, 16, 10, 0.5, 1, 1).unwrap();
        let gt = compute_ground_truth(&data, &qs, 10, Metric::InnerProduct).unwrap();
        let p = MipsBenchParams { m: 64, s0: 3, k: 10, probes: vec![10, 100, 2000], runs: 2, truncation: None, pol: PolParams { candidates: 2, eval_samples: 2000 }, seed: 5 };
        let rows = mips_bench(&data, &qs, &gt, &[ConfigKind::Pol, ConfigKind::Gaussian], &p).unwrap();
        assert_eq!(rows.len(), 6);
        // Probing whole lists is exhaustive.
        assert!(rows.iter().filter(|r| r.probe == 2000).all(|r| r.recall == 1.0));
        assert!(rows[0].recall <= rows[1].recall);
    }
}
