use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use akann::bench::{self, GraphVariant, MipsBenchParams, RunManifest};
use akann::config::{estimate_j, ConfigKind, PolParams, ProjectionConfig};
use akann::data::{self, Dataset, GroundTruth, Metric, VecsFormat};
use akann::graph::{Hnsw, HnswParams};
use akann::linalg::{Rotation, RotationMode, SubspaceLayout};
use akann::mips::{Ks1Index, MipsQueryParams};
use akann::rng::mix_seed;
use akann::special::QuadratureSpec;
use akann::verify::{self, Report};

#[derive(Parser)]
#[command(name = "akann", version, about = "Reference-angle kernels, KS1 MIPS and KS2 graph routing")]
struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or inspect projection configurations.
    #[command(subcommand)]
    Config(ConfigCmd),
    /// Closed-form expected reference cosine over (m, d, L).
    Bound(BoundArgs),
    /// Statistical verification suites.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Mips(MipsCmd),
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Ground truth.
    #[command(subcommand)]
    Gt(GtCmd),
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Build a configuration and write it as an AKCF file.
    Build {
        #[arg(long, default_value = "sym")]
        kind: ConfigKind,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "L", default_value_t = 1)]
        levels: usize,
        #[command(flatten)]
        pol: PolArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a summary and a Monte-Carlo estimate of J.
    Info {
        path: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
}

#[derive(Args, Clone, Copy)]
struct PolArgs {
    /// Candidate configurations scored for pol.
    #[arg(long, default_value_t = 8)]
    candidates: usize,
    /// Shared sample size for scoring pol candidates.
    #[arg(long, default_value_t = 200_000)]
    eval_samples: usize,
}

impl From<PolArgs> for PolParams {
    fn from(a: PolArgs) -> Self {
        PolParams { candidates: a.candidates, eval_samples: a.eval_samples }
    }
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_delimiter = ',', default_value = "256")]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "128")]
    d: Vec<usize>,
    #[arg(long = "L", value_delimiter = ',', default_value = "1,2,4,8")]
    levels: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Cdf,
    Sensitivity,
    Jstat,
    Dominance,
    Simplex,
}

#[derive(Args)]
struct VerifyArgs {
    suite: Suite,
    /// Dimensions (cdf uses all, the others the first).
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Samples per check.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "L", value_delimiter = ',')]
    levels: Vec<usize>,
    /// Absolute tolerance (suite default if omitted).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Base vectors (.fvecs/.bvecs/.ivecs; relative paths also tried under AKANN_DATA_DIR).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Ground truth ids (.ivecs); computed when missing.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Synthetic Gaussian mixture `n,d[,clusters]` instead of files.
    #[arg(long)]
    synthetic: Option<String>,
    /// Synthetic query count.
    #[arg(long, default_value_t = 1000)]
    nq: usize,
    /// Synthetic cluster spread.
    #[arg(long, default_value_t = 0.5)]
    spread: f64,
    /// Power-law decay of the synthetic within-cluster spectrum (0 = isotropic).
    #[arg(long, default_value_t = 0.0)]
    decay: f64,
}

#[derive(Subcommand)]
enum MipsCmd {
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "pol")]
        config: ConfigKind,
        #[arg(long, default_value_t = 2048)]
        m: usize,
        /// Ids kept per posting list.
        #[arg(long)]
        truncation: Option<usize>,
        #[command(flatten)]
        pol: PolArgs,
        #[arg(long)]
        out: PathBuf,
    },
    Query {
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        s0: usize,
        #[arg(long, default_value_t = 100)]
        probe: usize,
    },
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "pol,gaussian")]
        configs: Vec<ConfigKind>,
        #[arg(long, default_value_t = 2048)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        s0: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
        probes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        truncation: Option<usize>,
        #[command(flatten)]
        pol: PolArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct HnswArgs {
    #[arg(long = "M", default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    efc: usize,
}

#[derive(Args, Clone, Copy)]
struct Ks2Args {
    /// Subspaces for KS2 (0 disables KS2 metadata).
    #[arg(long = "L", default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value = "sym")]
    kind: ConfigKind,
    /// Store per-edge scalars as 16-bit values.
    #[arg(long)]
    quantize: bool,
    #[command(flatten)]
    pol: PolArgs,
}

#[derive(Subcommand)]
enum GraphCmd {
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hnsw: HnswArgs,
        #[command(flatten)]
        ks2: Ks2Args,
        #[arg(long)]
        out: PathBuf,
    },
    Search {
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// `lo:hi` or a comma list.
        #[arg(long, default_value = "10:500")]
        efs_sweep: String,
        /// Search without the KS2 test.
        #[arg(long)]
        plain: bool,
    },
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hnsw: HnswArgs,
        #[command(flatten)]
        ks2: Ks2Args,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "10:500")]
        efs_sweep: String,
        /// Emit KS2 rows for each of these L instead of plain vs KS2.
        #[arg(long, value_delimiter = ',')]
        l_sweep: Vec<usize>,
        /// Skip the single-threaded QPS pass.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Subcommand)]
enum GtCmd {
    Compute {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "l2")]
        metric: Metric,
    },
}

/// Outcome of a command: rows were written and all checks passed or not.
enum Outcome {
    Pass,
    Fail(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut manifest = RunManifest::new(argv, cli.seed);
    let start = Instant::now();
    match run(&cli, &mut manifest) {
        Ok(Outcome::Pass) => {
            info!("done in {:.1}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fail(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn output(cli: &Cli) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(cli: &Cli, manifest: &RunManifest, rows: &[T]) -> anyhow::Result<()> {
    bench::write_csv(output(cli)?, manifest, rows)?;
    Ok(())
}

fn run(cli: &Cli, manifest: &mut RunManifest) -> anyhow::Result<Outcome> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Config(ConfigCmd::Build { kind, m, d, levels, pol, out }) => {
            let cfg = bench::build_config(*kind, *m, SubspaceLayout::new(*d, *levels)?, (*pol).into(), seed)?;
            cfg.save(out)?;
            manifest.add_config("config", &cfg);
            emit(cli, manifest, &[ConfigSummary::of(&cfg, None)])?;
        }
        Cmd::Config(ConfigCmd::Info { path, n }) => {
            let cfg = ProjectionConfig::load(path)?;
            manifest.add_config("config", &cfg);
            let j = estimate_j(&cfg, *n, seed)?;
            emit(cli, manifest, &[ConfigSummary::of(&cfg, Some((j.mean, j.std_err)))])?;
        }
        Cmd::Bound(a) => {
            let rows = bench::bound_table(&a.m, &a.d, &a.levels, &QuadratureSpec::default());
            emit(cli, manifest, &rows)?;
            if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
                return Ok(Outcome::Fail(format!("m={} d={} L={}: {}", r.m, r.d, r.levels, r.error.as_deref().unwrap_or(""))));
            }
        }
        Cmd::Verify(a) => {
            let rep = run_suite(a, seed)?;
            write_report(cli, manifest, &rep)?;
            if let Some(r) = rep.first_failure() {
                return Ok(Outcome::Fail(format!("{r:?}")));
            }
        }
        Cmd::Mips(MipsCmd::Build { data, config, m, truncation, pol, out }) => {
            let (base, _, _) = load_data(data, Metric::InnerProduct, 0, seed, manifest)?;
            let cfg = bench::build_config(*config, *m, SubspaceLayout::new(base.dim(), 1)?, (*pol).into(), seed)?;
            manifest.add_config("config", &cfg);
            let idx = Ks1Index::build(&base, &cfg, Rotation::identity(base.dim()), *truncation)?;
            let mut w = BufWriter::new(File::create(out)?);
            idx.write_to(&mut w)?;
            w.flush()?;
            emit(cli, manifest, &[IndexSummary { n: idx.len(), d: idx.dim(), m: idx.m(), truncation: idx.truncation() }])?;
        }
        Cmd::Mips(MipsCmd::Query { index, data, k, s0, probe }) => {
            let (base, queries, _) = load_data(data, Metric::InnerProduct, 0, seed, manifest)?;
            let queries = queries.context("--queries or --synthetic is required")?;
            let idx = Ks1Index::read_from(&mut io::BufReader::new(File::open(index)?), base)?;
            let mut s = idx.searcher();
            let mut rows = Vec::new();
            for (qi, q) in queries.rows().enumerate() {
                let r = s.query(q, MipsQueryParams { k: *k, s0: *s0, probe: *probe })?;
                for (rank, (id, score)) in r.hits.iter().enumerate() {
                    rows.push(HitRow { query: qi, rank, id: *id, score: *score as f64 });
                }
            }
            emit(cli, manifest, &rows)?;
        }
        Cmd::Mips(MipsCmd::Bench { data, configs, m, s0, k, probes, runs, truncation, pol }) => {
            let (base, queries, gt) = load_data(data, Metric::InnerProduct, *k, seed, manifest)?;
            let queries = queries.context("--queries or --synthetic is required")?;
            let gt = gt.expect("computed");
            let p = MipsBenchParams {
                m: *m,
                s0: *s0,
                k: *k,
                probes: probes.clone(),
                runs: *runs,
                truncation: *truncation,
                pol: (*pol).into(),
                seed,
            };
            emit(cli, manifest, &bench::mips_bench(&base, &queries, &gt, configs, &p)?)?;
        }
        Cmd::Graph(GraphCmd::Build { data, hnsw, ks2, out }) => {
            let (base, _, _) = load_data(data, Metric::L2, 0, seed, manifest)?;
            let g = build_graph(&base, hnsw, ks2, seed, manifest)?;
            let mut w = BufWriter::new(File::create(out)?);
            g.write_to(&mut w)?;
            w.flush()?;
            emit(cli, manifest, &[IndexSummary { n: g.len(), d: g.dim(), m: hnsw.m, truncation: g.max_level() }])?;
        }
        Cmd::Graph(GraphCmd::Search { index, data, k, efs_sweep, plain }) => {
            let (base, queries, gt) = load_data(data, Metric::L2, *k, seed, manifest)?;
            let queries = queries.context("--queries or --synthetic is required")?;
            let g = Hnsw::read_from(&mut io::BufReader::new(File::open(index)?), base)?;
            let variant = if *plain || !g.has_ks2() { GraphVariant::Plain } else { GraphVariant::Ks2 };
            let efs = bench::parse_efs_sweep(efs_sweep)?;
            emit(cli, manifest, &bench::graph_bench(&g, &queries, &gt.expect("computed"), *k, &efs, &[variant], false)?)?;
        }
        Cmd::Graph(GraphCmd::Bench { data, hnsw, ks2, k, efs_sweep, l_sweep, no_timing }) => {
            let (base, queries, gt) = load_data(data, Metric::L2, *k, seed, manifest)?;
            let queries = queries.context("--queries or --synthetic is required")?;
            let gt = gt.expect("computed");
            let efs = bench::parse_efs_sweep(efs_sweep)?;
            let rows = if l_sweep.is_empty() {
                let g = build_graph(&base, hnsw, ks2, seed, manifest)?;
                let variants: &[GraphVariant] = if g.has_ks2() { &[GraphVariant::Plain, GraphVariant::Ks2] } else { &[GraphVariant::Plain] };
                bench::graph_bench(&g, &queries, &gt, *k, &efs, variants, !no_timing)?
            } else {
                let no_ks2 = Ks2Args { levels: 0, ..*ks2 };
                let mut g = build_graph(&base, hnsw, &no_ks2, seed, manifest)?;
                let mut rows = bench::graph_bench(&g, &queries, &gt, *k, &efs, &[GraphVariant::Plain], !no_timing)?;
                rows.extend(bench::graph_l_sweep(&mut g, &queries, &gt, *k, &efs, l_sweep, ks2.kind, ks2.pol.into(), seed, !no_timing)?);
                rows
            };
            emit(cli, manifest, &rows)?;
        }
        Cmd::Gt(GtCmd::Compute { data, k, metric }) => {
            let (base, queries, _) = load_data(data, *metric, 0, seed, manifest)?;
            let queries = queries.context("--queries or --synthetic is required")?;
            let base = if *metric == Metric::Angular { base.with_metric(Metric::Angular)? } else { base };
            let gt = data::compute_ground_truth(&base, &queries, *k, *metric)?;
            let mut w = output(cli)?;
            gt.write_ivecs(&mut w)?;
            w.flush()?;
        }
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct ConfigSummary {
    kind: &'static str,
    m: usize,
    d: usize,
    levels: usize,
    j_mean: Option<f64>,
    j_std_err: Option<f64>,
}

impl ConfigSummary {
    fn of(cfg: &ProjectionConfig, j: Option<(f64, f64)>) -> Self {
        Self {
            kind: cfg.kind().name(),
            m: cfg.m(),
            d: cfg.layout().dim(),
            levels: cfg.layout().levels(),
            j_mean: j.map(|x| x.0),
            j_std_err: j.map(|x| x.1),
        }
    }
}

#[derive(Serialize)]
struct IndexSummary {
    n: usize,
    d: usize,
    m: usize,
    truncation: usize,
}

#[derive(Serialize)]
struct HitRow {
    query: usize,
    rank: usize,
    id: u32,
    score: f64,
}

fn write_report(cli: &Cli, manifest: &RunManifest, rep: &Report) -> anyhow::Result<()> {
    let mut w = output(cli)?;
    w.write_all(manifest.csv_header().as_bytes())?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_suite(a: &VerifyArgs, seed: u64) -> anyhow::Result<Report> {
    let first_d = |default: usize| a.d.first().copied().unwrap_or(default);
    let mut rep = Report::default();
    match a.suite {
        Suite::Cdf => {
            let ds = if a.d.is_empty() { vec![4, 16, 64] } else { a.d.clone() };
            let n = a.n.unwrap_or(200_000);
            let tol = a.tol.unwrap_or(0.01);
            let phis = [FRAC_PI_6, FRAC_PI_3, 2.0 * FRAC_PI_3];
            let psis = [PI / 12.0, FRAC_PI_6, FRAC_PI_3];
            rep.extend(verify::cdf_grid(&ds, &phis, &psis, n, seed, tol)?);
            // The comparison law of K¹ on a real configuration.
            let d = ds[0].max(8);
            let cfg = akann::config::build_sym(a.m.unwrap_or(16), SubspaceLayout::new(d, 1)?, mix_seed(seed, 1))?;
            rep.rows.push(verify::k1_pit(&cfg, FRAC_PI_3, n, mix_seed(seed, 2), tol)?);
            let grid = [PI / 24.0, PI / 12.0, PI / 8.0, FRAC_PI_6, 5.0 * PI / 24.0];
            rep.extend(verify::comparison_monotonicity(&cfg, FRAC_PI_4, FRAC_PI_3, &grid, n, mix_seed(seed, 3))?);
        }
        Suite::Sensitivity => {
            let d = first_d(16);
            let n = a.n.unwrap_or(200_000);
            let theta = FRAC_PI_4;
            let cfg = akann::config::build_sym(a.m.unwrap_or(16), SubspaceLayout::new(d, 1)?, mix_seed(seed, 1))?;
            let phis = [FRAC_PI_6, PI / 3.5, FRAC_PI_3, PI / 2.5];
            let psis = [PI / 12.0, FRAC_PI_6, FRAC_PI_4];
            rep.extend(verify::sensitivity(&cfg, theta, &phis, &psis, n, seed, a.tol.unwrap_or(0.01), 0.49)?);
            for psi in psis {
                rep.rows.push(verify::p2_grid(d, theta, psi, 50)?);
            }
        }
        Suite::Jstat => {
            let levels = if a.levels.is_empty() { vec![1, 8] } else { a.levels.clone() };
            rep = verify::jstat(a.m.unwrap_or(256), first_d(128), &levels, a.n.unwrap_or(1_000_000), seed, a.tol.unwrap_or(0.005))?;
        }
        Suite::Dominance => {
            rep.rows.push(verify::dominance_row(a.m.unwrap_or(256), first_d(128), a.n.unwrap_or(1 << 25), seed, 5.0)?);
        }
        Suite::Simplex => {
            rep.rows.push(verify::simplex_identity(first_d(16), a.n.unwrap_or(100_000), seed, a.tol.unwrap_or(1e-9))?);
        }
    }
    Ok(rep)
}

/// Resolves a dataset path, trying `$AKANN_DATA_DIR/<path>` for relative
/// paths that do not exist as given.
fn resolve(p: &Path) -> PathBuf {
    if p.is_relative() && !p.exists() {
        if let Some(root) = std::env::var_os("AKANN_DATA_DIR") {
            return Path::new(&root).join(p);
        }
    }
    p.to_path_buf()
}

fn read_any(p: &Path) -> anyhow::Result<Dataset> {
    let p = resolve(p);
    data::read_vecs(&p, VecsFormat::from_path(&p)?).with_context(|| format!("reading {}", p.display()))
}

/// Loads base vectors, optional queries and (when `k > 0`) ground truth,
/// computing the latter if it is not supplied.
fn load_data(
    a: &DataArgs,
    metric: Metric,
    k: usize,
    seed: u64,
    manifest: &mut RunManifest,
) -> anyhow::Result<(Dataset, Option<Dataset>, Option<GroundTruth>)> {
    let (base, queries) = match (&a.synthetic, &a.data) {
        (Some(spec), None) => {
            let parts: Vec<usize> = spec.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>().context("--synthetic expects n,d[,clusters]")?;
            let (n, d, c) = match parts[..] {
                [n, d] => (n, d, 100),
                [n, d, c] => (n, d, c),
                _ => bail!("--synthetic expects n,d[,clusters]"),
            };
            let gen = |n, stream| {
                if a.decay > 0.0 {
                    data::synthetic_spectral(n, d, c, a.spread, a.decay, seed, stream)
                } else {
                    data::synthetic_clusters(n, d, c, a.spread, seed, stream)
                }
            };
            let (base, q) = (gen(n, 0)?, gen(a.nq, 1)?);
            (base, Some(q))
        }
        (None, Some(p)) => (read_any(p)?, a.queries.as_deref().map(read_any).transpose()?),
        _ => bail!("give exactly one of --data or --synthetic"),
    };
    manifest.add_dataset("base", &base);
    if let Some(q) = &queries {
        manifest.add_dataset("queries", q);
    }
    let gt = match (&queries, k) {
        (Some(q), k) if k > 0 => Some(match &a.gt {
            Some(p) => {
                let ids = data::read_vecs(resolve(p), VecsFormat::Ivecs)?;
                if ids.len() != q.len() || ids.dim() < k {
                    bail!("ground truth has {} rows of {} ids; need {} rows of at least {k}", ids.len(), ids.dim(), q.len());
                }
                GroundTruth { k, metric, ids: ids.rows().map(|r| r[..k].iter().map(|&x| x as u32).collect()).collect(), scores: vec![] }
            }
            None => {
                if a.synthetic.is_none() {
                    warn!("no ground truth given; computing it exactly");
                }
                data::compute_ground_truth(&base, q, k, metric)?
            }
        }),
        _ => None,
    };
    Ok((base, queries, gt))
}

fn build_graph(base: &Dataset, h: &HnswArgs, ks2: &Ks2Args, seed: u64, manifest: &mut RunManifest) -> anyhow::Result<Hnsw> {
    let params = HnswParams { m: h.m, efc: h.efc, efs: h.efc.max(10), level_lambda: None };
    let mut g = Hnsw::build(base, params, seed)?;
    if ks2.levels > 0 {
        let layout = SubspaceLayout::new(base.dim(), ks2.levels)?;
        let cfg = bench::build_config(ks2.kind, akann::graph::KS2_M, layout, ks2.pol.into(), mix_seed(seed, 100 + ks2.levels as u64))?;
        manifest.add_config("ks2", &cfg);
        let rot = Rotation::sample(base.dim(), mix_seed(seed, 1), RotationMode::Exact)?;
        g.attach_ks2(&cfg, rot, ks2.quantize)?;
    }
    Ok(g)
}
