//! C ABI over `akann`.
//!
//! Every function returns an [`AkannStatus`]; on failure the message is
//! available from [`akann_last_error`] on the same thread. Objects are
//! opaque handles created by `*_new`/`*_build`/`*_load` and released with
//! the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use akann::config::{self, ConfigKind, PolParams, ProjectionConfig};
use akann::data::{Dataset, Metric};
use akann::graph::{Hnsw, HnswParams, Scratch, SearchOptions};
use akann::linalg::{Rotation, RotationMode, SubspaceLayout};
use akann::mips::{Ks1Index, MipsQueryParams};
use akann::special::{refangle_lower_bound, QuadratureSpec};
use akann::Error;

/// Result codes. `Ok` is zero; everything else is an error.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AkannStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    Domain = 3,
    NotUnitNorm = 4,
    Contract = 5,
    Quadrature = 6,
    Format = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Projection configuration handle.
pub struct AkannConfig(ProjectionConfig);

/// Row-major `f32` vectors.
pub struct AkannDataset(Dataset);

pub struct AkannKs1Index(Ks1Index);

/// HNSW graph, optionally with KS2 metadata.
pub struct AkannGraph {
    graph: Hnsw,
    scratch: Mutex<Scratch>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AkannStatus {
    match e {
        Error::InvalidArgument(_) => AkannStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => AkannStatus::DimensionMismatch,
        Error::Domain(_) => AkannStatus::Domain,
        Error::NotUnitNorm(_) => AkannStatus::NotUnitNorm,
        Error::Contract(_) => AkannStatus::Contract,
        Error::Quadrature(_) => AkannStatus::Quadrature,
        Error::Format(_) => AkannStatus::Format,
        Error::Io(_) => AkannStatus::Io,
    }
}

struct Fail(AkannStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(AkannStatus::Io, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AkannStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AkannStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AkannStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            AkannStatus::Panic
        }
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<(), Fail> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual }.into())
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(AkannStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) {
    if !out.is_null() {
        *out = value;
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn akann_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn akann_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Expected reference cosine of the random configuration with `m`
/// codewords per level on `levels` subspaces of `R^d`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_refangle_bound(m: usize, d: usize, levels: usize, out: *mut f64) -> AkannStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = refangle_lower_bound(m, &SubspaceLayout::new(d, levels)?, &QuadratureSpec::default())?;
        Ok(())
    })
}

/// Builds a configuration. `kind`: 0 sym, 1 pol, 2 ran, 3 gaussian (the
/// on-disk codes). Gaussian requires `levels == 1`.
///
/// # Safety
/// `out` must be valid for a write; the handle is freed with
/// [`akann_config_free`].
#[no_mangle]
pub unsafe extern "C" fn akann_config_build(
    kind: u8,
    m: usize,
    d: usize,
    levels: usize,
    seed: u64,
    out: *mut *mut AkannConfig,
) -> AkannStatus {
    guard(|| {
        let kind = ConfigKind::from_code(kind).map_err(|_| Fail(AkannStatus::InvalidArgument, format!("unknown configuration kind {kind}")))?;
        let layout = SubspaceLayout::new(d, levels)?;
        let cfg = match kind {
            ConfigKind::Sym => config::build_sym(m, layout, seed)?,
            ConfigKind::Pol => config::build_pol(m, layout, PolParams::default(), seed)?,
            ConfigKind::Ran => config::build_ran(m, layout, seed)?,
            ConfigKind::Gaussian if levels == 1 => config::build_gaussian(m, d, seed)?,
            ConfigKind::Gaussian => return Err(Fail(AkannStatus::InvalidArgument, "gaussian needs levels = 1".into())),
        };
        put(out, AkannConfig(cfg))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_config_load(path: *const c_char, out: *mut *mut AkannConfig) -> AkannStatus {
    guard(|| put(out, AkannConfig(ProjectionConfig::load(self::path(path)?)?)))
}

/// # Safety
/// `cfg` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn akann_config_save(cfg: *const AkannConfig, path: *const c_char) -> AkannStatus {
    guard(|| Ok(borrow(cfg, "cfg")?.0.save(self::path(path)?)?))
}

/// Writes `m`, `d` and `levels`; any out pointer may be null.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn akann_config_shape(cfg: *const AkannConfig, m: *mut usize, d: *mut usize, levels: *mut usize) -> AkannStatus {
    guard(|| {
        let c = &borrow(cfg, "cfg")?.0;
        write_out(m, c.m());
        write_out(d, c.layout().dim());
        write_out(levels, c.layout().levels());
        Ok(())
    })
}

/// Monte-Carlo estimate of the expected reference cosine.
///
/// # Safety
/// `cfg` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn akann_config_estimate_j(
    cfg: *const AkannConfig,
    n: usize,
    seed: u64,
    mean: *mut f64,
    std_err: *mut f64,
) -> AkannStatus {
    guard(|| {
        let j = config::estimate_j(&borrow(cfg, "cfg")?.0, n, seed)?;
        write_out(mean, j.mean);
        write_out(std_err, j.std_err);
        Ok(())
    })
}

/// Reference codes (one per level) and reference cosine of a unit vector.
///
/// # Safety
/// `x` must point to `d` doubles and `codes` to `levels` writable `u32`s.
#[no_mangle]
pub unsafe extern "C" fn akann_assign_reference(
    cfg: *const AkannConfig,
    x: *const f64,
    d: usize,
    codes: *mut u32,
    levels: usize,
    a_s: *mut f64,
) -> AkannStatus {
    guard(|| {
        let c = &borrow(cfg, "cfg")?.0;
        check_dim(c.layout().dim(), d)?;
        check_dim(c.layout().levels(), levels)?;
        let r = config::assign_reference(slice(x, d, "x")?, c)?;
        slice_mut(codes, levels, "codes")?.copy_from_slice(&r.codes);
        write_out(a_s, r.a_s);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akann_config_free(cfg: *mut AkannConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Copies `n × d` row-major floats. `metric`: 0 l2, 1 angular
/// (rows are normalised), 2 inner product.
///
/// # Safety
/// `data` must point to `n·d` floats and `out` be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_dataset_new(data: *const f32, n: usize, d: usize, metric: u32, out: *mut *mut AkannDataset) -> AkannStatus {
    guard(|| {
        let metric = match metric {
            0 => Metric::L2,
            1 => Metric::Angular,
            2 => Metric::InnerProduct,
            x => return Err(Fail(AkannStatus::InvalidArgument, format!("unknown metric {x}"))),
        };
        let len = n.checked_mul(d).ok_or_else(|| Fail(AkannStatus::InvalidArgument, "n·d overflows".into()))?;
        put(out, AkannDataset(Dataset::new(slice(data, len, "data")?.to_vec(), d, metric)?))
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akann_dataset_free(ds: *mut AkannDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Builds a KS1 index over a copy of `ds` (which needs `levels == 1`).
/// `truncation == 0` keeps whole posting lists.
///
/// # Safety
/// Handles must be live; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_ks1_build(
    ds: *const AkannDataset,
    cfg: *const AkannConfig,
    truncation: usize,
    out: *mut *mut AkannKs1Index,
) -> AkannStatus {
    guard(|| {
        let ds = &borrow(ds, "ds")?.0;
        let cfg = &borrow(cfg, "cfg")?.0;
        let t = (truncation > 0).then_some(truncation);
        put(out, AkannKs1Index(Ks1Index::build(ds, cfg, Rotation::identity(ds.dim()), t)?))
    })
}

/// Top-`k` inner products. Writes up to `k` ids and scores and the count.
///
/// # Safety
/// `q` must point to `d` floats; `ids` and `scores` to `k` writable slots.
#[no_mangle]
pub unsafe extern "C" fn akann_ks1_query(
    idx: *const AkannKs1Index,
    q: *const f32,
    d: usize,
    k: usize,
    s0: usize,
    probe: usize,
    ids: *mut u32,
    scores: *mut f32,
    found: *mut usize,
) -> AkannStatus {
    guard(|| {
        let idx = &borrow(idx, "idx")?.0;
        check_dim(idx.dim(), d)?;
        let r = idx.query(slice(q, d, "q")?, MipsQueryParams { k, s0, probe })?;
        let ids = slice_mut(ids, k, "ids")?;
        let scores = slice_mut(scores, k, "scores")?;
        for (i, (id, s)) in r.hits.iter().enumerate() {
            ids[i] = *id;
            scores[i] = *s;
        }
        write_out(found, r.hits.len());
        Ok(())
    })
}

/// # Safety
/// `idx` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn akann_ks1_save(idx: *const AkannKs1Index, path: *const c_char) -> AkannStatus {
    guard(|| {
        let idx = &borrow(idx, "idx")?.0;
        let mut w = BufWriter::new(File::create(self::path(path)?)?);
        idx.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// Loads an index file over a copy of `ds` (the vectors it was built on).
///
/// # Safety
/// `path` NUL-terminated, `ds` live, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_ks1_load(path: *const c_char, ds: *const AkannDataset, out: *mut *mut AkannKs1Index) -> AkannStatus {
    guard(|| {
        let ds = borrow(ds, "ds")?.0.clone();
        let mut r = BufReader::new(File::open(self::path(path)?)?);
        put(out, AkannKs1Index(Ks1Index::read_from(&mut r, ds)?))
    })
}

/// # Safety
/// `idx` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akann_ks1_free(idx: *mut AkannKs1Index) {
    if !idx.is_null() {
        drop(Box::from_raw(idx));
    }
}

fn wrap_graph(graph: Hnsw) -> AkannGraph {
    let scratch = Mutex::new(Scratch::new(graph.len()));
    AkannGraph { graph, scratch }
}

/// Builds an HNSW graph over a copy of `ds`.
///
/// # Safety
/// `ds` live, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_build(
    ds: *const AkannDataset,
    m: usize,
    efc: usize,
    seed: u64,
    out: *mut *mut AkannGraph,
) -> AkannStatus {
    guard(|| {
        let ds = &borrow(ds, "ds")?.0;
        let params = HnswParams { m, efc, efs: efc.max(1), level_lambda: None };
        put(out, wrap_graph(Hnsw::build(ds, params, seed)?))
    })
}

/// Attaches KS2 edge metadata using `cfg` (which needs `m == 256`) and a
/// rotation drawn from `rotation_seed`.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_attach_ks2(g: *mut AkannGraph, cfg: *const AkannConfig, rotation_seed: u64, quantize: bool) -> AkannStatus {
    guard(|| {
        let g = g.as_mut().ok_or_else(|| null("g"))?;
        let cfg = &borrow(cfg, "cfg")?.0;
        let rot = Rotation::sample(g.graph.dim(), rotation_seed, RotationMode::Exact)?;
        Ok(g.graph.attach_ks2(cfg, rot, quantize)?)
    })
}

/// `k` nearest neighbours by squared ℓ2 distance. With `use_ks2` the
/// graph must carry KS2 metadata. `evals` receives the exact distance count.
///
/// # Safety
/// `q` must point to `d` floats; `ids` and `dists` to `k` writable slots.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_search(
    g: *const AkannGraph,
    q: *const f32,
    d: usize,
    k: usize,
    efs: usize,
    use_ks2: bool,
    ids: *mut u32,
    dists: *mut f32,
    found: *mut usize,
    evals: *mut u64,
) -> AkannStatus {
    guard(|| {
        let g = borrow(g, "g")?;
        check_dim(g.graph.dim(), d)?;
        let q = slice(q, d, "q")?;
        let mut s = g.scratch.lock().unwrap_or_else(|p| p.into_inner());
        let r = if use_ks2 {
            g.graph.search_ks2(q, k, efs, SearchOptions::default(), &mut s)?
        } else {
            g.graph.search(q, k, efs, &mut s)?
        };
        let ids = slice_mut(ids, k, "ids")?;
        let dists = slice_mut(dists, k, "dists")?;
        for (i, (id, dist)) in r.hits.iter().enumerate() {
            ids[i] = *id;
            dists[i] = *dist;
        }
        write_out(found, r.hits.len());
        write_out(evals, r.stats.exact_evals);
        Ok(())
    })
}

/// # Safety
/// `g` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_save(g: *const AkannGraph, path: *const c_char) -> AkannStatus {
    guard(|| {
        let g = borrow(g, "g")?;
        let mut w = BufWriter::new(File::create(self::path(path)?)?);
        g.graph.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// Loads a graph file over a copy of `ds`.
///
/// # Safety
/// `path` NUL-terminated, `ds` live, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_load(path: *const c_char, ds: *const AkannDataset, out: *mut *mut AkannGraph) -> AkannStatus {
    guard(|| {
        let ds = borrow(ds, "ds")?.0.clone();
        let mut r = BufReader::new(File::open(self::path(path)?)?);
        put(out, wrap_graph(Hnsw::read_from(&mut r, ds)?))
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akann_graph_free(g: *mut AkannGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}
