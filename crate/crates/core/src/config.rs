//! Projection-vector configurations and reference assignments.
//!
//! A configuration holds `L × m` sub-vectors of dimension `d′`; picking one
//! codeword per level and concatenating gives one of `m^L` virtual
//! projection vectors. For the spherical kinds every sub-vector has norm
//! `1/√L`, so every virtual codeword is a unit vector and the best virtual
//! codeword for `x` decomposes into independent per-level argmaxes.

use std::io::{Read, Write};

use ndarray::{s, Array2, ArrayView2, ShapeBuilder};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::*;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, Rotation, SubspaceLayout};
use crate::rng::{self, streams, Rng};

pub const CONFIG_MAGIC: &[u8; 4] = b"AKCF";
pub const CONFIG_VERSION: u16 = 1;

/// Unit-norm tolerance for inputs to [`assign_reference`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfigKind {
    /// Random antipodal pairs.
    Sym,
    /// Randomly rotated cross-polytopes, best of several candidates.
    Pol,
    /// Independent uniform points.
    Ran,
    /// Unnormalised Gaussian rows with their negations (CEOs baseline).
    Gaussian,
}

impl ConfigKind {
    pub fn code(self) -> u8 {
        match self {
            ConfigKind::Sym => 0,
            ConfigKind::Pol => 1,
            ConfigKind::Ran => 2,
            ConfigKind::Gaussian => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ConfigKind::Sym,
            1 => ConfigKind::Pol,
            2 => ConfigKind::Ran,
            3 => ConfigKind::Gaussian,
            c => return Err(Error::format(format!("unknown configuration kind {c}"))),
        })
    }

    pub fn is_antipodal(self) -> bool {
        !matches!(self, ConfigKind::Ran)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConfigKind::Sym => "sym",
            ConfigKind::Pol => "pol",
            ConfigKind::Ran => "ran",
            ConfigKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for ConfigKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" => Ok(ConfigKind::Sym),
            "pol" => Ok(ConfigKind::Pol),
            "ran" => Ok(ConfigKind::Ran),
            "gaussian" | "ceos" => Ok(ConfigKind::Gaussian),
            other => Err(Error::invalid(format!("unknown configuration kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionConfig {
    kind: ConfigKind,
    layout: SubspaceLayout,
    m: usize,
    /// Level-major: codeword `j` of level `i` starts at `(i·m + j)·d′`.
    codewords: Vec<f64>,
    /// Every codeword `2t+1` is exactly `−codeword(2t)`.
    paired: bool,
}

/// Per-level codeword indices and the cosine of the reference angle.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceAssignment {
    pub codes: Vec<u32>,
    pub a_s: f64,
}

/// Parameters of the cross-polytope candidate search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolParams {
    /// Number of candidate configurations (`R`).
    pub candidates: usize,
    /// Size of the shared evaluation sample (`N`).
    pub eval_samples: usize,
}

impl Default for PolParams {
    fn default() -> Self {
        Self { candidates: 8, eval_samples: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl ProjectionConfig {
    pub fn kind(&self) -> ConfigKind {
        self.kind
    }

    pub fn layout(&self) -> &SubspaceLayout {
        &self.layout
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_antipodal(&self) -> bool {
        self.kind.is_antipodal()
    }

    pub fn codewords(&self) -> &[f64] {
        &self.codewords
    }

    /// The `m × d′` block of level `level`.
    pub fn level(&self, level: usize) -> &[f64] {
        let block = self.m * self.layout.sub_dim();
        &self.codewords[level * block..(level + 1) * block]
    }

    pub fn codeword(&self, level: usize, j: usize) -> &[f64] {
        let d = self.layout.sub_dim();
        &self.level(level)[j * d..(j + 1) * d]
    }

    /// Concatenation of `codeword(i, codes[i])` over the levels.
    pub fn virtual_codeword(&self, codes: &[u32]) -> Result<Vec<f64>> {
        Error::check_dim(self.layout.levels(), codes.len())?;
        let mut out = Vec::with_capacity(self.layout.dim());
        for (i, &c) in codes.iter().enumerate() {
            if c as usize >= self.m {
                return Err(Error::invalid(format!("code {c} out of range for m = {}", self.m)));
            }
            out.extend_from_slice(self.codeword(i, c as usize));
        }
        Ok(out)
    }

    fn level_view(&self, level: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.m, self.layout.sub_dim()), self.level(level)).expect("level block shape")
    }

    /// Even rows of a level (one codeword of each antipodal pair).
    fn half_view(&self, level: usize) -> ArrayView2<'_, f64> {
        let dp = self.layout.sub_dim();
        let block = self.level(level);
        ArrayView2::from_shape((self.m / 2, dp).strides((2 * dp, 1)), &block[..(self.m - 1) * dp])
            .expect("half block shape")
    }

    /// Builds a configuration from raw codewords (level-major), checking the
    /// norm discipline of the spherical kinds.
    pub fn from_parts(kind: ConfigKind, layout: SubspaceLayout, m: usize, codewords: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        Error::check_dim(layout.levels() * m * layout.sub_dim(), codewords.len())?;
        if kind == ConfigKind::Gaussian && layout.levels() != 1 {
            return Err(Error::invalid("Gaussian configurations have a single level"));
        }
        linalg::check_finite(&codewords)?;
        let dp = layout.sub_dim();
        let paired = m.is_multiple_of(2)
            && codewords.chunks_exact(2 * dp).all(|p| p[..dp].iter().zip(&p[dp..]).all(|(a, b)| *a == -*b));
        Ok(Self { kind, layout, m, codewords, paired })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CONFIG_MAGIC)?;
        put_u16(w, CONFIG_VERSION)?;
        put_u8(w, self.kind.code())?;
        put_usize32(w, self.layout.dim(), "d")?;
        put_usize32(w, self.layout.levels(), "L")?;
        put_usize32(w, self.m, "m")?;
        for &v in &self.codewords {
            put_f32(w, v as f32)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, CONFIG_MAGIC)?;
        expect_version(r, CONFIG_VERSION)?;
        let kind = ConfigKind::from_code(get_u8(r)?)?;
        let d = get_u32(r)? as usize;
        let levels = get_u32(r)? as usize;
        let m = get_u32(r)? as usize;
        let layout = SubspaceLayout::new_relaxed(d, levels).map_err(|e| Error::format(e.to_string()))?;
        let len = checked_len(&[levels, m, layout.sub_dim()], "codeword block")?;
        let mut codewords = Vec::with_capacity(len);
        for _ in 0..len {
            codewords.push(get_f32(r)? as f64);
        }
        Self::from_parts(kind, layout, m, codewords)
    }

    /// Copy with codewords rounded to their on-disk `f32` precision, so an
    /// index built from it answers queries exactly like its reloaded copy.
    pub fn storage_rounded(&self) -> Result<Self> {
        let bytes = self.to_bytes();
        Self::read_from(&mut bytes.as_slice())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

fn scaled_push(out: &mut Vec<f64>, v: &[f64], scale: f64) {
    out.extend(v.iter().map(|x| x * scale));
}

/// Random antipodal pairs: per level, `m/2` uniform points on `S^{d′−1}`
/// and their negations (stored adjacently), scaled to `1/√L`.
pub fn build_sym(m: usize, layout: SubspaceLayout, seed: u64) -> Result<ProjectionConfig> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::invalid(format!("S_sym needs an even m ≥ 2, got {m}")));
    }
    let mut rng = rng::rng_for(seed, streams::CONFIG);
    let scale = 1.0 / (layout.levels() as f64).sqrt();
    let dp = layout.sub_dim();
    let mut codewords = Vec::with_capacity(layout.levels() * m * dp);
    let mut p = vec![0.0; dp];
    for _ in 0..layout.levels() {
        for _ in 0..m / 2 {
            linalg::fill_uniform_sphere(&mut p, &mut rng);
            scaled_push(&mut codewords, &p, scale);
            scaled_push(&mut codewords, &p, -scale);
        }
    }
    ProjectionConfig::from_parts(ConfigKind::Sym, layout, m, codewords)
}

/// Independent uniform points, `m` per level, scaled to `1/√L`.
pub fn build_ran(m: usize, layout: SubspaceLayout, seed: u64) -> Result<ProjectionConfig> {
    if m == 0 {
        return Err(Error::invalid("S_ran needs m ≥ 1"));
    }
    let mut rng = rng::rng_for(seed, streams::CONFIG);
    let scale = 1.0 / (layout.levels() as f64).sqrt();
    let dp = layout.sub_dim();
    let mut codewords = Vec::with_capacity(layout.levels() * m * dp);
    let mut p = vec![0.0; dp];
    for _ in 0..layout.levels() * m {
        linalg::fill_uniform_sphere(&mut p, &mut rng);
        scaled_push(&mut codewords, &p, scale);
    }
    ProjectionConfig::from_parts(ConfigKind::Ran, layout, m, codewords)
}

/// `m/2` standard Gaussian vectors in `R^d` and their negations.
pub fn build_gaussian(m: usize, d: usize, seed: u64) -> Result<ProjectionConfig> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::invalid(format!("Gaussian configuration needs an even m ≥ 2, got {m}")));
    }
    let layout = SubspaceLayout::new_relaxed(d, 1)?;
    let mut rng = rng::rng_for(seed, streams::CONFIG);
    let mut codewords = Vec::with_capacity(m * d);
    let mut g = vec![0.0; d];
    for _ in 0..m / 2 {
        g.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        scaled_push(&mut codewords, &g, 1.0);
        scaled_push(&mut codewords, &g, -1.0);
    }
    ProjectionConfig::from_parts(ConfigKind::Gaussian, layout, m, codewords)
}

/// Unit cross-polytope vertices `±H e_k`, pairs stored adjacently.
fn push_rotated_polytope(out: &mut Vec<f64>, dp: usize, pairs: usize, rng: &mut Rng) {
    let h = Rotation::sample_with(dp, rng);
    let mat = h.matrix();
    for k in 0..pairs {
        let col: Vec<f64> = (0..dp).map(|i| mat[i * dp + k]).collect();
        scaled_push(out, &col, 1.0);
        scaled_push(out, &col, -1.0);
    }
}

/// Rotated cross-polytopes (`m = 2d′a + b`): `R` unit-sphere candidates
/// are scored by `J̃` on one shared sample and the best is copied to every
/// level under an independent rotation, then scaled to `1/√L`.
pub fn build_pol(m: usize, layout: SubspaceLayout, params: PolParams, seed: u64) -> Result<ProjectionConfig> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::invalid(format!("S_pol needs an even m ≥ 2 (b = m mod 2d′ must be even), got {m}")));
    }
    if params.candidates == 0 || params.eval_samples == 0 {
        return Err(Error::invalid("S_pol needs at least one candidate and one evaluation sample"));
    }
    let dp = layout.sub_dim();
    let full = m / (2 * dp);
    let rest_pairs = (m % (2 * dp)) / 2;

    let unit = SubspaceLayout::new_relaxed(dp, 1)?;
    let mut eval_rng = rng::rng_for(seed, streams::POL_EVAL);
    let mut sample = vec![0.0; params.eval_samples * dp];
    for row in sample.chunks_exact_mut(dp) {
        linalg::fill_uniform_sphere(row, &mut eval_rng);
    }

    let mut rng = rng::rng_for(seed, streams::CONFIG);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..params.candidates {
        let mut cand = Vec::with_capacity(m * dp);
        for _ in 0..full {
            push_rotated_polytope(&mut cand, dp, dp, &mut rng);
        }
        if rest_pairs > 0 {
            push_rotated_polytope(&mut cand, dp, rest_pairs, &mut rng);
        }
        let cfg = ProjectionConfig::from_parts(ConfigKind::Pol, unit, m, cand)?;
        let score = mean(&reference_cosines_rows(&cfg, &sample)?);
        log::debug!("S_pol candidate J̃ = {score:.6}");
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, cfg.codewords));
        }
    }
    let (_, best) = best.expect("at least one candidate");

    let scale = 1.0 / (layout.levels() as f64).sqrt();
    let mut codewords = Vec::with_capacity(layout.levels() * m * dp);
    for _ in 0..layout.levels() {
        let h = Rotation::sample_with(dp, &mut rng);
        for u in best.chunks_exact(dp) {
            let hu = h.apply(u)?;
            scaled_push(&mut codewords, &hu, scale);
        }
    }
    ProjectionConfig::from_parts(ConfigKind::Pol, layout, m, codewords)
}

/// Argmax over one level's codewords; ties go to the lowest index.
fn level_argmax(sub: &[f64], level: &[f64], dp: usize) -> (u32, f64) {
    let mut best = (0u32, f64::NEG_INFINITY);
    for (j, u) in level.chunks_exact(dp).enumerate() {
        let s = dot(sub, u);
        if s > best.1 {
            best = (j as u32, s);
        }
    }
    best
}

/// Reference assignment without the unit-norm check (the caller guarantees
/// the input is normalised, or wants the unnormalised score).
pub fn assign_unchecked(x: &[f64], cfg: &ProjectionConfig) -> ReferenceAssignment {
    let dp = cfg.layout.sub_dim();
    let mut codes = Vec::with_capacity(cfg.layout.levels());
    let mut a_s = 0.0;
    for (i, sub) in x.chunks_exact(dp).enumerate() {
        let (c, s) = level_argmax(sub, cfg.level(i), dp);
        codes.push(c);
        a_s += s;
    }
    ReferenceAssignment { codes, a_s }
}

/// Reference vector and reference cosine of a unit vector.
pub fn assign_reference(x: &[f64], cfg: &ProjectionConfig) -> Result<ReferenceAssignment> {
    Error::check_dim(cfg.layout.dim(), x.len())?;
    let n = linalg::norm(x);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnitNorm(n));
    }
    Ok(assign_unchecked(x, cfg))
}

/// Reference cosines of a row-major batch of unit vectors, level by level
/// with a dense product against the codeword block.
pub fn reference_cosines_rows(cfg: &ProjectionConfig, rows: &[f64]) -> Result<Vec<f64>> {
    let d = cfg.layout.dim();
    if !rows.len().is_multiple_of(d) {
        return Err(Error::invalid("row buffer length is not a multiple of d"));
    }
    let n = rows.len() / d;
    let x = ArrayView2::from_shape((n, d), rows).expect("row shape");
    let dp = cfg.layout.sub_dim();
    let mut out = vec![0.0; n];
    for level in 0..cfg.layout.levels() {
        let xs = x.slice(s![.., level * dp..(level + 1) * dp]);
        if cfg.paired {
            // max(s, −s) over pairs: half the products.
            let scores: Array2<f64> = xs.dot(&cfg.half_view(level).t());
            for (o, row) in out.iter_mut().zip(scores.rows()) {
                *o += row.iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
            }
        } else {
            let scores: Array2<f64> = xs.dot(&cfg.level_view(level).t());
            for (o, row) in out.iter_mut().zip(scores.rows()) {
                *o += row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

const J_CHUNK: usize = 4096;

/// Monte-Carlo estimate `J̃(S, N)`: the mean reference cosine over `N`
/// uniform unit vectors, with its standard error.
///
/// Chunks of the sample are drawn from their own sub-streams and reduced in
/// chunk order, so the result does not depend on the thread count.
pub fn estimate_j(cfg: &ProjectionConfig, n: usize, seed: u64) -> Result<JEstimate> {
    if n == 0 {
        return Err(Error::invalid("estimate_j needs N ≥ 1"));
    }
    let d = cfg.layout.dim();
    let chunks = n.div_ceil(J_CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = J_CHUNK.min(n - c * J_CHUNK);
            let mut rng = rng::rng_for(seed, rng::substream(streams::J_ESTIMATE, c as u64));
            let mut rows = vec![0.0; len * d];
            for row in rows.chunks_exact_mut(d) {
                linalg::fill_uniform_sphere(row, &mut rng);
            }
            let a = reference_cosines_rows(cfg, &rows)?;
            Ok((a.iter().sum(), a.iter().map(|v| v * v).sum()))
        })
        .collect();
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for p in partial {
        let (s, q) = p?;
        sum += s;
        sumsq += q;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(JEstimate { mean, std_err: (var / nf).sqrt(), n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn layout(d: usize, l: usize) -> SubspaceLayout {
        SubspaceLayout::new(d, l).unwrap()
    }

    fn check_norms(cfg: &ProjectionConfig, tol: f64) {
        let target = 1.0 / (cfg.layout().levels() as f64).sqrt();
        for u in cfg.codewords().chunks_exact(cfg.layout().sub_dim()) {
            assert!((linalg::norm(u) - target).abs() <= tol);
        }
    }

    fn check_antipodal(cfg: &ProjectionConfig) {
        for level in 0..cfg.layout().levels() {
            for t in 0..cfg.m() / 2 {
                let (a, b) = (cfg.codeword(level, 2 * t), cfg.codeword(level, 2 * t + 1));
                assert!(a.iter().zip(b).all(|(x, y)| *x == -*y));
            }
        }
    }

    #[test]
    fn sym_minimal() {
        let cfg = build_sym(2, layout(3, 1), 1).unwrap();
        check_norms(&cfg, 1e-12);
        check_antipodal(&cfg);
        assert!(build_sym(3, layout(3, 1), 1).is_err());
    }

    #[test]
    fn sym_large_invariants() {
        let cfg = build_sym(256, layout(128, 8), 2).unwrap();
        check_norms(&cfg, 1e-9);
        check_antipodal(&cfg);
        assert_eq!(cfg.codewords().len(), 8 * 256 * 16);
    }

    #[test]
    fn pol_single_polytope_covers() {
        let dp = 5;
        let cfg = build_pol(2 * dp, layout(dp, 1), PolParams { candidates: 1, eval_samples: 10 }, 3).unwrap();
        let mut rng = rng::rng_for(0, 0);
        for _ in 0..2000 {
            let x = linalg::sample_uniform_sphere(dp, &mut rng);
            let a = assign_reference(&x, &cfg).unwrap();
            assert!(a.a_s >= 1.0 / (dp as f64).sqrt() - 1e-12);
        }
    }

    #[test]
    fn pol_block_orthogonality() {
        let (dp, l) = (16, 8);
        let cfg = build_pol(256, layout(dp * l, l), PolParams { candidates: 2, eval_samples: 1000 }, 4).unwrap();
        check_norms(&cfg, 1e-9);
        check_antipodal(&cfg);
        let inv_l = 1.0 / l as f64;
        for level in 0..l {
            for block in 0..256 / (2 * dp) {
                for i in 0..2 * dp {
                    for j in 0..2 * dp {
                        let g = dot(cfg.codeword(level, block * 2 * dp + i), cfg.codeword(level, block * 2 * dp + j));
                        let ok = [0.0, inv_l, -inv_l].iter().any(|t| (g - t).abs() <= 1e-9);
                        assert!(ok, "level {level} block {block} ({i},{j}) gram {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn pol_rejects_odd_remainder() {
        assert!(build_pol(33, layout(16, 1), PolParams::default(), 0).is_err());
        assert!(build_pol(0, layout(16, 1), PolParams::default(), 0).is_err());
        // m = 2d′·1 + 6 is fine.
        assert!(build_pol(38, layout(16, 1), PolParams { candidates: 1, eval_samples: 100 }, 0).is_ok());
    }

    #[test]
    fn ran_single_codeword_has_zero_mean() {
        let cfg = build_ran(1, layout(16, 1), 5).unwrap();
        let j = estimate_j(&cfg, 1_000_000, 6).unwrap();
        assert!(j.mean.abs() <= 0.005, "{j:?}");
    }

    #[test]
    fn ran_codes_are_uniform() {
        let m = 16;
        let mut rng = rng::rng_for(8, 8);
        let n = 100_000;
        // Codes of one fixed configuration are not uniform; over fresh
        // configurations the codewords are exchangeable.
        let mut counts = vec![0f64; m];
        for i in 0..n {
            let cfg = build_ran(m, layout(8, 1), 10_000 + i as u64).unwrap();
            let x = linalg::sample_uniform_sphere(8, &mut rng);
            counts[assign_reference(&x, &cfg).unwrap().codes[0] as usize] += 1.0;
        }
        let e = n as f64 / m as f64;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // χ²(15) 0.999 quantile.
        assert!(chi2 < 37.70, "chi2 = {chi2}");
    }

    #[test]
    fn gaussian_baseline() {
        let cfg = build_gaussian(2048, 200, 9).unwrap();
        check_antipodal(&cfg);
        let half: Vec<f64> = cfg.codewords().chunks_exact(200).step_by(2).flatten().copied().collect();
        let n = half.len() as f64;
        let mean = half.iter().sum::<f64>() / n;
        let var = half.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let skew = half.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = half.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var) - 3.0;
        assert!(skew.abs() <= 0.05 && kurt.abs() <= 0.05, "skew {skew} kurt {kurt}");
        assert!(build_gaussian(3, 4, 0).is_err());

        let mut rng = rng::rng_for(1, 1);
        let q = linalg::sample_uniform_sphere(200, &mut rng);
        let a = assign_unchecked(&q, &cfg);
        let q3: Vec<f64> = q.iter().map(|v| v * 3.0).collect();
        assert_eq!(assign_unchecked(&q3, &cfg).codes, a.codes);
    }

    #[test]
    fn assign_codeword_itself() {
        let cfg = build_sym(8, layout(4, 1), 10).unwrap();
        for j in 0..8 {
            let a = assign_reference(cfg.codeword(0, j), &cfg).unwrap();
            assert_eq!(a.codes, vec![j as u32]);
            assert_abs_diff_eq!(a.a_s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn assign_rejects_non_unit() {
        let cfg = build_sym(4, layout(3, 1), 0).unwrap();
        assert!(matches!(assign_reference(&[1.0, 1.0, 0.0], &cfg), Err(Error::NotUnitNorm(_))));
        assert!(assign_reference(&[1.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn exhaustive_oracle_small() {
        let (m, l, dp) = (4usize, 2usize, 3usize);
        let cfg = build_sym(m, layout(l * dp, l), 11).unwrap();
        let mut rng = rng::rng_for(12, 12);
        for _ in 0..200 {
            let x = linalg::sample_uniform_sphere(l * dp, &mut rng);
            let got = assign_reference(&x, &cfg).unwrap();
            let mut best = (vec![0u32; l], f64::NEG_INFINITY);
            for a in 0..m as u32 {
                for b in 0..m as u32 {
                    let v = cfg.virtual_codeword(&[a, b]).unwrap();
                    let s = dot(&x, &v);
                    if s > best.1 {
                        best = (vec![a, b], s);
                    }
                }
            }
            assert_eq!(got.codes, best.0);
            assert_abs_diff_eq!(got.a_s, best.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn antipodal_reference_cosine_is_positive() {
        let cfg = build_sym(6, layout(12, 2), 13).unwrap();
        let mut rng = rng::rng_for(14, 14);
        for _ in 0..100_000 {
            let x = linalg::sample_uniform_sphere(12, &mut rng);
            assert!(assign_reference(&x, &cfg).unwrap().a_s > 0.0);
        }
    }

    #[test]
    fn batch_matches_scalar() {
        let cfg = build_pol(40, layout(32, 2), PolParams { candidates: 2, eval_samples: 500 }, 15).unwrap();
        let mut rng = rng::rng_for(16, 16);
        let rows: Vec<f64> = (0..50).flat_map(|_| linalg::sample_uniform_sphere(32, &mut rng)).collect();
        let batch = reference_cosines_rows(&cfg, &rows).unwrap();
        for (x, b) in rows.chunks_exact(32).zip(&batch) {
            assert_abs_diff_eq!(assign_reference(x, &cfg).unwrap().a_s, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_antipodal_pair_j_is_half() {
        let cfg = build_sym(2, layout(3, 1), 17).unwrap();
        let j = estimate_j(&cfg, 100_000, 18).unwrap();
        assert!((j.mean - 0.5).abs() <= 0.01, "{j:?}");
    }

    #[test]
    fn standard_error_scales_with_sqrt_n() {
        let cfg = build_sym(16, layout(8, 1), 19).unwrap();
        let a = estimate_j(&cfg, 100_000, 20).unwrap();
        let b = estimate_j(&cfg, 200_000, 21).unwrap();
        let ratio = a.std_err / b.std_err;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() <= 0.1, "ratio {ratio}");
    }

    #[test]
    fn levels_raise_j() {
        let one = build_sym(256, layout(128, 1), 22).unwrap();
        let eight = build_sym(256, layout(128, 8), 22).unwrap();
        let j1 = estimate_j(&one, 50_000, 23).unwrap().mean;
        let j8 = estimate_j(&eight, 50_000, 23).unwrap().mean;
        assert!(j8 > j1, "{j8} vs {j1}");
    }

    #[test]
    fn deterministic_bytes() {
        let a = build_sym(16, layout(12, 2), 24).unwrap().to_bytes();
        let b = build_sym(16, layout(12, 2), 24).unwrap().to_bytes();
        assert_eq!(a, b);
        let p1 = build_pol(24, layout(12, 1), PolParams { candidates: 3, eval_samples: 300 }, 25).unwrap();
        let p2 = build_pol(24, layout(12, 1), PolParams { candidates: 3, eval_samples: 300 }, 25).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn file_round_trip() {
        let cfg = build_ran(10, layout(9, 3), 26).unwrap();
        let bytes = cfg.to_bytes();
        assert_eq!(&bytes[..4], b"AKCF");
        assert_eq!(bytes.len(), 4 + 2 + 1 + 12 + 4 * 3 * 10 * 3);
        let back = ProjectionConfig::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.kind(), ConfigKind::Ran);
        for (a, b) in back.codewords().iter().zip(cfg.codewords()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ProjectionConfig::read_from(&mut bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(ProjectionConfig::read_from(&mut &bytes[..30]), Err(Error::Format(_))));
    }
}
