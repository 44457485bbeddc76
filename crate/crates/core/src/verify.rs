//! Monte-Carlo checks of the kernel laws and configuration statistics.
//!
//! Every suite returns a [`Report`] with one CSV row per check. Work is
//! split into fixed-size chunks, each drawing from its own sub-stream, and
//! chunk results are combined in chunk order so reports do not depend on
//! the rayon pool size.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, build_pol, build_ran, build_sym, PolParams, ProjectionConfig};
use crate::error::{Error, Result};
use crate::kernels::{k1, k1_cdf, k2, p2_bound, AnglePair, KernelContext};
use crate::linalg::{self, dot, Rotation, SubspaceLayout};
use crate::rng::{self, mix_seed, streams, Rng};
use crate::special::{refangle_lower_bound, QuadratureSpec};

/// Half-width of the measured reference-angle buckets.
pub const PSI_HALF_WIDTH: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub test: String,
    pub d: usize,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub theta: Option<f64>,
    pub n: usize,
    pub empirical: f64,
    pub closed_form: f64,
    pub abs_err: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(test: &str, d: usize, n: usize, empirical: f64, closed_form: f64, pass: bool) -> Self {
        Self {
            test: test.to_string(),
            d,
            phi: None,
            psi: None,
            theta: None,
            n,
            empirical,
            closed_form,
            abs_err: (empirical - closed_form).abs(),
            pass,
        }
    }

    fn angles(mut self, phi: Option<f64>, psi: Option<f64>, theta: Option<f64>) -> Self {
        self.phi = phi;
        self.psi = psi;
        self.theta = theta;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckRow> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r).map_err(|e| Error::format(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Kolmogorov-Smirnov distance between the sample and `cdf`. Sorts in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// A unit vector uniform on the great sphere orthogonal to unit `q`.
pub fn random_orthogonal(q: &[f64], rng: &mut Rng) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..q.len()).map(|_| rng.sample(StandardNormal)).collect();
        let p = dot(&g, q);
        g.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        let n = linalg::norm(&g);
        if n > 1e-8 {
            g.iter_mut().for_each(|x| *x /= n);
            return g;
        }
    }
}

/// `cos a · q + sin a · ω` for unit `q` and unit `ω ⊥ q`.
pub fn at_angle(q: &[f64], omega: &[f64], a: f64) -> Vec<f64> {
    let (c, s) = (a.cos(), a.sin());
    q.iter().zip(omega).map(|(x, y)| c * x + s * y).collect()
}

fn chunked<T: Send>(total: usize, chunk: usize, f: impl Fn(usize, usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let chunks = total.div_ceil(chunk);
    (0..chunks).into_par_iter().map(|c| f(c, chunk.min(total - c * chunk))).collect()
}

fn chunk_rng(seed: u64, c: usize) -> Rng {
    rng::rng_for(seed, rng::substream(streams::VERIFY, c as u64))
}

/// Conditional CDF law: simulates `⟨v, u⟩` with `u` uniform on the
/// cross-section of vectors at angle `ψ` from `q` and `v` at angle `φ` from
/// `q`, and compares against [`k1_cdf`] with the KS distance.
pub fn cdf_cross_section(d: usize, phi: f64, psi: f64, n: usize, seed: u64, tol: f64) -> Result<CheckRow> {
    let angles = AnglePair::new(phi, psi)?;
    let parts = chunked(n, 8192, |c, len| {
        let mut r = chunk_rng(seed, c);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let q = linalg::sample_uniform_sphere(d, &mut r);
            let v = at_angle(&q, &random_orthogonal(&q, &mut r), phi);
            let u = at_angle(&q, &random_orthogonal(&q, &mut r), psi);
            out.push(dot(&v, &u));
        }
        Ok(out)
    })?;
    let mut samples: Vec<f64> = parts.into_iter().flatten().collect();
    let ks = ks_statistic(&mut samples, |x| k1_cdf(x, angles, d).expect("validated angles"));
    Ok(CheckRow::new("cdf_ks", d, n, ks, 0.0, ks < tol).angles(Some(phi), Some(psi), None))
}

/// The CDF law over a grid of `(d, φ, ψ)`.
pub fn cdf_grid(ds: &[usize], phis: &[f64], psis: &[f64], n: usize, seed: u64, tol: f64) -> Result<Report> {
    let mut rep = Report::default();
    let mut cell = 0u64;
    for &d in ds {
        for &phi in phis {
            for &psi in psis {
                rep.rows.push(cdf_cross_section(d, phi, psi, n, mix_seed(seed, cell), tol)?);
                cell += 1;
            }
        }
    }
    Ok(rep)
}

/// Distribution of the real `K¹` under fresh Haar rotations for a fixed
/// pair `(q, v)` at angle `φ`. Each draw has its own measured `ψ`, so the
/// check is the probability integral transform `k1_cdf(K¹ | φ, ψ)` against
/// the uniform law.
pub fn k1_pit(cfg: &ProjectionConfig, phi: f64, n: usize, seed: u64, tol: f64) -> Result<CheckRow> {
    let d = cfg.layout().dim();
    let mut r = rng::rng_for(seed, streams::VERIFY);
    let q = linalg::sample_uniform_sphere(d, &mut r);
    let v = at_angle(&q, &random_orthogonal(&q, &mut r), phi);
    let parts = chunked(n, 4096, |c, len| {
        let mut r = chunk_rng(seed, c);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let ctx = KernelContext::new(cfg.clone(), Rotation::sample_with(d, &mut r))?;
            let psi = ctx.query_reference_cosine(&q)?.clamp(-1.0, 1.0).acos();
            let x = k1(&ctx, &q, &v)?;
            out.push(k1_cdf(x, AnglePair::new(phi, psi.max(1e-12))?, d)?);
        }
        Ok(out)
    })?;
    let mut u: Vec<f64> = parts.into_iter().flatten().collect();
    let ks = ks_statistic(&mut u, |x| x.clamp(0.0, 1.0));
    Ok(CheckRow::new("k1_pit", d, n, ks, 0.0, ks < tol).angles(Some(phi), None, None))
}

/// Draws a unit vector whose reference angle within `S` (unrotated frame)
/// lies within [`PSI_HALF_WIDTH`] of `psi`; returns it with the measured
/// angle. Candidates start from a random virtual codeword.
fn vector_with_reference_angle(cfg: &ProjectionConfig, psi: f64, rng: &mut Rng) -> Result<(Vec<f64>, f64)> {
    let levels = cfg.layout().levels();
    for _ in 0..10_000 {
        let codes: Vec<u32> = (0..levels).map(|_| rng.random_range(0..cfg.m() as u32)).collect();
        let c = cfg.virtual_codeword(&codes)?;
        let x = at_angle(&c, &random_orthogonal(&c, rng), psi);
        let measured = config::assign_unchecked(&x, cfg).a_s.clamp(-1.0, 1.0).acos();
        if (measured - psi).abs() <= PSI_HALF_WIDTH {
            return Ok((x, measured));
        }
    }
    Err(Error::invalid(format!("reference angle {psi} is unreachable for this configuration")))
}

/// Comparison probability `P[K¹(q,v₁) > K¹(q,v₂) | ψ]` with
/// `∠(q,v₁) = φ₁ < ∠(q,v₂) = φ₂`, per bucket of measured `ψ`.
///
/// Rows `k1_compare` pass when the probability exceeds 1/2 (for `ψ < π/2`);
/// rows `k1_compare_monotone` pass when consecutive grid points do not
/// increase by more than two combined standard errors.
pub fn comparison_monotonicity(
    cfg: &ProjectionConfig,
    phi1: f64,
    phi2: f64,
    psi_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Report> {
    if phi1.cos() <= phi2.cos() {
        return Err(Error::invalid("comparison needs cos φ₁ > cos φ₂"));
    }
    let d = cfg.layout().dim();
    let ctx = KernelContext::new(cfg.clone(), Rotation::sample(d, seed, linalg::RotationMode::Exact)?)?;
    let mut rep = Report::default();
    let mut probs = Vec::new();
    for (gi, &psi) in psi_grid.iter().enumerate() {
        let s = mix_seed(seed, gi as u64);
        let wins: Vec<usize> = chunked(trials, 8192, |c, len| {
            let mut r = chunk_rng(s, c);
            let mut w = 0;
            for _ in 0..len {
                // Build q in the codeword frame, then map it through H.
                let (x, _) = vector_with_reference_angle(cfg, psi, &mut r)?;
                let q = ctx.rotation().apply(&x)?;
                let v1 = at_angle(&q, &random_orthogonal(&q, &mut r), phi1);
                let v2 = at_angle(&q, &random_orthogonal(&q, &mut r), phi2);
                w += (k1(&ctx, &q, &v1)? > k1(&ctx, &q, &v2)?) as usize;
            }
            Ok(w)
        })?;
        let p = wins.iter().sum::<usize>() as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        probs.push((p, se));
        let pass = psi >= FRAC_PI_2 || p > 0.5;
        rep.rows.push(CheckRow::new("k1_compare", d, trials, p, 0.5, pass).angles(Some(phi1), Some(psi), Some(phi2)));
    }
    for i in 1..probs.len() {
        let ((p0, s0), (p1, s1)) = (probs[i - 1], probs[i]);
        let slack = 2.0 * (s0 * s0 + s1 * s1).sqrt();
        rep.rows.push(
            CheckRow::new("k1_compare_monotone", d, trials, p1 - p0, 0.0, p1 <= p0 + slack)
                .angles(Some(phi1), Some(psi_grid[i]), Some(phi2)),
        );
    }
    Ok(rep)
}

/// Thresholding law of `K²`: empirical `P[K² ≥ cos θ]` per `(φ, ψ-bucket)`.
///
/// For `cos φ < cos θ` the closed form is the mean of [`p2_bound`] over the
/// measured `ψ` of each draw and the row passes when the empirical rate is at
/// most `closed_form + upper_slack`; for `cos φ ≥ cos θ` the closed form is
/// 1/2 and the row passes when the rate is at least `lower_floor`.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity(
    cfg: &ProjectionConfig,
    theta: f64,
    phis: &[f64],
    psi_grid: &[f64],
    trials: usize,
    seed: u64,
    upper_slack: f64,
    lower_floor: f64,
) -> Result<Report> {
    let d = cfg.layout().dim();
    let ctx = KernelContext::new(cfg.clone(), Rotation::sample(d, seed, linalg::RotationMode::Exact)?)?;
    let cos_t = theta.cos();
    let mut rep = Report::default();
    let mut cell = 0u64;
    for &phi in phis {
        let far = phi.cos() < cos_t;
        for &psi in psi_grid {
            if psi + PSI_HALF_WIDTH >= FRAC_PI_2 {
                return Err(Error::invalid("sensitivity buckets must lie below π/2"));
            }
            let s = mix_seed(seed, cell);
            cell += 1;
            let parts: Vec<(usize, f64)> = chunked(trials, 8192, |c, len| {
                let mut r = chunk_rng(s, c);
                let (mut hits, mut bound) = (0usize, 0.0);
                for _ in 0..len {
                    // x = Hv sits near a codeword; q is uniform at angle φ around v.
                    let (x, measured) = vector_with_reference_angle(cfg, psi, &mut r)?;
                    let v = ctx.rotation().apply_transpose(&x)?;
                    let q = at_angle(&v, &random_orthogonal(&v, &mut r), phi);
                    hits += (k2(&ctx, &q, &v)? >= cos_t) as usize;
                    if far {
                        bound += p2_bound(phi, theta, measured, d)?;
                    }
                }
                Ok((hits, bound))
            })?;
            let p = parts.iter().map(|x| x.0).sum::<usize>() as f64 / trials as f64;
            let row = if far {
                let closed = parts.iter().map(|x| x.1).sum::<f64>() / trials as f64;
                CheckRow::new("k2_threshold", d, trials, p, closed, p <= closed + upper_slack)
            } else {
                CheckRow::new("k2_threshold", d, trials, p, 0.5, p >= lower_floor)
            };
            rep.rows.push(row.angles(Some(phi), Some(psi), Some(theta)));
        }
    }
    Ok(rep)
}

/// Largest `φ` with a nonzero [`p2_bound`] (where `t′` crosses zero).
pub fn p2_support_end(theta: f64, psi: f64) -> f64 {
    let t = |phi: f64| 0.5 - (theta.cos() - phi.cos()) / (2.0 * phi.sin() * psi.tan());
    if t(PI - 1e-12) >= 0.0 {
        return PI;
    }
    let (mut lo, mut hi) = (theta, PI - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Strict decrease of [`p2_bound`] in `φ` on an evenly spaced interior grid
/// of `(θ, φ_end)`, where `φ_end` is the end of its nonzero range; past that
/// point the bound is identically zero.
pub fn p2_grid(d: usize, theta: f64, psi: f64, points: usize) -> Result<CheckRow> {
    let end = p2_support_end(theta, psi);
    let vals: Vec<f64> = (1..=points)
        .map(|i| p2_bound(theta + (end - theta) * i as f64 / (points + 1) as f64, theta, psi, d))
        .collect::<Result<_>>()?;
    let worst = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let tail_zero = p2_bound((end + PI) / 2.0, theta, psi, d)? == 0.0 || end >= PI;
    Ok(CheckRow::new("p2_decreasing", d, points, worst, 0.0, worst < 0.0 && tail_zero).angles(None, Some(psi), Some(theta)))
}

/// `J̃(S_ran, N)` against the closed-form expectation for each `L`.
pub fn jstat(m: usize, d: usize, levels: &[usize], n: usize, seed: u64, tol: f64) -> Result<Report> {
    let quad = QuadratureSpec::default();
    let mut rep = Report::default();
    for &l in levels {
        let layout = SubspaceLayout::new(d, l)?;
        let bound = refangle_lower_bound(m, &layout, &quad)?;
        let cfg = build_ran(m, layout, mix_seed(seed, l as u64))?;
        let j = config::estimate_j(&cfg, n, mix_seed(seed, 1000 + l as u64))?;
        let mut row = CheckRow::new("jstat", d, n, j.mean, bound, false);
        row.pass = row.abs_err <= tol;
        row.theta = Some(l as f64);
        rep.rows.push(row);
    }
    Ok(rep)
}

/// Result of the paired `S_sym` vs `S_ran` comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dominance {
    pub gap: f64,
    pub std_err: f64,
    pub n: usize,
    pub configurations: usize,
}

const DOMINANCE_CHUNK: usize = 4096;

fn max_scores(x: ArrayView2<f32>, codewords: &Array2<f32>, antipodal: bool) -> Vec<f64> {
    let s = x.dot(&codewords.t());
    s.rows()
        .into_iter()
        .map(|r| {
            let it = r.iter().copied();
            let best = if antipodal { it.map(f32::abs).fold(0.0, f32::max) } else { it.fold(f32::NEG_INFINITY, f32::max) };
            best as f64
        })
        .collect()
}

fn to_f32_rows(values: &[f64], cols: usize) -> Array2<f32> {
    Array2::from_shape_vec((values.len() / cols, cols), values.iter().map(|&v| v as f32).collect()).expect("shape")
}

/// Ensemble comparison of `J(S_sym)` and `J(S_ran)` at `L = 1`.
///
/// Each chunk of 4096 uniform samples is scored against a fresh `S_sym` and
/// a fresh `S_ran`; both see the same samples. The gap is the mean paired
/// difference and its standard error comes from the spread of chunk means,
/// so configuration-to-configuration variation is accounted for.
pub fn dominance(m: usize, d: usize, n: usize, seed: u64) -> Result<Dominance> {
    let layout = SubspaceLayout::new(d, 1)?;
    let means = chunked(n, DOMINANCE_CHUNK, |c, len| {
        let sym = build_sym(m, layout, mix_seed(seed, 2 * c as u64))?;
        let ran = build_ran(m, layout, mix_seed(seed, 2 * c as u64 + 1))?;
        // Antipodal pairs are adjacent, so even rows give one of each pair.
        let half: Vec<f64> = sym.codewords().chunks_exact(d).step_by(2).flatten().copied().collect();
        let sym_rows = to_f32_rows(&half, d);
        let ran_rows = to_f32_rows(ran.codewords(), d);
        let mut r = chunk_rng(seed, c);
        let mut xs = vec![0.0; len * d];
        for row in xs.chunks_exact_mut(d) {
            linalg::fill_uniform_sphere(row, &mut r);
        }
        let x = to_f32_rows(&xs, d);
        let a = max_scores(x.view(), &sym_rows, true);
        let b = max_scores(x.view(), &ran_rows, false);
        Ok((a.iter().zip(&b).map(|(p, q)| p - q).sum::<f64>() / len as f64, len))
    })?;
    let weighted: f64 = means.iter().map(|(g, l)| g * *l as f64).sum();
    let gap = weighted / n as f64;
    let k = means.len();
    let std_err = if k > 1 {
        let mu = means.iter().map(|x| x.0).sum::<f64>() / k as f64;
        let var = means.iter().map(|x| (x.0 - mu).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(Dominance { gap, std_err, n, configurations: k })
}

/// Row form of [`dominance`]: `closed_form` carries the required margin
/// `z·SE`, and the row passes when the gap exceeds it.
pub fn dominance_row(m: usize, d: usize, n: usize, seed: u64, z: f64) -> Result<CheckRow> {
    let r = dominance(m, d, n, seed)?;
    let need = z * r.std_err;
    Ok(CheckRow::new("dominance", d, n, r.gap, need, r.gap > need))
}

/// `J̃(S_pol) − J̃(S_sym)` on a shared sample; passes when above `-slack`.
pub fn pol_vs_sym(m: usize, sub_dim: usize, n: usize, seed: u64, slack: f64, params: PolParams) -> Result<CheckRow> {
    let layout = SubspaceLayout::new(sub_dim, 1)?;
    let pol = build_pol(m, layout, params, mix_seed(seed, 1))?;
    let sym = build_sym(m, layout, mix_seed(seed, 2))?;
    let jp = config::estimate_j(&pol, n, mix_seed(seed, 3))?;
    let js = config::estimate_j(&sym, n, mix_seed(seed, 3))?;
    let diff = jp.mean - js.mean;
    Ok(CheckRow::new("pol_vs_sym", sub_dim, n, diff, -slack, diff >= -slack))
}

/// Spherical-triangle identity `cos β = cosφ cosψ + sinφ sinψ cosα` on
/// random triples, where `α` is the angle between the components of `v` and
/// `u` orthogonal to `q`.
pub fn simplex_identity(d: usize, n: usize, seed: u64, tol: f64) -> Result<CheckRow> {
    let mut r = rng::rng_for(seed, streams::VERIFY);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let q = linalg::sample_uniform_sphere(d, &mut r);
        let v = linalg::sample_uniform_sphere(d, &mut r);
        let u = linalg::sample_uniform_sphere(d, &mut r);
        let (cphi, cpsi) = (dot(&q, &v), dot(&q, &u));
        let vp: Vec<f64> = v.iter().zip(&q).map(|(a, b)| a - cphi * b).collect();
        let up: Vec<f64> = u.iter().zip(&q).map(|(a, b)| a - cpsi * b).collect();
        let cos_alpha = dot(&vp, &up) / (linalg::norm(&vp) * linalg::norm(&up));
        let (sphi, spsi) = ((1.0 - cphi * cphi).sqrt(), (1.0 - cpsi * cpsi).sqrt());
        let rhs = cphi * cpsi + sphi * spsi * cos_alpha;
        worst = worst.max((dot(&v, &u) - rhs).abs());
    }
    Ok(CheckRow::new("simplex", d, n, worst, 0.0, worst <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn ks_statistic_small() {
        let mut s = vec![0.5];
        assert!((ks_statistic(&mut s, |x| x) - 0.5).abs() < 1e-15);
        let mut s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&mut s, |x| x) <= 0.0005 + 1e-12);
    }

    #[test]
    fn orthogonal_helper() {
        let mut r = rng::rng_for(1, 1);
        let q = linalg::sample_uniform_sphere(9, &mut r);
        let w = random_orthogonal(&q, &mut r);
        assert!(dot(&q, &w).abs() < 1e-12);
        assert!((linalg::norm(&w) - 1.0).abs() < 1e-12);
        let v = at_angle(&q, &w, 0.7);
        assert!((dot(&q, &v) - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn cdf_small_run_passes() {
        let row = cdf_cross_section(16, FRAC_PI_3, FRAC_PI_6, 20_000, 2, 0.02).unwrap();
        assert!(row.pass, "{row:?}");
    }

    #[test]
    fn pit_small_run_passes() {
        let cfg = build_sym(16, SubspaceLayout::new(16, 2).unwrap(), 3).unwrap();
        let row = k1_pit(&cfg, FRAC_PI_3, 20_000, 4, 0.02).unwrap();
        assert!(row.pass, "{row:?}");
    }

    #[test]
    fn p2_grid_passes() {
        let row = p2_grid(16, FRAC_PI_4, FRAC_PI_6, 50).unwrap();
        assert!(row.pass, "{row:?}");
        assert!(p2_support_end(FRAC_PI_4, FRAC_PI_6) < FRAC_PI_2);
    }

    #[test]
    fn simplex_passes() {
        assert!(simplex_identity(7, 10_000, 5, 1e-9).unwrap().pass);
    }

    #[test]
    fn reference_angle_construction() {
        let cfg = build_sym(8, SubspaceLayout::new(16, 1).unwrap(), 6).unwrap();
        let mut r = rng::rng_for(7, 7);
        for psi in [0.3, 1.0, 1.3] {
            let (x, m) = vector_with_reference_angle(&cfg, psi, &mut r).unwrap();
            assert!((linalg::norm(&x) - 1.0).abs() < 1e-12);
            assert!((m - psi).abs() <= PSI_HALF_WIDTH);
        }
    }

    #[test]
    fn csv_header() {
        let mut rep = Report::default();
        rep.rows.push(CheckRow::new("x", 3, 1, 0.5, 0.5, true));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("test,d,phi,psi,theta,n,empirical,closed_form,abs_err,pass\n"));
        assert!(text.contains("x,3,,,,1,0.5,0.5,0.0,true"));
    }

    #[test]
    fn chunking_is_thread_count_independent() {
        let f = || dominance(16, 8, 10_000, 9).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f);
        let two = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap().install(f);
        assert_eq!(one, two);
    }
}
