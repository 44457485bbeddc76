//! Regularised incomplete Beta function, Gamma ratios, the density of a
//! sphere cosine, adaptive quadrature and the closed-form expected reference
//! cosine of purely random configurations.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::SubspaceLayout;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    a: f64,
    b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("Beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// `Beta(α, α)`.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// `I_t(a, b)`, evaluated by the modified Lentz continued fraction with the
/// usual switch to `1 − I_{1−t}(b, a)` when `t > (a+1)/(a+b+2)`.
pub fn reg_inc_beta(t: f64, p: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("reg_inc_beta: t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = (p.a, p.b);
    let value = if t > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_cf_term(b, a, 1.0 - t)?
    } else {
        beta_cf_term(a, b, t)?
    };
    Ok(value.clamp(0.0, 1.0))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn beta_cf_term(a: f64, b: f64, x: f64) -> Result<f64> {
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() / a;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            return Ok(front * h);
        }
    }
    Err(Error::Domain(format!("incomplete Beta continued fraction did not converge (a={a}, b={b}, x={x})")))
}

/// `E[⟨v, r_L(v)⟩]` for uniform `v ∈ S^{d−1}`, where `r_L` normalises each of
/// the `L` blocks of `v` to norm `1/√L`:
/// `√L · Γ((d+L)/2L) Γ(d/2) / (Γ(d/2L) Γ((d+1)/2))`.
pub fn log_gamma_ratio(d: usize, levels: usize) -> Result<f64> {
    if d == 0 || levels == 0 || !d.is_multiple_of(levels) {
        return Err(Error::invalid(format!("d = {d} must be a positive multiple of L = {levels}")));
    }
    let (d, l) = (d as f64, levels as f64);
    let log = ln_gamma_diff(d / (2.0 * l), 0.5) - ln_gamma_diff(d / 2.0, 0.5);
    Ok(l.sqrt() * log.exp())
}

/// `lnΓ(x + h) − lnΓ(x)` for `x > 0`, `0 ≤ h ≤ 1`, without the cancellation
/// of subtracting two large log-gammas.
fn ln_gamma_diff(x: f64, h: f64) -> f64 {
    // Shift into the Stirling range.
    let mut shift = 0.0;
    let mut x = x;
    while x < 12.0 {
        shift -= (h / x).ln_1p();
        x += 1.0;
    }
    let y = x + h;
    // Stirling: (x−½)·ln(1 + h/x) + h·ln(x + h) − h plus the Bernoulli tail.
    let main = (x - 0.5) * (h / x).ln_1p() + h * y.ln() - h;
    let tail = |z: f64| {
        let z2 = z * z;
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z
    };
    shift + main + tail(y) - tail(x)
}

fn sphere_cosine_norm(sub_dim: usize) -> f64 {
    let n = sub_dim as f64;
    (ln_gamma(n / 2.0) - ln_gamma((n - 1.0) / 2.0)).exp() / PI.sqrt()
}

/// Density of `⟨u, v⟩` for fixed `v` and uniform `u` on `S^{d′−1}`:
/// `c_{d′} (1 − y²)^{(d′−3)/2}`.
pub fn sphere_cosine_pdf(y: f64, sub_dim: usize) -> Result<f64> {
    if sub_dim < 3 {
        return Err(Error::Domain(format!("sphere_cosine_pdf needs d′ ≥ 3, got {sub_dim}")));
    }
    if !(-1.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("sphere_cosine_pdf: y = {y} outside [-1, 1]")));
    }
    let exponent = (sub_dim as f64 - 3.0) / 2.0;
    Ok(sphere_cosine_norm(sub_dim) * (1.0 - y * y).powf(exponent))
}

/// CDF of the same law: `(1 + Z)/2 ∼ Beta((d′−1)/2, (d′−1)/2)`.
pub fn sphere_cosine_cdf(y: f64, sub_dim: usize) -> Result<f64> {
    if sub_dim < 2 {
        return Err(Error::Domain(format!("sphere_cosine_cdf needs d′ ≥ 2, got {sub_dim}")));
    }
    if !(-1.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("sphere_cosine_cdf: y = {y} outside [-1, 1]")));
    }
    let alpha = (sub_dim as f64 - 1.0) / 2.0;
    reg_inc_beta((1.0 + y) / 2.0, BetaParams::symmetric(alpha)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureMethod {
    AdaptiveSimpson,
    GaussLegendre,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    method: QuadratureMethod,
    rel_tol: f64,
    max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { method: QuadratureMethod::AdaptiveSimpson, rel_tol: 1e-9, max_subdivisions: 20_000 }
    }
}

impl QuadratureSpec {
    pub fn new(method: QuadratureMethod, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
            return Err(Error::invalid(format!("rel_tol {rel_tol} outside (0, 1e-3]")));
        }
        if max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be positive"));
        }
        Ok(Self { method, rel_tol, max_subdivisions })
    }

    pub fn method(&self) -> QuadratureMethod {
        self.method
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Result<Self> {
        Self::new(self.method, rel_tol, self.max_subdivisions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    abs: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

// 10-point Gauss–Legendre nodes/weights on [-1, 1] (positive half).
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let (mut s, mut s_abs) = (0.0, 0.0);
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        let (f1, f2) = (f(mid - half * x), f(mid + half * x));
        s += w * (f1 + f2);
        s_abs += w * (f1.abs() + f2.abs());
    }
    (s * half, s_abs * half)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let m = (a + b) / 2.0;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), (b - a) / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs()))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, method: QuadratureMethod) -> Panel {
    let rule = match method {
        QuadratureMethod::AdaptiveSimpson => simpson::<F>,
        QuadratureMethod::GaussLegendre => gauss_legendre::<F>,
    };
    let m = (a + b) / 2.0;
    let (coarse, _) = rule(f, a, b);
    let (l, la) = rule(f, a, m);
    let (r, ra) = rule(f, m, b);
    let fine = l + r;
    match method {
        // Richardson step for Simpson's rule.
        QuadratureMethod::AdaptiveSimpson => {
            Panel { a, b, value: fine + (fine - coarse) / 15.0, abs: la + ra, error: (fine - coarse).abs() / 15.0 }
        }
        QuadratureMethod::GaussLegendre => Panel { a, b, value: fine, abs: la + ra, error: (fine - coarse).abs() },
    }
}

/// Globally adaptive quadrature: the panel with the largest error estimate
/// is bisected until the summed error is at most
/// `rel_tol · max(|∫f|, ∫|f|, 1e-300)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    // Start from a uniform partition so narrow peaks are not missed.
    const INITIAL: usize = 16;
    let width = (b - a) / INITIAL as f64;
    let mut heap: BinaryHeap<Panel> = (0..INITIAL)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == INITIAL { b } else { lo + width };
            panel(&f, lo, hi, spec.method)
        })
        .collect();
    let mut subdivisions = INITIAL;
    loop {
        let (mut value, mut abs, mut error) = (0.0, 0.0, 0.0);
        for p in heap.iter() {
            value += p.value;
            abs += p.abs;
            error += p.error;
        }
        if !value.is_finite() {
            return Err(Error::Quadrature("integrand produced a non-finite value".into()));
        }
        let target = spec.rel_tol * value.abs().max(abs).max(1e-300);
        if error <= target {
            return Ok(Quadrature { value, error, subdivisions });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "error estimate {error:.3e} above target {target:.3e} after {subdivisions} panels"
            )));
        }
        let worst = heap.pop().expect("heap never empty");
        let m = (worst.a + worst.b) / 2.0;
        heap.push(panel(&f, worst.a, m, spec.method));
        heap.push(panel(&f, m, worst.b, spec.method));
        subdivisions += 1;
    }
}

/// Expected reference cosine of the purely random configuration with `m`
/// codewords per level:
/// `E[T(d, L)] · m ∫_{-1}^{1} y F(y)^{m−1} f(y) dy`, with `f`, `F` the
/// density and CDF of a cosine on `S^{d′−1}`. It is also a strict lower
/// bound for the antipodal configuration.
///
/// The integral is taken in the variable `y = sin x`, which removes the
/// `(1 − y²)^{(d′−3)/2}` endpoint behaviour for every `d′ ≥ 3`;
/// `F^{m−1}` is formed in log space.
pub fn refangle_lower_bound(m: usize, layout: &SubspaceLayout, quad: &QuadratureSpec) -> Result<f64> {
    Ok(refangle_lower_bound_detailed(m, layout, quad)?.value)
}

pub fn refangle_lower_bound_detailed(m: usize, layout: &SubspaceLayout, quad: &QuadratureSpec) -> Result<Quadrature> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let sub_dim = layout.sub_dim();
    if sub_dim < 3 {
        return Err(Error::Domain(format!("refangle_lower_bound needs d′ ≥ 3, got {sub_dim}")));
    }
    let prefactor = log_gamma_ratio(layout.dim(), layout.levels())?;
    let c = sphere_cosine_norm(sub_dim);
    let alpha = (sub_dim as f64 - 1.0) / 2.0;
    let beta = BetaParams::symmetric(alpha)?;
    let power = (m - 1) as f64;
    let cos_exp = sub_dim as f64 - 2.0;

    let integrand = |x: f64| -> f64 {
        let y = x.sin();
        let cdf = reg_inc_beta(((1.0 + y) / 2.0).clamp(0.0, 1.0), beta).unwrap_or(f64::NAN);
        let cdf_pow = if power == 0.0 {
            1.0
        } else if cdf <= 0.0 {
            0.0
        } else {
            (power * cdf.ln()).exp()
        };
        y * cdf_pow * c * x.cos().max(0.0).powf(cos_exp)
    };
    let q = integrate(integrand, -FRAC_PI_2, FRAC_PI_2, quad)?;
    let scale = prefactor * m as f64;
    Ok(Quadrature { value: scale * q.value, error: scale * q.error, subdivisions: q.subdivisions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reg_inc_beta_examples() {
        for a in [0.5, 1.0, 3.5, 31.0] {
            let p = BetaParams::symmetric(a).unwrap();
            assert_abs_diff_eq!(reg_inc_beta(0.5, p).unwrap(), 0.5, epsilon = 1e-12);
            assert_eq!(reg_inc_beta(0.0, p).unwrap(), 0.0);
            assert_eq!(reg_inc_beta(1.0, p).unwrap(), 1.0);
        }
        let uniform = BetaParams::new(1.0, 1.0).unwrap();
        for t in [0.01, 0.2, 0.37, 0.8, 0.999] {
            assert_abs_diff_eq!(reg_inc_beta(t, uniform).unwrap(), t, epsilon = 1e-13);
        }
        let arcsine = BetaParams::symmetric(0.5).unwrap();
        assert_abs_diff_eq!(reg_inc_beta(0.25, arcsine).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn arcsine_value_confirmed_by_quadrature() {
        // ∫_0^{1/4} t^{-1/2}(1-t)^{-1/2} dt / π, with t = sin²θ.
        let q = integrate(|_theta: f64| 2.0 / PI, 0.0, PI / 6.0, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(q.value, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn reg_inc_beta_domain() {
        let p = BetaParams::symmetric(2.0).unwrap();
        assert!(matches!(reg_inc_beta(-0.1, p), Err(Error::Domain(_))));
        assert!(matches!(reg_inc_beta(1.1, p), Err(Error::Domain(_))));
        assert!(BetaParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn reg_inc_beta_matches_independent_implementation() {
        for &(a, b) in &[(0.5, 0.5), (1.0, 7.0), (7.0, 14.0), (31.0, 31.0), (63.5, 63.5), (2.5, 0.7)] {
            let p = BetaParams::new(a, b).unwrap();
            for i in 1..200 {
                let t = i as f64 / 200.0;
                let ours = reg_inc_beta(t, p).unwrap();
                let reference = statrs::function::beta::beta_reg(a, b, t);
                let scale = reference.min(1.0 - reference).max(1e-300);
                assert!(
                    (ours - reference).abs() <= 1e-10 * reference.max(1e-12) || (ours - reference).abs() <= 1e-10 * scale,
                    "a={a} b={b} t={t}: {ours} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn log_gamma_ratio_examples() {
        for d in [3, 16, 128, 4096] {
            assert_abs_diff_eq!(log_gamma_ratio(d, 1).unwrap(), 1.0, epsilon = 1e-12);
        }
        let v = log_gamma_ratio(128, 8).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(log_gamma_ratio(4096, 256).unwrap().is_finite());
        assert!(log_gamma_ratio(10, 3).is_err());
        for (d, l) in [(3usize, 3usize), (16, 4), (128, 8), (4096, 256), (64, 64)] {
            let (df, lf) = (d as f64, l as f64);
            let naive = lf.sqrt()
                * (ln_gamma((df + lf) / (2.0 * lf)) + ln_gamma(df / 2.0) - ln_gamma(df / (2.0 * lf)) - ln_gamma((df + 1.0) / 2.0)).exp();
            assert_abs_diff_eq!(log_gamma_ratio(d, l).unwrap(), naive, epsilon = 1e-10);
        }
    }

    #[test]
    fn pdf_examples() {
        for y in [-1.0, -0.3, 0.0, 0.9, 1.0] {
            assert_abs_diff_eq!(sphere_cosine_pdf(y, 3).unwrap(), 0.5, epsilon = 1e-14);
        }
        // c₄ = Γ(2)/(√π Γ(3/2)) = 1/(√π · √π/2) = 2/π.
        assert_abs_diff_eq!(sphere_cosine_pdf(0.0, 4).unwrap(), 2.0 / PI, epsilon = 1e-14);
        assert!(sphere_cosine_pdf(0.0, 2).is_err());
        assert!(sphere_cosine_pdf(1.5, 5).is_err());
    }

    #[test]
    fn pdf_normalised() {
        let spec = QuadratureSpec::default();
        for d in [3usize, 5, 16, 64] {
            let q = integrate(|x: f64| sphere_cosine_pdf(x.sin(), d).unwrap() * x.cos(), -FRAC_PI_2, FRAC_PI_2, &spec).unwrap();
            assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        let spec = QuadratureSpec::default();
        for d in [3usize, 4, 9, 40] {
            for y in [-0.8f64, -0.1, 0.0, 0.35, 0.95] {
                let q = integrate(|x: f64| sphere_cosine_pdf(x.sin(), d).unwrap() * x.cos(), -FRAC_PI_2, y.asin(), &spec)
                    .unwrap();
                assert_abs_diff_eq!(sphere_cosine_cdf(y, d).unwrap(), q.value, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn quadrature_methods_agree() {
        let gl = QuadratureSpec::new(QuadratureMethod::GaussLegendre, 1e-10, 10_000).unwrap();
        let si = QuadratureSpec::new(QuadratureMethod::AdaptiveSimpson, 1e-10, 10_000).unwrap();
        let f = |x: f64| (-x * x).exp() * (3.0 * x).cos();
        let a = integrate(f, -2.0, 3.0, &gl).unwrap().value;
        let b = integrate(f, -2.0, 3.0, &si).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert!(QuadratureSpec::new(QuadratureMethod::GaussLegendre, 0.1, 10).is_err());
    }

    #[test]
    fn quadrature_reports_non_convergence() {
        let spec = QuadratureSpec::new(QuadratureMethod::AdaptiveSimpson, 1e-12, 20).unwrap();
        let r = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &spec);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }

    #[test]
    fn bound_single_codeword_is_zero() {
        let layout = SubspaceLayout::new(128, 1).unwrap();
        let v = refangle_lower_bound(1, &layout, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    /// Integration by parts gives `E[max] = 1 − ∫ F(y)^m dy`, an independent
    /// route to the same quantity for L = 1.
    #[test]
    fn bound_matches_integration_by_parts() {
        let spec = QuadratureSpec::default();
        for (d, m) in [(3usize, 2usize), (16, 7), (128, 256), (20, 1000)] {
            let layout = SubspaceLayout::new(d, 1).unwrap();
            let direct = refangle_lower_bound(m, &layout, &spec).unwrap();
            let tail = integrate(|y: f64| sphere_cosine_cdf(y, d).unwrap().powi(m as i32), -1.0, 1.0, &spec).unwrap();
            assert_abs_diff_eq!(direct, 1.0 - tail.value, epsilon = 1e-7);
        }
    }

    #[test]
    fn bound_increases_with_levels_and_codewords() {
        let spec = QuadratureSpec::default();
        let vals: Vec<f64> = [1usize, 8, 16]
            .iter()
            .map(|&l| refangle_lower_bound(256, &SubspaceLayout::new(128, l).unwrap(), &spec).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2], "{vals:?}");
        let layout = SubspaceLayout::new(64, 4).unwrap();
        let mut prev = -1.0;
        for m in [1usize, 2, 3, 8, 32, 256, 1024] {
            let v = refangle_lower_bound(m, &layout, &spec).unwrap();
            assert!(v > -1.0 && v < 1.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn bound_tolerance_halving_is_stable() {
        let layout = SubspaceLayout::new(128, 8).unwrap();
        let coarse = refangle_lower_bound_detailed(256, &layout, &QuadratureSpec::default()).unwrap();
        let fine_spec = QuadratureSpec::default().with_rel_tol(0.5e-9).unwrap();
        let fine = refangle_lower_bound(256, &layout, &fine_spec).unwrap();
        assert!((coarse.value - fine).abs() <= coarse.error.max(1e-9 * coarse.value.abs()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn symmetric_beta_reflection(t in 0.0f64..=1.0, a in 0.2f64..80.0) {
                let p = BetaParams::symmetric(a).unwrap();
                let s = reg_inc_beta(t, p).unwrap() + reg_inc_beta(1.0 - t, p).unwrap();
                prop_assert!((s - 1.0).abs() <= 1e-10);
            }

            #[test]
            fn monotone_in_t(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0, a in 0.2f64..40.0, b in 0.2f64..40.0) {
                let p = BetaParams::new(a, b).unwrap();
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                prop_assert!(reg_inc_beta(lo, p).unwrap() <= reg_inc_beta(hi, p).unwrap() + 1e-15);
            }
        }
    }
}
