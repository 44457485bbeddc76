//! Reference-angle kernels and their closed-form conditional laws.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::{assign_unchecked, ProjectionConfig, ReferenceAssignment, UNIT_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, Rotation};
use crate::special::{reg_inc_beta, BetaParams};

/// A configuration paired with the rotation used to project.
///
/// For single-level configurations the rotated codewords `HS` can be
/// materialised once; otherwise the argmax over `HS` is evaluated as the
/// per-level argmax of `Hᵀq` over `S`, which is the same thing.
#[derive(Clone, Debug)]
pub struct KernelContext {
    config: ProjectionConfig,
    rotation: Rotation,
    rotated: Option<Vec<f64>>,
}

/// Objective angle `phi` and reference angle `psi`, both in `(0, π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnglePair {
    phi: f64,
    psi: f64,
}

impl AnglePair {
    pub fn new(phi: f64, psi: f64) -> Result<Self> {
        for (name, v) in [("phi", phi), ("psi", psi)] {
            if !(v > 0.0 && v < PI) {
                return Err(Error::Domain(format!("{name} = {v} outside (0, π)")));
            }
        }
        Ok(Self { phi, psi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }
}

fn check_unit(x: &[f64]) -> Result<()> {
    let n = linalg::norm(x);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnitNorm(n));
    }
    Ok(())
}

impl KernelContext {
    pub fn new(config: ProjectionConfig, rotation: Rotation) -> Result<Self> {
        Error::check_dim(config.layout().dim(), rotation.dim())?;
        Ok(Self { config, rotation, rotated: None })
    }

    /// Same as [`KernelContext::new`] but stores `H·u` for every codeword
    /// (single-level configurations only).
    pub fn with_rotated_codewords(config: ProjectionConfig, rotation: Rotation) -> Result<Self> {
        let mut ctx = Self::new(config, rotation)?;
        if ctx.config.layout().levels() != 1 {
            return Err(Error::invalid("precomputed rotated codewords need L = 1"));
        }
        let d = ctx.config.layout().dim();
        let mut rotated = Vec::with_capacity(ctx.config.codewords().len());
        for u in ctx.config.codewords().chunks_exact(d) {
            rotated.extend(ctx.rotation.apply(u)?);
        }
        ctx.rotated = Some(rotated);
        Ok(ctx)
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.config
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn rotated_codewords(&self) -> Option<&[f64]> {
        self.rotated.as_deref()
    }

    /// Reference vector of `q` within `HS`, returned as a vector of `R^d`
    /// together with its codes and reference cosine.
    pub fn rotated_reference(&self, q: &[f64]) -> Result<(Vec<f64>, ReferenceAssignment)> {
        Error::check_dim(self.config.layout().dim(), q.len())?;
        if let Some(rot) = &self.rotated {
            let d = q.len();
            let mut best = (0usize, f64::NEG_INFINITY);
            for (j, u) in rot.chunks_exact(d).enumerate() {
                let s = dot(u, q);
                if s > best.1 {
                    best = (j, s);
                }
            }
            let u = rot[best.0 * d..(best.0 + 1) * d].to_vec();
            return Ok((u, ReferenceAssignment { codes: vec![best.0 as u32], a_s: best.1 }));
        }
        let hq = self.rotation.apply_transpose(q)?;
        let a = assign_unchecked(&hq, &self.config);
        let u = self.rotation.apply(&self.config.virtual_codeword(&a.codes)?)?;
        Ok((u, a))
    }

    /// Reference cosine `A_{HS}(q)` of a unit query.
    pub fn query_reference_cosine(&self, q: &[f64]) -> Result<f64> {
        check_unit(q)?;
        Ok(self.rotated_reference(q)?.1.a_s)
    }
}

/// `K¹_S(q, v) = ⟨v, Z_{HS}(q)⟩`.
pub fn k1(ctx: &KernelContext, q: &[f64], v: &[f64]) -> Result<f64> {
    check_unit(q)?;
    check_unit(v)?;
    Error::check_dim(q.len(), v.len())?;
    let (u, _) = ctx.rotated_reference(q)?;
    Ok(dot(v, &u))
}

/// `‖v‖ · K¹_S(q, v/‖v‖)`, i.e. `⟨v, Z_{HS}(q)⟩` for arbitrary `v`.
pub fn k1_mips(ctx: &KernelContext, q: &[f64], v: &[f64]) -> Result<f64> {
    check_unit(q)?;
    Error::check_dim(q.len(), v.len())?;
    if linalg::norm(v) == 0.0 {
        return Ok(0.0);
    }
    let (u, _) = ctx.rotated_reference(q)?;
    Ok(dot(v, &u))
}

/// `K²_S(q, v) = ⟨Hq, Z_S(Hv)⟩ / A_S(Hv)`.
pub fn k2(ctx: &KernelContext, q: &[f64], v: &[f64]) -> Result<f64> {
    check_unit(q)?;
    check_unit(v)?;
    Error::check_dim(q.len(), v.len())?;
    let hv = ctx.rotation.apply(v)?;
    let hq = ctx.rotation.apply(q)?;
    let a = assign_unchecked(&hv, &ctx.config);
    if a.a_s <= 0.0 {
        return Err(Error::Contract(format!("A_S(Hv) = {} is not positive", a.a_s)));
    }
    let z = ctx.config.virtual_codeword(&a.codes)?;
    Ok(dot(&hq, &z) / a.a_s)
}

fn cross_section_params(d: usize) -> Result<BetaParams> {
    if d < 3 {
        return Err(Error::Domain(format!("dimension d = {d} must be at least 3")));
    }
    BetaParams::symmetric((d as f64 - 2.0) / 2.0)
}

/// Conditional CDF of `K¹` given objective angle `φ` and reference angle
/// `ψ`: `I_t((d−2)/2, (d−2)/2)` with
/// `t = 1/2 + (x − cosφ cosψ) / (2 sinφ sinψ)`, clamped to the support
/// `[cos(φ+ψ), cos(φ−ψ)]`.
pub fn k1_cdf(x: f64, angles: AnglePair, d: usize) -> Result<f64> {
    let p = cross_section_params(d)?;
    let (phi, psi) = (angles.phi, angles.psi);
    if x.is_nan() {
        return Err(Error::Domain("x is NaN".into()));
    }
    if x <= (phi + psi).cos() {
        return Ok(0.0);
    }
    if x >= (phi - psi).cos() {
        return Ok(1.0);
    }
    let t = 0.5 + (x - phi.cos() * psi.cos()) / (2.0 * phi.sin() * psi.sin());
    reg_inc_beta(t.clamp(0.0, 1.0), p)
}

/// Upper bound on `P[K² ≥ cos θ]` for an objective angle `φ` with
/// `cos φ < cos θ`: `I_{t′}((d−2)/2, (d−2)/2)` with
/// `t′ = 1/2 − (cosθ − cosφ) / (2 sinφ tanψ)`; zero when `t′ < 0`.
pub fn p2_bound(phi: f64, theta: f64, psi: f64, d: usize) -> Result<f64> {
    let p = cross_section_params(d)?;
    if !(psi > 0.0 && psi < FRAC_PI_2) {
        return Err(Error::Domain(format!("psi = {psi} outside (0, π/2)")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::Domain(format!("phi = {phi} outside (0, π)")));
    }
    if phi.cos() >= theta.cos() {
        return Err(Error::Domain(format!("p2_bound needs cos φ < cos θ (φ = {phi}, θ = {theta})")));
    }
    let t = 0.5 - (theta.cos() - phi.cos()) / (2.0 * phi.sin() * psi.tan());
    if t < 0.0 {
        return Ok(0.0);
    }
    if t > 1.0 {
        log::warn!("p2_bound: t′ = {t} > 1 clamped to 1");
        return Ok(1.0);
    }
    reg_inc_beta(t, p)
}
