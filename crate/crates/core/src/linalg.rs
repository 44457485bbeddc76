//! Vectors, subspace layouts, random rotations and uniform sphere sampling.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    // Eight partial sums keep the loop vectorisable.
    let mut acc = [0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (xa, xb) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += xa[k] * xb[k];
        }
    }
    let mut s: f32 = acc.iter().sum();
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn l2_sq_f32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (xa, xb) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            let t = xa[k] - xb[k];
            acc[k] += t * t;
        }
    }
    let mut s: f32 = acc.iter().sum();
    for i in chunks * 8..a.len() {
        let t = a[i] - b[i];
        s += t * t;
    }
    s
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `x / ‖x‖`, or an error for the zero vector.
pub fn normalized(x: &[f64]) -> Result<Vec<f64>> {
    let n = norm(x);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("cannot normalise a zero or non-finite vector"));
    }
    Ok(x.iter().map(|v| v / n).collect())
}

pub fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("vector has non-finite entries"))
    }
}

/// Partition of `R^d` into `levels` consecutive blocks of `sub_dim` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceLayout {
    dim: usize,
    levels: usize,
    sub_dim: usize,
}

impl SubspaceLayout {
    /// Layout with `d′ = dim / levels ≥ 3`.
    pub fn new(dim: usize, levels: usize) -> Result<Self> {
        let layout = Self::new_relaxed(dim, levels)?;
        if layout.sub_dim < 3 {
            return Err(Error::invalid(format!(
                "sub-dimension {} < 3 (dim {dim}, levels {levels}); use new_relaxed",
                layout.sub_dim
            )));
        }
        Ok(layout)
    }

    /// Like [`SubspaceLayout::new`] but accepts `d′ ∈ {1, 2}` with a warning.
    /// The closed-form laws for the reference angle do not apply there.
    pub fn new_relaxed(dim: usize, levels: usize) -> Result<Self> {
        if dim == 0 || levels == 0 {
            return Err(Error::invalid("dim and levels must be positive"));
        }
        if !dim.is_multiple_of(levels) {
            return Err(Error::invalid(format!("dim {dim} is not divisible by levels {levels}")));
        }
        let sub_dim = dim / levels;
        if sub_dim < 3 {
            log::warn!("sub-dimension {sub_dim} < 3: reference-angle bounds do not hold");
        }
        Ok(Self { dim, levels, sub_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }
}

/// Splits `x` into its `L` per-level sub-vectors.
pub fn split_levels<'a, T>(x: &'a [T], layout: &SubspaceLayout) -> Result<Vec<&'a [T]>> {
    Error::check_dim(layout.dim, x.len())?;
    Ok(x.chunks_exact(layout.sub_dim).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationMode {
    /// Haar-distributed element of SO(d), stored as a dense matrix.
    Exact,
    /// Three rounds of random signs followed by a normalised Walsh–Hadamard
    /// transform on the next power of two.
    Structured,
    Identity,
}

impl RotationMode {
    pub fn code(self) -> u8 {
        match self {
            RotationMode::Exact => 0,
            RotationMode::Structured => 1,
            RotationMode::Identity => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(RotationMode::Exact),
            1 => Ok(RotationMode::Structured),
            2 => Ok(RotationMode::Identity),
            c => Err(Error::format(format!("unknown rotation mode {c}"))),
        }
    }
}

const STRUCTURED_ROUNDS: usize = 3;

/// An orthogonal transform of `R^d`, reproducible from `(mode, dim, seed)`.
///
/// Structured mode on a non-power-of-two `dim` zero-pads, transforms and
/// truncates; the truncation makes it only approximately orthogonal, so the
/// statistical suites use [`RotationMode::Exact`].
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    mode: RotationMode,
    dim: usize,
    seed: u64,
    /// Row-major `dim × dim`, exact mode only.
    matrix: Vec<f64>,
    /// `STRUCTURED_ROUNDS × padded` signs, structured mode only.
    signs: Vec<f64>,
    padded: usize,
    /// Whether `(mode, dim, seed)` regenerates this rotation.
    seeded: bool,
}

impl Rotation {
    pub fn sample(dim: usize, seed: u64, mode: RotationMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("rotation dimension must be positive"));
        }
        let mut rng = rng::rng_for(seed, rng::streams::ROTATION);
        let mut rot = Rotation { mode, dim, seed, matrix: Vec::new(), signs: Vec::new(), padded: dim, seeded: true };
        match mode {
            RotationMode::Exact => rot.matrix = haar_matrix(dim, &mut rng),
            RotationMode::Structured => {
                rot.padded = dim.next_power_of_two();
                rot.signs = (0..STRUCTURED_ROUNDS * rot.padded)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
            }
            RotationMode::Identity => {}
        }
        Ok(rot)
    }

    pub fn identity(dim: usize) -> Self {
        Rotation {
            mode: RotationMode::Identity,
            dim,
            seed: 0,
            matrix: Vec::new(),
            signs: Vec::new(),
            padded: dim,
            seeded: true,
        }
    }

    /// Haar rotation sampled from a caller-owned generator (used for the
    /// many small per-block rotations of cross-polytope configurations).
    pub fn sample_with(dim: usize, rng: &mut Rng) -> Self {
        Rotation {
            mode: RotationMode::Exact,
            dim,
            seed: 0,
            matrix: haar_matrix(dim, rng),
            signs: Vec::new(),
            padded: dim,
            seeded: false,
        }
    }

    pub fn mode(&self) -> RotationMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// False for rotations drawn from a caller-owned generator, which cannot
    /// be stored as a `(mode, seed)` descriptor.
    pub fn is_seeded(&self) -> bool {
        self.seeded
    }

    /// Row-major dense matrix (exact mode), empty otherwise.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        Error::check_dim(self.dim, x.len())?;
        Error::check_dim(self.dim, out.len())?;
        match self.mode {
            RotationMode::Identity => out.copy_from_slice(x),
            RotationMode::Exact => {
                for (row, o) in self.matrix.chunks_exact(self.dim).zip(out.iter_mut()) {
                    *o = dot(row, x);
                }
            }
            RotationMode::Structured => {
                let mut buf = vec![0.0; self.padded];
                buf[..self.dim].copy_from_slice(x);
                for round in 0..STRUCTURED_ROUNDS {
                    let signs = &self.signs[round * self.padded..(round + 1) * self.padded];
                    buf.iter_mut().zip(signs).for_each(|(v, s)| *v *= s);
                    fwht_normalized(&mut buf);
                }
                out.copy_from_slice(&buf[..self.dim]);
            }
        }
        Ok(())
    }

    /// Applies `Hᵀ = H⁻¹`.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim, x.len())?;
        match self.mode {
            RotationMode::Identity => Ok(x.to_vec()),
            RotationMode::Exact => {
                let mut out = vec![0.0; self.dim];
                for (row, xi) in self.matrix.chunks_exact(self.dim).zip(x) {
                    out.iter_mut().zip(row).for_each(|(o, r)| *o += r * xi);
                }
                Ok(out)
            }
            RotationMode::Structured => {
                let mut buf = vec![0.0; self.padded];
                buf[..self.dim].copy_from_slice(x);
                for round in (0..STRUCTURED_ROUNDS).rev() {
                    fwht_normalized(&mut buf);
                    let signs = &self.signs[round * self.padded..(round + 1) * self.padded];
                    buf.iter_mut().zip(signs).for_each(|(v, s)| *v *= s);
                }
                buf.truncate(self.dim);
                Ok(buf)
            }
        }
    }

    /// Applies the rotation to every row of a row-major `n × dim` f32 matrix.
    pub fn apply_rows_f32(&self, rows: &[f32]) -> Result<Vec<f32>> {
        if !rows.len().is_multiple_of(self.dim) {
            return Err(Error::invalid("row buffer length is not a multiple of dim"));
        }
        let mut out = vec![0f32; rows.len()];
        let mut x = vec![0.0; self.dim];
        let mut y = vec![0.0; self.dim];
        for (src, dst) in rows.chunks_exact(self.dim).zip(out.chunks_exact_mut(self.dim)) {
            x.iter_mut().zip(src).for_each(|(a, b)| *a = *b as f64);
            self.apply_into(&x, &mut y)?;
            dst.iter_mut().zip(&y).for_each(|(a, b)| *a = *b as f32);
        }
        Ok(out)
    }
}

/// Gaussian matrix → QR → sign-correct by `diag(R)` → fix determinant to +1.
fn haar_matrix(dim: usize, rng: &mut Rng) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            out.push(q[(i, j)]);
        }
    }
    out
}

/// In-place Walsh–Hadamard transform scaled by `1/√n`, so it is orthogonal.
pub fn fwht_normalized(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let mut half = 1;
    while half < values.len() {
        for block in values.chunks_exact_mut(half * 2) {
            let (left, right) = block.split_at_mut(half);
            for (x, y) in left.iter_mut().zip(right.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
    let scale = 1.0 / (values.len() as f64).sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
}

/// Uniform point on `S^{dim-1}` by normalising a standard Gaussian vector.
pub fn sample_uniform_sphere(dim: usize, rng: &mut Rng) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    fill_uniform_sphere(&mut v, rng);
    v
}

pub fn fill_uniform_sphere(out: &mut [f64], rng: &mut Rng) {
    loop {
        let mut s = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            s += *x * *x;
        }
        if s > 1e-300 {
            let inv = 1.0 / s.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_vec(dim: usize, rng: &mut Rng) -> Vec<f64> {
        (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn so1_is_plus_one() {
        for seed in 0..20 {
            let h = Rotation::sample(1, seed, RotationMode::Exact).unwrap();
            assert_eq!(h.matrix(), &[1.0]);
        }
    }

    #[test]
    fn exact_rotation_preserves_norm_and_has_unit_determinant() {
        let h = Rotation::sample(8, 11, RotationMode::Exact).unwrap();
        let mut rng = rng::rng_for(1, 99);
        for _ in 0..100 {
            let x = random_vec(8, &mut rng);
            let ratio = norm(&h.apply(&x).unwrap()) / norm(&x);
            assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-10);
        }
        let m = DMatrix::from_row_slice(8, 8, h.matrix());
        assert_abs_diff_eq!(m.determinant(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn exact_apply_to_basis_vector_gives_column() {
        let h = Rotation::sample(3, 5, RotationMode::Exact).unwrap();
        let y = h.apply(&[1.0, 0.0, 0.0]).unwrap();
        let m = h.matrix();
        for i in 0..3 {
            assert_eq!(y[i], m[i * 3]);
        }
    }

    #[test]
    fn structured_operator_is_orthogonal_on_powers_of_two() {
        let d = 64;
        let h = Rotation::sample(d, 3, RotationMode::Structured).unwrap();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                h.apply(&e).unwrap()
            })
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let g = dot(&cols[i], &cols[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        assert!(worst <= 1e-6, "max deviation {worst}");
    }

    #[test]
    fn transpose_inverts() {
        let mut rng = rng::rng_for(2, 2);
        for (mode, d) in [(RotationMode::Exact, 10), (RotationMode::Structured, 32), (RotationMode::Identity, 5)] {
            let h = Rotation::sample(d, 4, mode).unwrap();
            let x = random_vec(d, &mut rng);
            let back = h.apply(&h.apply_transpose(&x).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn identity_is_identity() {
        let h = Rotation::identity(4);
        assert_eq!(h.apply(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn inner_products_preserved_all_modes() {
        let mut rng = rng::rng_for(9, 9);
        for mode in [RotationMode::Exact, RotationMode::Structured] {
            let h = Rotation::sample(16, 21, mode).unwrap();
            for _ in 0..1000 {
                let x = random_vec(16, &mut rng);
                let y = random_vec(16, &mut rng);
                let (hx, hy) = (h.apply(&x).unwrap(), h.apply(&y).unwrap());
                assert!((norm(&hx) - norm(&x)).abs() / norm(&x) <= 1e-6);
                assert!((dot(&hx, &hy) - dot(&x, &y)).abs() <= 1e-6 * norm(&x) * norm(&y));
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = Rotation::sample(4, 0, RotationMode::Exact).unwrap();
        assert!(matches!(h.apply(&[1.0; 3]), Err(Error::DimensionMismatch { expected: 4, actual: 3 })));
        assert!(Rotation::sample(0, 0, RotationMode::Exact).is_err());
    }

    #[test]
    fn same_seed_same_rotation() {
        let a = Rotation::sample(12, 77, RotationMode::Exact).unwrap();
        let b = Rotation::sample(12, 77, RotationMode::Exact).unwrap();
        assert_eq!(a, b);
        let c = Rotation::sample(12, 78, RotationMode::Exact).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_levels_examples() {
        let layout = SubspaceLayout::new_relaxed(4, 2).unwrap();
        let parts = split_levels(&[1.0, 2.0, 3.0, 4.0], &layout).unwrap();
        assert_eq!(parts, vec![&[1.0, 2.0][..], &[3.0, 4.0][..]]);
        let single = SubspaceLayout::new(6, 1).unwrap();
        assert_eq!(split_levels(&[1.0; 6], &single).unwrap().len(), 1);
        assert!(split_levels(&[1.0; 5], &single).is_err());
    }

    #[test]
    fn layout_rules() {
        assert!(SubspaceLayout::new(10, 3).is_err());
        assert!(SubspaceLayout::new(8, 4).is_err());
        assert!(SubspaceLayout::new_relaxed(8, 4).is_ok());
        assert_eq!(SubspaceLayout::new(128, 8).unwrap().sub_dim(), 16);
    }

    #[test]
    fn sphere_dim_one_is_fair_coin() {
        let mut rng = rng::rng_for(5, 5);
        let n = 100_000;
        let plus = (0..n).filter(|_| sample_uniform_sphere(1, &mut rng)[0] > 0.0).count() as f64;
        let expected = n as f64 / 2.0;
        let chi2 = 2.0 * (plus - expected).powi(2) / expected;
        // χ²(1) 0.999 quantile.
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn sphere_dim_three_is_centred() {
        let mut rng = rng::rng_for(6, 6);
        let n = 1_000_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let v = sample_uniform_sphere(3, &mut rng);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
            for k in 0..3 {
                mean[k] += v[k];
            }
        }
        for m in mean {
            assert!((m / n as f64).abs() <= 0.01);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn split_concat_and_pythagoras(levels in 1usize..6, sub in 1usize..6, seed in any::<u64>()) {
                let layout = SubspaceLayout::new_relaxed(levels * sub, levels).unwrap();
                let mut rng = rng::rng_for(seed, 0);
                let x = random_vec(levels * sub, &mut rng);
                let parts = split_levels(&x, &layout).unwrap();
                let joined: Vec<f64> = parts.iter().flat_map(|p| p.iter().copied()).collect();
                prop_assert_eq!(&joined, &x);
                let sq: f64 = parts.iter().map(|p| dot(p, p)).sum();
                prop_assert!((sq - dot(&x, &x)).abs() <= 1e-12 * dot(&x, &x).max(1.0));
            }

            #[test]
            fn rotation_norm_preservation(d in 1usize..40, seed in any::<u64>()) {
                let h = Rotation::sample(d, seed, RotationMode::Exact).unwrap();
                let mut rng = rng::rng_for(seed, 1);
                let x = random_vec(d, &mut rng);
                let hx = h.apply(&x).unwrap();
                prop_assert!((norm(&hx) - norm(&x)).abs() <= 1e-6 * norm(&x));
            }
        }
    }
}
