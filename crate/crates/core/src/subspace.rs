//! Structured low-dimensional subspaces and the norm-preserving maps from
//! coefficient vectors to full-resolution perturbations.
//!
//! Two families are provided:
//!
//! * Fourier: coefficients address the low-frequency bins of an isometric 2D
//!   DFT (cosine basis = real components, sine basis = imaginary components,
//!   or both). The spectrum is completed with Hermitian symmetry so the
//!   inverse transform is exactly real, and mirrored bins are scaled by
//!   1/sqrt(2) so the map preserves the l2 norm exactly.
//! * Low-resolution pixels: a k x k grid per channel upsampled by nearest
//!   neighbor, which preserves the l-infinity norm exactly.
//!
//! Because the maps are isometries for their respective norms, projecting a
//! coefficient vector onto an epsilon-ball guarantees the mapped image-space
//! perturbation satisfies the same bound.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex;

use crate::math::{cos, l2_norm, linf_norm, sin, SQRT_2, TAU};

type C64 = Complex<f64>;

/// Which basis spans the low-dimensional search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BasisMode {
    /// Cosine and sine Fourier bases together (two coefficients per bin).
    FftFull,
    /// Cosine (real-component) Fourier basis only.
    FftCos,
    /// Sine (imaginary-component) Fourier basis only.
    FftSin,
    /// Low-resolution pixel grid, nearest-neighbor upsampled.
    Nni,
}

impl BasisMode {
    /// True for the Fourier modes.
    pub fn is_fft(self) -> bool {
        !matches!(self, BasisMode::Nni)
    }
}

/// Norm in which the perturbation is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormKind {
    L2,
    Linf,
}

/// Describes a subspace: basis mode, per-axis low dimension `k`, channel
/// count and the full image side `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubspaceSpec {
    pub mode: BasisMode,
    /// Side length of the low-dimensional grid (`k`).
    pub low_side: usize,
    pub channels: usize,
    /// Side length of the full image (`d`).
    pub full_side: usize,
}

/// Invalid-argument errors from the subspace maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubspaceError {
    /// Coefficient vector length does not match the spec.
    CoeffLength { expected: usize, got: usize },
    /// The spec itself is unusable (zero sizes, k out of range).
    InvalidSpec(&'static str),
}

impl fmt::Display for SubspaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubspaceError::CoeffLength { expected, got } => {
                write!(f, "coefficient vector has length {got}, expected {expected}")
            }
            SubspaceError::InvalidSpec(msg) => write!(f, "invalid subspace spec: {msg}"),
        }
    }
}

impl core::error::Error for SubspaceError {}

impl SubspaceSpec {
    pub fn new(
        mode: BasisMode,
        low_side: usize,
        channels: usize,
        full_side: usize,
    ) -> Result<Self, SubspaceError> {
        let spec = Self { mode, low_side, channels, full_side };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SubspaceError> {
        if self.channels == 0 || self.full_side == 0 {
            return Err(SubspaceError::InvalidSpec("zero channels or image side"));
        }
        if self.low_side == 0 || self.low_side > self.full_side {
            return Err(SubspaceError::InvalidSpec("low side must satisfy 1 <= k <= d"));
        }
        // The Fourier embedding needs the masked square and its Hermitian
        // mirror to be disjoint, which holds exactly when 2k <= d.
        if self.mode.is_fft() && 2 * self.low_side > self.full_side {
            return Err(SubspaceError::InvalidSpec("fft modes require 2k <= d"));
        }
        Ok(())
    }

    /// Length of the coefficient vector this spec expects.
    pub fn coeff_len(&self) -> usize {
        let per_channel = self.low_side * self.low_side;
        match self.mode {
            BasisMode::FftFull => 2 * per_channel * self.channels,
            _ => per_channel * self.channels,
        }
    }

    /// Frequency bins a Fourier embedding may touch, including Hermitian
    /// mirrors. Empty for [`BasisMode::Nni`].
    pub fn active_bins(&self) -> Vec<(usize, usize)> {
        let d = self.full_side;
        let k = self.low_side;
        let mut bins = Vec::new();
        let mut push = |u: usize, v: usize| {
            bins.push((u, v));
            bins.push((mirror(u, d), mirror(v, d)));
        };
        match self.mode {
            BasisMode::Nni => {}
            BasisMode::FftCos => cos_bins(k).for_each(|(u, v)| push(u, v)),
            BasisMode::FftSin => sin_bins(k).for_each(|(u, v)| push(u, v)),
            BasisMode::FftFull => {
                cos_bins(k).for_each(|(u, v)| push(u, v));
                sin_bins(k).for_each(|(u, v)| push(u, v));
            }
        }
        bins.sort_unstable();
        bins.dedup();
        bins
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<(), SubspaceError> {
        if coeffs.len() != self.coeff_len() {
            return Err(SubspaceError::CoeffLength {
                expected: self.coeff_len(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }
}

/// A full-resolution perturbation (unconstrained sign; not clamped to the
/// image box) together with the norm it was built under.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Perturbation {
    pub channels: usize,
    pub side: usize,
    /// Row-major, channel-major values, length `channels * side * side`.
    pub data: Vec<f64>,
    pub norm_kind: NormKind,
}

impl Perturbation {
    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.data)
    }

    pub fn linf_norm(&self) -> f64 {
        linf_norm(&self.data)
    }
}

/// `(d - i) mod d`: the Hermitian mirror index.
fn mirror(i: usize, d: usize) -> usize {
    if i == 0 {
        0
    } else {
        d - i
    }
}

/// Bins addressed by the cosine grid: the top-left k x k square.
fn cos_bins(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |u| (0..k).map(move |v| (u, v)))
}

/// Bins addressed by the sine grid. Sine basis vectors vanish at frequency
/// zero, so the grid is offset to `[1, k] x [1, k]`.
fn sin_bins(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=k).flat_map(move |u| (1..=k).map(move |v| (u, v)))
}

/// Isometric 2D discrete Fourier transform of a `d x d` real array
/// (row-major): `X[u,v] = (1/d) sum x[i,j] exp(-2i*pi*(ui+vj)/d)`, so the
/// l2 norm of the output equals the l2 norm of the input.
pub fn dft2(x: &[f64], d: usize) -> Vec<C64> {
    debug_assert_eq!(x.len(), d * d);
    let buf: Vec<C64> = x.iter().map(|&r| C64::new(r, 0.0)).collect();
    transform2(buf, d, -1.0)
}

/// Inverse of [`dft2`]; also isometric. The result of a round trip is the
/// original array (up to floating-point error).
pub fn idft2(spectrum: &[C64], d: usize) -> Vec<C64> {
    debug_assert_eq!(spectrum.len(), d * d);
    transform2(spectrum.to_vec(), d, 1.0)
}

/// Row-column 2D transform with the combined 1/d scale. `sign` is -1 for the
/// forward transform, +1 for the inverse.
fn transform2(mut buf: Vec<C64>, d: usize, sign: f64) -> Vec<C64> {
    // Twiddle table indexed by (freq * pos) mod d keeps the angle small so
    // cos/sin stay accurate for large products.
    let tw: Vec<C64> = (0..d)
        .map(|m| {
            let ang = sign * TAU * m as f64 / d as f64;
            C64::new(cos(ang), sin(ang))
        })
        .collect();
    let mut tmp = vec![C64::new(0.0, 0.0); d];
    // rows
    for row in buf.chunks_exact_mut(d) {
        for (u, out) in tmp.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &val) in row.iter().enumerate() {
                acc += val * tw[(u * j) % d];
            }
            *out = acc;
        }
        row.copy_from_slice(&tmp);
    }
    // columns
    for col in 0..d {
        for (u, out) in tmp.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                acc += buf[j * d + col] * tw[(u * j) % d];
            }
            *out = acc;
        }
        for (u, &val) in tmp.iter().enumerate() {
            buf[u * d + col] = val;
        }
    }
    let scale = 1.0 / d as f64;
    for z in &mut buf {
        *z *= scale;
    }
    buf
}

/// Place one real coefficient on a frequency bin and its Hermitian mirror.
/// `imag_axis` selects the sine (imaginary) direction. Self-conjugate bins
/// hold a single real degree of freedom, so the coefficient lands on the
/// real axis there with unit scale; mirrored pairs are scaled by 1/sqrt(2).
/// Either way the bin contributes exactly `a^2` to the spectrum energy.
fn place_coeff(spectrum: &mut [C64], d: usize, u: usize, v: usize, a: f64, imag_axis: bool) {
    let (mu, mv) = (mirror(u, d), mirror(v, d));
    if (mu, mv) == (u, v) {
        spectrum[u * d + v].re += a;
        return;
    }
    let s = a / SQRT_2;
    if imag_axis {
        spectrum[u * d + v].im += s;
        spectrum[mu * d + mv].im -= s;
    } else {
        spectrum[u * d + v].re += s;
        spectrum[mu * d + mv].re += s;
    }
}

/// Map a coefficient vector to a full-resolution perturbation through the
/// low-frequency Fourier basis. Linear and l2-isometric: the output norm
/// equals the coefficient norm.
///
/// Coefficient layout is channel-major; within a channel the k x k cosine
/// grid is row-major, and for [`BasisMode::FftFull`] the k x k sine grid
/// follows the cosine grid.
pub fn fft_embed(coeffs: &[f64], spec: &SubspaceSpec) -> Result<Perturbation, SubspaceError> {
    spec.validate()?;
    if !spec.mode.is_fft() {
        return Err(SubspaceError::InvalidSpec("fft_embed requires an fft mode"));
    }
    spec.check_len(coeffs)?;
    let d = spec.full_side;
    let k = spec.low_side;
    let per_channel = spec.coeff_len() / spec.channels;
    let mut data = Vec::with_capacity(spec.channels * d * d);
    for ch in 0..spec.channels {
        let c = &coeffs[ch * per_channel..(ch + 1) * per_channel];
        let mut spectrum = vec![C64::new(0.0, 0.0); d * d];
        match spec.mode {
            BasisMode::FftCos => {
                for (i, (u, v)) in cos_bins(k).enumerate() {
                    place_coeff(&mut spectrum, d, u, v, c[i], false);
                }
            }
            BasisMode::FftSin => {
                for (i, (u, v)) in sin_bins(k).enumerate() {
                    place_coeff(&mut spectrum, d, u, v, c[i], true);
                }
            }
            BasisMode::FftFull => {
                let half = k * k;
                for (i, (u, v)) in cos_bins(k).enumerate() {
                    place_coeff(&mut spectrum, d, u, v, c[i], false);
                }
                for (i, (u, v)) in sin_bins(k).enumerate() {
                    place_coeff(&mut spectrum, d, u, v, c[half + i], true);
                }
            }
            BasisMode::Nni => unreachable!(),
        }
        // Hermitian symmetry makes the inverse transform real; the imaginary
        // residue is pure rounding noise.
        data.extend(idft2(&spectrum, d).iter().map(|z| z.re));
    }
    Ok(Perturbation { channels: spec.channels, side: d, data, norm_kind: NormKind::L2 })
}

/// Upsample a per-channel k x k grid to d x d by nearest neighbor: output
/// pixel (i, j) copies low-res pixel (floor(i*k/d), floor(j*k/d)). Preserves
/// the l-infinity norm exactly.
pub fn nni_upsample(coeffs: &[f64], spec: &SubspaceSpec) -> Result<Perturbation, SubspaceError> {
    spec.validate()?;
    if spec.mode != BasisMode::Nni {
        return Err(SubspaceError::InvalidSpec("nni_upsample requires mode Nni"));
    }
    spec.check_len(coeffs)?;
    let d = spec.full_side;
    let k = spec.low_side;
    let mut data = Vec::with_capacity(spec.channels * d * d);
    for ch in 0..spec.channels {
        let grid = &coeffs[ch * k * k..(ch + 1) * k * k];
        for i in 0..d {
            let src_i = i * k / d;
            for j in 0..d {
                let src_j = j * k / d;
                data.push(grid[src_i * k + src_j]);
            }
        }
    }
    Ok(Perturbation { channels: spec.channels, side: d, data, norm_kind: NormKind::Linf })
}

/// Project onto the l-infinity ball of radius `eps` centered at the origin
/// (elementwise clamp). Idempotent and non-expansive.
pub fn project_linf(coeffs: &[f64], eps: f64) -> Vec<f64> {
    assert!(eps > 0.0, "projection radius must be positive");
    coeffs.iter().map(|&c| c.clamp(-eps, eps)).collect()
}

/// Project onto the l2 ball of radius `eps` centered at the origin:
/// identity inside the ball, radial scaling outside.
pub fn project_l2(coeffs: &[f64], eps: f64) -> Vec<f64> {
    assert!(eps > 0.0, "projection radius must be positive");
    let norm = l2_norm(coeffs);
    if norm <= eps {
        coeffs.to_vec()
    } else {
        let scale = eps / norm;
        coeffs.iter().map(|&c| c * scale).collect()
    }
}

/// Project with the norm chosen by `kind`.
pub fn project(coeffs: &[f64], eps: f64, kind: NormKind) -> Vec<f64> {
    match kind {
        NormKind::L2 => project_l2(coeffs, eps),
        NormKind::Linf => project_linf(coeffs, eps),
    }
}

/// Map coefficients through the spec's basis and stamp the perturbation with
/// the attack norm.
pub fn map_to_image(
    coeffs: &[f64],
    spec: &SubspaceSpec,
    norm: NormKind,
) -> Result<Perturbation, SubspaceError> {
    let mut p = if spec.mode.is_fft() {
        fft_embed(coeffs, spec)?
    } else {
        nni_upsample(coeffs, spec)?
    };
    p.norm_kind = norm;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Naive O(d^4) double-sum DFT, the independent oracle for `dft2`.
    fn naive_dft2(x: &[f64], d: usize, sign: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for u in 0..d {
            for v in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        let ang = sign * TAU * (u * i + v * j) as f64 / d as f64;
                        acc += x[i * d + j] * C64::new(cos(ang), sin(ang));
                    }
                }
                out[u * d + v] = acc / d as f64;
            }
        }
        out
    }

    fn naive_idft2(spectrum: &[C64], d: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for u in 0..d {
                    for v in 0..d {
                        let ang = TAU * (u * i + v * j) as f64 / d as f64;
                        acc += spectrum[u * d + v] * C64::new(cos(ang), sin(ang));
                    }
                }
                out[i * d + j] = acc / d as f64;
            }
        }
        out
    }

    fn random_array(rng: &mut StdRng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn complex_l2(v: &[C64]) -> f64 {
        crate::math::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    #[test]
    fn dft2_constant_image_concentrates_at_dc() {
        let c = 0.7;
        let x = vec![c; 4];
        let spectrum = dft2(&x, 2);
        assert!((spectrum[0].re - 2.0 * c).abs() < 1e-12);
        assert!(spectrum[0].im.abs() < 1e-12);
        for z in &spectrum[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn dft2_matches_naive_double_sum() {
        let mut rng = StdRng::seed_from_u64(11);
        let d = 8;
        let x = random_array(&mut rng, d * d);
        let fast = dft2(&x, d);
        let slow = naive_dft2(&x, d, -1.0);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn idft2_matches_naive_and_inverts_single_bin() {
        let d = 6;
        let mut spectrum = vec![C64::new(0.0, 0.0); d * d];
        spectrum[0] = C64::new(d as f64, 0.0);
        let x = idft2(&spectrum, d);
        for z in &x {
            assert!((z.re - 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
        let mut rng = StdRng::seed_from_u64(12);
        let s: Vec<C64> = (0..d * d)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = idft2(&s, d);
        let slow = naive_idft2(&s, d);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dft2_is_isometric_and_invertible() {
        let mut rng = StdRng::seed_from_u64(13);
        for &d in &[2usize, 3, 5, 16, 64] {
            for _ in 0..(if d > 16 { 3 } else { 20 }) {
                let x = random_array(&mut rng, d * d);
                let spectrum = dft2(&x, d);
                let nx = crate::math::l2_norm(&x);
                assert!((complex_l2(&spectrum) - nx).abs() <= 1e-9 * nx.max(1.0));
                let back = idft2(&spectrum, d);
                for (a, &b) in back.iter().zip(x.iter()) {
                    assert!((a.re - b).abs() < 1e-9 && a.im.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fft_embed_zero_gives_zero() {
        let spec = SubspaceSpec::new(BasisMode::FftFull, 3, 2, 10).unwrap();
        let p = fft_embed(&vec![0.0; spec.coeff_len()], &spec).unwrap();
        assert!(p.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fft_embed_dc_coefficient_gives_constant_channel() {
        let spec = SubspaceSpec::new(BasisMode::FftCos, 2, 1, 8).unwrap();
        let mut coeffs = vec![0.0; spec.coeff_len()];
        coeffs[0] = -1.3;
        let p = fft_embed(&coeffs, &spec).unwrap();
        let expect = -1.3 / 8.0;
        for &v in &p.data {
            assert!((v - expect).abs() < 1e-12);
        }
        assert!((p.l2_norm() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn fft_embed_is_isometric_for_all_modes() {
        let mut rng = StdRng::seed_from_u64(14);
        for mode in [BasisMode::FftCos, BasisMode::FftSin, BasisMode::FftFull] {
            for &(k, d) in &[(4usize, 16usize), (1, 2), (5, 11), (8, 16), (3, 7)] {
                let spec = SubspaceSpec::new(mode, k, 3, d).unwrap();
                for _ in 0..10 {
                    let c = random_array(&mut rng, spec.coeff_len());
                    let p = fft_embed(&c, &spec).unwrap();
                    let nc = crate::math::l2_norm(&c);
                    assert!(
                        (p.l2_norm() - nc).abs() <= 1e-9 * nc.max(1.0),
                        "mode {mode:?} k={k} d={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn fft_embed_is_linear() {
        let mut rng = StdRng::seed_from_u64(15);
        let spec = SubspaceSpec::new(BasisMode::FftFull, 4, 1, 12).unwrap();
        let c1 = random_array(&mut rng, spec.coeff_len());
        let c2 = random_array(&mut rng, spec.coeff_len());
        let (a, b) = (0.7, -2.1);
        let combo: Vec<f64> = c1.iter().zip(c2.iter()).map(|(x, y)| a * x + b * y).collect();
        let p_combo = fft_embed(&combo, &spec).unwrap();
        let p1 = fft_embed(&c1, &spec).unwrap();
        let p2 = fft_embed(&c2, &spec).unwrap();
        for i in 0..p_combo.data.len() {
            let lin = a * p1.data[i] + b * p2.data[i];
            assert!((p_combo.data[i] - lin).abs() < 1e-9);
        }
    }

    #[test]
    fn fft_embed_suppresses_high_frequencies() {
        let mut rng = StdRng::seed_from_u64(16);
        for mode in [BasisMode::FftCos, BasisMode::FftSin, BasisMode::FftFull] {
            let spec = SubspaceSpec::new(mode, 3, 1, 12).unwrap();
            let c = random_array(&mut rng, spec.coeff_len());
            let p = fft_embed(&c, &spec).unwrap();
            let spectrum = dft2(&p.data, 12);
            let allowed = spec.active_bins();
            for u in 0..12 {
                for v in 0..12 {
                    if !allowed.contains(&(u, v)) {
                        assert!(
                            spectrum[u * 12 + v].norm() <= 1e-9,
                            "mode {mode:?} leaked energy at ({u},{v})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fft_embed_rejects_bad_lengths_and_specs() {
        let spec = SubspaceSpec::new(BasisMode::FftCos, 4, 3, 16).unwrap();
        let err = fft_embed(&[0.0; 5], &spec).unwrap_err();
        assert_eq!(err, SubspaceError::CoeffLength { expected: 48, got: 5 });
        assert!(SubspaceSpec::new(BasisMode::FftCos, 9, 3, 16).is_err());
        assert!(SubspaceSpec::new(BasisMode::Nni, 9, 3, 16).is_ok());
    }

    #[test]
    fn nni_upsample_replicates_blocks() {
        let spec = SubspaceSpec::new(BasisMode::Nni, 2, 1, 4).unwrap();
        let p = nni_upsample(&[1.0, 2.0, 3.0, 4.0], &spec).unwrap();
        #[rustfmt::skip]
        let expected = [
            1.0, 1.0, 2.0, 2.0,
            1.0, 1.0, 2.0, 2.0,
            3.0, 3.0, 4.0, 4.0,
            3.0, 3.0, 4.0, 4.0,
        ];
        assert_eq!(p.data, expected);
    }

    #[test]
    fn nni_upsample_identity_when_k_equals_d() {
        let mut rng = StdRng::seed_from_u64(17);
        let spec = SubspaceSpec::new(BasisMode::Nni, 5, 2, 5).unwrap();
        let c = random_array(&mut rng, spec.coeff_len());
        let p = nni_upsample(&c, &spec).unwrap();
        assert_eq!(p.data, c);
    }

    #[test]
    fn nni_upsample_non_divisible_preserves_values_and_max() {
        let mut rng = StdRng::seed_from_u64(18);
        let spec = SubspaceSpec::new(BasisMode::Nni, 5, 1, 17).unwrap();
        let c = random_array(&mut rng, spec.coeff_len());
        let p = nni_upsample(&c, &spec).unwrap();
        for (idx, &v) in p.data.iter().enumerate() {
            let (i, j) = (idx / 17, idx % 17);
            assert_eq!(v, c[(i * 5 / 17) * 5 + (j * 5 / 17)]);
            assert!(c.contains(&v));
        }
        assert_eq!(p.linf_norm(), linf_norm(&c));
    }

    #[test]
    fn project_linf_clamps() {
        assert_eq!(project_linf(&[0.2, -0.1], 0.05), vec![0.05, -0.05]);
        let inside = [0.01, -0.02, 0.0];
        assert_eq!(project_linf(&inside, 0.05), inside.to_vec());
    }

    #[test]
    fn project_l2_scales_radially() {
        let p = project_l2(&[3.0, 4.0], 2.5);
        assert!((p[0] - 1.5).abs() < 1e-12 && (p[1] - 2.0).abs() < 1e-12);
        assert_eq!(project_l2(&[3.0, 4.0], 10.0), vec![3.0, 4.0]);
    }

    /// Independent l2-projection oracle: bisection on the KKT multiplier of
    /// min ||y - x||^2 subject to ||y|| <= eps, where y = x / (1 + mu).
    fn l2_projection_oracle(x: &[f64], eps: f64) -> Vec<f64> {
        let norm = crate::math::l2_norm(x);
        if norm <= eps {
            return x.to_vec();
        }
        let (mut lo, mut hi) = (0.0f64, norm / eps);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm / (1.0 + mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        x.iter().map(|&v| v / (1.0 + mu)).collect()
    }

    #[test]
    fn projections_are_idempotent_feasible_and_match_oracle() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..100 {
            let dim = rng.random_range(1..20);
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let eps = rng.random_range(0.01..2.0);

            let p2 = project_l2(&x, eps);
            assert!(l2_norm(&p2) <= eps + 1e-12);
            for (a, b) in project_l2(&p2, eps).iter().zip(p2.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            let oracle = l2_projection_oracle(&x, eps);
            for (a, b) in p2.iter().zip(oracle.iter()) {
                assert!((a - b).abs() < 1e-9);
            }

            let pi = project_linf(&x, eps);
            assert!(linf_norm(&pi) <= eps);
            assert_eq!(project_linf(&pi, eps), pi);
        }
    }

    #[test]
    fn norm_chain_holds_through_the_maps() {
        let mut rng = StdRng::seed_from_u64(20);
        // l2 chain through the Fourier embedding
        let spec = SubspaceSpec::new(BasisMode::FftFull, 3, 3, 14).unwrap();
        for _ in 0..20 {
            let c = random_array(&mut rng, spec.coeff_len());
            let eps = 0.8;
            let proj = project_l2(&c, eps);
            let p = fft_embed(&proj, &spec).unwrap();
            assert!((p.l2_norm() - l2_norm(&proj)).abs() <= 1e-9 * eps.max(1.0));
            assert!(p.l2_norm() <= eps + 1e-9);
        }
        // linf chain through nearest-neighbor upsampling
        let spec = SubspaceSpec::new(BasisMode::Nni, 4, 3, 15).unwrap();
        for _ in 0..20 {
            let c = random_array(&mut rng, spec.coeff_len());
            let eps = 0.05;
            let proj = project_linf(&c, eps);
            let p = nni_upsample(&proj, &spec).unwrap();
            assert_eq!(p.linf_norm(), linf_norm(&proj));
            assert!(p.linf_norm() <= eps);
        }
    }

}
