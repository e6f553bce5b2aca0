//! Measurements used to compare downsampling operators.
//!
//! * [`aliasing_measure`]: fraction of the output spectrum that cannot be
//!   explained as a zero-phase filtering of the input's surviving band.
//! * [`radial_power_spectrum`] and [`spectrum_kl`]: radial energy profiles
//!   and the KL divergence between them.
//! * [`ringing_overshoot`]: Gibbs overshoot above the bright level of a
//!   two-level test image.
//! * [`centroid`] and [`centroid_drift`]: intensity-weighted position and
//!   how far it moves under downsampling.

use std::time::Instant;

use num_complex::Complex64;

use crate::pooling::{downsample_with_state, PoolConfig, PoolMethod};
use crate::spectral::{self, FftOrderState};
use crate::tensor::RealPlane;
use crate::{Error, Result};

/// Added to every band before normalizing spectra into distributions.
pub const KL_EPSILON: f64 = 1e-12;

/// Misattributed-energy fraction of `y`, a `2^steps` downsampling of `x`.
///
/// The reference spectrum is the ideal low-pass of `x`: its DFT restricted
/// to the frequencies representable at the output size, Hermitian
/// symmetrized on the new Nyquist row and column, and scaled by
/// `4^-steps`. Each output bin is compared against the reference bin times
/// the best real gain in `[0, 4^steps]`; the squared residuals, summed and
/// divided by the output energy, give the measure. Any zero-phase filter
/// followed by an exact band cut (FLC, ASAP in either normalization) scores
/// zero; folded energy does not.
///
/// A silent output of a signal with in-band energy scores 1. Channels are
/// measured separately and averaged.
pub fn aliasing_measure(x: &RealPlane, y: &RealPlane, steps: u32) -> Result<f64> {
    let factor = 1usize
        .checked_shl(steps)
        .filter(|f| *f <= x.height().max(x.width()))
        .ok_or_else(|| Error::InvalidArgument(format!("{steps} steps is too many")))?;
    let (c, h, w) = x.shape();
    if h % factor != 0 || w % factor != 0 || y.shape() != (c, h / factor, w / factor) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} is not a {factor}x reduction of {c}x{h}x{w}",
            y.channels(),
            y.height(),
            y.width()
        )));
    }
    let max_gain = (factor * factor) as f64;
    let mut total = 0.0;
    for ch in 0..c {
        let big = spectral::dft2d_forward_real(&x.channel_plane(ch));
        let small = spectral::dft2d_forward_real(&y.channel_plane(ch));
        let reference = ideal_band(big.channel(0), h, w, h / factor, w / factor, max_gain);

        let mut residual = 0.0;
        let mut out_energy = 0.0;
        let mut ref_energy = 0.0;
        for (&got, &want) in small.channel(0).iter().zip(&reference) {
            out_energy += got.norm_sqr();
            ref_energy += want.norm_sqr();
            let denom = want.norm_sqr();
            let gain = if denom > 0.0 {
                ((got * want.conj()).re / denom).clamp(0.0, max_gain)
            } else {
                0.0
            };
            residual += (got - want * gain).norm_sqr();
        }
        total += if out_energy > 0.0 {
            (residual / out_energy).clamp(0.0, 1.0)
        } else if ref_energy > 0.0 {
            1.0
        } else {
            0.0
        };
    }
    Ok(total / c as f64)
}

/// Signed frequency of unshifted bin `k` on an `n`-point grid, in
/// `[-n/2, (n-1)/2]`.
fn signed_freq(k: usize, n: usize) -> i64 {
    if k < n - n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Band-limited reference spectrum on the `oh x ow` grid, unshifted.
fn ideal_band(spectrum: &[Complex64], h: usize, w: usize, oh: usize, ow: usize, scale_down: f64) -> Vec<Complex64> {
    let at = |fk: i64, fl: i64| {
        let i = fk.rem_euclid(h as i64) as usize;
        let j = fl.rem_euclid(w as i64) as usize;
        spectrum[i * w + j] / scale_down
    };
    let mut out = vec![Complex64::default(); oh * ow];
    for k in 0..oh {
        for l in 0..ow {
            let (fk, fl) = (signed_freq(k, oh), signed_freq(l, ow));
            // partner bin (-k, -l) on the output grid
            let (pk, pl) = (signed_freq((oh - k) % oh, oh), signed_freq((ow - l) % ow, ow));
            out[k * ow + l] = (at(fk, fl) + at(pk, pl).conj()) * 0.5;
        }
    }
    out
}

/// Radial profile of `|X|^2`, channels averaged.
///
/// Each coefficient of the shifted spectrum sits at integer radius
/// `r = round(dist((i, j), (H/2, W/2)))`; radii `0..=r_max` are spread
/// evenly over `nbins` bands, DC in band 0.
pub fn radial_power_spectrum(x: &RealPlane, nbins: usize) -> Result<Vec<f64>> {
    let (c, h, w) = x.shape();
    let spectrum = spectral::fftshift(&spectral::dft2d_forward_real(x))?;
    let mut power = vec![0.0; h * w];
    for ch in 0..c {
        for (p, z) in power.iter_mut().zip(spectrum.channel(ch)) {
            *p += z.norm_sqr() / c as f64;
        }
    }
    radial_bins(&power, h, w, nbins)
}

/// Radial profile of the part of `x`'s spectrum that survives `steps`
/// halvings, binned on the output grid exactly like
/// [`radial_power_spectrum`] bins the downsampled image.
pub fn band_limited_spectrum(x: &RealPlane, steps: u32, nbins: usize) -> Result<Vec<f64>> {
    let (c, h, w) = x.shape();
    let factor = 1usize << steps;
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::ShapeMismatch(format!("{h}x{w} is not divisible by {factor}")));
    }
    let (oh, ow) = (h / factor, w / factor);
    let spectrum = spectral::fftshift(&spectral::dft2d_forward_real(x))?;
    let cropped = crate::pooling::crop_center(&spectrum, oh, ow)?;
    let mut power = vec![0.0; oh * ow];
    for ch in 0..c {
        for (p, z) in power.iter_mut().zip(cropped.channel(ch)) {
            *p += z.norm_sqr() / c as f64;
        }
    }
    radial_bins(&power, oh, ow, nbins)
}

/// Sums a shifted `h x w` power array into radial bands.
pub fn radial_bins(power: &[f64], h: usize, w: usize, nbins: usize) -> Result<Vec<f64>> {
    if nbins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bands, got {nbins}")));
    }
    if power.len() != h * w {
        return Err(Error::ShapeMismatch(format!("{} values for a {h}x{w} grid", power.len())));
    }
    let radius = |i: usize, j: usize| {
        let di = i as f64 - (h / 2) as f64;
        let dj = j as f64 - (w / 2) as f64;
        (di * di + dj * dj).sqrt().round() as usize
    };
    let r_max = radius(0, 0);
    let mut bands = vec![0.0; nbins];
    for i in 0..h {
        for j in 0..w {
            let band = (radius(i, j) * nbins / (r_max + 1)).min(nbins - 1);
            bands[band] += power[i * w + j];
        }
    }
    Ok(bands)
}

/// `KL(p || q)` in nats after smoothing each band by [`KL_EPSILON`] and
/// normalizing both to unit sum.
pub fn spectrum_kl(p_ref: &[f64], q: &[f64]) -> Result<f64> {
    if p_ref.len() != q.len() || p_ref.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "band counts differ: {} vs {}",
            p_ref.len(),
            q.len()
        )));
    }
    if p_ref.iter().chain(q).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("band powers must be finite and non-negative".into()));
    }
    let p_total: f64 = p_ref.iter().map(|v| v + KL_EPSILON).sum();
    let q_total: f64 = q.iter().map(|v| v + KL_EPSILON).sum();
    let kl: f64 = p_ref
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let pa = (a + KL_EPSILON) / p_total;
            let qb = (b + KL_EPSILON) / q_total;
            pa * (pa / qb).ln()
        })
        .sum();
    // rounding can leave identical inputs a hair below zero
    Ok(kl.max(0.0))
}

/// Overshoot of `y` above `v_hi`, as a fraction of the step `v_hi - v_lo`.
pub fn ringing_overshoot(y: &RealPlane, v_lo: f64, v_hi: f64) -> Result<f64> {
    if !(v_hi > v_lo) {
        return Err(Error::InvalidArgument(format!("need v_hi > v_lo, got {v_lo} and {v_hi}")));
    }
    Ok(((y.max() - v_hi) / (v_hi - v_lo)).max(0.0))
}

/// Intensity-weighted mean `(row, col)`, summing mass over channels.
pub fn centroid(x: &RealPlane) -> Result<(f64, f64)> {
    let (c, h, w) = x.shape();
    let (mut mass, mut mi, mut mj) = (0.0, 0.0, 0.0);
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let v = x.get(ch, i, j);
                mass += v;
                mi += i as f64 * v;
                mj += j as f64 * v;
            }
        }
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("centroid needs positive mass, got {mass}")));
    }
    Ok((mi / mass, mj / mass))
}

/// Distance in output pixels between the centroid of `output` and the
/// centroid of `input` mapped onto the output grid.
///
/// Input coordinate `u` maps to `u / 2^steps`: output sample `i` of every
/// operator here is anchored at input sample `2^steps * i`.
pub fn centroid_drift(input: &RealPlane, output: &RealPlane, steps: u32) -> Result<f64> {
    let scale = (1u64 << steps) as f64;
    let (ri, ci) = centroid(input)?;
    let (ro, co) = centroid(output)?;
    Ok((ro - ri / scale).hypot(co - ci / scale))
}

/// Metrics for one image under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub image: String,
    pub method: PoolMethod,
    /// In `[0, 1]`.
    pub aliasing: f64,
    /// Nats, band-limited original against output.
    pub spectrum_kl: f64,
    /// Fraction of the input's min-to-max range.
    pub overshoot: f64,
    /// Output pixels; `None` when a centroid is undefined (no positive mass).
    pub centroid_drift: Option<f64>,
    /// Seconds spent downsampling.
    pub wall_time: f64,
}

/// Downsamples `x` with `cfg` on a fresh pipeline and measures the result.
///
/// Overshoot uses the input's minimum and maximum as the two levels (0 for
/// flat inputs). Spectra use `max(2, H'/2)` bands, `H'` being the output
/// height. Multi-channel inputs are measured per channel and averaged.
pub fn evaluate(image: &str, x: &RealPlane, cfg: &PoolConfig) -> Result<MetricsReport> {
    let start = Instant::now();
    let y = downsample_with_state(x, cfg, &mut FftOrderState::new())?;
    let wall_time = start.elapsed().as_secs_f64();

    let steps = cfg.steps as u32;
    let nbins = (y.height() / 2).max(2);
    let channels = x.channels();
    let (mut kl, mut overshoot) = (0.0, 0.0);
    for ch in 0..channels {
        let (xc, yc) = (x.channel_plane(ch), y.channel_plane(ch));
        let reference = band_limited_spectrum(&xc, steps, nbins)?;
        kl += spectrum_kl(&reference, &radial_power_spectrum(&yc, nbins)?)?;
        let (lo, hi) = (xc.min(), xc.max());
        if hi > lo {
            overshoot += ringing_overshoot(&yc, lo, hi)?;
        }
    }
    Ok(MetricsReport {
        image: image.to_string(),
        method: cfg.method,
        aliasing: aliasing_measure(x, &y, steps)?,
        spectrum_kl: kl / channels as f64,
        overshoot: overshoot / channels as f64,
        centroid_drift: centroid_drift(x, &y, steps).ok(),
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio;
    use crate::pooling::{downsample, stride_pool2, Normalization};
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, TAU};

    fn pooled(x: &RealPlane, method: PoolMethod, steps: usize) -> RealPlane {
        downsample(x, &PoolConfig::new(method).with_steps(steps)).unwrap()
    }

    /// Measure recomputed from scratch: direct DFT sums, the folding
    /// identity for stride decimation, and the same gain-fit formula.
    fn folding_oracle(x: &RealPlane) -> f64 {
        let (h, w) = (x.height(), x.width());
        let (oh, ow) = (h / 2, w / 2);
        let dft = |k: usize, l: usize| {
            let mut acc = Complex64::default();
            for u in 0..h {
                for v in 0..w {
                    let ph = -TAU * ((u * k) as f64 / h as f64 + (v * l) as f64 / w as f64);
                    acc += x.get(0, u, v) * Complex64::from_polar(1.0, ph);
                }
            }
            acc
        };
        let full: Vec<Vec<Complex64>> = (0..h).map(|k| (0..w).map(|l| dft(k, l)).collect()).collect();
        let freq = |k: usize, n: usize| if k < n - n / 2 { k as i64 } else { k as i64 - n as i64 };
        let xf = |fk: i64, fl: i64| full[fk.rem_euclid(h as i64) as usize][fl.rem_euclid(w as i64) as usize];
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..oh {
            for l in 0..ow {
                let folded = (xf(k as i64, l as i64)
                    + xf((k + oh) as i64, l as i64)
                    + xf(k as i64, (l + ow) as i64)
                    + xf((k + oh) as i64, (l + ow) as i64))
                    * 0.25;
                let (fk, fl) = (freq(k, oh), freq(l, ow));
                let (pk, pl) = (freq((oh - k) % oh, oh), freq((ow - l) % ow, ow));
                let ideal = (xf(fk, fl) + xf(pk, pl).conj()) * 0.125;
                let g = if ideal.norm_sqr() > 0.0 {
                    ((folded * ideal.conj()).re / ideal.norm_sqr()).clamp(0.0, 4.0)
                } else {
                    0.0
                };
                num += (folded - ideal * g).norm_sqr();
                den += folded.norm_sqr();
            }
        }
        num / den
    }

    #[test]
    fn spectral_pools_do_not_alias() {
        for seed in 0..20 {
            let x = imageio::gen_random(16, 16, seed).unwrap();
            for method in [PoolMethod::Flc, PoolMethod::Asap] {
                for steps in 1..=2 {
                    let a = aliasing_measure(&x, &pooled(&x, method, steps), steps as u32).unwrap();
                    assert!(a <= 1e-10, "{method} steps={steps}: {a}");
                }
                let raw = downsample(&x, &PoolConfig::new(method).with_normalization(Normalization::NoNorm)).unwrap();
                assert!(aliasing_measure(&x, &raw, 1).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn constant_input_never_aliases() {
        let x = imageio::gen_constant(16, 16, 0.4).unwrap();
        for method in PoolMethod::ALL {
            assert!(aliasing_measure(&x, &pooled(&x, method, 2), 2).unwrap() <= 1e-20);
        }
    }

    #[test]
    fn stride_matches_folding_oracle() {
        for seed in 0..5 {
            let x = imageio::gen_random(8, 12, seed).unwrap();
            let got = aliasing_measure(&x, &stride_pool2(&x).unwrap(), 1).unwrap();
            let expected = folding_oracle(&x);
            assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
            assert!(got > 0.01);
        }
    }

    #[test]
    fn stride_checkerboard_is_fully_aliased() {
        let x = imageio::gen_checkerboard(8, 8, 2).unwrap();
        let y = stride_pool2(&x).unwrap();
        assert_eq!(aliasing_measure(&x, &y, 1).unwrap(), 1.0);
    }

    #[test]
    fn aliasing_shape_errors() {
        let x = imageio::gen_random(8, 8, 0).unwrap();
        assert!(aliasing_measure(&x, &RealPlane::zeros(1, 4, 2).unwrap(), 1).is_err());
        assert!(aliasing_measure(&x, &RealPlane::zeros(1, 4, 4).unwrap(), 2).is_err());
        assert!(aliasing_measure(&x, &RealPlane::zeros(1, 4, 4).unwrap(), 70).is_err());
    }

    #[test]
    fn radial_spectrum_of_impulse_counts_population() {
        let x = imageio::gen_impulse(8, 8, 3, 5).unwrap();
        let bands = radial_power_spectrum(&x, 6).unwrap();
        let ones = vec![1.0; 64];
        let population = radial_bins(&ones, 8, 8, 6).unwrap();
        for (b, p) in bands.iter().zip(&population) {
            assert!((b - p).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_spectrum_of_constant_is_dc() {
        let x = imageio::gen_constant(8, 8, 0.5).unwrap();
        let bands = radial_power_spectrum(&x, 4).unwrap();
        assert!((bands[0] - 32.0f64.powi(2)).abs() < 1e-9);
        assert!(bands[1..].iter().all(|&b| b < 1e-20));
    }

    #[test]
    fn radial_spectrum_of_cosine() {
        // frequency (2, 0) sits at radius 2; with r_max = 11 and 12 bands,
        // band index equals radius
        let x = RealPlane::from_fn(1, 16, 16, |_, u, _| (TAU * 2.0 * u as f64 / 16.0).cos()).unwrap();
        let bands = radial_power_spectrum(&x, 12).unwrap();
        let total: f64 = bands.iter().sum();
        assert!(bands[2] / total > 1.0 - 1e-12);
    }

    #[test]
    fn radial_spectrum_errors() {
        let x = imageio::gen_constant(4, 4, 0.5).unwrap();
        assert!(radial_power_spectrum(&x, 1).is_err());
        assert!(radial_bins(&[1.0; 3], 2, 2, 2).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(spectrum_kl(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let expected = 0.5 * LN_2 + 0.5 * (2.0f64 / 3.0).ln();
        let got = spectrum_kl(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((got - expected).abs() < 1e-11);
        assert!((got - 0.14384).abs() < 1e-5);
        // proportional inputs are the same distribution
        assert!(spectrum_kl(&[1.0, 3.0], &[10.0, 30.0]).unwrap() < 1e-12);
        assert!(spectrum_kl(&[1.0], &[1.0, 2.0]).is_err());
        assert!(spectrum_kl(&[1.0, -1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn overshoot() {
        let flat = imageio::gen_constant(8, 8, 1.0).unwrap();
        assert_eq!(ringing_overshoot(&flat, 0.0, 1.0).unwrap(), 0.0);
        let bumpy = RealPlane::new(1, 1, 3, vec![0.0, 1.1, 1.0]).unwrap();
        assert!((ringing_overshoot(&bumpy, 0.0, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert!(ringing_overshoot(&flat, 1.0, 1.0).is_err());
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&imageio::gen_impulse(8, 8, 3, 5).unwrap()).unwrap(), (3.0, 5.0));
        let mut two = RealPlane::zeros(1, 3, 3).unwrap();
        two.set(0, 0, 0, 1.0);
        two.set(0, 2, 0, 1.0);
        assert_eq!(centroid(&two).unwrap(), (1.0, 0.0));
        let (r, c) = centroid(&imageio::gen_disk(20, 14, 5.0).unwrap()).unwrap();
        assert!((r - 9.5).abs() < 1e-9 && (c - 6.5).abs() < 1e-9);
        assert!(centroid(&RealPlane::zeros(1, 2, 2).unwrap()).is_err());
    }

    #[test]
    fn evaluate_fills_report() {
        let x = imageio::gen_box(32, 32, 16, 16, 0.0, 1.0).unwrap();
        let flc = evaluate("box", &x, &PoolConfig::new(PoolMethod::Flc).with_steps(2)).unwrap();
        let asap = evaluate("box", &x, &PoolConfig::new(PoolMethod::Asap).with_steps(2)).unwrap();
        assert_eq!(flc.image, "box");
        assert!(flc.aliasing < 1e-10 && asap.aliasing < 1e-10);
        assert!(flc.overshoot > asap.overshoot);
        assert!(flc.centroid_drift.unwrap() < 0.5);
        let stride = evaluate("box", &x, &PoolConfig::new(PoolMethod::Stride).with_steps(2)).unwrap();
        assert!(stride.wall_time >= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kl_is_non_negative(
            p in proptest::collection::vec(0f64..10.0, 1..16),
            seed in any::<u64>(),
        ) {
            let q: Vec<f64> = p.iter().enumerate().map(|(i, v)| v * 1.7 + (seed.wrapping_mul(i as u64 + 1) % 7) as f64).collect();
            prop_assert!(spectrum_kl(&p, &q).unwrap() >= 0.0);
        }

        #[test]
        fn binning_conserves_energy(seed in any::<u64>(), hh in 1usize..=12, hw in 1usize..=12, nbins in 2usize..20) {
            let x = imageio::gen_random(2 * hh, 2 * hw, seed).unwrap();
            let bands = radial_power_spectrum(&x, nbins).unwrap();
            let total = spectral::dft2d_forward_real(&x).energy();
            prop_assert!((bands.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
        }
    }

    #[test]
    fn asap_keeps_symmetric_images_centred() {
        for steps in 1..=4 {
            let x = imageio::gen_disk(64, 64, 20.0).unwrap();
            let y = pooled(&x, PoolMethod::Asap, steps);
            assert!(centroid_drift(&x, &y, steps as u32).unwrap() <= 0.5);
        }
    }
}
