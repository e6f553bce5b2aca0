//! The 2x downsampling operators: max, average and stride pooling in the
//! spatial domain, and FLC / ASAP pooling in the frequency domain.
//!
//! FLC pooling transforms each channel, moves DC to the middle, keeps the
//! central half of the spectrum along each axis and transforms back. ASAP
//! pooling multiplies the full shifted spectrum by a 2D Hamming window
//! before the crop, which removes the sharp band edge responsible for
//! ringing.

use std::fmt;
use std::str::FromStr;

use crate::spectral::{self, FftOrderState};
use crate::tensor::{ComplexSpectrum, RealPlane};
use crate::window::{self, HAMMING_ALPHA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PoolMethod {
    Max,
    Avg,
    Stride,
    Flc,
    Asap,
}

impl PoolMethod {
    /// Every method, in the fixed order used for reports.
    pub const ALL: [PoolMethod; 5] = [
        PoolMethod::Max,
        PoolMethod::Avg,
        PoolMethod::Stride,
        PoolMethod::Flc,
        PoolMethod::Asap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PoolMethod::Max => "max",
            PoolMethod::Avg => "avg",
            PoolMethod::Stride => "stride",
            PoolMethod::Flc => "flc",
            PoolMethod::Asap => "asap",
        }
    }

    /// True for the methods that go through the frequency domain.
    pub fn is_spectral(self) -> bool {
        matches!(self, PoolMethod::Flc | PoolMethod::Asap)
    }
}

impl fmt::Display for PoolMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(PoolMethod::Max),
            "avg" | "average" => Ok(PoolMethod::Avg),
            "stride" => Ok(PoolMethod::Stride),
            "flc" => Ok(PoolMethod::Flc),
            "asap" => Ok(PoolMethod::Asap),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// How the cropped spectrum is scaled before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Scale by 1/4 per step so the output mean equals the input mean.
    #[default]
    PreserveMean,
    /// No scaling; each step multiplies the mean by 4.
    NoNorm,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::PreserveMean => "preserve_mean",
            Normalization::NoNorm => "nonorm",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "preserve_mean" | "preserve-mean" => Ok(Normalization::PreserveMean),
            "nonorm" => Ok(Normalization::NoNorm),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    pub method: PoolMethod,
    pub normalization: Normalization,
    pub steps: usize,
    /// Hamming coefficient, used by ASAP only.
    pub alpha: f64,
}

impl PoolConfig {
    pub fn new(method: PoolMethod) -> Self {
        Self {
            method,
            normalization: Normalization::PreserveMean,
            steps: 1,
            alpha: HAMMING_ALPHA,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        window::check_alpha(self.alpha)
    }

    /// Checks that `height x width` stays even through every step.
    pub fn check_dims(&self, height: usize, width: usize) -> Result<()> {
        let min = if self.method.is_spectral() { 4 } else { 2 };
        let (mut h, mut w) = (height, width);
        for step in 1..=self.steps {
            if h % 2 != 0 || w % 2 != 0 || h < min || w < min {
                return Err(Error::IndivisibleDims {
                    step,
                    steps: self.steps,
                    height: h,
                    width: w,
                });
            }
            h /= 2;
            w /= 2;
        }
        Ok(())
    }
}

/// 2x2 max pooling with stride 2.
pub fn max_pool2(x: &RealPlane) -> Result<RealPlane> {
    block_pool(x, |a, b, c, d| a.max(b).max(c).max(d))
}

/// 2x2 average pooling with stride 2.
pub fn avg_pool2(x: &RealPlane) -> Result<RealPlane> {
    block_pool(x, |a, b, c, d| (a + b + c + d) * 0.25)
}

/// Keeps the even-indexed rows and columns.
pub fn stride_pool2(x: &RealPlane) -> Result<RealPlane> {
    block_pool(x, |a, _, _, _| a)
}

fn block_pool(x: &RealPlane, reduce: impl Fn(f64, f64, f64, f64) -> f64) -> Result<RealPlane> {
    check_input(x, 2)?;
    let (c, h, w) = x.shape();
    RealPlane::from_fn(c, h / 2, w / 2, |ch, i, j| {
        let (r, s) = (2 * i, 2 * j);
        reduce(x.get(ch, r, s), x.get(ch, r, s + 1), x.get(ch, r + 1, s), x.get(ch, r + 1, s + 1))
    })
}

/// Frequency low-cut pooling: keep the central half-band of the shifted
/// spectrum along each axis.
pub fn flc_pool2(x: &RealPlane, cfg: &PoolConfig, state: &mut FftOrderState) -> Result<RealPlane> {
    spectral_pool2(x, cfg.normalization, None, state)
}

/// FLC pooling with a 2D Hamming window applied to the full shifted
/// spectrum before the crop.
pub fn asap_pool2(x: &RealPlane, cfg: &PoolConfig, state: &mut FftOrderState) -> Result<RealPlane> {
    window::check_alpha(cfg.alpha)?;
    spectral_pool2(x, cfg.normalization, Some(cfg.alpha), state)
}

fn spectral_pool2(
    x: &RealPlane,
    normalization: Normalization,
    alpha: Option<f64>,
    state: &mut FftOrderState,
) -> Result<RealPlane> {
    check_input(x, 4)?;
    let (_, h, w) = x.shape();
    let spectrum = spectral::stabilized_forward(state, &ComplexSpectrum::from_real(x))?;
    let mut shifted = spectral::fftshift(&spectrum)?;
    if let Some(alpha) = alpha {
        shifted = shifted.pointwise_mul(&window::hamming2d(h, w, alpha)?)?;
    }
    let mut cropped = crop_center(&shifted, h / 2, w / 2)?;
    if normalization == Normalization::PreserveMean {
        cropped.scale(0.25);
    }
    let back = spectral::stabilized_inverse(state, &spectral::ifftshift(&cropped)?)?;
    Ok(back.real_part())
}

/// Cuts the `out_h x out_w` block around the DC bin of a shifted spectrum.
///
/// The block starts at `(H/2 - out_h/2, W/2 - out_w/2)`, so the old DC bin
/// becomes the new shifted DC bin `(out_h/2, out_w/2)`. For sizes divisible
/// by four this is the `[N/4, 3N/4)` range.
pub fn crop_center(spectrum: &ComplexSpectrum, out_h: usize, out_w: usize) -> Result<ComplexSpectrum> {
    if !spectrum.is_shifted() {
        return Err(Error::LayoutViolation("crop expects a shifted spectrum"));
    }
    let (c, h, w) = spectrum.shape();
    if out_h == 0 || out_w == 0 || out_h > h || out_w > w {
        return Err(Error::ShapeMismatch(format!(
            "cannot crop {out_h}x{out_w} from {h}x{w}"
        )));
    }
    let r0 = h / 2 - out_h / 2;
    let c0 = w / 2 - out_w / 2;
    let mut data = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        let plane = spectrum.channel(ch);
        for i in r0..r0 + out_h {
            data.extend_from_slice(&plane[i * w + c0..i * w + c0 + out_w]);
        }
    }
    ComplexSpectrum::new(c, out_h, out_w, data, true)
}

fn check_input(x: &RealPlane, min: usize) -> Result<()> {
    let (_, h, w) = x.shape();
    if h % 2 != 0 || w % 2 != 0 || h < min || w < min {
        return Err(Error::EvenDimsRequired {
            height: h,
            width: w,
            min,
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// One 2x step of the configured method.
pub fn pool2(x: &RealPlane, cfg: &PoolConfig, state: &mut FftOrderState) -> Result<RealPlane> {
    match cfg.method {
        PoolMethod::Max => max_pool2(x),
        PoolMethod::Avg => avg_pool2(x),
        PoolMethod::Stride => stride_pool2(x),
        PoolMethod::Flc => flc_pool2(x, cfg, state),
        PoolMethod::Asap => asap_pool2(x, cfg, state),
    }
}

/// Applies `cfg.steps` successive 2x reductions with a fresh, alternating
/// [`FftOrderState`].
pub fn downsample(x: &RealPlane, cfg: &PoolConfig) -> Result<RealPlane> {
    downsample_with_state(x, cfg, &mut FftOrderState::new())
}

/// Like [`downsample`], threading the caller's state through every step.
pub fn downsample_with_state(x: &RealPlane, cfg: &PoolConfig, state: &mut FftOrderState) -> Result<RealPlane> {
    let mut stages = downsample_stages(x, cfg, state)?;
    Ok(stages.pop().expect("at least one step"))
}

/// Every intermediate result, `stages[k]` being the output of step `k + 1`.
pub fn downsample_stages(x: &RealPlane, cfg: &PoolConfig, state: &mut FftOrderState) -> Result<Vec<RealPlane>> {
    cfg.validate()?;
    cfg.check_dims(x.height(), x.width())?;
    let mut stages: Vec<RealPlane> = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let next = pool2(stages.last().unwrap_or(x), cfg, state)?;
        stages.push(next);
    }
    Ok(stages)
}
