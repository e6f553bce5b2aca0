//! Dense multi-channel planes of reals and complex spectra.
//!
//! Both types store `channels * height * width` values, row-major within
//! each channel, channel after channel. Channels never interact.

use num_complex::Complex64;

use crate::{Error, Result};

/// A C x H x W array of reals: an image or a feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPlane {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RealPlane {
    /// Wraps `data`, checking its length and that every value is finite.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(channels, height, width, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        let len = channels * height * width;
        Self::new(channels, height, width, vec![value; len])
    }

    /// Builds a plane by evaluating `f(channel, row, col)` at every index.
    pub fn from_fn<F>(channels: usize, height: usize, width: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Single-channel plane from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(1, height, width, rows.concat())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the samples. Callers may break the finiteness
    /// invariant here; the pooling operators re-check it.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, value: f64) {
        self.data[(c * self.height + i) * self.width + j] = value;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Copies one channel out as a single-channel plane.
    pub fn channel_plane(&self, c: usize) -> RealPlane {
        RealPlane {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self.channel(c).to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> RealPlane {
        RealPlane {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Circular shift: `out[c][i][j] = in[c][i - di][j - dj]` (indices mod H, W).
    pub fn roll(&self, di: isize, dj: isize) -> RealPlane {
        let (h, w) = (self.height as isize, self.width as isize);
        let mut out = self.clone();
        for c in 0..self.channels {
            for i in 0..self.height {
                for j in 0..self.width {
                    let si = (i as isize - di).rem_euclid(h) as usize;
                    let sj = (j as isize - dj).rem_euclid(w) as usize;
                    out.set(c, i, j, self.get(c, si, sj));
                }
            }
        }
        out
    }

    /// Swaps rows and columns in every channel.
    pub fn transpose(&self) -> RealPlane {
        RealPlane {
            channels: self.channels,
            height: self.width,
            width: self.height,
            data: transpose_channels(&self.data, self.channels, self.height, self.width),
        }
    }

    /// Maximum absolute elementwise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &RealPlane) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(shape_error(self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A C x H x W array of complex values with a record of its quadrant layout.
///
/// `shifted == true` means the DC bin sits at `(H / 2, W / 2)`; otherwise it
/// sits at `(0, 0)`. Only [`crate::spectral::fftshift`] and
/// [`crate::spectral::ifftshift`] change the flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Complex64>,
    shifted: bool,
}

impl ComplexSpectrum {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<Complex64>,
        shifted: bool,
    ) -> Result<Self> {
        check_shape(channels, height, width, data.len())?;
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            shifted,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, shifted: bool) -> Result<Self> {
        let len = channels * height * width;
        Self::new(channels, height, width, vec![Complex64::default(); len], shifted)
    }

    /// Lifts a real plane into an unshifted complex array.
    pub fn from_real(x: &RealPlane) -> Self {
        Self {
            channels: x.channels,
            height: x.height,
            width: x.width,
            data: x.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            shifted: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> Complex64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, value: Complex64) {
        self.data[(c * self.height + i) * self.width + j] = value;
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn transpose(&self) -> ComplexSpectrum {
        ComplexSpectrum {
            channels: self.channels,
            height: self.width,
            width: self.height,
            data: transpose_channels(&self.data, self.channels, self.height, self.width),
            shifted: self.shifted,
        }
    }

    /// Multiplies every channel by the single-channel weight plane `w`.
    pub fn pointwise_mul(&self, w: &RealPlane) -> Result<ComplexSpectrum> {
        if w.channels != 1 || w.height != self.height || w.width != self.width {
            return Err(shape_error((1, self.height, self.width), w.shape()));
        }
        let n = self.height * self.width;
        let data = self
            .data
            .chunks_exact(n)
            .flat_map(|ch| ch.iter().zip(&w.data).map(|(z, &g)| z * g))
            .collect();
        Ok(ComplexSpectrum {
            data,
            ..self.clone_shape()
        })
    }

    /// Multiplies every value by a real scalar.
    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    /// Real parts as a plane.
    pub fn real_part(&self) -> RealPlane {
        RealPlane {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }

    /// Sum of squared magnitudes over all channels.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &ComplexSpectrum) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(shape_error(self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn from_parts(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<Complex64>,
        shifted: bool,
    ) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
            shifted,
        }
    }

    pub(crate) fn with_shifted(mut self, shifted: bool) -> Self {
        self.shifted = shifted;
        self
    }

    fn clone_shape(&self) -> ComplexSpectrum {
        ComplexSpectrum {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: Vec::new(),
            shifted: self.shifted,
        }
    }
}

fn check_shape(channels: usize, height: usize, width: usize, len: usize) -> Result<()> {
    if channels == 0 || height == 0 || width == 0 {
        return Err(Error::ShapeMismatch(format!(
            "dimensions must be positive, got {channels}x{height}x{width}"
        )));
    }
    if len != channels * height * width {
        return Err(Error::ShapeMismatch(format!(
            "{channels}x{height}x{width} needs {} values, got {len}",
            channels * height * width
        )));
    }
    Ok(())
}

pub(crate) fn shape_error(expected: (usize, usize, usize), got: (usize, usize, usize)) -> Error {
    Error::ShapeMismatch(format!(
        "expected {}x{}x{}, got {}x{}x{}",
        expected.0, expected.1, expected.2, got.0, got.1, got.2
    ))
}

pub(crate) fn transpose_channels<T: Copy>(data: &[T], channels: usize, height: usize, width: usize) -> Vec<T> {
    let n = height * width;
    let mut out = Vec::with_capacity(data.len());
    for c in 0..channels {
        let ch = &data[c * n..(c + 1) * n];
        for j in 0..width {
            out.extend((0..height).map(|i| ch[i * width + j]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transpose_permutes_indices() {
        let x = RealPlane::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = x.transpose();
        assert_eq!(t.shape(), (1, 3, 2));
        assert_eq!(t.data(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn transpose_single_pixel() {
        let x = RealPlane::new(1, 1, 1, vec![7.0]).unwrap();
        assert_eq!(x.transpose(), x);
    }

    #[test]
    fn transpose_keeps_shift_flag() {
        let s = ComplexSpectrum::zeros(2, 3, 5, true).unwrap();
        let t = s.transpose();
        assert!(t.is_shifted());
        assert_eq!(t.shape(), (2, 5, 3));
    }

    #[test]
    fn rejects_bad_length_and_nan() {
        assert!(matches!(RealPlane::new(1, 2, 2, vec![0.0; 3]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            RealPlane::new(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
        assert!(RealPlane::new(0, 2, 2, vec![]).is_err());
    }

    #[test]
    fn pointwise_mul_identity_and_annihilator() {
        let data: Vec<_> = (0..18).map(|k| c(k as f64, -(k as f64) * 0.5)).collect();
        let x = ComplexSpectrum::new(2, 3, 3, data, false).unwrap();
        let ones = RealPlane::filled(1, 3, 3, 1.0).unwrap();
        assert_eq!(x.pointwise_mul(&ones).unwrap(), x);
        let zeros = RealPlane::zeros(1, 3, 3).unwrap();
        assert!(x.pointwise_mul(&zeros).unwrap().data().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pointwise_mul_single_bin() {
        let mut x = ComplexSpectrum::zeros(1, 3, 3, true).unwrap();
        x.set(0, 1, 1, c(2.0, 3.0));
        let mut w = RealPlane::filled(1, 3, 3, 1.0).unwrap();
        w.set(0, 1, 1, 0.5);
        let y = x.pointwise_mul(&w).unwrap();
        assert_eq!(y.get(0, 1, 1), c(1.0, 1.5));
        assert!(y.is_shifted());
    }

    #[test]
    fn pointwise_mul_shape_mismatch() {
        let x = ComplexSpectrum::zeros(1, 4, 4, false).unwrap();
        let w = RealPlane::zeros(1, 4, 2).unwrap();
        let err = x.pointwise_mul(&w).unwrap_err();
        assert!(err.to_string().contains("shape mismatch"));
        let w2 = RealPlane::zeros(2, 4, 4).unwrap();
        assert!(x.pointwise_mul(&w2).is_err());
    }

    #[test]
    fn roll_moves_samples() {
        let x = RealPlane::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(x.roll(1, 0).data(), &[3.0, 4.0, 1.0, 2.0]);
        assert_eq!(x.roll(0, -1).data(), &[2.0, 1.0, 4.0, 3.0]);
    }

    proptest! {
        #[test]
        fn transpose_is_involution(vals in proptest::collection::vec(-1e3f64..1e3, 3 * 8 * 6)) {
            let x = RealPlane::new(3, 8, 6, vals).unwrap();
            prop_assert_eq!(x.transpose().transpose(), x);
        }

        #[test]
        fn pointwise_mul_is_linear(
            xs in proptest::collection::vec(-10f64..10.0, 2 * 16),
            ys in proptest::collection::vec(-10f64..10.0, 2 * 16),
            ws in proptest::collection::vec(0f64..1.0, 16),
            a in -3f64..3.0,
            b in -3f64..3.0,
        ) {
            let to_spec = |v: &[f64]| {
                let d = v.chunks(2).map(|p| c(p[0], p[1])).collect();
                ComplexSpectrum::new(1, 4, 4, d, false).unwrap()
            };
            let x = to_spec(&xs);
            let y = to_spec(&ys);
            let w = RealPlane::new(1, 4, 4, ws).unwrap();
            let combo: Vec<_> = x.data().iter().zip(y.data()).map(|(p, q)| p * a + q * b).collect();
            let lhs = ComplexSpectrum::new(1, 4, 4, combo, false).unwrap().pointwise_mul(&w).unwrap();
            let (wx, wy) = (x.pointwise_mul(&w).unwrap(), y.pointwise_mul(&w).unwrap());
            for k in 0..16 {
                let rhs = wx.data()[k] * a + wy.data()[k] * b;
                let scale = rhs.norm().max(1.0);
                prop_assert!((lhs.data()[k] - rhs).norm() <= 1e-12 * scale);
            }
        }
    }
}
