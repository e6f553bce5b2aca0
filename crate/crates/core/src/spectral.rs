//! 2D discrete Fourier transforms, quadrant shifts and the alternating
//! row-first / column-first transform used by the spectral pooling
//! pipelines.
//!
//! Convention: the forward transform is unnormalized with a negative
//! exponent, so the DC bin holds the sum of the samples. The inverse carries
//! the full `1 / (H * W)` factor.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::tensor::{transpose_channels, ComplexSpectrum, RealPlane};
use crate::{Error, Result};

/// Forward 2D DFT of every channel, rows first.
pub fn dft2d_forward(x: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if x.is_shifted() {
        return Err(Error::LayoutViolation("forward transform expects an unshifted array"));
    }
    Ok(transform(x, FftDirection::Forward, AxisOrder::RowsFirst))
}

/// Forward 2D DFT of a real plane.
pub fn dft2d_forward_real(x: &RealPlane) -> ComplexSpectrum {
    transform(&ComplexSpectrum::from_real(x), FftDirection::Forward, AxisOrder::RowsFirst)
}

/// Inverse 2D DFT of every channel, rows first, normalized by `1 / (H * W)`.
pub fn dft2d_inverse(spectrum: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if spectrum.is_shifted() {
        return Err(Error::LayoutViolation("inverse transform expects an unshifted spectrum"));
    }
    Ok(transform(spectrum, FftDirection::Inverse, AxisOrder::RowsFirst))
}

/// Rolls the spectrum by `(H / 2, W / 2)` so the DC bin lands in the middle.
pub fn fftshift(spectrum: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if spectrum.is_shifted() {
        return Err(Error::LayoutViolation("fftshift applied to a shifted spectrum"));
    }
    let (h, w) = (spectrum.height(), spectrum.width());
    Ok(roll(spectrum, h / 2, w / 2).with_shifted(true))
}

/// Undoes [`fftshift`] for any size, odd or even.
pub fn ifftshift(spectrum: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if !spectrum.is_shifted() {
        return Err(Error::LayoutViolation("ifftshift applied to an unshifted spectrum"));
    }
    let (h, w) = (spectrum.height(), spectrum.width());
    Ok(roll(spectrum, h - h / 2, w - w / 2).with_shifted(false))
}

/// Orientation bookkeeping for a pooling pipeline.
///
/// Every call to [`stabilized_forward`] or [`stabilized_inverse`] advances
/// `parity` by one. On odd parity the input is transposed before the
/// transform and the result transposed back, so successive transforms
/// alternate between row-first and column-first evaluation. With
/// alternation disabled the counter still advances but every transform runs
/// row-first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FftOrderState {
    parity: u64,
    alternate: bool,
}

impl FftOrderState {
    /// A fresh state with alternation enabled.
    pub fn new() -> Self {
        Self {
            parity: 0,
            alternate: true,
        }
    }

    /// A fresh state that always transforms row-first.
    pub fn unstabilized() -> Self {
        Self {
            parity: 0,
            alternate: false,
        }
    }

    pub fn parity(&self) -> u64 {
        self.parity
    }

    pub fn alternates(&self) -> bool {
        self.alternate
    }

    fn next_order(&mut self) -> AxisOrder {
        let order = if self.alternate && self.parity % 2 == 1 {
            AxisOrder::ColumnsFirst
        } else {
            AxisOrder::RowsFirst
        };
        self.parity += 1;
        order
    }
}

/// Forward DFT whose axis order alternates with the state's parity.
pub fn stabilized_forward(state: &mut FftOrderState, x: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if x.is_shifted() {
        return Err(Error::LayoutViolation("forward transform expects an unshifted array"));
    }
    let order = state.next_order();
    Ok(transform(x, FftDirection::Forward, order))
}

/// Inverse DFT whose axis order alternates with the state's parity.
pub fn stabilized_inverse(state: &mut FftOrderState, spectrum: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    if spectrum.is_shifted() {
        return Err(Error::LayoutViolation("inverse transform expects an unshifted spectrum"));
    }
    let order = state.next_order();
    Ok(transform(spectrum, FftDirection::Inverse, order))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AxisOrder {
    RowsFirst,
    ColumnsFirst,
}

fn transform(x: &ComplexSpectrum, direction: FftDirection, order: AxisOrder) -> ComplexSpectrum {
    let (c, h, w) = x.shape();
    let mut out = match order {
        AxisOrder::RowsFirst => rows_then_columns(x.data().to_vec(), c, h, w, direction),
        AxisOrder::ColumnsFirst => {
            // Running the row-first kernel on the transpose visits the
            // original columns first.
            let t = transpose_channels(x.data(), c, h, w);
            let done = rows_then_columns(t, c, w, h, direction);
            transpose_channels(&done, c, w, h)
        }
    };
    if direction == FftDirection::Inverse {
        let norm = 1.0 / (h * w) as f64;
        out.iter_mut().for_each(|z| *z *= norm);
    }
    ComplexSpectrum::from_parts(c, h, w, out, x.is_shifted())
}

/// Unnormalized 2D transform of each channel: 1D transforms along every row,
/// then along every column.
fn rows_then_columns(
    mut data: Vec<Complex64>,
    channels: usize,
    height: usize,
    width: usize,
    direction: FftDirection,
) -> Vec<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(width, direction);
    let col_fft = planner.plan_fft(height, direction);
    let scratch_len = row_fft
        .get_inplace_scratch_len()
        .max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex64::default(); scratch_len];

    for row in data.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    let mut columns = transpose_channels(&data, channels, height, width);
    for col in columns.chunks_exact_mut(height) {
        col_fft.process_with_scratch(col, &mut scratch);
    }
    data = transpose_channels(&columns, channels, width, height);
    data
}

/// `out[i][j] = in[i - di][j - dj]`, indices modulo the plane size.
fn roll(x: &ComplexSpectrum, di: usize, dj: usize) -> ComplexSpectrum {
    let (c, h, w) = x.shape();
    let src = x.data();
    let mut out = vec![Complex64::default(); src.len()];
    for ch in 0..c {
        let base = ch * h * w;
        for i in 0..h {
            let oi = (i + di) % h;
            for j in 0..w {
                let oj = (j + dj) % w;
                out[base + oi * w + oj] = src[base + i * w + j];
            }
        }
    }
    ComplexSpectrum::from_parts(c, h, w, out, x.is_shifted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    /// Direct double sum, used as the reference for every fast path.
    fn naive_dft(x: &[Complex64], h: usize, w: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); h * w];
        for k in 0..h {
            for l in 0..w {
                let mut acc = Complex64::default();
                for u in 0..h {
                    for v in 0..w {
                        let phase = sign * TAU * ((u * k) as f64 / h as f64 + (v * l) as f64 / w as f64);
                        acc += x[u * w + v] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k * w + l] = acc;
            }
        }
        out
    }

    fn random_plane(rng: &mut ChaCha8Rng, h: usize, w: usize) -> RealPlane {
        RealPlane::from_fn(1, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn random_spectrum(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> ComplexSpectrum {
        let data = (0..c * h * w)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexSpectrum::new(c, h, w, data, false).unwrap()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut x = RealPlane::zeros(1, 4, 4).unwrap();
        x.set(0, 0, 0, 1.0);
        let spec = dft2d_forward_real(&x);
        for z in spec.data() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_is_dc_only() {
        let (h, w, c) = (6, 10, 2.5);
        let x = RealPlane::filled(1, h, w, c).unwrap();
        let spec = dft2d_forward_real(&x);
        let tol = 1e-12 * c * (h * w) as f64;
        assert!((spec.get(0, 0, 0).re - c * (h * w) as f64).abs() < tol);
        for (k, z) in spec.data().iter().enumerate().skip(1) {
            assert!(z.norm() < tol, "bin {k} = {z}");
        }
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_plane(&mut rng, 6, 10);
        let spec = dft2d_forward_real(&x);
        let input: Vec<_> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert!(max_err(spec.data(), &naive_dft(&input, 6, 10, -1.0)) < 1e-9);
    }

    #[test]
    fn inverse_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = random_spectrum(&mut rng, 1, 6, 8);
        let back = dft2d_inverse(&spec).unwrap();
        let expected: Vec<_> = naive_dft(spec.data(), 6, 8, 1.0).into_iter().map(|z| z / 48.0).collect();
        assert!(max_err(back.data(), &expected) < 1e-9);
    }

    #[test]
    fn inverse_of_flat_is_impulse() {
        let ones = ComplexSpectrum::new(1, 4, 4, vec![Complex64::new(1.0, 0.0); 16], false).unwrap();
        let x = dft2d_inverse(&ones).unwrap();
        assert!((x.get(0, 0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(x.data()[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_plane(&mut rng, 8, 8);
        let back = dft2d_inverse(&dft2d_forward_real(&x)).unwrap();
        assert!(back.real_part().max_abs_diff(&x).unwrap() < 1e-10);
        assert!(back.data().iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn shift_moves_dc_to_center() {
        let mut s = ComplexSpectrum::zeros(1, 4, 4, false).unwrap();
        s.set(0, 0, 0, Complex64::new(1.0, 0.0));
        let shifted = fftshift(&s).unwrap();
        assert!(shifted.is_shifted());
        assert_eq!(shifted.get(0, 2, 2), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn shift_2x2_swaps_diagonals() {
        let v = |r: f64| Complex64::new(r, 0.0);
        let s = ComplexSpectrum::new(1, 2, 2, vec![v(1.0), v(2.0), v(3.0), v(4.0)], false).unwrap();
        let shifted = fftshift(&s).unwrap();
        assert_eq!(shifted.data(), &[v(4.0), v(3.0), v(2.0), v(1.0)]);
    }

    #[test]
    fn shift_pair_is_identity_for_odd_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_spectrum(&mut rng, 2, 5, 7);
        let shifted = fftshift(&s).unwrap();
        assert_eq!(shifted.get(0, 2, 3), s.get(0, 0, 0));
        assert_eq!(ifftshift(&shifted).unwrap(), s);
    }

    #[test]
    fn shift_layout_is_enforced() {
        let s = ComplexSpectrum::zeros(1, 4, 4, false).unwrap();
        let shifted = fftshift(&s).unwrap();
        let err = fftshift(&shifted).unwrap_err();
        assert!(err.to_string().contains("layout violation"));
        assert!(ifftshift(&s).is_err());
        assert!(dft2d_inverse(&shifted).is_err());
        assert!(dft2d_forward(&shifted).is_err());
    }

    #[test]
    fn even_parity_is_plain_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = ComplexSpectrum::from_real(&random_plane(&mut rng, 12, 10));
        let mut state = FftOrderState::new();
        let a = stabilized_forward(&mut state, &x).unwrap();
        assert_eq!(a, dft2d_forward(&x).unwrap());
    }

    #[test]
    fn odd_parity_agrees_with_plain_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = ComplexSpectrum::from_real(&random_plane(&mut rng, 12, 10));
        let mut state = FftOrderState::new();
        stabilized_forward(&mut state, &x).unwrap();
        let b = stabilized_forward(&mut state, &x).unwrap();
        assert!(b.max_abs_diff(&dft2d_forward(&x).unwrap()).unwrap() < 1e-6);
    }

    #[test]
    fn parity_counts_calls() {
        let x = ComplexSpectrum::zeros(1, 4, 4, false).unwrap();
        let mut state = FftOrderState::new();
        for expected in 1..=4 {
            if expected % 2 == 1 {
                stabilized_forward(&mut state, &x).unwrap();
            } else {
                stabilized_inverse(&mut state, &x).unwrap();
            }
            assert_eq!(state.parity(), expected);
        }
        let mut plain = FftOrderState::unstabilized();
        stabilized_forward(&mut plain, &x).unwrap();
        assert_eq!(plain.parity(), 1);
    }

    #[test]
    fn hermitian_symmetry_for_real_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (h, w) = (10, 8);
        let spec = dft2d_forward_real(&random_plane(&mut rng, h, w));
        for k in 0..h {
            for l in 0..w {
                let mirror = spec.get(0, (h - k) % h, (w - l) % w).conj();
                assert!((spec.get(0, k, l) - mirror).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn multi_channel_transforms_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_spectrum(&mut rng, 3, 4, 6);
        let all = dft2d_forward(&s).unwrap();
        for c in 0..3 {
            let single = ComplexSpectrum::new(1, 4, 6, s.channel(c).to_vec(), false).unwrap();
            let one = dft2d_forward(&single).unwrap();
            assert_eq!(one.data(), all.channel(c));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval(hh in 1usize..=32, hw in 1usize..=32, seed in any::<u64>()) {
            let (h, w) = (2 * hh, 2 * hw);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_plane(&mut rng, h, w);
            let spec = dft2d_forward_real(&x);
            let lhs = spec.energy();
            let rhs = (h * w) as f64 * x.data().iter().map(|v| v * v).sum::<f64>();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }

        #[test]
        fn shift_theorem(s in 0usize..8, t in 0usize..6, seed in any::<u64>()) {
            let (h, w) = (8, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_plane(&mut rng, h, w);
            let base = dft2d_forward_real(&x);
            let moved = dft2d_forward_real(&x.roll(s as isize, t as isize));
            for k in 0..h {
                for l in 0..w {
                    let phase = -TAU * ((s * k) as f64 / h as f64 + (t * l) as f64 / w as f64);
                    let expected = base.get(0, k, l) * Complex64::from_polar(1.0, phase);
                    prop_assert!((moved.get(0, k, l) - expected).norm() < 1e-9);
                }
            }
        }
    }
}
