//! Hamming windows for the shifted frequency domain.

use std::f64::consts::TAU;

use crate::{Error, RealPlane, Result};

/// Hamming coefficient giving a 2/23 edge value and a unit peak.
pub const HAMMING_ALPHA: f64 = 25.0 / 46.0;

/// `alpha - (1 - alpha) * cos(2 pi n / len)` for `n = 0..len`.
///
/// The peak of exactly 1 sits at `n = len / 2`, which is where
/// [`crate::spectral::fftshift`] puts the DC bin, and the sequence is
/// exactly symmetric about it.
pub fn hamming1d(len: usize, alpha: f64) -> Result<Vec<f64>> {
    if len == 0 || !len.is_multiple_of(2) {
        return Err(Error::EvenLengthRequired(len));
    }
    check_alpha(alpha)?;
    let beta = 1.0 - alpha;
    Ok((0..len)
        .map(|n| {
            // cos is even and periodic, so fold n onto its mirror image to
            // make the symmetry bit-exact.
            let k = n.min(len - n);
            alpha - beta * (TAU * (k as f64 / len as f64)).cos()
        })
        .collect())
}

/// Outer product of the row and column windows, as a single-channel plane.
pub fn hamming2d(height: usize, width: usize, alpha: f64) -> Result<RealPlane> {
    let rows = hamming1d(height, alpha)?;
    let cols = hamming1d(width, alpha)?;
    RealPlane::from_fn(1, height, width, |_, i, j| rows[i] * cols[j])
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "window alpha must lie in [0.5, 1], got {alpha}"
        )));
    }
    Ok(())
}
