//! Frequency-domain 2x downsampling for images and feature maps.
//!
//! The crate provides the classic spatial pooling operators (max, average,
//! stride), frequency low-cut pooling (FLC) and its Hamming-windowed
//! successor (ASAP), plus the tools needed to measure what each operator
//! does to a signal: an aliasing measure, radial power spectra, a KL
//! divergence between spectra, ringing overshoot and centroid drift.
//!
//! ```
//! use asap::{downsample, imageio, PoolConfig, PoolMethod};
//!
//! let disk = imageio::gen_disk(64, 64, 20.0).unwrap();
//! let cfg = PoolConfig::new(PoolMethod::Asap).with_steps(2);
//! let small = downsample(&disk, &cfg).unwrap();
//! assert_eq!((small.height(), small.width()), (16, 16));
//! ```

pub mod cli;
mod error;
pub mod imageio;
pub mod metrics;
pub mod pooling;
pub mod spectral;
pub mod tensor;
pub mod window;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use pooling::{downsample, Normalization, PoolConfig, PoolMethod};
pub use spectral::FftOrderState;
pub use tensor::{ComplexSpectrum, RealPlane};
