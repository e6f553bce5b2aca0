//! Binary PNM (P5 / P6) input and output, and deterministic synthetic
//! test images.
//!
//! Pixel values are mapped linearly to reals in `[0, 1]` on the way in and
//! quantized back on the way out. Samples are 8-bit when `maxval <= 255` and
//! 16-bit big-endian otherwise.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, RealPlane, Result};

/// Parses a binary PGM (1 channel) or PPM (3 channels) image.
pub fn decode_pnm(bytes: &[u8]) -> Result<RealPlane> {
    let magic = bytes.get(..2).ok_or_else(|| Error::MalformedHeader("missing magic".into()))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(Error::UnsupportedMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut pos = 2;
    let width = header_field(bytes, &mut pos, "width")?;
    let height = header_field(bytes, &mut pos, "height")?;
    let maxval = header_field(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the samples
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }

    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let count = width * height * channels;
    let expected = count * sample_bytes;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(Error::Truncated {
            expected,
            got: body.len(),
        });
    }

    let scale = 1.0 / maxval as f64;
    let mut planar = vec![0.0; count];
    for k in 0..count {
        let raw = if sample_bytes == 2 {
            u16::from_be_bytes([body[2 * k], body[2 * k + 1]]) as usize
        } else {
            body[k] as usize
        };
        if raw > maxval {
            return Err(Error::MalformedHeader(format!("sample {raw} exceeds maxval {maxval}")));
        }
        // interleaved RGB -> channel planes
        let (pixel, c) = (k / channels, k % channels);
        planar[c * width * height + pixel] = raw as f64 * scale;
    }
    RealPlane::new(channels, height, width, planar)
}

fn header_field(bytes: &[u8], pos: &mut usize, name: &str) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::MalformedHeader(format!("missing {name}"))),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader(format!("expected digits for {name}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("{name} out of range")))
}

/// Encodes a 1- or 3-channel plane. Returns the bytes and the number of
/// samples that had to be clamped into `[0, 1]`.
pub fn encode_pnm(x: &RealPlane, maxval: u16) -> Result<(Vec<u8>, usize)> {
    let magic = match x.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::InvalidArgument(format!(
                "PNM holds 1 or 3 channels, got {c}"
            )))
        }
    };
    if maxval == 0 {
        return Err(Error::InvalidArgument("maxval must be positive".into()));
    }
    let (c, h, w) = x.shape();
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    let wide = maxval > 255;
    out.reserve(c * h * w * if wide { 2 } else { 1 });
    let mut clamped = 0;
    for pixel in 0..h * w {
        for ch in 0..c {
            let v = x.channel(ch)[pixel];
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u16;
            if wide {
                out.extend_from_slice(&q.to_be_bytes());
            } else {
                out.push(q as u8);
            }
        }
    }
    Ok((out, clamped))
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<RealPlane> {
    decode_pnm(&fs::read(path)?)
}

/// Writes `x` as binary PNM, returning the clamped-sample count.
pub fn write_pnm(path: impl AsRef<Path>, x: &RealPlane, maxval: u16) -> Result<usize> {
    let (bytes, clamped) = encode_pnm(x, maxval)?;
    fs::write(path, bytes)?;
    Ok(clamped)
}

fn check_size(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!("image size {height}x{width} must be positive")));
    }
    Ok(())
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

pub fn gen_constant(height: usize, width: usize, value: f64) -> Result<RealPlane> {
    check_size(height, width)?;
    check_level("value", value)?;
    RealPlane::filled(1, height, width, value)
}

/// Squares of side `period / 2`, 0 in the top-left cell.
pub fn gen_checkerboard(height: usize, width: usize, period: usize) -> Result<RealPlane> {
    check_size(height, width)?;
    if period < 2 || !period.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("checkerboard period must be even and >= 2, got {period}")));
    }
    let cell = period / 2;
    RealPlane::from_fn(1, height, width, |_, u, v| ((u / cell + v / cell) % 2) as f64)
}

/// A centred `box_h x box_w` rectangle at `v_hi` on a `v_lo` background.
pub fn gen_box(height: usize, width: usize, box_h: usize, box_w: usize, v_lo: f64, v_hi: f64) -> Result<RealPlane> {
    check_size(height, width)?;
    check_level("v_lo", v_lo)?;
    check_level("v_hi", v_hi)?;
    if box_h == 0 || box_w == 0 || box_h > height || box_w > width {
        return Err(Error::InvalidArgument(format!(
            "box {box_h}x{box_w} does not fit in {height}x{width}"
        )));
    }
    let (r0, c0) = ((height - box_h) / 2, (width - box_w) / 2);
    RealPlane::from_fn(1, height, width, |_, u, v| {
        if (r0..r0 + box_h).contains(&u) && (c0..c0 + box_w).contains(&v) {
            v_hi
        } else {
            v_lo
        }
    })
}

/// A filled disk of value 1 centred at `((H-1)/2, (W-1)/2)` on 0.
pub fn gen_disk(height: usize, width: usize, radius: f64) -> Result<RealPlane> {
    check_size(height, width)?;
    if !(radius > 0.0) || radius > height.min(width) as f64 / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "disk radius {radius} does not fit in {height}x{width}"
        )));
    }
    let (cu, cv) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let r2 = radius * radius;
    RealPlane::from_fn(1, height, width, |_, u, v| {
        let (du, dv) = (u as f64 - cu, v as f64 - cv);
        if du * du + dv * dv <= r2 {
            1.0
        } else {
            0.0
        }
    })
}

/// `0.5 + 0.5 cos(2 pi (fu u / H + fv v / W) + phase)`; `fu`, `fv` are
/// cycles per image along rows and columns.
pub fn gen_sinusoid(height: usize, width: usize, fu: f64, fv: f64, phase: f64) -> Result<RealPlane> {
    check_size(height, width)?;
    if !(fu.is_finite() && fv.is_finite() && phase.is_finite()) {
        return Err(Error::InvalidArgument("sinusoid parameters must be finite".into()));
    }
    RealPlane::from_fn(1, height, width, |_, u, v| {
        0.5 + 0.5 * (TAU * (fu * u as f64 / height as f64 + fv * v as f64 / width as f64) + phase).cos()
    })
}

pub fn gen_impulse(height: usize, width: usize, u: usize, v: usize) -> Result<RealPlane> {
    check_size(height, width)?;
    if u >= height || v >= width {
        return Err(Error::InvalidArgument(format!("impulse ({u}, {v}) outside {height}x{width}")));
    }
    let mut x = RealPlane::zeros(1, height, width)?;
    x.set(0, u, v, 1.0);
    Ok(x)
}

/// Uniform noise in `[0, 1)`.
///
/// Samples come from ChaCha8 seeded through `SeedableRng::seed_from_u64`
/// (rand_chacha 0.3), drawn row-major with rand 0.8's `Standard` f64
/// distribution (53 random mantissa bits).
pub fn gen_random(height: usize, width: usize, seed: u64) -> Result<RealPlane> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealPlane::from_fn(1, height, width, |_, _, _| rng.gen::<f64>())
}

/// Broadband texture: 40% uniform noise plus 60% of the average of three
/// oriented stripe patterns with random integer frequencies and phases.
/// Uses the same generator as [`gen_random`].
pub fn gen_texture(height: usize, width: usize, seed: u64) -> Result<RealPlane> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fmax_u, fmax_v) = ((height / 2).max(1) as i64, (width / 2).max(1) as i64);
    let stripes: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let fu = rng.gen_range(-fmax_u + 1..fmax_u) as f64;
            let fv = rng.gen_range(0..fmax_v) as f64;
            (fu, fv, rng.gen_range(0.0..TAU))
        })
        .collect();
    RealPlane::from_fn(1, height, width, |_, u, v| {
        let stripe: f64 = stripes
            .iter()
            .map(|&(fu, fv, ph)| {
                0.5 + 0.5 * (TAU * (fu * u as f64 / height as f64 + fv * v as f64 / width as f64) + ph).cos()
            })
            .sum::<f64>()
            / 3.0;
        0.4 * rng.gen::<f64>() + 0.6 * stripe
    })
}

/// A generator call written as `name:HxW[:param...]`.
///
/// | spec | image |
/// |------|-------|
/// | `constant:HxW:value` | flat plane |
/// | `checkerboard:HxW:period` | squares of side period/2 |
/// | `box:HxW:bh:bw[:lo:hi]` | centred box, default levels 0 and 1 |
/// | `disk:HxW:radius` | centred disk of 1 on 0 |
/// | `sinusoid:HxW:fu:fv[:phase]` | raised cosine |
/// | `impulse:HxW:u:v` | single 1 |
/// | `random:HxW:seed` | uniform noise |
/// | `texture:HxW:seed` | noise plus stripes |
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    Constant(f64),
    Checkerboard(usize),
    Box { box_h: usize, box_w: usize, v_lo: f64, v_hi: f64 },
    Disk(f64),
    Sinusoid { fu: f64, fv: f64, phase: f64 },
    Impulse(usize, usize),
    Random(u64),
    Texture(u64),
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<RealPlane> {
        let (h, w) = (self.height, self.width);
        match self.kind {
            GeneratorKind::Constant(v) => gen_constant(h, w, v),
            GeneratorKind::Checkerboard(p) => gen_checkerboard(h, w, p),
            GeneratorKind::Box { box_h, box_w, v_lo, v_hi } => gen_box(h, w, box_h, box_w, v_lo, v_hi),
            GeneratorKind::Disk(r) => gen_disk(h, w, r),
            GeneratorKind::Sinusoid { fu, fv, phase } => gen_sinusoid(h, w, fu, fv, phase),
            GeneratorKind::Impulse(u, v) => gen_impulse(h, w, u, v),
            GeneratorKind::Random(seed) => gen_random(h, w, seed),
            GeneratorKind::Texture(seed) => gen_texture(h, w, seed),
        }
    }

    /// Same generator with a different seed; `None` for unseeded kinds.
    pub fn reseeded(&self, seed: u64) -> Option<GeneratorSpec> {
        let kind = match self.kind {
            GeneratorKind::Random(_) => GeneratorKind::Random(seed),
            GeneratorKind::Texture(_) => GeneratorKind::Texture(seed),
            _ => return None,
        };
        Some(GeneratorSpec { kind, ..*self })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeneratorKind::Constant(_) => "constant",
            GeneratorKind::Checkerboard(_) => "checkerboard",
            GeneratorKind::Box { .. } => "box",
            GeneratorKind::Disk(_) => "disk",
            GeneratorKind::Sinusoid { .. } => "sinusoid",
            GeneratorKind::Impulse(..) => "impulse",
            GeneratorKind::Random(_) => "random",
            GeneratorKind::Texture(_) => "texture",
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}x{}", self.name(), self.height, self.width)?;
        match self.kind {
            GeneratorKind::Constant(v) => write!(f, ":{v}"),
            GeneratorKind::Checkerboard(p) => write!(f, ":{p}"),
            GeneratorKind::Box { box_h, box_w, v_lo, v_hi } => write!(f, ":{box_h}:{box_w}:{v_lo}:{v_hi}"),
            GeneratorKind::Disk(r) => write!(f, ":{r}"),
            GeneratorKind::Sinusoid { fu, fv, phase } => write!(f, ":{fu}:{fv}:{phase}"),
            GeneratorKind::Impulse(u, v) => write!(f, ":{u}:{v}"),
            GeneratorKind::Random(s) | GeneratorKind::Texture(s) => write!(f, ":{s}"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("generator {s:?}: {msg}"));
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let size = parts.next().ok_or_else(|| bad("missing HxW"))?;
        let (h, w) = size
            .split_once(['x', 'X'])
            .and_then(|(h, w)| Some((h.parse().ok()?, w.parse().ok()?)))
            .ok_or_else(|| bad("size must look like 32x32"))?;
        let params: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64> {
            params
                .get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse::<f64>()
                .map_err(|_| bad("parameter is not a number"))
        };
        let int = |i: usize| -> Result<u64> {
            params
                .get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse::<u64>()
                .map_err(|_| bad("parameter is not a non-negative integer"))
        };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if params.len() < lo || params.len() > hi {
                return Err(bad("wrong number of parameters"));
            }
            Ok(())
        };
        let kind = match name.as_str() {
            "constant" => {
                arity(1, 1)?;
                GeneratorKind::Constant(num(0)?)
            }
            "checkerboard" => {
                arity(0, 1)?;
                GeneratorKind::Checkerboard(if params.is_empty() { 2 } else { int(0)? as usize })
            }
            "box" => {
                if params.len() != 2 && params.len() != 4 {
                    return Err(bad("box takes bh:bw or bh:bw:lo:hi"));
                }
                let (v_lo, v_hi) = if params.len() == 4 { (num(2)?, num(3)?) } else { (0.0, 1.0) };
                GeneratorKind::Box {
                    box_h: int(0)? as usize,
                    box_w: int(1)? as usize,
                    v_lo,
                    v_hi,
                }
            }
            "disk" => {
                arity(1, 1)?;
                GeneratorKind::Disk(num(0)?)
            }
            "sinusoid" => {
                arity(2, 3)?;
                GeneratorKind::Sinusoid {
                    fu: num(0)?,
                    fv: num(1)?,
                    phase: if params.len() == 3 { num(2)? } else { 0.0 },
                }
            }
            "impulse" => {
                arity(2, 2)?;
                GeneratorKind::Impulse(int(0)? as usize, int(1)? as usize)
            }
            "random" => {
                arity(1, 1)?;
                GeneratorKind::Random(int(0)?)
            }
            "texture" => {
                arity(1, 1)?;
                GeneratorKind::Texture(int(0)?)
            }
            _ => return Err(bad("unknown generator")),
        };
        Ok(GeneratorSpec { kind, height: h, width: w })
    }
}
