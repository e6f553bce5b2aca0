//! Command-line driver.
//!
//! Every command writes its outputs plus a `key=value` manifest describing
//! the run. Feeding that manifest to `asap replay` reruns the same command;
//! outputs are byte-identical unless `--timing` was requested.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 image
//! dimensions incompatible with the requested steps.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::imageio::{self, GeneratorSpec};
use crate::metrics::{self, MetricsReport};
use crate::pooling::{downsample_stages, Normalization, PoolConfig, PoolMethod};
use crate::spectral::FftOrderState;
use crate::window::HAMMING_ALPHA;
use crate::{Error, RealPlane, Result};

const GENERATOR_HELP: &str = "\
Generator specs have the form name:HxW[:param...]:
  constant:HxW:value          flat image
  checkerboard:HxW[:period]   squares of side period/2 (default period 2)
  box:HxW:bh:bw[:lo:hi]       centred box (default levels 0 and 1)
  disk:HxW:radius             centred disk of 1 on 0
  sinusoid:HxW:fu:fv[:phase]  0.5 + 0.5 cos(2 pi (fu u/H + fv v/W) + phase)
  impulse:HxW:u:v             single bright pixel
  random:HxW:seed             uniform noise in [0, 1)
  texture:HxW:seed            noise plus random stripes
A corpus is a seeded generator plus --count; image i uses seed + i.";

#[derive(Debug, Parser)]
#[command(name = "asap", version, about = "Frequency-domain 2x downsampling and artifact measurements", after_help = GENERATOR_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Downsample one image and write it as PNM.
    Downsample(DownsampleArgs),
    /// Measure every method over a corpus and write a CSV report.
    Analyze(AnalyzeArgs),
    /// Write the radial power spectrum of an image as CSV.
    Spectrum(SpectrumArgs),
    /// Write per-step images, spectra and a summary for several methods.
    Compare(CompareArgs),
    /// Rerun the command recorded in a manifest file.
    Replay {
        /// Manifest written by an earlier run.
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Input PNM file (P5 or P6).
    #[arg(long = "in", group = "source")]
    input: Option<PathBuf>,
    /// Synthetic input, e.g. disk:256x256:60.
    #[arg(long, group = "source")]
    gen: Option<GeneratorSpec>,
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Number of 2x steps.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// preserve_mean or nonorm.
    #[arg(long, default_value = "preserve_mean")]
    norm: Normalization,
    /// Hamming coefficient for ASAP.
    #[arg(long, default_value_t = HAMMING_ALPHA)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct DownsampleArgs {
    #[command(flatten)]
    source: Source,
    /// max, avg, stride, flc or asap.
    #[arg(long, default_value = "asap")]
    method: PoolMethod,
    #[command(flatten)]
    pool: PoolArgs,
    /// Output sample range: 255 or 65535.
    #[arg(long, default_value_t = 255)]
    maxval: u16,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "corpus_source", required = true, multiple = false)]
struct AnalyzeArgs {
    /// Directory of PNM images, processed in file-name order.
    #[arg(long = "in", group = "corpus_source")]
    input: Option<PathBuf>,
    /// Seeded generator for a synthetic corpus, e.g. random:32x32:0.
    #[arg(long, group = "corpus_source")]
    corpus: Option<GeneratorSpec>,
    /// Number of corpus images.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Comma-separated methods; reported in the fixed order max,avg,stride,flc,asap.
    #[arg(long, default_value = "max,avg,stride,flc,asap", value_delimiter = ',')]
    methods: Vec<PoolMethod>,
    #[command(flatten)]
    pool: PoolArgs,
    /// Record real downsampling times (makes the report non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    source: Source,
    /// Number of radial bands (default: half the image height, at least 2).
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "max,stride,flc,asap", value_delimiter = ',')]
    methods: Vec<PoolMethod>,
    #[arg(long, default_value_t = 3)]
    steps: usize,
    #[arg(long, default_value = "preserve_mean")]
    norm: Normalization,
    #[arg(long, default_value_t = HAMMING_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 255)]
    maxval: u16,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_dimension_error() {
        3
    } else if err.is_io_error() {
        2
    } else {
        1
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Downsample(args) => cmd_downsample(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Replay { manifest } => replay(&manifest),
    }
}

impl Source {
    fn load(&self) -> Result<RealPlane> {
        match (&self.input, &self.gen) {
            (Some(path), _) => imageio::read_pnm(path),
            (None, Some(spec)) => spec.generate(),
            (None, None) => Err(Error::InvalidArgument("need --in or --gen".into())),
        }
    }

    fn record(&self, manifest: &mut Manifest) {
        if let Some(path) = &self.input {
            manifest.push("in", path.display());
        }
        if let Some(spec) = &self.gen {
            manifest.push("gen", spec);
        }
    }
}

impl PoolArgs {
    fn config(&self, method: PoolMethod) -> PoolConfig {
        PoolConfig::new(method)
            .with_steps(self.steps)
            .with_normalization(self.norm)
            .with_alpha(self.alpha)
    }

    fn record(&self, manifest: &mut Manifest) {
        manifest.push("steps", self.steps);
        manifest.push("norm", self.norm);
        manifest.push("alpha", self.alpha);
    }
}

fn cmd_downsample(args: &DownsampleArgs) -> Result<()> {
    let x = args.source.load()?;
    let cfg = args.pool.config(args.method);
    let mut stages = downsample_stages(&x, &cfg, &mut FftOrderState::new())?;
    let y = stages.pop().expect("at least one step");
    let clamped = imageio::write_pnm(&args.out, &y, args.maxval)?;
    if clamped > 0 {
        eprintln!("warning: clamped {clamped} samples into [0, 1]");
    }

    let mut manifest = Manifest::new("downsample");
    args.source.record(&mut manifest);
    manifest.push("method", args.method);
    args.pool.record(&mut manifest);
    manifest.push("maxval", args.maxval);
    manifest.push("out", args.out.display());
    manifest.write(&sidecar(&args.out))
}

/// One corpus member: a display name and a way to produce its pixels.
struct CorpusItem {
    name: String,
    source: CorpusSource,
}

enum CorpusSource {
    File(PathBuf),
    Generated(GeneratorSpec),
}

impl CorpusItem {
    fn load(&self) -> Result<RealPlane> {
        match &self.source {
            CorpusSource::File(path) => imageio::read_pnm(path),
            CorpusSource::Generated(spec) => spec.generate(),
        }
    }
}

fn corpus_items(args: &AnalyzeArgs) -> Result<Vec<CorpusItem>> {
    let mut items = Vec::new();
    if let Some(dir) = &args.input {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let is_pnm = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"));
            if is_pnm && path.is_file() {
                let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                items.push(CorpusItem {
                    name,
                    source: CorpusSource::File(path),
                });
            }
        }
        items.sort_by(|a, b| a.name.cmp(&b.name));
    } else if let Some(spec) = &args.corpus {
        let digits = args.count.saturating_sub(1).to_string().len().max(4);
        let base_seed = match spec.kind {
            imageio::GeneratorKind::Random(s) | imageio::GeneratorKind::Texture(s) => s,
            _ => 0,
        };
        for i in 0..args.count {
            let member = spec
                .reseeded(base_seed.wrapping_add(i as u64))
                .unwrap_or_else(|| spec.clone());
            items.push(CorpusItem {
                name: format!("{}-{:0digits$}", spec.name(), i),
                source: CorpusSource::Generated(member),
            });
        }
    }
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    Ok(items)
}

/// Deduplicated methods in report order.
fn ordered_methods(requested: &[PoolMethod]) -> Result<Vec<PoolMethod>> {
    let methods: Vec<_> = PoolMethod::ALL
        .into_iter()
        .filter(|m| requested.contains(m))
        .collect();
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    Ok(methods)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let items = corpus_items(args)?;
    let methods = ordered_methods(&args.methods)?;
    for &m in &methods {
        args.pool.config(m).validate()?;
    }

    let rows: Vec<Vec<MetricsReport>> = items
        .par_iter()
        .map(|item| {
            let x = item.load()?;
            methods
                .iter()
                .map(|&m| metrics::evaluate(&item.name, &x, &args.pool.config(m)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("image,method,aliasing,spectrum_kl,overshoot,wall_time_s\n");
    for report in rows.iter().flatten() {
        let time = if args.timing { report.wall_time } else { 0.0 };
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            report.image,
            report.method,
            fmt_num(report.aliasing),
            fmt_num(report.spectrum_kl),
            fmt_num(report.overshoot),
            fmt_num(time)
        )
        .unwrap();
    }
    for (k, &method) in methods.iter().enumerate() {
        let column = |f: fn(&MetricsReport) -> f64| -> Vec<f64> { rows.iter().map(|r| f(&r[k])).collect() };
        let cols = [
            column(|r| r.aliasing),
            column(|r| r.spectrum_kl),
            column(|r| r.overshoot),
            if args.timing { column(|r| r.wall_time) } else { vec![0.0; rows.len()] },
        ];
        for (label, stat) in [("<mean>", mean as fn(&[f64]) -> f64), ("<std>", std_dev)] {
            let cells: Vec<String> = cols.iter().map(|c| fmt_num(stat(c))).collect();
            writeln!(csv, "{label},{method},{}", cells.join(",")).unwrap();
        }
    }
    write_file(&args.out, csv.as_bytes())?;

    let mut manifest = Manifest::new("analyze");
    if let Some(dir) = &args.input {
        manifest.push("in", dir.display());
    }
    if let Some(spec) = &args.corpus {
        manifest.push("corpus", spec);
        manifest.push("count", args.count);
        if let imageio::GeneratorKind::Random(s) | imageio::GeneratorKind::Texture(s) = spec.kind {
            manifest.push("seed", s);
        }
    }
    let names: Vec<_> = methods.iter().map(|m| m.name()).collect();
    manifest.push("methods", names.join(","));
    args.pool.record(&mut manifest);
    manifest.push("timing", args.timing);
    manifest.push("out", args.out.display());
    manifest.write(&sidecar(&args.out))
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<()> {
    let x = args.source.load()?;
    let bins = args.bins.unwrap_or((x.height() / 2).max(2));
    let bands = metrics::radial_power_spectrum(&x, bins)?;
    write_file(&args.out, spectrum_csv(&bands).as_bytes())?;

    let mut manifest = Manifest::new("spectrum");
    args.source.record(&mut manifest);
    manifest.push("bins", bins);
    manifest.push("out", args.out.display());
    manifest.write(&sidecar(&args.out))
}

fn spectrum_csv(bands: &[f64]) -> String {
    let mut csv = String::from("band,power\n");
    for (k, p) in bands.iter().enumerate() {
        writeln!(csv, "{k},{}", fmt_num(*p)).unwrap();
    }
    csv
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let x = args.source.load()?;
    let methods = ordered_methods(&args.methods)?;
    let configs: Vec<PoolConfig> = methods
        .iter()
        .map(|&m| {
            PoolConfig::new(m)
                .with_steps(args.steps)
                .with_normalization(args.norm)
                .with_alpha(args.alpha)
        })
        .collect();
    for cfg in &configs {
        cfg.validate()?;
        cfg.check_dims(x.height(), x.width())?;
    }
    fs::create_dir_all(&args.out)?;
    let ext = if x.channels() == 3 { "ppm" } else { "pgm" };
    imageio::write_pnm(args.out.join(format!("input.{ext}")), &x, args.maxval)?;

    let (lo, hi) = (x.min(), x.max());
    let mut summary = String::from(
        "method,step,height,width,mean,centroid_row,centroid_col,centroid_drift,overshoot,aliasing,spectrum_kl\n",
    );
    for cfg in &configs {
        let stages = downsample_stages(&x, cfg, &mut FftOrderState::new())?;
        for (k, y) in stages.iter().enumerate() {
            let step = k + 1;
            let stem = format!("{}_step{step}", cfg.method);
            imageio::write_pnm(args.out.join(format!("{stem}.{ext}")), y, args.maxval)?;
            let nbins = (y.height() / 2).max(2);
            let bands = metrics::radial_power_spectrum(y, nbins)?;
            write_file(&args.out.join(format!("{stem}_spectrum.csv")), spectrum_csv(&bands).as_bytes())?;

            let reference = metrics::band_limited_spectrum(&x, step as u32, nbins)?;
            let kl = metrics::spectrum_kl(&reference, &bands)?;
            let overshoot = if hi > lo { metrics::ringing_overshoot(y, lo, hi)? } else { 0.0 };
            let aliasing = metrics::aliasing_measure(&x, y, step as u32)?;
            let (cr, cc, drift) = match (metrics::centroid(y), metrics::centroid_drift(&x, y, step as u32)) {
                (Ok((r, c)), Ok(d)) => (fmt_num(r), fmt_num(c), fmt_num(d)),
                _ => ("nan".into(), "nan".into(), "nan".into()),
            };
            writeln!(
                summary,
                "{},{step},{},{},{},{cr},{cc},{drift},{},{},{}",
                cfg.method,
                y.height(),
                y.width(),
                fmt_num(y.mean()),
                fmt_num(overshoot),
                fmt_num(aliasing),
                fmt_num(kl)
            )
            .unwrap();
        }
    }
    write_file(&args.out.join("summary.csv"), summary.as_bytes())?;

    let mut manifest = Manifest::new("compare");
    args.source.record(&mut manifest);
    let names: Vec<_> = methods.iter().map(|m| m.name()).collect();
    manifest.push("methods", names.join(","));
    manifest.push("steps", args.steps);
    manifest.push("norm", args.norm);
    manifest.push("alpha", args.alpha);
    manifest.push("maxval", args.maxval);
    manifest.push("out", args.out.display());
    manifest.write(&args.out.join("manifest.txt"))
}

/// Flat `key=value` record of a run. Every key except `command` and `seed`
/// is the name of a command-line flag.
struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Self {
            lines: vec![("command".into(), command.into())],
        }
    }

    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.lines {
            writeln!(text, "{k}={v}").unwrap();
        }
        write_file(path, text.as_bytes())
    }
}

/// `report.csv` -> `report.csv.manifest`.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn replay(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    let mut argv = vec![OsString::from("asap")];
    let mut command = None;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("manifest line {}: expected key=value", n + 1)))?;
        match key {
            "command" => command = Some(value.to_string()),
            "seed" => {}
            "timing" => {
                if value == "true" {
                    argv.push("--timing".into());
                }
            }
            _ => {
                argv.push(format!("--{key}").into());
                argv.push(value.into());
            }
        }
    }
    let command = command.ok_or_else(|| Error::InvalidArgument("manifest has no command".into()))?;
    if command == "replay" {
        return Err(Error::InvalidArgument("manifest cannot replay itself".into()));
    }
    argv.insert(1, command.into());
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    dispatch(cli.command)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    Ok(())
}

/// Nine significant digits in scientific notation, e.g. `1.25000000e-3`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0.00000000e0");
        assert_eq!(fmt_num(1234.5), "1.23450000e3");
        assert_eq!(fmt_num(-0.000125), "-1.25000000e-4");
    }

    #[test]
    fn stats() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(std_dev(&[5.0]), 0.0);
    }

    #[test]
    fn methods_are_reordered_and_deduplicated() {
        let got = ordered_methods(&[PoolMethod::Asap, PoolMethod::Max, PoolMethod::Asap]).unwrap();
        assert_eq!(got, vec![PoolMethod::Max, PoolMethod::Asap]);
        assert!(ordered_methods(&[]).is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar(Path::new("out/r.csv")), PathBuf::from("out/r.csv.manifest"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(exit_code(&Error::UnsupportedMagic("P7".into())), 2);
        assert_eq!(
            exit_code(&Error::IndivisibleDims {
                step: 4,
                steps: 4,
                height: 3,
                width: 3
            }),
            3
        );
    }

    #[test]
    fn bad_flags_exit_one() {
        assert_eq!(run(["asap", "downsample", "--bogus"]), 1);
        assert_eq!(run(["asap", "downsample", "--gen", "disk:8x8:2"]), 1);
        assert_eq!(run(["asap", "--help"]), 0);
    }
}
