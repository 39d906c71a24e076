//! `lorentz-oam` command-line front end.
//!
//! Every command writes plain data files (CSV, JSON, PGM) into `--out` and
//! a `*.meta.json` sidecar recording the producing parameters. A
//! `--config PATH` file of `key = value` lines supplies defaults for any
//! flag; flags given on the command line win.
//!
//! Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{estimate_gamma_fit, estimate_gamma_msum, rapidity_and_velocity};
use crate::exec::Exec;
use crate::experiment::{batch_csv, run_trials, summarize, ExperimentConfig};
use crate::hologram::{self, HologramFormat};
use crate::relativity::check_gamma;
use crate::simulate::{simulate_counts, subtract_background, CountSidecar, CountSpectrum, NoiseModel, Subtraction};
use crate::spectrum::{measurement_sum, mode_count_closed, JointSpectrum, OamWindow};

#[derive(Debug, Parser)]
#[command(name = "lorentz-oam", version, about = "Relativistic OAM spectra, holograms, and Lorentz-factor estimation")]
pub struct Cli {
    /// File of `key = value` lines mirroring the command's flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint spectrum and the l_a = 0 conditional slice.
    Spectrum(SpectrumArgs),
    /// Mode count, measurement sum, rapidity and speed over a gamma list.
    Sweep(SweepArgs),
    /// Length-contracted OAM projection hologram.
    Hologram(HologramArgs),
    /// Seeded Poisson coincidence counts.
    Simulate(SimulateArgs),
    /// Recover gamma from a simulated count spectrum.
    Estimate(EstimateArgs),
    /// Simulate, subtract background and estimate for each encoded gamma.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Json,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtractionArg {
    None,
    Accidental,
    Minimum,
    Both,
}

impl From<SubtractionArg> for Subtraction {
    fn from(s: SubtractionArg) -> Self {
        match s {
            SubtractionArg::None => Subtraction::None,
            SubtractionArg::Accidental => Subtraction::Accidental,
            SubtractionArg::Minimum => Subtraction::Minimum,
            SubtractionArg::Both => Subtraction::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    MSum,
    LeastSquares,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Omega,
    M,
    Eta,
    Beta,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 20)]
    pub half_width: u32,
    #[arg(long, default_value_t = 1)]
    pub n_modes: u64,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    pub format: DataFormat,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated Lorentz factors.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Metric::Omega, Metric::M, Metric::Eta, Metric::Beta])]
    pub metrics: Vec<Metric>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct HologramArgs {
    /// OAM index.
    #[arg(long, short = 'l', allow_hyphen_values = true)]
    pub l: i32,
    #[arg(long)]
    pub gamma: f64,
    /// `N` for an N x N field or `WxH`.
    #[arg(long, default_value = "512")]
    pub size: String,
    #[arg(long, default_value_t = hologram::DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long, value_enum, default_value_t = DataFormat::Pgm)]
    pub format: DataFormat,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 1e4)]
    pub pair_rate: f64,
    #[arg(long, default_value_t = 5.0)]
    pub accidental_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub integration: f64,
}

impl NoiseArgs {
    fn model(&self) -> NoiseModel {
        NoiseModel {
            pair_rate: self.pair_rate,
            accidental_rate: self.accidental_rate,
            integration: self.integration,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 20)]
    pub half_width: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Count CSV written by `simulate`; its `.json` sidecar must sit next to it.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub l_a: i32,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = SubtractionArg::Both)]
    pub subtraction: SubtractionArg,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub gamma_max: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 20.0])]
    pub gamma: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub runs: u32,
    #[arg(long, default_value_t = 40)]
    pub half_width: u32,
    #[arg(long, value_enum, default_value_t = SubtractionArg::Both)]
    pub subtraction: SubtractionArg,
    /// Estimate from exact conditional spectra instead of simulated counts.
    #[arg(long)]
    pub noiseless: bool,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub gamma_max: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Config keys that map to boolean switches.
const SWITCHES: &[&str] = &["noiseless"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!("config line {}: expected `key = value`, got {raw:?}", n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Usage(format!("config line {}: invalid key {key:?}", n + 1)));
        }
        out.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&eq)
    })
}

/// Splices config entries into `args` right after the subcommand, skipping
/// keys the command line already sets.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| Error::Usage("--config needs a path".into()))?,
            );
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Usage(format!("--config {}: {e}", path.display())))?;
    let entries = parse_config(&text)?;

    // first non-flag token after the program name is the subcommand
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .ok_or_else(|| Error::Usage("--config given without a subcommand".into()))?;
    let mut injected = Vec::new();
    for (key, value) in entries {
        if flag_present(&rest, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                other => {
                    return Err(Error::Usage(format!("config key {key}: expected a boolean, got {other:?}")))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    rest.splice(sub..sub, injected);
    Ok(rest)
}

/// Runs the CLI on `args` (including the program name), returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(written) => {
            for p in written {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn validated_gamma(flag: &str, g: f64) -> Result<f64> {
    check_gamma(g).map_err(|e| Error::Usage(format!("{flag}: {e}")))
}

pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Hologram(a) => cmd_hologram(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a, P: Serialize> {
    command: &'a str,
    version: &'a str,
    params: &'a P,
    files: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl AsRef<Path>, bytes: impl Into<Vec<u8>>) {
        self.files.push((self.dir.join(name), bytes.into()));
    }

    /// Adds `<stem>.meta.json` describing the producing command, then
    /// writes everything. Nothing touches disk until all content exists.
    fn commit<P: Serialize>(mut self, command: &str, stem: &str, params: &P) -> Result<Vec<PathBuf>> {
        let meta = Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            params,
            files: self
                .files
                .iter()
                .filter_map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let meta = serde_json::to_vec_pretty(&meta)?;
        self.add(format!("{stem}.meta.json"), meta);
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        Ok(self.files.into_iter().map(|(p, _)| p).collect())
    }
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<Vec<PathBuf>> {
    let gamma = validated_gamma("--gamma", a.gamma)?;
    if a.n_modes == 0 {
        return Err(Error::Usage("--n-modes: must be ≥ 1".into()));
    }
    let w = OamWindow::symmetric(a.half_width);
    let js = JointSpectrum::closed_form(gamma, w, w, a.n_modes, Exec::default())?;
    let slice = js.conditional(0).expect("symmetric window contains 0");
    let stem = format!("spectrum_g{gamma}_hw{}", a.half_width);
    let mut out = Outputs::new(&a.out);
    match a.format {
        DataFormat::Csv => out.add(format!("{stem}.csv"), js.to_csv()),
        DataFormat::Json => out.add(format!("{stem}.json"), js.to_json()?),
        DataFormat::Pgm => return Err(Error::Usage("--format: spectrum supports csv or json".into())),
    }
    out.add(format!("conditional_l0_g{gamma}_hw{}.csv", a.half_width), slice.to_csv());
    out.commit("spectrum", &stem, a)
}

/// CSV of closed-form metrics over the gamma list.
pub fn sweep_csv(gammas: &[f64], metrics: &[Metric]) -> Result<String> {
    let mut out = String::from("gamma");
    for m in metrics {
        out.push(',');
        out.push_str(match m {
            Metric::Omega => "omega",
            Metric::M => "m",
            Metric::Eta => "eta",
            Metric::Beta => "beta",
        });
    }
    out.push('\n');
    for &g in gammas {
        let (eta, beta) = rapidity_and_velocity(g)?;
        out.push_str(&g.to_string());
        for m in metrics {
            let v = match m {
                Metric::Omega => mode_count_closed(g)?,
                Metric::M => measurement_sum(g)?,
                Metric::Eta => eta,
                Metric::Beta => beta,
            };
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

fn cmd_sweep(a: &SweepArgs) -> Result<Vec<PathBuf>> {
    if a.gamma.is_empty() {
        return Err(Error::Usage("--gamma: list must not be empty".into()));
    }
    for &g in &a.gamma {
        validated_gamma("--gamma", g)?;
    }
    let mut out = Outputs::new(&a.out);
    out.add("sweep.csv", sweep_csv(&a.gamma, &a.metrics)?);
    out.commit("sweep", "sweep", a)
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("--size: expected N or WxH, got {s:?}"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w, h),
        None => (s, s),
    };
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    Ok((w, h))
}

fn cmd_hologram(a: &HologramArgs) -> Result<Vec<PathBuf>> {
    let gamma = validated_gamma("--gamma", a.gamma)?;
    let (w, h) = parse_size(&a.size)?;
    let format = match a.format {
        DataFormat::Pgm => HologramFormat::Pgm8,
        DataFormat::Csv => HologramFormat::Csv,
        DataFormat::Json => return Err(Error::Usage("--format: hologram supports pgm or csv".into())),
    };
    let field = hologram::generate_hologram(a.l, gamma, w, h, a.extent)?;
    let name = field.file_name(format);
    let stem = name.rsplit_once('.').map(|(s, _)| s.to_string()).unwrap_or_else(|| name.clone());
    let mut out = Outputs::new(&a.out);
    out.add(name, field.export(format));
    out.commit("hologram", &stem, a)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let gamma = validated_gamma("--gamma", a.gamma)?;
    let w = OamWindow::symmetric(a.half_width);
    let counts = simulate_counts(gamma, (w, w), a.noise.model(), a.seed)?;
    let stem = format!("counts_g{gamma}_s{}", a.seed);
    let mut out = Outputs::new(&a.out);
    out.add(format!("{stem}.csv"), counts.to_csv());
    out.add(format!("{stem}.json"), serde_json::to_vec_pretty(&counts.sidecar())?);
    out.commit("simulate", &stem, a)
}

/// Reads a count CSV and its JSON sidecar (same path, `.json` extension).
pub fn read_counts(csv_path: &Path) -> Result<CountSpectrum> {
    let side_path = csv_path.with_extension("json");
    let csv_text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let side_text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let sidecar: CountSidecar = serde_json::from_str(&side_text)?;
    CountSpectrum::from_csv(&csv_text, &sidecar)
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let counts = read_counts(&a.input)?;
    let grid = subtract_background(&counts, a.subtraction.into());
    let slice = grid.slice(a.l_a)?;
    let mut out = Outputs::new(&a.out);
    if matches!(a.method, MethodArg::MSum | MethodArg::Both) {
        let r = estimate_gamma_msum(&slice)?;
        out.add("fit_m_sum.json", serde_json::to_vec_pretty(&r)?);
    }
    if matches!(a.method, MethodArg::LeastSquares | MethodArg::Both) {
        let r = estimate_gamma_fit(&slice, (a.gamma_min, a.gamma_max))?;
        out.add("fit_least_squares.json", serde_json::to_vec_pretty(&r)?);
    }
    out.commit("estimate", "fit", a)
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<Vec<PathBuf>> {
    for &g in &a.gamma {
        validated_gamma("--gamma", g)?;
    }
    let cfg = ExperimentConfig {
        gammas: a.gamma.clone(),
        model: a.noise.model(),
        seed: a.seed,
        runs: a.runs,
        half_width: a.half_width,
        subtraction: a.subtraction.into(),
        noiseless: a.noiseless,
        l_a: 0,
        fit_bounds: (a.gamma_min, a.gamma_max),
    };
    let trials = run_trials(&cfg, Exec::default())?;
    let summary = summarize(&cfg, &trials)?;
    let mut out = Outputs::new(&a.out);
    out.add("experiment_batch.csv", batch_csv(&trials));
    out.add("experiment_summary.json", serde_json::to_vec_pretty(&summary)?);
    out.commit("experiment", "experiment", a)
}
