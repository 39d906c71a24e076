//! Length-contracted OAM projection holograms.
//!
//! A detector boosted along `x` projects onto `exp(i l phi')` with the
//! contracted azimuth `phi' = atan2(gamma y, x)`. Fields are pure phase in
//! `[0, 2pi)`, with no grating carrier.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numfmt::sig17;
use crate::relativity::{check_gamma, wrap_angle};

pub const DEFAULT_SIZE: usize = 512;
pub const DEFAULT_EXTENT: f64 = 1.0;

/// Phase of the contracted vortex at `(x, y)`; the origin maps to 0.
pub fn contracted_vortex_phase(l: i32, gamma: f64, x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    wrap_angle(l as f64 * (gamma * y).atan2(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HologramField {
    pub width: usize,
    pub height: usize,
    /// Physical half-width of the sampled square, normalized units.
    pub extent: f64,
    pub l: i32,
    pub gamma: f64,
    /// Row-major phases, row `j` holds the samples at `y(j)`.
    pub phase: Vec<f64>,
}

/// Centered sample coordinate for pixel `i` of `n`.
pub fn grid_coordinate(i: usize, n: usize, extent: f64) -> f64 {
    let half = (n - 1) as f64 / 2.0;
    (i as f64 - half) * (2.0 * extent / (n - 1) as f64)
}

pub fn generate_hologram(
    l: i32,
    gamma: f64,
    width: usize,
    height: usize,
    extent: f64,
) -> Result<HologramField> {
    generate_hologram_with(l, gamma, width, height, extent, Exec::default())
}

pub fn generate_hologram_with(
    l: i32,
    gamma: f64,
    width: usize,
    height: usize,
    extent: f64,
    exec: Exec,
) -> Result<HologramField> {
    let gamma = check_gamma(gamma)?;
    if width < 2 || height < 2 {
        return Err(Error::Precondition(format!(
            "hologram must be at least 2x2 pixels, got {width}x{height}"
        )));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Domain {
            name: "extent",
            value: extent,
            reason: "must be positive and finite",
        });
    }
    let mut phase = vec![0.0; width * height];
    exec.fill_chunks(&mut phase, width, |j, row| {
        let y = grid_coordinate(j, height, extent);
        for (i, p) in row.iter_mut().enumerate() {
            let x = grid_coordinate(i, width, extent);
            *p = contracted_vortex_phase(l, gamma, x, y);
        }
    });
    Ok(HologramField {
        width,
        height,
        extent,
        l,
        gamma,
        phase,
    })
}

impl HologramField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.phase[j * self.width + i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.phase.chunks(self.width)
    }

    /// 8-bit quantized pixels, `round(phase / 2pi * 255)`.
    pub fn quantized(&self) -> Vec<u8> {
        self.phase
            .iter()
            .map(|p| (p / TAU * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn export(&self, format: HologramFormat) -> Vec<u8> {
        match format {
            HologramFormat::Pgm8 => self.to_pgm8(),
            HologramFormat::Csv => self.to_csv().into_bytes(),
        }
    }

    /// Binary P5 graymap, maxval 255, rows top to bottom in field order.
    pub fn to_pgm8(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.quantized());
        out
    }

    /// One line per pixel row, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.phase.len() * 24);
        for row in self.rows() {
            for (i, p) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&sig17(*p));
            }
            out.push('\n');
        }
        out
    }

    /// `holo_l{l}_g{gamma}_{width}x{height}.{ext}`
    pub fn file_name(&self, format: HologramFormat) -> String {
        format!(
            "holo_l{}_g{}_{}x{}.{}",
            self.l,
            self.gamma,
            self.width,
            self.height,
            format.extension()
        )
    }
}

/// Parses a phase matrix written by [`HologramField::to_csv`].
pub fn parse_phase_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            line.split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("hologram csv line {}: {tok:?}: {e}", n + 1))
                    })
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HologramFormat {
    Pgm8,
    Csv,
}

impl HologramFormat {
    pub fn extension(self) -> &'static str {
        match self {
            HologramFormat::Pgm8 => "pgm",
            HologramFormat::Csv => "csv",
        }
    }
}

impl FromStr for HologramFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" | "pgm8" => Ok(HologramFormat::Pgm8),
            "csv" => Ok(HologramFormat::Csv),
            other => Err(Error::Usage(format!(
                "unsupported hologram format {other:?} (expected pgm or csv)"
            ))),
        }
    }
}

impl fmt::Display for HologramFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HologramFormat::Pgm8 => "pgm8",
            HologramFormat::Csv => "csv",
        })
    }
}

/// Unwrapped phase accumulated once around the origin-centered circle of
/// `radius`, sampled at `samples` points. Equals `2pi l` for any `gamma`.
pub fn accumulated_phase(l: i32, gamma: f64, radius: f64, samples: usize) -> f64 {
    let at = |k: usize| {
        let t = k as f64 * TAU / samples as f64;
        contracted_vortex_phase(l, gamma, radius * t.cos(), radius * t.sin())
    };
    let mut total = 0.0;
    let mut prev = at(0);
    for k in 1..=samples {
        let cur = at(k % samples);
        let mut d = cur - prev;
        d -= TAU * (d / TAU).round();
        total += d;
        prev = cur;
    }
    total
}
