//! Seeded Monte Carlo coincidence counts for a boosted detector pair.
//!
//! Each `(l_a, l_b)` cell draws an independent Poisson count with mean
//!
//! ```text
//! integration * (pair_rate * P(l_b | l_a) + accidental_rate)
//! ```
//!
//! where `P(l_b | l_a)` is the conditional spectrum with peak 1. Every cell
//! owns a generator keyed by `(seed, l_a, l_b)`, so spectra do not depend on
//! fill order or thread count.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::relativity::check_gamma;
use crate::spectrum::{conditional_unchecked, contraction_ratio, ConditionalSlice, OamWindow, WindowPair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Expected true coincidences per unit integration at the spectrum peak.
    pub pair_rate: f64,
    /// Expected accidental coincidences per cell per unit integration.
    pub accidental_rate: f64,
    /// Exposure multiplier.
    pub integration: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            pair_rate: 1e4,
            accidental_rate: 5.0,
            integration: 1.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            }
        };
        positive("pair_rate", self.pair_rate)?;
        positive("integration", self.integration)?;
        if !(self.accidental_rate.is_finite() && self.accidental_rate >= 0.0) {
            return Err(Error::Domain {
                name: "accidental_rate",
                value: self.accidental_rate,
                reason: "must be non-negative and finite",
            });
        }
        Ok(())
    }

    /// Expected accidental count per cell over the whole exposure.
    pub fn accidental_mean(&self) -> f64 {
        self.accidental_rate * self.integration
    }

    pub fn cell_mean(&self, conditional: f64) -> f64 {
        self.integration * (self.pair_rate * conditional + self.accidental_rate)
    }
}

/// Integer coincidence counts over an `(l_a, l_b)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CountSpectrum {
    pub window_a: OamWindow,
    pub window_b: OamWindow,
    /// Row-major, rows indexed by `l_a`.
    pub counts: Vec<u64>,
    pub seed: u64,
    pub model: NoiseModel,
    pub gamma_encoded: f64,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator owned by one cell of one run.
pub fn cell_rng(seed: u64, l_a: i32, l_b: i32) -> ChaCha8Rng {
    let key = mix64(mix64(mix64(seed) ^ l_a as u32 as u64) ^ l_b as u32 as u64);
    ChaCha8Rng::seed_from_u64(key)
}

pub fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is finite and positive here, so construction cannot fail
    let dist = Poisson::new(mean).expect("valid Poisson mean");
    dist.sample(rng) as u64
}

pub fn simulate_counts(
    gamma: f64,
    windows: (OamWindow, OamWindow),
    model: NoiseModel,
    seed: u64,
) -> Result<CountSpectrum> {
    simulate_counts_with(gamma, windows, model, seed, Exec::default())
}

pub fn simulate_counts_with(
    gamma: f64,
    (window_a, window_b): (OamWindow, OamWindow),
    model: NoiseModel,
    seed: u64,
    exec: Exec,
) -> Result<CountSpectrum> {
    let gamma = check_gamma(gamma)?;
    model.validate()?;
    let q = contraction_ratio(gamma);
    let cols = window_b.len();
    let mut counts = vec![0u64; window_a.len() * cols];
    exec.fill_chunks(&mut counts, cols, |row, out| {
        let l_a = window_a.l_at(row);
        for (c, l_b) in out.iter_mut().zip(window_b.iter()) {
            let mean = model.cell_mean(conditional_unchecked(l_a, l_b, q));
            *c = poisson_draw(&mut cell_rng(seed, l_a, l_b), mean);
        }
    });
    Ok(CountSpectrum {
        window_a,
        window_b,
        counts,
        seed,
        model,
        gamma_encoded: gamma,
    })
}

impl CountSpectrum {
    pub fn get(&self, l_a: i32, l_b: i32) -> Option<u64> {
        let i = self.window_a.index_of(l_a)?;
        let j = self.window_b.index_of(l_b)?;
        Some(self.counts[i * self.window_b.len() + j])
    }

    pub fn cells(&self) -> impl Iterator<Item = (i32, i32, u64)> + '_ {
        let wb = self.window_b;
        self.window_a
            .iter()
            .flat_map(move |a| wb.iter().map(move |b| (a, b)))
            .zip(self.counts.iter().copied())
            .map(|((a, b), c)| (a, b, c))
    }

    /// Raw counts as a real-valued grid, with no background removed.
    pub fn to_grid(&self) -> SpectrumGrid {
        SpectrumGrid {
            window_a: self.window_a,
            window_b: self.window_b,
            values: self.counts.iter().map(|&c| c as f64).collect(),
        }
    }

    /// CSV with header `l_a,l_b,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l_a,l_b,count\n");
        for (a, b, c) in self.cells() {
            let _ = writeln!(out, "{a},{b},{c}");
        }
        out
    }

    pub fn sidecar(&self) -> CountSidecar {
        CountSidecar {
            gamma_encoded: self.gamma_encoded,
            seed: self.seed,
            model: self.model,
            windows: WindowPair {
                a: self.window_a,
                b: self.window_b,
            },
        }
    }

    /// Rebuilds a spectrum from its CSV and JSON sidecar.
    pub fn from_csv(csv_text: &str, sidecar: &CountSidecar) -> Result<Self> {
        let (wa, wb) = (sidecar.windows.a, sidecar.windows.b);
        let mut counts = vec![None; wa.len() * wb.len()];
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["l_a", "l_b", "count"] {
            return Err(Error::Parse(format!(
                "expected header l_a,l_b,count, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        for (n, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |k: usize| -> Result<&str> {
                record
                    .get(k)
                    .ok_or_else(|| Error::Parse(format!("count csv row {}: missing field", n + 1)))
            };
            let parse_err = |e: &dyn fmt::Display| Error::Parse(format!("count csv row {}: {e}", n + 1));
            let l_a: i32 = field(0)?.trim().parse().map_err(|e| parse_err(&e))?;
            let l_b: i32 = field(1)?.trim().parse().map_err(|e| parse_err(&e))?;
            let c: u64 = field(2)?.trim().parse().map_err(|e| parse_err(&e))?;
            let (Some(i), Some(j)) = (wa.index_of(l_a), wb.index_of(l_b)) else {
                return Err(Error::Parse(format!(
                    "count csv row {}: cell ({l_a}, {l_b}) outside the sidecar windows",
                    n + 1
                )));
            };
            counts[i * wb.len() + j] = Some(c);
        }
        let counts = counts
            .into_iter()
            .collect::<Option<Vec<u64>>>()
            .ok_or_else(|| Error::Parse("count csv does not cover every cell".into()))?;
        sidecar.model.validate()?;
        Ok(CountSpectrum {
            window_a: wa,
            window_b: wb,
            counts,
            seed: sidecar.seed,
            model: sidecar.model,
            gamma_encoded: sidecar.gamma_encoded,
        })
    }
}

/// Metadata written next to a count CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSidecar {
    pub gamma_encoded: f64,
    pub seed: u64,
    pub model: NoiseModel,
    pub windows: WindowPair,
}

/// Real-valued `(l_a, l_b)` grid, the output of background subtraction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    pub window_a: OamWindow,
    pub window_b: OamWindow,
    pub values: Vec<f64>,
}

impl SpectrumGrid {
    pub fn row(&self, l_a: i32) -> Option<&[f64]> {
        let cols = self.window_b.len();
        let i = self.window_a.index_of(l_a)?;
        Some(&self.values[i * cols..(i + 1) * cols])
    }

    pub fn slice(&self, l_a: i32) -> Result<ConditionalSlice> {
        let row = self.row(l_a).ok_or_else(|| {
            Error::Precondition(format!(
                "l_a = {l_a} outside [{}, {}]",
                self.window_a.l_min, self.window_a.l_max
            ))
        })?;
        ConditionalSlice::new(l_a, self.window_b, row.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subtraction {
    None,
    Accidental,
    Minimum,
    Both,
}

impl FromStr for Subtraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Subtraction::None),
            "accidental" => Ok(Subtraction::Accidental),
            "minimum" => Ok(Subtraction::Minimum),
            "both" => Ok(Subtraction::Both),
            other => Err(Error::Usage(format!(
                "unknown subtraction {other:?} (expected none, accidental, minimum or both)"
            ))),
        }
    }
}

impl fmt::Display for Subtraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subtraction::None => "none",
            Subtraction::Accidental => "accidental",
            Subtraction::Minimum => "minimum",
            Subtraction::Both => "both",
        })
    }
}

/// Removes background from a count spectrum. Accidentals are removed
/// uniformly, the minimum per conditional slice (row), and results are
/// clamped at zero.
pub fn subtract_background(counts: &CountSpectrum, mode: Subtraction) -> SpectrumGrid {
    let mut grid = counts.to_grid();
    if matches!(mode, Subtraction::Accidental | Subtraction::Both) {
        let acc = counts.model.accidental_mean();
        grid.values.iter_mut().for_each(|v| *v = (*v - acc).max(0.0));
    }
    if matches!(mode, Subtraction::Minimum | Subtraction::Both) {
        subtract_row_minimum(&mut grid);
    }
    grid
}

/// Subtracts each row's minimum from that row.
pub fn subtract_row_minimum(grid: &mut SpectrumGrid) {
    let cols = grid.window_b.len();
    for row in grid.values.chunks_mut(cols) {
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.iter_mut().for_each(|v| *v = (*v - min).max(0.0));
    }
}
