//! Joint and conditional OAM spectra of a photon pair measured by two
//! detectors boosted with Lorentz factor `gamma`.
//!
//! Length contraction breaks orthogonality of the OAM projections. The joint
//! probability depends only on `s = l_a + l_b`:
//!
//! ```text
//! P(l_a, l_b) = q^|s| / N   for even s,   0 for odd s,   q = (gamma - 1) / (gamma + 1)
//! ```
//!
//! Conditional quantities (`P(l_b | l_a) = N * P(l_a, l_b)`) are independent
//! of the source mode count `N`, which is only carried for joint spectra.
//! Spectra are never renormalized to unit total: the distorted projections
//! are not a POVM and their total probability exceeds one.

mod io;
pub mod oracle;
mod window;

pub use io::*;
pub use oracle::{joint_probability_quadrature, joint_probability_spdc_oracle};
pub use window::{OamWindow, DEFAULT_HALF_WIDTH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::relativity::check_gamma;

/// Geometric ratio `(gamma - 1) / (gamma + 1)` of the broadened spectrum.
pub fn contraction_ratio(gamma: f64) -> f64 {
    (gamma - 1.0) / (gamma + 1.0)
}

/// Whether `l_a + l_b` is even. Odd sums are forbidden.
pub fn even_sum(l_a: i32, l_b: i32) -> bool {
    (l_a as i64 + l_b as i64) % 2 == 0
}

/// Conditional probability `P(l_b | l_a)`, peak 1 at `l_b = -l_a`.
///
/// Uses `0^0 = 1`, so `gamma = 1` gives the Kronecker delta.
pub(crate) fn conditional_unchecked(l_a: i32, l_b: i32, q: f64) -> f64 {
    if !even_sum(l_a, l_b) {
        return 0.0;
    }
    let s = (l_a as i64 + l_b as i64).unsigned_abs();
    match i32::try_from(s) {
        Ok(s) => q.powi(s),
        Err(_) => 0.0,
    }
}

pub(crate) fn check_modes(n_modes: u64) -> Result<u64> {
    if n_modes == 0 {
        return Err(Error::Precondition("n_modes must be ≥ 1".into()));
    }
    Ok(n_modes)
}

pub fn joint_probability(l_a: i32, l_b: i32, gamma: f64, n_modes: u64) -> Result<f64> {
    let gamma = check_gamma(gamma)?;
    let n = check_modes(n_modes)?;
    Ok(conditional_unchecked(l_a, l_b, contraction_ratio(gamma)) / n as f64)
}

/// Bob's distribution at fixed `l_a`, over `window_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSlice {
    pub l_a: i32,
    pub window_b: OamWindow,
    pub values: Vec<f64>,
}

impl ConditionalSlice {
    pub fn new(l_a: i32, window_b: OamWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window_b.len() {
            return Err(Error::Precondition(format!(
                "slice has {} values for a window of {}",
                values.len(),
                window_b.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Precondition(format!(
                "slice values must be finite and non-negative, found {v}"
            )));
        }
        Ok(ConditionalSlice {
            l_a,
            window_b,
            values,
        })
    }

    pub fn value_at(&self, l_b: i32) -> Option<f64> {
        self.window_b.index_of(l_b).map(|i| self.values[i])
    }

    /// `(l_b, value)` pairs in window order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.window_b.iter().zip(self.values.iter().copied())
    }

    /// Scales the slice so that the cell at `l_b = -l_a` equals 1.
    pub fn peak_normalized(&self) -> Result<ConditionalSlice> {
        let peak = self.anchor_value()?;
        if peak <= 0.0 {
            return Err(Error::Degenerate(format!(
                "slice value at l_b = {} is {peak}, cannot normalize",
                -(self.l_a as i64)
            )));
        }
        Ok(ConditionalSlice {
            l_a: self.l_a,
            window_b: self.window_b,
            values: self.values.iter().map(|v| v / peak).collect(),
        })
    }

    /// Value at the anti-correlation peak `l_b = -l_a`.
    pub fn anchor_value(&self) -> Result<f64> {
        self.value_at(self.l_a.checked_neg().unwrap_or(i32::MAX))
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "window [{}, {}] does not contain l_b = -l_a = {}",
                    self.window_b.l_min,
                    self.window_b.l_max,
                    -(self.l_a as i64)
                ))
            })
    }
}

pub fn conditional_slice(l_a: i32, window: OamWindow, gamma: f64) -> Result<ConditionalSlice> {
    let q = contraction_ratio(check_gamma(gamma)?);
    let values = window
        .iter()
        .map(|l_b| conditional_unchecked(l_a, l_b, q))
        .collect();
    Ok(ConditionalSlice {
        l_a,
        window_b: window,
        values,
    })
}

/// Dense `(l_a, l_b)` probability matrix, rows indexed by `l_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectrum {
    pub gamma: f64,
    pub window_a: OamWindow,
    pub window_b: OamWindow,
    pub n_modes: u64,
    /// Row-major, `window_a.len()` rows of `window_b.len()` entries.
    pub values: Vec<f64>,
}

impl JointSpectrum {
    pub fn closed_form(
        gamma: f64,
        window_a: OamWindow,
        window_b: OamWindow,
        n_modes: u64,
        exec: Exec,
    ) -> Result<Self> {
        let q = contraction_ratio(check_gamma(gamma)?);
        let n = check_modes(n_modes)? as f64;
        Ok(Self::fill(gamma, window_a, window_b, n_modes, exec, |l_a, l_b| {
            conditional_unchecked(l_a, l_b, q) / n
        }))
    }

    /// Same spectrum evaluated by trapezoid quadrature of the overlap integral.
    pub fn quadrature(
        gamma: f64,
        window_a: OamWindow,
        window_b: OamWindow,
        n_modes: u64,
        panels: usize,
        exec: Exec,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        check_modes(n_modes)?;
        oracle::check_panels(panels)?;
        Ok(Self::fill(gamma, window_a, window_b, n_modes, exec, |l_a, l_b| {
            oracle::overlap_quadrature(l_a as i64 + l_b as i64, gamma, n_modes, panels)
        }))
    }

    fn fill<F>(
        gamma: f64,
        window_a: OamWindow,
        window_b: OamWindow,
        n_modes: u64,
        exec: Exec,
        cell: F,
    ) -> Self
    where
        F: Fn(i32, i32) -> f64 + Sync + Send,
    {
        let cols = window_b.len();
        let mut values = vec![0.0; window_a.len() * cols];
        exec.fill_chunks(&mut values, cols, |row, out| {
            let l_a = window_a.l_at(row);
            for (v, l_b) in out.iter_mut().zip(window_b.iter()) {
                *v = cell(l_a, l_b);
            }
        });
        JointSpectrum {
            gamma,
            window_a,
            window_b,
            n_modes,
            values,
        }
    }

    pub fn get(&self, l_a: i32, l_b: i32) -> Option<f64> {
        let i = self.window_a.index_of(l_a)?;
        let j = self.window_b.index_of(l_b)?;
        Some(self.values[i * self.window_b.len() + j])
    }

    pub fn row(&self, l_a: i32) -> Option<&[f64]> {
        let cols = self.window_b.len();
        let i = self.window_a.index_of(l_a)?;
        Some(&self.values[i * cols..(i + 1) * cols])
    }

    /// Conditional slice `N * P(l_a, .)`.
    pub fn conditional(&self, l_a: i32) -> Option<ConditionalSlice> {
        let n = self.n_modes as f64;
        self.row(l_a).map(|r| ConditionalSlice {
            l_a,
            window_b: self.window_b,
            values: r.iter().map(|v| v * n).collect(),
        })
    }

    /// `(l_a, l_b, value)` triples in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        let wb = self.window_b;
        self.window_a
            .iter()
            .flat_map(move |a| wb.iter().map(move |b| (a, b)))
            .zip(self.values.iter().copied())
            .map(|((a, b), v)| (a, b, v))
    }
}

/// Total conditional probability `M = (gamma + 1/gamma) / 2` over all `l_b`.
pub fn measurement_sum(gamma: f64) -> Result<f64> {
    let g = check_gamma(gamma)?;
    Ok(0.5 * (g + g.recip()))
}

/// `M` restricted to a finite detection window. Never exceeds
/// [`measurement_sum`] and converges to it as the window grows.
pub fn measurement_sum_truncated(l_a: i32, window: OamWindow, gamma: f64) -> Result<f64> {
    let slice = conditional_slice(l_a, window, gamma)?;
    slice.anchor_value()?;
    Ok(slice.values.iter().sum())
}

/// Closed-form effective mode count of the conditional spectrum.
pub fn mode_count_closed(gamma: f64) -> Result<f64> {
    let g = check_gamma(gamma)?;
    let g2 = g * g;
    Ok((1.0 + g2).powi(3) / (g * (1.0 + 6.0 * g2 + g2 * g2)))
}

/// Inverse participation ratio `(sum v)^2 / sum v^2`. Scale invariant.
pub fn mode_count_empirical(slice: &ConditionalSlice) -> Result<f64> {
    let (s1, s2) = slice
        .values
        .iter()
        .fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v));
    if s2 <= 0.0 {
        return Err(Error::Degenerate("mode count of an all-zero slice".into()));
    }
    Ok(s1 * s1 / s2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// Mean `l_b` of the normalized distribution.
    pub mean: f64,
    /// Standard deviation of `l_b` of the normalized distribution.
    pub std: f64,
    /// `sum v * l_b` without normalization.
    pub first_moment_unnormalized: f64,
    /// `sum v`.
    pub total: f64,
}

pub fn spectrum_moments(slice: &ConditionalSlice) -> Result<Moments> {
    let total: f64 = slice.values.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("moments of a zero-sum slice".into()));
    }
    let first: f64 = slice.iter().map(|(l, v)| v * l as f64).sum();
    let mean = first / total;
    // central second moment avoids cancellation for large |l_a|
    let var: f64 = slice
        .iter()
        .map(|(l, v)| v * (l as f64 - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(Moments {
        mean,
        std: var.sqrt(),
        first_moment_unnormalized: first,
        total,
    })
}
