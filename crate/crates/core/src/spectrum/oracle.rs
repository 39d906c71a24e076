//! Numerical oracles for the closed-form joint probability.
//!
//! Both evaluate the overlap integrals directly, without the residue
//! calculus behind the closed form, so they can check it independently.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::relativity::{azimuth_jacobian, check_gamma};
use crate::spectrum::check_modes;

pub const DEFAULT_PANELS: usize = 4096;
pub const MIN_PANELS: usize = 64;
pub const DEFAULT_RADIAL_CUTOFF: f64 = 6.0;
pub const DEFAULT_SPDC_GRID: usize = 1024;
pub const MIN_SPDC_GRID: usize = 256;

pub(crate) fn check_panels(panels: usize) -> Result<usize> {
    if panels < MIN_PANELS {
        return Err(Error::Precondition(format!(
            "quadrature needs at least {MIN_PANELS} panels, got {panels}"
        )));
    }
    Ok(panels)
}

/// Angle `s * 2pi k / panels` reduced exactly through integer arithmetic.
fn grid_phase(s: i64, k: usize, panels: usize) -> f64 {
    let p = panels as i64;
    let idx = (s.rem_euclid(p) * k as i64) % p;
    idx as f64 * TAU / panels as f64
}

pub(crate) fn overlap_quadrature(s: i64, gamma: f64, n_modes: u64, panels: usize) -> f64 {
    let h = TAU / panels as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..panels {
        let jac = azimuth_jacobian(k as f64 * h, gamma);
        let (sin, cos) = grid_phase(s, k, panels).sin_cos();
        re += jac * cos;
        im -= jac * sin;
    }
    // h / 2pi = 1 / panels
    let norm = panels as f64 * (n_modes as f64).sqrt();
    (re * re + im * im) / (norm * norm)
}

/// Joint probability by composite trapezoid quadrature of the overlap
/// integral over the contracted azimuth. The integrand is smooth and
/// periodic, so the rule converges geometrically in `panels`.
pub fn joint_probability_quadrature(
    l_a: i32,
    l_b: i32,
    gamma: f64,
    n_modes: u64,
    panels: usize,
) -> Result<f64> {
    let gamma = check_gamma(gamma)?;
    let n = check_modes(n_modes)?;
    let panels = check_panels(panels)?;
    Ok(overlap_quadrature(l_a as i64 + l_b as i64, gamma, n, panels))
}

/// Unnormalized joint probability from the two-dimensional Gaussian
/// two-photon overlap seen by the boosted detectors:
///
/// ```text
/// | ∫∫ exp(-r^2 ((gamma^2 - 1) cos^2 phi + 1)) exp(-i s phi) r dr dphi |^2
/// ```
///
/// Trapezoid in `phi` and composite Simpson in `r` on `[0, radial_cutoff]`,
/// each with `grid` intervals. Proportional to the closed form with a
/// constant that depends on `gamma` only.
pub fn joint_probability_spdc_oracle(
    l_a: i32,
    l_b: i32,
    gamma: f64,
    radial_cutoff: f64,
    grid: usize,
) -> Result<f64> {
    let gamma = check_gamma(gamma)?;
    // exp(-R^2) tail must be below 1e-12
    let min_cutoff = (12.0 * std::f64::consts::LN_10).sqrt();
    if !(radial_cutoff.is_finite() && radial_cutoff >= min_cutoff) {
        return Err(Error::Domain {
            name: "radial_cutoff",
            value: radial_cutoff,
            reason: "must be ≥ 5.26 so the Gaussian tail is negligible",
        });
    }
    if grid < MIN_SPDC_GRID {
        return Err(Error::Precondition(format!(
            "SPDC oracle needs grid ≥ {MIN_SPDC_GRID}, got {grid}"
        )));
    }
    let s = l_a as i64 + l_b as i64;
    let radial_steps = grid + grid % 2;
    let dr = radial_cutoff / radial_steps as f64;
    let simpson = |i: usize| -> f64 {
        if i == 0 || i == radial_steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };

    let dphi = TAU / grid as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..grid {
        let c = (k as f64 * dphi).cos();
        let stretch = (gamma * gamma - 1.0) * c * c + 1.0;
        let radial: f64 = (0..=radial_steps)
            .map(|i| {
                let r = i as f64 * dr;
                simpson(i) * r * (-r * r * stretch).exp()
            })
            .sum::<f64>()
            * dr
            / 3.0;
        let (sin, cos) = grid_phase(s, k, grid).sin_cos();
        re += radial * cos;
        im -= radial * sin;
    }
    re *= dphi;
    im *= dphi;
    Ok(re * re + im * im)
}
