//! Lorentz kinematics of the detector pair and the length-contracted
//! azimuthal coordinate map.
//!
//! A boost along `x` contracts `(x, y) -> (x / gamma, y)`, so an azimuth
//! `phi` in the source frame is seen as `phi'` with `tan phi' = gamma tan phi`.
//! All azimuths crossing this API are normalized to `[0, 2pi)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Lorentz factor accepted. Past this `beta` rounds to 1 in f64.
pub const GAMMA_MAX: f64 = 1e6;

/// Validates a Lorentz factor: finite, `>= 1` and `<= GAMMA_MAX`.
pub fn check_gamma(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            reason: "must be finite",
        });
    }
    if gamma < 1.0 {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            reason: "must be ≥ 1",
        });
    }
    if gamma > GAMMA_MAX {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            reason: "must be ≤ 1e6",
        });
    }
    Ok(gamma)
}

/// Kinematic state of a frame moving relative to the source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub gamma: f64,
    /// Speed in units of `c`.
    pub beta: f64,
    pub rapidity: f64,
}

impl Frame {
    pub const REST: Frame = Frame {
        gamma: 1.0,
        beta: 0.0,
        rapidity: 0.0,
    };
}

pub fn frame_from_gamma(gamma: f64) -> Result<Frame> {
    let gamma = check_gamma(gamma)?;
    Ok(Frame {
        gamma,
        beta: beta_of_gamma(gamma),
        rapidity: gamma.acosh(),
    })
}

pub fn frame_from_beta(beta: f64) -> Result<Frame> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "must lie in [0, 1)",
        });
    }
    // (1 - b)(1 + b) keeps precision as beta -> 1
    let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
    let gamma = check_gamma(gamma)?;
    Ok(Frame {
        gamma,
        beta,
        rapidity: beta.atanh(),
    })
}

fn beta_of_gamma(gamma: f64) -> f64 {
    ((gamma - 1.0) * (gamma + 1.0)).sqrt() / gamma
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Length-contracted azimuth `phi'` with `tan phi' = gamma tan phi`.
///
/// Uses the quadrant-preserving branch, so the map is continuous and strictly
/// increasing on `[0, 2pi)` and fixes the four axis directions.
pub fn boosted_azimuth(phi: f64, gamma: f64) -> f64 {
    wrap_angle((gamma * phi.sin()).atan2(phi.cos()))
}

/// Inverse of [`boosted_azimuth`]: `tan phi = tan phi' / gamma`.
pub fn unboosted_azimuth(phi_prime: f64, gamma: f64) -> f64 {
    wrap_angle(phi_prime.sin().atan2(gamma * phi_prime.cos()))
}

/// `d phi / d phi'` for the contracted coordinate map.
pub fn azimuth_jacobian(phi_prime: f64, gamma: f64) -> f64 {
    let c = phi_prime.cos();
    gamma / ((gamma * gamma - 1.0) * c * c + 1.0)
}
