//! Lorentz-factor recovery from conditional OAM spectra.
//!
//! Two estimators, both anchored on the peak cell `l_b = -l_a`:
//!
//! - `m_sum`: sum the peak-normalized even-sum cells to get `M` and invert
//!   `M = (gamma + 1/gamma) / 2`.
//! - `least_squares`: fit the peak-normalized model `q(gamma)^|l_a + l_b|`
//!   to the slice with equal cell weights.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relativity::{check_gamma, frame_from_gamma, GAMMA_MAX};
use crate::spectrum::{conditional_unchecked, contraction_ratio, even_sum, ConditionalSlice, OamWindow};

/// Points in the logarithmic pre-scan of the least-squares objective.
pub const FIT_GRID_POINTS: usize = 96;
/// Final bracket width of the golden-section refinement.
pub const FIT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_FIT_BOUNDS: (f64, f64) = (1.0, 100.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MSum,
    LeastSquares,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MSum => "m_sum",
            Method::LeastSquares => "least_squares",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m_sum" | "msum" => Ok(Method::MSum),
            "least_squares" | "lsq" => Ok(Method::LeastSquares),
            other => Err(Error::Usage(format!(
                "unknown method {other:?} (expected m_sum or least_squares)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma_meas: f64,
    pub method: Method,
    /// Sum of squared errors for least squares, 0 for the measurement sum.
    pub residual: f64,
    pub eta: f64,
    pub beta: f64,
    pub window: OamWindow,
    pub l_a: i32,
}

impl FitResult {
    fn new(gamma_meas: f64, method: Method, residual: f64, slice: &ConditionalSlice) -> Result<Self> {
        let (eta, beta) = rapidity_and_velocity(gamma_meas)?;
        Ok(FitResult {
            gamma_meas,
            method,
            residual,
            eta,
            beta,
            window: slice.window_b,
            l_a: slice.l_a,
        })
    }
}

/// Inverts the measurement sum: `gamma = M + sqrt(M^2 - 1)`.
pub fn gamma_from_m(m: f64) -> Result<f64> {
    if !(m.is_finite() && m >= 1.0) {
        return Err(Error::Domain {
            name: "M",
            value: m,
            reason: "must be ≥ 1 (even-sum total fell below the physical floor)",
        });
    }
    // (m - 1)(m + 1) avoids cancellation near m = 1
    Ok(m + ((m - 1.0) * (m + 1.0)).sqrt())
}

/// `(eta, beta)` with `cosh(eta) = gamma` and `beta = sqrt(1 - 1/gamma^2)`.
pub fn rapidity_and_velocity(gamma_meas: f64) -> Result<(f64, f64)> {
    let f = frame_from_gamma(gamma_meas)?;
    Ok((f.rapidity, f.beta))
}

/// Measurement-sum estimate from one conditional slice.
pub fn estimate_gamma_msum(slice: &ConditionalSlice) -> Result<FitResult> {
    let norm = slice.peak_normalized()?;
    let l_a = slice.l_a;
    let m: f64 = norm
        .iter()
        .filter(|(l_b, _)| even_sum(l_a, *l_b))
        .map(|(_, v)| v)
        .sum();
    let gamma = if m < 1.0 {
        warn!("measurement sum {m} below 1 at l_a = {l_a}; clamping gamma to 1");
        1.0
    } else {
        gamma_from_m(m)?.min(GAMMA_MAX)
    };
    FitResult::new(gamma, Method::MSum, 0.0, slice)
}

/// Sum of squared differences between a peak-normalized slice and the model.
pub fn fit_objective(norm: &ConditionalSlice, gamma: f64) -> f64 {
    let q = contraction_ratio(gamma);
    norm.iter()
        .map(|(l_b, v)| {
            let d = v - conditional_unchecked(norm.l_a, l_b, q);
            d * d
        })
        .sum()
}

fn check_bounds((lo, hi): (f64, f64)) -> Result<(f64, f64)> {
    let ok = lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi > lo && hi <= GAMMA_MAX;
    if !ok {
        return Err(Error::Usage(format!(
            "gamma bounds ({lo}, {hi}) must satisfy 1 ≤ lo < hi ≤ 1e6"
        )));
    }
    Ok((lo, hi))
}

/// Least-squares estimate over `gamma_bounds`.
///
/// Scans the objective on a logarithmic grid, then refines the best bracket
/// by golden-section search.
pub fn estimate_gamma_fit(slice: &ConditionalSlice, gamma_bounds: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = check_bounds(gamma_bounds)?;
    let norm = slice.peak_normalized()?;
    let objective = |g: f64| fit_objective(&norm, g);

    let n = FIT_GRID_POINTS;
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&g| objective(g)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    if values.iter().all(|v| *v == values[0]) {
        return Err(Error::Degenerate("least-squares objective is flat".into()));
    }

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(n - 1)];
    let (mut x, mut fx) = golden_section_min(objective, a, b, FIT_TOLERANCE);
    if values[best] < fx {
        x = grid[best];
        fx = values[best];
    }
    FitResult::new(check_gamma(x)?, Method::LeastSquares, fx, slice)
}

/// Golden-section minimization of `f` on `[a, b]` down to a bracket of
/// width `tol`. Returns the best point seen and its value.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // endpoints matter when the minimum sits on a bound
    [(a, f(a)), (b, f(b)), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{conditional_slice, measurement_sum};

    #[test]
    fn gamma_from_m_examples() {
        assert_eq!(gamma_from_m(1.0).unwrap(), 1.0);
        assert!((gamma_from_m(1.25).unwrap() - 2.0).abs() < 1e-15);
        assert!((gamma_from_m(10.025).unwrap() - 20.0).abs() < 1e-12);
        assert!(gamma_from_m(0.99).is_err());
        assert!(gamma_from_m(f64::NAN).is_err());
    }

    #[test]
    fn gamma_from_m_inverts_measurement_sum() {
        for i in 0..=990 {
            let g = 1.0 + i as f64 * 0.1;
            let back = gamma_from_m(measurement_sum(g).unwrap()).unwrap();
            assert!(((back - g) / g).abs() < 1e-10, "{g} -> {back}");
        }
    }

    #[test]
    fn rapidity_examples() {
        assert_eq!(rapidity_and_velocity(1.0).unwrap(), (0.0, 0.0));
        let (eta, beta) = rapidity_and_velocity(20.0).unwrap();
        assert!((eta - 3.688_253_867_361_296_6).abs() < 1e-12);
        assert!((beta - 0.998_749_217_771_908_8).abs() < 1e-12);
        let (eta, beta) = rapidity_and_velocity(2.0).unwrap();
        assert!((eta - 1.316_957_896_924_816_6).abs() < 1e-12);
        assert!((beta - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!(rapidity_and_velocity(0.9).is_err());
    }

    #[test]
    fn msum_examples() {
        let s = conditional_slice(0, OamWindow::symmetric(200), 5.0).unwrap();
        let r = estimate_gamma_msum(&s).unwrap();
        assert!((r.gamma_meas - 5.0).abs() < 1e-6);
        assert_eq!((r.method, r.residual), (Method::MSum, 0.0));

        let s = conditional_slice(0, OamWindow::symmetric(20), 1.0).unwrap();
        assert_eq!(estimate_gamma_msum(&s).unwrap().gamma_meas, 1.0);

        let s = conditional_slice(0, OamWindow::symmetric(20), 20.0).unwrap();
        assert!(estimate_gamma_msum(&s).unwrap().gamma_meas < 20.0);
    }

    #[test]
    fn msum_ignores_odd_cells_and_scale() {
        let mut s = conditional_slice(1, OamWindow::symmetric(30), 4.0).unwrap();
        for (i, v) in s.values.iter_mut().enumerate() {
            *v = *v * 250.0 + if i % 2 == 0 { 3.0 } else { 0.0 };
        }
        // l_a = 1: even-sum cells are odd l_b, at odd index
        let r = estimate_gamma_msum(&s).unwrap();
        let clean = estimate_gamma_msum(&conditional_slice(1, OamWindow::symmetric(30), 4.0).unwrap()).unwrap();
        assert!((r.gamma_meas - clean.gamma_meas).abs() < 1e-12);
    }

    #[test]
    fn msum_requires_peak_cell() {
        let s = conditional_slice(25, OamWindow::symmetric(20), 2.0).unwrap();
        assert!(matches!(estimate_gamma_msum(&s), Err(Error::Precondition(_))));
        let zero = ConditionalSlice::new(0, OamWindow::symmetric(2), vec![0.0; 5]).unwrap();
        assert!(matches!(estimate_gamma_msum(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit_examples() {
        let s = conditional_slice(0, OamWindow::symmetric(40), 3.0).unwrap();
        let r = estimate_gamma_fit(&s, (1.0, 50.0)).unwrap();
        assert!((r.gamma_meas - 3.0).abs() < 1e-4, "{}", r.gamma_meas);
        assert!(r.residual < 1e-12);

        let s = conditional_slice(0, OamWindow::symmetric(20), 1.0).unwrap();
        let r = estimate_gamma_fit(&s, (1.0, 50.0)).unwrap();
        assert!((r.gamma_meas - 1.0).abs() < 1e-4);
    }

    #[test]
    fn fit_rejects_bad_bounds_and_flat_data() {
        let s = conditional_slice(0, OamWindow::symmetric(5), 3.0).unwrap();
        for b in [(0.5, 2.0), (3.0, 3.0), (5.0, 2.0), (1.0, f64::INFINITY)] {
            assert!(matches!(estimate_gamma_fit(&s, b), Err(Error::Usage(_))));
        }
        let zero = ConditionalSlice::new(0, OamWindow::symmetric(5), vec![0.0; 11]).unwrap();
        assert!(matches!(estimate_gamma_fit(&zero, (1.0, 10.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit_result_consistency() {
        let s = conditional_slice(-2, OamWindow::symmetric(60), 7.5).unwrap();
        for r in [estimate_gamma_msum(&s).unwrap(), estimate_gamma_fit(&s, (1.0, 50.0)).unwrap()] {
            assert!((r.eta.cosh() - r.gamma_meas).abs() / r.gamma_meas < 1e-10);
            assert!((1.0 / (1.0 - r.beta * r.beta).sqrt() - r.gamma_meas).abs() / r.gamma_meas < 1e-10);
            assert_eq!(r.l_a, -2);
        }
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section_min(|x| (x - 2.5).powi(2) + 1.0, 0.0, 10.0, 1e-9);
        assert!((x - 2.5).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
        let (x, _) = golden_section_min(|x| x, 3.0, 4.0, 1e-9);
        assert_eq!(x, 3.0);
    }

    #[test]
    fn fit_result_json_fields() {
        let s = conditional_slice(0, OamWindow::symmetric(10), 2.0).unwrap();
        let r = estimate_gamma_msum(&s).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["beta", "eta", "gamma_meas", "l_a", "method", "residual", "window"]);
        assert_eq!(v["method"], "m_sum");
    }
}
