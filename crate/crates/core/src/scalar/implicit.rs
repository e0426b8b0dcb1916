//! The implicit branch `x(τ)` of `x = τ + tan x`.

use crate::error::{Error, Result};
use crate::scalar::jet::Jet;

const MAX_ITER: usize = 100;
const BRACKET_HALF_WIDTH: f64 = 0.5;
const RESIDUAL_TOL: f64 = 1e-12;

fn residual(tau: f64, x: f64) -> f64 {
    tau + x.tan() - x
}

/// Solves `x = τ + tan x` for the root lying in `(seed − 0.5, seed + 0.5)`.
///
/// Newton steps are taken on `h(x) = τ + tan x − x` (with `h' = tan² x`);
/// any step leaving the current sign-change bracket is replaced by bisection.
pub fn solve_implicit_w(tau: f64, seed: f64) -> Result<f64> {
    if !tau.is_finite() || !seed.is_finite() {
        return Err(Error::Domain(format!("non-finite input tau={tau}, seed={seed}")));
    }
    let mut lo = seed - BRACKET_HALF_WIDTH;
    let mut hi = seed + BRACKET_HALF_WIDTH;
    // tan has a pole at π/2 + kπ; h' = tan²x vanishes at kπ (including 2πk)
    let pole_lo = ((lo - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil();
    let pole_hi = ((hi - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).floor();
    if pole_lo <= pole_hi {
        return Err(Error::Branch(format!(
            "bracket ({lo}, {hi}) around seed {seed} contains a pole of tan"
        )));
    }
    let crit_lo = (lo / std::f64::consts::PI).ceil();
    let crit_hi = (hi / std::f64::consts::PI).floor();
    if crit_lo <= crit_hi {
        return Err(Error::Branch(format!(
            "bracket ({lo}, {hi}) contains a critical point x = kπ"
        )));
    }
    let (mut h_lo, h_hi) = (residual(tau, lo), residual(tau, hi));
    if h_lo.signum() == h_hi.signum() {
        return Err(Error::Branch(format!(
            "no root of x = τ + tan x in ({lo}, {hi}) for τ = {tau}"
        )));
    }
    let mut x = seed;
    let mut hx = residual(tau, x);
    for _ in 0..MAX_ITER {
        if hx.abs() <= RESIDUAL_TOL {
            return Ok(x);
        }
        if hx.signum() == h_lo.signum() {
            lo = x;
            h_lo = hx;
        } else {
            hi = x;
        }
        let slope = x.tan().powi(2);
        let newton = x - hx / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        hx = residual(tau, x);
    }
    if hx.abs() <= RESIDUAL_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!(
            "x = τ + tan x at τ = {tau}: residual {hx:e} after {MAX_ITER} iterations"
        )))
    }
}

/// Taylor coefficients of `x(τ₀ + t)` up to `order`, from `x' = −cot² x`.
pub(crate) fn implicit_series(tau0: f64, seed: f64, order: usize) -> Result<Vec<f64>> {
    let x0 = solve_implicit_w(tau0, seed)?;
    if x0.tan() == 0.0 {
        return Err(Error::Branch("x(τ) = kπ: derivative undefined".into()));
    }
    let mut coef = vec![x0];
    for m in 0..order {
        // X is exact through degree m; −cot²(X) is then exact through degree m
        let mut padded = coef.clone();
        padded.resize(crate::scalar::jet::coefficient_count(1, m), 0.0);
        let x = Jet::from_coefficients(1, m, padded)?;
        let cot = x.cos().div(&x.sin())?;
        let rhs = -(&cot * &cot);
        coef.push(rhs.coefficients()[m] / (m as f64 + 1.0));
    }
    Ok(coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn reference_point_is_on_the_level_set() {
        let tau0 = 1.0 - FRAC_PI_4;
        let x = solve_implicit_w(tau0, -FRAC_PI_4 + 0.2).unwrap();
        assert!((x + FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn branch_violation_reported() {
        // bracket (1.2, 2.2) straddles π/2
        assert!(matches!(solve_implicit_w(0.0, 1.7), Err(Error::Branch(_))));
        // bracket around 0 contains x = 0
        assert!(matches!(solve_implicit_w(0.0, 0.1), Err(Error::Branch(_))));
    }

    #[test]
    fn series_derivative_matches_closed_form() {
        let tau0 = 1.0 - FRAC_PI_4;
        let c = implicit_series(tau0, -FRAC_PI_4, 3).unwrap();
        // x' = −cot²(−π/4) = −1; x'' = 2 cot x csc² x · x' = 2·(−1)·2·(−1) = 4
        assert!((c[1] + 1.0).abs() < 1e-12);
        assert!((2.0 * c[2] - 4.0).abs() < 1e-10);
    }
}
