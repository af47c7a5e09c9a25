//! Rate/fidelity trade-off: the largest Poisson mean whose false/success
//! ratio stays at a target.
//!
//! The ratio diverges at small λ (dark counts over a vanishing two-photon
//! signal) and grows again at large λ (multi-excitation leakage), so it has
//! one interior minimum. Above that minimum it increases monotonically and
//! a bisection on the right branch gives the rate-maximizing λ.

use serde::Serialize;

use super::{success_and_false, DetectionModel, StatsError};

const SCAN_MIN: f64 = 1e-6;
const SCAN_MAX: f64 = 4.0;
const SCAN_POINTS: usize = 121;
const LAMBDA_MAX: f64 = 50.0;
const REL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaSolution {
    pub lambda: f64,
    pub ratio: f64,
    /// Location of the ratio minimum.
    pub floor_lambda: f64,
    pub floor_ratio: f64,
    pub iterations: u32,
}

fn ratio_at(lambda: f64, model: &DetectionModel) -> Result<f64, StatsError> {
    success_and_false(lambda, model)?.ratio()
}

/// Minimum of the false/success ratio over λ, returned as `(λ, ratio)`.
pub fn ratio_floor(model: &DetectionModel) -> Result<(f64, f64), StatsError> {
    model.validate()?;
    let log_lo = SCAN_MIN.ln();
    let step = (SCAN_MAX.ln() - log_lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| log_lo + step * i as f64).collect();
    let values = grid.iter().map(|&x| ratio_at(x.exp(), model)).collect::<Result<Vec<_>, _>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("scan grid is non-empty");

    // Golden-section refinement in log λ around the best grid point.
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = ratio_at(c.exp(), model)?;
    let mut fd = ratio_at(d.exp(), model)?;
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ratio_at(c.exp(), model)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ratio_at(d.exp(), model)?;
        }
    }
    let x = (0.5 * (a + b)).exp();
    let fx = ratio_at(x, model)?;
    if fx <= values[best] {
        Ok((x, fx))
    } else {
        Ok((grid[best].exp(), values[best]))
    }
}

/// Largest λ with `ratio(λ) <= target_ratio`, located to relative
/// tolerance 1e-6 by bisection on the increasing branch.
pub fn lambda_for_fidelity(target_ratio: f64, model: &DetectionModel) -> Result<LambdaSolution, StatsError> {
    let (floor_lambda, floor_ratio) = ratio_floor(model)?;
    if target_ratio.is_nan() || target_ratio <= floor_ratio {
        return Err(StatsError::BelowDarkFloor { target: target_ratio, floor: floor_ratio });
    }

    let mut lo = floor_lambda;
    let mut lo_ratio = floor_ratio;
    let mut hi = floor_lambda;
    loop {
        hi *= 2.0;
        if hi > LAMBDA_MAX {
            return Err(StatsError::Unbracketed { target: target_ratio, lambda_max: LAMBDA_MAX });
        }
        let r = ratio_at(hi, model)?;
        if r < lo_ratio {
            return Err(StatsError::NonMonotone(hi));
        }
        if r > target_ratio {
            break;
        }
        lo = hi;
        lo_ratio = r;
    }

    let mut iterations = 0;
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        let r = ratio_at(mid, model)?;
        if r <= target_ratio {
            lo = mid;
            lo_ratio = r;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(LambdaSolution { lambda: lo, ratio: lo_ratio, floor_lambda, floor_ratio, iterations })
}
