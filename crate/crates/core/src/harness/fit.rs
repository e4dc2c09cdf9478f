use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub band: Band,
    pub points: usize,
    pub below: usize,
    pub above: usize,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSquareFit {
    /// Coefficient `a` of `regret ≈ a·ln(t)²`.
    pub a: f64,
    /// Coefficient of determination for a model without intercept:
    /// `1 - SS_res / Σ y²`.
    pub r2: f64,
    /// `1 - SS_res / Σ (y - ȳ)²`, stricter for curves far from the origin.
    pub r2_centered: f64,
    pub points: usize,
    pub t_start: f64,
    pub band: Option<BandCheck>,
}

/// Least-squares fit of `y ≈ a·ln(t)²` through the origin over points with
/// `t > t_start`.
pub fn fit_log_square(curve: &[(f64, f64)], t_start: f64, band: Option<Band>) -> Result<LogSquareFit> {
    let tol = |y: f64| 1e-9 * y.abs().max(1.0);
    if let Some(w) = curve.windows(2).find(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1 - tol(w[0].1)) {
        return Err(Error::Data(format!(
            "regret curve must increase in t and never decrease: ({}, {}) then ({}, {})",
            w[0].0, w[0].1, w[1].0, w[1].1
        )));
    }
    let tail: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|&(t, _)| t > t_start && t > 1.0)
        .collect();
    if tail.len() < MIN_FIT_POINTS {
        return Err(Error::Data(format!(
            "{} points after t = {t_start}; at least {MIN_FIT_POINTS} are needed",
            tail.len()
        )));
    }
    let x: Vec<f64> = tail.iter().map(|&(t, _)| t.ln().powi(2)).collect();
    let y: Vec<f64> = tail.iter().map(|&(_, r)| r).collect();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let a = sxy / sxx;
    let ss_res: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - a * xi).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ratio = |num: f64, den: f64| if den > 0.0 { 1.0 - num / den } else { 1.0 };

    let band = band.map(|b| {
        let below = tail.iter().zip(&x).filter(|(p, xi)| p.1 < b.lo * **xi).count();
        let above = tail.iter().zip(&x).filter(|(p, xi)| p.1 > b.hi * **xi).count();
        BandCheck {
            band: b,
            points: tail.len(),
            below,
            above,
            within: below == 0 && above == 0,
        }
    });
    Ok(LogSquareFit {
        a,
        r2: ratio(ss_res, syy),
        r2_centered: ratio(ss_res, ss_tot),
        points: tail.len(),
        t_start,
        band,
    })
}
