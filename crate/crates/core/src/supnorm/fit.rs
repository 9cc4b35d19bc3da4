//! Least-squares fit of `log(sup/‖F‖₂)` against `log N` and the
//! trivial-bound band.

use serde::Serialize;

use super::SupNormResult;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub intercept: f64,
    /// `(N, residual)`.
    pub residuals: Vec<(u64, f64)>,
    /// Slope under the convention without `1/𝒱`; about `alpha - 1/2`.
    pub alpha_v_excluded: f64,
    pub convention: String,
}

fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 1e-12) {
        return Err(Error::DegenerateFit("levels do not vary".into()));
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Ok((slope, my - slope * mx))
}

pub fn level_exponent_fit(results: &[SupNormResult]) -> Result<ExponentFit> {
    let mut levels: Vec<u64> = results.iter().map(|r| r.n).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 3 {
        return Err(Error::DegenerateFit(format!("need 3 distinct levels, got {}", levels.len())));
    }
    if results.iter().any(|r| r.weight_twice != results[0].weight_twice) {
        return Err(Error::DegenerateFit("mixed weights".into()));
    }
    let pts: Vec<(f64, f64)> = results.iter().map(|r| ((r.n as f64).ln(), r.ratio.ln())).collect();
    let (alpha, intercept) = least_squares(&pts)?;
    let excl: Vec<(f64, f64)> = results
        .iter()
        .map(|r| ((r.n as f64).ln(), r.ratio_v_excluded.ln()))
        .collect();
    let (alpha_v_excluded, _) = least_squares(&excl)?;
    Ok(ExponentFit {
        alpha,
        intercept,
        residuals: results
            .iter()
            .zip(&pts)
            .map(|(r, p)| (r.n, p.1 - (intercept + alpha * p.0)))
            .collect(),
        alpha_v_excluded,
        convention: "ratio = sup / L2 with the 1/V factor; V = (pi/3) psi(4N)".into(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrivialBand {
    pub exponent: f64,
    pub slack: f64,
    /// `C` fitted at the smallest level, per convention.
    pub c_v_included: f64,
    pub c_v_excluded: f64,
    /// `(N, ratio / (C N^exponent))` for the `1/𝒱` convention.
    pub normalized: Vec<(u64, f64)>,
    pub normalized_v_excluded: Vec<(u64, f64)>,
    pub passed: bool,
}

/// `sup/‖F‖₂ ≤ (1 + slack)·C·N^{exponent}` with `C` fixed at the smallest level.
pub fn trivial_band(results: &[SupNormResult], exponent: f64, slack: f64) -> Result<TrivialBand> {
    let first = results
        .iter()
        .min_by_key(|r| r.n)
        .ok_or_else(|| Error::DegenerateFit("no results".into()))?;
    let scale = (first.n as f64).powf(exponent);
    let (ci, ce) = (first.ratio / scale, first.ratio_v_excluded / scale);
    let norm = |c: f64, pick: fn(&SupNormResult) -> f64| -> Vec<(u64, f64)> {
        results
            .iter()
            .map(|r| (r.n, pick(r) / (c * (r.n as f64).powf(exponent))))
            .collect()
    };
    let normalized = norm(ci, |r| r.ratio);
    let normalized_v_excluded = norm(ce, |r| r.ratio_v_excluded);
    let passed = normalized.iter().all(|v| v.1 <= 1.0 + slack);
    Ok(TrivialBand {
        exponent,
        slack,
        c_v_included: ci,
        c_v_excluded: ce,
        normalized,
        normalized_v_excluded,
        passed,
    })
}
