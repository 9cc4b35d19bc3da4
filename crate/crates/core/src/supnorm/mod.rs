//! `F(z) = y^{κ/2}|f(z)|` with certified truncation, `L²` norms, the sup
//! search over `ℱ(2N)`, the localized bound and the level-exponent fit.

mod fit;
mod l2;
mod search;

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::geometry::UHPoint;
use crate::qexp::modularity::evaluation_floor;
use crate::qexp::QExpansion;

pub use fit::{level_exponent_fit, trivial_band, ExponentFit, TrivialBand};
pub use l2::{l2_norm, l2_norm_with, rankin_selberg_l2, L2Norm, L2Options, RankinSelberg};
pub use search::{localized_bound_check, sup_search, write_results_csv, LocalizedReport, SearchOptions, SupNormResult};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Evaluation {
    pub value: f64,
    /// Bound on `|value − y^{κ/2}|f(z)||`.
    pub tail_bound: f64,
}

/// Heuristic Hecke-bound constant `C_f = 2·max |a(n)| / n^{κ/2}` over the
/// stored exponents `n > 0`.
pub fn coefficient_constant(f: &QExpansion) -> f64 {
    let half = f.weight().kappa() / 2.0;
    let off = f.offset().to_f64().unwrap_or(0.0);
    let mut best: f64 = 0.0;
    for (n, c) in f.terms() {
        let e = *n as f64 + off;
        if e > 0.0 {
            let a = c.abs().to_f64().unwrap_or(f64::INFINITY);
            best = best.max(a / e.powf(half));
        }
    }
    2.0 * best
}

/// `Σ_{e ≥ e0} e^{a} e^{-b e}` majorized by the peak value on `[e0, ∞)` plus
/// `∫_{e0}^∞ t^a e^{-bt} dt = Γ(a+1, b e0) / b^{a+1}`.
fn series_majorant(a: f64, b: f64, e0: f64) -> f64 {
    let peak_at = (a / b).max(e0);
    let peak = (a * peak_at.ln() - b * peak_at).exp();
    let s = a + 1.0;
    let integral = if b * e0 > 700.0 {
        // asymptotic form of the upper incomplete gamma
        (a * e0.ln() - b * e0).exp() / b
    } else {
        gamma_ur(s, b * e0) * gamma(s) / b.powf(s)
    };
    peak + integral
}

/// `y^{κ/2}|f(z)|` from the stored terms, with a bound on the omitted terms
/// `n ≥ P` based on `|a(n)| ≤ C_f n^{κ/2}` plus the floating-point error of
/// the partial sum.
pub fn evaluate_f(f: &QExpansion, z: UHPoint) -> Result<Evaluation> {
    evaluate_f_with(f, z, coefficient_constant(f))
}

/// As [`evaluate_f`] with an explicit coefficient constant.
pub fn evaluate_f_with(f: &QExpansion, z: UHPoint, c_f: f64) -> Result<Evaluation> {
    let y_min = evaluation_floor(f.precision());
    if z.y < y_min {
        return Err(Error::BelowEvaluationFloor {
            y: z.y,
            y_min,
            precision: f.precision(),
        });
    }
    if f.is_zero() {
        return Ok(Evaluation {
            value: 0.0,
            tail_bound: 0.0,
        });
    }
    let kappa = f.weight().kappa();
    let scale = z.y.powf(kappa / 2.0);
    let (sum, magnitude, count) = f.eval_with_magnitude(Complex64::new(z.x, z.y));
    let value = scale * sum.norm();
    let e0 = f.precision() as f64 + f.offset().to_f64().unwrap_or(0.0);
    let omitted = c_f * series_majorant(kappa / 2.0, 2.0 * PI * z.y, e0.max(1.0));
    // each term carries a few ulps from exp and the phase; summation adds one per term
    let rounding = (count as f64 + 8.0) * f64::EPSILON * magnitude;
    let tail = scale * (omitted + rounding);
    Ok(Evaluation {
        value,
        tail_bound: tail,
    })
}
