//! `‖F‖₂² = (1/𝒱) Σ_g ∬_{F_std} |F(gz)|² dμ` over coset representatives `g`
//! of `Γ₀(M)` in `SL₂(ℤ)`, and the Rankin–Selberg cross-check.

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use super::evaluate_f_with;
use crate::error::{Error, Result};
use crate::geometry::UHPoint;
use crate::modular::numtheory::{ext_gcd, gcd};
use crate::modular::{gamma0_coset_reps, gamma0_index, gamma0_volume, GroupElement};
use crate::qexp::modularity::evaluation_floor;
use crate::qexp::QExpansion;
use crate::quadrature::integrate;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct L2Options {
    /// Absolute quadrature target for `Σ_g ∬ |F(gz)|² dμ`, relative to a
    /// Rankin–Selberg estimate of the total.
    pub rel_tol: f64,
    /// Cut-off height in `F_std`; default `2M`.
    pub y_max: Option<f64>,
}

impl Default for L2Options {
    fn default() -> Self {
        L2Options {
            rel_tol: 1e-7,
            y_max: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct L2Norm {
    /// `‖F‖₂` with the `1/𝒱` factor.
    pub v_included: f64,
    /// `‖F‖₂` without it, `√𝒱` times larger.
    pub v_excluded: f64,
    pub volume: f64,
    pub cosets: usize,
    pub quadrature_error: f64,
    /// Mass estimate above the cut-off heights, included in `quadrature_error`.
    pub truncation_estimate: f64,
    pub converged: bool,
}

/// Replace `g` by `γg`, `γ ∈ Γ₀(M)`, with bottom row `(c', d)`, `c' = gcd(c, M)`
/// and `|d|` at most about `M/c'`. The coset is unchanged.
fn cusp_normalize(g: &GroupElement, m: i64) -> GroupElement {
    if g.c.rem_euclid(m) == 0 {
        return GroupElement::IDENTITY;
    }
    let cp = gcd(g.c, m);
    let (g0, y0, x0) = ext_gcd(g.c, m * g.a);
    let (y0, x0) = if g0 < 0 { (-y0, -x0) } else { (y0, x0) };
    debug_assert_eq!(g0.abs(), cp);
    let step_y = m * g.a / cp;
    let step_x = g.c / cp;
    let gamma = (0..)
        .flat_map(|k: i64| [k, -k])
        .map(|k| (m * (x0 - k * step_x), y0 + k * step_y))
        .find_map(|(c, d)| GroupElement::from_bottom_row(c, d))
        .expect("a coprime lift exists");
    let h = gamma * *g;
    debug_assert_eq!(h.c, cp);
    let step = m / cp;
    let target = h.d.rem_euclid(step);
    let target = if target > step / 2 { target - step } else { target };
    let x = (h.d - target) / step;
    // left factor with bottom row (M x, 1 - x (M/c') a_h) shifts d by -x M/c'
    (-6i64..=6)
        .filter_map(|dx| {
            let xx = x + dx;
            GroupElement::from_bottom_row(m * xx, 1 - xx * step * h.a).map(|g2| g2 * h)
        })
        .filter(|h2| h2.c == cp)
        .min_by_key(|h2| (h2.d.abs(), h2.d))
        .unwrap_or(h)
}

fn integrand(f: &QExpansion, h: &GroupElement, x: f64, y: f64, c_f: f64) -> f64 {
    let w = h.act(Complex64::new(x, y));
    match UHPoint::new(w.re, w.im).and_then(|p| evaluate_f_with(f, p, c_f)) {
        Ok(e) => e.value * e.value,
        Err(_) => f64::NAN,
    }
}

/// Largest `Y ≤ y_max` with `Im(h z) ≥ floor` for all `z ∈ F_std`, `Im z ≤ Y`.
fn usable_height(h: &GroupElement, floor: f64, y_max: f64) -> f64 {
    let (c, d) = (h.c as f64, h.d as f64);
    let worst = |y: f64| y / ((c.abs() * 0.5 + d.abs()).powi(2) + c * c * y * y);
    if worst(y_max) >= floor {
        return y_max;
    }
    let (mut lo, mut hi) = (1.0, y_max);
    if worst(lo) < floor {
        return lo;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if worst(mid) >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn coset_integral(f: &QExpansion, h: &GroupElement, y_top: f64, tol: f64, c_f: f64) -> Result<(f64, f64, f64)> {
    let low = (3f64.sqrt() / 2.0).ln();
    let top = y_top.ln();
    let bad = std::cell::Cell::new(false);
    let row = |s: f64| -> Complex64 {
        let y = s.exp();
        let g = |x: f64| {
            let v = integrand(f, h, x, y, c_f);
            if v.is_nan() {
                bad.set(true);
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(v, 0.0)
        };
        let weight = (-s).exp();
        let r = if y >= 1.0 {
            integrate(g, -0.5, 0.5, tol * 1e-2, 200)
        } else {
            let edge = (1.0 - y * y).sqrt();
            integrate(&g, -0.5, -edge, tol * 1e-2, 200).and_then(|a| {
                integrate(&g, edge, 0.5, tol * 1e-2, 200).map(|b| crate::quadrature::Integral {
                    value: a.value + b.value,
                    error: a.error + b.error,
                    evaluations: a.evaluations + b.evaluations,
                })
            })
        };
        match r {
            Ok(r) => r.value * weight,
            Err(_) => {
                bad.set(true);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let mut value = 0.0;
    let mut error = 0.0;
    for (a, b) in [(low, 0.0f64.min(top)), (0.0f64.min(top), top)] {
        if b > a {
            let r = integrate(row, a, b, tol * 0.5, 400)?;
            value += r.value.re;
            error += r.error;
        }
    }
    if bad.get() {
        return Err(Error::QuadratureNotConverged {
            achieved: f64::INFINITY,
            target: tol,
        });
    }
    // ∫_{Y}^∞ |F|² dy/y² over |x| ≤ 1/2 is about F(Y)²/Y when F decays
    let edge = (0..=8)
        .map(|k| integrand(f, h, -0.5 + k as f64 / 8.0, y_top, c_f))
        .fold(0.0f64, |m, v| if v.is_nan() { m } else { m.max(v) });
    Ok((value, error, edge / y_top))
}

/// `‖F‖₂` over `Γ₀(M)\ℍ` with `M = 4N`, default options.
pub fn l2_norm(f: &QExpansion, n: u64) -> Result<L2Norm> {
    l2_norm_with(f, n, L2Options::default())
}

pub fn l2_norm_with(f: &QExpansion, n: u64, opts: L2Options) -> Result<L2Norm> {
    let m = 4 * n;
    if m % f.level() != 0 {
        return Err(Error::InvalidArgument(format!("form of level {} is not of level {m}", f.level())));
    }
    if !f.is_cuspidal() {
        return Err(Error::InvalidArgument("L2 norm needs a cusp form".into()));
    }
    let reps = gamma0_coset_reps(m);
    debug_assert_eq!(reps.len() as u64, gamma0_index(m));
    let volume = gamma0_volume(m);
    let c_f = super::coefficient_constant(f);
    let scale = rankin_selberg_l2(f)
        .map(|r| r.norm_sq * volume)
        .unwrap_or(1.0)
        .max(1e-300);
    let tol = opts.rel_tol * scale / reps.len() as f64;
    let y_max = opts.y_max.unwrap_or(2.0 * m as f64);
    let floor = evaluation_floor(f.precision()) * 1.01;
    let parts: Vec<Result<(f64, f64, f64)>> = reps
        .par_iter()
        .map(|g| {
            let h = cusp_normalize(g, m as i64);
            let y_top = usable_height(&h, floor, y_max);
            coset_integral(f, &h, y_top, tol, c_f)
        })
        .collect();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut trunc = 0.0;
    for p in parts {
        let (v, e, t) = p?;
        total += v;
        err += e;
        trunc += t;
    }
    let v_included = (total / volume).sqrt();
    let quadrature_error = (err + trunc) / volume;
    Ok(L2Norm {
        v_included,
        v_excluded: total.sqrt(),
        volume,
        cosets: reps.len(),
        quadrature_error,
        truncation_estimate: trunc / volume,
        converged: quadrature_error <= 10.0 * opts.rel_tol * scale / volume,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RankinSelberg {
    /// Extrapolated `lim X⁻¹ Σ_{n ≤ X} |a(n)|² n^{1-κ}`.
    pub residue: f64,
    /// `Γ(κ)/(4π)^κ · residue`, the `1/𝒱`-normalized `‖F‖₂²`.
    pub norm_sq: f64,
    pub partial: Vec<(f64, f64)>,
}

/// Residue of `Σ |Ã(n)|² n^{-s}` at `s = 1` from partial sums at
/// `X = P/8, P/4, P/2, P`, extrapolated linearly in `X^{-θ}` (`θ = 1/2`).
pub fn rankin_selberg_l2(f: &QExpansion) -> Result<RankinSelberg> {
    let kappa = f.weight().kappa();
    let off = f.offset().to_f64().unwrap_or(0.0);
    let p = f.precision() as f64 + off;
    let pts: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|k| p / k).collect();
    let mut partial = vec![];
    for &x in &pts {
        let s: f64 = f
            .terms()
            .iter()
            .map(|(n, c)| (*n as f64 + off, c.abs().to_f64().unwrap_or(0.0)))
            .filter(|(e, _)| *e > 0.0 && *e <= x)
            .map(|(e, a)| a * a * e.powf(1.0 - kappa))
            .sum();
        partial.push((x, s / x));
    }
    let xs: Vec<f64> = partial.iter().map(|(x, _)| x.powf(-0.5)).collect();
    let ys: Vec<f64> = partial.iter().map(|(_, r)| *r).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("Rankin-Selberg partial sums".into()));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let residue = my - slope * mx;
    Ok(RankinSelberg {
        residue,
        norm_sq: gamma(kappa) / (4.0 * std::f64::consts::PI).powf(kappa) * residue,
        partial,
    })
}
