//! Grid-and-refine search for `sup F` over `ℱ(2N)`-heights and the
//! localized bound `F(z)·√y / ‖F‖₂`.

use std::f64::consts::PI;
use std::io::Write;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use super::{coefficient_constant, evaluate_f_with, L2Norm};
use crate::error::{Error, Result};
use crate::geometry::UHPoint;
use crate::qexp::modularity::evaluation_floor;
use crate::qexp::QExpansion;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SearchOptions {
    pub grid_x: usize,
    pub grid_y: usize,
    pub refine_depth: usize,
    /// Upper end of the `y`-range; default from the leading-term crossover.
    pub y_top: Option<f64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_x: 64,
            grid_y: 48,
            refine_depth: 3,
            y_top: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupNormResult {
    pub form: String,
    pub level: u64,
    pub n: u64,
    pub weight_twice: i32,
    pub sup: f64,
    pub argmax: UHPoint,
    pub l2_v_included: f64,
    pub l2_v_excluded: f64,
    /// `sup / ‖F‖₂` with the `1/𝒱` factor.
    pub ratio: f64,
    pub ratio_v_excluded: f64,
    pub grid: (usize, usize),
    pub depth: usize,
    pub y_range: (f64, f64),
    /// Lipschitz-style estimate of how far the true sup may exceed `sup`.
    pub gap_estimate: f64,
    pub c_f: f64,
    pub odd_squarefree: bool,
}

/// `y` beyond which the leading term dominates the rest by a factor 100 and
/// `F` is decreasing.
pub fn default_y_top(f: &QExpansion) -> Option<f64> {
    let off = f.offset().to_f64().unwrap_or(0.0);
    let kappa = f.weight().kappa();
    let mut it = f.terms().iter().map(|(n, c)| (*n as f64 + off, c.abs().to_f64().unwrap_or(0.0)));
    let (e0, a0) = it.next()?;
    if e0 <= 0.0 {
        return None;
    }
    let mut y = kappa / (4.0 * PI * e0);
    if let Some((e1, a1)) = it.next() {
        y = y.max((100.0 * a1 / a0).ln() / (2.0 * PI * (e1 - e0)));
    }
    Some(y)
}

fn lipschitz(f: &QExpansion, y: f64) -> f64 {
    let off = f.offset().to_f64().unwrap_or(0.0);
    let k2 = f.weight().kappa() / 2.0;
    let (mut d, mut s) = (0.0, 0.0);
    for (n, c) in f.terms() {
        let e = *n as f64 + off;
        let t = c.abs().to_f64().unwrap_or(0.0) * (-2.0 * PI * e * y).exp();
        if t == 0.0 && e * y > 1.0 {
            break;
        }
        d += 2.0 * PI * e * t;
        s += t;
    }
    y.powf(k2) * (d + k2 * s / y)
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of `F` on `|x| ≤ 1/2`, `√3/(4N) ≤ y ≤ Y_top`, refined by
/// alternating golden-section steps around the best grid point.
pub fn sup_search(f: &QExpansion, id: &str, n: u64, l2: &L2Norm, opts: SearchOptions) -> Result<SupNormResult> {
    if !f.is_cuspidal() {
        return Err(Error::InvalidArgument("sup search needs a cusp form".into()));
    }
    let y_lo = 3f64.sqrt() / (4.0 * n as f64);
    let floor = evaluation_floor(f.precision());
    if y_lo < floor {
        return Err(Error::BelowEvaluationFloor {
            y: y_lo,
            y_min: floor,
            precision: f.precision(),
        });
    }
    let y_top = opts
        .y_top
        .or_else(|| default_y_top(f))
        .ok_or_else(|| Error::InvalidArgument("form has no leading term".into()))?
        .max(y_lo * 1.5);
    let c_f = coefficient_constant(f);
    let eval = |x: f64, y: f64| -> f64 {
        UHPoint::new(x, y)
            .and_then(|z| evaluate_f_with(f, z, c_f))
            .map(|e| e.value)
            .unwrap_or(0.0)
    };
    let (gx, gy) = (opts.grid_x.max(1), opts.grid_y.max(2));
    let ratio = (y_top / y_lo).powf(1.0 / (gy - 1) as f64);
    let ys: Vec<f64> = (0..gy).map(|j| y_lo * ratio.powi(j as i32)).collect();
    let hx = 1.0 / gx as f64;
    let grid: Vec<(f64, f64, f64)> = ys
        .par_iter()
        .flat_map_iter(|&y| (0..gx).map(move |i| (-0.5 + i as f64 * hx, y)))
        .map(|(x, y)| (x, y, eval(x, y)))
        .collect();
    let mut best = grid
        .iter()
        .copied()
        .fold((0.0, y_lo, -1.0), |b, p| if p.2 > b.2 { p } else { b });
    let (mut wx, mut wy) = (hx, ratio);
    for _ in 0..opts.refine_depth {
        let y = best.1;
        let (x1, v1) = golden(|x| eval(x, y), best.0 - wx, best.0 + wx, 30);
        if v1 > best.2 {
            best = (x1, y, v1);
        }
        let x = best.0;
        let (lo, hi) = ((best.1 / wy).max(y_lo), (best.1 * wy).min(y_top));
        let (y1, v2) = golden(|y| eval(x, y), lo, hi, 30);
        if v2 > best.2 {
            best = (x, y1, v2);
        }
        wx *= 0.5;
        wy = wy.sqrt();
    }
    let x = best.0 - (best.0 + 0.5).div_euclid(1.0);
    let gap = lipschitz(f, y_lo) * (0.5 * hx + 0.5 * y_top * (1.0 - 1.0 / ratio));
    Ok(SupNormResult {
        form: id.to_string(),
        level: f.level(),
        n,
        weight_twice: f.weight().twice,
        sup: best.2,
        argmax: UHPoint { x, y: best.1 },
        l2_v_included: l2.v_included,
        l2_v_excluded: l2.v_excluded,
        ratio: best.2 / l2.v_included,
        ratio_v_excluded: best.2 / l2.v_excluded,
        grid: (gx, gy),
        depth: opts.refine_depth,
        y_range: (y_lo, y_top),
        gap_estimate: gap,
        c_f,
        odd_squarefree: n % 2 == 1 && crate::modular::numtheory::is_squarefree(n),
    })
}

/// Rows `form, N, sup, argmax_x, argmax_y, l2_V_included, l2_V_excluded,
/// ratio, grid, depth`.
pub fn write_results_csv<W: Write>(rows: &[SupNormResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "form", "N", "sup", "argmax_x", "argmax_y", "l2_V_included", "l2_V_excluded", "ratio", "grid", "depth",
    ])?;
    for r in rows {
        out.write_record([
            r.form.clone(),
            r.n.to_string(),
            format!("{:.12e}", r.sup),
            format!("{:.12e}", r.argmax.x),
            format!("{:.12e}", r.argmax.y),
            format!("{:.12e}", r.l2_v_included),
            format!("{:.12e}", r.l2_v_excluded),
            format!("{:.12e}", r.ratio),
            format!("{}x{}", r.grid.0, r.grid.1),
            r.depth.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizedReport {
    /// `(z, F(z)·√y / ‖F‖₂)`.
    pub values: Vec<(UHPoint, f64)>,
    pub max_c: f64,
    pub ceiling: f64,
    pub within: bool,
}

/// `c(z) = F(z)·√y / ‖F‖₂` on the samples.
pub fn localized_bound_check(f: &QExpansion, l2: f64, samples: &[UHPoint], ceiling: f64) -> Result<LocalizedReport> {
    let mut values = vec![];
    for &z in samples {
        let v = if f.is_zero() {
            0.0
        } else {
            super::evaluate_f(f, z)?.value * z.y.sqrt() / l2
        };
        values.push((z, v));
    }
    let max_c = values.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(LocalizedReport {
        values,
        max_c,
        ceiling,
        within: max_c <= ceiling,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::qexp::form_library;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn unit_l2() -> L2Norm {
        L2Norm {
            v_included: 1.0,
            v_excluded: 2.0,
            volume: 4.0,
            cosets: 1,
            quadrature_error: 0.0,
            truncation_estimate: 0.0,
            converged: true,
        }
    }

    #[test]
    fn decreasing_above_y_top() {
        let f = form_library("eta8cubed", 4000).unwrap();
        let top = default_y_top(&f).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..30 {
            let v = super::super::evaluate_f(&f, UHPoint::new(0.0, top * (1.0 + 0.2 * k as f64)).unwrap())
                .unwrap()
                .value;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn refinement_and_symmetry() {
        let f = form_library("eta8cubed", 4000).unwrap();
        let coarse = SearchOptions {
            grid_x: 16,
            grid_y: 12,
            refine_depth: 0,
            y_top: None,
        };
        let a = sup_search(&f, "eta", 16, &unit_l2(), coarse).unwrap();
        let b = sup_search(&f, "eta", 16, &unit_l2(), SearchOptions { refine_depth: 4, ..coarse }).unwrap();
        assert!(b.sup >= a.sup);
        assert!((-0.5..0.5).contains(&b.argmax.x));
        assert!(b.argmax.y >= b.y_range.0 && b.argmax.y <= b.y_range.1);
        let two = f.scale(&BigRational::from_integer(BigInt::from(3)));
        let l2 = L2Norm {
            v_included: 3.0,
            v_excluded: 6.0,
            ..unit_l2()
        };
        let c = sup_search(&two, "eta", 16, &l2, SearchOptions { refine_depth: 4, ..coarse }).unwrap();
        assert!((c.ratio - b.ratio).abs() < 1e-12 * b.ratio);
        assert!(sup_search(&form_library("theta", 100).unwrap(), "theta", 1, &unit_l2(), coarse).is_err());
        let mut buf = vec![];
        write_results_csv(&[b], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("form,N,sup,argmax_x"));
    }

    #[test]
    fn localized_bound() {
        let f = form_library("eta8cubed", 4000).unwrap();
        let high = localized_bound_check(&f, 0.07, &[UHPoint::new(0.1, 10.0).unwrap()], 10.0).unwrap();
        assert!(high.max_c < 1e-20);
        let z0 = UHPoint::new(0.2, 0.03).unwrap();
        let z1 = UHPoint::new(0.2, 0.12).unwrap();
        let r = localized_bound_check(&f, 0.07, &[z0, z1], 10.0).unwrap();
        assert!(r.values.iter().all(|v| v.1 > 1e10 * high.max_c));
        let zero = localized_bound_check(&f.zero_like(), 0.07, &[z0], 1.0).unwrap();
        assert_eq!(zero.max_c, 0.0);
    }
}
