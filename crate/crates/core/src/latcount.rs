//! Enumeration of integral matrices `γ` with `det γ = ℓ`, `c ≡ 0 (mod M)`
//! and `u(γw, z) ≤ δ`, and the empirical counting-lemma check.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{in_fundamental_set, u_distance, UHPoint};
use crate::modular::numtheory::{ext_gcd, gcd};
use crate::modular::GroupElement;

pub const DEFAULT_BUDGET: u64 = 100_000_000;
const MARGIN: f64 = 1e-12;

/// Matrices `γ` with `det γ = ell`, `modulus | c` and `u(γ·source, target) ≤ delta`.
#[derive(Clone, Copy, Debug)]
pub struct LatticeQuery {
    pub source: UHPoint,
    pub target: UHPoint,
    pub ell: u64,
    pub modulus: u64,
    pub delta: f64,
}

impl LatticeQuery {
    pub fn at(z: UHPoint, ell: u64, modulus: u64, delta: f64) -> Self {
        LatticeQuery {
            source: z,
            target: z,
            ell,
            modulus,
            delta,
        }
    }

    /// `S` with `|cw + d| ≤ S` for every admissible matrix: `Im γw ≥ y e^{-D}`
    /// where `cosh D = 1 + 2δ`, and `Im γw = ℓ v / |cw+d|²`.
    fn radius(&self) -> f64 {
        let e_d = (1.0 + 2.0 * self.delta).acosh().exp();
        (self.ell as f64 * self.source.y * e_d / self.target.y).sqrt() * (1.0 + 1e-9)
    }

    fn c_max(&self) -> i64 {
        (self.radius() / self.source.y).floor() as i64
    }

    fn d_range(&self, c: i64, s: f64) -> Option<(i64, i64)> {
        let w = self.source;
        let room = s * s - (c as f64 * w.y).powi(2);
        if room < 0.0 {
            return None;
        }
        let r = room.sqrt();
        let centre = -(c as f64) * w.x;
        Some(((centre - r).ceil() as i64, (centre + r).floor() as i64))
    }

    fn c_values(&self) -> Vec<i64> {
        let m = self.modulus.max(1) as i64;
        let cm = self.c_max() / m;
        (-cm..=cm).map(|k| k * m).collect()
    }

    /// Size of the `(c, d)` candidate box; a bound on the enumeration work.
    pub fn candidate_count(&self) -> u64 {
        let s = self.radius();
        self.c_values()
            .iter()
            .filter_map(|&c| self.d_range(c, s))
            .map(|(lo, hi)| (hi - lo + 1).max(0) as u64)
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || self.ell == 0 || self.modulus == 0 {
            return Err(Error::InvalidArgument(format!(
                "need delta > 0, ell >= 1, modulus >= 1 (got {}, {}, {})",
                self.delta, self.ell, self.modulus
            )));
        }
        Ok(())
    }

    fn check_budget(&self, budget: u64) -> Result<()> {
        self.validate()?;
        let candidates = self.candidate_count();
        if candidates > budget {
            return Err(Error::EnumerationBudget {
                candidates,
                limit: budget,
            });
        }
        Ok(())
    }

    /// Calls `visit` on every admissible matrix with lower-left entry `c`.
    fn scan_row<F: FnMut(GroupElement)>(&self, c: i64, s: f64, mut visit: F) {
        let (w, z) = (self.source, self.target);
        let ell = self.ell as i64;
        let tol = self.delta + MARGIN * self.delta.max(1.0);
        let Some((lo, hi)) = self.d_range(c, s) else {
            return;
        };
        for d in lo..=hi {
            if c == 0 && d == 0 {
                continue;
            }
            let g = gcd(c, d);
            if ell % g != 0 {
                continue;
            }
            let re = c as f64 * w.x + d as f64;
            let den = re * re + (c as f64 * w.y).powi(2);
            let big_y = ell as f64 * w.y / den;
            // (Y − y)² ≤ 4yYδ is necessary for u ≤ δ
            let slack = 4.0 * z.y * big_y * tol - (big_y - z.y).powi(2);
            if slack < 0.0 {
                continue;
            }
            let (_, sc, tc) = ext_gcd(c, d);
            let a0 = tc * (ell / g);
            let b0 = -sc * (ell / g);
            let x0 = ((a0 as f64 * w.x + b0 as f64) * re + a0 as f64 * c as f64 * w.y * w.y) / den;
            let gf = g as f64;
            let half = slack.sqrt();
            let klo = ((z.x - half - x0) * gf).ceil() as i64 - 1;
            let khi = ((z.x + half - x0) * gf).floor() as i64 + 1;
            for k in klo..=khi {
                let gw = UHPoint {
                    x: x0 + k as f64 / gf,
                    y: big_y,
                };
                if u_distance(gw, z) <= tol {
                    let m = GroupElement::new(a0 + k * (c / g), b0 + k * (d / g), c, d);
                    debug_assert_eq!(m.det(), ell as i128);
                    visit(m);
                }
            }
        }
    }

    /// All admissible matrices, sorted by `(a, b, c, d)`.
    pub fn enumerate(&self, budget: u64) -> Result<Vec<GroupElement>> {
        self.check_budget(budget)?;
        let s = self.radius();
        let mut out: Vec<GroupElement> = self
            .c_values()
            .par_iter()
            .flat_map_iter(|&c| {
                let mut found = vec![];
                self.scan_row(c, s, |m| found.push(m));
                found.into_iter()
            })
            .collect();
        out.sort_by_key(|m| (m.a, m.b, m.c, m.d));
        for m in &out {
            assert_eq!(m.det(), self.ell as i128, "determinant check");
            assert_eq!(m.c % self.modulus as i64, 0, "congruence check");
        }
        Ok(out)
    }

    /// Number of admissible matrices, without collecting them.
    pub fn count(&self, budget: u64) -> Result<usize> {
        self.check_budget(budget)?;
        let s = self.radius();
        Ok(self
            .c_values()
            .par_iter()
            .map(|&c| {
                let mut n = 0usize;
                self.scan_row(c, s, |_| n += 1);
                n
            })
            .sum())
    }
}

/// `M(z, ℓ, N)` at distance `δ`: count and matrices.
pub fn count_matrices(z: UHPoint, ell: u64, n: u64, delta: f64) -> Result<(usize, Vec<GroupElement>)> {
    let ms = LatticeQuery::at(z, ell, n, delta).enumerate(DEFAULT_BUDGET)?;
    Ok((ms.len(), ms))
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleCount {
    pub z: UHPoint,
    /// `(ℓ, count)` for square `ℓ ≤ L`.
    pub counts: Vec<(u64, usize)>,
    pub total: usize,
    /// `K = 1 + L N y²`.
    pub k: f64,
    /// `total / (K L^{1/2})`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub n: u64,
    pub l: u64,
    pub delta: f64,
    pub samples: Vec<SampleCount>,
    pub fitted_constant: f64,
}

/// `Σ_{square ℓ ≤ L} #M(z, ℓ, N) / (K L^{1/2})` per sample; the fitted
/// constant is the maximum over samples.
pub fn verify_counting_lemma(samples: &[UHPoint], l: u64, n: u64, delta: f64) -> Result<CountReport> {
    let mut out = vec![];
    for &z in samples {
        let m = in_fundamental_set(z, n);
        if !m.inside {
            return Err(Error::OutsideFundamentalSet {
                point: z.to_string(),
                n,
                witness: m.witness.map(|w| w.to_string()).unwrap_or_default(),
            });
        }
        let mut counts = vec![];
        for r in (1u64..).take_while(|r| r * r <= l) {
            counts.push((r * r, LatticeQuery::at(z, r * r, n, delta).count(DEFAULT_BUDGET)?));
        }
        let total: usize = counts.iter().map(|c| c.1).sum();
        let k = 1.0 + (l * n) as f64 * z.y * z.y;
        out.push(SampleCount {
            z,
            counts,
            total,
            k,
            ratio: total as f64 / (k * (l as f64).sqrt()),
        });
    }
    let fitted_constant = out.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(CountReport {
        n,
        l,
        delta,
        samples: out,
        fitted_constant,
    })
}

/// Least-squares slope of `log C` against `log N`, and whether it exceeds 0.2.
pub fn growth_flag(reports: &[CountReport]) -> (f64, bool) {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.fitted_constant > 0.0)
        .map(|r| ((r.n as f64).ln(), r.fitted_constant.ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, false);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, false);
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    (slope, slope > 0.2)
}

impl CountReport {
    /// One row per `(sample, ℓ)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample", "x", "y", "N", "L", "delta", "ell", "count"])?;
        for (i, s) in self.samples.iter().enumerate() {
            for (ell, c) in &s.counts {
                out.write_record([
                    i.to_string(),
                    format!("{:.17e}", s.z.x),
                    format!("{:.17e}", s.z.y),
                    self.n.to_string(),
                    self.l.to_string(),
                    self.delta.to_string(),
                    ell.to_string(),
                    c.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
