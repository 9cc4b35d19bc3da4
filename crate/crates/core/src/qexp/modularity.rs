//! Numerical check of the transformation law
//! `f(γz) = η(d) (ε_d⁻¹ (c/d))^{2κ} (cz+d)^κ f(z)` and empirical detection of
//! the character `η`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::QExpansion;
use crate::error::{Error, Result};
use crate::modular::numtheory::divisors;
use crate::modular::{automorphy_factor, DirichletCharacter, GroupElement};

/// Smallest `Im z` at which a truncation to `P` terms is used: there the first
/// omitted term is damped by `e^{-36}`.
pub fn evaluation_floor(precision: usize) -> f64 {
    36.0 / (2.0 * PI * precision as f64)
}

fn eval_checked(f: &QExpansion, z: Complex64) -> Result<Complex64> {
    let y_min = evaluation_floor(f.precision());
    if z.im < y_min {
        return Err(Error::BelowEvaluationFloor {
            y: z.im,
            y_min,
            precision: f.precision(),
        });
    }
    Ok(f.eval(z))
}

/// `|f(γz) − factor·f(z)| / |f(z)|` using the character attached to `f`.
pub fn relative_residual(f: &QExpansion, chi: &DirichletCharacter, g: &GroupElement, z: Complex64) -> Result<f64> {
    let lhs = eval_checked(f, g.act(z))?;
    let fz = eval_checked(f, z)?;
    let factor = automorphy_factor(g, z, f.weight(), chi)?;
    Ok((lhs - factor * fz).norm() / fz.norm().max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, Serialize)]
pub struct ModularityFailure {
    pub gamma: GroupElement,
    pub z: [f64; 2],
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModularityReport {
    pub checks: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
    pub failures: Vec<ModularityFailure>,
}

/// Checks the transformation law for each generator at `points_per_gamma`
/// random `z` with `|Re z| ≤ 1/2` and `0.3 ≤ Im z ≤ 2`.
///
/// Generators outside `Γ₀(4)` cannot be tested with the theta multiplier and
/// are reported as failures with infinite residual.
pub fn verify_modularity(
    f: &QExpansion,
    generators: &[GroupElement],
    tol: f64,
    points_per_gamma: usize,
    seed: u64,
) -> Result<ModularityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ModularityReport {
        checks: 0,
        max_residual: 0.0,
        tol,
        passed: true,
        failures: vec![],
    };
    for g in generators {
        for _ in 0..points_per_gamma.max(1) {
            let z = Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(0.3..=2.0));
            let r = match relative_residual(f, f.character(), g, z) {
                Ok(r) => r,
                Err(Error::NotInGamma0 { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            report.checks += 1;
            report.max_residual = report.max_residual.max(r);
            if !(r <= tol) {
                report.passed = false;
                report.failures.push(ModularityFailure {
                    gamma: *g,
                    z: [z.re, z.im],
                    residual: r,
                });
            }
        }
    }
    Ok(report)
}

/// Points `z` with `Im z` and `Im γz` both of size about `1/|c|`, which keeps
/// the number of terms needed on both sides small.
fn balanced_point<R: Rng>(g: &GroupElement, rng: &mut R) -> Complex64 {
    if g.c == 0 {
        return Complex64::new(rng.gen_range(-0.5..=0.5), rng.gen_range(0.3..=2.0));
    }
    let c = g.c as f64;
    let t = rng.gen_range(0.6..=1.6);
    let s = rng.gen_range(-0.5..=0.5);
    Complex64::new(-(g.d as f64) / c + s / c.abs(), t / c.abs())
}

/// Candidate characters `η₀·(D/·)` mod the level of `f`, where `η₀` is the
/// attached character and `D` ranges over `±1, ±2` times odd divisors of the level.
pub fn candidate_characters(f: &QExpansion) -> Vec<DirichletCharacter> {
    let level = f.level();
    let mut odd = level;
    while odd % 2 == 0 {
        odd /= 2;
    }
    let mut out: Vec<DirichletCharacter> = vec![];
    for q in divisors(odd) {
        for u in [1i64, -1, 2, -2] {
            let disc = u * q as i64;
            if let Ok(k) = DirichletCharacter::kronecker(disc, level) {
                let c = f.character().mul(&k);
                if !out.iter().any(|o| o.agrees_with(&c)) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Chooses among [`candidate_characters`] the one satisfying the
/// transformation law on random elements of `Γ₀(level)`; returns `f` with
/// that character attached.
pub fn detect_character(f: &QExpansion, trials: usize, tol: f64, seed: u64) -> Result<QExpansion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = f.level();
    let mut gens = vec![];
    while gens.len() < trials.max(4) {
        let g = GroupElement::random_gamma0(&mut rng, level, 8 * level as i64);
        if g.c != 0 && g.d.rem_euclid(level as i64) != 1 {
            gens.push(g);
        }
    }
    let points: Vec<Complex64> = gens.iter().map(|g| balanced_point(g, &mut rng)).collect();
    for chi in candidate_characters(f) {
        let mut ok = true;
        for (g, z) in gens.iter().zip(&points) {
            if relative_residual(f, &chi, g, *z)? > tol {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(f.with_modular_data(f.weight(), level, chi));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no candidate character mod {level} satisfies the transformation law"
    )))
}
