//! Hecke operators `T(p²)` on half-integral weight q-expansions, normalized
//! eigenvalues `τ̃` and the relation table they satisfy.

use std::io::Write;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modular::numtheory::{exact_sqrt, gcd, is_prime, kronecker};
use crate::modular::GroupElement;
use crate::qexp::QExpansion;

/// Right coset representatives `[[a, b], [0, d]]` with `ad = ℓ`, `0 ≤ b < d`
/// and `gcd(a, b, d) = 1` of `Γ₀(M) diag(1, ℓ) Γ₀(M)` for `gcd(ℓ, M) = 1`.
pub fn coset_reps(ell: u64, level: u64) -> Result<Vec<GroupElement>> {
    if gcd(ell as i64, level as i64) != 1 {
        return Err(Error::NotCoprime { p: ell, level });
    }
    let l = ell as i64;
    let mut out = vec![];
    for a in (1..=l).rev().filter(|a| l % a == 0) {
        let d = l / a;
        for b in 0..d {
            if gcd(gcd(a, b), d) == 1 {
                out.push(GroupElement::new(a, b, 0, d));
            }
        }
    }
    Ok(out)
}

fn check_prime(p: u64, f: &QExpansion) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if f.level() % p == 0 {
        return Err(Error::NotCoprime { p, level: f.level() });
    }
    Ok(())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `p^e` for a possibly negative exponent.
fn rat_pow(p: u64, e: i32) -> BigRational {
    let base = rat(p as i64);
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        BigRational::one() / num_traits::pow(base, (-e) as usize)
    }
}

/// `T(p²)` with `κ = λ + 1/2`:
/// `b(n) = a(p²n) + η(p)((−1)^λ n / p) p^{λ−1} a(n) + η(p²) p^{2λ−1} a(n/p²)`,
/// indexed by total exponent `n`. The character must be real so that the
/// result stays rational.
pub fn hecke_t(f: &QExpansion, p: u64) -> Result<QExpansion> {
    check_prime(p, f)?;
    let lambda = f
        .weight()
        .lambda()
        .ok_or_else(|| Error::InvalidArgument(format!("weight {} is not half-integral", f.weight())))?;
    if !f.offset().is_integer() {
        return Err(Error::InvalidArgument(format!(
            "offset {} is not an integer",
            f.offset()
        )));
    }
    let eta_p = f.character().real_value(p as i64).ok_or(Error::NonRealCharacter)?;
    let eta_p2 = f
        .character()
        .real_value((p * p) as i64)
        .ok_or(Error::NonRealCharacter)?;
    let off = f.offset().to_integer() as usize;
    let p2 = (p * p) as usize;
    let top = (off + f.precision() - 1) / p2;
    if top < off {
        return Err(Error::InvalidArgument(format!(
            "precision {} too small for T({p}^2)",
            f.precision()
        )));
    }
    let new_prec = top - off + 1;
    let sign = if lambda % 2 == 0 { 1 } else { -1 };
    let mid = rat_pow(p, lambda - 1) * rat(eta_p as i64);
    let low = rat_pow(p, 2 * lambda - 1) * rat(eta_p2 as i64);
    let mut terms = vec![];
    for n in 0..new_prec {
        let e = n + off;
        let mut b = f.coeff(p2 * e - off);
        let k = kronecker(sign * e as i64, p as i64);
        if k != 0 {
            let a = f.coeff(n);
            if !a.is_zero() {
                b += &mid * rat(k as i64) * a;
            }
        }
        if e % p2 == 0 && e / p2 >= off {
            let a = f.coeff(e / p2 - off);
            if !a.is_zero() {
                b += &low * a;
            }
        }
        if !b.is_zero() {
            terms.push((n, b));
        }
    }
    QExpansion::from_terms(
        f.offset(),
        terms,
        new_prec,
        f.weight(),
        f.level(),
        f.character().clone(),
    )
}

/// `T(ℓ)`: zero unless `ℓ` is a square; `T(p²)` for a prime `p`.
pub fn hecke_operator(f: &QExpansion, ell: u64) -> Result<QExpansion> {
    match exact_sqrt(ell as u128) {
        None => Ok(f.zero_like()),
        Some(1) => Ok(f.clone()),
        Some(p) if is_prime(p as u64) => hecke_t(f, p as u64),
        Some(_) => Err(Error::InvalidArgument(format!(
            "T({ell}) is only implemented for squares of primes; compose T(p^2) instead"
        ))),
    }
}

/// Proportionality `g ≈ c·f` over the coefficients both define.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fit {
    pub value: f64,
    /// `‖g − c f‖ / ‖g‖`, or 0 when the rational ratio is exact.
    pub residual: f64,
    pub exact: bool,
}

pub fn proportionality(g: &QExpansion, f: &QExpansion) -> Result<Fit> {
    let n = g.precision().min(f.precision());
    let first = f
        .terms()
        .iter()
        .find(|t| t.0 < n)
        .ok_or_else(|| Error::InvalidArgument("form vanishes on the shared coefficient range".into()))?;
    let c = g.coeff(first.0) / &first.1;
    let mut exact = true;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let (a, b) = (f.coeff(k), g.coeff(k));
        let diff = &b - &c * &a;
        if !diff.is_zero() {
            exact = false;
        }
        num += diff.to_f64().unwrap_or(f64::INFINITY).powi(2);
        den += b.to_f64().unwrap_or(f64::INFINITY).powi(2);
    }
    let residual = if exact { 0.0 } else { (num / den.max(f64::MIN_POSITIVE)).sqrt() };
    Ok(Fit {
        value: c.to_f64().unwrap_or(f64::NAN),
        residual,
        exact,
    })
}

/// Normalized eigenvalues at a prime: `τ̃(ℓ) = λ̃(ℓ)/ℓ^{(κ−1)/2}`.
///
/// `τ̃(p⁴)` comes from the composite `T(p²)²` with eigenvalue `μ`: by the
/// table, `τ̃(p²)² = τ̃(p⁴) + η(p²)` (for the eigenvalue of the composite),
/// so `τ̃(p⁴) = μ̃ − η(p²)`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueRecord {
    pub p: u64,
    pub lambda_p2: Complex64,
    pub tau_p2: Complex64,
    /// Normalized eigenvalue of `T(p²)∘T(p²)`.
    pub mu_p2: Complex64,
    pub tau_p4: Complex64,
    pub eta_p: Complex64,
    pub eta_p2: Complex64,
    pub residual_p2: f64,
    pub residual_p4: f64,
    pub exact: bool,
    pub eigen: bool,
}

pub const EIGEN_TOL: f64 = 1e-9;

fn norm_factor(ell: u64, f: &QExpansion) -> f64 {
    (ell as f64).powf((f.weight().kappa() - 1.0) / 2.0)
}

pub fn eigenvalue_tau(f: &QExpansion, p: u64, tol: f64) -> Result<EigenvalueRecord> {
    if f.is_zero() {
        return Err(Error::InvalidArgument("zero form has no eigenvalues".into()));
    }
    let g = hecke_t(f, p)?;
    let fit2 = proportionality(&g, f)?;
    let h = hecke_t(&g, p)?;
    let fit4 = proportionality(&h, f)?;
    let s = norm_factor(p * p, f);
    let eta_p = f.character().eval(p as i64);
    let eta_p2 = f.character().eval((p * p) as i64);
    let tau_p2 = Complex64::new(fit2.value / s, 0.0);
    let mu = Complex64::new(fit4.value / (s * s), 0.0);
    Ok(EigenvalueRecord {
        p,
        lambda_p2: Complex64::new(fit2.value, 0.0),
        tau_p2,
        mu_p2: mu,
        tau_p4: mu - eta_p2,
        eta_p,
        eta_p2,
        residual_p2: fit2.residual,
        residual_p4: fit4.residual,
        exact: fit2.exact && fit4.exact,
        eigen: fit2.residual <= tol && fit4.residual <= tol,
    })
}

/// `τ̃(p²q²)` from the composite `T(p²)T(q²)` for distinct primes.
#[derive(Clone, Debug, Serialize)]
pub struct PairRecord {
    pub p: u64,
    pub q: u64,
    pub tau_p2q2: Complex64,
    pub residual: f64,
}

pub fn pair_tau(f: &QExpansion, p: u64, q: u64) -> Result<PairRecord> {
    let g = hecke_t(&hecke_t(f, p)?, q)?;
    let fit = proportionality(&g, f)?;
    let s = norm_factor(p * p * q * q, f);
    Ok(PairRecord {
        p,
        q,
        tau_p2q2: Complex64::new(fit.value / s, 0.0),
        residual: fit.residual,
    })
}

/// Checks that `T(p²)T(q²) = T(q²)T(p²)` on the shared coefficients.
pub fn commute(f: &QExpansion, p: u64, q: u64) -> Result<bool> {
    let a = hecke_t(&hecke_t(f, p)?, q)?;
    let b = hecke_t(&hecke_t(f, q)?, p)?;
    let n = a.precision().min(b.precision());
    Ok((0..n).all(|k| a.coeff(k) == b.coeff(k)))
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationCheck {
    pub identity: &'static str,
    pub p: u64,
    pub q: Option<u64>,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
    pub passed: bool,
}

impl RelationReport {
    /// The first failed identity as an error.
    pub fn require(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::RelationViolated {
                identity: c.identity,
                p: c.p,
                residual: c.residual,
            }),
        }
    }
}

pub const ID_MULTIPLICATIVE: &str = "(i) conj(tau(p^2)) tau(q^2) = conj(eta(p^2)) tau(p^2 q^2)";
pub const ID_SQUARE: &str = "(ii) tau(p^2)^2 - tau(p^4) = eta(p^2)";
pub const ID_MAX: &str = "(iii) max(|tau(p^2)|, |tau(p^4)|) >= 1/2";
pub const ID_ADJOINT: &str = "conj(lambda(p^2)) = conj(eta(p^2)) lambda(p^2)";

/// Verifies the relation table on eigenvalue records (and optional pair records).
pub fn verify_hecke_relations(recs: &[EigenvalueRecord], pairs: &[PairRecord], tol: f64) -> RelationReport {
    let mut checks = vec![];
    let mut push = |identity, p, q, residual: f64, ok: bool| {
        checks.push(RelationCheck {
            identity,
            p,
            q,
            residual,
            passed: ok,
        })
    };
    for r in recs {
        let res = (r.tau_p2 * r.tau_p2 - r.tau_p4 - r.eta_p2).norm();
        push(ID_SQUARE, r.p, None, res, res <= tol);
        let m = r.tau_p2.norm().max(r.tau_p4.norm());
        push(ID_MAX, r.p, None, (0.5 - m).max(0.0), m >= 0.5 - tol);
        let adj = (r.lambda_p2.conj() - r.eta_p2.conj() * r.lambda_p2).norm() / r.lambda_p2.norm().max(1.0);
        push(ID_ADJOINT, r.p, None, adj, adj <= tol);
    }
    for pr in pairs {
        let (Some(a), Some(b)) = (
            recs.iter().find(|r| r.p == pr.p),
            recs.iter().find(|r| r.p == pr.q),
        ) else {
            continue;
        };
        let lhs = a.tau_p2.conj() * b.tau_p2;
        let rhs = a.eta_p2.conj() * pr.tau_p2q2;
        let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
        push(ID_MULTIPLICATIVE, pr.p, Some(pr.q), res, res <= tol);
    }
    let passed = checks.iter().all(|c| c.passed);
    RelationReport { checks, passed }
}

/// CSV with columns `p, tau_p2_re, tau_p2_im, tau_p4_re, tau_p4_im, residual_p2, residual_p4, eigen`.
pub fn write_records_csv<W: Write>(recs: &[EigenvalueRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "p",
        "tau_p2_re",
        "tau_p2_im",
        "tau_p4_re",
        "tau_p4_im",
        "residual_p2",
        "residual_p4",
        "eigen",
    ])?;
    for r in recs {
        out.write_record([
            r.p.to_string(),
            format!("{:.17e}", r.tau_p2.re),
            format!("{:.17e}", r.tau_p2.im),
            format!("{:.17e}", r.tau_p4.re),
            format!("{:.17e}", r.tau_p4.im),
            format!("{:e}", r.residual_p2),
            format!("{:e}", r.residual_p4),
            r.eigen.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `χ₋₄(p)(p + 1)`, the `T(p²)` eigenvalue of `η(8z)³`, used as a sanity value.
pub fn eta8_cubed_lambda(p: u64) -> i64 {
    let chi = if p % 4 == 1 { 1 } else { -1 };
    chi * (p as i64 + 1)
}
