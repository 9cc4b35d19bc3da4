//! Point-pair invariants, their Selberg transform, truncated automorphic
//! kernel sums and the geometric-side majorant `R`.

use num_complex::Complex64;
use serde::Serialize;

use crate::amplifier::AmplifierWeights;
use crate::error::{Error, Result};
use crate::geometry::{mobius_apply, u_distance, UHPoint};
use crate::latcount::{LatticeQuery, DEFAULT_BUDGET};
use crate::modular::{cocycle_j, DirichletCharacter, GroupElement, Weight};
use crate::quadrature::integrate;

/// Kernel profile as a function of `u(z, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Profile {
    /// `e^{-u/ρ}`.
    Gaussian { rho: f64 },
    /// `(1 - u/δ)²` on `u ≤ δ`, zero beyond.
    Bump { delta: f64 },
}

/// `k(z, w) = scale · profile(u(z, w))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointPairInvariant {
    pub profile: Profile,
    pub scale: f64,
}

impl PointPairInvariant {
    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        Ok(PointPairInvariant {
            profile: Profile::Gaussian { rho },
            scale: 1.0,
        })
    }

    pub fn bump(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("bump radius must be positive, got {delta}")));
        }
        Ok(PointPairInvariant {
            profile: Profile::Bump { delta },
            scale: 1.0,
        })
    }

    pub fn scaled(self, s: f64) -> Self {
        PointPairInvariant {
            scale: self.scale * s,
            ..self
        }
    }

    pub fn k(&self, u: f64) -> f64 {
        let base = match self.profile {
            Profile::Gaussian { rho } => (-u / rho).exp(),
            Profile::Bump { delta } => {
                if u <= delta {
                    (1.0 - u / delta).powi(2)
                } else {
                    0.0
                }
            }
        };
        self.scale * base
    }

    /// Radius of the support, if compact.
    pub fn support(&self) -> Option<f64> {
        match self.profile {
            Profile::Bump { delta } => Some(delta),
            Profile::Gaussian { .. } => None,
        }
    }

    /// Decay certificate: `u ≥ U ⇒ k(u) ≤ eps`. `k` is nonincreasing in `u`.
    pub fn decay_radius(&self, eps: f64) -> f64 {
        match self.profile {
            Profile::Bump { delta } => delta,
            Profile::Gaussian { rho } => {
                if self.scale <= eps {
                    0.0
                } else {
                    rho * (self.scale / eps).ln()
                }
            }
        }
    }
}

/// `((z, w))^κ`: the unit `(w - z̄)/|w - z̄|` raised to `κ` on the principal
/// branch. `arg(w - z̄) ∈ (0, π)`, so the branch is continuous on `ℍ × ℍ`.
pub fn phase_factor(z: Complex64, w: Complex64, weight: Weight) -> Complex64 {
    let r = w - z.conj();
    Complex64::from_polar(1.0, weight.kappa() * r.arg())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SelbergValue {
    pub h: f64,
    /// Imaginary part of the computed integral; zero up to quadrature error.
    pub imag: f64,
    pub error: f64,
}

/// `h(t) = y^{-1/2-it} ∬ k(z, w) Im(w)^{1/2+it} dμ(w)`, by nested adaptive
/// quadrature in `(x, s)` with `Im w = e^s`.
pub fn selberg_h_at(k: &PointPairInvariant, t: f64, z: UHPoint, tol: f64) -> Result<SelbergValue> {
    let u_max = k.support().unwrap_or_else(|| k.decay_radius(tol * 1e-4));
    if u_max <= 0.0 || k.scale == 0.0 {
        return Ok(SelbergValue {
            h: 0.0,
            imag: 0.0,
            error: 0.0,
        });
    }
    let d = (1.0 + 2.0 * u_max).acosh();
    let (s_lo, s_hi) = (z.y.ln() - d, z.y.ln() + d);
    let inner_tol = tol * 1e-2 / (s_hi - s_lo);
    let failure = std::cell::Cell::new(None::<f64>);
    let outer = |s: f64| {
        let v = s.exp();
        let room = 4.0 * z.y * v * u_max - (v - z.y).powi(2);
        if room <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let half = room.sqrt();
        let w_of = |x: f64| UHPoint { x, y: v };
        let inner = integrate(
            |x| Complex64::new(k.k(u_distance(w_of(x), z)), 0.0),
            z.x - half,
            z.x + half,
            inner_tol / (-0.5 * s).exp().max(1e-300),
            4000,
        );
        match inner {
            Ok(r) => r.value * Complex64::new(-0.5 * s, t * s).exp(),
            Err(Error::QuadratureNotConverged { achieved, .. }) => {
                failure.set(Some(achieved));
                Complex64::new(0.0, 0.0)
            }
            Err(_) => unreachable!(),
        }
    };
    let r = integrate(outer, s_lo, s_hi, tol * 0.5, 4000)?;
    if let Some(achieved) = failure.get() {
        return Err(Error::QuadratureNotConverged { achieved, target: tol });
    }
    let value = r.value / Complex64::new(0.5 * z.y.ln(), t * z.y.ln()).exp();
    Ok(SelbergValue {
        h: value.re,
        imag: value.im,
        error: r.error,
    })
}

/// `h(t)` at the base point `i` with absolute target `1e-8`.
pub fn selberg_h(k: &PointPairInvariant, t: f64) -> Result<SelbergValue> {
    selberg_h_at(k, t, UHPoint::i(), 1e-8)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelSum {
    pub value: Complex64,
    pub terms: usize,
    /// Sum taken over `γ` with `u(z, γw) ≤ u_cut`.
    pub u_cut: f64,
    pub tail_bound: f64,
}

fn shell_count(z: UHPoint, w: UHPoint, modulus: u64, delta: f64) -> Result<usize> {
    let q = LatticeQuery {
        source: w,
        target: z,
        ell: 1,
        modulus,
        delta,
    };
    q.count(DEFAULT_BUDGET)
}

/// Upper bound on `Σ_{u(z,γw) > U} |k(z, γw)|` from counts on dyadic shells
/// `U·2^j < u ≤ U·2^{j+1}`, each term bounded by `k(U·2^j)`.
pub fn tail_bound(z: UHPoint, w: UHPoint, modulus: u64, k: &PointPairInvariant, u_cut: f64) -> Result<f64> {
    if let Some(r) = k.support() {
        if u_cut >= r {
            return Ok(0.0);
        }
    }
    let mut total = 0.0;
    let mut last = f64::INFINITY;
    let mut lo = u_cut.max(1e-3);
    for _ in 0..40 {
        let hi = 2.0 * lo;
        let term = shell_count(z, w, modulus, hi)? as f64 * k.k(lo);
        total += term;
        if term == 0.0 && k.k(lo) == 0.0 {
            return Ok(total);
        }
        if term <= 0.25 * last && term < 1e-3 * total.max(1e-300) {
            // shells decay at least geometrically from here on
            return Ok(total + term);
        }
        last = term;
        lo = hi;
    }
    Ok(f64::INFINITY)
}

/// `K(z, w) = Σ_{γ ∈ Γ₀(4N)} η(γ) J(γ, w)^{2κ} ((z, γw))^κ k(z, γw)`,
/// truncated to `u(z, γw) ≤ U` with `U` from the decay certificate.
pub fn kernel_sum_k(
    z: UHPoint,
    w: UHPoint,
    n: u64,
    eta: &DirichletCharacter,
    weight: Weight,
    k: &PointPairInvariant,
    tol: f64,
) -> Result<KernelSum> {
    let u_cut = k.support().unwrap_or_else(|| k.decay_radius(tol * 1e-3).max(1e-3));
    kernel_sum_k_cut(z, w, n, eta, weight, k, u_cut, tol)
}

#[allow(clippy::too_many_arguments)]
pub fn kernel_sum_k_cut(
    z: UHPoint,
    w: UHPoint,
    n: u64,
    eta: &DirichletCharacter,
    weight: Weight,
    k: &PointPairInvariant,
    u_cut: f64,
    tol: f64,
) -> Result<KernelSum> {
    let modulus = 4 * n;
    let q = LatticeQuery {
        source: w,
        target: z,
        ell: 1,
        modulus,
        delta: u_cut,
    };
    let gammas = q.enumerate(DEFAULT_BUDGET)?;
    let mut value = Complex64::new(0.0, 0.0);
    for g in &gammas {
        value += kernel_term(z, w, g, eta, weight, k)?;
    }
    let tail = tail_bound(z, w, modulus, k, u_cut)?;
    if tail > tol {
        return Err(Error::TailTooLarge {
            bound: tail,
            tol,
            suggested_u: 2.0 * u_cut,
        });
    }
    Ok(KernelSum {
        value,
        terms: gammas.len(),
        u_cut,
        tail_bound: tail,
    })
}

fn kernel_term(
    z: UHPoint,
    w: UHPoint,
    g: &GroupElement,
    eta: &DirichletCharacter,
    weight: Weight,
    k: &PointPairInvariant,
) -> Result<Complex64> {
    let gw = mobius_apply(g, w);
    let j = cocycle_j(g, w.z())?.powi(weight.twice);
    Ok(eta.eval(g.d) * j * phase_factor(z.z(), gw.z(), weight) * k.k(u_distance(z, gw)))
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricSide {
    pub value: f64,
    /// `(ℓ, |y_ℓ|, #M(z, ℓ, N′), Σ|k|)` per support point.
    pub terms: Vec<(u64, f64, usize, f64)>,
    /// Support points skipped because enumeration exceeded the budget.
    pub skipped: Vec<u64>,
    pub partial: bool,
}

/// `Σ_ℓ |y_ℓ|/√ℓ · Σ_{γ ∈ M(z, ℓ, N′)} |k(γz, z)|` for explicit `(ℓ, y_ℓ)`.
pub fn geometric_side_r_coeffs(
    z: UHPoint,
    coeffs: &[(u64, Complex64)],
    modulus: u64,
    k: &PointPairInvariant,
    budget: u64,
) -> Result<GeometricSide> {
    let u_max = k.support().unwrap_or_else(|| k.decay_radius(1e-14));
    let mut value = 0.0;
    let mut terms = vec![];
    let mut skipped = vec![];
    for &(ell, y) in coeffs {
        if y.norm() == 0.0 {
            continue;
        }
        let q = LatticeQuery::at(z, ell, modulus, u_max.max(1e-12));
        let ms = match q.enumerate(budget) {
            Ok(ms) => ms,
            Err(Error::EnumerationBudget { .. }) => {
                skipped.push(ell);
                continue;
            }
            Err(e) => return Err(e),
        };
        let ks: f64 = ms.iter().map(|g| k.k(u_distance(mobius_apply(g, z), z)).abs()).sum();
        value += y.norm() / (ell as f64).sqrt() * ks;
        terms.push((ell, y.norm(), ms.len(), ks));
    }
    Ok(GeometricSide {
        value,
        terms,
        partial: !skipped.is_empty(),
        skipped,
    })
}

/// Majorant `R` for amplifier weights; `n_prime` is `2N` or `4N`.
pub fn geometric_side_r(z: UHPoint, weights: &AmplifierWeights, n_prime: u64, k: &PointPairInvariant) -> Result<GeometricSide> {
    let mut coeffs = vec![(1u64, weights.y_const)];
    for (&ell, &y) in &weights.y {
        let ell = u64::try_from(ell).map_err(|_| Error::InvalidArgument(format!("index {ell} exceeds u64")))?;
        coeffs.push((ell, y));
    }
    geometric_side_r_coeffs(z, &coeffs, n_prime, k, DEFAULT_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const W32: Weight = Weight::from_twice(3);

    fn p(x: f64, y: f64) -> UHPoint {
        UHPoint::new(x, y).unwrap()
    }

    #[test]
    fn phase_examples() {
        let i = Complex64::new(0.0, 1.0);
        let e = phase_factor(i, i, W32);
        assert!((e - Complex64::from_polar(1.0, 0.75 * std::f64::consts::PI)).norm() < 1e-15);
        assert_eq!(phase_factor(i, 2.0 * i, Weight::from_twice(0)), Complex64::new(1.0, 0.0));
        let (z, w) = (Complex64::new(0.3, 0.8), Complex64::new(-1.2, 2.0));
        let t = GroupElement::translation(1);
        assert!((phase_factor(t.act(z), t.act(w), W32) - phase_factor(z, w, W32)).norm() < 1e-15);
    }

    #[test]
    fn phase_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let g = GroupElement::random_gamma0(&mut rng, 4, 30);
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0));
            let w = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0));
            for twice in [1, 3, 5] {
                let wt = Weight::from_twice(twice);
                let lhs = phase_factor(g.act(z), g.act(w), wt);
                let rhs = cocycle_j(&g, z).unwrap().powi(twice)
                    * cocycle_j(&g, w).unwrap().powi(-twice)
                    * phase_factor(z, w, wt);
                assert!((lhs - rhs).norm() < 1e-10, "twice={twice} g={g:?}");
            }
        }
    }

    #[test]
    fn selberg_zero_and_even() {
        let z = PointPairInvariant::bump(0.5).unwrap().scaled(0.0);
        assert_eq!(selberg_h(&z, 1.0).unwrap().h, 0.0);
        let k = PointPairInvariant::gaussian(0.3).unwrap();
        let a = selberg_h(&k, 0.7).unwrap();
        let b = selberg_h(&k, -0.7).unwrap();
        assert!((a.h - b.h).abs() < 1e-8);
        assert!(a.imag.abs() < 1e-8);
    }

    #[test]
    fn selberg_base_point() {
        for k in [PointPairInvariant::gaussian(0.3).unwrap(), PointPairInvariant::bump(0.4).unwrap()] {
            let a = selberg_h_at(&k, 1.0, UHPoint::i(), 1e-8).unwrap();
            let b = selberg_h_at(&k, 1.0, p(1.0, 2.0), 1e-8).unwrap();
            assert!((a.h - b.h).abs() < 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn selberg_gaussian_closed_inner() {
        // ∫ e^{-(x²+(v-1)²)/(4vρ)} dx = √(4πvρ) e^{-(v-1)²/(4vρ)}
        let rho = 0.3;
        let k = PointPairInvariant::gaussian(rho).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let f = |s: f64| {
                let v = s.exp();
                let g = (4.0 * std::f64::consts::PI * v * rho).sqrt() * (-(v - 1.0).powi(2) / (4.0 * v * rho)).exp();
                Complex64::new(g, 0.0) * Complex64::new(-0.5 * s, t * s).exp()
            };
            let oracle = integrate(f, -12.0, 12.0, 1e-12, 4000).unwrap().value.re;
            let h = selberg_h(&k, t).unwrap();
            assert!((h.h - oracle).abs() < 1e-8, "t={t}: {} vs {oracle}", h.h);
        }
    }

    #[test]
    fn kernel_at_high_point() {
        let z = p(0.0, 5.0);
        let k = PointPairInvariant::bump(0.001).unwrap();
        let chi = DirichletCharacter::trivial(4);
        let s = kernel_sum_k(z, z, 1, &chi, W32, &k, 1e-10).unwrap();
        assert_eq!(s.terms, 2);
        let expect = 2.0 * phase_factor(z.z(), z.z(), W32);
        assert!((s.value - expect).norm() < 1e-14);
        assert_eq!(s.tail_bound, 0.0);
    }

    #[test]
    fn kernel_automorphy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chi = DirichletCharacter::trivial(4);
        let k = PointPairInvariant::gaussian(0.25).unwrap();
        let z = p(0.1, 0.9);
        let w = p(-0.2, 0.7);
        let base = kernel_sum_k(z, w, 1, &chi, W32, &k, 1e-9).unwrap();
        assert!(base.value.norm() > 1e-3);
        for _ in 0..5 {
            let g = GroupElement::random_gamma0(&mut rng, 4, 6);
            let gz = mobius_apply(&g, z);
            let gw = mobius_apply(&g, w);
            let a = kernel_sum_k(gz, w, 1, &chi, W32, &k, 1e-9).unwrap();
            let b = kernel_sum_k(z, gw, 1, &chi, W32, &k, 1e-9).unwrap();
            let tol = 2.0 * (base.tail_bound + a.tail_bound + b.tail_bound) + 1e-10;
            assert!((a.value.norm() - base.value.norm()).abs() < tol);
            assert!((b.value.norm() - base.value.norm()).abs() < tol);
            let law = cocycle_j(&g, z.z()).unwrap().powi(3) * base.value;
            assert!((a.value - law).norm() < tol);
        }
    }

    #[test]
    fn tail_bound_dominates_truncation() {
        let chi = DirichletCharacter::trivial(4);
        let k = PointPairInvariant::gaussian(0.5).unwrap();
        let z = p(0.05, 0.8);
        let short = kernel_sum_k_cut(z, z, 1, &chi, W32, &k, 3.0, 1.0).unwrap();
        let long = kernel_sum_k_cut(z, z, 1, &chi, W32, &k, 6.0, 1.0).unwrap();
        assert!((short.value - long.value).norm() <= short.tail_bound);
        assert!(matches!(
            kernel_sum_k_cut(z, z, 1, &chi, W32, &k, 0.5, 1e-12),
            Err(Error::TailTooLarge { .. })
        ));
    }

    #[test]
    fn geometric_side_examples() {
        let z = p(0.0, 2.0);
        let k = PointPairInvariant::bump(0.01).unwrap();
        let one = [(1u64, Complex64::new(8.0, 0.0))];
        let r = geometric_side_r_coeffs(z, &one, 2, &k, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.terms[0].2, 2);
        assert!((r.value - 16.0).abs() < 1e-14);
        let r1 = geometric_side_r_coeffs(z, &one, 1, &k, DEFAULT_BUDGET).unwrap();
        assert_eq!(r1.terms[0].2, 2);
        let ri = geometric_side_r_coeffs(UHPoint::i(), &one, 1, &k, DEFAULT_BUDGET).unwrap();
        assert_eq!(ri.terms[0].2, 4);
        assert!((ri.value - 32.0).abs() < 1e-14);
        let zero = [(1u64, Complex64::new(0.0, 0.0)), (4, Complex64::new(0.0, 0.0))];
        assert_eq!(geometric_side_r_coeffs(z, &zero, 2, &k, DEFAULT_BUDGET).unwrap().value, 0.0);
        let two = geometric_side_r_coeffs(z, &one, 2, &k.scaled(2.0), DEFAULT_BUDGET).unwrap();
        assert!((two.value - 2.0 * r.value).abs() < 1e-13);
    }

    #[test]
    fn geometric_side_monotone() {
        let z = p(0.1, 0.9);
        let coeffs = [(1u64, Complex64::new(2.0, 0.0)), (4, Complex64::new(1.0, 0.0)), (9, Complex64::new(-1.0, 0.5))];
        let mut last = 0.0;
        for d in [0.1, 0.3, 0.8, 1.5] {
            let r = geometric_side_r_coeffs(z, &coeffs, 2, &PointPairInvariant::bump(d).unwrap(), DEFAULT_BUDGET)
                .unwrap()
                .value;
            assert!(r >= last);
            last = r;
        }
        let bigger = [(1u64, Complex64::new(3.0, 0.0)), (4, Complex64::new(1.0, 0.0)), (9, Complex64::new(-1.0, 0.5))];
        let k = PointPairInvariant::bump(1.5).unwrap();
        assert!(geometric_side_r_coeffs(z, &bigger, 2, &k, DEFAULT_BUDGET).unwrap().value >= last);
        let tiny = geometric_side_r_coeffs(z, &coeffs, 2, &PointPairInvariant::bump(50.0).unwrap(), 10).unwrap();
        assert!(tiny.partial);
    }
}
