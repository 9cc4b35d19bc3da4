//! The theta multiplier, the normalized half-integral weight cocycle `J` and
//! slash actions.
//!
//! Square roots are taken on the principal branch, `-π/2 < arg √w ≤ π/2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::character::{DirichletCharacter, RootOfUnity};
use super::matrix::GroupElement;
use super::numtheory::kronecker;
use crate::error::{Error, Result};

/// A weight `κ = twice / 2`; half-integral when `twice` is odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    pub twice: i32,
}

impl Weight {
    pub const fn from_twice(twice: i32) -> Self {
        Weight { twice }
    }

    pub fn kappa(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_half_integral(self) -> bool {
        self.twice % 2 != 0
    }

    /// `λ` with `κ = λ + 1/2`, for half-integral weights.
    pub fn lambda(self) -> Option<i32> {
        self.is_half_integral().then(|| (self.twice - 1).div_euclid(2))
    }
}

impl std::ops::Add for Weight {
    type Output = Weight;
    fn add(self, o: Weight) -> Weight {
        Weight::from_twice(self.twice + o.twice)
    }
}

impl std::fmt::Display for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

const I_UNIT: RootOfUnity = RootOfUnity { num: 1, order: 4 };

/// `ε_d`: `1` for `d ≡ 1 (mod 4)` and `i` for `d ≡ 3 (mod 4)`, with the
/// residue taken in `{0,1,2,3}` so that negative `d` follow the same rule.
pub fn eps_d(d: i64) -> Result<RootOfUnity> {
    match d.rem_euclid(4) {
        1 => Ok(RootOfUnity::ONE),
        3 => Ok(I_UNIT),
        _ => Err(Error::EvenEps(d)),
    }
}

fn check_gamma0_4(g: &GroupElement) -> Result<()> {
    if !g.in_gamma0(4) {
        return Err(Error::NotInGamma0 { matrix: *g, level: 4 });
    }
    Ok(())
}

/// The root-of-unity part `ε_d⁻¹ (c/d)` of the theta multiplier.
pub fn theta_root(g: &GroupElement) -> Result<RootOfUnity> {
    check_gamma0_4(g)?;
    let eps = eps_d(g.d)?.conj();
    Ok(match kronecker(g.c, g.d) {
        1 => eps,
        -1 => eps.mul(RootOfUnity::MINUS_ONE),
        _ => unreachable!("(c/d) vanishes only when gcd(c,d) > 1"),
    })
}

/// `j(γ, z) = ε_d⁻¹ (c/d) (cz + d)^{1/2}`, so that `θ(γz) = j(γ, z) θ(z)`.
pub fn theta_multiplier(g: &GroupElement, z: Complex64) -> Result<Complex64> {
    Ok(theta_root(g)?.to_complex() * g.denominator(z).sqrt())
}

/// The unimodular cocycle `J(γ, z) = ε_d⁻¹ (c/d) (cz+d)^{1/2} / |cz+d|^{1/2}`.
pub fn cocycle_j(g: &GroupElement, z: Complex64) -> Result<Complex64> {
    let w = g.denominator(z);
    Ok(theta_root(g)?.to_complex() * (w / w.norm()).sqrt())
}

/// The automorphy factor of a weight-`κ` form with character `η`:
/// `η(d) · (ε_d⁻¹ (c/d))^{2κ} · ((cz+d)^{1/2})^{2κ}`.
pub fn automorphy_factor(
    g: &GroupElement,
    z: Complex64,
    weight: Weight,
    chi: &DirichletCharacter,
) -> Result<Complex64> {
    let root = theta_root(g)?.to_complex();
    let sq = g.denominator(z).sqrt();
    Ok(chi.eval(g.d) * (root * sq).powi(weight.twice))
}

/// A matrix together with a choice of metaplectic phase: `φ(z) =
/// i^quarter_turns · ((cz+d)/|cz+d|)^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metaplectic {
    pub matrix: GroupElement,
    pub quarter_turns: u8,
}

impl Metaplectic {
    pub fn principal(matrix: GroupElement) -> Self {
        Metaplectic {
            matrix,
            quarter_turns: 0,
        }
    }

    pub fn phi(&self, z: Complex64) -> Complex64 {
        let w = self.matrix.denominator(z);
        RootOfUnity::new(self.quarter_turns as i64, 4).to_complex() * (w / w.norm()).sqrt()
    }
}

/// `F|_κ[(A, φ)](z) = φ(z)^{-2κ} F(Az)` for a function `F` on the upper half
/// plane (typically `F = y^{κ/2} f`).
pub fn slash<F>(f: F, weight: Weight, a: &Metaplectic, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if a.matrix.det() <= 0 {
        return Err(Error::NotInvertible(a.matrix));
    }
    let phi = a.phi(z);
    Ok(phi.powi(-weight.twice) * f(a.matrix.act(z)))
}

/// `F|_κ[γ](z) = J(γ, z)^{-2κ} F(γz)` for `γ ∈ Γ₀(4)`.
pub fn slash_gamma<F>(f: F, weight: Weight, g: &GroupElement, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let j = cocycle_j(g, z)?;
    Ok(j.powi(-weight.twice) * f(g.act(z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn eps_examples() {
        assert_eq!(eps_d(5).unwrap(), RootOfUnity::ONE);
        assert_eq!(eps_d(7).unwrap(), I_UNIT);
        assert_eq!(eps_d(-3).unwrap(), RootOfUnity::ONE);
        assert_eq!(eps_d(-1).unwrap(), I_UNIT);
        assert!(matches!(eps_d(4), Err(Error::EvenEps(4))));
    }

    #[test]
    fn cocycle_trivial_cases() {
        let z = c(0.3, 1.1);
        let one = cocycle_j(&GroupElement::IDENTITY, z).unwrap();
        assert!((one - 1.0).norm() < 1e-15);
        let t = cocycle_j(&GroupElement::translation(1), c(0.0, 1.0)).unwrap();
        assert!((t - 1.0).norm() < 1e-15);
        assert!(cocycle_j(&GroupElement::new(1, 0, 2, 1), z).is_err());
    }

    #[test]
    fn cocycle_is_unimodular_and_a_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let g1 = GroupElement::random_gamma0(&mut rng, 4, 20);
            let g2 = GroupElement::random_gamma0(&mut rng, 4, 20);
            let mut sigma: Option<Complex64> = None;
            for _ in 0..4 {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0));
                let lhs = cocycle_j(&(g1 * g2), z).unwrap();
                let rhs = cocycle_j(&g1, g2.act(z)).unwrap() * cocycle_j(&g2, z).unwrap();
                assert!((lhs.norm() - 1.0).abs() < 1e-14);
                let s = lhs / rhs;
                assert!((s.powi(4) - 1.0).norm() < 1e-10, "sigma not a 4th root of unity");
                if let Some(prev) = sigma {
                    assert!((s - prev).norm() < 1e-10, "sigma depends on z");
                }
                sigma = Some(s);
            }
        }
    }

    #[test]
    fn slash_identity_and_scalar() {
        let f = |z: Complex64| z * z + 1.0;
        let z = c(0.2, 0.7);
        let w = Weight::from_twice(3);
        let id = slash(f, w, &Metaplectic::principal(GroupElement::IDENTITY), z).unwrap();
        assert!((id - f(z)).norm() < 1e-14);
        let two = slash(f, w, &Metaplectic::principal(GroupElement::scalar(2)), z).unwrap();
        assert!((two.norm() - f(z).norm()).abs() < 1e-13);
        assert!(slash(f, w, &Metaplectic::principal(GroupElement::new(1, 1, 1, 1)), z).is_err());
    }

    #[test]
    fn lambda_of_weight() {
        assert_eq!(Weight::from_twice(3).lambda(), Some(1));
        assert_eq!(Weight::from_twice(1).lambda(), Some(0));
        assert_eq!(Weight::from_twice(4).lambda(), None);
    }
}
