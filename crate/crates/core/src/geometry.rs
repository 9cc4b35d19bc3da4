//! The upper half plane: point-pair distance, Möbius action, the set `ℱ(2N)`
//! and reduction into it, and a finite-difference check of `Δ_κ`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::numtheory::{divisors, ext_gcd, gcd, is_squarefree};
use crate::modular::{al_coset_rep, GroupElement};

/// A point `x + iy` with `y > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UHPoint {
    pub x: f64,
    pub y: f64,
}

impl UHPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(format!("{x}+{y}i is not in the upper half plane")));
        }
        Ok(UHPoint { x, y })
    }

    pub fn i() -> Self {
        UHPoint { x: 0.0, y: 1.0 }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }
}

impl fmt::Display for UHPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.x < 0.0 {
            write!(f, "-{}+{}i", -self.x, self.y)
        } else {
            write!(f, "{}+{}i", self.x, self.y)
        }
    }
}

/// `u(z, w) = |z − w|² / (4 Im z Im w)`.
pub fn u_distance(z: UHPoint, w: UHPoint) -> f64 {
    ((z.x - w.x).powi(2) + (z.y - w.y).powi(2)) / (4.0 * z.y * w.y)
}

/// Hyperbolic distance, `cosh d = 2u + 1`.
pub fn hyperbolic_distance(z: UHPoint, w: UHPoint) -> f64 {
    (2.0 * u_distance(z, w) + 1.0).acosh()
}

/// `gz` for `det g > 0`, with `Im(gz) = det(g)·y/|cz+d|²`.
pub fn mobius_apply(g: &GroupElement, z: UHPoint) -> UHPoint {
    let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
    let cxd = c * z.x + d;
    let den = cxd * cxd + c * c * z.y * z.y;
    let x = ((a * z.x + b) * cxd + a * c * z.y * z.y) / den;
    UHPoint {
        x,
        y: g.det() as f64 * z.y / den,
    }
}

/// A violated inequality of `ℱ(2N)`: either `Im z < √3/(4N)` (reported with
/// `(c, d) = (0, 1)`), or `|cz+d|² < 1/(2N)` for the given pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub c: i64,
    pub d: i64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    ImBelow,
    BottomRow,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WitnessKind::ImBelow => write!(f, "Im z = {} < {}", self.value, self.bound),
            WitnessKind::BottomRow => write!(
                f,
                "|cz+d|^2 = {} < {} at (c, d) = ({}, {})",
                self.value, self.bound, self.c, self.d
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub inside: bool,
    pub witness: Option<Witness>,
    /// Number of `(c, d)` pairs examined.
    pub pairs_checked: u64,
}

/// Tests `Im z ≥ √3/(4N)` and `|cz+d|² ≥ 1/(2N)` for all `(c, d) ≠ (0, 0)`.
///
/// Only `|c| ≤ 1/(y√(2N))` can fail the second inequality, and for each such
/// `c` the smallest `|cx + d|` occurs at `d = ⌊−cx⌋` or `⌈−cx⌉`, so the check
/// is finite and complete.
pub fn in_fundamental_set(z: UHPoint, n: u64) -> MembershipReport {
    let nf = n as f64;
    let im_bound = 3f64.sqrt() / (4.0 * nf);
    if z.y < im_bound {
        return MembershipReport {
            inside: false,
            witness: Some(Witness {
                kind: WitnessKind::ImBelow,
                c: 0,
                d: 1,
                value: z.y,
                bound: im_bound,
            }),
            pairs_checked: 0,
        };
    }
    let bound = 1.0 / (2.0 * nf);
    let cmax = (1.0 / (z.y * (2.0 * nf).sqrt())).floor() as i64;
    let mut checked = 0;
    let mut worst: Option<Witness> = None;
    for c in 1..=cmax {
        let centre = -(c as f64) * z.x;
        for d in [centre.floor() as i64, centre.ceil() as i64] {
            checked += 1;
            let re = c as f64 * z.x + d as f64;
            let v = re * re + (c as f64 * z.y).powi(2);
            if v < bound && worst.is_none_or(|w| v < w.value) {
                worst = Some(Witness {
                    kind: WitnessKind::BottomRow,
                    c,
                    d,
                    value: v,
                    bound,
                });
            }
        }
    }
    MembershipReport {
        inside: worst.is_none(),
        witness: worst,
        pairs_checked: checked,
    }
}

/// One factor of the reduction word `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Translate(i64),
    /// An element of `Γ₀(2N)`.
    Gamma0(GroupElement),
    /// The canonical Atkin–Lehner representative for the exact divisor `Q | 2N`.
    AtkinLehner(u64),
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Translate(k) => write!(f, "T^{k}"),
            Move::Gamma0(g) => write!(f, "{g}"),
            Move::AtkinLehner(q) => write!(f, "W'({q})"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Reduction {
    pub point: UHPoint,
    /// `δ ∈ A₀(2N)` with `δz = point`; determinant is the exact divisor `Q`.
    pub delta: GroupElement,
    /// `δ` as a product of moves, leftmost factor first.
    pub word: Vec<Move>,
    pub membership: MembershipReport,
    pub candidates: u64,
}

impl Reduction {
    pub fn recompose(&self, n: u64) -> Result<GroupElement> {
        let mut m = GroupElement::IDENTITY;
        for mv in &self.word {
            m = m * match mv {
                Move::Translate(k) => GroupElement::translation(*k),
                Move::Gamma0(g) => *g,
                Move::AtkinLehner(q) => al_coset_rep(*q, n)?,
            };
        }
        Ok(m)
    }
}

/// Exact divisors `Q` of `2N` (`gcd(Q, 2N/Q) = 1`).
pub fn exact_divisors(two_n: u64) -> Vec<u64> {
    divisors(two_n)
        .into_iter()
        .filter(|&q| gcd(q as i64, (two_n / q) as i64) == 1)
        .collect()
}

const CANDIDATE_LIMIT: u64 = 100_000_000;
const TIE_MARGIN: f64 = 1e-12;

/// Moves `z` to a point of maximal imaginary part in its `A₀(2N)`-orbit,
/// normalized to `|Re| ≤ 1/2`.
///
/// `A₀(2N)` is the union of the cosets `Γ₀(2N)·W(Q)` over exact divisors `Q`
/// of `2N`. Elements of the `Q`-coset are, up to scaling, the matrices
/// `[[Qα, β], [2Nγ, Qδ]]` of determinant `Q`, and such a matrix exists for a
/// bottom row `(2Nγ, Qδ)` iff `gcd(Qδ, (2N/Q)γ) = 1`. For each `Q` all bottom
/// rows that could beat the current best `Im` are enumerated, so the result
/// is a global maximum. A candidate replaces the incumbent only if it is
/// larger by a relative margin of `1e-12`.
pub fn reduce_to_f(z: UHPoint, n: u64) -> Result<Reduction> {
    if n == 0 || n % 2 == 0 || !is_squarefree(n) {
        return Err(Error::InvalidArgument(format!("N = {n} must be odd and squarefree")));
    }
    let two_n = 2 * n as i64;
    let k0 = -(z.x.round() as i64);
    let z0 = UHPoint { x: z.x + k0 as f64, y: z.y };

    let mut best = (z0.y, 1u64, 0i64, 1i64);
    let mut candidates = 0u64;
    for q in exact_divisors(2 * n) {
        let qi = q as i64;
        let qf = q as f64;
        for g in 1i64.. {
            let c = two_n * g;
            let cf = c as f64;
            // Im = Q y / |cz+d|² > B forces c² y² < Q y / B
            let room = qf * z0.y / best.0 - cf * cf * z0.y * z0.y;
            if room <= 0.0 {
                break;
            }
            let w = room.sqrt();
            let lo = ((-cf * z0.x - w) / qf).ceil() as i64;
            let hi = ((-cf * z0.x + w) / qf).floor() as i64;
            for dd in lo..=hi {
                candidates += 1;
                if candidates > CANDIDATE_LIMIT {
                    return Err(Error::ReductionDiverged {
                        moves: candidates as usize,
                        trace: vec![format!("z = {z}"), format!("best Im so far {}", best.0)],
                    });
                }
                let d = qi * dd;
                if gcd(d, (two_n / qi) * g) != 1 {
                    continue;
                }
                let re = cf * z0.x + d as f64;
                let im = qf * z0.y / (re * re + cf * cf * z0.y * z0.y);
                if im > best.0 * (1.0 + TIE_MARGIN) {
                    best = (im, q, c, d);
                }
            }
        }
    }

    let (_, q, c, d) = best;
    let m = if q == 1 && c == 0 {
        GroupElement::IDENTITY
    } else {
        let qi = q as i64;
        let (g, s, t) = ext_gcd(d, (two_n / qi) * (c / two_n));
        debug_assert_eq!(g, 1);
        GroupElement::new(qi * s, -t, c, d)
    };
    debug_assert_eq!(m.det(), q as i128);
    let z1 = mobius_apply(&m, z0);
    let k1 = -(z1.x.round() as i64);
    let point = UHPoint { x: z1.x + k1 as f64, y: z1.y };
    let delta = GroupElement::translation(k1) * m * GroupElement::translation(k0);

    let mut word = vec![];
    if k1 != 0 {
        word.push(Move::Translate(k1));
    }
    if !(q == 1 && c == 0) {
        let w = al_coset_rep(q, n)?;
        let gamma = (m * w.adjugate())
            .div_exact(w.det() as i64)
            .expect("same Atkin-Lehner coset");
        if !gamma.is_identity_up_to_sign() {
            word.push(Move::Gamma0(gamma));
        }
        if q != 1 {
            word.push(Move::AtkinLehner(q));
        }
    }
    if k0 != 0 {
        word.push(Move::Translate(k0));
    }

    let membership = in_fundamental_set(point, n);
    if !membership.inside {
        return Err(Error::OutsideFundamentalSet {
            point: point.to_string(),
            n,
            witness: membership.witness.map(|w| w.to_string()).unwrap_or_default(),
        });
    }
    Ok(Reduction {
        point,
        delta,
        word,
        membership,
        candidates,
    })
}

/// Relative residual of `Δ_κ F − s(1−s) F` at `z` with `s = κ/2`, using
/// central differences of step `h`. Falls back to the absolute residual when
/// `F(z)` vanishes.
pub fn laplacian_eigencheck<F>(f: F, kappa: f64, z: Complex64, h: f64) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let y = z.im;
    let f0 = f(z);
    let fxp = f(z + h);
    let fxm = f(z - h);
    let fyp = f(z + Complex64::new(0.0, h));
    let fym = f(z - Complex64::new(0.0, h));
    let fxx = (fxp - 2.0 * f0 + fxm) / (h * h);
    let fyy = (fyp - 2.0 * f0 + fym) / (h * h);
    let fx = (fxp - fxm) / (2.0 * h);
    let lap = -y * y * (fxx + fyy) + Complex64::new(0.0, kappa * y) * fx;
    let s = kappa / 2.0;
    let r = (lap - s * (1.0 - s) * f0).norm();
    if f0.norm() > 1e-300 {
        r / f0.norm()
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> UHPoint {
        UHPoint::new(x, y).unwrap()
    }

    #[test]
    fn u_examples() {
        assert_eq!(u_distance(UHPoint::i(), UHPoint::i()), 0.0);
        assert!((u_distance(UHPoint::i(), p(1.0, 1.0)) - 0.25).abs() < 1e-15);
        assert!((u_distance(UHPoint::i(), p(0.0, 2.0)) - 0.125).abs() < 1e-15);
        let d = hyperbolic_distance(UHPoint::i(), p(0.0, 2.0));
        assert!((d - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn mobius_examples() {
        let i = UHPoint::i();
        assert_eq!(mobius_apply(&GroupElement::IDENTITY, i), i);
        let s = mobius_apply(&GroupElement::new(0, -1, 1, 0), i);
        assert!((s.x).abs() < 1e-15 && (s.y - 1.0).abs() < 1e-15);
        assert_eq!(mobius_apply(&GroupElement::translation(1), i), p(1.0, 1.0));
    }

    #[test]
    fn u_is_mobius_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let g = GroupElement::random_gamma0(&mut rng, 1, 30);
            let z = p(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0));
            let w = p(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0));
            let (a, b) = (u_distance(z, w), u_distance(mobius_apply(&g, z), mobius_apply(&g, w)));
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
            let cosh = hyperbolic_distance(z, w).cosh();
            assert!((cosh - (2.0 * a + 1.0)).abs() <= 1e-10 * cosh);
        }
    }

    #[test]
    fn membership_examples() {
        assert!(in_fundamental_set(p(0.0, 2.0), 1).inside);
        let r = in_fundamental_set(p(0.0, 0.001), 1);
        assert!(!r.inside);
        let w = r.witness.unwrap();
        assert_eq!((w.kind, w.c, w.d), (WitnessKind::ImBelow, 0, 1));
        for n in [1u64, 3, 5] {
            assert!(!in_fundamental_set(p(0.0, 0.1 / n as f64), n).inside);
        }
        // |z − 0|² small: (c, d) = (1, 0) fails for N = 1 at z = 0.1 + 0.5i
        let r = in_fundamental_set(p(0.1, 0.5), 1);
        assert!(!r.inside);
        assert_eq!(r.witness.unwrap().kind, WitnessKind::BottomRow);
    }

    /// Membership by brute force over a box of (c, d).
    fn brute_inside(z: UHPoint, n: u64) -> bool {
        let nf = n as f64;
        if z.y < 3f64.sqrt() / (4.0 * nf) {
            return false;
        }
        let r = (2.0 * nf * (z.x.abs() + 1.0)).ceil() as i64 + (1.0 / z.y).ceil() as i64;
        for c in -r..=r {
            for d in -r..=r {
                if (c, d) != (0, 0) {
                    let v = (c as f64 * z.x + d as f64).powi(2) + (c as f64 * z.y).powi(2);
                    if v < 1.0 / (2.0 * nf) {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn membership_matches_box_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..400 {
            let n = [1u64, 3, 5][rng.gen_range(0..3)];
            let z = p(rng.gen_range(-0.5..0.5), rng.gen_range(0.05..1.2));
            assert_eq!(in_fundamental_set(z, n).inside, brute_inside(z, n), "z = {z}, N = {n}");
        }
    }

    #[test]
    fn reduce_examples() {
        let z = p(0.1, 2.0);
        let r = reduce_to_f(z, 1).unwrap();
        assert_eq!(r.point, z);
        assert_eq!(r.delta, GroupElement::IDENTITY);
        assert!(r.word.is_empty());

        let r = reduce_to_f(p(5.3, 0.2), 1).unwrap();
        assert!(r.point.y >= 3f64.sqrt() / 4.0);
        assert!(r.point.x.abs() <= 0.5 + 1e-12);
        assert_eq!(r.recompose(1).unwrap(), r.delta);
        let moved = mobius_apply(&r.delta, p(5.3, 0.2));
        assert!((moved.x - r.point.x).abs() < 1e-12 && (moved.y - r.point.y).abs() < 1e-12);
    }

    #[test]
    fn reduction_is_orbit_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1u64, 3, 5, 15] {
            for _ in 0..20 {
                let w0 = p(rng.gen_range(-0.5..0.5), rng.gen_range(0.05..2.0));
                let w = reduce_to_f(w0, n).unwrap().point;
                let g = GroupElement::random_gamma0(&mut rng, 2 * n, 40);
                let z = mobius_apply(&g, w);
                let r = reduce_to_f(z, n).unwrap();
                assert!((r.point.y - w.y).abs() < 1e-9 * w.y, "N={n}: {} vs {}", r.point.y, w.y);
                assert_eq!(r.recompose(n).unwrap(), r.delta);
            }
        }
    }

    #[test]
    fn reduce_rejects_even_level() {
        assert!(reduce_to_f(UHPoint::i(), 2).is_err());
    }

    #[test]
    fn laplacian_of_holomorphic_weight_form() {
        // F = y^{κ/2} e(z) is an eigenfunction for every κ
        let kappa = 1.5;
        let f = |z: Complex64| {
            z.im.powf(kappa / 2.0) * (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * z).exp()
        };
        let r = laplacian_eigencheck(f, kappa, Complex64::new(0.1, 0.8), 1e-4);
        assert!(r < 1e-5, "{r}");
        assert_eq!(laplacian_eigencheck(|_| Complex64::new(0.0, 0.0), 0.5, Complex64::new(0.0, 1.0), 1e-4), 0.0);
    }
}
