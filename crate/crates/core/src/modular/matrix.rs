use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::numtheory::{ext_gcd, gcd};

/// An integral 2×2 matrix `[[a, b], [c, d]]`, acting on the upper half
/// plane by Möbius transformations when its determinant is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[[i64; 2]; 2]", from = "[[i64; 2]; 2]")]
pub struct GroupElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl From<GroupElement> for [[i64; 2]; 2] {
    fn from(g: GroupElement) -> Self {
        [[g.a, g.b], [g.c, g.d]]
    }
}

impl From<[[i64; 2]; 2]> for GroupElement {
    fn from(m: [[i64; 2]; 2]) -> Self {
        GroupElement::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1, b: 0, c: 0, d: 1 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        GroupElement { a, b, c, d }
    }

    pub const fn translation(k: i64) -> Self {
        GroupElement::new(1, k, 0, 1)
    }

    pub const fn scalar(s: i64) -> Self {
        GroupElement::new(s, 0, 0, s)
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    pub fn adjugate(&self) -> Self {
        GroupElement::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn neg(&self) -> Self {
        GroupElement::new(-self.a, -self.b, -self.c, -self.d)
    }

    /// gcd of the four entries.
    pub fn content(&self) -> i64 {
        gcd(gcd(self.a, self.b), gcd(self.c, self.d))
    }

    /// Divides every entry by `k`, or `None` if some entry is not divisible.
    pub fn div_exact(&self, k: i64) -> Option<Self> {
        if k == 0 || [self.a, self.b, self.c, self.d].iter().any(|e| e % k != 0) {
            return None;
        }
        Some(GroupElement::new(self.a / k, self.b / k, self.c / k, self.d / k))
    }

    pub fn is_sl2(&self) -> bool {
        self.det() == 1
    }

    /// Membership in `Γ₀(level)`: determinant one and `c ≡ 0 (mod level)`.
    pub fn in_gamma0(&self, level: u64) -> bool {
        self.is_sl2() && self.c.rem_euclid(level as i64) == 0
    }

    pub fn is_identity_up_to_sign(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d && self.a.abs() == 1
    }

    /// Möbius action `z ↦ (az + b)/(cz + d)`.
    pub fn act(&self, z: Complex64) -> Complex64 {
        let num = z * self.a as f64 + self.b as f64;
        let den = z * self.c as f64 + self.d as f64;
        num / den
    }

    /// `cz + d`.
    pub fn denominator(&self, z: Complex64) -> Complex64 {
        z * self.c as f64 + self.d as f64
    }

    /// Completes a coprime bottom row `(c, d)` to a matrix of determinant one.
    pub fn from_bottom_row(c: i64, d: i64) -> Option<Self> {
        let (g, s, t) = ext_gcd(c, d);
        if g != 1 {
            return None;
        }
        // a·d − b·c = 1 with a = t, b = −s.
        Some(GroupElement::new(t, -s, c, d))
    }

    /// A random element of `Γ₀(level)` with all entries bounded by `bound`
    /// in absolute value. `c` is drawn first, then `d`, then the upper row is
    /// shifted by multiples of the bottom row to make it small.
    pub fn random_gamma0<R: Rng + ?Sized>(rng: &mut R, level: u64, bound: i64) -> Self {
        let level = level as i64;
        loop {
            let cmax = bound / level;
            let c = level * rng.gen_range(-cmax..=cmax);
            let d = rng.gen_range(-bound..=bound);
            let Some(g) = GroupElement::from_bottom_row(c, d) else {
                continue;
            };
            let g = if c != 0 {
                let k = -(g.a as f64 / c as f64).round() as i64 + rng.gen_range(-1..=1);
                GroupElement::new(g.a + k * c, g.b + k * d, c, d)
            } else {
                let k = rng.gen_range(-bound..=bound);
                GroupElement::new(g.a, g.b + k * g.a, c, d)
            };
            if [g.a, g.b, g.c, g.d].iter().all(|e| e.abs() <= bound) {
                return g;
            }
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, o: GroupElement) -> GroupElement {
        let m = |x: i64, y: i64, z: i64, w: i64| -> i64 {
            let v = x as i128 * y as i128 + z as i128 * w as i128;
            i64::try_from(v).expect("matrix entry overflow")
        };
        GroupElement::new(
            m(self.a, o.a, self.b, o.c),
            m(self.a, o.b, self.b, o.d),
            m(self.c, o.a, self.d, o.c),
            m(self.c, o.b, self.d, o.d),
        )
    }
}
