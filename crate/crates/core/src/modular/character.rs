use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::numtheory::{gcd, kronecker, lcm};
use crate::error::{Error, Result};

/// `e^{2πi·num/order}` with `0 ≤ num < order`, stored in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootOfUnity {
    pub num: u32,
    pub order: u32,
}

impl RootOfUnity {
    pub const ONE: RootOfUnity = RootOfUnity { num: 0, order: 1 };
    pub const MINUS_ONE: RootOfUnity = RootOfUnity { num: 1, order: 2 };

    pub fn new(num: i64, order: u32) -> Self {
        assert!(order > 0);
        let n = num.rem_euclid(order as i64);
        let g = gcd(n, order as i64).max(1);
        RootOfUnity {
            num: (n / g) as u32,
            order: (order as i64 / g) as u32,
        }
    }

    pub fn mul(self, o: RootOfUnity) -> RootOfUnity {
        let order = lcm(self.order as u64, o.order as u64) as u32;
        let n = self.num as i64 * (order / self.order) as i64 + o.num as i64 * (order / o.order) as i64;
        RootOfUnity::new(n, order)
    }

    pub fn conj(self) -> RootOfUnity {
        RootOfUnity::new(-(self.num as i64), self.order)
    }

    pub fn to_complex(self) -> Complex64 {
        match (self.num, self.order) {
            (0, _) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            _ => Complex64::from_polar(1.0, 2.0 * PI * self.num as f64 / self.order as f64),
        }
    }

    /// `±1` when the root is real.
    pub fn as_sign(self) -> Option<i8> {
        match self.order {
            1 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }
}

/// A Dirichlet character given by its value table on residues mod `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<Option<RootOfUnity>>,
}

impl DirichletCharacter {
    pub fn trivial(modulus: u64) -> Self {
        assert!(modulus >= 1);
        let values = (0..modulus)
            .map(|r| (gcd(r as i64, modulus as i64) == 1).then_some(RootOfUnity::ONE))
            .collect();
        DirichletCharacter { modulus, values }
    }

    /// `n ↦ (D/n)` viewed mod `modulus`. Fails unless the result is a
    /// well-defined character mod `modulus` (`D` a discriminant dividing the
    /// modulus, up to the usual 4-adjustments).
    pub fn kronecker(disc: i64, modulus: u64) -> Result<Self> {
        let values: Vec<_> = (0..modulus)
            .map(|r| {
                if gcd(r as i64, modulus as i64) != 1 {
                    return None;
                }
                match kronecker(disc, r as i64) {
                    1 => Some(RootOfUnity::ONE),
                    -1 => Some(RootOfUnity::MINUS_ONE),
                    _ => None,
                }
            })
            .collect();
        let chi = DirichletCharacter::from_table(modulus, values)?;
        Ok(chi)
    }

    /// Builds a character from a full table, checking that it vanishes
    /// exactly off the units and is multiplicative.
    pub fn from_table(modulus: u64, values: Vec<Option<RootOfUnity>>) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::InvalidArgument(format!(
                "character table of length {} for modulus {modulus}",
                values.len()
            )));
        }
        for (r, v) in values.iter().enumerate() {
            let unit = gcd(r as i64, modulus as i64) == 1;
            if unit != v.is_some() {
                return Err(Error::InvalidArgument(format!(
                    "character value at residue {r} must be {} for modulus {modulus}",
                    if unit { "a root of unity" } else { "zero" }
                )));
            }
        }
        let chi = DirichletCharacter { modulus, values };
        if !chi.is_multiplicative() {
            return Err(Error::InvalidArgument(format!(
                "table mod {modulus} is not multiplicative"
            )));
        }
        Ok(chi)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self, n: i64) -> Option<RootOfUnity> {
        self.values[n.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn eval(&self, n: i64) -> Complex64 {
        self.value(n)
            .map(RootOfUnity::to_complex)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Value as an integer in `{-1, 0, 1}`; `None` for a non-real value.
    pub fn real_value(&self, n: i64) -> Option<i8> {
        match self.value(n) {
            None => Some(0),
            Some(r) => r.as_sign(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().flatten().all(|r| r.order <= 2)
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().flatten().all(|r| r.order == 1)
    }

    pub fn is_multiplicative(&self) -> bool {
        let m = self.modulus as i64;
        for x in 0..m {
            for y in x..m {
                let prod = self.value(x * y);
                let expect = match (self.value(x), self.value(y)) {
                    (Some(u), Some(v)) => Some(u.mul(v)),
                    _ => None,
                };
                if prod != expect {
                    return false;
                }
            }
        }
        true
    }

    /// The same character viewed modulo a multiple of its modulus.
    pub fn lift(&self, modulus: u64) -> Result<Self> {
        if modulus % self.modulus != 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot lift a character mod {} to modulus {modulus}",
                self.modulus
            )));
        }
        let values = (0..modulus)
            .map(|r| {
                if gcd(r as i64, modulus as i64) == 1 {
                    self.value(r as i64)
                } else {
                    None
                }
            })
            .collect();
        Ok(DirichletCharacter { modulus, values })
    }

    /// Pointwise product, computed modulo the lcm of the two moduli.
    pub fn mul(&self, other: &DirichletCharacter) -> DirichletCharacter {
        let m = lcm(self.modulus, other.modulus);
        let values = (0..m as i64)
            .map(|r| match (self.value(r), other.value(r)) {
                (Some(u), Some(v)) if gcd(r, m as i64) == 1 => Some(u.mul(v)),
                _ => None,
            })
            .collect();
        DirichletCharacter { modulus: m, values }
    }

    pub fn conj(&self) -> DirichletCharacter {
        DirichletCharacter {
            modulus: self.modulus,
            values: self.values.iter().map(|v| v.map(RootOfUnity::conj)).collect(),
        }
    }

    /// Equality after lifting both characters to a common modulus.
    pub fn agrees_with(&self, other: &DirichletCharacter) -> bool {
        let m = lcm(self.modulus, other.modulus);
        (0..m as i64)
            .filter(|&r| gcd(r, m as i64) == 1)
            .all(|r| self.value(r) == other.value(r))
    }

    /// `(residue, numerator, order)` triples for the units, as used in the
    /// q-expansion file format.
    pub fn table(&self) -> Vec<[u64; 3]> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(r, v)| v.map(|v| [r as u64, v.num as u64, v.order as u64]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_minus_four() {
        let chi = DirichletCharacter::kronecker(-4, 4).unwrap();
        assert_eq!(chi.real_value(1), Some(1));
        assert_eq!(chi.real_value(3), Some(-1));
        assert_eq!(chi.real_value(-1), Some(-1));
        assert_eq!(chi.real_value(2), Some(0));
        assert!(chi.is_real() && !chi.is_trivial());
    }

    #[test]
    fn product_of_quadratic_characters() {
        let a = DirichletCharacter::kronecker(-4, 4).unwrap();
        let b = DirichletCharacter::kronecker(-3, 3).unwrap();
        let ab = a.mul(&b);
        assert_eq!(ab.modulus(), 12);
        assert!(ab.agrees_with(&DirichletCharacter::kronecker(12, 12).unwrap()));
        assert!(a.mul(&a).agrees_with(&DirichletCharacter::trivial(4)));
    }

    #[test]
    fn non_character_rejected() {
        // (2/.) is not periodic mod 3
        assert!(DirichletCharacter::kronecker(2, 3).is_err());
    }

    #[test]
    fn complex_table_roundtrip() {
        // order-4 character mod 5 generated by 2 -> i
        let mut values = vec![None; 5];
        let mut x = 1i64;
        for k in 0..4 {
            values[x as usize] = Some(RootOfUnity::new(k, 4));
            x = x * 2 % 5;
        }
        let chi = DirichletCharacter::from_table(5, values).unwrap();
        assert!(!chi.is_real());
        assert_eq!(chi.value(2).unwrap().mul(chi.conj().value(2).unwrap()), RootOfUnity::ONE);
    }
}
