//! Exact q-expansions `Σ a(n) q^{n+offset}` with rational coefficients.
//!
//! Coefficients are stored sparsely (only nonzero terms), which keeps lacunary
//! series such as `θ` and `η(8z)³` cheap at very high precision.

pub mod forms;
pub mod io;
pub mod modularity;

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::modular::{DirichletCharacter, Weight};

pub use forms::{dilate, eta_product, form_library, theta_series, FormFamily, LibraryForm};
pub use io::{load_form, save_form};
pub use modularity::{detect_character, verify_modularity, ModularityReport};

/// `e^{2πi e z}` underflows beyond this value of `2π e y`.
const UNDERFLOW: f64 = 745.0;

#[derive(Clone, Debug)]
pub struct QExpansion {
    offset: Ratio<i64>,
    terms: Vec<(usize, BigRational)>,
    precision: usize,
    weight: Weight,
    level: u64,
    character: DirichletCharacter,
    numeric: Vec<(f64, f64)>,
}

impl PartialEq for QExpansion {
    fn eq(&self, o: &Self) -> bool {
        self.offset == o.offset
            && self.terms == o.terms
            && self.precision == o.precision
            && self.weight == o.weight
            && self.level == o.level
            && self.character == o.character
    }
}

fn check_offset(offset: Ratio<i64>) -> Result<()> {
    if offset < Ratio::zero() {
        return Err(Error::NegativeOffset(offset.to_string()));
    }
    if 24 % offset.denom() != 0 {
        return Err(Error::OffsetMisaligned(
            offset.to_string(),
            "denominator must divide 24".into(),
        ));
    }
    Ok(())
}

impl QExpansion {
    /// Builds an expansion from a dense coefficient list `a(0..P)`.
    pub fn new(
        offset: Ratio<i64>,
        coeffs: Vec<BigRational>,
        weight: Weight,
        level: u64,
        character: DirichletCharacter,
    ) -> Result<Self> {
        let precision = coeffs.len();
        let terms = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Self::from_terms(offset, terms, precision, weight, level, character)
    }

    /// Builds an expansion from sorted, nonzero `(n, a(n))` pairs with `n < precision`.
    pub fn from_terms(
        offset: Ratio<i64>,
        mut terms: Vec<(usize, BigRational)>,
        precision: usize,
        weight: Weight,
        level: u64,
        character: DirichletCharacter,
    ) -> Result<Self> {
        check_offset(offset)?;
        if precision == 0 {
            return Err(Error::InvalidArgument("precision must be positive".into()));
        }
        if level == 0 {
            return Err(Error::InvalidArgument("level must be positive".into()));
        }
        terms.retain(|(n, c)| *n < precision && !c.is_zero());
        terms.sort_by_key(|t| t.0);
        terms.dedup_by_key(|t| t.0);
        let off = offset.to_f64().expect("small rational");
        let numeric = terms
            .iter()
            .map(|(n, c)| (*n as f64 + off, c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        Ok(QExpansion {
            offset,
            terms,
            precision,
            weight,
            level,
            character,
            numeric,
        })
    }

    pub fn zero_like(&self) -> Self {
        Self::from_terms(
            self.offset,
            vec![],
            self.precision,
            self.weight,
            self.level,
            self.character.clone(),
        )
        .expect("valid template")
    }

    pub fn offset(&self) -> Ratio<i64> {
        self.offset
    }
    pub fn precision(&self) -> usize {
        self.precision
    }
    pub fn weight(&self) -> Weight {
        self.weight
    }
    pub fn level(&self) -> u64 {
        self.level
    }
    pub fn character(&self) -> &DirichletCharacter {
        &self.character
    }
    /// Nonzero terms `(n, a(n))`, sorted by `n`.
    pub fn terms(&self) -> &[(usize, BigRational)] {
        &self.terms
    }
    /// Nonzero terms as `(n + offset, a(n))` in floating point.
    pub fn numeric_terms(&self) -> &[(f64, f64)] {
        &self.numeric
    }

    pub fn coeff(&self, n: usize) -> BigRational {
        match self.terms.binary_search_by_key(&n, |t| t.0) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn dense_coeffs(&self) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); self.precision];
        for (n, c) in &self.terms {
            v[*n] = c.clone();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient at total exponent 0 vanishes.
    pub fn is_cuspidal(&self) -> bool {
        !(self.offset.is_zero() && self.terms.first().is_some_and(|t| t.0 == 0))
    }

    /// Smallest total exponent carrying a nonzero coefficient.
    pub fn leading_exponent(&self) -> Option<f64> {
        self.numeric.first().map(|t| t.0)
    }

    /// Same coefficients with new modular data attached.
    pub fn with_modular_data(&self, weight: Weight, level: u64, character: DirichletCharacter) -> Self {
        QExpansion {
            weight,
            level,
            character,
            ..self.clone()
        }
    }

    pub fn truncate(&self, precision: usize) -> Self {
        let p = precision.min(self.precision).max(1);
        Self::from_terms(
            self.offset,
            self.terms.clone(),
            p,
            self.weight,
            self.level,
            self.character.clone(),
        )
        .expect("valid template")
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let terms = self.terms.iter().map(|(n, c)| (*n, c * s)).collect();
        Self::from_terms(
            self.offset,
            terms,
            self.precision,
            self.weight,
            self.level,
            self.character.clone(),
        )
        .expect("valid template")
    }

    pub fn neg(&self) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(-1)))
    }

    fn joint_level(&self, o: &Self) -> (u64, DirichletCharacter, DirichletCharacter) {
        let level = crate::modular::numtheory::lcm(self.level, o.level);
        let a = self.character.lift(level).unwrap_or_else(|_| self.character.clone());
        let b = o.character.lift(level).unwrap_or_else(|_| o.character.clone());
        (level, a, b)
    }

    /// Sum of two expansions. Offsets must differ by an integer; the result
    /// takes the smaller offset and is valid up to the smaller total exponent
    /// bound. Weights must match and characters must agree on the common level.
    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.weight != o.weight {
            return Err(Error::InvalidArgument(format!(
                "cannot add weights {} and {}",
                self.weight, o.weight
            )));
        }
        let shift = self.offset - o.offset;
        if !shift.is_integer() {
            return Err(Error::OffsetMisaligned(
                self.offset.to_string(),
                o.offset.to_string(),
            ));
        }
        let (level, ca, cb) = self.joint_level(o);
        if !ca.agrees_with(&cb) {
            return Err(Error::InvalidArgument("characters differ".into()));
        }
        let (lo, hi, d) = if shift >= Ratio::zero() {
            (o, self, shift.to_integer() as usize)
        } else {
            (self, o, (-shift).to_integer() as usize)
        };
        let precision = lo.precision.min(hi.precision + d);
        let mut acc: std::collections::BTreeMap<usize, BigRational> = std::collections::BTreeMap::new();
        for (n, c) in &lo.terms {
            *acc.entry(*n).or_insert_with(BigRational::zero) += c;
        }
        for (n, c) in &hi.terms {
            *acc.entry(*n + d).or_insert_with(BigRational::zero) += c;
        }
        Self::from_terms(lo.offset, acc.into_iter().collect(), precision, self.weight, level, ca)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    /// Product; weights add, characters multiply, precision is the smaller
    /// of the two (relative to the new offset).
    pub fn mul(&self, o: &Self) -> Result<Self> {
        let offset = self.offset + o.offset;
        check_offset(offset)?;
        let precision = self.precision.min(o.precision);
        let (level, ca, cb) = self.joint_level(o);
        let mut acc: std::collections::BTreeMap<usize, BigRational> = std::collections::BTreeMap::new();
        for (n, a) in &self.terms {
            if *n >= precision {
                break;
            }
            for (m, b) in &o.terms {
                if n + m >= precision {
                    break;
                }
                *acc.entry(n + m).or_insert_with(BigRational::zero) += a * b;
            }
        }
        Self::from_terms(
            offset,
            acc.into_iter().collect(),
            precision,
            self.weight + o.weight,
            level,
            ca.mul(&cb),
        )
    }

    /// `Σ a(n) e((n + offset) z)` over the stored terms.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_with_magnitude(z).0
    }

    /// The value of [`eval`](Self::eval), together with `Σ |a(n) e((n + offset) z)|`
    /// and the number of terms summed.
    pub fn eval_with_magnitude(&self, z: Complex64) -> (Complex64, f64, usize) {
        let (x, y) = (z.re, z.im);
        let x = if self.offset.is_integer() { x - x.floor() } else { x };
        let (on, od) = (*self.offset.numer(), *self.offset.denom());
        let mut sum = Complex64::new(0.0, 0.0);
        let (mut magnitude, mut count) = (0.0, 0);
        for (&(e, c), (n, _)) in self.numeric.iter().zip(&self.terms) {
            let decay = 2.0 * PI * e * y;
            if decay > UNDERFLOW {
                break;
            }
            let phase = frac_product(*n as f64, x) + frac_product(on as f64, x / od as f64);
            let r = c * (-decay).exp();
            sum += Complex64::from_polar(r, 2.0 * PI * phase);
            magnitude += r.abs();
            count += 1;
        }
        (sum, magnitude, count)
    }
}

/// `a·b mod 1`, keeping the rounding error of the product.
fn frac_product(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p - p.floor()) + err
}
