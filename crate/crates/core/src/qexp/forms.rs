//! Concrete forms: `θ`, eta products and dilations `f(z) ↦ f(dz)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::QExpansion;
use crate::error::{Error, Result};
use crate::modular::numtheory::{gcd, is_squarefree, lcm};
use crate::modular::{DirichletCharacter, Weight};

type Series = BTreeMap<usize, BigInt>;

/// `θ(z) = Σ_{x∈ℤ} q^{x²}`, weight 1/2 on `Γ₀(4)`.
pub fn theta_series(precision: usize) -> QExpansion {
    let terms = (0..)
        .map(|x: usize| x * x)
        .take_while(|&n| n < precision)
        .map(|n| (n, BigRational::from_integer(BigInt::from(if n == 0 { 1 } else { 2 }))))
        .collect();
    QExpansion::from_terms(
        Ratio::from_integer(0),
        terms,
        precision.max(1),
        Weight::from_twice(1),
        4,
        DirichletCharacter::trivial(4),
    )
    .expect("theta is well formed")
}

/// `Π (1 − q^n)` by the pentagonal number theorem.
fn euler_series(prec: usize) -> Series {
    let mut s = Series::new();
    for k in 0i64.. {
        let mut any = false;
        for kk in [k, -k] {
            let e = (kk * (3 * kk - 1) / 2) as usize;
            if e < prec {
                any = true;
                s.insert(e, BigInt::from(if k % 2 == 0 { 1 } else { -1 }));
            }
        }
        if !any {
            break;
        }
    }
    s
}

/// `Π (1 − q^n)³ = Σ_{k≥0} (−1)^k (2k+1) q^{k(k+1)/2}`.
fn euler_cube(prec: usize) -> Series {
    (0i64..)
        .map(|k| (k, (k * (k + 1) / 2) as usize))
        .take_while(|&(_, e)| e < prec)
        .map(|(k, e)| (e, BigInt::from(if k % 2 == 0 { 2 * k + 1 } else { -(2 * k + 1) })))
        .collect()
}

/// `f^r` for a series with constant term 1, via `n g_n = Σ ((r+1)k − n) a_k g_{n−k}`.
fn power_series_pow(f: &Series, r: i64, prec: usize) -> Series {
    let mut g: Vec<BigInt> = vec![BigInt::zero(); prec];
    g[0] = BigInt::one();
    let a: Vec<(usize, &BigInt)> = f.iter().filter(|(k, _)| **k > 0).map(|(k, v)| (*k, v)).collect();
    for n in 1..prec {
        let mut acc = BigInt::zero();
        for &(k, ak) in &a {
            if k > n {
                break;
            }
            let w = (r + 1) * k as i64 - n as i64;
            if w != 0 && !g[n - k].is_zero() {
                acc += ak * &g[n - k] * w;
            }
        }
        g[n] = acc / BigInt::from(n);
    }
    g.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect()
}

fn mul_series(a: &Series, b: &Series, prec: usize) -> Series {
    let mut out = Series::new();
    for (i, x) in a {
        for (j, y) in b {
            if i + j >= prec {
                break;
            }
            *out.entry(i + j).or_insert_with(BigInt::zero) += x * y;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn stretch(s: &Series, m: usize, prec: usize) -> Series {
    s.iter()
        .filter(|(e, _)| **e * m < prec)
        .map(|(e, v)| (e * m, v.clone()))
        .collect()
}

/// A level at which `Π η(m z)^r` is expected to be modular: the least
/// multiple `L` of `4·lcm(m)` with `L·Σ r/m ≡ 0 (mod 24)`.
fn candidate_level(factors: &[(u64, i32)]) -> u64 {
    let base = factors.iter().fold(4u64, |acc, &(m, _)| lcm(acc, m));
    let sum = factors
        .iter()
        .fold(Ratio::from_integer(0i64), |acc, &(m, r)| acc + Ratio::new(r as i64, m as i64));
    (1..)
        .map(|k| base * k)
        .find(|&l| (sum * Ratio::from_integer(l as i64) / 24).is_integer())
        .expect("some multiple works")
}

/// `Π η(m_i z)^{r_i}` to precision `P`. The attached level is a candidate
/// and the character is trivial; use [`super::detect_character`] to confirm.
pub fn eta_product(factors: &[(u64, i32)], precision: usize) -> Result<QExpansion> {
    if precision == 0 {
        return Err(Error::InvalidArgument("precision must be positive".into()));
    }
    if factors.iter().any(|&(m, _)| m == 0) {
        return Err(Error::InvalidArgument("eta scales must be positive".into()));
    }
    let offset = factors
        .iter()
        .fold(Ratio::from_integer(0i64), |acc, &(m, r)| acc + Ratio::new(m as i64 * r as i64, 24));
    if offset.is_negative() {
        return Err(Error::NegativeOffset(offset.to_string()));
    }
    let mut total: Series = [(0usize, BigInt::one())].into_iter().collect();
    for &(m, r) in factors {
        let m = m as usize;
        let inner = precision.div_ceil(m);
        let factor = if r >= 0 {
            let mut f: Series = [(0usize, BigInt::one())].into_iter().collect();
            let cube = euler_cube(inner);
            for _ in 0..r / 3 {
                f = mul_series(&f, &cube, inner);
            }
            if r % 3 > 0 {
                let e = euler_series(inner);
                for _ in 0..r % 3 {
                    f = mul_series(&f, &e, inner);
                }
            }
            f
        } else {
            power_series_pow(&euler_series(inner), r as i64, inner)
        };
        total = mul_series(&total, &stretch(&factor, m, precision), precision);
    }
    let level = candidate_level(factors);
    let twice: i32 = factors.iter().map(|&(_, r)| r).sum();
    QExpansion::from_terms(
        offset,
        total.into_iter().map(|(n, c)| (n, BigRational::from_integer(c))).collect(),
        precision,
        Weight::from_twice(twice),
        level,
        DirichletCharacter::trivial(level),
    )
}

/// `f(dz)`: exponents scale by `d`, precision becomes `d·P`, level `d·level`.
/// The character is multiplied by `(d/·)`, which is the transformation rule
/// of `θ(dz)` (confirmed numerically for shipped forms).
pub fn dilate(f: &QExpansion, d: u64) -> Result<QExpansion> {
    if d == 0 {
        return Err(Error::InvalidArgument("dilation factor must be positive".into()));
    }
    let level = f.level() * d;
    let base = f.character().lift(level)?;
    let twist = if f.weight().is_half_integral() && d > 1 {
        DirichletCharacter::kronecker(d as i64, level)
            .or_else(|_| DirichletCharacter::kronecker(4 * d as i64, level))?
    } else {
        DirichletCharacter::trivial(level)
    };
    let terms = f.terms().iter().map(|(n, c)| (n * d as usize, c.clone())).collect();
    QExpansion::from_terms(
        f.offset() * Ratio::from_integer(d as i64),
        terms,
        f.precision() * d as usize,
        f.weight(),
        level,
        base.mul(&twist),
    )
}

/// A shipped form: identifier, the expansion and provenance notes.
#[derive(Clone, Debug)]
pub struct LibraryForm {
    pub id: String,
    pub form: QExpansion,
    /// `N` with level `4N`.
    pub n: u64,
    /// Whether `N` is odd and squarefree, as the main theorems assume.
    pub odd_squarefree: bool,
    pub provenance: String,
}

/// `η(8z)³` and its dilations `η(8dz)³`, a family of weight-3/2 cusp forms
/// of level `64d`.
#[derive(Clone, Debug, Serialize)]
pub struct FormFamily {
    #[serde(skip)]
    pub members: Vec<LibraryForm>,
}

impl FormFamily {
    pub fn eta8_cubed(dilations: &[u64], precision: usize) -> Result<Self> {
        let base = eta_product(&[(8, 3)], precision)?;
        let mut members = Vec::new();
        for &d in dilations {
            if d % 2 == 0 || !is_squarefree(d) {
                return Err(Error::InvalidArgument(format!(
                    "dilation {d} is not odd and squarefree"
                )));
            }
            let form = if d == 1 { base.clone() } else { dilate(&base, d)? };
            let n = form.level() / 4;
            members.push(LibraryForm {
                id: format!("eta8^3|V({d})"),
                n,
                odd_squarefree: n % 2 == 1 && is_squarefree(n),
                provenance: format!("eta product (8,3) dilated by {d}"),
                form,
            });
        }
        let w = members.first().map(|m| m.form.weight());
        if members.iter().any(|m| Some(m.form.weight()) != w || !m.form.is_cuspidal()) {
            return Err(Error::InvalidArgument("family members must be cusp forms of one weight".into()));
        }
        Ok(FormFamily { members })
    }

    pub fn levels(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.form.level()).collect()
    }
}

/// The shipped forms by name: `theta`, `eta8cubed`, or `eta8cubed_d<d>`.
pub fn form_library(name: &str, precision: usize) -> Result<QExpansion> {
    match name {
        "theta" => Ok(theta_series(precision)),
        "eta8cubed" => eta_product(&[(8, 3)], precision),
        _ => {
            let d: u64 = name
                .strip_prefix("eta8cubed_d")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown form {name:?}")))?;
            let base = eta_product(&[(8, 3)], precision.div_ceil(d as usize).max(1))?;
            if gcd(d as i64, 2) != 1 {
                return Err(Error::InvalidArgument(format!("dilation {d} must be odd")));
            }
            dilate(&base, d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(f: &QExpansion) -> Vec<i64> {
        f.dense_coeffs().iter().map(|c| c.to_integer().try_into().unwrap()).collect()
    }

    fn big(f: &QExpansion) -> Vec<BigInt> {
        f.dense_coeffs().iter().map(|c| c.to_integer()).collect()
    }

    /// Truncated `Π_n (1 − q^{mn})^r` by repeated dense multiplication.
    fn naive_eta(factors: &[(u64, i32)], prec: usize) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); prec];
        acc[0] = BigInt::one();
        for &(m, r) in factors {
            for n in 1.. {
                let step = m as usize * n;
                if step >= prec {
                    break;
                }
                for _ in 0..r.unsigned_abs() {
                    if r > 0 {
                        for i in (step..prec).rev() {
                            let t = acc[i - step].clone();
                            acc[i] -= t;
                        }
                    } else {
                        for i in step..prec {
                            let t = acc[i - step].clone();
                            acc[i] += t;
                        }
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn theta_small() {
        assert_eq!(ints(&theta_series(10)), vec![1, 2, 0, 0, 2, 0, 0, 0, 0, 2]);
        let t = theta_series(30);
        assert_eq!(t.coeff(25), BigRational::from_integer(2.into()));
        assert!(t.coeff(3).is_zero());
    }

    #[test]
    fn theta_matches_square_count() {
        let p = 500;
        let t = theta_series(p);
        for n in 0..p {
            let count = (-30i64..=30).filter(|x| (x * x) as usize == n).count();
            assert_eq!(t.coeff(n), BigRational::from_integer(count.into()), "n = {n}");
        }
    }

    #[test]
    fn theta_squared_is_r2() {
        let t = theta_series(6);
        assert_eq!(ints(&t.mul(&t).unwrap()), vec![1, 4, 4, 0, 4, 8]);
    }

    #[test]
    fn eta_examples() {
        let e = eta_product(&[(1, 1)], 8).unwrap();
        assert_eq!(e.offset(), Ratio::new(1, 24));
        assert_eq!(ints(&e), vec![1, -1, -1, 0, 0, 1, 0, 1]);
        let e = eta_product(&[(8, 3)], 30).unwrap();
        assert_eq!(e.offset(), Ratio::from_integer(1));
        let nz: Vec<(usize, i64)> = e
            .terms()
            .iter()
            .map(|(n, c)| (n + 1, c.to_integer().try_into().unwrap()))
            .collect();
        assert_eq!(nz, vec![(1, 1), (9, -3), (25, 5)]);
        assert_eq!(e.level(), 64);
        assert_eq!(e.weight(), Weight::from_twice(3));
        let one = eta_product(&[(1, 0)], 5).unwrap();
        assert_eq!(ints(&one), vec![1, 0, 0, 0, 0]);
        assert!(matches!(eta_product(&[(1, -1)], 5), Err(Error::NegativeOffset(_))));
    }

    #[test]
    fn negative_exponents() {
        // η(2z)^{-1} η(z)^2 · … exercises the partition path
        let factors = [(1u64, 4i32), (2, -1)];
        let e = eta_product(&factors, 60).unwrap();
        assert_eq!(big(&e), naive_eta(&factors, 60));
    }

    proptest! {
        #[test]
        fn eta_matches_product_expansion(
            factors in prop::collection::vec((1u64..6, -3i32..8), 1..4),
            prec in 1usize..200,
        ) {
            let offset: i64 = factors.iter().map(|&(m, r)| m as i64 * r as i64).sum();
            prop_assume!(offset >= 0);
            let e = eta_product(&factors, prec).unwrap();
            prop_assert_eq!(big(&e), naive_eta(&factors, prec));
        }
    }

    #[test]
    fn dilation() {
        let e = eta_product(&[(8, 3)], 30).unwrap();
        let f = dilate(&e, 3).unwrap();
        assert_eq!(f.offset(), Ratio::from_integer(3));
        assert_eq!(f.precision(), 90);
        assert_eq!(f.level(), 192);
        assert_eq!(f.coeff(24), e.coeff(8));
        let v = dilate(&theta_series(10), 5).unwrap();
        assert_eq!(v.coeff(20), BigRational::from_integer(2.into()));
    }

    #[test]
    fn family_levels() {
        let fam = FormFamily::eta8_cubed(&[1, 3, 5], 100).unwrap();
        assert_eq!(fam.levels(), vec![64, 192, 320]);
        assert!(!fam.members[0].odd_squarefree);
        assert!(FormFamily::eta8_cubed(&[9], 100).is_err());
    }
}
