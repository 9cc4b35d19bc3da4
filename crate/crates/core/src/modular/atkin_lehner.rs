//! Atkin–Lehner matrices `W(Q)`, `W(2)`, the matrix `A = [[1,0],[2N,1]]`, and
//! decomposition of elements of `A₀(2N)` as `γ · W(Q) · Aⁱ · W(2)ʲ`.

use serde::Serialize;

use super::matrix::GroupElement;
use super::numtheory::{exact_sqrt, ext_gcd, is_squarefree, v2};
use crate::error::{Error, Result};

fn check_level(n: u64) -> Result<()> {
    if n == 0 || n % 2 == 0 || !is_squarefree(n) {
        return Err(Error::InvalidArgument(format!(
            "N = {n} must be odd and squarefree"
        )));
    }
    Ok(())
}

/// `W(Q)` for an odd divisor `Q | N`: `[[Q²β, 4N/Q], [4Nγ, Q]]` with
/// `Q²β − (4N/Q)²γ = 1` and `β` the least positive solution; `W(2)` (for
/// `Γ₀(2N)`) when `Q = 2`. `W(1)` is the identity.
pub fn atkin_lehner_matrix(q: u64, n: u64) -> Result<GroupElement> {
    check_level(n)?;
    if q == 2 {
        return w2_matrix(n);
    }
    if q == 0 || n % q != 0 {
        return Err(Error::InvalidArgument(format!(
            "Q = {q} is neither 2 nor a divisor of N = {n}"
        )));
    }
    if q == 1 {
        return Ok(GroupElement::IDENTITY);
    }
    let (qi, ni) = (q as i64, n as i64);
    let m = (4 * ni / qi) * (4 * ni / qi);
    let q2 = qi * qi;
    let (g, s, _) = ext_gcd(q2, m);
    assert_eq!(g, 1, "Q² and (4N/Q)² are coprime for squarefree odd N");
    let beta = match s.rem_euclid(m) {
        0 => m,
        b => b,
    };
    let gamma = (q2 * beta - 1) / m;
    let w = GroupElement::new(q2 * beta, 4 * ni / qi, 4 * ni * gamma, qi);
    debug_assert_eq!(w.det(), q as i128);
    Ok(w)
}

/// `W(2) = [[2α, β], [2Nγ, 2δ]]` of determinant 2, found by a search over
/// entries of increasing size (the first hit in a fixed order is returned).
pub fn w2_matrix(n: u64) -> Result<GroupElement> {
    check_level(n)?;
    let ni = n as i64;
    for r in 1i64..=64 {
        for alpha in -r..=r {
            for beta in -r..=r {
                for gamma in -r..=r {
                    for delta in -r..=r {
                        let m = [alpha, beta, gamma, delta];
                        if m.iter().map(|e| e.abs()).max() != Some(r) {
                            continue;
                        }
                        if 2 * alpha * delta - ni * beta * gamma == 1 {
                            return Ok(GroupElement::new(2 * alpha, beta, 2 * ni * gamma, 2 * delta));
                        }
                    }
                }
            }
        }
    }
    unreachable!("[[2,1],[2N,N+1]] always has determinant 2")
}

/// `A = [[1, 0], [2N, 1]]`, in `Γ₀(2N)` but not in `Γ₀(4N)`.
pub fn matrix_a(n: u64) -> GroupElement {
    GroupElement::new(1, 0, 2 * n as i64, 1)
}

/// Canonical representative of the Atkin–Lehner coset of `Γ₀(2N)` for an
/// exact divisor `Q` of `2N`: `W(q)` for odd `q`, `W(2)`, or `W(q)·W(2)`.
pub fn al_coset_rep(q: u64, n: u64) -> Result<GroupElement> {
    if q % 2 == 0 {
        Ok(atkin_lehner_matrix(q / 2, n)? * w2_matrix(n)?)
    } else {
        atkin_lehner_matrix(q, n)
    }
}

/// `δ = γ · W(Q) · Aⁱ · W(2)ʲ` up to a positive scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub gamma: GroupElement,
    pub q: u64,
    pub i: u8,
    pub j: u8,
}

impl Decomposition {
    pub fn compose(&self, n: u64) -> Result<GroupElement> {
        let mut m = self.gamma * atkin_lehner_matrix(self.q, n)?;
        if self.i == 1 {
            m = m * matrix_a(n);
        }
        if self.j == 1 {
            m = m * w2_matrix(n)?;
        }
        Ok(m)
    }
}

/// Writes `δ ∈ A₀(2N)` as `γ W(Q) Aⁱ W(2)ʲ` with `γ ∈ Γ₀(4N)`.
///
/// The content of `δ` is removed first; the odd part of the determinant
/// then gives `Q`, its 2-adic valuation gives `j`, and `i` is the unique
/// choice for which `δ (W(Q)AⁱW(2)ʲ)⁻¹` lands in `Γ₀(4N)`.
pub fn normalizer_decompose(delta: &GroupElement, n: u64) -> Result<Decomposition> {
    check_level(n)?;
    let reject = |reason: &str| Error::NotInNormalizer {
        matrix: *delta,
        n,
        reason: reason.to_string(),
    };
    if delta.det() <= 0 {
        return Err(reject("determinant must be positive"));
    }
    let content = delta.content();
    let prim = delta.div_exact(content).expect("content divides entries");
    let det = prim.det();
    let det64 = i64::try_from(det).map_err(|_| reject("determinant too large"))?;
    let j = v2(det64);
    if j > 1 {
        return Err(reject("determinant has 2-adic valuation above 1"));
    }
    let q = (det64 >> j) as u64;
    if n % q != 0 {
        return Err(reject("odd part of the determinant does not divide N"));
    }
    let level4 = 4 * n as i64;
    for i in 0..=1u8 {
        let cand = Decomposition {
            gamma: GroupElement::IDENTITY,
            q,
            i,
            j: j as u8,
        };
        let b = cand.compose(n)?;
        let x = prim * b.adjugate();
        let Some(t) = exact_sqrt(x.det().max(0) as u128) else {
            continue;
        };
        let t = t as i64;
        if t == 0 {
            continue;
        }
        let Some(gamma) = x.div_exact(t) else { continue };
        if gamma.is_sl2() && gamma.c.rem_euclid(level4) == 0 {
            return Ok(Decomposition { gamma, ..cand });
        }
    }
    Err(reject("no gamma in Gamma0(4N) completes the decomposition"))
}

/// Conjugation check: `W γ W⁻¹ ∈ Γ₀(level)` for the given `γ`.
pub fn conjugates_into(w: &GroupElement, g: &GroupElement, level: u64) -> bool {
    let det = w.det() as i64;
    let x = *w * *g * w.adjugate();
    match x.div_exact(det) {
        Some(y) => y.in_gamma0(level),
        None => false,
    }
}
