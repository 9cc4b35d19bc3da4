//! Index and coset representatives of `Γ₀(M)` in `SL₂(ℤ)`.

use std::collections::BTreeSet;

use super::matrix::GroupElement;
use super::numtheory::{factorize, gcd};

/// `ψ(M) = [SL₂(ℤ) : Γ₀(M)] = M ∏_{p | M} (1 + 1/p)`.
pub fn gamma0_index(m: u64) -> u64 {
    factorize(m)
        .iter()
        .fold(m, |acc, &(p, _)| acc / p * (p + 1))
}

/// Hyperbolic area of `Γ₀(M)\ℍ`, namely `(π/3)·ψ(M)`.
pub fn gamma0_volume(m: u64) -> f64 {
    std::f64::consts::PI / 3.0 * gamma0_index(m) as f64
}

fn p1_key(c: i64, d: i64, m: i64, units: &[i64]) -> (i64, i64) {
    units
        .iter()
        .map(|&u| ((u * c).rem_euclid(m), (u * d).rem_euclid(m)))
        .min()
        .expect("units are nonempty")
}

/// Right coset representatives `g` with `SL₂(ℤ) = ⊔ Γ₀(M) g`, indexed by
/// `ℙ¹(ℤ/M)` through the bottom row. Lifts with small `|c|`, then small
/// `|d|`, are preferred.
pub fn gamma0_coset_reps(m: u64) -> Vec<GroupElement> {
    if m == 1 {
        return vec![GroupElement::IDENTITY];
    }
    let mi = m as i64;
    let units: Vec<i64> = (1..mi).filter(|&u| gcd(u, mi) == 1).collect();
    let target = gamma0_index(m) as usize;
    let mut seen = BTreeSet::new();
    let mut reps = Vec::with_capacity(target);
    'outer: for c in 0..mi {
        let dmax = mi * (mi + 1);
        for ad in 0..=dmax {
            for d in [ad, -ad] {
                if (d == -ad && ad == 0) || gcd(c, d) != 1 {
                    continue;
                }
                if seen.insert(p1_key(c, d, mi, &units)) {
                    reps.push(GroupElement::from_bottom_row(c, d).expect("coprime"));
                    if reps.len() == target {
                        break 'outer;
                    }
                }
            }
        }
    }
    debug_assert_eq!(reps.len(), target);
    reps
}
