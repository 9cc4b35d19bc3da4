//! The amplifier: weights `x_ℓ` on `𝒫² ∪ 𝒫⁴` and the coefficients `y_ℓ` of
//! `|Σ x̄_ℓ τ̃(ℓ)|²` after expanding products with the Hecke relation table.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::modular::numtheory::primes_between;
use crate::modular::DirichletCharacter;

/// Index `ℓ` of a normalized eigenvalue; wide enough for `(2Λ)⁸` at moderate `Λ`.
pub type Index = u128;

#[derive(Clone, Debug)]
pub struct AmplifierWeights {
    pub lambda: f64,
    pub n: u64,
    pub primes: Vec<u64>,
    pub p2: Vec<Index>,
    pub p4: Vec<Index>,
    pub x: BTreeMap<Index, Complex64>,
    /// Coefficients of `τ̃(ℓ)`, `ℓ > 1`.
    pub y: BTreeMap<Index, Complex64>,
    /// Coefficient of `τ̃(1) = 1`.
    pub y_const: Complex64,
    eta_at_prime: BTreeMap<u64, Complex64>,
}

/// `τ/|τ|`, with `sgn(0) = 1`.
pub fn sgn(t: Complex64) -> Complex64 {
    let r = t.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        t / r
    }
}

/// Primes `p ∈ [Λ, 2Λ]` with `p ∤ 4N`.
pub fn amplifier_primes(lambda: f64, n: u64) -> Vec<u64> {
    primes_between(lambda, 2.0 * lambda)
        .into_iter()
        .filter(|p| (4 * n) % p != 0)
        .collect()
}

fn pw(p: u64, k: u32) -> Index {
    (p as Index).pow(k)
}

/// Expansion of `conj(τ̃(ℓ₁)) τ̃(ℓ₂)` for `ℓ₁, ℓ₂ ∈ {p², p⁴, q², q⁴}` as
/// `(coefficient, index)` pairs, index 1 standing for the constant.
fn expand(l1: (u64, u32), l2: (u64, u32), eta: &BTreeMap<u64, Complex64>) -> Vec<(Complex64, Index)> {
    let one = Complex64::new(1.0, 0.0);
    let (p, a) = l1;
    let (q, b) = l2;
    let ep = eta[&p].conj();
    if p != q {
        return vec![(ep.powu(a), pw(p, a) * pw(q, b))];
    }
    match (a, b) {
        (2, 2) => vec![(ep.powu(2), pw(p, 4)), (one, 1)],
        (2, 4) => vec![(ep.powu(2), pw(p, 6)), (one, pw(p, 2))],
        (4, 2) => vec![(ep.powu(4), pw(p, 6)), (ep.powu(2), pw(p, 2))],
        (4, 4) => vec![(ep.powu(4), pw(p, 8)), (ep.powu(2), pw(p, 4)), (one, 1)],
        _ => unreachable!("exponents are 2 or 4"),
    }
}

/// Builds `x_ℓ = sgn(τ̃(ℓ))` on `𝒫² ∪ 𝒫⁴` and collects `y_ℓ`.
/// `eta_at_prime` gives `η(p)`; values at prime powers follow multiplicatively.
pub fn build_amplifier<F>(taus: &BTreeMap<Index, Complex64>, lambda: f64, n: u64, eta_at_prime: F) -> Result<AmplifierWeights>
where
    F: Fn(u64) -> Complex64,
{
    if !(lambda >= 2.0) {
        return Err(Error::InvalidArgument(format!("Lambda = {lambda} must be at least 2")));
    }
    let primes = amplifier_primes(lambda, n);
    let eta: BTreeMap<u64, Complex64> = primes.iter().map(|&p| (p, eta_at_prime(p))).collect();
    let mut x = BTreeMap::new();
    let mut support = vec![];
    for &p in &primes {
        for k in [2u32, 4] {
            let l = pw(p, k);
            let t = taus.get(&l).ok_or(Error::MissingTau(l as u64))?;
            x.insert(l, sgn(*t));
            support.push((p, k));
        }
    }
    let mut y: BTreeMap<Index, Complex64> = BTreeMap::new();
    let mut y_const = Complex64::new(0.0, 0.0);
    for &l1 in &support {
        for &l2 in &support {
            let w = x[&pw(l1.0, l1.1)] * x[&pw(l2.0, l2.1)].conj();
            for (c, idx) in expand(l1, l2, &eta) {
                if idx == 1 {
                    y_const += w * c;
                } else {
                    *y.entry(idx).or_default() += w * c;
                }
            }
        }
    }
    Ok(AmplifierWeights {
        lambda,
        n,
        p2: primes.iter().map(|&p| pw(p, 2)).collect(),
        p4: primes.iter().map(|&p| pw(p, 4)).collect(),
        primes,
        x,
        y,
        y_const,
        eta_at_prime: eta,
    })
}

/// [`build_amplifier`] with `η` a Dirichlet character.
pub fn build_amplifier_with_character(
    taus: &BTreeMap<Index, Complex64>,
    lambda: f64,
    n: u64,
    eta: &DirichletCharacter,
) -> Result<AmplifierWeights> {
    build_amplifier(taus, lambda, n, |p| eta.eval(p as i64))
}

impl AmplifierWeights {
    /// `Σ y_ℓ τ̃(ℓ) + y_const` for a full eigenvalue system.
    pub fn expanded_value<F: Fn(Index) -> Complex64>(&self, tau: F) -> Complex64 {
        self.y.iter().map(|(l, c)| c * tau(*l)).sum::<Complex64>() + self.y_const
    }

    /// `|Σ x̄_ℓ τ̃(ℓ)|²` directly.
    pub fn direct_value<F: Fn(Index) -> Complex64>(&self, tau: F) -> f64 {
        self.x.iter().map(|(l, x)| x.conj() * tau(*l)).sum::<Complex64>().norm_sqr()
    }

    /// Largest `|y_ℓ|` over `ℓ > 1`.
    pub fn max_abs_y(&self) -> f64 {
        self.y.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eta(&self, p: u64) -> Option<Complex64> {
        self.eta_at_prime.get(&p).copied()
    }

    /// `{Λ, N, primes, x, y, y_const}` with indices as decimal strings.
    pub fn to_json(&self) -> Value {
        let map = |m: &BTreeMap<Index, Complex64>| -> serde_json::Map<String, Value> {
            m.iter().map(|(k, v)| (k.to_string(), json!([v.re, v.im]))).collect()
        };
        json!({
            "lambda": self.lambda,
            "N": self.n,
            "primes": self.primes,
            "x": map(&self.x),
            "y": map(&self.y),
            "y_const": [self.y_const.re, self.y_const.im],
        })
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct LengthBound {
    pub sum: f64,
    pub bound: f64,
    pub degenerate: bool,
    pub certified: bool,
}

/// `Σ_{ℓ∈𝒫²∪𝒫⁴} |τ̃(ℓ)|` and the lower bound `#𝒫/2`. Each prime contributes at
/// least `1/2` once `τ̃(p²)² − τ̃(p⁴) = η(p²)` holds, which is checked first.
pub fn amplifier_length_bound(taus: &BTreeMap<Index, Complex64>, w: &AmplifierWeights, tol: f64) -> Result<LengthBound> {
    let mut sum = 0.0;
    for &p in &w.primes {
        let t2 = *taus.get(&pw(p, 2)).ok_or(Error::MissingTau((p * p) as u64))?;
        let t4 = *taus.get(&pw(p, 4)).ok_or(Error::MissingTau(pw(p, 4) as u64))?;
        let eta2 = w.eta_at_prime[&p].powu(2);
        let residual = (t2 * t2 - t4 - eta2).norm();
        if residual > tol {
            return Err(Error::RelationViolated {
                identity: crate::hecke::ID_SQUARE,
                p,
                residual,
            });
        }
        sum += t2.norm() + t4.norm();
    }
    let bound = 0.5 * w.primes.len() as f64;
    Ok(LengthBound {
        sum,
        bound,
        degenerate: w.primes.is_empty(),
        certified: sum >= bound,
    })
}

fn omega(mut l: Index, primes: &[u64]) -> Option<u32> {
    let mut count = 0;
    for &p in primes {
        let p = p as Index;
        while l % p == 0 {
            l /= p;
            count += 1;
        }
    }
    (l == 1).then_some(count)
}

/// Groups `supp(y) ∪ {1}` into `L₀, L₂, L₄, L₆, L₈` by the number of prime
/// factors, checking `Λ^i ≤ ℓ ≤ (2Λ)^i`.
pub fn partition_li(w: &AmplifierWeights) -> Result<BTreeMap<u32, Vec<Index>>> {
    let mut out: BTreeMap<u32, Vec<Index>> = [0u32, 2, 4, 6, 8].into_iter().map(|i| (i, vec![])).collect();
    out.get_mut(&0).expect("L0").push(1);
    for &l in w.y.keys() {
        let i = omega(l, &w.primes)
            .filter(|i| out.contains_key(i) && *i > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("index {l} fits no L_i")))?;
        let lf = l as f64;
        let (lo, hi) = (w.lambda.powi(i as i32), (2.0 * w.lambda).powi(i as i32));
        if lf < lo * (1.0 - 1e-12) || lf > hi * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("index {l} outside [{lo}, {hi}] for L_{i}")));
        }
        out.get_mut(&i).expect("class").push(l);
    }
    Ok(out)
}

/// A synthetic eigenvalue system satisfying the relation table exactly:
/// `τ̃(p^{2k}) = ω_p^k U_k(t_p/2)` with `η(p) = ω_p` and `t_p` real, extended
/// multiplicatively. `U_k` is the Chebyshev polynomial of the second kind.
#[derive(Clone, Debug)]
pub struct SyntheticSystem {
    pub params: BTreeMap<u64, (Complex64, f64)>,
}

impl SyntheticSystem {
    pub fn random<R: rand::Rng>(primes: &[u64], rng: &mut R) -> Self {
        let params = primes
            .iter()
            .map(|&p| {
                let omega = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
                (p, (omega, rng.gen_range(-3.0..3.0)))
            })
            .collect();
        SyntheticSystem { params }
    }

    fn cheb_u(k: u32, t: f64) -> f64 {
        let (mut a, mut b) = (1.0, t);
        if k == 0 {
            return a;
        }
        for _ in 1..k {
            (a, b) = (b, t * b - a);
        }
        b
    }

    pub fn eta(&self, p: u64) -> Complex64 {
        self.params.get(&p).map(|v| v.0).unwrap_or(Complex64::new(1.0, 0.0))
    }

    /// `τ̃(ℓ)` for `ℓ` a product of even powers of the system's primes; 0 otherwise.
    pub fn tau(&self, mut l: Index) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (&p, &(omega, t)) in &self.params {
            let mut e = 0u32;
            while l % p as Index == 0 {
                l /= p as Index;
                e += 1;
            }
            if e % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let k = e / 2;
            acc *= omega.powu(k) * Self::cheb_u(k, t);
        }
        if l == 1 {
            acc
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn taus_on(&self, primes: &[u64]) -> BTreeMap<Index, Complex64> {
        primes
            .iter()
            .flat_map(|&p| [pw(p, 2), pw(p, 4)])
            .map(|l| (l, self.tau(l)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn positive_taus(primes: &[u64]) -> BTreeMap<Index, Complex64> {
        primes
            .iter()
            .flat_map(|&p| [(pw(p, 2), Complex64::new(1.5, 0.0)), (pw(p, 4), Complex64::new(1.25, 0.0))])
            .collect()
    }

    #[test]
    fn lambda_ten() {
        let primes = amplifier_primes(10.0, 1);
        assert_eq!(primes, vec![11, 13, 17, 19]);
        let w = build_amplifier(&positive_taus(&primes), 10.0, 1, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!((w.y_const - Complex64::new(8.0, 0.0)).norm() < 1e-15);
        assert!(w.max_abs_y() <= 2.0 + 1e-12);
        let li = partition_li(&w).unwrap();
        assert!(li[&4].contains(&(121 * 169)));
        assert!(li[&8].contains(&(pw(11, 4) * pw(13, 4))));
        assert_eq!(li[&0], vec![1]);
        assert!((pw(19, 8) as f64) <= 256.0 * 1e8);
    }

    #[test]
    fn formal_identity_on_synthetic_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let primes = amplifier_primes(10.0, 1);
            let sys = SyntheticSystem::random(&primes, &mut rng);
            let w = build_amplifier(&sys.taus_on(&primes), 10.0, 1, |p| sys.eta(p)).unwrap();
            let lhs = w.expanded_value(|l| sys.tau(l));
            let rhs = w.direct_value(|l| sys.tau(l));
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.max(1.0), "{lhs} vs {rhs}");
            assert!(w.max_abs_y() <= 2.0 + 1e-12);
            let s: Complex64 = w.x.iter().map(|(l, x)| x.conj() * sys.tau(*l)).sum();
            assert!(s.im.abs() < 1e-12 && s.re >= 0.0);
        }
    }

    #[test]
    fn single_prime() {
        // [2, 4] holds 2 and 3, and 2 divides 4N
        assert_eq!(amplifier_primes(2.0, 1), vec![3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = SyntheticSystem::random(&[3], &mut rng);
        let w = build_amplifier(&sys.taus_on(&[3]), 2.0, 1, |p| sys.eta(p)).unwrap();
        assert_eq!(w.primes, vec![3]);
        let c = w.y[&pw(3, 8)];
        assert!((c.norm() - 1.0).abs() < 1e-12);
        let expected = w.x[&pw(3, 4)] * w.x[&pw(3, 4)].conj() * sys.eta(3).conj().powu(4);
        assert!((c - expected).norm() < 1e-12);
        assert!(w.max_abs_y() <= 2.0 + 1e-12);
    }

    #[test]
    fn length_bound() {
        let primes = amplifier_primes(10.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sys = SyntheticSystem::random(&primes, &mut rng);
        let taus = sys.taus_on(&primes);
        let w = build_amplifier(&taus, 10.0, 1, |p| sys.eta(p)).unwrap();
        let b = amplifier_length_bound(&taus, &w, 1e-12).unwrap();
        assert_eq!(b.bound, 2.0);
        assert!(b.certified && b.sum >= b.bound);

        // τ(p²) = 0 forces |τ(p⁴)| = 1
        let mut zero = SyntheticSystem { params: BTreeMap::new() };
        zero.params.insert(11, (Complex64::new(1.0, 0.0), 0.0));
        assert!((zero.tau(pw(11, 4)).norm() - 1.0).abs() < 1e-15);

        let mut bad = taus.clone();
        *bad.get_mut(&pw(11, 4)).unwrap() += 0.1;
        assert!(matches!(amplifier_length_bound(&bad, &w, 1e-9), Err(Error::RelationViolated { .. })));

        // no primes in [Λ, 2Λ] coprime to 4N
        let w = build_amplifier(&BTreeMap::new(), 2.0, 3, |_| Complex64::new(1.0, 0.0)).unwrap();
        let b = amplifier_length_bound(&BTreeMap::new(), &w, 1e-9).unwrap();
        assert!(b.degenerate && b.bound == 0.0);
    }

    #[test]
    fn missing_tau_named() {
        let taus = positive_taus(&[11, 13, 17]);
        assert!(matches!(
            build_amplifier(&taus, 10.0, 1, |_| Complex64::new(1.0, 0.0)),
            Err(Error::MissingTau(361))
        ));
    }

    #[test]
    fn sgn_of_zero() {
        assert_eq!(sgn(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        assert!((sgn(Complex64::new(0.0, -2.0)) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
