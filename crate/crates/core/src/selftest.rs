//! A fast invariant suite over all modules, used by `halfsup selftest`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::amplifier::{amplifier_primes, build_amplifier, SyntheticSystem};
use crate::error::Result;
use crate::geometry::{in_fundamental_set, reduce_to_f, UHPoint};
use crate::hecke::{commute, eigenvalue_tau, verify_hecke_relations, EIGEN_TOL};
use crate::kernel::phase_factor;
use crate::latcount::count_matrices;
use crate::modular::{cocycle_j, theta_multiplier, GroupElement, Weight};
use crate::qexp::modularity::evaluation_floor;
use crate::qexp::{form_library, theta_series};
use crate::supnorm::{evaluate_f, rankin_selberg_l2};

#[derive(Clone, Debug, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub module: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<SelfCheck>,
    pub passed: bool,
}

type Outcome = Result<(bool, String)>;

fn theta_law(rng: &mut ChaCha8Rng) -> Outcome {
    let th = theta_series(4_000_000);
    let floor = evaluation_floor(th.precision());
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for _ in 0..50 {
        let g = GroupElement::random_gamma0(rng, 4, 50);
        for _ in 0..2 {
            let z = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.6..1.5));
            let w = g.act(z);
            if w.im < floor {
                continue;
            }
            tested += 1;
            let lhs = th.eval(w);
            let rhs = theta_multiplier(&g, z)? * th.eval(z);
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
        }
    }
    Ok((worst < 1e-8 && tested >= 90, format!("max relative residual {worst:.3e} over {tested} points")))
}

fn hecke_relations() -> Outcome {
    let f = form_library("eta8cubed", 3000)?;
    let recs = [eigenvalue_tau(&f, 3, EIGEN_TOL)?, eigenvalue_tau(&f, 5, EIGEN_TOL)?];
    let rep = verify_hecke_relations(&recs, &[], 1e-9);
    let comm = commute(&f, 3, 5)?;
    Ok((rep.passed && comm, format!("{} identities, commute {comm}", rep.checks.len())))
}

fn amplifier_identity(rng: &mut ChaCha8Rng) -> Outcome {
    let primes = amplifier_primes(10.0, 1);
    let mut worst: f64 = 0.0;
    let mut y_const = 0.0;
    for _ in 0..3 {
        let sys = SyntheticSystem::random(&primes, rng);
        let w = build_amplifier(&sys.taus_on(&primes), 10.0, 1, |p| sys.eta(p))?;
        let lhs = w.expanded_value(|l| sys.tau(l));
        let rhs = w.direct_value(|l| sys.tau(l));
        worst = worst.max((lhs - rhs).norm() / rhs.max(1.0));
        y_const = w.y_const.re;
    }
    Ok((worst < 1e-12 && y_const == 8.0, format!("residual {worst:.3e}, y_const {y_const}")))
}

fn stabilizers() -> Outcome {
    let a = count_matrices(UHPoint::i(), 1, 1, 0.01)?.0;
    let b = count_matrices(UHPoint::i(), 1, 4, 0.01)?.0;
    Ok((a == 4 && b == 2, format!("counts {a} (N=1), {b} (N=4)")))
}

fn reduction(rng: &mut ChaCha8Rng) -> Outcome {
    let mut bad = 0;
    for _ in 0..20 {
        let n = [1u64, 3, 5, 15][rng.gen_range(0..4)];
        let z = UHPoint::new(rng.gen_range(-3.0..3.0), 10f64.powf(rng.gen_range(-3.0..1.0)))?;
        let r = reduce_to_f(z, n)?;
        if !in_fundamental_set(r.point, n).inside {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} of 20 outside")))
}

fn phase(rng: &mut ChaCha8Rng) -> Outcome {
    let wt = Weight::from_twice(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = GroupElement::random_gamma0(rng, 4, 30);
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0));
        let w = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0));
        let lhs = phase_factor(g.act(z), g.act(w), wt);
        let rhs = cocycle_j(&g, z)?.powi(3) * cocycle_j(&g, w)?.powi(-3) * phase_factor(z, w, wt);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok((worst < 1e-10, format!("max residual {worst:.3e}")))
}

fn certification(rng: &mut ChaCha8Rng) -> Outcome {
    let big = form_library("eta8cubed", 2000)?;
    let small = big.truncate(1000);
    let mut bad = 0;
    for _ in 0..10 {
        let z = UHPoint::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.006..0.1))?;
        let (a, b) = (evaluate_f(&small, z)?, evaluate_f(&big, z)?);
        if (a.value - b.value).abs() > a.tail_bound {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} of 10 exceed the tail bound")))
}

fn rankin_selberg() -> Outcome {
    let r = rankin_selberg_l2(&form_library("eta8cubed", 200_000)?)?;
    Ok(((r.residue - 0.25).abs() < 2e-3, format!("residue {:.6}", r.residue)))
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![];
    let mut record = |name, module, out: Outcome| {
        let (passed, detail) = out.unwrap_or_else(|e| (false, format!("[{}] {e}", e.module())));
        checks.push(SelfCheck {
            name,
            module,
            passed,
            detail,
        });
    };
    record("theta multiplier law", "modular-arith", theta_law(&mut rng));
    record("hecke relations eta(8z)^3", "hecke", hecke_relations());
    record("amplifier formal identity", "amplifier", amplifier_identity(&mut rng));
    record("stabilizer counts at i", "latcount", stabilizers());
    record("reduction lands in F(2N)", "geometry", reduction(&mut rng));
    record("phase factor equivariance", "kernel", phase(&mut rng));
    record("evaluation tail certificate", "supnorm", certification(&mut rng));
    record("rankin-selberg residue", "supnorm", rankin_selberg());
    let passed = checks.iter().all(|c| c.passed);
    SelftestReport { seed, checks, passed }
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes() {
        let r = super::run_selftest(1);
        for c in &r.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
