//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use halfsup::geometry::{mobius_apply, u_distance, UHPoint};
use halfsup::modular::GroupElement;

/// Quadruple loop over a box that contains every admissible matrix.
pub fn naive_count(z: UHPoint, ell: i64, n: i64, delta: f64) -> usize {
    let e_d = (1.0 + 2.0 * delta).acosh().exp();
    let s = (ell as f64 * e_d).sqrt() + 1.0;
    let m = z.x.abs() + z.y * e_d + 1.0;
    let cb = (s / z.y).ceil() as i64;
    let db = (s + cb as f64 * z.x.abs()).ceil() as i64;
    let ab = (m * s / z.y).ceil() as i64;
    let bb = (m * s + ab as f64 * z.x.abs()).ceil() as i64;
    let mut count = 0;
    for c in -cb..=cb {
        if c % n != 0 {
            continue;
        }
        for d in -db..=db {
            for a in -ab..=ab {
                for b in -bb..=bb {
                    if a * d - b * c != ell {
                        continue;
                    }
                    let g = GroupElement::new(a, b, c, d);
                    if u_distance(mobius_apply(&g, z), z) <= delta + 1e-12 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Jacobi symbol `(a/m)` for odd positive `m`, by quadratic reciprocity.
pub fn jacobi(a: i64, m: i64) -> i64 {
    assert!(m > 0 && m % 2 == 1);
    let (mut a, mut m) = (a.rem_euclid(m), m);
    let mut s = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                s = -s;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            s = -s;
        }
        a %= m;
    }
    if m == 1 {
        s
    } else {
        0
    }
}

/// Shimura's `(c/d)` for odd `d`: `(c/|d|)`, negated when `c < 0` and `d < 0`.
pub fn shimura_symbol(c: i64, d: i64) -> i64 {
    if c == 0 {
        return if d.abs() == 1 { 1 } else { 0 };
    }
    let j = jacobi(c, d.abs());
    if c < 0 && d < 0 {
        -j
    } else {
        j
    }
}

/// Every point reached from `z` by words of length at most `depth` in
/// `letters`, with `Re` folded into `[-1/2, 1/2)` after each letter.
pub fn word_orbit_max_im(z: UHPoint, letters: &[GroupElement], depth: usize) -> f64 {
    let fold = |p: UHPoint| UHPoint {
        x: p.x - (p.x + 0.5).floor(),
        y: p.y,
    };
    let mut frontier = vec![fold(z)];
    let mut best = z.y;
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * letters.len());
        for p in &frontier {
            for g in letters {
                let q = fold(mobius_apply(g, *p));
                best = best.max(q.y);
                next.push(q);
            }
        }
        frontier = next;
    }
    best
}
