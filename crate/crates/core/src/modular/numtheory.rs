//! Integer primitives: gcd, Bézout, primality, Jacobi and Kronecker symbols.

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a as i64, b as i64) as u64 * b
}

/// Returns `(g, s, t)` with `a·s + b·t = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a as i128, b as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (old_r, old_s, old_t) = (-old_r, -old_s, -old_t);
    }
    (old_r as i64, old_s as i64, old_t as i64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization as `(p, e)` pairs in increasing order of `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(_, e)| e == 1)
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn primes_between(lo: f64, hi: f64) -> Vec<u64> {
    let start = lo.ceil().max(2.0) as u64;
    let end = hi.floor() as u64;
    (start..=end).filter(|&p| is_prime(p)).collect()
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Returns `Some(r)` when `n = r²`.
pub fn exact_sqrt(n: u128) -> Option<u128> {
    let r = isqrt(n);
    (r * r == n).then_some(r)
}

/// 2-adic valuation; `v2(0)` is reported as 64.
pub fn v2(n: i64) -> u32 {
    if n == 0 {
        64
    } else {
        n.trailing_zeros()
    }
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
pub fn jacobi(a: i64, n: i64) -> i8 {
    assert!(n > 0 && n % 2 == 1, "jacobi needs odd positive modulus");
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker symbol `(c/d)` with the sign conventions used for the theta
/// multiplier:
///
/// | d        | value                                                 |
/// |----------|-------------------------------------------------------|
/// | `0`      | `1` if `c = ±1`, else `0`                             |
/// | `-1`     | `1` if `c ≥ 0`, `-1` if `c < 0`                       |
/// | `d < 0`  | `(c/|d|)`, negated when `c < 0`                        |
/// | `2`      | `0` for even `c`, `1` for `c ≡ ±1 (8)`, `-1` otherwise |
///
/// For odd positive `d` this is the Jacobi symbol; in particular
/// `(0/1) = (0/-1) = 1`.
pub fn kronecker(c: i64, d: i64) -> i8 {
    if d == 0 {
        return if c == 1 || c == -1 { 1 } else { 0 };
    }
    if d < 0 {
        let base = kronecker(c, -d);
        return if c < 0 { -base } else { base };
    }
    let k = v2(d);
    let odd = d >> k;
    let mut val = 1i8;
    if k > 0 {
        let two = match c.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
        if k % 2 == 1 {
            val *= two;
        } else if two == 0 {
            val = 0;
        }
    }
    val * jacobi(c, odd)
}
