//! Cylindrical and spherical Bessel functions of the first kind, and the
//! zeros of their derivatives (the Neumann frequencies of the disk and of
//! the radial ball).

use crate::{Error, Result};

const SERIES_LIMIT: f64 = 2.0;
const RESCALE: f64 = 1e250;

/// `J_0(x), …, J_n(x)` for `x >= 0`.
///
/// Small arguments use the power series for the two highest orders followed
/// by downward recurrence; otherwise Miller's backward recurrence normalised
/// by `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_upto(n: usize, x: f64) -> Vec<f64> {
    let x = x.abs();
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        let top = bessel_j_series(n + 1, x);
        let mut jp1 = top;
        let mut j = bessel_j_series(n, x);
        if top == 0.0 || j == 0.0 {
            // high orders underflow; evaluate each order directly
            for (k, v) in out.iter_mut().enumerate() {
                *v = bessel_j_series(k, x);
            }
            return out;
        }
        out[n] = j;
        for k in (1..=n).rev() {
            let jm1 = 2.0 * k as f64 / x * j - jp1;
            jp1 = j;
            j = jm1;
            out[k - 1] = j;
        }
        return out;
    }
    let base = n.max(x.ceil() as usize);
    let mut start = base + 20 + (40.0 * base as f64).sqrt() as usize;
    start += start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let order = k - 1;
        if order <= n {
            out[order] = j;
        }
        if order > 0 && order % 2 == 0 {
            sum += 2.0 * j;
        }
        if j.abs() > RESCALE {
            j /= RESCALE;
            jp1 /= RESCALE;
            sum /= RESCALE;
            for v in out.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    sum += j;
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

fn bessel_j_series(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=m {
        lead *= half / k as f64;
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_m(x)`.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_upto(m, x)[m]
}

/// `(J_{m-1}(x), J_m(x), J_{m+1}(x))` with `J_{-1} = -J_1`.
pub fn bessel_j_triplet(m: usize, x: f64) -> (f64, f64, f64) {
    let all = bessel_j_upto(m + 1, x);
    let below = if m == 0 { -all[1] } else { all[m - 1] };
    (below, all[m], all[m + 1])
}

/// `J_m'(x)`.
pub fn bessel_j_prime(m: usize, x: f64) -> f64 {
    let (a, _, b) = bessel_j_triplet(m, x);
    0.5 * (a - b)
}

/// `j_0(x) = sin x / x`.
pub fn spherical_j0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `j_0'(x) = (x cos x - sin x) / x²`.
pub fn spherical_j0_prime(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Refines a bracketed root of `f` with safeguarded Newton steps, falling
/// back to bisection whenever a step leaves the bracket.
fn refine_root<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) || hi - lo <= 1e-15 * x.abs().max(1.0) {
            return Some(next);
        }
        x = next;
    }
    None
}

/// Positive zeros of `J_m'` below `limit`, in increasing order.
pub fn bessel_j_prime_zeros(m: usize, limit: f64) -> Result<Vec<f64>> {
    let f = |x: f64| bessel_j_prime(m, x);
    let df = |x: f64| {
        let (a, j, b) = bessel_j_triplet(m, x);
        let jp = 0.5 * (a - b);
        -jp / x - (1.0 - (m * m) as f64 / (x * x)) * j
    };
    let step = 0.1;
    let mut lo = (m as f64).max(0.5);
    let mut flo = f(lo);
    let mut roots = Vec::new();
    while lo < limit {
        let hi = lo + step;
        let fhi = f(hi);
        if flo.signum() != fhi.signum() {
            let root = refine_root(f, df, lo, hi).ok_or(Error::RootNotConverged {
                family: "disk",
                order: m,
                index: roots.len() + 1,
            })?;
            if root < limit {
                roots.push(root);
            }
        }
        lo = hi;
        flo = fhi;
    }
    Ok(roots)
}

/// The `k`-th positive root of `tan x = x` (`k >= 1`), i.e. the `k`-th
/// nonzero zero of `j_0'`.
pub fn spherical_j0_prime_zero(k: usize) -> Result<f64> {
    let g = |x: f64| x * x.cos() - x.sin();
    let dg = |x: f64| -x * x.sin();
    let pi = std::f64::consts::PI;
    let lo = k as f64 * pi + 1e-12;
    let hi = (k as f64 + 0.5) * pi;
    refine_root(g, dg, lo, hi).ok_or(Error::RootNotConverged {
        family: "ball",
        order: 0,
        index: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an arbitrary-precision implementation.
    const TABLE: &[(usize, f64, f64, f64)] = &[
        (0, 1.0, 0.7651976865579666, -0.4400505857449335),
        (1, 2.5, 0.49709410246427405, -0.2472214174539076),
        (5, 10.0, -0.23406152818679363, -0.10257192200861172),
        (0, 30.0, -0.08636798358104021, 0.11875106261662294),
        (12, 7.3, 0.0040190644839408094, 0.005382138001868472),
        (40, 45.0, 0.126600621268202, -0.06189698176293956),
        (3, 0.01, 2.0833203125325523e-08, 6.249934896061198e-06),
        (20, 3.0, 1.2275946737992987e-15, 8.09584809519983e-15),
    ];

    #[test]
    fn values_match_reference() {
        for &(m, x, j, jp) in TABLE {
            let got = bessel_j(m, x);
            let gotp = bessel_j_prime(m, x);
            assert!(
                (got - j).abs() <= 1e-13 * j.abs().max(1e-3),
                "J_{m}({x}) = {got}, want {j}"
            );
            assert!(
                (gotp - jp).abs() <= 1e-13 * jp.abs().max(1e-3),
                "J_{m}'({x})"
            );
        }
    }

    #[test]
    fn derivative_zeros_match_reference() {
        let z0 = bessel_j_prime_zeros(0, 11.0).unwrap();
        let want0 = [3.8317059702075125, 7.015586669815619, 10.173468135062722];
        assert_eq!(z0.len(), 3);
        for (a, b) in z0.iter().zip(want0) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let z1 = bessel_j_prime_zeros(1, 9.0).unwrap();
        for (a, b) in z1
            .iter()
            .zip([1.8411837813406595, 5.3314427735250325, 8.536316366346286])
        {
            assert!((a - b).abs() < 1e-12);
        }
        let z7 = bessel_j_prime_zeros(7, 13.0).unwrap();
        for (a, b) in z7.iter().zip([8.577836489714073, 12.932386237089576]) {
            assert!((a - b).abs() < 1e-12);
        }
        let z30 = bessel_j_prime_zeros(30, 33.0).unwrap();
        assert!((z30[0] - 32.534223556790145).abs() < 1e-11);
    }

    #[test]
    fn tan_x_equals_x_roots() {
        // 50-digit reference roots.
        let want = [4.493409457909064, 7.725251836937707, 10.904121659428899];
        for (k, w) in want.iter().enumerate() {
            let x = spherical_j0_prime_zero(k + 1).unwrap();
            assert!((x - w).abs() < 1e-13, "{x} vs {w}");
            assert!(spherical_j0_prime(x).abs() < 1e-14);
        }
    }

    #[test]
    fn recurrence_and_small_argument_branches_agree() {
        for m in [0usize, 1, 4, 9] {
            let a = bessel_j(m, SERIES_LIMIT * (1.0 - 1e-15));
            let b = bessel_j(m, SERIES_LIMIT * (1.0 + 1e-15));
            assert!((a - b).abs() < 1e-13, "order {m}: {a} vs {b}");
        }
    }
}
