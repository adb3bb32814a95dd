//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Plain bisection. Requires a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRootInBracket { lo, hi, seed: 0.5 * (lo + hi) });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brent's method (inverse quadratic interpolation with bisection fallback).
///
/// Terminates when the bracket is narrower than `xtol + 4 eps |x|`, so passing
/// `xtol = 0` runs to full floating-point resolution.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRootInBracket { lo: a.min(b), hi: a.max(b), seed: 0.5 * (a + b) });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

/// Finds a sign change of `f` by scanning geometrically outward from `seed`
/// within `[floor, ceil]`, then polishes it with Brent. Among the candidate
/// brackets the one adjacent to `seed` is tried first, so the returned root
/// is the one nearest the seed on a log scale.
pub fn root_near<F: Fn(f64) -> f64>(f: F, seed: f64, floor: f64, ceil: f64) -> Result<f64> {
    let no_root = Error::NoRootInBracket { lo: floor, hi: ceil, seed };
    if !(seed.is_finite() && seed > 0.0) || floor >= ceil {
        return Err(no_root);
    }
    let seed = seed.clamp(floor, ceil);
    let fs = f(seed);
    if fs == 0.0 {
        return Ok(seed);
    }
    let mut lo = seed;
    let mut flo = fs;
    let mut hi = seed;
    let mut fhi = fs;
    let mut factor = 2.0_f64;
    loop {
        let mut moved = false;
        if hi < ceil {
            let next = (hi * factor).min(ceil);
            let fnext = f(next);
            if fnext.is_finite() && fnext.signum() != fhi.signum() {
                return brent(&f, hi, next, 0.0, 200);
            }
            hi = next;
            fhi = fnext;
            moved = true;
        }
        if lo > floor {
            let next = (lo / factor).max(floor);
            let fnext = f(next);
            if fnext.is_finite() && fnext.signum() != flo.signum() {
                return brent(&f, next, lo, 0.0, 200);
            }
            lo = next;
            flo = fnext;
            moved = true;
        }
        if !moved {
            return Err(no_root);
        }
        factor = (factor * factor).min(16.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_solves_cubic_to_full_precision() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 0.0, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn brent_rejects_non_bracket() {
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 0.0, 50), Err(Error::NoRootInBracket { .. })));
    }

    #[test]
    fn bisection_matches_brent() {
        let f = |x: f64| x.cos() - x;
        let a = bisect(f, 0.0, 1.0, 1e-15, 200).unwrap();
        let b = brent(f, 0.0, 1.0, 0.0, 200).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn root_near_prefers_the_root_adjacent_to_the_seed() {
        // roots at 1e-3, 0.1 and 0.4
        let f = |x: f64| (x - 1e-3) * (x - 0.1) * (x - 0.4);
        let r = root_near(f, 0.08, 1e-14, 0.49).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
        let r = root_near(f, 2e-3, 1e-14, 0.49).unwrap();
        assert!((r - 1e-3).abs() < 1e-17);
        assert!(root_near(|x| x + 1.0, 0.1, 1e-14, 0.49).is_err());
    }
}
