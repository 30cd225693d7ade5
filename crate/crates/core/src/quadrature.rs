//! Composite and adaptive Simpson rules.

use crate::error::{NflError, Result};

/// Composite Simpson on `n` panels (`n` rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// Composite Simpson with panel doubling until two refinements agree to `tol`
/// (relative to max(1, |I|)). Fails if `tol_fail` is still exceeded at the finest level.
pub fn simpson_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, tol: f64, tol_fail: f64) -> Result<f64> {
    let mut n = n0.max(2);
    let mut prev = simpson(&f, a, b, n);
    let mut diff = f64::INFINITY;
    for _ in 0..12 {
        n *= 2;
        let cur = simpson(&f, a, b, n);
        diff = (cur - prev).abs();
        let scale = cur.abs().max(1.0);
        if diff <= tol * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    if diff <= tol_fail * prev.abs().max(1.0) {
        Ok(prev)
    } else {
        Err(NflError::QuadratureNonconvergence { diff })
    }
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson on [a, b] split at the given interior breakpoints
/// (kinks of the integrand). Absolute tolerance per sub-interval.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|p, q| p.total_cmp(q));
    pts.extend(inner);
    pts.push(b);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        // pre-split so narrow features are seen
        let pieces = 8;
        let h = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let p = lo + k as f64 * h;
            let q = if k + 1 == pieces { hi } else { p + h };
            let fp = f(p);
            let fq = f(q);
            let fm = f(0.5 * (p + q));
            let whole = (q - p) / 6.0 * (fp + 4.0 * fm + fq);
            total += adapt(&f, p, q, fp, fm, fq, whole, tol / pieces as f64, 40);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 4.0 + 4.0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn refined_gaussian_mass() {
        let s = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let v = simpson_refined(|x| s * (-0.5 * x * x).exp(), -10.0, 10.0, 64, 1e-13, 1e-8).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = adaptive(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12);
        assert!((v - 2.5).abs() < 1e-12);
    }
}
