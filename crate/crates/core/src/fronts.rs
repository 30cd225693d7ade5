//! Interface locations `X_λ^±`, front traces and propagation-rate bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NflError, Result};
use crate::evolution::Trajectory;
use crate::kernel::FieldState;

fn crossing(x_a: f64, u_a: f64, u_b: f64, dx: f64, level: f64) -> f64 {
    if u_a == u_b {
        return x_a;
    }
    x_a + dx * (u_a - level) / (u_a - u_b)
}

/// `(X_λ^-, X_λ^+)` with linear interpolation in the crossing cell.
pub fn interface_locations(s: &FieldState, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) || !(s.u_left > level && level > s.u_right) {
        return Err(NflError::LevelNotBracketed { level, u_left: s.u_left, u_right: s.u_right });
    }
    let n = s.len() as isize;
    // X^-: first sample at or below the level, scanning from the left tail
    let mut j = 0;
    while j < n && s.at(j) > level {
        j += 1;
    }
    let xm = crossing(s.x0 + (j - 1) as f64 * s.dx, s.at(j - 1), s.at(j), s.dx, level);
    // X^+: last sample at or above the level, scanning from the right tail
    let mut k = n - 1;
    while k >= 0 && s.at(k) < level {
        k -= 1;
    }
    let xp = crossing(s.x0 + k as f64 * s.dx, s.at(k), s.at(k + 1), s.dx, level);
    Ok((xm, xp))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Width {
    pub width: f64,
    /// The band contains a tail value, so the set is not bounded by the window.
    pub unbounded: bool,
}

/// Diameter of `{x : ε1 ≤ u(x) ≤ ε2}` for the piecewise-linear interpolant.
pub fn interface_width(s: &FieldState, eps1: f64, eps2: f64) -> Result<Width> {
    if !(eps1 > 0.0 && eps1 <= eps2 && eps2 < 1.0) {
        return Err(NflError::InvalidBand { lo: eps1, hi: eps2 });
    }
    let inside = |u: f64| u >= eps1 && u <= eps2;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut note = |a: f64, b: f64| {
        lo = lo.min(a);
        hi = hi.max(b);
    };
    for i in 0..s.len() {
        if inside(s.values[i]) {
            note(s.x(i), s.x(i));
        }
    }
    for i in 0..s.len().saturating_sub(1) {
        let (ua, ub) = (s.values[i], s.values[i + 1]);
        if ua == ub {
            continue;
        }
        // parameter range in [0,1] where eps1 ≤ ua + τ(ub-ua) ≤ eps2
        let t1 = (eps1 - ua) / (ub - ua);
        let t2 = (eps2 - ua) / (ub - ua);
        let (a, b) = (t1.min(t2).max(0.0), t1.max(t2).min(1.0));
        if a <= b {
            note(s.x(i) + a * s.dx, s.x(i) + b * s.dx);
        }
    }
    let unbounded = inside(s.u_left) || inside(s.u_right);
    let width = if hi >= lo { hi - lo } else { 0.0 };
    Ok(Width { width, unbounded })
}

/// Interface locations per level over a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
    /// `minus[l][k] = X_{levels[l]}^-(times[k])`.
    pub minus: Vec<Vec<f64>>,
    pub plus: Vec<Vec<f64>>,
    pub valid: Vec<Vec<bool>>,
    pub reference_level: f64,
    pub reference: Vec<f64>,
}

impl FrontTrace {
    pub fn from_snapshots(snaps: &[FieldState], levels: &[f64], reference_level: f64) -> Self {
        let mut lv: Vec<f64> = levels.to_vec();
        if !lv.contains(&reference_level) {
            lv.push(reference_level);
        }
        let per_snap: Vec<Vec<Option<(f64, f64)>>> =
            snaps.par_iter().map(|s| lv.iter().map(|&l| interface_locations(s, l).ok()).collect()).collect();
        let nl = lv.len();
        let mut minus = vec![Vec::with_capacity(snaps.len()); nl];
        let mut plus = vec![Vec::with_capacity(snaps.len()); nl];
        let mut valid = vec![Vec::with_capacity(snaps.len()); nl];
        for row in &per_snap {
            for (l, v) in row.iter().enumerate() {
                let (a, b) = v.unwrap_or((f64::NAN, f64::NAN));
                minus[l].push(a);
                plus[l].push(b);
                valid[l].push(v.is_some());
            }
        }
        let r = lv.iter().position(|&l| l == reference_level).unwrap();
        let reference = plus[r].clone();
        FrontTrace {
            times: snaps.iter().map(|s| s.t).collect(),
            levels: lv,
            minus,
            plus,
            valid,
            reference_level,
            reference,
        }
    }

    pub fn from_trajectory(traj: &Trajectory, levels: &[f64], reference_level: f64) -> Self {
        Self::from_snapshots(&traj.snapshots, levels, reference_level)
    }

    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-12)
    }

    /// Per snapshot: X^- ≤ X^+ and monotone in λ (tolerance `tol`).
    pub fn ordering_violations(&self, tol: f64) -> usize {
        let mut order: Vec<usize> = (0..self.levels.len()).collect();
        order.sort_by(|&a, &b| self.levels[a].total_cmp(&self.levels[b]));
        let mut bad = 0;
        for k in 0..self.times.len() {
            for &l in &order {
                if self.valid[l][k] && self.minus[l][k] > self.plus[l][k] + tol {
                    bad += 1;
                }
            }
            for w in order.windows(2) {
                let (a, b) = (w[0], w[1]);
                if self.valid[a][k]
                    && self.valid[b][k]
                    && (self.minus[b][k] > self.minus[a][k] + tol || self.plus[b][k] > self.plus[a][k] + tol)
                {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// Rows `t,level,Xminus,Xplus`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,level,Xminus,Xplus\n");
        for k in 0..self.times.len() {
            for l in 0..self.levels.len() {
                out.push_str(&format!(
                    "{:e},{:e},{:e},{:e}\n",
                    self.times[k], self.levels[l], self.minus[l][k], self.plus[l][k]
                ));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PropagationFit {
    pub c1: f64,
    pub t1: f64,
    pub c2: f64,
    pub t2: f64,
    pub pairs_checked: usize,
    pub certified: bool,
}

/// Lower/upper slopes over long gaps with 0.9/1.1 slack, then minimal `T1`, `T2`.
pub fn fit_propagation_bounds(times: &[f64], x: &[f64]) -> Result<PropagationFit> {
    let n = times.len();
    if n < 4 || x.len() != n {
        return Err(crate::error::invalid("trace", "need at least four samples"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(crate::error::invalid("trace", "non-finite interface location"));
    }
    let span = times[n - 1] - times[0];
    let long = 0.25 * span;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let dt = times[j] - times[i];
            if dt > long {
                let s = (x[j] - x[i]) / dt;
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
    }
    let c1 = 0.9 * lo;
    let c2 = 1.1 * hi;
    if !(c1 > 0.0) {
        return Err(NflError::NonpositiveC1 { c1 });
    }
    let (mut t1, mut t2): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dt = times[j] - times[i];
            let dx = x[j] - x[i];
            t1 = t1.max(dt - dx / c1);
            t2 = t2.max(dx / c2 - dt);
        }
    }
    // absorb rounding in the certificate
    t1 += 1e-12 * (1.0 + t1);
    t2 += 1e-12 * (1.0 + t2);
    let mut fit = PropagationFit { c1, t1, c2, t2, pairs_checked: 0, certified: false };
    let (pairs, bad) = verify_propagation_bounds(times, x, &fit);
    fit.pairs_checked = pairs;
    fit.certified = bad.is_none();
    Ok(fit)
}

/// Checks both inequalities on every pair; returns the pair count and the first violation.
pub fn verify_propagation_bounds(times: &[f64], x: &[f64], fit: &PropagationFit) -> (usize, Option<(f64, f64)>) {
    let n = times.len();
    let mut pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let dt = times[j] - times[i];
            let dx = x[j] - x[i];
            if dx < fit.c1 * (dt - fit.t1) || dx > fit.c2 * (dt + fit.t2) {
                return (pairs, Some((times[i], times[j])));
            }
        }
    }
    (pairs, None)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WidthReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub sup_width: f64,
    pub min_width: f64,
    /// `(λ, sup_t |X - X_λ^-|, sup_t |X - X_λ^+|)`.
    pub reference_offsets: Vec<(f64, f64, f64)>,
    pub advance: f64,
}

/// `sup_t [X_{λ1}^+ - X_{λ2}^-]` plus the offsets of each tracked level from the reference.
pub fn check_bounded_width(trace: &FrontTrace, lambda1: f64, lambda2: f64) -> Result<WidthReport> {
    if !(lambda1 > 0.0 && lambda1 <= lambda2 && lambda2 < 1.0) {
        return Err(NflError::InvalidBand { lo: lambda1, hi: lambda2 });
    }
    let a = trace.level_index(lambda1).ok_or(NflError::InvalidBand { lo: lambda1, hi: lambda2 })?;
    let b = trace.level_index(lambda2).ok_or(NflError::InvalidBand { lo: lambda1, hi: lambda2 })?;
    let (mut sup, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..trace.times.len() {
        if trace.valid[a][k] && trace.valid[b][k] {
            let w = trace.plus[a][k] - trace.minus[b][k];
            sup = sup.max(w);
            min = min.min(w);
        }
    }
    let reference_offsets = trace
        .levels
        .iter()
        .enumerate()
        .map(|(l, &lv)| {
            let (mut m, mut p): (f64, f64) = (0.0, 0.0);
            for k in 0..trace.times.len() {
                if trace.valid[l][k] {
                    m = m.max((trace.reference[k] - trace.minus[l][k]).abs());
                    p = p.max((trace.reference[k] - trace.plus[l][k]).abs());
                }
            }
            (lv, m, p)
        })
        .collect();
    let r = &trace.reference;
    let advance = r[r.len() - 1] - r[0];
    Ok(WidthReport { lambda1, lambda2, sup_width: sup, min_width: min, reference_offsets, advance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field<G: Fn(f64) -> f64>(x0: f64, dx: f64, n: usize, l: f64, r: f64, g: G) -> FieldState {
        FieldState::from_fn(x0, dx, n, l, r, g).unwrap()
    }

    #[test]
    fn exponential_crossing() {
        let s = field(-5.0, 0.001, 15001, 1.0, 0.0, |x| (-x).exp().min(1.0));
        let (a, b) = interface_locations(&s, 0.5).unwrap();
        assert_eq!(a, b);
        assert!((a - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn dip_profile_has_gap() {
        let s = field(-3.0, 0.01, 801, 1.0, 0.0, |x| {
            if x < 0.0 {
                1.0
            } else if x < 1.0 {
                1.0 - 0.7 * x
            } else if x < 2.0 {
                0.3
            } else if x < 3.0 {
                0.8
            } else {
                0.0
            }
        });
        let (a, b) = interface_locations(&s, 0.5).unwrap();
        assert!(a > 0.0 && a < 1.0);
        assert!((b - 3.0).abs() < 0.02);
    }

    #[test]
    fn unbracketed_level() {
        let s = FieldState::constant(0.0, 0.1, 10, 0.5).unwrap();
        assert!(matches!(interface_locations(&s, 0.5), Err(NflError::LevelNotBracketed { .. })));
        assert!(matches!(interface_locations(&s, 0.0), Err(NflError::LevelNotBracketed { .. })));
    }

    #[test]
    fn crossing_in_tail_cells() {
        let s = field(0.0, 1.0, 3, 1.0, 0.0, |_| 0.2);
        let (a, b) = interface_locations(&s, 0.5).unwrap();
        assert!((a - (-1.0 + 0.5 / 0.8)).abs() < 1e-15);
        assert_eq!(a, b);
        let s = field(0.0, 1.0, 3, 1.0, 0.0, |_| 0.9);
        let (a, b) = interface_locations(&s, 0.5).unwrap();
        assert!((a - 2.0 - 0.4 / 0.9).abs() < 1e-15);
        assert_eq!(a, b);
    }

    #[test]
    fn widths() {
        let s = field(-5.0, 0.001, 15001, 1.0, 0.0, |x| (-x).exp().min(1.0));
        let w = interface_width(&s, (-2.0f64).exp(), (-1.0f64).exp()).unwrap();
        assert!((w.width - 1.0).abs() < 1e-6 && !w.unbounded);
        let c = FieldState::constant(-5.0, 0.1, 101, 0.5).unwrap();
        let w = interface_width(&c, 0.4, 0.6).unwrap();
        assert!(w.unbounded && (w.width - 10.0).abs() < 1e-9);
        assert!(interface_width(&s, 0.6, 0.4).is_err());
        assert!(interface_width(&s, 0.0, 0.4).is_err());
    }

    #[test]
    fn linear_trace_fit() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
        let x: Vec<f64> = t.iter().map(|t| 2.0 * t).collect();
        let f = fit_propagation_bounds(&t, &x).unwrap();
        assert!(f.c1 <= 2.0 && 2.0 <= f.c2);
        assert!(f.t1 < 1e-9 && f.t2 < 1e-9);
        assert!(f.certified);
    }

    #[test]
    fn oscillating_trace_fit() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.1).collect();
        let x: Vec<f64> = t.iter().map(|t| 2.0 * t + t.sin()).collect();
        let f = fit_propagation_bounds(&t, &x).unwrap();
        assert!(f.c1 <= 2.0 && 2.0 <= f.c2);
        assert!(f.t1 <= 1.0 && f.t2 <= 1.0, "{f:?}");
        // exhaustive oracle
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                let (dt, dx) = (t[j] - t[i], x[j] - x[i]);
                assert!(dx >= f.c1 * (dt - f.t1) && dx <= f.c2 * (dt + f.t2));
            }
        }
    }

    #[test]
    fn stalled_front_rejected() {
        let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let x = vec![1.0; 20];
        assert!(matches!(fit_propagation_bounds(&t, &x), Err(NflError::NonpositiveC1 { .. })));
    }
}
