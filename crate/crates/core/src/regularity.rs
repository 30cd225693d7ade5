//! Space-regularity diagnostics: region bookkeeping, difference quotients and their
//! coefficient bounds, the `u_x` integral representation, Harnack and decay checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::evolution::Trajectory;
use crate::fronts::{FrontTrace, PropagationFit};
use crate::kernel::{ConvWeights, FieldState, Kernel};
use crate::nonlinearity::{Lattice, Nonlinearity};
use crate::quadrature;

/// Below this `u` counts as zero for ratio diagnostics.
pub const U_FLOOR: f64 = 1e-300;
pub const IDENTITY_TOL: f64 = 1e-3;
pub const UX_REL_TOL: f64 = 1e-2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityContext {
    pub delta0: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub l0: f64,
    pub l1: f64,
    pub probes: Vec<f64>,
    pub t_first: Vec<f64>,
    pub t_last: Vec<f64>,
    /// `sup_x (t_last - t_first)`.
    pub t_region: f64,
}

impl RegularityContext {
    /// Upper bound for `t_region` from the propagation fit.
    pub fn growth_time_bound(&self, fit: &PropagationFit) -> f64 {
        fit.t1 + (self.l0 + self.l1 + 1.0) / fit.c1
    }

    pub fn probe_index(&self, x: f64) -> Option<usize> {
        self.probes.iter().position(|&p| (p - x).abs() < 1e-9)
    }
}

fn sup_gap(reference: &[f64], other: &[f64]) -> f64 {
    reference
        .iter()
        .zip(other)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// `L₀`, `L₁` and per-probe `t_first`, `t_last` from a trace carrying levels θ₀ and θ₁.
pub fn compute_regions(
    trace: &FrontTrace,
    theta0: f64,
    theta1: f64,
    delta0: f64,
    probes: &[f64],
) -> Result<RegularityContext> {
    if !(0.0 < theta0 && theta0 < theta1 && theta1 < 1.0) {
        return Err(invalid("theta0", "need 0 < theta0 < theta1 < 1"));
    }
    if !(delta0 > 0.0) {
        return Err(invalid("delta0", "must be positive"));
    }
    let i0 = trace.level_index(theta0).ok_or_else(|| invalid("theta0", "level missing from trace"))?;
    let i1 = trace.level_index(theta1).ok_or_else(|| invalid("theta1", "level missing from trace"))?;
    let x = &trace.reference;
    let l0 = 1.0 + delta0 + sup_gap(x, &trace.plus[i0]);
    let l1 = 1.0 + delta0 + sup_gap(x, &trace.minus[i1]);
    let mut t_first = Vec::with_capacity(probes.len());
    let mut t_last = Vec::with_capacity(probes.len());
    for &p in probes {
        // I_r(t) = [X + L₀, ∞), I_l(t) = (-∞, X - L₁]
        if !(p >= x[0] + l0) {
            return Err(invalid("probes", format!("probe {p} is not ahead of the front at the first sample")));
        }
        let kf = x.iter().position(|&xt| p < xt + l0).ok_or(NflError::HorizonTooShort { x: p })?;
        let kl = x.iter().rposition(|&xt| p > xt - l1).unwrap_or(0);
        if kl + 1 >= x.len() {
            return Err(NflError::HorizonTooShort { x: p });
        }
        t_first.push(trace.times[kf]);
        t_last.push(trace.times[kl]);
    }
    let t_region = t_first.iter().zip(&t_last).fold(0.0f64, |m, (a, b)| m.max(b - a));
    Ok(RegularityContext { delta0, theta0, theta1, l0, l1, probes: probes.to_vec(), t_first, t_last, t_region })
}

fn require_fixed_window(traj: &Trajectory) -> Result<()> {
    let s0 = &traj.snapshots[0];
    if traj.snapshots.iter().any(|s| s.x0 != s0.x0 || s.len() != s0.len()) {
        return Err(invalid("trajectory", "needs a fixed window (no recentering)"));
    }
    Ok(())
}

fn eta_cells(eta: f64, dx: f64) -> Result<i64> {
    let k = (eta / dx).round();
    if k == 0.0 || ((eta - k * dx).abs() > 1e-9 * dx) {
        return Err(NflError::StepNotMultipleOfGrid { eta, dx });
    }
    Ok(k as i64)
}

/// Difference quotients and their coefficient fields, one row per snapshot.
#[derive(Clone, Debug)]
pub struct DifferenceField {
    pub eta: f64,
    pub cells: i64,
    pub times: Vec<f64>,
    pub x0: f64,
    pub dx: f64,
    pub v: Vec<Vec<f64>>,
    /// `v/u`, NaN where `u` is below [`U_FLOOR`].
    pub w: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub a_tilde: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub a1: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    /// Measured inf and sup of `J*u/u`.
    pub c3: f64,
    pub c4: f64,
    /// Sup-norm residual of `v_t = b - v + a v + ã` away from the window edges.
    pub identity_residual: f64,
}

impl DifferenceField {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// `sup |1 - a^η|`.
    pub fn c_a(&self) -> f64 {
        self.a.iter().flatten().fold(0.0f64, |m, a| m.max((1.0 - a).abs()))
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

struct Row {
    v: Vec<f64>,
    w: Vec<f64>,
    a: Vec<f64>,
    at: Vec<f64>,
    b: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    rlo: f64,
    rhi: f64,
}

fn row(s: &FieldState, k: i64, eta: f64, nl: &Nonlinearity, weights: &ConvWeights) -> Row {
    let n = s.len();
    let t = s.t;
    let ju = weights.apply(s);
    let mut v = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut at = vec![0.0; n];
    for i in 0..n {
        let x = s.x(i);
        let (u0, u1) = (s.at(i as isize), s.at(i as isize + k as isize));
        let du = u1 - u0;
        v[i] = du / eta;
        a[i] = if du.abs() < 1e-12 {
            nl.fu_ext(t, x + eta, 0.5 * (u0 + u1))
        } else {
            (nl.f_ext(t, x + eta, u1) - nl.f_ext(t, x + eta, u0)) / du
        };
        at[i] = (nl.f_ext(t, x + eta, u0) - nl.f_ext(t, x, u0)) / eta;
    }
    let b = weights.apply_slice(&v, 0.0, 0.0);
    let (mut w, mut a1, mut a2) = (vec![f64::NAN; n], vec![f64::NAN; n], vec![f64::NAN; n]);
    let (mut rlo, mut rhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let u = s.values[i];
        if u > U_FLOOR {
            let ratio = ju[i] / u;
            rlo = rlo.min(ratio);
            rhi = rhi.max(ratio);
            w[i] = v[i] / u;
            a1[i] = (b[i] + at[i]) / u;
            a2[i] = a[i] - ratio - nl.f_ext(t, s.x(i), u) / u;
        }
    }
    Row { v, w, a, at, b, a1, a2, rlo, rhi }
}

/// Assembles `v^η` and its coefficients over a fixed-window trajectory.
pub fn difference_fields(traj: &Trajectory, eta: f64, nl: &Nonlinearity, kernel: &Kernel) -> Result<DifferenceField> {
    require_fixed_window(traj)?;
    let s0 = &traj.snapshots[0];
    let dx = s0.dx;
    let k = eta_cells(eta, dx)?;
    let weights = ConvWeights::new(kernel, dx)?;
    let rows: Vec<Row> = traj.snapshots.iter().map(|s| row(s, k, eta, nl, &weights)).collect();
    let times = traj.times();
    // time-centered check of the evolution identity
    let n = s0.len();
    let margin = weights.kmax + k.unsigned_abs() as usize + 2;
    let mut res: f64 = 0.0;
    for j in 1..rows.len().saturating_sub(1) {
        let h = times[j + 1] - times[j - 1];
        let r = &rows[j];
        for i in margin..n.saturating_sub(margin) {
            let vt = (rows[j + 1].v[i] - rows[j - 1].v[i]) / h;
            let rhs = r.b[i] - r.v[i] + r.a[i] * r.v[i] + r.at[i];
            res = res.max((vt - rhs).abs());
        }
    }
    let c3 = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.rlo));
    let c4 = rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.rhi));
    let mut df = DifferenceField {
        eta,
        cells: k,
        times,
        x0: s0.x0,
        dx,
        v: Vec::new(),
        w: Vec::new(),
        a: Vec::new(),
        a_tilde: Vec::new(),
        b: Vec::new(),
        a1: Vec::new(),
        a2: Vec::new(),
        c3,
        c4,
        identity_residual: res,
    };
    for r in rows {
        df.v.push(r.v);
        df.w.push(r.w);
        df.a.push(r.a);
        df.a_tilde.push(r.at);
        df.b.push(r.b);
        df.a1.push(r.a1);
        df.a2.push(r.a2);
    }
    Ok(df)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub x: f64,
    pub eta: f64,
    pub value: f64,
    pub bound: f64,
    pub rule: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub kappa0: f64,
    pub c3: f64,
    pub c5: f64,
    pub rows_checked: usize,
    /// Rows breaking `a ≤ 1-κ₀` before `t_first` or `a ≤ 0` after `t_last`.
    pub violations: Vec<Violation>,
    /// Rows breaking the `a₂` bounds.
    pub a2_violations: Vec<Violation>,
    pub pass: bool,
}

/// Sign and size checks of `a^η` and `a₂^η` at each probe, split by region.
pub fn check_coefficient_bounds(
    df: &DifferenceField,
    ctx: &RegularityContext,
    kappa0: f64,
    sup_fu: f64,
) -> CoefficientReport {
    let tol = 1e-9;
    let c3 = df.c3;
    let c5 = df.c4 + 2.0 * sup_fu;
    let mut violations = Vec::new();
    let mut a2_violations = Vec::new();
    let mut rows = 0;
    for (p, &x) in ctx.probes.iter().enumerate() {
        let i = ((x - df.x0) / df.dx).round();
        if i < 0.0 || i as usize >= df.v.first().map_or(0, |r| r.len()) {
            continue;
        }
        let i = i as usize;
        for (k, &t) in df.times.iter().enumerate() {
            rows += 1;
            let a = df.a[k][i];
            let a2 = df.a2[k][i];
            let push = |list: &mut Vec<Violation>, value: f64, bound: f64, rule: &str| {
                if value > bound + tol {
                    list.push(Violation { t, x, eta: df.eta, value, bound, rule: rule.to_string() });
                }
            };
            if t < ctx.t_first[p] {
                push(&mut violations, a, 1.0 - kappa0, "a_before_first");
                if a2.is_finite() {
                    push(&mut a2_violations, a2, -0.5 * c3, "a2_before_first");
                }
            } else if t > ctx.t_last[p] {
                push(&mut violations, a, 0.0, "a_after_last");
                if a2.is_finite() {
                    push(&mut a2_violations, a2, -c3, "a2_after_last");
                }
            } else if a2.is_finite() {
                push(&mut a2_violations, a2, c5, "a2_between");
            }
        }
    }
    let pass = violations.is_empty();
    CoefficientReport { kappa0, c3, c5, rows_checked: rows, violations, a2_violations, pass }
}

/// Sampled `sup |f_x|` over the lattice and `u ∈ [0,1]`.
pub fn sup_fx(nl: &Nonlinearity, lattice: &Lattice) -> f64 {
    let us = lattice.us(0.0, 1.0);
    let mut m: f64 = 0.0;
    for t in lattice.ts() {
        for x in lattice.xs() {
            for &u in &us {
                m = m.max(nl.fx_ext(t, x, u).abs());
            }
        }
    }
    m
}

/// Sampled `sup |f_u|` over the lattice and `u ∈ [0,1]`.
pub fn sup_fu(nl: &Nonlinearity, lattice: &Lattice) -> f64 {
    let us = lattice.us(0.0, 1.0);
    let mut m: f64 = 0.0;
    for t in lattice.ts() {
        for x in lattice.xs() {
            for &u in &us {
                m = m.max(nl.fu_ext(t, x, u).abs());
            }
        }
    }
    m
}

/// `(‖J'‖₁ + sup|f_x|)(e^{C_a T}/κ₀ + T e^{C_a T} + 1)`.
pub fn ux_sup_bound(j_prime_l1: f64, sup_fx: f64, c_a: f64, t_region: f64, kappa0: f64) -> f64 {
    let e = (c_a * t_region).exp();
    (j_prime_l1 + sup_fx) * (e / kappa0 + t_region * e + 1.0)
}

/// Integral representation of `u_x` on a fixed-window trajectory.
pub struct UxIntegrator<'a> {
    traj: &'a Trajectory,
    nl: &'a Nonlinearity,
    /// `J'*u` per snapshot.
    jpu: Vec<Vec<f64>>,
}

impl<'a> UxIntegrator<'a> {
    pub fn new(traj: &'a Trajectory, nl: &'a Nonlinearity, kernel: &Kernel) -> Result<Self> {
        require_fixed_window(traj)?;
        let weights = ConvWeights::new(kernel, traj.snapshots[0].dx)?;
        let jpu = traj.snapshots.iter().map(|s| weights.apply_derivative(s)).collect();
        Ok(UxIntegrator { traj, nl, jpu })
    }

    pub fn snapshot_index(&self, t: f64) -> Result<usize> {
        let snaps = &self.traj.snapshots;
        snaps
            .iter()
            .position(|s| (s.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or_else(|| invalid("t", format!("{t} is not a stored snapshot time")))
    }

    fn start_index(&self, k: usize, horizon: f64) -> Result<usize> {
        let snaps = &self.traj.snapshots;
        let t = snaps[k].t;
        let t0 = snaps[0].t;
        if t - horizon < t0 - 1e-9 {
            return Err(NflError::InsufficientHistory { t, needed: horizon, available: t - t0 });
        }
        Ok(snaps.iter().position(|s| s.t >= t - horizon - 1e-9).unwrap_or(0))
    }

    fn at_index(&self, k: usize, i: usize, k0: usize) -> f64 {
        let snaps = &self.traj.snapshots;
        let x = snaps[0].x(i);
        let damp = |j: usize| {
            let s = &snaps[j];
            1.0 - self.nl.fu_ext(s.t, x, s.values[i])
        };
        let g = |j: usize| {
            let s = &snaps[j];
            self.jpu[j][i] + self.nl.fx_ext(s.t, x, s.values[i])
        };
        let mut e = 0.0;
        let mut acc = 0.0;
        let mut prev = g(k);
        for j in (k0..k).rev() {
            let h = snaps[j + 1].t - snaps[j].t;
            e += 0.5 * h * (damp(j) + damp(j + 1));
            let cur = g(j) * (-e).exp();
            acc += 0.5 * h * (prev + cur);
            prev = cur;
        }
        acc
    }

    /// Truncated integral at snapshot time `t`, grid point `x`.
    pub fn at(&self, t: f64, x: f64, horizon: f64) -> Result<f64> {
        let k = self.snapshot_index(t)?;
        let k0 = self.start_index(k, horizon)?;
        let s = &self.traj.snapshots[k];
        let i = ((x - s.x0) / s.dx).round();
        if i < 0.0 || i as usize >= s.len() || (s.x(i as usize) - x).abs() > 1e-9 * s.dx.max(1.0) {
            return Err(invalid("x", format!("{x} is not a grid point")));
        }
        Ok(self.at_index(k, i as usize, k0))
    }

    /// Whole-grid field at snapshot time `t`.
    pub fn field(&self, t: f64, horizon: f64) -> Result<Vec<f64>> {
        let k = self.snapshot_index(t)?;
        let k0 = self.start_index(k, horizon)?;
        let n = self.traj.snapshots[k].len();
        Ok((0..n).into_par_iter().map(|i| self.at_index(k, i, k0)).collect())
    }
}

pub fn ux_integral(traj: &Trajectory, nl: &Nonlinearity, kernel: &Kernel, t: f64, x: f64, horizon: f64) -> Result<f64> {
    UxIntegrator::new(traj, nl, kernel)?.at(t, x, horizon)
}

/// Centered difference `(u(x+Δx) - u(x-Δx))/(2Δx)` using the tails at the ends.
pub fn centered_difference(s: &FieldState) -> Vec<f64> {
    (0..s.len() as isize).map(|i| (s.at(i + 1) - s.at(i - 1)) / (2.0 * s.dx)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UxComparison {
    pub max_rel_error: f64,
    pub witness_x: f64,
    pub points_compared: usize,
    pub sup_ux: f64,
    pub pass: bool,
}

/// Relative error of the integral against centered differences where `|u_x| > floor`.
pub fn compare_ux(xs: &[f64], integral: &[f64], fd: &[f64], floor: f64, margin: usize) -> UxComparison {
    let n = xs.len();
    let (mut worst, mut wx, mut count, mut sup) = (0.0f64, f64::NAN, 0, 0.0f64);
    for i in margin..n.saturating_sub(margin) {
        sup = sup.max(fd[i].abs());
        if fd[i].abs() > floor {
            count += 1;
            let e = (integral[i] - fd[i]).abs() / fd[i].abs();
            if e > worst {
                worst = e;
                wx = xs[i];
            }
        }
    }
    UxComparison { max_rel_error: worst, witness_x: wx, points_compared: count, sup_ux: sup, pass: worst <= UX_REL_TOL }
}

/// Rows `x,ux_integral,ux_fd`.
pub fn ux_csv(xs: &[f64], integral: &[f64], fd: &[f64]) -> String {
    let mut out = String::from("x,ux_integral,ux_fd\n");
    for i in 0..xs.len() {
        out.push_str(&format!("{:e},{:e},{:e}\n", xs[i], integral[i], fd[i]));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnackReport {
    pub c: f64,
    pub r: f64,
    pub max_ratio: f64,
    pub witness_t: f64,
    pub witness_x: f64,
    pub witness_y: f64,
    pub c3_implied: f64,
    pub c4_implied: f64,
    pub pass: bool,
}

/// `max_x u(x) e^{-r|x-y|}` for every `y` with its argmax, in two sweeps.
fn max_convolution(u: &[f64], dx: f64, r: f64) -> Vec<(f64, usize)> {
    let n = u.len();
    let q = (-r * dx).exp();
    let mut fwd = vec![(0.0, 0); n];
    for i in 0..n {
        let carried = if i > 0 { (fwd[i - 1].0 * q, fwd[i - 1].1) } else { (0.0, 0) };
        fwd[i] = if u[i] >= carried.0 { (u[i], i) } else { carried };
    }
    let mut out = fwd.clone();
    let mut back = (0.0, n - 1);
    for i in (0..n).rev() {
        back = if u[i] >= back.0 * q { (u[i], i) } else { (back.0 * q, back.1) };
        if back.0 > out[i].0 {
            out[i] = back;
        }
    }
    out
}

fn exp_abs_moment(kernel: &Kernel, r: f64) -> f64 {
    let t = kernel.truncation_radius();
    2.0 * quadrature::simpson(|x| kernel.eval(x) * (r * x).exp(), 0.0, t, 4000)
}

/// `sup u(t,x) / (e^{r|x-y|} u(t,y))` over snapshots, ignoring the last `right_margin`
/// length of each window.
pub fn harnack_check(traj: &Trajectory, kernel: &Kernel, c: f64, r: f64, right_margin: f64) -> HarnackReport {
    let per: Vec<(f64, usize, usize)> = traj
        .snapshots
        .par_iter()
        .map(|s| {
            let keep = ((s.len() as f64) - (right_margin / s.dx).ceil()).max(1.0) as usize;
            let u = &s.values[..keep.min(s.len())];
            let m = max_convolution(u, s.dx, r);
            let (mut best, mut bx, mut by) = (0.0f64, 0, 0);
            for (y, &(num, x)) in m.iter().enumerate() {
                let ratio = if u[y] > 0.0 { num / u[y] } else { f64::INFINITY };
                if ratio > best {
                    best = ratio;
                    bx = x;
                    by = y;
                }
            }
            (best, bx, by)
        })
        .collect();
    let (mut max_ratio, mut wt, mut wx, mut wy) = (0.0f64, f64::NAN, f64::NAN, f64::NAN);
    for (s, &(ratio, x, y)) in traj.snapshots.iter().zip(&per) {
        if ratio > max_ratio {
            max_ratio = ratio;
            wt = s.t;
            wx = s.x(x);
            wy = s.x(y);
        }
    }
    let c3_implied = exp_abs_moment(kernel, -r) / c;
    let c4_implied = c * exp_abs_moment(kernel, r);
    HarnackReport {
        c,
        r,
        max_ratio,
        witness_t: wt,
        witness_x: wx,
        witness_y: wy,
        c3_implied,
        c4_implied,
        pass: max_ratio <= c * (1.0 + 1e-12),
    }
}

/// First passing `(C, r)` scanning rates then constants in the given order.
pub fn harnack_search(
    traj: &Trajectory,
    kernel: &Kernel,
    rs: &[f64],
    cs: &[f64],
    right_margin: f64,
) -> Option<HarnackReport> {
    for &r in rs {
        let probe = harnack_check(traj, kernel, f64::INFINITY, r, right_margin);
        if let Some(&c) = cs.iter().find(|&&c| probe.max_ratio <= c * (1.0 + 1e-12)) {
            return Some(harnack_check(traj, kernel, c, r, right_margin));
        }
    }
    None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WSup {
    pub eta: f64,
    pub sup: f64,
    pub witness_t: f64,
    pub witness_x: f64,
}

/// `sup |w^η|` over snapshots with `t ≥ t_min`, ignoring the last `right_margin` length.
pub fn sup_w(traj: &Trajectory, eta: f64, t_min: f64, right_margin: f64) -> Result<WSup> {
    let dx = traj.snapshots[0].dx;
    let k = eta_cells(eta, dx)? as isize;
    let mut out = WSup { eta, sup: 0.0, witness_t: f64::NAN, witness_x: f64::NAN };
    for s in traj.snapshots.iter().filter(|s| s.t >= t_min) {
        let keep = (s.len() as isize - (right_margin / s.dx).ceil() as isize - k.abs()).max(0);
        for i in 0..keep {
            let u = s.at(i);
            if u > U_FLOOR {
                let w = ((s.at(i + k) - u) / eta / u).abs();
                if w > out.sup {
                    out = WSup { eta, sup: w, witness_t: s.t, witness_x: s.x(i as usize) };
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub r: f64,
    pub x_window: f64,
    pub sup_deviation: f64,
    pub witness_t: f64,
    pub witness_x: f64,
    pub pass: bool,
}

/// `sup |u(t, x+X(t)) e^{rx} - 1|` over grid points with `x ≥ x_window`, up to the
/// window edge minus `margin`. `reference[k]` is `X` at snapshot `k`.
pub fn exact_decay_check(
    traj: &Trajectory,
    r: f64,
    x_window: f64,
    reference: &[f64],
    margin: f64,
    tol: f64,
) -> Result<DecayReport> {
    if reference.len() != traj.snapshots.len() {
        return Err(invalid("reference", "one location per snapshot"));
    }
    let mut out =
        DecayReport { r, x_window, sup_deviation: 0.0, witness_t: f64::NAN, witness_x: f64::NAN, pass: false };
    for (s, &xr) in traj.snapshots.iter().zip(reference) {
        let lo = xr + x_window;
        let hi = s.x_end() - margin;
        if lo > hi || lo < s.x0 {
            return Err(NflError::WindowExceedsGrid { lo, hi });
        }
        for i in 0..s.len() {
            let x = s.x(i);
            if x < lo || x > hi {
                continue;
            }
            let d = (s.values[i] * (r * (x - xr)).exp() - 1.0).abs();
            if d > out.sup_deviation {
                out.sup_deviation = d;
                out.witness_t = s.t;
                out.witness_x = x - xr;
            }
        }
    }
    out.pass = out.sup_deviation <= tol;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaRatio {
    pub r: f64,
    pub m: f64,
    pub gamma: f64,
    pub xs: Vec<f64>,
    pub deviation: Vec<f64>,
}

/// `Γ_r(x) = min(1, e^{-rx})`.
pub fn gamma_r(r: f64, x: f64) -> f64 {
    (-r * x).exp().min(1.0)
}

/// Deviation `|J*Γ_r/Γ_r - 1|` on `[0, x_max]`; `γ` is its value at `x_max` and `M` the
/// smallest sample beyond which it stays within 1.05 γ.
pub fn gamma_ratio(kernel: &Kernel, r: f64, x_max: f64) -> Result<GammaRatio> {
    if !(r > 0.0) || !(x_max > kernel.truncation_radius()) {
        return Err(invalid("x_max", "need r > 0 and x_max beyond the kernel support"));
    }
    let h = (kernel.width() / 20.0).min(x_max / 200.0);
    let n = (x_max / h).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (i as f64 * h).min(x_max)).collect();
    let deviation: Vec<f64> = xs
        .par_iter()
        .map(|&x| (kernel.convolve_fn(|y| gamma_r(r, y), x, &[0.0]) / gamma_r(r, x) - 1.0).abs())
        .collect();
    let gamma = deviation[n];
    let mut m = x_max;
    for i in (0..=n).rev() {
        if deviation[i] > 1.05 * gamma {
            break;
        }
        m = xs[i];
    }
    Ok(GammaRatio { r, m, gamma, xs, deviation })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerBound {
    pub l: f64,
    pub inf: f64,
    pub witness_t: f64,
    pub witness_x: f64,
    pub pass: bool,
}

/// `inf u` over `{x ≤ L + X(t)}` across snapshots, including the left tail.
pub fn lower_bound_left(traj: &Trajectory, l: f64, reference: &[f64]) -> Result<LowerBound> {
    if reference.len() != traj.snapshots.len() {
        return Err(invalid("reference", "one location per snapshot"));
    }
    let mut out = LowerBound { l, inf: f64::INFINITY, witness_t: f64::NAN, witness_x: f64::NAN, pass: false };
    for (s, &xr) in traj.snapshots.iter().zip(reference) {
        if s.u_left < out.inf {
            out = LowerBound { l, inf: s.u_left, witness_t: s.t, witness_x: f64::NEG_INFINITY, pass: false };
        }
        for i in 0..s.len() {
            let x = s.x(i);
            if x > l + xr {
                break;
            }
            if s.values[i] < out.inf {
                out = LowerBound { l, inf: s.values[i], witness_t: s.t, witness_x: x, pass: false };
            }
        }
    }
    out.pass = out.inf > 0.0;
    Ok(out)
}
