//! Sub/super-solution squeeze around an ignition wave:
//! `u^±(t,x) = φ(x - ct - ξ^±(t)) ± ε e^{-ωt} Γ_α(x - ct - ξ^±(t))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{poly_deriv, poly_eval, quintic_hermite};
use crate::error::{invalid, NflError, Result};
use crate::evolution::Trajectory;
use crate::kernel::{ConvWeights, FieldState, Kernel};
use crate::nonlinearity::{Clause, Family, Homogeneous};
use crate::waves::{derivative4, WaveProfile};

pub const RESIDUAL_TOL: f64 = 1e-6;
pub const SQUEEZE_TOL: f64 = 5e-6;
pub const CHECK_DT: f64 = 0.1;

/// `min(β̃, αc/4)`.
pub fn omega_cap(beta_tilde: f64, alpha: f64, c: f64) -> f64 {
    beta_tilde.min(0.25 * alpha * c)
}

/// `min((1-θ̃)/2, c/(4A))`.
pub fn eps_cap(theta_tilde: f64, c: f64, amp: f64) -> f64 {
    (0.5 * (1.0 - theta_tilde)).min(0.25 * c / amp)
}

/// Γ_α: 1 on `x ≤ -L₁-1`, `e^{-α(x-L₁)}` on `x ≥ L₁+1`, quintic in between.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Cutoff {
    pub alpha: f64,
    pub l1: f64,
    pub bridge: [f64; 6],
}

impl Cutoff {
    fn left(&self) -> f64 {
        -self.l1 - 1.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.left() {
            1.0
        } else if x >= self.l1 + 1.0 {
            (-self.alpha * (x - self.l1)).exp()
        } else {
            poly_eval(&self.bridge, x - self.left())
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.left() {
            0.0
        } else if x >= self.l1 + 1.0 {
            -self.alpha * (-self.alpha * (x - self.l1)).exp()
        } else {
            poly_deriv(&self.bridge, x - self.left())
        }
    }

    pub fn kinks(&self) -> [f64; 2] {
        [self.left(), self.l1 + 1.0]
    }
}

fn monotone(bridge: &[f64; 6], h: f64) -> bool {
    let steps = 2000;
    (0..=steps).all(|k| poly_deriv(bridge, h * k as f64 / steps as f64) <= 1e-14)
}

/// Value and slope match at both joins. The right-end curvature is free: the exponential's
/// own `α²e^{-α}` is used when that keeps the bridge monotone, otherwise the nearest
/// monotone choice on a scan.
pub fn build_cutoff(alpha: f64, l1: f64) -> Result<Cutoff> {
    if !(alpha > 0.0) || !(l1 >= 0.0) {
        return Err(invalid("alpha", "need alpha > 0 and L1 >= 0"));
    }
    let e = (-alpha).exp();
    let h = 2.0 * l1 + 2.0;
    let make = |dd1: f64| quintic_hermite(h, (1.0, 0.0, 0.0), (e, -alpha * e, dd1));
    let natural = alpha * alpha * e;
    let mut bridge = make(natural);
    if !monotone(&bridge, h) {
        let scale = 50.0 * alpha * e / h;
        let found = (0..=4000)
            .map(|k| natural + scale * (k as f64 / 2000.0 - 1.0))
            .filter(|&dd| monotone(&make(dd), h))
            .min_by(|a, b| (a - natural).abs().total_cmp(&(b - natural).abs()));
        match found {
            Some(dd) => bridge = make(dd),
            None => return Err(invalid("alpha", "no monotone quintic bridge")),
        }
    }
    Ok(Cutoff { alpha, l1, bridge })
}

/// Smallest scanned `x` from which `|J*Γ - e^{-α(x-L₁)}| ≤ (c/4) α e^{-α(x-L₁)}` holds
/// up to 20 kernel widths past the bridge.
pub fn cutoff_l2(kernel: &Kernel, g: &Cutoff, c: f64) -> Result<f64> {
    let h = kernel.width() / 20.0;
    let lo = g.left();
    let hi = g.l1 + 1.0 + 20.0 * kernel.width() + kernel.truncation_radius();
    let n = ((hi - lo) / h).ceil() as usize;
    let ok: Vec<bool> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = lo + i as f64 * h;
            let e = (-g.alpha * (x - g.l1)).exp();
            let jg = kernel.convolve_fn(|y| g.eval(y), x, &g.kinks());
            (jg - e).abs() <= 0.25 * c * g.alpha * e
        })
        .collect();
    match ok.iter().rposition(|&b| !b) {
        None => Ok(lo),
        Some(i) if i < n => Ok(lo + (i + 1) as f64 * h),
        Some(_) => Err(NflError::NoConvergence(format!("no L2 for alpha = {}", g.alpha))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub theta_i: f64,
    pub theta_tilde: f64,
    pub beta_tilde: f64,
    pub c: f64,
    pub l1: f64,
    pub alpha0: f64,
    pub alpha: f64,
    pub l2: f64,
    /// `L₂` at `α₀/4`.
    pub l2_quarter: f64,
    pub sup_fprime: f64,
    pub sup_phi_slope: f64,
    pub amp: f64,
    pub omega: f64,
    pub eps_cap: f64,
    pub conditions: Vec<Clause>,
}

impl SqueezeParams {
    pub fn all_conditions_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

fn ignition_parts(f: &Homogeneous) -> Result<f64> {
    match (f.family, f.reflected) {
        (Family::Ignition { theta, .. }, false) => Ok(theta),
        _ => Err(invalid("family", "squeeze needs an ignition nonlinearity")),
    }
}

/// The five selection inequalities, re-evaluated from the stored numbers.
pub fn check_conditions(p: &SqueezeParams) -> Vec<Clause> {
    let rel = 1e-12;
    let a_bound = -(1.0 + 2.0 * p.sup_fprime) / p.sup_phi_slope;
    vec![
        Clause {
            name: "eps_le_half_gap".into(),
            pass: p.eps_cap <= 0.5 * (1.0 - p.theta_tilde),
            value: p.eps_cap - 0.5 * (1.0 - p.theta_tilde),
        },
        Clause { name: "omega_le_beta".into(), pass: p.omega <= p.beta_tilde, value: p.omega - p.beta_tilde },
        Clause { name: "eps_le_c_over_a".into(), pass: p.eps_cap <= p.c / p.amp, value: p.eps_cap - p.c / p.amp },
        Clause { name: "amplitude".into(), pass: p.amp >= a_bound * (1.0 - rel), value: p.amp - a_bound },
        Clause {
            name: "omega_eps_rate".into(),
            pass: p.omega <= 0.25 * p.alpha * p.c && p.eps_cap <= 0.25 * p.c / p.amp,
            value: (p.omega - 0.25 * p.alpha * p.c).max(p.eps_cap - 0.25 * p.c / p.amp),
        },
    ]
}

/// Deterministic parameter pipeline for a converged ignition wave.
pub fn select_parameters(f: &Homogeneous, wave: &WaveProfile, kernel: &Kernel, alpha0: f64) -> Result<SqueezeParams> {
    let theta_i = ignition_parts(f)?;
    let c = wave.c;
    if !(c > 0.0) {
        return Err(invalid("wave", "ignition speed must be positive"));
    }
    if !(alpha0 > 0.0) {
        return Err(invalid("alpha0", "must be positive"));
    }
    let beta_tilde = 0.5 * f.fu_linear_ext(1.0).abs();
    let mut theta_tilde = 1.0;
    for k in 1..1000 {
        let u = 1.0 - k as f64 * 1e-3;
        if u <= theta_i || f.fu_linear_ext(u) > -beta_tilde {
            break;
        }
        theta_tilde = u;
    }
    let hi_level = 0.5 * (1.0 + theta_tilde);
    let lo_level = 0.5 * theta_i;
    let mut l1 = 0.0;
    while !(wave.eval(-l1) >= hi_level && wave.eval(l1) <= lo_level) {
        l1 += 0.01;
        if l1 > wave.phi.x_end() {
            return Err(NflError::NoConvergence("no L1 within the wave window".into()));
        }
    }
    let alpha = 0.5 * alpha0;
    let g = build_cutoff(alpha, l1)?;
    let l2 = cutoff_l2(kernel, &g, c)?;
    let l2_quarter = cutoff_l2(kernel, &build_cutoff(0.25 * alpha0, l1)?, c)?;
    let sup_fprime = (0..=20_000).map(|k| f.fu_linear_ext(k as f64 * 1e-4).abs()).fold(0.0, f64::max);
    let d = derivative4(&wave.phi);
    let (a, b) = (-l1 - 1.0, l2);
    let mut sup_phi_slope = wave.eval_derivative(a).max(wave.eval_derivative(b));
    for (i, &di) in d.iter().enumerate() {
        let x = wave.phi.x(i);
        if x >= a && x <= b {
            sup_phi_slope = sup_phi_slope.max(di);
        }
    }
    if !(sup_phi_slope < 0.0) {
        return Err(NflError::ProfileSlopeDegenerate { sup_slope: sup_phi_slope });
    }
    let amp = -(1.0 + 2.0 * sup_fprime) / sup_phi_slope;
    let omega = omega_cap(beta_tilde, alpha, c);
    let eps = eps_cap(theta_tilde, c, amp);
    let mut p = SqueezeParams {
        theta_i,
        theta_tilde,
        beta_tilde,
        c,
        l1,
        alpha0,
        alpha,
        l2,
        l2_quarter,
        sup_fprime,
        sup_phi_slope,
        amp,
        omega,
        eps_cap: eps,
        conditions: Vec::new(),
    };
    p.conditions = check_conditions(&p);
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct Squeeze {
    pub wave: WaveProfile,
    pub cutoff: Cutoff,
    pub c: f64,
    pub amp: f64,
    pub omega: f64,
    pub eps: f64,
    pub xi_minus: f64,
    pub xi_plus: f64,
}

impl Squeeze {
    pub fn tau(&self, t: f64) -> f64 {
        self.eps * (-self.omega * t).exp()
    }

    /// `ξ^±(t) = ξ^± ± (Aε/ω)(1 - e^{-ωt})`.
    pub fn xi(&self, t: f64, sign: f64) -> f64 {
        let base = if sign > 0.0 { self.xi_plus } else { self.xi_minus };
        base + sign * self.amp * self.eps / self.omega * (1.0 - (-self.omega * t).exp())
    }

    fn eval(&self, t: f64, x: f64, sign: f64) -> f64 {
        let z = x - self.c * t - self.xi(t, sign);
        self.wave.eval(z) + sign * self.tau(t) * self.cutoff.eval(z)
    }

    pub fn u_minus(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x, -1.0)
    }

    pub fn u_plus(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x, 1.0)
    }

    /// Same construction with a different decay rate (used to probe the ω condition).
    pub fn with_omega(&self, omega: f64) -> Self {
        Squeeze { omega, ..self.clone() }
    }
}

pub fn build_squeeze(
    params: &SqueezeParams,
    wave: &WaveProfile,
    eps: f64,
    xi_minus: f64,
    xi_plus: f64,
) -> Result<Squeeze> {
    if !(eps >= 0.0 && eps <= params.eps_cap) {
        return Err(NflError::EpsilonExceedsCap { eps, cap: params.eps_cap });
    }
    Ok(Squeeze {
        wave: wave.clone(),
        cutoff: build_cutoff(params.alpha, params.l1)?,
        c: params.c,
        amp: params.amp,
        omega: params.omega,
        eps,
        xi_minus,
        xi_plus,
    })
}

/// Moving-frame lattice `z` (the wave grid) with `J*φ` and `J*Γ` precomputed.
pub struct ResidualLattice {
    z: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    jphi: Vec<f64>,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
    jgamma: Vec<f64>,
    l1: f64,
    l2: f64,
}

impl ResidualLattice {
    pub fn new(sq: &Squeeze, kernel: &Kernel, l2: f64) -> Result<Self> {
        let p: &FieldState = &sq.wave.phi;
        let w = ConvWeights::new(kernel, p.dx)?;
        let jphi_all = w.apply(p);
        let dphi_all = derivative4(p);
        let margin = w.kmax;
        let idx: Vec<usize> = (margin..p.len().saturating_sub(margin)).collect();
        let z: Vec<f64> = idx.iter().map(|&i| p.x(i)).collect();
        let g = sq.cutoff;
        let jgamma: Vec<f64> = z.par_iter().map(|&x| kernel.convolve_fn(|y| g.eval(y), x, &g.kinks())).collect();
        Ok(ResidualLattice {
            phi: idx.iter().map(|&i| p.values[i]).collect(),
            dphi: idx.iter().map(|&i| dphi_all[i]).collect(),
            jphi: idx.iter().map(|&i| jphi_all[i]).collect(),
            gamma: z.iter().map(|&x| g.eval(x)).collect(),
            dgamma: z.iter().map(|&x| g.derivative(x)).collect(),
            jgamma,
            z,
            l1: g.l1,
            l2,
        })
    }

    fn case(&self, z: f64) -> usize {
        if z <= -self.l1 - 1.0 {
            0
        } else if z >= self.l2 {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    /// +1 for the super-solution check, -1 for the sub-solution check.
    pub sign: f64,
    /// Sub: max residual. Super: min residual.
    pub extreme: f64,
    pub witness_t: f64,
    pub witness_z: f64,
    /// Extreme per region: behind, middle, ahead.
    pub per_case: [f64; 3],
    pub pass: bool,
}

/// Residual `u_t - (J*u - u) - f(u)` of `u^±` in the moving variable `z` at amplitude τ.
fn residual_at(sq: &Squeeze, lat: &ResidualLattice, f: &Homogeneous, i: usize, tau: f64, sign: f64) -> f64 {
    let (phi, dphi, g, dg) = (lat.phi[i], lat.dphi[i], lat.gamma[i], lat.dgamma[i]);
    let u = phi + sign * tau * g;
    let xi_dot = sign * sq.amp * tau;
    let ut = (dphi + sign * tau * dg) * (-sq.c - xi_dot) - sign * sq.omega * tau * g;
    let ju = lat.jphi[i] + sign * tau * lat.jgamma[i];
    ut - (ju - u) - f.f_linear_ext(u)
}

fn scan(
    sq: &Squeeze,
    lat: &ResidualLattice,
    f: &Homogeneous,
    horizon: f64,
    dt: f64,
    sign: f64,
) -> (ResidualReport, Vec<(f64, f64, f64)>) {
    let steps = (horizon / dt).round() as usize;
    let rows: Vec<Vec<(f64, f64, f64)>> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * dt;
            let tau = sq.tau(t);
            (0..lat.z.len()).map(|i| (t, lat.z[i], residual_at(sq, lat, f, i, tau, sign))).collect()
        })
        .collect();
    // sub-solutions want residual ≤ 0, super-solutions ≥ 0; track the worst side
    let worse = |a: f64, b: f64| if sign < 0.0 { a > b } else { a < b };
    let init = if sign < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut rep = ResidualReport {
        sign,
        extreme: init,
        witness_t: f64::NAN,
        witness_z: f64::NAN,
        per_case: [init; 3],
        pass: false,
    };
    for row in &rows {
        for &(t, z, r) in row {
            let c = lat.case(z);
            if worse(r, rep.per_case[c]) {
                rep.per_case[c] = r;
            }
            if worse(r, rep.extreme) {
                rep.extreme = r;
                rep.witness_t = t;
                rep.witness_z = z;
            }
        }
    }
    rep.pass = if sign < 0.0 { rep.extreme <= RESIDUAL_TOL } else { rep.extreme >= -RESIDUAL_TOL };
    (rep, rows.into_iter().flatten().collect())
}

/// Max residual of `u^-` over `t ∈ [0, horizon]` (step `dt`) and the wave lattice.
pub fn verify_subsolution(
    sq: &Squeeze,
    lat: &ResidualLattice,
    f: &Homogeneous,
    horizon: f64,
    dt: f64,
) -> ResidualReport {
    scan(sq, lat, f, horizon, dt, -1.0).0
}

/// Min residual of `u^+`.
pub fn verify_supersolution(
    sq: &Squeeze,
    lat: &ResidualLattice,
    f: &Homogeneous,
    horizon: f64,
    dt: f64,
) -> ResidualReport {
    scan(sq, lat, f, horizon, dt, 1.0).0
}

/// Rows `t,x,residual` with `x` the moving-frame coordinate.
pub fn residual_csv(sq: &Squeeze, lat: &ResidualLattice, f: &Homogeneous, horizon: f64, dt: f64, sign: f64) -> String {
    let (_, rows) = scan(sq, lat, f, horizon, dt, sign);
    let mut out = String::from("t,x,residual\n");
    for (t, z, r) in rows {
        out.push_str(&format!("{t:e},{z:e},{r:e}\n"));
    }
    out
}

/// Smallest `x₀` with `u₀ ≤ e^{-α₀(x - x₀)}` on the grid; an argmax at the right edge
/// means the tail decays too slowly to certify.
pub fn decay_cap(u0: &FieldState, alpha0: f64) -> Result<f64> {
    if u0.u_right != 0.0 {
        return Err(NflError::InitialSandwichViolated("right tail must vanish".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &u) in u0.values.iter().enumerate() {
        if u > 0.0 {
            let v = u0.x(i) + u.ln() / alpha0;
            if v > best.0 {
                best = (v, i);
            }
        }
    }
    let n = u0.len();
    if best.1 + 10 >= n {
        return Err(NflError::InitialSandwichViolated(format!(
            "initial data decays slower than exp(-{alpha0} x) up to the window edge"
        )));
    }
    Ok(best.0)
}

fn bisect<P: Fn(f64) -> bool>(ok: P, mut bad: f64, mut good: f64) -> f64 {
    for _ in 0..200 {
        if (good - bad).abs() < 1e-10 {
            break;
        }
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Tightest `(ξ^-, ξ^+)` with `u^-(0,·) ≤ u₀ ≤ u^+(0,·)` on the grid.
pub fn sandwich_shifts(
    wave: &WaveProfile,
    cutoff: &Cutoff,
    eps: f64,
    u0: &FieldState,
    alpha0: f64,
) -> Result<(f64, f64)> {
    decay_cap(u0, alpha0)?;
    let xs = u0.xs();
    let above = |xi: f64| xs.iter().zip(&u0.values).all(|(&x, &u)| wave.eval(x - xi) + eps * cutoff.eval(x - xi) >= u);
    let below = |xi: f64| xs.iter().zip(&u0.values).all(|(&x, &u)| wave.eval(x - xi) - eps * cutoff.eval(x - xi) <= u);
    let span = u0.x_end() - u0.x0 + wave.phi.x_end() - wave.phi.x0;
    let mut hi = 1.0;
    while !above(hi) {
        hi *= 2.0;
        if hi > 4.0 * span {
            return Err(NflError::InitialSandwichViolated("no upper shift found".into()));
        }
    }
    let mut lo = -1.0;
    while !below(lo) {
        lo *= 2.0;
        if lo < -4.0 * span {
            return Err(NflError::InitialSandwichViolated("no lower shift found".into()));
        }
    }
    let xi_plus = bisect(above, lo.min(hi) - span, hi);
    let xi_minus = bisect(below, hi.max(lo) + span, lo);
    Ok((xi_minus, xi_plus))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub below_violation: f64,
    pub above_violation: f64,
    pub witness_t: f64,
    pub witness_x: f64,
    pub snapshots: usize,
    pub pass: bool,
}

/// `max(u^- - u)` and `max(u - u^+)` over the trajectory samples.
pub fn verify_squeeze(traj: &Trajectory, sq: &Squeeze) -> Result<SqueezeReport> {
    let s0 = &traj.snapshots[0];
    let t0 = s0.t;
    let worst0 = (0..s0.len())
        .map(|i| (sq.u_minus(0.0, s0.x(i)) - s0.values[i]).max(s0.values[i] - sq.u_plus(0.0, s0.x(i))))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst0 > 1e-12 {
        return Err(NflError::InitialSandwichViolated(format!("initial violation {worst0:e}")));
    }
    let per: Vec<(f64, f64, f64)> = traj
        .snapshots
        .par_iter()
        .map(|s| {
            let t = s.t - t0;
            let (mut lo, mut hi, mut wx) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NAN);
            for i in 0..s.len() {
                let x = s.x(i);
                let a = sq.u_minus(t, x) - s.values[i];
                let b = s.values[i] - sq.u_plus(t, x);
                if a > lo {
                    lo = a;
                    if a >= hi {
                        wx = x;
                    }
                }
                if b > hi {
                    hi = b;
                    if b >= lo {
                        wx = x;
                    }
                }
            }
            (lo, hi, wx)
        })
        .collect();
    let mut rep = SqueezeReport {
        below_violation: f64::NEG_INFINITY,
        above_violation: f64::NEG_INFINITY,
        witness_t: f64::NAN,
        witness_x: f64::NAN,
        snapshots: traj.snapshots.len(),
        pass: false,
    };
    for (s, &(lo, hi, wx)) in traj.snapshots.iter().zip(&per) {
        if lo.max(hi) > rep.below_violation.max(rep.above_violation) {
            rep.witness_t = s.t;
            rep.witness_x = wx;
        }
        rep.below_violation = rep.below_violation.max(lo);
        rep.above_violation = rep.above_violation.max(hi);
    }
    rep.pass = rep.below_violation <= SQUEEZE_TOL && rep.above_violation <= SQUEEZE_TOL;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps() {
        assert_eq!(omega_cap(0.3, 0.5, 1.0), 0.125);
        assert!((eps_cap(0.8, 10.0, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cutoff_pieces_and_monotone() {
        let (alpha, l1) = (0.15, 3.0);
        let g = build_cutoff(alpha, l1).unwrap();
        assert_eq!(g.eval(-l1 - 2.0), 1.0);
        assert_eq!(g.eval(l1 + 2.0), (-2.0 * alpha).exp());
        let mut prev = g.eval(-l1 - 1.0);
        let mut x = -l1 - 1.0;
        while x < l1 + 1.0 {
            x += 0.01;
            let v = g.eval(x);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        // C¹ at both joins
        for &k in &g.kinks() {
            assert!((g.eval(k - 1e-9) - g.eval(k + 1e-9)).abs() < 1e-8);
            assert!((g.derivative(k - 1e-12) - g.derivative(k + 1e-12)).abs() < 1e-9);
        }
    }

    #[test]
    fn slow_tail_fails_decay_cap() {
        let alpha0 = 0.3;
        let u0 = FieldState::from_fn(-10.0, 0.1, 401, 1.0, 0.0, |x| (-alpha0 * x / 4.0).exp().min(1.0)).unwrap();
        assert!(matches!(decay_cap(&u0, alpha0), Err(NflError::InitialSandwichViolated(_))));
        let ok = FieldState::from_fn(-10.0, 0.1, 401, 1.0, 0.0, |x| (-x).exp().min(1.0)).unwrap();
        assert!(decay_cap(&ok, alpha0).is_ok());
    }

    #[test]
    fn bisect_finds_threshold() {
        let x = bisect(|v| v >= 0.3, -5.0, 5.0);
        assert!((x - 0.3).abs() < 1e-9 && x >= 0.3);
    }
}
