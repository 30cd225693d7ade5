//! Traveling waves `J*φ - φ + cφ' + f(φ) = 0` and the KPP speed relation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::evolution::{self, EvolveOptions, Grid, Profile};
use crate::fronts;
use crate::kernel::{ConvWeights, FieldState, Kernel};
use crate::nonlinearity::{Family, Homogeneous, Nonlinearity};

pub const RESIDUAL_TOL: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct WaveProfile {
    pub c: f64,
    /// Samples with tails 1 (left) and 0 (right); the grid origin puts `φ(0) = level`.
    pub phi: FieldState,
    pub family: String,
    pub level: f64,
    pub decay_rate: f64,
    pub residual: f64,
}

impl WaveProfile {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# c={:e}\n# family={}\nx,phi\n", self.c, self.family);
        for (i, v) in self.phi.values.iter().enumerate() {
            out.push_str(&format!("{:e},{:e}\n", self.phi.x(i), v));
        }
        out
    }

    /// Cubic Hermite interpolation using the fourth-order slopes.
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.phi;
        let s = (x - p.x0) / p.dx;
        let n = p.len() as isize;
        if s < 0.0 {
            return if s < -2.0 { p.u_left } else { p.interp(x) };
        }
        let i = s.floor() as isize;
        if i >= n - 1 {
            return if i > n { p.u_right } else { p.interp(x) };
        }
        let w = s - i as f64;
        let (a, b) = (p.at(i), p.at(i + 1));
        let (da, db) = (d4_at(p, i) * p.dx, d4_at(p, i + 1) * p.dx);
        let w2 = w * w;
        let w3 = w2 * w;
        (2.0 * w3 - 3.0 * w2 + 1.0) * a + (w3 - 2.0 * w2 + w) * da + (-2.0 * w3 + 3.0 * w2) * b + (w3 - w2) * db
    }

    /// `φ'` by interpolating the fourth-order stencil values.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let p = &self.phi;
        let s = (x - p.x0) / p.dx;
        let i = s.floor() as isize;
        let w = s - i as f64;
        d4_at(p, i) * (1.0 - w) + d4_at(p, i + 1) * w
    }
}

/// Fourth-order centered first derivative with tail extension.
pub fn d4_at(p: &FieldState, i: isize) -> f64 {
    (p.at(i - 2) - 8.0 * p.at(i - 1) + 8.0 * p.at(i + 1) - p.at(i + 2)) / (12.0 * p.dx)
}

pub fn derivative4(p: &FieldState) -> Vec<f64> {
    (0..p.len() as isize).map(|i| d4_at(p, i)).collect()
}

fn homogeneous_of(nl: &Homogeneous) -> Nonlinearity {
    Nonlinearity::Homogeneous(*nl)
}

/// Pointwise `J*φ - φ + cφ' + f(φ)`.
pub fn wave_residual_field(phi: &FieldState, c: f64, nl: &Homogeneous, w: &ConvWeights) -> Vec<f64> {
    let conv = w.apply(phi);
    (0..phi.len())
        .into_par_iter()
        .map(|i| {
            let u = phi.values[i];
            conv[i] - u + c * d4_at(phi, i as isize) + nl.f_ext(u)
        })
        .collect()
}

/// Sup norm of the profile equation on the grid.
pub fn wave_residual(profile: &WaveProfile, nl: &Homogeneous, kernel: &Kernel) -> Result<f64> {
    let w = ConvWeights::new(kernel, profile.phi.dx)?;
    Ok(wave_residual_field(&profile.phi, profile.c, nl, &w).iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WaveOptions {
    pub dx: f64,
    pub half_width: f64,
    /// Lab-frame relaxation time before the moving-frame polish.
    pub relax_time: f64,
    pub relax_dt: f64,
    /// Pseudo-time budget for the polish.
    pub max_polish_time: f64,
    /// Stop the polish once the residual falls below this.
    pub target_residual: f64,
}

impl WaveOptions {
    pub fn for_kernel(kernel: &Kernel) -> Self {
        WaveOptions {
            dx: kernel.width() / 10.0,
            half_width: 40.0 * kernel.width(),
            relax_time: 40.0,
            relax_dt: 0.1,
            max_polish_time: 4000.0,
            target_residual: 1e-10,
        }
    }
}

pub fn least_squares_slope(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in t.iter().zip(x) {
        num += (a - mt) * (b - mx);
        den += (a - mt) * (a - mt);
    }
    num / den
}

/// Slope of `X_{1/2}^+` over the second half of a trajectory.
pub fn trajectory_speed(traj: &evolution::Trajectory, level: f64) -> Result<f64> {
    let trace = fronts::FrontTrace::from_trajectory(traj, &[level], level);
    let n = trace.times.len();
    let (t, x): (Vec<f64>, Vec<f64>) = trace.times[n / 2..]
        .iter()
        .zip(&trace.reference[n / 2..])
        .filter(|(_, x)| x.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    if t.len() < 2 {
        return Err(NflError::NoConvergence("front left the window".into()));
    }
    Ok(least_squares_slope(&t, &x))
}

/// Moving-frame relaxation `φ_t = J*φ - φ + cφ' + f(φ)` with c fixed by `Σ φ_t = 0`.
fn polish(phi0: FieldState, nl: &Homogeneous, w: &ConvWeights, opts: &WaveOptions) -> (FieldState, f64, f64) {
    let gen = |p: &FieldState| -> (Vec<f64>, f64) {
        let conv = w.apply(p);
        let d: Vec<f64> = derivative4(p);
        let base: Vec<f64> = (0..p.len()).map(|i| conv[i] - p.values[i] + nl.f_ext(p.values[i])).collect();
        let sd: f64 = d.iter().sum();
        let c = if sd != 0.0 { -base.iter().sum::<f64>() / sd } else { 0.0 };
        (base.iter().zip(&d).map(|(b, dd)| b + c * dd).collect(), c)
    };
    let mut p = phi0;
    let (mut g, mut c) = gen(&p);
    let mut res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut t = 0.0;
    let mut best = res;
    let mut since_best = 0.0;
    while t < opts.max_polish_time && res > opts.target_residual {
        let dt = (2.0 / (1.4 * c.abs() / p.dx + 3.0)).min(0.2);
        let stage = |p: &FieldState, k: &[f64], h: f64| FieldState {
            values: p.values.iter().zip(k).map(|(u, d)| u + h * d).collect(),
            ..p.clone()
        };
        let k1 = g;
        let (k2, _) = gen(&stage(&p, &k1, 0.5 * dt));
        let (k3, _) = gen(&stage(&p, &k2, 0.5 * dt));
        let (k4, _) = gen(&stage(&p, &k3, dt));
        for i in 0..p.len() {
            p.values[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        let r = gen(&p);
        g = r.0;
        c = r.1;
        res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res < 0.99 * best {
            best = res;
            since_best = 0.0;
        } else {
            since_best += dt;
            if since_best > 500.0 {
                break;
            }
        }
    }
    (p, c, res)
}

/// Rate `r` in `φ ≈ A e^{-rx}` fitted on samples with `lo ≤ φ ≤ hi`.
pub fn tail_decay_rate(p: &FieldState, lo: f64, hi: f64, x_max: f64) -> f64 {
    let (xs, ls): (Vec<f64>, Vec<f64>) = (0..p.len())
        .filter(|&i| p.values[i] >= lo && p.values[i] <= hi && p.x(i) <= x_max)
        .map(|i| (p.x(i), p.values[i].ln()))
        .unzip();
    if xs.len() < 3 {
        return f64::NAN;
    }
    -least_squares_slope(&xs, &ls)
}

fn normalize(mut phi: FieldState, level: f64) -> Result<FieldState> {
    let (_, xp) = fronts::interface_locations(&phi, level)?;
    phi.x0 -= xp;
    phi.t = 0.0;
    Ok(phi)
}

/// Bistable or ignition wave by relaxation plus moving-frame polish.
pub fn solve_wave(nl: &Homogeneous, kernel: &Kernel, opts: &WaveOptions) -> Result<WaveProfile> {
    if matches!(nl.family, Family::Kpp { .. }) {
        return Err(invalid("family", "KPP waves are not unique; use solve_wave_kpp"));
    }
    let w = ConvWeights::new(kernel, opts.dx)?;
    let grid = Grid::centered(opts.half_width, opts.dx);
    let init = evolution::make_initial(Profile::SmoothedStep { center: 0.0, width: kernel.width() }, grid)?;
    let full = homogeneous_of(nl);
    let traj = evolution::evolve(
        &init,
        opts.relax_time,
        opts.relax_dt,
        &full,
        kernel,
        EvolveOptions { recenter: Some(0.5), save_every: 1 },
    )?;
    let c_lab = trajectory_speed(&traj, 0.5)?;
    // center the front in the window before polishing
    let last = traj.last().clone();
    let (_, xp) = fronts::interface_locations(&last, 0.5)?;
    let center = last.x0 + 0.5 * (last.len() - 1) as f64 * last.dx;
    let cells = ((xp - center) / last.dx).round() as i64;
    let start = evolution::shift_window(&last, cells);
    let (phi, c, res) = polish(start, nl, &w, opts);
    if !(res <= RESIDUAL_TOL) {
        return Err(NflError::NoConvergence(format!(
            "wave residual {res:e} after polish (lab-frame speed {c_lab:.6})"
        )));
    }
    let level = nl.threshold();
    let phi = normalize(phi, level)?;
    let decay_rate = tail_decay_rate(&phi, 1e-10, 1e-4, phi.x_end() - 5.0 * kernel.width());
    Ok(WaveProfile { c, phi, family: nl.tag().to_string(), level, decay_rate, residual: res })
}

/// `(∫J e^{ry} - 1 + f0) / r`.
pub fn kpp_speed(kernel: &Kernel, f0: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("decay rate must be positive, got {r}")));
    }
    Ok((kernel.exp_moment(r)? - 1.0 + f0) / r)
}

/// Golden-section minimum of a unimodal function on [a, b].
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `(r*, c*)` minimizing `c_r`.
pub fn kpp_min_speed(kernel: &Kernel, f0: f64) -> Result<(f64, f64)> {
    let c = |r: f64| kpp_speed(kernel, f0, r).unwrap_or(f64::INFINITY);
    let mut hi = 1.0 / kernel.width();
    while c(2.0 * hi) < c(hi) {
        hi *= 2.0;
    }
    let r = golden_section(c, 1e-3, 2.0 * hi, 1e-10);
    Ok((r, kpp_speed(kernel, f0, r)?))
}

#[derive(Clone, Debug)]
pub struct KppRun {
    pub speed: f64,
    pub decay_rate: f64,
    pub traj: evolution::Trajectory,
}

/// Lab-frame KPP run from `min(1, e^{-rx})` on a fixed window wide enough for the travel.
pub fn simulate_kpp_front(kernel: &Kernel, f0: f64, r: f64, t_end: f64, dx: f64) -> Result<KppRun> {
    let c_guess = kpp_speed(kernel, f0, r)?.max(kpp_min_speed(kernel, f0)?.1);
    let w = kernel.width();
    let left = -20.0 * w;
    let right = c_guess * t_end + 60.0 * w;
    let n = ((right - left) / dx).round() as usize + 1;
    let init = evolution::make_initial(Profile::ExpFront { r, h: 0.0 }, Grid { x0: left, dx, n })?;
    let nl: Nonlinearity = Homogeneous::kpp(f0)?.into();
    let save_every = (0.5 / 0.05f64).round() as usize;
    let traj = evolution::evolve(&init, t_end, 0.05, &nl, kernel, EvolveOptions { recenter: None, save_every })?;
    let speed = trajectory_speed(&traj, 0.5)?;
    let last = traj.last();
    let (_, xp) = fronts::interface_locations(last, 0.5)?;
    let decay_rate = tail_decay_rate(last, 1e-9, 1e-3, xp + 40.0 * w);
    Ok(KppRun { speed, decay_rate, traj })
}

/// KPP wave with decay rate `r` from exponential initial data.
pub fn solve_wave_kpp(nl: &Homogeneous, kernel: &Kernel, r: f64, t_end: f64, dx: f64) -> Result<WaveProfile> {
    let f0 = match (nl.family, nl.reflected) {
        (Family::Kpp { f0 }, false) => f0,
        _ => return Err(invalid("family", "solve_wave_kpp needs the KPP family")),
    };
    let run = simulate_kpp_front(kernel, f0, r, t_end, dx)?;
    if !((run.decay_rate - r).abs() <= 0.05 * r) {
        return Err(NflError::DecayMismatch { measured: run.decay_rate, expected: r });
    }
    let c_r = kpp_speed(kernel, f0, r)?;
    if !((run.speed - c_r).abs() <= 0.05 * c_r) {
        return Err(NflError::NoConvergence(format!("speed {} vs c_r {}", run.speed, c_r)));
    }
    let phi = normalize(run.traj.last().clone(), 0.5)?;
    let w = ConvWeights::new(kernel, dx)?;
    let res = wave_residual_field(&phi, run.speed, nl, &w).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(WaveProfile {
        c: run.speed,
        phi,
        family: nl.tag().to_string(),
        level: 0.5,
        decay_rate: run.decay_rate,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kpp_speed_formula() {
        let k = Kernel::gaussian(1.0).unwrap();
        assert!((kpp_speed(&k, 1.0, 1.0).unwrap() - 0.5f64.exp()).abs() < 1e-12);
        assert!(kpp_speed(&k, 1.0, 0.0).is_err());
        assert!(kpp_speed(&k, 1.0, -1.0).is_err());
        let small = kpp_speed(&k, 1.0, 1e-4).unwrap();
        assert!((small * 1e-4 - 1.0).abs() < 1e-3);
        let (r, c) = kpp_min_speed(&k, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-6 && (c - 0.5f64.exp()).abs() < 1e-10);
        let b = Kernel::bump(1.0).unwrap();
        let v = kpp_speed(&b, 1.0, 0.5).unwrap();
        assert!((v - b.exp_moment(0.5).unwrap() / 0.5).abs() < 1e-14);
    }

    #[test]
    fn convexity_of_dispersion() {
        let k = Kernel::gaussian(1.0).unwrap();
        let rs: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
        let cs: Vec<f64> = rs.iter().map(|&r| kpp_speed(&k, 1.0, r).unwrap()).collect();
        for w in cs.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= 0.0);
        }
    }

    #[test]
    fn constant_profile_residual() {
        let k = Kernel::gaussian(1.0).unwrap();
        let phi = FieldState::constant(-5.0, 0.1, 101, 1.0).unwrap();
        let wp =
            WaveProfile { c: 3.0, phi, family: "bistable".into(), level: 0.25, decay_rate: f64::NAN, residual: 0.0 };
        let nl = Homogeneous::bistable(0.25).unwrap();
        assert!(wave_residual(&wp, &nl, &k).unwrap() < 1e-14);
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
