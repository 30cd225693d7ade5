//! Method-of-lines RK4 for `u_t = J*u - u + f(t,x,u)` on a recentering window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::fronts;
use crate::kernel::{ConvWeights, FieldState, Kernel};
use crate::nonlinearity::{Nonlinearity, OVERSHOOT_TOL};

pub const MAX_DT: f64 = 0.25;

/// Precomputed convolution weights plus the reaction term.
pub struct Integrator<'a> {
    pub nl: &'a Nonlinearity,
    pub weights: ConvWeights,
}

impl<'a> Integrator<'a> {
    pub fn new(nl: &'a Nonlinearity, kernel: &Kernel, dx: f64) -> Result<Self> {
        Ok(Integrator { nl, weights: ConvWeights::new(kernel, dx)? })
    }

    /// Right-hand side on the grid and for both tails.
    pub fn rhs(&self, t: f64, s: &FieldState) -> (Vec<f64>, f64, f64) {
        let conv = self.weights.apply(s);
        let nl = self.nl;
        let body = conv
            .par_iter()
            .zip(s.values.par_iter())
            .enumerate()
            .map(|(i, (&c, &u))| c - u + nl.f_ext(t, s.x(i), u))
            .collect();
        let dl = nl.f_ext(t, s.x0, s.u_left);
        let dr = nl.f_ext(t, s.x_end(), s.u_right);
        (body, dl, dr)
    }

    fn stage(s: &FieldState, k: &(Vec<f64>, f64, f64), h: f64) -> FieldState {
        FieldState {
            values: s.values.iter().zip(&k.0).map(|(u, d)| u + h * d).collect(),
            u_left: s.u_left + h * k.1,
            u_right: s.u_right + h * k.2,
            ..s.clone()
        }
    }

    pub fn step(&self, s: &FieldState, dt: f64) -> Result<FieldState> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(invalid("dt", format!("need 0 < dt <= {MAX_DT}, got {dt}")));
        }
        let t = s.t;
        let k1 = self.rhs(t, s);
        let k2 = self.rhs(t + 0.5 * dt, &Self::stage(s, &k1, 0.5 * dt));
        let k3 = self.rhs(t + 0.5 * dt, &Self::stage(s, &k2, 0.5 * dt));
        let k4 = self.rhs(t + dt, &Self::stage(s, &k3, dt));
        let comb = |u: f64, a: f64, b: f64, c: f64, d: f64| u + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        let mut values: Vec<f64> =
            (0..s.len()).into_par_iter().map(|i| comb(s.values[i], k1.0[i], k2.0[i], k3.0[i], k4.0[i])).collect();
        let mut u_left = comb(s.u_left, k1.1, k2.1, k3.1, k4.1);
        let mut u_right = comb(s.u_right, k1.2, k2.2, k3.2, k4.2);
        for (i, u) in values.iter_mut().enumerate() {
            *u = clamp(*u, i)?;
        }
        u_left = clamp(u_left, usize::MAX)?;
        u_right = clamp(u_right, usize::MAX)?;
        Ok(FieldState { values, u_left, u_right, t: t + dt, ..s.clone() })
    }
}

fn clamp(u: f64, index: usize) -> Result<f64> {
    if (0.0..=1.0).contains(&u) {
        Ok(u)
    } else {
        let over = if u < 0.0 { -u } else { u - 1.0 };
        if over < OVERSHOOT_TOL {
            Ok(u.clamp(0.0, 1.0))
        } else {
            Err(NflError::OvershootExceeded { overshoot: if u.is_nan() { f64::INFINITY } else { over }, index })
        }
    }
}

/// One classical RK4 step.
pub fn step(state: &FieldState, dt: f64, nl: &Nonlinearity, kernel: &Kernel) -> Result<FieldState> {
    Integrator::new(nl, kernel, state.dx)?.step(state, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub t: f64,
    /// Cells moved in this shift (positive = window moved right).
    pub cells: i64,
    /// Cumulative offset after the shift.
    pub total: i64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub dt: f64,
    pub order: u32,
    pub shifts: Vec<Shift>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    /// Time spacing between stored snapshots.
    pub fn sample_dt(&self) -> f64 {
        if self.snapshots.len() < 2 {
            self.dt
        } else {
            self.snapshots[1].t - self.snapshots[0].t
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Recenter on `X_λ^+` for this level; `None` keeps the window fixed.
    pub recenter: Option<f64>,
    /// Store every n-th step (the final state is always stored).
    pub save_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { recenter: Some(0.5), save_every: 1 }
    }
}

pub fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(invalid("dt", format!("need 0 < dt <= {MAX_DT}, got {dt}")));
    }
    let span = t_end - t0;
    if span < 0.0 {
        return Err(invalid("t_end", "must not precede the initial time"));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(invalid("t_end", format!("span {span} is not a multiple of dt={dt}")));
    }
    Ok(n as usize)
}

pub fn evolve(
    state: &FieldState,
    t_end: f64,
    dt: f64,
    nl: &Nonlinearity,
    kernel: &Kernel,
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let steps = step_count(state.t, t_end, dt)?;
    let integ = Integrator::new(nl, kernel, state.dx)?;
    let save_every = opts.save_every.max(1);
    let origin = state.x0;
    let t0 = state.t;
    let mut offset: i64 = 0;
    let mut cur = state.clone();
    let mut snapshots = vec![cur.clone()];
    let mut shifts = Vec::new();
    let half = 0.5 * (cur.len() - 1) as f64 * cur.dx;
    for k in 1..=steps {
        cur = integ.step(&cur, dt)?;
        cur.t = t0 + k as f64 * dt;
        if let Some(level) = opts.recenter {
            if let Ok((_, xp)) = fronts::interface_locations(&cur, level) {
                let center = cur.x0 + half;
                if (xp - center).abs() > 0.25 * half {
                    let cells = ((xp - center) / cur.dx).round() as i64;
                    cur = shift_window(&cur, cells);
                    offset += cells;
                    cur.x0 = origin + offset as f64 * cur.dx;
                    shifts.push(Shift { t: cur.t, cells, total: offset });
                }
            }
        }
        if k % save_every == 0 || k == steps {
            snapshots.push(cur.clone());
        }
    }
    Ok(Trajectory { snapshots, dt, order: 4, shifts })
}

/// Moves the window by `cells`; entrant cells take the nearer tail constant.
pub fn shift_window(s: &FieldState, cells: i64) -> FieldState {
    let values = (0..s.len()).map(|i| s.at(i as isize + cells as isize)).collect();
    FieldState { values, x0: s.x0 + cells as f64 * s.dx, ..s.clone() }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_difference: f64,
    pub witness_t: f64,
    pub witness_x: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const COMPARISON_TOL: f64 = 5e-7;

/// Evolves ordered data `u0 ≤ v0` and reports `max (u - v)`.
pub fn check_comparison(
    u0: &FieldState,
    v0: &FieldState,
    t_end: f64,
    dt: f64,
    nl: &Nonlinearity,
    kernel: &Kernel,
) -> Result<ComparisonReport> {
    check_comparison_sandwich(u0, v0, t_end, dt, nl, nl, kernel)
}

/// As [`check_comparison`] with `u` driven by `nl_u` and `v` by `nl_v` (`nl_u ≤ nl_v`).
pub fn check_comparison_sandwich(
    u0: &FieldState,
    v0: &FieldState,
    t_end: f64,
    dt: f64,
    nl_u: &Nonlinearity,
    nl_v: &Nonlinearity,
    kernel: &Kernel,
) -> Result<ComparisonReport> {
    if u0.len() != v0.len() || u0.dx != v0.dx || u0.x0 != v0.x0 {
        return Err(invalid("v0", "grids differ"));
    }
    for i in -1..=u0.len() as isize {
        let e = u0.at(i) - v0.at(i);
        if e > 0.0 {
            return Err(NflError::InputsNotOrdered { excess: e, index: i.max(0) as usize });
        }
    }
    let steps = step_count(u0.t, t_end, dt)?;
    let iu = Integrator::new(nl_u, kernel, u0.dx)?;
    let iv = Integrator::new(nl_v, kernel, u0.dx)?;
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut best = (f64::NEG_INFINITY, u0.t, u0.x0);
    let mut scan = |u: &FieldState, v: &FieldState| {
        for i in 0..u.len() {
            let d = u.values[i] - v.values[i];
            if d > best.0 {
                best = (d, u.t, u.x(i));
            }
        }
    };
    scan(&u, &v);
    for k in 1..=steps {
        u = iu.step(&u, dt)?;
        v = iv.step(&v, dt)?;
        u.t = u0.t + k as f64 * dt;
        v.t = u.t;
        scan(&u, &v);
    }
    Ok(ComparisonReport {
        max_difference: best.0,
        witness_t: best.1,
        witness_x: best.2,
        tolerance: COMPARISON_TOL,
        pass: best.0 <= COMPARISON_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    /// Symmetric grid on `[-half, half]`.
    pub fn centered(half: f64, dx: f64) -> Self {
        let cells = (half / dx).round() as usize;
        Grid { x0: -(cells as f64) * dx, dx, n: 2 * cells + 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// λ on `x ≤ x0`, linear to 0 at 0.
    PlateauRamp { lambda: f64, x0: f64 },
    /// λ1 on `x ≤ -x*`, linear to 0 at 0.
    RampDown { lambda1: f64, xstar: f64 },
    /// 1 on `x ≤ 0`, linear to λ2 at x*, then λ2.
    RampUp { lambda2: f64, xstar: f64 },
    /// `½(1 - tanh((x - center)/width))`.
    SmoothedStep { center: f64, width: f64 },
    /// `min(1, e^{-r(x-h)})`.
    ExpFront { r: f64, h: f64 },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::PlateauRamp { lambda, x0 } => {
                if x <= x0 {
                    lambda
                } else if x >= 0.0 {
                    0.0
                } else {
                    lambda * x / x0
                }
            }
            Profile::RampDown { lambda1, xstar } => {
                if x <= -xstar {
                    lambda1
                } else if x >= 0.0 {
                    0.0
                } else {
                    -lambda1 / xstar * x
                }
            }
            Profile::RampUp { lambda2, xstar } => {
                if x <= 0.0 {
                    1.0
                } else if x >= xstar {
                    lambda2
                } else {
                    (lambda2 - 1.0) / xstar * x + 1.0
                }
            }
            Profile::SmoothedStep { center, width } => 0.5 * (1.0 - ((x - center) / width).tanh()),
            Profile::ExpFront { r, h } => (-r * (x - h)).exp().min(1.0),
        }
    }

    pub fn tails(&self) -> (f64, f64) {
        match *self {
            Profile::PlateauRamp { lambda, .. } => (lambda, 0.0),
            Profile::RampDown { lambda1, .. } => (lambda1, 0.0),
            Profile::RampUp { lambda2, .. } => (1.0, lambda2),
            Profile::SmoothedStep { .. } | Profile::ExpFront { .. } => (1.0, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in [0,1], got {v}")))
            }
        };
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Profile::PlateauRamp { lambda, x0 } => {
                unit("lambda", lambda)?;
                if !(x0 < 0.0) {
                    return Err(invalid("x0", "must be negative"));
                }
            }
            Profile::RampDown { lambda1, xstar } => {
                unit("lambda1", lambda1)?;
                pos("xstar", xstar)?;
            }
            Profile::RampUp { lambda2, xstar } => {
                unit("lambda2", lambda2)?;
                pos("xstar", xstar)?;
            }
            Profile::SmoothedStep { width, .. } => pos("width", width)?,
            Profile::ExpFront { r, .. } => pos("r", r)?,
        }
        Ok(())
    }
}

pub fn make_initial(profile: Profile, grid: Grid) -> Result<FieldState> {
    profile.validate()?;
    if grid.n < 2 {
        return Err(invalid("n", "need at least two grid points"));
    }
    let (l, r) = profile.tails();
    FieldState::from_fn(grid.x0, grid.dx, grid.n, l, r, |x| profile.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Homogeneous;

    fn gauss() -> Kernel {
        Kernel::gaussian(1.0).unwrap()
    }

    #[test]
    fn equilibria_are_fixed() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::bistable(0.25).unwrap().into();
        for c in [0.0, 1.0, 0.25] {
            let s = FieldState::constant(-10.0, 0.1, 201, c).unwrap();
            let n = step(&s, 0.1, &nl, &k).unwrap();
            assert!(n.values.iter().all(|v| (v - c).abs() < 1e-12));
            assert!((n.u_left - c).abs() < 1e-12);
        }
    }

    #[test]
    fn dt_bounds() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::kpp(1.0).unwrap().into();
        let s = FieldState::constant(-10.0, 0.1, 201, 0.5).unwrap();
        assert!(step(&s, 0.3, &nl, &k).is_err());
        assert!(step_count(0.0, 1.0, 0.3).is_err());
        assert_eq!(step_count(0.0, 10.0, 0.05).unwrap(), 200);
    }

    #[test]
    fn profiles() {
        let p = Profile::PlateauRamp { lambda: 0.8, x0: -2.0 };
        assert_eq!(p.eval(-3.0), 0.8);
        assert_eq!(p.eval(1.0), 0.0);
        let e = Profile::ExpFront { r: 1.0, h: 0.0 };
        assert!((e.eval(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        let s = make_initial(Profile::SmoothedStep { center: 0.0, width: 2.0 }, Grid::centered(20.0, 0.1)).unwrap();
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        assert!(make_initial(Profile::PlateauRamp { lambda: 1.5, x0: -1.0 }, Grid::centered(5.0, 0.1)).is_err());
        assert!(make_initial(Profile::PlateauRamp { lambda: 0.5, x0: 1.0 }, Grid::centered(5.0, 0.1)).is_err());
        let b = Profile::RampDown { lambda1: 0.7, xstar: 2.0 };
        assert!((b.eval(-1.0) - 0.35).abs() < 1e-15);
        let m = Profile::RampUp { lambda2: 0.05, xstar: 2.0 };
        assert!((m.eval(1.0) - 0.525).abs() < 1e-15);
    }

    #[test]
    fn rk4_order() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::bistable(0.25).unwrap().into();
        let s = make_initial(Profile::SmoothedStep { center: 0.0, width: 2.0 }, Grid::centered(30.0, 0.1)).unwrap();
        let opts = EvolveOptions { recenter: None, save_every: 1000 };
        let run = |dt: f64| evolve(&s, 2.0, dt, &nl, &k, opts).unwrap().last().values.clone();
        let a = run(0.2);
        let b = run(0.1);
        let c = run(0.05);
        let e1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let e2 = b.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "observed order {order}");
    }

    #[test]
    fn recentering_keeps_absolute_positions() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::bistable(0.25).unwrap().into();
        let s = make_initial(Profile::SmoothedStep { center: 0.0, width: 1.0 }, Grid::centered(30.0, 0.1)).unwrap();
        let tr = evolve(&s, 40.0, 0.1, &nl, &k, EvolveOptions { recenter: Some(0.5), save_every: 10 }).unwrap();
        assert!(!tr.shifts.is_empty());
        let fixed =
            make_initial(Profile::SmoothedStep { center: 0.0, width: 1.0 }, Grid { x0: -30.0, dx: 0.1, n: 1201 })
                .unwrap();
        let tf = evolve(&fixed, 40.0, 0.1, &nl, &k, EvolveOptions { recenter: None, save_every: 10 }).unwrap();
        let a = fronts::interface_locations(tr.last(), 0.5).unwrap().1;
        let b = fronts::interface_locations(tf.last(), 0.5).unwrap().1;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        let last = tr.shifts.last().unwrap();
        assert!((tr.last().x0 - (-30.0 + last.total as f64 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn worker_count_bit_identical() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::ignition(0.3, 4.0).unwrap().into();
        let s = make_initial(Profile::SmoothedStep { center: 0.0, width: 1.0 }, Grid::centered(20.0, 0.1)).unwrap();
        let run = |w: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| evolve(&s, 5.0, 0.1, &nl, &k, EvolveOptions::default()).unwrap())
        };
        let a = run(1);
        let b = run(8);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.values, y.values);
        }
    }

    #[test]
    fn comparison_rejects_unordered() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::bistable(0.25).unwrap().into();
        let g = Grid::centered(10.0, 0.1);
        let a = make_initial(Profile::SmoothedStep { center: 1.0, width: 1.0 }, g).unwrap();
        let b = make_initial(Profile::SmoothedStep { center: 0.0, width: 1.0 }, g).unwrap();
        assert!(matches!(check_comparison(&a, &b, 1.0, 0.1, &nl, &k), Err(NflError::InputsNotOrdered { .. })));
        let r = check_comparison(&b, &b, 1.0, 0.1, &nl, &k).unwrap();
        assert_eq!(r.max_difference, 0.0);
    }

    #[test]
    fn zero_state_stays_zero() {
        let k = gauss();
        let nl: Nonlinearity = Homogeneous::kpp(1.0).unwrap().into();
        let s = FieldState::constant(-10.0, 0.1, 201, 0.0).unwrap();
        let tr = evolve(&s, 2.0, 0.1, &nl, &k, EvolveOptions::default()).unwrap();
        assert!(tr.snapshots.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
        assert!(tr.shifts.is_empty());
    }
}
