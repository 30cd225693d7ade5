//! Dispersal kernels and the convolution operators `J*u`, `J'*u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::quadrature;

const GAUSS_TRUNC: f64 = 10.0;
/// Grid must resolve the kernel width by this factor.
pub const MIN_CELLS_PER_WIDTH: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian { sigma: f64 },
    Bump { radius: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    spec: KernelSpec,
    norm: f64,
    truncation: f64,
    mass: f64,
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("must be positive and finite, got {sigma}")));
        }
        Ok(Kernel {
            spec: KernelSpec::Gaussian { sigma },
            norm: 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
            truncation: GAUSS_TRUNC * sigma,
            mass: 1.0,
        })
    }

    /// Normalized `(1-(x/R)^2)^2` on `[-R, R]`.
    pub fn bump(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius", format!("must be positive and finite, got {radius}")));
        }
        Ok(Kernel { spec: KernelSpec::Bump { radius }, norm: 15.0 / (16.0 * radius), truncation: radius, mass: 1.0 })
    }

    pub fn from_spec(spec: KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Gaussian { sigma } => Self::gaussian(sigma),
            KernelSpec::Bump { radius } => Self::bump(radius),
        }
    }

    /// Multiplies the kernel by `factor`, breaking unit mass. Used to exercise validators.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut k = self.clone();
        k.norm *= factor;
        k.mass *= factor;
        k
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    /// sigma for gaussians, R for bumps.
    pub fn width(&self) -> f64 {
        match self.spec {
            KernelSpec::Gaussian { sigma } => sigma,
            KernelSpec::Bump { radius } => radius,
        }
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > self.truncation {
            return 0.0;
        }
        match self.spec {
            KernelSpec::Gaussian { sigma } => {
                let s = x / sigma;
                self.norm * (-0.5 * s * s).exp()
            }
            KernelSpec::Bump { radius } => {
                let s = x / radius;
                let q = 1.0 - s * s;
                self.norm * q * q
            }
        }
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        if x.abs() > self.truncation {
            return 0.0;
        }
        match self.spec {
            KernelSpec::Gaussian { sigma } => -x / (sigma * sigma) * self.eval(x),
            KernelSpec::Bump { radius } => {
                let s = x / radius;
                -4.0 * self.norm * (1.0 - s * s) * s / radius
            }
        }
    }

    /// `∫ J(x) e^{γx} dx`, computed as `∫ J cosh(γx)` so it is exactly even in γ.
    pub fn exp_moment(&self, gamma: f64) -> Result<f64> {
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        let t = self.truncation;
        quadrature::simpson_refined(|x| self.eval(x) * (gamma * x).cosh(), -t, t, 400, 1e-14, 1e-8)
    }

    /// `∫ |J'(x)| e^{γx} dx`.
    pub fn derivative_exp_moment(&self, gamma: f64) -> Result<f64> {
        let t = self.truncation;
        quadrature::simpson_refined(|x| self.eval_derivative(x).abs() * (gamma * x).cosh(), -t, t, 400, 1e-13, 1e-8)
    }

    /// `‖J'‖_{L¹}`.
    pub fn derivative_l1(&self) -> f64 {
        // J' changes sign only at 0, so this is 2 J(0).
        2.0 * self.eval(0.0)
    }

    pub fn check_resolution(&self, dx: f64) -> Result<()> {
        let limit = self.width() / MIN_CELLS_PER_WIDTH;
        if !(dx > 0.0) || dx > limit * (1.0 + 1e-12) {
            return Err(NflError::GridTooCoarse { dx, limit });
        }
        Ok(())
    }

    /// `∫ J(x-y) g(y) dy` by adaptive quadrature, splitting at the kinks of `g`.
    pub fn convolve_fn<G: Fn(f64) -> f64>(&self, g: G, x: f64, kinks: &[f64]) -> f64 {
        let t = self.truncation;
        quadrature::adaptive(|y| self.eval(x - y) * g(y), x - t, x + t, kinks, 1e-14)
    }

    /// `∫ J'(x-y) g(y) dy` by adaptive quadrature.
    pub fn convolve_derivative_fn<G: Fn(f64) -> f64>(&self, g: G, x: f64, kinks: &[f64]) -> f64 {
        let t = self.truncation;
        let mut ks = kinks.to_vec();
        ks.push(x);
        quadrature::adaptive(|y| self.eval_derivative(x - y) * g(y), x - t, x + t, &ks, 1e-14)
    }
}

/// Sampled profile on a uniform grid with constant tails.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub u_left: f64,
    pub u_right: f64,
    pub t: f64,
}

impl FieldState {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, u_left: f64, u_right: f64, t: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(invalid("dx", format!("must be positive, got {dx}")));
        }
        if values.is_empty() {
            return Err(invalid("values", "empty grid"));
        }
        for &u in values.iter().chain([u_left, u_right].iter()) {
            if !(-1e-6..=1.0 + 1e-6).contains(&u) || u.is_nan() {
                return Err(NflError::StateOutOfRange { u });
            }
        }
        Ok(FieldState { x0, dx, values, u_left, u_right, t })
    }

    /// Constant field on `n` points.
    pub fn constant(x0: f64, dx: f64, n: usize, c: f64) -> Result<Self> {
        Self::new(x0, dx, vec![c; n], c, c, 0.0)
    }

    /// Samples `g` on `n` points starting at `x0`; tails from the end values.
    pub fn from_fn<G: Fn(f64) -> f64>(x0: f64, dx: f64, n: usize, u_left: f64, u_right: f64, g: G) -> Result<Self> {
        let values = (0..n).map(|i| g(x0 + i as f64 * dx)).collect();
        Self::new(x0, dx, values, u_left, u_right, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.len() - 1)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Value at grid index extended by the tails.
    pub fn at(&self, j: isize) -> f64 {
        if j < 0 {
            self.u_left
        } else if j as usize >= self.values.len() {
            self.u_right
        } else {
            self.values[j as usize]
        }
    }

    /// Piecewise-linear interpolation with tail extension.
    pub fn interp(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        if s < 0.0 {
            return if s > -1.0 { self.values[0] } else { self.u_left };
        }
        let n = self.len();
        let i = s.floor() as usize;
        if i + 1 >= n {
            return if i + 1 == n { self.values[n - 1] } else { self.u_right };
        }
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// Discrete weights for one grid spacing.
#[derive(Clone, Debug)]
pub struct ConvWeights {
    pub kmax: usize,
    /// `w[k] = J(k dx) dx`, rescaled so `w0 + 2 Σ w_k` equals the kernel mass.
    pub w: Vec<f64>,
    /// `tail[m] = Σ_{k ≥ m} w[k]`, length kmax + 2.
    pub tail: Vec<f64>,
    /// `d[k] = J'(k dx) dx`, antisymmetric extension implied.
    pub d: Vec<f64>,
    pub dtail: Vec<f64>,
}

impl ConvWeights {
    pub fn new(kernel: &Kernel, dx: f64) -> Result<Self> {
        kernel.check_resolution(dx)?;
        let kmax = (kernel.truncation_radius() / dx + 1e-9).floor() as usize;
        let mut w: Vec<f64> = (0..=kmax).map(|k| kernel.eval(k as f64 * dx) * dx).collect();
        let sum = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        let scale = kernel.mass / sum;
        for v in &mut w {
            *v *= scale;
        }
        let d: Vec<f64> = (0..=kmax).map(|k| kernel.eval_derivative(k as f64 * dx) * dx).collect();
        let suffix = |v: &[f64]| {
            let mut t = vec![0.0; kmax + 2];
            for m in (0..=kmax).rev() {
                t[m] = t[m + 1] + v[m];
            }
            t
        };
        let tail = suffix(&w);
        let dtail = suffix(&d);
        Ok(ConvWeights { kmax, w, tail, d, dtail })
    }

    fn point(&self, u: &[f64], u_left: f64, u_right: f64, i: usize) -> f64 {
        let n = u.len();
        let kmax = self.kmax;
        let kin = kmax.min(i).min(n - 1 - i);
        let mut acc = self.w[0] * u[i];
        for k in 1..=kin {
            acc += self.w[k] * (u[i - k] + u[i + k]);
        }
        let mut single = 0.0;
        for k in kin + 1..=kmax {
            if k <= i {
                single += self.w[k] * u[i - k];
            }
            if i + k < n {
                single += self.w[k] * u[i + k];
            }
        }
        let lt = if i < kmax { self.tail[i + 1] } else { 0.0 };
        let rt = if n - i <= kmax { self.tail[n - i] } else { 0.0 };
        acc + single + (u_left * lt + u_right * rt)
    }

    fn point_derivative(&self, u: &[f64], u_left: f64, u_right: f64, i: usize) -> f64 {
        let n = u.len();
        let kmax = self.kmax;
        let kin = kmax.min(i).min(n - 1 - i);
        let mut acc = 0.0;
        for k in 1..=kin {
            acc += self.d[k] * (u[i - k] - u[i + k]);
        }
        let mut single = 0.0;
        for k in kin + 1..=kmax {
            if k <= i {
                single += self.d[k] * u[i - k];
            }
            if i + k < n {
                single -= self.d[k] * u[i + k];
            }
        }
        let lt = if i < kmax { self.dtail[i + 1] } else { 0.0 };
        let rt = if n - i <= kmax { self.dtail[n - i] } else { 0.0 };
        acc + single + (u_left * lt - u_right * rt)
    }

    pub fn apply(&self, field: &FieldState) -> Vec<f64> {
        self.apply_slice(&field.values, field.u_left, field.u_right)
    }

    pub fn apply_derivative(&self, field: &FieldState) -> Vec<f64> {
        self.apply_derivative_slice(&field.values, field.u_left, field.u_right)
    }

    /// Same as `apply` for arbitrary grid values with constant tails.
    pub fn apply_slice(&self, u: &[f64], u_left: f64, u_right: f64) -> Vec<f64> {
        (0..u.len()).into_par_iter().map(|i| self.point(u, u_left, u_right, i)).collect()
    }

    pub fn apply_derivative_slice(&self, u: &[f64], u_left: f64, u_right: f64) -> Vec<f64> {
        (0..u.len()).into_par_iter().map(|i| self.point_derivative(u, u_left, u_right, i)).collect()
    }
}

/// `(J*u)(x_i)` on the field grid.
pub fn convolve(kernel: &Kernel, field: &FieldState) -> Result<Vec<f64>> {
    Ok(ConvWeights::new(kernel, field.dx)?.apply(field))
}

/// `(J'*u)(x_i)` on the field grid.
pub fn convolve_derivative(kernel: &Kernel, field: &FieldState) -> Result<Vec<f64>> {
    Ok(ConvWeights::new(kernel, field.dx)?.apply_derivative(field))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentCheck {
    pub gamma: f64,
    pub value: Option<f64>,
    pub finite: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct H1Report {
    pub symmetry_max: f64,
    pub symmetry_pass: bool,
    pub min_value: f64,
    pub nonnegative_pass: bool,
    pub mass: f64,
    pub mass_residual: f64,
    pub mass_pass: bool,
    pub moments: Vec<MomentCheck>,
    pub moments_pass: bool,
    pub derivative_moments_pass: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn validate_h1(kernel: &Kernel, tol: f64) -> H1Report {
    let t = kernel.truncation_radius();
    let m = 4000;
    let mut symmetry_max: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    for i in 0..=m {
        let x = -t * 1.05 + 2.1 * t * i as f64 / m as f64;
        let a = kernel.eval(x);
        symmetry_max = symmetry_max.max((a - kernel.eval(-x)).abs());
        min_value = min_value.min(a);
    }
    let mass = quadrature::simpson_refined(|x| kernel.eval(x), -t, t, 400, 1e-14, 1e-8).unwrap_or(f64::NAN);
    let mass_residual = (mass - 1.0).abs();
    let gammas = [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0];
    let moments: Vec<MomentCheck> = gammas
        .iter()
        .map(|&g| {
            let v = kernel.exp_moment(g).ok();
            MomentCheck { gamma: g, value: v, finite: v.is_some_and(f64::is_finite) }
        })
        .collect();
    let moments_pass = moments.iter().all(|c| c.finite);
    let derivative_moments_pass = gammas.iter().all(|&g| kernel.derivative_exp_moment(g).is_ok_and(f64::is_finite));
    let symmetry_pass = symmetry_max <= tol;
    let nonnegative_pass = min_value >= 0.0;
    let mass_pass = mass_residual <= tol;
    H1Report {
        symmetry_max,
        symmetry_pass,
        min_value,
        nonnegative_pass,
        mass,
        mass_residual,
        mass_pass,
        moments,
        moments_pass,
        derivative_moments_pass,
        tolerance: tol,
        pass: symmetry_pass && nonnegative_pass && mass_pass && moments_pass && derivative_moments_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    fn step_field(dx: f64, half: f64) -> FieldState {
        let n = (2.0 * half / dx).round() as usize + 1;
        FieldState::from_fn(-half, dx, n, 1.0, 0.0, |x| {
            if x < -1e-12 {
                1.0
            } else if x > 1e-12 {
                0.0
            } else {
                0.5
            }
        })
        .unwrap()
    }

    #[test]
    fn gaussian_values() {
        let k = Kernel::gaussian(1.0).unwrap();
        assert!((k.eval(0.0) - INV_SQRT_2PI).abs() < 1e-15);
        assert_eq!(k.eval(2.0), k.eval(-2.0));
        assert_eq!(k.eval_derivative(0.0), 0.0);
        assert!((k.eval_derivative(1.0) + (-0.5f64).exp() * INV_SQRT_2PI).abs() < 1e-15);
        assert_eq!(k.eval(10.01), 0.0);
    }

    #[test]
    fn bump_values() {
        let k = Kernel::bump(1.0).unwrap();
        assert_eq!(k.eval(1.5), 0.0);
        assert_eq!(k.eval_derivative(1.0), 0.0);
        assert_eq!(k.eval_derivative(-1.0), 0.0);
        assert_eq!(k.eval_derivative(-0.3), -k.eval_derivative(0.3));
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(Kernel::gaussian(-1.0).is_err());
        assert!(Kernel::gaussian(f64::NAN).is_err());
        assert!(Kernel::bump(0.0).is_err());
    }

    #[test]
    fn moments() {
        let g = Kernel::gaussian(1.0).unwrap();
        assert!((g.exp_moment(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.exp_moment(1.0).unwrap() - 0.5f64.exp()).abs() < 1e-12);
        let g2 = Kernel::gaussian(0.5).unwrap();
        assert!((g2.exp_moment(4.0).unwrap() - 2.0f64.exp()).abs() < 1e-10);
        let b = Kernel::bump(1.0).unwrap();
        let m = b.exp_moment(0.5).unwrap();
        assert!(m > 1.0 && m < 0.5f64.exp());
        // independent fine composite Simpson oracle at dx = 1e-4
        let oracle = quadrature::simpson(|x| b.eval(x) * (0.5 * x).exp(), -1.0, 1.0, 20_000);
        assert!((m - oracle).abs() < 1e-12);
        assert_eq!(b.exp_moment(0.7).unwrap(), b.exp_moment(-0.7).unwrap());
    }

    #[test]
    fn derivative_order() {
        for k in [Kernel::gaussian(1.0).unwrap(), Kernel::bump(2.0).unwrap()] {
            for &x in &[0.3, 0.9, -1.2] {
                let err = |h: f64| (k.eval_derivative(x) - (k.eval(x + h) - k.eval(x - h)) / (2.0 * h)).abs();
                let (e1, e2) = (err(1e-2), err(1e-3));
                let order = (e1 / e2).log10();
                assert!(order >= 1.9, "order {order} at x={x}");
            }
        }
    }

    #[test]
    fn constant_fixing() {
        let k = Kernel::gaussian(1.0).unwrap();
        let f = FieldState::constant(-5.0, 0.1, 101, 0.7).unwrap();
        let c = convolve(&k, &f).unwrap();
        assert!(c.iter().all(|v| (v - 0.7).abs() < 1e-10));
        let d = convolve_derivative(&k, &f).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn step_convolution_at_origin() {
        let k = Kernel::gaussian(1.0).unwrap();
        let f = step_field(0.1, 30.0);
        let mid = f.len() / 2;
        let c = convolve(&k, &f).unwrap();
        assert!((c[mid] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn step_derivative_is_minus_j0() {
        // ∫ J'(-y) 1_{y<0} dy = ∫_0^∞ J'(s) ds = -J(0)
        let k = Kernel::gaussian(1.0).unwrap();
        let f = step_field(0.1, 30.0);
        let mid = f.len() / 2;
        let d = convolve_derivative(&k, &f).unwrap();
        let oracle = quadrature::simpson(|y| k.eval_derivative(-y), -10.0, 0.0, 100_000);
        assert!((oracle + k.eval(0.0)).abs() < 1e-10);
        assert!((d[mid] - oracle).abs() < 1e-3, "{} vs {}", d[mid], oracle);
    }

    #[test]
    fn derivative_parity() {
        let k = Kernel::bump(1.0).unwrap();
        let f = FieldState::from_fn(-5.0, 0.05, 201, 0.5, 0.5, |x| 0.5 + 0.4 * x * (-x * x).exp()).unwrap();
        let d = convolve_derivative(&k, &f).unwrap();
        let n = d.len();
        for i in 0..n {
            assert!((d[i] - d[n - 1 - i]).abs() < 1e-14);
        }
    }

    #[test]
    fn mirrored_input_mirrors_output_bitwise() {
        let k = Kernel::gaussian(1.0).unwrap();
        let f = FieldState::from_fn(-8.0, 0.1, 161, 1.0, 0.0, |x| 0.5 * (1.0 - (x * 0.7).tanh())).unwrap();
        let mut g = f.clone();
        g.values.reverse();
        std::mem::swap(&mut g.u_left, &mut g.u_right);
        let a = convolve(&k, &f).unwrap();
        let b = convolve(&k, &g).unwrap();
        let n = a.len();
        for i in 0..n {
            assert_eq!(a[i], b[n - 1 - i]);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let k = Kernel::gaussian(1.0).unwrap();
        let f = FieldState::constant(0.0, 0.2, 50, 0.5).unwrap();
        assert!(matches!(convolve(&k, &f), Err(NflError::GridTooCoarse { .. })));
    }

    #[test]
    fn gamma_one_profile_bump() {
        // Γ_1 = min(1, e^{-x}); beyond R from the corner the convolution is e^{-x} ∫J e^{y}
        let k = Kernel::bump(1.0).unwrap();
        let g = |x: f64| if x <= 0.0 { 1.0 } else { (-x).exp() };
        let m = k.exp_moment(1.0).unwrap();
        for &x in &[1.5, 2.0, 4.0] {
            let v = k.convolve_fn(g, x, &[0.0]);
            assert!((v - (-x).exp() * m).abs() < 1e-12);
        }
        let f = FieldState::from_fn(-5.0, 0.01, 1001, 1.0, 0.0, g).unwrap();
        let c = convolve(&k, &f).unwrap();
        let i = 700; // x = 2
        assert!((c[i] - (-2.0f64).exp() * m).abs() < 1e-5);
    }

    #[test]
    fn h1_reports() {
        let r = validate_h1(&Kernel::gaussian(1.0).unwrap(), 1e-8);
        assert!(r.pass);
        let r = validate_h1(&Kernel::gaussian(0.5).unwrap(), 1e-8);
        assert!(r.pass);
        let m4 = r.moments.iter().find(|m| m.gamma == 4.0).unwrap().value.unwrap();
        assert!((m4 - 2.0f64.exp()).abs() < 1e-8);
        let bad = Kernel::bump(1.0).unwrap().scaled(0.9);
        let r = validate_h1(&bad, 1e-8);
        assert!(!r.mass_pass && !r.pass);
        assert!((r.mass_residual - 0.1).abs() < 1e-10);
    }
}
