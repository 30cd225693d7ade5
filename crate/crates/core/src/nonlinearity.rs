//! Reaction terms: homogeneous families and the heterogeneous blend of two of them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::quadrature;

/// States within this distance outside [0,1] are accepted (f is zero there).
pub const OVERSHOOT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `f0 u (1-u)`.
    Kpp {
        #[serde(default = "one")]
        f0: f64,
    },
    /// `a (u-θ)^2 (1-u)` above θ, zero below.
    Ignition { theta: f64, a: f64 },
    /// `u (1-u) (u-θ)`.
    Bistable { theta: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homogeneous {
    #[serde(flatten)]
    pub family: Family,
    /// Use `-f(1-u)` instead of `f(u)`.
    #[serde(default)]
    pub reflected: bool,
}

impl Homogeneous {
    pub fn kpp(f0: f64) -> Result<Self> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(invalid("f0", "must be positive"));
        }
        Ok(Self { family: Family::Kpp { f0 }, reflected: false })
    }

    pub fn ignition(theta: f64, a: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(invalid("theta", format!("ignition temperature must lie in (0,1), got {theta}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", "must be positive"));
        }
        Ok(Self { family: Family::Ignition { theta, a }, reflected: false })
    }

    pub fn bistable(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(invalid("theta", format!("middle zero must lie in (0,1), got {theta}")));
        }
        Ok(Self { family: Family::Bistable { theta }, reflected: false })
    }

    pub fn validated(self) -> Result<Self> {
        match self.family {
            Family::Kpp { f0 } => Self::kpp(f0),
            Family::Ignition { theta, a } => Self::ignition(theta, a),
            Family::Bistable { theta } => Self::bistable(theta),
        }
        .map(|h| Self { reflected: self.reflected, ..h })
    }

    /// `v ↦ -f(1-v)`.
    pub fn reflect(self) -> Self {
        Self { reflected: !self.reflected, ..self }
    }

    pub fn tag(&self) -> &'static str {
        match (self.family, self.reflected) {
            (Family::Kpp { .. }, false) => "kpp",
            (Family::Ignition { .. }, false) => "ignition",
            (Family::Bistable { .. }, false) => "bistable",
            (Family::Kpp { .. }, true) => "kpp-reflected",
            (Family::Ignition { .. }, true) => "ignition-reflected",
            (Family::Bistable { .. }, true) => "bistable-reflected",
        }
    }

    /// Threshold θ of the family (θ_I, θ), or 1/2 for KPP.
    pub fn threshold(&self) -> f64 {
        let th = match self.family {
            Family::Kpp { .. } => 0.5,
            Family::Ignition { theta, .. } | Family::Bistable { theta } => theta,
        };
        if self.reflected {
            1.0 - th
        } else {
            th
        }
    }

    fn base(&self, u: f64) -> (f64, f64, f64) {
        match self.family {
            Family::Kpp { f0 } => (f0 * u * (1.0 - u), f0 * (1.0 - 2.0 * u), -2.0 * f0),
            Family::Ignition { theta, a } => {
                if u <= theta {
                    (0.0, 0.0, 0.0)
                } else {
                    let s = u - theta;
                    (a * s * s * (1.0 - u), a * s * (2.0 * (1.0 - u) - s), a * (2.0 * (1.0 - u) - 4.0 * s))
                }
            }
            Family::Bistable { theta } => {
                // u(1-u)(u-θ) = -u^3 + (1+θ)u^2 - θu
                (
                    u * (1.0 - u) * (u - theta),
                    -3.0 * u * u + 2.0 * (1.0 + theta) * u - theta,
                    -6.0 * u + 2.0 * (1.0 + theta),
                )
            }
        }
    }

    /// (f, f', f'') on [0,1] without range handling.
    pub fn raw(&self, u: f64) -> (f64, f64, f64) {
        if self.reflected {
            let (f, d, dd) = self.base(1.0 - u);
            (-f, d, -dd)
        } else {
            self.base(u)
        }
    }

    /// Zero extension outside [0,1], no range check.
    pub fn f_ext(&self, u: f64) -> f64 {
        if (0.0..=1.0).contains(&u) {
            self.raw(u).0
        } else {
            0.0
        }
    }

    pub fn fu_ext(&self, u: f64) -> f64 {
        if (0.0..=1.0).contains(&u) {
            self.raw(u).1
        } else {
            0.0
        }
    }

    /// Zero below 0, linear `f'(1)(u-1)` above 1.
    pub fn f_linear_ext(&self, u: f64) -> f64 {
        if u > 1.0 {
            self.raw(1.0).1 * (u - 1.0)
        } else {
            self.f_ext(u)
        }
    }

    pub fn fu_linear_ext(&self, u: f64) -> f64 {
        if u > 1.0 {
            self.raw(1.0).1
        } else {
            self.fu_ext(u)
        }
    }

    pub fn f(&self, u: f64) -> Result<f64> {
        check_range(u)?;
        Ok(self.f_ext(u))
    }

    pub fn fu(&self, u: f64) -> Result<f64> {
        check_range(u)?;
        Ok(self.fu_ext(u))
    }

    /// `∫_0^1 f` in closed form.
    pub fn integral(&self) -> f64 {
        let v = match self.family {
            Family::Kpp { f0 } => f0 / 6.0,
            Family::Ignition { theta, a } => a * (1.0 - theta).powi(4) / 12.0,
            Family::Bistable { theta } => (1.0 - 2.0 * theta) / 12.0,
        };
        if self.reflected {
            -v
        } else {
            v
        }
    }

    pub fn integral_quadrature(&self) -> f64 {
        let kinks = match self.family {
            Family::Ignition { theta, .. } => vec![if self.reflected { 1.0 - theta } else { theta }],
            _ => vec![],
        };
        quadrature::adaptive(|u| self.raw(u).0, 0.0, 1.0, &kinks, 1e-15)
    }
}

fn check_range(u: f64) -> Result<()> {
    if !(-OVERSHOOT_TOL..=1.0 + OVERSHOOT_TOL).contains(&u) {
        return Err(NflError::StateOutOfRange { u });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub amp: f64,
    pub omega_t: f64,
    pub omega_x: f64,
}

impl Modulation {
    /// `m = ½(1 + amp sin(ω_t t) sin(ω_x x))`.
    pub fn m(&self, t: f64, x: f64) -> f64 {
        0.5 * (1.0 + self.amp * (self.omega_t * t).sin() * (self.omega_x * x).sin())
    }

    pub fn m_x(&self, t: f64, x: f64) -> f64 {
        0.5 * self.amp * (self.omega_t * t).sin() * self.omega_x * (self.omega_x * x).cos()
    }
}

/// `f = (1-m) f_B + m f_M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneous {
    pub fb: Homogeneous,
    pub fm: Homogeneous,
    pub modulation: Modulation,
    pub theta0: f64,
    pub theta1: f64,
    pub kappa0: f64,
}

impl Heterogeneous {
    pub fn new(
        fb: Homogeneous,
        fm: Homogeneous,
        modulation: Modulation,
        theta0: f64,
        theta1: f64,
        kappa0: f64,
    ) -> Result<Self> {
        if !(modulation.amp >= 0.0 && modulation.amp <= 1.0) {
            return Err(invalid("amp", "modulation amplitude must lie in [0,1]"));
        }
        if !(0.0 < theta0 && theta0 < theta1 && theta1 < 1.0) {
            return Err(invalid("theta0", "need 0 < theta0 < theta1 < 1"));
        }
        if !(kappa0 > 0.0) {
            return Err(invalid("kappa0", "must be positive"));
        }
        Ok(Self { fb: fb.validated()?, fm: fm.validated()?, modulation, theta0, theta1, kappa0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Nonlinearity {
    Homogeneous(Homogeneous),
    Heterogeneous(Heterogeneous),
}

impl From<Homogeneous> for Nonlinearity {
    fn from(h: Homogeneous) -> Self {
        Nonlinearity::Homogeneous(h)
    }
}

impl From<Heterogeneous> for Nonlinearity {
    fn from(h: Heterogeneous) -> Self {
        Nonlinearity::Heterogeneous(h)
    }
}

impl Nonlinearity {
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Nonlinearity::Homogeneous(_))
    }

    /// f with zero extension, no range check.
    pub fn f_ext(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            Nonlinearity::Homogeneous(h) => h.f_ext(u),
            Nonlinearity::Heterogeneous(h) => {
                let m = h.modulation.m(t, x);
                (1.0 - m) * h.fb.f_ext(u) + m * h.fm.f_ext(u)
            }
        }
    }

    pub fn fu_ext(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            Nonlinearity::Homogeneous(h) => h.fu_ext(u),
            Nonlinearity::Heterogeneous(h) => {
                let m = h.modulation.m(t, x);
                (1.0 - m) * h.fb.fu_ext(u) + m * h.fm.fu_ext(u)
            }
        }
    }

    pub fn fx_ext(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            Nonlinearity::Homogeneous(_) => 0.0,
            Nonlinearity::Heterogeneous(h) => h.modulation.m_x(t, x) * (h.fm.f_ext(u) - h.fb.f_ext(u)),
        }
    }

    pub fn fxu_ext(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            Nonlinearity::Homogeneous(_) => 0.0,
            Nonlinearity::Heterogeneous(h) => h.modulation.m_x(t, x) * (h.fm.fu_ext(u) - h.fb.fu_ext(u)),
        }
    }

    pub fn eval_f(&self, t: f64, x: f64, u: f64) -> Result<f64> {
        check_range(u)?;
        Ok(self.f_ext(t, x, u))
    }

    pub fn eval_fu(&self, t: f64, x: f64, u: f64) -> Result<f64> {
        check_range(u)?;
        Ok(self.fu_ext(t, x, u))
    }

    pub fn eval_fx(&self, t: f64, x: f64, u: f64) -> Result<f64> {
        check_range(u)?;
        Ok(self.fx_ext(t, x, u))
    }
}

/// Sample lattice for the hypothesis validators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Lattice {
    pub points: usize,
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { points: 101, t_range: (-20.0, 20.0), x_range: (-20.0, 20.0) }
    }
}

impl Lattice {
    fn axis(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
    pub fn ts(&self) -> Vec<f64> {
        Self::axis(self.points, self.t_range)
    }
    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.points, self.x_range)
    }
    pub fn us(&self, lo: f64, hi: f64) -> Vec<f64> {
        Self::axis(self.points, (lo, hi))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub pass: bool,
    pub value: f64,
}

fn clause(name: &str, pass: bool, value: f64) -> Clause {
    Clause { name: name.to_string(), pass, value }
}

/// Family-specific (H2) clauses on a dense u grid.
pub fn family_clauses(h: &Homogeneous, prefix: &str) -> Vec<Clause> {
    let n = 2001;
    let us: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let f = |u: f64| h.raw(u).0;
    let fp = |u: f64| h.raw(u).1;
    let mut out = vec![clause(
        &format!("{prefix}zeros"),
        f(0.0).abs() < 1e-15 && f(1.0).abs() < 1e-15,
        f(0.0).abs().max(f(1.0).abs()),
    )];
    let interior = &us[1..n - 1];
    let th = h.threshold();
    let kind = match (h.family, h.reflected) {
        (Family::Kpp { .. }, false) => 0,
        (Family::Ignition { .. }, false) => 1,
        (Family::Bistable { .. }, _) => 2,
        _ => 3,
    };
    match kind {
        0 => {
            let minf = interior.iter().map(|&u| f(u)).fold(f64::INFINITY, f64::min);
            out.push(clause(&format!("{prefix}kpp_positive"), minf > 0.0, minf));
            let mut worst: f64 = 0.0;
            for w in interior.windows(2) {
                worst = worst.max(f(w[1]) / w[1] - f(w[0]) / w[0]);
            }
            out.push(clause(&format!("{prefix}kpp_ratio_nonincreasing"), worst <= 1e-14, worst));
        }
        1 => {
            let below = us.iter().filter(|&&u| u <= th).map(|&u| f(u).abs()).fold(0.0, f64::max);
            out.push(clause(&format!("{prefix}ignition_zero_below"), below == 0.0, below));
            let above = us.iter().filter(|&&u| u > th && u < 1.0).map(|&u| f(u)).fold(f64::INFINITY, f64::min);
            out.push(clause(&format!("{prefix}ignition_positive_above"), above > 0.0, above));
            out.push(clause(&format!("{prefix}ignition_slope_at_one"), fp(1.0) < 0.0, fp(1.0)));
        }
        2 => {
            let neg = interior.iter().filter(|&&u| u < th - 1e-9).map(|&u| f(u)).fold(f64::NEG_INFINITY, f64::max);
            let pos = interior.iter().filter(|&&u| u > th + 1e-9).map(|&u| f(u)).fold(f64::INFINITY, f64::min);
            out.push(clause(&format!("{prefix}bistable_negative_below"), neg < 0.0, neg));
            out.push(clause(&format!("{prefix}bistable_positive_above"), pos > 0.0, pos));
            let slopes = fp(0.0).max(fp(1.0));
            out.push(clause(&format!("{prefix}bistable_stable_ends"), slopes < 0.0, slopes));
            out.push(clause(&format!("{prefix}bistable_unstable_middle"), fp(th) > 0.0, fp(th)));
        }
        _ => {
            // reflected kpp/ignition: only the zeros are meaningful
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct H2Report {
    pub clauses: Vec<Clause>,
    pub integral_fb_closed_form: Option<f64>,
    pub integral_fb_quadrature: Option<f64>,
    pub sup_fx: f64,
    pub sup_fu: f64,
    pub pass: bool,
}

pub fn validate_h2(nl: &Nonlinearity, lattice: &Lattice) -> H2Report {
    let mut clauses = Vec::new();
    let mut integral = None;
    let mut integral_q = None;
    let mut sup_fx: f64 = 0.0;
    let mut sup_fu: f64 = 0.0;
    let us = lattice.us(0.0, 1.0);
    match nl {
        Nonlinearity::Homogeneous(h) => {
            clauses.extend(family_clauses(h, ""));
            if matches!(h.family, Family::Bistable { .. }) {
                let v = h.integral();
                clauses.push(clause("bistable_unbalanced", v > 0.0, v));
                integral = Some(v);
                integral_q = Some(h.integral_quadrature());
            }
            for &u in &us {
                sup_fu = sup_fu.max(h.raw(u).1.abs());
            }
        }
        Nonlinearity::Heterogeneous(h) => {
            clauses.extend(family_clauses(&h.fb, "fb_"));
            clauses.extend(family_clauses(&h.fm, "fm_"));
            if matches!(h.fb.family, Family::Bistable { .. }) {
                let v = h.fb.integral();
                clauses.push(clause("fb_unbalanced", v > 0.0, v));
                integral = Some(v);
                integral_q = Some(h.fb.integral_quadrature());
            }
            let mut sandwich: f64 = f64::NEG_INFINITY;
            let mut mono: f64 = f64::NEG_INFINITY;
            for t in lattice.ts() {
                for x in lattice.xs() {
                    for &u in &us {
                        let f = nl.f_ext(t, x, u);
                        let (fb, fm) = (h.fb.f_ext(u), h.fm.f_ext(u));
                        sandwich = sandwich.max(fb - f).max(f - fm);
                        let fu = nl.fu_ext(t, x, u);
                        if u >= h.theta1 {
                            mono = mono.max(fu);
                        }
                        sup_fu = sup_fu.max(fu.abs());
                        sup_fx = sup_fx.max(nl.fx_ext(t, x, u).abs());
                    }
                }
            }
            clauses.push(clause("sandwich", sandwich <= 1e-14, sandwich));
            clauses.push(clause("theta1_monotone", mono <= 0.0, mono));
        }
    }
    clauses.push(clause("bounded_partials", sup_fx.is_finite() && sup_fu.is_finite(), sup_fu.max(sup_fx)));
    let pass = clauses.iter().all(|c| c.pass);
    H2Report { clauses, integral_fb_closed_form: integral, integral_fb_quadrature: integral_q, sup_fx, sup_fu, pass }
}

/// Sampled `max f_u ≤ 1 - κ0` over `u ∈ [0, θ0]`.
pub fn validate_h3(nl: &Nonlinearity, theta0: f64, kappa0: f64, lattice: &Lattice) -> bool {
    max_fu_below(nl, theta0, lattice) <= 1.0 - kappa0
}

pub fn max_fu_below(nl: &Nonlinearity, theta0: f64, lattice: &Lattice) -> f64 {
    let us = lattice.us(0.0, theta0);
    let (ts, xs) = match nl {
        Nonlinearity::Homogeneous(_) => (vec![0.0], vec![0.0]),
        Nonlinearity::Heterogeneous(_) => (lattice.ts(), lattice.xs()),
    };
    let mut best = f64::NEG_INFINITY;
    for &t in &ts {
        for &x in &xs {
            for &u in &us {
                best = best.max(nl.fu_ext(t, x, u));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sandwich() -> Nonlinearity {
        Heterogeneous::new(
            Homogeneous::bistable(0.25).unwrap(),
            Homogeneous::ignition(0.2, 4.0).unwrap(),
            Modulation { amp: 1.0, omega_t: 0.3, omega_x: 0.2 },
            0.1,
            0.75,
            0.9,
        )
        .unwrap()
        .into()
    }

    #[test]
    fn point_values() {
        let k = Homogeneous::kpp(1.0).unwrap();
        assert_eq!(k.f(0.5).unwrap(), 0.25);
        assert_eq!(k.fu(0.0).unwrap(), 1.0);
        let b = Homogeneous::bistable(0.25).unwrap();
        assert_eq!(b.f(0.25).unwrap(), 0.0);
        let i = Homogeneous::ignition(0.3, 4.0).unwrap();
        assert!((i.raw(1.0).1 + 4.0 * 0.49).abs() < 1e-14);
    }

    #[test]
    fn blend_midpoint() {
        let fb = Homogeneous::bistable(0.25).unwrap();
        let fm = Homogeneous::ignition(0.2, 4.0).unwrap();
        let h: Nonlinearity =
            Heterogeneous::new(fb, fm, Modulation { amp: 0.0, omega_t: 1.0, omega_x: 1.0 }, 0.1, 0.75, 0.9)
                .unwrap()
                .into();
        let u = 0.6;
        let mid = 0.5 * (fb.f_ext(u) + fm.f_ext(u));
        assert!((h.eval_f(3.0, -2.0, u).unwrap() - mid).abs() < 1e-15);
    }

    #[test]
    fn range_handling() {
        let k = Homogeneous::kpp(1.0).unwrap();
        assert_eq!(k.f(-5e-7).unwrap(), 0.0);
        assert_eq!(k.f(1.0 + 5e-7).unwrap(), 0.0);
        assert!(matches!(k.f(1.1), Err(NflError::StateOutOfRange { .. })));
        assert!(matches!(k.f(-1e-3), Err(NflError::StateOutOfRange { .. })));
    }

    #[test]
    fn partials_match_differences() {
        let nl = sandwich();
        let (t, x, u) = (0.0, 0.0, 0.3);
        let h = 1e-5;
        let fd = (nl.f_ext(t, x, u + h) - nl.f_ext(t, x, u - h)) / (2.0 * h);
        assert!((nl.eval_fu(t, x, u).unwrap() - fd).abs() < 1e-8);
        let (t, x, u) = (1.3, 0.7, 0.6);
        for &hh in &[1e-3, 1e-4] {
            let fdx = (nl.f_ext(t, x + hh, u) - nl.f_ext(t, x - hh, u)) / (2.0 * hh);
            assert!((nl.eval_fx(t, x, u).unwrap() - fdx).abs() < 1e-6);
        }
        for x in [-3.0, 0.5, 7.0] {
            assert_eq!(nl.eval_fx(2.0, x, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn partial_order_of_accuracy() {
        let nl = sandwich();
        let (t, x, u) = (0.7, 1.1, 0.55);
        let err = |h: f64| (nl.fu_ext(t, x, u) - (nl.f_ext(t, x, u + h) - nl.f_ext(t, x, u - h)) / (2.0 * h)).abs();
        let order = (err(1e-3) / err(1e-4)).log10();
        assert!(order >= 1.9, "{order}");
    }

    #[test]
    fn integrals() {
        let b = Homogeneous::bistable(0.25).unwrap();
        assert!((b.integral() - 1.0 / 24.0).abs() < 1e-16);
        assert!((b.integral_quadrature() - 1.0 / 24.0).abs() < 1e-14);
        let bal = Homogeneous::bistable(0.5).unwrap();
        let r = validate_h2(&bal.into(), &Lattice::default());
        assert!(!r.pass);
        assert!(r.clauses.iter().any(|c| c.name == "bistable_unbalanced" && !c.pass));
        let i = Homogeneous::ignition(0.3, 4.0).unwrap();
        assert!((i.integral() - i.integral_quadrature()).abs() < 1e-14);
    }

    #[test]
    fn reflection_flips_sign() {
        let b = Homogeneous::bistable(0.7).unwrap();
        assert!(b.integral() < 0.0);
        let r = b.reflect();
        assert!(r.integral() > 0.0);
        assert!((r.integral_quadrature() + b.integral_quadrature()).abs() < 1e-15);
        assert!((r.threshold() - 0.3).abs() < 1e-15);
        let rep = validate_h2(&r.into(), &Lattice::default());
        assert!(rep.pass, "{:?}", rep.clauses);
    }

    #[test]
    fn families_pass_h2() {
        for h in [
            Homogeneous::kpp(1.0).unwrap(),
            Homogeneous::ignition(0.3, 4.0).unwrap(),
            Homogeneous::bistable(0.25).unwrap(),
        ] {
            let r = validate_h2(&h.into(), &Lattice::default());
            assert!(r.pass, "{:?}", r.clauses);
        }
        let r = validate_h2(&sandwich(), &Lattice { points: 41, ..Lattice::default() });
        assert!(r.pass, "{:?}", r.clauses);
    }

    #[test]
    fn swapped_sandwich_fails() {
        let nl: Nonlinearity = Heterogeneous::new(
            Homogeneous::ignition(0.2, 4.0).unwrap(),
            Homogeneous::bistable(0.25).unwrap(),
            Modulation { amp: 1.0, omega_t: 0.3, omega_x: 0.2 },
            0.1,
            0.75,
            0.9,
        )
        .unwrap()
        .into();
        let r = validate_h2(&nl, &Lattice { points: 21, ..Lattice::default() });
        assert!(r.clauses.iter().any(|c| c.name == "sandwich" && !c.pass));
    }

    #[test]
    fn h3_examples() {
        let lat = Lattice::default();
        let ign: Nonlinearity = Homogeneous::ignition(0.3, 4.0).unwrap().into();
        assert!(validate_h3(&ign, 0.2, 1.0, &lat));
        let kpp: Nonlinearity = Homogeneous::kpp(1.0).unwrap().into();
        assert!(!validate_h3(&kpp, 0.1, 0.5, &lat));
        let bis: Nonlinearity = Homogeneous::bistable(0.25).unwrap().into();
        assert!(validate_h3(&bis, 0.1, 0.9, &lat));
        assert!((max_fu_below(&bis, 0.1, &lat) + 0.25).abs() < 1e-3 || max_fu_below(&bis, 0.1, &lat) <= 0.1);
    }
}
