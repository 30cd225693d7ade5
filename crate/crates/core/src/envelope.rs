//! C¹ increasing envelope of an interface trace via hitting times and quintic blends.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, NflError, Result};
use crate::fronts::{verify_propagation_bounds, PropagationFit};

/// Coefficients `a_0..a_5` of `p(s) = Σ a_k s^k` on `[0, h]` meeting value, slope and
/// curvature at both ends.
pub fn quintic_hermite(h: f64, left: (f64, f64, f64), right: (f64, f64, f64)) -> [f64; 6] {
    let (y0, d0, dd0) = left;
    let (y1, d1, dd1) = right;
    let a0 = y0;
    let a1 = d0;
    let a2 = 0.5 * dd0;
    // remaining cubic part solves the 3x3 system at s = h
    let r0 = y1 - (a0 + a1 * h + a2 * h * h);
    let r1 = d1 - (a1 + 2.0 * a2 * h);
    let r2 = dd1 - 2.0 * a2;
    let h2 = h * h;
    let h3 = h2 * h;
    let a3 = (20.0 * r0 - 8.0 * r1 * h + r2 * h2) / (2.0 * h3);
    let a4 = (-30.0 * r0 + 14.0 * r1 * h - 2.0 * r2 * h2) / (2.0 * h3 * h);
    let a5 = (12.0 * r0 - 6.0 * r1 * h + r2 * h2) / (2.0 * h3 * h2);
    [a0, a1, a2, a3, a4, a5]
}

pub fn poly_eval(c: &[f64; 6], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

pub fn poly_deriv(c: &[f64; 6], s: f64) -> f64 {
    (1..6).rev().fold(0.0, |acc, k| acc * s + k as f64 * c[k])
}

pub fn poly_deriv2(c: &[f64; 6], s: f64) -> f64 {
    (2..6).rev().fold(0.0, |acc, k| acc * s + (k * (k - 1)) as f64 * c[k])
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    /// Polynomial in `s = t - t0`.
    pub coeffs: [f64; 6],
    pub blend: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub c1: f64,
    pub t1: f64,
    pub c2: f64,
    pub t2: f64,
    pub c0: f64,
    pub delta: f64,
}

impl EnvelopeParams {
    /// Blend half-width defaults to half of its admissible maximum.
    pub fn new(fit: &PropagationFit, c0: f64, delta: Option<f64>) -> Result<Self> {
        let (c1, t1, c2, t2) = (fit.c1, fit.t1, fit.c2, fit.t2);
        if !(c1 > 0.0) {
            return Err(NflError::NonpositiveC1 { c1 });
        }
        if !(c0 > c2 * t2) {
            return Err(invalid("c0", format!("need C0 > c2*T2 = {}", c2 * t2)));
        }
        let cap = self_delta_cap(c1, c2, t2, c0);
        let delta = delta.unwrap_or(0.5 * cap);
        if !(delta > 0.0 && delta < cap) {
            return Err(invalid("delta", format!("need 0 < delta < {cap}")));
        }
        Ok(EnvelopeParams { c1, t1, c2, t2, c0, delta })
    }

    pub fn delta_cap(&self) -> f64 {
        self_delta_cap(self.c1, self.c2, self.t2, self.c0)
    }

    pub fn c_min(&self) -> f64 {
        0.5 * self.c1
    }

    /// Max slope of the blend: `c1/2 + (15/8) C0/δ`.
    pub fn c_max(&self) -> f64 {
        0.5 * self.c1 + 1.875 * self.c0 / self.delta
    }

    /// Max |X̃''|: `(10/√3) C0/δ²`.
    pub fn c_tilde_max(&self) -> f64 {
        10.0 / 3f64.sqrt() * self.c0 / (self.delta * self.delta)
    }

    pub fn d_max(&self) -> f64 {
        self.c0 + self.c1 * self.t1
    }

    /// Closed interval containing every hit gap.
    pub fn gap_interval(&self) -> (f64, f64) {
        ((self.c0 - self.c2 * self.t2) / (self.c2 - 0.5 * self.c1), (self.c0 + self.c1 * self.t1) / (0.5 * self.c1))
    }
}

fn self_delta_cap(c1: f64, c2: f64, t2: f64, c0: f64) -> f64 {
    0.5 * (c0 - c2 * t2) / (c2 - 0.5 * c1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothInterface {
    pub knots: Vec<f64>,
    pub pieces: Vec<Piece>,
    pub params: EnvelopeParams,
    /// Evaluate as `-X̃(-t)` (time-mirrored construction).
    #[serde(default)]
    pub mirrored: bool,
}

impl SmoothInterface {
    fn locate(&self, t: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.t1 < t);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    fn raw(&self, t: f64) -> (f64, f64) {
        let p = self.locate(t);
        let s = t - p.t0;
        (poly_eval(&p.coeffs, s), poly_deriv(&p.coeffs, s))
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.mirrored {
            -self.raw(-t).0
        } else {
            self.raw(t).0
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if self.mirrored {
            self.raw(-t).1
        } else {
            self.raw(t).1
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        let (a, b) = (self.pieces[0].t0, self.pieces[self.pieces.len() - 1].t1);
        if self.mirrored {
            (-b, -a)
        } else {
            (a, b)
        }
    }

    /// Largest value/derivative jump between consecutive pieces.
    pub fn knot_mismatch(&self) -> f64 {
        let mut m: f64 = 0.0;
        for w in self.pieces.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let s = a.t1 - a.t0;
            m = m.max((poly_eval(&a.coeffs, s) - b.coeffs[0]).abs());
            m = m.max((poly_deriv(&a.coeffs, s) - b.coeffs[1]).abs());
        }
        m
    }
}

/// Linear interpolant of a sampled trace.
fn interp(times: &[f64], x: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&s| s <= t);
    if i == 0 {
        return x[0];
    }
    if i >= times.len() {
        return x[times.len() - 1];
    }
    let (ta, tb) = (times[i - 1], times[i]);
    x[i - 1] + (x[i] - x[i - 1]) * (t - ta) / (tb - ta)
}

/// First `t ≥ start` where the interpolant reaches `base + C + slope (t - start)`.
fn next_hit(times: &[f64], x: &[f64], start: f64, base: f64, c: f64, slope: f64) -> Option<f64> {
    let z = |t: f64| base + c + slope * (t - start);
    let g = |t: f64, v: f64| v - z(t);
    let mut i = times.partition_point(|&s| s <= start);
    let mut ta = start;
    let mut ga = g(start, interp(times, x, start));
    if ga >= 0.0 {
        return Some(start);
    }
    while i < times.len() {
        let tb = times[i];
        let gb = g(tb, x[i]);
        if gb >= 0.0 {
            // linear on the segment, so the crossing is exact
            return Some(ta + (tb - ta) * (-ga) / (gb - ga));
        }
        ta = tb;
        ga = gb;
        i += 1;
    }
    None
}

fn line(t0: f64, t1: f64, y0: f64, slope: f64) -> Piece {
    Piece { t0, t1, coeffs: [y0, slope, 0.0, 0.0, 0.0, 0.0], blend: false }
}

/// Blend from slope `slope` at `y0` to `y0 + jump` with the same slope over width `h`.
fn blend(t0: f64, h: f64, y0: f64, slope: f64, jump: f64) -> Piece {
    let c = quintic_hermite(h, (y0, slope, 0.0), (y0 + slope * h + jump, slope, 0.0));
    Piece { t0, t1: t0 + h, coeffs: c, blend: true }
}

/// Hitting-time construction: after each hit the line restarts `jump_const` above the
/// trace, joined to the previous line by a quintic placed just after the hit.
fn hitting_construction(
    times: &[f64],
    x: &[f64],
    start: f64,
    jump_const: f64,
    slope: f64,
    delta: f64,
) -> (Vec<f64>, Vec<Piece>) {
    let end = times[times.len() - 1];
    let mut knots = vec![start];
    let mut pieces = Vec::new();
    let mut t_prev = start;
    let mut base = interp(times, x, start);
    // the current line is base + jump_const + slope (t - t_prev) from t_line
    let mut t_line = start;
    let mut y_line = base + jump_const;
    loop {
        let hit = next_hit(times, x, t_prev, base, jump_const, slope).filter(|&h| h > t_prev);
        match hit {
            Some(h) if h + delta <= end => {
                pieces.push(line(t_line, h, y_line, slope));
                let y_h = y_line + slope * (h - t_line);
                let xh = interp(times, x, h);
                let jump = xh + jump_const - y_h;
                pieces.push(blend(h, delta, y_h, slope, jump));
                knots.push(h);
                t_prev = h;
                base = xh;
                t_line = h + delta;
                y_line = xh + jump_const + slope * delta;
            }
            _ => {
                if end > t_line {
                    pieces.push(line(t_line, end, y_line, slope));
                }
                break;
            }
        }
    }
    (knots, pieces)
}

fn require_bounds(times: &[f64], x: &[f64], p: &EnvelopeParams) -> Result<()> {
    let fit = PropagationFit { c1: p.c1, t1: p.t1, c2: p.c2, t2: p.t2, pairs_checked: 0, certified: false };
    if let (_, Some((a, b))) = verify_propagation_bounds(times, x, &fit) {
        return Err(NflError::BoundsCertificateMissing { t0: a, t1: b });
    }
    Ok(())
}

/// Step 2: C¹ envelope of a continuous trace (linear interpolant of the samples),
/// started at `start`.
pub fn smooth_modification_from(
    times: &[f64],
    x: &[f64],
    params: &EnvelopeParams,
    start: f64,
) -> Result<SmoothInterface> {
    if times.len() < 2 || times.len() != x.len() {
        return Err(invalid("trace", "need matching times and values"));
    }
    require_bounds(times, x, params)?;
    let mut p = *params;
    for halvings in 0..=8 {
        let (knots, pieces) = hitting_construction(times, x, start, p.c0, 0.5 * p.c1, p.delta);
        let env = SmoothInterface { knots, pieces, params: p, mirrored: false };
        if blend_slope_ok(&env) {
            return Ok(env);
        }
        if halvings == 8 {
            break;
        }
        p.delta *= 0.5;
    }
    Err(NflError::BlendSlopeViolation { halvings: 8 })
}

pub fn smooth_modification(times: &[f64], x: &[f64], params: &EnvelopeParams) -> Result<SmoothInterface> {
    smooth_modification_from(times, x, params, times[0])
}

fn blend_slope_ok(env: &SmoothInterface) -> bool {
    let lo = 0.5 * env.params.c1;
    env.pieces.iter().filter(|p| p.blend).all(|p| {
        let h = p.t1 - p.t0;
        (0..=200).all(|k| poly_deriv(&p.coeffs, h * k as f64 / 200.0) >= lo - 1e-12)
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuousTrace {
    /// Upper envelope built forward from the first sample.
    pub forward: SmoothInterface,
    /// Lower envelope built backward from the last sample.
    pub backward: SmoothInterface,
    pub offset: f64,
    pub bound: f64,
    pub sup_forward: f64,
    pub sup_backward: f64,
    pub pass: bool,
}

/// Step 1: continuous traces above and below a jumpy trace, offset `c2 (T + T2)`.
pub fn continuous_modification(
    times: &[f64],
    x: &[f64],
    params: &EnvelopeParams,
    horizon: f64,
) -> Result<ContinuousTrace> {
    require_bounds(times, x, params)?;
    if !(horizon > 0.0) {
        return Err(invalid("horizon", "must be positive"));
    }
    let offset = params.c2 * (horizon + params.t2);
    // gaps are at least horizon, so a quarter of it keeps blends apart
    let width = 0.25 * horizon;
    let (knots, pieces) = hitting_construction(times, x, times[0], offset, 0.5 * params.c1, width);
    let mut p1 = *params;
    p1.c0 = offset;
    p1.delta = width;
    let forward = SmoothInterface { knots, pieces, params: p1, mirrored: false };
    let mt: Vec<f64> = times.iter().rev().map(|t| -t).collect();
    let mx: Vec<f64> = x.iter().rev().map(|v| -v).collect();
    let (knots, pieces) = hitting_construction(&mt, &mx, mt[0], offset, 0.5 * params.c1, width);
    let backward = SmoothInterface { knots, pieces, params: p1, mirrored: true };
    let bound = offset + params.c1 * params.t1 + params.c2 * params.t2;
    let sup = |e: &SmoothInterface| dense_deviation(e, times, x).1;
    let (sup_forward, sup_backward) = (sup(&forward), sup(&backward));
    Ok(ContinuousTrace {
        forward,
        backward,
        offset,
        bound,
        sup_forward,
        sup_backward,
        pass: sup_forward <= bound && sup_backward <= bound,
    })
}

/// (min, max) of X̃' and sup|X̃ - X| at sample resolution / 10.
fn dense_deviation(env: &SmoothInterface, times: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let (a, b) = env.domain();
    let (mut dmin, mut dmax, mut dev) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for w in times.windows(2) {
        for k in 0..10 {
            let t = w[0] + (w[1] - w[0]) * k as f64 / 10.0;
            if t < a || t > b {
                continue;
            }
            let d = env.derivative(t);
            dmin = dmin.min(d);
            dmax = dmax.max(d);
            dev = dev.max((env.value(t) - interp(times, x, t)).abs());
        }
    }
    let tl = times[times.len() - 1];
    if tl >= a && tl <= b {
        dev = dev.max((env.value(tl) - x[x.len() - 1]).abs());
    }
    (dmin, dev, dmax)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub knot_mismatch: f64,
    pub min_slope: f64,
    pub max_slope: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub sup_deviation: f64,
    pub d_max: f64,
    pub gaps: Vec<f64>,
    pub gap_interval: (f64, f64),
    pub gaps_pass: bool,
    pub monotone_pass: bool,
    pub c1_pass: bool,
    pub slope_pass: bool,
    pub deviation_pass: bool,
    pub pass: bool,
}

pub fn verify_envelope(env: &SmoothInterface, times: &[f64], x: &[f64]) -> EnvelopeReport {
    let p = env.params;
    let knot_mismatch = env.knot_mismatch();
    let (min_slope, sup_deviation, max_slope) = dense_deviation(env, times, x);
    let gaps: Vec<f64> = env.knots.windows(2).skip(1).map(|w| w[1] - w[0]).collect();
    let (glo, ghi) = p.gap_interval();
    let tol = 1e-9;
    let gaps_pass = gaps.iter().all(|&g| g >= glo - tol && g <= ghi + tol);
    let (a, b) = env.domain();
    let ts: Vec<f64> = times.iter().copied().filter(|&t| t >= a && t <= b).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| env.value(t)).collect();
    let mut monotone_pass = true;
    'outer: for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            if vals[j] - vals[i] < 0.5 * p.c1 * (ts[j] - ts[i]) - 1e-9 {
                monotone_pass = false;
                break 'outer;
            }
        }
    }
    let c1_pass = knot_mismatch <= 1e-10;
    let slope_pass = min_slope >= p.c_min() - 1e-9 && max_slope <= p.c_max() + 1e-9;
    let deviation_pass = sup_deviation <= p.d_max() + 1e-9;
    EnvelopeReport {
        knot_mismatch,
        min_slope,
        max_slope,
        c_min: p.c_min(),
        c_max: p.c_max(),
        sup_deviation,
        d_max: p.d_max(),
        gaps,
        gap_interval: (glo, ghi),
        gaps_pass,
        monotone_pass,
        c1_pass,
        slope_pass,
        deviation_pass,
        pass: c1_pass && slope_pass && deviation_pass && gaps_pass && monotone_pass,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartPointReport {
    pub start_a: f64,
    pub start_b: f64,
    pub compare_from: f64,
    pub sup_difference: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Builds envelopes from the first sample and from a start `gaps` hit-gaps later, then
/// compares them on the common domain after three gaps of the later start.
pub fn start_point_insensitivity(
    times: &[f64],
    x: &[f64],
    params: &EnvelopeParams,
    gaps: usize,
) -> Result<StartPointReport> {
    let a = smooth_modification(times, x, params)?;
    let g = a.params.gap_interval().1;
    let start_b = times[0] + gaps as f64 * g;
    if start_b >= times[times.len() - 1] {
        return Err(invalid("gaps", "trace too short for the second start point"));
    }
    let b = smooth_modification_from(times, x, params, start_b)?;
    let from = b.knots.get(3).copied().unwrap_or(start_b + 3.0 * g);
    let p = a.params;
    let bound = p.c0 + p.c1 * p.t1 + p.c2 * (p.delta.max(b.params.delta) + p.t2);
    let mut sup: f64 = 0.0;
    for &t in times.iter().filter(|&&t| t >= from) {
        sup = sup.max((a.value(t) - b.value(t)).abs());
    }
    Ok(StartPointReport {
        start_a: times[0],
        start_b,
        compare_from: from,
        sup_difference: sup,
        bound,
        pass: sup <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(c1: f64, t1: f64, c2: f64, t2: f64) -> PropagationFit {
        PropagationFit { c1, t1, c2, t2, pairs_checked: 0, certified: true }
    }

    #[test]
    fn hermite_conditions() {
        // pre-hit form on [-δ, 0]: δ(-δ) = -(c1/2)δ, δ(0) = C0, slopes c1/2, curvature 0
        let (c1, d, c0) = (1.0, 1.0, 2.0);
        let c = quintic_hermite(d, (-0.5 * c1 * d, 0.5 * c1, 0.0), (c0, 0.5 * c1, 0.0));
        assert!((poly_eval(&c, 0.0) + 0.5).abs() < 1e-12);
        assert!((poly_eval(&c, d) - c0).abs() < 1e-12);
        assert!((poly_deriv(&c, 0.0) - 0.5).abs() < 1e-12);
        assert!((poly_deriv(&c, d) - 0.5).abs() < 1e-12);
        assert!(poly_deriv2(&c, 0.0).abs() < 1e-12);
        assert!(poly_deriv2(&c, d).abs() < 1e-12);
    }

    #[test]
    fn blend_slope_extremes() {
        let p = EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 0.0), 2.0, Some(0.5)).unwrap();
        let b = blend(0.0, p.delta, 0.0, 0.5, p.c0);
        let mut mx: f64 = 0.0;
        let mut mx2: f64 = 0.0;
        for k in 0..=10_000 {
            let s = p.delta * k as f64 / 10_000.0;
            mx = mx.max(poly_deriv(&b.coeffs, s));
            mx2 = mx2.max(poly_deriv2(&b.coeffs, s).abs());
        }
        assert!((mx - p.c_max()).abs() < 1e-9);
        assert!((mx2 - p.c_tilde_max()).abs() < 1e-4 * p.c_tilde_max());
    }

    #[test]
    fn linear_trace_gap() {
        let ts: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let xs: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let p = EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 0.0), 2.0, None).unwrap();
        let env = smooth_modification(&ts, &xs, &p).unwrap();
        for w in env.knots.windows(2) {
            assert!((w[1] - w[0] - 2.0 / 1.5).abs() < 1e-9);
        }
        let r = verify_envelope(&env, &ts, &xs);
        assert!(r.pass, "{r:?}");
        assert!((r.sup_deviation - 2.0).abs() < 1e-9);
    }

    #[test]
    fn broken_blend_detected() {
        let ts: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let xs: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let p = EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 0.0), 2.0, None).unwrap();
        let mut env = smooth_modification(&ts, &xs, &p).unwrap();
        let i = env.pieces.iter().position(|p| p.blend).unwrap();
        env.pieces[i].coeffs[3] += 1e-3;
        assert!(!verify_envelope(&env, &ts, &xs).c1_pass);
    }

    #[test]
    fn params_validation() {
        assert!(EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 1.0), 1.5, None).is_err());
        assert!(EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 1.0), 3.0, Some(10.0)).is_err());
        assert!(EnvelopeParams::new(&fit(0.0, 0.0, 2.0, 1.0), 3.0, None).is_err());
    }

    #[test]
    fn uncertified_trace_rejected() {
        let ts: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let xs: Vec<f64> = ts.iter().map(|t| 3.0 * t).collect();
        let p = EnvelopeParams::new(&fit(1.0, 0.0, 2.0, 0.0), 2.0, None).unwrap();
        assert!(matches!(smooth_modification(&ts, &xs, &p), Err(NflError::BoundsCertificateMissing { .. })));
    }

    #[test]
    fn jumpy_trace_step1() {
        let ts: Vec<f64> = (0..=600).map(|k| k as f64 * 0.05).collect();
        let xs: Vec<f64> = ts.iter().map(|&t| 2.0 * t + if t > 10.0 { 0.8 } else { 0.0 }).collect();
        let f = crate::fronts::fit_propagation_bounds(&ts, &xs).unwrap();
        let p = EnvelopeParams::new(&f, f.c2 * f.t2 + 2.0, None).unwrap();
        let ct = continuous_modification(&ts, &xs, &p, 1.0).unwrap();
        assert!(ct.pass, "{} {} vs {}", ct.sup_forward, ct.sup_backward, ct.bound);
        assert!(ct.forward.knot_mismatch() < 1e-10 && ct.backward.knot_mismatch() < 1e-10);
        for &t in &ts {
            assert!(ct.forward.value(t) >= ct.backward.value(t) - 1e-9);
        }
    }
}
