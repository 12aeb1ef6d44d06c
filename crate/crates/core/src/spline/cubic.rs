// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Power-basis coefficients `[c0, c1, c2, c3]` of `c0 + c1·τ + c2·τ² + c3·τ³`.
pub type CubicCoeffs = [Vec3; 4];

/// Re-expands a cubic about `τ = s`.
pub fn taylor_shift(c: &CubicCoeffs, s: f64) -> CubicCoeffs {
    [
        c[0] + (c[1] + (c[2] + c[3] * s) * s) * s,
        c[1] + (c[2] * 2.0 + c[3] * (3.0 * s)) * s,
        c[2] + c[3] * (3.0 * s),
        c[3],
    ]
}

fn eval_poly(c: &CubicCoeffs, tau: f64) -> Vec3 {
    c[0] + (c[1] + (c[2] + c[3] * tau) * tau) * tau
}

fn eval_poly_d1(c: &CubicCoeffs, tau: f64) -> Vec3 {
    c[1] + (c[2] * 2.0 + c[3] * (3.0 * tau)) * tau
}

fn eval_poly_d2(c: &CubicCoeffs, tau: f64) -> Vec3 {
    c[2] * 2.0 + c[3] * (6.0 * tau)
}

/// Piecewise cubic curve in 3D over strictly increasing knots.
///
/// Piece `i` covers `[knots[i], knots[i+1]]` and is stored in power form
/// relative to `knots[i]`. Evaluation outside the domain clamps to the
/// nearest endpoint, so derivatives there are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSpline {
    knots: Vec<f64>,
    coeffs: Vec<CubicCoeffs>,
}

enum StartCondition {
    Natural,
    Velocity(Vec3),
}

impl PositionSpline {
    pub fn from_pieces(knots: Vec<f64>, coeffs: Vec<CubicCoeffs>) -> Result<Self> {
        if knots.len() < 2 || coeffs.len() + 1 != knots.len() {
            return Err(Error::domain("a spline needs n + 1 knots for n ≥ 1 pieces"));
        }
        check_increasing(&knots)?;
        Ok(Self { knots, coeffs })
    }

    /// Interpolating cubic spline with zero second derivative at both ends.
    pub fn natural(times: &[f64], points: &[Vec3]) -> Result<Self> {
        Self::interpolate(times, points, StartCondition::Natural)
    }

    /// Interpolating cubic spline with prescribed start velocity and a natural end.
    pub fn clamped_start(times: &[f64], points: &[Vec3], start_velocity: Vec3) -> Result<Self> {
        Self::interpolate(times, points, StartCondition::Velocity(start_velocity))
    }

    /// Single cubic Hermite piece matching position and velocity at both ends.
    pub fn hermite(t0: f64, t1: f64, p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::domain("hermite segment needs t1 > t0"));
        }
        Ok(Self {
            knots: vec![t0, t1],
            coeffs: vec![hermite_coeffs(t1 - t0, p0, v0, p1, v1)],
        })
    }

    fn interpolate(times: &[f64], points: &[Vec3], start: StartCondition) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::domain("times and points differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData(
                "spline interpolation needs at least 2 waypoints".into(),
            ));
        }
        check_increasing(times)?;
        let n = times.len() - 1;
        let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<Vec3> = (0..n).map(|i| (points[i + 1] - points[i]) / h[i]).collect();

        // Second-derivative unknowns M_0..M_n, tridiagonal system; M_n = 0 (natural end).
        let moments = {
            let mut sub = vec![0.0; n + 1];
            let mut diag = vec![1.0; n + 1];
            let mut sup = vec![0.0; n + 1];
            let mut rhs = vec![Vec3::zeros(); n + 1];
            if let StartCondition::Velocity(v0) = start {
                diag[0] = 2.0 * h[0];
                sup[0] = h[0];
                rhs[0] = (slope[0] - v0) * 6.0;
            }
            for i in 1..n {
                sub[i] = h[i - 1];
                diag[i] = 2.0 * (h[i - 1] + h[i]);
                sup[i] = h[i];
                rhs[i] = (slope[i] - slope[i - 1]) * 6.0;
            }
            solve_tridiagonal(&sub, &diag, &sup, rhs)
        };

        let coeffs = (0..n)
            .map(|i| {
                let (m0, m1) = (moments[i], moments[i + 1]);
                [
                    points[i],
                    slope[i] - (m0 * 2.0 + m1) * (h[i] / 6.0),
                    m0 * 0.5,
                    (m1 - m0) / (6.0 * h[i]),
                ]
            })
            .collect();
        Ok(Self {
            knots: times.to_vec(),
            coeffs,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[CubicCoeffs] {
        &self.coeffs
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0]
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let i = self
            .knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(self.coeffs.len() - 1);
        (i, t - self.knots[i])
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        let t = t.clamp(self.start_time(), self.end_time());
        let (i, tau) = self.locate(t);
        eval_poly(&self.coeffs[i], tau)
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        if t < self.start_time() || t > self.end_time() {
            return Vec3::zeros();
        }
        let (i, tau) = self.locate(t);
        eval_poly_d1(&self.coeffs[i], tau)
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        if t < self.start_time() || t > self.end_time() {
            return Vec3::zeros();
        }
        let (i, tau) = self.locate(t);
        eval_poly_d2(&self.coeffs[i], tau)
    }

    /// One-sided value, velocity and acceleration at the end of piece `i`.
    pub fn piece_end_state(&self, i: usize) -> (Vec3, Vec3, Vec3) {
        let c = &self.coeffs[i];
        let h = self.knots[i + 1] - self.knots[i];
        (eval_poly(c, h), eval_poly_d1(c, h), eval_poly_d2(c, h))
    }

    /// One-sided value, velocity and acceleration at the start of piece `i`.
    pub fn piece_start_state(&self, i: usize) -> (Vec3, Vec3, Vec3) {
        let c = &self.coeffs[i];
        (c[0], c[1], c[2] * 2.0)
    }

    /// Restriction to `[t0, t1]`. Past the end of the domain the curve is
    /// continued by a constant piece (the clamped value).
    pub fn slice(&self, t0: f64, t1: f64) -> Result<Self> {
        if !(t1 > t0) || t0 < self.start_time() {
            return Err(Error::domain(format!(
                "cannot slice [{t0}, {t1}] from a spline starting at {}",
                self.start_time()
            )));
        }
        let mut knots = vec![t0];
        let mut coeffs = Vec::new();
        let inner_end = t1.min(self.end_time());
        if t0 < self.end_time() {
            let (first, tau) = self.locate(t0);
            coeffs.push(taylor_shift(&self.coeffs[first], tau));
            for i in first + 1..self.coeffs.len() {
                if self.knots[i] >= inner_end {
                    break;
                }
                knots.push(self.knots[i]);
                coeffs.push(self.coeffs[i]);
            }
            knots.push(inner_end);
        }
        if t1 > inner_end || t0 >= self.end_time() {
            let end = self.eval(self.end_time());
            knots.push(t1);
            coeffs.push([end, Vec3::zeros(), Vec3::zeros(), Vec3::zeros()]);
        }
        Self::from_pieces(knots, coeffs)
    }

    /// Adds the cubic `poly(t − origin)` on every piece.
    pub fn add_polynomial(&mut self, origin: f64, poly: &CubicCoeffs) {
        for (k, c) in self.knots.iter().zip(self.coeffs.iter_mut()) {
            let shifted = taylor_shift(poly, k - origin);
            for (a, b) in c.iter_mut().zip(shifted) {
                *a += b;
            }
        }
    }

    /// Adds `poly(t − t0)` on the pieces lying inside `[t0, t1]`; both ends should be knots.
    pub fn add_polynomial_between(&mut self, t0: f64, t1: f64, poly: &CubicCoeffs) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if self.knots[i] >= t0 && self.knots[i + 1] <= t1 {
                let shifted = taylor_shift(poly, self.knots[i] - t0);
                for (a, b) in c.iter_mut().zip(shifted) {
                    *a += b;
                }
            }
        }
    }

    /// Splits the piece containing `t` so that `t` becomes a knot. No-op on existing knots
    /// or outside the open domain.
    pub fn insert_knot(&mut self, t: f64) {
        if t <= self.start_time() || t >= self.end_time() || self.knots.contains(&t) {
            return;
        }
        let (i, tau) = self.locate(t);
        let right = taylor_shift(&self.coeffs[i], tau);
        self.knots.insert(i + 1, t);
        self.coeffs.insert(i + 1, right);
    }

    /// Concatenates `other`, which must start exactly where `self` ends.
    pub fn append(&mut self, other: &PositionSpline) -> Result<()> {
        if other.start_time() != self.end_time() {
            return Err(Error::domain(format!(
                "cannot append a spline starting at {} to one ending at {}",
                other.start_time(),
                self.end_time()
            )));
        }
        self.knots.extend_from_slice(&other.knots[1..]);
        self.coeffs.extend_from_slice(&other.coeffs);
        Ok(())
    }

    pub fn shifted_in_time(&self, dt: f64) -> Self {
        Self {
            knots: self.knots.iter().map(|k| k + dt).collect(),
            coeffs: self.coeffs.clone(),
        }
    }
}

pub(crate) fn hermite_coeffs(h: f64, p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3) -> CubicCoeffs {
    let d = p1 - p0;
    [
        p0,
        v0,
        (d * 3.0 / h - v0 * 2.0 - v1) / h,
        (d * -2.0 / h + v0 + v1) / (h * h),
    ]
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("knot times must be finite"));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!(
            "knot times must be strictly increasing (t[{}] = {} after {})",
            i + 1,
            times[i + 1],
            times[i]
        )));
    }
    Ok(())
}

/// Thomas algorithm; the system is diagonally dominant for all callers.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], mut rhs: Vec<Vec3>) -> Vec<Vec3> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * sub[i]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * c[i];
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(ts: &[f64], f: impl Fn(f64) -> Vec3) -> Vec<Vec3> {
        ts.iter().map(|&t| f(t)).collect()
    }

    #[test]
    fn two_knots_is_a_line() {
        let s = PositionSpline::natural(&[0.0, 2.0], &[Vec3::zeros(), Vec3::new(2.0, 4.0, -2.0)])
            .unwrap();
        for k in 0..=20 {
            let t = k as f64 * 0.1;
            assert!((s.eval(t) - Vec3::new(t, 2.0 * t, -t)).norm() < 1e-12);
        }
    }

    #[test]
    fn natural_spline_is_c2_and_interpolates() {
        let ts = [0.0, 0.3, 0.7, 1.6, 2.0, 2.9];
        let ps = pts(&ts, |t| Vec3::new(t.sin(), (2.0 * t).cos(), t * t));
        let s = PositionSpline::natural(&ts, &ps).unwrap();
        for (t, p) in ts.iter().zip(&ps) {
            assert!((s.eval(*t) - p).norm() < 1e-12);
        }
        for i in 0..s.pieces().len() - 1 {
            let (p, v, a) = s.piece_end_state(i);
            let (q, w, b) = s.piece_start_state(i + 1);
            assert!((p - q).norm() < 1e-12);
            assert!((v - w).norm() < 1e-9);
            assert!((a - b).norm() < 1e-9);
        }
        assert!(s.acceleration(0.0).norm() < 1e-12);
        let (_, _, a_end) = s.piece_end_state(s.pieces().len() - 1);
        assert!(a_end.norm() < 1e-9);
    }

    #[test]
    fn clamped_start_matches_velocity() {
        let ts = [0.0, 1.0, 2.5, 3.0];
        let ps = pts(&ts, |t| Vec3::new(t, t * t, 0.0));
        let v0 = Vec3::new(1.0, -0.5, 0.2);
        let s = PositionSpline::clamped_start(&ts, &ps, v0).unwrap();
        assert!((s.velocity(0.0) - v0).norm() < 1e-12);
        for (t, p) in ts.iter().zip(&ps) {
            assert!((s.eval(*t) - p).norm() < 1e-12);
        }
    }

    #[test]
    fn clamped_start_reproduces_restricted_natural_spline() {
        let ts: Vec<f64> = (0..9).map(|i| i as f64 * 0.4).collect();
        let ps = pts(&ts, |t| Vec3::new(t.cos(), t.sin(), 0.1 * t));
        let full = PositionSpline::natural(&ts, &ps).unwrap();
        let k = 3;
        let tail = PositionSpline::clamped_start(&ts[k..], &ps[k..], full.velocity(ts[k])).unwrap();
        for i in 0..200 {
            let t = ts[k] + (ts[8] - ts[k]) * i as f64 / 199.0;
            assert!((tail.eval(t) - full.eval(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn hermite_endpoints() {
        let (p0, v0) = (Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.5, 0.0, 0.0));
        let (p1, v1) = (Vec3::new(1.0, 1.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        let s = PositionSpline::hermite(1.0, 1.5, p0, v0, p1, v1).unwrap();
        assert!((s.eval(1.0) - p0).norm() < 1e-15);
        assert!((s.velocity(1.0) - v0).norm() < 1e-12);
        assert!((s.eval(1.5) - p1).norm() < 1e-12);
        assert!((s.velocity(1.5) - v1).norm() < 1e-12);
    }

    #[test]
    fn clamps_outside_domain() {
        let s = PositionSpline::natural(&[0.0, 1.0], &[Vec3::zeros(), Vec3::x()]).unwrap();
        assert_eq!(s.eval(-1.0), Vec3::zeros());
        assert!((s.eval(5.0) - Vec3::x()).norm() < 1e-15);
        assert_eq!(s.velocity(5.0), Vec3::zeros());
    }

    #[test]
    fn slice_insert_and_add() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ps = pts(&ts, |t| Vec3::new(t * t, t, 1.0));
        let s = PositionSpline::natural(&ts, &ps).unwrap();
        let sl = s.slice(0.5, 2.5).unwrap();
        assert_eq!(sl.knots(), &[0.5, 1.0, 2.0, 2.5]);
        for i in 0..=40 {
            let t = 0.5 + 2.0 * i as f64 / 40.0;
            assert!((sl.eval(t) - s.eval(t)).norm() < 1e-12);
        }
        let ext = s.slice(2.0, 4.0).unwrap();
        assert_eq!(ext.knots(), &[2.0, 3.0, 4.0]);
        assert!((ext.eval(3.7) - s.eval(3.0)).norm() < 1e-12);

        let mut with_knot = s.clone();
        with_knot.insert_knot(1.25);
        assert_eq!(with_knot.knots().len(), 5);
        for i in 0..=30 {
            let t = i as f64 * 0.1;
            assert!((with_knot.eval(t) - s.eval(t)).norm() < 1e-12);
        }

        let mut shifted = s.clone();
        let poly = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::zeros(),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        shifted.add_polynomial(1.0, &poly);
        for i in 0..=30 {
            let t = i as f64 * 0.1;
            let tau = t - 1.0;
            let expected = s.eval(t) + Vec3::new(1.0, tau, tau * tau * tau);
            assert!((shifted.eval(t) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_duplicate_times() {
        let err = PositionSpline::natural(&[0.0, 1.0, 1.0], &[Vec3::zeros(); 3]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
