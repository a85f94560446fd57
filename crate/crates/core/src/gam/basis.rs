//! Clamped cubic B-spline basis over a set of breakpoints.
//!
//! Breakpoints `t_0 < ... < t_m` are extended with three repeated copies of
//! each end, giving `m + 3` basis functions. Outside `[t_0, t_m]` each basis
//! function continues along its tangent at the nearest end.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicBasis {
    /// Full knot vector with repeated ends.
    knots: Vec<f64>,
    size: usize,
}

impl CubicBasis {
    pub fn new(breakpoints: &[f64]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::TooFewKnots(breakpoints.len()));
        }
        if breakpoints.iter().any(|k| !k.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("knots must be finite and strictly ascending".into()));
        }
        let first = breakpoints[0];
        let last = breakpoints[breakpoints.len() - 1];
        let mut knots = vec![first; DEGREE];
        knots.extend_from_slice(breakpoints);
        knots.extend(std::iter::repeat(last).take(DEGREE));
        Ok(CubicBasis { size: breakpoints.len() + DEGREE - 1, knots })
    }

    /// Number of basis functions.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lower(&self) -> f64 {
        self.knots[DEGREE]
    }

    pub fn upper(&self) -> f64 {
        self.knots[self.knots.len() - 1 - DEGREE]
    }

    /// Knot span index `s` with `knots[s] <= x < knots[s + 1]`, the last span
    /// for `x == upper`.
    fn span(&self, x: f64) -> usize {
        let last_span = self.size - 1;
        if x >= self.upper() {
            return last_span;
        }
        if x <= self.lower() {
            return DEGREE;
        }
        // knots[DEGREE..=last_span + 1] are the breakpoints
        let mut lo = DEGREE;
        let mut hi = last_span + 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Nonzero basis functions of degree `p` at `x` in span `s`:
    /// `N_{s-p}, ..., N_s`.
    fn nonzero(&self, s: usize, x: f64, p: usize) -> [f64; DEGREE + 1] {
        let u = &self.knots;
        let mut n = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[s + 1 - j];
            right[j] = u[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// Values (and first derivatives) of the nonzero cubic functions at `x`
    /// inside the knot range, with the index of the first one.
    fn local(&self, x: f64) -> (usize, [f64; DEGREE + 1], [f64; DEGREE + 1]) {
        let s = self.span(x);
        let values = self.nonzero(s, x, DEGREE);
        let lower = self.nonzero(s, x, DEGREE - 1);
        let u = &self.knots;
        let mut deriv = [0.0; DEGREE + 1];
        // N'_{i,3} = 3 (N_{i,2} / (u[i+3] - u[i]) - N_{i+1,2} / (u[i+4] - u[i+1]))
        for (r, d) in deriv.iter_mut().enumerate() {
            let i = s - DEGREE + r;
            let left = if r >= 1 { lower[r - 1] } else { 0.0 };
            let right = if r < DEGREE { lower[r] } else { 0.0 };
            let mut v = 0.0;
            let den = u[i + DEGREE] - u[i];
            if den > 0.0 {
                v += left / den;
            }
            let den = u[i + DEGREE + 1] - u[i + 1];
            if den > 0.0 {
                v -= right / den;
            }
            *d = DEGREE as f64 * v;
        }
        (s - DEGREE, values, deriv)
    }

    /// Nonzero basis values at `x` (at most four) and the index of the first.
    pub fn eval_local(&self, x: f64) -> (usize, [f64; DEGREE + 1]) {
        let clamped = x.clamp(self.lower(), self.upper());
        let (first, mut values, deriv) = self.local(clamped);
        if clamped != x {
            let dx = x - clamped;
            for (v, d) in values.iter_mut().zip(deriv) {
                *v += d * dx;
            }
        }
        (first, values)
    }

    /// All basis values at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.size];
        let (first, values) = self.eval_local(x);
        row[first..first + DEGREE + 1].copy_from_slice(&values);
        row
    }

    /// `sum_j coefficients[j] * B_j(x)`.
    pub fn combine(&self, coefficients: &[f64], x: f64) -> f64 {
        let (first, values) = self.eval_local(x);
        values.iter().zip(&coefficients[first..]).map(|(v, c)| v * c).sum()
    }
}

/// Basis matrix: one row per value, one column per basis function.
pub fn build_spline_basis(values: &[f64], breakpoints: &[f64]) -> Result<DMatrix<f64>> {
    let basis = CubicBasis::new(breakpoints)?;
    let mut m = DMatrix::zeros(values.len(), basis.size());
    for (i, &x) in values.iter().enumerate() {
        let (first, local) = basis.eval_local(x);
        for (r, v) in local.iter().enumerate() {
            m[(i, first + r)] = *v;
        }
    }
    Ok(m)
}
