//! Smooth compactly supported test functions f, their power moments
//! E(f^j), a numeric Fourier transform, and the (m−1)-variable
//! F-construction.
//!
//! Note on conventions: results about these statistics can equivalently be
//! phrased with f̂ compactly supported. Here f itself is compactly
//! supported — closed-form bumps with exact supports are what make the
//! windowed correlation algorithms exact — and nothing on the statistics
//! side ever needs compact f̂.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

const QUAD_TOL: f64 = 1e-12;

/// Standard bump exp(−1/(1−t²)) on (−1,1), zero outside.
#[inline]
pub fn std_bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// ∫_{−1}^{1} exp(−1/(1−t²)) dt, precomputed to full precision.
pub const STD_BUMP_MASS: f64 = 0.443_993_816_168_079_437_82;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Bump {
        center: f64,
        halfwidth: f64,
        height: f64,
    },
    SmoothedBox {
        left: f64,
        right: f64,
        mollify: f64,
    },
}

/// A C_c^∞ test function with queryable exact support.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub shape: Shape,
    /// cumulative normalized bump on a uniform grid over [−1,1]
    /// (SmoothedBox only)
    cdf: Option<Vec<f64>>,
}

const CDF_GRID: usize = 1 << 13; // intervals; nodes = CDF_GRID + 1

impl TestFunction {
    pub fn bump(center: f64, halfwidth: f64, height: f64) -> Result<TestFunction> {
        if !(halfwidth > 0.0) || !(height > 0.0) {
            return Err(Error::domain(format!(
                "Bump requires halfwidth > 0 and height > 0, got {halfwidth}, {height}"
            )));
        }
        Ok(TestFunction {
            shape: Shape::Bump {
                center,
                halfwidth,
                height,
            },
            cdf: None,
        })
    }

    pub fn smoothed_box(left: f64, right: f64, mollify: f64) -> Result<TestFunction> {
        if !(left < right) || !(mollify > 0.0) {
            return Err(Error::domain(format!(
                "SmoothedBox requires left < right and mollify > 0, got [{left}, {right}], {mollify}"
            )));
        }
        // cumulative Simpson of the normalized bump at grid nodes
        let h = 2.0 / CDF_GRID as f64;
        let mut cdf = Vec::with_capacity(CDF_GRID + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..CDF_GRID {
            let a = -1.0 + i as f64 * h;
            acc += h / 6.0 * (std_bump(a) + 4.0 * std_bump(a + 0.5 * h) + std_bump(a + h));
            cdf.push(acc / STD_BUMP_MASS);
        }
        // force the exact endpoint so the plateau is exactly 1
        let last = *cdf.last().unwrap();
        for v in cdf.iter_mut() {
            *v /= last;
        }
        Ok(TestFunction {
            shape: Shape::SmoothedBox {
                left,
                right,
                mollify,
            },
            cdf: Some(cdf),
        })
    }

    /// Cumulative normalized bump Φ(u) = ∫_{−1}^{u} φ, clamped to [0,1],
    /// cubic interpolation on the cached grid.
    fn phi(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let cdf = self.cdf.as_ref().expect("phi only for SmoothedBox");
        let h = 2.0 / CDF_GRID as f64;
        let pos = (u + 1.0) / h;
        let i = (pos.floor() as usize).clamp(1, CDF_GRID - 2);
        let t = pos - i as f64;
        // 4-point Lagrange on nodes i-1..i+2
        let (y0, y1, y2, y3) = (cdf[i - 1], cdf[i], cdf[i + 1], cdf[i + 2]);
        let c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        (c0 * y0 + c1 * y1 + c2 * y2 + c3 * y3).clamp(0.0, 1.0)
    }

    /// f(x); exactly 0 outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Bump {
                center,
                halfwidth,
                height,
            } => height * std_bump((x - center) / halfwidth),
            Shape::SmoothedBox {
                left,
                right,
                mollify,
            } => {
                if x <= left - mollify || x >= right + mollify {
                    0.0
                } else {
                    self.phi((x - left) / mollify) - self.phi((x - right) / mollify)
                }
            }
        }
    }

    /// Exact support interval (open endpoints; f vanishes at and beyond them).
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            Shape::Bump {
                center, halfwidth, ..
            } => (center - halfwidth, center + halfwidth),
            Shape::SmoothedBox {
                left,
                right,
                mollify,
            } => (left - mollify, right + mollify),
        }
    }

    /// Whether f(−x) = f(x).
    pub fn is_even(&self) -> bool {
        match self.shape {
            Shape::Bump { center, .. } => center == 0.0,
            Shape::SmoothedBox { left, right, .. } => left == -right,
        }
    }

    /// E(f^j) = ∫ f(x)^j dx.
    pub fn expectation_power(&self, j: u32) -> Result<f64> {
        if j < 1 {
            return Err(Error::domain("expectation_power requires j >= 1"));
        }
        let (a, b) = self.support();
        Ok(quad::integrate(|x| self.eval(x).powi(j as i32), a, b, QUAD_TOL))
    }

    /// f̂(ξ) = ∫ f(x) e(−xξ) dx.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        let (a, b) = self.support();
        let cycles = (xi.abs() * (b - a)).ceil() as usize;
        let panels = (2 * cycles).max(1);
        quad::integrate_complex_panels(
            |x| self.eval(x) * Complex64::from_polar(1.0, -2.0 * PI * xi * x),
            a,
            b,
            panels,
            QUAD_TOL,
        )
    }

    /// F(z_1,…,z_{m−1}) = ∫ f(s) f(Z_1+s) f(Z_2+s) ⋯ f(Z_{m−1}+s) ds
    /// where Z_i = z_i + z_{i+1} + ⋯ + z_{m−1}.
    pub fn construct_f(&self, z: &[f64]) -> Result<f64> {
        if z.is_empty() {
            return Err(Error::domain("construct_f requires m >= 2 (non-empty z)"));
        }
        let mut suffix = Vec::with_capacity(z.len());
        let mut acc = 0.0;
        for &zi in z.iter().rev() {
            acc += zi;
            suffix.push(acc);
        }
        suffix.reverse();
        let (a0, b0) = self.support();
        let mut lo = a0;
        let mut hi = b0;
        for &s in &suffix {
            lo = lo.max(a0 - s);
            hi = hi.min(b0 - s);
        }
        if lo >= hi {
            return Ok(0.0);
        }
        Ok(quad::integrate(
            |s| {
                let mut p = self.eval(s);
                for &sh in &suffix {
                    if p == 0.0 {
                        return 0.0;
                    }
                    p *= self.eval(sh + s);
                }
                p
            },
            lo,
            hi,
            QUAD_TOL,
        ))
    }
}
