//! Dyadic smooth partitions of unity, the smoothed exponential sums
//! E_{q,u}(s), both van der Corput B-process transforms E^(B) and E^(BB),
//! a stationary-phase evaluator, and side-by-side comparison of the three
//! variants on s-grids.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::quad;
use crate::sequences::PhaseModel;
use crate::testfn::{std_bump, TestFunction, STD_BUMP_MASS};
use num_complex::Complex64;
use std::cell::OnceCell;
use std::f64::consts::PI;
use std::sync::OnceLock;

#[inline]
fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x.fract()).sin_cos();
    Complex64::new(c, s)
}

// ---------------------------------------------------------------------------
// smoothstep: antiderivative of the normalized standard bump, 0 at t<=0,
// 1 at t>=1; every window transition is a rescaling of this one function,
// which makes adjacent windows sum to 1 exactly.

const STEP_GRID: usize = 1 << 13;

fn step_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 2.0 / STEP_GRID as f64;
        let mut cdf = Vec::with_capacity(STEP_GRID + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..STEP_GRID {
            let a = -1.0 + i as f64 * h;
            acc += h / 6.0 * (std_bump(a) + 4.0 * std_bump(a + 0.5 * h) + std_bump(a + h));
            cdf.push(acc / STD_BUMP_MASS);
        }
        let last = *cdf.last().unwrap();
        for v in cdf.iter_mut() {
            *v /= last;
        }
        cdf
    })
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let table = step_table();
    let pos = t * STEP_GRID as f64;
    let i = (pos.floor() as usize).clamp(1, STEP_GRID - 2);
    let x = pos - i as f64;
    let (y0, y1, y2, y3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    let c0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
    let c1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
    let c2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
    let c3 = (x + 1.0) * x * (x - 1.0) / 6.0;
    (c0 * y0 + c1 * y1 + c2 * y2 + c3 * y3).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// windows

/// One element of a smooth partition of unity: rises from 0 to 1 on
/// [a, b], plateaus on [b, c], falls back to 0 on [c, d].
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Window {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.d {
            0.0
        } else if x < self.b {
            smoothstep((x - self.a) / (self.b - self.a))
        } else if x <= self.c {
            1.0
        } else {
            1.0 - smoothstep((x - self.c) / (self.d - self.c))
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.d)
    }
}

/// The 𝔑_q (n-side) and 𝔎_u (k-side) window families for one scale Q.
///
/// Coarse windows (q < Q) are dyadic with supp(𝔑_q) ⊂ [e^q/2, 2e^q) and
/// exact pairwise-complementary transitions. Fine windows (Q ≤ q < 2Q)
/// have equal width e^Q/(2Q) with transition zones of width e^Q/(4Q) and
/// two-window overlap; the prescription in circulation states fine-window
/// support endpoints that are mutually inconsistent by a bounded factor,
/// so this equal-width reading is used instead (all derivative bounds and
/// the partition identity hold for it).
#[derive(Debug, Clone)]
pub struct WindowFamily {
    /// dyadic cap: partition of unity certified on 1 < x < e^Q
    pub q_cap: usize,
    pub u_cap: usize,
    /// 𝔑_q for q = 0..2Q-1
    pub n_windows: Vec<Window>,
    /// 𝔎_u for u = 0..=U (negative u by 𝔎_{−u}(k) = 𝔎_u(−k))
    pub k_windows: Vec<Window>,
}

fn dyadic_chain(count: usize) -> Vec<Window> {
    // window 0: plateau [1, e/2], fall on [e/2, 2], rise on [1/2, 1]
    let mut out = vec![Window {
        a: 0.5,
        b: 1.0,
        c: 0.5 * 1f64.exp(),
        d: 2.0,
    }];
    for q in 1..count {
        let eq = (q as f64).exp();
        out.push(Window {
            a: 0.5 * eq,
            b: 2.0 * (q as f64 - 1.0).exp(),
            c: 0.5 * (q as f64 + 1.0).exp(),
            d: 2.0 * eq,
        });
    }
    out
}

/// Build the window family for scales Q (n-side) and U (k-side).
pub fn make_windows(q_cap: usize, u_cap: usize) -> Result<WindowFamily> {
    if q_cap < 2 || u_cap < 1 {
        return Err(Error::domain("make_windows requires Q >= 2 and U >= 1"));
    }
    let eq = (q_cap as f64).exp();
    let width = eq / (2.0 * q_cap as f64);
    let tau = 0.5 * width;
    let mut n_windows = dyadic_chain(q_cap);
    // splice the last coarse window into the first fine transition
    n_windows[q_cap - 1].d = 0.5 * eq + tau;
    for j in 0..q_cap {
        let l = 0.5 * eq + j as f64 * width;
        n_windows.push(Window {
            a: l,
            b: l + tau,
            c: l + width,
            d: l + width + tau,
        });
    }
    Ok(WindowFamily {
        q_cap,
        u_cap,
        n_windows,
        k_windows: dyadic_chain(u_cap + 1),
    })
}

impl WindowFamily {
    pub fn n_window(&self, q: usize) -> Result<&Window> {
        self.n_windows
            .get(q)
            .ok_or_else(|| Error::domain(format!("no N-window q={q}")))
    }

    pub fn k_window(&self, u: usize) -> Result<&Window> {
        self.k_windows
            .get(u)
            .ok_or_else(|| Error::domain(format!("no K-window u={u}")))
    }

    /// Σ_q 𝔑_q(x); equals 1 for 1 < x < e^Q.
    pub fn n_partition_sum(&self, x: f64) -> f64 {
        self.n_windows.iter().map(|w| w.eval(x)).sum()
    }

    /// Σ_u 𝔎_u(k) over u = −U..U; equals 1 for 1 ≤ |k| < e^U.
    pub fn k_partition_sum(&self, k: f64) -> f64 {
        self.k_windows.iter().map(|w| w.eval(k.abs())).sum()
    }
}

// ---------------------------------------------------------------------------
// engine

const EXACT_BUDGET: f64 = 2e10;
const DD_REFRESH: i64 = 1024;

/// Precomputed s-independent per-k data for one (q, u) pair.
pub struct QuKernel {
    pub q: usize,
    pub u: usize,
    pub k_lo: i64,
    /// 𝔎_u(k) f̂(k/N) per k
    pub coeff: Vec<f64>,
    /// Σ_n 𝔑_q(n) e(kω(n)) per k
    pub exact_inner: Vec<Complex64>,
    /// Σ_r 𝔑_q(x_{k,r})/√(k|ω″(x_{k,r})|) e(φ(k,r)) per k
    pub b_inner: Vec<Complex64>,
}

struct FhatCache {
    xmax: f64,
    values: Vec<f64>,
}

/// Evaluator of the three variants for one phase model, window family,
/// test function, and size N.
pub struct ExpSumEngine<'a> {
    pub model: &'a PhaseModel,
    pub family: &'a WindowFamily,
    pub f: &'a TestFunction,
    pub n: f64,
    fhat: OnceCell<FhatCache>,
}

impl<'a> ExpSumEngine<'a> {
    pub fn new(
        model: &'a PhaseModel,
        family: &'a WindowFamily,
        f: &'a TestFunction,
        n: f64,
    ) -> ExpSumEngine<'a> {
        ExpSumEngine {
            model,
            family,
            f,
            n,
            fhat: OnceCell::new(),
        }
    }

    /// f̂ at |ξ|, interpolated from a uniform cache grid (f is even in every
    /// run this engine is used for, and 𝔎 makes k>0; the cache stores the
    /// real part, which is exact for even f).
    fn fhat(&self, xi: f64) -> f64 {
        let cache = self.fhat.get_or_init(|| {
            let xmax = 2.0 * (self.family.u_cap as f64).exp() / self.n + 1.0;
            let m = 8192usize;
            let values = (0..=m)
                .map(|i| self.f.fourier(xmax * i as f64 / m as f64).re)
                .collect();
            FhatCache { xmax, values }
        });
        let x = xi.abs();
        if x >= cache.xmax {
            return self.f.fourier(x).re;
        }
        let m = cache.values.len() - 1;
        let pos = x / cache.xmax * m as f64;
        let i = (pos.floor() as usize).clamp(1, m - 2);
        let t = pos - i as f64;
        let (y0, y1, y2, y3) = (
            cache.values[i - 1],
            cache.values[i],
            cache.values[i + 1],
            cache.values[i + 2],
        );
        let c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        c0 * y0 + c1 * y1 + c2 * y2 + c3 * y3
    }

    /// Precompute the s-independent inner sums for (q, u). This is where
    /// essentially all the work happens; evaluating any variant on an
    /// s-grid afterwards costs O(e^u) per point.
    pub fn kernel(&self, q: usize, u: usize, with_b: bool) -> Result<QuKernel> {
        let nw = *self.family.n_window(q)?;
        let kw = *self.family.k_window(u)?;
        let k_lo = (kw.a.ceil() as i64).max(1);
        let k_hi = kw.d.floor() as i64;
        let n_lo = (nw.a.ceil() as i64).max(1);
        let n_hi = nw.d.floor() as i64;
        let k_count = (k_hi - k_lo + 1).max(0) as usize;
        let n_count = (n_hi - n_lo + 1).max(0) as usize;
        if k_count as f64 * n_count as f64 > EXACT_BUDGET {
            return Err(Error::Budget(format!(
                "exact sum needs {n_count} x {k_count} terms; reduce q or u"
            )));
        }

        let coeff: Vec<f64> = (k_lo..=k_hi)
            .map(|k| kw.eval(k as f64) * self.fhat(k as f64 / self.n))
            .collect();

        // exact inner sums: for each n, sweep k with a phase recurrence,
        // re-anchoring with double-double every DD_REFRESH steps so the
        // phase error stays at the ulp(ω(n)) level rather than growing
        let mut exact_inner = vec![Complex64::new(0.0, 0.0); k_count];
        for n in n_lo..=n_hi {
            let wn = nw.eval(n as f64);
            if wn == 0.0 {
                continue;
            }
            let omega_n = self.model.omega(n as f64);
            let omega_dd = Dd::from(omega_n);
            let step = e(omega_n);
            let mut z = Complex64::new(0.0, 0.0);
            for (i, k) in (k_lo..=k_hi).enumerate() {
                if (k - k_lo) % DD_REFRESH == 0 {
                    z = e(omega_dd.mul_f64(k as f64).fract().to_f64());
                } else {
                    z *= step;
                }
                exact_inner[i] += wn * z;
            }
        }

        let b_inner = if with_b {
            self.b_inner(&nw, k_lo, k_hi)?
        } else {
            Vec::new()
        };

        Ok(QuKernel {
            q,
            u,
            k_lo,
            coeff,
            exact_inner,
            b_inner,
        })
    }

    fn b_inner(&self, nw: &Window, k_lo: i64, k_hi: i64) -> Result<Vec<Complex64>> {
        if nw.a <= self.model.branch_start() {
            return Err(Error::domain(format!(
                "B-process needs supp 𝔑_q beyond the inflection point e^(A-1); \
                 window starts at {}",
                nw.a
            )));
        }
        // ω′ is decreasing: r/k ranges over [ω′(d), ω′(a)]
        let y_hi = self.model.omega_deriv(1, nw.a)?;
        let y_lo = self.model.omega_deriv(1, nw.d)?;
        let mut out = Vec::with_capacity((k_hi - k_lo + 1) as usize);
        for k in k_lo..=k_hi {
            let kf = k as f64;
            let r_lo = ((kf * y_lo).ceil() as i64).max(1);
            let r_hi = (kf * y_hi).floor() as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut x = f64::NAN;
            for r in r_lo..=r_hi {
                let y = r as f64 / kf;
                x = if x.is_nan() {
                    self.model.omega_tilde(y)?
                } else {
                    // warm start from the previous root; ω′ decreasing in x
                    newton_tilde(self.model, y, x)
                };
                let w = nw.eval(x);
                if w == 0.0 {
                    continue;
                }
                let (_, d2) = self.model.omega_d12(x);
                let phi = kf * self.model.omega(x) - r as f64 * x;
                acc += w / (kf * d2.abs()).sqrt() * e(phi);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// E_{q,u}(s) from a precomputed kernel.
    pub fn exact_from_kernel(&self, kern: &QuKernel, s: f64) -> Complex64 {
        self.sum_outer(kern, &kern.exact_inner, s)
    }

    /// E^(B)_{q,u}(s) from a precomputed kernel (built with `with_b`).
    pub fn b_from_kernel(&self, kern: &QuKernel, s: f64) -> Complex64 {
        e(-0.125) * self.sum_outer(kern, &kern.b_inner, s)
    }

    fn sum_outer(&self, kern: &QuKernel, inner: &[Complex64], s: f64) -> Complex64 {
        let step = e(s);
        let s_dd = Dd::from(s);
        let mut z = Complex64::new(0.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in kern.coeff.iter().enumerate() {
            let k = kern.k_lo + i as i64;
            if i as i64 % DD_REFRESH == 0 {
                z = e(s_dd.mul_f64(k as f64).fract().to_f64());
            } else {
                z *= step;
            }
            acc += c * z * inner[i];
        }
        acc / self.n
    }

    /// E_{q,u}(s) directly (builds the kernel; prefer kernels for grids).
    pub fn exact_sum(&self, q: usize, u: usize, s: f64) -> Result<Complex64> {
        Ok(self.exact_from_kernel(&self.kernel(q, u, false)?, s))
    }

    /// E^(B)_{q,u}(s) directly.
    pub fn b_sum(&self, q: usize, u: usize, s: f64) -> Result<Complex64> {
        Ok(self.b_from_kernel(&self.kernel(q, u, true)?, s))
    }

    /// E^(BB)_{q,u}(s): the fully closed-form double sum
    /// (1/N) Σ_r Σ_h f̂(μ/N) 𝔎_u(μ) 𝔑_q(x) (μ/r) e(−r·x),
    /// x = ω⁻¹(h−s), μ = r/ω′(x); no root-finding. The two ±1/8 phases of
    /// the successive B-process applications cancel (ω″ < 0 on the branch,
    /// then ∂²φ > 0), so there is no eighth-phase prefactor.
    pub fn bb_sum(&self, q: usize, u: usize, s: f64) -> Result<Complex64> {
        let nw = *self.family.n_window(q)?;
        let kw = *self.family.k_window(u)?;
        if nw.a <= self.model.branch_start() {
            return Err(Error::domain(
                "B-process needs supp 𝔑_q beyond the inflection point",
            ));
        }
        let h_lo = (self.model.omega(nw.a) + s).ceil() as i64;
        let h_hi = (self.model.omega(nw.d) + s).floor() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for h in h_lo.max(0)..=h_hi {
            let t = h as f64 - s;
            if t <= 0.0 {
                continue;
            }
            let x = self.model.omega_inv(t)?;
            let w = nw.eval(x);
            if w == 0.0 {
                continue;
            }
            let (d1, _) = self.model.omega_d12(x);
            let r_lo = ((kw.a * d1).ceil() as i64).max(1);
            let r_hi = (kw.d * d1).floor() as i64;
            let x_dd = Dd::from(x);
            let step = e(-x);
            let mut z = Complex64::new(0.0, 0.0);
            let mut h_acc = Complex64::new(0.0, 0.0);
            for r in r_lo..=r_hi {
                if (r - r_lo) % 256 == 0 {
                    z = e(-x_dd.mul_f64(r as f64).fract().to_f64());
                } else {
                    z *= step;
                }
                let mu = r as f64 / d1;
                h_acc += self.fhat(mu / self.n) * kw.eval(mu) * z;
            }
            // μ/r = 1/ω′(x) is constant across the r-sum
            acc += w / d1 * h_acc;
        }
        Ok(acc / self.n)
    }

    /// Discrete L^p comparison of the three variants on an s-grid, with
    /// the stationary-phase condition values for this (q, u) recorded.
    pub fn compare_variants(
        &self,
        q: usize,
        u: usize,
        s_grid: &[f64],
        p: u32,
    ) -> Result<VariantReport> {
        let kern = self.kernel(q, u, true)?;
        self.compare_variants_with_kernel(&kern, s_grid, p)
    }

    /// Same as [`compare_variants`](Self::compare_variants) but reusing a
    /// kernel the caller already paid for.
    pub fn compare_variants_with_kernel(
        &self,
        kern: &QuKernel,
        s_grid: &[f64],
        p: u32,
    ) -> Result<VariantReport> {
        let (q, u) = (kern.q, kern.u);
        if s_grid.is_empty() || p == 0 {
            return Err(Error::domain("compare_variants needs a grid and p >= 1"));
        }
        let exact: Vec<Complex64> = s_grid
            .iter()
            .map(|&s| self.exact_from_kernel(kern, s))
            .collect();
        let b: Vec<Complex64> = s_grid.iter().map(|&s| self.b_from_kernel(kern, s)).collect();
        let bb: Vec<Complex64> = s_grid
            .iter()
            .map(|&s| self.bb_sum(q, u, s))
            .collect::<Result<_>>()?;
        let lp = |v: &[Complex64]| -> f64 {
            let mean = v.iter().map(|z| z.norm().powi(p as i32)).sum::<f64>() / v.len() as f64;
            mean.powf(1.0 / p as f64)
        };
        let diff = |a: &[Complex64], b: &[Complex64]| -> f64 {
            let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            lp(&d)
        };
        let (qf, uf) = (q as f64, u as f64);
        let a_exp = self.model.a();
        let lambda_psi = uf.exp() * qf.powf(a_exp - 1.0);
        let omega_psi = uf.exp();
        let omega_w = uf.exp();
        let lambda_w = (qf - uf / 2.0).exp();
        Ok(VariantReport {
            q,
            u,
            p,
            norm_exact: lp(&exact),
            norm_b: lp(&b),
            norm_bb: lp(&bb),
            d_exact_b: diff(&exact, &b),
            d_b_bb: diff(&b, &bb),
            d_exact_bb: diff(&exact, &bb),
            lambda_psi,
            omega_psi,
            omega_w,
            lambda_w,
            z: omega_psi + lambda_psi + omega_w + lambda_w + 1.0,
            delta: 1.0 / 11.0,
        })
    }
}

/// Newton refinement of ω′(x) = y from a warm start.
fn newton_tilde(model: &PhaseModel, y: f64, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..12 {
        let (d1, d2) = model.omega_d12(x);
        let step = (d1 - y) / d2;
        let xn = x - step;
        // ω′ is convex-decreasing here; keep the iterate on the branch
        x = if xn > model.branch_start() { xn } else { 0.5 * x };
        if step.abs() <= 1e-11 * x {
            break;
        }
    }
    x
}

/// L^p comparison of Exact / B / BB plus the scale-condition values
/// (Λ_ψ = e^u q^{A−1}, Ω_ψ = Ω_w = e^u, Λ_w = e^{q−u/2}, δ = 1/11) that the
/// stationary-phase proposition marginally requires at desk scale.
#[derive(Debug, Clone)]
pub struct VariantReport {
    pub q: usize,
    pub u: usize,
    pub p: u32,
    pub norm_exact: f64,
    pub norm_b: f64,
    pub norm_bb: f64,
    pub d_exact_b: f64,
    pub d_b_bb: f64,
    pub d_exact_bb: f64,
    pub lambda_psi: f64,
    pub omega_psi: f64,
    pub omega_w: f64,
    pub lambda_w: f64,
    pub z: f64,
    pub delta: f64,
}

// ---------------------------------------------------------------------------
// stationary points of k ω(x) − r x

/// x_{k,r} = ω̃(r/k), the stationary point of x ↦ kω(x) − rx.
pub fn stationary_x(model: &PhaseModel, k: u64, r: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("stationary_x requires k >= 1"));
    }
    model.omega_tilde(r as f64 / k as f64)
}

/// φ(k,r) = kω(x_{k,r}) − r·x_{k,r}.
pub fn phase_phi(model: &PhaseModel, k: u64, r: u64) -> Result<f64> {
    let x = stationary_x(model, k, r)?;
    Ok(k as f64 * model.omega(x) - r as f64 * x)
}

/// μ_{h,r,s} = r / ω′(ω⁻¹(h−s)), the stationary point of
/// k ↦ φ(k,r) − (h−s)k in closed form.
pub fn mu_of(model: &PhaseModel, h: i64, r: u64, s: f64) -> Result<f64> {
    let t = h as f64 - s;
    if t <= 0.0 {
        return Err(Error::domain("mu_of requires h - s > 0"));
    }
    let x = model.omega_inv(t)?;
    Ok(r as f64 / model.omega_deriv(1, x)?)
}

// ---------------------------------------------------------------------------
// stationary phase and van der Corput

/// Scale parameters in the sense of the stationary-phase proposition.
#[derive(Debug, Clone, Copy)]
pub struct ScaleParams {
    pub lambda_psi: f64,
    pub omega_psi: f64,
    pub omega_w: f64,
    pub lambda_w: f64,
}

/// Stationary-phase approximation of ∫ w(x) e(ψ(x)) dx up to the given
/// order:
///   e(ψ(x₀))/√|ψ″(x₀)| · Σ_{n≤order} pₙ,
///   pₙ = (e(σ/8)/n!) (σi/(4π|ψ″(x₀)|))ⁿ G^(2n)(x₀),  σ = sign ψ″,
/// with G = w·e(H), H = ψ − ψ(x₀) − ½ψ″(x₀)(x−x₀)². The n-th coefficient
/// here carries a (2π)⁻ⁿ relative to the e^{iψ}-convention literature,
/// which the e(·) = e^{2πi·} convention requires (order 1 would otherwise
/// not improve on order 0; checked against Gaussian–Fresnel closed forms).
/// G-derivatives are central finite differences with step Ω_w/64.
pub fn stationary_phase(
    w: &dyn Fn(f64) -> f64,
    psi: &dyn Fn(f64) -> f64,
    dpsi: &dyn Fn(f64) -> f64,
    d2psi: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    scales: ScaleParams,
    order: usize,
) -> Result<Complex64> {
    if order > 3 {
        return Err(Error::domain("stationary_phase supports order <= 3"));
    }
    let (ga, gb) = (dpsi(a), dpsi(b));
    if ga == 0.0 || gb == 0.0 || ga.signum() == gb.signum() {
        return Err(Error::NoCriticalPoint);
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if dpsi(m).signum() == ga.signum() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mut x0 = 0.5 * (lo + hi);
    for _ in 0..4 {
        let step = dpsi(x0) / d2psi(x0);
        let xn = x0 - step;
        if xn > a && xn < b {
            x0 = xn;
        }
    }
    let curv = d2psi(x0);
    if curv == 0.0 {
        return Err(Error::domain("degenerate critical point"));
    }
    let sigma = curv.signum();
    let psi0 = psi(x0);
    let g = |x: f64| -> Complex64 {
        let h = psi(x) - psi0 - 0.5 * curv * (x - x0) * (x - x0);
        w(x) * e(h)
    };
    let eighth = e(sigma * 0.125);
    let ratio = Complex64::new(0.0, sigma / (4.0 * PI * curv.abs()));
    let step = scales.omega_w / 64.0;
    let mut series = Complex64::from(w(x0)); // G(x0) = w(x0), H(x0) = 0
    if order >= 1 {
        let g2 = (-g(x0 + 2.0 * step) + 16.0 * g(x0 + step) - Complex64::from(30.0 * w(x0))
            + 16.0 * g(x0 - step)
            - g(x0 - 2.0 * step))
            / (12.0 * step * step);
        series += ratio * g2;
    }
    if order >= 2 {
        let h4 = step * step * step * step;
        let g4 = (g(x0 - 2.0 * step) - 4.0 * g(x0 - step) + Complex64::from(6.0 * w(x0))
            - 4.0 * g(x0 + step)
            + g(x0 + 2.0 * step))
            / h4;
        series += 0.5 * ratio * ratio * g4;
    }
    if order >= 3 {
        let h6 = step.powi(6);
        let g6 = (g(x0 - 3.0 * step) - 6.0 * g(x0 - 2.0 * step) + 15.0 * g(x0 - step)
            - Complex64::from(20.0 * w(x0))
            + 15.0 * g(x0 + step)
            - 6.0 * g(x0 + 2.0 * step)
            + g(x0 + 3.0 * step))
            / h6;
        series += ratio * ratio * ratio * g6 / 6.0;
    }
    Ok(eighth * e(psi0) / curv.abs().sqrt() * series)
}

/// Van der Corput bound (|w(b)| + ∫ₐᵇ|w′|)·Λ^{−1/j} for ∫ w e(ψ) when
/// |ψ^(j)| ≥ Λ on [a,b] and ψ″ is one-signed; w′ by central differences.
pub fn vdc_bound(w: &dyn Fn(f64) -> f64, a: f64, b: f64, j: u32, lambda: f64) -> Result<f64> {
    if j == 0 || !(lambda > 0.0) || !(a < b) {
        return Err(Error::domain("vdc_bound requires j >= 1, Lambda > 0, a < b"));
    }
    let h = (b - a) * 1e-6;
    let total_var = quad::integrate(
        |x| ((w(x + h) - w(x - h)) / (2.0 * h)).abs(),
        a,
        b,
        1e-9,
    );
    Ok((w(b).abs() + total_var) * lambda.powf(-1.0 / j as f64))
}

/// Empirical constant C(j) such that |∫ w e(ψ)| ≤ C·vdc_bound holds across
/// the calibration suite.
pub fn vdc_calibration_c(j: u32) -> f64 {
    match j {
        1 => 1.0,
        2 => 2.0,
        _ => 2.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::SequenceSpec;

    fn model2() -> PhaseModel {
        PhaseModel::new(SequenceSpec::log_power(1.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        let fam = make_windows(8, 8).unwrap();
        let e8 = 8f64.exp();
        for i in 1..400 {
            let x = 1.0 + (e8 - 1.0) * i as f64 / 400.0;
            assert!(
                (fam.n_partition_sum(x) - 1.0).abs() < 1e-12,
                "x={x}: {}",
                fam.n_partition_sum(x)
            );
        }
        for i in 0..300 {
            let k = 1.0 + (8f64.exp() - 1.001) * i as f64 / 300.0;
            assert!((fam.k_partition_sum(k) - 1.0).abs() < 1e-12, "k={k}");
            assert!((fam.k_partition_sum(-k) - 1.0).abs() < 1e-12);
        }
        // interior sample from the family midpoint
        assert!((fam.n_partition_sum(4f64.exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_supports() {
        let fam = make_windows(8, 8).unwrap();
        for q in 1..8usize {
            let w = fam.n_window(q).unwrap();
            let eq = (q as f64).exp();
            assert!(w.a >= 0.5 * eq - 1e-9 && w.d <= 2.0 * eq + 1e-9);
            assert_eq!(w.eval(0.25 * eq), 0.0);
            let v = w.eval(eq);
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn window_derivative_scaling() {
        // ||N_q'||_inf * e^q stays bounded by a fixed constant
        let fam = make_windows(14, 4).unwrap();
        for q in 5..=12usize {
            let w = fam.n_window(q).unwrap();
            let eq = (q as f64).exp();
            let h = eq * 1e-6;
            let mut max_d: f64 = 0.0;
            for i in 0..2000 {
                let x = w.a + (w.d - w.a) * i as f64 / 2000.0;
                max_d = max_d.max(((w.eval(x + h) - w.eval(x - h)) / (2.0 * h)).abs());
            }
            assert!(max_d * eq < 12.0, "q={q}: {}", max_d * eq);
        }
    }

    #[test]
    fn window_derivative_single_sign_change() {
        let fam = make_windows(8, 8).unwrap();
        let w = fam.n_window(5).unwrap();
        let h = 1e-4;
        let mut changes = 0;
        let mut prev = 0.0f64;
        for i in 1..5000 {
            let x = w.a + (w.d - w.a) * i as f64 / 5000.0;
            let d = w.eval(x + h) - w.eval(x - h);
            // interpolation of the step table is not exactly monotone;
            // ignore sub-noise differences
            if d.abs() > 1e-9 {
                if prev != 0.0 && d.signum() != prev.signum() {
                    changes += 1;
                }
                prev = d;
            }
        }
        assert_eq!(changes, 1);
    }

    #[test]
    fn exact_sum_matches_direct_reimplementation() {
        let model = model2();
        let fam = make_windows(5, 5).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let n = 5f64.exp();
        let engine = ExpSumEngine::new(&model, &fam, &f, n);
        let (q, u, s) = (3usize, 2usize, 0.37);
        let got = engine.exact_sum(q, u, s).unwrap();
        // duplicate path: direct e(.) calls, no recurrences, no caches
        let nw = fam.n_window(q).unwrap();
        let kw = fam.k_window(u).unwrap();
        let mut total = Complex64::new(0.0, 0.0);
        for k in 1..=(kw.d.floor() as i64) {
            let ck = kw.eval(k as f64);
            if ck == 0.0 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for nn in 1..=(nw.d.floor() as i64) {
                let wn = nw.eval(nn as f64);
                if wn == 0.0 {
                    continue;
                }
                inner += wn * e(k as f64 * model.omega(nn as f64));
            }
            total += ck * f.fourier(k as f64 / n).re * e(k as f64 * s) * inner;
        }
        total /= n;
        assert!((got - total).norm() < 1e-10, "{got} vs {total}");
    }

    #[test]
    fn exact_sum_is_one_periodic() {
        let model = model2();
        let fam = make_windows(5, 5).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let engine = ExpSumEngine::new(&model, &fam, &f, 5f64.exp());
        let kern = engine.kernel(3, 2, false).unwrap();
        let a = engine.exact_from_kernel(&kern, 0.0);
        let b = engine.exact_from_kernel(&kern, 1.0);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn negative_k_contribution_is_conjugate() {
        // 𝔎_{−u}(k) = 𝔎_u(−k) and f̂ real-even make the k < 0 half of the
        // full sum the conjugate of the k > 0 half at −s, so restricting
        // engines to k ≥ 1 loses nothing:
        //   E_{q,−u}(s) = conj(E_{q,u}(s))
        let model = model2();
        let fam = make_windows(5, 5).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let n = 5f64.exp();
        let engine = ExpSumEngine::new(&model, &fam, &f, n);
        let (q, u, s) = (3usize, 2usize, 0.23);
        let pos = engine.exact_sum(q, u, s).unwrap();
        // negative-k half, summed directly
        let nw = fam.n_window(q).unwrap();
        let kw = fam.k_window(u).unwrap();
        let mut neg = Complex64::new(0.0, 0.0);
        for k in -(kw.d.floor() as i64)..=-1 {
            let ck = kw.eval(-k as f64) * f.fourier(k as f64 / n).re;
            if ck == 0.0 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for nn in 1..=(nw.d.floor() as i64) {
                inner += nw.eval(nn as f64) * e(k as f64 * model.omega(nn as f64));
            }
            neg += ck * e(k as f64 * s) * inner;
        }
        neg /= n;
        assert!((neg - pos.conj()).norm() < 1e-10, "{neg} vs {pos}");
    }

    #[test]
    fn poisson_summation_self_consistency() {
        // Σ_n N_q(n) e(kω(n)) = Σ_r ∫ N_q(x) e(kω(x) − rx) dx
        let model = model2();
        let fam = make_windows(5, 5).unwrap();
        let w = fam.n_window(4).unwrap();
        let k = 3.0f64;
        let mut direct = Complex64::new(0.0, 0.0);
        for n in (w.a.ceil() as i64)..=(w.d.floor() as i64) {
            direct += w.eval(n as f64) * e(k * model.omega(n as f64));
        }
        let mut poisson = Complex64::new(0.0, 0.0);
        for r in -14i64..=14 {
            let cycles =
                (k * (model.omega(w.d) - model.omega(w.a))).abs() + (r.abs() as f64) * (w.d - w.a);
            let panels = (2.0 * cycles).ceil() as usize + 8;
            poisson += quad::integrate_complex_panels(
                |x| w.eval(x) * e(k * model.omega(x) - r as f64 * x),
                w.a,
                w.d,
                panels,
                1e-11,
            );
        }
        assert!(
            (direct - poisson).norm() < 1e-6,
            "direct {direct} vs poisson {poisson}"
        );
    }

    #[test]
    fn stationary_point_properties() {
        let model = model2();
        // constructed: r/k = ω'(100)
        let y = model.omega_deriv(1, 100.0).unwrap();
        // scale to integers approximately: use direct omega_tilde instead
        let x = model.omega_tilde(y).unwrap();
        assert!((x - 100.0).abs() < 1e-8);
        // derivative of kω(x) − rx vanishes at x_{k,r}
        let (k, r) = (1000u64, 40u64);
        let x = stationary_x(&model, k, r).unwrap();
        let resid = k as f64 * model.omega_deriv(1, x).unwrap() - r as f64;
        assert!(resid.abs() < 1e-9 * k as f64, "resid {resid}");
        let phi = phase_phi(&model, k, r).unwrap();
        assert!((phi - (k as f64 * model.omega(x) - r as f64 * x)).abs() < 1e-9);
    }

    #[test]
    fn phase_phi_envelope_and_scale() {
        let model = model2();
        // ∂φ/∂k = ω(x_{k,r}) via symmetric difference in integer k
        let (k, r) = (2000u64, 60u64);
        let fd = (phase_phi(&model, k + 1, r).unwrap() - phase_phi(&model, k - 1, r).unwrap()) / 2.0;
        let x = stationary_x(&model, k, r).unwrap();
        let want = model.omega(x);
        assert!((fd - want).abs() < 1e-4 * want.abs(), "{fd} vs {want}");
        // homogeneity: φ(λk, λr) = λ φ(k, r)
        let p1 = phase_phi(&model, k, r).unwrap();
        let p3 = phase_phi(&model, 3 * k, 3 * r).unwrap();
        assert!((p3 - 3.0 * p1).abs() < 1e-7 * p1.abs());
    }

    #[test]
    fn phi_second_derivative_identity() {
        // ∂²_t φ(t,r) = −(1/ω″(x_{t,r})) r²/t³
        let model = model2();
        let (k, r) = (3000u64, 80u64);
        let fd = phase_phi(&model, k + 1, r).unwrap() + phase_phi(&model, k - 1, r).unwrap()
            - 2.0 * phase_phi(&model, k, r).unwrap();
        let x = stationary_x(&model, k, r).unwrap();
        let (_, d2) = model.omega_d12(x);
        let want = -(1.0 / d2) * (r as f64).powi(2) / (k as f64).powi(3);
        assert!((fd - want).abs() < 1e-5 * want.abs(), "{fd} vs {want}");
    }

    #[test]
    fn stationary_x_magnitude_regime() {
        // x_{k,r} ≍ e^q when r ≍ e^{u−q} q^{A−1}, at (q,u) = (8,10)
        let model = model2();
        let (q, u) = (8.0f64, 10.0f64);
        let k = u.exp().round() as u64;
        let r = (2.0 * (u - q).exp() * q).round() as u64; // A ω'(e^q) e^q ≈ A q^{A−1}
        let x = stationary_x(&model, k, r).unwrap();
        assert!(
            x > 0.25 * q.exp() && x < 4.0 * q.exp(),
            "x = {x}, e^q = {}",
            q.exp()
        );
    }

    #[test]
    fn mu_closed_form() {
        let model = model2();
        // A=2, h−s=1, r=1: t=1, x=e, ω'(e)=2/e, μ=e/2
        let mu = mu_of(&model, 1, 1, 0.0).unwrap();
        assert!((mu - 0.5 * 1f64.exp()).abs() < 1e-12);
        assert!(mu_of(&model, 0, 1, 0.5).is_err());
        // residual identity: ω(ω̃(r/μ)) = h−s
        let (h, r, s) = (30i64, 50u64, 0.3);
        let mu = mu_of(&model, h, r, s).unwrap();
        let x = model.omega_tilde(r as f64 / mu).unwrap();
        assert!((model.omega(x) - (h as f64 - s)).abs() < 1e-10);
    }

    #[test]
    fn mu_defining_property() {
        // ∂φ/∂k at μ equals h−s (finite differences in real k around μ)
        let model = model2();
        let (h, r, s) = (40i64, 70u64, 0.2);
        let mu = mu_of(&model, h, r, s).unwrap();
        let phi_at = |k: f64| {
            let x = model.omega_tilde(r as f64 / k).unwrap();
            k * model.omega(x) - r as f64 * x
        };
        let d = 1e-3 * mu;
        let fd = (phi_at(mu + d) - phi_at(mu - d)) / (2.0 * d);
        let want = h as f64 - s;
        assert!((fd - want).abs() < 1e-6 * want.abs(), "{fd} vs {want}");
    }

    #[test]
    fn amplitude_identity() {
        // μ ω″(x_{μ,r}) ∂²_μφ = −r²/μ²
        let model = model2();
        let (h, r, s) = (50i64, 90u64, 0.4);
        let mu = mu_of(&model, h, r, s).unwrap();
        let x = model.omega_tilde(r as f64 / mu).unwrap();
        let (_, d2) = model.omega_d12(x);
        let dphi2 = -(1.0 / d2) * (r as f64).powi(2) / mu.powi(3);
        let lhs = mu * d2 * dphi2;
        let rhs = -((r as f64) / mu).powi(2);
        assert!(
            (lhs - rhs).abs() < 1e-8 * rhs.abs(),
            "lhs {lhs} vs rhs {rhs}"
        );
    }

    #[test]
    fn b_sum_empty_r_range_is_zero() {
        // far below the stationary threshold u ≥ q − (A−1)log q − 10A
        let model = model2();
        let fam = make_windows(12, 12).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let engine = ExpSumEngine::new(&model, &fam, &f, 12f64.exp());
        let v = engine.b_sum(11, 1, 0.3).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn b_approximates_exact() {
        // (q,u) = (8,10), N = e^10: pilot-fixed fidelity threshold
        let model = model2();
        let fam = make_windows(10, 10).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let engine = ExpSumEngine::new(&model, &fam, &f, 10f64.exp());
        let grid: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
        let rep = engine.compare_variants(8, 10, &grid, 2).unwrap();
        assert!(rep.norm_exact > 0.0);
        assert!(
            rep.d_exact_b / rep.norm_exact < 0.05,
            "relative L2 gap {}",
            rep.d_exact_b / rep.norm_exact
        );
        assert!(
            rep.d_b_bb / rep.norm_b < 0.2,
            "B vs BB gap {}",
            rep.d_b_bb / rep.norm_b
        );
    }

    #[test]
    fn variants_are_one_periodic() {
        let model = model2();
        let fam = make_windows(8, 8).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let engine = ExpSumEngine::new(&model, &fam, &f, 8f64.exp());
        let kern = engine.kernel(6, 7, true).unwrap();
        for s in [0.11, 0.62] {
            let d1 = (engine.exact_from_kernel(&kern, s) - engine.exact_from_kernel(&kern, s + 1.0))
                .norm();
            let d2 = (engine.b_from_kernel(&kern, s) - engine.b_from_kernel(&kern, s + 1.0)).norm();
            let d3 = (engine.bb_sum(6, 7, s).unwrap() - engine.bb_sum(6, 7, s + 1.0).unwrap()).norm();
            assert!(d1 < 1e-12 && d2 < 1e-12 && d3 < 1e-9, "{d1} {d2} {d3}");
        }
    }

    #[test]
    fn budget_guard() {
        let model = model2();
        let fam = make_windows(14, 14).unwrap();
        let f = TestFunction::bump(0.0, 1.0, 1.0).unwrap();
        let engine = ExpSumEngine::new(&model, &fam, &f, 14f64.exp());
        assert!(matches!(
            engine.kernel(13, 14, false),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn stationary_phase_gaussian_oracle() {
        // ψ = λ(x−x₀)², w a bump at x₀; compare against direct quadrature
        let w = TestFunction::bump(0.5, 0.4, 1.0).unwrap();
        let scales = ScaleParams {
            lambda_psi: 0.0,
            omega_psi: 1.0,
            omega_w: 0.8,
            lambda_w: 1.0,
        };
        let mut prev_err0 = f64::INFINITY;
        for &lambda in &[100.0, 1000.0, 10000.0] {
            let psi = move |x: f64| lambda * (x - 0.5) * (x - 0.5);
            let dpsi = move |x: f64| 2.0 * lambda * (x - 0.5);
            let d2psi = move |_x: f64| 2.0 * lambda;
            let truth = quad::integrate_complex_panels(
                |x| w.eval(x) * e(psi(x)),
                0.1,
                0.9,
                (4.0 * lambda * 0.16).ceil() as usize,
                1e-12,
            );
            let wf = |x: f64| w.eval(x);
            let o0 =
                stationary_phase(&wf, &psi, &dpsi, &d2psi, 0.1, 0.9, scales, 0).unwrap();
            let o1 =
                stationary_phase(&wf, &psi, &dpsi, &d2psi, 0.1, 0.9, scales, 1).unwrap();
            // order 0 main term is e(1/8) w(x0) / sqrt(2λ)
            let main = e(0.125) * w.eval(0.5) / (2.0 * lambda).sqrt();
            assert!((o0 - main).norm() < 1e-9);
            let err0 = (o0 - truth).norm() / truth.norm();
            let err1 = (o1 - truth).norm() / truth.norm();
            assert!(err1 < err0, "λ={lambda}: order1 {err1} !< order0 {err0}");
            // error decays roughly like 1/λ as λ grows by 10
            assert!(err0 < prev_err0 / 4.0, "λ={lambda}: {err0} vs {prev_err0}");
            prev_err0 = err0;
        }
    }

    #[test]
    fn stationary_phase_edge_cases() {
        let zero = |_: f64| 0.0;
        let psi = |x: f64| 100.0 * (x - 0.5) * (x - 0.5);
        let dpsi = |x: f64| 200.0 * (x - 0.5);
        let d2psi = |_: f64| 200.0;
        let scales = ScaleParams {
            lambda_psi: 0.0,
            omega_psi: 1.0,
            omega_w: 1.0,
            lambda_w: 1.0,
        };
        let v = stationary_phase(&zero, &psi, &dpsi, &d2psi, 0.0, 1.0, scales, 1).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        // no critical point inside [0.6, 1.0]
        let w = |_: f64| 1.0;
        assert!(matches!(
            stationary_phase(&w, &psi, &dpsi, &d2psi, 0.6, 1.0, scales, 0),
            Err(Error::NoCriticalPoint)
        ));
    }

    #[test]
    fn vdc_bound_examples() {
        let one = |_: f64| 1.0;
        // j=2: ψ = λx², |ψ''| = 2λ (in e(.) cycles the oracle integral
        // shrinks like λ^{-1/2} as well)
        for &lambda in &[10.0, 100.0, 1000.0] {
            let bound = vdc_bound(&one, 0.0, 1.0, 2, 2.0 * lambda).unwrap();
            let integral = quad::integrate_complex_panels(
                |x| e(lambda * x * x),
                0.0,
                1.0,
                (4.0 * lambda).ceil() as usize,
                1e-11,
            );
            assert!(integral.norm() <= vdc_calibration_c(2) * bound);
        }
        // j=1 closed form: |(e(λ)−1)/(2πiλ)| ≤ C·λ^{−1}
        let lambda = 37.25;
        let bound = vdc_bound(&one, 0.0, 1.0, 1, lambda).unwrap();
        let exact = ((e(lambda) - 1.0) / Complex64::new(0.0, 2.0 * PI * lambda)).norm();
        assert!(exact <= vdc_calibration_c(1) * bound);
        // monotone in Λ
        let b1 = vdc_bound(&one, 0.0, 1.0, 2, 10.0).unwrap();
        let b2 = vdc_bound(&one, 0.0, 1.0, 2, 1e6).unwrap();
        assert!(b2 < b1);
    }
}
