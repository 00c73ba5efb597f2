//! Adaptive Simpson quadrature.
//!
//! All integrands in this crate are smooth with known compact support, so
//! adaptive Simpson with an absolute tolerance and a panel cap is enough.
//! The panel cap (2^20 function evaluations per call) guards against
//! pathological inputs rather than expected use.

use num_complex::Complex64;

const MAX_DEPTH: u32 = 40;

struct Budget {
    evals_left: i64,
}

fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut Budget,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    budget.evals_left -= 2;
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || budget.evals_left <= 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut budget = Budget {
        evals_left: 1 << 20,
    };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 0, &mut budget)
}

/// Integrate with forced breakpoints (support entry/exit events), each
/// smooth piece handled independently.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let n_pieces = cuts.len() + 1;
    let piece_tol = tol / n_pieces as f64;
    let mut lo = a;
    let mut total = 0.0;
    for &c in &cuts {
        total += integrate(&f, lo, c, piece_tol);
        lo = c;
    }
    total + integrate(&f, lo, b, piece_tol)
}

fn csimpson_rec<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
    budget: &mut Budget,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    budget.evals_left -= 2;
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || budget.evals_left <= 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    csimpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget)
        + csimpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget)
}

/// Complex-valued version of [`integrate`].
pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    if a >= b {
        return Complex64::new(0.0, 0.0);
    }
    let mut budget = Budget {
        evals_left: 1 << 20,
    };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    csimpson_rec(&f, a, b, fa, fm, fb, whole, tol, 0, &mut budget)
}

/// Complex integral pre-split into `panels` equal pieces; for oscillatory
/// integrands where the caller knows the cycle count.
pub fn integrate_complex_panels<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Complex64 {
    let h = (b - a) / panels as f64;
    let ptol = tol / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..panels {
        let lo = a + i as f64 * h;
        total += integrate_complex(&f, lo, lo + h, ptol);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        // |x - 0.3| has a kink; forced breakpoint keeps pieces smooth.
        let v = integrate_with_breakpoints(|x| (x - 0.3f64).abs(), 0.0, 1.0, &[0.3], 1e-12);
        let exact = 0.3f64.powi(2) / 2.0 + 0.7f64.powi(2) / 2.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn complex_oscillation() {
        // int_0^1 e(5x) dx = (e(5)-1)/(2 pi i 5) = 0.
        let v = integrate_complex(
            |x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 5.0 * x),
            0.0,
            1.0,
            1e-13,
        );
        assert!(v.norm() < 1e-11);
    }
}
