//! Sequence families ω(n), fractional parts, closed-form derivatives, and
//! the two inverses (ω̃ = (ω′)⁻¹ and ω⁻¹) needed by the B-process.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Which sequence family.
///
/// `LogPower` is the main family ω(n) = α(log n)^A with A > 1. `Monomial`
/// (α n^θ, θ ∈ (0,1)) and `LogBase` (log n / log b) exist for contrast
/// runs in the statistics paths; everything tied to the phase geometry
/// (derivatives, inverses, B-process) rejects them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    LogPower { alpha: f64, a: f64 },
    Monomial { alpha: f64, theta: f64 },
    LogBase { b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    /// Error-free transformations through the power/mod-1 chain; use for
    /// very large N where the fractional part would otherwise lose digits.
    Compensated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpec {
    pub family: Family,
    pub precision: Precision,
}

impl SequenceSpec {
    pub fn log_power(alpha: f64, a: f64) -> Result<SequenceSpec> {
        if !(alpha > 0.0) || !(a > 1.0) {
            return Err(Error::domain(format!(
                "LogPower requires alpha > 0 and A > 1, got alpha={alpha}, A={a}"
            )));
        }
        Ok(SequenceSpec {
            family: Family::LogPower { alpha, a },
            precision: Precision::Double,
        })
    }

    pub fn monomial(alpha: f64, theta: f64) -> Result<SequenceSpec> {
        if !(alpha > 0.0) || !(theta > 0.0 && theta < 1.0) {
            return Err(Error::domain(format!(
                "Monomial requires alpha > 0 and theta in (0,1), got alpha={alpha}, theta={theta}"
            )));
        }
        Ok(SequenceSpec {
            family: Family::Monomial { alpha, theta },
            precision: Precision::Double,
        })
    }

    pub fn log_base(b: f64) -> Result<SequenceSpec> {
        if !(b > 1.0) {
            return Err(Error::domain(format!("LogBase requires b > 1, got b={b}")));
        }
        Ok(SequenceSpec {
            family: Family::LogBase { b },
            precision: Precision::Double,
        })
    }

    pub fn with_precision(mut self, precision: Precision) -> SequenceSpec {
        self.precision = precision;
        self
    }

    fn omega_dd(&self, n: f64) -> Dd {
        match self.family {
            Family::LogPower { alpha, a } => pow_dd(Dd::from(n.ln()), a).mul_f64(alpha),
            Family::Monomial { alpha, theta } => pow_dd(Dd::from(n), theta).mul_f64(alpha),
            Family::LogBase { b } => Dd::from(n.ln()).div(Dd::from(b.ln())),
        }
    }
}

/// x^p with a double-double mantissa. Integer exponents go through exact
/// binary powering; the general case refines exp(p log x) with one Newton
/// step of log on the dd value.
fn pow_dd(x: Dd, p: f64) -> Dd {
    if x.hi == 0.0 {
        return if p == 0.0 { Dd::ONE } else { Dd::ZERO };
    }
    if p == p.trunc() && p.abs() <= 64.0 {
        let mut result = Dd::ONE;
        let mut base = x;
        let mut e = p.abs() as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        return if p < 0.0 { Dd::ONE.div(result) } else { result };
    }
    // y0 = x^p in f64; one Newton correction y = y0 (1 + p log(x/ x0^{1/p}))
    // expressed through the dd residual r = x / y0^{1/p} - 1.
    let y0 = x.hi.powf(p);
    let inv_root = pow_dd(Dd::from(y0), 1.0 / p);
    let r = x.div(inv_root).add_f64(-1.0);
    Dd::from(y0).mul(Dd::ONE.add(r.mul_f64(p)))
}

/// ω(n) for real n ≥ 1.
pub fn eval_omega(spec: &SequenceSpec, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("eval_omega requires n >= 1, got {n}")));
    }
    Ok(match spec.precision {
        Precision::Double => match spec.family {
            Family::LogPower { alpha, a } => alpha * n.ln().powf(a),
            Family::Monomial { alpha, theta } => alpha * n.powf(theta),
            Family::LogBase { b } => n.ln() / b.ln(),
        },
        Precision::Compensated => spec.omega_dd(n).to_f64(),
    })
}

/// ω(n) together with an absolute error-bound estimate. The bound tracks
/// the rounding of log n amplified through the power, plus the final
/// rounding of the result.
pub fn eval_omega_with_bound(spec: &SequenceSpec, n: f64) -> Result<(f64, f64)> {
    let v = eval_omega(spec, n)?;
    let ulp = |x: f64| (x.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    let bound = match spec.family {
        Family::LogPower { a, .. } => {
            let l = n.ln();
            let log_term = if l > 0.0 {
                (a * v / l).abs() * 0.5 * ulp(l)
            } else {
                0.0
            };
            match spec.precision {
                Precision::Double => log_term + 2.0 * a.abs() * ulp(v),
                Precision::Compensated => log_term + 2.0 * ulp(v) * f64::EPSILON.sqrt(),
            }
        }
        Family::Monomial { theta, .. } => 2.0 * (1.0 + theta) * ulp(v),
        Family::LogBase { .. } => 2.0 * ulp(v),
    };
    Ok((v, bound))
}

/// Fractional part of ω(n) in [0, 1).
pub fn eval_frac(spec: &SequenceSpec, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("eval_frac requires n >= 1"));
    }
    let nf = n as f64;
    match spec.precision {
        Precision::Double => Ok(eval_omega(spec, nf)?.rem_euclid(1.0)),
        Precision::Compensated => {
            let f = spec.omega_dd(nf).fract().to_f64();
            Ok(if f >= 1.0 { 0.0 } else { f.max(0.0) })
        }
    }
}

/// ω plus its derivatives and inverses, for the LogPower family.
///
/// Every derivative of (log x)^A is a finite sum of terms
/// c (log x)^{A−k} x^{−j}, so derivatives are carried symbolically as
/// term lists and evaluated in closed form.
#[derive(Debug, Clone)]
pub struct PhaseModel {
    pub spec: SequenceSpec,
    pub root_tol: f64,
    /// term lists for ω⁽ʲ⁾, j = 1..=4; entries (c, k, j): c (log x)^{A−k} x^{−j}
    deriv_terms: [Vec<(f64, f64, i32)>; 4],
    alpha: f64,
    a: f64,
}

impl PhaseModel {
    pub fn new(spec: SequenceSpec) -> Result<PhaseModel> {
        let (alpha, a) = match spec.family {
            Family::LogPower { alpha, a } => (alpha, a),
            _ => {
                return Err(Error::domain(
                    "PhaseModel is defined for the LogPower family only",
                ))
            }
        };
        // d/dx [ c (log x)^{A-k} x^{-j} ]
        //   = c(A-k) (log x)^{A-k-1} x^{-j-1}  -  c j (log x)^{A-k} x^{-j-1}
        let mut terms: Vec<(f64, f64, i32)> = vec![(alpha, 0.0, 0)];
        let mut deriv_terms: [Vec<(f64, f64, i32)>; 4] = Default::default();
        for slot in deriv_terms.iter_mut() {
            let mut next: Vec<(f64, f64, i32)> = Vec::new();
            for &(c, k, j) in &terms {
                push_term(&mut next, (c * (a - k), k + 1.0, j + 1));
                push_term(&mut next, (-c * j as f64, k, j + 1));
            }
            *slot = next.clone();
            terms = next;
        }
        Ok(PhaseModel {
            spec,
            root_tol: 1e-13,
            deriv_terms,
            alpha,
            a,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Left edge of the branch on which ω′ is strictly decreasing.
    pub fn branch_start(&self) -> f64 {
        (self.a - 1.0).exp()
    }

    /// ω(x).
    pub fn omega(&self, x: f64) -> f64 {
        self.alpha * x.ln().powf(self.a)
    }

    /// j-th derivative of ω at x, j ∈ {1,2,3,4}, x > 1.
    pub fn omega_deriv(&self, j: u32, x: f64) -> Result<f64> {
        if !(1..=4).contains(&j) {
            return Err(Error::domain(format!("omega_deriv: j must be 1..=4, got {j}")));
        }
        if !(x > 1.0) {
            return Err(Error::domain(format!("omega_deriv requires x > 1, got {x}")));
        }
        let l = x.ln();
        let mut sum = 0.0;
        for &(c, k, jj) in &self.deriv_terms[(j - 1) as usize] {
            sum += c * l.powf(self.a - k) * x.powi(-jj);
        }
        Ok(sum)
    }

    /// (ω′(x), ω″(x)) sharing one log/pow evaluation — the hot path of the
    /// per-(k,r) Newton solves in the B-process.
    #[inline]
    pub fn omega_d12(&self, x: f64) -> (f64, f64) {
        let l = x.ln();
        let base = self.alpha * self.a * l.powf(self.a - 2.0);
        (base * l / x, base * (self.a - 1.0 - l) / (x * x))
    }

    /// ω̃(y): the solution of ω′(x) = y on the branch x > e^{A−1}.
    pub fn omega_tilde(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("omega_tilde requires y > 0, got {y}")));
        }
        let x_edge = self.branch_start() * (1.0 + 1e-9);
        let y_edge = self.omega_deriv(1, x_edge.max(1.0 + 1e-9))?;
        if y >= y_edge {
            return Err(Error::domain(format!(
                "omega_tilde: y={y} at or above branch maximum {y_edge}"
            )));
        }
        // double hi until the (decreasing) derivative drops below y
        let lo = x_edge.max(1.0 + 1e-9);
        let mut hi = 2.0 * lo;
        while self.omega_deriv(1, hi)? > y {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::domain("omega_tilde: no bracketable root"));
            }
        }
        let mut a = lo;
        let mut b = hi;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.omega_deriv(1, m)? > y {
                a = m;
            } else {
                b = m;
            }
            if (b - a) <= self.root_tol * b {
                break;
            }
        }
        // Newton polish on g(x) = ω′(x) − y
        let mut x = 0.5 * (a + b);
        for _ in 0..4 {
            let g = self.omega_deriv(1, x)? - y;
            let gp = self.omega_deriv(2, x)?;
            let step = g / gp;
            let xn = x - step;
            if xn > a && xn < b {
                x = xn;
            }
            if step.abs() <= self.root_tol * x.abs() {
                break;
            }
        }
        Ok(x)
    }

    /// ω⁻¹(y) = exp((y/α)^{1/A}).
    pub fn omega_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("omega_inv requires y > 0, got {y}")));
        }
        Ok((y / self.alpha).powf(1.0 / self.a).exp())
    }
}

fn push_term(terms: &mut Vec<(f64, f64, i32)>, t: (f64, f64, i32)) {
    if t.0 == 0.0 {
        return;
    }
    for existing in terms.iter_mut() {
        if existing.1 == t.1 && existing.2 == t.2 {
            existing.0 += t.0;
            return;
        }
    }
    terms.push(t);
}
