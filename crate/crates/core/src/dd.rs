//! Minimal double-double arithmetic.
//!
//! Used where a single f64 is not enough: reducing huge phases mod 1
//! without losing the low bits, and pivoted elimination of severely
//! ill-conditioned (generalized Vandermonde) matrices.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s0, e0) = two_sum(self.hi, o.hi);
        let (s1, e1) = two_sum(self.lo, o.lo);
        let (s2, e2) = quick_two_sum(s0, e0 + s1);
        Dd::new(s2, e2 + e1)
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s0, e0) = two_sum(self.hi, o);
        Dd::new(s0, e0 + self.lo)
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        Dd::new(p, e)
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p, e) = two_prod(self.hi, o);
        Dd::new(p, e + self.lo * o)
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q0 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q0));
        let q1 = r.hi / o.hi;
        let r2 = r.sub(o.mul_f64(q1));
        let q2 = r2.hi / o.hi;
        Dd::new(q0, q1).add_f64(q2)
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    /// Fractional part in [0, 1). Exact split: floor of the hi word is
    /// representable, so the subtraction loses nothing.
    pub fn fract(self) -> Dd {
        let f = self.hi.floor();
        let r = Dd::new(self.hi - f, self.lo);
        if r.hi < 0.0 {
            r.add_f64(1.0)
        } else if r.hi >= 1.0 {
            r.add_f64(-1.0)
        } else {
            r
        }
    }
}

/// Fractional part of `k * x` for integer `k`, accurate to roughly
/// `|k| * ulp(x)` rather than `ulp(k * x)`.
pub fn fract_int_mul(k: i64, x: f64) -> f64 {
    Dd::from(x).mul_f64(k as f64).fract().to_f64()
}
