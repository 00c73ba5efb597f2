//! Generalized Vandermonde determinants and the Khare–Tao ratio, plus the
//! derivative-system algebra for the off-diagonal phase: the P_j recurrence,
//! the matrix M with (M)_{ij} = P_j(h_i), its leading-term determinant, and
//! the ‖D‖₂ ≥ ‖b‖₂/‖M⁻¹‖ lower bound.

use crate::dd::Dd;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const MAX_NODES: usize = 12;
const DD_COND_THRESHOLD: f64 = 1e12;

/// Strictly increasing positive nodes u₁ < … < u_M.
#[derive(Debug, Clone)]
pub struct NodeVector {
    u: Vec<f64>,
}

impl NodeVector {
    pub fn new(u: Vec<f64>) -> Result<NodeVector> {
        if u.is_empty() || u.len() > MAX_NODES {
            return Err(Error::domain(format!(
                "need 1..={MAX_NODES} nodes, got {}",
                u.len()
            )));
        }
        if u[0] <= 0.0 || !u[0].is_finite() {
            return Err(Error::domain("nodes must be positive finite"));
        }
        if u.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("nodes must be strictly increasing"));
        }
        Ok(NodeVector { u })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// V(u) = ∏_{i<j} (u_j − u_i).
    pub fn vandermonde_v(&self) -> f64 {
        let mut v = 1.0;
        for j in 1..self.u.len() {
            for i in 0..j {
                v *= self.u[j] - self.u[i];
            }
        }
        v
    }
}

/// Strictly increasing real exponents n₁ < … < n_M.
#[derive(Debug, Clone)]
pub struct ExponentVector {
    n: Vec<f64>,
}

impl ExponentVector {
    pub fn new(n: Vec<f64>) -> Result<ExponentVector> {
        if n.is_empty() || n.len() > MAX_NODES {
            return Err(Error::domain(format!(
                "need 1..={MAX_NODES} exponents, got {}",
                n.len()
            )));
        }
        if n.iter().any(|x| !x.is_finite()) || n.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("exponents must be strictly increasing"));
        }
        Ok(ExponentVector { n })
    }

    pub fn values(&self) -> &[f64] {
        &self.n
    }

    /// n_min = (0, 1, …, M−1).
    pub fn minimal(m: usize) -> ExponentVector {
        ExponentVector {
            n: (0..m).map(|i| i as f64).collect(),
        }
    }
}

fn det_f64(mut g: Vec<Vec<f64>>) -> (f64, f64) {
    let m = g.len();
    let mut det = 1.0;
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for col in 0..m {
        let (p, _) = (col..m)
            .map(|r| (r, g[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if p != col {
            g.swap(p, col);
            det = -det;
        }
        let piv = g[col][col];
        if piv == 0.0 {
            return (0.0, f64::INFINITY);
        }
        max_piv = max_piv.max(piv.abs());
        min_piv = min_piv.min(piv.abs());
        det *= piv;
        for r in col + 1..m {
            let factor = g[r][col] / piv;
            for c in col..m {
                g[r][c] -= factor * g[col][c];
            }
        }
    }
    (det, max_piv / min_piv)
}

fn det_dd(mut g: Vec<Vec<Dd>>) -> f64 {
    let m = g.len();
    let mut det = Dd::ONE;
    let mut sign = 1.0;
    for col in 0..m {
        let (p, _) = (col..m)
            .map(|r| (r, g[r][col].hi.abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if p != col {
            g.swap(p, col);
            sign = -sign;
        }
        let piv = g[col][col];
        if piv.hi == 0.0 {
            return 0.0;
        }
        det = det.mul(piv);
        for r in col + 1..m {
            let factor = g[r][col].div(piv);
            for c in col..m {
                g[r][c] = g[r][c].sub(factor.mul(g[col][c]));
            }
        }
    }
    sign * det.to_f64()
}

/// det(u^∘n) for the generalized Vandermonde matrix (u_i^{n_j}), by pivoted
/// elimination; falls back to double-double elimination when the pivot
/// spread suggests the f64 pass lost more than ~4 digits.
pub fn gvdm_det(u: &NodeVector, n: &ExponentVector) -> Result<f64> {
    if u.u.len() != n.n.len() {
        return Err(Error::domain("node and exponent lengths differ"));
    }
    let m = u.u.len();
    let g: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| u.u[i].powf(n.n[j])).collect())
        .collect();
    let (det, cond) = det_f64(g);
    if cond <= DD_COND_THRESHOLD && det.is_finite() {
        return Ok(det);
    }
    let gd: Vec<Vec<Dd>> = (0..m)
        .map(|i| (0..m).map(|j| Dd::from(u.u[i].powf(n.n[j]))).collect())
        .collect();
    Ok(det_dd(gd))
}

/// det(u^∘n) / (V(u) · ∏ u_i^{n_i − (i−1)}): the Khare–Tao ratio, which the
/// two-sided bound confines to a compact positive interval on any compact
/// exponent set.
pub fn kt_ratio(u: &NodeVector, n: &ExponentVector) -> Result<f64> {
    let det = gvdm_det(u, n)?;
    let mut denom = u.vandermonde_v();
    for (i, (&ui, &ni)) in u.u.iter().zip(&n.n).enumerate() {
        denom *= ui.powf(ni - i as f64);
    }
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Singular("degenerate node vector".into()));
    }
    Ok(det / denom)
}

// ---------------------------------------------------------------------------
// derivative system

/// The off-diagonal phase system: b_i = r_i exp((h_i+s)^{1/A}) and the
/// derivative vector D = b·M with (M)_{ij} = P_j(h_i).
#[derive(Debug, Clone)]
pub struct PhaseDerivativeSystem {
    pub h: Vec<u64>,
    pub r: Vec<i64>,
    pub s: f64,
    pub a: f64,
}

const MAX_SYSTEM: usize = 8;

impl PhaseDerivativeSystem {
    pub fn new(h: Vec<u64>, r: Vec<i64>, s: f64, a: f64) -> Result<PhaseDerivativeSystem> {
        if h.is_empty() || h.len() > MAX_SYSTEM || h.len() != r.len() {
            return Err(Error::domain(format!(
                "need 1..={MAX_SYSTEM} matched (h, r) pairs"
            )));
        }
        let mut sorted = h.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[0] == 0 {
            return Err(Error::domain("h must be pairwise distinct positive"));
        }
        if r.iter().any(|&ri| ri == 0) {
            return Err(Error::domain("r entries must be nonzero"));
        }
        if !(0.0..=1.0).contains(&s) || !(a > 1.0) {
            return Err(Error::domain("need s in [0,1] and A > 1"));
        }
        Ok(PhaseDerivativeSystem { h, r, s, a })
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    /// b_i = r_i exp((h_i+s)^{1/A}).
    pub fn b(&self) -> Vec<f64> {
        self.h
            .iter()
            .zip(&self.r)
            .map(|(&h, &r)| r as f64 * (h as f64 + self.s).powf(1.0 / self.a).exp())
            .collect()
    }
}

/// P_j as exact lattice-exponent data: term c·x^{a/A + b} stored under the
/// integer key (a, b), so the recurrence merges like terms exactly.
#[derive(Debug, Clone)]
pub struct PPoly {
    pub a: f64,
    pub terms: BTreeMap<(i32, i32), f64>,
}

impl PPoly {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(p, q), &c)| c * x.powf(p as f64 / self.a + q as f64))
            .sum()
    }
}

/// The recurrence P₁ = (1/A)x^{1/A−1}, P_{j+1} = P_j′ + P_j·P₁; the
/// coefficients of each lattice exponent come out of the recurrence, never
/// from a hand-enumerated table.
pub fn p_polynomials(a: f64, j: usize) -> Result<PPoly> {
    if j == 0 {
        return Err(Error::domain("p_polynomials requires j >= 1"));
    }
    if !(a > 1.0) {
        return Err(Error::domain("p_polynomials requires A > 1"));
    }
    let mut terms = BTreeMap::new();
    terms.insert((1, -1), 1.0 / a);
    for _ in 1..j {
        let mut next: BTreeMap<(i32, i32), f64> = BTreeMap::new();
        for (&(p, q), &c) in &terms {
            // derivative: exponent p/A + q drops by one
            let dc = c * (p as f64 / a + q as f64);
            if dc != 0.0 {
                *next.entry((p, q - 1)).or_insert(0.0) += dc;
            }
            // product with P₁: exponent gains 1/A − 1
            *next.entry((p + 1, q - 1)).or_insert(0.0) += c / a;
        }
        terms = next;
    }
    Ok(PPoly { a, terms })
}

/// (M)_{ij} = P_j(h_i + s), i = 1..m rows, j = 1..m columns.
pub fn deriv_matrix(system: &PhaseDerivativeSystem) -> Result<Vec<Vec<f64>>> {
    let m = system.m();
    let polys: Vec<PPoly> = (1..=m)
        .map(|j| p_polynomials(system.a, j))
        .collect::<Result<_>>()?;
    Ok(system
        .h
        .iter()
        .map(|&h| {
            let x = h as f64 + system.s;
            polys.iter().map(|p| p.eval(x)).collect()
        })
        .collect())
}

/// D_j = Σ_i b_i P_j(h_i): the j-th s-derivative of Σ_i r_i exp((h_i+s)^{1/A}).
pub fn phase_derivatives(system: &PhaseDerivativeSystem) -> Result<Vec<f64>> {
    let mat = deriv_matrix(system)?;
    let b = system.b();
    let m = system.m();
    Ok((0..m)
        .map(|j| (0..m).map(|i| b[i] * mat[i][j]).sum())
        .collect())
}

/// det(M), the closed-form leading term c_{t_M}·det((h_i+s)^{j/A−j}) with
/// c_{t_M} = A^{−m(m+1)/2}, and their ratio. The ratio tends to 1 like
/// max h_i^{−1/A} as the h grow.
pub fn det_m_leading(system: &PhaseDerivativeSystem) -> Result<(f64, f64, f64)> {
    // sort by h; a simultaneous row permutation of M and the leading-term
    // matrix leaves the ratio unchanged
    let mut sys = system.clone();
    let mut order: Vec<usize> = (0..sys.m()).collect();
    order.sort_by_key(|&i| sys.h[i]);
    sys.h = order.iter().map(|&i| system.h[i]).collect();
    sys.r = order.iter().map(|&i| system.r[i]).collect();

    let m = sys.m();
    let (det, _) = det_f64(deriv_matrix(&sys)?);
    let nodes = NodeVector::new(sys.h.iter().map(|&h| h as f64 + sys.s).collect())?;
    // exponents j/A − j, j = 1..m, are strictly decreasing; reversing the
    // columns makes them increasing at the cost of the reversal sign
    let exps = ExponentVector::new(
        (1..=m)
            .rev()
            .map(|j| j as f64 / sys.a - j as f64)
            .collect(),
    )?;
    let swaps = m / 2;
    let rev_sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
    let c_tm = sys.a.powi(-((m * (m + 1) / 2) as i32));
    let leading = c_tm * rev_sign * gvdm_det(&nodes, &exps)?;
    if leading == 0.0 {
        return Err(Error::Singular("leading term vanished".into()));
    }
    Ok((det, leading, det / leading))
}

fn invert(mat: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = mat.len();
    let mut aug: Vec<Vec<f64>> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..m {
        let (p, pv) = (col..m)
            .map(|r| (r, aug[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pv == 0.0 {
            return Err(Error::Singular("matrix not invertible".into()));
        }
        aug.swap(p, col);
        let piv = aug[col][col];
        for c in 0..2 * m {
            aug[col][c] /= piv;
        }
        for r in 0..m {
            if r != col && aug[r][col] != 0.0 {
                let f = aug[r][col];
                for c in 0..2 * m {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    Ok(aug.into_iter().map(|row| row[m..].to_vec()).collect())
}

/// Overflow-safe 2-norm (the b_i reach e^{√h}, whose square overflows).
fn norm2(v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|&x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

fn spectral_norm(mat: &[Vec<f64>]) -> f64 {
    let m = mat.len();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut sigma = 0.0;
    for _ in 0..200 {
        // w = A v, v_next = Aᵀ w (power iteration on AᵀA)
        let w: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| mat[i][j] * v[j]).sum())
            .collect();
        let vn: Vec<f64> = (0..m)
            .map(|j| (0..m).map(|i| mat[i][j] * w[i]).sum())
            .collect();
        let norm = vn.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        sigma = norm.sqrt();
        v = vn.iter().map(|x| x / norm).collect();
    }
    sigma
}

/// (‖D‖₂, ‖b‖₂/‖M⁻¹‖_spec); the bound D = bM ⇒ ‖b‖ ≤ ‖D‖·‖M⁻¹‖ makes the
/// second component a guaranteed lower bound for the first.
pub fn d_norm_lower_bound(system: &PhaseDerivativeSystem) -> Result<(f64, f64)> {
    let mat = deriv_matrix(system)?;
    let b = system.b();
    let m = system.m();
    let d: Vec<f64> = (0..m)
        .map(|j| (0..m).map(|i| b[i] * mat[i][j]).sum())
        .collect();
    let inv = invert(&mat)?;
    Ok((norm2(&d), norm2(&b) / spectral_norm(&inv)))
}

/// min/max Khare–Tao ratio over random (u, n) with nodes in `node_range`
/// and exponents n_i = i−1 + offsets drawn from `exp_box`; every sampled
/// ratio is also counted for positivity.
pub struct KtStudy {
    pub samples: usize,
    pub positive: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

pub fn kt_sampling_study(
    m: usize,
    node_range: (f64, f64),
    exp_box: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<KtStudy> {
    if m < 2 || m > MAX_NODES || !(node_range.0 > 0.0) || !(node_range.0 < node_range.1) {
        return Err(Error::domain("invalid sampling-study parameters"));
    }
    if !(exp_box.0 < exp_box.1) {
        return Err(Error::domain("invalid exponent box"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_gap = 1e-3 * (node_range.1 - node_range.0);
    let mut study = KtStudy {
        samples,
        positive: 0,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let u = loop {
            let mut u: Vec<f64> = (0..m)
                .map(|_| rng.gen_range(node_range.0..node_range.1))
                .collect();
            u.sort_by(f64::total_cmp);
            if u.windows(2).all(|w| w[1] - w[0] > min_gap) {
                break u;
            }
        };
        // exponents stay strictly increasing because the offsets live in a
        // box narrower than the unit spacing of n_min
        let span = (exp_box.1 - exp_box.0).min(0.999);
        let n: Vec<f64> = (0..m)
            .map(|i| i as f64 + exp_box.0 + rng.gen_range(0.0..span))
            .collect();
        let ratio = kt_ratio(&NodeVector::new(u)?, &ExponentVector::new(n)?)?;
        if ratio > 0.0 {
            study.positive += 1;
        }
        study.min_ratio = study.min_ratio.min(ratio);
        study.max_ratio = study.max_ratio.max(ratio);
    }
    Ok(study)
}
