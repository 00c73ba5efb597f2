//! Completion machinery for the moments of the counting statistic:
//! S_N(s), the m-th moment M^(m)(N), the completed F-sum identity,
//! set-partition enumeration, and the diagonal/Poisson targets.

use crate::error::{Error, Result};
use crate::quad;
use crate::sequences::{eval_omega, SequenceSpec};
use crate::testfn::TestFunction;

/// A set partition of {1,…,m}, blocks ordered by least element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Non-isolating: every block has at least two elements.
    pub fn is_non_isolating(&self) -> bool {
        self.blocks.iter().all(|b| b.len() >= 2)
    }
}

/// All set partitions of {1,…,m} (restricted growth string order), filtered
/// to non-isolating ones if requested.
pub fn enumerate_partitions(m: usize, only_non_isolating: bool) -> Result<Vec<SetPartition>> {
    if m < 1 || m > 8 {
        return Err(Error::domain("enumerate_partitions requires 1 <= m <= 8"));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; m];
    loop {
        let nblocks = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        let p = SetPartition { blocks };
        if !only_non_isolating || p.is_non_isolating() {
            out.push(p);
        }
        // next restricted growth string
        let mut i = m;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            let cap = rgs[..i].iter().copied().max().unwrap() + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// Σ over the selected partition family of ∏ E(f^{|block|}).
pub fn partition_target(f: &TestFunction, m: usize, only_non_isolating: bool) -> Result<f64> {
    let parts = enumerate_partitions(m, only_non_isolating)?;
    // memoize E(f^j)
    let mut powers = vec![f64::NAN; m + 1];
    let mut total = 0.0;
    for p in &parts {
        let mut prod = 1.0;
        for b in &p.blocks {
            if powers[b.len()].is_nan() {
                powers[b.len()] = f.expectation_power(b.len() as u32)?;
            }
            prod *= powers[b.len()];
        }
        total += prod;
    }
    Ok(total)
}

/// Precomputed state for repeated S_N evaluations.
struct CountEngine {
    n: usize,
    fracs: Vec<f64>,
}

impl CountEngine {
    fn new(spec: &SequenceSpec, n: usize) -> Result<CountEngine> {
        let fracs = (1..=n as u64)
            .map(|i| crate::sequences::eval_frac(spec, i))
            .collect::<Result<Vec<f64>>>()?;
        Ok(CountEngine { n, fracs })
    }

    /// S_N(s) = Σ_n Σ_k f(N(ω(n)+k+s)); only the finitely many k with the
    /// argument inside supp f contribute.
    fn s_n(&self, f: &TestFunction, s: f64) -> f64 {
        let (lo, hi) = f.support();
        let nf = self.n as f64;
        let mut total = 0.0;
        for &fr in &self.fracs {
            let t = fr + s;
            let kmin = (lo / nf - t).ceil() as i64;
            let kmax = (hi / nf - t).floor() as i64;
            for k in kmin..=kmax {
                total += f.eval(nf * (t + k as f64));
            }
        }
        total
    }

    /// s-values in (0,1) where some point enters or leaves supp f.
    fn breakpoints(&self, f: &TestFunction) -> Vec<f64> {
        let (lo, hi) = f.support();
        let nf = self.n as f64;
        let mut bps = Vec::with_capacity(2 * self.n);
        for &fr in &self.fracs {
            bps.push((lo / nf - fr).rem_euclid(1.0));
            bps.push((hi / nf - fr).rem_euclid(1.0));
        }
        bps
    }
}

/// S_N(s) for a single s.
pub fn count_statistic(spec: &SequenceSpec, n: usize, f: &TestFunction, s: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("count_statistic requires N >= 1"));
    }
    Ok(CountEngine::new(spec, n)?.s_n(f, s))
}

const MOMENT_TOL: f64 = 1e-9;

/// Mixed moment ∫₀¹ ∏ᵢ S_N(s, fᵢ) ds. The plain m-th moment is the case
/// of all factors equal.
pub fn moment_mixed(spec: &SequenceSpec, n: usize, fs: &[TestFunction]) -> Result<f64> {
    if fs.is_empty() || fs.len() > 4 {
        return Err(Error::domain("moment requires 1 <= m <= 4 factors"));
    }
    if n > 10_000 {
        return Err(Error::Budget(format!(
            "moment quadrature cost scales with N; N={n} exceeds the cap 10000"
        )));
    }
    let engine = CountEngine::new(spec, n)?;
    // Force subdivision at support entry/exit events so the quadrature, not
    // the geometry, limits accuracy; past ~1k events a uniform pre-split is
    // cheaper than honoring each one.
    let mut bps: Vec<f64> = Vec::new();
    for f in fs {
        bps.extend(engine.breakpoints(f));
    }
    if bps.len() > 1024 {
        bps = (1..1024).map(|i| i as f64 / 1024.0).collect();
    }
    Ok(quad::integrate_with_breakpoints(
        |s| fs.iter().map(|f| engine.s_n(f, s)).product(),
        0.0,
        1.0,
        &bps,
        MOMENT_TOL,
    ))
}

/// M^(m)(N) = ∫₀¹ S_N(s)^m ds.
pub fn moment_m(spec: &SequenceSpec, n: usize, f: &TestFunction, m: usize) -> Result<f64> {
    moment_mixed(spec, n, &vec![f.clone(); m])
}

/// The completed sum
/// (1/N) Σ_{n∈[N]^m} Σ_{k∈ℤ^{m−1}} F(N(ω(n₁)−ω(n₂)+k₁), …),
/// equal to M^(m)(N) identically (an algebraic rearrangement, not a limit).
///
/// Only tuples whose suffix sums Z_i = N(ω(n_i)−ω(n_m)+K_i) land inside the
/// width of supp f can contribute, so the n_i range over a sorted window
/// around each n_m and the K_i over at most two integers each.
pub fn completed_sum(spec: &SequenceSpec, n: usize, f: &TestFunction, m: usize) -> Result<f64> {
    if !(2..=4).contains(&m) {
        return Err(Error::domain("completed_sum requires 2 <= m <= 4"));
    }
    if n > 10_000 {
        return Err(Error::Budget(format!(
            "completed_sum: N={n} exceeds the cap 10000"
        )));
    }
    let omega: Vec<f64> = (1..=n as u64)
        .map(|i| eval_omega(spec, i as f64))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = f.support();
    let width = hi - lo; // F(z) needs every suffix sum in (−width, width)
    let wn = width / n as f64;

    // sorted fractional parts with back-references for window lookups
    let mut sorted: Vec<(f64, usize)> = omega
        .iter()
        .enumerate()
        .map(|(i, &w)| (w.rem_euclid(1.0), i))
        .collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut total = 0.0;
    let mut slot_choices: Vec<(usize, i64)> = Vec::new();
    for nm in 0..n {
        // candidates ni with a K making |ω(ni) − ω(nm) + K| < width/N
        slot_choices.clear();
        if 2.0 * wn >= 1.0 {
            for ni in 0..n {
                push_k_choices(&omega, ni, nm, wn, &mut slot_choices);
            }
        } else {
            let center = omega[nm].rem_euclid(1.0);
            let margin = wn * (1.0 + 1e-12) + 1e-15;
            for &(_, ni) in window(&sorted, center, margin) {
                push_k_choices(&omega, ni, nm, wn, &mut slot_choices);
            }
        }
        if slot_choices.is_empty() {
            continue;
        }
        // suffix values Z_i for each slot choice
        let z_of = |&(ni, k): &(usize, i64)| n as f64 * (omega[ni] - omega[nm] + k as f64);
        // iterate over (m−1)-fold products of slot choices
        let mut idx = vec![0usize; m - 1];
        'tuples: loop {
            let mut z = Vec::with_capacity(m - 1);
            for i in 0..m - 1 {
                let zi = z_of(&slot_choices[idx[i]]);
                let zi_next = if i + 1 < m - 1 {
                    z_of(&slot_choices[idx[i + 1]])
                } else {
                    0.0
                };
                z.push(zi - zi_next);
            }
            total += f.construct_f(&z)?;
            let mut d = m - 1;
            loop {
                if d == 0 {
                    break 'tuples;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < slot_choices.len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
    Ok(total / n as f64)
}

fn push_k_choices(omega: &[f64], ni: usize, nm: usize, wn: f64, out: &mut Vec<(usize, i64)>) {
    let d = omega[nm] - omega[ni];
    let kmin = (d - wn).ceil() as i64;
    let kmax = (d + wn).floor() as i64;
    for k in kmin..=kmax {
        if (omega[ni] - omega[nm] + k as f64).abs() < wn {
            out.push((ni, k));
        }
    }
}

/// Indices of `sorted` whose first component lies within `margin` of
/// `center` circularly. Returned as owned slice refs via a small Vec.
fn window<'a>(sorted: &'a [(f64, usize)], center: f64, margin: f64) -> Vec<&'a (f64, usize)> {
    let lo = center - margin;
    let hi = center + margin;
    let mut out = Vec::new();
    let mut push_range = |a: f64, b: f64| {
        let i0 = sorted.partition_point(|p| p.0 < a);
        let i1 = sorted.partition_point(|p| p.0 <= b);
        for p in &sorted[i0..i1] {
            out.push(p);
        }
    };
    if lo < 0.0 {
        push_range(0.0, hi);
        push_range(lo + 1.0, 1.0);
    } else if hi >= 1.0 {
        push_range(0.0, hi - 1.0);
        push_range(lo, 1.0);
    } else {
        push_range(lo, hi);
    }
    out
}

/// Both sides of the moment identity plus the partition-sum targets.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub m: usize,
    pub n: usize,
    pub moment_value: f64,
    pub completed_sum_value: f64,
    /// Σ over all partitions of ∏ E(f^{|block|}) — the Poisson limit
    pub poisson_target: f64,
    /// same sum restricted to non-isolating partitions
    pub nonisolating_target: f64,
}

pub fn moment_report(
    spec: &SequenceSpec,
    n: usize,
    f: &TestFunction,
    m: usize,
) -> Result<MomentReport> {
    Ok(MomentReport {
        m,
        n,
        moment_value: moment_m(spec, n, f, m)?,
        completed_sum_value: completed_sum(spec, n, f, m)?,
        poisson_target: partition_target(f, m, false)?,
        nonisolating_target: partition_target(f, m, true)?,
    })
}
