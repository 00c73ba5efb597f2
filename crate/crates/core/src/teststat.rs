//! Statistics engine: ordered samples, circular gap distribution,
//! nearest-neighbor laws, and windowed m-point correlation sums.

use crate::error::{Error, Result};
use crate::sequences::{eval_frac, Precision, SequenceSpec};
use crate::testfn::TestFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Where a sample's values came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSource {
    Sequence(SequenceSpec),
    /// diagnostic: n ↦ n/N
    EquallySpaced,
    /// diagnostic: i.i.d. uniform with a fixed seed
    IidUniform { seed: u64 },
    External,
}

/// Sorted fractional parts u_N(1) ≤ ⋯ ≤ u_N(N).
#[derive(Debug, Clone)]
pub struct OrderedSample {
    pub n: usize,
    pub values: Vec<f64>,
    pub source: SampleSource,
}

/// Scaled circular distance N·‖a − b‖ with ‖t‖ the distance of t to the
/// nearest integer. Canonical: every consumer (window engine, brute-force
/// oracle, CLI checks) must call this, so the two sides agree bitwise.
#[inline]
pub fn scaled_circ_dist(a: f64, b: f64, n: usize) -> f64 {
    let d = (a - b).abs();
    let d = if d > 0.5 { 1.0 - d } else { d };
    n as f64 * d
}

const DOUBLE_PRECISION_CAP: usize = 10_000_000;

/// Sorted fractional parts of ω(1..N).
pub fn ordered_points(spec: &SequenceSpec, n: usize) -> Result<OrderedSample> {
    if n < 2 {
        return Err(Error::domain("ordered_points requires N >= 2"));
    }
    if spec.precision == Precision::Double && n > DOUBLE_PRECISION_CAP {
        return Err(Error::Precision(format!(
            "N={n} exceeds the double-precision cap {DOUBLE_PRECISION_CAP}; \
             use Compensated precision"
        )));
    }
    let mut values: Vec<f64> = (1..=n as u64)
        .into_par_iter()
        .map(|i| eval_frac(spec, i).expect("n >= 1"))
        .collect();
    values.par_sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(OrderedSample {
        n,
        values,
        source: SampleSource::Sequence(*spec),
    })
}

impl OrderedSample {
    pub fn equally_spaced(n: usize) -> OrderedSample {
        let values = (0..n).map(|i| i as f64 / n as f64).collect();
        OrderedSample {
            n,
            values,
            source: SampleSource::EquallySpaced,
        }
    }

    pub fn iid_uniform(n: usize, seed: u64) -> OrderedSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        OrderedSample {
            n,
            values,
            source: SampleSource::IidUniform { seed },
        }
    }

    pub fn from_values(mut values: Vec<f64>) -> Result<OrderedSample> {
        if values.len() < 2 {
            return Err(Error::domain("from_values requires at least 2 values"));
        }
        if values.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::domain("from_values requires values in [0,1)"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(OrderedSample {
            n: values.len(),
            values,
            source: SampleSource::External,
        })
    }

    /// Circular gaps scaled by N: g_i = N(u(i+1) − u(i)), wrap-around
    /// g_N = N(u(1) + 1 − u(N)). Sum is exactly N up to N·ulp.
    pub fn scaled_gaps(&self) -> Vec<f64> {
        let n = self.n;
        let v = &self.values;
        let mut gaps = Vec::with_capacity(n);
        for i in 0..n - 1 {
            gaps.push(n as f64 * (v[i + 1] - v[i]));
        }
        gaps.push(n as f64 * (v[0] + 1.0 - v[n - 1]));
        gaps
    }

    /// Empirical CDF of scaled circular gaps: fraction strictly below each s.
    pub fn gap_cdf(&self, s_grid: &[f64]) -> Vec<f64> {
        let mut gaps = self.scaled_gaps();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s_grid
            .iter()
            .map(|&s| gaps.partition_point(|&g| g < s) as f64 / self.n as f64)
            .collect()
    }

    /// Histogram of scaled circular gaps; the final count is the overflow
    /// bin (gaps at or above the last edge). Gaps below the first edge
    /// land in the first bin.
    pub fn gap_histogram(&self, edges: &[f64]) -> Result<GapHistogram> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("gap_histogram requires increasing edges"));
        }
        let bins = edges.len() - 1;
        let mut counts = vec![0u64; bins + 1];
        for g in self.scaled_gaps() {
            let idx = match edges.partition_point(|&e| e <= g) {
                0 => 0,
                k if k > bins => bins, // overflow
                k => k - 1,
            };
            counts[idx] += 1;
        }
        let density = (0..bins)
            .map(|i| counts[i] as f64 / (self.n as f64 * (edges[i + 1] - edges[i])))
            .collect();
        Ok(GapHistogram {
            edges: edges.to_vec(),
            counts,
            n: self.n,
            density,
        })
    }

    /// Kolmogorov–Smirnov statistic of the scaled gaps against 1 − e^{−s}.
    pub fn ks_exponential(&self) -> Result<f64> {
        if self.n < 100 {
            return Err(Error::domain("ks_exponential requires N >= 100"));
        }
        let mut gaps = self.scaled_gaps();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = self.n as f64;
        let mut ks: f64 = 0.0;
        for (i, g) in gaps.iter().enumerate() {
            let f = 1.0 - (-g).exp();
            ks = ks.max((f - i as f64 / n).abs());
            ks = ks.max(((i + 1) as f64 / n - f).abs());
        }
        Ok(ks)
    }

    /// Empirical CDF of N·(circular distance to the i-th nearest neighbor).
    pub fn nearest_neighbor_cdf(&self, i: usize, s_grid: &[f64]) -> Result<Vec<f64>> {
        if i < 1 || i > 3 {
            return Err(Error::domain("nearest_neighbor_cdf requires 1 <= i <= 3"));
        }
        if self.n < 2 * i + 1 {
            return Err(Error::domain("sample too small for i-th neighbor"));
        }
        let n = self.n;
        let v = &self.values;
        let mut dists = Vec::with_capacity(n);
        let mut cand = Vec::with_capacity(2 * i);
        for c in 0..n {
            cand.clear();
            for off in 1..=i {
                let r = (c + off) % n;
                let l = (c + n - off) % n;
                cand.push(scaled_circ_dist(v[c], v[r], n));
                cand.push(scaled_circ_dist(v[c], v[l], n));
            }
            cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
            dists.push(cand[i - 1]);
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(s_grid
            .iter()
            .map(|&s| dists.partition_point(|&d| d < s) as f64 / n as f64)
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct GapHistogram {
    pub edges: Vec<f64>,
    /// per-bin counts; the extra last entry is the overflow bin
    pub counts: Vec<u64>,
    pub n: usize,
    /// density per finite bin: count / (N · width)
    pub density: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub m: usize,
    pub n: usize,
    pub value: f64,
    /// Poissonian target ∏ᵢ ∫fᵢ
    pub reference: f64,
    pub test_function: String,
}

fn check_factors(factors: &[TestFunction], n: usize) -> Result<Vec<f64>> {
    let m = factors.len() + 1;
    if !(2..=5).contains(&m) {
        return Err(Error::domain(format!(
            "correlate_m supports 2 <= m <= 5, got m={m}"
        )));
    }
    let mut radii = Vec::with_capacity(factors.len());
    for f in factors {
        let (lo, hi) = f.support();
        let s = lo.abs().max(hi.abs());
        if s > 10.0 {
            return Err(Error::domain(format!(
                "factor support radius {s} exceeds the cap 10"
            )));
        }
        if s / n as f64 >= 0.5 {
            return Err(Error::domain(format!(
                "window S/N = {}/{} reaches the half-circle; N too small",
                s, n
            )));
        }
        radii.push(s);
    }
    Ok(radii)
}

/// m-point correlation sum
/// R^(m) = (1/N) Σ* f₁(N‖x(n₁)−x(n₂)‖) ⋯ f_{m−1}(N‖x(n_{m−1})−x(n_m)‖),
/// the sum over m-tuples of pairwise-distinct indices.
///
/// Chains are enumerated through sorted sliding windows of half-width
/// Sᵢ/N per link, so every contributing tuple is visited (the windows are
/// widened by a guard margin; anything extra evaluates to an exact zero).
/// Tuples are visited in the same lexicographic order as the brute-force
/// enumeration and terms are accumulated left-associated, which makes the
/// two bitwise equal: skipping a tuple whose factor product is exactly 0.0
/// never changes a nonnegative IEEE sum.
pub fn correlate_m(sample: &OrderedSample, factors: &[TestFunction]) -> Result<CorrelationEstimate> {
    let radii = check_factors(factors, sample.n)?;
    let n = sample.n;
    let v = &sample.values;
    // half-widths in value space, guard-widened
    let windows: Vec<f64> = radii
        .iter()
        .map(|s| (s / n as f64) * (1.0 + 1e-12) + 1e-15)
        .collect();

    let mut total = 0.0f64;
    let mut tuple = [0usize; 5];
    for start in 0..n {
        tuple[0] = start;
        chain_step(v, n, factors, &windows, &mut tuple, 1, 1.0, &mut total);
    }

    let mut reference = 1.0;
    for f in factors {
        reference *= f.expectation_power(1)?;
    }
    Ok(CorrelationEstimate {
        m: factors.len() + 1,
        n,
        value: total / n as f64,
        reference,
        test_function: format!("{:?}", factors.iter().map(|f| f.shape).collect::<Vec<_>>()),
    })
}

fn chain_step(
    v: &[f64],
    n: usize,
    factors: &[TestFunction],
    windows: &[f64],
    tuple: &mut [usize; 5],
    depth: usize,
    partial: f64,
    total: &mut f64,
) {
    let link = depth - 1;
    let cur = v[tuple[depth - 1]];
    let w = windows[link];
    // candidate index ranges covering (cur − w, cur + w) mod 1, visited in
    // ascending index order to mirror the brute-force loop order
    let lo_val = cur - w;
    let hi_val = cur + w;
    let mut ranges: [(usize, usize); 2] = [(0, 0), (0, 0)];
    let mut nr = 0;
    if lo_val < 0.0 {
        let a = v.partition_point(|&x| x < lo_val + 1.0);
        ranges[nr] = (0, v.partition_point(|&x| x <= hi_val));
        nr += 1;
        ranges[nr] = (a, n);
        nr += 1;
    } else if hi_val >= 1.0 {
        ranges[nr] = (0, v.partition_point(|&x| x <= hi_val - 1.0));
        nr += 1;
        ranges[nr] = (v.partition_point(|&x| x < lo_val), n);
        nr += 1;
    } else {
        ranges[nr] = (v.partition_point(|&x| x < lo_val), v.partition_point(|&x| x <= hi_val));
        nr += 1;
    }
    for &(a, b) in &ranges[..nr] {
        'cand: for j in a..b {
            for &used in &tuple[..depth] {
                if used == j {
                    continue 'cand;
                }
            }
            let d = scaled_circ_dist(v[tuple[depth - 1]], v[j], n);
            let val = factors[link].eval(d);
            if val == 0.0 {
                continue;
            }
            let p = partial * val;
            tuple[depth] = j;
            if depth == factors.len() {
                *total += p;
            } else {
                chain_step(v, n, factors, windows, tuple, depth + 1, p, total);
            }
        }
    }
}

/// Brute-force O(N^m) reference enumeration of the same sum; exists as an
/// oracle for the window engine and for `--brute-force-check` runs.
pub fn correlate_m_brute(sample: &OrderedSample, factors: &[TestFunction]) -> Result<f64> {
    check_factors(factors, sample.n)?;
    let n = sample.n;
    let v = &sample.values;
    let m = factors.len() + 1;
    let mut idx = vec![0usize; m];
    let mut total = 0.0f64;
    'outer: loop {
        let distinct = (0..m).all(|i| (0..i).all(|j| idx[i] != idx[j]));
        if distinct {
            let mut p = 1.0f64;
            for (link, f) in factors.iter().enumerate() {
                p *= f.eval(scaled_circ_dist(v[idx[link]], v[idx[link + 1]], n));
                if p == 0.0 {
                    break;
                }
            }
            if p != 0.0 {
                total += p;
            }
        }
        // lexicographic increment
        let mut d = m;
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(total / n as f64)
}

/// Regularized lower incomplete gamma tail: P(i-th neighbor dist ≤ r) for a
/// unit Poisson process, both sides counted, i.e. 1 − e^{−2r}Σ_{j<i}(2r)^j/j!.
pub fn poisson_neighbor_cdf(i: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let x = 2.0 * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..i {
        term *= x / j as f64;
        sum += term;
    }
    1.0 - (-x).exp() * sum
}
