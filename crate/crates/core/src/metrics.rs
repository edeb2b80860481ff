//! Empirical distances and statistical utilities shared by the experiments.

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// A sample of d-vectors with provenance.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub points: Vec<Vec<f64>>,
    pub provenance: String,
}

impl Ensemble {
    pub fn new(points: Vec<Vec<f64>>, provenance: impl Into<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Size("ensemble needs at least 2 samples".into()));
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::Size("ensemble points have mixed dimensions".into()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("ensemble contains non-finite samples".into()));
            }
        }
        Ok(Ensemble { points, provenance: provenance.into() })
    }

    pub fn from_scalars(values: &[f64], provenance: impl Into<String>) -> Result<Self> {
        Ensemble::new(values.iter().map(|&v| vec![v]).collect(), provenance)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[i]).collect()
    }

    /// Projections `<v, x>` for a unit vector `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Empirical `W_p` between two scalar samples through the monotone
/// (sorted) coupling, which is optimal in one dimension.
///
/// Unequal sizes are handled by deterministically thinning the larger
/// sample to evenly spaced order statistics.
pub fn w_p_1d(a: &Ensemble, b: &Ensemble, p: u32) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(Error::Size("w_p_1d needs one-dimensional ensembles".into()));
    }
    let xs = a.coordinate(0);
    let ys = b.coordinate(0);
    w_p_1d_values(&xs, &ys, p)
}

pub fn w_p_1d_values(xs: &[f64], ys: &[f64], p: u32) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Size("empty ensemble".into()));
    }
    if !(p == 1 || p == 2) {
        return Err(Error::Domain("p must be 1 or 2".into()));
    }
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let n = xs.len().min(ys.len());
    let pick = |sorted: &[f64], i: usize| -> f64 {
        // Evenly spaced order statistics when thinning.
        let stride = sorted.len() as f64 / n as f64;
        sorted[((i as f64 + 0.5) * stride) as usize % sorted.len()]
    };
    let mut acc = 0.0;
    for i in 0..n {
        let xi = if xs.len() == n { xs[i] } else { pick(&xs, i) };
        let yi = if ys.len() == n { ys[i] } else { pick(&ys, i) };
        let d = (xi - yi).abs();
        acc += if p == 1 { d } else { d * d };
    }
    let mean = acc / n as f64;
    Ok(if p == 1 { mean } else { mean.sqrt() })
}

/// Exact empirical `W_p` in dimension >= 2 through a minimum-cost perfect
/// matching. Capped at 512 points per side.
pub fn w_p_assignment(a: &Ensemble, b: &Ensemble, p: u32) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Size("assignment distance needs equal sample counts".into()));
    }
    if a.len() > 512 {
        return Err(Error::Size(format!(
            "assignment cap is 512 points, got {}; project to one dimension instead",
            a.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::Size("ensembles have different dimensions".into()));
    }
    if !(p == 1 || p == 2) {
        return Err(Error::Domain("p must be 1 or 2".into()));
    }
    let n = a.len();
    let mut cost = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let d_sq: f64 = a.points[i]
                .iter()
                .zip(&b.points[j])
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            cost[i * n + j] = if p == 1 { d_sq.sqrt() } else { d_sq };
        }
    }
    let total = assignment_cost(&cost, n);
    let mean = total / n as f64;
    Ok(if p == 1 { mean } else { mean.sqrt() })
}

/// Minimum total cost of a perfect matching on an n x n cost matrix;
/// Hungarian algorithm with potentials, O(n^3).
fn assignment_cost(cost: &[f64], n: usize) -> f64 {
    const INF: f64 = f64::INFINITY;
    // 1-based internal arrays; way[j] is the previous column on the
    // augmenting path.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        total += cost[(matched[j] - 1) * n + (j - 1)];
    }
    total
}

/// One-sided result of a Kolmogorov-Smirnov test against a given
/// distribution function.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub pass: bool,
}

/// KS statistic of a scalar sample against `target_cdf`, with the
/// asymptotic critical value at the given significance level.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], target_cdf: F, level: f64) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::Size("empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = target_cdf(x);
        sup = sup.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    let critical = ks_critical_value(xs.len(), level);
    Ok(KsResult { statistic: sup, critical_value: critical, pass: sup <= critical })
}

/// Asymptotic critical value: `sqrt(-ln(level/2) / (2n))`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / (2.0 * n as f64)).sqrt()
}

/// Two-sample KS statistic with the asymptotic critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Size("empty sample".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let mut sup: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        let t = x.min(y);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let eff = (n as f64 * m as f64) / (n + m) as f64;
    let critical = (-(level / 2.0).ln() / (2.0 * eff)).sqrt();
    Ok(KsResult { statistic: sup, critical_value: critical, pass: sup <= critical })
}

/// Least-squares slope of `log(value)` against `log(h)` with its standard
/// error; used for weak-error and variance-decay rates.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Size("rate fit needs at least 3 points".into()));
    }
    if points.iter().any(|&(h, v)| h <= 0.0 || v <= 0.0) {
        return Err(Error::Domain("rate fit needs positive (h, value) pairs".into()));
    }
    let xs: Vec<f64> = points.iter().map(|&(h, _)| h.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs distinct step sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let dof = (xs.len().max(3) - 2) as f64;
    let slope_se = (ss_res / dof / sxx).sqrt();
    Ok(RateFit { slope, intercept, slope_se })
}

/// Bootstrap standard error of a statistic of a scalar sample
/// (200 resamples, counter-seeded).
pub fn bootstrap_se<F: Fn(&[f64]) -> f64>(values: &[f64], stat: F, seed: u64) -> f64 {
    let resamples = 200;
    let mut rng = CounterRng::for_replica(seed, "bootstrap", 0);
    let n = values.len();
    let mut buf = vec![0.0; n];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[(rng.uniform() * n as f64) as usize % n];
        }
        stats.push(stat(&buf));
    }
    let mean = stats.iter().sum::<f64>() / resamples as f64;
    (stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (resamples - 1) as f64).sqrt()
}

/// Bootstrap standard error of the 1-d `W_p` between two samples: both
/// sides are resampled independently.
pub fn bootstrap_se_w_p(xs: &[f64], ys: &[f64], p: u32, seed: u64) -> f64 {
    let resamples = 200;
    let mut rng = CounterRng::for_replica(seed, "bootstrap-wp", 0);
    let mut bx = vec![0.0; xs.len()];
    let mut by = vec![0.0; ys.len()];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in bx.iter_mut() {
            *slot = xs[(rng.uniform() * xs.len() as f64) as usize % xs.len()];
        }
        for slot in by.iter_mut() {
            *slot = ys[(rng.uniform() * ys.len() as f64) as usize % ys.len()];
        }
        stats.push(w_p_1d_values(&bx, &by, p).unwrap());
    }
    let mean = stats.iter().sum::<f64>() / resamples as f64;
    (stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (resamples - 1) as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance with the standard error of the variance estimate
/// (via the fourth central moment).
pub fn variance_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    (var, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::std_normal_cdf;

    #[test]
    fn w1_translation() {
        let a = Ensemble::from_scalars(&[0.0, 0.0], "a").unwrap();
        let b = Ensemble::from_scalars(&[1.0, 1.0], "b").unwrap();
        assert_eq!(w_p_1d(&a, &b, 1).unwrap(), 1.0);
        assert_eq!(w_p_1d(&a, &a, 1).unwrap(), 0.0);
        assert_eq!(w_p_1d(&a, &a, 2).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_w2_matches_analytic() {
        // W2(N(0, s1^2), N(0, s2^2)) = |s1 - s2|
        let mut rng = CounterRng::for_replica(5, "w2", 0);
        let n = 100_000;
        let (s1, s2) = (1.0, 0.6);
        let xs: Vec<f64> = (0..n).map(|_| s1 * rng.normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| s2 * rng.normal()).collect();
        let w2 = w_p_1d_values(&xs, &ys, 2).unwrap();
        let se = bootstrap_se_w_p(&xs, &ys, 2, 17);
        assert!(
            (w2 - (s1 - s2).abs()).abs() <= 3.0 * se + 5e-3,
            "w2 = {w2}, se = {se}"
        );
    }

    #[test]
    fn assignment_matches_two_point_enumeration() {
        let a = Ensemble::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], "a").unwrap();
        let b = Ensemble::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], "b").unwrap();
        // Cross assignment has zero cost.
        assert_eq!(w_p_assignment(&a, &b, 1).unwrap(), 0.0);
        let c = Ensemble::new(vec![vec![2.0, 0.0], vec![3.0, 0.0]], "c").unwrap();
        // Direct assignment: (|0-2| + |1-3|)/2 = 2.
        assert_eq!(w_p_assignment(&a, &c, 1).unwrap(), 2.0);
    }

    #[test]
    fn assignment_agrees_with_sorted_coupling_in_1d() {
        let mut rng = CounterRng::for_replica(8, "assign", 0);
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| 0.5 + 0.8 * rng.normal()).collect();
        for p in [1, 2] {
            let direct = w_p_1d_values(&xs, &ys, p).unwrap();
            let a = Ensemble::new(xs.iter().map(|&x| vec![x, 0.0]).collect(), "a").unwrap();
            let b = Ensemble::new(ys.iter().map(|&y| vec![y, 0.0]).collect(), "b").unwrap();
            let via_matching = w_p_assignment(&a, &b, p).unwrap();
            assert!((direct - via_matching).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn assignment_matches_brute_force_small_n() {
        // All permutations for n <= 7.
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 1 {
                return vec![vec![0]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for i in 0..n {
                    let mut q: Vec<usize> = p.iter().map(|&v| if v >= i { v + 1 } else { v }).collect();
                    q.insert(0, i);
                    out.push(q);
                }
            }
            out
        }
        let mut rng = CounterRng::for_replica(13, "brute", 0);
        for n in 2..=7 {
            let a: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.normal(), rng.normal()]).collect();
            let b: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.normal(), rng.normal()]).collect();
            let ea = Ensemble::new(a.clone(), "a").unwrap();
            let eb = Ensemble::new(b.clone(), "b").unwrap();
            let via = w_p_assignment(&ea, &eb, 2).unwrap();
            let mut best = f64::INFINITY;
            for perm in permutations(n) {
                let cost: f64 = (0..n)
                    .map(|i| {
                        a[i].iter()
                            .zip(&b[perm[i]])
                            .map(|(u, v)| (u - v) * (u - v))
                            .sum::<f64>()
                    })
                    .sum();
                best = best.min((cost / n as f64).sqrt());
            }
            assert!((via - best).abs() < 1e-10, "n = {n}: {via} vs {best}");
        }
    }

    #[test]
    fn assignment_cap() {
        let pts: Vec<Vec<f64>> = (0..513).map(|i| vec![i as f64, 0.0]).collect();
        let a = Ensemble::new(pts.clone(), "a").unwrap();
        let b = Ensemble::new(pts, "b").unwrap();
        assert!(matches!(w_p_assignment(&a, &b, 2), Err(Error::Size(_))));
    }

    #[test]
    fn ks_detects_wrong_target() {
        let constant = vec![0.3; 200];
        let res = ks_statistic(&constant, std_normal_cdf, 1e-3).unwrap();
        assert!(!res.pass);
    }

    #[test]
    fn ks_single_point_statistic_in_range() {
        let res = ks_statistic(&[0.1], std_normal_cdf, 1e-3).unwrap();
        assert!(res.statistic >= 0.0 && res.statistic <= 1.0);
    }

    #[test]
    fn ks_accepts_true_target() {
        let mut rng = CounterRng::for_replica(21, "ks", 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
        let res = ks_statistic(&xs, std_normal_cdf, 1e-3).unwrap();
        assert!(res.pass, "stat {} vs crit {}", res.statistic, res.critical_value);
    }

    #[test]
    fn two_sample_ks_same_law() {
        let mut rng = CounterRng::for_replica(22, "ks2", 0);
        let xs: Vec<f64> = (0..50_000).map(|_| rng.normal()).collect();
        let ys: Vec<f64> = (0..50_000).map(|_| rng.normal()).collect();
        assert!(ks_two_sample(&xs, &ys, 1e-3).unwrap().pass);
        let zs: Vec<f64> = (0..50_000).map(|_| 0.2 + rng.normal()).collect();
        assert!(!ks_two_sample(&xs, &zs, 1e-3).unwrap().pass);
    }

    #[test]
    fn rate_fit_exact_powers() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&h| (h, h)).collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4, 0.8].iter().map(|&h: &f64| (h, h.sqrt())).collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_noisy_slope_within_ci() {
        let mut rng = CounterRng::for_replica(30, "rate", 0);
        let pts: Vec<(f64, f64)> = [0.05, 0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|&h| (h, h * (1.0 + 0.05 * rng.normal())))
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() <= 3.0 * fit.slope_se + 0.05);
    }

    #[test]
    fn rate_fit_rejects_nonpositive() {
        assert!(rate_fit(&[(0.1, 1.0), (0.2, -1.0), (0.4, 1.0)]).is_err());
        assert!(rate_fit(&[(0.1, 1.0), (0.2, 1.0)]).is_err());
    }

    #[test]
    fn w2_dominates_w1() {
        let mut rng = CounterRng::for_replica(31, "jensen", 0);
        for _ in 0..20 {
            let xs: Vec<f64> = (0..500).map(|_| rng.normal()).collect();
            let ys: Vec<f64> = (0..500).map(|_| 0.3 + 1.4 * rng.normal()).collect();
            let w1 = w_p_1d_values(&xs, &ys, 1).unwrap();
            let w2 = w_p_1d_values(&xs, &ys, 2).unwrap();
            assert!(w2 >= w1 - 1e-12);
        }
    }
}
