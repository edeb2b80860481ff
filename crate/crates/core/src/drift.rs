//! Drift models, their subsampling estimators and certified constants.
//!
//! A [`DriftModel`] couples an evaluation rule `b` with the constants
//! `(L, K, R)` under which it is Lipschitz and contractive at infinity:
//!
//! - `|b(x) - b(y)| <= L |x - y|` for all pairs,
//! - `<x - y, b(x) - b(y)> <= -K |x - y|^2` whenever `|x - y| > R`.
//!
//! Constants are stored, not inferred. [`verify_assumptions`] certifies them
//! numerically on a bounded grid; validity outside the grid rests on the
//! analytic derivation for the concrete model.

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Inner evaluator of one finite-sum component.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentDrift {
    /// Constant vector field, used mostly by enumeration oracles.
    Constant { value: Vec<f64> },
    /// `weight * (-x)`.
    ScaledOu { weight: f64 },
    /// `weight *` the truncated double-well drift with the given parameters.
    ScaledDoubleWell { weight: f64, a_dw: f64, n: f64 },
}

impl ComponentDrift {
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.accumulate_into(x, out);
    }

    /// Adds this component's value to `out`; allocation-free.
    #[inline]
    pub fn accumulate_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ComponentDrift::Constant { value } => {
                for (o, v) in out.iter_mut().zip(value) {
                    *o += v;
                }
            }
            ComponentDrift::ScaledOu { weight } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += -weight * xi;
                }
            }
            ComponentDrift::ScaledDoubleWell { weight, a_dw, n } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o += weight * double_well_1d(xi, *a_dw, *n);
                }
            }
        }
    }
}

/// Drift of the truncated double-well potential in one dimension.
///
/// `U(x) = x^2 g_n(x)^2 + a^2 - 2 a x g_n(x)` with `g_n` the clamp to
/// `[-n, n]`; the drift is `-U'`.
#[inline]
pub fn double_well_1d(x: f64, a_dw: f64, n: f64) -> f64 {
    if x.abs() <= n {
        -4.0 * x * (x * x - a_dw)
    } else {
        -2.0 * n * n * x + 2.0 * a_dw * n * x.signum()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftKind {
    /// `b(x) = -x`.
    OrnsteinUhlenbeck,
    /// Coordinatewise truncated double-well drift.
    TruncatedDoubleWell { a_dw: f64, n: f64 },
    /// `b(x) = sum_i component_i(x)`.
    FiniteSum { components: Vec<ComponentDrift> },
}

/// A drift together with the constants certifying its assumptions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriftModel {
    pub kind: DriftKind,
    pub dim: usize,
    /// Global Lipschitz constant `L`.
    pub lipschitz_l: f64,
    /// Contractivity-at-infinity rate `K`.
    pub contraction_k: f64,
    /// Radius beyond which contractivity holds.
    pub radius_r: f64,
    /// `|b(0)|`.
    pub b_at_zero_norm: f64,
}

impl DriftModel {
    pub fn new(
        kind: DriftKind,
        dim: usize,
        lipschitz_l: f64,
        contraction_k: f64,
        radius_r: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(lipschitz_l > 0.0) || !(contraction_k > 0.0) || radius_r < 0.0 {
            return Err(Error::Domain(
                "drift constants must satisfy L > 0, K > 0, R >= 0".into(),
            ));
        }
        if contraction_k > lipschitz_l {
            // The two conditions are jointly inconsistent otherwise.
            return Err(Error::Domain(format!(
                "contraction K = {contraction_k} exceeds Lipschitz L = {lipschitz_l}"
            )));
        }
        if let DriftKind::TruncatedDoubleWell { a_dw, n } = kind {
            if !(a_dw > 0.0) || !(n > 0.0) {
                return Err(Error::Domain("double-well parameters must be positive".into()));
            }
        }
        let mut model = DriftModel {
            kind,
            dim,
            lipschitz_l,
            contraction_k,
            radius_r,
            b_at_zero_norm: 0.0,
        };
        let mut b0 = vec![0.0; dim];
        model.eval_into(&vec![0.0; dim], &mut b0);
        model.b_at_zero_norm = norm(&b0);
        Ok(model)
    }

    /// `b(x) = -x`, globally contractive with `L = K = 1`, `R = 0`.
    pub fn ornstein_uhlenbeck(dim: usize) -> Self {
        DriftModel::new(DriftKind::OrnsteinUhlenbeck, dim, 1.0, 1.0, 0.0).unwrap()
    }

    pub fn truncated_double_well(
        a_dw: f64,
        n: f64,
        dim: usize,
        lipschitz_l: f64,
        contraction_k: f64,
        radius_r: f64,
    ) -> Result<Self> {
        DriftModel::new(
            DriftKind::TruncatedDoubleWell { a_dw, n },
            dim,
            lipschitz_l,
            contraction_k,
            radius_r,
        )
    }

    pub fn component_count(&self) -> usize {
        match &self.kind {
            DriftKind::FiniteSum { components } => components.len(),
            _ => 1,
        }
    }

    /// Evaluates the drift without allocation. `x` is not validated.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            DriftKind::OrnsteinUhlenbeck => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -xi;
                }
            }
            DriftKind::TruncatedDoubleWell { a_dw, n } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = double_well_1d(xi, *a_dw, *n);
                }
            }
            DriftKind::FiniteSum { components } => {
                out.fill(0.0);
                for c in components {
                    c.accumulate_into(x, out);
                }
            }
        }
    }
}

/// Evaluates `b(x)`, rejecting non-finite input.
pub fn eval_drift(model: &DriftModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim {
        return Err(Error::Domain(format!(
            "point has dimension {}, model has {}",
            x.len(),
            model.dim
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("drift evaluated at non-finite point".into()));
    }
    let mut out = vec![0.0; model.dim];
    model.eval_into(x, &mut out);
    Ok(out)
}

/// Lyapunov constants `(M1, M2)` with `<b(x), x> <= M2 - M1 |x|^2`:
/// `M1 = K/2` and `M2 = L q^2 + |b(0)| q` for `q = max(R, 2|b(0)|/K)`.
pub fn lyapunov_constants(model: &DriftModel) -> (f64, f64) {
    let q = model.radius_r.max(2.0 * model.b_at_zero_norm / model.contraction_k);
    let m1 = model.contraction_k / 2.0;
    let m2 = model.lipschitz_l * q * q + model.b_at_zero_norm * q;
    (m1, m2)
}

/// Subsampling scheme for a finite-sum drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SubsamplingScheme {
    /// `s` independent uniform indices.
    WithReplacement { s: usize },
    /// A uniform size-`s` subset of the `m` components.
    WithoutReplacement { s: usize },
}

impl SubsamplingScheme {
    pub fn sample_size(&self) -> usize {
        match self {
            SubsamplingScheme::WithReplacement { s } => *s,
            SubsamplingScheme::WithoutReplacement { s } => *s,
        }
    }
}

/// An explicit subsample draw: the index tuple (with replacement) or the
/// index set (without), so the same draw can feed exhaustive oracles and
/// streaming simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampleDraw(pub Vec<usize>);

/// A finite-sum drift with an unbiased subsampling estimator and the
/// constants of its variance and coupling assumptions.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InaccurateDrift {
    /// Finite-sum base model; its constants must hold for the mean drift.
    pub base: DriftModel,
    pub scheme: SubsamplingScheme,
    /// Variance scale: the estimator variance is certified to be at most
    /// `sigma^2 (1 + |x|^2) h^alpha` over the configured h-range.
    pub sigma: f64,
    pub alpha: f64,
    /// Pathwise (almost-sure) Lipschitz and contractivity constants of the
    /// estimator, holding for every draw.
    pub bar_l: f64,
    pub bar_k: f64,
    pub bar_r: f64,
    /// Level-coupling constants: the fine/coarse estimator mismatch is at
    /// most `L_u (1 + |x|^2) h^{alpha_c}`.
    pub l_u: f64,
    pub alpha_c: f64,
}

impl InaccurateDrift {
    pub fn new(base: DriftModel, scheme: SubsamplingScheme, sigma: f64, alpha: f64) -> Result<Self> {
        let m = match &base.kind {
            DriftKind::FiniteSum { components } => components.len(),
            _ => {
                return Err(Error::Domain(
                    "inaccurate drift requires a finite-sum base model".into(),
                ))
            }
        };
        let s = scheme.sample_size();
        if s == 0 || s > m {
            return Err(Error::Domain(format!(
                "subsample size s = {s} must satisfy 1 <= s <= m = {m}"
            )));
        }
        if !(sigma > 0.0) || alpha < 0.0 {
            return Err(Error::Domain("sigma must be positive and alpha nonnegative".into()));
        }
        let bar_l = base.lipschitz_l;
        let bar_k = base.contraction_k;
        let bar_r = base.radius_r;
        Ok(InaccurateDrift {
            base,
            scheme,
            sigma,
            alpha,
            bar_l,
            bar_k,
            bar_r,
            l_u: sigma * sigma * 6.0,
            alpha_c: alpha,
        })
    }

    pub fn component_count(&self) -> usize {
        self.base.component_count()
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    fn components(&self) -> &[ComponentDrift] {
        match &self.base.kind {
            DriftKind::FiniteSum { components } => components,
            _ => unreachable!("validated at construction"),
        }
    }

    /// Draws subsample indices from the configured scheme.
    pub fn sample_draw(&self, rng: &mut CounterRng) -> SubsampleDraw {
        let m = self.component_count();
        let s = self.scheme.sample_size();
        match self.scheme {
            SubsamplingScheme::WithReplacement { .. } => {
                SubsampleDraw((0..s).map(|_| (rng.uniform() * m as f64) as usize % m).collect())
            }
            SubsamplingScheme::WithoutReplacement { .. } => {
                // Partial Fisher-Yates over the index range.
                let mut idx: Vec<usize> = (0..m).collect();
                for i in 0..s {
                    let j = i + ((rng.uniform() * (m - i) as f64) as usize).min(m - i - 1);
                    idx.swap(i, j);
                }
                idx.truncate(s);
                SubsampleDraw(idx)
            }
        }
    }

    /// Evaluates `(m/s) sum_{i in u} component_i(x)` without allocation.
    pub fn eval_subsampled_into(&self, x: &[f64], draw: &SubsampleDraw, out: &mut [f64]) {
        let comps = self.components();
        let m = comps.len() as f64;
        let s = draw.0.len() as f64;
        out.fill(0.0);
        for &i in &draw.0 {
            comps[i].accumulate_into(x, out);
        }
        let scale = m / s;
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
}

/// Evaluates the subsampled estimator `(m/s) sum_{i in u} b_i(x)`.
pub fn eval_inaccurate_drift(
    model: &InaccurateDrift,
    x: &[f64],
    draw: &SubsampleDraw,
) -> Result<Vec<f64>> {
    let m = model.component_count();
    if draw.0.is_empty() || draw.0.len() != model.scheme.sample_size() {
        return Err(Error::Domain(format!(
            "draw has {} indices, scheme expects {}",
            draw.0.len(),
            model.scheme.sample_size()
        )));
    }
    if let Some(&bad) = draw.0.iter().find(|&&i| i >= m) {
        return Err(Error::Domain(format!("subsample index {bad} out of range (m = {m})")));
    }
    if let SubsamplingScheme::WithoutReplacement { .. } = model.scheme {
        let mut seen = draw.0.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != draw.0.len() {
            return Err(Error::Domain("without-replacement draw repeats an index".into()));
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("estimator evaluated at non-finite point".into()));
    }
    let mut out = vec![0.0; model.dim()];
    model.eval_subsampled_into(x, draw, &mut out);
    Ok(out)
}

/// Closed-form variance of the subsampling estimator at `x`.
///
/// With replacement: `(1/s) (m sum_j |b_j(x)|^2 - |b(x)|^2)`.
/// Without replacement:
/// `(m/s)(1 - s/m)(m/(m-1)) sum_j |b_j(x) - b(x)/m|^2`.
pub fn subsampling_variance(model: &InaccurateDrift, x: &[f64]) -> Result<f64> {
    let comps = model.components();
    let m = comps.len();
    let d = model.dim();
    let mut b = vec![0.0; d];
    model.base.eval_into(x, &mut b);
    let mut buf = vec![0.0; d];
    match model.scheme {
        SubsamplingScheme::WithReplacement { s } => {
            let mut sum_sq = 0.0;
            for c in comps {
                c.eval_into(x, &mut buf);
                sum_sq += sq_norm(&buf);
            }
            Ok(((m as f64) * sum_sq - sq_norm(&b)) / s as f64)
        }
        SubsamplingScheme::WithoutReplacement { s } => {
            if s == m {
                // Full sample: the finite-population factor (1 - s/m) is 0.
                return Ok(0.0);
            }
            if m == 1 {
                return Err(Error::Domain(
                    "without-replacement subsampling with m = 1 and s < m is impossible".into(),
                ));
            }
            let mut centred = 0.0;
            for c in comps {
                c.eval_into(x, &mut buf);
                let mut dev = 0.0;
                for (bi, bj) in buf.iter().zip(&b) {
                    let v = bi - bj / m as f64;
                    dev += v * v;
                }
                centred += dev;
            }
            let mf = m as f64;
            let sf = s as f64;
            Ok((mf / sf) * (1.0 - sf / mf) * (mf / (mf - 1.0)) * centred)
        }
    }
}

/// Specification of the certification grid for [`verify_assumptions`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Number of random point pairs.
    pub pairs: usize,
    /// Half-width of the sampling box.
    pub box_radius: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { pairs: 10_000, box_radius: 50.0, seed: 0x5eed }
    }
}

/// Numerical certification report for the assumption constants of a model.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// `max |b(x)-b(y)| / |x-y|` over sampled pairs.
    pub max_lipschitz_ratio: f64,
    /// `min -<x-y, b(x)-b(y)> / |x-y|^2` over pairs with `|x-y| > R`;
    /// `+inf` when no sampled pair is separated beyond `R`.
    pub min_contraction_ratio: f64,
    pub contraction_pairs: usize,
    pub lipschitz_ok: bool,
    pub contraction_ok: bool,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.lipschitz_ok && self.contraction_ok
    }
}

/// Certifies the stored `(L, K, R)` on random pairs in a bounded box; in one
/// dimension a dense deterministic pair scan is added.
pub fn verify_assumptions(model: &DriftModel, grid: GridSpec) -> AssumptionReport {
    let mut rng = CounterRng::for_replica(grid.seed, "verify-assumptions", 0);
    let d = model.dim;
    let mut max_lip: f64 = 0.0;
    let mut min_contr = f64::INFINITY;
    let mut contraction_pairs = 0usize;
    let mut bx = vec![0.0; d];
    let mut by = vec![0.0; d];

    let mut consider = |x: &[f64], y: &[f64], bx: &mut [f64], by: &mut [f64]| {
        let dist_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist_sq == 0.0 {
            return;
        }
        model.eval_into(x, bx);
        model.eval_into(y, by);
        let mut diff_sq = 0.0;
        let mut inner = 0.0;
        for i in 0..x.len() {
            let db = bx[i] - by[i];
            diff_sq += db * db;
            inner += (x[i] - y[i]) * db;
        }
        max_lip = max_lip.max((diff_sq / dist_sq).sqrt());
        if dist_sq.sqrt() > model.radius_r {
            contraction_pairs += 1;
            min_contr = min_contr.min(-inner / dist_sq);
        }
    };

    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for _ in 0..grid.pairs {
        for v in x.iter_mut().chain(y.iter_mut()) {
            *v = (2.0 * rng.uniform() - 1.0) * grid.box_radius;
        }
        consider(&x, &y, &mut bx, &mut by);
    }
    if d == 1 {
        // Dense scan catches the worst chord slope of one-dimensional models.
        let steps = 400usize;
        for i in 0..=steps {
            let xi = -grid.box_radius + 2.0 * grid.box_radius * i as f64 / steps as f64;
            for j in (i + 1)..=steps {
                let yj = -grid.box_radius + 2.0 * grid.box_radius * j as f64 / steps as f64;
                consider(&[xi], &[yj], &mut bx, &mut by);
            }
        }
    }

    let tol = 1e-9;
    AssumptionReport {
        max_lipschitz_ratio: max_lip,
        min_contraction_ratio: min_contr,
        contraction_pairs,
        lipschitz_ok: max_lip <= model.lipschitz_l * (1.0 + tol),
        contraction_ok: contraction_pairs == 0
            || min_contr >= model.contraction_k * (1.0 - tol),
    }
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    sq_norm(v).sqrt()
}

#[inline]
pub fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Builds the finite-sum drift `b_i(x) = w_i b(x)` with weights
/// `w_i = (1 ± spread)/m` alternating, so the components sum to `b` exactly
/// and every draw of the estimator is `kappa(U) b(x)` with
/// `kappa in [1-spread, 1+spread]`.
pub fn weighted_double_well_sum(
    a_dw: f64,
    n: f64,
    dim: usize,
    components: usize,
    spread: f64,
    lipschitz_l: f64,
    contraction_k: f64,
    radius_r: f64,
) -> Result<DriftModel> {
    if components == 0 || components % 2 != 0 {
        return Err(Error::Config("component count must be positive and even".into()));
    }
    if !(0.0..1.0).contains(&spread) {
        return Err(Error::Config("weight spread must lie in [0, 1)".into()));
    }
    let m = components as f64;
    let comps = (0..components)
        .map(|i| ComponentDrift::ScaledDoubleWell {
            weight: if i % 2 == 0 { (1.0 + spread) / m } else { (1.0 - spread) / m },
            a_dw,
            n,
        })
        .collect();
    DriftModel::new(
        DriftKind::FiniteSum { components: comps },
        dim,
        lipschitz_l,
        contraction_k,
        radius_r,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou_sum(values: &[f64]) -> InaccurateDrift {
        // Constant components so the estimator algebra is fully explicit.
        let comps = values
            .iter()
            .map(|&v| ComponentDrift::Constant { value: vec![v] })
            .collect::<Vec<_>>();
        let base =
            DriftModel::new(DriftKind::FiniteSum { components: comps }, 1, 1.0, 1.0, 0.0).unwrap();
        InaccurateDrift::new(base, SubsamplingScheme::WithReplacement { s: 1 }, 1.0, 1.0).unwrap()
    }

    #[test]
    fn ou_drift_at_origin() {
        let model = DriftModel::ornstein_uhlenbeck(1);
        assert_eq!(eval_drift(&model, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn double_well_critical_point_and_value() {
        let model = DriftModel::truncated_double_well(1.0, 10.0, 1, 1196.0, 1.0, 3.0).unwrap();
        assert_eq!(eval_drift(&model, &[1.0]).unwrap(), vec![0.0]);
        // -4 * 0.5 * (0.25 - 1) = 1.5
        let b = eval_drift(&model, &[0.5]).unwrap();
        assert!((b[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn double_well_matches_finite_difference_of_potential() {
        let (a, n) = (1.0, 10.0);
        let u = |x: f64| {
            let g = x.clamp(-n, n);
            x * x * g * g + a * a - 2.0 * a * x * g
        };
        let h = 1e-6;
        for &x in &[0.5, -0.3, 2.0, 9.0, 11.0, -15.0] {
            let fd = -(u(x + h) - u(x - h)) / (2.0 * h);
            let b = double_well_1d(x, a, n);
            assert!((fd - b).abs() < 1e-5, "x = {x}: fd {fd} vs b {b}");
        }
    }

    #[test]
    fn double_well_outside_truncation() {
        // -2 n^2 x + 2 a n sign(x) for |x| > n
        let b = double_well_1d(12.0, 1.0, 10.0);
        assert!((b - (-2.0 * 100.0 * 12.0 + 20.0)).abs() < 1e-12);
        let b = double_well_1d(-12.0, 1.0, 10.0);
        assert!((b - (2.0 * 100.0 * 12.0 - 20.0)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_rejected() {
        let model = DriftModel::ornstein_uhlenbeck(2);
        assert!(eval_drift(&model, &[f64::NAN, 0.0]).is_err());
        assert!(eval_drift(&model, &[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn inconsistent_constants_rejected() {
        assert!(DriftModel::new(DriftKind::OrnsteinUhlenbeck, 1, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn subsampled_estimator_values() {
        // m = 2, s = 2, full-sample average recovers b(x) = 4.
        let mut model = ou_sum(&[1.0, 3.0]);
        model.scheme = SubsamplingScheme::WithReplacement { s: 2 };
        let v = eval_inaccurate_drift(&model, &[0.0], &SubsampleDraw(vec![0, 1])).unwrap();
        assert_eq!(v, vec![4.0]);

        // m = 2, s = 1, u = (2nd component): (2/1) * 3 = 6.
        model.scheme = SubsamplingScheme::WithReplacement { s: 1 };
        let v = eval_inaccurate_drift(&model, &[0.0], &SubsampleDraw(vec![1])).unwrap();
        assert_eq!(v, vec![6.0]);

        // m = 3, s = 2 without replacement, u = {1st, 3rd}: (3/2)(1+6) = 10.5.
        let mut model = ou_sum(&[1.0, 2.0, 6.0]);
        model.scheme = SubsamplingScheme::WithoutReplacement { s: 2 };
        let v = eval_inaccurate_drift(&model, &[0.0], &SubsampleDraw(vec![0, 2])).unwrap();
        assert_eq!(v, vec![10.5]);
    }

    #[test]
    fn estimator_rejects_bad_draws() {
        let model = ou_sum(&[1.0, 3.0]);
        assert!(eval_inaccurate_drift(&model, &[0.0], &SubsampleDraw(vec![5])).is_err());
        let mut model = ou_sum(&[1.0, 2.0, 6.0]);
        model.scheme = SubsamplingScheme::WithoutReplacement { s: 2 };
        assert!(eval_inaccurate_drift(&model, &[0.0], &SubsampleDraw(vec![1, 1])).is_err());
    }

    #[test]
    fn closed_form_variances() {
        let mut model = ou_sum(&[1.0, 3.0]);
        model.scheme = SubsamplingScheme::WithReplacement { s: 1 };
        // Estimator takes values 2 and 6 with probability 1/2 each.
        assert!((subsampling_variance(&model, &[0.0]).unwrap() - 4.0).abs() < 1e-12);

        let mut model = ou_sum(&[1.0, 2.0, 6.0]);
        model.scheme = SubsamplingScheme::WithoutReplacement { s: 2 };
        // Values {4.5, 10.5, 12} around mean 9.
        assert!((subsampling_variance(&model, &[0.0]).unwrap() - 10.5).abs() < 1e-12);

        model.scheme = SubsamplingScheme::WithoutReplacement { s: 3 };
        assert_eq!(subsampling_variance(&model, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn lyapunov_examples() {
        let ou = DriftModel::ornstein_uhlenbeck(1);
        assert_eq!(lyapunov_constants(&ou), (0.5, 0.0));

        let mut m = DriftModel::ornstein_uhlenbeck(1);
        m.radius_r = 2.0;
        assert_eq!(lyapunov_constants(&m), (0.5, 4.0));

        let mut m = DriftModel::ornstein_uhlenbeck(1);
        m.lipschitz_l = 2.0;
        m.contraction_k = 1.0;
        m.radius_r = 1.0;
        m.b_at_zero_norm = 1.0;
        // max(1, 2) = 2; 2*4 + 1*2 = 10
        assert_eq!(lyapunov_constants(&m), (0.5, 10.0));
    }

    #[test]
    fn lyapunov_inequality_on_grid() {
        let mut m = DriftModel::ornstein_uhlenbeck(1);
        m.radius_r = 2.0;
        let (m1, m2) = lyapunov_constants(&m);
        for i in -100..=100 {
            let x = i as f64 * 0.1;
            let b = eval_drift(&m, &[x]).unwrap();
            assert!(b[0] * x <= m2 - m1 * x * x + 1e-12);
        }
    }

    #[test]
    fn verify_ou_passes() {
        let model = DriftModel::ornstein_uhlenbeck(2);
        let report = verify_assumptions(&model, GridSpec::default());
        assert!(report.pass(), "{report:?}");
        assert!((report.max_lipschitz_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn verify_double_well_constants() {
        // Certification box stays inside |x| <= n where the piecewise drift
        // formula is smooth. A Lipschitz constant below sup |b'| must fail.
        let scan = GridSpec { pairs: 4000, box_radius: 10.0, seed: 7 };
        let too_small =
            DriftModel::truncated_double_well(1.0, 10.0, 1, 100.0, 1e-3, 11.9).unwrap();
        assert!(!verify_assumptions(&too_small, scan).lipschitz_ok);

        // sup |b'| = 12 n^2 - 4 a = 1196 on |x| <= n.
        let certified =
            DriftModel::truncated_double_well(1.0, 10.0, 1, 1196.0, 1.0, 11.9).unwrap();
        let report = verify_assumptions(&certified, scan);
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn verify_continuous_double_well_in_wide_box() {
        // With a_dw = n^2 the two branches agree at |x| = n, so the drift is
        // globally Lipschitz and can be certified on a wide box.
        let model =
            DriftModel::truncated_double_well(0.0064, 0.08, 1, 0.0512, 0.004, 0.4).unwrap();
        let report = verify_assumptions(&model, GridSpec { pairs: 20_000, box_radius: 50.0, seed: 3 });
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn weighted_sum_matches_mean_drift() {
        let model = weighted_double_well_sum(0.0064, 0.08, 1, 8, 0.25, 0.064, 0.004, 0.4).unwrap();
        let plain = DriftModel::truncated_double_well(0.0064, 0.08, 1, 0.0512, 0.004, 0.4).unwrap();
        for i in -50..=50 {
            let x = [i as f64 * 0.02];
            let a = eval_drift(&model, &x).unwrap();
            let b = eval_drift(&plain, &x).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-14, "x = {:?}", x);
        }
    }
}
