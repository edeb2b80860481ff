//! Independent quadrature and enumeration oracles.
//!
//! Everything here re-derives coupling quantities from one-dimensional
//! integrals or exhaustive enumeration, without touching the sampling code
//! in [`crate::coupling`] or [`crate::drift`]. The coupled step reduces to
//! one dimension because the distance between the coupled points only moves
//! along the unit vector spanned by them: on the reflection branch
//! `R' = |r_hat - 2 t|` where `t` is the one-dimensional projection of the
//! Gaussian jump, on the merge branch `R' = 0`, and synchronously
//! `R' = r_hat`.

use crate::drift::{InaccurateDrift, SubsampleDraw, SubsamplingScheme};
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breakpoints, normal_pdf, normal_two_sided_tail};

const QUAD_TOL: f64 = 1e-12;

/// Acceptance probability of the merge branch at jump projection `t`:
/// `min(1, exp(r_hat (2t - r_hat) / 2h)) 1{|t - r_hat| <= m}`.
#[inline]
fn merge_ratio(t: f64, r_hat: f64, h: f64, m: f64) -> f64 {
    if (t - r_hat).abs() > m {
        return 0.0;
    }
    let log_ratio = r_hat * (2.0 * t - r_hat) / (2.0 * h);
    log_ratio.min(0.0).exp()
}

fn jump_breakpoints(r_hat: f64, h: f64, m: f64) -> Vec<f64> {
    let s = h.sqrt();
    vec![
        0.0,
        r_hat / 2.0,
        r_hat,
        s / 2.0,
        -s / 2.0,
        r_hat - s / 2.0,
        r_hat + s / 2.0,
        r_hat - m,
        r_hat + m,
        m,
        -m,
    ]
}

/// Signed defect `E[R'] - r_hat` of the truncated mirror step, by
/// quadrature over the jump projection. The coupling identity says this
/// vanishes for `r_hat <= H`.
pub fn quadrature_first_moment(r_hat: f64, h: f64, m: f64) -> Result<f64> {
    check_inputs(r_hat, h, m)?;
    // E[R'] - r_hat
    //   = int_{|t|<m} [ (1 - ratio(t)) |2t - r_hat| - r_hat ] phi_{0,h}(t) dt
    // because the synchronous branch contributes r_hat exactly.
    let lim = integration_limit(r_hat, h, m);
    let f = |t: f64| {
        let ratio = merge_ratio(t, r_hat, h, m);
        ((1.0 - ratio) * (2.0 * t - r_hat).abs() - r_hat) * normal_pdf(t, 0.0, h)
    };
    let mut value =
        integrate_with_breakpoints(&f, -lim.min(m), lim.min(m), &jump_breakpoints(r_hat, h, m), QUAD_TOL)?;
    if m > lim {
        // Truncated tail of the jump window beyond the quadrature range:
        // the merge ratio is 0 far left and 1 far right of r_hat/2, so the
        // integrand reduces to closed-form Gaussian tails; their mass is
        // below the tolerance at lim = r_hat + 12 sqrt(h), checked here.
        let tail_mass = normal_two_sided_tail(lim, h);
        if tail_mass * (2.0 * lim + 4.0 * r_hat + 4.0 * h.sqrt()) > 1e-11 {
            return Err(Error::QuadratureNonConvergence(
                "jump window tail mass above tolerance".into(),
            ));
        }
    }
    // Keep exact zeros exact when both branches integrate to machine noise.
    if value.abs() < 1e-15 {
        value = value.clamp(-1e-15, 1e-15);
    }
    Ok(value)
}

/// `E[R'] - r_hat` for the always-reflect control (no merge branch, no
/// truncation), which is strictly positive for every `r_hat >= 0`.
pub fn always_reflect_first_moment(r_hat: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || r_hat < 0.0 {
        return Err(Error::Domain("need h > 0 and r_hat >= 0".into()));
    }
    let lim = integration_limit(r_hat, h, f64::INFINITY);
    let f = |t: f64| ((2.0 * t - r_hat).abs() - r_hat) * normal_pdf(t, 0.0, h);
    integrate_with_breakpoints(&f, -lim, lim, &[r_hat / 2.0], QUAD_TOL)
}

/// Lower-bound verification data for the second moment restricted to the
/// interval `I_{r_hat}`: returns `(lhs, alpha_bar)` where
/// `lhs = E[(R' - r_hat)^2 1{R' in I}]` and
/// `alpha_bar = (1/2) c0 min(sqrt(h), r_hat) sqrt(h)`.
pub fn quadrature_second_moment_lower(r_hat: f64, h: f64, m: f64) -> Result<(f64, f64)> {
    check_inputs(r_hat, h, m)?;
    if h > 4.0 * m * m {
        return Err(Error::Admissibility(format!(
            "second-moment bound needs h <= 4 m^2; h = {h}, m = {m}"
        )));
    }
    let s = h.sqrt();
    // I_{r_hat} = (0, r_hat + sqrt(h)) if r_hat <= sqrt(h), else
    //             (r_hat - sqrt(h), r_hat).
    let (lo, hi) = if r_hat <= s { (0.0, r_hat + s) } else { (r_hat - s, r_hat) };
    let lim = integration_limit(r_hat, h, m);
    let f = |t: f64| {
        let ratio = merge_ratio(t, r_hat, h, m);
        let r_next = (2.0 * t - r_hat).abs();
        if r_next > lo && r_next < hi {
            let dev = r_next - r_hat;
            (1.0 - ratio) * dev * dev * normal_pdf(t, 0.0, h)
        } else {
            0.0
        }
    };
    let lhs = integrate_with_breakpoints(
        &f,
        -lim.min(m),
        lim.min(m),
        &jump_breakpoints(r_hat, h, m),
        QUAD_TOL,
    )?;
    let alpha_bar = 0.5 * crate::constants::compute_c0() * s.min(r_hat) * s;
    Ok((lhs, alpha_bar))
}

/// Exact branch probabilities `(merge, reflect, synchronous)` of the
/// truncated mirror step at post-drift distance `r_hat`.
pub fn branch_probabilities(r_hat: f64, h: f64, m: f64, big_h: f64) -> Result<(f64, f64, f64)> {
    check_inputs(r_hat, h, m)?;
    if !(big_h > 0.0) {
        return Err(Error::Domain("need H > 0".into()));
    }
    if r_hat > big_h {
        return Ok((0.0, 0.0, 1.0));
    }
    // In one dimension the jump-size gate |sqrt(h) Z| >= m is the
    // projection gate |t| >= m.
    let p_sync = normal_two_sided_tail(m, h);
    if r_hat == 0.0 {
        // The density ratio is 1, so the pair merges whenever it mirrors.
        return Ok((1.0 - p_sync, 0.0, p_sync));
    }
    let lim = integration_limit(r_hat, h, m).min(m);
    let f = |t: f64| merge_ratio(t, r_hat, h, m) * normal_pdf(t, 0.0, h);
    let p_merge =
        integrate_with_breakpoints(&f, -lim, lim, &jump_breakpoints(r_hat, h, m), QUAD_TOL)?;
    let p_reflect = (1.0 - p_sync - p_merge).max(0.0);
    Ok((p_merge, p_reflect, p_sync))
}

fn check_inputs(r_hat: f64, h: f64, m: f64) -> Result<()> {
    if !(h > 0.0) || !(m > 0.0) || r_hat < 0.0 {
        return Err(Error::Domain(format!(
            "oracle inputs need h > 0, m > 0, r_hat >= 0; got r_hat = {r_hat}, h = {h}, m = {m}"
        )));
    }
    Ok(())
}

fn integration_limit(r_hat: f64, h: f64, _m: f64) -> f64 {
    r_hat + 12.0 * h.sqrt()
}

/// Exhaustive mean and variance of the subsampling estimator at `x`:
/// all `m^s` ordered tuples with replacement, all `C(m, s)` subsets
/// without. Capped at `m <= 8`.
pub fn enumerate_subsampling(model: &InaccurateDrift, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = model.component_count();
    if m > 8 {
        return Err(Error::Size(format!("enumeration cap is m <= 8, got m = {m}")));
    }
    let s = model.scheme.sample_size();
    if s == 0 || s > m {
        return Err(Error::Domain(format!("invalid subsample size s = {s} for m = {m}")));
    }
    let d = model.dim();
    let draws = match model.scheme {
        SubsamplingScheme::WithReplacement { .. } => all_ordered_tuples(m, s)?,
        SubsamplingScheme::WithoutReplacement { .. } => all_subsets(m, s),
    };
    finish_enumeration(model, x, d, draws)
}

/// All m^s ordered index tuples, odometer order.
fn all_ordered_tuples(m: usize, s: usize) -> Result<Vec<Vec<usize>>> {
    let total = (m as u64).pow(s as u32);
    if total > 20_000_000 {
        return Err(Error::Size(format!("enumeration of {total} tuples exceeds cap")));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; s];
    'outer: loop {
        out.push(idx.clone());
        let mut pos = s;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(out)
}

/// All C(m, s) index subsets in lexicographic order.
fn all_subsets(m: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..s).collect();
    'outer: loop {
        out.push(subset.clone());
        let mut i = s;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if subset[i] < m - (s - i) {
                subset[i] += 1;
                for j in (i + 1)..s {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
    out
}

fn finish_enumeration(
    model: &InaccurateDrift,
    x: &[f64],
    d: usize,
    draws: Vec<Vec<usize>>,
) -> Result<(Vec<f64>, f64)> {
    let count = draws.len() as f64;
    let mut mean = vec![0.0; d];
    let mut value = vec![0.0; d];
    let mut values = Vec::with_capacity(draws.len());
    for draw in &draws {
        model.eval_subsampled_into(x, &SubsampleDraw(draw.clone()), &mut value);
        for (acc, v) in mean.iter_mut().zip(&value) {
            *acc += v;
        }
        values.push(value.clone());
    }
    for acc in mean.iter_mut() {
        *acc /= count;
    }
    let mut var = 0.0;
    for v in &values {
        var += v.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok((mean, var / count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{ComponentDrift, DriftKind, DriftModel, InaccurateDrift};

    fn constant_sum(values: &[f64], scheme: SubsamplingScheme) -> InaccurateDrift {
        let comps = values
            .iter()
            .map(|&v| ComponentDrift::Constant { value: vec![v] })
            .collect::<Vec<_>>();
        let base =
            DriftModel::new(DriftKind::FiniteSum { components: comps }, 1, 1.0, 1.0, 0.0).unwrap();
        InaccurateDrift::new(base, scheme, 1.0, 1.0).unwrap()
    }

    #[test]
    fn first_moment_vanishes_at_zero() {
        let defect = quadrature_first_moment(0.0, 0.01, 0.05).unwrap();
        assert!(defect.abs() <= 1e-12, "defect {defect}");
    }

    #[test]
    fn first_moment_identity_generic_point() {
        let defect = quadrature_first_moment(0.1, 0.01, 0.05).unwrap();
        assert!(defect.abs() <= 1e-10, "defect {defect}");
    }

    #[test]
    fn always_reflect_is_biased_upward() {
        for &(r_hat, h) in &[(0.0, 0.01), (0.1, 0.01), (0.5, 0.04)] {
            let defect = always_reflect_first_moment(r_hat, h).unwrap();
            assert!(defect > 1e-6, "r_hat = {r_hat}: defect {defect}");
        }
    }

    #[test]
    fn second_moment_lower_bound_on_grid() {
        let h = 0.01;
        let m = 0.05;
        for &mult in &[0.2, 1.0, 5.0] {
            let r_hat = mult * h.sqrt();
            let (lhs, alpha_bar) = quadrature_second_moment_lower(r_hat, h, m).unwrap();
            assert!(lhs >= alpha_bar, "r_hat = {r_hat}: lhs {lhs} < alpha_bar {alpha_bar}");
        }
    }

    #[test]
    fn second_moment_alpha_bar_vanishes_with_r_hat() {
        let (_, alpha_bar) = quadrature_second_moment_lower(1e-12, 0.01, 0.05).unwrap();
        assert!(alpha_bar < 1e-12);
    }

    #[test]
    fn second_moment_requires_h_le_4m_sq() {
        assert!(matches!(
            quadrature_second_moment_lower(0.1, 0.02, 0.05),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        for &(r_hat, h, m, big_h) in &[
            (0.0, 0.01, 0.05, 1.0),
            (0.05, 0.01, 0.05, 1.0),
            (0.1, 0.01, 0.05, 1.0),
            (0.3, 0.02, 0.2, 1.0),
        ] {
            let (pm, pr, ps) = branch_probabilities(r_hat, h, m, big_h).unwrap();
            assert!(pm >= 0.0 && pr >= 0.0 && ps >= 0.0);
            assert!((pm + pr + ps - 1.0).abs() <= 1e-10, "sum {}", pm + pr + ps);
        }
    }

    #[test]
    fn branch_probabilities_degenerate_cases() {
        // r_hat = 0: never reflects.
        let h = 0.01f64;
        let m = 0.05;
        let (pm, pr, ps) = branch_probabilities(0.0, h, m, 1.0).unwrap();
        assert_eq!(pr, 0.0);
        let expected_sync = normal_two_sided_tail(m, h);
        assert!((ps - expected_sync).abs() < 1e-14);
        assert!((pm - (1.0 - expected_sync)).abs() < 1e-14);
        // r_hat > H: always synchronous.
        assert_eq!(branch_probabilities(2.0, h, m, 1.0).unwrap(), (0.0, 0.0, 1.0));
    }

    #[test]
    fn enumeration_matches_examples() {
        let model = constant_sum(&[1.0, 3.0], SubsamplingScheme::WithReplacement { s: 1 });
        let (mean, var) = enumerate_subsampling(&model, &[0.0]).unwrap();
        assert_eq!(mean, vec![4.0]);
        assert!((var - 4.0).abs() < 1e-12);

        let model = constant_sum(&[1.0, 2.0, 6.0], SubsamplingScheme::WithoutReplacement { s: 2 });
        let (mean, var) = enumerate_subsampling(&model, &[0.0]).unwrap();
        assert_eq!(mean, vec![9.0]);
        assert!((var - 10.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_full_sample() {
        let model = constant_sum(&[1.0, 2.0, 6.0], SubsamplingScheme::WithoutReplacement { s: 3 });
        let (mean, var) = enumerate_subsampling(&model, &[0.0]).unwrap();
        assert_eq!(mean, vec![9.0]);
        assert_eq!(var, 0.0);
        // With replacement at s = m the variance stays positive and matches
        // the closed form.
        let model = constant_sum(&[1.0, 2.0, 6.0], SubsamplingScheme::WithReplacement { s: 3 });
        let (_, var) = enumerate_subsampling(&model, &[0.0]).unwrap();
        let closed = crate::drift::subsampling_variance(&model, &[0.0]).unwrap();
        assert!((var - closed).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap() {
        let model = constant_sum(&[0.0; 9], SubsamplingScheme::WithReplacement { s: 2 });
        assert!(matches!(enumerate_subsampling(&model, &[0.0]), Err(Error::Size(_))));
    }
}
