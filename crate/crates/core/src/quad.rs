//! Adaptive quadrature and Gaussian density helpers.
//!
//! The oracles integrate products of Gaussian densities with indicator
//! truncations. Integrands are smooth between known breakpoints, so the
//! driver takes an explicit breakpoint list, splits the domain there and
//! runs adaptive Simpson on each smooth panel.

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Density of N(mean, var) at `x`.
#[inline]
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = (x - mean) / var.sqrt();
    (-0.5 * z * z).exp() / (var.sqrt() * SQRT_2PI)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / SQRT_2PI
}

/// Standard normal distribution function, accurate to ~1e-15.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// P(|N(0, var)| >= a) for a >= 0.
pub fn normal_two_sided_tail(a: f64, var: f64) -> f64 {
    if a.is_infinite() {
        return 0.0;
    }
    libm::erfc(a / (2.0 * var).sqrt())
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature bounds must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut stack = vec![Panel { a, b, fa, fm, fb, whole, tol, depth: 0 }];
    let mut total = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || (p.b - p.a) < 1e-14 {
            // Richardson extrapolation of the two half-panel estimates.
            total += left + right + delta / 15.0;
        } else if p.depth >= 60 {
            return Err(Error::QuadratureNonConvergence(format!(
                "panel [{}, {}] did not converge at depth {}",
                p.a, p.b, p.depth
            )));
        } else {
            let half_tol = 0.5 * p.tol;
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol: half_tol,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: half_tol,
                depth: p.depth + 1,
            });
        }
    }
    Ok(total)
}

/// Integrates `f` over [a, b], splitting at the given breakpoints first.
///
/// Breakpoints outside (a, b) are ignored; the integrand only needs to be
/// smooth strictly between consecutive split points.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    if b < a {
        return Err(Error::Domain(format!("empty quadrature range [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let panels = (edges.len() - 1) as f64;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += adaptive_simpson(f, pair[0], pair[1], tol / panels)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let val = adaptive_simpson(&|x| x * x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((val - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let val = adaptive_simpson(&|x| std_normal_pdf(x), -8.0, 8.0, 1e-12).unwrap();
        assert!((val - 1.0).abs() < 1e-12, "got {val}");
    }

    #[test]
    fn breakpoints_handle_kinks() {
        // |x| integrated over [-1, 2] = 0.5 + 2.0
        let val = integrate_with_breakpoints(&|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12).unwrap();
        assert!((val - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_known_values() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        let q = adaptive_simpson(&|x| std_normal_pdf(x), -10.0, 1.3, 1e-13).unwrap();
        assert!((std_normal_cdf(1.3) - q).abs() < 1e-12);
    }

    #[test]
    fn two_sided_tail() {
        let m = 1.7f64;
        let var = 0.3;
        let direct = 2.0 * (1.0 - std_normal_cdf(m / var.sqrt()));
        assert!((normal_two_sided_tail(m, var) - direct).abs() < 1e-14);
        assert_eq!(normal_two_sided_tail(f64::INFINITY, 1.0), 0.0);
    }
}
