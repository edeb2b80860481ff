//! The contraction ledger: every explicit constant of the coupling analysis,
//! the distance functions built from them, and the resulting bounds.
//!
//! All entries are direct plug-ins of their defining displays. Nothing is
//! optimised, sharpened or re-derived; a ledger is the certificate that a
//! concrete model satisfies the one-step contraction
//! `E f(|X' - Y'|) <= (1 - c h) f(|x - y|)` and everything downstream of it.

use std::sync::OnceLock;

use crate::drift::{lyapunov_constants, DriftModel, InaccurateDrift};
use crate::error::{Error, Result};
use crate::quad;

/// Both integrals entering the constant `c0`, kept separately because the
/// analysis only uses their minimum and it is not obvious a priori which
/// branch is smaller.
#[derive(Debug, Clone, Copy)]
pub struct C0Parts {
    /// `4 * int_0^{1/2} u^2 (1 - e^{u - 1/2}) phi(u) du`
    pub first: f64,
    /// `4 * (1 - e^{-1}) * int_0^{1/2} u^3 phi(u) du`
    pub second: f64,
}

impl C0Parts {
    pub fn value(&self) -> f64 {
        self.first.min(self.second)
    }
}

fn compute_c0_parts() -> Result<C0Parts> {
    let tol = 1e-12;
    let first = quad::adaptive_simpson(
        &|u: f64| u * u * (1.0 - (u - 0.5).exp()) * quad::std_normal_pdf(u),
        0.0,
        0.5,
        tol,
    )?;
    let second = quad::adaptive_simpson(&|u: f64| u * u * u * quad::std_normal_pdf(u), 0.0, 0.5, tol)?;
    Ok(C0Parts {
        first: 4.0 * first,
        second: 4.0 * (1.0 - (-1.0f64).exp()) * second,
    })
}

/// Quadrature value of `c0`, cached after the first call.
pub fn c0_parts() -> C0Parts {
    static CACHE: OnceLock<C0Parts> = OnceLock::new();
    *CACHE.get_or_init(|| compute_c0_parts().expect("c0 quadrature on [0, 1/2] converges"))
}

/// `c0 = 4 min( int u^2 (1-e^{u-1/2}) phi, (1-e^{-1}) int u^3 phi )`.
pub fn compute_c0() -> f64 {
    c0_parts().value()
}

/// Second moments of the initial laws, supplied by the caller; the library
/// does not guess initial distributions.
#[derive(Debug, Clone, Copy)]
pub struct MomentInputs {
    pub e_x0_sq: f64,
    pub e_y0_sq: f64,
    pub dim: usize,
}

impl MomentInputs {
    pub fn point_mass_at_origin(dim: usize) -> Self {
        MomentInputs { e_x0_sq: 0.0, e_y0_sq: 0.0, dim }
    }
}

/// Ledger entries that only exist when an inaccurate drift is configured.
#[derive(Debug, Clone, Copy)]
pub struct InaccurateLedger {
    pub sigma: f64,
    pub alpha: f64,
    pub bar_l: f64,
    pub l_u: f64,
    pub alpha_c: f64,
    pub c_ieul: f64,
    pub c_iult: f64,
    /// `C_IEul` evaluated at step `2h`, for the coarse chain of a level pair.
    pub c_ieul_2h: f64,
    pub c_ism: f64,
    pub c_iasp: f64,
    pub c_imldif: f64,
    pub c_imlult: f64,
}

/// Every explicit constant of the contraction analysis for one model.
#[derive(Debug, Clone)]
pub struct ContractionLedger {
    // Model constants the ledger was built from.
    pub lipschitz_l: f64,
    pub contraction_k: f64,
    pub radius_r: f64,
    pub b_at_zero_norm: f64,
    pub dim: usize,
    pub e_x0_sq: f64,
    pub e_y0_sq: f64,

    pub c0: f64,
    pub c0_first_integral: f64,
    pub c0_second_integral: f64,
    pub h0: f64,
    pub r1: f64,
    pub r2: f64,
    pub a: f64,
    pub c: f64,
    /// Comparison constant with `r^2 <= A f(r)`.
    pub big_a: f64,

    // Concave-distance variant.
    pub q: f64,
    pub h0_1: f64,
    pub r1_1: f64,
    pub c1: f64,

    pub m1: f64,
    pub m2: f64,
    pub c_sde: f64,
    pub c_eul: f64,
    pub c_dif: f64,
    pub c_ult: f64,

    pub inaccurate: Option<InaccurateLedger>,
}

/// Builds the full ledger for a model; `extras` adds the inaccurate-drift
/// entries, `moments` supplies `E|X_0|^2`, `E|Y_0|^2` and the dimension.
pub fn build_ledger(
    model: &DriftModel,
    extras: Option<&InaccurateDrift>,
    moments: MomentInputs,
) -> Result<ContractionLedger> {
    let l = model.lipschitz_l;
    let k = model.contraction_k;
    let r_radius = model.radius_r;
    let b0 = model.b_at_zero_norm;
    let d = moments.dim as f64;

    if r_radius <= 0.0 {
        // r1 = 0 would force a = 6 L r1 / c0 = 0; globally contractive
        // models have no use for this machinery.
        return Err(Error::ConstantInfeasible(
            "radius R = 0 degenerates a = 6 L r1 / c0; the ledger requires R > 0".into(),
        ));
    }

    let parts = c0_parts();
    let c0 = parts.value();

    let h0 = (k / (l * l))
        .min(4.0 / k)
        .min(1.0 / (2.0 * l))
        .min(2.0 * c0 * 1.5f64.ln() / (27.0 * l * l * r_radius * r_radius))
        .min(r_radius * r_radius / 4.0)
        .min(c0 * c0 * 2.0f64.ln().powi(2) / (144.0 * l * l * r_radius * r_radius));

    let r1 = (1.0 + h0 * l) * r_radius;
    let r2 = r1 + h0.sqrt();
    let a = 6.0 * l * r1 / c0;
    let ear2 = (-a * r2).exp();

    let c = (ear2 * k / 4.0)
        .min((0.5 * ear2 * r2) / ((1.0 - ear2) / a) * (k / 4.0))
        .min(9.0 * l * l * r1 * r1 / (2.0 * c0) * (-6.0 * l * r1 * r1 / c0).exp())
        .min(3.0 * l * r1 / (16.0 * h0.sqrt()));

    let big_a = (a * r2 * r2 / (1.0 - ear2)).max(2.0 * r2 / ear2);

    let q = 7.0 * l * r_radius / c0;
    let h0_1 = (1.0 / l)
        * (1.0f64 / 6.0)
            .min(k / l)
            .min(l * r_radius * r_radius / 3.0)
            .min(c0 * c0 / (970.0 * l * r_radius * r_radius));
    let r1_1 = (1.0 + h0_1 * l) * r_radius;
    let c1 = (k / 2.0).min(245.0 / (24.0 * c0) * l * l * r_radius * r_radius)
        * (-49.0 * l * r_radius * r_radius / (6.0 * c0)).exp();

    let (m1, m2) = lyapunov_constants(model);

    let c_sde = moments.e_y0_sq + (2.0 * m2 + d) / (2.0 * m1);

    let eul_den = m1 - 2.0 * h0 * l * l;
    if eul_den <= 0.0 {
        return Err(Error::ConstantInfeasible(
            "C_Eul denominator M1 - 2 h0 L^2 is non-positive".into(),
        ));
    }
    let c_eul = moments.e_x0_sq + (2.0 * h0 * b0 * b0 + d + m2) / eul_den;

    let c_dif = l * l
        * (4.0 * h0 / 3.0 * ((moments.e_y0_sq + (2.0 * m2 + 1.0) / m1) * l * l + b0 * b0) + d);

    let pre = ear2 / r2;
    let c_ult = pre * c_dif * h0.powf(1.5)
        + c_dif.sqrt()
        + pre * (c_eul.sqrt() + c_sde.sqrt()) * (1.0 + h0 * l) * c_dif.sqrt()
        + pre * h0.sqrt() * c_dif.sqrt();

    let inaccurate = match extras {
        None => None,
        Some(extra) => {
            let sigma = extra.sigma;
            let alpha = extra.alpha;
            let sig_sq = sigma * sigma;

            let ieul_den = m1 - 2.0 * h0 * l * l - h0 * sig_sq;
            if ieul_den <= 0.0 {
                return Err(Error::ConstantInfeasible(
                    "C_IEul denominator M1 - 2 h0 L^2 - h0 sigma^2 is non-positive".into(),
                ));
            }
            let c_ieul = moments.e_x0_sq
                + (2.0 * h0 * b0 * b0 + d + m2 + h0 * sig_sq) / ieul_den;

            let c_iult = pre * sig_sq * h0.powf(alpha / 2.0) * (1.0 + c_ieul)
                + (sigma
                    + sigma * pre * (c_eul.sqrt() + c_ieul.sqrt()) * (1.0 + h0 * l)
                    + sigma * pre * h0.sqrt())
                    * (1.0 + c_ieul).sqrt();

            let ieul2_den = m1 - 4.0 * h0 * l * l - 2.0 * h0 * sig_sq;
            if ieul2_den <= 0.0 {
                return Err(Error::ConstantInfeasible(
                    "C_IEul^(2h) denominator M1 - 4 h0 L^2 - 2 h0 sigma^2 is non-positive".into(),
                ));
            }
            let c_ieul_2h = moments.e_x0_sq
                + (4.0 * h0 * b0 * b0 + d + m2 + 2.0 * h0 * sig_sq) / ieul2_den;

            let c_ism = c_ieul_2h * (sig_sq + 2.0 * l * l) + sig_sq + 2.0 * b0 * b0;
            let c_iasp =
                (c_ieul_2h.sqrt() + h0 * c_ism.sqrt() + (h0 * d).sqrt()).powi(2);

            let bar_l = extra.bar_l;
            let alpha_c = extra.alpha_c;
            let l_u = extra.l_u;
            let c_imldif = (4.0 * h0 * bar_l * bar_l * c_ism + 4.0 * bar_l * d)
                * h0.powf((1.0 - alpha_c).max(0.0))
                + 2.0 * l_u * (1.0 + c_ieul_2h);

            let c_imlult = pre * c_imldif * h0.powf(1.0 + alpha_c.min(1.0) / 2.0)
                + (1.0 + pre * h0.sqrt()) * c_imldif.sqrt()
                + pre * (1.0 + h0 * l) * (c_ieul.sqrt() + c_iasp.sqrt()) * c_imldif.sqrt();

            Some(InaccurateLedger {
                sigma,
                alpha,
                bar_l,
                l_u,
                alpha_c,
                c_ieul,
                c_iult,
                c_ieul_2h,
                c_ism,
                c_iasp,
                c_imldif,
                c_imlult,
            })
        }
    };

    let ledger = ContractionLedger {
        lipschitz_l: l,
        contraction_k: k,
        radius_r: r_radius,
        b_at_zero_norm: b0,
        dim: moments.dim,
        e_x0_sq: moments.e_x0_sq,
        e_y0_sq: moments.e_y0_sq,
        c0,
        c0_first_integral: parts.first,
        c0_second_integral: parts.second,
        h0,
        r1,
        r2,
        a,
        c,
        big_a,
        q,
        h0_1,
        r1_1,
        c1,
        m1,
        m2,
        c_sde,
        c_eul,
        c_dif,
        c_ult,
        inaccurate,
    };
    ledger.check_finite_positive()?;
    Ok(ledger)
}

impl ContractionLedger {
    fn check_finite_positive(&self) -> Result<()> {
        for (name, value) in self.rows() {
            if !value.is_finite() {
                return Err(Error::ConstantInfeasible(format!("{name} is not finite")));
            }
            let may_vanish =
                matches!(name, "e_x0_sq" | "e_y0_sq" | "m2" | "b_at_zero_norm" | "alpha");
            if value <= 0.0 && !may_vanish {
                return Err(Error::ConstantInfeasible(format!("{name} = {value} must be positive")));
            }
        }
        Ok(())
    }

    /// The coupling truncation defaults certified by the contraction
    /// theorem: `m = sqrt(h0)/2`, `H = r1`.
    pub fn coupling_m(&self) -> f64 {
        self.h0.sqrt() / 2.0
    }

    pub fn coupling_h_threshold(&self) -> f64 {
        self.r1
    }

    /// Distance function that is concave on `[0, r2]` and quadratic beyond.
    pub fn distance_fn(&self) -> DistanceFn {
        DistanceFn::ConvexAtInfinity { a: self.a, r2: self.r2 }
    }

    /// Globally concave distance function of the `W_1` variant.
    pub fn distance_fn_concave(&self) -> DistanceFn {
        DistanceFn::ConcaveAffine { q: self.q, r1_1: self.r1_1 }
    }

    /// Ceiling for the step size of the plain chain moment bound and the
    /// chain/SDE comparison.
    pub fn h_ceiling_ula_w2(&self) -> f64 {
        self.h0.min(self.contraction_k / (4.0 * self.lipschitz_l * self.lipschitz_l))
    }

    pub fn h_ceiling_ula_w1(&self) -> f64 {
        self.h0_1
    }

    /// Ceiling for chains with inaccurate drift.
    pub fn h_ceiling_inaccurate(&self) -> Result<f64> {
        let ext = self.inaccurate.as_ref().ok_or_else(|| {
            Error::ConstantInfeasible("ledger has no inaccurate-drift entries".into())
        })?;
        let den = 4.0 * self.lipschitz_l * self.lipschitz_l + 2.0 * ext.sigma * ext.sigma;
        Ok(self.h0.min(self.contraction_k / den).min(1.0))
    }

    /// All entries as (name, value) rows, in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("lipschitz_l", self.lipschitz_l),
            ("contraction_k", self.contraction_k),
            ("radius_r", self.radius_r),
            ("b_at_zero_norm", self.b_at_zero_norm),
            ("dim", self.dim as f64),
            ("e_x0_sq", self.e_x0_sq),
            ("e_y0_sq", self.e_y0_sq),
            ("c0", self.c0),
            ("c0_first_integral", self.c0_first_integral),
            ("c0_second_integral", self.c0_second_integral),
            ("h0", self.h0),
            ("r1", self.r1),
            ("r2", self.r2),
            ("a", self.a),
            ("c", self.c),
            ("big_a", self.big_a),
            ("q", self.q),
            ("h0_1", self.h0_1),
            ("r1_1", self.r1_1),
            ("c1", self.c1),
            ("m1", self.m1),
            ("m2", self.m2),
            ("c_sde", self.c_sde),
            ("c_eul", self.c_eul),
            ("c_dif", self.c_dif),
            ("c_ult", self.c_ult),
        ];
        if let Some(i) = &self.inaccurate {
            rows.extend_from_slice(&[
                ("sigma", i.sigma),
                ("alpha", i.alpha),
                ("bar_l", i.bar_l),
                ("l_u", i.l_u),
                ("alpha_c", i.alpha_c),
                ("c_ieul", i.c_ieul),
                ("c_iult", i.c_iult),
                ("c_ieul_2h", i.c_ieul_2h),
                ("c_ism", i.c_ism),
                ("c_iasp", i.c_iasp),
                ("c_imldif", i.c_imldif),
                ("c_imlult", i.c_imlult),
            ]);
        }
        rows
    }
}

/// The two distance-function shapes used by the contraction theorems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceFn {
    /// Concave on `[0, r2]`, quadratic beyond; continuously differentiable
    /// at `r2` with slope `e^{-a r2}` from both sides.
    ConvexAtInfinity { a: f64, r2: f64 },
    /// Concave everywhere, affine beyond `r1_1`; slope in `[e^{-q r1_1}, 1]`.
    ConcaveAffine { q: f64, r1_1: f64 },
}

impl DistanceFn {
    /// Value at `r >= 0`; panics never, errors on negative input.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("distance function evaluated at r = {r}")));
        }
        Ok(match *self {
            DistanceFn::ConvexAtInfinity { a, r2 } => {
                if r <= r2 {
                    let e = (-a * r).exp();
                    ((1.0 - e) / a, e, -a * e)
                } else {
                    let e2 = (-a * r2).exp();
                    (
                        (1.0 - e2) / a + e2 * (r * r - r2 * r2) / (2.0 * r2),
                        e2 * r / r2,
                        e2 / r2,
                    )
                }
            }
            DistanceFn::ConcaveAffine { q, r1_1 } => {
                if r <= r1_1 {
                    let e = (-q * r).exp();
                    ((1.0 - e) / q, e, -q * e)
                } else {
                    let e1 = (-q * r1_1).exp();
                    ((1.0 - e1) / q + e1 * (r - r1_1), e1, 0.0)
                }
            }
        })
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match *self {
            DistanceFn::ConvexAtInfinity { a, r2 } => {
                if r <= r2 {
                    (1.0 - (-a * r).exp()) / a
                } else {
                    let e2 = (-a * r2).exp();
                    (1.0 - e2) / a + e2 * (r * r - r2 * r2) / (2.0 * r2)
                }
            }
            DistanceFn::ConcaveAffine { q, r1_1 } => {
                if r <= r1_1 {
                    (1.0 - (-q * r).exp()) / q
                } else {
                    let e1 = (-q * r1_1).exp();
                    (1.0 - e1) / q + e1 * (r - r1_1)
                }
            }
        }
    }
}

/// Evaluates a distance function together with its first two derivatives.
pub fn eval_distance(f: &DistanceFn, r: f64) -> Result<(f64, f64, f64)> {
    f.eval(r)
}

/// Which theorem's right-hand side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Chain vs SDE in `W_2`:
    /// `(A (1-ch)^k E f)^{1/2} + (A C_ult / c)^{1/2} h^{1/4}`.
    UlaW2,
    /// Chain vs SDE in `W_1`:
    /// `e^{q r1_1} (1-c1 h)^k E f1 + e^{q r1_1} sqrt(C_dif) h^{1/2} / c1`.
    UlaW1,
    /// Randomised vs exact chain in `W_2`:
    /// `(A (1-ch)^k E f)^{1/2} + (A C_Iult / c)^{1/2} h^{alpha/4}`.
    SgW2,
    /// Randomised vs exact chain in `W_1`:
    /// `e^{a r2} (1-ch)^k E f + e^{a r2} C_Iult h^{alpha/2} / c`.
    SgW1,
    /// Level-pair second moment:
    /// `A (1-ch)^k E f + A C_IMLult h^{min(alpha_c,1)/2} / c`.
    MlmcVar,
}

/// Right-hand side of the selected bound at step size `h` after `k` steps,
/// starting from `E f(|X_0 - Y_0|) = initial_ef`.
pub fn theorem_bound(
    kind: BoundKind,
    ledger: &ContractionLedger,
    h: f64,
    k: u64,
    initial_ef: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Admissibility("step size must be positive".into()));
    }
    if initial_ef < 0.0 {
        return Err(Error::Domain("initial E f must be nonnegative".into()));
    }
    let geo = |rate: f64| (1.0 - rate * h).powf(k as f64);
    match kind {
        BoundKind::UlaW2 => {
            let ceiling = ledger.h_ceiling_ula_w2();
            if h >= ceiling {
                return Err(Error::Admissibility(format!(
                    "h = {h} violates h < h0 and K/(4 L^2) = {ceiling}"
                )));
            }
            Ok((ledger.big_a * geo(ledger.c) * initial_ef).sqrt()
                + (ledger.big_a * ledger.c_ult / ledger.c).sqrt() * h.powf(0.25))
        }
        BoundKind::UlaW1 => {
            if h >= ledger.h0_1 {
                return Err(Error::Admissibility(format!(
                    "h = {h} violates h < h0_1 = {}",
                    ledger.h0_1
                )));
            }
            let amp = (ledger.q * ledger.r1_1).exp();
            Ok(amp * geo(ledger.c1) * initial_ef + amp * ledger.c_dif.sqrt() * h.sqrt() / ledger.c1)
        }
        BoundKind::SgW2 => {
            let ext = require_inaccurate(ledger)?;
            check_inaccurate_ceiling(ledger, h)?;
            Ok((ledger.big_a * geo(ledger.c) * initial_ef).sqrt()
                + (ledger.big_a * ext.c_iult / ledger.c).sqrt() * h.powf(ext.alpha / 4.0))
        }
        BoundKind::SgW1 => {
            let ext = require_inaccurate(ledger)?;
            check_inaccurate_ceiling(ledger, h)?;
            let amp = (ledger.a * ledger.r2).exp();
            Ok(amp * geo(ledger.c) * initial_ef
                + amp * ext.c_iult * h.powf(ext.alpha / 2.0) / ledger.c)
        }
        BoundKind::MlmcVar => {
            let ext = require_inaccurate(ledger)?;
            check_inaccurate_ceiling(ledger, h)?;
            Ok(ledger.big_a * geo(ledger.c) * initial_ef
                + ledger.big_a * ext.c_imlult * h.powf(ext.alpha_c.min(1.0) / 2.0) / ledger.c)
        }
    }
}

fn require_inaccurate(ledger: &ContractionLedger) -> Result<&InaccurateLedger> {
    ledger.inaccurate.as_ref().ok_or_else(|| {
        Error::ConstantInfeasible("bound requires the inaccurate-drift ledger entries".into())
    })
}

fn check_inaccurate_ceiling(ledger: &ContractionLedger, h: f64) -> Result<()> {
    let ceiling = ledger.h_ceiling_inaccurate()?;
    if h >= ceiling {
        return Err(Error::Admissibility(format!(
            "h = {h} violates h < h0 and K/(4 L^2 + 2 sigma^2) and 1 = {ceiling}"
        )));
    }
    Ok(())
}
