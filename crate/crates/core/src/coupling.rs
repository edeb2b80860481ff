//! The reflection operator, the truncated mirror coupling and its
//! inaccurate-drift variant.
//!
//! One coupled step maps a pair `(x, y)` to `(X', Y')` where
//! `X' = x + h b(x) + sqrt(h) Z` always, and `Y'` either merges with `X'`
//! (maximal-coupling acceptance through a density ratio and an independent
//! uniform), reflects the Gaussian increment across the hyperplane
//! orthogonal to `x_hat - y_hat`, or moves synchronously. Mirror behaviour
//! is truncated: jumps larger than `m` and pairs further apart than `H`
//! after the drift step move synchronously.

use crate::drift::{norm, DriftModel, InaccurateDrift, SubsampleDraw};
use crate::error::{Error, Result};

/// Truncation parameters of one coupled step.
///
/// `m = inf` and `H = inf` recover the untruncated mirror coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Step size `h > 0`.
    pub h: f64,
    /// Truncation radius for the Gaussian step.
    pub m: f64,
    /// Truncation threshold on the post-drift distance.
    pub big_h: f64,
}

impl CouplingParams {
    pub fn new(h: f64, m: f64, big_h: f64) -> Result<Self> {
        if !(h > 0.0) || !(m > 0.0) || !(big_h > 0.0) {
            return Err(Error::Domain(
                "coupling parameters must satisfy h > 0, m > 0, H > 0".into(),
            ));
        }
        Ok(CouplingParams { h, m, big_h })
    }

    /// Defaults certified by the contraction theorem:
    /// `m = sqrt(h0)/2`, `H = r1`.
    pub fn from_ledger(ledger: &crate::constants::ContractionLedger, h: f64) -> Result<Self> {
        CouplingParams::new(h, ledger.coupling_m(), ledger.coupling_h_threshold())
    }

    /// Untruncated mirror coupling.
    pub fn untruncated(h: f64) -> Result<Self> {
        CouplingParams::new(h, f64::INFINITY, f64::INFINITY)
    }
}

/// Which branch of the coupling fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingBranch {
    /// `Y' = X'`.
    Merged,
    /// `Y' = y_hat + R sqrt(h) Z`.
    Reflected,
    /// `Y' = y_hat + sqrt(h) Z`.
    Synchronous,
}

#[derive(Debug, Clone)]
pub struct CouplingOutcome {
    pub x_next: Vec<f64>,
    pub y_next: Vec<f64>,
    pub branch: CouplingBranch,
}

/// Reflects `u` across the hyperplane orthogonal to `x_hat - y_hat`:
/// `u - 2 <e, u> e` with `e = (x_hat - y_hat)/|x_hat - y_hat|`.
///
/// An involutive isometry; the caller must branch on `x_hat = y_hat` first.
pub fn reflect(x_hat: &[f64], y_hat: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let mut e: Vec<f64> = x_hat.iter().zip(y_hat).map(|(a, b)| a - b).collect();
    let len = norm(&e);
    if len == 0.0 {
        return Err(Error::Domain("reflection undefined for x_hat = y_hat".into()));
    }
    for v in e.iter_mut() {
        *v /= len;
    }
    let dot: f64 = e.iter().zip(u).map(|(a, b)| a * b).sum();
    Ok(u.iter().zip(&e).map(|(ui, ei)| ui - 2.0 * dot * ei).collect())
}

/// Scratch space for coupled steps, reused across a trajectory.
#[derive(Debug, Clone)]
pub struct CouplingScratch {
    x_hat: Vec<f64>,
    y_hat: Vec<f64>,
    bx: Vec<f64>,
    by: Vec<f64>,
}

impl CouplingScratch {
    pub fn new(dim: usize) -> Self {
        CouplingScratch {
            x_hat: vec![0.0; dim],
            y_hat: vec![0.0; dim],
            bx: vec![0.0; dim],
            by: vec![0.0; dim],
        }
    }
}

/// One truncated mirror step with the exact drift.
///
/// `z` is a standard normal vector and `zeta` a uniform(0,1) draw, both
/// supplied by the caller.
pub fn truncated_mirror_step(
    x: &[f64],
    y: &[f64],
    drift: &DriftModel,
    params: &CouplingParams,
    z: &[f64],
    zeta: f64,
) -> CouplingOutcome {
    let mut scratch = CouplingScratch::new(x.len());
    drift.eval_into(x, &mut scratch.bx);
    drift.eval_into(y, &mut scratch.by);
    mirror_from_hats(x, y, params, z, zeta, &mut scratch)
}

/// One truncated mirror step with a subsampled drift; the same draw `u`
/// feeds both post-drift points.
pub fn inaccurate_truncated_mirror_step(
    x: &[f64],
    y: &[f64],
    drift: &InaccurateDrift,
    u: &SubsampleDraw,
    params: &CouplingParams,
    z: &[f64],
    zeta: f64,
) -> CouplingOutcome {
    let mut scratch = CouplingScratch::new(x.len());
    drift.eval_subsampled_into(x, u, &mut scratch.bx);
    drift.eval_subsampled_into(y, u, &mut scratch.by);
    mirror_from_hats(x, y, params, z, zeta, &mut scratch)
}

/// Core of the coupled step once the drift values are in the scratch space;
/// writes the next pair into the provided buffers, allocation-free.
pub fn mirror_step_into(
    x: &[f64],
    y: &[f64],
    params: &CouplingParams,
    z: &[f64],
    zeta: f64,
    scratch: &mut CouplingScratch,
    x_next: &mut [f64],
    y_next: &mut [f64],
) -> CouplingBranch {
    let h = params.h;
    let sqrt_h = h.sqrt();
    let d = x.len();
    for i in 0..d {
        scratch.x_hat[i] = x[i] + h * scratch.bx[i];
        scratch.y_hat[i] = y[i] + h * scratch.by[i];
    }
    let x_hat = &scratch.x_hat;
    let y_hat = &scratch.y_hat;
    let r_hat_sq: f64 = x_hat.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let r_hat = r_hat_sq.sqrt();
    let jump_sq: f64 = z.iter().map(|v| h * v * v).sum();

    for i in 0..d {
        x_next[i] = x_hat[i] + sqrt_h * z[i];
    }

    // Synchronous when the jump is large or the pair is far apart.
    if jump_sq.sqrt() >= params.m || r_hat > params.big_h {
        for i in 0..d {
            y_next[i] = y_hat[i] + sqrt_h * z[i];
        }
        return CouplingBranch::Synchronous;
    }

    // Post-drift collision: the mirror step degenerates, merge.
    if r_hat == 0.0 {
        y_next.copy_from_slice(x_next);
        return CouplingBranch::Merged;
    }

    // Density ratio of the m-truncated Gaussians at X', in log space:
    // exp(min(0, (|X'-x_hat|^2 - |X'-y_hat|^2)/(2h))) 1{|X'-y_hat| <= m}.
    // The denominator never vanishes here because |X'-x_hat| < m on this
    // branch.
    let to_y_sq: f64 = x_next.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let ratio = if to_y_sq.sqrt() <= params.m {
        let log_ratio = (jump_sq - to_y_sq) / (2.0 * h);
        log_ratio.min(0.0).exp()
    } else {
        0.0
    };

    if zeta <= ratio {
        y_next.copy_from_slice(x_next);
        return CouplingBranch::Merged;
    }

    // Reflection: Y' = y_hat + R sqrt(h) z.
    let mut dot = 0.0;
    for i in 0..d {
        dot += (x_hat[i] - y_hat[i]) * z[i];
    }
    dot /= r_hat;
    for i in 0..d {
        y_next[i] = y_hat[i] + sqrt_h * (z[i] - 2.0 * dot * (x_hat[i] - y_hat[i]) / r_hat);
    }
    CouplingBranch::Reflected
}

/// Allocating wrapper around [`mirror_step_into`].
pub fn mirror_from_hats(
    x: &[f64],
    y: &[f64],
    params: &CouplingParams,
    z: &[f64],
    zeta: f64,
    scratch: &mut CouplingScratch,
) -> CouplingOutcome {
    let mut x_next = vec![0.0; x.len()];
    let mut y_next = vec![0.0; x.len()];
    let branch = mirror_step_into(x, y, params, z, zeta, scratch, &mut x_next, &mut y_next);
    CouplingOutcome { x_next, y_next, branch }
}
