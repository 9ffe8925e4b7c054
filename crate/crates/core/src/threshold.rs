//! Analytic transmit/defer policy for a single power level.
//!
//! The optimal policy is a linear threshold in the per-slot pair
//! `(p, q)`: transmit exactly when `q < k * p`. The slope `k` is tied to the
//! expected discounted reward `C` by `k = 1 / (gamma * C * (1 - gamma^W))`
//! and solves `beta(k) = beta` where
//!
//! * `beta = (1 - gamma) / (gamma * (1 - gamma^W))` depends only on the
//!   discount and the blockage length, and
//! * `beta(k)` is a monotone integral functional of the CDFs of `p` and `q`:
//!
//! ```text
//! beta(k) = k * Int_0^1 Phi_Q(k x) (1 - Phi_P(x)) dx                     k <= 1
//! beta(k) = Int_0^1 Phi_Q dx - 1 + k (1 - Int_0^1 Phi_Q(k x) Phi_P(x) dx)  k > 1
//! ```
//!
//! Closed-form inversions are provided for uniform `p, q` and for the
//! Rayleigh-induced family of [`crate::channel`].

use alloc::vec::Vec;

use crate::channel::{LinkRatios, RadioParams};
use crate::error::{Error, Result};
use crate::numeric::{integrate, invert_increasing, BisectOptions};

/// Per-slot decision of the D2D source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Transmit,
    Halt,
}

/// Cumulative distribution function of a probability-valued random variable.
///
/// `eval` must be nondecreasing on `[0, 1]` with values in `[0, 1]`.
/// Implementations report interior points where they are not smooth so the
/// quadrature can split there.
pub trait Cdf {
    fn eval(&self, x: f64) -> f64;

    /// Interior kinks/saturation points in `(0, 1)`.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// CDF of the uniform distribution on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformCdf;

impl Cdf for UniformCdf {
    fn eval(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

/// Solved policy constants for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub gamma: f64,
    pub w: u32,
    pub beta: f64,
    pub k: f64,
    /// Expected discounted reward under the optimal policy.
    pub c: f64,
}

impl PolicyParams {
    /// Assembles the constants for a known slope; `c` is derived from the
    /// defining identity `k * gamma * c * (1 - gamma^W) = 1`.
    pub fn from_slope(gamma: f64, w: u32, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain("threshold slope must be positive"));
        }
        Ok(PolicyParams {
            gamma,
            w,
            beta: beta_const(gamma, w)?,
            k,
            c: expected_reward(k, gamma, w)?,
        })
    }
}

fn check_gamma_w(gamma: f64, w: u32) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain("discount must lie in (0, 1)"));
    }
    if w < 1 {
        return Err(Error::Domain("blockage length must be at least 1 slot"));
    }
    Ok(())
}

/// `beta = (1 - gamma) / (gamma * (1 - gamma^W))`.
pub fn beta_const(gamma: f64, w: u32) -> Result<f64> {
    check_gamma_w(gamma, w)?;
    Ok((1.0 - gamma) / (gamma * (1.0 - libm::pow(gamma, w as f64))))
}

/// Expected discounted reward for a given slope:
/// `C = 1 / (gamma * k * (1 - gamma^W))`.
pub fn expected_reward(k: f64, gamma: f64, w: u32) -> Result<f64> {
    check_gamma_w(gamma, w)?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain("threshold slope must be positive"));
    }
    Ok(1.0 / (gamma * k * (1.0 - libm::pow(gamma, w as f64))))
}

/// The fundamental transmit rule: transmit iff `q < k * p`; ties defer.
pub fn optimal_action(p: f64, q: f64, k: f64) -> Action {
    if q < k * p {
        Action::Transmit
    } else {
        Action::Halt
    }
}

const SEGMENT_PANELS: usize = 256; // 8-point panels => 2048 evaluations per smooth segment

/// Extended CDF evaluation for arguments that may exceed 1.
fn eval_ext(cdf: &dyn Cdf, y: f64) -> f64 {
    if y >= 1.0 {
        1.0
    } else {
        cdf.eval(y)
    }
}

/// Integrates `f` over `[0, 1]` split at the given interior points.
fn integrate_split(f: impl Fn(f64) -> f64, splits: &mut Vec<f64>) -> f64 {
    splits.retain(|s| *s > 0.0 && *s < 1.0);
    splits.push(1.0);
    splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    splits.dedup();
    let mut lo = 0.0;
    let mut total = 0.0;
    for &hi in splits.iter() {
        if hi > lo {
            total += integrate(&f, lo, hi, SEGMENT_PANELS);
        }
        lo = hi;
    }
    total
}

fn beta_of_k_inner(k: f64, cdf_p: &dyn Cdf, cdf_q: &dyn Cdf) -> f64 {
    if k <= 1.0 {
        let mut splits: Vec<f64> = cdf_p.kinks();
        splits.extend(cdf_q.kinks().iter().map(|s| s / k));
        let value = integrate_split(
            |x| eval_ext(cdf_q, k * x) * (1.0 - cdf_p.eval(x)),
            &mut splits,
        );
        k * value
    } else {
        let mut q_splits = cdf_q.kinks();
        let int_q = integrate_split(|x| cdf_q.eval(x), &mut q_splits);
        let mut splits: Vec<f64> = cdf_p.kinks();
        splits.push(1.0 / k);
        splits.extend(cdf_q.kinks().iter().map(|s| s / k));
        let cross = integrate_split(|x| eval_ext(cdf_q, k * x) * cdf_p.eval(x), &mut splits);
        int_q - 1.0 + k * (1.0 - cross)
    }
}

/// Evaluates the two-branch integral `beta(k)` by quadrature.
///
/// Continuous and nondecreasing in `k`; the saturation points of the CDFs
/// (e.g. the top of the success-probability support) are honored as
/// integration breakpoints.
pub fn beta_of_k(k: f64, cdf_p: &dyn Cdf, cdf_q: &dyn Cdf) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain("threshold slope must be positive"));
    }
    let value = beta_of_k_inner(k, cdf_p, cdf_q);
    if !value.is_finite() {
        return Err(Error::Domain("quadrature produced a non-finite value"));
    }
    Ok(value)
}

/// Inverts `beta(k) = beta` by bracketing bisection on the monotone map.
pub fn solve_k(beta: f64, cdf_p: &dyn Cdf, cdf_q: &dyn Cdf) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain("beta must be positive"));
    }
    let k = invert_increasing(
        |k| beta_of_k_inner(k, cdf_p, cdf_q),
        beta,
        &BisectOptions::default(),
    )?;
    let residual = (beta_of_k_inner(k, cdf_p, cdf_q) - beta).abs();
    if residual > 1e-9 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    Ok(k)
}

/// Closed-form slope for uniform `p` and `q`:
///
/// `k = sqrt(6 beta)` for `beta <= 1/6`, else
/// `k = beta + 1/2 + sqrt((beta + 1/2)^2 - 1/3)`.
pub fn k_uniform(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain("beta must be positive"));
    }
    if beta <= 1.0 / 6.0 {
        Ok(libm::sqrt(6.0 * beta))
    } else {
        let s = beta + 0.5;
        Ok(s + libm::sqrt(s * s - 1.0 / 3.0))
    }
}

/// Slope for the Rayleigh-induced CDFs of [`crate::channel`], given `beta`
/// directly. Uses the closed form on `beta <= beta_l` (where
/// `k <= e^(theta/gamma_SD)`) and a monotone scalar inversion above it.
pub fn k_rayleigh_for_beta(links: &LinkRatios, radio: &RadioParams, beta: f64) -> Result<f64> {
    links.validate()?;
    radio.validate()?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain("beta must be positive"));
    }
    let t_gsd = radio.theta / links.gamma_sd;
    let rbt = links.r_b * radio.theta;
    let rdt = links.r_d / radio.theta;
    let e_t_gub = libm::exp(-radio.theta / links.gamma_ub);
    let beta_l = rdt * e_t_gub / ((1.0 + rbt) * (1.0 + rbt + rdt));

    if beta <= beta_l {
        let k = libm::pow(beta / beta_l, 1.0 / (1.0 + rbt)) * libm::exp(t_gsd);
        if !k.is_finite() {
            return Err(Error::NoSolution("threshold slope overflows"));
        }
        return Ok(k);
    }

    // Above beta_l the slope exceeds e^(theta/gamma_SD) and solves
    //   beta = k e^(-theta/gamma_SD) (1 - z1)
    //        + e^(rdt (theta/gamma_SD - ln k)) (z1 - z2)
    //        + e^(-theta/gamma_UB) / (1 + rbt) - 1,
    // which is increasing in k on that range.
    let z1 = 1.0 / (1.0 + rdt);
    let z2 = e_t_gub / (1.0 + rbt + rdt);
    let k_lo = libm::exp(t_gsd);
    if !k_lo.is_finite() {
        // the success probability underflows to zero: no finite slope can
        // reach this beta and the D2D value degenerates to zero
        return Err(Error::NoSolution("threshold slope overflows"));
    }
    let f = |k: f64| {
        k * libm::exp(-t_gsd) * (1.0 - z1)
            + libm::exp(rdt * (t_gsd - libm::log(k))) * (z1 - z2)
            + e_t_gub / (1.0 + rbt)
            - 1.0
    };
    invert_increasing(
        f,
        beta,
        &BisectOptions {
            lo: k_lo,
            hi: (2.0 * k_lo).max(1e6),
            lo_floor: k_lo,
            hi_cap: 1e306,
            ..BisectOptions::default()
        },
    )
}

/// Slope of the optimal policy for the cellular Rayleigh scenario.
pub fn k_rayleigh(links: &LinkRatios, radio: &RadioParams, gamma: f64, w: u32) -> Result<f64> {
    k_rayleigh_for_beta(links, radio, beta_const(gamma, w)?)
}
