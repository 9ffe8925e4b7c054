//! Radio layer: geometry, Rayleigh fading, SINR-based success/blockage
//! probabilities, their distribution functions, and per-slot observables.
//!
//! Conventions: all powers are linear watts, the decode threshold `theta`
//! and SNR targets are linear ratios, distances are meters. Squared fading
//! magnitudes `|h|^2` of unit-variance complex Gaussian channels are
//! unit-mean exponential variates, redrawn independently per link per slot.

use alloc::{vec, vec::Vec};
use rand::Rng;

use crate::error::{Error, Result};
use crate::threshold::Cdf;

/// 2-D position, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Node placement for one cell: base station `B`, licensed uplink user `U`,
/// D2D source `S`, and D2D destination `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Topology {
    pub pos_b: Point,
    pub pos_u: Point,
    pub pos_s: Point,
    pub pos_d: Point,
}

impl Topology {
    /// Builds a topology, rejecting colocated nodes (every pairwise distance
    /// must be strictly positive so the path-loss terms stay finite).
    pub fn new(pos_b: Point, pos_u: Point, pos_s: Point, pos_d: Point) -> Result<Self> {
        let t = Topology {
            pos_b,
            pos_u,
            pos_s,
            pos_d,
        };
        let nodes = [pos_b, pos_u, pos_s, pos_d];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d = nodes[i].distance(&nodes[j]);
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Domain("colocated or non-finite node positions"));
                }
            }
        }
        Ok(t)
    }

    pub fn d_ub(&self) -> f64 {
        self.pos_u.distance(&self.pos_b)
    }

    pub fn d_sb(&self) -> f64 {
        self.pos_s.distance(&self.pos_b)
    }

    pub fn d_sd(&self) -> f64 {
        self.pos_s.distance(&self.pos_d)
    }

    pub fn d_ud(&self) -> f64 {
        self.pos_u.distance(&self.pos_d)
    }

    pub fn d_db(&self) -> f64 {
        self.pos_d.distance(&self.pos_b)
    }
}

/// Radio parameters shared by every link of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Fixed path-loss scale (dimensionless).
    pub a: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Noise power, watts.
    pub n0: f64,
    /// SINR decode threshold, linear.
    pub theta: f64,
    /// Inter-cell interference power, watts (0 for single-cell runs).
    pub i_ic: f64,
    /// Transmit power of the licensed user `U`, watts.
    pub p_u: f64,
    /// Transmit power of the D2D source `S`, watts.
    pub p_s: f64,
    /// Target received power at `B`, watts.
    pub rho: f64,
    /// Target D2D SNR at `D`, linear.
    pub xi: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            self.a, self.n0, self.theta, self.p_u, self.p_s, self.rho, self.xi,
        ];
        for v in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(
                    "radio parameters must be positive and finite",
                ));
            }
        }
        if !(self.alpha >= 2.0) || !self.alpha.is_finite() {
            return Err(Error::Domain("path-loss exponent must be at least 2"));
        }
        if !(self.i_ic >= 0.0) || !self.i_ic.is_finite() {
            return Err(Error::Domain("inter-cell interference must be nonnegative"));
        }
        Ok(())
    }

    /// Noise-plus-inter-cell-interference floor, watts.
    pub fn noise_floor(&self) -> f64 {
        self.n0 + self.i_ic
    }

    /// Average received power of a transmitter at distance `d` sending with
    /// power `p`: `A * p * d^-alpha`.
    pub fn mean_rx_power(&self, p: f64, d: f64) -> f64 {
        self.a * p * libm::pow(d, -self.alpha)
    }
}

/// The SNR-like link ratios that fully determine the per-slot success and
/// blockage probabilities.
///
/// `gamma_xy` is the mean SNR of the `X -> Y` link (mean received power of
/// `X` at `Y` over the noise floor); `r_d` and `r_b` are the mean
/// received-power ratios of `S` over `U` at `D` and at `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRatios {
    pub gamma_sd: f64,
    pub gamma_sb: f64,
    pub gamma_ud: f64,
    pub gamma_ub: f64,
    pub r_d: f64,
    pub r_b: f64,
}

impl LinkRatios {
    pub fn new(topology: &Topology, radio: &RadioParams) -> Result<Self> {
        radio.validate()?;
        let floor = radio.noise_floor();
        let s_at_d = radio.mean_rx_power(radio.p_s, topology.d_sd());
        let s_at_b = radio.mean_rx_power(radio.p_s, topology.d_sb());
        let u_at_d = radio.mean_rx_power(radio.p_u, topology.d_ud());
        let u_at_b = radio.mean_rx_power(radio.p_u, topology.d_ub());
        let ratios = LinkRatios {
            gamma_sd: s_at_d / floor,
            gamma_sb: s_at_b / floor,
            gamma_ud: u_at_d / floor,
            gamma_ub: u_at_b / floor,
            r_d: s_at_d / u_at_d,
            r_b: s_at_b / u_at_b,
        };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma_sd,
            self.gamma_sb,
            self.gamma_ud,
            self.gamma_ub,
            self.r_d,
            self.r_b,
        ];
        for v in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain("link ratios must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Everything one slot of fading determines: the four squared channel
/// magnitudes plus the two observables `S` can measure, namely the
/// interference power `pi` from `U` at `D` and the useful power `phi`
/// from `U` at `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotObservables {
    pub h_ud_sq: f64,
    pub h_ub_sq: f64,
    pub h_sd_sq: f64,
    pub h_sb_sq: f64,
    /// `A * P_U * d_UD^-alpha * |h_UD|^2`, watts.
    pub pi: f64,
    /// `A * P_U * d_UB^-alpha * |h_UB|^2`, watts.
    pub phi: f64,
}

/// Draws one squared Rayleigh fading magnitude: `|h|^2 ~ Exp(1)` for a
/// zero-mean unit-variance complex Gaussian `h`. Deterministic for a given
/// generator state.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random(); // [0, 1)
    -libm::log(1.0 - u)
}

/// Per-slot success probability of the D2D packet at `D`, conditioned on the
/// observed `|h_UD|^2`:
///
/// `p = exp(-theta/gamma_SD) * exp(-(theta/R_D) * |h_UD|^2)`.
pub fn success_probability(links: &LinkRatios, radio: &RadioParams, h_ud_sq: f64) -> Result<f64> {
    links.validate()?;
    radio.validate()?;
    if !(h_ud_sq >= 0.0) {
        return Err(Error::Domain(
            "squared fading magnitude must be nonnegative",
        ));
    }
    Ok(libm::exp(
        -radio.theta / links.gamma_sd - radio.theta / links.r_d * h_ud_sq,
    ))
}

/// Per-slot probability that a D2D transmission drives the uplink SINR at
/// `B` below the decode threshold, conditioned on the observed `|h_UB|^2`:
///
/// `q = min(1, exp(1/gamma_SB) * exp(-|h_UB|^2 / (R_B * theta)))`.
///
/// The clamp carries the mass of slots where the uplink fails regardless of
/// the interference realization.
pub fn blockage_probability(links: &LinkRatios, radio: &RadioParams, h_ub_sq: f64) -> Result<f64> {
    links.validate()?;
    radio.validate()?;
    if !(h_ub_sq >= 0.0) {
        return Err(Error::Domain(
            "squared fading magnitude must be nonnegative",
        ));
    }
    let exponent = 1.0 / links.gamma_sb - h_ub_sq / (links.r_b * radio.theta);
    if exponent >= 0.0 {
        Ok(1.0)
    } else {
        Ok(libm::exp(exponent))
    }
}

/// CDF of the success probability `p` over the fading of the `U -> D` link.
///
/// `Phi_P(x) = e^(R_D/gamma_SD) * x^(R_D/theta)` for `x <= e^(-theta/gamma_SD)`,
/// and 1 above that point (the largest value `p` can attain).
pub fn cdf_success(x: f64, links: &LinkRatios, radio: &RadioParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain("CDF argument must lie in [0, 1]"));
    }
    Ok(SuccessCdf::new(links, radio)?.eval(x))
}

/// CDF of the blockage probability `q` over the fading of the `U -> B` link.
///
/// `Phi_Q(x) = e^(-R_B*theta/gamma_SB) * x^(R_B*theta)` on `[0, 1]`; the
/// remaining mass `1 - Phi_Q(1)` is the atom at `q = 1` created by the clamp.
pub fn cdf_blockage(x: f64, links: &LinkRatios, radio: &RadioParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain("CDF argument must lie in [0, 1]"));
    }
    Ok(BlockageCdf::new(links, radio)?.eval(x))
}

/// Draws the four per-slot fading magnitudes (order: UD, UB, SD, SB) and
/// fills in the observables `pi` and `phi`.
pub fn slot_observables<R: Rng + ?Sized>(
    topology: &Topology,
    radio: &RadioParams,
    rng: &mut R,
) -> SlotObservables {
    let h_ud_sq = sample_fading(rng);
    let h_ub_sq = sample_fading(rng);
    let h_sd_sq = sample_fading(rng);
    let h_sb_sq = sample_fading(rng);
    SlotObservables {
        h_ud_sq,
        h_ub_sq,
        h_sd_sq,
        h_sb_sq,
        pi: radio.mean_rx_power(radio.p_u, topology.d_ud()) * h_ud_sq,
        phi: radio.mean_rx_power(radio.p_u, topology.d_ub()) * h_ub_sq,
    }
}

// ---------------------------------------------------------------------------
// CDF objects for the threshold solver
// ---------------------------------------------------------------------------

/// [`Cdf`] form of [`cdf_success`], with the saturation point exposed to the
/// quadrature.
#[derive(Debug, Clone, Copy)]
pub struct SuccessCdf {
    amp: f64,
    exponent: f64,
    p_max: f64,
}

impl SuccessCdf {
    pub fn new(links: &LinkRatios, radio: &RadioParams) -> Result<Self> {
        links.validate()?;
        radio.validate()?;
        Ok(SuccessCdf {
            amp: libm::exp(links.r_d / links.gamma_sd),
            exponent: links.r_d / radio.theta,
            p_max: libm::exp(-radio.theta / links.gamma_sd),
        })
    }

    /// Largest attainable success probability, `e^(-theta/gamma_SD)`.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
}

impl Cdf for SuccessCdf {
    fn eval(&self, x: f64) -> f64 {
        if x >= self.p_max {
            1.0
        } else if x <= 0.0 {
            0.0
        } else {
            (self.amp * libm::pow(x, self.exponent)).min(1.0)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.p_max]
    }
}

/// [`Cdf`] form of [`cdf_blockage`]. Continuous on `[0, 1)` with an atom at 1.
#[derive(Debug, Clone, Copy)]
pub struct BlockageCdf {
    amp: f64,
    exponent: f64,
}

impl BlockageCdf {
    pub fn new(links: &LinkRatios, radio: &RadioParams) -> Result<Self> {
        links.validate()?;
        radio.validate()?;
        Ok(BlockageCdf {
            amp: libm::exp(-links.r_b * radio.theta / links.gamma_sb),
            exponent: links.r_b * radio.theta,
        })
    }
}

impl Cdf for BlockageCdf {
    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            self.amp
        } else {
            self.amp * libm::pow(x, self.exponent)
        }
    }
}
