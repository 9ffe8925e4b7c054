//! Decision-making agents: the context-aware single-power strategy (AWA-S),
//! its multi-power extension (AWAm-S), the geographic baseline (GEO-S), and
//! the no-D2D TDMA baseline.
//!
//! Every strategy first makes a per-topology mode choice between direct D2D
//! transmission and relaying through the base station (D2B, TDMA with the
//! licensed user), then acts slot by slot. Power conventions follow the
//! uplink power control: the licensed user targets received power `rho` at
//! `B`, an AWA-S source targets SNR `xi` at `D`, a D2B transmitter targets
//! `rho` at `B`, and a GEO-S D2D source targets received power `rho` at `D`.

use alloc::vec::Vec;

use crate::channel::{
    blockage_probability, success_probability, LinkRatios, RadioParams, SlotObservables, Topology,
};
use crate::error::{Error, Result};
use crate::multipower::{
    classify, ExpMapCoeffs, FixedPointOptions, MultiPowerModel, MultiPowerSpec, ProductDensity,
};
use crate::threshold::{expected_reward, k_rayleigh};

/// Observable-density resolution used when solving the AWAm-S fixed point.
const DENSITY_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    AwaS,
    AwamS,
    GeoS,
    NoD2d,
}

/// Per-topology transmission mode of the D2D source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Direct transmission to `D`, underlaying the licensed uplink.
    D2d,
    /// Relay through the base station, TDMA with the licensed user.
    D2b,
}

/// Outcome of the mode comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecision {
    pub mode: Mode,
    pub c_d2d: f64,
    pub c_d2b: f64,
    /// Threshold constant of the D2D policy, when one was solved.
    pub k: Option<f64>,
}

/// Strategy selection plus its tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Target D2D SNR, linear (AWA-S).
    pub xi: f64,
    /// Geographic threshold (GEO-S).
    pub t_d: f64,
    /// Power ladder in watts, ratio 2 between consecutive levels (AWAm-S).
    pub power_levels: Vec<f64>,
    pub gamma: f64,
    pub w: u32,
}

impl StrategyConfig {
    pub fn awa_s(xi: f64, gamma: f64, w: u32) -> Self {
        StrategyConfig {
            kind: StrategyKind::AwaS,
            xi,
            t_d: 0.8,
            power_levels: Vec::new(),
            gamma,
            w,
        }
    }

    pub fn awam_s(power_levels: Vec<f64>, gamma: f64, w: u32) -> Self {
        StrategyConfig {
            kind: StrategyKind::AwamS,
            xi: 1.0,
            t_d: 0.8,
            power_levels,
            gamma,
            w,
        }
    }

    pub fn geo_s(t_d: f64, gamma: f64, w: u32) -> Self {
        StrategyConfig {
            kind: StrategyKind::GeoS,
            xi: 1.0,
            t_d,
            power_levels: Vec::new(),
            gamma,
            w,
        }
    }

    pub fn no_d2d(gamma: f64, w: u32) -> Self {
        StrategyConfig {
            kind: StrategyKind::NoD2d,
            xi: 1.0,
            t_d: 0.8,
            power_levels: Vec::new(),
            gamma,
            w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Domain("discount must lie in (0, 1)"));
        }
        if self.w < 1 {
            return Err(Error::Domain("blockage length must be at least 1 slot"));
        }
        match self.kind {
            StrategyKind::AwaS => {
                if !(self.xi > 0.0) || !self.xi.is_finite() {
                    return Err(Error::Domain("target D2D SNR must be positive"));
                }
            }
            StrategyKind::GeoS => {
                if !(self.t_d >= 0.0) || !self.t_d.is_finite() {
                    return Err(Error::Domain("geographic threshold must be nonnegative"));
                }
            }
            StrategyKind::AwamS => {
                if self.power_levels.is_empty() {
                    return Err(Error::Empty("power ladder"));
                }
                for pair in self.power_levels.windows(2) {
                    if !(pair[0] > 0.0) || ((pair[1] / pair[0]) - 2.0).abs() > 1e-9 {
                        return Err(Error::Domain("power levels must form a ratio-2 ladder"));
                    }
                }
                if !(self.power_levels[0] > 0.0) {
                    return Err(Error::Domain("power levels must be positive"));
                }
            }
            StrategyKind::NoD2d => {}
        }
        Ok(())
    }
}

/// What the D2D source does in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotAction {
    /// Direct transmission to `D` at the given power (watts); `level` is the
    /// 1-based ladder index (1 for single-power strategies).
    TransmitD2d {
        power: f64,
        level: u32,
    },
    /// Uplink transmission to `B` on an owned TDMA slot.
    TransmitD2b {
        power: f64,
    },
    Halt,
}

/// Expected discounted reward of the D2B mode: a packet every other slot,
/// each decoded with probability `e^(-N0/rho)`:
///
/// `C_D2B = e^(-N0/rho) / (1 - gamma^2)`.
pub fn c_d2b(rho: f64, n0: f64, gamma: f64) -> f64 {
    libm::exp(-n0 / rho) / (1.0 - gamma * gamma)
}

/// Picks the mode from the two expected rewards; the tie goes to D2D.
pub fn select_mode(c_d2d: f64, c_d2b: f64) -> ModeDecision {
    let mode = if c_d2b <= c_d2d { Mode::D2d } else { Mode::D2b };
    ModeDecision {
        mode,
        c_d2d,
        c_d2b,
        k: None,
    }
}

/// GEO-S mode rule: D2D exactly when `T_d * d_SD^-alpha > d_SB^-alpha`.
pub fn geo_s_mode(topology: &Topology, alpha: f64, t_d: f64) -> Mode {
    if t_d * libm::pow(topology.d_sd(), -alpha) > libm::pow(topology.d_sb(), -alpha) {
        Mode::D2d
    } else {
        Mode::D2b
    }
}

/// Per-user throughput of the no-D2D TDMA baseline:
/// `0.5 * e^(-theta N0 / rho)` packets per slot.
pub fn baseline_throughput(rho: f64, n0: f64, theta: f64) -> f64 {
    0.5 * libm::exp(-theta * n0 / rho)
}

fn tdma_uplink_power(radio: &RadioParams, distance: f64) -> f64 {
    // target received power rho at B
    radio.rho * libm::pow(distance, radio.alpha) / radio.a
}

/// Prepared AWA-S agent for one topology.
#[derive(Debug, Clone)]
pub struct AwaS {
    pub mode: Mode,
    pub k: f64,
    pub c_d2d: f64,
    pub c_d2b: f64,
    /// Radio parameters with the strategy's transmit powers filled in.
    pub radio: RadioParams,
    pub links: LinkRatios,
    /// Uplink power S uses on its TDMA slots in D2B mode.
    pub d2b_power: f64,
}

impl AwaS {
    pub fn decision(&self) -> ModeDecision {
        ModeDecision {
            mode: self.mode,
            c_d2d: self.c_d2d,
            c_d2b: self.c_d2b,
            k: Some(self.k),
        }
    }
}

/// Sets `P_S = xi d_SD^alpha N0` and `P_U = rho d_UB^alpha` (scaled by the
/// path-loss constant), solves the Rayleigh threshold, and compares the two
/// mode rewards.
pub fn awa_s_prepare(
    topology: &Topology,
    radio: &RadioParams,
    gamma: f64,
    w: u32,
    xi: f64,
) -> Result<AwaS> {
    radio.validate()?;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::Domain("target D2D SNR must be positive"));
    }
    let radio = RadioParams {
        p_s: xi * libm::pow(topology.d_sd(), radio.alpha) * radio.n0 / radio.a,
        p_u: tdma_uplink_power(radio, topology.d_ub()),
        xi,
        ..*radio
    };
    let links = LinkRatios::new(topology, &radio)?;
    // an unattainable beta means the success probability has collapsed and
    // the D2D value degenerates to zero (the slope runs off to infinity)
    let (k, c_d2d) = match k_rayleigh(&links, &radio, gamma, w) {
        Ok(k) => (k, expected_reward(k, gamma, w)?),
        Err(Error::NoSolution(_)) => (f64::INFINITY, 0.0),
        Err(other) => return Err(other),
    };
    let c_b = c_d2b(radio.rho, radio.n0, gamma);
    let mode = select_mode(c_d2d, c_b).mode;
    Ok(AwaS {
        mode,
        k,
        c_d2d,
        c_d2b: c_b,
        radio,
        links,
        d2b_power: tdma_uplink_power(&radio, topology.d_sb()),
    })
}

/// Slot decision of a prepared AWA-S agent. In D2D mode the per-slot pair
/// `(p_t, q_t)` comes from the observed fading magnitudes and the source
/// transmits exactly when `q_t < k p_t`; in D2B mode it transmits on its
/// TDMA slots (even indices).
pub fn awa_s_step(strategy: &AwaS, observables: &SlotObservables, slot: u64) -> SlotAction {
    match strategy.mode {
        Mode::D2d => {
            let p = success_probability(&strategy.links, &strategy.radio, observables.h_ud_sq)
                .unwrap_or(0.0);
            let q = blockage_probability(&strategy.links, &strategy.radio, observables.h_ub_sq)
                .unwrap_or(1.0);
            if q < strategy.k * p {
                SlotAction::TransmitD2d {
                    power: strategy.radio.p_s,
                    level: 1,
                }
            } else {
                SlotAction::Halt
            }
        }
        Mode::D2b => d2b_step(strategy.d2b_power, slot),
    }
}

fn d2b_step(power: f64, slot: u64) -> SlotAction {
    if slot.is_multiple_of(2) {
        SlotAction::TransmitD2b { power }
    } else {
        SlotAction::Halt
    }
}

/// Prepared AWAm-S agent for one topology.
#[derive(Debug, Clone)]
pub struct AwamS {
    pub mode: Mode,
    pub c_d2b: f64,
    pub model: MultiPowerModel,
    pub radio: RadioParams,
    pub d2b_power: f64,
}

impl AwamS {
    pub fn decision(&self) -> ModeDecision {
        ModeDecision {
            mode: self.mode,
            c_d2d: self.model.c(),
            c_d2b: self.c_d2b,
            k: Some(self.model.k()),
        }
    }
}

/// Builds the cellular probability maps for the given power ladder, solves
/// the expected-reward fixed point over the fading-induced observable
/// density, and compares the resulting `C_D2D` with the D2B reward.
pub fn awam_s_prepare(
    topology: &Topology,
    radio: &RadioParams,
    gamma: f64,
    w: u32,
    power_levels: &[f64],
) -> Result<AwamS> {
    let config = StrategyConfig {
        kind: StrategyKind::AwamS,
        power_levels: power_levels.to_vec(),
        ..StrategyConfig::awam_s(Vec::new(), gamma, w)
    };
    config.validate()?;
    let radio = RadioParams {
        p_s: power_levels[0],
        p_u: tdma_uplink_power(radio, topology.d_ub()),
        ..*radio
    };
    radio.validate()?;
    let coeffs = ExpMapCoeffs::cellular(topology, &radio)?;
    let spec = MultiPowerSpec {
        n_levels: power_levels.len() as u32,
        base_power: power_levels[0],
        coeffs,
        gamma,
        w,
    };
    let density = ProductDensity::exponential(
        radio.mean_rx_power(radio.p_u, topology.d_ud()),
        radio.mean_rx_power(radio.p_u, topology.d_ub()),
        DENSITY_POINTS,
    )?;
    let (model, _) = spec.solve(&density, &FixedPointOptions::default())?;
    let c_b = c_d2b(radio.rho, radio.n0, gamma);
    let mode = select_mode(model.c(), c_b).mode;
    Ok(AwamS {
        mode,
        c_d2b: c_b,
        model,
        radio,
        d2b_power: tdma_uplink_power(&radio, topology.d_sb()),
    })
}

/// Slot decision of the multi-power policy: the classified region index,
/// 0 to defer or the 1-based power level to use.
pub fn awam_s_step(model: &MultiPowerModel, observables: &SlotObservables) -> Result<u32> {
    classify(model, observables.pi, observables.phi)
}

/// Prepared GEO-S agent: the mode is pure geometry and the per-slot rule is
/// static (always transmit when in D2D mode and not blocked).
#[derive(Debug, Clone)]
pub struct GeoS {
    pub mode: Mode,
    pub radio: RadioParams,
    pub d2d_power: f64,
    pub d2b_power: f64,
}

pub fn geo_s_prepare(topology: &Topology, radio: &RadioParams, t_d: f64) -> Result<GeoS> {
    radio.validate()?;
    if !(t_d >= 0.0) || !t_d.is_finite() {
        return Err(Error::Domain("geographic threshold must be nonnegative"));
    }
    let mode = geo_s_mode(topology, radio.alpha, t_d);
    // D2D target: received power rho at D
    let d2d_power = radio.rho * libm::pow(topology.d_sd(), radio.alpha) / radio.a;
    let radio = RadioParams {
        p_s: d2d_power,
        p_u: tdma_uplink_power(radio, topology.d_ub()),
        ..*radio
    };
    Ok(GeoS {
        mode,
        radio,
        d2d_power,
        d2b_power: tdma_uplink_power(&radio, topology.d_sb()),
    })
}

/// One prepared strategy of any kind, ready to be stepped by the simulator.
#[derive(Debug, Clone)]
pub enum PreparedStrategy {
    AwaS(AwaS),
    AwamS(AwamS),
    GeoS(GeoS),
    /// TDMA baseline: no D2D at all, both users target `rho` at `B`.
    NoD2d {
        radio: RadioParams,
        d2b_power: f64,
    },
}

impl PreparedStrategy {
    pub fn prepare(
        config: &StrategyConfig,
        topology: &Topology,
        radio: &RadioParams,
    ) -> Result<Self> {
        config.validate()?;
        Ok(match config.kind {
            StrategyKind::AwaS => PreparedStrategy::AwaS(awa_s_prepare(
                topology,
                radio,
                config.gamma,
                config.w,
                config.xi,
            )?),
            StrategyKind::AwamS => PreparedStrategy::AwamS(awam_s_prepare(
                topology,
                radio,
                config.gamma,
                config.w,
                &config.power_levels,
            )?),
            StrategyKind::GeoS => {
                PreparedStrategy::GeoS(geo_s_prepare(topology, radio, config.t_d)?)
            }
            StrategyKind::NoD2d => {
                radio.validate()?;
                let radio = RadioParams {
                    p_u: tdma_uplink_power(radio, topology.d_ub()),
                    p_s: tdma_uplink_power(radio, topology.d_sb()),
                    ..*radio
                };
                PreparedStrategy::NoD2d {
                    d2b_power: radio.p_s,
                    radio,
                }
            }
        })
    }

    /// The per-topology mode this strategy settled on.
    pub fn mode(&self) -> Mode {
        match self {
            PreparedStrategy::AwaS(s) => s.mode,
            PreparedStrategy::AwamS(s) => s.mode,
            PreparedStrategy::GeoS(s) => s.mode,
            PreparedStrategy::NoD2d { .. } => Mode::D2b,
        }
    }

    /// Radio parameters with the strategy's powers filled in.
    pub fn radio(&self) -> &RadioParams {
        match self {
            PreparedStrategy::AwaS(s) => &s.radio,
            PreparedStrategy::AwamS(s) => &s.radio,
            PreparedStrategy::GeoS(s) => &s.radio,
            PreparedStrategy::NoD2d { radio, .. } => radio,
        }
    }

    /// Whether the licensed user transmits on this slot: always in D2D mode,
    /// on odd slot indices under TDMA.
    pub fn u_transmits(&self, slot: u64) -> bool {
        match self.mode() {
            Mode::D2d => true,
            Mode::D2b => !slot.is_multiple_of(2),
        }
    }

    /// The source's action for one slot; the caller enforces blockages.
    pub fn slot_action(&self, slot: u64, observables: &SlotObservables) -> SlotAction {
        match self {
            PreparedStrategy::AwaS(s) => awa_s_step(s, observables, slot),
            PreparedStrategy::AwamS(s) => match s.mode {
                Mode::D2d => match awam_s_step(&s.model, observables) {
                    Ok(0) | Err(_) => SlotAction::Halt,
                    Ok(level) => SlotAction::TransmitD2d {
                        power: s.model.level_power(level).unwrap_or(s.model.base_power()),
                        level,
                    },
                },
                Mode::D2b => d2b_step(s.d2b_power, slot),
            },
            PreparedStrategy::GeoS(s) => match s.mode {
                Mode::D2d => SlotAction::TransmitD2d {
                    power: s.d2d_power,
                    level: 1,
                },
                Mode::D2b => d2b_step(s.d2b_power, slot),
            },
            PreparedStrategy::NoD2d { d2b_power, .. } => d2b_step(*d2b_power, slot),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{slot_observables, Point};
    use crate::channel::{BlockageCdf, SuccessCdf};
    use crate::threshold::{beta_const, beta_of_k, optimal_action, Action};
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    fn topo() -> Topology {
        Topology::new(
            Point::new(0.0, 0.0),
            Point::new(0.0, 120.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 80.0),
        )
        .unwrap()
    }

    fn base_radio() -> RadioParams {
        let n0 = 1e-12;
        RadioParams {
            a: 1.0,
            alpha: 4.0,
            n0,
            theta: 1.0,
            i_ic: 0.0,
            p_u: 1.0, // overwritten by prepare
            p_s: 1.0,
            rho: n0,
            xi: 1.0,
        }
    }

    #[test]
    fn c_d2b_values() {
        let n0 = 1e-12;
        let c = c_d2b(n0, n0, 0.99);
        assert!((c - 18.486_41).abs() < 1e-4, "c = {c}");
        // gamma -> 0: single-slot reward
        let c = c_d2b(n0, n0, 1e-12);
        assert!((c - (-1.0f64).exp()).abs() < 1e-9);
        // certain decoding
        let c = c_d2b(1.0, 1e-12, 0.99);
        assert!((c - 1.0 / (1.0 - 0.99 * 0.99)).abs() < 1e-9);
    }

    #[test]
    fn mode_selection() {
        assert_eq!(select_mode(10.0, 5.0).mode, Mode::D2d);
        assert_eq!(select_mode(5.0, 10.0).mode, Mode::D2b);
        assert_eq!(select_mode(7.0, 7.0).mode, Mode::D2d); // tie -> D2D
    }

    #[test]
    fn geo_mode_rule() {
        let alpha = 4.0;
        let t = Topology::new(
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 100.0),
        )
        .unwrap();
        // d_SD = d_SB = 100: 0.8 < 1 -> D2B
        assert_eq!(geo_s_mode(&t, alpha, 0.8), Mode::D2b);
        assert_eq!(geo_s_mode(&t, alpha, 0.0), Mode::D2b);
        let t = Topology::new(
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 50.0),
        )
        .unwrap();
        // d_SD = 50, d_SB = 100: 0.8/50^4 > 1/100^4 -> D2D
        assert_eq!(geo_s_mode(&t, alpha, 0.8), Mode::D2d);
    }

    #[test]
    fn baseline_throughput_values() {
        let n0 = 1e-12;
        let w = baseline_throughput(n0, n0, 1.0);
        assert!((w - 0.183_94).abs() < 1e-5, "w = {w}");
        assert!((baseline_throughput(n0, n0, 1e-15) - 0.5).abs() < 1e-6);
        assert!((baseline_throughput(1.0, n0, 1.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn awa_prepare_sets_powers_and_solves_k() {
        let topo = topo();
        let radio = base_radio();
        let s = awa_s_prepare(&topo, &radio, 0.99, 2, 10.0).unwrap();
        // target SNR at D is xi by construction
        let snr_d = s.radio.mean_rx_power(s.radio.p_s, topo.d_sd()) / radio.n0;
        assert!((snr_d - 10.0).abs() < 1e-9);
        // target received power at B is rho by construction
        let rx_b = s.radio.mean_rx_power(s.radio.p_u, topo.d_ub());
        assert!((rx_b - radio.rho).abs() < 1e-21);
        // solver self-consistency
        let beta = beta_const(0.99, 2).unwrap();
        let p = SuccessCdf::new(&s.links, &s.radio).unwrap();
        let q = BlockageCdf::new(&s.links, &s.radio).unwrap();
        let residual = (beta_of_k(s.k, &p, &q).unwrap() - beta).abs();
        assert!(residual < 1e-6, "residual {residual:e}");
    }

    #[test]
    fn vanishing_d2d_power_forces_d2b() {
        let s = awa_s_prepare(&topo(), &base_radio(), 0.99, 2, 1e-8).unwrap();
        assert_eq!(s.mode, Mode::D2b);
        assert!(s.c_d2d < s.c_d2b);
    }

    #[test]
    fn favorable_topology_chooses_d2d() {
        // D right next to S, U far away
        let t = Topology::new(
            Point::new(0.0, 0.0),
            Point::new(0.0, 240.0),
            Point::new(150.0, 0.0),
            Point::new(152.0, 0.0),
        )
        .unwrap();
        let s = awa_s_prepare(&t, &base_radio(), 0.99, 2, 10.0).unwrap();
        assert_eq!(s.mode, Mode::D2d);
        assert!(s.c_d2d > s.c_d2b);
    }

    #[test]
    fn longer_blockage_weakly_lowers_d2d_reward() {
        let mut prev = f64::INFINITY;
        let mut c_b_first = None;
        for w in 1..=10 {
            let s = awa_s_prepare(&topo(), &base_radio(), 0.99, w, 10.0).unwrap();
            assert!(s.c_d2d <= prev * (1.0 + 1e-12), "C_D2D rose at W = {w}");
            prev = s.c_d2d;
            let c_b = *c_b_first.get_or_insert(s.c_d2b);
            assert_eq!(c_b, s.c_d2b, "C_D2B must not depend on W");
        }
    }

    #[test]
    fn awa_step_matches_the_threshold_rule() {
        let topo = topo();
        let s = awa_s_prepare(&topo, &base_radio(), 0.99, 2, 10.0).unwrap();
        assert_eq!(s.mode, Mode::D2d);
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        for slot in 0..500u64 {
            let obs = slot_observables(&topo, &s.radio, &mut rng);
            let p = success_probability(&s.links, &s.radio, obs.h_ud_sq).unwrap();
            let q = blockage_probability(&s.links, &s.radio, obs.h_ub_sq).unwrap();
            let want = optimal_action(p, q, s.k);
            let got = awa_s_step(&s, &obs, slot);
            match want {
                Action::Transmit => assert!(matches!(got, SlotAction::TransmitD2d { .. })),
                Action::Halt => assert_eq!(got, SlotAction::Halt),
            }
        }
        // certain blockage (q = 1) with p below 1/k halts
        let h_ud_sq = s.links.r_d / s.radio.theta * libm::log(2.0 * s.k);
        let obs = SlotObservables {
            h_ud_sq,
            h_ub_sq: 0.0,
            h_sd_sq: 1.0,
            h_sb_sq: 1.0,
            pi: 0.0,
            phi: 0.0,
        };
        let p = success_probability(&s.links, &s.radio, h_ud_sq).unwrap();
        assert!(p < 1.0 / s.k, "test precondition");
        assert_eq!(awa_s_step(&s, &obs, 0), SlotAction::Halt);
        // free reward: no interference, no blockage risk
        let obs = SlotObservables {
            h_ud_sq: 0.0,
            h_ub_sq: 1e9,
            h_sd_sq: 1.0,
            h_sb_sq: 1.0,
            pi: 0.0,
            phi: 1e9,
        };
        assert!(matches!(
            awa_s_step(&s, &obs, 0),
            SlotAction::TransmitD2d { .. }
        ));
    }

    #[test]
    fn d2b_alternation() {
        let t = topo();
        let radio = base_radio();
        let cfg = StrategyConfig::no_d2d(0.99, 2);
        let s = PreparedStrategy::prepare(&cfg, &t, &radio).unwrap();
        assert_eq!(s.mode(), Mode::D2b);
        let obs = slot_observables(&t, s.radio(), &mut Pcg64Mcg::seed_from_u64(1));
        for slot in 0..10u64 {
            let action = s.slot_action(slot, &obs);
            if slot.is_multiple_of(2) {
                assert!(matches!(action, SlotAction::TransmitD2b { .. }));
                assert!(!s.u_transmits(slot));
            } else {
                assert_eq!(action, SlotAction::Halt);
                assert!(s.u_transmits(slot));
            }
        }
    }

    #[test]
    fn geo_s_is_fading_invariant() {
        let t = topo();
        let cfg = StrategyConfig::geo_s(0.8, 0.99, 2);
        let s = PreparedStrategy::prepare(&cfg, &t, &base_radio()).unwrap();
        // d_SD = 80, d_SB = 100: 0.8 * 80^-4 > 100^-4 -> D2D
        assert_eq!(s.mode(), Mode::D2d);
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        for slot in 0..20u64 {
            let obs = slot_observables(&t, s.radio(), &mut rng);
            assert!(matches!(
                s.slot_action(slot, &obs),
                SlotAction::TransmitD2d { .. }
            ));
        }
    }

    #[test]
    fn awam_with_one_level_matches_awa_s() {
        let topo = topo();
        let radio = base_radio();
        let gamma = 0.99;
        for (w, rho_scale) in [(2u32, 1.0), (3, 1e3)] {
            let radio = RadioParams {
                rho: radio.n0 * rho_scale,
                ..radio
            };
            let xi = 10.0;
            let awa = awa_s_prepare(&topo, &radio, gamma, w, xi).unwrap();
            let base = xi * libm::pow(topo.d_sd(), radio.alpha) * radio.n0 / radio.a;
            let awam = awam_s_prepare(&topo, &radio, gamma, w, &[base]).unwrap();
            let k_awa = awa.k;
            let k_awam = awam.model.k();
            // absolute for order-one slopes, relative once k is large
            assert!(
                (k_awa - k_awam).abs() < 1e-3 * k_awa.max(1.0),
                "W {w} rho x{rho_scale}: k {k_awa} vs {k_awam}"
            );
            // identical D2D decisions on shared observables when driven by
            // the same slope (solver agreement is asserted above; slots with
            // q within that tolerance band of k p may flip either way)
            let mut rng = Pcg64Mcg::seed_from_u64(77);
            let mut transmits = 0u32;
            for slot in 0..2000u64 {
                let obs = slot_observables(&topo, &awa.radio, &mut rng);
                let p = success_probability(&awa.links, &awa.radio, obs.h_ud_sq).unwrap();
                let q = blockage_probability(&awa.links, &awa.radio, obs.h_ub_sq).unwrap();
                if p == 0.0 && q == 0.0 {
                    // both probabilities underflowed: the threshold rule
                    // ties at 0 < 0 while the boundary walk still resolves
                    // the (worthless) comparison in log space
                    continue;
                }
                let level = awam_s_step(&awam.model, &obs).unwrap();
                match optimal_action(p, q, awam.model.k()) {
                    Action::Transmit => {
                        transmits += 1;
                        assert_eq!(level, 1, "slot {slot}: threshold transmits, AWAm-S defers");
                    }
                    Action::Halt => assert_eq!(level, 0, "slot {slot}"),
                }
            }
            assert!(transmits > 0, "degenerate test: nothing transmitted");
        }
    }

    #[test]
    fn awam_defers_when_the_uplink_is_already_failing() {
        let topo = topo();
        let radio = RadioParams {
            rho: 1e-9, // 30 dB above the noise floor
            ..base_radio()
        };
        let levels: Vec<f64> = (0..4).map(|i| 0.05 * libm::exp2(i as f64)).collect();
        let awam = awam_s_prepare(&topo, &radio, 0.99, 10, &levels).unwrap();
        assert!(awam.model.k() < 1.0, "k = {}", awam.model.k());
        // phi below theta N0: q = 1 at every level and k < 1 means defer
        let obs = SlotObservables {
            h_ud_sq: 1.0,
            h_ub_sq: 0.0,
            h_sd_sq: 1.0,
            h_sb_sq: 1.0,
            pi: radio.mean_rx_power(awam.radio.p_u, topo.d_ud()),
            phi: 0.5 * radio.theta * radio.n0,
        };
        assert_eq!(awam_s_step(&awam.model, &obs).unwrap(), 0);
    }

    #[test]
    fn config_validation() {
        assert!(StrategyConfig::awa_s(0.0, 0.99, 2).validate().is_err());
        assert!(StrategyConfig::awa_s(10.0, 1.0, 2).validate().is_err());
        assert!(StrategyConfig::awa_s(10.0, 0.99, 0).validate().is_err());
        assert!(StrategyConfig::awam_s(alloc::vec![], 0.99, 2)
            .validate()
            .is_err());
        assert!(
            StrategyConfig::awam_s(alloc::vec![1.0, 3.0], 0.99, 2)
                .validate()
                .is_err(),
            "not a ratio-2 ladder"
        );
        assert!(StrategyConfig::awam_s(alloc::vec![1.0, 2.0, 4.0], 0.99, 2)
            .validate()
            .is_ok());
        let mut geo = StrategyConfig::geo_s(0.8, 0.99, 2);
        geo.t_d = -0.1;
        assert!(geo.validate().is_err());
    }
}
