//! Slotted Monte Carlo engine: random topologies, per-slot fading, strategy
//! stepping, base-station blockage enforcement, and throughput accounting.
//!
//! Each topology index owns an independent random substream derived from the
//! master seed, so sessions can run in any order (or concurrently) and still
//! reproduce bit-identical results.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::channel::{sample_fading, Point, RadioParams, SlotObservables, Topology};
use crate::error::{Error, Result};
use crate::strategies::{Mode, PreparedStrategy, SlotAction, StrategyConfig};

/// One experiment cell: geometry bounds, run sizes, and the strategy under
/// test.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Cell radius, meters.
    pub r_cell: f64,
    /// Maximum S-D separation, meters.
    pub l_max: f64,
    pub n_topologies: u32,
    pub slots_per_topology: u32,
    pub seed: u64,
    pub radio: RadioParams,
    pub strategy: StrategyConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_cell > 0.0 && self.l_max > 0.0) {
            return Err(Error::Domain("cell radius and S-D range must be positive"));
        }
        if self.n_topologies < 1 || self.slots_per_topology < 1 {
            return Err(Error::Domain("topology and slot counts must be at least 1"));
        }
        self.radio.validate()?;
        self.strategy.validate()
    }
}

/// Aggregated result of one or more sessions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    /// Licensed-user throughput, packets per slot.
    pub omega_u: f64,
    /// D2D-source throughput, packets per slot.
    pub omega_s: f64,
    pub omega_sum: f64,
    pub omega_min: f64,
    /// Fraction of slots spent in D2D mode (0 or 1 for a single session).
    pub d2d_mode_fraction: f64,
    /// Fraction of slots the source sat out a blockage.
    pub blockage_fraction: f64,
    pub slots_simulated: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent substream for one topology index.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    let mut state = master;
    let a = splitmix64(&mut state);
    state ^= index.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    a ^ splitmix64(&mut state)
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point {
    let r = radius * libm::sqrt(rng.random::<f64>());
    let angle = core::f64::consts::TAU * rng.random::<f64>();
    Point::new(r * libm::cos(angle), r * libm::sin(angle))
}

/// Draws one topology: `B` at the origin, `U` uniform in the cell disk,
/// `S` uniform in the inner 0.75 R disk, and `D` uniform in the inner disk
/// subject to `d_SD <= l_max` (rejection sampling).
pub fn generate_topology<R: Rng + ?Sized>(rng: &mut R, r_cell: f64, l_max: f64) -> Topology {
    let pos_b = Point::new(0.0, 0.0);
    loop {
        let pos_u = uniform_in_disk(rng, r_cell);
        let pos_s = uniform_in_disk(rng, 0.75 * r_cell);
        let pos_d = loop {
            let candidate = uniform_in_disk(rng, 0.75 * r_cell);
            if candidate.distance(&pos_s) <= l_max {
                break candidate;
            }
        };
        // colocated nodes have probability zero; redraw if it happens
        if let Ok(topology) = Topology::new(pos_b, pos_u, pos_s, pos_d) {
            return topology;
        }
    }
}

/// Simulates `slots_per_topology` slots of one topology with the session's
/// own random stream. The strategy is prepared (mode decision, policy
/// solve) for this topology first.
///
/// Per slot: fading is drawn for all four links; the licensed user follows
/// its schedule (every slot in D2D mode, odd TDMA slots otherwise); the
/// source acts by its policy unless blocked. A D2D transmission that
/// coincides with an uplink decoding failure triggers a blockage covering
/// the next `W` slots.
pub fn run_session<R: Rng + ?Sized>(
    topology: &Topology,
    config: &SimConfig,
    rng: &mut R,
) -> Result<SimOutcome> {
    config.validate()?;
    let strategy = PreparedStrategy::prepare(&config.strategy, topology, &config.radio)?;
    let radio = *strategy.radio();
    let floor = radio.noise_floor();
    let theta = radio.theta;
    let w = config.strategy.w;

    // per-unit-power channel gains, fixed for the session
    let gain_ud = radio.a * libm::pow(topology.d_ud(), -radio.alpha);
    let gain_ub = radio.a * libm::pow(topology.d_ub(), -radio.alpha);
    let gain_sd = radio.a * libm::pow(topology.d_sd(), -radio.alpha);
    let gain_sb = radio.a * libm::pow(topology.d_sb(), -radio.alpha);
    let mean_pi = radio.p_u * gain_ud;
    let mean_phi = radio.p_u * gain_ub;

    let slots = config.slots_per_topology as u64;
    let mut delivered_u = 0u64;
    let mut delivered_s = 0u64;
    let mut blocked_slots = 0u64;
    let mut blocked_remaining = 0u32;

    for slot in 0..slots {
        // draw order matches channel::slot_observables: UD, UB, SD, SB
        let h_ud_sq = sample_fading(rng);
        let h_ub_sq = sample_fading(rng);
        let h_sd_sq = sample_fading(rng);
        let h_sb_sq = sample_fading(rng);
        let observables = SlotObservables {
            h_ud_sq,
            h_ub_sq,
            h_sd_sq,
            h_sb_sq,
            pi: mean_pi * h_ud_sq,
            phi: mean_phi * h_ub_sq,
        };

        let u_transmits = strategy.u_transmits(slot);
        let action = if blocked_remaining > 0 {
            blocked_remaining -= 1;
            blocked_slots += 1;
            SlotAction::Halt
        } else {
            strategy.slot_action(slot, &observables)
        };

        let mut s_interference_at_b = 0.0;
        match action {
            SlotAction::TransmitD2d { power, .. } => {
                s_interference_at_b = power * gain_sb * h_sb_sq;
                let interference_at_d = if u_transmits { observables.pi } else { 0.0 };
                let sinr_d = power * gain_sd * h_sd_sq / (floor + interference_at_d);
                if sinr_d >= theta {
                    delivered_s += 1;
                }
            }
            SlotAction::TransmitD2b { power } => {
                // owned TDMA slot: no concurrent licensed transmission
                let sinr_b = power * gain_sb * h_sb_sq / floor;
                if sinr_b >= theta {
                    delivered_s += 1;
                }
            }
            SlotAction::Halt => {}
        }

        if u_transmits {
            let sinr_b = observables.phi / (floor + s_interference_at_b);
            if sinr_b >= theta {
                delivered_u += 1;
            } else if matches!(action, SlotAction::TransmitD2d { .. }) {
                // uplink failure with a concurrent D2D transmission: the
                // base station silences S starting next slot
                blocked_remaining = w;
            }
        }
    }

    let omega_u = delivered_u as f64 / slots as f64;
    let omega_s = delivered_s as f64 / slots as f64;
    Ok(SimOutcome {
        omega_u,
        omega_s,
        omega_sum: omega_u + omega_s,
        omega_min: omega_u.min(omega_s),
        d2d_mode_fraction: match strategy.mode() {
            Mode::D2d => 1.0,
            Mode::D2b => 0.0,
        },
        blockage_fraction: blocked_slots as f64 / slots as f64,
        slots_simulated: slots,
    })
}

/// Generates topology `index` from its substream and runs one session on it.
pub fn run_topology(config: &SimConfig, index: u32) -> Result<SimOutcome> {
    config.validate()?;
    let mut rng = Pcg64Mcg::seed_from_u64(substream_seed(config.seed, index as u64));
    let topology = generate_topology(&mut rng, config.r_cell, config.l_max);
    run_session(&topology, config, &mut rng)
}

/// Runs every topology sequentially and aggregates.
pub fn run_all(config: &SimConfig) -> Result<SimOutcome> {
    let outcomes: Result<Vec<SimOutcome>> = (0..config.n_topologies)
        .map(|index| run_topology(config, index))
        .collect();
    aggregate(&outcomes?)
}

/// Slot-weighted average of the per-session outcomes; the derived fields
/// are recomputed from the aggregated throughputs.
pub fn aggregate(outcomes: &[SimOutcome]) -> Result<SimOutcome> {
    if outcomes.is_empty() {
        return Err(Error::Empty("no session outcomes to aggregate"));
    }
    let total: u64 = outcomes.iter().map(|o| o.slots_simulated).sum();
    if total == 0 {
        return Err(Error::Empty("zero simulated slots"));
    }
    let mut omega_u = 0.0;
    let mut omega_s = 0.0;
    let mut d2d = 0.0;
    let mut blocked = 0.0;
    for o in outcomes {
        let weight = o.slots_simulated as f64 / total as f64;
        omega_u += weight * o.omega_u;
        omega_s += weight * o.omega_s;
        d2d += weight * o.d2d_mode_fraction;
        blocked += weight * o.blockage_fraction;
    }
    Ok(SimOutcome {
        omega_u,
        omega_s,
        omega_sum: omega_u + omega_s,
        omega_min: omega_u.min(omega_s),
        d2d_mode_fraction: d2d,
        blockage_fraction: blocked,
        slots_simulated: total,
    })
}
