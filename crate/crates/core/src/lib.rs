//! Adaptive device-to-device (D2D) transmission over shared cellular uplink
//! spectrum: channel models, transmit/defer policy solvers, and a slotted
//! Monte Carlo simulator.
//!
//! A licensed user `U` transmits to a base station `B` on every slot while a
//! secondary pair `S -> D` tries to reuse the same band. The base station
//! punishes any D2D transmission that coincides with an uplink decoding
//! failure by silencing `S` for `W` slots. The crate computes the optimal
//! transmit/defer (and power-level) policy for `S` by three mutually
//! validating routes:
//!
//! * [`mdp`] — discrete Markov decision process solved by value iteration;
//! * [`threshold`] — the analytic threshold rule `q < k·p`, with `k`
//!   obtained by inverting a monotone integral equation (closed forms for
//!   uniform and Rayleigh-induced distributions);
//! * [`multipower`] — the multi-power-level policy over the observable pair
//!   `(pi, phi)`, with `k` from a scalar fixed-point iteration.
//!
//! [`sim`] drives the strategies of [`strategies`] over randomly generated
//! topologies and reports per-user throughput and fairness.
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes
//! through `libm` and all randomness enters through caller-provided
//! deterministic generators.

#![no_std]
// validation deliberately writes `!(x > 0.0)` so NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod error;
pub mod mdp;
pub mod multipower;
pub mod numeric;
pub mod sim;
pub mod strategies;
pub mod threshold;

pub use error::{Error, Result};
