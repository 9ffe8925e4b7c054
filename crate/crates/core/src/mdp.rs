//! Discrete Markov decision process for the transmit/halt problem.
//!
//! States combine a blockage counter `lambda in {0, ..., W}` with the
//! current `(p, q)` pair drawn from finite grids. Action `T` (transmit) is
//! allowed only when `lambda = 0`, earns expected reward `p`, and risks
//! entering the blockage chain with probability `q`; action `H` earns
//! nothing. With a time-uncorrelated `(p, q)` kernel the blocked states
//! need no `(p, q)` coordinates and the state count drops from
//! `|P| |Q| (W + 1)` to `|P| |Q| + W`.
//!
//! Value iteration from the zero vector converges to the unique discounted
//! fixed point; the greedy policy is the optimal one and, on uncorrelated
//! models, has the threshold shape `transmit iff q < k p` whose slope
//! [`extract_threshold`] recovers from the grid.

use alloc::{vec, vec::Vec};

use crate::error::{Error, Result};
use crate::threshold::Action;

/// MDP state: blockage counter plus grid coordinates of `(p, q)`.
///
/// In the uncorrelated model the grid coordinates of blocked states are
/// meaningless and normalized to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdpState {
    pub lambda: u32,
    pub p_index: usize,
    pub q_index: usize,
}

impl MdpState {
    pub fn free(p_index: usize, q_index: usize) -> Self {
        MdpState {
            lambda: 0,
            p_index,
            q_index,
        }
    }

    pub fn blocked(lambda: u32) -> Self {
        MdpState {
            lambda,
            p_index: 0,
            q_index: 0,
        }
    }

    pub fn is_free(&self) -> bool {
        self.lambda == 0
    }
}

/// Law of the next `(p, q)` pair.
#[derive(Debug, Clone)]
pub enum Kernel {
    /// Fresh draw each slot from a single marginal over grid pairs
    /// (time-uncorrelated case).
    Uncorrelated(Vec<f64>),
    /// Row-stochastic matrix indexed by the current pair.
    Correlated(Vec<Vec<f64>>),
}

/// Transmit/halt decision process over finite `(p, q)` grids.
#[derive(Debug, Clone)]
pub struct MdpModel {
    p_grid: Vec<f64>,
    q_grid: Vec<f64>,
    kernel: Kernel,
    w: u32,
    gamma: f64,
}

/// Midpoint grid `(i + 0.5) / n`, which avoids atoms at 0 and 1.
pub fn midpoint_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Uniform marginal over `n_pairs` grid pairs.
pub fn uniform_marginal(n_pairs: usize) -> Vec<f64> {
    vec![1.0 / n_pairs as f64; n_pairs]
}

const ROW_SUM_TOLERANCE: f64 = 1e-12;

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("probability grid"));
    }
    let mut prev = -1.0;
    for &g in grid {
        if !(0.0..=1.0).contains(&g) || g <= prev {
            return Err(Error::Domain(
                "grids must be strictly increasing within [0, 1]",
            ));
        }
        prev = g;
    }
    Ok(())
}

fn check_distribution(row: &[f64], n_pairs: usize) -> Result<()> {
    if row.len() != n_pairs {
        return Err(Error::Domain(
            "distribution length must match the grid pairs",
        ));
    }
    let mut sum = 0.0;
    for &m in row {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::Domain("probabilities must be nonnegative"));
        }
        sum += m;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::NotStochastic { sum });
    }
    Ok(())
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

/// Builds the time-uncorrelated model: `|P| |Q| + W` states, next `(p', q')`
/// drawn from `marginal` regardless of the current pair.
pub fn build_uncorrelated(
    p_grid: Vec<f64>,
    q_grid: Vec<f64>,
    marginal: Vec<f64>,
    w: u32,
    gamma: f64,
) -> Result<MdpModel> {
    check_grid(&p_grid)?;
    check_grid(&q_grid)?;
    check_gamma_w(gamma, w)?;
    check_distribution(&marginal, p_grid.len() * q_grid.len())?;
    Ok(MdpModel {
        p_grid,
        q_grid,
        kernel: Kernel::Uncorrelated(marginal),
        w,
        gamma,
    })
}

/// Builds the correlated model: full `(lambda, p, q)` state space with the
/// pair evolving by `rows[current_pair]` on every step, blocked or not.
pub fn build_correlated(
    p_grid: Vec<f64>,
    q_grid: Vec<f64>,
    rows: Vec<Vec<f64>>,
    w: u32,
    gamma: f64,
) -> Result<MdpModel> {
    check_grid(&p_grid)?;
    check_grid(&q_grid)?;
    check_gamma_w(gamma, w)?;
    let n_pairs = p_grid.len() * q_grid.len();
    if rows.len() != n_pairs {
        return Err(Error::Domain("kernel must have one row per grid pair"));
    }
    for row in &rows {
        check_distribution(row, n_pairs)?;
    }
    Ok(MdpModel {
        p_grid,
        q_grid,
        kernel: Kernel::Correlated(rows),
        w,
        gamma,
    })
}

impl MdpModel {
    pub fn p_grid(&self) -> &[f64] {
        &self.p_grid
    }

    pub fn q_grid(&self) -> &[f64] {
        &self.q_grid
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn is_uncorrelated(&self) -> bool {
        matches!(self.kernel, Kernel::Uncorrelated(_))
    }

    pub fn num_pairs(&self) -> usize {
        self.p_grid.len() * self.q_grid.len()
    }

    /// Total state count: `|P| |Q| + W` uncorrelated, `|P| |Q| (W + 1)`
    /// correlated.
    pub fn num_states(&self) -> usize {
        match self.kernel {
            Kernel::Uncorrelated(_) => self.num_pairs() + self.w as usize,
            Kernel::Correlated(_) => self.num_pairs() * (self.w as usize + 1),
        }
    }

    fn pair_index(&self, p_index: usize, q_index: usize) -> usize {
        p_index * self.q_grid.len() + q_index
    }

    /// Flat index of a state. Free states come first in pair order
    /// (`p`-major); uncorrelated blocked states follow as `lambda = 1..=W`.
    pub fn state_index(&self, s: &MdpState) -> Result<usize> {
        if s.lambda > self.w || s.p_index >= self.p_grid.len() || s.q_index >= self.q_grid.len() {
            return Err(Error::Domain("state out of range"));
        }
        Ok(match self.kernel {
            Kernel::Uncorrelated(_) => {
                if s.lambda == 0 {
                    self.pair_index(s.p_index, s.q_index)
                } else {
                    self.num_pairs() + s.lambda as usize - 1
                }
            }
            Kernel::Correlated(_) => {
                s.lambda as usize * self.num_pairs() + self.pair_index(s.p_index, s.q_index)
            }
        })
    }

    /// Inverse of [`state_index`](Self::state_index).
    pub fn state_at(&self, index: usize) -> MdpState {
        let nq = self.q_grid.len();
        match self.kernel {
            Kernel::Uncorrelated(_) => {
                if index < self.num_pairs() {
                    MdpState::free(index / nq, index % nq)
                } else {
                    MdpState::blocked((index - self.num_pairs()) as u32 + 1)
                }
            }
            Kernel::Correlated(_) => {
                let lambda = (index / self.num_pairs()) as u32;
                let pair = index % self.num_pairs();
                MdpState {
                    lambda,
                    p_index: pair / nq,
                    q_index: pair % nq,
                }
            }
        }
    }

    fn pair_row(&self, s: &MdpState) -> &[f64] {
        match &self.kernel {
            Kernel::Uncorrelated(m) => m,
            Kernel::Correlated(rows) => &rows[self.pair_index(s.p_index, s.q_index)],
        }
    }

    /// Distribution over successor states for `(s, a)`, as sparse
    /// `(state, probability)` entries. Zero-probability entries are omitted.
    pub fn transition_kernel(&self, s: &MdpState, a: Action) -> Result<Vec<(MdpState, f64)>> {
        self.state_index(s)?; // range check
        let nq = self.q_grid.len();
        let correlated = !self.is_uncorrelated();
        let spread = |weight: f64, lambda: u32, out: &mut Vec<(MdpState, f64)>| {
            for (pair, &m) in self.pair_row(s).iter().enumerate() {
                if m * weight > 0.0 {
                    out.push((
                        MdpState {
                            lambda,
                            p_index: pair / nq,
                            q_index: pair % nq,
                        },
                        weight * m,
                    ));
                }
            }
        };
        let mut out = Vec::new();
        match a {
            Action::Halt => {
                if s.lambda == 0 || s.lambda == self.w {
                    // free, or last slot of the blockage: next slot is free
                    spread(1.0, 0, &mut out);
                } else if correlated {
                    spread(1.0, s.lambda + 1, &mut out);
                } else {
                    out.push((MdpState::blocked(s.lambda + 1), 1.0));
                }
            }
            Action::Transmit => {
                if s.lambda > 0 {
                    return Err(Error::IllegalAction);
                }
                let q = self.q_grid[s.q_index];
                spread(1.0 - q, 0, &mut out);
                if q > 0.0 {
                    if correlated {
                        spread(q, 1, &mut out);
                    } else {
                        out.push((MdpState::blocked(1), q));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Convergence knobs for [`value_iteration`].
#[derive(Debug, Clone, Copy)]
pub struct ValueIterationOptions {
    /// Sup-norm change at which iteration stops.
    pub epsilon: f64,
    pub max_iterations: u64,
}

impl Default for ValueIterationOptions {
    fn default() -> Self {
        ValueIterationOptions {
            epsilon: 1e-9,
            max_iterations: 1_000_000,
        }
    }
}

/// Converged values and greedy policy, indexed by
/// [`MdpModel::state_index`].
#[derive(Debug, Clone)]
pub struct SolvedPolicy {
    pub values: Vec<f64>,
    pub actions: Vec<Action>,
    pub iterations: u64,
    pub residual: f64,
    /// Sup-norm change per sweep, for convergence diagnostics.
    pub residuals: Vec<f64>,
}

/// Iterates the value update from the zero vector until the sup-norm change
/// drops below `epsilon`, then extracts the greedy policy. Ties resolve to
/// halt.
pub fn value_iteration(model: &MdpModel, opts: &ValueIterationOptions) -> Result<SolvedPolicy> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive"));
    }
    match &model.kernel {
        Kernel::Uncorrelated(marginal) => iterate_uncorrelated(model, marginal, opts),
        Kernel::Correlated(rows) => iterate_correlated(model, rows, opts),
    }
}

fn greedy(transmit: f64, halt: f64) -> Action {
    if transmit > halt {
        Action::Transmit
    } else {
        Action::Halt
    }
}

fn iterate_uncorrelated(
    model: &MdpModel,
    marginal: &[f64],
    opts: &ValueIterationOptions,
) -> Result<SolvedPolicy> {
    let n_pairs = model.num_pairs();
    let w = model.w as usize;
    let gamma = model.gamma;
    let nq = model.q_grid.len();
    let mut v_free = vec![0.0; n_pairs];
    let mut v_block = vec![0.0; w];
    let mut next_free = vec![0.0; n_pairs];
    let mut next_block = vec![0.0; w];
    let mut residuals = Vec::new();
    let mut iterations = 0u64;

    loop {
        iterations += 1;
        let m: f64 = marginal.iter().zip(v_free.iter()).map(|(w, v)| w * v).sum();
        let v_block1 = v_block[0];
        let mut residual = 0.0f64;
        for pair in 0..n_pairs {
            let p = model.p_grid[pair / nq];
            let q = model.q_grid[pair % nq];
            let halt = gamma * m;
            let transmit = p + gamma * ((1.0 - q) * m + q * v_block1);
            let v = transmit.max(halt);
            residual = residual.max((v - v_free[pair]).abs());
            next_free[pair] = v;
        }
        for i in 0..w {
            let v = if i + 1 < w {
                gamma * v_block[i + 1]
            } else {
                gamma * m
            };
            residual = residual.max((v - v_block[i]).abs());
            next_block[i] = v;
        }
        core::mem::swap(&mut v_free, &mut next_free);
        core::mem::swap(&mut v_block, &mut next_block);
        residuals.push(residual);
        if residual < opts.epsilon {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
    }

    let m: f64 = marginal.iter().zip(v_free.iter()).map(|(w, v)| w * v).sum();
    let v_block1 = v_block[0];
    let mut values = v_free.clone();
    values.extend_from_slice(&v_block);
    let mut actions = Vec::with_capacity(n_pairs + w);
    for pair in 0..n_pairs {
        let p = model.p_grid[pair / nq];
        let q = model.q_grid[pair % nq];
        let transmit = p + gamma * ((1.0 - q) * m + q * v_block1);
        actions.push(greedy(transmit, gamma * m));
    }
    actions.extend(core::iter::repeat_n(Action::Halt, w));
    let residual = *residuals.last().unwrap();
    Ok(SolvedPolicy {
        values,
        actions,
        iterations,
        residual,
        residuals,
    })
}

fn iterate_correlated(
    model: &MdpModel,
    rows: &[Vec<f64>],
    opts: &ValueIterationOptions,
) -> Result<SolvedPolicy> {
    let n_pairs = model.num_pairs();
    let w = model.w as usize;
    let gamma = model.gamma;
    let nq = model.q_grid.len();
    // v[lambda * n_pairs + pair]
    let mut v = vec![0.0; n_pairs * (w + 1)];
    let mut next = vec![0.0; n_pairs * (w + 1)];
    let mut residuals = Vec::new();
    let mut iterations = 0u64;

    let dot = |row: &[f64], values: &[f64], lambda: usize| -> f64 {
        row.iter()
            .zip(values[lambda * n_pairs..(lambda + 1) * n_pairs].iter())
            .map(|(r, v)| r * v)
            .sum()
    };

    loop {
        iterations += 1;
        let mut residual = 0.0f64;
        for pair in 0..n_pairs {
            let row = &rows[pair];
            let p = model.p_grid[pair / nq];
            let q = model.q_grid[pair % nq];
            // free state
            let to_free = dot(row, &v, 0);
            let to_block = dot(row, &v, 1.min(w));
            let halt = gamma * to_free;
            let transmit = p + gamma * ((1.0 - q) * to_free + q * to_block);
            let value = transmit.max(halt);
            residual = residual.max((value - v[pair]).abs());
            next[pair] = value;
            // blocked states
            for lambda in 1..=w {
                let continuation = if lambda < w {
                    dot(row, &v, lambda + 1)
                } else {
                    dot(row, &v, 0)
                };
                let value = gamma * continuation;
                let idx = lambda * n_pairs + pair;
                residual = residual.max((value - v[idx]).abs());
                next[idx] = value;
            }
        }
        core::mem::swap(&mut v, &mut next);
        residuals.push(residual);
        if residual < opts.epsilon {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
    }

    let mut actions = vec![Action::Halt; n_pairs * (w + 1)];
    for pair in 0..n_pairs {
        let row = &rows[pair];
        let p = model.p_grid[pair / nq];
        let q = model.q_grid[pair % nq];
        let to_free = dot(row, &v, 0);
        let to_block = dot(row, &v, 1.min(w));
        let transmit = p + gamma * ((1.0 - q) * to_free + q * to_block);
        actions[pair] = greedy(transmit, gamma * to_free);
    }
    let residual = *residuals.last().unwrap();
    Ok(SolvedPolicy {
        values: v,
        actions,
        iterations,
        residual,
        residuals,
    })
}

/// Least-squares fit of the transmit/halt boundary of a converged
/// uncorrelated policy.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdFit {
    /// Slope of the through-origin line `q = slope * p` fitted to the
    /// per-column boundary midpoints.
    pub slope: f64,
    /// Fraction of adjacent state pairs violating action monotonicity
    /// (nondecreasing in `p`, nonincreasing in `q`). Zero for a policy with
    /// the theoretical threshold shape.
    pub monotonicity_violation_fraction: f64,
}

/// Recovers the threshold slope from a solved uncorrelated policy.
///
/// Columns whose actions are all-transmit or all-halt carry no boundary
/// information; if no column straddles the boundary the slope is undefined.
pub fn extract_threshold(policy: &SolvedPolicy, model: &MdpModel) -> Result<ThresholdFit> {
    if !model.is_uncorrelated() {
        return Err(Error::Domain(
            "threshold extraction requires the uncorrelated model",
        ));
    }
    let np = model.p_grid.len();
    let nq = model.q_grid.len();
    let action = |ip: usize, iq: usize| policy.actions[ip * nq + iq];

    let mut violations = 0u64;
    let mut pairs_checked = 0u64;
    for ip in 0..np {
        for iq in 0..nq {
            if iq + 1 < nq {
                pairs_checked += 1;
                if action(ip, iq) == Action::Halt && action(ip, iq + 1) == Action::Transmit {
                    violations += 1;
                }
            }
            if ip + 1 < np {
                pairs_checked += 1;
                if action(ip, iq) == Action::Transmit && action(ip + 1, iq) == Action::Halt {
                    violations += 1;
                }
            }
        }
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut straddling = 0usize;
    for ip in 0..np {
        let mut last_transmit: Option<usize> = None;
        let mut first_halt: Option<usize> = None;
        for iq in 0..nq {
            match action(ip, iq) {
                Action::Transmit => last_transmit = Some(iq),
                Action::Halt => {
                    if first_halt.is_none() {
                        first_halt = Some(iq);
                    }
                }
            }
        }
        if let (Some(t), Some(h)) = (last_transmit, first_halt) {
            straddling += 1;
            let boundary = 0.5 * (model.q_grid[t] + model.q_grid[h.max(t + 1).min(nq - 1)]);
            let p = model.p_grid[ip];
            num += p * boundary;
            den += p * p;
        }
    }
    if straddling == 0 || den == 0.0 {
        return Err(Error::UndefinedSlope);
    }
    Ok(ThresholdFit {
        slope: num / den,
        monotonicity_violation_fraction: violations as f64 / pairs_checked.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::{beta_const, k_uniform, optimal_action};

    fn uniform_model(n: usize, w: u32, gamma: f64) -> MdpModel {
        build_uncorrelated(
            midpoint_grid(n),
            midpoint_grid(n),
            uniform_marginal(n * n),
            w,
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn state_counts() {
        let m = uniform_model(4, 3, 0.9);
        assert_eq!(m.num_states(), 19);
        let m = uniform_model(1, 1, 0.9);
        assert_eq!(m.num_states(), 2);
        let rows = vec![vec![1.0]; 1];
        let c = build_correlated(vec![0.5], vec![0.5], rows, 3, 0.9).unwrap();
        assert_eq!(c.num_states(), 4);
    }

    #[test]
    fn state_indexing_round_trips() {
        let m = uniform_model(3, 4, 0.9);
        for idx in 0..m.num_states() {
            let s = m.state_at(idx);
            assert_eq!(m.state_index(&s).unwrap(), idx);
        }
        assert!(m.state_index(&MdpState::blocked(5)).is_err());
        assert!(m.state_index(&MdpState::free(3, 0)).is_err());
    }

    #[test]
    fn build_rejects_bad_inputs() {
        let err = build_uncorrelated(vec![0.5, 0.4], vec![0.5], vec![0.5, 0.5], 1, 0.9);
        assert!(err.is_err(), "non-increasing grid");
        let err = build_uncorrelated(vec![0.5], vec![0.5], vec![0.9], 1, 0.9);
        assert!(matches!(err, Err(Error::NotStochastic { .. })));
        let err = build_uncorrelated(vec![0.5], vec![0.5], vec![1.0], 0, 0.9);
        assert!(err.is_err(), "W = 0");
        let err = build_uncorrelated(vec![0.5], vec![0.5], vec![1.0], 1, 1.0);
        assert!(err.is_err(), "gamma = 1");
    }

    #[test]
    fn transitions_are_stochastic() {
        let m = uniform_model(4, 3, 0.95);
        let states = [
            MdpState::free(0, 0),
            MdpState::free(3, 2),
            MdpState::blocked(1),
            MdpState::blocked(3),
        ];
        for s in states {
            for a in [Action::Halt, Action::Transmit] {
                if a == Action::Transmit && !s.is_free() {
                    continue;
                }
                let row = m.transition_kernel(&s, a).unwrap();
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                assert!((sum - 1.0).abs() < 1e-12, "row sum {sum}");
            }
        }
    }

    #[test]
    fn transition_shapes() {
        let m = uniform_model(4, 3, 0.95);
        // last slot of the blockage returns to the free pairs
        let row = m
            .transition_kernel(&MdpState::blocked(3), Action::Halt)
            .unwrap();
        assert_eq!(row.len(), 16);
        assert!(row
            .iter()
            .all(|(s, p)| s.is_free() && (p - 1.0 / 16.0).abs() < 1e-15));
        // blocked mid-chain advances deterministically
        let row = m
            .transition_kernel(&MdpState::blocked(1), Action::Halt)
            .unwrap();
        assert_eq!(row, vec![(MdpState::blocked(2), 1.0)]);
        // transmit with q > 0 splits mass q onto lambda = 1
        let s = MdpState::free(0, 2); // q = 0.625 on the midpoint grid of 4
        let row = m.transition_kernel(&s, Action::Transmit).unwrap();
        let blocked_mass: f64 = row
            .iter()
            .filter(|(s, _)| !s.is_free())
            .map(|(_, p)| p)
            .sum();
        assert!((blocked_mass - 0.625).abs() < 1e-15);
        // transmit with q = 0 stays free with probability 1
        let m0 = build_uncorrelated(vec![0.5], vec![0.0], vec![1.0], 2, 0.9).unwrap();
        let row = m0
            .transition_kernel(&MdpState::free(0, 0), Action::Transmit)
            .unwrap();
        assert_eq!(row, vec![(MdpState::free(0, 0), 1.0)]);
        // transmit while blocked is illegal
        let err = m.transition_kernel(&MdpState::blocked(2), Action::Transmit);
        assert!(matches!(err, Err(Error::IllegalAction)));
    }

    #[test]
    fn certain_success_without_risk_earns_the_geometric_sum() {
        for w in [1u32, 4] {
            let gamma = 0.9;
            let m = build_uncorrelated(vec![1.0], vec![0.0], vec![1.0], w, gamma).unwrap();
            let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
            assert_eq!(solved.actions[0], Action::Transmit);
            assert!(
                (solved.values[0] - 1.0 / (1.0 - gamma)).abs() < 1e-6,
                "value {}",
                solved.values[0]
            );
        }
    }

    #[test]
    fn zero_reward_ties_resolve_to_halt() {
        let m = build_uncorrelated(vec![0.0], vec![0.5], vec![1.0], 2, 0.9).unwrap();
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        assert_eq!(solved.actions[0], Action::Halt);
        assert!(solved.values[0].abs() < 1e-12);
    }

    #[test]
    fn blocked_chain_is_geometric() {
        let m = uniform_model(8, 5, 0.97);
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        let val = |s: MdpState| solved.values[m.state_index(&s).unwrap()];
        for lambda in 1..5 {
            let here = val(MdpState::blocked(lambda));
            let next = val(MdpState::blocked(lambda + 1));
            assert!(
                (here - m.gamma() * next).abs() < 1e-8,
                "lambda {lambda}: {here} vs gamma * {next}"
            );
        }
    }

    #[test]
    fn converged_values_satisfy_the_fixed_point() {
        let m = uniform_model(16, 3, 0.98);
        let opts = ValueIterationOptions::default();
        let solved = value_iteration(&m, &opts).unwrap();
        // one more backup moves nothing by more than epsilon
        let marginal = uniform_marginal(256);
        let mean: f64 = marginal
            .iter()
            .zip(solved.values[..256].iter())
            .map(|(w, v)| w * v)
            .sum();
        let v_block1 = solved.values[256];
        for pair in 0..256 {
            let p = m.p_grid()[pair / 16];
            let q = m.q_grid()[pair % 16];
            let halt = m.gamma() * mean;
            let transmit = p + m.gamma() * ((1.0 - q) * mean + q * v_block1);
            let backup = transmit.max(halt);
            assert!(
                (backup - solved.values[pair]).abs() < opts.epsilon,
                "pair {pair}"
            );
        }
    }

    #[test]
    fn residuals_contract_geometrically() {
        let m = uniform_model(8, 3, 0.95);
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        // the ratio sits exactly at gamma here; residuals are differences of
        // order-C values, so allow a few ulps of the value scale
        let v_max = solved.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let slack = 64.0 * f64::EPSILON * v_max;
        for pair in solved.residuals.windows(2) {
            assert!(
                pair[1] <= m.gamma() * pair[0] + slack,
                "residual grew: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let m = uniform_model(4, 2, 0.99);
        let err = value_iteration(
            &m,
            &ValueIterationOptions {
                epsilon: 1e-12,
                max_iterations: 5,
            },
        );
        assert!(matches!(
            err,
            Err(Error::NoConvergence { iterations: 5, .. })
        ));
    }

    #[test]
    fn policy_monotonicity_on_the_grid() {
        let m = uniform_model(32, 4, 0.99);
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        let fit = extract_threshold(&solved, &m).unwrap();
        assert_eq!(fit.monotonicity_violation_fraction, 0.0);
    }

    #[test]
    fn policy_matches_the_analytic_threshold() {
        let gamma = 0.99;
        let w = 3;
        let n = 64;
        let m = uniform_model(n, w, gamma);
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        let k = k_uniform(beta_const(gamma, w).unwrap()).unwrap();

        let mut agree = 0usize;
        for ip in 0..n {
            for iq in 0..n {
                let got = solved.actions[ip * n + iq];
                let want = optimal_action(m.p_grid()[ip], m.q_grid()[iq], k);
                if got == want {
                    agree += 1;
                }
            }
        }
        let fraction = agree as f64 / (n * n) as f64;
        assert!(fraction >= 0.99, "agreement {fraction}");

        let fit = extract_threshold(&solved, &m).unwrap();
        assert!(
            (fit.slope - k).abs() <= 1.0 / n as f64,
            "slope {} vs analytic {k}",
            fit.slope
        );
    }

    #[test]
    fn threshold_is_undefined_for_saturated_policies() {
        // single state, always transmit
        let m = build_uncorrelated(vec![1.0], vec![0.0], vec![1.0], 1, 0.9).unwrap();
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        assert!(matches!(
            extract_threshold(&solved, &m),
            Err(Error::UndefinedSlope)
        ));
        // single state, always halt
        let m = build_uncorrelated(vec![0.0], vec![0.5], vec![1.0], 1, 0.9).unwrap();
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        assert!(matches!(
            extract_threshold(&solved, &m),
            Err(Error::UndefinedSlope)
        ));
    }

    // A sticky correlated kernel: the pair tends to stay where it is. The
    // full-triplet solver must converge, keep the deterministic blockage
    // chain per pair, and respect the threshold shape within each row.
    #[test]
    fn correlated_kernel_with_persistence() {
        let n = 3;
        let n_pairs = n * n;
        let gamma = 0.95;
        let w = 2;
        // 70% stay, 30% uniform fresh draw
        let rows: Vec<Vec<f64>> = (0..n_pairs)
            .map(|pair| {
                (0..n_pairs)
                    .map(|next| {
                        let fresh = 0.3 / n_pairs as f64;
                        if next == pair {
                            0.7 + fresh
                        } else {
                            fresh
                        }
                    })
                    .collect()
            })
            .collect();
        let m = build_correlated(midpoint_grid(n), midpoint_grid(n), rows.clone(), w, gamma)
            .unwrap();
        assert_eq!(m.num_states(), n_pairs * (w as usize + 1));
        let solved = value_iteration(&m, &ValueIterationOptions::default()).unwrap();
        let val = |lambda: u32, pair: usize| solved.values[lambda as usize * n_pairs + pair];
        // blocked chain: V[lambda = i, pair] = gamma * E_row[V[lambda = i + 1, .]]
        for pair in 0..n_pairs {
            let expect_next: f64 = rows[pair]
                .iter()
                .enumerate()
                .map(|(j, r)| r * val(2, j))
                .sum();
            assert!(
                (val(1, pair) - gamma * expect_next).abs() < 1e-7,
                "chain identity broke at pair {pair}"
            );
        }
        // persistence makes a high-(p, q) state worth more than under the
        // memoryless kernel with the same stationary marginal
        let best_pair = (n - 1) * n; // highest p, lowest q
        let unc = build_uncorrelated(
            midpoint_grid(n),
            midpoint_grid(n),
            uniform_marginal(n_pairs),
            w,
            gamma,
        )
        .unwrap();
        let s_unc = value_iteration(&unc, &ValueIterationOptions::default()).unwrap();
        assert!(
            val(0, best_pair) > s_unc.values[best_pair],
            "sticky good state should beat the memoryless value"
        );
        // transmit set is still monotone within the free layer
        let action = |ip: usize, iq: usize| solved.actions[ip * n + iq];
        for ip in 0..n {
            for iq in 0..n.saturating_sub(1) {
                assert!(
                    !(action(ip, iq) == Action::Halt && action(ip, iq + 1) == Action::Transmit),
                    "action must be nonincreasing in q"
                );
            }
        }
    }

    // A correlated kernel whose rows are all the same marginal must agree
    // with the uncorrelated model.
    #[test]
    fn correlated_with_identical_rows_matches_uncorrelated() {
        let n = 4;
        let w = 3;
        let gamma = 0.95;
        let marginal = uniform_marginal(n * n);
        let unc = uniform_model(n, w, gamma);
        let cor = build_correlated(
            midpoint_grid(n),
            midpoint_grid(n),
            vec![marginal.clone(); n * n],
            w,
            gamma,
        )
        .unwrap();
        let s_unc = value_iteration(&unc, &ValueIterationOptions::default()).unwrap();
        let s_cor = value_iteration(&cor, &ValueIterationOptions::default()).unwrap();
        for pair in 0..n * n {
            assert!((s_unc.values[pair] - s_cor.values[pair]).abs() < 1e-7);
            assert_eq!(s_unc.actions[pair], s_cor.actions[pair]);
        }
        // blocked values coincide across pairs and match the uncorrelated chain
        for lambda in 1..=w as usize {
            let unc_val = s_unc.values[n * n + lambda - 1];
            for pair in 0..n * n {
                let cor_val = s_cor.values[lambda * n * n + pair];
                assert!((unc_val - cor_val).abs() < 1e-7);
            }
        }
    }
}
