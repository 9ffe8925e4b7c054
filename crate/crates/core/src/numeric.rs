//! Quadrature and monotone root finding shared by the policy solvers.

use crate::error::{Error, Result};

/// 8-point Gauss-Legendre nodes on [-1, 1] (positive half; nodes are symmetric).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Integrates `f` over `[a, b]` by composite 8-point Gauss-Legendre.
///
/// Panels are graded cubically toward `a`, which restores full accuracy for
/// integrands with a power-law kink at the left endpoint (the CDFs handled
/// here behave like `x^r` with possibly `r < 1` near zero).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a || panels == 0 {
        return 0.0;
    }
    let span = b - a;
    let mut total = 0.0;
    // substitution x = a + span * u^3, dx = 3 * span * u^2 du, u in [0, 1]
    let g = |u: f64| {
        let x = a + span * u * u * u;
        3.0 * span * u * u * f(x)
    };
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for i in 0..4 {
            let dx = half * GL8_NODES[i];
            total += half * GL8_WEIGHTS[i] * (g(mid - dx) + g(mid + dx));
        }
    }
    total
}

/// Options for [`invert_increasing`].
#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    /// Initial bracket; expanded geometrically if it does not straddle the target.
    pub lo: f64,
    pub hi: f64,
    /// Absolute width at which bisection stops.
    pub x_tolerance: f64,
    /// Hard bounds for bracket expansion.
    pub lo_floor: f64,
    pub hi_cap: f64,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions {
            lo: 1e-6,
            hi: 1e6,
            x_tolerance: 1e-13,
            lo_floor: 1e-18,
            hi_cap: 1e12,
        }
    }
}

/// Finds `x` with `f(x) = target` for a nondecreasing `f` by bracketing
/// bisection. The initial bracket is expanded geometrically on either side
/// until it straddles the target; if the cap is reached the target is
/// unattainable.
pub fn invert_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    opts: &BisectOptions,
) -> Result<f64> {
    let mut lo = opts.lo;
    let mut hi = opts.hi;
    while f(hi) < target {
        if hi >= opts.hi_cap {
            return Err(Error::NoSolution("target above the attainable range"));
        }
        lo = hi;
        hi = (hi * 8.0).min(opts.hi_cap);
    }
    while f(lo) > target {
        if lo <= opts.lo_floor {
            return Err(Error::NoSolution("target below the attainable range"));
        }
        hi = lo;
        lo = (lo / 8.0).max(opts.lo_floor);
    }
    while hi - lo > opts.x_tolerance * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable in f64
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // GL-8 is exact to degree 15 per panel; the cubic grading maps
        // x^2 to a degree-8 polynomial in u.
        let got = integrate(|x| x * x, 0.0, 1.0, 4);
        assert!((got - 1.0 / 3.0).abs() < 1e-14, "got {got}");
    }

    #[test]
    fn integrates_left_endpoint_power_law() {
        // x^0.1 on [0,1] = 1/1.1; hard for uniform panels, easy once graded.
        let got = integrate(|x| libm::pow(x, 0.1), 0.0, 1.0, 256);
        assert!((got - 1.0 / 1.1).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn integrates_exponential() {
        let got = integrate(|x| libm::exp(-x), 0.0, 5.0, 64);
        let want = 1.0 - libm::exp(-5.0);
        assert!((got - want).abs() < 1e-13, "got {got}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|_| 1.0, 2.0, 2.0, 16), 0.0);
        assert_eq!(integrate(|_| 1.0, 3.0, 2.0, 16), 0.0);
    }

    #[test]
    fn inverts_monotone_map() {
        let f = |x: f64| x * x * x;
        let root = invert_increasing(f, 27.0, &BisectOptions::default()).unwrap();
        assert!((root - 3.0).abs() < 1e-9, "got {root}");
    }

    #[test]
    fn expands_bracket_both_ways() {
        let f = |x: f64| x;
        let big = invert_increasing(f, 3e7, &BisectOptions::default()).unwrap();
        assert!((big - 3e7).abs() / 3e7 < 1e-9);
        // near zero the stop rule is the absolute width, so only ask for
        // absolute accuracy there
        let tiny = invert_increasing(f, 3e-9, &BisectOptions::default()).unwrap();
        assert!((tiny - 3e-9).abs() < 1e-12);
    }

    #[test]
    fn unattainable_target_is_signalled() {
        let f = |x: f64| 1.0 - libm::exp(-x); // sup = 1
        let err = invert_increasing(f, 2.0, &BisectOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)));
    }
}
