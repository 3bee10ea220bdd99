//! Bessel functions `J_m`, zeros of `J_1`, and the radial modes of the
//! weighted eigenvalue problem on gauge balls.
//!
//! The model problem `−Δ_H u = μ·ψ·u` on a gauge ball `B(0, R)` with radial
//! data reduces, through `u(η) = f(ρ(η))`, to the singular ODE
//! `f'' + (3/r)f' + μf = 0` with `f(R) = 0`. The substitution `f = g/r`,
//! `l = √μ·r` turns it into Bessel's equation of order one, so the modes are
//! `f_{1j}(r) = J_1(l_{1j}·r/R)/r` with eigenvalues `μ_{1j} = l_{1j}²/R²`,
//! where `l_{1j}` is the j-th positive zero of `J_1`.
//!
//! `J_m` is evaluated by the ascending power series up to
//! [`SERIES_SWITCH`] and by normalized downward (Miller) recurrence beyond it;
//! the recurrence is backward-stable where the series starts losing digits to
//! cancellation, and the crate never needs arguments beyond `x ≈ 40`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Argument where evaluation switches from the power series to downward
/// recurrence.
pub const SERIES_SWITCH: f64 = 12.0;

/// Relative tail bound at which the ascending series is truncated.
const SERIES_EPS: f64 = 1e-18;

/// Newton refinement is declared failed beyond this many steps (it converges
/// in a handful from a sign-change bracket).
const MAX_NEWTON_ITERATIONS: u32 = 30;

/// Below `r < SMALL_R_FRACTION·R` the radial mode uses its two-term series
/// instead of the `J_1(z)/r` quotient of two vanishing quantities.
pub const SMALL_R_FRACTION: f64 = 1e-4;

/// `J_0(x)`, extended to negative arguments by evenness.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_SWITCH {
        series_jm(0, x)
    } else {
        miller_j01(x).0
    }
}

/// `J_1(x)`, extended to negative arguments by oddness.
pub fn bessel_j1(x: f64) -> f64 {
    let (sign, x) = if x < 0.0 { (-1.0, -x) } else { (1.0, x) };
    sign * if x <= SERIES_SWITCH {
        series_jm(1, x)
    } else {
        miller_j01(x).1
    }
}

/// `J_m(x)` for integer order `m ≥ 0` and `x ≥ 0`.
///
/// Orders 0 and 1 are the only ones exercised by the rest of the crate; higher
/// orders share the same two evaluation branches.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bessel_j requires x >= 0, got {x}"
        )));
    }
    if order > 60 {
        return Err(Error::InvalidParameter(format!(
            "bessel_j supports orders up to 60, got {order}"
        )));
    }
    Ok(match order {
        0 => bessel_j0(x),
        1 => bessel_j1(x),
        m => {
            if x <= SERIES_SWITCH {
                series_jm(m, x)
            } else {
                miller_jm(m, x)
            }
        }
    })
}

/// Ascending power series `(x/2)^m Σ_k (−1)^k/(k!(m+k)!)·(x/2)^{2k}`.
///
/// Terms are generated by the recurrence `t_{k} = −t_{k-1}·(x/2)²/(k(k+m))`,
/// stopping once the tail is below [`SERIES_EPS`] relative to the sum. At the
/// switch point the largest term is ~4·10³, so the accumulated roundoff stays
/// near 10⁻¹² absolute.
fn series_jm(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = 1.0;
    for k in 1..=m as u64 {
        term *= half / k as f64;
    }
    let mut sum = term;
    for k in 1..200u64 {
        term *= -q / (k as f64 * (k + m as u64) as f64);
        sum += term;
        if term.abs() <= SERIES_EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Downward (Miller) recurrence returning `(J_0(x), J_1(x))` for `x > 0`.
///
/// Starts well above the turning point with an arbitrary tiny seed, recurses
/// `J_{k-1} = (2k/x)J_k − J_{k+1}`, and normalizes with the Neumann identity
/// `J_0 + 2J_2 + 2J_4 + … = 1`. Rescales on the fly to avoid overflow.
fn miller_j01(x: f64) -> (f64, f64) {
    let start = miller_start_order(0, x);
    let mut jp = 0.0_f64; // J_{k+1}
    let mut j = 1e-30_f64; // J_k
    let mut norm = 0.0_f64;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    let mut k = start;
    while k > 0 {
        let jm = (2.0 * k as f64 / x) * j - jp; // J_{k-1}
        jp = j;
        j = jm;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 1 {
            j1 = j;
        }
        if k - 1 == 0 {
            j0 = j;
        }
        if j.abs() > 1e250 {
            let scale = 1e-250;
            j *= scale;
            jp *= scale;
            norm *= scale;
            j0 *= scale;
            j1 *= scale;
        }
        k -= 1;
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

/// Miller recurrence for a general order `m` at `x > 0`.
fn miller_jm(m: u32, x: f64) -> f64 {
    let start = miller_start_order(m, x);
    let mut jp = 0.0_f64;
    let mut j = 1e-30_f64;
    let mut norm = 0.0_f64;
    let mut jm_target = 0.0;
    let mut j_prev_for_even = 0.0;
    let mut k = start;
    while k > 0 {
        let jm = (2.0 * k as f64 / x) * j - jp;
        jp = j;
        j = jm;
        if k - 1 == m {
            jm_target = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 0 {
            j_prev_for_even = j;
        }
        if j.abs() > 1e250 {
            let scale = 1e-250;
            j *= scale;
            jp *= scale;
            norm *= scale;
            jm_target *= scale;
        }
        k -= 1;
    }
    norm += j_prev_for_even;
    jm_target / norm
}

/// Start order for downward recurrence: comfortably above both the argument
/// and the requested order so the seed has decayed to noise by arrival.
fn miller_start_order(m: u32, x: f64) -> u32 {
    let base = x.ceil() as u32;
    let start = base.max(m) + 42;
    start + (start % 2)
}

/// A located zero of a Bessel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselZero {
    /// Order of the Bessel function (always 1 here).
    pub order: u32,
    /// One-based index of the zero along the positive axis.
    pub index: u32,
    /// The zero itself.
    pub value: f64,
    /// Newton steps spent refining the bracketed root.
    pub newton_iterations: u32,
}

/// The j-th positive zero `l_{1j}` of `J_1`, by sign-change bracketing around
/// the McMahon estimate followed by safeguarded Newton refinement.
///
/// `J_1'(x) = J_0(x) − J_1(x)/x` supplies the Newton derivative. Consecutive
/// zeros approach spacing π from above, so a ±1.3 scan window around the
/// estimate `(j + 1/4)π` always contains exactly one sign change.
pub fn bessel_j1_zero(index: u32) -> Result<BesselZero> {
    if index == 0 {
        return Err(Error::InvalidParameter(
            "zero index is one-based; got 0".into(),
        ));
    }
    let guess = (index as f64 + 0.25) * std::f64::consts::PI;
    let (mut lo, mut hi) = bracket_j1_zero(guess).ok_or(Error::BracketFailure {
        order: 1,
        index,
        guess,
    })?;
    let mut f_lo = bessel_j1(lo);
    let mut x = 0.5 * (lo + hi);
    let mut iterations = 0;
    loop {
        let f = bessel_j1(x);
        if f == 0.0 {
            break;
        }
        // Maintain the bracket for the bisection safeguard.
        if (f > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
        }
        let df = bessel_j0(x) - f / x;
        let mut next = x - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        iterations += 1;
        if (next - x).abs() <= 1e-15 * x {
            x = next;
            break;
        }
        x = next;
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::SolverDidNotConverge {
                iterations: iterations as usize,
                residual: f.abs(),
            });
        }
    }
    Ok(BesselZero {
        order: 1,
        index,
        value: x,
        newton_iterations: iterations,
    })
}

/// Scans ±1.3 around the McMahon estimate for a sign change of `J_1`.
fn bracket_j1_zero(guess: f64) -> Option<(f64, f64)> {
    let lo_limit = (guess - 1.3).max(0.5);
    let steps = 26;
    let dx = (guess + 1.3 - lo_limit) / steps as f64;
    let mut a = lo_limit;
    let mut fa = bessel_j1(a);
    for i in 1..=steps {
        let b = lo_limit + i as f64 * dx;
        let fb = bessel_j1(b);
        if fa == 0.0 {
            return Some((a - 0.5 * dx, a + 0.5 * dx));
        }
        if (fa > 0.0) != (fb > 0.0) {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}

/// First positive zero of `J_1`, cached: the constant every eigenvalue bound
/// is built from.
pub fn first_j1_zero() -> f64 {
    static L11: OnceLock<f64> = OnceLock::new();
    *L11.get_or_init(|| {
        bessel_j1_zero(1)
            .expect("first J_1 zero is bracketable")
            .value
    })
}

/// A radial eigenmode of the ψ-weighted problem on a gauge ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMode {
    /// One-based mode index.
    pub index: u32,
    /// Ball radius the mode lives on.
    pub radius: f64,
    /// The Bessel zero `l_{1j}` generating the mode.
    pub zero: f64,
    /// Eigenvalue `μ_{1j} = l_{1j}²/R²`.
    pub eigenvalue: f64,
}

/// Eigenvalue and generating zero of the j-th radial mode on `B(0, R)`.
pub fn radial_mode(radius: f64, index: u32) -> Result<RadialMode> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let zero = bessel_j1_zero(index)?.value;
    Ok(RadialMode {
        index,
        radius,
        zero,
        eigenvalue: zero * zero / (radius * radius),
    })
}

/// Radial eigenfunction `f_{1j}(r) = J_1(l_{1j}·r/R)/r` on `0 ≤ r ≤ R`.
///
/// Near the origin the quotient of two vanishing quantities is replaced by the
/// two-term series `f ≈ (l/(2R))·(1 − (l·r/R)²/8)`, continuous with the limit
/// `f(0) = l_{1j}/(2R)`. `f` is strictly decreasing on `[0, R]` and vanishes
/// at `R` by construction.
pub fn radial_eigenfunction(r: f64, radius: f64, index: u32) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if !(0.0..=radius * (1.0 + 1e-12)).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "radial coordinate {r} outside [0, {radius}]"
        )));
    }
    let l = bessel_j1_zero(index)?.value;
    if r < SMALL_R_FRACTION * radius {
        let z = l * r / radius;
        Ok(l / (2.0 * radius) * (1.0 - z * z / 8.0))
    } else {
        Ok(bessel_j1(l * r / radius) / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: `J_m(x) = (1/π)∫₀^π cos(mθ − x·sinθ) dθ` by the
    /// trapezoidal rule, which is spectrally accurate for smooth periodic
    /// integrands.
    fn j_integral_oracle(m: u32, x: f64) -> f64 {
        let n = 4096usize;
        let step = std::f64::consts::PI / n as f64;
        let f = |theta: f64| (m as f64 * theta - x * theta.sin()).cos();
        let mut sum = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for k in 1..n {
            sum += f(k as f64 * step);
        }
        sum * step / std::f64::consts::PI
    }

    #[test]
    fn both_branches_match_the_integral_representation() {
        for &x in &[0.5, 3.0, 8.0, 11.9, 12.1, 16.0, 20.0, 33.0, 40.0] {
            let want0 = j_integral_oracle(0, x);
            let want1 = j_integral_oracle(1, x);
            let got0 = bessel_j0(x);
            let got1 = bessel_j1(x);
            assert!(
                (got0 - want0).abs() < 1e-11,
                "J0 mismatch at {x}: {got0} vs {want0}"
            );
            assert!(
                (got1 - want1).abs() < 1e-11,
                "J1 mismatch at {x}: {got1} vs {want1}"
            );
        }
    }

    #[test]
    fn branches_agree_at_the_switch_point() {
        for &x in &[11.5, 12.0, 12.5] {
            let s0 = series_jm(0, x);
            let s1 = series_jm(1, x);
            let (m0, m1) = miller_j01(x);
            assert!((s0 - m0).abs() < 5e-11, "J0 mismatch at {x}: {s0} vs {m0}");
            assert!((s1 - m1).abs() < 5e-11, "J1 mismatch at {x}: {s1} vs {m1}");
        }
    }

    #[test]
    fn reference_values_at_small_arguments() {
        // Classical table values.
        assert_relative_eq!(bessel_j0(1.0), 0.7651976865579666, max_relative = 1e-13);
        assert_relative_eq!(bessel_j1(1.0), 0.4400505857449335, max_relative = 1e-13);
        assert_relative_eq!(bessel_j0(5.0), -0.17759677131433830, max_relative = 1e-12);
        assert_relative_eq!(bessel_j1(5.0), -0.32757913759146525, max_relative = 1e-12);
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
    }

    #[test]
    fn parity_extensions() {
        assert_relative_eq!(bessel_j0(-3.2), bessel_j0(3.2));
        assert_relative_eq!(bessel_j1(-3.2), -bessel_j1(3.2));
    }

    #[test]
    fn general_order_matches_recurrence_identity() {
        // J_{m-1}(x) + J_{m+1}(x) = (2m/x) J_m(x), sampled on both branches.
        for &x in &[0.7, 4.0, 9.0, 15.0, 27.0] {
            for m in 1..6u32 {
                let a = bessel_j(m - 1, x).unwrap();
                let b = bessel_j(m + 1, x).unwrap();
                let c = bessel_j(m, x).unwrap();
                assert!(
                    (a + b - 2.0 * m as f64 / x * c).abs() < 1e-11,
                    "three-term identity fails at m={m}, x={x}"
                );
            }
        }
    }

    #[test]
    fn bessel_j_rejects_bad_inputs() {
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(61, 1.0).is_err());
    }

    #[test]
    fn first_zero_is_cached_and_newton_is_quick() {
        let z = bessel_j1_zero(1).unwrap();
        assert!(z.newton_iterations <= MAX_NEWTON_ITERATIONS);
        assert_eq!(z.order, 1);
        assert_eq!(z.index, 1);
        assert_eq!(first_j1_zero(), z.value);
        assert!(bessel_j1(z.value).abs() < 1e-12);
    }

    #[test]
    fn zero_index_is_one_based() {
        assert!(bessel_j1_zero(0).is_err());
    }

    #[test]
    fn radial_mode_scaling() {
        let m1 = radial_mode(1.0, 1).unwrap();
        let m2 = radial_mode(2.0, 1).unwrap();
        // μ scales like 1/R².
        assert_relative_eq!(m1.eigenvalue, 4.0 * m2.eigenvalue, max_relative = 1e-14);
        assert_eq!(m1.zero, m2.zero);
        assert!(radial_mode(-1.0, 1).is_err());
    }

    #[test]
    fn radial_eigenfunction_small_r_branch_is_continuous() {
        let radius = 1.0;
        let r_switch = SMALL_R_FRACTION * radius;
        let below = radial_eigenfunction(r_switch * (1.0 - 1e-9), radius, 1).unwrap();
        let above = radial_eigenfunction(r_switch * (1.0 + 1e-9), radius, 1).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-9);
        // Limit value at the origin is l/(2R).
        let at_zero = radial_eigenfunction(0.0, radius, 1).unwrap();
        assert_relative_eq!(at_zero, first_j1_zero() / 2.0, max_relative = 1e-14);
        // Vanishes at the boundary.
        let at_r = radial_eigenfunction(radius, radius, 1).unwrap();
        assert!(at_r.abs() < 1e-12);
        // Strictly decreasing on a sample ladder.
        let mut prev = at_zero;
        for i in 1..=20 {
            let v = radial_eigenfunction(i as f64 / 20.0, radius, 1).unwrap();
            assert!(v < prev, "radial mode not decreasing at step {i}");
            prev = v;
        }
    }

    #[test]
    fn radial_eigenfunction_rejects_out_of_range() {
        assert!(radial_eigenfunction(1.5, 1.0, 1).is_err());
        assert!(radial_eigenfunction(-0.1, 1.0, 1).is_err());
        assert!(radial_eigenfunction(0.5, 0.0, 1).is_err());
    }
}
