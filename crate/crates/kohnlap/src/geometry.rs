//! Group operations and gauge geometry of the first Heisenberg group.
//!
//! Points are `(x, y, t) ∈ R³` with the group law
//! `a ∘ b = (a.x + b.x, a.y + b.y, a.t + b.t + 2(b.x·a.y − a.x·b.y))`,
//! identity `(0,0,0)` and inverse `(−x, −y, −t)`. The dilations
//! `δ_λ(x, y, t) = (λx, λy, λ²t)` are group automorphisms, and the homogeneous
//! gauge `ρ(x, y, t) = ((x² + y²)² + t²)^{1/4}` satisfies `ρ(δ_λ p) = λ·ρ(p)`.
//! The gauge distance `d(a, b) = ρ(a⁻¹ ∘ b)` is left-invariant and symmetric.
//!
//! The fundamental solution of the sub-Laplacian `Δ_H = X² + Y²` with pole `ξ`
//! is `Γ_ξ(η) = 1/(8π·d(ξ, η)²)`, and the horizontal weight
//! `ψ = (x² + y²)/ρ² = |∇_H ρ|²` measures how far the gauge sphere's normal is
//! from the vertical direction. Closed forms for gauge-ball integrals
//! (`|B(0,R)| = π²R⁴/2`, `∫_B ψ = πR⁴`) calibrate every quadrature downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization of the fundamental solution: `Γ = GAMMA_SCALE / ρ²`.
pub const GAMMA_SCALE: f64 = 1.0 / (8.0 * std::f64::consts::PI);

/// A point of the Heisenberg group (equivalently, of `R³`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point3 {
    /// Builds a point from coordinates.
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    /// The group identity `(0, 0, 0)`.
    pub const fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Group product `self ∘ other`.
    ///
    /// The vertical coordinate picks up twice the signed area term
    /// `b.x·a.y − a.x·b.y`, which is what makes the product non-commutative:
    /// `(1,0,0) ∘ (0,1,0) = (1, 1, −2)` while `(0,1,0) ∘ (1,0,0) = (1, 1, 2)`.
    pub fn compose(self, other: Point3) -> Point3 {
        Point3::new(
            self.x + other.x,
            self.y + other.y,
            self.t + other.t + 2.0 * (other.x * self.y - self.x * other.y),
        )
    }

    /// Group inverse `(−x, −y, −t)`.
    pub fn inverse(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.t)
    }

    /// Anisotropic dilation `δ_λ(x, y, t) = (λx, λy, λ²t)` for `λ > 0`.
    pub fn dilate(self, lambda: f64) -> Result<Point3> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {lambda}"
            )));
        }
        Ok(Point3::new(
            lambda * self.x,
            lambda * self.y,
            lambda * lambda * self.t,
        ))
    }

    /// Homogeneous gauge `ρ = ((x² + y²)² + t²)^{1/4}`.
    pub fn gauge_norm(self) -> f64 {
        let s = self.x * self.x + self.y * self.y;
        (s * s + self.t * self.t).powf(0.25)
    }

    /// Square of the gauge, `ρ² = ((x² + y²)² + t²)^{1/2}`, computed without
    /// the fourth root.
    pub fn gauge_norm_squared(self) -> f64 {
        let s = self.x * self.x + self.y * self.y;
        (s * s + self.t * self.t).sqrt()
    }

    /// Left-invariant gauge distance `d(self, other) = ρ(self⁻¹ ∘ other)`.
    ///
    /// Symmetry follows from `ρ(p⁻¹) = ρ(p)` together with
    /// `(a⁻¹ ∘ b)⁻¹ = b⁻¹ ∘ a`.
    pub fn gauge_distance(self, other: Point3) -> f64 {
        self.inverse().compose(other).gauge_norm()
    }

    /// Coordinate gradient of the gauge `ρ` at `self`, which must not be the
    /// origin: `∇ρ = (s·x, s·y, t/2)/ρ³` with `s = x² + y²`.
    pub fn gauge_norm_gradient(self) -> Result<[f64; 3]> {
        let rho = self.gauge_norm();
        if rho == 0.0 {
            return Err(Error::PoleEvaluation);
        }
        let s = self.x * self.x + self.y * self.y;
        let rho3 = rho * rho * rho;
        Ok([
            s * self.x / rho3,
            s * self.y / rho3,
            0.5 * self.t / rho3,
        ])
    }
}

/// Fundamental solution `Γ_ξ(η) = 1/(8π·d(ξ, η)²)` of the sub-Laplacian.
///
/// Satisfies the dilation law `Γ_0(δ_λ p) = λ⁻²·Γ_0(p)`. Evaluation at the
/// pole (`η = ξ`) is an error rather than an infinity.
pub fn fundamental_solution(pole: Point3, p: Point3) -> Result<f64> {
    let d2 = pole.inverse().compose(p).gauge_norm_squared();
    if d2 == 0.0 {
        return Err(Error::PoleEvaluation);
    }
    Ok(GAMMA_SCALE / d2)
}

/// Coordinate gradient of `Γ_ξ` with respect to the field point `η`.
///
/// With `w = ξ⁻¹ ∘ η` the translated coordinates are
/// `w.t = η.t − ξ.t − 2ξ.y·η.x + 2ξ.x·η.y`, so the chain rule gives
/// `∂_x = ∂_{w.x} − 2ξ.y·∂_{w.t}`, `∂_y = ∂_{w.y} + 2ξ.x·∂_{w.t}`,
/// `∂_t = ∂_{w.t}` (left translations are affine with unit Jacobian).
pub fn fundamental_solution_gradient(pole: Point3, p: Point3) -> Result<[f64; 3]> {
    let w = pole.inverse().compose(p);
    let rho = w.gauge_norm();
    if rho == 0.0 {
        return Err(Error::PoleEvaluation);
    }
    let g = w.gauge_norm_gradient()?;
    // dΓ/dρ = −2·GAMMA_SCALE/ρ³.
    let scale = -2.0 * GAMMA_SCALE / (rho * rho * rho);
    Ok([
        scale * (g[0] - 2.0 * pole.y * g[2]),
        scale * (g[1] + 2.0 * pole.x * g[2]),
        scale * g[2],
    ])
}

/// Horizontal weight `ψ(η) = (x² + y²)/ρ²(η) ∈ [0, 1]`.
///
/// Equals `|∇_H ρ|²`, vanishes exactly on the t-axis, and equals 1 on the
/// plane `t = 0` (away from the origin). At the origin `ψ` has no limit along
/// different approach directions; this implementation takes `ψ(0) = 0`, the
/// t-axis continuation, so that the weight stays defined on whole grids.
pub fn horizontal_weight(p: Point3) -> f64 {
    let s = p.x * p.x + p.y * p.y;
    let rho2 = (s * s + p.t * p.t).sqrt();
    if rho2 == 0.0 {
        0.0
    } else {
        s / rho2
    }
}

/// Volume of the gauge ball `B(0, R)`: `|B(0, R)| = π²R⁴/2`.
///
/// Derived from the gauge polar coordinates
/// `(x, y, t) = (r√sinθ·cosφ, r√sinθ·sinφ, r²cosθ)` whose Jacobian is `r³`.
pub fn ball_volume(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let r2 = radius * radius;
    Ok(0.5 * std::f64::consts::PI * std::f64::consts::PI * r2 * r2)
}

/// Integral of the horizontal weight over a gauge ball: `∫_{B(0,R)} ψ = πR⁴`.
///
/// In the polar coordinates of [`ball_volume`] the weight is exactly `sinθ`,
/// so `∫ ψ = ∫ sinθ·r³ dr dθ dφ = 2π·2·R⁴/4 = πR⁴`. The ratio to the ball
/// volume is the universal constant `2/π`.
pub fn psi_ball_integral(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let r2 = radius * radius;
    Ok(std::f64::consts::PI * r2 * r2)
}
