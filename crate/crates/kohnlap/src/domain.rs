//! Implicit-function descriptions of the bounded open sets the solvers run on.
//!
//! A [`Domain`] pairs a continuous membership function (negative inside, zero
//! on the boundary, positive outside) with a bounding box containing the
//! region. All grid construction, boundary sampling, and surface extraction
//! work through this interface, so a new shape only needs a membership
//! function and a box.
//!
//! Built-in kinds: gauge balls `{ρ(c⁻¹∘p) < R}`, Euclidean balls, axis-aligned
//! boxes, slabs `{0 < t < T, |x| < L, |y| < L}` (bounded stand-ins for the
//! half space `{t > 0}`), the rotationally symmetric bubble set, and level
//! sets of externally supplied scalar fields (used for the sublevel domains of
//! Green's functions).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Axis-aligned box `[min.0, max.0] × [min.1, max.1] × [min.2, max.2]` in
/// `(x, y, t)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if !(min[axis] < max[axis]) {
                return Err(Error::InvalidParameter(format!(
                    "bounding box is empty on axis {axis}: [{}, {}]",
                    min[axis], max[axis]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: Point3) -> bool {
        let c = [p.x, p.y, p.t];
        (0..3).all(|a| self.min[a] <= c[a] && c[a] <= self.max[a])
    }

    /// Box grown by `fraction` of its largest edge on every side.
    pub fn padded(&self, fraction: f64) -> Self {
        let longest = (0..3)
            .map(|a| self.max[a] - self.min[a])
            .fold(0.0_f64, f64::max);
        let pad = fraction * longest;
        Self {
            min: [self.min[0] - pad, self.min[1] - pad, self.min[2] - pad],
            max: [self.max[0] + pad, self.max[1] + pad, self.max[2] + pad],
        }
    }
}

/// Scalar field for level-set domains; shared so domains stay cheaply
/// cloneable.
pub type MembershipField = Arc<dyn Fn(Point3) -> f64 + Send + Sync>;

/// A bounded open region given implicitly by a membership function.
#[derive(Clone)]
pub enum Domain {
    /// `{p : ρ(center⁻¹ ∘ p) < radius}` in the gauge metric.
    GaugeBall { center: Point3, radius: f64 },
    /// Ordinary Euclidean ball, used to cross-check grid and surface code
    /// against classical closed forms.
    EuclideanBall { center: Point3, radius: f64 },
    /// Axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// `{0 < t < height, |x| < halfwidth, |y| < halfwidth}`: a bounded
    /// truncation of the half space `{t > 0}`.
    Slab { height: f64, halfwidth: f64 },
    /// The rotationally invariant set `{|t| < R²·arccos(z/R) + z·√(R²−z²)}`
    /// with `z = √(x²+y²) < R`; poles at `t = ±(π/2)R²`.
    Bubble { radius: f64 },
    /// Negative set of an externally supplied continuous field.
    LevelSet {
        field: MembershipField,
        bounds: BoundingBox,
    },
}

impl Domain {
    pub fn gauge_ball(center: Point3, radius: f64) -> Result<Self> {
        require_positive(radius, "gauge ball radius")?;
        Ok(Domain::GaugeBall { center, radius })
    }

    pub fn euclidean_ball(center: Point3, radius: f64) -> Result<Self> {
        require_positive(radius, "euclidean ball radius")?;
        Ok(Domain::EuclideanBall { center, radius })
    }

    pub fn axis_box(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        BoundingBox::new(min, max)?;
        Ok(Domain::Box { min, max })
    }

    pub fn halfspace_slab(height: f64, halfwidth: f64) -> Result<Self> {
        require_positive(height, "slab height")?;
        require_positive(halfwidth, "slab halfwidth")?;
        Ok(Domain::Slab { height, halfwidth })
    }

    pub fn bubble(radius: f64) -> Result<Self> {
        require_positive(radius, "bubble radius")?;
        Ok(Domain::Bubble { radius })
    }

    /// Domain `{field < 0}` restricted to `bounds`. The field must be
    /// continuous; `bounds` must contain the negative set.
    pub fn level_set(field: MembershipField, bounds: BoundingBox) -> Self {
        Domain::LevelSet { field, bounds }
    }

    /// Signed membership: negative inside, zero on the boundary, positive
    /// outside. Not a distance in general, but continuous, which is all the
    /// bisection-based boundary locators require.
    pub fn membership(&self, p: Point3) -> f64 {
        match self {
            Domain::GaugeBall { center, radius } => center.gauge_distance(p) - radius,
            Domain::EuclideanBall { center, radius } => {
                let dx = p.x - center.x;
                let dy = p.y - center.y;
                let dt = p.t - center.t;
                (dx * dx + dy * dy + dt * dt).sqrt() - radius
            }
            Domain::Box { min, max } => {
                let c = [p.x, p.y, p.t];
                (0..3)
                    .map(|a| (min[a] - c[a]).max(c[a] - max[a]))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Domain::Slab { height, halfwidth } => (-p.t)
                .max(p.t - height)
                .max(p.x.abs() - halfwidth)
                .max(p.y.abs() - halfwidth),
            Domain::Bubble { radius } => bubble_membership(p, *radius),
            Domain::LevelSet { field, .. } => field(p),
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.membership(p) < 0.0
    }

    /// Tight axis-aligned box around the region (grids pad it further).
    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            Domain::GaugeBall { center, radius } => {
                // Group-translated ball: x, y shift plainly; the t extent
                // inflates by the twist term 2(w_x·c_y − c_x·w_y).
                let r = *radius;
                let twist = 2.0 * r * (center.x.abs() + center.y.abs());
                BoundingBox {
                    min: [center.x - r, center.y - r, center.t - r * r - twist],
                    max: [center.x + r, center.y + r, center.t + r * r + twist],
                }
            }
            Domain::EuclideanBall { center, radius } => BoundingBox {
                min: [center.x - radius, center.y - radius, center.t - radius],
                max: [center.x + radius, center.y + radius, center.t + radius],
            },
            Domain::Box { min, max } => BoundingBox {
                min: *min,
                max: *max,
            },
            Domain::Slab { height, halfwidth } => BoundingBox {
                min: [-halfwidth, -halfwidth, 0.0],
                max: [*halfwidth, *halfwidth, *height],
            },
            Domain::Bubble { radius } => {
                let r = *radius;
                let pole = std::f64::consts::FRAC_PI_2 * r * r;
                BoundingBox {
                    min: [-r, -r, -pole],
                    max: [r, r, pole],
                }
            }
            Domain::LevelSet { bounds, .. } => *bounds,
        }
    }

    /// Stable kind tag used in reports and artifact metadata.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::GaugeBall { .. } => "gauge_ball",
            Domain::EuclideanBall { .. } => "euclidean_ball",
            Domain::Box { .. } => "box",
            Domain::Slab { .. } => "halfspace_slab",
            Domain::Bubble { .. } => "bubble",
            Domain::LevelSet { .. } => "level_set_of_field",
        }
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::GaugeBall { center, radius } => f
                .debug_struct("GaugeBall")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Domain::EuclideanBall { center, radius } => f
                .debug_struct("EuclideanBall")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Domain::Box { min, max } => f
                .debug_struct("Box")
                .field("min", min)
                .field("max", max)
                .finish(),
            Domain::Slab { height, halfwidth } => f
                .debug_struct("Slab")
                .field("height", height)
                .field("halfwidth", halfwidth)
                .finish(),
            Domain::Bubble { radius } => {
                f.debug_struct("Bubble").field("radius", radius).finish()
            }
            Domain::LevelSet { bounds, .. } => f
                .debug_struct("LevelSet")
                .field("bounds", bounds)
                .field("field", &"<fn>")
                .finish(),
        }
    }
}

/// Membership of the bubble set. Inside the waist cylinder `z < R` the
/// boundary profile is `g(z) = R²·arccos(z/R) + z·√(R²−z²)`; beyond the waist
/// the function continues as `|t| + (z − R)`, which matches `g(R) = 0`
/// continuously and is positive there.
fn bubble_membership(p: Point3, radius: f64) -> f64 {
    let z = (p.x * p.x + p.y * p.y).sqrt();
    if z < radius {
        let profile = radius * radius * (z / radius).acos() + z * (radius * radius - z * z).sqrt();
        p.t.abs() - profile
    } else {
        p.t.abs() + (z - radius)
    }
}

fn require_positive(value: f64, what: &str) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

/// Declarative description of a domain, as read from configuration files.
///
/// `kind` selects the shape; the other fields are kind-specific and must be
/// present exactly when the kind uses them (stray parameters are rejected so
/// configuration typos surface as errors instead of silent defaults).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
}

impl DomainSpec {
    pub fn gauge_ball(center: [f64; 3], radius: f64) -> Self {
        Self {
            kind: "gauge_ball".into(),
            center: Some(center),
            radius: Some(radius),
            min: None,
            max: None,
            height: None,
            halfwidth: None,
        }
    }
}

/// Builds the domain a [`DomainSpec`] describes, validating that required
/// parameters are present and that no parameter foreign to the kind is set.
pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    let kind = spec.kind.as_str();
    let allowed: &[&str] = match kind {
        "gauge_ball" | "euclidean_ball" => &["center", "radius"],
        "box" => &["min", "max"],
        "halfspace_slab" => &["height", "halfwidth"],
        "bubble" => &["radius"],
        "level_set_of_field" => {
            return Err(Error::InvalidParameter(
                "level_set_of_field domains are constructed programmatically from a \
                 Green function, not from configuration"
                    .into(),
            ))
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown domain kind `{other}`; expected one of gauge_ball, \
                 euclidean_ball, box, halfspace_slab, bubble"
            )))
        }
    };
    let set_fields = [
        ("center", spec.center.is_some()),
        ("radius", spec.radius.is_some()),
        ("min", spec.min.is_some()),
        ("max", spec.max.is_some()),
        ("height", spec.height.is_some()),
        ("halfwidth", spec.halfwidth.is_some()),
    ];
    for (name, set) in set_fields {
        if set && !allowed.contains(&name) {
            return Err(Error::InvalidParameter(format!(
                "parameter `{name}` is not used by domain kind `{kind}`"
            )));
        }
    }
    let require = |name: &str, value: Option<f64>| {
        value.ok_or_else(|| {
            Error::InvalidParameter(format!("domain kind `{kind}` requires parameter `{name}`"))
        })
    };
    let require3 = |name: &str, value: Option<[f64; 3]>| {
        value.ok_or_else(|| {
            Error::InvalidParameter(format!("domain kind `{kind}` requires parameter `{name}`"))
        })
    };
    match kind {
        "gauge_ball" | "euclidean_ball" => {
            let center = spec.center.unwrap_or([0.0; 3]);
            let center = Point3::new(center[0], center[1], center[2]);
            let radius = require("radius", spec.radius)?;
            if kind == "gauge_ball" {
                Domain::gauge_ball(center, radius)
            } else {
                Domain::euclidean_ball(center, radius)
            }
        }
        "box" => Domain::axis_box(require3("min", spec.min)?, require3("max", spec.max)?),
        "halfspace_slab" => Domain::halfspace_slab(
            require("height", spec.height)?,
            require("halfwidth", spec.halfwidth)?,
        ),
        "bubble" => Domain::bubble(require("radius", spec.radius)?),
        _ => unreachable!("kind validated above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_ball_membership_signs() {
        let ball = Domain::gauge_ball(Point3::origin(), 1.0).unwrap();
        assert!(ball.membership(Point3::origin()) < 0.0);
        // (1,0,0) has gauge norm exactly 1.
        assert_eq!(ball.membership(Point3::new(1.0, 0.0, 0.0)), 0.0);
        assert!(ball.membership(Point3::new(0.0, 0.0, 2.0)) > 0.0);
    }

    #[test]
    fn translated_gauge_ball_box_contains_samples() {
        let center = Point3::new(0.7, -0.4, 0.3);
        let ball = Domain::gauge_ball(center, 0.9).unwrap();
        let bb = ball.bounding_box();
        // Sample group translates of points with gauge norm < R; all must be
        // inside the box.
        let mut k = 0u32;
        for i in 0..20 {
            for j in 0..20 {
                let w = Point3::new(
                    0.89 * (i as f64 / 19.0 * 2.0 - 1.0),
                    0.89 * (j as f64 / 19.0 * 2.0 - 1.0),
                    0.0,
                );
                if w.gauge_norm() >= 0.9 {
                    continue;
                }
                let p = center.compose(w);
                assert!(bb.contains(p), "translated sample escaped the box");
                k += 1;
            }
        }
        assert!(k > 50);
    }

    #[test]
    fn slab_membership_signs() {
        let slab = Domain::halfspace_slab(4.0, 2.0).unwrap();
        assert!(slab.membership(Point3::new(0.0, 0.0, 2.0)) < 0.0);
        assert!(slab.membership(Point3::new(0.0, 0.0, -0.1)) > 0.0);
        assert!(slab.membership(Point3::new(2.5, 0.0, 2.0)) > 0.0);
        assert_eq!(slab.membership(Point3::new(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn bubble_poles_and_waist() {
        let bubble = Domain::bubble(1.0).unwrap();
        let pole = std::f64::consts::FRAC_PI_2;
        assert!(bubble.contains(Point3::new(0.0, 0.0, pole - 1e-6)));
        assert!(!bubble.contains(Point3::new(0.0, 0.0, pole + 1e-6)));
        assert!(bubble.contains(Point3::new(0.999, 0.0, 0.0)));
        assert!(!bubble.contains(Point3::new(1.001, 0.0, 0.0)));
        // Rotational symmetry about the t-axis.
        let a = bubble.membership(Point3::new(0.5, 0.3, 0.4));
        let z = (0.25_f64 + 0.09).sqrt();
        let b = bubble.membership(Point3::new(z, 0.0, 0.4));
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn bubble_membership_is_continuous_across_the_waist() {
        let bubble = Domain::bubble(1.0).unwrap();
        for &t in &[0.0, 0.05, -0.2] {
            let inside = bubble.membership(Point3::new(1.0 - 1e-9, 0.0, t));
            let outside = bubble.membership(Point3::new(1.0 + 1e-9, 0.0, t));
            assert!(
                (inside - outside).abs() < 1e-4,
                "jump across waist at t={t}: {inside} vs {outside}"
            );
        }
    }

    #[test]
    fn box_membership_and_bounds() {
        let b = Domain::axis_box([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]).unwrap();
        assert!(b.membership(Point3::origin()) < 0.0);
        assert_eq!(b.membership(Point3::new(1.0, 0.0, 0.0)), 0.0);
        assert!(b.membership(Point3::new(1.2, 0.0, 0.0)) > 0.0);
        assert_eq!(b.bounding_box().min, [-1.0, -1.0, -1.0]);
        assert_eq!(b.bounding_box().max, [1.0, 1.0, 1.0]);
        assert!(Domain::axis_box([0.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn level_set_domain_wraps_field() {
        let field: MembershipField = Arc::new(|p: Point3| p.x * p.x + p.y * p.y + p.t * p.t - 1.0);
        let bounds = BoundingBox::new([-1.1; 3], [1.1; 3]).unwrap();
        let d = Domain::level_set(field, bounds);
        assert!(d.contains(Point3::origin()));
        assert!(!d.contains(Point3::new(1.2, 0.0, 0.0)));
        assert_eq!(d.kind_name(), "level_set_of_field");
        assert_eq!(d.bounding_box(), bounds);
        let text = format!("{d:?}");
        assert!(text.contains("LevelSet"));
    }

    #[test]
    fn padded_box_grows_every_side() {
        let bb = BoundingBox::new([0.0, 0.0, 0.0], [1.0, 2.0, 4.0]).unwrap();
        let padded = bb.padded(0.05);
        // Pad is 5% of the longest edge (4.0), applied on all six faces.
        assert!((padded.min[0] - -0.2).abs() < 1e-15);
        assert!((padded.max[2] - 4.2).abs() < 1e-15);
    }

    #[test]
    fn build_domain_validates_kinds_and_parameters() {
        let spec = DomainSpec::gauge_ball([0.0; 3], 1.0);
        let d = build_domain(&spec).unwrap();
        assert_eq!(d.kind_name(), "gauge_ball");

        let mut bad_kind = spec.clone();
        bad_kind.kind = "pentagon".into();
        let err = build_domain(&bad_kind).unwrap_err().to_string();
        assert!(err.contains("pentagon"), "{err}");

        let mut missing = spec.clone();
        missing.radius = None;
        let err = build_domain(&missing).unwrap_err().to_string();
        assert!(err.contains("radius"), "{err}");

        let mut stray = spec.clone();
        stray.height = Some(3.0);
        let err = build_domain(&stray).unwrap_err().to_string();
        assert!(err.contains("height"), "{err}");

        let level = DomainSpec {
            kind: "level_set_of_field".into(),
            ..DomainSpec::gauge_ball([0.0; 3], 1.0)
        };
        let mut level = level;
        level.center = None;
        level.radius = None;
        assert!(build_domain(&level).is_err());

        let slab = DomainSpec {
            kind: "halfspace_slab".into(),
            center: None,
            radius: None,
            min: None,
            max: None,
            height: Some(4.0),
            halfwidth: Some(2.0),
        };
        assert_eq!(build_domain(&slab).unwrap().kind_name(), "halfspace_slab");
    }

    #[test]
    fn default_center_is_origin() {
        let spec = DomainSpec {
            center: None,
            ..DomainSpec::gauge_ball([0.0; 3], 2.0)
        };
        let d = build_domain(&spec).unwrap();
        match d {
            Domain::GaugeBall { center, .. } => assert_eq!(center, Point3::origin()),
            _ => panic!("wrong kind"),
        }
    }
}
