//! Discrete Green's function machinery: the regular part `H_ξ`, the Green
//! function `G_ξ = Γ_ξ − H_ξ`, Robin values, harmonic radii, sublevel-set
//! domains `Ω(τ) = {G_ξ > τ}`, and harmonic-center searches.
//!
//! `H_ξ` solves the discrete Dirichlet problem `K·H = 0` inside, `H = Γ_ξ`
//! on the boundary, where the boundary data is the mean of `Γ_ξ` over the
//! bisected surface crossings attached to each shell node — sampling on the
//! actual surface rather than at shell nodes removes an O(h) bias that the
//! radius computation would amplify. The harmonic radius is
//! `r_Ω(ξ) = 1/√(8π·H_ξ(ξ))` with `H_ξ(ξ)` interpolated trilinearly (the
//! singular part of `G` is handled analytically and never discretized).

use std::collections::HashSet;
use std::sync::Arc;

use crate::domain::{BoundingBox, Domain};
use crate::error::{Error, Result};
use crate::geometry::{fundamental_solution, Point3, GAMMA_SCALE};
use crate::grid::{boundary_gauge_distances, Grid, NodeClass, ScalarField};
use crate::operator::StiffnessOperator;
use crate::sparse::conjugate_gradient;

/// Relative residual of the conjugate-gradient solve for the regular part.
pub const REGULAR_PART_CG_TOL: f64 = 1e-10;

/// Iteration cap for that solve.
pub const REGULAR_PART_CG_CAP: usize = 50_000;

/// Poles closer to the boundary than this many maximal grid spacings (in
/// gauge distance) are rejected: the interpolated Robin value degrades
/// quickly there.
pub const POLE_BOUNDARY_MARGIN: f64 = 2.0;

/// Candidates within this relative slack of the best radius count as
/// harmonic centers.
pub const CENTER_RADIUS_SLACK: f64 = 1e-3;

/// A Green function with its derived quantities.
///
/// At a node coinciding exactly with the pole, `Γ` is evaluated at gauge
/// distance `10⁻³·min-spacing` instead of zero; the huge finite value only
/// marks that node as deep inside every sublevel set.
#[derive(Debug, Clone)]
pub struct GreenData {
    pub domain: Domain,
    pub pole: Point3,
    /// Regular part `H_ξ`: solved on interior nodes, boundary data on the
    /// shell.
    pub regular_part: ScalarField,
    /// `G_ξ = Γ_ξ − H_ξ` nodewise.
    pub green: ScalarField,
    /// Interpolated `H_ξ(ξ)`.
    pub robin_value: f64,
    /// `r_Ω(ξ) = 1/√(8π·H_ξ(ξ))`.
    pub harmonic_radius: f64,
}

/// Mean of `Γ_pole` over the bisected surface crossings of each boundary
/// slot: the Dirichlet data of the regular part.
pub fn fundamental_boundary_data(grid: &Grid, pole: Point3) -> Result<Vec<f64>> {
    let mut data = Vec::with_capacity(grid.boundary_nodes().len());
    for slot in 0..grid.boundary_nodes().len() {
        let crossings = grid.boundary_crossings(slot);
        let mut sum = 0.0;
        for &c in crossings {
            sum += fundamental_solution(pole, c)?;
        }
        data.push(sum / crossings.len() as f64);
    }
    Ok(data)
}

/// Validates that `pole` is strictly interior and not within
/// [`POLE_BOUNDARY_MARGIN`] maximal spacings of the boundary; returns the
/// distance to the boundary sample cloud.
fn check_pole_position(grid: &Grid, pole: Point3) -> Result<f64> {
    let (inf_d, _) = boundary_gauge_distances(grid, pole)?;
    let max_h = grid.spacings().iter().fold(0.0f64, |a, &b| a.max(b));
    if inf_d < POLE_BOUNDARY_MARGIN * max_h {
        return Err(Error::PoleNearBoundary {
            x: pole.x,
            y: pole.y,
            t: pole.t,
        });
    }
    Ok(inf_d)
}

/// Solves the interior values of the regular part and returns them packed
/// with the boundary data (`h` on interior nodes, `Γ` means on the shell).
fn solve_regular_part(
    grid: &Grid,
    pole: Point3,
    op: &StiffnessOperator,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pole_position(grid, pole)?;
    let boundary = fundamental_boundary_data(grid, pole)?;
    let coupled = op.coupling().apply(&boundary)?;
    let rhs: Vec<f64> = coupled.iter().map(|&v| -v).collect();
    let mut interior = vec![0.0; grid.interior_count()];
    conjugate_gradient(
        op.interior(),
        &rhs,
        &mut interior,
        REGULAR_PART_CG_TOL,
        REGULAR_PART_CG_CAP,
    )?;
    Ok((interior, boundary))
}

/// The regular part `H_ξ` as a nodal field.
pub fn regular_part(grid: &Grid, pole: Point3, op: &StiffnessOperator) -> Result<ScalarField> {
    let (interior, boundary) = solve_regular_part(grid, pole, op)?;
    ScalarField::scatter_with_boundary(grid, &interior, &boundary)
}

/// Robin value `H_ξ(ξ)` without assembling the full Green field.
fn robin_value_at(grid: &Grid, pole: Point3, op: &StiffnessOperator) -> Result<f64> {
    let field = regular_part(grid, pole, op)?;
    let robin = field.interpolate(grid, pole)?;
    if !(robin > 0.0) {
        return Err(Error::NonPositiveRobinValue { value: robin });
    }
    Ok(robin)
}

/// Harmonic radius `r_Ω(ξ) = 1/√(8π·H_ξ(ξ))`.
pub fn harmonic_radius(grid: &Grid, pole: Point3, op: &StiffnessOperator) -> Result<f64> {
    let robin = robin_value_at(grid, pole, op)?;
    Ok(1.0 / (8.0 * std::f64::consts::PI * robin).sqrt())
}

/// Computes the Green function and every derived quantity.
pub fn green_function(grid: &Grid, pole: Point3, op: &StiffnessOperator) -> Result<GreenData> {
    let (interior, boundary) = solve_regular_part(grid, pole, op)?;
    let regular = ScalarField::scatter_with_boundary(grid, &interior, &boundary)?;
    let robin_value = regular.interpolate(grid, pole)?;
    if !(robin_value > 0.0) {
        return Err(Error::NonPositiveRobinValue { value: robin_value });
    }
    let harmonic_radius = 1.0 / (8.0 * std::f64::consts::PI * robin_value).sqrt();

    let min_h = grid.spacings().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let floor_sq = (1e-3 * min_h) * (1e-3 * min_h);
    let mut green = ScalarField::zeros(grid);
    for linear in 0..grid.node_count() {
        if grid.node_class(linear) == NodeClass::Exterior {
            continue;
        }
        let p = grid.node_position(linear);
        let d2 = pole.inverse().compose(p).gauge_norm_squared();
        let gamma = GAMMA_SCALE / d2.max(floor_sq);
        green.values_mut()[linear] = gamma - regular.values()[linear];
    }
    Ok(GreenData {
        domain: grid.domain().clone(),
        pole,
        regular_part: regular,
        green,
        robin_value,
        harmonic_radius,
    })
}

/// Standalone trilinear lookup table: lets sublevel-set membership functions
/// own the sampled field without borrowing the grid. Queries outside the
/// sampled box clamp to the nearest face, which continues the membership
/// function by values near zero outside the original domain.
struct InterpTable {
    origin: [f64; 3],
    spacings: [f64; 3],
    counts: [usize; 3],
    values: Vec<f64>,
}

impl InterpTable {
    fn from_field(grid: &Grid, field: &ScalarField) -> Self {
        Self {
            origin: grid.origin(),
            spacings: grid.spacings(),
            counts: grid.counts(),
            values: field.values().to_vec(),
        }
    }

    fn value(&self, p: Point3) -> f64 {
        let coords = [p.x, p.y, p.t];
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let u = ((coords[axis] - self.origin[axis]) / self.spacings[axis])
                .clamp(0.0, (self.counts[axis] - 1) as f64);
            let i = (u.floor() as usize).min(self.counts[axis] - 2);
            cell[axis] = i;
            frac[axis] = u - i as f64;
        }
        let mut value = 0.0;
        for corner in 0..8usize {
            let dx = corner & 1;
            let dy = (corner >> 1) & 1;
            let dt = (corner >> 2) & 1;
            let weight = (if dx == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dy == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dt == 1 { frac[2] } else { 1.0 - frac[2] });
            let linear =
                ((cell[2] + dt) * self.counts[1] + cell[1] + dy) * self.counts[0] + cell[0] + dx;
            value += weight * self.values[linear];
        }
        value
    }
}

/// The sublevel-set domain `Ω(τ) = {η : G_ξ(η) > τ}` as a level-set domain
/// with membership `τ − G` (trilinearly interpolated).
pub fn level_set_domain(data: &GreenData, grid: &Grid, tau: f64) -> Result<Domain> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "level threshold must be positive, got {tau}"
        )));
    }
    let mut maximum = f64::NEG_INFINITY;
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for &linear in grid.interior_nodes() {
        let g = data.green.values()[linear as usize];
        maximum = maximum.max(g);
        if g > tau {
            any = true;
            let p = grid.node_position(linear as usize);
            let c = [p.x, p.y, p.t];
            for axis in 0..3 {
                min[axis] = min[axis].min(c[axis]);
                max[axis] = max[axis].max(c[axis]);
            }
        }
    }
    if !any {
        return Err(Error::EmptyLevelSet {
            threshold: tau,
            maximum,
        });
    }
    // Interpolated values exceed τ only inside cells owning a node above τ;
    // one spacing of margin makes the box strict.
    let h = grid.spacings();
    let bounds = BoundingBox::new(
        [min[0] - h[0], min[1] - h[1], min[2] - h[2]],
        [max[0] + h[0], max[1] + h[1], max[2] + h[2]],
    )?;
    let table = InterpTable::from_field(grid, &data.green);
    Ok(Domain::level_set(
        Arc::new(move |p: Point3| tau - table.value(p)),
        bounds,
    ))
}

/// Result of a harmonic-center search.
#[derive(Debug, Clone)]
pub struct HarmonicCenters {
    /// Node-snapped maximizer of the harmonic radius.
    pub center: Point3,
    /// The maximal radius `r* = max_ξ r_Ω(ξ)`.
    pub radius: f64,
    /// All evaluated candidates within [`CENTER_RADIUS_SLACK`] of the best,
    /// best first.
    pub centers: Vec<(Point3, f64)>,
    /// Candidates skipped because their solve failed or sat too close to the
    /// boundary.
    pub skipped: usize,
}

/// Maximizes the harmonic radius over interior grid nodes by hill climbing
/// in index space with shrinking strides, starting from the node deepest
/// inside the domain (largest gauge distance to the boundary cloud).
///
/// One stiffness operator serves every candidate: only the boundary data
/// and the right-hand side change between solves.
pub fn harmonic_center(grid: &Grid, op: &StiffnessOperator) -> Result<HarmonicCenters> {
    // Surrogate start: the deepest interior node, found on a stride-4
    // lattice (the surrogate only needs to land in the basin of the
    // maximizer).
    let crossings = grid.all_crossings();
    let mut start = None;
    let mut best_depth = -1.0;
    for &linear in grid.interior_nodes() {
        let [ix, iy, it] = grid.node_indices(linear as usize);
        if ix % 4 != 0 || iy % 4 != 0 || it % 4 != 0 {
            continue;
        }
        let p = grid.node_position(linear as usize);
        let depth = crossings
            .iter()
            .map(|&c| p.gauge_distance(c))
            .fold(f64::INFINITY, f64::min);
        if depth > best_depth {
            best_depth = depth;
            start = Some(linear as usize);
        }
    }
    let start = start.ok_or(Error::EmptySurface)?;

    let mut evaluations: Vec<(usize, f64)> = Vec::new();
    let mut visited: HashSet<usize> = HashSet::new();
    let mut skipped = 0usize;
    let evaluate = |linear: usize,
                        visited: &mut HashSet<usize>,
                        skipped: &mut usize,
                        evaluations: &mut Vec<(usize, f64)>|
     -> Option<f64> {
        if !visited.insert(linear) {
            return evaluations
                .iter()
                .find(|&&(l, _)| l == linear)
                .map(|&(_, r)| r);
        }
        if grid.node_class(linear) != NodeClass::Interior {
            *skipped += 1;
            return None;
        }
        match harmonic_radius(grid, grid.node_position(linear), op) {
            Ok(r) => {
                evaluations.push((linear, r));
                Some(r)
            }
            Err(_) => {
                *skipped += 1;
                None
            }
        }
    };

    let mut current = start;
    let mut current_radius =
        match evaluate(current, &mut visited, &mut skipped, &mut evaluations) {
            Some(r) => r,
            None => {
                return Err(Error::InvalidParameter(
                    "no interior candidate admits a harmonic-radius evaluation".to_string(),
                ))
            }
        };

    let [nx, ny, nt] = grid.counts();
    for stride in [4usize, 2, 1] {
        loop {
            let [ix, iy, it] = grid.node_indices(current);
            let mut improved = false;
            for dt in -1..=1i64 {
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        if dx == 0 && dy == 0 && dt == 0 {
                            continue;
                        }
                        let j = [
                            ix as i64 + dx * stride as i64,
                            iy as i64 + dy * stride as i64,
                            it as i64 + dt * stride as i64,
                        ];
                        if j[0] < 0
                            || j[1] < 0
                            || j[2] < 0
                            || j[0] >= nx as i64
                            || j[1] >= ny as i64
                            || j[2] >= nt as i64
                        {
                            continue;
                        }
                        let neighbor =
                            grid.linear_index([j[0] as usize, j[1] as usize, j[2] as usize]);
                        if let Some(r) =
                            evaluate(neighbor, &mut visited, &mut skipped, &mut evaluations)
                        {
                            if r > current_radius {
                                current = neighbor;
                                current_radius = r;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    let radius = current_radius;
    let mut centers: Vec<(Point3, f64)> = evaluations
        .iter()
        .filter(|&&(_, r)| r >= (1.0 - CENTER_RADIUS_SLACK) * radius)
        .map(|&(l, r)| (grid.node_position(l), r))
        .collect();
    centers.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(HarmonicCenters {
        center: grid.node_position(current),
        radius,
        centers,
        skipped,
    })
}
