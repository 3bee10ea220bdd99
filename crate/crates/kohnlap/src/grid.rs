//! Uniform rectilinear grids over implicit domains: node classification,
//! boundary-crossing location, nodal scalar fields, and the boundary-distance
//! ratio α.
//!
//! Nodes are classified by membership sign: strictly negative nodes are
//! interior; non-interior nodes that share a cell with an interior node form
//! the boundary shell (every stencil the stiffness assembly produces couples
//! only interior and shell nodes); everything else is exterior. For each
//! shell node the segments toward its in-cell interior neighbors are bisected
//! to machine precision, yielding a cloud of points on `{membership = 0}`
//! that serves both the Dirichlet boundary data and the inf/sup distance
//! queries behind α.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Minimum node count per axis.
pub const MIN_COUNTS: usize = 8;

/// Minimum number of interior nodes for a usable discretization.
pub const MIN_INTERIOR: usize = 27;

/// Classification of a grid node relative to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Membership strictly negative.
    Interior,
    /// Non-interior, sharing a grid cell with at least one interior node.
    Boundary,
    /// Everything else; never touched by the solvers.
    Exterior,
}

const NO_INDEX: u32 = u32::MAX;

/// Uniform grid over the padded bounding box of a domain.
///
/// Immutable after construction. Node `(i_x, i_y, i_t)` sits at
/// `origin + (i_x·h_x, i_y·h_y, i_t·h_t)` and has linear id
/// `(i_t·n_y + i_y)·n_x + i_x`; interior nodes are densely numbered in
/// increasing linear id, i.e. lexicographically by `(i_t, i_y, i_x)`.
#[derive(Debug)]
pub struct Grid {
    domain: Domain,
    counts: [usize; 3],
    spacings: [f64; 3],
    origin: [f64; 3],
    node_class: Vec<NodeClass>,
    interior_index: Vec<u32>,
    interior_nodes: Vec<u32>,
    boundary_nodes: Vec<u32>,
    boundary_slot: Vec<u32>,
    crossing_offsets: Vec<u32>,
    crossings: Vec<Point3>,
}

impl Grid {
    /// Builds a grid with `counts` nodes per axis over the domain's bounding
    /// box padded by `padding` (a fraction of the box's longest edge).
    pub fn build(domain: Domain, counts: [usize; 3], padding: f64) -> Result<Self> {
        if counts.iter().any(|&n| n < MIN_COUNTS) {
            return Err(Error::InvalidParameter(format!(
                "grid counts must be at least {MIN_COUNTS} per axis, got {counts:?}"
            )));
        }
        if !(padding >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid padding must be nonnegative, got {padding}"
            )));
        }
        let bb = domain.bounding_box().padded(padding);
        let spacings = [
            (bb.max[0] - bb.min[0]) / (counts[0] - 1) as f64,
            (bb.max[1] - bb.min[1]) / (counts[1] - 1) as f64,
            (bb.max[2] - bb.min[2]) / (counts[2] - 1) as f64,
        ];
        let origin = bb.min;
        let total = counts[0] * counts[1] * counts[2];

        let mut grid = Grid {
            domain,
            counts,
            spacings,
            origin,
            node_class: vec![NodeClass::Exterior; total],
            interior_index: vec![NO_INDEX; total],
            interior_nodes: Vec::new(),
            boundary_nodes: Vec::new(),
            boundary_slot: vec![NO_INDEX; total],
            crossing_offsets: Vec::new(),
            crossings: Vec::new(),
        };
        grid.classify();
        if grid.interior_nodes.len() < MIN_INTERIOR {
            return Err(Error::DomainTooCoarse {
                interior: grid.interior_nodes.len(),
                minimum: MIN_INTERIOR,
            });
        }
        grid.locate_crossings();
        Ok(grid)
    }

    fn classify(&mut self) {
        let total = self.node_class.len();
        for linear in 0..total {
            if self.domain.membership(self.node_position(linear)) < 0.0 {
                self.node_class[linear] = NodeClass::Interior;
                self.interior_index[linear] = self.interior_nodes.len() as u32;
                self.interior_nodes.push(linear as u32);
            }
        }
        for linear in 0..total {
            if self.node_class[linear] == NodeClass::Interior {
                continue;
            }
            let has_interior_neighbor = self
                .cell_neighbors(linear)
                .any(|n| self.node_class[n] == NodeClass::Interior);
            if has_interior_neighbor {
                self.node_class[linear] = NodeClass::Boundary;
                self.boundary_slot[linear] = self.boundary_nodes.len() as u32;
                self.boundary_nodes.push(linear as u32);
            }
        }
    }

    fn locate_crossings(&mut self) {
        self.crossing_offsets = Vec::with_capacity(self.boundary_nodes.len() + 1);
        self.crossing_offsets.push(0);
        for slot in 0..self.boundary_nodes.len() {
            let b = self.boundary_nodes[slot] as usize;
            let outside = self.node_position(b);
            let neighbors: Vec<usize> = self
                .cell_neighbors(b)
                .filter(|&n| self.node_class[n] == NodeClass::Interior)
                .collect();
            for n in neighbors {
                let inside = self.node_position(n);
                self.crossings
                    .push(bisect_crossing(&self.domain, inside, outside));
            }
            self.crossing_offsets.push(self.crossings.len() as u32);
        }
    }

    /// Linear ids of the (up to 26) nodes sharing a cell with `linear`.
    fn cell_neighbors(&self, linear: usize) -> impl Iterator<Item = usize> + '_ {
        let [ix, iy, it] = self.node_indices(linear);
        let [nx, ny, nt] = self.counts;
        (-1..=1i64).flat_map(move |dt| {
            (-1..=1i64).flat_map(move |dy| {
                (-1..=1i64).filter_map(move |dx| {
                    if dx == 0 && dy == 0 && dt == 0 {
                        return None;
                    }
                    let jx = ix as i64 + dx;
                    let jy = iy as i64 + dy;
                    let jt = it as i64 + dt;
                    if jx < 0
                        || jy < 0
                        || jt < 0
                        || jx >= nx as i64
                        || jy >= ny as i64
                        || jt >= nt as i64
                    {
                        return None;
                    }
                    Some((jt as usize * ny + jy as usize) * nx + jx as usize)
                })
            })
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacings(&self) -> [f64; 3] {
        self.spacings
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn node_count(&self) -> usize {
        self.node_class.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings[0] * self.spacings[1] * self.spacings[2]
    }

    pub fn node_indices(&self, linear: usize) -> [usize; 3] {
        let [nx, ny, _] = self.counts;
        [linear % nx, (linear / nx) % ny, linear / (nx * ny)]
    }

    pub fn linear_index(&self, ijk: [usize; 3]) -> usize {
        (ijk[2] * self.counts[1] + ijk[1]) * self.counts[0] + ijk[0]
    }

    pub fn node_position(&self, linear: usize) -> Point3 {
        let [ix, iy, it] = self.node_indices(linear);
        Point3::new(
            self.origin[0] + ix as f64 * self.spacings[0],
            self.origin[1] + iy as f64 * self.spacings[1],
            self.origin[2] + it as f64 * self.spacings[2],
        )
    }

    pub fn node_class(&self, linear: usize) -> NodeClass {
        self.node_class[linear]
    }

    /// Dense interior number of a node, if it is interior.
    pub fn interior_index(&self, linear: usize) -> Option<usize> {
        match self.interior_index[linear] {
            NO_INDEX => None,
            k => Some(k as usize),
        }
    }

    /// Linear ids of interior nodes, in dense numbering order.
    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior_nodes
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Linear ids of boundary-shell nodes; this order defines the boundary
    /// slot numbering used by coupling operators and boundary data vectors.
    pub fn boundary_nodes(&self) -> &[u32] {
        &self.boundary_nodes
    }

    /// Boundary slot of a node, if it is on the shell.
    pub fn boundary_slot(&self, linear: usize) -> Option<usize> {
        match self.boundary_slot[linear] {
            NO_INDEX => None,
            k => Some(k as usize),
        }
    }

    /// Bisected points of `{membership = 0}` attached to one boundary slot:
    /// one point per segment from the shell node to an in-cell interior
    /// neighbor.
    pub fn boundary_crossings(&self, slot: usize) -> &[Point3] {
        let lo = self.crossing_offsets[slot] as usize;
        let hi = self.crossing_offsets[slot + 1] as usize;
        &self.crossings[lo..hi]
    }

    /// All boundary crossing points, every slot concatenated.
    pub fn all_crossings(&self) -> &[Point3] {
        &self.crossings
    }

    /// Fraction of the dual cell of a node (the spacing-sized box centered on
    /// it) lying inside the domain, estimated by 4×4×4 midpoint subsampling.
    pub fn dual_cell_inside_fraction(&self, linear: usize) -> f64 {
        let p = self.node_position(linear);
        let mut hits = 0u32;
        for kt in 0..4 {
            for ky in 0..4 {
                for kx in 0..4 {
                    let q = Point3::new(
                        p.x + ((kx as f64 + 0.5) / 4.0 - 0.5) * self.spacings[0],
                        p.y + ((ky as f64 + 0.5) / 4.0 - 0.5) * self.spacings[1],
                        p.t + ((kt as f64 + 0.5) / 4.0 - 0.5) * self.spacings[2],
                    );
                    if self.domain.membership(q) < 0.0 {
                        hits += 1;
                    }
                }
            }
        }
        f64::from(hits) / 64.0
    }
}

/// Bisects the membership function along the straight segment from an
/// interior point to a non-interior point, returning a point on the zero set
/// at floating-point resolution.
fn bisect_crossing(domain: &Domain, inside: Point3, outside: Point3) -> Point3 {
    if domain.membership(outside) == 0.0 {
        return outside;
    }
    let mut lo = inside;
    let mut hi = outside;
    for _ in 0..80 {
        let mid = Point3::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y), 0.5 * (lo.t + hi.t));
        if mid == lo || mid == hi {
            break;
        }
        if domain.membership(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Minimum and maximum gauge distance from `xi` to the boundary crossing
/// cloud.
pub fn boundary_gauge_distances(grid: &Grid, xi: Point3) -> Result<(f64, f64)> {
    if !(grid.domain().membership(xi) < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distance query point ({}, {}, {}) is not strictly inside the domain",
            xi.x, xi.y, xi.t
        )));
    }
    let mut inf = f64::INFINITY;
    let mut sup = 0.0_f64;
    for &b in grid.all_crossings() {
        let d = xi.gauge_distance(b);
        inf = inf.min(d);
        sup = sup.max(d);
    }
    if !inf.is_finite() {
        return Err(Error::EmptySurface);
    }
    Ok((inf, sup))
}

/// Boundary-distance ratio `α(ξ) = sup_d / inf_d ≥ 1`.
pub fn alpha_ratio(grid: &Grid, xi: Point3) -> Result<f64> {
    let (inf, sup) = boundary_gauge_distances(grid, xi)?;
    Ok(sup / inf)
}

/// Nodal scalar field over a grid: one value per node, meaningful on interior
/// and boundary nodes (exterior entries are zero and never read by solvers).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
        }
    }

    /// Samples `f` at every interior and boundary node.
    pub fn from_fn(grid: &Grid, f: impl Fn(Point3) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for linear in 0..grid.node_count() {
            if grid.node_class(linear) != NodeClass::Exterior {
                field.values[linear] = f(grid.node_position(linear));
            }
        }
        field
    }

    /// Expands a dense interior vector to a nodal field, zero elsewhere (the
    /// homogeneous-Dirichlet extension).
    pub fn scatter_interior(grid: &Grid, interior: &[f64]) -> Result<Self> {
        if interior.len() != grid.interior_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.interior_count(),
                got: interior.len(),
            });
        }
        let mut field = Self::zeros(grid);
        for (k, &linear) in grid.interior_nodes().iter().enumerate() {
            field.values[linear as usize] = interior[k];
        }
        Ok(field)
    }

    /// Expands interior values plus boundary-slot values to a nodal field.
    pub fn scatter_with_boundary(grid: &Grid, interior: &[f64], boundary: &[f64]) -> Result<Self> {
        if boundary.len() != grid.boundary_nodes().len() {
            return Err(Error::DimensionMismatch {
                expected: grid.boundary_nodes().len(),
                got: boundary.len(),
            });
        }
        let mut field = Self::scatter_interior(grid, interior)?;
        for (slot, &linear) in grid.boundary_nodes().iter().enumerate() {
            field.values[linear as usize] = boundary[slot];
        }
        Ok(field)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Trilinear interpolation at an arbitrary point of the grid box.
    pub fn interpolate(&self, grid: &Grid, p: Point3) -> Result<f64> {
        if self.values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count(),
                got: self.values.len(),
            });
        }
        let coords = [p.x, p.y, p.t];
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let u = (coords[axis] - grid.origin()[axis]) / grid.spacings()[axis];
            let n = grid.counts()[axis];
            if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "interpolation point ({}, {}, {}) outside the grid box",
                    p.x, p.y, p.t
                )));
            }
            let i = (u.floor() as isize).clamp(0, n as isize - 2) as usize;
            cell[axis] = i;
            frac[axis] = (u - i as f64).clamp(0.0, 1.0);
        }
        let mut value = 0.0;
        for corner in 0..8usize {
            let dx = corner & 1;
            let dy = (corner >> 1) & 1;
            let dt = (corner >> 2) & 1;
            let weight = (if dx == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dy == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dt == 1 { frac[2] } else { 1.0 - frac[2] });
            let linear = grid.linear_index([cell[0] + dx, cell[1] + dy, cell[2] + dt]);
            value += weight * self.values[linear];
        }
        Ok(value)
    }
}
