//! Assembly of the discrete operator `−Δ_H = −(X² + Y²)` in divergence form,
//! together with plain and weighted mass matrices.
//!
//! The divergence form uses the coefficient field `A = B·Bᵀ`, where the
//! columns of `B` are the coefficient vectors of `X = (1, 0, 2y)` and
//! `Y = (0, 1, −2x)`. Each grid cell is treated as a trilinear element: at
//! 2×2×2 Gauss points the horizontal derivatives `Xu` and `Yu` of the
//! trilinear interpolant are formed directly from the rows of `Bᵀ∇`, and the
//! local matrix is their Gram matrix. The result is exactly symmetric and
//! positive semidefinite by construction, and
//! `vᵀKu ≈ ∫ ⟨A∇u, ∇v⟩ = ∫ (Xu·Xv + Yu·Yv)`.
//!
//! Dirichlet conditions are imposed by elimination: only interior rows are
//! assembled, split into the interior-interior block and the coupling block
//! to boundary-shell columns (used for harmonic extensions of boundary data).

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grid::{Grid, NodeClass, ScalarField};
use crate::sparse::SparseOperator;

/// Coefficient field of the divergence-form operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficients {
    /// The horizontal Gram field `A(x, y) = [[1,0,2y],[0,1,−2x],[2y,−2x,4(x²+y²)]]`.
    Horizontal,
    /// Identity coefficients: the ordinary Dirichlet Laplacian, used to
    /// calibrate the assembly and eigensolver against classical closed forms.
    Euclidean,
}

impl Coefficients {
    /// The 3×3 coefficient matrix at a point.
    pub fn matrix_at(self, p: Point3) -> [[f64; 3]; 3] {
        match self {
            Coefficients::Horizontal => {
                let (x, y) = (p.x, p.y);
                [
                    [1.0, 0.0, 2.0 * y],
                    [0.0, 1.0, -2.0 * x],
                    [2.0 * y, -2.0 * x, 4.0 * (x * x + y * y)],
                ]
            }
            Coefficients::Euclidean => [
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
        }
    }

    /// Derivative rows (the columns of `B`) contracted against a shape
    /// gradient: one entry per first-order field of the form.
    fn derivative_rows(self, p: Point3, gradient: [f64; 3]) -> [f64; 3] {
        match self {
            Coefficients::Horizontal => [
                gradient[0] + 2.0 * p.y * gradient[2],
                gradient[1] - 2.0 * p.x * gradient[2],
                0.0,
            ],
            Coefficients::Euclidean => gradient,
        }
    }

    fn row_count(self) -> usize {
        match self {
            Coefficients::Horizontal => 2,
            Coefficients::Euclidean => 3,
        }
    }
}

/// The assembled Dirichlet operator: interior-interior block plus the
/// coupling of interior rows to boundary-shell columns.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    interior: SparseOperator,
    coupling: SparseOperator,
}

impl StiffnessOperator {
    /// Symmetric PSD block over interior nodes (dense interior numbering).
    pub fn interior(&self) -> &SparseOperator {
        &self.interior
    }

    /// Interior-rows × boundary-slot-columns coupling block.
    pub fn coupling(&self) -> &SparseOperator {
        &self.coupling
    }

    /// Residual `K_ii·u_i + K_ib·u_b` of a field with interior values `u_i`
    /// and boundary data `u_b`.
    pub fn apply_with_boundary(&self, interior: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.interior.apply(interior)?;
        let coupled = self.coupling.apply(boundary)?;
        for (o, c) in out.iter_mut().zip(&coupled) {
            *o += c;
        }
        Ok(out)
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // 1/(2√3)
const GAUSS_COORDS: [f64; 2] = [0.5 - GAUSS_OFFSET, 0.5 + GAUSS_OFFSET];

/// Assembles the stiffness operator on a grid.
pub fn assemble_stiffness(grid: &Grid, coefficients: Coefficients) -> Result<StiffnessOperator> {
    let h = grid.spacings();
    if h.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "degenerate grid spacings {h:?}"
        )));
    }
    let (mut interior, mut coupling) = build_patterns(grid);

    let [nx, ny, nt] = grid.counts();
    let cell_volume = grid.cell_volume();
    let gauss_weight = cell_volume / 8.0;
    let rows = coefficients.row_count();

    let mut corner_linear = [0usize; 8];
    let mut corner_rows = [[0.0f64; 8]; 3];
    let mut local = [[0.0f64; 8]; 8];

    for it in 0..nt - 1 {
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                let mut any_interior = false;
                for c in 0..8 {
                    let linear = grid.linear_index([ix + (c & 1), iy + ((c >> 1) & 1), it + (c >> 2)]);
                    corner_linear[c] = linear;
                    any_interior |= grid.node_class(linear) == NodeClass::Interior;
                }
                if !any_interior {
                    continue;
                }
                let base = grid.node_position(grid.linear_index([ix, iy, it]));
                for row in local.iter_mut() {
                    row.fill(0.0);
                }
                for gw in 0..2 {
                    for gv in 0..2 {
                        for gu in 0..2 {
                            let u = [GAUSS_COORDS[gu], GAUSS_COORDS[gv], GAUSS_COORDS[gw]];
                            let p = Point3::new(
                                base.x + u[0] * h[0],
                                base.y + u[1] * h[1],
                                base.t + u[2] * h[2],
                            );
                            for c in 0..8 {
                                let bits = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
                                let shape = [
                                    if bits[0] == 1 { u[0] } else { 1.0 - u[0] },
                                    if bits[1] == 1 { u[1] } else { 1.0 - u[1] },
                                    if bits[2] == 1 { u[2] } else { 1.0 - u[2] },
                                ];
                                let sign = |b: usize| if b == 1 { 1.0 } else { -1.0 };
                                let gradient = [
                                    sign(bits[0]) / h[0] * shape[1] * shape[2],
                                    shape[0] * sign(bits[1]) / h[1] * shape[2],
                                    shape[0] * shape[1] * sign(bits[2]) / h[2],
                                ];
                                let d = coefficients.derivative_rows(p, gradient);
                                corner_rows[0][c] = d[0];
                                corner_rows[1][c] = d[1];
                                corner_rows[2][c] = d[2];
                            }
                            for c in 0..8 {
                                for d in c..8 {
                                    let mut g = 0.0;
                                    for row in corner_rows.iter().take(rows) {
                                        g += row[c] * row[d];
                                    }
                                    local[c][d] += gauss_weight * g;
                                }
                            }
                        }
                    }
                }
                // Mirror the strict upper triangle so scattering is exactly
                // symmetric entry for entry.
                for c in 0..8 {
                    for d in 0..c {
                        local[c][d] = local[d][c];
                    }
                }
                for c in 0..8 {
                    let row = match grid.interior_index(corner_linear[c]) {
                        Some(r) => r,
                        None => continue,
                    };
                    for d in 0..8 {
                        let value = local[c][d];
                        match grid.node_class(corner_linear[d]) {
                            NodeClass::Interior => {
                                let col = grid.interior_index(corner_linear[d]).unwrap();
                                interior.add(row, col as u32, value);
                            }
                            NodeClass::Boundary => {
                                let col = grid.boundary_slot(corner_linear[d]).unwrap();
                                coupling.add(row, col as u32, value);
                            }
                            NodeClass::Exterior => unreachable!(
                                "a cell with an interior corner has no exterior corners"
                            ),
                        }
                    }
                }
            }
        }
    }

    Ok(StiffnessOperator {
        interior: interior.finish(grid.interior_count(), grid.interior_count())?,
        coupling: coupling.finish(grid.interior_count(), grid.boundary_nodes().len())?,
    })
}

/// CSR skeleton with slot lookup by binary search within a row.
struct Pattern {
    row_offsets: Vec<u32>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl Pattern {
    fn add(&mut self, row: usize, col: u32, value: f64) {
        let lo = self.row_offsets[row] as usize;
        let hi = self.row_offsets[row + 1] as usize;
        let k = self.col_indices[lo..hi]
            .binary_search(&col)
            .expect("stencil pattern covers all cell couplings");
        self.values[lo + k] += value;
    }

    fn finish(self, rows: usize, cols: usize) -> Result<SparseOperator> {
        SparseOperator::from_csr(rows, cols, self.row_offsets, self.col_indices, self.values)
    }
}

/// Precomputes, for every interior row, the sorted interior and boundary
/// columns of its 27-node neighborhood.
fn build_patterns(grid: &Grid) -> (Pattern, Pattern) {
    let [nx, ny, nt] = grid.counts();
    let mut interior = Pattern {
        row_offsets: Vec::with_capacity(grid.interior_count() + 1),
        col_indices: Vec::new(),
        values: Vec::new(),
    };
    let mut coupling = Pattern {
        row_offsets: Vec::with_capacity(grid.interior_count() + 1),
        col_indices: Vec::new(),
        values: Vec::new(),
    };
    interior.row_offsets.push(0);
    coupling.row_offsets.push(0);
    for &linear in grid.interior_nodes() {
        let [ix, iy, it] = grid.node_indices(linear as usize);
        for dt in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let j = [ix as i64 + dx, iy as i64 + dy, it as i64 + dt];
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
                    match grid.node_class(neighbor) {
                        NodeClass::Interior => interior
                            .col_indices
                            .push(grid.interior_index(neighbor).unwrap() as u32),
                        NodeClass::Boundary => coupling
                            .col_indices
                            .push(grid.boundary_slot(neighbor).unwrap() as u32),
                        NodeClass::Exterior => {}
                    }
                }
            }
        }
        // Offsets within the neighborhood ascend with linear id, and both
        // dense numberings ascend with linear id, so each row is sorted.
        interior.row_offsets.push(interior.col_indices.len() as u32);
        coupling.row_offsets.push(coupling.col_indices.len() as u32);
    }
    interior.values = vec![0.0; interior.col_indices.len()];
    coupling.values = vec![0.0; coupling.col_indices.len()];
    (interior, coupling)
}

/// How the diagonal mass entries measure node volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeWeights {
    /// Every interior node counts one full cell volume.
    FullCell,
    /// Each node counts the fraction of its dual cell inside the domain
    /// (4×4×4 subsampling); sharpens boundary-layer quadrature on curved
    /// domains.
    ClippedToDomain,
}

/// Smallest admissible clipped fraction: keeps the mass matrix positive
/// definite if subsampling misses a sliver-shaped dual cell entirely.
const MIN_CLIPPED_FRACTION: f64 = 1.0 / 64.0;

/// Diagonal mass matrix over interior nodes: node volume, optionally times a
/// nonnegative nodal weight field.
pub fn assemble_mass(
    grid: &Grid,
    volumes: VolumeWeights,
    weight: Option<&ScalarField>,
) -> Result<SparseOperator> {
    let cell_volume = grid.cell_volume();
    let mut diag = Vec::with_capacity(grid.interior_count());
    for &linear in grid.interior_nodes() {
        let volume = match volumes {
            VolumeWeights::FullCell => cell_volume,
            VolumeWeights::ClippedToDomain => {
                cell_volume
                    * grid
                        .dual_cell_inside_fraction(linear as usize)
                        .max(MIN_CLIPPED_FRACTION)
            }
        };
        let w = match weight {
            None => 1.0,
            Some(field) => {
                let value = field.values()[linear as usize];
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "mass weight must be nonnegative and finite, got {value} at node {linear}"
                    )));
                }
                value
            }
        };
        diag.push(volume * w);
    }
    Ok(SparseOperator::diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::geometry::horizontal_weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball_grid(n: usize) -> Grid {
        let ball = Domain::gauge_ball(Point3::origin(), 1.0).unwrap();
        Grid::build(ball, [n, n, n], 0.05).unwrap()
    }

    /// Interior nodes whose entire 27-neighborhood is interior.
    fn deep_rows(grid: &Grid) -> Vec<usize> {
        let [nx, ny, nt] = grid.counts();
        grid.interior_nodes()
            .iter()
            .filter_map(|&linear| {
                let [ix, iy, it] = grid.node_indices(linear as usize);
                if ix == 0 || iy == 0 || it == 0 || ix == nx - 1 || iy == ny - 1 || it == nt - 1 {
                    return None;
                }
                let mut deep = true;
                for dt in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let j = grid.linear_index([
                                (ix as i64 + dx) as usize,
                                (iy as i64 + dy) as usize,
                                (it as i64 + dt) as usize,
                            ]);
                            deep &= grid.node_class(j) == NodeClass::Interior;
                        }
                    }
                }
                deep.then(|| grid.interior_index(linear as usize).unwrap())
            })
            .collect()
    }

    fn sample_interior(grid: &Grid, f: impl Fn(Point3) -> f64) -> Vec<f64> {
        grid.interior_nodes()
            .iter()
            .map(|&l| f(grid.node_position(l as usize)))
            .collect()
    }

    fn sample_boundary(grid: &Grid, f: impl Fn(Point3) -> f64) -> Vec<f64> {
        grid.boundary_nodes()
            .iter()
            .map(|&l| f(grid.node_position(l as usize)))
            .collect()
    }

    #[test]
    fn coefficient_matrix_is_the_gram_of_the_fields() {
        let p = Point3::new(0.7, -1.3, 0.4);
        let a = Coefficients::Horizontal.matrix_at(p);
        let x_row = [1.0, 0.0, 2.0 * p.y];
        let y_row = [0.0, 1.0, -2.0 * p.x];
        for i in 0..3 {
            for j in 0..3 {
                let expect = x_row[i] * x_row[j] + y_row[i] * y_row[j];
                assert!((a[i][j] - expect).abs() < 1e-15);
                assert_eq!(a[i][j], a[j][i]);
            }
        }
        // Rank-2 degeneracy: A annihilates (2y, −2x, −1).
        let null = [2.0 * p.y, -2.0 * p.x, -1.0];
        for row in a {
            let dot: f64 = row.iter().zip(&null).map(|(r, n)| r * n).sum();
            assert!(dot.abs() < 1e-14);
        }
        assert_eq!(
            Coefficients::Euclidean.matrix_at(p),
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn stiffness_is_exactly_symmetric_and_psd() {
        let grid = ball_grid(14);
        let op = assemble_stiffness(&grid, Coefficients::Horizontal).unwrap();
        assert_eq!(op.interior().symmetry_defect(), 0.0);

        let n = grid.interior_count();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let kv = op.interior().apply(&v).unwrap();
            let energy = crate::sparse::dot(&v, &kv);
            let norm2 = crate::sparse::dot(&v, &v);
            assert!(energy >= -1e-10 * norm2, "negative energy {energy}");
        }
    }

    #[test]
    fn quadratic_radial_profile_reproduced_exactly() {
        // u = x² + y² has X²u + Y²u = 4; deep interior rows must return
        // −4·cellvol at roundoff level.
        let grid = ball_grid(18);
        let op = assemble_stiffness(&grid, Coefficients::Horizontal).unwrap();
        let ui = sample_interior(&grid, |p| p.x * p.x + p.y * p.y);
        let ub = sample_boundary(&grid, |p| p.x * p.x + p.y * p.y);
        let r = op.apply_with_boundary(&ui, &ub).unwrap();
        let cellvol = grid.cell_volume();
        let deep = deep_rows(&grid);
        assert!(deep.len() > 100);
        for row in deep {
            let value = r[row] / cellvol;
            assert!(
                (value - -4.0).abs() < 1e-8,
                "row {row}: (Ku)/vol = {value}"
            );
        }
    }

    #[test]
    fn vertical_coordinate_is_harmonic() {
        // u = t: Xu = 2y, X(2y) = 0; Yu = −2x, Y(−2x) = 0.
        let grid = ball_grid(18);
        let op = assemble_stiffness(&grid, Coefficients::Horizontal).unwrap();
        let ui = sample_interior(&grid, |p| p.t);
        let ub = sample_boundary(&grid, |p| p.t);
        let r = op.apply_with_boundary(&ui, &ub).unwrap();
        let cellvol = grid.cell_volume();
        for row in deep_rows(&grid) {
            assert!(
                (r[row] / cellvol).abs() < 1e-8,
                "row {row}: residual {}",
                r[row] / cellvol
            );
        }
    }

    #[test]
    fn euclidean_coefficients_reproduce_the_laplacian() {
        let cube = Domain::axis_box([0.0; 3], [1.0; 3]).unwrap();
        let grid = Grid::build(cube, [17, 17, 17], 0.0).unwrap();
        let op = assemble_stiffness(&grid, Coefficients::Euclidean).unwrap();
        let ui = sample_interior(&grid, |p| p.x * p.x);
        let ub = sample_boundary(&grid, |p| p.x * p.x);
        let r = op.apply_with_boundary(&ui, &ub).unwrap();
        let cellvol = grid.cell_volume();
        for row in deep_rows(&grid) {
            let value = r[row] / cellvol;
            assert!((value - -2.0).abs() < 1e-9, "(Ku)/vol = {value}");
        }
    }

    #[test]
    fn mass_trace_measures_volume() {
        let grid = ball_grid(24);
        let m = assemble_mass(&grid, VolumeWeights::FullCell, None).unwrap();
        let trace: f64 = m.diagonal_vector().iter().sum();
        let counted = grid.interior_count() as f64 * grid.cell_volume();
        assert!((trace - counted).abs() < 1e-12 * counted);

        let clipped = assemble_mass(&grid, VolumeWeights::ClippedToDomain, None).unwrap();
        let clipped_trace: f64 = clipped.diagonal_vector().iter().sum();
        let exact = std::f64::consts::PI * std::f64::consts::PI / 2.0;
        assert!(
            (clipped_trace - exact).abs() / exact < 0.05,
            "clipped trace {clipped_trace} vs {exact}"
        );
    }

    #[test]
    fn weighted_mass_matches_psi_integral() {
        let grid = ball_grid(24);
        let psi = ScalarField::from_fn(&grid, horizontal_weight);
        let m = assemble_mass(&grid, VolumeWeights::ClippedToDomain, Some(&psi)).unwrap();
        let trace: f64 = m.diagonal_vector().iter().sum();
        let exact = std::f64::consts::PI; // ∫_B ψ over the unit gauge ball
        assert!(
            (trace - exact).abs() / exact < 0.1,
            "ψ-weighted trace {trace} vs {exact}"
        );
    }

    #[test]
    fn unit_weight_reproduces_unweighted_mass() {
        let grid = ball_grid(12);
        let ones = ScalarField::from_fn(&grid, |_| 1.0);
        let a = assemble_mass(&grid, VolumeWeights::FullCell, None).unwrap();
        let b = assemble_mass(&grid, VolumeWeights::FullCell, Some(&ones)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let grid = ball_grid(12);
        let bad = ScalarField::from_fn(&grid, |p| p.t);
        assert!(assemble_mass(&grid, VolumeWeights::FullCell, Some(&bad)).is_err());
    }

    #[test]
    fn coupling_block_sees_boundary_data() {
        // A constant field (interior and boundary all ones) is in the kernel
        // of the full operator: K_ii·1 + K_ib·1 = 0 row-wise, because the
        // element Gram rows annihilate constants.
        let grid = ball_grid(14);
        let op = assemble_stiffness(&grid, Coefficients::Horizontal).unwrap();
        let ones_i = vec![1.0; grid.interior_count()];
        let ones_b = vec![1.0; grid.boundary_nodes().len()];
        let r = op.apply_with_boundary(&ones_i, &ones_b).unwrap();
        let scale = grid.cell_volume();
        for (row, &value) in r.iter().enumerate() {
            assert!(
                value.abs() < 1e-9 * scale.max(1.0),
                "row {row} of K·1 = {value}"
            );
        }
    }
}
