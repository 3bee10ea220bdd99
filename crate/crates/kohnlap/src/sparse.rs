//! Compressed sparse row matrices, a preconditioned conjugate-gradient
//! solver, and a coordinate-text exporter.
//!
//! Everything the assembly and eigensolver layers need, and nothing more:
//! symmetric matrices are stored as plain CSR (both triangles), the only
//! preconditioner is Jacobi, and all loops are sequential so repeated runs
//! produce bit-identical results.

use std::io::Write;

use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_offsets: Vec<u32>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from (row, col, value) triples; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidParameter(format!(
                    "triplet ({r}, {c}) outside a {rows}×{cols} matrix"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0u32);
        let mut cursor = 0usize;
        for row in 0..rows {
            while cursor < entries.len() && entries[cursor].0 == row {
                let col = entries[cursor].1;
                let mut value = entries[cursor].2;
                cursor += 1;
                while cursor < entries.len() && entries[cursor].0 == row && entries[cursor].1 == col
                {
                    value += entries[cursor].2;
                    cursor += 1;
                }
                col_indices.push(col as u32);
                values.push(value);
            }
            row_offsets.push(col_indices.len() as u32);
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds directly from CSR arrays (columns must be sorted within rows).
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_offsets: Vec<u32>,
        col_indices: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1
            || col_indices.len() != values.len()
            || row_offsets.last().copied().unwrap_or(1) as usize != values.len()
            || row_offsets.first().copied().unwrap_or(1) != 0
        {
            return Err(Error::InvalidParameter(
                "inconsistent CSR arrays".to_string(),
            ));
        }
        for row in 0..rows {
            let lo = row_offsets[row] as usize;
            let hi = row_offsets[row + 1] as usize;
            if hi < lo {
                return Err(Error::InvalidParameter(
                    "row offsets must be nondecreasing".to_string(),
                ));
            }
            for k in lo..hi {
                if col_indices[k] as usize >= cols {
                    return Err(Error::InvalidParameter(format!(
                        "column {} outside a {rows}×{cols} matrix",
                        col_indices[k]
                    )));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidParameter(
                        "columns within a row must be strictly increasing".to_string(),
                    ));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n as u32).collect(),
            col_indices: (0..n as u32).collect(),
            values: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry_count(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |row| {
            let lo = self.row_offsets[row] as usize;
            let hi = self.row_offsets[row + 1] as usize;
            (lo..hi).map(move |k| (row, self.col_indices[k] as usize, self.values[k]))
        })
    }

    /// Value at (row, col), zero if not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_offsets[row] as usize;
        let hi = self.row_offsets[row + 1] as usize;
        match self.col_indices[lo..hi].binary_search(&(col as u32)) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Main diagonal as a vector (zero where absent).
    pub fn diagonal_vector(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for (r, c, v) in self.entries() {
            if c < self.rows && r < self.cols {
                defect = defect.max((v - self.get(c, r)).abs());
            } else {
                defect = defect.max(v.abs());
            }
        }
        defect
    }

    /// Matrix-vector product `self · v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// Matrix-vector product into a caller-provided buffer.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        if out.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: out.len(),
            });
        }
        for row in 0..self.rows {
            let lo = self.row_offsets[row] as usize;
            let hi = self.row_offsets[row + 1] as usize;
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * v[self.col_indices[k] as usize];
            }
            out[row] = acc;
        }
        Ok(())
    }

    /// Writes the matrix in coordinate text format: one `row col value` line
    /// per stored entry, indices 1-based, values in shortest round-trip
    /// decimal.
    pub fn write_coordinate_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

/// Report of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A` by Jacobi-
/// preconditioned conjugate gradients, starting from the value of `x` on
/// entry (warm starts are free).
///
/// Stops when `‖b − Ax‖ ≤ tol·‖b‖`; errors with the last residual if
/// `max_iterations` is exhausted first.
pub fn conjugate_gradient(
    a: &SparseOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iterations: usize,
) -> Result<CgOutcome> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidParameter(format!(
            "conjugate gradients needs a square matrix, got {}×{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal_vector()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let norm_b = norm(b);
    if norm_b == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut r = b.to_vec();
    let mut ax = vec![0.0; n];
    a.apply_into(x, &mut ax)?;
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut residual = norm(&r) / norm_b;
    if residual <= tol {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: residual,
        });
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for iteration in 1..=max_iterations {
        a.apply_into(&p, &mut ap)?;
        let p_ap = dot(&p, &ap);
        if !(p_ap > 0.0) {
            return Err(Error::SolverDidNotConverge {
                iterations: iteration,
                residual,
            });
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = norm(&r) / norm_b;
        if residual <= tol {
            return Ok(CgOutcome {
                iterations: iteration,
                relative_residual: residual,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDidNotConverge {
        iterations: max_iterations,
        residual,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseOperator {
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 2.0));
            if i > 0 {
                triplets.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
            }
        }
        SparseOperator::from_triplets(n, n, triplets).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseOperator::from_triplets(
            2,
            2,
            vec![(1, 0, 3.0), (0, 0, 1.0), (1, 0, -1.0), (0, 1, 2.0)],
        )
        .unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.entry_count(), 3);
        let entries: Vec<_> = m.entries().collect();
        assert_eq!(entries, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0)]);
    }

    #[test]
    fn triplets_out_of_range_rejected() {
        assert!(SparseOperator::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn csr_validation() {
        // Unsorted columns within a row.
        assert!(SparseOperator::from_csr(
            1,
            3,
            vec![0, 2],
            vec![2, 1],
            vec![1.0, 2.0]
        )
        .is_err());
        // Offset/value length mismatch.
        assert!(SparseOperator::from_csr(1, 3, vec![0, 1], vec![0, 1], vec![1.0, 2.0]).is_err());
        let ok = SparseOperator::from_csr(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 2.0]).unwrap();
        assert_eq!(ok.get(0, 2), 2.0);
    }

    #[test]
    fn matvec_matches_hand_computation() {
        let m = laplacian_1d(3);
        let y = m.apply(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 4.0]);
        assert!(m.apply(&[1.0]).is_err());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        assert_eq!(laplacian_1d(5).symmetry_defect(), 0.0);
        let skew =
            SparseOperator::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 0.5)]).unwrap();
        assert_eq!(skew.symmetry_defect(), 0.5);
    }

    #[test]
    fn diagonal_matrix_and_extraction() {
        let d = SparseOperator::diagonal(&[2.0, 3.0, 4.0]);
        assert_eq!(d.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(d.diagonal_vector(), vec![2.0, 3.0, 4.0]);
        assert_eq!(laplacian_1d(4).diagonal_vector(), vec![2.0; 4]);
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 50;
        let a = laplacian_1d(n);
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let outcome = conjugate_gradient(&a, &b, &mut x, 1e-12, 10 * n).unwrap();
        assert!(outcome.relative_residual <= 1e-12);
        // Residual check against the definition.
        let r = a.apply(&x).unwrap();
        let defect: f64 = r
            .iter()
            .zip(&b)
            .map(|(ri, bi)| (ri - bi).abs())
            .fold(0.0, f64::max);
        assert!(defect < 1e-9, "defect {defect}");
        // Exact solution of the 1D Poisson problem is quadratic in the node
        // index; check the midpoint value n(n+1)/2 - mid², scaled.
        let mid = n / 2;
        let exact = 0.5 * (mid + 1) as f64 * (n - mid) as f64;
        assert!((x[mid] - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn cg_warm_start_from_solution_returns_immediately() {
        let a = laplacian_1d(20);
        let b = vec![1.0; 20];
        let mut x = vec![0.0; 20];
        conjugate_gradient(&a, &b, &mut x, 1e-13, 400).unwrap();
        let warm = conjugate_gradient(&a, &b, &mut x, 1e-10, 400).unwrap();
        assert_eq!(warm.iterations, 0);
    }

    #[test]
    fn cg_iteration_cap_errors_with_last_residual() {
        let a = laplacian_1d(100);
        let b = vec![1.0; 100];
        let mut x = vec![0.0; 100];
        match conjugate_gradient(&a, &b, &mut x, 1e-14, 2) {
            Err(Error::SolverDidNotConverge {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let a = laplacian_1d(10);
        let b = vec![0.0; 10];
        let mut x = vec![3.0; 10];
        let outcome = conjugate_gradient(&a, &b, &mut x, 1e-12, 10).unwrap();
        assert_eq!(outcome.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coordinate_export_is_one_based() {
        let m =
            SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.5), (1, 0, -2.0)]).unwrap();
        let mut buffer = Vec::new();
        m.write_coordinate_text(&mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, "1 1 1.5\n2 1 -2\n");
    }
}
