use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::estimation::{admittance_from_branch, branch_current_rows, EstimationError, Measurement, MeasurementKind};
use crate::grid::Grid;

/// `Z = J V` with diagonal measurement covariance `W` (stored as variances).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub j: DMatrix<f64>,
    pub w: DVector<f64>,
    pub z: DVector<f64>,
}

/// Assemble `J`, `W`, `Z`; two rows (real, imaginary) per measurement.
pub fn build_system(measurements: &[Measurement], grid: &Grid) -> Result<LinearSystem, EstimationError> {
    if measurements.is_empty() {
        return Err(EstimationError::Empty);
    }
    let index = grid.bus_index();
    let n = 2 * grid.buses.len();
    let m = 2 * measurements.len();
    let mut j = DMatrix::zeros(m, n);
    let mut w = DVector::zeros(m);
    let mut z = DVector::zeros(m);
    for (k, meas) in measurements.iter().enumerate() {
        let (r, i) = (2 * k, 2 * k + 1);
        let a = *index.get(&meas.bus).ok_or(EstimationError::MissingBus(meas.bus))?;
        match meas.kind {
            MeasurementKind::ScadaV | MeasurementKind::PmuV => {
                j[(r, 2 * a)] = 1.0;
                j[(i, 2 * a + 1)] = 1.0;
            }
            MeasurementKind::PmuI => {
                let nb = meas.branch.ok_or_else(|| EstimationError::Dimension("current without branch".into()))?;
                let br = grid
                    .branches
                    .get(nb.wrapping_sub(1))
                    .ok_or_else(|| EstimationError::Dimension(format!("no branch {nb}")))?;
                let y = admittance_from_branch(br.r, br.x, br.b).map_err(|_| EstimationError::SingularBranch(nb))?;
                let other = if br.from == meas.bus { br.to } else { br.from };
                let b = index[&other];
                let rows = branch_current_rows(&y);
                let cols = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1];
                for (row, coeffs) in [(r, rows[0]), (i, rows[1])] {
                    for (c, v) in cols.iter().zip(coeffs) {
                        j[(row, *c)] += v;
                    }
                }
            }
        }
        w[r] = meas.var_r;
        w[i] = meas.var_i;
        z[r] = meas.z_r;
        z[i] = meas.z_i;
    }
    Ok(LinearSystem { j, w, z })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution {
    pub x: DVector<f64>,
    /// Weighted residual norm `sqrt(r^T W^-1 r)`.
    pub residual_norm: f64,
}

/// Gain matrix `J^T W^-1 J`.
pub(crate) fn gain(j: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = j.clone();
    for (r, mut row) in scaled.row_iter_mut().enumerate() {
        row /= w[r];
    }
    j.transpose() * scaled
}

/// Columns spanned by the numerical null space of the gain matrix.
pub fn observability(g: &DMatrix<f64>) -> Vec<usize> {
    let n = g.nrows();
    let d: Vec<f64> = (0..n).map(|i| g[(i, i)]).collect();
    let mut out: BTreeSet<usize> = (0..n).filter(|&i| d[i] <= 0.0).collect();
    let keep: Vec<usize> = (0..n).filter(|i| !out.contains(i)).collect();
    if keep.is_empty() {
        return out.into_iter().collect();
    }
    // Jacobi scaling so the tolerance does not depend on measurement weights.
    let k = keep.len();
    let normalized = DMatrix::from_fn(k, k, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        g[(i, j)] / (d[i] * d[j]).sqrt()
    });
    let eig = SymmetricEigen::new(normalized);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (idx, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda <= 1e-10 * max.max(1.0) {
            let v = eig.eigenvectors.column(idx);
            for (a, c) in v.iter().enumerate() {
                if c.abs() > 1e-6 {
                    out.insert(keep[a]);
                }
            }
        }
    }
    out.into_iter().collect()
}

fn column_buses(cols: &[usize], buses: Option<&[u32]>) -> Vec<u32> {
    let mut set: BTreeMap<u32, ()> = BTreeMap::new();
    for c in cols {
        let k = c / 2;
        set.insert(buses.map_or(k as u32, |b| b[k]), ());
    }
    set.into_keys().collect()
}

/// `V = (J^T W^-1 J)^-1 J^T W^-1 Z` through a Cholesky factorization.
///
/// On rank deficiency the error lists the buses owning null-space columns
/// (as column pairs `/ 2` when no bus list is available from the caller).
pub fn wls_solve(j: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>) -> Result<WlsSolution, EstimationError> {
    if j.nrows() != w.len() || j.nrows() != z.len() {
        return Err(EstimationError::Dimension(format!(
            "J is {}x{}, W has {}, Z has {}",
            j.nrows(),
            j.ncols(),
            w.len(),
            z.len()
        )));
    }
    if w.iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(EstimationError::Dimension("variances must be positive".into()));
    }
    let g = gain(j, w);
    let null = observability(&g);
    if !null.is_empty() {
        return Err(EstimationError::Unobservable(column_buses(&null, None)));
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| EstimationError::Unobservable(vec![]))?;
    let rhs = j.transpose() * z.component_div(w);
    let x = chol.solve(&rhs);
    Ok(WlsSolution {
        residual_norm: weighted_residual(j, w, z, &x),
        x,
    })
}

pub(crate) fn weighted_residual(j: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let r = z - j * x;
    r.iter().zip(w.iter()).map(|(r, w)| r * r / w).sum::<f64>().sqrt()
}
