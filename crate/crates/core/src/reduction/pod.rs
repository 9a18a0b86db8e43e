//! Proper orthogonal decomposition of pooled response snapshots.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormal reduced basis with its singular-value energy bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    /// `n x n_r` matrix with orthonormal columns (the first `n_r` left
    /// singular vectors of the snapshot matrix).
    pub phi: DMatrix<f64>,
    /// Retained singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// Truncation threshold the basis was built with.
    pub eta: f64,
    /// Snapshot count behind the decomposition.
    pub n_t: usize,
}

impl ReducedBasis {
    pub fn n_full(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_reduced(&self) -> usize {
        self.phi.ncols()
    }

    /// `phi^T seq`: map a full-space sequence (n x t) into the reduced space.
    pub fn project(&self, seq: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if seq.nrows() != self.n_full() {
            return Err(Error::DimensionMismatch(format!(
                "sequence has {} rows, basis expects {}",
                seq.nrows(),
                self.n_full()
            )));
        }
        Ok(self.phi.transpose() * seq)
    }

    /// `phi q`: lift a reduced sequence (n_r x t) back to the full space.
    pub fn lift(&self, reduced: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if reduced.nrows() != self.n_reduced() {
            return Err(Error::DimensionMismatch(format!(
                "reduced sequence has {} rows, basis holds {} modes",
                reduced.nrows(),
                self.n_reduced()
            )));
        }
        Ok(&self.phi * reduced)
    }

    /// Largest deviation of `phi^T phi` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.phi.transpose() * &self.phi;
        let mut defect = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - expect).abs());
            }
        }
        defect
    }
}

/// Pool `n_t` displacement snapshots, spread evenly across samples and time.
///
/// `n_t` must divide evenly across the responses; within each response the
/// snapshots sit at mid-aligned evenly spaced column indices.
pub fn build_snapshot_matrix(responses: &[&DMatrix<f64>], n_t: usize) -> Result<DMatrix<f64>> {
    if responses.is_empty() {
        return Err(Error::Estimator("no responses to snapshot".into()));
    }
    if n_t == 0 || n_t % responses.len() != 0 {
        return Err(Error::Config(format!(
            "snapshot count {n_t} does not divide evenly across {} responses",
            responses.len()
        )));
    }
    let per = n_t / responses.len();
    let n = responses[0].nrows();
    let mut x = DMatrix::zeros(n, n_t);
    let mut col = 0;
    for resp in responses {
        if resp.nrows() != n {
            return Err(Error::DimensionMismatch("response row count".into()));
        }
        let t_cols = resp.ncols();
        if per > t_cols {
            return Err(Error::Config(format!(
                "requested {per} snapshots from a {t_cols}-step response"
            )));
        }
        for j in 0..per {
            let idx = (((j as f64 + 0.5) * t_cols as f64 / per as f64).floor() as usize)
                .min(t_cols - 1);
            x.set_column(col, &resp.column(idx));
            col += 1;
        }
    }
    Ok(x)
}

/// Truncated SVD of the snapshot matrix: keep the smallest mode count whose
/// squared-singular-value energy ratio reaches `eta`.
pub fn pod_truncate(x: &DMatrix<f64>, eta: f64) -> Result<ReducedBasis> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Config("eta must lie in (0, 1]".into()));
    }
    let svd = x.clone().svd(true, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(Error::Estimator("zero snapshot matrix has no POD basis".into()));
    }
    let rank_tol = sv[0] * 1e-12;
    let rank = sv.iter().filter(|&&s| s > rank_tol).count().max(1);
    let n_r = if eta >= 1.0 {
        rank
    } else {
        let mut acc = 0.0;
        let mut n_r = rank;
        for (l, s) in sv.iter().enumerate().take(rank) {
            acc += s * s;
            if acc / total >= eta {
                n_r = l + 1;
                break;
            }
        }
        n_r
    };
    let u = svd.u.expect("left singular vectors requested");
    let phi = u.columns(0, n_r).into_owned();
    Ok(ReducedBasis {
        phi,
        singular_values: sv[..n_r].to_vec(),
        eta,
        n_t: x.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_response_single_snapshot_is_midwindow() {
        let mut resp = DMatrix::zeros(2, 10);
        for j in 0..10 {
            resp[(0, j)] = j as f64;
            resp[(1, j)] = -(j as f64);
        }
        let x = build_snapshot_matrix(&[&resp], 1).unwrap();
        assert_eq!(x.ncols(), 1);
        assert_eq!(x[(0, 0)], 5.0);
        assert_eq!(x[(1, 0)], -5.0);
    }

    #[test]
    fn zero_responses_give_zero_matrix() {
        let resp = DMatrix::zeros(3, 20);
        let x = build_snapshot_matrix(&[&resp, &resp], 10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(x.shape(), (3, 10));
    }

    #[test]
    fn ten_responses_120_each_gives_1200_columns() {
        let resp = DMatrix::from_fn(3, 600, |i, j| (i + 1) as f64 * (j as f64 * 0.01).sin());
        let refs: Vec<&DMatrix<f64>> = (0..10).map(|_| &resp).collect();
        let x = build_snapshot_matrix(&refs, 1200).unwrap();
        assert_eq!(x.ncols(), 1200);
    }

    #[test]
    fn uneven_split_rejected() {
        let resp = DMatrix::zeros(2, 10);
        assert!(build_snapshot_matrix(&[&resp, &resp, &resp], 100).is_err());
    }

    #[test]
    fn rank_one_matrix_keeps_one_mode() {
        let u = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let v = DMatrix::from_row_slice(1, 8, &[1.0, -1.0, 2.0, 0.5, 1.5, -2.0, 0.1, 3.0]);
        let x = &u * &v;
        for eta in [0.1, 0.5, 0.9, 0.99999, 1.0] {
            let basis = pod_truncate(&x, eta).unwrap();
            assert_eq!(basis.n_reduced(), 1, "eta = {eta}");
        }
    }

    #[test]
    fn eta_one_keeps_numerical_rank() {
        let x = DMatrix::from_fn(4, 50, |i, j| ((i * 53 + j * 17) as f64).sin() * ((j + i * i) as f64 * 0.23).cos());
        let basis = pod_truncate(&x, 1.0).unwrap();
        assert_eq!(basis.n_reduced(), 4);
    }

    #[test]
    fn diagonal_energy_anchor() {
        // X = diag(3, 2, 1): lambda^2 energies {9/14, 13/14, 1}; eta = 0.9
        // needs two modes.
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let basis = pod_truncate(&x, 0.9).unwrap();
        assert_eq!(basis.n_reduced(), 2);
        assert!((basis.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((basis.singular_values[1] - 2.0).abs() < 1e-12);
        // Energy bookkeeping holds as computed.
        let kept: f64 = basis.singular_values.iter().map(|s| s * s).sum();
        assert!(kept / 14.0 >= 0.9);
    }

    #[test]
    fn zero_matrix_rejected() {
        let x = DMatrix::zeros(3, 5);
        assert!(pod_truncate(&x, 0.9).is_err());
    }

    #[test]
    fn orthonormal_and_nonincreasing() {
        let x = DMatrix::from_fn(5, 200, |i, j| {
            ((i + 1) as f64 * j as f64 * 0.01).sin() + 0.1 * ((j * i) as f64).cos()
        });
        let basis = pod_truncate(&x, 0.99).unwrap();
        assert!(basis.orthonormality_defect() < 1e-10);
        for w in basis.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn projection_roundtrip_in_span_is_exact() {
        let x = DMatrix::from_fn(4, 60, |i, j| ((i * 3 + j) as f64 * 0.07).sin());
        let basis = pod_truncate(&x, 1.0).unwrap();
        // A sequence already in span(phi).
        let q = DMatrix::from_fn(basis.n_reduced(), 7, |i, j| (i + j) as f64 * 0.3 - 1.0);
        let y = basis.lift(&q).unwrap();
        let back = basis.lift(&basis.project(&y).unwrap()).unwrap();
        let err = (&back - &y).abs().max();
        assert!(err < 1e-10);
    }

    #[test]
    fn orthogonal_component_projects_to_zero() {
        // Snapshots span the xy plane; a z-only sequence projects to zero.
        let x = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 2.0, -1.0, 0.5, 0.3, -0.7, 1.1, 0.9, 0.0, 0.0, 0.0, 0.0],
        );
        let basis = pod_truncate(&x, 1.0).unwrap();
        assert_eq!(basis.n_reduced(), 2);
        let z_only = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, -2.0]);
        let lifted = basis.lift(&basis.project(&z_only).unwrap()).unwrap();
        assert!(lifted.abs().max() < 1e-12);
    }

    #[test]
    fn roundtrip_error_bounded_by_discarded_energy() {
        // Mean squared round-trip error over the training snapshots is at
        // most (1 - eta) of the total energy (SVD optimality).
        let x = DMatrix::from_fn(6, 300, |i, j| {
            ((i + 1) as f64 * 0.31 * j as f64).sin() / (i + 1) as f64
                + 0.01 * ((i * j) as f64).cos()
        });
        let eta = 0.95;
        let basis = pod_truncate(&x, eta).unwrap();
        let projected = basis.lift(&basis.project(&x).unwrap()).unwrap();
        let err2: f64 = (&projected - &x).iter().map(|v| v * v).sum();
        let total: f64 = x.iter().map(|v| v * v).sum();
        assert!(err2 <= (1.0 - eta) * total + 1e-12);
    }
}
