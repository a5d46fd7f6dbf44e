//! Tiny dense linear algebra for the n ≤ 4 matrices the engine meets:
//! symmetric eigenvalues by cyclic Jacobi rotations. Hand-rolled on purpose
//! — pulling in a full linear-algebra stack for 3×3 symmetric matrices is
//! not worth the dependency.

/// Eigenvalues of a symmetric matrix (row-major, n×n), ascending.
pub(crate) fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // Cyclic Jacobi: annihilate each off-diagonal pair until the
    // off-diagonal mass is negligible relative to the matrix scale.
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                // Stable tangent of the rotation angle.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}

/// Inverse of a dense matrix (row-major, n×n) by Gauss–Jordan elimination
/// with partial pivoting; `None` when numerically singular.
pub(crate) fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                m[r1 * n + col]
                    .abs()
                    .partial_cmp(&m[r2 * n + col].abs())
                    .expect("finite matrix entries")
            })
            .expect("non-empty pivot range");
        let pivot = m[pivot_row * n + col];
        if pivot.abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
                inv.swap(col * n + k, pivot_row * n + k);
            }
        }
        let inv_pivot = 1.0 / m[col * n + col];
        for k in 0..n {
            m[col * n + k] *= inv_pivot;
            inv[col * n + k] *= inv_pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                m[row * n + k] -= factor * m[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = [2.0, 1.0, 0.5, 1.0, 3.0, 0.0, 0.5, 0.0, 1.5];
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += a[i * 3 + k] * inv[k * 3 + j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn known_spectrum() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let eigs = sym_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_reports_negative_eigenvalue() {
        // [[0, 1], [1, 0]] has eigenvalues ±1.
        let eigs = sym_eigenvalues(&[0.0, 1.0, 1.0, 0.0], 2);
        assert!(eigs[0] < 0.0);
        assert!((eigs[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_by_three_diagonal_plus_rank_one() {
        // diag(1,2,3) + 0.1 * ones: trace preserved.
        let mut a = vec![0.1; 9];
        a[0] += 1.0;
        a[4] += 2.0;
        a[8] += 3.0;
        let eigs = sym_eigenvalues(&a, 3);
        let trace: f64 = eigs.iter().sum();
        assert!((trace - 6.3).abs() < 1e-12);
        assert!(eigs[0] > 0.9 && eigs[2] < 3.2);
    }
}
