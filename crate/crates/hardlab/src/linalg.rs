//! Dense symmetric eigenvalues by cyclic Jacobi rotations.

use crate::Real;

/// Eigenvalues of a symmetric matrix plus an a-posteriori error bound.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Sorted descending.
    pub values: Vec<T>,
    /// Off-diagonal Frobenius norm at exit plus a rounding allowance.
    pub error_bound: T,
    pub sweeps: usize,
}

/// Cyclic Jacobi. Stops once the off-diagonal Frobenius norm is at most `tol`
/// or after `max_sweeps`.
pub fn jacobi_eigenvalues<T: Real>(mut a: Vec<Vec<T>>, tol: T, max_sweeps: usize) -> SymmetricEigen<T> {
    let n = a.len();
    let two = T::one() + T::one();
    let frob = a.iter().flatten().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let off = |a: &Vec<Vec<T>>| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    let mut norm = off(&a);
    while norm > tol && sweeps < max_sweeps {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
        norm = off(&a);
    }
    let mut values: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    values.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    let rounding = T::from_usize(8 * n.max(1)).unwrap() * T::epsilon() * frob;
    SymmetricEigen { values, error_bound: norm + rounding, sweeps }
}
