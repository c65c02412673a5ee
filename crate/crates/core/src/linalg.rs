//! Dense complex determinants by LU factorization with partial pivoting.

use num_complex::Complex64;

/// Determinant of a row-major `n×n` matrix. A singular matrix yields 0.
pub fn det(mut a: Vec<Complex64>, n: usize) -> Complex64 {
    assert_eq!(a.len(), n * n, "matrix must be n×n");
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        let p = a[pivot * n + col];
        if p.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let c = |r: f64| Complex64::new(r, 0.0);
        assert_eq!(det(vec![c(1.0), c(2.0), c(3.0), c(4.0)], 2), c(-2.0));
    }

    #[test]
    fn singular_is_zero() {
        let c = |r: f64| Complex64::new(r, 0.0);
        assert_eq!(det(vec![c(1.0), c(2.0), c(2.0), c(4.0)], 2), c(0.0));
    }

    #[test]
    fn pivoting_sign() {
        let c = |r: f64| Complex64::new(r, 0.0);
        // permutation matrix of a transposition
        assert_eq!(det(vec![c(0.0), c(1.0), c(1.0), c(0.0)], 2), c(-1.0));
    }
}
