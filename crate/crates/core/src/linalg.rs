//! Dense complex LU with partial pivoting, used only as a small-grid oracle.

use num_complex::Complex64;

/// Solve `a x = b` in place; `a` is row-major `n x n`. Returns `None` if
/// the matrix is numerically singular.
pub fn solve_dense(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))?;
        if a[pivot * n + col].norm() < 1e-300 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
            }
            b.swap(pivot, col);
        }
        let inv = 1.0 / a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] * inv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[row * n + col] = Complex64::new(0.0, 0.0);
            for c in (col + 1)..n {
                let v = a[col * n + c];
                a[row * n + c] -= factor * v;
            }
            let bc = b[col];
            b[row] -= factor * bc;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row * n + c] * b[c];
        }
        b[row] = acc / a[row * n + row];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        let a = vec![c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0), c(3.0, 0.5)];
        let x = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let b = vec![a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]];
        let sol = solve_dense(a, b).unwrap();
        assert!((sol[0] - x[0]).norm() < 1e-14);
        assert!((sol[1] - x[1]).norm() < 1e-14);
    }
}
