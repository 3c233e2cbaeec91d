//! Dense complex Gaussian elimination with partial pivoting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest initial entry are
/// treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Solves `a · x = b`.
///
/// Fails with [`Error::SingularMatrix`] when the chosen pivot falls below
/// `PIVOT_THRESHOLD · max|a_ij|`; `context` is carried into the error.
pub fn solve_linear_in(
    a: &DMatrix<C64>,
    b: &DVector<C64>,
    context: &str,
) -> Result<DVector<C64>> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "{context}: matrix {}x{}, rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }

    // row-major working copy, rhs appended as the last column
    let w = n + 1;
    let mut m = vec![C64::new(0.0, 0.0); n * w];
    for i in 0..n {
        for j in 0..n {
            m[i * w + j] = a[(i, j)];
        }
        m[i * w + n] = b[i];
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = PIVOT_THRESHOLD * scale;

    for col in 0..n {
        let (piv_row, piv_abs) = (col..n)
            .map(|r| (r, m[r * w + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= threshold || piv_abs == 0.0 {
            return Err(Error::SingularMatrix {
                context: context.to_string(),
                column: col,
                pivot: piv_abs,
                threshold,
            });
        }
        if piv_row != col {
            for j in col..w {
                m.swap(col * w + j, piv_row * w + j);
            }
        }
        let inv = m[col * w + col].inv();
        for r in col + 1..n {
            let factor = m[r * w + col] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            m[r * w + col] = C64::new(0.0, 0.0);
            for j in col + 1..w {
                let v = m[col * w + j];
                m[r * w + j] -= factor * v;
            }
        }
    }

    let mut x = DVector::from_element(n, C64::new(0.0, 0.0));
    for i in (0..n).rev() {
        let mut acc = m[i * w + n];
        for j in i + 1..n {
            acc -= m[i * w + j] * x[j];
        }
        x[i] = acc / m[i * w + i];
    }
    Ok(x)
}

pub fn solve_linear(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    solve_linear_in(a, b, "linear solve")
}

/// Relative residual `‖a·x − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_residual(a: &DMatrix<C64>, x: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let r = (a * x - b).norm();
    let bn = b.norm();
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity() {
        let a = DMatrix::<C64>::identity(3, 3);
        let b = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        assert_eq!(solve_linear(&a, &b).unwrap(), b);
    }

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        let b = DVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x, DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]));
    }

    #[test]
    fn needs_pivoting() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let b = DVector::from_vec(vec![c(3.0, 0.0), c(5.0, 0.0)]);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x, DVector::from_vec(vec![c(5.0, 0.0), c(3.0, 0.0)]));
    }

    #[test]
    fn random_well_conditioned_8x8() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let mut a = DMatrix::from_fn(8, 8, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            for i in 0..8 {
                a[(i, i)] += c(4.0, 0.0);
            }
            let b = DVector::from_fn(8, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let x = solve_linear(&a, &b).unwrap();
            assert!(relative_residual(&a, &x, &b) <= 1e-10);
        }
    }

    #[test]
    fn ill_conditioned_but_regular() {
        // Hilbert-like matrix scaled to condition ~1e7
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| c(1.0 / (i + j + 1) as f64, 0.0));
        let b = DVector::from_fn(n, |i, _| c(1.0 + i as f64, 0.5));
        let x = solve_linear(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn singular() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let b = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        match solve_linear_in(&a, &b, "test block") {
            Err(Error::SingularMatrix { context, column, .. }) => {
                assert_eq!(context, "test block");
                assert_eq!(column, 1);
            }
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = DMatrix::<C64>::identity(2, 2);
        let b = DVector::from_element(3, c(1.0, 0.0));
        assert!(matches!(solve_linear(&a, &b), Err(Error::Dimension(_))));
    }
}
