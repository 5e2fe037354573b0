//! Small dense linear algebra: Gauss-Jordan inversion for the stiffness
//! and normal-equation matrices, and 3×3 complex helpers for the spin
//! rotating frame.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverts a row-major `n×n` matrix with partial pivoting.
///
/// A pivot whose magnitude falls below `n·ε·max|a_ij|` is reported as
/// singular together with its column index.
pub fn invert_dense<T: Real>(a: &[T], n: usize, context: &'static str) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return Err(Error::Singular {
            context,
            pivot: 0,
            magnitude: scale.as_f64(),
        });
    }
    let threshold = scale * T::epsilon() * T::lit(n as f64);
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                m[r1 * n + col]
                    .abs()
                    .partial_cmp(&m[r2 * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        let pivot = m[pivot_row * n + col];
        if pivot.abs() <= threshold || !pivot.is_finite() {
            return Err(Error::Singular {
                context,
                pivot: col,
                magnitude: pivot.abs().as_f64(),
            });
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
                inv.swap(col * n + k, pivot_row * n + k);
            }
        }
        let p_inv = T::one() / pivot;
        for k in 0..n {
            m[col * n + k] *= p_inv;
            inv[col * n + k] *= p_inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == T::zero() {
                continue;
            }
            for k in 0..n {
                let mv = m[col * n + k];
                let iv = inv[col * n + k];
                m[r * n + k] -= f * mv;
                inv[r * n + k] -= f * iv;
            }
        }
    }
    Ok(inv)
}

/// Fixed-size wrapper around [`invert_dense`].
pub fn invert<T: Real, const N: usize>(
    a: &[[T; N]; N],
    context: &'static str,
) -> Result<[[T; N]; N]> {
    let flat: Vec<T> = a.iter().flat_map(|r| r.iter().copied()).collect();
    let inv = invert_dense(&flat, N, context)?;
    let mut out = [[T::zero(); N]; N];
    for (i, row) in out.iter_mut().enumerate() {
        row.copy_from_slice(&inv[i * N..(i + 1) * N]);
    }
    Ok(out)
}

pub fn mat_vec<T: Real, const N: usize>(a: &[[T; N]; N], v: &[T; N]) -> [T; N] {
    let mut out = [T::zero(); N];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(v).map(|(&x, &y)| x * y).sum();
    }
    out
}

/// `a · b` for real 3×3 matrices.
pub fn mat3_mul<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose3<T: Real>(a: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det3<T: Real>(a: &[[T; 3]; 3]) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Complex 3×3 matrix, row-major.
pub type CMat3<T> = [[Complex<T>; 3]; 3];

pub fn cmat3_zero<T: Real>() -> CMat3<T> {
    [[Complex::new(T::zero(), T::zero()); 3]; 3]
}

pub fn cmat3_identity<T: Real>() -> CMat3<T> {
    let mut m = cmat3_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex::new(T::one(), T::zero());
    }
    m
}

pub fn cmat3_mul<T: Real>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    let mut out = cmat3_zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..3 {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn cmat3_add<T: Real>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn cmat3_scale<T: Real>(a: &CMat3<T>, s: Complex<T>) -> CMat3<T> {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn cmat3_dagger<T: Real>(a: &CMat3<T>) -> CMat3<T> {
    let mut out = cmat3_zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn cmat3_apply<T: Real>(a: &CMat3<T>, v: &[Complex<T>; 3]) -> [Complex<T>; 3] {
    let mut out = [Complex::new(T::zero(), T::zero()); 3];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

/// Largest elementwise deviation from Hermiticity.
pub fn cmat3_hermiticity_error<T: Real>(a: &CMat3<T>) -> T {
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

/// Max-abs-row-sum norm.
pub fn cmat3_norm_inf<T: Real>(a: &CMat3<T>) -> T {
    a.iter()
        .map(|row| row.iter().map(|v| v.norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// `exp(-i·H·dt)` for a Hermitian 3×3 `H`, by scaling and squaring a Taylor
/// series. The squaring count keeps the scaled argument below 1/2, where
/// 18 terms are accurate to machine precision.
pub fn unitary_step<T: Real>(h: &CMat3<T>, dt: T) -> CMat3<T> {
    let a = cmat3_scale(h, Complex::new(T::zero(), -dt));
    let norm = cmat3_norm_inf(&a);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let half = T::lit(0.5);
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let a = cmat3_scale(&a, Complex::new(scale, T::zero()));
    let mut term = cmat3_identity::<T>();
    let mut sum = cmat3_identity::<T>();
    for k in 1..=18 {
        term = cmat3_scale(&cmat3_mul(&term, &a), Complex::new(T::one() / T::lit(k as f64), T::zero()));
        sum = cmat3_add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = cmat3_mul(&sum, &sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_well_conditioned_matrix() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = invert(&a, "test").unwrap();
        let prod = mat3_mul(&a, &inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expected: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        match invert(&a, "test") {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
        let zero = [[0.0_f64; 2]; 2];
        assert!(matches!(invert(&zero, "z"), Err(Error::Singular { .. })));
    }

    #[test]
    fn unitary_step_matches_two_level_rotation() {
        // H = (Ω/2)σx on levels 0 and 2.
        let omega = 3.0_f64;
        let mut h = cmat3_zero::<f64>();
        h[0][2] = Complex::new(omega / 2.0, 0.0);
        h[2][0] = Complex::new(omega / 2.0, 0.0);
        let t = 0.7;
        let u = unitary_step(&h, t);
        let c = (omega * t / 2.0).cos();
        let s = (omega * t / 2.0).sin();
        assert!((u[0][0] - Complex::new(c, 0.0)).norm() < 1e-14);
        assert!((u[0][2] - Complex::new(0.0, -s)).norm() < 1e-14);
        assert!((u[1][1] - Complex::new(1.0, 0.0)).norm() < 1e-14);
        let uu = cmat3_mul(&u, &cmat3_dagger(&u));
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((uu[i][j] - Complex::new(e, 0.0)).norm() < 1e-13);
            }
        }
    }
}
