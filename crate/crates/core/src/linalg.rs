//! Dense complex/real linear algebra helpers.
//!
//! Matrices in this crate are at most 32×32 (Hilbert dimension ≤ 16, realified
//! dimension ≤ 32), so a cyclic Jacobi eigensolver is both adequate and
//! dependency-free. Complex Hermitian problems are solved through the standard
//! realification embedding A → [[Re A, −Im A], [Im A, Re A]].

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::scalar::Scalar;

/// Conjugate transpose.
pub fn dagger<T: Scalar>(m: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    let (r, c) = m.dim();
    Array2::from_shape_fn((c, r), |(i, j)| m[(j, i)].conj())
}

/// Outer product |a⟩⟨b|.
pub fn outer<T: Scalar>(a: &Array1<Complex<T>>, b: &Array1<Complex<T>>) -> Array2<Complex<T>> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j].conj())
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(m: &Array2<Complex<T>>) -> T {
    m.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), T::max)
        .sqrt()
}

/// Largest absolute entry of a real matrix.
pub fn max_abs_real<T: Scalar>(m: &Array2<T>) -> T {
    m.iter().map(|x| x.abs()).fold(T::zero(), T::max)
}

/// ‖M − M⁺‖_max.
pub fn hermiticity_deviation<T: Scalar>(m: &Array2<Complex<T>>) -> T {
    let (r, c) = m.dim();
    if r != c {
        return T::infinity();
    }
    let mut dev = T::zero();
    for i in 0..r {
        for j in 0..c {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm_sqr().sqrt();
            dev = dev.max(d);
        }
    }
    dev
}

/// Complex identity matrix.
pub fn eye<T: Scalar>(n: usize) -> Array2<Complex<T>> {
    Array2::eye(n)
}

/// Trace of a complex matrix.
pub fn trace<T: Scalar>(m: &Array2<Complex<T>>) -> Complex<T> {
    m.diag().iter().copied().sum()
}

/// Real part of Tr(A·B), evaluated without forming the product.
pub fn trace_product_re<T: Scalar>(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> T {
    let n = a.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of an orthogonal matrix.
pub fn jacobi_eigh<T: Scalar>(a: &Array2<T>) -> (Array1<T>, Array2<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigh needs a square matrix");
    let mut m = a.clone();
    let mut v: Array2<T> = Array2::eye(n);
    let scale = max_abs_real(a).max(T::min_positive_value());

    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= T::JACOBI_TOL * scale {
            break;
        }
        for p in 0..(n.saturating_sub(1)) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::JACOBI_TOL * scale {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::real(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);

                let app = m[(p, p)];
                let aqq = m[(q, q)];
                m[(p, p)] = app - t * apq;
                m[(q, q)] = aqq + t * apq;
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[(i, p)];
                        let aiq = m[(i, q)];
                        m[(i, p)] = aip - s * (aiq + tau * aip);
                        m[(i, q)] = aiq + s * (aip - tau * aiq);
                        m[(p, i)] = m[(i, p)];
                        m[(q, i)] = m[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q)] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .expect("eigenvalues are finite")
    });
    let vals = Array1::from_iter(order.iter().map(|&i| m[(i, i)]));
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| v[(r, order[c])]);
    (vals, vecs)
}

/// Realification of a complex matrix: [[Re, −Im], [Im, Re]].
pub fn realify_matrix<T: Scalar>(m: &Array2<Complex<T>>) -> Array2<T> {
    let n = m.nrows();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
            out[(i + n, j + n)] = z.re;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The realified embedding carries each eigenvalue twice; the pairs are
/// collapsed back to the s physical eigenvalues.
pub fn eigvalsh<T: Scalar>(m: &Array2<Complex<T>>) -> Array1<T> {
    let n = m.nrows();
    let (vals, _) = jacobi_eigh(&realify_matrix(m));
    Array1::from_iter((0..n).map(|k| (vals[2 * k] + vals[2 * k + 1]) * T::real(0.5)))
}

/// Eigenvector of the largest eigenvalue of a Hermitian matrix.
pub fn dominant_eigvec<T: Scalar>(m: &Array2<Complex<T>>) -> Array1<Complex<T>> {
    let n = m.nrows();
    let (_, vecs) = jacobi_eigh(&realify_matrix(m));
    let col = vecs.column(2 * n - 1);
    let mut v = Array1::from_shape_fn(n, |i| Complex::new(col[i], col[i + n]));
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if norm > T::zero() {
        v.mapv_inplace(|z| z / norm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn dagger_conjugates_and_transposes() {
        let m = ndarray::array![[c(1.0, 2.0), c(3.0, -1.0)], [c(0.0, 5.0), c(2.0, 0.0)]];
        let d = dagger(&m);
        assert_eq!(d[(0, 1)], c(0.0, -5.0));
        assert_eq!(d[(1, 0)], c(3.0, 1.0));
    }

    #[test]
    fn jacobi_diagonalizes_a_known_matrix() {
        // Symmetric with eigenvalues {1, 3}.
        let a: Array2<f64> = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // A v = λ v for each column.
        for k in 0..2 {
            let v = vecs.column(k);
            let av = a.dot(&v);
            for i in 0..2 {
                assert!((av[i] - vals[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_handles_random_symmetric_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for n in [3usize, 8, 17, 32] {
            let mut a: Array2<f64> = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = x;
                    a[(j, i)] = x;
                }
            }
            let (vals, vecs) = jacobi_eigh(&a);
            let recon = vecs.dot(&Array2::from_diag(&vals)).dot(&vecs.t());
            let err = max_abs_real(&(&recon - &a));
            assert!(err < 1e-10, "n={n}: reconstruction error {err}");
            let gram = vecs.t().dot(&vecs);
            let dev = max_abs_real(&(&gram - &Array2::<f64>::eye(n)));
            assert!(dev < 1e-10, "n={n}: orthogonality deviation {dev}");
        }
    }

    #[test]
    fn hermitian_eigvalues_via_realification() {
        // σ_y has eigenvalues ±1.
        let sy = ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let vals = eigvalsh(&sy);
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let top = dominant_eigvec(&sy);
        // σ_y v = +v.
        let prod = sy.dot(&top);
        for i in 0..2 {
            assert!((prod[i] - top[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_product_matches_explicit_product() {
        let a = ndarray::array![[c(1.0, 0.5), c(0.0, 2.0)], [c(2.0, -1.0), c(0.5, 0.0)]];
        let b = ndarray::array![[c(0.3, 0.1), c(1.0, 0.0)], [c(0.0, -1.0), c(2.0, 2.0)]];
        let direct = trace(&a.dot(&b)).re;
        assert!((trace_product_re(&a, &b) - direct).abs() < 1e-14);
    }
}
