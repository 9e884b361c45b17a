//! Core quantum objects: pure states, density matrices, Kraus channels.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{dagger, eigvalsh, eye, hermiticity_deviation, max_abs, trace};
use crate::scalar::Scalar;

/// Pure state |c⟩ in dimension s, kept normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Scalar> {
    amps: Array1<Complex<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// Wraps an already-normalized amplitude vector.
    pub fn new(amps: Array1<Complex<T>>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::UnsupportedDimension(amps.len()));
        }
        let norm2: T = amps.iter().map(|z| z.norm_sqr()).sum();
        let dev = (norm2 - T::one()).abs();
        if dev > T::NORM_TOL {
            return Err(Error::NotNormalized {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { amps })
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalized(amps: Array1<Complex<T>>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::UnsupportedDimension(amps.len()));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                deviation: f64::INFINITY,
            });
        }
        Ok(Self {
            amps: amps.mapv(|z| z / norm),
        })
    }

    /// Basis state |k⟩.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 || k >= dim {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut amps = Array1::zeros(dim);
        amps[k] = Complex::new(T::one(), T::zero());
        Self::new(amps)
    }

    /// Convenience constructor from (re, im) pairs, normalizing.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let amps = Array1::from_iter(
            pairs
                .iter()
                .map(|&(re, im)| Complex::new(T::real(re), T::real(im))),
        );
        Self::normalized(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &Array1<Complex<T>> {
        &self.amps
    }

    /// Fixes the global phase: largest-magnitude amplitude made real positive.
    pub fn gauge_fixed(&self) -> Self {
        let mut idx = 0;
        let mut best = T::neg_infinity();
        for (i, z) in self.amps.iter().enumerate() {
            let m = z.norm_sqr();
            if m > best {
                best = m;
                idx = i;
            }
        }
        let z = self.amps[idx];
        let m = z.norm();
        if m <= T::zero() {
            return self.clone();
        }
        let phase = Complex::new(z.re / m, -z.im / m);
        Self {
            amps: self.amps.mapv(|a| a * phase),
        }
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * *b)
            .sum()
    }
}

/// Mixed state ρ: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Scalar> {
    mat: Array2<Complex<T>>,
}

impl<T: Scalar> DensityMatrix<T> {
    pub fn new(mat: Array2<Complex<T>>) -> Result<Self> {
        let n = mat.nrows();
        if n < 2 || mat.ncols() != n {
            return Err(Error::UnsupportedDimension(n));
        }
        let herm = hermiticity_deviation(&mat);
        if herm > T::NORM_TOL {
            return Err(Error::InvalidDensity {
                what: "Hermiticity",
                deviation: herm.to_f64().unwrap_or(f64::NAN),
            });
        }
        let tr = trace(&mat);
        let tr_dev = ((tr.re - T::one()) * (tr.re - T::one()) + tr.im * tr.im).sqrt();
        if tr_dev > T::NORM_TOL {
            return Err(Error::InvalidDensity {
                what: "unit trace",
                deviation: tr_dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        let min_eig = eigvalsh(&mat)[0];
        if min_eig < -T::real(1e-10) {
            return Err(Error::InvalidDensity {
                what: "positive semidefiniteness",
                deviation: min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mat })
    }

    /// Maximally mixed state I/s.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let w = Complex::new(T::one() / T::real(dim as f64), T::zero());
        Self::new(eye::<T>(dim).mapv(|z| z * w))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<Complex<T>> {
        &self.mat
    }
}

/// Quantum channel in Kraus form: ρ → Σ_k E_k ρ E_k⁺ with Σ_k E_k⁺E_k = I.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<T: Scalar> {
    ops: Vec<Array2<Complex<T>>>,
}

impl<T: Scalar> KrausChannel<T> {
    pub fn new(ops: Vec<Array2<Complex<T>>>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyChannel)?;
        let n = first.nrows();
        if n < 2 || first.ncols() != n {
            return Err(Error::UnsupportedDimension(n));
        }
        for op in &ops {
            if op.nrows() != n || op.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: op.nrows(),
                });
            }
        }
        let mut sum: Array2<Complex<T>> = Array2::zeros((n, n));
        for op in &ops {
            sum = sum + dagger(op).dot(op);
        }
        let dev = max_abs(&(&sum - &eye::<T>(n)));
        if dev > T::OP_TOL {
            return Err(Error::NotTracePreserving {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { ops })
    }

    /// Identity channel {I}.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(vec![eye::<T>(dim)])
    }

    /// One-element channel {U} from a unitary.
    pub fn unitary(u: Array2<Complex<T>>) -> Result<Self> {
        let n = u.nrows();
        if n < 2 || u.ncols() != n {
            return Err(Error::UnsupportedDimension(n));
        }
        let dev = max_abs(&(&dagger(&u).dot(&u) - &eye::<T>(n)));
        if dev > T::OP_TOL {
            return Err(Error::NotUnitary {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { ops: vec![u] })
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[Array2<Complex<T>>] {
        &self.ops
    }
}

/// ρ = c c⁺.
pub fn density_from_pure<T: Scalar>(c: &StateVector<T>) -> DensityMatrix<T> {
    let mat = crate::linalg::outer(c.amps(), c.amps());
    DensityMatrix::new(mat).expect("outer product of a unit vector is a valid density matrix")
}

/// ρ_out = Σ_k E_k ρ_in E_k⁺.
pub fn apply_channel<T: Scalar>(
    ch: &KrausChannel<T>,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    if ch.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: ch.dim(),
        });
    }
    let n = rho.dim();
    let mut out: Array2<Complex<T>> = Array2::zeros((n, n));
    for e in ch.ops() {
        out = out + e.dot(rho.mat()).dot(&dagger(e));
    }
    // Symmetrize away rounding before revalidation.
    let sym = Array2::from_shape_fn((n, n), |(i, j)| {
        (out[(i, j)] + out[(j, i)].conj()) * Complex::new(T::real(0.5), T::zero())
    });
    DensityMatrix::new(sym)
}

/// Sequential composition: `second` after `first`, ops {B_k A_j}.
pub fn compose_channels<T: Scalar>(
    first: &KrausChannel<T>,
    second: &KrausChannel<T>,
) -> Result<KrausChannel<T>> {
    if first.dim() != second.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            got: second.dim(),
        });
    }
    let mut ops = Vec::with_capacity(first.ops().len() * second.ops().len());
    for a in first.ops() {
        for b in second.ops() {
            ops.push(b.dot(a));
        }
    }
    KrausChannel::new(ops)
}

/// Tensor product of per-site channels (all cross-site Kraus products).
pub fn tensor_channels<T: Scalar>(per_site: &[KrausChannel<T>]) -> Result<KrausChannel<T>> {
    let first = per_site.first().ok_or(Error::EmptyChannel)?;
    let mut ops: Vec<Array2<Complex<T>>> = first.ops().to_vec();
    for site in &per_site[1..] {
        let mut next = Vec::with_capacity(ops.len() * site.ops().len());
        for a in &ops {
            for b in site.ops() {
                next.push(ndarray::linalg::kron(a, b));
            }
        }
        ops = next;
    }
    KrausChannel::new(ops)
}

/// F = |⟨c_rec|c_th⟩|².
pub fn fidelity<T: Scalar>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.overlap(b).norm_sqr())
}

/// F = ⟨c_th|ρ|c_th⟩ for a mixed estimate.
pub fn fidelity_mixed<T: Scalar>(c_th: &StateVector<T>, rho: &DensityMatrix<T>) -> Result<T> {
    if c_th.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: c_th.dim(),
            got: rho.dim(),
        });
    }
    let v = rho.mat().dot(c_th.amps());
    let f: Complex<T> = c_th
        .amps()
        .iter()
        .zip(v.iter())
        .map(|(a, b)| a.conj() * *b)
        .sum();
    Ok(f.re)
}
