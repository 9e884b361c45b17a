//! Precision theory: realification, the complete information matrix, the
//! eigenvalue precision profile, and the loss statistics built on it.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_deviation, jacobi_eigh};
use crate::protocols::MeasurementProtocol;
use crate::quantum::StateVector;
use crate::sampling::SeedSpec;
use crate::scalar::Scalar;

/// Real embedding c̃ = [Re(c); Im(c)] of a state vector.
#[derive(Debug, Clone)]
pub struct RealifiedState<T: Scalar> {
    pub vec: Array1<T>,
}

pub fn realify_state<T: Scalar>(c: &StateVector<T>) -> RealifiedState<T> {
    let s = c.dim();
    let mut v = Array1::zeros(2 * s);
    for (i, z) in c.amps().iter().enumerate() {
        v[i] = z.re;
        v[s + i] = z.im;
    }
    RealifiedState { vec: v }
}

/// Real embedding Λ̃ = [[Re Λ, −Im Λ], [Im Λ, Re Λ]] of a Hermitian operator,
/// satisfying c̃ᵀ Λ̃ c̃ = c⁺ Λ c.
pub fn realify_operator<T: Scalar>(op: &Array2<Complex<T>>) -> Result<Array2<T>> {
    let herm = hermiticity_deviation(op);
    if herm > T::OP_TOL {
        return Err(Error::NotHermitian {
            deviation: herm.to_f64().unwrap_or(f64::NAN),
        });
    }
    let s = op.nrows();
    let mut out = Array2::zeros((2 * s, 2 * s));
    for i in 0..s {
        for j in 0..s {
            let z = op[(i, j)];
            out[(i, j)] = z.re;
            out[(i, s + j)] = -z.im;
            out[(s + i, j)] = z.im;
            out[(s + i, s + j)] = z.re;
        }
    }
    Ok(out)
}

/// Complete information matrix H = 2n Σ_j (Λ̃_j c̃)(Λ̃_j c̃)ᵀ / λ_j together
/// with the sample size and state it was built for.
#[derive(Debug, Clone)]
pub struct InfoMatrix<T: Scalar> {
    pub mat: Array2<T>,
    pub n: u64,
    state: Array1<T>,
    skipped_rows: usize,
}

impl<T: Scalar> InfoMatrix<T> {
    /// ⟨c̃|H|c̃⟩, which equals 2n for a unity-decomposed protocol.
    pub fn normalization(&self) -> T {
        let hv = self.mat.dot(&self.state);
        self.state.iter().zip(hv.iter()).map(|(a, b)| *a * *b).sum()
    }

    /// Rows dropped as exact 0/0 limits (λ_j ≈ 0 with Λ̃_j c̃ ≈ 0).
    pub fn skipped_rows(&self) -> usize {
        self.skipped_rows
    }
}

/// Builds the information matrix at the given state and sample size. Rows
/// where both λ_j and Λ̃_j c̃ vanish are skipped as 0/0 limits; a vanishing
/// λ_j with non-vanishing Λ̃_j c̃ makes the matrix singular and is an error.
pub fn information_matrix<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    c: &StateVector<T>,
    n: u64,
) -> Result<InfoMatrix<T>> {
    if c.dim() != protocol.dim() {
        return Err(Error::DimensionMismatch {
            expected: protocol.dim(),
            got: c.dim(),
        });
    }
    let s = protocol.dim();
    let ct = realify_state(c).vec;
    let two_n = T::real(2.0 * n as f64);
    let mut h = Array2::zeros((2 * s, 2 * s));
    let mut skipped = 0usize;

    for (j, row) in protocol.rows().iter().enumerate() {
        // Λ̃ c̃ is the realification of Λ c.
        let lc = row.operator.dot(c.amps());
        let mut y = Array1::zeros(2 * s);
        for (i, z) in lc.iter().enumerate() {
            y[i] = z.re;
            y[s + i] = z.im;
        }
        let lambda = c
            .amps()
            .iter()
            .zip(lc.iter())
            .map(|(a, b)| (a.conj() * *b).re)
            .sum::<T>();
        if lambda < T::SKIP_TOL {
            let score = y.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if score >= T::SINGULAR_TOL {
                return Err(Error::SingularProtocol {
                    row: j,
                    lambda: lambda.to_f64().unwrap_or(f64::NAN),
                    score: score.to_f64().unwrap_or(f64::NAN),
                });
            }
            skipped += 1;
            continue;
        }
        let w = two_n / lambda;
        for a in 0..2 * s {
            if y[a] == T::zero() {
                continue;
            }
            let ya = y[a] * w;
            for b in 0..2 * s {
                h[(a, b)] += ya * y[b];
            }
        }
    }
    Ok(InfoMatrix {
        mat: h,
        n,
        state: ct,
        skipped_rows: skipped,
    })
}

/// Variances of the fluctuation principal components, after dropping the
/// zero mode (gauge) and the normalization mode.
#[derive(Debug, Clone)]
pub struct PrecisionProfile<T: Scalar> {
    /// d_j = 1/(2 S_j) for the ν = 2s−2 retained eigenvalues, in ascending
    /// eigenvalue order (descending d).
    pub d: Vec<T>,
    pub zero_eigenvalue: T,
    pub norm_eigenvalue: T,
    /// Whether the dropped-largest eigenvector overlapped the state
    /// direction as expected (|⟨v|c̃⟩| > 0.9).
    pub norm_overlap_ok: bool,
}

impl<T: Scalar> PrecisionProfile<T> {
    pub fn nu(&self) -> usize {
        self.d.len()
    }
}

/// Eigen-decomposes H, drops the near-zero and the largest (normalization)
/// eigenvalues, and maps the remaining spectrum to variances d_j = 1/(2S_j).
pub fn precision_profile<T: Scalar>(h: &InfoMatrix<T>) -> Result<PrecisionProfile<T>> {
    let (vals, vecs) = jacobi_eigh(&h.mat);
    let m = vals.len();
    let spectrum = || vals.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let largest = vals[m - 1];
    let smallest = vals[0];
    if !(largest > T::zero()) || smallest.abs() >= T::real(1e-6) * largest {
        return Err(Error::IncompleteSpectrum {
            smallest: smallest.to_f64().unwrap_or(f64::NAN),
            largest: largest.to_f64().unwrap_or(f64::NAN),
            spectrum: spectrum(),
        });
    }
    let mut d = Vec::with_capacity(m - 2);
    for &s_j in &vals.as_slice().unwrap()[1..m - 1] {
        if !(s_j > T::zero()) {
            return Err(Error::IncompleteSpectrum {
                smallest: s_j.to_f64().unwrap_or(f64::NAN),
                largest: largest.to_f64().unwrap_or(f64::NAN),
                spectrum: spectrum(),
            });
        }
        d.push(T::one() / (T::real(2.0) * s_j));
    }
    let overlap = vecs
        .column(m - 1)
        .iter()
        .zip(h.state.iter())
        .map(|(a, b)| *a * *b)
        .sum::<T>()
        .abs();
    Ok(PrecisionProfile {
        d,
        zero_eigenvalue: smallest,
        norm_eigenvalue: largest,
        norm_overlap_ok: overlap > T::real(0.9),
    })
}

/// First two moments of the fidelity loss: ⟨1−F⟩ = Σ d_j, σ² = 2 Σ d_j².
#[derive(Debug, Clone, Copy)]
pub struct LossMoments<T: Scalar> {
    pub mean: T,
    pub variance: T,
}

pub fn expected_loss<T: Scalar>(dp: &PrecisionProfile<T>) -> LossMoments<T> {
    let mean = dp.d.iter().copied().sum();
    let variance = T::real(2.0) * dp.d.iter().map(|x| *x * *x).sum::<T>();
    LossMoments { mean, variance }
}

/// One draw of 1−F = Σ_j d_j ξ_j² with ξ_j i.i.d. standard normal.
pub fn sample_loss<T: Scalar>(dp: &PrecisionProfile<T>, seed: SeedSpec) -> T {
    sample_loss_with(dp, &mut seed.rng())
}

pub fn sample_loss_with<T: Scalar, R: rand::Rng + ?Sized>(
    dp: &PrecisionProfile<T>,
    rng: &mut R,
) -> T {
    dp.d
        .iter()
        .map(|&d| {
            let xi = T::standard_normal(rng);
            d * xi * xi
        })
        .sum()
}

/// The statistic 2⟨dc̃|H|dc̃⟩ with the estimate phase-aligned to the truth
/// (global phase maximizing Re⟨c_true|c_est⟩) before differencing.
pub fn chi_square_statistic<T: Scalar>(
    h: &InfoMatrix<T>,
    c_true: &StateVector<T>,
    c_est: &StateVector<T>,
) -> Result<T> {
    if c_true.dim() != c_est.dim() || 2 * c_true.dim() != h.mat.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.mat.nrows() / 2,
            got: c_est.dim(),
        });
    }
    let overlap = c_true.overlap(c_est);
    let mag = overlap.norm();
    let phase = if mag > T::zero() {
        overlap.conj() / Complex::new(mag, T::zero())
    } else {
        Complex::new(T::one(), T::zero())
    };
    let aligned = c_est.amps().mapv(|z| z * phase);
    let s = c_true.dim();
    let mut dct = Array1::zeros(2 * s);
    for i in 0..s {
        let dz = aligned[i] - c_true.amps()[i];
        dct[i] = dz.re;
        dct[s + i] = dz.im;
    }
    let hd = h.mat.dot(&dct);
    Ok(T::real(2.0) * dct.iter().zip(hd.iter()).map(|(a, b)| *a * *b).sum::<T>())
}

/// Size-invariant loss function L = n·Σ d_j.
pub fn loss_function<T: Scalar>(dp: &PrecisionProfile<T>, n: u64) -> T {
    T::real(n as f64) * expected_loss(dp).mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::fuzzy_protocol;
    use crate::linalg::max_abs_real;
    use crate::noise::{readout_channel, ReadoutErrorRates};
    use crate::protocols::{mub_protocol, pauli_protocol, ProtocolRow};
    use crate::sampling::haar_random_state;

    #[test]
    fn state_realification_examples() {
        let c = StateVector::<f64>::basis(2, 0).unwrap();
        assert_eq!(realify_state(&c).vec.to_vec(), vec![1.0, 0.0, 0.0, 0.0]);
        let h = 0.5f64.sqrt();
        let c2: StateVector<f64> = StateVector::from_pairs(&[(h, 0.0), (0.0, h)]).unwrap();
        let v = realify_state(&c2).vec;
        assert!((v[0] - h).abs() < 1e-15 && (v[3] - h).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);

        let r: StateVector<f64> = haar_random_state(8, SeedSpec::new(1, 0)).unwrap();
        let norm: f64 = realify_state(&r).vec.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_realification_blocks() {
        let id = crate::linalg::eye::<f64>(2);
        let r = realify_operator(&id).unwrap();
        assert!(max_abs_real(&(&r - &Array2::<f64>::eye(4))) < 1e-15);

        let mut sy = Array2::<Complex<f64>>::zeros((2, 2));
        sy[(0, 1)] = Complex::new(0.0, -1.0);
        sy[(1, 0)] = Complex::new(0.0, 1.0);
        let r = realify_operator(&sy).unwrap();
        let want = Array2::from_shape_vec(
            (4, 4),
            vec![
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        assert!(max_abs_real(&(&r - &want)) < 1e-15);

        let mut bad = Array2::<Complex<f64>>::zeros((2, 2));
        bad[(0, 1)] = Complex::new(1.0, 0.0);
        assert!(realify_operator(&bad).is_err());
    }

    #[test]
    fn quadratic_forms_transport() {
        let p = pauli_protocol::<f64>(2).unwrap();
        for t in 0..20 {
            let c: StateVector<f64> = haar_random_state(4, SeedSpec::new(40, t)).unwrap();
            let ct = realify_state(&c).vec;
            for row in p.rows().iter().step_by(7) {
                let rt = realify_operator(&row.operator).unwrap();
                let real_form = ct.dot(&rt.dot(&ct));
                let lc = row.operator.dot(c.amps());
                let complex_form: f64 = c
                    .amps()
                    .iter()
                    .zip(lc.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum();
                assert!((real_form - complex_form).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn information_matrix_normalization() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let c = StateVector::basis(2, 0).unwrap();
        let h1 = information_matrix(&p, &c, 1).unwrap();
        assert!((h1.normalization() - 2.0).abs() < 1e-10);
        let h2 = information_matrix(&p, &c, 2).unwrap();
        assert!(max_abs_real(&(&h2.mat - &h1.mat.mapv(|x| 2.0 * x))) < 1e-9);

        for dim in [2usize, 3, 8] {
            let proto = mub_protocol::<f64>(dim).unwrap();
            let st: StateVector<f64> = haar_random_state(dim, SeedSpec::new(50, dim as u64)).unwrap();
            let h = information_matrix(&proto, &st, 10_000).unwrap();
            let rel = (h.normalization() - 20_000.0).abs() / 20_000.0;
            assert!(rel < 1e-6, "dim {dim}: relative deviation {rel}");
        }
    }

    #[test]
    fn information_matrix_matches_explicit_summation() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let c = StateVector::basis(2, 0).unwrap();
        let n = 7u64;
        let h = information_matrix(&p, &c, n).unwrap();

        let ct = realify_state(&c).vec;
        let mut manual = Array2::<f64>::zeros((4, 4));
        for row in p.rows() {
            let rt = realify_operator(&row.operator).unwrap();
            let y = rt.dot(&ct);
            let lam = ct.dot(&y);
            if lam < 1e-14 {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    manual[(a, b)] += 2.0 * n as f64 * y[a] * y[b] / lam;
                }
            }
        }
        assert!(max_abs_real(&(&h.mat - &manual)) < 1e-10);
        assert_eq!(h.skipped_rows(), 1);
    }

    #[test]
    fn singular_row_is_diagnosed() {
        let z = Complex::new(0.0, 0.0);
        let half = Complex::new(0.5, 0.0);
        let one = Complex::new(1.0, 0.0);
        let l1 = Array2::from_shape_vec((2, 2), vec![one, half, half, z]).unwrap();
        let l2 = Array2::from_shape_vec((2, 2), vec![z, -half, -half, one]).unwrap();
        let p = crate::protocols::MeasurementProtocol::new(
            2,
            1,
            vec![
                ProtocolRow {
                    operator: l1,
                    setting_id: 0,
                    projector: None,
                },
                ProtocolRow {
                    operator: l2,
                    setting_id: 0,
                    projector: None,
                },
            ],
        )
        .unwrap();
        let c = StateVector::basis(2, 1).unwrap();
        assert!(matches!(
            information_matrix(&p, &c, 100),
            Err(Error::SingularProtocol { row: 0, .. })
        ));
    }

    #[test]
    fn profile_has_two_s_minus_two_components() {
        let p2 = pauli_protocol::<f64>(1).unwrap();
        let c2: StateVector<f64> = haar_random_state(2, SeedSpec::new(70, 0)).unwrap();
        let dp2 = precision_profile(&information_matrix(&p2, &c2, 10_000).unwrap()).unwrap();
        assert_eq!(dp2.nu(), 2);
        assert!(dp2.norm_overlap_ok);

        let p8 = mub_protocol::<f64>(8).unwrap();
        let c8: StateVector<f64> = haar_random_state(8, SeedSpec::new(70, 1)).unwrap();
        let dp8 = precision_profile(&information_matrix(&p8, &c8, 10_000).unwrap()).unwrap();
        assert_eq!(dp8.nu(), 14);
        assert!(dp8.d.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn profiles_stay_positive_across_dims() {
        for dim in [2usize, 4, 8, 16] {
            let p = mub_protocol::<f64>(dim).unwrap();
            for t in 0..25 {
                let c: StateVector<f64> =
                    haar_random_state(dim, SeedSpec::new(71, (dim * 100 + t) as u64)).unwrap();
                let dp =
                    precision_profile(&information_matrix(&p, &c, 10_000).unwrap()).unwrap();
                assert_eq!(dp.nu(), 2 * dim - 2);
                assert!(dp.d.iter().all(|&d| d > 0.0 && d.is_finite()));
                assert!(dp.zero_eigenvalue.abs() < 1e-6 * dp.norm_eigenvalue);
            }
        }
    }

    #[test]
    fn loss_moments_algebra() {
        let dp: PrecisionProfile<f64> = PrecisionProfile {
            d: vec![3e-4, 3e-4],
            zero_eigenvalue: 0.0,
            norm_eigenvalue: 1.0,
            norm_overlap_ok: true,
        };
        let lm = expected_loss(&dp);
        assert!((lm.mean - 6e-4).abs() < 1e-18);
        assert!((lm.variance - 2.0 * 2.0 * 9e-8).abs() < 1e-18);

        let p = pauli_protocol::<f64>(1).unwrap();
        let c: StateVector<f64> = haar_random_state(2, SeedSpec::new(72, 0)).unwrap();
        let prof = precision_profile(&information_matrix(&p, &c, 10_000).unwrap()).unwrap();
        let lm2 = expected_loss(&prof);
        assert!(lm2.variance <= 2.0 * lm2.mean * lm2.mean + 1e-18);
    }

    #[test]
    fn sampled_losses_match_moments() {
        let dp = PrecisionProfile {
            d: vec![5e-4],
            zero_eigenvalue: 0.0,
            norm_eigenvalue: 1.0,
            norm_overlap_ok: true,
        };
        let mut rng = SeedSpec::new(73, 0).rng();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = sample_loss_with(&dp, &mut rng);
            assert!(x >= 0.0);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let lm = expected_loss(&dp);
        assert!((mean - lm.mean).abs() / lm.mean < 0.05);
        assert!((var - lm.variance).abs() / lm.variance < 0.05);
        assert_eq!(
            sample_loss(&dp, SeedSpec::new(4, 4)),
            sample_loss(&dp, SeedSpec::new(4, 4))
        );
    }

    #[test]
    fn chi_square_statistic_gauge_behavior() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let c: StateVector<f64> = haar_random_state(2, SeedSpec::new(74, 0)).unwrap();
        let h = information_matrix(&p, &c, 10_000).unwrap();
        assert!(chi_square_statistic(&h, &c, &c).unwrap().abs() < 1e-20);

        let e: StateVector<f64> = haar_random_state(2, SeedSpec::new(74, 1)).unwrap();
        let base = chi_square_statistic(&h, &c, &e).unwrap();
        let phase = Complex::from_polar(1.0, 0.77);
        let e_rot = StateVector::new(e.amps().mapv(|z| z * phase)).unwrap();
        let rot = chi_square_statistic(&h, &c, &e_rot).unwrap();
        assert!((base - rot).abs() < 1e-9 * base.max(1.0));

        let c_rot = StateVector::new(c.amps().mapv(|z| z * phase)).unwrap();
        let h_rot = information_matrix(&p, &c_rot, 10_000).unwrap();
        let both = chi_square_statistic(&h_rot, &c_rot, &e_rot).unwrap();
        assert!((base - both).abs() < 1e-9 * base.max(1.0));
    }

    #[test]
    fn loss_function_is_size_invariant() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let c: StateVector<f64> = haar_random_state(2, SeedSpec::new(75, 0)).unwrap();
        let l1 = loss_function(
            &precision_profile(&information_matrix(&p, &c, 10_000).unwrap()).unwrap(),
            10_000,
        );
        let l2 = loss_function(
            &precision_profile(&information_matrix(&p, &c, 20_000).unwrap()).unwrap(),
            20_000,
        );
        assert!((l1 - l2).abs() < 1e-10 * l1);
    }

    #[test]
    fn readout_noise_raises_theoretical_loss() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let ch = readout_channel(ReadoutErrorRates::new(0.03f64, 0.03).unwrap()).unwrap();
        let fp = fuzzy_protocol(&p, &ch).unwrap();
        let mut ratio_sum = 0.0;
        let trials = 20;
        for t in 0..trials {
            let c: StateVector<f64> = haar_random_state(2, SeedSpec::new(76, t)).unwrap();
            let l_ideal = loss_function(
                &precision_profile(&information_matrix(&p, &c, 10_000).unwrap()).unwrap(),
                10_000,
            );
            let l_noisy = loss_function(
                &precision_profile(&information_matrix(&fp, &c, 10_000).unwrap()).unwrap(),
                10_000,
            );
            ratio_sum += l_noisy / l_ideal;
        }
        let mean_ratio = ratio_sum / trials as f64;
        assert!(mean_ratio > 1.02, "mean ratio {mean_ratio}");
    }
}
