//! Fuzzy measurements: ideal operators with a noise channel absorbed, so
//! noisy data can be treated as exact measurements of noisy operators.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{dagger, eye, max_abs};
use crate::noise::{readout_channel, ReadoutErrorRates};
use crate::protocols::{MeasurementProtocol, ProtocolRow};
use crate::quantum::KrausChannel;
use crate::scalar::Scalar;

/// A noise channel packaged for absorbing into measurement operators. Any
/// basis-change unitary is expected to be composed in as a one-element
/// channel rather than handled separately.
#[derive(Debug, Clone)]
pub struct FuzzyTransform<T: Scalar> {
    channel: KrausChannel<T>,
}

impl<T: Scalar> FuzzyTransform<T> {
    pub fn new(channel: KrausChannel<T>) -> Self {
        Self { channel }
    }

    pub fn channel(&self) -> &KrausChannel<T> {
        &self.channel
    }

    pub fn apply(&self, protocol: &MeasurementProtocol<T>) -> Result<MeasurementProtocol<T>> {
        fuzzy_protocol(protocol, &self.channel)
    }
}

/// Column-sparse form of a Kraus operator: column c carries at most one
/// (exactly) nonzero entry, stored as (row, value). Readout flips, dephasing
/// projectors, diagonal phases, and all their tensor products and
/// compositions have this shape, which cuts a conjugation from O(d³) to
/// O(d²) and the action on a vector to O(d).
struct ColumnForm<T: Scalar> {
    cols: Vec<Option<(usize, Complex<T>)>>,
}

enum PreparedOp<T: Scalar> {
    Sparse(ColumnForm<T>),
    Dense {
        e: Array2<Complex<T>>,
        dag: Array2<Complex<T>>,
    },
}

fn column_form<T: Scalar>(e: &Array2<Complex<T>>) -> Option<ColumnForm<T>> {
    let zero = T::zero();
    let mut cols = Vec::with_capacity(e.ncols());
    for c in 0..e.ncols() {
        let mut slot = None;
        for r in 0..e.nrows() {
            let z = e[(r, c)];
            if z.re != zero || z.im != zero {
                if slot.is_some() {
                    return None;
                }
                slot = Some((r, z));
            }
        }
        cols.push(slot);
    }
    Some(ColumnForm { cols })
}

fn prepare<T: Scalar>(ch: &KrausChannel<T>) -> Vec<PreparedOp<T>> {
    ch.ops()
        .iter()
        .map(|e| match column_form(e) {
            Some(cf) => PreparedOp::Sparse(cf),
            None => PreparedOp::Dense {
                e: e.clone(),
                dag: dagger(e),
            },
        })
        .collect()
}

/// Σ_k E_k⁺ Λ E_k over prepared operators, not symmetrized.
fn mixed_dense<T: Scalar>(
    op: &Array2<Complex<T>>,
    ops: &[PreparedOp<T>],
    dim: usize,
) -> Array2<Complex<T>> {
    let mut out: Array2<Complex<T>> = Array2::zeros((dim, dim));
    for p in ops {
        match p {
            PreparedOp::Sparse(cf) => {
                for (i, si) in cf.cols.iter().enumerate() {
                    let Some((ri, vi)) = si else { continue };
                    for (j, sj) in cf.cols.iter().enumerate() {
                        let Some((rj, vj)) = sj else { continue };
                        out[(i, j)] = out[(i, j)] + vi.conj() * op[(*ri, *rj)] * *vj;
                    }
                }
            }
            PreparedOp::Dense { e, dag } => {
                out = out + dag.dot(op).dot(e);
            }
        }
    }
    out
}

/// Σ_k (E_k⁺x)(E_k⁺x)⁺ over prepared operators. Each term is an exactly
/// Hermitian outer product, so the sum needs no symmetrizing; sparse
/// operators yield y = E_k⁺x with few nonzeros and the outer product is
/// accumulated over those alone.
fn mixed_rank1<T: Scalar>(
    x: &Array1<Complex<T>>,
    ops: &[PreparedOp<T>],
    dim: usize,
) -> Array2<Complex<T>> {
    let zero = T::zero();
    let mut out: Array2<Complex<T>> = Array2::zeros((dim, dim));
    let mut pairs: Vec<(usize, Complex<T>)> = Vec::with_capacity(dim);
    for p in ops {
        match p {
            PreparedOp::Sparse(cf) => {
                pairs.clear();
                for (c, slot) in cf.cols.iter().enumerate() {
                    if let Some((r, v)) = slot {
                        let y = v.conj() * x[*r];
                        if y.re != zero || y.im != zero {
                            pairs.push((c, y));
                        }
                    }
                }
                for &(i, yi) in &pairs {
                    for &(j, yj) in &pairs {
                        out[(i, j)] = out[(i, j)] + yi * yj.conj();
                    }
                }
            }
            PreparedOp::Dense { dag, .. } => {
                let y = dag.dot(x);
                for i in 0..dim {
                    let yi = y[i];
                    for j in 0..dim {
                        out[(i, j)] = out[(i, j)] + yi * y[j].conj();
                    }
                }
            }
        }
    }
    out
}

fn symmetrized<T: Scalar>(m: Array2<Complex<T>>) -> Array2<Complex<T>> {
    let half = Complex::new(T::real(0.5), T::zero());
    (&m + &dagger(&m)).mapv(|z| z * half)
}

/// Adjoint channel action Λ ↦ Σ_k E_k⁺ Λ E_k, symmetrized against roundoff.
pub fn mixed_operator<T: Scalar>(
    op: &Array2<Complex<T>>,
    ch: &KrausChannel<T>,
) -> Result<Array2<Complex<T>>> {
    if op.nrows() != ch.dim() || op.ncols() != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim(),
            got: op.nrows(),
        });
    }
    let ops = prepare(ch);
    Ok(symmetrized(mixed_dense(op, &ops, ch.dim())))
}

/// Replaces every row operator by its mixed counterpart. Setting structure
/// and weights are preserved; the unity decomposition survives because the
/// channel is trace-preserving. Projectors are dropped: mixed operators are
/// generally not rank-1.
pub fn fuzzy_protocol<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    ch: &KrausChannel<T>,
) -> Result<MeasurementProtocol<T>> {
    let dim = protocol.dim();
    if dim != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ch.dim(),
        });
    }
    let ops = prepare(ch);
    let rows = protocol
        .rows()
        .iter()
        .map(|row| {
            let operator = match &row.projector {
                Some(x) => mixed_rank1(x, &ops, dim),
                None => symmetrized(mixed_dense(&row.operator, &ops, dim)),
            };
            ProtocolRow {
                operator,
                setting_id: row.setting_id,
                projector: None,
            }
        })
        .collect();
    MeasurementProtocol::new(dim, protocol.n_settings(), rows)
}

/// Qubit measurement in the eigenbasis of U with readout errors:
/// Λ_b = Σ_k U⁺ E_k⁺ |b⟩⟨b| E_k U for b ∈ {0, 1}.
pub fn fuzzy_qubit_operators<T: Scalar>(
    u: &Array2<Complex<T>>,
    rates: ReadoutErrorRates<T>,
) -> Result<(Array2<Complex<T>>, Array2<Complex<T>>)> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: u.nrows(),
        });
    }
    let dev = max_abs(&(&dagger(u).dot(u) - &eye::<T>(2)));
    if dev > T::OP_TOL {
        return Err(Error::NotUnitary {
            deviation: dev.to_f64().unwrap_or(f64::NAN),
        });
    }
    let ch = readout_channel(rates)?;
    let mut out = Vec::with_capacity(2);
    for b in 0..2 {
        let mut p = Array2::<Complex<T>>::zeros((2, 2));
        p[(b, b)] = Complex::new(T::one(), T::zero());
        let mixed = mixed_operator(&p, &ch)?;
        out.push(dagger(u).dot(&mixed).dot(u));
    }
    let l1 = out.pop().expect("two outcomes");
    let l0 = out.pop().expect("two outcomes");
    Ok((l0, l1))
}

/// Noise acting in each setting's measurement frame: every setting's
/// orthonormal basis {v_b} becomes Λ_b = w · V (Σ_k E_k⁺ |b⟩⟨b| E_k) V⁺ with
/// V = [v_0 … v_{d−1}]. Requires rank-1 rows (stored projectors).
pub fn fuzzy_protocol_in_measurement_basis<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    ch: &KrausChannel<T>,
) -> Result<MeasurementProtocol<T>> {
    let dim = protocol.dim();
    if ch.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ch.dim(),
        });
    }
    let ops = prepare(ch);
    let mixed_basis: Vec<Array2<Complex<T>>> = (0..dim)
        .map(|b| {
            let mut e_b = Array1::<Complex<T>>::zeros(dim);
            e_b[b] = Complex::new(T::one(), T::zero());
            mixed_rank1(&e_b, &ops, dim)
        })
        .collect();

    let w = T::one() / T::real(protocol.n_settings() as f64);
    let scale = Complex::new(w, T::zero());
    let mut rows: Vec<Option<ProtocolRow<T>>> = vec![None; protocol.n_rows()];
    for group in protocol.setting_groups() {
        if group.len() != dim {
            return Err(Error::InvalidProtocol(format!(
                "setting with {} rows cannot define a basis in dimension {dim}",
                group.len()
            )));
        }
        let mut v = Array2::<Complex<T>>::zeros((dim, dim));
        for (b, &j) in group.iter().enumerate() {
            let x = protocol.rows()[j].projector.as_ref().ok_or_else(|| {
                Error::InvalidProtocol("measurement-basis transform needs rank-1 rows".into())
            })?;
            let inv_norm = T::one() / w.sqrt();
            for i in 0..dim {
                v[(i, b)] = x[i] * Complex::new(inv_norm, T::zero());
            }
        }
        let vd = dagger(&v);
        for (b, &j) in group.iter().enumerate() {
            let op = v.dot(&mixed_basis[b]).dot(&vd).mapv(|z| z * scale);
            rows[j] = Some(ProtocolRow {
                operator: op,
                setting_id: protocol.rows()[j].setting_id,
                projector: None,
            });
        }
    }
    MeasurementProtocol::new(
        dim,
        protocol.n_settings(),
        rows.into_iter()
            .map(|r| r.expect("all rows were visited"))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_product_re;
    use crate::protocols::pauli_protocol;
    use crate::quantum::{apply_channel, density_from_pure, StateVector};

    fn rates(p10: f64, p01: f64) -> ReadoutErrorRates<f64> {
        ReadoutErrorRates::new(p10, p01).unwrap()
    }

    #[test]
    fn identity_channel_leaves_operator_alone() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let id = KrausChannel::identity(2).unwrap();
        for row in p.rows() {
            let m = mixed_operator(&row.operator, &id).unwrap();
            assert!(max_abs(&(&m - &row.operator)) < 1e-15);
        }
    }

    #[test]
    fn readout_mixes_basis_projector() {
        let ch = readout_channel(rates(0.2, 0.05)).unwrap();
        let mut p0 = Array2::<Complex<f64>>::zeros((2, 2));
        p0[(0, 0)] = Complex::new(1.0, 0.0);
        let m = mixed_operator(&p0, &ch).unwrap();
        assert!((m[(0, 0)].re - 0.8).abs() < 1e-15);
        assert!((m[(1, 1)].re - 0.05).abs() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn identity_operator_is_fixed_point() {
        let ch = readout_channel(rates(0.3, 0.7)).unwrap();
        let m = mixed_operator(&eye::<f64>(2), &ch).unwrap();
        assert!(max_abs(&(&m - &eye::<f64>(2))) < 1e-14);
    }

    #[test]
    fn rank1_path_matches_dense_path() {
        let ch = readout_channel(rates(0.13, 0.27)).unwrap();
        let ops = prepare(&ch);
        let p = pauli_protocol::<f64>(1).unwrap();
        for row in p.rows() {
            let x = row.projector.as_ref().unwrap();
            let fast = mixed_rank1(x, &ops, 2);
            let dense = mixed_operator(&row.operator, &ch).unwrap();
            assert!(max_abs(&(&fast - &dense)) < 1e-14);
        }
    }

    #[test]
    fn sparse_and_dense_routes_agree() {
        // Readout operators take the column-sparse route; a rotation is
        // dense and falls back. Both must reproduce the literal sum.
        let h = 0.5f64.sqrt();
        let u = Array2::from_shape_vec(
            (2, 2),
            vec![
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(0.0, h),
                Complex::new(0.0, -h),
            ],
        )
        .unwrap();
        let rot = KrausChannel::new(vec![u]).unwrap();
        let ch = crate::quantum::compose_channels(&rot, &readout_channel(rates(0.1, 0.3)).unwrap())
            .unwrap();
        assert!(ch.ops().iter().any(|e| column_form(e).is_none()));
        assert!(ch.ops().iter().any(|e| column_form(e).is_some()));
        let p = pauli_protocol::<f64>(1).unwrap();
        for row in p.rows() {
            let mut literal = Array2::<Complex<f64>>::zeros((2, 2));
            for e in ch.ops() {
                literal = literal + dagger(e).dot(&row.operator).dot(e);
            }
            let fast = mixed_operator(&row.operator, &ch).unwrap();
            assert!(max_abs(&(&fast - &literal)) < 1e-14);
            let ops = prepare(&ch);
            let r1 = mixed_rank1(row.projector.as_ref().unwrap(), &ops, 2);
            assert!(max_abs(&(&r1 - &literal)) < 1e-14);
        }
    }

    #[test]
    fn fuzzy_protocol_keeps_unity_decomposition() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let ch = readout_channel(rates(0.015625, 0.0830078125)).unwrap();
        let fp = fuzzy_protocol(&p, &ch).unwrap();
        assert!(fp.verify_unity_decomposition() < 1e-10);
        assert_eq!(fp.n_settings(), p.n_settings());
        assert!(fp.rows().iter().all(|r| r.projector.is_none()));
    }

    #[test]
    fn dual_pictures_agree_on_probabilities() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let ch = readout_channel(rates(0.1, 0.04)).unwrap();
        let fp = fuzzy_protocol(&p, &ch).unwrap();
        let c = StateVector::from_pairs(&[(0.6, -0.2), (0.5, 0.4)]).unwrap();
        let rho_in = density_from_pure(&c);
        let rho_out = apply_channel(&ch, &rho_in).unwrap();
        for (row, frow) in p.rows().iter().zip(fp.rows()) {
            let lhs = trace_product_re(&row.operator, rho_out.mat());
            let rhs = trace_product_re(&frow.operator, rho_in.mat());
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_operators_reduce_to_projectors() {
        let (l0, l1) = fuzzy_qubit_operators(&eye::<f64>(2), rates(0.0, 0.0)).unwrap();
        assert!((l0[(0, 0)].re - 1.0).abs() < 1e-15 && l0[(1, 1)].norm() < 1e-15);
        assert!((l1[(1, 1)].re - 1.0).abs() < 1e-15 && l1[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn qubit_operators_with_rates_are_diagonal() {
        let (l0, l1) = fuzzy_qubit_operators(&eye::<f64>(2), rates(0.2, 0.05)).unwrap();
        assert!((l0[(0, 0)].re - 0.8).abs() < 1e-15);
        assert!((l0[(1, 1)].re - 0.05).abs() < 1e-15);
        assert!((l1[(0, 0)].re - 0.2).abs() < 1e-15);
        assert!((l1[(1, 1)].re - 0.95).abs() < 1e-15);
        assert!(max_abs(&(&(&l0 + &l1) - &eye::<f64>(2))) < 1e-12);
    }

    #[test]
    fn hadamard_basis_change_rotates_projectors() {
        let h = 0.5f64.sqrt();
        let u = Array2::from_shape_vec(
            (2, 2),
            vec![
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(h, 0.0),
                Complex::new(-h, 0.0),
            ],
        )
        .unwrap();
        let (l0, _) = fuzzy_qubit_operators(&u, rates(0.0, 0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((l0[(i, j)].re - 0.5).abs() < 1e-14);
                assert!(l0[(i, j)].im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let mut u = eye::<f64>(2);
        u[(0, 0)] = Complex::new(1.5, 0.0);
        assert!(matches!(
            fuzzy_qubit_operators(&u, rates(0.0, 0.0)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn measurement_basis_transform_matches_qubit_path() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let r = rates(0.07, 0.02);
        let ch = readout_channel(r).unwrap();
        let fp = fuzzy_protocol_in_measurement_basis(&p, &ch).unwrap();
        assert!(fp.verify_unity_decomposition() < 1e-10);
        let w: f64 = 1.0 / 3.0;
        for group in p.setting_groups() {
            let mut v = Array2::<Complex<f64>>::zeros((2, 2));
            for (b, &j) in group.iter().enumerate() {
                let x = p.rows()[j].projector.as_ref().unwrap();
                for i in 0..2 {
                    v[(i, b)] = x[i] / Complex::new(w.sqrt(), 0.0);
                }
            }
            let (l0, l1) = fuzzy_qubit_operators(&dagger(&v), r).unwrap();
            for (b, lam) in [l0, l1].into_iter().enumerate() {
                let want = lam.mapv(|z| z * Complex::new(w, 0.0));
                let got = &fp.rows()[group[b]].operator;
                assert!(max_abs(&(got - &want)) < 1e-13);
            }
        }
    }

    #[test]
    fn measurement_basis_differs_from_state_noise_off_axis() {
        let p = pauli_protocol::<f64>(1).unwrap();
        let ch = readout_channel(rates(0.2, 0.0)).unwrap();
        let state_first = fuzzy_protocol(&p, &ch).unwrap();
        let meas_first = fuzzy_protocol_in_measurement_basis(&p, &ch).unwrap();
        // z rows agree; x rows see the asymmetric flip in their own frame.
        assert!(max_abs(&(&state_first.rows()[0].operator - &meas_first.rows()[0].operator)) < 1e-13);
        let dx = max_abs(&(&state_first.rows()[2].operator - &meas_first.rows()[2].operator));
        assert!(dx > 1e-3, "x-setting rows should differ, got {dx}");
    }
}
