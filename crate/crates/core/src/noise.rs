//! Kraus noise channels: readout (registration) errors and qudit dephasing.

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{compose_channels, tensor_channels, KrausChannel};
use crate::scalar::Scalar;

/// Readout error rates: p10 = P(register 1 | true 0), p01 = P(register 0 | true 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutErrorRates<T: Scalar> {
    pub p10: T,
    pub p01: T,
}

impl<T: Scalar> ReadoutErrorRates<T> {
    pub fn new(p10: T, p01: T) -> Result<Self> {
        for (name, p) in [("p10", p10), ("p01", p01)] {
            if !(T::zero()..=T::one()).contains(&p) || !p.is_finite() {
                return Err(Error::OutOfRange {
                    name: name.into(),
                    value: p.to_f64().unwrap_or(f64::NAN),
                    range: "[0, 1]".into(),
                });
            }
        }
        Ok(Self { p10, p01 })
    }
}

/// Phase relaxation strength g ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingStrength<T: Scalar> {
    pub g: T,
}

impl<T: Scalar> DephasingStrength<T> {
    pub fn new(g: T) -> Result<Self> {
        if !(T::zero()..=T::one()).contains(&g) || !g.is_finite() {
            return Err(Error::OutOfRange {
                name: "g".into(),
                value: g.to_f64().unwrap_or(f64::NAN),
                range: "[0, 1]".into(),
            });
        }
        Ok(Self { g })
    }
}

/// Single-qubit readout channel with operators
/// E_0 = diag(√(1−p10), √(1−p01)), E_1 = √p10 |1⟩⟨0|, E_2 = √p01 |0⟩⟨1|.
pub fn readout_channel<T: Scalar>(rates: ReadoutErrorRates<T>) -> Result<KrausChannel<T>> {
    let rates = ReadoutErrorRates::new(rates.p10, rates.p01)?;
    let z = Complex::new(T::zero(), T::zero());
    let c = |x: T| Complex::new(x, T::zero());
    let e0 = Array2::from_shape_vec(
        (2, 2),
        vec![
            c((T::one() - rates.p10).sqrt()),
            z,
            z,
            c((T::one() - rates.p01).sqrt()),
        ],
    )
    .expect("static shape");
    let e1 = Array2::from_shape_vec((2, 2), vec![z, z, c(rates.p10.sqrt()), z]).expect("static shape");
    let e2 = Array2::from_shape_vec((2, 2), vec![z, c(rates.p01.sqrt()), z, z]).expect("static shape");
    KrausChannel::new(vec![e0, e1, e2])
}

/// Independent per-qubit readout errors on n qubits: the tensor product of
/// single-qubit readout channels, 3^n Kraus operators.
pub fn readout_channel_multiqubit<T: Scalar>(
    rates_per_qubit: &[ReadoutErrorRates<T>],
) -> Result<KrausChannel<T>> {
    if rates_per_qubit.is_empty() {
        return Err(Error::EmptyChannel);
    }
    let per_qubit = rates_per_qubit
        .iter()
        .map(|r| readout_channel(*r))
        .collect::<Result<Vec<_>>>()?;
    tensor_channels(&per_qubit)
}

/// Probabilistic full dephasing on a qudit: {√(1−g)·I} ∪ {√g·|k⟩⟨k|}. The
/// diagonal of ρ is invariant and off-diagonal elements scale by (1−g).
pub fn dephasing_channel<T: Scalar>(
    dim: usize,
    strength: DephasingStrength<T>,
) -> Result<KrausChannel<T>> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let g = DephasingStrength::new(strength.g)?.g;
    let mut ops = Vec::with_capacity(dim + 1);
    let mut id = Array2::<Complex<T>>::eye(dim);
    id.mapv_inplace(|z| z * Complex::new((T::one() - g).sqrt(), T::zero()));
    ops.push(id);
    for k in 0..dim {
        let mut e = Array2::<Complex<T>>::zeros((dim, dim));
        e[(k, k)] = Complex::new(g.sqrt(), T::zero());
        ops.push(e);
    }
    KrausChannel::new(ops)
}

/// Calibration tally for one prepared basis state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CalibrationCounts {
    pub n_trials: u64,
    pub n_flips: u64,
}

/// Frequency estimates p10 = flips0/trials0, p01 = flips1/trials1 from
/// calibration runs on |0⟩ and |1⟩.
pub fn estimate_readout_rates<T: Scalar>(
    counts0: CalibrationCounts,
    counts1: CalibrationCounts,
) -> Result<ReadoutErrorRates<T>> {
    for c in [counts0, counts1] {
        if c.n_trials == 0 {
            return Err(Error::OutOfRange {
                name: "n_trials".into(),
                value: 0.0,
                range: "[1, ∞)".into(),
            });
        }
        if c.n_flips > c.n_trials {
            return Err(Error::OutOfRange {
                name: "n_flips",
                value: c.n_flips as f64,
                range: "[0, n_trials]",
            });
        }
    }
    ReadoutErrorRates::new(
        T::real(counts0.n_flips as f64 / counts0.n_trials as f64),
        T::real(counts1.n_flips as f64 / counts1.n_trials as f64),
    )
}

/// Noise block of the experiment configuration. Readout accepts one rate
/// pair for all qubits or an explicit per-qubit list.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct NoiseConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<DephasingSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ReadoutSpec {
    Uniform { p10: f64, p01: f64 },
    PerQubit(Vec<RatePair>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RatePair {
    pub p10: f64,
    pub p01: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DephasingSpec {
    pub g: f64,
}

impl NoiseConfig {
    pub fn is_empty(&self) -> bool {
        self.readout.is_none() && self.dephasing.is_none()
    }

    /// Builds the combined channel on a dim-dimensional system, applying
    /// dephasing first and readout last. Readout requires dim = 2^n.
    pub fn build_channel<T: Scalar>(&self, dim: usize) -> Result<KrausChannel<T>> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut ch = KrausChannel::identity(dim)?;
        if let Some(spec) = &self.dephasing {
            let deph = dephasing_channel(dim, DephasingStrength::new(T::real(spec.g))?)?;
            ch = compose_channels(&ch, &deph)?;
        }
        if let Some(spec) = &self.readout {
            if !dim.is_power_of_two() {
                return Err(Error::UnsupportedDimension(dim));
            }
            let n_qubits = dim.trailing_zeros() as usize;
            let rates: Vec<ReadoutErrorRates<T>> = match spec {
                ReadoutSpec::Uniform { p10, p01 } => {
                    vec![ReadoutErrorRates::new(T::real(*p10), T::real(*p01))?; n_qubits]
                }
                ReadoutSpec::PerQubit(list) => {
                    if list.len() != n_qubits {
                        return Err(Error::DimensionMismatch {
                            expected: n_qubits,
                            got: list.len(),
                        });
                    }
                    list.iter()
                        .map(|r| ReadoutErrorRates::new(T::real(r.p10), T::real(r.p01)))
                        .collect::<Result<_>>()?
                }
            };
            ch = compose_channels(&ch, &readout_channel_multiqubit(&rates)?)?;
        }
        Ok(ch)
    }
}
