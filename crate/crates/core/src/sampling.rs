//! Haar-random states and multinomial count simulation with reproducible
//! per-trial random streams.

use ndarray::Array1;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::MeasurementProtocol;
use crate::quantum::{apply_channel, density_from_pure, DensityMatrix, KrausChannel, StateVector};
use crate::scalar::Scalar;

/// Deterministic per-trial stream address: (master_seed, trial_index) fully
/// determines every draw, so trials may run in any order or in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(rename = "master")]
    pub master_seed: u64,
    #[serde(rename = "trial")]
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    /// Derives the trial's stream: a splitmix finalizer expands
    /// master + (trial+1)·golden into a 256-bit ChaCha key.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self
            .master_seed
            .wrapping_add(self.trial_index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes,
/// normalized.
pub fn haar_random_state<T: Scalar>(dim: usize, seed: SeedSpec) -> Result<StateVector<T>> {
    haar_random_state_with(dim, &mut seed.rng())
}

/// Haar sampling from a caller-owned stream.
pub fn haar_random_state_with<T: Scalar, R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> Result<StateVector<T>> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let amps = Array1::from_iter(
        (0..dim).map(|_| Complex::new(T::standard_normal(rng), T::standard_normal(rng))),
    );
    StateVector::normalized(amps)
}

/// Measured data for one tomography run, in interchange form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub protocol: String,
    pub n_total: u64,
    pub counts: Vec<u64>,
    pub seed: SeedSpec,
}

impl CountsRecord {
    /// Checks the record against a protocol: row count, total, and exact
    /// per-setting totals.
    pub fn validate<T: Scalar>(&self, protocol: &MeasurementProtocol<T>) -> Result<()> {
        if self.counts.len() != protocol.n_rows() {
            return Err(Error::InvalidCounts(format!(
                "{} counts for {} rows",
                self.counts.len(),
                protocol.n_rows()
            )));
        }
        let total: u64 = self.counts.iter().sum();
        if total != self.n_total {
            return Err(Error::InvalidCounts(format!(
                "counts sum to {total}, n_total says {}",
                self.n_total
            )));
        }
        let per_setting = self.n_total / protocol.n_settings() as u64;
        for (s, group) in protocol.setting_groups().iter().enumerate() {
            let sum: u64 = group.iter().map(|&j| self.counts[j]).sum();
            if sum != per_setting {
                return Err(Error::InvalidCounts(format!(
                    "setting {s} holds {sum} shots, expected {per_setting}"
                )));
            }
        }
        Ok(())
    }
}

/// Either form of the true state.
#[derive(Debug, Clone, Copy)]
pub enum Truth<'a, T: Scalar> {
    Pure(&'a StateVector<T>),
    Mixed(&'a DensityMatrix<T>),
}

impl<'a, T: Scalar> From<&'a StateVector<T>> for Truth<'a, T> {
    fn from(c: &'a StateVector<T>) -> Self {
        Truth::Pure(c)
    }
}

impl<'a, T: Scalar> From<&'a DensityMatrix<T>> for Truth<'a, T> {
    fn from(rho: &'a DensityMatrix<T>) -> Self {
        Truth::Mixed(rho)
    }
}

/// Draws counts with equal shots per setting: one multinomial of
/// n_total/n_settings shots over each setting's renormalized probabilities.
pub fn simulate_counts<'a, T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    truth: impl Into<Truth<'a, T>>,
    n_total: u64,
    seed: SeedSpec,
) -> Result<CountsRecord> {
    let lambda = match truth.into() {
        Truth::Pure(c) => protocol.probabilities(c)?,
        Truth::Mixed(rho) => protocol.probabilities_density(rho)?,
    };
    let n_settings = protocol.n_settings() as u64;
    if n_total == 0 || n_total % n_settings != 0 {
        return Err(Error::IndivisibleShots {
            n_total,
            n_settings: protocol.n_settings(),
        });
    }
    let shots = n_total / n_settings;
    let mut rng = seed.rng();
    let mut counts = vec![0u64; protocol.n_rows()];
    for group in protocol.setting_groups() {
        let probs: Vec<f64> = group
            .iter()
            .map(|&j| lambda[j].to_f64().unwrap_or(0.0).clamp(0.0, 1.0))
            .collect();
        let drawn = multinomial(shots, &probs, &mut rng);
        for (&j, k) in group.iter().zip(drawn) {
            counts[j] = k;
        }
    }
    Ok(CountsRecord {
        protocol: format!(
            "dim={};settings={};rows={}",
            protocol.dim(),
            protocol.n_settings(),
            protocol.n_rows()
        ),
        n_total,
        counts,
        seed,
    })
}

/// Counts for a noisy run: the channel applied to the pure truth, then
/// sampled exactly as `simulate_counts`.
pub fn simulate_noisy_counts<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    truth: &StateVector<T>,
    ch: &KrausChannel<T>,
    n_total: u64,
    seed: SeedSpec,
) -> Result<CountsRecord> {
    let rho_out = apply_channel(ch, &density_from_pure(truth))?;
    simulate_counts(protocol, &rho_out, n_total, seed)
}

/// Multinomial draw by sequential conditional binomials, in index order.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        // Degenerate setting: spread shots as evenly as possible.
        let m = probs.len() as u64;
        for (j, c) in counts.iter_mut().enumerate() {
            *c = n / m + u64::from((j as u64) < n % m);
        }
        return counts;
    }
    let mut remaining = n;
    let mut rem_p = total;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j + 1 == probs.len() {
            counts[j] = remaining;
            break;
        }
        let q = (p / rem_p).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .expect("clamped probability is valid")
            .sample(rng);
        counts[j] = k;
        remaining -= k;
        rem_p = (rem_p - p).max(0.0);
    }
    counts
}
