//! Maximum-likelihood pure-state reconstruction by the root-approach
//! fixed-point iteration c ∝ R(c)c, R(c) = (1/n) Σ_j (k_j/λ_j) Λ_j.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dominant_eigvec;
use crate::protocols::MeasurementProtocol;
use crate::quantum::{KrausChannel, StateVector};
use crate::sampling::CountsRecord;
use crate::scalar::Scalar;

/// Iteration controls. Defaults: tol 1e-10, max_iters 10⁴, damping 0.5,
/// n_restarts 3 (first attempt deterministic, the rest perturbed).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub n_restarts: usize,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 10_000,
            damping: 0.5,
            n_restarts: 3,
        }
    }
}

impl ReconstructionOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange {
                name: "tol".into(),
                value: self.tol,
                range: "(0, ∞)".into(),
            });
        }
        if !(0.0 < self.damping && self.damping <= 1.0) {
            return Err(Error::OutOfRange {
                name: "damping".into(),
                value: self.damping,
                range: "(0, 1]".into(),
            });
        }
        if self.max_iters == 0 || self.n_restarts == 0 {
            return Err(Error::OutOfRange {
                name: "max_iters/n_restarts".into(),
                value: 0.0,
                range: "[1, ∞)".into(),
            });
        }
        Ok(())
    }
}

/// Outcome of one reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionResult<T: Scalar> {
    pub estimate: StateVector<T>,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    pub residual: T,
}

/// Multinomial log-likelihood Σ_j k_j ln λ_j(c). Rows with k_j = 0
/// contribute nothing; k_j > 0 with λ_j ≤ 0 yields −∞.
pub fn log_likelihood<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    counts: &CountsRecord,
    c: &StateVector<T>,
) -> Result<T> {
    if counts.counts.len() != protocol.n_rows() {
        return Err(Error::InvalidCounts(format!(
            "{} counts for {} rows",
            counts.counts.len(),
            protocol.n_rows()
        )));
    }
    let lambda = protocol.probabilities(c)?;
    let mut ll = T::zero();
    for (&k, &lam) in counts.counts.iter().zip(lambda.iter()) {
        if k == 0 {
            continue;
        }
        if lam <= T::zero() {
            return Ok(T::neg_infinity());
        }
        ll += T::real(k as f64) * lam.ln();
    }
    Ok(ll)
}

/// Reconstructs a pure state from counts. Damped fixed-point iteration with
/// the likelihood kept non-decreasing (the damping halves on violation),
/// deterministic spectral initialization, and perturbed restarts if stalled.
/// The returned estimate carries the gauge: largest-magnitude amplitude real
/// positive.
pub fn reconstruct_pure<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    counts: &CountsRecord,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult<T>> {
    opts.validate()?;
    counts.validate(protocol)?;

    let init = spectral_init(protocol, counts)?;
    let mut perturb_rng = ChaCha12Rng::seed_from_u64(0x51EEDED);
    let mut best: Option<ReconstructionResult<T>> = None;

    for attempt in 0..opts.n_restarts {
        let start = if attempt == 0 {
            init.clone()
        } else {
            perturbed(&init, &mut perturb_rng)?
        };
        let run = iterate(protocol, counts, start, opts)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (run.converged && !b.converged)
                    || (run.converged == b.converged && run.log_likelihood > b.log_likelihood)
            }
        };
        if better {
            best = Some(run);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    Ok(best.expect("n_restarts ≥ 1 guarantees one run"))
}

/// Reconstructs with the ideal operators (standard model) and with the
/// channel absorbed into them (fuzzy model), from the same counts.
pub fn reconstruct_standard_vs_fuzzy<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    ch: &KrausChannel<T>,
    counts: &CountsRecord,
    opts: &ReconstructionOptions,
) -> Result<(ReconstructionResult<T>, ReconstructionResult<T>)> {
    let standard = reconstruct_pure(protocol, counts, opts)?;
    let fuzzy_proto = crate::fuzzy::fuzzy_protocol(protocol, ch)?;
    let fuzzy = reconstruct_pure(&fuzzy_proto, counts, opts)?;
    Ok((standard, fuzzy))
}

/// Dominant eigenvector of Σ_j (k_j/n) Λ_j.
fn spectral_init<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    counts: &CountsRecord,
) -> Result<StateVector<T>> {
    let dim = protocol.dim();
    let n = T::real(counts.n_total as f64);
    let mut b: Array2<Complex<T>> = Array2::zeros((dim, dim));
    for (row, &k) in protocol.rows().iter().zip(counts.counts.iter()) {
        if k == 0 {
            continue;
        }
        let w = Complex::new(T::real(k as f64) / n, T::zero());
        b = b + row.operator.mapv(|z| z * w);
    }
    StateVector::normalized(dominant_eigvec(&b))
}

fn perturbed<T: Scalar>(
    c: &StateVector<T>,
    rng: &mut ChaCha12Rng,
) -> Result<StateVector<T>> {
    let eps = T::real(0.1);
    let amps = Array1::from_iter(c.amps().iter().map(|&z| {
        z + Complex::new(
            eps * T::standard_normal(rng),
            eps * T::standard_normal(rng),
        )
    }));
    StateVector::normalized(amps)
}

fn iterate<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    counts: &CountsRecord,
    start: StateVector<T>,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult<T>> {
    let tol = T::real(opts.tol);
    let slack = T::real(1e-9);
    let mut alpha = T::real(opts.damping);
    let mut c = start.gauge_fixed();
    let mut ll = log_likelihood(protocol, counts, &c)?;
    let mut converged = false;
    let mut iterations = opts.max_iters;

    for it in 1..=opts.max_iters {
        let v = apply_r(protocol, counts, &c);
        let one_minus = Complex::new(T::one() - alpha, T::zero());
        let a = Complex::new(alpha, T::zero());
        let raw = Array1::from_iter(
            c.amps()
                .iter()
                .zip(v.iter())
                .map(|(ci, vi)| *ci * one_minus + *vi * a),
        );
        let next = StateVector::normalized(raw)?.gauge_fixed();
        let ll_next = log_likelihood(protocol, counts, &next)?;
        if ll_next + slack < ll && alpha > T::real(1e-8) {
            alpha = alpha * T::real(0.5);
            continue;
        }
        let delta = diff_norm(c.amps(), next.amps());
        c = next;
        ll = ll_next;
        if delta < tol {
            iterations = it;
            converged = true;
            break;
        }
    }

    let v = apply_r(protocol, counts, &c);
    let residual = diff_norm(c.amps(), &v);
    let converged = converged && residual < tol * T::real(10.0);
    Ok(ReconstructionResult {
        estimate: c,
        log_likelihood: ll,
        iterations,
        converged,
        residual,
    })
}

/// R(c)·c with λ clamped below to avoid division blow-ups at zero counts.
fn apply_r<T: Scalar>(
    protocol: &MeasurementProtocol<T>,
    counts: &CountsRecord,
    c: &StateVector<T>,
) -> Array1<Complex<T>> {
    let dim = protocol.dim();
    let n = T::real(counts.n_total as f64);
    let amps = c.amps();
    let mut out: Array1<Complex<T>> = Array1::zeros(dim);
    for (row, &k) in protocol.rows().iter().zip(counts.counts.iter()) {
        if k == 0 {
            continue;
        }
        let kn = T::real(k as f64) / n;
        match &row.projector {
            Some(x) => {
                let amp = x
                    .iter()
                    .zip(amps.iter())
                    .map(|(xi, ci)| xi.conj() * *ci)
                    .sum::<Complex<T>>();
                let lam = amp.norm_sqr().max(T::PROB_FLOOR);
                let scale = amp * Complex::new(kn / lam, T::zero());
                out.zip_mut_with(x, |o, &xi| *o += xi * scale);
            }
            None => {
                let v = row.operator.dot(amps);
                let lam = amps
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a.conj() * *b).re)
                    .sum::<T>()
                    .max(T::PROB_FLOOR);
                let scale = Complex::new(kn / lam, T::zero());
                out.zip_mut_with(&v, |o, &vi| *o += vi * scale);
            }
        }
    }
    out
}

fn diff_norm<T: Scalar>(a: &Array1<Complex<T>>, b: &Array1<Complex<T>>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).norm_sqr())
        .sum::<T>()
        .sqrt()
}
