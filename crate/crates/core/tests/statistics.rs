//! Distributional regression tests. Each test draws a few hundred to a few
//! thousand Monte Carlo samples and gates the result with a Kolmogorov
//! Smirnov statistic at the 1% level, so spurious failures are rare and any
//! real drift in the sampling or estimation laws trips the gate.

use ndarray::Array2;
use num_complex::Complex;

use qst_core::infotheory::{
    chi_square_statistic, information_matrix, precision_profile, sample_loss_with,
};
use qst_core::mle::{reconstruct_pure, ReconstructionOptions};
use qst_core::protocols::pauli_protocol;
use qst_core::quantum::{fidelity, StateVector};
use qst_core::sampling::{haar_random_state, simulate_counts, SeedSpec};

/// Asymptotic Kolmogorov coefficient at significance 0.01.
const KS_COEFF: f64 = 1.628;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = sorted(samples.to_vec());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let gap = (i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs();
        d = d.max(gap);
    }
    d
}

fn chi2_cdf_two_dof(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x / 2.0).exp()
    }
}

#[test]
fn haar_overlaps_are_rotation_invariant() {
    let dim = 4;
    let omega = std::f64::consts::TAU / dim as f64;
    let fourier = Array2::from_shape_fn((dim, dim), |(j, k)| {
        Complex::from_polar(1.0 / (dim as f64).sqrt(), omega * (j * k) as f64)
    });

    let n = 10_000u64;
    let plain: Vec<f64> = (0..n)
        .map(|t| {
            let c: StateVector<f64> = haar_random_state(dim, SeedSpec::new(0xAAA, t)).unwrap();
            c.amps()[0].norm_sqr()
        })
        .collect();
    let rotated: Vec<f64> = (0..n)
        .map(|t| {
            let c: StateVector<f64> = haar_random_state(dim, SeedSpec::new(0xBBB, t)).unwrap();
            fourier.dot(c.amps())[0].norm_sqr()
        })
        .collect();

    let mean: f64 = plain.iter().sum::<f64>() / n as f64;
    assert!(
        (mean - 1.0 / dim as f64).abs() < 0.02,
        "mean overlap {mean} far from {}",
        1.0 / dim as f64
    );

    let d = ks_two_sample(&plain, &rotated);
    let crit = KS_COEFF * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} exceeds {crit}");
}

#[test]
fn aligned_quadratic_form_follows_chi_square() {
    // With s complex amplitudes, one norm and one phase constraint leave
    // 2s - 2 free parameters, so the information-weighted estimation error
    // is asymptotically chi-square with two degrees of freedom for a qubit.
    let p = pauli_protocol::<f64>(1).unwrap();
    let n_shots = 9_999u64;
    let opts = ReconstructionOptions::default();

    let trials = 500u64;
    let stats: Vec<f64> = (0..trials)
        .map(|t| {
            let truth: StateVector<f64> =
                haar_random_state(2, SeedSpec::new(0xA11CE, t)).unwrap();
            let counts = simulate_counts(&p, &truth, n_shots, SeedSpec::new(0xB0B, t)).unwrap();
            let est = reconstruct_pure(&p, &counts, &opts).unwrap();
            assert!(est.converged, "trial {t} did not converge");
            let h = information_matrix(&p, &truth, n_shots).unwrap();
            chi_square_statistic(&h, &truth, &est.estimate).unwrap()
        })
        .collect();

    let mean: f64 = stats.iter().sum::<f64>() / trials as f64;
    assert!((1.7..2.3).contains(&mean), "mean statistic {mean} outside [1.7, 2.3]");

    let d = ks_one_sample(&stats, chi2_cdf_two_dof);
    let crit = KS_COEFF / (trials as f64).sqrt();
    assert!(d < crit, "KS statistic {d} exceeds {crit}");
}

#[test]
fn sampled_losses_match_simulated_losses() {
    // The fidelity losses produced by the full simulate-and-reconstruct
    // pipeline and the losses drawn from the precision profile of the
    // information matrix must agree as distributions, not just in the mean.
    let p = pauli_protocol::<f64>(1).unwrap();
    let n_shots = 9_999u64;
    let truth: StateVector<f64> = haar_random_state(2, SeedSpec::new(0xC0FFEE, 0)).unwrap();
    let opts = ReconstructionOptions::default();

    let trials = 500u64;
    let empirical: Vec<f64> = (0..trials)
        .map(|t| {
            let counts = simulate_counts(&p, &truth, n_shots, SeedSpec::new(0xD00D, t)).unwrap();
            let est = reconstruct_pure(&p, &counts, &opts).unwrap();
            assert!(est.converged, "trial {t} did not converge");
            1.0 - fidelity(&truth, &est.estimate).unwrap()
        })
        .collect();

    let dp = precision_profile(&information_matrix(&p, &truth, n_shots).unwrap()).unwrap();
    let mut rng = SeedSpec::new(0xD1CE, 0).rng();
    let theory: Vec<f64> = (0..trials).map(|_| sample_loss_with(&dp, &mut rng)).collect();

    let d = ks_two_sample(&empirical, &theory);
    let crit = KS_COEFF * (2.0 / trials as f64).sqrt();
    assert!(d < crit, "KS statistic {d} exceeds {crit}");
}

#[test]
fn median_loss_scales_inversely_with_shots() {
    let p = pauli_protocol::<f64>(1).unwrap();
    let opts = ReconstructionOptions::default();
    let trials = 50u64;

    let mut points = Vec::new();
    for (k, &n_shots) in [999u64, 9_999, 99_999].iter().enumerate() {
        let mut losses: Vec<f64> = (0..trials)
            .map(|t| {
                let idx = k as u64 * trials + t;
                let truth: StateVector<f64> =
                    haar_random_state(2, SeedSpec::new(0x5C0, idx)).unwrap();
                let counts =
                    simulate_counts(&p, &truth, n_shots, SeedSpec::new(0x5C1, idx)).unwrap();
                let est = reconstruct_pure(&p, &counts, &opts).unwrap();
                1.0 - fidelity(&truth, &est.estimate).unwrap()
            })
            .collect();
        losses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = losses[losses.len() / 2];
        points.push(((n_shots as f64).ln(), median.ln()));
    }

    let m = points.len() as f64;
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = points.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum::<f64>()
        / points.iter().map(|p| (p.0 - xbar).powi(2)).sum::<f64>();
    assert!(
        (slope + 1.0).abs() < 0.2,
        "log-log slope {slope} not within 0.2 of -1"
    );
}
