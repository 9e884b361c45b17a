//! Floating-point abstraction for the whole crate.
//!
//! Every numeric type and operation is generic over [`Scalar`], which bundles
//! the `num-traits` capabilities we need with per-type tolerance constants.
//! Tolerances that are natural at `f64` (the default precision everywhere)
//! would be meaningless at `f32`, so each implementation carries its own.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar underlying states, operators and statistics.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Norm / trace agreement required of normalizing constructors.
    const NORM_TOL: Self;
    /// Operator-level agreement (unity decompositions, channel completeness).
    const OP_TOL: Self;
    /// Threshold below which a probability and its score are treated as 0/0.
    const SKIP_TOL: Self;
    /// Score norm above which a vanishing probability is a protocol defect.
    const SINGULAR_TOL: Self;
    /// Probability floor inside likelihood iterations.
    const PROB_FLOOR: Self;
    /// Off-diagonal threshold (relative to scale) for Jacobi sweeps.
    const JACOBI_TOL: Self;

    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal or configuration value.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }
}

impl Scalar for f64 {
    const NORM_TOL: Self = 1e-12;
    const OP_TOL: Self = 1e-10;
    const SKIP_TOL: Self = 1e-14;
    const SINGULAR_TOL: Self = 1e-7;
    const PROB_FLOOR: Self = 1e-15;
    const JACOBI_TOL: Self = 1e-14;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f32 {
    const NORM_TOL: Self = 1e-5;
    const OP_TOL: Self = 1e-4;
    const SKIP_TOL: Self = 1e-6;
    const SINGULAR_TOL: Self = 1e-3;
    const PROB_FLOOR: Self = 1e-7;
    const JACOBI_TOL: Self = 1e-6;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
