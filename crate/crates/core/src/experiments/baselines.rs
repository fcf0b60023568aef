use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{CVector, ChannelRealization};
use crate::error::Result;
use crate::estimation::{matched_filter, optimize_phases, LsEstimator, PhaseBeamSolution, DEFAULT_ROUNDS};
use crate::pilot::PilotObservation;

/// Uniform random phases with the matched-filter beamformer for them.
pub fn baseline_random_phi<R: Rng + ?Sized>(ch: &ChannelRealization, rng: &mut R) -> PhaseBeamSolution {
    let phi = CVector::from_fn(ch.n(), |_, _| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI));
    let w = matched_filter(&ch.h_d, &ch.v, &phi);
    PhaseBeamSolution { phi, w }
}

/// Optimizes on the LS estimate as if it were the true channel.
pub fn ls_solution(estimator: &LsEstimator, obs: &PilotObservation) -> Result<PhaseBeamSolution> {
    let (h_d, v) = estimator.estimate_channels(obs)?;
    optimize_phases(&h_d, &v, DEFAULT_ROUNDS)
}
