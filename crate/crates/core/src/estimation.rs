//! LS channel estimation, alternating phase/beamformer optimization and the
//! downlink rate.

use nalgebra::Cholesky;
use num_complex::Complex64;

use crate::channel::{CMatrix, CVector};
use crate::error::{dim_check, Error, Result};
use crate::pilot::PilotObservation;

pub use crate::pilot::unstack_channels;

/// Default number of alternating rounds.
pub const DEFAULT_ROUNDS: usize = 10;
/// Rounds stop once the objective improves by less than this, relatively.
pub const ROUND_TOLERANCE: f64 = 1e-10;
/// Gram matrices with a reciprocal condition number below this are refused.
pub const MIN_RCOND: f64 = 1e-12;

/// IRS reflection vector (unit-modulus entries) and unit-norm BS beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBeamSolution {
    pub phi: CVector,
    pub w: CVector,
}

impl PhaseBeamSolution {
    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    /// `[φ; w]`, the regression target of the networks.
    pub fn omega(&self) -> CVector {
        let mut out = CVector::zeros(self.n() + self.m());
        out.rows_mut(0, self.n()).copy_from(&self.phi);
        out.rows_mut(self.n(), self.m()).copy_from(&self.w);
        out
    }

    /// Splits `[φ; w]` back, without projecting.
    pub fn from_omega(omega: &CVector, n: usize, m: usize) -> Result<Self> {
        dim_check("stacked solution length", n + m, omega.len())?;
        Ok(Self {
            phi: omega.rows(0, n).into_owned(),
            w: omega.rows(n, m).into_owned(),
        })
    }

    /// True when every `|φ_n|` and `‖w‖` is 1 within `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.phi.iter().all(|z| (z.norm() - 1.0).abs() <= tol) && (self.w.norm() - 1.0).abs() <= tol
    }
}

/// `10^((tx - noise)/10)`.
pub fn linear_snr(tx_dbm: f64, noise_dbm: f64) -> f64 {
    10f64.powf((tx_dbm - noise_dbm) / 10.0)
}

/// Least-squares estimator for a fixed observation matrix.
///
/// `(P^H P)^{-1} P^H` is formed once; each estimate is then a single product.
#[derive(Debug, Clone)]
pub struct LsEstimator {
    m: usize,
    n: usize,
    pinv: CMatrix,
    rcond: f64,
}

impl LsEstimator {
    pub fn new(p: &CMatrix, m: usize, n: usize) -> Result<Self> {
        dim_check("observation matrix columns", (n + 1) * m, p.ncols())?;
        if p.nrows() < p.ncols() {
            return Err(Error::Singular(format!(
                "observation matrix is {}x{}; LS needs at least as many pilot observations as unknowns (T >= N+1)",
                p.nrows(),
                p.ncols()
            )));
        }
        let gram = p.adjoint() * p;
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        let rcond = if max > 0.0 { min / max } else { 0.0 };
        if !(rcond >= MIN_RCOND) {
            return Err(Error::Singular(format!("P^H P reciprocal condition {rcond:e} below {MIN_RCOND:e}")));
        }
        let chol = Cholesky::new(gram).ok_or_else(|| Error::Singular("P^H P is not positive definite".into()))?;
        let pinv = chol.solve(&p.adjoint());
        Ok(Self { m, n, pinv, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn estimate(&self, y_p: &CVector) -> Result<CVector> {
        dim_check("pilot observation length", self.pinv.ncols(), y_p.len())?;
        Ok(&self.pinv * y_p)
    }

    /// Estimate already split into `(h_d, V)`.
    pub fn estimate_channels(&self, obs: &PilotObservation) -> Result<(CVector, CMatrix)> {
        unstack_channels(&self.estimate(&obs.y_p)?, self.m, self.n)
    }
}

/// One-shot `ĥ = (P^H P)^{-1} P^H y_p`.
pub fn ls_estimate(obs: &PilotObservation, p: &CMatrix, m: usize, n: usize) -> Result<CVector> {
    LsEstimator::new(p, m, n)?.estimate(&obs.y_p)
}

/// `h_d + V conj(φ)`, the conjugate of the effective downlink row `h_d^H + φ^T V^H`.
pub fn effective_channel(h_d: &CVector, v: &CMatrix, phi: &CVector) -> CVector {
    h_d + v * phi.conjugate()
}

/// Maximum-ratio beamformer for the given phases. A zero channel maps to the
/// uniform beamformer.
pub fn matched_filter(h_d: &CVector, v: &CMatrix, phi: &CVector) -> CVector {
    normalize_or_uniform(effective_channel(h_d, v, phi))
}

pub(crate) fn normalize_or_uniform(g: CVector) -> CVector {
    let norm = g.norm();
    if norm > 0.0 {
        g / Complex64::from(norm)
    } else {
        uniform_beamformer(g.len())
    }
}

pub fn uniform_beamformer(m: usize) -> CVector {
    CVector::from_element(m, Complex64::from(1.0 / (m as f64).sqrt()))
}

/// Phase update for a fixed beamformer: `φ_n = arg(h_d^H w) - arg(v_n^H w)`,
/// returned as `exp(jφ_n)`.
pub fn phase_update(h_d: &CVector, v: &CMatrix, w: &CVector) -> CVector {
    let reference = h_d.dotc(w).arg();
    CVector::from_iterator(
        v.ncols(),
        v.column_iter().map(|col| Complex64::from_polar(1.0, reference - col.dotc(w).arg())),
    )
}

/// Runs the alternating optimization and returns the solution together with the
/// objective `‖h_d^H + φ^T V^H‖` after every round.
pub fn optimize_phases_traced(h_d: &CVector, v: &CMatrix, rounds: usize) -> Result<(PhaseBeamSolution, Vec<f64>)> {
    dim_check("cascaded channel rows", h_d.len(), v.nrows())?;
    if h_d.iter().all(|z| *z == Complex64::from(0.0)) && v.iter().all(|z| *z == Complex64::from(0.0)) {
        return Err(Error::Precondition("direct and cascaded channels are both zero".into()));
    }
    let mut w = uniform_beamformer(h_d.len());
    let mut phi = phase_update(h_d, v, &w);
    let mut trace = Vec::with_capacity(rounds.max(1));
    for round in 0..rounds.max(1) {
        if round > 0 {
            phi = phase_update(h_d, v, &w);
        }
        let g = effective_channel(h_d, v, &phi);
        let objective = g.norm();
        w = normalize_or_uniform(g);
        let stalled = trace
            .last()
            .is_some_and(|&prev: &f64| objective - prev <= ROUND_TOLERANCE * prev);
        trace.push(objective);
        if stalled {
            break;
        }
    }
    Ok((PhaseBeamSolution { phi, w }, trace))
}

pub fn optimize_phases(h_d: &CVector, v: &CMatrix, rounds: usize) -> Result<PhaseBeamSolution> {
    optimize_phases_traced(h_d, v, rounds).map(|(sol, _)| sol)
}

/// `|(h_d^H + φ^T V^H) w|^2`.
pub fn beamforming_gain(h_d: &CVector, v: &CMatrix, sol: &PhaseBeamSolution) -> f64 {
    effective_channel(h_d, v, &sol.phi).dotc(&sol.w).norm_sqr()
}

/// `log2(1 + γ |(h_d^H + φ^T V^H) w|^2)`.
pub fn downlink_rate(h_d: &CVector, v: &CMatrix, sol: &PhaseBeamSolution, gamma: f64) -> f64 {
    (gamma * beamforming_gain(h_d, v, sol)).ln_1p() / std::f64::consts::LN_2
}

/// Rate with no IRS and `w` matched to `h_d`.
pub fn direct_path_rate(h_d: &CVector, gamma: f64) -> f64 {
    (gamma * h_d.norm_squared()).ln_1p() / std::f64::consts::LN_2
}
