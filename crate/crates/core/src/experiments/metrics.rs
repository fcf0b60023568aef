use crate::channel::CVector;
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-9;

/// Mean over samples of `‖φ_opt - φ̂‖² / ‖φ_opt‖²`.
pub fn nmse(truth: &[CVector], pred: &[CVector]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::Dimension(format!("{} reference vs {} predicted phase vectors", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(Error::Precondition("NMSE over zero samples".into()));
    }
    let mut acc = 0.0;
    for (t, p) in truth.iter().zip(pred) {
        if t.len() != p.len() {
            return Err(Error::Dimension(format!("phase vector lengths {} vs {}", t.len(), p.len())));
        }
        acc += (t - p).norm_squared() / t.norm_squared();
    }
    Ok(acc / truth.len() as f64)
}

/// `‖w_opt - w_x‖²` for two unit-norm beamformers.
pub fn beamforming_mismatch(w_opt: &CVector, w_x: &CVector) -> Result<f64> {
    if w_opt.len() != w_x.len() {
        return Err(Error::Dimension(format!("beamformer lengths {} vs {}", w_opt.len(), w_x.len())));
    }
    for w in [w_opt, w_x] {
        if (w.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::Precondition(format!("beamformer norm {} is not 1", w.norm())));
        }
    }
    Ok((w_opt - w_x).norm_squared())
}

/// Sorted samples paired with CDF levels `k/n`, `k = 1..=n`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(k, v)| (v, (k + 1) as f64 / n)).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
