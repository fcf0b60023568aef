//! Dense networks mapping received pilots to `[φ; w]`.

mod adam;
mod io;
mod mlp;
mod scaler;
mod train;

pub use adam::Adam;
pub use mlp::{elu, Dense, Gradients, Mlp};
pub use scaler::Scaler;
pub use train::{batched_mse, split_rows, train, EpochRecord, TrainConfig, TrainData, TrainHistory};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::channel::CVector;
use crate::config::Profile;
use crate::error::{dim_check, Error, Result};
use crate::estimation::{normalize_or_uniform, PhaseBeamSolution};
use crate::pilot::PilotObservation;
use crate::seed;

/// `[Re z; Im z]`.
pub fn complex_to_real_stack(z: &CVector) -> Array1<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect()
}

pub fn real_to_complex_stack(x: &[f64]) -> Result<CVector> {
    if !x.len().is_multiple_of(2) {
        return Err(Error::Dimension(format!("real stack has odd length {}", x.len())));
    }
    let k = x.len() / 2;
    Ok(CVector::from_fn(k, |i, _| Complex64::new(x[i], x[k + i])))
}

/// Which of the two pilot regimes a network is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Full pilot length, T = N + 1.
    FullPilot,
    /// Reduced pilot length, T < N + 1.
    ShortPilot,
}

impl Method {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Method::FullPilot),
            2 => Ok(Method::ShortPilot),
            other => Err(Error::Config(format!("method must be 1 or 2, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Method::FullPilot => 1,
            Method::ShortPilot => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::FullPilot => "DL1",
            Method::ShortPilot => "DL2",
        }
    }

    /// Whether pilot length `t` suits this method for an `n`-element IRS.
    pub fn check_pilot_len(self, t: usize, n: usize) -> Result<()> {
        let ok = match self {
            Method::FullPilot => t == n + 1,
            Method::ShortPilot => t < n + 1,
        };
        if ok {
            Ok(())
        } else {
            let need = match self {
                Method::FullPilot => "T = N + 1",
                Method::ShortPilot => "T < N + 1",
            };
            Err(Error::Precondition(format!(
                "method {} needs {need}, dataset has T = {t}, N = {n}",
                self.index()
            )))
        }
    }

    pub fn hidden_layers(self, profile: Profile) -> &'static [usize] {
        match (self, profile) {
            (Method::FullPilot, Profile::Paper) => &[512, 512, 256],
            (Method::ShortPilot, Profile::Paper) => &[500, 400, 400, 300],
            (Method::FullPilot, Profile::Desk) => &[128, 128, 64],
            (Method::ShortPilot, Profile::Desk) => &[128, 96, 96, 64],
        }
    }
}

/// Network plus the input scaler it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: Mlp,
    pub scaler: Scaler,
}

impl MlpModel {
    /// `2TM -> hidden... -> 2(N+M)`.
    pub fn layer_sizes(t: usize, m: usize, n: usize, hidden: &[usize]) -> Vec<usize> {
        std::iter::once(2 * t * m)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(2 * (n + m)))
            .collect()
    }

    /// Fits the scaler on the training split, initializes and trains.
    ///
    /// Rows of `inputs`/`labels` are split in order: the first `train_fraction`
    /// for training, the rest for validation.
    pub fn fit(inputs: &Array2<f64>, labels: &Array2<f64>, hidden: &[usize], tc: &TrainConfig) -> Result<(Self, TrainHistory)> {
        tc.validate()?;
        dim_check("label rows", inputs.nrows(), labels.nrows())?;
        let (train_x, val_x) = split_rows(inputs, tc.train_fraction);
        let (train_y, val_y) = split_rows(labels, tc.train_fraction);
        let scaler = Scaler::fit(train_x)?;
        let train_x = scaler.transform(train_x)?;
        let val_x = scaler.transform(val_x)?;
        let sizes: Vec<usize> = std::iter::once(inputs.ncols())
            .chain(hidden.iter().copied())
            .chain(std::iter::once(labels.ncols()))
            .collect();
        let mut net = Mlp::new(&sizes, &mut seed::rng(tc.seed, seed::INIT, 0))?;
        let history = train(
            &mut net,
            TrainData { train_x: train_x.view(), train_y, val_x: val_x.view(), val_y },
            tc,
        )?;
        Ok((Self { net, scaler }, history))
    }

    pub fn predict_raw(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        let scaled = self.scaler.transform_row(x.view())?;
        self.net.forward(scaled.view())
    }

    /// Raw outputs for many samples at once, one per row.
    pub fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let scaled = self.scaler.transform(x.view())?;
        self.net.forward_batch(scaled.view())
    }

    /// Pilots to a feasible `(φ, w)`: `n` IRS elements, `m` BS antennas.
    pub fn predict_solution(&self, obs: &PilotObservation, n: usize, m: usize) -> Result<PhaseBeamSolution> {
        dim_check("network output width", 2 * (n + m), self.net.out_dim())?;
        let raw = self.predict_raw(&complex_to_real_stack(&obs.y_p))?;
        project_output(raw.as_slice().unwrap(), n, m)
    }
}

/// Splits a real `2(N+M)` output into `(φ, w)` and projects onto the feasible set:
/// unit-modulus phases (an exact zero maps to phase 0) and a unit-norm beamformer.
pub fn project_output(raw: &[f64], n: usize, m: usize) -> Result<PhaseBeamSolution> {
    let omega = real_to_complex_stack(raw)?;
    let sol = PhaseBeamSolution::from_omega(&omega, n, m)?;
    let phi = sol.phi.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            Complex64::from(1.0)
        }
    });
    Ok(PhaseBeamSolution { phi, w: normalize_or_uniform(sol.w) })
}
