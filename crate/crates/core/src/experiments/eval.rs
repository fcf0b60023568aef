//! Per-method evaluation on the test split: rates on the true channels, phase
//! NMSE and beamformer mismatch against the perfect-CSI optimum.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use super::baselines::{baseline_random_phi, ls_solution};
use super::dataset::{Dataset, Split};
use super::metrics::{beamforming_mismatch, empirical_cdf, median, nmse};
use crate::channel::{CVector, ChannelRealization};
use crate::error::{dim_check, Error, Result};
use crate::estimation::{direct_path_rate, downlink_rate, linear_snr, LsEstimator, PhaseBeamSolution};
use crate::nn::{project_output, MlpModel};
use crate::pilot::{dft_phase_matrix, observation_matrix, pilot_amplitude};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    Dl1,
    Dl2,
    Ls,
    Optimum,
    RandomPhi,
    DirectPath,
}

impl MethodTag {
    pub fn label(self) -> &'static str {
        match self {
            MethodTag::Dl1 => "DL1",
            MethodTag::Dl2 => "DL2",
            MethodTag::Ls => "LS",
            MethodTag::Optimum => "Optimum",
            MethodTag::RandomPhi => "RandomPhi",
            MethodTag::DirectPath => "DirectPath",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: MethodTag,
    /// Per test sample, bits/s/Hz.
    pub rates: Vec<f64>,
    pub nmse: Option<f64>,
    /// Per test sample `‖w_opt - w‖²`.
    pub mismatch: Option<Vec<f64>>,
}

impl MethodResult {
    pub fn median_rate(&self) -> f64 {
        median(&self.rates)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub pilot_dbm: f64,
    pub results: Vec<MethodResult>,
}

impl EvalReport {
    pub fn get(&self, method: MethodTag) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    /// `method,rate,cdf`.
    pub fn write_se_cdf<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,rate,cdf")?;
        for r in &self.results {
            for (v, p) in empirical_cdf(&r.rates) {
                writeln!(w, "{},{v:?},{p:?}", r.method.label())?;
            }
        }
        Ok(())
    }

    /// `method,power_dBm,nmse`.
    pub fn write_nmse<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,power_dBm,nmse")?;
        for r in &self.results {
            if let Some(v) = r.nmse {
                writeln!(w, "{},{:?},{v:?}", r.method.label(), self.pilot_dbm)?;
            }
        }
        Ok(())
    }

    /// `method,mismatch,cdf`.
    pub fn write_mismatch_cdf<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,mismatch,cdf")?;
        for r in &self.results {
            if let Some(m) = &r.mismatch {
                for (v, p) in empirical_cdf(m) {
                    writeln!(w, "{},{v:?},{p:?}", r.method.label())?;
                }
            }
        }
        Ok(())
    }
}

/// Test-split channels and their perfect-CSI optimum, shared by every method.
pub struct TestBench {
    pub channels: Vec<ChannelRealization>,
    pub optimum: Vec<PhaseBeamSolution>,
    /// Downlink SNR, linear.
    pub gamma: f64,
}

impl TestBench {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let idx = ds.indices(Split::Test);
        if idx.is_empty() {
            return Err(Error::Precondition("dataset has no test split".into()));
        }
        let channels = idx.clone().map(|i| ds.channel(i)).collect::<Result<Vec<_>>>()?;
        let optimum = idx.map(|i| ds.label_solution(i)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels,
            optimum,
            gamma: linear_snr(ds.cfg.downlink_dbm, ds.cfg.noise_dbm),
        })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Scores a solution per test sample against the true channels.
    pub fn score(&self, method: MethodTag, solutions: &[PhaseBeamSolution]) -> Result<MethodResult> {
        dim_check("solutions per test sample", self.len(), solutions.len())?;
        let rates = self
            .channels
            .iter()
            .zip(solutions)
            .map(|(ch, s)| downlink_rate(&ch.h_d, &ch.v, s, self.gamma))
            .collect();
        let (nmse, mismatch) = if method == MethodTag::RandomPhi {
            (None, None)
        } else {
            let truth: Vec<CVector> = self.optimum.iter().map(|s| s.phi.clone()).collect();
            let pred: Vec<CVector> = solutions.iter().map(|s| s.phi.clone()).collect();
            let mismatch = self
                .optimum
                .iter()
                .zip(solutions)
                .map(|(o, s)| beamforming_mismatch(&o.w, &s.w))
                .collect::<Result<Vec<_>>>()?;
            (Some(nmse(&truth, &pred)?), Some(mismatch))
        };
        Ok(MethodResult { method, rates, nmse, mismatch })
    }

    pub fn optimum_result(&self) -> Result<MethodResult> {
        self.score(MethodTag::Optimum, &self.optimum)
    }

    pub fn direct_path_result(&self) -> MethodResult {
        MethodResult {
            method: MethodTag::DirectPath,
            rates: self.channels.iter().map(|ch| direct_path_rate(&ch.h_d, self.gamma)).collect(),
            nmse: None,
            mismatch: None,
        }
    }

    pub fn random_phi_result(&self, master_seed: u64) -> Result<MethodResult> {
        let sols: Vec<PhaseBeamSolution> = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, ch)| baseline_random_phi(ch, &mut seed::rng(master_seed, seed::RANDOM_PHI, i as u64)))
            .collect();
        self.score(MethodTag::RandomPhi, &sols)
    }
}

/// Network predictions for the test split of `ds`, projected to the feasible set.
pub fn dl_solutions(model: &MlpModel, ds: &Dataset) -> Result<Vec<PhaseBeamSolution>> {
    let x: Array2<f64> = ds.inputs_of(Split::Test).to_owned();
    let raw = model.predict_batch(&x)?;
    let (n, m) = (ds.cfg.n(), ds.cfg.m);
    raw.rows()
        .into_iter()
        .map(|row| project_output(row.as_slice().unwrap(), n, m))
        .collect()
}

/// LS-estimate-then-optimize solutions for the test split. Needs `T >= N + 1`.
pub fn ls_solutions(ds: &Dataset) -> Result<Vec<PhaseBeamSolution>> {
    let cfg = &ds.cfg;
    let phi = dft_phase_matrix(cfg.pilot_len, cfg.n())?;
    let est = LsEstimator::new(&observation_matrix(&phi, cfg.m, pilot_amplitude(cfg)), cfg.m, cfg.n())?;
    ds.indices(Split::Test)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| ls_solution(&est, &ds.observation(i)?))
        .collect()
}

/// Models to evaluate alongside the baselines. A short-pilot model comes with the
/// dataset holding its (shorter) pilots for the same test channels.
#[derive(Default)]
pub struct EvalInputs<'a> {
    pub dl1: Option<&'a MlpModel>,
    pub dl2: Option<(&'a MlpModel, &'a Dataset)>,
    pub baselines: bool,
}

/// Evaluates every requested method on the test split of `ds`.
pub fn evaluate(ds: &Dataset, inputs: EvalInputs<'_>) -> Result<EvalReport> {
    let bench = TestBench::from_dataset(ds)?;
    let mut results = vec![bench.optimum_result()?];
    if let Some(model) = inputs.dl1 {
        results.push(bench.score(MethodTag::Dl1, &dl_solutions(model, ds)?)?);
    }
    if let Some((model, ds2)) = inputs.dl2 {
        check_same_test_channels(ds, ds2)?;
        results.push(bench.score(MethodTag::Dl2, &dl_solutions(model, ds2)?)?);
    }
    if inputs.baselines {
        if ds.cfg.pilot_len > ds.cfg.n() {
            results.push(bench.score(MethodTag::Ls, &ls_solutions(ds)?)?);
        }
        results.push(bench.random_phi_result(ds.seed)?);
        results.push(bench.direct_path_result());
    }
    Ok(EvalReport { pilot_dbm: ds.cfg.pilot_dbm, results })
}

fn check_same_test_channels(a: &Dataset, b: &Dataset) -> Result<()> {
    let (ia, ib) = (a.indices(Split::Test), b.indices(Split::Test));
    dim_check("test samples of the second dataset", ia.len(), ib.len())?;
    for (i, j) in ia.zip(ib) {
        if a.channels[i] != b.channels[j] {
            return Err(Error::Precondition(
                "datasets do not share test channels; generate both with the same seed and sample counts".into(),
            ));
        }
    }
    Ok(())
}
