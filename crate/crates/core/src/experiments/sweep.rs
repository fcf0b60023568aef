//! NMSE versus pilot power, retraining the networks at every power point.

use std::io::Write;

use super::dataset::{generate_dataset, SplitPlan};
use super::eval::{dl_solutions, ls_solutions, MethodTag, TestBench};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::nn::{Method, MlpModel, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub plan: SplitPlan,
    pub train: TrainConfig,
    /// Networks to retrain at every power, each with its pilot length and hidden widths.
    pub networks: Vec<(Method, usize, Vec<usize>)>,
    pub include_ls: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub method: MethodTag,
    pub power_dbm: f64,
    pub nmse: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "method,power_dBm,nmse")?;
    for r in rows {
        writeln!(w, "{},{:?},{:?}", r.method.label(), r.power_dbm, r.nmse)?;
    }
    Ok(())
}

/// Runs the sweep. The same seed is used at every power, so the channels (and the
/// normalized noise) are shared across power points and methods.
pub fn pilot_power_sweep(base: &SystemConfig, powers: &[f64], s: &SweepSettings) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &power in powers {
        let mut cfg = base.clone();
        cfg.pilot_dbm = power;
        cfg.pilot_len = cfg.n() + 1;
        let full = generate_dataset(&cfg, s.plan, s.seed)?;
        let bench = TestBench::from_dataset(&full)?;
        if s.include_ls {
            let r = bench.score(MethodTag::Ls, &ls_solutions(&full)?)?;
            rows.push(SweepRow { method: MethodTag::Ls, power_dbm: power, nmse: r.nmse.unwrap() });
        }
        for (method, t, hidden) in &s.networks {
            let ds = if *t == full.pilot_len() {
                full.clone()
            } else {
                let mut c = cfg.clone();
                c.pilot_len = *t;
                generate_dataset(&c, s.plan, s.seed)?
            };
            method.check_pilot_len(ds.pilot_len(), ds.cfg.n())?;
            let (x, y) = ds.train_val();
            let (model, _) = MlpModel::fit(&x, &y, hidden, &s.train)?;
            let tag = match method {
                Method::FullPilot => MethodTag::Dl1,
                Method::ShortPilot => MethodTag::Dl2,
            };
            let r = bench.score(tag, &dl_solutions(&model, &ds)?)?;
            rows.push(SweepRow { method: tag, power_dbm: power, nmse: r.nmse.unwrap() });
        }
    }
    Ok(rows)
}
