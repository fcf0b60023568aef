//! Pilot/label datasets and their binary container.
//!
//! Layout: magic, version, config text, seed, split counts, dimensions, then one
//! fixed-width record per sample (input, label, `h_d`, `h_ru`, UE position), all
//! little-endian doubles. The static BS-IRS channel is rebuilt from the config.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::binio::*;
use crate::channel::{cascade, draw_channel, los_bs_irs, CMatrix, CVector, ChannelRealization};
use crate::config::{Profile, SystemConfig};
use crate::error::{dim_check, Error, Result};
use crate::estimation::{optimize_phases, PhaseBeamSolution, DEFAULT_ROUNDS};
use crate::nn::{complex_to_real_stack, real_to_complex_stack};
use crate::pilot::{dft_phase_matrix, simulate_pilot_rx, PilotMatrix, PilotObservation};
use crate::seed;

const MAGIC: &[u8; 8] = b"IRSDSET\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Per-sample channel data kept for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRecord {
    pub h_d: CVector,
    pub h_ru: CVector,
    pub ue_position: Vector3<f64>,
}

/// One generated sample before it is packed into a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Real-stacked received pilots, length `2TM`.
    pub input: Vec<f64>,
    /// Real-stacked `[φ_opt; w_opt]` from perfect CSI, length `2(N+M)`.
    pub label: Vec<f64>,
    pub channel: ChannelRecord,
}

/// How many samples to draw for each split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    /// Training + validation samples.
    pub n_train_val: usize,
    pub n_test: usize,
    pub train_fraction: f64,
}

impl SplitPlan {
    pub fn for_profile(profile: Profile) -> Self {
        let (n_train_val, n_test) = profile.sample_counts();
        Self { n_train_val, n_test, train_fraction: 0.8 }
    }

    fn counts(&self) -> (usize, usize, usize) {
        let n_train = ((self.n_train_val as f64) * self.train_fraction).floor() as usize;
        (n_train, self.n_train_val - n_train, self.n_test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cfg: SystemConfig,
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// One row per sample, ordered train, val, test.
    pub inputs: Array2<f64>,
    pub labels: Array2<f64>,
    pub channels: Vec<ChannelRecord>,
    h_br: CMatrix,
}

/// Draws sample `index`: channel, noisy pilots under `phi`, and the perfect-CSI label.
pub fn generate_sample(cfg: &SystemConfig, phi: &PilotMatrix, master_seed: u64, index: u64) -> Result<Sample> {
    let ch = draw_channel(cfg, &mut seed::rng(master_seed, seed::CHANNEL, index))?;
    let obs = simulate_pilot_rx(&ch, phi, cfg, index, &mut seed::rng(master_seed, seed::PILOT_NOISE, index))?;
    let label = optimize_phases(&ch.h_d, &ch.v, DEFAULT_ROUNDS)?.omega();
    Ok(Sample {
        input: complex_to_real_stack(&obs.y_p).to_vec(),
        label: complex_to_real_stack(&label).to_vec(),
        channel: ChannelRecord { h_d: ch.h_d, h_ru: ch.h_ru, ue_position: ch.ue_position },
    })
}

/// Samples `first .. first + count`, generated in parallel. The output does not
/// depend on the thread count.
pub fn generate_samples(cfg: &SystemConfig, count: usize, master_seed: u64, first: u64) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let phi = dft_phase_matrix(cfg.pilot_len, cfg.n())?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate_sample(cfg, &phi, master_seed, first + i))
        .collect()
}

/// Train/val samples take indices `0..n_train_val`, test samples the indices after
/// them, so the test set never overlaps the training data.
pub fn generate_dataset(cfg: &SystemConfig, plan: SplitPlan, master_seed: u64) -> Result<Dataset> {
    if plan.n_train_val + plan.n_test == 0 {
        return Err(Error::Precondition("dataset needs at least one sample".into()));
    }
    if !(plan.train_fraction > 0.0 && plan.train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction must be in (0, 1), got {}", plan.train_fraction)));
    }
    let samples = generate_samples(cfg, plan.n_train_val + plan.n_test, master_seed, 0)?;
    let (n_train, n_val, n_test) = plan.counts();
    Dataset::from_samples(cfg.clone(), master_seed, (n_train, n_val, n_test), samples)
}

impl Dataset {
    pub fn from_samples(cfg: SystemConfig, seed: u64, counts: (usize, usize, usize), samples: Vec<Sample>) -> Result<Self> {
        let (n_train, n_val, n_test) = counts;
        dim_check("sample count", n_train + n_val + n_test, samples.len())?;
        let (in_dim, out_dim) = (2 * cfg.pilot_len * cfg.m, 2 * (cfg.n() + cfg.m));
        let mut inputs = Array2::zeros((samples.len(), in_dim));
        let mut labels = Array2::zeros((samples.len(), out_dim));
        let mut channels = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            dim_check("sample input length", in_dim, s.input.len())?;
            dim_check("sample label length", out_dim, s.label.len())?;
            dim_check("sample h_d length", cfg.m, s.channel.h_d.len())?;
            dim_check("sample h_ru length", cfg.n(), s.channel.h_ru.len())?;
            inputs.row_mut(i).assign(&ndarray::ArrayView1::from(&s.input));
            labels.row_mut(i).assign(&ndarray::ArrayView1::from(&s.label));
            channels.push(s.channel);
        }
        let h_br = los_bs_irs(&cfg);
        Ok(Self { cfg, seed, n_train, n_val, n_test, inputs, labels, channels, h_br })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn pilot_len(&self) -> usize {
        self.cfg.pilot_len
    }

    pub fn split_of(&self, i: usize) -> Split {
        if i < self.n_train {
            Split::Train
        } else if i < self.n_train + self.n_val {
            Split::Val
        } else {
            Split::Test
        }
    }

    fn range(&self, split: Split) -> std::ops::Range<usize> {
        match split {
            Split::Train => 0..self.n_train,
            Split::Val => self.n_train..self.n_train + self.n_val,
            Split::Test => self.n_train + self.n_val..self.len(),
        }
    }

    pub fn indices(&self, split: Split) -> std::ops::Range<usize> {
        self.range(split)
    }

    pub fn inputs_of(&self, split: Split) -> ArrayView2<'_, f64> {
        self.inputs.slice_axis(Axis(0), self.range(split).into())
    }

    pub fn labels_of(&self, split: Split) -> ArrayView2<'_, f64> {
        self.labels.slice_axis(Axis(0), self.range(split).into())
    }

    /// Rows of the training and validation splits, in that order.
    pub fn train_val(&self) -> (Array2<f64>, Array2<f64>) {
        let end = self.n_train + self.n_val;
        (
            self.inputs.slice(ndarray::s![..end, ..]).to_owned(),
            self.labels.slice(ndarray::s![..end, ..]).to_owned(),
        )
    }

    /// Fraction of train+val rows used for training, as stored.
    pub fn train_fraction(&self) -> f64 {
        self.n_train as f64 / (self.n_train + self.n_val).max(1) as f64
    }

    pub fn channel(&self, i: usize) -> Result<ChannelRealization> {
        let rec = &self.channels[i];
        Ok(ChannelRealization {
            h_d: rec.h_d.clone(),
            h_br: self.h_br.clone(),
            h_ru: rec.h_ru.clone(),
            v: cascade(&self.h_br, &rec.h_ru)?,
            ue_position: rec.ue_position,
        })
    }

    pub fn observation(&self, i: usize) -> Result<PilotObservation> {
        let y_p = real_to_complex_stack(self.inputs.row(i).as_slice().unwrap())?;
        Ok(PilotObservation {
            y_p,
            pilot_amplitude: crate::pilot::pilot_amplitude(&self.cfg),
            realization_id: i as u64,
        })
    }

    pub fn label_solution(&self, i: usize) -> Result<PhaseBeamSolution> {
        let omega = real_to_complex_stack(self.labels.row(i).as_slice().unwrap())?;
        PhaseBeamSolution::from_omega(&omega, self.cfg.n(), self.cfg.m)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        write_u32(w, VERSION)?;
        let cfg_text = self.cfg.to_config_string();
        write_u32(w, cfg_text.len() as u32)?;
        w.write_all(cfg_text.as_bytes())?;
        write_u64(w, self.seed)?;
        for c in [self.n_train, self.n_val, self.n_test] {
            write_u64(w, c as u64)?;
        }
        for d in [self.cfg.pilot_len, self.cfg.m, self.cfg.n(), self.inputs.ncols(), self.labels.ncols()] {
            write_u32(w, d as u32)?;
        }
        for (i, rec) in self.channels.iter().enumerate() {
            write_f64s(w, self.inputs.row(i).as_slice().unwrap())?;
            write_f64s(w, self.labels.row(i).as_slice().unwrap())?;
            write_f64s(w, complex_to_real_stack(&rec.h_d).as_slice().unwrap())?;
            write_f64s(w, complex_to_real_stack(&rec.h_ru).as_slice().unwrap())?;
            write_f64s(w, rec.ue_position.as_slice())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, MAGIC, "dataset")?;
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported dataset format version {version}")));
        }
        let cfg_len = read_u32(r)? as usize;
        if cfg_len > 1 << 20 {
            return Err(Error::Format("config header too large".into()));
        }
        let mut cfg_bytes = vec![0u8; cfg_len];
        r.read_exact(&mut cfg_bytes).map_err(|_| Error::Format("file is truncated".into()))?;
        let cfg_text = String::from_utf8(cfg_bytes).map_err(|_| Error::Format("config header is not UTF-8".into()))?;
        let cfg = SystemConfig::parse(&cfg_text, Profile::Desk)?;
        let seed = read_u64(r)?;
        let n_train = read_u64(r)? as usize;
        let n_val = read_u64(r)? as usize;
        let n_test = read_u64(r)? as usize;
        let mut dims = [0usize; 5];
        for d in dims.iter_mut() {
            *d = read_u32(r)? as usize;
        }
        let expected = [cfg.pilot_len, cfg.m, cfg.n(), 2 * cfg.pilot_len * cfg.m, 2 * (cfg.n() + cfg.m)];
        if dims != expected {
            return Err(Error::Format(format!("header dimensions {dims:?} disagree with config {expected:?}")));
        }
        let total = n_train + n_val + n_test;
        let mut samples = Vec::with_capacity(total.min(1 << 20));
        for _ in 0..total {
            let input = read_f64_vec(r, dims[3])?;
            let label = read_f64_vec(r, dims[4])?;
            let h_d = real_to_complex_stack(&read_f64_vec(r, 2 * cfg.m)?)?;
            let h_ru = real_to_complex_stack(&read_f64_vec(r, 2 * cfg.n())?)?;
            let mut ue = [0.0; 3];
            read_f64s(r, &mut ue)?;
            samples.push(Sample {
                input,
                label,
                channel: ChannelRecord { h_d, h_ru, ue_position: Vector3::from(ue) },
            });
        }
        Self::from_samples(cfg, seed, (n_train, n_val, n_test), samples)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }

    /// CSV with `split,index,x_0..,y_0..` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["split".to_string(), "index".to_string()];
        header.extend((0..self.inputs.ncols()).map(|i| format!("x_{i}")));
        header.extend((0..self.labels.ncols()).map(|i| format!("y_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let split = match self.split_of(i) {
                Split::Train => "train",
                Split::Val => "val",
                Split::Test => "test",
            };
            write!(w, "{split},{i}")?;
            for v in self.inputs.row(i).iter().chain(self.labels.row(i).iter()) {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::for_profile(Profile::Desk);
        cfg.n_h = 2;
        cfg.n_v = 2;
        cfg.m = 2;
        cfg.pilot_len = 5;
        cfg
    }

    fn plan(n: usize, t: usize) -> SplitPlan {
        SplitPlan { n_train_val: n, n_test: t, train_fraction: 0.8 }
    }

    #[test]
    fn single_sample_reproducible() {
        let cfg = small_cfg();
        let a = generate_dataset(&cfg, plan(1, 0), 5).unwrap();
        let b = generate_dataset(&cfg, plan(1, 0), 5).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&cfg, plan(1, 0), 6).unwrap();
        assert_ne!(a.inputs, c.inputs);
    }

    #[test]
    fn splits_and_dimensions() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(10, 3), 1).unwrap();
        assert_eq!((d.n_train, d.n_val, d.n_test), (8, 2, 3));
        assert_eq!(d.inputs.ncols(), 2 * 5 * 2);
        assert_eq!(d.labels.ncols(), 2 * (4 + 2));
        assert_eq!(d.split_of(7), Split::Train);
        assert_eq!(d.split_of(8), Split::Val);
        assert_eq!(d.split_of(10), Split::Test);
        assert_eq!(d.inputs_of(Split::Test).nrows(), 3);
    }

    #[test]
    fn labels_are_feasible_and_match_optimizer() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(20, 5), 2).unwrap();
        for i in 0..d.len() {
            let sol = d.label_solution(i).unwrap();
            assert!(sol.is_feasible(1e-9));
            let ch = d.channel(i).unwrap();
            assert_eq!(sol, optimize_phases(&ch.h_d, &ch.v, DEFAULT_ROUNDS).unwrap());
        }
    }

    #[test]
    fn test_split_is_disjoint_from_training() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(30, 10), 3).unwrap();
        let train_rows: Vec<_> = d.indices(Split::Train).chain(d.indices(Split::Val)).map(|i| d.inputs.row(i).to_vec()).collect();
        for i in d.indices(Split::Test) {
            assert!(!train_rows.contains(&d.inputs.row(i).to_vec()));
        }
    }

    #[test]
    fn parallel_equals_serial() {
        let cfg = small_cfg();
        let phi = dft_phase_matrix(cfg.pilot_len, cfg.n()).unwrap();
        let serial: Vec<Sample> = (0..16).map(|i| generate_sample(&cfg, &phi, 9, i).unwrap()).collect();
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| generate_samples(&cfg, 16, 9, 0).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn binary_round_trip_and_errors() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(6, 2), 4).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let back = Dataset::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);
        assert!(matches!(Dataset::read_from(&mut &buf[..buf.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(Dataset::read_from(&mut &buf[1..]), Err(Error::Format(_))));
    }

    #[test]
    fn observation_round_trips_through_inputs() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(3, 0), 8).unwrap();
        let phi = dft_phase_matrix(cfg.pilot_len, cfg.n()).unwrap();
        let ch = d.channel(1).unwrap();
        let obs = simulate_pilot_rx(&ch, &phi, &cfg, 1, &mut seed::rng(8, seed::PILOT_NOISE, 1)).unwrap();
        assert_eq!(d.observation(1).unwrap().y_p, obs.y_p);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let cfg = small_cfg();
        let d = generate_dataset(&cfg, plan(4, 1), 8).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(5).unwrap().starts_with("test,4,"));
    }
}
