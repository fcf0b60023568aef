//! Subcommand driver for dataset generation, training, evaluation and the
//! pilot-power sweep. Every command writes a JSON manifest next to its outputs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use irs_core::experiments::{
    evaluate, generate_dataset, pilot_power_sweep, write_sweep_csv, Dataset, EvalInputs, SplitPlan, SweepSettings,
};
use irs_core::nn::{Method, MlpModel, TrainConfig};
use irs_core::{seed, Error, Profile, Result, SystemConfig};

/// Seed label for network training; combined with the method index.
pub const TRAIN_SEED: &str = "train";

#[derive(Debug, Parser)]
#[command(name = "irs-dl", version, about = "Learned IRS phase configuration and beamforming")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of pilot observations and optimized labels.
    Gen(GenArgs),
    /// Train a network on a dataset.
    Train(TrainArgs),
    /// Evaluate models and baselines on a dataset's test split.
    Eval(EvalArgs),
    /// Retrain and score at several pilot powers.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Config file (key = value) applied on top of the profile.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, default_value = "desk")]
    pub profile: Profile,

    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides the pilot length T.
    #[arg(long)]
    pub pilot_len: Option<usize>,

    /// Overrides the pilot power in dBm.
    #[arg(long)]
    pub pilot_dbm: Option<f64>,

    /// Total sample count, test samples included.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Test samples (default: profile value).
    #[arg(long)]
    pub test_samples: Option<usize>,
}

impl SystemArgs {
    pub fn resolve(&self) -> Result<(SystemConfig, SplitPlan)> {
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::load(path, self.profile)?,
            None => SystemConfig::for_profile(self.profile),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.pilot_len {
            cfg.pilot_len = t;
        }
        if let Some(p) = self.pilot_dbm {
            cfg.pilot_dbm = p;
        }
        cfg.validate()?;

        let mut plan = SplitPlan::for_profile(self.profile);
        if let Some(n) = self.test_samples {
            plan.n_test = n;
        }
        if let Some(total) = self.samples {
            if total <= plan.n_test {
                return Err(Error::Config(format!(
                    "--samples {total} leaves no training data after {} test samples",
                    plan.n_test
                )));
            }
            plan.n_train_val = total - plan.n_test;
        }
        Ok((cfg, plan))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Dataset file to write.
    #[arg(long)]
    pub out: PathBuf,

    /// Also export the dataset as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    /// 1: full pilots (T = N+1), 2: short pilots (T < N+1).
    #[arg(long)]
    pub method: u8,

    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,

    /// History CSV (default: `<out>.history.csv`).
    #[arg(long)]
    pub history: Option<PathBuf>,

    /// Training seed (default: the dataset's seed).
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub max_epochs: Option<usize>,

    #[arg(long)]
    pub lr: Option<f64>,

    /// Hidden widths, comma separated (default: per method and profile).
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,

    /// Profile for the default widths (default: inferred from the dataset).
    #[arg(long)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Dataset with full-length pilots; its test split is scored.
    #[arg(long)]
    pub dataset: PathBuf,

    /// Full-pilot model.
    #[arg(long)]
    pub model1: Option<PathBuf>,

    /// Short-pilot model; needs `--dataset2`.
    #[arg(long, requires = "dataset2")]
    pub model2: Option<PathBuf>,

    /// Short-pilot dataset over the same channels.
    #[arg(long)]
    pub dataset2: Option<PathBuf>,

    /// Also score LS, random phases and the direct path.
    #[arg(long)]
    pub baselines: bool,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Pilot powers in dBm.
    #[arg(long, value_delimiter = ',', default_value = "15,25,35,45")]
    pub powers: Vec<f64>,

    /// Skip the short-pilot network.
    #[arg(long)]
    pub no_dl2: bool,

    #[arg(long)]
    pub max_epochs: Option<usize>,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub profile: Option<String>,
    pub system_config: String,
    pub train_config: Option<TrainConfig>,
    pub seeds: BTreeMap<String, u64>,
    pub output_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

impl RunManifest {
    fn new(command: &str, cfg: &SystemConfig, output_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            config_path: None,
            profile: None,
            system_config: cfg.to_config_string(),
            train_config: None,
            seeds: BTreeMap::new(),
            output_dir: output_dir.to_path_buf(),
            artifacts: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0.0,
        }
    }

    /// Stamps the finish time, records the manifest itself and writes it.
    fn finish(mut self, path: PathBuf) -> Result<Self> {
        self.finished_unix = unix_now();
        self.artifacts.push(path.clone());
        let text = serde_json::to_string_pretty(&self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(self)
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Dimension(_) | Error::Precondition(_) | Error::Singular(_) => 3,
        Error::Numerical(_) => 4,
        Error::Format(_) | Error::Io(_) => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let dispatch = move || match cli.command {
        Command::Gen(a) => cmd_gen(&a).map(drop),
        Command::Train(a) => cmd_train(&a).map(drop),
        Command::Eval(a) => cmd_eval(&a).map(drop),
        Command::Sweep(a) => cmd_sweep(&a).map(drop),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?
            .install(dispatch),
        None => dispatch(),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<RunManifest> {
    let (cfg, plan) = a.system.resolve()?;
    let mut manifest = RunManifest::new("gen", &cfg, &parent_dir(&a.out));
    manifest.config_path = a.system.config.clone();
    manifest.profile = Some(a.system.profile.name().to_string());
    manifest.seeds.insert("master".into(), cfg.seed);

    let ds = generate_dataset(&cfg, plan, cfg.seed)?;
    ds.save(&a.out)?;
    manifest.artifacts.push(a.out.clone());
    if let Some(csv) = &a.csv {
        let mut w = create(csv)?;
        ds.write_csv(&mut w)?;
        w.flush()?;
        manifest.artifacts.push(csv.clone());
    }
    manifest.finish(sibling(&a.out, ".manifest.json"))
}

fn infer_profile(cfg: &SystemConfig) -> Profile {
    let paper = SystemConfig::for_profile(Profile::Paper);
    if cfg.m == paper.m && cfg.n() == paper.n() {
        Profile::Paper
    } else {
        Profile::Desk
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<RunManifest> {
    let method = Method::from_index(a.method)?;
    let ds = Dataset::load(&a.dataset)?;
    method.check_pilot_len(ds.pilot_len(), ds.cfg.n())?;
    let profile = a.profile.unwrap_or_else(|| infer_profile(&ds.cfg));
    let hidden = a.hidden.clone().unwrap_or_else(|| method.hidden_layers(profile).to_vec());

    let master = a.seed.unwrap_or(ds.seed);
    let mut tc = TrainConfig {
        seed: seed::derive(master, TRAIN_SEED, method.index() as u64),
        train_fraction: ds.train_fraction(),
        ..TrainConfig::default()
    };
    if let Some(e) = a.max_epochs {
        tc.max_epochs = e;
    }
    if let Some(lr) = a.lr {
        tc.lr0 = lr;
    }

    let mut manifest = RunManifest::new("train", &ds.cfg, &parent_dir(&a.out));
    manifest.profile = Some(profile.name().to_string());
    manifest.seeds.insert("master".into(), master);
    manifest.seeds.insert("train".into(), tc.seed);
    manifest.artifacts.push(a.dataset.clone());

    let (x, y) = ds.train_val();
    let (model, history) = MlpModel::fit(&x, &y, &hidden, &tc)?;
    model.save(&a.out)?;
    manifest.artifacts.push(a.out.clone());

    let history_path = a.history.clone().unwrap_or_else(|| sibling(&a.out, ".history.csv"));
    let mut w = create(&history_path)?;
    history.write_csv(&mut w)?;
    w.flush()?;
    manifest.artifacts.push(history_path);
    manifest.train_config = Some(tc);
    manifest.finish(sibling(&a.out, ".manifest.json"))
}

fn load_model(path: &Path, ds: &Dataset) -> Result<MlpModel> {
    let (m, n, t) = (ds.cfg.m, ds.cfg.n(), ds.pilot_len());
    MlpModel::load(path, Some((2 * t * m, 2 * (n + m))))
}

pub fn cmd_eval(a: &EvalArgs) -> Result<RunManifest> {
    let ds = Dataset::load(&a.dataset)?;
    let model1 = a.model1.as_deref().map(|p| load_model(p, &ds)).transpose()?;
    let second = match (&a.model2, &a.dataset2) {
        (Some(mp), Some(dp)) => {
            let ds2 = Dataset::load(dp)?;
            Method::ShortPilot.check_pilot_len(ds2.pilot_len(), ds2.cfg.n())?;
            let model = load_model(mp, &ds2)?;
            Some((model, ds2))
        }
        (Some(_), None) => return Err(Error::Precondition("--model2 needs --dataset2".into())),
        _ => None,
    };

    let report = evaluate(
        &ds,
        EvalInputs {
            dl1: model1.as_ref(),
            dl2: second.as_ref().map(|(m, d)| (m, d)),
            baselines: a.baselines,
        },
    )?;

    fs::create_dir_all(&a.out_dir)?;
    let mut manifest = RunManifest::new("eval", &ds.cfg, &a.out_dir);
    manifest.seeds.insert("master".into(), ds.seed);
    manifest.artifacts.push(a.dataset.clone());
    manifest.artifacts.extend(a.model1.iter().chain(&a.model2).chain(&a.dataset2).cloned());

    let emit = |name: &str, write: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<PathBuf> {
        let path = a.out_dir.join(name);
        let mut w = create(&path)?;
        write(&mut w)?;
        w.flush()?;
        Ok(path)
    };
    manifest.artifacts.push(emit("se_cdf.csv", &|w| report.write_se_cdf(w))?);
    manifest.artifacts.push(emit("nmse.csv", &|w| report.write_nmse(w))?);
    manifest.artifacts.push(emit("mismatch_cdf.csv", &|w| report.write_mismatch_cdf(w))?);
    manifest.finish(a.out_dir.join("manifest.json"))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<RunManifest> {
    let (cfg, plan) = a.system.resolve()?;
    let profile = a.system.profile;
    let n = cfg.n();
    let mut tc = TrainConfig { train_fraction: plan.train_fraction, ..TrainConfig::default() };
    tc.seed = seed::derive(cfg.seed, TRAIN_SEED, Method::FullPilot.index() as u64);
    if let Some(e) = a.max_epochs {
        tc.max_epochs = e;
    }
    let mut networks = vec![(Method::FullPilot, n + 1, Method::FullPilot.hidden_layers(profile).to_vec())];
    if !a.no_dl2 {
        let t = profile.short_pilot_len().min(n);
        networks.push((Method::ShortPilot, t, Method::ShortPilot.hidden_layers(profile).to_vec()));
    }
    let settings = SweepSettings { plan, train: tc.clone(), networks, include_ls: true, seed: cfg.seed };
    let rows = pilot_power_sweep(&cfg, &a.powers, &settings)?;

    fs::create_dir_all(&a.out_dir)?;
    let mut manifest = RunManifest::new("sweep", &cfg, &a.out_dir);
    manifest.config_path = a.system.config.clone();
    manifest.profile = Some(profile.name().to_string());
    manifest.seeds.insert("master".into(), cfg.seed);
    manifest.seeds.insert("train".into(), tc.seed);
    manifest.train_config = Some(tc);
    let path = a.out_dir.join("nmse.csv");
    let mut w = create(&path)?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;
    manifest.artifacts.push(path);
    manifest.finish(a.out_dir.join("manifest.json"))
}
