//! System constants and their `key = value` file format.
//!
//! A config file only needs the keys it wants to change; everything else comes
//! from the selected [`Profile`]. Unknown keys are rejected with the key named.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which parameter set to start from before applying a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// M = 4, N = 4x4, T = N + 1 = 17. Trains in minutes on a laptop CPU.
    Desk,
    /// M = 10, N = 10x10, T = N + 1 = 101.
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile `{other}` (expected desk|paper)"))),
        }
    }
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }

    /// Default (train+validation, test) sample counts.
    pub fn sample_counts(self) -> (usize, usize) {
        match self {
            Profile::Desk => (10_000, 500),
            Profile::Paper => (80_000, 2_000),
        }
    }

    /// Reduced pilot length used by the short-pilot network.
    pub fn short_pilot_len(self) -> usize {
        match self {
            Profile::Desk => 10,
            Profile::Paper => 64,
        }
    }
}

/// Square region the UE is dropped in, at a fixed height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub x0: f64,
    pub y0: f64,
    pub size: f64,
    pub height: f64,
}

/// All physical and protocol constants of one simulation.
///
/// Geometry: BS array on the x-axis at the origin, IRS in a plane parallel to
/// yz at `(d_br, 0, 0)` facing the BS, UE room between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antennas.
    pub m: usize,
    /// IRS columns (horizontal).
    pub n_h: usize,
    /// IRS rows (vertical).
    pub n_v: usize,
    /// BS antenna spacing in wavelengths.
    pub d_h: f64,
    /// IRS element spacing in wavelengths.
    pub d_r: f64,
    /// Carrier wavelength in meters.
    pub lambda_c: f64,
    /// BS-IRS distance in meters.
    pub d_br: f64,
    pub l_d: usize,
    pub l_ru: usize,
    pub pathloss_exponent: f64,
    pub beta0_db: f64,
    pub d0: f64,
    pub noise_dbm: f64,
    pub pilot_dbm: f64,
    pub downlink_dbm: f64,
    pub pilot_len: usize,
    pub room: Room,
    pub d_ru_min: f64,
    /// Upper bound of the uniform BS-UE path delay, nanoseconds.
    pub tau_d_max_ns: f64,
    /// Upper bound of the uniform IRS-UE path delay, nanoseconds.
    pub tau_ru_max_ns: f64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (m, n_h, n_v) = match profile {
            Profile::Desk => (4, 4, 4),
            Profile::Paper => (10, 10, 10),
        };
        let d_br = 292.0;
        let d_ru_min = 7.0;
        SystemConfig {
            m,
            n_h,
            n_v,
            d_h: 0.5,
            d_r: 0.25,
            lambda_c: 0.1,
            d_br,
            l_d: 5,
            l_ru: 5,
            pathloss_exponent: 3.8,
            beta0_db: -20.4,
            d0: 1.0,
            noise_dbm: -94.0,
            pilot_dbm: 25.0,
            downlink_dbm: 10.0,
            pilot_len: n_h * n_v + 1,
            room: default_room(d_br, d_ru_min),
            d_ru_min,
            tau_d_max_ns: 10.0,
            tau_ru_max_ns: 5.0,
            seed: 0,
        }
    }

    /// IRS element count.
    pub fn n(&self) -> usize {
        self.n_h * self.n_v
    }

    pub fn carrier_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.lambda_c
    }

    pub fn validate(&self) -> Result<()> {
        let positive_counts = [
            ("m", self.m),
            ("n_h", self.n_h),
            ("n_v", self.n_v),
            ("l_d", self.l_d),
            ("l_ru", self.l_ru),
            ("pilot_len", self.pilot_len),
        ];
        for (key, v) in positive_counts {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be >= 1")));
            }
        }
        let positive_reals = [
            ("d_h", self.d_h),
            ("d_r", self.d_r),
            ("lambda_c", self.lambda_c),
            ("d_br", self.d_br),
            ("d0", self.d0),
            ("d_ru_min", self.d_ru_min),
            ("room_size", self.room.size),
        ];
        for (key, v) in positive_reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{key}` must be a positive finite number, got {v}")));
            }
        }
        if self.tau_d_max_ns < 0.0 || self.tau_ru_max_ns < 0.0 {
            return Err(Error::Config("path delay bounds must be non-negative".into()));
        }
        Ok(())
    }

    /// Reads a config file on top of `profile` defaults.
    pub fn load(path: &Path, profile: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, profile)
    }

    pub fn parse(text: &str, profile: Profile) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = Self::for_profile(profile);
        file.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes every key, so that `parse(to_config_string())` round-trips.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("m", self.m.to_string());
        kv("n_h", self.n_h.to_string());
        kv("n_v", self.n_v.to_string());
        kv("d_h", fmt_f64(self.d_h));
        kv("d_r", fmt_f64(self.d_r));
        kv("lambda_c", fmt_f64(self.lambda_c));
        kv("d_br", fmt_f64(self.d_br));
        kv("l_d", self.l_d.to_string());
        kv("l_ru", self.l_ru.to_string());
        kv("pathloss_exponent", fmt_f64(self.pathloss_exponent));
        kv("beta0_db", fmt_f64(self.beta0_db));
        kv("d0", fmt_f64(self.d0));
        kv("noise_dbm", fmt_f64(self.noise_dbm));
        kv("pilot_dbm", fmt_f64(self.pilot_dbm));
        kv("downlink_dbm", fmt_f64(self.downlink_dbm));
        kv("pilot_len", self.pilot_len.to_string());
        kv("room_x0", fmt_f64(self.room.x0));
        kv("room_y0", fmt_f64(self.room.y0));
        kv("room_size", fmt_f64(self.room.size));
        kv("ue_height", fmt_f64(self.room.height));
        kv("d_ru_min", fmt_f64(self.d_ru_min));
        kv("tau_d_max_ns", fmt_f64(self.tau_d_max_ns));
        kv("tau_ru_max_ns", fmt_f64(self.tau_ru_max_ns));
        kv("seed", self.seed.to_string());
        s
    }
}

// Debug formatting of f64 is round-trip exact and always carries a `.` or exponent.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// 10x10 m room whose near edge is `d_ru_min` in front of the IRS, centered on the
/// BS-IRS axis.
fn default_room(d_br: f64, d_ru_min: f64) -> Room {
    let size = 10.0;
    Room {
        x0: d_br - d_ru_min - size,
        y0: -size / 2.0,
        size,
        height: 1.5,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    m: Option<usize>,
    n_h: Option<usize>,
    n_v: Option<usize>,
    d_h: Option<f64>,
    d_r: Option<f64>,
    lambda_c: Option<f64>,
    d_br: Option<f64>,
    l_d: Option<usize>,
    l_ru: Option<usize>,
    pathloss_exponent: Option<f64>,
    beta0_db: Option<f64>,
    d0: Option<f64>,
    noise_dbm: Option<f64>,
    pilot_dbm: Option<f64>,
    downlink_dbm: Option<f64>,
    pilot_len: Option<usize>,
    room_x0: Option<f64>,
    room_y0: Option<f64>,
    room_size: Option<f64>,
    ue_height: Option<f64>,
    d_ru_min: Option<f64>,
    tau_d_max_ns: Option<f64>,
    tau_ru_max_ns: Option<f64>,
    seed: Option<u64>,
}

impl ConfigFile {
    fn apply(self, cfg: &mut SystemConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(
            m, n_h, n_v, d_h, d_r, lambda_c, d_br, l_d, l_ru, pathloss_exponent, beta0_db, d0,
            noise_dbm, pilot_dbm, downlink_dbm, d_ru_min, tau_d_max_ns, tau_ru_max_ns, seed
        );
        // Geometry-dependent defaults follow the (possibly overridden) distances.
        let mut room = default_room(cfg.d_br, cfg.d_ru_min);
        room.size = self.room_size.unwrap_or(room.size);
        room.x0 = self.room_x0.unwrap_or(cfg.d_br - cfg.d_ru_min - room.size);
        room.y0 = self.room_y0.unwrap_or(-room.size / 2.0);
        room.height = self.ue_height.unwrap_or(room.height);
        cfg.room = room;
        cfg.pilot_len = self.pilot_len.unwrap_or(cfg.n() + 1);
    }
}
