use std::fmt::Write as _;
use std::path::Path;

use super::ChannelError;

/// Every scenario parameter. Powers and gains are stored in linear units;
/// the text format uses dB/dBm where noted.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// M
    pub bs_antennas: usize,
    /// N, a perfect square.
    pub irs_elements: usize,
    /// Elements per group edge; groups are `group_edge × group_edge`.
    pub group_edge: usize,
    /// L
    pub low_users: usize,
    /// K
    pub high_users: usize,
    /// Path gain at 1 m, linear.
    pub beta: f64,
    pub alpha_bs_irs: f64,
    pub alpha_user: f64,
    /// Meters, identical for every user.
    pub user_distance: f64,
    /// Rician factor in dB; `+inf` means pure line of sight.
    pub rician_factor_db: f64,
    /// Watts.
    pub noise_power: f64,
    pub wavelength: f64,
    pub element_spacing: f64,
    /// Linear γ_l, one per low-mobility user.
    pub sinr_targets_low: Vec<f64>,
    /// Linear γ_{L+1}.
    pub sinr_target_high: f64,
    pub seed: u64,
    pub bs_center: [f64; 3],
    pub irs_center: [f64; 3],
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 8,
            irs_elements: 400,
            group_edge: 5,
            low_users: 3,
            high_users: 3,
            beta: db_to_linear(-30.0),
            alpha_bs_irs: 2.0,
            alpha_user: 2.5,
            user_distance: 50.0,
            rician_factor_db: 5.0,
            noise_power: dbm_to_watts(-85.0),
            wavelength: 0.05,
            element_spacing: 0.025,
            sinr_targets_low: vec![10.0; 3],
            sinr_target_high: 1.0,
            seed: 1,
            bs_center: [0.0, 0.5, 4.0],
            irs_center: [0.0, 0.0, 4.0],
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

impl ExperimentConfig {
    /// √N
    pub fn irs_side(&self) -> usize {
        (self.irs_elements as f64).sqrt().round() as usize
    }

    pub fn group_count(&self) -> usize {
        let g = self.irs_side() / self.group_edge.max(1);
        g * g
    }

    /// Linear Rician factor κ (infinite for pure LoS).
    pub fn rician_factor(&self) -> f64 {
        db_to_linear(self.rician_factor_db)
    }

    /// β / d^α for the user links.
    pub fn user_path_gain(&self) -> f64 {
        self.beta / self.user_distance.powf(self.alpha_user)
    }

    /// Sets every low-mobility target to `gamma`.
    pub fn set_low_target(&mut self, gamma: f64) {
        self.sinr_targets_low = vec![gamma; self.low_users];
    }

    /// Changes L, keeping the first target as the common value.
    pub fn set_low_users(&mut self, l: usize) {
        let g = self.sinr_targets_low.first().copied().unwrap_or(10.0);
        self.low_users = l;
        self.sinr_targets_low = vec![g; l];
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: &str| Err(ChannelError::InvalidConfig(m.to_string()));
        let side = self.irs_side();
        if self.irs_elements == 0 || side * side != self.irs_elements {
            return bad("irs_elements must be a nonzero perfect square");
        }
        if self.group_edge == 0 || side % self.group_edge != 0 {
            return bad("sqrt(irs_elements) must be divisible by group_edge");
        }
        if self.bs_antennas == 0 {
            return bad("bs_antennas must be positive");
        }
        if self.bs_antennas < self.low_users + 1 {
            return bad("bs_antennas must be at least low_users + 1");
        }
        if self.sinr_targets_low.len() != self.low_users {
            return bad("sinr_target_low count must equal low_users");
        }
        let positive = [
            self.beta,
            self.alpha_bs_irs,
            self.alpha_user,
            self.user_distance,
            self.noise_power,
            self.wavelength,
            self.element_spacing,
            self.sinr_target_high,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("gains, exponents, distances, noise, wavelength, spacing and targets must be positive and finite");
        }
        if self.sinr_targets_low.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return bad("low-mobility SINR targets must be positive and finite");
        }
        if self.rician_factor_db.is_nan() {
            return bad("rician_factor_db must be a number");
        }
        if self.bs_center.iter().chain(&self.irs_center).any(|v| !v.is_finite()) {
            return bad("centers must be finite");
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChannelError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut cfg = Self::default();
        let mut spacing_set = false;
        let mut low_targets: Option<Vec<f64>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ChannelError::Parse {
                line: line_no,
                msg: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let err = |msg: String| ChannelError::Parse { line: line_no, msg };
            let num = |v: &str| -> Result<f64, ChannelError> {
                parse_f64(v).ok_or_else(|| err(format!("`{key}`: cannot parse `{v}` as a number")))
            };
            let int = |v: &str| -> Result<usize, ChannelError> {
                v.parse::<usize>()
                    .map_err(|_| err(format!("`{key}`: cannot parse `{v}` as a count")))
            };
            match key {
                "bs_antennas" => cfg.bs_antennas = int(value)?,
                "irs_elements" => cfg.irs_elements = int(value)?,
                "group_edge" => cfg.group_edge = int(value)?,
                "low_users" => cfg.low_users = int(value)?,
                "high_users" => cfg.high_users = int(value)?,
                "beta_db" => cfg.beta = db_to_linear(num(value)?),
                "alpha_bs_irs" => cfg.alpha_bs_irs = num(value)?,
                "alpha_user" => cfg.alpha_user = num(value)?,
                "user_distance" => cfg.user_distance = num(value)?,
                "rician_factor_db" => cfg.rician_factor_db = num(value)?,
                "noise_power_dbm" => cfg.noise_power = dbm_to_watts(num(value)?),
                "wavelength" => cfg.wavelength = num(value)?,
                "element_spacing" => {
                    cfg.element_spacing = num(value)?;
                    spacing_set = true;
                }
                "sinr_target_low" => {
                    let v: Result<Vec<f64>, _> = value.split(',').map(|s| num(s.trim())).collect();
                    low_targets = Some(v?);
                }
                "sinr_target_high" => cfg.sinr_target_high = num(value)?,
                "seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|_| err(format!("`seed`: cannot parse `{value}`")))?
                }
                "bs_center" => cfg.bs_center = parse_triple(value).ok_or_else(|| err("bs_center needs x,y,z".into()))?,
                "irs_center" => cfg.irs_center = parse_triple(value).ok_or_else(|| err("irs_center needs x,y,z".into()))?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        if !spacing_set {
            cfg.element_spacing = cfg.wavelength / 2.0;
        }
        cfg.sinr_targets_low = match low_targets {
            // A single value applies to every user.
            Some(v) if v.len() == 1 => vec![v[0]; cfg.low_users],
            Some(v) => v,
            None => vec![cfg.sinr_targets_low.first().copied().unwrap_or(10.0); cfg.low_users],
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Text form accepted by [`ExperimentConfig::parse`]; round-trips exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let targets: Vec<String> = self.sinr_targets_low.iter().map(|g| fmt_f64(*g)).collect();
        let _ = writeln!(s, "bs_antennas = {}", self.bs_antennas);
        let _ = writeln!(s, "irs_elements = {}", self.irs_elements);
        let _ = writeln!(s, "group_edge = {}", self.group_edge);
        let _ = writeln!(s, "low_users = {}", self.low_users);
        let _ = writeln!(s, "high_users = {}", self.high_users);
        let _ = writeln!(s, "beta_db = {}", fmt_f64(linear_to_db(self.beta)));
        let _ = writeln!(s, "alpha_bs_irs = {}", fmt_f64(self.alpha_bs_irs));
        let _ = writeln!(s, "alpha_user = {}", fmt_f64(self.alpha_user));
        let _ = writeln!(s, "user_distance = {}", fmt_f64(self.user_distance));
        let _ = writeln!(s, "rician_factor_db = {}", fmt_f64(self.rician_factor_db));
        let _ = writeln!(s, "noise_power_dbm = {}", fmt_f64(watts_to_dbm(self.noise_power)));
        let _ = writeln!(s, "wavelength = {}", fmt_f64(self.wavelength));
        let _ = writeln!(s, "element_spacing = {}", fmt_f64(self.element_spacing));
        let _ = writeln!(s, "sinr_target_low = {}", targets.join(","));
        let _ = writeln!(s, "sinr_target_high = {}", fmt_f64(self.sinr_target_high));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "bs_center = {}", fmt_triple(self.bs_center));
        let _ = writeln!(s, "irs_center = {}", fmt_triple(self.irs_center));
        s
    }
}

fn parse_f64(v: &str) -> Option<f64> {
    match v.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => v.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

fn parse_triple(v: &str) -> Option<[f64; 3]> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| p.trim().parse::<f64>().ok())
        .collect::<Option<_>>()?;
    <[f64; 3]>::try_from(parts).ok()
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        // `{:?}` prints the shortest string that parses back to the same value.
        format!("{x:?}")
    }
}

fn fmt_triple(t: [f64; 3]) -> String {
    format!("{},{},{}", fmt_f64(t[0]), fmt_f64(t[1]), fmt_f64(t[2]))
}
