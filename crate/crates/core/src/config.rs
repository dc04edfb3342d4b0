//! Flat `key = value` run configuration.
//!
//! Densities are given per km² at this boundary and stored in SI units.
//! Blank lines and `#` comments are ignored. Every key can also be set from
//! the command line as `--key value`, which overrides the file.

use serde::{Deserialize, Serialize};

use crate::analytic::{ConstantMode, LoadModel, QuadTolerances};
use crate::dynsim::{SimConfig, Warmup};
use crate::error::{Error, Result};
use crate::geomc::{McConfig, Sampling};
use crate::linkbudget::{k_from_carrier_ghz, NetworkParams, TrafficParams, M2_PER_KM2};
use crate::specfun::ApproxMode;

/// Recognised keys with their help text.
pub const KEYS: &[(&str, &str)] = &[
    ("lambda_bs_per_km2", "BS density [BS/km²]"),
    ("pt_dbm", "transmit power [dBm]"),
    ("g0_db", "combined antenna gain [dB]"),
    ("bandwidth_hz", "bandwidth B [Hz]"),
    ("noise_density_dbm_hz", "noise density N0 [dBm/Hz]"),
    ("k_pathloss_db", "path-loss gain K at 1 m [dB, negative]"),
    (
        "carrier_ghz",
        "sets k_pathloss_db to the free-space intercept -(32.4 + 20·log10 fc) dB",
    ),
    ("alpha", "path-loss exponent (>= 2)"),
    ("lambda_u_per_km2", "flow arrival intensity [users/s/km²]"),
    ("sigma_bits", "mean file size [bits]"),
    ("constant_mode", "rederived | paper_literal"),
    ("approx_mode", "reference | paper_approx"),
    ("quad_rel_tol", "relative tolerance of single integrals"),
    (
        "quad_nested_rel_tol",
        "relative tolerance of nested integrals",
    ),
    (
        "sweep_variable",
        "lambda_bs | lambda_u | sigma_bits | g0_db",
    ),
    (
        "sweep_values",
        "comma-separated, strictly increasing (densities per km²)",
    ),
    (
        "realizations",
        "Monte-Carlo PPP realizations per grid point",
    ),
    ("seed", "master seed"),
    (
        "inner_cells",
        "expected BSs in the inner window of one realization",
    ),
    ("points_per_cell", "integration points per expected cell"),
    ("sampling", "stratified | uniform"),
    ("guard_factor", "guard margin in units of 1/√λ"),
    (
        "validate_tolerance",
        "allowed model error of the stable fraction, added to the KS band",
    ),
    (
        "band_coverage",
        "fraction of grid points where the EI load must lie in the Monte-Carlo band",
    ),
    ("duration_s", "simulated time per cell [s]"),
    ("warmup_s", "fixed warmup [s]"),
    (
        "warmup_window_s",
        "window of the automatic 1% warmup rule [s]; replaces warmup_s",
    ),
    ("max_users_cap", "user count that flags a cell unstable"),
    (
        "static_draws",
        "user populations drawn per cell in the static baseline",
    ),
    (
        "sim_points_per_cell",
        "integration points per cell for the simulated network",
    ),
    (
        "sim_realizations",
        "PPP realizations simulated per traffic point",
    ),
    (
        "sim_inner_cells",
        "expected inner BSs per simulated realization",
    ),
    (
        "throughput_lambda_u_per_km2",
        "traffic points of throughput-compare [users/s/km²]",
    ),
    (
        "selftest_tolerance_scale",
        "multiplies every self-test tolerance",
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    LambdaBs,
    LambdaU,
    SigmaBits,
    G0Db,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            Self::LambdaBs => "lambda_bs_per_km2",
            Self::LambdaU => "lambda_u_per_km2",
            Self::SigmaBits => "sigma_bits",
            Self::G0Db => "g0_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Grid in config units (densities per km²).
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep_values is empty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep_values must be finite".into()));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sweep_values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// `base` with the swept variable set to `value` (config units).
    pub fn apply(&self, base: &LoadModel, value: f64) -> Result<LoadModel> {
        let mut m = *base;
        match self.variable {
            SweepVariable::LambdaBs => m.net.lambda_bs = value / M2_PER_KM2,
            SweepVariable::LambdaU => m.traffic.lambda_u = value / M2_PER_KM2,
            SweepVariable::SigmaBits => m.traffic.sigma_bits = value,
            SweepVariable::G0Db => m.net.g0_db = value,
        }
        m.net.validate()?;
        m.traffic.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub net: NetworkParams,
    pub traffic: TrafficParams,
    pub constant_mode: ConstantMode,
    pub approx_mode: ApproxMode,
    pub tolerances: QuadTolerances,
    pub sweep: SweepSpec,
    pub mc: McConfig,
    pub validate_tolerance: f64,
    pub band_coverage: f64,
    pub sim: SimConfig,
    pub sim_realizations: usize,
    pub sim_inner_cells: f64,
    pub throughput_lambda_u: Vec<f64>,
    pub selftest_tolerance_scale: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            net: NetworkParams::default(),
            traffic: TrafficParams::default(),
            constant_mode: ConstantMode::default(),
            approx_mode: ApproxMode::default(),
            tolerances: QuadTolerances::default(),
            sweep: SweepSpec {
                variable: SweepVariable::LambdaBs,
                values: vec![5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            },
            mc: McConfig::default(),
            validate_tolerance: 0.05,
            band_coverage: 0.8,
            sim: SimConfig::default(),
            sim_realizations: 4,
            sim_inner_cells: 100.0,
            throughput_lambda_u: vec![25.0, 100.0, 200.0, 300.0],
            selftest_tolerance_scale: 1.0,
        }
    }
}

fn num(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("key `{key}`: `{value}` is not a finite number")))
}

fn count(key: &str, value: &str) -> Result<u64> {
    value.trim().parse::<u64>().map_err(|_| {
        Error::Config(format!(
            "key `{key}`: `{value}` is not a non-negative integer"
        ))
    })
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

impl Config {
    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, found `{line}`",
                    i + 1
                )));
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                other => Error::Config(format!("line {}: {other}", i + 1)),
            })?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual value. Dashes in `key` are read as
    /// underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        match k {
            "lambda_bs_per_km2" => self.net.lambda_bs = num(k, value)? / M2_PER_KM2,
            "pt_dbm" => self.net.pt_dbm = num(k, value)?,
            "g0_db" => self.net.g0_db = num(k, value)?,
            "bandwidth_hz" => self.net.bandwidth_hz = num(k, value)?,
            "noise_density_dbm_hz" => self.net.noise_density_dbm_hz = num(k, value)?,
            "k_pathloss_db" => self.net.k_pathloss_db = num(k, value)?,
            "carrier_ghz" => {
                let fc = num(k, value)?;
                if fc <= 0.0 {
                    return Err(Error::Config(format!("key `{k}`: must be positive")));
                }
                self.net.k_pathloss_db = k_from_carrier_ghz(fc);
            }
            "alpha" => self.net.alpha = num(k, value)?,
            "lambda_u_per_km2" => self.traffic.lambda_u = num(k, value)? / M2_PER_KM2,
            "sigma_bits" => self.traffic.sigma_bits = num(k, value)?,
            "constant_mode" => {
                self.constant_mode = match value {
                    "rederived" => ConstantMode::Rederived,
                    "paper_literal" => ConstantMode::PaperLiteral,
                    _ => return Err(bad_choice(k, value, "rederived, paper_literal")),
                }
            }
            "approx_mode" => {
                self.approx_mode = match value {
                    "reference" => ApproxMode::Reference,
                    "paper_approx" => ApproxMode::PaperApprox,
                    _ => return Err(bad_choice(k, value, "reference, paper_approx")),
                }
            }
            "quad_rel_tol" => self.tolerances.single = num(k, value)?,
            "quad_nested_rel_tol" => self.tolerances.nested = num(k, value)?,
            "sweep_variable" => {
                self.sweep.variable = match value {
                    "lambda_bs" => SweepVariable::LambdaBs,
                    "lambda_u" => SweepVariable::LambdaU,
                    "sigma_bits" => SweepVariable::SigmaBits,
                    "g0_db" => SweepVariable::G0Db,
                    _ => {
                        return Err(bad_choice(
                            k,
                            value,
                            "lambda_bs, lambda_u, sigma_bits, g0_db",
                        ))
                    }
                }
            }
            "sweep_values" => self.sweep.values = list(k, value)?,
            "realizations" => self.mc.realizations = count(k, value)? as usize,
            "seed" => {
                self.mc.seed = count(k, value)?;
                self.sim.seed = self.mc.seed;
            }
            "inner_cells" => self.mc.inner_cells = num(k, value)?,
            "points_per_cell" => self.mc.points_per_cell = num(k, value)?,
            "sampling" => {
                self.mc.sampling = match value {
                    "stratified" => Sampling::Stratified,
                    "uniform" => Sampling::Uniform,
                    _ => return Err(bad_choice(k, value, "stratified, uniform")),
                }
            }
            "guard_factor" => self.mc.guard_factor = num(k, value)?,
            "validate_tolerance" => self.validate_tolerance = num(k, value)?,
            "band_coverage" => self.band_coverage = num(k, value)?,
            "duration_s" => self.sim.duration_s = num(k, value)?,
            "warmup_s" => self.sim.warmup = Warmup::Fixed(num(k, value)?),
            "warmup_window_s" => {
                self.sim.warmup = Warmup::Auto {
                    window_s: num(k, value)?,
                }
            }
            "max_users_cap" => self.sim.max_users_cap = count(k, value)? as usize,
            "static_draws" => self.sim.static_draws = count(k, value)? as usize,
            "sim_points_per_cell" => self.sim.points_per_cell = num(k, value)?,
            "sim_realizations" => self.sim_realizations = count(k, value)? as usize,
            "sim_inner_cells" => self.sim_inner_cells = num(k, value)?,
            "throughput_lambda_u_per_km2" => self.throughput_lambda_u = list(k, value)?,
            "selftest_tolerance_scale" => self.selftest_tolerance_scale = num(k, value)?,
            _ => return Err(Error::Config(format!("unknown key `{k}`"))),
        }
        Ok(())
    }

    /// Base load model; the sweep variable is applied per grid point.
    pub fn model(&self) -> Result<LoadModel> {
        let mut m = LoadModel::new(self.net, self.traffic)?.with_constant_mode(self.constant_mode);
        m.tolerances = self.tolerances;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.sweep.validate()?;
        self.mc.validate()?;
        self.sim.validate()?;
        if !(self.tolerances.single > 0.0 && self.tolerances.nested > 0.0) {
            return Err(Error::Config(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.band_coverage) {
            return Err(Error::Config("band_coverage must lie in [0, 1]".into()));
        }
        if self.sim_realizations == 0 || !(self.sim_inner_cells > 0.0) {
            return Err(Error::Config(
                "sim_realizations and sim_inner_cells must be positive".into(),
            ));
        }
        if self.throughput_lambda_u.is_empty()
            || self.throughput_lambda_u.iter().any(|&v| !(v >= 0.0))
        {
            return Err(Error::Config(
                "throughput_lambda_u_per_km2 must be a non-empty list of non-negative values"
                    .into(),
            ));
        }
        if !(self.selftest_tolerance_scale >= 0.0) {
            return Err(Error::Config(
                "selftest_tolerance_scale must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn bad_choice(key: &str, value: &str, choices: &str) -> Error {
    Error::Config(format!("key `{key}`: `{value}` is not one of {choices}"))
}
