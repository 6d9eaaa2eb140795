use std::path::{Path, PathBuf};

use nsreg::flows::{
    landau_flow, random_solenoidal, rotation_flow, serrin_flow, HarmonicPolynomial, Polynomial, Spectrum,
    TestFlow, TimeProfile,
};
use nsreg::grid::{GridSpec, TimeGrid};
use nsreg::picard::{epsilon_of, PicardConfig, ScanConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub side: f64,
    pub n: usize,
    /// Shift nodes by `h/2` so that none sits on the origin.
    pub half_shifted: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { side: 4.0, n: 48, half_shifted: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t0: 0.0, t1: 1.0, steps: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

fn default_g() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_h() -> Vec<Monomial> {
    vec![Monomial { coef: 1.0, powers: [1, 1, 0] }]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowConfig {
    Zero {},
    Serrin {
        /// Coefficients of `g(t)` in increasing degree.
        #[serde(default = "default_g")]
        g: Vec<f64>,
        #[serde(default = "default_h")]
        h: Vec<Monomial>,
        #[serde(default = "one")]
        amplitude: f64,
        /// Rescale so that `sup_t ‖u‖_{L^{3,∞}(B₂)}` equals this value.
        #[serde(default)]
        epsilon: Option<f64>,
    },
    Landau {
        a: f64,
    },
    RandomSolenoidal {
        shell_min: f64,
        shell_max: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Rotation {},
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig::Serrin { g: default_g(), h: default_h(), amplitude: 1.0, epsilon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSettings {
    pub amplitudes: Vec<f64>,
    pub early_iterations: usize,
    pub bisection_steps: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        let c = ScanConfig::default();
        Self {
            amplitudes: vec![0.0, 1.0, 3.0, 10.0, 30.0],
            early_iterations: c.early_iterations,
            bisection_steps: c.bisection_steps,
        }
    }
}

impl ScanSettings {
    pub fn config(&self) -> ScanConfig {
        ScanConfig { early_iterations: self.early_iterations, bisection_steps: self.bisection_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormSettings {
    /// Time exponent `m > 2` of the pressure norm.
    pub pressure_exponent: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        Self { pressure_exponent: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualSettings {
    pub resolution: usize,
    pub tolerance: f64,
}

impl Default for ResidualSettings {
    fn default() -> Self {
        Self { resolution: 48, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub flow: FlowConfig,
    pub picard: PicardConfig,
    pub scan: ScanSettings,
    pub norms: NormSettings,
    pub residual: ResidualSettings,
    /// Relative paths are resolved against the output root.
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub time_steps: Option<usize>,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the extension is `.json`, reporting the key
    /// path of the first schema violation.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, is_json)
    }

    pub fn parse(text: &str, is_json: bool) -> Result<Self, CliError> {
        let value: serde_json::Value = if is_json {
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("malformed JSON: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| CliError::Validation(format!("malformed TOML: {e}")))?
        };
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let p = e.path().to_string();
            invalid(if p.is_empty() { "<root>" } else { &p }, e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid_n {
            self.grid.n = n;
        }
        if let Some(m) = o.time_steps {
            self.time.steps = m;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid_spec()?;
        self.time_grid()?;
        self.picard.validate().map_err(|e| invalid("picard", e))?;
        if !(self.norms.pressure_exponent > 2.0) {
            return Err(invalid("norms.pressure_exponent", "must exceed 2"));
        }
        if self.residual.resolution < 4 {
            return Err(invalid("residual.resolution", "must be at least 4"));
        }
        if !(self.residual.tolerance > 0.0) {
            return Err(invalid("residual.tolerance", "must be positive"));
        }
        if self.scan.early_iterations < 2 {
            return Err(invalid("scan.early_iterations", "must be at least 2"));
        }
        if self.scan.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("scan.amplitudes", "entries must be finite and non-negative"));
        }
        match &self.flow {
            FlowConfig::Landau { a } if !(*a > 1.0) => return Err(invalid("flow.a", "must exceed 1")),
            FlowConfig::Serrin { epsilon: Some(e), .. } if !(*e >= 0.0) => {
                return Err(invalid("flow.epsilon", "must be non-negative"))
            }
            FlowConfig::RandomSolenoidal { shell_min, shell_max, .. }
                if !(*shell_min >= 0.0 && shell_max >= shell_min) =>
            {
                return Err(invalid("flow.shell_max", "need 0 <= shell_min <= shell_max"))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = if self.grid.half_shifted {
            GridSpec::half_shifted(self.grid.side, self.grid.n)
        } else {
            GridSpec::new(self.grid.side, self.grid.n)
        };
        g.map_err(|e| invalid("grid", e))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.time.t0, self.time.t1, self.time.steps).map_err(|e| invalid("time", e))
    }

    /// Builds the selected flow, applying amplitude or `ε` normalization.
    pub fn build_flow(&self) -> Result<TestFlow, CliError> {
        let flow = match &self.flow {
            FlowConfig::Zero {} => TestFlow::zero(),
            FlowConfig::Serrin { g, h, amplitude, epsilon } => {
                let terms: Vec<(f64, [u32; 3])> = h.iter().map(|m| (m.coef, m.powers)).collect();
                let h = HarmonicPolynomial::new(Polynomial::new(&terms)).map_err(|e| invalid("flow.h", e))?;
                let f = serrin_flow(TimeProfile { coefficients: g.clone() }, h).map_err(|e| invalid("flow", e))?;
                let f = f.scaled(*amplitude);
                match epsilon {
                    Some(e) => {
                        let (u, _) = f.sample(self.grid_spec()?, self.time_grid()?)?;
                        let now = epsilon_of(&u)?;
                        if now == 0.0 {
                            f
                        } else {
                            f.scaled(e / now)
                        }
                    }
                    None => f,
                }
            }
            FlowConfig::Landau { a } => landau_flow(*a).map_err(|e| invalid("flow.a", e))?,
            FlowConfig::RandomSolenoidal { shell_min, shell_max, slope, amplitude } => {
                let spec = Spectrum { side: self.grid.side, shell_min: *shell_min, shell_max: *shell_max, slope: *slope };
                random_solenoidal(self.seed, spec).map_err(|e| invalid("flow", e))?.scaled(*amplitude)
            }
            FlowConfig::Rotation {} => rotation_flow(),
        };
        Ok(flow)
    }
}
