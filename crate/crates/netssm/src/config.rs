//! Run configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use netssm_core::baselines::RlsConfig;
use netssm_core::scenarios::InputMode;
use netssm_core::state::{MAX_ORDER, MIN_ORDER};
use netssm_core::{DynamicsSchedule, GraphSnapshot, Prior};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{toml_error, DEFAULT_BELIEF_FLOOR};

/// Default threshold for [`crate::harness::recovery_time`].
pub const DEFAULT_RECOVERY_THRESHOLD: f64 = 0.05;
/// Default length of the window before each change used for steady-state
/// means.
pub const DEFAULT_STEADY_WINDOW: usize = 100;
/// Node count of the surrogate airport network when none is given.
pub const DEFAULT_AIRPORT_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dump_beliefs: bool,
    #[serde(default = "default_belief_floor")]
    pub belief_floor: f64,
    /// Worker threads; 0 lets rayon pick.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_recovery_threshold")]
    pub recovery_threshold: f64,
    #[serde(default = "default_steady_window")]
    pub steady_window: usize,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub filter: FilterSpec,
    pub methods: Vec<MethodSpec>,
}

fn default_belief_floor() -> f64 {
    DEFAULT_BELIEF_FLOOR
}
fn default_recovery_threshold() -> f64 {
    DEFAULT_RECOVERY_THRESHOLD
}
fn default_steady_window() -> usize {
    DEFAULT_STEADY_WINDOW
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SyntheticEr,
    Airports,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputModeSpec {
    #[default]
    IidGaussian,
    Ar1,
}

impl From<InputModeSpec> for InputMode {
    fn from(m: InputModeSpec) -> Self {
        match m {
            InputModeSpec::IidGaussian => InputMode::IidGaussian,
            InputModeSpec::Ar1 => InputMode::Ar1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Required for `synthetic-er`; for `airports` it defaults to the graph
    /// file's node count, or 16 for the surrogate network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default = "default_er_p")]
    pub er_p: f64,
    #[serde(default = "default_sigma")]
    pub sigma_obs: f64,
    #[serde(default)]
    pub input_mode: InputModeSpec,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    /// Nominal airport network as an edge list; a surrogate is generated
    /// from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    /// Recorded airport input signals; Poisson counts are drawn when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals_file: Option<PathBuf>,
    /// Per-node Poisson rates; every node uses `default_rate` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default = "default_rate")]
    pub default_rate: f64,
}

fn default_er_p() -> f64 {
    0.25
}
fn default_sigma() -> f64 {
    0.1
}
fn default_rate() -> f64 {
    netssm_core::scenarios::DEFAULT_FLIGHT_RATE
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DynamicsSpec {
    #[default]
    Static,
    PeriodicFlip {
        period: usize,
        p_c: f64,
    },
    /// The nominal rows are those of the initial graph.
    Closure {
        p_e: f64,
        #[serde(default)]
        p_r: f64,
    },
    /// Every off-diagonal entry follows the same two-state chain each step.
    EdgeMarkov {
        p01: f64,
        p10: f64,
    },
}

impl DynamicsSpec {
    /// Builds the schedule; `initial` supplies closure nominal rows.
    pub fn schedule(&self, initial: &GraphSnapshot) -> Result<DynamicsSchedule> {
        use netssm_core::{EdgeMarkov, NodeId, TransitionKernel};
        Ok(match *self {
            DynamicsSpec::Static => DynamicsSchedule::Static,
            DynamicsSpec::PeriodicFlip { period, p_c } => {
                DynamicsSchedule::PeriodicFlip { period, p_c }
            }
            DynamicsSpec::Closure { p_e, p_r } => DynamicsSchedule::Closure {
                p_e,
                p_r,
                nominal: initial.clone(),
            },
            DynamicsSpec::EdgeMarkov { p01, p10 } => {
                let order = initial.order();
                let edge = EdgeMarkov::new(p01, p10)?;
                let kernels = (0..order)
                    .map(|n| TransitionKernel::edgewise(NodeId(n), order, vec![edge; order - 1]))
                    .collect::<netssm_core::Result<Vec<_>>>()?;
                DynamicsSchedule::Custom(vec![kernels])
            }
        })
    }

    fn check(&self, field: &str, problems: &mut Vec<String>) {
        let mut prob = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("{field}.{name}: must lie in [0, 1] (got {v})"));
            }
        };
        match *self {
            DynamicsSpec::Static => {}
            DynamicsSpec::PeriodicFlip { period, p_c } => {
                prob("p_c", p_c);
                if period == 0 {
                    problems.push(format!("{field}.period: must be at least 1"));
                }
            }
            DynamicsSpec::Closure { p_e, p_r } => {
                prob("p_e", p_e);
                prob("p_r", p_r);
            }
            DynamicsSpec::EdgeMarkov { p01, p10 } => {
                prob("p01", p01);
                prob("p10", p10);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorSpec {
    #[default]
    Uniform,
    /// Point mass on the true initial graph.
    InitialGraph,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default)]
    pub prior: PriorSpec,
    /// Dynamics assumed by the filter; defaults to the scenario's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
    /// Noise level assumed by the filter; defaults to the scenario's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_obs: Option<f64>,
}

impl FilterSpec {
    pub fn prior(&self, initial: &GraphSnapshot) -> Prior {
        match self.prior {
            PriorSpec::Uniform => Prior::Uniform,
            PriorSpec::InitialGraph => Prior::Point(initial.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodSpec {
    /// Filter posterior mean.
    Avg,
    /// Filter posterior mode.
    Map,
    Rls {
        window: usize,
    },
    Rrls {
        window: usize,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iters: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

impl MethodSpec {
    /// Label used in result files.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Avg => "Avg".into(),
            MethodSpec::Map => "MAP".into(),
            MethodSpec::Rls { window } => format!("RLS(t_w={window})"),
            MethodSpec::Rrls { window, alpha, .. } => format!("RRLS(t_w={window} alpha={alpha})"),
        }
    }

    /// Least-squares settings, or `None` for the filter estimators.
    pub fn rls_config(&self) -> Option<RlsConfig> {
        match *self {
            MethodSpec::Avg | MethodSpec::Map => None,
            MethodSpec::Rls { window } => Some(RlsConfig::plain(window)),
            MethodSpec::Rrls {
                window,
                alpha,
                max_iters,
                tol,
            } => {
                let mut cfg = RlsConfig::lasso(window, alpha);
                if let Some(m) = max_iters {
                    cfg.max_iters = m;
                }
                if let Some(t) = tol {
                    cfg.tol = t;
                }
                Some(cfg)
            }
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub sigma_obs: Option<f64>,
}

impl RunConfig {
    /// Parses TOML text. Relative input paths are resolved against `base`.
    pub fn from_toml(text: &str, source: &Path, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(source, text, &e))?;
        for p in [&mut cfg.scenario.graph_file, &mut cfg.scenario.signals_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Reads and parses a config file without validating it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, path, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.scenario.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(h) = o.horizon {
            self.scenario.horizon = h;
        }
        if let Some(s) = o.sigma_obs {
            self.scenario.sigma_obs = s;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let s = &self.scenario;
        match (s.kind, s.order) {
            (ScenarioKind::SyntheticEr, None) => {
                problems.push("scenario.order: required for synthetic-er".into())
            }
            (_, Some(n)) if !(MIN_ORDER..=MAX_ORDER).contains(&n) => problems.push(format!(
                "scenario.order: must be between {MIN_ORDER} and {MAX_ORDER} (got {n})"
            )),
            _ => {}
        }
        if !(0.0..=1.0).contains(&s.er_p) {
            problems.push(format!(
                "scenario.er_p: must lie in [0, 1] (got {})",
                s.er_p
            ));
        }
        check_sigma("scenario.sigma_obs", s.sigma_obs, &mut problems);
        if s.horizon == 0 {
            problems.push("scenario.horizon: must be at least 1".into());
        }
        s.dynamics.check("scenario.dynamics", &mut problems);
        match s.kind {
            ScenarioKind::SyntheticEr => {
                for (name, set) in [
                    ("graph_file", s.graph_file.is_some()),
                    ("signals_file", s.signals_file.is_some()),
                    ("rates", s.rates.is_some()),
                ] {
                    if set {
                        problems.push(format!("scenario.{name}: only valid for airports"));
                    }
                }
            }
            ScenarioKind::Airports => {
                if !matches!(s.dynamics, DynamicsSpec::Closure { .. }) {
                    problems.push("scenario.dynamics.kind: airports requires closure".into());
                }
                if s.input_mode != InputModeSpec::IidGaussian {
                    problems.push("scenario.input_mode: not used by airports".into());
                }
                if !(s.default_rate > 0.0 && s.default_rate.is_finite()) {
                    problems.push(format!(
                        "scenario.default_rate: must be positive (got {})",
                        s.default_rate
                    ));
                }
                if let Some(rates) = &s.rates {
                    if let Some(n) = s.order {
                        if rates.len() != n {
                            problems.push(format!(
                                "scenario.rates: expected {n} entries (got {})",
                                rates.len()
                            ));
                        }
                    }
                    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                        problems.push(format!("scenario.rates: must be positive (got {r})"));
                    }
                }
            }
        }
        if let Some(d) = &self.filter.dynamics {
            d.check("filter.dynamics", &mut problems);
        }
        if let Some(sigma) = self.filter.sigma_obs {
            check_sigma("filter.sigma_obs", sigma, &mut problems);
        }
        if self.methods.is_empty() {
            problems.push("methods: at least one method is required".into());
        }
        let mut labels = Vec::new();
        for (k, m) in self.methods.iter().enumerate() {
            let label = m.label();
            if labels.contains(&label) {
                problems.push(format!("methods[{k}]: duplicate method {label}"));
            }
            labels.push(label);
            if let Some(rc) = m.rls_config() {
                if rc.window == 0 {
                    problems.push(format!("methods[{k}].window: must be at least 1"));
                }
                if !(rc.alpha >= 0.0 && rc.alpha.is_finite()) {
                    problems.push(format!(
                        "methods[{k}].alpha: must be non-negative (got {})",
                        rc.alpha
                    ));
                }
                if rc.max_iters == 0 {
                    problems.push(format!("methods[{k}].max_iters: must be at least 1"));
                }
                if rc.tol.is_nan() || rc.tol <= 0.0 {
                    problems.push(format!(
                        "methods[{k}].tol: must be positive (got {})",
                        rc.tol
                    ));
                }
            }
        }
        if self.recovery_threshold.is_nan() || self.recovery_threshold <= 0.0 {
            problems.push(format!(
                "recovery_threshold: must be positive (got {})",
                self.recovery_threshold
            ));
        }
        if self.steady_window == 0 {
            problems.push("steady_window: must be at least 1".into());
        }
        if self.belief_floor.is_nan() || self.belief_floor < 0.0 {
            problems.push(format!(
                "belief_floor: must be non-negative (got {})",
                self.belief_floor
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Noise level the filter assumes.
    pub fn filter_sigma(&self) -> f64 {
        self.filter.sigma_obs.unwrap_or(self.scenario.sigma_obs)
    }

    /// Dynamics the filter assumes.
    pub fn filter_dynamics(&self) -> &DynamicsSpec {
        self.filter
            .dynamics
            .as_ref()
            .unwrap_or(&self.scenario.dynamics)
    }
}

fn check_sigma(field: &str, sigma: f64, problems: &mut Vec<String>) {
    if !(sigma > 0.0 && sigma.is_finite()) {
        problems.push(format!(
            "{field}: must be positive and finite (got {sigma})"
        ));
    }
}
