//! Run configuration: strict JSON in, validated config and a stable hash out.

use std::fmt;
use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qhm_core::experiment::Init;
use qhm_core::problems::ProblemError;
use qhm_core::schedules::{expand, ScheduleError, ScheduleKind, ScheduleSet, StepPlan, Target};
use qhm_core::{OptimizerKind, ProblemSpec};

/// Schedules as written in a config. `beta` and `gamma` may be left out when
/// the optimizer does not read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesConfig {
    pub batch: ScheduleKind,
    pub lr: ScheduleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<ScheduleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ScheduleKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// `scale * N(0, I)`, drawn from each run seed.
    Random { scale: f64 },
    Fixed { x: Vec<f64> },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Random { scale: 1.0 }
    }
}

impl InitConfig {
    pub fn to_init(&self) -> Init {
        match self {
            InitConfig::Random { scale } => Init::Random { scale: *scale },
            InitConfig::Fixed { x } => Init::Fixed(x.clone()),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_log_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerKind,
    pub schedules: SchedulesConfig,
    /// Number of epochs `M`.
    pub epochs: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write every `log_every`-th epoch row (the last epoch is always kept).
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub init: InitConfig,
    /// Also write the generated dataset as `dataset.csv`.
    #[serde(default)]
    pub export_dataset: bool,
}

/// One offending config field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Read { path: PathBuf, source: std::io::Error },
    Parse { field: String, message: String },
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn fields(&self) -> Vec<FieldError> {
        match self {
            ConfigError::Read { path, source } => vec![FieldError::new(path.display().to_string(), source.to_string())],
            ConfigError::Parse { field, message } => vec![FieldError::new(field.clone(), message.clone())],
            ConfigError::Invalid(v) => v.clone(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields = self.fields();
        write!(f, "invalid config ({} problem{})", fields.len(), if fields.len() == 1 { "" } else { "s" })?;
        for e in fields {
            write!(f, "\n  {}: {}", e.field, e.reason)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Strict parse of any config type; the error names the failing field path.
pub fn parse_strict<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse { field: if path == "." { "<root>".into() } else { path }, message: e.into_inner().to_string() }
    })?;
    de.end().map_err(|e| ConfigError::Parse { field: "<root>".into(), message: e.to_string() })?;
    Ok(value)
}

pub fn read_text(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        parse_strict(&read_text(path)?)
    }

    /// Applies `--seeds` and `--out`.
    pub fn with_overrides(mut self, seeds: Option<&[u64]>, out: Option<&Path>) -> Self {
        if let Some(s) = seeds {
            self.seeds = s.to_vec();
        }
        if let Some(o) = out {
            self.output_dir = o.to_path_buf();
        }
        self
    }

    /// The four schedules the optimizer actually follows. SGD runs with
    /// `beta = gamma = 0`; NSHB and SHB run with `gamma = 1`.
    pub fn effective_schedules(&self) -> Result<ScheduleSet, Vec<FieldError>> {
        let s = &self.schedules;
        let zero = ScheduleKind::Constant { value: 0.0 };
        let one = ScheduleKind::Constant { value: 1.0 };
        let need = |k: &Option<ScheduleKind>, name: &str| {
            k.clone().ok_or_else(|| {
                FieldError::new(format!("schedules.{name}"), format!("required for optimizer {:?}", self.optimizer))
            })
        };
        let (beta, gamma) = match self.optimizer {
            OptimizerKind::Sgd => (Ok(zero.clone()), Ok(zero)),
            OptimizerKind::Nshb | OptimizerKind::Shb => (need(&s.beta, "beta"), Ok(one)),
            OptimizerKind::Qhm => (need(&s.beta, "beta"), need(&s.gamma, "gamma")),
        };
        match (beta, gamma) {
            (Ok(beta), Ok(gamma)) => Ok(ScheduleSet { batch: s.batch.clone(), lr: s.lr.clone(), beta, gamma }),
            (b, g) => Err([b.err(), g.err()].into_iter().flatten().collect()),
        }
    }

    /// Schedules present in the config that the optimizer ignores.
    pub fn ignored_schedules(&self) -> Vec<&'static str> {
        let s = &self.schedules;
        let mut out = Vec::new();
        match self.optimizer {
            OptimizerKind::Sgd => {
                if s.beta.is_some() {
                    out.push("beta");
                }
                if s.gamma.is_some() {
                    out.push("gamma");
                }
            }
            OptimizerKind::Nshb | OptimizerKind::Shb if s.gamma.is_some() => out.push("gamma"),
            _ => {}
        }
        out
    }

    /// Checks every field and expands the plan; all problems are reported at
    /// once.
    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let mut errors = Vec::new();
        if self.seeds.is_empty() {
            errors.push(FieldError::new("seeds", "must list at least one seed"));
        }
        if self.epochs == 0 {
            errors.push(FieldError::new("epochs", "must be at least 1"));
        }
        if self.log_every == 0 {
            errors.push(FieldError::new("log_every", "must be at least 1"));
        }
        match &self.init {
            InitConfig::Random { scale } if !scale.is_finite() || *scale < 0.0 => {
                errors.push(FieldError::new("init.scale", "must be finite and >= 0"))
            }
            InitConfig::Fixed { x } if x.len() != self.problem.dim() => errors.push(FieldError::new(
                "init.x",
                format!("has {} entries, problem dimension is {}", x.len(), self.problem.dim()),
            )),
            InitConfig::Fixed { x } if x.iter().any(|v| !v.is_finite()) => {
                errors.push(FieldError::new("init.x", "entries must be finite"))
            }
            _ => {}
        }
        if let Err(e) = self.problem.build() {
            errors.push(problem_error(e));
        }
        let set = match self.effective_schedules() {
            Ok(set) => {
                for (target, kind) in set.iter() {
                    if let Err(e) = kind.validate(target) {
                        errors.push(schedule_error(target, e));
                    }
                }
                Some(set)
            }
            Err(mut e) => {
                errors.append(&mut e);
                None
            }
        };
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        let set = set.expect("schedules validated");
        let plan = expand(&set, self.problem.n(), self.epochs)
            .map_err(|e| ConfigError::Invalid(vec![FieldError::new("schedules", e.to_string())]))?;
        Ok(Validated { set, plan })
    }

    /// Canonical JSON of every field that affects results: sorted keys, no
    /// whitespace, `output_dir` left out.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_dir");
        }
        let mut out = String::new();
        write_canonical(&v, &mut out);
        out
    }

    /// 64-bit FNV-1a of [`RunConfig::canonical_json`], as 16 hex digits.
    pub fn hash_hex(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_json().as_bytes()))
    }
}

/// Output of [`RunConfig::validate`].
#[derive(Debug, Clone)]
pub struct Validated {
    pub set: ScheduleSet,
    pub plan: StepPlan,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&serde_json::to_string(scalar).unwrap()),
    }
}

fn problem_error(e: ProblemError) -> FieldError {
    match e {
        ProblemError::InvalidArgument { name, reason } => FieldError::new(format!("problem.{name}"), reason),
        other => FieldError::new("problem", other.to_string()),
    }
}

fn schedule_error(target: Target, e: ScheduleError) -> FieldError {
    match e {
        ScheduleError::InvalidParameter { field, reason } => FieldError::new(format!("schedules.{target}.{field}"), reason),
        other => FieldError::new(format!("schedules.{target}"), other.to_string()),
    }
}
