//! Pipeline configuration and the flat `key = value` config file format.
//!
//! Keys are the long command-line flag names without the leading dashes.
//! Lines starting with `#` and blank lines are ignored. `t` may repeat or
//! hold a comma-separated list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::qfi::{ensure_t, MotionModel};
use crate::sr::SrMethod;
use crate::SCALE;

pub const DEFAULT_T: f32 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub scale: usize,
    /// Interpolation times inside each gap, on the (2, 4) frame scale.
    pub t_values: Vec<f32>,
    pub flow: FlowParams,
    pub sr: SrMethod,
    /// Load `<i>_<j>.flo` from here instead of estimating flows.
    pub flow_dir: Option<PathBuf>,
    pub refine_weights: Option<PathBuf>,
    pub mask_weights: Option<PathBuf>,
    pub flow_refine_weights: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// `None` uses every available core.
    pub workers: Option<usize>,
    /// Also write the interpolated LR frames to `<out>/lr`.
    pub emit_lr: bool,
    pub motion: MotionModel,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale: SCALE,
            t_values: vec![DEFAULT_T],
            flow: FlowParams::default(),
            sr: SrMethod::Bicubic,
            flow_dir: None,
            refine_weights: None,
            mask_weights: None,
            flow_refine_weights: None,
            output_dir: PathBuf::from("out"),
            workers: None,
            emit_lr: false,
            motion: MotionModel::Quadratic,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale != SCALE {
            return Err(Error::InvalidArgument(format!(
                "spatial scale is fixed at {SCALE}, got {}",
                self.scale
            )));
        }
        if self.t_values.is_empty() {
            return Err(Error::InvalidArgument("at least one t value is required".into()));
        }
        for &t in &self.t_values {
            ensure_t(t)?;
        }
        if self.t_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "t values must be strictly increasing".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        self.flow.validate()
    }

    /// Output frames per gap, counting the synthesized ones and the
    /// gap's leading input frame.
    pub fn frames_per_gap(&self) -> usize {
        self.t_values.len() + 1
    }
}

/// Parsed config file: key to every value it was given, in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Vec<String>>,
}

/// Every key the config file accepts.
pub const CONFIG_KEYS: &[&str] = &[
    "in",
    "out",
    "gt",
    "flow-dir",
    "hr-dir",
    "emit-lr",
    "refine-weights",
    "mask-weights",
    "flow-refine-weights",
    "t",
    "workers",
    "seed",
    "motion",
    "runs",
    "pyramid-levels",
    "iterations",
    "alpha",
    "scale",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: expected key=value, got {line:?}",
                    n + 1
                )));
            };
            let key = k.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: unknown key {key:?}",
                    n + 1
                )));
            }
            entries.entry(key.to_string()).or_default().push(v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Last value given for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn all(&self, key: &str) -> &[String] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}"))
            }),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(Error::InvalidArgument(format!(
                "config key {key}: expected a boolean, got {v:?}"
            ))),
        }
    }

    /// All `t` values, splitting comma-separated lists.
    pub fn t_values(&self) -> Result<Vec<f32>> {
        let mut out = Vec::new();
        for v in self.all("t") {
            for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                out.push(part.parse().map_err(|_| {
                    Error::InvalidArgument(format!("config key t: cannot parse {part:?}"))
                })?);
            }
        }
        Ok(out)
    }
}
