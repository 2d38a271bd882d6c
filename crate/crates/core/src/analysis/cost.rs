use std::fmt;
use std::str::FromStr;

use crate::machine::{ExecStats, InstrClass};

use super::AnalysisError;

const DEFAULT_PROFILE: &str = include_str!("../../../../config/default.weights");
const TRAFFIC_PROFILE: &str = include_str!("../../../../config/traffic.weights");

/// Non-negative weights of a linear cost over the counters.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CostWeights {
    #[serde(skip)]
    classes: [f64; 12],
    pub element_load: f64,
    pub element_store: f64,
    pub line: f64,
}

impl CostWeights {
    /// Every weight zero.
    pub fn zero() -> Self {
        Self { classes: [0.0; 12], element_load: 0.0, element_store: 0.0, line: 0.0 }
    }

    /// One per instruction, memory free: cost equals the instruction count.
    pub fn unit() -> Self {
        DEFAULT_PROFILE.parse().expect("shipped default profile parses")
    }

    /// Instructions count once, each line touched counts heavily.
    pub fn traffic() -> Self {
        TRAFFIC_PROFILE.parse().expect("shipped traffic profile parses")
    }

    /// Looks up a shipped profile by name (`default`/`unit` or `traffic`).
    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" | "unit" => Some(Self::unit()),
            "traffic" => Some(Self::traffic()),
            _ => None,
        }
    }

    pub fn class(&self, class: InstrClass) -> f64 {
        self.classes[class.index()]
    }

    pub fn set_class(&mut self, class: InstrClass, w: f64) {
        self.classes[class.index()] = w;
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self::unit()
    }
}

/// `key = value` lines; keys are class names, `all` (every class),
/// `element_load`, `element_store` and `line`. `#` starts a comment.
impl FromStr for CostWeights {
    type Err = AnalysisError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut w = Self::zero();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| AnalysisError::Weights { line: i + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| err(format!("bad number `{}`", value.trim())))?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(err(format!("weight for `{key}` must be finite and non-negative")));
            }
            match key {
                "all" => w.classes = [value; 12],
                "element_load" => w.element_load = value,
                "element_store" => w.element_store = value,
                "line" => w.line = value,
                other => {
                    let class = InstrClass::from_name(other).ok_or_else(|| err(format!("unknown key `{other}`")))?;
                    w.set_class(class, value);
                }
            }
        }
        Ok(w)
    }
}

impl fmt::Display for CostWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in InstrClass::ALL {
            writeln!(f, "{} = {}", class.name(), self.class(class))?;
        }
        writeln!(f, "element_load = {}", self.element_load)?;
        writeln!(f, "element_store = {}", self.element_store)?;
        writeln!(f, "line = {}", self.line)
    }
}

pub fn cost(stats: &ExecStats, weights: &CostWeights) -> f64 {
    let instr: f64 = InstrClass::ALL.iter().map(|&c| stats.count(c) as f64 * weights.class(c)).sum();
    instr
        + stats.mem_elements_loaded as f64 * weights.element_load
        + stats.mem_elements_stored as f64 * weights.element_store
        + stats.mem_lines_touched as f64 * weights.line
}

/// `candidate / baseline`; two zeros compare equal.
fn ratio(candidate: f64, baseline: f64) -> f64 {
    if candidate == baseline {
        1.0
    } else {
        candidate / baseline
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClassRatio {
    pub class: &'static str,
    pub baseline: u64,
    pub candidate: u64,
    pub ratio: f64,
}

/// Candidate counters relative to a baseline; every ratio is candidate / baseline.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub candidate: String,
    pub classes: Vec<ClassRatio>,
    pub instruction_ratio: f64,
    /// Element loads plus stores.
    pub memory_ratio: f64,
    pub line_ratio: f64,
    pub cost_ratio: f64,
}

pub fn compare(
    baseline_id: &str,
    baseline: &ExecStats,
    candidate_id: &str,
    candidate: &ExecStats,
    weights: &CostWeights,
) -> ComparisonReport {
    let classes = InstrClass::ALL
        .iter()
        .map(|&c| ClassRatio {
            class: c.name(),
            baseline: baseline.count(c),
            candidate: candidate.count(c),
            ratio: ratio(candidate.count(c) as f64, baseline.count(c) as f64),
        })
        .collect();
    ComparisonReport {
        baseline: baseline_id.to_string(),
        candidate: candidate_id.to_string(),
        classes,
        instruction_ratio: ratio(candidate.total_instructions as f64, baseline.total_instructions as f64),
        memory_ratio: ratio(candidate.memory_accesses() as f64, baseline.memory_accesses() as f64),
        line_ratio: ratio(candidate.mem_lines_touched as f64, baseline.mem_lines_touched as f64),
        cost_ratio: ratio(cost(candidate, weights), cost(baseline, weights)),
    }
}

/// Geometric mean of positive values; `None` for an empty slice.
pub fn geomean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    Some((log_sum / values.len() as f64).exp())
}
