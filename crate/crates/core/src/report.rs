//! Report types emitted by the estimators and diagnostics.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// The checked quantity is identically zero or one by construction.
    PassTrivial,
    Fail,
    Inconclusive,
    #[serde(rename = "inconclusive-exploratory")]
    Exploratory,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Statistic {
    pub label: String,
    pub value: f64,
    pub std_error: f64,
}

/// One instance that failed a check, with enough context to replay it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub description: String,
    pub details: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub name: String,
    pub inputs: BTreeMap<String, Value>,
    pub statistics: Vec<Statistic>,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
    /// Per-seed values behind the statistics, written as a side CSV.
    #[serde(skip)]
    pub per_seed: Option<PerSeedTable>,
}

/// Rows of `seed, column...` values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerSeedTable {
    pub columns: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl PerSeedTable {
    pub fn new(columns: &[&str]) -> Self {
        PerSeedTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (seed, values) in &self.rows {
            out.push_str(&seed.to_string());
            for v in values {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        out
    }
}

impl DiagnosticsReport {
    pub fn new(name: &str) -> Self {
        DiagnosticsReport {
            name: name.to_string(),
            inputs: BTreeMap::new(),
            statistics: Vec::new(),
            verdict: Verdict::Inconclusive,
            tolerance: 0.0,
            violations: Vec::new(),
            notes: Vec::new(),
            per_seed: None,
        }
    }

    pub fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.inputs.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn stat(&mut self, label: impl Into<String>, value: f64, std_error: f64) {
        self.statistics.push(Statistic {
            label: label.into(),
            value,
            std_error,
        });
    }

    /// Value of the first statistic with this label.
    pub fn get(&self, label: &str) -> Option<f64> {
        self.statistics
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.value)
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn violation(&mut self, description: impl Into<String>, details: BTreeMap<String, Value>) {
        self.violations.push(Violation {
            description: description.into(),
            details,
        });
    }
}

/// Builds a `BTreeMap<String, Value>` from `key => value` pairs.
#[macro_export]
macro_rules! details {
    ($($key:expr => $value:expr),* $(,)?) => {{
        let mut map = std::collections::BTreeMap::new();
        $(map.insert($key.to_string(), serde_json::json!($value));)*
        map
    }};
}
