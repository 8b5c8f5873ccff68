use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Scalar(f64),
    Series(Series),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// Plot on a logarithmic value axis.
    pub semilog: bool,
    /// Reference decay rate `r` drawn as `values[0]·e^{−r(t − t₀)}`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Below => "<",
            Comparison::Above => ">",
        }
    }

    pub fn holds(self, observed: f64, tolerance: f64) -> bool {
        match self {
            Comparison::AtMost => observed <= tolerance,
            Comparison::AtLeast => observed >= tolerance,
            Comparison::Below => observed < tolerance,
            Comparison::Above => observed > tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// Key of the metric the verdict is based on.
    pub metric: String,
    pub observed: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<f64>,
    pub runtime_seconds: f64,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
}

/// Discrete occurrences during a run, written one per line to the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// Pair closer than the collision threshold; `eps` is `None` for the
    /// raw kernel.
    Collision {
        seed: u64,
        eps: Option<f64>,
        i: usize,
        j: usize,
        distance: f64,
        t: f64,
    },
    CflRejection { dt: f64, bound: f64 },
    Merge { pair: usize, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub metrics: BTreeMap<String, Metric>,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(name: &str, seed: u64) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            verdicts: Vec::new(),
            events: Vec::new(),
            provenance: Provenance {
                seed,
                grid: None,
                dt: None,
                runtime_seconds: 0.0,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn scalar(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), Metric::Scalar(value));
        self
    }

    pub fn series(&mut self, key: &str, t: Vec<f64>, values: Vec<f64>, semilog: bool, reference_rate: Option<f64>) -> &mut Self {
        self.metrics.insert(
            key.to_string(),
            Metric::Series(Series {
                t,
                values,
                semilog,
                reference_rate,
            }),
        );
        self
    }

    /// Records a verdict on a metric; a scalar metric is added when `metric`
    /// is not yet present.
    pub fn verdict(&mut self, name: &str, metric: &str, observed: f64, comparison: Comparison, tolerance: f64) -> bool {
        if !self.metrics.contains_key(metric) {
            self.scalar(metric, observed);
        }
        let passed = comparison.holds(observed, tolerance);
        self.verdicts.push(Verdict {
            name: name.to_string(),
            metric: metric.to_string(),
            observed,
            comparison,
            tolerance,
            passed,
        });
        passed
    }

    /// Boolean property recorded as a 0/1 metric.
    pub fn flag(&mut self, name: &str, holds: bool) -> bool {
        self.verdict(name, name, if holds { 1.0 } else { 0.0 }, Comparison::AtLeast, 1.0)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match self.metrics.get(key)? {
            Metric::Scalar(v) => Some(*v),
            Metric::Series(_) => None,
        }
    }

    pub fn get_series(&self, key: &str) -> Option<&Series> {
        match self.metrics.get(key)? {
            Metric::Series(s) => Some(s),
            Metric::Scalar(_) => None,
        }
    }

    /// Copy without the wall-clock runtime, for reproducibility comparisons.
    pub fn without_runtime(&self) -> Self {
        let mut r = self.clone();
        r.provenance.runtime_seconds = 0.0;
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_reference_metrics_and_round_trip() {
        let mut r = ExperimentReport::new("demo", 7);
        r.param("dt", 0.01).series("h", vec![0.0, 1.0], vec![1.0, 0.1], true, Some(2.0));
        assert!(r.verdict("rate", "fitted_rate", -2.1, Comparison::AtMost, -1.8));
        assert!(!r.verdict("small", "fitted_rate", -2.1, Comparison::AtLeast, 0.0));
        assert_eq!(r.get("fitted_rate"), Some(-2.1));
        assert!(!r.passed());
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
