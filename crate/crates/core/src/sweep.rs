//! Parameter sweeps: the cartesian product of `key=v1,v2,...` overrides on a
//! base scenario, run independently on the selected executor.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::check;
use crate::compensator::displacement_per_pulse;
use crate::exec::{self, Execution};
use crate::scenario::{ConfigError, RawScenario, Scenario};
use crate::sim::{self, RunSummary};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vary {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for Vary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (key, values) = s.split_once('=').ok_or_else(|| format!("expected key=v1,v2,... in `{s}`"))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_owned()).collect();
        if key.trim().is_empty() || values.iter().any(String::is_empty) {
            return Err(format!("empty key or value in `{s}`"));
        }
        Ok(Self {
            key: key.trim().to_owned(),
            values,
        })
    }
}

/// One scenario per point of the product, named `{base}_{key}-{value}...`.
/// Points are ordered with the last `Vary` changing fastest.
pub fn expand(base: &RawScenario, varies: &[Vary]) -> Result<Vec<Scenario>, ConfigError> {
    let base_name = Scenario::from_raw(base)?.name;
    let mut points: Vec<(RawScenario, String)> = vec![(base.clone(), base_name)];
    for vary in varies {
        let mut next = Vec::with_capacity(points.len() * vary.values.len());
        for (raw, name) in &points {
            for value in &vary.values {
                let mut raw = raw.clone();
                raw.set(&vary.key, value)?;
                next.push((raw, format!("{name}_{}-{value}", vary.key)));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(mut raw, name)| {
            raw.set("name", &name)?;
            Scenario::from_raw(&raw)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub summary: RunSummary,
    pub invariant_violations: usize,
}

pub fn run(scenarios: &[Scenario], execution: Execution) -> Vec<SweepResult> {
    exec::map(scenarios, execution, |s| {
        let (trace, summary) = sim::run(s);
        let delta = displacement_per_pulse(&s.chain);
        SweepResult {
            name: s.name.clone(),
            summary,
            invariant_violations: check::scan(&trace, delta).len(),
        }
    })
}

pub fn results_csv(results: &[SweepResult]) -> String {
    let mut out = String::from(
        "name,delivered_samples,dropped_samples,violations,max_gap,final_gap,\
         mean_abs_acquisition_error,max_abs_acquisition_error,pulses_emitted,invariant_violations\n",
    );
    for r in results {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.name,
            s.delivered_samples,
            s.dropped_samples,
            s.violations,
            s.max_gap,
            s.final_gap,
            s.mean_abs_acquisition_error,
            s.max_abs_acquisition_error,
            s.pulses_emitted,
            r.invariant_violations
        );
    }
    out
}
