//! JSON shapes for the core types, plus the text syntax for interval sets.
//!
//! Paths are symbol strings, events are sorted arrays of path strings, and
//! every other shape is built from those two.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use filtra_core::filtration::Filtration;
use filtra_core::{
    Action, Event, Interval, IntervalSet, LatticeModel, OutcomeSpace, Policy, ProbabilityMeasure, RandomVariable,
    SigmaAlgebra, StochasticProcess,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub type EventJson = Vec<String>;

pub fn event_to_json(event: &Event) -> EventJson {
    event.path_strings()
}

pub fn event_from_json(space: &Arc<OutcomeSpace>, paths: &[String]) -> Result<Event> {
    Ok(space.event_from_strings(paths)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureJson {
    Steps { step_probabilities: Vec<Vec<f64>> },
    Weights { weights: Vec<f64> },
}

pub fn measure_to_json(measure: &ProbabilityMeasure) -> MeasureJson {
    match measure.step_probabilities() {
        Some(steps) => MeasureJson::Steps {
            step_probabilities: steps.to_vec(),
        },
        None => MeasureJson::Weights {
            weights: measure.weights().to_vec(),
        },
    }
}

pub fn measure_from_json(space: &Arc<OutcomeSpace>, json: &MeasureJson) -> Result<ProbabilityMeasure> {
    Ok(match json {
        MeasureJson::Steps { step_probabilities } => ProbabilityMeasure::product(space, step_probabilities.clone())?,
        MeasureJson::Weights { weights } => ProbabilityMeasure::explicit(space, weights.clone())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaJson {
    pub atoms: Vec<EventJson>,
}

pub fn sigma_to_json(sigma: &SigmaAlgebra) -> SigmaJson {
    SigmaJson {
        atoms: sigma.atoms().iter().map(event_to_json).collect(),
    }
}

pub fn sigma_from_json(space: &Arc<OutcomeSpace>, json: &SigmaJson) -> Result<SigmaAlgebra> {
    let atoms = json
        .atoms
        .iter()
        .map(|a| event_from_json(space, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaAlgebra::from_atoms(space, &atoms)?)
}

/// A filtration stage as read by `verify`: either a partition into atoms or
/// a raw list of member sets whose axioms are still to be checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageJson {
    Atoms { atoms: Vec<EventJson> },
    Members { members: Vec<EventJson> },
}

pub fn filtration_to_json(filtration: &Filtration) -> Vec<SigmaJson> {
    filtration.stages().iter().map(sigma_to_json).collect()
}

pub fn filtration_from_json(space: &Arc<OutcomeSpace>, stages: &[SigmaJson]) -> Result<Filtration> {
    let stages = stages
        .iter()
        .map(|s| sigma_from_json(space, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Filtration::from_stages(space, stages)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableJson {
    pub values: Vec<f64>,
}

pub fn variable_to_json(x: &RandomVariable) -> VariableJson {
    VariableJson {
        values: x.values().to_vec(),
    }
}

pub fn variable_from_json(space: &Arc<OutcomeSpace>, json: &VariableJson) -> Result<RandomVariable> {
    Ok(RandomVariable::new(space, json.values.clone())?)
}

pub fn process_to_json(x: &StochasticProcess) -> Vec<VariableJson> {
    x.variables().iter().map(variable_to_json).collect()
}

pub fn process_from_json(space: &Arc<OutcomeSpace>, json: &[VariableJson]) -> Result<StochasticProcess> {
    let vars = json
        .iter()
        .map(|v| variable_from_json(space, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(StochasticProcess::new(space, vars)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalJson {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSetJson {
    pub universe: [f64; 2],
    pub pieces: Vec<IntervalJson>,
}

pub fn interval_to_json(i: &Interval) -> IntervalJson {
    IntervalJson {
        lo: i.lo,
        lo_closed: i.lo_closed,
        hi: i.hi,
        hi_closed: i.hi_closed,
    }
}

pub fn interval_set_to_json(set: &IntervalSet) -> IntervalSetJson {
    let (lo, hi) = set.universe();
    IntervalSetJson {
        universe: [lo, hi],
        pieces: set.pieces().iter().map(interval_to_json).collect(),
    }
}

pub fn interval_set_from_json(json: &IntervalSetJson) -> Result<IntervalSet> {
    let pieces = json
        .pieces
        .iter()
        .map(|p| Interval::new(p.lo, p.lo_closed, p.hi, p.hi_closed))
        .collect();
    Ok(IntervalSet::new((json.universe[0], json.universe[1]), pieces)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionJson {
    Flat,
    Long,
}

impl From<Action> for ActionJson {
    fn from(a: Action) -> Self {
        match a {
            Action::Flat => ActionJson::Flat,
            Action::Long => ActionJson::Long,
        }
    }
}

impl From<ActionJson> for Action {
    fn from(a: ActionJson) -> Self {
        match a {
            ActionJson::Flat => Action::Flat,
            ActionJson::Long => Action::Long,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub t: usize,
    pub state: f64,
    pub action: ActionJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixEntry {
    pub t: usize,
    pub prefix: String,
    pub action: ActionJson,
}

/// A deterministic decision table keyed by `(t, S_t)` or by `(t, prefix)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyTableJson {
    Markov { entries: Vec<StateEntry> },
    PathAdapted { entries: Vec<PrefixEntry> },
}

pub fn policy_from_json(table: &PolicyTableJson) -> Policy {
    match table {
        PolicyTableJson::Markov { entries } => {
            Policy::markov_table(entries.iter().map(|e| (e.t, e.state, e.action.into())))
        }
        PolicyTableJson::PathAdapted { entries } => {
            Policy::path_table(entries.iter().map(|e| (e.t, e.prefix.clone(), e.action.into())))
        }
    }
}

/// Tabulates a Markov policy over every lattice node `(t, #ups)` with `t < T`.
pub fn markov_policy_to_json(model: &LatticeModel, policy: &Policy) -> Result<PolicyTableJson> {
    let mut entries = Vec::new();
    for t in 0..model.horizon {
        for ups in (0..=t).rev() {
            let mut path = vec!['u'; ups];
            path.resize(model.horizon, 'd');
            entries.push(StateEntry {
                t,
                state: model.price(ups, t - ups),
                action: policy.action(model, t, &path)?.into(),
            });
        }
    }
    Ok(PolicyTableJson::Markov { entries })
}

/// Reads a JSON file, reporting syntax and shape errors with the offending
/// line and a caret under the column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        let source_line = text.lines().nth(line.saturating_sub(1)).unwrap_or("");
        let prefix = format!("{line:>5} | ");
        let caret = format!("{}^", " ".repeat(prefix.len() + column.saturating_sub(1)));
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.to_string(),
            context: format!("{prefix}{source_line}\n{caret}"),
        }
    })
}

/// Parses `[a,b)`, `(a,b]` and friends, optionally joined with `∪` or `|`.
pub fn parse_interval_union(text: &str) -> std::result::Result<Vec<Interval>, String> {
    text.split(['∪', '|']).map(parse_interval).collect()
}

pub fn parse_interval(text: &str) -> std::result::Result<Interval, String> {
    let s = text.trim();
    let bad = || format!("expected an interval like [a,b) but found {s:?}");
    let lo_closed = match s.chars().next() {
        Some('[') => true,
        Some('(') => false,
        _ => return Err(bad()),
    };
    let hi_closed = match s.chars().last() {
        Some(']') => true,
        Some(')') if s.len() > 1 => false,
        _ => return Err(bad()),
    };
    let inner = &s[1..s.len() - 1];
    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid endpoint {:?} in {s:?}", x.trim()))
    };
    let (lo, hi) = (num(a)?, num(b)?);
    if lo > hi {
        return Err(format!("lower endpoint exceeds upper in {s:?}"));
    }
    Ok(Interval::new(lo, lo_closed, hi, hi_closed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_syntax() {
        let i = parse_interval(" [330.3, 331.9) ").unwrap();
        assert_eq!(i, Interval::closed_open(330.3, 331.9));
        let u = parse_interval_union("(1,2]∪[3,4]").unwrap();
        assert_eq!(u, vec![Interval::open_closed(1.0, 2.0), Interval::closed(3.0, 4.0)]);
        for bad in ["", "[1,2", "1,2]", "[1;2]", "[2,1]", "[a,2]", "[1,inf]", ")"] {
            assert!(parse_interval(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn untagged_shapes_pick_the_right_variant() {
        let m: MeasureJson = serde_json::from_str(r#"{"weights":[0.5,0.5]}"#).unwrap();
        assert!(matches!(m, MeasureJson::Weights { .. }));
        let s: StageJson = serde_json::from_str(r#"{"members":[[]]}"#).unwrap();
        assert!(matches!(s, StageJson::Members { .. }));
        let p: PolicyTableJson =
            serde_json::from_str(r#"{"kind":"path_adapted","entries":[{"t":0,"prefix":"","action":"long"}]}"#).unwrap();
        assert!(matches!(p, PolicyTableJson::PathAdapted { .. }));
    }
}
