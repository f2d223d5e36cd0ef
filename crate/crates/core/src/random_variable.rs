//! Real-valued random variables and processes on a finite Ω.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::outcome::{same_space, OutcomeSpace, ProbabilityMeasure};
use crate::sigma::SigmaAlgebra;

/// One finite value per path, in canonical path order.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    space: Arc<OutcomeSpace>,
    values: Vec<f64>,
}

/// Two paths of one atom on which a variable takes different values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurabilityWitness {
    pub atom: usize,
    pub first_path: usize,
    pub first_value: f64,
    pub second_path: usize,
    pub second_value: f64,
}

impl RandomVariable {
    pub fn new(space: &Arc<OutcomeSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.num_paths() {
            return Err(Error::validation(format!(
                "expected {} values, found {}",
                space.num_paths(),
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "value at path {} is not finite",
                space.path_string(p)
            )));
        }
        Ok(RandomVariable {
            space: space.clone(),
            values,
        })
    }

    pub fn from_fn(space: &Arc<OutcomeSpace>, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(space, (0..space.num_paths()).map(f).collect())
    }

    pub fn constant(space: &Arc<OutcomeSpace>, c: f64) -> Result<Self> {
        Self::from_fn(space, |_| c)
    }

    pub fn indicator(event: &crate::Event) -> Self {
        Self::from_fn(event.space(), |p| if event.contains(p) { 1.0 } else { 0.0 })
            .expect("indicator values are finite")
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, path: usize) -> f64 {
        self.values[path]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.space, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_space(&other.space)?;
        Self::new(
            &self.space,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// σ(X): atoms are the level sets of X.
    ///
    /// Values are grouped by exact bit pattern, with `-0.0` folded into `0.0`.
    pub fn sigma(&self) -> SigmaAlgebra {
        SigmaAlgebra::from_keys(&self.space, |p| level_key(self.values[p]))
    }

    /// True iff X is constant on every atom of `f`.
    pub fn is_measurable(&self, f: &SigmaAlgebra) -> Result<bool> {
        Ok(self.measurability_witness(f)?.is_none())
    }

    /// The first atom (in atom order) on which X is not constant.
    pub fn measurability_witness(&self, f: &SigmaAlgebra) -> Result<Option<MeasurabilityWitness>> {
        self.check_space(f.space())?;
        for (i, atom) in f.atom_sets().iter().enumerate() {
            let mut paths = atom.iter();
            let Some(first) = paths.next() else { continue };
            let v0 = level_key(self.values[first]);
            if let Some(other) = paths.find(|&p| level_key(self.values[p]) != v0) {
                return Ok(Some(MeasurabilityWitness {
                    atom: i,
                    first_path: first,
                    first_value: self.values[first],
                    second_path: other,
                    second_value: self.values[other],
                }));
            }
        }
        Ok(None)
    }

    /// `Σ_ω P(ω) X(ω)`.
    pub fn expectation(&self, measure: &ProbabilityMeasure) -> Result<f64> {
        self.check_space(measure.space())?;
        Ok(self
            .values
            .iter()
            .zip(measure.weights())
            .map(|(v, w)| v * w)
            .sum())
    }

    /// E[X | F]: on each atom A, the P-weighted average of X over A.
    ///
    /// Fails on atoms of probability zero instead of picking a version.
    pub fn conditional_expectation(&self, f: &SigmaAlgebra, measure: &ProbabilityMeasure) -> Result<Self> {
        self.check_space(f.space())?;
        self.check_space(measure.space())?;
        let mut values = self.values.clone();
        for (i, atom) in f.atom_sets().iter().enumerate() {
            let mass: f64 = atom.iter().map(|p| measure.weight(p)).sum();
            if mass <= 0.0 {
                return Err(Error::ZeroProbabilityAtom { atom: i });
            }
            let weighted: f64 = atom.iter().map(|p| measure.weight(p) * self.values[p]).sum();
            let mean = weighted / mass;
            for p in atom.iter() {
                values[p] = mean;
            }
        }
        Self::new(&self.space, values)
    }

    fn check_space(&self, space: &Arc<OutcomeSpace>) -> Result<()> {
        if same_space(&self.space, space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

fn level_key(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// `X_0..X_T` on one space.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticProcess {
    space: Arc<OutcomeSpace>,
    variables: Vec<RandomVariable>,
}

impl StochasticProcess {
    pub fn new(space: &Arc<OutcomeSpace>, variables: Vec<RandomVariable>) -> Result<Self> {
        let expected = space.horizon() + 1;
        if variables.len() != expected {
            return Err(Error::HorizonMismatch {
                expected,
                found: variables.len(),
            });
        }
        for v in &variables {
            v.check_space(space)?;
        }
        Ok(StochasticProcess {
            space: space.clone(),
            variables,
        })
    }

    /// Builds `X_t(ω) = f(t, ω)` for `t = 0..=T`.
    pub fn from_fn(space: &Arc<OutcomeSpace>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let variables = (0..=space.horizon())
            .map(|t| RandomVariable::from_fn(space, |p| f(t, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, variables)
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn variables(&self) -> &[RandomVariable] {
        &self.variables
    }

    pub fn at(&self, t: usize) -> &RandomVariable {
        &self.variables[t]
    }

    pub fn horizon(&self) -> usize {
        self.variables.len() - 1
    }
}
