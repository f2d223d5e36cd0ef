//! Filtrations `F_0 ⊆ F_1 ⊆ … ⊆ F_T` over one outcome space.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::outcome::{same_space, Event, OutcomeSpace};
use crate::random_variable::StochasticProcess;
use crate::sigma::SigmaAlgebra;

/// A sequence of σ-algebras on one space.
///
/// Construction does not enforce nesting so that arbitrary stage lists can be
/// loaded and checked with [`Filtration::verify_nesting`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filtration {
    space: Arc<OutcomeSpace>,
    stages: Vec<SigmaAlgebra>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NestingVerdict {
    Ok,
    /// `atom` belongs to stage `t` and is not a union of stage `t + 1` atoms.
    Violated { t: usize, atom: Event },
}

impl NestingVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, NestingVerdict::Ok)
    }
}

impl Filtration {
    pub fn from_stages(space: &Arc<OutcomeSpace>, stages: Vec<SigmaAlgebra>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::validation("a filtration needs at least one stage"));
        }
        if stages.iter().any(|s| !same_space(s.space(), space)) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Filtration {
            space: space.clone(),
            stages,
        })
    }

    /// `F_t = σ(ω_1..ω_t)`: stage t's atoms are the length-t prefix cylinders.
    pub fn natural(space: &Arc<OutcomeSpace>) -> Self {
        let stages = (0..=space.horizon())
            .map(|t| SigmaAlgebra::from_keys(space, |p| space.prefix_index(p, t)))
            .collect();
        Filtration {
            space: space.clone(),
            stages,
        }
    }

    /// `F_t = σ(X_0..X_t)`.
    pub fn of_process(process: &StochasticProcess) -> Self {
        let space = process.space();
        let mut stages: Vec<SigmaAlgebra> = Vec::with_capacity(process.variables().len());
        for x in process.variables() {
            let own = x.sigma();
            let stage = match stages.last() {
                Some(prev) => prev.join(&own).expect("process variables share the space"),
                None => own,
            };
            stages.push(stage);
        }
        Filtration {
            space: space.clone(),
            stages,
        }
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn stages(&self) -> &[SigmaAlgebra] {
        &self.stages
    }

    pub fn stage(&self, t: usize) -> Option<&SigmaAlgebra> {
        self.stages.get(t)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Reports the smallest `t` with `F_t ⊄ F_{t+1}` and the first atom of
    /// `F_t` that `F_{t+1}` cannot express.
    pub fn verify_nesting(&self) -> NestingVerdict {
        for (t, pair) in self.stages.windows(2).enumerate() {
            let split = pair[0]
                .first_atom_split_by(&pair[1])
                .expect("stages share the space");
            if let Some(atom) = split {
                return NestingVerdict::Violated {
                    t,
                    atom: pair[0].atom(atom),
                };
            }
        }
        NestingVerdict::Ok
    }

    /// Stage-wise inclusion `self_t ⊆ other_t`.
    pub fn is_sub_filtration(&self, other: &Filtration) -> Result<bool> {
        if self.stages.len() != other.stages.len() {
            return Err(Error::HorizonMismatch {
                expected: self.stages.len(),
                found: other.stages.len(),
            });
        }
        for (a, b) in self.stages.iter().zip(&other.stages) {
            if !a.is_sub_algebra(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True iff every `X_t` is `F_t`-measurable.
    pub fn is_adapted(&self, process: &StochasticProcess) -> Result<bool> {
        Ok(self.first_unadapted(process)?.is_none())
    }

    /// Smallest `t` at which `X_t` is not `F_t`-measurable.
    pub fn first_unadapted(&self, process: &StochasticProcess) -> Result<Option<usize>> {
        if process.variables().len() != self.stages.len() {
            return Err(Error::HorizonMismatch {
                expected: self.stages.len(),
                found: process.variables().len(),
            });
        }
        for (t, (x, f)) in process.variables().iter().zip(&self.stages).enumerate() {
            if !x.is_measurable(f)? {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }
}
