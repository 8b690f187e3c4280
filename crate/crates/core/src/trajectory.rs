use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fbm::TimeGrid;
use crate::lattice::LatticeVector;
use crate::noise::NoiseField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// The original state `u`.
    U,
    /// The transformed state `v = u - W`.
    V,
}

/// Lattice states on the nodes of a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<LatticeVector>,
    pub representation: Representation,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.times()
    }

    pub fn final_state(&self) -> &LatticeVector {
        self.states.last().expect("trajectory has at least one node")
    }

    pub fn state_at(&self, t: f64) -> Result<&LatticeVector> {
        Ok(&self.states[self.grid.node_of(t)?])
    }

    /// `max_t |state(t)|`.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(LatticeVector::norm).fold(0.0, f64::max)
    }

    /// Largest node-wise distance `max_t |self(t) - other(t)|` in the
    /// Euclidean norm.
    pub fn max_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// Switches between `u` and `v = u - W` using the field values on the
    /// trajectory nodes.
    pub fn with_representation(&self, target: Representation, field: &NoiseField) -> Result<Self> {
        if target == self.representation {
            return Ok(self.clone());
        }
        let sign = match target {
            Representation::U => 1.0,
            Representation::V => -1.0,
        };
        let states = self
            .grid
            .times()
            .zip(&self.states)
            .map(|(t, s)| {
                let mut out = s.clone();
                out.axpy(sign, &field.eval_w(t)?);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid,
            states,
            representation: target,
        })
    }
}
