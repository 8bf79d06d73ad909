use serde::{Deserialize, Serialize};

use super::SchemeHistory;
use crate::elliptic::SpatialField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionMode {
    /// u_c^h(t) = U_m on [mh, (m+1)h)
    PiecewiseConstant,
    /// u^h(t) = U_m + (U_{m+1} − U_m)(t − mh)/h
    PiecewiseLinear,
}

/// Time interpolant of a history.
#[derive(Debug, Clone, Copy)]
pub struct Reconstruction<'a> {
    history: &'a SchemeHistory,
    mode: ReconstructionMode,
}

impl<'a> Reconstruction<'a> {
    pub fn new(history: &'a SchemeHistory, mode: ReconstructionMode) -> Self {
        Reconstruction { history, mode }
    }

    pub fn mode(&self) -> ReconstructionMode {
        self.mode
    }

    /// Interval index m and offset θ = (t − mh)/h ∈ [0,1); t = T maps to (M, 0).
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let grid = self.history.grid();
        let final_time = grid.final_time();
        if !(0.0..=final_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, final_time });
        }
        let steps = grid.steps();
        let h = grid.step();
        let mut m = ((t / h).floor() as usize).min(steps);
        // guard against rounding putting t just below grid.time(m)
        if m > 0 && t < grid.time(m) {
            m -= 1;
        }
        if m < steps && t >= grid.time(m + 1) {
            m += 1;
        }
        if m == steps {
            return Ok((steps, 0.0));
        }
        Ok((m, (t - grid.time(m)) / h))
    }

    /// Value at degree of freedom `node` and time t.
    pub fn evaluate(&self, node: usize, t: f64) -> Result<f64> {
        let dofs = self.history.mesh().dofs();
        if node >= dofs {
            return Err(Error::Domain(format!("node index {node} outside 0..{dofs}")));
        }
        let (m, theta) = self.locate(t)?;
        let fields = self.history.fields();
        let um = fields[m].values[node];
        Ok(match self.mode {
            ReconstructionMode::PiecewiseConstant => um,
            ReconstructionMode::PiecewiseLinear if theta == 0.0 => um,
            ReconstructionMode::PiecewiseLinear => um + (fields[m + 1].values[node] - um) * theta,
        })
    }

    /// Whole field at time t.
    pub fn field_at(&self, t: f64) -> Result<SpatialField> {
        let (m, theta) = self.locate(t)?;
        let fields = self.history.fields();
        Ok(match self.mode {
            ReconstructionMode::PiecewiseLinear if theta > 0.0 => SpatialField {
                values: fields[m]
                    .values
                    .iter()
                    .zip(&fields[m + 1].values)
                    .map(|(a, b)| a + (b - a) * theta)
                    .collect(),
            },
            _ => fields[m].clone(),
        })
    }
}

/// max_k ‖U_{k+1} − U_k‖_∞.
pub fn step_increment_sup(history: &SchemeHistory) -> f64 {
    history
        .fields()
        .windows(2)
        .map(|w| w[1].sup_distance(&w[0]))
        .fold(0.0, f64::max)
}
