//! Transverse-field schedules and the phonon switch-on ramp.

use serde::{Deserialize, Serialize};

use crate::basis::N_QUBITS;
use crate::error::{Error, Result};

/// Time slack accepted at the ends of the schedule domain.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleForm {
    /// `h0 (1 − t/t_f)`
    Linear,
    /// `h0 (1 + cos(π t/t_f)) / 2`
    Cosine,
    /// Piecewise-linear interpolation of `(t, h)` knots.
    Table,
}

/// Per-qubit transverse fields `ht_α(t)` on `[0, t_final]`, in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub form: ScheduleForm,
    pub h0: f64,
    pub t_final: f64,
    /// Multiplies `h0` per qubit.
    pub qubit_scale: [f64; N_QUBITS],
    /// Knots for [`ScheduleForm::Table`], times in ns and fields in rad/ns.
    pub table: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn linear(h0: f64, t_final: f64) -> Self {
        Self { form: ScheduleForm::Linear, h0, t_final, qubit_scale: [1.0; N_QUBITS], table: Vec::new() }
    }

    pub fn cosine(h0: f64, t_final: f64) -> Self {
        Self { form: ScheduleForm::Cosine, ..Self::linear(h0, t_final) }
    }

    /// Table schedule; the last knot must sit at `t_final` with field 0.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        let t_final = knots.last().map(|k| k.0).unwrap_or(0.0);
        let s = Self { form: ScheduleForm::Table, h0: 1.0, t_final, qubit_scale: [1.0; N_QUBITS], table: knots };
        s.validate()?;
        Ok(s)
    }

    /// A schedule with all fields zero for all times.
    pub fn off(t_final: f64) -> Self {
        Self::linear(0.0, t_final)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !self.h0.is_finite() || self.h0 < 0.0 {
            return Err(Error::InvalidArgument(format!("h0 must be finite and non-negative, got {}", self.h0)));
        }
        if self.qubit_scale.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument("qubit_scale entries must be finite and non-negative".into()));
        }
        if self.form == ScheduleForm::Table {
            let k = &self.table;
            if k.len() < 2 {
                return Err(Error::InvalidArgument("table schedule needs at least two knots".into()));
            }
            if k[0].0 != 0.0 {
                return Err(Error::InvalidArgument("table schedule must start at t = 0".into()));
            }
            if k.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::InvalidArgument("table times must be strictly increasing".into()));
            }
            if k.iter().any(|(t, h)| !t.is_finite() || !h.is_finite() || *h < 0.0) {
                return Err(Error::InvalidArgument("table fields must be finite and non-negative".into()));
            }
            if k.last().unwrap().1 != 0.0 {
                return Err(Error::InvalidArgument("table schedule must end with field 0".into()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= -DOMAIN_SLACK && t <= self.t_final + DOMAIN_SLACK
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideSchedule { t, t_final: self.t_final })
        }
    }

    /// Common profile before the per-qubit scale; clamps `t` to the domain.
    pub fn profile(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_final);
        let s = t / self.t_final;
        match self.form {
            ScheduleForm::Linear => self.h0 * (1.0 - s),
            ScheduleForm::Cosine => self.h0 * 0.5 * (1.0 + (std::f64::consts::PI * s).cos()),
            ScheduleForm::Table => {
                let k = &self.table;
                let i = k.partition_point(|knot| knot.0 <= t).clamp(1, k.len() - 1);
                let (t0, h0) = k[i - 1];
                let (t1, h1) = k[i];
                self.h0 * (h0 + (h1 - h0) * (t - t0) / (t1 - t0))
            }
        }
    }

    /// `ht_α(t)` for qubit `qubit` (1-based).
    pub fn field(&self, qubit: usize, t: f64) -> f64 {
        self.qubit_scale[qubit - 1] * self.profile(t)
    }
}

/// Raised-cosine switch from 0 to 1 centred at `switch_on`, lasting `ramp`.
/// Exactly 0 before `switch_on − ramp/2` and exactly 1 after `switch_on + ramp/2`.
pub fn switch_ramp(t: f64, switch_on: f64, ramp: f64) -> f64 {
    if ramp <= 0.0 {
        return if t >= switch_on { 1.0 } else { 0.0 };
    }
    let start = switch_on - 0.5 * ramp;
    if t <= start {
        0.0
    } else if t >= start + ramp {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (t - start) / ramp).cos())
    }
}
