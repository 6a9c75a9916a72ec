//! Per-step exogenous input schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar input indexed by simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Constant(f64),
    /// `start + slope * k`.
    Ramp {
        start: f64,
        slope: f64,
    },
    /// Explicit samples; must cover every step that is read.
    Steps(Vec<f64>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Constant(0.0)
    }
}

impl From<f64> for Schedule {
    fn from(v: f64) -> Self {
        Schedule::Constant(v)
    }
}

impl Schedule {
    /// Value at step `k`. Explicit schedules hold their last sample past the
    /// end; call [`Schedule::check_covers`] first where coverage matters.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Ramp { start, slope } => start + slope * k as f64,
            Schedule::Steps(v) => v.get(k).or(v.last()).copied().unwrap_or(0.0),
        }
    }

    /// Ensures steps `0..steps` are defined.
    pub fn check_covers(&self, name: &str, steps: usize) -> Result<()> {
        if let Schedule::Steps(v) = self {
            if v.len() < steps {
                return Err(Error::ScheduleTooShort {
                    name: name.to_string(),
                    len: v.len(),
                    needed: steps,
                });
            }
        }
        Ok(())
    }

    /// Checks every covered value satisfies `ok`.
    pub fn check_values(
        &self,
        name: &'static str,
        steps: usize,
        ok: impl Fn(f64) -> bool,
        what: &str,
    ) -> Result<()> {
        self.check_covers(name, steps)?;
        for k in 0..steps {
            let v = self.at(k);
            if !ok(v) {
                return Err(Error::param(name, format!("step {k}: {v} {what}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_and_constant() {
        assert_eq!(Schedule::Constant(3.0).at(100), 3.0);
        assert_eq!(
            Schedule::Ramp {
                start: 1.0,
                slope: 0.5
            }
            .at(4),
            3.0
        );
    }

    #[test]
    fn short_series_rejected() {
        let s = Schedule::Steps(vec![1.0, 2.0]);
        assert!(s.check_covers("u", 2).is_ok());
        assert!(matches!(
            s.check_covers("u", 3),
            Err(Error::ScheduleTooShort {
                len: 2,
                needed: 3,
                ..
            })
        ));
    }

    #[test]
    fn negative_values_rejected() {
        let s = Schedule::Ramp {
            start: 1.0,
            slope: -1.0,
        };
        assert!(s.check_values("u", 2, |v| v >= 0.0, "is negative").is_ok());
        assert!(s.check_values("u", 3, |v| v >= 0.0, "is negative").is_err());
    }
}
