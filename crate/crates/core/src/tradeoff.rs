//! Workload/accuracy trade-off curves.
//!
//! [`SCurve`] maps a decision workload (messages per unit time) to the
//! fraction of erroneous decisions. [`DecisionAccuracyModel`] bends the same
//! curve between a chance floor and a discriminability ceiling to give the
//! accuracy of a single decision under time pressure.
//!
//! The accuracy surface is a falling sigmoid between the two bounds:
//! `floor + (ceiling - floor) * (1 - f(tp))`. Other shapes satisfy the same
//! bounds and monotonicity; this one reuses the error curve and needs no
//! additional parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// S-shaped error fraction `f(x) = 1 - 1 / (1 + exp((x - a) / b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCurve {
    /// Workload at which half of the decisions are erroneous.
    pub offset: f64,
    /// Width of the transition; strictly positive.
    pub scale: f64,
}

impl Default for SCurve {
    fn default() -> Self {
        SCurve {
            offset: 10.0,
            scale: 2.0,
        }
    }
}

impl SCurve {
    pub fn new(offset: f64, scale: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::param(
                "a",
                format!("offset must be finite, got {offset}"),
            ));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(
                "b",
                format!("scale must be finite and > 0, got {scale}"),
            ));
        }
        Ok(SCurve { offset, scale })
    }

    pub fn validate(&self) -> Result<()> {
        SCurve::new(self.offset, self.scale).map(|_| ())
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    /// Error fraction at workload `x`.
    ///
    /// Evaluated in the branch that never subtracts two numbers close to one,
    /// so the lower tail keeps full relative precision.
    pub fn error_fraction(&self, x: f64) -> f64 {
        let z = self.z(x);
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    }

    /// `1 - f(x)`, the fraction of correct decisions.
    pub fn success_fraction(&self, x: f64) -> f64 {
        let z = self.z(x);
        if z <= 0.0 {
            1.0 / (1.0 + z.exp())
        } else {
            let e = (-z).exp();
            e / (1.0 + e)
        }
    }

    /// `df/dx`; strictly positive wherever it is representable.
    pub fn error_fraction_slope(&self, x: f64) -> f64 {
        let e = (-self.z(x).abs()).exp();
        e / (self.scale * (1.0 + e) * (1.0 + e))
    }

    /// Checked variant of [`SCurve::error_fraction`] that rejects non-finite input.
    pub fn try_error_fraction(&self, x: f64) -> Result<f64> {
        finite_workload(x)?;
        Ok(self.error_fraction(x))
    }

    /// Checked variant of [`SCurve::error_fraction_slope`].
    pub fn try_error_fraction_slope(&self, x: f64) -> Result<f64> {
        finite_workload(x)?;
        Ok(self.error_fraction_slope(x))
    }
}

fn finite_workload(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "x",
            format!("workload must be finite, got {x}"),
        ))
    }
}

/// Accuracy of one decision as a function of time pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionAccuracyModel {
    /// Upper bound on accuracy, in `(0, 1]`.
    pub discriminability: f64,
    /// Number of options; `1 / n_options` is the chance floor.
    pub n_options: u32,
    /// Curve over time-pressure units.
    pub pressure_curve: SCurve,
}

impl DecisionAccuracyModel {
    pub fn new(discriminability: f64, n_options: u32, pressure_curve: SCurve) -> Result<Self> {
        let model = DecisionAccuracyModel {
            discriminability,
            n_options,
            pressure_curve,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.pressure_curve.validate()?;
        if self.n_options < 2 {
            return Err(Error::param(
                "n_options",
                format!("need at least two options, got {}", self.n_options),
            ));
        }
        let d = self.discriminability;
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::param(
                "discriminability",
                format!("must lie in (0, 1], got {d}"),
            ));
        }
        if d < self.floor() {
            return Err(Error::param(
                "discriminability",
                format!(
                    "ceiling {d} is below the chance floor 1/{} = {}",
                    self.n_options,
                    self.floor()
                ),
            ));
        }
        Ok(())
    }

    /// Chance accuracy `1 / n_options`.
    pub fn floor(&self) -> f64 {
        1.0 / f64::from(self.n_options)
    }

    pub fn ceiling(&self) -> f64 {
        self.discriminability
    }

    /// Accuracy under time pressure `tp`, assuming a validated model.
    pub fn accuracy(&self, time_pressure: f64) -> f64 {
        let floor = self.floor();
        let span = self.ceiling() - floor;
        let acc = floor + span * self.pressure_curve.success_fraction(time_pressure);
        acc.clamp(floor, self.ceiling())
    }

    /// Validating entry point: checks the model and `tp >= 0`.
    pub fn decision_accuracy(&self, time_pressure: f64) -> Result<f64> {
        self.validate()?;
        if !(time_pressure.is_finite() && time_pressure >= 0.0) {
            return Err(Error::param(
                "time_pressure",
                format!("must be finite and >= 0, got {time_pressure}"),
            ));
        }
        Ok(self.accuracy(time_pressure))
    }
}
