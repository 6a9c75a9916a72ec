//! Two-component headquarters/field loop.
//!
//! Headquarters issues commands at rate `x1`; a fraction `f(x1)` of them is
//! erroneous and each erroneous command spawns `K` requests for new
//! decisions, which come back next step:
//!
//! ```text
//! x1(k+1) = x2(k) + u(k)
//! x2(k+1) = K * x1(k) * f(x1(k))
//! ```
//!
//! Equilibria satisfy `u = x1 * (1 - K f(x1))` and `x2 = x1 K f(x1)`. The
//! Jacobian at an equilibrium is `[[0, 1], [K h'(x1), 0]]` with
//! `h(x) = x f(x)`, so its spectral radius is `sqrt(|K h'(x1)|)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::tradeoff::SCurve;
use crate::{Stability, DEFAULT_SATURATION_CEILING};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadModel {
    pub curve: SCurve,
    /// Confusion gain `K`: requests spawned per erroneous command.
    pub gain: f64,
    /// Every rate is clamped to `[0, saturation_ceiling]`.
    pub saturation_ceiling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DyadState {
    /// `x1`, commands per unit time.
    pub commands: f64,
    /// `x2`, requests per unit time.
    pub requests: f64,
}

impl DyadState {
    pub const REST: DyadState = DyadState {
        commands: 0.0,
        requests: 0.0,
    };

    pub fn new(commands: f64, requests: f64) -> Self {
        DyadState { commands, requests }
    }

    fn magnitude(&self) -> f64 {
        self.commands.max(self.requests)
    }
}

/// An equilibrium `(x1, x2)` for a fixed order rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub commands: f64,
    pub requests: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[0]` is the initial state; `states.len() == horizon + 1`.
    pub states: Vec<DyadState>,
    /// First step whose state was clamped at the ceiling.
    pub first_saturation: Option<usize>,
}

impl Trajectory {
    pub fn saturated(&self) -> bool {
        self.first_saturation.is_some()
    }

    pub fn last(&self) -> DyadState {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Ratio of the state magnitude at the end to the magnitude three
    /// quarters of the way through.
    pub fn tail_growth(&self) -> f64 {
        let horizon = self.states.len() - 1;
        let start = self.states[(3 * horizon) / 4].magnitude();
        let end = self.last().magnitude();
        if end == 0.0 {
            1.0
        } else if start == 0.0 {
            f64::INFINITY
        } else {
            end / start
        }
    }

    /// Unstable when a clamp bound or the tail grew by more than `growth_limit`.
    pub fn classify(&self, growth_limit: f64) -> Stability {
        if self.saturated() || self.tail_growth() > growth_limit {
            Stability::Unstable
        } else {
            Stability::Stable
        }
    }
}

/// Bracketing grid for [`DyadModel::equilibria`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearch {
    /// Search interval; `None` selects `[0, 10 (a + u (1 + K))]`, widened
    /// for `K < 1` to cover the root bound `u / (1 - K)`.
    pub interval: Option<(f64, f64)>,
    pub grid_points: usize,
}

impl Default for RootSearch {
    fn default() -> Self {
        RootSearch {
            interval: None,
            grid_points: 4096,
        }
    }
}

impl DyadModel {
    pub fn new(curve: SCurve, gain: f64) -> Result<Self> {
        let model = DyadModel {
            curve,
            gain,
            saturation_ceiling: DEFAULT_SATURATION_CEILING,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Result<Self> {
        self.saturation_ceiling = ceiling;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::param(
                "K",
                format!("gain must be finite and >= 0, got {}", self.gain),
            ));
        }
        if !(self.saturation_ceiling.is_finite() && self.saturation_ceiling > 0.0) {
            return Err(Error::param(
                "saturation_ceiling",
                format!("must be finite and > 0, got {}", self.saturation_ceiling),
            ));
        }
        Ok(())
    }

    /// One step of the map. The flag reports whether a clamp bound.
    pub fn step(&self, state: DyadState, order_rate: f64) -> (DyadState, bool) {
        let x1 = state.commands;
        let next_commands = state.requests + order_rate;
        let next_requests = x1 * self.gain * self.curve.error_fraction(x1);
        let (c, sat_c) = clamp_rate(next_commands, self.saturation_ceiling);
        let (r, sat_r) = clamp_rate(next_requests, self.saturation_ceiling);
        (DyadState::new(c, r), sat_c || sat_r)
    }

    pub fn simulate(
        &self,
        input: &Schedule,
        initial: DyadState,
        horizon: usize,
    ) -> Result<Trajectory> {
        if horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        input.check_values(
            "u",
            horizon,
            |v| v.is_finite() && v >= 0.0,
            "is not a nonnegative rate",
        )?;
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(initial);
        let mut first_saturation = None;
        let mut state = initial;
        for k in 0..horizon {
            let (next, saturated) = self.step(state, input.at(k));
            if saturated && first_saturation.is_none() {
                first_saturation = Some(k + 1);
            }
            states.push(next);
            state = next;
        }
        Ok(Trajectory {
            states,
            first_saturation,
        })
    }

    /// `u - x1 (1 - K f(x1))`; zero at an equilibrium.
    pub fn equilibrium_residual(&self, order_rate: f64, commands: f64) -> f64 {
        order_rate - commands * (1.0 - self.gain * self.curve.error_fraction(commands))
    }

    /// All equilibria for constant order rate `u_bar` found by sign-change
    /// bracketing on a uniform grid, refined by bisection to machine
    /// precision. Ascending in `x1`; empty when the interval holds none.
    pub fn equilibria(&self, order_rate: f64, search: &RootSearch) -> Result<Vec<Equilibrium>> {
        let (lo, hi) = search.interval.unwrap_or_else(|| {
            let base = 10.0 * (self.curve.offset + order_rate * (1.0 + self.gain));
            // x1 (1 - K f) >= x1 (1 - K), so no root lies beyond u / (1 - K)
            let bound = if self.gain < 1.0 {
                1.01 * order_rate / (1.0 - self.gain) + 1.0
            } else {
                0.0
            };
            (0.0, base.max(bound))
        });
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::param(
                "interval",
                format!("need finite 0 <= lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if search.grid_points < 2 {
            return Err(Error::param("grid_points", "need at least two grid points"));
        }
        let residual = |x: f64| self.equilibrium_residual(order_rate, x);
        let n = search.grid_points;
        let grid = |i: usize| lo + (hi - lo) * (i as f64) / ((n - 1) as f64);

        let mut roots = Vec::new();
        let mut x_prev = grid(0);
        let mut r_prev = residual(x_prev);
        if r_prev == 0.0 {
            roots.push(x_prev);
        }
        for i in 1..n {
            let x = grid(i);
            let r = residual(x);
            if r == 0.0 {
                roots.push(x);
            } else if r_prev != 0.0 && (r_prev < 0.0) != (r < 0.0) {
                roots.push(bisect(&residual, x_prev, x, r_prev));
            }
            x_prev = x;
            r_prev = r;
        }
        Ok(roots
            .into_iter()
            .map(|x1| Equilibrium {
                commands: x1,
                requests: x1 * self.gain * self.curve.error_fraction(x1),
            })
            .collect())
    }

    /// The equilibrium reached from rest: the smallest root.
    pub fn operating_equilibrium(&self, order_rate: f64) -> Result<Option<Equilibrium>> {
        Ok(self
            .equilibria(order_rate, &RootSearch::default())?
            .first()
            .copied())
    }

    /// Spectral radius of the Jacobian of the map at `x1`.
    pub fn spectral_radius_at(&self, commands: f64) -> f64 {
        let c = &self.curve;
        let h_slope = c.error_fraction(commands) + commands * c.error_fraction_slope(commands);
        (self.gain * h_slope).abs().sqrt()
    }

    /// Linearized classification of the operating point for order rate `u`:
    /// stable iff the operating equilibrium exists and has spectral radius
    /// below one.
    pub fn linearized_stability(&self, order_rate: f64) -> Result<Stability> {
        Ok(match self.operating_equilibrium(order_rate)? {
            Some(eq) if self.spectral_radius_at(eq.commands) < 1.0 => Stability::Stable,
            _ => Stability::Unstable,
        })
    }
}

fn clamp_rate(v: f64, ceiling: f64) -> (f64, bool) {
    if v > ceiling || v.is_nan() {
        (ceiling, true)
    } else if v < 0.0 {
        (0.0, false)
    } else {
        (v, false)
    }
}

/// Bisection on a bracket `[lo, hi]` with `f(lo) = f_lo` of opposite sign to
/// `f(hi)`, iterated until the midpoint is no longer representable.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Settings for [`stability_region_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub horizon: usize,
    pub growth_limit: f64,
    pub saturation_ceiling: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            horizon: 500,
            growth_limit: 10.0,
            saturation_ceiling: DEFAULT_SATURATION_CEILING,
        }
    }
}

/// Error-fraction contour levels marked in the sweep output.
pub const CONTOUR_LEVELS: [f64; 2] = [0.2, 0.8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gain: f64,
    pub order_rate: f64,
    pub class: Stability,
    /// Only populated for stable cells.
    pub commands: Option<f64>,
    pub error_fraction: Option<f64>,
    pub spectral_radius: Option<f64>,
    /// `contours[i]` is set when the cell lies on the `CONTOUR_LEVELS[i]` line.
    pub contours: [bool; 2],
}

/// Classification grid over `(K, u)`, stored `K`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySweep {
    pub gains: Vec<f64>,
    pub order_rates: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl StabilitySweep {
    pub fn cell(&self, gain_index: usize, rate_index: usize) -> &SweepCell {
        &self.cells[gain_index * self.order_rates.len() + rate_index]
    }

    pub fn row(&self, gain_index: usize) -> &[SweepCell] {
        let n = self.order_rates.len();
        &self.cells[gain_index * n..(gain_index + 1) * n]
    }

    /// Index of the first unstable cell in a `K` row, if any.
    pub fn transition_index(&self, gain_index: usize) -> Option<usize> {
        self.row(gain_index)
            .iter()
            .position(|c| !c.class.is_stable())
    }

    /// Number of stable/unstable changes along the row.
    pub fn transitions_in_row(&self, gain_index: usize) -> usize {
        self.row(gain_index)
            .windows(2)
            .filter(|w| w[0].class != w[1].class)
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "K,u,class,x1_bar,error_fraction,spectral_radius,contour"
        )?;
        for c in &self.cells {
            let contour: Vec<&str> = c
                .contours
                .iter()
                .zip(["20", "80"])
                .filter_map(|(on, label)| on.then_some(label))
                .collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.gain,
                c.order_rate,
                c.class,
                opt(c.commands),
                opt(c.error_fraction),
                opt(c.spectral_radius),
                contour.join(";")
            )?;
        }
        Ok(())
    }
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(name, "grid holds a non-finite value"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "grid must be strictly ascending"));
    }
    Ok(())
}

/// Classifies every `(K, u)` cell by simulation from rest.
///
/// Stable cells carry the equilibrium reached (the root nearest the final
/// simulated state), its error fraction and linearized spectral radius.
pub fn stability_region_sweep(
    curve: SCurve,
    gains: &[f64],
    order_rates: &[f64],
    config: &SweepConfig,
) -> Result<StabilitySweep> {
    curve.validate()?;
    check_grid("K", gains)?;
    check_grid("u", order_rates)?;
    if gains[0] < 0.0 {
        return Err(Error::param("K", "gains must be >= 0"));
    }
    if order_rates[0] < 0.0 {
        return Err(Error::param("u", "order rates must be >= 0"));
    }
    if config.horizon == 0 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    let nu = order_rates.len();
    let mut cells = (0..gains.len() * nu)
        .into_par_iter()
        .map(|idx| {
            let gain = gains[idx / nu];
            let u = order_rates[idx % nu];
            let model = DyadModel::new(curve, gain)?.with_ceiling(config.saturation_ceiling)?;
            sweep_cell(&model, u, config)
        })
        .collect::<Result<Vec<_>>>()?;
    mark_contours(&mut cells, gains.len(), nu);
    Ok(StabilitySweep {
        gains: gains.to_vec(),
        order_rates: order_rates.to_vec(),
        cells,
    })
}

fn sweep_cell(model: &DyadModel, u: f64, config: &SweepConfig) -> Result<SweepCell> {
    let run = model.simulate(&Schedule::Constant(u), DyadState::REST, config.horizon)?;
    let class = run.classify(config.growth_limit);
    let mut cell = SweepCell {
        gain: model.gain,
        order_rate: u,
        class,
        commands: None,
        error_fraction: None,
        spectral_radius: None,
        contours: [false; 2],
    };
    if class.is_stable() {
        let last = run.last().commands;
        let Some(x1) = model
            .equilibria(u, &RootSearch::default())?
            .into_iter()
            .map(|e| e.commands)
            .min_by(|a, b| (a - last).abs().total_cmp(&(b - last).abs()))
        else {
            return Ok(cell);
        };
        cell.commands = Some(x1);
        cell.error_fraction = Some(model.curve.error_fraction(x1));
        cell.spectral_radius = Some(model.spectral_radius_at(x1));
    }
    Ok(cell)
}

/// A stable cell is on a level line when its error fraction is at or above
/// the level and some stable 4-neighbour is below it.
fn mark_contours(cells: &mut [SweepCell], nk: usize, nu: usize) {
    let ef: Vec<Option<f64>> = cells.iter().map(|c| c.error_fraction).collect();
    for ik in 0..nk {
        for iu in 0..nu {
            let Some(here) = ef[ik * nu + iu] else {
                continue;
            };
            let mut neighbours = Vec::with_capacity(4);
            if ik > 0 {
                neighbours.push(ef[(ik - 1) * nu + iu]);
            }
            if ik + 1 < nk {
                neighbours.push(ef[(ik + 1) * nu + iu]);
            }
            if iu > 0 {
                neighbours.push(ef[ik * nu + iu - 1]);
            }
            if iu + 1 < nu {
                neighbours.push(ef[ik * nu + iu + 1]);
            }
            for (slot, level) in CONTOUR_LEVELS.iter().enumerate() {
                cells[ik * nu + iu].contours[slot] =
                    here >= *level && neighbours.iter().flatten().any(|nb| *nb < *level);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(gain: f64) -> DyadModel {
        DyadModel::new(SCurve::new(10.0, 2.0).unwrap(), gain).unwrap()
    }

    #[test]
    fn zero_gain_kills_feedback() {
        let (s, sat) = model(0.0).step(DyadState::new(4.0, 7.0), 3.0);
        assert_eq!(s, DyadState::new(10.0, 0.0));
        assert!(!sat);
    }

    #[test]
    fn origin_is_fixed_without_input() {
        let (s, _) = model(2.5).step(DyadState::REST, 0.0);
        assert_eq!(s, DyadState::REST);
    }

    #[test]
    fn converges_to_equation_two_fixed_point() {
        let m = model(2.0);
        let run = m
            .simulate(&Schedule::Constant(1.0), DyadState::REST, 200)
            .unwrap();
        let last = run.last();
        assert!(m.equilibrium_residual(1.0, last.commands).abs() < 1e-6);
        // pinned from the run, matches the smallest bracketed root
        let eq = m.operating_equilibrium(1.0).unwrap().unwrap();
        assert_relative_eq!(last.commands, eq.commands, max_relative = 1e-9);
        assert_relative_eq!(eq.commands, 1.022_727_272_869_016_4, max_relative = 1e-12);
    }

    #[test]
    fn horizon_one_matches_step() {
        let m = model(1.5);
        let init = DyadState::new(3.0, 2.0);
        let run = m.simulate(&Schedule::Constant(4.0), init, 1).unwrap();
        assert_eq!(run.states.len(), 2);
        assert_eq!(run.states[0], init);
        assert_eq!(run.states[1], m.step(init, 4.0).0);
        assert!(m.simulate(&Schedule::Constant(4.0), init, 0).is_err());
    }

    #[test]
    fn zero_gain_settles_after_two_steps() {
        let run = model(0.0)
            .simulate(&Schedule::Constant(6.0), DyadState::new(9.0, 5.0), 5)
            .unwrap();
        for s in &run.states[2..] {
            assert_eq!(*s, DyadState::new(6.0, 0.0));
        }
    }

    #[test]
    fn divergent_regime_pins_at_ceiling() {
        let m = model(3.0);
        let run = m
            .simulate(&Schedule::Constant(20.0), DyadState::REST, 500)
            .unwrap();
        assert_eq!(run.first_saturation, Some(FIRST_SATURATION_K3_U20));
        assert_eq!(run.last().commands, m.saturation_ceiling);
        assert_eq!(run.classify(10.0), Stability::Unstable);
    }

    // Frozen from a run of the map with ceiling 1e6.
    const FIRST_SATURATION_K3_U20: usize = 20;

    #[test]
    fn short_sequence_rejected() {
        let err = model(1.0)
            .simulate(&Schedule::Steps(vec![1.0; 3]), DyadState::REST, 4)
            .unwrap_err();
        assert!(matches!(err, Error::ScheduleTooShort { .. }));
    }

    #[test]
    fn zero_gain_equilibrium() {
        let eqs = model(0.0).equilibria(5.0, &RootSearch::default()).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_relative_eq!(eqs[0].commands, 5.0, max_relative = 1e-14);
        assert_eq!(eqs[0].requests, 0.0);
    }

    #[test]
    fn equilibria_residuals_below_tolerance() {
        for gain in [0.0, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 6.0] {
            let m = model(gain);
            for u in [0.0, 0.5, 1.0, 2.0, 4.0, 7.5, 12.0] {
                for eq in m.equilibria(u, &RootSearch::default()).unwrap() {
                    let r = m.equilibrium_residual(u, eq.commands);
                    assert!(r.abs() < 1e-9, "K={gain} u={u} x1={} r={r}", eq.commands);
                    let x2 = eq.commands * gain * m.curve.error_fraction(eq.commands);
                    assert_eq!(eq.requests, x2);
                }
            }
        }
    }

    /// Dense sign scan, independent of the bracketing grid.
    fn brute_force_roots(m: &DyadModel, u: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut roots = Vec::new();
        let step = (hi - lo) / (n - 1) as f64;
        let mut prev = m.equilibrium_residual(u, lo);
        for i in 1..n {
            let x = lo + step * i as f64;
            let r = m.equilibrium_residual(u, x);
            if prev.signum() != r.signum() {
                // linear interpolation inside the bracket
                roots.push(x - step * r / (r - prev));
            }
            prev = r;
        }
        roots
    }

    #[test]
    fn bisection_matches_dense_scan() {
        let m = model(2.0);
        let u = 1.0;
        let hi = 10.0 * (10.0 + u * 3.0);
        let dense = brute_force_roots(&m, u, 0.0, hi, 1_000_000);
        let found = m.equilibria(u, &RootSearch::default()).unwrap();
        assert_eq!(dense.len(), found.len());
        assert_eq!(found.len(), 2);
        for (d, e) in dense.iter().zip(&found) {
            assert!((d - e.commands).abs() < 1e-6, "{d} vs {}", e.commands);
        }
    }

    #[test]
    fn invalid_interval_rejected() {
        let m = model(1.0);
        let bad = RootSearch {
            interval: Some((-1.0, 5.0)),
            grid_points: 100,
        };
        assert!(m.equilibria(1.0, &bad).is_err());
        let empty = RootSearch {
            interval: Some((100.0, 200.0)),
            grid_points: 100,
        };
        assert!(m.equilibria(1.0, &empty).unwrap().is_empty());
    }

    #[test]
    fn spectral_radius_zero_gain() {
        assert_eq!(model(0.0).spectral_radius_at(12.0), 0.0);
    }

    #[test]
    fn sweep_rejects_empty_or_unsorted_grid() {
        let c = SCurve::default();
        let cfg = SweepConfig::default();
        assert!(stability_region_sweep(c, &[], &[1.0], &cfg).is_err());
        assert!(stability_region_sweep(c, &[1.0], &[2.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        let sweep = stability_region_sweep(
            SCurve::default(),
            &[0.5, 2.0],
            &[1.0, 10.0],
            &SweepConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "K,u,class,x1_bar,error_fraction,spectral_radius,contour"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("2,10,unstable,,,,"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn default_search_reaches_distant_root_below_unit_gain() {
        // the root sits near u / (1 - K), far beyond 10 (a + u (1 + K))
        let m = model(0.98);
        let eq = m.operating_equilibrium(20.0).unwrap().unwrap();
        assert!(eq.commands > 900.0);
        assert!(m.equilibrium_residual(20.0, eq.commands).abs() < 1e-9);
    }

    #[test]
    fn sweep_reports_only_true_equilibria() {
        let gains: Vec<f64> = (0..12).map(|i| 0.9 + 0.01 * i as f64).collect();
        let sweep = stability_region_sweep(
            SCurve::default(),
            &gains,
            &[5.0, 20.0],
            &SweepConfig::default(),
        )
        .unwrap();
        for c in &sweep.cells {
            if let Some(x) = c.commands {
                let r = model(c.gain).equilibrium_residual(c.order_rate, x);
                assert!(
                    r.abs() < 1e-9,
                    "K={} u={} residual {r}",
                    c.gain,
                    c.order_rate
                );
            }
        }
    }
}
