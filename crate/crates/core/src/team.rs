//! Team decision-making under an information structure.
//!
//! A [`Team`] holds agents and decisions with their prerequisite sets. An
//! [`InformationStructure`] assigns each decision to one agent and adds
//! push or pull sharing edges. [`TeamInstance`] binds a team to forecast
//! decision characteristics and fitness weights; [`simulate_team`] turns a
//! structure into an accuracy table and a scalar fitness.
//!
//! Time pressure on a decision at step `k` is
//! `1 / time_availability(k) + interaction_pressure(owner)`. A decision whose
//! owner lacks the outcome of any prerequisite scores zero. Every
//! prerequisite delivered only through a pull edge multiplies the accuracy
//! by the staleness factor.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tradeoff::{DecisionAccuracyModel, SCurve};

/// Default accuracy factor per prerequisite known only by pull.
pub const DEFAULT_PULL_STALENESS: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    /// Accuracy-versus-pressure template for every decision the agent owns.
    pub pressure_curve: SCurve,
    /// Pressure added per interaction event; `>= 0`.
    pub interaction_load_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub id: String,
    /// Decisions whose current outcome must be known to decide this one.
    pub dependencies: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharingMode {
    Push,
    Pull,
}

impl SharingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SharingMode::Push => "push",
            SharingMode::Pull => "pull",
        }
    }
}

/// Validated agents and decisions with prerequisites resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Team {
    agents: Vec<Agent>,
    decisions: Vec<Decision>,
    deps: Vec<Vec<usize>>,
}

impl Team {
    pub fn new(agents: Vec<Agent>, decisions: Vec<Decision>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidStructure("team has no agents".into()));
        }
        if decisions.is_empty() {
            return Err(Error::InvalidStructure("team has no decisions".into()));
        }
        unique_ids("agent", agents.iter().map(|a| a.id.as_str()))?;
        unique_ids("decision", decisions.iter().map(|d| d.id.as_str()))?;
        for a in &agents {
            a.pressure_curve.validate()?;
            let w = a.interaction_load_weight;
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(
                    "interaction_load_weight",
                    format!("agent `{}`: must be finite and >= 0, got {w}", a.id),
                ));
            }
        }
        let index: BTreeMap<&str, usize> = decisions
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();
        let mut deps = Vec::with_capacity(decisions.len());
        for d in &decisions {
            let mut row = Vec::new();
            for dep in &d.dependencies {
                let j = *index.get(dep.as_str()).ok_or_else(|| {
                    Error::InvalidStructure(format!(
                        "decision `{}` depends on unknown decision `{dep}`",
                        d.id
                    ))
                })?;
                if dep == &d.id {
                    return Err(Error::InvalidStructure(format!(
                        "decision `{}` depends on itself",
                        d.id
                    )));
                }
                row.push(j);
            }
            row.sort_unstable();
            row.dedup();
            deps.push(row);
        }
        Ok(Team {
            agents,
            decisions,
            deps,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Prerequisite indices of decision `d`, ascending.
    pub fn dependencies(&self, d: usize) -> &[usize] {
        &self.deps[d]
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn decision_index(&self, id: &str) -> Option<usize> {
        self.decisions.iter().position(|d| d.id == id)
    }

    /// Checks `structure` is total over the decisions, references existing
    /// agents and never shares a decision with its own owner.
    pub fn check_structure(&self, structure: &InformationStructure) -> Result<()> {
        let (nd, na) = (self.decisions.len(), self.agents.len());
        if structure.responsibility.len() != nd {
            return Err(Error::InvalidStructure(format!(
                "responsibility covers {} decisions, team has {nd}",
                structure.responsibility.len()
            )));
        }
        for (d, &a) in structure.responsibility.iter().enumerate() {
            if a >= na {
                return Err(Error::InvalidStructure(format!(
                    "decision `{}` assigned to agent index {a}, team has {na}",
                    self.decisions[d].id
                )));
            }
        }
        for &(d, r) in structure.sharing.keys() {
            if d >= nd || r >= na {
                return Err(Error::InvalidStructure(format!(
                    "sharing edge ({d}, {r}) is out of range"
                )));
            }
            if structure.responsibility[d] == r {
                return Err(Error::InvalidStructure(format!(
                    "decision `{}` is shared with its own owner `{}`",
                    self.decisions[d].id, self.agents[r].id
                )));
            }
        }
        Ok(())
    }
}

fn unique_ids<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(Error::InvalidStructure(format!("empty {what} id")));
        }
        if !seen.insert(id) {
            return Err(Error::InvalidStructure(format!(
                "duplicate {what} id `{id}`"
            )));
        }
    }
    Ok(())
}

/// Decision responsibility plus sharing edges.
///
/// `sharing` maps `(decision, recipient)` to the mode of the single edge
/// delivering that decision to that agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InformationStructure {
    pub responsibility: Vec<usize>,
    pub sharing: BTreeMap<(usize, usize), SharingMode>,
}

impl InformationStructure {
    pub fn new(responsibility: Vec<usize>) -> Self {
        InformationStructure {
            responsibility,
            sharing: BTreeMap::new(),
        }
    }

    pub fn with_edge(mut self, decision: usize, recipient: usize, mode: SharingMode) -> Self {
        self.sharing.insert((decision, recipient), mode);
        self
    }

    pub fn owner(&self, decision: usize) -> usize {
        self.responsibility[decision]
    }

    pub fn edge(&self, decision: usize, recipient: usize) -> Option<SharingMode> {
        self.sharing.get(&(decision, recipient)).copied()
    }

    pub fn owned_by(&self, agent: usize) -> impl Iterator<Item = usize> + '_ {
        self.responsibility
            .iter()
            .enumerate()
            .filter(move |&(_, &a)| a == agent)
            .map(|(d, _)| d)
    }
}

/// True iff the owner of `decision` owns or receives every prerequisite.
pub fn dependency_satisfied(
    team: &Team,
    structure: &InformationStructure,
    decision: usize,
) -> bool {
    let owner = structure.owner(decision);
    team.dependencies(decision)
        .iter()
        .all(|&dep| structure.owner(dep) == owner || structure.edge(dep, owner).is_some())
}

/// Number of interaction events charged to `agent`: push edges received,
/// pull edges served and decisions owned beyond the first.
pub fn interaction_events(structure: &InformationStructure, agent: usize) -> usize {
    let mut events = structure.owned_by(agent).count().saturating_sub(1);
    for (&(d, r), &mode) in &structure.sharing {
        match mode {
            SharingMode::Push if r == agent => events += 1,
            SharingMode::Pull if structure.owner(d) == agent => events += 1,
            _ => {}
        }
    }
    events
}

/// Added time pressure on `agent`; constant over the horizon.
pub fn interaction_pressure(team: &Team, structure: &InformationStructure, agent: usize) -> f64 {
    team.agents[agent].interaction_load_weight * interaction_events(structure, agent) as f64
}

/// Forecast characteristics of one decision, one sample per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionForecast {
    /// Strictly positive; its reciprocal is the exogenous time pressure.
    pub time_availability: Vec<f64>,
    pub discriminability: Vec<f64>,
    pub n_options: Vec<u32>,
}

impl DecisionForecast {
    pub fn constant(
        time_availability: f64,
        discriminability: f64,
        n_options: u32,
        steps: usize,
    ) -> Self {
        DecisionForecast {
            time_availability: vec![time_availability; steps],
            discriminability: vec![discriminability; steps],
            n_options: vec![n_options; steps],
        }
    }

    fn validate(&self, decision: &str, horizon: usize) -> Result<()> {
        for (name, len) in [
            ("time_availability", self.time_availability.len()),
            ("discriminability", self.discriminability.len()),
            ("n_options", self.n_options.len()),
        ] {
            if len < horizon {
                return Err(Error::ScheduleTooShort {
                    name: format!("{decision}.{name}"),
                    len,
                    needed: horizon,
                });
            }
        }
        for k in 0..horizon {
            let ta = self.time_availability[k];
            if !(ta.is_finite() && ta > 0.0) {
                return Err(Error::param(
                    "time_availability",
                    format!("decision `{decision}` step {k}: must be finite and > 0, got {ta}"),
                ));
            }
            DecisionAccuracyModel::new(
                self.discriminability[k],
                self.n_options[k],
                SCurve::default(),
            )
            .map_err(|e| {
                Error::param("forecast", format!("decision `{decision}` step {k}: {e}"))
            })?;
        }
        Ok(())
    }
}

/// A team bound to forecasts, weights and a horizon; shared immutably by
/// every structure evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamInstance {
    team: Team,
    forecasts: Vec<DecisionForecast>,
    weights: Vec<f64>,
    horizon: usize,
    pull_staleness: f64,
}

impl TeamInstance {
    /// `weights` of `None` means uniform.
    pub fn new(
        team: Team,
        forecasts: Vec<DecisionForecast>,
        weights: Option<Vec<f64>>,
        horizon: usize,
        pull_staleness: f64,
    ) -> Result<Self> {
        let nd = team.decisions.len();
        if horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if forecasts.len() != nd {
            return Err(Error::param(
                "forecasts",
                format!("{} forecasts for {nd} decisions", forecasts.len()),
            ));
        }
        for (f, d) in forecasts.iter().zip(&team.decisions) {
            f.validate(&d.id, horizon)?;
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; nd]);
        check_weights(&weights, nd)?;
        if !(pull_staleness > 0.0 && pull_staleness <= 1.0) {
            return Err(Error::param(
                "pull_staleness",
                format!("must lie in (0, 1], got {pull_staleness}"),
            ));
        }
        Ok(TeamInstance {
            team,
            forecasts,
            weights,
            horizon,
            pull_staleness,
        })
    }

    pub fn team(&self) -> &Team {
        &self.team
    }

    pub fn forecasts(&self) -> &[DecisionForecast] {
        &self.forecasts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pull_staleness(&self) -> f64 {
        self.pull_staleness
    }

    /// Same instance with different forecasts.
    pub fn with_forecasts(&self, forecasts: Vec<DecisionForecast>) -> Result<Self> {
        TeamInstance::new(
            self.team.clone(),
            forecasts,
            Some(self.weights.clone()),
            self.horizon,
            self.pull_staleness,
        )
    }

    fn accuracy_row(
        &self,
        structure: &InformationStructure,
        d: usize,
        pressure: &[f64],
        row: &mut Vec<f64>,
    ) {
        row.clear();
        if !dependency_satisfied(&self.team, structure, d) {
            row.resize(self.horizon, 0.0);
            return;
        }
        let owner = structure.owner(d);
        let pulled = self.team.deps[d]
            .iter()
            .filter(|&&dep| {
                structure.owner(dep) != owner
                    && structure.edge(dep, owner) == Some(SharingMode::Pull)
            })
            .count();
        let stale = self.pull_staleness.powi(pulled as i32);
        let curve = self.team.agents[owner].pressure_curve;
        let f = &self.forecasts[d];
        for k in 0..self.horizon {
            let model = DecisionAccuracyModel {
                discriminability: f.discriminability[k],
                n_options: f.n_options[k],
                pressure_curve: curve,
            };
            let tp = 1.0 / f.time_availability[k] + pressure[owner];
            row.push(model.accuracy(tp) * stale);
        }
    }

    fn pressures(&self, structure: &InformationStructure) -> Vec<f64> {
        (0..self.team.agents.len())
            .map(|a| interaction_pressure(&self.team, structure, a))
            .collect()
    }

    /// Fitness of a structure already checked with [`Team::check_structure`];
    /// bit-identical to [`simulate_team`]'s fitness.
    pub fn score(&self, structure: &InformationStructure) -> f64 {
        let pressure = self.pressures(structure);
        let mut row = Vec::with_capacity(self.horizon);
        let mut num = 0.0;
        for d in 0..self.team.decisions.len() {
            self.accuracy_row(structure, d, &pressure, &mut row);
            num += self.weights[d] * row.iter().sum::<f64>();
        }
        num / self.normalizer()
    }

    fn normalizer(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.horizon as f64
    }
}

fn check_weights(weights: &[f64], decisions: usize) -> Result<()> {
    if weights.len() != decisions {
        return Err(Error::param(
            "weights",
            format!("{} weights for {decisions} decisions", weights.len()),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::param(
            "weights",
            format!("must be finite and > 0, got {w}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamRunResult {
    /// `accuracy[decision][step]`.
    pub accuracy: Vec<Vec<f64>>,
    pub fitness: f64,
    /// `load[agent][step]`: exogenous pressure of the owned decisions plus
    /// the agent's interaction pressure.
    pub load: Vec<Vec<f64>>,
}

impl TeamRunResult {
    /// CSV with header `decision,step,accuracy` and a trailing
    /// `# fitness=<value>` line.
    pub fn write_csv(&self, team: &Team, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "decision,step,accuracy")?;
        for (d, row) in self.accuracy.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                writeln!(out, "{},{k},{a}", team.decisions[d].id)?;
            }
        }
        writeln!(out, "# fitness={}", self.fitness)
    }

    /// CSV with header `agent,step,load`.
    pub fn write_load_csv(
        &self,
        team: &Team,
        out: &mut impl std::io::Write,
    ) -> std::io::Result<()> {
        writeln!(out, "agent,step,load")?;
        for (a, row) in self.load.iter().enumerate() {
            for (k, l) in row.iter().enumerate() {
                writeln!(out, "{},{k},{l}", team.agents[a].id)?;
            }
        }
        Ok(())
    }
}

/// Simulates `structure` over the instance horizon.
pub fn simulate_team(
    instance: &TeamInstance,
    structure: &InformationStructure,
) -> Result<TeamRunResult> {
    instance.team.check_structure(structure)?;
    let pressure = instance.pressures(structure);
    let nd = instance.team.decisions.len();
    let mut accuracy = Vec::with_capacity(nd);
    for d in 0..nd {
        let mut row = Vec::with_capacity(instance.horizon);
        instance.accuracy_row(structure, d, &pressure, &mut row);
        accuracy.push(row);
    }
    let fitness = fitness(&accuracy, &instance.weights)?;
    let load = (0..instance.team.agents.len())
        .map(|a| {
            (0..instance.horizon)
                .map(|k| {
                    structure
                        .owned_by(a)
                        .map(|d| 1.0 / instance.forecasts[d].time_availability[k])
                        .sum::<f64>()
                        + pressure[a]
                })
                .collect()
        })
        .collect();
    Ok(TeamRunResult {
        accuracy,
        fitness,
        load,
    })
}

/// `sum_d w_d sum_k acc[d][k] / (sum_d w_d * steps)`.
pub fn fitness(accuracy: &[Vec<f64>], weights: &[f64]) -> Result<f64> {
    check_weights(weights, accuracy.len())?;
    let steps = accuracy.first().map_or(0, Vec::len);
    if steps == 0 || accuracy.iter().any(|r| r.len() != steps) {
        return Err(Error::param(
            "accuracy",
            "rows must be non-empty and of equal length",
        ));
    }
    let num: f64 = accuracy
        .iter()
        .zip(weights)
        .map(|(row, w)| w * row.iter().sum::<f64>())
        .sum();
    Ok(num / (weights.iter().sum::<f64>() * steps as f64))
}
