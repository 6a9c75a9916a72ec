//! Scenario files: TOML documents that fully describe one experiment.
//!
//! Parsing rejects unknown keys and sections that do not belong to the
//! declared `model`. [`load`] then builds and validates every core object,
//! so a scenario that loads can only fail at run time for numerical reasons.
//! The grammar is documented in `docs/scenario-format.md`.

use std::collections::BTreeMap;
use std::path::Path;

use cascade_core::dyad::SweepConfig;
use cascade_core::netsim::{
    BrokerNode, IntermediateNode, NetConfig, NetInputs, RedistributionMode, Topology,
};
use cascade_core::optimize::{GaConfig, Selection, DEFAULT_EXHAUSTIVE_CAP};
use cascade_core::team::{
    Agent, Decision, DecisionForecast, InformationStructure, SharingMode, Team, TeamInstance,
    DEFAULT_PULL_STALENESS,
};
use cascade_core::{SCurve, Schedule, DEFAULT_SATURATION_CEILING};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dyad,
    Network,
    Team,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dyad => "dyad",
            ModelKind::Network => "network",
            ModelKind::Team => "team",
        }
    }
}

/// Raw document as parsed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub model: ModelKind,
    pub description: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<OutputSpec>,
    pub curve: Option<CurveSpec>,
    pub dyad: Option<DyadSpec>,
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub topology: Vec<TopologySpec>,
    pub inputs: Option<InputsSpec>,
    pub collapse: Option<CollapseSpec>,
    pub envelope: Option<EnvelopeSpec>,
    pub propagation: Option<PropagationSpec>,
    pub team: Option<TeamSpec>,
    #[serde(default)]
    pub agent: Vec<AgentSpec>,
    #[serde(default)]
    pub decision: Vec<DecisionSpec>,
    pub structure: Option<StructureSpec>,
    pub optimizer: Option<OptimizerSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File name prefix; defaults to the scenario file stem.
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub offset: f64,
    pub scale: f64,
}

impl CurveSpec {
    fn build(self) -> CliResult<SCurve> {
        SCurve::new(self.offset, self.scale).map_err(invalid)
    }
}

/// Either an evenly spaced range with both ends included or explicit values.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range(RangeSpec),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self, name: &str) -> CliResult<Vec<f64>> {
        let v = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range(RangeSpec { start, stop, count }) => match *count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            *stop
                        } else {
                            start + (stop - start) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect(),
            },
        };
        if v.is_empty() {
            return Err(CliError::Validation(format!("grid `{name}` is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Validation(format!(
                "grid `{name}` must be finite and strictly ascending"
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadSpec {
    pub gains: GridSpec,
    pub order_rates: GridSpec,
    pub horizon: Option<usize>,
    pub growth_limit: Option<f64>,
    pub saturation_ceiling: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub horizon: Option<usize>,
    pub window: Option<usize>,
    pub saturation_ceiling: Option<f64>,
    pub collapse_level: Option<f64>,
    pub growth_limit: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Intermediate nodes only; `fanouts[l]` children per node at level `l`.
    Tree {
        name: String,
        gain: f64,
        fanouts: Vec<usize>,
    },
    /// Root, one broker, `leaves` field components.
    BrokerStar {
        name: String,
        gain: f64,
        leaves: usize,
        #[serde(default = "conserving")]
        mode: RedistributionMode,
    },
    /// One node whose upward output feeds back into its own input.
    SelfLoop { name: String, gain: f64 },
}

fn conserving() -> RedistributionMode {
    RedistributionMode::Conserving
}

impl TopologySpec {
    pub fn name(&self) -> &str {
        match self {
            TopologySpec::Tree { name, .. }
            | TopologySpec::BrokerStar { name, .. }
            | TopologySpec::SelfLoop { name, .. } => name,
        }
    }

    fn build(&self, curve: SCurve) -> CliResult<Topology> {
        let named = |e: cascade_core::Error| {
            CliError::Validation(format!("topology `{}`: {e}", self.name()))
        };
        match self {
            TopologySpec::Tree { gain, fanouts, .. } => {
                let node = IntermediateNode::new(curve, *gain).map_err(named)?;
                Topology::hierarchy(node, fanouts).map_err(named)
            }
            TopologySpec::BrokerStar {
                gain, leaves, mode, ..
            } => {
                let node = IntermediateNode::new(curve, *gain).map_err(named)?;
                let broker = BrokerNode::new(curve, *mode).map_err(named)?;
                Topology::broker_star(node, broker, *leaves).map_err(named)
            }
            TopologySpec::SelfLoop { gain, .. } => {
                let node = IntermediateNode::new(curve, *gain).map_err(named)?;
                Topology::self_loop(node).map_err(named)
            }
        }
    }
}

/// A number, a ramp `{ start, slope }` or explicit `{ steps = [...] }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Constant(f64),
    Ramp(RampSpec),
    Steps(StepsSpec),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    pub start: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsSpec {
    pub steps: Vec<f64>,
}

impl From<&ScheduleSpec> for Schedule {
    fn from(s: &ScheduleSpec) -> Self {
        match s {
            ScheduleSpec::Constant(v) => Schedule::Constant(*v),
            ScheduleSpec::Ramp(r) => Schedule::Ramp {
                start: r.start,
                slope: r.slope,
            },
            ScheduleSpec::Steps(s) => Schedule::Steps(s.steps.clone()),
        }
    }
}

/// One schedule per leaf, or one schedule shared by every leaf.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LeafSpec {
    PerLeaf(Vec<ScheduleSpec>),
    All(ScheduleSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSpec {
    #[serde(default = "zero")]
    pub root_rate: ScheduleSpec,
    #[serde(default = "zero")]
    pub root_error: ScheduleSpec,
    #[serde(default = "zero_leaves")]
    pub leaf_requests: LeafSpec,
}

fn zero() -> ScheduleSpec {
    ScheduleSpec::Constant(0.0)
}

fn zero_leaves() -> LeafSpec {
    LeafSpec::All(ScheduleSpec::Constant(0.0))
}

impl InputsSpec {
    fn build(&self, topology: &Topology, name: &str) -> CliResult<NetInputs> {
        let leaves = topology.leaves().len();
        let leaf_requests = match &self.leaf_requests {
            LeafSpec::All(s) => vec![Schedule::from(s); leaves],
            LeafSpec::PerLeaf(v) if v.len() == leaves => v.iter().map(Schedule::from).collect(),
            LeafSpec::PerLeaf(v) => {
                return Err(CliError::Validation(format!(
                    "topology `{name}` has {leaves} leaves but leaf_requests lists {}",
                    v.len()
                )))
            }
        };
        Ok(NetInputs {
            root_rate: (&self.root_rate).into(),
            root_error: (&self.root_error).into(),
            leaf_requests,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSpec {
    pub root_rates: GridSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub sums: GridSpec,
    pub differences: GridSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSpec {
    /// Position in left-to-right leaf order.
    pub leaf: usize,
    pub stimulus: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamSpec {
    pub horizon: usize,
    pub pull_staleness: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub curve: CurveSpec,
    pub interaction_load_weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionSpec {
    pub id: String,
    #[serde(default)]
    pub dependencies: Vec<String>,
    pub weight: Option<f64>,
    pub forecast: ForecastSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSpec {
    pub time_availability: SeriesSpec,
    pub discriminability: SeriesSpec,
    /// Sampled values are rounded to the nearest integer.
    pub n_options: SeriesSpec,
}

/// A constant, explicit samples, or `{ knots = [[step, value], ...] }`
/// interpolated linearly and held flat outside the first and last knot.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeriesSpec {
    Constant(f64),
    Samples(Vec<f64>),
    Knots(KnotsSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotsSpec {
    pub knots: Vec<[f64; 2]>,
}

impl SeriesSpec {
    pub fn sample(&self, name: &str, horizon: usize) -> CliResult<Vec<f64>> {
        match self {
            SeriesSpec::Constant(v) => Ok(vec![*v; horizon]),
            SeriesSpec::Samples(v) => {
                if v.len() < horizon {
                    return Err(CliError::Validation(format!(
                        "series `{name}` has {} samples, horizon is {horizon}",
                        v.len()
                    )));
                }
                Ok(v[..horizon].to_vec())
            }
            SeriesSpec::Knots(KnotsSpec { knots }) => {
                if knots.is_empty() || knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(CliError::Validation(format!(
                        "series `{name}` needs knots at strictly ascending steps"
                    )));
                }
                Ok((0..horizon)
                    .map(|k| {
                        let t = k as f64;
                        let i = knots.partition_point(|p| p[0] <= t);
                        if i == 0 {
                            knots[0][1]
                        } else if i == knots.len() {
                            knots[i - 1][1]
                        } else {
                            let ([t0, v0], [t1, v1]) = (knots[i - 1], knots[i]);
                            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Responsibility by decision id plus sharing arcs; also the format of the
/// best-structure file written by the optimizer.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub responsibility: BTreeMap<String, String>,
    #[serde(default)]
    pub share: Vec<ShareSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ShareSpec {
    pub decision: String,
    pub to: String,
    pub mode: SharingMode,
}

impl StructureSpec {
    pub fn build(&self, team: &Team) -> CliResult<InformationStructure> {
        for id in self.responsibility.keys() {
            if team.decision_index(id).is_none() {
                return Err(CliError::Validation(format!(
                    "structure assigns unknown decision `{id}`"
                )));
            }
        }
        let agent = |id: &str| {
            team.agent_index(id).ok_or_else(|| {
                CliError::Validation(format!("structure names unknown agent `{id}`"))
            })
        };
        let mut responsibility = Vec::with_capacity(team.decisions().len());
        for d in team.decisions() {
            let owner = self.responsibility.get(&d.id).ok_or_else(|| {
                CliError::Validation(format!("structure leaves decision `{}` unassigned", d.id))
            })?;
            responsibility.push(agent(owner)?);
        }
        let mut s = InformationStructure::new(responsibility);
        for e in &self.share {
            let d = team.decision_index(&e.decision).ok_or_else(|| {
                CliError::Validation(format!(
                    "sharing arc names unknown decision `{}`",
                    e.decision
                ))
            })?;
            let r = agent(&e.to)?;
            if s.sharing.insert((d, r), e.mode).is_some() {
                return Err(CliError::Validation(format!(
                    "decision `{}` is shared with `{}` twice",
                    e.decision, e.to
                )));
            }
        }
        team.check_structure(&s).map_err(invalid)?;
        Ok(s)
    }

    pub fn from_structure(team: &Team, s: &InformationStructure) -> Self {
        let ids = |d: usize| team.decisions()[d].id.clone();
        let agent = |a: usize| team.agents()[a].id.clone();
        StructureSpec {
            responsibility: (0..s.responsibility.len())
                .map(|d| (ids(d), agent(s.owner(d))))
                .collect(),
            share: s
                .sharing
                .iter()
                .map(|(&(d, r), &mode)| ShareSpec {
                    decision: ids(d),
                    to: agent(r),
                    mode,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub mutation_rate: Option<f64>,
    pub crossover_rate: Option<f64>,
    pub selection: Option<Selection>,
    pub elitism: Option<usize>,
    pub exhaustive_cap: Option<u64>,
}

/// Validated dyad sweep.
#[derive(Debug, Clone)]
pub struct DyadScenario {
    pub curve: SCurve,
    pub gains: Vec<f64>,
    pub order_rates: Vec<f64>,
    pub config: SweepConfig,
}

#[derive(Debug, Clone)]
pub struct NamedTopology {
    pub name: String,
    pub topology: Topology,
    pub inputs: NetInputs,
}

/// Validated network experiment.
#[derive(Debug, Clone)]
pub struct NetScenario {
    pub config: NetConfig,
    pub topologies: Vec<NamedTopology>,
    pub root_rates: Option<Vec<f64>>,
    pub envelope: Option<(Vec<f64>, Vec<f64>)>,
    pub propagation: Option<PropagationSpec>,
}

/// Validated team experiment.
#[derive(Debug, Clone)]
pub struct TeamScenario {
    pub instance: TeamInstance,
    pub structure: Option<InformationStructure>,
    pub ga: GaConfig,
    pub exhaustive_cap: u128,
}

#[derive(Debug, Clone)]
pub enum Model {
    Dyad(DyadScenario),
    Network(NetScenario),
    Team(TeamScenario),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Model,
    pub description: Option<String>,
    /// Scenario seed; `0` when none is given.
    pub seed: u64,
    pub prefix: String,
    /// Lowercase hex SHA-256 of the file bytes.
    pub digest: String,
}

impl Scenario {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::Dyad(_) => ModelKind::Dyad,
            Model::Network(_) => ModelKind::Network,
            Model::Team(_) => ModelKind::Team,
        }
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads, parses and validates a scenario file.
pub fn load(path: &Path) -> CliResult<Scenario> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();
    parse(&bytes, &stem).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses and validates scenario text; `stem` is the default prefix.
pub fn parse(bytes: &[u8], stem: &str) -> CliResult<Scenario> {
    let text = std::str::from_utf8(bytes).map_err(|e| invalid(format!("not UTF-8: {e}")))?;
    let file: ScenarioFile = toml::from_str(text).map_err(invalid)?;
    check_sections(&file)?;
    let prefix = file
        .output
        .as_ref()
        .and_then(|o| o.prefix.clone())
        .unwrap_or_else(|| stem.to_string());
    if prefix.is_empty() || prefix.contains(['/', '\\']) || prefix.starts_with('.') {
        return Err(invalid(format!(
            "output prefix `{prefix}` must be a plain file name"
        )));
    }
    let seed = file.seed.unwrap_or(0);
    let model = match file.model {
        ModelKind::Dyad => Model::Dyad(build_dyad(&file)?),
        ModelKind::Network => Model::Network(build_network(&file)?),
        ModelKind::Team => Model::Team(build_team(&file, seed)?),
    };
    Ok(Scenario {
        model,
        description: file.description.clone(),
        seed,
        prefix,
        digest: digest(bytes),
    })
}

fn check_sections(f: &ScenarioFile) -> CliResult<()> {
    let present = [
        ("dyad", f.dyad.is_some(), ModelKind::Dyad),
        ("network", f.network.is_some(), ModelKind::Network),
        ("topology", !f.topology.is_empty(), ModelKind::Network),
        ("inputs", f.inputs.is_some(), ModelKind::Network),
        ("collapse", f.collapse.is_some(), ModelKind::Network),
        ("envelope", f.envelope.is_some(), ModelKind::Network),
        ("propagation", f.propagation.is_some(), ModelKind::Network),
        ("team", f.team.is_some(), ModelKind::Team),
        ("agent", !f.agent.is_empty(), ModelKind::Team),
        ("decision", !f.decision.is_empty(), ModelKind::Team),
        ("structure", f.structure.is_some(), ModelKind::Team),
        ("optimizer", f.optimizer.is_some(), ModelKind::Team),
    ];
    for (name, here, owner) in present {
        if here && owner != f.model {
            return Err(invalid(format!(
                "section `{name}` does not apply to model `{}`",
                f.model.as_str()
            )));
        }
    }
    if f.curve.is_some() && f.model == ModelKind::Team {
        return Err(invalid(
            "section `curve` does not apply to model `team`; give each agent a curve",
        ));
    }
    Ok(())
}

fn required<'a, T>(v: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| invalid(format!("missing section `{name}`")))
}

fn scenario_curve(f: &ScenarioFile) -> CliResult<SCurve> {
    f.curve.map_or(Ok(SCurve::default()), CurveSpec::build)
}

fn build_dyad(f: &ScenarioFile) -> CliResult<DyadScenario> {
    let d = required(&f.dyad, "dyad")?;
    let defaults = SweepConfig::default();
    let config = SweepConfig {
        horizon: d.horizon.unwrap_or(defaults.horizon),
        growth_limit: d.growth_limit.unwrap_or(defaults.growth_limit),
        saturation_ceiling: d.saturation_ceiling.unwrap_or(DEFAULT_SATURATION_CEILING),
    };
    if config.horizon < 4 {
        return Err(invalid("dyad horizon must be at least 4"));
    }
    if !(config.growth_limit.is_finite() && config.growth_limit > 1.0) {
        return Err(invalid("dyad growth_limit must be finite and > 1"));
    }
    if !(config.saturation_ceiling.is_finite() && config.saturation_ceiling > 0.0) {
        return Err(invalid("dyad saturation_ceiling must be finite and > 0"));
    }
    let gains = d.gains.values("gains")?;
    let order_rates = d.order_rates.values("order_rates")?;
    if gains[0] < 0.0 || order_rates[0] < 0.0 {
        return Err(invalid("gains and order rates must be >= 0"));
    }
    Ok(DyadScenario {
        curve: scenario_curve(f)?,
        gains,
        order_rates,
        config,
    })
}

fn build_network(f: &ScenarioFile) -> CliResult<NetScenario> {
    let n = required(&f.network, "network")?;
    let defaults = NetConfig::default();
    let config = NetConfig {
        horizon: n.horizon.unwrap_or(defaults.horizon),
        window: n.window.unwrap_or(defaults.window),
        saturation_ceiling: n.saturation_ceiling.unwrap_or(defaults.saturation_ceiling),
        collapse_level: n.collapse_level.unwrap_or(defaults.collapse_level),
        growth_limit: n.growth_limit.unwrap_or(defaults.growth_limit),
    };
    config.validate().map_err(invalid)?;
    if f.topology.is_empty() {
        return Err(invalid("network scenario lists no `[[topology]]`"));
    }
    let curve = scenario_curve(f)?;
    let inputs = f.inputs.clone().unwrap_or(InputsSpec {
        root_rate: zero(),
        root_error: zero(),
        leaf_requests: zero_leaves(),
    });
    let mut names = std::collections::BTreeSet::new();
    let mut topologies = Vec::with_capacity(f.topology.len());
    for spec in &f.topology {
        let name = spec.name().to_string();
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(invalid(format!(
                "topology name `{name}` must be non-empty [A-Za-z0-9_-]"
            )));
        }
        if !names.insert(name.clone()) {
            return Err(invalid(format!("duplicate topology name `{name}`")));
        }
        let topology = spec.build(curve)?;
        let built = inputs.build(&topology, &name)?;
        built
            .validate(&topology, config.horizon)
            .map_err(|e| invalid(format!("topology `{name}` inputs: {e}")))?;
        topologies.push(NamedTopology {
            name,
            topology,
            inputs: built,
        });
    }
    let root_rates = f
        .collapse
        .as_ref()
        .map(|c| c.root_rates.values("root_rates"))
        .transpose()?;
    if root_rates.as_ref().is_some_and(|r| r[0] < 0.0) {
        return Err(invalid("collapse root_rates must be >= 0"));
    }
    let envelope = f
        .envelope
        .as_ref()
        .map(|e| Ok::<_, CliError>((e.sums.values("sums")?, e.differences.values("differences")?)))
        .transpose()?;
    if envelope.is_some() {
        if let Some(t) = topologies.iter().find(|t| t.topology.leaves().len() < 2) {
            return Err(invalid(format!(
                "envelope needs two leaves; topology `{}` has fewer",
                t.name
            )));
        }
    }
    if let Some(p) = &f.propagation {
        if !(p.stimulus.is_finite() && p.stimulus >= 0.0) {
            return Err(invalid("propagation stimulus must be finite and >= 0"));
        }
        if let Some(t) = topologies
            .iter()
            .find(|t| p.leaf >= t.topology.leaves().len())
        {
            return Err(invalid(format!(
                "propagation leaf {} is out of range for topology `{}`",
                p.leaf, t.name
            )));
        }
    }
    Ok(NetScenario {
        config,
        topologies,
        root_rates,
        envelope,
        propagation: f.propagation.clone(),
    })
}

fn build_team(f: &ScenarioFile, seed: u64) -> CliResult<TeamScenario> {
    let t = required(&f.team, "team")?;
    if t.horizon == 0 {
        return Err(invalid("team horizon must be at least 1"));
    }
    let mut agents = Vec::with_capacity(f.agent.len());
    for a in &f.agent {
        agents.push(Agent {
            id: a.id.clone(),
            pressure_curve: a.curve.build()?,
            interaction_load_weight: a.interaction_load_weight,
        });
    }
    let decisions = f
        .decision
        .iter()
        .map(|d| Decision {
            id: d.id.clone(),
            dependencies: d.dependencies.clone(),
        })
        .collect();
    let team = Team::new(agents, decisions).map_err(invalid)?;
    let mut forecasts = Vec::with_capacity(f.decision.len());
    for d in &f.decision {
        let series = |name: &str, s: &SeriesSpec| s.sample(&format!("{}.{name}", d.id), t.horizon);
        let n_options = series("n_options", &d.forecast.n_options)?
            .into_iter()
            .map(|v| {
                if v.is_finite() && (0.0..=f64::from(u32::MAX)).contains(&v) {
                    Ok(v.round() as u32)
                } else {
                    Err(invalid(format!(
                        "decision `{}`: n_options value {v} is out of range",
                        d.id
                    )))
                }
            })
            .collect::<CliResult<Vec<u32>>>()?;
        forecasts.push(DecisionForecast {
            time_availability: series("time_availability", &d.forecast.time_availability)?,
            discriminability: series("discriminability", &d.forecast.discriminability)?,
            n_options,
        });
    }
    let weights = f.decision.iter().map(|d| d.weight.unwrap_or(1.0)).collect();
    let instance = TeamInstance::new(
        team,
        forecasts,
        Some(weights),
        t.horizon,
        t.pull_staleness.unwrap_or(DEFAULT_PULL_STALENESS),
    )
    .map_err(invalid)?;
    let structure = f
        .structure
        .as_ref()
        .map(|s| s.build(instance.team()))
        .transpose()?;
    let defaults = GaConfig::default();
    let o = f.optimizer.clone().unwrap_or(OptimizerSpec {
        population: None,
        generations: None,
        mutation_rate: None,
        crossover_rate: None,
        selection: None,
        elitism: None,
        exhaustive_cap: None,
    });
    let ga = GaConfig {
        population: o.population.unwrap_or(defaults.population),
        generations: o.generations.unwrap_or(defaults.generations),
        mutation_rate: o.mutation_rate.unwrap_or(defaults.mutation_rate),
        crossover_rate: o.crossover_rate.unwrap_or(defaults.crossover_rate),
        selection: o.selection.unwrap_or(defaults.selection),
        elitism: o.elitism.unwrap_or(defaults.elitism),
        seed,
    };
    ga.validate().map_err(invalid)?;
    Ok(TeamScenario {
        instance,
        structure,
        ga,
        exhaustive_cap: o.exhaustive_cap.map_or(DEFAULT_EXHAUSTIVE_CAP, u128::from),
    })
}
