//! Networks of decision-making components.
//!
//! An intermediate component receives a rate and an error fraction from its
//! superior (`u2`, `u1`), requests from its subordinates (`u3`), and emits
//!
//! ```text
//! y1(k+1) = K * min(1, u1 + f(u2 + u3)) * u2      clarification requests up
//! y2(k+1) = u1 + (1 - u1) * f(u2 + u3)             error fraction down
//! y3(k+1) = u2                                     rate to each subordinate
//! ```
//!
//! A broker replaces an intermediate layer and steers its outgoing rate away
//! from subordinates returning many requests:
//!
//! ```text
//! e       = f(u1 + sum u_i) * (1 - u2) + u2
//! y1(k+1) = u1 * e
//! y2(k+1) = e
//! y_i     = u1 * c * (1 - u_i / sum u_j)
//! ```
//!
//! with `c = 1 / (m - 1)` in [`RedistributionMode::Conserving`] and the
//! printed `(n - 4) / (n - 3)`, `n = m + 2`, in
//! [`RedistributionMode::Literal`].
//!
//! Leaves are intermediate components whose subordinate side is the field:
//! their `y2`/`y3` are the commands to the field and their `u3` is the
//! exogenous field-request input. All nodes update synchronously from the
//! previous step's outputs.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::tradeoff::SCurve;
use crate::{Stability, DEFAULT_SATURATION_CEILING};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntermediateNode {
    pub curve: SCurve,
    /// Confusion gain `K`.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RedistributionMode {
    /// Coefficient `(n - 4) / (n - 3)` as printed; does not conserve rate.
    Literal,
    /// Coefficient `1 / (m - 1)`; subordinate rates sum to the incoming rate.
    Conserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrokerNode {
    pub curve: SCurve,
    pub mode: RedistributionMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Intermediate(IntermediateNode),
    Broker(BrokerNode),
}

/// Output ports of a component at one step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodePorts {
    /// `y1`: rate of messages to the superior.
    pub up_rate: f64,
    /// `y2`: error fraction of messages to subordinates.
    pub down_error: f64,
    /// `y3...`: one shared rate for an intermediate node, one per
    /// subordinate for a broker.
    pub down_rates: Vec<f64>,
}

fn clamp_rate(v: f64, ceiling: f64, saturated: &mut bool) -> f64 {
    if v > ceiling || v.is_nan() {
        *saturated = true;
        ceiling
    } else {
        v.max(0.0)
    }
}

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("error fraction must lie in [0, 1], got {v}"),
        ))
    }
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("rate must be finite and >= 0, got {v}"),
        ))
    }
}

impl IntermediateNode {
    pub fn new(curve: SCurve, gain: f64) -> Result<Self> {
        let node = IntermediateNode { curve, gain };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::param(
                "K",
                format!("gain must be finite and >= 0, got {}", self.gain),
            ));
        }
        Ok(())
    }

    /// One update. Returns the ports and whether a rate clamp bound.
    pub fn step(
        &self,
        superior_error: f64,
        superior_rate: f64,
        subordinate_rate: f64,
        ceiling: f64,
    ) -> Result<(NodePorts, bool)> {
        check_fraction("u1", superior_error)?;
        check_rate("u2", superior_rate)?;
        check_rate("u3", subordinate_rate)?;
        Ok(self.step_unchecked(superior_error, superior_rate, subordinate_rate, ceiling))
    }

    fn step_unchecked(&self, u1: f64, u2: f64, u3: f64, ceiling: f64) -> (NodePorts, bool) {
        let incurred = self.curve.error_fraction(u2 + u3);
        let total_error = (u1 + incurred).min(1.0);
        let mut saturated = false;
        let up_rate = clamp_rate(self.gain * total_error * u2, ceiling, &mut saturated);
        let down_rate = clamp_rate(u2, ceiling, &mut saturated);
        let down_error = (u1 + (1.0 - u1) * incurred).clamp(0.0, 1.0);
        (
            NodePorts {
                up_rate,
                down_error,
                down_rates: vec![down_rate],
            },
            saturated,
        )
    }
}

impl BrokerNode {
    pub fn new(curve: SCurve, mode: RedistributionMode) -> Result<Self> {
        curve.validate()?;
        Ok(BrokerNode { curve, mode })
    }

    /// Redistribution coefficient for `m` subordinates.
    pub fn coefficient(&self, subordinates: usize) -> f64 {
        let m = subordinates as f64;
        match self.mode {
            RedistributionMode::Conserving => 1.0 / (m - 1.0),
            RedistributionMode::Literal => {
                let n = m + 2.0;
                (n - 4.0) / (n - 3.0)
            }
        }
    }

    /// One update from the superior rate `u1`, superior error `u2` and the
    /// request rates returned by each subordinate.
    pub fn step(
        &self,
        superior_rate: f64,
        superior_error: f64,
        subordinate_rates: &[f64],
        ceiling: f64,
    ) -> Result<(NodePorts, bool)> {
        check_rate("u1", superior_rate)?;
        check_fraction("u2", superior_error)?;
        if subordinate_rates.len() < 2 {
            return Err(Error::param(
                "subordinates",
                format!(
                    "a broker needs at least two subordinates, got {}",
                    subordinate_rates.len()
                ),
            ));
        }
        for &r in subordinate_rates {
            check_rate("u_i", r)?;
        }
        Ok(self.step_unchecked(superior_rate, superior_error, subordinate_rates, ceiling))
    }

    fn step_unchecked(&self, u1: f64, u2: f64, subs: &[f64], ceiling: f64) -> (NodePorts, bool) {
        let returned: f64 = subs.iter().sum();
        let error = (self.curve.error_fraction(u1 + returned) * (1.0 - u2) + u2).clamp(0.0, 1.0);
        let mut saturated = false;
        let up_rate = clamp_rate(u1 * error, ceiling, &mut saturated);
        let m = subs.len();
        let down_rates = if returned > 0.0 {
            let c = self.coefficient(m);
            subs.iter()
                .map(|&r| clamp_rate(u1 * c * (1.0 - r / returned), ceiling, &mut saturated))
                .collect()
        } else {
            vec![clamp_rate(u1 / m as f64, ceiling, &mut saturated); m]
        };
        (
            NodePorts {
                up_rate,
                down_error: error,
                down_rates,
            },
            saturated,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    /// Index of the superior; `None` for the root.
    pub parent: Option<usize>,
}

/// A validated rooted tree of components.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    children: Vec<Vec<usize>>,
    root: usize,
    /// Leaves in left-to-right (depth-first) order.
    leaves: Vec<usize>,
    depth: Vec<usize>,
    root_feedback: bool,
}

impl Topology {
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for n in &nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate node id `{}`",
                    n.id
                )));
            }
            match &n.kind {
                NodeKind::Intermediate(node) => node.validate()?,
                NodeKind::Broker(node) => node.curve.validate()?,
            }
        }
        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTopology(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                if p >= nodes.len() {
                    return Err(Error::InvalidTopology(format!(
                        "node `{}` names missing parent index {p}",
                        n.id
                    )));
                }
                if p == i {
                    return Err(Error::InvalidTopology(format!(
                        "node `{}` is its own parent",
                        n.id
                    )));
                }
                children[p].push(i);
            }
        }
        // depth-first walk from the root; anything unvisited sits on a cycle
        let mut depth = vec![usize::MAX; nodes.len()];
        let mut leaves = Vec::new();
        let mut stack = vec![(root, 0usize)];
        while let Some((n, d)) = stack.pop() {
            depth[n] = d;
            if children[n].is_empty() {
                leaves.push(n);
            }
            for &c in children[n].iter().rev() {
                stack.push((c, d + 1));
            }
        }
        if let Some(i) = depth.iter().position(|&d| d == usize::MAX) {
            return Err(Error::InvalidTopology(format!(
                "node `{}` is not reachable from the root (cycle)",
                nodes[i].id
            )));
        }
        for (i, n) in nodes.iter().enumerate() {
            if matches!(n.kind, NodeKind::Broker(_)) && children[i].len() < 2 {
                return Err(Error::InvalidTopology(format!(
                    "broker `{}` has {} subordinates, needs at least 2",
                    n.id,
                    children[i].len()
                )));
            }
        }
        Ok(Topology {
            nodes,
            children,
            root,
            leaves,
            depth,
            root_feedback: false,
        })
    }

    /// Uniform tree of intermediate nodes with the given fan-out per level.
    pub fn hierarchy(node: IntermediateNode, fanouts: &[usize]) -> Result<Self> {
        let mut nodes = vec![NodeSpec {
            id: "root".into(),
            kind: NodeKind::Intermediate(node),
            parent: None,
        }];
        let mut level = vec![0usize];
        for (depth, &fan) in fanouts.iter().enumerate() {
            let mut next = Vec::new();
            for &p in &level {
                for _ in 0..fan {
                    let id = format!("n{}_{}", depth + 1, next.len());
                    next.push(nodes.len());
                    nodes.push(NodeSpec {
                        id,
                        kind: NodeKind::Intermediate(node),
                        parent: Some(p),
                    });
                }
            }
            level = next;
        }
        Topology::new(nodes)
    }

    /// Root, two intermediate nodes, four leaves.
    pub fn binary_tree(node: IntermediateNode) -> Result<Self> {
        Topology::hierarchy(node, &[2, 2])
    }

    /// Root, one broker, `leaves` field components.
    pub fn broker_star(node: IntermediateNode, broker: BrokerNode, leaves: usize) -> Result<Self> {
        let mut nodes = vec![
            NodeSpec {
                id: "root".into(),
                kind: NodeKind::Intermediate(node),
                parent: None,
            },
            NodeSpec {
                id: "broker".into(),
                kind: NodeKind::Broker(broker),
                parent: Some(0),
            },
        ];
        for i in 0..leaves {
            nodes.push(NodeSpec {
                id: format!("leaf{i}"),
                kind: NodeKind::Intermediate(node),
                parent: Some(1),
            });
        }
        Topology::new(nodes)
    }

    /// Root, broker, four leaves.
    pub fn broker_quad(node: IntermediateNode, broker: BrokerNode) -> Result<Self> {
        Topology::broker_star(node, broker, 4)
    }

    /// A single intermediate node whose upward output is added to its own
    /// superior-rate input on the next step. With zero superior error this
    /// is the headquarters/field loop, delayed by one step.
    pub fn self_loop(node: IntermediateNode) -> Result<Self> {
        let mut t = Topology::new(vec![NodeSpec {
            id: "hq".into(),
            kind: NodeKind::Intermediate(node),
            parent: None,
        }])?;
        t.root_feedback = true;
        Ok(t)
    }

    pub fn with_root_feedback(mut self, on: bool) -> Self {
        self.root_feedback = on;
        self
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Number of levels on the longest root-to-leaf path.
    pub fn levels(&self) -> usize {
        self.depth.iter().max().copied().unwrap_or(0) + 1
    }

    pub fn root_feedback(&self) -> bool {
        self.root_feedback
    }

    /// True when the tree looks the same mirrored left to right.
    pub fn is_mirror_symmetric(&self) -> bool {
        self.mirror_equal(self.root, self.root)
    }

    fn mirror_equal(&self, a: usize, b: usize) -> bool {
        let (ca, cb) = (&self.children[a], &self.children[b]);
        self.nodes[a].kind == self.nodes[b].kind
            && ca.len() == cb.len()
            && ca
                .iter()
                .zip(cb.iter().rev())
                .all(|(&x, &y)| self.mirror_equal(x, y))
    }
}

/// Exogenous inputs: the root's superior channel and each leaf's field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInputs {
    pub root_rate: Schedule,
    pub root_error: Schedule,
    /// One schedule per leaf, in [`Topology::leaves`] order.
    pub leaf_requests: Vec<Schedule>,
}

impl NetInputs {
    pub fn constant(root_rate: f64, leaves: usize) -> Self {
        NetInputs {
            root_rate: Schedule::Constant(root_rate),
            root_error: Schedule::Constant(0.0),
            leaf_requests: vec![Schedule::Constant(0.0); leaves],
        }
    }

    /// Checks every schedule covers `horizon` steps with admissible values.
    pub fn validate(&self, topology: &Topology, horizon: usize) -> Result<()> {
        let rate_ok = |v: f64| v.is_finite() && v >= 0.0;
        self.root_rate
            .check_values("root_rate", horizon, rate_ok, "is not a nonnegative rate")?;
        self.root_error.check_values(
            "root_error",
            horizon,
            |v| (0.0..=1.0).contains(&v),
            "is not an error fraction",
        )?;
        if self.leaf_requests.len() != topology.leaves.len() {
            return Err(Error::param(
                "leaf_requests",
                format!(
                    "topology has {} leaves but {} schedules were given",
                    topology.leaves.len(),
                    self.leaf_requests.len()
                ),
            ));
        }
        for s in &self.leaf_requests {
            s.check_values(
                "leaf_requests",
                horizon,
                rate_ok,
                "is not a nonnegative rate",
            )?;
        }
        Ok(())
    }
}

/// Simulation settings shared by runs and sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub horizon: usize,
    /// Trailing steps averaged by [`NetRun::mean_field_error`].
    pub window: usize,
    pub saturation_ceiling: f64,
    /// Mean field error above which the organization has collapsed.
    pub collapse_level: f64,
    /// Tail growth factor treated as rate divergence.
    pub growth_limit: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            horizon: 300,
            window: 50,
            saturation_ceiling: DEFAULT_SATURATION_CEILING,
            collapse_level: 0.5,
            growth_limit: 10.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if self.window == 0 || self.window > self.horizon {
            return Err(Error::param(
                "window",
                format!("must lie in 1..={}, got {}", self.horizon, self.window),
            ));
        }
        if !(self.saturation_ceiling.is_finite() && self.saturation_ceiling > 0.0) {
            return Err(Error::param("saturation_ceiling", "must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.collapse_level) {
            return Err(Error::param("collapse_level", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Port time series of one run, step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NetRun {
    /// `ports[k][node]`; `ports.len() == horizon + 1` and `ports[0]` is all zero.
    pub ports: Vec<Vec<NodePorts>>,
    pub first_saturation: Option<usize>,
    leaves: Vec<usize>,
}

impl NetRun {
    pub fn horizon(&self) -> usize {
        self.ports.len() - 1
    }

    pub fn saturated(&self) -> bool {
        self.first_saturation.is_some()
    }

    /// Mean `y2` over one leaf's trailing window.
    pub fn leaf_error(&self, leaf_position: usize, window: usize) -> f64 {
        let node = self.leaves[leaf_position];
        let h = self.horizon();
        let w = window.clamp(1, h);
        let sum: f64 = self.ports[h + 1 - w..=h]
            .iter()
            .map(|p| p[node].down_error)
            .sum();
        sum / w as f64
    }

    /// Trailing-window mean `y2` of the worst node.
    pub fn max_node_error(&self, window: usize) -> f64 {
        let h = self.horizon();
        let w = window.clamp(1, h);
        let nodes = self.ports[0].len();
        (0..nodes)
            .map(|n| {
                self.ports[h + 1 - w..=h]
                    .iter()
                    .map(|p| p[n].down_error)
                    .sum::<f64>()
                    / w as f64
            })
            .fold(0.0, f64::max)
    }

    /// Mean leaf `y2` at a single step.
    pub fn field_error_at(&self, step: usize) -> f64 {
        let p = &self.ports[step];
        self.leaves.iter().map(|&l| p[l].down_error).sum::<f64>() / self.leaves.len() as f64
    }

    /// Mean `y2` over every leaf and the trailing `window` steps.
    pub fn mean_field_error(&self, window: usize) -> f64 {
        let n = self.leaves.len();
        (0..n).map(|i| self.leaf_error(i, window)).sum::<f64>() / n as f64
    }

    fn peak_rate(ports: &[NodePorts]) -> f64 {
        ports
            .iter()
            .flat_map(|p| std::iter::once(p.up_rate).chain(p.down_rates.iter().copied()))
            .fold(0.0, f64::max)
    }

    /// Rate-based classification: a clamp bound or the largest rate grew by
    /// more than `growth_limit` over the last quarter of the run.
    pub fn rate_stability(&self, growth_limit: f64) -> Stability {
        if self.saturated() {
            return Stability::Unstable;
        }
        let h = self.horizon();
        let start = NetRun::peak_rate(&self.ports[(3 * h) / 4]);
        let end = NetRun::peak_rate(&self.ports[h]);
        let growth = if end == 0.0 {
            1.0
        } else if start == 0.0 {
            f64::INFINITY
        } else {
            end / start
        };
        if growth > growth_limit {
            Stability::Unstable
        } else {
            Stability::Stable
        }
    }

    /// Unstable when rates diverge or any node's trailing-window error
    /// fraction exceeds the collapse level.
    pub fn classify(&self, config: &NetConfig) -> Stability {
        if self.rate_stability(config.growth_limit) == Stability::Unstable
            || self.max_node_error(config.window) > config.collapse_level
        {
            Stability::Unstable
        } else {
            Stability::Stable
        }
    }

    /// Long-format CSV: `step,node,y1,y2,y3,...` with empty trailing fields
    /// for nodes with fewer downward ports.
    pub fn write_csv<W: Write>(&self, topology: &Topology, mut out: W) -> io::Result<()> {
        let width = self
            .ports
            .first()
            .map(|p| p.iter().map(|n| n.down_rates.len()).max().unwrap_or(1))
            .unwrap_or(1);
        write!(out, "step,node,y1,y2")?;
        for i in 0..width {
            write!(out, ",y{}", i + 3)?;
        }
        writeln!(out)?;
        for (k, step) in self.ports.iter().enumerate() {
            for (n, p) in step.iter().enumerate() {
                write!(
                    out,
                    "{},{},{},{}",
                    k, topology.nodes[n].id, p.up_rate, p.down_error
                )?;
                for i in 0..width {
                    match p.down_rates.get(i) {
                        Some(r) => write!(out, ",{r}")?,
                        None => write!(out, ",")?,
                    }
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Runs the network for `horizon` steps from all-zero ports.
pub fn simulate_network(
    topology: &Topology,
    inputs: &NetInputs,
    config: &NetConfig,
) -> Result<NetRun> {
    config.validate()?;
    inputs.validate(topology, config.horizon)?;
    let n = topology.nodes.len();
    let ceiling = config.saturation_ceiling;
    let mut leaf_slot = vec![None; n];
    for (i, &leaf) in topology.leaves.iter().enumerate() {
        leaf_slot[leaf] = Some(i);
    }
    let mut child_slot = vec![0usize; n];
    for kids in &topology.children {
        for (i, &c) in kids.iter().enumerate() {
            child_slot[c] = i;
        }
    }
    let zero: Vec<NodePorts> = topology
        .nodes
        .iter()
        .enumerate()
        .map(|(i, spec)| NodePorts {
            up_rate: 0.0,
            down_error: 0.0,
            down_rates: match spec.kind {
                NodeKind::Intermediate(_) => vec![0.0],
                NodeKind::Broker(_) => vec![0.0; topology.children[i].len()],
            },
        })
        .collect();

    let mut ports = Vec::with_capacity(config.horizon + 1);
    ports.push(zero);
    let mut first_saturation = None;
    let mut sub_rates = Vec::new();
    for k in 0..config.horizon {
        let prev = &ports[k];
        let mut next = Vec::with_capacity(n);
        let mut saturated = false;
        for (i, spec) in topology.nodes.iter().enumerate() {
            let (rate_in, error_in) = match spec.parent {
                None => {
                    let mut rate = inputs.root_rate.at(k);
                    if topology.root_feedback {
                        rate += prev[i].up_rate;
                    }
                    (rate, inputs.root_error.at(k))
                }
                Some(p) => {
                    let sup = &prev[p];
                    let rate = match topology.nodes[p].kind {
                        NodeKind::Intermediate(_) => sup.down_rates[0],
                        NodeKind::Broker(_) => sup.down_rates[child_slot[i]],
                    };
                    (rate, sup.down_error)
                }
            };
            sub_rates.clear();
            sub_rates.extend(topology.children[i].iter().map(|&c| prev[c].up_rate));
            let (out, sat) = match &spec.kind {
                NodeKind::Intermediate(node) => {
                    let exo = leaf_slot[i].map_or(0.0, |s| inputs.leaf_requests[s].at(k));
                    let load = sub_rates.iter().sum::<f64>() + exo;
                    node.step_unchecked(error_in, rate_in, load, ceiling)
                }
                NodeKind::Broker(node) => {
                    node.step_unchecked(rate_in, error_in, &sub_rates, ceiling)
                }
            };
            saturated |= sat;
            next.push(out);
        }
        if saturated && first_saturation.is_none() {
            first_saturation = Some(k + 1);
        }
        ports.push(next);
    }
    Ok(NetRun {
        ports,
        first_saturation,
        leaves: topology.leaves.clone(),
    })
}

/// Mean field error as a function of a constant root rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseCurve {
    pub rates: Vec<f64>,
    pub errors: Vec<f64>,
    /// Smallest swept rate whose mean field error exceeds the collapse level.
    pub threshold: Option<f64>,
}

impl CollapseCurve {
    pub fn threshold(&self) -> Result<f64> {
        self.threshold.ok_or(Error::NoCollapse)
    }

    /// Linear interpolation of the curve at `rate`.
    pub fn error_at(&self, rate: f64) -> f64 {
        let i = self.rates.partition_point(|&r| r < rate);
        if i == 0 {
            return self.errors[0];
        }
        if i == self.rates.len() {
            return *self.errors.last().expect("non-empty curve");
        }
        let (r0, r1) = (self.rates[i - 1], self.rates[i]);
        let (e0, e1) = (self.errors[i - 1], self.errors[i]);
        e0 + (e1 - e0) * (rate - r0) / (r1 - r0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "root_rate,mean_field_error,collapsed")?;
        for (r, e) in self.rates.iter().zip(&self.errors) {
            let collapsed = self.threshold.is_some_and(|t| *r >= t);
            writeln!(out, "{r},{e},{collapsed}")?;
        }
        Ok(())
    }
}

fn check_ascending(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            name,
            "grid must be finite and strictly ascending",
        ));
    }
    Ok(())
}

/// Sweeps a constant root rate over `rates`, holding the other inputs of
/// `base` fixed, and locates the collapse threshold.
pub fn collapse_threshold(
    topology: &Topology,
    base: &NetInputs,
    rates: &[f64],
    config: &NetConfig,
) -> Result<CollapseCurve> {
    check_ascending("root_rates", rates)?;
    let errors = rates
        .par_iter()
        .map(|&r| {
            let inputs = NetInputs {
                root_rate: Schedule::Constant(r),
                ..base.clone()
            };
            simulate_network(topology, &inputs, config)
                .map(|run| run.mean_field_error(config.window))
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = rates
        .iter()
        .zip(&errors)
        .find(|(_, e)| **e > config.collapse_level)
        .map(|(r, _)| *r);
    Ok(CollapseCurve {
        rates: rates.to_vec(),
        errors,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeClass {
    Stable,
    Unstable,
    /// The `(sum, difference)` pair implies a negative leaf input.
    Infeasible,
}

impl EnvelopeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeClass::Stable => "stable",
            EnvelopeClass::Unstable => "unstable",
            EnvelopeClass::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCell {
    pub sum: f64,
    pub difference: f64,
    pub class: EnvelopeClass,
    pub mean_field_error: Option<f64>,
    pub max_node_error: Option<f64>,
}

/// Stability over constant inputs at the far-left and far-right leaves,
/// stored sum-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub sums: Vec<f64>,
    pub differences: Vec<f64>,
    pub cells: Vec<EnvelopeCell>,
}

impl Envelope {
    pub fn cell(&self, sum_index: usize, diff_index: usize) -> &EnvelopeCell {
        &self.cells[sum_index * self.differences.len() + diff_index]
    }

    pub fn stable_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.class == EnvelopeClass::Stable)
            .count()
    }

    /// Largest stable `|difference|` in a sum row.
    pub fn max_stable_difference(&self, sum_index: usize) -> Option<f64> {
        (0..self.differences.len())
            .map(|j| self.cell(sum_index, j))
            .filter(|c| c.class == EnvelopeClass::Stable)
            .map(|c| c.difference.abs())
            .reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sum,difference,class,mean_field_error,max_node_error")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.sum,
                c.difference,
                c.class.as_str(),
                crate::dyad::opt(c.mean_field_error),
                crate::dyad::opt(c.max_node_error)
            )?;
        }
        Ok(())
    }
}

/// Classifies every `(sum, difference)` cell: the far-left leaf receives
/// `(sum + difference) / 2` and the far-right leaf `(sum - difference) / 2`
/// on top of `base`.
pub fn stability_envelope(
    topology: &Topology,
    base: &NetInputs,
    sums: &[f64],
    differences: &[f64],
    config: &NetConfig,
) -> Result<Envelope> {
    check_ascending("sums", sums)?;
    check_ascending("differences", differences)?;
    if topology.leaves.len() < 2 {
        return Err(Error::InvalidTopology(
            "envelope needs at least two leaves".into(),
        ));
    }
    let nd = differences.len();
    let last_leaf = topology.leaves.len() - 1;
    let cells = (0..sums.len() * nd)
        .into_par_iter()
        .map(|idx| {
            let sum = sums[idx / nd];
            let difference = differences[idx % nd];
            let left = 0.5 * (sum + difference);
            let right = 0.5 * (sum - difference);
            if left < 0.0 || right < 0.0 {
                return Ok(EnvelopeCell {
                    sum,
                    difference,
                    class: EnvelopeClass::Infeasible,
                    mean_field_error: None,
                    max_node_error: None,
                });
            }
            let mut inputs = base.clone();
            inputs.leaf_requests[0] = offset(&base.leaf_requests[0], left);
            inputs.leaf_requests[last_leaf] = offset(&base.leaf_requests[last_leaf], right);
            let run = simulate_network(topology, &inputs, config)?;
            let class = match run.classify(config) {
                Stability::Stable => EnvelopeClass::Stable,
                Stability::Unstable => EnvelopeClass::Unstable,
            };
            Ok(EnvelopeCell {
                sum,
                difference,
                class,
                mean_field_error: Some(run.mean_field_error(config.window)),
                max_node_error: Some(run.max_node_error(config.window)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Envelope {
        sums: sums.to_vec(),
        differences: differences.to_vec(),
        cells,
    })
}

fn offset(s: &Schedule, by: f64) -> Schedule {
    match s {
        Schedule::Constant(v) => Schedule::Constant(v + by),
        Schedule::Ramp { start, slope } => Schedule::Ramp {
            start: start + by,
            slope: *slope,
        },
        Schedule::Steps(v) => Schedule::Steps(v.iter().map(|x| x + by).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafDelta {
    /// Position in [`Topology::leaves`].
    pub leaf: usize,
    pub node: String,
    pub baseline: f64,
    pub stimulated: f64,
    pub delta: f64,
}

/// Adds a constant `stimulus` to one leaf's field input and reports how the
/// trailing-window mean `y2` of every other leaf moves against the
/// unstimulated baseline.
pub fn propagation_trace(
    topology: &Topology,
    base: &NetInputs,
    stimulated_leaf: usize,
    stimulus: f64,
    config: &NetConfig,
) -> Result<Vec<LeafDelta>> {
    if stimulated_leaf >= topology.leaves.len() {
        return Err(Error::param(
            "stimulated_leaf",
            format!(
                "topology has {} leaves, got index {stimulated_leaf}",
                topology.leaves.len()
            ),
        ));
    }
    check_rate("stimulus", stimulus)?;
    let baseline = simulate_network(topology, base, config)?;
    let mut inputs = base.clone();
    inputs.leaf_requests[stimulated_leaf] = offset(&base.leaf_requests[stimulated_leaf], stimulus);
    let stimulated = simulate_network(topology, &inputs, config)?;
    Ok((0..topology.leaves.len())
        .filter(|&i| i != stimulated_leaf)
        .map(|i| {
            let b = baseline.leaf_error(i, config.window);
            let s = stimulated.leaf_error(i, config.window);
            LeafDelta {
                leaf: i,
                node: topology.nodes[topology.leaves[i]].id.clone(),
                baseline: b,
                stimulated: s,
                delta: s - b,
            }
        })
        .collect())
}

pub fn write_propagation_csv<W: Write>(deltas: &[LeafDelta], mut out: W) -> io::Result<()> {
    writeln!(out, "leaf,node,baseline,stimulated,delta")?;
    for d in deltas {
        writeln!(
            out,
            "{},{},{},{},{}",
            d.leaf, d.node, d.baseline, d.stimulated, d.delta
        )?;
    }
    Ok(())
}
