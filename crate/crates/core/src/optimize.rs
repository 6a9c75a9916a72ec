//! Search over information structures.
//!
//! A [`Chromosome`] holds one responsibility gene per decision and one mode
//! gene per `(decision, agent)` pair, laid out decision-major. The mode gene
//! at a decision's own owner carries no information and is always zero in
//! canonical form. Chromosomes order lexicographically, responsibility genes
//! first; every tie is broken toward the smaller chromosome.
//!
//! The genetic algorithm draws from `ChaCha8Rng`, so a seed reproduces the
//! same run on every platform. Population fitness is evaluated in parallel
//! and collected in population order.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::team::{dependency_satisfied, InformationStructure, SharingMode, Team, TeamInstance};

pub const GENE_NONE: u8 = 0;
pub const GENE_PUSH: u8 = 1;
pub const GENE_PULL: u8 = 2;
const MODE_VALUES: u8 = 3;

/// Evaluation budget above which [`exhaustive_search`] refuses to run.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneShape {
    pub decisions: usize,
    pub agents: usize,
}

impl GeneShape {
    pub fn new(decisions: usize, agents: usize) -> Result<Self> {
        if decisions == 0 || agents == 0 || agents > usize::from(u8::MAX) {
            return Err(Error::param(
                "shape",
                format!("need >= 1 decision and 1..=255 agents, got {decisions} x {agents}"),
            ));
        }
        Ok(GeneShape { decisions, agents })
    }

    pub fn of(team: &Team) -> Result<Self> {
        GeneShape::new(team.decisions().len(), team.agents().len())
    }

    /// Number of canonical chromosomes, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        let free = (self.decisions * (self.agents - 1)) as u32;
        let d = self.decisions as u32;
        (self.agents as u128)
            .checked_pow(d)
            .and_then(|r| 3u128.checked_pow(free).and_then(|s| r.checked_mul(s)))
            .unwrap_or(u128::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome {
    pub responsibility: Vec<u8>,
    /// `sharing[d * agents + a]` is the mode of `d` delivered to `a`.
    pub sharing: Vec<u8>,
}

impl Chromosome {
    /// Zeroes every mode gene that points at the decision's own owner.
    pub fn canonicalize(&mut self, shape: GeneShape) {
        for (d, &owner) in self.responsibility.iter().enumerate() {
            self.sharing[d * shape.agents + usize::from(owner)] = GENE_NONE;
        }
    }

    fn check(&self, shape: GeneShape) -> Result<()> {
        if self.responsibility.len() != shape.decisions
            || self.sharing.len() != shape.decisions * shape.agents
        {
            return Err(Error::InvalidStructure(format!(
                "chromosome has {} + {} genes, shape needs {} + {}",
                self.responsibility.len(),
                self.sharing.len(),
                shape.decisions,
                shape.decisions * shape.agents
            )));
        }
        let limit = shape.agents as u8;
        if let Some(i) = self.responsibility.iter().position(|&g| g >= limit) {
            return Err(Error::GeneOutOfRange {
                index: i,
                value: self.responsibility[i],
                limit,
            });
        }
        if let Some(i) = self.sharing.iter().position(|&g| g >= MODE_VALUES) {
            return Err(Error::GeneOutOfRange {
                index: shape.decisions + i,
                value: self.sharing[i],
                limit: MODE_VALUES,
            });
        }
        Ok(())
    }
}

pub fn encode(structure: &InformationStructure, shape: GeneShape) -> Result<Chromosome> {
    if structure.responsibility.len() != shape.decisions {
        return Err(Error::InvalidStructure(format!(
            "structure covers {} decisions, shape has {}",
            structure.responsibility.len(),
            shape.decisions
        )));
    }
    if structure.responsibility.iter().any(|&a| a >= shape.agents) {
        return Err(Error::InvalidStructure(
            "responsibility names an unknown agent".into(),
        ));
    }
    let mut sharing = vec![GENE_NONE; shape.decisions * shape.agents];
    for (&(d, r), &mode) in &structure.sharing {
        if d >= shape.decisions || r >= shape.agents || structure.owner(d) == r {
            return Err(Error::InvalidStructure(format!(
                "sharing edge ({d}, {r}) is not encodable"
            )));
        }
        sharing[d * shape.agents + r] = match mode {
            SharingMode::Push => GENE_PUSH,
            SharingMode::Pull => GENE_PULL,
        };
    }
    Ok(Chromosome {
        responsibility: structure.responsibility.iter().map(|&a| a as u8).collect(),
        sharing,
    })
}

/// Always yields a total structure; owner mode genes are ignored.
pub fn decode(chromosome: &Chromosome, shape: GeneShape) -> Result<InformationStructure> {
    chromosome.check(shape)?;
    Ok(decode_unchecked(chromosome, shape))
}

fn decode_unchecked(c: &Chromosome, shape: GeneShape) -> InformationStructure {
    let mut s =
        InformationStructure::new(c.responsibility.iter().map(|&a| usize::from(a)).collect());
    for d in 0..shape.decisions {
        for a in 0..shape.agents {
            let mode = match c.sharing[d * shape.agents + a] {
                GENE_PUSH => SharingMode::Push,
                GENE_PULL => SharingMode::Pull,
                _ => continue,
            };
            if s.owner(d) != a {
                s.sharing.insert((d, a), mode);
            }
        }
    }
    s
}

/// The canonical chromosome of rank `index` in lexicographic order.
fn nth_canonical(mut index: u128, shape: GeneShape) -> Chromosome {
    let free = shape.decisions * (shape.agents - 1);
    let mut free_genes = vec![0u8; free];
    for g in free_genes.iter_mut().rev() {
        *g = (index % 3) as u8;
        index /= 3;
    }
    let mut responsibility = vec![0u8; shape.decisions];
    for g in responsibility.iter_mut().rev() {
        *g = (index % shape.agents as u128) as u8;
        index /= shape.agents as u128;
    }
    let mut sharing = vec![GENE_NONE; shape.decisions * shape.agents];
    let mut next = free_genes.into_iter();
    for (d, &owner) in responsibility.iter().enumerate() {
        for a in 0..shape.agents {
            if a != usize::from(owner) {
                sharing[d * shape.agents + a] = next.next().unwrap_or(GENE_NONE);
            }
        }
    }
    Chromosome {
        responsibility,
        sharing,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub chromosome: Chromosome,
    pub structure: InformationStructure,
    pub fitness: f64,
    pub evaluations: u128,
}

/// Evaluates every canonical chromosome and returns the lexicographically
/// smallest maximizer.
pub fn exhaustive_search<F>(shape: GeneShape, cap: u128, fitness: F) -> Result<SearchOutcome>
where
    F: Fn(&InformationStructure) -> f64 + Sync,
{
    let size = shape.search_space();
    if size > cap || size > u128::from(u64::MAX) {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let (best, index) = (0..size as u64)
        .into_par_iter()
        .map(|i| {
            let s = decode_unchecked(&nth_canonical(u128::from(i), shape), shape);
            (sanitize(fitness(&s)), i)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                Ordering::Greater => a,
                Ordering::Less => b,
                Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let chromosome = nth_canonical(u128::from(index), shape);
    Ok(SearchOutcome {
        structure: decode_unchecked(&chromosome, shape),
        chromosome,
        fitness: best,
        evaluations: size,
    })
}

/// [`exhaustive_search`] with the instance's fitness.
pub fn exhaustive_team(instance: &TeamInstance, cap: u128) -> Result<SearchOutcome> {
    exhaustive_search(GeneShape::of(instance.team())?, cap, |s| instance.score(s))
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::NEG_INFINITY
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase", deny_unknown_fields)]
pub enum Selection {
    Tournament {
        k: usize,
    },
    /// Fitness-proportional; uniform when every fitness is zero.
    Roulette,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-gene probability of resampling to a different value.
    pub mutation_rate: f64,
    /// Probability a child is a uniform crossover rather than a copy.
    pub crossover_rate: f64,
    pub selection: Selection,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 60,
            generations: 100,
            mutation_rate: 0.03,
            crossover_rate: 0.8,
            selection: Selection::Tournament { k: 3 },
            elitism: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::param(
                "population",
                format!("must be >= 2, got {}", self.population),
            ));
        }
        if self.elitism == 0 || self.elitism >= self.population {
            return Err(Error::param(
                "elitism",
                format!("must lie in 1..{}, got {}", self.population, self.elitism),
            ));
        }
        for (name, p) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if let Selection::Tournament { k } = self.selection {
            if k == 0 || k > self.population {
                return Err(Error::param(
                    "tournament k",
                    format!("must lie in 1..={}, got {k}", self.population),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub chromosome: Chromosome,
    pub structure: InformationStructure,
    pub fitness: f64,
    /// Best-so-far fitness after the initial population and each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Runs the genetic algorithm from a seeded random population.
pub fn ga_optimize<F>(config: &GaConfig, shape: GeneShape, fitness: F) -> Result<GaOutcome>
where
    F: Fn(&InformationStructure) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = (0..config.population)
        .map(|_| random_chromosome(shape, &mut rng))
        .collect();
    evolve(config, shape, initial, rng, fitness)
}

/// Runs the genetic algorithm from `initial`, which must hold exactly
/// `config.population` chromosomes.
pub fn ga_optimize_from<F>(
    config: &GaConfig,
    shape: GeneShape,
    initial: Vec<Chromosome>,
    fitness: F,
) -> Result<GaOutcome>
where
    F: Fn(&InformationStructure) -> f64 + Sync,
{
    config.validate()?;
    if initial.len() != config.population {
        return Err(Error::param(
            "population",
            format!(
                "initial population has {} members, config says {}",
                initial.len(),
                config.population
            ),
        ));
    }
    let mut canonical = Vec::with_capacity(initial.len());
    for mut c in initial {
        c.check(shape)?;
        c.canonicalize(shape);
        canonical.push(c);
    }
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    evolve(config, shape, canonical, rng, fitness)
}

/// [`ga_optimize`] with the instance's fitness.
pub fn optimize_team(instance: &TeamInstance, config: &GaConfig) -> Result<GaOutcome> {
    ga_optimize(config, GeneShape::of(instance.team())?, |s| {
        instance.score(s)
    })
}

fn random_chromosome(shape: GeneShape, rng: &mut ChaCha8Rng) -> Chromosome {
    let mut c = Chromosome {
        responsibility: (0..shape.decisions)
            .map(|_| rng.random_range(0..shape.agents as u8))
            .collect(),
        sharing: (0..shape.decisions * shape.agents)
            .map(|_| rng.random_range(0..MODE_VALUES))
            .collect(),
    };
    c.canonicalize(shape);
    c
}

/// Descending fitness, then ascending chromosome.
fn rank(a: &(f64, &Chromosome), b: &(f64, &Chromosome)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

fn evaluate<F>(population: &[Chromosome], shape: GeneShape, fitness: &F) -> Vec<f64>
where
    F: Fn(&InformationStructure) -> f64 + Sync,
{
    population
        .par_iter()
        .map(|c| sanitize(fitness(&decode_unchecked(c, shape))))
        .collect()
}

fn evolve<F>(
    config: &GaConfig,
    shape: GeneShape,
    mut population: Vec<Chromosome>,
    mut rng: ChaCha8Rng,
    fitness: F,
) -> Result<GaOutcome>
where
    F: Fn(&InformationStructure) -> f64 + Sync,
{
    let mut scores = evaluate(&population, shape, &fitness);
    let mut evaluations = population.len();
    let (mut best_fit, mut best) = champion(&population, &scores);
    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(best_fit);

    for _ in 0..config.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&i, &j| rank(&(scores[i], &population[i]), &(scores[j], &population[j])));
        let mut next: Vec<Chromosome> = order[..config.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < config.population {
            let a = select(config.selection, &scores, &mut rng);
            let mut child = if rng.random_bool(config.crossover_rate) {
                let b = select(config.selection, &scores, &mut rng);
                crossover(&population[a], &population[b], &mut rng)
            } else {
                population[a].clone()
            };
            mutate(&mut child, shape, config.mutation_rate, &mut rng);
            child.canonicalize(shape);
            next.push(child);
        }
        population = next;
        scores = evaluate(&population, shape, &fitness);
        evaluations += population.len();
        let (f, c) = champion(&population, &scores);
        if rank(&(f, &c), &(best_fit, &best)) == Ordering::Less {
            best_fit = f;
            best = c;
        }
        history.push(best_fit);
    }

    Ok(GaOutcome {
        structure: decode_unchecked(&best, shape),
        chromosome: best,
        fitness: best_fit,
        history,
        evaluations,
    })
}

fn champion(population: &[Chromosome], scores: &[f64]) -> (f64, Chromosome) {
    let (f, c) = scores
        .iter()
        .copied()
        .zip(population)
        .min_by(rank)
        .expect("population is non-empty");
    (f, c.clone())
}

fn select(selection: Selection, scores: &[f64], rng: &mut ChaCha8Rng) -> usize {
    match selection {
        Selection::Tournament { k } => {
            let mut winner = rng.random_range(0..scores.len());
            for _ in 1..k {
                let i = rng.random_range(0..scores.len());
                if scores[i] > scores[winner] || (scores[i] == scores[winner] && i < winner) {
                    winner = i;
                }
            }
            winner
        }
        Selection::Roulette => {
            let total: f64 = scores.iter().map(|s| s.max(0.0)).sum();
            if total.is_nan() || total <= 0.0 {
                return rng.random_range(0..scores.len());
            }
            let mut x = rng.random::<f64>() * total;
            for (i, s) in scores.iter().enumerate() {
                x -= s.max(0.0);
                if x < 0.0 {
                    return i;
                }
            }
            scores.len() - 1
        }
    }
}

fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> Chromosome {
    let mut pick = |x: &[u8], y: &[u8]| -> Vec<u8> {
        x.iter()
            .zip(y)
            .map(|(&p, &q)| if rng.random_bool(0.5) { p } else { q })
            .collect()
    };
    Chromosome {
        responsibility: pick(&a.responsibility, &b.responsibility),
        sharing: pick(&a.sharing, &b.sharing),
    }
}

fn mutate(c: &mut Chromosome, shape: GeneShape, rate: f64, rng: &mut ChaCha8Rng) {
    if rate == 0.0 {
        return;
    }
    let mut flip = |g: &mut u8, limit: u8| {
        if limit > 1 && rng.random_bool(rate) {
            let shift = rng.random_range(1..limit);
            *g = (*g + shift) % limit;
        }
    };
    for g in &mut c.responsibility {
        flip(g, shape.agents as u8);
    }
    for g in &mut c.sharing {
        flip(g, MODE_VALUES);
    }
}

/// Responsibility per agent, sharing arcs with modes and the dependency
/// flag of every decision.
pub fn structure_report(team: &Team, structure: &InformationStructure) -> Result<String> {
    team.check_structure(structure)?;
    let decisions = team.decisions();
    let mut out = String::from("responsibility:\n");
    for (a, agent) in team.agents().iter().enumerate() {
        let owned: Vec<&str> = structure
            .owned_by(a)
            .map(|d| decisions[d].id.as_str())
            .collect();
        let owned = if owned.is_empty() {
            "-".to_string()
        } else {
            owned.join(", ")
        };
        let _ = writeln!(out, "  {}: {owned}", agent.id);
    }
    out.push_str("sharing:\n");
    if structure.sharing.is_empty() {
        out.push_str("  none\n");
    }
    for (&(d, r), mode) in &structure.sharing {
        let _ = writeln!(
            out,
            "  {}: {} -> {} [{}]",
            decisions[d].id,
            team.agents()[structure.owner(d)].id,
            team.agents()[r].id,
            mode.as_str()
        );
    }
    out.push_str("dependencies:\n");
    for (d, dec) in decisions.iter().enumerate() {
        let needs: Vec<&str> = team
            .dependencies(d)
            .iter()
            .map(|&j| decisions[j].id.as_str())
            .collect();
        let needs = if needs.is_empty() {
            "-".to_string()
        } else {
            needs.join(", ")
        };
        let flag = if dependency_satisfied(team, structure, d) {
            "met"
        } else {
            "unmet"
        };
        let _ = writeln!(out, "  {} (needs {needs}): {flag}", dec.id);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::team::tests::{arc_structure, instance, team};
    use crate::team::{Agent, Decision, DecisionForecast, DEFAULT_PULL_STALENESS};
    use crate::tradeoff::SCurve;
    use proptest::prelude::*;

    fn shape() -> GeneShape {
        GeneShape::new(4, 3).unwrap()
    }

    #[test]
    fn fire_shape_search_space() {
        assert_eq!(shape().search_space(), 81 * 6561);
        assert_eq!(GeneShape::new(1, 1).unwrap().search_space(), 1);
        assert_eq!(GeneShape::new(60, 200).unwrap().search_space(), u128::MAX);
    }

    #[test]
    fn round_trips() {
        let empty = InformationStructure::new(vec![2, 0, 1, 0]);
        assert_eq!(
            decode(&encode(&empty, shape()).unwrap(), shape()).unwrap(),
            empty
        );
        let arcs = arc_structure();
        let c = encode(&arcs, shape()).unwrap();
        assert_eq!(c.responsibility, vec![0, 1, 2, 1]);
        assert_eq!(decode(&c, shape()).unwrap(), arcs);
    }

    #[test]
    fn seeded_random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let c = random_chromosome(shape(), &mut rng);
            let s = decode(&c, shape()).unwrap();
            assert_eq!(encode(&s, shape()).unwrap(), c);
        }
    }

    #[test]
    fn decode_ignores_owner_genes_and_rejects_out_of_range() {
        let mut c = encode(&arc_structure(), shape()).unwrap();
        c.sharing[0] = GENE_PUSH;
        assert_eq!(decode(&c, shape()).unwrap(), arc_structure());
        c.sharing[5] = 3;
        assert_eq!(
            decode(&c, shape()),
            Err(Error::GeneOutOfRange {
                index: 9,
                value: 3,
                limit: 3
            })
        );
        c.sharing[5] = 0;
        c.responsibility[1] = 3;
        assert!(matches!(
            decode(&c, shape()),
            Err(Error::GeneOutOfRange { index: 1, .. })
        ));
        c.responsibility.pop();
        assert!(decode(&c, shape()).is_err());
    }

    #[test]
    fn canonical_enumeration_is_lexicographic() {
        let s = GeneShape::new(2, 3).unwrap();
        let all: Vec<Chromosome> = (0..s.search_space()).map(|i| nth_canonical(i, s)).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for c in &all {
            let mut canon = c.clone();
            canon.canonicalize(s);
            assert_eq!(&canon, c);
        }
    }

    #[test]
    fn exhaustive_refuses_oversized_space() {
        assert_eq!(
            exhaustive_search(shape(), 1000, |_| 0.0),
            Err(Error::SearchSpaceTooLarge {
                size: 531_441,
                cap: 1000
            })
        );
    }

    #[test]
    fn exhaustive_ties_pick_smallest_chromosome() {
        let s = GeneShape::new(3, 2).unwrap();
        let r = exhaustive_search(s, DEFAULT_EXHAUSTIVE_CAP, |_| 0.5).unwrap();
        assert_eq!(r.chromosome, nth_canonical(0, s));
        assert!(r.structure.sharing.is_empty());
        assert_eq!(r.evaluations, 8 * 27);
    }

    #[test]
    fn exhaustive_matches_serial_scan() {
        let inst = instance(0.2, 12);
        let small = TeamInstance::new(
            Team::new(
                inst.team().agents()[..2].to_vec(),
                inst.team().decisions()[..3].to_vec(),
            )
            .unwrap(),
            inst.forecasts()[..3].to_vec(),
            None,
            12,
            DEFAULT_PULL_STALENESS,
        )
        .unwrap();
        let s = GeneShape::of(small.team()).unwrap();
        let mut best: Option<(f64, Chromosome)> = None;
        for i in 0..s.search_space() {
            let c = nth_canonical(i, s);
            let f = small.score(&decode(&c, s).unwrap());
            if best.as_ref().is_none_or(|(b, _)| f > *b) {
                best = Some((f, c));
            }
        }
        let r = exhaustive_team(&small, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let (f, c) = best.unwrap();
        assert_eq!(r.fitness, f);
        assert_eq!(r.chromosome, c);
    }

    fn agent(id: &str, w: f64) -> Agent {
        Agent {
            id: id.into(),
            pressure_curve: SCurve::new(3.0, 0.8).unwrap(),
            interaction_load_weight: w,
        }
    }

    #[test]
    fn lone_agent_without_dependencies_shares_nothing() {
        let t = Team::new(
            vec![agent("solo", 0.3)],
            vec![
                Decision {
                    id: "A".into(),
                    dependencies: vec![],
                },
                Decision {
                    id: "B".into(),
                    dependencies: vec![],
                },
            ],
        )
        .unwrap();
        let inst = TeamInstance::new(
            t,
            vec![DecisionForecast::constant(1.0, 0.9, 3, 6); 2],
            None,
            6,
            0.95,
        )
        .unwrap();
        let r = exhaustive_team(&inst, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert!(r.structure.sharing.is_empty());
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn optimum_uses_an_edge_when_required() {
        // sharing one owner costs as much as one push, but the split leaves
        // the prerequisite's owner unloaded
        let t = Team::new(
            vec![agent("p", 0.5), agent("q", 0.5)],
            vec![
                Decision {
                    id: "A".into(),
                    dependencies: vec!["B".into()],
                },
                Decision {
                    id: "B".into(),
                    dependencies: vec![],
                },
            ],
        )
        .unwrap();
        let inst = TeamInstance::new(
            t,
            vec![DecisionForecast::constant(0.5, 0.9, 3, 6); 2],
            None,
            6,
            0.95,
        )
        .unwrap();
        let r = exhaustive_team(&inst, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert_ne!(r.structure.owner(0), r.structure.owner(1));
        assert_eq!(
            r.structure.edge(1, r.structure.owner(0)),
            Some(SharingMode::Push)
        );
        assert!(dependency_satisfied(inst.team(), &r.structure, 0));
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaConfig {
                population: 1,
                elitism: 0,
                ..ok
            },
            GaConfig { elitism: 0, ..ok },
            GaConfig { elitism: 60, ..ok },
            GaConfig {
                mutation_rate: 1.5,
                ..ok
            },
            GaConfig {
                crossover_rate: -0.1,
                ..ok
            },
            GaConfig {
                selection: Selection::Tournament { k: 0 },
                ..ok
            },
            GaConfig {
                selection: Selection::Tournament { k: 61 },
                ..ok
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn identical_population_without_mutation_is_constant() {
        let inst = instance(0.2, 12);
        let config = GaConfig {
            population: 10,
            generations: 15,
            mutation_rate: 0.0,
            ..GaConfig::default()
        };
        let seed = encode(&arc_structure(), shape()).unwrap();
        let r =
            ga_optimize_from(&config, shape(), vec![seed.clone(); 10], |s| inst.score(s)).unwrap();
        assert_eq!(r.history.len(), 16);
        assert!(r.history.iter().all(|&h| h == r.history[0]));
        assert_eq!(r.chromosome, seed);
    }

    #[test]
    fn ga_is_seed_reproducible_and_monotone() {
        let inst = instance(0.2, 12);
        let config = GaConfig {
            generations: 30,
            seed: 11,
            ..GaConfig::default()
        };
        let a = optimize_team(&inst, &config).unwrap();
        let b = optimize_team(&inst, &config).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.fitness, *a.history.last().unwrap());
        assert_eq!(inst.score(&a.structure), a.fitness);
        assert_eq!(a.evaluations, 60 * 31);
        let roulette = GaConfig {
            selection: Selection::Roulette,
            ..config
        };
        let r = optimize_team(&inst, &roulette).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ga_median_of_five_seeds_reaches_oracle() {
        let inst = instance(0.2, 12);
        let oracle = exhaustive_team(&inst, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let mut best: Vec<f64> = (0..5)
            .map(|seed| {
                optimize_team(
                    &inst,
                    &GaConfig {
                        seed,
                        ..GaConfig::default()
                    },
                )
                .unwrap()
                .fitness
            })
            .collect();
        best.sort_by(f64::total_cmp);
        assert!(
            best[2] >= 0.99 * oracle.fitness,
            "median {} oracle {}",
            best[2],
            oracle.fitness
        );
        assert!(best[4] <= oracle.fitness);
    }

    #[test]
    fn report_lists_arcs_and_flags() {
        let t = team(0.1);
        let empty = structure_report(&t, &InformationStructure::new(vec![0, 1, 2, 1])).unwrap();
        assert!(empty.contains("sharing:\n  none\n"));
        assert!(!empty.contains("->"));
        assert!(empty.contains("U1 (needs U2, U3): unmet"));
        let arcs = structure_report(&t, &arc_structure()).unwrap();
        assert!(arcs.contains("  scout: U2, U4\n"));
        assert!(arcs.contains("  U3: robot -> foreman [pull]\n"));
        assert!(arcs.contains("  U1: foreman -> robot [push]\n"));
        assert_eq!(arcs.matches("->").count(), 5);
        assert!(!arcs.contains("unmet"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn decode_encode_identity(
            resp in proptest::collection::vec(0u8..3, 4),
            genes in proptest::collection::vec(0u8..3, 12),
        ) {
            let mut c = Chromosome { responsibility: resp, sharing: genes };
            let s = decode(&c, shape()).unwrap();
            prop_assert!(team(0.1).check_structure(&s).is_ok());
            c.canonicalize(shape());
            prop_assert_eq!(encode(&s, shape()).unwrap(), c);
        }
    }
}
