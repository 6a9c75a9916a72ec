//! Experiment commands.
//!
//! Every command validates the scenario, computes all outputs in memory and
//! only then creates the output directory, writes the files and writes the
//! manifest last. A failed run leaves no partial output behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cascade_core::dyad::stability_region_sweep;
use cascade_core::netsim::{
    collapse_threshold, propagation_trace, simulate_network, stability_envelope,
    write_propagation_csv,
};
use cascade_core::optimize::{exhaustive_team, optimize_team, structure_report, GeneShape};
use cascade_core::team::simulate_team;
use serde::Serialize;

use crate::error::{invalid, runtime, CliError, CliResult};
use crate::manifest::{describe, timestamp, RunManifest};
use crate::scenario::{
    self, DyadScenario, Model, ModelKind, NetScenario, Scenario, StructureSpec, TeamScenario,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CASCADE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DyadSweep,
    NetSim,
    NetSweep,
    TeamSim,
    TeamOpt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DyadSweep => "dyad-sweep",
            Command::NetSim => "net-sim",
            Command::NetSweep => "net-sweep",
            Command::TeamSim => "team-sim",
            Command::TeamOpt => "team-opt",
        }
    }

    pub fn model(self) -> ModelKind {
        match self {
            Command::DyadSweep => ModelKind::Dyad,
            Command::NetSim | Command::NetSweep => ModelKind::Network,
            Command::TeamSim | Command::TeamOpt => ModelKind::Team,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
    /// Forces the exhaustive oracle in `team-opt`.
    pub exhaustive: bool,
}

/// Files produced by a command, in write order, plus a short summary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

impl Outputs {
    fn add(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub summary: String,
}

/// Loads, validates and runs one command.
pub fn run(command: Command, opts: &RunOptions) -> CliResult<RunOutcome> {
    let started_at = timestamp()?;
    let mut scenario = scenario::load(&opts.scenario)?;
    prepare(command, opts, &mut scenario)?;
    let outputs = with_workers(opts.workers, || {
        produce(command, &scenario, opts.exhaustive)
    })??;

    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", opts.out_dir.display())))?;
    let mut files = Vec::with_capacity(outputs.files.len());
    for (name, bytes) in &outputs.files {
        write(&opts.out_dir.join(name), bytes)?;
        files.push(describe(name, bytes));
    }
    let manifest = RunManifest {
        tool: "cascade".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        scenario: opts
            .scenario
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        scenario_sha256: scenario.digest.clone(),
        seed: scenario.seed,
        started_at,
        finished_at: timestamp()?,
        files,
    };
    let manifest_path = opts.out_dir.join(format!(
        "{}_{}_manifest.json",
        scenario.prefix,
        command.name()
    ));
    write(&manifest_path, manifest.to_json().as_bytes())?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        summary: outputs.summary,
    })
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes)
        .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// Checks the command fits the scenario and applies flag overrides.
fn prepare(command: Command, opts: &RunOptions, scenario: &mut Scenario) -> CliResult<()> {
    if scenario.kind() != command.model() {
        return Err(invalid(format!(
            "`{}` needs a `{}` scenario, got `{}`",
            command.name(),
            command.model().as_str(),
            scenario.kind().as_str()
        )));
    }
    if opts.workers == Some(0) {
        return Err(invalid("--workers must be at least 1"));
    }
    if opts.exhaustive && command != Command::TeamOpt {
        return Err(invalid("--exhaustive only applies to team-opt"));
    }
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    match &mut scenario.model {
        Model::Team(t) => {
            t.ga.seed = scenario.seed;
            if command == Command::TeamSim && t.structure.is_none() {
                return Err(invalid("team-sim needs a `[structure]` section"));
            }
            if command == Command::TeamOpt && opts.exhaustive {
                let size = GeneShape::of(t.instance.team())
                    .map_err(invalid)?
                    .search_space();
                if size > t.exhaustive_cap {
                    return Err(invalid(cascade_core::Error::SearchSpaceTooLarge {
                        size,
                        cap: t.exhaustive_cap,
                    }));
                }
            }
        }
        Model::Network(n) => {
            if command == Command::NetSweep && n.root_rates.is_none() && n.envelope.is_none() {
                return Err(invalid(
                    "net-sweep needs a `[collapse]` or `[envelope]` section",
                ));
            }
        }
        Model::Dyad(_) => {}
    }
    Ok(())
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(f)),
    }
}

/// Computes the outputs of a validated scenario without touching the disk.
pub fn produce(command: Command, scenario: &Scenario, exhaustive: bool) -> CliResult<Outputs> {
    let p = scenario.prefix.as_str();
    match (&scenario.model, command) {
        (Model::Dyad(d), Command::DyadSweep) => run_dyad_sweep(d, p),
        (Model::Network(n), Command::NetSim) => run_net_sim(n, p),
        (Model::Network(n), Command::NetSweep) => run_net_sweep(n, p),
        (Model::Team(t), Command::TeamSim) => run_team_sim(t, p),
        (Model::Team(t), Command::TeamOpt) => run_team_opt(t, p, exhaustive),
        _ => Err(CliError::Validation(format!(
            "`{}` does not apply to a `{}` scenario",
            command.name(),
            scenario.kind().as_str()
        ))),
    }
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(runtime)?;
    Ok(buf)
}

pub fn run_dyad_sweep(d: &DyadScenario, prefix: &str) -> CliResult<Outputs> {
    let sweep =
        stability_region_sweep(d.curve, &d.gains, &d.order_rates, &d.config).map_err(runtime)?;
    let mut out = Outputs::default();
    out.add(format!("{prefix}_grid.csv"), csv(|b| sweep.write_csv(b))?);
    let stable = sweep.cells.iter().filter(|c| c.class.is_stable()).count();
    out.summary = format!(
        "{} x {} grid: {stable} stable cells\n",
        d.gains.len(),
        d.order_rates.len()
    );
    Ok(out)
}

pub fn run_net_sim(n: &NetScenario, prefix: &str) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    for t in &n.topologies {
        let run = simulate_network(&t.topology, &t.inputs, &n.config).map_err(runtime)?;
        out.add(
            format!("{prefix}_{}_series.csv", t.name),
            csv(|b| run.write_csv(&t.topology, b))?,
        );
        let _ = writeln!(
            out.summary,
            "{}: mean field error {} over the last {} steps, {}",
            t.name,
            run.mean_field_error(n.config.window),
            n.config.window,
            run.classify(&n.config)
        );
        if let Some(p) = &n.propagation {
            let deltas = propagation_trace(&t.topology, &t.inputs, p.leaf, p.stimulus, &n.config)
                .map_err(runtime)?;
            out.add(
                format!("{prefix}_{}_propagation.csv", t.name),
                csv(|b| write_propagation_csv(&deltas, b))?,
            );
            let min = deltas.iter().map(|d| d.delta).fold(f64::INFINITY, f64::min);
            let _ = writeln!(out.summary, "{}: smallest leaf delta {min}", t.name);
        }
    }
    Ok(out)
}

pub fn run_net_sweep(n: &NetScenario, prefix: &str) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    let mut summary = String::from("topology,collapse_threshold,envelope_stable_cells\n");
    for t in &n.topologies {
        let mut threshold = String::new();
        let mut cells = String::new();
        if let Some(rates) = &n.root_rates {
            let curve =
                collapse_threshold(&t.topology, &t.inputs, rates, &n.config).map_err(runtime)?;
            out.add(
                format!("{prefix}_{}_collapse.csv", t.name),
                csv(|b| curve.write_csv(b))?,
            );
            threshold = curve.threshold.map(|v| v.to_string()).unwrap_or_default();
        }
        if let Some((sums, diffs)) = &n.envelope {
            let env = stability_envelope(&t.topology, &t.inputs, sums, diffs, &n.config)
                .map_err(runtime)?;
            out.add(
                format!("{prefix}_{}_envelope.csv", t.name),
                csv(|b| env.write_csv(b))?,
            );
            cells = env.stable_count().to_string();
        }
        let _ = writeln!(summary, "{},{threshold},{cells}", t.name);
    }
    out.add(
        format!("{prefix}_summary.csv"),
        summary.clone().into_bytes(),
    );
    out.summary = summary;
    Ok(out)
}

pub fn run_team_sim(t: &TeamScenario, prefix: &str) -> CliResult<Outputs> {
    let structure = t
        .structure
        .as_ref()
        .ok_or_else(|| invalid("team-sim needs a `[structure]` section"))?;
    let team = t.instance.team();
    let result = simulate_team(&t.instance, structure).map_err(runtime)?;
    let mut out = Outputs::default();
    out.add(
        format!("{prefix}_accuracy.csv"),
        csv(|b| result.write_csv(team, b))?,
    );
    out.add(
        format!("{prefix}_load.csv"),
        csv(|b| result.write_load_csv(team, b))?,
    );
    let report = structure_report(team, structure).map_err(runtime)?;
    out.add(
        format!("{prefix}_report.txt"),
        format!("fitness: {}\n{report}", result.fitness).into_bytes(),
    );
    out.summary = format!("fitness {}\n", result.fitness);
    Ok(out)
}

#[derive(Serialize)]
struct BestFile<'a> {
    structure: &'a StructureSpec,
}

pub fn run_team_opt(t: &TeamScenario, prefix: &str, exhaustive: bool) -> CliResult<Outputs> {
    let team = t.instance.team();
    let mut out = Outputs::default();
    let (structure, fitness, method) = if exhaustive {
        let r = exhaustive_team(&t.instance, t.exhaustive_cap).map_err(runtime)?;
        let method = format!("exhaustive search ({} structures)", r.evaluations);
        (r.structure, r.fitness, method)
    } else {
        let r = optimize_team(&t.instance, &t.ga).map_err(runtime)?;
        let mut history = String::from("generation,best_fitness\n");
        for (g, f) in r.history.iter().enumerate() {
            let _ = writeln!(history, "{g},{f}");
        }
        out.add(format!("{prefix}_history.csv"), history.into_bytes());
        let method = format!(
            "genetic algorithm (seed {}, {} generations, {} evaluations)",
            t.ga.seed, t.ga.generations, r.evaluations
        );
        (r.structure, r.fitness, method)
    };
    let spec = StructureSpec::from_structure(team, &structure);
    let body = toml::to_string(&BestFile { structure: &spec }).map_err(runtime)?;
    out.add(
        format!("{prefix}_best.toml"),
        format!("# method: {method}\n# fitness: {fitness}\n{body}").into_bytes(),
    );
    let report = structure_report(team, &structure).map_err(runtime)?;
    out.add(
        format!("{prefix}_report.txt"),
        format!("method: {method}\nfitness: {fitness}\n{report}").into_bytes(),
    );
    out.summary = format!("{method}: fitness {fitness}\n");
    Ok(out)
}

/// `--out` when given, else the environment variable, else `out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}
