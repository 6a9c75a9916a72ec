//! End-to-end use of the public API across modules.

use approx::assert_relative_eq;
use cascade_core::dyad::{stability_region_sweep, DyadModel, DyadState, SweepConfig};
use cascade_core::netsim::{
    collapse_threshold, simulate_network, BrokerNode, IntermediateNode, NetConfig, NetInputs,
    RedistributionMode, Topology,
};
use cascade_core::optimize::{exhaustive_team, optimize_team, GaConfig};
use cascade_core::team::{
    dependency_satisfied, simulate_team, Agent, Decision, DecisionForecast, InformationStructure,
    SharingMode, Team, TeamInstance,
};
use cascade_core::{SCurve, Schedule, Stability};

fn curve() -> SCurve {
    SCurve::new(10.0, 2.0).unwrap()
}

#[test]
fn dyad_from_rest_settles_on_the_operating_equilibrium() {
    let model = DyadModel::new(curve(), 0.5).unwrap();
    let run = model
        .simulate(&Schedule::Constant(3.0), DyadState::REST, 400)
        .unwrap();
    let eq = model.operating_equilibrium(3.0).unwrap().unwrap();
    assert_relative_eq!(run.last().commands, eq.commands, max_relative = 1e-9);
    assert_eq!(model.linearized_stability(3.0).unwrap(), Stability::Stable);

    let sweep = stability_region_sweep(curve(), &[0.5], &[3.0], &SweepConfig::default()).unwrap();
    assert_relative_eq!(
        sweep.cell(0, 0).commands.unwrap(),
        eq.commands,
        max_relative = 1e-12
    );
}

#[test]
fn broker_star_collapses_later_than_a_matched_hierarchy() {
    let node = IntermediateNode::new(curve(), 1.0).unwrap();
    let broker = BrokerNode::new(curve(), RedistributionMode::Conserving).unwrap();
    let hierarchy = Topology::hierarchy(node, &[2, 2]).unwrap();
    let star = Topology::broker_star(node, broker, 4).unwrap();
    let config = NetConfig {
        horizon: 300,
        window: 50,
        ..NetConfig::default()
    };
    let rates: Vec<f64> = (1..=80).map(|i| 0.25 * i as f64).collect();
    let threshold = |t: &Topology| {
        let inputs = NetInputs::constant(0.0, t.leaves().len());
        collapse_threshold(t, &inputs, &rates, &config)
            .unwrap()
            .threshold()
            .unwrap()
    };
    let (th, tb) = (threshold(&hierarchy), threshold(&star));
    assert!(tb > th, "broker {tb} vs hierarchy {th}");

    // below both thresholds the two topologies are quiet
    let quiet = NetInputs::constant(0.5 * th, 4);
    for t in [&hierarchy, &star] {
        let run = simulate_network(t, &quiet, &config).unwrap();
        assert!(run.mean_field_error(config.window) < 0.5);
        assert_eq!(run.classify(&config), Stability::Stable);
    }
}

fn small_instance() -> TeamInstance {
    let agents = ["lead", "aide"]
        .map(|id| Agent {
            id: id.into(),
            pressure_curve: SCurve::new(2.0, 0.5).unwrap(),
            interaction_load_weight: 0.2,
        })
        .to_vec();
    let decisions = vec![
        Decision {
            id: "plan".into(),
            dependencies: vec![],
        },
        Decision {
            id: "act".into(),
            dependencies: vec!["plan".into()],
        },
        Decision {
            id: "check".into(),
            dependencies: vec!["act".into()],
        },
    ];
    let team = Team::new(agents, decisions).unwrap();
    let steps = 12;
    let forecasts = vec![
        DecisionForecast::constant(3.0, 0.9, 4, steps),
        DecisionForecast::constant(1.5, 0.9, 4, steps),
        DecisionForecast::constant(2.0, 0.95, 3, steps),
    ];
    TeamInstance::new(team, forecasts, None, steps, 0.95).unwrap()
}

#[test]
fn optimized_structure_meets_every_dependency() {
    let inst = small_instance();
    let oracle = exhaustive_team(&inst, 1_000_000).unwrap();
    for d in 0..3 {
        assert!(dependency_satisfied(inst.team(), &oracle.structure, d));
    }
    let ga = optimize_team(&inst, &GaConfig::default()).unwrap();
    assert!(ga.fitness <= oracle.fitness);
    assert!(ga.fitness >= 0.99 * oracle.fitness);
    assert_eq!(inst.score(&oracle.structure), oracle.fitness);
}

#[test]
fn a_lone_owner_needs_no_sharing() {
    let inst = small_instance();
    let solo = InformationStructure::new(vec![0, 0, 0]);
    let split = InformationStructure::new(vec![0, 1, 1]);
    let r = simulate_team(&inst, &solo).unwrap();
    assert!(r.accuracy.iter().flatten().all(|&a| a > 0.0));
    // the aide cannot see the plan, so `act` scores zero
    let r = simulate_team(&inst, &split).unwrap();
    assert!(r.accuracy[1].iter().all(|&a| a == 0.0));
    let shared = split.with_edge(0, 1, SharingMode::Push);
    let r = simulate_team(&inst, &shared).unwrap();
    assert!(r.accuracy[1].iter().all(|&a| a > 0.0));
}
