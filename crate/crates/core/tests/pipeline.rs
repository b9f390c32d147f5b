use std::fs;
use std::path::PathBuf;

use zonecut::fitness::{ConstraintParams, Objective};
use zonecut::fwgen::FlowTable;
use zonecut::nsga2::GaParams;
use zonecut::pipeline::{emit_solution, optimize_system, read_result, write_emit, write_results, RunConfig};
use zonecut::reporting::{compare_baselines, histogram, write_report, Dimension, Picker, Report, RunSummary};
use zonecut::system::{load_topology, load_topology_str, synth_system, topology_to_json, SynthSpec, TopologyShape};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/example37.json")
}

fn quick(ga_seed: u64) -> GaParams {
    GaParams { population_size: 50, max_generations: 25, seed: ga_seed, ..GaParams::default() }
}

#[test]
fn fixture_end_to_end() {
    let config = RunConfig { topology: Some(fixture()), ga: quick(1), ..RunConfig::default() };
    let system = config.resolve_system().unwrap();
    assert_eq!(system.utilities.len(), 1);
    assert_eq!(system.utilities[0].substations().count(), 37);

    let docs = optimize_system(&system, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_results(dir.path(), &docs).unwrap();
    let back = read_result(&paths[0]).unwrap();
    assert_eq!(back, docs[0]);
    assert!(back.feasible);
    assert!(back.solutions.iter().all(|s| s.violation.is_feasible()));

    for picker in [Picker::Knee, Picker::MinCost, Picker::MaxResilience, Picker::Index(0)] {
        let out = emit_solution(&back, &picker, &FlowTable::builtin()).unwrap();
        assert!(out.audit.clean, "{picker}: {:?}", out.audit);
        let s = &back.solutions[out.manifest.solution];
        assert_eq!(out.files.len() as u32, s.objectives.f1 + 1);
        let lines: usize = out.files.iter().map(|(_, t)| t.lines().filter(|l| l.starts_with("access-list")).count()).sum();
        assert_eq!(lines as u32, s.objectives.f2);
    }
    let out = emit_solution(&back, &Picker::Knee, &FlowTable::builtin()).unwrap();
    let emit_dir = dir.path().join("configs");
    write_emit(&emit_dir, &out).unwrap();
    assert!(emit_dir.join("manifest.json").exists());
    assert!(emit_dir.join("audit.json").exists());
    for d in &out.manifest.devices {
        assert!(emit_dir.join(&d.file).exists());
    }

    let report = Report::from_results(&docs, &Picker::MinCost).unwrap();
    write_report(dir.path(), &report).unwrap();
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + docs[0].solutions.len());
    let json: Report = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json, report);
    assert!(dir.path().join("baselines.json").exists());
}

#[test]
fn star_baseline_cases() {
    // a hybrid with no extra edges is a star
    let star = SynthSpec { utilities: 2, subs: 6, topology: TopologyShape::Star, edge_prob: 0.0, seed: 4 };
    let hybrid = SynthSpec { topology: TopologyShape::Hybrid, ..star.clone() };
    let config = RunConfig { synth: Some(hybrid), ga: quick(2), ..RunConfig::default() };
    let system = config.resolve_system().unwrap();
    let docs = optimize_system(&system, &config).unwrap();
    let c = compare_baselines(&system.utilities, &docs, &Picker::MinCost).unwrap();
    assert_eq!((c.star_f1, c.star_f2), (c.hybrid_unclustered_f1, c.hybrid_unclustered_f2));
    assert_eq!((c.star_f1, c.star_f2), (12, 106));
    assert!(compare_baselines(&system.utilities, &docs[..1], &Picker::MinCost).is_err());

    // on a star UCC+4 every feasible clustering costs (4, 37)
    let star4 = SynthSpec { utilities: 1, subs: 4, topology: TopologyShape::Star, edge_prob: 0.0, seed: 0 };
    let config = RunConfig {
        synth: Some(star4),
        ga: quick(3),
        objectives: vec![Objective::F1, Objective::F2],
        constraints: ConstraintParams::new(1, 40, 1).unwrap(),
        ..RunConfig::default()
    };
    let system = config.resolve_system().unwrap();
    let docs = optimize_system(&system, &config).unwrap();
    let c = compare_baselines(&system.utilities, &docs, &Picker::MinCost).unwrap();
    assert_eq!((c.clustered_f1, c.clustered_f2), (c.star_f1, c.star_f2));
    assert_eq!(c.f1_reduction_vs_star_pct, 0.0);
    assert_eq!(c.f2_reduction_vs_star_pct, 0.0);
}

#[test]
fn graph_size_histogram_matches_hand_tally() {
    let spec = SynthSpec { utilities: 10, subs: 5, topology: TopologyShape::Hybrid, edge_prob: 0.3, seed: 9 };
    let system = synth_system(&spec).unwrap();
    let edges: Vec<f64> = system.utilities.iter().map(|g| g.edge_count() as f64).collect();
    let bins = [0.0, 7.0, 9.0, 11.0, 20.0];
    let h = histogram(&edges, &bins).unwrap();
    let mut tally = [0usize; 4];
    for &e in &edges {
        let i = bins.windows(2).position(|w| w[0] <= e && e < w[1]).unwrap();
        tally[i] += 1;
    }
    assert_eq!(h.counts, tally);
}

#[test]
fn summaries_expose_all_dimensions() {
    let config = RunConfig {
        synth: Some(SynthSpec { utilities: 2, subs: 8, topology: TopologyShape::Hybrid, edge_prob: 0.2, seed: 1 }),
        ga: quick(4),
        record_timing: true,
        ..RunConfig::default()
    };
    let docs = optimize_system(&config.resolve_system().unwrap(), &config).unwrap();
    let runs: Vec<RunSummary> = docs.iter().map(RunSummary::from_result).collect();
    let solutions: usize = runs.iter().map(|r| r.solutions.len()).sum();
    for d in Dimension::ALL {
        let expected = match d {
            Dimension::GraphSize | Dimension::ComputationTime | Dimension::SolutionCount => 2,
            _ => solutions,
        };
        assert_eq!(d.values(&runs).len(), expected, "{d:?}");
    }
}

#[test]
fn topology_documents_round_trip_and_reject_bad_input() {
    let system = load_topology(&fixture()).unwrap();
    let text = topology_to_json(&system);
    assert_eq!(text, fs::read_to_string(fixture()).unwrap());
    assert_eq!(load_topology_str(&text).unwrap(), system);
    assert!(load_topology_str("{\"utilities\": 3}").is_err());
    let broken = text.replacen("\"kind\": \"UCC\"", "\"kind\": \"Substation\"", 1);
    assert!(load_topology_str(&broken).is_err());
}
