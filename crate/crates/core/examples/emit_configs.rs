//! Optimizes a small star utility, emits firewall configurations for the
//! cheapest solution and prints the audit and one rendered device.

use zonecut::fitness::{ConstraintParams, Objective};
use zonecut::fwgen::FlowTable;
use zonecut::nsga2::GaParams;
use zonecut::pipeline::{emit_solution, optimize_system, RunConfig};
use zonecut::reporting::Picker;
use zonecut::system::{SynthSpec, TopologyShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig {
        synth: Some(SynthSpec { utilities: 1, subs: 4, topology: TopologyShape::Star, edge_prob: 0.0, seed: 1 }),
        ga: GaParams { population_size: 50, max_generations: 30, ..GaParams::default() },
        objectives: vec![Objective::F1, Objective::F2],
        constraints: ConstraintParams::new(1, 40, 1)?,
        ..RunConfig::default()
    };
    let docs = optimize_system(&config.resolve_system()?, &config)?;
    let out = emit_solution(&docs[0], &Picker::MinCost, &FlowTable::builtin())?;
    println!("{}", serde_json::to_string_pretty(&out.manifest)?);
    println!("{}", serde_json::to_string_pretty(&out.audit)?);
    let (name, text) = &out.files[0];
    println!("--- {name}\n{text}");
    Ok(())
}
