//! Runs the genetic search on the bundled 37-substation utility and prints
//! the Pareto front.

use std::path::Path;

use zonecut::nsga2::GaParams;
use zonecut::pipeline::{optimize_system, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig {
        topology: Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example37.json")),
        ga: GaParams { seed: 42, ..GaParams::default() },
        ..RunConfig::default()
    };
    let system = config.resolve_system()?;
    let docs = optimize_system(&system, &config)?;
    let doc = &docs[0];
    println!("{}: {} solutions after {} evaluations", doc.utility, doc.solutions.len(), doc.evaluations);
    println!("{:>4} {:>5} {:>4} {:>5} {:>8} {:>8}", "k", "n_sg", "F1", "F2", "F3", "F4");
    let mut order: Vec<_> = doc.solutions.iter().collect();
    order.sort_by_key(|s| (s.n_sg, s.objectives.f1));
    for s in order {
        let o = &s.objectives;
        println!("{:>4} {:>5} {:>4} {:>5} {:>8.3} {:>8.3}", s.index, s.n_sg, o.f1, o.f2, o.f3, o.f4);
    }
    Ok(())
}
