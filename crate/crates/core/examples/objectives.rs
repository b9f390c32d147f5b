//! Evaluates all four objectives and the constraints for a few chromosomes
//! of the bundled 37-substation utility.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonecut::fitness::{evaluate, ConstraintParams, LodfView};
use zonecut::grid::Weights;
use zonecut::system::load_topology;
use zonecut::topology::Chromosome;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = load_topology(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example37.json"))?;
    let graph = &system.utilities[0];
    let view = LodfView::new(graph, &system.lodf()?);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>8} {:>5} {:>5} {:>8} {:>8} {:>6}", "density", "F1", "F2", "F3", "F4", "g");
    for density in [0.0, 0.7, 0.85, 0.95, 1.0] {
        let c = Chromosome::from_bits((0..graph.edge_count()).map(|_| rng.gen_bool(density)).collect());
        let e = evaluate(graph, &c, &Weights::default(), &view, &ConstraintParams::default())?;
        println!(
            "{density:>8} {:>5} {:>5} {:>8.3} {:>8.3} {:>6}",
            e.objectives.f1, e.objectives.f2, e.objectives.f3, e.objectives.f4, e.violation.total
        );
    }
    Ok(())
}
