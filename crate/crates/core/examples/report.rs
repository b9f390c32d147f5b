//! Optimizes a ten-utility synthetic system and prints the baseline
//! comparison plus the distribution of cluster counts.

use zonecut::nsga2::GaParams;
use zonecut::pipeline::{optimize_system, RunConfig};
use zonecut::reporting::{compare_baselines, histogram, Dimension, Picker, RunSummary};
use zonecut::system::{SynthSpec, TopologyShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig {
        synth: Some(SynthSpec { utilities: 10, subs: 15, topology: TopologyShape::Hybrid, edge_prob: 0.15, seed: 7 }),
        ga: GaParams { max_generations: 60, ..GaParams::default() },
        ..RunConfig::default()
    };
    let system = config.resolve_system()?;
    let docs = optimize_system(&system, &config)?;
    let c = compare_baselines(&system.utilities, &docs, &Picker::MinCost)?;
    println!("{}", serde_json::to_string_pretty(&c)?);

    let runs: Vec<RunSummary> = docs.iter().map(RunSummary::from_result).collect();
    let n_sg = Dimension::NSg.values(&runs);
    let h = histogram(&n_sg, &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0])?;
    for (w, n) in h.edges.windows(2).zip(&h.counts) {
        println!("n_sg in [{:>2}, {:>2}): {n:>4}", w[0], w[1]);
    }
    println!("outside range: {}", h.underflow + h.overflow);
    Ok(())
}
