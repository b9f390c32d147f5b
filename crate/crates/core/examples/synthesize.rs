//! Generates a seeded synthetic system and prints its topology document.
//!
//! ```text
//! cargo run -p zonecut --example synthesize -- [utilities] [subs] [star|hybrid] [edge_prob] [seed]
//! ```

use zonecut::system::{synth_system, topology_to_json, SynthSpec, TopologyShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let spec = SynthSpec {
        utilities: arg(0, "1").parse()?,
        subs: arg(1, "37").parse()?,
        topology: match arg(2, "hybrid").as_str() {
            "star" => TopologyShape::Star,
            _ => TopologyShape::Hybrid,
        },
        edge_prob: arg(3, "0.15").parse()?,
        seed: arg(4, "1").parse()?,
    };
    let system = synth_system(&spec)?;
    let g = &system.utilities[0];
    eprintln!(
        "{} utilities, first has {} nodes and {} edges; grid has {} lines",
        system.utilities.len(),
        g.node_count(),
        g.edge_count(),
        system.grid.lines().len()
    );
    print!("{}", topology_to_json(&system));
    Ok(())
}
