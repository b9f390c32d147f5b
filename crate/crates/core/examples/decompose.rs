//! Cuts edges of a small utility graph and prints the resulting zones with
//! their firewall and ACL counts.

use zonecut::fitness::{count_acls, count_firewalls};
use zonecut::topology::{decompose, Chromosome, Node, NodeKind, SubstationProfile, UtilityGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sub = |id: &str| Node { id: id.into(), kind: NodeKind::Substation, profile: Some(SubstationProfile::new(2, 1, 1, 1)) };
    let nodes = vec![Node { id: "UCC-7".into(), kind: NodeKind::Ucc, profile: None }, sub("A"), sub("B"), sub("C"), sub("D")];
    let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
    let edges = [pair("UCC-7", "A"), pair("UCC-7", "B"), pair("UCC-7", "D"), pair("B", "D"), pair("B", "C")];
    let graph = UtilityGraph::new("U7", nodes, &edges)?;

    println!("edge order:");
    for (i, (a, b)) in graph.edge_pairs().iter().enumerate() {
        println!("  bit {i}: {a} - {b}");
    }
    for bits in ["00000", "00010", "11011", "11111"] {
        let c = Chromosome::parse(bits).ok_or("bad bit string")?;
        let zones = decompose(&graph, &c)?;
        println!(
            "{bits}: zones {:?}  F1={} F2={}",
            zones.member_ids(&graph),
            count_firewalls(&zones)?,
            count_acls(&zones)?
        );
    }
    Ok(())
}
