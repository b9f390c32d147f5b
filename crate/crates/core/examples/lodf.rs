//! DC line outage distribution factors of a four-bus loop with a radial spur.

use zonecut::grid::{compute_lodf, nlodf, Bus, GridModel, Line};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bus = |id: &str, slack| Bus { id: id.into(), slack };
    let line = |id: &str, from: &str, to: &str, x| Line {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        x: Some(x),
        from_sub: format!("S_{from}"),
        to_sub: format!("S_{to}"),
    };
    let grid = GridModel::new(
        vec![bus("1", true), bus("2", false), bus("3", false), bus("4", false), bus("5", false)],
        vec![
            line("L12", "1", "2", 0.1),
            line("L23", "2", "3", 0.2),
            line("L34", "3", "4", 0.1),
            line("L41", "4", "1", 0.25),
            line("L45", "4", "5", 0.3),
        ],
    )?;
    let table = compute_lodf(&grid)?;
    print!("{:>6}", "");
    for id in table.line_ids() {
        print!("{id:>8}");
    }
    println!();
    for (l, id) in table.line_ids().iter().enumerate() {
        print!("{id:>6}");
        for k in 0..table.len() {
            match table.get(l, k) {
                Some(v) => print!("{v:>8.3}"),
                None => print!("{:>8}", "-"),
            }
        }
        println!();
    }
    println!("islanding outages: {:?}", table.islanding_lines());
    println!("NLODF of all factors: {:.4}", nlodf(&table.all_factors())?);
    Ok(())
}
