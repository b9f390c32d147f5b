use rand::seq::index;
use rand::Rng;

use super::sort::crowded_cmp;
use super::{Individual, NsgaError};
use crate::topology::Chromosome;

/// Multi-point crossover with `k` distinct cut positions drawn without
/// replacement from `1..len`. Segments alternate between the parents.
pub fn k_point_crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    k: usize,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome), NsgaError> {
    if a.len() != b.len() {
        return Err(NsgaError::LengthMismatch);
    }
    if k == 0 || k >= a.len() {
        return Err(NsgaError::CrossoverPoints { k, len: a.len() });
    }
    let mut cuts: Vec<usize> = index::sample(rng, a.len() - 1, k).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    Ok(crossover_at(a, b, &cuts))
}

/// Crossover at explicit sorted cut positions; a cut at `p` swaps the
/// source parent starting with bit `p`.
pub fn crossover_at(a: &Chromosome, b: &Chromosome, cuts: &[usize]) -> (Chromosome, Chromosome) {
    let mut c1 = Vec::with_capacity(a.len());
    let mut c2 = Vec::with_capacity(a.len());
    let mut swapped = false;
    let mut next = cuts.iter().peekable();
    for i in 0..a.len() {
        while next.peek().is_some_and(|&&c| c == i) {
            swapped = !swapped;
            next.next();
        }
        let (x, y) = if swapped { (b.get(i), a.get(i)) } else { (a.get(i), b.get(i)) };
        c1.push(x);
        c2.push(y);
    }
    (Chromosome::from_bits(c1), Chromosome::from_bits(c2))
}

/// Flips each bit independently with probability `p`.
pub fn bitflip_mutation<R: Rng + ?Sized>(c: &Chromosome, p: f64, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    for bit in out.bits_mut() {
        if rng.gen_bool(p) {
            *bit = !*bit;
        }
    }
    out
}

/// Size-2 tournament on (rank, crowding); returns the winner's index.
pub fn binary_tournament<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    let i = rng.gen_range(0..population.len());
    let j = rng.gen_range(0..population.len());
    if crowded_cmp(&population[j], &population[i]).is_lt() {
        j
    } else {
        i
    }
}
