use std::cmp::Ordering;

use super::{Individual, NsgaError};

/// Pareto dominance for minimization: no objective worse, at least one better.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            better = true;
        }
    }
    better
}

/// Feasible beats infeasible; among infeasible, smaller total violation wins;
/// among feasible, plain Pareto dominance.
pub fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

/// Fast non-dominated sort under constrained domination. Returns fronts as
/// index lists, best first, each in ascending index order.
pub fn non_dominated_sort(population: &[Individual]) -> Result<Vec<Vec<usize>>, NsgaError> {
    if population.is_empty() {
        return Err(NsgaError::EmptyPopulation);
    }
    let dim = population[0].objectives.len();
    if population.iter().any(|p| p.objectives.len() != dim) {
        return Err(NsgaError::DimensionMismatch);
    }
    let n = population.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&population[i], &population[j]) {
                dominated[i].push(j);
                counts[j] += 1;
            } else if constrained_dominates(&population[j], &population[i]) {
                dominated[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Crowding distance of each member of `front` (objective vectors).
///
/// Fronts of one or two members are all boundary. Otherwise, per objective
/// with a non-zero range, members are ordered by value (ties by position)
/// and the two extremes get `f64::INFINITY` while interior members add the
/// normalized gap between their neighbors.
pub fn crowding_distance(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dim = front[0].len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..dim {
        order.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]).then(a.cmp(&b)));
        let lo = front[order[0]][m];
        let hi = front[order[n - 1]][m];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let i = order[w];
            if distance[i].is_finite() {
                distance[i] += (front[order[w + 1]][m] - front[order[w - 1]][m]) / range;
            }
        }
    }
    distance
}

/// Ordering used for tournaments and truncation: lower rank, then larger
/// crowding, then lexicographically smaller chromosome.
pub fn crowded_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
        .then_with(|| a.chromosome.cmp(&b.chromosome))
}
