//! Constrained NSGA-II over bit-string chromosomes.
//!
//! The generation loop is sequential and owns the only random stream, so a
//! run is reproducible for a given seed no matter how many threads evaluate
//! fitness.

mod operators;
mod sort;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::Chromosome;

pub use operators::{binary_tournament, bitflip_mutation, crossover_at, k_point_crossover};
pub use sort::{constrained_dominates, crowded_cmp, crowding_distance, dominates, non_dominated_sort};

#[derive(Debug, Error, PartialEq)]
pub enum NsgaError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("individuals disagree on objective count")]
    DimensionMismatch,
    #[error("parents differ in length")]
    LengthMismatch,
    #[error("crossover needs 1 <= k < {len}, got k = {k}")]
    CrossoverPoints { k: usize, len: usize },
    #[error("decision space is empty")]
    EmptyDecisionSpace,
    #[error("invalid parameter: {0}")]
    BadParams(String),
}

/// Objective values (minimization form) and total constraint violation.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitness {
    pub objectives: Vec<f64>,
    pub violation: f64,
}

/// A minimization problem over fixed-length bit strings.
pub trait Problem: Sync {
    fn chromosome_len(&self) -> usize;
    fn objective_count(&self) -> usize;
    fn evaluate(&self, chromosome: &Chromosome) -> Fitness;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub objectives: Vec<f64>,
    pub violation: f64,
    /// 1-based front index; 0 until sorted.
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn new(chromosome: Chromosome, objectives: Vec<f64>, violation: f64) -> Self {
        Self { chromosome, objectives, violation, rank: 0, crowding: 0.0 }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

/// Per-bit flip probability: a constant, or `1 / chromosome length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MutationRate {
    Fixed(f64),
    Scaled(ScaledRate),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaledRate {
    #[serde(rename = "1/dec_var")]
    InverseLength,
}

impl MutationRate {
    pub const INVERSE_LENGTH: MutationRate = MutationRate::Scaled(ScaledRate::InverseLength);

    pub fn probability(&self, len: usize) -> f64 {
        match self {
            MutationRate::Fixed(p) => *p,
            MutationRate::Scaled(ScaledRate::InverseLength) => 1.0 / len.max(1) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population_size: usize,
    pub max_generations: usize,
    /// Offspring per generation; `None` means `population_size`.
    pub offspring_size: Option<usize>,
    pub crossover_points: usize,
    pub crossover_prob: f64,
    pub mutation_prob: MutationRate,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 150,
            max_generations: 100,
            offspring_size: None,
            crossover_points: 10,
            crossover_prob: 0.9,
            mutation_prob: MutationRate::Fixed(0.05),
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), NsgaError> {
        let bad = |m: String| Err(NsgaError::BadParams(m));
        if !(50..=200).contains(&self.population_size) {
            return bad(format!("population_size {} outside [50, 200]", self.population_size));
        }
        if let Some(o) = self.offspring_size {
            if !(10..=50).contains(&o) {
                return bad(format!("offspring_size {o} outside [10, 50]"));
            }
        }
        if !(10..=50).contains(&self.crossover_points) {
            return bad(format!("crossover_points {} outside [10, 50]", self.crossover_points));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!("crossover_prob {} outside [0, 1]", self.crossover_prob));
        }
        if let MutationRate::Fixed(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("mutation_prob {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn offspring(&self) -> usize {
        self.offspring_size.unwrap_or(self.population_size)
    }
}

/// Final non-dominated set of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoFront {
    /// Distinct rank-1 chromosomes, sorted by chromosome.
    pub members: Vec<Individual>,
    /// False when no feasible individual survived; members are then the
    /// least-violation front.
    pub feasible: bool,
    pub evaluations: usize,
    pub generations: usize,
    pub wall_time: Duration,
}

pub fn run<P: Problem>(problem: &P, params: &GaParams) -> Result<ParetoFront, NsgaError> {
    run_with_observer(problem, params, |_, _| {})
}

/// Like [`run`], calling `observer(generation, population)` after the
/// initial population and after every environmental selection.
pub fn run_with_observer<P, F>(
    problem: &P,
    params: &GaParams,
    mut observer: F,
) -> Result<ParetoFront, NsgaError>
where
    P: Problem,
    F: FnMut(usize, &[Individual]),
{
    params.validate()?;
    let len = problem.chromosome_len();
    if len == 0 {
        return Err(NsgaError::EmptyDecisionSpace);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.population_size;
    let k = params.crossover_points.min(len - 1);
    let p_mut = params.mutation_prob.probability(len);

    let initial: Vec<Chromosome> = (0..n)
        .map(|_| {
            let density = rng.gen_range(0.05..=0.5);
            Chromosome::from_bits((0..len).map(|_| rng.gen_bool(density)).collect())
        })
        .collect();
    let mut population = evaluate_all(problem, initial);
    let mut evaluations = population.len();
    population = environmental_selection(population, n)?;
    observer(0, &population);

    for generation in 1..=params.max_generations {
        let mut children = Vec::with_capacity(params.offspring());
        while children.len() < params.offspring() {
            let a = &population[binary_tournament(&population, &mut rng)].chromosome;
            let b = &population[binary_tournament(&population, &mut rng)].chromosome;
            let (c1, c2) = if k >= 1 && rng.gen_bool(params.crossover_prob) {
                k_point_crossover(a, b, k, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            children.push(bitflip_mutation(&c1, p_mut, &mut rng));
            if children.len() < params.offspring() {
                children.push(bitflip_mutation(&c2, p_mut, &mut rng));
            }
        }
        let offspring = evaluate_all(problem, children);
        evaluations += offspring.len();
        population.extend(offspring);
        population = select_distinct(population, n)?;
        observer(generation, &population);
    }

    let mut members: Vec<Individual> = population.into_iter().filter(|p| p.rank == 1).collect();
    members.sort_by(|a, b| a.chromosome.cmp(&b.chromosome));
    members.dedup_by(|a, b| a.chromosome == b.chromosome);
    let feasible = members.iter().any(Individual::is_feasible);
    let objs: Vec<&[f64]> = members.iter().map(|m| m.objectives.as_slice()).collect();
    let cd = crowding_distance(&objs);
    for (m, d) in members.iter_mut().zip(cd) {
        m.crowding = d;
    }
    Ok(ParetoFront {
        members,
        feasible,
        evaluations,
        generations: params.max_generations,
        wall_time: start.elapsed(),
    })
}

fn evaluate_all<P: Problem>(problem: &P, chromosomes: Vec<Chromosome>) -> Vec<Individual> {
    chromosomes
        .into_par_iter()
        .map(|c| {
            let f = problem.evaluate(&c);
            Individual::new(c, f.objectives, f.violation)
        })
        .collect()
}

/// Environmental selection over distinct chromosomes. Copies compete only
/// when fewer than `n` distinct chromosomes exist, and then only for the
/// remaining slots.
fn select_distinct(combined: Vec<Individual>, n: usize) -> Result<Vec<Individual>, NsgaError> {
    let mut seen = HashSet::with_capacity(combined.len());
    let (distinct, copies): (Vec<_>, Vec<_>) =
        combined.into_iter().partition(|i| seen.insert(i.chromosome.clone()));
    if distinct.len() >= n {
        return environmental_selection(distinct, n);
    }
    let missing = n - distinct.len();
    let mut kept = distinct;
    kept.extend(environmental_selection(copies, missing)?);
    // ranks and crowding must describe the population actually kept
    environmental_selection(kept, n)
}

/// Keeps `n` individuals front by front, truncating the first front that
/// does not fit by descending crowding distance. Survivors carry the rank
/// and crowding distance computed here.
pub fn environmental_selection(
    mut combined: Vec<Individual>,
    n: usize,
) -> Result<Vec<Individual>, NsgaError> {
    let fronts = non_dominated_sort(&combined)?;
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for (r, front) in fronts.iter().enumerate() {
        let objs: Vec<&[f64]> = front.iter().map(|&i| combined[i].objectives.as_slice()).collect();
        let cd = crowding_distance(&objs);
        for (&i, d) in front.iter().zip(cd) {
            combined[i].rank = r + 1;
            combined[i].crowding = d;
        }
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            let mut rest = front.clone();
            rest.sort_by(|&a, &b| crowded_cmp(&combined[a], &combined[b]));
            keep.extend(rest.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    Ok(keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two objectives: number of ones, number of zeros.
    struct OneMax(usize);

    impl Problem for OneMax {
        fn chromosome_len(&self) -> usize {
            self.0
        }
        fn objective_count(&self) -> usize {
            2
        }
        fn evaluate(&self, c: &Chromosome) -> Fitness {
            let ones = c.count_ones() as f64;
            Fitness { objectives: vec![ones, self.0 as f64 - ones], violation: 0.0 }
        }
    }

    fn params(seed: u64) -> GaParams {
        GaParams { population_size: 50, max_generations: 30, seed, ..GaParams::default() }
    }

    #[test]
    fn covers_trade_off_line() {
        let front = run(&OneMax(8), &GaParams { max_generations: 100, ..params(5) }).unwrap();
        assert!(front.feasible);
        let mut ones: Vec<usize> = front.members.iter().map(|m| m.chromosome.count_ones()).collect();
        ones.sort_unstable();
        ones.dedup();
        assert_eq!(ones, (0..=8).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run(&OneMax(12), &params(11)).unwrap();
        let b = run(&OneMax(12), &params(11)).unwrap();
        assert_eq!(a.members, b.members);
        assert_eq!(a.evaluations, b.evaluations);
        assert_eq!(a.evaluations, 50 + 30 * 50);
    }

    #[test]
    fn population_size_is_kept() {
        let p = GaParams { offspring_size: Some(10), ..params(2) };
        run_with_observer(&OneMax(6), &p, |_, pop| assert_eq!(pop.len(), 50)).unwrap();
    }

    #[test]
    fn parameter_ranges() {
        let ok = GaParams::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaParams { population_size: 10, ..ok.clone() },
            GaParams { offspring_size: Some(60), ..ok.clone() },
            GaParams { crossover_points: 5, ..ok.clone() },
            GaParams { crossover_prob: 1.2, ..ok.clone() },
            GaParams { mutation_prob: MutationRate::Fixed(-0.1), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(NsgaError::BadParams(_))));
        }
        assert_eq!(run(&OneMax(0), &ok).unwrap_err(), NsgaError::EmptyDecisionSpace);
    }

    #[test]
    fn mutation_rate_serde() {
        let fixed: MutationRate = serde_json::from_str("0.05").unwrap();
        assert_eq!(fixed, MutationRate::Fixed(0.05));
        let inv: MutationRate = serde_json::from_str("\"1/dec_var\"").unwrap();
        assert_eq!(inv, MutationRate::INVERSE_LENGTH);
        assert_eq!(inv.probability(20), 0.05);
    }
}
