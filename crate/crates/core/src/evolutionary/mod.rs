//! Binary-encoded evolutionary engines: a single-objective GA with elitist
//! reservation and an NSGA-II style Pareto optimiser.
//!
//! A single seeded [`EaRng`] drives every stochastic decision. Per
//! generation the draws happen in this order: parent tournaments, the
//! crossover coin, uniform-crossover bits, per-bit mutation, then the
//! problem's repair hook, offspring by offspring. Fitness evaluation of a
//! generation runs in parallel afterwards and consumes no randomness, so
//! thread count never changes a result.

mod ga;
mod nsga2;
mod sorting;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ga::{ga_elitist, GaResult, GaTraceEntry, SingleObjective};
pub use nsga2::{nsga2, GenerationSnapshot, MultiObjective, Nsga2Result};
pub use sorting::{
    constraint_dominates, crowding_distance, fast_nondominated_sort, pareto_dominates,
    sort_by_relation,
};

use crate::error::{Error, Result};

/// Random stream shared by initialisation, selection and variation.
pub type EaRng = ChaCha8Rng;

/// Site-selection bitstring; `true` marks a selected candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome(pub Vec<bool>);

impl Chromosome {
    pub fn zeros(n: usize) -> Self {
        Chromosome(vec![false; n])
    }

    pub fn from_selected(n: usize, selected: &[usize]) -> Self {
        let mut c = Self::zeros(n);
        for &s in selected {
            c.0[s] = true;
        }
        c
    }

    pub fn random(n: usize, density: f64, rng: &mut EaRng) -> Self {
        Chromosome((0..n).map(|_| rng.gen::<f64>() < density).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-bit flip probability.
    pub mutation_prob: f64,
    /// Individuals carried unchanged into the next generation (GA only).
    pub elitism: usize,
    pub seed: u64,
    /// Probability of a set bit in the initial population.
    pub init_density: f64,
}

impl Default for EaParams {
    fn default() -> Self {
        EaParams {
            population: 300,
            generations: 500,
            crossover_prob: 0.9,
            mutation_prob: 0.005,
            elitism: 2,
            seed: 0,
            init_density: 0.5,
        }
    }
}

impl EaParams {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("crossover probability", self.crossover_prob)?;
        prob("mutation probability", self.mutation_prob)?;
        prob("initial density", self.init_density)?;
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if self.elitism > self.population {
            return Err(Error::Config("elitism cannot exceed the population size".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EaParams { seed, ..self.clone() }
    }
}

/// A chromosome with its objective values and total constraint violation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedIndividual {
    pub chromosome: Chromosome,
    pub objectives: Vec<f64>,
    /// Sum of per-constraint excesses; zero means feasible.
    pub violation: f64,
}

impl EvaluatedIndividual {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

pub(crate) fn uniform_crossover(a: &Chromosome, b: &Chromosome, rng: &mut EaRng) -> (Chromosome, Chromosome) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for i in 0..a.len() {
        if rng.gen::<bool>() {
            c1.0[i] = b.0[i];
            c2.0[i] = a.0[i];
        }
    }
    (c1, c2)
}

pub(crate) fn bit_flip(c: &mut Chromosome, pm: f64, rng: &mut EaRng) {
    if pm == 0.0 {
        return;
    }
    for bit in c.0.iter_mut() {
        if rng.gen::<f64>() < pm {
            *bit = !*bit;
        }
    }
}
