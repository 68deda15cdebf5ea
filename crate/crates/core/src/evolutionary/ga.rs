use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::{bit_flip, uniform_crossover, Chromosome, EaParams, EaRng, EvaluatedIndividual};
use crate::error::Result;

/// A maximisation problem over bitstrings.
pub trait SingleObjective: Sync {
    fn n_bits(&self) -> usize;

    /// Fitness to maximise and total constraint violation.
    fn evaluate(&self, chromosome: &Chromosome) -> (f64, f64);

    /// Restores structural constraints after variation. Must draw only from
    /// `rng` so runs stay reproducible.
    fn repair(&self, _chromosome: &mut Chromosome, _rng: &mut EaRng) {}
}

/// Elite individual of one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaTraceEntry {
    pub generation: usize,
    pub fitness: f64,
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub struct GaResult {
    /// Best individual found. `objectives[0]` holds its fitness.
    pub best: EvaluatedIndividual,
    pub feasible: bool,
    pub trace: Vec<GaTraceEntry>,
}

/// Ordering with the better individual first: feasible before infeasible,
/// smaller violation among infeasible, larger fitness among feasible.
fn better_first(a: &EvaluatedIndividual, b: &EvaluatedIndividual) -> Ordering {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.violation.total_cmp(&b.violation),
        (true, true) => b.objectives[0].total_cmp(&a.objectives[0]),
    }
}

fn evaluate_all<P: SingleObjective>(problem: &P, chromosomes: Vec<Chromosome>) -> Vec<EvaluatedIndividual> {
    chromosomes
        .into_par_iter()
        .map(|c| {
            let (fitness, violation) = problem.evaluate(&c);
            EvaluatedIndividual { chromosome: c, objectives: vec![fitness], violation }
        })
        .collect()
}

fn tournament<'a>(pop: &'a [EvaluatedIndividual], rng: &mut EaRng) -> &'a EvaluatedIndividual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if better_first(b, a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Generational GA with elitist reservation: the best `params.elitism`
/// individuals survive unchanged, the rest of each generation is bred by
/// binary tournament, uniform crossover, bit-flip mutation and repair.
pub fn ga_elitist<P: SingleObjective>(problem: &P, params: &EaParams) -> Result<GaResult> {
    params.validate()?;
    let n = problem.n_bits();
    let mut rng = EaRng::seed_from_u64(params.seed);

    let initial: Vec<Chromosome> = (0..params.population)
        .map(|_| {
            let mut c = Chromosome::random(n, params.init_density, &mut rng);
            problem.repair(&mut c, &mut rng);
            c
        })
        .collect();
    let mut pop = evaluate_all(problem, initial);
    pop.sort_by(better_first);

    let record = |generation: usize, pop: &[EvaluatedIndividual]| GaTraceEntry {
        generation,
        fitness: pop[0].objectives[0],
        violation: pop[0].violation,
    };
    let mut trace = vec![record(0, &pop)];

    for generation in 1..=params.generations {
        let n_children = params.population - params.elitism;
        let mut children = Vec::with_capacity(n_children + 1);
        while children.len() < n_children {
            let p1 = tournament(&pop, &mut rng);
            let p2 = tournament(&pop, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < params.crossover_prob {
                uniform_crossover(&p1.chromosome, &p2.chromosome, &mut rng)
            } else {
                (p1.chromosome.clone(), p2.chromosome.clone())
            };
            for c in [&mut c1, &mut c2] {
                bit_flip(c, params.mutation_prob, &mut rng);
                problem.repair(c, &mut rng);
            }
            children.push(c1);
            if children.len() < n_children {
                children.push(c2);
            }
        }
        let mut next: Vec<EvaluatedIndividual> = pop[..params.elitism].to_vec();
        next.extend(evaluate_all(problem, children));
        next.sort_by(better_first);
        pop = next;
        trace.push(record(generation, &pop));
    }

    let best = pop.swap_remove(0);
    Ok(GaResult { feasible: best.is_feasible(), best, trace })
}
