use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::sorting::{constraint_dominates, crowding_distance, sort_by_relation};
use super::{bit_flip, uniform_crossover, Chromosome, EaParams, EaRng, EvaluatedIndividual};
use crate::error::Result;
use crate::metrics::ParetoArchive;

/// A minimisation problem with several objectives over bitstrings.
pub trait MultiObjective: Sync {
    fn n_bits(&self) -> usize;

    fn n_objectives(&self) -> usize;

    /// Objective vector (all minimised) and total constraint violation.
    fn evaluate(&self, chromosome: &Chromosome) -> (Vec<f64>, f64);

    fn repair(&self, _chromosome: &mut Chromosome, _rng: &mut EaRng) {}
}

/// State of the run after one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSnapshot {
    pub generation: usize,
    /// Objective vectors of the feasible elitist archive.
    pub archive: Vec<Vec<f64>>,
    /// Size of the population's first front.
    pub first_front: usize,
    /// Number of survivors carried into the next generation.
    pub survivors: usize,
}

#[derive(Debug, Clone)]
pub struct Nsga2Result {
    /// Feasible non-dominated solutions found over the whole run. When no
    /// feasible solution exists this holds the least-violating front of the
    /// final population and `feasible` is false.
    pub archive: ParetoArchive,
    pub feasible: bool,
    /// Final population, best front first.
    pub population: Vec<EvaluatedIndividual>,
    pub history: Vec<GenerationSnapshot>,
}

struct Ranked {
    ind: EvaluatedIndividual,
    rank: usize,
    crowding: f64,
}

fn evaluate_all<P: MultiObjective>(problem: &P, chromosomes: Vec<Chromosome>) -> Vec<EvaluatedIndividual> {
    chromosomes
        .into_par_iter()
        .map(|c| {
            let (objectives, violation) = problem.evaluate(&c);
            EvaluatedIndividual { chromosome: c, objectives, violation }
        })
        .collect()
}

/// Sorts `pool` into constraint-domination fronts and keeps `size`
/// individuals, truncating the last admitted front by crowding distance.
fn survive(pool: Vec<EvaluatedIndividual>, size: usize) -> Vec<Ranked> {
    let fronts = sort_by_relation(pool.len(), |i, j| constraint_dominates(&pool[i], &pool[j]));
    let mut slots: Vec<Option<EvaluatedIndividual>> = pool.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(size);
    for (rank, front) in fronts.iter().enumerate() {
        if out.len() == size {
            break;
        }
        let objs: Vec<Vec<f64>> = front
            .iter()
            .map(|&i| slots[i].as_ref().expect("each index appears once").objectives.clone())
            .collect();
        let crowd = crowding_distance(&objs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if out.len() + front.len() > size {
            // stable: equal crowding keeps the lower pool index
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]));
            order.truncate(size - out.len());
        }
        for k in order {
            out.push(Ranked {
                ind: slots[front[k]].take().expect("each index appears once"),
                rank,
                crowding: crowd[k],
            });
        }
    }
    out
}

fn tournament<'a>(pop: &'a [Ranked], rng: &mut EaRng) -> &'a Ranked {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding) {
        b
    } else {
        a
    }
}

fn snapshot(generation: usize, archive: &ParetoArchive, pop: &[Ranked]) -> GenerationSnapshot {
    GenerationSnapshot {
        generation,
        archive: archive.objectives(),
        first_front: pop.iter().filter(|r| r.rank == 0).count(),
        survivors: pop.len(),
    }
}

/// NSGA-II with constraint domination, crowding-distance truncation and a
/// feasible elitist archive recorded every generation.
pub fn nsga2<P: MultiObjective>(problem: &P, params: &EaParams) -> Result<Nsga2Result> {
    params.validate()?;
    let n = problem.n_bits();
    let mut rng = EaRng::seed_from_u64(params.seed);
    let mut archive = ParetoArchive::new(0);

    let initial: Vec<Chromosome> = (0..params.population)
        .map(|_| {
            let mut c = Chromosome::random(n, params.init_density, &mut rng);
            problem.repair(&mut c, &mut rng);
            c
        })
        .collect();
    let initial = evaluate_all(problem, initial);
    archive.extend_feasible(&initial);
    let mut pop = survive(initial, params.population);
    let mut history = vec![snapshot(0, &archive, &pop)];

    for generation in 1..=params.generations {
        let mut children = Vec::with_capacity(params.population + 1);
        while children.len() < params.population {
            let p1 = tournament(&pop, &mut rng);
            let p2 = tournament(&pop, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < params.crossover_prob {
                uniform_crossover(&p1.ind.chromosome, &p2.ind.chromosome, &mut rng)
            } else {
                (p1.ind.chromosome.clone(), p2.ind.chromosome.clone())
            };
            for c in [&mut c1, &mut c2] {
                bit_flip(c, params.mutation_prob, &mut rng);
                problem.repair(c, &mut rng);
            }
            children.push(c1);
            if children.len() < params.population {
                children.push(c2);
            }
        }
        let children = evaluate_all(problem, children);
        archive.extend_feasible(&children);
        archive.generation = generation;

        let mut pool: Vec<EvaluatedIndividual> = pop.into_iter().map(|r| r.ind).collect();
        pool.extend(children);
        pop = survive(pool, params.population);
        history.push(snapshot(generation, &archive, &pop));
    }

    let population: Vec<EvaluatedIndividual> = pop.into_iter().map(|r| r.ind).collect();
    let feasible = !archive.is_empty();
    if !feasible {
        let least = population
            .iter()
            .map(|i| i.violation)
            .fold(f64::INFINITY, f64::min);
        for ind in population.iter().filter(|i| i.violation == least) {
            archive.insert(ind.chromosome.clone(), ind.objectives.clone());
        }
    }
    Ok(Nsga2Result { archive, feasible, population, history })
}
