//! Exact enumeration solvers for small instances.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolutionary::Chromosome;
use crate::macro_model::MacroProblem;
use crate::metrics::{lex_cmp, ArchiveEntry, ParetoArchive};
use crate::micro_model::MicroProblem;

pub const MACRO_GUARD: u128 = 1_000_000;
pub const MICRO_GUARD_BITS: usize = 20;

#[derive(Debug, Clone)]
pub struct ExactMacro {
    /// Optimal covered demand; absent when no subset is feasible.
    pub best_fitness: Option<f64>,
    /// Every optimal subset, in lexicographic order.
    pub argmax: Vec<Vec<usize>>,
    pub enumerated: u128,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ExactMicro {
    /// Exact non-dominated set of feasible subsets. Each objective vector
    /// appears once, held by its lexicographically smallest subset.
    pub front: ParetoArchive,
    pub enumerated: u128,
    pub elapsed: Duration,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Enumerates every `N`-subset of macro candidates.
pub fn brute_force_macro(problem: &MacroProblem) -> Result<ExactMacro> {
    let n = problem.candidates.len();
    let size = binomial(n, problem.new_count);
    if size > MACRO_GUARD {
        return Err(Error::GuardExceeded { what: "C(|J1|, N)", size, limit: MACRO_GUARD });
    }
    let start = Instant::now();
    let mut best: Option<f64> = None;
    let mut argmax = Vec::new();
    let mut enumerated = 0u128;
    for subset in (0..n).combinations(problem.new_count) {
        enumerated += 1;
        if problem.violation(&subset) != 0.0 {
            continue;
        }
        let f = problem.fitness(&subset);
        match best {
            Some(b) if f < b => {}
            Some(b) if f == b => argmax.push(subset),
            _ => {
                best = Some(f);
                argmax = vec![subset];
            }
        }
    }
    Ok(ExactMacro { best_fitness: best, argmax, enumerated, elapsed: start.elapsed() })
}

/// Enumerates all `2^|J2|` micro subsets and keeps the feasible
/// non-dominated ones.
pub fn exact_pareto_micro(problem: &MicroProblem) -> Result<ExactMicro> {
    let n = problem.candidates.len();
    if n > MICRO_GUARD_BITS {
        return Err(Error::GuardExceeded {
            what: "|J2|",
            size: n as u128,
            limit: MICRO_GUARD_BITS as u128,
        });
    }
    let start = Instant::now();
    let mut feasible: Vec<(Vec<usize>, Vec<f64>)> = (0u64..1 << n)
        .into_par_iter()
        .filter_map(|mask| {
            let subset: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).collect();
            (problem.violation(&subset) == 0.0).then(|| {
                let o = problem.objectives(&subset).to_vec();
                (subset, o)
            })
        })
        .collect();
    feasible.sort_by(|a, b| lex_cmp(&a.1, &b.1).then_with(|| a.0.cmp(&b.0)));
    // in lexicographic order no later vector dominates an earlier one
    let mut front: Vec<ArchiveEntry> = Vec::new();
    for (subset, objectives) in feasible {
        let dominated = front.iter().any(|e| {
            e.objectives == objectives || crate::evolutionary::pareto_dominates(&e.objectives, &objectives)
        });
        if !dominated {
            front.push(ArchiveEntry { chromosome: Chromosome::from_selected(n, &subset), objectives });
        }
    }
    Ok(ExactMicro {
        front: ParetoArchive::from_entries(0, front),
        enumerated: 1u128 << n,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolutionary::pareto_dominates;
    use crate::geometry::{Metric, Point, PointSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps(prefix: &str, coords: &[(f64, f64)]) -> PointSet {
        PointSet(coords.iter().enumerate().map(|(i, &(x, y))| Point::new(format!("{prefix}{i}"), x, y)).collect())
    }

    fn random_coords(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Vec<(f64, f64)> {
        (0..n).map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side))).collect()
    }

    fn macro_problem(seed: u64, n_cand: usize, n_new: usize, bounds: (f64, f64)) -> MacroProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let demand = random_coords(&mut rng, 12, 5.0);
        let cands = random_coords(&mut rng, n_cand, 5.0);
        let values = (0..12).map(|i| (i % 5 + 1) as f64).collect();
        MacroProblem::new(ps("d", &demand), values, ps("c", &cands), PointSet::default(), 1.0, bounds, n_new, Metric::Euclidean, None)
            .unwrap()
    }

    fn micro_problem(seed: u64, n_cand: usize, cap: f64) -> MicroProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = random_coords(&mut rng, n_cand, 3.0);
        let demand: Vec<(f64, f64)> = (0..8)
            .map(|_| {
                let c = cands[rng.gen_range(0..n_cand)];
                (c.0 + rng.gen_range(-0.5..0.5), c.1 + rng.gen_range(-0.5..0.5))
            })
            .collect();
        let values = (0..8).map(|i| (i % 3 + 1) as f64).collect();
        MicroProblem::new(ps("d", &demand), values, ps("c", &cands), PointSet::default(), 1.0, (0.0, f64::INFINITY), Some(cap), Metric::Euclidean, None)
            .unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(15, 3), 455);
        assert_eq!(binomial(4, 4), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn all_candidates_selected() {
        let r = brute_force_macro(&macro_problem(1, 4, 4, (0.0, f64::INFINITY))).unwrap();
        assert_eq!(r.enumerated, 1);
        assert_eq!(r.argmax, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn unbounded_pairs_match_recomputation() {
        let p = macro_problem(5, 6, 2, (0.0, f64::INFINITY));
        let r = brute_force_macro(&p).unwrap();
        assert_eq!(r.enumerated, 15);
        let mut best = f64::NEG_INFINITY;
        for a in 0..6 {
            for b in a + 1..6 {
                let covered: f64 = (0..12)
                    .filter(|&i| [a, b].iter().any(|&j| p.demand[i].dist(&p.candidates[j]) <= 1.0))
                    .map(|i| p.values[i])
                    .sum();
                best = best.max(covered);
            }
        }
        assert_eq!(r.best_fitness, Some(best));
        for s in &r.argmax {
            assert_eq!(p.fitness(s), best);
        }
    }

    #[test]
    fn impossible_separation() {
        let r = brute_force_macro(&macro_problem(2, 6, 2, (100.0, 200.0))).unwrap();
        assert_eq!(r.best_fitness, None);
        assert!(r.argmax.is_empty());
    }

    #[test]
    fn guards() {
        assert!(matches!(
            brute_force_macro(&macro_problem(3, 40, 10, (0.0, f64::INFINITY))),
            Err(Error::GuardExceeded { .. })
        ));
        assert!(matches!(exact_pareto_micro(&micro_problem(3, 21, 50.0)), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn one_candidate() {
        let r = exact_pareto_micro(&micro_problem(4, 1, 50.0)).unwrap();
        assert!(r.front.len() <= 1);
        assert_eq!(r.enumerated, 2);
    }

    #[test]
    fn zero_cap_has_no_feasible_subset() {
        let r = exact_pareto_micro(&micro_problem(4, 8, 0.0)).unwrap();
        assert!(r.front.is_empty());
    }

    #[test]
    fn front_weakly_dominates_every_feasible_subset() {
        let p = micro_problem(9, 10, 12.0);
        let r = exact_pareto_micro(&p).unwrap();
        let front = r.front.objectives();
        assert!(!front.is_empty());
        for a in &front {
            assert!(!front.iter().any(|b| pareto_dominates(b, a)));
        }
        for mask in 0u32..1 << 10 {
            let s: Vec<usize> = (0..10).filter(|&b| mask >> b & 1 == 1).collect();
            if p.violation(&s) == 0.0 {
                let o = p.objectives(&s).to_vec();
                assert!(front.iter().any(|f| *f == o || pareto_dominates(f, &o)));
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = micro_problem(11, 9, 10.0);
        let a = exact_pareto_micro(&p).unwrap();
        let b = exact_pareto_micro(&p).unwrap();
        assert_eq!(a.front, b.front);
    }
}
