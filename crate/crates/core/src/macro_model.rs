//! Extended maximal covering model for macro stations.
//!
//! Choose exactly `N` new sites so that, together with the existing
//! stations, the covered demand is maximal while every new station keeps its
//! adjacent (nearest) station within `[min, max]` km.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolutionary::{ga_elitist, Chromosome, EaParams, EaRng, GaTraceEntry, SingleObjective};
use crate::geometry::{coverage_sets, distance_index, nearest_station, CoverageSets, DistanceIndex, Metric, PointSet};
use crate::sizing::RoadNetwork;

/// Which station pairs the separation bounds apply to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyMode {
    /// Each new station against its nearest sited or existing station.
    #[default]
    Nearest,
    /// Additionally every pair of new stations.
    AllPairs,
}

#[derive(Debug, Clone)]
pub struct MacroProblem {
    pub demand: PointSet,
    pub values: Vec<f64>,
    pub candidates: PointSet,
    pub existing: PointSet,
    pub radius: f64,
    pub min_separation: f64,
    pub max_separation: f64,
    pub new_count: usize,
    pub mode: AdjacencyMode,
    /// Coverage over candidates followed by existing stations.
    coverage: CoverageSets,
    /// Square index over candidates followed by existing stations.
    station_dist: DistanceIndex,
    existing_covered: Vec<bool>,
    total_demand: f64,
}

/// The selected new sites and the demand they cover together with the
/// existing stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPlan {
    pub selected: Vec<usize>,
    pub selected_ids: Vec<String>,
    pub covered: Vec<usize>,
    pub covered_ids: Vec<String>,
    pub total_covered_demand: f64,
}

#[derive(Debug, Clone)]
pub struct MacroSolution {
    pub plan: MacroPlan,
    pub feasible: bool,
    pub violation: f64,
    pub trace: Vec<GaTraceEntry>,
}

impl MacroProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        demand: PointSet,
        values: Vec<f64>,
        candidates: PointSet,
        existing: PointSet,
        radius: f64,
        (min_separation, max_separation): (f64, f64),
        new_count: usize,
        metric: Metric,
        network: Option<&RoadNetwork>,
    ) -> Result<Self> {
        if values.len() != demand.len() {
            return Err(Error::Validation("one demand value per demand point is required".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation("demand values must be finite and non-negative".into()));
        }
        if new_count == 0 {
            return Err(Error::Config("at least one new macro station must be sited".into()));
        }
        if new_count > candidates.len() {
            return Err(Error::Config(format!(
                "{new_count} new macro stations requested but only {} candidates",
                candidates.len()
            )));
        }
        if !(min_separation >= 0.0 && min_separation <= max_separation) {
            return Err(Error::Config(format!(
                "invalid macro separation bounds [{min_separation}, {max_separation}]"
            )));
        }
        let stations = candidates.chain(&existing)?;
        let demand_dist = distance_index(&demand, &stations, metric, network)?;
        let coverage = coverage_sets(&demand_dist, radius)?;
        let station_dist = distance_index(&stations, &stations, metric, network)?;
        let n_cand = candidates.len();
        let mut existing_covered = vec![false; demand.len()];
        for j in n_cand..stations.len() {
            for &i in &coverage.eta[j] {
                existing_covered[i] = true;
            }
        }
        let total_demand = values.iter().sum();
        Ok(MacroProblem {
            demand,
            values,
            candidates,
            existing,
            radius,
            min_separation,
            max_separation,
            new_count,
            mode: AdjacencyMode::Nearest,
            coverage,
            station_dist,
            existing_covered,
            total_demand,
        })
    }

    pub fn with_mode(mut self, mode: AdjacencyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn coverage(&self) -> &CoverageSets {
        &self.coverage
    }

    pub fn total_demand(&self) -> f64 {
        self.total_demand
    }

    /// Station-index distance (candidates first, then existing stations).
    pub fn station_distance(&self, a: usize, b: usize) -> f64 {
        self.station_dist.get(a, b)
    }

    fn covered_flags(&self, selected: &[usize]) -> Vec<bool> {
        let mut covered = self.existing_covered.clone();
        for &j in selected {
            for &i in &self.coverage.eta[j] {
                covered[i] = true;
            }
        }
        covered
    }

    /// Total demand covered by the selected sites and the existing stations.
    pub fn fitness(&self, selected: &[usize]) -> f64 {
        self.covered_flags(selected)
            .iter()
            .zip(&self.values)
            .filter(|(c, _)| **c)
            .map(|(_, v)| v)
            .sum()
    }

    fn excess(&self, d: f64) -> f64 {
        (self.min_separation - d).max(0.0) + (d - self.max_separation).max(0.0)
    }

    /// Adjacent station of each selected site as `(site, neighbour, km)`,
    /// neighbours being station indices (existing stations follow the
    /// candidates).
    pub fn adjacency(&self, selected: &[usize]) -> Vec<(usize, usize, f64)> {
        let n_cand = self.candidates.len();
        let sited: Vec<usize> = selected
            .iter()
            .copied()
            .chain(n_cand..n_cand + self.existing.len())
            .collect();
        selected
            .iter()
            .filter_map(|&j| {
                nearest_station(j, &sited, &self.station_dist)
                    .ok()
                    .map(|(k, d)| (j, k, d))
            })
            .collect()
    }

    /// Total constraint violation: cardinality mismatch scaled by
    /// `total demand + 1`, plus each separation excess.
    pub fn violation(&self, selected: &[usize]) -> f64 {
        let count_gap = (selected.len() as f64 - self.new_count as f64).abs();
        let mut v = count_gap * (self.total_demand + 1.0);
        for (_, _, d) in self.adjacency(selected) {
            v += self.excess(d);
        }
        if self.mode == AdjacencyMode::AllPairs {
            for (a, &j) in selected.iter().enumerate() {
                for &k in &selected[a + 1..] {
                    v += self.excess(self.station_dist.get(j, k));
                }
            }
        }
        v
    }

    pub fn plan(&self, selected: &[usize]) -> MacroPlan {
        let mut selected = selected.to_vec();
        selected.sort_unstable();
        let covered: Vec<usize> = self
            .covered_flags(&selected)
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect();
        MacroPlan {
            selected_ids: selected.iter().map(|&j| self.candidates[j].id.clone()).collect(),
            covered_ids: covered.iter().map(|&i| self.demand[i].id.clone()).collect(),
            total_covered_demand: self.fitness(&selected),
            selected,
            covered,
        }
    }

    /// Selected candidates as a point set.
    pub fn selected_points(&self, selected: &[usize]) -> PointSet {
        self.candidates.subset(selected)
    }
}

/// Forces exactly `n` set bits by dropping or adding uniformly random
/// positions.
pub fn repair_cardinality(chromosome: &mut Chromosome, n: usize, rng: &mut EaRng) -> Result<()> {
    if n > chromosome.len() {
        return Err(Error::Config(format!(
            "cannot select {n} sites out of {}",
            chromosome.len()
        )));
    }
    let count = chromosome.popcount();
    if count > n {
        let ones = chromosome.selected();
        for k in sample(rng, ones.len(), count - n) {
            chromosome.0[ones[k]] = false;
        }
    } else if count < n {
        let zeros: Vec<usize> = (0..chromosome.len()).filter(|&i| !chromosome.0[i]).collect();
        for k in sample(rng, zeros.len(), n - count) {
            chromosome.0[zeros[k]] = true;
        }
    }
    Ok(())
}

impl SingleObjective for MacroProblem {
    fn n_bits(&self) -> usize {
        self.candidates.len()
    }

    fn evaluate(&self, c: &Chromosome) -> (f64, f64) {
        let s = c.selected();
        (self.fitness(&s), self.violation(&s))
    }

    fn repair(&self, c: &mut Chromosome, rng: &mut EaRng) {
        repair_cardinality(c, self.new_count, rng).expect("new_count checked at construction");
    }
}

/// Runs the elitist GA on the macro model.
pub fn solve_macro(problem: &MacroProblem, params: &EaParams) -> Result<MacroSolution> {
    let r = ga_elitist(problem, params)?;
    let selected = r.best.chromosome.selected();
    Ok(MacroSolution {
        plan: problem.plan(&selected),
        feasible: r.feasible,
        violation: r.best.violation,
        trace: r.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use itertools::Itertools;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ps(prefix: &str, coords: &[(f64, f64)]) -> PointSet {
        PointSet(coords.iter().enumerate().map(|(i, &(x, y))| Point::new(format!("{prefix}{i}"), x, y)).collect())
    }

    fn random_problem(seed: u64, n_dem: usize, n_cand: usize, n_new: usize, bounds: (f64, f64)) -> MacroProblem {
        let mut rng = EaRng::seed_from_u64(seed);
        let mut pts = |p: &str, n: usize| {
            ps(p, &(0..n).map(|_| (rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0))).collect::<Vec<_>>())
        };
        let demand = pts("d", n_dem);
        let cands = pts("c", n_cand);
        let existing = pts("e", 1);
        let values = (0..n_dem).map(|i| 1.0 + (i % 4) as f64).collect();
        MacroProblem::new(demand, values, cands, existing, 1.2, bounds, n_new, Metric::Euclidean, None).unwrap()
    }

    #[test]
    fn fitness_examples() {
        let demand = ps("d", &[(0.0, 0.0), (0.5, 0.0), (9.0, 9.0)]);
        let p = MacroProblem::new(
            demand,
            vec![2.0, 3.0, 7.0],
            ps("c", &[(0.2, 0.0), (20.0, 20.0)]),
            PointSet::default(),
            1.0,
            (0.0, f64::INFINITY),
            1,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert_eq!(p.fitness(&[]), 0.0);
        assert_eq!(p.fitness(&[0]), 5.0);
        assert_eq!(p.plan(&[0]).covered_ids, vec!["d0", "d1"]);
    }

    #[test]
    fn fitness_matches_membership_scan() {
        let p = random_problem(17, 10, 6, 2, (0.0, f64::INFINITY));
        for subset in (0..6).powerset() {
            let mut expected = 0.0;
            for i in 0..10 {
                let by_new = subset.iter().any(|&j| p.demand[i].dist(&p.candidates[j]) <= 1.2);
                let by_old = p.existing.iter().any(|e| p.demand[i].dist(e) <= 1.2);
                if by_new || by_old {
                    expected += p.values[i];
                }
            }
            assert_eq!(p.fitness(&subset), expected);
        }
    }

    #[test]
    fn too_close_pair_is_penalised_on_both_sides() {
        let p = MacroProblem::new(
            ps("d", &[(0.0, 0.0)]),
            vec![1.0],
            ps("c", &[(0.0, 0.0), (1.0, 0.0)]),
            PointSet::default(),
            1.746,
            (2.043, 3.542),
            2,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert!((p.violation(&[0, 1]) - 2.0 * 1.043).abs() < 1e-12);
    }

    #[test]
    fn too_far_from_existing_station() {
        let p = MacroProblem::new(
            ps("d", &[(0.0, 0.0)]),
            vec![1.0],
            ps("c", &[(3.6, 0.0)]),
            ps("e", &[(0.0, 0.0)]),
            1.746,
            (2.043, 3.542),
            1,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert!((p.violation(&[0]) - 0.058).abs() < 1e-12);
        assert_eq!(p.adjacency(&[0]), vec![(0, 1, 3.6)]);
    }

    #[test]
    fn feasible_layout_has_zero_violation() {
        let p = MacroProblem::new(
            ps("d", &[(0.0, 0.0)]),
            vec![1.0],
            ps("c", &[(3.0, 0.0), (6.0, 0.0)]),
            ps("e", &[(0.0, 0.0)]),
            1.746,
            (2.043, 3.542),
            2,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert_eq!(p.violation(&[0, 1]), 0.0);
        // cardinality mismatch dominates any separation excess
        assert!(p.violation(&[0]) >= p.total_demand() + 1.0);
    }

    #[test]
    fn all_pairs_mode_adds_non_adjacent_pairs() {
        let p = MacroProblem::new(
            ps("d", &[(0.0, 0.0)]),
            vec![1.0],
            ps("c", &[(0.0, 0.0), (3.0, 0.0), (6.0, 0.0)]),
            PointSet::default(),
            1.746,
            (2.043, 3.542),
            3,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert_eq!(p.violation(&[0, 1, 2]), 0.0);
        let strict = p.with_mode(AdjacencyMode::AllPairs);
        // the 0-2 pair is 6 km apart
        assert!((strict.violation(&[0, 1, 2]) - (6.0 - 3.542)).abs() < 1e-12);
    }

    #[test]
    fn repair_hits_target() {
        let mut rng = EaRng::seed_from_u64(0);
        let mut c = Chromosome::from_selected(5, &[0, 2, 4]);
        repair_cardinality(&mut c, 3, &mut rng).unwrap();
        assert_eq!(c.selected(), vec![0, 2, 4]);
        let mut z = Chromosome::zeros(5);
        repair_cardinality(&mut z, 3, &mut rng).unwrap();
        assert_eq!(z.popcount(), 3);
        let mut f = Chromosome(vec![true; 5]);
        repair_cardinality(&mut f, 1, &mut rng).unwrap();
        assert_eq!(f.popcount(), 1);
        assert!(repair_cardinality(&mut Chromosome::zeros(2), 3, &mut rng).is_err());
    }

    #[test]
    fn repair_is_deterministic() {
        let run = || {
            let mut rng = EaRng::seed_from_u64(99);
            let mut c = Chromosome(vec![true; 20]);
            repair_cardinality(&mut c, 4, &mut rng).unwrap();
            c
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn saturated_coverage() {
        let demand = ps("d", &[(0.0, 0.0), (0.3, 0.0)]);
        let p = MacroProblem::new(
            demand,
            vec![1.0, 2.0],
            ps("c", &[(5.0, 0.0), (10.0, 0.0), (15.0, 0.0)]),
            ps("e", &[(0.1, 0.0)]),
            1.0,
            (0.0, f64::INFINITY),
            2,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        let s = solve_macro(&p, &EaParams { population: 10, generations: 5, ..Default::default() }).unwrap();
        assert!(s.feasible);
        assert_eq!(s.plan.total_covered_demand, 3.0);
    }

    #[test]
    fn unbounded_solver_matches_exhaustive_mcp() {
        for seed in 0..4 {
            let p = random_problem(seed, 14, 9, 3, (0.0, f64::INFINITY));
            let best = (0..9).combinations(3).map(|s| p.fitness(&s)).fold(0.0, f64::max);
            let params = EaParams { population: 60, generations: 80, seed, ..Default::default() };
            let s = solve_macro(&p, &params).unwrap();
            assert!(s.feasible);
            assert_eq!(s.plan.total_covered_demand, best, "seed {seed}");
        }
    }

    #[test]
    fn all_candidates_cover_everything_coverable() {
        let p = random_problem(5, 12, 5, 5, (0.0, f64::INFINITY));
        let coverable: f64 = (0..12)
            .filter(|&i| p.coverage().omega[i].iter().any(|&j| j < 5) || p.existing.iter().any(|e| p.demand[i].dist(e) <= 1.2))
            .map(|i| p.values[i])
            .sum();
        assert_eq!(p.fitness(&[0, 1, 2, 3, 4]), coverable);
    }

    proptest! {
        #[test]
        fn fitness_monotone_and_order_free(seed in 0u64..200, mask in 0u16..512, extra in 0usize..9) {
            let p = random_problem(seed, 10, 9, 2, (0.0, f64::INFINITY));
            let s: Vec<usize> = (0..9).filter(|b| mask >> b & 1 == 1).collect();
            let mut more = s.clone();
            if !more.contains(&extra) {
                more.push(extra);
            }
            prop_assert!(p.fitness(&more) >= p.fitness(&s));
            let mut rev = s.clone();
            rev.reverse();
            prop_assert_eq!(p.fitness(&rev), p.fitness(&s));
        }
    }
}
