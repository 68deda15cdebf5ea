//! Tri-objective model for micro stations and the workload-cap calibration.
//!
//! Objectives, all minimised:
//! - `f1`: number of stations;
//! - `f2`: demand-weighted distance from each covered community to its
//!   nearest covering station;
//! - `f3`: minus the mean distance from each station to its adjacent
//!   (nearest) station.
//!
//! Constraints: every community covered, each station's workload (demand
//! within its radius) at most the cap, and each station inside the ring
//! `[min, max]` around at least one macro anchor.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolutionary::{nsga2, Chromosome, EaParams, GenerationSnapshot, MultiObjective};
use crate::geometry::{coverage_sets, distance_index, nearest_station, CoverageSets, DistanceIndex, Metric, PointSet};
use crate::metrics::ParetoArchive;
use crate::sizing::RoadNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroObjectives {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl MicroObjectives {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.f1, self.f2, self.f3]
    }
}

#[derive(Debug, Clone)]
pub struct MicroProblem {
    pub demand: PointSet,
    pub values: Vec<f64>,
    pub candidates: PointSet,
    /// Existing plus newly sited macro stations.
    pub anchors: PointSet,
    pub radius: f64,
    pub ring: (f64, f64),
    /// Workload cap; absent while calibrating.
    pub cap: Option<f64>,
    coverage: CoverageSets,
    demand_dist: DistanceIndex,
    site_dist: DistanceIndex,
    ring_excess: Vec<f64>,
    workloads: Vec<f64>,
}

impl MicroProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        demand: PointSet,
        values: Vec<f64>,
        candidates: PointSet,
        anchors: PointSet,
        radius: f64,
        ring: (f64, f64),
        cap: Option<f64>,
        metric: Metric,
        network: Option<&RoadNetwork>,
    ) -> Result<Self> {
        if values.len() != demand.len() {
            return Err(Error::Validation("one demand value per demand point is required".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation("demand values must be finite and non-negative".into()));
        }
        if !(ring.0 >= 0.0 && ring.0 <= ring.1) {
            return Err(Error::Config(format!("invalid micro ring [{}, {}]", ring.0, ring.1)));
        }
        if let Some(s) = cap {
            if !(s >= 0.0) {
                return Err(Error::Config(format!("workload cap must be non-negative, got {s}")));
            }
        }
        let demand_dist = distance_index(&demand, &candidates, metric, network)?;
        let coverage = coverage_sets(&demand_dist, radius)?;
        let site_dist = distance_index(&candidates, &candidates, metric, network)?;
        let anchor_dist = distance_index(&candidates, &anchors, metric, network)?;
        let ring_excess = (0..candidates.len())
            .map(|j| {
                anchor_dist
                    .row(j)
                    .iter()
                    .map(|&d| (ring.0 - d).max(0.0) + (d - ring.1).max(0.0))
                    .fold(f64::INFINITY, f64::min)
            })
            .map(|e| if e.is_finite() { e } else { 0.0 })
            .collect::<Vec<_>>();
        let ring_excess = if anchors.is_empty() {
            warn!("micro problem has no macro anchors; ring constraint not applied");
            vec![0.0; candidates.len()]
        } else {
            ring_excess
        };
        let workloads = coverage
            .eta
            .iter()
            .map(|members| members.iter().map(|&i| values[i]).sum())
            .collect();
        Ok(MicroProblem {
            demand,
            values,
            candidates,
            anchors,
            radius,
            ring,
            cap,
            coverage,
            demand_dist,
            site_dist,
            ring_excess,
            workloads,
        })
    }

    pub fn with_cap(&self, cap: Option<f64>) -> Self {
        MicroProblem { cap, ..self.clone() }
    }

    pub fn coverage(&self) -> &CoverageSets {
        &self.coverage
    }

    /// Total demand within the service radius of candidate `j`.
    pub fn workload(&self, j: usize) -> f64 {
        self.workloads[j]
    }

    /// Mean workload over the selected stations (zero when none).
    pub fn mean_workload(&self, selected: &[usize]) -> f64 {
        if selected.is_empty() {
            return 0.0;
        }
        selected.iter().map(|&j| self.workloads[j]).sum::<f64>() / selected.len() as f64
    }

    /// Nearest selected covering station of each demand point.
    pub fn assignment(&self, selected: &[usize]) -> Vec<Option<usize>> {
        let mut on = vec![false; self.candidates.len()];
        for &j in selected {
            on[j] = true;
        }
        (0..self.demand.len())
            .map(|i| {
                self.coverage.omega[i]
                    .iter()
                    .copied()
                    .filter(|&j| on[j])
                    .min_by(|&a, &b| self.demand_dist.get(i, a).total_cmp(&self.demand_dist.get(i, b)))
            })
            .collect()
    }

    pub fn objectives(&self, selected: &[usize]) -> MicroObjectives {
        let f2 = self
            .assignment(selected)
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|j| self.values[i] * self.demand_dist.get(i, j)))
            .sum();
        let f3 = if selected.len() < 2 {
            0.0
        } else {
            let total: f64 = selected
                .iter()
                .map(|&j| {
                    nearest_station(j, selected, &self.site_dist)
                        .map(|(_, d)| d)
                        .expect("at least two stations")
                })
                .sum();
            -total / selected.len() as f64
        };
        MicroObjectives { f1: selected.len() as f64, f2, f3 }
    }

    /// Uncovered communities, plus workload excess over the cap, plus ring
    /// excess of stations outside every anchor ring.
    pub fn violation(&self, selected: &[usize]) -> f64 {
        let uncovered = self.assignment(selected).iter().filter(|a| a.is_none()).count() as f64;
        let workload: f64 = match self.cap {
            Some(cap) => selected.iter().map(|&j| (self.workloads[j] - cap).max(0.0)).sum(),
            None => 0.0,
        };
        let ring: f64 = selected.iter().map(|&j| self.ring_excess[j]).sum();
        uncovered + workload + ring
    }
}

impl MultiObjective for MicroProblem {
    fn n_bits(&self) -> usize {
        self.candidates.len()
    }

    fn n_objectives(&self) -> usize {
        3
    }

    fn evaluate(&self, c: &Chromosome) -> (Vec<f64>, f64) {
        let s = c.selected();
        (self.objectives(&s).to_vec(), self.violation(&s))
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub run: usize,
    pub seed: u64,
    pub archive: ParetoArchive,
    /// Mean station workload of each archive entry, in archive order.
    pub workloads: Vec<f64>,
    /// Largest of `workloads`; absent for runs without a feasible front.
    pub max_workload: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct WorkloadCalibration {
    pub runs: Vec<CalibrationRun>,
    /// Mean over contributing runs of each run's largest mean workload.
    pub cap: f64,
}

/// Average, over runs with a feasible front, of the largest per-solution
/// mean station workload.
pub fn cap_from_maxima(maxima: &[Option<f64>]) -> Result<f64> {
    let used: Vec<f64> = maxima.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(Error::Calibration("no run produced a feasible front".into()));
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}

/// Runs the optimiser `runs` times without the workload cap (seeds
/// `params.seed + run`) and derives the cap from the resulting fronts.
pub fn calibrate_workload(problem: &MicroProblem, params: &EaParams, runs: usize) -> Result<WorkloadCalibration> {
    if problem.cap.is_some() {
        return Err(Error::Config("calibration needs the workload cap removed".into()));
    }
    if runs == 0 {
        return Err(Error::Config("calibration needs at least one run".into()));
    }
    let results: Vec<Result<CalibrationRun>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let seed = params.seed.wrapping_add(run as u64);
            let r = nsga2(problem, &params.with_seed(seed))?;
            let (archive, workloads) = if r.feasible {
                let w = r
                    .archive
                    .entries()
                    .iter()
                    .map(|e| problem.mean_workload(&e.chromosome.selected()))
                    .collect();
                (r.archive, w)
            } else {
                (ParetoArchive::new(r.archive.generation), Vec::new())
            };
            let max_workload = workloads.iter().copied().reduce(f64::max);
            Ok(CalibrationRun { run, seed, archive, workloads, max_workload })
        })
        .collect();
    let runs: Vec<CalibrationRun> = results.into_iter().collect::<Result<_>>()?;
    for r in runs.iter().filter(|r| r.max_workload.is_none()) {
        warn!("calibration run {} found no feasible front and is excluded", r.run);
    }
    let maxima: Vec<Option<f64>> = runs.iter().map(|r| r.max_workload).collect();
    let cap = cap_from_maxima(&maxima)?;
    Ok(WorkloadCalibration { runs, cap })
}

#[derive(Debug, Clone)]
pub struct MicroSolution {
    pub archive: ParetoArchive,
    pub feasible: bool,
    pub history: Vec<GenerationSnapshot>,
}

/// Solves the capped micro model; every archived plan is re-checked by
/// recomputing its violation.
pub fn solve_micro(problem: &MicroProblem, params: &EaParams) -> Result<MicroSolution> {
    if problem.cap.is_none() {
        return Err(Error::Config("micro model needs a workload cap; calibrate first".into()));
    }
    let r = nsga2(problem, params)?;
    if r.feasible {
        for e in r.archive.entries() {
            let s = e.chromosome.selected();
            if problem.violation(&s) != 0.0 || problem.objectives(&s).to_vec() != e.objectives {
                return Err(Error::Validation(format!(
                    "archived plan {:?} failed recomputation",
                    s
                )));
            }
        }
    }
    Ok(MicroSolution { archive: r.archive, feasible: r.feasible, history: r.history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use itertools::Itertools;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps(prefix: &str, coords: &[(f64, f64)]) -> PointSet {
        PointSet(coords.iter().enumerate().map(|(i, &(x, y))| Point::new(format!("{prefix}{i}"), x, y)).collect())
    }

    fn problem(demand: &[(f64, f64)], values: Vec<f64>, cands: &[(f64, f64)], cap: Option<f64>) -> MicroProblem {
        MicroProblem::new(
            ps("d", demand),
            values,
            ps("c", cands),
            PointSet::default(),
            1.0,
            (0.0, f64::INFINITY),
            cap,
            Metric::Euclidean,
            None,
        )
        .unwrap()
    }

    fn random_problem(seed: u64, n_dem: usize, n_cand: usize, cap: Option<f64>) -> MicroProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands: Vec<(f64, f64)> = (0..n_cand).map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0))).collect();
        let demand: Vec<(f64, f64)> = (0..n_dem)
            .map(|_| {
                let c = cands[rng.gen_range(0..n_cand)];
                (c.0 + rng.gen_range(-0.6..0.6), c.1 + rng.gen_range(-0.6..0.6))
            })
            .collect();
        let values = (0..n_dem).map(|_| rng.gen_range(1..=4) as f64 * 0.5 + 0.5).collect();
        problem(&demand, values, &cands, cap)
    }

    #[test]
    fn single_station_objectives() {
        let p = problem(&[(0.3, 0.0), (0.0, 0.4)], vec![1.0, 2.0], &[(0.0, 0.0)], Some(10.0));
        let o = p.objectives(&[0]);
        assert_eq!(o.f1, 1.0);
        assert!((o.f2 - 1.1).abs() < 1e-12);
        assert_eq!(o.f3, 0.0);
        assert_eq!(p.violation(&[0]), 0.0);
    }

    #[test]
    fn symmetric_pair() {
        let p = problem(&[(0.0, 0.0)], vec![1.0], &[(0.0, 0.0), (1.0, 0.0)], None);
        assert_eq!(p.objectives(&[0, 1]).f3, -1.0);
    }

    #[test]
    fn empty_selection() {
        let p = problem(&[(0.0, 0.0)], vec![1.0], &[(0.0, 0.0)], None);
        assert_eq!(p.objectives(&[]), MicroObjectives { f1: 0.0, f2: 0.0, f3: 0.0 });
        assert!(p.violation(&[]) > 0.0);
    }

    #[test]
    fn uncovered_and_overloaded() {
        let p = problem(&[(0.0, 0.0), (5.0, 0.0)], vec![1.0, 1.0], &[(0.0, 0.0)], Some(10.0));
        assert!(p.violation(&[0]) >= 1.0);
        let p = problem(&[(0.0, 0.0), (0.5, 0.0)], vec![10.0, 11.4], &[(0.2, 0.0)], Some(19.374829));
        assert!((p.workload(0) - 21.4).abs() < 1e-12);
        assert!((p.violation(&[0]) - 2.025171).abs() < 1e-9);
    }

    #[test]
    fn ring_constraint_is_checked() {
        let p = MicroProblem::new(
            ps("d", &[(0.0, 0.0)]),
            vec![1.0],
            ps("c", &[(0.0, 0.0), (1.0, 0.0)]),
            ps("m", &[(0.0, 0.0)]),
            1.0,
            (0.696, 2.796),
            None,
            Metric::Euclidean,
            None,
        )
        .unwrap();
        assert!((p.violation(&[0]) - 0.696).abs() < 1e-12);
        assert_eq!(p.violation(&[1]), 0.0);
    }

    #[test]
    fn nearest_assignment_is_optimal() {
        // every assignment respecting Y <= X and coverage, enumerated
        for seed in 0..30 {
            let p = random_problem(seed, 5, 3, None);
            let sel = vec![0, 1, 2];
            let options: Vec<Vec<usize>> = (0..5)
                .map(|i| p.coverage().omega[i].iter().copied().filter(|j| sel.contains(j)).collect())
                .collect();
            if options.iter().any(|o| o.is_empty()) {
                continue;
            }
            let best = options
                .iter()
                .multi_cartesian_product()
                .map(|choice| {
                    choice
                        .iter()
                        .enumerate()
                        .map(|(i, &&j)| p.values[i] * p.demand[i].dist(&p.candidates[j]))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((p.objectives(&sel).f2 - best).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_formula() {
        assert_eq!(cap_from_maxima(&[Some(7.5)]).unwrap(), 7.5);
        assert_eq!(cap_from_maxima(&[Some(8.0), Some(10.0)]).unwrap(), 9.0);
        assert_eq!(cap_from_maxima(&[Some(8.0), None, Some(10.0)]).unwrap(), 9.0);
        assert!(cap_from_maxima(&[None, None]).is_err());
    }

    #[test]
    fn single_run_maximum() {
        let p = random_problem(2, 10, 10, None);
        let params = EaParams { population: 40, generations: 30, seed: 4, ..Default::default() };
        let cal = calibrate_workload(&p, &params, 1).unwrap();
        let w = &cal.runs[0].workloads;
        assert_eq!(cal.cap, w.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        assert!(calibrate_workload(&p.with_cap(Some(1.0)), &params, 1).is_err());
    }

    #[test]
    fn solve_requires_cap() {
        let p = random_problem(2, 6, 6, None);
        assert!(solve_micro(&p, &EaParams::default()).is_err());
    }

    #[test]
    fn one_station_covering_everything() {
        let p = problem(&[(0.1, 0.0), (0.0, 0.2), (-0.3, 0.0)], vec![1.0, 1.0, 1.0], &[(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0)], Some(10.0));
        let params = EaParams { population: 30, generations: 30, seed: 1, ..Default::default() };
        let s = solve_micro(&p, &params).unwrap();
        assert!(s.feasible);
        assert!(s.archive.entries().iter().any(|e| e.objectives[0] == 1.0));
    }

    #[test]
    fn larger_cap_never_hurts() {
        let p = random_problem(8, 10, 10, None);
        let tight = p.with_cap(Some(6.0));
        let loose = p.with_cap(Some(9.0));
        let params = EaParams { population: 60, generations: 60, seed: 3, ..Default::default() };
        let a = solve_micro(&tight, &params).unwrap();
        let b = solve_micro(&loose, &params).unwrap();
        if a.feasible {
            assert!(b.feasible);
            for ea in a.archive.entries() {
                assert!(b.archive.entries().iter().any(|eb| {
                    eb.objectives.iter().zip(&ea.objectives).all(|(x, y)| x <= y)
                }));
            }
        }
    }

    proptest! {
        #[test]
        fn objective_invariants(seed in 0u64..100, mask in 0u16..1024) {
            let p = random_problem(seed, 8, 10, None);
            let s: Vec<usize> = (0..10).filter(|b| mask >> b & 1 == 1).collect();
            let o = p.objectives(&s);
            prop_assert_eq!(o.f1, s.len() as f64);
            prop_assert!(o.f2 >= 0.0);
            prop_assert!(o.f3 <= 0.0);
            if s.len() < 2 {
                prop_assert_eq!(o.f3, 0.0);
            } else {
                prop_assert!(o.f3 < 0.0);
            }
            let zero = p.clone();
            let zero = MicroProblem::new(zero.demand.clone(), vec![0.0; 8], zero.candidates.clone(), PointSet::default(), 1.0, (0.0, f64::INFINITY), None, Metric::Euclidean, None).unwrap();
            prop_assert_eq!(zero.objectives(&s).f2, 0.0);
        }
    }
}
