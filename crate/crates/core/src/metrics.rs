//! Front-quality indicators and plan coverage statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolutionary::{pareto_dominates, Chromosome, EvaluatedIndividual};
use crate::geometry::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub chromosome: Chromosome,
    pub objectives: Vec<f64>,
}

/// Mutually non-dominated solutions (minimisation) with distinct objective
/// vectors. When two solutions share a vector the first one inserted is kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoArchive {
    pub generation: usize,
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new(generation: usize) -> Self {
        ParetoArchive { generation, entries: Vec::new() }
    }

    pub fn from_entries(generation: usize, entries: impl IntoIterator<Item = ArchiveEntry>) -> Self {
        let mut a = Self::new(generation);
        for e in entries {
            a.insert(e.chromosome, e.objectives);
        }
        a
    }

    /// Adds a solution unless an existing member dominates or equals it;
    /// members it dominates are evicted. Returns whether it was added.
    pub fn insert(&mut self, chromosome: Chromosome, objectives: Vec<f64>) -> bool {
        if self
            .entries
            .iter()
            .any(|e| e.objectives == objectives || pareto_dominates(&e.objectives, &objectives))
        {
            return false;
        }
        self.entries.retain(|e| !pareto_dominates(&objectives, &e.objectives));
        self.entries.push(ArchiveEntry { chromosome, objectives });
        true
    }

    pub fn extend_feasible(&mut self, individuals: &[EvaluatedIndividual]) {
        for ind in individuals.iter().filter(|i| i.is_feasible()) {
            self.insert(ind.chromosome.clone(), ind.objectives.clone());
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.objectives.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered lexicographically by objective vector.
    pub fn sorted_entries(&self) -> Vec<&ArchiveEntry> {
        let mut v: Vec<&ArchiveEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| lex_cmp(&a.objectives, &b.objectives));
        v
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Offset added to the nadir so boundary points keep a positive volume.
pub const NADIR_OFFSET: f64 = 1e-9;

/// Component-wise worst (largest) value over the front, plus [`NADIR_OFFSET`].
pub fn nadir_point(front: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = front
        .first()
        .ok_or_else(|| Error::Domain("nadir point of an empty front".into()))?;
    let mut nadir = first.clone();
    for p in &front[1..] {
        for (n, &v) in nadir.iter_mut().zip(p) {
            *n = n.max(v);
        }
    }
    Ok(nadir.into_iter().map(|v| v + NADIR_OFFSET).collect())
}

/// Exact hypervolume dominated by `front` and bounded by `reference`
/// (minimisation). Points not strictly better than the reference in every
/// objective contribute nothing.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> f64 {
    let pts: Vec<&[f64]> = front
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x < r))
        .map(|p| p.as_slice())
        .collect();
    hv_sweep(pts, reference, reference.len())
}

/// Sweeps along objective `dim - 1`, summing slab volumes of the
/// (dim-1)-dimensional hypervolume of the points below each slab.
fn hv_sweep(mut pts: Vec<&[f64]>, reference: &[f64], dim: usize) -> f64 {
    if pts.is_empty() || dim == 0 {
        return 0.0;
    }
    match dim {
        1 => reference[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut area = 0.0;
            let mut ceiling = reference[1];
            for p in pts {
                if p[1] < ceiling {
                    area += (reference[0] - p[0]) * (ceiling - p[1]);
                    ceiling = p[1];
                }
            }
            area
        }
        _ => {
            let k = dim - 1;
            pts.sort_by(|a, b| a[k].total_cmp(&b[k]));
            let mut volume = 0.0;
            for i in 0..pts.len() {
                let upper = if i + 1 < pts.len() { pts[i + 1][k] } else { reference[k] };
                let depth = upper - pts[i][k];
                if depth > 0.0 {
                    volume += depth * hv_sweep(pts[..=i].to_vec(), reference, k);
                }
            }
            volume
        }
    }
}

/// Spread of nearest-neighbour distances (Euclidean, objective space):
/// `sqrt(Σ (mean − d_i)² / (n − 1))`. Absent for fewer than two points.
pub fn spacing(front: &[Vec<f64>]) -> Option<f64> {
    let n = front.len();
    if n < 2 {
        return None;
    }
    let nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    front[i]
                        .iter()
                        .zip(&front[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / n as f64;
    let var = nn.iter().map(|d| (mean - d) * (mean - d)).sum::<f64>() / (n - 1) as f64;
    Some(var.sqrt())
}

/// Per-objective `(min, max)` over a set of vectors.
pub fn objective_bounds<'a>(vectors: impl IntoIterator<Item = &'a Vec<f64>>) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut it = vectors.into_iter();
    let first = it.next()?;
    let (mut lo, mut hi) = (first.clone(), first.clone());
    for v in it {
        for k in 0..v.len() {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    Some((lo, hi))
}

/// Min-max maps `v` with the given bounds; zero-range objectives map to 0.
pub fn normalize_with(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let range = hi[k] - lo[k];
            if range > 0.0 {
                (x - lo[k]) / range
            } else {
                0.0
            }
        })
        .collect()
}

pub fn normalize_front(front: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match objective_bounds(front) {
        Some((lo, hi)) => front.iter().map(|p| normalize_with(p, &lo, &hi)).collect(),
        None => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Nadir of each generation's own front.
    PerGeneration,
    /// One nadir over the union of every generation's front.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRow {
    pub generation: usize,
    pub size: usize,
    pub hypervolume: f64,
    pub spacing: Option<f64>,
}

/// Hypervolume and spacing for every generation of a run.
///
/// With `normalize`, objectives are min-max scaled before measuring: by the
/// bounds over all generations for [`ReferenceMode::Fixed`], by each
/// generation's own bounds otherwise.
pub fn indicator_trace(
    fronts: &[(usize, Vec<Vec<f64>>)],
    mode: ReferenceMode,
    normalize: bool,
) -> Vec<IndicatorRow> {
    let global = objective_bounds(fronts.iter().flat_map(|(_, f)| f.iter()));
    fronts
        .iter()
        .map(|(generation, front)| {
            if front.is_empty() {
                return IndicatorRow { generation: *generation, size: 0, hypervolume: 0.0, spacing: None };
            }
            let (lo, hi) = match mode {
                ReferenceMode::Fixed => global.clone().expect("non-empty front"),
                ReferenceMode::PerGeneration => objective_bounds(front).expect("non-empty front"),
            };
            let (pts, reference) = if normalize {
                let pts: Vec<Vec<f64>> = front.iter().map(|p| normalize_with(p, &lo, &hi)).collect();
                let nadir = normalize_with(&hi, &lo, &hi);
                (pts, nadir.into_iter().map(|v| v + NADIR_OFFSET).collect::<Vec<_>>())
            } else {
                (front.clone(), hi.iter().map(|v| v + NADIR_OFFSET).collect())
            };
            IndicatorRow {
                generation: *generation,
                size: front.len(),
                hypervolume: hypervolume(&pts, &reference),
                spacing: spacing(&pts),
            }
        })
        .collect()
}

/// A tier of stations sharing one service radius.
#[derive(Debug, Clone, PartialEq)]
pub struct StationLayer {
    pub stations: PointSet,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Share of communities with demand at or above the threshold that are
    /// covered. Absent when there are none.
    pub high_risk_rate: Option<f64>,
    /// Covered share of total demand.
    pub demand_rate: Option<f64>,
    /// Covered share of communities.
    pub community_rate: Option<f64>,
    /// Share of incidents within reach of any station.
    pub incident_rate: Option<f64>,
    /// Total demand within reach of each station, layer by layer.
    pub workloads: Vec<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Coverage statistics of a combined station system. A point is covered
/// when some station of some layer lies within that layer's radius.
pub fn coverage_report(
    demand: &PointSet,
    values: &[f64],
    layers: &[StationLayer],
    incidents: Option<&PointSet>,
    high_risk_threshold: f64,
) -> Result<CoverageReport> {
    if !(high_risk_threshold >= 0.0) {
        return Err(Error::Domain("high-risk threshold must be non-negative".into()));
    }
    if values.len() != demand.len() {
        return Err(Error::Validation("one demand value per community is required".into()));
    }
    let covered = |p: &crate::geometry::Point| {
        layers
            .iter()
            .any(|l| l.stations.iter().any(|s| s.dist(p) <= l.radius))
    };
    let flags: Vec<bool> = demand.iter().map(covered).collect();
    let (mut hr_total, mut hr_cov, mut dem_total, mut dem_cov) = (0.0, 0.0, 0.0, 0.0);
    for (i, &c) in flags.iter().enumerate() {
        dem_total += values[i];
        if c {
            dem_cov += values[i];
        }
        if values[i] >= high_risk_threshold {
            hr_total += 1.0;
            if c {
                hr_cov += 1.0;
            }
        }
    }
    let n_cov = flags.iter().filter(|&&c| c).count() as f64;
    let incident_rate = incidents.and_then(|inc| {
        let hit = inc.iter().filter(|p| covered(p)).count() as f64;
        ratio(hit, inc.len() as f64)
    });
    let workloads = layers
        .iter()
        .flat_map(|l| {
            l.stations.iter().map(move |s| {
                demand
                    .iter()
                    .zip(values)
                    .filter(|(p, _)| s.dist(p) <= l.radius)
                    .map(|(_, v)| v)
                    .sum()
            })
        })
        .collect();
    Ok(CoverageReport {
        high_risk_rate: ratio(hr_cov, hr_total),
        demand_rate: ratio(dem_cov, dem_total),
        community_rate: ratio(n_cov, demand.len() as f64),
        incident_rate,
        workloads,
    })
}
