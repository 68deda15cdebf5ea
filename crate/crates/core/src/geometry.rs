//! Planar points, distance matrices, coverage sets and station adjacency.
//!
//! All coordinates are planar kilometres. Coverage is boundary inclusive:
//! a site at exactly the service radius still serves the demand point.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sizing::RoadNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Point { id: id.into(), x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An ordered set of identified planar points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet(pub Vec<Point>);

impl PointSet {
    /// Builds a set after checking that ids are unique and coordinates finite.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let set = PointSet(points);
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.0 {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Validation(format!("duplicate point id `{}`", p.id)));
            }
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::Validation(format!("point `{}` has non-finite coordinates", p.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.0.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.0.iter().map(|p| p.id.clone()).collect()
    }

    /// Concatenation of two sets; ids must stay unique.
    pub fn chain(&self, other: &PointSet) -> Result<PointSet> {
        PointSet::new(self.0.iter().chain(other.0.iter()).cloned().collect())
    }

    pub fn subset(&self, indices: &[usize]) -> PointSet {
        PointSet(indices.iter().map(|&i| self.0[i].clone()).collect())
    }
}

impl std::ops::Index<usize> for PointSet {
    type Output = Point;
    fn index(&self, i: usize) -> &Point {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Network,
}

/// Dense row-major distance matrix between two point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceIndex {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub metric: Metric,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    /// `(row, col)` pairs that are unreachable under the network metric.
    pub disconnected: Vec<(usize, usize)>,
}

impl DistanceIndex {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Pairwise distances from every point of `a` to every point of `b`.
///
/// Under [`Metric::Network`] each point is snapped to its nearest road node
/// and the distance is snap offset + shortest path + snap offset; two points
/// snapping to the same node use their straight-line distance. Unreachable
/// pairs are stored as infinity and listed in `disconnected`.
pub fn distance_index(
    a: &PointSet,
    b: &PointSet,
    metric: Metric,
    network: Option<&RoadNetwork>,
) -> Result<DistanceIndex> {
    let (rows, cols) = (a.len(), b.len());
    let mut data = Vec::with_capacity(rows * cols);
    let mut disconnected = Vec::new();
    match metric {
        Metric::Euclidean => {
            for p in a.iter() {
                data.extend(b.iter().map(|q| p.dist(q)));
            }
        }
        Metric::Network => {
            let net = network.ok_or_else(|| {
                Error::Config("network metric requested but no road network supplied".into())
            })?;
            net.validate()?;
            if net.nodes.is_empty() {
                return Err(Error::Config("network metric requires a non-empty road network".into()));
            }
            let (graph, index) = net.graph()?;
            let snap = |p: &Point| {
                let (node, off) = net.nearest_node(p.x, p.y).expect("non-empty network");
                (index[&node.id], off)
            };
            let snapped_b: Vec<_> = b.iter().map(snap).collect();
            let mut cache = HashMap::new();
            for (i, p) in a.iter().enumerate() {
                let (src, off_a) = snap(p);
                let paths = cache
                    .entry(src)
                    .or_insert_with(|| RoadNetwork::shortest_paths(&graph, src));
                for (j, (dst, off_b)) in snapped_b.iter().enumerate() {
                    let d = if *dst == src {
                        p.dist(&b[j])
                    } else {
                        match paths.get(dst) {
                            Some(len) => off_a + len + off_b,
                            None => {
                                disconnected.push((i, j));
                                f64::INFINITY
                            }
                        }
                    };
                    data.push(d);
                }
            }
        }
    }
    Ok(DistanceIndex {
        rows,
        cols,
        data,
        metric,
        row_ids: a.ids(),
        col_ids: b.ids(),
        disconnected,
    })
}

/// `omega[i]` lists the sites within `radius` of demand point `i`; `eta[j]`
/// lists the demand points within `radius` of site `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSets {
    pub radius: f64,
    pub omega: Vec<Vec<usize>>,
    pub eta: Vec<Vec<usize>>,
}

impl CoverageSets {
    pub fn covers(&self, site: usize, demand: usize) -> bool {
        self.eta[site].binary_search(&demand).is_ok()
    }
}

/// Coverage sets from a demand-by-site distance index.
pub fn coverage_sets(d: &DistanceIndex, radius: f64) -> Result<CoverageSets> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("coverage radius must be positive, got {radius}")));
    }
    let mut omega = vec![Vec::new(); d.rows()];
    let mut eta = vec![Vec::new(); d.cols()];
    for (i, om) in omega.iter_mut().enumerate() {
        for (j, et) in eta.iter_mut().enumerate() {
            if d.get(i, j) <= radius {
                om.push(j);
                et.push(i);
            }
        }
    }
    Ok(CoverageSets { radius, omega, eta })
}

/// The station adjacent to `j`: the nearest member of `sited` other than `j`
/// itself, with ties going to the smaller id. `d` must be a square index over
/// the station set.
pub fn nearest_station(j: usize, sited: &[usize], d: &DistanceIndex) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &k in sited {
        if k == j {
            continue;
        }
        let dk = d.get(j, k);
        best = match best {
            None => Some((k, dk)),
            Some((b, db)) => {
                if dk < db || (dk == db && d.col_ids[k] < d.col_ids[b]) {
                    Some((k, dk))
                } else {
                    Some((b, db))
                }
            }
        };
    }
    best.ok_or(Error::NoNeighbor(j))
}

/// Area of the lens formed by two circles of equal radius `r` whose centres
/// are `d` apart.
pub fn lens_area(d: f64, r: f64) -> f64 {
    if d >= 2.0 * r {
        return 0.0;
    }
    if d <= 0.0 {
        return PI * r * r;
    }
    2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
}

/// Smallest centre distance at which two radius-`r` circles overlap by no
/// more than `max_overlap_fraction` of one circle's area. Bisection to
/// 1e-6 km.
pub fn min_separation_for_overlap(r: f64, max_overlap_fraction: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if !(0.0..=1.0).contains(&max_overlap_fraction) {
        return Err(Error::Domain(format!(
            "overlap fraction must lie in [0, 1], got {max_overlap_fraction}"
        )));
    }
    if max_overlap_fraction == 1.0 {
        return Ok(0.0);
    }
    if max_overlap_fraction == 0.0 {
        return Ok(2.0 * r);
    }
    let target = max_overlap_fraction * PI * r * r;
    // lens_area is strictly decreasing on [0, 2r]
    let (mut lo, mut hi) = (0.0, 2.0 * r);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if lens_area(mid, r) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
