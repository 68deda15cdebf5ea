use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};
use crate::sizing::road::{point_at_arc_length, polyline_length, RoadNetwork};

/// Candidate sites drawn from a road network.
///
/// Every junction becomes a candidate (`n<node id>`). With
/// `include_interior`, each edge additionally contributes points every
/// `spacing` km of arc length measured from its lower-id endpoint
/// (`e<edge id>-<k>`), dropping those within `clearance` km of any junction.
pub fn generate_candidates(
    net: &RoadNetwork,
    spacing: f64,
    clearance: f64,
    include_interior: bool,
) -> Result<PointSet> {
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!("candidate spacing must be positive, got {spacing}")));
    }
    if !(clearance >= 0.0) {
        return Err(Error::Domain(format!("junction clearance must be non-negative, got {clearance}")));
    }
    net.validate()?;
    let junctions = net.junctions();
    let mut out: Vec<Point> = junctions
        .iter()
        .map(|n| Point::new(format!("n{}", n.id), n.x, n.y))
        .collect();
    if include_interior {
        let mut edges: Vec<_> = net.edges.iter().collect();
        edges.sort_by_key(|e| e.id);
        for e in edges {
            let geom = net.oriented_geometry(e)?;
            let len = polyline_length(&geom);
            let mut k = 1usize;
            loop {
                let s = k as f64 * spacing;
                if s >= len {
                    break;
                }
                let (x, y) = point_at_arc_length(&geom, s);
                let near_junction = junctions
                    .iter()
                    .any(|j| (j.x - x).hypot(j.y - y) <= clearance);
                if !near_junction {
                    out.push(Point::new(format!("e{}-{}", e.id, k), x, y));
                }
                k += 1;
            }
        }
    }
    PointSet::new(out)
}

/// Keeps the candidates lying in the closed ring `[r_min, r_max]` around at
/// least one centre.
pub fn annulus_filter(
    candidates: &PointSet,
    centers: &PointSet,
    r_min: f64,
    r_max: f64,
) -> Result<PointSet> {
    if !(r_min <= r_max) {
        return Err(Error::Domain(format!("ring bounds out of order: {r_min} > {r_max}")));
    }
    if centers.is_empty() {
        warn!("annulus filter called without centres; no candidate survives");
        return Ok(PointSet::default());
    }
    Ok(PointSet(
        candidates
            .iter()
            .filter(|p| {
                centers.iter().any(|c| {
                    let d = p.dist(c);
                    r_min <= d && d <= r_max
                })
            })
            .cloned()
            .collect(),
    ))
}
