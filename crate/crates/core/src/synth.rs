//! Seeded synthetic instances: a jittered grid road network, communities
//! clustered around a few risk hotspots and pre-placed existing stations.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};
use crate::instance::{DemandRecord, InstanceFile, SCHEMA_VERSION};
use crate::sizing::{generate_candidates, RoadEdge, RoadNetwork, RoadNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub communities: usize,
    /// Explicit macro candidates to sample; zero leaves them to be
    /// generated from the road network.
    pub macro_candidates: usize,
    /// Explicit micro candidates; zero leaves them to be generated.
    pub micro_candidates: usize,
    pub existing: usize,
    /// Side of the square region, km.
    pub side_km: f64,
    pub grid_spacing: f64,
    pub hotspots: usize,
    /// Share of communities placed around a hotspot.
    pub cluster_share: f64,
    /// Radius of the disc around a hotspot, km.
    pub cluster_radius: f64,
    /// Incidents per community.
    pub incident_ratio: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    /// Paper-scale region: 95 communities, 4 existing stations, 58.995 km².
    fn default() -> Self {
        SynthParams {
            communities: 95,
            macro_candidates: 0,
            micro_candidates: 0,
            existing: 4,
            side_km: 58.995f64.sqrt(),
            grid_spacing: 0.6,
            hotspots: 3,
            cluster_share: 0.6,
            cluster_radius: 1.2,
            incident_ratio: 3,
            seed: 0,
        }
    }
}

impl SynthParams {
    /// Small enough for exhaustive oracles: 15 macro and at most 12 micro
    /// candidates.
    pub fn tiny(seed: u64) -> Self {
        SynthParams {
            communities: 12,
            macro_candidates: 15,
            micro_candidates: 12,
            existing: 0,
            side_km: 3.2,
            grid_spacing: 0.5,
            hotspots: 2,
            seed,
            ..Default::default()
        }
    }

    /// The bundled demo scale, at a community density close to the
    /// paper-scale region.
    pub fn demo(seed: u64) -> Self {
        SynthParams {
            communities: 30,
            macro_candidates: 40,
            micro_candidates: 60,
            existing: 1,
            side_km: 5.0,
            grid_spacing: 0.5,
            seed,
            ..Default::default()
        }
    }
}

fn grid_network(p: &SynthParams, rng: &mut ChaCha8Rng) -> RoadNetwork {
    let cells = (p.side_km / p.grid_spacing).round().max(1.0) as u64;
    let step = p.side_km / cells as f64;
    let jitter = 0.2 * step;
    let id = |i: u64, j: u64| i * (cells + 1) + j;
    let mut nodes = Vec::new();
    for i in 0..=cells {
        for j in 0..=cells {
            let on_border = i == 0 || j == 0 || i == cells || j == cells;
            let (dx, dy) = if on_border {
                (0.0, 0.0)
            } else {
                (rng.gen_range(-jitter..jitter), rng.gen_range(-jitter..jitter))
            };
            nodes.push(RoadNode { id: id(i, j), x: i as f64 * step + dx, y: j as f64 * step + dy, terminal: false });
        }
    }
    let mut edges = Vec::new();
    for i in 0..=cells {
        for j in 0..=cells {
            if i < cells {
                edges.push(RoadEdge { id: edges.len() as u64, endpoints: [id(i, j), id(i + 1, j)], polyline: Vec::new() });
            }
            if j < cells {
                edges.push(RoadEdge { id: edges.len() as u64, endpoints: [id(i, j), id(i, j + 1)], polyline: Vec::new() });
            }
        }
    }
    RoadNetwork { nodes, edges }
}

fn clamp(v: f64, side: f64) -> f64 {
    v.clamp(0.0, side)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Sampled pool indices, in ascending order.
fn pick(rng: &mut ChaCha8Rng, pool: usize, n: usize) -> Vec<usize> {
    let mut v = sample(rng, pool, n.min(pool)).into_vec();
    v.sort_unstable();
    v
}

/// Generates an instance. Every draw comes from one generator seeded with
/// `params.seed`, so equal parameters give identical instances.
pub fn generate_synthetic(params: &SynthParams) -> Result<InstanceFile> {
    if params.communities == 0 {
        return Err(Error::Config("synthetic instance needs at least one community".into()));
    }
    if !(0.0..=1.0).contains(&params.cluster_share) {
        return Err(Error::Config("cluster share must lie in [0, 1]".into()));
    }
    if !(params.side_km > 0.0 && params.grid_spacing > 0.0) {
        return Err(Error::Config("side and grid spacing must be positive".into()));
    }
    let side = params.side_km;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let network = grid_network(params, &mut rng);
    let pool = generate_candidates(&network, 0.2, 0.05, true)?;

    let hotspots: Vec<(f64, f64)> = (0..params.hotspots.max(1))
        .map(|_| (rng.gen_range(0.2 * side..0.8 * side), rng.gen_range(0.2 * side..0.8 * side)))
        .collect();
    let mut demand = Vec::with_capacity(params.communities);
    for k in 0..params.communities {
        let (x, y) = if rng.gen_bool(params.cluster_share) {
            let (hx, hy) = hotspots[rng.gen_range(0..hotspots.len())];
            let r = params.cluster_radius * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            (clamp(hx + r * t.cos(), side), clamp(hy + r * t.sin(), side))
        } else {
            (rng.gen_range(0.0..side), rng.gen_range(0.0..side))
        };
        let heat = hotspots
            .iter()
            .map(|&(hx, hy)| (-((x - hx).powi(2) + (y - hy).powi(2)) / (2.0 * 0.8 * 0.8)).exp())
            .fold(0.0, f64::max);
        let accidents = rng.gen_range(0..6) + (40.0 * heat).round() as u64;
        let density = (3000.0 + 30000.0 * heat + rng.gen_range(0.0..5000.0)).round();
        demand.push(DemandRecord {
            id: format!("c{k}"),
            x: round3(x),
            y: round3(y),
            accidents: Some(accidents),
            density: Some(density),
            risk: None,
        });
    }

    // existing stations spread out by rejection
    let mut existing: Vec<Point> = Vec::new();
    let mut tries = 0;
    while existing.len() < params.existing && tries < 10_000 {
        tries += 1;
        let p = &pool[rng.gen_range(0..pool.len())];
        let gap = 0.8 * side / (params.existing as f64).sqrt();
        if existing.iter().all(|e| e.dist(p) >= gap) || tries > 5_000 {
            existing.push(Point::new(format!("fs{}", existing.len()), p.x, p.y));
        }
    }

    let macro_candidates = (params.macro_candidates > 0)
        .then(|| pool.subset(&pick(&mut rng, pool.len(), params.macro_candidates)));

    let micro_candidates = if params.micro_candidates > 0 {
        // each community gets a nearby road point that reaches as few other
        // communities as possible, so a light-load covering site exists
        let mut chosen: Vec<usize> = Vec::new();
        for d in &demand {
            let c = Point::new("", d.x, d.y);
            let crowding = |j: usize| {
                demand
                    .iter()
                    .filter(|o| pool[j].dist(&Point::new("", o.x, o.y)) <= 1.0)
                    .count()
            };
            let near: Vec<usize> = (0..pool.len())
                .filter(|&j| (0.2..=0.9).contains(&pool[j].dist(&c)))
                .collect();
            let j = if near.is_empty() {
                (0..pool.len()).min_by(|&a, &b| pool[a].dist(&c).total_cmp(&pool[b].dist(&c))).expect("pool is non-empty")
            } else {
                let least = near.iter().map(|&j| crowding(j)).min().expect("non-empty");
                let quiet: Vec<usize> = near.into_iter().filter(|&j| crowding(j) == least).collect();
                quiet[rng.gen_range(0..quiet.len())]
            };
            if !chosen.contains(&j) {
                chosen.push(j);
            }
        }
        let rest: Vec<usize> = (0..pool.len()).filter(|j| !chosen.contains(j)).collect();
        let extra = params.micro_candidates.saturating_sub(chosen.len());
        chosen.extend(pick(&mut rng, rest.len(), extra).into_iter().map(|k| rest[k]));
        chosen.truncate(params.micro_candidates);
        chosen.sort_unstable();
        Some(pool.subset(&chosen))
    } else {
        None
    };

    let incidents = (0..params.communities * params.incident_ratio)
        .map(|k| {
            let d = &demand[rng.gen_range(0..demand.len())];
            let r = 0.4 * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Point::new(format!("i{k}"), round3(clamp(d.x + r * t.cos(), side)), round3(clamp(d.y + r * t.sin(), side)))
        })
        .collect();

    let inst = InstanceFile {
        schema_version: SCHEMA_VERSION,
        total_area: Some(side * side),
        demand,
        macro_candidates,
        micro_candidates,
        existing: PointSet(existing),
        road_network: Some(network),
        incidents: Some(PointSet(incidents)),
    };
    inst.validate()?;
    Ok(inst)
}
