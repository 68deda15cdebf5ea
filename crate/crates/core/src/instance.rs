//! Versioned JSON instance format.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};
use crate::risk::{score_all, RiskInputs, RiskScore};
use crate::sizing::RoadNetwork;

pub const SCHEMA_VERSION: u32 = 1;

/// One community. Either `risk` is given directly or both `accidents` and
/// `density` are, to be ranked and fused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accidents: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    /// Area of the region in km²; overrides the configured total when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_area: Option<f64>,
    pub demand: Vec<DemandRecord>,
    /// Generated from the road network when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_candidates: Option<PointSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_candidates: Option<PointSet>,
    #[serde(default)]
    pub existing: PointSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub road_network: Option<RoadNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incidents: Option<PointSet>,
}

/// Demand values of every community, with the ranks when they were derived
/// from raw attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub points: PointSet,
    pub values: Vec<f64>,
    pub scores: Option<Vec<RiskScore>>,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let inst: InstanceFile = serde_json::from_str(&text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.demand.is_empty() {
            return Err(Error::Validation("instance has no demand points".into()));
        }
        let mut seen = HashSet::new();
        for d in &self.demand {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Validation(format!("duplicate demand id `{}`", d.id)));
            }
        }
        self.demand_points()?;
        for set in [&self.macro_candidates, &self.micro_candidates, &self.incidents].into_iter().flatten() {
            set.validate()?;
        }
        self.existing.validate()?;
        if let Some(net) = &self.road_network {
            net.validate()?;
        }
        if let Some(a) = self.total_area {
            if !(a > 0.0) {
                return Err(Error::Validation(format!("total area must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn demand_points(&self) -> Result<PointSet> {
        PointSet::new(self.demand.iter().map(|d| Point::new(d.id.clone(), d.x, d.y)).collect())
    }

    /// Demand values: given directly, or natural-breaks ranks into
    /// `classes` classes fused with weight `gamma`. Mixing both kinds of
    /// record is an error.
    pub fn demand(&self, classes: usize, gamma: f64) -> Result<Demand> {
        let points = self.demand_points()?;
        if self.demand.iter().all(|d| d.risk.is_some()) {
            let values: Vec<f64> = self.demand.iter().map(|d| d.risk.unwrap_or_default()).collect();
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::Validation(format!("invalid demand value {v}")));
            }
            return Ok(Demand { points, values, scores: None });
        }
        let inputs = self
            .demand
            .iter()
            .map(|d| match (d.accidents, d.density, d.risk) {
                (Some(accidents), Some(density), None) => Ok(RiskInputs { id: d.id.clone(), accidents, density }),
                _ => Err(Error::Validation(format!(
                    "community `{}` needs either `risk` or both `accidents` and `density`, consistently across the instance",
                    d.id
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = score_all(&inputs, classes, gamma)?;
        Ok(Demand { points, values: scores.iter().map(|s| s.demand).collect(), scores: Some(scores) })
    }
}
