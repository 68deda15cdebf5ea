//! Analytic sizing: service radii, station counts, separation bounds and
//! candidate sites.

mod candidates;
mod road;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use candidates::{annulus_filter, generate_candidates};
pub use road::{point_at_arc_length, polyline_length, RoadEdge, RoadNetwork, RoadNode};

use crate::error::{Error, Result};
use crate::geometry::min_separation_for_overlap;

/// Every analytic constant of the siting pipeline. Lengths in km, areas in
/// km².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingConfig {
    /// Recommended service area of a first-class station.
    pub area_first_class: f64,
    /// Recommended service area of a second-class station.
    pub area_second_class: f64,
    /// Weight of the first-class area when blending the two.
    pub area_weight: f64,
    /// Distance tolerance added to the separation bounds.
    pub tolerance: f64,
    /// Overrides the blended macro radius when set.
    pub macro_radius: Option<f64>,
    pub micro_radius: f64,
    /// Total area of the region to be served.
    pub total_area: f64,
    /// Number of existing macro stations; taken from the instance when unset.
    pub existing_count: Option<usize>,
    /// Per-macro service area; defaults to the circular area at the macro radius.
    pub macro_service_area: Option<f64>,
    /// Overrides the area-based station count when set.
    pub new_macro_count: Option<usize>,
    /// Setup and operating cost per station (cost model only).
    pub setup_cost: Option<f64>,
    /// Total loss cost of incidents (cost model only).
    pub total_loss_cost: Option<f64>,
    /// Scale of the expected-loss term in the cost model.
    pub cost_scale: f64,
    /// Additive constant of the closed-form cost-model count.
    pub cost_offset: f64,
    /// Largest admissible overlap between adjacent macro service discs, as a
    /// fraction of one disc.
    pub max_overlap: f64,
    /// Spacing of interior road candidates.
    pub candidate_spacing: f64,
    /// Interior road candidates this close to a junction are dropped.
    pub junction_clearance: f64,
}

impl Default for SizingConfig {
    fn default() -> Self {
        SizingConfig {
            area_first_class: 7.0,
            area_second_class: 4.0,
            area_weight: 0.7,
            tolerance: 0.05,
            macro_radius: None,
            micro_radius: 1.0,
            total_area: 58.995,
            existing_count: None,
            macro_service_area: None,
            new_macro_count: None,
            setup_cost: None,
            total_loss_cost: None,
            cost_scale: 1.0,
            cost_offset: 0.0,
            max_overlap: 0.30,
            candidate_spacing: 0.2,
            junction_clearance: 0.05,
        }
    }
}

/// Separation bounds between stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBounds {
    /// Minimum distance between adjacent macro stations.
    pub macro_min: f64,
    /// Maximum distance between adjacent macro stations.
    pub macro_max: f64,
    /// Minimum distance from a micro station to its adjacent macro station.
    pub micro_min: f64,
    /// Maximum distance from a micro station to its adjacent macro station.
    pub micro_max: f64,
}

/// Radius of the square-diamond service area `A = 2P²`.
pub fn radius_from_standard_area(area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::Domain(format!("service area must be positive, got {area}")));
    }
    Ok((area / 2.0).sqrt())
}

/// Macro service radius from the two class areas blended with weight `beta`.
pub fn macro_radius(area_first: f64, area_second: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("area weight must lie in (0, 1), got {beta}")));
    }
    if !(area_first > 0.0 && area_second > 0.0) {
        return Err(Error::Domain(format!(
            "class areas must be positive, got {area_first} and {area_second}"
        )));
    }
    radius_from_standard_area(beta * area_first + (1.0 - beta) * area_second)
}

pub fn circular_service_area(radius: f64) -> f64 {
    PI * radius * radius
}

/// New stations needed so the region area is served, rounded up and never
/// negative.
pub fn station_count_by_area(total_area: f64, existing: usize, service_area: f64) -> Result<usize> {
    if !(service_area > 0.0) {
        return Err(Error::Domain(format!("service area must be positive, got {service_area}")));
    }
    if !(total_area >= 0.0) {
        return Err(Error::Domain(format!("total area must be non-negative, got {total_area}")));
    }
    let raw = ((total_area - existing as f64 * service_area) / service_area).ceil();
    Ok(if raw > 0.0 { raw as usize } else { 0 })
}

/// Station count from the stationary point of the setup-versus-loss cost
/// model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCount {
    pub count: i64,
    /// False when the count is not positive; the model then gives no usable
    /// answer and the area rule has to be used.
    pub applicable: bool,
}

pub fn station_count_by_cost(setup_cost: f64, total_loss_cost: f64, offset: f64) -> Result<CostCount> {
    if !(setup_cost > 0.0 && total_loss_cost > 0.0) {
        return Err(Error::Domain("costs must be positive".into()));
    }
    let count = (total_loss_cost.ln() - setup_cost.ln() + offset).trunc() as i64;
    Ok(CostCount { count, applicable: count > 0 })
}

/// Total cost `n·SC + α·TLC·e^(−n)` of building `n` stations.
pub fn cost_model(n: f64, setup_cost: f64, total_loss_cost: f64, scale: f64) -> f64 {
    n * setup_cost + scale * total_loss_cost * (-n).exp()
}

/// `(minimum, maximum)` separation of adjacent macro stations.
pub fn macro_bounds(r1: f64, tolerance: f64, max_overlap: f64) -> Result<(f64, f64)> {
    if !(r1 > 0.0) {
        return Err(Error::Domain(format!("macro radius must be positive, got {r1}")));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be non-negative, got {tolerance}")));
    }
    Ok((min_separation_for_overlap(r1, max_overlap)?, 2.0 * r1 + tolerance))
}

/// `(minimum, maximum)` distance of a micro station from its adjacent macro
/// station. The minimum is clamped at zero.
pub fn micro_bounds(r1: f64, r2: f64, tolerance: f64) -> Result<(f64, f64)> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be non-negative, got {tolerance}")));
    }
    Ok(((r1 - r2 - tolerance).max(0.0), r1 + r2 + tolerance))
}

/// Every derived sizing quantity, as printed by the `size` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub macro_radius: f64,
    pub micro_radius: f64,
    pub macro_service_area: f64,
    pub existing_count: usize,
    pub new_macro_count: usize,
    pub area_rule_count: usize,
    pub cost_rule: Option<CostCount>,
    pub bounds: DistanceBounds,
}

impl SizingConfig {
    pub fn resolved_macro_radius(&self) -> Result<f64> {
        match self.macro_radius {
            Some(r) if r > 0.0 => Ok(r),
            Some(r) => Err(Error::Domain(format!("macro radius must be positive, got {r}"))),
            None => macro_radius(self.area_first_class, self.area_second_class, self.area_weight),
        }
    }

    /// Resolves every derived quantity. `existing` is the existing-station
    /// count of the instance, used unless the config pins one.
    pub fn resolve(&self, existing: usize) -> Result<SizingReport> {
        let r1 = self.resolved_macro_radius()?;
        let r2 = self.micro_radius;
        let sam = self.macro_service_area.unwrap_or_else(|| circular_service_area(r1));
        let existing_count = self.existing_count.unwrap_or(existing);
        let area_rule_count = station_count_by_area(self.total_area, existing_count, sam)?;
        let cost_rule = match (self.setup_cost, self.total_loss_cost) {
            (Some(sc), Some(tlc)) => Some(station_count_by_cost(sc, tlc, self.cost_offset)?),
            _ => None,
        };
        let (macro_min, macro_max) = macro_bounds(r1, self.tolerance, self.max_overlap)?;
        let (micro_min, micro_max) = micro_bounds(r1, r2, self.tolerance)?;
        Ok(SizingReport {
            macro_radius: r1,
            micro_radius: r2,
            macro_service_area: sam,
            existing_count,
            new_macro_count: self.new_macro_count.unwrap_or(area_rule_count),
            area_rule_count,
            cost_rule,
            bounds: DistanceBounds { macro_min, macro_max, micro_min, micro_max },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_area_radius() {
        assert_eq!(radius_from_standard_area(2.0).unwrap(), 1.0);
        assert!((radius_from_standard_area(7.0).unwrap() - 1.8708286933869707).abs() < 1e-12);
        assert_eq!(radius_from_standard_area(0.5).unwrap(), 0.5);
        assert!(radius_from_standard_area(0.0).is_err());
    }

    #[test]
    fn blended_macro_radius() {
        assert!((macro_radius(7.0, 4.0, 0.7).unwrap() - 1.746).abs() < 5e-4);
        assert_eq!(macro_radius(2.0, 2.0, 0.3).unwrap(), 1.0);
        assert!(macro_radius(4.0, 0.0, 0.5).is_err());
        assert!(macro_radius(4.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn service_area() {
        assert!((circular_service_area(1.746) - 9.58).abs() < 0.01);
        assert_eq!(circular_service_area(1.0), PI);
        assert_eq!(circular_service_area(2.0), 4.0 * PI);
    }

    #[test]
    fn area_rule() {
        assert_eq!(station_count_by_area(58.995, 4, 9.58).unwrap(), 3);
        assert_eq!(station_count_by_area(12.0, 4, 3.0).unwrap(), 0);
        assert_eq!(station_count_by_area(10.0, 0, 3.0).unwrap(), 4);
        assert_eq!(station_count_by_area(5.0, 9, 3.0).unwrap(), 0);
        assert!(station_count_by_area(5.0, 0, 0.0).is_err());
    }

    #[test]
    fn cost_rule() {
        let sc = 3.0;
        let c = station_count_by_cost(sc, sc * 2f64.exp() * (1.0 + 1e-12), 0.0).unwrap();
        assert_eq!(c, CostCount { count: 2, applicable: true });
        let c = station_count_by_cost(100.0, 1.0, 0.0).unwrap();
        assert!(c.count < 0 && !c.applicable);
        let c = station_count_by_cost(5.0, 5.0, 0.9).unwrap();
        assert_eq!(c.count, 0);
        assert!(!c.applicable);
        assert!(station_count_by_cost(0.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn cost_model_minimum_sits_at_closed_form() {
        // f'(n) = SC - TLC e^{-n} vanishes at n = ln TLC - ln SC
        let (sc, tlc) = (2.0, 2.0 * 5f64.exp());
        let f = |n: f64| cost_model(n, sc, tlc, 1.0);
        assert!(f(5.0) < f(4.9) && f(5.0) < f(5.1));
    }

    #[test]
    fn separation_bounds() {
        let (lo, hi) = macro_bounds(1.746, 0.05, 0.3).unwrap();
        assert!((hi - 3.542).abs() < 1e-12);
        assert!((lo - 2.0433).abs() < 1e-4);
        assert_eq!(macro_bounds(1.0, 0.0, 0.3).unwrap().1, 2.0);

        let (lo, hi) = micro_bounds(1.746, 1.0, 0.05).unwrap();
        assert!((lo - 0.696).abs() < 1e-12 && (hi - 2.796).abs() < 1e-12);
        assert_eq!(micro_bounds(1.5, 1.5, 0.0).unwrap(), (0.0, 3.0));
        assert_eq!(micro_bounds(2.0, 1.0, 0.0).unwrap(), (1.0, 3.0));
    }

    #[test]
    fn default_config_resolves() {
        let rep = SizingConfig::default().resolve(4).unwrap();
        assert_eq!(rep.new_macro_count, 3);
        assert!((rep.macro_radius - 1.746).abs() < 5e-4);
        assert_eq!(rep.micro_radius, 1.0);
    }

    proptest! {
        #[test]
        fn radius_increases_with_weight(a2 in 0.5f64..5.0, extra in 0.1f64..5.0, b1 in 0.01f64..0.98, db in 0.001f64..0.01) {
            let a1 = a2 + extra;
            let b2 = (b1 + db).min(0.999);
            prop_assert!(macro_radius(a1, a2, b2).unwrap() > macro_radius(a1, a2, b1).unwrap());
        }

        #[test]
        fn area_count_monotone(tar in 0.0f64..200.0, more in 0.0f64..50.0, ne in 0usize..6, sam in 0.5f64..20.0) {
            prop_assert!(station_count_by_area(tar + more, ne, sam).unwrap() >= station_count_by_area(tar, ne, sam).unwrap());
        }
    }
}
