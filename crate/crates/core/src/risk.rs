//! Demand values from accident counts and population density.
//!
//! Each attribute is ranked into `k` classes by an exact natural-breaks
//! (Fisher-Jenks) optimisation, and the two ranks are fused with a weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    pub id: String,
    pub accidents: u64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub accident_rank: usize,
    pub density_rank: usize,
    pub demand: f64,
}

/// Result of a natural-breaks run.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Largest value in each class, ascending. Class `c` (1-based) holds the
    /// values in `(upper[c-2], upper[c-1]]`.
    pub upper_bounds: Vec<f64>,
    /// 1-based class of each input value, in input order.
    pub ranks: Vec<usize>,
    /// Total within-class sum of squared deviations.
    pub ssd: f64,
}

/// Rank of `value` under published class upper bounds (ascending).
pub fn rank_for(value: f64, upper_bounds: &[f64]) -> usize {
    upper_bounds
        .iter()
        .position(|&ub| value <= ub)
        .map(|p| p + 1)
        .unwrap_or(upper_bounds.len())
}

/// Exact natural-breaks classification into `k` classes.
///
/// The optimisation runs over the sorted distinct values weighted by their
/// multiplicity, so equal values always land in the same class and the
/// within-class SSD is globally minimal under that restriction.
pub fn natural_breaks(values: &[f64], k: usize) -> Result<Classification> {
    if values.is_empty() {
        return Err(Error::Domain("natural breaks needs at least one value".into()));
    }
    if k == 0 {
        return Err(Error::Domain("class count must be at least 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("natural breaks needs finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((x, c)) if *x == v => *c += 1.0,
            _ => distinct.push((v, 1.0)),
        }
    }
    let m = distinct.len();
    if k > m {
        return Err(Error::Domain(format!(
            "{k} classes requested but only {m} distinct values"
        )));
    }

    // prefix sums of weight, weighted value and weighted square
    let mut w = vec![0.0; m + 1];
    let mut s = vec![0.0; m + 1];
    let mut s2 = vec![0.0; m + 1];
    for (i, &(v, c)) in distinct.iter().enumerate() {
        w[i + 1] = w[i] + c;
        s[i + 1] = s[i] + c * v;
        s2[i + 1] = s2[i] + c * v * v;
    }
    // SSD of distinct[a..b]
    let ssd = |a: usize, b: usize| {
        let n = w[b] - w[a];
        let sum = s[b] - s[a];
        (s2[b] - s2[a] - sum * sum / n).max(0.0)
    };

    // cost[c][j]: best SSD of the first j distinct values in c+1 classes
    let mut cost = vec![vec![f64::INFINITY; m + 1]; k];
    let mut back = vec![vec![0usize; m + 1]; k];
    for j in 1..=m {
        cost[0][j] = ssd(0, j);
    }
    for c in 1..k {
        for j in (c + 1)..=m {
            for split in c..j {
                let v = cost[c - 1][split] + ssd(split, j);
                if v < cost[c][j] {
                    cost[c][j] = v;
                    back[c][j] = split;
                }
            }
        }
    }

    let mut ends = vec![m; k];
    let mut j = m;
    for c in (1..k).rev() {
        j = back[c][j];
        ends[c - 1] = j;
    }
    let upper_bounds: Vec<f64> = ends.iter().map(|&e| distinct[e - 1].0).collect();
    let ranks = values.iter().map(|&v| rank_for(v, &upper_bounds)).collect();
    Ok(Classification { upper_bounds, ranks, ssd: cost[k - 1][m] })
}

/// Weighted fusion of the accident rank and the density rank.
pub fn fuse_risk(accident_rank: f64, density_rank: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("fusion weight must lie in (0, 1), got {gamma}")));
    }
    // equal ranks fuse to exactly that rank
    Ok(density_rank + gamma * (accident_rank - density_rank))
}

/// Ranks both attributes into `k` classes and fuses them.
pub fn score_all(inputs: &[RiskInputs], k: usize, gamma: f64) -> Result<Vec<RiskScore>> {
    for r in inputs {
        if !(r.density.is_finite() && r.density >= 0.0) {
            return Err(Error::Validation(format!(
                "community `{}` has invalid density {}",
                r.id, r.density
            )));
        }
    }
    let accidents: Vec<f64> = inputs.iter().map(|r| r.accidents as f64).collect();
    let density: Vec<f64> = inputs.iter().map(|r| r.density).collect();
    let ra = natural_breaks(&accidents, k)?;
    let rp = natural_breaks(&density, k)?;
    ra.ranks
        .iter()
        .zip(&rp.ranks)
        .map(|(&a, &p)| {
            Ok(RiskScore {
                accident_rank: a,
                density_rank: p,
                demand: fuse_risk(a as f64, p as f64, gamma)?,
            })
        })
        .collect()
}
