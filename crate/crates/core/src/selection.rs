//! Representative plans drawn from a final front: the three objective
//! extremes (A, B, C) and a weighted compromise (D).

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{lex_cmp, objective_bounds, normalize_with, ArchiveEntry, ParetoArchive};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Representative {
    pub label: char,
    /// Position in the input archive.
    pub index: usize,
    pub selected: Vec<usize>,
    pub objectives: Vec<f64>,
    /// Weighted sum of min-max normalised objectives.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativeSet {
    pub a: Representative,
    pub b: Representative,
    pub c: Representative,
    pub d: Representative,
}

impl RepresentativeSet {
    pub fn all(&self) -> [&Representative; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

/// Orders by the key, then by the whole objective vector, then by the
/// selected site indices.
fn tie_break(a: &ArchiveEntry, b: &ArchiveEntry) -> Ordering {
    lex_cmp(&a.objectives, &b.objectives).then_with(|| a.chromosome.selected().cmp(&b.chromosome.selected()))
}

/// Picks the representatives with equal weights.
pub fn pick_representatives(archive: &ParetoArchive) -> Result<RepresentativeSet> {
    let m = archive.entries().first().map_or(0, |e| e.objectives.len());
    pick_weighted(archive, &vec![1.0; m])
}

/// Picks the representatives; `weights` scale the normalised objectives
/// when scoring the compromise.
pub fn pick_weighted(archive: &ParetoArchive, weights: &[f64]) -> Result<RepresentativeSet> {
    let entries = archive.entries();
    if entries.is_empty() {
        return Err(Error::Validation("cannot pick representatives from an empty archive".into()));
    }
    let m = entries[0].objectives.len();
    if m < 3 || entries.iter().any(|e| e.objectives.len() != m) {
        return Err(Error::Validation("archive entries need three objectives".into()));
    }
    if weights.len() != m || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Config(format!("need {m} non-negative weights, got {weights:?}")));
    }
    let (lo, hi) = objective_bounds(entries.iter().map(|e| &e.objectives)).expect("non-empty");
    let scores: Vec<f64> = entries
        .iter()
        .map(|e| {
            normalize_with(&e.objectives, &lo, &hi)
                .iter()
                .zip(weights)
                .map(|(x, w)| x * w)
                .sum()
        })
        .collect();

    let best_by = |key: &dyn Fn(usize) -> f64| -> usize {
        (0..entries.len())
            .min_by(|&i, &j| key(i).total_cmp(&key(j)).then_with(|| tie_break(&entries[i], &entries[j])))
            .expect("non-empty")
    };
    let make = |label: char, index: usize| Representative {
        label,
        index,
        selected: entries[index].chromosome.selected(),
        objectives: entries[index].objectives.clone(),
        score: scores[index],
    };
    Ok(RepresentativeSet {
        a: make('A', best_by(&|i| entries[i].objectives[0])),
        b: make('B', best_by(&|i| entries[i].objectives[1])),
        c: make('C', best_by(&|i| entries[i].objectives[2])),
        d: make('D', best_by(&|i| scores[i])),
    })
}
