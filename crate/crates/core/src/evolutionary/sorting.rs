use super::EvaluatedIndividual;

/// Pareto dominance for minimisation: no worse everywhere, better somewhere.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Feasibility-first domination: feasible beats infeasible, the smaller
/// violation wins between infeasible individuals, and Pareto dominance
/// decides between feasible ones.
pub fn constraint_dominates(a: &EvaluatedIndividual, b: &EvaluatedIndividual) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(&a.objectives, &b.objectives),
    }
}

/// Fast non-dominated sorting under an arbitrary strict domination relation.
/// Each front lists indices in ascending order.
pub fn sort_by_relation(n: usize, dominates: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(i, j) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(j, i) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Non-dominated fronts of a set of objective vectors (minimisation).
pub fn fast_nondominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    sort_by_relation(points.len(), |i, j| pareto_dominates(&points[i], &points[j]))
}

/// Crowding distance of every point in a front. Boundary points of each
/// objective get infinity; objectives with zero range add nothing.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let idx = order[w];
            if dist[idx].is_finite() {
                dist[idx] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolutionary::Chromosome;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ind(obj: &[f64], violation: f64) -> EvaluatedIndividual {
        EvaluatedIndividual { chromosome: Chromosome::zeros(0), objectives: obj.to_vec(), violation }
    }

    #[test]
    fn mutually_non_dominated() {
        let f = fast_nondominated_sort(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(f, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn chain_gives_singletons() {
        let f = fast_nondominated_sort(&[vec![2.0, 2.0], vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(f, vec![vec![1], vec![2], vec![0]]);
    }

    /// Front index of each point by repeated peeling with a full pairwise scan.
    fn peel_oracle(points: &[Vec<f64>]) -> Vec<usize> {
        let n = points.len();
        let mut level = vec![usize::MAX; n];
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut k = 0;
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| {
                        let p = &points[j];
                        let q = &points[i];
                        p.iter().zip(q).all(|(a, b)| a <= b) && p.iter().zip(q).any(|(a, b)| a < b)
                    })
                })
                .collect();
            for &i in &front {
                level[i] = k;
            }
            remaining.retain(|i| !front.contains(i));
            k += 1;
        }
        level
    }

    #[test]
    fn random_fronts_match_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..50)
                .map(|_| (0..3).map(|_| rng.gen_range(0..6) as f64).collect())
                .collect();
            let fronts = fast_nondominated_sort(&pts);
            let oracle = peel_oracle(&pts);
            for (k, f) in fronts.iter().enumerate() {
                for &i in f {
                    assert_eq!(oracle[i], k);
                }
            }
        }
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[vec![0.0, 1.0], vec![1.0, 0.0]]).iter().all(|d| d.is_infinite()));
        let d = crowding_distance(&[vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 2.0);
        let same = vec![vec![1.0, 1.0]; 4];
        let d = crowding_distance(&same);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert_eq!(&d[1..3], &[0.0, 0.0]);
    }

    #[test]
    fn constraint_domination_rules() {
        assert!(constraint_dominates(&ind(&[9.0, 9.0, 9.0], 0.0), &ind(&[0.0, 0.0, 0.0], 0.2)));
        assert!(!constraint_dominates(&ind(&[0.0, 0.0, 0.0], 0.2), &ind(&[9.0, 9.0, 9.0], 0.0)));
        assert!(constraint_dominates(&ind(&[5.0], 0.1), &ind(&[1.0], 0.5)));
        assert!(constraint_dominates(&ind(&[1.0, 1.0, 1.0], 0.0), &ind(&[2.0, 2.0, 2.0], 0.0)));
        assert!(!constraint_dominates(&ind(&[1.0, 3.0], 0.0), &ind(&[2.0, 2.0], 0.0)));
    }

    proptest! {
        #[test]
        fn fronts_partition_and_order(pts in prop::collection::vec(prop::collection::vec(0u8..5, 3), 0..40)) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect();
            let fronts = fast_nondominated_sort(&pts);
            let mut all: Vec<usize> = fronts.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
            for (k, fk) in fronts.iter().enumerate() {
                for fj in &fronts[..k] {
                    for &a in fk {
                        for &b in fj {
                            prop_assert!(!pareto_dominates(&pts[a], &pts[b]));
                        }
                    }
                }
            }
        }
    }
}
