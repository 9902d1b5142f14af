//! TSP oracle used to judge route quality.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cqm::FEASIBILITY_TOLERANCE;
use crate::model::{build_travel_matrix, MatrixError, ProblemInstance, TravelMatrix, DEPOT};
use crate::orchestrator::Q4rpdSolution;
use crate::srp::{SrpSpec, DESTINATION_SLOT, ORIGIN_SLOT};

/// Largest node count handed to Held-Karp.
pub const HELD_KARP_LIMIT: usize = 14;

/// Largest candidate pool [`max_servable`] accepts.
pub const MAX_SERVABLE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TourMethod {
    HeldKarp,
    TwoOpt,
}

/// A closed tour: `order` starts and ends at the start node.
#[derive(Debug, Clone, PartialEq)]
pub struct TourResult {
    pub order: Vec<usize>,
    pub length: f64,
    pub method: TourMethod,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("{nodes} nodes exceed the limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("node {0} is outside the travel matrix")]
    UnknownNode(usize),
    #[error("node {0} appears twice")]
    DuplicateNode(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Start node first, then the remaining nodes in the given order.
fn arrange(nodes: &[usize], travel: &TravelMatrix, start: usize) -> Result<Vec<usize>, BaselineError> {
    let mut out = vec![start];
    for &n in nodes {
        if n >= travel.len() {
            return Err(BaselineError::UnknownNode(n));
        }
        if n == start {
            continue;
        }
        if out.contains(&n) {
            return Err(BaselineError::DuplicateNode(n));
        }
        out.push(n);
    }
    if start >= travel.len() {
        return Err(BaselineError::UnknownNode(start));
    }
    Ok(out)
}

fn close(order: Vec<usize>, travel: &TravelMatrix, method: TourMethod) -> TourResult {
    let mut order = order;
    order.push(order[0]);
    TourResult {
        length: travel.path_length(&order),
        order,
        method,
    }
}

/// Held-Karp over subsets. `deadlines` holds `(node, latest arrival)` pairs;
/// a partial path is kept only if every deadline in it is met. Because the
/// shortest prefix also arrives earliest, the pruning stays exact.
fn held_karp(nodes: &[usize], travel: &TravelMatrix, deadlines: &[(usize, f64)]) -> Option<Vec<usize>> {
    let k = nodes.len() - 1;
    if k == 0 {
        return Some(vec![nodes[0]]);
    }
    let limit = |j: usize| {
        deadlines
            .iter()
            .find(|(n, _)| *n == nodes[j + 1])
            .map_or(f64::INFINITY, |&(_, t)| t + FEASIBILITY_TOLERANCE)
    };
    let limits: Vec<f64> = (0..k).map(limit).collect();
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full * k];
    let mut parent = vec![usize::MAX; full * k];
    for j in 0..k {
        let d = travel.get(nodes[0], nodes[j + 1]);
        if d <= limits[j] {
            dp[(1 << j) * k + j] = d;
        }
    }
    for mask in 1..full {
        for j in 0..k {
            let here = dp[mask * k + j];
            if mask & (1 << j) == 0 || !here.is_finite() {
                continue;
            }
            for n in 0..k {
                if mask & (1 << n) != 0 {
                    continue;
                }
                let cand = here + travel.get(nodes[j + 1], nodes[n + 1]);
                let slot = (mask | (1 << n)) * k + n;
                if cand <= limits[n] && cand < dp[slot] {
                    dp[slot] = cand;
                    parent[slot] = j;
                }
            }
        }
    }
    let last = full - 1;
    let mut best: Option<(f64, usize)> = None;
    for j in 0..k {
        let total = dp[last * k + j] + travel.get(nodes[j + 1], nodes[0]);
        if total.is_finite() && best.is_none_or(|(b, _)| total < b) {
            best = Some((total, j));
        }
    }
    let (_, mut j) = best?;
    let mut mask = last;
    let mut rev = Vec::with_capacity(k);
    loop {
        rev.push(nodes[j + 1]);
        let p = parent[mask * k + j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    let mut order = vec![nodes[0]];
    order.extend(rev.into_iter().rev());
    Some(order)
}

/// Optimal closed tour through `nodes` starting at `start`.
pub fn tsp_exact(nodes: &[usize], travel: &TravelMatrix, start: usize) -> Result<TourResult, BaselineError> {
    let nodes = arrange(nodes, travel, start)?;
    if nodes.len() > HELD_KARP_LIMIT {
        return Err(BaselineError::TooLarge {
            nodes: nodes.len(),
            limit: HELD_KARP_LIMIT,
        });
    }
    let order = held_karp(&nodes, travel, &[]).expect("unconstrained tour always exists");
    Ok(close(order, travel, TourMethod::HeldKarp))
}

/// Shortest closed tour whose arrival times meet every `(node, deadline)`
/// pair, or `None` if no tour does.
pub fn tsp_exact_with_deadlines(
    nodes: &[usize],
    travel: &TravelMatrix,
    start: usize,
    deadlines: &[(usize, f64)],
) -> Result<Option<TourResult>, BaselineError> {
    let nodes = arrange(nodes, travel, start)?;
    if nodes.len() > HELD_KARP_LIMIT {
        return Err(BaselineError::TooLarge {
            nodes: nodes.len(),
            limit: HELD_KARP_LIMIT,
        });
    }
    Ok(held_karp(&nodes, travel, deadlines).map(|o| close(o, travel, TourMethod::HeldKarp)))
}

/// Nearest-neighbour tour (ties broken by `seed`) improved by first-improvement
/// 2-opt until no move shortens it.
pub fn tsp_2opt(nodes: &[usize], travel: &TravelMatrix, start: usize, seed: u64) -> Result<TourResult, BaselineError> {
    let nodes = arrange(nodes, travel, start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = vec![start];
    let mut left: Vec<usize> = nodes[1..].to_vec();
    while !left.is_empty() {
        let at = *order.last().expect("non-empty");
        let best = left
            .iter()
            .map(|&n| travel.get(at, n))
            .fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = (0..left.len()).filter(|&i| travel.get(at, left[i]) == best).collect();
        let pick = ties[rng.random_range(0..ties.len())];
        order.push(left.remove(pick));
    }
    order.push(start);
    two_opt(&mut order, travel);
    order.pop();
    Ok(close(order, travel, TourMethod::TwoOpt))
}

fn two_opt(tour: &mut [usize], travel: &TravelMatrix) {
    let n = tour.len();
    'outer: loop {
        for i in 1..n.saturating_sub(2) {
            for j in i + 1..n - 1 {
                let (a, b, c, e) = (tour[i - 1], tour[i], tour[j], tour[j + 1]);
                let delta = travel.get(a, c) + travel.get(b, e) - travel.get(a, b) - travel.get(c, e);
                if delta < -FEASIBILITY_TOLERANCE {
                    tour[i..=j].reverse();
                    continue 'outer;
                }
            }
        }
        break;
    }
}

/// Exact tour when small enough, otherwise 2-opt.
pub fn tsp_best_effort(nodes: &[usize], travel: &TravelMatrix, start: usize, seed: u64) -> Result<TourResult, BaselineError> {
    match tsp_exact(nodes, travel, start) {
        Err(BaselineError::TooLarge { .. }) => tsp_2opt(nodes, travel, start, seed),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteComparison {
    pub truck_id: u32,
    pub route_length: f64,
    pub tour: TourResult,
    /// `(route − tour) / tour`, `0` when the tour has zero length.
    pub deviation: f64,
    pub has_tp: bool,
    /// Shortest tour over the same nodes that meets every TP deadline.
    /// `None` when the route has no TP, or when no tour meets them.
    pub deadline_tour: Option<TourResult>,
    /// No tour of optimal length meets the route's TP deadlines.
    pub oracle_violates_r2: bool,
    /// The oracle tour, in the orientation it was returned, misses a TP
    /// deadline.
    pub tour_misses_deadline: bool,
}

impl RouteComparison {
    pub fn exceeds_oracle(&self) -> bool {
        self.route_length - self.tour.length > FEASIBILITY_TOLERANCE * self.tour.length.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub routes: Vec<RouteComparison>,
    pub total_route: f64,
    pub total_tour: f64,
    pub deviation: f64,
    /// Some tour came from 2-opt rather than Held-Karp.
    pub heuristic: bool,
}

impl ComparisonReport {
    pub fn deviation_percent(&self) -> f64 {
        self.deviation * 100.0
    }
}

fn misses_deadline(order: &[usize], travel: &TravelMatrix, deadlines: &[(usize, f64)]) -> bool {
    let mut clock = 0.0;
    order.windows(2).any(|w| {
        clock += travel.get(w[0], w[1]);
        deadlines
            .iter()
            .any(|&(n, t)| n == w[1] && clock > t + FEASIBILITY_TOLERANCE)
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        (a - b) / b
    } else {
        0.0
    }
}

/// Compares every full route against the TSP optimum over its stops.
pub fn compare_solution(solution: &Q4rpdSolution, instance: &ProblemInstance) -> Result<ComparisonReport, BaselineError> {
    let travel = build_travel_matrix(instance)?;
    let mut report = ComparisonReport::default();
    for route in &solution.routes {
        let served: Vec<usize> = route.served().collect();
        let tour = tsp_best_effort(&served, &travel, DEPOT, u64::from(route.truck_id))?;
        let deadlines: Vec<(usize, f64)> = served
            .iter()
            .filter_map(|&id| instance.delivery(id))
            .filter_map(|d| d.tp_deadline.map(|t| (d.id, t)))
            .collect();
        let has_tp = !deadlines.is_empty();
        let deadline_tour = if has_tp && tour.method == TourMethod::HeldKarp {
            tsp_exact_with_deadlines(&served, &travel, DEPOT, &deadlines)?
        } else {
            None
        };
        let oracle_violates_r2 = has_tp
            && match &deadline_tour {
                Some(t) => t.length - tour.length > FEASIBILITY_TOLERANCE * tour.length.max(1.0),
                None => tour.method == TourMethod::HeldKarp,
            };
        let tour_misses_deadline = misses_deadline(&tour.order, &travel, &deadlines);
        report.heuristic |= tour.method == TourMethod::TwoOpt;
        report.total_route += route.distance;
        report.total_tour += tour.length;
        report.routes.push(RouteComparison {
            truck_id: route.truck_id,
            route_length: route.distance,
            deviation: relative(route.distance, tour.length),
            tour,
            has_tp,
            deadline_tour,
            oracle_violates_r2,
            tour_misses_deadline,
        });
    }
    report.deviation = relative(report.total_route, report.total_tour);
    Ok(report)
}

/// Largest number of candidates any feasible route of `spec` can serve, by
/// dynamic programming over candidate subsets. `None` if no route, not even
/// the direct one, fits.
pub fn max_servable(spec: &SrpSpec) -> Result<Option<usize>, BaselineError> {
    let k = spec.candidates.len();
    if k > MAX_SERVABLE_LIMIT {
        return Err(BaselineError::TooLarge {
            nodes: k,
            limit: MAX_SERVABLE_LIMIT,
        });
    }
    let t = &spec.travel;
    let slot = |j: usize| j + 2;
    let dest = spec.stop(DESTINATION_SLOT);
    let rt = spec.rt + FEASIBILITY_TOLERANCE;
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full * k.max(1)];
    for j in 0..k {
        dp[(1 << j) * k + j] = t.get(ORIGIN_SLOT, slot(j));
    }
    let mut best = (t.get(ORIGIN_SLOT, DESTINATION_SLOT) <= rt
        && dest.weight <= spec.max_weight + FEASIBILITY_TOLERANCE
        && dest.dimension <= spec.max_dimension + FEASIBILITY_TOLERANCE)
        .then_some(0usize);
    for mask in 1..full {
        let (mut w, mut d) = (dest.weight, dest.dimension);
        for j in 0..k {
            if mask & (1 << j) != 0 {
                w += spec.candidates[j].weight;
                d += spec.candidates[j].dimension;
            }
        }
        let fits = w <= spec.max_weight + FEASIBILITY_TOLERANCE && d <= spec.max_dimension + FEASIBILITY_TOLERANCE;
        for j in 0..k {
            let here = dp[mask * k + j];
            if mask & (1 << j) == 0 || here > rt {
                continue;
            }
            if fits && here + t.get(slot(j), DESTINATION_SLOT) <= rt {
                let count = mask.count_ones() as usize;
                best = Some(best.map_or(count, |b| b.max(count)));
            }
            for n in 0..k {
                if mask & (1 << n) == 0 {
                    let i = (mask | (1 << n)) * k + n;
                    dp[i] = dp[i].min(here + t.get(slot(j), slot(n)));
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn unit_triangle() -> TravelMatrix {
        TravelMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap()
    }

    fn random_points(n: usize, seed: u64) -> TravelMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0..50) as f64, rng.random_range(0..50) as f64))
            .collect();
        TravelMatrix::euclidean(&pts)
    }

    fn brute_force(t: &TravelMatrix, nodes: &[usize]) -> f64 {
        fn go(t: &TravelMatrix, path: &mut Vec<usize>, left: &mut Vec<usize>, best: &mut f64) {
            if left.is_empty() {
                let mut closed = path.clone();
                closed.push(path[0]);
                *best = best.min(t.path_length(&closed));
                return;
            }
            for i in 0..left.len() {
                let n = left.remove(i);
                path.push(n);
                go(t, path, left, best);
                path.pop();
                left.insert(i, n);
            }
        }
        let mut best = f64::INFINITY;
        go(t, &mut vec![nodes[0]], &mut nodes[1..].to_vec(), &mut best);
        best
    }

    #[test]
    fn unit_triangle_length() {
        let r = tsp_exact(&[0, 1, 2], &unit_triangle(), 0).unwrap();
        assert_eq!(r.length, 3.0);
        assert_eq!(r.order.first(), Some(&0));
        assert_eq!(r.order.last(), Some(&0));
    }

    #[test]
    fn unit_square_perimeter() {
        let t = TravelMatrix::euclidean(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(tsp_exact(&[0, 1, 2, 3], &t, 0).unwrap().length, 4.0);
        assert_eq!(tsp_2opt(&[0, 1, 2, 3], &t, 0, 5).unwrap().length, 4.0);
    }

    #[test]
    fn eight_nodes_match_enumeration() {
        for seed in 0..5 {
            let t = random_points(8, seed);
            let nodes: Vec<usize> = (0..8).collect();
            let hk = tsp_exact(&nodes, &t, 0).unwrap();
            assert!((hk.length - brute_force(&t, &nodes)).abs() < 1e-9);
            assert!((t.path_length(&hk.order) - hk.length).abs() < 1e-12);
        }
    }

    #[test]
    fn small_tours() {
        let t = unit_triangle();
        assert_eq!(tsp_exact(&[], &t, 0).unwrap().order, vec![0, 0]);
        assert_eq!(tsp_exact(&[2], &t, 0).unwrap().length, 2.0);
        assert_eq!(tsp_exact(&[1, 1], &t, 0), Err(BaselineError::DuplicateNode(1)));
        assert_eq!(tsp_exact(&[7], &t, 0), Err(BaselineError::UnknownNode(7)));
        let big = random_points(16, 1);
        let nodes: Vec<usize> = (0..16).collect();
        assert_eq!(
            tsp_exact(&nodes, &big, 0),
            Err(BaselineError::TooLarge { nodes: 16, limit: 14 })
        );
        assert_eq!(tsp_best_effort(&nodes, &big, 0, 0).unwrap().method, TourMethod::TwoOpt);
    }

    #[test]
    fn deadlines_force_longer_tour() {
        // Visiting the far node 3 first only pays off under its deadline.
        let t = TravelMatrix::euclidean(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (10.0, 1.0), (0.0, 3.0)]);
        let free = tsp_exact(&[1, 2, 3, 4], &t, 0).unwrap();
        let tied = tsp_exact_with_deadlines(&[1, 2, 3, 4], &t, 0, &[(3, 10.055)]).unwrap().unwrap();
        assert_eq!(tied.order[1], 3);
        assert!(tied.length > free.length);
        assert!(tsp_exact_with_deadlines(&[1, 2, 3], &t, 0, &[(3, 10.0)]).unwrap().is_none());
    }

    #[test]
    fn two_opt_deterministic() {
        let t = random_points(20, 3);
        let nodes: Vec<usize> = (0..20).collect();
        assert_eq!(tsp_2opt(&nodes, &t, 0, 9), tsp_2opt(&nodes, &t, 0, 9));
    }

    proptest! {
        #[test]
        fn heuristic_never_beats_exact(seed in 0u64..10_000, n in 3usize..10) {
            let t = random_points(n, seed);
            let nodes: Vec<usize> = (0..n).collect();
            let hk = tsp_exact(&nodes, &t, 0).unwrap();
            let two = tsp_2opt(&nodes, &t, 0, seed).unwrap();
            prop_assert!(two.length >= hk.length - 1e-9);
            let mut visited = two.order[..n].to_vec();
            visited.sort_unstable();
            prop_assert_eq!(visited, nodes);
        }

        #[test]
        fn optimal_order_is_two_opt_fixed_point(seed in 0u64..10_000, n in 4usize..9) {
            let t = random_points(n, seed);
            let nodes: Vec<usize> = (0..n).collect();
            let hk = tsp_exact(&nodes, &t, 0).unwrap();
            let mut order = hk.order.clone();
            two_opt(&mut order, &t);
            prop_assert!((t.path_length(&order) - hk.length).abs() < 1e-9);
        }
    }
}
