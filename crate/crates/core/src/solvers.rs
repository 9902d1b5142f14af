//! Backends for a single SRP.
//!
//! Both backends search route space (ordered subsets of candidates with the
//! destination last) and score with the same scalar objective the CQM
//! encodes. [`solve`] re-checks every returned route against the CQM.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cqm::{CqmModel, FEASIBILITY_TOLERANCE};
use crate::srp::{build_srp_model, SrpError, SrpRoute, SrpSpec, DESTINATION_SLOT, ORIGIN_SLOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    Exact,
    Anneal,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub restarts: u32,
    pub steps: u32,
    /// Defaults to the objective contribution of the longest leg.
    pub initial_temperature: Option<f64>,
    /// Defaults to `1e-3` of the initial temperature.
    pub final_temperature: Option<f64>,
    /// Defaults to [`CqmModel::default_penalty_weight`].
    pub penalty_weight: Option<f64>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            steps: 20_000,
            initial_temperature: None,
            final_temperature: None,
            penalty_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub backend: Backend,
    pub seed: u64,
    pub anneal: AnnealConfig,
    /// Largest candidate count solved by enumeration in `Auto` mode.
    pub exact_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            seed: 0,
            anneal: AnnealConfig::default(),
            exact_threshold: 9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let a = &self.anneal;
        if a.restarts == 0 {
            return Err(SolveError::InvalidConfig("restarts must be at least 1"));
        }
        if a.steps == 0 {
            return Err(SolveError::InvalidConfig("steps must be at least 1"));
        }
        if let Some(t0) = a.initial_temperature {
            if !(t0 > 0.0) {
                return Err(SolveError::InvalidConfig("initial temperature must be positive"));
            }
        }
        if let Some(tf) = a.final_temperature {
            if !(tf > 0.0) {
                return Err(SolveError::InvalidConfig("final temperature must be positive"));
            }
            if let Some(t0) = a.initial_temperature {
                if tf > t0 {
                    return Err(SolveError::InvalidConfig("temperatures must decrease"));
                }
            }
        }
        if let Some(w) = a.penalty_weight {
            if !(w > 0.0) {
                return Err(SolveError::InvalidConfig("penalty weight must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    pub evaluations: u64,
    pub restarts_used: u32,
    /// Best scalar objective seen after each restart (`+∞` until a feasible
    /// route appears).
    pub best_trace: Vec<f64>,
    /// Only measured when built with the `std` feature.
    pub wall_time: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub route: SrpRoute,
    pub objective: f64,
    pub feasible: bool,
    pub backend: Backend,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no feasible route exists for this request")]
    NoFeasibleRoute,
    #[error("{candidates} candidates exceed the exact-search limit of {threshold}")]
    TooLarge { candidates: usize, threshold: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("returned route violates CQM constraint `{0}`")]
    PostValidationFailed(String),
    #[error(transparent)]
    Srp(#[from] SrpError),
}

struct Timer {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Timer {
    fn start() -> Self {
        Timer {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Option<Duration> {
        #[cfg(feature = "std")]
        {
            Some(self.start.elapsed())
        }
        #[cfg(not(feature = "std"))]
        {
            None
        }
    }
}

/// Ranking key: scalar objective, then distance, then visit sequence.
fn compare(a: &(f64, f64, &[usize]), b: &(f64, f64, &[usize])) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then_with(|| a.2.cmp(b.2))
}

fn is_better(route: &SrpRoute, score: f64, best: &Option<(SrpRoute, f64)>) -> bool {
    match best {
        None => true,
        Some((b, bs)) => {
            compare(&(score, route.o1, &route.slots), &(*bs, b.o1, &b.slots)) == Ordering::Less
        }
    }
}

/// Enumerates every ordered subset of candidates, destination last, and
/// returns the best feasible route.
pub fn solve_exact(spec: &SrpSpec, threshold: usize) -> Result<SolveResult, SolveError> {
    spec.validate()?;
    let timer = Timer::start();
    let n = spec.candidates.len();
    if n > threshold {
        return Err(SolveError::TooLarge {
            candidates: n,
            threshold,
        });
    }

    struct Search<'a> {
        spec: &'a SrpSpec,
        path: Vec<usize>,
        used: Vec<bool>,
        best: Option<(SrpRoute, f64)>,
        evaluations: u64,
        dest_weight: f64,
        dest_dimension: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, last: usize, dist: f64, weight: f64, dimension: f64) {
            let spec = self.spec;
            let total = dist + spec.travel.get(last, DESTINATION_SLOT);
            if total <= spec.rt + FEASIBILITY_TOLERANCE {
                self.evaluations += 1;
                let o1 = total;
                let o2 = crate::srp::objective_o2(self.path.len() + 1, spec.m());
                let score = spec.scalar_objective(o1, o2);
                // Routes are emitted in lexicographic slot order, so a full
                // tie on (score, o1) never displaces the incumbent.
                let beats = match &self.best {
                    None => true,
                    Some((b, bs)) => score.total_cmp(bs).then(o1.total_cmp(&b.o1)) == Ordering::Less,
                };
                if beats {
                    let route = SrpRoute::from_middle(spec, &self.path);
                    let s = route.scalar_objective(spec);
                    self.best = Some((route, s));
                }
            }
            for c in 2..=spec.m() {
                if self.used[c] {
                    continue;
                }
                let stop = spec.stop(c);
                let nd = dist + spec.travel.get(last, c);
                let nw = weight + stop.weight;
                let nv = dimension + stop.dimension;
                if nd > spec.rt + FEASIBILITY_TOLERANCE
                    || nw + self.dest_weight > spec.max_weight + FEASIBILITY_TOLERANCE
                    || nv + self.dest_dimension > spec.max_dimension + FEASIBILITY_TOLERANCE
                {
                    continue;
                }
                self.used[c] = true;
                self.path.push(c);
                self.visit(c, nd, nw, nv);
                self.path.pop();
                self.used[c] = false;
            }
        }
    }

    let mut search = Search {
        spec,
        path: Vec::with_capacity(n),
        used: vec![false; spec.m() + 1],
        best: None,
        evaluations: 0,
        dest_weight: spec.destination.weight,
        dest_dimension: spec.destination.dimension,
    };
    if spec.destination.weight <= spec.max_weight + FEASIBILITY_TOLERANCE
        && spec.destination.dimension <= spec.max_dimension + FEASIBILITY_TOLERANCE
    {
        search.visit(ORIGIN_SLOT, 0.0, 0.0, 0.0);
    }
    let evaluations = search.evaluations;
    let (route, objective) = search.best.ok_or(SolveError::NoFeasibleRoute)?;
    Ok(SolveResult {
        route,
        objective,
        feasible: true,
        backend: Backend::Exact,
        stats: SolveStats {
            evaluations,
            restarts_used: 1,
            best_trace: vec![objective],
            wall_time: timer.elapsed(),
        },
    })
}

/// Penalized score of a candidate ordering, plus whether it is feasible.
fn anneal_energy(spec: &SrpSpec, middle: &[usize], penalty: f64) -> (f64, bool) {
    let mut last = ORIGIN_SLOT;
    let mut dist = 0.0;
    let mut weight = spec.destination.weight;
    let mut dimension = spec.destination.dimension;
    for &c in middle {
        dist += spec.travel.get(last, c);
        let s = spec.stop(c);
        weight += s.weight;
        dimension += s.dimension;
        last = c;
    }
    dist += spec.travel.get(last, DESTINATION_SLOT);
    let over = |v: f64, cap: f64| {
        let x = v - cap;
        if x <= FEASIBILITY_TOLERANCE {
            0.0
        } else {
            x
        }
    };
    let (vt, vw, vd) = (
        over(dist, spec.rt),
        over(weight, spec.max_weight),
        over(dimension, spec.max_dimension),
    );
    let o2 = crate::srp::objective_o2(middle.len() + 1, spec.m());
    let score = spec.scalar_objective(dist, o2);
    let violation = vt * vt + vw * vw + vd * vd;
    (score + penalty * violation, violation == 0.0)
}

#[derive(Clone, Copy)]
enum Move {
    Insert,
    Remove,
    Swap,
    Relocate,
}

fn propose(rng: &mut ChaCha8Rng, middle: &[usize], unserved: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut kinds = [Move::Insert; 4];
    let mut k = 0;
    if !unserved.is_empty() {
        kinds[k] = Move::Insert;
        k += 1;
    }
    if !middle.is_empty() {
        kinds[k] = Move::Remove;
        k += 1;
    }
    if middle.len() >= 2 {
        kinds[k] = Move::Swap;
        kinds[k + 1] = Move::Relocate;
        k += 2;
    }
    if k == 0 {
        return None;
    }
    let mut next = middle.to_vec();
    let mut pool = unserved.to_vec();
    match kinds[rng.random_range(0..k)] {
        Move::Insert => {
            let c = pool.swap_remove(rng.random_range(0..pool.len()));
            next.insert(rng.random_range(0..=next.len()), c);
        }
        Move::Remove => {
            let c = next.remove(rng.random_range(0..next.len()));
            pool.push(c);
        }
        Move::Swap => {
            let i = rng.random_range(0..next.len());
            let mut j = rng.random_range(0..next.len() - 1);
            if j >= i {
                j += 1;
            }
            next.swap(i, j);
        }
        Move::Relocate => {
            let c = next.remove(rng.random_range(0..next.len()));
            next.insert(rng.random_range(0..=next.len()), c);
        }
    }
    Some((next, pool))
}

/// Simulated annealing over candidate orderings. Each restart draws from its
/// own ChaCha stream keyed by `(seed, restart)`.
pub fn solve_anneal(spec: &SrpSpec, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let (model, _) = build_srp_model(spec)?;
    anneal_with_model(spec, &model, config)
}

fn anneal_with_model(spec: &SrpSpec, model: &CqmModel, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    config.validate()?;
    let timer = Timer::start();
    let cfg = &config.anneal;
    let penalty = cfg.penalty_weight.unwrap_or_else(|| model.default_penalty_weight());
    let t0 = cfg.initial_temperature.unwrap_or_else(|| {
        let t = spec.weights.distance * spec.distance_scale * spec.travel.max_entry();
        if t > 0.0 {
            t
        } else {
            1.0
        }
    });
    let tf = cfg.final_temperature.unwrap_or(1e-3 * t0).min(t0);
    let cooling = if cfg.steps > 1 {
        libm::pow(tf / t0, 1.0 / (cfg.steps - 1) as f64)
    } else {
        1.0
    };

    let mut best: Option<(SrpRoute, f64)> = None;
    let mut stats = SolveStats::default();
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let mut middle: Vec<usize> = Vec::new();
        let mut unserved: Vec<usize> = (2..=spec.m()).collect();
        let (mut energy, feasible) = anneal_energy(spec, &middle, penalty);
        stats.evaluations += 1;
        if feasible {
            let route = SrpRoute::from_middle(spec, &middle);
            let s = route.scalar_objective(spec);
            if is_better(&route, s, &best) {
                best = Some((route, s));
            }
        }
        let mut temperature = t0;
        for _ in 0..cfg.steps {
            let Some((next, pool)) = propose(&mut rng, &middle, &unserved) else {
                break;
            };
            let (e, feasible) = anneal_energy(spec, &next, penalty);
            stats.evaluations += 1;
            let accept = e <= energy || rng.random::<f64>() < libm::exp(-(e - energy) / temperature);
            if accept {
                middle = next;
                unserved = pool;
                energy = e;
                if feasible {
                    let route = SrpRoute::from_middle(spec, &middle);
                    let s = route.scalar_objective(spec);
                    if is_better(&route, s, &best) {
                        best = Some((route, s));
                    }
                }
            }
            temperature *= cooling;
        }
        stats.restarts_used += 1;
        stats
            .best_trace
            .push(best.as_ref().map_or(f64::INFINITY, |(_, s)| *s));
    }
    stats.wall_time = timer.elapsed();
    let (route, objective) = best.ok_or(SolveError::NoFeasibleRoute)?;
    Ok(SolveResult {
        route,
        objective,
        feasible: true,
        backend: Backend::Anneal,
        stats,
    })
}

/// Backend chosen for `spec` under `config`.
pub fn resolve_backend(spec: &SrpSpec, config: &SolverConfig) -> Backend {
    match config.backend {
        Backend::Auto if spec.candidates.len() <= config.exact_threshold => Backend::Exact,
        Backend::Auto => Backend::Anneal,
        b => b,
    }
}

/// Dispatches to a backend and checks the result against the built CQM.
pub fn solve(spec: &SrpSpec, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    config.validate()?;
    let (model, enc) = build_srp_model(spec)?;
    let result = match resolve_backend(spec, config) {
        Backend::Exact => solve_exact(spec, config.exact_threshold)?,
        _ => anneal_with_model(spec, &model, config)?,
    };
    let report = model
        .check_feasibility(&enc.encode(&result.route.slots))
        .map_err(SrpError::from)?;
    if let Some(bad) = report.violated().next() {
        return Err(SolveError::PostValidationFailed(bad.label.clone()));
    }
    if !report.fixed_violations.is_empty() {
        return Err(SolveError::PostValidationFailed(String::from("fixed origin")));
    }
    if !result.route.within_bounds(spec) {
        return Err(SolveError::PostValidationFailed(String::from("route bounds")));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TravelMatrix;
    use crate::srp::tests::integer_spec;
    use crate::srp::{DistanceScaling, SrpStop};

    fn line_spec(detour: f64, rt: f64) -> SrpSpec {
        // origin 0, destination at distance 7, one candidate off the line.
        let rows = vec![
            vec![0.0, 7.0, detour],
            vec![7.0, 0.0, detour],
            vec![detour, detour, 0.0],
        ];
        let travel = TravelMatrix::from_rows(&rows).unwrap();
        let dest = SrpStop { location: 1, delivery: Some(1), weight: 1.0, dimension: 1.0 };
        let cand = SrpStop { location: 2, delivery: Some(2), weight: 1.0, dimension: 1.0 };
        SrpSpec::new(0, dest, vec![cand], rt, 10.0, 10.0, &travel).unwrap()
    }

    #[test]
    fn zero_candidates_direct_route() {
        let rows = vec![vec![0.0, 7.0], vec![7.0, 0.0]];
        let travel = TravelMatrix::from_rows(&rows).unwrap();
        let spec = SrpSpec::new(0, SrpStop::depot(1), vec![], 10.0, 1.0, 1.0, &travel).unwrap();
        let r = solve_exact(&spec, 9).unwrap();
        assert_eq!(r.route.slots, vec![0, 1]);
        assert_eq!(r.route.o1, 7.0);
    }

    #[test]
    fn single_candidate_both_branches() {
        // Raw distances: serving adds 2·detour − 7 distance and gains ω₂ = 2.
        // detour 4.4: Δo₁ = 1.8 < 2, so serving wins.
        let spec = line_spec(4.4, 100.0);
        let serve = SrpRoute::from_middle(&spec, &[2]).scalar_objective(&spec);
        let skip = SrpRoute::from_middle(&spec, &[]).scalar_objective(&spec);
        assert!(serve < skip);
        assert_eq!(solve_exact(&spec, 9).unwrap().route.slots, vec![0, 2, 1]);
        // detour 5: Δo₁ = 3 > 2, so skipping wins.
        let spec = line_spec(5.0, 100.0);
        let serve = SrpRoute::from_middle(&spec, &[2]).scalar_objective(&spec);
        let skip = SrpRoute::from_middle(&spec, &[]).scalar_objective(&spec);
        assert!(skip < serve);
        assert_eq!(solve_exact(&spec, 9).unwrap().route.slots, vec![0, 1]);
        // With budget scaling any feasible extra delivery wins.
        let spec = line_spec(5.0, 100.0).with_scaling(DistanceScaling::RouteBudget);
        assert_eq!(solve_exact(&spec, 9).unwrap().route.slots, vec![0, 2, 1]);
    }

    #[test]
    fn no_feasible_route() {
        let spec = line_spec(5.0, 6.0);
        assert_eq!(solve_exact(&spec, 9), Err(SolveError::NoFeasibleRoute));
        assert_eq!(solve_anneal(&spec, &SolverConfig::default()).map(|_| ()), Err(SolveError::NoFeasibleRoute));
    }

    #[test]
    fn too_large() {
        let spec = integer_spec(6, 1);
        assert_eq!(solve_exact(&spec, 3).map(|_| ()), Err(SolveError::TooLarge { candidates: 5, threshold: 3 }));
    }

    #[test]
    fn rt_equal_to_direct_leg_allows_only_direct_route() {
        let spec = line_spec(4.0, 7.0).with_scaling(DistanceScaling::RouteBudget);
        assert_eq!(solve_exact(&spec, 9).unwrap().route.slots, vec![0, 1]);
        let cfg = SolverConfig { backend: Backend::Anneal, ..SolverConfig::default() };
        assert_eq!(solve(&spec, &cfg).unwrap().route.slots, vec![0, 1]);
    }

    #[test]
    fn auto_dispatch_threshold() {
        let cfg = SolverConfig {
            anneal: AnnealConfig { restarts: 2, steps: 500, ..AnnealConfig::default() },
            ..SolverConfig::default()
        };
        let small = integer_spec(6, 3);
        assert_eq!(small.candidates.len(), 5);
        assert_eq!(resolve_backend(&small, &cfg), Backend::Exact);
        assert_eq!(solve(&small, &cfg).unwrap().backend, Backend::Exact);
        let big = integer_spec(16, 3);
        assert_eq!(big.candidates.len(), 15);
        assert_eq!(resolve_backend(&big, &cfg), Backend::Anneal);
        assert_eq!(solve(&big, &cfg).unwrap().backend, Backend::Anneal);
    }

    #[test]
    fn anneal_is_deterministic_and_monotone() {
        let spec = integer_spec(12, 9).with_scaling(DistanceScaling::RouteBudget);
        let cfg = SolverConfig {
            backend: Backend::Anneal,
            seed: 42,
            anneal: AnnealConfig { restarts: 6, steps: 3000, ..AnnealConfig::default() },
            ..SolverConfig::default()
        };
        let mut a = solve(&spec, &cfg).unwrap();
        let mut b = solve(&spec, &cfg).unwrap();
        a.stats.wall_time = None;
        b.stats.wall_time = None;
        assert_eq!(a, b);
        assert_eq!(a.stats.restarts_used, 6);
        for w in a.stats.best_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn invalid_config() {
        let mut cfg = SolverConfig::default();
        cfg.anneal.restarts = 0;
        assert!(matches!(cfg.validate(), Err(SolveError::InvalidConfig(_))));
        let mut cfg = SolverConfig::default();
        cfg.anneal.initial_temperature = Some(1.0);
        cfg.anneal.final_temperature = Some(2.0);
        assert!(matches!(cfg.validate(), Err(SolveError::InvalidConfig(_))));
    }

    #[test]
    fn route_score_equals_cqm_score() {
        for seed in 0..30 {
            let spec = integer_spec(7, seed).with_scaling(DistanceScaling::RouteBudget);
            let (model, enc) = build_srp_model(&spec).unwrap();
            let r = solve(&spec, &SolverConfig::default()).unwrap();
            assert_eq!(r.objective, model.evaluate_objective(&enc.encode(&r.route.slots)).unwrap());
        }
    }
}
