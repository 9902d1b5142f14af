//! The iterative routing loop: pick a truck, pick a trajectory type, bound it,
//! solve one SRP, store the result, repeat until every delivery is served.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::model::{
    build_travel_matrix, validate_instance, Delivery, InstanceIssue, MatrixError, Ownership, ProblemInstance,
    TravelMatrix, Truck, DEPOT,
};
use crate::solvers::{resolve_backend, solve, Backend, SolveError, SolverConfig};
use crate::srp::{
    constraint_count, ConstraintMode, DistanceScaling, ObjectiveWeights, SrpError, SrpRoute, SrpSpec, SrpStop,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrajectoryKind {
    Regular,
    DepotTp,
    TpTp,
    TpDepot,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 4] = [Self::Regular, Self::DepotTp, Self::TpTp, Self::TpDepot];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn starts_at_depot(self) -> bool {
        matches!(self, Self::Regular | Self::DepotTp)
    }

    pub fn ends_at_depot(self) -> bool {
        matches!(self, Self::Regular | Self::TpDepot)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Regular => "regular",
            Self::DepotTp => "depot-tp",
            Self::TpTp => "tp-tp",
            Self::TpDepot => "tp-depot",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which reachable TP a mid-route truck heads for next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TpChoice {
    /// First reachable TP in deadline order.
    #[default]
    EarliestDeadline,
    /// Reachable TP closest to the truck's position.
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Q4rpdConfig {
    pub solver: SolverConfig,
    pub weights: ObjectiveWeights,
    pub scaling: DistanceScaling,
    pub constraint_mode: ConstraintMode,
    pub tp_choice: TpChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruckPosition {
    AtDepot,
    AtTpPoint(usize),
}

impl TruckPosition {
    pub fn location(self) -> usize {
        match self {
            Self::AtDepot => DEPOT,
            Self::AtTpPoint(l) => l,
        }
    }
}

/// The SRP that produced a sub-route, kept so results can be re-audited.
#[derive(Debug, Clone, PartialEq)]
pub struct SrpRequest {
    pub origin: usize,
    pub destination: usize,
    pub destination_delivery: Option<usize>,
    /// Candidate deliveries offered to the solver.
    pub pool: Vec<usize>,
    pub rt: f64,
    pub max_weight: f64,
    pub max_dimension: f64,
    pub backend: Backend,
    pub variables: usize,
    pub constraints: usize,
}

impl SrpRequest {
    /// Rebuilds the spec this request was solved from.
    pub fn to_spec(&self, instance: &ProblemInstance, travel: &TravelMatrix, config: &Q4rpdConfig) -> Result<SrpSpec, SrpError> {
        let stop = |id: usize| -> Result<SrpStop, SrpError> {
            let d = instance
                .delivery(id)
                .ok_or(SrpError::SpecInvalid("unknown delivery in request"))?;
            Ok(delivery_stop(d))
        };
        let destination = match self.destination_delivery {
            Some(id) => stop(id)?,
            None => SrpStop::depot(self.destination),
        };
        let candidates = self.pool.iter().map(|&id| stop(id)).collect::<Result<Vec<_>, _>>()?;
        Ok(SrpSpec::new(
            self.origin,
            destination,
            candidates,
            self.rt,
            self.max_weight,
            self.max_dimension,
            travel,
        )?
        .with_weights(config.weights)
        .with_scaling(config.scaling)
        .with_constraint_mode(config.constraint_mode))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubRoute {
    pub kind: TrajectoryKind,
    pub route: SrpRoute,
    pub request: SrpRequest,
    /// Elapsed route time when this sub-route starts.
    pub start_time: f64,
}

impl SubRoute {
    pub fn origin(&self) -> usize {
        self.route.locations[0]
    }

    pub fn destination(&self) -> usize {
        *self.route.locations.last().expect("route has an origin")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruckState {
    pub truck: Truck,
    pub position: TruckPosition,
    pub elapsed: f64,
    pub used_weight: f64,
    pub used_dimension: f64,
    pub accumulated: Vec<SubRoute>,
}

impl TruckState {
    pub fn fresh(truck: Truck) -> Self {
        Self {
            truck,
            position: TruckPosition::AtDepot,
            elapsed: 0.0,
            used_weight: 0.0,
            used_dimension: 0.0,
            accumulated: Vec::new(),
        }
    }
}

/// A complete depot-to-depot route for one truck.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRoute {
    pub truck_id: u32,
    /// Location ids in visit order, depot at both ends.
    pub stops: Vec<usize>,
    /// Arrival time at each stop, `0` at the starting depot.
    pub arrivals: Vec<f64>,
    pub subroutes: Vec<SubRoute>,
    pub distance: f64,
    pub duration: f64,
    pub weight: f64,
    pub dimension: f64,
}

impl FullRoute {
    /// Delivery ids served, in visit order.
    pub fn served(&self) -> impl Iterator<Item = usize> + '_ {
        self.subroutes.iter().flat_map(|s| s.route.served.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionTotals {
    pub distance: f64,
    pub rental_cost: f64,
    pub trucks_used: usize,
    /// Sub-route counts `[regular, depot-tp, tp-tp, tp-depot]`.
    pub mix: [usize; 4],
    /// Sum of SRP variable counts over every model built.
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Q4rpdSolution {
    pub routes: Vec<FullRoute>,
    pub totals: SolutionTotals,
    /// Trucks dropped from the queue without a route because no pending
    /// delivery fit them.
    pub skipped_trucks: Vec<u32>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("the fleet is empty")]
    EmptyFleet,
    #[error("{pending} deliveries remain but no trucks are left")]
    FleetExhausted { pending: usize },
    #[error("no truck can reach top-priority delivery {delivery} in time")]
    DeadlineImpossible { delivery: usize },
    #[error("delivery {0} has no deadline")]
    NotATpDelivery(usize),
    #[error("{kind} trajectory has no time budget left")]
    NonPositiveRt { kind: TrajectoryKind },
    #[error("sub-route {index} does not start where the previous one ended")]
    ChainBroken { index: usize },
    #[error("instance is invalid ({} issues)", .0.len())]
    InvalidInstance(Vec<InstanceIssue>),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("truck {truck}, {kind} trajectory: {source}")]
    Solve {
        truck: u32,
        kind: TrajectoryKind,
        source: SolveError,
    },
    #[error(transparent)]
    Srp(#[from] SrpError),
}

/// Owned trucks first, then rentals; each group by descending
/// `(max_weight, max_dimension)`, ties by ascending id.
pub fn order_vehicles(fleet: &[Truck]) -> Result<Vec<Truck>, OrchestratorError> {
    if fleet.is_empty() {
        return Err(OrchestratorError::EmptyFleet);
    }
    let mut out = fleet.to_vec();
    out.sort_by(|a, b| {
        let group = |t: &Truck| (t.ownership == Ownership::Rental) as u8;
        group(a)
            .cmp(&group(b))
            .then(b.max_weight.total_cmp(&a.max_weight))
            .then(b.max_dimension.total_cmp(&a.max_dimension))
            .then(a.id.cmp(&b.id))
    });
    Ok(out)
}

/// TP deliveries by ascending deadline, then the rest by id.
pub fn order_deliveries(deliveries: &[Delivery]) -> Vec<usize> {
    let mut tps: Vec<&Delivery> = deliveries.iter().filter(|d| d.is_top_priority()).collect();
    tps.sort_by(|a, b| {
        a.tp_deadline
            .unwrap_or(0.0)
            .total_cmp(&b.tp_deadline.unwrap_or(0.0))
            .then(a.id.cmp(&b.id))
    });
    let mut rest: Vec<&Delivery> = deliveries.iter().filter(|d| !d.is_top_priority()).collect();
    rest.sort_by_key(|d| d.id);
    tps.into_iter().chain(rest).map(|d| d.id).collect()
}

pub fn select_vehicle<'a>(queue: impl IntoIterator<Item = &'a Truck>, pending: usize) -> Result<&'a Truck, OrchestratorError> {
    queue
        .into_iter()
        .next()
        .ok_or(OrchestratorError::FleetExhausted { pending })
}

pub fn is_reachable(
    state: &TruckState,
    tp: &Delivery,
    travel: &TravelMatrix,
    working_day: f64,
) -> Result<bool, OrchestratorError> {
    let deadline = tp.tp_deadline.ok_or(OrchestratorError::NotATpDelivery(tp.id))?;
    let fits = state.used_weight + tp.weight <= state.truck.max_weight
        && state.used_dimension + tp.dimension <= state.truck.max_dimension;
    let arrival = state.elapsed + travel.get(state.position.location(), tp.id);
    Ok(fits && arrival <= deadline && arrival + travel.get(tp.id, DEPOT) <= working_day)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    Regular,
    DepotTp(usize),
    TpTp(usize),
    TpDepot,
}

impl RouteChoice {
    pub fn kind(self) -> TrajectoryKind {
        match self {
            Self::Regular => TrajectoryKind::Regular,
            Self::DepotTp(_) => TrajectoryKind::DepotTp,
            Self::TpTp(_) => TrajectoryKind::TpTp,
            Self::TpDepot => TrajectoryKind::TpDepot,
        }
    }

    pub fn tp(self) -> Option<usize> {
        match self {
            Self::DepotTp(t) | Self::TpTp(t) => Some(t),
            _ => None,
        }
    }
}

/// Picks the next trajectory for the active truck (scenarios A–D).
pub fn select_route_type(
    state: &TruckState,
    pending: &[usize],
    instance: &ProblemInstance,
    travel: &TravelMatrix,
    choice: TpChoice,
) -> RouteChoice {
    let tps: Vec<&Delivery> = pending
        .iter()
        .filter_map(|&id| instance.delivery(id))
        .filter(|d| d.is_top_priority())
        .collect();
    match (state.position, tps.first()) {
        (TruckPosition::AtDepot, Some(head)) => RouteChoice::DepotTp(head.id),
        (TruckPosition::AtDepot, None) => RouteChoice::Regular,
        (TruckPosition::AtTpPoint(_), None) => RouteChoice::TpDepot,
        (TruckPosition::AtTpPoint(at), Some(_)) => {
            let reachable = tps
                .iter()
                .filter(|d| is_reachable(state, d, travel, instance.working_day).unwrap_or(false));
            let pick = match choice {
                TpChoice::EarliestDeadline => reachable.map(|d| d.id).next(),
                TpChoice::Nearest => reachable
                    .enumerate()
                    .min_by(|(ia, a), (ib, b)| {
                        travel
                            .get(at, a.id)
                            .total_cmp(&travel.get(at, b.id))
                            .then(ia.cmp(ib))
                    })
                    .map(|(_, d)| d.id),
            };
            pick.map_or(RouteChoice::TpDepot, RouteChoice::TpTp)
        }
    }
}

/// Maximum duration of the next trajectory.
pub fn compute_rt(
    kind: TrajectoryKind,
    state: &TruckState,
    tp_deadline: Option<f64>,
    working_day: f64,
) -> Result<f64, OrchestratorError> {
    let rt = match kind {
        TrajectoryKind::TpTp => tp_deadline.unwrap_or(0.0) - state.elapsed,
        TrajectoryKind::TpDepot => working_day - state.elapsed,
        TrajectoryKind::DepotTp => tp_deadline.unwrap_or(0.0),
        TrajectoryKind::Regular => working_day,
    };
    if rt > 0.0 {
        Ok(rt)
    } else {
        Err(OrchestratorError::NonPositiveRt { kind })
    }
}

pub fn usable_capacity(state: &TruckState) -> (f64, f64) {
    (
        state.truck.max_weight - state.used_weight,
        state.truck.max_dimension - state.used_dimension,
    )
}

fn delivery_stop(d: &Delivery) -> SrpStop {
    SrpStop {
        location: d.id,
        delivery: Some(d.id),
        weight: d.weight,
        dimension: d.dimension,
    }
}

/// Builds the SRP for `choice`. Trajectories ending at a TP keep enough time
/// in reserve to drive back to the depot within the working day.
pub fn build_spec(
    choice: RouteChoice,
    state: &TruckState,
    pending: &[usize],
    instance: &ProblemInstance,
    travel: &TravelMatrix,
    config: &Q4rpdConfig,
) -> Result<SrpSpec, OrchestratorError> {
    let kind = choice.kind();
    let tp = match choice.tp() {
        Some(id) => Some(instance.delivery(id).ok_or(SrpError::SpecInvalid("unknown delivery"))?),
        None => None,
    };
    let mut rt = compute_rt(kind, state, tp.and_then(|d| d.tp_deadline), instance.working_day)?;
    if let Some(tp) = tp {
        rt = rt.min(instance.working_day - state.elapsed - travel.get(tp.id, DEPOT));
        if !(rt > 0.0) {
            return Err(OrchestratorError::NonPositiveRt { kind });
        }
    }
    let (w, d) = usable_capacity(state);
    let destination = tp.map_or(SrpStop::depot(DEPOT), delivery_stop);
    let (room_w, room_d) = (w - destination.weight, d - destination.dimension);
    let candidates = pending
        .iter()
        .filter_map(|&id| instance.delivery(id))
        .filter(|c| !c.is_top_priority() && c.weight <= room_w && c.dimension <= room_d)
        .map(delivery_stop)
        .collect();
    Ok(SrpSpec::new(state.position.location(), destination, candidates, rt, w, d, travel)?
        .with_weights(config.weights)
        .with_scaling(config.scaling)
        .with_constraint_mode(config.constraint_mode))
}

/// Joins a truck's sub-routes into one depot-to-depot route.
pub fn concatenate(truck_id: u32, subroutes: &[SubRoute]) -> Result<FullRoute, OrchestratorError> {
    let first = subroutes.first().ok_or(OrchestratorError::ChainBroken { index: 0 })?;
    if first.origin() != DEPOT {
        return Err(OrchestratorError::ChainBroken { index: 0 });
    }
    for (k, w) in subroutes.windows(2).enumerate() {
        if w[1].origin() != w[0].destination() || w[0].kind.ends_at_depot() {
            return Err(OrchestratorError::ChainBroken { index: k + 1 });
        }
    }
    if subroutes.last().map(SubRoute::destination) != Some(DEPOT) {
        return Err(OrchestratorError::ChainBroken {
            index: subroutes.len() - 1,
        });
    }
    let mut stops = Vec::from([DEPOT]);
    let mut arrivals = Vec::from([0.0]);
    let mut clock = 0.0;
    for s in subroutes {
        for (loc, leg) in s.route.locations[1..].iter().zip(&s.route.legs) {
            clock += leg;
            stops.push(*loc);
            arrivals.push(clock);
        }
    }
    Ok(FullRoute {
        truck_id,
        stops,
        arrivals,
        distance: subroutes.iter().map(|s| s.route.o1).sum(),
        duration: subroutes.iter().map(|s| s.route.duration).sum(),
        weight: subroutes.iter().map(|s| s.route.weight).sum(),
        dimension: subroutes.iter().map(|s| s.route.dimension).sum(),
        subroutes: subroutes.to_vec(),
    })
}

struct Loop<'a> {
    instance: &'a ProblemInstance,
    travel: TravelMatrix,
    config: &'a Q4rpdConfig,
    totals: SolutionTotals,
}

impl Loop<'_> {
    fn attempt(&mut self, choice: RouteChoice, state: &TruckState, pending: &[usize]) -> Result<SubRoute, OrchestratorError> {
        let kind = choice.kind();
        let spec = build_spec(choice, state, pending, self.instance, &self.travel, self.config)?;
        let m = spec.m();
        let variables = (m + 1) * (m + 1);
        let constraints = constraint_count(m, spec.constraint_mode);
        self.totals.variables += variables;
        self.totals.constraints += constraints;
        let result = solve(&spec, &self.config.solver).map_err(|source| OrchestratorError::Solve {
            truck: state.truck.id,
            kind,
            source,
        })?;
        Ok(SubRoute {
            kind,
            request: SrpRequest {
                origin: spec.origin,
                destination: spec.destination.location,
                destination_delivery: spec.destination.delivery,
                pool: spec.candidates.iter().filter_map(|c| c.delivery).collect(),
                rt: spec.rt,
                max_weight: spec.max_weight,
                max_dimension: spec.max_dimension,
                backend: resolve_backend(&spec, &self.config.solver),
                variables,
                constraints,
            },
            route: result.route,
            start_time: state.elapsed,
        })
    }
}

/// Runs the full iterative scheme on a validated instance.
pub fn run(instance: &ProblemInstance, config: &Q4rpdConfig) -> Result<Q4rpdSolution, OrchestratorError> {
    let issues = validate_instance(instance);
    if !issues.is_empty() {
        return Err(OrchestratorError::InvalidInstance(issues));
    }
    let mut lp = Loop {
        instance,
        travel: build_travel_matrix(instance)?,
        config,
        totals: SolutionTotals::default(),
    };
    let mut queue: VecDeque<Truck> = if instance.deliveries.is_empty() {
        VecDeque::new()
    } else {
        order_vehicles(&instance.fleet)?.into()
    };
    let mut pending = order_deliveries(&instance.deliveries);
    let mut active: Option<TruckState> = None;
    let mut routes = Vec::new();
    let mut skipped = Vec::new();
    let mut notes = Vec::new();

    while !pending.is_empty() || active.is_some() {
        let head = select_vehicle(&queue, pending.len())?;
        let mut state = active.take().unwrap_or_else(|| TruckState::fresh(head.clone()));
        let choice = select_route_type(&state, &pending, instance, &lp.travel, config.tp_choice);

        let sub = match lp.attempt(choice, &state, &pending) {
            Ok(sub) => sub,
            Err(OrchestratorError::Solve {
                source: SolveError::NoFeasibleRoute,
                ..
            }) if matches!(choice, RouteChoice::DepotTp(_)) => {
                // Fall back to the next truck in queue order that can make it.
                let tp = choice.tp().unwrap_or_default();
                let mut found = None;
                for k in 1..queue.len() {
                    let alt = TruckState::fresh(queue[k].clone());
                    match lp.attempt(choice, &alt, &pending) {
                        Ok(sub) => {
                            found = Some((k, alt, sub));
                            break;
                        }
                        Err(OrchestratorError::Solve {
                            source: SolveError::NoFeasibleRoute,
                            ..
                        }) => continue,
                        Err(e) => return Err(e),
                    }
                }
                let (k, alt, sub) = found.ok_or(OrchestratorError::DeadlineImpossible { delivery: tp })?;
                let truck = queue.remove(k).expect("index in range");
                notes.push(alloc::format!(
                    "truck {} could not serve TP {tp}; truck {} took it",
                    state.truck.id,
                    truck.id
                ));
                queue.push_front(truck);
                state = alt;
                sub
            }
            Err(e) => return Err(e),
        };

        if choice == RouteChoice::Regular && sub.route.served.is_empty() {
            let truck = queue.pop_front().expect("head exists");
            skipped.push(truck.id);
            notes.push(alloc::format!("truck {} fits no pending delivery and was skipped", truck.id));
            continue;
        }

        state.elapsed += sub.route.duration;
        state.used_weight += sub.route.weight;
        state.used_dimension += sub.route.dimension;
        state.position = match choice.tp() {
            Some(tp) => TruckPosition::AtTpPoint(tp),
            None => TruckPosition::AtDepot,
        };
        pending.retain(|id| !sub.route.served.contains(id));
        lp.totals.mix[sub.kind.index()] += 1;
        let closes = sub.kind.ends_at_depot();
        state.accumulated.push(sub);
        if closes {
            let full = concatenate(state.truck.id, &state.accumulated)?;
            queue.pop_front();
            routes.push(full);
        } else {
            active = Some(state);
        }
    }

    let mut totals = lp.totals;
    totals.trucks_used = routes.len();
    totals.distance = routes.iter().map(|r: &FullRoute| r.distance).sum();
    totals.rental_cost = routes
        .iter()
        .filter_map(|r| instance.truck(r.truck_id))
        .filter(|t| t.ownership == Ownership::Rental)
        .map(|t| t.rental_cost)
        .sum();
    Ok(Q4rpdSolution {
        routes,
        totals,
        skipped_trucks: skipped,
        notes,
    })
}
