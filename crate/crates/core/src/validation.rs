//! Independent re-check of a solution. Loads, arrival times and durations are
//! recomputed from the instance; nothing the solver reported is trusted
//! except the visit sequences themselves.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::cqm::FEASIBILITY_TOLERANCE;
use crate::model::{build_travel_matrix, MatrixError, Ownership, ProblemInstance, Truck, DEPOT};
use crate::orchestrator::{order_vehicles, Q4rpdSolution};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Overweight { truck: u32, load: f64, limit: f64 },
    Oversize { truck: u32, load: f64, limit: f64 },
    LateTp { delivery: usize, arrival: f64, deadline: f64 },
    TpNotServed { delivery: usize },
    RouteTooLong { truck: u32, duration: f64, working_day: f64 },
    TruckReused { truck: u32 },
    QueueSkipped { truck: u32, unused: u32 },
    DeliveryMissing { delivery: usize },
    DeliveryRepeated { delivery: usize, times: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Overweight { truck, load, limit } => write!(f, "truck {truck} carries {load} kg, limit {limit}"),
            Self::Oversize { truck, load, limit } => write!(f, "truck {truck} carries {load} cm3, limit {limit}"),
            Self::LateTp { delivery, arrival, deadline } => {
                write!(f, "delivery {delivery} arrives at {arrival}, deadline {deadline}")
            }
            Self::TpNotServed { delivery } => write!(f, "top-priority delivery {delivery} is never served"),
            Self::RouteTooLong { truck, duration, working_day } => {
                write!(f, "truck {truck} route lasts {duration}, working day {working_day}")
            }
            Self::TruckReused { truck } => write!(f, "truck {truck} has more than one route"),
            Self::QueueSkipped { truck, unused } => {
                write!(f, "truck {truck} is used while truck {unused}, earlier in the queue, is not")
            }
            Self::DeliveryMissing { delivery } => write!(f, "delivery {delivery} is not served"),
            Self::DeliveryRepeated { delivery, times } => write!(f, "delivery {delivery} is served {times} times"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    Pass,
    Fail(Vec<Violation>),
    NotPresent,
}

impl Check {
    fn from_violations(v: Vec<Violation>) -> Self {
        if v.is_empty() {
            Check::Pass
        } else {
            Check::Fail(v)
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Check::Fail(_))
    }

    /// Table-style mark: `✓`, `×` or `−`.
    pub fn mark(&self) -> &'static str {
        match self {
            Check::Pass => "\u{2713}",
            Check::Fail(_) => "\u{d7}",
            Check::NotPresent => "\u{2212}",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FleetAudit {
    Satisfied { used: usize, bound: usize },
    /// More trucks were used than a first-fit-decreasing packing needs.
    Violated { used: usize, bound: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub distance: f64,
    pub rental: f64,
    pub total: f64,
}

/// Figures recomputed for one route.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteAudit {
    pub truck_id: u32,
    pub arrivals: Vec<f64>,
    pub duration: f64,
    pub weight: f64,
    pub dimension: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub r1: Check,
    pub r2: Check,
    pub r3: Check,
    pub p1: Check,
    pub p2: Check,
    pub p3: FleetAudit,
    pub coverage: Check,
    pub cost: CostBreakdown,
    pub routes: Vec<RouteAudit>,
}

impl ValidationReport {
    /// Every hard restriction and preference P1/P2 hold and each delivery is
    /// served once. P3 is not part of this.
    pub fn is_valid(&self) -> bool {
        [&self.r1, &self.r2, &self.r3, &self.p1, &self.p2, &self.coverage]
            .iter()
            .all(|c| !c.is_fail())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("route of truck {truck} does not start and end at the depot")]
    NotClosed { truck: u32 },
    #[error("route of truck {truck} visits unknown location {location}")]
    UnknownLocation { truck: u32, location: usize },
    #[error("route uses unknown truck {0}")]
    UnknownTruck(u32),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn used_trucks<'a>(solution: &Q4rpdSolution, instance: &'a ProblemInstance) -> Vec<&'a Truck> {
    let ids: BTreeSet<u32> = solution.routes.iter().map(|r| r.truck_id).collect();
    instance.fleet.iter().filter(|t| ids.contains(&t.id)).collect()
}

/// Total route distance plus the rental price of every rented truck used.
/// Distances are recomputed from the instance when its travel data is sound.
pub fn account_cost(solution: &Q4rpdSolution, instance: &ProblemInstance) -> CostBreakdown {
    let distance = match build_travel_matrix(instance) {
        Ok(t) if solution.routes.iter().flat_map(|r| &r.stops).all(|&s| s < t.len()) => {
            solution.routes.iter().map(|r| t.path_length(&r.stops)).sum()
        }
        _ => solution.routes.iter().map(|r| r.distance).sum(),
    };
    let rental = used_trucks(solution, instance)
        .iter()
        .filter(|t| t.ownership == Ownership::Rental)
        .map(|t| t.rental_cost)
        .sum();
    CostBreakdown {
        distance,
        rental,
        total: distance + rental,
    }
}

/// Number of trucks a first-fit-decreasing packing of all deliveries (by
/// weight, dimension checked too) needs when trucks are opened largest first.
pub fn fleet_bound(instance: &ProblemInstance) -> usize {
    let Ok(trucks) = order_vehicles(&instance.fleet) else {
        return 0;
    };
    let mut trucks = trucks;
    trucks.sort_by(|a, b| {
        b.max_weight
            .total_cmp(&a.max_weight)
            .then(b.max_dimension.total_cmp(&a.max_dimension))
            .then(a.id.cmp(&b.id))
    });
    let mut items: Vec<(f64, f64)> = instance.deliveries.iter().map(|d| (d.weight, d.dimension)).collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut bins: Vec<(f64, f64)> = Vec::new();
    'item: for (w, d) in items {
        for (k, bin) in bins.iter_mut().enumerate() {
            if bin.0 + w <= trucks[k].max_weight && bin.1 + d <= trucks[k].max_dimension {
                bin.0 += w;
                bin.1 += d;
                continue 'item;
            }
        }
        if bins.len() == trucks.len() {
            return trucks.len() + 1;
        }
        bins.push((w, d));
    }
    bins.len()
}

pub fn validate_solution(solution: &Q4rpdSolution, instance: &ProblemInstance) -> Result<ValidationReport, ValidationError> {
    let travel = build_travel_matrix(instance)?;
    let n_loc = instance.deliveries.len() + 1;
    let mut audits = Vec::with_capacity(solution.routes.len());
    let (mut r1, mut r2, mut r3) = (Vec::new(), Vec::new(), Vec::new());
    let mut served_times = alloc::vec![0usize; n_loc];
    let mut tp_seen = BTreeSet::new();

    for route in &solution.routes {
        let truck = instance
            .truck(route.truck_id)
            .ok_or(ValidationError::UnknownTruck(route.truck_id))?;
        if route.stops.len() < 2 || route.stops.first() != Some(&DEPOT) || route.stops.last() != Some(&DEPOT) {
            return Err(ValidationError::NotClosed { truck: truck.id });
        }
        if let Some(&bad) = route.stops.iter().find(|&&s| s >= n_loc) {
            return Err(ValidationError::UnknownLocation {
                truck: truck.id,
                location: bad,
            });
        }
        let mut clock = 0.0;
        let mut arrivals = alloc::vec![0.0];
        let (mut weight, mut dimension) = (0.0, 0.0);
        for w in route.stops.windows(2) {
            clock += travel.get(w[0], w[1]);
            arrivals.push(clock);
            let Some(d) = instance.delivery(w[1]) else { continue };
            served_times[d.id] += 1;
            weight += d.weight;
            dimension += d.dimension;
            if let Some(deadline) = d.tp_deadline {
                tp_seen.insert(d.id);
                if clock > deadline + FEASIBILITY_TOLERANCE {
                    r2.push(Violation::LateTp {
                        delivery: d.id,
                        arrival: clock,
                        deadline,
                    });
                }
            }
        }
        if weight > truck.max_weight + FEASIBILITY_TOLERANCE {
            r1.push(Violation::Overweight {
                truck: truck.id,
                load: weight,
                limit: truck.max_weight,
            });
        }
        if dimension > truck.max_dimension + FEASIBILITY_TOLERANCE {
            r1.push(Violation::Oversize {
                truck: truck.id,
                load: dimension,
                limit: truck.max_dimension,
            });
        }
        if clock > instance.working_day + FEASIBILITY_TOLERANCE {
            r3.push(Violation::RouteTooLong {
                truck: truck.id,
                duration: clock,
                working_day: instance.working_day,
            });
        }
        audits.push(RouteAudit {
            truck_id: truck.id,
            arrivals,
            duration: clock,
            weight,
            dimension,
        });
    }

    for d in instance.deliveries.iter().filter(|d| d.is_top_priority()) {
        if !tp_seen.contains(&d.id) {
            r2.push(Violation::TpNotServed { delivery: d.id });
        }
    }

    let mut coverage = Vec::new();
    for (id, &times) in served_times.iter().enumerate().skip(1) {
        match times {
            1 => {}
            0 => coverage.push(Violation::DeliveryMissing { delivery: id }),
            _ => coverage.push(Violation::DeliveryRepeated { delivery: id, times }),
        }
    }

    let mut seen = BTreeSet::new();
    let mut p1 = Vec::new();
    for r in &solution.routes {
        if !seen.insert(r.truck_id) {
            p1.push(Violation::TruckReused { truck: r.truck_id });
        }
    }

    // Trucks dropped from the queue for lack of fitting work do not break the
    // prefix.
    let mut p2 = Vec::new();
    if let Ok(queue) = order_vehicles(&instance.fleet) {
        let queue: Vec<u32> = queue
            .iter()
            .map(|t| t.id)
            .filter(|id| !solution.skipped_trucks.contains(id))
            .collect();
        if let Some(last) = queue.iter().rposition(|id| seen.contains(id)) {
            if let Some(&unused) = queue[..last].iter().find(|id| !seen.contains(id)) {
                p2.push(Violation::QueueSkipped {
                    truck: queue[last],
                    unused,
                });
            }
        }
    }

    let used = seen.len();
    let bound = fleet_bound(instance);
    let p3 = if used > bound {
        FleetAudit::Violated { used, bound }
    } else {
        FleetAudit::Satisfied { used, bound }
    };

    Ok(ValidationReport {
        r1: Check::from_violations(r1),
        r2: if instance.tp_count() == 0 {
            Check::NotPresent
        } else {
            Check::from_violations(r2)
        },
        r3: Check::from_violations(r3),
        p1: Check::from_violations(p1),
        p2: Check::from_violations(p2),
        p3,
        coverage: Check::from_violations(coverage),
        cost: account_cost(solution, instance),
        routes: audits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{delivery, two_delivery_instance};
    use crate::model::Location;
    use crate::orchestrator::{run, FullRoute, Q4rpdConfig};
    use alloc::vec;

    fn route(truck_id: u32, stops: Vec<usize>) -> FullRoute {
        FullRoute {
            truck_id,
            stops,
            arrivals: vec![],
            subroutes: vec![],
            distance: 0.0,
            duration: 0.0,
            weight: 0.0,
            dimension: 0.0,
        }
    }

    fn solution(routes: Vec<FullRoute>) -> Q4rpdSolution {
        Q4rpdSolution {
            routes,
            ..Default::default()
        }
    }

    #[test]
    fn hand_built_valid() {
        let inst = two_delivery_instance();
        let rep = validate_solution(&solution(vec![route(1, vec![0, 2, 1, 0])]), &inst).unwrap();
        assert!(rep.is_valid(), "{rep:?}");
        assert_eq!(rep.routes[0].arrivals, vec![0.0, 10.0, 15.0, 20.0]);
        assert_eq!(rep.cost, CostBreakdown { distance: 20.0, rental: 0.0, total: 20.0 });
    }

    #[test]
    fn injected_violations() {
        let mut inst = two_delivery_instance();
        inst.working_day = 15.0;
        let rep = validate_solution(&solution(vec![route(1, vec![0, 1, 2, 0])]), &inst).unwrap();
        assert!(rep.r3.is_fail());
        assert!(!rep.r2.is_fail());
        inst.deliveries[1].tp_deadline = Some(9.0);
        let rep = validate_solution(&solution(vec![route(1, vec![0, 1, 2, 0])]), &inst).unwrap();
        assert_eq!(
            rep.r2,
            Check::Fail(vec![Violation::LateTp { delivery: 2, arrival: 10.0, deadline: 9.0 }])
        );
        inst.fleet[0].max_weight = 120.0;
        let rep = validate_solution(&solution(vec![route(1, vec![0, 1, 2, 0])]), &inst).unwrap();
        assert!(rep.r1.is_fail());
    }

    #[test]
    fn rental_while_owned_idle() {
        let inst = two_delivery_instance();
        let rep = validate_solution(&solution(vec![route(2, vec![0, 2, 1, 0])]), &inst).unwrap();
        assert_eq!(rep.p2, Check::Fail(vec![Violation::QueueSkipped { truck: 2, unused: 1 }]));
        assert_eq!(rep.cost.rental, 50.0);
        let mut skipped = solution(vec![route(2, vec![0, 2, 1, 0])]);
        skipped.skipped_trucks = vec![1];
        assert!(!validate_solution(&skipped, &inst).unwrap().p2.is_fail());
    }

    #[test]
    fn reuse_and_coverage() {
        let inst = two_delivery_instance();
        let rep = validate_solution(&solution(vec![route(1, vec![0, 2, 0]), route(1, vec![0, 2, 0])]), &inst).unwrap();
        assert!(rep.p1.is_fail());
        assert_eq!(
            rep.coverage,
            Check::Fail(vec![
                Violation::DeliveryMissing { delivery: 1 },
                Violation::DeliveryRepeated { delivery: 2, times: 2 }
            ])
        );
    }

    #[test]
    fn malformed() {
        let inst = two_delivery_instance();
        assert_eq!(
            validate_solution(&solution(vec![route(1, vec![1, 0])]), &inst),
            Err(ValidationError::NotClosed { truck: 1 })
        );
        assert_eq!(
            validate_solution(&solution(vec![route(1, vec![0, 5, 0])]), &inst),
            Err(ValidationError::UnknownLocation { truck: 1, location: 5 })
        );
        assert_eq!(
            validate_solution(&solution(vec![route(8, vec![0, 0])]), &inst),
            Err(ValidationError::UnknownTruck(8))
        );
    }

    #[test]
    fn r2_not_present_without_tps() {
        let mut inst = two_delivery_instance();
        inst.deliveries[1].tp_deadline = None;
        let rep = validate_solution(&solution(vec![route(1, vec![0, 1, 2, 0])]), &inst).unwrap();
        assert_eq!(rep.r2, Check::NotPresent);
        assert_eq!(rep.r2.mark(), "\u{2212}");
    }

    #[test]
    fn cost_cases() {
        let mut inst = two_delivery_instance();
        inst.deliveries.clear();
        inst.fleet.clear();
        assert_eq!(account_cost(&solution(vec![]), &inst), CostBreakdown::default());
    }

    #[test]
    fn fleet_bound_packing() {
        let inst = ProblemInstance {
            depot: Location::new(0, 0.0, 0.0),
            deliveries: (1..=4).map(|i| delivery(i, i as f64, 0.0, 400.0, None)).collect(),
            fleet: vec![Truck::owned(1, 1000.0, 1e6), Truck::owned(2, 1000.0, 1e6), Truck::rental(3, 1000.0, 1e6, 1.0)],
            working_day: 480.0,
            travel: None,
        };
        assert_eq!(fleet_bound(&inst), 2);
        let sol = run(&inst, &Q4rpdConfig::default()).unwrap();
        let rep = validate_solution(&sol, &inst).unwrap();
        assert!(rep.is_valid());
        assert_eq!(rep.p3, FleetAudit::Satisfied { used: 2, bound: 2 });
    }
}
