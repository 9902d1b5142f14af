//! JSON documents for instances and solutions.

use std::fs;
use std::path::Path;

use q4rpd_core::baseline::ComparisonReport;
use q4rpd_core::model::{Delivery, Location, Ownership, ProblemInstance, TravelMatrix, Truck};
use q4rpd_core::orchestrator::{FullRoute, Q4rpdSolution, SubRoute};
use q4rpd_core::solvers::Backend;
use q4rpd_core::validation::{Check, FleetAudit, ValidationReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Schema(String),
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Write {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
    pub dimension: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tp_deadline: Option<f64>,
    #[serde(default)]
    pub customer_id: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnershipRecord {
    Owned,
    Rental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckRecord {
    pub id: u32,
    pub ownership: OwnershipRecord,
    pub max_weight: f64,
    pub max_dimension: f64,
    #[serde(default)]
    pub rental_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub depot: Point,
    pub working_day: f64,
    pub deliveries: Vec<DeliveryRecord>,
    pub trucks: Vec<TruckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_matrix: Option<Vec<Vec<f64>>>,
}

impl InstanceDoc {
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        Self {
            depot: Point {
                x: instance.depot.x,
                y: instance.depot.y,
            },
            working_day: instance.working_day,
            deliveries: instance
                .deliveries
                .iter()
                .map(|d| DeliveryRecord {
                    id: d.id,
                    x: d.location.x,
                    y: d.location.y,
                    weight: d.weight,
                    dimension: d.dimension,
                    tp_deadline: d.tp_deadline,
                    customer_id: Some(d.customer_id),
                })
                .collect(),
            trucks: instance
                .fleet
                .iter()
                .map(|t| TruckRecord {
                    id: t.id,
                    ownership: match t.ownership {
                        Ownership::Owned => OwnershipRecord::Owned,
                        Ownership::Rental => OwnershipRecord::Rental,
                    },
                    max_weight: t.max_weight,
                    max_dimension: t.max_dimension,
                    rental_cost: t.rental_cost,
                })
                .collect(),
            travel_matrix: instance.travel.as_ref().map(TravelMatrix::rows),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance, IoError> {
        let travel = match self.travel_matrix {
            Some(rows) => Some(TravelMatrix::from_rows(&rows).map_err(|e| IoError::Schema(e.to_string()))?),
            None => None,
        };
        Ok(ProblemInstance {
            depot: Location::new(0, self.depot.x, self.depot.y),
            deliveries: self
                .deliveries
                .into_iter()
                .map(|d| Delivery {
                    id: d.id,
                    location: Location::new(d.id, d.x, d.y),
                    weight: d.weight,
                    dimension: d.dimension,
                    tp_deadline: d.tp_deadline,
                    customer_id: d.customer_id.unwrap_or(d.id as u64),
                })
                .collect(),
            fleet: self
                .trucks
                .into_iter()
                .map(|t| Truck {
                    id: t.id,
                    ownership: match t.ownership {
                        OwnershipRecord::Owned => Ownership::Owned,
                        OwnershipRecord::Rental => Ownership::Rental,
                    },
                    max_weight: t.max_weight,
                    max_dimension: t.max_dimension,
                    rental_cost: t.rental_cost,
                })
                .collect(),
            working_day: self.working_day,
            travel,
        })
    }
}

/// Parses JSON into `T`, returning the paths of any fields that were ignored.
pub fn parse_json_lenient<T: serde::de::DeserializeOwned>(text: &str, path: &str) -> Result<(T, Vec<String>), IoError> {
    let mut ignored = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_ignored::deserialize(de, |p| ignored.push(p.to_string())).map_err(|e| IoError::Parse {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    Ok((value, ignored))
}

pub fn parse_instance(text: &str, path: &str) -> Result<(ProblemInstance, Vec<String>), IoError> {
    let (doc, ignored): (InstanceDoc, _) = parse_json_lenient(text, path)?;
    Ok((doc.into_instance()?, ignored))
}

pub fn read_instance(path: &Path) -> Result<(ProblemInstance, Vec<String>), IoError> {
    parse_instance(&read_text(path)?, &path.display().to_string())
}

pub fn instance_to_json(instance: &ProblemInstance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceDoc::from_instance(instance)).expect("instance serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubRouteDoc {
    pub kind: String,
    pub stops: Vec<usize>,
    pub served: Vec<usize>,
    pub start_time: f64,
    pub duration: f64,
    pub rt: f64,
    pub weight: f64,
    pub dimension: f64,
    pub o1: f64,
    pub o2: f64,
    pub backend: String,
    pub candidates: Vec<usize>,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDoc {
    pub truck_id: u32,
    pub stops: Vec<usize>,
    #[serde(default)]
    pub arrivals: Vec<f64>,
    #[serde(default)]
    pub distance: f64,
    #[serde(default)]
    pub duration: f64,
    #[serde(default)]
    pub weight: f64,
    #[serde(default)]
    pub dimension: f64,
    #[serde(default)]
    pub subroutes: Vec<SubRouteDoc>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TotalsDoc {
    pub distance: f64,
    pub rental_cost: f64,
    pub total_cost: f64,
    pub trucks_used: usize,
    pub mix: [usize; 4],
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationDoc {
    pub r1: String,
    pub r2: String,
    pub r3: String,
    pub p1: String,
    pub p2: String,
    pub p3: String,
    pub coverage: String,
    pub fleet_bound: usize,
    pub distance: f64,
    pub rental_cost: f64,
    pub total_cost: f64,
    pub violations: Vec<String>,
}

fn check_word(c: &Check) -> String {
    match c {
        Check::Pass => "pass",
        Check::Fail(_) => "fail",
        Check::NotPresent => "not-present",
    }
    .to_string()
}

impl ValidationDoc {
    pub fn from_report(r: &ValidationReport) -> Self {
        let mut violations = Vec::new();
        for (name, c) in [
            ("R1", &r.r1),
            ("R2", &r.r2),
            ("R3", &r.r3),
            ("P1", &r.p1),
            ("P2", &r.p2),
            ("coverage", &r.coverage),
        ] {
            if let Check::Fail(v) = c {
                violations.extend(v.iter().map(|v| format!("{name}: {v}")));
            }
        }
        let (p3, bound) = match r.p3 {
            FleetAudit::Satisfied { bound, .. } => ("satisfied", bound),
            FleetAudit::Violated { used, bound } => {
                violations.push(format!("P3: {used} trucks used, packing bound {bound}"));
                ("violated", bound)
            }
        };
        Self {
            r1: check_word(&r.r1),
            r2: check_word(&r.r2),
            r3: check_word(&r.r3),
            p1: check_word(&r.p1),
            p2: check_word(&r.p2),
            p3: p3.to_string(),
            coverage: check_word(&r.coverage),
            fleet_bound: bound,
            distance: r.cost.distance,
            rental_cost: r.cost.rental,
            total_cost: r.cost.total,
            violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDoc {
    pub sum_o1: f64,
    pub sum_tsp: f64,
    pub deviation_percent: f64,
    pub heuristic: bool,
    pub per_route: Vec<RouteComparisonDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteComparisonDoc {
    pub truck_id: u32,
    pub length: f64,
    pub tsp_length: f64,
    pub tsp_order: Vec<usize>,
    pub deviation_percent: f64,
    pub oracle_violates_r2: bool,
    pub tour_misses_deadline: bool,
}

impl ComparisonDoc {
    pub fn from_report(r: &ComparisonReport) -> Self {
        Self {
            sum_o1: r.total_route,
            sum_tsp: r.total_tour,
            deviation_percent: r.deviation_percent(),
            heuristic: r.heuristic,
            per_route: r
                .routes
                .iter()
                .map(|c| RouteComparisonDoc {
                    truck_id: c.truck_id,
                    length: c.route_length,
                    tsp_length: c.tour.length,
                    tsp_order: c.tour.order.clone(),
                    deviation_percent: c.deviation * 100.0,
                    oracle_violates_r2: c.oracle_violates_r2,
                    tour_misses_deadline: c.tour_misses_deadline,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub routes: Vec<RouteDoc>,
    #[serde(default)]
    pub totals: TotalsDoc,
    #[serde(default)]
    pub skipped_trucks: Vec<u32>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationDoc>,
}

pub fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Exact => "exact",
        Backend::Anneal => "anneal",
        Backend::Auto => "auto",
    }
}

fn subroute_doc(s: &SubRoute) -> SubRouteDoc {
    SubRouteDoc {
        kind: s.kind.name().to_string(),
        stops: s.route.locations.clone(),
        served: s.route.served.clone(),
        start_time: s.start_time,
        duration: s.route.duration,
        rt: s.request.rt,
        weight: s.route.weight,
        dimension: s.route.dimension,
        o1: s.route.o1,
        o2: s.route.o2,
        backend: backend_name(s.request.backend).to_string(),
        candidates: s.request.pool.clone(),
        variables: s.request.variables,
        constraints: s.request.constraints,
    }
}

impl SolutionDoc {
    pub fn from_solution(sol: &Q4rpdSolution, validation: Option<&ValidationReport>) -> Self {
        let t = &sol.totals;
        Self {
            routes: sol
                .routes
                .iter()
                .map(|r| RouteDoc {
                    truck_id: r.truck_id,
                    stops: r.stops.clone(),
                    arrivals: r.arrivals.clone(),
                    distance: r.distance,
                    duration: r.duration,
                    weight: r.weight,
                    dimension: r.dimension,
                    subroutes: r.subroutes.iter().map(subroute_doc).collect(),
                })
                .collect(),
            totals: TotalsDoc {
                distance: t.distance,
                rental_cost: t.rental_cost,
                total_cost: t.distance + t.rental_cost,
                trucks_used: t.trucks_used,
                mix: t.mix,
                variables: t.variables,
                constraints: t.constraints,
            },
            skipped_trucks: sol.skipped_trucks.clone(),
            notes: sol.notes.clone(),
            validation: validation.map(ValidationDoc::from_report),
        }
    }

    /// Rebuilds the parts of a solution the validator reads: truck ids, visit
    /// sequences and skipped trucks. Sub-route detail is not restored.
    pub fn to_solution(&self) -> Q4rpdSolution {
        Q4rpdSolution {
            routes: self
                .routes
                .iter()
                .map(|r| FullRoute {
                    truck_id: r.truck_id,
                    stops: r.stops.clone(),
                    arrivals: r.arrivals.clone(),
                    subroutes: Vec::new(),
                    distance: r.distance,
                    duration: r.duration,
                    weight: r.weight,
                    dimension: r.dimension,
                })
                .collect(),
            skipped_trucks: self.skipped_trucks.clone(),
            notes: self.notes.clone(),
            ..Default::default()
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document serializes");
    s.push('\n');
    s
}

pub fn read_solution(path: &Path) -> Result<(SolutionDoc, Vec<String>), IoError> {
    parse_json_lenient(&read_text(path)?, &path.display().to_string())
}
