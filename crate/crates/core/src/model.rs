//! Domain types for package-delivery instances and the travel matrix.
//!
//! Location id `0` is always the depot; delivery `i` lives at location `i`,
//! so a travel matrix over an instance with `M` deliveries is `(M+1)×(M+1)`.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Index of the depot in every travel matrix.
pub const DEPOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self { id, x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub id: usize,
    pub location: Location,
    /// Kilograms.
    pub weight: f64,
    /// Cubic centimetres.
    pub dimension: f64,
    /// Latest admissible arrival time for top-priority deliveries.
    pub tp_deadline: Option<f64>,
    pub customer_id: u64,
}

impl Delivery {
    pub fn is_top_priority(&self) -> bool {
        self.tp_deadline.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ownership {
    Owned,
    Rental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truck {
    pub id: u32,
    pub ownership: Ownership,
    pub max_weight: f64,
    pub max_dimension: f64,
    pub rental_cost: f64,
}

impl Truck {
    pub fn owned(id: u32, max_weight: f64, max_dimension: f64) -> Self {
        Self {
            id,
            ownership: Ownership::Owned,
            max_weight,
            max_dimension,
            rental_cost: 0.0,
        }
    }

    pub fn rental(id: u32, max_weight: f64, max_dimension: f64, rental_cost: f64) -> Self {
        Self {
            id,
            ownership: Ownership::Rental,
            max_weight,
            max_dimension,
            rental_cost,
        }
    }

    pub fn fits(&self, weight: f64, dimension: f64) -> bool {
        weight <= self.max_weight && dimension <= self.max_dimension
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub depot: Location,
    pub deliveries: Vec<Delivery>,
    pub fleet: Vec<Truck>,
    pub working_day: f64,
    /// Explicit travel matrix; Euclidean distances are used when absent.
    pub travel: Option<TravelMatrix>,
}

impl ProblemInstance {
    /// Delivery with the given id, relying on the dense `1..=M` numbering.
    pub fn delivery(&self, id: usize) -> Option<&Delivery> {
        let d = self.deliveries.get(id.checked_sub(1)?)?;
        (d.id == id).then_some(d)
    }

    pub fn truck(&self, id: u32) -> Option<&Truck> {
        self.fleet.iter().find(|t| t.id == id)
    }

    pub fn location(&self, id: usize) -> Option<Location> {
        if id == DEPOT {
            Some(self.depot)
        } else {
            self.delivery(id).map(|d| d.location)
        }
    }

    pub fn tp_count(&self) -> usize {
        self.deliveries.iter().filter(|d| d.is_top_priority()).count()
    }
}

/// Square matrix of travel costs; each entry is both distance and time.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("travel matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("travel matrix has {found} rows but the instance has {expected} locations")]
    WrongSize { found: usize, expected: usize },
    #[error("travel matrix is asymmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("travel matrix has a negative or non-finite entry at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("travel matrix has a non-zero diagonal entry at {k}")]
    NonZeroDiagonal { k: usize },
}

impl TravelMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    /// Builds a matrix from rows, checking shape, sign, symmetry and diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MatrixError::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
            data.extend_from_slice(r);
        }
        let m = Self { n, data };
        m.check()?;
        Ok(m)
    }

    /// Euclidean distances between the given points, indexed by position.
    pub fn euclidean(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                let d = libm::sqrt(dx * dx + dy * dy);
                m.set(i, j, d);
                m.set(j, i, d);
            }
        }
        m
    }

    fn check(&self) -> Result<(), MatrixError> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(MatrixError::NegativeEntry { i, j });
                }
                if i == j && v != 0.0 {
                    return Err(MatrixError::NonZeroDiagonal { k: i });
                }
                if j > i && v != self.get(j, i) {
                    return Err(MatrixError::AsymmetricMatrix { i, j });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    /// Sub-matrix over `ids`, in the given order.
    pub fn restrict(&self, ids: &[usize]) -> Self {
        let n = ids.len();
        let mut m = Self::zeros(n);
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                m.set(a, b, self.get(i, j));
            }
        }
        m
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Length of the path visiting `stops` in order.
    pub fn path_length(&self, stops: &[usize]) -> f64 {
        stops.windows(2).map(|w| self.get(w[0], w[1])).sum()
    }
}

/// Returns the instance's explicit matrix verbatim, or Euclidean distances
/// over depot and delivery coordinates.
pub fn build_travel_matrix(instance: &ProblemInstance) -> Result<TravelMatrix, MatrixError> {
    let expected = instance.deliveries.len() + 1;
    match &instance.travel {
        Some(m) => {
            if m.len() != expected {
                return Err(MatrixError::WrongSize {
                    found: m.len(),
                    expected,
                });
            }
            m.check()?;
            Ok(m.clone())
        }
        None => {
            let mut points = Vec::with_capacity(expected);
            points.push((instance.depot.x, instance.depot.y));
            points.extend(instance.deliveries.iter().map(|d| (d.location.x, d.location.y)));
            Ok(TravelMatrix::euclidean(&points))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceIssue {
    NonPositiveWorkingDay,
    DepotIdNotZero { id: usize },
    /// Delivery ids must run `1..=M` in order, each at its own location id.
    NonDenseDeliveryIds { position: usize, id: usize },
    NonPositiveWeight { delivery: usize },
    NonPositiveDimension { delivery: usize },
    NonPositiveDeadline { delivery: usize },
    DeadlineBeyondWorkingDay { delivery: usize },
    InvalidTruck { truck: u32, reason: &'static str },
    DuplicateTruckId { truck: u32 },
    /// No truck in the fleet can carry this delivery on its own.
    UnservableDelivery { delivery: usize },
    /// The deadline is shorter than the direct trip from the depot.
    UnreachableDeadline { delivery: usize, travel: f64, deadline: f64 },
    /// Even the direct round trip from the depot exceeds the working day.
    UnreachableWithinWorkingDay { delivery: usize, round_trip: f64 },
    BadTravelMatrix(MatrixError),
}

impl fmt::Display for InstanceIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InstanceIssue::*;
        match self {
            NonPositiveWorkingDay => write!(f, "working day must be positive"),
            DepotIdNotZero { id } => write!(f, "depot id must be 0, found {id}"),
            NonDenseDeliveryIds { position, id } => {
                write!(f, "delivery at position {position} has id {id}, expected {}", position + 1)
            }
            NonPositiveWeight { delivery } => write!(f, "delivery {delivery}: weight must be positive"),
            NonPositiveDimension { delivery } => {
                write!(f, "delivery {delivery}: dimension must be positive")
            }
            NonPositiveDeadline { delivery } => {
                write!(f, "delivery {delivery}: deadline must be positive")
            }
            DeadlineBeyondWorkingDay { delivery } => {
                write!(f, "delivery {delivery}: deadline exceeds the working day")
            }
            InvalidTruck { truck, reason } => write!(f, "truck {truck}: {reason}"),
            DuplicateTruckId { truck } => write!(f, "truck id {truck} is used twice"),
            UnservableDelivery { delivery } => {
                write!(f, "delivery {delivery} does not fit in any truck")
            }
            UnreachableDeadline {
                delivery,
                travel,
                deadline,
            } => write!(
                f,
                "delivery {delivery}: deadline {deadline} is shorter than the direct trip {travel}"
            ),
            UnreachableWithinWorkingDay {
                delivery,
                round_trip,
            } => write!(
                f,
                "delivery {delivery}: depot round trip {round_trip} exceeds the working day"
            ),
            BadTravelMatrix(e) => write!(f, "{e}"),
        }
    }
}

/// Collects every problem with an instance. An empty list means the instance
/// is well formed and no delivery is individually impossible.
pub fn validate_instance(instance: &ProblemInstance) -> Vec<InstanceIssue> {
    let mut issues = Vec::new();
    if !(instance.working_day > 0.0) {
        issues.push(InstanceIssue::NonPositiveWorkingDay);
    }
    if instance.depot.id != DEPOT {
        issues.push(InstanceIssue::DepotIdNotZero { id: instance.depot.id });
    }

    for (k, t) in instance.fleet.iter().enumerate() {
        if instance.fleet[..k].iter().any(|o| o.id == t.id) {
            issues.push(InstanceIssue::DuplicateTruckId { truck: t.id });
        }
        let reason = if !(t.max_weight > 0.0) {
            Some("max_weight must be positive")
        } else if !(t.max_dimension > 0.0) {
            Some("max_dimension must be positive")
        } else if !(t.rental_cost >= 0.0) {
            Some("rental_cost must be non-negative")
        } else if t.ownership == Ownership::Owned && t.rental_cost != 0.0 {
            Some("owned trucks carry no rental cost")
        } else {
            None
        };
        if let Some(reason) = reason {
            issues.push(InstanceIssue::InvalidTruck { truck: t.id, reason });
        }
    }

    let mut dense = true;
    for (pos, d) in instance.deliveries.iter().enumerate() {
        if d.id != pos + 1 || d.location.id != d.id {
            dense = false;
            issues.push(InstanceIssue::NonDenseDeliveryIds { position: pos, id: d.id });
        }
        if !(d.weight > 0.0) {
            issues.push(InstanceIssue::NonPositiveWeight { delivery: d.id });
        }
        if !(d.dimension > 0.0) {
            issues.push(InstanceIssue::NonPositiveDimension { delivery: d.id });
        }
        if let Some(deadline) = d.tp_deadline {
            if !(deadline > 0.0) {
                issues.push(InstanceIssue::NonPositiveDeadline { delivery: d.id });
            } else if deadline > instance.working_day {
                issues.push(InstanceIssue::DeadlineBeyondWorkingDay { delivery: d.id });
            }
        }
        if !instance.fleet.iter().any(|t| t.fits(d.weight, d.dimension)) {
            issues.push(InstanceIssue::UnservableDelivery { delivery: d.id });
        }
    }

    if !dense {
        return issues;
    }
    match build_travel_matrix(instance) {
        Err(e) => issues.push(InstanceIssue::BadTravelMatrix(e)),
        Ok(travel) => {
            for d in &instance.deliveries {
                let out = travel.get(DEPOT, d.id);
                if let Some(deadline) = d.tp_deadline {
                    if out > deadline {
                        issues.push(InstanceIssue::UnreachableDeadline {
                            delivery: d.id,
                            travel: out,
                            deadline,
                        });
                    }
                }
                let round_trip = out + travel.get(d.id, DEPOT);
                if round_trip > instance.working_day {
                    issues.push(InstanceIssue::UnreachableWithinWorkingDay {
                        delivery: d.id,
                        round_trip,
                    });
                }
            }
        }
    }
    issues
}
