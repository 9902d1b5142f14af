//! Single routing problem: one (sub-)route request encoded as a CQM with the
//! node-based codification `x[i][p] = 1` iff slot `i` is visited at position
//! `p`.
//!
//! Slot layout: `0` is the origin, `1` the destination, `2..=M` the candidate
//! deliveries. A depot destination reached from a depot origin is its own slot
//! at zero distance from slot 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cqm::{Assignment, Constraint, CqmError, CqmModel, QuadraticExpr, Sense, FEASIBILITY_TOLERANCE};
use crate::model::TravelMatrix;

pub const ORIGIN_SLOT: usize = 0;
pub const DESTINATION_SLOT: usize = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SrpError {
    #[error("invalid SRP specification: {0}")]
    SpecInvalid(&'static str),
    #[error("destination is not the last visited position")]
    DestinationNotLast,
    #[error("assignment does not describe a feasible route: {0}")]
    InfeasibleAssignment(&'static str),
    #[error(transparent)]
    Cqm(#[from] CqmError),
}

/// Weights of the distance objective (ω₁) and the destination-position
/// objective (ω₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub distance: f64,
    pub destination: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            distance: 1.0,
            destination: 2.0,
        }
    }
}

/// How the time, weight and dimension bounds are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    /// One constraint bounding the route total for each resource.
    #[default]
    Aggregate,
    /// One time bound per leg position and one load bound per slot.
    PerTerm,
}

/// Multiplier applied to distances inside the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceScaling {
    /// Distances enter the objective unchanged.
    Raw,
    /// Distances are divided by the smallest power of two `≥ rt`, so any
    /// feasible route contributes at most `ω₁` and one extra delivery always
    /// outweighs any distance difference when `ω₂ > ω₁`.
    #[default]
    RouteBudget,
}

impl DistanceScaling {
    pub fn factor(self, rt: f64) -> f64 {
        match self {
            DistanceScaling::Raw => 1.0,
            DistanceScaling::RouteBudget => 1.0 / power_of_two_at_least(rt),
        }
    }
}

fn power_of_two_at_least(x: f64) -> f64 {
    let mut p = 1.0;
    while p < x {
        p *= 2.0;
    }
    while p * 0.5 >= x && p > f64::MIN_POSITIVE {
        p *= 0.5;
    }
    p
}

/// A stop that may be visited by the route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrpStop {
    pub location: usize,
    /// Delivery dropped at this stop; `None` for the depot.
    pub delivery: Option<usize>,
    pub weight: f64,
    pub dimension: f64,
}

impl SrpStop {
    pub fn depot(location: usize) -> Self {
        Self {
            location,
            delivery: None,
            weight: 0.0,
            dimension: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrpSpec {
    pub origin: usize,
    pub destination: SrpStop,
    pub candidates: Vec<SrpStop>,
    /// Maximum route duration.
    pub rt: f64,
    pub max_weight: f64,
    pub max_dimension: f64,
    pub weights: ObjectiveWeights,
    pub distance_scale: f64,
    pub constraint_mode: ConstraintMode,
    /// Slot-indexed travel costs, `(M+1)×(M+1)`.
    pub travel: TravelMatrix,
}

impl SrpSpec {
    /// Assembles a spec, restricting `travel` (indexed by location id) to the
    /// spec's slots. Uses default weights, raw distances and aggregate bounds.
    pub fn new(
        origin: usize,
        destination: SrpStop,
        candidates: Vec<SrpStop>,
        rt: f64,
        max_weight: f64,
        max_dimension: f64,
        travel: &TravelMatrix,
    ) -> Result<Self, SrpError> {
        let mut ids = Vec::with_capacity(candidates.len() + 2);
        ids.push(origin);
        ids.push(destination.location);
        ids.extend(candidates.iter().map(|c| c.location));
        if ids.iter().any(|&i| i >= travel.len()) {
            return Err(SrpError::SpecInvalid("location outside the travel matrix"));
        }
        let spec = Self {
            origin,
            destination,
            candidates,
            rt,
            max_weight,
            max_dimension,
            weights: ObjectiveWeights::default(),
            distance_scale: 1.0,
            constraint_mode: ConstraintMode::Aggregate,
            travel: travel.restrict(&ids),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_weights(mut self, weights: ObjectiveWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_scaling(mut self, scaling: DistanceScaling) -> Self {
        self.distance_scale = scaling.factor(self.rt);
        self
    }

    pub fn with_constraint_mode(mut self, mode: ConstraintMode) -> Self {
        self.constraint_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), SrpError> {
        if !(self.rt > 0.0) || !self.rt.is_finite() {
            return Err(SrpError::SpecInvalid("rt must be positive"));
        }
        if !(self.max_weight >= 0.0) || !(self.max_dimension >= 0.0) {
            return Err(SrpError::SpecInvalid("capacities must be non-negative"));
        }
        if !(self.distance_scale > 0.0) {
            return Err(SrpError::SpecInvalid("distance scale must be positive"));
        }
        if !self.weights.distance.is_finite() || !self.weights.destination.is_finite() {
            return Err(SrpError::SpecInvalid("objective weights must be finite"));
        }
        if self.travel.len() != self.m() + 1 {
            return Err(SrpError::SpecInvalid("travel matrix does not match the slot count"));
        }
        Ok(())
    }

    /// Slot count `M`: candidates plus the destination.
    pub fn m(&self) -> usize {
        self.candidates.len() + 1
    }

    pub fn stop(&self, slot: usize) -> SrpStop {
        match slot {
            ORIGIN_SLOT => SrpStop::depot(self.origin),
            DESTINATION_SLOT => self.destination,
            k => self.candidates[k - 2],
        }
    }

    fn slot_weight(&self, slot: usize) -> f64 {
        if slot == ORIGIN_SLOT {
            0.0
        } else {
            self.stop(slot).weight
        }
    }

    fn slot_dimension(&self, slot: usize) -> f64 {
        if slot == ORIGIN_SLOT {
            0.0
        } else {
            self.stop(slot).dimension
        }
    }

    /// `ω₁·s·o₁ + ω₂·o₂`, with `s` the distance scale.
    pub fn scalar_objective(&self, o1: f64, o2: f64) -> f64 {
        self.weights.distance * self.distance_scale * o1 + self.weights.destination * o2
    }
}

/// Maps `(slot, position)` pairs to CQM variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrpEncoding {
    m: usize,
}

impl SrpEncoding {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_vars(&self) -> usize {
        (self.m + 1) * (self.m + 1)
    }

    #[inline]
    pub fn index(&self, slot: usize, position: usize) -> usize {
        slot * (self.m + 1) + position
    }

    /// Fixes implied by starting at the origin: `x[0][0] = 1`, the origin at
    /// no other position and no other slot at position 0.
    pub fn fixed(&self) -> Vec<(usize, bool)> {
        let mut out = vec![(self.index(0, 0), true)];
        out.extend((1..=self.m).map(|p| (self.index(0, p), false)));
        out.extend((1..=self.m).map(|i| (self.index(i, 0), false)));
        out
    }

    /// Assignment placing `slots[p]` at position `p`.
    pub fn encode(&self, slots: &[usize]) -> Assignment {
        let mut a = Assignment::zeros(self.num_vars());
        for (p, &s) in slots.iter().enumerate() {
            a.set(self.index(s, p), true);
        }
        a
    }
}

/// Constraint count of [`build_srp_model`] for `m` slots.
pub fn constraint_count(m: usize, mode: ConstraintMode) -> usize {
    match mode {
        // delivery + location consistency, consecutiveness, inclusion, 3 bounds
        ConstraintMode::Aggregate => 2 * (m + 1) + m + 1 + 3,
        ConstraintMode::PerTerm => 2 * (m + 1) + m + 1 + m + 2 * (m + 1),
    }
}

pub fn build_srp_model(spec: &SrpSpec) -> Result<(CqmModel, SrpEncoding), SrpError> {
    spec.validate()?;
    let m = spec.m();
    let enc = SrpEncoding::new(m);
    let mut model = CqmModel::new(enc.num_vars());
    let slots = 0..=m;

    // Distance along consecutive positions.
    let scale = spec.weights.distance * spec.distance_scale;
    let mut objective = QuadraticExpr::new();
    for p in 0..m {
        for i in slots.clone() {
            for j in slots.clone() {
                let d = spec.travel.get(i, j);
                if i != j && d != 0.0 {
                    objective.add_quadratic(enc.index(i, p), enc.index(j, p + 1), scale * d);
                }
            }
        }
    }
    // Destination position, evaluated term by term.
    for p in 0..=m {
        objective.add_linear(enc.index(DESTINATION_SLOT, p), -spec.weights.destination);
        for q in p..=m {
            objective.add_linear(enc.index(DESTINATION_SLOT, q), -spec.weights.destination);
        }
    }
    model.set_objective(objective)?;

    for i in slots.clone() {
        let mut e = QuadraticExpr::new();
        for p in 0..=m {
            e.add_linear(enc.index(i, p), 1.0);
        }
        model.add_constraint(Constraint::new(format!("delivery-consistency[{i}]"), e, Sense::Le, 1.0))?;
    }
    for p in 0..=m {
        let mut e = QuadraticExpr::new();
        for i in slots.clone() {
            e.add_linear(enc.index(i, p), 1.0);
        }
        model.add_constraint(Constraint::new(format!("location-consistency[{p}]"), e, Sense::Le, 1.0))?;
    }
    for p in 0..m {
        let mut e = QuadraticExpr::new();
        for i in slots.clone() {
            e.add_linear(enc.index(i, p), 1.0);
            e.add_linear(enc.index(i, p + 1), -1.0);
        }
        model.add_constraint(Constraint::new(
            format!("delivery-consecutiveness[{p}]"),
            e,
            Sense::Ge,
            0.0,
        ))?;
    }
    let mut inclusion = QuadraticExpr::new();
    for p in 0..=m {
        inclusion.add_linear(enc.index(DESTINATION_SLOT, p), 1.0);
    }
    model.add_constraint(Constraint::new("destination-inclusion", inclusion, Sense::Eq, 1.0))?;

    let leg_terms = |e: &mut QuadraticExpr, p: usize| {
        for i in slots.clone() {
            for j in slots.clone() {
                let c = spec.travel.get(i, j);
                if i != j && c != 0.0 {
                    e.add_quadratic(enc.index(i, p), enc.index(j, p + 1), c);
                }
            }
        }
    };
    let load_terms = |e: &mut QuadraticExpr, i: usize, amount: f64| {
        if amount != 0.0 {
            for p in 0..=m {
                e.add_linear(enc.index(i, p), amount);
            }
        }
    };

    match spec.constraint_mode {
        ConstraintMode::Aggregate => {
            let mut time = QuadraticExpr::new();
            for p in 0..m {
                leg_terms(&mut time, p);
            }
            model.add_constraint(Constraint::new("time-restriction", time, Sense::Le, spec.rt))?;
            let mut weight = QuadraticExpr::new();
            let mut dimension = QuadraticExpr::new();
            for i in slots.clone() {
                load_terms(&mut weight, i, spec.slot_weight(i));
                load_terms(&mut dimension, i, spec.slot_dimension(i));
            }
            model.add_constraint(Constraint::new("weight-restriction", weight, Sense::Le, spec.max_weight))?;
            model.add_constraint(Constraint::new(
                "dimension-restriction",
                dimension,
                Sense::Le,
                spec.max_dimension,
            ))?;
        }
        ConstraintMode::PerTerm => {
            for p in 0..m {
                let mut time = QuadraticExpr::new();
                leg_terms(&mut time, p);
                model.add_constraint(Constraint::new(format!("time-restriction[{p}]"), time, Sense::Le, spec.rt))?;
            }
            for i in slots.clone() {
                let mut weight = QuadraticExpr::new();
                load_terms(&mut weight, i, spec.slot_weight(i));
                model.add_constraint(Constraint::new(
                    format!("weight-restriction[{i}]"),
                    weight,
                    Sense::Le,
                    spec.max_weight,
                ))?;
            }
            for i in slots.clone() {
                let mut dimension = QuadraticExpr::new();
                load_terms(&mut dimension, i, spec.slot_dimension(i));
                model.add_constraint(Constraint::new(
                    format!("dimension-restriction[{i}]"),
                    dimension,
                    Sense::Le,
                    spec.max_dimension,
                ))?;
            }
        }
    }

    for (v, val) in enc.fixed() {
        model.fix(v, val)?;
    }
    Ok((model, enc))
}

/// Total distance of the path through `slots`.
pub fn objective_o1(travel: &TravelMatrix, slots: &[usize]) -> f64 {
    travel.path_length(slots)
}

/// Destination-position objective with the destination at `position`,
/// summed exactly as the formula is written (the inner sum starts at `p`).
pub fn objective_o2(position: usize, m: usize) -> f64 {
    let x = |p: usize| if p == position { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for p in 0..=m {
        let tail: f64 = (p..=m).map(x).sum();
        total += -x(p) - tail;
    }
    total
}

/// A decoded (sub-)route: slots in visit order, origin first and destination
/// last.
#[derive(Debug, Clone, PartialEq)]
pub struct SrpRoute {
    pub slots: Vec<usize>,
    pub locations: Vec<usize>,
    /// Deliveries dropped along the route, in visit order.
    pub served: Vec<usize>,
    pub legs: Vec<f64>,
    pub duration: f64,
    pub weight: f64,
    pub dimension: f64,
    pub o1: f64,
    pub o2: f64,
}

impl SrpRoute {
    /// Evaluates the route `origin, middle..., destination`. Bounds are not
    /// checked here; see [`SrpRoute::within_bounds`].
    pub fn from_middle(spec: &SrpSpec, middle: &[usize]) -> Self {
        let mut slots = Vec::with_capacity(middle.len() + 2);
        slots.push(ORIGIN_SLOT);
        slots.extend_from_slice(middle);
        slots.push(DESTINATION_SLOT);
        Self::from_slots(spec, slots)
    }

    fn from_slots(spec: &SrpSpec, slots: Vec<usize>) -> Self {
        let legs: Vec<f64> = slots.windows(2).map(|w| spec.travel.get(w[0], w[1])).collect();
        let o1 = objective_o1(&spec.travel, &slots);
        let mut weight = 0.0;
        let mut dimension = 0.0;
        let mut served = Vec::new();
        for &s in &slots[1..] {
            weight += spec.slot_weight(s);
            dimension += spec.slot_dimension(s);
            if let Some(d) = spec.stop(s).delivery {
                served.push(d);
            }
        }
        let locations = slots.iter().map(|&s| spec.stop(s).location).collect();
        let o2 = objective_o2(slots.len() - 1, spec.m());
        Self {
            slots,
            locations,
            served,
            legs,
            duration: o1,
            weight,
            dimension,
            o1,
            o2,
        }
    }

    pub fn within_bounds(&self, spec: &SrpSpec) -> bool {
        self.duration <= spec.rt + FEASIBILITY_TOLERANCE
            && self.weight <= spec.max_weight + FEASIBILITY_TOLERANCE
            && self.dimension <= spec.max_dimension + FEASIBILITY_TOLERANCE
    }

    pub fn scalar_objective(&self, spec: &SrpSpec) -> f64 {
        spec.scalar_objective(self.o1, self.o2)
    }

    /// Position of the destination, i.e. the number of legs.
    pub fn destination_position(&self) -> usize {
        self.slots.len() - 1
    }

    /// Candidate slots between origin and destination.
    pub fn middle(&self) -> &[usize] {
        &self.slots[1..self.slots.len() - 1]
    }
}

pub fn decode_assignment(enc: &SrpEncoding, a: &Assignment, spec: &SrpSpec) -> Result<SrpRoute, SrpError> {
    let m = enc.m();
    if spec.m() != m {
        return Err(SrpError::SpecInvalid("encoding does not match the spec"));
    }
    if a.len() != enc.num_vars() {
        return Err(CqmError::LengthMismatch {
            found: a.len(),
            expected: enc.num_vars(),
        }
        .into());
    }
    let mut slots = Vec::new();
    let mut ended = false;
    for p in 0..=m {
        let mut here = (0..=m).filter(|&i| a.get(enc.index(i, p)));
        let first = here.next();
        if here.next().is_some() {
            return Err(SrpError::InfeasibleAssignment("two slots share a position"));
        }
        match first {
            Some(_) if ended => return Err(SrpError::InfeasibleAssignment("occupied positions are not consecutive")),
            Some(s) => slots.push(s),
            None => ended = true,
        }
    }
    if slots.first() != Some(&ORIGIN_SLOT) {
        return Err(SrpError::InfeasibleAssignment("route does not start at the origin"));
    }
    let mut seen = vec![false; m + 1];
    for &s in &slots {
        if core::mem::replace(&mut seen[s], true) {
            return Err(SrpError::InfeasibleAssignment("slot visited twice"));
        }
    }
    if !seen[DESTINATION_SLOT] {
        return Err(SrpError::InfeasibleAssignment("destination missing"));
    }
    if slots.last() != Some(&DESTINATION_SLOT) {
        return Err(SrpError::DestinationNotLast);
    }
    let route = SrpRoute::from_slots(spec, slots);
    if !route.within_bounds(spec) {
        return Err(SrpError::InfeasibleAssignment("route exceeds rt, W or D"));
    }
    Ok(route)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Spec with integer travel costs between slots, for exact comparisons.
    pub(crate) fn integer_spec(m: usize, seed: u64) -> SrpSpec {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = move |k: u64| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % k
        };
        let n = m + 1;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (1 + next(20)) as f64;
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        let travel = TravelMatrix::from_rows(&rows).unwrap();
        let candidates = (2..=m)
            .map(|s| SrpStop {
                location: s,
                delivery: Some(s),
                weight: (1 + next(10)) as f64,
                dimension: (1 + next(10)) as f64,
            })
            .collect();
        let destination = SrpStop {
            location: 1,
            delivery: Some(1),
            weight: (1 + next(5)) as f64,
            dimension: (1 + next(5)) as f64,
        };
        SrpSpec::new(0, destination, candidates, (20 + next(60)) as f64, (10 + next(30)) as f64, (10 + next(30)) as f64, &travel)
            .unwrap()
    }

    #[test]
    fn five_location_model_size() {
        let spec = integer_spec(4, 1);
        let (model, enc) = build_srp_model(&spec).unwrap();
        assert_eq!(model.num_vars(), 25);
        assert_eq!(enc.num_vars(), 25);
        assert_eq!(model.num_constraints(), 18);
        assert_eq!(constraint_count(4, ConstraintMode::Aggregate), 18);
        let per_term = build_srp_model(&spec.clone().with_constraint_mode(ConstraintMode::PerTerm)).unwrap().0;
        assert_eq!(per_term.num_constraints(), constraint_count(4, ConstraintMode::PerTerm));
    }

    #[test]
    fn default_weights() {
        let w = ObjectiveWeights::default();
        assert_eq!((w.distance, w.destination), (1.0, 2.0));
    }

    #[test]
    fn origin_fixes() {
        let (model, enc) = build_srp_model(&integer_spec(3, 2)).unwrap();
        assert_eq!(model.fixed().get(&enc.index(0, 0)), Some(&1));
        for p in 1..=3 {
            assert_eq!(model.fixed().get(&enc.index(0, p)), Some(&0));
            assert_eq!(model.fixed().get(&enc.index(p, 0)), Some(&0));
        }
        assert_eq!(model.fixed().len(), 7);
    }

    #[test]
    fn o1_examples() {
        let rows = vec![vec![0.0, 5.0, 10.0], vec![5.0, 0.0, 5.0], vec![10.0, 5.0, 0.0]];
        let t = TravelMatrix::from_rows(&rows).unwrap();
        assert_eq!(objective_o1(&t, &[0, 2, 1]), 15.0);
        let rows = vec![vec![0.0, 7.0], vec![7.0, 0.0]];
        assert_eq!(objective_o1(&TravelMatrix::from_rows(&rows).unwrap(), &[0, 1]), 7.0);
    }

    #[test]
    fn o2_examples() {
        assert_eq!(objective_o2(0, 4), -2.0);
        assert_eq!(objective_o2(4, 4), -6.0);
        for p in 0..6 {
            assert!(objective_o2(p + 1, 6) < objective_o2(p, 6));
        }
    }

    #[test]
    fn decode_figure_style_assignment() {
        let spec = integer_spec(4, 3);
        let enc = SrpEncoding::new(4);
        let mut a = Assignment::zeros(25);
        a.set(enc.index(0, 0), true);
        a.set(enc.index(3, 1), true);
        a.set(enc.index(1, 2), true);
        let mut spec = spec;
        spec.rt = 1e6;
        spec.max_weight = 1e6;
        spec.max_dimension = 1e6;
        let r = decode_assignment(&enc, &a, &spec).unwrap();
        assert_eq!(r.slots, vec![0, 3, 1]);
        assert_eq!(r.served, vec![3, 1]);
        assert_eq!(r.served.len() - 1, 1);
    }

    #[test]
    fn decode_direct_and_not_last() {
        let mut spec = integer_spec(4, 4);
        spec.rt = 1e6;
        spec.max_weight = 1e6;
        spec.max_dimension = 1e6;
        let enc = SrpEncoding::new(4);
        let r = decode_assignment(&enc, &enc.encode(&[0, 1]), &spec).unwrap();
        assert_eq!(r.slots, vec![0, 1]);
        assert_eq!(r.served, vec![1]);
        assert_eq!(
            decode_assignment(&enc, &enc.encode(&[0, 1, 2]), &spec),
            Err(SrpError::DestinationNotLast)
        );
        assert!(matches!(
            decode_assignment(&enc, &enc.encode(&[0, 2]), &spec),
            Err(SrpError::InfeasibleAssignment(_))
        ));
    }

    #[test]
    fn decode_rejects_over_capacity() {
        let mut spec = integer_spec(3, 5);
        spec.max_weight = 0.0;
        let enc = SrpEncoding::new(3);
        assert!(matches!(
            decode_assignment(&enc, &enc.encode(&[0, 1]), &spec),
            Err(SrpError::InfeasibleAssignment(_))
        ));
    }

    #[test]
    fn invalid_spec() {
        let mut spec = integer_spec(2, 6);
        spec.rt = 0.0;
        assert!(matches!(build_srp_model(&spec), Err(SrpError::SpecInvalid(_))));
    }

    #[test]
    fn budget_scale_is_power_of_two() {
        assert_eq!(DistanceScaling::RouteBudget.factor(90.0), 1.0 / 128.0);
        assert_eq!(DistanceScaling::RouteBudget.factor(128.0), 1.0 / 128.0);
        assert_eq!(DistanceScaling::RouteBudget.factor(0.3), 2.0);
        assert_eq!(DistanceScaling::Raw.factor(90.0), 1.0);
    }

    #[test]
    fn consecutiveness_iff_prefix() {
        // Every assignment satisfying location-consistency, for M <= 3.
        for m in 1..=3usize {
            let spec = integer_spec(m, 7);
            let (model, enc) = build_srp_model(&spec).unwrap();
            let n = enc.num_vars();
            for bits in 0u32..(1 << n) {
                let a = Assignment((0..n).map(|v| ((bits >> v) & 1) as u8).collect());
                let counts: Vec<usize> =
                    (0..=m).map(|p| (0..=m).filter(|&i| a.get(enc.index(i, p))).count()).collect();
                if counts.iter().any(|&c| c > 1) {
                    continue;
                }
                let occupied: Vec<usize> = (0..=m).filter(|&p| counts[p] == 1).collect();
                let prefix = occupied.iter().enumerate().all(|(k, &p)| k == p);
                let report = model.check_feasibility(&a).unwrap();
                let eq5 = report
                    .constraints
                    .iter()
                    .filter(|c| c.label.starts_with("delivery-consecutiveness"))
                    .all(|c| c.satisfied);
                assert_eq!(eq5, prefix, "m={m} bits={bits:b}");
            }
        }
    }

    proptest! {
        #[test]
        fn variable_count(m in 1usize..=20) {
            let spec = integer_spec(m, m as u64);
            let (model, _) = build_srp_model(&spec).unwrap();
            prop_assert_eq!(model.num_vars(), (m + 1) * (m + 1));
            prop_assert_eq!(model.num_constraints(), constraint_count(m, ConstraintMode::Aggregate));
        }

        #[test]
        fn o2_ignores_which_deliveries_fill_slots(seed in 0u64..1000, k in 0usize..4) {
            let spec = integer_spec(5, seed);
            let a = SrpRoute::from_middle(&spec, &[2, 3, 4, 5][..k]);
            let b = SrpRoute::from_middle(&spec, &[5, 4, 3, 2][..k]);
            prop_assert_eq!(a.o2, b.o2);
        }

        #[test]
        fn route_objective_matches_cqm(seed in 0u64..10_000, m in 1usize..=7, budget in any::<bool>()) {
            let mut spec = integer_spec(m, seed);
            if budget { spec = spec.with_scaling(DistanceScaling::RouteBudget); }
            let (model, enc) = build_srp_model(&spec).unwrap();
            let mut middle: Vec<usize> = (2..=m).collect();
            let k = (seed as usize) % (middle.len() + 1);
            let shift = (seed as usize / 7) % middle.len().max(1);
            middle.rotate_left(shift);
            middle.truncate(k);
            let route = SrpRoute::from_middle(&spec, &middle);
            let a = enc.encode(&route.slots);
            prop_assert_eq!(route.scalar_objective(&spec), model.evaluate_objective(&a).unwrap());
        }
    }
}
