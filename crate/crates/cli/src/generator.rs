//! Synthetic instances shaped like the six benchmark profiles.

use q4rpd_core::model::{
    build_travel_matrix, validate_instance, Delivery, Location, ProblemInstance, Truck, DEPOT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROFILE_NAMES: [&str; 6] = ["D14_P1", "D16_P1", "D14_P2", "D21_P2", "D21_P0", "D29_P0"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceProfile {
    pub name: String,
    pub deliveries: usize,
    pub tp_count: usize,
    pub owned: usize,
    pub rental: usize,
    pub working_day: f64,
    /// Coordinates are drawn from `[-half_extent, half_extent]²`, depot at
    /// the origin.
    pub half_extent: f64,
    pub weight: (f64, f64),
    pub dimension: (f64, f64),
    pub truck_weight: (f64, f64),
    pub truck_dimension: (f64, f64),
    pub rental_cost: (f64, f64),
    /// Range of the margin added to a TP's direct travel time to get its
    /// deadline.
    pub tp_slack: (f64, f64),
    /// Number of extra orders placed by an already present customer.
    pub duplicate_customers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("profile {name}: {reason}")]
    Invalid { name: String, reason: &'static str },
    #[error("profile {name} produced an invalid instance: {detail}")]
    Generated { name: String, detail: String },
}

impl InstanceProfile {
    fn base(name: &str, deliveries: usize, tp_count: usize, owned: usize, rental: usize) -> Self {
        Self {
            name: name.to_string(),
            deliveries,
            tp_count,
            owned,
            rental,
            working_day: 480.0,
            half_extent: 20.0,
            weight: (60.0, 140.0),
            dimension: (40.0, 110.0),
            truck_weight: (900.0, 1100.0),
            truck_dimension: (1000.0, 1300.0),
            rental_cost: (40.0, 80.0),
            tp_slack: (0.0, 1.5),
            duplicate_customers: 0,
            seed: 0,
        }
    }

    pub fn named(name: &str) -> Result<Self, ProfileError> {
        Ok(match name {
            "D14_P1" => Self::base(name, 14, 1, 2, 3),
            "D16_P1" => Self {
                working_day: 90.0,
                half_extent: 20.0,
                ..Self::base(name, 16, 1, 0, 4)
            },
            "D14_P2" => Self {
                duplicate_customers: 1,
                ..Self::base(name, 14, 2, 2, 3)
            },
            "D21_P2" => Self::base(name, 21, 2, 3, 2),
            "D21_P0" => Self::base(name, 21, 0, 2, 2),
            "D29_P0" => Self {
                truck_weight: (850.0, 1000.0),
                truck_dimension: (1100.0, 1300.0),
                ..Self::base(name, 29, 0, 0, 4)
            },
            _ => return Err(ProfileError::UnknownProfile(name.to_string())),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<(), ProfileError> {
        let bad = |reason| {
            Err(ProfileError::Invalid {
                name: self.name.clone(),
                reason,
            })
        };
        let range_ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if self.tp_count > self.deliveries {
            return bad("more TP deliveries than deliveries");
        }
        if self.owned + self.rental == 0 {
            return bad("empty fleet");
        }
        if !(self.working_day > 0.0) || !(self.half_extent > 0.0) {
            return bad("working day and extent must be positive");
        }
        if ![self.weight, self.dimension, self.truck_weight, self.truck_dimension, self.rental_cost, self.tp_slack]
            .into_iter()
            .all(range_ok)
        {
            return bad("every range needs finite bounds with low <= high");
        }
        if !(self.weight.0 > 0.0) || !(self.dimension.0 > 0.0) || self.tp_slack.0 < 0.0 || self.rental_cost.0 < 0.0 {
            return bad("loads must be positive and slack and costs non-negative");
        }
        if self.weight.1 > self.truck_weight.0 || self.dimension.1 > self.truck_dimension.0 {
            return bad("a delivery could exceed the smallest truck");
        }
        let farthest = 2.0 * self.half_extent * std::f64::consts::SQRT_2;
        if farthest + self.tp_slack.1 > self.working_day {
            return bad("extent too large for the working day");
        }
        if self.duplicate_customers >= self.deliveries.max(1) {
            return bad("too many duplicate customers");
        }
        Ok(())
    }
}

fn tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn draw(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        tenth(rng.random_range(r.0..=r.1))
    }
}

/// Builds an instance from a profile. The same profile and seed always give
/// the same instance.
pub fn generate_instance(profile: &InstanceProfile) -> Result<ProblemInstance, ProfileError> {
    profile.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let h = profile.half_extent;
    let n = profile.deliveries;
    let mut deliveries: Vec<Delivery> = Vec::with_capacity(n);
    for id in 1..=n {
        let (x, y) = (tenth(rng.random_range(-h..=h)), tenth(rng.random_range(-h..=h)));
        deliveries.push(Delivery {
            id,
            location: Location::new(id, x, y),
            weight: draw(&mut rng, profile.weight),
            dimension: draw(&mut rng, profile.dimension),
            tp_deadline: None,
            customer_id: 1000 + id as u64,
        });
    }
    // A repeat order sits at its customer's address.
    for k in 0..profile.duplicate_customers {
        let copy = n - 1 - k;
        let from = rng.random_range(0..copy);
        let (loc, customer) = (deliveries[from].location, deliveries[from].customer_id);
        deliveries[copy].location = Location::new(copy + 1, loc.x, loc.y);
        deliveries[copy].customer_id = customer;
    }
    let mut ids: Vec<usize> = (0..n - profile.duplicate_customers).collect();
    for k in 0..profile.tp_count {
        let pick = rng.random_range(k..ids.len());
        ids.swap(k, pick);
    }
    let mut instance = ProblemInstance {
        depot: Location::new(DEPOT, 0.0, 0.0),
        deliveries,
        fleet: Vec::new(),
        working_day: profile.working_day,
        travel: None,
    };
    let travel = build_travel_matrix(&instance).map_err(|e| ProfileError::Generated {
        name: profile.name.clone(),
        detail: e.to_string(),
    })?;
    for &i in &ids[..profile.tp_count] {
        let direct = travel.get(DEPOT, i + 1);
        let slack = rng.random_range(profile.tp_slack.0..=profile.tp_slack.1);
        // Round up so the direct trip always stays on time.
        let deadline = ((direct + slack) * 10.0).ceil() / 10.0;
        instance.deliveries[i].tp_deadline = Some(deadline.min(profile.working_day - travel.get(i + 1, DEPOT)));
    }
    let mut id = 1;
    for _ in 0..profile.owned {
        instance.fleet.push(Truck::owned(
            id,
            draw(&mut rng, profile.truck_weight),
            draw(&mut rng, profile.truck_dimension),
        ));
        id += 1;
    }
    for _ in 0..profile.rental {
        let (w, d) = (draw(&mut rng, profile.truck_weight), draw(&mut rng, profile.truck_dimension));
        instance.fleet.push(Truck::rental(id, w, d, draw(&mut rng, profile.rental_cost)));
        id += 1;
    }
    let issues = validate_instance(&instance);
    if let Some(first) = issues.first() {
        return Err(ProfileError::Generated {
            name: profile.name.clone(),
            detail: first.to_string(),
        });
    }
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_counts() {
        let expect = [
            ("D14_P1", 14, 1, 2, 3),
            ("D16_P1", 16, 1, 0, 4),
            ("D14_P2", 14, 2, 2, 3),
            ("D21_P2", 21, 2, 3, 2),
            ("D21_P0", 21, 0, 2, 2),
            ("D29_P0", 29, 0, 0, 4),
        ];
        for (name, n, tp, o, r) in expect {
            let inst = generate_instance(&InstanceProfile::named(name).unwrap().with_seed(3)).unwrap();
            assert_eq!(inst.deliveries.len(), n, "{name}");
            assert_eq!(inst.tp_count(), tp, "{name}");
            assert_eq!(inst.fleet.iter().filter(|t| t.ownership == q4rpd_core::Ownership::Owned).count(), o);
            assert_eq!(inst.fleet.len(), o + r);
        }
        let d16 = generate_instance(&InstanceProfile::named("D16_P1").unwrap()).unwrap();
        assert_eq!(d16.working_day, 90.0);
    }

    #[test]
    fn duplicate_customer_shares_address() {
        let inst = generate_instance(&InstanceProfile::named("D14_P2").unwrap().with_seed(1)).unwrap();
        let last = &inst.deliveries[13];
        let twin = inst.deliveries[..13].iter().find(|d| d.customer_id == last.customer_id).unwrap();
        assert_eq!((twin.location.x, twin.location.y), (last.location.x, last.location.y));
        assert!(!last.is_top_priority());
    }

    #[test]
    fn deterministic() {
        let p = InstanceProfile::named("D21_P2").unwrap().with_seed(11);
        assert_eq!(generate_instance(&p), generate_instance(&p));
        assert_ne!(generate_instance(&p), generate_instance(&p.clone().with_seed(12)));
    }

    #[test]
    fn invalid_profiles() {
        assert_eq!(
            InstanceProfile::named("D99"),
            Err(ProfileError::UnknownProfile("D99".into()))
        );
        let mut p = InstanceProfile::named("D14_P1").unwrap();
        p.tp_count = 20;
        assert!(matches!(generate_instance(&p), Err(ProfileError::Invalid { .. })));
        let mut p = InstanceProfile::named("D14_P1").unwrap();
        p.weight = (10.0, 5000.0);
        assert!(matches!(generate_instance(&p), Err(ProfileError::Invalid { .. })));
    }

    #[test]
    fn many_seeds_stay_valid() {
        for name in PROFILE_NAMES {
            for seed in 0..25 {
                generate_instance(&InstanceProfile::named(name).unwrap().with_seed(seed)).unwrap();
            }
        }
    }
}
