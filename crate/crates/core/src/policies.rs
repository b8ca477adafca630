//! Job-selection policies.
//!
//! Two orderings (nearest job, first job) times two timings (select right
//! after a delivery, or only once standing at a depot). Nearest-job policies
//! run on each vehicle and resolve simultaneous selections with a random
//! priority order; first-job policies run on a central unit that hands the
//! oldest job to the nearest vehicle.
//!
//! Every selection function reports how many distance comparisons it made so
//! the cost of each policy can be checked against its definition.
//!
//! Ties on distance go to the smaller job index, then the smaller depot
//! index, then the smaller vehicle id.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet::{BatteryParams, VehicleMode, VehicleState};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JobOrder {
    /// Nearest job first.
    NearestJob,
    /// First come, first served.
    FirstJob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Timing {
    /// Select immediately after completing a delivery.
    Plus,
    /// Select at a depot, just before loading.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordination {
    Randomized,
    Assortative,
}

/// One of the four policies, written `nj+`, `nj-`, `fj+` or `fj-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyId {
    pub order: JobOrder,
    pub timing: Timing,
}

impl PolicyId {
    pub const NJ_PLUS: Self = Self::new(JobOrder::NearestJob, Timing::Plus);
    pub const NJ_MINUS: Self = Self::new(JobOrder::NearestJob, Timing::Minus);
    pub const FJ_PLUS: Self = Self::new(JobOrder::FirstJob, Timing::Plus);
    pub const FJ_MINUS: Self = Self::new(JobOrder::FirstJob, Timing::Minus);
    pub const ALL: [Self; 4] = [Self::NJ_PLUS, Self::NJ_MINUS, Self::FJ_PLUS, Self::FJ_MINUS];

    pub const fn new(order: JobOrder, timing: Timing) -> Self {
        Self { order, timing }
    }

    /// Nearest-job policies coordinate randomly, first-job ones assortatively.
    pub fn coordination(self) -> Coordination {
        match self.order {
            JobOrder::NearestJob => Coordination::Randomized,
            JobOrder::FirstJob => Coordination::Assortative,
        }
    }

    pub fn token(self) -> &'static str {
        match (self.order, self.timing) {
            (JobOrder::NearestJob, Timing::Plus) => "nj+",
            (JobOrder::NearestJob, Timing::Minus) => "nj-",
            (JobOrder::FirstJob, Timing::Plus) => "fj+",
            (JobOrder::FirstJob, Timing::Minus) => "fj-",
        }
    }

    pub fn name(self) -> &'static str {
        match (self.order, self.timing) {
            (JobOrder::NearestJob, Timing::Plus) => "Do Nearest Job",
            (JobOrder::NearestJob, Timing::Minus) => "Rush to Depots",
            (JobOrder::FirstJob, Timing::Plus) => "FCFS by Nearest Vehicle",
            (JobOrder::FirstJob, Timing::Minus) => "FCFS by First Vehicle at Depot",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{s}` (expected nj+, nj-, fj+ or fj-)")))
    }
}

impl Serialize for PolicyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for PolicyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <alloc::string::String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingJob {
    pub n: usize,
    pub position: Point,
}

/// Jobs not yet selected, kept in arrival order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaitingSet {
    jobs: Vec<WaitingJob>,
}

impl WaitingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a newly arrived job. Arrival indices must increase.
    pub fn push(&mut self, n: usize, position: Point) {
        assert!(
            self.jobs.last().map_or(true, |j| j.n < n),
            "waiting set must stay sorted by arrival index"
        );
        self.jobs.push(WaitingJob { n, position });
    }

    pub fn remove(&mut self, n: usize) -> Option<WaitingJob> {
        let i = self.jobs.binary_search_by_key(&n, |j| j.n).ok()?;
        Some(self.jobs.remove(i))
    }

    /// The oldest waiting job.
    pub fn oldest(&self) -> Option<WaitingJob> {
        self.jobs.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WaitingJob> {
        self.jobs.iter()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

impl FromIterator<(usize, Point)> for WaitingSet {
    fn from_iter<I: IntoIterator<Item = (usize, Point)>>(iter: I) -> Self {
        let mut set = WaitingSet::new();
        for (n, p) in iter {
            set.push(n, p);
        }
        set
    }
}

/// What a policy needs to know about a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub position: Point,
    /// Depot the vehicle stands at, if any.
    pub depot: Option<usize>,
}

impl From<&VehicleState> for Candidate {
    fn from(v: &VehicleState) -> Self {
        Self {
            id: v.id,
            position: v.position,
            depot: if v.is_airborne() { None } else { v.chosen_depot },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub job: usize,
    pub vehicle: usize,
    /// Depot where the good is loaded.
    pub via_depot: usize,
    /// Depot to return to after the delivery (first-job-at-depot only).
    pub return_depot: Option<usize>,
    /// Distance of the route the policy minimised, km.
    pub cost_km: f64,
}

/// A selection result together with the number of distance comparisons made.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counted<T> {
    pub value: T,
    pub comparisons: usize,
}

/// Nearest depot to `p` (`L` comparisons).
pub fn nearest_depot(p: Point, depots: &[Point]) -> Counted<usize> {
    Counted {
        value: crate::geometry::nearest_index(depots, p),
        comparisons: depots.len(),
    }
}

/// Do Nearest Job: the `(depot, job)` pair minimising
/// `|v - d_l| + |d_l - c_n|` over all `L·N` pairs.
pub fn nj_plus_select(vehicle: Candidate, waiting: &WaitingSet, depots: &[Point]) -> Counted<Option<Assignment>> {
    let mut best: Option<Assignment> = None;
    let mut comparisons = 0;
    let legs: Vec<f64> = depots.iter().map(|d| vehicle.position.dist(*d)).collect();
    for job in waiting.iter() {
        for (l, d) in depots.iter().enumerate() {
            comparisons += 1;
            let cost = legs[l] + d.dist(job.position);
            if best.map_or(true, |b| cost < b.cost_km) {
                best = Some(Assignment {
                    job: job.n,
                    vehicle: vehicle.id,
                    via_depot: l,
                    return_depot: None,
                    cost_km: cost,
                });
            }
        }
    }
    Counted { value: best, comparisons }
}

/// Rush to Depots: the vehicle stands at a depot and takes the waiting job
/// nearest to it (`N` comparisons).
pub fn nj_minus_select(vehicle: &VehicleState, waiting: &WaitingSet) -> Result<Counted<Option<Assignment>>> {
    let depot = match (vehicle.is_airborne(), vehicle.chosen_depot) {
        (false, Some(l)) => l,
        _ => {
            return Err(Error::InvalidState(format!(
                "vehicle {} must stand at a depot to select under nj-",
                vehicle.id
            )))
        }
    };
    let mut best: Option<Assignment> = None;
    let mut comparisons = 0;
    for job in waiting.iter() {
        comparisons += 1;
        let cost = vehicle.position.dist(job.position);
        if best.map_or(true, |b| cost < b.cost_km) {
            best = Some(Assignment {
                job: job.n,
                vehicle: vehicle.id,
                via_depot: depot,
                return_depot: None,
                cost_km: cost,
            });
        }
    }
    Ok(Counted { value: best, comparisons })
}

/// FCFS by Nearest Vehicle: repeatedly hands the oldest waiting job to the
/// `(vehicle, depot)` route of least length, `K'·L` comparisons per job.
pub fn fj_plus_assign(ready: &[Candidate], waiting: &WaitingSet, depots: &[Point]) -> Vec<Counted<Assignment>> {
    let mut free: Vec<Candidate> = ready.to_vec();
    free.sort_by_key(|c| c.id);
    let mut out = Vec::new();
    for job in waiting.iter() {
        if free.is_empty() {
            break;
        }
        let mut best: Option<(usize, Assignment)> = None;
        let mut comparisons = 0;
        for (i, v) in free.iter().enumerate() {
            for (l, d) in depots.iter().enumerate() {
                comparisons += 1;
                let cost = v.position.dist(*d) + d.dist(job.position);
                if best.map_or(true, |(_, b)| cost < b.cost_km) {
                    best = Some((
                        i,
                        Assignment {
                            job: job.n,
                            vehicle: v.id,
                            via_depot: l,
                            return_depot: None,
                            cost_km: cost,
                        },
                    ));
                }
            }
        }
        let (i, a) = best.expect("free vehicles and depots are non-empty");
        free.remove(i);
        out.push(Counted { value: a, comparisons });
    }
    out
}

/// FCFS by First Vehicle at Depot: the oldest job goes to the nearest vehicle
/// standing at a depot (`K'` comparisons), which then returns to the depot
/// nearest the customer (`L` comparisons).
pub fn fj_minus_assign(at_depot: &[Candidate], waiting: &WaitingSet, depots: &[Point]) -> Vec<Counted<Assignment>> {
    let mut free: Vec<Candidate> = at_depot.to_vec();
    free.sort_by_key(|c| c.id);
    let mut out = Vec::new();
    for job in waiting.iter() {
        if free.is_empty() {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in free.iter().enumerate() {
            let d = v.position.dist(job.position);
            if best.map_or(true, |(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        let (i, cost) = best.expect("free vehicles are non-empty");
        let back = nearest_depot(job.position, depots);
        let v = free.remove(i);
        let via_depot = v.depot.unwrap_or_else(|| nearest_depot(v.position, depots).value);
        out.push(Counted {
            value: Assignment {
                job: job.n,
                vehicle: v.id,
                via_depot,
                return_depot: Some(back.value),
                cost_km: cost,
            },
            comparisons: free.len() + 1 + back.comparisons,
        });
    }
    out
}

/// Random priority order for vehicles selecting in the same step. A single
/// selector is returned as is without touching `rng`.
pub fn resolve_contention<R: Rng + ?Sized>(selectors: &[usize], rng: &mut R) -> Vec<usize> {
    let mut order = selectors.to_vec();
    if order.len() > 1 {
        order.shuffle(rng);
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Eligible,
    /// Battery below the low threshold: go recharge.
    MustCharge,
    /// Recharging and not yet back at the ready threshold.
    StillCharging,
}

/// Battery rule applied at every selection instant. The low threshold is
/// strict: exactly 30% is still eligible.
pub fn battery_gate(v: &VehicleState, params: &BatteryParams) -> Gate {
    if v.mode == VehicleMode::AtDepotCharging && v.battery < params.ready {
        Gate::StillCharging
    } else if v.battery < params.low {
        Gate::MustCharge
    } else {
        Gate::Eligible
    }
}
