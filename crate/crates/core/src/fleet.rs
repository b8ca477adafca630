//! System configuration, jobs, vehicles and battery dynamics.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, ServiceArea};
use crate::units::{Rate, Speed, TimeSpan};

/// Largest observation step (minutes) for which per-step Bernoulli arrivals
/// approximate a Poisson process: `min{0.08/λ, 1/√(1500λ)}`.
pub fn max_delta(lambda_per_min: f64) -> f64 {
    f64::min(0.08 / lambda_per_min, 1.0 / libm::sqrt(1500.0 * lambda_per_min))
}

/// [`max_delta`] rounded down to three significant digits (0.032 min at λ = 0.65).
pub fn default_delta(lambda_per_min: f64) -> f64 {
    let bound = max_delta(lambda_per_min);
    let scale = libm::pow(10.0, libm::floor(libm::log10(bound)) - 2.0);
    libm::floor(bound / scale) * scale
}

/// Everything that defines one simulated system.
///
/// Serialized with flat keys; `K`, `L`, `C_v` and `C_d` keep their
/// conventional capitalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Side of the square service area, km.
    pub side_km: f64,
    #[serde(rename = "K")]
    pub vehicles: usize,
    #[serde(rename = "L")]
    pub depots: usize,
    /// Customer arrivals per minute.
    pub lambda: f64,
    /// Vehicle speed, km/h.
    pub nu: f64,
    /// Air time / (air time + charge time).
    pub alpha: f64,
    /// Observation step, minutes.
    pub delta: f64,
    /// Minutes of flight from a full to an empty battery.
    pub flight_endurance: f64,
    /// Minutes to charge from empty to full.
    pub charge_time: f64,
    pub battery_low: f64,
    pub battery_ready: f64,
    #[serde(rename = "C_v")]
    pub cost_vehicle: f64,
    #[serde(rename = "C_d")]
    pub cost_depot: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let lambda = 0.65;
        Self {
            side_km: 4.0,
            vehicles: 16,
            depots: 16,
            lambda,
            nu: 30.0,
            alpha: 0.25,
            delta: default_delta(lambda),
            flight_endurance: 60.0,
            charge_time: 180.0,
            battery_low: 0.3,
            battery_ready: 0.8,
            cost_vehicle: 2000.0,
            cost_depot: 20000.0,
        }
    }
}

impl SystemConfig {
    pub fn with_fleet(mut self, vehicles: usize, depots: usize) -> Self {
        self.vehicles = vehicles;
        self.depots = depots;
        self
    }

    /// Checks every invariant and names the first one violated.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.side_km > 0.0 && self.side_km.is_finite()) {
            return fail(format!("side_km must be positive (got {})", self.side_km));
        }
        if self.vehicles < 1 {
            return fail("K must be at least 1".into());
        }
        if self.depots < 1 {
            return fail("L must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive (got {})", self.lambda));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return fail(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0, 1] (got {})", self.alpha));
        }
        let bound = max_delta(self.lambda);
        if !(self.delta > 0.0 && self.delta <= bound * (1.0 + 1e-12)) {
            return fail(format!(
                "delta must satisfy 0 < delta <= min{{0.08/lambda, 1/sqrt(1500*lambda)}} = {bound:.6} min (got {})",
                self.delta
            ));
        }
        if !(self.flight_endurance > 0.0 && self.charge_time >= 0.0) {
            return fail("flight_endurance must be positive and charge_time non-negative".into());
        }
        let ratio = self.flight_endurance / (self.flight_endurance + self.charge_time);
        if (ratio - self.alpha).abs() > 1e-6 {
            return fail(format!(
                "flight_endurance/(flight_endurance + charge_time) = {ratio:.6} must equal alpha = {}",
                self.alpha
            ));
        }
        if !(0.0 < self.battery_low
            && self.battery_low < self.battery_ready
            && self.battery_ready <= 1.0)
        {
            return fail(format!(
                "battery thresholds must satisfy 0 < battery_low < battery_ready <= 1 (got {}, {})",
                self.battery_low, self.battery_ready
            ));
        }
        if self.cost_vehicle < 0.0 || self.cost_depot < 0.0 {
            return fail("costs must be non-negative".into());
        }
        Ok(())
    }

    pub fn area(&self) -> Result<ServiceArea> {
        ServiceArea::new(self.side_km)
    }

    pub fn arrival_rate(&self) -> Rate {
        Rate::per_minute(self.lambda)
    }

    pub fn speed(&self) -> Speed {
        Speed::kmh(self.nu)
    }

    /// Bernoulli arrival probability per step.
    pub fn arrival_probability(&self) -> f64 {
        self.lambda * self.delta
    }

    pub fn battery(&self) -> BatteryParams {
        BatteryParams {
            flight_endurance: self.flight_endurance,
            charge_time: self.charge_time,
            low: self.battery_low,
            ready: self.battery_ready,
        }
    }
}

/// Battery constants, minutes and fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryParams {
    pub flight_endurance: f64,
    pub charge_time: f64,
    pub low: f64,
    pub ready: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        SystemConfig::default().battery()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Flight,
    Charging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryUpdate {
    pub level: f64,
    /// The battery hit empty while flying.
    pub energy_violation: bool,
}

/// Linear drain in flight, linear charge at a depot, clamped to `[0, 1]`.
pub fn update_battery(level: f64, dt: f64, activity: Activity, params: &BatteryParams) -> BatteryUpdate {
    match activity {
        Activity::Flight => {
            let next = level - dt / params.flight_endurance;
            BatteryUpdate {
                level: next.max(0.0),
                energy_violation: next < 0.0,
            }
        }
        Activity::Charging => {
            let next = if params.charge_time == 0.0 {
                1.0
            } else {
                level + dt / params.charge_time
            };
            BatteryUpdate {
                level: next.min(1.0),
                energy_violation: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobStatus {
    Waiting,
    Assigned,
    InService,
    Delivered,
}

/// One customer request and its service timeline (minutes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    /// Arrival order, starting at 0.
    pub n: usize,
    pub position: Point,
    pub t_arrival: f64,
    /// Instant the job was selected.
    pub t_assigned: Option<f64>,
    /// Instant the serving vehicle stood loaded at a depot.
    pub t_depot_ready: Option<f64>,
    pub t_delivered: Option<f64>,
    pub vehicle_id: Option<usize>,
    pub status: JobStatus,
}

impl Job {
    pub fn new(n: usize, position: Point, t_arrival: f64) -> Self {
        Self {
            n,
            position,
            t_arrival,
            t_assigned: None,
            t_depot_ready: None,
            t_delivered: None,
            vehicle_id: None,
            status: JobStatus::Waiting,
        }
    }

    pub fn is_delivered(&self) -> bool {
        self.status == JobStatus::Delivered
    }

    /// Delivery time `t_delivered - t_arrival`, if delivered.
    pub fn delivery_time(&self) -> Option<f64> {
        self.t_delivered.map(|t| t - self.t_arrival)
    }
}

/// Waiting, return and service components of a delivery time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceTimes {
    pub w: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

/// Splits a delivered job's timeline into `W`, `R`, `S` and `T`.
///
/// `T` is the stamp difference `t_delivered - t_arrival`; `W + R + S` equals
/// it up to floating-point rounding.
pub fn decompose_times(job: &Job) -> Result<ServiceTimes> {
    let stamps = (job.t_assigned, job.t_depot_ready, job.t_delivered);
    match (job.status, stamps) {
        (JobStatus::Delivered, (Some(assigned), Some(ready), Some(delivered))) => Ok(ServiceTimes {
            w: assigned - job.t_arrival,
            r: ready - assigned,
            s: delivered - ready,
            t: delivered - job.t_arrival,
        }),
        _ => Err(Error::InvalidState(format!("job {} is not delivered", job.n))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VehicleMode {
    ToDepot,
    AtDepotCharging,
    AtDepotReady,
    ToCustomer,
    IdleAtDepotFull,
}

impl VehicleMode {
    pub fn is_airborne(self) -> bool {
        matches!(self, VehicleMode::ToDepot | VehicleMode::ToCustomer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: usize,
    pub position: Point,
    pub battery: f64,
    pub mode: VehicleMode,
    pub target: Option<Point>,
    pub assigned_job: Option<usize>,
    /// Depot the vehicle is heading to or standing at.
    pub chosen_depot: Option<usize>,
    /// Depot to fly to after the current delivery.
    pub return_depot: Option<usize>,
    /// Flying to a depot because the battery gate said so.
    pub charge_trip: bool,
}

impl VehicleState {
    /// A vehicle parked at `depot` with a full battery.
    pub fn parked(id: usize, depot: usize, position: Point) -> Self {
        Self {
            id,
            position,
            battery: 1.0,
            mode: VehicleMode::IdleAtDepotFull,
            target: None,
            assigned_job: None,
            chosen_depot: Some(depot),
            return_depot: None,
            charge_trip: false,
        }
    }

    pub fn is_airborne(&self) -> bool {
        self.mode.is_airborne()
    }

    pub fn activity(&self) -> Activity {
        if self.is_airborne() {
            Activity::Flight
        } else {
            Activity::Charging
        }
    }

    /// Applies [`update_battery`] for the vehicle's current mode and settles
    /// the at-depot mode from the new level. Returns whether the battery hit
    /// empty in flight.
    pub fn update_battery(&mut self, dt: f64, params: &BatteryParams) -> bool {
        let update = update_battery(self.battery, dt, self.activity(), params);
        self.battery = update.level;
        if self.mode == VehicleMode::AtDepotCharging && self.battery >= params.ready {
            self.mode = VehicleMode::AtDepotReady;
        }
        if self.mode == VehicleMode::AtDepotReady && self.battery >= 1.0 {
            self.mode = VehicleMode::IdleAtDepotFull;
        }
        update.energy_violation
    }

    /// Flying time left on the battery.
    pub fn remaining_air_time(&self, params: &BatteryParams) -> TimeSpan {
        TimeSpan::minutes(self.battery * params.flight_endurance)
    }
}
