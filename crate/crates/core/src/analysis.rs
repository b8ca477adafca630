//! Closed-form planning quantities: load factor, necessary stability
//! conditions, delivery-time lower bounds and the minimum-expenditure
//! frontier.
//!
//! Inputs carry units through [`Rate`], [`Speed`] and [`TimeSpan`]; areas are
//! km², distances km, costs in one currency.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::fleet::SystemConfig;
use crate::geometry::{grid_multimedian, perfect_square_root, zemel_lower_bound, ServiceArea};
use crate::units::{Rate, Speed, TimeSpan};

/// `ρ = λB̄/(αK)`.
pub fn load_factor(lambda: Rate, b_mean: TimeSpan, alpha: f64, vehicles: f64) -> f64 {
    lambda.as_per_minute() * b_mean.as_minutes() / (alpha * vehicles)
}

/// Necessary condition `R̄′ + S̄ ≤ αK/λ`.
pub fn stability_necessary(r_bar_prime: TimeSpan, s_bar: TimeSpan, alpha: f64, vehicles: f64, lambda: Rate) -> bool {
    r_bar_prime.as_minutes() + s_bar.as_minutes() <= alpha * vehicles / lambda.as_per_minute()
}

/// Battery-free form `D̄/ν ≤ K/λ`, with `D̄` the mean distance flown per job.
pub fn stability_necessary_distance(mean_distance_km: f64, speed: Speed, vehicles: f64, lambda: Rate) -> bool {
    speed.travel_time(mean_distance_km).as_minutes() <= vehicles / lambda.as_per_minute()
}

/// Lower bound on the mean delivery time: `H/ν` when the multi-median value
/// is known, otherwise the Zemel bound divided by `ν`.
pub fn min_delivery_time(area_km2: f64, speed: Speed, depots: usize, h_star: Option<f64>) -> TimeSpan {
    let h = h_star.unwrap_or_else(|| zemel_lower_bound(area_km2, depots));
    speed.travel_time(h)
}

/// Real-valued depot count needed to reach `target`: `4A/(9πν²T²)`.
pub fn min_depots(area_km2: f64, speed: Speed, target: TimeSpan) -> f64 {
    let reach = speed.as_km_per_minute() * target.as_minutes();
    4.0 * area_km2 / (9.0 * PI * reach * reach)
}

/// Vehicle count the fleet must exceed: `2λT/α` (strict inequality).
pub fn min_vehicles(lambda: Rate, alpha: f64, target: TimeSpan) -> f64 {
    2.0 * lambda.as_per_minute() * target.as_minutes() / alpha
}

/// `C_d·L + C_v·K`.
pub fn infra_cost(vehicles: f64, depots: f64, cost_vehicle: f64, cost_depot: f64) -> f64 {
    cost_depot * depots + cost_vehicle * vehicles
}

/// Inputs of the expenditure analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningParams {
    pub area_km2: f64,
    pub lambda: Rate,
    pub speed: Speed,
    pub alpha: f64,
    pub cost_vehicle: f64,
    pub cost_depot: f64,
}

impl PlanningParams {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            area_km2: cfg.side_km * cfg.side_km,
            lambda: cfg.arrival_rate(),
            speed: cfg.speed(),
            alpha: cfg.alpha,
            cost_vehicle: cfg.cost_vehicle,
            cost_depot: cfg.cost_depot,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.area_km2, self.lambda.as_per_minute(), self.speed.as_km_per_minute(), self.alpha];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(invalid_arg!("area, rate, speed and alpha must be positive"));
        }
        if self.cost_vehicle < 0.0 || self.cost_depot < 0.0 {
            return Err(invalid_arg!("costs must be non-negative"));
        }
        Ok(())
    }
}

/// `g(τ) = C_d·4A/(9πν²τ²) + C_v·2λτ/α`, the cost of the cheapest
/// configuration whose bounds allow a mean delivery time `τ`.
pub fn aux_cost(params: &PlanningParams, tau: TimeSpan) -> f64 {
    params.cost_depot * min_depots(params.area_km2, params.speed, tau)
        + params.cost_vehicle * min_vehicles(params.lambda, params.alpha, tau)
}

/// Minimiser of [`aux_cost`]: `∛(4αA·C_d / (9πλν²·C_v))`.
pub fn tau_star(params: &PlanningParams) -> TimeSpan {
    let nu = params.speed.as_km_per_minute();
    let cube = 4.0 * params.alpha * params.area_km2 * params.cost_depot
        / (9.0 * PI * params.lambda.as_per_minute() * nu * nu * params.cost_vehicle);
    TimeSpan::minutes(libm::cbrt(cube))
}

/// The expression `∛(4αA·C_d / (9πλν·C_v))` with a single power of `ν`,
/// evaluated with `λ` and `ν` per hour and read as hours. It is not the
/// minimiser of [`aux_cost`] and depends on the time unit; kept for
/// comparison with published figures.
pub fn tau_star_single_speed_power(params: &PlanningParams) -> TimeSpan {
    let cube = 4.0 * params.alpha * params.area_km2 * params.cost_depot
        / (9.0 * PI * params.lambda.as_per_hour() * params.speed.as_kmh() * params.cost_vehicle);
    TimeSpan::hours(libm::cbrt(cube))
}

/// How the vehicle term of the frontier is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleRounding {
    /// `⌊2λH/(αν)⌋`.
    #[default]
    Paper,
    /// Smallest integer strictly above `2λH/(αν)`.
    Strict,
}

impl core::str::FromStr for VehicleRounding {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "strict" => Ok(Self::Strict),
            _ => Err(invalid_arg!("vehicle rounding must be `paper` or `strict` (got `{s}`)")),
        }
    }
}

/// Depot part of the frontier summand for multi-median value `h_km`.
pub fn depot_term(params: &PlanningParams, h_km: f64) -> f64 {
    params.cost_depot * min_depots(params.area_km2, params.speed, params.speed.travel_time(h_km))
}

/// Vehicle count of the frontier summand for multi-median value `h_km`.
pub fn vehicle_term(params: &PlanningParams, h_km: f64, rounding: VehicleRounding) -> u64 {
    let x = min_vehicles(params.lambda, params.alpha, params.speed.travel_time(h_km));
    match rounding {
        VehicleRounding::Paper => libm::floor(x) as u64,
        VehicleRounding::Strict => libm::floor(x) as u64 + 1,
    }
}

/// One tread of the frontier staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    /// Depot count defining the tread.
    pub depots: usize,
    /// Left edge `H_L/ν` of the tread.
    pub t_tread: TimeSpan,
    pub i_min: f64,
    /// Depot count attaining the minimum.
    pub l_star: usize,
    /// Vehicle count at `l_star`.
    pub k_term: u64,
}

/// Minimum-expenditure staircase.
///
/// For each `L` in `depot_set` (sorted, deduplicated), `I_min` is the least
/// `depot_term(H_l) + C_v·vehicle_term(H_l)` over `l ∈ depot_set ∩ [L, l_max]`.
/// `h` gives the multi-median value for a depot count. The scan over `l`
/// stops once the depot term alone exceeds the best total, since it grows
/// with `l`.
pub fn frontier(
    params: &PlanningParams,
    depot_set: &[usize],
    l_max: usize,
    rounding: VehicleRounding,
    h: impl Fn(usize) -> f64,
) -> Result<Vec<FrontierPoint>> {
    params.validate()?;
    let mut set: Vec<usize> = depot_set.iter().copied().filter(|&l| l >= 1 && l <= l_max).collect();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return Err(invalid_arg!("no admissible depot count in 1..={l_max}"));
    }
    let hs: Vec<f64> = set.iter().map(|&l| h(l)).collect();
    let mut out = Vec::with_capacity(set.len());
    for (i, &l) in set.iter().enumerate() {
        let mut best: Option<(f64, usize, u64)> = None;
        for (j, &m) in set.iter().enumerate().skip(i) {
            let depots = depot_term(params, hs[j]);
            if best.is_some_and(|(b, _, _)| depots > b) {
                break;
            }
            let k = vehicle_term(params, hs[j], rounding);
            let total = depots + params.cost_vehicle * k as f64;
            if best.map_or(true, |(b, _, _)| total < b) {
                best = Some((total, m, k));
            }
        }
        let (i_min, l_star, k_term) = best.expect("at least one candidate");
        out.push(FrontierPoint {
            depots: l,
            t_tread: params.speed.travel_time(hs[i]),
            i_min,
            l_star,
            k_term,
        });
    }
    Ok(out)
}

/// Perfect squares `1, 4, 9, …` up to `l_max`.
pub fn perfect_squares(l_max: usize) -> Vec<usize> {
    (1..).map(|k| k * k).take_while(|&l| l <= l_max).collect()
}

/// [`frontier`] over perfect-square depot counts with grid multi-median values.
pub fn grid_frontier(params: &PlanningParams, l_max: usize, rounding: VehicleRounding) -> Result<Vec<FrontierPoint>> {
    let area = ServiceArea::new(libm::sqrt(params.area_km2))?;
    frontier(params, &perfect_squares(l_max), l_max, rounding, |l| {
        debug_assert!(perfect_square_root(l).is_some());
        grid_multimedian(&area, l)
    })
}

/// Cheapest purchasable configuration on one tread: `L` whole depots and the
/// smallest integer fleet strictly above `2λH_L/(αν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub depots: usize,
    pub t_tread: TimeSpan,
    pub vehicles: u64,
    pub cost: f64,
}

pub fn integer_envelope(params: &PlanningParams, treads: &[FrontierPoint], h: impl Fn(usize) -> f64) -> Vec<EnvelopePoint> {
    treads
        .iter()
        .map(|p| {
            let k = vehicle_term(params, h(p.depots), VehicleRounding::Strict);
            EnvelopePoint {
                depots: p.depots,
                t_tread: p.t_tread,
                vehicles: k,
                cost: infra_cost(k as f64, p.depots as f64, params.cost_vehicle, params.cost_depot),
            }
        })
        .collect()
}

/// Boundary of the region no stable system can reach, for one depot count:
/// `ρ = 1` at `K = λ·(2H/ν)/α`, and the floor `T_min = H/ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpossibleRegion {
    pub depots: usize,
    pub k_boundary: f64,
    pub t_min: TimeSpan,
}

pub fn impossible_region(params: &PlanningParams, depots: usize, h_km: f64) -> ImpossibleRegion {
    let b_min = params.speed.travel_time(2.0 * h_km);
    ImpossibleRegion {
        depots,
        k_boundary: params.lambda.as_per_minute() * b_min.as_minutes() / params.alpha,
        t_min: params.speed.travel_time(h_km),
    }
}

/// Load factor and the necessary stability condition from estimated means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rho: f64,
    pub b_mean: TimeSpan,
    pub r_bar_prime: TimeSpan,
    pub s_bar: TimeSpan,
    pub satisfied: bool,
}

pub fn load_report(
    lambda: Rate,
    alpha: f64,
    vehicles: usize,
    b_mean: TimeSpan,
    r_bar_prime: TimeSpan,
    s_bar: TimeSpan,
) -> LoadReport {
    LoadReport {
        rho: load_factor(lambda, b_mean, alpha, vehicles as f64),
        b_mean,
        r_bar_prime,
        s_bar,
        satisfied: stability_necessary(r_bar_prime, s_bar, alpha, vehicles as f64, lambda),
    }
}
