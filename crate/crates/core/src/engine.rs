//! Discrete-time simulation loop.
//!
//! The system is observed every `delta` minutes. Within a step the order is
//! fixed: vehicles move and batteries update, landings fire in vehicle-id
//! order, at most one customer arrives, then selection instants are handled
//! according to the policy. Arrivals and coordination draw from two separate
//! ChaCha8 streams of the same seed, so every policy sees the same demand for
//! a given seed.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::fleet::{decompose_times, BatteryParams, Job, JobStatus, ServiceTimes, SystemConfig, VehicleMode, VehicleState};
use crate::geometry::{place_depots, DepotLayout, Point, ServiceArea};
use crate::policies::{
    battery_gate, fj_minus_assign, fj_plus_assign, nearest_depot, nj_minus_select, nj_plus_select, resolve_contention,
    Assignment, Candidate, Gate, JobOrder, PolicyId, Timing, WaitingSet,
};
use crate::stats::{self, DetectorConfig, SteadyState, Verdict, WarmUp, WelchConfig, WelchCurve};

const ARRIVAL_STREAM: u64 = 0;
const COORDINATION_STREAM: u64 = 1;
/// Seed for numeric depot placement; layouts do not depend on the run seed.
pub const LAYOUT_SEED: u64 = 0x5eed_1a70;

/// One Bernoulli trial with success probability `lambda * delta`.
pub fn gen_arrival<R: Rng + ?Sized>(rng: &mut R, lambda: f64, delta: f64) -> bool {
    let p = lambda * delta;
    p > 0.0 && rng.gen::<f64>() < p
}

/// Depot layout used for `config`: the centroid grid for perfect squares,
/// otherwise a numeric placement from a fixed seed.
pub fn depot_layout(config: &SystemConfig) -> Result<DepotLayout> {
    let area = config.area()?;
    let mut rng = ChaCha8Rng::seed_from_u64(LAYOUT_SEED);
    place_depots(&area, config.depots, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingSample {
    pub t: f64,
    pub waiting: usize,
    /// Assigned or in service.
    pub active: usize,
    pub delivered: usize,
    pub arrived: usize,
}

impl PendingSample {
    /// Jobs arrived but not yet delivered.
    pub fn pending(&self) -> usize {
        self.waiting + self.active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyViolation {
    pub t: f64,
    pub vehicle: usize,
}

/// Counters of selection activity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    /// Steps in which two or more vehicles selected under random coordination.
    pub contentions: u64,
    /// Central-unit rounds that issued at least one assignment.
    pub assortative_rounds: u64,
    pub assignments: u64,
    pub comparisons: u64,
    pub charge_trips: u64,
    pub min_battery_at_assignment: f64,
}

impl Default for EventCounts {
    fn default() -> Self {
        Self {
            contentions: 0,
            assortative_rounds: 0,
            assignments: 0,
            comparisons: 0,
            charge_trips: 0,
            min_battery_at_assignment: 1.0,
        }
    }
}

/// One replication's state machine.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SystemConfig,
    policy: PolicyId,
    area: ServiceArea,
    depots: Vec<Point>,
    battery: BatteryParams,
    step_km: f64,
    km_per_min: f64,
    steps: u64,
    vehicles: Vec<VehicleState>,
    jobs: Vec<Job>,
    waiting: WaitingSet,
    active: usize,
    delivered: usize,
    arrivals: ChaCha8Rng,
    coordination: ChaCha8Rng,
    counts: EventCounts,
    violations: Vec<EnergyViolation>,
    samples: Vec<PendingSample>,
    sample_every: u64,
    completions: Vec<usize>,
}

impl Simulation {
    pub fn new(config: &SystemConfig, policy: PolicyId, layout: &DepotLayout, seed: u64) -> Result<Self> {
        config.validate()?;
        if layout.len() != config.depots {
            return Err(invalid_arg!("layout has {} depots, config has L = {}", layout.len(), config.depots));
        }
        let depots = layout.positions.clone();
        let vehicles = (0..config.vehicles)
            .map(|k| VehicleState::parked(k, k % depots.len(), depots[k % depots.len()]))
            .collect();
        let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
        arrivals.set_stream(ARRIVAL_STREAM);
        let mut coordination = ChaCha8Rng::seed_from_u64(seed);
        coordination.set_stream(COORDINATION_STREAM);
        let km_per_min = config.speed().as_km_per_minute();
        Ok(Self {
            config: config.clone(),
            policy,
            area: config.area()?,
            depots,
            battery: config.battery(),
            step_km: km_per_min * config.delta,
            km_per_min,
            steps: 0,
            vehicles,
            jobs: Vec::new(),
            waiting: WaitingSet::new(),
            active: 0,
            delivered: 0,
            arrivals,
            coordination,
            counts: EventCounts::default(),
            violations: Vec::new(),
            samples: Vec::new(),
            sample_every: 100,
            completions: Vec::new(),
        })
    }

    /// Steps between pending-count samples (default 100).
    pub fn set_sample_every(&mut self, steps: u64) {
        self.sample_every = steps.max(1);
    }

    pub fn clock(&self) -> f64 {
        self.steps as f64 * self.config.delta
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn waiting(&self) -> &WaitingSet {
        &self.waiting
    }

    pub fn depots(&self) -> &[Point] {
        &self.depots
    }

    pub fn arrived(&self) -> usize {
        self.jobs.len()
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }

    /// Jobs assigned or in service.
    pub fn active(&self) -> usize {
        self.active
    }

    pub fn pending(&self) -> usize {
        self.waiting.len() + self.active
    }

    pub fn counts(&self) -> &EventCounts {
        &self.counts
    }

    pub fn violations(&self) -> &[EnergyViolation] {
        &self.violations
    }

    pub fn samples(&self) -> &[PendingSample] {
        &self.samples
    }

    /// Advances the clock by one observation step.
    pub fn step(&mut self) {
        self.steps += 1;
        let now = self.clock();

        let mut landed: Vec<usize> = Vec::new();
        for v in &mut self.vehicles {
            if v.is_airborne() {
                let target = v.target.expect("airborne vehicles have a target");
                let (pos, moved, arrived) = v.position.advance(target, self.step_km);
                v.position = pos;
                if v.update_battery(moved / self.km_per_min, &self.battery) {
                    self.violations.push(EnergyViolation { t: now, vehicle: v.id });
                }
                if arrived {
                    landed.push(v.id);
                }
            } else {
                v.update_battery(self.config.delta, &self.battery);
            }
        }

        self.completions.clear();
        for id in landed {
            self.land(id, now);
        }

        let arrival = gen_arrival(&mut self.arrivals, self.config.lambda, self.config.delta);
        if arrival {
            let position = self.area.sample(&mut self.arrivals);
            let n = self.jobs.len();
            self.jobs.push(Job::new(n, position, now));
            self.waiting.push(n, position);
        }

        self.select(now, arrival);

        if self.steps % self.sample_every == 0 {
            self.samples.push(PendingSample {
                t: now,
                waiting: self.waiting.len(),
                active: self.active,
                delivered: self.delivered,
                arrived: self.jobs.len(),
            });
        }
    }

    fn land(&mut self, id: usize, now: f64) {
        let v = &mut self.vehicles[id];
        v.target = None;
        match v.mode {
            VehicleMode::ToDepot => {
                if let Some(n) = v.assigned_job {
                    // Loaded at the via-depot; head for the customer.
                    let job = &mut self.jobs[n];
                    job.t_depot_ready = Some(now);
                    job.status = JobStatus::InService;
                    v.mode = VehicleMode::ToCustomer;
                    v.target = Some(job.position);
                } else if v.charge_trip || v.battery < self.battery.low {
                    v.charge_trip = false;
                    v.mode = VehicleMode::AtDepotCharging;
                } else if v.battery >= 1.0 {
                    v.mode = VehicleMode::IdleAtDepotFull;
                } else {
                    v.mode = VehicleMode::AtDepotReady;
                }
            }
            VehicleMode::ToCustomer => {
                let n = v.assigned_job.take().expect("to-customer implies an assigned job");
                let job = &mut self.jobs[n];
                job.t_delivered = Some(now);
                job.status = JobStatus::Delivered;
                self.active -= 1;
                self.delivered += 1;
                v.chosen_depot = None;
                match self.policy.timing {
                    Timing::Plus => self.completions.push(id),
                    Timing::Minus => {
                        let depot = match v.return_depot.take() {
                            Some(d) => d,
                            None => {
                                // Rush to depots: the depot choice is part of the selection cost.
                                let c = nearest_depot(v.position, &self.depots);
                                self.counts.comparisons += c.comparisons as u64;
                                c.value
                            }
                        };
                        fly_to_depot(v, depot, &self.depots, false);
                    }
                }
            }
            _ => unreachable!("only airborne vehicles land"),
        }
    }

    fn eligible_at_depot(&self) -> Vec<usize> {
        self.vehicles
            .iter()
            .filter(|v| {
                matches!(v.mode, VehicleMode::AtDepotReady | VehicleMode::IdleAtDepotFull)
                    && battery_gate(v, &self.battery) == Gate::Eligible
            })
            .map(|v| v.id)
            .collect()
    }

    fn select(&mut self, now: f64, arrival: bool) {
        // Battery gate for vehicles that just completed a service.
        let mut completed = Vec::with_capacity(self.completions.len());
        for &id in &self.completions {
            let v = &mut self.vehicles[id];
            if battery_gate(v, &self.battery) == Gate::MustCharge {
                let depot = nearest_depot(v.position, &self.depots).value;
                fly_to_depot(v, depot, &self.depots, true);
                self.counts.charge_trips += 1;
            } else {
                completed.push(id);
            }
        }

        if !self.waiting.is_empty() {
            match self.policy.order {
                JobOrder::NearestJob => self.select_nearest_job(now, arrival, &completed),
                JobOrder::FirstJob => self.select_first_job(now, &completed),
            }
        }

        // Completions left without a job fly to the nearest depot.
        for id in completed {
            let v = &mut self.vehicles[id];
            if v.assigned_job.is_none() && v.target.is_none() {
                let depot = nearest_depot(v.position, &self.depots).value;
                fly_to_depot(v, depot, &self.depots, false);
            }
        }
    }

    fn select_nearest_job(&mut self, now: f64, arrival: bool, completed: &[usize]) {
        let mut selectors: Vec<usize> = completed.to_vec();
        selectors.extend(self.eligible_at_depot());
        if arrival && self.policy.timing == Timing::Plus {
            // Idle vehicles on their way to a depot react to a new arrival.
            for v in &mut self.vehicles {
                if v.mode == VehicleMode::ToDepot && v.assigned_job.is_none() && !v.charge_trip {
                    if v.battery < self.battery.low {
                        v.charge_trip = true;
                    } else {
                        selectors.push(v.id);
                    }
                }
            }
        }
        selectors.sort_unstable();
        if selectors.len() > 1 {
            self.counts.contentions += 1;
        }
        for id in resolve_contention(&selectors, &mut self.coordination) {
            if self.waiting.is_empty() {
                break;
            }
            let choice = match self.policy.timing {
                Timing::Plus => nj_plus_select(Candidate::from(&self.vehicles[id]), &self.waiting, &self.depots),
                Timing::Minus => nj_minus_select(&self.vehicles[id], &self.waiting).expect("selector stands at a depot"),
            };
            self.counts.comparisons += choice.comparisons as u64;
            if let Some(a) = choice.value {
                self.assign(a, now);
            }
        }
    }

    fn select_first_job(&mut self, now: f64, completed: &[usize]) {
        let mut ready: Vec<Candidate> = completed
            .iter()
            .map(|&id| {
                let v = &self.vehicles[id];
                Candidate {
                    id,
                    position: v.position,
                    depot: None,
                }
            })
            .collect();
        ready.extend(self.eligible_at_depot().into_iter().map(|id| Candidate::from(&self.vehicles[id])));
        if ready.is_empty() {
            return;
        }
        let out = match self.policy.timing {
            Timing::Plus => fj_plus_assign(&ready, &self.waiting, &self.depots),
            Timing::Minus => fj_minus_assign(&ready, &self.waiting, &self.depots),
        };
        if !out.is_empty() {
            self.counts.assortative_rounds += 1;
        }
        for c in out {
            self.counts.comparisons += c.comparisons as u64;
            self.assign(c.value, now);
        }
    }

    fn assign(&mut self, a: Assignment, now: f64) {
        let removed = self.waiting.remove(a.job);
        debug_assert!(removed.is_some(), "job {} assigned twice", a.job);
        let v = &mut self.vehicles[a.vehicle];
        self.counts.assignments += 1;
        self.counts.min_battery_at_assignment = self.counts.min_battery_at_assignment.min(v.battery);
        let job = &mut self.jobs[a.job];
        job.t_assigned = Some(now);
        job.vehicle_id = Some(v.id);
        job.status = JobStatus::Assigned;
        self.active += 1;

        v.assigned_job = Some(a.job);
        v.return_depot = a.return_depot;
        v.charge_trip = false;
        let at_via = !v.is_airborne() && v.target.is_none() && v.chosen_depot == Some(a.via_depot);
        if at_via {
            job.t_depot_ready = Some(now);
            job.status = JobStatus::InService;
            v.mode = VehicleMode::ToCustomer;
            v.target = Some(job.position);
        } else {
            v.mode = VehicleMode::ToDepot;
            v.chosen_depot = Some(a.via_depot);
            v.target = Some(self.depots[a.via_depot]);
        }
    }

    /// Recounts job states and checks `arrived = waiting + active + delivered`.
    pub fn check_conservation(&self) -> bool {
        let mut counts = [0usize; 3];
        for j in &self.jobs {
            match j.status {
                JobStatus::Waiting => counts[0] += 1,
                JobStatus::Assigned | JobStatus::InService => counts[1] += 1,
                JobStatus::Delivered => counts[2] += 1,
            }
        }
        counts == [self.waiting.len(), self.active, self.delivered]
            && self.jobs.len() == self.waiting.len() + self.active + self.delivered
    }

    pub fn into_trace(self, seed: u64, stop: StopReason, verdict: Verdict) -> Trace {
        Trace {
            seed,
            policy: self.policy,
            config: self.config,
            steps: self.steps,
            jobs: self.jobs,
            samples: self.samples,
            violations: self.violations,
            counts: self.counts,
            stop,
            verdict,
        }
    }

    fn run_until(&mut self, limits: &RunLimits, stop_when: impl Fn(&Self) -> bool) -> StopReason {
        loop {
            if self.pending() >= limits.pending_cap {
                return StopReason::PendingCap;
            }
            if stop_when(self) {
                return if self.delivered >= limits.n_customers {
                    StopReason::Delivered
                } else {
                    StopReason::ArrivalCap
                };
            }
            self.step();
        }
    }
}

fn fly_to_depot(v: &mut VehicleState, depot: usize, depots: &[Point], charge_trip: bool) {
    v.mode = VehicleMode::ToDepot;
    v.target = Some(depots[depot]);
    v.chosen_depot = Some(depot);
    v.assigned_job = None;
    v.charge_trip = charge_trip;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    /// Deliveries in the first stage of a replication.
    pub n_customers: usize,
    /// Arrivals after which an undecided run stops.
    pub arrival_cap: usize,
    /// Pending jobs at which a run is declared unstable outright.
    pub pending_cap: usize,
    pub sample_every: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            n_customers: 4000,
            arrival_cap: 10_000,
            pending_cap: 2000,
            sample_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Delivered,
    ArrivalCap,
    PendingCap,
}

/// Everything recorded by one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub policy: PolicyId,
    pub config: SystemConfig,
    pub steps: u64,
    pub jobs: Vec<Job>,
    pub samples: Vec<PendingSample>,
    pub violations: Vec<EnergyViolation>,
    pub counts: EventCounts,
    pub stop: StopReason,
    pub verdict: Verdict,
}

impl Trace {
    /// Delivery times of the longest prefix of jobs (in arrival order) that
    /// are all delivered.
    pub fn delivery_series(&self) -> Vec<f64> {
        self.jobs.iter().map_while(|j| j.delivery_time()).collect()
    }

    /// Service-time decomposition of the same prefix.
    pub fn service_times(&self) -> Vec<ServiceTimes> {
        self.jobs.iter().map_while(|j| decompose_times(j).ok()).collect()
    }

    pub fn delivered(&self) -> usize {
        self.jobs.iter().filter(|j| j.is_delivered()).count()
    }

    fn verdict_from_samples(&self, detector: &DetectorConfig) -> Verdict {
        let (t, n): (Vec<f64>, Vec<f64>) = self.samples.iter().map(|s| (s.t, s.pending() as f64)).unzip();
        stats::detect_instability(&t, &n, &self.delivery_series(), detector)
    }
}

/// Runs one replication: `n_customers` deliveries, then the drift test; an
/// undecided verdict extends the run to `arrival_cap` arrivals and re-tests.
/// Reaching `pending_cap` pending jobs counts as unstable.
pub fn run_replication(
    config: &SystemConfig,
    policy: PolicyId,
    layout: &DepotLayout,
    seed: u64,
    limits: &RunLimits,
    detector: &DetectorConfig,
) -> Result<Trace> {
    if limits.n_customers < 1 {
        return Err(invalid_arg!("n_customers must be at least 1"));
    }
    let mut sim = Simulation::new(config, policy, layout, seed)?;
    sim.set_sample_every(limits.sample_every);
    let first = sim.run_until(limits, |s| {
        s.delivered >= limits.n_customers || s.arrived() >= limits.arrival_cap
    });
    let mut trace_stop = first;
    let verdict = match first {
        StopReason::PendingCap => Verdict::Unstable,
        _ => {
            let probe = sim.clone().into_trace(seed, first, Verdict::Undecided);
            match probe.verdict_from_samples(detector) {
                Verdict::Undecided if sim.arrived() < limits.arrival_cap => {
                    trace_stop = sim.run_until(limits, |s| s.arrived() >= limits.arrival_cap);
                    if trace_stop == StopReason::PendingCap {
                        Verdict::Unstable
                    } else {
                        let probe = sim.clone().into_trace(seed, trace_stop, Verdict::Undecided);
                        probe.verdict_from_samples(detector)
                    }
                }
                v => v,
            }
        }
    };
    Ok(sim.into_trace(seed, trace_stop, verdict))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub replications: usize,
    pub master_seed: u64,
    pub limits: RunLimits,
    pub detector: DetectorConfig,
    pub welch: WelchConfig,
    pub confidence: f64,
    /// Fixed warm-up length instead of Welch's estimate.
    pub warmup_override: Option<usize>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            replications: 10,
            master_seed: 1,
            limits: RunLimits::default(),
            detector: DetectorConfig::default(),
            welch: WelchConfig::default(),
            confidence: 0.90,
            warmup_override: None,
        }
    }
}

impl ExperimentOptions {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replications as u64).map(move |r| self.master_seed.wrapping_add(r))
    }
}

/// Mean service components over the delivered jobs after the warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMeans {
    pub w: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    /// Realised flight time from the customer back to its nearest depot.
    pub r_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub policy: PolicyId,
    pub config: SystemConfig,
    pub seeds: Vec<u64>,
    pub verdicts: Vec<Verdict>,
    /// No replication was judged unstable.
    pub stable: bool,
    pub warmup: Option<WarmUp>,
    pub estimate: Option<SteadyState>,
    pub welch: Option<WelchCurve>,
    pub means: Option<ServiceMeans>,
    pub energy_violations: usize,
}

impl ExperimentResult {
    pub fn t_mean(&self) -> Option<f64> {
        self.estimate.as_ref().map(|e| e.mean)
    }

    pub fn n_wu(&self) -> Option<usize> {
        self.warmup.map(|w| w.n_wu)
    }
}

/// Runs `opts.replications` replications one after the other and summarises
/// them. The `fleetsim` crate has a parallel equivalent.
pub fn run_experiment(config: &SystemConfig, policy: PolicyId, opts: &ExperimentOptions) -> Result<ExperimentResult> {
    if opts.replications < 2 {
        return Err(invalid_arg!("an experiment needs at least 2 replications"));
    }
    let layout = depot_layout(config)?;
    let traces = opts
        .seeds()
        .map(|seed| run_replication(config, policy, &layout, seed, &opts.limits, &opts.detector))
        .collect::<Result<Vec<_>>>()?;
    summarize(config, policy, &layout, &traces, opts)
}

/// Combines replication traces (ordered by seed) into an experiment result.
///
/// Replications judged unstable are excluded from the estimate; the
/// experiment is stable only if none was unstable. The warm-up comes from
/// Welch's method on the shortest delivered prefix, with the window shrunk to
/// fit; if the curve never flattens, half the prefix is deleted.
pub fn summarize(
    config: &SystemConfig,
    policy: PolicyId,
    layout: &DepotLayout,
    traces: &[Trace],
    opts: &ExperimentOptions,
) -> Result<ExperimentResult> {
    let verdicts: Vec<Verdict> = traces.iter().map(|t| t.verdict).collect();
    let stable = !verdicts.contains(&Verdict::Unstable);
    let usable: Vec<&Trace> = traces.iter().filter(|t| t.verdict != Verdict::Unstable).collect();
    let series: Vec<Vec<f64>> = usable.iter().map(|t| t.delivery_series()).collect();
    let shortest = series.iter().map(|s| s.len()).min().unwrap_or(0);

    let mut result = ExperimentResult {
        policy,
        config: config.clone(),
        seeds: traces.iter().map(|t| t.seed).collect(),
        verdicts,
        stable,
        warmup: None,
        estimate: None,
        welch: None,
        means: None,
        energy_violations: traces.iter().map(|t| t.violations.len()).sum(),
    };
    if series.len() < 2 || shortest < 4 {
        return Ok(result);
    }

    let refs: Vec<&[f64]> = series.iter().map(|s| &s[..shortest]).collect();
    let half_window = opts.welch.half_window.min((shortest - 2) / 2);
    let curve = stats::welch_curve(&refs, half_window)?;
    let welch = stats::warmup_from_curve(&curve, opts.welch.band, shortest);
    let warmup = match opts.warmup_override {
        Some(n) => WarmUp {
            n_wu: n.min(shortest - 1),
            converged: welch.converged,
        },
        None if welch.converged => welch,
        None => WarmUp {
            n_wu: shortest / 2,
            converged: false,
        },
    };
    result.estimate = Some(stats::replication_deletion(&refs, warmup.n_wu, opts.confidence)?);
    result.warmup = Some(warmup);
    result.welch = Some(curve);
    result.means = Some(service_means(&usable, layout, config, warmup.n_wu));
    Ok(result)
}

fn service_means(traces: &[&Trace], layout: &DepotLayout, config: &SystemConfig, skip: usize) -> ServiceMeans {
    let km_per_min = config.speed().as_km_per_minute();
    let mut acc = [0.0f64; 5];
    let mut count = 0usize;
    for trace in traces {
        for (job, st) in trace.jobs.iter().zip(trace.service_times()).skip(skip) {
            let back = job.position.dist(layout.positions[layout.nearest(job.position)]) / km_per_min;
            for (a, x) in acc.iter_mut().zip([st.w, st.r, st.s, st.t, back]) {
                *a += x;
            }
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    ServiceMeans {
        w: acc[0] / c,
        r: acc[1] / c,
        s: acc[2] / c,
        t: acc[3] / c,
        r_prime: acc[4] / c,
    }
}
