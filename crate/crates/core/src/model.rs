//! Orders, plans and states of the sequential decision process, together with
//! the delay cost and the state transition.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use crate::error::{ConfigError, ModelError};
use crate::geo::{TravelTimes, KITCHEN};

/// Tolerance for every time comparison, in minutes. Equality at a bound is
/// feasible.
pub const EPS: f64 = 1e-9;

/// Slack granted by the planners. Kept well inside `EPS` so that roundoff in
/// the timing arithmetic cannot carry an accepted plan past the validator.
pub const PLAN_TOL: f64 = EPS / 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodType {
    pub name: String,
    /// Maximum ready-to-door time `delta_f` in minutes.
    pub freshness: f64,
    /// Number of cooks preparing this food type.
    pub cooks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub food_types: Vec<FoodType>,
    pub fleet_size: usize,
    /// Maximum number of orders per trip.
    pub capacity: usize,
    /// Delivery promise in minutes after placement.
    pub tau: f64,
    /// End of the order capture phase (minute of day).
    pub capture_horizon: f64,
    /// End of operations (minute of day); every trip departs by then.
    pub horizon: f64,
    /// Whether per-stop service time delays later stops and the handover.
    #[serde(default = "default_true")]
    pub count_service_time: bool,
}

fn default_true() -> bool {
    true
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.food_types.is_empty() {
            return bad("at least one food type is required");
        }
        if self.food_types.iter().any(|f| !(f.freshness > 0.0) || f.cooks == 0) {
            return bad("every food type needs freshness > 0 and at least one cook");
        }
        if self.fleet_size == 0 {
            return bad("fleet size must be at least 1");
        }
        if self.capacity == 0 {
            return bad("capacity must be at least 1");
        }
        if !(self.tau > 0.0) {
            return bad("delivery promise must be positive");
        }
        if !(self.horizon > self.capture_horizon) || !(self.capture_horizon >= 0.0) {
            return bad("operation horizon must exceed the capture horizon");
        }
        Ok(())
    }

    pub fn num_cooks(&self) -> usize {
        self.food_types.iter().map(|f| f.cooks).sum()
    }

    /// Cooks are numbered consecutively by food type.
    pub fn cooks_of(&self, food_type: usize) -> Range<usize> {
        let start: usize = self.food_types[..food_type].iter().map(|f| f.cooks).sum();
        start..start + self.food_types[food_type].cooks
    }

    pub fn cook_food_type(&self, cook: usize) -> usize {
        let mut acc = 0;
        for (f, ft) in self.food_types.iter().enumerate() {
            acc += ft.cooks;
            if cook < acc {
                return f;
            }
        }
        panic!("cook {cook} out of range")
    }

    pub fn freshness(&self, food_type: usize) -> f64 {
        self.food_types[food_type].freshness
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: usize,
    pub food_type: usize,
    pub t_order: f64,
    pub t_prep: f64,
    /// Location id registered with the travel provider.
    pub location: usize,
    pub service_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub orders: Vec<usize>,
    pub departure: f64,
}

/// Cook schedules and vehicle schedules of all open orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Per cook, the orders it prepares in sequence.
    pub cook_sequences: Vec<Vec<usize>>,
    pub start_times: BTreeMap<usize, f64>,
    /// Per vehicle, its planned trips in departure order.
    pub vehicle_trips: Vec<Vec<Trip>>,
    /// Per vehicle, the return time from trips that already departed.
    pub vehicle_return: Vec<f64>,
}

/// A decision is the updated plan covering every open order.
pub type Decision = Plan;

impl Plan {
    pub fn empty(cfg: &ProblemConfig) -> Self {
        Plan {
            cook_sequences: vec![Vec::new(); cfg.num_cooks()],
            start_times: BTreeMap::new(),
            vehicle_trips: vec![Vec::new(); cfg.fleet_size],
            vehicle_return: vec![0.0; cfg.fleet_size],
        }
    }

    pub fn trips(&self) -> impl Iterator<Item = (usize, &Trip)> {
        self.vehicle_trips
            .iter()
            .enumerate()
            .flat_map(|(v, ts)| ts.iter().map(move |t| (v, t)))
    }

    pub fn num_trips(&self) -> usize {
        self.vehicle_trips.iter().map(Vec::len).sum()
    }

    pub fn cook_of(&self, order: usize) -> Option<usize> {
        self.cook_sequences.iter().position(|s| s.contains(&order))
    }
}

/// Shared read-only context: configuration, travel times and all orders of
/// the day indexed by id.
#[derive(Debug, Clone, Copy)]
pub struct Ctx<'a> {
    pub cfg: &'a ProblemConfig,
    pub travel: &'a TravelTimes,
    pub orders: &'a [Order],
}

impl<'a> Ctx<'a> {
    /// Checks that order ids are dense (`orders[k].id == k`) and that every
    /// location is known to the travel provider.
    pub fn new(
        cfg: &'a ProblemConfig,
        travel: &'a TravelTimes,
        orders: &'a [Order],
    ) -> Result<Self, ModelError> {
        for (k, o) in orders.iter().enumerate() {
            if o.id != k {
                return Err(ModelError::InvalidPlan(format!(
                    "order at index {k} has id {}",
                    o.id
                )));
            }
            if o.food_type >= cfg.food_types.len() {
                return Err(ModelError::InvalidPlan(format!(
                    "order {k} has unknown food type {}",
                    o.food_type
                )));
            }
            if !(o.t_prep > 0.0) || !(o.service_time >= 0.0) {
                return Err(ModelError::InvalidPlan(format!(
                    "order {k} needs positive preparation and nonnegative service time"
                )));
            }
            travel.location(o.location)?;
        }
        Ok(Ctx {
            cfg,
            travel,
            orders,
        })
    }

    #[inline]
    pub fn order(&self, id: usize) -> &Order {
        &self.orders[id]
    }

    fn checked(&self, id: usize) -> Result<&Order, ModelError> {
        self.orders.get(id).ok_or(ModelError::UnknownOrder(id))
    }

    #[inline]
    pub fn service(&self, id: usize) -> f64 {
        if self.cfg.count_service_time {
            self.orders[id].service_time
        } else {
            0.0
        }
    }

    pub fn freshness_of(&self, id: usize) -> f64 {
        self.cfg.freshness(self.orders[id].food_type)
    }

    /// Direct drive from the kitchen to the order's customer.
    pub fn direct_time(&self, id: usize) -> f64 {
        self.travel.t(KITCHEN, self.orders[id].location)
    }

    /// Delay of an order handed over `handover` minutes after departure.
    #[inline]
    pub fn order_delay(&self, id: usize, departure: f64, handover: f64) -> f64 {
        let o = &self.orders[id];
        (departure + handover - o.t_order - self.cfg.tau).max(0.0)
    }
}

/// Offsets of each stop relative to the trip's departure.
#[derive(Debug, Clone, PartialEq)]
pub struct TripTiming {
    /// Arrival at stop j: driving plus service at the stops before it.
    pub fresh: Vec<f64>,
    /// Handover at stop j: arrival plus its own service time.
    pub handover: Vec<f64>,
    /// Departure to return at the kitchen.
    pub duration: f64,
}

pub fn trip_timing(ctx: &Ctx, orders: &[usize]) -> TripTiming {
    let mut fresh = Vec::with_capacity(orders.len());
    let mut handover = Vec::with_capacity(orders.len());
    let mut at = KITCHEN;
    let mut clock = 0.0;
    for &i in orders {
        let loc = ctx.order(i).location;
        clock += ctx.travel.t(at, loc);
        fresh.push(clock);
        clock += ctx.service(i);
        handover.push(clock);
        at = loc;
    }
    let duration = clock + ctx.travel.t(at, KITCHEN);
    TripTiming {
        fresh,
        handover,
        duration,
    }
}

pub fn trip_duration(ctx: &Ctx, orders: &[usize]) -> f64 {
    trip_timing(ctx, orders).duration
}

/// Delay of the orders of one trip departing at `departure`.
pub fn trip_delay(ctx: &Ctx, orders: &[usize], departure: f64) -> f64 {
    let timing = trip_timing(ctx, orders);
    orders
        .iter()
        .zip(&timing.handover)
        .map(|(&i, &h)| ctx.order_delay(i, departure, h))
        .sum()
}

/// Total planned delay over all trips of the plan.
pub fn plan_delay(ctx: &Ctx, plan: &Plan) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for (_, trip) in plan.trips() {
        for &i in &trip.orders {
            ctx.checked(i)?;
        }
        total += trip_delay(ctx, &trip.orders, trip.departure);
    }
    Ok(total)
}

/// Change in planned delay caused by moving from `old` to `new`; may be
/// negative.
pub fn marginal_cost(ctx: &Ctx, old: &Plan, new: &Plan) -> Result<f64, ModelError> {
    Ok(plan_delay(ctx, new)? - plan_delay(ctx, old)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t_now: f64,
    /// Open orders already covered by the plan, ascending.
    pub open_orders: Vec<usize>,
    /// The order placed at this decision point; `None` at the terminal one.
    pub new_order: Option<usize>,
    pub plan: Plan,
}

impl State {
    pub fn new(cfg: &ProblemConfig, t_now: f64, new_order: Option<usize>) -> Self {
        State {
            t_now,
            open_orders: Vec::new(),
            new_order,
            plan: Plan::empty(cfg),
        }
    }

    /// Orders a decision at this point must cover.
    pub fn decision_orders(&self) -> Vec<usize> {
        let mut all = self.open_orders.clone();
        if let Some(n) = self.new_order {
            all.push(n);
        }
        all.sort_unstable();
        all
    }

    /// Whether preparation of the order began strictly before now.
    pub fn is_started(&self, order: usize) -> bool {
        self.plan
            .start_times
            .get(&order)
            .is_some_and(|&s| s < self.t_now)
    }

    /// Started orders per cook, in start order.
    pub fn started_per_cook(&self) -> Vec<Vec<usize>> {
        self.plan
            .cook_sequences
            .iter()
            .map(|seq| {
                let mut s: Vec<usize> =
                    seq.iter().copied().filter(|&i| self.is_started(i)).collect();
                s.sort_by(|a, b| {
                    self.plan.start_times[a]
                        .total_cmp(&self.plan.start_times[b])
                        .then(a.cmp(b))
                });
                s
            })
            .collect()
    }

    /// Earliest time each cook can begin a new order.
    pub fn cook_eligibility(&self, ctx: &Ctx) -> Vec<f64> {
        self.plan
            .cook_sequences
            .iter()
            .map(|seq| {
                seq.iter()
                    .filter(|&&i| self.is_started(i))
                    .map(|&i| self.plan.start_times[&i] + ctx.order(i).t_prep)
                    .fold(self.t_now, f64::max)
            })
            .collect()
    }

    /// Earliest time each vehicle can depart on a new trip.
    pub fn vehicle_eligibility(&self) -> Vec<f64> {
        self.plan
            .vehicle_return
            .iter()
            .map(|&r| r.max(self.t_now))
            .collect()
    }
}

/// Checks that `plan` is a feasible decision in `state`.
pub fn validate_decision(ctx: &Ctx, state: &State, plan: &Plan) -> Result<(), ModelError> {
    let fail = |m: String| Err(ModelError::InvalidPlan(m));
    let cfg = ctx.cfg;
    let required: BTreeSet<usize> = state.decision_orders().into_iter().collect();
    for &i in &required {
        ctx.checked(i)?;
    }
    if plan.cook_sequences.len() != cfg.num_cooks() {
        return fail("wrong number of cooks".into());
    }
    if plan.vehicle_trips.len() != cfg.fleet_size || plan.vehicle_return.len() != cfg.fleet_size
    {
        return fail("wrong number of vehicles".into());
    }
    if plan.vehicle_return != state.plan.vehicle_return {
        return fail("vehicle return times changed by a decision".into());
    }

    // Cooks.
    let mut cooked = BTreeSet::new();
    for (c, seq) in plan.cook_sequences.iter().enumerate() {
        let ft = cfg.cook_food_type(c);
        let mut free = state.t_now;
        for &i in seq {
            let o = ctx.checked(i)?;
            if !cooked.insert(i) {
                return fail(format!("order {i} is prepared twice"));
            }
            if o.food_type != ft {
                return fail(format!("order {i} assigned to cook {c} of another food type"));
            }
            let Some(&s) = plan.start_times.get(&i) else {
                return fail(format!("order {i} has no start time"));
            };
            if state.is_started(i) {
                if state.plan.start_times[&i] != s || state.plan.cook_of(i) != Some(c) {
                    return fail(format!("started order {i} was moved"));
                }
            } else if s < state.t_now - EPS {
                return fail(format!("order {i} starts before now"));
            }
            if !state.is_started(i) && s < free - EPS {
                return fail(format!("order {i} overlaps the previous order of cook {c}"));
            }
            free = free.max(s + o.t_prep);
        }
    }
    if cooked != required {
        return fail("cook sequences do not cover exactly the open orders".into());
    }
    if plan.start_times.len() != required.len() {
        return fail("start times for orders outside the plan".into());
    }

    // Vehicles.
    let mut delivered = BTreeSet::new();
    for (v, trips) in plan.vehicle_trips.iter().enumerate() {
        let mut free = state.t_now.max(plan.vehicle_return[v]);
        for trip in trips {
            let d = trip.departure;
            if trip.orders.is_empty() || trip.orders.len() > cfg.capacity {
                return fail(format!("trip of vehicle {v} has {} orders", trip.orders.len()));
            }
            if d < free - EPS {
                return fail(format!("vehicle {v} departs at {d} before it is free at {free}"));
            }
            if d > cfg.horizon + EPS {
                return fail(format!("vehicle {v} departs at {d} after the horizon"));
            }
            let timing = trip_timing(ctx, &trip.orders);
            for (j, &i) in trip.orders.iter().enumerate() {
                if !delivered.insert(i) {
                    return fail(format!("order {i} is delivered twice"));
                }
                let ready = plan.start_times.get(&i).copied().unwrap_or(f64::INFINITY)
                    + ctx.checked(i)?.t_prep;
                if d < ready - EPS {
                    return fail(format!("order {i} departs before it is ready"));
                }
                if d + timing.fresh[j] - ready > ctx.freshness_of(i) + EPS {
                    return fail(format!("order {i} violates freshness"));
                }
            }
            free = d + timing.duration;
        }
    }
    if delivered != required {
        return fail("trips do not cover exactly the open orders".into());
    }
    Ok(())
}

/// A trip that left the kitchen during a transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartedTrip {
    pub vehicle: usize,
    pub departure: f64,
    pub orders: Vec<usize>,
    /// Preparation start of each order.
    pub starts: Vec<f64>,
    /// Cook of each order.
    pub cooks: Vec<usize>,
    pub fresh: Vec<f64>,
    pub handover: Vec<f64>,
    pub duration: f64,
}

impl DepartedTrip {
    pub fn delays(&self, ctx: &Ctx) -> Vec<f64> {
        self.orders
            .iter()
            .zip(&self.handover)
            .map(|(&i, &h)| ctx.order_delay(i, self.departure, h))
            .collect()
    }
}

/// Advances from the post-decision state `(state, decision)` to the next
/// decision point at `t_next`. Trips departing before `t_next` leave the
/// plan; an infinite `t_next` executes the whole plan.
pub fn transition(
    ctx: &Ctx,
    state: &State,
    decision: &Plan,
    t_next: f64,
    next_order: Option<usize>,
) -> (State, Vec<DepartedTrip>) {
    let mut plan = decision.clone();
    let mut departed = Vec::new();
    let mut gone = BTreeSet::new();
    for v in 0..plan.vehicle_trips.len() {
        let trips = std::mem::take(&mut plan.vehicle_trips[v]);
        let mut ret = plan.vehicle_return[v];
        for trip in trips {
            if trip.departure < t_next {
                let timing = trip_timing(ctx, &trip.orders);
                ret = ret.max(trip.departure + timing.duration);
                departed.push(DepartedTrip {
                    vehicle: v,
                    departure: trip.departure,
                    starts: trip.orders.iter().map(|i| decision.start_times[i]).collect(),
                    cooks: trip
                        .orders
                        .iter()
                        .map(|&i| decision.cook_of(i).expect("order has a cook"))
                        .collect(),
                    orders: trip.orders.clone(),
                    fresh: timing.fresh,
                    handover: timing.handover,
                    duration: timing.duration,
                });
                gone.extend(trip.orders.iter().copied());
            } else {
                plan.vehicle_trips[v].push(trip);
            }
        }
        plan.vehicle_return[v] = if t_next.is_finite() { ret.max(t_next) } else { ret };
    }
    for seq in &mut plan.cook_sequences {
        seq.retain(|i| !gone.contains(i));
    }
    plan.start_times.retain(|i, _| !gone.contains(i));
    let mut open: Vec<usize> = state
        .decision_orders()
        .into_iter()
        .filter(|i| !gone.contains(i))
        .collect();
    open.sort_unstable();
    departed.sort_by(|a, b| a.departure.total_cmp(&b.departure).then(a.vehicle.cmp(&b.vehicle)));
    let next = State {
        t_now: if t_next.is_finite() { t_next } else { state.t_now },
        open_orders: open,
        new_order: next_order,
        plan,
    };
    (next, departed)
}
